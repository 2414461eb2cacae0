//! Executes the tasks of a scenario and writes their outputs.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use plasmodicke_core::greens::ModeSelection;
use plasmodicke_core::lindblad::{
    build_operators, extended_dicke_rates, ideal_cascade, ideal_rate, simulate, DickeBasis, DickeLadderRates, EvolveOptions,
    Simulation,
};
use plasmodicke_core::modes::{extract_modes, write_mode_report, LSPModeSet};
use plasmodicke_core::rates::{
    brightest_aligned, brightest_fixed_orientation, brightness_report, classical_eigenstates, dynamics_rates,
    gamma_delta_matrices_modes, gamma_matrix_green, route_discrepancy, write_brightness_csv, write_matrix_csv, RateMatrices,
};

use crate::config::{Scenario, Task};
use crate::error::{CliError, CliResult};
use crate::output::{Manifest, OutputDir};
use crate::plot::{emit_plot_data, PlotStyle};
use crate::sweep::{sweep, write_sweep_csv};

pub type Summary = BTreeMap<String, f64>;

const SPLIT_TOLERANCE: f64 = 1e-10;
const LEAK_TOLERANCE: f64 = 1e-9;

/// Lazily computed intermediate results shared between tasks.
pub(crate) struct Context<'a> {
    pub scenario: &'a Scenario,
    modes: Option<LSPModeSet>,
    green: Option<RateMatrices>,
}

impl<'a> Context<'a> {
    pub fn new(scenario: &'a Scenario) -> Self {
        Self { scenario, modes: None, green: None }
    }

    fn core<T>(&self, r: plasmodicke_core::Result<T>) -> CliResult<T> {
        r.map_err(|e| CliError::from_core(&self.scenario.name, e))
    }

    pub fn modes(&mut self) -> CliResult<&LSPModeSet> {
        if self.modes.is_none() {
            self.modes = Some(self.core(extract_modes(&self.scenario.config))?);
        }
        Ok(self.modes.as_ref().expect("modes computed"))
    }

    pub fn green(&mut self) -> CliResult<&RateMatrices> {
        if self.green.is_none() {
            let g = self.core(gamma_matrix_green(&self.scenario.config))?;
            let v = g.violations();
            if !v.is_empty() {
                return Err(CliError::Invariant(format!("{}: {}", self.scenario.name, v.join("; "))));
            }
            self.green = Some(g);
        }
        Ok(self.green.as_ref().expect("rates computed"))
    }

    pub fn dynamics_rates(&mut self) -> CliResult<RateMatrices> {
        self.modes()?;
        let r = dynamics_rates(&self.scenario.config, self.modes.as_ref().expect("modes computed"));
        self.core(r)
    }

    pub fn simulate(&self, rates: &RateMatrices) -> CliResult<Simulation> {
        let opts = EvolveOptions::default().with_step_factor(self.scenario.config.controls.time_step_factor);
        let sim = self.core(simulate(rates, &self.scenario.evolve.grid(), &opts))?;
        let split = sim.trace.split_defect();
        if split > SPLIT_TOLERANCE {
            return Err(CliError::Invariant(format!("{}: W differs from W_P + W_C by {split:e}", self.scenario.name)));
        }
        Ok(sim)
    }
}

/// Scalar summaries of the rate matrices.
pub(crate) fn rate_summary(rates: &RateMatrices, out: &mut Summary) {
    let g1 = rates.gamma1();
    out.insert("gamma1_over_gamma0".into(), g1);
    out.insert("brightest_fixed_over_gamma1".into(), brightest_fixed_orientation(rates) / g1);
    if rates.n_emitters() >= 2 {
        out.insert("gamma12_over_gamma1".into(), rates.gamma[(0, 1)] / g1);
    }
}

/// Scalar summaries of an evolved trace.
pub(crate) fn dynamics_summary(sim: &Simulation, out: &mut Summary) {
    let tr = &sim.trace;
    let (i, peak) = tr.peak();
    out.insert("w0_over_gamma1".into(), tr.w[0]);
    out.insert("peak_w_over_gamma1".into(), peak);
    out.insert("t_peak_over_tau1".into(), tr.t[i]);
    out.insert("eta_at_peak".into(), tr.eta_at_peak());
    out.insert("eta_integrated".into(), tr.integrated_yield());
    out.insert("max_trace_drift".into(), sim.trajectory.max_trace_drift);
}

fn ladder_rows<W: Write>(l: &DickeLadderRates, mut w: W) -> std::io::Result<()> {
    writeln!(w, "excitations,M,gamma_M_over_gamma1,ladder_over_gamma1,leak_over_gamma1,feed_over_gamma1,ideal_over_gamma1")?;
    let n = l.n_emitters;
    for k in (1..=n).rev() {
        let m = k as f64 - n as f64 / 2.0;
        writeln!(
            w,
            "{k},{m},{:.12e},{:.12e},{:.12e},{:.12e},{}",
            l.gamma_m[k] / l.gamma1,
            l.ladder[k] / l.gamma1,
            l.leak[k] / l.gamma1,
            l.feed[k] / l.gamma1,
            ideal_rate(n, k)
        )?;
    }
    Ok(())
}

fn selection_label(n: usize) -> String {
    if n == 0 {
        "all".into()
    } else {
        format!("lsp{n}")
    }
}

/// Runs every task of `s`, writing CSV files and `manifest.json` into `out`.
pub fn run_scenario(s: &Scenario, out: &Path) -> CliResult<Manifest> {
    let mut dir = OutputDir::create(out)?;
    let mut ctx = Context::new(s);
    let mut summary = Summary::new();
    let mut warnings = Vec::new();
    for &task in &s.tasks {
        match task {
            Task::Modes => {
                let modes = ctx.modes()?;
                for order in modes.flagged_orders() {
                    warnings.push(format!("mode {order}: Lorentzian fit residual above limit"));
                }
                summary.insert("weak_coupling_ratio".into(), modes.weak_coupling_ratio());
                let modes = modes.clone();
                dir.write("modes.csv", |w| write_mode_report(&modes, w))?;
            }
            Task::Rates => {
                let green = ctx.green()?.clone();
                rate_summary(&green, &mut summary);
                warnings.extend(green.warnings());
                let modes = ctx.modes()?.clone();
                let sum = ctx.core(gamma_delta_matrices_modes(&s.config, &modes))?;
                summary.insert("route_discrepancy_max".into(), route_discrepancy(&sum, &green).max());
                dir.write("gamma.csv", |w| write_matrix_csv(&green.gamma, &green, "gamma", w))?;
                dir.write("gamma_rad.csv", |w| write_matrix_csv(&green.gamma_rad, &green, "gamma_rad", w))?;
                dir.write("gamma_modes.csv", |w| write_matrix_csv(&sum.gamma, &sum, "gamma", w))?;
                dir.write("delta_modes.csv", |w| write_matrix_csv(&sum.delta, &sum, "delta", w))?;
            }
            Task::Eigenstates => {
                for &n in &s.selections {
                    let selection = if n == 0 { ModeSelection::All } else { ModeSelection::Single(n) };
                    let states = ctx.core(classical_eigenstates(&s.config, selection))?;
                    let label = selection_label(n);
                    if let Some(best) = states.first() {
                        summary.insert(format!("brightest_over_gamma0_{label}"), best.gamma_tot);
                    }
                    if let Some(best) = brightest_aligned(&states, 0.99) {
                        summary.insert(format!("brightest_aligned_over_gamma1_{label}"), best.gamma_over_gamma1);
                    }
                    let rows = brightness_report(&states);
                    dir.write(&format!("brightness_{label}.csv"), |w| write_brightness_csv(&rows, w))?;
                }
            }
            Task::Evolve => {
                let rates = ctx.dynamics_rates()?;
                let sim = ctx.simulate(&rates)?;
                dynamics_summary(&sim, &mut summary);
                let incoherent = ctx.simulate(&rates.incoherent())?;
                let ideal = ctx.core(ideal_cascade(rates.n_emitters(), 1.0, &s.evolve.grid()))?;
                emit_plot_data(&mut dir, &sim.trace, Some(&ideal), Some(&incoherent.trace), PlotStyle::default())?;
            }
            Task::Ladder => {
                let green = ctx.green()?.clone();
                let ops = ctx.core(build_operators(green.n_emitters()))?;
                let ladder = ctx.core(extended_dicke_rates(&green, &DickeBasis::new(&ops)))?;
                let min_leak = ladder.min_leak() / ladder.gamma1;
                if min_leak < -LEAK_TOLERANCE {
                    return Err(CliError::Invariant(format!("{}: leak rate {min_leak:e} below zero", s.name)));
                }
                summary.insert("ladder_min_leak_over_gamma1".into(), min_leak);
                for (i, r) in ladder.ladder_over_gamma1().iter().enumerate() {
                    summary.insert(format!("ladder_{i}_over_gamma1"), *r);
                }
                dir.write("ladder.csv", |w| ladder_rows(&ladder, w))?;
            }
            Task::Sweep => {
                let table = sweep(s)?;
                dir.write("sweep.csv", |w| write_sweep_csv(&table, w))?;
            }
        }
    }
    let manifest = Manifest {
        name: s.name.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        tasks: s.tasks.iter().map(|t| t.name().to_string()).collect(),
        scenario: s.source.clone(),
        files: Vec::new(),
        summary,
        warnings,
    };
    dir.finish(manifest)
}
