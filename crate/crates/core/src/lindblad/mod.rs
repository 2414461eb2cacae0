//! Master-equation dynamics of N two-level emitters.

pub mod dicke;
pub mod integrate;
pub mod liouvillian;
pub mod operators;
pub mod sparse;
pub mod trace;
pub mod two_emitter;

pub use dicke::{dicke_state, extended_dicke_rates, ideal_cascade, ideal_rate, DickeBasis, DickeLadderRates, IdealCascade};
pub use integrate::{evolve, DensityOperator, EvolveOptions, Trajectory};
pub use liouvillian::{build_liouvillian, build_liouvillian_on, ElementSpace, Liouvillian};
pub use operators::{build_operators, OperatorSet, MAX_EMITTERS};
pub use sparse::CsrMatrix;
pub use trace::{emission_trace, write_trace_csv, EmissionTrace};
pub use two_emitter::{two_emitter_analytic, TwoEmitterSolution};

use crate::error::Result;
use crate::rates::RateMatrices;

/// Result of evolving the fully excited state.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub trajectory: Trajectory,
    pub trace: EmissionTrace,
}

/// Evolves |e…e⟩ under `rates` and returns the emission trace. `t_grid`
/// is in units of 1/Γ₁ and the trace is reported in Γ₁ units.
pub fn simulate(rates: &RateMatrices, t_grid: &[f64], opts: &EvolveOptions) -> Result<Simulation> {
    let ops = build_operators(rates.n_emitters())?;
    let rho0 = DensityOperator::all_excited(ops.dim());
    let space = ElementSpace::for_state(&ops, &rho0.matrix);
    let l = build_liouvillian_on(rates, &ops, space)?;
    let gamma1 = rates.gamma1();
    let times: Vec<f64> = t_grid.iter().map(|t| t / gamma1).collect();
    let trajectory = evolve(&l, &rho0, &times, opts)?;
    let trace = emission_trace(&trajectory, rates, &ops, gamma1)?;
    Ok(Simulation { trajectory, trace })
}
