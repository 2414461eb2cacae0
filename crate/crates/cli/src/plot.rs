//! Curve files for the emission figures: the computed trace and the ideal
//! and incoherent references on a shared time grid.

use std::io::{self, Write};

use plasmodicke_core::lindblad::{write_trace_csv, EmissionTrace, IdealCascade};
use serde_json::json;

use crate::error::CliResult;
use crate::output::OutputDir;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlotStyle {
    pub overlay_ideal: bool,
    pub overlay_incoherent: bool,
}

impl Default for PlotStyle {
    fn default() -> Self {
        Self { overlay_ideal: true, overlay_incoherent: true }
    }
}

pub fn write_cascade_csv<W: Write>(c: &IdealCascade, mut w: W) -> io::Result<()> {
    let n = c.populations.first().map_or(0, |p| p.len() - 1);
    write!(w, "t_over_tau1,W_over_gamma1")?;
    for k in 0..=n {
        write!(w, ",pop_exc_{k}")?;
    }
    writeln!(w)?;
    for i in 0..c.times.len() {
        write!(w, "{:.10e},{:.12e}", c.times[i], c.w[i])?;
        for p in &c.populations[i] {
            write!(w, ",{p:.12e}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Writes `w_computed.csv`, the requested reference curves and
/// `plot.json` describing them.
pub fn emit_plot_data(
    out: &mut OutputDir,
    computed: &EmissionTrace,
    ideal: Option<&IdealCascade>,
    incoherent: Option<&EmissionTrace>,
    style: PlotStyle,
) -> CliResult<()> {
    out.write("w_computed.csv", |w| write_trace_csv(computed, w))?;
    let mut curves = vec![json!({"file": "w_computed.csv", "label": "computed", "y": ["W_over_gamma1", "Wrad"]})];
    if let (true, Some(c)) = (style.overlay_ideal, ideal) {
        out.write("w_ideal.csv", |w| write_cascade_csv(c, w))?;
        curves.push(json!({"file": "w_ideal.csv", "label": "ideal superradiance", "y": ["W_over_gamma1"]}));
    }
    if let (true, Some(t)) = (style.overlay_incoherent, incoherent) {
        out.write("w_incoherent.csv", |w| write_trace_csv(t, w))?;
        curves.push(json!({"file": "w_incoherent.csv", "label": "incoherent emission", "y": ["W_over_gamma1", "Wrad"]}));
    }
    let description = json!({
        "x": {"column": "t_over_tau1", "label": "t / τ1", "normalization": "τ1 = 1/Γ1, Γ1 the single-emitter rate"},
        "y": {"column": "W_over_gamma1", "label": "W(t) / Γ1"},
        "curves": curves,
    });
    out.write("plot.json", |w| {
        serde_json::to_writer_pretty(&mut *w, &description)?;
        writeln!(w)
    })
}
