//! Parameter sweeps over a numeric key of the scenario tree.

use std::io::{self, Write};

use rayon::prelude::*;

use crate::config::{parse_value, set_number, Scenario, Task};
use crate::error::{CliError, CliResult};
use crate::run::{dynamics_summary, rate_summary, Context, Summary};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub series: Vec<f64>,
    pub value: f64,
    pub summary: Summary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub param: String,
    pub series_params: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<SweepRow>,
}

/// Rate summaries at one point, plus dynamics when the scenario evolves.
pub fn point_summary(s: &Scenario) -> CliResult<Summary> {
    let mut ctx = Context::new(s);
    let mut out = Summary::new();
    let green = ctx.green()?.clone();
    rate_summary(&green, &mut out);
    if s.has(Task::Evolve) {
        let rates = ctx.dynamics_rates()?;
        dynamics_summary(&ctx.simulate(&rates)?, &mut out);
    }
    Ok(out)
}

/// Evaluates every sweep point concurrently; rows come back ordered by
/// series value, then parameter value.
pub fn sweep(s: &Scenario) -> CliResult<SweepTable> {
    let spec = s.sweep.as_ref().ok_or_else(|| CliError::Config(format!("{}: no sweep section", s.name)))?;
    let (series_params, series) = match &spec.series {
        Some(series) => (series.params.clone(), series.values.clone()),
        None => (Vec::new(), vec![Vec::new()]),
    };
    let mut base = s.source.clone();
    if let Some(obj) = base.as_object_mut() {
        obj.remove("sweep");
        if let Some(tasks) = obj.get_mut("tasks").and_then(|t| t.as_array_mut()) {
            tasks.retain(|t| t.as_str() != Some("sweep"));
            if tasks.is_empty() {
                tasks.push("rates".into());
            }
        }
    }
    let mut points = Vec::new();
    for outer in &series {
        for value in spec.points() {
            let mut v = base.clone();
            for (p, x) in series_params.iter().zip(outer) {
                set_number(&mut v, p, *x)?;
            }
            set_number(&mut v, &spec.param, value)?;
            points.push((outer.clone(), value, v));
        }
    }
    let rows: Vec<SweepRow> = points
        .into_par_iter()
        .map(|(outer, value, v)| {
            let point = parse_value(v).map_err(|e| match e {
                CliError::Config(m) => CliError::Config(format!("sweep point {} = {value}: {m}", spec.param)),
                other => other,
            })?;
            Ok(SweepRow { series: outer, value, summary: point_summary(&point)? })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let mut columns: Vec<String> = Vec::new();
    for r in &rows {
        for k in r.summary.keys() {
            if !columns.contains(k) {
                columns.push(k.clone());
            }
        }
    }
    columns.sort();
    Ok(SweepTable { param: spec.param.clone(), series_params, columns, rows })
}

pub fn write_sweep_csv<W: Write>(t: &SweepTable, mut w: W) -> io::Result<()> {
    let mut header = t.series_params.clone();
    header.push(t.param.clone());
    header.extend(t.columns.iter().cloned());
    writeln!(w, "{}", header.join(","))?;
    for r in &t.rows {
        let mut cells: Vec<String> = r.series.iter().map(|x| format!("{x}")).collect();
        cells.push(format!("{}", r.value));
        for c in &t.columns {
            cells.push(r.summary.get(c).map_or(String::new(), |x| format!("{x:.12e}")));
        }
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}
