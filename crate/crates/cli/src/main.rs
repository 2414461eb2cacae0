use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use plasmodicke_cli::config::set_number;
use plasmodicke_cli::{load_value, parse_value, presets, run_scenario, CliError, CliResult, Manifest};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "plasmodicke", version, about = "Plasmonic superradiance of emitters around a metal nanosphere")]
struct Cli {
    /// Worker threads for parallel sections.
    #[arg(long, global = true, env = "PLASMODICKE_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file or a preset.
    Run {
        /// Path to a JSON scenario or a preset name.
        target: String,
        /// Output directory (default out/<name>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Highest multipole order.
        #[arg(long)]
        modes: Option<usize>,
    },
    /// Sweep one numeric key of a scenario.
    Sweep {
        target: String,
        /// Dotted key path, e.g. emitters.h_nm.
        #[arg(long)]
        param: String,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long)]
        steps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        modes: Option<usize>,
    },
    /// List the built-in presets.
    Presets,
}

fn with_modes(mut v: Value, modes: Option<usize>) -> CliResult<Value> {
    if let Some(n) = modes {
        set_number(&mut v, "controls.max_multipole", n as f64)?;
    }
    Ok(v)
}

fn report(manifest: &Manifest, out: &std::path::Path) {
    println!("{}: wrote {} files to {}", manifest.name, manifest.files.len(), out.display());
    for (k, v) in &manifest.summary {
        println!("  {k} = {v:.6}");
    }
    for w in &manifest.warnings {
        eprintln!("warning: {w}");
    }
}

fn execute(cli: Cli) -> CliResult<()> {
    if let Some(k) = cli.threads {
        if k == 0 {
            return Err(CliError::Config("thread count must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot size thread pool: {e}")))?;
    }
    match cli.command {
        Command::Presets => {
            let mut stdout = std::io::stdout().lock();
            for p in presets::list() {
                // a closed pipe ends the listing early
                if writeln!(stdout, "{:<24} {}", p.name, p.description).is_err() {
                    break;
                }
            }
            Ok(())
        }
        Command::Run { target, out, modes } => {
            let s = parse_value(with_modes(load_value(&target)?, modes)?)?;
            let out = out.unwrap_or_else(|| PathBuf::from("out").join(&s.name));
            let manifest = run_scenario(&s, &out)?;
            report(&manifest, &out);
            Ok(())
        }
        Command::Sweep { target, param, from, to, steps, out, modes } => {
            let mut v = with_modes(load_value(&target)?, modes)?;
            let obj = v.as_object_mut().ok_or_else(|| CliError::Config("scenario must be a JSON object".into()))?;
            obj.insert("sweep".into(), json!({"param": param, "from": from, "to": to, "steps": steps}));
            let tasks = obj.entry("tasks").or_insert_with(|| json!([]));
            if let Some(list) = tasks.as_array_mut() {
                if !list.iter().any(|t| t == "sweep") {
                    list.push(json!("sweep"));
                }
            }
            let s = parse_value(v)?;
            let out = out.unwrap_or_else(|| PathBuf::from("out").join(format!("{}-sweep", s.name)));
            let mut sweep_only = s.clone();
            sweep_only.tasks = vec![plasmodicke_cli::Task::Sweep];
            let manifest = run_scenario(&sweep_only, &out)?;
            report(&manifest, &out);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
