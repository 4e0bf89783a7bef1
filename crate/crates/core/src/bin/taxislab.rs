use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use taxislab::experiments::{
    cmd_check, cmd_compare, cmd_run, cmd_sweep, resolve_jobs, ScenarioConfig, SweepAxis, R_HI, R_LO,
};
use taxislab::Result;

/// Simulate and analyse chemotaxis-haptotaxis scenarios.
#[derive(Parser)]
#[command(name = "taxislab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario. Exit 0 when completed, 2 on detected blow-up, 1 on error.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Test the kinetics against the configured hypothesis budget. Exit 3 on any failure.
    Check { config: PathBuf },
    /// Run the indirect and direct signal-production variants side by side.
    /// Exit 0 when the growth dichotomy holds, 4 when it does not.
    Compare {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = R_HI)]
        r_hi: f64,
        #[arg(long, default_value_t = R_LO)]
        r_lo: f64,
    },
    /// Run the Cartesian product of parameter axes in parallel.
    Sweep {
        config: PathBuf,
        /// `path=v1,v2,...`, e.g. `model_params.chi=0.3,0.6`. Repeatable.
        #[arg(long = "axis", required = true)]
        axes: Vec<String>,
        /// Worker count; defaults to TAXISLAB_JOBS, then the number of cores.
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scenario".into())
}

fn out_dir(explicit: Option<PathBuf>, cfg: &ScenarioConfig, config: &Path) -> PathBuf {
    explicit
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("runs").join(stem(config)))
}

fn execute(command: Command) -> Result<u8> {
    match command {
        Command::Run { config, out } => {
            let cfg = ScenarioConfig::from_path(&config)?;
            let dir = out_dir(out, &cfg, &config);
            let outcome = cmd_run(&cfg, &stem(&config), &dir)?;
            let s = &outcome.summary;
            println!(
                "{}: t = {} after {} steps, growth {:.4}, {:.2}s -> {}",
                s.termination.as_str(),
                s.final_state.t,
                s.steps,
                s.growth(),
                outcome.wall_time,
                dir.display()
            );
            Ok(outcome.exit_code() as u8)
        }
        Command::Check { config } => {
            let report = cmd_check(&ScenarioConfig::from_path(&config)?)?;
            print!("{}", report.to_table());
            Ok(if report.all_passed() { 0 } else { 3 })
        }
        Command::Compare {
            config,
            out,
            r_hi,
            r_lo,
        } => {
            let cfg = ScenarioConfig::from_path(&config)?;
            let dir = out_dir(out, &cfg, &config);
            let v = cmd_compare(&cfg, &dir, r_hi, r_lo)?;
            println!(
                "growth indirect {:.4} (<= {r_lo}), direct {:.4} (>= {r_hi})",
                v.growth_indirect, v.growth_direct
            );
            println!("identical initial u, h, v: {}", v.identical_initial_fields);
            println!(
                "dichotomy holds: {} -> {}",
                v.dichotomy_holds,
                dir.display()
            );
            Ok(v.exit_code() as u8)
        }
        Command::Sweep {
            config,
            axes,
            jobs,
            out,
        } => {
            let text = std::fs::read_to_string(&config).map_err(|e| taxislab::Error::Io {
                path: config.clone(),
                source: e,
            })?;
            let base: serde_json::Value = serde_json::from_str(&text)?;
            let cfg = ScenarioConfig::from_value(&base)?;
            let axes = axes
                .iter()
                .map(|a| SweepAxis::parse(a))
                .collect::<Result<Vec<_>>>()?;
            let dir = out_dir(out, &cfg, &config);
            let rows = cmd_sweep(&base, &axes, &dir, resolve_jobs(jobs)?)?;
            let failed = rows
                .iter()
                .filter(|r| r.status.starts_with("error"))
                .count();
            println!(
                "{} jobs, {failed} failed -> {}",
                rows.len(),
                dir.join("sweep.csv").display()
            );
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse().command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
