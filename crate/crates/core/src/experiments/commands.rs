//! The `run`, `check`, `compare` and `sweep` workflows.

use std::collections::hash_map::DefaultHasher;
use std::hash::Hasher;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use super::config::{set_path, ScenarioConfig, CAF_DIRECT, CAF_INDIRECT};
use crate::diagnostics::{fit_energy_constant, timeseries, DiagnosticsRow, EnergyFit};
use crate::error::{Error, Result};
use crate::grid::snapshot::{snapshot_path, write_field};
use crate::grid::State;
use crate::model::{check_hypotheses, HypothesisReport};
use crate::solver::{run, RunObserver, RunSummary, Termination};

pub const MANIFEST: &str = "manifest.json";
pub const COMPARE: &str = "compare.json";
pub const SWEEP: &str = "sweep.csv";

/// Default growth thresholds for the indirect/direct comparison.
pub const R_HI: f64 = 50.0;
pub const R_LO: f64 = 10.0;

/// Writes `u`, `h`, `v` (and `w` when the model has producers) per emission.
struct SnapshotWriter<'a> {
    dir: &'a Path,
    with_producer: bool,
}

impl RunObserver for SnapshotWriter<'_> {
    fn on_snapshot(&mut self, index: usize, state: &State) -> Result<()> {
        for (name, field) in state.fields() {
            if name == "w" && !self.with_producer {
                continue;
            }
            write_field(&snapshot_path(self.dir, name, index), field)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub summary: RunSummary,
    pub wall_time: f64,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        match self.summary.termination {
            Termination::Completed => 0,
            Termination::BlowUp { .. } => 2,
        }
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_json(path: &Path, value: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// Runs one scenario and writes `timeseries.csv`, snapshots and the manifest into `out`.
pub fn cmd_run(cfg: &ScenarioConfig, name: &str, out: &Path) -> Result<RunOutcome> {
    let scenario = cfg.scenario(name)?;
    create_dir(out)?;
    let start = Instant::now();
    let mut writer = SnapshotWriter {
        dir: out,
        with_producer: scenario.model.kinetics.has_producer(),
    };
    let summary = run(&scenario, &mut writer)?;
    let wall_time = start.elapsed().as_secs_f64();
    timeseries::write(&out.join(timeseries::FILE_NAME), &summary.rows)?;
    let manifest = json!({
        "name": name,
        "config": cfg.to_value(),
        "termination": summary.termination,
        "steps": summary.steps,
        "snapshots": summary.rows.len(),
        "growth": summary.growth(),
        "max_clip_ratio": summary.max_clip_ratio,
        "wall_time_s": wall_time,
        "final": summary.rows.last(),
    });
    write_json(&out.join(MANIFEST), &manifest)?;
    Ok(RunOutcome {
        dir: out.to_path_buf(),
        summary,
        wall_time,
    })
}

/// Runs the structural check against the configured budget.
pub fn cmd_check(cfg: &ScenarioConfig) -> Result<HypothesisReport> {
    let budget = cfg
        .hypothesis_budget
        .as_ref()
        .ok_or_else(|| Error::MissingFields {
            fields: vec!["hypothesis_budget".into()],
        })?;
    let model = cfg.model()?;
    check_hypotheses(
        model.kinetics.as_ref(),
        &budget.budget(),
        budget.check_box(),
    )
}

#[derive(Debug, Clone, Serialize)]
pub struct RunBrief {
    pub termination: Termination,
    pub steps: usize,
    pub t_final: f64,
    pub initial_u_max: f64,
    pub final_u_max: f64,
    pub growth: f64,
    pub wall_time_s: f64,
}

impl RunBrief {
    fn of(outcome: &RunOutcome) -> Self {
        let s = &outcome.summary;
        Self {
            termination: s.termination,
            steps: s.steps,
            t_final: s.final_state.t,
            initial_u_max: s.initial_u_max,
            final_u_max: s.final_u_max,
            growth: s.growth(),
            wall_time_s: outcome.wall_time,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareVerdict {
    pub growth_indirect: f64,
    pub growth_direct: f64,
    pub r_hi: f64,
    pub r_lo: f64,
    pub dichotomy_holds: bool,
    /// Hashes of the `t = 0` snapshots of `u`, `h`, `v` per run.
    pub initial_hashes: Value,
    pub identical_initial_fields: bool,
    pub indirect: RunBrief,
    pub direct: RunBrief,
}

impl CompareVerdict {
    pub fn exit_code(&self) -> i32 {
        if self.dichotomy_holds {
            0
        } else {
            4
        }
    }
}

fn file_hash(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut h = DefaultHasher::new();
    h.write(&bytes);
    Ok(format!("{:016x}", h.finish()))
}

/// Runs the indirect and direct forms of a CAF scenario side by side.
pub fn cmd_compare(
    cfg: &ScenarioConfig,
    out: &Path,
    r_hi: f64,
    r_lo: f64,
) -> Result<CompareVerdict> {
    let indirect_cfg = cfg.indirect_counterpart()?;
    let direct_cfg = cfg.direct_counterpart()?;
    create_dir(out)?;
    let (dir_i, dir_d) = (out.join("indirect"), out.join("direct"));
    let (indirect, direct) = rayon::join(
        || cmd_run(&indirect_cfg, CAF_INDIRECT, &dir_i),
        || cmd_run(&direct_cfg, CAF_DIRECT, &dir_d),
    );
    let (indirect, direct) = (indirect?, direct?);

    let mut hashes = serde_json::Map::new();
    let mut identical = true;
    for field in ["u", "h", "v"] {
        let a = file_hash(&snapshot_path(&dir_i, field, 0))?;
        let b = file_hash(&snapshot_path(&dir_d, field, 0))?;
        identical &= a == b;
        hashes.insert(field.into(), json!({ "indirect": a, "direct": b }));
    }

    let (gi, gd) = (indirect.summary.growth(), direct.summary.growth());
    let verdict = CompareVerdict {
        growth_indirect: gi,
        growth_direct: gd,
        r_hi,
        r_lo,
        dichotomy_holds: identical && gd >= r_hi && gi <= r_lo,
        initial_hashes: Value::Object(hashes),
        identical_initial_fields: identical,
        indirect: RunBrief::of(&indirect),
        direct: RunBrief::of(&direct),
    };
    write_json(&out.join(COMPARE), &serde_json::to_value(&verdict)?)?;
    Ok(verdict)
}

/// One parameter axis of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepAxis {
    pub path: String,
    pub values: Vec<Value>,
}

impl SweepAxis {
    /// Parses `path=v1,v2,...`; values are JSON literals or bare strings.
    pub fn parse(spec: &str) -> Result<Self> {
        let (path, list) = spec.split_once('=').ok_or_else(|| {
            Error::Input(format!(
                "sweep axis `{spec}` is not of the form path=v1,v2,..."
            ))
        })?;
        let path = path.trim().to_string();
        let values: Vec<Value> = list
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| serde_json::from_str(s).unwrap_or_else(|_| Value::String(s.to_string())))
            .collect();
        if path.is_empty() || values.is_empty() {
            return Err(Error::Input(format!("empty sweep axis `{spec}`")));
        }
        Ok(Self { path, values })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub job: usize,
    pub values: Vec<String>,
    pub status: String,
    pub growth: Option<f64>,
    pub final_energy: Option<f64>,
    pub fitted_c: Option<f64>,
    pub wall_time_s: f64,
}

fn value_label(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Builds the job config for one combination. A `model` axis switches
/// between the indirect and direct CAF forms.
fn job_config(base: &Value, axes: &[SweepAxis], combo: &[usize]) -> Result<ScenarioConfig> {
    let mut doc = base.clone();
    let mut model_choice = None;
    for (axis, &k) in axes.iter().zip(combo) {
        let value = axis.values[k].clone();
        if axis.path == "model" {
            model_choice = Some(value_label(&value));
        } else {
            set_path(&mut doc, &axis.path, value)?;
        }
    }
    let cfg = ScenarioConfig::from_value(&doc)?;
    match model_choice.as_deref() {
        None => Ok(cfg),
        Some(CAF_INDIRECT | "indirect") => cfg.indirect_counterpart(),
        Some(CAF_DIRECT | "direct") => cfg.direct_counterpart(),
        Some(other) => {
            let mut doc = doc;
            set_path(&mut doc, "model", Value::String(other.to_string()))?;
            ScenarioConfig::from_value(&doc)
        }
    }
}

fn run_job(base: &Value, axes: &[SweepAxis], combo: &[usize], job: usize, out: &Path) -> SweepRow {
    let start = Instant::now();
    let values = axes
        .iter()
        .zip(combo)
        .map(|(a, &k)| value_label(&a.values[k]))
        .collect();
    let result = job_config(base, axes, combo).and_then(|cfg| {
        let dir = out.join(format!("job_{job:04}"));
        let outcome = cmd_run(&cfg, &format!("job_{job:04}"), &dir)?;
        let series: Vec<_> = outcome
            .summary
            .rows
            .iter()
            .map(|r| (r.t, r.energy, r.dissipation))
            .collect();
        let fitted = if series.len() >= 3 {
            fit_energy_constant(&series)?.value()
        } else {
            None
        };
        Ok((outcome, fitted))
    });
    let wall_time_s = start.elapsed().as_secs_f64();
    match result {
        Ok((outcome, fitted_c)) => SweepRow {
            job,
            values,
            status: outcome.summary.termination.as_str().to_string(),
            growth: Some(outcome.summary.growth()),
            final_energy: outcome
                .summary
                .rows
                .last()
                .map(|r: &DiagnosticsRow| r.energy),
            fitted_c,
            wall_time_s,
        },
        Err(e) => SweepRow {
            job,
            values,
            status: format!("error: {e}"),
            growth: None,
            final_energy: None,
            fitted_c: None,
            wall_time_s,
        },
    }
}

/// Worker count: explicit value, else `TAXISLAB_JOBS`, else all cores.
pub fn resolve_jobs(explicit: Option<usize>) -> Result<usize> {
    if let Some(n) = explicit {
        return if n > 0 {
            Ok(n)
        } else {
            Err(Error::Input("--jobs must be at least 1".into()))
        };
    }
    match std::env::var("TAXISLAB_JOBS") {
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(Error::Input(format!(
                "TAXISLAB_JOBS must be a positive integer, got {s:?}"
            ))),
        },
        Err(_) => Ok(std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(crate::grid::snapshot::fmt_f64).unwrap_or_default()
}

/// Runs the Cartesian product of `axes` over the scenario document `base`.
///
/// Failing jobs are recorded in their row; only setup errors abort.
pub fn cmd_sweep(
    base: &Value,
    axes: &[SweepAxis],
    out: &Path,
    jobs: usize,
) -> Result<Vec<SweepRow>> {
    if axes.is_empty() {
        return Err(Error::Input("a sweep needs at least one axis".into()));
    }
    if let Some(a) = axes.iter().find(|a| a.values.is_empty()) {
        return Err(Error::Input(format!("empty sweep axis `{}`", a.path)));
    }
    create_dir(out)?;
    let mut combos: Vec<Vec<usize>> = vec![vec![]];
    for axis in axes {
        combos = combos
            .into_iter()
            .flat_map(|c| {
                (0..axis.values.len()).map(move |k| {
                    let mut next = c.clone();
                    next.push(k);
                    next
                })
            })
            .collect();
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Input(format!("cannot start worker pool: {e}")))?;
    let rows: Vec<SweepRow> = pool.install(|| {
        combos
            .par_iter()
            .enumerate()
            .map(|(job, combo)| run_job(base, axes, combo, job, out))
            .collect()
    });

    let mut text = String::from("job");
    for a in axes {
        text.push(',');
        text.push_str(&csv_field(&a.path));
    }
    text.push_str(",status,growth,final_F,fitted_C,wall_time_s\n");
    for r in &rows {
        text.push_str(&r.job.to_string());
        for v in &r.values {
            text.push(',');
            text.push_str(&csv_field(v));
        }
        text.push_str(&format!(
            ",{},{},{},{},{:.3}\n",
            csv_field(&r.status),
            opt(r.growth),
            opt(r.final_energy),
            opt(r.fitted_c),
            r.wall_time_s
        ));
    }
    let path = out.join(SWEEP);
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(rows)
}

/// Fitted energy constant along a finished run.
pub fn energy_fit(rows: &[DiagnosticsRow]) -> Result<EnergyFit> {
    let series: Vec<_> = rows
        .iter()
        .map(|r| (r.t, r.energy, r.dissipation))
        .collect();
    fit_energy_constant(&series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::config::paper_s6;

    #[test]
    fn axis_parsing() {
        let a = SweepAxis::parse("model_params.chi=0.3,0.6").unwrap();
        assert_eq!(a.values, vec![json!(0.3), json!(0.6)]);
        let m = SweepAxis::parse("model=caf_indirect,caf_direct").unwrap();
        assert_eq!(m.values[1], json!("caf_direct"));
        for bad in ["model_params.chi=", "chi", "=1,2"] {
            let err = SweepAxis::parse(bad).unwrap_err().to_string();
            assert!(err.contains("sweep axis"), "{err}");
        }
        assert!(SweepAxis::parse("x=")
            .unwrap_err()
            .to_string()
            .contains("empty sweep axis"));
    }

    #[test]
    fn model_axis_switches_variant() {
        let base = paper_s6().to_value();
        let axes = vec![SweepAxis::parse("model=indirect,direct").unwrap()];
        let direct = job_config(&base, &axes, &[1]).unwrap();
        assert_eq!(direct.model, CAF_DIRECT);
        assert_eq!(direct.caf.unwrap().beta_v, 0.0);
        assert_eq!(job_config(&base, &axes, &[0]).unwrap().model, CAF_INDIRECT);
    }

    #[test]
    fn explicit_jobs_win() {
        assert_eq!(resolve_jobs(Some(3)).unwrap(), 3);
        assert!(resolve_jobs(Some(0)).is_err());
    }

    #[test]
    fn csv_quoting() {
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("plain"), "plain");
    }
}
