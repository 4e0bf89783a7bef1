//! Time integration to a horizon with periodic diagnostics and snapshots.

use serde::{Serialize, Serializer};

use super::{detect_blowup, step, BlowupStatus, SolverConfig, StepReport};
use crate::diagnostics::{DiagnosticsRow, QuasiEnergyConfig, RowStats};
use crate::error::Result;
use crate::grid::{init_scenario, integrate, Grid, InitialData, State};
use crate::model::Model;

/// Everything needed to reproduce one trajectory.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub model: Model,
    pub grid: Grid,
    pub initial: InitialData,
    pub solver: SolverConfig,
    pub quasi_energy: QuasiEnergyConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Completed,
    BlowUp { reason: BlowupStatus },
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::Completed => "completed",
            Termination::BlowUp { .. } => "blow-up detected",
        }
    }
}

impl Serialize for Termination {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

/// Receives output as the run progresses.
pub trait RunObserver {
    fn on_row(&mut self, _row: &DiagnosticsRow) -> Result<()> {
        Ok(())
    }

    /// `index` counts emissions, starting at 0 for the initial state.
    fn on_snapshot(&mut self, _index: usize, _state: &State) -> Result<()> {
        Ok(())
    }
}

pub struct NullObserver;

impl RunObserver for NullObserver {}

/// A trajectory being advanced step by step.
#[derive(Debug, Clone)]
pub struct Simulation {
    scenario: Scenario,
    state: State,
    steps: usize,
    last_dt: f64,
    clipped_total: f64,
    lin_iterations: usize,
    max_clip_ratio: f64,
}

impl Simulation {
    pub fn new(scenario: Scenario) -> Result<Self> {
        scenario.solver.validate()?;
        scenario.quasi_energy.validate()?;
        let state = init_scenario(
            &scenario.initial,
            scenario.grid,
            scenario.model.kinetics.has_producer(),
        )?;
        Ok(Self {
            scenario,
            state,
            steps: 0,
            last_dt: 0.0,
            clipped_total: 0.0,
            lin_iterations: 0,
            max_clip_ratio: 0.0,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn state(&self) -> &State {
        &self.state
    }

    pub fn time(&self) -> f64 {
        self.state.t
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Largest per-step clipped mass relative to `∫u` before the step.
    pub fn max_clip_ratio(&self) -> f64 {
        self.max_clip_ratio
    }

    /// Whether the horizon has been reached up to rounding.
    pub fn finished(&self) -> bool {
        self.scenario.solver.t_end - self.state.t <= 1e-12 * self.scenario.solver.t_end.max(1.0)
    }

    /// One step toward `t_end`.
    pub fn step(&mut self) -> Result<StepReport> {
        self.step_toward(self.scenario.solver.t_end)
    }

    /// One step that does not overshoot `target`.
    pub fn step_toward(&mut self, target: f64) -> Result<StepReport> {
        let cfg = SolverConfig {
            t_end: target.min(self.scenario.solver.t_end),
            ..self.scenario.solver
        };
        let mass_before = integrate(&self.state.u);
        let (next, report) = step(&self.state, &self.scenario.model, &cfg)?;
        self.state = next;
        self.steps += 1;
        self.last_dt = report.dt;
        self.clipped_total += report.clipped_mass;
        self.lin_iterations += report.iterations_u + report.iterations_h;
        if mass_before > 0.0 {
            self.max_clip_ratio = self.max_clip_ratio.max(report.clipped_mass / mass_before);
        }
        Ok(report)
    }

    /// Diagnostics of the current state. `dt` is the last step size;
    /// clipped mass and linear iterations are totals since `t = 0`.
    pub fn diagnostics_row(&self) -> DiagnosticsRow {
        let stats = RowStats {
            dt: self.last_dt,
            clipped_mass: self.clipped_total,
            lin_iterations: self.lin_iterations,
        };
        DiagnosticsRow::compute(&self.state, &self.scenario.quasi_energy, stats)
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub final_state: State,
    pub rows: Vec<DiagnosticsRow>,
    pub termination: Termination,
    pub steps: usize,
    pub max_clip_ratio: f64,
    pub initial_u_max: f64,
    pub final_u_max: f64,
}

impl RunSummary {
    /// `‖u(t_final)‖∞ / ‖u(0)‖∞`.
    pub fn growth(&self) -> f64 {
        if self.initial_u_max > 0.0 {
            self.final_u_max / self.initial_u_max
        } else {
            0.0
        }
    }
}

/// Runs `scenario` to its horizon.
///
/// Output is emitted at `t = 0`, at every multiple of the snapshot interval
/// (steps are shortened to land on them), and at the final time. A
/// detected blow-up emits the offending state and stops.
pub fn run(scenario: &Scenario, observer: &mut dyn RunObserver) -> Result<RunSummary> {
    let mut sim = Simulation::new(scenario.clone())?;
    let cfg = scenario.solver;
    let interval = cfg.output_interval();
    let initial_u_max = sim.state().u.max_abs();

    let mut rows = Vec::new();
    let mut emitted = 0usize;
    let mut emit = |sim: &Simulation, rows: &mut Vec<DiagnosticsRow>| -> Result<()> {
        let row = sim.diagnostics_row();
        observer.on_row(&row)?;
        observer.on_snapshot(emitted, sim.state())?;
        rows.push(row);
        emitted += 1;
        Ok(())
    };
    emit(&sim, &mut rows)?;

    let mut next_output = if interval > 0.0 { interval } else { cfg.t_end };
    let mut termination = Termination::Completed;
    while !sim.finished() {
        let previous_max = sim.state().u.max_abs();
        sim.step_toward(next_output)?;
        let status = detect_blowup(sim.state(), &cfg, Some(previous_max));
        if status != BlowupStatus::None {
            termination = Termination::BlowUp { reason: status };
            emit(&sim, &mut rows)?;
            break;
        }
        let t = sim.time();
        let at_output = next_output - t <= 1e-12 * next_output.max(1.0);
        if at_output || sim.finished() {
            emit(&sim, &mut rows)?;
            while next_output - t <= 1e-12 * next_output.max(1.0) {
                next_output += interval;
            }
        }
    }

    Ok(RunSummary {
        final_u_max: sim.state().u.max_abs(),
        final_state: sim.state().clone(),
        rows,
        termination,
        steps: sim.steps(),
        max_clip_ratio: sim.max_clip_ratio(),
        initial_u_max,
    })
}
