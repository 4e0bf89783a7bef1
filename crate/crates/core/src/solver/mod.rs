//! First-order IMEX time stepping on the finite-volume grid.
//!
//! Taxis and kinetics are explicit, diffusion of `u` and `h` is implicit.
//! Taxis uses donor-cell upwinding of conservative face fluxes; every
//! boundary face carries zero flux.

mod linear;
mod run;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{face_gradients, FaceGradients, Field, Grid, State};
use crate::model::{Model, Point};

pub use linear::{implicit_diffusion, DiffusionSolve};
pub use run::{run, NullObserver, RunObserver, RunSummary, Scenario, Simulation, Termination};

fn default_cfl() -> f64 {
    0.45
}
fn default_dt_max() -> f64 {
    1e-2
}
fn default_lin_tol() -> f64 {
    1e-10
}
fn default_lin_maxiter() -> usize {
    2000
}
fn default_v_floor() -> f64 {
    1e-12
}
fn default_blowup() -> f64 {
    1e6
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub t_end: f64,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default = "default_dt_max")]
    pub dt_max: f64,
    /// Values of `u`, `h`, `w` below this level are reset to zero after
    /// each step, with the removed amount booked as clipped mass.
    #[serde(default)]
    pub theta_clip: f64,
    #[serde(default = "default_lin_tol")]
    pub lin_tol: f64,
    #[serde(default = "default_lin_maxiter")]
    pub lin_maxiter: usize,
    #[serde(default = "default_v_floor")]
    pub v_floor: f64,
    /// Output cadence in simulation time; `None` means a quarter of `t_end`.
    #[serde(default)]
    pub snapshot_every: Option<f64>,
    #[serde(default = "default_blowup")]
    pub blowup_threshold: f64,
}

impl SolverConfig {
    pub fn with_horizon(t_end: f64) -> Self {
        Self {
            t_end,
            cfl: default_cfl(),
            dt_max: default_dt_max(),
            theta_clip: 0.0,
            lin_tol: default_lin_tol(),
            lin_maxiter: default_lin_maxiter(),
            v_floor: default_v_floor(),
            snapshot_every: None,
            blowup_threshold: default_blowup(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(Error::config(
                "solver.t_end",
                format!("must be nonnegative, got {}", self.t_end),
            ));
        }
        if !(self.cfl > 0.0 && self.cfl < 1.0) {
            return Err(Error::config(
                "solver.cfl",
                format!("must lie in (0, 1), got {}", self.cfl),
            ));
        }
        if !(self.dt_max.is_finite() && self.dt_max > 0.0) {
            return Err(Error::config(
                "solver.dt_max",
                format!("must be positive, got {}", self.dt_max),
            ));
        }
        if !(self.lin_tol > 0.0 && self.lin_tol <= 1e-4) {
            return Err(Error::config(
                "solver.lin_tol",
                format!("must lie in (0, 1e-4], got {}", self.lin_tol),
            ));
        }
        if self.lin_maxiter == 0 {
            return Err(Error::config("solver.lin_maxiter", "must be at least 1"));
        }
        if !(self.theta_clip.is_finite() && self.theta_clip >= 0.0) {
            return Err(Error::config("solver.theta_clip", "must be nonnegative"));
        }
        if !(self.v_floor.is_finite() && self.v_floor > 0.0) {
            return Err(Error::config("solver.v_floor", "must be positive"));
        }
        if let Some(every) = self.snapshot_every {
            if !(every.is_finite() && every > 0.0) {
                return Err(Error::config(
                    "solver.snapshot_every",
                    format!("must be positive, got {every}"),
                ));
            }
        }
        if !(self.blowup_threshold > 0.0) {
            return Err(Error::config("solver.blowup_threshold", "must be positive"));
        }
        Ok(())
    }

    pub fn output_interval(&self) -> f64 {
        self.snapshot_every.unwrap_or(self.t_end / 4.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepReport {
    pub dt: f64,
    pub iterations_u: usize,
    pub iterations_h: usize,
    /// Area-weighted amount removed from `u`, `h`, `w` by clipping.
    pub clipped_mass: f64,
    /// Largest `|χ ∂h/∂n + ξ ∂v/∂n|` over all faces.
    pub max_face_speed: f64,
}

/// Transport potentials `(field, coefficient)`; face velocity is the sum
/// of `coefficient × face gradient`.
fn face_velocities(grid: &Grid, potentials: &[(&FaceGradients, f64)]) -> (Vec<f64>, Vec<f64>) {
    let mut vx = vec![0.0; grid.x_faces()];
    let mut vy = vec![0.0; grid.y_faces()];
    for (grads, coeff) in potentials {
        for (v, g) in vx.iter_mut().zip(&grads.x) {
            *v += coeff * g;
        }
        for (v, g) in vy.iter_mut().zip(&grads.y) {
            *v += coeff * g;
        }
    }
    (vx, vy)
}

/// `−∇·(u a)` for face velocities `a`, upwinded.
fn upwind_divergence(u: &Field, vx: &[f64], vy: &[f64]) -> Field {
    let g = *u.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let (dx, dy) = (g.dx(), g.dy());
    let d = u.values();
    let mut out = Field::zeros(g);

    let upwind = |a: f64, left: f64, right: f64| if a >= 0.0 { a * left } else { a * right };
    {
        let o = out.values_mut();
        // x-normal faces: face i sits between cells i-1 and i
        for j in 0..ny {
            for i in 1..nx {
                let a = vx[i + j * (nx + 1)];
                if a == 0.0 {
                    continue;
                }
                let flux = upwind(a, d[i - 1 + j * nx], d[i + j * nx]) / dx;
                o[i - 1 + j * nx] -= flux;
                o[i + j * nx] += flux;
            }
        }
        for j in 1..ny {
            for i in 0..nx {
                let a = vy[i + j * nx];
                if a == 0.0 {
                    continue;
                }
                let flux = upwind(a, d[i + (j - 1) * nx], d[i + j * nx]) / dy;
                o[i + (j - 1) * nx] -= flux;
                o[i + j * nx] += flux;
            }
        }
    }
    out
}

/// Conservative upwind discretization of `−∇·(u · coeff ∇p)`.
pub fn taxis_divergence(u: &Field, potential: &Field, coeff: f64) -> Field {
    let grads = face_gradients(potential);
    let (vx, vy) = face_velocities(u.grid(), &[(&grads, coeff)]);
    upwind_divergence(u, &vx, &vy)
}

/// Largest per-cell outflow rate `Σ_out |a_f| / Δ_f`; explicit upwinding
/// stays positive while `dt` times this rate is below one.
fn max_outflow_rate(grid: &Grid, vx: &[f64], vy: &[f64]) -> f64 {
    let (nx, ny) = (grid.nx(), grid.ny());
    let (dx, dy) = (grid.dx(), grid.dy());
    let mut worst = 0.0f64;
    for j in 0..ny {
        for i in 0..nx {
            let left = vx[i + j * (nx + 1)];
            let right = vx[i + 1 + j * (nx + 1)];
            let down = vy[i + j * nx];
            let up = vy[i + (j + 1) * nx];
            let out_x = (-left).max(0.0) + right.max(0.0);
            let out_y = (-down).max(0.0) + up.max(0.0);
            worst = worst.max(out_x / dx + out_y / dy);
        }
    }
    worst
}

/// Diagonal Jacobian bound of the explicit reaction terms.
fn reaction_rate(model: &Model, state: &State) -> f64 {
    let kin = model.kinetics.as_ref();
    let alpha = model.params.alpha;
    let mut worst = 0.0f64;
    for k in 0..state.grid().len() {
        let p = point_at(state, k);
        let phi = kin.phi(p);
        let dphi = kin.phi_partials(p);
        let dpsi = kin.psi_partials(p);
        let rate_v = (-alpha * p.u + phi).abs() + p.v * dphi.v.abs();
        let rate_w = kin.psi(p).abs() + p.w * dpsi.w.abs();
        let r = kin
            .f_u(p)
            .abs()
            .max(kin.g_h(p).abs())
            .max(rate_v)
            .max(rate_w);
        worst = worst.max(r);
    }
    worst
}

#[inline]
fn point_at(state: &State, k: usize) -> Point {
    Point::new(
        state.u.values()[k],
        state.v.values()[k],
        state.w.values()[k],
        state.h.values()[k],
    )
}

fn check_finite(field: &Field, name: &'static str) -> Result<()> {
    match field.first_non_finite() {
        Some((i, j)) => Err(Error::NonFinite { field: name, i, j }),
        None => Ok(()),
    }
}

/// Resets values below `threshold` to zero, returning the removed area-weighted amount.
fn clip_below(field: &mut Field, threshold: f64) -> f64 {
    let area = field.grid().cell_area();
    let mut removed = 0.0;
    for x in field.values_mut() {
        if *x < threshold {
            removed += x.abs();
            *x = 0.0;
        }
    }
    removed * area
}

/// Advances `state` by one IMEX step.
///
/// The step size is the minimum of `dt_max`, the upwind CFL limit, the
/// reaction limit `0.1 / max(1, rate)` and the time left to `t_end`.
pub fn step(state: &State, model: &Model, cfg: &SolverConfig) -> Result<(State, StepReport)> {
    let grid = *state.grid();
    let mp = &model.params;
    let kin = model.kinetics.as_ref();

    let grad_h = face_gradients(&state.h);
    let grad_v = face_gradients(&state.v);
    let (vx, vy) = face_velocities(&grid, &[(&grad_h, mp.chi), (&grad_v, mp.xi)]);
    let max_face_speed = vx.iter().chain(&vy).fold(0.0f64, |m, a| m.max(a.abs()));

    let mut dt = cfg.dt_max;
    let outflow = max_outflow_rate(&grid, &vx, &vy);
    if outflow > 0.0 {
        dt = dt.min(cfg.cfl / outflow);
    }
    dt = dt.min(0.1 / reaction_rate(model, state).max(1.0));
    let remaining = cfg.t_end - state.t;
    if remaining > 0.0 {
        dt = dt.min(remaining);
    }

    // (a) explicit taxis and cell kinetics
    let taxis = upwind_divergence(&state.u, &vx, &vy);
    let mut u_star = state.u.clone();
    for (k, (x, tx)) in u_star
        .values_mut()
        .iter_mut()
        .zip(taxis.values())
        .enumerate()
    {
        *x += dt * (tx + kin.f(point_at(state, k)));
    }
    // (b) implicit diffusion of u
    let solve_u = implicit_diffusion(&u_star, mp.du, dt, cfg)?;

    // (c) explicit signal source, (d) implicit diffusion of h
    let mut h_star = state.h.clone();
    for (k, x) in h_star.values_mut().iter_mut().enumerate() {
        *x += dt * kin.g(point_at(state, k));
    }
    let solve_h = implicit_diffusion(&h_star, mp.dh, dt, cfg)?;

    // (e) pointwise tissue and producer updates from the start-of-step values
    let mut v = state.v.clone();
    let mut w = state.w.clone();
    let producer = kin.has_producer();
    for k in 0..grid.len() {
        let p = point_at(state, k);
        v.values_mut()[k] =
            p.v + dt * (-mp.alpha * p.u * p.v + p.v * kin.phi(p) + kin.tissue_source(p.w));
        w.values_mut()[k] = if producer {
            p.w + dt * (mp.beta * p.u + p.w * kin.psi(p))
        } else {
            0.0
        };
    }

    let mut u = solve_u.field;
    let mut h = solve_h.field;
    for (field, name) in [(&u, "u"), (&h, "h"), (&v, "v"), (&w, "w")] {
        check_finite(field, name)?;
    }

    // (f) clipping
    let clipped_mass = clip_below(&mut u, cfg.theta_clip)
        + clip_below(&mut h, cfg.theta_clip)
        + clip_below(&mut w, cfg.theta_clip);
    for x in v.values_mut() {
        *x = x.max(cfg.v_floor);
    }

    let report = StepReport {
        dt,
        iterations_u: solve_u.iterations,
        iterations_h: solve_h.iterations,
        clipped_mass,
        max_face_speed,
    };
    Ok((
        State {
            u,
            h,
            v,
            w,
            t: state.t + dt,
        },
        report,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BlowupStatus {
    None,
    Threshold,
    Growth,
}

/// Largest one-step growth of `‖u‖∞` tolerated before flagging blow-up.
pub const MAX_STEP_GROWTH: f64 = 10.0;

/// Flags `‖u‖∞ > blowup_threshold` or a one-step growth of `‖u‖∞` beyond
/// [`MAX_STEP_GROWTH`] relative to `previous_max`.
pub fn detect_blowup(state: &State, cfg: &SolverConfig, previous_max: Option<f64>) -> BlowupStatus {
    let current = state.u.max_abs();
    if current > cfg.blowup_threshold {
        return BlowupStatus::Threshold;
    }
    match previous_max {
        Some(prev) if prev > 0.0 && current / prev > MAX_STEP_GROWTH => BlowupStatus::Growth,
        _ => BlowupStatus::None,
    }
}
