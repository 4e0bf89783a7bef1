//! Functionals monitored along trajectories: masses, entropy, weighted
//! Dirichlet integrals, the quasi-energy `F` and its dissipation `D`, plus
//! checks of the computable a priori bounds.

mod fit;
pub mod timeseries;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{face_gradients, integrate, laplacian_neumann, Field, State};
use crate::model::{HypothesisBudget, ModelParams};

pub use fit::{
    check_mass_envelope, fit_energy_constant, fit_growth_rate, mass_envelope, EnergyFit, C_MAX,
    C_MIN,
};

/// `∫ u ln u`, with `0 ln 0 = 0`.
pub fn entropy(u: &Field) -> f64 {
    let s: f64 = u
        .values()
        .iter()
        .map(|&x| if x > 0.0 { x * x.ln() } else { 0.0 })
        .sum();
    s * u.grid().cell_area()
}

/// Weight of a Dirichlet integral `∫ |∇f|² / g`.
#[derive(Debug, Clone, Copy)]
pub enum Weight<'a> {
    /// `g ≡ 1`.
    Unit,
    /// `g = f`.
    SelfWeight,
    External(&'a Field),
}

/// Face-based `∫ |∇f|² / g`.
///
/// Each axis contributes `|Ω|` times the mean over its interior faces of
/// `(∂f/∂n)² / max(ḡ, floor)`, where `ḡ` is the arithmetic mean of the two
/// adjacent cells. Linear profiles are integrated exactly.
pub fn weighted_dirichlet(f: &Field, weight: Weight<'_>, floor: f64) -> f64 {
    let g = *f.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let grads = face_gradients(f);
    let wv: Option<&[f64]> = match weight {
        Weight::Unit => None,
        Weight::SelfWeight => Some(f.values()),
        Weight::External(w) => Some(w.values()),
    };
    let face_weight = |a: usize, b: usize| match wv {
        None => 1.0,
        Some(w) => (0.5 * (w[a] + w[b])).max(floor),
    };

    let mut total = 0.0;
    if nx > 1 {
        let mut sum = 0.0;
        for j in 0..ny {
            for i in 1..nx {
                let d = grads.x_face(i, j);
                if d != 0.0 {
                    sum += d * d / face_weight(g.index(i - 1, j), g.index(i, j));
                }
            }
        }
        total += sum * g.area() / ((nx - 1) * ny) as f64;
    }
    if ny > 1 {
        let mut sum = 0.0;
        for j in 1..ny {
            for i in 0..nx {
                let d = grads.y_face(i, j);
                if d != 0.0 {
                    sum += d * d / face_weight(g.index(i, j - 1), g.index(i, j));
                }
            }
        }
        total += sum * g.area() / (nx * (ny - 1)) as f64;
    }
    total
}

fn default_a() -> f64 {
    1.0
}

/// Weights of the quasi-energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuasiEnergyConfig {
    pub a: f64,
    pub b: f64,
    pub xi: f64,
    pub alpha: f64,
    pub v_floor: f64,
    pub w_floor: f64,
}

impl QuasiEnergyConfig {
    /// Default `b`: `min(D_u / (4(β+1)), ξ c_φ / (4α))` with a budget, else 0.01.
    pub fn default_b(params: &ModelParams, budget: Option<&HypothesisBudget>) -> f64 {
        match budget {
            Some(b) if params.alpha > 0.0 => (params.du / (4.0 * (params.beta + 1.0)))
                .min(params.xi * b.phi_decay / (4.0 * params.alpha)),
            Some(_) => params.du / (4.0 * (params.beta + 1.0)),
            None => 0.01,
        }
    }

    pub fn new(
        params: &ModelParams,
        a: Option<f64>,
        b: Option<f64>,
        budget: Option<&HypothesisBudget>,
    ) -> Result<Self> {
        let qc = Self {
            a: a.unwrap_or_else(default_a),
            b: b.unwrap_or_else(|| Self::default_b(params, budget)),
            xi: params.xi,
            alpha: params.alpha,
            v_floor: 1e-12,
            w_floor: 1e-12,
        };
        qc.validate()?;
        Ok(qc)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(Error::config(
                "quasi_energy.a",
                format!("must be positive, got {}", self.a),
            ));
        }
        if !(self.b > 0.0 && self.b.is_finite()) {
            return Err(Error::config(
                "quasi_energy.b",
                format!("must be positive, got {}", self.b),
            ));
        }
        Ok(())
    }

    /// `ξ / (2α)`; zero when there is no tissue degradation.
    pub fn tissue_weight(&self) -> f64 {
        if self.alpha > 0.0 {
            self.xi / (2.0 * self.alpha)
        } else {
            0.0
        }
    }
}

/// The individual terms of `F` and `D`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyTerms {
    pub entropy_u: f64,
    pub dirichlet_h: f64,
    pub dirichlet_v: f64,
    pub dirichlet_w: f64,
    pub l2_w: f64,
    pub fisher_u: f64,
    pub laplacian_h: f64,
}

impl EnergyTerms {
    pub fn compute(state: &State, qc: &QuasiEnergyConfig) -> Self {
        let lap_h = laplacian_neumann(&state.h);
        Self {
            entropy_u: entropy(&state.u),
            dirichlet_h: weighted_dirichlet(&state.h, Weight::Unit, 0.0),
            dirichlet_v: weighted_dirichlet(&state.v, Weight::SelfWeight, qc.v_floor),
            dirichlet_w: weighted_dirichlet(&state.w, Weight::SelfWeight, qc.w_floor),
            l2_w: state.w.dot(&state.w),
            fisher_u: weighted_dirichlet(&state.u, Weight::SelfWeight, qc.w_floor),
            laplacian_h: lap_h.dot(&lap_h),
        }
    }

    pub fn energy(&self, qc: &QuasiEnergyConfig) -> f64 {
        self.entropy_u
            + qc.a * self.dirichlet_h
            + qc.tissue_weight() * self.dirichlet_v
            + qc.b * self.dirichlet_w
            + self.l2_w
    }

    pub fn dissipation(&self) -> f64 {
        self.fisher_u + self.laplacian_h
    }
}

/// `(F, D)`.
pub fn quasi_energy(state: &State, qc: &QuasiEnergyConfig) -> (f64, f64) {
    let terms = EnergyTerms::compute(state, qc);
    (terms.energy(qc), terms.dissipation())
}

/// Solver statistics attached to a diagnostics row.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RowStats {
    pub dt: f64,
    pub clipped_mass: f64,
    pub lin_iterations: usize,
}

/// One time sample of every monitored functional.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiagnosticsRow {
    pub t: f64,
    pub mass_u: f64,
    pub mass_w: f64,
    pub mass_h: f64,
    pub max_u: f64,
    pub max_h: f64,
    pub max_v: f64,
    pub max_w: f64,
    pub min_v: f64,
    pub entropy_u: f64,
    pub dirichlet_h: f64,
    pub dirichlet_v: f64,
    pub dirichlet_w: f64,
    pub l2_w: f64,
    #[serde(rename = "F")]
    pub energy: f64,
    #[serde(rename = "D")]
    pub dissipation: f64,
    pub dt: f64,
    pub clipped_mass: f64,
    pub lin_iterations: usize,
}

impl DiagnosticsRow {
    pub fn compute(state: &State, qc: &QuasiEnergyConfig, stats: RowStats) -> Self {
        let terms = EnergyTerms::compute(state, qc);
        Self {
            t: state.t,
            mass_u: integrate(&state.u),
            mass_w: integrate(&state.w),
            mass_h: integrate(&state.h),
            max_u: state.u.max_abs(),
            max_h: state.h.max_abs(),
            max_v: state.v.max_abs(),
            max_w: state.w.max_abs(),
            min_v: state.v.min(),
            entropy_u: terms.entropy_u,
            dirichlet_h: terms.dirichlet_h,
            dirichlet_v: terms.dirichlet_v,
            dirichlet_w: terms.dirichlet_w,
            l2_w: terms.l2_w,
            energy: terms.energy(qc),
            dissipation: terms.dissipation(),
            dt: stats.dt,
            clipped_mass: stats.clipped_mass,
            lin_iterations: stats.lin_iterations,
        }
    }
}

/// Outcome of a bound check over a time series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundCheck {
    pub passed: bool,
    pub first_violation: Option<f64>,
}

/// Checks `‖v(t)‖∞ ≤ (1 + slack)(v0_max + C_Φ / C_φ) e^{C_φ t}`.
pub fn v_bound_check(
    series: &[(f64, f64)],
    v0_max: f64,
    c_phi: f64,
    c_source: f64,
    slack: f64,
) -> Result<BoundCheck> {
    if !(c_phi > 0.0) {
        return Err(Error::Input(format!("C_phi must be positive, got {c_phi}")));
    }
    let first_violation = series
        .iter()
        .find(|&&(t, v)| v > (1.0 + slack) * (v0_max + c_source / c_phi) * (c_phi * t).exp())
        .map(|&(t, _)| t);
    Ok(BoundCheck {
        passed: first_violation.is_none(),
        first_violation,
    })
}

/// `λ ‖v‖∞` at or above which `e^{−λ v}` is not evaluated.
pub const Z_EXPONENT_LIMIT: f64 = 700.0;

#[derive(Debug, Clone, PartialEq)]
pub enum ZTransform {
    Field(Field),
    /// `λ ‖v‖∞` too large for a meaningful `e^{−λ v}`.
    Skipped {
        exponent: f64,
    },
}

/// `z = u e^{−λ v}` cellwise.
pub fn z_transform(state: &State, lambda: f64) -> ZTransform {
    let exponent = lambda * state.v.max_abs();
    if !(exponent < Z_EXPONENT_LIMIT) {
        return ZTransform::Skipped { exponent };
    }
    let data = state
        .u
        .values()
        .iter()
        .zip(state.v.values())
        .map(|(u, v)| u * (-lambda * v).exp())
        .collect();
    ZTransform::Field(Field::from_vec(*state.grid(), data).expect("same grid"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use std::f64::consts::E;

    fn unit(n: usize) -> Grid {
        Grid::unit(n, n).unwrap()
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn entropy_examples() {
        let g = unit(8);
        assert_eq!(entropy(&Field::constant(g, 1.0)), 0.0);
        assert!((entropy(&Field::constant(g, E)) - E).abs() < 1e-14);
        let half = Field::from_fn(g, |x, _| if x < 0.5 { 2.0 } else { 0.0 });
        assert!((entropy(&half) - 2f64.ln()).abs() < 1e-14);
        assert!((entropy(&half) - 0.693147).abs() < 1e-6);
    }

    #[test]
    fn dirichlet_examples() {
        let g = unit(16);
        assert_eq!(
            weighted_dirichlet(&Field::constant(g, 3.0), Weight::SelfWeight, 1e-12),
            0.0
        );
        let f = Field::from_fn(g, |x, _| x);
        assert!((weighted_dirichlet(&f, Weight::Unit, 0.0) - 1.0).abs() < 1e-12);
        let two = Field::constant(g, 2.0);
        assert!((weighted_dirichlet(&f, Weight::External(&two), 1e-12) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn constant_state_energy() {
        let g = unit(10);
        let c = 0.7;
        let state = State {
            u: Field::constant(g, 1.0),
            h: Field::constant(g, 0.3),
            v: Field::constant(g, 0.9),
            w: Field::constant(g, c),
            t: 0.0,
        };
        let mp = ModelParams {
            chi: 0.6,
            xi: 0.5,
            alpha: 10.6,
            beta: 1.0,
            du: 1e-10,
            dh: 0.1,
        };
        let qc = QuasiEnergyConfig::new(&mp, None, None, None).unwrap();
        let (f, d) = quasi_energy(&state, &qc);
        assert!((f - c * c).abs() < 1e-14);
        assert_eq!(d, 0.0);
    }

    #[test]
    fn absent_producers_contribute_nothing() {
        let g = unit(6);
        let zero = Field::zeros(g);
        assert_eq!(weighted_dirichlet(&zero, Weight::SelfWeight, 1e-12), 0.0);
    }

    #[test]
    fn default_b_uses_budget() {
        let mp = ModelParams {
            chi: 0.6,
            xi: 0.5,
            alpha: 10.6,
            beta: 1.0,
            du: 1.0,
            dh: 0.1,
        };
        assert_eq!(QuasiEnergyConfig::default_b(&mp, None), 0.01);
        let budget = HypothesisBudget {
            phi_decay: 0.1,
            phi_bound: 10.6,
            source_bound: 1.0,
            psi_exponent: 0.25,
            f_bound: 1.0,
            g_bound: 5.0,
            psi_bound: 1.0,
            f0: Default::default(),
        };
        let b = QuasiEnergyConfig::default_b(&mp, Some(&budget));
        assert_eq!(b, (1.0f64 / 8.0).min(0.5 * 0.1 / (4.0 * 10.6)));
    }

    #[test]
    fn v_bound_examples() {
        // non-increasing tissue passes for any positive rate
        let flat: Vec<_> = (0..10).map(|k| (k as f64 * 0.1, 1.0)).collect();
        for c_phi in [1e-3, 1.0, 10.6] {
            assert!(v_bound_check(&flat, 1.0, c_phi, 0.0, 0.0).unwrap().passed);
        }
        // v = 2 v0 e^{2Cφ t} crosses (1+s)(v0 + CΦ/Cφ) e^{Cφ t} once
        // 2 e^{Cφ t} > (1+s)(1 + CΦ/(Cφ v0)), i.e. t* = ln((1+s)(1 + CΦ/(Cφ v0))/2) / Cφ
        let (v0, c_phi, c_src, slack): (f64, f64, f64, f64) = (1.0, 2.0, 3.0, 0.05);
        let t_star = ((1.0 + slack) * (1.0 + c_src / (c_phi * v0)) / 2.0).ln() / c_phi;
        let dt = 0.01;
        let series: Vec<_> = (0..200)
            .map(|k| {
                (
                    k as f64 * dt,
                    2.0 * v0 * (2.0 * c_phi * k as f64 * dt).exp(),
                )
            })
            .collect();
        let check = v_bound_check(&series, v0, c_phi, c_src, slack).unwrap();
        assert!(!check.passed);
        let expected = ((t_star / dt).floor() + 1.0) * dt;
        assert!((check.first_violation.unwrap() - expected).abs() < 1e-12);
        assert!(v_bound_check(&series, v0, 0.0, c_src, slack).is_err());
    }

    #[test]
    fn z_transform_examples() {
        let g = unit(4);
        let state = State {
            u: Field::constant(g, 1.0),
            h: Field::zeros(g),
            v: Field::constant(g, 1.0),
            w: Field::zeros(g),
            t: 0.0,
        };
        assert_eq!(z_transform(&state, 0.0), ZTransform::Field(state.u.clone()));
        match z_transform(&state, 1.0) {
            ZTransform::Field(z) => assert!(z
                .values()
                .iter()
                .all(|&x| (x - (-1f64).exp()).abs() < 1e-15)),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            z_transform(&state, 5e9),
            ZTransform::Skipped { .. }
        ));
    }
}
