//! Reaction kinetics of the four-component taxis system
//!
//! ```text
//! u_t = D_u Δu − χ∇·(u∇h) − ξ∇·(u∇v) + f(u,v,w,h)
//! h_t = D_h Δh + g(u,v,w,h)
//! v_t = −α u v + v φ(u,v,w,h) + Φ(w)
//! w_t = β u + w ψ(u,v,w,h)
//! ```
//!
//! A [`Kinetics`] implementation supplies `f`, `g`, `φ`, `Φ`, `ψ` and the
//! partial derivatives the structural checker needs. The built-in models
//! live in [`caf`] and [`go_grow`]; new models plug in by implementing the
//! trait.

pub mod caf;
pub mod go_grow;
pub mod hypotheses;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use caf::{make_caf, CafKinetics, CafParams, CafVariant};
pub use go_grow::{make_go_or_grow, GoGrowKinetics, GoGrowParams};
pub use hypotheses::{
    check_hypotheses, CheckBox, Condition, ConditionResult, Failure, FailureKind, HypothesisBudget,
    HypothesisReport, LowerEnvelope,
};

/// A point `(u, v, w, h)` of the state space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub u: f64,
    pub v: f64,
    pub w: f64,
    pub h: f64,
}

impl Point {
    pub const fn new(u: f64, v: f64, w: f64, h: f64) -> Self {
        Self { u, v, w, h }
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite() && self.w.is_finite() && self.h.is_finite()
    }
}

/// First partial derivatives with respect to `(u, v, w, h)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Partials {
    pub u: f64,
    pub v: f64,
    pub w: f64,
    pub h: f64,
}

impl Partials {
    pub fn as_array(&self) -> [f64; 4] {
        [self.u, self.v, self.w, self.h]
    }
}

/// Scalar coefficients of the transport and linear coupling terms.
///
/// `alpha` and `beta` are set by the model builders from the model-specific
/// rates, so they may be zero (e.g. the direct-production model has no
/// producer activation).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub chi: f64,
    pub xi: f64,
    pub alpha: f64,
    pub beta: f64,
    #[serde(rename = "Du")]
    pub du: f64,
    #[serde(rename = "Dh")]
    pub dh: f64,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("chi", self.chi),
            ("xi", self.xi),
            ("Du", self.du),
            ("Dh", self.dh),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::config(
                    format!("model_params.{name}"),
                    format!("must be positive, got {value}"),
                ));
            }
        }
        for (name, value) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::config(
                    format!("model_params.{name}"),
                    format!("must be nonnegative, got {value}"),
                ));
            }
        }
        Ok(())
    }

    /// Exponent of the `z = u e^{-λ v}` substitution, `λ = ξ / D_u`.
    pub fn lambda(&self) -> f64 {
        self.xi / self.du
    }
}

/// Pluggable kinetics of the four-component system.
///
/// Every evaluator must be finite on `[0, B]^4` for finite `B`. The methods
/// are pure; implementations are shared across worker threads.
pub trait Kinetics: Send + Sync {
    fn name(&self) -> &str;

    /// Cell kinetics `f`.
    fn f(&self, p: Point) -> f64;
    /// Signal kinetics `g`.
    fn g(&self, p: Point) -> f64;
    /// Per-capita tissue rate `φ`.
    fn phi(&self, p: Point) -> f64;
    /// Tissue source `Φ(w)`.
    fn tissue_source(&self, w: f64) -> f64;
    /// Per-capita producer rate `ψ`.
    fn psi(&self, p: Point) -> f64;

    fn phi_partials(&self, p: Point) -> Partials;
    fn psi_partials(&self, p: Point) -> Partials;
    fn tissue_source_prime(&self, w: f64) -> f64;

    /// `∂f/∂u`, used only for time step control.
    fn f_u(&self, p: Point) -> f64;
    /// `∂g/∂h`, used only for time step control.
    fn g_h(&self, p: Point) -> f64;

    /// Whether the producer field `w` is part of the model. When false the
    /// solver keeps `w ≡ 0`.
    fn has_producer(&self) -> bool {
        true
    }
}

/// A kinetics instance together with the coefficients it fixes.
#[derive(Clone)]
pub struct Model {
    pub params: ModelParams,
    pub kinetics: Arc<dyn Kinetics>,
}

impl std::fmt::Debug for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Model")
            .field("params", &self.params)
            .field("kinetics", &self.kinetics.name())
            .finish()
    }
}

/// Central-difference partials of `φ`, `ψ` and `Φ'`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiniteDiffPartials {
    pub phi: Partials,
    pub psi: Partials,
    pub tissue_source_prime: f64,
}

/// Cross-checks the analytic partials of a [`Kinetics`].
///
/// Requires every coordinate of `point` to be at least `step` so that the
/// stencil stays inside the nonnegative orthant.
pub fn finite_diff_partials(
    kin: &dyn Kinetics,
    point: Point,
    step: f64,
) -> Result<FiniteDiffPartials> {
    if !(step > 0.0) {
        return Err(Error::Input(format!(
            "finite-difference step must be positive, got {step}"
        )));
    }
    let coords = [point.u, point.v, point.w, point.h];
    if coords.iter().any(|&c| c < step) {
        return Err(Error::Input(format!(
            "point {point:?} lies within one step of the boundary"
        )));
    }

    let shifted = |axis: usize, delta: f64| {
        let mut c = coords;
        c[axis] += delta;
        Point::new(c[0], c[1], c[2], c[3])
    };
    let central = |eval: &dyn Fn(Point) -> f64| {
        let mut out = [0.0; 4];
        for (axis, slot) in out.iter_mut().enumerate() {
            *slot = (eval(shifted(axis, step)) - eval(shifted(axis, -step))) / (2.0 * step);
        }
        Partials {
            u: out[0],
            v: out[1],
            w: out[2],
            h: out[3],
        }
    };

    Ok(FiniteDiffPartials {
        phi: central(&|p| kin.phi(p)),
        psi: central(&|p| kin.psi(p)),
        tissue_source_prime: (kin.tissue_source(point.w + step)
            - kin.tissue_source(point.w - step))
            / (2.0 * step),
    })
}

/// `max(x, 0)²` and its derivative `2 max(x, 0)`.
#[inline]
pub(crate) fn pos_sq(x: f64) -> (f64, f64) {
    let p = x.max(0.0);
    (p * p, 2.0 * p)
}
