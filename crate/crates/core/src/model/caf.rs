//! Tumor / fibroblast model with matrix-degrading signal, in its indirect
//! (fibroblast-produced signal) and direct (tumor-produced signal) forms.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Kinetics, Model, ModelParams, Partials, Point};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CafVariant {
    /// Signal produced by the non-motile fibroblasts `w`.
    Indirect,
    /// Signal produced by the tumor cells themselves; no `w` field.
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CafParams {
    pub mu: f64,
    pub eta: f64,
    pub alpha_h: f64,
    pub beta_v: f64,
    pub gamma_w: f64,
    pub variant: CafVariant,
}

impl CafParams {
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("mu", self.mu),
            ("eta", self.eta),
            ("alpha_h", self.alpha_h),
            ("beta_v", self.beta_v),
            ("gamma_w", self.gamma_w),
        ] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::config(
                    format!("caf.{name}"),
                    format!("must be nonnegative, got {value}"),
                ));
            }
        }
        if self.variant == CafVariant::Direct && (self.beta_v != 0.0 || self.gamma_w != 0.0) {
            return Err(Error::config(
                "caf.variant",
                "the direct variant has no producer field; beta_v and gamma_w must be 0",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CafKinetics {
    params: CafParams,
}

impl CafKinetics {
    pub fn params(&self) -> &CafParams {
        &self.params
    }
}

/// Builds the CAF kinetics and fixes `α := η`, `β := γ_w` in the returned
/// parameters.
pub fn make_caf(params: ModelParams, caf: CafParams) -> Result<Model> {
    caf.validate()?;
    let params = ModelParams {
        alpha: caf.eta,
        beta: caf.gamma_w,
        ..params
    };
    params.validate()?;
    Ok(Model {
        params,
        kinetics: Arc::new(CafKinetics { params: caf }),
    })
}

impl Kinetics for CafKinetics {
    fn name(&self) -> &str {
        match self.params.variant {
            CafVariant::Indirect => "caf_indirect",
            CafVariant::Direct => "caf_direct",
        }
    }

    fn f(&self, p: Point) -> f64 {
        self.params.mu * p.u * (1.0 - p.u - p.v - p.w)
    }

    fn g(&self, p: Point) -> f64 {
        let source = match self.params.variant {
            CafVariant::Indirect => p.w,
            CafVariant::Direct => p.u,
        };
        -p.h + self.params.alpha_h * source
    }

    fn phi(&self, p: Point) -> f64 {
        self.params.eta * (1.0 - p.v) - p.h
    }

    fn tissue_source(&self, w: f64) -> f64 {
        self.params.beta_v * w / (1.0 + w)
    }

    fn psi(&self, _p: Point) -> f64 {
        0.0
    }

    fn phi_partials(&self, _p: Point) -> Partials {
        Partials {
            u: 0.0,
            v: -self.params.eta,
            w: 0.0,
            h: -1.0,
        }
    }

    fn psi_partials(&self, _p: Point) -> Partials {
        Partials::default()
    }

    fn tissue_source_prime(&self, w: f64) -> f64 {
        let d = 1.0 + w;
        self.params.beta_v / (d * d)
    }

    fn f_u(&self, p: Point) -> f64 {
        self.params.mu * (1.0 - 2.0 * p.u - p.v - p.w)
    }

    fn g_h(&self, _p: Point) -> f64 {
        -1.0
    }

    fn has_producer(&self) -> bool {
        self.params.variant == CafVariant::Indirect
    }
}
