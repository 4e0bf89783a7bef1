//! Go-or-grow model: migrating cells `u`, proliferating cells `w`, tissue
//! `v` and acidity `h`. Proliferation terms use squared positive parts.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{pos_sq, Kinetics, Model, ModelParams, Partials, Point};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoGrowParams {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub k4: f64,
    pub k5: f64,
    pub k6: f64,
    pub k7: f64,
    pub k8: f64,
    pub k9: f64,
}

impl GoGrowParams {
    fn rates(&self) -> [(&'static str, f64); 9] {
        [
            ("k1", self.k1),
            ("k2", self.k2),
            ("k3", self.k3),
            ("k4", self.k4),
            ("k5", self.k5),
            ("k6", self.k6),
            ("k7", self.k7),
            ("k8", self.k8),
            ("k9", self.k9),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in self.rates() {
            let strict = name == "k4" || name == "k6";
            let ok = value.is_finite() && if strict { value > 0.0 } else { value >= 0.0 };
            if !ok {
                let req = if strict { "positive" } else { "nonnegative" };
                return Err(Error::config(
                    format!("go_grow.{name}"),
                    format!("must be {req}, got {value}"),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoGrowKinetics {
    k: GoGrowParams,
}

/// Builds the go-or-grow kinetics and fixes `α := k5`, `β := k7`.
pub fn make_go_or_grow(params: ModelParams, gg: GoGrowParams) -> Result<Model> {
    gg.validate()?;
    let params = ModelParams {
        alpha: gg.k5,
        beta: gg.k7,
        ..params
    };
    params.validate()?;
    Ok(Model {
        params,
        kinetics: Arc::new(GoGrowKinetics { k: gg }),
    })
}

impl GoGrowKinetics {
    /// Logistic room for proliferating cells, `1 − u − v − w`.
    fn room(p: Point) -> f64 {
        1.0 - p.u - p.v - p.w
    }
}

impl Kinetics for GoGrowKinetics {
    fn name(&self) -> &str {
        "go_or_grow"
    }

    fn f(&self, p: Point) -> f64 {
        let hw = p.h * p.w;
        -self.k.k1 * p.u + self.k.k2 * hw / (1.0 + hw)
    }

    fn g(&self, p: Point) -> f64 {
        self.k.k3 * p.w - self.k.k4 * p.h
    }

    fn phi(&self, p: Point) -> f64 {
        -self.k.k5 * (p.h + p.w) + self.k.k6 * pos_sq(1.0 - p.v).0
    }

    fn tissue_source(&self, _w: f64) -> f64 {
        0.0
    }

    fn psi(&self, p: Point) -> f64 {
        -self.k.k8 * p.h + self.k.k9 * pos_sq(Self::room(p)).0
    }

    fn phi_partials(&self, p: Point) -> Partials {
        let (_, d) = pos_sq(1.0 - p.v);
        Partials {
            u: 0.0,
            v: -self.k.k6 * d,
            w: -self.k.k5,
            h: -self.k.k5,
        }
    }

    fn psi_partials(&self, p: Point) -> Partials {
        let (_, d) = pos_sq(Self::room(p));
        let room = -self.k.k9 * d;
        Partials {
            u: room,
            v: room,
            w: room,
            h: -self.k.k8,
        }
    }

    fn tissue_source_prime(&self, _w: f64) -> f64 {
        0.0
    }

    fn f_u(&self, _p: Point) -> f64 {
        -self.k.k1
    }

    fn g_h(&self, _p: Point) -> f64 {
        -self.k.k4
    }
}
