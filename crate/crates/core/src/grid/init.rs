use serde::{Deserialize, Serialize};

use super::{Field, Grid};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StripeOrientation {
    Vertical,
    Horizontal,
}

/// Evenly spaced bands of high tissue density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stripes {
    pub count: usize,
    pub width: f64,
    pub orientation: StripeOrientation,
}

impl Default for Stripes {
    fn default() -> Self {
        Self {
            count: 4,
            width: 0.1,
            orientation: StripeOrientation::Vertical,
        }
    }
}

impl Stripes {
    /// Stripe `k` is centered at `(k + ½) L / count` across the orientation axis.
    pub fn contains(&self, grid: &Grid, x: f64, y: f64) -> bool {
        let (coord, len) = match self.orientation {
            StripeOrientation::Vertical => (x, grid.lx()),
            StripeOrientation::Horizontal => (y, grid.ly()),
        };
        (0..self.count).any(|k| {
            let c = (k as f64 + 0.5) * len / self.count as f64;
            (coord - c).abs() < 0.5 * self.width
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Centers {
    pub u: [f64; 2],
    pub h: [f64; 2],
    pub w: [f64; 2],
}

impl Default for Centers {
    fn default() -> Self {
        Self {
            u: [0.5, 0.5],
            h: [0.5, 0.5],
            w: [0.5, 0.5],
        }
    }
}

/// Gaussian tumor and signal, annular producers, striped tissue.
///
/// Widths enter as variances: `u0 = exp(−|x−c|² / (2 ε_u))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialData {
    pub eps_u: f64,
    pub eps_h: f64,
    pub eps_w: f64,
    pub r0: f64,
    pub v_max: f64,
    pub v_min: f64,
    pub centers: Centers,
    pub stripes: Stripes,
}

impl Default for InitialData {
    fn default() -> Self {
        Self {
            eps_u: 0.05,
            eps_h: 0.1,
            eps_w: 0.01,
            r0: 0.5,
            v_max: 1.0,
            v_min: 0.2,
            centers: Centers::default(),
            stripes: Stripes::default(),
        }
    }
}

impl InitialData {
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("eps_u", self.eps_u),
            ("eps_h", self.eps_h),
            ("eps_w", self.eps_w),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::config(
                    format!("initial.{name}"),
                    format!("must be positive, got {value}"),
                ));
            }
        }
        if !(self.r0.is_finite() && self.r0 >= 0.0) {
            return Err(Error::config(
                "initial.r0",
                format!("must be nonnegative, got {}", self.r0),
            ));
        }
        if !(self.v_min > 0.0 && self.v_max >= self.v_min && self.v_max.is_finite()) {
            return Err(Error::config(
                "initial.v_min",
                format!(
                    "need v_max >= v_min > 0, got v_max {} v_min {}",
                    self.v_max, self.v_min
                ),
            ));
        }
        if !(self.stripes.width.is_finite() && self.stripes.width >= 0.0) {
            return Err(Error::config(
                "initial.stripes.width",
                "must be nonnegative",
            ));
        }
        Ok(())
    }

    /// Warns when the stripe set misses every cell or covers all of them.
    pub fn stripe_warning(&self, grid: &Grid) -> Option<String> {
        let inside = (0..grid.ny())
            .flat_map(|j| (0..grid.nx()).map(move |i| (i, j)))
            .filter(|&(i, j)| {
                let (x, y) = grid.center(i, j);
                self.stripes.contains(grid, x, y)
            })
            .count();
        if inside == 0 {
            Some("tissue stripe set contains no cells; v0 is uniformly v_min".into())
        } else if inside == grid.len() {
            Some("tissue stripe set covers the whole domain; v0 is uniformly v_max".into())
        } else {
            None
        }
    }
}

/// The four cell-centered fields and the simulation time.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub u: Field,
    pub h: Field,
    pub v: Field,
    pub w: Field,
    pub t: f64,
}

impl State {
    pub fn grid(&self) -> &Grid {
        self.u.grid()
    }

    pub fn fields(&self) -> [(&'static str, &Field); 4] {
        [
            ("u", &self.u),
            ("h", &self.h),
            ("v", &self.v),
            ("w", &self.w),
        ]
    }
}

fn gaussian(c: [f64; 2], eps: f64) -> impl Fn(f64, f64) -> f64 {
    move |x, y| {
        let r2 = (x - c[0]).powi(2) + (y - c[1]).powi(2);
        (-r2 / (2.0 * eps)).exp()
    }
}

/// Builds the initial state. Without a producer field `w0 ≡ 0`.
pub fn init_scenario(init: &InitialData, grid: Grid, with_producer: bool) -> Result<State> {
    init.validate()?;
    let u = Field::from_fn(grid, gaussian(init.centers.u, init.eps_u));
    let h = Field::from_fn(grid, gaussian(init.centers.h, init.eps_h));
    let v = Field::from_fn(grid, |x, y| {
        if init.stripes.contains(&grid, x, y) {
            init.v_max
        } else {
            init.v_min
        }
    });
    let w = if with_producer {
        let [cx, cy] = init.centers.w;
        Field::from_fn(grid, |x, y| {
            let r = ((x - cx).powi(2) + (y - cy).powi(2)).sqrt();
            (-(r - init.r0).powi(2) / (2.0 * init.eps_w)).exp()
        })
    } else {
        Field::zeros(grid)
    };
    Ok(State { u, h, v, w, t: 0.0 })
}
