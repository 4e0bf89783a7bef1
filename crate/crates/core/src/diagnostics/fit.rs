//! Empirical constants for `dF/dt + D/C ≤ C F + C` and for linear mass ODIs.

use serde::Serialize;

use crate::error::{Error, Result};

pub const C_MIN: f64 = 1e-3;
pub const C_MAX: f64 = 1e6;
/// Relative width of the final bisection bracket.
const REL_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", content = "c", rename_all = "snake_case")]
pub enum EnergyFit {
    Feasible(f64),
    /// No candidate up to [`C_MAX`] satisfies every sample.
    Infeasible,
}

impl EnergyFit {
    pub fn value(&self) -> Option<f64> {
        match *self {
            EnergyFit::Feasible(c) => Some(c),
            EnergyFit::Infeasible => None,
        }
    }
}

struct Sample {
    slope: f64,
    f: f64,
    d: f64,
}

fn interior_samples(series: &[(f64, f64, f64)]) -> Result<Vec<Sample>> {
    if series.len() < 3 {
        return Err(Error::Input(format!(
            "need at least 3 samples, got {}",
            series.len()
        )));
    }
    if let Some(k) = series.windows(2).position(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::Input(format!(
            "timestamps not strictly increasing at index {}",
            k + 1
        )));
    }
    Ok(series
        .windows(3)
        .map(|w| Sample {
            slope: (w[2].1 - w[0].1) / (w[2].0 - w[0].0),
            f: w[1].1,
            d: w[1].2,
        })
        .collect())
}

fn one_sided(a: (f64, f64, f64), b: (f64, f64, f64), at: (f64, f64, f64)) -> Sample {
    Sample {
        slope: (b.1 - a.1) / (b.0 - a.0),
        f: at.1,
        d: at.2,
    }
}

fn feasible(samples: &[Sample], c: f64) -> bool {
    samples.iter().all(|s| s.slope + s.d / c <= c * s.f + c)
}

/// Smallest `C ∈ [C_MIN, C_MAX]` with `F'(tᵢ) + Dᵢ/C ≤ C Fᵢ + C` at every
/// interior sample, `F'` by centered differences over the actual timestamps.
///
/// Decades are scanned upward; the first feasible decade is bisected and the
/// upper end of the final bracket is returned, so the result is always
/// feasible.
pub fn fit_energy_constant(series: &[(f64, f64, f64)]) -> Result<EnergyFit> {
    fit_samples(&interior_samples(series)?)
}

fn fit_samples(samples: &[Sample]) -> Result<EnergyFit> {
    if feasible(samples, C_MIN) {
        return Ok(EnergyFit::Feasible(C_MIN));
    }
    let mut lo = C_MIN;
    let mut hi = None;
    let mut c = C_MIN;
    while c < C_MAX {
        c *= 10.0;
        if feasible(samples, c) {
            hi = Some(c);
            break;
        }
        lo = c;
    }
    let Some(mut hi) = hi else {
        return Ok(EnergyFit::Infeasible);
    };
    while hi - lo > REL_TOL * hi {
        let mid = 0.5 * (lo + hi);
        if feasible(samples, mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(EnergyFit::Feasible(hi))
}

/// Rate `C` of `m' ≤ C m + C` fitted from `(t, m)` samples.
///
/// Same search as [`fit_energy_constant`] with `D ≡ 0`, plus one-sided
/// slopes at both ends so the first interval is covered too.
pub fn fit_growth_rate(series: &[(f64, f64)]) -> Result<EnergyFit> {
    let s: Vec<_> = series.iter().map(|&(t, m)| (t, m, 0.0)).collect();
    let mut samples = interior_samples(&s)?;
    let n = s.len();
    samples.push(one_sided(s[0], s[1], s[0]));
    samples.push(one_sided(s[n - 2], s[n - 1], s[n - 1]));
    fit_samples(&samples)
}

/// Solution of `m' = C m + C` from `m0`: `(m0 + 1) e^{C t} − 1`.
pub fn mass_envelope(m0: f64, rate: f64, t: f64) -> f64 {
    (m0 + 1.0) * (rate * t).exp() - 1.0
}

/// First `(t, m)` sample above `(1 + slack)` times the envelope, if any.
pub fn check_mass_envelope(series: &[(f64, f64)], rate: f64, slack: f64) -> Option<(f64, f64)> {
    let &(t0, m0) = series.first()?;
    series
        .iter()
        .copied()
        .find(|&(t, m)| m > (1.0 + slack) * mass_envelope(m0, rate, t - t0))
}
