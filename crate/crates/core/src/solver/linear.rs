//! Matrix-free conjugate gradients for `(I − dt D Δ_N) x = f`.

use super::SolverConfig;
use crate::error::{Error, Result};
use crate::grid::{laplacian_into, Field};

/// Solves below this `dt·D / min(dx,dy)²` are skipped as identity.
pub const SKIP_RATIO: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct DiffusionSolve {
    pub field: Field,
    pub iterations: usize,
    /// Final `‖f − A x‖ / ‖f‖`.
    pub residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Applies `A x = x − c Δ_N x` into `out`.
fn apply(x: &Field, c: f64, lap: &mut Field, out: &mut [f64]) {
    laplacian_into(x, lap);
    for ((o, xi), li) in out.iter_mut().zip(x.values()).zip(lap.values()) {
        *o = xi - c * li;
    }
}

/// One backward-Euler diffusion step with the Neumann Laplacian.
///
/// Starts from `x₀ = f`; the initial residual then has zero mean, and so do
/// all later residuals, which keeps the solve mass conservative.
pub fn implicit_diffusion(
    f: &Field,
    diffusivity: f64,
    dt: f64,
    cfg: &SolverConfig,
) -> Result<DiffusionSolve> {
    let g = *f.grid();
    let c = dt * diffusivity;
    let h_min = g.dx().min(g.dy());
    if c / (h_min * h_min) < SKIP_RATIO {
        return Ok(DiffusionSolve {
            field: f.clone(),
            iterations: 0,
            residual: 0.0,
        });
    }

    let b = f.values();
    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        return Ok(DiffusionSolve {
            field: f.clone(),
            iterations: 0,
            residual: 0.0,
        });
    }

    let n = g.len();
    let mut x = f.clone();
    let mut lap = Field::zeros(g);
    let mut ap = vec![0.0; n];
    apply(&x, c, &mut lap, &mut ap);
    let mut r: Vec<f64> = b.iter().zip(&ap).map(|(bi, ai)| bi - ai).collect();
    let mut p = Field::from_vec(g, r.clone())?;
    let mut rr = dot(&r, &r);
    let target = cfg.lin_tol * b_norm;

    let mut iterations = 0;
    while rr.sqrt() > target {
        if iterations == cfg.lin_maxiter {
            return Err(Error::LinearSolve {
                iterations,
                residual: rr.sqrt() / b_norm,
            });
        }
        apply(&p, c, &mut lap, &mut ap);
        let alpha = rr / dot(p.values(), &ap);
        for ((xi, pi), (ri, ai)) in x
            .values_mut()
            .iter_mut()
            .zip(p.values())
            .zip(r.iter_mut().zip(&ap))
        {
            *xi += alpha * pi;
            *ri -= alpha * ai;
        }
        let rr_next = dot(&r, &r);
        let beta = rr_next / rr;
        for (pi, ri) in p.values_mut().iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
        rr = rr_next;
        iterations += 1;
    }

    Ok(DiffusionSolve {
        field: x,
        iterations,
        residual: rr.sqrt() / b_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{integrate, Grid};
    use std::f64::consts::PI;

    fn cfg() -> SolverConfig {
        SolverConfig::with_horizon(1.0)
    }

    #[test]
    fn zero_diffusion_is_identity() {
        let g = Grid::unit(8, 8).unwrap();
        let f = Field::from_fn(g, |x, y| x * y);
        let s = implicit_diffusion(&f, 0.0, 0.1, &cfg()).unwrap();
        assert_eq!(s.field, f);
        assert_eq!(s.iterations, 0);
    }

    #[test]
    fn tiny_diffusivity_skipped() {
        let g = Grid::unit(64, 64).unwrap();
        let f = Field::from_fn(g, |x, _| x);
        let s = implicit_diffusion(&f, 1e-10, 1e-3, &cfg()).unwrap();
        assert_eq!(s.field, f);
    }

    #[test]
    fn constants_are_fixed_points() {
        let g = Grid::unit(10, 10).unwrap();
        let f = Field::constant(g, 2.5);
        let s = implicit_diffusion(&f, 1.0, 0.3, &cfg()).unwrap();
        for x in s.field.values() {
            assert!((x - 2.5).abs() < 1e-12);
        }
    }

    #[test]
    fn discrete_eigenmode_decay() {
        let nx = 64;
        let g = Grid::new(nx, 1, 1.0, 1.0).unwrap();
        let (d, dt) = (0.7, 0.01);
        for k in [1usize, 3, 7] {
            let f = Field::from_vec(
                g,
                (0..nx)
                    .map(|i| (PI * k as f64 * (i as f64 + 0.5) / nx as f64).cos())
                    .collect(),
            )
            .unwrap();
            let mu = 2.0 * (1.0 - (PI * k as f64 / nx as f64).cos()) / (g.dx() * g.dx());
            let s = implicit_diffusion(&f, d, dt, &cfg()).unwrap();
            for (x, fi) in s.field.values().iter().zip(f.values()) {
                assert!((x - fi / (1.0 + dt * d * mu)).abs() <= 1e-10 * f.max_abs());
            }
        }
    }

    #[test]
    fn conserves_mass() {
        let g = Grid::unit(24, 24).unwrap();
        let f = Field::from_fn(g, |x, y| {
            (-(x - 0.3).powi(2) / 0.01 - (y - 0.6).powi(2) / 0.02).exp()
        });
        let s = implicit_diffusion(&f, 0.1, 0.05, &cfg()).unwrap();
        let (m0, m1) = (integrate(&f), integrate(&s.field));
        assert!((m1 - m0).abs() <= 10.0 * 1e-10 * m0);
        assert!(s.residual <= 1e-10);
    }

    #[test]
    fn iteration_cap_is_an_error() {
        let g = Grid::unit(32, 32).unwrap();
        let f = Field::from_fn(g, |x, y| (x * 9.0).sin() * y);
        let tight = SolverConfig {
            lin_maxiter: 2,
            ..cfg()
        };
        match implicit_diffusion(&f, 1.0, 1.0, &tight) {
            Err(Error::LinearSolve {
                iterations,
                residual,
            }) => {
                assert_eq!(iterations, 2);
                assert!(residual > 1e-10);
            }
            other => panic!("expected LinearSolve error, got {other:?}"),
        }
    }
}
