//! Uniform cell-centered grid, fields and the discrete Neumann operators.
//!
//! Cells are indexed row-major, `k = i + j·nx`, with centers at
//! `((i+½)dx, (j+½)dy)`. Boundary faces carry zero normal flux.

mod init;
pub mod snapshot;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use init::{init_scenario, Centers, InitialData, State, StripeOrientation, Stripes};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
}

impl Grid {
    /// A grid with `nx × ny` cells on `[0,lx]×[0,ly]`.
    ///
    /// One-dimensional configurations (`ny = 1`) are accepted; scenario
    /// configs apply the stricter two-dimensional minimum.
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        if nx == 0 || ny == 0 || nx * ny < 2 {
            return Err(Error::config(
                "grid",
                format!("need at least two cells, got {nx}x{ny}"),
            ));
        }
        if !(lx.is_finite() && lx > 0.0 && ly.is_finite() && ly > 0.0) {
            return Err(Error::config(
                "grid",
                format!("domain lengths must be positive, got {lx}x{ly}"),
            ));
        }
        Ok(Self { nx, ny, lx, ly })
    }

    pub fn unit(nx: usize, ny: usize) -> Result<Self> {
        Self::new(nx, ny, 1.0, 1.0)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn lx(&self) -> f64 {
        self.lx
    }

    pub fn ly(&self) -> f64 {
        self.ly
    }

    pub fn dx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.dx() * self.dy()
    }

    pub fn area(&self) -> f64 {
        self.lx * self.ly
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i + j * self.nx
    }

    pub fn center(&self, i: usize, j: usize) -> (f64, f64) {
        ((i as f64 + 0.5) * self.dx(), (j as f64 + 0.5) * self.dy())
    }

    /// Number of faces normal to x, boundary included.
    pub fn x_faces(&self) -> usize {
        (self.nx + 1) * self.ny
    }

    /// Number of faces normal to y, boundary included.
    pub fn y_faces(&self) -> usize {
        self.nx * (self.ny + 1)
    }
}

/// One scalar per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    data: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        Self {
            grid,
            data: vec![value; grid.len()],
        }
    }

    pub fn from_vec(grid: Grid, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::Input(format!(
                "field has {} values, grid has {} cells",
                data.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, data })
    }

    /// Samples `f(x, y)` at the cell centers.
    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut data = Vec::with_capacity(grid.len());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let (x, y) = grid.center(i, j);
                data.push(f(x, y));
            }
        }
        Self { grid, data }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_values(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.grid.index(i, j)]
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Area-weighted inner product `Σ f g dx dy`.
    pub fn dot(&self, other: &Field) -> f64 {
        debug_assert_eq!(self.grid, other.grid);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            * self.grid.cell_area()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            grid: self.grid,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    /// Position of the first non-finite value.
    pub fn first_non_finite(&self) -> Option<(usize, usize)> {
        self.data
            .iter()
            .position(|x| !x.is_finite())
            .map(|k| (k % self.grid.nx, k / self.grid.nx))
    }
}

/// Normal derivatives on every face. Boundary faces hold 0.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceGradients {
    grid: Grid,
    /// Face left of cell `(i, j)` at `i + j (nx+1)`, `i ∈ 0..=nx`.
    pub x: Vec<f64>,
    /// Face below cell `(i, j)` at `i + j nx`, `j ∈ 0..=ny`.
    pub y: Vec<f64>,
}

impl FaceGradients {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn x_face(&self, i: usize, j: usize) -> f64 {
        self.x[i + j * (self.grid.nx + 1)]
    }

    #[inline]
    pub fn y_face(&self, i: usize, j: usize) -> f64 {
        self.y[i + j * self.grid.nx]
    }
}

pub fn face_gradients(f: &Field) -> FaceGradients {
    let g = f.grid;
    let (nx, ny) = (g.nx, g.ny);
    let (dx, dy) = (g.dx(), g.dy());
    let d = &f.data;

    let mut x = vec![0.0; g.x_faces()];
    for j in 0..ny {
        for i in 1..nx {
            x[i + j * (nx + 1)] = (d[i + j * nx] - d[i - 1 + j * nx]) / dx;
        }
    }
    let mut y = vec![0.0; g.y_faces()];
    for j in 1..ny {
        for i in 0..nx {
            y[i + j * nx] = (d[i + j * nx] - d[i + (j - 1) * nx]) / dy;
        }
    }
    FaceGradients { grid: g, x, y }
}

/// Five-point Laplacian with reflecting ghost cells.
pub fn laplacian_neumann(f: &Field) -> Field {
    let mut out = Field::zeros(f.grid);
    laplacian_into(f, &mut out);
    out
}

pub(crate) fn laplacian_into(f: &Field, out: &mut Field) {
    let g = f.grid;
    let (nx, ny) = (g.nx, g.ny);
    let (cx, cy) = (1.0 / (g.dx() * g.dx()), 1.0 / (g.dy() * g.dy()));
    let d = &f.data;
    for j in 0..ny {
        for i in 0..nx {
            let k = i + j * nx;
            let c = d[k];
            let mut acc = 0.0;
            if i > 0 {
                acc += (d[k - 1] - c) * cx;
            }
            if i + 1 < nx {
                acc += (d[k + 1] - c) * cx;
            }
            if j > 0 {
                acc += (d[k - nx] - c) * cy;
            }
            if j + 1 < ny {
                acc += (d[k + nx] - c) * cy;
            }
            out.data[k] = acc;
        }
    }
}

/// Midpoint quadrature `Σ f dx dy`.
pub fn integrate(f: &Field) -> f64 {
    f.data.iter().sum::<f64>() * f.grid.cell_area()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn constant_has_zero_laplacian() {
        let g = Grid::unit(7, 5).unwrap();
        let lap = laplacian_neumann(&Field::constant(g, 3.25));
        assert!(lap.values().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn laplacian_second_order() {
        let err = |n: usize| {
            let g = Grid::unit(n, n).unwrap();
            let f = Field::from_fn(g, |x, y| (PI * x).cos() * (PI * y).cos());
            let lap = laplacian_neumann(&f);
            f.values()
                .iter()
                .zip(lap.values())
                .map(|(f, l)| (l + 2.0 * PI * PI * f).abs())
                .fold(0.0, f64::max)
        };
        let ratio = err(64) / err(128);
        assert!((ratio - 4.0).abs() <= 0.5, "ratio {ratio}");
    }

    #[test]
    fn laplacian_integrates_to_zero() {
        let g = Grid::unit(16, 12).unwrap();
        let f = Field::from_fn(g, |x, y| (3.0 * x).sin() + x * y * y + (7.0 * y).exp());
        let s = integrate(&laplacian_neumann(&f));
        assert!(s.abs() <= 1e-12 * f.max_abs(), "{s}");
    }

    #[test]
    fn face_gradients_linear_exact() {
        let g = Grid::unit(8, 3).unwrap();
        let grads = face_gradients(&Field::from_fn(g, |x, _| x));
        for j in 0..3 {
            assert_eq!(grads.x_face(0, j), 0.0);
            assert_eq!(grads.x_face(8, j), 0.0);
            for i in 1..8 {
                assert!((grads.x_face(i, j) - 1.0).abs() < 1e-12);
            }
        }
        assert!(grads.y.iter().all(|&v| v.abs() < 1e-12));
    }

    #[test]
    fn face_gradient_quadratic_hand_value() {
        let g = Grid::unit(4, 4).unwrap();
        let grads = face_gradients(&Field::from_fn(g, |x, _| x * x));
        // (0.375² − 0.125²) / 0.25
        assert_eq!(grads.x_face(1, 0), 0.5);
    }

    #[test]
    fn constant_field_faces_vanish() {
        let g = Grid::unit(5, 6).unwrap();
        let grads = face_gradients(&Field::constant(g, -2.0));
        assert!(grads.x.iter().chain(&grads.y).all(|&v| v == 0.0));
    }

    #[test]
    fn integrate_constants() {
        for n in [4, 9, 33] {
            let g = Grid::unit(n, n).unwrap();
            assert_eq!(integrate(&Field::constant(g, 1.0)), 1.0);
            assert_eq!(integrate(&Field::constant(g, 2.0)), 2.0);
        }
    }

    #[test]
    fn rejects_degenerate_grid() {
        assert!(Grid::unit(1, 1).is_err());
        assert!(Grid::new(4, 4, 0.0, 1.0).is_err());
        assert!(Field::from_vec(Grid::unit(2, 2).unwrap(), vec![1.0; 3]).is_err());
    }
}
