//! Uniform interior grids on (0,1) and the fields that live on them.
//!
//! Boundary values are implicitly zero. The discrete L² norm uses weight
//! `dx` at interior nodes; the discrete H¹ seminorm uses forward differences
//! including the two boundary gaps, so that `h1_norm(u)² = dx · uᵀ A_h u`
//! for the standard second-difference operator `A_h`.

use rand::Rng;

use crate::error::{Error, Result};

/// `n` interior nodes `x_i = i·dx`, `i = 1..=n`, with `dx = 1/(n+1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    n: usize,
    dx: f64,
}

impl Grid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidGrid(format!(
                "need at least 3 interior nodes, got {n}"
            )));
        }
        let cells = (n + 1) as f64;
        let dx = 1.0 / cells;
        if dx * cells != 1.0 {
            return Err(Error::InvalidGrid(format!(
                "spacing 1/{} is not exact in f64 (dx*(n+1) = {:e})",
                n + 1,
                dx * cells
            )));
        }
        Ok(Self { n, dx })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Coordinate of interior node `i` (zero-based, so node 0 sits at `dx`).
    pub fn x(&self, i: usize) -> f64 {
        (i + 1) as f64 * self.dx
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.x(i))
    }

    /// Smallest eigenvalue of the Dirichlet second-difference operator.
    pub fn first_discrete_eigenvalue(&self) -> f64 {
        let dx = self.dx;
        (2.0 - 2.0 * (std::f64::consts::PI * dx).cos()) / (dx * dx)
    }
}

/// A spatial profile sampled at the interior nodes of a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch {
                expected: grid.len(),
                found: values.len(),
            });
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite field value {v}"
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid,
            values: grid.nodes().map(f).collect(),
        }
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        Self {
            grid,
            values: vec![value; grid.len()],
        }
    }

    /// Uniform random values in `[0, 1)` on a random sub-interval, zero elsewhere;
    /// never identically zero.
    pub fn random_nonnegative(grid: Grid, rng: &mut impl Rng) -> Self {
        let n = grid.len();
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(a..n);
        let mut values = vec![0.0; n];
        for v in &mut values[a..=b] {
            *v = rng.gen::<f64>();
        }
        values[rng.gen_range(a..=b)] += 0.5;
        Self { grid, values }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn l2_norm(&self) -> f64 {
        (self.grid.dx * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    pub fn h1_seminorm(&self) -> f64 {
        let dx = self.grid.dx;
        let mut acc = 0.0;
        let mut prev = 0.0;
        for &v in self.values.iter().chain(std::iter::once(&0.0)) {
            let d = (v - prev) / dx;
            acc += d * d;
            prev = v;
        }
        (dx * acc).sqrt()
    }

    pub fn l1_norm(&self) -> f64 {
        self.grid.dx * self.values.iter().map(|v| v.abs()).sum::<f64>()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.values.iter().all(|&v| v >= 0.0)
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.values.iter().all(|&v| v > 0.0)
    }

    pub fn check_same_grid(&self, other: &Field) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch {
                expected: self.grid.len(),
                found: other.grid.len(),
            });
        }
        Ok(())
    }

    /// Discrete L² distance; panics if the grids differ.
    pub fn l2_distance(&self, other: &Field) -> f64 {
        assert_eq!(self.grid, other.grid, "l2_distance on different grids");
        let s: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        (self.grid.dx * s).sqrt()
    }

    pub fn sup_distance(&self, other: &Field) -> f64 {
        assert_eq!(self.grid, other.grid, "sup_distance on different grids");
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// `self ≤ other + tol` at every node.
    pub fn le_with_tol(&self, other: &Field, tol: f64) -> bool {
        self.values
            .iter()
            .zip(&other.values)
            .all(|(a, b)| *a <= *b + tol)
    }

    pub fn scaled(&self, factor: f64) -> Field {
        Field {
            grid: self.grid,
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn sub(&self, other: &Field) -> Field {
        assert_eq!(self.grid, other.grid);
        Field {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    /// Applies the second-difference operator `A_h = -Δ_h` (zero boundary values).
    pub fn apply_neg_laplacian(&self) -> Field {
        let dx2 = self.grid.dx * self.grid.dx;
        let n = self.values.len();
        let u = &self.values;
        let values = (0..n)
            .map(|i| {
                let left = if i == 0 { 0.0 } else { u[i - 1] };
                let right = if i + 1 == n { 0.0 } else { u[i + 1] };
                (2.0 * u[i] - left - right) / dx2
            })
            .collect();
        Field {
            grid: self.grid,
            values,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_rejects_tiny() {
        assert!(Grid::new(2).is_err());
        let g = Grid::new(199).unwrap();
        assert_eq!(g.dx(), 0.005);
        assert_eq!(g.x(198), 199.0 * 0.005);
    }

    #[test]
    fn h1_matches_quadratic_form() {
        let g = Grid::new(31).unwrap();
        let u = Field::from_fn(g, |x| x * (1.0 - x) * (x - 0.3));
        let au = u.apply_neg_laplacian();
        let form: f64 = g.dx()
            * u.values()
                .iter()
                .zip(au.values())
                .map(|(a, b)| a * b)
                .sum::<f64>();
        assert!((u.h1_seminorm().powi(2) - form).abs() < 1e-12);
    }

    #[test]
    fn quadratic_is_exact_under_second_difference() {
        let g = Grid::new(199).unwrap();
        let u = Field::from_fn(g, |x| x * (1.0 - x) / 2.0);
        let au = u.apply_neg_laplacian();
        assert!(au.values().iter().all(|v| (v - 1.0).abs() < 1e-9));
    }

    #[test]
    fn rejects_non_finite() {
        let g = Grid::new(3).unwrap();
        assert!(Field::from_values(g, vec![0.0, f64::NAN, 1.0]).is_err());
        assert!(Field::from_values(g, vec![0.0, 1.0]).is_err());
    }
}
