//! Uniform cell-centered grids, physical constants and discrete field pairs.

use serde::{Deserialize, Serialize};

use crate::error::{MuskatError, Result};

/// Uniform cell-centered partition of `(-L, L)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    half_width: f64,
    dx: f64,
    centers: Vec<f64>,
}

impl Grid {
    /// Builds a grid with `n` cells of width `2L/n`. `n` must be even and at least 4
    /// so that the centers are symmetric about the origin.
    pub fn new(half_width: f64, n: usize) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(MuskatError::Parameter(format!(
                "domain half-width must be positive, got {half_width}"
            )));
        }
        if n < 4 || n % 2 != 0 {
            return Err(MuskatError::Parameter(format!(
                "cell count must be even and at least 4, got {n}"
            )));
        }
        let dx = 2.0 * half_width / n as f64;
        // Mirror the left half so the centers are exactly symmetric.
        let mut centers = vec![0.0; n];
        for i in 0..n / 2 {
            let x = -half_width + (i as f64 + 0.5) * dx;
            centers[i] = x;
            centers[n - 1 - i] = -x;
        }
        Ok(Self {
            half_width,
            dx,
            centers,
        })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    /// Left boundary of cell `i`.
    pub fn left_face(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.dx
    }

    /// Right boundary of cell `i`.
    pub fn right_face(&self, i: usize) -> f64 {
        -self.half_width + (i + 1) as f64 * self.dx
    }

    /// Midpoint-rule integral of a cell field.
    pub fn integrate(&self, u: &[f64]) -> f64 {
        u.iter().sum::<f64>() * self.dx
    }

    /// Index of the cell containing `x`, clamped to the grid.
    pub fn cell_of(&self, x: f64) -> usize {
        let k = ((x + self.half_width) / self.dx).floor();
        (k.max(0.0) as usize).min(self.len() - 1)
    }
}

/// Physical and regularization constants `R`, `R_μ` and `ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalParams {
    pub r: f64,
    pub r_mu: f64,
    pub eps: f64,
}

impl PhysicalParams {
    pub fn new(r: f64, r_mu: f64, eps: f64) -> Result<Self> {
        let p = Self { r, r_mu, eps };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r.is_finite() && self.r > 0.0) {
            return Err(MuskatError::Parameter(format!(
                "R must be positive, got {}",
                self.r
            )));
        }
        if !(self.r_mu.is_finite() && self.r_mu > 0.0) {
            return Err(MuskatError::Parameter(format!(
                "R_mu must be positive, got {}",
                self.r_mu
            )));
        }
        if !(self.eps.is_finite() && self.eps >= 0.0) {
            return Err(MuskatError::Parameter(format!(
                "eps must be non-negative, got {}",
                self.eps
            )));
        }
        Ok(())
    }

    /// Same constants with `ε = 0`, i.e. the unregularized system.
    pub fn limit(&self) -> Self {
        Self { eps: 0.0, ..*self }
    }

    /// Weight `R/R_μ` of `g` in the entropy and in the second moment.
    pub fn g_weight(&self) -> f64 {
        self.r / self.r_mu
    }
}

/// Discrete layer thicknesses `(f, g)` as cell averages.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldPair {
    pub f: Vec<f64>,
    pub g: Vec<f64>,
}

impl FieldPair {
    pub fn new(f: Vec<f64>, g: Vec<f64>) -> Result<Self> {
        if f.len() != g.len() {
            return Err(MuskatError::Parameter(format!(
                "field lengths differ: f has {}, g has {}",
                f.len(),
                g.len()
            )));
        }
        Ok(Self { f, g })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            f: vec![0.0; n],
            g: vec![0.0; n],
        }
    }

    pub fn constant(n: usize, f: f64, g: f64) -> Self {
        Self {
            f: vec![f; n],
            g: vec![g; n],
        }
    }

    pub fn len(&self) -> usize {
        self.f.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f.is_empty()
    }

    /// Checks that the pair lives on `grid` and lies in the discrete cone:
    /// finite and non-negative entries.
    pub fn check_admissible(&self, grid: &Grid) -> Result<()> {
        if self.f.len() != grid.len() || self.g.len() != grid.len() {
            return Err(MuskatError::Parameter(format!(
                "field length {} / {} does not match grid with {} cells",
                self.f.len(),
                self.g.len(),
                grid.len()
            )));
        }
        for (name, u) in [('f', &self.f), ('g', &self.g)] {
            if let Some((i, v)) = u
                .iter()
                .enumerate()
                .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
            {
                return Err(MuskatError::Admissibility(format!(
                    "{name}[{i}] = {v} is negative or not finite"
                )));
            }
        }
        Ok(())
    }

    pub fn mass_f(&self, grid: &Grid) -> f64 {
        grid.integrate(&self.f)
    }

    pub fn mass_g(&self, grid: &Grid) -> f64 {
        grid.integrate(&self.g)
    }

    /// Pointwise total height `f + g`.
    pub fn total(&self) -> Vec<f64> {
        self.f.iter().zip(&self.g).map(|(a, b)| a + b).collect()
    }

    /// `(λf, λg)`.
    pub fn scaled(&self, lambda: f64) -> Self {
        Self {
            f: self.f.iter().map(|v| lambda * v).collect(),
            g: self.g.iter().map(|v| lambda * v).collect(),
        }
    }

    /// Midpoint L¹ distance between two pairs on the same grid, summed over species.
    pub fn l1_distance(&self, other: &Self, grid: &Grid) -> f64 {
        let df: f64 = self
            .f
            .iter()
            .zip(&other.f)
            .map(|(a, b)| (a - b).abs())
            .sum();
        let dg: f64 = self
            .g
            .iter()
            .zip(&other.g)
            .map(|(a, b)| (a - b).abs())
            .sum();
        (df + dg) * grid.dx()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_cell_grid() {
        let g = Grid::new(1.0, 4).unwrap();
        assert_eq!(g.dx(), 0.5);
        assert_eq!(g.centers(), &[-0.75, -0.25, 0.25, 0.75]);
    }

    #[test]
    fn fine_grid_spacing() {
        let g = Grid::new(8.0, 1024).unwrap();
        assert_eq!(g.dx(), 0.015625);
        assert!((g.dx() * g.len() as f64 - 16.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(matches!(Grid::new(1.0, 3), Err(MuskatError::Parameter(_))));
        assert!(matches!(Grid::new(1.0, 2), Err(MuskatError::Parameter(_))));
        assert!(matches!(Grid::new(1.0, 7), Err(MuskatError::Parameter(_))));
        assert!(matches!(Grid::new(0.0, 8), Err(MuskatError::Parameter(_))));
        assert!(matches!(Grid::new(-1.0, 8), Err(MuskatError::Parameter(_))));
    }

    #[test]
    fn centers_are_symmetric_and_increasing() {
        let g = Grid::new(3.7, 366).unwrap();
        let c = g.centers();
        assert!(c.windows(2).all(|w| w[1] > w[0]));
        for i in 0..c.len() {
            assert_eq!(c[i], -c[c.len() - 1 - i]);
        }
    }

    #[test]
    fn cell_lookup() {
        let g = Grid::new(1.0, 4).unwrap();
        assert_eq!(g.cell_of(-0.9), 0);
        assert_eq!(g.cell_of(0.1), 2);
        assert_eq!(g.cell_of(5.0), 3);
        assert_eq!(g.left_face(2), 0.0);
        assert_eq!(g.right_face(3), 1.0);
    }

    #[test]
    fn params_validation() {
        assert!(PhysicalParams::new(1.0, 1.0, 0.0).is_ok());
        assert!(PhysicalParams::new(0.0, 1.0, 0.0).is_err());
        assert!(PhysicalParams::new(1.0, -1.0, 0.0).is_err());
        assert!(PhysicalParams::new(1.0, 1.0, -1e-3).is_err());
    }

    #[test]
    fn admissibility_scan() {
        let g = Grid::new(1.0, 4).unwrap();
        let mut p = FieldPair::zeros(4);
        assert!(p.check_admissible(&g).is_ok());
        p.g[2] = -1e-3;
        assert!(matches!(
            p.check_admissible(&g),
            Err(MuskatError::Admissibility(_))
        ));
        p.g[2] = f64::NAN;
        assert!(p.check_admissible(&g).is_err());
        assert!(FieldPair::zeros(6).check_admissible(&g).is_err());
    }
}
