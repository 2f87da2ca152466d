//! The smoothing operator `(1 - ε²∂x²)⁻¹` with homogeneous Neumann conditions.
//!
//! The Neumann second difference uses mirror ghost cells (`u₋₁ = u₀`,
//! `u_n = u_{n-1}`), so the discrete operator `I - ε²D²` is a symmetric
//! M-matrix whose rows and columns sum to one. Constants are fixed points,
//! cell sums are preserved, and the inverse is monotone.

use crate::error::{MuskatError, Result};
use crate::grid::{Grid, PhysicalParams};

/// Pre-factored tridiagonal system for one `(grid, ε)` pair.
#[derive(Debug, Clone)]
pub struct HelmholtzWorkspace {
    eps: f64,
    dx: f64,
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    // Thomas factorization: modified upper band and reciprocal pivots.
    c_prime: Vec<f64>,
    inv_pivot: Vec<f64>,
}

impl HelmholtzWorkspace {
    pub fn new(grid: &Grid, eps: f64) -> Result<Self> {
        if !(eps.is_finite() && eps >= 0.0) {
            return Err(MuskatError::Parameter(format!(
                "eps must be non-negative, got {eps}"
            )));
        }
        let n = grid.len();
        let dx = grid.dx();
        let k = eps * eps / (dx * dx);
        let lower = vec![-k; n];
        let upper = vec![-k; n];
        let mut diag = vec![1.0 + 2.0 * k; n];
        diag[0] = 1.0 + k;
        diag[n - 1] = 1.0 + k;

        let mut c_prime = vec![0.0; n];
        let mut inv_pivot = vec![0.0; n];
        inv_pivot[0] = 1.0 / diag[0];
        c_prime[0] = upper[0] * inv_pivot[0];
        for i in 1..n {
            let pivot = diag[i] - lower[i] * c_prime[i - 1];
            inv_pivot[i] = 1.0 / pivot;
            c_prime[i] = if i + 1 < n {
                upper[i] * inv_pivot[i]
            } else {
                0.0
            };
        }

        Ok(Self {
            eps,
            dx,
            lower,
            diag,
            upper,
            c_prime,
            inv_pivot,
        })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn matches(&self, grid: &Grid, eps: f64) -> bool {
        self.len() == grid.len() && self.dx == grid.dx() && self.eps == eps
    }

    /// Bands `(lower, diag, upper)` of `I - ε²D²_N`. `lower[0]` and
    /// `upper[n-1]` lie outside the matrix and are unused.
    pub fn bands(&self) -> (&[f64], &[f64], &[f64]) {
        (&self.lower, &self.diag, &self.upper)
    }

    /// Solves `(I - ε²D²_N) out = u` in O(n).
    pub fn solve_into(&self, u: &[f64], out: &mut [f64]) {
        let n = self.len();
        assert_eq!(u.len(), n);
        assert_eq!(out.len(), n);
        if self.eps == 0.0 {
            out.copy_from_slice(u);
            return;
        }
        out[0] = u[0] * self.inv_pivot[0];
        for i in 1..n {
            out[i] = (u[i] - self.lower[i] * out[i - 1]) * self.inv_pivot[i];
        }
        for i in (0..n - 1).rev() {
            out[i] -= self.c_prime[i] * out[i + 1];
        }
    }

    /// Applies `I - ε²D²_N` (used for residual checks).
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * v[i];
                if i > 0 {
                    s += self.lower[i] * v[i - 1];
                }
                if i + 1 < n {
                    s += self.upper[i] * v[i + 1];
                }
                s
            })
            .collect()
    }
}

/// `R_ε[u]`, checked against the workspace's grid size and ε.
pub fn helmholtz_inverse(
    u: &[f64],
    params: &PhysicalParams,
    workspace: &HelmholtzWorkspace,
) -> Result<Vec<f64>> {
    if u.len() != workspace.len() || params.eps != workspace.eps {
        return Err(MuskatError::Parameter(format!(
            "workspace built for n={} eps={} used with n={} eps={}",
            workspace.len(),
            workspace.eps,
            u.len(),
            params.eps
        )));
    }
    let mut out = vec![0.0; u.len()];
    workspace.solve_into(u, &mut out);
    Ok(out)
}
