//! Scalar and weighted functionals of a discrete state.
//!
//! All spatial integrals use the midpoint rule on the solver grid. Spatial
//! derivatives are centered differences with mirrored Neumann ghosts; next to
//! an exact zero of a field (the edge of its support) the derivative is taken
//! one-sided into the support, and it is zero outside the support.

mod balance;
mod local;
mod star;

pub use balance::{balance_check, BalanceReport};
pub use local::{
    haendel_scan, local_energy_ledger, HaendelScan, LocalEnergyReport, Weight, WeightedCheck,
    WlbConstants,
};
pub use star::{star_inequality_check, StarReport};

use serde::Serialize;

use crate::error::Result;
use crate::grid::{FieldPair, Grid, PhysicalParams};
use crate::regularizer::HelmholtzWorkspace;

/// Cells with values below this are treated as zero in `u ln u`.
const ENTROPY_CUTOFF: f64 = 1e-300;

/// One row of the diagnostics time series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LedgerRow {
    pub t: f64,
    pub mass_f: f64,
    pub mass_g: f64,
    pub energy: f64,
    pub entropy: f64,
    pub energy_eps: f64,
    /// `∫(f + (R/R_μ) g) x² dx` over the whole domain.
    pub m2: f64,
    /// Same moment restricted to `|x| < L/2`.
    pub m2_inner: f64,
    /// Cumulative `∫₀ᵗ ∫ (U² + R R_μ V²) dx ds`.
    pub d_energy: f64,
    /// Cumulative entropy dissipation `R/(1+2R) ∫₀ᵗ ∫ (|∂x f|² + R|∂x(f+g)|²) dx ds`.
    pub d_entropy: f64,
}

/// Time series of [`LedgerRow`]s with strictly increasing times.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct DiagnosticsLedger {
    pub rows: Vec<LedgerRow>,
}

impl DiagnosticsLedger {
    pub fn push(&mut self, row: LedgerRow) {
        debug_assert!(self.rows.last().is_none_or(|r| row.t > r.t));
        self.rows.push(row);
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn first(&self) -> Option<&LedgerRow> {
        self.rows.first()
    }

    pub fn last(&self) -> Option<&LedgerRow> {
        self.rows.last()
    }
}

/// Instantaneous global functionals of one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlobalFunctionals {
    pub mass_f: f64,
    pub mass_g: f64,
    pub energy: f64,
    pub entropy: f64,
    pub energy_eps: f64,
    pub m2: f64,
    pub m2_inner: f64,
}

impl GlobalFunctionals {
    pub fn into_row(self, t: f64, d_energy: f64, d_entropy: f64) -> LedgerRow {
        LedgerRow {
            t,
            mass_f: self.mass_f,
            mass_g: self.mass_g,
            energy: self.energy,
            entropy: self.entropy,
            energy_eps: self.energy_eps,
            m2: self.m2,
            m2_inner: self.m2_inner,
            d_energy,
            d_entropy,
        }
    }
}

/// `ℰ = ½ ∫ f² + R (f+g)² dx`.
pub fn energy(state: &FieldPair, params: &PhysicalParams, grid: &Grid) -> f64 {
    let r = params.r;
    let s: f64 = state
        .f
        .iter()
        .zip(&state.g)
        .map(|(&f, &g)| f * f + r * (f + g) * (f + g))
        .sum();
    0.5 * s * grid.dx()
}

/// `ℋ = ∫ f ln f + (R/R_μ) g ln g dx` with `0 ln 0 = 0`.
pub fn entropy(state: &FieldPair, params: &PhysicalParams, grid: &Grid) -> f64 {
    let xlnx = |v: f64| if v < ENTROPY_CUTOFF { 0.0 } else { v * v.ln() };
    let wg = params.g_weight();
    let s: f64 = state
        .f
        .iter()
        .zip(&state.g)
        .map(|(&f, &g)| xlnx(f) + wg * xlnx(g))
        .sum();
    s * grid.dx()
}

/// `∫(f + (R/R_μ) g) x² dx`, optionally restricted to `|x| < cutoff`.
pub fn second_moment(
    state: &FieldPair,
    params: &PhysicalParams,
    grid: &Grid,
    cutoff: Option<f64>,
) -> f64 {
    let wg = params.g_weight();
    let s: f64 = grid
        .centers()
        .iter()
        .zip(state.f.iter().zip(&state.g))
        .filter(|(x, _)| cutoff.is_none_or(|c| x.abs() < c))
        .map(|(x, (f, g))| (f + wg * g) * x * x)
        .sum();
    s * grid.dx()
}

/// `ℰ_ε = ½[(1+R)‖f‖² + R‖g‖² + R ∫(F g + G f)]` with `F = R_ε[f]`, `G = R_ε[g]`.
pub fn energy_eps(
    state: &FieldPair,
    params: &PhysicalParams,
    grid: &Grid,
    ws: &HelmholtzWorkspace,
) -> f64 {
    let n = grid.len();
    let mut big_f = vec![0.0; n];
    let mut big_g = vec![0.0; n];
    ws.solve_into(&state.f, &mut big_f);
    ws.solve_into(&state.g, &mut big_g);
    let r = params.r;
    let mut s = 0.0;
    for i in 0..n {
        let (f, g) = (state.f[i], state.g[i]);
        s += (1.0 + r) * f * f + r * g * g + r * (big_f[i] * g + big_g[i] * f);
    }
    0.5 * s * grid.dx()
}

pub fn global_functionals(
    state: &FieldPair,
    params: &PhysicalParams,
    grid: &Grid,
) -> Result<GlobalFunctionals> {
    let ws = HelmholtzWorkspace::new(grid, params.eps)?;
    global_functionals_with(state, params, grid, &ws)
}

/// As [`global_functionals`], reusing a prebuilt workspace for `ℰ_ε`.
pub fn global_functionals_with(
    state: &FieldPair,
    params: &PhysicalParams,
    grid: &Grid,
    ws: &HelmholtzWorkspace,
) -> Result<GlobalFunctionals> {
    state.check_admissible(grid)?;
    Ok(GlobalFunctionals {
        mass_f: state.mass_f(grid),
        mass_g: state.mass_g(grid),
        energy: energy(state, params, grid),
        entropy: entropy(state, params, grid),
        energy_eps: energy_eps(state, params, grid, ws),
        m2: second_moment(state, params, grid, None),
        m2_inner: second_moment(state, params, grid, Some(0.5 * grid.half_width())),
    })
}

/// Derivative of `u` at cell `i` with the support-edge convention.
#[inline]
pub(crate) fn derivative_at(u: &[f64], i: usize, inv_dx: f64) -> f64 {
    let c = u[i];
    if c == 0.0 {
        return 0.0;
    }
    let left = if i == 0 { c } else { u[i - 1] };
    let right = if i + 1 == u.len() { c } else { u[i + 1] };
    match (left == 0.0, right == 0.0) {
        (true, false) => (right - c) * inv_dx,
        (false, true) => (c - left) * inv_dx,
        _ => 0.5 * (right - left) * inv_dx,
    }
}

/// Cellwise derivative of `u` (see module docs for the stencil).
pub fn derivative(u: &[f64], dx: f64) -> Vec<f64> {
    let inv_dx = 1.0 / dx;
    (0..u.len()).map(|i| derivative_at(u, i, inv_dx)).collect()
}

/// `w = [f² + R(f+g)²]^{3/4}` and its derivative via the chain rule
/// `∂x w = (3/2)(f ∂x f + R v ∂x v)/S^{1/4}` with `v = f + g`, `S = f² + R v²`,
/// and `∂x w = 0` wherever `w = 0`.
pub fn w_and_gradient(
    state: &FieldPair,
    params: &PhysicalParams,
    grid: &Grid,
) -> Result<(Vec<f64>, Vec<f64>)> {
    state.check_admissible(grid)?;
    let n = grid.len();
    let inv_dx = 1.0 / grid.dx();
    let r = params.r;
    let mut w = vec![0.0; n];
    let mut dw = vec![0.0; n];
    for i in 0..n {
        let (f, g) = (state.f[i], state.g[i]);
        let v = f + g;
        let s = f * f + r * v * v;
        if s == 0.0 {
            continue;
        }
        w[i] = s.powf(0.75);
        let df = derivative_at(&state.f, i, inv_dx);
        let dg = derivative_at(&state.g, i, inv_dx);
        dw[i] = 1.5 * (f * df + r * v * (df + dg)) / s.powf(0.25);
    }
    Ok((w, dw))
}

/// Energy and entropy dissipation rates together with the fields
/// `U = √f ((1+R)∂x f + R ∂x g)` and `V = √g (∂x f + ∂x g)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DissipationRates {
    /// `∫ U² + R R_μ V² dx`.
    pub energy_rate: f64,
    /// `R/(1+2R) ∫ |∂x f|² + R |∂x(f+g)|² dx`.
    pub entropy_rate: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

pub fn dissipation_rate(
    state: &FieldPair,
    params: &PhysicalParams,
    grid: &Grid,
) -> Result<DissipationRates> {
    state.check_admissible(grid)?;
    let n = grid.len();
    let inv_dx = 1.0 / grid.dx();
    let r = params.r;
    let mut u = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut grad_sq = 0.0;
    for i in 0..n {
        let df = derivative_at(&state.f, i, inv_dx);
        let dg = derivative_at(&state.g, i, inv_dx);
        u[i] = state.f[i].sqrt() * ((1.0 + r) * df + r * dg);
        v[i] = state.g[i].sqrt() * (df + dg);
        grad_sq += df * df + r * (df + dg) * (df + dg);
    }
    let rr = r * params.r_mu;
    let energy_rate = u
        .iter()
        .zip(&v)
        .map(|(a, b)| a * a + rr * b * b)
        .sum::<f64>()
        * grid.dx();
    let entropy_rate = r / (1.0 + 2.0 * r) * grad_sq * grid.dx();
    Ok(DissipationRates {
        energy_rate,
        entropy_rate,
        u,
        v,
    })
}

/// Allocation-free `(energy_rate, entropy_rate)` for the stepping loop.
pub(crate) fn dissipation_totals(
    state: &FieldPair,
    params: &PhysicalParams,
    dx: f64,
) -> (f64, f64) {
    let inv_dx = 1.0 / dx;
    let r = params.r;
    let rr = r * params.r_mu;
    let (f, g) = (&state.f, &state.g);
    let mut e = 0.0;
    let mut h = 0.0;
    for i in 0..f.len() {
        let df = derivative_at(f, i, inv_dx);
        let dg = derivative_at(g, i, inv_dx);
        let a = (1.0 + r) * df + r * dg;
        let b = df + dg;
        e += f[i] * a * a + rr * g[i] * b * b;
        h += df * df + r * b * b;
    }
    (e * dx, r / (1.0 + 2.0 * r) * h * dx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initial::{make_initial_datum, InitialDatumSpec};

    fn unit_params() -> PhysicalParams {
        PhysicalParams::new(1.0, 1.0, 0.0).unwrap()
    }

    fn indicator(grid: &Grid, lo: f64, hi: f64, height: f64) -> Vec<f64> {
        grid.centers()
            .iter()
            .map(|&x| if x > lo && x < hi { height } else { 0.0 })
            .collect()
    }

    #[test]
    fn zero_fields() {
        let grid = Grid::new(2.0, 64).unwrap();
        let z = FieldPair::zeros(64);
        let gf = global_functionals(&z, &unit_params(), &grid).unwrap();
        assert_eq!(gf.energy, 0.0);
        assert_eq!(gf.entropy, 0.0);
        assert_eq!(gf.m2, 0.0);
        let (w, dw) = w_and_gradient(&z, &unit_params(), &grid).unwrap();
        assert!(w.iter().chain(&dw).all(|v| *v == 0.0));
    }

    #[test]
    fn energy_of_indicators() {
        let grid = Grid::new(2.0, 400).unwrap();
        let f = indicator(&grid, 0.0, 1.0, 1.0);
        let s = FieldPair::new(f.clone(), f).unwrap();
        let e = energy(&s, &unit_params(), &grid);
        assert!((e - 2.5).abs() <= 2.5 * grid.dx() * 2.0);
    }

    #[test]
    fn second_moment_of_indicator() {
        let grid = Grid::new(2.0, 400).unwrap();
        let s = FieldPair::new(indicator(&grid, -1.0, 1.0, 1.0), vec![0.0; 400]).unwrap();
        let m2 = second_moment(&s, &unit_params(), &grid, None);
        assert!((m2 - 2.0 / 3.0).abs() < 4.0 * grid.dx() * grid.dx());
    }

    #[test]
    fn entropy_of_scaled_indicator() {
        let grid = Grid::new(2.0, 400).unwrap();
        let e1 = std::f64::consts::E;
        let s = FieldPair::new(indicator(&grid, 0.0, 1.0, e1), vec![0.0; 400]).unwrap();
        let h = entropy(&s, &unit_params(), &grid);
        assert!((h - e1).abs() <= e1 * grid.dx());
    }

    #[test]
    fn constant_w() {
        let grid = Grid::new(1.0, 32).unwrap();
        let s = FieldPair::constant(32, 1.0, 1.0);
        let (w, dw) = w_and_gradient(&s, &unit_params(), &grid).unwrap();
        let expected = 5f64.powf(0.75);
        assert!((expected - 3.343701524).abs() < 1e-8);
        assert!(w.iter().all(|v| (v - expected).abs() < 1e-14));
        assert!(dw.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn w_gradient_matches_finite_differences() {
        // Oracle: centered differences of the returned w itself, away from edges.
        let mut errs = Vec::new();
        for n in [200, 400, 800] {
            let grid = Grid::new(2.0, n).unwrap();
            let bump = |c: f64, h: f64| {
                make_initial_datum(
                    &InitialDatumSpec::Bump {
                        center: c,
                        half_width: 1.2,
                        height: h,
                    },
                    &grid,
                )
                .unwrap()
            };
            let s = FieldPair::new(bump(-0.2, 1.0), bump(0.3, 0.6)).unwrap();
            let params = PhysicalParams::new(1.5, 0.7, 0.0).unwrap();
            let (w, dw) = w_and_gradient(&s, &params, &grid).unwrap();
            let dx = grid.dx();
            let mut err: f64 = 0.0;
            for i in 1..n - 1 {
                let x = grid.centers()[i];
                if (x + 0.2).abs() < 0.9 && (x - 0.3).abs() < 0.9 {
                    let fd = (w[i + 1] - w[i - 1]) / (2.0 * dx);
                    err = err.max((fd - dw[i]).abs());
                }
            }
            errs.push(err);
        }
        assert!(errs[0] < 5e-3, "{errs:?}");
        for p in errs.windows(2) {
            assert!(p[0] / p[1] > 3.5, "not second order: {errs:?}");
        }
    }

    #[test]
    fn w_lower_bounds_and_scaling() {
        let grid = Grid::new(2.0, 128).unwrap();
        let f = make_initial_datum(
            &InitialDatumSpec::Bump {
                center: -0.3,
                half_width: 1.0,
                height: 1.0,
            },
            &grid,
        )
        .unwrap();
        let g = make_initial_datum(
            &InitialDatumSpec::Bump {
                center: 0.4,
                half_width: 0.8,
                height: 2.0,
            },
            &grid,
        )
        .unwrap();
        let s = FieldPair::new(f, g).unwrap();
        let params = PhysicalParams::new(0.6, 2.0, 0.0).unwrap();
        let (w, _) = w_and_gradient(&s, &params, &grid).unwrap();
        for i in 0..grid.len() {
            let w43 = w[i].powf(4.0 / 3.0);
            assert!(w43 >= s.f[i] * s.f[i] * (1.0 - 1e-12));
            assert!(w43 >= params.r * s.g[i] * s.g[i] * (1.0 - 1e-12));
        }
        let lambda = 2.5;
        let scaled = s.scaled(lambda);
        let e0 = energy(&s, &params, &grid);
        let e1 = energy(&scaled, &params, &grid);
        assert!((e1 - lambda * lambda * e0).abs() < 1e-12 * e1);
        let (w1, _) = w_and_gradient(&scaled, &params, &grid).unwrap();
        for (a, b) in w.iter().zip(&w1) {
            assert!((b - lambda.powf(1.5) * a).abs() <= 1e-12 * b.max(1e-300));
        }
    }

    #[test]
    fn energy_dominates_partial_norms() {
        let grid = Grid::new(2.0, 64).unwrap();
        let s = FieldPair::new(
            (0..64).map(|i| ((i * 7) % 5) as f64 * 0.3).collect(),
            (0..64).map(|i| ((i * 3) % 4) as f64 * 0.2).collect(),
        )
        .unwrap();
        let params = PhysicalParams::new(0.8, 1.3, 0.0).unwrap();
        let e = energy(&s, &params, &grid);
        let f2: f64 = s.f.iter().map(|v| v * v).sum::<f64>() * grid.dx();
        let v2: f64 = s.total().iter().map(|v| v * v).sum::<f64>() * grid.dx();
        assert!(e >= 0.5 * f2);
        assert!(e >= 0.5 * params.r * v2);
    }

    #[test]
    fn dissipation_of_constant_and_single_species() {
        let grid = Grid::new(2.0, 128).unwrap();
        let params = PhysicalParams::new(1.0, 1.0, 0.0).unwrap();
        let d = dissipation_rate(&FieldPair::constant(128, 0.4, 0.9), &params, &grid).unwrap();
        assert_eq!(d.energy_rate, 0.0);
        assert_eq!(d.entropy_rate, 0.0);

        let params = PhysicalParams::new(0.7, 1.9, 0.0).unwrap();
        let f = make_initial_datum(
            &InitialDatumSpec::Bump {
                center: 0.0,
                half_width: 1.0,
                height: 1.0,
            },
            &grid,
        )
        .unwrap();
        let s = FieldPair::new(f.clone(), vec![0.0; 128]).unwrap();
        let d = dissipation_rate(&s, &params, &grid).unwrap();
        assert!(d.v.iter().all(|v| *v == 0.0));
        let df = derivative(&f, grid.dx());
        let expected = (1.0 + params.r).powi(2)
            * f.iter().zip(&df).map(|(a, b)| a * b * b).sum::<f64>()
            * grid.dx();
        assert!((d.energy_rate - expected).abs() < 1e-12 * expected);
        let (e, h) = dissipation_totals(&s, &params, grid.dx());
        assert!((e - d.energy_rate).abs() < 1e-12 * e);
        assert!((h - d.entropy_rate).abs() < 1e-12 * h);
    }

    #[test]
    fn one_sided_at_support_edge() {
        let u = [0.0, 0.0, 1.0, 3.0, 4.0, 0.0];
        let d = derivative(&u, 1.0);
        assert_eq!(d, vec![0.0, 0.0, 2.0, 1.5, 1.0, 0.0]);
        // mirrored boundary
        let d = derivative(&[2.0, 4.0, 6.0], 1.0);
        assert_eq!(d, vec![1.0, 2.0, 1.0]);
    }
}
