//! Free-boundary diagnostics: support edges, growth exponents, gap
//! persistence and waiting times.

use serde::Serialize;

use crate::error::{MuskatError, Result};
use crate::grid::{FieldPair, Grid, PhysicalParams};
use crate::solver::{Mode, Trajectory};

/// Edges of the smallest cell interval where `u > delta`, as outer cell faces.
fn edges_above(grid: &Grid, value: impl Fn(usize) -> f64, delta: f64) -> Option<(f64, f64)> {
    let n = grid.len();
    let first = (0..n).find(|&i| value(i) > delta)?;
    let last = (0..n).rev().find(|&i| value(i) > delta)?;
    Some((grid.left_face(first), grid.right_face(last)))
}

/// Support of `f + g` above `delta`. `floor` is the ε of the integrated
/// system; the threshold must exceed it.
pub fn support_edges(
    state: &FieldPair,
    grid: &Grid,
    delta: f64,
    floor: f64,
) -> Result<Option<(f64, f64)>> {
    if !(delta > 0.0 && delta > floor) {
        return Err(MuskatError::Parameter(format!(
            "support threshold {delta} must be positive and exceed the floor {floor}"
        )));
    }
    Ok(total_edges(state, grid, delta))
}

fn total_edges(state: &FieldPair, grid: &Grid, delta: f64) -> Option<(f64, f64)> {
    edges_above(grid, |i| state.f[i] + state.g[i], delta)
}

/// Default threshold: `ε + 10⁻⁶ max(f₀+g₀)` when regularized, `10⁻⁹ max(f₀+g₀)`
/// in limit mode.
pub fn default_threshold(initial: &FieldPair, params: &PhysicalParams, mode: Mode) -> f64 {
    let peak = initial
        .f
        .iter()
        .zip(&initial.g)
        .map(|(a, b)| a + b)
        .fold(0.0, f64::max);
    match mode {
        Mode::Regularized => params.eps + 1e-6 * peak.max(params.eps),
        Mode::Limit => (1e-9 * peak).max(f64::MIN_POSITIVE),
    }
}

/// Edges at one time: of `f + g`, and of each species separately.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupportSample {
    pub t: f64,
    pub total: Option<(f64, f64)>,
    pub f: Option<(f64, f64)>,
    pub g: Option<(f64, f64)>,
}

impl SupportSample {
    pub fn measure(t: f64, state: &FieldPair, grid: &Grid, delta: f64) -> Self {
        Self {
            t,
            total: total_edges(state, grid, delta),
            f: edges_above(grid, |i| state.f[i], delta),
            g: edges_above(grid, |i| state.g[i], delta),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupportTrace {
    pub threshold: f64,
    pub samples: Vec<SupportSample>,
}

impl SupportTrace {
    pub fn new(threshold: f64) -> Self {
        Self {
            threshold,
            samples: Vec::new(),
        }
    }

    pub fn push(&mut self, s: SupportSample) {
        self.samples.push(s);
    }

    /// Builds a trace from stored frames.
    pub fn from_trajectory(traj: &Trajectory, delta: f64) -> Result<Self> {
        support_edges(&traj.final_state, &traj.grid, delta, traj.params.eps)?;
        if traj.frames.is_empty() {
            return Err(MuskatError::Parameter(
                "trajectory has no stored frames".into(),
            ));
        }
        Ok(Self {
            threshold: delta,
            samples: traj
                .frames
                .iter()
                .map(|fr| SupportSample::measure(fr.t, &fr.state, &traj.grid, delta))
                .collect(),
        })
    }

    /// `β(T) = sup_{t ≤ T} right edge(t)`, the right envelope.
    pub fn beta(&self) -> Vec<(f64, f64)> {
        let mut b = f64::NEG_INFINITY;
        self.samples
            .iter()
            .filter_map(|s| {
                let (_, r) = s.total?;
                b = b.max(r);
                Some((s.t, b))
            })
            .collect()
    }

    /// Largest inward retreat of either edge between any earlier and later
    /// sample; a correct solver keeps this within a cell of jitter.
    pub fn max_retreat(&self) -> f64 {
        let mut best_r = f64::NEG_INFINITY;
        let mut best_l = f64::INFINITY;
        let mut retreat: f64 = 0.0;
        for s in &self.samples {
            if let Some((l, r)) = s.total {
                if best_r.is_finite() {
                    retreat = retreat.max(best_r - r).max(l - best_l);
                }
                best_r = best_r.max(r);
                best_l = best_l.min(l);
            }
        }
        retreat
    }
}

/// Least-squares power law `excursion ≈ amplitude · t^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerFit {
    pub exponent: f64,
    pub amplitude: f64,
    /// Root-mean-square residual in log space.
    pub residual: f64,
    pub samples: usize,
}

/// Exponent fits of the right excursion `right - b₀` and the left excursion
/// `-b₀ - left`. `None` marks the waiting regime (the edge never left `±b₀`
/// on enough samples).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthFit {
    pub right: Option<PowerFit>,
    pub left: Option<PowerFit>,
    pub residual: f64,
}

/// Minimum number of samples in the fit window.
pub const MIN_FIT_SAMPLES: usize = 20;

pub fn fit_power_law(points: &[(f64, f64)]) -> Option<PowerFit> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(t, y)| *t > 0.0 && *y > 0.0)
        .map(|(t, y)| (t.ln(), y.ln()))
        .collect();
    if pts.len() < MIN_FIT_SAMPLES {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    Some(PowerFit {
        exponent: slope,
        amplitude: intercept.exp(),
        residual: (rss / n).sqrt(),
        samples: pts.len(),
    })
}

pub fn fit_growth_exponent(trace: &SupportTrace, b0: f64, window: (f64, f64)) -> Result<GrowthFit> {
    let (t1, t2) = window;
    if !(t1 > 0.0 && t2 > t1) {
        return Err(MuskatError::Parameter(format!(
            "fit window ({t1}, {t2}) must satisfy 0 < t1 < t2"
        )));
    }
    let in_window: Vec<&SupportSample> = trace
        .samples
        .iter()
        .filter(|s| s.t >= t1 && s.t <= t2 && s.total.is_some())
        .collect();
    if in_window.len() < MIN_FIT_SAMPLES {
        return Err(MuskatError::Parameter(format!(
            "fit window ({t1}, {t2}) holds {} samples, need {MIN_FIT_SAMPLES}",
            in_window.len()
        )));
    }
    let right: Vec<(f64, f64)> = in_window
        .iter()
        .map(|s| (s.t, s.total.unwrap().1 - b0))
        .collect();
    let left: Vec<(f64, f64)> = in_window
        .iter()
        .map(|s| (s.t, -b0 - s.total.unwrap().0))
        .collect();
    let right = fit_power_law(&right);
    let left = fit_power_law(&left);
    let residual = right
        .iter()
        .chain(left.iter())
        .map(|f| f.residual)
        .fold(0.0, f64::max);
    Ok(GrowthFit {
        right,
        left,
        residual,
    })
}

/// Cells whose centers lie strictly inside `(a - half, a + half)`.
fn cells_in(grid: &Grid, a: f64, half: f64) -> std::ops::Range<usize> {
    let c = grid.centers();
    let lo = c.partition_point(|x| *x <= a - half);
    let hi = c.partition_point(|x| *x < a + half);
    lo..hi.max(lo)
}

/// Watches the inner half `(a - r₀/2, a + r₀/2)` of a gap for support.
#[derive(Debug, Clone)]
pub struct GapProbe {
    cells: std::ops::Range<usize>,
    delta: f64,
}

impl GapProbe {
    /// Checks that `initial` has no support in `(a - r₀, a + r₀)`.
    pub fn new(initial: &FieldPair, grid: &Grid, a: f64, r0: f64, delta: f64) -> Result<Self> {
        if !(r0 > 0.0) {
            return Err(MuskatError::Geometry(format!(
                "gap radius must be positive, got {r0}"
            )));
        }
        let l = grid.half_width();
        if a - r0 < -l || a + r0 > l {
            return Err(MuskatError::Geometry(format!(
                "gap ({}, {}) leaves the domain",
                a - r0,
                a + r0
            )));
        }
        for i in cells_in(grid, a, r0) {
            if initial.f[i] + initial.g[i] > delta {
                return Err(MuskatError::Geometry(format!(
                    "initial data reach the gap at x = {}",
                    grid.centers()[i]
                )));
            }
        }
        Ok(Self {
            cells: cells_in(grid, a, 0.5 * r0),
            delta,
        })
    }

    pub fn entered(&self, state: &FieldPair) -> bool {
        self.cells
            .clone()
            .any(|i| state.f[i] + state.g[i] > self.delta)
    }
}

/// First frame time at which the inner half of the gap carries support;
/// `None` if it never does within the trajectory.
pub fn gap_persistence(traj: &Trajectory, a: f64, r0: f64, delta: f64) -> Result<Option<f64>> {
    let first = traj
        .frames
        .first()
        .ok_or_else(|| MuskatError::Parameter("trajectory has no stored frames".into()))?;
    let probe = GapProbe::new(&first.state, &traj.grid, a, r0, delta)?;
    Ok(traj
        .frames
        .iter()
        .find(|fr| probe.entered(&fr.state))
        .map(|fr| fr.t))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeSide {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WaitingTime {
    pub t_wait: f64,
    pub side: EdgeSide,
    /// The edge never moved within the trace; `t_wait` is a lower bound.
    pub censored: bool,
}

/// Largest sample time up to which the support edge at `x0` stays within
/// `cell_tol` cells of `x0`. The edge is measured at the trace threshold.
pub fn waiting_time(
    trace: &SupportTrace,
    grid: &Grid,
    x0: f64,
    cell_tol: usize,
) -> Result<WaitingTime> {
    let dx = grid.dx();
    let first = trace
        .samples
        .first()
        .and_then(|s| s.total)
        .ok_or_else(|| MuskatError::Geometry("no initial support in the trace".into()))?;
    let side = if (first.0 - x0).abs() <= dx * (1.0 + 1e-9) {
        EdgeSide::Left
    } else if (first.1 - x0).abs() <= dx * (1.0 + 1e-9) {
        EdgeSide::Right
    } else {
        return Err(MuskatError::Geometry(format!(
            "x0 = {x0} is not within one cell of the initial edges ({}, {})",
            first.0, first.1
        )));
    };
    let tol = cell_tol as f64 * dx * (1.0 + 1e-9);
    let mut t_wait = trace.samples[0].t;
    for s in &trace.samples {
        let edge = match (s.total, side) {
            (Some((l, _)), EdgeSide::Left) => l,
            (Some((_, r)), EdgeSide::Right) => r,
            (None, _) => f64::NAN,
        };
        if !((edge - x0).abs() <= tol) {
            return Ok(WaitingTime {
                t_wait,
                side,
                censored: false,
            });
        }
        t_wait = s.t;
    }
    Ok(WaitingTime {
        t_wait,
        side,
        censored: true,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Bounded,
    Unbounded,
}

/// `log₂(Q(r/2)/Q(r))` above this marks divergence of `Q` as `r → 0`.
pub const DIVERGENCE_THRESHOLD: f64 = 0.5;
/// A dyadic radius counts as resolved when it spans this many cells.
pub const MIN_RESOLVED_CELLS: f64 = 16.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionReport {
    pub radii: Vec<f64>,
    pub q: Vec<f64>,
    pub resolved: Vec<bool>,
    /// `log₂(Q_finest / Q_next)` over the two finest resolved levels.
    pub growth: f64,
    pub verdict: Verdict,
}

/// `∫_{x0-r}^{x0+r} u dx` with partial-cell weighting at both ends.
fn window_integral(grid: &Grid, u: &[f64], lo: f64, hi: f64) -> f64 {
    let mut s = 0.0;
    let first = grid.cell_of(lo);
    let last = grid.cell_of(hi);
    for i in first..=last {
        let a = grid.left_face(i).max(lo);
        let b = grid.right_face(i).min(hi);
        if b > a {
            s += u[i] * (b - a);
        }
    }
    s
}

/// Evaluates `Q(r) = r⁻⁵ ∫_{x0-r}^{x0+r} [f₀² + R(f₀+g₀)²] dx` for
/// `r = r_max 2^{-j}`, `j = 0..=levels`, and compares the two finest
/// resolved levels.
pub fn waiting_criterion(
    state0: &FieldPair,
    params: &PhysicalParams,
    grid: &Grid,
    x0: f64,
    r_max: f64,
    levels: usize,
) -> Result<CriterionReport> {
    state0.check_admissible(grid)?;
    let peak = state0
        .f
        .iter()
        .zip(&state0.g)
        .map(|(a, b)| a + b)
        .fold(0.0, f64::max);
    let edges = total_edges(state0, grid, 1e-12 * peak)
        .ok_or_else(|| MuskatError::Geometry("initial data vanish identically".into()))?;
    let dx = grid.dx();
    if (edges.0 - x0).abs() > dx * (1.0 + 1e-9) && (edges.1 - x0).abs() > dx * (1.0 + 1e-9) {
        return Err(MuskatError::Geometry(format!(
            "x0 = {x0} is not within one cell of the initial edges ({}, {})",
            edges.0, edges.1
        )));
    }
    let l = grid.half_width();
    if x0 - r_max < -l || x0 + r_max > l {
        return Err(MuskatError::Geometry(format!(
            "r_max = {r_max} leaves the domain around x0 = {x0}"
        )));
    }
    let r = params.r;
    let density: Vec<f64> = state0
        .f
        .iter()
        .zip(&state0.g)
        .map(|(a, b)| a * a + r * (a + b) * (a + b))
        .collect();
    let mut radii = Vec::new();
    let mut q = Vec::new();
    let mut resolved = Vec::new();
    for j in 0..=levels {
        let rad = r_max * 0.5f64.powi(j as i32);
        radii.push(rad);
        q.push(window_integral(grid, &density, x0 - rad, x0 + rad) / rad.powi(5));
        resolved.push(rad >= MIN_RESOLVED_CELLS * dx);
    }
    let fine: Vec<usize> = (0..radii.len()).filter(|&j| resolved[j]).collect();
    if fine.len() < 2 {
        return Err(MuskatError::Parameter(format!(
            "need two resolved radii (r >= {MIN_RESOLVED_CELLS} dx); raise r_max or refine the grid"
        )));
    }
    let (jn, jf) = (fine[fine.len() - 2], fine[fine.len() - 1]);
    let growth = (q[jf] / q[jn]).log2();
    let verdict = if growth > DIVERGENCE_THRESHOLD {
        Verdict::Unbounded
    } else {
        Verdict::Bounded
    };
    Ok(CriterionReport {
        radii,
        q,
        resolved,
        growth,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initial::{make_initial_datum, InitialDatumSpec, Side};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn box_edges() {
        let grid = Grid::new(4.0, 400).unwrap();
        let f = make_initial_datum(
            &InitialDatumSpec::Box {
                center: 0.0,
                half_width: 1.0,
                height: 1.0,
            },
            &grid,
        )
        .unwrap();
        let s = FieldPair::new(f, vec![0.0; 400]).unwrap();
        let (l, r) = support_edges(&s, &grid, 1e-6, 0.0).unwrap().unwrap();
        assert!((l + 1.0).abs() <= grid.dx());
        assert!((r - 1.0).abs() <= grid.dx());
    }

    #[test]
    fn floor_is_not_support() {
        let grid = Grid::new(1.0, 32).unwrap();
        let s = FieldPair::constant(32, 0.01, 0.0);
        assert_eq!(support_edges(&s, &grid, 0.02, 0.01).unwrap(), None);
        assert!(support_edges(&s, &grid, 0.01, 0.01).is_err());
    }

    fn synthetic(b0: f64, noise: f64, seed: u64) -> SupportTrace {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut tr = SupportTrace::new(1e-6);
        for k in 0..200 {
            let t = 1.0 + 99.0 * k as f64 / 199.0;
            let mut m = || 1.0 + noise * rng.gen_range(-1.0..1.0);
            let right = b0 + 2.0 * t.powf(1.0 / 3.0) * m();
            let left = -b0 - 2.0 * t.powf(1.0 / 3.0) * m();
            tr.push(SupportSample {
                t,
                total: Some((left, right)),
                f: None,
                g: None,
            });
        }
        tr
    }

    #[test]
    fn exact_power_law() {
        let fit = fit_growth_exponent(&synthetic(0.5, 0.0, 0), 0.5, (1.0, 100.0)).unwrap();
        let r = fit.right.unwrap();
        assert!((r.exponent - 1.0 / 3.0).abs() < 1e-6);
        assert!((r.amplitude - 2.0).abs() < 1e-6);
        assert!((fit.left.unwrap().exponent - 1.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn noisy_power_law() {
        for seed in 0..20 {
            let fit = fit_growth_exponent(&synthetic(0.5, 0.01, seed), 0.5, (1.0, 100.0)).unwrap();
            assert!((fit.right.unwrap().exponent - 1.0 / 3.0).abs() < 0.02);
            assert!((fit.left.unwrap().exponent - 1.0 / 3.0).abs() < 0.02);
        }
    }

    #[test]
    fn waiting_regime_and_short_window() {
        let mut tr = SupportTrace::new(1e-6);
        for k in 0..30 {
            tr.push(SupportSample {
                t: 1.0 + k as f64,
                total: Some((-1.0, 1.0)),
                f: None,
                g: None,
            });
        }
        let fit = fit_growth_exponent(&tr, 1.0, (1.0, 100.0)).unwrap();
        assert!(fit.right.is_none() && fit.left.is_none());
        assert!(fit_growth_exponent(&tr, 1.0, (1.0, 5.0)).is_err());
    }

    #[test]
    fn envelope_and_beta() {
        let mut tr = SupportTrace::new(1e-6);
        for (t, r) in [(0.0, 1.0), (1.0, 1.5), (2.0, 1.4), (3.0, 2.0)] {
            tr.push(SupportSample {
                t,
                total: Some((-r, r)),
                f: None,
                g: None,
            });
        }
        assert_eq!(
            tr.beta(),
            vec![(0.0, 1.0), (1.0, 1.5), (2.0, 1.5), (3.0, 2.0)]
        );
        assert!((tr.max_retreat() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn waiting_time_from_trace() {
        let grid = Grid::new(1.0, 100).unwrap();
        let mut tr = SupportTrace::new(1e-9);
        for k in 0..10 {
            let left = if k < 6 {
                -0.5
            } else {
                -0.5 - 0.1 * (k - 5) as f64
            };
            tr.push(SupportSample {
                t: k as f64 * 0.1,
                total: Some((left, 0.2)),
                f: None,
                g: None,
            });
        }
        let w = waiting_time(&tr, &grid, -0.5, 1).unwrap();
        assert_eq!(w.side, EdgeSide::Left);
        assert!((w.t_wait - 0.5).abs() < 1e-12);
        assert!(!w.censored);
        assert!(waiting_time(&tr, &grid, 0.0, 1).is_err());
    }

    fn contact(grid: &Grid, alpha: f64) -> FieldPair {
        let spec = InitialDatumSpec::PowerContact {
            x0: -0.5,
            alpha,
            scale: 1.0,
            height: 1.0,
            side: Side::Right,
            width: 0.5,
            plateau: 0.25,
        };
        FieldPair::new(
            make_initial_datum(&spec, grid).unwrap(),
            vec![0.0; grid.len()],
        )
        .unwrap()
    }

    #[test]
    fn criterion_verdicts() {
        let grid = Grid::new(1.0, 2048).unwrap();
        let params = PhysicalParams::new(1.0, 1.0, 0.0).unwrap();
        for (alpha, expect) in [
            (2.0, Verdict::Bounded),
            (3.0, Verdict::Bounded),
            (0.5, Verdict::Unbounded),
            (1.0, Verdict::Unbounded),
        ] {
            let rep =
                waiting_criterion(&contact(&grid, alpha), &params, &grid, -0.5, 0.25, 6).unwrap();
            assert_eq!(rep.verdict, expect, "alpha = {alpha}: {rep:?}");
        }
        let rep = waiting_criterion(&contact(&grid, 2.0), &params, &grid, -0.5, 0.25, 6).unwrap();
        let finest = rep.resolved.iter().rposition(|r| *r).unwrap();
        // Closed form: Q(r) = 2/5 for (x - x0)₊² with R = 1.
        assert!((rep.q[finest] - 0.4).abs() < 0.01, "{:?}", rep.q);
        // α = 1: Q(r) = (2/3) r⁻².
        let rep = waiting_criterion(&contact(&grid, 1.0), &params, &grid, -0.5, 0.25, 6).unwrap();
        let r = rep.radii[finest];
        assert!((rep.q[finest] * r * r - 2.0 / 3.0).abs() < 0.02);
    }

    #[test]
    fn criterion_rejects_interior_point() {
        let grid = Grid::new(1.0, 512).unwrap();
        let params = PhysicalParams::new(1.0, 1.0, 0.0).unwrap();
        assert!(matches!(
            waiting_criterion(&contact(&grid, 2.0), &params, &grid, -0.2, 0.1, 3),
            Err(MuskatError::Geometry(_))
        ));
    }

    #[test]
    fn gap_probe_geometry() {
        let grid = Grid::new(4.0, 256).unwrap();
        let spec = InitialDatumSpec::TwoBump {
            a: 0.0,
            r0: 1.0,
            half_width: 0.5,
            height: 1.0,
        };
        let s = FieldPair::new(make_initial_datum(&spec, &grid).unwrap(), vec![0.0; 256]).unwrap();
        let p = GapProbe::new(&s, &grid, 0.0, 1.0, 1e-9).unwrap();
        assert!(!p.entered(&s));
        assert!(GapProbe::new(&s, &grid, 0.0, 1.5, 1e-9).is_err());
    }
}
