//! Ground truth: Barenblatt solutions of the decoupled porous-medium limit
//! and the a priori bounds used as trajectory gates.
//!
//! With one species absent the system reduces to `∂t u = D ∂x²(u²)` with
//! `D = (1+R)/2` for `f` and `D = R_μ/2` for `g`, solved by
//!
//! ```text
//! u(t, x) = (Dt)^{-1/3} (C - x² (Dt)^{-2/3} / 12)₊
//! ```

use serde::Serialize;

use crate::error::{MuskatError, Result};
use crate::functionals::DiagnosticsLedger;
use crate::gate::GateOutcome;
use crate::grid::{FieldPair, Grid, PhysicalParams};
use crate::solver::{run, Mode, StepperConfig};

/// A Barenblatt profile with its constant calibrated from the mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Barenblatt {
    pub mass: f64,
    pub d: f64,
    pub c: f64,
}

/// Composite Simpson rule on `[a, b]` with `m` (even) panels.
fn simpson(a: f64, b: f64, m: usize, f: impl Fn(f64) -> f64) -> f64 {
    let h = (b - a) / m as f64;
    let mut s = f(a) + f(b);
    for k in 1..m {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + k as f64 * h);
    }
    s * h / 3.0
}

impl Barenblatt {
    pub fn new(mass: f64, d: f64) -> Result<Self> {
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(MuskatError::Parameter(format!(
                "mass must be positive, got {mass}"
            )));
        }
        if !(d > 0.0 && d.is_finite()) {
            return Err(MuskatError::Parameter(format!(
                "D must be positive, got {d}"
            )));
        }
        // Bisection on C against the quadrature mass of the profile at Dt = 1.
        let mass_of = |c: f64| {
            let rho = (12.0 * c).sqrt();
            simpson(-rho, rho, 512, |x| (c - x * x / 12.0).max(0.0))
        };
        let mut lo = 0.0;
        let mut hi = 1.0;
        while mass_of(hi) < mass {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mass_of(mid) < mass {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-16 * hi {
                break;
            }
        }
        Ok(Self {
            mass,
            d,
            c: 0.5 * (lo + hi),
        })
    }

    fn tau(&self, t: f64) -> Result<f64> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(MuskatError::Parameter(format!(
                "Barenblatt time must be positive, got {t}"
            )));
        }
        Ok(self.d * t)
    }

    pub fn value(&self, t: f64, x: f64) -> Result<f64> {
        let tau = self.tau(t)?;
        Ok(tau.powf(-1.0 / 3.0) * (self.c - x * x * tau.powf(-2.0 / 3.0) / 12.0).max(0.0))
    }

    /// Support radius `√(12C) (Dt)^{1/3}`.
    pub fn radius(&self, t: f64) -> Result<f64> {
        Ok((12.0 * self.c).sqrt() * self.tau(t)?.cbrt())
    }

    /// Exact cell averages of the profile on `grid`.
    pub fn cell_averages(&self, t: f64, grid: &Grid) -> Result<Vec<f64>> {
        let tau = self.tau(t)?;
        let rho = self.radius(t)?;
        let amp = tau.powf(-1.0 / 3.0);
        let k = tau.powf(-2.0 / 3.0) / 12.0;
        let dx = grid.dx();
        Ok((0..grid.len())
            .map(|i| {
                let a = grid.left_face(i).max(-rho);
                let b = grid.right_face(i).min(rho);
                if b <= a {
                    0.0
                } else {
                    (amp * (self.c * (b - a) - k * (b * b * b - a * a * a) / 3.0)).max(0.0) / dx
                }
            })
            .collect())
    }

    /// Quadrature mass of the profile at time `t`.
    pub fn quadrature_mass(&self, t: f64) -> Result<f64> {
        // `radius` validates t, so `value` cannot fail below.
        let rho = self.radius(t)?;
        Ok(simpson(-rho, rho, 512, |x| self.value(t, x).unwrap_or(0.0)))
    }

    /// Residual of `∂t u - D ∂x²(u²)` by centered differences on a 20×20
    /// lattice of `t ∈ [t0, t1]` and `|x| ≤ 0.9 r(t)`, and the mass drift over
    /// the same times.
    pub fn self_check(&self, t0: f64, t1: f64) -> Result<OracleCheck> {
        let h = 1e-4;
        let mut max_residual: f64 = 0.0;
        let mut mass_drift: f64 = 0.0;
        for a in 0..20 {
            let t = t0 + (t1 - t0) * a as f64 / 19.0;
            let rho = self.radius(t)?;
            mass_drift = mass_drift.max((self.quadrature_mass(t)? - self.mass).abs() / self.mass);
            for b in 0..20 {
                let x = -0.9 * rho + 1.8 * rho * b as f64 / 19.0;
                let ut = (self.value(t + h, x)? - self.value(t - h, x)?) / (2.0 * h);
                let sq = |x: f64| self.value(t, x).map(|v| v * v);
                let uxx = (sq(x + h)? - 2.0 * sq(x)? + sq(x - h)?) / (h * h);
                max_residual = max_residual.max((ut - self.d * uxx).abs());
            }
        }
        Ok(OracleCheck {
            max_residual,
            mass_drift,
            residual: GateOutcome::at_most("barenblatt_residual", max_residual, 1e-6),
            mass: GateOutcome::at_most("barenblatt_mass", mass_drift, 1e-10),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleCheck {
    pub max_residual: f64,
    pub mass_drift: f64,
    pub residual: GateOutcome,
    pub mass: GateOutcome,
}

impl OracleCheck {
    pub fn pass(&self) -> bool {
        self.residual.pass && self.mass.pass
    }
}

/// Cell averages of the Barenblatt profile of the given mass at time `t`.
pub fn barenblatt(t: f64, mass: f64, d: f64, grid: &Grid) -> Result<Vec<f64>> {
    Barenblatt::new(mass, d)?.cell_averages(t, grid)
}

/// Which species carries the data in a decoupled comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Species {
    F,
    G,
}

impl Species {
    pub fn diffusivity(&self, params: &PhysicalParams) -> f64 {
        match self {
            Species::F => 0.5 * (1.0 + params.r),
            Species::G => 0.5 * params.r_mu,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecoupledConfig {
    pub half_width: f64,
    pub ladder: Vec<usize>,
    pub t0: f64,
    pub t1: f64,
    pub mass: f64,
    pub species: Species,
    pub cfl_safety: f64,
}

impl Default for DecoupledConfig {
    fn default() -> Self {
        Self {
            half_width: 4.0,
            ladder: vec![512, 1024, 2048],
            t0: 1.0,
            t1: 2.0,
            mass: 1.0,
            species: Species::F,
            cfl_safety: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelError {
    pub n: usize,
    pub dx: f64,
    pub l1_error: f64,
    /// Edge error at the relative threshold [`EDGE_THRESHOLD`].
    pub radius_error: f64,
    /// Edge error at the limit-mode support default `1e-9·peak`, which also
    /// counts the first cells of the numerical precursor.
    pub radius_error_fine: f64,
    pub steps: u64,
}

/// Relative level used to locate the numerical edge against the oracle radius.
/// The explicit scheme leaks a precursor ahead of the front in which each
/// cell holds roughly the square of its inner neighbour; this level cuts it
/// after the first cell on every grid of the ladder.
pub const EDGE_THRESHOLD: f64 = 1e-6;

fn edge_error(u: &[f64], grid: &Grid, rho: f64, delta: f64) -> f64 {
    let first = u.iter().position(|v| *v > delta);
    let last = u.iter().rposition(|v| *v > delta);
    match (first, last) {
        (Some(i), Some(j)) => (grid.left_face(i) + rho)
            .abs()
            .max((grid.right_face(j) - rho).abs()),
        _ => f64::INFINITY,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecoupledReport {
    pub species: Species,
    pub levels: Vec<LevelError>,
    /// `error(n) / error(2n)` for consecutive levels.
    pub ratios: Vec<f64>,
}

#[allow(clippy::too_many_arguments)]
/// Runs the limit solver from the Barenblatt state at `t0` to `t1` on one grid
/// and measures the L¹ and support-radius errors at `t1`. The other species
/// of `initial` must vanish.
pub fn compare_level(
    initial: &FieldPair,
    species: Species,
    params: &PhysicalParams,
    grid: &Grid,
    oracle: &Barenblatt,
    t0: f64,
    t1: f64,
    cfl_safety: f64,
) -> Result<LevelError> {
    let other = match species {
        Species::F => &initial.g,
        Species::G => &initial.f,
    };
    if other.iter().any(|v| *v != 0.0) {
        return Err(MuskatError::Parameter(
            "decoupled comparison needs the other species identically zero".into(),
        ));
    }
    let cfg = StepperConfig {
        mode: Mode::Limit,
        cfl_safety,
        t_end: t1 - t0,
        diagnostics_stride: usize::MAX,
        track_dissipation: false,
        ..Default::default()
    };
    let traj = run(initial, params, grid, &cfg)?;
    let u = match species {
        Species::F => &traj.final_state.f,
        Species::G => &traj.final_state.g,
    };
    let exact = oracle.cell_averages(t1, grid)?;
    let l1_error = u
        .iter()
        .zip(&exact)
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>()
        * grid.dx();
    let peak = u.iter().cloned().fold(0.0, f64::max);
    let rho = oracle.radius(t1)?;
    let radius_error = edge_error(u, grid, rho, EDGE_THRESHOLD * peak);
    let radius_error_fine = edge_error(u, grid, rho, 1e-9 * peak);
    Ok(LevelError {
        n: grid.len(),
        dx: grid.dx(),
        l1_error,
        radius_error,
        radius_error_fine,
        steps: traj.steps,
    })
}

/// Solver-versus-Barenblatt errors over a grid ladder.
pub fn decoupled_compare(
    params: &PhysicalParams,
    config: &DecoupledConfig,
) -> Result<DecoupledReport> {
    if config.ladder.len() < 3 {
        return Err(MuskatError::Parameter(
            "the grid ladder needs at least three levels".into(),
        ));
    }
    let params = params.limit();
    let oracle = Barenblatt::new(config.mass, config.species.diffusivity(&params))?;
    let mut levels = Vec::new();
    for &n in &config.ladder {
        let grid = Grid::new(config.half_width, n)?;
        if oracle.radius(config.t1)? >= config.half_width {
            return Err(MuskatError::Geometry(
                "Barenblatt support reaches the boundary".into(),
            ));
        }
        let u0 = oracle.cell_averages(config.t0, &grid)?;
        let zero = vec![0.0; n];
        let initial = match config.species {
            Species::F => FieldPair::new(u0, zero)?,
            Species::G => FieldPair::new(zero, u0)?,
        };
        levels.push(compare_level(
            &initial,
            config.species,
            &params,
            &grid,
            &oracle,
            config.t0,
            config.t1,
            config.cfl_safety,
        )?);
    }
    let ratios = levels
        .windows(2)
        .map(|w| w[0].l1_error / w[1].l1_error)
        .collect();
    Ok(DecoupledReport {
        species: config.species,
        levels,
        ratios,
    })
}

/// Slack on the moment and decay bounds.
pub const BOUNDS_SLACK: f64 = 1.02;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsReport {
    /// Worst ratio `M₂^{inner}(T) / (M₂(0) + T ℰ₀)`.
    pub moment: GateOutcome,
    /// Worst ratio `ℰ(t)(1+t)^{1/3} / (ℰ₀ + M₂(0)/6)`.
    pub decay: GateOutcome,
}

impl BoundsReport {
    pub fn pass(&self) -> bool {
        self.moment.pass && self.decay.pass
    }
}

fn ratio(lhs: f64, rhs: f64) -> f64 {
    if lhs == 0.0 {
        0.0
    } else {
        lhs / rhs
    }
}

/// Checks, at every ledger sample,
/// `∫_{|x|<L/2} (f + (R/R_μ)g) x² dx ≤ M₂(0) + T ℰ(0)` and
/// `ℰ(t) ≤ (1+t)^{-1/3} [ℰ(0) + M₂(0)/6]`, each with 2% slack.
pub fn bounds_check(ledger: &DiagnosticsLedger) -> Result<BoundsReport> {
    let first = *ledger
        .first()
        .ok_or_else(|| MuskatError::Parameter("bounds check on an empty ledger".into()))?;
    let (e0, m0) = (first.energy, first.m2);
    let mut moment = (0.0f64, first.t);
    let mut decay = (0.0f64, first.t);
    for row in &ledger.rows {
        let a = ratio(row.m2_inner, m0 + (row.t - first.t) * e0);
        if a > moment.0 || a.is_nan() {
            moment = (a, row.t);
        }
        let b = ratio(row.energy * (1.0 + row.t).cbrt(), e0 + m0 / 6.0);
        if b > decay.0 || b.is_nan() {
            decay = (b, row.t);
        }
    }
    Ok(BoundsReport {
        moment: GateOutcome::at_most("moment_bound", moment.0, BOUNDS_SLACK).with_time(moment.1),
        decay: GateOutcome::at_most("decay_bound", decay.0, BOUNDS_SLACK).with_time(decay.1),
    })
}
