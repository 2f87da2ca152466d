//! Weighted (local) energy estimates over stored trajectory frames.
//!
//! For a cutoff `ζ` the ledger evaluates, at every stored frame time `T`,
//!
//! ```text
//! WL2:  ∫ e ζ²(T) + ∫∫ d ζ²       ≤ ∫ e ζ²(0) + 4 ∫∫ s |ζ'|²
//! WLB:  ∫ w^{4/3} ζ²(T) + C₁ ∫∫ |∂x w|² ζ² ≤ ∫ w^{4/3} ζ²(0) + C₂ ∫∫ w² |ζ'|²
//! ```
//!
//! with `e = f² + R(f+g)²`, `d = f|(1+R)∂x f + R∂x g|² + R R_μ g|∂x f + ∂x g|²`
//! and `s = f((1+R)f + Rg)² + R R_μ g(f+g)²`. Time integrals use the
//! trapezoidal rule over the frames.

use serde::{Deserialize, Serialize};

use super::derivative_at;
use crate::error::{MuskatError, Result};
use crate::gate::GateOutcome;
use crate::grid::{FieldPair, Grid, PhysicalParams};
use crate::solver::Trajectory;

/// Multiplicative slack on WL2 and WLB.
pub const LEDGER_SLACK: f64 = 0.05;
/// Absolute slack on WL2 and WLB.
pub const LEDGER_ABS: f64 = 1e-10;

/// Cutoff function for the local estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Weight {
    /// `ζ ≡ 1`.
    Unit,
    /// `ζ(x) = (radius - |x - center|)₊`.
    Hat { center: f64, radius: f64 },
}

impl Weight {
    /// Center and radius of the hat used for `I(r,T)` and `u_k(r,T)`. The
    /// unit weight uses the hat spanning the whole domain.
    fn hat(&self, grid: &Grid) -> (f64, f64) {
        match *self {
            Weight::Unit => (0.0, grid.half_width()),
            Weight::Hat { center, radius } => (center, radius),
        }
    }

    fn check(&self, grid: &Grid) -> Result<()> {
        if let Weight::Hat { center, radius } = *self {
            let l = grid.half_width();
            let slop = 1e-12 * l;
            if !(radius > 0.0 && radius.is_finite()) {
                return Err(MuskatError::Geometry(format!(
                    "hat radius must be positive, got {radius}"
                )));
            }
            if center - radius < -l - slop || center + radius > l + slop {
                return Err(MuskatError::Geometry(format!(
                    "hat [{}, {}] leaves the domain (-{l}, {l})",
                    center - radius,
                    center + radius
                )));
            }
        }
        Ok(())
    }

    /// `(ζ², |ζ'|²)` at `x`.
    fn at(&self, x: f64) -> (f64, f64) {
        match *self {
            Weight::Unit => (1.0, 0.0),
            Weight::Hat { center, radius } => {
                let s = radius - (x - center).abs();
                if s > 0.0 {
                    (s * s, 1.0)
                } else {
                    (0.0, 0.0)
                }
            }
        }
    }
}

/// Constants of the `w`-form local estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WlbConstants {
    pub c1: f64,
    pub c2: f64,
}

impl WlbConstants {
    /// `C₁ = (2 max{1, √R/R_μ})⁻¹`, `C₂ = 8 max{R_μ/√R, √(1+R)}`.
    pub fn new(params: &PhysicalParams) -> Self {
        Self {
            c1: 1.0 / Self::pointwise_factor(params),
            c2: 8.0 * (params.r_mu / params.r.sqrt()).max((1.0 + params.r).sqrt()),
        }
    }

    /// The factor `2 max{1, √R/R_μ}` of the pointwise gradient bound.
    pub fn pointwise_factor(params: &PhysicalParams) -> f64 {
        2.0 * (params.r.sqrt() / params.r_mu).max(1.0)
    }
}

/// Both sides of a weighted inequality at the final time, with the gate
/// evaluated at the worst frame.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightedCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub gate: GateOutcome,
}

/// Result of scanning the pointwise bound
/// `|∂x w|² ≤ 2 max{1, √R/R_μ} d` over every cell of every frame.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HaendelScan {
    pub cells_checked: usize,
    pub violations: usize,
    /// `max |∂x w|² / d` over cells with `d > 0`.
    pub max_ratio: f64,
    /// The constant the ratio is compared against.
    pub factor: f64,
    pub gate: GateOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalEnergyReport {
    pub weight: Weight,
    pub constants: WlbConstants,
    pub wl2: WeightedCheck,
    pub wlb: WeightedCheck,
    /// `sup_t ∫ w^{4/3} (r - |x-a|)₊² dx`.
    pub i_of_rt: f64,
    /// `u_k = ∫∫ |∂x w|² (r - |x-a|)₊^k dx dt` for `k = 0, 1, 2`.
    pub u: [f64; 3],
    /// `u₁² ≤ u₀ u₂`.
    pub cauchy_schwarz: GateOutcome,
    pub haendel: HaendelScan,
}

impl LocalEnergyReport {
    pub fn pass(&self) -> bool {
        self.wl2.gate.pass
            && self.wlb.gate.pass
            && self.cauchy_schwarz.pass
            && self.haendel.gate.pass
    }
}

/// Per-frame spatial integrals.
#[derive(Debug, Default, Clone, Copy)]
struct FrameSums {
    e: f64,
    diss: f64,
    src: f64,
    grad_w: f64,
    w2: f64,
    i_r: f64,
    u: [f64; 3],
}

struct PointwiseTally {
    cells: usize,
    violations: usize,
    max_ratio: f64,
}

fn frame_sums(
    state: &FieldPair,
    params: &PhysicalParams,
    grid: &Grid,
    weight: &Weight,
    tally: &mut PointwiseTally,
) -> FrameSums {
    let r = params.r;
    let rr = r * params.r_mu;
    let factor = WlbConstants::pointwise_factor(params);
    let (a, rad) = weight.hat(grid);
    let inv_dx = 1.0 / grid.dx();
    let mut s = FrameSums::default();
    for (i, &x) in grid.centers().iter().enumerate() {
        let (f, g) = (state.f[i], state.g[i]);
        let v = f + g;
        let e = f * f + r * v * v;
        let df = derivative_at(&state.f, i, inv_dx);
        let dg = derivative_at(&state.g, i, inv_dx);
        let p = (1.0 + r) * df + r * dg;
        let q = df + dg;
        let d = f * p * p + rr * g * q * q;
        let src = f * ((1.0 + r) * f + r * g).powi(2) + rr * g * v * v;
        let (w, dw) = if e > 0.0 {
            (e.powf(0.75), 1.5 * (f * df + r * v * q) / e.powf(0.25))
        } else {
            (0.0, 0.0)
        };
        let dw2 = dw * dw;

        tally.cells += 1;
        if dw2 > factor * d * (1.0 + 1e-12) {
            tally.violations += 1;
        }
        if d > 0.0 {
            tally.max_ratio = tally.max_ratio.max(dw2 / d);
        } else if dw2 > 0.0 {
            tally.max_ratio = f64::INFINITY;
        }

        let (z2, dz2) = weight.at(x);
        s.e += e * z2;
        s.diss += d * z2;
        s.src += src * dz2;
        s.grad_w += dw2 * z2;
        s.w2 += w * w * dz2;
        let h = rad - (x - a).abs();
        if h > 0.0 {
            s.i_r += e * h * h;
            s.u[0] += dw2;
            s.u[1] += dw2 * h;
            s.u[2] += dw2 * h * h;
        }
    }
    let dx = grid.dx();
    s.e *= dx;
    s.diss *= dx;
    s.src *= dx;
    s.grad_w *= dx;
    s.w2 *= dx;
    s.i_r *= dx;
    for u in &mut s.u {
        *u *= dx;
    }
    s
}

fn ledger_gate(name: &str, lhs: f64, rhs: f64) -> GateOutcome {
    GateOutcome::at_most(name, lhs, rhs * (1.0 + LEDGER_SLACK) + LEDGER_ABS)
}

/// Evaluates WL2, WLB, `I(r,T)`, `u_k(r,T)` and the pointwise gradient bound
/// for one weight over the stored frames of `traj`.
pub fn local_energy_ledger(traj: &Trajectory, weight: Weight) -> Result<LocalEnergyReport> {
    let grid = &traj.grid;
    let params = &traj.params;
    weight.check(grid)?;
    if traj.frames.is_empty() {
        return Err(MuskatError::Parameter(
            "local energy ledger needs stored frames (keep_frames = true)".into(),
        ));
    }
    let consts = WlbConstants::new(params);
    let mut tally = PointwiseTally {
        cells: 0,
        violations: 0,
        max_ratio: 0.0,
    };

    let mut prev: Option<(f64, FrameSums)> = None;
    let mut first = FrameSums::default();
    let (mut int_diss, mut int_src, mut int_grad, mut int_w2) = (0.0, 0.0, 0.0, 0.0);
    let mut u = [0.0; 3];
    let mut i_of_rt: f64 = 0.0;
    let mut wl2: Option<(f64, f64, GateOutcome)> = None;
    let mut wlb: Option<(f64, f64, GateOutcome)> = None;

    for frame in &traj.frames {
        let s = frame_sums(&frame.state, params, grid, &weight, &mut tally);
        match prev {
            None => first = s,
            Some((t0, p)) => {
                let h = 0.5 * (frame.t - t0);
                int_diss += h * (p.diss + s.diss);
                int_src += h * (p.src + s.src);
                int_grad += h * (p.grad_w + s.grad_w);
                int_w2 += h * (p.w2 + s.w2);
                for k in 0..3 {
                    u[k] += h * (p.u[k] + s.u[k]);
                }
            }
        }
        i_of_rt = i_of_rt.max(s.i_r);

        let l2 = (s.e + int_diss, first.e + 4.0 * int_src);
        let lb = (s.e + consts.c1 * int_grad, first.e + consts.c2 * int_w2);
        for (slot, (lhs, rhs), name) in [(&mut wl2, l2, "wl2"), (&mut wlb, lb, "wlb")] {
            let g = ledger_gate(name, lhs, rhs).with_time(frame.t);
            let replace = match slot {
                None => true,
                Some((_, _, old)) => g.margin < old.margin,
            };
            let keep_gate = if replace {
                g
            } else {
                slot.as_ref().unwrap().2.clone()
            };
            *slot = Some((lhs, rhs, keep_gate));
        }
        prev = Some((frame.t, s));
    }

    let (l2_lhs, l2_rhs, l2_gate) = wl2.expect("frames are non-empty");
    let (lb_lhs, lb_rhs, lb_gate) = wlb.expect("frames are non-empty");
    let factor = WlbConstants::pointwise_factor(params);
    let haendel = HaendelScan {
        cells_checked: tally.cells,
        violations: tally.violations,
        max_ratio: tally.max_ratio,
        factor,
        gate: GateOutcome::at_most("haendel_violations", tally.violations as f64, 0.0),
    };
    let cs_bound = u[0] * u[2];
    Ok(LocalEnergyReport {
        weight,
        constants: consts,
        wl2: WeightedCheck {
            lhs: l2_lhs,
            rhs: l2_rhs,
            gate: l2_gate,
        },
        wlb: WeightedCheck {
            lhs: lb_lhs,
            rhs: lb_rhs,
            gate: lb_gate,
        },
        i_of_rt,
        u,
        cauchy_schwarz: GateOutcome::at_most(
            "u1_sq_le_u0_u2",
            u[1] * u[1],
            cs_bound * (1.0 + 1e-12),
        ),
        haendel,
    })
}

/// Pointwise gradient-bound scan of a single state.
pub fn haendel_scan(
    state: &FieldPair,
    params: &PhysicalParams,
    grid: &Grid,
) -> Result<HaendelScan> {
    state.check_admissible(grid)?;
    let mut tally = PointwiseTally {
        cells: 0,
        violations: 0,
        max_ratio: 0.0,
    };
    frame_sums(state, params, grid, &Weight::Unit, &mut tally);
    Ok(HaendelScan {
        cells_checked: tally.cells,
        violations: tally.violations,
        max_ratio: tally.max_ratio,
        factor: WlbConstants::pointwise_factor(params),
        gate: GateOutcome::at_most("haendel_violations", tally.violations as f64, 0.0),
    })
}
