//! Conservative explicit time stepping.
//!
//! Cell averages are advanced by forward Euler in flux form
//! `u_i ← u_i + dt/dx (J_{i+1/2} - J_{i-1/2})` with zero flux at `±L`. At an
//! interior face the `f` flux is
//!
//! ```text
//! J^f = (1+R) (f_{i+1}² - f_i²)/(2dx) + R (f - ε)_up (G_{i+1} - G_i)/dx
//! J^g = R_μ [ (g_{i+1}² - g_i²)/(2dx) + (g - ε)_up (F_{i+1} - F_i)/dx ]
//! ```
//!
//! where `F`, `G` are the smoothed fields and `(·)_up` takes the cell on the
//! side the cross term transports from: the right cell when the smoothed
//! gradient is positive, the left cell otherwise. In limit mode `ε = 0` and
//! the smoothing is the identity.
//!
//! Under the step restriction of [`stable_dt`] each update is a combination
//! of `u - ε` values with non-negative coefficients, so the floor (or
//! non-negativity) is preserved.

use serde::{Deserialize, Serialize};

use crate::error::{MuskatError, Result};
use crate::functionals::{dissipation_totals, global_functionals_with, DiagnosticsLedger};
use crate::grid::{FieldPair, Grid, PhysicalParams};
use crate::regularizer::HelmholtzWorkspace;
use crate::support::{SupportSample, SupportTrace};

/// Which system is integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// The ε-regularized system; requires `0 < ε < 1` and data `≥ ε`.
    #[default]
    Regularized,
    /// The unregularized system (ε is ignored and set to 0).
    Limit,
}

/// Face value used for the cross-diffusion terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CrossFlux {
    #[default]
    Upwind,
    /// Arithmetic mean of the two cells. Not positivity preserving; kept to
    /// exercise the invariant checks.
    Centered,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepperConfig {
    pub mode: Mode,
    /// Fraction σ ∈ (0, 1] of the positivity step bound.
    pub cfl_safety: f64,
    pub t_end: f64,
    /// Increasing times in `[0, t_end]` at which the state is stored; steps are
    /// shortened to land on them exactly.
    pub snapshot_times: Vec<f64>,
    /// Ledger sampling interval in steps.
    pub diagnostics_stride: usize,
    /// Constant step instead of the adaptive one; must respect the bound.
    pub fixed_dt: Option<f64>,
    pub max_steps: Option<u64>,
    /// Store the full state at every ledger sample.
    pub keep_frames: bool,
    /// Accumulate the dissipation integrals every step.
    pub track_dissipation: bool,
    /// Record support edges above this threshold at every ledger sample.
    pub support_threshold: Option<f64>,
    pub cross_flux: CrossFlux,
}

impl Default for StepperConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Regularized,
            cfl_safety: 0.2,
            t_end: 1.0,
            snapshot_times: Vec::new(),
            diagnostics_stride: 1,
            fixed_dt: None,
            max_steps: None,
            keep_frames: false,
            track_dissipation: true,
            support_threshold: None,
            cross_flux: CrossFlux::Upwind,
        }
    }
}

impl StepperConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(MuskatError::Parameter(m));
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return bad(format!(
                "cfl_safety must lie in (0, 1], got {}",
                self.cfl_safety
            ));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return bad(format!("t_end must be positive, got {}", self.t_end));
        }
        if self.diagnostics_stride == 0 {
            return bad("diagnostics_stride must be at least 1".into());
        }
        let mut prev = f64::NEG_INFINITY;
        for &t in &self.snapshot_times {
            if !(t >= 0.0 && t <= self.t_end && t > prev) {
                return bad(format!(
                    "snapshot times must be increasing within [0, t_end], got {:?}",
                    self.snapshot_times
                ));
            }
            prev = t;
        }
        if let Some(dt) = self.fixed_dt {
            if !(dt.is_finite() && dt > 0.0) {
                return bad(format!("fixed dt must be positive, got {dt}"));
            }
        }
        Ok(())
    }

    /// Parameters actually integrated in this mode.
    pub fn effective_params(&self, params: &PhysicalParams) -> Result<PhysicalParams> {
        params.validate()?;
        match self.mode {
            Mode::Limit => Ok(params.limit()),
            Mode::Regularized => {
                if !(params.eps > 0.0 && params.eps < 1.0) {
                    return Err(MuskatError::Parameter(format!(
                        "regularized mode needs 0 < eps < 1, got {}",
                        params.eps
                    )));
                }
                Ok(*params)
            }
        }
    }
}

/// A stored state.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub t: f64,
    pub state: FieldPair,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub grid: Grid,
    /// Parameters as integrated (`ε = 0` in limit mode).
    pub params: PhysicalParams,
    pub mode: Mode,
    pub snapshots: Vec<Frame>,
    pub ledger: DiagnosticsLedger,
    /// States at ledger times when `keep_frames` is set.
    pub frames: Vec<Frame>,
    pub support: Option<SupportTrace>,
    /// `∫₀ᵀ ∫ U² + R R_μ V² dx dt`.
    pub d_energy: f64,
    /// `R/(1+2R) ∫₀ᵀ ∫ |∂x f|² + R|∂x(f+g)|² dx dt`.
    pub d_entropy: f64,
    /// Mass added by clipping round-off negatives in limit mode, per species.
    pub clipped_mass: [f64; 2],
    /// Smallest cell value of each species seen over the run.
    pub min_values: [f64; 2],
    pub steps: u64,
    pub final_time: f64,
    pub final_state: FieldPair,
    /// Set when the observer ended the run before `t_end`.
    pub stopped_early: bool,
}

/// Largest forward-Euler step keeping every update a non-negative combination,
/// scaled by `sigma`:
/// `dt = σ dx² / (2 max{D_f, D_g})` with
/// `D_f = (1+R) max f + R osc g` and `D_g = R_μ (max g + osc f)`.
/// The smoothed fields obey the same bounds as the raw ones, so the raw
/// oscillations bound the cross terms. Returns `σ dx²` for a flat zero state.
pub fn stable_dt(state: &FieldPair, params: &PhysicalParams, grid: &Grid, sigma: f64) -> f64 {
    let (fmin, fmax) = min_max(&state.f);
    let (gmin, gmax) = min_max(&state.g);
    let d_f = (1.0 + params.r) * fmax + params.r * (gmax - gmin);
    let d_g = params.r_mu * (gmax + (fmax - fmin));
    let d = d_f.max(d_g);
    let dx2 = grid.dx() * grid.dx();
    if d > 0.0 {
        sigma * dx2 / (2.0 * d)
    } else {
        sigma * dx2
    }
}

fn min_max(u: &[f64]) -> (f64, f64) {
    u.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        })
}

/// Reusable stepping state for one grid and parameter set.
#[derive(Debug, Clone)]
pub struct Stepper {
    grid: Grid,
    params: PhysicalParams,
    ws: HelmholtzWorkspace,
    cross: CrossFlux,
    big_f: Vec<f64>,
    big_g: Vec<f64>,
    flux_f: Vec<f64>,
    flux_g: Vec<f64>,
    clipped: [f64; 2],
}

impl Stepper {
    /// `params` are used as given; pass `params.limit()` for the limit system.
    pub fn new(grid: &Grid, params: &PhysicalParams, cross: CrossFlux) -> Result<Self> {
        params.validate()?;
        let n = grid.len();
        Ok(Self {
            grid: grid.clone(),
            params: *params,
            ws: HelmholtzWorkspace::new(grid, params.eps)?,
            cross,
            big_f: vec![0.0; n],
            big_g: vec![0.0; n],
            flux_f: vec![0.0; n + 1],
            flux_g: vec![0.0; n + 1],
            clipped: [0.0; 2],
        })
    }

    pub fn params(&self) -> &PhysicalParams {
        &self.params
    }

    pub fn workspace(&self) -> &HelmholtzWorkspace {
        &self.ws
    }

    pub fn clipped_mass(&self) -> [f64; 2] {
        self.clipped
    }

    /// One forward-Euler step in place. `t` is only used in diagnostics.
    pub fn advance(&mut self, state: &mut FieldPair, dt: f64, t: f64) -> Result<()> {
        let n = self.grid.len();
        if state.f.len() != n || state.g.len() != n {
            return Err(MuskatError::Parameter(
                "state does not match the stepper grid".into(),
            ));
        }
        let eps = self.params.eps;
        let r = self.params.r;
        let r_mu = self.params.r_mu;
        let dx = self.grid.dx();
        let half_inv_dx = 0.5 / dx;
        let inv_dx = 1.0 / dx;
        let upwind = self.cross == CrossFlux::Upwind;

        self.ws.solve_into(&state.f, &mut self.big_f);
        self.ws.solve_into(&state.g, &mut self.big_g);

        let (f, g) = (&state.f, &state.g);
        let (bf, bg) = (&self.big_f, &self.big_g);
        // Interior faces j + 1/2 stored at index j + 1; indices 0 and n stay zero.
        for j in 0..n - 1 {
            let (fl, fr) = (f[j], f[j + 1]);
            let (gl, gr) = (g[j], g[j + 1]);
            let d_big_g = bg[j + 1] - bg[j];
            let d_big_f = bf[j + 1] - bf[j];
            let (hf, hg) = if upwind {
                (
                    if d_big_g > 0.0 { fr - eps } else { fl - eps },
                    if d_big_f > 0.0 { gr - eps } else { gl - eps },
                )
            } else {
                (0.5 * (fl + fr) - eps, 0.5 * (gl + gr) - eps)
            };
            // Grouped so that a lone species sees the same arithmetic in either slot.
            self.flux_f[j + 1] =
                (1.0 + r) * ((fr * fr - fl * fl) * half_inv_dx) + r * hf * d_big_g * inv_dx;
            self.flux_g[j + 1] = r_mu * ((gr * gr - gl * gl) * half_inv_dx + hg * d_big_f * inv_dx);
        }

        let scale = f.iter().chain(g.iter()).fold(0.0f64, |m, v| m.max(*v));
        let lam = dt * inv_dx;
        for (k, (u, flux)) in [(&mut state.f, &self.flux_f), (&mut state.g, &self.flux_g)]
            .into_iter()
            .enumerate()
        {
            for i in 0..n {
                u[i] += lam * (flux[i + 1] - flux[i]);
            }
            let species = if k == 0 { 'f' } else { 'g' };
            for (i, v) in u.iter_mut().enumerate() {
                if !v.is_finite() {
                    return Err(MuskatError::Invariant {
                        t: t + dt,
                        species,
                        cell: i,
                        value: *v,
                        reason: "non-finite value".into(),
                    });
                }
                if eps > 0.0 {
                    if *v < eps - 1e-13 * scale.max(1.0) {
                        return Err(MuskatError::Invariant {
                            t: t + dt,
                            species,
                            cell: i,
                            value: *v,
                            reason: format!("fell below the floor {eps}"),
                        });
                    }
                } else if *v < 0.0 {
                    if *v < -1e-14 * scale {
                        return Err(MuskatError::Invariant {
                            t: t + dt,
                            species,
                            cell: i,
                            value: *v,
                            reason: "negative thickness".into(),
                        });
                    }
                    self.clipped[k] -= *v * dx;
                    *v = 0.0;
                }
            }
        }
        Ok(())
    }
}

/// One checked step: `dt` must not exceed the positivity bound (σ = 1).
pub fn step(
    state: &FieldPair,
    params: &PhysicalParams,
    grid: &Grid,
    dt: f64,
    workspace: &HelmholtzWorkspace,
) -> Result<FieldPair> {
    if !workspace.matches(grid, params.eps) {
        return Err(MuskatError::Parameter(
            "workspace does not match grid and eps".into(),
        ));
    }
    state.check_admissible(grid)?;
    let bound = stable_dt(state, params, grid, 1.0);
    if !(dt > 0.0 && dt <= bound) {
        return Err(MuskatError::Parameter(format!(
            "dt = {dt:e} outside (0, {bound:e}] (stability bound)"
        )));
    }
    let mut stepper = Stepper::new(grid, params, CrossFlux::Upwind)?;
    let mut out = state.clone();
    stepper.advance(&mut out, dt, 0.0)?;
    Ok(out)
}

/// Integrates from `initial` to `config.t_end`.
pub fn run(
    initial: &FieldPair,
    params: &PhysicalParams,
    grid: &Grid,
    config: &StepperConfig,
) -> Result<Trajectory> {
    run_with_observer(initial, params, grid, config, |_, _| false)
}

/// As [`run`], calling `observer(t, state)` at every ledger sample; the run
/// stops after the sample if it returns `true`.
pub fn run_with_observer<O>(
    initial: &FieldPair,
    params: &PhysicalParams,
    grid: &Grid,
    config: &StepperConfig,
    mut observer: O,
) -> Result<Trajectory>
where
    O: FnMut(f64, &FieldPair) -> bool,
{
    config.validate()?;
    let params = config.effective_params(params)?;
    initial.check_admissible(grid)?;
    if params.eps > 0.0 {
        let m = initial
            .f
            .iter()
            .chain(&initial.g)
            .fold(f64::INFINITY, |a, b| a.min(*b));
        if m < params.eps * (1.0 - 1e-12) {
            return Err(MuskatError::Admissibility(format!(
                "regularized data must be at least eps = {}, found {m}",
                params.eps
            )));
        }
    }
    if let Some(delta) = config.support_threshold {
        if delta <= params.eps {
            return Err(MuskatError::Parameter(format!(
                "support threshold {delta} must exceed eps = {}",
                params.eps
            )));
        }
    }

    let mut stepper = Stepper::new(grid, &params, config.cross_flux)?;
    let mut state = initial.clone();
    let mut t = 0.0;
    let mut steps: u64 = 0;
    let mut d_energy = 0.0;
    let mut d_entropy = 0.0;
    let mut min_values = [min_max(&state.f).0, min_max(&state.g).0];

    let mut snapshots = Vec::new();
    let mut pending = config.snapshot_times.iter().copied().peekable();
    if pending.peek() == Some(&0.0) {
        snapshots.push(Frame {
            t: 0.0,
            state: state.clone(),
        });
        pending.next();
    }

    let mut ledger = DiagnosticsLedger::default();
    let mut frames = Vec::new();
    let mut support = config.support_threshold.map(SupportTrace::new);
    let mut sample = |t: f64,
                      state: &FieldPair,
                      d_energy: f64,
                      d_entropy: f64,
                      ws: &HelmholtzWorkspace,
                      ledger: &mut DiagnosticsLedger,
                      frames: &mut Vec<Frame>,
                      support: &mut Option<SupportTrace>|
     -> Result<bool> {
        let row =
            global_functionals_with(state, &params, grid, ws)?.into_row(t, d_energy, d_entropy);
        ledger.push(row);
        if config.keep_frames {
            frames.push(Frame {
                t,
                state: state.clone(),
            });
        }
        if let Some(trace) = support.as_mut() {
            trace.push(SupportSample::measure(t, state, grid, trace.threshold));
        }
        Ok(observer(t, state))
    };

    let mut stopped_early = sample(
        0.0,
        &state,
        0.0,
        0.0,
        stepper.workspace(),
        &mut ledger,
        &mut frames,
        &mut support,
    )?;
    let mut rates = if config.track_dissipation {
        dissipation_totals(&state, &params, grid.dx())
    } else {
        (0.0, 0.0)
    };

    while !stopped_early && t < config.t_end {
        if config.max_steps.is_some_and(|m| steps >= m) {
            break;
        }
        let bound = stable_dt(&state, &params, grid, config.cfl_safety);
        let mut dt = match config.fixed_dt {
            Some(dt) if dt > bound => {
                return Err(MuskatError::Parameter(format!(
                    "fixed dt = {dt:e} exceeds the stability bound {bound:e} at t = {t:e}"
                )))
            }
            Some(dt) => dt,
            None => bound,
        };
        let target = pending
            .peek()
            .copied()
            .unwrap_or(config.t_end)
            .min(config.t_end);
        let landing = t + dt >= target;
        if landing {
            dt = target - t;
        }
        stepper.advance(&mut state, dt, t)?;
        t = if landing { target } else { t + dt };
        steps += 1;

        if config.track_dissipation {
            let new_rates = dissipation_totals(&state, &params, grid.dx());
            d_energy += 0.5 * dt * (rates.0 + new_rates.0);
            d_entropy += 0.5 * dt * (rates.1 + new_rates.1);
            rates = new_rates;
        }
        min_values[0] = min_values[0].min(min_max(&state.f).0);
        min_values[1] = min_values[1].min(min_max(&state.g).0);

        if landing && pending.peek() == Some(&target) {
            snapshots.push(Frame {
                t,
                state: state.clone(),
            });
            pending.next();
        }
        let last = t >= config.t_end || config.max_steps.is_some_and(|m| steps >= m);
        if steps % config.diagnostics_stride as u64 == 0 || last {
            stopped_early = sample(
                t,
                &state,
                d_energy,
                d_entropy,
                stepper.workspace(),
                &mut ledger,
                &mut frames,
                &mut support,
            )?;
        }
    }
    let stopped_early = stopped_early && t < config.t_end;

    Ok(Trajectory {
        grid: grid.clone(),
        params,
        mode: config.mode,
        snapshots,
        ledger,
        frames,
        support,
        d_energy,
        d_entropy,
        clipped_mass: stepper.clipped_mass(),
        min_values,
        steps,
        final_time: t,
        final_state: state,
        stopped_early,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initial::{make_initial_datum, InitialDatumSpec};
    use proptest::prelude::*;

    fn unit(eps: f64) -> PhysicalParams {
        PhysicalParams::new(1.0, 1.0, eps).unwrap()
    }

    #[test]
    fn stable_dt_examples() {
        // dx = 0.1
        let grid = Grid::new(1.0, 20).unwrap();
        let z = FieldPair::zeros(20);
        assert!((stable_dt(&z, &unit(0.0), &grid, 0.2) - 0.002).abs() < 1e-15);
        let s = FieldPair::constant(20, 1.0, 0.0);
        assert!((stable_dt(&s, &unit(0.0), &grid, 0.2) - 0.0005).abs() < 1e-15);
        let fine = Grid::new(1.0, 40).unwrap();
        let s2 = FieldPair::constant(40, 1.0, 0.0);
        let ratio = stable_dt(&s, &unit(0.0), &grid, 0.2) / stable_dt(&s2, &unit(0.0), &fine, 0.2);
        assert!((ratio - 4.0).abs() < 1e-12);
    }

    #[test]
    fn flat_floor_state_is_stationary() {
        let grid = Grid::new(1.0, 32).unwrap();
        let params = unit(0.01);
        let ws = HelmholtzWorkspace::new(&grid, 0.01).unwrap();
        let s = FieldPair::constant(32, 0.01, 0.01);
        let dt = stable_dt(&s, &params, &grid, 0.2);
        let out = step(&s, &params, &grid, dt, &ws).unwrap();
        assert!(out.f.iter().chain(&out.g).all(|v| (v - 0.01).abs() < 1e-17));
    }

    #[test]
    fn step_rejects_large_dt() {
        let grid = Grid::new(1.0, 32).unwrap();
        let params = unit(0.0);
        let ws = HelmholtzWorkspace::new(&grid, 0.0).unwrap();
        let s = FieldPair::constant(32, 1.0, 0.5);
        let dt = stable_dt(&s, &params, &grid, 1.0);
        assert!(step(&s, &params, &grid, dt * 1.01, &ws).is_err());
        assert!(step(&s, &params, &grid, dt, &ws).is_ok());
    }

    #[test]
    fn zero_data_stays_zero() {
        let grid = Grid::new(1.0, 16).unwrap();
        let cfg = StepperConfig {
            mode: Mode::Limit,
            t_end: 0.1,
            snapshot_times: vec![0.0, 0.05, 0.1],
            ..Default::default()
        };
        let traj = run(&FieldPair::zeros(16), &unit(0.0), &grid, &cfg).unwrap();
        assert_eq!(traj.snapshots.len(), 3);
        assert!(traj.snapshots.iter().all(|s| s
            .state
            .f
            .iter()
            .chain(&s.state.g)
            .all(|v| *v == 0.0)));
        assert_eq!(traj.d_energy, 0.0);
    }

    #[test]
    fn snapshots_land_exactly() {
        let grid = Grid::new(2.0, 32).unwrap();
        let f = make_initial_datum(
            &InitialDatumSpec::Bump {
                center: 0.0,
                half_width: 1.0,
                height: 1.0,
            },
            &grid,
        )
        .unwrap();
        let cfg = StepperConfig {
            mode: Mode::Limit,
            t_end: 0.3,
            snapshot_times: vec![0.1, 0.2, 0.3],
            diagnostics_stride: 7,
            ..Default::default()
        };
        let traj = run(
            &FieldPair::new(f, vec![0.0; 32]).unwrap(),
            &unit(0.0),
            &grid,
            &cfg,
        )
        .unwrap();
        let times: Vec<f64> = traj.snapshots.iter().map(|s| s.t).collect();
        assert_eq!(times, vec![0.1, 0.2, 0.3]);
        assert_eq!(traj.final_time, 0.3);
        assert_eq!(traj.ledger.last().unwrap().t, 0.3);
        assert!(traj.ledger.rows.windows(2).all(|w| w[1].t > w[0].t));
    }

    #[test]
    fn config_validation() {
        let bad = [
            StepperConfig {
                cfl_safety: 0.0,
                ..Default::default()
            },
            StepperConfig {
                cfl_safety: 1.5,
                ..Default::default()
            },
            StepperConfig {
                t_end: 0.0,
                ..Default::default()
            },
            StepperConfig {
                snapshot_times: vec![0.5, 0.2],
                ..Default::default()
            },
            StepperConfig {
                snapshot_times: vec![2.0],
                ..Default::default()
            },
            StepperConfig {
                diagnostics_stride: 0,
                ..Default::default()
            },
        ];
        for c in bad {
            assert!(c.validate().is_err(), "{c:?}");
        }
        let grid = Grid::new(1.0, 8).unwrap();
        // Regularized mode needs eps in (0, 1) and data above the floor.
        let cfg = StepperConfig::default();
        assert!(run(&FieldPair::constant(8, 0.1, 0.1), &unit(0.0), &grid, &cfg).is_err());
        assert!(run(
            &FieldPair::constant(8, 0.001, 0.1),
            &unit(0.01),
            &grid,
            &cfg
        )
        .is_err());
    }

    #[test]
    fn fixed_dt_above_bound_is_rejected() {
        let grid = Grid::new(1.0, 16).unwrap();
        let s = FieldPair::constant(16, 1.0, 1.0);
        let bound = stable_dt(&s, &unit(0.0), &grid, 0.2);
        let cfg = StepperConfig {
            mode: Mode::Limit,
            fixed_dt: Some(bound * 2.0),
            ..Default::default()
        };
        assert!(matches!(
            run(&s, &unit(0.0), &grid, &cfg),
            Err(MuskatError::Parameter(_))
        ));
    }

    fn random_state(values: &[(f64, f64)], eps: f64) -> FieldPair {
        FieldPair::new(
            values.iter().map(|p| p.0 + eps).collect(),
            values.iter().map(|p| p.1 + eps).collect(),
        )
        .unwrap()
    }

    proptest! {
        #[test]
        fn mass_and_floor_preserved_by_a_step(
            values in proptest::collection::vec((0.0f64..2.0, 0.0f64..2.0), 8..80),
            eps in prop_oneof![Just(0.0), 1e-4f64..0.2],
            r in 0.1f64..5.0,
            r_mu in 0.1f64..5.0,
            sigma in 0.05f64..1.0,
            zeros in proptest::collection::vec(any::<bool>(), 80),
        ) {
            let n = values.len() & !1;
            let mut vals: Vec<(f64, f64)> = values[..n].to_vec();
            // Introduce exact zeros (support edges) in limit mode.
            if eps == 0.0 {
                for (v, z) in vals.iter_mut().zip(&zeros) {
                    if *z { v.0 = 0.0; }
                }
            }
            let grid = Grid::new(1.0, n).unwrap();
            let params = PhysicalParams::new(r, r_mu, eps).unwrap();
            let ws = HelmholtzWorkspace::new(&grid, eps).unwrap();
            let s = random_state(&vals, eps);
            let dt = stable_dt(&s, &params, &grid, sigma);
            let out = step(&s, &params, &grid, dt, &ws).unwrap();
            for (a, b) in [(&s.f, &out.f), (&s.g, &out.g)] {
                let m0: f64 = a.iter().sum();
                let m1: f64 = b.iter().sum();
                prop_assert!((m0 - m1).abs() <= 1e-13 * m0.max(1e-300));
                prop_assert!(b.iter().all(|v| *v >= eps - 1e-15));
            }
        }
    }
}
