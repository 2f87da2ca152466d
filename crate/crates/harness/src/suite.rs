//! The verification suite.
//!
//! `Level::Full` runs the acceptance matrix (checks `"1"` to `"11"`), then
//! repeats it and compares the serialized results byte for byte (check
//! `"12"`). `Level::Fast` runs property tests, oracle self-checks and one
//! small coupled run, with the same repeat comparison.
//!
//! Checks are independent jobs spread over a rayon pool whose size comes from
//! the `MUSKAT_WORKERS` environment variable; each job is sequential and the
//! results are reported in a fixed order, so the summary does not depend on
//! the worker count.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use muskat_core::functionals::{balance_check, local_energy_ledger, star_inequality_check, Weight};
use muskat_core::oracle::{bounds_check, decoupled_compare, Barenblatt, DecoupledConfig, Species};
use muskat_core::regularizer::{helmholtz_inverse, HelmholtzWorkspace};
use muskat_core::solver::{self, step, CrossFlux, Mode, StepperConfig, Trajectory};
use muskat_core::support::{
    default_threshold, fit_growth_exponent, waiting_criterion, waiting_time, GapProbe, Verdict,
};
use muskat_core::{
    make_initial_datum, regularize_initial_datum, FieldPair, GateOutcome, Grid, InitialDatumSpec,
    MuskatError, PhysicalParams,
};

/// Environment variable holding the worker count.
pub const WORKERS_ENV: &str = "MUSKAT_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Fast,
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteOptions {
    pub level: Level,
    pub seed: u64,
    /// Cross-term face values for every coupled run; `centered` disables the
    /// upwinding as a fault injection.
    pub cross_flux: CrossFlux,
    /// Restrict to these check keys; all when empty.
    pub only: Vec<String>,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            level: Level::Fast,
            seed: 0,
            cross_flux: CrossFlux::Upwind,
            only: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub key: String,
    pub title: String,
    pub pass: bool,
    pub gates: Vec<GateOutcome>,
    pub details: Value,
}

impl CheckResult {
    fn new(key: &str, title: &str, gates: Vec<GateOutcome>, details: Value) -> Self {
        Self {
            key: key.into(),
            title: title.into(),
            pass: !gates.is_empty() && gates.iter().all(|g| g.pass),
            gates,
            details,
        }
    }

    fn failed(key: &str, title: &str, err: &MuskatError) -> Self {
        let gate = match err {
            MuskatError::Invariant { t, value, .. } => {
                GateOutcome::at_least("positivity", *value, 0.0).with_time(*t)
            }
            _ => GateOutcome::flag("completed", false),
        };
        Self::new(key, title, vec![gate], json!({ "error": err.to_string() }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteSummary {
    pub level: Level,
    pub seed: u64,
    pub cross_flux: CrossFlux,
    pub pass: bool,
    pub checks: Vec<CheckResult>,
}

/// Summary plus wall-clock time per job of the first pass. Timings are kept
/// out of the summary so that it stays reproducible.
#[derive(Debug, Clone)]
pub struct SuiteRun {
    pub summary: SuiteSummary,
    pub timings: Vec<(Vec<String>, Duration)>,
}

struct Ctx {
    seed: u64,
    cross: CrossFlux,
}

type JobFn = fn(&Ctx) -> Vec<CheckResult>;

struct Job {
    keys: &'static [&'static str],
    run: JobFn,
}

fn full_jobs() -> Vec<Job> {
    vec![
        Job {
            keys: &["1"],
            run: mass_conservation,
        },
        Job {
            keys: &["2", "3", "4", "5"],
            run: standard_scenario,
        },
        Job {
            keys: &["6"],
            run: star_property,
        },
        Job {
            keys: &["7"],
            run: barenblatt_convergence,
        },
        Job {
            keys: &["8"],
            run: growth_exponents,
        },
        Job {
            keys: &["9"],
            run: gap_scaling,
        },
        Job {
            keys: &["10"],
            run: waiting_times,
        },
        Job {
            keys: &["11"],
            run: long_run_bounds,
        },
    ]
}

fn fast_jobs() -> Vec<Job> {
    vec![
        Job {
            keys: &["fast-oracle"],
            run: fast_oracle,
        },
        Job {
            keys: &["fast-properties"],
            run: fast_properties,
        },
        Job {
            keys: &["6"],
            run: star_property,
        },
        Job {
            keys: &["fast-coupled"],
            run: fast_coupled,
        },
    ]
}

/// Worker count from [`WORKERS_ENV`], defaulting to the available cores.
pub fn worker_count() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|n| *n > 0)
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
}

fn run_jobs(
    opts: &SuiteOptions,
    pool: &rayon::ThreadPool,
) -> (Vec<CheckResult>, Vec<(Vec<String>, Duration)>) {
    let jobs = match opts.level {
        Level::Fast => fast_jobs(),
        Level::Full => full_jobs(),
    };
    let jobs: Vec<Job> = jobs
        .into_iter()
        .filter(|j| opts.only.is_empty() || j.keys.iter().any(|k| opts.only.iter().any(|o| o == k)))
        .collect();
    let ctx = Ctx {
        seed: opts.seed,
        cross: opts.cross_flux,
    };
    let done: Vec<(Vec<CheckResult>, Duration)> = pool.install(|| {
        jobs.par_iter()
            .map(|j| {
                let start = Instant::now();
                let out = (j.run)(&ctx);
                (out, start.elapsed())
            })
            .collect()
    });
    let mut checks = Vec::new();
    let mut timings = Vec::new();
    for (job, (out, dt)) in jobs.iter().zip(done) {
        timings.push((job.keys.iter().map(|k| k.to_string()).collect(), dt));
        checks.extend(
            out.into_iter()
                .filter(|c| opts.only.is_empty() || opts.only.contains(&c.key)),
        );
    }
    (checks, timings)
}

pub fn run_suite(opts: &SuiteOptions) -> SuiteRun {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count())
        .build()
        .expect("thread pool");
    let (mut checks, timings) = run_jobs(opts, &pool);
    if opts.only.is_empty() || opts.only.iter().any(|k| k == "12") {
        let (again, _) = run_jobs(opts, &pool);
        let a = serde_json::to_vec(&checks).expect("serializable");
        let b = serde_json::to_vec(&again).expect("serializable");
        checks.push(CheckResult::new(
            "12",
            "repeated runs give byte-identical summaries",
            vec![GateOutcome::flag("byte_identical", a == b)],
            json!({ "bytes": a.len() }),
        ));
    }
    SuiteRun {
        summary: SuiteSummary {
            level: opts.level,
            seed: opts.seed,
            cross_flux: opts.cross_flux,
            pass: checks.iter().all(|c| c.pass),
            checks,
        },
        timings,
    }
}

fn unit_params(eps: f64) -> PhysicalParams {
    PhysicalParams::new(1.0, 1.0, eps).expect("valid parameters")
}

fn datum(spec: InitialDatumSpec, grid: &Grid) -> Vec<f64> {
    make_initial_datum(&spec, grid).expect("datum fits the grid")
}

fn bump(grid: &Grid, center: f64, half_width: f64, height: f64) -> Vec<f64> {
    datum(
        InitialDatumSpec::Bump {
            center,
            half_width,
            height,
        },
        grid,
    )
}

/// Overlapping bumps: `f` centered at `-1/2`, `g` at `+1/2`.
fn collision(grid: &Grid) -> FieldPair {
    FieldPair::new(bump(grid, -0.5, 0.8, 1.0), bump(grid, 0.5, 0.8, 1.0)).expect("same length")
}

fn limit_config(ctx: &Ctx, t_end: f64, stride: usize) -> StepperConfig {
    StepperConfig {
        mode: Mode::Limit,
        t_end,
        diagnostics_stride: stride,
        cross_flux: ctx.cross,
        ..Default::default()
    }
}

fn positivity(traj: &Trajectory) -> GateOutcome {
    let floor = traj.params.eps;
    GateOutcome::at_least(
        "positivity",
        traj.min_values[0].min(traj.min_values[1]),
        floor - 1e-15 * floor.max(1.0),
    )
}

fn relative_drift(now: f64, then: f64) -> f64 {
    if then == 0.0 {
        now.abs()
    } else {
        ((now - then) / then).abs()
    }
}

fn mass_conservation(ctx: &Ctx) -> Vec<CheckResult> {
    const KEY: &str = "1";
    const TITLE: &str = "mass conservation over 1e5 regularized steps";
    let body = || -> muskat_core::Result<CheckResult> {
        let params = unit_params(1e-3);
        let grid = Grid::new(8.0, 1024)?;
        let s0 = regularize_initial_datum(&collision(&grid), &params, &grid)?;
        let cfg = StepperConfig {
            mode: Mode::Regularized,
            t_end: 1e9,
            max_steps: Some(100_000),
            diagnostics_stride: 10_000,
            track_dissipation: false,
            cross_flux: ctx.cross,
            ..Default::default()
        };
        let traj = solver::run(&s0, &params, &grid, &cfg)?;
        let df = relative_drift(traj.final_state.mass_f(&grid), s0.mass_f(&grid));
        let dg = relative_drift(traj.final_state.mass_g(&grid), s0.mass_g(&grid));
        let gates = vec![
            GateOutcome::at_most("mass_drift_f", df, 1e-10),
            GateOutcome::at_most("mass_drift_g", dg, 1e-10),
            GateOutcome::at_least("steps", traj.steps as f64, 100_000.0),
            positivity(&traj),
        ];
        Ok(CheckResult::new(
            KEY,
            TITLE,
            gates,
            json!({ "steps": traj.steps, "final_time": traj.final_time }),
        ))
    };
    vec![body().unwrap_or_else(|e| CheckResult::failed(KEY, TITLE, &e))]
}

/// Hat weights of radius 2 centered at -4, -2, 0, 2, 4, plus the unit weight.
pub fn standard_weights() -> Vec<Weight> {
    let mut w = vec![Weight::Unit];
    w.extend([-4.0, -2.0, 0.0, 2.0, 4.0].map(|center| Weight::Hat {
        center,
        radius: 2.0,
    }));
    w
}

fn standard_scenario(ctx: &Ctx) -> Vec<CheckResult> {
    let titles = [
        ("2", "energy inequality on the standard coupled run"),
        ("3", "entropy inequality on the standard coupled run"),
        ("4", "local energy estimates WL2 and WLB"),
        ("5", "pointwise gradient bound for w"),
    ];
    let body = || -> muskat_core::Result<Vec<CheckResult>> {
        let params = unit_params(0.0);
        let grid = Grid::new(8.0, 1024)?;
        let cfg = StepperConfig {
            keep_frames: true,
            ..limit_config(ctx, 10.0, 800)
        };
        let traj = solver::run(&collision(&grid), &params, &grid, &cfg)?;
        let bal = balance_check(&traj.ledger)?;
        let pos = positivity(&traj);
        let mut out = vec![
            CheckResult::new(
                "2",
                titles[0].1,
                vec![bal.energy.clone(), pos.clone()],
                json!({ "steps": traj.steps, "samples": traj.ledger.len() }),
            ),
            CheckResult::new("3", titles[1].1, vec![bal.entropy.clone(), pos], json!({})),
        ];
        let mut gates = Vec::new();
        let mut details = Vec::new();
        let mut haendel = None;
        for w in standard_weights() {
            let rep = local_energy_ledger(&traj, w)?;
            let label = crate::scenario::weight_label(&w);
            for g in [&rep.wl2.gate, &rep.wlb.gate, &rep.cauchy_schwarz] {
                gates.push(g.clone().renamed(format!("{}[{label}]", g.name)));
            }
            details.push(json!({
                "weight": label,
                "wl2": [rep.wl2.lhs, rep.wl2.rhs],
                "wlb": [rep.wlb.lhs, rep.wlb.rhs],
                "i_of_rt": rep.i_of_rt,
                "u": rep.u,
            }));
            haendel.get_or_insert(rep.haendel);
        }
        out.push(CheckResult::new(
            "4",
            titles[2].1,
            gates,
            Value::Array(details),
        ));
        let h = haendel.expect("at least one weight");
        out.push(CheckResult::new(
            "5",
            titles[3].1,
            vec![h.gate.clone()],
            json!({
                "cells_checked": h.cells_checked,
                "violations": h.violations,
                "max_ratio": h.max_ratio,
                "factor": h.factor,
            }),
        ));
        Ok(out)
    };
    body().unwrap_or_else(|e| {
        titles
            .iter()
            .map(|(k, t)| CheckResult::failed(k, t, &e))
            .collect()
    })
}

/// Random piecewise-linear function sampled at `n` midpoints of `(-r, r)`.
fn random_piecewise_linear(rng: &mut ChaCha8Rng, r: f64, n: usize) -> Vec<f64> {
    let knots = rng.gen_range(2..=20usize);
    let scale = 10f64.powf(rng.gen_range(-3.0..3.0));
    let values: Vec<f64> = (0..knots)
        .map(|_| scale * rng.gen_range(-1.0..1.0))
        .collect();
    let dx = 2.0 * r / n as f64;
    (0..n)
        .map(|i| {
            let x = -r + (i as f64 + 0.5) * dx;
            let s = (x + r) / (2.0 * r) * (knots - 1) as f64;
            let k = (s.floor() as usize).min(knots - 2);
            let w = s - k as f64;
            values[k] * (1.0 - w) + values[k + 1] * w
        })
        .collect()
}

fn star_property(ctx: &Ctx) -> Vec<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let mut violations = 0usize;
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let r = rng.gen_range(0.1..10.0);
        let v = random_piecewise_linear(&mut rng, r, 2000);
        let rep = star_inequality_check(&v, r);
        if !rep.pass {
            violations += 1;
        }
        if rep.rhs > 0.0 {
            worst = worst.max(rep.lhs / rep.rhs);
        }
    }
    vec![CheckResult::new(
        "6",
        "interpolation inequality with constant 4 on random functions",
        vec![GateOutcome::at_most(
            "star_violations",
            violations as f64,
            0.0,
        )],
        json!({ "samples": 1000, "max_lhs_over_rhs": worst }),
    )]
}

fn barenblatt_convergence(_ctx: &Ctx) -> Vec<CheckResult> {
    const KEY: &str = "7";
    const TITLE: &str = "decoupled Barenblatt convergence";
    let body = || -> muskat_core::Result<CheckResult> {
        let params = unit_params(0.0);
        let mut gates = Vec::new();
        let mut details = Vec::new();
        for species in [Species::F, Species::G] {
            let tag = match species {
                Species::F => "f",
                Species::G => "g",
            };
            let oracle = Barenblatt::new(1.0, species.diffusivity(&params))?;
            let check = oracle.self_check(1.0, 2.0)?;
            gates.push(
                check
                    .residual
                    .clone()
                    .renamed(format!("oracle_residual_{tag}")),
            );
            gates.push(check.mass.clone().renamed(format!("oracle_mass_{tag}")));
            let rep = decoupled_compare(
                &params,
                &DecoupledConfig {
                    species,
                    ..Default::default()
                },
            )?;
            for (k, ratio) in rep.ratios.iter().enumerate() {
                let n = rep.levels[k].n;
                gates.push(GateOutcome::at_least(
                    format!("l1_ratio_{tag}_{n}"),
                    *ratio,
                    1.7,
                ));
            }
            for lvl in &rep.levels {
                gates.push(GateOutcome::at_most(
                    format!("radius_error_{tag}_{}", lvl.n),
                    lvl.radius_error,
                    2.0 * lvl.dx,
                ));
            }
            details.push(serde_json::to_value(&rep).expect("serializable"));
        }
        Ok(CheckResult::new(KEY, TITLE, gates, Value::Array(details)))
    };
    vec![body().unwrap_or_else(|e| CheckResult::failed(KEY, TITLE, &e))]
}

fn exponent_gates(tag: &str, fit: &muskat_core::support::GrowthFit) -> Vec<GateOutcome> {
    let mut gates = Vec::new();
    for (side, pf) in [("right", fit.right), ("left", fit.left)] {
        let e = pf.map(|p| p.exponent).unwrap_or(f64::NAN);
        gates.push(GateOutcome::at_least(
            format!("exponent_{tag}_{side}_min"),
            e,
            0.28,
        ));
        gates.push(GateOutcome::at_most(
            format!("exponent_{tag}_{side}_max"),
            e,
            0.38,
        ));
    }
    gates
}

fn growth_exponents(ctx: &Ctx) -> Vec<CheckResult> {
    const KEY: &str = "8";
    const TITLE: &str = "support growth exponent over t in [1, 100]";
    let body = || -> muskat_core::Result<CheckResult> {
        let params = unit_params(0.0);
        let mut gates = Vec::new();

        // Barenblatt started at t = 1; trajectory time s is oracle time 1 + s.
        let grid = Grid::new(12.0, 768)?;
        let oracle = Barenblatt::new(1.0, Species::F.diffusivity(&params))?;
        let s0 = FieldPair::new(oracle.cell_averages(1.0, &grid)?, vec![0.0; grid.len()])?;
        let cfg = StepperConfig {
            track_dissipation: false,
            support_threshold: Some(default_threshold(&s0, &params, Mode::Limit)),
            ..limit_config(ctx, 99.0, 500)
        };
        let traj = solver::run(&s0, &params, &grid, &cfg)?;
        let mut trace = traj.support.expect("support tracking was requested");
        for s in &mut trace.samples {
            s.t += 1.0;
        }
        let bar = fit_growth_exponent(&trace, 0.0, (1.0, 100.0))?;
        gates.extend(exponent_gates("barenblatt", &bar));

        // Coupled bumps, symmetric about the origin.
        let grid = Grid::new(16.0, 512)?;
        let s0 = collision(&grid);
        let cfg = StepperConfig {
            track_dissipation: false,
            support_threshold: Some(default_threshold(&s0, &params, Mode::Limit)),
            ..limit_config(ctx, 100.0, 500)
        };
        let traj = solver::run(&s0, &params, &grid, &cfg)?;
        let trace = traj.support.expect("support tracking was requested");
        let coupled = fit_growth_exponent(&trace, 0.0, (1.0, 100.0))?;
        gates.extend(exponent_gates("coupled", &coupled));
        gates.push(GateOutcome::at_most(
            "edge_retreat_cells",
            trace.max_retreat() / grid.dx(),
            1.0,
        ));
        // The fit relative to the initial support edge is reported, not gated.
        let from_edge = fit_growth_exponent(&trace, 1.3, (1.0, 100.0))?;
        Ok(CheckResult::new(
            KEY,
            TITLE,
            gates,
            json!({ "barenblatt": bar, "coupled": coupled, "coupled_from_initial_edge": from_edge }),
        ))
    };
    vec![body().unwrap_or_else(|e| CheckResult::failed(KEY, TITLE, &e))]
}

/// First step time at which support enters the inner half of the gap.
fn enter_time(ctx: &Ctx, r0: f64) -> muskat_core::Result<Option<f64>> {
    let params = unit_params(0.0);
    let grid = Grid::new(4.0, 1024)?;
    let cap = |height| {
        datum(
            InitialDatumSpec::TwoBump {
                a: 0.0,
                r0,
                half_width: 0.1,
                height,
            },
            &grid,
        )
    };
    let s0 = FieldPair::new(cap(1.0), cap(0.5))?;
    let delta = default_threshold(&s0, &params, Mode::Limit);
    let probe = GapProbe::new(&s0, &grid, 0.0, r0, delta)?;
    let cfg = StepperConfig {
        track_dissipation: false,
        ..limit_config(ctx, 50.0, 1)
    };
    let mut hit = None;
    solver::run_with_observer(&s0, &params, &grid, &cfg, |t, st| {
        let inside = probe.entered(st);
        if inside {
            hit = Some(t);
        }
        inside
    })?;
    Ok(hit)
}

fn gap_scaling(ctx: &Ctx) -> Vec<CheckResult> {
    const KEY: &str = "9";
    const TITLE: &str = "gap persistence scaling in r0";
    let body = || -> muskat_core::Result<CheckResult> {
        let radii = [0.5, 1.0, 2.0];
        let times = radii
            .iter()
            .map(|r0| enter_time(ctx, *r0))
            .collect::<muskat_core::Result<Vec<_>>>()?;
        let mut gates = Vec::new();
        for (r0, t) in radii.iter().zip(&times) {
            gates.push(GateOutcome::flag(
                format!("t_enter_finite_r0_{r0}"),
                t.is_some(),
            ));
        }
        let t: Vec<f64> = times.iter().map(|t| t.unwrap_or(f64::INFINITY)).collect();
        gates.push(GateOutcome::flag(
            "t_enter_increasing",
            t[0] > 0.0 && t[0] < t[1] && t[1] < t[2],
        ));
        for k in 0..2 {
            gates.push(GateOutcome::at_least(
                format!("t_enter_ratio_r0_{}", radii[k]),
                t[k + 1] / t[k],
                4.0,
            ));
        }
        Ok(CheckResult::new(
            KEY,
            TITLE,
            gates,
            json!({ "r0": radii, "t_enter": times }),
        ))
    };
    vec![body().unwrap_or_else(|e| CheckResult::failed(KEY, TITLE, &e))]
}

fn contact(grid: &Grid, alpha: f64) -> FieldPair {
    let f = datum(
        InitialDatumSpec::PowerContact {
            x0: -0.5,
            alpha,
            scale: 1.0,
            height: 1.0,
            side: muskat_core::initial::Side::Right,
            width: 0.5,
            plateau: 0.25,
        },
        grid,
    );
    let n = f.len();
    FieldPair::new(f, vec![0.0; n]).expect("same length")
}

/// Waiting time of the left edge at `x0 = -1/2` for the contact datum,
/// sampled every `stride` steps.
fn contact_wait(
    ctx: &Ctx,
    alpha: f64,
    n: usize,
    stride: usize,
) -> muskat_core::Result<muskat_core::support::WaitingTime> {
    let params = unit_params(0.0);
    let grid = Grid::new(1.0, n)?;
    let s0 = contact(&grid, alpha);
    let delta = default_threshold(&s0, &params, Mode::Limit);
    let cfg = StepperConfig {
        track_dissipation: false,
        support_threshold: Some(delta),
        ..limit_config(ctx, 5.0, stride)
    };
    let tol = 1.5 * grid.dx();
    let traj = solver::run_with_observer(&s0, &params, &grid, &cfg, |_, st| {
        match muskat_core::support::support_edges(st, &grid, delta, 0.0) {
            Ok(Some((l, _))) => (l + 0.5).abs() > tol,
            _ => true,
        }
    })?;
    waiting_time(
        traj.support
            .as_ref()
            .expect("support tracking was requested"),
        &grid,
        -0.5,
        1,
    )
}

fn waiting_times(ctx: &Ctx) -> Vec<CheckResult> {
    const KEY: &str = "10";
    const TITLE: &str = "waiting time and the initial-contact criterion";
    let body = || -> muskat_core::Result<CheckResult> {
        let mut gates = Vec::new();
        let w2 = [
            contact_wait(ctx, 2.0, 1024, 8)?,
            contact_wait(ctx, 2.0, 2048, 8)?,
        ];
        let wh = [
            contact_wait(ctx, 0.5, 1024, 1)?,
            contact_wait(ctx, 0.5, 2048, 1)?,
        ];
        for (w, n) in w2.iter().zip([1024, 2048]) {
            gates.push(GateOutcome::at_least(
                format!("t_wait_alpha2_n{n}"),
                w.t_wait,
                f64::MIN_POSITIVE,
            ));
            gates.push(GateOutcome::flag(
                format!("edge_moved_alpha2_n{n}"),
                !w.censored,
            ));
        }
        let (lo, hi) = (
            w2[0].t_wait.min(w2[1].t_wait),
            w2[0].t_wait.max(w2[1].t_wait),
        );
        gates.push(GateOutcome::at_most("t_wait_alpha2_spread", hi / lo, 2.0));
        gates.push(GateOutcome::at_most(
            "t_wait_alpha_half_refinement_ratio",
            wh[1].t_wait / wh[0].t_wait,
            2.0 / 3.0,
        ));
        gates.push(GateOutcome::at_most(
            "t_wait_alpha_half_vs_alpha2",
            wh[1].t_wait / w2[1].t_wait,
            0.01,
        ));

        let params = unit_params(0.0);
        let grid = Grid::new(1.0, 2048)?;
        let mut verdicts = Vec::new();
        for (alpha, expect) in [
            (2.0, Verdict::Bounded),
            (3.0, Verdict::Bounded),
            (0.5, Verdict::Unbounded),
            (1.0, Verdict::Unbounded),
        ] {
            let rep = waiting_criterion(&contact(&grid, alpha), &params, &grid, -0.5, 0.25, 6)?;
            gates.push(GateOutcome::flag(
                format!("criterion_verdict_alpha{alpha}"),
                rep.verdict == expect,
            ));
            let finest = rep.resolved.iter().rposition(|r| *r);
            if let Some(k) = finest {
                let (r, q) = (rep.radii[k], rep.q[k]);
                if alpha == 2.0 {
                    gates.push(GateOutcome::at_most(
                        "criterion_q_alpha2_error",
                        (q - 0.4).abs(),
                        0.01,
                    ));
                }
                if alpha == 1.0 {
                    gates.push(GateOutcome::at_most(
                        "criterion_q_alpha1_error",
                        (q * r * r - 2.0 / 3.0).abs(),
                        0.02,
                    ));
                }
            }
            verdicts.push(json!({ "alpha": alpha, "report": rep }));
        }
        Ok(CheckResult::new(
            KEY,
            TITLE,
            gates,
            json!({ "alpha2": w2, "alpha_half": wh, "criterion": verdicts }),
        ))
    };
    vec![body().unwrap_or_else(|e| CheckResult::failed(KEY, TITLE, &e))]
}

fn long_run_bounds(ctx: &Ctx) -> Vec<CheckResult> {
    const KEY: &str = "11";
    const TITLE: &str = "second-moment barrier and energy decay on a long run";
    let body = || -> muskat_core::Result<CheckResult> {
        let params = unit_params(0.0);
        let grid = Grid::new(64.0, 1024)?;
        let cfg = StepperConfig {
            track_dissipation: false,
            ..limit_config(ctx, 1000.0, 100)
        };
        let traj = solver::run(&collision(&grid), &params, &grid, &cfg)?;
        let rep = bounds_check(&traj.ledger)?;
        // Same barrier with the time term doubled, for comparison only.
        let first = traj.ledger.first().expect("ledger has the initial row");
        let doubled = traj
            .ledger
            .rows
            .iter()
            .map(|r| {
                let bound = first.m2 + 2.0 * r.t * first.energy;
                if bound > 0.0 {
                    r.m2_inner / bound
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max);
        Ok(CheckResult::new(
            KEY,
            TITLE,
            vec![rep.moment.clone(), rep.decay.clone(), positivity(&traj)],
            json!({ "steps": traj.steps, "samples": traj.ledger.len(), "moment_ratio_with_doubled_time_term": doubled }),
        ))
    };
    vec![body().unwrap_or_else(|e| CheckResult::failed(KEY, TITLE, &e))]
}

fn fast_oracle(_ctx: &Ctx) -> Vec<CheckResult> {
    const KEY: &str = "fast-oracle";
    const TITLE: &str = "Barenblatt oracle self-checks";
    let body = || -> muskat_core::Result<CheckResult> {
        let params = unit_params(0.0);
        let mut gates = Vec::new();
        for (tag, species) in [("f", Species::F), ("g", Species::G)] {
            let check = Barenblatt::new(1.0, species.diffusivity(&params))?.self_check(1.0, 2.0)?;
            gates.push(check.residual.renamed(format!("oracle_residual_{tag}")));
            gates.push(check.mass.renamed(format!("oracle_mass_{tag}")));
        }
        Ok(CheckResult::new(KEY, TITLE, gates, json!({})))
    };
    vec![body().unwrap_or_else(|e| CheckResult::failed(KEY, TITLE, &e))]
}

/// Seeded random states: one step conserves mass and keeps the floor; the
/// Helmholtz solve has a small residual and conserves mass.
fn fast_properties(ctx: &Ctx) -> Vec<CheckResult> {
    const KEY: &str = "fast-properties";
    const TITLE: &str = "seeded stepping and smoothing properties";
    let body = || -> muskat_core::Result<CheckResult> {
        let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed ^ 0x5eed);
        let grid = Grid::new(2.0, 64)?;
        let (mut mass_err, mut floor_err, mut residual, mut smooth_mass): (f64, f64, f64, f64) =
            (0.0, 0.0, 0.0, 0.0);
        for case in 0..200 {
            let eps = if case % 2 == 0 {
                0.0
            } else {
                10f64.powf(rng.gen_range(-4.0..-1.0))
            };
            let params =
                PhysicalParams::new(rng.gen_range(0.1..4.0), rng.gen_range(0.1..4.0), eps)?;
            let field = |rng: &mut ChaCha8Rng| -> Vec<f64> {
                (0..grid.len())
                    .map(|_| if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(0.0..2.0) } + eps)
                    .collect()
            };
            let s = FieldPair::new(field(&mut rng), field(&mut rng))?;
            let ws = HelmholtzWorkspace::new(&grid, eps)?;
            let sigma = rng.gen_range(0.05..1.0);
            let dt = solver::stable_dt(&s, &params, &grid, sigma);
            let next = step(&s, &params, &grid, dt, &ws)?;
            mass_err = mass_err
                .max(relative_drift(next.mass_f(&grid), s.mass_f(&grid)))
                .max(relative_drift(next.mass_g(&grid), s.mass_g(&grid)));
            let low = next
                .f
                .iter()
                .chain(&next.g)
                .fold(f64::INFINITY, |a, b| a.min(*b));
            floor_err = floor_err.max(eps - low);
            if eps > 0.0 {
                let u = field(&mut rng);
                let smoothed = helmholtz_inverse(&u, &params, &ws)?;
                let back = ws.apply(&smoothed);
                let scale = u.iter().fold(0.0f64, |a, b| a.max(b.abs()));
                residual = residual.max(
                    back.iter()
                        .zip(&u)
                        .fold(0.0f64, |a, (b, c)| a.max((b - c).abs()))
                        / scale,
                );
                smooth_mass = smooth_mass.max(relative_drift(
                    grid.integrate(&smoothed),
                    grid.integrate(&u),
                ));
            }
        }
        let gates = vec![
            GateOutcome::at_most("step_mass_drift", mass_err, 1e-13),
            GateOutcome::at_most("step_floor_violation", floor_err, 1e-15),
            GateOutcome::at_most("helmholtz_residual", residual, 1e-12),
            GateOutcome::at_most("helmholtz_mass_drift", smooth_mass, 1e-12),
        ];
        Ok(CheckResult::new(KEY, TITLE, gates, json!({ "cases": 200 })))
    };
    vec![body().unwrap_or_else(|e| CheckResult::failed(KEY, TITLE, &e))]
}

fn fast_coupled(ctx: &Ctx) -> Vec<CheckResult> {
    const KEY: &str = "fast-coupled";
    const TITLE: &str = "small coupled run: balance and local energy";
    let body = || -> muskat_core::Result<CheckResult> {
        let params = unit_params(0.0);
        let grid = Grid::new(4.0, 256)?;
        let cfg = StepperConfig {
            keep_frames: true,
            ..limit_config(ctx, 1.0, 20)
        };
        let traj = solver::run(&collision(&grid), &params, &grid, &cfg)?;
        let bal = balance_check(&traj.ledger)?;
        let mut gates: Vec<GateOutcome> = bal.gates().into_iter().cloned().collect();
        gates.push(positivity(&traj));
        for w in [
            Weight::Unit,
            Weight::Hat {
                center: 0.0,
                radius: 2.0,
            },
        ] {
            let rep = local_energy_ledger(&traj, w)?;
            let label = crate::scenario::weight_label(&w);
            for g in [&rep.wl2.gate, &rep.wlb.gate, &rep.cauchy_schwarz] {
                gates.push(g.clone().renamed(format!("{}[{label}]", g.name)));
            }
        }
        Ok(CheckResult::new(
            KEY,
            TITLE,
            gates,
            json!({ "steps": traj.steps }),
        ))
    };
    vec![body().unwrap_or_else(|e| CheckResult::failed(KEY, TITLE, &e))]
}
