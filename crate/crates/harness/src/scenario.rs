//! Running one scenario and writing its artifacts.

use std::path::Path;

use serde::Serialize;

use muskat_core::functionals::{
    balance_check, local_energy_ledger, BalanceReport, LocalEnergyReport, Weight,
};
use muskat_core::oracle::{bounds_check, BoundsReport};
use muskat_core::solver;
use muskat_core::support::{
    fit_growth_exponent, gap_persistence, waiting_criterion, waiting_time, CriterionReport,
    GrowthFit, WaitingTime,
};
use muskat_core::{GateOutcome, MuskatError, Trajectory};

use crate::config::Prepared;
use crate::error::{Result, Status};
use crate::output;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapResult {
    pub a: f64,
    pub r0: f64,
    /// First frame time with support in the inner half of the gap.
    pub t_enter: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunStats {
    pub steps: u64,
    pub final_time: f64,
    pub clipped_mass: [f64; 2],
    pub min_values: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Reports {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub run: Option<RunStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub balance: Option<BalanceReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub local: Vec<LocalEnergyReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bounds: Option<BoundsReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub gaps: Vec<GapResult>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub waiting: Vec<WaitingTime>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub growth: Option<GrowthFit>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub criterion: Vec<CriterionReport>,
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioSummary {
    pub name: String,
    pub seed: u64,
    pub pass: bool,
    pub gates: Vec<GateOutcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub reports: Reports,
}

impl ScenarioSummary {
    pub fn status(&self) -> Status {
        Status::from_pass(self.pass)
    }
}

pub fn weight_label(w: &Weight) -> String {
    match w {
        Weight::Unit => "unit".into(),
        Weight::Hat { center, radius } => format!("hat(a={center},r={radius})"),
    }
}

fn labelled(g: &GateOutcome, label: &str) -> GateOutcome {
    g.clone().renamed(format!("{}[{label}]", g.name))
}

/// Non-negativity (limit mode) or floor preservation (regularized mode).
fn positivity_gate(traj: &Trajectory) -> GateOutcome {
    let floor = traj.params.eps;
    let lowest = traj.min_values[0].min(traj.min_values[1]);
    GateOutcome::at_least("positivity", lowest, floor - 1e-15 * floor.max(1.0))
}

/// Evaluates the selected diagnostics on a finished trajectory.
pub fn evaluate(prep: &Prepared, traj: &Trajectory) -> Result<(Vec<GateOutcome>, Reports)> {
    let d = &prep.config.diagnostics;
    let mut gates = vec![positivity_gate(traj)];
    let mut reports = Reports {
        run: Some(RunStats {
            steps: traj.steps,
            final_time: traj.final_time,
            clipped_mass: traj.clipped_mass,
            min_values: traj.min_values,
        }),
        ..Default::default()
    };
    if d.balance {
        let b = balance_check(&traj.ledger)?;
        gates.extend(b.gates().into_iter().cloned());
        reports.balance = Some(b);
    }
    for w in &d.weights {
        let rep = local_energy_ledger(traj, *w)?;
        let label = weight_label(w);
        gates.push(labelled(&rep.wl2.gate, &label));
        gates.push(labelled(&rep.wlb.gate, &label));
        gates.push(labelled(&rep.cauchy_schwarz, &label));
        gates.push(labelled(&rep.haendel.gate, &label));
        reports.local.push(rep);
    }
    if d.bounds {
        let b = bounds_check(&traj.ledger)?;
        gates.push(b.moment.clone());
        gates.push(b.decay.clone());
        reports.bounds = Some(b);
    }
    if let Some(delta) = prep.support_threshold {
        for gap in &d.gaps {
            reports.gaps.push(GapResult {
                a: gap.a,
                r0: gap.r0,
                t_enter: gap_persistence(traj, gap.a, gap.r0, delta)?,
            });
        }
    }
    if let Some(trace) = &traj.support {
        for w in &d.waiting {
            reports
                .waiting
                .push(waiting_time(trace, &prep.grid, w.x0, w.cell_tol)?);
        }
        if let Some(gr) = &d.growth {
            let mut shifted = trace.clone();
            for s in &mut shifted.samples {
                s.t += gr.time_offset;
            }
            let fit = fit_growth_exponent(&shifted, gr.b0, (gr.window[0], gr.window[1]))?;
            for (side, pf) in [("right", fit.right), ("left", fit.left)] {
                let e = pf.map(|p| p.exponent).unwrap_or(f64::NAN);
                let lo =
                    GateOutcome::at_least(format!("growth_exponent_{side}_min"), e, gr.band[0]);
                let hi = GateOutcome::at_most(format!("growth_exponent_{side}_max"), e, gr.band[1]);
                gates.push(lo);
                gates.push(hi);
            }
            reports.growth = Some(fit);
        }
    }
    for c in &d.criterion {
        reports.criterion.push(waiting_criterion(
            &prep.initial,
            &prep.params,
            &prep.grid,
            c.x0,
            c.r_max,
            c.levels,
        )?);
    }
    Ok((gates, reports))
}

/// Runs a prepared scenario and writes `summary.json` plus the CSV artifacts
/// into `out`. A positivity or floor violation during the run ends it and is
/// reported as a failed `positivity` gate.
pub fn run_scenario(prep: &Prepared, out: &Path) -> Result<ScenarioSummary> {
    output::ensure_dir(out)?;
    let cfg = &prep.config;
    let summary = match solver::run(&prep.initial, &prep.params, &prep.grid, &prep.stepper) {
        Ok(traj) => {
            let (gates, reports) = evaluate(prep, &traj)?;
            output::write_ledger(&out.join("ledger.csv"), &traj.ledger)?;
            if cfg.diagnostics.snapshots_csv {
                output::write_snapshots(&out.join("snapshots.csv"), &prep.grid, &traj.snapshots)?;
            }
            if let Some(trace) = &traj.support {
                output::write_support(&out.join("support.csv"), trace)?;
            }
            ScenarioSummary {
                name: cfg.name.clone(),
                seed: cfg.seed,
                pass: gates.iter().all(|g| g.pass),
                gates,
                error: None,
                reports,
            }
        }
        Err(MuskatError::Invariant {
            t,
            species,
            cell,
            value,
            reason,
        }) => {
            let floor = prep.params.eps;
            let gate = GateOutcome::at_least("positivity", value, floor).with_time(t);
            ScenarioSummary {
                name: cfg.name.clone(),
                seed: cfg.seed,
                pass: false,
                gates: vec![gate],
                error: Some(format!("species {species} cell {cell}: {reason}")),
                reports: Reports::default(),
            }
        }
        Err(e) => return Err(e.into()),
    };
    output::write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}
