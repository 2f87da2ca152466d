//! Global mass, entropy and energy balance over a recorded ledger.

use serde::Serialize;

use super::DiagnosticsLedger;
use crate::error::{MuskatError, Result};
use crate::gate::GateOutcome;

/// Relative mass drift allowed per species.
pub const MASS_TOLERANCE: f64 = 1e-10;
/// Relative slack on the entropy and energy inequalities.
pub const BALANCE_SLACK: f64 = 0.02;
const ABSOLUTE_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BalanceReport {
    pub mass_f: GateOutcome,
    pub mass_g: GateOutcome,
    /// `ℋ(t) + D_entropy(t) ≤ ℋ(0) + tol` at every sample.
    pub entropy: GateOutcome,
    /// `ℰ(t) + D_energy(t) ≤ ℰ(0) + tol` at every sample.
    pub energy: GateOutcome,
}

impl BalanceReport {
    pub fn pass(&self) -> bool {
        self.gates().iter().all(|g| g.pass)
    }

    pub fn gates(&self) -> [&GateOutcome; 4] {
        [&self.mass_f, &self.mass_g, &self.entropy, &self.energy]
    }
}

/// Largest value of `excess(row)` over the ledger and the first time it is attained.
fn worst<F: Fn(&super::LedgerRow) -> f64>(ledger: &DiagnosticsLedger, excess: F) -> (f64, f64) {
    let mut best = (f64::NEG_INFINITY, 0.0);
    for row in &ledger.rows {
        let e = excess(row);
        // NaN must surface as the worst value.
        if e > best.0 || e.is_nan() && !best.0.is_nan() {
            best = (e, row.t);
        }
    }
    best
}

/// Checks mass constancy and the entropy and energy dissipation inequalities
/// at every ledger sample.
pub fn balance_check(ledger: &DiagnosticsLedger) -> Result<BalanceReport> {
    let first = *ledger
        .first()
        .ok_or_else(|| MuskatError::Parameter("balance check on an empty ledger".into()))?;

    let mass_gate = |name: &str, m0: f64, pick: fn(&super::LedgerRow) -> f64| {
        let scale = m0.abs().max(f64::MIN_POSITIVE);
        let (drift, t) = worst(ledger, |r| (pick(r) - m0).abs() / scale);
        GateOutcome::at_most(name, drift, MASS_TOLERANCE).with_time(t)
    };
    let mass_f = mass_gate("mass_f", first.mass_f, |r| r.mass_f);
    let mass_g = mass_gate("mass_g", first.mass_g, |r| r.mass_g);

    let h0 = first.entropy;
    let (h_excess, th) = worst(ledger, |r| r.entropy + r.d_entropy - h0);
    let entropy = GateOutcome::at_most(
        "entropy_balance",
        h_excess,
        ABSOLUTE_FLOOR.max(BALANCE_SLACK * h0.abs()),
    )
    .with_time(th);

    let e0 = first.energy;
    let (e_excess, te) = worst(ledger, |r| r.energy + r.d_energy - e0);
    let energy = GateOutcome::at_most(
        "energy_balance",
        e_excess,
        ABSOLUTE_FLOOR.max(BALANCE_SLACK * e0),
    )
    .with_time(te);

    Ok(BalanceReport {
        mass_f,
        mass_g,
        entropy,
        energy,
    })
}
