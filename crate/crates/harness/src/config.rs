//! Scenario files.
//!
//! A scenario is a TOML document with the sections `[grid]`, `[params]`,
//! `[initial.f]`, `[initial.g]`, `[stepper]`, `[diagnostics]` and `[output]`,
//! plus top-level `name` and `seed`. Unknown keys are rejected, and every
//! value is validated before any computation starts.
//!
//! ```toml
//! name = "collision"
//! seed = 7
//!
//! [grid]
//! half_width = 8.0
//! n = 1024
//!
//! [params]
//! r = 1.0
//! r_mu = 1.0
//! eps = 0.0
//!
//! [initial.f]
//! kind = "bump"
//! center = -0.5
//! half_width = 0.8
//! height = 1.0
//!
//! [initial.g]
//! kind = "bump"
//! center = 0.5
//! half_width = 0.8
//! height = 1.0
//!
//! [stepper]
//! mode = "limit"
//! t_end = 10.0
//! diagnostics_stride = 800
//!
//! [diagnostics]
//! bounds = true
//! weights = [{ kind = "unit" }, { kind = "hat", center = 0.0, radius = 2.0 }]
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use muskat_core::functionals::Weight;
use muskat_core::solver::stable_dt;
use muskat_core::{
    make_initial_datum, regularize_initial_datum, FieldPair, Grid, InitialDatumSpec, Mode,
    PhysicalParams, StepperConfig,
};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    pub grid: GridSpec,
    pub params: PhysicalParams,
    pub initial: InitialSpec,
    #[serde(default)]
    pub stepper: StepperConfig,
    #[serde(default)]
    pub diagnostics: Diagnostics,
    #[serde(default)]
    pub output: OutputSpec,
}

fn default_name() -> String {
    "scenario".into()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub half_width: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    pub f: InitialDatumSpec,
    pub g: InitialDatumSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Diagnostics {
    /// Mass, entropy and energy balance gates.
    pub balance: bool,
    /// Second-moment and energy-decay bound gates.
    pub bounds: bool,
    /// Weights for the local energy ledgers.
    pub weights: Vec<Weight>,
    /// Support threshold; the mode default when absent.
    pub support_threshold: Option<f64>,
    /// Record the support trace even without gap or waiting-time probes.
    pub support: bool,
    pub gaps: Vec<GapSpec>,
    pub waiting: Vec<WaitingSpec>,
    pub growth: Option<GrowthSpec>,
    pub criterion: Vec<CriterionSpec>,
    /// Write `snapshots.csv`.
    pub snapshots_csv: bool,
}

impl Default for Diagnostics {
    fn default() -> Self {
        Self {
            balance: true,
            bounds: false,
            weights: Vec::new(),
            support_threshold: None,
            support: false,
            gaps: Vec::new(),
            waiting: Vec::new(),
            growth: None,
            criterion: Vec::new(),
            snapshots_csv: true,
        }
    }
}

impl Diagnostics {
    fn needs_frames(&self) -> bool {
        !self.weights.is_empty() || !self.gaps.is_empty()
    }

    fn needs_support(&self) -> bool {
        self.support || !self.waiting.is_empty() || self.growth.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapSpec {
    pub a: f64,
    pub r0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaitingSpec {
    pub x0: f64,
    #[serde(default = "one_cell")]
    pub cell_tol: usize,
}

fn one_cell() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrowthSpec {
    pub b0: f64,
    pub window: [f64; 2],
    /// Added to trajectory times before fitting, for runs started from a
    /// self-similar state at a positive time.
    #[serde(default)]
    pub time_offset: f64,
    /// Accepted exponent interval.
    #[serde(default = "default_band")]
    pub band: [f64; 2],
}

fn default_band() -> [f64; 2] {
    [0.28, 0.38]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriterionSpec {
    pub x0: f64,
    pub r_max: f64,
    pub levels: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    /// Output directory; the `--out` flag takes precedence.
    pub dir: Option<PathBuf>,
}

/// A validated scenario, ready to run.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub config: ScenarioConfig,
    pub grid: Grid,
    pub params: PhysicalParams,
    pub initial: FieldPair,
    pub stepper: StepperConfig,
    pub support_threshold: Option<f64>,
}

/// 1-based line of byte `offset` in `text`.
fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Line of `key` inside `[section]` (dotted for nested tables), falling back
/// to the section header, then to `None`.
pub fn locate(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    let mut header_line = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.starts_with('[') {
            current = line
                .trim_matches(|c| c == '[' || c == ']')
                .trim()
                .to_string();
            if current == section {
                header_line = Some(i + 1);
            }
            continue;
        }
        if current == section {
            if let Some((k, _)) = line.split_once('=') {
                if k.trim() == key {
                    return Some(i + 1);
                }
            }
        }
    }
    header_line
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| line_of(text, s.start));
            HarnessError::config(line, e.message().trim().to_string())
        })
    }

    pub fn from_file(path: &Path) -> Result<(Self, String)> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let cfg = Self::parse(&text).map_err(|e| e.in_file(path))?;
        Ok((cfg, text))
    }

    /// Checks every value and builds the initial state. `text` is the source
    /// document, used only to anchor diagnostics to lines.
    pub fn prepare(&self, text: &str) -> Result<Prepared> {
        let at = |section: &str, key: &str, err: muskat_core::MuskatError| {
            HarnessError::config(locate(text, section, key), err.to_string())
        };
        let grid = Grid::new(self.grid.half_width, self.grid.n).map_err(|e| at("grid", "n", e))?;
        self.params.validate().map_err(|e| at("params", "r", e))?;
        self.stepper
            .validate()
            .map_err(|e| at("stepper", "t_end", e))?;
        let params = self
            .stepper
            .effective_params(&self.params)
            .map_err(|e| at("params", "eps", e))?;
        let f =
            make_initial_datum(&self.initial.f, &grid).map_err(|e| at("initial.f", "kind", e))?;
        let g =
            make_initial_datum(&self.initial.g, &grid).map_err(|e| at("initial.g", "kind", e))?;
        let raw = FieldPair::new(f, g).map_err(|e| at("initial.f", "kind", e))?;
        let initial = match self.stepper.mode {
            Mode::Limit => raw,
            Mode::Regularized => regularize_initial_datum(&raw, &params, &grid)
                .map_err(|e| at("params", "eps", e))?,
        };

        if let Some(dt) = self.stepper.fixed_dt {
            let bound = stable_dt(&initial, &params, &grid, self.stepper.cfl_safety);
            if dt > bound {
                return Err(HarnessError::config(
                    locate(text, "stepper", "fixed_dt"),
                    format!("fixed_dt = {dt:e} exceeds the stability bound {bound:e} of the initial state"),
                ));
            }
        }

        let d = &self.diagnostics;
        let support_threshold = if d.needs_support() || d.support_threshold.is_some() {
            let delta = d.support_threshold.unwrap_or_else(|| {
                muskat_core::support::default_threshold(&initial, &params, self.stepper.mode)
            });
            if !(delta > params.eps && delta > 0.0) {
                return Err(HarnessError::config(
                    locate(text, "diagnostics", "support_threshold"),
                    format!(
                        "support threshold {delta:e} must exceed eps = {:e} and 0",
                        params.eps
                    ),
                ));
            }
            Some(delta)
        } else {
            None
        };
        if let Some(gr) = &d.growth {
            if !(gr.window[0] > 0.0 && gr.window[1] > gr.window[0]) {
                return Err(HarnessError::config(
                    locate(text, "diagnostics.growth", "window"),
                    format!("growth window {:?} must satisfy 0 < t1 < t2", gr.window),
                ));
            }
        }
        for w in &d.weights {
            if let Weight::Hat { center, radius } = *w {
                let l = grid.half_width();
                if !(radius > 0.0) || center - radius < -l || center + radius > l {
                    return Err(HarnessError::config(
                        locate(text, "diagnostics", "weights"),
                        format!("hat weight at {center} with radius {radius} leaves the domain (-{l}, {l})"),
                    ));
                }
            }
        }
        let delta_for_gaps = support_threshold.unwrap_or_else(|| {
            muskat_core::support::default_threshold(&initial, &params, self.stepper.mode)
        });
        for gap in &d.gaps {
            muskat_core::support::GapProbe::new(&initial, &grid, gap.a, gap.r0, delta_for_gaps)
                .map_err(|e| at("diagnostics", "gaps", e))?;
        }
        for c in &d.criterion {
            muskat_core::support::waiting_criterion(
                &initial, &params, &grid, c.x0, c.r_max, c.levels,
            )
            .map_err(|e| at("diagnostics", "criterion", e))?;
        }

        let mut stepper = self.stepper.clone();
        stepper.keep_frames |= d.needs_frames();
        stepper.track_dissipation |= d.balance;
        if stepper.support_threshold.is_none() {
            stepper.support_threshold = support_threshold.filter(|_| d.needs_support());
        }
        Ok(Prepared {
            config: self.clone(),
            grid,
            params,
            initial,
            stepper,
            support_threshold,
        })
    }
}
