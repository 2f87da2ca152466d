//! Initial data: analytic profiles sampled at cell midpoints, and the
//! regularized data `R_ε[u] + ε` used to start the regularized system.

use serde::{Deserialize, Serialize};

use crate::error::{MuskatError, Result};
use crate::grid::{FieldPair, Grid, PhysicalParams};
use crate::regularizer::HelmholtzWorkspace;

/// Which side of the contact point carries the support of a `power_contact` profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    #[default]
    Right,
    Left,
}

/// Analytic initial profile for one species.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialDatumSpec {
    /// Identically zero.
    Zero,
    /// `height · 1_[center - half_width, center + half_width]`.
    Box {
        center: f64,
        half_width: f64,
        height: f64,
    },
    /// Parabolic cap `height · (1 - ((x - center)/half_width)²)₊`.
    Bump {
        center: f64,
        half_width: f64,
        height: f64,
    },
    /// `height · (|x - x0|/scale)^alpha` on the support side for
    /// `|x - x0| ≤ width`, then a plateau at the reached value for another
    /// `plateau` length, then zero.
    PowerContact {
        x0: f64,
        alpha: f64,
        #[serde(default = "one")]
        scale: f64,
        #[serde(default = "one")]
        height: f64,
        #[serde(default)]
        side: Side,
        width: f64,
        #[serde(default)]
        plateau: f64,
    },
    /// Two parabolic caps flanking the empty gap `(a - r0, a + r0)`; the
    /// inner edges of the caps sit exactly at `a ∓ r0`.
    TwoBump {
        a: f64,
        r0: f64,
        half_width: f64,
        height: f64,
    },
    /// Raw cell values; must match the grid size.
    Samples { values: Vec<f64> },
}

fn one() -> f64 {
    1.0
}

impl InitialDatumSpec {
    /// Pointwise value of the analytic profile (`Samples` has none).
    pub fn profile(&self, x: f64) -> Option<f64> {
        let v = match *self {
            Self::Zero => 0.0,
            Self::Box {
                center,
                half_width,
                height,
            } => {
                if (x - center).abs() <= half_width {
                    height
                } else {
                    0.0
                }
            }
            Self::Bump {
                center,
                half_width,
                height,
            } => cap(x, center, half_width, height),
            Self::PowerContact {
                x0,
                alpha,
                scale,
                height,
                side,
                width,
                plateau,
            } => {
                let s = match side {
                    Side::Right => x - x0,
                    Side::Left => x0 - x,
                };
                if s < 0.0 || s > width + plateau {
                    0.0
                } else {
                    height * (s.min(width) / scale).powf(alpha)
                }
            }
            Self::TwoBump {
                a,
                r0,
                half_width,
                height,
            } => {
                let off = r0 + half_width;
                cap(x, a - off, half_width, height) + cap(x, a + off, half_width, height)
            }
            Self::Samples { .. } => return None,
        };
        Some(v)
    }

    /// Closed interval containing the support, if bounded and non-empty.
    pub fn support(&self) -> Option<(f64, f64)> {
        match *self {
            Self::Zero | Self::Samples { .. } => None,
            Self::Box {
                center, half_width, ..
            }
            | Self::Bump {
                center, half_width, ..
            } => Some((center - half_width, center + half_width)),
            Self::PowerContact {
                x0,
                side,
                width,
                plateau,
                ..
            } => match side {
                Side::Right => Some((x0, x0 + width + plateau)),
                Side::Left => Some((x0 - width - plateau, x0)),
            },
            Self::TwoBump {
                a, r0, half_width, ..
            } => Some((a - r0 - 2.0 * half_width, a + r0 + 2.0 * half_width)),
        }
    }

    fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(MuskatError::Parameter(format!(
                    "{name} must be positive, got {v}"
                )))
            }
        };
        let nonneg = |name: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(MuskatError::Parameter(format!(
                    "{name} must be non-negative, got {v}"
                )))
            }
        };
        match *self {
            Self::Zero | Self::Samples { .. } => Ok(()),
            Self::Box {
                half_width, height, ..
            }
            | Self::Bump {
                half_width, height, ..
            } => {
                positive("half_width", half_width)?;
                nonneg("height", height)
            }
            Self::PowerContact {
                alpha,
                scale,
                height,
                width,
                plateau,
                ..
            } => {
                positive("alpha", alpha)?;
                positive("scale", scale)?;
                nonneg("height", height)?;
                positive("width", width)?;
                nonneg("plateau", plateau)
            }
            Self::TwoBump {
                r0,
                half_width,
                height,
                ..
            } => {
                positive("r0", r0)?;
                positive("half_width", half_width)?;
                nonneg("height", height)
            }
        }
    }
}

fn cap(x: f64, center: f64, half_width: f64, height: f64) -> f64 {
    let s = (x - center) / half_width;
    height * (1.0 - s * s).max(0.0)
}

/// Samples `spec` at the cell midpoints of `grid`.
pub fn make_initial_datum(spec: &InitialDatumSpec, grid: &Grid) -> Result<Vec<f64>> {
    spec.validate()?;
    if let InitialDatumSpec::Samples { values } = spec {
        if values.len() != grid.len() {
            return Err(MuskatError::Parameter(format!(
                "{} samples given for a grid of {} cells",
                values.len(),
                grid.len()
            )));
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            return Err(MuskatError::Admissibility(format!(
                "sample {i} = {v} is negative or not finite"
            )));
        }
        return Ok(values.clone());
    }
    if let Some((lo, hi)) = spec.support() {
        let l = grid.half_width();
        if lo < -l || hi > l {
            return Err(MuskatError::Geometry(format!(
                "support [{lo}, {hi}] exceeds the domain (-{l}, {l})"
            )));
        }
    }
    Ok(grid
        .centers()
        .iter()
        .map(|&x| spec.profile(x).unwrap_or(0.0))
        .collect())
}

/// `(R_ε[f₀] + ε, R_ε[g₀] + ε)`; requires `ε > 0`.
pub fn regularize_initial_datum(
    raw: &FieldPair,
    params: &PhysicalParams,
    grid: &Grid,
) -> Result<FieldPair> {
    if params.eps <= 0.0 {
        return Err(MuskatError::Parameter(
            "regularized initial data need eps > 0".to_string(),
        ));
    }
    raw.check_admissible(grid)?;
    let ws = HelmholtzWorkspace::new(grid, params.eps)?;
    let mut f = vec![0.0; grid.len()];
    let mut g = vec![0.0; grid.len()];
    ws.solve_into(&raw.f, &mut f);
    ws.solve_into(&raw.g, &mut g);
    for v in f.iter_mut().chain(g.iter_mut()) {
        // The discrete maximum principle allows round-off slightly below zero.
        *v = v.max(0.0) + params.eps;
    }
    FieldPair::new(f, g)
}
