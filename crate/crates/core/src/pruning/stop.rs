use std::fmt;
use std::str::FromStr;

use super::trace::PruneTrace;
use crate::{Error, Result};

/// When to stop removing neurons. Checked before every removal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StoppingRule {
    /// Remove exactly this many neurons.
    Count(usize),
    /// Remove `ceil(fraction · hidden neurons)`; `1.0` removes everything.
    Fraction(f64),
    /// Stop after the first removal that pushes test accuracy below the floor.
    AccuracyFloor(f64),
    /// Stop after the first removal that pushes test squared error above the ceiling.
    ErrorCeiling(f64),
}

impl StoppingRule {
    pub fn new(kind: &str, value: f64) -> Result<Self> {
        let bad = |what: &str| Err(Error::InvalidArgument(format!("{kind}={value}: {what}")));
        match kind {
            "count" => {
                if value < 0.0 || value.fract() != 0.0 || !value.is_finite() {
                    return bad("count must be a non-negative integer");
                }
                Ok(StoppingRule::Count(value as usize))
            }
            "fraction" => {
                if !(value > 0.0 && value <= 1.0) {
                    return bad("fraction must be in (0, 1]");
                }
                Ok(StoppingRule::Fraction(value))
            }
            "accuracy_floor" | "accuracy-floor" => {
                if !(0.0..=1.0).contains(&value) {
                    return bad("accuracy floor must be in [0, 1]");
                }
                Ok(StoppingRule::AccuracyFloor(value))
            }
            "error_ceiling" | "error-ceiling" => {
                if !(value.is_finite() && value >= 0.0) {
                    return bad("error ceiling must be a non-negative number");
                }
                Ok(StoppingRule::ErrorCeiling(value))
            }
            _ => Err(Error::InvalidArgument(format!(
                "unknown stopping rule {kind:?} (expected count, fraction, accuracy_floor or error_ceiling)"
            ))),
        }
    }

    /// Number of removals a count or fraction rule asks for, given the
    /// number of hidden neurons at the start.
    pub fn removal_budget(&self, hidden_total: usize) -> Option<usize> {
        match *self {
            StoppingRule::Count(n) => Some(n),
            // the epsilon keeps 0.3 * 10 from rounding up to 4
            StoppingRule::Fraction(f) => Some(((f * hidden_total as f64) - 1e-9).ceil().max(0.0) as usize),
            _ => None,
        }
    }

    pub fn reached(&self, trace: &PruneTrace) -> bool {
        let steps = trace.steps.len();
        if let Some(budget) = self.removal_budget(trace.header.hidden_total) {
            return steps >= budget;
        }
        let Some(last) = trace.steps.last() else {
            return false;
        };
        match *self {
            StoppingRule::AccuracyFloor(floor) => last.eval_after.accuracy < floor,
            StoppingRule::ErrorCeiling(ceiling) => last.eval_after.squared_error > ceiling,
            StoppingRule::Count(_) | StoppingRule::Fraction(_) => unreachable!(),
        }
    }
}

impl fmt::Display for StoppingRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StoppingRule::Count(n) => write!(f, "count={n}"),
            StoppingRule::Fraction(v) => write!(f, "fraction={v}"),
            StoppingRule::AccuracyFloor(v) => write!(f, "accuracy_floor={v}"),
            StoppingRule::ErrorCeiling(v) => write!(f, "error_ceiling={v}"),
        }
    }
}

impl FromStr for StoppingRule {
    type Err = Error;

    /// Parses `kind=value`, e.g. `count=5` or `fraction=0.5`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, value) = s
            .split_once('=')
            .ok_or_else(|| Error::InvalidArgument(format!("stopping rule must look like kind=value, got {s:?}")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("bad stopping rule value in {s:?}")))?;
        StoppingRule::new(kind.trim(), value)
    }
}
