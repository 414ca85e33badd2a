//! Symmetric and asymmetric regression losses over the signed error
//! `e = predicted - actual`, with subgradients for training.
//!
//! `AL1` pairs a reversed Huber shape on each side: linear for small
//! underestimates and quadratic beyond `e = -1`, quadratic for small
//! overestimates and linear beyond `e = 1`. `AL2` is linear for every
//! underestimate and, for overestimates, zero inside `[0, eps1)`, quadratic
//! on `[eps1, eps2)` and linear from `eps2` on. AL2 jumps at `eps2`; the jump
//! is kept as defined.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::LossError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    Mse,
    Al1,
    Al2,
}

impl LossKind {
    pub const ALL: [LossKind; 3] = [LossKind::Mse, LossKind::Al1, LossKind::Al2];
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossKind::Mse => "mse",
            LossKind::Al1 => "al1",
            LossKind::Al2 => "al2",
        })
    }
}

impl FromStr for LossKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mse" => Ok(LossKind::Mse),
            "al1" => Ok(LossKind::Al1),
            "al2" => Ok(LossKind::Al2),
            other => Err(format!("unknown loss `{other}` (expected mse, al1 or al2)")),
        }
    }
}

/// A loss and its constants. `a` weights underestimates, `b` overestimates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossSpec {
    pub kind: LossKind,
    pub a: f64,
    pub b: f64,
    pub eps1: f64,
    pub eps2: f64,
}

impl Default for LossSpec {
    fn default() -> Self {
        LossSpec {
            kind: LossKind::Mse,
            a: 5.0,
            b: 2.0,
            eps1: 0.005,
            eps2: 0.01,
        }
    }
}

impl LossSpec {
    pub fn new(kind: LossKind) -> Self {
        LossSpec {
            kind,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), LossError> {
        let ok = |c: bool, msg: &str| if c { Ok(()) } else { Err(LossError::InvalidSpec(msg.into())) };
        ok(self.a.is_finite() && self.b.is_finite(), "a and b must be finite")?;
        ok(self.a > self.b && self.b > 0.0, "require a > b > 0")?;
        ok(0.0 < self.eps1 && self.eps1 < self.eps2, "require 0 < eps1 < eps2")
    }

    pub fn value(&self, e: f64) -> f64 {
        match self.kind {
            LossKind::Mse => loss_mse(e),
            LossKind::Al1 => loss_al1(e, self),
            LossKind::Al2 => loss_al2(e, self),
        }
    }

    pub fn grad(&self, e: f64) -> f64 {
        loss_grad(e, self)
    }
}

pub fn loss_mse(e: f64) -> f64 {
    e * e
}

pub fn loss_al1(e: f64, spec: &LossSpec) -> f64 {
    if e <= -1.0 {
        spec.a * e * e
    } else if e <= 0.0 {
        spec.a * e.abs()
    } else if e < 1.0 {
        spec.b * e * e
    } else {
        spec.b * e
    }
}

pub fn loss_al2(e: f64, spec: &LossSpec) -> f64 {
    if e < 0.0 {
        spec.a * e.abs()
    } else if e < spec.eps1 {
        0.0
    } else if e < spec.eps2 {
        spec.b * e * e
    } else {
        spec.b * e
    }
}

/// Derivative of the selected loss with respect to `e`. At kinks and jumps
/// the branch that contains the point decides (AL1 at 0 gives `-a`, AL2 at
/// `eps2` gives `b`).
pub fn loss_grad(e: f64, spec: &LossSpec) -> f64 {
    match spec.kind {
        LossKind::Mse => 2.0 * e,
        LossKind::Al1 => {
            if e <= -1.0 {
                2.0 * spec.a * e
            } else if e <= 0.0 {
                -spec.a
            } else if e < 1.0 {
                2.0 * spec.b * e
            } else {
                spec.b
            }
        }
        LossKind::Al2 => {
            if e < 0.0 {
                -spec.a
            } else if e < spec.eps1 {
                0.0
            } else if e < spec.eps2 {
                2.0 * spec.b * e
            } else {
                spec.b
            }
        }
    }
}

/// Mean per-sample loss over a batch; the denominator is the full batch
/// size, dead-zone samples included.
pub fn batch_loss(errors: &[f64], spec: &LossSpec) -> Result<f64, LossError> {
    if errors.is_empty() {
        return Err(LossError::EmptyBatch);
    }
    let sum: f64 = errors.iter().map(|&e| spec.value(e)).sum();
    Ok(sum / errors.len() as f64)
}
