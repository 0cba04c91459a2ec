//! Success probability of an adversary facing a PIN lock backed by the
//! behavioural classifier.
//!
//! Breaking the combined scheme requires guessing the PIN within the allowed
//! tries *and* being accepted by the classifier:
//! `Pr = pr_forge * n_t / sigma^tau`. Once the PIN is known (shoulder surfing,
//! collusion) only the classifier stands in the way and `Pr = pr_forge`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThreatParams {
    /// Probability the classifier accepts an impostor (its false-negative rate).
    pub pr_forge: f64,
    /// PIN attempts before lock-out.
    pub n_t: u64,
    /// Candidates per PIN digit.
    pub sigma: u64,
    /// PIN length.
    pub tau: u32,
}

impl ThreatParams {
    /// Typical smartphone lock: 6 decimal digits.
    pub fn smartphone_pin(pr_forge: f64, n_t: u64) -> Self {
        Self { pr_forge, n_t, sigma: 10, tau: 6 }
    }

    /// Size of the PIN space, `sigma^tau`.
    pub fn pin_space(&self) -> Result<u64> {
        self.sigma.checked_pow(self.tau).ok_or(Error::Overflow {
            sigma: self.sigma,
            tau: self.tau,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.pr_forge) {
            return Err(Error::Config(format!("pr_forge {} outside [0, 1]", self.pr_forge)));
        }
        if self.sigma < 1 || self.tau < 1 {
            return Err(Error::Config("sigma and tau must be >= 1".into()));
        }
        let space = self.pin_space()?;
        if self.n_t > space {
            return Err(Error::Config(format!(
                "{} tries exceed the {space}-entry PIN space",
                self.n_t
            )));
        }
        Ok(())
    }
}

/// `pr_forge * n_t / sigma^tau`.
///
/// The PIN space is computed exactly in integers and converted once, so the
/// relative error stays at the level of a couple of ulps.
pub fn adversary_probability(p: &ThreatParams) -> Result<f64> {
    p.validate()?;
    let space = p.pin_space()?;
    let guess = p.n_t as f64 / space as f64;
    Ok(p.pr_forge * guess)
}

pub fn post_compromise_probability(p: &ThreatParams) -> Result<f64> {
    if !(0.0..=1.0).contains(&p.pr_forge) {
        return Err(Error::Config(format!("pr_forge {} outside [0, 1]", p.pr_forge)));
    }
    Ok(p.pr_forge)
}

/// Percentage with two decimals, e.g. `1e-4` → `"0.01%"`. Nonzero values
/// that would print as `0.00%` switch to scientific form (`4e-10` → `"4.00e-8%"`).
pub fn format_percent(p: f64) -> String {
    let pct = p * 100.0;
    if pct != 0.0 && pct.abs() < 0.005 {
        format!("{pct:.2e}%")
    } else {
        format!("{pct:.2}%")
    }
}
