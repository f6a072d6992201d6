//! Even frequency distributions `g(ω)` for the disordered ensemble.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FrequencyDistribution {
    /// Identical oscillators, `g(ω) = δ(ω)`.
    Delta,
    /// `1/(2Γ)` on `[−Γ, Γ]`.
    Uniform { gamma: f64 },
    /// `Γ/π/(ω² + Γ²)`, optionally truncated to `|ω| ≤ cutoff·Γ` and renormalized.
    Lorentzian { gamma: f64, cutoff: Option<f64> },
}

impl FrequencyDistribution {
    pub fn uniform(gamma: f64) -> Self {
        FrequencyDistribution::Uniform { gamma }
    }

    pub fn lorentzian(gamma: f64) -> Self {
        FrequencyDistribution::Lorentzian { gamma, cutoff: None }
    }

    pub fn lorentzian_with_cutoff(gamma: f64, cutoff: f64) -> Self {
        FrequencyDistribution::Lorentzian { gamma, cutoff: Some(cutoff) }
    }

    /// Uniform accepts `Γ = 0` (it degenerates to the delta distribution);
    /// Lorentzian needs `Γ > 0` and a positive cutoff when present.
    pub fn validate(&self) -> Result<()> {
        match *self {
            FrequencyDistribution::Delta => Ok(()),
            FrequencyDistribution::Uniform { gamma } if gamma >= 0.0 && gamma.is_finite() => Ok(()),
            FrequencyDistribution::Lorentzian { gamma, cutoff }
                if gamma > 0.0 && gamma.is_finite() && cutoff.is_none_or(|c| c > 0.0) =>
            {
                Ok(())
            }
            other => Err(Error::InvalidParameter(format!("invalid distribution {other}"))),
        }
    }

    pub fn gamma(&self) -> f64 {
        match *self {
            FrequencyDistribution::Delta => 0.0,
            FrequencyDistribution::Uniform { gamma } | FrequencyDistribution::Lorentzian { gamma, .. } => gamma,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FrequencyDistribution::Delta => "delta",
            FrequencyDistribution::Uniform { .. } => "uniform",
            FrequencyDistribution::Lorentzian { .. } => "lorentzian",
        }
    }

    /// Inverse CDF for `q ∈ (0, 1)`.
    pub fn quantile(&self, q: f64) -> f64 {
        match *self {
            FrequencyDistribution::Delta => 0.0,
            FrequencyDistribution::Uniform { gamma } => gamma * (2.0 * q - 1.0),
            FrequencyDistribution::Lorentzian { gamma, cutoff } => {
                let half_width = cutoff.map_or(0.5 * PI, f64::atan);
                gamma * ((2.0 * q - 1.0) * half_width).tan()
            }
        }
    }

    /// Probability density (zero for the delta distribution away from the origin).
    pub fn pdf(&self, omega: f64) -> f64 {
        match *self {
            FrequencyDistribution::Delta => 0.0,
            FrequencyDistribution::Uniform { gamma } => {
                if omega.abs() <= gamma {
                    0.5 / gamma
                } else {
                    0.0
                }
            }
            FrequencyDistribution::Lorentzian { gamma, cutoff } => {
                let norm = cutoff.map_or(1.0, |c| 2.0 * c.atan() / PI);
                if cutoff.is_some_and(|c| omega.abs() > c * gamma) {
                    0.0
                } else {
                    gamma / PI / (omega * omega + gamma * gamma) / norm
                }
            }
        }
    }
}

impl fmt::Display for FrequencyDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            FrequencyDistribution::Delta => write!(f, "delta"),
            FrequencyDistribution::Uniform { gamma } => write!(f, "uniform(gamma={gamma})"),
            FrequencyDistribution::Lorentzian { gamma, cutoff: None } => write!(f, "lorentzian(gamma={gamma})"),
            FrequencyDistribution::Lorentzian { gamma, cutoff: Some(c) } => {
                write!(f, "lorentzian(gamma={gamma},cutoff={c})")
            }
        }
    }
}
