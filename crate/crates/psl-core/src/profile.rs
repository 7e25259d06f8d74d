//! Curvature profiles: finite mixtures of Gaussian bumps.
//!
//! Everything downstream evaluates fast because rho, its primitive and its
//! L2 norm all have closed forms in erf and exp.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::special::erf;

const SQRT_TAU: f64 = 2.506_628_274_631_000_7;

/// One Gaussian bump `a * exp(-(xi - c)^2 / (2 w^2))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianBump {
    /// Amplitude (any finite real, including 0 and negatives).
    pub a: f64,
    /// Center.
    pub c: f64,
    /// Width, strictly positive.
    pub w: f64,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ProfileError {
    #[error("bumps[{index}].w must be finite and > 0, got {value}")]
    InvalidWidth { index: usize, value: f64 },
    #[error("bumps[{index}].{field} must be finite, got {value}")]
    NonFinite {
        index: usize,
        field: &'static str,
        value: f64,
    },
}

/// Errors from the JSON parse surface. Parse failures and validation failures
/// are distinguished so callers can report the right field.
#[derive(Debug, Error)]
pub enum ProfileJsonError {
    #[error("profile JSON malformed: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("{0}")]
    Invalid(#[from] ProfileError),
}

/// A curvature profile rho(xi) = sum of Gaussian bumps. The empty mixture is
/// the identically-zero profile and is valid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Profile {
    bumps: Vec<GaussianBump>,
}

impl Profile {
    /// Validates every bump: all fields finite, widths strictly positive.
    pub fn new(bumps: Vec<GaussianBump>) -> Result<Self, ProfileError> {
        for (index, b) in bumps.iter().enumerate() {
            for (field, value) in [("a", b.a), ("c", b.c), ("w", b.w)] {
                if !value.is_finite() {
                    return Err(ProfileError::NonFinite {
                        index,
                        field,
                        value,
                    });
                }
            }
            if b.w <= 0.0 {
                return Err(ProfileError::InvalidWidth {
                    index,
                    value: b.w,
                });
            }
        }
        Ok(Self { bumps })
    }

    pub fn zero() -> Self {
        Self { bumps: Vec::new() }
    }

    /// Parse `{"bumps":[{"a":..,"c":..,"w":..}]}` with full validation.
    pub fn from_json(text: &str) -> Result<Self, ProfileJsonError> {
        let raw: Self = serde_json::from_str(text)?;
        Ok(Self::new(raw.bumps)?)
    }

    pub fn bumps(&self) -> &[GaussianBump] {
        &self.bumps
    }

    pub fn is_zero(&self) -> bool {
        self.bumps.iter().all(|b| b.a == 0.0)
    }

    /// rho(xi)
    pub fn rho(&self, xi: f64) -> f64 {
        self.bumps
            .iter()
            .map(|b| {
                let t = (xi - b.c) / b.w;
                b.a * (-0.5 * t * t).exp()
            })
            .sum()
    }

    /// d rho / d xi, closed form.
    pub fn rho_prime(&self, xi: f64) -> f64 {
        self.bumps
            .iter()
            .map(|b| {
                let t = (xi - b.c) / b.w;
                -b.a * t / b.w * (-0.5 * t * t).exp()
            })
            .sum()
    }

    /// Running integral I(xi) = int_{-inf}^{xi} rho, via erf:
    /// each bump contributes a*w*sqrt(pi/2)*(1 + erf((xi-c)/(w*sqrt(2)))).
    pub fn running_integral(&self, xi: f64) -> f64 {
        const SQRT_HALF_PI: f64 = 1.253_314_137_315_500_3;
        self.bumps
            .iter()
            .map(|b| {
                let t = (xi - b.c) / (b.w * std::f64::consts::SQRT_2);
                b.a * b.w * SQRT_HALF_PI * (1.0 + erf(t))
            })
            .sum()
    }

    /// Total integral int rho = sum a*w*sqrt(2 pi).
    pub fn total_integral(&self) -> f64 {
        self.bumps.iter().map(|b| b.a * b.w * SQRT_TAU).sum()
    }

    /// int rho^2, closed form over all bump pairs:
    /// sum_{k,l} a_k a_l sqrt(2 pi) w_k w_l / sqrt(w_k^2 + w_l^2)
    ///   * exp(-(c_k - c_l)^2 / (2 (w_k^2 + w_l^2))).
    pub fn l2_norm_sq(&self) -> f64 {
        let mut total = 0.0;
        for k in &self.bumps {
            for l in &self.bumps {
                let wsq = k.w * k.w + l.w * l.w;
                let dc = k.c - l.c;
                total += k.a * l.a * SQRT_TAU * k.w * l.w / wsq.sqrt()
                    * (-dc * dc / (2.0 * wsq)).exp();
            }
        }
        total
    }

    /// Upper bound on max |rho|: sum of |amplitudes|.
    pub fn peak_bound(&self) -> f64 {
        self.bumps.iter().map(|b| b.a.abs()).sum()
    }

    /// Radius R such that both the trajectory envelope exp(-p (xi+q)^2) and
    /// every bump envelope fall below `eps` for |xi| > R.
    pub fn support_radius(&self, p: f64, q: f64, eps: f64) -> f64 {
        let mut r = q.abs() + ((1.0 / eps).ln() / p).sqrt();
        for b in &self.bumps {
            let amp = b.a.abs();
            if amp > eps {
                r = r.max(b.c.abs() + b.w * (2.0 * (amp / eps).ln()).sqrt());
            }
        }
        r
    }

    /// The profile shifted by the internal flow xi -> xi + delta
    /// (every center moves to c - delta).
    pub fn advanced(&self, delta: f64) -> Self {
        Self {
            bumps: self
                .bumps
                .iter()
                .map(|b| GaussianBump {
                    a: b.a,
                    c: b.c - delta,
                    w: b.w,
                })
                .collect(),
        }
    }

    /// Spatial mirror rho(-xi): every center flips sign.
    pub fn mirrored(&self) -> Self {
        Self {
            bumps: self
                .bumps
                .iter()
                .map(|b| GaussianBump {
                    a: b.a,
                    c: -b.c,
                    w: b.w,
                })
                .collect(),
        }
    }
}
