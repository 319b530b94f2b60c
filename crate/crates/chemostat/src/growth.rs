//! Growth laws: increasing concave `mu` with `mu(0) = 0`, and the derived
//! scalar functions `beta(s) = mu(s)(s_in - s)` and `g(s) = 1/beta(s)` that
//! drive the equilibrium and design analysis.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{bisect, golden_section_min, MAX_BISECT_ITER};

/// Absolute argument tolerance for the generic bisection / golden-section
/// fallbacks used by non-Monod models.
const ARG_TOL: f64 = 1e-12;

/// A specific growth law. `Monod` gets closed forms for the inverse and for
/// the maximizer of `beta`; `Tabulated` (piecewise-linear samples, mainly for
/// testing genericity) falls back to bracketed searches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GrowthModel {
    Monod {
        mu_max: f64,
        #[serde(rename = "K")]
        k: f64,
    },
    Tabulated {
        /// (s, mu(s)) pairs; must start at (0, 0), be strictly increasing in
        /// both coordinates and have nonincreasing chord slopes.
        samples: Vec<(f64, f64)>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        s_in_hint: Option<f64>,
    },
}

impl GrowthModel {
    pub fn monod(mu_max: f64, k: f64) -> Result<Self> {
        let m = GrowthModel::Monod { mu_max, k };
        m.validate()?;
        Ok(m)
    }

    pub fn tabulated(samples: Vec<(f64, f64)>, s_in_hint: Option<f64>) -> Result<Self> {
        let m = GrowthModel::Tabulated { samples, s_in_hint };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            GrowthModel::Monod { mu_max, k } => {
                if !(*mu_max > 0.0) || !(*k > 0.0) {
                    return Err(Error::InvalidConfig(format!(
                        "Monod parameters must be positive (mu_max = {mu_max}, K = {k})"
                    )));
                }
            }
            GrowthModel::Tabulated { samples, s_in_hint } => {
                if samples.len() < 2 {
                    return Err(Error::InvalidConfig(
                        "tabulated growth law needs at least two samples".into(),
                    ));
                }
                if samples[0] != (0.0, 0.0) {
                    return Err(Error::InvalidConfig(
                        "tabulated growth law must start at (0, 0)".into(),
                    ));
                }
                let mut prev_slope = f64::INFINITY;
                for w in samples.windows(2) {
                    let (s0, m0) = w[0];
                    let (s1, m1) = w[1];
                    if !(s1 > s0) || !(m1 > m0) {
                        return Err(Error::InvalidConfig(
                            "tabulated samples must be strictly increasing".into(),
                        ));
                    }
                    let slope = (m1 - m0) / (s1 - s0);
                    if slope > prev_slope {
                        return Err(Error::InvalidConfig(
                            "tabulated samples must be concave (chord slopes nonincreasing)"
                                .into(),
                        ));
                    }
                    prev_slope = slope;
                }
                if let Some(hint) = s_in_hint {
                    if samples.last().unwrap().0 < *hint {
                        return Err(Error::InvalidConfig(format!(
                            "tabulated samples must cover [0, {hint}]"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Growth rate `mu(s)`.
    pub fn mu(&self, s: f64) -> Result<f64> {
        if s < 0.0 {
            return Err(Error::NegativeConcentration(s));
        }
        Ok(self.mu_unchecked(s))
    }

    pub(crate) fn mu_unchecked(&self, s: f64) -> f64 {
        match self {
            GrowthModel::Monod { mu_max, k } => mu_max * s / (k + s),
            GrowthModel::Tabulated { samples, .. } => {
                let last = samples.last().unwrap();
                if s >= last.0 {
                    return last.1;
                }
                let i = samples.partition_point(|&(si, _)| si <= s).max(1);
                let (s0, m0) = samples[i - 1];
                let (s1, m1) = samples[i];
                m0 + (m1 - m0) * (s - s0) / (s1 - s0)
            }
        }
    }

    /// Derivative `mu'(s)`: analytic for Monod, central finite difference for
    /// tabulated laws.
    pub fn mu_prime(&self, s: f64) -> Result<f64> {
        if s < 0.0 {
            return Err(Error::NegativeConcentration(s));
        }
        match self {
            GrowthModel::Monod { mu_max, k } => Ok(mu_max * k / ((k + s) * (k + s))),
            GrowthModel::Tabulated { .. } => {
                let h = 1e-6 * s.max(1.0);
                if s >= h {
                    Ok((self.mu_unchecked(s + h) - self.mu_unchecked(s - h)) / (2.0 * h))
                } else {
                    Ok((self.mu_unchecked(s + h) - self.mu_unchecked(s)) / h)
                }
            }
        }
    }

    /// Supremum of `mu` over its domain. The paper never bounds `mu` above;
    /// for tabulated laws the last sample value stands in.
    pub fn mu_sup(&self) -> f64 {
        match self {
            GrowthModel::Monod { mu_max, .. } => *mu_max,
            GrowthModel::Tabulated { samples, .. } => samples.last().unwrap().1,
        }
    }

    /// The unique `s` with `mu(s) = r`, for `0 < r < sup mu`.
    pub fn mu_inverse(&self, r: f64) -> Result<f64> {
        if r <= 0.0 || r >= self.mu_sup() {
            return Err(Error::NoPreimage(r));
        }
        match self {
            GrowthModel::Monod { mu_max, k } => Ok(k * r / (mu_max - r)),
            GrowthModel::Tabulated { samples, .. } => {
                let hi = samples.last().unwrap().0;
                bisect(
                    |s| self.mu_unchecked(s) - r,
                    0.0,
                    hi,
                    ARG_TOL,
                    MAX_BISECT_ITER,
                )
            }
        }
    }

    /// `beta(s) = mu(s) (s_in - s)` on [0, s_in].
    pub fn beta(&self, s: f64, s_in: f64) -> Result<f64> {
        if s < 0.0 || s > s_in {
            return Err(Error::OutOfDomain {
                value: s,
                lo: 0.0,
                hi: s_in,
            });
        }
        Ok(self.beta_unchecked(s, s_in))
    }

    pub(crate) fn beta_unchecked(&self, s: f64, s_in: f64) -> f64 {
        self.mu_unchecked(s) * (s_in - s)
    }

    /// `beta'(s) = mu'(s)(s_in - s) - mu(s)`.
    pub fn beta_prime(&self, s: f64, s_in: f64) -> Result<f64> {
        if s < 0.0 || s > s_in {
            return Err(Error::OutOfDomain {
                value: s,
                lo: 0.0,
                hi: s_in,
            });
        }
        Ok(self.mu_prime(s)? * (s_in - s) - self.mu_unchecked(s))
    }

    /// The unique maximizer of `beta` on (0, s_in).
    pub fn s_hat(&self, s_in: f64) -> Result<f64> {
        if !(s_in > 0.0) {
            return Err(Error::InvalidConfig(format!("s_in must be positive, got {s_in}")));
        }
        match self {
            GrowthModel::Monod { k, .. } => Ok((k * (k + s_in)).sqrt() - k),
            GrowthModel::Tabulated { .. } => Ok(golden_section_min(
                |s| -self.beta_unchecked(s, s_in),
                0.0,
                s_in,
                ARG_TOL,
            )),
        }
    }

    /// `g(s) = 1/beta(s)`, the convex volume-cost density on (0, s_in).
    /// Callers must stay strictly inside the interval; the poles raise errors.
    pub fn g(&self, s: f64, s_in: f64) -> Result<f64> {
        if s <= 0.0 || s >= s_in {
            return Err(Error::Pole(s));
        }
        let b = self.beta_unchecked(s, s_in);
        if b == 0.0 {
            return Err(Error::Pole(s));
        }
        Ok(1.0 / b)
    }

    /// `g'(s) = -beta'(s)/beta(s)^2`.
    pub fn g_prime(&self, s: f64, s_in: f64) -> Result<f64> {
        let b = self.beta(s, s_in)?;
        if s <= 0.0 || s >= s_in || b == 0.0 {
            return Err(Error::Pole(s));
        }
        Ok(-self.beta_prime(s, s_in)? / (b * b))
    }
}
