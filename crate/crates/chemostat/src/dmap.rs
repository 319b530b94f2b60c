//! The diffusion-response map d -> (s1*(d), s2*(d)): over which d the
//! positive equilibrium exists, its end-point limits, the analytic derivative
//! from the parametric sensitivity system, and the diffusion rate minimizing
//! the steady output substrate level when one exists.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dynamics::ChemostatConfig;
use crate::equilibria::{phi1_prime, phi2_prime, positive_equilibrium, Equilibrium};
use crate::error::{Error, Result};
use crate::numeric::{bisect, MAX_BISECT_ITER};

/// Relative bisection tolerance for d_star.
const D_STAR_TOL_REL: f64 = 1e-12;

/// For which d the positive equilibrium exists, given everything but d.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "snake_case")]
pub enum ExistenceCase {
    /// Inlet growth below the total-volume removal rate Q/V: the
    /// equilibrium exists only for d in (0, d_bar).
    FiniteRange { d_bar: f64 },
    /// Inlet growth between Q/V and Q/V1: exists for every d > 0.
    AllPositiveD,
    /// Inlet growth above the tank-1 removal rate Q/V1: exists for every
    /// d >= 0.
    AllD,
}

impl ExistenceCase {
    pub fn d_bar(&self) -> Option<f64> {
        match self {
            ExistenceCase::FiniteRange { d_bar } => Some(*d_bar),
            _ => None,
        }
    }

    pub fn contains(&self, d: f64) -> bool {
        match self {
            ExistenceCase::FiniteRange { d_bar } => d > 0.0 && d < *d_bar,
            ExistenceCase::AllPositiveD => d > 0.0,
            ExistenceCase::AllD => d >= 0.0,
        }
    }
}

/// Classify the config (its d field is ignored) and compute d_bar in the
/// finite-range case: d_bar = V2 mu(s_in)(Q - V1 mu(s_in)) / (Q - V mu(s_in)).
pub fn existence_range(config: &ChemostatConfig) -> Result<ExistenceCase> {
    if !(config.v1 > 0.0) || !(config.v2 > 0.0) {
        return Err(Error::InvalidConfig("existence range needs V1, V2 > 0".into()));
    }
    let mu_in = config.growth.mu(config.s_in)?;
    let q = config.q;
    let v = config.total_volume();
    if mu_in > q / config.v1 {
        Ok(ExistenceCase::AllD)
    } else if mu_in >= q / v {
        Ok(ExistenceCase::AllPositiveD)
    } else {
        let d_bar = config.v2 * mu_in * (q - config.v1 * mu_in) / (q - v * mu_in);
        Ok(ExistenceCase::FiniteRange { d_bar })
    }
}

/// End-point limits of s1*(d): at d -> 0+ the tank-1 break-even level
/// mu^{-1}(Q/V1) (defined when inlet growth beats tank-1 removal; otherwise
/// the limit is s_in), and at d -> infinity the merged-tank break-even level
/// mu^{-1}(Q/V) (defined when inlet growth reaches Q/V).
pub fn limits(config: &ChemostatConfig) -> Result<(Option<f64>, Option<f64>)> {
    if !(config.v1 > 0.0) || !(config.v2 > 0.0) {
        return Err(Error::InvalidConfig("limits need V1, V2 > 0".into()));
    }
    let mu_in = config.growth.mu(config.s_in)?;
    let s1_star_0 = if mu_in > config.q / config.v1 {
        Some(config.growth.mu_inverse(config.q / config.v1)?)
    } else {
        None
    };
    let qv = config.q / config.total_volume();
    let s1_star_inf = if mu_in > qv {
        Some(config.growth.mu_inverse(qv)?)
    } else if mu_in == qv {
        Some(config.s_in)
    } else {
        None
    };
    Ok((s1_star_0, s1_star_inf))
}

/// Analytic derivatives (ds1*/dd, ds2*/dd) at the positive equilibrium `eq`
/// of `config`, from the 2x2 sensitivity system: with A = d(phi1'(s1*) - 1),
/// B = V2 beta'(s2*), det = d^2 (1 - phi1' phi2'),
/// ds1*/dd = (s2* - s1*)(-B)/det and ds2*/dd = (s2* - s1*) A / det.
pub fn ds_dd(config: &ChemostatConfig, eq: &Equilibrium) -> Result<(f64, f64)> {
    let d = config.d;
    if !(d > 0.0) {
        return Err(Error::InvalidConfig("sensitivities need d > 0".into()));
    }
    let p1 = phi1_prime(config, eq.s1)?;
    let p2 = phi2_prime(config, eq.s2)?;
    let det = d * d * (1.0 - p1 * p2);
    if det.abs() < 1e-14 * d * d * (1.0 + (p1 * p2).abs()) {
        return Err(Error::SingularSensitivity(det));
    }
    let a = d * (p1 - 1.0);
    let b = config.v2 * config.growth.beta_prime(eq.s2, config.s_in)?;
    let gap = eq.s2 - eq.s1;
    Ok((gap * (-b) / det, gap * a / det))
}

/// Steady substrate pair at a given diffusion rate; None when the positive
/// equilibrium does not exist there.
fn stars_at(config: &ChemostatConfig, d: f64) -> Result<Option<(f64, f64)>> {
    Ok(positive_equilibrium(&config.with_d(d))?.map(|eq| (eq.s1, eq.s2)))
}

/// Outcome of the search for the output-minimizing diffusion rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DStar {
    /// s1*(.) has an interior minimum at this d (where s2* crosses the
    /// production maximizer s_hat).
    Minimum { d_star: f64 },
    /// s1*(.) decreases for all admissible d; no interior minimum.
    Decreasing,
}

/// Locate the diffusion rate minimizing s1*(d), exploiting that s2*(.) is
/// increasing in d and that the minimum sits exactly where s2* = s_hat.
/// Returns `Decreasing` when s2* never reaches s_hat (its limit
/// mu^{-1}(Q/V) stays at or below s_hat).
pub fn find_d_star(config: &ChemostatConfig) -> Result<DStar> {
    let case = existence_range(config)?;
    let s_hat = config.growth.s_hat(config.s_in)?;
    let (_, s1_star_inf) = limits(config)?;

    if !matches!(case, ExistenceCase::FiniteRange { .. }) {
        // s2* climbs to the merged-tank break-even level; no crossing means
        // the map keeps decreasing
        match s1_star_inf {
            Some(limit) if limit > s_hat => {}
            _ => return Ok(DStar::Decreasing),
        }
    }

    // bracket the crossing s2*(d) = s_hat by geometric search from d = Q,
    // confined to (0, d_bar) in the finite-range case
    let f = |d: f64| -> Result<f64> {
        let (_, s2) = stars_at(config, d)?.ok_or(Error::Inconsistency(format!(
            "equilibrium vanished at d = {d} inside its existence range"
        )))?;
        Ok(s2 - s_hat)
    };

    let (mut lo, mut hi);
    match case {
        ExistenceCase::FiniteRange { d_bar } => {
            lo = 0.5 * d_bar;
            while f(lo)? > 0.0 {
                lo *= 0.5;
                if lo < 1e-300 {
                    return Err(Error::Inconsistency("no lower bracket for d_star".into()));
                }
            }
            hi = 0.5 * d_bar;
            while f(hi)? < 0.0 {
                // approach d_bar geometrically from below
                hi = d_bar - 0.5 * (d_bar - hi);
                if d_bar - hi < 1e-15 * d_bar {
                    return Err(Error::Inconsistency("no upper bracket for d_star".into()));
                }
            }
        }
        _ => {
            lo = config.q;
            while f(lo)? > 0.0 {
                lo *= 0.5;
                if lo < 1e-300 {
                    return Err(Error::Inconsistency("no lower bracket for d_star".into()));
                }
            }
            hi = config.q;
            while f(hi)? < 0.0 {
                hi *= 2.0;
                if hi > 1e300 {
                    return Err(Error::Inconsistency("no upper bracket for d_star".into()));
                }
            }
        }
    }

    let d_star = bisect(
        |d| f(d).expect("bracket stays inside the existence range"),
        lo,
        hi,
        D_STAR_TOL_REL * hi,
        MAX_BISECT_ITER,
    )?;
    Ok(DStar::Minimum { d_star })
}

/// One sweep point; the value fields are None when the positive equilibrium
/// does not exist at this d.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSample {
    pub d: f64,
    pub s1_star: Option<f64>,
    pub s2_star: Option<f64>,
    pub ds1_dd: Option<f64>,
    pub in_range: bool,
}

/// The assembled response of the steady state to the diffusion rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffusionProfile {
    #[serde(flatten)]
    pub case: ExistenceCase,
    pub s1_star_0: Option<f64>,
    pub s1_star_inf: Option<f64>,
    pub d_star: Option<f64>,
    /// True when s1*(d) decreases over the whole range (no interior
    /// minimum).
    pub decreasing: bool,
    #[serde(skip)]
    pub samples: Vec<SweepSample>,
}

impl DiffusionProfile {
    /// CSV of the valid samples, header `d,s1_star,s2_star,ds1_dd`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "d,s1_star,s2_star,ds1_dd\r\n")?;
        for s in &self.samples {
            if let (Some(s1), Some(s2), Some(ds1)) = (s.s1_star, s.s2_star, s.ds1_dd) {
                write!(w, "{:.16e},{:.16e},{:.16e},{:.16e}\r\n", s.d, s1, s2, ds1)?;
            }
        }
        Ok(())
    }

    /// The sidecar metadata (everything but the samples) as a JSON value.
    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("profile serializes")
    }
}

/// Evaluate one grid point: the steady substrate pair and its d-derivative,
/// or a flagged sample when d falls outside the existence range.
pub fn sample_point(
    config: &ChemostatConfig,
    d: f64,
    case: &ExistenceCase,
) -> Result<SweepSample> {
    let in_range = case.contains(d) && d > 0.0;
    let mut sample = SweepSample {
        d,
        s1_star: None,
        s2_star: None,
        ds1_dd: None,
        in_range,
    };
    if in_range {
        let at_d = config.with_d(d);
        if let Some(eq) = positive_equilibrium(&at_d)? {
            let (ds1, _) = ds_dd(&at_d, &eq)?;
            sample.s1_star = Some(eq.s1);
            sample.s2_star = Some(eq.s2);
            sample.ds1_dd = Some(ds1);
        } else {
            sample.in_range = false;
        }
    }
    Ok(sample)
}

/// Assemble a profile from already-evaluated samples.
pub fn profile_from_samples(
    config: &ChemostatConfig,
    samples: Vec<SweepSample>,
) -> Result<DiffusionProfile> {
    let case = existence_range(config)?;
    let (s1_star_0, s1_star_inf) = limits(config)?;
    let d_star = find_d_star(config)?;
    Ok(DiffusionProfile {
        case,
        s1_star_0,
        s1_star_inf,
        d_star: match d_star {
            DStar::Minimum { d_star } => Some(d_star),
            DStar::Decreasing => None,
        },
        decreasing: matches!(d_star, DStar::Decreasing),
        samples,
    })
}

/// Evaluate the equilibrium response on an explicit d grid. Points outside
/// the existence range are kept but flagged.
pub fn sweep(config: &ChemostatConfig, d_grid: &[f64]) -> Result<DiffusionProfile> {
    let case = existence_range(config)?;
    let samples = d_grid
        .iter()
        .map(|&d| sample_point(config, d, &case))
        .collect::<Result<Vec<_>>>()?;
    profile_from_samples(config, samples)
}

/// A default sweep grid: in the finite-range case, n points spanning
/// (0, frac * d_bar] (frac defaults to 0.999 since the solver conditioning
/// degrades as s2* approaches s_in); otherwise n log-spaced points on
/// [1e-3 Q, 1e3 Q].
pub fn default_grid(config: &ChemostatConfig, n: usize, d_bar_fraction: Option<f64>) -> Result<Vec<f64>> {
    let case = existence_range(config)?;
    let n = n.max(2);
    Ok(match case {
        ExistenceCase::FiniteRange { d_bar } => {
            let hi = d_bar_fraction.unwrap_or(0.999) * d_bar;
            (1..=n).map(|i| hi * i as f64 / n as f64).collect()
        }
        _ => {
            let (lo, hi) = (1e-3 * config.q, 1e3 * config.q);
            let ratio = (hi / lo).ln();
            (0..n)
                .map(|i| lo * (ratio * i as f64 / (n - 1) as f64).exp())
                .collect()
        }
    })
}
