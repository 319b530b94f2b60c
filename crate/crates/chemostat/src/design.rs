//! Minimal-total-volume design with a prescribed steady output substrate
//! level s_ref: optimizer for a fixed diffusion rate, the full optimizer with
//! the diffusion rate free, the optimal-volume-versus-d curve, and the
//! single-tank baseline they are measured against.

use serde::{Deserialize, Serialize};

use crate::dynamics::ChemostatConfig;
use crate::error::{Error, Result};
use crate::growth::GrowthModel;
use crate::numeric::{bisect, MAX_BISECT_ITER};

/// Threshold below which an optimal volume counts as zero, relative to the
/// single-tank baseline.
const ZERO_VOLUME_REL: f64 = 1e-12;

/// The design problem: reach output level s_ref at steady state with minimal
/// total volume. `d` fixes the diffusion rate; None leaves it free.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSpec {
    #[serde(rename = "Q")]
    pub q: f64,
    pub s_in: f64,
    pub s_ref: f64,
    pub growth: GrowthModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
}

impl DesignSpec {
    pub fn validate(&self) -> Result<()> {
        self.growth.validate()?;
        if !(self.q > 0.0) {
            return Err(Error::InvalidConfig(format!("Q must be positive, got {}", self.q)));
        }
        if !(self.s_ref > 0.0 && self.s_ref < self.s_in) {
            return Err(Error::InvalidConfig(format!(
                "s_ref must lie in (0, s_in), got {} with s_in = {}",
                self.s_ref, self.s_in
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignKind {
    /// One flow-through tank, no lateral compartment (V2 = 0).
    SingleMixedTank,
    /// Both volumes positive.
    TwoTanks,
    /// Only the lateral compartment (V1 = 0), hanging off the pipe.
    SingleLateralTank,
}

/// An optimal configuration and the quantities that justify it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignResult {
    pub kind: DesignKind,
    #[serde(rename = "V1")]
    pub v1: f64,
    #[serde(rename = "V2")]
    pub v2: f64,
    pub d: f64,
    /// True when any diffusion rate achieves the optimum (single mixed
    /// tank); `d` is reported as 0 then.
    pub d_any: bool,
    /// The lateral-tank substrate level at the optimum.
    pub s2_opt: f64,
    pub total_volume: f64,
    pub baseline_volume: f64,
    pub residence_time: f64,
    /// Smallest admissible lateral substrate level at this d (None when d
    /// was free).
    pub alpha: Option<f64>,
    /// Interior critical point of the volume cost (None when s_ref <= s_hat
    /// makes it undefined).
    pub s_g: Option<f64>,
}

impl DesignResult {
    /// The chemostat this design prescribes, for closing the loop with the
    /// equilibrium solver.
    pub fn to_config(&self, spec: &DesignSpec) -> ChemostatConfig {
        ChemostatConfig {
            v1: self.v1,
            v2: self.v2,
            q: spec.q,
            s_in: spec.s_in,
            d: self.d,
            growth: spec.growth.clone(),
        }
    }
}

/// Volume of the single flow-through tank holding s_ref at steady state:
/// Q/mu(s_ref), equivalently Q g(s_ref)(s_in - s_ref).
pub fn single_tank_volume(spec: &DesignSpec) -> Result<f64> {
    spec.validate()?;
    Ok(spec.q / spec.growth.mu(spec.s_ref)?)
}

/// Smallest admissible lateral substrate level at diffusion rate d:
/// max(0, s_ref - (Q/d)(s_in - s_ref)). Below it the mass balance would
/// need a negative tank-1 volume.
pub fn alpha(spec: &DesignSpec, d: f64) -> Result<f64> {
    spec.validate()?;
    if !(d > 0.0) {
        return Err(Error::InvalidConfig(format!("alpha needs d > 0, got {d}")));
    }
    Ok((spec.s_ref - spec.q / d * (spec.s_in - spec.s_ref)).max(0.0))
}

/// Excess volume per unit diffusion of pairing the lateral level s2 with the
/// output level s_ref: (g(s2) - g(s_ref))(s_ref - s2). Negative exactly when
/// adding the lateral tank beats the single-tank baseline.
pub fn volume_excess(spec: &DesignSpec, s2: f64) -> Result<f64> {
    let g_ref = spec.growth.g(spec.s_ref, spec.s_in)?;
    let g2 = spec.growth.g(s2, spec.s_in)?;
    Ok((g2 - g_ref) * (spec.s_ref - s2))
}

/// The point below the cost minimizer s_hat with the same cost as s_ref
/// (defined when s_hat < s_ref).
pub fn s_ref_reflected(spec: &DesignSpec) -> Result<f64> {
    spec.validate()?;
    let s_hat = spec.growth.s_hat(spec.s_in)?;
    if spec.s_ref <= s_hat {
        return Err(Error::DesignUndefined(format!(
            "reflection needs s_ref > s_hat (s_ref = {}, s_hat = {s_hat})",
            spec.s_ref
        )));
    }
    let g_ref = spec.growth.g(spec.s_ref, spec.s_in)?;
    // g blows up at 0, so halving finds a left endpoint above the level
    let mut lo = 0.5 * s_hat;
    while spec.growth.g(lo, spec.s_in)? <= g_ref {
        lo *= 0.5;
        if lo < 1e-300 {
            return Err(Error::Inconsistency("no bracket for the reflected level".into()));
        }
    }
    bisect(
        |s| spec.growth.g(s, spec.s_in).expect("inside (0, s_in)") - g_ref,
        lo,
        s_hat,
        1e-12 * spec.s_in,
        MAX_BISECT_ITER,
    )
}

/// Interior critical point of the excess volume: the root of
/// g'(s) = (g(s_ref) - g(s))/(s - s_ref) between the reflected level and
/// s_hat. Defined only when s_hat < s_ref.
pub fn s_g(spec: &DesignSpec) -> Result<f64> {
    let s_hat = spec.growth.s_hat(spec.s_in)?;
    if spec.s_ref <= s_hat {
        return Err(Error::DesignUndefined(format!(
            "s_G needs s_ref > s_hat (s_ref = {}, s_hat = {s_hat})",
            spec.s_ref
        )));
    }
    let lo = s_ref_reflected(spec)?;
    let g_ref = spec.growth.g(spec.s_ref, spec.s_in)?;
    // g' increases and the chord slope H decreases on (lo, s_hat), so their
    // difference has exactly one root there
    let f = |s: f64| {
        let gp = spec.growth.g_prime(s, spec.s_in).expect("inside (0, s_in)");
        let h = (g_ref - spec.growth.g(s, spec.s_in).expect("inside (0, s_in)"))
            / (s - spec.s_ref);
        gp - h
    };
    bisect(f, lo, s_hat, 1e-12 * spec.s_in, MAX_BISECT_ITER)
}

/// Minimal-volume design at a prescribed diffusion rate d.
///
/// When s_hat >= s_ref the single mixed tank Q/mu(s_ref) is optimal.
/// Otherwise the optimal lateral level is max(alpha, s_G) and the volumes
/// follow from the two steady-state mass balances:
/// V1 = Q g(s_ref)(s_in - s_ref) + d g(s_ref)(s2 - s_ref),
/// V2 = d g(s2)(s_ref - s2).
pub fn design_fixed_d(spec: &DesignSpec) -> Result<DesignResult> {
    spec.validate()?;
    let d = spec.d.ok_or_else(|| {
        Error::InvalidConfig("fixed-d design needs the d field".into())
    })?;
    if !(d > 0.0) {
        return Err(Error::InvalidConfig(format!("fixed-d design needs d > 0, got {d}")));
    }
    let baseline = single_tank_volume(spec)?;
    let s_hat = spec.growth.s_hat(spec.s_in)?;

    if s_hat >= spec.s_ref {
        return Ok(DesignResult {
            kind: DesignKind::SingleMixedTank,
            v1: baseline,
            v2: 0.0,
            d,
            d_any: false,
            s2_opt: spec.s_ref,
            total_volume: baseline,
            baseline_volume: baseline,
            residence_time: baseline / spec.q,
            alpha: Some(alpha(spec, d)?),
            s_g: None,
        });
    }

    let a = alpha(spec, d)?;
    let sg = s_g(spec)?;
    let s2 = a.max(sg);
    let g_ref = spec.growth.g(spec.s_ref, spec.s_in)?;
    let g2 = spec.growth.g(s2, spec.s_in)?;
    let mut v1 =
        spec.q * g_ref * (spec.s_in - spec.s_ref) + d * g_ref * (s2 - spec.s_ref);
    let v2 = d * g2 * (spec.s_ref - s2);
    let kind = if v1 < ZERO_VOLUME_REL * baseline {
        v1 = 0.0;
        DesignKind::SingleLateralTank
    } else {
        DesignKind::TwoTanks
    };
    let total = v1 + v2;
    Ok(DesignResult {
        kind,
        v1,
        v2,
        d,
        d_any: false,
        s2_opt: s2,
        total_volume: total,
        baseline_volume: baseline,
        residence_time: total / spec.q,
        alpha: Some(a),
        s_g: Some(sg),
    })
}

/// Minimal-volume design with the diffusion rate free.
///
/// When s_hat < s_ref the optimum drops tank 1 entirely and holds the
/// lateral tank at s_hat: V2 = Q(s_in - s_ref) g(s_hat) with
/// d = Q(s_in - s_ref)/(s_ref - s_hat). Otherwise the single mixed tank is
/// optimal and d is immaterial (reported as 0 with d_any set).
pub fn design_free_d(spec: &DesignSpec) -> Result<DesignResult> {
    spec.validate()?;
    let baseline = single_tank_volume(spec)?;
    let s_hat = spec.growth.s_hat(spec.s_in)?;

    if s_hat >= spec.s_ref {
        return Ok(DesignResult {
            kind: DesignKind::SingleMixedTank,
            v1: baseline,
            v2: 0.0,
            d: 0.0,
            d_any: true,
            s2_opt: spec.s_ref,
            total_volume: baseline,
            baseline_volume: baseline,
            residence_time: baseline / spec.q,
            alpha: None,
            s_g: None,
        });
    }

    let d_star = spec.q * (spec.s_in - spec.s_ref) / (spec.s_ref - s_hat);
    let v2 = spec.q * (spec.s_in - spec.s_ref) * spec.growth.g(s_hat, spec.s_in)?;
    Ok(DesignResult {
        kind: DesignKind::SingleLateralTank,
        v1: 0.0,
        v2,
        d: d_star,
        d_any: false,
        s2_opt: s_hat,
        total_volume: v2,
        baseline_volume: baseline,
        residence_time: v2 / spec.q,
        alpha: None,
        s_g: Some(s_g(spec)?),
    })
}

/// One point of the optimal-volume-versus-d curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeSample {
    pub d: f64,
    pub volume: Option<f64>,
    pub kind: Option<DesignKind>,
}

/// Optimal total volume at each grid diffusion rate. d = 0 yields the
/// single-tank baseline; per-point failures are kept but flagged with None.
pub fn volume_curve(spec: &DesignSpec, d_grid: &[f64]) -> Result<Vec<VolumeSample>> {
    spec.validate()?;
    let baseline = single_tank_volume(spec)?;
    let mut out = Vec::with_capacity(d_grid.len());
    for &d in d_grid {
        if d == 0.0 {
            out.push(VolumeSample {
                d,
                volume: Some(baseline),
                kind: Some(DesignKind::SingleMixedTank),
            });
            continue;
        }
        let at_d = DesignSpec { d: Some(d), ..spec.clone() };
        match design_fixed_d(&at_d) {
            Ok(r) => out.push(VolumeSample {
                d,
                volume: Some(r.total_volume),
                kind: Some(r.kind),
            }),
            Err(_) => out.push(VolumeSample { d, volume: None, kind: None }),
        }
    }
    Ok(out)
}
