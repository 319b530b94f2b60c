//! Steady states of the two-tank model and their stability: the washout
//! polynomial test, the nested-bisection positive-equilibrium solver built on
//! the monotone maps phi1 and phi2, and spectral classification.

use nalgebra::{Complex, Matrix4};
use serde::{Deserialize, Serialize};

use crate::dynamics::{effective_dilution_v1_zero, outlet_concentrations, ChemostatConfig, State};
use crate::error::{Error, Result};
use crate::numeric::{bisect, MAX_BISECT_ITER};

/// The equilibrium bisections run to f64 exhaustion (zero tolerance, capped
/// by the iteration limit): at small d the root function is steep, with
/// slope of order V2 beta'/d, and any slack in s2 is amplified into the
/// downstream identities that are verified to 1e-10 relative.
const EQ_BISECT_TOL: f64 = 0.0;

/// Relative floor for the bracketing probe below s_in.
const EQ_TOL_REL: f64 = 1e-15;

/// Tolerance below which det of the slow Jacobian block counts as zero.
const HYPERBOLICITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquilibriumKind {
    Washout,
    Positive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    LocallyExpStable,
    Saddle,
    NonHyperbolic,
}

/// A Jacobian eigenvalue, kept as a plain re/im pair for serialization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eigenvalue {
    pub re: f64,
    pub im: f64,
}

impl Eigenvalue {
    fn from_complex(c: Complex<f64>) -> Self {
        Self { re: c.re, im: c.im }
    }

    pub fn abs(&self) -> f64 {
        self.re.hypot(self.im)
    }
}

/// A steady state together with its spectral data.
///
/// Washout has s1 = s2 = s_in and x1 = x2 = 0. A positive equilibrium
/// satisfies 0 < s2 < s1 < s_in with x_i = s_in - s_i. The eigenvalue list
/// has 4 entries for nondegenerate configs and 2 for the reduced models
/// (V1 = 0, or d = 0 / V2 = 0 acting as a single chemostat).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub kind: EquilibriumKind,
    pub s1: f64,
    pub x1: f64,
    pub s2: f64,
    pub x2: f64,
    #[serde(rename = "eigenvalues")]
    pub jacobian_eigenvalues: Vec<Eigenvalue>,
    pub stability: Stability,
}

impl Equilibrium {
    pub fn state(&self) -> State {
        State::new(self.s1, self.x1, self.s2, self.x2)
    }
}

/// P(X) = V1 V2 X^2 - (d V1 + (Q+d) V2) X + d Q, the polynomial whose sign
/// at mu(s_in) decides whether washout is the only steady state.
pub fn washout_polynomial_at(config: &ChemostatConfig, x: f64) -> f64 {
    let ChemostatConfig { v1, v2, q, d, .. } = *config;
    v1 * v2 * x * x - (d * v1 + (q + d) * v2) * x + d * q
}

/// P evaluated at mu(s_in).
pub fn washout_polynomial(config: &ChemostatConfig) -> f64 {
    washout_polynomial_at(config, config.growth.mu_unchecked(config.s_in))
}

/// True iff washout is the only steady state.
///
/// Nondegenerate configs use the two-clause criterion
/// mu(s_in) <= Q/V1 and P(mu(s_in)) >= 0. V1 = 0 compares mu(s_in) with the
/// effective dilution Qd/((Q+d)V2); d = 0 and V2 = 0 reduce to the single
/// chemostat criterion mu(s_in) <= Q/V1.
pub fn washout_is_unique(config: &ChemostatConfig) -> bool {
    let mu_in = config.growth.mu_unchecked(config.s_in);
    if config.v1 == 0.0 {
        return mu_in <= effective_dilution_v1_zero(config);
    }
    if config.d == 0.0 || config.v2 == 0.0 {
        return mu_in <= config.q / config.v1;
    }
    mu_in <= config.q / config.v1 && washout_polynomial(config) >= 0.0
}

fn require_coupled(config: &ChemostatConfig) -> Result<()> {
    if !(config.d > 0.0) {
        return Err(Error::InvalidConfig(
            "phi maps are undefined for d = 0".into(),
        ));
    }
    Ok(())
}

fn check_range(s: f64, s_in: f64) -> Result<()> {
    if s < 0.0 || s > s_in {
        return Err(Error::OutOfDomain { value: s, lo: 0.0, hi: s_in });
    }
    Ok(())
}

/// phi1(s1) = s1 - (Q - V1 mu(s1))/d * (s_in - s1). A positive equilibrium
/// satisfies s2 = phi1(s1).
pub fn phi1(config: &ChemostatConfig, s1: f64) -> Result<f64> {
    require_coupled(config)?;
    check_range(s1, config.s_in)?;
    let mu = config.growth.mu_unchecked(s1);
    Ok(s1 - (config.q - config.v1 * mu) / config.d * (config.s_in - s1))
}

/// phi2(s2) = s2 + V2 mu(s2)(s_in - s2)/d. A positive equilibrium satisfies
/// s1 = phi2(s2).
pub fn phi2(config: &ChemostatConfig, s2: f64) -> Result<f64> {
    require_coupled(config)?;
    check_range(s2, config.s_in)?;
    Ok(s2 + config.v2 * config.growth.beta_unchecked(s2, config.s_in) / config.d)
}

/// phi1'(s1) = 1 + (V1/d) mu'(s1)(s_in - s1) + (Q - V1 mu(s1))/d.
pub fn phi1_prime(config: &ChemostatConfig, s1: f64) -> Result<f64> {
    require_coupled(config)?;
    check_range(s1, config.s_in)?;
    let mu = config.growth.mu_unchecked(s1);
    let mu_p = config.growth.mu_prime(s1)?;
    Ok(1.0
        + config.v1 / config.d * mu_p * (config.s_in - s1)
        + (config.q - config.v1 * mu) / config.d)
}

/// phi2'(s2) = 1 + (V2/d) beta'(s2).
pub fn phi2_prime(config: &ChemostatConfig, s2: f64) -> Result<f64> {
    require_coupled(config)?;
    Ok(1.0 + config.v2 / config.d * config.growth.beta_prime(s2, config.s_in)?)
}

/// The largest s1 in [0, s_in] with mu(s1) <= Q/V1; equals s_in when the
/// removal rate Q/V1 dominates the growth rate everywhere below s_in.
pub fn lambda1(config: &ChemostatConfig) -> f64 {
    let rate = config.q / config.v1;
    if rate >= config.growth.mu_sup() {
        return config.s_in;
    }
    match config.growth.mu_inverse(rate) {
        Ok(s) => s.min(config.s_in),
        Err(_) => config.s_in,
    }
}

/// Inverse of the increasing phi1 on [0, lambda1], by bisection.
fn phi1_inverse(config: &ChemostatConfig, target: f64, lam: f64, tol: f64) -> Result<f64> {
    // phi1(lam) = lam up to rounding noise of order mu-inverse round-trip
    // error over d; a target at or past it clips to the endpoint
    if phi1(config, lam)? <= target {
        return Ok(lam);
    }
    bisect(
        |s1| phi1(config, s1).expect("s1 stays in [0, s_in]") - target,
        0.0,
        lam,
        tol,
        MAX_BISECT_ITER,
    )
}

/// gamma(s2) = phi2(s2) - phi1^{-1}(s2); its root in (0, lambda1) is s2*.
fn gamma(config: &ChemostatConfig, s2: f64, lam: f64, tol: f64) -> Result<f64> {
    Ok(phi2(config, s2)? - phi1_inverse(config, s2, lam, tol)?)
}

/// The unique positive equilibrium, or None when washout is the only steady
/// state. Degenerate configs (V1 = 0, d = 0, V2 = 0) route to the reduced /
/// single-chemostat solvers.
pub fn positive_equilibrium(config: &ChemostatConfig) -> Result<Option<Equilibrium>> {
    config.validate()?;
    if washout_is_unique(config) {
        return Ok(None);
    }
    if config.v1 == 0.0 {
        return positive_equilibrium_v1_zero(config).map(Some);
    }
    if config.d == 0.0 || config.v2 == 0.0 {
        return positive_equilibrium_single(config).map(Some);
    }

    let s_in = config.s_in;
    let tol = EQ_BISECT_TOL;
    let lam = lambda1(config);

    // gamma(0) < 0 always. The upper end of the bracket depends on whether
    // lambda1 clips at s_in: if not, gamma(lambda1) > 0; if it does,
    // gamma(s_in) = 0 exactly, so probe s_in - delta (gamma' < 0 at s_in
    // whenever the equilibrium exists).
    let hi = if lam < s_in {
        lam
    } else {
        let mut delta = 0.1 * s_in;
        loop {
            if gamma(config, s_in - delta, lam, tol)? > 0.0 {
                break s_in - delta;
            }
            delta *= 0.5;
            if delta < EQ_TOL_REL * s_in {
                return Err(Error::Inconsistency(
                    "no positive gamma bracket below s_in despite failed washout test".into(),
                ));
            }
        }
    };

    let s2 = bisect(
        |s2| gamma(config, s2, lam, tol).expect("s2 stays in (0, lambda1)"),
        0.0,
        hi,
        tol,
        MAX_BISECT_ITER,
    )
    .map_err(|_| {
        Error::Inconsistency("gamma bracket lost despite failed washout test".into())
    })?;
    let s1 = phi2(config, s2)?;
    if !(s2 > 0.0 && s2 < s1 && s1 < s_in) {
        return Err(Error::Inconsistency(format!(
            "equilibrium ordering violated: s1 = {s1}, s2 = {s2}"
        )));
    }
    let state = State::new(s1, s_in - s1, s2, s_in - s2);
    let (stability, eigs) = classify_stability(config, EquilibriumKind::Positive, &state)?;
    Ok(Some(Equilibrium {
        kind: EquilibriumKind::Positive,
        s1,
        x1: state.x1,
        s2,
        x2: state.x2,
        jacobian_eigenvalues: eigs,
        stability,
    }))
}

fn positive_equilibrium_v1_zero(config: &ChemostatConfig) -> Result<Equilibrium> {
    let eff = effective_dilution_v1_zero(config);
    let s2 = config.growth.mu_inverse(eff)?;
    let x2 = config.s_in - s2;
    // tank 1 degenerates to the pipe junction; report outlet values there
    let (s1, x1) = outlet_concentrations(config, s2, x2);
    let mu_p = config.growth.mu_prime(s2)?;
    let eigs = vec![
        Eigenvalue { re: -eff, im: 0.0 },
        Eigenvalue { re: -mu_p * x2, im: 0.0 },
    ];
    Ok(Equilibrium {
        kind: EquilibriumKind::Positive,
        s1,
        x1,
        s2,
        x2,
        jacobian_eigenvalues: eigs,
        stability: Stability::LocallyExpStable,
    })
}

fn positive_equilibrium_single(config: &ChemostatConfig) -> Result<Equilibrium> {
    let rate = config.q / config.v1;
    let s1 = config.growth.mu_inverse(rate)?;
    let x1 = config.s_in - s1;
    // d = 0 leaves tank 2 untouched at the inlet state; V2 = 0 slaves it to
    // tank 1 instantaneously.
    let (s2, x2) = if config.v2 == 0.0 && config.d > 0.0 {
        (s1, x1)
    } else {
        (config.s_in, 0.0)
    };
    let mu_p = config.growth.mu_prime(s1)?;
    let eigs = vec![
        Eigenvalue { re: -rate, im: 0.0 },
        Eigenvalue { re: -mu_p * x1, im: 0.0 },
    ];
    Ok(Equilibrium {
        kind: EquilibriumKind::Positive,
        s1,
        x1,
        s2,
        x2,
        jacobian_eigenvalues: eigs,
        stability: Stability::LocallyExpStable,
    })
}

/// The washout equilibrium with its classification.
pub fn washout_equilibrium(config: &ChemostatConfig) -> Result<Equilibrium> {
    config.validate()?;
    let state = State::washout(config.s_in);
    let (stability, eigs) = classify_stability(config, EquilibriumKind::Washout, &state)?;
    Ok(Equilibrium {
        kind: EquilibriumKind::Washout,
        s1: config.s_in,
        x1: 0.0,
        s2: config.s_in,
        x2: 0.0,
        jacobian_eigenvalues: eigs,
        stability,
    })
}

/// Both equilibria of the config: washout first, then the positive one when
/// it exists.
pub fn equilibria(config: &ChemostatConfig) -> Result<Vec<Equilibrium>> {
    let mut out = vec![washout_equilibrium(config)?];
    if let Some(pos) = positive_equilibrium(config)? {
        out.push(pos);
    }
    Ok(out)
}

/// Jacobian of the full model in coordinates (z1, z2, s1, s2) with
/// z_i = s_in - s_i - x_i, evaluated at an equilibrium (z = 0). The linear
/// z block sits upper-left; the slow block lower-right.
pub fn jacobian_zs(config: &ChemostatConfig, s1: f64, s2: f64) -> Result<Matrix4<f64>> {
    if !(config.v1 > 0.0) || !(config.v2 > 0.0) {
        return Err(Error::InvalidConfig("jacobian needs V1, V2 > 0".into()));
    }
    let ChemostatConfig { v1, v2, q, s_in, d, ref growth } = *config;
    let mu1 = growth.mu(s1)?;
    let mu2 = growth.mu(s2)?;
    let a33 = -growth.mu_prime(s1)? * (s_in - s1) + mu1 - q / v1 - d / v1;
    let a44 = -growth.mu_prime(s2)? * (s_in - s2) + mu2 - d / v2;
    Ok(Matrix4::new(
        -(q + d) / v1, d / v1, 0.0, 0.0,
        d / v2, -d / v2, 0.0, 0.0,
        mu1, 0.0, a33, d / v1,
        0.0, mu2, d / v2, a44,
    ))
}

/// Trace and determinant of the slow 2x2 block, in the phi-derivative form
/// tr = -d(phi1'/V1 + phi2'/V2), det = d^2/(V1 V2)(phi1' phi2' - 1).
pub fn slow_block_tr_det(config: &ChemostatConfig, s1: f64, s2: f64) -> Result<(f64, f64)> {
    let p1 = phi1_prime(config, s1)?;
    let p2 = phi2_prime(config, s2)?;
    let d = config.d;
    Ok((
        -d * (p1 / config.v1 + p2 / config.v2),
        d * d / (config.v1 * config.v2) * (p1 * p2 - 1.0),
    ))
}

/// Stability of an equilibrium plus the Jacobian spectrum.
///
/// Positive equilibria are locally exponentially stable whenever they exist.
/// Washout is a saddle when the growth at the inlet beats the tank-1 removal
/// rate or P(mu(s_in)) < 0, nonhyperbolic when the slow block is singular
/// (inside 1e-12), and stable otherwise.
pub fn classify_stability(
    config: &ChemostatConfig,
    kind: EquilibriumKind,
    state: &State,
) -> Result<(Stability, Vec<Eigenvalue>)> {
    let degenerate = config.v1 == 0.0 || config.v2 == 0.0 || config.d == 0.0;
    let eigs = if degenerate {
        degenerate_spectrum(config, kind, state)?
    } else {
        let jac = jacobian_zs(config, state.s1, state.s2)?;
        jac.complex_eigenvalues()
            .iter()
            .map(|c| Eigenvalue::from_complex(*c))
            .collect()
    };

    let stability = match kind {
        EquilibriumKind::Positive => Stability::LocallyExpStable,
        EquilibriumKind::Washout => {
            let mu_in = config.growth.mu_unchecked(config.s_in);
            if config.v1 == 0.0 {
                let eff = effective_dilution_v1_zero(config);
                if (mu_in - eff).abs() <= HYPERBOLICITY_TOL {
                    Stability::NonHyperbolic
                } else if mu_in > eff {
                    Stability::Saddle
                } else {
                    Stability::LocallyExpStable
                }
            } else if config.d == 0.0 || config.v2 == 0.0 {
                let rate = config.q / config.v1;
                if (mu_in - rate).abs() <= HYPERBOLICITY_TOL {
                    Stability::NonHyperbolic
                } else if mu_in > rate {
                    Stability::Saddle
                } else {
                    Stability::LocallyExpStable
                }
            } else if mu_in > config.q / config.v1 {
                Stability::Saddle
            } else {
                // det of the slow block at washout is P(mu(s_in))/(V1 V2)
                let det = washout_polynomial(config) / (config.v1 * config.v2);
                if det.abs() <= HYPERBOLICITY_TOL {
                    Stability::NonHyperbolic
                } else if det < 0.0 {
                    Stability::Saddle
                } else {
                    Stability::LocallyExpStable
                }
            }
        }
    };
    Ok((stability, eigs))
}

fn degenerate_spectrum(
    config: &ChemostatConfig,
    kind: EquilibriumKind,
    state: &State,
) -> Result<Vec<Eigenvalue>> {
    let mu_in = config.growth.mu_unchecked(config.s_in);
    let re = |v: f64| Eigenvalue { re: v, im: 0.0 };
    if config.v1 == 0.0 {
        let eff = effective_dilution_v1_zero(config);
        return Ok(match kind {
            EquilibriumKind::Washout => vec![re(-eff), re(mu_in - eff)],
            EquilibriumKind::Positive => vec![
                re(-eff),
                re(-config.growth.mu_prime(state.s2)? * state.x2),
            ],
        });
    }
    let rate = config.q / config.v1;
    Ok(match kind {
        EquilibriumKind::Washout => vec![re(-rate), re(mu_in - rate)],
        EquilibriumKind::Positive => vec![
            re(-rate),
            re(-config.growth.mu_prime(state.s1)? * state.x1),
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::growth::GrowthModel;

    fn monod() -> GrowthModel {
        GrowthModel::monod(1.0, 0.5).unwrap()
    }

    fn config(v1: f64, v2: f64, d: f64) -> ChemostatConfig {
        ChemostatConfig {
            v1,
            v2,
            q: 1.0,
            s_in: 10.0,
            d,
            growth: monod(),
        }
    }

    #[test]
    fn washout_polynomial_examples() {
        let c = config(0.6, 0.6, 1.0);
        // constant term
        assert_eq!(washout_polynomial_at(&c, 0.0), c.d * c.q);
        // d = 0 collapses to V2 X (V1 X - Q)
        let c0 = config(0.6, 0.6, 0.0);
        for x in [0.2, 0.9, 1.7] {
            let expect = c0.v2 * x * (c0.v1 * x - c0.q);
            assert!((washout_polynomial_at(&c0, x) - expect).abs() < 1e-14);
        }
        // rewrite identity P(mu) = V2 mu (V1 mu - Q) + d (Q - V mu)
        for (v1, v2, d, q) in [(0.6, 0.6, 1.0, 1.0), (0.3, 1.4, 0.2, 2.5), (2.0, 0.1, 7.0, 0.4)] {
            let c = ChemostatConfig { v1, v2, q, ..config(1.0, 1.0, d) };
            let mu = c.growth.mu_unchecked(c.s_in);
            let rewrite = v2 * mu * (v1 * mu - q) + d * (q - (v1 + v2) * mu);
            assert!((washout_polynomial(&c) - rewrite).abs() < 1e-12);
        }
    }

    #[test]
    fn washout_uniqueness_examples() {
        // growth at the inlet beats removal: positive equilibrium exists
        assert!(!washout_is_unique(&config(2.0, 0.6, 1.0)));
        // d = 0 single-tank criterion
        assert!(washout_is_unique(&config(0.6, 0.6, 0.0)));
        assert!(!washout_is_unique(&config(2.0, 0.6, 0.0)));
        // reference config: both clauses evaluated, P < 0
        let c = config(0.6, 0.6, 1.0);
        assert!(!washout_is_unique(&c));
        assert!(washout_polynomial(&c) < 0.0);
        assert!(positive_equilibrium(&c).unwrap().is_some());
    }

    #[test]
    fn phi_examples() {
        let c = config(0.6, 0.6, 1.0);
        assert!((phi1(&c, 0.0).unwrap() + c.q / c.d * c.s_in).abs() < 1e-14);
        assert!((phi2(&c, c.s_in).unwrap() - c.s_in).abs() < 1e-14);
        // fixed point of phi1 at lambda1 when growth beats removal
        let c2 = config(2.0, 0.6, 1.0);
        let lam = lambda1(&c2);
        assert!(lam < c2.s_in);
        assert!((phi1(&c2, lam).unwrap() - lam).abs() < 1e-9);
        // d = 0 rejected
        assert!(phi1(&config(0.6, 0.6, 0.0), 1.0).is_err());
    }

    #[test]
    fn lambda1_examples() {
        // removal rate above sup mu: the whole interval qualifies
        assert_eq!(lambda1(&config(0.6, 0.6, 1.0)), 10.0);
        // closed-form inverse
        let c = config(2.0, 0.6, 1.0);
        assert!((lambda1(&c) - 0.5).abs() < 1e-14);
        assert!(c.growth.mu_unchecked(lambda1(&c)) <= c.q / c.v1 + 1e-14);
    }

    #[test]
    fn positive_equilibrium_reference_config() {
        let c = config(0.6, 0.6, 1.0);
        let eq = positive_equilibrium(&c).unwrap().unwrap();
        assert!(0.0 < eq.s2 && eq.s2 < eq.s1 && eq.s1 < c.s_in);
        assert!((eq.x1 - (c.s_in - eq.s1)).abs() < 1e-12);
        assert!((eq.x2 - (c.s_in - eq.s2)).abs() < 1e-12);
        // steady-state relations, scaled by the tank volumes
        let r1 = (c.q / c.v1 - c.growth.mu_unchecked(eq.s1)) * (c.s_in - eq.s1)
            + c.d / c.v1 * (eq.s2 - eq.s1);
        let r2 = -c.growth.beta_unchecked(eq.s2, c.s_in) + c.d / c.v2 * (eq.s1 - eq.s2);
        assert!((c.v1 * r1).abs() < 1e-10 * c.q * c.s_in);
        assert!((c.v2 * r2).abs() < 1e-10 * c.q * c.s_in);
        assert_eq!(eq.stability, Stability::LocallyExpStable);
        assert_eq!(eq.jacobian_eigenvalues.len(), 4);
        for ev in &eq.jacobian_eigenvalues {
            assert!(ev.re < 0.0);
        }
    }

    #[test]
    fn positive_equilibrium_case_with_clipped_lambda1() {
        // growth at the inlet beats removal: root in (0, lambda1)
        let c = config(2.0, 0.6, 1.0);
        let eq = positive_equilibrium(&c).unwrap().unwrap();
        assert!(eq.s2 < lambda1(&c));
        assert!(eq.s2 > 0.0);
    }

    #[test]
    fn small_d_limit_approaches_tank1_break_even() {
        // growth beats removal in tank 1: s1* tends to mu^{-1}(Q/V1) as d -> 0
        let c = config(2.0, 0.6, 1e-8);
        let eq = positive_equilibrium(&c).unwrap().unwrap();
        let target = c.growth.mu_inverse(c.q / c.v1).unwrap();
        assert!((eq.s1 - target).abs() < 1e-4);
    }

    #[test]
    fn none_when_washout_unique() {
        let c = config(0.2, 0.2, 1.0);
        assert!(washout_is_unique(&c));
        assert!(positive_equilibrium(&c).unwrap().is_none());
    }

    #[test]
    fn uniqueness_grid_scan_matches_solver() {
        let c = config(0.6, 0.6, 1.0);
        let lam = lambda1(&c);
        let tol = EQ_TOL_REL * c.s_in;
        let n = 100_000;
        let mut sign_changes = 0;
        let mut prev: Option<f64> = None;
        // stop just short of lam = s_in where gamma vanishes by construction
        for i in 1..n {
            let s2 = lam * (i as f64) / (n as f64);
            let g = gamma(&c, s2, lam, tol).unwrap();
            if let Some(p) = prev {
                if p.signum() != g.signum() {
                    sign_changes += 1;
                }
            }
            prev = Some(g);
        }
        assert_eq!(sign_changes, 1);
    }

    #[test]
    fn washout_classification() {
        // stable: washout unique with P > 0
        let c = config(0.2, 0.2, 1.0);
        assert!(washout_polynomial(&c) > 0.0);
        let w = washout_equilibrium(&c).unwrap();
        assert_eq!(w.stability, Stability::LocallyExpStable);
        assert_eq!((w.s1, w.x1, w.s2, w.x2), (c.s_in, 0.0, c.s_in, 0.0));
        // saddle via P < 0
        let c = config(0.6, 0.6, 1.0);
        let w = washout_equilibrium(&c).unwrap();
        assert_eq!(w.stability, Stability::Saddle);
        assert!(w.jacobian_eigenvalues.iter().any(|e| e.re > 0.0));
        // saddle via growth beating tank-1 removal
        let w = washout_equilibrium(&config(2.0, 0.6, 1.0)).unwrap();
        assert_eq!(w.stability, Stability::Saddle);
    }

    #[test]
    fn z_block_is_hurwitz() {
        for (v1, v2, d) in [(0.6, 0.6, 1.0), (0.1, 2.0, 0.3), (1.5, 0.2, 4.0)] {
            let c = config(v1, v2, d);
            let tr = -(c.q + c.d) / c.v1 - c.d / c.v2;
            let det = c.q * c.d / (c.v1 * c.v2);
            assert!(tr < 0.0 && det > 0.0);
            // the numerical 4x4 spectrum contains the z-block eigenvalues
            let jac = jacobian_zs(&c, c.s_in, c.s_in).unwrap();
            let evs = jac.complex_eigenvalues();
            let disc = (tr * tr - 4.0 * det).sqrt();
            for target in [(tr + disc) / 2.0, (tr - disc) / 2.0] {
                assert!(evs.iter().any(|e| (e.re - target).abs() < 1e-8 * target.abs()));
            }
        }
    }

    #[test]
    fn slow_block_consistency_at_positive_equilibrium() {
        let c = config(0.6, 0.6, 1.0);
        let eq = positive_equilibrium(&c).unwrap().unwrap();
        let p1 = phi1_prime(&c, eq.s1).unwrap();
        let p2 = phi2_prime(&c, eq.s2).unwrap();
        assert!(p1 * p2 > 1.0);
        let (tr, det) = slow_block_tr_det(&c, eq.s1, eq.s2).unwrap();
        assert!(tr < 0.0 && det > 0.0);
        // spectrum of the full Jacobian splits into z-block and slow-block
        // pairs; check the slow pair against tr/det
        let jac = jacobian_zs(&c, eq.s1, eq.s2).unwrap();
        let evs = jac.complex_eigenvalues();
        let disc = tr * tr - 4.0 * det;
        assert!(disc >= 0.0);
        for target in [(tr + disc.sqrt()) / 2.0, (tr - disc.sqrt()) / 2.0] {
            assert!(evs.iter().any(|e| (e.re - target).abs() < 1e-8));
        }
    }

    #[test]
    fn saddle_washout_has_negative_slow_determinant() {
        let c = config(0.6, 0.6, 1.0);
        assert!(washout_polynomial(&c) < 0.0);
        let (_, det) = slow_block_tr_det(&c, c.s_in, c.s_in).unwrap();
        assert!(det < 0.0);
        // det of the slow block at washout equals P/(V1 V2)
        assert!((det - washout_polynomial(&c) / (c.v1 * c.v2)).abs() < 1e-12);
    }

    #[test]
    fn v1_zero_reduced_model() {
        let mut c = config(0.0, 0.6, 1.0);
        c.v1 = 0.0;
        let eff = effective_dilution_v1_zero(&c);
        assert!(!washout_is_unique(&c));
        let eq = positive_equilibrium(&c).unwrap().unwrap();
        assert!((c.growth.mu_unchecked(eq.s2) - eff).abs() < 1e-12);
        assert!((eq.x2 - (c.s_in - eq.s2)).abs() < 1e-12);
        // tank-1 slot reports the outlet mix
        let (s_out, x_out) = outlet_concentrations(&c, eq.s2, eq.x2);
        assert_eq!((eq.s1, eq.x1), (s_out, x_out));
        assert_eq!(eq.jacobian_eigenvalues.len(), 2);
        // opening the diffusion exposes the tank to the full dilution:
        // washout becomes unique
        let c2 = ChemostatConfig { d: 10.0, ..c.clone() };
        assert!(washout_is_unique(&c2));
        assert!(positive_equilibrium(&c2).unwrap().is_none());
    }

    #[test]
    fn d_zero_single_chemostat() {
        let c = config(2.0, 0.6, 0.0);
        let eq = positive_equilibrium(&c).unwrap().unwrap();
        assert!((eq.s1 - c.growth.mu_inverse(c.q / c.v1).unwrap()).abs() < 1e-12);
        // tank 2 is untouched at the inlet state
        assert_eq!((eq.s2, eq.x2), (c.s_in, 0.0));
        let v2_zero = ChemostatConfig { v2: 0.0, d: 1.0, ..c };
        let eq = positive_equilibrium(&v2_zero).unwrap().unwrap();
        // zero-volume tank 2 mirrors tank 1
        assert_eq!((eq.s2, eq.x2), (eq.s1, eq.x1));
    }

    #[test]
    fn equilibrium_json_shape() {
        let c = config(0.6, 0.6, 1.0);
        let eq = positive_equilibrium(&c).unwrap().unwrap();
        let json = serde_json::to_value(&eq).unwrap();
        assert_eq!(json["kind"], "positive");
        assert_eq!(json["stability"], "locally_exp_stable");
        assert!(json["eigenvalues"][0]["re"].is_f64());
        assert!(json["eigenvalues"][0]["im"].is_f64());
        let back: Equilibrium = serde_json::from_value(json).unwrap();
        assert_eq!(back, eq);
    }
}
