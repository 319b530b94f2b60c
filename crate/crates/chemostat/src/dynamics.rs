//! The 4-D chemostat dynamics with a lateral diffusive compartment, its
//! (z, s) change of coordinates, the V1 = 0 reduced model, and an adaptive
//! Runge-Kutta trajectory simulator.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{Error, Result};
use crate::growth::GrowthModel;

/// Full parameterization of the two-tank model: tank 1 (volume `v1`) is
/// crossed by the flow `q` and exchanges with tank 2 (volume `v2`) by pure
/// diffusion at rate `d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChemostatConfig {
    #[serde(rename = "V1")]
    pub v1: f64,
    #[serde(rename = "V2")]
    pub v2: f64,
    #[serde(rename = "Q")]
    pub q: f64,
    pub s_in: f64,
    pub d: f64,
    pub growth: GrowthModel,
}

impl ChemostatConfig {
    pub fn validate(&self) -> Result<()> {
        self.growth.validate()?;
        if !(self.q > 0.0) {
            return Err(Error::InvalidConfig(format!("Q must be positive, got {}", self.q)));
        }
        if !(self.s_in > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "s_in must be positive, got {}",
                self.s_in
            )));
        }
        if self.v1 < 0.0 || self.v2 < 0.0 || self.d < 0.0 {
            return Err(Error::InvalidConfig(
                "V1, V2 and d must be nonnegative".into(),
            ));
        }
        if self.v1 == 0.0 && self.d == 0.0 {
            return Err(Error::InvalidConfig(
                "V1 = 0 requires d > 0 (the system is undefined otherwise)".into(),
            ));
        }
        Ok(())
    }

    pub fn total_volume(&self) -> f64 {
        self.v1 + self.v2
    }

    pub fn with_d(&self, d: f64) -> Self {
        Self { d, ..self.clone() }
    }
}

/// One snapshot of the four concentrations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub s1: f64,
    pub x1: f64,
    pub s2: f64,
    pub x2: f64,
}

impl State {
    pub fn new(s1: f64, x1: f64, s2: f64, x2: f64) -> Self {
        Self { s1, x1, s2, x2 }
    }

    pub fn washout(s_in: f64) -> Self {
        Self::new(s_in, 0.0, s_in, 0.0)
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.s1, self.x1, self.s2, self.x2]
    }

    pub fn from_array(y: [f64; 4]) -> Self {
        Self::new(y[0], y[1], y[2], y[3])
    }

    pub fn min_component(&self) -> f64 {
        self.s1.min(self.x1).min(self.s2).min(self.x2)
    }

    pub fn max_component(&self) -> f64 {
        self.s1.max(self.x1).max(self.s2).max(self.x2)
    }

    pub fn max_abs_diff(&self, other: &State) -> f64 {
        (self.s1 - other.s1)
            .abs()
            .max((self.x1 - other.x1).abs())
            .max((self.s2 - other.s2).abs())
            .max((self.x2 - other.x2).abs())
    }
}

/// Time derivatives of the full 4-D system (both volumes positive; yield
/// coefficient 1).
pub fn rhs(config: &ChemostatConfig, state: &State) -> Result<State> {
    if !(config.v1 > 0.0) || !(config.v2 > 0.0) {
        return Err(Error::InvalidConfig(
            "rhs needs V1 > 0 and V2 > 0; use the reduced models for degenerate volumes".into(),
        ));
    }
    Ok(rhs_unchecked(config, state))
}

fn rhs_unchecked(config: &ChemostatConfig, state: &State) -> State {
    let ChemostatConfig { v1, v2, q, s_in, d, ref growth } = *config;
    let State { s1, x1, s2, x2 } = *state;
    let mu1 = growth.mu_unchecked(s1.max(0.0));
    let mu2 = growth.mu_unchecked(s2.max(0.0));
    State {
        s1: -mu1 * x1 + q / v1 * (s_in - s1) + d / v1 * (s2 - s1),
        x1: mu1 * x1 - q / v1 * x1 + d / v1 * (x2 - x1),
        s2: -mu2 * x2 + d / v2 * (s1 - s2),
        x2: mu2 * x2 + d / v2 * (x1 - x2),
    }
}

/// The 2-D limit dynamics for V1 = 0: a single tank fed through the pipe
/// junction with effective dilution Qd/((Q+d)V2).
pub fn rhs_reduced_v1_zero(config: &ChemostatConfig, s2: f64, x2: f64) -> Result<(f64, f64)> {
    if !(config.v2 > 0.0) {
        return Err(Error::InvalidConfig("reduced model needs V2 > 0".into()));
    }
    if !(config.d > 0.0) {
        return Err(Error::InvalidConfig(
            "reduced model needs d > 0 (tank disconnected otherwise)".into(),
        ));
    }
    let eff = effective_dilution_v1_zero(config);
    let mu2 = config.growth.mu(s2.max(0.0))?;
    Ok((-mu2 * x2 + eff * (config.s_in - s2), mu2 * x2 - eff * x2))
}

/// Effective dilution rate Qd/((Q+d)V2) of the V1 = 0 configuration.
pub fn effective_dilution_v1_zero(config: &ChemostatConfig) -> f64 {
    config.q * config.d / ((config.q + config.d) * config.v2)
}

/// Mass balance at the pipe junction of the V1 = 0 configuration.
pub fn outlet_concentrations(config: &ChemostatConfig, s2: f64, x2: f64) -> (f64, f64) {
    let ChemostatConfig { q, s_in, d, .. } = *config;
    ((q * s_in + d * s2) / (q + d), d * x2 / (q + d))
}

/// Coordinates (z1, s1, z2, s2) with z_i = s_in - s_i - x_i.
pub fn z_transform(state: &State, s_in: f64) -> [f64; 4] {
    [
        s_in - state.s1 - state.x1,
        state.s1,
        s_in - state.s2 - state.x2,
        state.s2,
    ]
}

pub fn z_inverse(zs: [f64; 4], s_in: f64) -> State {
    let [z1, s1, z2, s2] = zs;
    State::new(s1, s_in - s1 - z1, s2, s_in - s2 - z2)
}

/// Integration controls for [`simulate`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step; defaults to 1e-3 * V/Q.
    pub h0: Option<f64>,
    pub max_steps: usize,
    /// Stop once the residual satisfies the scale-free steady-state test
    /// ||rhs||_inf < 1e-9 * s_in.
    pub stop_at_steady: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-10,
            h0: None,
            max_steps: 10_000_000,
            stop_at_steady: true,
        }
    }
}

/// A simulated solution: strictly increasing time stamps, one state per
/// stamp, and the configuration it was produced with.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    pub config: ChemostatConfig,
    /// Set when the steady-state test fired before the horizon.
    pub reached_steady_state: bool,
}

impl Trajectory {
    pub fn last_state(&self) -> &State {
        self.states.last().expect("trajectory is never empty")
    }

    /// CSV export, full double precision, header `t,s1,x1,s2,x2`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "t,s1,x1,s2,x2\r\n")?;
        for (t, s) in self.times.iter().zip(&self.states) {
            write!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\r\n",
                t, s.s1, s.x1, s.s2, s.x2
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
#[error("integration failed at t = {t}: {reason}")]
pub struct SimulationError {
    pub t: f64,
    pub reason: String,
    /// The trajectory accumulated before the failure.
    pub partial: Trajectory,
}

// Dormand-Prince 5(4) coefficients.
const DP_C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// 5th-order solution weights (same as the last A row) and the embedded
// 4th-order weights.
const DP_B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrate the full 4-D system from `initial` up to `horizon` with an
/// embedded Dormand-Prince 4(5) pair.
///
/// A component undershooting below -10*atol is treated as an integration
/// failure; smaller negative excursions are clamped to zero.
pub fn simulate(
    config: &ChemostatConfig,
    initial: State,
    horizon: f64,
    options: &SimOptions,
) -> std::result::Result<Trajectory, SimulationError> {
    let fail = |t: f64, reason: String, times: Vec<f64>, states: Vec<State>| SimulationError {
        t,
        reason,
        partial: Trajectory {
            times,
            states,
            config: config.clone(),
            reached_steady_state: false,
        },
    };

    if config.validate().is_err() || !(config.v1 > 0.0) || !(config.v2 > 0.0) {
        return Err(fail(0.0, "simulate needs a valid config with V1, V2 > 0".into(), vec![], vec![]));
    }
    if initial.min_component() < 0.0 {
        return Err(fail(0.0, "initial state must be nonnegative".into(), vec![], vec![]));
    }
    if !(horizon > 0.0) {
        return Err(fail(0.0, "horizon must be positive".into(), vec![], vec![]));
    }

    let steady_tol = 1e-9 * config.s_in;
    let undershoot = -10.0 * options.atol;

    let mut t = 0.0;
    let mut y = initial.to_array();
    let mut h = options
        .h0
        .unwrap_or(1e-3 * config.total_volume() / config.q)
        .min(horizon);

    let mut times = vec![0.0];
    let mut states = vec![initial];
    let mut reached_steady = false;

    let deriv = |y: &[f64; 4]| rhs_unchecked(config, &State::from_array(*y)).to_array();

    let mut steps = 0usize;
    while t < horizon {
        if steps >= options.max_steps {
            return Err(fail(t, format!("step budget {} exhausted", options.max_steps), times, states));
        }
        steps += 1;
        if h < 1e-14 * t.abs().max(1.0) {
            return Err(fail(t, "step size underflow".into(), times, states));
        }
        if t + h > horizon {
            h = horizon - t;
        }

        let mut k = [[0.0f64; 4]; 7];
        k[0] = deriv(&y);
        for i in 1..7 {
            let mut yi = y;
            for (j, kj) in k.iter().enumerate().take(i) {
                let a = DP_A[i][j];
                if a != 0.0 {
                    for n in 0..4 {
                        yi[n] += h * a * kj[n];
                    }
                }
            }
            let _ = DP_C; // stage times unused: the system is autonomous
            k[i] = deriv(&yi);
        }

        let mut y5 = y;
        let mut y4 = y;
        for (i, ki) in k.iter().enumerate() {
            for n in 0..4 {
                y5[n] += h * DP_B5[i] * ki[n];
                y4[n] += h * DP_B4[i] * ki[n];
            }
        }

        // scaled error norm; accept when <= 1
        let mut err: f64 = 0.0;
        for n in 0..4 {
            let scale = options.atol + options.rtol * y[n].abs().max(y5[n].abs());
            err = err.max((y5[n] - y4[n]).abs() / scale);
        }

        if err <= 1.0 {
            t += h;
            let mut next = y5;
            for v in next.iter_mut() {
                if *v < 0.0 {
                    if *v < undershoot {
                        return Err(fail(
                            t,
                            format!("component undershot to {v} (below -10*atol)"),
                            times,
                            states,
                        ));
                    }
                    *v = 0.0;
                }
            }
            y = next;
            let state = State::from_array(y);
            times.push(t);
            states.push(state);

            if options.stop_at_steady {
                let r = rhs_unchecked(config, &state);
                if r.to_array().iter().all(|v| v.abs() < steady_tol) {
                    reached_steady = true;
                    break;
                }
            }
        }

        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
    }

    Ok(Trajectory {
        times,
        states,
        config: config.clone(),
        reached_steady_state: reached_steady,
    })
}
