//! Depth-control MDPs on top of the vehicle simulator.
//!
//! Three observation layouts share one environment:
//!
//! * constant depth: `[dz, cos th, sin th, w, q]`
//! * curved depth: `[z_d, cos th_d, sin th_d, cos th_c, sin th_c, th_d_dot, w, q]`
//! * window: `[dz_{t-N+1}, .., dz_t, cos th, sin th, w, q]`
//!
//! The path angle `th_c` is the pitch a vehicle must hold to move along the
//! reference. With depth positive down and pitch positive nose-up that is
//! `th_c = -atan(g'(x))`.

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{ControlInput, Vehicle, VehicleState};
use crate::error::{Error, Result};
use crate::noise::{OuParams, OuProcess};
use crate::profile::ReferenceProfile;

/// Observation layout tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    ConstantDepth,
    CurvedDepth,
    Window(usize),
}

impl Layout {
    pub fn len(&self) -> usize {
        match self {
            Layout::ConstantDepth => 5,
            Layout::CurvedDepth => 8,
            Layout::Window(n) => n + 4,
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl std::fmt::Display for Layout {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Layout::ConstantDepth => write!(f, "constant"),
            Layout::CurvedDepth => write!(f, "curved"),
            Layout::Window(n) => write!(f, "window{n}"),
        }
    }
}

/// MDP state vector as seen by the networks.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub layout: Layout,
    pub values: Vec<f64>,
}

impl Observation {
    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

pub fn observe_constant(state: &VehicleState, z_ref: f64) -> Observation {
    let (s, c) = state.theta.sin_cos();
    Observation {
        layout: Layout::ConstantDepth,
        values: vec![state.z - z_ref, c, s, state.w, state.q],
    }
}

/// Relative quantities for curved tracking at the vehicle's position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvedTerms {
    pub z_delta: f64,
    pub theta_c: f64,
    pub theta_c_dot: f64,
    pub theta_delta: f64,
    pub theta_delta_dot: f64,
}

pub fn curved_terms(state: &VehicleState, profile: &ReferenceProfile, u0: f64) -> Result<CurvedTerms> {
    let (g, g1, g2) = profile.derivatives(state.x)?;
    let theta_c = -g1.atan();
    let x_dot = u0 * state.theta.cos() + state.w * state.theta.sin();
    let theta_c_dot = -g2 / (1.0 + g1 * g1) * x_dot;
    let theta_delta = state.theta - theta_c;
    Ok(CurvedTerms {
        z_delta: state.z - g,
        theta_c,
        theta_c_dot,
        theta_delta,
        theta_delta_dot: state.q - theta_c_dot,
    })
}

pub fn observe_curved(state: &VehicleState, profile: &ReferenceProfile, u0: f64) -> Result<Observation> {
    let t = curved_terms(state, profile, u0)?;
    let (sd, cd) = t.theta_delta.sin_cos();
    let (sc, cc) = t.theta_c.sin_cos();
    Ok(Observation {
        layout: Layout::CurvedDepth,
        values: vec![t.z_delta, cd, sd, cc, sc, t.theta_delta_dot, state.w, state.q],
    })
}

/// Builds a window observation from the most recent relative depths
/// (oldest first). Only the relative depth is read from the profile.
pub fn observe_window(state: &VehicleState, window: &VecDeque<f64>, n: usize) -> Observation {
    debug_assert_eq!(window.len(), n);
    let (s, c) = state.theta.sin_cos();
    let mut values = Vec::with_capacity(n + 4);
    values.extend(window.iter().copied());
    values.extend_from_slice(&[c, s, state.w, state.q]);
    Observation {
        layout: Layout::Window(n),
        values,
    }
}

/// Stage-cost weights: `rho . [e_z^2, e_th^2, w^2, q^2] + u' R u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostWeights {
    pub rho: [f64; 4],
    pub r: [[f64; 2]; 2],
}

impl Default for CostWeights {
    fn default() -> Self {
        Self {
            rho: [1.0, 2.0, 0.05, 0.05],
            r: [[0.001, 0.0], [0.0, 0.001]],
        }
    }
}

impl CostWeights {
    pub fn zero() -> Self {
        Self {
            rho: [0.0; 4],
            r: [[0.0; 2]; 2],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rho.iter().any(|&r| !(r >= 0.0) || !r.is_finite()) {
            return Err(Error::InvalidParams("cost weights rho must be >= 0".into()));
        }
        let r = self.r;
        if r[0][1] != r[1][0] {
            return Err(Error::InvalidParams("control weight R must be symmetric".into()));
        }
        let det = r[0][0] * r[1][1] - r[0][1] * r[1][0];
        if r[0][0] < 0.0 || r[1][1] < 0.0 || det < 0.0 {
            return Err(Error::InvalidParams(
                "control weight R must be positive semidefinite".into(),
            ));
        }
        Ok(())
    }

    /// Stage cost from the tracking errors and the applied control.
    pub fn stage(&self, e_z: f64, e_theta: f64, w: f64, q: f64, u: ControlInput) -> f64 {
        let [r1, r2, r3, r4] = self.rho;
        let (a, b) = (u.tau1, u.tau2);
        let quad = self.r[0][0] * a * a + 2.0 * self.r[0][1] * a * b + self.r[1][1] * b * b;
        r1 * e_z * e_z + r2 * e_theta * e_theta + r3 * w * w + r4 * q * q + quad.max(0.0)
    }
}

/// Which MDP the environment exposes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservationKind {
    Constant,
    Curved,
    Window(usize),
}

impl ObservationKind {
    pub fn layout(&self) -> Layout {
        match *self {
            ObservationKind::Constant => Layout::ConstantDepth,
            ObservationKind::Curved => Layout::CurvedDepth,
            ObservationKind::Window(n) => Layout::Window(n),
        }
    }
}

/// Early-termination rule for runaway episodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DivergenceGuard {
    pub max_depth_error: f64,
    pub max_heave_speed: f64,
    pub max_pitch_rate: f64,
    /// Added to the stage cost of the terminating transition.
    pub penalty: f64,
}

impl Default for DivergenceGuard {
    fn default() -> Self {
        Self {
            max_depth_error: 50.0,
            max_heave_speed: 10.0,
            max_pitch_rate: 3.0,
            penalty: 1.0e4,
        }
    }
}

/// Static environment description.
#[derive(Debug, Clone)]
pub struct EnvConfig {
    pub observation: ObservationKind,
    pub reference: ReferenceProfile,
    /// Target sits this far above the profile (seafloor clearance).
    pub safe_offset: f64,
    pub dt: f64,
    pub horizon_steps: usize,
    pub cost: CostWeights,
    /// Plant disturbance on the control channels; `None` runs noise-free.
    pub disturbance: Option<OuParams>,
    pub disturbance_seed: u64,
    /// Fixed evaluation start.
    pub start: VehicleState,
    /// Half-width of the uniform training start band around the reference.
    pub train_start_half_width: f64,
    pub min_start_depth: f64,
    pub guard: DivergenceGuard,
}

impl EnvConfig {
    /// 2 m -> 8 m constant-depth step with default weights and disturbance.
    pub fn constant_depth() -> Self {
        Self {
            observation: ObservationKind::Constant,
            reference: ReferenceProfile::Constant(8.0),
            safe_offset: 0.0,
            dt: 0.1,
            horizon_steps: 1000,
            cost: CostWeights::default(),
            disturbance: Some(OuParams::default()),
            disturbance_seed: 0,
            start: VehicleState::at_depth(2.0),
            train_start_half_width: 6.0,
            min_start_depth: 0.5,
            guard: DivergenceGuard::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.cost.validate()?;
        if !(self.dt > 0.0) || self.horizon_steps == 0 {
            return Err(Error::InvalidParams("dt and horizon must be positive".into()));
        }
        if let ObservationKind::Window(0) = self.observation {
            return Err(Error::InvalidParams("window size must be >= 1".into()));
        }
        if matches!(self.observation, ObservationKind::Curved)
            && matches!(self.reference, ReferenceProfile::Sampled(_))
        {
            return Err(Error::InvalidParams(
                "curved observations need an analytic or constant reference".into(),
            ));
        }
        if let Some(p) = &self.disturbance {
            p.validate()?;
        }
        Ok(())
    }
}

/// Result of one environment transition.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub observation: Observation,
    pub cost: f64,
    /// Episode over (horizon reached or diverged).
    pub done: bool,
    /// Terminated by the divergence guard; successors are absorbing.
    pub diverged: bool,
    /// Control actually applied (after saturation).
    pub applied: ControlInput,
    pub disturbance: [f64; 2],
}

/// Environment instance: simulator plus MDP bookkeeping.
#[derive(Debug, Clone)]
pub struct DepthEnv {
    vehicle: Vehicle,
    config: EnvConfig,
    state: Option<VehicleState>,
    window: VecDeque<f64>,
    steps: usize,
    disturbance: Option<OuProcess>,
}

impl DepthEnv {
    pub fn new(vehicle: Vehicle, config: EnvConfig) -> Result<Self> {
        config.validate()?;
        let disturbance = config
            .disturbance
            .clone()
            .map(|p| OuProcess::new(p, config.disturbance_seed))
            .transpose()?;
        Ok(Self {
            vehicle,
            config,
            state: None,
            window: VecDeque::new(),
            steps: 0,
            disturbance,
        })
    }

    pub fn vehicle(&self) -> &Vehicle {
        &self.vehicle
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn layout(&self) -> Layout {
        self.config.observation.layout()
    }

    /// Typical magnitude of each observation entry: the training start
    /// spread for depth errors, 0.3 rad for pitch sines, 0.5 m/s and
    /// 0.2 rad/s for the rates.
    pub fn observation_scale(&self) -> Vec<f64> {
        let dz = self.config.train_start_half_width.max(1.0);
        let (angle, w, q) = (0.3, 0.5, 0.2);
        match self.config.observation {
            ObservationKind::Constant => vec![dz, 1.0, angle, w, q],
            ObservationKind::Curved => vec![dz, 1.0, angle, 1.0, angle, q, w, q],
            ObservationKind::Window(n) => {
                let mut v = vec![dz; n];
                v.extend_from_slice(&[1.0, angle, w, q]);
                v
            }
        }
    }

    pub fn state(&self) -> Option<&VehicleState> {
        self.state.as_ref()
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Restarts the disturbance process from its mean with a new seed.
    pub fn reseed_disturbance(&mut self, seed: u64) -> Result<()> {
        if let Some(p) = &self.config.disturbance {
            self.disturbance = Some(OuProcess::new(p.clone(), seed)?);
        }
        Ok(())
    }

    /// Target depth at horizontal position `x`.
    pub fn reference_depth(&self, x: f64) -> Result<f64> {
        Ok(self.config.reference.depth(x)? - self.config.safe_offset)
    }

    fn depth_error(&self, state: &VehicleState) -> Result<f64> {
        Ok(state.z - self.reference_depth(state.x)?)
    }

    fn check_start(&self, s: &VehicleState) -> Result<()> {
        s.check_finite()?;
        if s.z < 0.0 {
            return Err(Error::Env(format!("start depth {} is above the surface", s.z)));
        }
        let dz = self.depth_error(s)?;
        let g = &self.config.guard;
        if dz.abs() > g.max_depth_error || s.w.abs() > g.max_heave_speed {
            return Err(Error::Env(format!(
                "start state outside the divergence guard (dz = {dz}, w = {})",
                s.w
            )));
        }
        Ok(())
    }

    /// Places the vehicle at `initial` and returns the first observation.
    pub fn reset(&mut self, initial: VehicleState) -> Result<Observation> {
        self.check_start(&initial)?;
        let mut s = initial;
        s.theta = crate::dynamics::normalize_angle(s.theta);
        self.state = Some(s);
        self.steps = 0;
        if let Some(d) = self.disturbance.as_mut() {
            d.reset();
        }
        if let ObservationKind::Window(n) = self.config.observation {
            let dz = self.depth_error(&s)?;
            self.window.clear();
            self.window.extend(std::iter::repeat(dz).take(n));
        }
        self.observe()
    }

    /// Resets to the configured evaluation start.
    pub fn reset_eval(&mut self) -> Result<Observation> {
        self.reset(self.config.start)
    }

    /// Resets to a random depth around the reference at the start position.
    pub fn reset_random<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Observation> {
        let x0 = self.config.start.x;
        let z_ref = self.reference_depth(x0)?;
        let h = self.config.train_start_half_width;
        let z0 = if h > 0.0 {
            rng.gen_range(z_ref - h..=z_ref + h)
        } else {
            z_ref
        };
        self.reset(VehicleState {
            x: x0,
            z: z0.max(self.config.min_start_depth),
            ..VehicleState::default()
        })
    }

    /// Current observation without advancing.
    pub fn observe(&self) -> Result<Observation> {
        let s = self
            .state
            .as_ref()
            .ok_or_else(|| Error::Env("environment used before reset".into()))?;
        match self.config.observation {
            ObservationKind::Constant => Ok(observe_constant(s, self.reference_depth(s.x)?)),
            ObservationKind::Curved => {
                let mut obs = observe_curved(s, &self.config.reference, self.vehicle.surge_speed())?;
                obs.values[0] += self.config.safe_offset;
                Ok(obs)
            }
            ObservationKind::Window(n) => Ok(observe_window(s, &self.window, n)),
        }
    }

    /// Tracking errors `(e_z, e_theta)` of a state under this MDP.
    pub fn tracking_errors(&self, s: &VehicleState) -> Result<(f64, f64)> {
        match self.config.observation {
            ObservationKind::Curved => {
                let t = curved_terms(s, &self.config.reference, self.vehicle.surge_speed())?;
                Ok((t.z_delta + self.config.safe_offset, t.theta_delta))
            }
            _ => Ok((self.depth_error(s)?, s.theta)),
        }
    }

    /// Applies `u` (saturated), advances one `dt`, and scores the successor.
    pub fn step(&mut self, u: ControlInput) -> Result<StepOutcome> {
        let s = *self
            .state
            .as_ref()
            .ok_or_else(|| Error::Env("step called before reset".into()))?;
        if self.steps >= self.config.horizon_steps {
            return Err(Error::Env("episode already finished; reset first".into()));
        }
        let applied = self.vehicle.bounds().saturate(u);
        let disturbance = match self.disturbance.as_mut() {
            Some(d) => d.step(),
            None => [0.0, 0.0],
        };
        let next = self.vehicle.step(&s, applied, disturbance, self.config.dt)?;
        let (e_z, e_theta) = self.tracking_errors(&next)?;
        if let ObservationKind::Window(_) = self.config.observation {
            self.window.pop_front();
            self.window.push_back(e_z);
        }
        self.state = Some(next);
        self.steps += 1;

        let mut cost = self.config.cost.stage(e_z, e_theta, next.w, next.q, applied);
        let g = &self.config.guard;
        let diverged = e_z.abs() > g.max_depth_error
            || next.w.abs() > g.max_heave_speed
            || next.q.abs() > g.max_pitch_rate;
        if diverged {
            cost += g.penalty;
        }
        let done = diverged || self.steps >= self.config.horizon_steps;
        Ok(StepOutcome {
            observation: self.observe()?,
            cost,
            done,
            diverged,
            applied,
            disturbance,
        })
    }
}
