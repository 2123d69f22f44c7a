//! Planar (x-z) REMUS vehicle model.
//!
//! The heave and pitch equations are coupled through added-mass terms, so the
//! accelerations come from a 2x2 linear solve against the effective mass matrix
//!
//! ```text
//! [ m - Z_wdot          -(m x_G + Z_qdot) ] [ w_dot ]   [ F_Z ]
//! [ -(m x_G + M_wdot)   I_yy - M_qdot     ] [ q_dot ] = [ M   ]
//! ```
//!
//! whose inverse is computed once when the [`Vehicle`] is built. Kinematics:
//! `z_dot = w cos(theta) - u0 sin(theta)`, `theta_dot = q`,
//! `x_dot = u0 cos(theta) + w sin(theta)`. Depth is positive downward and
//! pitch positive nose-up.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hydrodynamic and rigid-body coefficients of the vehicle.
///
/// Defaults are the REMUS values. `z_uw`/`z_uq` carry the lift coefficients
/// that reproduce the published linearization (-28.6 and -5.22).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HydroParams {
    /// Mass (kg).
    pub mass: f64,
    /// Pitch inertia (kg m^2).
    pub iyy: f64,
    pub z_qdot: f64,
    pub z_wdot: f64,
    pub m_qdot: f64,
    pub m_wdot: f64,
    pub z_uq: f64,
    pub z_uw: f64,
    pub m_uq: f64,
    pub m_uw: f64,
    pub z_ww: f64,
    pub z_qq: f64,
    pub m_ww: f64,
    pub m_qq: f64,
    /// Weight (N).
    pub weight: f64,
    /// Buoyancy (N).
    pub buoyancy: f64,
    pub x_g: f64,
    pub z_g: f64,
    pub x_b: f64,
    pub z_b: f64,
}

impl Default for HydroParams {
    fn default() -> Self {
        Self {
            mass: 30.51,
            iyy: 3.45,
            z_qdot: -1.93,
            z_wdot: -35.5,
            m_qdot: -4.88,
            m_wdot: -1.93,
            z_uq: -5.22,
            z_uw: -28.6,
            m_uq: -2.0,
            m_uw: 24.0,
            z_ww: -131.0,
            z_qq: -0.632,
            m_ww: 3.18,
            m_qq: -188.0,
            weight: 299.0,
            buoyancy: 299.0,
            x_g: 0.0,
            z_g: 0.0196,
            x_b: 0.0,
            z_b: 0.0,
        }
    }
}

impl HydroParams {
    /// Effective mass matrix multiplying `[w_dot, q_dot]`.
    pub fn mass_matrix(&self) -> [[f64; 2]; 2] {
        let m = self.mass;
        [
            [m - self.z_wdot, -(m * self.x_g + self.z_qdot)],
            [-(m * self.x_g + self.m_wdot), self.iyy - self.m_qdot],
        ]
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("mass", self.mass),
            ("iyy", self.iyy),
            ("z_qdot", self.z_qdot),
            ("z_wdot", self.z_wdot),
            ("m_qdot", self.m_qdot),
            ("m_wdot", self.m_wdot),
            ("z_uq", self.z_uq),
            ("z_uw", self.z_uw),
            ("m_uq", self.m_uq),
            ("m_uw", self.m_uw),
            ("z_ww", self.z_ww),
            ("z_qq", self.z_qq),
            ("m_ww", self.m_ww),
            ("m_qq", self.m_qq),
            ("weight", self.weight),
            ("buoyancy", self.buoyancy),
            ("x_g", self.x_g),
            ("z_g", self.z_g),
            ("x_b", self.x_b),
            ("z_b", self.z_b),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::InvalidParams(format!("hydro `{name}` is not finite")));
            }
        }
        if self.mass <= 0.0 || self.iyy <= 0.0 {
            return Err(Error::InvalidParams(
                "mass and pitch inertia must be positive".into(),
            ));
        }
        let mm = self.mass_matrix();
        let det = mm[0][0] * mm[1][1] - mm[0][1] * mm[1][0];
        let scale = mm[0][0].abs() * mm[1][1].abs() + mm[0][1].abs() * mm[1][0].abs();
        if det.abs() <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::InvalidParams(format!(
                "effective mass matrix is singular (det = {det:e})"
            )));
        }
        Ok(())
    }
}

/// Planar vehicle state. `theta` is kept in (-pi, pi].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VehicleState {
    /// Horizontal position (m).
    pub x: f64,
    /// Depth, positive down (m).
    pub z: f64,
    /// Pitch, positive nose-up (rad).
    pub theta: f64,
    /// Heave velocity (m/s).
    pub w: f64,
    /// Pitch rate (rad/s).
    pub q: f64,
}

impl VehicleState {
    pub fn at_depth(z: f64) -> Self {
        Self {
            z,
            ..Self::default()
        }
    }

    /// Motion vector in the ordering of the linearized model: `[w, q, z, theta]`.
    pub fn motion_vector(&self) -> [f64; 4] {
        [self.w, self.q, self.z, self.theta]
    }

    pub fn check_finite(&self) -> Result<()> {
        for (component, value) in [
            ("x", self.x),
            ("z", self.z),
            ("theta", self.theta),
            ("w", self.w),
            ("q", self.q),
        ] {
            if !value.is_finite() {
                return Err(Error::NonFinite {
                    what: "vehicle state",
                    component,
                    value,
                });
            }
        }
        Ok(())
    }
}

/// Wraps an angle into (-pi, pi].
pub fn normalize_angle(theta: f64) -> f64 {
    if theta > -PI && theta <= PI {
        return theta;
    }
    let two_pi = 2.0 * PI;
    let mut t = theta - two_pi * ((theta - PI) / two_pi).ceil();
    if t <= -PI {
        t += two_pi;
    }
    if t > PI {
        t -= two_pi;
    }
    t
}

/// Heave thrust and pitch torque.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlInput {
    /// Heave thrust (N).
    pub tau1: f64,
    /// Pitch torque (N m).
    pub tau2: f64,
}

impl ControlInput {
    pub const ZERO: ControlInput = ControlInput { tau1: 0.0, tau2: 0.0 };

    pub fn new(tau1: f64, tau2: f64) -> Self {
        Self { tau1, tau2 }
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.tau1, self.tau2]
    }

    pub fn from_slice(v: &[f64]) -> Self {
        Self {
            tau1: v[0],
            tau2: v[1],
        }
    }
}

/// Symmetric actuator limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlBounds {
    pub tau1_max: f64,
    pub tau2_max: f64,
}

impl Default for ControlBounds {
    fn default() -> Self {
        Self {
            tau1_max: 20.0,
            tau2_max: 10.0,
        }
    }
}

impl ControlBounds {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau1_max > 0.0 && self.tau2_max > 0.0)
            || !self.tau1_max.is_finite()
            || !self.tau2_max.is_finite()
        {
            return Err(Error::InvalidParams(
                "control bounds must be positive and finite".into(),
            ));
        }
        Ok(())
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.tau1_max, self.tau2_max]
    }

    /// Clamps each channel to its bound. NaN requests map to zero thrust.
    pub fn saturate(&self, u: ControlInput) -> ControlInput {
        let clamp = |v: f64, lim: f64| if v.is_nan() { 0.0 } else { v.clamp(-lim, lim) };
        ControlInput {
            tau1: clamp(u.tau1, self.tau1_max),
            tau2: clamp(u.tau2, self.tau2_max),
        }
    }

    pub fn contains(&self, u: ControlInput) -> bool {
        u.tau1.abs() <= self.tau1_max && u.tau2.abs() <= self.tau2_max
    }
}

/// Validated vehicle model: hydrodynamics, surge speed and actuator limits.
#[derive(Debug, Clone, PartialEq)]
pub struct Vehicle {
    params: HydroParams,
    inv_mass: [[f64; 2]; 2],
    u0: f64,
    bounds: ControlBounds,
}

impl Default for Vehicle {
    fn default() -> Self {
        Self::new(HydroParams::default(), 2.0, ControlBounds::default())
            .expect("default REMUS parameters are valid")
    }
}

impl Vehicle {
    pub fn new(params: HydroParams, u0: f64, bounds: ControlBounds) -> Result<Self> {
        params.validate()?;
        bounds.validate()?;
        if !u0.is_finite() {
            return Err(Error::InvalidParams("surge speed must be finite".into()));
        }
        let mm = params.mass_matrix();
        let det = mm[0][0] * mm[1][1] - mm[0][1] * mm[1][0];
        let inv_mass = [
            [mm[1][1] / det, -mm[0][1] / det],
            [-mm[1][0] / det, mm[0][0] / det],
        ];
        Ok(Self {
            params,
            inv_mass,
            u0,
            bounds,
        })
    }

    pub fn params(&self) -> &HydroParams {
        &self.params
    }

    pub fn surge_speed(&self) -> f64 {
        self.u0
    }

    pub fn bounds(&self) -> ControlBounds {
        self.bounds
    }

    pub fn inverse_mass(&self) -> [[f64; 2]; 2] {
        self.inv_mass
    }

    /// Heave force and pitch moment (everything except the acceleration terms).
    fn generalized_forces(&self, w: f64, q: f64, theta: f64, tau: [f64; 2]) -> [f64; 2] {
        let p = &self.params;
        let u = self.u0;
        let m = p.mass;
        let (s, c) = theta.sin_cos();
        let heave = m * u * q
            + m * p.z_g * q * q
            + p.z_uq * u * q
            + p.z_uw * u * w
            + p.z_ww * w * w.abs()
            + p.z_qq * q * q.abs()
            + (p.weight - p.buoyancy) * c
            + tau[0];
        let pitch = -m * p.x_g * u * q - m * p.z_g * w * q
            + p.m_uq * u * q
            + p.m_uw * u * w
            + p.m_ww * w * w.abs()
            + p.m_qq * q * q.abs()
            - (p.x_g * p.weight - p.x_b * p.buoyancy) * c
            - (p.z_g * p.weight - p.z_b * p.buoyancy) * s
            + tau[1];
        [heave, pitch]
    }

    /// Time derivatives `(x_dot, z_dot, theta_dot, w_dot, q_dot)`.
    ///
    /// `disturbance` is added to the two control channels.
    pub fn derivatives(
        &self,
        state: &VehicleState,
        u: ControlInput,
        disturbance: [f64; 2],
    ) -> Result<[f64; 5]> {
        state.check_finite()?;
        Ok(self.derivatives_unchecked(state, u, disturbance))
    }

    fn derivatives_unchecked(
        &self,
        state: &VehicleState,
        u: ControlInput,
        disturbance: [f64; 2],
    ) -> [f64; 5] {
        let tau = [u.tau1 + disturbance[0], u.tau2 + disturbance[1]];
        let f = self.generalized_forces(state.w, state.q, state.theta, tau);
        let mi = &self.inv_mass;
        let w_dot = mi[0][0] * f[0] + mi[0][1] * f[1];
        let q_dot = mi[1][0] * f[0] + mi[1][1] * f[1];
        let (s, c) = state.theta.sin_cos();
        let x_dot = self.u0 * c + state.w * s;
        let z_dot = state.w * c - self.u0 * s;
        [x_dot, z_dot, state.q, w_dot, q_dot]
    }

    /// One forward-Euler step of length `dt`; the control is saturated first.
    pub fn step(
        &self,
        state: &VehicleState,
        u: ControlInput,
        disturbance: [f64; 2],
        dt: f64,
    ) -> Result<VehicleState> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParams(format!("step dt must be positive, got {dt}")));
        }
        state.check_finite()?;
        let u = self.bounds.saturate(u);
        let d = self.derivatives_unchecked(state, u, disturbance);
        let next = VehicleState {
            x: state.x + dt * d[0],
            z: state.z + dt * d[1],
            theta: normalize_angle(state.theta + dt * d[2]),
            w: state.w + dt * d[3],
            q: state.q + dt * d[4],
        };
        next.check_finite()?;
        Ok(next)
    }

    /// Continuous dynamics on the motion vector `[w, q, z, theta]`, without
    /// saturation or angle wrapping. Used by the model-based controllers.
    pub fn motion_rates(&self, chi: &[f64], tau: &[f64]) -> [f64; 4] {
        let (w, q, theta) = (chi[0], chi[1], chi[3]);
        let f = self.generalized_forces(w, q, theta, [tau[0], tau[1]]);
        let mi = &self.inv_mass;
        let (s, c) = theta.sin_cos();
        [
            mi[0][0] * f[0] + mi[0][1] * f[1],
            mi[1][0] * f[0] + mi[1][1] * f[1],
            w * c - self.u0 * s,
            q,
        ]
    }

    /// Jacobians of [`Vehicle::motion_rates`] with respect to the motion vector
    /// (4x4, row-major) and the control (4x2, row-major).
    pub fn motion_jacobians(&self, chi: &[f64]) -> ([f64; 16], [f64; 8]) {
        let p = &self.params;
        let u = self.u0;
        let m = p.mass;
        let (w, q, theta) = (chi[0], chi[1], chi[3]);
        let (s, c) = theta.sin_cos();

        let dz_dw = p.z_uw * u + 2.0 * p.z_ww * w.abs();
        let dz_dq = (m + p.z_uq) * u + 2.0 * m * p.z_g * q + 2.0 * p.z_qq * q.abs();
        let dz_dth = -(p.weight - p.buoyancy) * s;
        let dm_dw = -m * p.z_g * q + p.m_uw * u + 2.0 * p.m_ww * w.abs();
        let dm_dq = (p.m_uq - m * p.x_g) * u - m * p.z_g * w + 2.0 * p.m_qq * q.abs();
        let dm_dth = (p.x_g * p.weight - p.x_b * p.buoyancy) * s
            - (p.z_g * p.weight - p.z_b * p.buoyancy) * c;

        let mi = &self.inv_mass;
        let mut a = [0.0; 16];
        for row in 0..2 {
            a[row * 4] = mi[row][0] * dz_dw + mi[row][1] * dm_dw;
            a[row * 4 + 1] = mi[row][0] * dz_dq + mi[row][1] * dm_dq;
            a[row * 4 + 3] = mi[row][0] * dz_dth + mi[row][1] * dm_dth;
        }
        a[8] = c;
        a[11] = -w * s - u * c;
        a[13] = 1.0;

        let b = [mi[0][0], mi[0][1], mi[1][0], mi[1][1], 0.0, 0.0, 0.0, 0.0];
        (a, b)
    }
}
