//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use auv_depth::dynamics::{HydroParams, VehicleState};
use auv_depth::nn::{Activation, MlpParams, Role};
use auv_depth::baselines::nmpc::LinearModel;
use nalgebra::DMatrix;
use rand::Rng;

/// One Euler step of the planar REMUS equations, written from the force
/// balances with the acceleration terms collected on the left and solved by
/// Cramer's rule. `tau` is the requested control before clamping.
pub fn remus_euler_step(
    p: &HydroParams,
    u: f64,
    limits: [f64; 2],
    s: &VehicleState,
    tau: [f64; 2],
    dist: [f64; 2],
    dt: f64,
) -> VehicleState {
    let t1 = tau[0].max(-limits[0]).min(limits[0]) + dist[0];
    let t2 = tau[1].max(-limits[1]).min(limits[1]) + dist[1];
    let (w, q, th) = (s.w, s.q, s.theta);
    let m = p.mass;

    // heave: (m - Zwd) wd + (-m xG - Zqd) qd = rhs_z
    let a11 = m - p.z_wdot;
    let a12 = -m * p.x_g - p.z_qdot;
    let rhs_z = m * u * q + m * p.z_g * q * q
        + p.z_uq * u * q
        + p.z_uw * u * w
        + p.z_ww * w * w.abs()
        + p.z_qq * q * q.abs()
        + (p.weight - p.buoyancy) * th.cos()
        + t1;
    // pitch: (-m xG - Mwd) wd + (Iyy - Mqd) qd = rhs_m
    let a21 = -m * p.x_g - p.m_wdot;
    let a22 = p.iyy - p.m_qdot;
    let rhs_m = -m * p.x_g * u * q - m * p.z_g * w * q
        + p.m_uq * u * q
        + p.m_uw * u * w
        + p.m_ww * w * w.abs()
        + p.m_qq * q * q.abs()
        - (p.x_g * p.weight - p.x_b * p.buoyancy) * th.cos()
        - (p.z_g * p.weight - p.z_b * p.buoyancy) * th.sin()
        + t2;
    let det = a11 * a22 - a12 * a21;
    let w_dot = (rhs_z * a22 - a12 * rhs_m) / det;
    let q_dot = (a11 * rhs_m - a21 * rhs_z) / det;

    let mut theta = th + dt * q;
    while theta > PI {
        theta -= 2.0 * PI;
    }
    while theta <= -PI {
        theta += 2.0 * PI;
    }
    VehicleState {
        x: s.x + dt * (u * th.cos() + w * th.sin()),
        z: s.z + dt * (w * th.cos() - u * th.sin()),
        theta,
        w: w + dt * w_dot,
        q: q + dt * q_dot,
    }
}

/// Finite-horizon discrete LQR by the backward Riccati recursion for the
/// cost `sum (x'Qx + u'Ru)/2 + x_N' P0 x_N / 2`; returns the first-stage gain
/// `K_0` with `u_0 = -K_0 x_0`.
pub fn finite_horizon_gain(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    p0: &DMatrix<f64>,
    horizon: usize,
) -> DMatrix<f64> {
    let mut p = p0.clone();
    let mut k = DMatrix::zeros(b.ncols(), a.nrows());
    for _ in 0..horizon {
        let s = r + b.transpose() * &p * b;
        k = s.lu().solve(&(b.transpose() * &p * a)).expect("R + B'PB invertible");
        p = q + a.transpose() * &p * (a - b * &k);
        p = (&p + p.transpose()) * 0.5;
    }
    k
}

/// Damped oscillation `e(t) = b - A exp(-t/2) cos t` with `e(0) = -step`.
pub struct DampedOscillation {
    pub step: f64,
    pub offset: f64,
}

impl DampedOscillation {
    pub fn amplitude(&self) -> f64 {
        self.step + self.offset
    }

    pub fn error(&self, t: f64) -> f64 {
        self.offset - self.amplitude() * (-0.5 * t).exp() * t.cos()
    }

    /// Peak past the target: the first maximum of `-exp(-t/2) cos t` sits
    /// where `tan t = -1/2`, i.e. `t = pi - atan(1/2)`, with `|cos t| = 2/sqrt 5`.
    pub fn overshoot(&self) -> f64 {
        let t = PI - 0.5f64.atan();
        self.offset + self.amplitude() * (-0.5 * t).exp() * 2.0 / 5f64.sqrt()
    }

    /// Last exit from the band `|e| <= band`, by scanning for the final
    /// sign change of `|e| - band` on a coarse grid and bisecting it.
    pub fn settling_time(&self, band: f64, horizon: f64) -> f64 {
        let f = |t: f64| self.error(t).abs() - band;
        let h = 1e-3;
        let n = (horizon / h) as usize;
        let k = (0..n)
            .rev()
            .find(|&k| f(k as f64 * h) > 0.0)
            .expect("trajectory leaves the band");
        let (mut lo, mut hi) = (k as f64 * h, (k + 1) as f64 * h);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Straight-line forward pass written independently of the library's tape.
pub fn oracle_forward(net: &MlpParams, s: &[f64], u: Option<[f64; 2]>) -> Vec<f64> {
    oracle_forward_signs(net, s, u).0
}

/// Forward pass that also reports which ReLU units are active, so finite
/// differences can tell when a perturbation crosses a kink.
pub fn oracle_forward_signs(net: &MlpParams, s: &[f64], u: Option<[f64; 2]>) -> (Vec<f64>, Vec<bool>) {
    let n = s.len();
    let mut signs = Vec::new();
    let mut x: Vec<f64> = (0..n).map(|i| s[i] / net.input_scale[i]).collect();
    for (l, layer) in net.layers.iter().enumerate() {
        if let (Role::Critic { action_layer, .. }, Some(u)) = (&net.role, u) {
            if *action_layer == l {
                x.push(u[0] / net.input_scale[n]);
                x.push(u[1] / net.input_scale[n + 1]);
            }
        }
        let mut y = Vec::with_capacity(layer.outputs);
        for o in 0..layer.outputs {
            let z: f64 = layer.bias[o]
                + (0..layer.inputs)
                    .map(|i| layer.weights[o * layer.inputs + i] * x[i])
                    .sum::<f64>();
            y.push(match layer.activation {
                Activation::Relu => {
                    signs.push(z > 0.0);
                    z.max(0.0)
                }
                Activation::Tanh => z.tanh(),
                Activation::Linear => z,
            });
        }
        x = y;
    }
    if let Role::Actor { scale, offset } = &net.role {
        for (i, v) in x.iter_mut().enumerate() {
            *v = offset[i] + scale[i] * *v;
        }
    }
    (x, signs)
}

pub fn random_matrix(rng: &mut impl Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.gen_range(-1.0..1.0))
}

/// Smallest singular value of `[B, AB, ..., A^{n-1}B]`.
pub fn controllability_margin(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let (n, m) = (a.nrows(), b.ncols());
    let mut ctrb = DMatrix::zeros(n, n * m);
    let mut blk = b.clone();
    for k in 0..n {
        ctrb.columns_mut(k * m, m).copy_from(&blk);
        blk = a * blk;
    }
    ctrb.singular_values().min()
}

/// Random Schur-stable plant: the Euler-discretized published plant has a
/// mode at |lambda| = 1.1, which makes a 200-step shooting problem far too
/// ill-conditioned for any first-order method.
pub fn stable_linear_model(rng: &mut impl Rng) -> LinearModel {
    let a = random_matrix(rng, 4, 4);
    let rho = a.complex_eigenvalues().iter().map(|e| e.norm()).fold(0.0, f64::max);
    let a = a * (0.9 / rho);
    let b = random_matrix(rng, 4, 2);
    LinearModel {
        a: std::array::from_fn(|i| a[(i / 4, i % 4)]),
        b: std::array::from_fn(|i| b[(i / 2, i % 2)]),
    }
}
