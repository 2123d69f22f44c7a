//! Receding-horizon controller solved by single shooting: a forward rollout,
//! a backward adjoint sweep for the exact gradient of the horizon cost, and a
//! projected gradient step with Barzilai-Borwein step lengths and halving
//! backtracking.
//!
//! Horizon cost, with `e_k = x_k - x_ref`:
//! `J = sum_{k<N} (e_k' Q e_k + u_k' R u_k) / 2 + e_N' P0 e_N / 2`.

use serde::{Deserialize, Serialize};

use crate::dynamics::{ControlBounds, ControlInput, Vehicle, VehicleState};
use crate::error::{Error, Result};

/// Deterministic discrete-time model on the motion vector `[w, q, z, theta]`.
pub trait DiscreteModel {
    fn step(&self, x: &[f64; 4], u: &[f64; 2]) -> [f64; 4];
    /// `(df/dx, df/du)` as row-major 4x4 and 4x2.
    fn jacobians(&self, x: &[f64; 4], u: &[f64; 2]) -> ([f64; 16], [f64; 8]);
}

/// Forward-Euler discretization of the nonlinear vehicle (noise-free).
#[derive(Debug, Clone)]
pub struct EulerVehicle {
    pub vehicle: Vehicle,
    pub dt: f64,
}

impl DiscreteModel for EulerVehicle {
    fn step(&self, x: &[f64; 4], u: &[f64; 2]) -> [f64; 4] {
        let f = self.vehicle.motion_rates(x, u);
        std::array::from_fn(|i| x[i] + self.dt * f[i])
    }

    fn jacobians(&self, x: &[f64; 4], _u: &[f64; 2]) -> ([f64; 16], [f64; 8]) {
        let (ja, jb) = self.vehicle.motion_jacobians(x);
        let mut a = [0.0; 16];
        for i in 0..16 {
            a[i] = self.dt * ja[i];
        }
        for i in 0..4 {
            a[i * 4 + i] += 1.0;
        }
        (a, jb.map(|v| self.dt * v))
    }
}

/// `x' = A x + B u`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub a: [f64; 16],
    pub b: [f64; 8],
}

impl LinearModel {
    /// Forward-Euler discretization of continuous `(A, B)`.
    pub fn euler(a: &[f64; 16], b: &[f64; 8], dt: f64) -> Self {
        let mut ad = a.map(|v| dt * v);
        for i in 0..4 {
            ad[i * 4 + i] += 1.0;
        }
        Self {
            a: ad,
            b: b.map(|v| dt * v),
        }
    }
}

impl DiscreteModel for LinearModel {
    fn step(&self, x: &[f64; 4], u: &[f64; 2]) -> [f64; 4] {
        std::array::from_fn(|i| {
            (0..4).map(|j| self.a[i * 4 + j] * x[j]).sum::<f64>()
                + (0..2).map(|j| self.b[i * 2 + j] * u[j]).sum::<f64>()
        })
    }

    fn jacobians(&self, _x: &[f64; 4], _u: &[f64; 2]) -> ([f64; 16], [f64; 8]) {
        (self.a, self.b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NmpcConfig {
    pub horizon: usize,
    /// Diagonal state weight over `[w, q, z, theta]`.
    pub q_diag: [f64; 4],
    pub r_diag: [f64; 2],
    pub p0_diag: [f64; 4],
    pub max_sweeps: usize,
    /// First trial step of a cold solve; later steps are Barzilai-Borwein.
    pub initial_step: f64,
    pub max_halvings: usize,
    /// Stop when the control-sequence change norm falls below this.
    pub tolerance: f64,
}

impl Default for NmpcConfig {
    fn default() -> Self {
        let q = [0.05, 0.05, 10.0, 2.0];
        Self {
            horizon: 30,
            q_diag: q,
            r_diag: [0.001, 0.001],
            p0_diag: q,
            max_sweeps: 200,
            initial_step: 1.0,
            max_halvings: 20,
            tolerance: 1e-6,
        }
    }
}

impl NmpcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 || self.max_sweeps == 0 {
            return Err(Error::Config("NMPC horizon and sweeps must be >= 1".into()));
        }
        if self.q_diag.iter().chain(&self.p0_diag).any(|v| !(*v >= 0.0))
            || self.r_diag.iter().any(|v| !(*v > 0.0))
        {
            return Err(Error::Config("NMPC weights need Q, P0 >= 0 and R > 0".into()));
        }
        if !(self.initial_step > 0.0 && self.tolerance > 0.0) {
            return Err(Error::Config("NMPC step and tolerance must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub controls: Vec<[f64; 2]>,
    pub cost: f64,
    pub sweeps: usize,
    /// Backtracking could not decrease the cost before convergence.
    pub stalled: bool,
}

/// Horizon cost of `controls` from `x0`.
pub fn horizon_cost<M: DiscreteModel>(
    model: &M,
    cfg: &NmpcConfig,
    x0: &[f64; 4],
    x_ref: &[f64; 4],
    controls: &[[f64; 2]],
) -> f64 {
    let mut x = *x0;
    let mut j = 0.0;
    for u in controls {
        j += 0.5 * quad(&cfg.q_diag, &x, x_ref) + 0.5 * quad(&cfg.r_diag, u, &[0.0; 2]);
        x = model.step(&x, u);
    }
    j + 0.5 * quad(&cfg.p0_diag, &x, x_ref)
}

fn quad<const D: usize>(w: &[f64; D], x: &[f64; D], r: &[f64; D]) -> f64 {
    (0..D).map(|i| w[i] * (x[i] - r[i]).powi(2)).sum()
}

/// Cost and exact gradient with respect to every control via the adjoint
/// recursion `lambda_N = P0 e_N`, `g_k = R u_k + B_k' lambda_{k+1}`,
/// `lambda_k = Q e_k + A_k' lambda_{k+1}`.
pub fn cost_and_gradient<M: DiscreteModel>(
    model: &M,
    cfg: &NmpcConfig,
    x0: &[f64; 4],
    x_ref: &[f64; 4],
    controls: &[[f64; 2]],
    grad: &mut Vec<[f64; 2]>,
) -> f64 {
    let n = controls.len();
    let mut xs = Vec::with_capacity(n + 1);
    xs.push(*x0);
    let mut j = 0.0;
    for (k, u) in controls.iter().enumerate() {
        j += 0.5 * quad(&cfg.q_diag, &xs[k], x_ref) + 0.5 * quad(&cfg.r_diag, u, &[0.0; 2]);
        let next = model.step(&xs[k], u);
        xs.push(next);
    }
    j += 0.5 * quad(&cfg.p0_diag, &xs[n], x_ref);

    grad.clear();
    grad.resize(n, [0.0; 2]);
    let mut lam: [f64; 4] = std::array::from_fn(|i| cfg.p0_diag[i] * (xs[n][i] - x_ref[i]));
    for k in (0..n).rev() {
        let (a, b) = model.jacobians(&xs[k], &controls[k]);
        for i in 0..2 {
            grad[k][i] = cfg.r_diag[i] * controls[k][i]
                + (0..4).map(|r| b[r * 2 + i] * lam[r]).sum::<f64>();
        }
        lam = std::array::from_fn(|i| {
            cfg.q_diag[i] * (xs[k][i] - x_ref[i]) + (0..4).map(|r| a[r * 4 + i] * lam[r]).sum::<f64>()
        });
    }
    j
}

fn project(u: &mut [f64; 2], bounds: &[f64; 2]) {
    for i in 0..2 {
        u[i] = u[i].clamp(-bounds[i], bounds[i]);
    }
}

/// Optimizes the control sequence starting from `initial`.
pub fn plan<M: DiscreteModel>(
    model: &M,
    cfg: &NmpcConfig,
    x0: &[f64; 4],
    x_ref: &[f64; 4],
    bounds: [f64; 2],
    initial: Vec<[f64; 2]>,
) -> Plan {
    let mut u = initial;
    u.resize(cfg.horizon, [0.0; 2]);
    for ui in u.iter_mut() {
        project(ui, &bounds);
    }
    let mut g = Vec::new();
    let mut j = cost_and_gradient(model, cfg, x0, x_ref, &u, &mut g);
    let mut step = cfg.initial_step;
    let mut prev: Option<(Vec<[f64; 2]>, Vec<[f64; 2]>)> = None;
    let mut trial = vec![[0.0; 2]; u.len()];
    let mut stalled = false;
    let mut sweeps = 0;
    while sweeps < cfg.max_sweeps {
        sweeps += 1;
        if let Some((pu, pg)) = &prev {
            let mut ss = 0.0;
            let mut sy = 0.0;
            for k in 0..u.len() {
                for i in 0..2 {
                    let s = u[k][i] - pu[k][i];
                    let y = g[k][i] - pg[k][i];
                    ss += s * s;
                    sy += s * y;
                }
            }
            if sy > 0.0 && ss > 0.0 {
                step = ss / sy;
            }
        }
        let mut accepted = None;
        let mut alpha = step;
        for _ in 0..=cfg.max_halvings {
            for k in 0..u.len() {
                for i in 0..2 {
                    trial[k][i] = u[k][i] - alpha * g[k][i];
                }
                project(&mut trial[k], &bounds);
            }
            let jt = horizon_cost(model, cfg, x0, x_ref, &trial);
            if jt < j {
                accepted = Some(jt);
                break;
            }
            alpha *= 0.5;
        }
        let Some(jt) = accepted else {
            // No decrease even at the smallest step: converged if the
            // projected gradient is already negligible, stalled otherwise.
            let change: f64 = u
                .iter()
                .zip(&trial)
                .map(|(a, b)| (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2))
                .sum::<f64>()
                .sqrt();
            stalled = change >= cfg.tolerance;
            break;
        };
        let change: f64 = u
            .iter()
            .zip(&trial)
            .map(|(a, b)| (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2))
            .sum::<f64>()
            .sqrt();
        let old_g = std::mem::take(&mut g);
        prev = Some((u.clone(), old_g));
        std::mem::swap(&mut u, &mut trial);
        j = cost_and_gradient(model, cfg, x0, x_ref, &u, &mut g);
        debug_assert!((j - jt).abs() <= 1e-9 * j.abs().max(1.0));
        if change < cfg.tolerance {
            break;
        }
    }
    Plan {
        controls: u,
        cost: j,
        sweeps,
        stalled,
    }
}

/// Closed-loop NMPC with warm starts.
#[derive(Debug, Clone)]
pub struct NmpcController<M> {
    model: M,
    cfg: NmpcConfig,
    bounds: ControlBounds,
    previous: Option<Vec<[f64; 2]>>,
    last: Option<Plan>,
}

impl<M: DiscreteModel> NmpcController<M> {
    pub fn new(model: M, cfg: NmpcConfig, bounds: ControlBounds) -> Result<Self> {
        cfg.validate()?;
        bounds.validate()?;
        Ok(Self {
            model,
            cfg,
            bounds,
            previous: None,
            last: None,
        })
    }

    pub fn config(&self) -> &NmpcConfig {
        &self.cfg
    }

    /// Diagnostics of the most recent solve.
    pub fn last_plan(&self) -> Option<&Plan> {
        self.last.as_ref()
    }

    pub fn reset(&mut self) {
        self.previous = None;
        self.last = None;
    }

    /// Solves from `chi` (warm-started from the shifted previous plan) and
    /// returns the first control.
    pub fn control_chi(&mut self, chi: [f64; 4], x_ref: [f64; 4]) -> ControlInput {
        let init = match self.previous.take() {
            Some(mut p) => {
                let last = *p.last().unwrap_or(&[0.0; 2]);
                p.remove(0);
                p.push(last);
                p
            }
            None => vec![[0.0; 2]; self.cfg.horizon],
        };
        let plan = plan(
            &self.model,
            &self.cfg,
            &chi,
            &x_ref,
            self.bounds.as_array(),
            init,
        );
        let u0 = plan.controls[0];
        self.previous = Some(plan.controls.clone());
        self.last = Some(plan);
        self.bounds.saturate(ControlInput::new(u0[0], u0[1]))
    }

    /// Depth-hold control toward `z_ref` with level trim.
    pub fn control(&mut self, state: &VehicleState, z_ref: f64) -> ControlInput {
        self.control_chi(state.motion_vector(), [0.0, 0.0, z_ref, 0.0])
    }
}
