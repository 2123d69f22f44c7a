//! Linear-quadratic-integral depth controller on a fixed linear model.
//!
//! State ordering is `[w, q, z, theta]`; the measured outputs are `z` and
//! `theta`, each with an integrator of `y_ref - y`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::riccati::{is_hurwitz, is_stabilizable, solve_care, CareOptions};
use crate::dynamics::{ControlBounds, ControlInput, VehicleState};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LinearPlant {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    /// Surge speed and trim of the linearization point.
    pub surge_speed: f64,
}

impl LinearPlant {
    /// Published linearization of the REMUS depth plane at 2 m/s, level trim.
    pub fn remus() -> Self {
        let a = DMatrix::from_row_slice(
            4,
            4,
            &[
                -1.0421, 0.7856, 0.0, 0.0207, //
                6.0038, -0.6624, 0.0, -0.7083, //
                1.0, 0.0, 0.0, -2.0, //
                0.0, 1.0, 0.0, 0.0,
            ],
        );
        let b = DMatrix::from_row_slice(4, 2, &[0.0153, 0.0035, -0.0035, 0.1209, 0.0, 0.0, 0.0, 0.0]);
        Self::new(a, b, Self::depth_pitch_output(), 2.0).expect("published plant is stabilizable")
    }

    /// `C` selecting `z` and `theta`.
    pub fn depth_pitch_output() -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 4, &[0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0])
    }

    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>, surge_speed: f64) -> Result<Self> {
        if a.shape() != (4, 4) || b.shape() != (4, 2) || c.shape() != (2, 4) {
            return Err(Error::Shape {
                context: "linear plant (A 4x4, B 4x2, C 2x4)".into(),
                expected: 4,
                actual: a.nrows(),
            });
        }
        if !is_stabilizable(&a, &b) {
            return Err(Error::InvalidParams("(A, B) is not stabilizable".into()));
        }
        Ok(Self {
            a,
            b,
            c,
            surge_speed,
        })
    }

    /// `[[A, 0], [-C, 0]]` and `[B; 0]`.
    pub fn augmented(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        let mut a = DMatrix::zeros(6, 6);
        a.view_mut((0, 0), (4, 4)).copy_from(&self.a);
        a.view_mut((4, 0), (2, 4)).copy_from(&(-&self.c));
        let mut b = DMatrix::zeros(6, 2);
        b.view_mut((0, 0), (4, 2)).copy_from(&self.b);
        (a, b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LqiWeights {
    /// Diagonal over `[w, q, z, theta, eps_z, eps_theta]`.
    pub q_diag: [f64; 6],
    pub r_diag: [f64; 2],
}

impl Default for LqiWeights {
    fn default() -> Self {
        Self {
            q_diag: [1.0, 1.0, 1.0, 1.0, 0.01, 0.01],
            r_diag: [0.01, 0.01],
        }
    }
}

#[derive(Debug, Clone)]
pub struct LqiGain {
    /// Applied as `u = K_chi (chi - chi_ref) + K_eps eps`.
    pub k_chi: DMatrix<f64>,
    pub k_eps: DMatrix<f64>,
    pub p: DMatrix<f64>,
    pub residual: f64,
}

impl LqiGain {
    /// Augmented closed-loop matrix `A_aug + B_aug [K_chi K_eps]`.
    pub fn closed_loop(&self, plant: &LinearPlant) -> DMatrix<f64> {
        let (a, b) = plant.augmented();
        let mut k = DMatrix::zeros(2, 6);
        k.view_mut((0, 0), (2, 4)).copy_from(&self.k_chi);
        k.view_mut((0, 4), (2, 2)).copy_from(&self.k_eps);
        a + b * k
    }
}

pub fn solve_lqi(plant: &LinearPlant, weights: &LqiWeights) -> Result<LqiGain> {
    if weights.q_diag.iter().any(|v| !(*v >= 0.0)) || weights.r_diag.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::Config("LQI weights need Q >= 0 and R > 0".into()));
    }
    let (a, b) = plant.augmented();
    let q = DMatrix::from_diagonal(&DVector::from_row_slice(&weights.q_diag));
    let r = DMatrix::from_diagonal(&DVector::from_row_slice(&weights.r_diag));
    let sol = solve_care(&a, &b, &q, &r, &CareOptions::default())?;
    let k = -&sol.k;
    let gain = LqiGain {
        k_chi: k.view((0, 0), (2, 4)).into_owned(),
        k_eps: k.view((0, 4), (2, 2)).into_owned(),
        p: sol.x,
        residual: sol.residual,
    };
    if !is_hurwitz(&gain.closed_loop(plant)) {
        return Err(Error::Riccati {
            message: "LQI closed loop is not stable".into(),
            residuals: sol.residual_history,
        });
    }
    Ok(gain)
}

/// Sample-and-hold LQI loop with its integrator state.
#[derive(Debug, Clone)]
pub struct LqiController {
    gain: LqiGain,
    bounds: ControlBounds,
    dt: f64,
    eps: [f64; 2],
}

impl LqiController {
    pub fn new(gain: LqiGain, bounds: ControlBounds, dt: f64) -> Self {
        Self {
            gain,
            bounds,
            dt,
            eps: [0.0; 2],
        }
    }

    pub fn gain(&self) -> &LqiGain {
        &self.gain
    }

    pub fn integrator(&self) -> [f64; 2] {
        self.eps
    }

    pub fn reset(&mut self) {
        self.eps = [0.0; 2];
    }

    /// Unsaturated control for motion vector `chi = [w, q, z, theta]`.
    pub fn raw_control(&self, chi: [f64; 4], y_ref: [f64; 2]) -> [f64; 2] {
        let chi_ref = [0.0, 0.0, y_ref[0], y_ref[1]];
        let mut u = [0.0; 2];
        for (i, ui) in u.iter_mut().enumerate() {
            for j in 0..4 {
                *ui += self.gain.k_chi[(i, j)] * (chi[j] - chi_ref[j]);
            }
            for j in 0..2 {
                *ui += self.gain.k_eps[(i, j)] * self.eps[j];
            }
        }
        u
    }

    /// Computes the saturated control, then advances the integrator.
    pub fn control(&mut self, state: &VehicleState, y_ref: [f64; 2]) -> ControlInput {
        let chi = state.motion_vector();
        let u = self.raw_control(chi, y_ref);
        self.eps[0] += self.dt * (y_ref[0] - chi[2]);
        self.eps[1] += self.dt * (y_ref[1] - chi[3]);
        self.bounds.saturate(ControlInput::new(u[0], u[1]))
    }
}
