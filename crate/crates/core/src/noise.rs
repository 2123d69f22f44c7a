//! Ornstein-Uhlenbeck noise, used both as the plant disturbance on the
//! control channels and as exploration noise for the actor.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Update rule of the discrete process.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OuForm {
    /// `xi' = xi + beta (mu - xi) + sigma eps`: mean reverting.
    #[default]
    Standard,
    /// `xi' = beta (mu - xi) + sigma eps`: no carry of the previous value.
    Literal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OuParams {
    pub mu: f64,
    /// Mean-reversion rate per step, in (0, 1).
    pub beta: f64,
    pub sigma: f64,
    pub form: OuForm,
}

impl Default for OuParams {
    fn default() -> Self {
        Self {
            mu: 0.0,
            beta: 0.15,
            sigma: 0.3,
            form: OuForm::Standard,
        }
    }
}

impl OuParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::InvalidParams(format!(
                "OU beta must lie in (0, 1), got {}",
                self.beta
            )));
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() || !self.mu.is_finite() {
            return Err(Error::InvalidParams(
                "OU sigma must be >= 0 and mu finite".into(),
            ));
        }
        Ok(())
    }

    /// Stationary standard deviation of the standard form,
    /// `sigma / sqrt(1 - (1 - beta)^2)`.
    pub fn stationary_std(&self) -> f64 {
        let rho = 1.0 - self.beta;
        self.sigma / (1.0 - rho * rho).sqrt()
    }
}

/// Two-channel OU process with its own seeded generator.
#[derive(Debug, Clone)]
pub struct OuProcess {
    params: OuParams,
    state: [f64; 2],
    rng: ChaCha8Rng,
}

impl OuProcess {
    /// Starts at the mean.
    pub fn new(params: OuParams, seed: u64) -> Result<Self> {
        params.validate()?;
        let state = [params.mu; 2];
        Ok(Self {
            params,
            state,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn with_state(params: OuParams, seed: u64, state: [f64; 2]) -> Result<Self> {
        let mut p = Self::new(params, seed)?;
        p.state = state;
        Ok(p)
    }

    pub fn params(&self) -> &OuParams {
        &self.params
    }

    pub fn state(&self) -> [f64; 2] {
        self.state
    }

    /// Rescales the noise amplitude, e.g. for a decaying exploration schedule.
    pub fn set_sigma(&mut self, sigma: f64) {
        self.params.sigma = sigma.max(0.0);
    }

    pub fn reset(&mut self) {
        self.state = [self.params.mu; 2];
    }

    /// Advances one step and returns the new value.
    pub fn step(&mut self) -> [f64; 2] {
        let OuParams {
            mu,
            beta,
            sigma,
            form,
        } = self.params;
        for x in self.state.iter_mut() {
            let eps: f64 = StandardNormal.sample(&mut self.rng);
            let carry = match form {
                OuForm::Standard => *x,
                OuForm::Literal => 0.0,
            };
            *x = carry + beta * (mu - *x) + sigma * eps;
        }
        self.state
    }
}
