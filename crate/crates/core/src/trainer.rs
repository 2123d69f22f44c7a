//! Actor-critic training loop with prioritized replay.
//!
//! Each environment step pushes one transition (priority from the current
//! networks), then runs one minibatch update of the critic followed by one
//! deterministic-policy-gradient update of the actor.

use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{ControlInput, VehicleState};
use crate::env::{DepthEnv, Observation};
use crate::error::{Error, Result};
use crate::metrics::{TrajectoryRecord, TrajectoryRow};
use crate::nn::{Adam, GradientBundle, MlpParams, Tape};
use crate::noise::{OuParams, OuProcess};
use crate::replay::{ReplayCache, SamplingMode, Transition};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    #[default]
    Sgd,
    Adam,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReplayMode {
    #[default]
    Prioritized,
    Uniform,
}

impl From<ReplayMode> for SamplingMode {
    fn from(m: ReplayMode) -> Self {
        match m {
            ReplayMode::Prioritized => SamplingMode::Prioritized,
            ReplayMode::Uniform => SamplingMode::Uniform,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainerConfig {
    pub episodes: usize,
    pub steps_per_episode: usize,
    pub batch_size: usize,
    pub critic_rate: f64,
    pub actor_rate: f64,
    pub gamma: f64,
    /// Exploration process in units of the actuator limits.
    pub exploration: OuParams,
    /// Exploration sigma decays linearly to this fraction of its start value.
    pub exploration_final_fraction: f64,
    /// Both learning rates decay linearly to this fraction over training.
    pub rate_final_fraction: f64,
    pub seed: u64,
    pub replay_capacity: usize,
    pub replay: ReplayMode,
    pub priority_floor: f64,
    /// Evaluate (noise-free, fixed start) every this many episodes; 0 disables.
    pub eval_every: usize,
    pub optimizer: OptimizerKind,
    /// Polyak rate for target networks; 0 bootstraps from the live networks.
    pub soft_target: f64,
    /// Multiplies stage costs before they enter the TD target.
    pub cost_scale: f64,
    pub critic_hidden: Vec<usize>,
    pub actor_hidden: Vec<usize>,
    /// Divide network inputs by the env's typical magnitudes (and actions
    /// by the actuator limits) before the first layer.
    pub normalize_inputs: bool,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            episodes: 150,
            steps_per_episode: 400,
            batch_size: 64,
            critic_rate: 1e-3,
            actor_rate: 1e-4,
            gamma: 0.99,
            exploration: OuParams {
                mu: 0.0,
                beta: 0.15,
                sigma: 0.15,
                ..OuParams::default()
            },
            exploration_final_fraction: 0.1,
            rate_final_fraction: 1.0,
            seed: 0,
            replay_capacity: crate::replay::DEFAULT_CAPACITY,
            replay: ReplayMode::Prioritized,
            priority_floor: crate::replay::DEFAULT_PRIORITY_FLOOR,
            eval_every: 1,
            optimizer: OptimizerKind::Adam,
            soft_target: 0.005,
            cost_scale: 0.01,
            critic_hidden: vec![64, 64, 32],
            actor_hidden: vec![64, 32],
            normalize_inputs: true,
        }
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad(format!("gamma must lie in (0, 1), got {}", self.gamma));
        }
        if !(self.critic_rate > 0.0 && self.actor_rate > 0.0) {
            return bad("learning rates must be positive".into());
        }
        if self.batch_size == 0 || self.episodes == 0 || self.steps_per_episode == 0 {
            return bad("batch size, episodes and steps must be >= 1".into());
        }
        if !(self.cost_scale > 0.0 && self.cost_scale.is_finite()) {
            return bad("cost_scale must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.soft_target) {
            return bad(format!("soft_target must lie in [0, 1], got {}", self.soft_target));
        }
        if !(0.0..=1.0).contains(&self.exploration_final_fraction) {
            return bad("exploration_final_fraction must lie in [0, 1]".into());
        }
        if !(self.rate_final_fraction > 0.0 && self.rate_final_fraction <= 1.0) {
            return bad("rate_final_fraction must lie in (0, 1]".into());
        }
        self.exploration.validate()
    }

    fn progress(&self, episode: usize) -> f64 {
        if self.episodes <= 1 {
            0.0
        } else {
            episode as f64 / (self.episodes - 1) as f64
        }
    }

    fn sigma_at(&self, episode: usize) -> f64 {
        let k = 1.0 - (1.0 - self.exploration_final_fraction) * self.progress(episode);
        self.exploration.sigma * k
    }

    fn rate_scale_at(&self, episode: usize) -> f64 {
        1.0 - (1.0 - self.rate_final_fraction) * self.progress(episode)
    }
}

/// Per-episode record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpisodeStats {
    pub episode: usize,
    /// Discounted cost of the (exploring) training episode.
    #[serde(rename = "J")]
    pub j: f64,
    pub steps: usize,
    pub td_loss: f64,
    /// Noise-free evaluation cost when evaluated this episode.
    pub eval_j: Option<f64>,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingTrace {
    pub episodes: Vec<EpisodeStats>,
}

impl TrainingTrace {
    /// Writes `episode,J,td_loss,wall_ms` rows.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["episode", "J", "td_loss", "wall_ms"])?;
        for e in &self.episodes {
            w.write_record(&[
                e.episode.to_string(),
                e.j.to_string(),
                e.td_loss.to_string(),
                format!("{:.3}", e.wall_ms),
            ])?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Same trace ignoring wall-clock timings.
    pub fn same_outcome(&self, other: &Self) -> bool {
        self.episodes.len() == other.episodes.len()
            && self.episodes.iter().zip(&other.episodes).all(|(a, b)| {
                a.episode == b.episode
                    && a.j.to_bits() == b.j.to_bits()
                    && a.steps == b.steps
                    && a.td_loss.to_bits() == b.td_loss.to_bits()
                    && a.eval_j.map(f64::to_bits) == b.eval_j.map(f64::to_bits)
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepDiagnostics {
    /// Mean of `delta^2 / 2` over the batch, before the update.
    pub td_loss: f64,
    pub mean_abs_td: f64,
    pub action_grad_norm: f64,
}

/// One logged closed-loop rollout.
#[derive(Debug, Clone, PartialEq)]
pub struct Rollout {
    pub states: Vec<VehicleState>,
    pub controls: Vec<ControlInput>,
    pub costs: Vec<f64>,
    pub z_ref: Vec<f64>,
    pub diverged: bool,
}

impl Rollout {
    /// `sum gamma^(k-1) c_k`.
    pub fn discounted_cost(&self, gamma: f64) -> f64 {
        discounted(&self.costs, gamma)
    }

    /// Row `k` holds the state at `k dt`, the control applied from it, and
    /// the cost of arriving there. The last row repeats the final control.
    pub fn to_record(&self, dt: f64) -> TrajectoryRecord {
        let rows = self
            .states
            .iter()
            .enumerate()
            .map(|(k, s)| {
                let u = self
                    .controls
                    .get(k)
                    .or(self.controls.last())
                    .copied()
                    .unwrap_or(ControlInput::ZERO);
                TrajectoryRow {
                    t: k as f64 * dt,
                    x: s.x,
                    z: s.z,
                    theta: s.theta,
                    w: s.w,
                    q: s.q,
                    tau1: u.tau1,
                    tau2: u.tau2,
                    z_ref: self.z_ref[k],
                    cost: if k == 0 { 0.0 } else { self.costs[k - 1] },
                }
            })
            .collect();
        TrajectoryRecord { rows }
    }
}

pub fn discounted(costs: &[f64], gamma: f64) -> f64 {
    let mut g = 1.0;
    let mut j = 0.0;
    for c in costs {
        j += g * c;
        g *= gamma;
    }
    j
}

/// Exploratory action: `saturate(mu(s) + bounds * xi)` with `xi` drawn from
/// the exploration process.
pub fn act_explore(actor: &MlpParams, s: &Observation, noise: &mut OuProcess, env: &DepthEnv) -> Result<ControlInput> {
    let mu = actor.actor_forward(s.as_slice())?;
    let xi = noise.step();
    let b = env.vehicle().bounds();
    Ok(b.saturate(ControlInput::new(
        mu.tau1 + b.tau1_max * xi[0],
        mu.tau2 + b.tau2_max * xi[1],
    )))
}

/// Noise-free policy rollout from `start` over the environment's horizon.
pub fn rollout(actor: &MlpParams, env: &mut DepthEnv, start: VehicleState) -> Result<Rollout> {
    let mut obs = env.reset(start)?;
    let mut out = Rollout {
        states: vec![start],
        controls: Vec::new(),
        costs: Vec::new(),
        z_ref: vec![env.reference_depth(start.x)?],
        diverged: false,
    };
    loop {
        let u = actor.actor_forward(obs.as_slice())?;
        let step = env.step(u)?;
        let s = *env.state().expect("reset above");
        out.controls.push(step.applied);
        out.costs.push(step.cost);
        out.z_ref.push(env.reference_depth(s.x)?);
        out.states.push(s);
        obs = step.observation;
        if step.done {
            out.diverged = step.diverged;
            break;
        }
    }
    Ok(out)
}

/// Noise-free evaluation from the configured start, one episode per
/// disturbance seed. Returns the mean discounted cost and every rollout.
pub fn evaluate(
    actor: &MlpParams,
    env: &mut DepthEnv,
    disturbance_seeds: &[u64],
    gamma: f64,
) -> Result<(f64, Vec<Rollout>)> {
    let start = env.config().start;
    let mut rollouts = Vec::with_capacity(disturbance_seeds.len());
    for &seed in disturbance_seeds {
        env.reseed_disturbance(seed)?;
        rollouts.push(rollout(actor, env, start)?);
    }
    let mean = rollouts.iter().map(|r| r.discounted_cost(gamma)).sum::<f64>()
        / rollouts.len().max(1) as f64;
    Ok((mean, rollouts))
}

/// TD targets `y = c + gamma Q(s', mu(s'))`, or `y = c` for terminal
/// transitions.
pub fn td_targets(critic: &MlpParams, actor: &MlpParams, gamma: f64, batch: &[Transition]) -> Result<Vec<f64>> {
    batch
        .iter()
        .map(|t| {
            if t.terminal {
                return Ok(t.c);
            }
            let u = actor.actor_forward(&t.s_next)?;
            Ok(t.c + gamma * critic.critic_forward(&t.s_next, u)?)
        })
        .collect()
}

/// Mean `delta^2 / 2` over `batch` against fixed `targets`, and its gradient
/// with respect to the critic parameters.
pub fn critic_loss(critic: &MlpParams, batch: &[Transition], targets: &[f64]) -> Result<(f64, GradientBundle)> {
    let inv_n = 1.0 / batch.len().max(1) as f64;
    let mut grad = GradientBundle::zeros_like(critic);
    let mut loss = 0.0;
    for (t, y) in batch.iter().zip(targets) {
        let delta = y - critic.critic_forward(&t.s, t.u)?;
        let g = critic.critic_backward(&t.s, t.u)?;
        grad.add_scaled(&g, -delta * inv_n);
        loss += 0.5 * delta * delta * inv_n;
    }
    Ok((loss, grad))
}

/// Batch mean of `Q(s, mu(s))` and its gradient with respect to the actor
/// parameters.
pub fn actor_objective(actor: &MlpParams, critic: &MlpParams, states: &[Vec<f64>]) -> Result<(f64, GradientBundle)> {
    let inv_n = 1.0 / states.len().max(1) as f64;
    let mut grad = GradientBundle::zeros_like(actor);
    let mut q = 0.0;
    for s in states {
        let u = actor.actor_forward(s)?;
        q += critic.critic_forward(s, u)? * inv_n;
        let du = critic.critic_backward(s, u)?.input.expect("critic has an action input");
        let g = actor.actor_backward_chained(s, [du[0], du[1]])?;
        grad.add_scaled(&g, inv_n);
    }
    Ok((q, grad))
}

enum Optim {
    Sgd,
    Adam { critic: Box<Adam>, actor: Box<Adam> },
}

/// Owns the networks, replay cache, and all random streams of one run.
pub struct Trainer {
    config: TrainerConfig,
    env: DepthEnv,
    eval_env: DepthEnv,
    critic: MlpParams,
    actor: MlpParams,
    targets: Option<(MlpParams, MlpParams)>,
    optim: Optim,
    replay: ReplayCache,
    rng: ChaCha8Rng,
    exploration: OuProcess,
    critic_tape: Tape,
    target_critic_tape: Tape,
    actor_tape: Tape,
    critic_grads: GradientBundle,
    actor_grads: GradientBundle,
    batch: Vec<u64>,
    deltas: Vec<f64>,
    best: Option<(f64, MlpParams)>,
    trace: TrainingTrace,
    rate_scale: f64,
}

impl Trainer {
    pub fn new(env: DepthEnv, config: TrainerConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let obs_dim = env.layout().len();
        let bounds = env.vehicle().bounds();
        let mut critic = MlpParams::critic(obs_dim, 2, &config.critic_hidden, &mut rng)?;
        let mut actor = MlpParams::actor(obs_dim, &config.actor_hidden, bounds, &mut rng)?;
        if config.normalize_inputs {
            let scale = env.observation_scale();
            actor = actor.with_input_scale(scale.clone())?;
            let mut with_action = scale;
            with_action.extend_from_slice(&bounds.as_array());
            critic = critic.with_input_scale(with_action)?;
        }
        let exploration = OuProcess::new(config.exploration.clone(), rng.gen())?;
        let replay = ReplayCache::with_floor(
            config.replay_capacity,
            obs_dim,
            config.replay.into(),
            config.priority_floor,
        )?;
        let optim = match config.optimizer {
            OptimizerKind::Sgd => Optim::Sgd,
            OptimizerKind::Adam => Optim::Adam {
                critic: Box::new(Adam::new(&critic)),
                actor: Box::new(Adam::new(&actor)),
            },
        };
        let targets = (config.soft_target > 0.0).then(|| (critic.clone(), actor.clone()));
        Ok(Self {
            eval_env: env.clone(),
            env,
            critic_tape: Tape::for_network(&critic),
            target_critic_tape: Tape::for_network(&critic),
            actor_tape: Tape::for_network(&actor),
            critic_grads: GradientBundle::zeros_like(&critic),
            actor_grads: GradientBundle::zeros_like(&actor),
            critic,
            actor,
            targets,
            optim,
            replay,
            rng,
            exploration,
            batch: Vec::new(),
            deltas: Vec::new(),
            best: None,
            trace: TrainingTrace::default(),
            rate_scale: 1.0,
            config,
        })
    }

    pub fn config(&self) -> &TrainerConfig {
        &self.config
    }

    pub fn critic(&self) -> &MlpParams {
        &self.critic
    }

    pub fn actor(&self) -> &MlpParams {
        &self.actor
    }

    pub fn critic_mut(&mut self) -> &mut MlpParams {
        &mut self.critic
    }

    pub fn actor_mut(&mut self) -> &mut MlpParams {
        &mut self.actor
    }

    pub fn replay(&self) -> &ReplayCache {
        &self.replay
    }

    pub fn trace(&self) -> &TrainingTrace {
        &self.trace
    }

    /// Best evaluated actor so far, falling back to the live one.
    pub fn best_actor(&self) -> &MlpParams {
        self.best.as_ref().map_or(&self.actor, |(_, a)| a)
    }

    pub fn best_eval(&self) -> Option<f64> {
        self.best.as_ref().map(|(j, _)| *j)
    }

    /// Stores a transition with its priority from the current networks.
    pub fn push(&mut self, t: Transition) -> Result<u64> {
        let mut t = t;
        t.c *= self.config.cost_scale;
        let td = self.td_error(&t);
        self.replay.push_with_td(t, td)
    }

    fn actor_output(actor: &MlpParams, tape: &mut Tape, s: &[f64]) -> [f64; 2] {
        actor.forward_tape(s, None, tape);
        let y = tape.output();
        match &actor.role {
            crate::nn::Role::Actor { scale, offset } => {
                [offset[0] + scale[0] * y[0], offset[1] + scale[1] * y[1]]
            }
            crate::nn::Role::Critic { .. } => unreachable!("actor network has an actor role"),
        }
    }

    fn target(&mut self, t: &Transition) -> f64 {
        if t.terminal {
            return t.c;
        }
        let (critic, actor) = match &self.targets {
            Some((c, a)) => (c, a),
            None => (&self.critic, &self.actor),
        };
        let u = Self::actor_output(actor, &mut self.actor_tape, &t.s_next);
        critic.forward_tape(&t.s_next, Some(&u), &mut self.target_critic_tape);
        t.c + self.config.gamma * self.target_critic_tape.output()[0]
    }

    fn td_error(&mut self, t: &Transition) -> f64 {
        let y = self.target(t);
        self.critic
            .forward_tape(&t.s, Some(&t.u.as_array()), &mut self.critic_tape);
        y - self.critic_tape.output()[0]
    }

    /// One minibatch critic update and one actor update.
    pub fn train_step(&mut self) -> Result<StepDiagnostics> {
        let n = self.config.batch_size;
        let mut batch = std::mem::take(&mut self.batch);
        self.replay.sample_indices(n, &mut self.rng, &mut batch)?;
        let out = self.train_on(&batch);
        self.batch = batch;
        out
    }

    /// The update of [`Trainer::train_step`] on a given batch of replay
    /// indices (duplicates allowed).
    pub fn train_on(&mut self, batch: &[u64]) -> Result<StepDiagnostics> {
        if batch.is_empty() {
            return Err(Error::Replay("empty batch".into()));
        }
        if let Some(&i) = batch.iter().find(|&&i| self.replay.get(i).is_none()) {
            return Err(Error::Replay(format!("index {i} is not in the cache")));
        }
        let n = batch.len();
        self.deltas.clear();
        self.critic_grads.clear();
        let inv_n = 1.0 / n as f64;
        let mut loss = 0.0;
        let mut abs_td = 0.0;

        // TD targets come from the parameters as they were before this step.
        for &i in batch {
            let t = &self.replay.get(i).expect("sampled index is live").transition;
            let y = if t.terminal {
                t.c
            } else {
                let (critic, actor) = match &self.targets {
                    Some((c, a)) => (c, a),
                    None => (&self.critic, &self.actor),
                };
                let u = Self::actor_output(actor, &mut self.actor_tape, &t.s_next);
                critic.forward_tape(&t.s_next, Some(&u), &mut self.target_critic_tape);
                t.c + self.config.gamma * self.target_critic_tape.output()[0]
            };
            self.critic
                .forward_tape(&t.s, Some(&t.u.as_array()), &mut self.critic_tape);
            let delta = y - self.critic_tape.output()[0];
            // d/dw of delta^2 / 2 is -delta * dQ/dw.
            self.critic
                .backward_tape(&mut self.critic_tape, &[-delta * inv_n], Some(&mut self.critic_grads));
            self.deltas.push(delta);
            loss += 0.5 * delta * delta * inv_n;
            abs_td += delta.abs() * inv_n;
        }
        if !loss.is_finite() {
            return Err(Error::NonFinite {
                what: "TD loss".into(),
                component: "critic update".into(),
                value: loss,
            });
        }
        match &mut self.optim {
            Optim::Sgd => self
                .critic
                .apply_gradients(&self.critic_grads, self.config.critic_rate * self.rate_scale)?,
            Optim::Adam { critic, .. } => {
                critic.step(&mut self.critic, &self.critic_grads, self.config.critic_rate * self.rate_scale)?
            }
        }
        self.replay.refresh(batch, &self.deltas);

        // Actor: descend Q(s, mu(s)) along dQ/du evaluated at u = mu(s).
        self.actor_grads.clear();
        let mut grad_norm = 0.0;
        let scale = match &self.actor.role {
            crate::nn::Role::Actor { scale, .. } => [scale[0], scale[1]],
            crate::nn::Role::Critic { .. } => unreachable!("actor network has an actor role"),
        };
        for &i in batch {
            let s = &self.replay.get(i).expect("sampled index is live").transition.s;
            let u = Self::actor_output(&self.actor, &mut self.actor_tape, s);
            self.critic.forward_tape(s, Some(&u), &mut self.critic_tape);
            let du = self
                .critic
                .backward_tape(&mut self.critic_tape, &[1.0], None)
                .expect("critic has an action input");
            grad_norm += (du[0] * du[0] + du[1] * du[1]).sqrt() * inv_n;
            let seed = [scale[0] * du[0] * inv_n, scale[1] * du[1] * inv_n];
            self.actor
                .backward_tape(&mut self.actor_tape, &seed, Some(&mut self.actor_grads));
        }
        match &mut self.optim {
            Optim::Sgd => self
                .actor
                .apply_gradients(&self.actor_grads, self.config.actor_rate * self.rate_scale)?,
            Optim::Adam { actor, .. } => {
                actor.step(&mut self.actor, &self.actor_grads, self.config.actor_rate * self.rate_scale)?
            }
        }
        if let Some((tc, ta)) = self.targets.as_mut() {
            let tau = self.config.soft_target;
            tc.soft_update(&self.critic, tau);
            ta.soft_update(&self.actor, tau);
        }
        Ok(StepDiagnostics {
            td_loss: loss,
            mean_abs_td: abs_td,
            action_grad_norm: grad_norm,
        })
    }

    /// Runs one training episode and returns its stats.
    pub fn run_episode(&mut self, episode: usize) -> Result<EpisodeStats> {
        let started = Instant::now();
        self.exploration.set_sigma(self.config.sigma_at(episode));
        self.rate_scale = self.config.rate_scale_at(episode);
        self.exploration.reset();
        let dist_seed = self.rng.gen();
        self.env.reseed_disturbance(dist_seed)?;
        let mut obs = self.env.reset_random(&mut self.rng)?;
        let mut costs = Vec::with_capacity(self.config.steps_per_episode);
        let mut loss_sum = 0.0;
        let mut updates = 0usize;
        for step in 0..self.config.steps_per_episode {
            let u = act_explore(&self.actor, &obs, &mut self.exploration, &self.env)?;
            let out = self.env.step(u)?;
            costs.push(out.cost);
            self.push(Transition {
                s: obs.values,
                u: out.applied,
                c: out.cost,
                s_next: out.observation.values.clone(),
                terminal: out.diverged,
            })?;
            obs = out.observation;
            if self.replay.len() >= self.config.batch_size {
                let d = self.train_step().map_err(|e| Error::TrainingAborted {
                    episode,
                    step,
                    message: e.to_string(),
                })?;
                loss_sum += d.td_loss;
                updates += 1;
            }
            if out.done {
                break;
            }
        }
        if !self.actor.is_finite() || !self.critic.is_finite() {
            return Err(Error::TrainingAborted {
                episode,
                step: costs.len(),
                message: "network parameters became non-finite".into(),
            });
        }
        let mut stats = EpisodeStats {
            episode,
            j: discounted(&costs, self.config.gamma),
            steps: costs.len(),
            td_loss: if updates > 0 { loss_sum / updates as f64 } else { 0.0 },
            eval_j: None,
            wall_ms: 0.0,
        };
        let every = self.config.eval_every;
        if every > 0 && ((episode + 1) % every == 0 || episode + 1 == self.config.episodes) {
            let (j, _) = evaluate(&self.actor, &mut self.eval_env, &[self.config.seed], self.config.gamma)?;
            stats.eval_j = Some(j);
            if self.best.as_ref().map_or(true, |(b, _)| j < *b) {
                self.best = Some((j, self.actor.clone()));
            }
        }
        stats.wall_ms = started.elapsed().as_secs_f64() * 1e3;
        Ok(stats)
    }

    /// Runs every configured episode. On abort the trace so far is kept.
    pub fn train(&mut self) -> Result<&TrainingTrace> {
        for episode in self.trace.episodes.len()..self.config.episodes {
            let stats = self.run_episode(episode)?;
            self.trace.episodes.push(stats);
        }
        Ok(&self.trace)
    }

    pub fn save_checkpoints(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        self.best_actor().save(dir.join("actor.ckpt"))?;
        self.critic.save(dir.join("critic.ckpt"))?;
        let path = dir.join("training_trace.csv");
        self.trace.write_csv(&path)
    }
}

/// Convenience wrapper: trains and returns the best actor with the trace.
pub fn train(env: DepthEnv, config: TrainerConfig) -> Result<(MlpParams, TrainingTrace)> {
    let mut t = Trainer::new(env, config)?;
    t.train()?;
    Ok((t.best_actor().clone(), t.trace.clone()))
}
