use auv_depth::dynamics::{ControlInput, Vehicle};
use auv_depth::env::{CostWeights, DepthEnv, EnvConfig};
use auv_depth::metrics::TrajectoryRecord;
use auv_depth::nn::MlpParams;
use auv_depth::noise::{OuParams, OuProcess};
use auv_depth::replay::{td_error, Transition};
use auv_depth::trainer::{
    act_explore, actor_objective, critic_loss, evaluate, td_targets, OptimizerKind, Trainer,
    TrainerConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn env() -> DepthEnv {
    DepthEnv::new(Vehicle::default(), EnvConfig::constant_depth()).unwrap()
}

fn small_config() -> TrainerConfig {
    TrainerConfig {
        episodes: 2,
        steps_per_episode: 40,
        batch_size: 8,
        critic_hidden: vec![16, 16, 8],
        actor_hidden: vec![16, 8],
        eval_every: 1,
        ..TrainerConfig::default()
    }
}

/// Transitions from a random-action rollout.
fn batch(n: usize, seed: u64) -> Vec<Transition> {
    let mut env = env();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut obs = env.reset_random(&mut rng).unwrap();
    (0..n)
        .map(|_| {
            let u = ControlInput::new(rng.gen_range(-20.0..20.0), rng.gen_range(-10.0..10.0));
            let out = env.step(u).unwrap();
            let t = Transition {
                s: obs.values.clone(),
                u: out.applied,
                c: out.cost * 0.01,
                s_next: out.observation.values.clone(),
                terminal: out.diverged,
            };
            obs = out.observation;
            t
        })
        .collect()
}

fn nets(seed: u64) -> (MlpParams, MlpParams) {
    let t = Trainer::new(
        env(),
        TrainerConfig {
            seed,
            ..small_config()
        },
    )
    .unwrap();
    (t.critic().clone(), t.actor().clone())
}

#[test]
fn gamma_zero_step_is_regression_toward_cost() {
    let (mut critic, actor) = nets(1);
    let b = batch(32, 2);
    let targets = td_targets(&critic, &actor, 0.0, &b).unwrap();
    for (y, t) in targets.iter().zip(&b) {
        assert_eq!(*y, t.c);
    }
    let mut last = f64::INFINITY;
    for _ in 0..100 {
        let (loss, g) = critic_loss(&critic, &b, &targets).unwrap();
        assert!(loss < last, "loss rose from {last} to {loss}");
        last = loss;
        critic.apply_gradients(&g, 1e-4).unwrap();
    }
}

#[test]
fn critic_steps_decrease_td_loss_with_frozen_targets() {
    let (mut critic, actor) = nets(3);
    let b = batch(64, 4);
    let targets = td_targets(&critic, &actor, 0.99, &b).unwrap();
    let mut last = f64::INFINITY;
    for _ in 0..200 {
        let (loss, g) = critic_loss(&critic, &b, &targets).unwrap();
        assert!(loss <= last, "loss rose from {last} to {loss}");
        last = loss;
        critic.apply_gradients(&g, 1e-5).unwrap();
    }
}

#[test]
fn actor_step_does_not_raise_batch_mean_q() {
    let (critic, mut actor) = nets(5);
    let states: Vec<Vec<f64>> = batch(64, 6).into_iter().map(|t| t.s).collect();
    let (q0, g) = actor_objective(&actor, &critic, &states).unwrap();
    actor.apply_gradients(&g, 1e-6).unwrap();
    let (q1, _) = actor_objective(&actor, &critic, &states).unwrap();
    assert!(q1 <= q0 + 1e-8, "mean Q rose from {q0} to {q1}");
}

#[test]
fn train_on_matches_the_update_formulas() {
    let cfg = TrainerConfig {
        optimizer: OptimizerKind::Sgd,
        cost_scale: 1.0,
        soft_target: 0.0,
        critic_rate: 1e-3,
        actor_rate: 1e-3,
        ..small_config()
    };
    let mut trainer = Trainer::new(env(), cfg.clone()).unwrap();
    let mut indices = Vec::new();
    for t in batch(12, 7) {
        indices.push(trainer.push(t).unwrap());
    }
    let picked = vec![indices[0], indices[3], indices[3], indices[7], indices[11]];
    let b: Vec<Transition> = picked
        .iter()
        .map(|&i| trainer.replay().get(i).unwrap().transition.clone())
        .collect();

    let (mut critic, mut actor) = (trainer.critic().clone(), trainer.actor().clone());
    let before = critic.clone();
    let targets = td_targets(&critic, &actor, cfg.gamma, &b).unwrap();
    let (_, gc) = critic_loss(&critic, &b, &targets).unwrap();
    critic.apply_gradients(&gc, cfg.critic_rate).unwrap();
    let states: Vec<Vec<f64>> = b.iter().map(|t| t.s.clone()).collect();
    let (_, ga) = actor_objective(&actor, &critic, &states).unwrap();
    actor.apply_gradients(&ga, cfg.actor_rate).unwrap();

    trainer.train_on(&picked).unwrap();
    let max_diff = |a: &MlpParams, b: &MlpParams| {
        a.layers
            .iter()
            .zip(&b.layers)
            .flat_map(|(x, y)| {
                x.weights
                    .iter()
                    .zip(&y.weights)
                    .chain(x.bias.iter().zip(&y.bias))
                    .map(|(p, q)| (p - q).abs())
                    .collect::<Vec<_>>()
            })
            .fold(0.0f64, f64::max)
    };
    assert!(max_diff(&critic, trainer.critic()) < 1e-12);
    assert!(max_diff(&actor, trainer.actor()) < 1e-12);

    // Refreshed priorities are |delta| + floor with the pre-update delta;
    // a duplicated index keeps the value of its last occurrence.
    for (k, &i) in picked.iter().enumerate() {
        if picked[k + 1..].contains(&i) {
            continue;
        }
        let delta = targets[k] - before.critic_forward(&b[k].s, b[k].u).unwrap();
        let p = trainer.replay().get(i).unwrap().priority;
        assert!((p - (delta.abs() + cfg.priority_floor)).abs() < 1e-12);
    }
}

#[test]
fn zero_critic_single_item_batch_gives_delta_equal_cost() {
    let cfg = TrainerConfig {
        batch_size: 1,
        soft_target: 0.0,
        ..small_config()
    };
    let mut trainer = Trainer::new(env(), cfg.clone()).unwrap();
    for l in trainer.critic_mut().layers.iter_mut() {
        l.weights.iter_mut().for_each(|w| *w = 0.0);
        l.bias.iter_mut().for_each(|w| *w = 0.0);
    }
    let t = batch(1, 9).remove(0);
    let c = t.c * cfg.cost_scale;
    let i = trainer.push(t).unwrap();
    assert!((trainer.replay().get(i).unwrap().priority - (c.abs() + cfg.priority_floor)).abs() < 1e-15);
    let d = trainer.train_on(&[i]).unwrap();
    assert!((d.mean_abs_td - c.abs()).abs() < 1e-15);
    assert!((trainer.replay().get(i).unwrap().priority - (c.abs() + cfg.priority_floor)).abs() < 1e-15);
}

#[test]
fn pushed_priority_uses_current_parameters() {
    let cfg = small_config();
    let mut trainer = Trainer::new(env(), cfg.clone()).unwrap();
    for t in batch(5, 10) {
        let mut scaled = t.clone();
        scaled.c *= cfg.cost_scale;
        let td = td_error(trainer.critic(), trainer.actor(), cfg.gamma, &scaled).unwrap();
        let i = trainer.push(t).unwrap();
        let p = trainer.replay().get(i).unwrap().priority;
        assert!((p - (td.abs() + cfg.priority_floor)).abs() < 1e-12);
    }
}

#[test]
fn batch_too_large_is_a_pure_rollout() {
    let cfg = TrainerConfig {
        episodes: 1,
        steps_per_episode: 5,
        batch_size: 100,
        ..small_config()
    };
    let mut trainer = Trainer::new(env(), cfg).unwrap();
    let (c0, a0) = (trainer.critic().clone(), trainer.actor().clone());
    let trace = trainer.train().unwrap().clone();
    assert_eq!(trace.episodes.len(), 1);
    assert_eq!(trace.episodes[0].steps, 5);
    assert_eq!(trainer.replay().len(), 5);
    assert_eq!(trainer.critic(), &c0);
    assert_eq!(trainer.actor(), &a0);
}

#[test]
fn same_seed_same_trace() {
    let run = |seed| {
        let mut t = Trainer::new(env(), TrainerConfig { seed, ..small_config() }).unwrap();
        t.train().unwrap();
        (t.trace().clone(), t.actor().clone())
    };
    let (a, pa) = run(11);
    let (b, pb) = run(11);
    let (c, _) = run(12);
    assert!(a.same_outcome(&b));
    assert_eq!(pa, pb);
    assert!(!a.same_outcome(&c));
}

#[test]
fn exploration_without_noise_is_the_policy() {
    let (_, actor) = nets(13);
    let env = env();
    let p = OuParams {
        sigma: 0.0,
        ..OuParams::default()
    };
    let mut noise = OuProcess::new(p, 0).unwrap();
    let mut e2 = env.clone();
    let obs = e2.reset_eval().unwrap();
    let u = act_explore(&actor, &obs, &mut noise, &env).unwrap();
    assert_eq!(u, actor.actor_forward(obs.as_slice()).unwrap());
}

#[test]
fn exploration_is_saturated() {
    let (_, actor) = nets(14);
    let env = env();
    let p = OuParams {
        sigma: 0.0,
        ..OuParams::default()
    };
    let mut noise = OuProcess::with_state(p, 0, [50.0, -50.0]).unwrap();
    let mut e2 = env.clone();
    let obs = e2.reset_eval().unwrap();
    let u = act_explore(&actor, &obs, &mut noise, &env).unwrap();
    assert_eq!(u, ControlInput::new(20.0, -10.0));
}

#[test]
fn exploration_noise_lag_one_autocorrelation() {
    let beta = 0.15;
    let p = OuParams {
        beta,
        sigma: 0.2,
        ..OuParams::default()
    };
    let mut ou = OuProcess::new(p, 21).unwrap();
    let xs: Vec<f64> = (0..100_000).map(|_| ou.step()[0]).collect();
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>();
    let cov = xs.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum::<f64>();
    let rho = cov / var;
    assert!((rho - (1.0 - beta)).abs() < 0.02, "lag-1 autocorrelation {rho}");
}

#[test]
fn evaluate_cost_recomputes_from_the_log() {
    let (_, actor) = nets(15);
    let mut e = env();
    let (j, rollouts) = evaluate(&actor, &mut e, &[3], 0.99).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("eval.csv");
    rollouts[0].to_record(0.1).write_csv(&path).unwrap();
    let rec = TrajectoryRecord::read_csv(&path).unwrap();
    let mut g = 1.0;
    let mut oracle = 0.0;
    for row in &rec.rows[1..] {
        oracle += g * row.cost;
        g *= 0.99;
    }
    assert!((j - oracle).abs() <= 1e-9 * j.abs());
}

#[test]
fn zero_cost_environment_has_zero_j() {
    let (_, actor) = nets(16);
    let cfg = EnvConfig {
        cost: CostWeights::zero(),
        ..EnvConfig::constant_depth()
    };
    let mut e = DepthEnv::new(Vehicle::default(), cfg).unwrap();
    let (j, _) = evaluate(&actor, &mut e, &[0, 1], 0.99).unwrap();
    assert_eq!(j, 0.0);
}
