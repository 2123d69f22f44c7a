use auv_depth::dynamics::{ControlBounds, ControlInput};
mod common;

use auv_depth::nn::MlpParams;
use common::oracle_forward;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn close(analytic: f64, numeric: f64) -> bool {
    (analytic - numeric).abs() <= 1e-6 * analytic.abs().max(numeric.abs()) + 1e-6
}

fn state(seed: u64, n: usize) -> Vec<f64> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect()
}

/// Larger weights than the default init so the output layer is not negligible.
fn critic(seed: u64) -> MlpParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = MlpParams::critic(5, 2, &[12, 10, 6], &mut rng)
        .unwrap()
        .with_input_scale(vec![2.0, 1.0, 0.5, 1.5, 0.8, 4.0, 2.5])
        .unwrap();
    for w in c.layers.last_mut().unwrap().weights.iter_mut() {
        *w *= 100.0;
    }
    c
}

fn actor(seed: u64) -> MlpParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = MlpParams::actor(5, &[12, 6], ControlBounds::default(), &mut rng)
        .unwrap()
        .with_input_scale(vec![3.0, 1.0, 1.0, 0.5, 0.2])
        .unwrap();
    for w in a.layers.last_mut().unwrap().weights.iter_mut() {
        *w *= 200.0;
    }
    a
}

const H: f64 = 1e-5;

#[test]
fn forward_matches_oracle() {
    let c = critic(1);
    let a = actor(2);
    let s = state(3, 5);
    let q = c.critic_forward(&s, ControlInput::new(3.0, -2.0)).unwrap();
    assert!((q - oracle_forward(&c, &s, Some([3.0, -2.0]))[0]).abs() < 1e-12);
    let u = a.actor_forward(&s).unwrap();
    let o = oracle_forward(&a, &s, None);
    assert!((u.tau1 - o[0]).abs() < 1e-12 && (u.tau2 - o[1]).abs() < 1e-12);
}

#[test]
fn critic_parameter_gradients_match_finite_differences() {
    let c = critic(4);
    let s = state(5, 5);
    let u = [4.0, -1.5];
    let g = c.critic_backward(&s, ControlInput::new(u[0], u[1])).unwrap();
    let mut checked = 0;
    for l in 0..c.layers.len() {
        for i in (0..c.layers[l].weights.len()).step_by(7) {
            let mut p = c.clone();
            p.layers[l].weights[i] += H;
            let up = oracle_forward(&p, &s, Some(u))[0];
            p.layers[l].weights[i] -= 2.0 * H;
            let dn = oracle_forward(&p, &s, Some(u))[0];
            let fd = (up - dn) / (2.0 * H);
            assert!(close(g.weights[l][i], fd), "layer {l} w{i}: {} vs {fd}", g.weights[l][i]);
            checked += 1;
        }
        for i in 0..c.layers[l].bias.len() {
            let mut p = c.clone();
            p.layers[l].bias[i] += H;
            let up = oracle_forward(&p, &s, Some(u))[0];
            p.layers[l].bias[i] -= 2.0 * H;
            let dn = oracle_forward(&p, &s, Some(u))[0];
            let fd = (up - dn) / (2.0 * H);
            assert!(close(g.biases[l][i], fd), "layer {l} b{i}: {} vs {fd}", g.biases[l][i]);
        }
    }
    assert!(checked > 20);
}

#[test]
fn critic_action_gradient_matches_finite_differences() {
    let c = critic(6);
    let s = state(7, 5);
    let u = [-3.0, 2.5];
    let g = c.critic_backward(&s, ControlInput::new(u[0], u[1])).unwrap();
    let du = g.input.unwrap();
    for k in 0..2 {
        let mut up = u;
        up[k] += H;
        let mut dn = u;
        dn[k] -= H;
        let fd = (oracle_forward(&c, &s, Some(up))[0] - oracle_forward(&c, &s, Some(dn))[0])
            / (2.0 * H);
        assert!(close(du[k], fd), "action {k}: {} vs {fd}", du[k]);
    }
}

#[test]
fn chained_actor_gradient_matches_finite_differences() {
    let a = actor(8);
    let s = state(9, 5);
    let v = [0.7, -1.3];
    let g = a.actor_backward_chained(&s, v).unwrap();
    let objective = |p: &MlpParams| {
        let o = oracle_forward(p, &s, None);
        o[0] * v[0] + o[1] * v[1]
    };
    for l in 0..a.layers.len() {
        for i in (0..a.layers[l].weights.len()).step_by(5) {
            let mut p = a.clone();
            p.layers[l].weights[i] += H;
            let up = objective(&p);
            p.layers[l].weights[i] -= 2.0 * H;
            let fd = (up - objective(&p)) / (2.0 * H);
            assert!(close(g.weights[l][i], fd), "layer {l} w{i}: {} vs {fd}", g.weights[l][i]);
        }
    }
}

#[test]
fn full_dpg_chain_through_critic() {
    // d/dtheta Q(s, mu_theta(s)) computed by chaining dQ/du into the actor.
    let a = actor(10);
    let c = critic(11);
    let s = state(12, 5);
    let u = a.actor_forward(&s).unwrap();
    let du = c.critic_backward(&s, u).unwrap().input.unwrap();
    let g = a.actor_backward_chained(&s, [du[0], du[1]]).unwrap();
    let objective = |p: &MlpParams| {
        let o = oracle_forward(p, &s, None);
        oracle_forward(&c, &s, Some([o[0], o[1]]))[0]
    };
    for i in (0..a.layers[0].weights.len()).step_by(3) {
        let mut p = a.clone();
        p.layers[0].weights[i] += H;
        let up = objective(&p);
        p.layers[0].weights[i] -= 2.0 * H;
        let fd = (up - objective(&p)) / (2.0 * H);
        assert!(close(g.weights[0][i], fd), "w{i}: {} vs {fd}", g.weights[0][i]);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn actor_output_within_bounds(seed in 0u64..1000, scale in 0.0f64..1e3) {
        let mut a = actor(seed);
        for l in &mut a.layers {
            l.weights.iter_mut().for_each(|w| *w *= scale);
        }
        let s = state(seed + 1, 5);
        let u = a.actor_forward(&s).unwrap();
        prop_assert!(u.tau1.abs() <= 20.0 && u.tau2.abs() <= 10.0);
    }

    #[test]
    fn checkpoint_round_trip(seed in 0u64..1000) {
        let c = critic(seed);
        let bytes = c.to_bytes();
        let back = MlpParams::from_bytes(&bytes).unwrap();
        prop_assert_eq!(&back, &c);
        prop_assert_eq!(back.to_bytes(), bytes);
    }
}
