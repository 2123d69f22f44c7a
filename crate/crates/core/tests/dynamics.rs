mod common;

use std::f64::consts::PI;

use auv_depth::dynamics::{normalize_angle, ControlBounds, ControlInput, HydroParams, Vehicle, VehicleState};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * b.abs().max(1.0)
}

fn assert_states_match(got: &VehicleState, want: &VehicleState) {
    for (name, a, b) in [
        ("x", got.x, want.x),
        ("z", got.z, want.z),
        ("theta", got.theta, want.theta),
        ("w", got.w, want.w),
        ("q", got.q, want.q),
    ] {
        assert!(close(a, b), "{name}: {a} vs oracle {b}");
    }
}

fn random_state(rng: &mut impl Rng) -> VehicleState {
    VehicleState {
        x: rng.gen_range(-100.0..100.0),
        z: rng.gen_range(-10.0..60.0),
        theta: rng.gen_range(-PI..PI),
        w: rng.gen_range(-2.0..2.0),
        q: rng.gen_range(-1.0..1.0),
    }
}

#[test]
fn euler_steps_match_oracle_on_default_vehicle() {
    let v = Vehicle::default();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..10_000 {
        let s = random_state(&mut rng);
        let tau = [rng.gen_range(-30.0..30.0), rng.gen_range(-15.0..15.0)];
        let d = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let got = v.step(&s, ControlInput::new(tau[0], tau[1]), d, 0.1).unwrap();
        let want = common::remus_euler_step(v.params(), 2.0, [20.0, 10.0], &s, tau, d, 0.1);
        assert_states_match(&got, &want);
    }
}

#[test]
fn euler_steps_match_oracle_with_offset_centers_and_buoyancy() {
    let p = HydroParams {
        x_g: 0.03,
        x_b: -0.02,
        z_b: 0.01,
        weight: 305.0,
        ..HydroParams::default()
    };
    let v = Vehicle::new(p.clone(), 1.5, ControlBounds::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..2_000 {
        let s = random_state(&mut rng);
        let tau = [rng.gen_range(-25.0..25.0), rng.gen_range(-12.0..12.0)];
        let dt = rng.gen_range(0.01..0.2);
        let got = v.step(&s, ControlInput::new(tau[0], tau[1]), [0.0; 2], dt).unwrap();
        let want = common::remus_euler_step(&p, 1.5, [20.0, 10.0], &s, tau, [0.0; 2], dt);
        assert_states_match(&got, &want);
    }
}

#[test]
fn step_is_derivatives_plus_euler() {
    let v = Vehicle::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..1_000 {
        let s = random_state(&mut rng);
        let u = v.bounds().saturate(ControlInput::new(rng.gen_range(-30.0..30.0), rng.gen_range(-15.0..15.0)));
        let d = v.derivatives(&s, u, [0.1, -0.2]).unwrap();
        let next = v.step(&s, u, [0.1, -0.2], 0.1).unwrap();
        assert_eq!(next.x, s.x + 0.1 * d[0]);
        assert_eq!(next.z, s.z + 0.1 * d[1]);
        assert_eq!(next.theta, normalize_angle(s.theta + 0.1 * d[2]));
        assert_eq!(next.w, s.w + 0.1 * d[3]);
        assert_eq!(next.q, s.q + 0.1 * d[4]);
    }
}

#[test]
fn neutral_level_trim_is_a_fixed_point() {
    let p = HydroParams {
        z_g: 0.0,
        ..HydroParams::default()
    };
    let v = Vehicle::new(p, 2.0, ControlBounds::default()).unwrap();
    for dt in [1e-3, 0.1, 1.0] {
        let s = VehicleState::at_depth(7.0);
        let next = v.step(&s, ControlInput::ZERO, [0.0; 2], dt).unwrap();
        assert_eq!((next.z, next.theta, next.w, next.q), (7.0, 0.0, 0.0, 0.0));
    }
}

#[test]
fn rejects_bad_dt_and_non_finite_state() {
    let v = Vehicle::default();
    let s = VehicleState::at_depth(1.0);
    assert!(v.step(&s, ControlInput::ZERO, [0.0; 2], 0.0).is_err());
    assert!(v.step(&s, ControlInput::ZERO, [0.0; 2], f64::NAN).is_err());
    let bad = VehicleState { w: f64::INFINITY, ..s };
    assert!(v.step(&bad, ControlInput::ZERO, [0.0; 2], 0.1).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn saturation_is_bounded_and_idempotent(t1 in -1e6f64..1e6, t2 in -1e6f64..1e6) {
        let b = ControlBounds::default();
        let once = b.saturate(ControlInput::new(t1, t2));
        prop_assert!(b.contains(once));
        prop_assert_eq!(b.saturate(once), once);
    }

    #[test]
    fn theta_stays_in_half_open_interval(q in 0.0f64..3.0, dt in 0.01f64..0.5) {
        let v = Vehicle::default();
        let s = VehicleState { theta: PI - 0.01, q, ..VehicleState::at_depth(5.0) };
        let next = v.step(&s, ControlInput::ZERO, [0.0; 2], dt).unwrap();
        prop_assert!(next.theta > -PI && next.theta <= PI);
    }

    #[test]
    fn normalize_angle_is_a_wrap(theta in -100.0f64..100.0) {
        let t = normalize_angle(theta);
        prop_assert!(t > -PI && t <= PI);
        prop_assert!((t.sin() - theta.sin()).abs() < 1e-9 && (t.cos() - theta.cos()).abs() < 1e-9);
    }

    #[test]
    fn step_is_deterministic(seed in 0u64..1000) {
        let v = Vehicle::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_state(&mut rng);
        let u = ControlInput::new(rng.gen_range(-20.0..20.0), rng.gen_range(-10.0..10.0));
        let a = v.step(&s, u, [0.3, 0.1], 0.1).unwrap();
        let b = v.step(&s, u, [0.3, 0.1], 0.1).unwrap();
        prop_assert_eq!(a, b);
    }
}
