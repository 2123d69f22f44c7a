mod common;

use auv_depth::baselines::lqi::{solve_lqi, LinearPlant, LqiController, LqiWeights};
use auv_depth::baselines::nmpc::{cost_and_gradient, horizon_cost, EulerVehicle, LinearModel, NmpcConfig, NmpcController};
use auv_depth::baselines::riccati::{care_residual, is_hurwitz, is_stabilizable, solve_care, CareOptions};
use auv_depth::dynamics::{ControlBounds, Vehicle, VehicleState};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn care_on_random_stabilizable_systems() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut solved = 0;
    while solved < 20 {
        let n = rng.gen_range(2..=6);
        let m = rng.gen_range(1..=n.min(3));
        let a = common::random_matrix(&mut rng, n, n);
        let b = common::random_matrix(&mut rng, n, m);
        if !is_stabilizable(&a, &b) {
            continue;
        }
        // Keep a controllability margin: near-uncontrollable draws give
        // |X| in the thousands, where 1e-10 is below the rounding floor of
        // the residual evaluation itself.
        if common::controllability_margin(&a, &b) < 0.1 {
            continue;
        }
        let l = common::random_matrix(&mut rng, n, n);
        let q = l.transpose() * l + DMatrix::identity(n, n) * 0.1;
        let lr = common::random_matrix(&mut rng, m, m);
        let r = lr.transpose() * lr + DMatrix::identity(m, m);
        let sol = solve_care(&a, &b, &q, &r, &CareOptions::default()).unwrap();
        let g = &b * r.clone().try_inverse().unwrap() * b.transpose();
        let res = care_residual(&a, &g, &q, &sol.x);
        assert!(res < 1e-10, "system {solved}: residual {res:e}");
        assert!((&sol.x - sol.x.transpose()).norm() < 1e-12);
        assert!(sol.x.clone().symmetric_eigen().eigenvalues.iter().all(|&e| e > -1e-9));
        assert!(is_hurwitz(&(&a - &b * &sol.k)));
        solved += 1;
    }
}

#[test]
fn scalar_care_matches_closed_form() {
    for (a, b, q, r) in [(1.0, 1.0, 1.0, 1.0), (-0.5, 2.0, 3.0, 0.1), (2.5, 0.3, 0.7, 4.0)] {
        let sol = solve_care(
            &DMatrix::from_element(1, 1, a),
            &DMatrix::from_element(1, 1, b),
            &DMatrix::from_element(1, 1, q),
            &DMatrix::from_element(1, 1, r),
            &CareOptions::default(),
        )
        .unwrap();
        // (b^2 / r) x^2 - 2 a x - q = 0, positive root.
        let want = (a + (a * a + b * b * q / r).sqrt()) * r / (b * b);
        assert!((sol.x[(0, 0)] - want).abs() <= 1e-12 * want.max(1.0), "{} vs {want}", sol.x[(0, 0)]);
        assert!((sol.k[(0, 0)] - b * want / r).abs() <= 1e-12 * (b * want / r).abs().max(1.0));
    }
}

#[test]
fn lqi_on_published_plant_is_stable_with_small_residual() {
    let plant = LinearPlant::remus();
    let gain = solve_lqi(&plant, &LqiWeights::default()).unwrap();
    assert!(gain.residual < 1e-10);
    let eig = gain.closed_loop(&plant).complex_eigenvalues();
    assert!(eig.iter().all(|e| e.re < 0.0), "{eig:?}");
    let spec_weights = LqiWeights {
        q_diag: [1.0, 1.0, 10.0, 10.0, 100.0, 100.0],
        r_diag: [0.01, 0.01],
    };
    let g2 = solve_lqi(&plant, &spec_weights).unwrap();
    assert!(g2.residual < 1e-10);
    assert!(is_hurwitz(&g2.closed_loop(&plant)));
}

/// Sample-and-hold LQI on the Euler-discretized linear plant removes the
/// depth offset with no steady-state error.
#[test]
fn lqi_tracks_step_on_linear_plant_without_offset() {
    let plant = LinearPlant::remus();
    let gain = solve_lqi(&plant, &LqiWeights::default()).unwrap();
    let wide = ControlBounds {
        tau1_max: 1e9,
        tau2_max: 1e9,
    };
    let mut ctl = LqiController::new(gain.clone(), wide, 0.1);
    let mut chi = DVector::from_row_slice(&[0.0, 0.0, 2.0, 0.0]);
    let mut eps = [0.0; 2];
    for _ in 0..20_000 {
        let s = VehicleState {
            x: 0.0,
            z: chi[2],
            theta: chi[3],
            w: chi[0],
            q: chi[1],
        };
        let u = ctl.control(&s, [8.0, 0.0]);
        // Oracle law, written independently of the controller.
        let e = DVector::from_row_slice(&[chi[0], chi[1], chi[2] - 8.0, chi[3]]);
        let want = &gain.k_chi * e + &gain.k_eps * DVector::from_row_slice(&eps);
        assert!((u.tau1 - want[0]).abs() <= 1e-12 * want[0].abs().max(1.0));
        assert!((u.tau2 - want[1]).abs() <= 1e-12 * want[1].abs().max(1.0));
        eps[0] += 0.1 * (8.0 - chi[2]);
        eps[1] += 0.1 * (0.0 - chi[3]);
        let du = DVector::from_row_slice(&[u.tau1, u.tau2]);
        chi = &chi + (&plant.a * &chi + &plant.b * du) * 0.1;
    }
    assert!((chi[2] - 8.0).abs() < 1e-6, "final depth {}", chi[2]);
    assert!(chi[3].abs() < 1e-6);
}

fn diag(v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_row_slice(v))
}

#[test]
fn nmpc_matches_finite_horizon_lqr_on_linear_plants() {
    let cfg = NmpcConfig {
        horizon: 200,
        q_diag: [1.0, 0.5, 2.0, 1.0],
        r_diag: [0.1, 0.2],
        p0_diag: [1.0, 1.0, 1.0, 1.0],
        max_sweeps: 20_000,
        tolerance: 1e-10,
        ..NmpcConfig::default()
    };
    let wide = ControlBounds {
        tau1_max: 1e9,
        tau2_max: 1e9,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let model = common::stable_linear_model(&mut rng);
        let ad = DMatrix::from_row_slice(4, 4, &model.a);
        let bd = DMatrix::from_row_slice(4, 2, &model.b);
        let k0 = common::finite_horizon_gain(&ad, &bd, &diag(&cfg.q_diag), &diag(&cfg.r_diag), &diag(&cfg.p0_diag), 200);
        let x0: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-2.0..2.0));
        let mut ctl = NmpcController::new(model, cfg.clone(), wide).unwrap();
        let u = ctl.control_chi(x0, [0.0; 4]);
        let want = -&k0 * DVector::from_row_slice(&x0);
        assert!(
            (u.tau1 - want[0]).abs() < 1e-3 && (u.tau2 - want[1]).abs() < 1e-3,
            "NMPC ({}, {}) vs LQR ({}, {})",
            u.tau1,
            u.tau2,
            want[0],
            want[1]
        );
    }
}

fn check_adjoint<M: auv_depth::baselines::nmpc::DiscreteModel>(model: &M, seed: u64) {
    let cfg = NmpcConfig {
        horizon: 5,
        ..NmpcConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x0 = [rng.gen_range(-0.5..0.5), rng.gen_range(-0.3..0.3), rng.gen_range(0.0..10.0), rng.gen_range(-0.5..0.5)];
    let x_ref = [0.0, 0.0, 8.0, 0.0];
    let u: Vec<[f64; 2]> = (0..5).map(|_| [rng.gen_range(-20.0..20.0), rng.gen_range(-10.0..10.0)]).collect();
    let mut g = Vec::new();
    cost_and_gradient(model, &cfg, &x0, &x_ref, &u, &mut g);
    let h = 1e-3;
    for k in 0..5 {
        for i in 0..2 {
            let at = |d: f64| {
                let mut v = u.clone();
                v[k][i] += d;
                horizon_cost(model, &cfg, &x0, &x_ref, &v)
            };
            let fd = (-at(2.0 * h) + 8.0 * at(h) - 8.0 * at(-h) + at(-2.0 * h)) / (12.0 * h);
            let tol = 1e-6 * g[k][i].abs().max(fd.abs()).max(1e-4);
            assert!((g[k][i] - fd).abs() <= tol, "u[{k}][{i}]: adjoint {} vs fd {fd}", g[k][i]);
        }
    }
}

#[test]
fn nmpc_adjoint_gradient_matches_finite_differences() {
    for seed in 0..10 {
        check_adjoint(&EulerVehicle { vehicle: Vehicle::default(), dt: 0.1 }, seed);
        let plant = LinearPlant::remus();
        let a: [f64; 16] = std::array::from_fn(|i| plant.a[(i / 4, i % 4)]);
        let b: [f64; 8] = std::array::from_fn(|i| plant.b[(i / 2, i % 2)]);
        check_adjoint(&LinearModel::euler(&a, &b, 0.1), 100 + seed);
    }
}

#[test]
fn nmpc_warm_start_needs_fewer_sweeps_than_cold_start() {
    let model = EulerVehicle { vehicle: Vehicle::default(), dt: 0.1 };
    let x_ref = [0.0, 0.0, 8.0, 0.0];
    let mut warm = NmpcController::new(model.clone(), NmpcConfig::default(), ControlBounds::default()).unwrap();
    let mut x = [0.0, 0.0, 2.0, 0.0];
    let (mut warm_sweeps, mut cold_sweeps) = (0, 0);
    for k in 0..20 {
        let u = warm.control_chi(x, x_ref);
        if k > 0 {
            warm_sweeps += warm.last_plan().unwrap().sweeps;
            let mut cold = NmpcController::new(model.clone(), NmpcConfig::default(), ControlBounds::default()).unwrap();
            cold.control_chi(x, x_ref);
            cold_sweeps += cold.last_plan().unwrap().sweeps;
        }
        x = auv_depth::baselines::nmpc::DiscreteModel::step(&model, &x, &u.as_array());
    }
    assert!(warm_sweeps < cold_sweeps, "warm {warm_sweeps} vs cold {cold_sweeps}");
    warm.reset();
    assert!(warm.last_plan().is_none());
}
