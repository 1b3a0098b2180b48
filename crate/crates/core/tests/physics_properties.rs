use auv_core::dynamics::{coriolis_wrench, mass_matrix, BodyState, VehicleModel, VehicleParams};
use auv_core::reference::sample_uniform_rotation;
use auv_core::so3::{quat_angle, Vec3};
use nalgebra::{Matrix6, Vector6};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random physically plausible vehicle: default scaled per-entry, with a random
/// symmetric PSD added-mass coupling and neutral buoyancy.
fn random_params(rng: &mut ChaCha8Rng) -> VehicleParams {
    let mut p = VehicleParams::default();
    let mut f = |lo: f64, hi: f64| rng.random_range(lo..hi);
    p.mass_kg *= f(0.5, 2.0);
    for i in 0..3 {
        p.inertia_kg_m2[i][i] *= f(0.5, 2.0);
    }
    let a = Matrix6::from_fn(|_, _| f(-0.3, 0.3));
    let coupling = a * a.transpose();
    for i in 0..6 {
        for j in 0..6 {
            p.added_mass[i][j] += coupling[(i, j)];
        }
        p.lin_damping[i] *= f(0.5, 2.0);
        p.quad_damping[i] *= f(0.5, 2.0);
    }
    p.weight_n = p.mass_kg * 9.81;
    p.buoyancy_n = p.weight_n;
    p.r_cb_m = Vec3::new(f(-0.01, 0.01), f(-0.01, 0.01), f(-0.03, 0.0));
    p
}

fn random_state(rng: &mut ChaCha8Rng) -> BodyState {
    let mut f = |s: f64| rng.random_range(-s..s);
    let v = Vec3::new(f(1.0), f(1.0), f(1.0));
    let omega = Vec3::new(f(1.5), f(1.5), f(1.5));
    BodyState { q: sample_uniform_rotation(rng), v, omega, p: Vec3::ZERO }
}

#[test]
fn coriolis_is_workless_for_vehicle_mass_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    for _ in 0..1000 {
        let m = mass_matrix(&random_params(&mut rng)).unwrap();
        let nu = Vector6::from_fn(|_, _| rng.random_range(-2.0..2.0));
        assert!(nu.dot(&coriolis_wrench(&m, &nu)).abs() <= 1e-10);
    }
}

#[test]
fn energy_non_increasing_without_actuation() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let dt = 0.01;
    for _ in 0..100 {
        let model = VehicleModel::new(random_params(&mut rng)).unwrap();
        let mut s = random_state(&mut rng);
        let mut e = model.energy(&s);
        for _ in 0..500 {
            s = model.step(&s, &[0.0; 6], dt).unwrap().0;
            let e_next = model.energy(&s);
            assert!(e_next <= e + 1e-6 * e.abs(), "energy rose {e} -> {e_next}");
            e = e_next;
        }
    }
}

#[test]
fn quaternion_norm_drift_bounded() {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let model = VehicleModel::new(VehicleParams::default()).unwrap();
    let mut s = random_state(&mut rng);
    for k in 0..5000 {
        let a = [0.3 * (k as f64 * 0.01).sin(), 0.2, -0.1, 0.5, -0.4, 0.3];
        s = model.step(&s, &a, 0.01).unwrap().0;
        assert!((s.q.norm() - 1.0).abs() <= 1e-9);
    }
}

fn rollout(model: &VehicleModel, s0: BodyState, dt: f64, t_end: f64) -> BodyState {
    let steps = (t_end / dt).round() as usize;
    let mut s = s0;
    for k in 0..steps {
        let t = k as f64 * dt;
        // piecewise-smooth excitation independent of dt
        let a = [0.4 * (0.7 * t).sin(), -0.3, 0.2 * (1.3 * t).cos(), 0.2, -0.3 * (0.5 * t).sin(), 0.25];
        s = model.step(&s, &a, dt).unwrap().0;
    }
    s
}

fn state_error(a: &BodyState, b: &BodyState) -> f64 {
    (a.v - b.v).norm() + (a.omega - b.omega).norm() + quat_angle(a.q, b.q) + (a.p - b.p).norm()
}

#[test]
fn integrator_converges_at_first_order() {
    let model = VehicleModel::new(VehicleParams::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let s0 = random_state(&mut rng);
    let base = 0.02;
    let reference = rollout(&model, s0, base / 64.0, 5.0);
    let errors: Vec<f64> = [base, base / 2.0, base / 4.0, base / 8.0]
        .iter()
        .map(|&dt| state_error(&rollout(&model, s0, dt, 5.0), &reference))
        .collect();
    for w in errors.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((0.8..1.3).contains(&order), "observed order {order}, errors {errors:?}");
    }
}
