//! Closed-loop evaluation of a trained policy on a scenario.

use auv_core::dynamics::{BodyState, VehicleModel, VehicleParams};
use auv_core::env::{observe, EnvConfig, Integrals, ACT_DIM};
use auv_core::reference::ReferenceState;
use auv_core::guidance::{cross_track_error, los_velocity, GuidanceState};
use auv_core::so3::{quat_angle, quat_error, rotate_vector, UnitQuat};
use auv_ppo::policy::{policy_forward, PolicySnapshot};

use crate::error::HarnessError;
use crate::metrics::MetricsRecord;
use crate::scenario::{course_attitude, ScenarioSpec};

/// Rolls out the deterministic policy (tanh mean, no sampling) under LOS
/// guidance and the scenario's attitude schedule. One record per control step;
/// stops when the last waypoint is reached or the time budget runs out.
pub fn run_scenario(
    policy: &PolicySnapshot,
    scenario: &ScenarioSpec,
    env: &EnvConfig,
    vehicle: &VehicleParams,
    seed: u64,
) -> Result<Vec<MetricsRecord>, HarnessError> {
    let params = scenario.perturbation.apply(vehicle)?;
    let model = VehicleModel::new(params).map_err(|e| HarnessError::Input(format!("vehicle: {e}")))?;
    let path = &scenario.path;
    let fixed = scenario.segment_attitudes(seed);
    let dt = env.dt_control();
    let steps = (scenario.max_duration_s / dt).ceil() as usize;

    let mut state = BodyState {
        q: scenario.initial_attitude(),
        p: scenario.initial_position_m.unwrap_or(path.waypoints[0]),
        ..BodyState::default()
    };
    let mut gs = GuidanceState::default();
    let mut integrals = Integrals::default();
    let mut held_q_d = state.q;

    // the reference is a function of the current state and guidance phase
    let reference = |state: &BodyState, gs: &mut GuidanceState, held: &mut UnitQuat| {
        let cmd = los_velocity(state.p, state.q, path, *gs);
        *gs = cmd.state;
        let q_d = match &fixed {
            Some(qs) => qs[gs.segment.min(qs.len() - 1)],
            None => course_attitude(cmd.v_world).unwrap_or(*held),
        };
        *held = q_d;
        ReferenceState { v_d: cmd.v_body, q_d }
    };

    let mut current = reference(&state, &mut gs, &mut held_q_d);
    let mut obs = observe(&state, &current, integrals.z_v, integrals.z_q);
    let mut records = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let (mean, _) = policy_forward(policy, obs.as_slice()).map_err(|e| HarnessError::Input(e.to_string()))?;
        let action: [f64; ACT_DIM] = mean.map(|a| a.clamp(-1.0, 1.0));
        records.push(record(k as f64 * dt, &state, &current, &action, gs, path_cross_track(&state, scenario, gs)));
        if gs.finished || k == steps {
            break;
        }
        for _ in 0..env.control_decimation {
            state = model
                .step(&state, &action, env.dt_physics_s)
                .map_err(|e| HarnessError::Runtime(format!("vehicle diverged at t = {:.2} s: {e}", k as f64 * dt)))?
                .0;
        }
        if state.nu().iter().any(|x| x.abs() > env.nu_max) {
            return Err(HarnessError::Runtime(format!("velocity bound exceeded at t = {:.2} s", (k + 1) as f64 * dt)));
        }
        current = reference(&state, &mut gs, &mut held_q_d);
        let q_e = quat_error(current.q_d, state.q);
        integrals.accumulate(state.v - current.v_d, q_e, dt, env.z_max);
        obs = observe(&state, &current, integrals.z_v, integrals.z_q);
    }
    Ok(records)
}

fn path_cross_track(state: &BodyState, scenario: &ScenarioSpec, gs: GuidanceState) -> f64 {
    cross_track_error(state.p, &scenario.path, gs)
}

fn record(
    t: f64,
    s: &BodyState,
    r: &ReferenceState,
    a: &[f64; ACT_DIM],
    gs: GuidanceState,
    cross_track: f64,
) -> MetricsRecord {
    let v_e = s.v - r.v_d;
    let [qdw, qdx, qdy, qdz] = r.q_d.coords();
    let [qw, qx, qy, qz] = s.q.coords();
    MetricsRecord {
        t_s: t,
        segment: gs.segment,
        finished: gs.finished,
        v_d_x: r.v_d.x,
        v_d_y: r.v_d.y,
        v_d_z: r.v_d.z,
        v_x: s.v.x,
        v_y: s.v.y,
        v_z: s.v.z,
        v_e_x: v_e.x,
        v_e_y: v_e.y,
        v_e_z: v_e.z,
        q_d_w: qdw,
        q_d_x: qdx,
        q_d_y: qdy,
        q_d_z: qdz,
        q_w: qw,
        q_x: qx,
        q_y: qy,
        q_z: qz,
        att_err_deg: quat_angle(r.q_d, s.q).to_degrees(),
        omega_x: s.omega.x,
        omega_y: s.omega.y,
        omega_z: s.omega.z,
        a_0: a[0],
        a_1: a[1],
        a_2: a[2],
        a_3: a[3],
        a_4: a[4],
        a_5: a[5],
        cross_track_m: cross_track,
        p_x: s.p.x,
        p_y: s.p.y,
        p_z: s.p.z,
    }
}

/// World-frame velocity of a record, for plotting.
pub fn world_velocity(r: &MetricsRecord) -> Result<[f64; 3], HarnessError> {
    let q = UnitQuat::new(r.q_w, r.q_x, r.q_y, r.q_z).map_err(|e| HarnessError::Input(e.to_string()))?;
    Ok(rotate_vector(q, auv_core::so3::Vec3::new(r.v_x, r.v_y, r.v_z)).to_array())
}
