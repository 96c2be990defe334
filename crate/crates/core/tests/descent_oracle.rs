//! Descent integrator against closed-form fall and a fine RK4 reference.

mod common;

use airdrop_core::descent::{
    accumulate_descent_coverage, omega_heuristic, simulate_descent, simulate_descent_from, DescentParams, OmegaBounds,
    SpiralParams,
};
use airdrop_core::geometry::{AreaOfInterest, LloydConfig, Point2};
use airdrop_core::mission::{drop_first_sample_grid, plan_drop_points, AgentKind};
use airdrop_core::sensing::{CameraModel, CoverageGrid, FootprintShape};
use common::{fall_time, SpiralModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn mav_params(dt: f64) -> DescentParams {
    DescentParams { terminal_velocity: 4.0, dt, record_interval: 0.1, ..DescentParams::default() }
}

fn spiral(omega: f64) -> SpiralParams {
    SpiralParams { amplitude: 0.35, omega, profile: Default::default() }
}

fn model(p: &DescentParams, s: &SpiralParams) -> SpiralModel {
    SpiralModel {
        g: p.g,
        vt: p.terminal_velocity,
        gain: p.planar_gain,
        drag: p.planar_drag,
        heading: p.heading,
        amplitude: s.amplitude,
        omega: s.omega,
    }
}

#[test]
fn touchdown_time_matches_closed_form() {
    for (h, vt) in [(20.0, 15.0), (150.0, 4.0), (900.0, 30.0), (3.0, 1.0)] {
        let p = DescentParams { terminal_velocity: vt, ..DescentParams::default() };
        let traj = simulate_descent_from(Point2::default(), h, None, &p).unwrap();
        let want = fall_time(h, p.g, vt);
        assert!((traj.touchdown_time - want).abs() < 1e-9 * want.max(1.0), "{} vs {want}", traj.touchdown_time);
        assert_eq!(traj.samples.last().unwrap().pose.z, 0.0);
    }
}

#[test]
fn early_fall_is_ballistic() {
    let p = DescentParams { record_interval: 0.0, dt: 0.001, ..DescentParams::default() };
    let t = 0.1 * p.terminal_velocity / p.g;
    let traj = simulate_descent_from(Point2::default(), 200.0, None, &p).unwrap();
    let s = traj.samples.iter().min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs())).unwrap();
    let fallen = 200.0 - s.pose.z;
    let free = 0.5 * p.g * s.t * s.t;
    assert!((fallen - free).abs() < 0.01 * free, "{fallen} vs {free}");
}

#[test]
fn spiral_matches_fine_reference() {
    for omega in [0.5, 2.0, 5.2, 12.0] {
        let p = mav_params(0.01);
        let s = spiral(omega);
        let traj = simulate_descent_from(Point2::new(10.0, -5.0), 150.0, Some(&s), &p).unwrap();
        let (x, y) = model(&p, &s).touchdown(10.0, -5.0, 150.0, 200_000);
        let err = traj.touchdown.distance(Point2::new(x, y));
        assert!(err < 0.5, "omega {omega}: {err} m from reference");
    }
}

#[test]
fn listed_spiral_case_matches_hundredfold_finer_step() {
    let p = DescentParams { terminal_velocity: 15.0, dt: 0.01, ..DescentParams::default() };
    let omega = omega_heuristic(1600.0 * 900.0 / 16.0, 200.0, &OmegaBounds::default());
    let s = spiral(omega);
    let traj = simulate_descent_from(Point2::default(), 200.0, Some(&s), &p).unwrap();
    let steps = (traj.touchdown_time / 1e-4).ceil() as usize;
    let (x, y) = model(&p, &s).touchdown(0.0, 0.0, 200.0, steps);
    assert!(traj.touchdown.distance(Point2::new(x, y)) < 0.5);
}

#[test]
fn first_order_convergence() {
    for omega in [0.5, 2.0, 5.2, 12.0] {
        let s = spiral(omega);
        let land = |dt: f64| simulate_descent_from(Point2::default(), 150.0, Some(&s), &mav_params(dt)).unwrap().touchdown;
        let reference = land(0.001);
        let errs: Vec<f64> = [0.04, 0.02, 0.01].iter().map(|&dt| land(dt).distance(reference)).collect();
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((1.5..=2.5).contains(&ratio), "omega {omega}: ratio {ratio} from {errs:?}");
        }
    }
}

#[test]
fn overlong_descent_is_rejected() {
    let p = DescentParams { terminal_velocity: 0.5, ..DescentParams::default() };
    assert!(simulate_descent_from(Point2::default(), 400.0, None, &p).is_err());
    assert!(simulate_descent_from(Point2::default(), 0.0, None, &p).is_err());
}

#[test]
fn mav_sees_more_than_a_static_sensor() {
    let area = AreaOfInterest::new(Point2::default(), 200.0, 200.0).unwrap();
    let camera = CameraModel::new(1.2, FootprintShape::Disk).unwrap();
    let p = DescentParams { terminal_velocity: 3.0, planar_gain: 2.0, ..DescentParams::default() };
    let s = SpiralParams { amplitude: 0.5, omega: 1.0, profile: Default::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    for _ in 0..10 {
        let start = Point2::new(rng.gen_range(60.0..140.0), rng.gen_range(60.0..140.0));
        let drop_z = rng.gen_range(40.0..80.0);
        let mut first = CoverageGrid::new(area, 1.0).unwrap();
        first.mark_disk(start, drop_z * camera.half_angle_tan());
        let mut mav = CoverageGrid::new(area, 1.0).unwrap();
        accumulate_descent_coverage(&simulate_descent_from(start, drop_z, Some(&s), &p).unwrap(), &camera, &mut mav, 2.0);
        let passive_traj = simulate_descent_from(start, drop_z, None, &p).unwrap();
        assert_eq!(passive_traj.touchdown, start);
        let mut passive = CoverageGrid::new(area, 1.0).unwrap();
        accumulate_descent_coverage(&passive_traj, &camera, &mut passive, 2.0);
        assert_eq!(passive, first);
        assert!(first.is_subset_of(&mav));
        assert!(mav.covered_cells() > first.covered_cells());
    }
}

#[test]
fn planned_drops_keep_first_sample_inside_mav_coverage() {
    let area = AreaOfInterest::new(Point2::default(), 200.0, 200.0).unwrap();
    let camera = CameraModel::new(1.2, FootprintShape::Disk).unwrap();
    let roster = vec![AgentKind::Mav; 4];
    let drops = plan_drop_points(&area, &roster, &camera, 5.0, 500.0, 3, &LloydConfig::default()).unwrap();
    let p = DescentParams { terminal_velocity: 3.0, planar_gain: 2.0, ..DescentParams::default() };
    let s = SpiralParams { amplitude: 0.5, omega: 1.0, profile: Default::default() };
    let mut first = CoverageGrid::new(area, 1.0).unwrap();
    drop_first_sample_grid(&drops, &camera, &mut first);
    let mut mav = CoverageGrid::new(area, 1.0).unwrap();
    for d in &drops {
        accumulate_descent_coverage(&simulate_descent(d, Some(&s), &p).unwrap(), &camera, &mut mav, 2.0);
    }
    assert!(first.is_subset_of(&mav));
}
