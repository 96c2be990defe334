//! Randomized invariants across every module.

use std::f64::consts::TAU;

use airdrop_core::descent::{simulate_descent_from, DescentParams, SpiralParams};
use airdrop_core::dubins::{dubins_airplane_path, dubins_car_path, Pose4, VehicleLimits};
use airdrop_core::fmt::round9;
use airdrop_core::geometry::{convex_contains, lloyd_relax, voronoi_partition, AreaOfInterest, LloydConfig, Point2, SiteInit};
use airdrop_core::mgv::{
    drive_path, enu_to_wgs84, enumerate_assignment, hungarian_assignment, wgs84_to_enu, GeodeticCoord, Point3,
};
use airdrop_core::sensing::CoverageGrid;
use airdrop_core::tsp::{iterated_k_opt, nearest_neighbor_tour, CostMatrix, KOptConfig};
use proptest::prelude::*;

fn area() -> impl Strategy<Value = AreaOfInterest> {
    (-500.0..500.0f64, -500.0..500.0f64, 50.0..2000.0f64, 50.0..2000.0f64)
        .prop_map(|(x, y, w, h)| AreaOfInterest::new(Point2::new(x, y), w, h).unwrap())
}

fn pose(span: f64) -> impl Strategy<Value = Pose4> {
    (-span..span, -span..span, 0.0..600.0f64, 0.0..TAU).prop_map(|(x, y, z, psi)| Pose4::new(x, y, z, psi))
}

fn limits() -> impl Strategy<Value = VehicleLimits> {
    (5.0..80.0f64, 0.05..0.5f64).prop_map(|(r, g)| VehicleLimits { r_min: r, gamma_max: g, airspeed: 20.0 })
}

fn rigid(p: &Pose4, rot: f64, tx: f64, ty: f64) -> Pose4 {
    let (s, c) = rot.sin_cos();
    Pose4::new(c * p.x - s * p.y + tx, s * p.x + c * p.y + ty, p.z, p.psi + rot)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn voronoi_cells_tile_the_area(a in area(), n in 1usize..20, seed in any::<u64>()) {
        let sites = a.sample_uniform(n, seed);
        let part = voronoi_partition(&sites, &a).unwrap();
        let total: f64 = part.cells.iter().map(|c| c.area).sum();
        prop_assert!((total - a.area()).abs() <= 1e-9 * a.area());
        for c in &part.cells {
            prop_assert!(convex_contains(&c.polygon, c.centroid, 1e-6));
            prop_assert!(convex_contains(&c.polygon, c.site, 1e-6));
        }
    }

    #[test]
    fn lloyd_energy_never_rises(a in area(), n in 2usize..16, seed in any::<u64>()) {
        let run = lloyd_relax(SiteInit::Random { count: n, seed }, &a, &LloydConfig::default()).unwrap();
        for w in run.energy_history.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12), "{} -> {}", w[0], w[1]);
        }
        prop_assert!(run.iterations <= 200);
    }

    #[test]
    fn paths_are_no_shorter_than_the_gap(a in pose(500.0), b in pose(500.0), l in limits()) {
        let p = dubins_airplane_path(&a, &b, &l);
        prop_assert!(p.total_length >= a.distance_3d(&b) - 1e-9);
        prop_assert!(p.max_abs_flight_path_angle() <= l.gamma_max + 1e-9);
        let car = dubins_car_path(&a, &b, l.r_min);
        prop_assert!(car.total_length >= a.planar_distance(&b) - 1e-9);
    }

    #[test]
    fn paths_ignore_rigid_motion(a in pose(300.0), b in pose(300.0), l in limits(), rot in 0.0..TAU, tx in -1e3..1e3f64, ty in -1e3..1e3f64) {
        let p = dubins_airplane_path(&a, &b, &l).total_length;
        let q = dubins_airplane_path(&rigid(&a, rot, tx, ty), &rigid(&b, rot, tx, ty), &l).total_length;
        prop_assert!((p - q).abs() <= 1e-6 * p.max(1.0), "{} vs {}", p, q);
    }

    #[test]
    fn larger_disks_cover_more(cx in 0.0..500.0f64, cy in 0.0..500.0f64, r in 0.0..200.0f64, dr in 0.0..50.0f64) {
        let a = AreaOfInterest::new(Point2::default(), 500.0, 500.0).unwrap();
        let mut small = CoverageGrid::new(a, 2.0).unwrap();
        small.mark_disk(Point2::new(cx, cy), r);
        let mut big = CoverageGrid::new(a, 2.0).unwrap();
        big.mark_disk(Point2::new(cx, cy), r + dr);
        prop_assert!(small.is_subset_of(&big));
    }

    #[test]
    fn merge_is_cellwise_or(c1 in (0.0..300.0f64, 0.0..300.0f64), c2 in (0.0..300.0f64, 0.0..300.0f64), r in 5.0..80.0f64) {
        let a = AreaOfInterest::new(Point2::default(), 300.0, 300.0).unwrap();
        let mut g1 = CoverageGrid::new(a, 3.0).unwrap();
        g1.mark_disk(Point2::new(c1.0, c1.1), r);
        let mut g2 = CoverageGrid::new(a, 3.0).unwrap();
        g2.mark_square(Point2::new(c2.0, c2.1), r);
        let m = g1.merge(&g2).unwrap();
        let (nx, ny) = m.dims();
        for iy in 0..ny {
            for ix in 0..nx {
                prop_assert_eq!(m.is_covered(ix, iy), g1.is_covered(ix, iy) || g2.is_covered(ix, iy));
            }
        }
    }

    #[test]
    fn tour_improvement_keeps_a_permutation(n in 3usize..14, seed in any::<u64>(), closed in any::<bool>()) {
        let mut state = seed | 1;
        let m = CostMatrix::from_fn(n, |_, _| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            1.0 + (state % 1000) as f64
        }).unwrap();
        let start = nearest_neighbor_tour(&m, 0, closed);
        let cfg = KOptConfig { kicks: 20, ..KOptConfig::default() };
        let t = iterated_k_opt(&start, &m, &cfg);
        prop_assert!(t.total_cost <= start.total_cost + 1e-9);
        prop_assert_eq!(t.order[0], 0);
        let mut sorted = t.order.clone();
        sorted.sort_unstable();
        prop_assert_eq!(sorted, (0..n).collect::<Vec<_>>());
    }

    #[test]
    fn descent_falls_monotonically(h in 5.0..300.0f64, vt in 2.0..20.0f64, amp in 0.0..0.6f64, omega in 0.05..12.0f64, gain in 0.2..2.0f64, drag in 0.1..2.0f64) {
        let p = DescentParams { terminal_velocity: vt, planar_gain: gain, planar_drag: drag, ..DescentParams::default() };
        let s = SpiralParams { amplitude: amp, omega, profile: Default::default() };
        let traj = simulate_descent_from(Point2::new(3.0, 4.0), h, Some(&s), &p).unwrap();
        for w in traj.samples.windows(2) {
            prop_assert!(w[1].pose.z < w[0].pose.z);
            prop_assert!(w[1].t > w[0].t);
        }
        for smp in &traj.samples {
            prop_assert!(smp.roll.hypot(smp.pitch) <= amp + 1e-12);
        }
        let bound = gain * p.g * amp.tan() / drag;
        prop_assert!(traj.max_planar_speed() <= bound * (1.0 + 1e-9) + 1e-12, "{} > {}", traj.max_planar_speed(), bound);

        let passive = simulate_descent_from(Point2::new(3.0, 4.0), h, None, &p).unwrap();
        prop_assert_eq!(passive.touchdown, Point2::new(3.0, 4.0));
        prop_assert!(passive.samples.iter().all(|s| s.pose.planar() == Point2::new(3.0, 4.0)));
    }

    #[test]
    fn assignment_methods_agree(n in 1usize..=8, seed in any::<u64>()) {
        let m = AreaOfInterest::new(Point2::default(), 800.0, 800.0).unwrap().sample_uniform(n, seed);
        let t = AreaOfInterest::new(Point2::default(), 800.0, 800.0).unwrap().sample_uniform(n, seed ^ 0xabc);
        let e = enumerate_assignment(&m, &t).unwrap();
        let h = hungarian_assignment(&m, &t).unwrap();
        prop_assert!((e.total_distance - h.total_distance).abs() <= 1e-9);
        let identity: f64 = (0..n).map(|i| m[i].distance(t[i])).sum();
        prop_assert!(e.total_distance <= identity + 1e-9);
    }

    #[test]
    fn enu_round_trips(lat in -85.0..85.0f64, lon in -180.0..180.0f64, x in -5e3..5e3f64, y in -5e3..5e3f64, z in -50.0..50.0f64) {
        let r = GeodeticCoord::from_degrees(lat, lon, 0.0);
        let back = wgs84_to_enu(&enu_to_wgs84(&Point3 { x, y, z }, &r), &r);
        prop_assert!((back.x - x).abs() < 1e-6 && (back.y - y).abs() < 1e-6 && (back.z - z).abs() < 1e-6);
    }

    #[test]
    fn drive_length_is_bounded(from in pose(300.0), tx in -300.0..300.0f64, ty in -300.0..300.0f64, r in 1.0..20.0f64, rot in 0.0..TAU) {
        let start = Pose4::new(from.x, from.y, 0.0, from.psi);
        let p = drive_path(&start, Point2::new(tx, ty), r);
        let d = start.planar().distance(Point2::new(tx, ty));
        prop_assert!(p.total_length >= d - 1e-9 && p.total_length <= d + 7.0 * r);
        let moved = rigid(&start, rot, 50.0, -20.0);
        let target = rigid(&Pose4::new(tx, ty, 0.0, 0.0), rot, 50.0, -20.0).planar();
        prop_assert!((drive_path(&moved, target, r).total_length - p.total_length).abs() < 1e-6);
    }

    #[test]
    fn rounding_is_idempotent(x in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
        let once = round9(x);
        prop_assert_eq!(round9(once), once);
        prop_assert!((once - x).abs() <= 1e-8 * x.abs());
    }
}
