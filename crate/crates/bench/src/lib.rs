//! Shared inputs for the benchmarks.

use airdrop_core::tsp::CostMatrix;
use airdrop_core::{AreaOfInterest, Point2, Pose4, VehicleLimits};

pub fn carrier() -> VehicleLimits {
    VehicleLimits { r_min: 60.0, gamma_max: 0.2, airspeed: 25.0 }
}

pub fn field() -> AreaOfInterest {
    AreaOfInterest::new(Point2::new(0.0, 0.0), 1600.0, 900.0).expect("valid area")
}

/// `n` poses on a jittered ring, headings tangent to it.
pub fn ring_poses(n: usize, z: f64) -> Vec<Pose4> {
    (0..n)
        .map(|i| {
            let a = i as f64 * std::f64::consts::TAU / n as f64;
            let r = 400.0 + 60.0 * ((i * 7) % 5) as f64;
            Pose4::new(800.0 + r * a.cos(), 450.0 + r * a.sin(), z + 10.0 * (i % 3) as f64, a + 1.3)
        })
        .collect()
}

pub fn ring_costs(n: usize) -> CostMatrix {
    airdrop_core::tsp::dubins_cost_matrix(&ring_poses(n, 200.0), &carrier()).expect("valid matrix")
}
