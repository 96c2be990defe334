//! Tour solvers against an exact dynamic program.

mod common;

use airdrop_core::dubins::{Pose4, VehicleLimits};
use airdrop_core::tsp::{
    brute_force_tour, dubins_cost_matrix, format_full_matrix, iterated_k_opt, k_opt_improve,
    nearest_neighbor_tour, parse_full_matrix, parse_tour_order, CostMatrix, KOptConfig, TspError,
};
use common::held_karp;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> CostMatrix {
    CostMatrix::from_fn(n, |_, _| rng.gen_range(1.0..100.0)).unwrap()
}

#[test]
fn brute_force_matches_dynamic_program() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for trial in 0..60 {
        let n = 2 + trial % 8;
        let m = random_matrix(&mut rng, n);
        let exact = brute_force_tour(&m).unwrap();
        let dp = held_karp(n, |i, j| m.get(i, j));
        assert!((exact.total_cost - dp).abs() < 1e-9, "n={n}: {} vs {dp}", exact.total_cost);
        assert_eq!(exact.order[0], 0);
    }
    let big = random_matrix(&mut rng, 11);
    assert!(matches!(brute_force_tour(&big), Err(TspError::TooLarge(11))));
}

#[test]
fn local_search_never_loses_to_its_start() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for trial in 0..40 {
        let n = 3 + trial % 20;
        let m = random_matrix(&mut rng, n);
        for closed in [true, false] {
            let nn = nearest_neighbor_tour(&m, 0, closed);
            let local = k_opt_improve(&nn, &m, 3, 100_000);
            let iterated = iterated_k_opt(&nn, &m, &KOptConfig::default());
            assert!(local.total_cost <= nn.total_cost + 1e-9);
            assert!(iterated.total_cost <= local.total_cost + 1e-9);
            assert_eq!(iterated.order[0], 0);
            let mut sorted = iterated.order.clone();
            sorted.sort_unstable();
            assert_eq!(sorted, (0..n).collect::<Vec<_>>());
            if closed && n <= 9 {
                let opt = held_karp(n, |i, j| m.get(i, j));
                assert!(iterated.total_cost >= opt - 1e-9);
            }
        }
    }
}

#[test]
fn dubins_instances_are_asymmetric_and_round_trip() {
    let limits = VehicleLimits { r_min: 60.0, gamma_max: 0.2, airspeed: 25.0 };
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let poses: Vec<Pose4> = (0..9)
        .map(|_| Pose4::new(rng.gen_range(0.0..800.0), rng.gen_range(0.0..800.0), rng.gen_range(100.0..300.0), rng.gen_range(0.0..std::f64::consts::TAU)))
        .collect();
    let m = dubins_cost_matrix(&poses, &limits).unwrap();
    assert!(!m.is_symmetric(1e-6));
    let back = parse_full_matrix(&format_full_matrix(&m)).unwrap();
    for i in 0..9 {
        for j in 0..9 {
            if i != j {
                assert_eq!(back.get(i, j).to_bits(), m.get(i, j).to_bits());
            }
        }
    }
    assert_eq!(parse_tour_order("2 0 1", 3).unwrap(), vec![2, 0, 1]);
    assert!(parse_tour_order("0 1 1", 3).is_err());
    assert!(parse_tour_order("0 1", 3).is_err());
    assert!(parse_tour_order("0 x 2", 3).is_err());
    assert!(parse_full_matrix("2\n0 1\n1").is_err());
}
