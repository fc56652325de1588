#![allow(dead_code)]

use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wqc_core::network::{parse_network, HydraulicPeriod, HydraulicProfile, WaterNetwork};

pub fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

pub fn read_data(name: &str) -> String {
    std::fs::read_to_string(data(name)).unwrap()
}

/// Reservoir → pump → J1 → pipe → J2, all flow leaving at J2.
pub fn line_network(
    source: f64,
    length_m: f64,
    diameter_m: f64,
    kb: f64,
    velocity: f64,
) -> (WaterNetwork, HydraulicProfile) {
    let net = parse_network(&format!(
        "[JUNCTIONS]\nJ1\nJ2\n[RESERVOIRS]\nR0 {source}\n\
         [PIPES]\nP12 J1 J2 {length_m} {diameter_m} {kb} 0 0\n[PUMPS]\nM01 R0 J1\n"
    ))
    .unwrap();
    let q = net.pipes[0].area_m2() * velocity;
    let period = HydraulicPeriod {
        duration_s: 3600.0,
        flows: vec![q, q],
        demands: vec![0.0, q],
        volumes: vec![],
        booster_flows: vec![0.0; 3],
    };
    let hyd = HydraulicProfile::from_periods(&net, vec![period]).unwrap();
    (net, hyd)
}

/// Random stable dense triple `(A, B, C)` with `n_x` states.
pub fn random_system(
    rng: &mut ChaCha8Rng,
    n_x: usize,
    n_u: usize,
    n_y: usize,
) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let a = DMatrix::from_fn(n_x, n_x, |_, _| rng.random_range(-1.0..1.0)) / (n_x as f64);
    let b = DMatrix::from_fn(n_x, n_u, |_, _| rng.random_range(-1.0..1.0));
    let mut c = DMatrix::zeros(n_y, n_x);
    for r in 0..n_y {
        c[(r, rng.random_range(0..n_x))] = 1.0;
    }
    (a, b, c)
}

pub fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
