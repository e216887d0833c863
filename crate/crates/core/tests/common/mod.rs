#![allow(dead_code)]

use dradar_core::admm::Problem;
use dradar_core::forward::{build_operator, ForwardOperator, SceneGrid, SensorArray, Waveform};
use dradar_core::scene::{demo_targets, generate_scene, simulate_measurements, GroundTruth, TargetSpec};
use dradar_core::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Up to four linear arrays facing the grid from the four sides.
pub fn ring(q: usize, m: usize, range: f64, spacing: f64) -> Vec<SensorArray> {
    [(0.0, -range, 1.0, 0.0), (range, 0.0, 0.0, 1.0), (0.0, range, -1.0, 0.0), (-range, 0.0, 0.0, -1.0)]
        .iter()
        .take(q)
        .enumerate()
        .map(|(i, &(x, y, dx, dy))| SensorArray::linear(i + 1, [x, y, 0.0], [dx, dy], m, spacing).unwrap())
        .collect()
}

pub struct Setup {
    pub grid: SceneGrid,
    pub sensors: Vec<SensorArray>,
    pub wf: Waveform,
    pub ops: Vec<ForwardOperator>,
}

pub fn setup(nx: usize, q: usize, m: usize) -> Setup {
    let grid = SceneGrid::centered(nx, nx, 0.1).unwrap();
    let sensors = ring(q, m, 2.0, 0.15);
    let wf = Waveform::covering(60e9, 4e9, 20e-9, 8e9, &grid, &sensors).unwrap();
    let ops = sensors.iter().map(|s| build_operator(&grid, s, &wf).unwrap()).collect();
    Setup { grid, sensors, wf, ops }
}

/// Demo targets on an `nx` x `nx` grid seen by four sensors.
pub fn demo_problem(nx: usize, m: usize, snr_db: f64, seed: u64) -> (Problem, GroundTruth) {
    let s = setup(nx, 4, m);
    let targets = demo_targets(&s.grid).unwrap();
    let gt = generate_scene(&s.grid, &targets, 4).unwrap();
    let ys = s
        .ops
        .iter()
        .zip(&gt.per_sensor)
        .map(|(op, x)| simulate_measurements(op, x, snr_db, seed).unwrap().y)
        .collect();
    (Problem::new(s.ops, ys).unwrap(), gt)
}

/// Small isotropic scene for `q` sensors.
pub fn small_problem(nx: usize, q: usize, m: usize, snr_db: f64, seed: u64) -> (Problem, GroundTruth) {
    let s = setup(nx, q, m);
    let c = nx / 2;
    let targets = vec![
        TargetSpec::isotropic(vec![s.grid.index(1, 1).unwrap(), s.grid.index(2, 1).unwrap()], 1.0, q),
        TargetSpec::isotropic(vec![s.grid.index(c, c).unwrap()], 0.7, q),
    ];
    let gt = generate_scene(&s.grid, &targets, q).unwrap();
    let ys = s
        .ops
        .iter()
        .zip(&gt.per_sensor)
        .map(|(op, x)| simulate_measurements(op, x, snr_db, seed).unwrap().y)
        .collect();
    (Problem::new(s.ops, ys).unwrap(), gt)
}

pub fn random_complex(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
    (0..n).map(|_| C64::new(rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0)).collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// NMSE in dB after the least-squares scaling of `img` onto `gt`.
pub fn nmse_db(img: &[f64], gt: &[f64]) -> f64 {
    let num: f64 = img.iter().zip(gt).map(|(a, b)| a * b).sum();
    let den: f64 = img.iter().map(|a| a * a).sum();
    let c = if den > 0.0 { num / den } else { 0.0 };
    let err: f64 = img.iter().zip(gt).map(|(a, b)| (c * a - b).powi(2)).sum();
    10.0 * (err / gt.iter().map(|b| b * b).sum::<f64>()).log10()
}
