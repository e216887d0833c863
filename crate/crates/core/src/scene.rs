//! Aspect-dependent ground truth and noisy echo synthesis.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

// f64 math without std; unused when the test harness links std
#[allow(unused_imports)]
use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::forward::{ForwardOperator, SceneGrid};
use crate::C64;

/// An extended target: a pixel footprint, a base amplitude, and how strongly
/// each sensor (keyed by id, starting at 1) sees it.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetSpec {
    pub shape: Vec<usize>,
    pub base_amplitude: f64,
    pub aspect_profile: BTreeMap<usize, f64>,
}

impl TargetSpec {
    pub fn new(shape: Vec<usize>, base_amplitude: f64, aspect_profile: BTreeMap<usize, f64>) -> Self {
        Self { shape, base_amplitude, aspect_profile }
    }

    /// Same amplitude towards every sensor in `1..=q_count`.
    pub fn isotropic(shape: Vec<usize>, base_amplitude: f64, q_count: usize) -> Self {
        Self::new(shape, base_amplitude, (1..=q_count).map(|q| (q, 1.0)).collect())
    }

    pub fn scale_for(&self, q: usize) -> f64 {
        self.aspect_profile.get(&q).copied().unwrap_or(0.0)
    }

    fn validate(&self, n: usize, q_count: usize) -> Result<()> {
        if self.shape.is_empty() {
            return Err(Error::InvalidParameter("target shape is empty".into()));
        }
        if let Some(bad) = self.shape.iter().find(|&&i| i >= n) {
            return Err(Error::InvalidParameter(alloc::format!("target pixel {bad} outside grid of {n}")));
        }
        if !(self.base_amplitude >= 0.0 && self.base_amplitude.is_finite()) {
            return Err(Error::InvalidParameter("base amplitude must be nonnegative and finite".into()));
        }
        for (&q, &a) in &self.aspect_profile {
            if q == 0 || q > q_count {
                return Err(Error::InvalidParameter(alloc::format!("aspect profile names unknown sensor {q}")));
            }
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::InvalidParameter("aspect scale must lie in [0, 1]".into()));
            }
        }
        if !self.aspect_profile.values().any(|&a| a > 0.0) {
            return Err(Error::InvalidParameter("target is invisible to every sensor".into()));
        }
        Ok(())
    }
}

/// Per-sensor reflectivity magnitudes and their sum.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub per_sensor: Vec<Vec<f64>>,
    pub composite: Vec<f64>,
}

/// `x_q[n]` is the sum of `base_amplitude * aspect[q]` over targets covering `n`.
///
/// Contributions to a pixel are summed in sorted order so the result does not
/// depend on the order of `targets`.
pub fn generate_scene(grid: &SceneGrid, targets: &[TargetSpec], q_count: usize) -> Result<GroundTruth> {
    if q_count == 0 {
        return Err(Error::InvalidParameter("at least one sensor is required".into()));
    }
    let n = grid.len();
    for t in targets {
        t.validate(n, q_count)?;
    }
    let mut per_sensor = Vec::with_capacity(q_count);
    let mut parts: Vec<Vec<f64>> = alloc::vec![Vec::new(); n];
    for q in 1..=q_count {
        parts.iter_mut().for_each(Vec::clear);
        for t in targets {
            let v = t.base_amplitude * t.scale_for(q);
            for &i in &t.shape {
                parts[i].push(v);
            }
        }
        let img = parts
            .iter_mut()
            .map(|p| {
                p.sort_by(f64::total_cmp);
                p.iter().fold(0.0, |acc, v| acc + v)
            })
            .collect::<Vec<_>>();
        per_sensor.push(img);
    }
    let mut composite = alloc::vec![0.0; n];
    for img in &per_sensor {
        for (c, v) in composite.iter_mut().zip(img) {
            *c += v;
        }
    }
    Ok(GroundTruth { per_sensor, composite })
}

/// Noisy echo of one sensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub sensor: usize,
    pub y: Vec<C64>,
    pub snr_db: f64,
    pub seed: u64,
}

/// `y = A x + w`, with `w` circular complex Gaussian of per-sample variance
/// `||A x||^2 / (K M 10^(snr/10))`. `snr_db = +inf` disables the noise.
///
/// The noise stream is ChaCha20 seeded from `seed`, with the sensor id
/// selecting the stream, so sensors sharing a seed still draw independently.
pub fn simulate_measurements(op: &ForwardOperator, x_gt: &[f64], snr_db: f64, seed: u64) -> Result<Measurement> {
    if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
        return Err(Error::InvalidParameter("snr must be finite or +inf".into()));
    }
    if x_gt.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
        return Err(Error::InvalidParameter("ground truth must be nonnegative and finite".into()));
    }
    let x: Vec<C64> = x_gt.iter().map(|&v| C64::new(v, 0.0)).collect();
    let mut y = op.apply(&x)?;
    if snr_db.is_finite() {
        let power: f64 = y.iter().map(|z| z.norm_sqr()).sum();
        if power == 0.0 {
            return Err(Error::UndefinedSnr);
        }
        let variance = power / (y.len() as f64 * 10.0.powf(snr_db / 10.0));
        let scale = (variance / 2.0).sqrt();
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(op.sensor() as u64);
        for z in y.iter_mut() {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            *z += C64::new(scale * re, scale * im);
        }
    }
    Ok(Measurement { sensor: op.sensor(), y, snr_db, seed })
}

/// Four extended targets (square, L-shape, bar, point cluster) laid out on
/// any grid of at least 8x8 pixels, each seen by two or three of four sensors.
pub fn demo_targets(grid: &SceneGrid) -> Result<Vec<TargetSpec>> {
    let (nx, ny) = (grid.nx(), grid.ny());
    if nx < 8 || ny < 8 {
        return Err(Error::InvalidParameter("demo scene needs at least 8x8 pixels".into()));
    }
    let at = |fx: f64, fy: f64| ((fx * nx as f64) as usize, (fy * ny as f64) as usize);
    let idx = |ix: usize, iy: usize| grid.index(ix.min(nx - 1), iy.min(ny - 1)).unwrap();
    let side = (nx / 8).max(1);

    let (sx, sy) = at(0.1875, 0.1875);
    let square: Vec<usize> = (0..=side).flat_map(|dy| (0..=side).map(move |dx| (sx + dx, sy + dy))).map(|(x, y)| idx(x, y)).collect();

    let (lx, ly) = at(0.625, 0.1875);
    let arm = 2 * side;
    let mut l_shape: Vec<usize> = (0..=arm).map(|d| idx(lx, ly + d)).collect();
    l_shape.extend((1..=arm).map(|d| idx(lx + d, ly)));

    let (bx, by) = at(0.1875, 0.6875);
    let bar: Vec<usize> = (0..=(3 * side).min(nx / 2)).map(|d| idx(bx + d, by)).collect();

    let (px, py) = at(0.6875, 0.6875);
    let cluster = alloc::vec![idx(px, py), idx(px + 2, py + 1), idx(px + 1, py + 3)];

    let profile = |pairs: &[(usize, f64)]| pairs.iter().copied().collect::<BTreeMap<_, _>>();
    Ok(alloc::vec![
        TargetSpec::new(square, 1.0, profile(&[(1, 1.0), (2, 0.6), (4, 0.8)])),
        TargetSpec::new(l_shape, 0.8, profile(&[(2, 1.0), (3, 0.7)])),
        TargetSpec::new(bar, 0.9, profile(&[(1, 0.5), (3, 1.0), (4, 0.9)])),
        TargetSpec::new(cluster, 1.2, profile(&[(1, 0.9), (2, 0.4), (3, 1.0)])),
    ])
}
