//! Scene geometry, LFM waveform and the per-sensor forward operator.
//!
//! Every sensor owns a dense complex operator mapping a reflectivity image
//! (one complex value per pixel) to the stacked fast-time samples of its
//! receive antennas. Rows are ordered receiver-major: row `m * K + k` holds
//! fast-time sample `k` of receiver `m`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{DMatrix, DVectorView};
// f64 math without std; unused when the test harness links std
#[allow(unused_imports)]
use num_traits::Float;
use crate::error::{Error, Result};
use crate::C64;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Default ceiling on the dense operator footprint (1 GiB).
pub const DEFAULT_MEMORY_BUDGET: usize = 1 << 30;

/// A 3D point in meters.
pub type Point3 = [f64; 3];

fn distance(a: &Point3, b: &Point3) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// Uniform pixel grid on the `z = 0` plane.
///
/// Pixel `n = iy * nx + ix` is centered at `origin + (ix, iy) * cell_size`.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneGrid {
    nx: usize,
    ny: usize,
    cell_size: f64,
    origin: [f64; 2],
}

impl SceneGrid {
    pub fn new(nx: usize, ny: usize, cell_size: f64, origin: [f64; 2]) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidParameter("grid must have at least one pixel per axis".into()));
        }
        if !(cell_size > 0.0 && cell_size.is_finite()) {
            return Err(Error::InvalidParameter("cell size must be positive and finite".into()));
        }
        if !origin.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("grid origin"));
        }
        Ok(Self { nx, ny, cell_size, origin })
    }

    /// Grid whose geometric center sits at the coordinate origin.
    pub fn centered(nx: usize, ny: usize, cell_size: f64) -> Result<Self> {
        let ox = -0.5 * (nx as f64 - 1.0) * cell_size;
        let oy = -0.5 * (ny as f64 - 1.0) * cell_size;
        Self::new(nx, ny, cell_size, [ox, oy])
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }

    /// Total pixel count `N`.
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index(&self, ix: usize, iy: usize) -> Option<usize> {
        (ix < self.nx && iy < self.ny).then(|| iy * self.nx + ix)
    }

    pub fn coords(&self, n: usize) -> Option<(usize, usize)> {
        (n < self.len()).then(|| (n % self.nx, n / self.nx))
    }

    /// Center of pixel `n` in meters (on the `z = 0` plane).
    pub fn center(&self, n: usize) -> Option<Point3> {
        let (ix, iy) = self.coords(n)?;
        Some([
            self.origin[0] + ix as f64 * self.cell_size,
            self.origin[1] + iy as f64 * self.cell_size,
            0.0,
        ])
    }

    fn centers(&self) -> impl Iterator<Item = Point3> + '_ {
        (0..self.len()).map(move |n| {
            let (ix, iy) = (n % self.nx, n / self.nx);
            [
                self.origin[0] + ix as f64 * self.cell_size,
                self.origin[1] + iy as f64 * self.cell_size,
                0.0,
            ]
        })
    }
}

/// One radar sensor: a single transmitter and `M` receivers.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorArray {
    id: usize,
    tx: Point3,
    rx: Vec<Point3>,
}

impl SensorArray {
    pub fn new(id: usize, tx: Point3, rx: Vec<Point3>) -> Result<Self> {
        if id == 0 {
            return Err(Error::InvalidParameter("sensor ids start at 1".into()));
        }
        if rx.is_empty() {
            return Err(Error::InvalidParameter("a sensor needs at least one receiver".into()));
        }
        if !tx.iter().chain(rx.iter().flatten()).all(|v| v.is_finite()) {
            return Err(Error::NonFinite("sensor position"));
        }
        for (i, a) in rx.iter().enumerate() {
            if rx[..i].iter().any(|b| a == b) {
                return Err(Error::InvalidParameter("receiver positions must be distinct".into()));
            }
        }
        Ok(Self { id, tx, rx })
    }

    /// Uniform linear array: receivers spaced `spacing` apart along `direction`
    /// (unit vector in the x-y plane), centered on the transmitter.
    pub fn linear(id: usize, tx: Point3, direction: [f64; 2], m: usize, spacing: f64) -> Result<Self> {
        let norm = (direction[0] * direction[0] + direction[1] * direction[1]).sqrt();
        if !(norm > 0.0) {
            return Err(Error::InvalidParameter("array direction must be nonzero".into()));
        }
        let (ux, uy) = (direction[0] / norm, direction[1] / norm);
        let rx = (0..m)
            .map(|i| {
                let off = (i as f64 - 0.5 * (m as f64 - 1.0)) * spacing;
                [tx[0] + off * ux, tx[1] + off * uy, tx[2]]
            })
            .collect();
        Self::new(id, tx, rx)
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn tx(&self) -> Point3 {
        self.tx
    }

    pub fn rx(&self) -> &[Point3] {
        &self.rx
    }

    /// Receiver count `M`.
    pub fn receivers(&self) -> usize {
        self.rx.len()
    }

    /// Bistatic round-trip delay from the transmitter via `p` to receiver `m`.
    pub fn delay(&self, m: usize, p: &Point3) -> f64 {
        (distance(&self.tx, p) + distance(&self.rx[m], p)) / SPEED_OF_LIGHT
    }

    fn delay_bounds(&self, grid: &SceneGrid) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for p in grid.centers() {
            for m in 0..self.rx.len() {
                let tau = self.delay(m, &p);
                lo = lo.min(tau);
                hi = hi.max(tau);
            }
        }
        (lo, hi)
    }
}

/// Linear frequency modulated pulse and its fast-time sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    fc: f64,
    bw: f64,
    pulse_duration: f64,
    sample_rate: f64,
    samples: usize,
}

impl Waveform {
    pub fn new(fc: f64, bw: f64, pulse_duration: f64, sample_rate: f64, samples: usize) -> Result<Self> {
        for (v, name) in [
            (fc, "fc"),
            (bw, "bandwidth"),
            (pulse_duration, "pulse duration"),
            (sample_rate, "sample rate"),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(alloc::format!("{name} must be positive and finite")));
            }
        }
        if sample_rate < bw {
            return Err(Error::InvalidParameter("sample rate below the sweep bandwidth".into()));
        }
        if samples == 0 {
            return Err(Error::InvalidParameter("at least one fast-time sample is required".into()));
        }
        Ok(Self { fc, bw, pulse_duration, sample_rate, samples })
    }

    /// Picks `K` so that every echo from `grid` lands fully inside each
    /// sensor's range-gated window: `K = ceil((T + max delay spread) * fs)`.
    pub fn covering(
        fc: f64,
        bw: f64,
        pulse_duration: f64,
        sample_rate: f64,
        grid: &SceneGrid,
        sensors: &[SensorArray],
    ) -> Result<Self> {
        let spread = sensors
            .iter()
            .map(|s| {
                let (lo, hi) = s.delay_bounds(grid);
                hi - gate_start(lo, sample_rate)
            })
            .fold(0.0, f64::max);
        let k = ((pulse_duration + spread) * sample_rate).ceil() as usize;
        Self::new(fc, bw, pulse_duration, sample_rate, k)
    }

    pub fn fc(&self) -> f64 {
        self.fc
    }

    pub fn bw(&self) -> f64 {
        self.bw
    }

    pub fn pulse_duration(&self) -> f64 {
        self.pulse_duration
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    /// Fast-time sample count `K`.
    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn chirp_rate(&self) -> f64 {
        self.bw / self.pulse_duration
    }

    /// Baseband chirp `exp(j pi alpha t^2)` on `[0, T]`, zero elsewhere.
    pub fn pulse(&self, t: f64) -> C64 {
        if (0.0..=self.pulse_duration).contains(&t) {
            C64::from_polar(1.0, PI * self.chirp_rate() * t * t)
        } else {
            C64::new(0.0, 0.0)
        }
    }
}

/// Window start for a sensor: earliest echo delay floored to the sample grid.
fn gate_start(min_delay: f64, sample_rate: f64) -> f64 {
    (min_delay * sample_rate).floor() / sample_rate
}

/// Dense complex forward operator `A_q` of one sensor.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardOperator {
    sensor: usize,
    samples: usize,
    receivers: usize,
    window_start: f64,
    matrix: DMatrix<C64>,
}

/// Builds `A_q` with the default memory budget.
pub fn build_operator(grid: &SceneGrid, sensor: &SensorArray, wf: &Waveform) -> Result<ForwardOperator> {
    build_operator_with_budget(grid, sensor, wf, DEFAULT_MEMORY_BUDGET)
}

/// Builds `A_q`; entry `(m, k, n)` is `exp(-j 2 pi fc tau) p(t_k - tau)` with
/// `tau` the bistatic delay to pixel `n` and `t_k = t_start + k / fs`.
pub fn build_operator_with_budget(
    grid: &SceneGrid,
    sensor: &SensorArray,
    wf: &Waveform,
    budget_bytes: usize,
) -> Result<ForwardOperator> {
    let k_len = wf.samples();
    let m_len = sensor.receivers();
    let rows = k_len * m_len;
    let cols = grid.len();
    let bytes = rows
        .checked_mul(cols)
        .and_then(|e| e.checked_mul(core::mem::size_of::<C64>()));
    if bytes.is_none_or(|b| b > budget_bytes) {
        return Err(Error::OperatorTooLarge { rows, cols, budget: budget_bytes });
    }

    let (lo, _) = sensor.delay_bounds(grid);
    let t0 = gate_start(lo, wf.sample_rate());
    let dt = 1.0 / wf.sample_rate();
    let alpha = wf.chirp_rate();
    let t_pulse = wf.pulse_duration();

    let mut matrix = DMatrix::<C64>::zeros(rows, cols);
    for (n, p) in grid.centers().enumerate() {
        for m in 0..m_len {
            let tau = sensor.delay(m, &p);
            let carrier = -2.0 * PI * wf.fc() * tau;
            // only samples with 0 <= t_k - tau <= T are nonzero
            let first = (((tau - t0) / dt).ceil().max(0.0)) as usize;
            for k in first..k_len {
                let u = t0 + k as f64 * dt - tau;
                if u < 0.0 {
                    continue;
                }
                if u > t_pulse {
                    break;
                }
                matrix[(m * k_len + k, n)] = C64::from_polar(1.0, carrier + PI * alpha * u * u);
            }
        }
    }
    Ok(ForwardOperator { sensor: sensor.id(), samples: k_len, receivers: m_len, window_start: t0, matrix })
}

impl ForwardOperator {
    /// Wraps an explicit matrix (`samples * receivers` rows).
    pub fn from_matrix(sensor: usize, samples: usize, receivers: usize, matrix: DMatrix<C64>) -> Result<Self> {
        if matrix.nrows() != samples * receivers {
            return Err(Error::DimensionMismatch { expected: samples * receivers, actual: matrix.nrows() });
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("operator entries"));
        }
        Ok(Self { sensor, samples, receivers, window_start: 0.0, matrix })
    }

    pub fn sensor(&self) -> usize {
        self.sensor
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn receivers(&self) -> usize {
        self.receivers
    }

    /// Time of fast-time sample 0, seconds.
    pub fn window_start(&self) -> f64 {
        self.window_start
    }

    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    /// `A x`.
    pub fn apply(&self, x: &[C64]) -> Result<Vec<C64>> {
        check_len(self.cols(), x.len())?;
        let x = DVectorView::from_slice(x, x.len());
        Ok((&self.matrix * x).data.into())
    }

    /// `A^H y`.
    pub fn apply_adjoint(&self, y: &[C64]) -> Result<Vec<C64>> {
        check_len(self.rows(), y.len())?;
        let y = DVectorView::from_slice(y, y.len());
        Ok(self.matrix.ad_mul(&y).data.into())
    }

    /// Gram matrix `A^H A` (N x N, Hermitian).
    pub fn gram(&self) -> DMatrix<C64> {
        self.matrix.ad_mul(&self.matrix)
    }

    /// Binary dump: `q, K, M, N` as little-endian u64, then the entries in
    /// row-major order as `(re, im)` little-endian f64 pairs.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(32 + 16 * self.rows() * self.cols());
        for v in [self.sensor, self.samples, self.receivers, self.cols()] {
            out.extend_from_slice(&(v as u64).to_le_bytes());
        }
        for r in 0..self.rows() {
            for c in 0..self.cols() {
                let z = self.matrix[(r, c)];
                out.extend_from_slice(&z.re.to_le_bytes());
                out.extend_from_slice(&z.im.to_le_bytes());
            }
        }
        out
    }

    /// Inverse of [`ForwardOperator::to_bytes`].
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 32 {
            return Err(Error::Decode("operator header truncated"));
        }
        let word = |i: usize| {
            let mut b = [0u8; 8];
            b.copy_from_slice(&bytes[8 * i..8 * i + 8]);
            u64::from_le_bytes(b) as usize
        };
        let (q, k, m, n) = (word(0), word(1), word(2), word(3));
        let rows = k.checked_mul(m).ok_or(Error::Decode("operator header overflow"))?;
        let body = rows
            .checked_mul(n)
            .and_then(|e| e.checked_mul(16))
            .ok_or(Error::Decode("operator header overflow"))?;
        if bytes.len() != 32 + body {
            return Err(Error::Decode("operator body length does not match header"));
        }
        let f = |off: usize| {
            let mut b = [0u8; 8];
            b.copy_from_slice(&bytes[off..off + 8]);
            f64::from_le_bytes(b)
        };
        let matrix = DMatrix::from_fn(rows, n, |r, c| {
            let off = 32 + 16 * (r * n + c);
            C64::new(f(off), f(off + 8))
        });
        Self::from_matrix(q, k, m, matrix)
    }
}

fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, actual })
    }
}

/// Matched-filter image `|sum_q A_q^H y_q|`, scaled to unit peak.
pub fn back_projection(ops: &[ForwardOperator], ys: &[Vec<C64>]) -> Result<Vec<f64>> {
    let first = ops.first().ok_or(Error::EmptyInput("back-projection needs at least one sensor"))?;
    check_len(ops.len(), ys.len())?;
    let n = first.cols();
    let mut acc = alloc::vec![C64::new(0.0, 0.0); n];
    for (op, y) in ops.iter().zip(ys) {
        check_len(n, op.cols())?;
        for (a, b) in acc.iter_mut().zip(op.apply_adjoint(y)?) {
            *a += b;
        }
    }
    let mut img: Vec<f64> = acc.iter().map(|z| z.norm()).collect();
    let peak = img.iter().copied().fold(0.0, f64::max);
    if peak > 0.0 {
        img.iter_mut().for_each(|v| *v /= peak);
    }
    Ok(img)
}
