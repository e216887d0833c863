//! Scenario files: a versioned JSON description of the grid, sensors,
//! waveform, targets, noise, solver settings and outputs.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use dradar_core::admm::{Hyperparams, Mode, Unknowns};
use dradar_core::forward::{build_operator, ForwardOperator, SceneGrid, SensorArray, Waveform};
use dradar_core::scene::{demo_targets, generate_scene, GroundTruth, TargetSpec};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub nx: usize,
    pub ny: usize,
    /// Cell edge in meters.
    pub cell_size: f64,
    /// Center of pixel (0, 0); `None` centers the grid on the origin.
    #[serde(default)]
    pub origin: Option<[f64; 2]>,
}

/// One sensor: a transmitter and its receive antennas, positions in meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorConfig {
    pub tx: [f64; 3],
    pub rx: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveformConfig {
    /// Carrier frequency, Hz.
    pub fc: f64,
    /// Sweep bandwidth, Hz.
    pub bw: f64,
    /// Pulse duration, seconds.
    pub pulse_duration: f64,
    /// Complex sample rate, Hz.
    pub sample_rate: f64,
    /// Fast-time samples per receiver; `None` sizes the window to the scene.
    #[serde(default)]
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    /// Pixel coordinates `[ix, iy]`.
    pub pixels: Vec<[usize; 2]>,
    pub amplitude: f64,
    /// Visibility in `[0, 1]` per sensor id (1-based).
    pub aspect: BTreeMap<usize, f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeConfig {
    Sadmm,
    Asadmm,
}

impl From<ModeConfig> for Mode {
    fn from(m: ModeConfig) -> Self {
        match m {
            ModeConfig::Sadmm => Mode::Sadmm,
            ModeConfig::Asadmm => Mode::Asadmm,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnknownsConfig {
    Real,
    Complex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub mu: f64,
    pub lambda: f64,
    pub beta: f64,
    pub eps_abs: f64,
    pub eps_rel: f64,
    /// Screening window `K_p`, in iterations.
    pub window: usize,
    pub eps_p: f64,
    pub max_iter: usize,
    pub unknowns: UnknownsConfig,
    pub mode: ModeConfig,
}

impl SolverConfig {
    pub fn hyperparams(&self) -> Hyperparams {
        Hyperparams {
            mu: self.mu,
            lambda: self.lambda,
            beta: self.beta,
            eps_abs: self.eps_abs,
            eps_rel: self.eps_rel,
            window: self.window,
            eps_p: self.eps_p,
            max_iter: self.max_iter,
            unknowns: match self.unknowns {
                UnknownsConfig::Real => Unknowns::Real,
                UnknownsConfig::Complex => Unknowns::Complex,
            },
        }
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        let h = Hyperparams::default();
        Self {
            mu: h.mu,
            lambda: h.lambda,
            beta: h.beta,
            eps_abs: h.eps_abs,
            eps_rel: h.eps_rel,
            window: h.window,
            eps_p: h.eps_p,
            max_iter: h.max_iter,
            unknowns: UnknownsConfig::Real,
            mode: ModeConfig::Asadmm,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransportKind {
    Inproc,
    Tcp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransportConfig {
    pub kind: TransportKind,
    /// Listen address of the fusion node for TCP runs.
    pub fusion_addr: String,
    /// How long the fusion node waits for a round's contributions.
    pub round_timeout_ms: u64,
}

impl Default for TransportConfig {
    fn default() -> Self {
        Self { kind: TransportKind::Inproc, fusion_addr: "127.0.0.1:0".into(), round_timeout_ms: 30_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub name: String,
    pub grid: GridConfig,
    pub sensors: Vec<SensorConfig>,
    pub waveform: WaveformConfig,
    pub targets: Vec<TargetConfig>,
    /// `None` simulates noiseless echoes.
    pub snr_db: Option<f64>,
    pub seed: u64,
    pub solver: SolverConfig,
    pub transport: TransportConfig,
    pub output_dir: PathBuf,
}

/// Everything derived from a config: geometry, operators and ground truth.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub grid: SceneGrid,
    pub sensors: Vec<SensorArray>,
    pub waveform: Waveform,
    pub ops: Vec<ForwardOperator>,
    pub truth: GroundTruth,
}

/// Four uniform linear arrays, one per side of a square scene, each facing
/// the scene center from `range` meters.
fn ring(range: f64, m: usize, spacing: f64) -> Vec<SensorConfig> {
    [(0.0, -range, 1.0, 0.0), (range, 0.0, 0.0, 1.0), (0.0, range, -1.0, 0.0), (-range, 0.0, 0.0, -1.0)]
        .iter()
        .map(|&(x, y, dx, dy)| {
            let rx = (0..m)
                .map(|i| {
                    let off = (i as f64 - 0.5 * (m as f64 - 1.0)) * spacing;
                    [x + off * dx, y + off * dy, 0.0]
                })
                .collect();
            SensorConfig { tx: [x, y, 0.0], rx }
        })
        .collect()
}

fn preset(name: &str, n: usize, cell: f64, range: f64, m: usize, spacing: f64) -> ScenarioConfig {
    let grid = SceneGrid::centered(n, n, cell).expect("preset grid is valid");
    let targets = demo_targets(&grid)
        .expect("preset grid fits the demo scene")
        .into_iter()
        .map(|t| TargetConfig {
            pixels: t.shape.iter().map(|&i| {
                let (ix, iy) = grid.coords(i).expect("demo pixel on grid");
                [ix, iy]
            }).collect(),
            amplitude: t.base_amplitude,
            aspect: t.aspect_profile,
        })
        .collect();
    ScenarioConfig {
        schema_version: SCHEMA_VERSION,
        name: name.into(),
        grid: GridConfig { nx: n, ny: n, cell_size: cell, origin: None },
        sensors: ring(range, m, spacing),
        waveform: WaveformConfig { fc: 60e9, bw: 4e9, pulse_duration: 20e-9, sample_rate: 4e9, samples: None },
        targets,
        snr_db: Some(3.0),
        seed: 1,
        solver: SolverConfig::default(),
        transport: TransportConfig::default(),
        output_dir: PathBuf::from("out").join(name),
    }
}

impl ScenarioConfig {
    /// 16x16 scene at 0.1 m, four sensors with four receivers each at 2 m.
    /// Runs in well under a second per solver.
    pub fn desk() -> Self {
        preset("desk", 16, 0.1, 2.0, 4, 0.15)
    }

    /// 64x64 scene at 0.05 m, four sensors with eight receivers each. The
    /// dense operators and factorizations need several GiB of memory.
    pub fn full() -> Self {
        preset("full", 64, 0.05, 3.0, 8, 0.1)
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: &Path) -> CliResult<()> {
        fs::write(path, self.to_json()).map_err(|e| CliError::io(path, e))
    }

    pub fn mode(&self) -> Mode {
        self.solver.mode.into()
    }

    pub fn snr(&self) -> f64 {
        self.snr_db.unwrap_or(f64::INFINITY)
    }

    /// Builds the geometry, forward operators and ground truth.
    pub fn build(&self) -> CliResult<Scenario> {
        let g = &self.grid;
        let grid = match g.origin {
            Some(o) => SceneGrid::new(g.nx, g.ny, g.cell_size, o),
            None => SceneGrid::centered(g.nx, g.ny, g.cell_size),
        }
        .map_err(CliError::config)?;
        if self.sensors.is_empty() {
            return Err(CliError::Config("scenario has no sensors".into()));
        }
        let sensors = self
            .sensors
            .iter()
            .enumerate()
            .map(|(i, s)| SensorArray::new(i + 1, s.tx, s.rx.clone()))
            .collect::<Result<Vec<_>, _>>()
            .map_err(CliError::config)?;
        let w = &self.waveform;
        let waveform = match w.samples {
            Some(k) => Waveform::new(w.fc, w.bw, w.pulse_duration, w.sample_rate, k),
            None => Waveform::covering(w.fc, w.bw, w.pulse_duration, w.sample_rate, &grid, &sensors),
        }
        .map_err(CliError::config)?;
        let ops = sensors
            .iter()
            .map(|s| build_operator(&grid, s, &waveform))
            .collect::<Result<Vec<_>, _>>()
            .map_err(CliError::config)?;
        let targets = self
            .targets
            .iter()
            .map(|t| {
                let shape = t
                    .pixels
                    .iter()
                    .map(|&[ix, iy]| {
                        grid.index(ix, iy)
                            .ok_or_else(|| CliError::Config(format!("target pixel [{ix}, {iy}] is off the grid")))
                    })
                    .collect::<CliResult<Vec<_>>>()?;
                Ok(TargetSpec::new(shape, t.amplitude, t.aspect.clone()))
            })
            .collect::<CliResult<Vec<_>>>()?;
        let truth = generate_scene(&grid, &targets, sensors.len()).map_err(CliError::config)?;
        Ok(Scenario { grid, sensors, waveform, ops, truth })
    }
}
