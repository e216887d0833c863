//! The CLI verbs as library functions. Each one reads and writes under the
//! session's output directory:
//!
//! ```text
//! <out>/scenario.json                 config the outputs came from
//! <out>/measurements/sensor_<q>.bin   simulated echoes
//! <out>/truth/composite.f64|.pgm      ground truth, plus sensor_<q>.f64
//! <out>/<method>/image.f64|.pgm       bp, sadmm or asadmm
//! <out>/<method>/report.csv           per-iteration diagnostics (solvers only)
//! <out>/compare/summary.csv
//! <out>/distributed/<mode>/           image, report.csv and comm.csv
//! ```

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use dradar_core::admm::{run_with_clock, Hyperparams, Mode, Problem, RunOutput};
use dradar_core::dist::CommStats;
use dradar_core::forward::back_projection;
use dradar_core::scene::{simulate_measurements, Measurement};
use dradar_core::C64;

use crate::config::{Scenario, ScenarioConfig, TransportKind};
use crate::error::{CliError, CliResult};
use crate::io;
use crate::metrics::{nmse_db, relative_difference};
use crate::runtime::{run_distributed, StdClock};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Method {
    Bp,
    Sadmm,
    Asadmm,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Bp => "bp",
            Method::Sadmm => "sadmm",
            Method::Asadmm => "asadmm",
        }
    }
}

/// A loaded config with its derived operators and output directory.
#[derive(Debug, Clone)]
pub struct Session {
    pub config: ScenarioConfig,
    pub scenario: Scenario,
    pub out: PathBuf,
}

impl Session {
    pub fn new(config: ScenarioConfig) -> CliResult<Self> {
        let scenario = config.build()?;
        let out = config.output_dir.clone();
        Ok(Self { config, scenario, out })
    }

    pub fn hyper(&self) -> Hyperparams {
        self.config.solver.hyperparams()
    }

    fn measurement_path(&self, sensor: usize) -> PathBuf {
        self.out.join("measurements").join(format!("sensor_{sensor}.bin"))
    }

    /// Simulated echoes for every sensor, in sensor order.
    pub fn simulate(&self) -> CliResult<Vec<Measurement>> {
        let s = &self.scenario;
        s.ops
            .iter()
            .zip(&s.truth.per_sensor)
            .map(|(op, x)| simulate_measurements(op, x, self.config.snr(), self.config.seed).map_err(CliError::config))
            .collect()
    }

    /// Reads the measurement files written by `simulate` and checks them
    /// against this scenario.
    pub fn load_measurements(&self) -> CliResult<Vec<Vec<C64>>> {
        self.scenario
            .ops
            .iter()
            .map(|op| {
                let path = self.measurement_path(op.sensor());
                if !path.exists() {
                    return Err(CliError::Config(format!(
                        "{} is missing; run `dradar simulate` first",
                        path.display()
                    )));
                }
                let (m, k, r) = io::read_measurement(&path)?;
                if m.sensor != op.sensor() || k != op.samples() || r != op.receivers() {
                    return Err(CliError::Config(format!(
                        "{}: sensor {} with {k}x{r} samples does not match the scenario (sensor {}, {}x{})",
                        path.display(),
                        m.sensor,
                        op.sensor(),
                        op.samples(),
                        op.receivers()
                    )));
                }
                Ok(m.y)
            })
            .collect()
    }

    pub fn problem(&self) -> CliResult<Problem> {
        Ok(Problem::new(self.scenario.ops.clone(), self.load_measurements()?)?)
    }

    fn write_image(&self, dir: &Path, img: &[f64]) -> CliResult<()> {
        let g = &self.scenario.grid;
        io::write_raw_image(&dir.join("image.f64"), img)?;
        io::write_pgm(&dir.join("image.pgm"), img, g.nx(), g.ny())
    }
}

/// Writes measurements, ground truth and the effective config.
pub fn simulate(session: &Session) -> CliResult<String> {
    let ms = session.simulate()?;
    let g = &session.scenario.grid;
    for (m, op) in ms.iter().zip(&session.scenario.ops) {
        io::write_measurement(&session.measurement_path(m.sensor), m, op.samples(), op.receivers())?;
    }
    let truth = &session.scenario.truth;
    let tdir = session.out.join("truth");
    io::write_raw_image(&tdir.join("composite.f64"), &truth.composite)?;
    io::write_pgm(&tdir.join("composite.pgm"), &truth.composite, g.nx(), g.ny())?;
    for (q, img) in truth.per_sensor.iter().enumerate() {
        io::write_raw_image(&tdir.join(format!("sensor_{}.f64", q + 1)), img)?;
    }
    io::write_text(&session.out.join("scenario.json"), &session.config.to_json())?;
    let w = &session.scenario.waveform;
    Ok(format!(
        "simulated {} sensors, {} samples x {} receivers each, snr {} dB, seed {} -> {}",
        ms.len(),
        w.samples(),
        session.scenario.sensors[0].receivers(),
        session.config.snr(),
        session.config.seed,
        session.out.display()
    ))
}

/// Result of one reconstruction.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub method: Method,
    pub image: Vec<f64>,
    /// `None` for back-projection.
    pub run: Option<RunOutput>,
    pub wall_ms: f64,
    pub nmse_db: f64,
}

fn solve(session: &Session, problem: &Problem, method: Method) -> CliResult<Reconstruction> {
    let t0 = Instant::now();
    let (image, run) = match method {
        Method::Bp => (back_projection(problem.ops(), problem.measurements())?, None),
        Method::Sadmm | Method::Asadmm => {
            let mode = if method == Method::Sadmm { Mode::Sadmm } else { Mode::Asadmm };
            let out = run_with_clock(problem, session.hyper(), mode, &mut StdClock::start())?;
            (out.image.clone(), Some(out))
        }
    };
    let wall_ms = t0.elapsed().as_secs_f64() * 1e3;
    let dir = session.out.join(method.name());
    session.write_image(&dir, &image)?;
    if let Some(out) = &run {
        io::write_text(&dir.join("report.csv"), &out.report.to_csv())?;
    }
    let nmse_db = nmse_db(&image, &session.scenario.truth.composite);
    Ok(Reconstruction { method, image, run, wall_ms, nmse_db })
}

pub fn reconstruct(session: &Session, method: Method) -> CliResult<Reconstruction> {
    solve(session, &session.problem()?, method)
}

impl Reconstruction {
    pub fn summary(&self) -> String {
        match &self.run {
            None => format!("{}: nmse {:.2} dB, {:.1} ms", self.method.name(), self.nmse_db, self.wall_ms),
            Some(out) => format!(
                "{}: {} iterations ({}), nmse {:.2} dB, {:.1} ms, {} active-pixel solves, {} bytes",
                self.method.name(),
                out.report.iterations(),
                if out.converged() { "converged" } else { "iteration cap" },
                self.nmse_db,
                self.wall_ms,
                out.report.active_pixel_solves(),
                out.report.total_bytes()
            ),
        }
    }
}

/// SADMM against ASADMM on the same measurements, with BP as the baseline.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub bp: Reconstruction,
    pub sadmm: Reconstruction,
    pub asadmm: Reconstruction,
    /// `|| |x_A| - |x_S| || / || |x_S| ||`.
    pub relative_difference: f64,
}

pub const COMPARE_HEADER: &str =
    "method,iterations,converged,wall_ms,active_pixel_solves,total_bytes,nmse_db,relative_difference";

impl Comparison {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(COMPARE_HEADER);
        out.push('\n');
        for r in [&self.bp, &self.sadmm, &self.asadmm] {
            let rel = match r.method {
                Method::Asadmm => self.relative_difference,
                Method::Sadmm => 0.0,
                Method::Bp => relative_difference(&r.image, &self.sadmm.image),
            };
            let (iters, conv, solves, bytes) = match &r.run {
                Some(o) => (
                    o.report.iterations().to_string(),
                    o.converged().to_string(),
                    o.report.active_pixel_solves().to_string(),
                    o.report.total_bytes().to_string(),
                ),
                None => (String::new(), String::new(), String::new(), String::new()),
            };
            let _ = writeln!(
                out,
                "{},{iters},{conv},{:.3},{solves},{bytes},{:.4},{:e}",
                r.method.name(),
                r.wall_ms,
                r.nmse_db,
                rel
            );
        }
        out
    }

    pub fn table(&self) -> String {
        let mut t = String::new();
        let _ = writeln!(t, "{:<8} {:>6} {:>10} {:>12} {:>12} {:>10}", "method", "iters", "wall ms", "solves", "bytes", "nmse dB");
        for r in [&self.bp, &self.sadmm, &self.asadmm] {
            let (iters, solves, bytes) = r.run.as_ref().map_or(("-".into(), "-".into(), "-".into()), |o| {
                (
                    o.report.iterations().to_string(),
                    o.report.active_pixel_solves().to_string(),
                    o.report.total_bytes().to_string(),
                )
            });
            let _ = writeln!(
                t,
                "{:<8} {:>6} {:>10.1} {:>12} {:>12} {:>10.2}",
                r.method.name(),
                iters,
                r.wall_ms,
                solves,
                bytes,
                r.nmse_db
            );
        }
        let _ = writeln!(t, "relative difference asadmm vs sadmm: {:.3e}", self.relative_difference);
        t
    }
}

pub fn compare(session: &Session) -> CliResult<Comparison> {
    let problem = session.problem()?;
    let bp = solve(session, &problem, Method::Bp)?;
    let sadmm = solve(session, &problem, Method::Sadmm)?;
    let asadmm = solve(session, &problem, Method::Asadmm)?;
    let cmp = Comparison { relative_difference: relative_difference(&asadmm.image, &sadmm.image), bp, sadmm, asadmm };
    io::write_text(&session.out.join("compare").join("summary.csv"), &cmp.to_csv())?;
    Ok(cmp)
}

pub const COMM_HEADER: &str = "round,sensor,messages,contribution_bytes,notice_bytes,fusion_bytes";

/// One row per round and sensor; the fusion reply size repeats on each.
pub fn comm_csv(comm: &CommStats) -> String {
    let mut out = String::from(COMM_HEADER);
    out.push('\n');
    for r in &comm.rounds {
        for q in 0..r.contribution_bytes.len() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.round,
                q + 1,
                r.sensor_messages[q],
                r.contribution_bytes[q],
                r.notice_bytes[q],
                r.fusion_bytes
            );
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct DistributedRun {
    pub mode: Mode,
    pub transport: TransportKind,
    pub output: RunOutput,
    pub comm: CommStats,
    pub wall_ms: f64,
}

impl DistributedRun {
    pub fn summary(&self) -> String {
        format!(
            "{} over {:?}: {} rounds ({}), {} bytes from sensors, {} bytes from fusion, {:.1} ms",
            self.mode.name(),
            self.transport,
            self.comm.rounds.len(),
            if self.output.converged() { "converged" } else { "iteration cap" },
            self.comm.sensor_total(),
            self.comm.fusion_total(),
            self.wall_ms
        )
    }
}

/// Runs the configured mode with sensor nodes on separate threads.
pub fn run_distributed_cmd(session: &Session, transport: TransportKind) -> CliResult<DistributedRun> {
    let problem = session.problem()?;
    let mode = session.config.mode();
    let mut tcfg = session.config.transport.clone();
    tcfg.kind = transport;
    let t0 = Instant::now();
    let (output, comm) = run_distributed(&problem, session.hyper(), mode, &tcfg, &mut StdClock::start())?;
    let wall_ms = t0.elapsed().as_secs_f64() * 1e3;
    let dir = session.out.join("distributed").join(mode.name());
    session.write_image(&dir, &output.image)?;
    io::write_text(&dir.join("report.csv"), &output.report.to_csv())?;
    io::write_text(&dir.join("comm.csv"), &comm_csv(&comm))?;
    Ok(DistributedRun { mode, transport, output, comm, wall_ms })
}
