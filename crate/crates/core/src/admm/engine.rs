use alloc::vec::Vec;

use crate::dist::wire::{contribution_len, notice_len};
use crate::error::{Error, Result};
use crate::forward::ForwardOperator;
use crate::C64;

use super::fusion::{aggregate, FusionState, RoundStatus};
use super::params::{Hyperparams, Mode};
use super::report::{ConvergenceReport, IterationRecord};
use super::sensor::SensorSolver;

/// Monotonic millisecond source for run timing.
pub trait Clock {
    fn elapsed_ms(&mut self) -> f64;
}

/// Clock that always reads zero.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn elapsed_ms(&mut self) -> f64 {
        0.0
    }
}

/// Per-sensor operators and echoes.
#[derive(Debug, Clone)]
pub struct Problem {
    ops: Vec<ForwardOperator>,
    ys: Vec<Vec<C64>>,
}

impl Problem {
    pub fn new(ops: Vec<ForwardOperator>, ys: Vec<Vec<C64>>) -> Result<Self> {
        let first = ops.first().ok_or(Error::EmptyInput("problem needs at least one sensor"))?;
        if ys.len() != ops.len() {
            return Err(Error::DimensionMismatch { expected: ops.len(), actual: ys.len() });
        }
        let n = first.cols();
        for (i, op) in ops.iter().enumerate() {
            if ops[..i].iter().any(|o| o.sensor() == op.sensor()) {
                return Err(Error::InvalidParameter(alloc::format!("duplicate sensor id {}", op.sensor())));
            }
        }
        for (op, y) in ops.iter().zip(&ys) {
            if op.cols() != n {
                return Err(Error::DimensionMismatch { expected: n, actual: op.cols() });
            }
            if y.len() != op.rows() {
                return Err(Error::DimensionMismatch { expected: op.rows(), actual: y.len() });
            }
        }
        Ok(Self { ops, ys })
    }

    pub fn ops(&self) -> &[ForwardOperator] {
        &self.ops
    }

    pub fn measurements(&self) -> &[Vec<C64>] {
        &self.ys
    }

    pub fn sensors(&self) -> usize {
        self.ops.len()
    }

    /// Pixel count `N`.
    pub fn pixels(&self) -> usize {
        self.ops[0].cols()
    }
}

/// Value of the sharing objective
/// `sum_q mu/2 ||y_q - A_q x_q||^2 + lambda ||sum_q x_q||_1`
/// at the given per-sensor full-length images.
pub fn sharing_objective(problem: &Problem, hyper: &Hyperparams, images: &[Vec<C64>]) -> Result<f64> {
    if images.len() != problem.sensors() {
        return Err(Error::DimensionMismatch { expected: problem.sensors(), actual: images.len() });
    }
    let mut fit = 0.0;
    for ((op, y), x) in problem.ops.iter().zip(&problem.ys).zip(images) {
        let ax = op.apply(x)?;
        fit += ax.iter().zip(y).map(|(a, b)| (b - a).norm_sqr()).sum::<f64>();
    }
    let s = aggregate(problem.pixels(), images.iter().map(Vec::as_slice))?;
    let l1: f64 = s.iter().map(|z| z.norm()).sum();
    Ok(0.5 * hyper.mu * fit + hyper.lambda * l1)
}

/// Final state of a solver run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    /// `|x_G|`.
    pub image: Vec<f64>,
    pub global: Vec<C64>,
    /// Per-sensor full-length images.
    pub sensor_images: Vec<Vec<C64>>,
    pub report: ConvergenceReport,
}

impl RunOutput {
    pub fn converged(&self) -> bool {
        self.report.converged
    }
}

/// Single-process SADMM/ASADMM driver. Each iteration is a synchronous
/// sweep: every sensor solves with iteration-`k` values, then the global,
/// dual and stopping steps run, then (ASADMM only) the screening rule.
#[derive(Debug, Clone)]
pub struct Engine {
    mode: Mode,
    hyper: Hyperparams,
    screening: bool,
    sensors: Vec<SensorSolver>,
    fusion: FusionState,
    report: ConvergenceReport,
    pending_notice_bytes: Vec<u64>,
    finished: bool,
}

impl Engine {
    pub fn new(problem: &Problem, hyper: Hyperparams, mode: Mode) -> Result<Self> {
        hyper.validate()?;
        let track = mode == Mode::Asadmm;
        let q = problem.sensors();
        let sensors = problem
            .ops
            .iter()
            .zip(&problem.ys)
            .map(|(op, y)| SensorSolver::new(op, y, &hyper, q, track))
            .collect::<Result<Vec<_>>>()?;
        let fusion = FusionState::new(problem.pixels(), q, hyper)?;
        Ok(Self {
            mode,
            hyper,
            screening: track,
            pending_notice_bytes: alloc::vec![0; sensors.len()],
            sensors,
            fusion,
            report: ConvergenceReport::default(),
            finished: false,
        })
    }

    /// Keeps the ASADMM bookkeeping but never lets the screening rule fire.
    pub fn disable_screening(&mut self) {
        self.screening = false;
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn sensors(&self) -> &[SensorSolver] {
        &self.sensors
    }

    pub fn fusion(&self) -> &FusionState {
        &self.fusion
    }

    pub fn report(&self) -> &ConvergenceReport {
        &self.report
    }

    pub fn iteration(&self) -> usize {
        self.report.iterations()
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    /// Runs one full iteration.
    pub fn step(&mut self, clock: &mut dyn Clock) -> Result<RoundStatus> {
        let k = self.iteration();
        let n = self.fusion.len();
        let mut bytes = core::mem::replace(&mut self.pending_notice_bytes, alloc::vec![0; self.sensors.len()]);
        let mut active_pixels = 0;
        let mut max_active = 0;
        for (sensor, b) in self.sensors.iter_mut().zip(bytes.iter_mut()) {
            sensor.local_update(self.fusion.global(), self.fusion.aggregate(), self.fusion.dual())?;
            let nq = sensor.active().len();
            active_pixels += nq;
            max_active = max_active.max(nq);
            *b += contribution_len(nq) as u64;
        }
        let s = aggregate(n, self.sensors.iter().map(SensorSolver::image))?;
        let status = self.fusion.advance(s, k == 0)?;
        self.report.records.push(IterationRecord {
            iter: k + 1,
            pri_res: status.pri_res,
            dual_res: status.dual_res,
            eps_pri: status.eps_pri,
            eps_dual: status.eps_dual,
            active_frac: max_active as f64 / n as f64,
            active_pixels,
            ms_elapsed: clock.elapsed_ms(),
            bytes_per_sensor: bytes,
        });
        if status.converged || k + 1 >= self.hyper.max_iter {
            self.report.converged = status.converged;
            self.finished = true;
            return Ok(status);
        }
        if self.screening {
            for (sensor, pending) in self.sensors.iter_mut().zip(self.pending_notice_bytes.iter_mut()) {
                let outcome = sensor.screen(status.primal_ok(), self.hyper.eps_p)?;
                if outcome.degenerate {
                    self.report.degenerate_screens += 1;
                }
                if !outcome.is_empty() {
                    *pending = notice_len(outcome.removed.len()) as u64;
                }
            }
        }
        Ok(status)
    }

    /// Iterates until convergence or `max_iter`.
    pub fn run_to_end(&mut self, clock: &mut dyn Clock) -> Result<()> {
        while !self.finished {
            self.step(clock)?;
        }
        Ok(())
    }

    pub fn into_output(self) -> RunOutput {
        let global = self.fusion.global().to_vec();
        RunOutput {
            image: global.iter().map(|z| z.norm()).collect(),
            global,
            sensor_images: self.sensors.iter().map(|s| s.image().to_vec()).collect(),
            report: self.report,
        }
    }
}

/// Runs SADMM or ASADMM to completion without timing.
pub fn run(problem: &Problem, hyper: Hyperparams, mode: Mode) -> Result<RunOutput> {
    run_with_clock(problem, hyper, mode, &mut NoClock)
}

pub fn run_with_clock(problem: &Problem, hyper: Hyperparams, mode: Mode, clock: &mut dyn Clock) -> Result<RunOutput> {
    let mut engine = Engine::new(problem, hyper, mode)?;
    engine.run_to_end(clock)?;
    Ok(engine.into_output())
}
