use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

/// Diagnostics of one completed iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    /// 1-based iteration number.
    pub iter: usize,
    pub pri_res: f64,
    pub dual_res: f64,
    pub eps_pri: f64,
    pub eps_dual: f64,
    /// `max_q N_q / N` during this iteration's local solves.
    pub active_frac: f64,
    /// `sum_q N_q` during this iteration's local solves.
    pub active_pixels: usize,
    /// Milliseconds since the start of the run.
    pub ms_elapsed: f64,
    /// Bytes sent by each sensor node this round.
    pub bytes_per_sensor: Vec<u64>,
}

impl IterationRecord {
    pub fn bytes_sent(&self) -> u64 {
        self.bytes_per_sensor.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConvergenceReport {
    pub records: Vec<IterationRecord>,
    pub converged: bool,
    /// Screening passes that would have emptied an active set.
    pub degenerate_screens: usize,
}

pub const CSV_HEADER: &str = "iter,pri_res,dual_res,eps_pri,eps_dual,active_frac,ms_elapsed,bytes_sent";

impl ConvergenceReport {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    /// `sum_k sum_q N_q^(k)`.
    pub fn active_pixel_solves(&self) -> u64 {
        self.records.iter().map(|r| r.active_pixels as u64).sum()
    }

    pub fn total_bytes(&self) -> u64 {
        self.records.iter().map(IterationRecord::bytes_sent).sum()
    }

    pub fn elapsed_ms(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.ms_elapsed)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{:e},{:e},{:e},{:e},{},{:.3},{}",
                r.iter,
                r.pri_res,
                r.dual_res,
                r.eps_pri,
                r.eps_dual,
                r.active_frac,
                r.ms_elapsed,
                r.bytes_sent()
            );
        }
        out
    }
}
