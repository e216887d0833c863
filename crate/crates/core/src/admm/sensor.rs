use alloc::collections::VecDeque;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::forward::ForwardOperator;
use crate::linalg::{factorize_gram, restrict_gram, solve_local, LocalSolveCache};
use crate::C64;

use super::params::{Hyperparams, Unknowns};

/// Result of one screening pass on a sensor.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Screening {
    /// Indices dropped from the active set, ascending.
    pub removed: Vec<usize>,
    /// Values those pixels are frozen at.
    pub frozen: Vec<C64>,
    /// Every active pixel passed the test; the active set was kept as is.
    pub degenerate: bool,
}

impl Screening {
    pub fn is_empty(&self) -> bool {
        self.removed.is_empty()
    }
}

/// Local state of one sensor: its full-length image, active set, cached
/// factorization and screening history.
#[derive(Debug, Clone)]
pub struct SensorSolver {
    id: usize,
    mu: f64,
    beta: f64,
    /// Number of sensors sharing the global image.
    share: f64,
    gram: DMatrix<C64>,
    aty: Vec<C64>,
    active: Vec<usize>,
    x_full: Vec<C64>,
    /// `mu * restrict(A^H y - A^H A frozen)` on the active set.
    data_term: Vec<C64>,
    cache: LocalSolveCache,
    history: VecDeque<Vec<C64>>,
    history_len: usize,
}

impl SensorSolver {
    /// Set `track_history` for screening runs; it keeps the last
    /// `window + 1` full-length iterates.
    pub fn new(op: &ForwardOperator, y: &[C64], hyper: &Hyperparams, sensors: usize, track_history: bool) -> Result<Self> {
        hyper.validate()?;
        if sensors == 0 {
            return Err(Error::InvalidParameter("sensor count must be positive".into()));
        }
        let mut aty = op.apply_adjoint(y)?;
        let n = op.cols();
        let mut gram = op.gram();
        if hyper.unknowns == Unknowns::Real {
            gram.iter_mut().for_each(|z| z.im = 0.0);
            aty.iter_mut().for_each(|z| z.im = 0.0);
        }
        let active: Vec<usize> = (0..n).collect();
        let cache = factorize_gram(&gram, active.clone(), hyper.mu, hyper.beta)?;
        let x_full = alloc::vec![C64::new(0.0, 0.0); n];
        let history_len = if track_history { hyper.window + 1 } else { 0 };
        let mut history = VecDeque::with_capacity(history_len);
        if track_history {
            history.push_back(x_full.clone());
        }
        let mut solver = Self {
            id: op.sensor(),
            mu: hyper.mu,
            beta: hyper.beta,
            share: sensors as f64,
            gram,
            aty,
            active,
            x_full,
            data_term: Vec::new(),
            cache,
            history,
            history_len,
        };
        solver.refresh_data_term();
        Ok(solver)
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn image(&self) -> &[C64] {
        &self.x_full
    }

    /// Current active sub-vector `x_hat_q`.
    pub fn active_values(&self) -> Vec<C64> {
        self.active.iter().map(|&j| self.x_full[j]).collect()
    }

    pub fn cache(&self) -> &LocalSolveCache {
        &self.cache
    }

    fn refresh_data_term(&mut self) {
        let mut inactive = Vec::new();
        let mut cursor = 0;
        for j in 0..self.x_full.len() {
            if self.active.get(cursor) == Some(&j) {
                cursor += 1;
            } else if self.x_full[j] != C64::new(0.0, 0.0) {
                inactive.push(j);
            }
        }
        let mu = self.mu;
        self.data_term = self
            .active
            .iter()
            .map(|&i| {
                let coupled = inactive.iter().fold(C64::new(0.0, 0.0), |acc, &j| acc + self.gram[(i, j)] * self.x_full[j]);
                (self.aty[i] - coupled) * mu
            })
            .collect();
    }

    /// Local step of sharing ADMM with all cross terms at iteration `k`:
    ///
    /// `(mu A^H A + beta I) x = mu A^H (y - A frozen) + beta (x^k + (x_G - s) / Q) - sigma`
    ///
    /// restricted to the active set. `x_g`, `s` and `sigma` are full-length;
    /// only entries on the active set are read.
    pub fn local_update(&mut self, x_g: &[C64], s: &[C64], sigma: &[C64]) -> Result<()> {
        let n = self.x_full.len();
        for v in [x_g, s, sigma] {
            if v.len() != n {
                return Err(Error::DimensionMismatch { expected: n, actual: v.len() });
            }
        }
        if !self.cache.is_valid_for(&self.active) {
            return Err(Error::StaleCache { cached: self.cache.len(), active: self.active.len() });
        }
        let beta = self.beta;
        let coupling = beta / self.share;
        let rhs: Vec<C64> = self
            .active
            .iter()
            .zip(&self.data_term)
            .map(|(&j, &d)| d + (x_g[j] - s[j]) * coupling + self.x_full[j] * beta - sigma[j])
            .collect();
        let x_hat = solve_local(&self.cache, &rhs)?;
        for (&j, v) in self.active.iter().zip(x_hat) {
            self.x_full[j] = v;
        }
        if self.history_len > 0 {
            if self.history.len() == self.history_len {
                self.history.pop_front();
            }
            self.history.push_back(self.x_full.clone());
        }
        Ok(())
    }

    /// Mean absolute successive change over the history window, on the
    /// active set. `None` until the window is full.
    pub fn change_rates(&self) -> Option<Vec<f64>> {
        if self.history_len == 0 || self.history.len() < self.history_len {
            return None;
        }
        let pairs = (self.history_len - 1) as f64;
        let rates = self
            .active
            .iter()
            .map(|&j| {
                let total = self
                    .history
                    .iter()
                    .zip(self.history.iter().skip(1))
                    .fold(0.0, |acc, (prev, next)| acc + (next[j] - prev[j]).norm());
                total / pairs
            })
            .collect();
        Some(rates)
    }

    /// Screening rule: when `triggered` (primal residual within tolerance) and
    /// the window is full, drops active pixels whose mean change is below
    /// `eps_p`. Dropped pixels keep their last value.
    pub fn screen(&mut self, triggered: bool, eps_p: f64) -> Result<Screening> {
        if !triggered {
            return Ok(Screening::default());
        }
        let Some(rates) = self.change_rates() else {
            return Ok(Screening::default());
        };
        let mut keep = Vec::with_capacity(self.active.len());
        let mut removed = Vec::new();
        for (&j, &z) in self.active.iter().zip(&rates) {
            if z >= eps_p {
                keep.push(j);
            } else {
                removed.push(j);
            }
        }
        if removed.is_empty() {
            return Ok(Screening::default());
        }
        if keep.is_empty() {
            return Ok(Screening { degenerate: true, ..Screening::default() });
        }
        let frozen = removed.iter().map(|&j| self.x_full[j]).collect();
        self.set_active(keep)?;
        Ok(Screening { removed, frozen, degenerate: false })
    }

    /// Replaces the active set with a subset of it and refactorizes.
    pub fn set_active(&mut self, active: Vec<usize>) -> Result<()> {
        if active.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("active set must be sorted and unique".into()));
        }
        if !active.iter().all(|j| self.active.binary_search(j).is_ok()) {
            return Err(Error::InvalidParameter("active set may only shrink".into()));
        }
        let sub = restrict_gram(&self.gram, &active);
        self.cache = factorize_gram(&sub, active.clone(), self.mu, self.beta)?;
        self.active = active;
        self.refresh_data_term();
        Ok(())
    }
}
