use alloc::vec::Vec;

// f64 math without std; unused when the test harness links std
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::shrink;
use crate::C64;

use super::params::Hyperparams;

/// Elementwise sum of the per-sensor full-length images, in sensor order.
pub fn aggregate<'a, I>(n: usize, images: I) -> Result<Vec<C64>>
where
    I: IntoIterator<Item = &'a [C64]>,
{
    let mut s = alloc::vec![C64::new(0.0, 0.0); n];
    for img in images {
        if img.len() != n {
            return Err(Error::DimensionMismatch { expected: n, actual: img.len() });
        }
        for (acc, v) in s.iter_mut().zip(img) {
            *acc += v;
        }
    }
    Ok(s)
}

fn norm2(v: &[C64]) -> f64 {
    v.iter().fold(0.0, |acc, z| acc + z.norm_sqr()).sqrt()
}

/// Residuals and tolerances of one completed iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundStatus {
    pub pri_res: f64,
    pub dual_res: f64,
    pub eps_pri: f64,
    pub eps_dual: f64,
    pub converged: bool,
}

impl RoundStatus {
    /// Primal feasibility gate used by the screening rule.
    pub fn primal_ok(&self) -> bool {
        self.pri_res <= self.eps_pri
    }
}

/// Global image, dual variable and aggregate held by the fusion side.
#[derive(Debug, Clone)]
pub struct FusionState {
    hyper: Hyperparams,
    share: f64,
    s: Vec<C64>,
    x_g: Vec<C64>,
    sigma: Vec<C64>,
    x_g_prev: Option<Vec<C64>>,
}

impl FusionState {
    pub fn new(n: usize, sensors: usize, hyper: Hyperparams) -> Result<Self> {
        hyper.validate()?;
        if sensors == 0 {
            return Err(Error::InvalidParameter("sensor count must be positive".into()));
        }
        let zero = alloc::vec![C64::new(0.0, 0.0); n];
        Ok(Self { hyper, share: sensors as f64, s: zero.clone(), x_g: zero.clone(), sigma: zero, x_g_prev: None })
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn aggregate(&self) -> &[C64] {
        &self.s
    }

    pub fn global(&self) -> &[C64] {
        &self.x_g
    }

    pub fn dual(&self) -> &[C64] {
        &self.sigma
    }

    /// Soft-threshold level `Q lambda / beta` of the global step.
    pub fn threshold(&self) -> f64 {
        self.share * self.hyper.threshold()
    }

    /// `x_G = S(s + Q sigma / beta, Q lambda / beta)`.
    pub fn global_update(&mut self) {
        let scale = self.share / self.hyper.beta;
        let kappa = self.threshold();
        let prev = core::mem::take(&mut self.x_g);
        self.x_g = self.s.iter().zip(&self.sigma).map(|(s, sg)| shrink(s + sg * scale, kappa)).collect();
        self.x_g_prev = Some(prev);
    }

    /// `sigma += (beta / Q) (s - x_G)`; returns the primal residual norm.
    pub fn dual_update(&mut self) -> f64 {
        let step = self.hyper.beta / self.share;
        let mut sq = 0.0;
        for ((sg, s), g) in self.sigma.iter_mut().zip(&self.s).zip(&self.x_g) {
            let r = s - g;
            sq += r.norm_sqr();
            *sg += r * step;
        }
        sq.sqrt()
    }

    /// Residual norms and tolerances for the current iterate. `first` marks
    /// the first iteration, which never counts as converged.
    pub fn stopping_check(&self, pri_res: f64, first: bool) -> RoundStatus {
        let h = &self.hyper;
        let root_n = (self.len() as f64).sqrt();
        let eps_pri = root_n * h.eps_abs + h.eps_rel * norm2(&self.s).max(norm2(&self.x_g));
        let eps_dual = root_n * h.eps_abs + h.eps_rel * norm2(&self.sigma);
        let dual_res = match &self.x_g_prev {
            Some(prev) => {
                h.beta * self.x_g.iter().zip(prev).fold(0.0, |acc, (a, b)| acc + (a - b).norm_sqr()).sqrt()
            }
            None => 0.0,
        };
        let converged = !first && self.x_g_prev.is_some() && pri_res <= eps_pri && dual_res <= eps_dual;
        RoundStatus { pri_res, dual_res, eps_pri, eps_dual, converged }
    }

    /// Installs a fresh aggregate and runs the global, dual and stopping
    /// steps of one iteration.
    pub fn advance(&mut self, s: Vec<C64>, first: bool) -> Result<RoundStatus> {
        if s.len() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), actual: s.len() });
        }
        self.s = s;
        self.global_update();
        let pri = self.dual_update();
        Ok(self.stopping_check(pri, first))
    }
}
