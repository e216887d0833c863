use crate::error::{Error, Result};

/// Which solver variant to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Plain sharing ADMM: every sensor keeps the full image active.
    Sadmm,
    /// Sharing ADMM with screening of converged pixels.
    Asadmm,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Sadmm => "sadmm",
            Mode::Asadmm => "asadmm",
        }
    }
}

/// Domain of the per-sensor images.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Unknowns {
    /// Real reflectivities: the local systems use `Re(A^H A)` and `Re(A^H y)`,
    /// so every iterate has a zero imaginary part.
    #[default]
    Real,
    /// Unconstrained complex images.
    Complex,
}

/// Solver hyperparameters. Defaults are the 64x64 reference settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperparams {
    /// Data-fidelity weight.
    pub mu: f64,
    /// l1 weight on the global image.
    pub lambda: f64,
    /// Augmented Lagrangian penalty.
    pub beta: f64,
    pub eps_abs: f64,
    pub eps_rel: f64,
    /// Number of successive iterate differences averaged by the screening rule.
    pub window: usize,
    /// Screening tolerance on the mean absolute change.
    pub eps_p: f64,
    pub max_iter: usize,
    pub unknowns: Unknowns,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            mu: 3.0,
            lambda: 20.0,
            beta: 100.0,
            eps_abs: 1e-4,
            eps_rel: 1e-2,
            window: 5,
            eps_p: 1e-5,
            max_iter: 1000,
            unknowns: Unknowns::Real,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, name: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(alloc::format!("{name} must be positive and finite")))
            }
        };
        positive(self.mu, "mu")?;
        positive(self.beta, "beta")?;
        positive(self.eps_abs, "eps_abs")?;
        positive(self.eps_rel, "eps_rel")?;
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidParameter("lambda must be nonnegative and finite".into()));
        }
        if !(self.eps_p >= 0.0 && self.eps_p.is_finite()) {
            return Err(Error::InvalidParameter("eps_p must be nonnegative and finite".into()));
        }
        if self.window < 2 {
            return Err(Error::InvalidParameter("screening window must be at least 2".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be at least 1".into()));
        }
        Ok(())
    }

    /// Soft-threshold level of the global update.
    pub fn threshold(&self) -> f64 {
        self.lambda / self.beta
    }
}
