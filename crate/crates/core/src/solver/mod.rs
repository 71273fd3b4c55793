//! Constrained minimization of the energy at fixed momentum, a fixed-speed
//! Petviashvili oracle, and continuation in the momentum.

mod descent;
mod petviashvili;
mod sweep;

pub use descent::{
    minimize_constrained, minimize_constrained_with_history, preconditioner_registry, IterationRecord, Preconditioner,
};
pub use petviashvili::petviashvili;
pub use sweep::{continuation_sweep, warm_start, GridPolicy, SweepEntry, SweepResult};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{momentum, Penalization};
use crate::grid::SpectralField;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StepPolicy {
    pub initial: f64,
    pub shrink: f64,
    pub sufficient_decrease: f64,
}

impl Default for StepPolicy {
    fn default() -> Self {
        StepPolicy {
            initial: 1.0,
            shrink: 0.5,
            sufficient_decrease: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveConfig {
    /// Target momentum `Q(u) = mu`.
    pub mu: f64,
    /// Stop once `||E'(u) + nu u||_0` falls to this value.
    pub tol_residual: f64,
    pub max_iter: usize,
    pub step: StepPolicy,
    /// Adds `rho(||u||_{H1}^2)` to the energy when set.
    pub penalization: Option<Penalization>,
    /// Name in [`preconditioner_registry`].
    pub preconditioner: String,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            mu: 1e-3,
            tol_residual: 1e-9,
            max_iter: 50_000,
            step: StepPolicy::default(),
            penalization: None,
            preconditioner: "resolvent".to_string(),
        }
    }
}

impl SolveConfig {
    pub fn with_mu(mu: f64) -> Self {
        SolveConfig { mu, ..Self::default() }
    }

    /// Settings for the reduced problem: `mu = 1` and the Sobolev
    /// preconditioner, since its symbol is unbounded.
    pub fn reduced_default() -> Self {
        SolveConfig {
            mu: 1.0,
            tol_residual: 1e-10,
            preconditioner: "sobolev".to_string(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::InvalidInput(format!("mu must be positive, got {}", self.mu)));
        }
        if !(self.tol_residual > 0.0) {
            return Err(Error::InvalidInput("tol_residual must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidInput("max_iter must be positive".into()));
        }
        let s = &self.step;
        if !(s.initial > 0.0
            && s.shrink > 0.0
            && s.shrink < 1.0
            && s.sufficient_decrease > 0.0
            && s.sufficient_decrease < 1.0)
        {
            return Err(Error::InvalidInput(format!("invalid step policy {s:?}")));
        }
        Ok(())
    }
}

/// A computed travelling wave.
#[derive(Debug, Clone)]
pub struct WaveProfile {
    pub field: SpectralField,
    pub mu: f64,
    /// Wave speed, the Lagrange multiplier of the momentum constraint.
    pub nu: f64,
    /// `||E'(u) + nu u||_0`.
    pub residual: f64,
    pub energy: f64,
    pub symbol: String,
    pub nonlinearity: String,
    pub m_zero: f64,
    pub iterations: usize,
}

impl WaveProfile {
    pub fn supercritical(&self) -> bool {
        self.nu > self.m_zero
    }
}

/// Largest `|u|` over the outer 10% of the period.
pub fn tail_check(u: &SpectralField) -> f64 {
    u.edge_max(0.1)
}

/// Rescales `u` onto `{Q = mu}`.
pub fn renormalize(u: &SpectralField, mu: f64) -> Result<SpectralField> {
    let q = momentum(u);
    if !(q > 0.0) {
        return Err(Error::InvalidInput("cannot renormalize a zero field".into()));
    }
    Ok(u.scale((mu / q).sqrt()))
}

/// Cyclically shifts the node holding `max |u|` to `x = 0`.
pub fn center(u: &SpectralField) -> SpectralField {
    let (argmax, _) = u.values().iter().enumerate().fold(
        (0, -1.0),
        |(bi, bv), (i, v)| if v.abs() > bv { (i, v.abs()) } else { (bi, bv) },
    );
    let mid = u.grid().points() / 2;
    u.cyclic_shift(argmax as isize - mid as isize)
}
