//! Projected gradient descent on the momentum sphere `{Q = mu}`.
//!
//! Each iteration forms the gradient `g = E'(u)`, the multiplier
//! `nu = -<g, u> / (2 mu)` and the residual `r = g + nu u`. The search
//! direction is `d = -M (g + lambda u)` for a positive mode-wise
//! preconditioner `M`, with `lambda` chosen so that `<d, u> = 0`; for `M = I`
//! this is the plain tangential gradient. A backtracking line search runs on
//! `t -> E(renormalize(u + t d))`.

use crate::error::{Error, Result};
use crate::functionals::{add_penalty_gradient, momentum, Discretization, Problem};
use crate::grid::{norm_hs, SpectralField};
use crate::registry::{no_args, Registry};

use super::{center, renormalize, SolveConfig, WaveProfile};

/// Mode-wise positive weights applied to the descent direction.
pub trait Preconditioner: Send + Sync {
    fn name(&self) -> &str;
    /// Weights in transform order for an iterate with multiplier estimate `nu`.
    fn weights(&self, disc: &Discretization, nu: f64) -> Vec<f64>;
}

struct Identity;

impl Preconditioner for Identity {
    fn name(&self) -> &str {
        "identity"
    }

    fn weights(&self, disc: &Discretization, _nu: f64) -> Vec<f64> {
        vec![1.0; disc.grid().points()]
    }
}

/// `(1 + k^(2j*))^{-1}`.
struct Sobolev;

impl Preconditioner for Sobolev {
    fn name(&self) -> &str {
        "sobolev"
    }

    fn weights(&self, disc: &Discretization, _nu: f64) -> Vec<f64> {
        let order = 2 * disc.problem().symbol().j_star() as i32;
        disc.grid()
            .wavenumbers()
            .into_iter()
            .map(|k| 1.0 / (1.0 + k.powi(order)))
            .collect()
    }
}

/// `(nu - m(k))^{-1}`, the linear part of the travelling-wave operator, with
/// the shift floored so the weights stay positive for subcritical estimates.
struct Resolvent;

const RESOLVENT_FLOOR: f64 = 1e-6;

impl Preconditioner for Resolvent {
    fn name(&self) -> &str {
        "resolvent"
    }

    fn weights(&self, disc: &Discretization, nu: f64) -> Vec<f64> {
        let m_zero = disc.problem().symbol().m_zero();
        let shift = (nu - m_zero).max(RESOLVENT_FLOOR);
        disc.symbol_values()
            .iter()
            .map(|m| 1.0 / (shift + m_zero - m))
            .collect()
    }
}

pub fn preconditioner_registry() -> Registry<Box<dyn Preconditioner>> {
    let mut reg: Registry<Box<dyn Preconditioner>> = Registry::new("preconditioner");
    reg.register("identity", |a| {
        no_args(a, "identity")?;
        Ok(Box::new(Identity))
    });
    reg.register("sobolev", |a| {
        no_args(a, "sobolev")?;
        Ok(Box::new(Sobolev))
    });
    reg.register("resolvent", |a| {
        no_args(a, "resolvent")?;
        Ok(Box::new(Resolvent))
    });
    reg
}

/// Per-iteration record of an accepted step.
#[derive(Debug, Clone, Copy)]
pub struct IterationRecord {
    pub energy: f64,
    pub momentum: f64,
    pub residual: f64,
    pub step: f64,
    /// Round-off allowance used in the sufficient-decrease test.
    pub slack: f64,
}

pub fn minimize_constrained(prob: &Problem, cfg: &SolveConfig, guess: &SpectralField) -> Result<WaveProfile> {
    minimize_constrained_with_history(prob, cfg, guess).map(|(p, _)| p)
}

struct Objective<'a> {
    disc: &'a Discretization,
    cfg: &'a SolveConfig,
}

impl Objective<'_> {
    /// Objective value and its round-off scale.
    fn value(&self, u: &SpectralField) -> Result<(f64, f64)> {
        let parts = self.disc.energy_parts(u);
        let mut value = parts.total();
        if let Some(pen) = &self.cfg.penalization {
            let t = norm_hs(u, 1.0).powi(2);
            if t >= pen.limit() {
                return Err(Error::OutOfDomain {
                    norm_sq: t,
                    limit: pen.limit(),
                });
            }
            value += pen.value(t);
        }
        Ok((value, parts.scale() + value.abs()))
    }

    fn gradient(&self, u: &SpectralField) -> SpectralField {
        let g = self.disc.gradient(u);
        match &self.cfg.penalization {
            Some(pen) => add_penalty_gradient(&g, u, pen.derivative(norm_hs(u, 1.0).powi(2))),
            None => g,
        }
    }
}

fn weighted(u: &SpectralField, w: &[f64]) -> SpectralField {
    u.multiply(w)
}

pub fn minimize_constrained_with_history(
    prob: &Problem,
    cfg: &SolveConfig,
    guess: &SpectralField,
) -> Result<(WaveProfile, Vec<IterationRecord>)> {
    cfg.validate()?;
    if !(momentum(guess) > 0.0) {
        return Err(Error::InvalidInput("initial guess must have Q > 0".into()));
    }
    let precond = preconditioner_registry().build(&cfg.preconditioner)?;
    let grid = guess.grid().clone();
    let disc = prob.discretize(&grid);
    let objective = Objective { disc: &disc, cfg };
    let mu = cfg.mu;
    let two_mu = 2.0 * mu;
    let ball_limit = cfg.penalization.map(|p| 2.0 * p.radius);

    let mut u = renormalize(&guess.dealias(), mu)?;
    let (mut value, mut scale) = objective.value(&u).map_err(|_| Error::BallExit {
        limit: ball_limit.unwrap_or(f64::INFINITY),
    })?;
    let mut history = Vec::new();
    let mut residual_history = Vec::new();
    let mut iterations = 0;

    loop {
        let g = objective.gradient(&u);
        let nu = -g.inner_spectral(&u)? / two_mu;
        let r = g.axpy(nu, &u)?;
        let residual = r.norm_l2();
        residual_history.push(residual);
        if !residual.is_finite() {
            return Err(Error::MuTooLarge(format!(
                "non-finite residual at iteration {iterations}"
            )));
        }
        if residual <= cfg.tol_residual {
            break;
        }
        if iterations >= cfg.max_iter {
            return Err(Error::MaxIter {
                iterations,
                residual,
                history: residual_history,
            });
        }

        let w = precond.weights(&disc, nu);
        let mg = weighted(&g, &w);
        let mu_dir = weighted(&u, &w);
        let lambda = -mg.inner_spectral(&u)? / mu_dir.inner_spectral(&u)?;
        // <g, d> = <q, d> since d is tangent; the latter avoids cancellation
        let q = g.axpy(lambda, &u)?;
        let d = mg.axpy(lambda, &mu_dir)?.scale(-1.0);
        let slope = q.inner_spectral(&d)?;
        if !(slope < 0.0) {
            return Err(Error::NoConvergence(format!(
                "descent stalled at iteration {iterations} with residual {residual:e}"
            )));
        }

        let slack = 32.0 * f64::EPSILON * scale;
        let mut t = cfg.step.initial;
        let accepted = loop {
            let candidate = renormalize(&u.axpy(t, &d)?, mu)?;
            match objective.value(&candidate) {
                Ok((v, s)) if v <= value + cfg.step.sufficient_decrease * t * slope + slack => {
                    break Some((candidate, v, s));
                }
                _ => {}
            }
            t *= cfg.step.shrink;
            if t < 1e-14 * cfg.step.initial {
                break None;
            }
        };
        let Some((next, v, s)) = accepted else {
            return Err(Error::MuTooLarge(format!(
                "line search failed at iteration {iterations} (residual {residual:e})"
            )));
        };
        u = next;
        value = v;
        scale = s;
        iterations += 1;
        history.push(IterationRecord {
            energy: value,
            momentum: momentum(&u),
            residual,
            step: t,
            slack,
        });
    }

    let g = objective.gradient(&u);
    let nu = -g.inner_spectral(&u)? / two_mu;
    let residual = g.axpy(nu, &u)?.norm_l2();
    let m_zero = prob.symbol().m_zero();
    if !(nu > m_zero) {
        return Err(Error::MuTooLarge(format!(
            "converged multiplier {nu} does not exceed m(0) = {m_zero}"
        )));
    }
    let field = center(&u);
    let energy = disc.energy(&field);
    Ok((
        WaveProfile {
            field,
            mu,
            nu,
            residual,
            energy,
            symbol: prob.symbol().name().to_string(),
            nonlinearity: prob.nonlinearity().name().to_string(),
            m_zero,
            iterations,
        },
        history,
    ))
}
