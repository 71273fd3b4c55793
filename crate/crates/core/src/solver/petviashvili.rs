//! Fixed-speed Petviashvili iteration, an oracle independent of the
//! constrained descent.

use crate::error::{Error, Result};
use crate::functionals::{momentum, Problem};
use crate::grid::SpectralField;

use super::{center, SolveConfig, WaveProfile};

/// Solves `nu u = Lu + n(u)` at fixed `nu` by
/// `u <- S^gamma (nu - L)^{-1} D n(Du)` with `S = <u, (nu - L) u> / <u, D n(Du)>`
/// and `gamma = p / (p - 1)`.
///
/// Uses `cfg.tol_residual` and `cfg.max_iter`; the returned momentum is `Q(u)`.
pub fn petviashvili(prob: &Problem, nu: f64, cfg: &SolveConfig, guess: &SpectralField) -> Result<WaveProfile> {
    let m_zero = prob.symbol().m_zero();
    if !(nu > m_zero) {
        return Err(Error::SubcriticalSpeed { nu, m_zero });
    }
    let nl = prob.nonlinearity();
    if !nl.is_homogeneous() {
        return Err(Error::InvalidInput(format!(
            "Petviashvili iteration needs a homogeneous nonlinearity, {} has a remainder",
            nl.name()
        )));
    }
    let disc = prob.discretize(guess.grid());
    let shifted: Vec<f64> = disc.symbol_values().iter().map(|m| nu - m).collect();
    let inverse: Vec<f64> = shifted.iter().map(|s| 1.0 / s).collect();
    let gamma = nl.p() / (nl.p() - 1.0);

    let residual_of =
        |u: &SpectralField, n: &SpectralField| -> Result<f64> { Ok(u.multiply(&shifted).sub(n)?.norm_l2()) };

    let mut u = guess.dealias();
    let mut iterations = 0;
    loop {
        let n = disc.nonlinear_term(&u);
        let residual = residual_of(&u, &n)?;
        if !residual.is_finite() {
            return Err(Error::NoConvergence(format!(
                "non-finite residual after {iterations} iterations"
            )));
        }
        if residual <= cfg.tol_residual {
            break;
        }
        if iterations >= cfg.max_iter {
            return Err(Error::NoConvergence(format!(
                "residual {residual:e} after {iterations} iterations"
            )));
        }
        let num = u.multiply(&shifted).inner_spectral(&u)?;
        let den = n.inner_spectral(&u)?;
        if !(den != 0.0 && num / den > 0.0) {
            return Err(Error::NoConvergence(format!(
                "stabilizing factor undefined at iteration {iterations} ({num:e} / {den:e})"
            )));
        }
        let s = (num / den).powf(gamma);
        u = n.multiply(&inverse).scale(s);
        iterations += 1;
    }

    let field = center(&u);
    let n = disc.nonlinear_term(&field);
    Ok(WaveProfile {
        mu: momentum(&field),
        nu,
        residual: residual_of(&field, &n)?,
        energy: disc.energy(&field),
        field,
        symbol: prob.symbol().name().to_string(),
        nonlinearity: nl.name().to_string(),
        m_zero,
        iterations,
    })
}
