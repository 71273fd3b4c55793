//! Continuation in the momentum with long-wave seeds and per-`mu` grids.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::Problem;
use crate::grid::{resample_to_grid, PeriodicGrid, SpectralField, DEFAULT_TAIL_TOL};
use crate::longwave::{long_wave_seed, ReducedGroundState, ScalingExponents};

use super::{minimize_constrained, tail_check, SolveConfig, WaveProfile};

/// Seeds are refined until their spectral tail falls below this.
pub const SEED_SPECTRAL_TOL: f64 = 1e-12;
/// A converged wave that is not localized and whose spectrum is not
/// resolved either has left the small-amplitude regime.
pub const CONCENTRATION_TOL: f64 = 1e-6;
const MAX_POINTS: usize = 1 << 16;

/// How the grid is chosen for each `mu`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GridPolicy {
    Fixed {
        period: f64,
        points: usize,
    },
    /// `P = max(min_period, widths * l * mu^-beta)` where `l` is the decay
    /// length of the reduced ground state; `points` is the starting size.
    LongWave {
        widths: f64,
        points: usize,
        min_period: f64,
    },
}

impl Default for GridPolicy {
    fn default() -> Self {
        GridPolicy::LongWave {
            widths: 48.0,
            points: 1024,
            min_period: 64.0,
        }
    }
}

impl GridPolicy {
    pub fn grid_for(&self, mu: f64, exps: &ScalingExponents, length: f64) -> Result<PeriodicGrid> {
        match *self {
            GridPolicy::Fixed { period, points } => PeriodicGrid::new(period, points),
            GridPolicy::LongWave {
                widths,
                points,
                min_period,
            } => PeriodicGrid::new(min_period.max(widths * length * mu.powf(-exps.beta)), points),
        }
    }
}

/// Long-wave rescaling of a wave at `prev.mu` to `mu`, placed on `target`.
pub fn warm_start(
    prev: &WaveProfile,
    mu: f64,
    exps: &ScalingExponents,
    target: &PeriodicGrid,
) -> Result<SpectralField> {
    let r = mu / prev.mu;
    let src = prev.field.grid();
    let stretched = PeriodicGrid::new(src.period() * r.powf(-exps.beta), src.points())?;
    let amp = r.powf(exps.alpha);
    let u = SpectralField::from_values(&stretched, prev.field.values().iter().map(|v| v * amp).collect())?;
    resample_to_grid(&u, target, DEFAULT_TAIL_TOL)
}

/// One `mu` of a sweep; failures are kept alongside successes.
#[derive(Debug)]
pub struct SweepEntry {
    pub mu: f64,
    pub period: f64,
    pub points: usize,
    /// `tail_check` of the converged profile (NaN on failure).
    pub tail: f64,
    pub outcome: Result<WaveProfile>,
}

#[derive(Debug, Default)]
pub struct SweepResult {
    pub entries: Vec<SweepEntry>,
}

impl SweepResult {
    pub fn profiles(&self) -> Vec<&WaveProfile> {
        self.entries.iter().filter_map(|e| e.outcome.as_ref().ok()).collect()
    }

    /// `(mu, I_mu)` for each converged entry.
    pub fn energy_table(&self) -> Vec<(f64, f64)> {
        self.profiles().iter().map(|p| (p.mu, p.energy)).collect()
    }

    pub fn all_converged(&self) -> bool {
        self.entries.iter().all(|e| e.outcome.is_ok())
    }
}

/// Solves at each `mu` in ascending order, seeding the first from the scaled
/// reduced ground state and each later one from its predecessor.
pub fn continuation_sweep(
    prob: &Problem,
    mu_list: &[f64],
    base: &SolveConfig,
    policy: &GridPolicy,
) -> Result<SweepResult> {
    if mu_list.is_empty() {
        return Err(Error::InvalidInput("mu list is empty".into()));
    }
    if mu_list.iter().any(|m| !(*m > 0.0 && m.is_finite())) {
        return Err(Error::InvalidInput("every mu must be positive".into()));
    }
    if mu_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("mu list must be strictly ascending".into()));
    }
    let exps = ScalingExponents::for_problem(prob)?;
    let reference = ReducedGroundState::for_problem(prob)?;
    let length = reference.length_scale();

    let mut result = SweepResult::default();
    let mut previous: Option<WaveProfile> = None;
    for &mu in mu_list {
        let entry = solve_entry(prob, mu, base, policy, &exps, &reference, length, previous.as_ref());
        if let Ok(p) = &entry.outcome {
            previous = Some(p.clone());
        }
        result.entries.push(entry);
    }
    Ok(result)
}

#[allow(clippy::too_many_arguments)]
fn solve_entry(
    prob: &Problem,
    mu: f64,
    base: &SolveConfig,
    policy: &GridPolicy,
    exps: &ScalingExponents,
    reference: &ReducedGroundState,
    length: f64,
    previous: Option<&WaveProfile>,
) -> SweepEntry {
    let mut entry = SweepEntry {
        mu,
        period: f64::NAN,
        points: 0,
        tail: f64::NAN,
        outcome: Err(Error::NoConvergence("not attempted".into())),
    };
    let seeded = (|| -> Result<SpectralField> {
        let mut grid = policy.grid_for(mu, exps, length)?;
        loop {
            let seed = match previous.map(|p| warm_start(p, mu, exps, &grid)) {
                Some(Ok(s)) => s,
                _ => long_wave_seed(reference, exps, mu, &grid)?,
            };
            if seed.spectral_tail() < SEED_SPECTRAL_TOL || grid.points() >= MAX_POINTS {
                return Ok(seed);
            }
            grid = PeriodicGrid::new(grid.period(), 2 * grid.points())?;
        }
    })();
    let seed = match seeded {
        Ok(s) => s,
        Err(e) => {
            entry.outcome = Err(e);
            return entry;
        }
    };
    entry.period = seed.grid().period();
    entry.points = seed.grid().points();
    let cfg = SolveConfig { mu, ..base.clone() };
    entry.outcome = minimize_constrained(prob, &cfg, &seed).and_then(|p| {
        let tail = tail_check(&p.field);
        entry.tail = tail;
        let spectral = p.field.spectral_tail();
        if tail < DEFAULT_TAIL_TOL {
            Ok(p)
        } else if spectral > CONCENTRATION_TOL {
            Err(Error::MuTooLarge(format!(
                "the minimizer concentrates at the grid scale (spectral tail {spectral:e}, edge {tail:e})"
            )))
        } else {
            Err(Error::TailTooLarge {
                tail,
                tol: DEFAULT_TAIL_TOL,
            })
        }
    });
    entry
}
