//! Long-wave scaling, the reduced (KdV-type) ground state and the
//! convergence diagnostics comparing computed waves against it.
//!
//! Under `u(x) = mu^alpha w(mu^beta x)` with `2 alpha - beta = 1` the momentum
//! scales exactly, `Q(u) = mu Q(w)`, and as `mu -> 0` the rescaled waves approach
//! minimizers of the reduced energy over `{Q = 1}`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::functionals::{momentum, weighted_norm, Problem};
use crate::grid::{norm_hs, resample_to_grid, PeriodicGrid, SpectralField, DEFAULT_TAIL_TOL};
use crate::nonlinearity::Nonlinearity;
use crate::operators::band_split;
use crate::solver::{minimize_constrained, tail_check, SolveConfig, WaveProfile};

/// `alpha = 2j/(4j+1-p)`, `beta = (p-1)/(4j+1-p)`, `gamma = 2j beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingExponents {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

pub fn exponents(j_star: u32, p: f64) -> Result<ScalingExponents> {
    let upper = 4.0 * j_star as f64 + 1.0;
    if !(p >= 2.0 && p < upper) {
        return Err(Error::ExponentWindow { p, j_star, upper });
    }
    let j = j_star as f64;
    let den = upper - p;
    let beta = (p - 1.0) / den;
    Ok(ScalingExponents {
        alpha: 2.0 * j / den,
        beta,
        gamma: 2.0 * j * beta,
    })
}

impl ScalingExponents {
    pub fn for_problem(prob: &Problem) -> Result<Self> {
        exponents(prob.symbol().j_star(), prob.nonlinearity().p())
    }
}

fn rescaled(u: &SpectralField, amplitude: f64, stretch: f64) -> Result<SpectralField> {
    let g = PeriodicGrid::new(u.grid().period() * stretch, u.grid().points())?;
    SpectralField::from_values(&g, u.values().iter().map(|v| v * amplitude).collect())
}

/// `u(x) = mu^alpha w(mu^beta x)` on the stretched grid of period `P / mu^beta`.
///
/// The node values are carried over exactly, so the result is exact for the
/// discrete field and `Q(u) = mu Q(w)` holds to round-off.
pub fn scale_up(mu: f64, exps: &ScalingExponents, w: &SpectralField) -> Result<SpectralField> {
    check_mu(mu)?;
    rescaled(w, mu.powf(exps.alpha), mu.powf(-exps.beta))
}

/// Inverse of [`scale_up`]: `w(y) = mu^-alpha u(mu^-beta y)`.
pub fn scale_down(mu: f64, exps: &ScalingExponents, u: &SpectralField) -> Result<SpectralField> {
    check_mu(mu)?;
    rescaled(u, mu.powf(-exps.alpha), mu.powf(exps.beta))
}

/// [`scale_up`] followed by resampling onto `target` under the tail gate.
pub fn scale_up_onto(
    mu: f64,
    exps: &ScalingExponents,
    w: &SpectralField,
    target: &PeriodicGrid,
    tail_tol: f64,
) -> Result<SpectralField> {
    resample_to_grid(&scale_up(mu, exps, w)?, target, tail_tol)
}

fn check_mu(mu: f64) -> Result<()> {
    if mu > 0.0 && mu.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("mu must be positive, got {mu}")))
    }
}

/// `(3/2)^(2/3)`, the crest of the Whitham reduced ground state.
pub fn kdv_amplitude() -> f64 {
    1.5f64.powf(2.0 / 3.0)
}

/// `nu_lw = (2/3)^(1/3)`.
pub fn kdv_speed() -> f64 {
    (2.0f64 / 3.0).powf(1.0 / 3.0)
}

/// `I_lw = -(4/15) (3/2)^(5/3)`.
pub fn kdv_energy() -> f64 {
    -4.0 / 15.0 * 1.5f64.powf(5.0 / 3.0)
}

/// `w(x) = (3/2)^(2/3) sech^2((3/2)^(1/3) x)` on `grid`, which must hold it
/// with `tail_check < 1e-12`.
pub fn kdv_soliton(grid: &PeriodicGrid) -> Result<SpectralField> {
    let b = 1.5f64.powf(1.0 / 3.0);
    let a = kdv_amplitude();
    let w = SpectralField::from_fn(grid, |x| a / (b * x).cosh().powi(2));
    let tail = tail_check(&w);
    if tail >= 1e-12 {
        return Err(Error::TailTooLarge { tail, tol: 1e-12 });
    }
    Ok(w)
}

#[derive(Debug, Clone)]
enum Shape {
    /// `polarity * amplitude * sech^power(rate x)`.
    Closed {
        amplitude: f64,
        rate: f64,
        power: f64,
        polarity: f64,
    },
    Numeric(SpectralField),
}

/// Ground state of the reduced functional over `{Q = 1}` with its multiplier
/// and energy.
#[derive(Debug, Clone)]
pub struct ReducedGroundState {
    j_star: u32,
    d2j_star: f64,
    nonlinearity: Nonlinearity,
    nu: f64,
    energy: f64,
    shape: Shape,
}

impl ReducedGroundState {
    /// The KdV soliton of the Whitham data.
    pub fn whitham() -> Self {
        Self::closed_form(1, -1.0 / 3.0, &Nonlinearity::quadratic()).expect("Whitham data are admissible")
    }

    /// For `j* = 1` the ground state is `A sech^q(B x)` with `q = 2/(p-1)`,
    /// `B = sqrt(nu/a)/q`, `A^(p-1) = (p+1) nu / (2 |c_p|)` and
    /// `a = -m''(0)/2`. `Q` scales like `nu^(q - 1/2)`, which fixes `nu`.
    pub fn closed_form(j_star: u32, d2j_star: f64, nl: &Nonlinearity) -> Result<Self> {
        if j_star != 1 {
            return Err(Error::InvalidInput(format!(
                "no closed-form ground state for j* = {j_star}"
            )));
        }
        nl.check_window(j_star)?;
        if !(d2j_star < 0.0) {
            return Err(Error::InvalidInput(format!("m''(0) must be negative, got {d2j_star}")));
        }
        let p = nl.p();
        let a = -0.5 * d2j_star;
        let power = 2.0 / (p - 1.0);
        let shape_at = |nu: f64| Shape::Closed {
            amplitude: ((p + 1.0) * nu / (2.0 * nl.cp().abs())).powf(1.0 / (p - 1.0)),
            rate: (nu / a).sqrt() / power,
            power,
            polarity: nl.natural_polarity(),
        };
        let mut state = ReducedGroundState {
            j_star,
            d2j_star,
            nonlinearity: nl.leading(),
            nu: 1.0,
            energy: 0.0,
            shape: shape_at(1.0),
        };
        let q1 = momentum(&state.sample(&state.quadrature_grid()?, f64::INFINITY)?);
        state.nu = q1.powf(-1.0 / (power - 0.5));
        state.shape = shape_at(state.nu);
        let fine = state.sample(&state.quadrature_grid()?, f64::INFINITY)?;
        state.energy = state.problem()?.discretize(fine.grid()).energy(&fine);
        Ok(state)
    }

    /// Minimizes the reduced functional numerically on `grid` from a Gaussian
    /// seed of the natural polarity.
    pub fn numeric(
        j_star: u32,
        d2j_star: f64,
        nl: &Nonlinearity,
        cfg: &SolveConfig,
        grid: &PeriodicGrid,
    ) -> Result<Self> {
        let wave = minimize_reduced(j_star, d2j_star, nl, cfg, grid)?;
        Ok(ReducedGroundState {
            j_star,
            d2j_star,
            nonlinearity: nl.leading(),
            nu: wave.nu,
            energy: wave.energy,
            shape: Shape::Numeric(wave.field),
        })
    }

    /// Closed form when available, otherwise a numeric minimizer on a
    /// default grid.
    pub fn for_problem(prob: &Problem) -> Result<Self> {
        let s = prob.symbol();
        let nl = prob.nonlinearity();
        if s.j_star() == 1 {
            Self::closed_form(1, s.d2j_star(), nl)
        } else {
            let grid = PeriodicGrid::new(64.0, 1024)?;
            Self::numeric(s.j_star(), s.d2j_star(), nl, &SolveConfig::reduced_default(), &grid)
        }
    }

    pub fn problem(&self) -> Result<Problem> {
        Problem::reduced(self.j_star, self.d2j_star, &self.nonlinearity)
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn j_star(&self) -> u32 {
        self.j_star
    }

    /// Decay length: `1/B` for the closed form, the half width at half
    /// maximum otherwise.
    pub fn length_scale(&self) -> f64 {
        match &self.shape {
            Shape::Closed { rate, .. } => 1.0 / rate,
            Shape::Numeric(w) => {
                let half = 0.5 * w.max_abs();
                w.grid()
                    .nodes()
                    .iter()
                    .zip(w.values())
                    .filter(|(_, v)| v.abs() >= half)
                    .fold(0.0f64, |m, (x, _)| m.max(x.abs()))
                    .max(w.grid().spacing())
            }
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match &self.shape {
            Shape::Closed {
                amplitude,
                rate,
                power,
                polarity,
            } => polarity * amplitude * (rate * x).cosh().powf(-power),
            Shape::Numeric(w) => {
                if x.abs() < 0.5 * w.grid().period() {
                    w.interpolate(x)
                } else {
                    0.0
                }
            }
        }
    }

    /// The ground state on `grid`, gated by `tail_check <= tail_tol`.
    pub fn sample(&self, grid: &PeriodicGrid, tail_tol: f64) -> Result<SpectralField> {
        let w = match &self.shape {
            Shape::Numeric(w) if w.grid() == grid => w.clone(),
            Shape::Numeric(w) => resample_to_grid(w, grid, tail_tol)?,
            Shape::Closed { .. } => SpectralField::from_fn(grid, |x| self.eval(x)),
        };
        let tail = tail_check(&w);
        if tail > tail_tol {
            return Err(Error::TailTooLarge { tail, tol: tail_tol });
        }
        Ok(w)
    }

    fn quadrature_grid(&self) -> Result<PeriodicGrid> {
        PeriodicGrid::new(160.0 * self.length_scale(), 8192)
    }
}

/// `mu^alpha w(mu^beta x)` sampled on `grid`, where `w` is the reduced
/// ground state. `Q` equals `mu` up to the truncation of `w`.
pub fn long_wave_seed(
    reference: &ReducedGroundState,
    exps: &ScalingExponents,
    mu: f64,
    grid: &PeriodicGrid,
) -> Result<SpectralField> {
    check_mu(mu)?;
    let amp = mu.powf(exps.alpha);
    let stretch = mu.powf(exps.beta);
    let u = SpectralField::from_fn(grid, |x| amp * reference.eval(stretch * x));
    let tail = tail_check(&u);
    if tail > DEFAULT_TAIL_TOL {
        return Err(Error::TailTooLarge {
            tail,
            tol: DEFAULT_TAIL_TOL,
        });
    }
    Ok(u)
}

/// Minimizes the reduced functional over `{Q = 1}`; `cfg.mu` is ignored.
pub fn minimize_reduced(
    j_star: u32,
    d2j_star: f64,
    nl: &Nonlinearity,
    cfg: &SolveConfig,
    grid: &PeriodicGrid,
) -> Result<WaveProfile> {
    let prob = Problem::reduced(j_star, d2j_star, nl)?;
    let polarity = nl.natural_polarity();
    let seed = SpectralField::from_fn(grid, |x| polarity * (-x * x).exp());
    let cfg = SolveConfig { mu: 1.0, ..cfg.clone() };
    minimize_constrained(&prob, &cfg, &seed)
}

/// Minimizes `||u(. + y) - v||_{H^s}` over translates `y`.
///
/// A cross-correlation on the grid picks the best node shift; golden-section
/// search on the neighbouring cell and Newton steps on the correlation then
/// refine it. Returns the distance and `y`, so `v = u(. + 1.7)` gives `1.7`.
pub fn orbit_distance(u: &SpectralField, v: &SpectralField, s: f64) -> Result<(f64, f64)> {
    let grid = u.grid();
    grid.check_same(v.grid())?;
    let n = grid.points();
    let period = grid.period();
    let h = grid.spacing();
    let nyq = grid.nyquist_slot();
    let ks = grid.wavenumbers();
    let weights: Vec<f64> = ks.iter().map(|k| (1.0 + k * k).powf(s)).collect();
    let cross: Vec<Complex64> = (0..n)
        .map(|i| u.coeffs()[i] * v.coeffs()[i].conj() * weights[i])
        .collect();

    let mut corr = cross.clone();
    grid.raw_inverse(&mut corr);
    let best = (0..n)
        .max_by(|&a, &b| corr[a].re.total_cmp(&corr[b].re))
        .expect("grid is nonempty");
    let y0 = best as f64 * h;

    let dist_sq = |y: f64| -> f64 {
        (0..n)
            .map(|i| {
                let shifted = if i == nyq {
                    u.coeffs()[i] * (ks[i] * y).cos()
                } else {
                    u.coeffs()[i] * Complex64::from_polar(1.0, ks[i] * y)
                };
                weights[i] * (shifted - v.coeffs()[i]).norm_sqr()
            })
            .sum()
    };

    let (mut lo, mut hi) = (y0 - h, y0 + h);
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut a = hi - ratio * (hi - lo);
    let mut b = lo + ratio * (hi - lo);
    let (mut fa, mut fb) = (dist_sq(a), dist_sq(b));
    for _ in 0..60 {
        if fa <= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - ratio * (hi - lo);
            fa = dist_sq(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + ratio * (hi - lo);
            fb = dist_sq(b);
        }
    }
    let mut y = 0.5 * (lo + hi);
    let mut best_sq = dist_sq(y);

    // Newton on d/dy Re sum w u conj(v) e^{iky}
    for _ in 0..5 {
        let (mut d1, mut d2) = (0.0, 0.0);
        for i in 0..n {
            if i == nyq {
                continue;
            }
            let z = cross[i] * Complex64::from_polar(1.0, ks[i] * y);
            d1 -= ks[i] * z.im;
            d2 -= ks[i] * ks[i] * z.re;
        }
        if !(d2 < 0.0) {
            break;
        }
        let trial = y - d1 / d2;
        if (trial - y).abs() > h {
            break;
        }
        let f = dist_sq(trial);
        if f > best_sq {
            break;
        }
        y = trial;
        best_sq = f;
    }

    let y = (y + 0.5 * period).rem_euclid(period) - 0.5 * period;
    Ok((best_sq.max(0.0).sqrt(), y))
}

/// Per-wave comparison against the reduced ground state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LongWaveComparison {
    pub mu: f64,
    /// Orbit distance in `H^{j*}` between the rescaled wave and the reference.
    pub dist_aligned: f64,
    /// `(nu - m(0)) / mu^((p-1) alpha) - nu_lw`.
    pub speed_dev: f64,
    /// `(I_mu + m(0) mu) / mu^(1 + (p-1) alpha) - I_lw`.
    pub energy_dev: f64,
    pub shift: f64,
}

pub fn compare_long_wave(
    profile: &WaveProfile,
    exps: &ScalingExponents,
    reference: &ReducedGroundState,
) -> Result<LongWaveComparison> {
    let mu = profile.mu;
    let w = scale_down(mu, exps, &profile.field)?;
    let r = reference.sample(w.grid(), DEFAULT_TAIL_TOL)?;
    let (dist_aligned, shift) = orbit_distance(&w, &r, reference.j_star() as f64)?;
    let order = exps.gamma;
    Ok(LongWaveComparison {
        mu,
        dist_aligned,
        speed_dev: (profile.nu - profile.m_zero) / mu.powf(order) - reference.nu(),
        energy_dev: (profile.energy + profile.m_zero * mu) / mu.powf(1.0 + order) - reference.energy(),
        shift,
    })
}

/// [`compare_long_wave`] over a set of profiles, in the given order.
pub fn convergence_study(
    profiles: &[WaveProfile],
    exps: &ScalingExponents,
    reference: &ReducedGroundState,
) -> Result<Vec<LongWaveComparison>> {
    profiles.iter().map(|p| compare_long_wave(p, exps, reference)).collect()
}

/// Boundedness ratios of the scaling estimates for one wave.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingDiagnostics {
    pub mu: f64,
    pub tau: f64,
    /// `|||u1|||^2_{tau,mu} / mu`.
    pub tau_ratio1: f64,
    /// `||u2||_1^2 / mu^(tau beta (p-1) + p)`.
    pub tau_ratio2: f64,
    /// `||u||_inf / mu^alpha`.
    pub supnorm_ratio: f64,
    pub u1_h1: f64,
    pub u2_h1: f64,
}

pub fn scaling_diagnostics(
    profile: &WaveProfile,
    prob: &Problem,
    exps: &ScalingExponents,
    tau: f64,
) -> Result<ScalingDiagnostics> {
    let mu = profile.mu;
    let p = prob.nonlinearity().p();
    let j_star = prob.symbol().j_star();
    let (u1, u2) = band_split(prob.symbol(), &profile.field);
    let weighted = weighted_norm(&u1, tau, mu, j_star, exps.beta)?;
    let u2_h1 = norm_hs(&u2, 1.0);
    Ok(ScalingDiagnostics {
        mu,
        tau,
        tau_ratio1: weighted * weighted / mu,
        tau_ratio2: u2_h1 * u2_h1 / mu.powf(tau * exps.beta * (p - 1.0) + p),
        supnorm_ratio: profile.field.max_abs() / mu.powf(exps.alpha),
        u1_h1: norm_hs(&u1, 1.0),
        u2_h1,
    })
}
