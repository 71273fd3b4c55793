//! Time integration of `u_t + (Lu + n(u))_x = 0` in Fourier space.
//!
//! The state is the coefficient vector. Writing `lambda_m = -i k_m m(k_m)`
//! and `N(u) = -i k F[D n(Du)]`, the system is `c' = lambda c + N(c)`. With the
//! 2/3 rule on and a dealiased initial state, the semidiscrete flow conserves
//! `Q` and `E` exactly, so the recorded drifts measure time-stepping error.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{momentum, Discretization, Problem};
use crate::grid::{PeriodicGrid, SpectralField};
use crate::longwave::orbit_distance;
use crate::registry::{no_args, Registry};
use crate::solver::{renormalize, WaveProfile};

/// Initial data must have a spectral tail below this.
pub const INITIAL_TAIL_TOL: f64 = 1e-10;
/// A run stops with `RESOLUTION_LOSS` once the tail exceeds this.
pub const RESOLUTION_TAIL_TOL: f64 = 1e-6;
/// A run stops with `BLOWUP` once `||u||` exceeds this multiple of `||u0||`.
pub const BLOWUP_FACTOR: f64 = 1e3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolutionConfig {
    pub dt: f64,
    /// Final time `T`.
    pub horizon: f64,
    /// Name in [`integrator_registry`].
    pub integrator: String,
    pub dealias: bool,
    /// Record every `stride` steps.
    pub stride: usize,
    /// When false the nonlinear flux is dropped and the flow is linear.
    pub nonlinear: bool,
    /// Sobolev index of the orbit distance.
    pub orbit_norm: f64,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            dt: 0.01,
            horizon: 100.0,
            integrator: "ifrk4".to_string(),
            dealias: true,
            stride: 100,
            nonlinear: true,
            orbit_norm: 0.0,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidInput(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "horizon must be positive, got {}",
                self.horizon
            )));
        }
        if self.stride == 0 {
            return Err(Error::InvalidInput("stride must be positive".into()));
        }
        if !(self.orbit_norm >= 0.0) {
            return Err(Error::InvalidInput("orbit_norm must be nonnegative".into()));
        }
        Ok(())
    }

    /// Number of steps and the step actually used, so that `steps * dt = T`.
    pub fn schedule(&self) -> (usize, f64) {
        let steps = (self.horizon / self.dt).round().max(1.0) as usize;
        (steps, self.horizon / steps as f64)
    }
}

/// `c' = lambda c + N(c)` with diagonal `lambda`.
pub trait SplitSystem {
    fn linear(&self) -> &[Complex64];
    fn nonlinear(&self, c: &[Complex64]) -> Vec<Complex64>;
}

/// One-step map of a [`SplitSystem`]; `dt` may be negative.
pub trait TimeStepper: Send + Sync {
    fn name(&self) -> &str;
    fn step(&self, sys: &dyn SplitSystem, c: &[Complex64], dt: f64) -> Vec<Complex64>;
}

fn combine(terms: &[(f64, &[Complex64])]) -> Vec<Complex64> {
    let n = terms[0].1.len();
    (0..n).map(|i| terms.iter().map(|(a, v)| v[i] * *a).sum()).collect()
}

fn hadamard(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    a.iter().zip(b).map(|(x, y)| x * y).collect()
}

/// Integrating-factor (Lawson) RK4: the linear part is propagated exactly.
struct Ifrk4;

impl TimeStepper for Ifrk4 {
    fn name(&self) -> &str {
        "ifrk4"
    }

    fn step(&self, sys: &dyn SplitSystem, c: &[Complex64], dt: f64) -> Vec<Complex64> {
        let half: Vec<Complex64> = sys.linear().iter().map(|l| (l * (0.5 * dt)).exp()).collect();
        let full: Vec<Complex64> = half.iter().map(|e| e * e).collect();
        let k1 = sys.nonlinear(c);
        let a = hadamard(&half, &combine(&[(1.0, c), (0.5 * dt, &k1)]));
        let k2 = sys.nonlinear(&a);
        let ec = hadamard(&half, c);
        let b = combine(&[(1.0, &ec), (0.5 * dt, &k2)]);
        let k3 = sys.nonlinear(&b);
        let d = combine(&[(1.0, &hadamard(&full, c)), (dt, &hadamard(&half, &k3))]);
        let k4 = sys.nonlinear(&d);
        let mid = combine(&[(1.0, &k2), (1.0, &k3)]);
        (0..c.len())
            .map(|i| full[i] * c[i] + (full[i] * k1[i] + half[i] * mid[i] * 2.0 + k4[i]) * (dt / 6.0))
            .collect()
    }
}

/// Classical RK4 on the full right-hand side.
struct Rk4;

impl Rk4 {
    fn rhs(sys: &dyn SplitSystem, c: &[Complex64]) -> Vec<Complex64> {
        let n = sys.nonlinear(c);
        sys.linear().iter().zip(c).zip(n).map(|((l, x), y)| l * x + y).collect()
    }
}

impl TimeStepper for Rk4 {
    fn name(&self) -> &str {
        "rk4"
    }

    fn step(&self, sys: &dyn SplitSystem, c: &[Complex64], dt: f64) -> Vec<Complex64> {
        let k1 = Self::rhs(sys, c);
        let k2 = Self::rhs(sys, &combine(&[(1.0, c), (0.5 * dt, &k1)]));
        let k3 = Self::rhs(sys, &combine(&[(1.0, c), (0.5 * dt, &k2)]));
        let k4 = Self::rhs(sys, &combine(&[(1.0, c), (dt, &k3)]));
        combine(&[
            (1.0, c),
            (dt / 6.0, &k1),
            (dt / 3.0, &k2),
            (dt / 3.0, &k3),
            (dt / 6.0, &k4),
        ])
    }
}

pub fn integrator_registry() -> Registry<Box<dyn TimeStepper>> {
    let mut reg: Registry<Box<dyn TimeStepper>> = Registry::new("integrator");
    reg.register("ifrk4", |a| {
        no_args(a, "ifrk4")?;
        Ok(Box::new(Ifrk4))
    });
    reg.register("rk4", |a| {
        no_args(a, "rk4")?;
        Ok(Box::new(Rk4))
    });
    reg
}

/// The discretized evolution equation on one grid.
pub struct Evolver {
    disc: Discretization,
    linear: Vec<Complex64>,
    derivative: Vec<Complex64>,
    nonlinear: bool,
    dealias: bool,
    stepper: Box<dyn TimeStepper>,
}

impl SplitSystem for Evolver {
    fn linear(&self) -> &[Complex64] {
        &self.linear
    }

    fn nonlinear(&self, c: &[Complex64]) -> Vec<Complex64> {
        if !self.nonlinear {
            return vec![Complex64::new(0.0, 0.0); c.len()];
        }
        let grid = self.disc.grid();
        let u = SpectralField::from_coeffs(grid, c.to_vec()).expect("length matches grid");
        let flux = if self.dealias {
            self.disc.nonlinear_term(&u)
        } else {
            let nl = self.disc.problem().nonlinearity();
            u.map_values(|x| nl.eval(x))
        };
        hadamard(&self.derivative, flux.coeffs())
    }
}

impl Evolver {
    pub fn new(prob: &Problem, grid: &PeriodicGrid, cfg: &EvolutionConfig) -> Result<Self> {
        let stepper = integrator_registry().build(&cfg.integrator)?;
        let disc = prob.discretize(grid);
        let nyq = grid.nyquist_slot();
        let derivative: Vec<Complex64> = grid
            .wavenumbers()
            .into_iter()
            .enumerate()
            .map(|(i, k)| {
                if i == nyq {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(0.0, -k)
                }
            })
            .collect();
        let linear = derivative
            .iter()
            .zip(disc.symbol_values())
            .map(|(d, m)| d * m)
            .collect();
        Ok(Evolver {
            disc,
            linear,
            derivative,
            nonlinear: cfg.nonlinear,
            dealias: cfg.dealias,
            stepper,
        })
    }

    pub fn grid(&self) -> &PeriodicGrid {
        self.disc.grid()
    }

    /// Energy of the flow being integrated (quadratic part only when linear).
    pub fn energy(&self, u: &SpectralField) -> f64 {
        let parts = self.disc.energy_parts(u);
        if self.nonlinear {
            parts.total()
        } else {
            parts.quadratic
        }
    }

    pub fn step(&self, c: &[Complex64], dt: f64) -> Vec<Complex64> {
        self.stepper.step(self, c, dt)
    }

    /// `steps` steps of size `dt` (either sign), without monitoring.
    pub fn advance(&self, u: &SpectralField, dt: f64, steps: usize) -> Result<SpectralField> {
        self.disc.grid().check_same(u.grid())?;
        let mut c = u.coeffs().to_vec();
        for _ in 0..steps {
            c = self.step(&c, dt);
        }
        SpectralField::from_coeffs(u.grid(), c)
    }
}

/// Sampled history of a run.
#[derive(Debug, Clone)]
pub struct EvolutionTrace {
    pub times: Vec<f64>,
    /// `(E(t) - E(0)) / |E(0)|`.
    pub e_drift: Vec<f64>,
    /// `(Q(t) - Q(0)) / Q(0)`.
    pub q_drift: Vec<f64>,
    pub orbit_dist: Vec<f64>,
    pub shift: Vec<f64>,
    pub final_field: SpectralField,
}

impl EvolutionTrace {
    pub fn max_abs_e_drift(&self) -> f64 {
        self.e_drift.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_q_drift(&self) -> f64 {
        self.q_drift.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_orbit_dist(&self) -> f64 {
        self.orbit_dist.iter().fold(0.0, |m, v| m.max(*v))
    }
}

fn relative(value: f64, base: f64) -> f64 {
    if base == 0.0 {
        value - base
    } else {
        (value - base) / base.abs()
    }
}

/// [`evolve_with_reference`] measuring orbit distance to `u0` itself.
pub fn evolve(prob: &Problem, u0: &SpectralField, cfg: &EvolutionConfig) -> Result<EvolutionTrace> {
    evolve_with_reference(prob, u0, u0, cfg)
}

/// Integrates from `u0` to `cfg.horizon`, recording conservation drift and
/// the orbit distance to `reference` every `cfg.stride` steps and at the end.
pub fn evolve_with_reference(
    prob: &Problem,
    u0: &SpectralField,
    reference: &SpectralField,
    cfg: &EvolutionConfig,
) -> Result<EvolutionTrace> {
    cfg.validate()?;
    u0.grid().check_same(reference.grid())?;
    let tail = u0.spectral_tail();
    if tail >= INITIAL_TAIL_TOL {
        return Err(Error::ResolutionLoss { time: 0.0, tail });
    }
    let ev = Evolver::new(prob, u0.grid(), cfg)?;
    let start = if cfg.dealias { u0.dealias() } else { u0.clone() };
    let e0 = ev.energy(&start);
    let q0 = momentum(&start);
    let norm0 = start.norm_l2();
    let (steps, dt) = cfg.schedule();

    let mut trace = EvolutionTrace {
        times: Vec::new(),
        e_drift: Vec::new(),
        q_drift: Vec::new(),
        orbit_dist: Vec::new(),
        shift: Vec::new(),
        final_field: start.clone(),
    };
    let record = |trace: &mut EvolutionTrace, t: f64, u: &SpectralField| -> Result<()> {
        let (d, y) = orbit_distance(u, reference, cfg.orbit_norm)?;
        trace.times.push(t);
        trace.e_drift.push(relative(ev.energy(u), e0));
        trace.q_drift.push(relative(momentum(u), q0));
        trace.orbit_dist.push(d);
        trace.shift.push(y);
        Ok(())
    };
    record(&mut trace, 0.0, &start)?;

    let mut c = start.coeffs().to_vec();
    for n in 1..=steps {
        c = ev.step(&c, dt);
        let t = n as f64 * dt;
        let norm = c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm <= BLOWUP_FACTOR * norm0) {
            return Err(Error::Blowup { time: t });
        }
        if n % cfg.stride == 0 || n == steps {
            let u = SpectralField::from_coeffs(u0.grid(), c.clone())?;
            let tail = u.spectral_tail();
            if tail > RESOLUTION_TAIL_TOL {
                return Err(Error::ResolutionLoss { time: t, tail });
            }
            record(&mut trace, t, &u)?;
            if n == steps {
                trace.final_field = u;
            }
        }
    }
    Ok(trace)
}

/// Outcome of evolving a travelling wave.
#[derive(Debug, Clone)]
pub struct TravelReport {
    /// Largest orbit distance to the initial profile, relative to its norm.
    pub max_shape_error: f64,
    /// Least-squares slope of the unwrapped alignment shift.
    pub measured_speed: f64,
    pub nu: f64,
    pub trace: EvolutionTrace,
}

impl TravelReport {
    pub fn speed_error(&self) -> f64 {
        (self.measured_speed - self.nu).abs()
    }
}

/// Removes period jumps from a sequence of shifts.
pub fn unwrap_shifts(shifts: &[f64], period: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(shifts.len());
    let mut offset = 0.0;
    for (i, &s) in shifts.iter().enumerate() {
        if i > 0 {
            let prev = shifts[i - 1];
            let jump = s - prev;
            offset -= period * (jump / period).round();
        }
        out.push(s + offset);
    }
    out
}

fn fit_slope(t: &[f64], y: &[f64]) -> f64 {
    let n = t.len() as f64;
    let tm = t.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let num: f64 = t.iter().zip(y).map(|(a, b)| (a - tm) * (b - ym)).sum();
    let den: f64 = t.iter().map(|a| (a - tm).powi(2)).sum();
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Evolves a computed wave and checks that it travels rigidly at speed `nu`.
pub fn travel_test(prob: &Problem, profile: &WaveProfile, cfg: &EvolutionConfig) -> Result<TravelReport> {
    let u0 = &profile.field;
    let trace = evolve(prob, u0, cfg)?;
    let norm = u0.norm_l2();
    let max_shape_error = if norm == 0.0 {
        trace.max_orbit_dist()
    } else {
        trace.max_orbit_dist() / norm
    };
    let measured_speed = if norm == 0.0 {
        0.0
    } else {
        fit_slope(&trace.times, &unwrap_shifts(&trace.shift, u0.grid().period()))
    };
    Ok(TravelReport {
        max_shape_error,
        measured_speed,
        nu: profile.nu,
        trace,
    })
}

/// Orbit distances of a perturbed wave to the unperturbed one.
#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub initial_dist: f64,
    pub max_dist: f64,
    pub trace: EvolutionTrace,
}

impl StabilityReport {
    pub fn ratio(&self) -> f64 {
        self.max_dist / self.initial_dist
    }
}

/// Evolves `profile + perturbation`, rescaled back to `Q = mu`, and records
/// its orbit distance to `profile`.
pub fn stability_experiment(
    prob: &Problem,
    profile: &WaveProfile,
    perturbation: &SpectralField,
    cfg: &EvolutionConfig,
) -> Result<StabilityReport> {
    let base = &profile.field;
    if perturbation.norm_l2() > 0.1 * base.norm_l2() {
        return Err(Error::InvalidInput(format!(
            "perturbation norm {} exceeds 10% of the profile norm {}",
            perturbation.norm_l2(),
            base.norm_l2()
        )));
    }
    let u0 = renormalize(&base.add(perturbation)?, profile.mu)?;
    let trace = evolve_with_reference(prob, &u0, base, cfg)?;
    Ok(StabilityReport {
        initial_dist: trace.orbit_dist[0],
        max_dist: trace.max_orbit_dist(),
        trace,
    })
}

/// A smooth random field: uniform random coefficients under a Gaussian
/// envelope `exp(-(k/k_c)^2)`, scaled to `||p|| = relative * ||reference||`.
///
/// The generator is ChaCha8 seeded with `seed`.
pub fn smooth_perturbation(reference: &SpectralField, relative: f64, k_c: f64, seed: u64) -> Result<SpectralField> {
    if !(k_c > 0.0) {
        return Err(Error::InvalidInput("envelope wavenumber must be positive".into()));
    }
    let grid = reference.grid();
    let n = grid.points();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
    for m in 1..n / 2 {
        let k = grid.wavenumber(m);
        let env = (-(k / k_c).powi(2)).exp();
        let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * env;
        coeffs[m] = c;
        coeffs[n - m] = c.conj();
    }
    let p = SpectralField::from_coeffs(grid, coeffs)?.dealias();
    let norm = p.norm_l2();
    if norm == 0.0 {
        return Err(Error::InvalidInput("envelope too narrow for the grid".into()));
    }
    Ok(p.scale(relative * reference.norm_l2() / norm))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bump(g: &PeriodicGrid) -> SpectralField {
        SpectralField::from_fn(g, |x| 0.05 / (0.2 * x).cosh().powi(2))
    }

    #[test]
    fn linear_flow_is_exact() {
        let prob = Problem::whitham();
        let g = PeriodicGrid::new(100.0, 256).unwrap();
        let u0 = bump(&g).dealias();
        let cfg = EvolutionConfig {
            dt: 0.05,
            horizon: 10.0,
            nonlinear: false,
            ..EvolutionConfig::default()
        };
        let trace = evolve(&prob, &u0, &cfg).unwrap();
        let ev = Evolver::new(&prob, &g, &cfg).unwrap();
        let exact = u0.map_coeffs(|i, _, c| c * (ev.linear[i] * 10.0).exp());
        let err = trace.final_field.sub(&exact).unwrap().norm_l2() / u0.norm_l2();
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn linear_flow_reverses() {
        let prob = Problem::whitham();
        let g = PeriodicGrid::new(100.0, 256).unwrap();
        let u0 = bump(&g).dealias();
        let cfg = EvolutionConfig {
            nonlinear: false,
            ..EvolutionConfig::default()
        };
        let ev = Evolver::new(&prob, &g, &cfg).unwrap();
        let there = ev.advance(&u0, 0.1, 200).unwrap();
        let back = ev.advance(&there, -0.1, 200).unwrap();
        assert!(back.sub(&u0).unwrap().norm_l2() <= 1e-10 * u0.norm_l2());
    }

    #[test]
    fn steppers_agree() {
        let prob = Problem::whitham();
        let g = PeriodicGrid::new(100.0, 256).unwrap();
        let u0 = bump(&g).dealias();
        let run = |name: &str| {
            let cfg = EvolutionConfig {
                dt: 0.01,
                horizon: 2.0,
                integrator: name.into(),
                ..EvolutionConfig::default()
            };
            evolve(&prob, &u0, &cfg).unwrap().final_field
        };
        let a = run("ifrk4");
        let b = run("rk4");
        assert!(a.sub(&b).unwrap().norm_l2() < 1e-9 * u0.norm_l2());
        assert_eq!(integrator_registry().names(), vec!["ifrk4", "rk4"]);
    }

    #[test]
    fn shifts_translate_not_distances() {
        let prob = Problem::whitham();
        let g = PeriodicGrid::new(100.0, 256).unwrap();
        let u0 = bump(&g).dealias();
        let cfg = EvolutionConfig {
            dt: 0.05,
            horizon: 5.0,
            stride: 20,
            ..EvolutionConfig::default()
        };
        let a = evolve_with_reference(&prob, &u0, &u0, &cfg).unwrap();
        let moved = u0.cyclic_shift(7);
        let b = evolve_with_reference(&prob, &moved, &u0, &cfg).unwrap();
        let h = g.spacing();
        for i in 0..a.times.len() {
            assert!((a.orbit_dist[i] - b.orbit_dist[i]).abs() < 1e-12);
            let ds = (b.shift[i] - a.shift[i] + 7.0 * h + 50.0).rem_euclid(100.0) - 50.0;
            assert!(ds.abs() < 1e-8, "{ds}");
        }
    }

    #[test]
    fn gates() {
        let prob = Problem::whitham();
        let g = PeriodicGrid::new(10.0, 32).unwrap();
        let rough = SpectralField::from_fn(&g, |x| (-(x * 4.0).powi(2)).exp());
        let err = evolve(&prob, &rough, &EvolutionConfig::default()).unwrap_err();
        assert_eq!(err.code(), "RESOLUTION_LOSS");
        let bad = EvolutionConfig {
            dt: -1.0,
            ..EvolutionConfig::default()
        };
        assert_eq!(
            evolve(&prob, &bump(&PeriodicGrid::new(100.0, 256).unwrap()), &bad)
                .unwrap_err()
                .code(),
            "INVALID_INPUT"
        );
    }

    #[test]
    fn unwrap_removes_jumps() {
        let s = unwrap_shifts(&[4.0, 4.8, -4.6, -3.9], 10.0);
        assert!((s[2] - 5.4).abs() < 1e-12 && (s[3] - 6.1).abs() < 1e-12);
    }

    #[test]
    fn perturbation_is_reproducible_and_scaled() {
        let g = PeriodicGrid::new(100.0, 256).unwrap();
        let u = bump(&g);
        let a = smooth_perturbation(&u, 0.01, 0.5, 7).unwrap();
        let b = smooth_perturbation(&u, 0.01, 0.5, 7).unwrap();
        let c = smooth_perturbation(&u, 0.01, 0.5, 8).unwrap();
        assert_eq!(a.values(), b.values());
        assert_ne!(a.values(), c.values());
        assert!((a.norm_l2() - 0.01 * u.norm_l2()).abs() < 1e-15);
    }
}
