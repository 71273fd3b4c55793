//! Dispersion symbols `m(k)` of smoothing Fourier multipliers.
//!
//! A symbol is even, has a strict positive global maximum `m(0)` at the
//! origin, and expands as `m(k) = m(0) + m^(2j*)(0) k^(2j*) / (2j*)! + r(k)`
//! with `r(k) = O(k^(2j*+2))`. The Taylor data are supplied with the symbol
//! and cross-checked numerically by [`validate_symbol`].

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result, SymbolViolation};
use crate::grid::PeriodicGrid;
use crate::registry::{no_args, parse_reals, Registry};

/// Pointwise evaluation of a multiplier.
pub trait Multiplier: Send + Sync {
    fn eval(&self, k: f64) -> f64;
}

impl<F> Multiplier for F
where
    F: Fn(f64) -> f64 + Send + Sync,
{
    fn eval(&self, k: f64) -> f64 {
        self(k)
    }
}

/// `sqrt(tanh(k) / k)`, the linear phase speed of unit-depth water waves.
#[derive(Debug, Clone, Copy)]
pub struct WhithamMultiplier;

/// Below this radius `tanh(k)/k` is summed from its Maclaurin series.
pub const WHITHAM_SERIES_RADIUS: f64 = 1e-2;

impl WhithamMultiplier {
    pub fn series(k: f64) -> f64 {
        let k2 = k * k;
        let t = 1.0 + k2 * (-1.0 / 3.0 + k2 * (2.0 / 15.0 - k2 * 17.0 / 315.0));
        t.sqrt()
    }

    pub fn direct(k: f64) -> f64 {
        let k = k.abs();
        (k.tanh() / k).sqrt()
    }
}

impl Multiplier for WhithamMultiplier {
    fn eval(&self, k: f64) -> f64 {
        if k.abs() < WHITHAM_SERIES_RADIUS {
            Self::series(k)
        } else {
            Self::direct(k)
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GaussianMultiplier;

impl Multiplier for GaussianMultiplier {
    fn eval(&self, k: f64) -> f64 {
        (-k * k).exp()
    }
}

/// `(1 + k^2)^(-s)`.
#[derive(Debug, Clone, Copy)]
pub struct RationalMultiplier {
    pub s: f64,
}

impl Multiplier for RationalMultiplier {
    fn eval(&self, k: f64) -> f64 {
        (1.0 + k * k).powf(-self.s)
    }
}

/// The polynomial long-wave symbol `m^(2j*)(0) k^(2j*) / (2j*)!`.
#[derive(Debug, Clone, Copy)]
pub struct LongWaveMultiplier {
    pub j_star: u32,
    pub d2j_star: f64,
}

impl Multiplier for LongWaveMultiplier {
    fn eval(&self, k: f64) -> f64 {
        let order = 2 * self.j_star;
        self.d2j_star * k.powi(order as i32) / factorial(order)
    }
}

pub(crate) fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

#[derive(Clone)]
pub struct DispersionSymbol {
    name: String,
    multiplier: Arc<dyn Multiplier>,
    m_zero: f64,
    decay_order: f64,
    j_star: u32,
    d2j_star: f64,
    k_cut: f64,
}

impl fmt::Debug for DispersionSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DispersionSymbol")
            .field("name", &self.name)
            .field("m_zero", &self.m_zero)
            .field("decay_order", &self.decay_order)
            .field("j_star", &self.j_star)
            .field("d2j_star", &self.d2j_star)
            .field("k_cut", &self.k_cut)
            .finish()
    }
}

impl DispersionSymbol {
    /// Wraps a multiplier with its Taylor data; `k_cut` is computed here.
    pub fn new(
        name: impl Into<String>,
        multiplier: impl Multiplier + 'static,
        m_zero: f64,
        decay_order: f64,
        j_star: u32,
        d2j_star: f64,
    ) -> Result<Self> {
        if j_star == 0 {
            return Err(Error::InvalidInput("j* must be a positive integer".into()));
        }
        let multiplier: Arc<dyn Multiplier> = Arc::new(multiplier);
        let k_cut = cutoff_wavenumber(multiplier.as_ref(), m_zero);
        Ok(DispersionSymbol {
            name: name.into(),
            multiplier,
            m_zero,
            decay_order,
            j_star,
            d2j_star,
            k_cut,
        })
    }

    pub fn whitham() -> Self {
        Self::new("whitham", WhithamMultiplier, 1.0, -0.5, 1, -1.0 / 3.0).expect("valid Whitham data")
    }

    pub fn gaussian() -> Self {
        // Schwartz symbol: of every negative order; -1 is recorded nominally.
        Self::new("gaussian", GaussianMultiplier, 1.0, -1.0, 1, -2.0).expect("valid data")
    }

    pub fn rational(s: f64) -> Result<Self> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::InvalidInput(format!("rational symbol needs s > 0, got {s}")));
        }
        Self::new(
            format!("rational:{s}"),
            RationalMultiplier { s },
            1.0,
            -2.0 * s,
            1,
            -2.0 * s,
        )
    }

    /// The polynomial symbol of the reduced long-wave functional. It has
    /// `m(0) = 0`, no cutoff and is unbounded, so it is not a valid smoothing
    /// symbol; it only serves as the quadratic part of the reduced energy.
    pub fn long_wave(j_star: u32, d2j_star: f64) -> Self {
        DispersionSymbol {
            name: format!("longwave:{j_star},{d2j_star}"),
            multiplier: Arc::new(LongWaveMultiplier { j_star, d2j_star }),
            m_zero: 0.0,
            decay_order: 2.0 * j_star as f64,
            j_star,
            d2j_star,
            k_cut: f64::INFINITY,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, k: f64) -> f64 {
        self.multiplier.eval(k)
    }

    pub fn m_zero(&self) -> f64 {
        self.m_zero
    }

    pub fn decay_order(&self) -> f64 {
        self.decay_order
    }

    pub fn j_star(&self) -> u32 {
        self.j_star
    }

    pub fn d2j_star(&self) -> f64 {
        self.d2j_star
    }

    pub fn k_cut(&self) -> f64 {
        self.k_cut
    }

    /// Symbol values in transform order on `grid`.
    pub fn sample(&self, grid: &PeriodicGrid) -> Vec<f64> {
        grid.wavenumbers().into_iter().map(|k| self.eval(k)).collect()
    }
}

/// `r(k) = m(k) - m(0) - m^(2j*)(0) k^(2j*) / (2j*)!`.
pub fn taylor_remainder(s: &DispersionSymbol, k: f64) -> f64 {
    let order = 2 * s.j_star;
    s.eval(k) - s.m_zero - s.d2j_star * k.powi(order as i32) / factorial(order)
}

const CUTOFF_SAMPLES: usize = 10_000;

/// Smallest `k0` on a decreasing envelope with `m(k) <= m(0)/2` beyond it.
/// Returns infinity when the symbol never settles below half its peak.
fn cutoff_wavenumber(m: &dyn Multiplier, m_zero: f64) -> f64 {
    let half = 0.5 * m_zero;
    let mut reach = 1.0;
    while m.eval(reach) > 0.5 * half {
        reach *= 2.0;
        if reach > 1e8 {
            return f64::INFINITY;
        }
    }
    let top = 2.0 * reach;
    let ks: Vec<f64> = (0..=CUTOFF_SAMPLES)
        .map(|i| top * i as f64 / CUTOFF_SAMPLES as f64)
        .collect();
    let mut envelope: Vec<f64> = ks.iter().map(|&k| m.eval(k)).collect();
    for i in (0..CUTOFF_SAMPLES).rev() {
        envelope[i] = envelope[i].max(envelope[i + 1]);
    }
    let Some(first) = envelope.iter().position(|&e| e <= half) else {
        return f64::INFINITY;
    };
    if first == 0 {
        return 0.0;
    }
    let (mut lo, mut hi) = (ks[first - 1], ks[first]);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if m.eval(mid) > half {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
    }
    hi
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub check: &'static str,
    pub passed: bool,
    /// Wavenumber of the worst offender (or the worst sample when passing).
    pub worst_k: f64,
    pub worst_value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub symbol: String,
    pub k_max: f64,
    pub samples: usize,
    pub k_cut: f64,
    pub taylor_constant: f64,
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

const EVENNESS_TOL: f64 = 1e-12;
const DERIVATIVE_STEP: f64 = 1e-3;
const DERIVATIVE_TOL: f64 = 1e-4;
const TAYLOR_BOUND: f64 = 1e6;

/// Samples the symbol on `[-k_max, k_max]` and checks evenness, the strict
/// maximum at the origin, the sign of the Taylor data, Taylor consistency,
/// the supplied derivative against a finite difference, and the cutoff.
///
/// Returns the full report when every check passes, otherwise the first
/// failing check (in that order) as a [`Error::SymbolViolation`].
pub fn validate_symbol(s: &DispersionSymbol, k_max: f64, n_samples: usize) -> Result<ValidationReport> {
    let report = symbol_report(s, k_max, n_samples)?;
    if let Some(fail) = report.checks.iter().find(|c| !c.passed) {
        let violation = match fail.check {
            "evenness" => SymbolViolation::NotEven,
            "strict_maximum" => SymbolViolation::NoStrictMax,
            "taylor_signs" => SymbolViolation::BadTaylorData,
            "taylor_consistency" => SymbolViolation::TaylorMismatch,
            "derivative" => SymbolViolation::DerivativeMismatch,
            _ => SymbolViolation::CutoffViolated,
        };
        return Err(Error::SymbolViolation {
            violation,
            at: fail.worst_k,
            detail: format!("{} (value {:e})", fail.check, fail.worst_value),
        });
    }
    Ok(report)
}

/// Runs every check and reports them without failing.
pub fn symbol_report(s: &DispersionSymbol, k_max: f64, n_samples: usize) -> Result<ValidationReport> {
    if !(k_max > 0.0) || n_samples < 16 {
        return Err(Error::InvalidInput(format!(
            "validation needs k_max > 0 and at least 16 samples (got {k_max}, {n_samples})"
        )));
    }
    let ks: Vec<f64> = (0..n_samples)
        .map(|i| -k_max + 2.0 * k_max * i as f64 / (n_samples - 1) as f64)
        .collect();
    let mut checks = Vec::new();

    // evenness
    let (mut worst_k, mut worst) = (0.0, 0.0f64);
    for &k in &ks {
        let a = s.eval(k);
        let d = (a - s.eval(-k)).abs() / a.abs().max(1.0);
        if d > worst {
            worst = d;
            worst_k = k;
        }
    }
    checks.push(CheckResult {
        check: "evenness",
        passed: worst <= EVENNESS_TOL,
        worst_k,
        worst_value: worst,
    });

    // strict maximum: the largest excess m(k) - m(0) over k != 0
    let (mut worst_k, mut worst) = (f64::NAN, f64::NEG_INFINITY);
    for &k in ks.iter().filter(|&&k| k != 0.0) {
        let excess = s.eval(k) - s.m_zero;
        if excess > worst {
            worst = excess;
            worst_k = k;
        }
    }
    checks.push(CheckResult {
        check: "strict_maximum",
        passed: worst < 0.0 && (s.eval(0.0) - s.m_zero).abs() <= 1e-12 * s.m_zero.abs().max(1.0),
        worst_k,
        worst_value: worst,
    });

    checks.push(CheckResult {
        check: "taylor_signs",
        passed: s.m_zero > 0.0 && s.d2j_star < 0.0,
        worst_k: 0.0,
        worst_value: s.d2j_star,
    });

    // Taylor consistency: sup |r(k)| / k^(2j*+2) over [1e-2, 1]
    let power = (2 * s.j_star + 2) as i32;
    let (mut worst_k, mut constant) = (0.0, 0.0f64);
    for i in 0..=400 {
        let k = 10f64.powf(-2.0 + 2.0 * i as f64 / 400.0);
        let c = taylor_remainder(s, k).abs() / k.powi(power);
        if !(c <= constant) {
            constant = c;
            worst_k = k;
        }
    }
    checks.push(CheckResult {
        check: "taylor_consistency",
        passed: constant.is_finite() && constant <= TAYLOR_BOUND,
        worst_k,
        worst_value: constant,
    });

    // central finite difference of order 2j* at the origin
    let order = 2 * s.j_star;
    let h = DERIVATIVE_STEP;
    let mut fd = 0.0;
    for i in 0..=order {
        let weight = binomial(order, i) * if i % 2 == 0 { 1.0 } else { -1.0 };
        fd += weight * s.eval((s.j_star as f64 - i as f64) * h);
    }
    fd /= h.powi(order as i32);
    let rel = (fd - s.d2j_star).abs() / s.d2j_star.abs().max(f64::MIN_POSITIVE);
    checks.push(CheckResult {
        check: "derivative",
        passed: rel <= DERIVATIVE_TOL,
        worst_k: 0.0,
        worst_value: rel,
    });

    // cutoff
    let (mut worst_k, mut worst) = (f64::NAN, f64::NEG_INFINITY);
    for &k in ks.iter().filter(|k| k.abs() >= s.k_cut) {
        let excess = s.eval(k) - 0.5 * s.m_zero;
        if excess > worst {
            worst = excess;
            worst_k = k;
        }
    }
    checks.push(CheckResult {
        check: "cutoff",
        passed: s.k_cut.is_finite() && s.k_cut > 0.0 && worst <= 0.0,
        worst_k,
        worst_value: worst,
    });

    Ok(ValidationReport {
        symbol: s.name.clone(),
        k_max,
        samples: n_samples,
        k_cut: s.k_cut,
        taylor_constant: constant,
        checks,
    })
}

fn binomial(n: u32, k: u32) -> f64 {
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// Built-in symbols: `whitham`, `gaussian`, `rational:s`.
pub fn symbol_registry() -> Registry<DispersionSymbol> {
    let mut reg = Registry::new("symbol");
    reg.register("whitham", |a| {
        no_args(a, "whitham")?;
        Ok(DispersionSymbol::whitham())
    });
    reg.register("gaussian", |a| {
        no_args(a, "gaussian")?;
        Ok(DispersionSymbol::gaussian())
    });
    reg.register("rational", |a| {
        let v = parse_reals(a, "rational")?;
        if v.len() != 1 {
            return Err(Error::InvalidInput("rational takes one exponent s".into()));
        }
        DispersionSymbol::rational(v[0])
    });
    reg
}
