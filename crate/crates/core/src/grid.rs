//! Periodic grids and spectral fields.
//!
//! A [`PeriodicGrid`] has nodes `x_j = -P/2 + j P/N` and wavenumbers
//! `k_m = 2 pi m / P`. Coefficients use the unitary convention
//! `u(x) = P^{-1/2} sum_m u_m exp(i k_m x)`, so that
//! `(P/N) sum_j u_j^2 = sum_m |u_m|^2` holds exactly on the grid.
//!
//! Coefficient arrays are stored in transform order: slot `i` holds mode
//! `m = i` for `i < N/2` and `m = i - N` otherwise. Slot `N/2` is the
//! Nyquist mode `m = -N/2`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Default gate for the size of a field near the ends of its period.
pub const DEFAULT_TAIL_TOL: f64 = 1e-10;

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

#[derive(Clone)]
pub struct PeriodicGrid {
    period: f64,
    points: usize,
    plans: Arc<Plans>,
}

impl fmt::Debug for PeriodicGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PeriodicGrid")
            .field("period", &self.period)
            .field("points", &self.points)
            .finish()
    }
}

impl PartialEq for PeriodicGrid {
    fn eq(&self, other: &Self) -> bool {
        self.points == other.points && (self.period - other.period).abs() <= 1e-12 * self.period.max(other.period)
    }
}

impl PeriodicGrid {
    pub fn new(period: f64, points: usize) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidInput(format!("period must be positive, got {period}")));
        }
        if points < 16 || !points.is_power_of_two() {
            return Err(Error::InvalidInput(format!(
                "number of points must be a power of two >= 16, got {points}"
            )));
        }
        let mut planner = FftPlanner::new();
        let plans = Plans {
            forward: planner.plan_fft_forward(points),
            inverse: planner.plan_fft_inverse(points),
        };
        Ok(PeriodicGrid {
            period,
            points,
            plans: Arc::new(plans),
        })
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn spacing(&self) -> f64 {
        self.period / self.points as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        -0.5 * self.period + j as f64 * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.points).map(|j| self.node(j)).collect()
    }

    /// Signed mode index of transform slot `i`.
    pub fn mode(&self, i: usize) -> i64 {
        let n = self.points as i64;
        let i = i as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    pub fn wavenumber(&self, i: usize) -> f64 {
        2.0 * PI * self.mode(i) as f64 / self.period
    }

    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.wavenumber(i)).collect()
    }

    pub fn nyquist_slot(&self) -> usize {
        self.points / 2
    }

    /// Whether slot `i` survives the 2/3 rule (`|m| <= N/3`).
    pub fn retained(&self, i: usize) -> bool {
        3 * self.mode(i).unsigned_abs() as usize <= self.points
    }

    pub fn check_same(&self, other: &PeriodicGrid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.plans.forward.process(&mut buf);
        let scale = self.period.sqrt() / self.points as f64;
        for (i, c) in buf.iter_mut().enumerate() {
            let sign = if i % 2 == 0 { scale } else { -scale };
            *c *= sign;
        }
        buf
    }

    /// Unnormalized in-place `sum_i c_i exp(2 pi i i j / N)`.
    pub(crate) fn raw_inverse(&self, buf: &mut [Complex64]) {
        self.plans.inverse.process(buf);
    }

    fn inverse(&self, coeffs: &[Complex64]) -> Vec<f64> {
        let mut buf: Vec<Complex64> = coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| if i % 2 == 0 { c } else { -c })
            .collect();
        self.plans.inverse.process(&mut buf);
        let scale = 1.0 / self.period.sqrt();
        buf.iter().map(|c| c.re * scale).collect()
    }
}

/// A real field with paired physical samples and Fourier coefficients.
#[derive(Clone, Debug)]
pub struct SpectralField {
    grid: PeriodicGrid,
    values: Vec<f64>,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: &PeriodicGrid) -> Self {
        SpectralField {
            grid: grid.clone(),
            values: vec![0.0; grid.points],
            coeffs: vec![Complex64::new(0.0, 0.0); grid.points],
        }
    }

    pub fn from_values(grid: &PeriodicGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.points {
            return Err(Error::InvalidInput(format!(
                "expected {} samples, got {}",
                grid.points,
                values.len()
            )));
        }
        let coeffs = grid.forward(&values);
        Ok(SpectralField {
            grid: grid.clone(),
            values,
            coeffs,
        })
    }

    pub fn from_fn(grid: &PeriodicGrid, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.nodes().into_iter().map(f).collect();
        Self::from_values(grid, values).expect("length matches grid")
    }

    /// Builds a field from coefficients. The coefficients are expected to be
    /// conjugate symmetric; the stored samples are the real part of the
    /// synthesis.
    pub fn from_coeffs(grid: &PeriodicGrid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.points {
            return Err(Error::InvalidInput(format!(
                "expected {} coefficients, got {}",
                grid.points,
                coeffs.len()
            )));
        }
        let values = grid.inverse(&coeffs);
        Ok(SpectralField {
            grid: grid.clone(),
            values,
            coeffs,
        })
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficient of signed mode `m`.
    pub fn coeff(&self, m: i64) -> Complex64 {
        let n = self.grid.points as i64;
        self.coeffs[m.rem_euclid(n) as usize]
    }

    /// Applies `f(slot, k, c)` to every coefficient.
    pub fn map_coeffs(&self, f: impl Fn(usize, f64, Complex64) -> Complex64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| f(i, self.grid.wavenumber(i), c))
            .collect();
        Self::from_coeffs(&self.grid, coeffs).expect("length preserved")
    }

    /// Applies a real, even multiplier given slot-wise.
    pub fn multiply(&self, symbol_values: &[f64]) -> Self {
        let coeffs = self.coeffs.iter().zip(symbol_values).map(|(&c, &m)| c * m).collect();
        Self::from_coeffs(&self.grid, coeffs).expect("length preserved")
    }

    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Self {
        let values = self.values.iter().map(|&v| f(v)).collect();
        Self::from_values(&self.grid, values).expect("length preserved")
    }

    pub fn scale(&self, a: f64) -> Self {
        SpectralField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| a * v).collect(),
            coeffs: self.coeffs.iter().map(|c| c * a).collect(),
        }
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: f64, other: &SpectralField) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        Ok(SpectralField {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(x, y)| x + a * y).collect(),
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(x, y)| x + y * a).collect(),
        })
    }

    pub fn add(&self, other: &SpectralField) -> Result<Self> {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &SpectralField) -> Result<Self> {
        self.axpy(-1.0, other)
    }

    /// Spectral-side inner product `sum_m u_m conj(v_m)` (real part).
    pub fn inner_spectral(&self, other: &SpectralField) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a * b.conj()).re)
            .sum())
    }

    pub fn norm_l2(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// 2/3-rule projection: zeroes every mode with `|m| > N/3`.
    pub fn dealias(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                if self.grid.retained(i) {
                    c
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        Self::from_coeffs(&self.grid, coeffs).expect("length preserved")
    }

    /// Exact cyclic shift by whole nodes: the result at node j is the input at
    /// node j + `nodes`.
    pub fn cyclic_shift(&self, nodes: isize) -> Self {
        let n = self.grid.points as isize;
        let values = (0..n)
            .map(|j| self.values[(j + nodes).rem_euclid(n) as usize])
            .collect();
        Self::from_values(&self.grid, values).expect("length preserved")
    }

    /// Spectral translate `x -> u(x + y)`.
    pub fn translate(&self, y: f64) -> Self {
        let nyq = self.grid.nyquist_slot();
        self.map_coeffs(|i, k, c| {
            if i == nyq {
                c * (k * y).cos()
            } else {
                c * Complex64::from_polar(1.0, k * y)
            }
        })
    }

    /// Largest `|u|` over the outer `fraction` of the period (`|x| >= (1 - fraction) P / 2`).
    pub fn edge_max(&self, fraction: f64) -> f64 {
        let limit = (1.0 - fraction) * 0.5 * self.grid.period;
        self.grid
            .nodes()
            .iter()
            .zip(&self.values)
            .filter(|(x, _)| x.abs() >= limit)
            .fold(0.0, |m, (_, v)| m.max(v.abs()))
    }

    /// Relative L2 mass carried by modes above 80% of the 2/3-rule band
    /// (including anything beyond the band).
    pub fn spectral_tail(&self) -> f64 {
        let total = self.norm_l2();
        if total == 0.0 {
            return 0.0;
        }
        let cutoff = 0.8 * self.grid.points as f64 / 3.0;
        let tail: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(i, _)| self.grid.mode(*i).unsigned_abs() as f64 > cutoff)
            .map(|(_, c)| c.norm_sqr())
            .sum();
        tail.sqrt() / total
    }

    /// Evaluates the trigonometric interpolant at an arbitrary point.
    pub fn interpolate(&self, x: f64) -> f64 {
        let nyq = self.grid.nyquist_slot();
        let mut acc = 0.0;
        for (i, c) in self.coeffs.iter().enumerate() {
            let kx = self.grid.wavenumber(i) * x;
            acc += if i == nyq {
                c.re * kx.cos()
            } else {
                (c * Complex64::from_polar(1.0, kx)).re
            };
        }
        acc / self.grid.period.sqrt()
    }
}

/// `(P/N) sum_j u_j v_j`.
pub fn inner_l2(u: &SpectralField, v: &SpectralField) -> Result<f64> {
    u.grid.check_same(&v.grid)?;
    let sum: f64 = u.values.iter().zip(&v.values).map(|(a, b)| a * b).sum();
    Ok(sum * u.grid.spacing())
}

/// `sqrt(sum_m (1 + k_m^2)^s |u_m|^2)`.
pub fn norm_hs(u: &SpectralField, s: f64) -> f64 {
    u.coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let k = u.grid.wavenumber(i);
            (1.0 + k * k).powf(s) * c.norm_sqr()
        })
        .sum::<f64>()
        .sqrt()
}

pub fn dealias(u: &SpectralField) -> SpectralField {
    u.dealias()
}

/// Moves a field to another grid.
///
/// With equal periods the coefficients are zero-padded or truncated. With a
/// different period the field is re-periodized: samples inside the old period
/// come from the trigonometric interpolant and everything outside is zero,
/// which requires the field to be below `tail_tol` near the cut.
pub fn resample_to_grid(u: &SpectralField, target: &PeriodicGrid, tail_tol: f64) -> Result<SpectralField> {
    let src = &u.grid;
    if (src.period - target.period).abs() <= 1e-12 * src.period {
        return Ok(change_resolution(u, target));
    }
    let tail = if target.period > src.period {
        u.edge_max(0.1)
    } else {
        let half = 0.5 * target.period * 0.9;
        src.nodes()
            .iter()
            .zip(&u.values)
            .filter(|(x, _)| x.abs() >= half)
            .fold(0.0f64, |m, (_, v)| m.max(v.abs()))
    };
    if tail > tail_tol {
        return Err(Error::TailTooLarge { tail, tol: tail_tol });
    }

    let h_src = src.spacing();
    let offset = (target.period - src.period) / (2.0 * h_src);
    let aligned = (target.spacing() - h_src).abs() <= 1e-12 * h_src && (offset - offset.round()).abs() <= 1e-9;
    let values = if aligned {
        let shift = offset.round() as i64;
        (0..target.points as i64)
            .map(|i| {
                let j = i - shift;
                if j >= 0 && (j as usize) < src.points {
                    u.values[j as usize]
                } else {
                    0.0
                }
            })
            .collect()
    } else {
        let half = 0.5 * src.period.min(target.period);
        target
            .nodes()
            .into_iter()
            .map(|x| if x.abs() < half { u.interpolate(x) } else { 0.0 })
            .collect()
    };
    SpectralField::from_values(target, values)
}

fn change_resolution(u: &SpectralField, target: &PeriodicGrid) -> SpectralField {
    let n_src = u.grid.points as i64;
    let n_dst = target.points as i64;
    let mut coeffs = vec![Complex64::new(0.0, 0.0); target.points];
    if n_dst >= n_src {
        for i in 0..u.grid.points {
            let m = u.grid.mode(i);
            let c = u.coeffs[i];
            if m == -n_src / 2 && n_dst > n_src {
                // split the old Nyquist mode into a real cosine pair
                coeffs[(n_dst - n_src / 2) as usize] += c * 0.5;
                coeffs[(n_src / 2) as usize] += c * 0.5;
            } else {
                coeffs[m.rem_euclid(n_dst) as usize] += c;
            }
        }
    } else {
        for i in 0..u.grid.points {
            let m = u.grid.mode(i);
            if m.abs() < n_dst / 2 {
                coeffs[m.rem_euclid(n_dst) as usize] = u.coeffs[i];
            }
        }
    }
    SpectralField::from_coeffs(target, coeffs).expect("length matches grid")
}
