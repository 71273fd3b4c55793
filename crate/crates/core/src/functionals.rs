//! Discrete energy, momentum and their gradients.
//!
//! With the unitary transform convention the quadratic part of the energy is
//! evaluated spectrally and the nonlinear integral by node quadrature of the
//! 2/3-dealiased field. Writing `D` for the dealiasing projection, the discrete
//! energy is `E(u) = -1/2 <u, Lu> - (P/N) sum_j N((Du)_j)` and its exact L2
//! gradient is `-Lu - D n(Du)`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{norm_hs, PeriodicGrid, SpectralField};
use crate::nonlinearity::Nonlinearity;
use crate::symbol::DispersionSymbol;

pub const DEFAULT_BALL_RADIUS: f64 = 1.0;

/// A symbol, a nonlinearity and the radius `R` of the admissible H1 ball.
#[derive(Clone, Debug)]
pub struct Problem {
    symbol: DispersionSymbol,
    nonlinearity: Nonlinearity,
    ball_radius: f64,
}

impl Problem {
    pub fn new(symbol: DispersionSymbol, nonlinearity: Nonlinearity, ball_radius: f64) -> Result<Self> {
        nonlinearity.check_window(symbol.j_star())?;
        if !(ball_radius > 0.0) {
            return Err(Error::InvalidInput(format!(
                "ball radius must be positive, got {ball_radius}"
            )));
        }
        Ok(Problem {
            symbol,
            nonlinearity,
            ball_radius,
        })
    }

    /// Whitham symbol with `n(u) = u^2`.
    pub fn whitham() -> Self {
        Self::new(
            DispersionSymbol::whitham(),
            Nonlinearity::quadratic(),
            DEFAULT_BALL_RADIUS,
        )
        .expect("p = 2 is admissible for j* = 1")
    }

    /// The reduced long-wave problem: polynomial symbol and leading nonlinearity.
    pub fn reduced(j_star: u32, d2j_star: f64, nl: &Nonlinearity) -> Result<Self> {
        nl.check_window(j_star)?;
        Ok(Problem {
            symbol: DispersionSymbol::long_wave(j_star, d2j_star),
            nonlinearity: nl.leading(),
            ball_radius: f64::INFINITY,
        })
    }

    pub fn symbol(&self) -> &DispersionSymbol {
        &self.symbol
    }

    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.nonlinearity
    }

    pub fn ball_radius(&self) -> f64 {
        self.ball_radius
    }

    pub fn discretize(&self, grid: &PeriodicGrid) -> Discretization {
        Discretization::new(self, grid)
    }
}

/// A problem with its symbol tabulated on one grid.
#[derive(Clone, Debug)]
pub struct Discretization {
    problem: Problem,
    grid: PeriodicGrid,
    symbol_values: Vec<f64>,
}

/// Energy split into its quadratic and nonlinear parts.
#[derive(Debug, Clone, Copy)]
pub struct EnergyParts {
    pub quadratic: f64,
    pub nonlinear: f64,
}

impl EnergyParts {
    pub fn total(&self) -> f64 {
        self.quadratic + self.nonlinear
    }

    /// Magnitude against which round-off in the total is judged.
    pub fn scale(&self) -> f64 {
        self.quadratic.abs() + self.nonlinear.abs()
    }
}

impl Discretization {
    pub fn new(problem: &Problem, grid: &PeriodicGrid) -> Self {
        Discretization {
            problem: problem.clone(),
            grid: grid.clone(),
            symbol_values: problem.symbol.sample(grid),
        }
    }

    pub fn problem(&self) -> &Problem {
        &self.problem
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn symbol_values(&self) -> &[f64] {
        &self.symbol_values
    }

    pub fn apply_l(&self, u: &SpectralField) -> SpectralField {
        u.multiply(&self.symbol_values)
    }

    /// `<u, Lu>`.
    pub fn quadratic_form(&self, u: &SpectralField) -> f64 {
        u.coeffs()
            .iter()
            .zip(&self.symbol_values)
            .map(|(c, m)| m * c.norm_sqr())
            .sum()
    }

    /// `D n(Du)`.
    pub fn nonlinear_term(&self, u: &SpectralField) -> SpectralField {
        let nl = &self.problem.nonlinearity;
        u.dealias().map_values(|x| nl.eval(x)).dealias()
    }

    pub fn energy_parts(&self, u: &SpectralField) -> EnergyParts {
        let nl = &self.problem.nonlinearity;
        let du = u.dealias();
        let integral: f64 = du.values().iter().map(|&x| nl.eval_primitive(x)).sum::<f64>() * self.grid.spacing();
        EnergyParts {
            quadratic: -0.5 * self.quadratic_form(u),
            nonlinear: -integral,
        }
    }

    pub fn energy(&self, u: &SpectralField) -> f64 {
        self.energy_parts(u).total()
    }

    /// `E'(u) = -Lu - D n(Du)`.
    pub fn gradient(&self, u: &SpectralField) -> SpectralField {
        let n = self.nonlinear_term(u);
        let coeffs = u
            .coeffs()
            .iter()
            .zip(&self.symbol_values)
            .zip(n.coeffs())
            .map(|((c, m), nc)| -(c * m) - nc)
            .collect();
        SpectralField::from_coeffs(&self.grid, coeffs).expect("length matches grid")
    }
}

/// `Q(u) = 1/2 ||u||^2`.
pub fn momentum(u: &SpectralField) -> f64 {
    0.5 * u.norm_l2().powi(2)
}

pub fn energy(prob: &Problem, u: &SpectralField) -> f64 {
    prob.discretize(u.grid()).energy(u)
}

pub fn energy_gradient(prob: &Problem, u: &SpectralField) -> SpectralField {
    prob.discretize(u.grid()).gradient(u)
}

/// Smooth, increasing penalty on `||u||_{H1}^2` that vanishes on `[0, R^2]`
/// and blows up at `(2R)^2`. It is the profile
/// `s -> exp(-1/s) / (1 - s)` on `(0, 1)` with `s = (t - R^2) / (3 R^2)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Penalization {
    pub radius: f64,
}

impl Penalization {
    pub fn new(radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "penalization radius must be positive, got {radius}"
            )));
        }
        Ok(Penalization { radius })
    }

    pub fn limit(&self) -> f64 {
        4.0 * self.radius * self.radius
    }

    fn reduced(&self, t: f64) -> f64 {
        let r2 = self.radius * self.radius;
        (t - r2) / (3.0 * r2)
    }

    /// `rho(t)`; infinite at and beyond `(2R)^2`.
    pub fn value(&self, t: f64) -> f64 {
        let s = self.reduced(t);
        if s <= 0.0 {
            0.0
        } else if s >= 1.0 {
            f64::INFINITY
        } else {
            (-1.0 / s).exp() / (1.0 - s)
        }
    }

    /// `rho'(t)`.
    pub fn derivative(&self, t: f64) -> f64 {
        let s = self.reduced(t);
        if s <= 0.0 {
            0.0
        } else if s >= 1.0 {
            f64::INFINITY
        } else {
            let e = (-1.0 / s).exp();
            let ds = e * (1.0 / (s * s * (1.0 - s)) + 1.0 / ((1.0 - s) * (1.0 - s)));
            ds / (3.0 * self.radius * self.radius)
        }
    }
}

fn check_domain(pen: &Penalization, u: &SpectralField) -> Result<f64> {
    let t = norm_hs(u, 1.0).powi(2);
    if t >= pen.limit() {
        return Err(Error::OutOfDomain {
            norm_sq: t,
            limit: pen.limit(),
        });
    }
    Ok(t)
}

/// `E(u) + rho(||u||_{H1}^2)`.
pub fn penalized_energy(prob: &Problem, pen: &Penalization, u: &SpectralField) -> Result<f64> {
    let t = check_domain(pen, u)?;
    Ok(energy(prob, u) + pen.value(t))
}

/// Gradient of the penalized energy: `E'(u) + 2 rho'(||u||_{H1}^2) (u - u'')`.
pub fn penalized_gradient(prob: &Problem, pen: &Penalization, u: &SpectralField) -> Result<SpectralField> {
    let t = check_domain(pen, u)?;
    let g = energy_gradient(prob, u);
    Ok(add_penalty_gradient(&g, u, pen.derivative(t)))
}

pub(crate) fn add_penalty_gradient(g: &SpectralField, u: &SpectralField, rho_prime: f64) -> SpectralField {
    if rho_prime == 0.0 {
        return g.clone();
    }
    let coeffs: Vec<Complex64> = g
        .coeffs()
        .iter()
        .zip(u.coeffs())
        .enumerate()
        .map(|(i, (gc, uc))| {
            let k = u.grid().wavenumber(i);
            gc + uc * (2.0 * rho_prime * (1.0 + k * k))
        })
        .collect();
    SpectralField::from_coeffs(u.grid(), coeffs).expect("length matches grid")
}

/// Reduced long-wave energy
/// `-int { m^(2j*)(0) / (2 (2j*)!) (w^(j*))^2 + N_{p+1}(w) }`.
pub fn reduced_energy(j_star: u32, d2j_star: f64, nl: &Nonlinearity, w: &SpectralField) -> Result<f64> {
    Ok(energy(&Problem::reduced(j_star, d2j_star, nl)?, w))
}

pub fn reduced_gradient(j_star: u32, d2j_star: f64, nl: &Nonlinearity, w: &SpectralField) -> Result<SpectralField> {
    Ok(energy_gradient(&Problem::reduced(j_star, d2j_star, nl)?, w))
}

/// `|||v|||_{tau,mu} = (int v^2 + mu^(-4 j* tau beta) (v^(2j*))^2)^(1/2)`.
pub fn weighted_norm(u: &SpectralField, tau: f64, mu: f64, j_star: u32, beta: f64) -> Result<f64> {
    if !(tau < 1.0) || !(mu > 0.0) {
        return Err(Error::InvalidInput(format!(
            "weighted norm needs tau < 1 and mu > 0 (got {tau}, {mu})"
        )));
    }
    let weight = mu.powf(-4.0 * j_star as f64 * tau * beta);
    let order = 4 * j_star as i32;
    let sum: f64 = u
        .coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let k = u.grid().wavenumber(i);
            (1.0 + weight * k.powi(order)) * c.norm_sqr()
        })
        .sum();
    Ok(sum.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::inner_l2;
    use crate::operators::apply_l;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn smooth_random(g: &PeriodicGrid, rng: &mut ChaCha8Rng, amp: f64) -> SpectralField {
        let modes: Vec<(f64, f64, f64)> = (1..=8)
            .map(|j| (rng.gen_range(-1.0..1.0), rng.gen_range(0.0..2.0 * PI), j as f64))
            .collect();
        let offset = rng.gen_range(-0.5..0.5);
        SpectralField::from_fn(g, |x| {
            amp * (offset
                + modes
                    .iter()
                    .map(|(a, ph, j)| a * (j * 2.0 * PI * x / g.period() + ph).cos() / j)
                    .sum::<f64>())
        })
    }

    #[test]
    fn momentum_examples() {
        let g = PeriodicGrid::new(12.0, 64).unwrap();
        assert_eq!(momentum(&SpectralField::zeros(&g)), 0.0);
        let a = 0.3;
        let u = SpectralField::from_fn(&g, |x| a * (2.0 * PI * x / 12.0).cos());
        assert!((momentum(&u) - a * a * 12.0 / 4.0).abs() < 1e-14);
    }

    #[test]
    fn energy_of_single_mode() {
        let prob = Problem::whitham();
        let p = 15.0;
        let g = PeriodicGrid::new(p, 64).unwrap();
        assert_eq!(energy(&prob, &SpectralField::zeros(&g)), 0.0);
        let a = 0.4;
        let k = 2.0 * PI / p;
        let u = SpectralField::from_fn(&g, |x| a * (k * x).cos());
        let expected = -prob.symbol().eval(k) * a * a * p / 4.0;
        assert!((energy(&prob, &u) - expected).abs() < 1e-14);
        // quadratic lower bound -1/2 <u, Lu> >= -m(0) Q(u)
        let quad = -0.5 * inner_l2(&u, &apply_l(prob.symbol(), &u)).unwrap();
        assert!(quad >= -prob.symbol().m_zero() * momentum(&u));
    }

    #[test]
    fn gradient_of_constant() {
        let prob = Problem::whitham();
        let g = PeriodicGrid::new(10.0, 32).unwrap();
        let c = 0.2;
        let grad = energy_gradient(&prob, &SpectralField::from_fn(&g, |_| c));
        for v in grad.values() {
            assert!((v - (-c - c * c)).abs() < 1e-14);
        }
        assert!(energy_gradient(&prob, &SpectralField::zeros(&g)).max_abs() == 0.0);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g = PeriodicGrid::new(30.0, 128).unwrap();
        let probs = [
            Problem::whitham(),
            Problem::reduced(1, -1.0 / 3.0, &Nonlinearity::quadratic()).unwrap(),
        ];
        let h = 1e-5;
        for prob in &probs {
            let disc = prob.discretize(&g);
            for _ in 0..10 {
                let u = smooth_random(&g, &mut rng, 0.5);
                let v = smooth_random(&g, &mut rng, 1.0);
                let fd = (disc.energy(&u.axpy(h, &v).unwrap()) - disc.energy(&u.axpy(-h, &v).unwrap())) / (2.0 * h);
                let an = inner_l2(&disc.gradient(&u), &v).unwrap();
                assert!((fd - an).abs() <= 1e-6 * an.abs(), "{fd} vs {an}");
            }
        }
    }

    #[test]
    fn energy_is_translation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let prob = Problem::whitham();
        let g = PeriodicGrid::new(40.0, 128).unwrap();
        let u = smooth_random(&g, &mut rng, 0.7);
        let e0 = energy(&prob, &u);
        for shift in [1, 17, -40, 63] {
            let e = energy(&prob, &u.cyclic_shift(shift));
            assert!((e - e0).abs() <= 1e-10 * e0.abs().max(1.0));
        }
    }

    #[test]
    fn scaling_of_energy_parts() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let prob = Problem::whitham();
        let g = PeriodicGrid::new(40.0, 128).unwrap();
        let disc = prob.discretize(&g);
        let u = smooth_random(&g, &mut rng, 0.5).dealias();
        let base = disc.energy_parts(&u);
        for a in [1.5, 2.0, 4.0] {
            let scaled = disc.energy_parts(&u.scale(f64::sqrt(a)));
            assert!((scaled.quadratic - a * base.quadratic).abs() < 1e-12 * base.quadratic.abs());
            let expected = a.powf(1.5) * base.nonlinear;
            assert!((scaled.nonlinear - expected).abs() < 1e-10 * expected.abs().max(1e-12));
        }
    }

    #[test]
    fn penalization_shape() {
        let pen = Penalization::new(1.0).unwrap();
        assert_eq!(pen.value(0.5), 0.0);
        assert_eq!(pen.value(1.0), 0.0);
        let mut last = 0.0;
        for i in 1..200 {
            let t = 1.0 + 3.0 * i as f64 / 200.0;
            let v = pen.value(t);
            assert!(v >= last);
            last = v;
        }
        assert!(pen.value(4.0 - 1e-9) > 1e8);
        assert!(pen.value(4.0).is_infinite());
        // derivative by central differences
        for t in [1.2, 2.0, 3.0, 3.9] {
            let h = 1e-6;
            let fd = (pen.value(t + h) - pen.value(t - h)) / (2.0 * h);
            assert!((fd - pen.derivative(t)).abs() <= 1e-6 * fd.abs().max(1e-12));
        }
        // growth bound rho' <= M1 rho^a1 + M2 rho^a2 with a1 = 1/2, a2 = 2
        for i in 1..400 {
            let t = 1.0 + 3.0 * i as f64 / 400.0;
            let (r, dr) = (pen.value(t), pen.derivative(t));
            assert!(dr <= 10.0 * r.sqrt() + 10.0 * r * r + 1e-300);
        }
    }

    #[test]
    fn penalized_energy_inside_and_near_the_ball_edge() {
        let prob = Problem::whitham();
        let g = PeriodicGrid::new(20.0, 64).unwrap();
        let pen = Penalization::new(1.0).unwrap();
        let small = SpectralField::from_fn(&g, |x| 0.05 * (-x * x).exp());
        assert!(norm_hs(&small, 1.0).powi(2) <= 1.0);
        assert_eq!(penalized_energy(&prob, &pen, &small).unwrap(), energy(&prob, &small));
        let shape = SpectralField::from_fn(&g, |x| (-x * x / 4.0).exp());
        let unit = shape.scale(1.0 / norm_hs(&shape, 1.0));
        let mut last = f64::NEG_INFINITY;
        for scale in [1.5, 1.9, 1.99, 1.999] {
            let e = penalized_energy(&prob, &pen, &unit.scale(scale)).unwrap();
            assert!(e > last);
            last = e;
        }
        assert!(last > 1e2);
        let err = penalized_energy(&prob, &pen, &unit.scale(2.0)).unwrap_err();
        assert_eq!(err.code(), "OUT_OF_DOMAIN");
    }

    #[test]
    fn penalized_gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let prob = Problem::whitham();
        let g = PeriodicGrid::new(20.0, 64).unwrap();
        let pen = Penalization::new(0.6).unwrap();
        let shape = smooth_random(&g, &mut rng, 1.0);
        let u = shape.scale(0.9 / norm_hs(&shape, 1.0));
        let v = smooth_random(&g, &mut rng, 0.1);
        let h = 1e-6;
        let fd = (penalized_energy(&prob, &pen, &u.axpy(h, &v).unwrap()).unwrap()
            - penalized_energy(&prob, &pen, &u.axpy(-h, &v).unwrap()).unwrap())
            / (2.0 * h);
        let an = inner_l2(&penalized_gradient(&prob, &pen, &u).unwrap(), &v).unwrap();
        assert!(pen.derivative(0.81) > 0.0);
        assert!((fd - an).abs() <= 1e-6 * an.abs(), "{fd} vs {an}");
    }

    #[test]
    fn reduced_energy_whitham_form() {
        // E_lw(w) = int (w'^2 / 12 - w^3 / 3)
        let g = PeriodicGrid::new(2.0 * PI, 64).unwrap();
        let nl = Nonlinearity::quadratic();
        assert_eq!(
            reduced_energy(1, -1.0 / 3.0, &nl, &SpectralField::zeros(&g)).unwrap(),
            0.0
        );
        let w = SpectralField::from_fn(&g, |x| 0.5 + 0.2 * x.cos());
        // int w'^2 = 0.04 pi; int w^3 = 2 pi (0.125 + 3 * 0.5 * 0.02)
        let expected = 0.04 * PI / 12.0 - 2.0 * PI * (0.125 + 0.03) / 3.0;
        assert!((reduced_energy(1, -1.0 / 3.0, &nl, &w).unwrap() - expected).abs() < 1e-13);
    }

    #[test]
    fn weighted_norm_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let g = PeriodicGrid::new(30.0, 64).unwrap();
        let v = smooth_random(&g, &mut rng, 1.0);
        let n0 = weighted_norm(&v, 0.0, 0.01, 1, 1.0 / 3.0).unwrap();
        let d2 = crate::operators::ddx(&crate::operators::ddx(&v));
        let expected = (v.norm_l2().powi(2) + d2.norm_l2().powi(2)).sqrt();
        assert!((n0 - expected).abs() < 1e-12 * expected);
        let mut last = 0.0;
        for tau in [0.0, 0.3, 0.6, 0.9] {
            let n = weighted_norm(&v, tau, 0.01, 1, 1.0 / 3.0).unwrap();
            assert!(n >= last);
            last = n;
        }
        assert!(weighted_norm(&v, 1.0, 0.01, 1, 1.0 / 3.0).is_err());
    }
}
