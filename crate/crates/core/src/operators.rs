//! Fourier multipliers acting on spectral fields.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::SpectralField;
use crate::symbol::DispersionSymbol;

/// `(Lu)_m = m(k_m) u_m`.
pub fn apply_l(s: &DispersionSymbol, u: &SpectralField) -> SpectralField {
    u.multiply(&s.sample(u.grid()))
}

/// Spectral derivative; the Nyquist mode is dropped so the result stays real.
pub fn ddx(u: &SpectralField) -> SpectralField {
    let nyq = u.grid().nyquist_slot();
    u.map_coeffs(|i, k, c| {
        if i == nyq {
            Complex64::new(0.0, 0.0)
        } else {
            c * Complex64::new(0.0, k)
        }
    })
}

/// `(nu - L)^{-1} u` for a supercritical speed `nu > m(0)`.
pub fn resolvent(s: &DispersionSymbol, nu: f64, u: &SpectralField) -> Result<SpectralField> {
    if !(nu > s.m_zero()) {
        return Err(Error::SubcriticalSpeed { nu, m_zero: s.m_zero() });
    }
    let inv: Vec<f64> = s.sample(u.grid()).into_iter().map(|m| 1.0 / (nu - m)).collect();
    Ok(u.multiply(&inv))
}

/// Sharp split at the symbol's cutoff `k0`: `u1` keeps `|k| <= k0`, `u2` the rest.
pub fn band_split(s: &DispersionSymbol, u: &SpectralField) -> (SpectralField, SpectralField) {
    let k0 = s.k_cut();
    let low: Vec<f64> = u
        .grid()
        .wavenumbers()
        .into_iter()
        .map(|k| if k.abs() <= k0 { 1.0 } else { 0.0 })
        .collect();
    let high: Vec<f64> = low.iter().map(|x| 1.0 - x).collect();
    (u.multiply(&low), u.multiply(&high))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{inner_l2, norm_hs, PeriodicGrid};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn field(g: &PeriodicGrid, vals: &[f64]) -> SpectralField {
        SpectralField::from_values(g, vals.to_vec()).unwrap()
    }

    #[test]
    fn whitham_on_simple_fields() {
        let s = DispersionSymbol::whitham();
        let g = PeriodicGrid::new(20.0, 64).unwrap();
        let c = SpectralField::from_fn(&g, |_| 0.7);
        let lc = apply_l(&s, &c);
        assert!(lc.values().iter().all(|v| (v - 0.7).abs() < 1e-14));
        let k = 2.0 * PI / 20.0;
        let cosine = SpectralField::from_fn(&g, |x| (k * x).cos());
        let l = apply_l(&s, &cosine);
        for (x, v) in g.nodes().iter().zip(l.values()) {
            assert!((v - s.eval(k) * (k * x).cos()).abs() < 1e-14);
        }
    }

    #[test]
    fn derivative_of_modes() {
        let g = PeriodicGrid::new(5.0, 32).unwrap();
        let k = 2.0 * PI / 5.0;
        let d = ddx(&SpectralField::from_fn(&g, |x| (k * x).sin()));
        for (x, v) in g.nodes().iter().zip(d.values()) {
            assert!((v - k * (k * x).cos()).abs() < 1e-13);
        }
        assert!(ddx(&SpectralField::from_fn(&g, |_| 3.0)).max_abs() < 1e-14);
    }

    #[test]
    fn resolvent_cases() {
        let s = DispersionSymbol::whitham();
        let g = PeriodicGrid::new(10.0, 32).unwrap();
        let c = SpectralField::from_fn(&g, |_| 1.0);
        let r = resolvent(&s, 1.2, &c).unwrap();
        assert!(r.values().iter().all(|v| (v - 1.0 / 0.2).abs() < 1e-11));
        assert!(matches!(resolvent(&s, 0.9, &c), Err(Error::SubcriticalSpeed { .. })));
        assert!(matches!(resolvent(&s, 1.0, &c), Err(Error::SubcriticalSpeed { .. })));
    }

    #[test]
    fn band_split_low_content() {
        let s = DispersionSymbol::whitham();
        let g = PeriodicGrid::new(2.0 * PI, 64).unwrap();
        let u = SpectralField::from_fn(&g, |x| x.cos() + 0.2 * (3.0 * x).sin());
        let (lo, hi) = band_split(&s, &u);
        assert!(hi.max_abs() < 1e-14);
        for (a, b) in lo.values().iter().zip(u.values()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    proptest! {
        #[test]
        fn multiplier_properties(
            a in proptest::collection::vec(-1.0f64..1.0, 64),
            b in proptest::collection::vec(-1.0f64..1.0, 64),
            period in 2.0f64..100.0,
        ) {
            let s = DispersionSymbol::whitham();
            let g = PeriodicGrid::new(period, 64).unwrap();
            let u = field(&g, &a);
            let v = field(&g, &b);
            let scale = u.norm_l2() * v.norm_l2() + 1e-300;
            // self-adjoint
            let luv = inner_l2(&apply_l(&s, &u), &v).unwrap();
            let ulv = inner_l2(&u, &apply_l(&s, &v)).unwrap();
            prop_assert!((luv - ulv).abs() <= 1e-10 * scale);
            // commutes with d/dx
            let x = apply_l(&s, &ddx(&u));
            let y = ddx(&apply_l(&s, &u));
            prop_assert!(x.sub(&y).unwrap().norm_l2() <= 1e-10 * (1.0 + norm_hs(&u, 1.0)));
            // multiplier bound
            prop_assert!(apply_l(&s, &u).norm_l2() <= s.m_zero() * u.norm_l2() * (1.0 + 1e-14));
            // antisymmetry of d/dx
            prop_assert!(inner_l2(&u, &ddx(&u)).unwrap().abs() <= 1e-10 * norm_hs(&u, 1.0).powi(2).max(1e-300));
            // resolvent inverts (nu - L)
            let r = resolvent(&s, 1.3, &u).unwrap();
            let back = r.scale(1.3).sub(&apply_l(&s, &r)).unwrap();
            prop_assert!(back.sub(&u).unwrap().norm_l2() <= 1e-12 * u.norm_l2().max(1e-300) * 10.0);
            // band split is an orthogonal decomposition
            let (lo, hi) = band_split(&s, &u);
            let total = lo.norm_l2().powi(2) + hi.norm_l2().powi(2);
            prop_assert!((total - u.norm_l2().powi(2)).abs() <= 1e-12 * u.norm_l2().powi(2).max(1e-300));
            let sum = lo.add(&hi).unwrap();
            for (p, q) in sum.values().iter().zip(u.values()) {
                prop_assert!((p - q).abs() <= 1e-13);
            }
        }
    }
}
