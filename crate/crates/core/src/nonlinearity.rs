//! Nonlinearities `n = n_p + n_r` with a homogeneous leading part `n_p` of
//! degree `p` and a higher-order remainder `n_r = O(|x|^(p + delta))`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::registry::{no_args, parse_reals, Registry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PowerKind {
    /// `c_p |x|^p`, any real `p >= 2`.
    SignedModulus,
    /// `c_p x^p` with odd integer `p` and `c_p > 0`.
    OddPower,
    /// `c_p x^p` with even integer `p`.
    PurePower,
}

/// Higher-order correction to the leading power.
pub trait Remainder: Send + Sync + fmt::Debug {
    fn value(&self, x: f64) -> f64;
    fn derivative(&self, x: f64) -> f64;
    /// Primitive vanishing at the origin.
    fn primitive(&self, x: f64) -> f64;
    /// Excess order: `|n_r(x)| <= C |x|^(p + delta)` near zero.
    fn delta(&self) -> f64;
}

/// `sum_i c_i x^(e_i)` with integer exponents.
#[derive(Debug, Clone)]
pub struct PolynomialRemainder {
    terms: Vec<(i32, f64)>,
    delta: f64,
}

impl PolynomialRemainder {
    pub fn new(terms: Vec<(i32, f64)>, leading_power: f64) -> Result<Self> {
        let lowest = terms
            .iter()
            .filter(|(_, c)| *c != 0.0)
            .map(|(e, _)| *e)
            .min()
            .ok_or_else(|| Error::InvalidInput("empty remainder".into()))?;
        let delta = lowest as f64 - leading_power;
        if delta <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "remainder power {lowest} does not exceed the leading power {leading_power}"
            )));
        }
        Ok(PolynomialRemainder { terms, delta })
    }
}

impl Remainder for PolynomialRemainder {
    fn value(&self, x: f64) -> f64 {
        self.terms.iter().map(|&(e, c)| c * x.powi(e)).sum()
    }

    fn derivative(&self, x: f64) -> f64 {
        self.terms.iter().map(|&(e, c)| c * e as f64 * x.powi(e - 1)).sum()
    }

    fn primitive(&self, x: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(e, c)| c * x.powi(e + 1) / (e + 1) as f64)
            .sum()
    }

    fn delta(&self) -> f64 {
        self.delta
    }
}

#[derive(Clone, Debug)]
pub struct Nonlinearity {
    name: String,
    kind: PowerKind,
    p: f64,
    cp: f64,
    remainder: Option<Arc<dyn Remainder>>,
}

fn is_integer(p: f64) -> bool {
    p.fract() == 0.0
}

impl Nonlinearity {
    pub fn new(name: impl Into<String>, kind: PowerKind, p: f64, cp: f64) -> Result<Self> {
        if !(p >= 2.0 && p.is_finite()) {
            return Err(Error::InvalidInput(format!("exponent p must be >= 2, got {p}")));
        }
        if cp == 0.0 || !cp.is_finite() {
            return Err(Error::InvalidInput("leading coefficient must be nonzero".into()));
        }
        match kind {
            PowerKind::OddPower if !(is_integer(p) && p as i64 % 2 == 1) => {
                return Err(Error::InvalidInput(format!(
                    "odd power needs an odd integer p, got {p}"
                )));
            }
            PowerKind::OddPower if cp <= 0.0 => {
                return Err(Error::InvalidInput("odd power needs c_p > 0".into()));
            }
            PowerKind::PurePower if !(is_integer(p) && p as i64 % 2 == 0) => {
                return Err(Error::InvalidInput(format!(
                    "pure power needs an even integer p, got {p}"
                )));
            }
            _ => {}
        }
        Ok(Nonlinearity {
            name: name.into(),
            kind,
            p,
            cp,
            remainder: None,
        })
    }

    pub fn with_remainder(mut self, remainder: Arc<dyn Remainder>) -> Self {
        self.remainder = Some(remainder);
        self
    }

    /// `n(u) = u^2`, the Whitham nonlinearity.
    pub fn quadratic() -> Self {
        Self::new("quadratic", PowerKind::PurePower, 2.0, 1.0).expect("valid")
    }

    /// Polynomial `sum_{i>=2} c_i x^i`; the first nonzero coefficient is the
    /// leading term.
    pub fn polynomial(coeffs_from_quadratic: &[f64]) -> Result<Self> {
        let (lead_idx, &cp) = coeffs_from_quadratic
            .iter()
            .enumerate()
            .find(|(_, c)| **c != 0.0)
            .ok_or_else(|| Error::InvalidInput("polynomial needs a nonzero coefficient".into()))?;
        let p = (lead_idx + 2) as f64;
        let kind = if lead_idx % 2 == 0 {
            PowerKind::PurePower
        } else {
            PowerKind::OddPower
        };
        let name = format!(
            "poly:{}",
            coeffs_from_quadratic
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(",")
        );
        let nl = Self::new(name, kind, p, cp)?;
        let rest: Vec<(i32, f64)> = coeffs_from_quadratic
            .iter()
            .enumerate()
            .skip(lead_idx + 1)
            .filter(|(_, c)| **c != 0.0)
            .map(|(i, &c)| ((i + 2) as i32, c))
            .collect();
        if rest.is_empty() {
            Ok(nl)
        } else {
            Ok(nl.with_remainder(Arc::new(PolynomialRemainder::new(rest, p)?)))
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> PowerKind {
        self.kind
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn cp(&self) -> f64 {
        self.cp
    }

    pub fn remainder(&self) -> Option<&Arc<dyn Remainder>> {
        self.remainder.as_ref()
    }

    pub fn is_homogeneous(&self) -> bool {
        self.remainder.is_none()
    }

    /// The leading part alone, as used by the reduced functional.
    pub fn leading(&self) -> Nonlinearity {
        Nonlinearity {
            name: format!("{}:leading", self.name),
            remainder: None,
            ..self.clone()
        }
    }

    fn power(&self, x: f64) -> f64 {
        match self.kind {
            PowerKind::SignedModulus => x.abs().powf(self.p),
            _ => x.powi(self.p as i32),
        }
    }

    /// `n_p(x)`.
    pub fn eval_leading(&self, x: f64) -> f64 {
        self.cp * self.power(x)
    }

    /// `n(x)`.
    pub fn eval(&self, x: f64) -> f64 {
        self.eval_leading(x) + self.remainder.as_ref().map_or(0.0, |r| r.value(x))
    }

    /// `n'(x)`.
    pub fn eval_prime(&self, x: f64) -> f64 {
        let lead = match self.kind {
            PowerKind::SignedModulus => self.cp * self.p * x.abs().powf(self.p - 1.0) * x.signum(),
            _ => self.cp * self.p * x.powi(self.p as i32 - 1),
        };
        lead + self.remainder.as_ref().map_or(0.0, |r| r.derivative(x))
    }

    /// `N_{p+1}(x)`, the primitive of the leading part.
    pub fn eval_np1(&self, x: f64) -> f64 {
        match self.kind {
            PowerKind::SignedModulus => self.cp * x * x.abs().powf(self.p) / (self.p + 1.0),
            _ => self.cp * x.powi(self.p as i32 + 1) / (self.p + 1.0),
        }
    }

    /// `N(x) = int_0^x n`.
    pub fn eval_primitive(&self, x: f64) -> f64 {
        self.eval_np1(x) + self.remainder.as_ref().map_or(0.0, |r| r.primitive(x))
    }

    /// Sign of the waves this nonlinearity supports from a positive seed.
    pub fn natural_polarity(&self) -> f64 {
        self.cp.signum()
    }

    /// Checks `2 <= p < 4 j* + 1`.
    pub fn check_window(&self, j_star: u32) -> Result<()> {
        let upper = 4.0 * j_star as f64 + 1.0;
        if self.p >= 2.0 && self.p < upper {
            Ok(())
        } else {
            Err(Error::ExponentWindow {
                p: self.p,
                j_star,
                upper,
            })
        }
    }
}

/// Built-in nonlinearities: `quadratic`, `modulus:p,cp`, `oddpower:p,cp`,
/// `poly:c2,c3,...`.
pub fn nonlinearity_registry() -> Registry<Nonlinearity> {
    let mut reg = Registry::new("nonlinearity");
    reg.register("quadratic", |a| {
        no_args(a, "quadratic")?;
        Ok(Nonlinearity::quadratic())
    });
    reg.register("modulus", |a| {
        let v = parse_reals(a, "modulus")?;
        let [p, cp] = v[..] else {
            return Err(Error::InvalidInput("modulus takes `p,cp`".into()));
        };
        Nonlinearity::new(format!("modulus:{p},{cp}"), PowerKind::SignedModulus, p, cp)
    });
    reg.register("oddpower", |a| {
        let v = parse_reals(a, "oddpower")?;
        let [p, cp] = v[..] else {
            return Err(Error::InvalidInput("oddpower takes `p,cp`".into()));
        };
        Nonlinearity::new(format!("oddpower:{p},{cp}"), PowerKind::OddPower, p, cp)
    });
    reg.register("poly", |a| Nonlinearity::polynomial(&parse_reals(a, "poly")?));
    reg
}
