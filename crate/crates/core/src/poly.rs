use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Polynomial in the family index λ with nonnegative coefficients `c_0 + c_1 λ + …`.
///
/// Nonnegative coefficients make the value nondecreasing in λ ≥ 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::Argument("polynomial coefficients must be finite and nonnegative".into()));
        }
        Ok(Self { coeffs })
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c]).expect("constant must be nonnegative")
    }

    /// `λ`.
    pub fn identity() -> Self {
        Self { coeffs: vec![0.0, 1.0] }
    }

    /// `c_0 + c_1 λ`.
    pub fn linear(c0: f64, c1: f64) -> Self {
        Self::new(vec![c0, c1]).expect("coefficients must be nonnegative")
    }

    pub fn monomial(coeff: f64, degree: usize) -> Self {
        let mut coeffs = vec![0.0; degree + 1];
        coeffs[degree] = coeff;
        Self::new(coeffs).expect("coefficient must be nonnegative")
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.iter().rposition(|&c| c != 0.0).unwrap_or(0)
    }

    pub fn eval(&self, lambda: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * lambda + c)
    }

    /// Value at integer λ rounded to a count.
    pub fn count(&self, lambda: u32) -> usize {
        self.eval(f64::from(lambda)).round() as usize
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(i, c)| match i {
                0 => format!("{c}"),
                1 => format!("{c}*l"),
                _ => format!("{c}*l^{i}"),
            })
            .collect();
        if terms.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", terms.join(" + "))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluates_horner() {
        let p = Polynomial::new(vec![10.0, 1.0, 2.0]).unwrap();
        assert_eq!(p.eval(3.0), 10.0 + 3.0 + 18.0);
        assert_eq!(p.degree(), 2);
        assert_eq!(Polynomial::identity().count(4), 4);
    }

    #[test]
    fn rejects_negative_coefficients() {
        assert!(Polynomial::new(vec![1.0, -1.0]).is_err());
    }

    #[test]
    fn nondecreasing() {
        let p = Polynomial::new(vec![0.5, 0.0, 3.0, 1.0]).unwrap();
        assert!((1..20).all(|l| p.eval(l as f64) <= p.eval(l as f64 + 1.0)));
    }
}
