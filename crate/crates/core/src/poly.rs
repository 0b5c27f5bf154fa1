//! Dense real polynomials in the monomial basis.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Neg, Sub};

/// `coeffs[k]` is the coefficient of `y^k`.
///
/// Trailing zeros are trimmed on construction, so the zero polynomial has an
/// empty coefficient vector and `degree()` returns `None` for it.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MonomialPoly {
    coeffs: Vec<f64>,
}

impl MonomialPoly {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    /// `a + b*y`
    pub fn linear(a: f64, b: f64) -> Self {
        Self::new(vec![a, b])
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Coefficient of `y^k` (zero past the degree).
    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    /// Horner evaluation.
    pub fn eval(&self, y: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * y + c)
    }

    /// Value and first derivative in one Horner pass.
    pub fn eval_with_derivative(&self, y: f64) -> (f64, f64) {
        let mut p = 0.0;
        let mut dp = 0.0;
        for &c in self.coeffs.iter().rev() {
            dp = dp * y + p;
            p = p * y + c;
        }
        (p, dp)
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * k as f64)
                .collect(),
        )
    }

    /// Antiderivative vanishing at zero.
    pub fn antiderivative(&self) -> Self {
        let mut out = Vec::with_capacity(self.coeffs.len() + 1);
        out.push(0.0);
        out.extend(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(k, &c)| c / (k + 1) as f64),
        );
        Self::new(out)
    }

    /// `int_a^b p(y) dy`
    pub fn integrate(&self, a: f64, b: f64) -> f64 {
        let anti = self.antiderivative();
        anti.eval(b) - anti.eval(a)
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * factor).collect())
    }

    /// Largest absolute coefficient, used as a magnitude for tolerances.
    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }
}

impl From<Vec<f64>> for MonomialPoly {
    fn from(coeffs: Vec<f64>) -> Self {
        Self::new(coeffs)
    }
}

impl Add for &MonomialPoly {
    type Output = MonomialPoly;

    fn add(self, rhs: &MonomialPoly) -> MonomialPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        MonomialPoly::new((0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }
}

impl Sub for &MonomialPoly {
    type Output = MonomialPoly;

    fn sub(self, rhs: &MonomialPoly) -> MonomialPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        MonomialPoly::new((0..n).map(|k| self.coeff(k) - rhs.coeff(k)).collect())
    }
}

impl Mul for &MonomialPoly {
    type Output = MonomialPoly;

    fn mul(self, rhs: &MonomialPoly) -> MonomialPoly {
        if self.is_zero() || rhs.is_zero() {
            return MonomialPoly::zero();
        }
        let mut out = vec![0.0; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        MonomialPoly::new(out)
    }
}

impl Neg for &MonomialPoly {
    type Output = MonomialPoly;

    fn neg(self) -> MonomialPoly {
        self.scale(-1.0)
    }
}

impl Add for MonomialPoly {
    type Output = MonomialPoly;
    fn add(self, rhs: MonomialPoly) -> MonomialPoly {
        &self + &rhs
    }
}

impl Sub for MonomialPoly {
    type Output = MonomialPoly;
    fn sub(self, rhs: MonomialPoly) -> MonomialPoly {
        &self - &rhs
    }
}

impl Mul for MonomialPoly {
    type Output = MonomialPoly;
    fn mul(self, rhs: MonomialPoly) -> MonomialPoly {
        &self * &rhs
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trims_trailing_zeros() {
        let p = MonomialPoly::new(vec![1.0, 2.0, 0.0, 0.0]);
        assert_eq!(p.degree(), Some(1));
        assert!(MonomialPoly::new(vec![0.0]).is_zero());
        assert_eq!(MonomialPoly::zero().degree(), None);
    }

    #[test]
    fn horner_and_derivative() {
        // 1 - 3y + 2y^3
        let p = MonomialPoly::new(vec![1.0, -3.0, 0.0, 2.0]);
        assert_eq!(p.eval(2.0), 1.0 - 6.0 + 16.0);
        let (v, d) = p.eval_with_derivative(2.0);
        assert_eq!(v, 11.0);
        assert_eq!(d, -3.0 + 24.0);
        assert_eq!(p.derivative().coeffs(), &[-3.0, 0.0, 6.0]);
    }

    #[test]
    fn antiderivative_vanishes_at_zero() {
        let p = MonomialPoly::new(vec![3.0, 0.0, 3.0]);
        let a = p.antiderivative();
        assert_eq!(a.eval(0.0), 0.0);
        assert_eq!(a.coeffs(), &[0.0, 3.0, 0.0, 1.0]);
        assert!((p.integrate(0.0, 1.0) - 4.0).abs() < 1e-15);
    }

    #[test]
    fn product_and_sum() {
        let a = MonomialPoly::linear(1.0, 1.0);
        let b = MonomialPoly::linear(-1.0, 1.0);
        assert_eq!((&a * &b).coeffs(), &[-1.0, 0.0, 1.0]);
        assert_eq!((&a + &b).coeffs(), &[0.0, 2.0]);
        assert!((&a - &a).is_zero());
        assert!((&a * &MonomialPoly::zero()).is_zero());
    }
}
