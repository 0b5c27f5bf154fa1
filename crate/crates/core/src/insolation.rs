//! Annual-mean insolation distribution `s(y)` and its even Legendre series.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::invalid;
use crate::legendre::{eval_even, legendre_poly, EvenMode, MAX_MODE};
use crate::math;
use crate::poly::MonomialPoly;
use crate::quadrature::Quadrature;
use crate::Result;

/// Present-day obliquity in degrees.
pub const DEFAULT_OBLIQUITY_DEG: f64 = 23.5;

/// Second coefficient of the two-term insolation fit used by default.
pub const QUADRATIC_S2: f64 = -0.477;

/// Tolerance of the inner integral over the hour angle.
const INNER_TOL: f64 = 1e-13;

/// Coefficients `c_{2n}` over the even Legendre modes `p_0, p_2, ..., p_{2N}`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SpectralSeries {
    coeffs: Vec<f64>,
}

impl SpectralSeries {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    /// `c_{2n}`, zero past the stored modes.
    pub fn get(&self, n: usize) -> f64 {
        self.coeffs.get(n).copied().unwrap_or(0.0)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Highest stored mode index `N`.
    pub fn max_mode(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Keep modes `0..=n`, padding with zeros if needed.
    pub fn truncated(&self, n: usize) -> Self {
        Self::new((0..=n).map(|k| self.get(k)).collect())
    }

    pub fn eval(&self, y: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(n, c)| c * eval_even(EvenMode(n), y))
            .sum()
    }

    /// `sum_n c_{2n} p_{2n}(y)` in monomial form.
    pub fn to_poly(&self) -> MonomialPoly {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .fold(MonomialPoly::zero(), |acc, (n, &c)| {
                &acc + &legendre_poly(EvenMode(n)).scale(c)
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InsolationMode {
    ExactIntegral,
    Truncated(SpectralSeries),
}

#[derive(Debug, Clone, PartialEq)]
pub struct InsolationSpec {
    /// Obliquity in degrees, `0 <= beta < 90`.
    pub beta_deg: f64,
    pub mode: InsolationMode,
}

impl Default for InsolationSpec {
    fn default() -> Self {
        Self {
            beta_deg: DEFAULT_OBLIQUITY_DEG,
            mode: InsolationMode::ExactIntegral,
        }
    }
}

impl InsolationSpec {
    pub fn exact(beta_deg: f64) -> Result<Self> {
        let spec = Self {
            beta_deg,
            mode: InsolationMode::ExactIntegral,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..90.0).contains(&self.beta_deg) {
            return Err(invalid("obliquity must satisfy 0 <= beta < 90 degrees"));
        }
        if let InsolationMode::Truncated(s) = &self.mode {
            if s.get(0) <= 0.0 {
                return Err(invalid("truncated insolation needs s_0 > 0"));
            }
        }
        Ok(())
    }

    /// `s(y)` under this spec's mode.
    pub fn value(&self, y: f64) -> Result<f64> {
        match &self.mode {
            InsolationMode::ExactIntegral => s_exact(self, y),
            InsolationMode::Truncated(series) => Ok(series.eval(y)),
        }
    }
}

/// Annual-mean insolation at sine-latitude `y` from the hour-angle integral
/// `(2/pi^2) int_0^{2pi} sqrt(1 - (sqrt(1-y^2) sin(beta) cos(g) - y cos(beta))^2) dg`.
///
/// Always evaluates the integral for `spec.beta_deg`; a truncated mode on the
/// spec is ignored.
pub fn s_exact(spec: &InsolationSpec, y: f64) -> Result<f64> {
    let beta = spec.beta_deg.to_radians();
    let (sb, cb) = (math::sin(beta), math::cos(beta));
    let c = math::sqrt((1.0 - y * y).max(0.0));
    let integrand = |g: f64| {
        let x = c * sb * math::cos(g) - y * cb;
        math::sqrt((1.0 - x * x).max(0.0))
    };
    // The integrand is symmetric about g = pi.
    let half = Quadrature::new(INNER_TOL).integrate(integrand, 0.0, PI)?;
    Ok(2.0 / (PI * PI) * 2.0 * half)
}

/// `s_{2n} = (4n+1) int_0^1 s(y) p_{2n}(y) dy` for `n = 0..=max_mode`.
///
/// The outer integral is split at the polar circle `y = cos(beta)`, where
/// `s` has a slope discontinuity.
pub fn s_coefficients(spec: &InsolationSpec, max_mode: usize) -> Result<SpectralSeries> {
    spec.validate()?;
    if max_mode > MAX_MODE {
        return Err(invalid("requested insolation mode exceeds the supported maximum"));
    }
    let polar = math::cos(spec.beta_deg.to_radians());
    let quad = Quadrature::default();
    let mut coeffs = vec![0.0; max_mode + 1];
    for (n, slot) in coeffs.iter_mut().enumerate() {
        let p = legendre_poly(EvenMode(n));
        let mut failure = None;
        let integral = quad.integrate_split(
            |y| match s_exact(spec, y) {
                Ok(s) => s * p.eval(y),
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            },
            0.0,
            1.0,
            &[polar],
        )?;
        if let Some(e) = failure {
            return Err(e);
        }
        *slot = (4 * n + 1) as f64 * integral;
    }
    Ok(SpectralSeries::new(coeffs))
}

/// The two-term fit `s_0 = 1`, `s_2 = -0.477`.
pub fn s_quadratic() -> SpectralSeries {
    SpectralSeries::new(vec![1.0, QUADRATIC_S2])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_s_exact(beta_deg: f64, y: f64) -> f64 {
        // Independent midpoint rule on a fine grid over the full period.
        let beta = beta_deg.to_radians();
        let n = 200_000;
        let h = 2.0 * PI / n as f64;
        let c = (1.0 - y * y).sqrt();
        let sum: f64 = (0..n)
            .map(|i| {
                let g = (i as f64 + 0.5) * h;
                let x = c * beta.sin() * g.cos() - y * beta.cos();
                (1.0 - x * x).max(0.0).sqrt()
            })
            .sum();
        2.0 / (PI * PI) * sum * h
    }

    #[test]
    fn exact_matches_midpoint_oracle() {
        let spec = InsolationSpec::default();
        for &y in &[0.0, 0.3, 0.7, 0.9, 0.95, 1.0] {
            let got = s_exact(&spec, y).unwrap();
            let want = reference_s_exact(23.5, y);
            assert!((got - want).abs() < 1e-8, "y={y} got={got} want={want}");
        }
    }

    #[test]
    fn pole_and_equator_closed_forms() {
        let spec = InsolationSpec::default();
        let beta = 23.5f64.to_radians();
        // At the pole the integrand is constant sin(beta).
        let pole = 4.0 / PI * beta.sin();
        assert!((s_exact(&spec, 1.0).unwrap() - pole).abs() < 1e-12);
        // No tilt: s(y) = (4/pi) sqrt(1 - y^2).
        let flat = InsolationSpec::exact(0.0).unwrap();
        for &y in &[0.0f64, 0.5, 0.8] {
            let want = 4.0 / PI * (1.0 - y * y).sqrt();
            assert!((s_exact(&flat, y).unwrap() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn integrand_bounded_so_s_is_bounded() {
        // 0 <= integrand <= 1 gives 0 <= s <= 4/pi.
        let spec = InsolationSpec::exact(60.0).unwrap();
        for i in 0..=20 {
            let s = s_exact(&spec, i as f64 / 20.0).unwrap();
            assert!((0.0..=4.0 / PI + 1e-12).contains(&s));
        }
    }

    #[test]
    fn quadratic_series_values() {
        let s = s_quadratic();
        assert!((s.eval(0.0) - 1.2385).abs() < 1e-12);
        assert!((s.eval(1.0) - 0.523).abs() < 1e-12);
        assert!((s.to_poly().integrate(0.0, 1.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn leading_coefficients() {
        let s = s_coefficients(&InsolationSpec::default(), 2).unwrap();
        assert!((s.get(0) - 1.0).abs() < 1e-9, "s0 = {}", s.get(0));
        assert!((s.get(1) - QUADRATIC_S2).abs() <= 0.003, "s2 = {}", s.get(1));
        assert!((s.get(2) + 0.044).abs() <= 0.003, "s4 = {}", s.get(2));
    }

    #[test]
    fn higher_coefficients() {
        let s = s_coefficients(&InsolationSpec::default(), 5).unwrap();
        for (n, want) in [(3, 0.006), (4, 0.016), (5, 0.006)] {
            assert!((s.get(n) - want).abs() <= 0.004, "s{} = {}", 2 * n, s.get(n));
        }
        // Not monotone: s8 really is larger than s6.
        assert!(s.get(4) > s.get(3));
    }

    #[test]
    fn rejects_bad_obliquity() {
        assert!(InsolationSpec::exact(90.0).is_err());
        assert!(InsolationSpec::exact(-1.0).is_err());
        let bad = InsolationSpec {
            beta_deg: 23.5,
            mode: InsolationMode::Truncated(SpectralSeries::new(vec![0.0, 1.0])),
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn series_helpers() {
        let s = SpectralSeries::new(vec![1.0, -0.5]);
        assert_eq!(s.get(5), 0.0);
        assert_eq!(s.max_mode(), 1);
        assert_eq!(s.truncated(3).coeffs(), &[1.0, -0.5, 0.0, 0.0]);
        assert_eq!(s.truncated(0).coeffs(), &[1.0]);
    }
}
