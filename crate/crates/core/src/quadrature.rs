//! Adaptive Simpson quadrature.
//!
//! Integrands here are smooth or piecewise smooth with breakpoints known to
//! the caller, so a plain adaptive Simpson with Richardson correction is
//! enough. Callers split at breakpoints with [`Quadrature::integrate_split`].

use alloc::vec::Vec;

use crate::{Error, Result};

/// Default absolute tolerance.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Default cap on the number of subintervals examined.
pub const DEFAULT_BUDGET: usize = 1 << 20;

const INITIAL_PANELS: usize = 16;
const MIN_WIDTH: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub tol: f64,
    pub max_intervals: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_intervals: DEFAULT_BUDGET,
        }
    }
}

struct Panel {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

impl Quadrature {
    pub fn new(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }

    pub fn with_budget(mut self, max_intervals: usize) -> Self {
        self.max_intervals = max_intervals;
        self
    }

    /// `int_a^b f`. Deterministic for a given tolerance and budget.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> Result<f64> {
        if a == b {
            return Ok(0.0);
        }
        if a > b {
            return self.integrate(f, b, a).map(|v| -v);
        }

        let h = (b - a) / INITIAL_PANELS as f64;
        let mut stack: Vec<Panel> = Vec::with_capacity(64);
        // Push in reverse so the left-most panel is processed first; the
        // summation order is then fixed by the tolerance alone.
        let mut f_right = f(b);
        for i in (0..INITIAL_PANELS).rev() {
            let pa = a + h * i as f64;
            let pb = if i + 1 == INITIAL_PANELS { b } else { a + h * (i + 1) as f64 };
            let fa = f(pa);
            let fm = f(0.5 * (pa + pb));
            stack.push(Panel {
                a: pa,
                b: pb,
                fa,
                fm,
                fb: f_right,
                whole: simpson(pa, pb, fa, fm, f_right),
                tol: self.tol / INITIAL_PANELS as f64,
            });
            f_right = fa;
        }

        let mut total = 0.0;
        let mut examined = 0usize;
        while let Some(p) = stack.pop() {
            examined += 1;
            if examined > self.max_intervals {
                let pending: f64 = stack.iter().map(|q| q.whole).sum();
                return Err(Error::NonConvergence {
                    intervals: examined,
                    estimate: total + p.whole + pending,
                });
            }
            let m = 0.5 * (p.a + p.b);
            let lm = 0.5 * (p.a + m);
            let rm = 0.5 * (m + p.b);
            let flm = f(lm);
            let frm = f(rm);
            let left = simpson(p.a, m, p.fa, flm, p.fm);
            let right = simpson(m, p.b, p.fm, frm, p.fb);
            let delta = left + right - p.whole;
            if delta.abs() <= 15.0 * p.tol || (p.b - p.a) < MIN_WIDTH {
                total += left + right + delta / 15.0;
                continue;
            }
            let tol = 0.5 * p.tol;
            stack.push(Panel {
                a: m,
                b: p.b,
                fa: p.fm,
                fm: frm,
                fb: p.fb,
                whole: right,
                tol,
            });
            stack.push(Panel {
                a: p.a,
                b: m,
                fa: p.fa,
                fm: flm,
                fb: p.fm,
                whole: left,
                tol,
            });
        }
        Ok(total)
    }

    /// Integrate over `[a, b]`, splitting at every breakpoint strictly inside.
    /// The tolerance is shared out in proportion to sub-interval length.
    pub fn integrate_split<F: FnMut(f64) -> f64>(
        &self,
        mut f: F,
        a: f64,
        b: f64,
        breakpoints: &[f64],
    ) -> Result<f64> {
        let mut cuts: Vec<f64> = breakpoints
            .iter()
            .copied()
            .filter(|&x| x > a && x < b)
            .collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut edges = Vec::with_capacity(cuts.len() + 2);
        edges.push(a);
        edges.extend(cuts);
        edges.push(b);
        let width = b - a;
        let mut total = 0.0;
        for w in edges.windows(2) {
            let part = Quadrature {
                tol: self.tol * (w[1] - w[0]) / width,
                max_intervals: self.max_intervals,
            };
            total += part.integrate(&mut f, w[0], w[1])?;
        }
        Ok(total)
    }
}

/// `int_a^b f` with the default tolerance and budget.
pub fn quadrature<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    Quadrature::new(tol).integrate(f, a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::legendre::{legendre_poly, EvenMode};

    #[test]
    fn constant_and_polynomials() {
        let tol = 1e-10;
        assert!((quadrature(|_| 1.0, 0.0, 1.0, tol).unwrap() - 1.0).abs() <= tol);
        let p2 = legendre_poly(EvenMode(1));
        let p4 = legendre_poly(EvenMode(2));
        let v = quadrature(|y| p2.eval(y) * p2.eval(y), 0.0, 1.0, tol).unwrap();
        assert!((v - 0.2).abs() <= tol);
        let v = quadrature(|y| p2.eval(y) * p4.eval(y), 0.0, 1.0, tol).unwrap();
        assert!(v.abs() <= tol);
    }

    #[test]
    fn reversed_and_empty_intervals() {
        let q = Quadrature::default();
        assert_eq!(q.integrate(|x| x, 1.0, 1.0).unwrap(), 0.0);
        let v = q.integrate(|x| x * x, 1.0, 0.0).unwrap();
        assert!((v + 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn split_handles_jumps() {
        let q = Quadrature::new(1e-11);
        let step = |y: f64| if y < 0.3 { 1.0 } else { 2.0 };
        let v = q.integrate_split(step, 0.0, 1.0, &[0.3]).unwrap();
        assert!((v - (0.3 + 1.4)).abs() < 1e-11);
    }

    #[test]
    fn sqrt_cusp_converges() {
        let q = Quadrature::new(1e-10);
        let v = q.integrate(|x| x.abs().sqrt(), -1.0, 1.0).unwrap();
        assert!((v - 4.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let q = Quadrature::new(1e-14).with_budget(20);
        let err = q.integrate(|x| (50.0 * x).sin(), 0.0, 10.0).unwrap_err();
        assert!(matches!(err, Error::NonConvergence { .. }));
    }

    #[test]
    fn deterministic() {
        let q = Quadrature::new(1e-9);
        let f = |x: f64| (3.0 * x).cos() * x.exp();
        assert_eq!(q.integrate(f, 0.0, 2.0).unwrap(), q.integrate(f, 0.0, 2.0).unwrap());
    }
}
