//! Even Legendre polynomials `p_{2n}` on `[0, 1]`.
//!
//! Coefficients are generated by the three-term recurrence in exact rational
//! arithmetic and only converted to `f64` at the end, so the monomial
//! coefficients are correctly rounded for every supported mode.

use alloc::vec;
use alloc::vec::Vec;

use crate::poly::MonomialPoly;

/// Highest supported mode index. Monomial coefficients of `p_{2n}` grow like
/// `4^n`, so past this the cancellation in Horner evaluation on `[0, 1]`
/// becomes visible at double precision.
pub const MAX_MODE: usize = 16;

/// Index `n` of the even Legendre polynomial `p_{2n}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EvenMode(pub usize);

impl EvenMode {
    pub fn index(self) -> usize {
        self.0
    }

    /// Polynomial degree `2n`.
    pub fn degree(self) -> usize {
        2 * self.0
    }

    /// `2n(2n+1)`, the (negated) eigenvalue of `d/dy (1-y^2) d/dy`.
    pub fn diffusion_eigenvalue(self) -> f64 {
        let l = self.degree() as f64;
        l * (l + 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Ratio {
    num: i128,
    den: i128,
}

fn gcd(mut a: i128, mut b: i128) -> i128 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl Ratio {
    const ZERO: Ratio = Ratio { num: 0, den: 1 };
    const ONE: Ratio = Ratio { num: 1, den: 1 };

    fn new(num: i128, den: i128) -> Self {
        debug_assert!(den != 0);
        let g = gcd(num, den).max(1);
        let s = if den < 0 { -1 } else { 1 };
        Ratio {
            num: s * num / g,
            den: s * den / g,
        }
    }

    fn add(self, o: Ratio) -> Ratio {
        let g = gcd(self.den, o.den);
        let l = self.den / g * o.den;
        Ratio::new(self.num * (l / self.den) + o.num * (l / o.den), l)
    }

    fn mul_int(self, k: i128) -> Ratio {
        Ratio::new(self.num * k, self.den)
    }

    fn div_int(self, k: i128) -> Ratio {
        Ratio::new(self.num, self.den * k)
    }

    fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

/// Exact coefficients of the full Legendre polynomial `P_l` (all degrees).
fn legendre_exact(l: usize) -> Vec<Ratio> {
    let mut prev = vec![Ratio::ONE];
    if l == 0 {
        return prev;
    }
    let mut cur = vec![Ratio::ZERO, Ratio::ONE];
    for k in 1..l {
        // (k+1) P_{k+1} = (2k+1) y P_k - k P_{k-1}
        let mut next = vec![Ratio::ZERO; k + 2];
        for (i, c) in cur.iter().enumerate() {
            next[i + 1] = next[i + 1].add(c.mul_int(2 * k as i128 + 1));
        }
        for (i, c) in prev.iter().enumerate() {
            next[i] = next[i].add(c.mul_int(-(k as i128)));
        }
        for c in next.iter_mut() {
            *c = c.div_int(k as i128 + 1);
        }
        prev = cur;
        cur = next;
    }
    cur
}

/// `p_{2n}` in monomial form, normalised so that `p_{2n}(1) = 1`.
pub fn legendre_poly(mode: EvenMode) -> MonomialPoly {
    assert!(mode.0 <= MAX_MODE, "mode {} exceeds MAX_MODE", mode.0);
    MonomialPoly::new(legendre_exact(mode.degree()).into_iter().map(Ratio::to_f64).collect())
}

/// `P_{2n}(eta) = int_0^eta p_{2n}(y) dy`, built exactly before rounding.
pub fn legendre_antideriv(mode: EvenMode) -> MonomialPoly {
    assert!(mode.0 <= MAX_MODE, "mode {} exceeds MAX_MODE", mode.0);
    let exact = legendre_exact(mode.degree());
    let mut out = Vec::with_capacity(exact.len() + 1);
    out.push(0.0);
    out.extend(
        exact
            .iter()
            .enumerate()
            .map(|(k, c)| c.div_int(k as i128 + 1).to_f64()),
    );
    MonomialPoly::new(out)
}

/// `p_0, p_2, ..., p_{2N}`.
pub fn legendre_family(max_mode: usize) -> Vec<MonomialPoly> {
    (0..=max_mode).map(|n| legendre_poly(EvenMode(n))).collect()
}

/// `P_0, P_2, ..., P_{2N}`.
pub fn antideriv_family(max_mode: usize) -> Vec<MonomialPoly> {
    (0..=max_mode).map(|n| legendre_antideriv(EvenMode(n))).collect()
}

/// Direct evaluation of `p_{2n}(y)` by the recurrence, without building
/// coefficients. Used where only values are needed.
pub fn eval_even(mode: EvenMode, y: f64) -> f64 {
    let l = mode.degree();
    if l == 0 {
        return 1.0;
    }
    let (mut p0, mut p1) = (1.0, y);
    for k in 1..l {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * y * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    p1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::Quadrature;

    #[test]
    fn low_modes_match_closed_forms() {
        assert_eq!(legendre_poly(EvenMode(0)).coeffs(), &[1.0]);
        assert_eq!(legendre_poly(EvenMode(1)).coeffs(), &[-0.5, 0.0, 1.5]);
        // p_4 = (35y^4 - 30y^2 + 3)/8
        assert_eq!(
            legendre_poly(EvenMode(2)).coeffs(),
            &[3.0 / 8.0, 0.0, -30.0 / 8.0, 0.0, 35.0 / 8.0]
        );
        assert!((legendre_poly(EvenMode(2)).eval(1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn antiderivatives() {
        assert_eq!(legendre_antideriv(EvenMode(0)).coeffs(), &[0.0, 1.0]);
        assert_eq!(legendre_antideriv(EvenMode(1)).coeffs(), &[0.0, -0.5, 0.0, 0.5]);
        assert_eq!(legendre_antideriv(EvenMode(0)).eval(1.0), 1.0);
        for n in 1..=12 {
            let big_p = legendre_antideriv(EvenMode(n));
            assert!(big_p.eval(1.0).abs() < 1e-12, "P_{}(1) = {}", 2 * n, big_p.eval(1.0));
            assert_eq!(big_p.eval(0.0), 0.0);
            assert_eq!(big_p.derivative(), legendre_poly(EvenMode(n)));
        }
    }

    #[test]
    fn normalisation_and_parity() {
        for n in 0..=10 {
            let p = legendre_poly(EvenMode(n));
            assert!((p.eval(1.0) - 1.0).abs() < 1e-12, "n={n}");
            assert_eq!(p.degree(), Some(2 * n));
            for (k, c) in p.coeffs().iter().enumerate() {
                if k % 2 == 1 {
                    assert_eq!(*c, 0.0);
                }
            }
        }
    }

    #[test]
    fn zero_slope_at_equator() {
        for n in 0..=10 {
            assert_eq!(legendre_poly(EvenMode(n)).derivative().eval(0.0), 0.0);
        }
    }

    #[test]
    fn eigenfunctions_of_spherical_diffusion() {
        let one_minus_y2 = MonomialPoly::new(vec![1.0, 0.0, -1.0]);
        for n in 0..=6 {
            let p = legendre_poly(EvenMode(n));
            let lhs = (&one_minus_y2 * &p.derivative()).derivative();
            let lambda = EvenMode(n).diffusion_eigenvalue();
            for i in 1..=50 {
                let y = i as f64 / 51.0;
                let expected = -lambda * p.eval(y);
                let got = lhs.eval(y);
                let scale = expected.abs().max(1e-12);
                assert!(
                    (got - expected).abs() <= 1e-9 * scale.max(lambda),
                    "n={n} y={y} got={got} expected={expected}"
                );
            }
        }
    }

    #[test]
    fn orthogonality_on_half_interval() {
        let quad = Quadrature::new(1e-12);
        for m in 0..=6 {
            for n in 0..=6 {
                let pm = legendre_poly(EvenMode(m));
                let pn = legendre_poly(EvenMode(n));
                let v = quad.integrate(|y| pm.eval(y) * pn.eval(y), 0.0, 1.0).unwrap();
                let expected = if m == n { 1.0 / (4 * n + 1) as f64 } else { 0.0 };
                assert!((v - expected).abs() < 1e-9, "m={m} n={n} v={v}");
            }
        }
    }

    #[test]
    fn recurrence_value_matches_coefficients() {
        for n in 0..=10 {
            let p = legendre_poly(EvenMode(n));
            for i in 0..=20 {
                let y = i as f64 / 20.0;
                assert!((p.eval(y) - eval_even(EvenMode(n), y)).abs() < 1e-10);
            }
        }
    }
}
