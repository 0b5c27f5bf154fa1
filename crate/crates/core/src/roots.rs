//! Scalar root finding: sign scans, bisection and safeguarded Newton.

use alloc::vec::Vec;

use crate::poly::MonomialPoly;
use crate::{Error, Result};

/// Sub-intervals `[a, b]` of an `n`-cell uniform grid on `[lo, hi]` where `f`
/// changes sign or vanishes at the left node. The last node is checked too.
pub fn sign_changes<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, cells: usize) -> Vec<(f64, f64)> {
    let cells = cells.max(1);
    let width = (hi - lo) / cells as f64;
    let node = |i: usize| if i == cells { hi } else { lo + width * i as f64 };
    let mut out = Vec::new();
    let mut x0 = lo;
    let mut f0 = f(lo);
    for i in 1..=cells {
        let x1 = node(i);
        let f1 = f(x1);
        if f0 == 0.0 {
            out.push((x0, x0));
        } else if f0.signum() != f1.signum() && f1 != 0.0 {
            out.push((x0, x1));
        }
        x0 = x1;
        f0 = f1;
    }
    if f0 == 0.0 {
        out.push((hi, hi));
    }
    out
}

/// Bisection on a bracket with a sign change, down to width `xtol`.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, xtol: f64) -> Result<f64> {
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NoSolution(alloc::format!(
            "no sign change on [{a}, {b}]"
        )));
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (b - a).abs() <= xtol || m == a || m == b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Root of `p` in a sign-change bracket `[a, b]`, polished to the limit of
/// double precision. Newton steps are taken while they stay inside the
/// shrinking bracket, bisection otherwise.
pub fn polish_poly_root(p: &MonomialPoly, mut a: f64, mut b: f64) -> f64 {
    let mut fa = p.eval(a);
    if fa == 0.0 {
        return a;
    }
    let fb = p.eval(b);
    if fb == 0.0 {
        return b;
    }
    debug_assert!(fa.signum() != fb.signum(), "bracket without sign change");
    let mut x = 0.5 * (a + b);
    for _ in 0..200 {
        let (fx, dfx) = p.eval_with_derivative(x);
        if fx == 0.0 {
            return x;
        }
        if fx.signum() == fa.signum() {
            a = x;
            fa = fx;
        } else {
            b = x;
        }
        let newton = x - fx / dfx;
        let next = if dfx != 0.0 && newton > a && newton < b {
            newton
        } else {
            0.5 * (a + b)
        };
        if next == x || (b - a) <= 4.0 * f64::EPSILON * x.abs().max(1e-300) {
            break;
        }
        x = next;
    }
    // Return whichever candidate has the smallest residual.
    [x, a, b]
        .into_iter()
        .min_by(|u, v| p.eval(*u).abs().total_cmp(&p.eval(*v).abs()))
        .unwrap()
}

/// All roots of `p` on `[lo, hi]` located by a sign scan of `cells` cells.
/// Roots of even multiplicity that do not change sign are not detected.
pub fn poly_roots_in(p: &MonomialPoly, lo: f64, hi: f64, cells: usize) -> Vec<f64> {
    let mut roots: Vec<f64> = sign_changes(|x| p.eval(x), lo, hi, cells)
        .into_iter()
        .map(|(a, b)| polish_poly_root(p, a, b))
        .collect();
    roots.dedup_by(|x, y| (*x - *y).abs() < 1e-12);
    roots
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn cubic_roots() {
        // (x - 0.2)(x - 0.5)(x - 0.9)
        let p = &(&MonomialPoly::linear(-0.2, 1.0) * &MonomialPoly::linear(-0.5, 1.0))
            * &MonomialPoly::linear(-0.9, 1.0);
        let r = poly_roots_in(&p, 0.0, 1.0, 1000);
        assert_eq!(r.len(), 3);
        for (got, want) in r.iter().zip([0.2, 0.5, 0.9]) {
            assert!((got - want).abs() < 1e-14);
            assert!(p.eval(*got).abs() < 1e-15);
        }
    }

    #[test]
    fn root_on_grid_node_found_once() {
        let p = MonomialPoly::linear(-0.5, 1.0);
        assert_eq!(poly_roots_in(&p, 0.0, 1.0, 10), vec![0.5]);
        let end = MonomialPoly::linear(-1.0, 1.0);
        assert_eq!(poly_roots_in(&end, 0.0, 1.0, 10), vec![1.0]);
    }

    #[test]
    fn bisect_reports_missing_bracket() {
        assert!(bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-12).is_err());
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-13).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn touching_root_is_missed() {
        let p = MonomialPoly::new(vec![0.09, -0.6, 1.0]);
        assert!(poly_roots_in(&p, 0.0, 1.0, 7).is_empty());
    }
}
