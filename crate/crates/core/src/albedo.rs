//! Piecewise-constant albedos and their Legendre moments.
//!
//! For an ice line at `eta` the projected albedo moment is
//! `abar_{2n}(eta) = (4n+1) int_0^1 alpha(y, eta) s(y) p_{2n}(y) dy`.
//! With a polynomial `s`, each moment is an exact polynomial in `eta`, built
//! here from `q_{2n} = s p_{2n}` and its antiderivative.

use alloc::vec::Vec;

use crate::error::invalid;
use crate::insolation::SpectralSeries;
use crate::legendre::{legendre_poly, EvenMode};
use crate::poly::MonomialPoly;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlbedoSpec {
    /// Open surface `alpha1` equatorward of the ice line, ice `alpha2` poleward.
    Budyko { alpha1: f64, alpha2: f64 },
    /// Adds a bare-ice band with albedo `alpha_i` between the ice line and
    /// `rho` while the ice line sits equatorward of `rho`.
    Jormungand {
        alpha1: f64,
        alpha_i: f64,
        alpha2: f64,
        rho: f64,
    },
}

impl AlbedoSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            AlbedoSpec::Budyko { alpha1, alpha2 } => {
                if !(0.0 < alpha1 && alpha1 < alpha2 && alpha2 < 1.0) {
                    return Err(invalid("Budyko albedo needs 0 < alpha1 < alpha2 < 1"));
                }
            }
            AlbedoSpec::Jormungand {
                alpha1,
                alpha_i,
                alpha2,
                rho,
            } => {
                if !(0.0 < alpha1 && alpha1 <= alpha_i && alpha_i <= alpha2 && alpha1 < alpha2 && alpha2 < 1.0) {
                    return Err(invalid(
                        "Jormungand albedo needs 0 < alpha1 <= alpha_i <= alpha2 < 1 with alpha1 < alpha2",
                    ));
                }
                if !(0.0 < rho && rho < 1.0) {
                    return Err(invalid("bare-ice latitude rho must lie in (0, 1)"));
                }
            }
        }
        Ok(())
    }

    pub fn alpha1(&self) -> f64 {
        match *self {
            AlbedoSpec::Budyko { alpha1, .. } | AlbedoSpec::Jormungand { alpha1, .. } => alpha1,
        }
    }

    pub fn alpha2(&self) -> f64 {
        match *self {
            AlbedoSpec::Budyko { alpha2, .. } | AlbedoSpec::Jormungand { alpha2, .. } => alpha2,
        }
    }

    /// Switching latitude, if any.
    pub fn rho(&self) -> Option<f64> {
        match *self {
            AlbedoSpec::Budyko { .. } => None,
            AlbedoSpec::Jormungand { rho, .. } => Some(rho),
        }
    }

    pub fn is_jormungand(&self) -> bool {
        matches!(self, AlbedoSpec::Jormungand { .. })
    }

    /// The two-zone albedo used when the ice line is poleward of `rho`.
    pub fn poleward_budyko(&self) -> AlbedoSpec {
        AlbedoSpec::Budyko {
            alpha1: self.alpha1(),
            alpha2: self.alpha2(),
        }
    }
}

fn midpoint(a: f64, b: f64) -> f64 {
    0.5 * (a + b)
}

/// `alpha(y, eta)`. At a jump the two one-sided values are averaged.
pub fn pointwise_albedo(spec: &AlbedoSpec, y: f64, eta: f64) -> f64 {
    match *spec {
        AlbedoSpec::Budyko { alpha1, alpha2 } => two_zone(alpha1, alpha2, y, eta),
        AlbedoSpec::Jormungand {
            alpha1,
            alpha_i,
            alpha2,
            rho,
        } => {
            if eta >= rho {
                return two_zone(alpha1, alpha2, y, eta);
            }
            if y < eta {
                alpha1
            } else if y == eta {
                midpoint(alpha1, alpha_i)
            } else if y < rho {
                alpha_i
            } else if y == rho {
                midpoint(alpha_i, alpha2)
            } else {
                alpha2
            }
        }
    }
}

fn two_zone(alpha1: f64, alpha2: f64, y: f64, eta: f64) -> f64 {
    if y < eta {
        alpha1
    } else if y > eta {
        alpha2
    } else {
        midpoint(alpha1, alpha2)
    }
}

/// Moment polynomials for modes `0..=N`.
///
/// `poleward` holds the two-zone moments (the Budyko moments, or the
/// Jormungand moments for `eta >= rho`); `equatorward` holds the three-zone
/// Jormungand moments valid for `eta < rho`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlbedoMoments {
    pub poleward: Vec<MonomialPoly>,
    pub equatorward: Option<Vec<MonomialPoly>>,
    pub rho: Option<f64>,
}

impl AlbedoMoments {
    /// The moment family that applies at ice line `eta` (`eta == rho` uses
    /// the poleward family).
    pub fn active(&self, eta: f64) -> &[MonomialPoly] {
        match (&self.equatorward, self.rho) {
            (Some(eq), Some(rho)) if eta < rho => eq,
            _ => &self.poleward,
        }
    }

    pub fn modes(&self) -> usize {
        self.poleward.len().saturating_sub(1)
    }
}

/// `int_0^eta q_{2n}(y) dy` as a polynomial in `eta`, for `n = 0..=N`.
fn q_integrals(s: &SpectralSeries, max_mode: usize) -> Vec<MonomialPoly> {
    let s_poly = s.to_poly();
    (0..=max_mode)
        .map(|n| (&s_poly * &legendre_poly(EvenMode(n))).antiderivative())
        .collect()
}

fn two_zone_moments(alpha1: f64, alpha2: f64, s: &SpectralSeries, q_int: &[MonomialPoly]) -> Vec<MonomialPoly> {
    q_int
        .iter()
        .enumerate()
        .map(|(n, qn)| {
            let weight = (4 * n + 1) as f64;
            &MonomialPoly::constant(alpha2 * s.get(n)) - &qn.scale(weight * (alpha2 - alpha1))
        })
        .collect()
}

/// `abar_{2n}(eta) = alpha2 s_{2n} - (4n+1)(alpha2 - alpha1) int_0^eta q_{2n}`.
pub fn budyko_moments(spec: &AlbedoSpec, s: &SpectralSeries, max_mode: usize) -> Result<AlbedoMoments> {
    spec.validate()?;
    let AlbedoSpec::Budyko { alpha1, alpha2 } = *spec else {
        return Err(invalid("budyko_moments needs a Budyko albedo"));
    };
    let q_int = q_integrals(s, max_mode);
    Ok(AlbedoMoments {
        poleward: two_zone_moments(alpha1, alpha2, s, &q_int),
        equatorward: None,
        rho: None,
    })
}

/// Both Jormungand families. The equatorward moments are
/// `alpha2 s_{2n} - (4n+1)[(alpha2 - alpha_i) int_eta^rho q + (alpha2 - alpha1) int_0^eta q]`.
pub fn jormungand_moments(spec: &AlbedoSpec, s: &SpectralSeries, max_mode: usize) -> Result<AlbedoMoments> {
    spec.validate()?;
    let AlbedoSpec::Jormungand {
        alpha1,
        alpha_i,
        alpha2,
        rho,
    } = *spec
    else {
        return Err(invalid("jormungand_moments needs a Jormungand albedo"));
    };
    let q_int = q_integrals(s, max_mode);
    let poleward = two_zone_moments(alpha1, alpha2, s, &q_int);
    let equatorward = q_int
        .iter()
        .enumerate()
        .map(|(n, qn)| {
            let weight = (4 * n + 1) as f64;
            // int_eta^rho q = Q(rho) - Q(eta), regrouped so the eta-dependence
            // carries (alpha_i - alpha1).
            let constant = alpha2 * s.get(n) - weight * (alpha2 - alpha_i) * qn.eval(rho);
            &MonomialPoly::constant(constant) - &qn.scale(weight * (alpha_i - alpha1))
        })
        .collect();
    Ok(AlbedoMoments {
        poleward,
        equatorward: Some(equatorward),
        rho: Some(rho),
    })
}

/// Moments for either albedo kind.
pub fn moments(spec: &AlbedoSpec, s: &SpectralSeries, max_mode: usize) -> Result<AlbedoMoments> {
    match spec {
        AlbedoSpec::Budyko { .. } => budyko_moments(spec, s, max_mode),
        AlbedoSpec::Jormungand { .. } => jormungand_moments(spec, s, max_mode),
    }
}
