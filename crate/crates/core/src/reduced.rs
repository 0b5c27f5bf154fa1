//! The slow flow `eta' = eps * h(eta)` on the critical manifold.
//!
//! `h` is the ice-line temperature minus the critical temperature once every
//! temperature mode sits at its equilibrium for frozen `eta`. It is assembled
//! exactly as a polynomial. With the Jormungand albedo it is a pair: `h-` on
//! `[0, rho)` and `h+` on `[rho, 1]`.

use alloc::vec::Vec;

use crate::math;
use crate::error::invalid;
use crate::legendre::EvenMode;
use crate::model::{Model, ModelParams, Side, Transport, Variant};
use crate::poly::MonomialPoly;
use crate::roots::{bisect, poly_roots_in, sign_changes};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ReducedPoly {
    variant: Variant,
    modes: usize,
    /// `h` for the smooth variants, `h+` otherwise.
    plus: MonomialPoly,
    minus: Option<MonomialPoly>,
    rho: Option<f64>,
}

impl ReducedPoly {
    /// A single smooth `h` on `[0, 1]`.
    pub fn smooth(variant: Variant, modes: usize, h: MonomialPoly) -> Self {
        Self {
            variant,
            modes,
            plus: h,
            minus: None,
            rho: None,
        }
    }

    /// `h-` on `[0, rho)` glued to `h+` on `[rho, 1]`.
    pub fn switched(variant: Variant, modes: usize, minus: MonomialPoly, plus: MonomialPoly, rho: f64) -> Self {
        Self {
            variant,
            modes,
            plus,
            minus: Some(minus),
            rho: Some(rho),
        }
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn rho(&self) -> Option<f64> {
        self.rho
    }

    pub fn is_switched(&self) -> bool {
        self.minus.is_some()
    }

    /// The single polynomial of a smooth variant.
    pub fn h(&self) -> Option<&MonomialPoly> {
        if self.is_switched() {
            None
        } else {
            Some(&self.plus)
        }
    }

    pub fn minus(&self) -> Option<&MonomialPoly> {
        self.minus.as_ref()
    }

    pub fn plus(&self) -> &MonomialPoly {
        &self.plus
    }

    /// Branch polynomial; smooth variants return `h` for both sides.
    pub fn piece(&self, side: Side) -> &MonomialPoly {
        match (side, &self.minus) {
            (Side::Equatorward, Some(m)) => m,
            _ => &self.plus,
        }
    }

    pub fn side_of(&self, eta: f64) -> Side {
        match self.rho {
            Some(rho) if eta < rho => Side::Equatorward,
            _ => Side::Poleward,
        }
    }

    /// Glued value; `eta == rho` takes `h+`.
    pub fn eval(&self, eta: f64) -> f64 {
        self.piece(self.side_of(eta)).eval(eta)
    }

    pub fn slope(&self, eta: f64) -> f64 {
        self.piece(self.side_of(eta)).eval_with_derivative(eta).1
    }

    /// Largest degree over the pieces.
    pub fn degree(&self) -> Option<usize> {
        let d = self.plus.degree();
        match &self.minus {
            Some(m) => d.max(m.degree()),
            None => d,
        }
    }

    /// Set-valued velocity at `eta = rho`.
    pub fn filippov(&self) -> Option<FilippovValue> {
        let rho = self.rho?;
        let minus = self.minus.as_ref()?.eval(rho);
        let plus = self.plus.eval(rho);
        Some(FilippovValue {
            rho,
            minus,
            plus,
            lower: minus.min(plus),
            upper: minus.max(plus),
        })
    }
}

/// Convex hull of the one-sided velocities at the switching latitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilippovValue {
    pub rho: f64,
    pub minus: f64,
    pub plus: f64,
    pub lower: f64,
    pub upper: f64,
}

impl FilippovValue {
    pub fn contains_zero(&self) -> bool {
        self.lower <= 0.0 && 0.0 <= self.upper
    }

    /// Both sides push into `rho`.
    pub fn is_attracting_sliding(&self) -> bool {
        self.minus > 0.0 && self.plus < 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stability {
    Stable,
    Unstable,
    /// Pinned at `rho` by opposing one-sided flows.
    SlidingAtRho,
    /// `h(0) < 0`: the ice line runs into the equator.
    BoundarySnowball,
    /// `h(1) > 0`: the ice line runs off the pole.
    BoundaryIceFree,
    /// `|h'|` too small to classify.
    Degenerate,
}

impl Stability {
    pub fn as_str(self) -> &'static str {
        match self {
            Stability::Stable => "stable",
            Stability::Unstable => "unstable",
            Stability::SlidingAtRho => "sliding",
            Stability::BoundarySnowball => "snowball",
            Stability::BoundaryIceFree => "icefree",
            Stability::Degenerate => "degenerate",
        }
    }

    /// Interior roots of `h`, as opposed to boundary or sliding states.
    pub fn is_interior(self) -> bool {
        matches!(self, Stability::Stable | Stability::Unstable | Stability::Degenerate)
    }

    /// Locally attracting for the reduced flow.
    pub fn is_attracting(self) -> bool {
        matches!(
            self,
            Stability::Stable | Stability::SlidingAtRho | Stability::BoundarySnowball | Stability::BoundaryIceFree
        )
    }
}

/// A rest state of the reduced flow without temperatures attached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedRoot {
    pub eta: f64,
    pub stability: Stability,
    /// `h'(eta)` on the active branch; the one-sided values' difference for
    /// sliding states and `h` itself for boundary states.
    pub slope: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Equilibrium {
    pub eta_star: f64,
    pub stability: Stability,
    pub slope: f64,
    /// Temperature variables of the critical manifold at `eta_star`, in the
    /// model's state layout without the trailing ice line.
    pub temp_coeffs: Vec<f64>,
    pub global_mean: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootOptions {
    /// Cells in the sign scan of each piece.
    pub cells: usize,
    /// Roots with `|h'|` below this are reported as degenerate.
    pub degenerate_slope: f64,
}

impl Default for RootOptions {
    fn default() -> Self {
        Self {
            cells: 10_000,
            degenerate_slope: 1e-8,
        }
    }
}

/// Assemble `h` (or `h-`, `h+`) exactly.
pub fn build_h(model: &Model) -> ReducedPoly {
    let variant = model.variant();
    let n = model.modes();
    let tc = MonomialPoly::constant(model.params().critical_temp);
    match variant {
        Variant::DiffusiveBudyko | Variant::DiffusiveJormungand => {
            let assemble = |side: Side| -> MonomialPoly {
                let f = model.slow_manifold_polys(side).unwrap();
                let sum = f
                    .iter()
                    .zip(model.legendre())
                    .fold(MonomialPoly::zero(), |acc, (fk, pk)| &acc + &(fk * pk));
                &sum - &tc
            };
            match model.rho() {
                Some(rho) => ReducedPoly::switched(variant, n, assemble(Side::Equatorward), assemble(Side::Poleward), rho),
                None => ReducedPoly::smooth(variant, n, assemble(Side::Poleward)),
            }
        }
        Variant::RelaxBudyko => {
            let h = relax_poleward_h(model);
            ReducedPoly::smooth(variant, n, h)
        }
        Variant::RelaxJormungand => {
            let rho = model.rho().unwrap();
            ReducedPoly::switched(variant, n, relax_equatorward_h(model), relax_poleward_h(model), rho)
        }
    }
}

fn mean_albedo_offset(model: &Model) -> f64 {
    // Zero-mode albedo weight: alpha0 for two zones, gamma1 for three.
    let pr = model.params();
    let a0 = 0.5 * (pr.albedo.alpha1() + pr.albedo.alpha2());
    match pr.albedo {
        crate::albedo::AlbedoSpec::Budyko { .. } => a0,
        crate::albedo::AlbedoSpec::Jormungand { alpha_i, .. } => 0.5 * (a0 + alpha_i),
    }
}

/// Slow-manifold value of the mean variable: `(Q s0 (1 - a) - A + C g) / B`.
fn mean_variable(model: &Model, g: &MonomialPoly) -> MonomialPoly {
    let pr = model.params();
    let Transport::RelaxToMean { coupling } = pr.transport else {
        unreachable!()
    };
    let forcing = pr.solar_mean * pr.insolation.get(0) * (1.0 - mean_albedo_offset(model)) - pr.olr_offset;
    (&MonomialPoly::constant(forcing) + &g.scale(coupling)).scale(1.0 / pr.olr_slope)
}

/// `h` for two zones: the relaxation Budyko `h`, or `h+` for Jormungand.
fn relax_poleward_h(model: &Model) -> MonomialPoly {
    let pr = model.params();
    let (_, z1, z2) = model.relax_constants().unwrap();
    let (t, _, w) = model.relax_mode_equilibria().unwrap();
    let p = model.legendre();
    let big_p = model.legendre_antiderivs();
    let shift = if model.variant() == Variant::RelaxJormungand { 0.5 * z2 } else { 0.0 };
    // Tbar minus the mean variable.
    let mut g = &MonomialPoly::linear(-0.5 * z1, z1) + &MonomialPoly::constant(shift);
    let mut ice = MonomialPoly::constant(shift - pr.critical_temp);
    for k in 1..=model.modes() {
        g = &g + &big_p[k].scale(t[k - 1] - w[k - 1]);
        ice = &ice + &p[k].scale(0.5 * (t[k - 1] + w[k - 1]));
    }
    &mean_variable(model, &g) + &ice
}

/// `h-` of relaxation Jormungand.
fn relax_equatorward_h(model: &Model) -> MonomialPoly {
    let pr = model.params();
    let rho = model.rho().unwrap();
    let (_, z1, z2) = model.relax_constants().unwrap();
    let (t, v, w) = model.relax_mode_equilibria().unwrap();
    let p = model.legendre();
    let big_p = model.legendre_antiderivs();
    let mut g = &MonomialPoly::linear(0.5 * z1 * (rho - 1.0), 0.5 * z1) + &MonomialPoly::linear(z2 * (0.5 - rho), z2);
    let mut ice = MonomialPoly::constant(0.25 * z1 - pr.critical_temp);
    for k in 1..=model.modes() {
        g = &g + &big_p[k].scale(t[k - 1] - v[k - 1]);
        g = &g + &MonomialPoly::constant((v[k - 1] - w[k - 1]) * big_p[k].eval(rho));
        ice = &ice + &p[k].scale(0.5 * (t[k - 1] + v[k - 1]));
    }
    &mean_variable(model, &g) + &ice
}

fn classify(slope: f64, opts: &RootOptions) -> Stability {
    if slope.abs() < opts.degenerate_slope {
        Stability::Degenerate
    } else if slope < 0.0 {
        Stability::Stable
    } else {
        Stability::Unstable
    }
}

/// Every rest state of the reduced flow on `[0, 1]`, sorted by `eta`.
///
/// Interior roots come from a sign scan and a polished bracket. Boundary
/// states are reported where the flow at an end point leaves the domain, and
/// a sliding state at `rho` where both one-sided flows of a discontinuous `h`
/// point into it.
pub fn find_roots(h: &ReducedPoly, opts: &RootOptions) -> Vec<ReducedRoot> {
    let mut out = Vec::new();
    let mut push_roots = |poly: &MonomialPoly, lo: f64, hi: f64, keep: &dyn Fn(f64) -> bool| {
        for eta in poly_roots_in(poly, lo, hi, opts.cells) {
            if keep(eta) {
                let slope = poly.eval_with_derivative(eta).1;
                out.push(ReducedRoot {
                    eta,
                    stability: classify(slope, opts),
                    slope,
                });
            }
        }
    };
    match (h.minus(), h.rho()) {
        (Some(minus), Some(rho)) => {
            push_roots(minus, 0.0, rho, &|x| x < rho);
            push_roots(h.plus(), rho, 1.0, &|x| x >= rho);
        }
        _ => push_roots(h.plus(), 0.0, 1.0, &|_| true),
    }

    if h.eval(0.0) < 0.0 {
        out.push(ReducedRoot {
            eta: 0.0,
            stability: Stability::BoundarySnowball,
            slope: h.eval(0.0),
        });
    }
    if h.eval(1.0) > 0.0 {
        out.push(ReducedRoot {
            eta: 1.0,
            stability: Stability::BoundaryIceFree,
            slope: h.eval(1.0),
        });
    }
    if h.variant().is_discontinuous() {
        if let Some(fv) = h.filippov() {
            if fv.is_attracting_sliding() {
                out.push(ReducedRoot {
                    eta: fv.rho,
                    stability: Stability::SlidingAtRho,
                    slope: fv.plus - fv.minus,
                });
            }
        }
    }
    out.sort_by(|a, b| a.eta.total_cmp(&b.eta));
    out
}

/// Rest states with their critical-manifold temperatures.
pub fn find_equilibria(model: &Model, h: &ReducedPoly, opts: &RootOptions) -> Vec<Equilibrium> {
    find_roots(h, opts)
        .into_iter()
        .map(|r| {
            let state = model.slow_manifold_state(r.eta);
            Equilibrium {
                eta_star: r.eta,
                stability: r.stability,
                slope: r.slope,
                global_mean: model.global_mean(&state),
                temp_coeffs: state.temperatures().to_vec(),
            }
        })
        .collect()
}

/// Convenience: build `h` and find its equilibria.
pub fn equilibria(model: &Model) -> Vec<Equilibrium> {
    find_equilibria(model, &build_h(model), &RootOptions::default())
}

/// Temperature variables on the critical manifold at `eta`.
pub fn slow_manifold_temps(model: &Model, eta: f64) -> Vec<f64> {
    model.slow_manifold_state(eta).temperatures().to_vec()
}

const D_RANGE: (f64, f64) = (1e-3, 10.0);
const D_SCAN: usize = 400;

/// Diffusivity `D` in `(1e-3, 10)` placing a root of the diffusive Budyko
/// `h` at `eta_target`.
///
/// `h(eta_target; D) = sum_n c_n / (B + 2n(2n+1) D) - T_c` with `c_n`
/// independent of `D`, so the sweep in `D` needs no model rebuilds.
pub fn solve_diffusivity_for_target(params: &ModelParams, eta_target: f64) -> Result<f64> {
    if !matches!(Variant::of(params), Variant::DiffusiveBudyko) {
        return Err(invalid("diffusivity calibration needs diffusive transport with Budyko albedo"));
    }
    if !(0.0..=1.0).contains(&eta_target) {
        return Err(invalid("target ice line must lie in [0, 1]"));
    }
    let model = Model::new(params.clone())?;
    let pr = model.params();
    let eta = eta_target;
    let weights: Vec<f64> = model
        .moments()
        .poleward
        .iter()
        .enumerate()
        .map(|(k, abar)| {
            let mut c = pr.solar_mean * (pr.insolation.get(k) - abar.eval(eta));
            if k == 0 {
                c -= pr.olr_offset;
            }
            c * model.legendre()[k].eval(eta)
        })
        .collect();
    let b = pr.olr_slope;
    let tc = pr.critical_temp;
    let h_of = |d: f64| -> f64 {
        weights
            .iter()
            .enumerate()
            .map(|(k, c)| c / (b + EvenMode(k).diffusion_eigenvalue() * d))
            .sum::<f64>()
            - tc
    };
    let dh_dd = |d: f64| -> f64 {
        -weights
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| {
                let lam = EvenMode(k).diffusion_eigenvalue();
                {
                    let denom = b + lam * d;
                    c * lam / (denom * denom)
                }
            })
            .sum::<f64>()
    };

    let scale = weights.iter().fold(tc.abs(), |m, c| m.max(c.abs() / b)).max(1.0);
    if weights[1..].iter().all(|c| c.abs() <= 1e-12 * scale) {
        // h does not depend on D at this ice line.
        let residual = h_of(1.0);
        if residual.abs() <= 1e-10 * scale {
            return Err(Error::DegenerateRoot { eta, slope: 0.0 });
        }
        return Err(Error::NoSolution(alloc::format!(
            "h({eta}) = {residual} for every D"
        )));
    }

    let (lo, hi) = (math::ln(D_RANGE.0), math::ln(D_RANGE.1));
    let bracket = sign_changes(|x| h_of(math::exp(x)), lo, hi, D_SCAN)
        .into_iter()
        .next()
        .ok_or_else(|| Error::NoSolution(alloc::format!("h({eta}; D) keeps its sign for D in (1e-3, 10)")))?;
    let x = bisect(|x| h_of(math::exp(x)), bracket.0, bracket.1, 1e-15)?;
    let d = math::exp(x);
    let slope = dh_dd(d);
    if slope.abs() < 1e-8 {
        return Err(Error::DegenerateRoot { eta, slope });
    }
    Ok(d)
}
