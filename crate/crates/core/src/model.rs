//! Finite-dimensional ODE systems for the coupled temperature / ice-line model.
//!
//! Four variants are assembled from [`ModelParams`]:
//!
//! | transport       | albedo      | state layout                                          |
//! |-----------------|-------------|-------------------------------------------------------|
//! | diffusive       | Budyko      | `T_0, ..., T_2N, eta`                                 |
//! | diffusive       | Jormungand  | `T_0, ..., T_2N, eta`                                 |
//! | relax-to-mean   | Budyko      | `u, v, T_2..T_2N, V_2..V_2N, eta`                     |
//! | relax-to-mean   | Jormungand  | `w, z1, z2, T_2..T_2N, V_2..V_2N, W_2..W_2N, eta`     |
//!
//! In the relaxation variants the temperature is piecewise: `U = sum T_2n p_2n`
//! equatorward of the ice line, `V` (and `W` poleward of `rho` for the
//! Jormungand albedo) beyond it. The zero modes are carried in the combined
//! variables `u = (T_0 + V_0)/2`, `v = T_0 - V_0`, and for Jormungand
//! `x = (T_0 + W_0)/2`, `z1 = T_0 - W_0`, `w = (x + V_0)/2`, `z2 = x - V_0`.

use alloc::vec;
use alloc::vec::Vec;

use crate::albedo::{moments, AlbedoMoments, AlbedoSpec};
use crate::error::invalid;
use crate::insolation::{s_quadratic, SpectralSeries};
use crate::legendre::{antideriv_family, legendre_family, EvenMode, MAX_MODE};
use crate::poly::MonomialPoly;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Transport {
    /// `D d/dy (1 - y^2) dT/dy`
    Diffusive { diffusivity: f64 },
    /// `C (Tbar - T)`
    RelaxToMean { coupling: f64 },
}

/// Physical constants and model choices. Units follow the usual EBM
/// conventions: W/m^2 for fluxes, degrees C for temperatures.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// Annual global-mean insolation `Q`.
    pub solar_mean: f64,
    /// OLR offset `A` in `A + B T`.
    pub olr_offset: f64,
    /// OLR slope `B`.
    pub olr_slope: f64,
    /// Surface heat capacity `R`. Sets the time unit.
    pub heat_capacity: f64,
    /// Ice forms where the ice-line temperature is below this.
    pub critical_temp: f64,
    /// Ice-line rate `eps`; zero freezes the ice line.
    pub iceline_rate: f64,
    /// Highest Legendre mode index `N` of the temperature expansion.
    pub modes: usize,
    pub transport: Transport,
    pub albedo: AlbedoSpec,
    pub insolation: SpectralSeries,
}

impl ModelParams {
    /// Modern-climate constants with the two-zone albedo and diffusive
    /// transport of strength `diffusivity`.
    pub fn budyko_modern(diffusivity: f64) -> Self {
        Self {
            solar_mean: 343.0,
            olr_offset: 202.0,
            olr_slope: 1.9,
            heat_capacity: 1.0,
            critical_temp: -10.0,
            iceline_rate: 1e-2,
            modes: 1,
            transport: Transport::Diffusive { diffusivity },
            albedo: AlbedoSpec::Budyko {
                alpha1: 0.32,
                alpha2: 0.62,
            },
            insolation: s_quadratic(),
        }
    }

    /// Cold-world constants with the bare-ice albedo band below `rho = 0.35`.
    pub fn jormungand_cold() -> Self {
        Self {
            solar_mean: 321.0,
            olr_offset: 167.0,
            olr_slope: 1.9,
            heat_capacity: 1.0,
            critical_temp: 0.0,
            iceline_rate: 1e-2,
            modes: 1,
            transport: Transport::Diffusive { diffusivity: 0.25 },
            albedo: AlbedoSpec::Jormungand {
                alpha1: 0.32,
                alpha_i: 0.36,
                alpha2: 0.8,
                rho: 0.35,
            },
            insolation: s_quadratic(),
        }
    }

    pub fn with_modes(mut self, modes: usize) -> Self {
        self.modes = modes;
        self
    }

    pub fn with_transport(mut self, transport: Transport) -> Self {
        self.transport = transport;
        self
    }

    pub fn with_rate(mut self, eps: f64) -> Self {
        self.iceline_rate = eps;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.solar_mean,
            self.olr_offset,
            self.olr_slope,
            self.heat_capacity,
            self.critical_temp,
            self.iceline_rate,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(invalid("model constants must be finite"));
        }
        if self.solar_mean <= 0.0 || self.olr_slope <= 0.0 || self.heat_capacity <= 0.0 {
            return Err(invalid("Q, B and R must be positive"));
        }
        if self.iceline_rate < 0.0 {
            return Err(invalid("eps must be non-negative"));
        }
        if self.modes == 0 || self.modes > MAX_MODE / 2 {
            return Err(invalid("mode count N must satisfy 1 <= N <= 8"));
        }
        match self.transport {
            Transport::Diffusive { diffusivity } if !(diffusivity > 0.0) => {
                return Err(invalid("diffusivity D must be positive"))
            }
            Transport::RelaxToMean { coupling } if !(coupling > 0.0) => {
                return Err(invalid("relaxation coefficient C must be positive"))
            }
            _ => {}
        }
        if self.insolation.get(0) <= 0.0 || self.insolation.max_mode() > MAX_MODE / 2 {
            return Err(invalid("insolation series needs s_0 > 0 and at most 9 modes"));
        }
        self.albedo.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    DiffusiveBudyko,
    DiffusiveJormungand,
    RelaxBudyko,
    RelaxJormungand,
}

impl Variant {
    pub fn of(params: &ModelParams) -> Self {
        match (params.transport, params.albedo.is_jormungand()) {
            (Transport::Diffusive { .. }, false) => Variant::DiffusiveBudyko,
            (Transport::Diffusive { .. }, true) => Variant::DiffusiveJormungand,
            (Transport::RelaxToMean { .. }, false) => Variant::RelaxBudyko,
            (Transport::RelaxToMean { .. }, true) => Variant::RelaxJormungand,
        }
    }

    pub fn is_diffusive(self) -> bool {
        matches!(self, Variant::DiffusiveBudyko | Variant::DiffusiveJormungand)
    }

    pub fn is_jormungand(self) -> bool {
        matches!(self, Variant::DiffusiveJormungand | Variant::RelaxJormungand)
    }

    /// Whether the ice-line velocity jumps across `eta = rho`.
    pub fn is_discontinuous(self) -> bool {
        self == Variant::RelaxJormungand
    }

    pub fn state_len(self, modes: usize) -> usize {
        match self {
            Variant::DiffusiveBudyko | Variant::DiffusiveJormungand => modes + 2,
            Variant::RelaxBudyko => 2 * modes + 3,
            Variant::RelaxJormungand => 3 * modes + 4,
        }
    }
}

/// Which smooth branch of a Jormungand field is in use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    /// `eta < rho`: three-zone albedo.
    Equatorward,
    /// `eta >= rho`: two-zone albedo. Always used when there is no switch.
    Poleward,
}

/// Flat state vector; the layout is fixed by the [`Variant`] (see module docs)
/// and the ice line is always the last entry.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState(pub Vec<f64>);

impl ModelState {
    pub fn eta(&self) -> f64 {
        *self.0.last().expect("empty state")
    }

    pub fn set_eta(&mut self, eta: f64) {
        *self.0.last_mut().expect("empty state") = eta;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Everything but the ice line.
    pub fn temperatures(&self) -> &[f64] {
        &self.0[..self.0.len() - 1]
    }
}

/// Global mean and ice-line temperature of a state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedQuantities {
    pub global_mean: f64,
    pub iceline_temp: f64,
}

/// Equilibrium values of the linear modes in the relaxation variants.
#[derive(Debug, Clone, PartialEq)]
struct RelaxFixedPoints {
    /// `Q/(B+C)`
    l: f64,
    /// `v*` (Budyko) or `z1*` (Jormungand).
    z1: f64,
    /// `z2*`, Jormungand only.
    z2: f64,
    /// Per-piece equilibria of modes `1..=N` for albedos alpha1, alpha_i, alpha2.
    t: Vec<f64>,
    v: Vec<f64>,
    w: Vec<f64>,
}

/// Parameters plus everything that can be precomputed from them.
#[derive(Debug, Clone)]
pub struct Model {
    params: ModelParams,
    variant: Variant,
    moments: AlbedoMoments,
    p: Vec<MonomialPoly>,
    big_p: Vec<MonomialPoly>,
    /// Diffusive only: `f_2n` on the poleward and equatorward branches.
    f_pole: Vec<MonomialPoly>,
    f_equator: Option<Vec<MonomialPoly>>,
    relax: Option<RelaxFixedPoints>,
}

impl Model {
    pub fn new(params: ModelParams) -> Result<Self> {
        params.validate()?;
        let variant = Variant::of(&params);
        let n = params.modes;
        let moments = moments(&params.albedo, &params.insolation, n)?;
        let p = legendre_family(n);
        let big_p = antideriv_family(n);

        let (f_pole, f_equator, relax) = match params.transport {
            Transport::Diffusive { diffusivity } => {
                let build = |family: &[MonomialPoly]| -> Vec<MonomialPoly> {
                    family
                        .iter()
                        .enumerate()
                        .map(|(k, abar)| {
                            let rate = params.olr_slope + EvenMode(k).diffusion_eigenvalue() * diffusivity;
                            let mut forcing = &MonomialPoly::constant(params.solar_mean * params.insolation.get(k))
                                - &abar.scale(params.solar_mean);
                            if k == 0 {
                                forcing = &forcing - &MonomialPoly::constant(params.olr_offset);
                            }
                            forcing.scale(1.0 / rate)
                        })
                        .collect()
                };
                let pole = build(&moments.poleward);
                let eq = moments.equatorward.as_deref().map(build);
                (pole, eq, None)
            }
            Transport::RelaxToMean { coupling } => {
                let q = params.solar_mean;
                let l = q / (params.olr_slope + coupling);
                let s = &params.insolation;
                let a1 = params.albedo.alpha1();
                let a2 = params.albedo.alpha2();
                let (ai, z1, z2) = match params.albedo {
                    AlbedoSpec::Budyko { .. } => (a2, l * s.get(0) * (a2 - a1), 0.0),
                    AlbedoSpec::Jormungand { alpha_i, .. } => {
                        let a0 = 0.5 * (a1 + a2);
                        (alpha_i, l * s.get(0) * (a2 - a1), l * s.get(0) * (alpha_i - a0))
                    }
                };
                let modes = |alb: f64| (1..=n).map(|k| l * s.get(k) * (1.0 - alb)).collect();
                let relax = RelaxFixedPoints {
                    l,
                    z1,
                    z2,
                    t: modes(a1),
                    v: modes(ai),
                    w: modes(a2),
                };
                (Vec::new(), None, Some(relax))
            }
        };

        Ok(Self {
            params,
            variant,
            moments,
            p,
            big_p,
            f_pole,
            f_equator,
            relax,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn modes(&self) -> usize {
        self.params.modes
    }

    pub fn rho(&self) -> Option<f64> {
        self.params.albedo.rho()
    }

    pub fn moments(&self) -> &AlbedoMoments {
        &self.moments
    }

    pub fn state_len(&self) -> usize {
        self.variant.state_len(self.params.modes)
    }

    pub fn legendre(&self) -> &[MonomialPoly] {
        &self.p
    }

    pub fn legendre_antiderivs(&self) -> &[MonomialPoly] {
        &self.big_p
    }

    /// Branch that applies at ice line `eta`.
    pub fn side_of(&self, eta: f64) -> Side {
        match self.rho() {
            Some(rho) if eta < rho => Side::Equatorward,
            _ => Side::Poleward,
        }
    }

    fn coupling(&self) -> f64 {
        match self.params.transport {
            Transport::RelaxToMean { coupling } => coupling,
            Transport::Diffusive { .. } => 0.0,
        }
    }

    /// Relaxation rates of the temperature modes for frozen `eta`.
    ///
    /// Diffusive: `(B + 2n(2n+1) D)/R` for `T_0..T_2N`. Relaxation: `B/R` for
    /// the mean variable and `(B+C)/R` for every other linear mode.
    pub fn fast_rates(&self) -> Vec<f64> {
        let pr = &self.params;
        match pr.transport {
            Transport::Diffusive { diffusivity } => (0..=pr.modes)
                .map(|k| (pr.olr_slope + EvenMode(k).diffusion_eigenvalue() * diffusivity) / pr.heat_capacity)
                .collect(),
            Transport::RelaxToMean { coupling } => {
                let mut rates = vec![(pr.olr_slope + coupling) / pr.heat_capacity; self.state_len() - 1];
                rates[0] = pr.olr_slope / pr.heat_capacity;
                rates
            }
        }
    }

    /// Diffusive critical-manifold polynomials `f_0, ..., f_2N` on a branch.
    pub fn slow_manifold_polys(&self, side: Side) -> Option<&[MonomialPoly]> {
        if !self.variant.is_diffusive() {
            return None;
        }
        match (side, &self.f_equator) {
            (Side::Equatorward, Some(eq)) => Some(eq),
            _ => Some(&self.f_pole),
        }
    }

    fn check_len(&self, state: &[f64]) {
        assert_eq!(
            state.len(),
            self.state_len(),
            "state length does not match the model layout"
        );
    }

    /// Time derivative using the branch selected by the state's own `eta`.
    pub fn derivative(&self, state: &ModelState) -> ModelState {
        let mut out = vec![0.0; self.state_len()];
        self.rhs_into(state.as_slice(), self.side_of(state.eta()), &mut out);
        ModelState(out)
    }

    /// Time derivative on an explicit branch. For the Jormungand variants each
    /// branch is a smooth field defined for every `eta`.
    pub fn rhs_into(&self, y: &[f64], side: Side, out: &mut [f64]) {
        self.check_len(y);
        match self.variant {
            Variant::DiffusiveBudyko | Variant::DiffusiveJormungand => self.rhs_diffusive_into(y, side, out),
            Variant::RelaxBudyko => self.rhs_relax_budyko_into(y, out),
            Variant::RelaxJormungand => self.rhs_relax_jormungand_into(y, side, out),
        }
    }

    fn rhs_diffusive_into(&self, y: &[f64], side: Side, out: &mut [f64]) {
        let n = self.params.modes;
        let eta = y[n + 1];
        let f = self.slow_manifold_polys(side).expect("diffusive");
        let rates = self.fast_rates();
        let mut t_ice = 0.0;
        for k in 0..=n {
            out[k] = -rates[k] * (y[k] - f[k].eval(eta));
            t_ice += y[k] * self.p[k].eval(eta);
        }
        out[n + 1] = self.params.iceline_rate * (t_ice - self.params.critical_temp);
    }

    fn rhs_relax_budyko_into(&self, y: &[f64], out: &mut [f64]) {
        let pr = &self.params;
        let n = pr.modes;
        let (a1, a2) = (pr.albedo.alpha1(), pr.albedo.alpha2());
        let a0 = 0.5 * (a1 + a2);
        let bc = pr.olr_slope + self.coupling();
        let r = pr.heat_capacity;
        let q = pr.solar_mean;
        let s = &pr.insolation;
        let tbar = self.global_mean_slice(y);
        out[0] = (q * s.get(0) * (1.0 - a0) - bc * y[0] - pr.olr_offset + self.coupling() * tbar) / r;
        out[1] = (q * s.get(0) * (a2 - a1) - bc * y[1]) / r;
        for k in 1..=n {
            out[1 + k] = (q * s.get(k) * (1.0 - a1) - bc * y[1 + k]) / r;
            out[1 + n + k] = (q * s.get(k) * (1.0 - a2) - bc * y[1 + n + k]) / r;
        }
        out[2 * n + 2] = pr.iceline_rate * (self.iceline_temp_slice(y, Side::Poleward) - pr.critical_temp);
    }

    fn rhs_relax_jormungand_into(&self, y: &[f64], side: Side, out: &mut [f64]) {
        let pr = &self.params;
        let n = pr.modes;
        let AlbedoSpec::Jormungand { alpha1, alpha_i, alpha2, .. } = pr.albedo else {
            unreachable!("relax Jormungand variant without Jormungand albedo");
        };
        let a0 = 0.5 * (alpha1 + alpha2);
        let g1 = 0.5 * (a0 + alpha_i);
        let bc = pr.olr_slope + self.coupling();
        let r = pr.heat_capacity;
        let q = pr.solar_mean;
        let s = &pr.insolation;
        let tbar = self.global_mean_on_side(y, side);
        out[0] = (q * s.get(0) * (1.0 - g1) - pr.olr_offset - bc * y[0] + self.coupling() * tbar) / r;
        out[1] = (q * s.get(0) * (alpha2 - alpha1) - bc * y[1]) / r;
        out[2] = (q * s.get(0) * (alpha_i - a0) - bc * y[2]) / r;
        for k in 1..=n {
            out[2 + k] = (q * s.get(k) * (1.0 - alpha1) - bc * y[2 + k]) / r;
            out[2 + n + k] = (q * s.get(k) * (1.0 - alpha_i) - bc * y[2 + n + k]) / r;
            out[2 + 2 * n + k] = (q * s.get(k) * (1.0 - alpha2) - bc * y[2 + 2 * n + k]) / r;
        }
        out[3 * n + 3] = pr.iceline_rate * (self.iceline_temp_slice(y, side) - pr.critical_temp);
    }

    /// Diffusive right-hand side, rejecting other variants.
    pub fn rhs_diffusive(&self, state: &ModelState) -> Result<ModelState> {
        if !self.variant.is_diffusive() {
            return Err(invalid("rhs_diffusive needs diffusive transport"));
        }
        Ok(self.derivative(state))
    }

    pub fn rhs_relax_budyko(&self, state: &ModelState) -> Result<ModelState> {
        if self.variant != Variant::RelaxBudyko {
            return Err(invalid("rhs_relax_budyko needs relaxation transport with Budyko albedo"));
        }
        Ok(self.derivative(state))
    }

    pub fn rhs_relax_jormungand(&self, state: &ModelState) -> Result<ModelState> {
        if self.variant != Variant::RelaxJormungand {
            return Err(invalid(
                "rhs_relax_jormungand needs relaxation transport with Jormungand albedo",
            ));
        }
        Ok(self.derivative(state))
    }

    /// `Tbar = int_0^1 T(y) dy`.
    pub fn global_mean(&self, state: &ModelState) -> f64 {
        self.check_len(state.as_slice());
        self.global_mean_slice(state.as_slice())
    }

    fn global_mean_slice(&self, y: &[f64]) -> f64 {
        let eta = *y.last().unwrap();
        self.global_mean_on_side(y, self.side_of(eta))
    }

    fn global_mean_on_side(&self, y: &[f64], side: Side) -> f64 {
        let n = self.params.modes;
        let eta = *y.last().unwrap();
        let bp = &self.big_p;
        match self.variant {
            // Only p_0 survives integration over [0, 1].
            Variant::DiffusiveBudyko | Variant::DiffusiveJormungand => y[0],
            Variant::RelaxBudyko => {
                let (u, v) = (y[0], y[1]);
                let modes: f64 = (1..=n).map(|k| (y[1 + k] - y[1 + n + k]) * bp[k].eval(eta)).sum();
                u + v * (eta - 0.5) + modes
            }
            Variant::RelaxJormungand => {
                let (w, z1, z2) = (y[0], y[1], y[2]);
                let t = |k: usize| y[2 + k];
                let v = |k: usize| y[2 + n + k];
                let wk = |k: usize| y[2 + 2 * n + k];
                match side {
                    Side::Equatorward => {
                        let rho = self.rho().unwrap();
                        let modes: f64 = (1..=n)
                            .map(|k| (t(k) - v(k)) * bp[k].eval(eta) + (v(k) - wk(k)) * bp[k].eval(rho))
                            .sum();
                        w + 0.5 * z1 * (eta + rho - 1.0) + z2 * (eta - rho + 0.5) + modes
                    }
                    Side::Poleward => {
                        // U on [0, eta), W beyond; the V band is empty.
                        let modes: f64 = (1..=n).map(|k| (t(k) - wk(k)) * bp[k].eval(eta)).sum();
                        w + 0.5 * z2 + z1 * (eta - 0.5) + modes
                    }
                }
            }
        }
    }

    /// Temperature at the ice line. In the relaxation variants this is the
    /// average of the one-sided limits of the piecewise profile.
    pub fn iceline_temperature(&self, state: &ModelState) -> f64 {
        self.check_len(state.as_slice());
        self.iceline_temp_slice(state.as_slice(), self.side_of(state.eta()))
    }

    /// Ice-line temperature evaluated on a chosen branch.
    pub fn iceline_temperature_on_side(&self, state: &ModelState, side: Side) -> f64 {
        self.check_len(state.as_slice());
        self.iceline_temp_slice(state.as_slice(), side)
    }

    fn iceline_temp_slice(&self, y: &[f64], side: Side) -> f64 {
        let n = self.params.modes;
        let eta = *y.last().unwrap();
        let p = &self.p;
        match self.variant {
            Variant::DiffusiveBudyko | Variant::DiffusiveJormungand => {
                (0..=n).map(|k| y[k] * p[k].eval(eta)).sum()
            }
            Variant::RelaxBudyko => {
                y[0] + 0.5 * (1..=n).map(|k| (y[1 + k] + y[1 + n + k]) * p[k].eval(eta)).sum::<f64>()
            }
            Variant::RelaxJormungand => {
                let (w, z1, z2) = (y[0], y[1], y[2]);
                match side {
                    Side::Equatorward => {
                        w + 0.25 * z1
                            + 0.5 * (1..=n).map(|k| (y[2 + k] + y[2 + n + k]) * p[k].eval(eta)).sum::<f64>()
                    }
                    Side::Poleward => {
                        w + 0.5 * z2
                            + 0.5
                                * (1..=n)
                                    .map(|k| (y[2 + k] + y[2 + 2 * n + k]) * p[k].eval(eta))
                                    .sum::<f64>()
                    }
                }
            }
        }
    }

    pub fn derived(&self, state: &ModelState) -> DerivedQuantities {
        DerivedQuantities {
            global_mean: self.global_mean(state),
            iceline_temp: self.iceline_temperature(state),
        }
    }

    /// Coefficients `T_0..T_2N` of the equatorward piece of the profile.
    /// For the diffusive variants this is the whole temperature vector.
    pub fn equatorward_coeffs(&self, state: &ModelState) -> Vec<f64> {
        let y = state.as_slice();
        self.check_len(y);
        let n = self.params.modes;
        match self.variant {
            Variant::DiffusiveBudyko | Variant::DiffusiveJormungand => y[..=n].to_vec(),
            Variant::RelaxBudyko => {
                let mut c = vec![y[0] + 0.5 * y[1]];
                c.extend_from_slice(&y[2..2 + n]);
                c
            }
            Variant::RelaxJormungand => {
                let mut c = vec![y[0] + 0.5 * y[2] + 0.5 * y[1]];
                c.extend_from_slice(&y[3..3 + n]);
                c
            }
        }
    }

    /// The temperature profile as `(from, to, polynomial)` pieces covering
    /// `[0, 1]` in order.
    pub fn profile_pieces(&self, state: &ModelState) -> Vec<(f64, f64, MonomialPoly)> {
        let y = state.as_slice();
        self.check_len(y);
        let n = self.params.modes;
        let eta = state.eta();
        let series = |c0: f64, rest: &[f64]| -> MonomialPoly {
            let mut acc = MonomialPoly::constant(c0);
            for (k, c) in rest.iter().enumerate() {
                acc = &acc + &self.p[k + 1].scale(*c);
            }
            acc
        };
        match self.variant {
            Variant::DiffusiveBudyko | Variant::DiffusiveJormungand => {
                vec![(0.0, 1.0, series(y[0], &y[1..=n]))]
            }
            Variant::RelaxBudyko => {
                let (u, v) = (y[0], y[1]);
                vec![
                    (0.0, eta, series(u + 0.5 * v, &y[2..2 + n])),
                    (eta, 1.0, series(u - 0.5 * v, &y[2 + n..2 + 2 * n])),
                ]
            }
            Variant::RelaxJormungand => {
                let (w, z1, z2) = (y[0], y[1], y[2]);
                let x = w + 0.5 * z2;
                let u_piece = series(x + 0.5 * z1, &y[3..3 + n]);
                let w_piece = series(x - 0.5 * z1, &y[3 + 2 * n..3 + 3 * n]);
                match self.side_of(eta) {
                    Side::Equatorward => {
                        let rho = self.rho().unwrap();
                        let v_piece = series(w - 0.5 * z2, &y[3 + n..3 + 2 * n]);
                        vec![(0.0, eta, u_piece), (eta, rho, v_piece), (rho, 1.0, w_piece)]
                    }
                    Side::Poleward => vec![(0.0, eta, u_piece), (eta, 1.0, w_piece)],
                }
            }
        }
    }

    /// State on the critical manifold at `eta`: every temperature variable at
    /// its equilibrium for frozen `eta`.
    pub fn slow_manifold_state(&self, eta: f64) -> ModelState {
        self.slow_manifold_state_on_side(eta, self.side_of(eta))
    }

    pub fn slow_manifold_state_on_side(&self, eta: f64, side: Side) -> ModelState {
        let n = self.params.modes;
        let mut y = Vec::with_capacity(self.state_len());
        match self.variant {
            Variant::DiffusiveBudyko | Variant::DiffusiveJormungand => {
                y.extend(self.slow_manifold_polys(side).unwrap().iter().map(|f| f.eval(eta)));
            }
            Variant::RelaxBudyko => {
                let fp = self.relax.as_ref().unwrap();
                y.push(0.0);
                y.push(fp.z1);
                y.extend_from_slice(&fp.t);
                y.extend_from_slice(&fp.w);
            }
            Variant::RelaxJormungand => {
                let fp = self.relax.as_ref().unwrap();
                y.push(0.0);
                y.push(fp.z1);
                y.push(fp.z2);
                y.extend_from_slice(&fp.t);
                y.extend_from_slice(&fp.v);
                y.extend_from_slice(&fp.w);
            }
        }
        y.push(eta);
        if !self.variant.is_diffusive() {
            // The mean variable obeys R m' = forcing - B m + C g(eta), where g
            // is the rest of Tbar; solve for m' = 0.
            let mut probe = y.clone();
            probe[0] = 0.0;
            let mut out = vec![0.0; y.len()];
            self.rhs_into(&probe, side, &mut out);
            y[0] = out[0] * self.params.heat_capacity / self.params.olr_slope;
        }
        debug_assert_eq!(y.len(), self.state_len());
        let _ = n;
        ModelState(y)
    }

    /// Relaxation fixed points `L = Q/(B+C)`, `z1*` (or `v*`), `z2*`.
    pub fn relax_constants(&self) -> Option<(f64, f64, f64)> {
        self.relax.as_ref().map(|r| (r.l, r.z1, r.z2))
    }

    /// Equilibria `(T*_2n, V*_2n, W*_2n)` of modes `1..=N` in the relaxation
    /// variants.
    pub fn relax_mode_equilibria(&self) -> Option<(&[f64], &[f64], &[f64])> {
        self.relax.as_ref().map(|r| (&r.t[..], &r.v[..], &r.w[..]))
    }

    /// `d f_0^+/d eta - d f_0^-/d eta` at `eta = rho`; analytically
    /// `(Q/B)(alpha2 - alpha_i) s(rho)`. The temperature vector does not
    /// enter `f_0`, so `_x` only documents the point on the switching set.
    pub fn jacobian_gap_at_sigma(&self, _x: &[f64]) -> Result<f64> {
        if self.variant != Variant::DiffusiveJormungand {
            return Err(invalid("jacobian gap is defined for diffusive Jormungand only"));
        }
        let rho = self.rho().unwrap();
        let plus = self.f_pole[0].derivative().eval(rho);
        let minus = self.f_equator.as_ref().unwrap()[0].derivative().eval(rho);
        Ok(plus - minus)
    }

    /// Analytic Jacobian of a diffusive field on a given branch, row-major.
    pub fn jacobian_on_side(&self, state: &ModelState, side: Side) -> Result<Vec<Vec<f64>>> {
        if !self.variant.is_diffusive() {
            return Err(invalid("analytic Jacobian is implemented for diffusive transport"));
        }
        let y = state.as_slice();
        self.check_len(y);
        let n = self.params.modes;
        let eta = state.eta();
        let f = self.slow_manifold_polys(side).unwrap();
        let rates = self.fast_rates();
        let eps = self.params.iceline_rate;
        let dim = n + 2;
        let mut jac = vec![vec![0.0; dim]; dim];
        for k in 0..=n {
            jac[k][k] = -rates[k];
            jac[k][n + 1] = rates[k] * f[k].derivative().eval(eta);
            jac[n + 1][k] = eps * self.p[k].eval(eta);
        }
        jac[n + 1][n + 1] = eps * (0..=n).map(|k| y[k] * self.p[k].derivative().eval(eta)).sum::<f64>();
        Ok(jac)
    }
}
