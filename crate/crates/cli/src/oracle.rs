//! Oracle-equivalence checks run by `ebm validate`.
//!
//! Every check compares a closed form used by the model against something
//! computed another way: adaptive quadrature of a pointwise definition,
//! finite differences, or an independent integration path. Random cases are
//! drawn from a fixed seed so reports are reproducible.

use std::fmt::Write as _;

use ebm_core::albedo::{moments, AlbedoSpec};
use ebm_core::dynamics::{integrate, integrate_reduced, IntegratorOpts};
use ebm_core::insolation::SpectralSeries;
use ebm_core::legendre::{eval_even, legendre_poly, EvenMode};
use ebm_core::model::{Model, ModelParams, ModelState, Side, Transport, Variant};
use ebm_core::quadrature::Quadrature;
use ebm_core::reduced::{build_h, find_roots, RootOptions, Stability};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const DEFAULT_SEED: u64 = 0x5eed_2024;

pub const MOMENT_CASES: usize = 40;
pub const MOMENT_TOL: f64 = 1e-10;
pub const LEGENDRE_TOL: f64 = 1e-9;
pub const CONTINUITY_CASES: usize = 10;
pub const CONTINUITY_TOL: f64 = 1e-12;
pub const JACOBIAN_FD_STEP: f64 = 1e-6;
pub const JACOBIAN_REL_TOL: f64 = 1e-4;
pub const MEAN_TOL: f64 = 1e-9;
/// Full and reduced ice lines must agree to this many multiples of `eps`.
pub const REDUCTION_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub cases: usize,
    /// Largest error seen over all cases.
    pub worst: f64,
    pub tol: f64,
    pub note: String,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.worst <= self.tol
    }
}

fn check(name: &'static str, errors: &[f64], tol: f64, note: String) -> Check {
    let worst = errors.iter().fold(0.0f64, |m, e| if e.is_nan() { f64::INFINITY } else { m.max(*e) });
    Check {
        name,
        cases: errors.len(),
        worst,
        tol,
        note,
    }
}

/// Albedo from its piecewise definition, without the model's helpers.
fn albedo_at(spec: &AlbedoSpec, y: f64, eta: f64) -> f64 {
    match *spec {
        AlbedoSpec::Budyko { alpha1, alpha2 } => {
            if y < eta {
                alpha1
            } else {
                alpha2
            }
        }
        AlbedoSpec::Jormungand {
            alpha1,
            alpha_i,
            alpha2,
            rho,
        } => {
            if y < eta {
                alpha1
            } else if eta < rho && y < rho {
                alpha_i
            } else {
                alpha2
            }
        }
    }
}

fn breakpoints(spec: &AlbedoSpec, eta: f64) -> Vec<f64> {
    match spec.rho() {
        Some(rho) => vec![eta, rho],
        None => vec![eta],
    }
}

fn fine() -> Quadrature {
    Quadrature::new(1e-14)
}

/// Albedo moment polynomials against quadrature of `alpha s p_2n`.
pub fn albedo_moments(rng: &mut ChaCha8Rng, cases: usize) -> Check {
    let mut errors = Vec::with_capacity(cases);
    for _ in 0..cases {
        let alpha1 = rng.random_range(0.2..0.4);
        let alpha2 = rng.random_range(0.5..0.85);
        let spec = if rng.random_bool(0.5) {
            AlbedoSpec::Budyko { alpha1, alpha2 }
        } else {
            AlbedoSpec::Jormungand {
                alpha1,
                alpha_i: rng.random_range(alpha1..alpha2),
                alpha2,
                rho: rng.random_range(0.2..0.8),
            }
        };
        let s = SpectralSeries::new(vec![
            1.0,
            rng.random_range(-0.6..-0.3),
            rng.random_range(-0.1..0.1),
        ]);
        let max_mode = 8;
        let eta = rng.random_range(0.0..1.0);
        let fam = moments(&spec, &s, max_mode).expect("valid random albedo");
        let mut worst = 0.0f64;
        for n in 0..=max_mode {
            let closed = fam.active(eta)[n].eval(eta);
            let mode = EvenMode(n);
            let quad = fine()
                .integrate_split(
                    |y| albedo_at(&spec, y, eta) * s.eval(y) * eval_even(mode, y),
                    0.0,
                    1.0,
                    &breakpoints(&spec, eta),
                )
                .expect("smooth pieces converge");
            worst = worst.max((closed - (4 * n + 1) as f64 * quad).abs());
        }
        errors.push(worst);
    }
    check("albedo_moments", &errors, MOMENT_TOL, "modes 0..=8, quadrature".into())
}

/// Orthogonality, the diffusion eigen-relation and agreement of the
/// monomial form with the three-term recurrence.
pub fn legendre_identities() -> Check {
    let max_mode = 8;
    let mut errors = Vec::new();
    for m in 0..=max_mode {
        for n in m..=max_mode {
            let (pm, pn) = (EvenMode(m), EvenMode(n));
            let ip = fine().integrate(|y| eval_even(pm, y) * eval_even(pn, y), 0.0, 1.0).unwrap();
            let want = if m == n { 1.0 / (4 * n + 1) as f64 } else { 0.0 };
            errors.push((ip - want).abs());
        }
    }
    for n in 0..=max_mode {
        let p = legendre_poly(EvenMode(n));
        let (d1, d2) = (p.derivative(), p.derivative().derivative());
        let lambda = (2 * n * (2 * n + 1)) as f64;
        for i in 0..=20 {
            let y = i as f64 / 20.0;
            let lhs = (1.0 - y * y) * d2.eval(y) - 2.0 * y * d1.eval(y);
            errors.push((lhs + lambda * p.eval(y)).abs() / lambda.max(1.0));
            errors.push((p.eval(y) - eval_even(EvenMode(n), y)).abs());
        }
    }
    check("legendre_identities", &errors, LEGENDRE_TOL, "orthogonality, eigen-relation, recurrence".into())
}

fn jormungand_diffusive(modes: usize, diffusivity: f64) -> Model {
    Model::new(
        ModelParams::jormungand_cold()
            .with_modes(modes)
            .with_transport(Transport::Diffusive { diffusivity }),
    )
    .expect("valid preset")
}

/// Both smooth branches of the Jormungand field agree on the switching set.
pub fn sigma_continuity(rng: &mut ChaCha8Rng, cases: usize) -> Check {
    let mut errors = Vec::with_capacity(cases);
    for _ in 0..cases {
        let modes = rng.random_range(1..=5);
        let model = jormungand_diffusive(modes, rng.random_range(0.1..0.6));
        let rho = model.rho().unwrap();
        let mut y: Vec<f64> = (0..=modes).map(|_| rng.random_range(-30.0..30.0)).collect();
        y.push(rho);
        let mut minus = vec![0.0; y.len()];
        let mut plus = vec![0.0; y.len()];
        model.rhs_into(&y, Side::Equatorward, &mut minus);
        model.rhs_into(&y, Side::Poleward, &mut plus);
        errors.push(minus.iter().zip(&plus).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }
    check("sigma_continuity", &errors, CONTINUITY_TOL, "max-norm of branch difference".into())
}

/// Slope jump of the critical mean temperature at `rho`: model value and a
/// one-sided finite difference of a quadrature-based mean albedo, both
/// against `(Q/B)(alpha2 - alpha_i) s(rho)`.
pub fn jacobian_gap() -> Check {
    let model = jormungand_diffusive(1, 0.25);
    let p = model.params();
    let AlbedoSpec::Jormungand { alpha_i, alpha2, rho, .. } = p.albedo else {
        unreachable!("preset uses the Jormungand albedo")
    };
    let (q, a, b) = (p.solar_mean, p.olr_offset, p.olr_slope);
    let s = &p.insolation;
    let closed = q / b * (alpha2 - alpha_i) * s.eval(rho);

    // Mean temperature on the critical manifold, with the branch forced by
    // the albedo used.
    let mean_temp = |eta: f64, equatorward: bool| {
        let abar = fine()
            .integrate_split(
                |y| {
                    let alpha = if y < eta {
                        p.albedo.alpha1()
                    } else if equatorward && y < rho {
                        alpha_i
                    } else {
                        alpha2
                    };
                    alpha * s.eval(y)
                },
                0.0,
                1.0,
                &[eta, rho],
            )
            .unwrap();
        (q * (s.get(0) - abar) - a) / b
    };
    let h = JACOBIAN_FD_STEP;
    let right = (mean_temp(rho + h, false) - mean_temp(rho, false)) / h;
    let left = (mean_temp(rho, true) - mean_temp(rho - h, true)) / h;
    let fd = right - left;
    let analytic = model.jacobian_gap_at_sigma(&[]).unwrap();

    let errors = [(fd - closed).abs() / closed.abs(), (analytic - closed).abs() / closed.abs()];
    check(
        "jacobian_gap",
        &errors,
        JACOBIAN_REL_TOL,
        format!("closed {closed:.6}, model {analytic:.6}, fd {fd:.6}"),
    )
}

/// Ice line after one slow e-folding time `1/|h'(eta*)|`, from the full
/// system and from the reduced flow, in units of `REDUCTION_FACTOR * eps`.
pub fn full_vs_reduced(eps_list: &[f64]) -> Check {
    let eta0 = 0.6;
    let mut errors = Vec::new();
    let mut note = String::new();
    for &eps in eps_list {
        let model = Model::new(ModelParams::budyko_modern(0.35).with_rate(eps)).unwrap();
        let h = build_h(&model);
        let rate = find_roots(&h, &RootOptions::default())
            .iter()
            .filter(|r| r.stability == Stability::Stable)
            .map(|r| r.slope.abs())
            .next()
            .expect("a stable ice line");
        let opts = IntegratorOpts::default().with_t_end(1.0 / (rate * eps)).with_eq_tol(0.0);
        let full = integrate(&model, &model.slow_manifold_state(eta0), &opts).unwrap();
        let reduced = integrate_reduced(&h, eps, eta0, &opts).unwrap();
        let gap = (full.final_eta() - reduced.final_eta()).abs();
        let _ = write!(note, "eps={eps:e}: |d eta|={gap:.3e} ");
        errors.push(gap / (REDUCTION_FACTOR * eps));
    }
    check("full_vs_reduced", &errors, 1.0, note.trim_end().to_string())
}

fn series_at(c0: f64, rest: &[f64], y: f64) -> f64 {
    c0 + rest
        .iter()
        .enumerate()
        .map(|(k, c)| c * eval_even(EvenMode(k + 1), y))
        .sum::<f64>()
}

/// `int_0^1 T` by quadrature over the piecewise profile, rebuilt directly
/// from the relaxation state layout.
pub fn piecewise_mean(variant: Variant, modes: usize, rho: Option<f64>, y: &[f64]) -> f64 {
    let n = modes;
    let eta = *y.last().unwrap();
    let q = fine();
    let seg = |c0: f64, rest: &[f64], a: f64, b: f64| q.integrate(|x| series_at(c0, rest, x), a, b).unwrap();
    match variant {
        Variant::RelaxBudyko => {
            let (u, v) = (y[0], y[1]);
            seg(u + 0.5 * v, &y[2..2 + n], 0.0, eta) + seg(u - 0.5 * v, &y[2 + n..2 + 2 * n], eta, 1.0)
        }
        Variant::RelaxJormungand => {
            let (w, z1, z2) = (y[0], y[1], y[2]);
            let x = w + 0.5 * z2;
            let t = &y[3..3 + n];
            let vv = &y[3 + n..3 + 2 * n];
            let ww = &y[3 + 2 * n..3 + 3 * n];
            let rho = rho.unwrap();
            if eta < rho {
                seg(x + 0.5 * z1, t, 0.0, eta)
                    + seg(w - 0.5 * z2, vv, eta, rho)
                    + seg(x - 0.5 * z1, ww, rho, 1.0)
            } else {
                seg(x + 0.5 * z1, t, 0.0, eta) + seg(x - 0.5 * z1, ww, eta, 1.0)
            }
        }
        _ => y[0],
    }
}

/// Closed-form global mean of the relaxation variants against quadrature.
pub fn relaxation_mean(rng: &mut ChaCha8Rng, cases: usize) -> Check {
    let mut errors = Vec::with_capacity(cases);
    for i in 0..cases {
        let modes = rng.random_range(1..=4);
        let coupling = rng.random_range(1.0..5.0);
        let params = if i % 2 == 0 {
            ModelParams::budyko_modern(0.35)
        } else {
            ModelParams::jormungand_cold()
        };
        let model = Model::new(
            params
                .with_modes(modes)
                .with_transport(Transport::RelaxToMean { coupling }),
        )
        .unwrap();
        let mut y: Vec<f64> = (0..model.state_len() - 1).map(|_| rng.random_range(-20.0..20.0)).collect();
        y.push(rng.random_range(0.0..1.0));
        let closed = model.global_mean(&ModelState(y.clone()));
        let quad = piecewise_mean(model.variant(), modes, model.rho(), &y);
        errors.push((closed - quad).abs());
    }
    check("relaxation_mean", &errors, MEAN_TOL, "both albedos, both sides of rho".into())
}

/// The whole suite with the default case counts.
pub fn run_all(seed: u64) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    vec![
        albedo_moments(&mut rng, MOMENT_CASES),
        legendre_identities(),
        sigma_continuity(&mut rng, CONTINUITY_CASES),
        jacobian_gap(),
        full_vs_reduced(&[1e-2, 1e-3]),
        relaxation_mean(&mut rng, 20),
    ]
}

pub fn report(checks: &[Check]) -> String {
    let mut out = String::new();
    for c in checks {
        let _ = writeln!(
            out,
            "{} {:<20} cases={:<4} worst={:.3e} tol={:.1e}  {}",
            if c.passed() { "PASS" } else { "FAIL" },
            c.name,
            c.cases,
            c.worst,
            c.tol,
            c.note
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ebm_core::insolation::s_quadratic;

    #[test]
    fn piecewise_mean_of_constant_profile() {
        // u = 3, v = 0 and no higher modes: the profile is 3 everywhere.
        let y = [3.0, 0.0, 0.0, 0.0, 0.4];
        let mean = piecewise_mean(Variant::RelaxBudyko, 1, None, &y);
        assert!((mean - 3.0).abs() < 1e-13);
    }

    #[test]
    fn independent_albedo_matches_step_layout() {
        let spec = AlbedoSpec::Jormungand {
            alpha1: 0.3,
            alpha_i: 0.4,
            alpha2: 0.7,
            rho: 0.5,
        };
        assert_eq!(albedo_at(&spec, 0.1, 0.2), 0.3);
        assert_eq!(albedo_at(&spec, 0.3, 0.2), 0.4);
        assert_eq!(albedo_at(&spec, 0.6, 0.2), 0.7);
        assert_eq!(albedo_at(&spec, 0.55, 0.6), 0.3);
        assert_eq!(albedo_at(&spec, 0.65, 0.6), 0.7);
    }

    #[test]
    fn quadratic_insolation_is_normalized() {
        let s = s_quadratic();
        let total = fine().integrate(|y| s.eval(y), 0.0, 1.0).unwrap();
        assert!((total - 1.0).abs() < 1e-13);
    }
}
