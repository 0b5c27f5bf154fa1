//! Time integration with switching, sliding and boundary handling.
//!
//! The ice line is always the last state component. While it moves freely
//! the active branch is tracked explicitly, and an accepted step that would
//! leave the branch (or the unit interval) is shortened by bisection on the
//! step length until the ice line sits on the switching latitude or the
//! boundary within the event tolerance. What happens there is decided from
//! the two one-sided ice-line velocities:
//!
//! * both point the same way: cross (or clamp, at a boundary);
//! * they point into `rho` from both sides: pin `eta = rho` and keep
//!   integrating the temperatures with `eta' = 0` until the velocities agree
//!   again.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::error::invalid;
use crate::model::{Model, ModelState, Side};
use crate::ode::DormandPrince;
use crate::reduced::{build_h, ReducedPoly};
use crate::{Error, Result};

const STABLE_STEP: f64 = 2.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    #[default]
    DormandPrince45,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOpts {
    pub method: Method,
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    pub initial_step: f64,
    /// Ice-line accuracy of located events.
    pub event_tol: f64,
    pub t_end: f64,
    /// Stop once every component of the velocity is below this. Zero
    /// disables the check.
    pub eq_tol: f64,
    /// Minimum spacing of stored samples; zero keeps every accepted step.
    pub output_interval: f64,
    pub max_steps: usize,
}

impl Default for IntegratorOpts {
    fn default() -> Self {
        Self {
            method: Method::DormandPrince45,
            rtol: 1e-9,
            atol: 1e-9,
            max_step: 1.0,
            initial_step: 1e-3,
            event_tol: 1e-10,
            t_end: 1e4,
            eq_tol: 1e-8,
            output_interval: 0.0,
            max_steps: 5_000_000,
        }
    }
}

impl IntegratorOpts {
    pub fn with_t_end(mut self, t_end: f64) -> Self {
        self.t_end = t_end;
        self
    }

    pub fn with_eq_tol(mut self, eq_tol: f64) -> Self {
        self.eq_tol = eq_tol;
        self
    }

    pub fn with_max_step(mut self, max_step: f64) -> Self {
        self.max_step = max_step;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [self.rtol, self.atol, self.max_step, self.initial_step, self.event_tol];
        if positive.iter().any(|v| !(*v > 0.0)) {
            return Err(invalid("integrator tolerances and step sizes must be positive"));
        }
        if !(self.t_end >= 0.0) || self.eq_tol < 0.0 || self.output_interval < 0.0 {
            return Err(invalid("t_end, eq_tol and output_interval must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    /// Crossed `rho` moving poleward.
    CrossPoleward,
    /// Crossed `rho` moving equatorward.
    CrossEquatorward,
    SlidingOnset,
    SlidingExit,
    /// Ice line clamped at 0.
    BoundarySnowball,
    /// Ice line clamped at 1.
    BoundaryIceFree,
    /// Left a clamped boundary.
    BoundaryRelease,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::CrossPoleward => "cross_poleward",
            EventKind::CrossEquatorward => "cross_equatorward",
            EventKind::SlidingOnset => "sliding_onset",
            EventKind::SlidingExit => "sliding_exit",
            EventKind::BoundarySnowball => "snowball",
            EventKind::BoundaryIceFree => "icefree",
            EventKind::BoundaryRelease => "boundary_release",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub t: f64,
    pub eta: f64,
    pub kind: EventKind,
}

/// How the ice line currently moves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Free(Side),
    Sliding,
    ClampedSnowball,
    ClampedIceFree,
}

impl Regime {
    pub fn is_pinned(self) -> bool {
        !matches!(self, Regime::Free(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Horizon,
    Equilibrium,
    StepLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// Event recorded at each sample, if any.
    pub marks: Vec<Option<EventKind>>,
    pub events: Vec<Event>,
    pub termination: Termination,
    pub final_regime: Regime,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("trajectory has at least one sample")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn final_eta(&self) -> f64 {
        *self.final_state().last().unwrap()
    }

    pub fn etas(&self) -> impl Iterator<Item = f64> + '_ {
        self.states.iter().map(|s| *s.last().unwrap())
    }
}

/// A vector field made of one or two smooth branches split at `eta = rho`.
trait SwitchedField {
    fn dim(&self) -> usize;
    fn rho(&self) -> Option<f64>;
    fn rhs(&self, y: &[f64], side: Side, out: &mut [f64]);
    /// Largest linear decay rate; bounds the explicitly stable step.
    fn fastest_rate(&self) -> f64;

    fn side_of(&self, eta: f64) -> Side {
        match self.rho() {
            Some(rho) if eta < rho => Side::Equatorward,
            _ => Side::Poleward,
        }
    }
}

impl SwitchedField for Model {
    fn dim(&self) -> usize {
        self.state_len()
    }

    fn rho(&self) -> Option<f64> {
        Model::rho(self)
    }

    fn rhs(&self, y: &[f64], side: Side, out: &mut [f64]) {
        self.rhs_into(y, side, out);
    }

    fn fastest_rate(&self) -> f64 {
        self.fast_rates().into_iter().fold(0.0, f64::max)
    }
}

struct ReducedFlow<'a> {
    h: &'a ReducedPoly,
    eps: f64,
}

impl SwitchedField for ReducedFlow<'_> {
    fn dim(&self) -> usize {
        1
    }

    fn rho(&self) -> Option<f64> {
        self.h.rho()
    }

    fn rhs(&self, y: &[f64], side: Side, out: &mut [f64]) {
        out[0] = self.eps * self.h.piece(side).eval(y[0]);
    }

    fn fastest_rate(&self) -> f64 {
        0.0
    }
}

struct Engine<'a, F: SwitchedField> {
    field: &'a F,
    opts: IntegratorOpts,
    scratch: Vec<f64>,
}

enum Boundary {
    Sigma,
    Low,
    High,
}

impl<'a, F: SwitchedField> Engine<'a, F> {
    fn velocity(&mut self, y: &[f64], side: Side) -> f64 {
        let n = y.len();
        self.field.rhs(y, side, &mut self.scratch);
        self.scratch[n - 1]
    }

    fn effective_rhs(field: &F, regime: Regime, y: &[f64], out: &mut [f64]) {
        let side = match regime {
            Regime::Free(side) => side,
            _ => field.side_of(*y.last().unwrap()),
        };
        field.rhs(y, side, out);
        if regime.is_pinned() {
            *out.last_mut().unwrap() = 0.0;
        }
    }

    /// Regime at a state whose ice line sits exactly on `rho`.
    fn decide_at_sigma(&mut self, y: &[f64]) -> Regime {
        let minus = self.velocity(y, Side::Equatorward);
        let plus = self.velocity(y, Side::Poleward);
        if minus > 0.0 && plus < 0.0 {
            Regime::Sliding
        } else if plus > 0.0 {
            Regime::Free(Side::Poleward)
        } else if minus < 0.0 {
            Regime::Free(Side::Equatorward)
        } else {
            Regime::Sliding
        }
    }

    fn decide_at_boundary(&mut self, y: &[f64], high: bool) -> Regime {
        let eta = *y.last().unwrap();
        let side = self.field.side_of(eta);
        let v = self.velocity(y, side);
        match (high, v) {
            (false, v) if v < 0.0 => Regime::ClampedSnowball,
            (true, v) if v > 0.0 => Regime::ClampedIceFree,
            _ => Regime::Free(side),
        }
    }

    fn initial_regime(&mut self, y: &[f64]) -> Regime {
        let eta = *y.last().unwrap();
        if Some(eta) == self.field.rho() {
            return self.decide_at_sigma(y);
        }
        if eta == 0.0 || eta == 1.0 {
            return self.decide_at_boundary(y, eta == 1.0);
        }
        Regime::Free(self.field.side_of(eta))
    }

    /// Which event, if any, the step to `y_new` triggers.
    fn triggered(&self, regime: Regime, eta_new: f64) -> Option<Boundary> {
        let Regime::Free(side) = regime else {
            return None;
        };
        if eta_new < 0.0 {
            return Some(Boundary::Low);
        }
        if eta_new > 1.0 {
            return Some(Boundary::High);
        }
        match (self.field.rho(), side) {
            (Some(rho), Side::Equatorward) if eta_new >= rho => Some(Boundary::Sigma),
            (Some(rho), Side::Poleward) if eta_new < rho => Some(Boundary::Sigma),
            _ => None,
        }
    }

    fn run(&mut self, y0: &[f64]) -> Result<Trajectory> {
        self.opts.validate()?;
        let dim = self.field.dim();
        if y0.len() != dim {
            return Err(invalid("initial state has the wrong length"));
        }
        let eta0 = y0[dim - 1];
        if !(0.0..=1.0).contains(&eta0) {
            return Err(invalid("initial ice line must lie in [0, 1]"));
        }
        if y0.iter().any(|v| !v.is_finite()) {
            return Err(invalid("initial state must be finite"));
        }
        let mut opts = self.opts;
        // The real-axis stability interval of the scheme ends near -3.3;
        // stepping at its edge makes the error controller chatter.
        let rate = self.field.fastest_rate();
        if rate > 0.0 {
            opts.max_step = opts.max_step.min(STABLE_STEP / rate);
        }
        let mut stepper = DormandPrince::new(dim, opts.rtol, opts.atol);
        let mut y = y0.to_vec();
        let mut y_new = vec![0.0; dim];
        let mut probe = vec![0.0; dim];
        let mut deriv = vec![0.0; dim];
        let mut t = 0.0;
        let mut h = opts.initial_step.min(opts.max_step);
        let mut regime = self.initial_regime(&y);

        let mut traj = Trajectory {
            times: vec![t],
            states: vec![y.clone()],
            marks: vec![None],
            events: Vec::new(),
            termination: Termination::Horizon,
            final_regime: regime,
        };
        let mut initial_mark = None;
        match regime {
            Regime::Sliding => initial_mark = Some(EventKind::SlidingOnset),
            Regime::ClampedSnowball => initial_mark = Some(EventKind::BoundarySnowball),
            Regime::ClampedIceFree => initial_mark = Some(EventKind::BoundaryIceFree),
            Regime::Free(_) => {}
        }
        if let Some(kind) = initial_mark {
            traj.marks[0] = Some(kind);
            traj.events.push(Event { t, eta: eta0, kind });
        }
        let mut last_sample = t;
        let mut steps = 0usize;

        loop {
            if opts.eq_tol > 0.0 {
                Self::effective_rhs(self.field, regime, &y, &mut deriv);
                if deriv.iter().all(|d| d.abs() < opts.eq_tol) {
                    traj.termination = Termination::Equilibrium;
                    break;
                }
            }
            if t >= opts.t_end {
                traj.termination = Termination::Horizon;
                break;
            }
            if steps >= opts.max_steps {
                traj.termination = Termination::StepLimit;
                break;
            }
            h = h.min(opts.max_step).min(opts.t_end - t);
            let field = self.field;
            let mut f = |s: &[f64], out: &mut [f64]| Self::effective_rhs(field, regime, s, out);
            let trial = stepper.step(&mut f, &y, h, &mut y_new);
            let ok = trial.error.is_finite() && trial.error <= 1.0 && y_new.iter().all(|v| v.is_finite());
            if !ok {
                h *= if trial.error.is_finite() {
                    DormandPrince::next_factor(trial.error)
                } else {
                    0.2
                };
                if h < 1e-14 * t.abs().max(1.0) {
                    return Err(Error::StepFailure { t, step: h, state: y });
                }
                continue;
            }
            steps += 1;

            let mut mark = None;
            let mut step_taken = h;
            if let Some(kind) = self.triggered(regime, y_new[dim - 1]) {
                let target = match kind {
                    Boundary::Sigma => self.field.rho().unwrap(),
                    Boundary::Low => 0.0,
                    Boundary::High => 1.0,
                };
                // Shortest step that still triggers, by bisection.
                let (mut lo, mut hi) = (0.0, h);
                for _ in 0..200 {
                    if (y_new[dim - 1] - target).abs() <= opts.event_tol || hi - lo <= 1e-15 * t.abs().max(1.0) {
                        break;
                    }
                    let mid = 0.5 * (lo + hi);
                    let mut f = |s: &[f64], out: &mut [f64]| Self::effective_rhs(field, regime, s, out);
                    stepper.step(&mut f, &y, mid, &mut probe);
                    if self.triggered(regime, probe[dim - 1]).is_some() {
                        hi = mid;
                        y_new.copy_from_slice(&probe);
                    } else {
                        lo = mid;
                    }
                }
                step_taken = hi;
                y_new[dim - 1] = target;
                regime = match kind {
                    Boundary::Sigma => self.decide_at_sigma(&y_new),
                    Boundary::Low => self.decide_at_boundary(&y_new, false),
                    Boundary::High => self.decide_at_boundary(&y_new, true),
                };
                mark = match (kind, regime) {
                    (Boundary::Sigma, Regime::Sliding) => Some(EventKind::SlidingOnset),
                    (Boundary::Sigma, Regime::Free(Side::Poleward)) => Some(EventKind::CrossPoleward),
                    (Boundary::Sigma, Regime::Free(Side::Equatorward)) => Some(EventKind::CrossEquatorward),
                    (_, Regime::ClampedSnowball) => Some(EventKind::BoundarySnowball),
                    (_, Regime::ClampedIceFree) => Some(EventKind::BoundaryIceFree),
                    _ => None,
                };
            }

            t += step_taken;
            core::mem::swap(&mut y, &mut y_new);
            h = step_taken * DormandPrince::next_factor(trial.error);

            // Release from pinned regimes.
            match regime {
                Regime::Sliding => {
                    let minus = self.velocity(&y, Side::Equatorward);
                    let plus = self.velocity(&y, Side::Poleward);
                    if !(minus > 0.0 && plus < 0.0) && (minus != 0.0 || plus != 0.0) && mark.is_none() {
                        regime = if plus > 0.0 {
                            Regime::Free(Side::Poleward)
                        } else {
                            Regime::Free(Side::Equatorward)
                        };
                        mark = Some(EventKind::SlidingExit);
                    }
                }
                Regime::ClampedSnowball | Regime::ClampedIceFree if mark.is_none() => {
                    let high = regime == Regime::ClampedIceFree;
                    let next = self.decide_at_boundary(&y, high);
                    if !next.is_pinned() {
                        regime = next;
                        mark = Some(EventKind::BoundaryRelease);
                    }
                }
                _ => {}
            }

            if let Some(kind) = mark {
                traj.events.push(Event {
                    t,
                    eta: y[dim - 1],
                    kind,
                });
            }
            if mark.is_some() || t - last_sample >= opts.output_interval || t >= opts.t_end {
                traj.times.push(t);
                traj.states.push(y.clone());
                traj.marks.push(mark);
                last_sample = t;
            }
        }

        if *traj.times.last().unwrap() != t {
            traj.times.push(t);
            traj.states.push(y.clone());
            traj.marks.push(None);
        }
        traj.final_regime = regime;
        Ok(traj)
    }
}

/// Integrate the full system from `state0`.
pub fn integrate(model: &Model, state0: &ModelState, opts: &IntegratorOpts) -> Result<Trajectory> {
    let mut engine = Engine {
        field: model,
        opts: *opts,
        scratch: vec![0.0; model.state_len()],
    };
    engine.run(state0.as_slice())
}

/// Integrate the scalar slow flow `eta' = eps h(eta)`.
pub fn integrate_reduced(h: &ReducedPoly, eps: f64, eta0: f64, opts: &IntegratorOpts) -> Result<Trajectory> {
    if !(eps >= 0.0) {
        return Err(invalid("eps must be non-negative"));
    }
    let flow = ReducedFlow { h, eps };
    let mut engine = Engine {
        field: &flow,
        opts: *opts,
        scratch: vec![0.0; 1],
    };
    engine.run(&[eta0])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FenichelOpts {
    /// Initial ice line is `eta_star - eta_offset`.
    pub eta_offset: f64,
    /// Added to every temperature mode of the initial critical-manifold state.
    pub temp_kick: f64,
    /// Slow time at which the deviation is measured, in units of
    /// `1/|h'(eta_star)|`.
    pub slow_time: f64,
}

impl Default for FenichelOpts {
    fn default() -> Self {
        Self {
            eta_offset: 0.05,
            temp_kick: 0.5,
            slow_time: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FenichelReport {
    /// `(eps, max_n |T_2n - f_2n(eta)|)` at the measuring time.
    pub deviations: Vec<(f64, f64)>,
    /// Least-squares slope of `log deviation` against `log eps`.
    pub slope: Option<f64>,
    /// `max |f_2n'| * max |h|` over the ice lines visited.
    pub scale: f64,
}

/// Distance to the critical manifold at a fixed slow time, for several `eps`.
/// An `O(eps)` slow manifold shows up as a slope near one.
pub fn fenichel_check(model: &Model, eta_star: f64, eps_list: &[f64], fopts: &FenichelOpts) -> Result<FenichelReport> {
    if !model.variant().is_diffusive() {
        return Err(invalid("fenichel_check needs diffusive transport"));
    }
    let h = build_h(model);
    let slope_h = h.slope(eta_star);
    if !(slope_h < 0.0) {
        return Err(invalid("eta_star is not a stable root"));
    }
    let eta0 = (eta_star - fopts.eta_offset).clamp(0.0, 1.0);
    let tau = fopts.slow_time / slope_h.abs();

    let (lo, hi) = (eta0.min(eta_star), eta0.max(eta_star));
    let mut max_df: f64 = 0.0;
    let mut max_h: f64 = 0.0;
    for i in 0..=200 {
        let eta = lo + (hi - lo) * i as f64 / 200.0;
        max_h = max_h.max(h.eval(eta).abs());
        for f in model.slow_manifold_polys(model.side_of(eta)).unwrap() {
            max_df = max_df.max(f.derivative().eval(eta).abs());
        }
    }

    let mut deviations = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let m = Model::new(model.params().clone().with_rate(eps))?;
        let mut state = m.slow_manifold_state(eta0);
        let n = state.0.len() - 1;
        for v in &mut state.0[..n] {
            *v += fopts.temp_kick;
        }
        let opts = IntegratorOpts::default()
            .with_t_end(tau / eps)
            .with_eq_tol(0.0)
            .with_max_step(1.0);
        let traj = integrate(&m, &state, &opts)?;
        let end = traj.final_state();
        let eta = end[n];
        let f = m.slow_manifold_polys(m.side_of(eta)).unwrap();
        let dev = f
            .iter()
            .enumerate()
            .map(|(k, fk)| (end[k] - fk.eval(eta)).abs())
            .fold(0.0, f64::max);
        deviations.push((eps, dev));
    }

    let slope = log_log_slope(&deviations);
    Ok(FenichelReport {
        deviations,
        slope,
        scale: max_df * max_h,
    })
}

fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (math::ln(*x), math::ln(*y)))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelParams;
    use crate::reduced::{find_roots, RootOptions, Stability};

    #[test]
    fn frozen_iceline_relaxes_temperatures() {
        let m = Model::new(ModelParams::budyko_modern(0.35).with_rate(0.0)).unwrap();
        let start = ModelState(vec![0.0, 0.0, 0.6]);
        let traj = integrate(&m, &start, &IntegratorOpts::default().with_t_end(50.0)).unwrap();
        let target = m.slow_manifold_state(0.6);
        assert_eq!(traj.final_eta(), 0.6);
        for (a, b) in traj.final_state().iter().zip(target.as_slice()) {
            assert!((a - b).abs() < 1e-7);
        }
    }

    #[test]
    fn reduced_flow_reaches_stable_root() {
        let m = Model::new(ModelParams::budyko_modern(0.35)).unwrap();
        let h = build_h(&m);
        let stable = find_roots(&h, &RootOptions::default())
            .into_iter()
            .find(|r| r.stability == Stability::Stable)
            .unwrap();
        let traj = integrate_reduced(&h, 1e-2, 0.6, &IntegratorOpts::default()).unwrap();
        assert_eq!(traj.termination, Termination::Equilibrium);
        assert!((traj.final_eta() - stable.eta).abs() < 1e-5);
    }

    #[test]
    fn reduced_flow_clamps_at_equator() {
        let m = Model::new(ModelParams::budyko_modern(0.35)).unwrap();
        let h = build_h(&m);
        let traj = integrate_reduced(&h, 1e-2, 0.1, &IntegratorOpts::default()).unwrap();
        assert_eq!(traj.final_eta(), 0.0);
        assert_eq!(traj.final_regime, Regime::ClampedSnowball);
        assert_eq!(traj.events.last().unwrap().kind, EventKind::BoundarySnowball);
    }

    #[test]
    fn rejects_bad_initial_data() {
        let m = Model::new(ModelParams::budyko_modern(0.35)).unwrap();
        assert!(integrate(&m, &ModelState(vec![0.0, 0.0, 1.5]), &IntegratorOpts::default()).is_err());
        assert!(integrate(&m, &ModelState(vec![0.0, 0.5]), &IntegratorOpts::default()).is_err());
        let bad = IntegratorOpts {
            rtol: 0.0,
            ..IntegratorOpts::default()
        };
        assert!(integrate(&m, &ModelState(vec![0.0, 0.0, 0.5]), &bad).is_err());
    }

    #[test]
    fn slope_fit() {
        let pts = [(1e-2, 3e-3), (1e-3, 3e-4), (1e-4, 3e-5)];
        assert!((log_log_slope(&pts).unwrap() - 1.0).abs() < 1e-12);
        assert!(log_log_slope(&pts[..1]).is_none());
    }
}
