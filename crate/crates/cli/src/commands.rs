//! Subcommand bodies. Each returns the complete output text so that nothing
//! is written when a later step fails.

use ebm_core::dynamics::{integrate, integrate_reduced, IntegratorOpts, Termination};
use ebm_core::insolation::{s_coefficients, InsolationSpec};
use ebm_core::model::{Model, ModelParams, ModelState};
use ebm_core::reduced::{build_h, equilibria as find_all, Stability};
use ebm_core::sweep::{assemble, bistability_window, equilibria_at, SweepParam, SweepResult, SweepSpec};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::format::{csv_row, sig17};
use crate::CliError;

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable output");
    s.push('\n');
    s
}

/// `{"beta": .., "s": {"0": s_0, "2": s_2, ...}}`, keyed by Legendre degree.
pub fn insolation_coeffs(beta: f64, max_mode: usize) -> Result<String, CliError> {
    let spec = InsolationSpec::exact(beta)?;
    let s = s_coefficients(&spec, max_mode)?;
    let mut coeffs = Map::new();
    for (n, c) in s.coeffs().iter().enumerate() {
        coeffs.insert((2 * n).to_string(), json!(c));
    }
    Ok(to_json(&json!({ "beta": beta, "s": coeffs })))
}

/// Monomial coefficients (constant first) of the reduced flow `h`, or of
/// both branches for the Jormungand albedo.
pub fn reduced_poly(params: &ModelParams) -> Result<String, CliError> {
    let model = Model::new(params.clone())?;
    let h = build_h(&model);
    let value = match h.minus() {
        None => json!({
            "switched": false,
            "degree": h.degree(),
            "h": h.plus().coeffs(),
        }),
        Some(minus) => json!({
            "switched": true,
            "rho": h.rho(),
            "degree": h.degree(),
            "h_minus": minus.coeffs(),
            "h_plus": h.plus().coeffs(),
        }),
    };
    Ok(to_json(&value))
}

#[derive(Debug, Serialize)]
pub struct EquilibriumRecord {
    pub eta: f64,
    pub stability: &'static str,
    #[serde(rename = "T0")]
    pub t0: f64,
    pub slope: f64,
    pub coeffs: Vec<f64>,
}

/// Rest states of the reduced flow. Boundary states (`eta` pinned at 0 or
/// 1) are left out unless `boundary` is set.
pub fn equilibrium_records(params: &ModelParams, boundary: bool) -> Result<Vec<EquilibriumRecord>, CliError> {
    let model = Model::new(params.clone())?;
    Ok(find_all(&model)
        .into_iter()
        .filter(|e| boundary || !matches!(e.stability, Stability::BoundarySnowball | Stability::BoundaryIceFree))
        .map(|e| EquilibriumRecord {
            eta: e.eta_star,
            stability: e.stability.as_str(),
            t0: e.global_mean,
            slope: e.slope,
            coeffs: e.temp_coeffs,
        })
        .collect())
}

pub fn equilibria(params: &ModelParams, boundary: bool) -> Result<String, CliError> {
    Ok(to_json(&equilibrium_records(params, boundary)?))
}

#[derive(Debug, Clone, Copy)]
pub struct SimulateOpts {
    pub eta0: f64,
    pub t_end: f64,
    pub reduced: bool,
    /// Minimum time between rows; zero writes every accepted step.
    pub every: f64,
}

/// Trajectory CSV `t,eta,T0,...,T2N,Tbar,T_iceline,event`. The full system
/// starts on the critical manifold at `eta0`. Temperature columns hold the
/// equatorward profile coefficients; for the reduced flow they are read off
/// the critical manifold.
pub fn simulate(params: &ModelParams, opts: &SimulateOpts) -> Result<String, CliError> {
    if !(0.0..=1.0).contains(&opts.eta0) {
        return Err(CliError::Config("eta0 must lie in [0, 1]".into()));
    }
    if !(opts.t_end > 0.0 && opts.every >= 0.0) {
        return Err(CliError::Config("t-end must be positive and every non-negative".into()));
    }
    let model = Model::new(params.clone())?;
    let mut iopts = IntegratorOpts::default().with_t_end(opts.t_end);
    iopts.output_interval = opts.every;
    iopts.validate()?;

    let traj = if opts.reduced {
        integrate_reduced(&build_h(&model), params.iceline_rate, opts.eta0, &iopts)?
    } else {
        integrate(&model, &model.slow_manifold_state(opts.eta0), &iopts)?
    };
    if traj.termination == Termination::StepLimit {
        return Err(CliError::Numerical(format!(
            "step limit reached at t = {}",
            traj.final_time()
        )));
    }

    let n = params.modes;
    let mut header: Vec<String> = vec!["t".into(), "eta".into()];
    header.extend((0..=n).map(|k| format!("T{}", 2 * k)));
    header.extend(["Tbar".into(), "T_iceline".into(), "event".into()]);
    let mut out = csv_row(header);

    for ((t, y), mark) in traj.times.iter().zip(&traj.states).zip(&traj.marks) {
        let state = if opts.reduced {
            model.slow_manifold_state(y[0])
        } else {
            ModelState(y.clone())
        };
        let derived = model.derived(&state);
        let mut row = vec![sig17(*t), sig17(state.eta())];
        row.extend(model.equatorward_coeffs(&state).into_iter().map(sig17));
        row.push(sig17(derived.global_mean));
        row.push(sig17(derived.iceline_temp));
        row.push(mark.map(|m| m.as_str()).unwrap_or("").to_string());
        out.push_str(&csv_row(row));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy)]
pub struct SweepOpts {
    pub param: SweepParam,
    pub min: f64,
    pub max: f64,
    pub steps: usize,
    pub fold_tol: f64,
}

pub fn sweep_spec(params: &ModelParams, opts: &SweepOpts) -> Result<SweepSpec, CliError> {
    let mut spec = SweepSpec::new(opts.param, opts.min, opts.max, opts.steps, params.clone());
    spec.fold_tol = opts.fold_tol;
    spec.validate()?;
    Ok(spec)
}

/// Grid points are solved in parallel; branch assembly is sequential, so the
/// result does not depend on thread scheduling.
pub fn run_sweep_parallel(spec: &SweepSpec) -> Result<SweepResult, CliError> {
    let grid = spec.grid();
    let points = grid
        .par_iter()
        .map(|&v| equilibria_at(spec, v))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(assemble(spec, &grid, points)?)
}

/// CSV `param,eta,stability,T0,branch_id`, one row per branch point.
pub fn sweep_csv(result: &SweepResult) -> String {
    let mut out = csv_row(["param", "eta", "stability", "T0", "branch_id"].map(String::from));
    for b in &result.branches {
        for p in &b.points {
            out.push_str(&csv_row([
                sig17(p.param),
                sig17(p.eta),
                b.stability.as_str().to_string(),
                sig17(p.global_mean),
                b.id.to_string(),
            ]));
        }
    }
    out
}

/// Branch ends, transitions and bistability windows.
pub fn sweep_summary(result: &SweepResult) -> String {
    let endpoint = |e: &ebm_core::sweep::Endpoint| {
        json!({
            "kind": e.kind.as_str(),
            "param": e.param,
            "eta": e.eta,
            "partner_gap": e.partner_gap,
        })
    };
    let branches: Vec<Value> = result
        .branches
        .iter()
        .map(|b| {
            json!({
                "id": b.id,
                "stability": b.stability.as_str(),
                "points": b.points.len(),
                "start": endpoint(&b.start),
                "end": endpoint(&b.end),
            })
        })
        .collect();
    let transitions: Vec<Value> = result
        .transitions
        .iter()
        .map(|t| {
            json!({
                "kind": t.kind.as_str(),
                "param": t.param,
                "eta": t.eta,
                "branches": t.branches,
            })
        })
        .collect();
    let windows: Vec<[f64; 2]> = bistability_window(&result.branches)
        .into_iter()
        .map(|(a, b)| [a, b])
        .collect();
    to_json(&json!({
        "param": result.param.symbol(),
        "grid": { "min": result.grid.first(), "max": result.grid.last(), "count": result.grid.len() },
        "transitions": transitions,
        "bistability": windows,
        "branches": branches,
    }))
}
