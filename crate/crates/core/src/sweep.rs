//! One-parameter bifurcation sweeps of the reduced flow.
//!
//! Every grid value gets its own model and root set. Roots are chained into
//! branches by nearest-neighbour matching in `eta` among roots of the same
//! stability. Where a branch ends inside the grid the parameter is refined by
//! bisection on whether the root still exists.

use alloc::vec::Vec;

use crate::error::invalid;
use crate::model::{Model, ModelParams, Transport};
use crate::reduced::{build_h, find_equilibria, Equilibrium, RootOptions, Stability};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepParam {
    /// OLR offset `A`.
    OlrOffset,
    /// Diffusivity `D`.
    Diffusivity,
    /// Relaxation coefficient `C`.
    Coupling,
    /// Mean insolation `Q`.
    SolarMean,
}

impl SweepParam {
    pub fn symbol(self) -> &'static str {
        match self {
            SweepParam::OlrOffset => "A",
            SweepParam::Diffusivity => "D",
            SweepParam::Coupling => "C",
            SweepParam::SolarMean => "Q",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Self> {
        match s {
            "A" => Some(SweepParam::OlrOffset),
            "D" => Some(SweepParam::Diffusivity),
            "C" => Some(SweepParam::Coupling),
            "Q" => Some(SweepParam::SolarMean),
            _ => None,
        }
    }

    /// `base` with this parameter set to `value`.
    pub fn apply(self, base: &ModelParams, value: f64) -> Result<ModelParams> {
        let mut p = base.clone();
        match self {
            SweepParam::OlrOffset => p.olr_offset = value,
            SweepParam::SolarMean => p.solar_mean = value,
            SweepParam::Diffusivity => match p.transport {
                Transport::Diffusive { .. } => p.transport = Transport::Diffusive { diffusivity: value },
                Transport::RelaxToMean { .. } => return Err(invalid("cannot sweep D with relaxation transport")),
            },
            SweepParam::Coupling => match p.transport {
                Transport::RelaxToMean { .. } => p.transport = Transport::RelaxToMean { coupling: value },
                Transport::Diffusive { .. } => return Err(invalid("cannot sweep C with diffusive transport")),
            },
        }
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub base: ModelParams,
    /// Parameter accuracy of refined branch ends.
    pub fold_tol: f64,
    /// Largest ice-line jump allowed between neighbouring points of a branch.
    pub match_radius: f64,
    pub roots: RootOptions,
}

impl SweepSpec {
    pub fn new(param: SweepParam, min: f64, max: f64, count: usize, base: ModelParams) -> Self {
        Self {
            param,
            min,
            max,
            count,
            base,
            fold_tol: 1e-3,
            match_radius: 0.05,
            roots: RootOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min < self.max) || !self.min.is_finite() || !self.max.is_finite() {
            return Err(invalid("sweep needs finite min < max"));
        }
        if self.count < 2 {
            return Err(invalid("sweep needs at least two grid points"));
        }
        if !(self.fold_tol > 0.0) || !(self.match_radius > 0.0) {
            return Err(invalid("fold tolerance and matching radius must be positive"));
        }
        self.param.apply(&self.base, self.min)?.validate()
    }

    pub fn grid(&self) -> Vec<f64> {
        let n = self.count;
        (0..n)
            .map(|i| {
                if i == n - 1 {
                    self.max
                } else {
                    self.min + (self.max - self.min) * i as f64 / (n - 1) as f64
                }
            })
            .collect()
    }
}

/// All rest states at one parameter value.
pub fn equilibria_at(spec: &SweepSpec, value: f64) -> Result<Vec<Equilibrium>> {
    let model = Model::new(spec.param.apply(&spec.base, value)?)?;
    let h = build_h(&model);
    Ok(find_equilibria(&model, &h, &spec.roots))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchPoint {
    pub param: f64,
    pub eta: f64,
    pub global_mean: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EndpointKind {
    /// Ends where it meets a branch of opposite stability.
    Fold,
    /// Ends at the edge of the parameter grid.
    DomainEdge,
    /// Ends by running into `eta = 0`, `eta = 1` or the switching latitude.
    BoundaryCollision,
}

impl EndpointKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EndpointKind::Fold => "fold",
            EndpointKind::DomainEdge => "domain_edge",
            EndpointKind::BoundaryCollision => "boundary_collision",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Endpoint {
    pub kind: EndpointKind,
    /// Refined parameter of the end; the grid value at a domain edge.
    pub param: f64,
    pub eta: f64,
    /// Ice-line gap to the partner branch at the refined parameter (folds).
    pub partner_gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BifurcationBranch {
    pub id: usize,
    pub stability: Stability,
    pub points: Vec<BranchPoint>,
    pub start: Endpoint,
    pub end: Endpoint,
}

impl BifurcationBranch {
    /// Parameter range covered, using refined ends.
    pub fn span(&self) -> (f64, f64) {
        let (a, b) = (self.start.param, self.end.param);
        (a.min(b), a.max(b))
    }
}

/// A fold or boundary collision, with the branches that end or start there.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub kind: EndpointKind,
    pub param: f64,
    pub eta: f64,
    pub branches: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub param: SweepParam,
    pub grid: Vec<f64>,
    pub branches: Vec<BifurcationBranch>,
    pub transitions: Vec<Transition>,
}

/// Sequential sweep. The `ebm` binary evaluates grid points in parallel
/// with [`equilibria_at`] and then calls [`assemble`].
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let grid = spec.grid();
    let points = grid
        .iter()
        .map(|&p| equilibria_at(spec, p))
        .collect::<Result<Vec<_>>>()?;
    assemble(spec, &grid, points)
}

struct Open {
    stability: Stability,
    points: Vec<BranchPoint>,
    first: usize,
    last: usize,
}

/// Chain per-point equilibria into branches and refine their ends.
pub fn assemble(spec: &SweepSpec, grid: &[f64], points: Vec<Vec<Equilibrium>>) -> Result<SweepResult> {
    if grid.len() != points.len() {
        return Err(invalid("grid and equilibria lists differ in length"));
    }
    let mut open: Vec<Open> = Vec::new();
    let mut closed: Vec<Open> = Vec::new();

    for (i, eqs) in points.iter().enumerate() {
        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        for (bi, b) in open.iter().enumerate() {
            let last = b.points.last().unwrap().eta;
            for (ci, c) in eqs.iter().enumerate() {
                let d = (c.eta_star - last).abs();
                if c.stability == b.stability && d <= spec.match_radius {
                    pairs.push((d, bi, ci));
                }
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut branch_taken = alloc::vec![false; open.len()];
        let mut cand_taken = alloc::vec![false; eqs.len()];
        for (_, bi, ci) in pairs {
            if branch_taken[bi] || cand_taken[ci] {
                continue;
            }
            branch_taken[bi] = true;
            cand_taken[ci] = true;
            let c = &eqs[ci];
            open[bi].points.push(BranchPoint {
                param: grid[i],
                eta: c.eta_star,
                global_mean: c.global_mean,
            });
            open[bi].last = i;
        }
        let mut still_open = Vec::with_capacity(open.len());
        for (b, taken) in open.into_iter().zip(branch_taken) {
            if taken {
                still_open.push(b);
            } else {
                closed.push(b);
            }
        }
        open = still_open;
        for (c, taken) in eqs.iter().zip(cand_taken) {
            if !taken {
                open.push(Open {
                    stability: c.stability,
                    points: alloc::vec![BranchPoint {
                        param: grid[i],
                        eta: c.eta_star,
                        global_mean: c.global_mean,
                    }],
                    first: i,
                    last: i,
                });
            }
        }
    }
    closed.extend(open);
    closed.sort_by(|a, b| {
        a.first
            .cmp(&b.first)
            .then(a.points[0].eta.total_cmp(&b.points[0].eta))
    });

    let last_index = grid.len() - 1;
    let rho = spec.base.albedo.rho();
    let mut branches: Vec<BifurcationBranch> = Vec::with_capacity(closed.len());
    for (id, b) in closed.iter().enumerate() {
        let start = if b.first == 0 {
            edge(b.points[0])
        } else {
            let (param, eta) = refine_end(spec, b.stability, b.points[0].eta, grid[b.first], grid[b.first - 1])?;
            Endpoint {
                kind: classify_end(b.stability, eta, rho, spec.match_radius),
                param,
                eta,
                partner_gap: None,
            }
        };
        let end = if b.last == last_index {
            edge(*b.points.last().unwrap())
        } else {
            let p = b.points.last().unwrap();
            let (param, eta) = refine_end(spec, b.stability, p.eta, grid[b.last], grid[b.last + 1])?;
            Endpoint {
                kind: classify_end(b.stability, eta, rho, spec.match_radius),
                param,
                eta,
                partner_gap: None,
            }
        };
        branches.push(BifurcationBranch {
            id,
            stability: b.stability,
            points: b.points.clone(),
            start,
            end,
        });
    }

    pair_folds(spec, &mut branches, &closed);
    let transitions = collect_transitions(spec, &branches);
    Ok(SweepResult {
        param: spec.param,
        grid: grid.to_vec(),
        branches,
        transitions,
    })
}

fn edge(p: BranchPoint) -> Endpoint {
    Endpoint {
        kind: EndpointKind::DomainEdge,
        param: p.param,
        eta: p.eta,
        partner_gap: None,
    }
}

/// Provisional class of an interior end; folds are confirmed by pairing.
fn classify_end(stability: Stability, eta: f64, rho: Option<f64>, radius: f64) -> EndpointKind {
    let near_edge = eta <= radius || eta >= 1.0 - radius;
    let near_rho = rho.is_some_and(|r| (eta - r).abs() <= radius);
    match stability {
        Stability::BoundarySnowball | Stability::BoundaryIceFree | Stability::SlidingAtRho => {
            EndpointKind::BoundaryCollision
        }
        _ if near_edge || near_rho => EndpointKind::BoundaryCollision,
        _ => EndpointKind::Fold,
    }
}

/// The root of the given stability nearest `eta` within the match radius.
fn locate(spec: &SweepSpec, value: f64, stability: Stability, eta: f64) -> Result<Option<f64>> {
    Ok(equilibria_at(spec, value)?
        .into_iter()
        .filter(|e| e.stability == stability && (e.eta_star - eta).abs() <= spec.match_radius)
        .map(|e| e.eta_star)
        .min_by(|a, b| (a - eta).abs().total_cmp(&(b - eta).abs())))
}

/// Bisect between `present` (root exists) and `absent` until the two are
/// `fold_tol` apart. Returns the last parameter where the root exists and
/// its ice line there.
fn refine_end(spec: &SweepSpec, stability: Stability, eta: f64, present: f64, absent: f64) -> Result<(f64, f64)> {
    let (mut yes, mut no, mut eta) = (present, absent, eta);
    for _ in 0..64 {
        if (no - yes).abs() <= spec.fold_tol {
            break;
        }
        let mid = 0.5 * (yes + no);
        match locate(spec, mid, stability, eta)? {
            Some(e) => {
                yes = mid;
                eta = e;
            }
            None => no = mid,
        }
    }
    Ok((yes, eta))
}

fn opposite(a: Stability, b: Stability) -> bool {
    matches!(
        (a, b),
        (Stability::Stable, Stability::Unstable) | (Stability::Unstable, Stability::Stable)
    )
}

/// Match fold ends pairwise. Two ends pair when they have opposite stability,
/// lie in the same grid gap on the same side and are close in `eta`. Ends
/// provisionally marked as folds that find no partner become collisions.
fn pair_folds(spec: &SweepSpec, branches: &mut [BifurcationBranch], raw: &[Open]) {
    // (branch index, is_end, grid gap index)
    let mut ends: Vec<(usize, bool, usize)> = Vec::new();
    let last_index = spec.count - 1;
    for (i, b) in raw.iter().enumerate() {
        if b.first != 0 {
            ends.push((i, false, b.first));
        }
        if b.last != last_index {
            ends.push((i, true, b.last + 1));
        }
    }
    let endpoint = |br: &[BifurcationBranch], (i, is_end, _): (usize, bool, usize)| -> Endpoint {
        if is_end {
            br[i].end
        } else {
            br[i].start
        }
    };
    let mut paired = alloc::vec![false; ends.len()];
    for a in 0..ends.len() {
        if paired[a] {
            continue;
        }
        let ea = endpoint(branches, ends[a]);
        let mut best: Option<(f64, usize)> = None;
        for b in (a + 1)..ends.len() {
            if paired[b] || ends[a].1 != ends[b].1 || ends[a].2 != ends[b].2 {
                continue;
            }
            if !opposite(branches[ends[a].0].stability, branches[ends[b].0].stability) {
                continue;
            }
            let eb = endpoint(branches, ends[b]);
            let gap = (ea.eta - eb.eta).abs();
            if gap <= 2.0 * spec.match_radius && best.is_none_or(|(g, _)| gap < g) {
                best = Some((gap, b));
            }
        }
        if let Some((gap, b)) = best {
            paired[a] = true;
            paired[b] = true;
            for &k in &[a, b] {
                let (i, is_end, _) = ends[k];
                let ep = if is_end { &mut branches[i].end } else { &mut branches[i].start };
                ep.kind = EndpointKind::Fold;
                ep.partner_gap = Some(gap);
            }
        }
    }
    for (k, &(i, is_end, _)) in ends.iter().enumerate() {
        if !paired[k] {
            let ep = if is_end { &mut branches[i].end } else { &mut branches[i].start };
            if ep.kind == EndpointKind::Fold {
                ep.kind = EndpointKind::BoundaryCollision;
            }
        }
    }
}

fn collect_transitions(spec: &SweepSpec, branches: &[BifurcationBranch]) -> Vec<Transition> {
    let mut out: Vec<Transition> = Vec::new();
    for b in branches {
        for ep in [b.start, b.end] {
            if ep.kind == EndpointKind::DomainEdge {
                continue;
            }
            let merge = out.iter_mut().find(|t| {
                t.kind == ep.kind
                    && (t.param - ep.param).abs() <= 2.0 * spec.fold_tol.max(1e-12)
                    && (t.eta - ep.eta).abs() <= 2.0 * spec.match_radius
            });
            match merge {
                Some(t) => {
                    if !t.branches.contains(&b.id) {
                        t.branches.push(b.id);
                    }
                }
                None => out.push(Transition {
                    kind: ep.kind,
                    param: ep.param,
                    eta: ep.eta,
                    branches: alloc::vec![b.id],
                }),
            }
        }
    }
    out.sort_by(|a, b| a.param.total_cmp(&b.param));
    out
}

/// Parameter intervals where at least two interior attractors coexist
/// (stable roots and sliding states; boundary states are not counted).
pub fn bistability_window(branches: &[BifurcationBranch]) -> Vec<(f64, f64)> {
    let attracting: Vec<(f64, f64)> = branches
        .iter()
        .filter(|b| matches!(b.stability, Stability::Stable | Stability::SlidingAtRho))
        .map(|b| b.span())
        .collect();
    let mut cuts: Vec<f64> = attracting.iter().flat_map(|&(a, b)| [a, b]).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut out: Vec<(f64, f64)> = Vec::new();
    for w in cuts.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        let cover = attracting.iter().filter(|&&(a, b)| a <= mid && mid <= b).count();
        if cover >= 2 {
            match out.last_mut() {
                Some(last) if last.1 == w[0] => last.1 = w[1],
                _ => out.push((w[0], w[1])),
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_endpoints_exact() {
        let spec = SweepSpec::new(SweepParam::OlrOffset, 140.0, 200.0, 601, ModelParams::jormungand_cold());
        let g = spec.grid();
        assert_eq!(g.len(), 601);
        assert_eq!(g[0], 140.0);
        assert_eq!(g[600], 200.0);
        assert!((g[1] - 140.1).abs() < 1e-12);
    }

    #[test]
    fn invalid_specs() {
        let base = ModelParams::budyko_modern(0.35);
        assert!(SweepSpec::new(SweepParam::OlrOffset, 2.0, 1.0, 10, base.clone()).validate().is_err());
        assert!(SweepSpec::new(SweepParam::OlrOffset, 1.0, 2.0, 1, base.clone()).validate().is_err());
        assert!(SweepSpec::new(SweepParam::Coupling, 1.0, 2.0, 5, base).validate().is_err());
    }

    #[test]
    fn quiet_two_point_sweep() {
        let spec = SweepSpec::new(SweepParam::OlrOffset, 201.0, 203.0, 2, ModelParams::budyko_modern(0.35));
        let res = run_sweep(&spec).unwrap();
        let interior: Vec<_> = res.branches.iter().filter(|b| b.stability.is_interior()).collect();
        assert_eq!(interior.len(), 2);
        assert!(res.transitions.is_empty());
        assert!(res
            .branches
            .iter()
            .all(|b| b.start.kind == EndpointKind::DomainEdge && b.end.kind == EndpointKind::DomainEdge));
    }

    #[test]
    fn window_from_overlapping_spans() {
        let ep = |param| Endpoint {
            kind: EndpointKind::Fold,
            param,
            eta: 0.5,
            partner_gap: None,
        };
        let branch = |id, s, a, b| BifurcationBranch {
            id,
            stability: s,
            points: Vec::new(),
            start: ep(a),
            end: ep(b),
        };
        let bs = [
            branch(0, Stability::Stable, 140.0, 161.5),
            branch(1, Stability::Stable, 157.0, 200.0),
            branch(2, Stability::Unstable, 150.0, 190.0),
        ];
        assert_eq!(bistability_window(&bs), alloc::vec![(157.0, 161.5)]);
        assert!(bistability_window(&bs[..1]).is_empty());
    }
}
