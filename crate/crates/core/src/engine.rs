//! Whole-locus orchestration and stability intervals.

use log::{info, warn};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::continuation::{
    real_axis_segment, solve_pinned, trace_trajectory, BranchArrival, BranchRegistry, ContinuationConfig, Pin,
    TraceOutcome, Trajectory, TrajectoryPoint, Termination,
};
use crate::critical::{critical_points, root_velocity, CriticalKind, CriticalPoint};
use crate::error::{Error, Result};
use crate::plant::{LocusKind, LocusProblem};

/// Real parts above `-AXIS_TOL` count as right half-plane.
pub const AXIS_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootLocusResult {
    pub problem: LocusProblem,
    pub critical_points: Vec<CriticalPoint>,
    pub trajectories: Vec<Trajectory>,
    pub stability_intervals: Vec<(f64, f64)>,
    pub notes: Vec<String>,
}

impl RootLocusResult {
    pub fn stalled_count(&self) -> usize {
        self.trajectories.iter().filter(|t| t.termination == Termination::Stalled).count()
    }
}

/// A root crossing `Re(s) = 0`. `direction` is +1 into the right half-plane,
/// -1 out of it and 0 when tangential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisEvent {
    pub lambda: f64,
    pub omega: f64,
    pub direction: i8,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Item {
    origin: usize,
    dir: usize,
}

fn conj_point(p: &CriticalPoint) -> CriticalPoint {
    CriticalPoint {
        root: p.root.conj(),
        directions: p.directions.iter().map(|d| [d[0], -d[1], d[2]]).collect(),
        ..p.clone()
    }
}

fn same_point(a: &CriticalPoint, b: &CriticalPoint) -> bool {
    a.kind == b.kind
        && (a.root - b.root).norm() <= 1e-9 * a.root.norm().max(1.0)
        && (a.lambda - b.lambda).abs() <= 1e-9 * a.lambda.abs().max(1.0)
}

/// Directions traced explicitly; for symmetric plants the rest are mirrors.
fn traced_half(symmetric: bool, p: &CriticalPoint, d: &[f64; 3]) -> bool {
    !symmetric || p.root.im > 0.0 || (p.root.im == 0.0 && d[1] >= -1e-12)
}

fn mirror_trajectory(t: &Trajectory, origin: usize, branch: Option<usize>) -> Trajectory {
    Trajectory {
        origin,
        direction: [t.direction[0], -t.direction[1], t.direction[2]],
        points: t
            .points
            .iter()
            .map(|p| TrajectoryPoint { omega: if p.omega == 0.0 { 0.0 } else { -p.omega }, ..*p })
            .collect(),
        termination: t.termination,
        branch,
    }
}

fn trace_item(
    problem: &LocusProblem,
    registry: &BranchRegistry,
    config: &ContinuationConfig,
    direct_real: bool,
    item: Item,
) -> TraceOutcome {
    let p = registry.point(item.origin);
    let d = p.directions[item.dir];
    if direct_real && p.root.im == 0.0 && d[1].abs() < 1e-12 && d[0] != 0.0 {
        real_axis_segment(problem, item.origin, d[0].signum(), registry, config)
    } else {
        trace_trajectory(problem, item.origin, d, registry, config)
    }
}

/// Traces the complete root locus of `problem`.
pub fn compute_root_locus(problem: &LocusProblem, config: &ContinuationConfig) -> Result<RootLocusResult> {
    config.validate()?;
    let symmetric = problem.plant().conjugate_symmetric();
    let direct_real = problem.kind() == LocusKind::Gain && symmetric;
    let lmax = problem.lambda_max();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;

    let registry = BranchRegistry::new(critical_points(problem)?);
    let mut items = Vec::new();
    for (id, p) in registry.points().iter().enumerate() {
        let seed = match p.kind {
            CriticalKind::Start => true,
            CriticalKind::CrossingIn => p.lambda <= lmax,
            CriticalKind::Branch => problem.kind() == LocusKind::Gain,
            CriticalKind::CrossingOut => false,
        };
        if !seed {
            continue;
        }
        for (k, d) in p.directions.iter().enumerate() {
            if traced_half(symmetric, p, d) && registry.consume(id, k) {
                items.push(Item { origin: id, dir: k });
            }
        }
    }

    let mut traced: Vec<Trajectory> = Vec::new();
    let mut wave = 0;
    while !items.is_empty() {
        wave += 1;
        info!("wave {wave}: tracing {} trajectories", items.len());
        let outcomes: Vec<TraceOutcome> = pool.install(|| {
            items.par_iter().map(|&it| trace_item(problem, &registry, config, direct_real, it)).collect()
        });
        let mut next = Vec::new();
        for mut out in outcomes {
            if let Some(BranchArrival::Found(cp)) = out.arrival.take() {
                let upper = if symmetric && cp.root.im < 0.0 { conj_point(&cp) } else { cp.clone() };
                let (id, new) = registry.register_branch(upper.clone());
                if new {
                    if symmetric && upper.root.im > 0.0 {
                        let (mid, _) = registry.register_branch(conj_point(&upper));
                        for k in 0..upper.directions.len() {
                            registry.consume(mid, k);
                        }
                    }
                    for (k, d) in upper.directions.iter().enumerate() {
                        if traced_half(symmetric, &upper, d) && registry.consume(id, k) {
                            next.push(Item { origin: id, dir: k });
                        }
                    }
                }
                out.trajectory.branch =
                    if symmetric && cp.root.im < 0.0 { registry.find_branch(cp.root) } else { Some(id) };
            }
            traced.push(out.trajectory);
        }
        items = next;
    }

    let mut points = registry.into_points();
    let mut notes = Vec::new();
    let mut trajectories = Vec::with_capacity(2 * traced.len());
    let find_mirror = |points: &mut Vec<CriticalPoint>, id: usize| -> usize {
        let m = conj_point(&points[id]);
        if let Some(j) = points.iter().position(|q| same_point(q, &m)) {
            j
        } else {
            points.push(m);
            points.len() - 1
        }
    };
    for t in traced {
        let o = &points[t.origin];
        let mirrored = symmetric && (o.root.im > 0.0 || (o.root.im == 0.0 && t.direction[1] > 1e-12));
        if mirrored {
            let mo = find_mirror(&mut points, t.origin);
            let mb = t.branch.map(|b| find_mirror(&mut points, b));
            let m = mirror_trajectory(&t, mo, mb);
            trajectories.push(t);
            trajectories.push(m);
        } else {
            trajectories.push(t);
        }
    }

    // Sort critical points by parameter and remap references.
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a].partial_cmp(&points[b]).unwrap().then(a.cmp(&b)));
    let mut remap = vec![0; points.len()];
    for (new, &old) in order.iter().enumerate() {
        remap[old] = new;
    }
    let critical_points: Vec<CriticalPoint> = order.iter().map(|&i| points[i].clone()).collect();
    for t in &mut trajectories {
        t.origin = remap[t.origin];
        t.branch = t.branch.map(|b| remap[b]);
    }
    trajectories.sort_by(|a, b| {
        a.origin
            .cmp(&b.origin)
            .then(a.direction[1].total_cmp(&b.direction[1]))
            .then(a.direction[0].total_cmp(&b.direction[0]))
            .then(a.direction[2].total_cmp(&b.direction[2]))
    });

    let stalled = trajectories.iter().filter(|t| t.termination == Termination::Stalled).count();
    if stalled > 0 {
        warn!("{stalled} trajectories stalled");
        notes.push(format!("{stalled} trajectories stalled before reaching an endpoint"));
    }

    let mut result =
        RootLocusResult { problem: problem.clone(), critical_points, trajectories, stability_intervals: Vec::new(), notes };
    if problem.sigma0() < 0.0 {
        result.stability_intervals = stability_intervals(&result);
    } else {
        result.notes.push("region does not contain the imaginary axis; no stability intervals".to_string());
    }
    Ok(result)
}

/// Locates every sign change of `Re(s)` along the traced trajectories.
pub fn imaginary_axis_events(result: &RootLocusResult) -> Vec<AxisEvent> {
    let problem = &result.problem;
    if problem.sigma0() >= 0.0 {
        return Vec::new();
    }
    let symmetric = problem.plant().conjugate_symmetric();
    let mut events = Vec::new();
    for t in &result.trajectories {
        for w in t.points.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            let ina = a.sigma >= -AXIS_TOL;
            let inb = b.sigma >= -AXIS_TOL;
            if ina == inb {
                continue;
            }
            let frac = if b.sigma != a.sigma { (0.0 - a.sigma) / (b.sigma - a.sigma) } else { 0.5 };
            let frac = frac.clamp(0.0, 1.0);
            let guess = [0.0, a.omega + frac * (b.omega - a.omega), a.lambda + frac * (b.lambda - a.lambda)];
            let real_mode = symmetric && a.omega == 0.0 && b.omega == 0.0;
            let (lo, hi) = (a.lambda.min(b.lambda), a.lambda.max(b.lambda));
            let y = match solve_pinned(problem, guess, Pin::Sigma(0.0), real_mode) {
                Ok(y) if y[2] >= lo - 1e-9 * hi.max(1.0) && y[2] <= hi + 1e-9 * hi.max(1.0) => y,
                _ => guess,
            };
            let lambda = y[2].clamp(lo, hi);
            let mut direction = if inb { 1 } else { -1 };
            if let Ok(v) = root_velocity(problem, Complex64::new(0.0, y[1]), lambda) {
                if v.re.abs() <= 1e-10 * v.norm() {
                    warn!("tangential imaginary-axis contact at lambda = {lambda}");
                    direction = 0;
                }
            }
            events.push(AxisEvent { lambda, omega: y[1], direction });
        }
    }
    events.sort_by(|a, b| a.lambda.total_cmp(&b.lambda).then(a.omega.total_cmp(&b.omega)));
    events
}

/// Parameter intervals with no root in `Re(s) >= 0`.
pub fn stability_intervals(result: &RootLocusResult) -> Vec<(f64, f64)> {
    let lmax = result.problem.lambda_max();
    let mut count: i64 = result
        .critical_points
        .iter()
        .filter(|p| p.kind == CriticalKind::Start && p.root.re >= -AXIS_TOL)
        .map(|p| p.multiplicity as i64)
        .sum();
    let events = imaginary_axis_events(result);
    let mut out = Vec::new();
    let mut open = if count == 0 { Some(0.0) } else { None };
    let mut i = 0;
    while i < events.len() {
        let lam = events[i].lambda;
        let mut j = i;
        while j < events.len() && events[j].lambda - lam <= 1e-9 * lam.abs().max(1.0) {
            count += events[j].direction as i64;
            j += 1;
        }
        if count < 0 {
            warn!("right half-plane root count went negative at lambda = {lam}");
        }
        match (count <= 0, open) {
            (true, None) => open = Some(lam),
            (false, Some(start)) => {
                if lam > start {
                    out.push((start, lam));
                }
                open = None;
            }
            _ => {}
        }
        i = j;
    }
    if let Some(start) = open {
        if lmax > start {
            out.push((start, lmax));
        }
    }
    out
}
