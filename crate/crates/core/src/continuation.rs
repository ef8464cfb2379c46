//! Pseudo-arclength continuation of single trajectories.

use std::sync::Mutex;

use log::{debug, warn};
use nalgebra::{Matrix2, Matrix3, Matrix4x3, Vector2, Vector3, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::critical::{
    expansion_directions, local_expansion, normalize, origin_expansion, CriticalKind, CriticalPoint,
};
use crate::error::{Error, Result};
use crate::plant::{LocusKind, LocusProblem};
use crate::rootfind::{bracketed_root, rational_zeros, Bracket, RationalTarget};

/// One accepted point `(sigma, omega, lambda)` of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub sigma: f64,
    pub omega: f64,
    pub lambda: f64,
    /// `|f(s, lambda)|`.
    pub residual: f64,
    /// Arclength step that produced this point (0 for the origin).
    pub step_used: f64,
}

impl TrajectoryPoint {
    pub fn y(&self) -> [f64; 3] {
        [self.sigma, self.omega, self.lambda]
    }

    pub fn root(&self) -> Complex64 {
        Complex64::new(self.sigma, self.omega)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    LambdaMaxReached,
    LeftRegion,
    MergedAtBranch,
    Stalled,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::LambdaMaxReached => "lambda_max_reached",
            Termination::LeftRegion => "left_region",
            Termination::MergedAtBranch => "merged_at_branch",
            Termination::Stalled => "stalled",
        }
    }
}

/// A traced trajectory. `origin` and `branch` index the critical-point list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub origin: usize,
    pub direction: [f64; 3],
    pub points: Vec<TrajectoryPoint>,
    pub termination: Termination,
    pub branch: Option<usize>,
}

/// Step-control and corrector settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ContinuationConfig {
    pub h0: f64,
    pub kappa_nominal: f64,
    pub delta_nominal: f64,
    pub corrector_tol: f64,
    pub max_newton_iters: usize,
    pub h_min: f64,
    pub h_max: f64,
    pub max_points: usize,
    /// Worker threads for tracing independent trajectories.
    pub workers: usize,
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        ContinuationConfig {
            h0: 2e-2,
            kappa_nominal: 0.5,
            delta_nominal: 1e-3,
            corrector_tol: 1e-5,
            max_newton_iters: 10,
            h_min: 1e-9,
            h_max: 1.0,
            max_points: 100_000,
            workers: 1,
        }
    }
}

impl ContinuationConfig {
    /// Defaults with `h0 = 1e-2 (1 + |sigma0|)`.
    pub fn for_problem(problem: &LocusProblem) -> Self {
        ContinuationConfig { h0: 1e-2 * (1.0 + problem.sigma0().abs()), ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.h_min > 0.0
            && self.h_min <= self.h0
            && self.h0 <= self.h_max
            && self.h_max.is_finite()
            && self.kappa_nominal > 0.0
            && self.delta_nominal > 0.0
            && self.corrector_tol > 0.0
            && self.max_newton_iters > 0
            && self.max_points >= 2
            && self.workers >= 1;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "need 0 < h_min <= h0 <= h_max, positive tolerances, max_newton_iters >= 1, \
                 max_points >= 2 and workers >= 1; got {self:?}"
            )))
        }
    }
}

// ---------------------------------------------------------------------------
// Small vector helpers.

fn add(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn scale(a: [f64; 3], k: f64) -> [f64; 3] {
    [a[0] * k, a[1] * k, a[2] * k]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

fn lerp(a: [f64; 3], b: [f64; 3], t: f64) -> [f64; 3] {
    add(a, scale(sub(b, a), t))
}

// ---------------------------------------------------------------------------
// Local operations.

/// Unit tangent at a critical point, oriented so that lambda increases.
pub fn initial_tangent(problem: &LocusProblem, point: &CriticalPoint) -> Result<[f64; 3]> {
    let (n, c) = origin_expansion(problem, point)?;
    if n != 1 {
        return Err(Error::SingularTangent);
    }
    if !(c.re.is_finite() && c.im.is_finite()) {
        return Err(Error::SingularTangent);
    }
    Ok(normalize([c.re, c.im, 1.0]))
}

/// Secant predictor `y_i + h (y_i - y_{i-1}) / |y_i - y_{i-1}|`.
pub fn predict(prev: &TrajectoryPoint, curr: &TrajectoryPoint, step: f64) -> Result<[f64; 3]> {
    let d = sub(curr.y(), prev.y());
    let n = norm(d);
    if n < 1e-14 {
        return Err(Error::DegenerateSecant);
    }
    Ok(add(curr.y(), scale(d, step / n)))
}

/// `(M, P)` and their partials in `(sigma, omega, lambda)`.
fn system(problem: &LocusProblem, y: [f64; 3]) -> Result<([f64; 2], [[f64; 3]; 2], Complex64)> {
    let plant = problem.plant();
    let (sigma, omega, lambda) = (y[0], y[1], y[2]);
    if problem.kind() == LocusKind::Gain && lambda <= 0.0 {
        return Err(Error::Domain { sigma, omega });
    }
    let (k, h) = problem.gain_and_delay(lambda);
    let m = plant.log_magnitude(sigma, omega, k, h)?;
    let p = plant.phase(sigma, omega, h)?;
    let l = plant.log_derivative(Complex64::new(sigma, omega))? - h;
    let (m_l, p_l) = match problem.kind() {
        LocusKind::Gain => (1.0 / lambda, 0.0),
        LocusKind::Delay => (-sigma, -omega),
    };
    Ok(([m, p], [[l.re, -l.im, m_l], [l.im, l.re, p_l]], l))
}

/// Relative singularity test for small dense matrices.
fn nearly_singular(det: f64, row_norms: impl Iterator<Item = f64>) -> bool {
    let scale: f64 = row_norms.product();
    !(det.is_finite()) || det.abs() <= 1e-13 * scale
}

fn corrector_matrix(jac: [[f64; 3]; 2], d: [f64; 3]) -> Matrix3<f64> {
    Matrix3::new(
        jac[0][0], jac[0][1], jac[0][2], jac[1][0], jac[1][1], jac[1][2], d[0], d[1], d[2],
    )
}

fn solve3(a: &Matrix3<f64>, rhs: Vector3<f64>) -> Result<Vector3<f64>> {
    let rows = (0..3).map(|i| a.row(i).norm());
    if nearly_singular(a.determinant(), rows) {
        return Err(Error::SingularJacobian);
    }
    a.lu().solve(&rhs).ok_or(Error::SingularJacobian)
}

/// Result of a corrector solve.
#[derive(Debug, Clone, Copy)]
pub struct Correction {
    pub point: TrajectoryPoint,
    pub kappa: f64,
    pub iterations: usize,
}

fn correct_impl(
    problem: &LocusProblem,
    predicted: [f64; 3],
    direction: [f64; 3],
    config: &ContinuationConfig,
    real_mode: bool,
) -> Result<Correction> {
    let mut y = predicted;
    let mut first: Option<(Matrix3<f64>, f64)> = None;
    let mut kappa = 0.0;
    for it in 0..config.max_newton_iters {
        let (f, jac, _) = system(problem, y)?;
        let g = dot(sub(y, predicted), direction);
        let rhs = Vector3::new(-f[0], -f[1], -g);
        if it == 1 {
            if let Some((j0, n0)) = &first {
                let q = solve3(j0, rhs)?;
                kappa = if *n0 > 0.0 { q.norm() / n0 } else { 0.0 };
            }
        }
        let a = corrector_matrix(jac, direction);
        let mut dy = solve3(&a, rhs)?;
        if real_mode {
            dy[1] = 0.0;
        }
        if it == 0 {
            first = Some((a, dy.norm()));
        }
        let mut step = 1.0;
        if problem.kind() == LocusKind::Gain && y[2] + dy[2] <= 0.0 {
            step = 0.5 * y[2] / dy[2].abs();
        }
        let upd = [dy[0] * step, dy[1] * step, dy[2] * step];
        y = add(y, upd);
        if real_mode {
            y[1] = 0.0;
        }
        if norm(upd) < config.corrector_tol {
            let residual = problem.log_residual(y[0], y[1], y[2])?;
            if residual <= config.corrector_tol {
                if it == 0 {
                    // kappa from the simplified Newton step at the new point.
                    let (f1, _, _) = system(problem, y)?;
                    let g1 = dot(sub(y, predicted), direction);
                    let (j0, n0) = first.as_ref().unwrap();
                    let q = solve3(j0, Vector3::new(-f1[0], -f1[1], -g1))?;
                    kappa = if *n0 > 0.0 { q.norm() / n0 } else { 0.0 };
                }
                return Ok(Correction {
                    point: TrajectoryPoint { sigma: y[0], omega: y[1], lambda: y[2], residual, step_used: 0.0 },
                    kappa,
                    iterations: it + 1,
                });
            }
        }
    }
    Err(Error::NoConvergence(config.max_newton_iters))
}

/// Newton corrector on `M = 0`, `P = 0`, `(y - y_p) . d = 0`. Returns the
/// corrected point and the contraction rate of the first two steps.
pub fn correct(
    problem: &LocusProblem,
    predicted: [f64; 3],
    direction: [f64; 3],
    config: &ContinuationConfig,
) -> Result<(TrajectoryPoint, f64)> {
    let c = correct_impl(problem, predicted, direction, config, false)?;
    Ok((c.point, c.kappa))
}

/// Deceleration-factor step control. `repeat` asks to redo the step with
/// the returned (shorter) length.
pub fn step_update(kappa: f64, delta: f64, h_curr: f64, config: &ContinuationConfig) -> (f64, bool) {
    let kdf = (kappa / config.kappa_nominal).sqrt();
    let ddf = (delta / config.delta_nominal).sqrt();
    let m = kdf.max(ddf);
    let m = if m.is_nan() { 2.0 } else { m };
    let hdf = m.clamp(0.5, 2.0);
    let h_next = (h_curr / hdf).clamp(config.h_min, config.h_max);
    (h_next, m >= 2.0)
}

/// Indices `(i, i + 1)` of the first parameter decrease beyond the noise floor.
pub fn detect_branch_delay(traj: &Trajectory) -> Option<(usize, usize)> {
    traj.points.windows(2).enumerate().find_map(|(i, w)| {
        let drop = w[0].lambda - w[1].lambda;
        if drop > 1e-12 * w[0].lambda.abs().max(f64::MIN_POSITIVE) {
            Some((i, i + 1))
        } else {
            None
        }
    })
}

/// Coordinate held fixed by [`solve_pinned`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Pin {
    Lambda(f64),
    Sigma(f64),
}

/// 2x2 Newton on `(M, P)` with one coordinate fixed.
pub(crate) fn solve_pinned(problem: &LocusProblem, guess: [f64; 3], pin: Pin, real_mode: bool) -> Result<[f64; 3]> {
    let mut y = guess;
    match pin {
        Pin::Lambda(v) => y[2] = v,
        Pin::Sigma(v) => y[0] = v,
    }
    for _ in 0..40 {
        let (f, jac, _) = system(problem, y)?;
        let (a, cols) = match pin {
            Pin::Lambda(_) => (Matrix2::new(jac[0][0], jac[0][1], jac[1][0], jac[1][1]), [0, 1]),
            Pin::Sigma(_) => (Matrix2::new(jac[0][1], jac[0][2], jac[1][1], jac[1][2]), [1, 2]),
        };
        let rhs = Vector2::new(-f[0], -f[1]);
        let dx = if real_mode {
            // omega stays zero; solve the magnitude equation for the free real unknown.
            let col = if matches!(pin, Pin::Lambda(_)) { 0 } else { 1 };
            if a[(0, col)] == 0.0 {
                return Err(Error::SingularJacobian);
            }
            let mut v = Vector2::zeros();
            v[col] = -f[0] / a[(0, col)];
            v
        } else {
            let rows = (0..2).map(|i| a.row(i).norm());
            if nearly_singular(a.determinant(), rows) {
                return Err(Error::SingularJacobian);
            }
            a.lu().solve(&rhs).ok_or(Error::SingularJacobian)?
        };
        let mut upd = [0.0; 3];
        upd[cols[0]] = dx[0];
        upd[cols[1]] = dx[1];
        if problem.kind() == LocusKind::Gain && y[2] + upd[2] <= 0.0 {
            let k = 0.5 * y[2] / upd[2].abs();
            upd = scale(upd, k);
        }
        y = add(y, upd);
        if norm(upd) <= 1e-13 * (1.0 + norm(y)) {
            return Ok(y);
        }
    }
    let res = problem.log_residual(y[0], y[1], y[2])?;
    if res < 1e-10 {
        Ok(y)
    } else {
        Err(Error::NoConvergence(40))
    }
}

fn point_at(problem: &LocusProblem, y: [f64; 3], step: f64) -> TrajectoryPoint {
    let residual = if problem.kind() == LocusKind::Gain && y[2] == 0.0 {
        // Start on a pole: the pole-cleared characteristic function vanishes.
        0.0
    } else {
        problem.log_residual(y[0], y[1], y[2]).unwrap_or(f64::NAN)
    };
    TrajectoryPoint { sigma: y[0], omega: y[1], lambda: y[2], residual, step_used: step }
}

/// Augmented system `M = P = 0`, `G'/G - h_eff = 0` solved by Gauss-Newton
/// from `guess`; returns the branch point with its outgoing directions.
fn branch_newton(problem: &LocusProblem, guess: [f64; 3]) -> Result<CriticalPoint> {
    let plant = problem.plant();
    let mut y = guess;
    let mut converged = false;
    for _ in 0..50 {
        let (f, jac, l) = system(problem, y)?;
        let s = Complex64::new(y[0], y[1]);
        let l2 = plant.log_derivative_k(s, 2);
        let l_lam = if problem.kind() == LocusKind::Delay { -1.0 } else { 0.0 };
        let a = Matrix4x3::new(
            jac[0][0], jac[0][1], jac[0][2], jac[1][0], jac[1][1], jac[1][2], l2.re, -l2.im, l_lam, l2.im, l2.re, 0.0,
        );
        let rhs = Vector4::new(-f[0], -f[1], -l.re, -l.im);
        let svd = a.svd(true, true);
        let dx = svd.solve(&rhs, 1e-14).map_err(|_| Error::SingularJacobian)?;
        let mut upd = [dx[0], dx[1], dx[2]];
        if problem.kind() == LocusKind::Gain && y[2] + upd[2] <= 0.0 {
            upd = scale(upd, 0.5 * y[2] / upd[2].abs());
        }
        y = add(y, upd);
        if norm(upd) <= 1e-12 * (1.0 + norm(y)) {
            converged = true;
            break;
        }
    }
    let (f, _, l) = system(problem, y)?;
    let rho: f64 = plant
        .zeros()
        .iter()
        .chain(plant.poles())
        .map(|z| 1.0 / (Complex64::new(y[0], y[1]) - z).norm())
        .sum::<f64>()
        + problem.gain_and_delay(y[2]).1.abs();
    if !(converged || (f[0].abs() < 1e-10 && f[1].abs() < 1e-10)) || l.norm() > 1e-6 * rho.max(1e-12) {
        return Err(Error::NoConvergence(50));
    }
    branch_from_point(problem, y)
}

fn branch_from_point(problem: &LocusProblem, y: [f64; 3]) -> Result<CriticalPoint> {
    let mut s = Complex64::new(y[0], y[1]);
    if problem.plant().conjugate_symmetric() && s.im.abs() < 1e-9 * s.norm().max(1.0) {
        s.im = 0.0;
    }
    let (n, c) = local_expansion(problem, s, y[2])?;
    if n < 2 {
        return Err(Error::NoConvergence(0));
    }
    Ok(CriticalPoint {
        kind: CriticalKind::Branch,
        root: s,
        lambda: y[2],
        multiplicity: n,
        directions: expansion_directions(n, c, true),
    })
}

/// Solves for the multiple root bracketed by a parameter reversal.
pub fn solve_branch_point(problem: &LocusProblem, a: &TrajectoryPoint, b: &TrajectoryPoint) -> Result<CriticalPoint> {
    branch_newton(problem, lerp(a.y(), b.y(), 0.5))
}

/// Golden-section maximisation of the parameter along the curve through
/// the chord `a -> b`; used when Newton on the augmented system fails.
fn branch_by_golden_section(
    problem: &LocusProblem,
    a: [f64; 3],
    b: [f64; 3],
    config: &ContinuationConfig,
    real_mode: bool,
) -> Option<CriticalPoint> {
    let dir = normalize(sub(b, a));
    let eval = |t: f64| -> Option<[f64; 3]> {
        correct_impl(problem, lerp(a, b, t), dir, config, real_mode).ok().map(|c| c.point.y())
    };
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = eval(x1)?[2];
    let mut f2 = eval(x2)?[2];
    for _ in 0..60 {
        if f1 > f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = eval(x1)?[2];
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = eval(x2)?[2];
        }
    }
    let y = eval(0.5 * (lo + hi))?;
    let refined = branch_newton(problem, y).ok();
    refined.or_else(|| branch_from_point(problem, y).ok())
}

// ---------------------------------------------------------------------------
// Registry of critical points shared by the tracer and the engine.

struct RegistryState {
    points: Vec<CriticalPoint>,
    consumed: Vec<Vec<bool>>,
}

/// Critical points indexed by id, with per-direction consumption flags.
pub struct BranchRegistry {
    state: Mutex<RegistryState>,
}

/// Branch points closer than this in `(sigma, omega)` are identified.
pub const BRANCH_DEDUP_TOL: f64 = 1e-6;

impl BranchRegistry {
    pub fn new(points: Vec<CriticalPoint>) -> Self {
        let consumed = points.iter().map(|p| vec![false; p.directions.len()]).collect();
        BranchRegistry { state: Mutex::new(RegistryState { points, consumed }) }
    }

    pub fn len(&self) -> usize {
        self.state.lock().unwrap().points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, id: usize) -> CriticalPoint {
        self.state.lock().unwrap().points[id].clone()
    }

    pub fn points(&self) -> Vec<CriticalPoint> {
        self.state.lock().unwrap().points.clone()
    }

    /// Registered branch points with their ids.
    pub fn branches(&self) -> Vec<(usize, CriticalPoint)> {
        let st = self.state.lock().unwrap();
        st.points
            .iter()
            .enumerate()
            .filter(|(_, p)| p.kind == CriticalKind::Branch)
            .map(|(i, p)| (i, p.clone()))
            .collect()
    }

    pub fn find_branch(&self, root: Complex64) -> Option<usize> {
        let st = self.state.lock().unwrap();
        st.points
            .iter()
            .position(|p| p.kind == CriticalKind::Branch && (p.root - root).norm() <= BRANCH_DEDUP_TOL)
    }

    /// Registers a branch point unless one already sits within the dedup
    /// tolerance. Returns its id and whether it was new.
    pub fn register_branch(&self, point: CriticalPoint) -> (usize, bool) {
        let mut st = self.state.lock().unwrap();
        if let Some(i) = st
            .points
            .iter()
            .position(|p| p.kind == CriticalKind::Branch && (p.root - point.root).norm() <= BRANCH_DEDUP_TOL)
        {
            return (i, false);
        }
        st.consumed.push(vec![false; point.directions.len()]);
        st.points.push(point);
        (st.points.len() - 1, true)
    }

    /// Marks a direction as consumed; false if it already was.
    pub fn consume(&self, id: usize, direction: usize) -> bool {
        let mut st = self.state.lock().unwrap();
        let slot = &mut st.consumed[id][direction];
        !std::mem::replace(slot, true)
    }

    pub fn into_points(self) -> Vec<CriticalPoint> {
        self.state.into_inner().unwrap().points
    }
}

// ---------------------------------------------------------------------------
// Tracing.

/// How a trajectory reached a branch point.
#[derive(Debug, Clone, PartialEq)]
pub enum BranchArrival {
    Known(usize),
    Found(CriticalPoint),
}

#[derive(Debug, Clone)]
pub struct TraceOutcome {
    pub trajectory: Trajectory,
    pub arrival: Option<BranchArrival>,
}

const MAX_SINGULAR: usize = 6;

struct Tracer<'a> {
    problem: &'a LocusProblem,
    config: &'a ContinuationConfig,
    origin_id: usize,
    branches: Vec<(usize, CriticalPoint)>,
    real_mode: bool,
}

fn incoming_alignment(b: &CriticalPoint, from: [f64; 3], problem: &LocusProblem) -> bool {
    if b.multiplicity < 2 {
        return true;
    }
    let v = [from[0] - b.root.re, from[1] - b.root.im];
    let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
    if n == 0.0 {
        return true;
    }
    let Ok((m, c)) = local_expansion(problem, b.root, b.lambda) else { return true };
    expansion_directions(m, c, false)
        .iter()
        .any(|d| (d[0] * v[0] + d[1] * v[1]) / (n * (d[0] * d[0] + d[1] * d[1]).sqrt()) > std::f64::consts::FRAC_1_SQRT_2)
}

impl<'a> Tracer<'a> {
    /// A registered branch the step `yi -> ynew` is running into.
    fn approaching_branch(&self, yi: [f64; 3], ynew: [f64; 3], h: f64) -> Option<usize> {
        let chord = sub(ynew, yi);
        let cn = norm(chord);
        if cn == 0.0 {
            return None;
        }
        self.branches
            .iter()
            .filter(|(id, _)| *id != self.origin_id)
            .filter(|(_, b)| {
                let v = sub(b.y(), yi);
                let dist = norm(v);
                b.lambda >= yi[2] - 1e-12 * yi[2].abs()
                    && dist <= 1.5 * h
                    && (dist == 0.0 || dot(chord, v) / (cn * dist) > 0.9)
                    && incoming_alignment(b, yi, self.problem)
            })
            .min_by(|a, b| norm(sub(a.1.y(), yi)).total_cmp(&norm(sub(b.1.y(), yi))))
            .map(|(id, _)| *id)
    }

    fn branch_near_chord(&self, yi: [f64; 3], ynew: [f64; 3], h: f64) -> Option<usize> {
        let chord = sub(ynew, yi);
        let cn2 = dot(chord, chord);
        self.branches
            .iter()
            .filter(|(id, _)| *id != self.origin_id)
            .map(|(id, b)| {
                let t = if cn2 > 0.0 { (dot(sub(b.y(), yi), chord) / cn2).clamp(0.0, 1.0) } else { 0.0 };
                (*id, norm(sub(b.y(), lerp(yi, ynew, t))))
            })
            .filter(|(_, d)| *d <= 1.5 * h)
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(id, _)| id)
    }

    fn resolve_branch(&self, prev: Option<[f64; 3]>, yi: [f64; 3], ynew: [f64; 3], h: f64) -> Option<BranchArrival> {
        if let Some(id) = self.branch_near_chord(yi, ynew, h) {
            return Some(BranchArrival::Known(id));
        }
        let guess = lerp(yi, ynew, 0.5);
        let found = branch_newton(self.problem, guess).ok().or_else(|| {
            branch_by_golden_section(self.problem, prev.unwrap_or(yi), ynew, self.config, self.real_mode)
        })?;
        if let Some((id, _)) = self
            .branches
            .iter()
            .find(|(_, b)| (b.root - found.root).norm() <= BRANCH_DEDUP_TOL)
        {
            return Some(BranchArrival::Known(*id));
        }
        Some(BranchArrival::Found(found))
    }

    fn clip(&self, yi: [f64; 3], ynew: [f64; 3]) -> Option<([f64; 3], Termination)> {
        let lmax = self.problem.lambda_max();
        let s0 = self.problem.sigma0();
        let tl = if ynew[2] > lmax { (lmax - yi[2]) / (ynew[2] - yi[2]) } else { f64::INFINITY };
        let ts = if ynew[0] < s0 { (yi[0] - s0) / (yi[0] - ynew[0]) } else { f64::INFINITY };
        if tl.is_infinite() && ts.is_infinite() {
            return None;
        }
        let (pin, t, term) = if tl <= ts {
            (Pin::Lambda(lmax), tl, Termination::LambdaMaxReached)
        } else {
            (Pin::Sigma(s0), ts, Termination::LeftRegion)
        };
        let guess = lerp(yi, ynew, t.clamp(0.0, 1.0));
        let y = match solve_pinned(self.problem, guess, pin, self.real_mode) {
            Ok(y) => y,
            Err(e) => {
                warn!("endpoint clip solve failed ({e}); using the interpolated point");
                let mut g = guess;
                match pin {
                    Pin::Lambda(v) => g[2] = v,
                    Pin::Sigma(v) => g[0] = v,
                }
                g
            }
        };
        Some((y, term))
    }

    fn run(&self, origin: &CriticalPoint, dir: [f64; 3]) -> TraceOutcome {
        let problem = self.problem;
        let config = self.config;
        let y0 = origin.y();
        let mut points = vec![point_at(problem, y0, 0.0)];
        let finish = |points: Vec<TrajectoryPoint>, termination, arrival: Option<BranchArrival>| {
            let branch = match &arrival {
                Some(BranchArrival::Known(id)) => Some(*id),
                _ => None,
            };
            TraceOutcome {
                trajectory: Trajectory { origin: self.origin_id, direction: dir, points, termination, branch },
                arrival,
            }
        };
        if y0[2] >= problem.lambda_max() {
            return finish(points, Termination::LambdaMaxReached, None);
        }
        let s0 = problem.sigma0();
        if y0[0] <= s0 + 1e-12 * s0.abs() && dir[0] < 0.0 {
            return finish(points, Termination::LeftRegion, None);
        }
        let expansion = if origin.multiplicity >= 2 { origin_expansion(problem, origin).ok() } else { None };

        let mut h = config.h0;
        let mut d = dir;
        let mut prev: Option<[f64; 3]> = None;
        let mut singular = 0usize;
        loop {
            if points.len() >= config.max_points {
                warn!("trajectory from critical point {} hit max_points", self.origin_id);
                return finish(points, Termination::Stalled, None);
            }
            if h < config.h_min {
                debug!("step fell below h_min at {:?}", points.last().map(|p| p.y()));
                return finish(points, Termination::Stalled, None);
            }
            let yi = points.last().unwrap().y();
            let mut yp = add(yi, scale(d, h));
            if points.len() == 1 {
                if let Some((n, c)) = expansion {
                    if n >= 2 && c.norm() > 0.0 {
                        yp[2] = y0[2] + h.powi(n as i32) / c.norm();
                    }
                }
            }
            if self.real_mode {
                yp[1] = 0.0;
            }
            let corr = match correct_impl(problem, yp, d, config, self.real_mode) {
                Ok(c) => {
                    singular = 0;
                    c
                }
                Err(Error::SingularJacobian) => {
                    singular += 1;
                    if singular >= MAX_SINGULAR {
                        if let Some(arr) = self.resolve_branch(prev, yi, yp, h) {
                            return self.arrive(points, arr, h, dir);
                        }
                        singular = 0;
                    }
                    h *= 0.5;
                    continue;
                }
                Err(_) => {
                    h *= 0.5;
                    continue;
                }
            };
            let ynew = corr.point.y();
            let delta = problem.log_residual(yp[0], yp[1], yp[2]).unwrap_or(f64::INFINITY);
            let (h_next, repeat) = step_update(corr.kappa, delta, h, config);
            if repeat {
                if h <= config.h_min {
                    return finish(points, Termination::Stalled, None);
                }
                h = h_next.min(0.5 * h);
                continue;
            }
            let dist = norm(sub(ynew, yi));
            if !(0.3 * h..=1.7 * h).contains(&dist) {
                h *= 0.5;
                continue;
            }
            if let Some(id) = self.approaching_branch(yi, ynew, h) {
                return self.arrive(points, BranchArrival::Known(id), h, dir);
            }
            if ynew[2] < yi[2] - 1e-12 * yi[2].abs().max(f64::MIN_POSITIVE) {
                if let Some(arr) = self.resolve_branch(prev, yi, ynew, h) {
                    return self.arrive(points, arr, h, dir);
                }
                warn!("parameter reversal without a resolvable branch point near {:?}", yi);
                return finish(points, Termination::Stalled, None);
            }
            if let Some((y, term)) = self.clip(yi, ynew) {
                let p = point_at(problem, y, norm(sub(y, yi)));
                if norm(sub(y, yi)) < 1e-14 {
                    *points.last_mut().unwrap() = p;
                } else {
                    points.push(p);
                }
                return finish(points, term, None);
            }
            let mut p = corr.point;
            p.step_used = h;
            points.push(p);
            prev = Some(yi);
            d = normalize(sub(ynew, yi));
            h = h_next;
        }
    }

    fn arrive(&self, mut points: Vec<TrajectoryPoint>, arrival: BranchArrival, h: f64, dir: [f64; 3]) -> TraceOutcome {
        let b = match &arrival {
            BranchArrival::Known(id) => self
                .branches
                .iter()
                .find(|(i, _)| i == id)
                .map(|(_, b)| b.y())
                .unwrap_or_else(|| points.last().unwrap().y()),
            BranchArrival::Found(cp) => cp.y(),
        };
        let last = points.last().unwrap().y();
        let p = point_at(self.problem, b, norm(sub(b, last)).min(h.max(norm(sub(b, last)))));
        if norm(sub(b, last)) < 1e-14 {
            *points.last_mut().unwrap() = p;
        } else {
            points.push(p);
        }
        let branch = match &arrival {
            BranchArrival::Known(id) => Some(*id),
            _ => None,
        };
        TraceOutcome {
            trajectory: Trajectory {
                origin: self.origin_id,
                direction: dir,
                points,
                termination: Termination::MergedAtBranch,
                branch,
            },
            arrival: Some(arrival),
        }
    }
}

/// Traces one trajectory from critical point `origin_id` along `dir`,
/// stopping at `lambda_max`, the region boundary, or a branch point.
/// Registered branch points are read from `registry` when tracing starts.
pub fn trace_trajectory(
    problem: &LocusProblem,
    origin_id: usize,
    dir: [f64; 3],
    registry: &BranchRegistry,
    config: &ContinuationConfig,
) -> TraceOutcome {
    let origin = registry.point(origin_id);
    let real_mode = problem.plant().conjugate_symmetric() && origin.root.im == 0.0 && dir[1].abs() < 1e-14;
    let tracer = Tracer { problem, config, origin_id, branches: registry.branches(), real_mode };
    tracer.run(&origin, dir)
}

// ---------------------------------------------------------------------------
// Direct evaluation on the real axis (gain locus, symmetric plants).

/// `ln lambda(sigma)` on the real axis where `G(sigma) e^{-h sigma} < 0`.
fn real_log_lambda(problem: &LocusProblem, sigma: f64) -> f64 {
    match problem.plant().log_magnitude(sigma, 0.0, 1.0, problem.plant().delay()) {
        Ok(m) => -m,
        Err(_) => f64::INFINITY,
    }
}

/// Real zeros of `G'/G - h` away from poles and zeros.
fn real_branch_candidates(problem: &LocusProblem) -> Vec<f64> {
    let plant = problem.plant();
    let h = plant.delay();
    let Ok(roots) = rational_zeros(plant, RationalTarget::LogDerivativeShift { h }) else {
        return Vec::new();
    };
    roots
        .into_iter()
        .filter(|z| z.im.abs() < 1e-8 * z.norm().max(1.0))
        .filter(|z| {
            !plant
                .zeros()
                .iter()
                .chain(plant.poles())
                .any(|p| (z - p).norm() <= 1e-6 * z.norm().max(1.0))
        })
        .map(|z| {
            // Newton on the real line.
            let mut x = z.re;
            for _ in 0..8 {
                let s = Complex64::new(x, 0.0);
                let (Ok(l), l2) = (plant.log_derivative(s), plant.log_derivative_k(s, 2)) else { break };
                if l2.re == 0.0 {
                    break;
                }
                let nx = x - (l.re - h) / l2.re;
                if !nx.is_finite() {
                    break;
                }
                x = nx;
            }
            x
        })
        .collect()
}

/// Walks the real axis from a real critical point in the direction of
/// increasing gain (`sign` is the sign of the real tangent).
pub fn real_axis_segment(
    problem: &LocusProblem,
    origin_id: usize,
    sign: f64,
    registry: &BranchRegistry,
    config: &ContinuationConfig,
) -> TraceOutcome {
    let origin = registry.point(origin_id);
    let plant = problem.plant();
    let s0 = problem.sigma0();
    let lmax = problem.lambda_max();
    let ln_lmax = lmax.ln();
    let a = origin.root.re;
    let dir = [sign, 0.0, 0.0];
    let scale_a = a.abs().max(1.0);
    let beyond = |x: f64| (x - a) * sign > 1e-9 * scale_a;

    let mut barrier: Option<(f64, Termination)> = None;
    let mut consider = |x: f64, t: Termination| {
        if beyond(x) && barrier.is_none_or(|(b, _)| (x - a) * sign < (b - a) * sign) {
            barrier = Some((x, t));
        }
    };
    for x in real_branch_candidates(problem) {
        consider(x, Termination::MergedAtBranch);
    }
    for z in plant.zeros().iter().filter(|z| z.im == 0.0) {
        consider(z.re, Termination::LambdaMaxReached);
    }
    if sign < 0.0 {
        consider(s0, Termination::LeftRegion);
    }
    let f = |x: f64| real_log_lambda(problem, x) - ln_lmax;
    let f_a = {
        let v = f(a);
        if v.is_finite() {
            v
        } else {
            -1e300
        }
    };

    let (end, termination) = match barrier {
        Some((b, t)) if t != Termination::LambdaMaxReached && f(b) <= 0.0 => (b, t),
        other => {
            // lambda_max is reached before the barrier (or there is none).
            let mut hi = match other {
                Some((b, _)) => b,
                None => a + sign,
            };
            let mut f_hi = f(hi);
            let mut k = 0;
            while !(f_hi > 0.0 && f_hi.is_finite()) && k < 200 {
                hi = match other {
                    Some((b, Termination::LambdaMaxReached)) => b - sign * (b - a).abs() * 0.5f64.powi(k + 1),
                    Some((b, _)) if f(b).is_finite() && f(b) > 0.0 => b,
                    Some((b, _)) => b - sign * (b - a).abs() * 0.5f64.powi(k + 1),
                    None => a + sign * 2f64.powi(k + 1),
                };
                f_hi = f(hi);
                k += 1;
            }
            let (lo, hi2, flo, fhi) = if sign > 0.0 { (a, hi, f_a, f_hi) } else { (hi, a, f_hi, f_a) };
            let root = Bracket::new(lo, hi2, flo, fhi)
                .and_then(|br| bracketed_root(f, br, 1e-14 * scale_a))
                .unwrap_or(hi);
            (root, Termination::LambdaMaxReached)
        }
    };

    let lambda_of = |x: f64| -> f64 {
        if x == a {
            origin.lambda
        } else if termination == Termination::LambdaMaxReached && x == end {
            lmax
        } else {
            real_log_lambda(problem, x).exp()
        }
    };
    // Adaptive subdivision in the (sigma, lambda) plane.
    let tol = 1e-3 * config.h0;
    let max_len = 10.0 * config.h0;
    let mut xs = vec![a];
    let mut stack = vec![(a, end, 0u32)];
    let pieces = 8;
    let mut init: Vec<(f64, f64)> = (0..pieces)
        .map(|i| (a + (end - a) * i as f64 / pieces as f64, a + (end - a) * (i + 1) as f64 / pieces as f64))
        .collect();
    init.reverse();
    stack.clear();
    for (l, r) in init {
        stack.push((l, r, 0));
    }
    while let Some((l, r, depth)) = stack.pop() {
        let (ll, lr) = (lambda_of(l), lambda_of(r));
        let m = 0.5 * (l + r);
        let lm = lambda_of(m);
        let dev = (lm - 0.5 * (ll + lr)).abs();
        let len = ((r - l).powi(2) + (lr - ll).powi(2)).sqrt();
        if depth < 40 && xs.len() < config.max_points && (dev > tol || len > max_len) && (r - l).abs() > 1e-12 * scale_a {
            stack.push((m, r, depth + 1));
            stack.push((l, m, depth + 1));
        } else {
            xs.push(r);
        }
    }
    let mut points = Vec::with_capacity(xs.len());
    let mut last: Option<[f64; 3]> = None;
    for x in xs {
        let y = [x, 0.0, lambda_of(x)];
        let step = last.map_or(0.0, |l| norm(sub(y, l)));
        points.push(point_at(problem, y, step));
        last = Some(y);
    }
    let arrival = if termination == Termination::MergedAtBranch {
        match registry.find_branch(Complex64::new(end, 0.0)) {
            Some(id) => Some(BranchArrival::Known(id)),
            None => branch_from_point(problem, [end, 0.0, lambda_of(end)]).ok().map(BranchArrival::Found),
        }
    } else {
        None
    };
    let branch = match &arrival {
        Some(BranchArrival::Known(id)) => Some(*id),
        _ => None,
    };
    TraceOutcome {
        trajectory: Trajectory { origin: origin_id, direction: dir, points, termination, branch },
        arrival,
    }
}

/// All real-axis segments leaving registered real critical points along
/// real directions.
pub fn real_axis_segments(
    problem: &LocusProblem,
    registry: &BranchRegistry,
    config: &ContinuationConfig,
) -> Vec<Trajectory> {
    if problem.kind() != LocusKind::Gain || !problem.plant().conjugate_symmetric() {
        return Vec::new();
    }
    let mut out = Vec::new();
    for (id, p) in registry.points().iter().enumerate() {
        if p.root.im != 0.0 || matches!(p.kind, CriticalKind::CrossingOut) {
            continue;
        }
        for d in &p.directions {
            if d[1].abs() < 1e-12 && d[0] != 0.0 {
                out.push(real_axis_segment(problem, id, d[0].signum(), registry, config).trajectory);
            }
        }
    }
    out
}
