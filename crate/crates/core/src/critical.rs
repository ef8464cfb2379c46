//! Starting points, branch points and boundary crossings.

use std::cmp::Ordering;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plant::{LocusKind, LocusProblem, Plant};
use crate::rootfind::{
    bracketed_root, magnitude_extremum_freqs, phase_extremum_freqs, rational_zeros, Bracket, RationalTarget,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriticalKind {
    Start,
    Branch,
    CrossingIn,
    CrossingOut,
}

impl CriticalKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CriticalKind::Start => "start",
            CriticalKind::Branch => "branch",
            CriticalKind::CrossingIn => "crossing_in",
            CriticalKind::CrossingOut => "crossing_out",
        }
    }
}

/// A critical point of the locus. `directions` are unit vectors in
/// `(Re s, Im s, lambda)` along which trajectories leave the point with
/// increasing parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub kind: CriticalKind,
    pub root: Complex64,
    pub lambda: f64,
    pub multiplicity: usize,
    pub directions: Vec<[f64; 3]>,
}

impl CriticalPoint {
    pub fn y(&self) -> [f64; 3] {
        [self.root.re, self.root.im, self.lambda]
    }

    pub fn is_crossing(&self) -> bool {
        matches!(self.kind, CriticalKind::CrossingIn | CriticalKind::CrossingOut)
    }
}

/// A frequency interval on which the boundary phase is strictly monotone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotoneInterval {
    pub lo: f64,
    pub hi: f64,
    pub phi_lo: f64,
    pub phi_hi: f64,
}

const MAX_ORDER: usize = 8;
const ORDER_TOL: f64 = 1e-6;
const CLUSTER_TOL: f64 = 1e-8;
const SPURIOUS_TOL: f64 = 1e-6;
const BRANCH_PHASE_TOL: f64 = 1e-8;
const GRAZING_TOL: f64 = 1e-10;
const DEDUP_OMEGA: f64 = 1e-8;
const DEDUP_LAMBDA: f64 = 1e-10;

// ---------------------------------------------------------------------------
// Local analysis of f near a root.

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Complete Bell polynomials `B_1..B_n` of `x = (l', l'', ...)`.
fn bell(x: &[Complex64]) -> Vec<Complex64> {
    let mut b = vec![Complex64::new(1.0, 0.0)];
    for m in 0..x.len() {
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..=m {
            acc += b[m - k] * x[k] * binomial(m, k);
        }
        b.push(acc);
    }
    b.remove(0);
    b
}

/// Order `N` of a root of `1 + e^{l(s)}` at `s` with `l = ln G - h s + const`,
/// together with `B_N`, so that `f ~ -B_N (s - s_b)^N / N!`.
pub(crate) fn local_order(plant: &Plant, s: Complex64, h: f64) -> Result<(usize, Complex64)> {
    let mut x = vec![plant.log_derivative(s)? - h];
    for k in 2..=MAX_ORDER {
        x.push(plant.log_derivative_k(s, k));
    }
    let b = bell(&x);
    let rho = plant
        .zeros()
        .iter()
        .chain(plant.poles())
        .map(|z| 1.0 / (s - z).norm())
        .sum::<f64>()
        + h.abs();
    let rho = rho.max(1e-12);
    for k in 1..=MAX_ORDER {
        if b[k - 1].norm() > ORDER_TOL * factorial(k) * rho.powi(k as i32) {
            return Ok((k, b[k - 1]));
        }
    }
    Ok((MAX_ORDER, b[MAX_ORDER - 1]))
}

/// `(N, c)` with `(s - s_b)^N ~ c (lambda - lambda_b)` at a root of `f`.
pub(crate) fn local_expansion(problem: &LocusProblem, s: Complex64, lambda: f64) -> Result<(usize, Complex64)> {
    let plant = problem.plant();
    match problem.kind() {
        LocusKind::Gain => {
            let (n, b) = local_order(plant, s, plant.delay())?;
            Ok((n, -factorial(n) / (lambda * b)))
        }
        LocusKind::Delay => {
            let (n, b) = local_order(plant, s, lambda)?;
            Ok((n, s * factorial(n) / b))
        }
    }
}

fn same_point(a: Complex64, b: Complex64, tol: f64) -> bool {
    (a - b).norm() <= tol * a.norm().max(1.0)
}

/// Expansion at a gain-locus start on a pole of multiplicity `k`:
/// `(s - p)^k ~ -alpha N(p) e^{-hp} / D_k(p) * lambda`.
fn pole_expansion(plant: &Plant, p: Complex64) -> (usize, Complex64) {
    let mut k = 0;
    let mut dk = Complex64::new(1.0, 0.0);
    for q in plant.poles() {
        if same_point(p, *q, CLUSTER_TOL) {
            k += 1;
        } else {
            dk *= p - q;
        }
    }
    let n: Complex64 = plant.zeros().iter().map(|z| p - z).product();
    let c = -(n * plant.gain()) * (-plant.delay() * p).exp() / dk;
    (k, c)
}

/// `(N, c)` for a trajectory origin.
pub(crate) fn origin_expansion(problem: &LocusProblem, point: &CriticalPoint) -> Result<(usize, Complex64)> {
    if point.kind == CriticalKind::Start && problem.kind() == LocusKind::Gain {
        Ok(pole_expansion(problem.plant(), point.root))
    } else {
        local_expansion(problem, point.root, point.lambda)
    }
}

pub(crate) fn normalize(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

/// Unit directions of the `N` solution arcs leaving (`outgoing`) or reaching
/// the point, for `(s - s_b)^N = c (lambda - lambda_b)`.
pub(crate) fn expansion_directions(n: usize, c: Complex64, outgoing: bool) -> Vec<[f64; 3]> {
    if n == 1 {
        let v = normalize([c.re, c.im, 1.0]);
        return vec![if outgoing { v } else { [-v[0], -v[1], -v[2]] }];
    }
    let base = c.arg() + if outgoing { 0.0 } else { PI };
    (0..n)
        .map(|m| {
            let th = (base + 2.0 * PI * m as f64) / n as f64;
            [th.cos(), th.sin(), 0.0]
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Starting points and branch points.

fn sort_points(v: &mut [CriticalPoint]) {
    v.sort_by(|a, b| {
        a.lambda
            .total_cmp(&b.lambda)
            .then(a.kind.cmp(&b.kind))
            .then(a.root.im.total_cmp(&b.root.im))
            .then(a.root.re.total_cmp(&b.root.re))
    });
}

/// Roots of `f(., 0)` inside the region.
pub fn starting_points(problem: &LocusProblem) -> Result<Vec<CriticalPoint>> {
    let plant = problem.plant();
    let sigma0 = problem.sigma0();
    let mut out: Vec<CriticalPoint> = Vec::new();
    match problem.kind() {
        LocusKind::Gain => {
            for p in plant.poles().iter().filter(|p| p.re >= sigma0) {
                if out.iter().any(|c| same_point(c.root, *p, CLUSTER_TOL)) {
                    continue;
                }
                let (k, c) = pole_expansion(plant, *p);
                out.push(CriticalPoint {
                    kind: CriticalKind::Start,
                    root: *p,
                    lambda: 0.0,
                    multiplicity: k,
                    directions: expansion_directions(k, c, true),
                });
            }
        }
        LocusKind::Delay => {
            let roots = rational_zeros(plant, RationalTarget::UnityFeedback)?;
            let mut clusters: Vec<Vec<Complex64>> = Vec::new();
            for r in roots {
                match clusters.iter_mut().find(|cl| same_point(cl[0], r, 1e-5)) {
                    Some(cl) => cl.push(r),
                    None => clusters.push(vec![r]),
                }
            }
            for cl in clusters {
                let mean = cl.iter().sum::<Complex64>() / cl.len() as f64;
                let s = if plant.conjugate_symmetric() && mean.im.abs() < 1e-10 * mean.norm().max(1.0) {
                    Complex64::new(mean.re, 0.0)
                } else {
                    mean
                };
                if s.re < sigma0 {
                    continue;
                }
                let (n, c) = local_expansion(problem, s, 0.0)?;
                out.push(CriticalPoint {
                    kind: CriticalKind::Start,
                    root: s,
                    lambda: 0.0,
                    multiplicity: n,
                    directions: expansion_directions(n, c, true),
                });
            }
        }
    }
    sort_points(&mut out);
    Ok(out)
}

fn polish_branch(plant: &Plant, mut s: Complex64, h: f64) -> Complex64 {
    let Ok(mut l) = plant.log_derivative(s).map(|v| v - h) else { return s };
    for _ in 0..8 {
        let d = plant.log_derivative_k(s, 2);
        if d.norm() == 0.0 || l.norm() == 0.0 {
            break;
        }
        let cand = s - l / d;
        match plant.log_derivative(cand) {
            Ok(v) if (v - h).norm() < l.norm() => {
                s = cand;
                l = v - h;
            }
            _ => break,
        }
    }
    s
}

/// Multiple roots of the gain locus inside the region with
/// `0 < lambda <= lambda_max`.
pub fn branch_points_gain(problem: &LocusProblem) -> Result<Vec<CriticalPoint>> {
    let plant = problem.plant();
    let h = plant.delay();
    let sigma0 = problem.sigma0();
    let candidates = match rational_zeros(plant, RationalTarget::LogDerivativeShift { h }) {
        Ok(c) => c,
        Err(Error::DegeneratePolynomial) => return Ok(Vec::new()),
        Err(e) => return Err(e),
    };
    let mut out: Vec<CriticalPoint> = Vec::new();
    for cand in candidates {
        let near_singular = plant
            .zeros()
            .iter()
            .chain(plant.poles())
            .any(|z| same_point(cand, *z, SPURIOUS_TOL));
        if near_singular {
            continue;
        }
        let mut s = polish_branch(plant, cand, h);
        if plant.conjugate_symmetric() && s.im.abs() < 1e-8 * s.norm().max(1.0) {
            s = polish_branch(plant, Complex64::new(s.re, 0.0), h);
            s.im = 0.0;
        }
        if s.re < sigma0 - crate::plant::BOUNDARY_TOL * sigma0.abs().max(1.0) {
            continue;
        }
        if plant.phase(s.re, s.im, h)?.abs() >= BRANCH_PHASE_TOL {
            continue;
        }
        let lambda = (-plant.log_magnitude(s.re, s.im, 1.0, h)?).exp();
        if !(lambda > 0.0 && lambda <= problem.lambda_max()) {
            continue;
        }
        if (s.re - sigma0).abs() < crate::plant::BOUNDARY_TOL * sigma0.abs().max(1.0) {
            return Err(Error::BranchOnBoundary { re: s.re, im: s.im });
        }
        if out.iter().any(|b| same_point(b.root, s, 1e-6)) {
            continue;
        }
        let (n, c) = local_expansion(problem, s, lambda)?;
        out.push(CriticalPoint {
            kind: CriticalKind::Branch,
            root: s,
            lambda,
            multiplicity: n.max(2),
            directions: expansion_directions(n.max(2), c, true),
        });
    }
    sort_points(&mut out);
    Ok(out)
}

// ---------------------------------------------------------------------------
// Boundary functions and frequency intervals.

/// Level function along the boundary and its admissible band.
struct BoundaryLevel {
    delay: f64,
    lo: f64,
    hi: f64,
}

fn boundary_level(problem: &LocusProblem) -> BoundaryLevel {
    match problem.kind() {
        LocusKind::Gain => BoundaryLevel { delay: problem.plant().delay(), lo: f64::NEG_INFINITY, hi: problem.lambda_max().ln() },
        LocusKind::Delay => BoundaryLevel { delay: 0.0, lo: 0.0, hi: problem.lambda_max() * problem.sigma0().abs() },
    }
}

/// Frequency beyond which the magnitude condition cannot hold.
pub fn omega_cap(problem: &LocusProblem) -> Result<f64> {
    let plant = problem.plant();
    let sigma0 = problem.sigma0();
    let lvl = boundary_level(problem);
    let extrema = magnitude_extremum_freqs(plant, sigma0)?;
    let largest = extrema.iter().copied().fold(0.0, f64::max);
    let mut w = (10.0 * plant.max_modulus()).max(2.0 * largest).max(1.0);
    let margin = if plant.is_biproper() {
        let asymptote = lvl.delay * sigma0 - plant.gain().abs().ln();
        (0.5 * (asymptote - lvl.hi)).min(2.0)
    } else {
        2.0
    };
    if margin <= 0.0 {
        return Ok(w);
    }
    for _ in 0..64 {
        if plant.big_lambda_with(sigma0, w, lvl.delay)? > lvl.hi + margin {
            break;
        }
        w *= 2.0;
    }
    Ok(w)
}

fn root_tol(x: f64) -> f64 {
    1e-14 * x.abs().max(1.0)
}

/// Maximal subintervals of `[0, cap]` on which `lo <= f <= hi`, where `f` is
/// monotone between consecutive `breaks`.
fn level_intervals<F: Fn(f64) -> f64>(f: F, breaks: &[f64], cap: f64, lo: f64, hi: f64) -> Result<Vec<(f64, f64)>> {
    let mut pts = vec![0.0];
    pts.extend(breaks.iter().copied().filter(|&b| b > 0.0 && b < cap));
    pts.push(cap);
    let mut out: Vec<(f64, f64)> = Vec::new();
    let solve = |a: f64, b: f64, fa: f64, fb: f64, level: f64| -> Result<f64> {
        let br = Bracket::new(a, b, fa - level, fb - level)?;
        bracketed_root(|x| f(x) - level, br, root_tol(b))
    };
    for win in pts.windows(2) {
        let (a, b) = (win[0], win[1]);
        if b <= a {
            continue;
        }
        let (fa, fb) = (f(a), f(b));
        let (start, end) = if fb >= fa {
            let start = if fa >= lo {
                Some(a)
            } else if fb < lo {
                None
            } else {
                Some(solve(a, b, fa, fb, lo)?)
            };
            let end = if fb <= hi {
                Some(b)
            } else if fa > hi {
                None
            } else {
                Some(solve(a, b, fa, fb, hi)?)
            };
            (start, end)
        } else {
            let start = if fa <= hi {
                Some(a)
            } else if fb > hi {
                None
            } else {
                Some(solve(a, b, fa, fb, hi)?)
            };
            let end = if fb >= lo {
                Some(b)
            } else if fa < lo {
                None
            } else {
                Some(solve(a, b, fa, fb, lo)?)
            };
            (start, end)
        };
        if let (Some(s), Some(e)) = (start, end) {
            if s <= e {
                match out.last_mut() {
                    Some(last) if s - last.1 <= root_tol(s) => last.1 = e,
                    _ => out.push((s, e)),
                }
            }
        }
    }
    Ok(out)
}

/// Frequencies `omega >= 0` where the gain-locus magnitude condition
/// `Lambda(omega) <= ln(lambda_max)` holds.
pub fn magnitude_intervals(problem: &LocusProblem) -> Result<Vec<(f64, f64)>> {
    let plant = problem.plant();
    let sigma0 = problem.sigma0();
    let lvl = boundary_level(problem);
    let breaks = magnitude_extremum_freqs(plant, sigma0)?;
    let cap = omega_cap(problem)?;
    level_intervals(
        |w| plant.big_lambda_with(sigma0, w, lvl.delay).unwrap_or(f64::NAN),
        &breaks,
        cap,
        lvl.lo,
        lvl.hi,
    )
}

fn split_monotone<F: Fn(f64) -> f64>(phi: F, intervals: &[(f64, f64)], breaks: &[f64]) -> Vec<MonotoneInterval> {
    let mut out = Vec::new();
    for &(lo, hi) in intervals {
        let mut pts = vec![lo];
        pts.extend(breaks.iter().copied().filter(|&b| b > lo && b < hi));
        pts.push(hi);
        for w in pts.windows(2) {
            if w[1] > w[0] {
                out.push(MonotoneInterval { lo: w[0], hi: w[1], phi_lo: phi(w[0]), phi_hi: phi(w[1]) });
            } else if lo == hi {
                out.push(MonotoneInterval { lo, hi, phi_lo: phi(lo), phi_hi: phi(hi) });
            }
        }
    }
    out
}

/// Splits magnitude intervals where `phi'` vanishes.
pub fn phase_monotone_partition(problem: &LocusProblem, intervals: &[(f64, f64)]) -> Result<Vec<MonotoneInterval>> {
    let plant = problem.plant();
    let sigma0 = problem.sigma0();
    let h = plant.delay();
    let breaks = phase_extremum_freqs(plant, sigma0, h)?;
    Ok(split_monotone(|w| plant.phi_with(sigma0, w, h).unwrap_or(f64::NAN), intervals, &breaks))
}

/// Solutions of `phase(omega) = (2l + 1) pi` on each monotone interval.
fn odd_pi_solutions<F: Fn(f64) -> f64>(phase: F, parts: &[MonotoneInterval]) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for iv in parts {
        let pmin = iv.phi_lo.min(iv.phi_hi);
        let pmax = iv.phi_lo.max(iv.phi_hi);
        let l_lo = (pmin / (2.0 * PI) - 0.5).ceil() as i64;
        let l_hi = (pmax / (2.0 * PI) - 0.5).floor() as i64;
        for l in l_lo..=l_hi {
            let target = (2 * l + 1) as f64 * PI;
            let (fa, fb) = (iv.phi_lo - target, iv.phi_hi - target);
            let w = if fa.abs() <= 1e-12 * target.abs() {
                iv.lo
            } else if fb.abs() <= 1e-12 * target.abs() {
                iv.hi
            } else {
                let br = Bracket::new(iv.lo, iv.hi, fa, fb)?;
                bracketed_root(|x| phase(x) - target, br, root_tol(iv.hi))?
            };
            out.push(w);
        }
    }
    Ok(out)
}

/// `-sgn(phi'(omega))`: `+1` when the root enters the region as the gain grows.
pub fn crossing_direction(problem: &LocusProblem, omega: f64) -> Result<i8> {
    let d = problem.plant().phi_prime(problem.sigma0(), omega)?;
    if d.abs() < GRAZING_TOL {
        return Err(Error::IllPosedCrossing(omega));
    }
    Ok(if d < 0.0 { 1 } else { -1 })
}

/// `ds/dlambda` at a simple root with `lambda > 0`.
pub(crate) fn root_velocity(problem: &LocusProblem, s: Complex64, lambda: f64) -> Result<Complex64> {
    let plant = problem.plant();
    match problem.kind() {
        LocusKind::Gain => {
            let l = plant.log_derivative(s)? - plant.delay();
            Ok(-(lambda * l).inv())
        }
        LocusKind::Delay => {
            let l = plant.log_derivative(s)? - lambda;
            Ok(s / l)
        }
    }
}

fn crossing_point(problem: &LocusProblem, omega: f64, lambda: f64, cd: i8) -> Result<CriticalPoint> {
    let root = Complex64::new(problem.sigma0(), omega);
    let v = root_velocity(problem, root, lambda)?;
    Ok(CriticalPoint {
        kind: if cd > 0 { CriticalKind::CrossingIn } else { CriticalKind::CrossingOut },
        root,
        lambda,
        multiplicity: 1,
        directions: vec![normalize([v.re, v.im, 1.0])],
    })
}

fn gain_crossings_upper(problem: &LocusProblem) -> Result<Vec<CriticalPoint>> {
    let plant = problem.plant();
    let sigma0 = problem.sigma0();
    let intervals = magnitude_intervals(problem)?;
    let parts = phase_monotone_partition(problem, &intervals)?;
    let omegas = odd_pi_solutions(|w| plant.phi(sigma0, w).unwrap_or(f64::NAN), &parts)?;
    let mut out = Vec::new();
    for w in omegas {
        let lambda = plant.big_lambda(sigma0, w)?.exp();
        if !(lambda > 0.0 && lambda <= problem.lambda_max() * (1.0 + 1e-12)) {
            continue;
        }
        let cd = crossing_direction(problem, w)?;
        out.push(crossing_point(problem, w, lambda.min(problem.lambda_max()), cd)?);
    }
    Ok(out)
}

fn delay_crossings_upper(problem: &LocusProblem) -> Result<Vec<CriticalPoint>> {
    let plant = problem.plant();
    let sigma0 = problem.sigma0();
    let a = sigma0.abs();
    let lvl = boundary_level(problem);
    let lam0 = |w: f64| plant.big_lambda_with(sigma0, w, 0.0).unwrap_or(f64::NAN);
    let breaks = magnitude_extremum_freqs(plant, sigma0)?;
    let cap = omega_cap(problem)?;
    let intervals = level_intervals(lam0, &breaks, cap, lvl.lo, lvl.hi)?;

    let psi = |w: f64| plant.phi_with(sigma0, w, 0.0).unwrap_or(f64::NAN) - lam0(w) / a * w;
    let dpsi = |w: f64| -> f64 {
        let pg = plant.phi_prime_with(sigma0, w, 0.0).unwrap_or(f64::NAN);
        let lp = plant.big_lambda_prime(sigma0, w).unwrap_or(f64::NAN);
        pg - lp / a * w - lam0(w) / a
    };

    let total: f64 = intervals.iter().map(|(l, h)| h - l).sum();
    let budget = (1e4 * (1.0 + problem.lambda_max() * cap / (2.0 * PI))).min(2e6);
    let mut psi_breaks = Vec::new();
    for &(lo, hi) in &intervals {
        if hi <= lo {
            continue;
        }
        let n = ((budget * (hi - lo) / total).ceil() as usize).max(16);
        let mut prev_x = lo;
        let mut prev = dpsi(lo);
        for i in 1..=n {
            let x = lo + (hi - lo) * i as f64 / n as f64;
            let v = dpsi(x);
            if prev != 0.0 && v != 0.0 && prev.signum() != v.signum() {
                let br = Bracket::new(prev_x, x, prev, v)?;
                psi_breaks.push(bracketed_root(dpsi, br, root_tol(x))?);
            }
            prev_x = x;
            prev = v;
        }
    }
    let parts = split_monotone(psi, &intervals, &psi_breaks);
    let omegas = odd_pi_solutions(psi, &parts)?;
    let mut out = Vec::new();
    for w in omegas {
        let lambda = lam0(w) / a;
        if !(lambda >= 0.0 && lambda <= problem.lambda_max() * (1.0 + 1e-12)) {
            continue;
        }
        let lambda = lambda.min(problem.lambda_max());
        let v = root_velocity(problem, Complex64::new(sigma0, w), lambda)?;
        if v.re.abs() < GRAZING_TOL * v.norm().max(1.0) {
            return Err(Error::IllPosedCrossing(w));
        }
        out.push(crossing_point(problem, w, lambda, if v.re > 0.0 { 1 } else { -1 })?);
    }
    Ok(out)
}

fn dedup_crossings(v: &mut Vec<CriticalPoint>) {
    sort_points(v);
    let mut out: Vec<CriticalPoint> = Vec::with_capacity(v.len());
    for p in v.drain(..) {
        let dup = out.iter().any(|q| {
            (q.root.im - p.root.im).abs() < DEDUP_OMEGA && (q.lambda - p.lambda).abs() < DEDUP_LAMBDA
        });
        if !dup {
            out.push(p);
        }
    }
    *v = out;
}

fn all_crossings<F>(problem: &LocusProblem, upper: F) -> Result<Vec<CriticalPoint>>
where
    F: Fn(&LocusProblem) -> Result<Vec<CriticalPoint>>,
{
    let mut out = upper(problem)?;
    if problem.plant().conjugate_symmetric() {
        let mirrored: Vec<CriticalPoint> = out
            .iter()
            .filter(|p| p.root.im > 0.0)
            .map(|p| CriticalPoint {
                root: p.root.conj(),
                directions: p.directions.iter().map(|d| [d[0], -d[1], d[2]]).collect(),
                ..p.clone()
            })
            .collect();
        out.extend(mirrored);
    } else {
        let lower = upper(&problem.conjugated())?;
        out.extend(lower.into_iter().filter(|p| p.root.im > 0.0).map(|p| CriticalPoint {
            root: p.root.conj(),
            directions: p.directions.iter().map(|d| [d[0], -d[1], d[2]]).collect(),
            ..p
        }));
    }
    dedup_crossings(&mut out);
    Ok(out)
}

/// Gain-locus roots on `Re(s) = sigma0`, sorted by gain.
pub fn boundary_crossings_gain(problem: &LocusProblem) -> Result<Vec<CriticalPoint>> {
    all_crossings(problem, gain_crossings_upper)
}

/// Delay-locus roots on `Re(s) = sigma0`, sorted by delay.
pub fn boundary_crossings_delay(problem: &LocusProblem) -> Result<Vec<CriticalPoint>> {
    all_crossings(problem, delay_crossings_upper)
}

/// Every critical point of the problem, sorted by parameter value.
pub fn critical_points(problem: &LocusProblem) -> Result<Vec<CriticalPoint>> {
    let mut out = starting_points(problem)?;
    match problem.kind() {
        LocusKind::Gain => {
            out.extend(branch_points_gain(problem)?);
            out.extend(boundary_crossings_gain(problem)?);
        }
        LocusKind::Delay => out.extend(boundary_crossings_delay(problem)?),
    }
    sort_points(&mut out);
    Ok(out)
}

impl PartialOrd for CriticalPoint {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(
            self.lambda
                .total_cmp(&other.lambda)
                .then(self.kind.cmp(&other.kind))
                .then(self.root.im.total_cmp(&other.root.im))
                .then(self.root.re.total_cmp(&other.root.re)),
        )
    }
}
