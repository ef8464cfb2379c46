//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rootlocus::critical::{omega_cap, starting_points};
use rootlocus::engine::imaginary_axis_events;
use rootlocus::rootfind::{complex_poly_roots, magnitude_extremum_freqs, phase_extremum_freqs};
use rootlocus::{
    compute_root_locus, ContinuationConfig, CriticalKind, LocusKind, LocusProblem, Plant, RootLocusResult,
    Termination,
};
use rootlocus_cli::output::emit_results;
use rootlocus_cli::svg::{render_svg, SvgOptions};

// Tolerances.
const C1_ENDPOINT_TOL: f64 = 0.01;
const C1_BUDGET: Duration = Duration::from_secs(60);
const C2_ENDPOINT_TOL: f64 = 0.002;
const C2_BUDGET: Duration = Duration::from_secs(60);
const C3_BRANCH_S_TOL: f64 = 0.0005;
const C3_BRANCH_L_TOL: f64 = 0.0002;
const C3_EXIT_TOL: f64 = 0.0003;
const C3_ONSET_TOL: f64 = 0.005;
const C3_BUDGET: Duration = Duration::from_secs(30);
const C4_TRAJ_RESIDUAL: f64 = 1e-4;
const C4_CRIT_RESIDUAL: f64 = 1e-8;
const C4_RANDOM_PLANTS: usize = 50;
const C5_RANDOM_PLANTS: usize = 20;
const C5_LAMBDAS: usize = 5;
const C5_MATCH_TOL: f64 = 1e-5;
const C5_GRID_STABLE: f64 = 1e-6;
const C6_ZERO_TOL: f64 = 1e-6;
const C7_ANGLE_TOL: f64 = 0.05;
const CHAIN_EXTENT: f64 = 40.0;

// ---------------------------------------------------------------------------
// Problems.

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

fn example1() -> LocusProblem {
    let plant = Plant::new(vec![c(0.0, 0.0); 2], vec![c(0.0, 2.0), c(0.0, -2.0), c(0.0, 4.0), c(0.0, -4.0)], 1.0, 0.0)
        .unwrap();
    LocusProblem::new(LocusKind::Delay, -1.0, 5.0, plant).unwrap()
}

fn example2() -> LocusProblem {
    // Denominator coefficients, highest power first.
    let den = [1.0, -6e-4, 1.4081634, -5.6326533e-4, 0.43481891, -8.6963771e-5, 2.6655565e-2];
    let asc: Vec<C> = den.iter().rev().map(|&x| c(x, 0.0)).collect();
    let poles = complex_poly_roots(&asc).unwrap();
    let plant = Plant::new(vec![], poles, 1e-3, 12.48).unwrap();
    LocusProblem::new(LocusKind::Gain, -1.0, 6.0, plant).unwrap()
}

fn example3() -> LocusProblem {
    let plant =
        Plant::new(vec![c(5.0, 5.0), c(5.0, -5.0)], vec![c(-0.5, 0.0), c(-1.0, 0.0), c(-2.5, 0.0)], 1.0, 1.0).unwrap();
    LocusProblem::new(LocusKind::Gain, -3.5, 5.0, plant).unwrap()
}

fn turning_point() -> LocusProblem {
    let plant =
        Plant::new(vec![c(0.0, 0.0); 2], vec![c(0.0, 1.0), c(0.0, 1.0), c(0.0, -1.0), c(0.0, -1.0)], 1.0, 4.0 * PI / 3.0)
            .unwrap();
    LocusProblem::new(LocusKind::Gain, -1.0, 1.0, plant).unwrap()
}

fn run(p: &LocusProblem) -> (RootLocusResult, Duration) {
    let t = Instant::now();
    let r = compute_root_locus(p, &ContinuationConfig::for_problem(p)).expect("locus computes");
    (r, t.elapsed())
}

// ---------------------------------------------------------------------------
// Independent evaluation of the pole-cleared characteristic function
// F(s) = D(s) + k alpha N(s) e^{-h s}, with its derivative.

struct Cleared {
    zeros: Vec<C>,
    poles: Vec<C>,
    alpha: f64,
}

fn prod_and_deriv(roots: &[C], s: C) -> (C, C) {
    let mut p = c(1.0, 0.0);
    let mut d = c(0.0, 0.0);
    for r in roots {
        d = d * (s - r) + p;
        p *= s - r;
    }
    (p, d)
}

impl Cleared {
    fn new(p: &LocusProblem) -> Self {
        Cleared { zeros: p.plant().zeros().to_vec(), poles: p.plant().poles().to_vec(), alpha: p.plant().gain() }
    }

    /// `(k, h)` for parameter value `lambda`.
    fn kh(p: &LocusProblem, lambda: f64) -> (f64, f64) {
        match p.kind() {
            LocusKind::Gain => (lambda, p.plant().delay()),
            LocusKind::Delay => (1.0, lambda),
        }
    }

    fn eval(&self, s: C, k: f64, h: f64) -> (C, C) {
        let (d, dd) = prod_and_deriv(&self.poles, s);
        let (n, nd) = prod_and_deriv(&self.zeros, s);
        let e = (-h * s).exp() * (k * self.alpha);
        (d + n * e, dd + (nd - n * h) * e)
    }

    /// `|f|` where `f = F / D`.
    fn residual(&self, s: C, k: f64, h: f64) -> f64 {
        let (d, _) = prod_and_deriv(&self.poles, s);
        (self.eval(s, k, h).0 / d).norm()
    }

    fn newton(&self, mut s: C, k: f64, h: f64, iters: usize) -> Option<C> {
        for _ in 0..iters {
            let (f, df) = self.eval(s, k, h);
            if df.norm() == 0.0 {
                return None;
            }
            let step = f / df;
            s -= step;
            if !(s.re.is_finite() && s.im.is_finite()) {
                return None;
            }
            if step.norm() <= 1e-13 * (1.0 + s.norm()) {
                return Some(s);
            }
        }
        None
    }
}

// ---------------------------------------------------------------------------
// Random plants.

fn random_roots(rng: &mut ChaCha8Rng, count: usize) -> Vec<C> {
    let mut out = Vec::new();
    while out.len() < count {
        if count - out.len() >= 2 && rng.gen_bool(0.5) {
            let re = rng.gen_range(-5.0..1.0);
            let im = rng.gen_range(0.05..10.0);
            out.push(c(re, im));
            out.push(c(re, -im));
        } else {
            out.push(c(rng.gen_range(-5.0..1.0), 0.0));
        }
    }
    out
}

fn random_problem(rng: &mut ChaCha8Rng) -> LocusProblem {
    loop {
        let n = rng.gen_range(1..=6);
        let m = rng.gen_range(0..=n);
        let poles = random_roots(rng, n);
        let zeros = random_roots(rng, m);
        let alpha: f64 = rng.gen_range(0.2..2.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let sigma0: f64 = -rng.gen_range(1.0..6.0);
        if poles.iter().chain(&zeros).any(|z| (z.re - sigma0).abs() < 0.05) {
            continue;
        }
        // Keep the asymptotic root chains within |omega| <= CHAIN_EXTENT:
        // for relative degree r they reach (k |alpha| e^{-h sigma0})^{1/r}.
        let r = (n - m) as i32;
        let (kind, h, lmax) = if rng.gen_bool(0.5) {
            let h: f64 = rng.gen_range(0.2..2.0);
            let bound = (h * sigma0).exp() / alpha.abs();
            let lmax = if r == 0 { 0.3 * bound } else { rng.gen_range(0.2..1.0) * (CHAIN_EXTENT.powi(r) * bound).min(3.0) };
            (LocusKind::Gain, h, lmax)
        } else {
            let lmax = if r == 0 {
                0.3 * (-(alpha.abs()).ln() / sigma0.abs()).max(0.0)
            } else {
                let bound = (r as f64 * CHAIN_EXTENT.ln() - alpha.abs().ln()) / sigma0.abs();
                rng.gen_range(0.2..1.0) * bound.min(3.0)
            };
            (LocusKind::Delay, 0.0, lmax)
        };
        if lmax <= 0.0 {
            continue;
        }
        let Ok(plant) = Plant::new(zeros, poles, alpha, h) else { continue };
        if let Ok(p) = LocusProblem::new(kind, sigma0, lmax, plant) {
            return p;
        }
    }
}

fn describe(p: &LocusProblem) -> String {
    format!(
        "{} sigma0={:.3} lmax={:.3} h={:.3} alpha={:.3} poles={:?} zeros={:?}",
        p.kind().as_str(),
        p.sigma0(),
        p.lambda_max(),
        p.plant().delay(),
        p.plant().gain(),
        p.plant().poles(),
        p.plant().zeros()
    )
}

/// Progress lines on stderr when `ACCEPTANCE_VERBOSE` is set.
fn verbose(msg: impl FnOnce() -> String) {
    if std::env::var_os("ACCEPTANCE_VERBOSE").is_some() {
        eprintln!("{}", msg());
    }
}

// ---------------------------------------------------------------------------
// Residual checks.

fn residual_violations(p: &LocusProblem, r: &RootLocusResult) -> (f64, f64, usize) {
    let cl = Cleared::new(p);
    let mut worst_t: f64 = 0.0;
    let mut worst_c: f64 = 0.0;
    let mut stalled = 0;
    for t in &r.trajectories {
        if t.termination == Termination::Stalled {
            stalled += 1;
        }
        for q in &t.points {
            let (k, h) = Cleared::kh(p, q.lambda);
            let res = if p.kind() == LocusKind::Gain && q.lambda == 0.0 {
                prod_and_deriv(&cl.poles, q.root()).0.norm()
            } else {
                cl.residual(q.root(), k, h)
            };
            worst_t = worst_t.max(if res.is_nan() { f64::INFINITY } else { res });
        }
    }
    for cp in &r.critical_points {
        let (k, h) = Cleared::kh(p, cp.lambda);
        let res = if p.kind() == LocusKind::Gain && cp.kind == CriticalKind::Start {
            prod_and_deriv(&cl.poles, cp.root).0.norm()
        } else {
            cl.residual(cp.root, k, h)
        };
        worst_c = worst_c.max(if res.is_nan() { f64::INFINITY } else { res });
    }
    (worst_t, worst_c, stalled)
}

// ---------------------------------------------------------------------------
// Brute-force root oracle at fixed parameter.

fn root_radius(p: &LocusProblem, lambda: f64) -> f64 {
    let (k, h) = Cleared::kh(p, lambda);
    let scale = k * p.plant().gain().abs() * (-h * p.sigma0()).exp();
    let pmax = p.plant().poles().iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut r = 2.0 * pmax + 1.0;
    loop {
        let num: f64 = p.plant().zeros().iter().map(|z| r + z.norm()).product();
        let den: f64 = p.plant().poles().iter().map(|z| r - z.norm()).product();
        if scale * num / den < 0.5 || r > 1e4 {
            return r;
        }
        r *= 1.5;
    }
}

fn dedup(mut v: Vec<C>, tol: f64) -> Vec<C> {
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let mut out: Vec<C> = Vec::new();
    for z in v {
        if !out.iter().any(|o| (o - z).norm() <= tol) {
            out.push(z);
        }
    }
    out
}

fn grid_roots(p: &LocusProblem, lambda: f64, pitch: f64, radius: f64) -> Vec<C> {
    let cl = Cleared::new(p);
    let (k, h) = Cleared::kh(p, lambda);
    let s0 = p.sigma0();
    let nx = ((radius - s0) / pitch).ceil() as usize + 1;
    let ny = (2.0 * radius / pitch).ceil() as usize + 1;
    let mut found = Vec::new();
    for i in 0..nx {
        for j in 0..ny {
            let seed = c(s0 + i as f64 * pitch, -radius + j as f64 * pitch);
            if let Some(z) = cl.newton(seed, k, h, 60) {
                if z.re >= s0 - 1e-9 && z.norm() <= 2.0 * radius && cl.residual(z, k, h) < 1e-9 {
                    found.push(z);
                }
            }
        }
    }
    dedup(found, 1e-8)
}

fn same_set(a: &[C], b: &[C], tol: f64) -> bool {
    a.len() == b.len() && a.iter().all(|x| b.iter().any(|y| (x - y).norm() <= tol))
}

fn oracle_roots(p: &LocusProblem, lambda: f64) -> Vec<C> {
    let radius = root_radius(p, lambda);
    let mut pitch = (radius / 40.0).max(0.05);
    let mut prev = grid_roots(p, lambda, pitch, radius);
    for _ in 0..4 {
        pitch *= 0.5;
        let next = grid_roots(p, lambda, pitch, radius);
        let stable = same_set(&prev, &next, C5_GRID_STABLE);
        prev = next;
        if stable {
            break;
        }
    }
    prev
}

/// Trajectory positions at `lambda`, interpolated and polished at fixed parameter.
fn traced_roots(p: &LocusProblem, r: &RootLocusResult, lambda: f64) -> Vec<C> {
    let cl = Cleared::new(p);
    let (k, h) = Cleared::kh(p, lambda);
    let mut out = Vec::new();
    for t in &r.trajectories {
        let Some(w) = t.points.windows(2).find(|w| w[0].lambda <= lambda && lambda <= w[1].lambda) else { continue };
        let f = if w[1].lambda > w[0].lambda { (lambda - w[0].lambda) / (w[1].lambda - w[0].lambda) } else { 0.0 };
        let guess = w[0].root() + (w[1].root() - w[0].root()) * f;
        out.push(cl.newton(guess, k, h, 30).unwrap_or(guess));
    }
    out
}

// ---------------------------------------------------------------------------
// Sign-scan oracles for the boundary functions.

fn lambda_prime(p: &LocusProblem, w: f64) -> f64 {
    let s0 = p.sigma0();
    let term = |z: &C| (w - z.im) / ((s0 - z.re).powi(2) + (w - z.im).powi(2));
    p.plant().poles().iter().map(term).sum::<f64>() - p.plant().zeros().iter().map(term).sum::<f64>()
}

fn phase_prime(p: &LocusProblem, w: f64, h: f64) -> f64 {
    let s0 = p.sigma0();
    let term = |z: &C| (s0 - z.re) / ((s0 - z.re).powi(2) + (w - z.im).powi(2));
    p.plant().zeros().iter().map(term).sum::<f64>() - p.plant().poles().iter().map(term).sum::<f64>() - h
}

fn scan_zeros(f: impl Fn(f64) -> f64, hi: f64, samples: usize) -> Vec<f64> {
    let mut out = Vec::new();
    let mut x0 = 0.0;
    let mut f0 = f(x0);
    for i in 1..=samples {
        let x1 = hi * i as f64 / samples as f64;
        let f1 = f(x1);
        if f0 == 0.0 {
            out.push(x0);
        } else if f0 * f1 < 0.0 {
            let (mut a, mut b, mut fa) = (x0, x1, f0);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                let fm = f(m);
                if fm == 0.0 || b - a < 1e-15 * (1.0 + m) {
                    a = m;
                    b = m;
                    break;
                }
                if fa * fm < 0.0 {
                    b = m;
                } else {
                    a = m;
                    fa = fm;
                }
            }
            out.push(0.5 * (a + b));
        }
        x0 = x1;
        f0 = f1;
    }
    out
}

/// Every sign-change zero is matched, and every reported zero that is a
/// sign change is matched back.
fn zero_sets_agree(reported: &[f64], scanned: &[f64], f: impl Fn(f64) -> f64, hi: f64) -> bool {
    let forward = scanned.iter().all(|x| reported.iter().any(|y| (x - y).abs() <= C6_ZERO_TOL * x.abs().max(1.0)));
    let backward = reported.iter().filter(|&&y| y > 1e-9 && y < hi * (1.0 - 1e-9)).all(|&y| {
        let d = 1e-5 * y.max(1.0);
        let tangential = f(y - d) * f(y + d) > 0.0;
        tangential || scanned.iter().any(|x| (x - y).abs() <= C6_ZERO_TOL * y.abs().max(1.0))
    });
    forward && backward
}

// ---------------------------------------------------------------------------
// Criteria.

struct Outcome {
    pass: bool,
    detail: String,
}

fn near(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn criterion1() -> Outcome {
    let (r, dt) = run(&example1());
    let want = [(0.83, 1.50), (4.11, 4.50)];
    let got = &r.stability_intervals;
    let ok = got.len() == 2
        && got.iter().zip(want).all(|(g, w)| near(g.0, w.0, C1_ENDPOINT_TOL) && near(g.1, w.1, C1_ENDPOINT_TOL))
        && dt < C1_BUDGET;
    Outcome { pass: ok, detail: format!("intervals {got:.4?} (want {want:?} +/- {C1_ENDPOINT_TOL}), {dt:.2?}") }
}

fn criterion2() -> Outcome {
    let p = example2();
    let unstable = starting_points(&p).unwrap().iter().filter(|s| s.root.re > 0.0).map(|s| s.multiplicity).sum::<usize>();
    let (r, dt) = run(&p);
    let got = &r.stability_intervals;
    let want = (1.860, 4.469);
    let ok = unstable == 6
        && got.len() == 1
        && near(got[0].0, want.0, C2_ENDPOINT_TOL)
        && near(got[0].1, want.1, C2_ENDPOINT_TOL)
        && dt < C2_BUDGET;
    Outcome {
        pass: ok,
        detail: format!("{unstable} unstable starts, intervals {got:.4?} (want {want:?} +/- {C2_ENDPOINT_TOL}), {dt:.2?}"),
    }
}

fn criterion3() -> Outcome {
    let (r, dt) = run(&example3());
    let branch = r
        .critical_points
        .iter()
        .find(|q| q.kind == CriticalKind::Branch && near(q.root.re, -0.6976, 0.01) && q.root.im == 0.0);
    let a = branch.is_some_and(|b| near(b.root.re, -0.6976, C3_BRANCH_S_TOL) && near(b.lambda, 0.0009, C3_BRANCH_L_TOL));
    let exit = r.trajectories.iter().find(|t| {
        let o = &r.critical_points[t.origin];
        o.kind == CriticalKind::Start && near(o.root.re, -2.5, 1e-9) && t.termination == Termination::LeftRegion
    });
    let exit_l = exit.map(|t| t.points.last().unwrap().lambda);
    let b = exit_l.is_some_and(|l| near(l, 0.0023, C3_EXIT_TOL));
    let onset = imaginary_axis_events(&r).into_iter().find(|e| e.direction > 0).map(|e| e.lambda);
    let cc = onset.is_some_and(|l| near(l, 0.07, C3_ONSET_TOL));
    Outcome {
        pass: a && b && cc && dt < C3_BUDGET,
        detail: format!(
            "branch {:?}, exit lambda {exit_l:?}, onset {onset:?}, {dt:.2?}",
            branch.map(|b| (b.root.re, b.lambda))
        ),
    }
}

fn criterion4() -> Outcome {
    let mut worst = (0.0f64, 0.0f64);
    let mut failures = Vec::new();
    let mut problems = vec![example1(), example2(), example3()];
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    problems.extend((0..C4_RANDOM_PLANTS).map(|_| random_problem(&mut rng)));
    for (i, p) in problems.iter().enumerate() {
        verbose(|| format!("criterion 4 problem #{i}: {}", describe(p)));
        let r = match compute_root_locus(p, &ContinuationConfig::for_problem(p)) {
            Ok(r) => r,
            Err(e) => {
                failures.push(format!("#{i} error {e}: {}", describe(p)));
                continue;
            }
        };
        let (t, cp, stalled) = residual_violations(p, &r);
        verbose(|| format!("  {} trajectories, {} points, stalled {stalled}, residuals {t:.2e}/{cp:.2e}", r.trajectories.len(), r.trajectories.iter().map(|t| t.points.len()).sum::<usize>()));
        worst = (worst.0.max(t), worst.1.max(cp));
        if t > C4_TRAJ_RESIDUAL || cp > C4_CRIT_RESIDUAL {
            failures.push(format!("#{i} residuals {t:.2e}/{cp:.2e} stalled {stalled}: {}", describe(p)));
        }
    }
    for f in &failures {
        eprintln!("  criterion 4: {f}");
    }
    Outcome {
        pass: failures.is_empty(),
        detail: format!(
            "{} problems, worst trajectory residual {:.2e} (<= {C4_TRAJ_RESIDUAL:e}), worst critical residual {:.2e} (<= {C4_CRIT_RESIDUAL:e}), {} failing",
            problems.len(),
            worst.0,
            worst.1,
            failures.len()
        ),
    }
}

fn criterion5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut failures = Vec::new();
    let mut checked = 0;
    for i in 0..C5_RANDOM_PLANTS {
        let p = random_problem(&mut rng);
        verbose(|| format!("criterion 5 problem #{i}: {}", describe(&p)));
        let r = match compute_root_locus(&p, &ContinuationConfig::for_problem(&p)) {
            Ok(r) => r,
            Err(e) => {
                failures.push(format!("#{i} error {e}: {}", describe(&p)));
                continue;
            }
        };
        for _ in 0..C5_LAMBDAS {
            let lambda = rng.gen_range(0.0..1.0) * p.lambda_max();
            let margin = 1e-6;
            let inside = |z: &C| z.re >= p.sigma0() + margin;
            let oracle = oracle_roots(&p, lambda);
            let traced = traced_roots(&p, &r, lambda);
            let o_in: Vec<C> = oracle.iter().copied().filter(inside).collect();
            let t_in: Vec<C> = traced.iter().copied().filter(inside).collect();
            let missed: Vec<C> = o_in.iter().copied().filter(|z| !traced.iter().any(|t| (t - z).norm() <= C5_MATCH_TOL)).collect();
            let spurious: Vec<C> = t_in.iter().copied().filter(|z| !oracle.iter().any(|o| (o - z).norm() <= C5_MATCH_TOL)).collect();
            checked += 1;
            verbose(|| format!("  lambda {lambda:.4}: oracle {} traced {}", o_in.len(), t_in.len()));
            if !missed.is_empty() || !spurious.is_empty() || o_in.len() != t_in.len() {
                failures.push(format!(
                    "#{i} lambda={lambda:.5}: oracle {} traced {} missed {missed:.5?} spurious {spurious:.5?}: {}",
                    o_in.len(),
                    t_in.len(),
                    describe(&p)
                ));
            }
        }
    }
    for f in &failures {
        eprintln!("  criterion 5: {f}");
    }
    Outcome {
        pass: failures.is_empty(),
        detail: format!("{checked} (plant, lambda) samples, {} mismatches at tolerance {C5_MATCH_TOL:e}", failures.len()),
    }
}

fn criterion6() -> Outcome {
    let mut bad = Vec::new();
    let mut crossings = 0;
    for (name, p) in [("ex1", example1()), ("ex2", example2()), ("ex3", example3())] {
        let (r, _) = run(&p);
        let cl = Cleared::new(&p);
        for q in r.critical_points.iter().filter(|q| q.is_crossing()) {
            let eps = 1e-6 * q.lambda.max(1e-3);
            let lo = (q.lambda - eps).max(0.0);
            let hi = q.lambda + eps;
            let (k0, h0) = Cleared::kh(&p, lo);
            let (k1, h1) = Cleared::kh(&p, hi);
            let (Some(a), Some(b)) = (cl.newton(q.root, k0, h0, 50), cl.newton(q.root, k1, h1, 50)) else {
                bad.push(format!("{name}: no FD roots near {:?}", q.root));
                continue;
            };
            crossings += 1;
            let fd = (b.re - a.re).signum();
            let want = if q.kind == CriticalKind::CrossingIn { 1.0 } else { -1.0 };
            if fd != want {
                bad.push(format!("{name}: crossing {:?} at lambda {} has FD sign {fd}", q.root, q.lambda));
            }
        }
        let cap = omega_cap(&p).unwrap();
        let h = if p.kind() == LocusKind::Gain { p.plant().delay() } else { 0.0 };
        let lp = |w: f64| lambda_prime(&p, w);
        let pp = |w: f64| phase_prime(&p, w, h);
        let mags = magnitude_extremum_freqs(p.plant(), p.sigma0()).unwrap();
        let phs = phase_extremum_freqs(p.plant(), p.sigma0(), h).unwrap();
        let samples = 200_000;
        if !zero_sets_agree(&mags, &scan_zeros(lp, cap, samples), lp, cap) {
            bad.push(format!("{name}: magnitude-derivative zeros disagree: {mags:?}"));
        }
        if !zero_sets_agree(&phs, &scan_zeros(pp, cap, samples), pp, cap) {
            bad.push(format!("{name}: phase-derivative zeros disagree: {phs:?}"));
        }
    }
    for b in &bad {
        eprintln!("  criterion 6: {b}");
    }
    Outcome { pass: bad.is_empty(), detail: format!("{crossings} crossing directions checked, {} disagreements", bad.len()) }
}

fn angle_between(a: C, b: C) -> f64 {
    (a / b).arg().abs()
}

/// Smallest angle between each incoming chord and the outgoing chords.
fn branch_angles(incoming: &[C], outgoing: &[C]) -> Vec<f64> {
    incoming
        .iter()
        .map(|i| outgoing.iter().map(|o| angle_between(*i, *o)).fold(f64::INFINITY, f64::min))
        .collect()
}

fn criterion7() -> Outcome {
    let p = turning_point();
    let (r, _) = run(&p);
    let stalled = r.stalled_count();
    let cl = Cleared::new(&p);
    let mut angles = Vec::new();
    // Double poles at +-j: incoming roots exist for negative gain.
    for start in r.critical_points.iter().filter(|q| q.kind == CriticalKind::Start) {
        let outs: Vec<_> = r.trajectories.iter().filter(|t| r.critical_points[t.origin] == *start).collect();
        let out_chords: Vec<C> = outs.iter().map(|t| t.points[1].root() - start.root).collect();
        let lam = outs.iter().map(|t| t.points[1].lambda).fold(f64::INFINITY, f64::min);
        let rad = out_chords.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
        let (_, h) = Cleared::kh(&p, 0.0);
        let seeds = (0..16).map(|k| start.root + C::from_polar(rad, 2.0 * PI * k as f64 / 16.0));
        let ins = dedup(seeds.filter_map(|s| cl.newton(s, -lam, h, 60)).filter(|z| (z - start.root).norm() < 4.0 * rad).collect(), 1e-10);
        let in_chords: Vec<C> = ins.iter().map(|z| z - start.root).collect();
        angles.extend(branch_angles(&in_chords, &out_chords));
    }
    // Real double root of the non-minimum-phase plant: last incoming chords versus first outgoing chords.
    let (r3, _) = run(&example3());
    if let Some((bid, b)) = r3.critical_points.iter().enumerate().find(|(_, q)| q.kind == CriticalKind::Branch) {
        let ins: Vec<C> = r3
            .trajectories
            .iter()
            .filter(|t| t.branch == Some(bid))
            .map(|t| t.points[t.points.len() - 2].root() - b.root)
            .collect();
        let outs: Vec<C> = r3.trajectories.iter().filter(|t| t.origin == bid).map(|t| t.points[1].root() - b.root).collect();
        angles.extend(branch_angles(&ins, &outs));
    }
    let ok = stalled == 0 && angles.len() >= 6 && angles.iter().all(|a| near(*a, PI / 2.0, C7_ANGLE_TOL));
    Outcome { pass: ok, detail: format!("stalled {stalled}, branch angles {angles:.4?} (want pi/2 +/- {C7_ANGLE_TOL})") }
}

fn criterion8() -> Outcome {
    let p = example1();
    let mut snapshots = Vec::new();
    for workers in [1, 4] {
        let cfg = ContinuationConfig { workers, ..ContinuationConfig::for_problem(&p) };
        let r = compute_root_locus(&p, &cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let files = emit_results(&r, dir.path()).unwrap();
        let mut bytes: Vec<(String, Vec<u8>)> = files
            .iter()
            .map(|f| (f.strip_prefix(dir.path()).unwrap().display().to_string(), std::fs::read(f).unwrap()))
            .collect();
        let svg = render_svg(&r, &SvgOptions { upper_half_only: true, ..Default::default() });
        bytes.push(("locus.svg".into(), svg.into_bytes()));
        snapshots.push(bytes);
    }
    let same = snapshots[0] == snapshots[1];
    Outcome { pass: same, detail: format!("{} files compared across two runs (1 and 4 workers)", snapshots[0].len()) }
}

fn main() {
    let criteria: [(u32, &str, fn() -> Outcome); 8] = [
        (1, "imaginary-axis delay plant intervals", criterion1),
        (2, "sixth-order long-delay interval", criterion2),
        (3, "non-minimum-phase critical structure", criterion3),
        (4, "residual bounds", criterion4),
        (5, "brute-force oracle equivalence", criterion5),
        (6, "crossing directions and extremum sets", criterion6),
        (7, "turning-point branch angles", criterion7),
        (8, "determinism", criterion8),
    ];
    let filter: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (n, name, f) in criteria {
        if !filter.is_empty() && !filter.contains(&n) {
            continue;
        }
        let t = Instant::now();
        let o = f();
        println!(
            "{} criterion {n} ({name}): {} [{:.2?}]",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            t.elapsed()
        );
        if !o.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
