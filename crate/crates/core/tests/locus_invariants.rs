use num_complex::Complex64;
use proptest::prelude::*;
use rootlocus::{
    compute_root_locus, ContinuationConfig, CriticalKind, LocusKind, LocusProblem, Plant, RootLocusResult, Termination,
};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn solve(problem: &LocusProblem) -> RootLocusResult {
    compute_root_locus(problem, &ContinuationConfig::for_problem(problem)).unwrap()
}

/// Root of `atan(w) + h w = pi`, bisected.
fn first_order_crossing(h: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 100.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid.atan() + h * mid < std::f64::consts::PI {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn first_order_gain_margin() {
    let plant = Plant::new(vec![], vec![c(-1.0, 0.0)], 1.0, 1.0).unwrap();
    let p = LocusProblem::new(LocusKind::Gain, -2.5, 4.0, plant).unwrap();
    let r = solve(&p);
    let w = first_order_crossing(1.0);
    let k = (1.0 + w * w).sqrt();
    assert_eq!(r.stability_intervals.len(), 1);
    let (a, b) = r.stability_intervals[0];
    assert_eq!(a, 0.0);
    assert!((b - k).abs() < 1e-7, "{b} vs {k}");
}

#[test]
fn first_order_delay_margin() {
    let plant = Plant::new(vec![], vec![c(-1.0, 0.0)], 2.0, 0.0).unwrap();
    let p = LocusProblem::new(LocusKind::Delay, -3.0, 3.0, plant).unwrap();
    let r = solve(&p);
    let w = 3.0f64.sqrt();
    let h = (std::f64::consts::PI - w.atan()) / w;
    assert_eq!(r.stability_intervals.len(), 1);
    let (a, b) = r.stability_intervals[0];
    assert_eq!(a, 0.0);
    assert!((b - h).abs() < 1e-7, "{b} vs {h}");
}

#[test]
fn result_json_round_trip() {
    let plant = Plant::new(vec![c(-3.0, 0.0)], vec![c(-1.0, 2.0), c(-1.0, -2.0), c(-0.5, 0.0)], 1.0, 0.5).unwrap();
    let p = LocusProblem::new(LocusKind::Gain, -2.5, 3.0, plant).unwrap();
    let r = solve(&p);
    let text = serde_json::to_string(&r).unwrap();
    let back: RootLocusResult = serde_json::from_str(&text).unwrap();
    assert_eq!(serde_json::to_string(&back).unwrap(), text);
}

fn plant_strategy() -> impl Strategy<Value = (Vec<Complex64>, Vec<Complex64>, f64, f64)> {
    let real = -4.0f64..0.5;
    let pair = (-4.0f64..0.5, 0.2f64..4.0);
    (
        proptest::collection::vec(real.clone(), 0..2),
        proptest::collection::vec(pair.clone(), 0..2),
        proptest::collection::vec(real, 1..3),
        prop_oneof![Just(1.0f64), Just(-1.0f64)],
        0.2f64..1.5,
    )
        .prop_map(|(zr, zc, pr, sign, h)| {
            let zeros: Vec<Complex64> = zr.iter().map(|&x| c(x, 0.0)).collect();
            let mut poles: Vec<Complex64> = pr.iter().map(|&x| c(x, 0.0)).collect();
            for (re, im) in zc {
                poles.push(c(re, im));
                poles.push(c(re, -im));
            }
            let zeros = if zeros.len() >= poles.len() { zeros[..poles.len() - 1].to_vec() } else { zeros };
            (zeros, poles, sign, h)
        })
}

fn sane(z: &[Complex64], p: &[Complex64], sigma0: f64) -> bool {
    let all: Vec<Complex64> = z.iter().chain(p).copied().collect();
    all.iter().all(|x| (x.re - sigma0).abs() > 0.05)
        && all.iter().enumerate().all(|(i, a)| all[i + 1..].iter().all(|b| (a - b).norm() > 0.05))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn gain_locus_invariants((zeros, poles, sign, h) in plant_strategy(), lambda_max in 0.2f64..3.0) {
        let sigma0 = -4.5;
        prop_assume!(sane(&zeros, &poles, sigma0));
        let plant = Plant::new(zeros, poles, sign, h).unwrap();
        let p = LocusProblem::new(LocusKind::Gain, sigma0, lambda_max, plant).unwrap();
        let r = solve(&p);

        prop_assert_eq!(r.stalled_count(), 0);
        for t in &r.trajectories {
            for q in &t.points {
                prop_assert!(q.sigma >= sigma0 - 1e-9);
                prop_assert!(q.lambda >= -1e-12 && q.lambda <= lambda_max * (1.0 + 1e-12));
                prop_assert!(q.residual.abs() < 1e-4, "residual {}", q.residual);
            }
            if t.termination == Termination::LambdaMaxReached {
                let last = t.points.last().unwrap();
                prop_assert!((last.lambda - lambda_max).abs() < 1e-9 * lambda_max.max(1.0));
            }
        }

        // Critical points of a real plant come in conjugate pairs.
        for a in &r.critical_points {
            prop_assert!(r.critical_points.iter().any(|b| b.kind == a.kind
                && (b.root - a.root.conj()).norm() < 1e-6
                && (b.lambda - a.lambda).abs() < 1e-6 * a.lambda.abs().max(1.0)));
        }

        // Every entering crossing below lambda_max starts exactly one trajectory.
        for (i, cp) in r.critical_points.iter().enumerate() {
            if cp.kind == CriticalKind::CrossingIn && cp.lambda < lambda_max {
                prop_assert_eq!(r.trajectories.iter().filter(|t| t.origin == i).count(), 1);
            }
        }

        // Intervals are sorted, disjoint and inside [0, lambda_max].
        let iv = &r.stability_intervals;
        for (k, &(a, b)) in iv.iter().enumerate() {
            prop_assert!(0.0 <= a && a <= b && b <= lambda_max);
            if k > 0 {
                prop_assert!(iv[k - 1].1 < a);
            }
        }
    }

    #[test]
    fn worker_count_does_not_change_result((zeros, poles, sign, h) in plant_strategy()) {
        let sigma0 = -4.5;
        prop_assume!(sane(&zeros, &poles, sigma0));
        let plant = Plant::new(zeros, poles, sign, h).unwrap();
        let p = LocusProblem::new(LocusKind::Gain, sigma0, 1.5, plant).unwrap();
        let mut cfg = ContinuationConfig::for_problem(&p);
        let a = serde_json::to_string(&compute_root_locus(&p, &cfg).unwrap()).unwrap();
        cfg.workers = 3;
        let b = serde_json::to_string(&compute_root_locus(&p, &cfg).unwrap()).unwrap();
        prop_assert_eq!(a, b);
    }
}
