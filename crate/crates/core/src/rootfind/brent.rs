use crate::error::{Error, Result};

pub const MAX_ITERS: usize = 200;

/// A sign-changing interval `[lo, hi]` with the function values at its ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    pub f_lo: f64,
    pub f_hi: f64,
}

impl Bracket {
    pub fn new(lo: f64, hi: f64, f_lo: f64, f_hi: f64) -> Result<Self> {
        let b = Bracket { lo, hi, f_lo, f_hi };
        if b.is_valid() {
            Ok(b)
        } else {
            Err(Error::InvalidBracket { lo, hi, f_lo, f_hi })
        }
    }

    /// Evaluates `f` at both ends and validates.
    pub fn from_fn<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64) -> Result<Self> {
        let f_lo = f(lo);
        let f_hi = f(hi);
        Self::new(lo, hi, f_lo, f_hi)
    }

    fn is_valid(&self) -> bool {
        self.lo < self.hi
            && self.f_lo.is_finite()
            && self.f_hi.is_finite()
            && (self.f_lo == 0.0 || self.f_hi == 0.0 || self.f_lo.signum() != self.f_hi.signum())
    }
}

/// Brent's method. Returns a point whose enclosing bracket is narrower than
/// `tol` (or an exact zero).
pub fn bracketed_root<F: FnMut(f64) -> f64>(mut f: F, bracket: Bracket, tol: f64) -> Result<f64> {
    if !bracket.is_valid() {
        return Err(Error::InvalidBracket {
            lo: bracket.lo,
            hi: bracket.hi,
            f_lo: bracket.f_lo,
            f_hi: bracket.f_hi,
        });
    }
    if bracket.f_lo == 0.0 {
        return Ok(bracket.lo);
    }
    if bracket.f_hi == 0.0 {
        return Ok(bracket.hi);
    }
    let (mut a, mut b) = (bracket.lo, bracket.hi);
    let (mut fa, mut fb) = (bracket.f_lo, bracket.f_hi);
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..MAX_ITERS {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b);
        if !fb.is_finite() {
            // Fall back to bisection of the last valid bracket.
            b = 0.5 * (a + c);
            fb = f(b);
            if !fb.is_finite() {
                return Err(Error::NoConvergence(MAX_ITERS));
            }
        }
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn linear() {
        let br = Bracket::from_fn(|x| x - 1.0, 0.0, 2.0).unwrap();
        assert_abs_diff_eq!(bracketed_root(|x| x - 1.0, br, 1e-12).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn cube_root() {
        let f = |x: f64| x * x * x - 2.0;
        let br = Bracket::from_fn(f, 1.0, 2.0).unwrap();
        assert_abs_diff_eq!(bracketed_root(f, br, 1e-13).unwrap(), 2f64.cbrt(), epsilon = 1e-12);
    }

    #[test]
    fn rejects_same_sign() {
        assert!(matches!(Bracket::from_fn(|x| x * x + 1.0, -1.0, 1.0), Err(Error::InvalidBracket { .. })));
        let bad = Bracket { lo: 0.0, hi: 1.0, f_lo: 1.0, f_hi: 2.0 };
        assert!(bracketed_root(|x| x, bad, 1e-10).is_err());
    }

    #[test]
    fn exact_endpoint_zero() {
        let br = Bracket::from_fn(|x| x, 0.0, 1.0).unwrap();
        assert_eq!(bracketed_root(|x| x, br, 1e-12).unwrap(), 0.0);
    }

    proptest! {
        #[test]
        fn halts_and_brackets(root in -10.0f64..10.0, w1 in 0.01f64..20.0, w2 in 0.01f64..20.0, k in 1u32..4) {
            let f = move |x: f64| (x - root).powi(2 * k as i32 - 1) + 0.1 * (x - root);
            let br = Bracket::from_fn(f, root - w1, root + w2).unwrap();
            let tol = 1e-12 * (w1 + w2);
            let mut evals = 0;
            let x = bracketed_root(|x| { evals += 1; f(x) }, br, tol).unwrap();
            prop_assert!(evals <= MAX_ITERS);
            prop_assert!((x - root).abs() < 1e-8 * (1.0 + w1 + w2));
        }
    }
}
