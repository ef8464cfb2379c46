//! Polynomial assembly and root extraction through companion-matrix eigenvalues.

use nalgebra::{ComplexField, DMatrix};
use num_complex::Complex64;

use super::hqr::{complex_hessenberg_eigenvalues, real_hessenberg_eigenvalues};
use crate::error::{Error, Result};

/// Relative trim threshold for trailing (highest-degree) coefficients.
const TRIM_REL: f64 = 1e-14;
/// Eigenvalues with `|Im| < REAL_TOL (1 + |Re|)` count as real.
const REAL_TOL: f64 = 1e-7;
/// Real roots closer than this are merged.
const DEDUP_TOL: f64 = 1e-8;
/// Neighbouring roots closer than this are checked for being one double root.
const CLUSTER_TOL: f64 = 1e-6;
const POLISH_STEPS: usize = 5;

/// Real polynomial, coefficients in ascending degree.
#[derive(Debug, Clone, PartialEq)]
pub struct RealPolynomial {
    coeffs: Vec<f64>,
}

impl RealPolynomial {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        let max = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        while let Some(&last) = coeffs.last() {
            if last.abs() <= TRIM_REL * max || last == 0.0 {
                coeffs.pop();
            } else {
                break;
            }
        }
        RealPolynomial { coeffs }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    fn eval_with_derivative(&self, x: f64) -> (f64, f64) {
        let mut p = 0.0;
        let mut dp = 0.0;
        for &c in self.coeffs.iter().rev() {
            dp = dp * x + p;
            p = p * x + c;
        }
        (p, dp)
    }

    /// All real roots `>= 0`, ascending and deduplicated.
    pub fn real_nonneg_roots(&self) -> Result<Vec<f64>> {
        self.real_roots_in(0.0, f64::INFINITY)
    }

    /// All real roots in `[lo, hi]`, ascending and deduplicated.
    pub fn real_roots_in(&self, lo: f64, hi: f64) -> Result<Vec<f64>> {
        if self.is_zero() {
            return Err(Error::DegeneratePolynomial);
        }
        let complex: Vec<Complex64> = self.coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect();
        let roots = companion_roots(&complex, true)?;
        let mut real: Vec<f64> = roots
            .into_iter()
            .filter(|r| r.im.abs() < REAL_TOL * (1.0 + r.re.abs()))
            .map(|r| self.polish_real(r.re))
            .filter(|&x| x >= lo - DEDUP_TOL && x <= hi + DEDUP_TOL)
            .map(|x| x.clamp(lo, hi))
            .collect();
        real.sort_by(f64::total_cmp);
        real.dedup_by(|a, b| (*a - *b).abs() < DEDUP_TOL);
        Ok(self.merge_unresolved(real))
    }

    /// Merges neighbouring roots that a double root split into: the
    /// stationary point between them has `|p|` at rounding level.
    fn merge_unresolved(&self, roots: Vec<f64>) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::with_capacity(roots.len());
        for x in roots {
            if let Some(&last) = out.last() {
                if x - last < CLUSTER_TOL * x.abs().max(1.0) {
                    let m = self.stationary_point(0.5 * (last + x));
                    if self.eval(m).abs() <= 100.0 * f64::EPSILON * self.abs_eval(m) {
                        *out.last_mut().unwrap() = if (m - last) * (m - x) <= 0.0 { m } else { 0.5 * (last + x) };
                        continue;
                    }
                }
            }
            out.push(x);
        }
        out
    }

    fn abs_eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x.abs() + c.abs())
    }

    fn stationary_point(&self, mut x: f64) -> f64 {
        for _ in 0..POLISH_STEPS {
            let mut d1 = 0.0;
            let mut d2 = 0.0;
            let mut p = 0.0;
            for &c in self.coeffs.iter().rev() {
                d2 = d2 * x + 2.0 * d1;
                d1 = d1 * x + p;
                p = p * x + c;
            }
            if d2 == 0.0 {
                break;
            }
            x -= d1 / d2;
        }
        x
    }

    fn polish_real(&self, mut x: f64) -> f64 {
        let (mut p, _) = self.eval_with_derivative(x);
        for _ in 0..POLISH_STEPS {
            let (_, dp) = self.eval_with_derivative(x);
            if dp == 0.0 || p == 0.0 {
                break;
            }
            let cand = x - p / dp;
            let (pc, _) = self.eval_with_derivative(cand);
            if !(pc.abs() < p.abs()) {
                break;
            }
            x = cand;
            p = pc;
        }
        x
    }
}

/// All complex roots of a polynomial with complex coefficients (ascending).
pub fn complex_poly_roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let max = coeffs.iter().fold(0.0f64, |m, c| m.max(c.norm()));
    let real = coeffs.iter().all(|c| c.im.abs() <= 1e-15 * max);
    let coeffs: Vec<Complex64> = if real {
        coeffs.iter().map(|c| Complex64::new(c.re, 0.0)).collect()
    } else {
        coeffs.to_vec()
    };
    companion_roots(&coeffs, real)
}

fn trim(coeffs: &[Complex64]) -> Vec<Complex64> {
    let max = coeffs.iter().fold(0.0f64, |m, c| m.max(c.norm()));
    let mut v = coeffs.to_vec();
    while let Some(last) = v.last() {
        if last.norm() <= TRIM_REL * max || last.norm() == 0.0 {
            v.pop();
        } else {
            break;
        }
    }
    v
}

fn horner(coeffs: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

fn companion_roots(coeffs: &[Complex64], real: bool) -> Result<Vec<Complex64>> {
    let coeffs = trim(coeffs);
    if coeffs.is_empty() {
        return Err(Error::DegeneratePolynomial);
    }
    let zero_roots = coeffs.iter().take_while(|c| c.norm() == 0.0).count();
    let reduced = &coeffs[zero_roots..];
    let deg = reduced.len() - 1;
    let mut roots = vec![Complex64::new(0.0, 0.0); zero_roots];
    if deg == 0 {
        return Ok(roots);
    }
    let lead = reduced[deg];
    let monic: Vec<Complex64> = reduced.iter().map(|c| c / lead).collect();
    let eig = if deg == 1 {
        vec![-monic[0]]
    } else if real {
        let mut m = DMatrix::<f64>::zeros(deg, deg);
        for j in 0..deg {
            m[(0, j)] = -monic[deg - 1 - j].re;
        }
        for i in 1..deg {
            m[(i, i - 1)] = 1.0;
        }
        balance(&mut m);
        real_hessenberg_eigenvalues(m).ok_or(Error::Eigen(deg))?
    } else {
        let mut m = DMatrix::<Complex64>::zeros(deg, deg);
        for j in 0..deg {
            m[(0, j)] = -monic[deg - 1 - j];
        }
        for i in 1..deg {
            m[(i, i - 1)] = Complex64::new(1.0, 0.0);
        }
        balance(&mut m);
        complex_hessenberg_eigenvalues(m).ok_or(Error::Eigen(deg))?
    };
    for z in eig {
        roots.push(polish_complex(&monic, z));
    }
    Ok(roots)
}

fn polish_complex(coeffs: &[Complex64], mut z: Complex64) -> Complex64 {
    let (mut p, _) = horner(coeffs, z);
    for _ in 0..POLISH_STEPS {
        let (_, dp) = horner(coeffs, z);
        if dp.norm() == 0.0 || p.norm() == 0.0 {
            break;
        }
        let cand = z - p / dp;
        let (pc, _) = horner(coeffs, cand);
        if !(pc.norm() < p.norm()) {
            break;
        }
        z = cand;
        p = pc;
    }
    z
}

/// Diagonal similarity scaling by powers of two (Parlett-Reinsch).
fn balance<T: ComplexField<RealField = f64>>(m: &mut DMatrix<T>) {
    let n = m.nrows();
    let radix = 2.0f64;
    let sqrdx = radix * radix;
    let mut done = false;
    let mut sweeps = 0;
    while !done && sweeps < 100 {
        done = true;
        sweeps += 1;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    c += m[(j, i)].clone().abs();
                    r += m[(i, j)].clone().abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let mut g = r / radix;
            let mut f = 1.0;
            let s = c + r;
            while c < g {
                f *= radix;
                c *= sqrdx;
            }
            g = r * radix;
            while c > g {
                f /= radix;
                c /= sqrdx;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let g = 1.0 / f;
                for j in 0..n {
                    m[(i, j)] = m[(i, j)].clone() * T::from_real(g);
                }
                for j in 0..n {
                    m[(j, i)] = m[(j, i)].clone() * T::from_real(f);
                }
            }
        }
    }
}

/// Polynomial with a separately tracked logarithmic scale, so that long
/// products of quadratics keep unit-sized coefficients.
#[derive(Debug, Clone)]
pub(crate) struct ScaledPoly {
    coeffs: Vec<Complex64>,
    log_scale: f64,
}

impl ScaledPoly {
    pub fn constant(c: Complex64) -> Self {
        let mut p = ScaledPoly { coeffs: vec![c], log_scale: 0.0 };
        p.normalize();
        p
    }

    pub fn from_coeffs(coeffs: Vec<Complex64>) -> Self {
        let mut p = ScaledPoly { coeffs, log_scale: 0.0 };
        p.normalize();
        p
    }

    pub fn one() -> Self {
        Self::constant(Complex64::new(1.0, 0.0))
    }

    pub fn zero() -> Self {
        ScaledPoly { coeffs: vec![], log_scale: 0.0 }
    }

    fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.norm() == 0.0)
    }

    fn normalize(&mut self) {
        let max = self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.norm()));
        if max > 0.0 && max.is_finite() {
            for c in &mut self.coeffs {
                *c /= max;
            }
            self.log_scale += max.ln();
        }
    }

    pub fn mul(&self, other: &ScaledPoly) -> ScaledPoly {
        if self.coeffs.is_empty() || other.coeffs.is_empty() {
            return ScaledPoly::zero();
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        let mut p = ScaledPoly { coeffs: out, log_scale: self.log_scale + other.log_scale };
        p.normalize();
        p
    }

    pub fn scale(&self, k: f64) -> ScaledPoly {
        if k == 0.0 {
            return ScaledPoly::zero();
        }
        let mut p = self.clone();
        let sign = k.signum();
        for c in &mut p.coeffs {
            *c *= sign;
        }
        p.log_scale += k.abs().ln();
        p
    }

    pub fn add(&self, other: &ScaledPoly) -> ScaledPoly {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        let top = self.log_scale.max(other.log_scale);
        let fa = (self.log_scale - top).exp();
        let fb = (other.log_scale - top).exp();
        let len = self.coeffs.len().max(other.coeffs.len());
        let mut out = vec![Complex64::new(0.0, 0.0); len];
        for (i, c) in self.coeffs.iter().enumerate() {
            out[i] += c * fa;
        }
        for (i, c) in other.coeffs.iter().enumerate() {
            out[i] += c * fb;
        }
        let mut p = ScaledPoly { coeffs: out, log_scale: top };
        p.normalize();
        p
    }

    pub fn sub(&self, other: &ScaledPoly) -> ScaledPoly {
        self.add(&other.scale(-1.0))
    }

    /// Coefficients normalised to unit maximum modulus.
    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }
}

/// `sum_i weights[i] * prod_{j != i} factors[j]`, via prefix/suffix products.
pub(crate) fn sum_of_leave_one_out(weights: &[ScaledPoly], factors: &[ScaledPoly]) -> ScaledPoly {
    debug_assert_eq!(weights.len(), factors.len());
    let n = factors.len();
    let mut prefix = vec![ScaledPoly::one()];
    for f in factors {
        let next = prefix.last().unwrap().mul(f);
        prefix.push(next);
    }
    let mut suffix = vec![ScaledPoly::one(); n + 1];
    for i in (0..n).rev() {
        suffix[i] = suffix[i + 1].mul(&factors[i]);
    }
    let mut acc = ScaledPoly::zero();
    for i in 0..n {
        acc = acc.add(&weights[i].mul(&prefix[i]).mul(&suffix[i + 1]));
    }
    acc
}

pub(crate) fn product(factors: &[ScaledPoly]) -> ScaledPoly {
    factors.iter().fold(ScaledPoly::one(), |acc, f| acc.mul(f))
}
