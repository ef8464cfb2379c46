//! Plant data and the characteristic-function evaluations built on it.
//!
//! The open loop is `G(s) e^{-hs}` with
//! `G(s) = alpha * prod(s - z_r) / prod(s - p_i)`. Everything numerical in the
//! crate goes through the log-magnitude / phase form of `G`, which stays well
//! scaled where the Cartesian form overflows or oscillates.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported `n + m`.
pub const MAX_DEGREE: usize = 60;

/// Relative tolerance for a pole or zero sitting on the region boundary.
pub const BOUNDARY_TOL: f64 = 1e-9;

const CONJ_TOL: f64 = 1e-9;

/// Wraps an angle to `(-pi, pi]`.
pub fn wrap_angle(x: f64) -> f64 {
    let w = x - 2.0 * PI * ((x - PI) / (2.0 * PI)).ceil();
    if w <= -PI {
        w + 2.0 * PI
    } else {
        w
    }
}

/// Which parameter the locus sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LocusKind {
    /// `f(s, lambda) = 1 + lambda G(s) e^{-hs}`
    Gain,
    /// `f(s, lambda) = 1 + G(s) e^{-lambda s}`
    Delay,
}

impl LocusKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LocusKind::Gain => "gain",
            LocusKind::Delay => "delay",
        }
    }
}

/// A rational plant in zero/pole/gain form plus its dead time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plant {
    zeros: Vec<Complex64>,
    poles: Vec<Complex64>,
    gain: f64,
    delay: f64,
    conjugate_symmetric: bool,
}

impl Plant {
    /// Builds a plant. `delay` may be zero here; the gain locus requires a
    /// positive delay and checks it in [`LocusProblem::new`].
    pub fn new(zeros: Vec<Complex64>, poles: Vec<Complex64>, gain: f64, delay: f64) -> Result<Self> {
        if poles.len() < zeros.len() {
            return Err(Error::InvalidPlant(format!(
                "improper plant: {} poles < {} zeros",
                poles.len(),
                zeros.len()
            )));
        }
        if poles.len() + zeros.len() > MAX_DEGREE {
            return Err(Error::DegreeTooHigh(poles.len() + zeros.len()));
        }
        if !gain.is_finite() || gain == 0.0 {
            return Err(Error::InvalidPlant(format!("gain must be finite and nonzero, got {gain}")));
        }
        if !delay.is_finite() || delay < 0.0 {
            return Err(Error::InvalidPlant(format!("delay must be finite and >= 0, got {delay}")));
        }
        if zeros.iter().chain(poles.iter()).any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidPlant("non-finite pole or zero".into()));
        }
        let conjugate_symmetric = closed_under_conjugation(&zeros) && closed_under_conjugation(&poles);
        Ok(Plant { zeros, poles, gain, delay, conjugate_symmetric })
    }

    pub fn zeros(&self) -> &[Complex64] {
        &self.zeros
    }

    pub fn poles(&self) -> &[Complex64] {
        &self.poles
    }

    pub fn gain(&self) -> f64 {
        self.gain
    }

    pub fn delay(&self) -> f64 {
        self.delay
    }

    pub fn conjugate_symmetric(&self) -> bool {
        self.conjugate_symmetric
    }

    /// The plant with every pole and zero conjugated: `conj(G(conj(s)))`.
    pub fn conjugated(&self) -> Plant {
        Plant {
            zeros: self.zeros.iter().map(|z| z.conj()).collect(),
            poles: self.poles.iter().map(|p| p.conj()).collect(),
            ..self.clone()
        }
    }

    /// `n == m`: `G(infinity) = alpha != 0`.
    pub fn is_biproper(&self) -> bool {
        self.poles.len() == self.zeros.len()
    }

    /// Largest modulus among poles and zeros (0 for a constant plant).
    pub fn max_modulus(&self) -> f64 {
        self.zeros.iter().chain(self.poles.iter()).map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `G(s)` in Cartesian form.
    pub fn transfer(&self, s: Complex64) -> Complex64 {
        let num: Complex64 = self.zeros.iter().map(|z| s - z).product();
        let den: Complex64 = self.poles.iter().map(|p| s - p).product();
        num * self.gain / den
    }

    fn min_pole_distance(&self, s: Complex64) -> f64 {
        self.poles.iter().map(|p| (s - p).norm()).fold(f64::INFINITY, f64::min)
    }

    /// Characteristic function `f(s, lambda)` in Cartesian form. Only used for
    /// residual checks.
    pub fn eval_char_fn(&self, kind: LocusKind, s: Complex64, lambda: f64) -> Result<Complex64> {
        let dist = self.min_pole_distance(s);
        if dist < 1e-12 * s.norm().max(1.0) {
            return Err(Error::PoleProximity { re: s.re, im: s.im, distance: dist });
        }
        let g = self.transfer(s);
        Ok(match kind {
            LocusKind::Gain => 1.0 + lambda * g * (-self.delay * s).exp(),
            LocusKind::Delay => 1.0 + g * (-lambda * s).exp(),
        })
    }

    fn check_domain(&self, sigma: f64, omega: f64) -> Result<()> {
        let s = Complex64::new(sigma, omega);
        let tiny = 1e-14 * s.norm().max(1.0);
        if self.zeros.iter().chain(self.poles.iter()).any(|z| (s - z).norm() <= tiny) {
            return Err(Error::Domain { sigma, omega });
        }
        Ok(())
    }

    /// Log-magnitude of `k G(s) e^{-hs}` at `s = sigma + j omega`.
    pub fn log_magnitude(&self, sigma: f64, omega: f64, k: f64, h: f64) -> Result<f64> {
        self.check_domain(sigma, omega)?;
        let half_log = |z: &Complex64| 0.5 * ((sigma - z.re).powi(2) + (omega - z.im).powi(2)).ln();
        let zs: f64 = self.zeros.iter().map(half_log).sum();
        let ps: f64 = self.poles.iter().map(half_log).sum();
        Ok(self.gain.abs().ln() + zs - ps - h * sigma + k.ln())
    }

    /// Phase residual of `G(s) e^{-hs}` against `pi`, wrapped to `(-pi, pi]`.
    /// Zero exactly where `G(s) e^{-hs}` is negative real.
    pub fn phase(&self, sigma: f64, omega: f64, h: f64) -> Result<f64> {
        self.check_domain(sigma, omega)?;
        Ok(wrap_angle(self.raw_phase(sigma, omega) - h * omega - PI))
    }

    /// `angle(alpha) + sum atan2(zeros) - sum atan2(poles)`, unwrapped sum.
    fn raw_phase(&self, sigma: f64, omega: f64) -> f64 {
        let ang = |z: &Complex64| (omega - z.im).atan2(sigma - z.re);
        let base = if self.gain < 0.0 { PI } else { 0.0 };
        base + self.zeros.iter().map(ang).sum::<f64>() - self.poles.iter().map(ang).sum::<f64>()
    }

    /// `Lambda(omega) = h sigma0 - ln|G(sigma0 + j omega)|` using the plant delay.
    pub fn big_lambda(&self, sigma0: f64, omega: f64) -> Result<f64> {
        self.big_lambda_with(sigma0, omega, self.delay)
    }

    /// [`Plant::big_lambda`] with an explicit delay.
    pub fn big_lambda_with(&self, sigma0: f64, omega: f64, h: f64) -> Result<f64> {
        Ok(-self.log_magnitude(sigma0, omega, 1.0, h)?)
    }

    /// `Lambda'(omega)`; independent of the delay.
    pub fn big_lambda_prime(&self, sigma0: f64, omega: f64) -> Result<f64> {
        self.check_domain(sigma0, omega)?;
        let term = |z: &Complex64| {
            let dw = omega - z.im;
            let ds = sigma0 - z.re;
            dw / (ds * ds + dw * dw)
        };
        Ok(self.poles.iter().map(term).sum::<f64>() - self.zeros.iter().map(term).sum::<f64>())
    }

    /// `Lambda''(omega)`, used to polish extremum frequencies.
    pub fn big_lambda_second(&self, sigma0: f64, omega: f64) -> Result<f64> {
        self.check_domain(sigma0, omega)?;
        let term = |z: &Complex64| {
            let dw = omega - z.im;
            let ds = sigma0 - z.re;
            let g = ds * ds + dw * dw;
            (ds * ds - dw * dw) / (g * g)
        };
        Ok(self.poles.iter().map(term).sum::<f64>() - self.zeros.iter().map(term).sum::<f64>())
    }

    /// Continuous (unwrapped) phase of `G(s) e^{-hs}` along `Re(s) = sigma0`,
    /// with the plant delay.
    pub fn phi(&self, sigma0: f64, omega: f64) -> Result<f64> {
        self.phi_with(sigma0, omega, self.delay)
    }

    /// [`Plant::phi`] with an explicit delay.
    pub fn phi_with(&self, sigma0: f64, omega: f64, h: f64) -> Result<f64> {
        self.check_domain(sigma0, omega)?;
        Ok(self.phi1(sigma0, omega, h) + self.phi_offset(sigma0))
    }

    fn phi1(&self, sigma0: f64, omega: f64, h: f64) -> f64 {
        let at = |z: &Complex64| ((omega - z.im) / (sigma0 - z.re)).atan();
        self.zeros.iter().map(at).sum::<f64>() - self.poles.iter().map(at).sum::<f64>() - h * omega
    }

    /// Offset in `{0, pi}` aligning the arctangent sum with the true phase at
    /// `omega = 0`.
    fn phi_offset(&self, sigma0: f64) -> f64 {
        let diff = self.raw_phase(sigma0, 0.0) - self.phi1(sigma0, 0.0, 0.0);
        let d0 = wrap_angle(diff).abs();
        let dpi = wrap_angle(diff - PI).abs();
        if dpi < d0 {
            PI
        } else {
            0.0
        }
    }

    /// `phi'(omega)` with the plant delay.
    pub fn phi_prime(&self, sigma0: f64, omega: f64) -> Result<f64> {
        self.phi_prime_with(sigma0, omega, self.delay)
    }

    /// [`Plant::phi_prime`] with an explicit delay.
    pub fn phi_prime_with(&self, sigma0: f64, omega: f64, h: f64) -> Result<f64> {
        self.check_domain(sigma0, omega)?;
        let term = |z: &Complex64| {
            let dw = omega - z.im;
            let ds = sigma0 - z.re;
            ds / (ds * ds + dw * dw)
        };
        Ok(self.zeros.iter().map(term).sum::<f64>() - self.poles.iter().map(term).sum::<f64>() - h)
    }

    /// `phi''(omega)`; independent of the delay.
    pub fn phi_second(&self, sigma0: f64, omega: f64) -> Result<f64> {
        self.check_domain(sigma0, omega)?;
        let term = |z: &Complex64| {
            let dw = omega - z.im;
            let ds = sigma0 - z.re;
            let g = ds * ds + dw * dw;
            -2.0 * ds * dw / (g * g)
        };
        Ok(self.zeros.iter().map(term).sum::<f64>() - self.poles.iter().map(term).sum::<f64>())
    }

    /// `G'(s) / G(s)` as a partial-fraction sum.
    pub fn log_derivative(&self, s: Complex64) -> Result<Complex64> {
        self.check_domain(s.re, s.im)?;
        let zs: Complex64 = self.zeros.iter().map(|z| (s - z).inv()).sum();
        let ps: Complex64 = self.poles.iter().map(|p| (s - p).inv()).sum();
        Ok(zs - ps)
    }

    /// k-th derivative of `ln G(s)` for `k >= 2`.
    pub(crate) fn log_derivative_k(&self, s: Complex64, k: usize) -> Complex64 {
        debug_assert!(k >= 2);
        let fact: f64 = (1..k).map(|i| i as f64).product();
        let sign = if (k - 1).is_multiple_of(2) { 1.0 } else { -1.0 };
        let pw = |z: &Complex64| (s - z).powi(-(k as i32));
        let zs: Complex64 = self.zeros.iter().map(pw).sum();
        let ps: Complex64 = self.poles.iter().map(pw).sum();
        (zs - ps) * (sign * fact)
    }
}

fn closed_under_conjugation(v: &[Complex64]) -> bool {
    let mut used = vec![false; v.len()];
    for i in 0..v.len() {
        if used[i] {
            continue;
        }
        let target = v[i].conj();
        let tol = CONJ_TOL * v[i].norm().max(1.0);
        if (v[i] - target).norm() <= tol {
            used[i] = true;
            continue;
        }
        let partner = (0..v.len()).find(|&j| j != i && !used[j] && (v[j] - target).norm() <= tol);
        match partner {
            Some(j) => {
                used[i] = true;
                used[j] = true;
            }
            None => return false,
        }
    }
    true
}

/// A root-locus problem: plant, locus kind, region abscissa and parameter bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocusProblem {
    kind: LocusKind,
    sigma0: f64,
    lambda_max: f64,
    plant: Plant,
}

impl LocusProblem {
    pub fn new(kind: LocusKind, sigma0: f64, lambda_max: f64, plant: Plant) -> Result<Self> {
        if !sigma0.is_finite() || sigma0 >= 0.0 {
            return Err(Error::InvalidProblem {
                field: "sigma0",
                reason: format!("region abscissa must be negative, got {sigma0}"),
            });
        }
        if !lambda_max.is_finite() || lambda_max <= 0.0 {
            return Err(Error::InvalidProblem {
                field: "lambda_max",
                reason: format!("parameter bound must be positive, got {lambda_max}"),
            });
        }
        if kind == LocusKind::Gain && plant.delay() <= 0.0 {
            return Err(Error::InvalidProblem {
                field: "delay",
                reason: format!("gain locus needs a positive dead time, got {}", plant.delay()),
            });
        }
        let tol = BOUNDARY_TOL * sigma0.abs().max(1.0);
        for (label, set) in [("poles", plant.poles()), ("zeros", plant.zeros())] {
            if let Some(z) = set.iter().find(|z| (z.re - sigma0).abs() < tol) {
                return Err(Error::InvalidProblem {
                    field: label,
                    reason: format!(
                        "{}{:+}j lies on the region boundary Re(s) = {sigma0}; \
                         poles and zeros must stay off the boundary",
                        z.re, z.im
                    ),
                });
            }
        }
        if plant.is_biproper() {
            let d = plant.gain().abs();
            match kind {
                LocusKind::Gain => {
                    let bound = (plant.delay() * sigma0).exp() / d;
                    if lambda_max >= bound {
                        return Err(Error::InvalidProblem {
                            field: "lambda_max",
                            reason: format!(
                                "biproper plant (|G(inf)| = {d}): for gains at or above \
                                 e^(h*sigma0)/|G(inf)| = {bound} the neutral root chains \
                                 put infinitely many roots in the region; need lambda_max < {bound}"
                            ),
                        });
                    }
                }
                LocusKind::Delay => {
                    let bound = (-d.ln() / sigma0.abs()).max(0.0);
                    if lambda_max >= bound {
                        return Err(Error::InvalidProblem {
                            field: "lambda_max",
                            reason: format!(
                                "biproper plant (|G(inf)| = {d}): neutral root chains sit at \
                                 Re(s) = ln|G(inf)|/lambda and enter the region unless \
                                 lambda_max < max(0, ln(1/|G(inf)|)/|sigma0|) = {bound}"
                            ),
                        });
                    }
                }
            }
        }
        Ok(LocusProblem { kind, sigma0, lambda_max, plant })
    }

    /// Same problem for the conjugated plant; its boundary data at `omega`
    /// describe the original plant at `-omega`.
    pub(crate) fn conjugated(&self) -> LocusProblem {
        LocusProblem { plant: self.plant.conjugated(), ..self.clone() }
    }

    pub fn kind(&self) -> LocusKind {
        self.kind
    }

    pub fn sigma0(&self) -> f64 {
        self.sigma0
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    pub fn plant(&self) -> &Plant {
        &self.plant
    }

    /// Delay and gain multiplier entering `(M, P)` at parameter `lambda`.
    pub(crate) fn gain_and_delay(&self, lambda: f64) -> (f64, f64) {
        match self.kind {
            LocusKind::Gain => (lambda, self.plant.delay()),
            LocusKind::Delay => (1.0, lambda),
        }
    }

    /// `f(s, lambda)` for this problem's locus kind.
    pub fn char_fn(&self, s: Complex64, lambda: f64) -> Result<Complex64> {
        self.plant.eval_char_fn(self.kind, s, lambda)
    }

    /// `|f(s, lambda)|` evaluated as `|1 - e^{M + jP}|`, finite even where the
    /// Cartesian form overflows.
    pub fn log_residual(&self, sigma: f64, omega: f64, lambda: f64) -> Result<f64> {
        let (k, h) = self.gain_and_delay(lambda);
        let m = self.plant.log_magnitude(sigma, omega, k, h)?;
        let p = self.plant.phase(sigma, omega, h)?;
        Ok((1.0 - Complex64::new(m, p).exp()).norm())
    }
}
