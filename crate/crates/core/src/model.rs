//! Signal model: damped complex exponentials, sampling schedules, calibrated
//! noise, and the z-plane to s-plane pole mapping.
//!
//! A signal is a sum of modes `beta * exp(s t)` with `s = -alpha + j 2 pi f`.
//! When `conjugate_pairs` is set every mode also contributes its conjugate,
//! so the signal is real.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// One s-plane mode: damping rate `alpha` and frequency `f` in cycles per time unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pole {
    pub alpha: f64,
    pub f: f64,
}

impl Pole {
    pub fn new(alpha: f64, f: f64) -> Self {
        Self { alpha, f }
    }

    /// Build from an s-plane value `s = -alpha + j omega`.
    pub fn from_s(s: Complex64) -> Self {
        Self {
            alpha: -s.re,
            f: s.im / (2.0 * PI),
        }
    }

    /// Build from damping and angular frequency (radians per time unit).
    pub fn from_angular(alpha: f64, omega: f64) -> Self {
        Self {
            alpha,
            f: omega / (2.0 * PI),
        }
    }

    pub fn s(&self) -> Complex64 {
        Complex64::new(-self.alpha, 2.0 * PI * self.f)
    }

    pub fn omega(&self) -> f64 {
        2.0 * PI * self.f
    }

    pub fn conj(&self) -> Self {
        Self {
            alpha: self.alpha,
            f: -self.f,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.alpha.is_finite() && self.f.is_finite()
    }
}

/// A weighted mode of the impulse response.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub beta: f64,
    pub pole: Pole,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignalSpec {
    pub modes: Vec<Mode>,
    pub conjugate_pairs: bool,
}

impl SignalSpec {
    pub fn new(modes: Vec<Mode>, conjugate_pairs: bool) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::invalid("signal needs at least one mode"));
        }
        if let Some(m) = modes
            .iter()
            .find(|m| !m.pole.is_finite() || !m.beta.is_finite())
        {
            return Err(Error::invalid(format!("non-finite mode {m:?}")));
        }
        Ok(Self {
            modes,
            conjugate_pairs,
        })
    }

    /// Two unit-amplitude conjugate pairs sampled nonuniformly in the reference study.
    pub fn example1() -> Self {
        Self {
            modes: vec![
                Mode {
                    beta: 1.0,
                    pole: Pole::new(1.0 / 75.0, 0.08),
                },
                Mode {
                    beta: 1.0,
                    pole: Pole::new(1.0 / 90.0, 0.11),
                },
            ],
            conjugate_pairs: true,
        }
    }

    /// Transient with amplitudes 1.5 / 3.5. Imaginary parts of the poles are
    /// angular frequencies (0.08 and 0.11 rad per time unit).
    pub fn example2() -> Self {
        Self {
            modes: vec![
                Mode {
                    beta: 1.5,
                    pole: Pole::from_angular(0.00555, 0.08),
                },
                Mode {
                    beta: 3.5,
                    pole: Pole::from_angular(0.00666, 0.11),
                },
            ],
            conjugate_pairs: true,
        }
    }

    /// Number of z-plane poles the signal carries (conjugates included).
    pub fn model_order(&self) -> usize {
        if self.conjugate_pairs {
            2 * self.modes.len()
        } else {
            self.modes.len()
        }
    }

    /// Every pole in the signal, conjugates included.
    pub fn all_poles(&self) -> Vec<Pole> {
        let mut out = Vec::with_capacity(self.model_order());
        for m in &self.modes {
            out.push(m.pole);
            if self.conjugate_pairs {
                out.push(m.pole.conj());
            }
        }
        out
    }
}

/// Evaluate the signal at each instant.
pub fn generate_signal(spec: &SignalSpec, times: &[f64]) -> Result<Vec<Complex64>> {
    times
        .iter()
        .map(|&t| {
            if !t.is_finite() {
                return Err(Error::invalid(format!("non-finite time {t}")));
            }
            if t < 0.0 {
                return Err(Error::invalid(format!("negative time {t}")));
            }
            let mut acc = Complex64::new(0.0, 0.0);
            for m in &spec.modes {
                let s = m.pole.s();
                acc += m.beta * (s * t).exp();
                if spec.conjugate_pairs {
                    acc += m.beta * (s.conj() * t).exp();
                }
            }
            Ok(acc)
        })
        .collect()
}

/// Real part of [`generate_signal`]; intended for conjugate-pair signals.
pub fn generate_real(spec: &SignalSpec, times: &[f64]) -> Result<Vec<f64>> {
    Ok(generate_signal(spec, times)?
        .into_iter()
        .map(|v| v.re)
        .collect())
}

/// Sampling instants with gaps drawn i.i.d. uniform on `[min_gap, max_gap]`.
///
/// The first instant is always 0. `min_gap == max_gap` yields a uniform grid.
pub fn make_nonuniform_schedule(
    seed: u64,
    count: usize,
    max_gap: f64,
    min_gap: f64,
) -> Result<Vec<f64>> {
    if count < 2 {
        return Err(Error::invalid(format!(
            "schedule needs count >= 2, got {count}"
        )));
    }
    if !(min_gap > 0.0 && min_gap <= max_gap && max_gap.is_finite()) {
        return Err(Error::invalid(format!(
            "need 0 < min_gap <= max_gap, got min_gap={min_gap}, max_gap={max_gap}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut times = Vec::with_capacity(count);
    let mut t = 0.0;
    times.push(t);
    for _ in 1..count {
        let gap = if min_gap == max_gap {
            min_gap
        } else {
            rng.random_range(min_gap..=max_gap)
        };
        t += gap;
        times.push(t);
    }
    Ok(times)
}

/// Sampled signal values with their instants.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Set when the instants form a uniform grid.
    pub uniform_step: Option<f64>,
}

impl SampleSet {
    /// Validates ordering and detects a uniform step.
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::invalid(format!(
                "{} times but {} values",
                times.len(),
                values.len()
            )));
        }
        if times.is_empty() {
            return Err(Error::invalid("empty sample set"));
        }
        if let Some(bad) = times.iter().chain(values.iter()).find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite sample entry {bad}")));
        }
        if let Some(w) = times.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::invalid(format!(
                "times must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        let uniform_step = detect_uniform_step(&times);
        Ok(Self {
            times,
            values,
            uniform_step,
        })
    }

    /// Uniform samples at `k * step`, k = 0..values.len().
    pub fn uniform(step: f64, values: Vec<f64>) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::invalid(format!("step must be positive, got {step}")));
        }
        let times = (0..values.len()).map(|k| k as f64 * step).collect();
        let mut set = Self::new(times, values)?;
        set.uniform_step = Some(step);
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

fn detect_uniform_step(times: &[f64]) -> Option<f64> {
    if times.len() < 2 {
        return None;
    }
    let step = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    if step <= 0.0 {
        return None;
    }
    times
        .windows(2)
        .all(|w| (w[1] - w[0] - step).abs() < 1e-9 * step)
        .then_some(step)
}

/// Distribution family of the additive noise. All kinds are zero mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseModel {
    WhiteGaussian,
    /// First-order autoregressive Gaussian noise, `r[k] = rho^|k|`.
    Ar1Gaussian {
        rho: f64,
    },
    WhiteUniform,
    WhiteLaplacian,
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseModel::Ar1Gaussian { rho } if !(rho.abs() < 1.0) => Err(Error::invalid(format!(
                "AR(1) coefficient must satisfy |rho| < 1, got {rho}"
            ))),
            _ => Ok(()),
        }
    }

    /// Normalized autocorrelation at an integer lag.
    pub fn normalized_autocorr(&self, lag: i64) -> f64 {
        match *self {
            NoiseModel::Ar1Gaussian { rho } => rho.powi(lag.unsigned_abs() as i32),
            _ => {
                if lag == 0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn is_white(&self) -> bool {
        !matches!(self, NoiseModel::Ar1Gaussian { .. })
    }

    /// Unit-variance noise sequence of length `n`.
    pub fn sample_unit<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        match *self {
            NoiseModel::WhiteGaussian => (0..n).map(|_| StandardNormal.sample(rng)).collect(),
            NoiseModel::Ar1Gaussian { rho } => {
                let innov = (1.0 - rho * rho).sqrt();
                let mut out = Vec::with_capacity(n);
                let mut prev: f64 = StandardNormal.sample(rng);
                for k in 0..n {
                    if k > 0 {
                        let e: f64 = StandardNormal.sample(rng);
                        prev = rho * prev + innov * e;
                    }
                    out.push(prev);
                }
                out
            }
            NoiseModel::WhiteUniform => {
                let h = 3f64.sqrt();
                (0..n).map(|_| rng.random_range(-h..h)).collect()
            }
            NoiseModel::WhiteLaplacian => {
                // inverse CDF with scale b = 1/sqrt(2), variance 2 b^2 = 1
                let b = std::f64::consts::FRAC_1_SQRT_2;
                (0..n)
                    .map(|_| {
                        let u: f64 = rng.random::<f64>() - 0.5;
                        let mag = -(1.0 - 2.0 * u.abs()).max(f64::MIN_POSITIVE).ln();
                        b * mag.copysign(u)
                    })
                    .collect()
            }
        }
    }
}

/// Reference power used to turn an SNR in dB into a noise level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SnrKind {
    /// `mean |g|^2` over the samples.
    #[default]
    Average,
    /// `max |g|^2` over the samples.
    Peak,
}

pub fn signal_power(clean: &[f64], kind: SnrKind) -> f64 {
    match kind {
        SnrKind::Average => clean.iter().map(|v| v * v).sum::<f64>() / clean.len() as f64,
        SnrKind::Peak => clean.iter().map(|v| v * v).fold(0.0, f64::max),
    }
}

/// Noise standard deviation that yields `snr_db` against `clean`.
pub fn sigma_for_snr(clean: &[f64], snr_db: f64, kind: SnrKind) -> Result<f64> {
    if clean.is_empty() {
        return Err(Error::invalid("empty signal"));
    }
    let power = signal_power(clean, kind);
    if power <= 0.0 || !power.is_finite() {
        return Err(Error::invalid("signal power is zero; SNR undefined"));
    }
    if snr_db == f64::INFINITY {
        return Ok(0.0);
    }
    if !snr_db.is_finite() {
        return Err(Error::invalid(format!("invalid SNR {snr_db} dB")));
    }
    Ok((power / 10f64.powf(snr_db / 10.0)).sqrt())
}

/// Add noise at an average-power SNR. `snr_db = f64::INFINITY` disables noise.
pub fn add_noise(
    clean: &[f64],
    noise: NoiseModel,
    snr_db: f64,
    seed: u64,
) -> Result<(Vec<f64>, f64)> {
    add_noise_with(clean, noise, snr_db, SnrKind::Average, seed)
}

pub fn add_noise_with(
    clean: &[f64],
    noise: NoiseModel,
    snr_db: f64,
    kind: SnrKind,
    seed: u64,
) -> Result<(Vec<f64>, f64)> {
    noise.validate()?;
    let sigma = sigma_for_snr(clean, snr_db, kind)?;
    if sigma == 0.0 {
        return Ok((clean.to_vec(), 0.0));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = noise.sample_unit(clean.len(), &mut rng);
    let noisy = clean.iter().zip(&w).map(|(g, w)| g + sigma * w).collect();
    Ok((noisy, sigma))
}

/// Map a z-plane pole to the s-plane at sampling step `step`.
pub fn z_to_s(z: Complex64, step: f64) -> Result<Complex64> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::invalid(format!(
            "sampling step must be positive, got {step}"
        )));
    }
    let mag2 = z.norm_sqr();
    if mag2 == 0.0 || !mag2.is_finite() {
        return Err(Error::Singularity(format!(
            "cannot map z = {z} to the s-plane"
        )));
    }
    // atan2 returns -pi for (-1, -0.0); fold onto the (-pi, pi] branch.
    let mut arg = z.im.atan2(z.re);
    if arg <= -PI {
        arg += 2.0 * PI;
    }
    Ok(Complex64::new(0.5 * mag2.ln(), arg) / step)
}
