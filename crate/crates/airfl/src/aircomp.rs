//! Analog aggregation over the uplink: optimal transmit scalars, denoising
//! factor and the closed-form aggregation error.
//!
//! Devices in the selected set transmit simultaneously; the receiver applies
//! a combining vector `m` and divides by `sqrt(eta)`. With the zero-forcing
//! transmit scalars the signal part of the estimate is exact and the
//! residual error is pure combined noise, giving
//! `MSE = sigma2 / p0 * max_i ||m||^2 / |m^H h_i|^2`.

use nalgebra::DVector;
use rayon::prelude::*;

use crate::channel::{effective_channel, ChannelSet};
use crate::rng::{substream, tag};
use crate::{C64, Error, Result};

/// Unit-modulus tolerance for reflection coefficients.
pub const PHASE_UNIT_TOL: f64 = 1e-9;

/// Effective-channel magnitudes below this are treated as infeasible rather
/// than clamped; the closed-form error genuinely diverges there.
pub const DEGENERATE_GAIN: f64 = 1e-14;

/// Receive combining vector at the base station.
#[derive(Debug, Clone, PartialEq)]
pub struct Beamformer(DVector<C64>);

impl Beamformer {
    pub fn new(m: DVector<C64>) -> Result<Self> {
        if m.norm() <= 0.0 || !m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::Config("beamformer must be nonzero and finite".into()));
        }
        Ok(Self(m))
    }

    pub fn as_vector(&self) -> &DVector<C64> {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Unit-modulus reflection coefficients of the surface, one per element.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseVector(DVector<C64>);

impl PhaseVector {
    pub fn new(v: DVector<C64>) -> Result<Self> {
        for (n, z) in v.iter().enumerate() {
            if !z.re.is_finite() || !z.im.is_finite() || (z.norm() - 1.0).abs() > PHASE_UNIT_TOL {
                return Err(Error::Config(format!(
                    "reflection coefficient {n} is not unit modulus: |v| = {}",
                    z.norm()
                )));
            }
        }
        Ok(Self(v))
    }

    pub fn from_phases(theta: &[f64]) -> Result<Self> {
        Self::new(DVector::from_iterator(
            theta.len(),
            theta.iter().map(|t| C64::new(t.cos(), t.sin())),
        ))
    }

    /// Zero-length vector for the no-surface case.
    pub fn empty() -> Self {
        Self(DVector::zeros(0))
    }

    pub fn as_vector(&self) -> &DVector<C64> {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// One aggregation instance: channels, the selected device set, the transmit
/// power budget and the receiver noise power (both linear watts).
#[derive(Debug, Clone)]
pub struct AircompInstance {
    pub channels: ChannelSet,
    pub selected: Vec<usize>,
    pub p0: f64,
    pub sigma2: f64,
}

impl AircompInstance {
    /// `sigma2 = 0` is allowed so the Monte-Carlo oracle can check the
    /// noiseless limit; the closed forms then report zero error.
    pub fn new(channels: ChannelSet, selected: Vec<usize>, p0: f64, sigma2: f64) -> Result<Self> {
        if selected.is_empty() {
            return Err(Error::Config("selected set must be nonempty".into()));
        }
        let k = channels.num_devices();
        let mut seen = vec![false; k];
        for &i in &selected {
            if i >= k {
                return Err(Error::Config(format!(
                    "selected device {i} out of range (K = {k})"
                )));
            }
            if seen[i] {
                return Err(Error::Config(format!("device {i} selected twice")));
            }
            seen[i] = true;
        }
        if !(p0 > 0.0) || !p0.is_finite() {
            return Err(Error::Config("p0 must be positive".into()));
        }
        if !(sigma2 >= 0.0) || !sigma2.is_finite() {
            return Err(Error::Config("sigma2 must be nonnegative".into()));
        }
        Ok(Self { channels, selected, p0, sigma2 })
    }

    /// Effective channels of the selected devices under `phases`.
    fn selected_channels(&self, m: &Beamformer, v: &PhaseVector) -> Result<Vec<DVector<C64>>> {
        if m.len() != self.channels.m_antennas {
            return Err(Error::Dimension(format!(
                "beamformer has length {}, channels have {} antennas",
                m.len(),
                self.channels.m_antennas
            )));
        }
        let all = effective_channel(&self.channels, v)?;
        Ok(self.selected.iter().map(|&i| all[i].clone()).collect())
    }

    /// Combined gains `m^H h_i` for the selected devices.
    fn combined_gains(&self, m: &Beamformer, v: &PhaseVector) -> Result<Vec<C64>> {
        Ok(self
            .selected_channels(m, v)?
            .iter()
            .map(|h| m.as_vector().dotc(h))
            .collect())
    }
}

/// Denoising factor `eta = p0 * min_i |m^H h_i|^2`.
pub fn denoising_factor(instance: &AircompInstance, m: &Beamformer, v: &PhaseVector) -> Result<f64> {
    let gains = instance.combined_gains(m, v)?;
    let mut min_gain = f64::INFINITY;
    for (idx, g) in gains.iter().enumerate() {
        let mag = g.norm();
        if mag < DEGENERATE_GAIN {
            return Err(Error::DegenerateChannel(format!(
                "|m^H h| = {mag:e} for selected device {} (error unbounded)",
                instance.selected[idx]
            )));
        }
        min_gain = min_gain.min(mag * mag);
    }
    Ok(instance.p0 * min_gain)
}

/// Zero-forcing transmit scalars `w_i = sqrt(eta) (m^H h_i)^H / |m^H h_i|^2`,
/// one per selected device in set order.
pub fn optimal_transmit_scalars(
    instance: &AircompInstance,
    m: &Beamformer,
    v: &PhaseVector,
) -> Result<Vec<C64>> {
    let eta = denoising_factor(instance, m, v)?;
    let gains = instance.combined_gains(m, v)?;
    Ok(gains
        .iter()
        .map(|g| g.conj() * (eta.sqrt() / g.norm_sqr()))
        .collect())
}

/// Closed-form aggregation error with the degenerate case flagged explicitly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MseReport {
    /// `sigma2 / p0 * max_i ||m||^2 / |m^H h_i|^2`, `inf` when degenerate.
    pub mse: f64,
    /// True when some selected device's combined gain is below
    /// [`DEGENERATE_GAIN`]; the error is then unbounded, never NaN.
    pub degenerate: bool,
}

/// Minimum aggregation MSE achieved by the zero-forcing transmit scalars.
pub fn aggregation_mse(instance: &AircompInstance, m: &Beamformer, v: &PhaseVector) -> Result<MseReport> {
    let gains = instance.combined_gains(m, v)?;
    let m_norm_sqr = m.as_vector().norm_squared();
    let mut worst = 0.0f64;
    for g in &gains {
        let mag = g.norm();
        if mag < DEGENERATE_GAIN {
            return Ok(MseReport { mse: f64::INFINITY, degenerate: true });
        }
        worst = worst.max(m_norm_sqr / (mag * mag));
    }
    Ok(MseReport { mse: instance.sigma2 / instance.p0 * worst, degenerate: false })
}

/// Monte-Carlo estimate of the aggregation error.
///
/// Simulates `g_hat = (1/sqrt(eta)) m^H (sum_i h_i w_i s_i + n)` with
/// unit-variance circularly-symmetric Gaussian symbols and noise
/// `n ~ CN(0, sigma2 I)`, and returns the sample mean of
/// `|g_hat - sum_i s_i|^2`. Draws are split into fixed-size chunks with one
/// substream per chunk, so the result is deterministic for a given seed and
/// independent of thread count.
pub fn mc_mse_oracle(
    instance: &AircompInstance,
    m: &Beamformer,
    v: &PhaseVector,
    draws: usize,
    seed: u64,
) -> Result<f64> {
    if draws < 10_000 {
        return Err(Error::Config(format!("need at least 1e4 draws, got {draws}")));
    }
    let eta = denoising_factor(instance, m, v)?;
    let gains = instance.combined_gains(m, v)?;
    let scalars = optimal_transmit_scalars(instance, m, v)?;
    // Per-device post-combining signal coefficient (1/sqrt(eta)) m^H h_i w_i;
    // exactly 1 for the zero-forcing scalars, but keep the simulation honest.
    let coeff: Vec<C64> = gains
        .iter()
        .zip(scalars.iter())
        .map(|(g, w)| g * w / eta.sqrt())
        .collect();
    let m_vec = m.as_vector();
    let noise_scale = instance.sigma2.sqrt();

    const CHUNK: usize = 8192;
    let chunks = draws.div_ceil(CHUNK);
    let sums: Vec<f64> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = substream(seed, &[chunk as u64, tag::MC_NOISE]);
            let this_chunk = CHUNK.min(draws - chunk * CHUNK);
            let mut acc = 0.0;
            for _ in 0..this_chunk {
                let mut est = C64::default();
                let mut target = C64::default();
                for c in &coeff {
                    let s = gaussian_symbol(&mut rng);
                    est += c * s;
                    target += s;
                }
                let mut combined_noise = C64::default();
                for w in m_vec.iter() {
                    let n = gaussian_symbol(&mut rng) * noise_scale;
                    combined_noise += w.conj() * n;
                }
                est += combined_noise / eta.sqrt();
                acc += (est - target).norm_sqr();
            }
            acc
        })
        .collect();
    Ok(sums.iter().sum::<f64>() / draws as f64)
}

fn gaussian_symbol<R: rand::Rng>(rng: &mut R) -> C64 {
    use rand_distr::StandardNormal;
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}
