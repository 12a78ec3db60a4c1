//! Uplink channel generation.
//!
//! Geometry places a multi-antenna base station, a passive reflecting
//! surface and single-antenna devices in 3-D space. Each link coefficient is
//! `sqrt(L(d)) * rho` where `L(d) = C0 * (d / d0)^-alpha` is the distance
//! path loss and `rho` mixes a deterministic unit-modulus line-of-sight
//! steering response with a circularly-symmetric complex Gaussian scattered
//! component according to the per-link Rician factor.
//!
//! Array conventions: the base station is a uniform linear array along the
//! x axis with half-wavelength spacing; the surface is a uniform rectangular
//! array in the y-z plane, with element count factored as the most-square
//! pair. Steering phases are computed from the actual endpoint positions.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::aircomp::PhaseVector;
use crate::rng::{substream, tag};
use crate::{C64, Error, Result};

/// Sentinel "device index" for network-level links (surface-to-BS).
const GLOBAL_LINK: u64 = u64::MAX;

/// Node placement and device count.
#[derive(Debug, Clone)]
pub struct Geometry {
    /// Base-station position, meters.
    pub bs_position: [f64; 3],
    /// Reflecting-surface position, meters.
    pub irs_position: [f64; 3],
    /// Axis-aligned box (min corner, max corner) holding the devices, meters.
    pub device_region: ([f64; 3], [f64; 3]),
    /// Number of devices K.
    pub num_devices: usize,
}

impl Geometry {
    /// Deployment used by the experiment harness: BS at (3, 0, 6) m, surface
    /// at (0, 100, 6) m, devices uniform in [0, 6] x [100, 106] x {0} m.
    pub fn default_deployment(num_devices: usize) -> Self {
        Self {
            bs_position: [3.0, 0.0, 6.0],
            irs_position: [0.0, 100.0, 6.0],
            device_region: ([0.0, 100.0, 0.0], [6.0, 106.0, 0.0]),
            num_devices,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.device_region;
        for axis in 0..3 {
            if !(hi[axis] - lo[axis]).is_finite() || hi[axis] < lo[axis] {
                return Err(Error::Config(format!(
                    "device region has negative extent on axis {axis}"
                )));
            }
        }
        if self.num_devices == 0 {
            return Err(Error::Config("num_devices must be >= 1".into()));
        }
        Ok(())
    }
}

/// Path-loss and Rician-fading parameters.
///
/// The surface-to-BS Rician factor is given in dB (`rician_bi_db`); the two
/// device-side factors are linear. Everything is converted to linear scale
/// internally.
#[derive(Debug, Clone)]
pub struct FadingConfig {
    /// Reference path loss C0 in dB (at distance `d0`).
    pub c0_db: f64,
    /// Reference distance d0, meters.
    pub d0: f64,
    /// Path-loss exponent, device-to-BS links.
    pub alpha_bd: f64,
    /// Path-loss exponent, surface-to-BS link.
    pub alpha_bi: f64,
    /// Path-loss exponent, device-to-surface links.
    pub alpha_id: f64,
    /// Rician factor of the surface-to-BS link, dB.
    pub rician_bi_db: f64,
    /// Rician factor of device-to-surface links, linear.
    pub rician_id: f64,
    /// Rician factor of device-to-BS links, linear.
    pub rician_bd: f64,
}

impl Default for FadingConfig {
    fn default() -> Self {
        Self {
            c0_db: -30.0,
            d0: 1.0,
            alpha_bd: 3.6,
            alpha_bi: 2.2,
            alpha_id: 2.8,
            rician_bi_db: 3.0,
            rician_id: 0.0,
            rician_bd: 0.0,
        }
    }
}

impl FadingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.d0 > 0.0) {
            return Err(Error::Config("d0 must be positive".into()));
        }
        for (name, v) in [
            ("alpha_bd", self.alpha_bd),
            ("alpha_bi", self.alpha_bi),
            ("alpha_id", self.alpha_id),
            ("rician_id", self.rician_id),
            ("rician_bd", self.rician_bd),
        ] {
            if !(v >= 0.0) {
                return Err(Error::Config(format!("{name} must be nonnegative")));
            }
        }
        Ok(())
    }

    fn c0_linear(&self) -> f64 {
        10f64.powf(self.c0_db / 10.0)
    }

    fn rician_bi_linear(&self) -> f64 {
        10f64.powf(self.rician_bi_db / 10.0)
    }

    /// L(d) in linear scale.
    pub fn path_loss(&self, distance: f64, alpha: f64) -> f64 {
        self.c0_linear() * (distance / self.d0).powf(-alpha)
    }
}

/// One realization of all uplink channels.
///
/// `g` is the surface-to-BS matrix (M x N), `h_r[i]` the device-to-surface
/// vector (length N) and `h_d[i]` the direct device-to-BS vector (length M).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    pub g: DMatrix<C64>,
    pub h_r: Vec<DVector<C64>>,
    pub h_d: Vec<DVector<C64>>,
    pub m_antennas: usize,
    pub n_elements: usize,
}

impl ChannelSet {
    pub fn num_devices(&self) -> usize {
        self.h_d.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.g.nrows() != self.m_antennas || self.g.ncols() != self.n_elements {
            return Err(Error::Dimension(format!(
                "g is {}x{}, expected {}x{}",
                self.g.nrows(),
                self.g.ncols(),
                self.m_antennas,
                self.n_elements
            )));
        }
        if self.h_r.len() != self.h_d.len() {
            return Err(Error::Dimension(
                "h_r and h_d device counts differ".into(),
            ));
        }
        for (i, hr) in self.h_r.iter().enumerate() {
            if hr.len() != self.n_elements {
                return Err(Error::Dimension(format!(
                    "h_r[{i}] has length {}, expected {}",
                    hr.len(),
                    self.n_elements
                )));
            }
        }
        for (i, hd) in self.h_d.iter().enumerate() {
            if hd.len() != self.m_antennas {
                return Err(Error::Dimension(format!(
                    "h_d[{i}] has length {}, expected {}",
                    hd.len(),
                    self.m_antennas
                )));
            }
        }
        let finite = self.g.iter().all(|z| z.re.is_finite() && z.im.is_finite())
            && self
                .h_r
                .iter()
                .chain(self.h_d.iter())
                .all(|v| v.iter().all(|z| z.re.is_finite() && z.im.is_finite()));
        if !finite {
            return Err(Error::Numeric("channel set contains non-finite entries".into()));
        }
        Ok(())
    }

    /// Copy with the reflected path removed (N = 0), for no-surface runs.
    pub fn without_irs(&self) -> ChannelSet {
        ChannelSet {
            g: DMatrix::zeros(self.m_antennas, 0),
            h_r: vec![DVector::zeros(0); self.num_devices()],
            h_d: self.h_d.clone(),
            m_antennas: self.m_antennas,
            n_elements: 0,
        }
    }

    /// Copy with every effective channel scaled by `factor` (applied to the
    /// direct vectors and to the surface-to-BS matrix, so the cascaded path
    /// scales exactly once).
    pub fn scaled(&self, factor: f64) -> ChannelSet {
        ChannelSet {
            g: self.g.map(|z| z * factor),
            h_r: self.h_r.clone(),
            h_d: self.h_d.iter().map(|v| v.map(|z| z * factor)).collect(),
            m_antennas: self.m_antennas,
            n_elements: self.n_elements,
        }
    }
}

fn unit_dir(from: [f64; 3], to: [f64; 3]) -> [f64; 3] {
    let d = [to[0] - from[0], to[1] - from[1], to[2] - from[2]];
    let norm = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    if norm == 0.0 {
        [0.0, 0.0, 0.0]
    } else {
        [d[0] / norm, d[1] / norm, d[2] / norm]
    }
}

fn distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Largest factor pair (n1, n2) of n with n1 <= n2 and n1 maximal.
fn most_square_factors(n: usize) -> (usize, usize) {
    let mut best = (1, n);
    let mut d = 1;
    while d * d <= n {
        if n % d == 0 {
            best = (d, n / d);
        }
        d += 1;
    }
    best
}

/// Steering response of the BS linear array toward unit direction `dir`.
/// Elements sit at half-wavelength steps along x.
fn bs_steering(m: usize, dir: [f64; 3]) -> DVector<C64> {
    DVector::from_fn(m, |k, _| {
        let phase = std::f64::consts::PI * k as f64 * dir[0];
        C64::new(phase.cos(), phase.sin())
    })
}

/// Steering response of the surface rectangular array toward `dir`.
/// Element n maps to grid cell (n % n1, n / n1) on the (y, z) axes.
fn irs_steering(n: usize, dir: [f64; 3]) -> DVector<C64> {
    let (n1, _) = most_square_factors(n.max(1));
    DVector::from_fn(n, |idx, _| {
        let a = (idx % n1) as f64;
        let b = (idx / n1) as f64;
        let phase = std::f64::consts::PI * (a * dir[1] + b * dir[2]);
        C64::new(phase.cos(), phase.sin())
    })
}

fn complex_gaussian<R: Rng>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Mix a line-of-sight response with scattered fading at Rician factor `k`.
fn rician_mix<R: Rng>(los: C64, k: f64, rng: &mut R) -> C64 {
    let scattered = complex_gaussian(rng);
    if k.is_infinite() {
        return los;
    }
    los * (k / (1.0 + k)).sqrt() + scattered * (1.0 / (1.0 + k)).sqrt()
}

/// Draw one realization of all uplink channels.
///
/// Deterministic given `(geometry, fading, m_antennas, n_elements, seed)`.
/// Each device's links come from substreams keyed by the device index, so
/// growing K leaves existing devices' channels unchanged. `n_elements = 0`
/// models the no-surface case.
pub fn sample_channels(
    geometry: &Geometry,
    fading: &FadingConfig,
    m_antennas: usize,
    n_elements: usize,
    seed: u64,
) -> Result<ChannelSet> {
    geometry.validate()?;
    fading.validate()?;
    if m_antennas == 0 {
        return Err(Error::Config("m_antennas must be >= 1".into()));
    }
    if n_elements > 0 && geometry.irs_position == geometry.bs_position {
        return Err(Error::Config(
            "surface and BS positions coincide; surface geometry is degenerate".into(),
        ));
    }

    let k_devices = geometry.num_devices;
    let (lo, hi) = geometry.device_region;

    // Device positions, one substream each.
    let positions: Vec<[f64; 3]> = (0..k_devices)
        .map(|i| {
            let mut rng = substream(seed, &[i as u64, tag::DEVICE_POSITION]);
            let mut p = [0.0; 3];
            for axis in 0..3 {
                p[axis] = if hi[axis] > lo[axis] {
                    rng.gen_range(lo[axis]..hi[axis])
                } else {
                    lo[axis]
                };
            }
            p
        })
        .collect();

    // Surface-to-BS matrix: rank-one LoS (outer product of the two array
    // responses) plus i.i.d. scattering.
    let g = if n_elements == 0 {
        DMatrix::zeros(m_antennas, 0)
    } else {
        let gain = fading
            .path_loss(distance(geometry.bs_position, geometry.irs_position), fading.alpha_bi)
            .sqrt();
        let k_factor = fading.rician_bi_linear();
        let a_bs = bs_steering(m_antennas, unit_dir(geometry.bs_position, geometry.irs_position));
        let a_irs = irs_steering(n_elements, unit_dir(geometry.irs_position, geometry.bs_position));
        let mut rng = substream(seed, &[GLOBAL_LINK, tag::LINK_SURFACE_BS]);
        DMatrix::from_fn(m_antennas, n_elements, |r, c| {
            let los = a_bs[r] * a_irs[c].conj();
            gain * rician_mix(los, k_factor, &mut rng)
        })
    };

    let mut h_r = Vec::with_capacity(k_devices);
    let mut h_d = Vec::with_capacity(k_devices);
    for (i, &pos) in positions.iter().enumerate() {
        let hr = if n_elements == 0 {
            DVector::zeros(0)
        } else {
            let gain = fading
                .path_loss(distance(geometry.irs_position, pos), fading.alpha_id)
                .sqrt();
            let los = irs_steering(n_elements, unit_dir(geometry.irs_position, pos));
            let mut rng = substream(seed, &[i as u64, tag::LINK_REFLECT]);
            DVector::from_fn(n_elements, |r, _| gain * rician_mix(los[r], fading.rician_id, &mut rng))
        };
        let gain = fading
            .path_loss(distance(geometry.bs_position, pos), fading.alpha_bd)
            .sqrt();
        let los = bs_steering(m_antennas, unit_dir(geometry.bs_position, pos));
        let mut rng = substream(seed, &[i as u64, tag::LINK_DIRECT]);
        let hd =
            DVector::from_fn(m_antennas, |r, _| gain * rician_mix(los[r], fading.rician_bd, &mut rng));
        h_r.push(hr);
        h_d.push(hd);
    }

    let set = ChannelSet { g, h_r, h_d, m_antennas, n_elements };
    set.validate()?;
    Ok(set)
}

/// Effective per-device channel `h_i = G diag(v) h_r[i] + h_d[i]`.
///
/// With `N = 0` this is just the direct channel.
pub fn effective_channel(channels: &ChannelSet, phases: &PhaseVector) -> Result<Vec<DVector<C64>>> {
    if phases.len() != channels.n_elements {
        return Err(Error::Dimension(format!(
            "phase vector has length {}, channel set has {} elements",
            phases.len(),
            channels.n_elements
        )));
    }
    let mut out = Vec::with_capacity(channels.num_devices());
    for (hr, hd) in channels.h_r.iter().zip(channels.h_d.iter()) {
        if channels.n_elements == 0 {
            out.push(hd.clone());
            continue;
        }
        // G * (v .* h_r) + h_d
        let reflected = DVector::from_fn(channels.n_elements, |n, _| phases.as_vector()[n] * hr[n]);
        let mut h = &channels.g * reflected;
        h += hd;
        out.push(h);
    }
    Ok(out)
}

// --- flat text fixtures -----------------------------------------------------
//
// Line 1: "M N K". Then one complex entry per line as "re im":
// G row-major (M*N lines), then h_r per device (K*N lines), then h_d per
// device (K*M lines). Used for cross-implementation regression fixtures.

impl ChannelSet {
    pub fn to_fixture(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{} {} {}\n",
            self.m_antennas,
            self.n_elements,
            self.num_devices()
        ));
        let mut push = |z: &C64| out.push_str(&format!("{:e} {:e}\n", z.re, z.im));
        for r in 0..self.m_antennas {
            for c in 0..self.n_elements {
                push(&self.g[(r, c)]);
            }
        }
        for hr in &self.h_r {
            for z in hr.iter() {
                push(z);
            }
        }
        for hd in &self.h_d {
            for z in hd.iter() {
                push(z);
            }
        }
        out
    }

    pub fn from_fixture(text: &str) -> Result<ChannelSet> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::Parse { line: 1, message: "empty fixture".into() })?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse { line: 1, message: format!("bad header: {e}") })?;
        let [m, n, k] = dims[..] else {
            return Err(Error::Parse { line: 1, message: "header must be \"M N K\"".into() });
        };
        if m == 0 {
            return Err(Error::Parse { line: 1, message: "M must be >= 1".into() });
        }
        let expected = m
            .checked_mul(n)
            .and_then(|gn| {
                k.checked_mul(n)
                    .and_then(|rn| k.checked_mul(m).map(|dn| (gn, rn, dn)))
            })
            .and_then(|(gn, rn, dn)| gn.checked_add(rn).and_then(|s| s.checked_add(dn)))
            .ok_or_else(|| Error::Parse { line: 1, message: "dimensions overflow".into() })?;
        if expected > 50_000_000 {
            return Err(Error::Parse { line: 1, message: "fixture dimensions too large".into() });
        }

        let mut entries = Vec::with_capacity(expected);
        for (idx, line) in lines {
            let line_no = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (Some(re), Some(im), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::Parse {
                    line: line_no,
                    message: "expected \"re im\"".into(),
                });
            };
            let re: f64 = re.parse().map_err(|e| Error::Parse {
                line: line_no,
                message: format!("bad real part: {e}"),
            })?;
            let im: f64 = im.parse().map_err(|e| Error::Parse {
                line: line_no,
                message: format!("bad imaginary part: {e}"),
            })?;
            if !re.is_finite() || !im.is_finite() {
                return Err(Error::Parse {
                    line: line_no,
                    message: "non-finite entry".into(),
                });
            }
            entries.push(C64::new(re, im));
            if entries.len() > expected {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("too many entries, expected {expected}"),
                });
            }
        }
        if entries.len() != expected {
            return Err(Error::Parse {
                line: text.lines().count(),
                message: format!("expected {expected} entries, found {}", entries.len()),
            });
        }

        let mut it = entries.into_iter();
        let mut g = DMatrix::from_element(m, n, C64::default());
        for r in 0..m {
            for c in 0..n {
                g[(r, c)] = it.next().unwrap();
            }
        }
        let h_r: Vec<DVector<C64>> = (0..k)
            .map(|_| DVector::from_iterator(n, it.by_ref().take(n)))
            .collect();
        let h_d: Vec<DVector<C64>> = (0..k)
            .map(|_| DVector::from_iterator(m, it.by_ref().take(m)))
            .collect();
        let set = ChannelSet { g, h_r, h_d, m_antennas: m, n_elements: n };
        set.validate()?;
        Ok(set)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aircomp::PhaseVector;
    use approx::assert_relative_eq;

    fn tiny_geometry(k: usize) -> Geometry {
        Geometry::default_deployment(k)
    }

    #[test]
    fn deterministic_given_seed() {
        let geo = tiny_geometry(3);
        let fad = FadingConfig::default();
        let a = sample_channels(&geo, &fad, 4, 6, 42).unwrap();
        let b = sample_channels(&geo, &fad, 4, 6, 42).unwrap();
        assert_eq!(a, b);
        let c = sample_channels(&geo, &fad, 4, 6, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn growing_k_preserves_existing_devices() {
        let fad = FadingConfig::default();
        let small = sample_channels(&tiny_geometry(2), &fad, 4, 6, 9).unwrap();
        let large = sample_channels(&tiny_geometry(5), &fad, 4, 6, 9).unwrap();
        for i in 0..2 {
            assert_eq!(small.h_d[i], large.h_d[i]);
            assert_eq!(small.h_r[i], large.h_r[i]);
        }
        assert_eq!(small.g, large.g);
    }

    #[test]
    fn pure_los_zero_exponent_has_magnitude_sqrt_c0() {
        // alpha = 0 for all links and an effectively infinite Rician factor:
        // every coefficient is sqrt(C0) exactly in magnitude.
        let geo = tiny_geometry(2);
        let fad = FadingConfig {
            alpha_bd: 0.0,
            alpha_bi: 0.0,
            alpha_id: 0.0,
            rician_bi_db: 300.0, // ~1e30 linear
            rician_id: 1e30,
            rician_bd: 1e30,
            ..FadingConfig::default()
        };
        let ch = sample_channels(&geo, &fad, 3, 4, 1).unwrap();
        let expect = 10f64.powf(fad.c0_db / 20.0);
        for z in ch.g.iter() {
            assert_relative_eq!(z.norm(), expect, max_relative = 1e-9);
        }
        for v in ch.h_d.iter().chain(ch.h_r.iter()) {
            for z in v.iter() {
                assert_relative_eq!(z.norm(), expect, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn rayleigh_second_moment_matches_path_loss() {
        // ς = 0 at a pinned device position: the per-entry second moment of
        // the direct link must equal L(d) (Monte-Carlo over 1e5 seeds).
        let mut geo = tiny_geometry(1);
        geo.device_region = ([3.0, 103.0, 0.0], [3.0, 103.0, 0.0]);
        let fad = FadingConfig::default();
        let d = distance(geo.bs_position, [3.0, 103.0, 0.0]);
        let expect = fad.path_loss(d, fad.alpha_bd);
        let draws = 100_000;
        let mut acc = 0.0;
        for s in 0..draws {
            let ch = sample_channels(&geo, &fad, 1, 0, s).unwrap();
            acc += ch.h_d[0][0].norm_sqr();
        }
        let mean = acc / draws as f64;
        assert!(
            (mean - expect).abs() / expect < 0.02,
            "second moment {mean:e} vs path loss {expect:e}"
        );
    }

    #[test]
    fn effective_channel_without_surface_is_direct() {
        let geo = tiny_geometry(2);
        let ch = sample_channels(&geo, &FadingConfig::default(), 4, 0, 3).unwrap();
        let h = effective_channel(&ch, &PhaseVector::empty()).unwrap();
        assert_eq!(h[0], ch.h_d[0]);
        assert_eq!(h[1], ch.h_d[1]);
    }

    #[test]
    fn effective_channel_single_path_cascade() {
        let ch = ChannelSet {
            g: DMatrix::from_element(1, 1, C64::new(1.0, 0.0)),
            h_r: vec![DVector::from_element(1, C64::new(1.0, 0.0))],
            h_d: vec![DVector::from_element(1, C64::new(0.0, 0.0))],
            m_antennas: 1,
            n_elements: 1,
        };
        let theta = 0.7f64;
        let v = PhaseVector::from_phases(&[theta]).unwrap();
        let h = effective_channel(&ch, &v).unwrap();
        assert_relative_eq!(h[0][0].re, theta.cos(), epsilon = 1e-15);
        assert_relative_eq!(h[0][0].im, theta.sin(), epsilon = 1e-15);
    }

    #[test]
    fn effective_channel_matches_scalar_loops() {
        let geo = tiny_geometry(3);
        let ch = sample_channels(&geo, &FadingConfig::default(), 4, 6, 11).unwrap();
        let mut rng = substream(5, &[99]);
        let phases: Vec<f64> =
            (0..6).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
        let v = PhaseVector::from_phases(&phases).unwrap();
        let fast = effective_channel(&ch, &v).unwrap();
        for i in 0..3 {
            for m in 0..4 {
                let mut acc = ch.h_d[i][m];
                for n in 0..6 {
                    acc += ch.g[(m, n)] * v.as_vector()[n] * ch.h_r[i][n];
                }
                assert_relative_eq!(acc.re, fast[i][m].re, epsilon = 1e-12);
                assert_relative_eq!(acc.im, fast[i][m].im, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn phase_length_mismatch_is_an_error() {
        let geo = tiny_geometry(1);
        let ch = sample_channels(&geo, &FadingConfig::default(), 2, 4, 0).unwrap();
        let v = PhaseVector::from_phases(&[0.0, 0.0]).unwrap();
        assert!(matches!(effective_channel(&ch, &v), Err(Error::Dimension(_))));
    }

    #[test]
    fn fixture_roundtrip() {
        let geo = tiny_geometry(2);
        let ch = sample_channels(&geo, &FadingConfig::default(), 3, 4, 17).unwrap();
        let text = ch.to_fixture();
        let back = ChannelSet::from_fixture(&text).unwrap();
        assert_eq!(ch, back);
    }

    #[test]
    fn fixture_rejects_malformed_input() {
        assert!(ChannelSet::from_fixture("").is_err());
        assert!(ChannelSet::from_fixture("2 2").is_err());
        assert!(ChannelSet::from_fixture("1 0 1\n1.0\n0.0\n").is_err());
        assert!(ChannelSet::from_fixture("1 0 1\nnan 0.0\n").is_err());
    }
}
