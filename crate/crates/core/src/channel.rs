//! Propagation through an open-field scene.
//!
//! A target is a set of brilliant points. Each point returns a delayed,
//! scaled, phase-rotated copy of the transmitted stream. The scene adds point
//! clutter, narrowband interferers, direct-path leakage, per-sweep phase
//! jitter and thermal noise on top.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use crate::error::ChannelError;
use crate::rng::{self, Purpose};
use crate::waveform::{RadarParams, SampleStream};
use crate::SPEED_OF_LIGHT;

/// Transmit/receive polarization pair, transmit first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarization {
    VV,
    HH,
    VH,
    HV,
}

impl Polarization {
    pub const ALL: [Polarization; 4] = [
        Polarization::VV,
        Polarization::HH,
        Polarization::VH,
        Polarization::HV,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Polarization::VV => "vv",
            Polarization::HH => "hh",
            Polarization::VH => "vh",
            Polarization::HV => "hv",
        }
    }
}

/// 2×2 scattering matrix [[S_VV, S_VH], [S_HV, S_HH]].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteringMatrix {
    pub vv: Complex64,
    pub vh: Complex64,
    pub hv: Complex64,
    pub hh: Complex64,
}

impl ScatteringMatrix {
    /// Co-polarized, non-depolarizing scatterer (a sphere).
    pub fn identity() -> Self {
        Self::co_pol(Complex64::new(1.0, 0.0))
    }

    pub fn co_pol(s: Complex64) -> Self {
        let zero = Complex64::new(0.0, 0.0);
        Self {
            vv: s,
            vh: zero,
            hv: zero,
            hh: s,
        }
    }

    pub fn get(&self, pol: Polarization) -> Complex64 {
        match pol {
            Polarization::VV => self.vv,
            Polarization::HH => self.hh,
            Polarization::VH => self.vh,
            Polarization::HV => self.hv,
        }
    }

    fn max_norm(&self) -> f64 {
        [self.vv, self.vh, self.hv, self.hh]
            .iter()
            .fold(0.0, |m, s| m.max(s.norm()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BrilliantPoint {
    pub sigma_m2: f64,
    pub range_m: f64,
    pub cross_range_m: f64,
    pub pol: ScatteringMatrix,
}

impl BrilliantPoint {
    /// On-axis sphere-like point.
    pub fn sphere(sigma_m2: f64, range_m: f64) -> Self {
        Self {
            sigma_m2,
            range_m,
            cross_range_m: 0.0,
            pol: ScatteringMatrix::identity(),
        }
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        if !(self.sigma_m2.is_finite() && self.sigma_m2 >= 0.0) {
            return Err(ChannelError::InvalidPoint(format!(
                "sigma_m2 {} must be >= 0",
                self.sigma_m2
            )));
        }
        if !(self.range_m.is_finite() && self.range_m > 0.0) {
            return Err(ChannelError::InvalidPoint(format!(
                "range_m {} must be > 0",
                self.range_m
            )));
        }
        if !self.cross_range_m.is_finite() {
            return Err(ChannelError::InvalidPoint(
                "cross_range_m must be finite".into(),
            ));
        }
        let max = self.pol.max_norm();
        if (max - 1.0).abs() > 1e-9 {
            return Err(ChannelError::InvalidPoint(format!(
                "scattering matrix must be normalized so its largest entry has magnitude 1 (got {max})"
            )));
        }
        Ok(())
    }

    /// Azimuth of the point seen from the radar, degrees.
    pub fn azimuth_deg(&self) -> f64 {
        self.cross_range_m.atan2(self.range_m).to_degrees()
    }
}

/// √σ · S_pq for the selected polarization pair.
pub fn scattering_amplitude(p: &BrilliantPoint, pol: Polarization) -> Complex64 {
    p.pol.get(pol) * p.sigma_m2.sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetModel {
    points: Vec<BrilliantPoint>,
    extent_m: f64,
}

impl TargetModel {
    pub fn new(points: Vec<BrilliantPoint>) -> Result<Self, ChannelError> {
        if points.is_empty() {
            return Err(ChannelError::EmptyTarget);
        }
        for p in &points {
            p.validate()?;
        }
        let extent_m = extent(&points);
        Ok(Self { points, extent_m })
    }

    pub fn points(&self) -> &[BrilliantPoint] {
        &self.points
    }

    /// L = max R − min R.
    pub fn extent_m(&self) -> f64 {
        self.extent_m
    }

    pub fn min_range_m(&self) -> f64 {
        self.points
            .iter()
            .map(|p| p.range_m)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_range_m(&self) -> f64 {
        self.points
            .iter()
            .map(|p| p.range_m)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

fn extent(points: &[BrilliantPoint]) -> f64 {
    let (lo, hi) = points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.range_m), hi.max(p.range_m))
        });
    hi - lo
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InterfererKind {
    Cw,
    QpskModulated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Interferer {
    pub freq_hz: f64,
    pub power_w: f64,
    pub kind: InterfererKind,
    /// Symbol rate of a QPSK-modulated interferer.
    pub symbol_rate_hz: f64,
}

impl Interferer {
    pub const DEFAULT_SYMBOL_RATE_HZ: f64 = 1e6;

    pub fn cw(freq_hz: f64, power_w: f64) -> Self {
        Self {
            freq_hz,
            power_w,
            kind: InterfererKind::Cw,
            symbol_rate_hz: Self::DEFAULT_SYMBOL_RATE_HZ,
        }
    }

    pub fn qpsk(freq_hz: f64, power_w: f64) -> Self {
        Self {
            kind: InterfererKind::QpskModulated,
            ..Self::cw(freq_hz, power_w)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub target: TargetModel,
    pub clutter: Vec<BrilliantPoint>,
    pub interferers: Vec<Interferer>,
    /// One-sided noise PSD, W/Hz. Complex noise variance is psd·fs.
    pub noise_psd: f64,
    /// Linear amplitude of the zero-range transmitter leakage.
    pub direct_path_gain: f64,
    /// Standard deviation of the per-sweep, per-point phase jitter.
    pub sweep_phase_jitter_rad: f64,
    pub rng_seed: u64,
}

impl Scene {
    /// Target alone: no clutter, interference, leakage, jitter or noise.
    pub fn clean(target: TargetModel, rng_seed: u64) -> Self {
        Self {
            target,
            clutter: Vec::new(),
            interferers: Vec::new(),
            noise_psd: 0.0,
            direct_path_gain: 0.0,
            sweep_phase_jitter_rad: 0.0,
            rng_seed,
        }
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        for p in &self.clutter {
            p.validate()?;
        }
        let nonneg = |field, value: f64| {
            if value.is_finite() && value >= 0.0 {
                Ok(())
            } else {
                Err(ChannelError::NegativePower { field, value })
            }
        };
        nonneg("noise_psd", self.noise_psd)?;
        nonneg("direct_path_gain", self.direct_path_gain)?;
        nonneg("sweep_phase_jitter_rad", self.sweep_phase_jitter_rad)?;
        for i in &self.interferers {
            nonneg("interferer power_w", i.power_w)?;
        }
        Ok(())
    }

    /// Target points followed by clutter points.
    pub fn all_points(&self) -> impl Iterator<Item = &BrilliantPoint> {
        self.target.points().iter().chain(&self.clutter)
    }
}

/// `count` clutter points with ranges uniform over [range_min, range_max),
/// exponentially distributed σ, and a uniform random phase on the co-pol
/// channels.
pub fn gen_clutter(
    range_min_m: f64,
    range_max_m: f64,
    count: usize,
    mean_sigma_m2: f64,
    seed: u64,
) -> Result<Vec<BrilliantPoint>, ChannelError> {
    if !(mean_sigma_m2.is_finite() && mean_sigma_m2 >= 0.0) {
        return Err(ChannelError::NegativeMeanSigma(mean_sigma_m2));
    }
    if count == 0 {
        return Ok(Vec::new());
    }
    if !(range_min_m > 0.0 && range_max_m > range_min_m && range_max_m.is_finite()) {
        return Err(ChannelError::BadClutterWindow(range_min_m, range_max_m));
    }
    let mut rng = rng::stream(seed, 0, Purpose::Clutter);
    let exp = (mean_sigma_m2 > 0.0).then(|| Exp::new(1.0 / mean_sigma_m2).expect("positive rate"));
    Ok((0..count)
        .map(|_| {
            let range_m = rng.random_range(range_min_m..range_max_m);
            let sigma_m2 = exp.map_or(0.0, |e| e.sample(&mut rng));
            let phase = rng.random_range(0.0..2.0 * PI);
            BrilliantPoint {
                sigma_m2,
                range_m,
                cross_range_m: 0.0,
                pol: ScatteringMatrix::co_pol(Complex64::from_polar(1.0, phase)),
            }
        })
        .collect())
}

/// Round-trip delay of a point at `range_m`, in whole samples.
pub fn delay_samples(range_m: f64, sample_rate: f64) -> usize {
    (2.0 * range_m / SPEED_OF_LIGHT * sample_rate).round() as usize
}

/// Received stream for one sweep:
///
/// y[n] = g·tx[n] + Σ a_k·tx[n − d_k]·exp(−j2π·f_c·2R_k/c + jφ_k) + interference + noise
///
/// with a_k = √σ_k·S_pq / R_k² (the radar-equation constant is left to the
/// calibration) and d_k the round-trip delay rounded to the nearest sample.
/// φ_k is drawn independently per point and per sweep from N(0, jitter²).
pub fn propagate(
    tx: &SampleStream,
    scene: &Scene,
    params: &RadarParams,
    pol: Polarization,
    sweep_index: u64,
) -> Result<SampleStream, ChannelError> {
    if tx.len() < (params.pri_s * tx.sample_rate()).round() as usize {
        return Err(ChannelError::StreamShorterThanPri {
            duration_s: tx.duration(),
            pri_s: params.pri_s,
        });
    }
    let max_range = params.unambiguous_range_m();
    for (i, p) in scene.target.points().iter().enumerate() {
        if p.range_m >= max_range {
            return Err(ChannelError::BeyondUnambiguousRange {
                what: "target point",
                index: i,
                range_m: p.range_m,
                max_m: max_range,
            });
        }
    }
    for (i, p) in scene.clutter.iter().enumerate() {
        if p.range_m >= max_range {
            return Err(ChannelError::BeyondUnambiguousRange {
                what: "clutter point",
                index: i,
                range_m: p.range_m,
                max_m: max_range,
            });
        }
    }

    let fs = tx.sample_rate();
    let fc = tx.carrier_hz();
    let x = tx.samples();
    let mut y: Vec<Complex64> = x.iter().map(|s| s * scene.direct_path_gain).collect();

    let mut jitter_rng = rng::stream(scene.rng_seed, sweep_index, Purpose::Jitter);
    let jitter = (scene.sweep_phase_jitter_rad > 0.0)
        .then(|| Normal::new(0.0, scene.sweep_phase_jitter_rad).expect("finite jitter"));

    for p in scene.all_points() {
        let phi = jitter.map_or(0.0, |j| j.sample(&mut jitter_rng));
        let amp = scattering_amplitude(p, pol) / (p.range_m * p.range_m);
        if amp == Complex64::new(0.0, 0.0) {
            continue;
        }
        let carrier_phase = -2.0 * PI * fc * 2.0 * p.range_m / SPEED_OF_LIGHT;
        let a = amp * Complex64::from_polar(1.0, carrier_phase + phi);
        let d = delay_samples(p.range_m, fs);
        if d >= x.len() {
            continue;
        }
        for (out, s) in y[d..].iter_mut().zip(x) {
            *out += a * s;
        }
    }

    let mut rx = tx.with_samples(y)?;
    for (i, intf) in scene.interferers.iter().enumerate() {
        let seed = rng::derive_seed(scene.rng_seed, sweep_index, Purpose::Interferer(i as u32));
        rx = add_interferer(&rx, intf, seed)?;
    }
    if scene.noise_psd > 0.0 {
        rx = add_noise(&rx, scene.noise_psd, scene.rng_seed, sweep_index)?;
    }
    Ok(rx)
}

/// Complex white Gaussian noise of variance psd·fs.
pub fn add_noise(
    s: &SampleStream,
    noise_psd: f64,
    seed: u64,
    sweep_index: u64,
) -> Result<SampleStream, ChannelError> {
    let std = (noise_psd * s.sample_rate() / 2.0).sqrt();
    let normal = Normal::new(0.0, std).map_err(|_| ChannelError::NegativePower {
        field: "noise_psd",
        value: noise_psd,
    })?;
    let mut rng = rng::stream(seed, sweep_index, Purpose::Noise);
    let out = s
        .samples()
        .iter()
        .map(|x| x + Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng)))
        .collect();
    Ok(s.with_samples(out)?)
}

/// Add a narrowband interferer at `freq_hz` (absolute); the offset from the
/// stream's carrier tag must stay below Nyquist. CW tones start at phase 0;
/// QPSK interferers carry random unit-power symbols drawn from `seed`.
pub fn add_interferer(
    s: &SampleStream,
    interferer: &Interferer,
    seed: u64,
) -> Result<SampleStream, ChannelError> {
    let offset = interferer.freq_hz - s.carrier_hz();
    let nyquist = s.sample_rate() / 2.0;
    if offset.abs() >= nyquist {
        return Err(ChannelError::InterfererAboveNyquist {
            offset_hz: offset,
            nyquist_hz: nyquist,
        });
    }
    if !(interferer.power_w.is_finite() && interferer.power_w >= 0.0) {
        return Err(ChannelError::NegativePower {
            field: "interferer power_w",
            value: interferer.power_w,
        });
    }
    if interferer.power_w == 0.0 {
        return Ok(s.clone());
    }
    let amp = interferer.power_w.sqrt();
    let tone = |n: usize| Complex64::from_polar(amp, 2.0 * PI * offset * s.time(n));
    let out = match interferer.kind {
        InterfererKind::Cw => s
            .samples()
            .iter()
            .enumerate()
            .map(|(n, x)| x + tone(n))
            .collect(),
        InterfererKind::QpskModulated => {
            let sps = ((s.sample_rate() / interferer.symbol_rate_hz).round() as usize).max(1);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut symbol = Complex64::new(0.0, 0.0);
            let h = std::f64::consts::FRAC_1_SQRT_2;
            s.samples()
                .iter()
                .enumerate()
                .map(|(n, x)| {
                    if n % sps == 0 {
                        let (i, q): (bool, bool) = (rng.random(), rng.random());
                        symbol = Complex64::new(if i { h } else { -h }, if q { h } else { -h });
                    }
                    x + symbol * tone(n)
                })
                .collect()
        }
    };
    Ok(s.with_samples(out)?)
}
