//! Range profiles, scatterer detection and RCS estimation.
//!
//! Two RCS models live side by side:
//!
//! - the printed narrowband model σ_NB = Σ σ_k·cos(2πR_k/λ) and the UWB model
//!   σ_UWB = Σ σ_k ([`rcs_nb`], [`rcs_uwb`]), evaluated on scene truth;
//! - the measured estimators ([`estimate_rcs`]) working on range profiles:
//!   NB sums the complex peak values coherently (so brilliant points inside
//!   one resolution cell interfere), UWB sums per-peak powers.
//!
//! Profiles carry raw correlator power. A [`CalibrationConstant`] obtained
//! from a reference sphere maps R⁴-compensated power to m².

use std::f64::consts::LN_2;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{BrilliantPoint, Polarization, Scene, TargetModel};
use crate::error::{ImagingError, Result};
use crate::receiver::CorrelationStream;
use crate::sensor::Sensor;
use crate::SPEED_OF_LIGHT;

/// Which value of the speed of light to use where the quoted figures were
/// computed with the rounded one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LightSpeed {
    /// 299 792 458 m/s.
    Exact,
    /// 3·10⁸ m/s.
    Rounded,
}

impl LightSpeed {
    pub fn value(self) -> f64 {
        match self {
            LightSpeed::Exact => SPEED_OF_LIGHT,
            LightSpeed::Rounded => 3e8,
        }
    }
}

/// Depth of the illuminated pulse volume, c·τ (one-way product, as quoted:
/// 1 µs → 300 m, 1 ns → 30 cm).
pub fn pulse_volume_depth(tau_s: f64, c: LightSpeed) -> f64 {
    c.value() * tau_s
}

/// Narrowband model Σ σ_k·cos(2π·R_k/λ). May be negative.
pub fn rcs_nb(target: &TargetModel, wavelength_m: f64) -> f64 {
    rcs_nb_points(target.points(), wavelength_m)
}

pub fn rcs_nb_points(points: &[BrilliantPoint], wavelength_m: f64) -> f64 {
    points
        .iter()
        .map(|p| p.sigma_m2 * (2.0 * std::f64::consts::PI * p.range_m / wavelength_m).cos())
        .sum()
}

/// UWB model Σ σ_k.
pub fn rcs_uwb(target: &TargetModel) -> f64 {
    rcs_uwb_points(target.points())
}

pub fn rcs_uwb_points(points: &[BrilliantPoint]) -> f64 {
    points.iter().map(|p| p.sigma_m2).sum()
}

pub fn dbsm(sigma_m2: f64) -> f64 {
    10.0 * sigma_m2.log10()
}

/// dBsm of |σ| plus a flag set when σ is negative.
pub fn signed_dbsm(sigma_m2: f64) -> (f64, bool) {
    (dbsm(sigma_m2.abs()), sigma_m2 < 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeBin {
    pub range_m: f64,
    /// Complex correlator output; the NB estimator needs its phase.
    pub value: Complex64,
    /// |value|².
    pub power: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RangeProfile {
    pub bins: Vec<RangeBin>,
    pub bin_width_m: f64,
    pub pol: Polarization,
    pub sweep_index: u64,
}

impl RangeProfile {
    pub fn peak(&self) -> Option<&RangeBin> {
        self.bins.iter().max_by(|a, b| a.power.total_cmp(&b.power))
    }

    pub fn median_power(&self) -> f64 {
        let mut p: Vec<f64> = self.bins.iter().map(|b| b.power).collect();
        if p.is_empty() {
            return 0.0;
        }
        p.sort_by(f64::total_cmp);
        let n = p.len();
        if n % 2 == 1 {
            p[n / 2]
        } else {
            0.5 * (p[n / 2 - 1] + p[n / 2])
        }
    }

    pub fn total_power(&self) -> f64 {
        self.bins.iter().map(|b| b.power).sum()
    }

    /// Bin nearest to `range_m`.
    pub fn bin_at(&self, range_m: f64) -> Option<&RangeBin> {
        self.bins.iter().min_by(|a, b| {
            (a.range_m - range_m)
                .abs()
                .total_cmp(&(b.range_m - range_m).abs())
        })
    }
}

/// Convert correlator lags into a range profile: range = c·lag/2,
/// power = |value|². Bins closer than `min_range_m` (the receiver blank) are
/// dropped.
pub fn range_profile(
    c: &CorrelationStream,
    min_range_m: f64,
    pol: Polarization,
    sweep_index: u64,
) -> Result<RangeProfile, ImagingError> {
    if c.is_empty() {
        return Err(ImagingError::EmptyStream);
    }
    let bins = c
        .values
        .iter()
        .enumerate()
        .map(|(n, &value)| RangeBin {
            range_m: SPEED_OF_LIGHT * c.lag_s(n) / 2.0,
            value,
            power: value.norm_sqr(),
        })
        .filter(|b| b.range_m >= min_range_m)
        .collect();
    Ok(RangeProfile {
        bins,
        bin_width_m: SPEED_OF_LIGHT * c.lag_resolution_s / 2.0,
        pol,
        sweep_index,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionSettings {
    /// Detections must exceed the median bin power by this much.
    pub threshold_db: f64,
    /// ... and lie within this many dB of the strongest bin.
    pub dynamic_range_db: f64,
    /// The estimation window extends this many bins past the outermost
    /// target detections.
    pub window_margin_bins: usize,
    /// Range extent of compression sidelobes around a peak; `None` or 0
    /// disables sidelobe rejection.
    pub sidelobe_guard_m: Option<f64>,
    /// Inside the guard, a maximum this far below a stronger accepted one is
    /// treated as its sidelobe.
    pub sidelobe_level_db: f64,
    /// Maxima closer than this to a stronger accepted one are ripple on the
    /// same unresolved response and are dropped whatever their level;
    /// `None` or 0 disables the check.
    pub min_separation_m: Option<f64>,
}

impl Default for DetectionSettings {
    fn default() -> Self {
        Self {
            threshold_db: 13.0,
            dynamic_range_db: 60.0,
            window_margin_bins: 2,
            sidelobe_guard_m: None,
            sidelobe_level_db: 10.0,
            min_separation_m: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub range_m: f64,
    pub power: f64,
    pub value: Complex64,
}

/// Local maxima above max(median·10^(threshold/10), peak·10^(−dynamic_range/10)),
/// sorted by range. A run of equal-power bins counts as one maximum placed at
/// its power-weighted centroid and valued at its smallest-range bin. With a
/// sidelobe guard, maxima are visited strongest first and one lying within
/// the guard of an accepted maximum and more than `sidelobe_level_db` below
/// it is dropped, as is any maximum within `min_separation_m` of one.
pub fn detect_scatterers(p: &RangeProfile, settings: &DetectionSettings) -> Vec<Detection> {
    let bins = &p.bins;
    let peak = p.peak().map_or(0.0, |b| b.power);
    if peak.is_nan() || peak <= 0.0 {
        return Vec::new();
    }
    let threshold = (p.median_power() * 10f64.powf(settings.threshold_db / 10.0))
        .max(peak * 10f64.powf(-settings.dynamic_range_db / 10.0));
    let mut out = Vec::new();
    let mut i = 0;
    while i < bins.len() {
        let level = bins[i].power;
        let mut j = i;
        while j + 1 < bins.len() && bins[j + 1].power == level {
            j += 1;
        }
        let left = if i == 0 {
            f64::NEG_INFINITY
        } else {
            bins[i - 1].power
        };
        let right = if j + 1 == bins.len() {
            f64::NEG_INFINITY
        } else {
            bins[j + 1].power
        };
        if level > threshold && level > left && level > right {
            let run = &bins[i..=j];
            let weight: f64 = run.iter().map(|b| b.power).sum();
            let range_m = run.iter().map(|b| b.range_m * b.power).sum::<f64>() / weight;
            out.push(Detection {
                range_m,
                power: level,
                value: bins[i].value,
            });
        }
        i = j + 1;
    }
    let guard_m = settings.sidelobe_guard_m.unwrap_or(0.0);
    let min_sep_m = settings.min_separation_m.unwrap_or(0.0);
    if guard_m > 0.0 || min_sep_m > 0.0 {
        prune_maxima(out, guard_m, settings.sidelobe_level_db, min_sep_m)
    } else {
        out
    }
}

fn prune_maxima(
    candidates: Vec<Detection>,
    guard_m: f64,
    level_db: f64,
    min_sep_m: f64,
) -> Vec<Detection> {
    let ratio = 10f64.powf(-level_db / 10.0);
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    // strongest first; equal powers keep range order
    order.sort_by(|&a, &b| {
        candidates[b]
            .power
            .total_cmp(&candidates[a].power)
            .then(a.cmp(&b))
    });
    let mut keep = vec![false; candidates.len()];
    let mut accepted: Vec<usize> = Vec::new();
    for &k in &order {
        let c = &candidates[k];
        let masked = accepted.iter().any(|&a| {
            let s = &candidates[a];
            let d = (s.range_m - c.range_m).abs();
            d < min_sep_m || (d <= guard_m && c.power < s.power * ratio)
        });
        if !masked {
            keep[k] = true;
            accepted.push(k);
        }
    }
    candidates
        .into_iter()
        .zip(keep)
        .filter_map(|(d, k)| k.then_some(d))
        .collect()
}

/// Closed range interval used to attribute detections to the target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RangeGate {
    pub lo_m: f64,
    pub hi_m: f64,
}

impl RangeGate {
    pub fn contains(&self, range_m: f64) -> bool {
        (self.lo_m..=self.hi_m).contains(&range_m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RcsMode {
    Nb,
    Uwb,
}

impl RcsMode {
    pub fn label(self) -> &'static str {
        match self {
            RcsMode::Nb => "nb",
            RcsMode::Uwb => "uwb",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RcsEstimate {
    pub sigma_m2: f64,
    pub dbsm: f64,
    pub mode: RcsMode,
    pub sweep_index: u64,
}

impl RcsEstimate {
    pub fn new(sigma_m2: f64, mode: RcsMode, sweep_index: u64) -> Self {
        Self {
            sigma_m2,
            dbsm: dbsm(sigma_m2),
            mode,
            sweep_index,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConstant {
    /// m² per unit of R⁴-compensated correlator power.
    pub gain: f64,
    pub reference_sigma_m2: f64,
    pub reference_range_m: f64,
    pub mode: RcsMode,
}

/// Detections attributed to the target: everything inside the gate, widened
/// to the estimation window [first − margin bins, last + margin bins].
pub fn target_detections(
    p: &RangeProfile,
    gate: RangeGate,
    settings: &DetectionSettings,
) -> Vec<Detection> {
    let all = detect_scatterers(p, settings);
    let inside: Vec<&Detection> = all.iter().filter(|d| gate.contains(d.range_m)).collect();
    let (Some(first), Some(last)) = (inside.first(), inside.last()) else {
        return Vec::new();
    };
    let margin = settings.window_margin_bins as f64 * p.bin_width_m;
    let window = RangeGate {
        lo_m: first.range_m - margin,
        hi_m: last.range_m + margin,
    };
    all.into_iter()
        .filter(|d| window.contains(d.range_m))
        .collect()
}

/// Uncalibrated RCS statistic of the target detections:
/// NB |Σ v_i·R_i²|², UWB Σ |v_i|²·R_i⁴.
fn raw_statistic(dets: &[Detection], mode: RcsMode) -> f64 {
    match mode {
        RcsMode::Nb => dets
            .iter()
            .map(|d| d.value * (d.range_m * d.range_m))
            .sum::<Complex64>()
            .norm_sqr(),
        RcsMode::Uwb => dets.iter().map(|d| d.power * d.range_m.powi(4)).sum(),
    }
}

/// Derive the calibration constant from a reference sphere's profile so that
/// [`estimate_rcs`] on the same profile returns `sigma_ref_m2`.
pub fn calibrate(
    reference: &RangeProfile,
    sigma_ref_m2: f64,
    range_ref_m: f64,
    mode: RcsMode,
    gate: RangeGate,
    settings: &DetectionSettings,
) -> Result<CalibrationConstant, ImagingError> {
    if !(sigma_ref_m2.is_finite() && sigma_ref_m2 > 0.0) {
        return Err(ImagingError::BadReference(sigma_ref_m2));
    }
    let dets = target_detections(reference, gate, settings);
    let strongest = dets.iter().map(|d| d.power).fold(0.0, f64::max);
    if dets.is_empty() || strongest < 10.0 * reference.median_power() {
        return Err(ImagingError::ReferenceUndetectable {
            range_m: range_ref_m,
        });
    }
    let raw = raw_statistic(&dets, mode);
    if raw.is_nan() || raw <= 0.0 {
        return Err(ImagingError::ReferenceUndetectable {
            range_m: range_ref_m,
        });
    }
    Ok(CalibrationConstant {
        gain: sigma_ref_m2 / raw,
        reference_sigma_m2: sigma_ref_m2,
        reference_range_m: range_ref_m,
        mode,
    })
}

/// Calibrated RCS of the target inside `gate`.
pub fn estimate_rcs(
    p: &RangeProfile,
    cal: &CalibrationConstant,
    gate: RangeGate,
    settings: &DetectionSettings,
) -> Result<RcsEstimate, ImagingError> {
    let dets = target_detections(p, gate, settings);
    if dets.is_empty() {
        return Err(ImagingError::NoDetection(gate.lo_m, gate.hi_m));
    }
    Ok(RcsEstimate::new(
        cal.gain * raw_statistic(&dets, cal.mode),
        cal.mode,
        p.sweep_index,
    ))
}

fn check_mode(sensor: &Sensor, cal: &CalibrationConstant) -> Result<()> {
    if sensor.rcs_mode() != cal.mode {
        return Err(ImagingError::ModeMismatch {
            calibrated: cal.mode.label(),
            sensor: sensor.rcs_mode().label(),
        }
        .into());
    }
    Ok(())
}

/// Run a reference sphere through the sensor and calibrate on it.
pub fn calibrate_sensor(
    sensor: &Sensor,
    sigma_ref_m2: f64,
    range_ref_m: f64,
    seed: u64,
) -> Result<CalibrationConstant> {
    let target = TargetModel::new(vec![BrilliantPoint::sphere(sigma_ref_m2, range_ref_m)])?;
    let scene = Scene::clean(target, seed);
    let profile = sensor.profile(&scene, Polarization::VV, 0)?;
    Ok(calibrate(
        &profile,
        sigma_ref_m2,
        range_ref_m,
        sensor.rcs_mode(),
        sensor.gate_at(range_ref_m),
        &sensor.settings().detection,
    )?)
}

/// `sweeps` independent sweeps (fresh jitter and noise per sweep index),
/// one estimate each, in sweep order. Sweeps run in parallel.
pub fn sweep_series(
    scene: &Scene,
    sensor: &Sensor,
    cal: &CalibrationConstant,
    sweeps: usize,
) -> Result<Vec<RcsEstimate>> {
    if sweeps == 0 {
        return Err(ImagingError::TooFewSweeps(0).into());
    }
    check_mode(sensor, cal)?;
    scene.validate()?;
    let gate = sensor.target_gate(scene);
    (0..sweeps as u64)
        .into_par_iter()
        .map(|k| {
            let p = sensor.profile(scene, Polarization::VV, k)?;
            Ok(estimate_rcs(&p, cal, gate, &sensor.settings().detection)?)
        })
        .collect()
}

/// Mean of the dBsm series and, for two or more entries, its sample
/// standard deviation.
pub fn series_stats(series: &[RcsEstimate]) -> (f64, Option<f64>) {
    let n = series.len() as f64;
    let mean = series.iter().map(|e| e.dbsm).sum::<f64>() / n;
    let std = (series.len() >= 2)
        .then(|| (series.iter().map(|e| (e.dbsm - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt());
    (mean, std)
}

/// Profiles for VV, HH, VH and HV, in that order, all from sweep 0 with the
/// same seeds; only the scattering-matrix entry differs between them.
pub fn polarimetric_scan(scene: &Scene, sensor: &Sensor) -> Result<Vec<RangeProfile>> {
    Polarization::ALL
        .par_iter()
        .map(|&pol| sensor.profile(scene, pol, 0))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanSettings {
    pub az_min_deg: f64,
    pub az_max_deg: f64,
    pub step_deg: f64,
    /// −3 dB (one-way) beamwidth of the Gaussian beam.
    pub beamwidth_deg: f64,
}

/// One-way Gaussian power pattern exp(−4 ln2·(θ/bw)²); −3 dB at θ = bw/2.
/// It is also the two-way amplitude weight of an echo.
pub fn beam_weight(offset_deg: f64, beamwidth_deg: f64) -> f64 {
    (-4.0 * LN_2 * (offset_deg / beamwidth_deg).powi(2)).exp()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageRow {
    pub az_deg: f64,
    /// Calibrated power per bin, gain·|v|²·R⁴ (m²).
    pub profile: RangeProfile,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanImage {
    pub rows: Vec<ImageRow>,
}

impl ScanImage {
    /// Cell of maximum calibrated power, as (azimuth, range, power).
    pub fn max_cell(&self) -> Option<(f64, f64, f64)> {
        self.rows
            .iter()
            .flat_map(|r| {
                r.profile
                    .bins
                    .iter()
                    .map(move |b| (r.az_deg, b.range_m, b.power))
            })
            .max_by(|a, b| a.2.total_cmp(&b.2))
    }

    /// Strongest calibrated power along one pointing.
    pub fn row_peak(&self, az_deg: f64) -> Option<f64> {
        self.rows
            .iter()
            .min_by(|a, b| {
                (a.az_deg - az_deg)
                    .abs()
                    .total_cmp(&(b.az_deg - az_deg).abs())
            })
            .and_then(|r| r.profile.peak().map(|b| b.power))
    }
}

fn weighted(
    points: &[BrilliantPoint],
    pointing_deg: f64,
    beamwidth_deg: f64,
) -> Vec<BrilliantPoint> {
    points
        .iter()
        .map(|p| {
            let g = beam_weight(p.azimuth_deg() - pointing_deg, beamwidth_deg);
            BrilliantPoint {
                sigma_m2: p.sigma_m2 * g * g,
                ..p.clone()
            }
        })
        .collect()
}

/// Mechanical raster: for each pointing, weight every scene point by the
/// beam pattern at its azimuth offset, take one VV range profile, and scale
/// it to calibrated power. Rows are in increasing azimuth.
pub fn scan_image(
    scene: &Scene,
    sensor: &Sensor,
    cal: &CalibrationConstant,
    scan: &ScanSettings,
) -> Result<ScanImage> {
    check_mode(sensor, cal)?;
    if !(scan.step_deg > 0.0 && scan.beamwidth_deg > 0.0 && scan.step_deg <= scan.beamwidth_deg) {
        return Err(ImagingError::BadAzimuthStep {
            step_deg: scan.step_deg,
            beamwidth_deg: scan.beamwidth_deg,
        }
        .into());
    }
    if !(scan.az_min_deg.is_finite()
        && scan.az_max_deg.is_finite()
        && scan.az_max_deg >= scan.az_min_deg)
    {
        return Err(ImagingError::BadAzimuthSpan(scan.az_min_deg, scan.az_max_deg).into());
    }
    let count = ((scan.az_max_deg - scan.az_min_deg) / scan.step_deg + 1e-9).floor() as usize + 1;
    let rows = (0..count)
        .into_par_iter()
        .map(|i| {
            let az_deg = scan.az_min_deg + i as f64 * scan.step_deg;
            let pointed = Scene {
                target: TargetModel::new(weighted(
                    scene.target.points(),
                    az_deg,
                    scan.beamwidth_deg,
                ))?,
                clutter: weighted(&scene.clutter, az_deg, scan.beamwidth_deg),
                ..scene.clone()
            };
            let mut profile = sensor.profile(&pointed, Polarization::VV, 0)?;
            for b in &mut profile.bins {
                b.power *= cal.gain * b.range_m.powi(4);
            }
            Ok(ImageRow { az_deg, profile })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScanImage { rows })
}
