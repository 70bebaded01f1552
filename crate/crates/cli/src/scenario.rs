//! Scenario files: one TOML document whose sections mirror the simulator's
//! modules. Loading rejects unknown keys, fills in every default, and checks
//! every constraint before any signal is synthesised, so a loaded
//! `Scenario` can be echoed verbatim as the run manifest.

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use radsim_core::channel::{
    gen_clutter, BrilliantPoint, Interferer, InterfererKind, Polarization, ScatteringMatrix, Scene,
    TargetModel,
};
use radsim_core::codes::{gen_gold, gen_mseq, preferred_pair, PnSequence, Taps};
use radsim_core::error::WaveformError;
use radsim_core::imaging::{CalibrationConstant, DetectionSettings, RcsMode, ScanSettings};
use radsim_core::sensor::{ReceiverSettings, Sensor};
use radsim_core::waveform::{RadarParams, UwbCoding};
use radsim_core::SPEED_OF_LIGHT;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub experiment: ExperimentConfig,
    #[serde(default)]
    pub radar: RadarConfig,
    #[serde(default)]
    pub code: CodeConfig,
    #[serde(default)]
    pub receiver: ReceiverConfig,
    pub scene: SceneConfig,
    #[serde(default)]
    pub calibration: CalibrationConfig,
    #[serde(default)]
    pub scan: ScanConfig,
    /// Provenance written into run manifests; ignored when a manifest is
    /// loaded back as a scenario.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<ManifestInfo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestInfo {
    pub tool_version: String,
    pub seed: u64,
    pub timestamp: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Profile,
    RcsSweepSeries,
    Polarimetric,
    ScanImage,
    Calibrate,
    CompareModes,
}

impl ExperimentKind {
    pub const NAMES: [&'static str; 6] = [
        "profile",
        "rcs_sweep_series",
        "polarimetric",
        "scan_image",
        "calibrate",
        "compare_modes",
    ];

    pub fn parse(name: &str) -> Option<Self> {
        use ExperimentKind::*;
        let all = [
            Profile,
            RcsSweepSeries,
            Polarimetric,
            ScanImage,
            Calibrate,
            CompareModes,
        ];
        Self::NAMES.iter().position(|n| *n == name).map(|i| all[i])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeName {
    Nb,
    Uwb,
}

impl ModeName {
    pub fn label(self) -> &'static str {
        match self {
            ModeName::Nb => "nb",
            ModeName::Uwb => "uwb",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "nb" => Some(ModeName::Nb),
            "uwb" => Some(ModeName::Uwb),
            _ => None,
        }
    }

    pub fn rcs_mode(self) -> RcsMode {
        match self {
            ModeName::Nb => RcsMode::Nb,
            ModeName::Uwb => RcsMode::Uwb,
        }
    }
}

impl fmt::Display for ModeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolName {
    Vv,
    Hh,
    Vh,
    Hv,
}

impl From<PolName> for Polarization {
    fn from(p: PolName) -> Self {
        match p {
            PolName::Vv => Polarization::VV,
            PolName::Hh => Polarization::HH,
            PolName::Vh => Polarization::VH,
            PolName::Hv => Polarization::HV,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub modes: Vec<ModeName>,
    pub sweeps: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Polarization channel used by the profile experiment.
    pub polarization: PolName,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            kind: ExperimentKind::Profile,
            modes: vec![ModeName::Nb, ModeName::Uwb],
            sweeps: 100,
            seed: 1,
            output_dir: PathBuf::from("out"),
            polarization: PolName::Vv,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadarConfig {
    pub nb: NbConfig,
    pub uwb: UwbConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NbConfig {
    pub carrier_hz: f64,
    pub chip_rate_hz: f64,
    pub samples_per_chip: usize,
    pub pulse_width_s: f64,
    pub pri_s: f64,
    /// Pulses integrated per sweep.
    pub pulses: usize,
    /// Receiver blank at the start of each PRI; 0 leaves the receiver open.
    pub blank_width_s: f64,
    /// Defaults to half the range resolution.
    pub gate_margin_m: Option<f64>,
    /// Defaults to the compressed-pulse extent c·τ/2.
    pub sidelobe_guard_m: Option<f64>,
    /// Defaults to half the range resolution.
    pub min_separation_m: Option<f64>,
}

impl Default for NbConfig {
    fn default() -> Self {
        let p = RadarParams::nb_default();
        Self {
            carrier_hz: p.carrier_hz,
            chip_rate_hz: p.chip_rate_hz,
            samples_per_chip: p.samples_per_chip,
            pulse_width_s: p.pulse_width_s,
            pri_s: p.pri_s,
            pulses: 1,
            blank_width_s: 0.0,
            gate_margin_m: None,
            sidelobe_guard_m: None,
            min_separation_m: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CodingName {
    Polarity,
    Position,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UwbConfig {
    pub monocycle_width_s: f64,
    pub sample_rate_hz: f64,
    /// Pulse slot at the start of each PRI.
    pub pulse_width_s: f64,
    pub pri_s: f64,
    pub coding: CodingName,
    pub ppm_shift_s: f64,
    pub blank_width_s: f64,
    pub gate_margin_m: Option<f64>,
    pub sidelobe_guard_m: Option<f64>,
    pub min_separation_m: Option<f64>,
}

impl Default for UwbConfig {
    fn default() -> Self {
        let p = RadarParams::uwb_default();
        Self {
            monocycle_width_s: p.monocycle_width_s,
            sample_rate_hz: p.uwb_sample_rate_hz,
            pulse_width_s: p.pulse_width_s,
            pri_s: p.pri_s,
            coding: CodingName::Polarity,
            ppm_shift_s: p.ppm_shift_s,
            blank_width_s: 0.0,
            gate_margin_m: None,
            sidelobe_guard_m: None,
            min_separation_m: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodeFamily {
    MSequence,
    Gold,
    Manual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CodeConfig {
    pub family: CodeFamily,
    /// Feedback polynomial as exponents, e.g. [7, 1, 0] for x⁷ + x + 1.
    pub taps: Vec<u32>,
    /// Second polynomial of a Gold pair.
    pub taps_b: Vec<u32>,
    pub seed: u32,
    pub gold_shift: usize,
    /// Explicit ±1 chips for the manual family.
    pub chips: Vec<i8>,
    pub chips_per_bit: usize,
}

impl Default for CodeConfig {
    fn default() -> Self {
        Self {
            family: CodeFamily::MSequence,
            taps: Vec::new(),
            taps_b: Vec::new(),
            seed: 1,
            gold_shift: 0,
            chips: Vec::new(),
            chips_per_bit: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReceiverConfig {
    pub threshold_db: f64,
    pub dynamic_range_db: f64,
    pub window_margin_bins: usize,
    pub sidelobe_level_db: f64,
}

impl Default for ReceiverConfig {
    fn default() -> Self {
        let d = DetectionSettings::default();
        Self {
            threshold_db: d.threshold_db,
            dynamic_range_db: d.dynamic_range_db,
            window_margin_bins: d.window_margin_bins,
            sidelobe_level_db: d.sidelobe_level_db,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub target: Vec<PointConfig>,
    #[serde(default)]
    pub clutter: ClutterConfig,
    #[serde(default)]
    pub interferer: Vec<InterfererConfig>,
    #[serde(default)]
    pub noise_psd: f64,
    #[serde(default)]
    pub direct_path_gain: f64,
    #[serde(default)]
    pub phase_jitter_rad: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointConfig {
    pub sigma_m2: f64,
    pub range_m: f64,
    #[serde(default)]
    pub cross_range_m: f64,
    #[serde(default = "unit")]
    pub s_vv: [f64; 2],
    #[serde(default)]
    pub s_vh: [f64; 2],
    #[serde(default)]
    pub s_hv: [f64; 2],
    #[serde(default = "unit")]
    pub s_hh: [f64; 2],
}

fn unit() -> [f64; 2] {
    [1.0, 0.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClutterConfig {
    pub count: usize,
    pub range_min_m: f64,
    pub range_max_m: f64,
    pub mean_sigma_m2: f64,
}

impl Default for ClutterConfig {
    fn default() -> Self {
        Self {
            count: 0,
            range_min_m: 1.0,
            range_max_m: 10.0,
            mean_sigma_m2: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InterfererKindName {
    Cw,
    Qpsk,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterfererConfig {
    #[serde(default = "cw")]
    pub kind: InterfererKindName,
    /// Absolute frequency; must lie within the sampled band of each mode run.
    pub freq_hz: f64,
    pub power_w: f64,
    #[serde(default = "default_symbol_rate")]
    pub symbol_rate_hz: f64,
}

fn cw() -> InterfererKindName {
    InterfererKindName::Cw
}

fn default_symbol_rate() -> f64 {
    Interferer::DEFAULT_SYMBOL_RATE_HZ
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationConfig {
    pub sigma_m2: f64,
    /// Defaults to the range of the first target point.
    pub range_m: Option<f64>,
    /// calibration.csv from an earlier calibrate run; when set, its gains
    /// replace the reference-sphere calibration.
    pub file: Option<PathBuf>,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            sigma_m2: 0.001,
            range_m: None,
            file: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanConfig {
    pub az_min_deg: f64,
    pub az_max_deg: f64,
    pub step_deg: f64,
    pub beamwidth_deg: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            az_min_deg: -10.0,
            az_max_deg: 10.0,
            step_deg: 0.5,
            beamwidth_deg: 2.0,
        }
    }
}

/// Command-line overrides applied on top of the file before validation.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub experiment: Option<ExperimentKind>,
    pub mode: Option<ModeName>,
}

/// Parse, apply overrides, materialise defaults and validate.
pub fn load_scenario(path: &Path, overrides: &Overrides) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_owned(),
        source,
    })?;
    let mut scenario = parse_scenario(&text).map_err(|message| CliError::Parse {
        path: path.to_owned(),
        message,
    })?;
    scenario.apply(overrides);
    scenario.resolve()?;
    Ok(scenario)
}

/// Parse without validating; the error string carries line and column.
pub fn parse_scenario(text: &str) -> Result<Scenario, String> {
    toml::from_str(text).map_err(|e| e.to_string())
}

fn check(
    ok: bool,
    field: impl Into<String>,
    reason: impl FnOnce() -> String,
) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::invalid(field, reason()))
    }
}

fn positive(field: &str, v: f64) -> Result<(), CliError> {
    check(v.is_finite() && v > 0.0, field, || {
        format!("must be positive, got {v}")
    })
}

fn non_negative(field: &str, v: f64) -> Result<(), CliError> {
    check(v.is_finite() && v >= 0.0, field, || {
        format!("must be >= 0, got {v}")
    })
}

fn finite(field: &str, v: f64) -> Result<(), CliError> {
    check(v.is_finite(), field, || format!("must be finite, got {v}"))
}

impl Scenario {
    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.experiment.seed = seed;
        }
        if let Some(dir) = &o.output_dir {
            self.experiment.output_dir = dir.clone();
        }
        if let Some(kind) = o.experiment {
            self.experiment.kind = kind;
        }
        if let Some(mode) = o.mode {
            self.experiment.modes = vec![mode];
        }
    }

    /// Fill every derived default and validate the whole scenario. Nothing
    /// here synthesises a waveform.
    pub fn resolve(&mut self) -> Result<(), CliError> {
        self.manifest = None;
        self.resolve_code()?;
        let nb = self.nb_params();
        let uwb = self.uwb_params();
        validate_params("radar.nb", &nb)?;
        validate_params("radar.uwb", &uwb)?;
        if self.radar.nb.gate_margin_m.is_none() {
            self.radar.nb.gate_margin_m = Some(0.5 * nb.range_resolution_m());
        }
        if self.radar.nb.sidelobe_guard_m.is_none() {
            self.radar.nb.sidelobe_guard_m = Some(SPEED_OF_LIGHT * nb.pulse_width_s / 2.0);
        }
        if self.radar.uwb.gate_margin_m.is_none() {
            self.radar.uwb.gate_margin_m = Some(0.5 * uwb.range_resolution_m());
        }
        if self.radar.uwb.sidelobe_guard_m.is_none() {
            self.radar.uwb.sidelobe_guard_m = Some(0.0);
        }
        if self.radar.nb.min_separation_m.is_none() {
            self.radar.nb.min_separation_m = Some(0.5 * nb.range_resolution_m());
        }
        if self.radar.uwb.min_separation_m.is_none() {
            self.radar.uwb.min_separation_m = Some(0.5 * uwb.range_resolution_m());
        }
        if self.calibration.range_m.is_none() {
            self.calibration.range_m = self.scene.target.first().map(|p| p.range_m);
        }
        self.validate()
    }

    fn resolve_code(&mut self) -> Result<(), CliError> {
        let c = &mut self.code;
        match c.family {
            CodeFamily::MSequence => {
                if c.taps.is_empty() {
                    c.taps = Taps::primitive(7)
                        .expect("degree 7 is tabulated")
                        .exponents()
                        .to_vec();
                }
            }
            CodeFamily::Gold => {
                if c.taps.is_empty() {
                    c.taps = preferred_pair(7)
                        .expect("degree 7 pair is tabulated")
                        .0
                        .exponents()
                        .to_vec();
                }
                if c.taps_b.is_empty() {
                    let degree = c.taps.first().copied().unwrap_or(0);
                    match preferred_pair(degree) {
                        Some((a, b)) if a.exponents() == c.taps.as_slice() => {
                            c.taps_b = b.exponents().to_vec()
                        }
                        _ => {
                            return Err(CliError::invalid(
                                "code.taps_b",
                                format!(
                                    "no tabulated preferred partner for taps {:?}; set taps_b",
                                    c.taps
                                ),
                            ))
                        }
                    }
                }
            }
            CodeFamily::Manual => {
                check(!c.chips.is_empty(), "code.chips", || {
                    "manual family needs a chip list".into()
                })?;
            }
        }
        let len = self.code()?.len();
        if self.code.chips_per_bit == 0 {
            self.code.chips_per_bit = len;
        }
        Ok(())
    }

    fn validate(&self) -> Result<(), CliError> {
        let e = &self.experiment;
        check(!e.modes.is_empty(), "experiment.modes", || {
            "at least one mode is required".into()
        })?;
        let unique: HashSet<_> = e.modes.iter().collect();
        check(unique.len() == e.modes.len(), "experiment.modes", || {
            "modes must not repeat".into()
        })?;
        if e.kind == ExperimentKind::CompareModes {
            check(unique.len() == 2, "experiment.modes", || {
                "compare_modes needs both nb and uwb".into()
            })?;
        }
        check(e.sweeps >= 1, "experiment.sweeps", || {
            "must be at least 1".into()
        })?;
        // TOML integers are signed 64-bit; the manifest must be able to echo the seed.
        check(i64::try_from(e.seed).is_ok(), "experiment.seed", || {
            format!("{} exceeds {}", e.seed, i64::MAX)
        })?;
        check(
            !e.output_dir.as_os_str().is_empty(),
            "experiment.output_dir",
            || "must not be empty".into(),
        )?;

        check(self.code.chips_per_bit >= 1, "code.chips_per_bit", || {
            "must be at least 1".into()
        })?;

        let r = &self.receiver;
        finite("receiver.threshold_db", r.threshold_db)?;
        non_negative("receiver.dynamic_range_db", r.dynamic_range_db)?;
        non_negative("receiver.sidelobe_level_db", r.sidelobe_level_db)?;

        check(self.radar.nb.pulses >= 1, "radar.nb.pulses", || {
            "must be at least 1".into()
        })?;
        let (nb, uwb) = (&self.radar.nb, &self.radar.uwb);
        for (prefix, blank, pulse, pri, lengths) in [
            (
                "radar.nb",
                nb.blank_width_s,
                nb.pulse_width_s,
                nb.pri_s,
                [
                    ("gate_margin_m", nb.gate_margin_m),
                    ("sidelobe_guard_m", nb.sidelobe_guard_m),
                    ("min_separation_m", nb.min_separation_m),
                ],
            ),
            (
                "radar.uwb",
                uwb.blank_width_s,
                uwb.pulse_width_s,
                uwb.pri_s,
                [
                    ("gate_margin_m", uwb.gate_margin_m),
                    ("sidelobe_guard_m", uwb.sidelobe_guard_m),
                    ("min_separation_m", uwb.min_separation_m),
                ],
            ),
        ] {
            non_negative(&format!("{prefix}.blank_width_s"), blank)?;
            if blank > 0.0 {
                check(
                    blank >= pulse * (1.0 - 1e-12),
                    format!("{prefix}.blank_width_s"),
                    || format!("blank {blank} s must cover {prefix}.pulse_width_s ({pulse} s)"),
                )?;
                check(blank < pri, format!("{prefix}.blank_width_s"), || {
                    format!("blank {blank} s must be shorter than {prefix}.pri_s ({pri} s)")
                })?;
            }
            for (name, v) in lengths {
                non_negative(&format!("{prefix}.{name}"), v.unwrap_or(0.0))?;
            }
        }

        let s = &self.scene;
        check(!s.target.is_empty(), "scene.target", || {
            "at least one target point is required".into()
        })?;
        for (i, p) in s.target.iter().enumerate() {
            let f = |name: &str| format!("scene.target[{i}].{name}");
            non_negative(&f("sigma_m2"), p.sigma_m2)?;
            positive(&f("range_m"), p.range_m)?;
            finite(&f("cross_range_m"), p.cross_range_m)?;
            for (name, v) in [
                ("s_vv", p.s_vv),
                ("s_vh", p.s_vh),
                ("s_hv", p.s_hv),
                ("s_hh", p.s_hh),
            ] {
                check(v.iter().all(|x| x.is_finite()), f(name), || {
                    "components must be finite".into()
                })?;
            }
        }
        non_negative("scene.noise_psd", s.noise_psd)?;
        non_negative("scene.direct_path_gain", s.direct_path_gain)?;
        non_negative("scene.phase_jitter_rad", s.phase_jitter_rad)?;
        non_negative("scene.clutter.mean_sigma_m2", s.clutter.mean_sigma_m2)?;
        if s.clutter.count > 0 {
            positive("scene.clutter.range_min_m", s.clutter.range_min_m)?;
            check(
                s.clutter.range_max_m > s.clutter.range_min_m,
                "scene.clutter.range_max_m",
                || "must exceed scene.clutter.range_min_m".into(),
            )?;
        }
        for (i, it) in s.interferer.iter().enumerate() {
            finite(&format!("scene.interferer[{i}].freq_hz"), it.freq_hz)?;
            non_negative(&format!("scene.interferer[{i}].power_w"), it.power_w)?;
            positive(
                &format!("scene.interferer[{i}].symbol_rate_hz"),
                it.symbol_rate_hz,
            )?;
        }

        positive("calibration.sigma_m2", self.calibration.sigma_m2)?;
        positive(
            "calibration.range_m",
            self.calibration.range_m.unwrap_or(0.0),
        )?;

        let sc = &self.scan;
        finite("scan.az_min_deg", sc.az_min_deg)?;
        finite("scan.az_max_deg", sc.az_max_deg)?;
        check(sc.az_max_deg >= sc.az_min_deg, "scan.az_max_deg", || {
            "must be >= scan.az_min_deg".into()
        })?;
        positive("scan.beamwidth_deg", sc.beamwidth_deg)?;
        positive("scan.step_deg", sc.step_deg)?;
        check(sc.step_deg <= sc.beamwidth_deg, "scan.step_deg", || {
            format!(
                "step {} deg exceeds beamwidth {} deg and would leave gaps",
                sc.step_deg, sc.beamwidth_deg
            )
        })?;

        for &mode in &e.modes {
            self.validate_geometry(mode)?;
        }
        if let Some(path) = &self.calibration.file {
            let table = read_calibration(path)?;
            for &mode in &e.modes {
                check(
                    table.iter().any(|c| c.mode == mode.rcs_mode()),
                    "calibration.file",
                    || format!("{} has no {mode} row", path.display()),
                )?;
            }
        }
        Ok(())
    }

    /// Every range the chosen mode must observe lies between the end of the
    /// receiver blank and the unambiguous range.
    fn validate_geometry(&self, mode: ModeName) -> Result<(), CliError> {
        let params = self.params(mode);
        let max = params.unambiguous_range_m();
        let min = SPEED_OF_LIGHT * self.blank_width_s(mode) / 2.0;
        let within = |field: String, r: f64| {
            check(r > min && r < max, field, || {
                format!("{r} m outside the {mode} observable window ({min} m, {max} m)")
            })
        };
        for (i, p) in self.scene.target.iter().enumerate() {
            within(format!("scene.target[{i}].range_m"), p.range_m)?;
        }
        if self.scene.clutter.count > 0 {
            within(
                "scene.clutter.range_min_m".into(),
                self.scene.clutter.range_min_m,
            )?;
            check(
                self.scene.clutter.range_max_m <= max,
                "scene.clutter.range_max_m",
                || {
                    format!(
                        "{} m beyond the {mode} unambiguous range {max} m",
                        self.scene.clutter.range_max_m
                    )
                },
            )?;
        }
        if self.needs_reference() {
            within(
                "calibration.range_m".into(),
                self.calibration.range_m.unwrap_or(0.0),
            )?;
        }
        let nyquist = params.sample_rate() / 2.0;
        for (i, it) in self.scene.interferer.iter().enumerate() {
            let offset = it.freq_hz - params.stream_carrier_hz();
            check(
                offset.abs() < nyquist,
                format!("scene.interferer[{i}].freq_hz"),
                || {
                    format!("{} Hz is outside the {mode} sampled band (offset {offset} Hz, Nyquist {nyquist} Hz)", it.freq_hz)
                },
            )?;
        }
        Ok(())
    }

    /// Whether the run calibrates against the reference sphere itself.
    fn needs_reference(&self) -> bool {
        match self.experiment.kind {
            ExperimentKind::Calibrate => true,
            ExperimentKind::RcsSweepSeries
            | ExperimentKind::ScanImage
            | ExperimentKind::CompareModes => self.calibration.file.is_none(),
            ExperimentKind::Profile | ExperimentKind::Polarimetric => false,
        }
    }

    pub fn code(&self) -> Result<PnSequence, CliError> {
        let c = &self.code;
        let taps = |field: &str, exps: &[u32]| {
            Taps::new(exps).map_err(|e| CliError::invalid(field, e.to_string()))
        };
        match c.family {
            CodeFamily::MSequence => gen_mseq(&taps("code.taps", &c.taps)?, c.seed)
                .map_err(|e| CliError::invalid("code.seed", e.to_string())),
            CodeFamily::Gold => gen_gold(
                &taps("code.taps", &c.taps)?,
                &taps("code.taps_b", &c.taps_b)?,
                c.gold_shift,
            )
            .map_err(|e| CliError::invalid("code.gold_shift", e.to_string())),
            CodeFamily::Manual => PnSequence::from_chips(c.chips.clone())
                .map_err(|e| CliError::invalid("code.chips", e.to_string())),
        }
    }

    pub fn nb_params(&self) -> RadarParams {
        let n = &self.radar.nb;
        RadarParams {
            carrier_hz: n.carrier_hz,
            chip_rate_hz: n.chip_rate_hz,
            samples_per_chip: n.samples_per_chip,
            pulse_width_s: n.pulse_width_s,
            pri_s: n.pri_s,
            ..RadarParams::nb_default()
        }
    }

    pub fn uwb_params(&self) -> RadarParams {
        let u = &self.radar.uwb;
        RadarParams {
            monocycle_width_s: u.monocycle_width_s,
            uwb_sample_rate_hz: u.sample_rate_hz,
            pulse_width_s: u.pulse_width_s,
            pri_s: u.pri_s,
            uwb_coding: match u.coding {
                CodingName::Polarity => UwbCoding::Polarity,
                CodingName::Position => UwbCoding::Position,
            },
            ppm_shift_s: u.ppm_shift_s,
            ..RadarParams::uwb_default()
        }
    }

    pub fn params(&self, mode: ModeName) -> RadarParams {
        match mode {
            ModeName::Nb => self.nb_params(),
            ModeName::Uwb => self.uwb_params(),
        }
    }

    fn blank_width_s(&self, mode: ModeName) -> f64 {
        match mode {
            ModeName::Nb => self.radar.nb.blank_width_s,
            ModeName::Uwb => self.radar.uwb.blank_width_s,
        }
    }

    pub fn receiver_settings(&self, mode: ModeName) -> ReceiverSettings {
        let (nb, uwb) = (&self.radar.nb, &self.radar.uwb);
        let (pulses, margin, guard, separation) = match mode {
            ModeName::Nb => (
                nb.pulses,
                nb.gate_margin_m,
                nb.sidelobe_guard_m,
                nb.min_separation_m,
            ),
            ModeName::Uwb => (
                1,
                uwb.gate_margin_m,
                uwb.sidelobe_guard_m,
                uwb.min_separation_m,
            ),
        };
        let blank = self.blank_width_s(mode);
        ReceiverSettings {
            blank_width_s: (blank > 0.0).then_some(blank),
            pulses,
            gate_margin_m: margin,
            detection: DetectionSettings {
                threshold_db: self.receiver.threshold_db,
                dynamic_range_db: self.receiver.dynamic_range_db,
                window_margin_bins: self.receiver.window_margin_bins,
                sidelobe_guard_m: guard,
                sidelobe_level_db: self.receiver.sidelobe_level_db,
                min_separation_m: separation,
            },
        }
    }

    pub fn sensor(&self, mode: ModeName) -> Result<Sensor, CliError> {
        Sensor::new(
            self.params(mode),
            self.code()?,
            self.receiver_settings(mode),
        )
        .map_err(CliError::model(format!("building the {mode} sensor")))
    }

    /// The scene shared by every mode: target points, seeded clutter,
    /// interferers and noise.
    pub fn scene(&self) -> Result<Scene, CliError> {
        let s = &self.scene;
        let c = |v: [f64; 2]| Complex64::new(v[0], v[1]);
        let points = s
            .target
            .iter()
            .map(|p| BrilliantPoint {
                sigma_m2: p.sigma_m2,
                range_m: p.range_m,
                cross_range_m: p.cross_range_m,
                pol: ScatteringMatrix {
                    vv: c(p.s_vv),
                    vh: c(p.s_vh),
                    hv: c(p.s_hv),
                    hh: c(p.s_hh),
                },
            })
            .collect();
        let target = TargetModel::new(points)
            .map_err(|e| CliError::invalid("scene.target", e.to_string()))?;
        let seed = self.experiment.seed;
        let clutter = gen_clutter(
            s.clutter.range_min_m,
            s.clutter.range_max_m,
            s.clutter.count,
            s.clutter.mean_sigma_m2,
            seed,
        )
        .map_err(|e| CliError::invalid("scene.clutter", e.to_string()))?;
        let interferers = s
            .interferer
            .iter()
            .map(|i| Interferer {
                freq_hz: i.freq_hz,
                power_w: i.power_w,
                kind: match i.kind {
                    InterfererKindName::Cw => InterfererKind::Cw,
                    InterfererKindName::Qpsk => InterfererKind::QpskModulated,
                },
                symbol_rate_hz: i.symbol_rate_hz,
            })
            .collect();
        Ok(Scene {
            target,
            clutter,
            interferers,
            noise_psd: s.noise_psd,
            direct_path_gain: s.direct_path_gain,
            sweep_phase_jitter_rad: s.phase_jitter_rad,
            rng_seed: seed,
        })
    }

    pub fn scan_settings(&self) -> ScanSettings {
        ScanSettings {
            az_min_deg: self.scan.az_min_deg,
            az_max_deg: self.scan.az_max_deg,
            step_deg: self.scan.step_deg,
            beamwidth_deg: self.scan.beamwidth_deg,
        }
    }
}

fn validate_params(prefix: &str, p: &RadarParams) -> Result<(), CliError> {
    p.validate().map_err(|e| match e {
        WaveformError::PulseNotShorterThanPri {
            pulse_width_s,
            pri_s,
        } => CliError::invalid(
            format!("{prefix}.pulse_width_s, {prefix}.pri_s"),
            format!("pulse width {pulse_width_s} s must be shorter than PRI {pri_s} s"),
        ),
        WaveformError::InvalidParam { field, reason } => {
            let field = match field {
                "uwb_sample_rate_hz" => "sample_rate_hz",
                f => f,
            };
            CliError::invalid(format!("{prefix}.{field}"), reason)
        }
        WaveformError::Undersampled { .. } => {
            CliError::invalid(format!("{prefix}.sample_rate_hz"), e.to_string())
        }
        other => CliError::invalid(prefix, other.to_string()),
    })
}

/// One row of calibration.csv.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRow {
    pub mode: RcsMode,
    pub gain: f64,
    pub reference_sigma_m2: f64,
    pub reference_range_m: f64,
}

impl From<&CalibrationConstant> for CalibrationRow {
    fn from(c: &CalibrationConstant) -> Self {
        Self {
            mode: c.mode,
            gain: c.gain,
            reference_sigma_m2: c.reference_sigma_m2,
            reference_range_m: c.reference_range_m,
        }
    }
}

impl From<&CalibrationRow> for CalibrationConstant {
    fn from(r: &CalibrationRow) -> Self {
        Self {
            gain: r.gain,
            reference_sigma_m2: r.reference_sigma_m2,
            reference_range_m: r.reference_range_m,
            mode: r.mode,
        }
    }
}

pub fn read_calibration(path: &Path) -> Result<Vec<CalibrationConstant>, CliError> {
    let bad = |reason: String| {
        CliError::invalid("calibration.file", format!("{}: {reason}", path.display()))
    };
    let mut reader = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let rows = reader
        .deserialize::<CalibrationRow>()
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| bad(e.to_string()))?;
    for r in &rows {
        if !(r.gain.is_finite() && r.gain > 0.0) {
            return Err(bad(format!(
                "{} gain {} is not positive",
                r.mode.label(),
                r.gain
            )));
        }
    }
    Ok(rows.iter().map(CalibrationConstant::from).collect())
}
