//! Experiment orchestration and CSV emission.
//!
//! Every artifact is rendered in memory first; only then is the output
//! directory touched, and anything written by a failing run is removed.

use std::fs;
use std::path::{Path, PathBuf};

use radsim_core::channel::{Polarization, Scene};
use radsim_core::imaging::{
    calibrate_sensor, detect_scatterers, polarimetric_scan, scan_image, series_stats, sweep_series,
    CalibrationConstant, RangeProfile, RcsEstimate, ScanImage,
};
use radsim_core::sensor::Sensor;
use serde::Serialize;

use crate::error::CliError;
use crate::scenario::{
    read_calibration, CalibrationRow, ExperimentKind, ManifestInfo, ModeName, Scenario,
};

pub const MANIFEST_FILE: &str = "run_manifest.toml";

/// Floor for dB columns so empty bins stay finite in the CSV.
pub const DB_FLOOR: f64 = -300.0;

pub fn power_db(p: f64) -> f64 {
    if p > 0.0 {
        (10.0 * p.log10()).max(DB_FLOOR)
    } else {
        DB_FLOOR
    }
}

/// dBsm with the same floor, so a zero estimate stays finite.
fn clamped_dbsm(e: &RcsEstimate) -> f64 {
    if e.dbsm.is_nan() {
        DB_FLOOR
    } else {
        e.dbsm.max(DB_FLOOR)
    }
}

#[derive(Debug, Serialize)]
struct ProfileRow {
    range_m: f64,
    power_linear: f64,
    power_db: f64,
}

#[derive(Debug, Serialize)]
struct SeriesRow {
    sweep: u64,
    mode: &'static str,
    sigma_m2: f64,
    dbsm: f64,
}

#[derive(Debug, Serialize)]
struct ImageCell {
    az_deg: f64,
    range_m: f64,
    power_db: f64,
}

#[derive(Debug, Serialize)]
struct SummaryRow {
    sweeps: usize,
    nb_mean_dbsm: f64,
    nb_std_dbsm: Option<f64>,
    uwb_mean_dbsm: f64,
    uwb_std_dbsm: Option<f64>,
    uwb_std_lt_nb_std: Option<bool>,
}

/// A rendered output file, not yet on disk.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub files: Vec<PathBuf>,
    /// Human-readable one-line results.
    pub notes: Vec<String>,
}

/// NB-vs-UWB comparison on one scene and seed.
#[derive(Debug, Clone)]
pub struct ModeComparison {
    pub nb: Vec<RcsEstimate>,
    pub uwb: Vec<RcsEstimate>,
    pub nb_mean_dbsm: f64,
    pub nb_std_dbsm: Option<f64>,
    pub uwb_mean_dbsm: f64,
    pub uwb_std_dbsm: Option<f64>,
}

impl ModeComparison {
    /// `None` when either series is too short to have a spread.
    pub fn uwb_std_lt_nb_std(&self) -> Option<bool> {
        Some(self.uwb_std_dbsm? < self.nb_std_dbsm?)
    }
}

fn csv_bytes<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<Vec<u8>, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| e.into_error().into())
}

fn artifact<T: Serialize>(
    name: String,
    rows: impl IntoIterator<Item = T>,
) -> Result<Artifact, CliError> {
    let bytes = csv_bytes(rows).map_err(|e| CliError::Write {
        path: PathBuf::from(&name),
        source: std::io::Error::other(e),
    })?;
    Ok(Artifact { name, bytes })
}

pub fn profile_csv(name: String, p: &RangeProfile) -> Result<Artifact, CliError> {
    artifact(
        name,
        p.bins.iter().map(|b| ProfileRow {
            range_m: b.range_m,
            power_linear: b.power,
            power_db: power_db(b.power),
        }),
    )
}

pub fn series_csv(
    name: String,
    mode: ModeName,
    series: &[RcsEstimate],
) -> Result<Artifact, CliError> {
    artifact(
        name,
        series.iter().map(|e| SeriesRow {
            sweep: e.sweep_index,
            mode: mode.label(),
            sigma_m2: e.sigma_m2,
            dbsm: clamped_dbsm(e),
        }),
    )
}

pub fn image_csv(name: String, image: &ScanImage) -> Result<Artifact, CliError> {
    artifact(
        name,
        image.rows.iter().flat_map(|r| {
            r.profile.bins.iter().map(move |b| ImageCell {
                az_deg: r.az_deg,
                range_m: b.range_m,
                power_db: power_db(b.power),
            })
        }),
    )
}

/// Calibration for one mode: from the configured file, or by measuring the
/// reference sphere.
pub fn calibration_for(
    scenario: &Scenario,
    sensor: &Sensor,
    mode: ModeName,
) -> Result<CalibrationConstant, CliError> {
    match &scenario.calibration.file {
        Some(path) => read_calibration(path)?
            .into_iter()
            .find(|c| c.mode == mode.rcs_mode())
            .ok_or_else(|| {
                CliError::invalid(
                    "calibration.file",
                    format!("{} has no {mode} row", path.display()),
                )
            }),
        None => {
            let range = scenario.calibration.range_m.expect("materialised at load");
            calibrate_sensor(
                sensor,
                scenario.calibration.sigma_m2,
                range,
                scenario.experiment.seed,
            )
            .map_err(CliError::model(format!(
                "{mode} calibration (calibration.sigma_m2, calibration.range_m)"
            )))
        }
    }
}

fn series_for(
    scenario: &Scenario,
    scene: &Scene,
    mode: ModeName,
) -> Result<Vec<RcsEstimate>, CliError> {
    let sensor = scenario.sensor(mode)?;
    let cal = calibration_for(scenario, &sensor, mode)?;
    sweep_series(scene, &sensor, &cal, scenario.experiment.sweeps).map_err(CliError::model(
        format!("{mode} sweep series (scene.target, experiment.sweeps)"),
    ))
}

/// Run both modes over the identical scene and seed.
pub fn compare_modes(scenario: &Scenario) -> Result<ModeComparison, CliError> {
    let scene = scenario.scene()?;
    let nb = series_for(scenario, &scene, ModeName::Nb)?;
    let uwb = series_for(scenario, &scene, ModeName::Uwb)?;
    let (nb_mean_dbsm, nb_std_dbsm) = series_stats(&nb);
    let (uwb_mean_dbsm, uwb_std_dbsm) = series_stats(&uwb);
    Ok(ModeComparison {
        nb,
        uwb,
        nb_mean_dbsm,
        nb_std_dbsm,
        uwb_mean_dbsm,
        uwb_std_dbsm,
    })
}

fn fmt_std(s: Option<f64>) -> String {
    s.map_or_else(|| "n/a".into(), |v| format!("{v:.3} dB"))
}

/// Execute the scenario's experiment and render every output, manifest last.
pub fn render(scenario: &Scenario) -> Result<(Vec<Artifact>, Vec<String>), CliError> {
    let modes = &scenario.experiment.modes;
    let mut out = Vec::new();
    let mut notes = Vec::new();
    match scenario.experiment.kind {
        ExperimentKind::Profile => {
            let scene = scenario.scene()?;
            let pol = Polarization::from(scenario.experiment.polarization);
            for &mode in modes {
                let sensor = scenario.sensor(mode)?;
                let p = sensor
                    .profile(&scene, pol, 0)
                    .map_err(CliError::model(format!("{mode} range profile (scene)")))?;
                let dets = detect_scatterers(&p, &sensor.settings().detection);
                let ranges: Vec<String> =
                    dets.iter().map(|d| format!("{:.3}", d.range_m)).collect();
                notes.push(format!(
                    "{mode}: {} detection(s) at [{}] m",
                    dets.len(),
                    ranges.join(", ")
                ));
                out.push(profile_csv(format!("profile_{mode}.csv"), &p)?);
            }
        }
        ExperimentKind::RcsSweepSeries => {
            let scene = scenario.scene()?;
            for &mode in modes {
                let series = series_for(scenario, &scene, mode)?;
                let (mean, std) = series_stats(&series);
                notes.push(format!("{mode}: mean {mean:.3} dBsm, std {}", fmt_std(std)));
                out.push(series_csv(format!("series_{mode}.csv"), mode, &series)?);
            }
        }
        ExperimentKind::Polarimetric => {
            let scene = scenario.scene()?;
            for &mode in modes {
                let sensor = scenario.sensor(mode)?;
                let profiles = polarimetric_scan(&scene, &sensor).map_err(CliError::model(
                    format!("{mode} polarimetric scan (scene.target)"),
                ))?;
                for p in &profiles {
                    let peak = p.peak().map_or(0.0, |b| b.power);
                    notes.push(format!(
                        "{mode} {}: peak {:.2} dB",
                        p.pol.label(),
                        power_db(peak)
                    ));
                    out.push(profile_csv(
                        format!("profile_{mode}_{}.csv", p.pol.label()),
                        p,
                    )?);
                }
            }
        }
        ExperimentKind::ScanImage => {
            let scene = scenario.scene()?;
            let settings = scenario.scan_settings();
            for &mode in modes {
                let sensor = scenario.sensor(mode)?;
                let cal = calibration_for(scenario, &sensor, mode)?;
                let image = scan_image(&scene, &sensor, &cal, &settings)
                    .map_err(CliError::model(format!("{mode} scan image (scan)")))?;
                if let Some((az, r, p)) = image.max_cell() {
                    notes.push(format!(
                        "{mode}: brightest cell {:.2} dB at az {az} deg, {r:.3} m",
                        power_db(p)
                    ));
                }
                out.push(image_csv(format!("image_{mode}.csv"), &image)?);
            }
        }
        ExperimentKind::Calibrate => {
            let mut rows = Vec::new();
            for &mode in modes {
                let sensor = scenario.sensor(mode)?;
                let cal = calibration_for(scenario, &sensor, mode)?;
                notes.push(format!("{mode}: gain {:e}", cal.gain));
                rows.push(CalibrationRow::from(&cal));
            }
            out.push(artifact("calibration.csv".into(), rows)?);
        }
        ExperimentKind::CompareModes => {
            let cmp = compare_modes(scenario)?;
            notes.push(format!(
                "nb: mean {:.3} dBsm, std {}",
                cmp.nb_mean_dbsm,
                fmt_std(cmp.nb_std_dbsm)
            ));
            notes.push(format!(
                "uwb: mean {:.3} dBsm, std {}",
                cmp.uwb_mean_dbsm,
                fmt_std(cmp.uwb_std_dbsm)
            ));
            out.push(series_csv("series_nb.csv".into(), ModeName::Nb, &cmp.nb)?);
            out.push(series_csv(
                "series_uwb.csv".into(),
                ModeName::Uwb,
                &cmp.uwb,
            )?);
            out.push(artifact(
                "compare_summary.csv".into(),
                [SummaryRow {
                    sweeps: scenario.experiment.sweeps,
                    nb_mean_dbsm: cmp.nb_mean_dbsm,
                    nb_std_dbsm: cmp.nb_std_dbsm,
                    uwb_mean_dbsm: cmp.uwb_mean_dbsm,
                    uwb_std_dbsm: cmp.uwb_std_dbsm,
                    uwb_std_lt_nb_std: cmp.uwb_std_lt_nb_std(),
                }],
            )?);
        }
    }
    out.push(manifest(scenario)?);
    Ok((out, notes))
}

fn manifest(scenario: &Scenario) -> Result<Artifact, CliError> {
    let mut m = scenario.clone();
    m.manifest = Some(ManifestInfo {
        tool_version: env!("CARGO_PKG_VERSION").into(),
        seed: scenario.experiment.seed,
        timestamp: humantime::format_rfc3339_seconds(std::time::SystemTime::now()).to_string(),
    });
    let text = toml::to_string(&m).map_err(|e| CliError::Write {
        path: PathBuf::from(MANIFEST_FILE),
        source: std::io::Error::other(e),
    })?;
    Ok(Artifact {
        name: MANIFEST_FILE.into(),
        bytes: text.into_bytes(),
    })
}

/// Write artifacts into `dir`; on any failure, remove what this call wrote.
pub fn write_all(dir: &Path, artifacts: &[Artifact]) -> Result<Vec<PathBuf>, CliError> {
    let created = !dir.exists();
    let write_err = |path: &Path| {
        let path = path.to_owned();
        move |source| CliError::Write { path, source }
    };
    fs::create_dir_all(dir).map_err(write_err(dir))?;
    let mut written = Vec::new();
    for a in artifacts {
        let path = dir.join(&a.name);
        if let Err(e) = fs::write(&path, &a.bytes).map_err(write_err(&path)) {
            // a half-written file may exist even though write failed
            let _ = fs::remove_file(&path);
            for p in &written {
                let _ = fs::remove_file(p);
            }
            if created {
                let _ = fs::remove_dir(dir);
            }
            return Err(e);
        }
        written.push(path);
    }
    Ok(written)
}

pub fn run(scenario: &Scenario) -> Result<RunReport, CliError> {
    let (artifacts, notes) = render(scenario)?;
    let files = write_all(&scenario.experiment.output_dir, &artifacts)?;
    Ok(RunReport { files, notes })
}
