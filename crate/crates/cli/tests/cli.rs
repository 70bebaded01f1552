//! The `simulate` binary end to end: exit codes, error messages, the
//! calibrate-then-measure workflow and the manifest round trip.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const SPHERE: &str = "[[scene.target]]\nsigma_m2 = 0.001\nrange_m = 7.0\n";

fn simulate(dir: &Path, scenario: &str, args: &[&str]) -> Output {
    let path = dir.join("scenario.toml");
    fs::write(&path, scenario).unwrap();
    run_file(&path, args)
}

fn run_file(path: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_simulate")).arg(path).args(args).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn out_dir(tmp: &TempDir, name: &str) -> PathBuf {
    tmp.path().join(name)
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path).unwrap().lines().skip(1).map(|l| l.split(',').map(str::to_owned).collect()).collect()
}

#[test]
fn minimal_file_runs_with_defaults() {
    let tmp = TempDir::new().unwrap();
    let out = out_dir(&tmp, "o");
    let o = simulate(tmp.path(), &format!("[experiment]\nmodes = [\"uwb\"]\n\n{SPHERE}"), &["--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("uwb: 1 detection(s) at [7.000] m"));
    let header = fs::read_to_string(out.join("profile_uwb.csv")).unwrap();
    assert!(header.starts_with("range_m,power_linear,power_db\n"));
    let manifest = fs::read_to_string(out.join("run_manifest.toml")).unwrap();
    for key in ["tool_version", "timestamp", "chips_per_bit = 127", "gate_margin_m", "[radar.nb]"] {
        assert!(manifest.contains(key), "manifest lacks {key}");
    }
}

#[test]
fn quiet_suppresses_the_summary() {
    let tmp = TempDir::new().unwrap();
    let out = out_dir(&tmp, "o");
    let o = simulate(tmp.path(), SPHERE, &["--quiet", "--mode", "uwb", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
}

#[test]
fn validation_failures_exit_with_two_and_name_the_field() {
    let tmp = TempDir::new().unwrap();
    let cases = [
        (format!("[radar.nb]\ncarrier_hz = 5e9\n\n{SPHERE}"), vec!["radar.nb.carrier_hz", "outside 300–3000 MHz"]),
        (
            format!("[radar.nb]\npulse_width_s = 1e-4\npri_s = 1e-4\n\n{SPHERE}"),
            vec!["radar.nb.pulse_width_s", "radar.nb.pri_s"],
        ),
        (format!("[radar.uwb]\nbogus = 1\n\n{SPHERE}"), vec!["unknown field `bogus`", "line 2"]),
        (format!("[experiment]\nsweeps = 0\n\n{SPHERE}"), vec!["experiment.sweeps"]),
        ("[experiment]\nmodes = [\"uwb\"]\n".to_string(), vec!["missing field `scene`"]),
        (format!("[experiment]\nmodes = [\"uwb\"]\n\n{}", SPHERE.replace("7.0", "40.0")), vec!["scene.target[0].range_m"]),
        (format!("[code]\ntaps = [7, 1]\n\n{SPHERE}"), vec!["code.taps"]),
        (format!("[scan]\nstep_deg = 5.0\n\n{SPHERE}"), vec!["scan.step_deg"]),
    ];
    for (text, needles) in cases {
        let o = simulate(tmp.path(), &text, &["--out", out_dir(&tmp, "never").to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "{text}\n{}", stderr(&o));
        for n in needles {
            assert!(stderr(&o).contains(n), "expected {n:?} in {}", stderr(&o));
        }
        assert!(!out_dir(&tmp, "never").exists(), "validation failure must not touch the output directory");
    }
    let missing = run_file(&tmp.path().join("absent.toml"), &[]);
    assert_eq!(missing.status.code(), Some(2));
    let bad_flag = simulate(tmp.path(), SPHERE, &["--experiment", "nonsense"]);
    assert_eq!(bad_flag.status.code(), Some(2));
}

#[test]
fn model_failure_exits_with_three_and_leaves_no_outputs() {
    // the target drowns in noise, so the sweep series finds nothing in its gate
    let tmp = TempDir::new().unwrap();
    let out = out_dir(&tmp, "o");
    let text = format!(
        "[experiment]\nkind = \"rcs_sweep_series\"\nmodes = [\"uwb\"]\nsweeps = 3\n\n[scene]\nnoise_psd = 1e-9\n\n{SPHERE}\n[calibration]\nrange_m = 5.0\n"
    );
    let o = simulate(tmp.path(), &text, &["--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("imaging"), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn calibration_file_feeds_later_runs() {
    let tmp = TempDir::new().unwrap();
    let cal_dir = out_dir(&tmp, "cal");
    let o = simulate(
        tmp.path(),
        &format!("[experiment]\nkind = \"calibrate\"\n\n{SPHERE}"),
        &["--out", cal_dir.to_str().unwrap()],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let cal = cal_dir.join("calibration.csv");
    let rows = csv_rows(&cal);
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][0], "nb");
    assert_eq!(rows[1][0], "uwb");

    // a ten times larger sphere at the calibrated range reads back 10 dB up
    let series_dir = out_dir(&tmp, "series");
    let text = format!(
        "[experiment]\nkind = \"rcs_sweep_series\"\nsweeps = 3\n\n[calibration]\nfile = {:?}\n\n{}",
        cal.to_str().unwrap(),
        SPHERE.replace("0.001", "0.01")
    );
    let o = simulate(tmp.path(), &text, &["--out", series_dir.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    for mode in ["nb", "uwb"] {
        for row in csv_rows(&series_dir.join(format!("series_{mode}.csv"))) {
            let dbsm: f64 = row[3].parse().unwrap();
            assert!((dbsm + 20.0).abs() < 1e-6, "{mode}: {dbsm}");
        }
    }

    let wrong = simulate(
        tmp.path(),
        &format!("[experiment]\nkind = \"rcs_sweep_series\"\n\n[calibration]\nfile = \"nowhere.csv\"\n\n{SPHERE}"),
        &[],
    );
    assert_eq!(wrong.status.code(), Some(2));
    assert!(stderr(&wrong).contains("calibration.file"));
}

#[test]
fn sweep_series_for_both_modes_has_one_row_per_sweep() {
    let tmp = TempDir::new().unwrap();
    let out = out_dir(&tmp, "o");
    let o = simulate(
        tmp.path(),
        &format!("[experiment]\nkind = \"rcs_sweep_series\"\nsweeps = 100\n\n{SPHERE}"),
        &["--out", out.to_str().unwrap()],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    for mode in ["nb", "uwb"] {
        let text = fs::read_to_string(out.join(format!("series_{mode}.csv"))).unwrap();
        assert!(text.starts_with("sweep,mode,sigma_m2,dbsm\n"));
        let rows = csv_rows(&out.join(format!("series_{mode}.csv")));
        assert_eq!(rows.len(), 100);
        assert!(rows.iter().enumerate().all(|(i, r)| r[0] == i.to_string() && r[1] == mode));
    }
}

#[test]
fn compare_modes_agrees_on_a_lone_sphere_and_handles_one_sweep() {
    let tmp = TempDir::new().unwrap();
    let out = out_dir(&tmp, "o");
    let scenario = format!("[experiment]\nkind = \"compare_modes\"\nsweeps = 10\n\n{}", SPHERE.replace("0.001", "0.004"));
    let o = simulate(tmp.path(), &scenario, &["--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary = fs::read_to_string(out.join("compare_summary.csv")).unwrap();
    assert!(summary.starts_with("sweeps,nb_mean_dbsm,nb_std_dbsm,uwb_mean_dbsm,uwb_std_dbsm,uwb_std_lt_nb_std\n"));
    let row = &csv_rows(&out.join("compare_summary.csv"))[0];
    let (nb, uwb): (f64, f64) = (row[1].parse().unwrap(), row[3].parse().unwrap());
    assert!((nb - uwb).abs() <= 0.5, "NB {nb} vs UWB {uwb}");

    let single = out_dir(&tmp, "single");
    let o = simulate(tmp.path(), &scenario.replace("sweeps = 10", "sweeps = 1"), &["--out", single.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let row = &csv_rows(&single.join("compare_summary.csv"))[0];
    assert_eq!(row[0], "1");
    assert!(row[2].is_empty() && row[4].is_empty() && row[5].is_empty(), "{row:?}");

    let one_mode = simulate(tmp.path(), &scenario, &["--mode", "nb"]);
    assert_eq!(one_mode.status.code(), Some(2));
    assert!(stderr(&one_mode).contains("experiment.modes"));
}

#[test]
fn rerunning_the_manifest_reproduces_every_csv() {
    let tmp = TempDir::new().unwrap();
    let first = out_dir(&tmp, "first");
    let text = format!(
        "[experiment]\nkind = \"polarimetric\"\n\n[scene]\nnoise_psd = 1e-18\nphase_jitter_rad = 0.2\n\n{SPHERE}s_vh = [0.3, 0.1]\n\n[scene.clutter]\ncount = 5\nrange_min_m = 2.0\nrange_max_m = 12.0\n"
    );
    let o = simulate(tmp.path(), &text, &["--seed", "99", "--out", first.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read_dir(&first).unwrap().count(), 9, "4 polarisations x 2 modes + manifest");

    let manifest = first.join("run_manifest.toml");
    assert!(fs::read_to_string(&manifest).unwrap().contains("seed = 99"));
    let second = out_dir(&tmp, "second");
    let o = run_file(&manifest, &["--out", second.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csvs = |d: &Path| {
        let mut v: Vec<_> = fs::read_dir(d)
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| p.extension().is_some_and(|x| x == "csv"))
            .map(|p| (p.file_name().unwrap().to_owned(), fs::read(&p).unwrap()))
            .collect();
        v.sort();
        v
    };
    assert_eq!(csvs(&first), csvs(&second));
}

#[test]
fn scan_image_emits_long_format_cells() {
    let tmp = TempDir::new().unwrap();
    let out = out_dir(&tmp, "o");
    let text = format!(
        "[experiment]\nkind = \"scan_image\"\nmodes = [\"uwb\"]\n\n[scan]\naz_min_deg = -2.0\naz_max_deg = 2.0\nstep_deg = 1.0\nbeamwidth_deg = 2.0\n\n{SPHERE}"
    );
    let o = simulate(tmp.path(), &text, &["--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = csv_rows(&out.join("image_uwb.csv"));
    assert_eq!(rows.len(), 5 * 10_000);
    let brightest = rows.iter().max_by(|a, b| a[2].parse::<f64>().unwrap().total_cmp(&b[2].parse().unwrap())).unwrap();
    assert_eq!(brightest[0], "0.0");
    assert!((brightest[1].parse::<f64>().unwrap() - 7.0).abs() < 0.01);
}
