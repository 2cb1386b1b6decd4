use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qmrom::config::to_toml;
use qmrom::metadata::RunMetadata;
use qmrom_core::scenarios::builtin;

fn qmrom(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qmrom"));
    cmd.args(args)
        .env_remove("QMROM_CACHE")
        .env_remove("QMROM_THREADS");
    if let Some(t) = threads {
        cmd.env("QMROM_THREADS", t);
    }
    cmd.output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// The desk clamped-clamped beam cut to `t_end` seconds, written as TOML.
fn short_beam(dir: &Path, t_end: f64) -> PathBuf {
    let mut config = builtin("beam_cc_desk").unwrap();
    config.integrator.t_end = t_end;
    let path = dir.join("beam.toml");
    std::fs::write(&path, to_toml(&config).unwrap()).unwrap();
    path
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .unwrap();
    r.records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect()
}

fn assert_declared_files_exist(dir: &Path) -> RunMetadata {
    let meta = RunMetadata::read(dir).unwrap();
    assert!(
        meta.missing_files(dir).is_empty(),
        "{:?}",
        meta.missing_files(dir)
    );
    meta
}

#[test]
fn modes_reports_the_clamped_beam_frequencies() {
    let dir = tempfile::tempdir().unwrap();
    let out = qmrom(
        &[
            "modes",
            "--scenario",
            "beam_cc",
            "-n",
            "3",
            "--out",
            s(dir.path()),
        ],
        None,
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let found: Vec<f64> = stdout
        .lines()
        .skip(1)
        .map(|l| l.split_whitespace().nth(1).unwrap().parse().unwrap())
        .collect();
    for (f, e) in found.iter().zip([65.2, 178.8, 348.0]) {
        assert!((f / e - 1.0).abs() <= 0.02, "{f} vs {e}");
    }
    let rows = read_csv(&dir.path().join("frequencies.csv"));
    assert_eq!(rows[0], ["k", "omega_sq", "frequency_hz"]);
    assert_eq!(rows.len(), 4);
    let shapes = read_csv(&dir.path().join("mode_shapes.csv"));
    assert_eq!(shapes[0][5], "phi_1");
    assert_declared_files_exist(dir.path());
}

#[test]
fn full_run_writes_artifacts_and_fills_the_cache() {
    let dir = tempfile::tempdir().unwrap();
    let config = short_beam(dir.path(), 0.005);
    let cache = dir.path().join("cache");
    let out1 = dir.path().join("full1");
    let out = qmrom(
        &[
            "run",
            "--config",
            s(&config),
            "--method",
            "full",
            "--out",
            s(&out1),
            "--cache",
            s(&cache),
        ],
        None,
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let meta = assert_declared_files_exist(&out1);
    assert_eq!(meta.summary["reference_from_cache"], false);
    assert_eq!(meta.config.integrator.t_end, 0.005);
    let probe = read_csv(&out1.join("probe.csv"));
    assert_eq!(probe[0], ["t", "u"]);
    assert_eq!(probe.len(), 52);
    assert!(probe[1..]
        .iter()
        .any(|r| r[1].parse::<f64>().unwrap().abs() > 0.0));

    let out2 = dir.path().join("full2");
    let out = qmrom(
        &[
            "run",
            "--config",
            s(&config),
            "--method",
            "full",
            "--out",
            s(&out2),
            "--cache",
            s(&cache),
        ],
        None,
    );
    assert_eq!(code(&out), 0);
    assert_eq!(
        RunMetadata::read(&out2).unwrap().summary["reference_from_cache"],
        true
    );
    assert_eq!(
        std::fs::read(out1.join("trajectory.csv")).unwrap(),
        std::fs::read(out2.join("trajectory.csv")).unwrap()
    );
}

#[test]
fn reduced_run_with_error_and_probe_override() {
    let dir = tempfile::tempdir().unwrap();
    let config = short_beam(dir.path(), 0.005);
    let out_dir = dir.path().join("qm");
    let args = [
        "run",
        "--config",
        s(&config),
        "--method",
        "QM-SMD",
        "--modes",
        "4",
        "--probe",
        "0.5,0.025,y",
        "--error",
        "--out",
        s(&out_dir),
        "--no-cache",
    ];
    let out = qmrom(&args, None);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let meta = assert_declared_files_exist(&out_dir);
    assert_eq!(meta.config.probe.x, 0.5);
    assert!(meta.files.contains(&"theta.csv".to_string()));
    let header = &read_csv(&out_dir.join("trajectory.csv"))[0];
    assert_eq!(header, &["t", "z_1", "z_2", "z_3", "z_4"]);
    let report = read_csv(&out_dir.join("error_report.csv"));
    assert_eq!(report[0], ["reduced_dofs", "QM-SMD"]);
    assert_eq!(report[1][0], "4");
    let gre: f64 = report[1][1].parse().unwrap();
    assert!(gre > 0.0 && gre < 1.0, "{gre}");

    // identical inputs give identical bytes
    let again = dir.path().join("qm2");
    let mut args2 = args;
    args2[11] = s(&again);
    assert_eq!(code(&qmrom(&args2, None)), 0);
    assert_eq!(
        std::fs::read(out_dir.join("trajectory.csv")).unwrap(),
        std::fs::read(again.join("trajectory.csv")).unwrap()
    );
}

#[test]
fn diverged_runs_exit_with_two_and_keep_their_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = qmrom(
        &[
            "run",
            "--scenario",
            "cantilever_desk",
            "--method",
            "QM-SMD",
            "--modes",
            "10",
            "--out",
            s(dir.path()),
        ],
        None,
    );
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
    let meta = assert_declared_files_exist(dir.path());
    assert_eq!(meta.summary["status"]["status"], "diverged");
    assert!(read_csv(&dir.path().join("probe.csv")).len() > 2);
}

#[test]
fn configuration_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = s(dir.path());
    assert_eq!(
        code(&qmrom(
            &[
                "run",
                "--scenario",
                "beam_cc_desk",
                "--method",
                "QM-XYZ",
                "--out",
                o
            ],
            None
        )),
        1
    );
    assert_eq!(
        code(&qmrom(
            &[
                "run",
                "--scenario",
                "no_such_beam",
                "--method",
                "full",
                "--out",
                o
            ],
            None
        )),
        1
    );
    assert_eq!(
        code(&qmrom(
            &[
                "run",
                "--scenario",
                "beam_cc_desk",
                "--method",
                "full",
                "--probe",
                "1,2",
                "--out",
                o
            ],
            None
        )),
        1
    );
    assert_eq!(code(&qmrom(&["modes"], None)), 1);
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "schema_version = 1\nname = \"x\"\n").unwrap();
    assert_eq!(code(&qmrom(&["modes", "--config", s(&bad)], None)), 1);
    let args = [
        "compare",
        "--scenario",
        "beam_cc_desk",
        "--methods",
        "QM-SMD",
        "--modes",
        "2",
        "--out",
        o,
    ];
    assert_eq!(code(&qmrom(&args, Some("0"))), 1);
    assert_eq!(code(&qmrom(&["--help"], None)), 0);
}

#[test]
fn json_configs_are_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.json");
    std::fs::write(
        &path,
        serde_json::to_string(&builtin("cantilever_desk").unwrap()).unwrap(),
    )
    .unwrap();
    let out = qmrom(&["modes", "--config", s(&path), "-n", "3"], None);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8(out.stdout).unwrap().lines().count() == 4);
}

#[test]
fn scenarios_lists_and_prints_builtins() {
    let out = qmrom(&["scenarios"], None);
    let names = String::from_utf8(out.stdout).unwrap();
    for n in [
        "beam_cc",
        "arch",
        "cantilever",
        "beam_cc_vk",
        "beam_cc_desk",
    ] {
        assert!(names.lines().any(|l| l == n), "{n}");
    }
    let out = qmrom(&["scenarios", "arch"], None);
    let text = String::from_utf8(out.stdout).unwrap();
    let parsed: qmrom_core::scenarios::ScenarioConfig = toml::from_str(&text).unwrap();
    assert_eq!(parsed, builtin("arch").unwrap());
}

#[test]
fn compare_fills_the_error_table_independent_of_threads() {
    let dir = tempfile::tempdir().unwrap();
    let config = short_beam(dir.path(), 0.01);
    let cache = dir.path().join("cache");
    let run = |name: &str, threads: &str| {
        let out_dir = dir.path().join(name);
        let args = [
            "compare",
            "--config",
            s(&config),
            "--methods",
            "LB-SMD,QM-SMD",
            "--modes",
            "3,5",
            "--out",
            s(&out_dir),
            "--cache",
            s(&cache),
        ];
        let out = qmrom(&args, Some(threads));
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        out_dir
    };
    let a = run("one", "1");
    let b = run("three", "3");
    let table = read_csv(&a.join("error_report.csv"));
    assert_eq!(table[0], ["reduced_dofs", "QM-SMD", "LB-SMD"]);
    let cells: Vec<f64> = table[1..]
        .iter()
        .flat_map(|r| r[1..].iter())
        .filter_map(|c| c.parse().ok())
        .collect();
    assert_eq!(cells.len(), 4, "{table:?}");
    assert!(cells.iter().all(|&g| g > 0.0 && g < 1.0), "{cells:?}");
    assert_eq!(
        std::fs::read(a.join("error_report.csv")).unwrap(),
        std::fs::read(b.join("error_report.csv")).unwrap()
    );

    let meta = assert_declared_files_exist(&a);
    assert_eq!(meta.threads, 1);
    assert_eq!(
        RunMetadata::read(&b).unwrap().summary["reference_from_cache"],
        true
    );
    assert!(meta
        .files
        .iter()
        .any(|f| f == "runs/lb-smd_n5/coupling.csv"));
    let spectra = read_csv(&a.join("singular_values.csv"));
    assert_eq!(spectra[0], ["method", "modes", "k", "sigma", "retained"]);
    // 3 modes + 6 derivatives, then 5 modes + 15 derivatives
    assert_eq!(spectra.len(), 1 + 9 + 20);
    assert!(a.join("plot_errors.py").is_file());
}
