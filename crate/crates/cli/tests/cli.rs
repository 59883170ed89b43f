use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn oamturb(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oamturb"))
        .args(args)
        .current_dir(cwd)
        .env_remove("OAMTURB_OUT")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn only_file(dir: &Path, prefix: &str, ext: &str) -> PathBuf {
    let mut found: Vec<PathBuf> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| {
            let name = p.file_name().unwrap().to_string_lossy().into_owned();
            name.starts_with(prefix) && name.ends_with(ext)
        })
        .collect();
    assert_eq!(found.len(), 1, "{prefix}*{ext} in {}: {found:?}", dir.display());
    found.pop().unwrap()
}

const MINIMAL: &str = r#"
[sweep]
scenarios = ["single-photon"]
q = [1]
strengths = [0.0, 2.0]
ensemble = 30
"#;

#[test]
fn minimal_sweep_writes_two_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "run.toml", MINIMAL);
    let out = oamturb(&["sweep", "--config", cfg.to_str().unwrap(), "--out", "out"], tmp.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let dir = tmp.path().join("out");
    let csv = std::fs::read_to_string(only_file(&dir, "sweep-", ".csv")).unwrap();
    let rows = oamturb::export::parse_sweep_csv(&csv).unwrap();
    assert_eq!(rows.len(), 2);
    assert!((rows[0].concurrence - 1.0).abs() <= 2e-3);
    assert_eq!(rows[0].n, 30);
    assert!(rows[1].concurrence < rows[0].concurrence);

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(only_file(&dir, "manifest-sweep-", ".json")).unwrap()).unwrap();
    assert_eq!(manifest["master_seed"], 1);
    assert!(manifest["wall_time_s"].as_f64().unwrap() >= 0.0);
    assert!(!manifest["version"].as_str().unwrap().is_empty());
    let bundle: oamturb::export::SweepBundle = oamturb::export::read_json(&only_file(&dir, "sweep-", ".json")).unwrap();
    assert_eq!(bundle.results[0].points.len(), 2);
}

#[test]
fn reruns_are_byte_identical_and_the_saved_config_reproduces() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "run.toml", MINIMAL);
    let cfg = cfg.to_str().unwrap();
    for (out, workers) in [("a", "1"), ("b", "3")] {
        let o = oamturb(&["sweep", "--config", cfg, "--out", out, "--workers", workers], tmp.path());
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let a = std::fs::read(only_file(&tmp.path().join("a"), "sweep-", ".csv")).unwrap();
    let b = std::fs::read(only_file(&tmp.path().join("b"), "sweep-", ".csv")).unwrap();
    assert_eq!(a, b);

    let saved = only_file(&tmp.path().join("a"), "config-sweep-", ".toml");
    let o = oamturb(&["sweep", "--config", saved.to_str().unwrap(), "--out", "c"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(std::fs::read(only_file(&tmp.path().join("c"), "sweep-", ".csv")).unwrap(), a);
}

#[test]
fn seed_override_changes_results() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "run.toml", MINIMAL);
    let cfg = cfg.to_str().unwrap();
    assert!(oamturb(&["sweep", "--config", cfg, "--out", "a"], tmp.path()).status.success());
    assert!(oamturb(&["sweep", "--config", cfg, "--out", "b", "--seed", "7"], tmp.path()).status.success());
    let a = std::fs::read_to_string(only_file(&tmp.path().join("a"), "sweep-", ".csv")).unwrap();
    let b = std::fs::read_to_string(only_file(&tmp.path().join("b"), "sweep-", ".csv")).unwrap();
    assert_ne!(a, b);
}

#[test]
fn unresolvable_strength_exits_3_and_names_it() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "run.toml",
        "[sweep]\nscenarios = [\"single-photon\"]\nq = [1]\nstrengths = [0.0, 1.0, 20.0]\nensemble = 30\n",
    );
    let out = oamturb(&["sweep", "--config", cfg.to_str().unwrap(), "--out", "out"], tmp.path());
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert!(stderr(&out).contains("20"), "{}", stderr(&out));
}

#[test]
fn schema_errors_exit_2_with_line_numbers() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        ("unknown.toml", "[sweep]\nq = [1]\n\nwaist = 0.1\n", ":4:"),
        ("wrongtype.toml", "[beam]\nwaist_m = \"wide\"\n", ":2:"),
        ("section.toml", "[nonsense]\nx = 1\n", ":1:"),
        ("semantic.toml", "[sweep]\nq = [1]\nstrengths = [0.5, 1.0]\n", ":3:"),
    ];
    for (name, text, line) in cases {
        let cfg = write_config(tmp.path(), name, text);
        let out = oamturb(&["sweep", "--config", cfg.to_str().unwrap(), "--out", "out"], tmp.path());
        assert_eq!(out.status.code(), Some(2), "{name}: {}", stderr(&out));
        assert!(stderr(&out).contains(&format!("{name}{line}")), "{name}: {}", stderr(&out));
    }
}

fn table_km(text: &str) -> Vec<(u32, f64)> {
    text.lines()
        .skip(2)
        .map(|l| {
            let mut f = l.split_whitespace();
            (f.next().unwrap().parse().unwrap(), f.next().unwrap().parse().unwrap())
        })
        .collect()
}

#[test]
fn decay_table_rows_and_scaling() {
    let tmp = tempfile::tempdir().unwrap();
    let base = oamturb(&["decay-table"], tmp.path());
    assert!(base.status.success());
    let rows = table_km(&stdout(&base));
    let expected = [(1, 6.7, 0.1), (3, 16.7, 0.1), (5, 25.6, 0.1), (7, 33.7, 0.3)];
    assert_eq!(rows.len(), expected.len());
    for ((l, km), (el, ekm, tol)) in rows.iter().zip(expected) {
        assert_eq!(*l, el);
        assert!((km - ekm).abs() <= tol, "l={l}: {km}");
    }

    let single = oamturb(&["decay-table", "--l", "1"], tmp.path());
    assert_eq!(table_km(&stdout(&single)).len(), 1);

    let strong = oamturb(&["decay-table", "--cn2-m-neg2-3", "1e-14"], tmp.path());
    for ((_, a), (_, b)) in rows.iter().zip(table_km(&stdout(&strong))) {
        assert!((a / b - 10.0).abs() < 0.01 * 10.0, "{a} vs {b}");
    }
}

#[test]
fn decay_table_reads_the_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "t.toml", "[decay_table]\ncn2_m_neg2_3 = 1e-15\nl = [3, 5]\n");
    let out = oamturb(&["decay-table", "--config", cfg.to_str().unwrap()], tmp.path());
    let rows = table_km(&stdout(&out));
    assert_eq!(rows.iter().map(|r| r.0).collect::<Vec<_>>(), vec![3, 5]);
}

#[test]
fn calm_medium_gives_zero_screens() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "s.toml",
        "[grid]\nsamples = 128\n\n[screens]\ncount = 8\nsave = 4\ncn2_m_neg2_3 = 0.0\nthickness_m = 100.0\n",
    );
    let out = oamturb(&["screens", "--config", cfg.to_str().unwrap(), "--out", "out"], tmp.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let dir = tmp.path().join("out");
    let csv = std::fs::read_to_string(only_file(&dir, "structure-", ".csv")).unwrap();
    for line in csv.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f[1], "0", "{line}");
    }
    let screens_dir = std::fs::read_dir(&dir).unwrap().map(|e| e.unwrap().path()).find(|p| p.is_dir()).unwrap();
    let files: Vec<_> = std::fs::read_dir(&screens_dir).unwrap().collect();
    assert_eq!(files.len(), 4);
    let first = std::fs::File::open(screens_dir.join("screen-00000.bin")).unwrap();
    let screen: oamturb::Screen = oamturb::turbulence::read_screen(first).unwrap();
    assert!(screen.theta().iter().all(|&v| v == 0.0));
}

#[test]
fn screens_report_kolmogorov_slope_reproducibly() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "s.toml", "[screens]\ncount = 200\nsave = 0\nstrength = 2.0\n");
    let cfg = cfg.to_str().unwrap();
    for out in ["a", "b"] {
        let o = oamturb(&["screens", "--config", cfg, "--out", out], tmp.path());
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let read = |d: &str| std::fs::read_to_string(only_file(&tmp.path().join(d), "structure-", ".json")).unwrap();
    assert_eq!(read("a"), read("b"));
    let report: serde_json::Value = serde_json::from_str(&read("a")).unwrap();
    let slope = report["slope"].as_f64().unwrap();
    assert!((slope - 5.0 / 3.0).abs() <= 0.15, "{slope}");
}

#[test]
fn crosstalk_writes_one_csv_per_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "x.toml",
        "[grid]\nsamples = 128\n\n[crosstalk]\nscenarios = [\"two-photon\"]\nq_max = 2\nstrengths = [0.0, 3.0]\nensemble = 20\n",
    );
    let out = oamturb(&["crosstalk", "--config", cfg.to_str().unwrap(), "--out", "out"], tmp.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let dir = tmp.path().join("out");
    let csvs = std::fs::read_dir(&dir)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "csv"))
        .count();
    assert_eq!(csvs, 2);
    let matrices: Vec<oamturb::experiments::CrosstalkMatrix> =
        oamturb::export::read_json(&only_file(&dir, "crosstalk-", ".json")).unwrap();
    assert!(matrices[0].anti_diagonal_mass() > 0.999);
    assert!(matrices[1].off_anti_diagonal_mass() > matrices[0].off_anti_diagonal_mass());
}

#[test]
fn output_root_falls_back_to_the_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "run.toml", MINIMAL);
    let out = Command::new(env!("CARGO_BIN_EXE_oamturb"))
        .args(["sweep", "--config", cfg.to_str().unwrap()])
        .current_dir(tmp.path())
        .env("OAMTURB_OUT", tmp.path().join("from-env"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    only_file(&tmp.path().join("from-env"), "sweep-", ".csv");
}
