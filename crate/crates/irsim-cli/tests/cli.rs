//! End-to-end tests of the command-line surface, including the final
//! acceptance criterion: repeated invocations with identical config and seed
//! must produce byte-identical CSV output.

use std::path::Path;
use std::process::{Command, Output};

const SCENARIO: &str = r#"
m = 3
n = 4
k = 2
p_db = -50.0
rho_db = -50.0
bandwidth_hz = 200e3
kappa_bs = 0.015876
kappa_ue = 0.015876
corr_draws = 2000
seed = 1

[phase_noise]
kind = "von_mises"
kappa = 2.0

[geometry]
d_bs_irs_m = 8.0
d_irs_ue_m = 60.0
alpha1 = 2.2
alpha2 = 3.67
c1_db = 26.0
c2_db = 28.0
penetration_db = 15.0
carrier_ghz = 2.5
"#;

const SWEEP: &str = r#"
axis = "snr_db"
values = [0.0, 20.0]
trials = 300
scenario_path = "scenario.toml"

[[curve]]
label = "ideal"
kappa = 0.0

[[curve]]
label = "impaired"
kappa = 0.015876
"#;

struct Workspace {
    dir: tempfile::TempDir,
}

impl Workspace {
    fn new() -> Self {
        let dir = tempfile::tempdir().expect("tempdir");
        std::fs::write(dir.path().join("scenario.toml"), SCENARIO).unwrap();
        std::fs::write(dir.path().join("sweep.toml"), SWEEP).unwrap();
        Self { dir }
    }

    fn path(&self, name: &str) -> String {
        self.dir.path().join(name).to_string_lossy().into_owned()
    }

    fn run(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_irsim"))
            .args(args)
            .env("IRSIM_CACHE_DIR", self.dir.path().join("cache"))
            .current_dir(self.dir.path())
            .output()
            .expect("binary runs")
    }
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

/// Criterion 7: any CLI invocation repeated with identical config + seed
/// produces byte-identical CSV output.
#[test]
fn criterion_7_reproducibility() {
    let ws = Workspace::new();
    let sweep = ws.path("sweep.toml");
    let scenario = ws.path("scenario.toml");

    let mut identical = Vec::new();
    for (label, args) in [
        (
            "sweep",
            vec!["sweep", "--config", sweep.as_str(), "--quiet", "--out"],
        ),
        (
            "validate-mc",
            vec![
                "validate-mc",
                "--config",
                scenario.as_str(),
                "--trials",
                "300",
                "--quiet",
                "--out",
            ],
        ),
        (
            "evaluate",
            vec![
                "evaluate",
                "--config",
                scenario.as_str(),
                "--optimize",
                "--quiet",
                "--out",
            ],
        ),
    ] {
        let (a, b) = (ws.path(&format!("{label}_a.csv")), ws.path(&format!("{label}_b.csv")));
        let mut args_a = args.clone();
        args_a.push(&a);
        let out_a = ws.run(&args_a);
        assert!(out_a.status.success(), "{label} a failed: {}", stderr(&out_a));
        let mut args_b = args;
        args_b.push(&b);
        let out_b = ws.run(&args_b);
        assert!(out_b.status.success(), "{label} b failed: {}", stderr(&out_b));
        let bytes_a = std::fs::read(&a).unwrap();
        let bytes_b = std::fs::read(&b).unwrap();
        assert_eq!(
            bytes_a, bytes_b,
            "criterion 7 FAIL: {label} CSV differs between identical invocations"
        );
        assert_eq!(
            stdout(&out_a),
            stdout(&out_b),
            "criterion 7 FAIL: {label} stdout metrics differ between identical invocations"
        );
        identical.push(format!("{label} ({} bytes)", bytes_a.len()));
    }
    println!(
        "criterion 7 PASS: byte-identical CSV and stdout for {}",
        identical.join(", ")
    );
}

#[test]
fn seed_override_changes_sampled_output() {
    let ws = Workspace::new();
    let scenario = ws.path("scenario.toml");
    let base = ws.run(&["validate-mc", "--config", &scenario, "--trials", "300", "--quiet"]);
    let other = ws.run(&[
        "validate-mc",
        "--config",
        &scenario,
        "--trials",
        "300",
        "--seed",
        "7",
        "--quiet",
    ]);
    assert!(base.status.success() && other.status.success());
    assert_ne!(stdout(&base), stdout(&other));
}

#[test]
fn invalid_scenario_exits_2_and_names_the_invariant() {
    let ws = Workspace::new();
    let bad = ws.path("bad.toml");
    std::fs::write(&bad, SCENARIO.replace("k = 2", "k = 2\ntau = 1")).unwrap();
    let out = ws.run(&["validate", "--config", &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert!(
        stderr(&out).contains("orthogonal pilots"),
        "message should name the violated invariant: {}",
        stderr(&out)
    );
}

#[test]
fn parse_error_exits_2_with_line_anchor() {
    let ws = Workspace::new();
    let bad = ws.path("syntax.toml");
    std::fs::write(&bad, "m = 3\nthis is not toml ===\n").unwrap();
    let out = ws.run(&["validate", "--config", &bad]);
    assert_eq!(out.status.code(), Some(2));
    let msg = stderr(&out);
    assert!(msg.contains("line 2"), "no line anchor in: {msg}");
    assert!(msg.contains("syntax.toml"), "no file name in: {msg}");
}

#[test]
fn failed_sweep_points_exit_3_but_csv_is_written() {
    let ws = Workspace::new();
    let spec = ws.path("bad_sweep.toml");
    std::fs::write(
        &spec,
        SWEEP.replace(
            "axis = \"snr_db\"\nvalues = [0.0, 20.0]\ntrials = 300",
            "axis = \"k_ues\"\nvalues = [2.0, 0.5]",
        ),
    )
    .unwrap();
    let out_csv = ws.path("bad_sweep.csv");
    let out = ws.run(&["sweep", "--config", &spec, "--quiet", "--out", &out_csv]);
    assert_eq!(out.status.code(), Some(3));
    let csv = std::fs::read_to_string(&out_csv).unwrap();
    assert!(csv.lines().count() > 1, "CSV should still contain the good rows");
    assert!(csv.contains("positive integers"), "error column should carry the cause");
}

#[test]
fn optimize_with_uniform_phase_noise_reports_zero_gradient() {
    let ws = Workspace::new();
    let cfg = ws.path("uniform.toml");
    std::fs::write(
        &cfg,
        SCENARIO.replace("kind = \"von_mises\"\nkappa = 2.0", "kind = \"uniform\""),
    )
    .unwrap();
    let out = ws.run(&["optimize", "--config", &cfg]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("status=zero_gradient"), "{}", stdout(&out));
    assert!(
        stderr(&out).contains("zero gradient detected at iteration 1"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn stats_cache_hits_on_second_run_and_keys_on_seed() {
    let ws = Workspace::new();
    let scenario = ws.path("scenario.toml");
    let first = ws.run(&["stats", "--config", &scenario, "--quiet"]);
    let second = ws.run(&["stats", "--config", &scenario, "--quiet"]);
    assert!(stdout(&first).contains("cache=miss"), "{}", stdout(&first));
    assert!(stdout(&second).contains("cache=hit"), "{}", stdout(&second));

    let reseeded = ws.run(&["stats", "--config", &scenario, "--seed", "9", "--quiet"]);
    assert!(stdout(&reseeded).contains("cache=miss"), "{}", stdout(&reseeded));
    let key = |s: &str| {
        s.lines()
            .find(|l| l.starts_with("stats_key="))
            .unwrap()
            .to_string()
    };
    assert_ne!(key(&stdout(&first)), key(&stdout(&reseeded)));

    let cache_dir = ws.dir.path().join("cache");
    assert!(Path::new(&cache_dir).is_dir());
}

#[test]
fn perfect_csi_reports_zero_nmse_and_higher_se() {
    let ws = Workspace::new();
    let scenario = ws.path("scenario.toml");
    let imperfect = ws.run(&["evaluate", "--config", &scenario, "--quiet"]);
    let perfect = ws.run(&["evaluate", "--config", &scenario, "--perfect-csi", "--quiet"]);
    assert!(imperfect.status.success() && perfect.status.success());
    let se = |s: &str| -> f64 {
        s.lines()
            .find(|l| l.starts_with("sum_se="))
            .unwrap()
            .split('=')
            .nth(1)
            .unwrap()
            .parse()
            .unwrap()
    };
    let nmse = |s: &str| -> f64 {
        s.lines()
            .find(|l| l.starts_with("nmse_mean="))
            .unwrap()
            .split('=')
            .nth(1)
            .unwrap()
            .parse()
            .unwrap()
    };
    assert_eq!(nmse(&stdout(&perfect)), 0.0);
    assert!(nmse(&stdout(&imperfect)) > 0.0);
    assert!(se(&stdout(&perfect)) >= se(&stdout(&imperfect)));
}
