use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const TOY: &str = r#"
name = "toy"

[family]
monotonicity = "nondecreasing"
base = { terms = [
    { coefficient = { kind = "const", value = 1.0 }, shape = { kind = "power", degree = 1 } },
    { coefficient = { kind = "const", value = -1.0 }, shape = { kind = "power", degree = 3 } },
] }
direction = { terms = [
    { coefficient = { kind = "const", value = 1.0 }, shape = { kind = "power", degree = 0 } },
] }

[profile]
kind = "constant"
value = VALUE

[analysis]
command = "classify"
"#;

fn tippinglab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tippinglab"))
        .current_dir(dir)
        .args(args)
        .env_remove("TIPPINGLAB_SPAN")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn only_run_dir(root: &Path) -> std::path::PathBuf {
    let dirs: Vec<_> = fs::read_dir(root)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    assert_eq!(dirs.len(), 1, "{dirs:?}");
    dirs[0].clone()
}

#[test]
fn classify_constant_profile_is_case_a() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("toy.toml"), TOY.replace("VALUE", "0.1")).unwrap();
    let o = tippinglab(tmp.path(), &["classify", "toy.toml", "--out", "out"]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(stdout(&o).starts_with("case A"), "{}", stdout(&o));
    let run = only_run_dir(&tmp.path().join("out"));
    for f in ["config.toml", "label.json", "label.csv", "solutions.csv"] {
        assert!(run.join(f).exists(), "{f}");
    }
    let sol = fs::read_to_string(run.join("solutions.csv")).unwrap();
    assert!(sol.starts_with("t,l_gamma,m_gamma,u_gamma\n"));
    // The snapshot reproduces the run directory name.
    let snap = fs::read_to_string(run.join("config.toml")).unwrap();
    assert_eq!(
        run.file_name().unwrap().to_str().unwrap(),
        tippinglab_cli::run::run_dir_name(&snap)
    );
}

#[test]
fn limit_outside_rf_exits_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("toy.toml"), TOY.replace("VALUE", "1.0")).unwrap();
    let o = tippinglab(tmp.path(), &["classify", "toy.toml", "--out", "out"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_errors_name_the_key_and_exit_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let text = TOY
        .replace("VALUE", "0.1")
        .replace("kind = \"constant\"", "kind = \"constant\"\nvalu = 3.0");
    fs::write(tmp.path().join("bad.toml"), text).unwrap();
    let o = tippinglab(tmp.path(), &["run", "bad.toml"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("valu") && err.contains("line"), "{err}");
}

#[test]
fn flags_override_env_which_overrides_config() {
    let tmp = tempfile::tempdir().unwrap();
    let text = format!(
        "{}\n[settings]\nspan = 260.0\n",
        TOY.replace("VALUE", "0.1")
    );
    fs::write(tmp.path().join("toy.toml"), text).unwrap();
    let snapshot = |out: &str| {
        let run = only_run_dir(&tmp.path().join(out));
        fs::read_to_string(run.join("config.toml")).unwrap()
    };
    let o = tippinglab(tmp.path(), &["classify", "toy.toml", "--out", "a"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(snapshot("a").contains("span = 260.0"));

    let o = Command::new(env!("CARGO_BIN_EXE_tippinglab"))
        .current_dir(tmp.path())
        .args(["classify", "toy.toml", "--out", "b"])
        .env("TIPPINGLAB_SPAN", "270")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(snapshot("b").contains("span = 270.0"));

    let o = Command::new(env!("CARGO_BIN_EXE_tippinglab"))
        .current_dir(tmp.path())
        .args(["classify", "toy.toml", "--out", "c", "--span", "280"])
        .env("TIPPINGLAB_SPAN", "270")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(snapshot("c").contains("span = 280.0"));
}

#[test]
fn scenario_invasion_at_rate_one_tracks() {
    let tmp = tempfile::tempdir().unwrap();
    let o = tippinglab(
        tmp.path(),
        &["scenario", "invasion", "--rate", "1.0", "--out", "out"],
    );
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("case A"), "{}", stdout(&o));
}

#[test]
fn print_config_emits_a_parsable_scenario() {
    let tmp = tempfile::tempdir().unwrap();
    for name in tippinglab_cli::SCENARIOS {
        let o = tippinglab(tmp.path(), &["scenario", name, "--print-config"]);
        assert_eq!(o.status.code(), Some(0));
        tippinglab_cli::ScenarioConfig::parse(&stdout(&o)).unwrap();
    }
}

#[test]
fn sweep_and_allee_write_their_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let sweep = TOY
        .replace(
            "kind = \"constant\"\nvalue = VALUE",
            "kind = \"gaussian-impulse\"\nbase = 0.0\npeak = 2.0\nwidth = 1.0",
        )
        .replace(
            "command = \"classify\"",
            "command = \"sweep\"\nparameter = \"rate\"\nlo = 0.3\nhi = 3.0\npoints = 3",
        );
    fs::write(tmp.path().join("sweep.toml"), sweep).unwrap();
    let o = tippinglab(
        tmp.path(),
        &["sweep", "sweep.toml", "--out", "s", "--workers", "2"],
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let run = only_run_dir(&tmp.path().join("s"));
    let csv = fs::read_to_string(run.join("sweep.csv")).unwrap();
    assert_eq!(
        csv.lines().next(),
        Some("parameter,case,gap,residual_u,residual_l")
    );
    assert_eq!(csv.lines().count(), 4);

    let allee = tippinglab_cli::bundled("holling3-weak")
        .unwrap()
        .replace("command = \"collapse\"", "command = \"allee\"")
        .lines()
        .filter(|l| !l.starts_with("d = ") && !l.starts_with("bisect"))
        .collect::<Vec<_>>()
        .join("\n");
    fs::write(tmp.path().join("allee.toml"), allee).unwrap();
    let o = tippinglab(
        tmp.path(),
        &["allee", "allee.toml", "--out", "a", "--horizon", "600"],
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(stdout(&o).contains("weak"));
    let run = only_run_dir(&tmp.path().join("a"));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(run.join("allee.json")).unwrap()).unwrap();
    assert_eq!(json["allee_type"], "weak");
}
