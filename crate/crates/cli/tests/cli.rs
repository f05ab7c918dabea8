//! End-to-end tests over the installed binary: every subcommand, the
//! documented exit codes, artifact determinism and the closed-form values
//! the simulated protocols must reproduce.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rbsim_cli::io::{parse_records, records_text};
use rbsim_cli::report::formulas;
use rbsim_core::clifford::{CliffordElement, GateSetGroup, GroupKind};
use toml::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rbsim"))
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary must spawn")
}

fn assert_code(output: &Output, expected: i32, context: &str) {
    let code = output.status.code().expect("no exit code");
    assert_eq!(
        code,
        expected,
        "{context}: expected exit {expected}, got {code}\nstdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

fn stderr_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn simulate_ok(config: &Path, out: &Path) {
    let output = run(bin().args(["simulate", "--config"]).arg(config).arg("--out").arg(out));
    assert_code(&output, 0, "simulate");
}

fn parse_toml(path: &Path) -> toml::Table {
    let text = fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    text.parse::<toml::Table>()
        .unwrap_or_else(|e| panic!("{} is not valid TOML: {e}", path.display()))
}

fn f64_field(value: &Value, context: &str) -> f64 {
    value
        .as_float()
        .unwrap_or_else(|| panic!("{context} is not a float: {value:?}"))
}

/// Collects the value of every key starting with `formula`, recursively.
fn formula_values(value: &Value, found: &mut Vec<String>) {
    match value {
        Value::Table(table) => {
            for (key, inner) in table {
                if key.starts_with("formula") {
                    found.push(inner.as_str().expect("formula values are strings").into());
                }
                formula_values(inner, found);
            }
        }
        Value::Array(items) => {
            for item in items {
                formula_values(item, found);
            }
        }
        _ => {}
    }
}

fn assert_formulas_registered(report: &toml::Table, context: &str) {
    let mut found = Vec::new();
    formula_values(&Value::Table(report.clone()), &mut found);
    assert!(!found.is_empty(), "{context}: no formula annotations found");
    for formula in found {
        assert!(
            formulas::REGISTRY.contains(&formula.as_str()),
            "{context}: unregistered formula {formula:?}"
        );
    }
}

const SAMPLED_CONFIG: &str = "\
protocol = \"standard\"
group = \"c1\"
lengths = [1, 3, 5, 8]
sequences_per_length = 25
shots = 50
seed = 77

[noise.depolarizing]
n = 1
p = 0.95

[spam.prep.pauli-channel]
n = 1
probs = [[\"I\", 0.97], [\"X\", 0.03]]
";

const AVERAGED_CONFIG: &str = "\
protocol = \"standard\"
group = \"c1\"
lengths = [1, 2, 4, 8, 16, 32]
sequences_per_length = 1
shots = 0
seed = 11
sequence_mode = \"averaged\"

[noise.depolarizing]
n = 1
p = 0.98
";

#[test]
fn sampled_run_is_deterministic_and_one_row_per_length() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "run.toml", SAMPLED_CONFIG);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    fs::create_dir_all(&a).unwrap();
    fs::create_dir_all(&b).unwrap();
    simulate_ok(&config, &a);
    simulate_ok(&config, &b);

    let decay_a = fs::read(a.join("decay.csv")).unwrap();
    let decay_b = fs::read(b.join("decay.csv")).unwrap();
    assert_eq!(decay_a, decay_b, "same seed must give identical bytes");
    assert_eq!(
        fs::read(a.join("manifest.toml")).unwrap(),
        fs::read(b.join("manifest.toml")).unwrap()
    );

    let text = String::from_utf8(decay_a).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1 + 4, "header plus one row per length");
    assert_eq!(lines[0], "observable,m,mean,variance,count");
    for line in &lines[1..] {
        assert!(line.starts_with("survival,"), "unexpected row {line:?}");
        assert!(line.ends_with(",25"), "sequence count missing in {line:?}");
    }

    let manifest = parse_toml(&a.join("manifest.toml"));
    assert_eq!(manifest["protocol"].as_str(), Some("standard"));
    assert_eq!(manifest["group"].as_str(), Some("c1"));
    assert_eq!(manifest["seed"].as_integer(), Some(77));
    let digest = manifest["config_sha256"].as_str().unwrap();
    assert_eq!(digest.len(), 64);
    assert!(digest.chars().all(|c| c.is_ascii_hexdigit()));
    let artifacts: Vec<&str> = manifest["artifacts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    assert_eq!(artifacts, ["decay.csv"]);
    assert_eq!(manifest["tool"]["name"].as_str(), Some("rbsim"));
}

#[test]
fn unknown_config_key_is_a_schema_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "bad.toml",
        &format!("typo_key = 1\n{AVERAGED_CONFIG}"),
    );
    let output = run(bin().args(["simulate", "--config"]).arg(&config));
    assert_code(&output, 2, "unknown key");
    assert!(
        stderr_of(&output).contains("typo_key"),
        "diagnostic should name the offending key: {}",
        stderr_of(&output)
    );
}

#[test]
fn protocol_group_pairing_is_enforced() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "mismatch.toml",
        &AVERAGED_CONFIG.replace("group = \"c1\"", "group = \"c1xc1\""),
    );
    let output = run(bin().args(["simulate", "--config"]).arg(&config));
    assert_code(&output, 2, "group mismatch");
    assert!(stderr_of(&output).contains("group"));
}

#[test]
fn output_names_are_overridable_and_listed_in_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "named.toml",
        &format!("{AVERAGED_CONFIG}\n[output]\ndecay = \"survival.csv\"\nmanifest = \"run-manifest.toml\"\n"),
    );
    simulate_ok(&config, dir.path());
    assert!(dir.path().join("survival.csv").exists());
    let manifest = parse_toml(&dir.path().join("run-manifest.toml"));
    let artifacts: Vec<&str> = manifest["artifacts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    assert_eq!(artifacts, ["survival.csv"]);
}

const INTERLEAVED_CONFIG: &str = "\
protocol = \"interleaved\"
group = \"c1\"
lengths = [1, 2, 3, 4, 6, 8]
sequences_per_length = 1
seed = 4
sequence_mode = \"averaged\"
target = 5

[noise.depolarizing]
n = 1
p = 0.99

[target_noise.depolarizing]
n = 1
p = 0.97
";

#[test]
fn interleaved_run_reports_the_closed_form_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "interleaved.toml", INTERLEAVED_CONFIG);
    simulate_ok(&config, dir.path());
    assert!(dir.path().join("decay.csv").exists());
    assert!(dir.path().join("interleaved.csv").exists());

    let report = parse_toml(&dir.path().join("report.toml"));
    assert_formulas_registered(&report, "interleaved report");

    let fits = report["fits"].as_array().unwrap();
    let labels: Vec<&str> = fits
        .iter()
        .map(|f| f["observable"].as_str().unwrap())
        .collect();
    assert_eq!(labels, ["reference", "interleaved"]);
    for fit in fits {
        assert_eq!(fit["converged"].as_bool(), Some(true));
        assert_eq!(fit["rank_deficient"].as_bool(), Some(false));
    }

    // Depolarizing reference p = 0.99 composed with a 0.97 target gives
    // the textbook estimate r_est = (1 - 0.97) / 2 = 0.015.
    let block = &report["interleaved"];
    let p = f64_field(&block["p"], "interleaved.p");
    let p_interleaved = f64_field(&block["p_interleaved"], "interleaved.p_interleaved");
    let r_est = f64_field(&block["r_est"], "interleaved.r_est");
    let bound = f64_field(&block["bound"], "interleaved.bound");
    let simple = f64_field(&block["bound_simple"], "interleaved.bound_simple");
    let refined = f64_field(&block["bound_refined"], "interleaved.bound_refined");
    assert!((p - 0.99).abs() < 1e-9, "p = {p}");
    assert!((p_interleaved - 0.9603).abs() < 1e-9, "pC = {p_interleaved}");
    assert!((r_est - 0.015).abs() < 1e-9, "r_est = {r_est}");
    assert_eq!(bound, simple.min(refined));

    // The reference decay alone fixes the reference fidelity block.
    let fidelity = &report["fidelity"];
    let avg = f64_field(&fidelity["avg_fidelity"], "fidelity.avg_fidelity");
    assert!((avg - 0.995).abs() < 1e-9, "reference Fbar = {avg}");

    // Echoed rows keep the two stages distinguishable.
    let stages: Vec<&str> = report["decay"]
        .as_array()
        .unwrap()
        .iter()
        .map(|row| row["observable"].as_str().unwrap())
        .collect();
    assert!(stages.contains(&"reference:survival"));
    assert!(stages.contains(&"interleaved:survival"));
}

const CORRELATED_CONFIG: &str = "\
protocol = \"correlated\"
group = \"c1xc1\"
lengths = [1, 2, 3, 4, 6, 8]
sequences_per_length = 1
seed = 3
sequence_mode = \"averaged\"

[noise.toy-crosstalk]
eps1 = true
eps2 = true
p01 = 0.40
p11 = 0.03
p21 = 0.02
p02 = 0.38
p12 = 0.05
p22 = 0.04
p_corr = 0.08
";

#[test]
fn correlated_run_recovers_the_crosstalk_weights() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "correlated.toml", CORRELATED_CONFIG);
    simulate_ok(&config, dir.path());

    let report = parse_toml(&dir.path().join("report.toml"));
    assert_formulas_registered(&report, "correlated report");
    let block = &report["correlated"];

    // Closed-form subspace weights for this error table: the two local
    // weights are 1 - 2(p12 + p21) adjusted for the correlated kick, and
    // the joint weight mixes all three rates.
    let alphas = block["alphas"].as_array().unwrap();
    let expected = [("W1", 0.8), ("W2", 0.8), ("W3", 0.7422222222222222)];
    assert_eq!(alphas.len(), expected.len());
    for (entry, (label, value)) in alphas.iter().zip(expected) {
        assert_eq!(entry["label"].as_str(), Some(label));
        let got = f64_field(&entry["value"], label);
        assert!((got - value).abs() < 1e-8, "{label}: {got} vs {value}");
    }

    let delta = f64_field(&block["delta_alpha"], "delta_alpha");
    let a1 = f64_field(&alphas[0]["value"], "W1");
    let a2 = f64_field(&alphas[1]["value"], "W2");
    let a3 = f64_field(&alphas[2]["value"], "W3");
    assert!((delta - (a3 - a1 * a2)).abs() < 1e-12);
    assert!((delta - 0.10222222222222223).abs() < 1e-8, "delta = {delta}");

    let epsilons = block["epsilons"].as_array().unwrap();
    assert_eq!(epsilons.len(), 3);
    assert!(block["root_ambiguous"].as_bool().is_some());

    // One decay series per recorded observable.
    let decay = fs::read_to_string(dir.path().join("decay.csv")).unwrap();
    assert_eq!(decay.lines().count(), 1 + 4 * 6, "4 observables, 6 lengths");
}

const SHADOW_CONFIG: &str = "\
protocol = \"shadow\"
group = \"c1\"
lengths = [1, 2, 3]
sequences_per_length = 5
shots = 1
seed = 23

[noise.depolarizing]
n = 1
p = 0.96
";

#[test]
fn shadow_records_are_inversion_free_and_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "shadow.toml", SHADOW_CONFIG);
    simulate_ok(&config, dir.path());

    let path = dir.path().join("records.tsv");
    let text = fs::read_to_string(&path).unwrap();
    let records = parse_records(&text).expect("emitted records must parse");
    assert_eq!(records.len(), 3 * 5, "one record per sequence");
    for record in &records {
        assert_eq!(
            record.gate_ids.len(),
            record.m,
            "no inversion gate is appended"
        );
        assert_eq!(record.outcome.len(), 1);
    }
    assert_eq!(records_text(&records), text, "serialization round trip");

    let manifest = parse_toml(&dir.path().join("manifest.toml"));
    let artifacts: Vec<&str> = manifest["artifacts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    assert_eq!(artifacts, ["records.tsv"]);
}

#[test]
fn fit_command_recovers_the_decay_rate_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "std.toml", AVERAGED_CONFIG);
    simulate_ok(&config, dir.path());

    let data = dir.path().join("decay.csv");
    let (r1, r2) = (dir.path().join("r1.toml"), dir.path().join("r2.toml"));
    let svg_path = dir.path().join("plot.svg");
    let output = run(bin()
        .args(["fit", "--data"])
        .arg(&data)
        .arg("--report")
        .arg(&r1)
        .arg("--svg")
        .arg(&svg_path));
    assert_code(&output, 0, "fit");
    let second = run(bin().args(["fit", "--data"]).arg(&data).arg("--report").arg(&r2));
    assert_code(&second, 0, "fit rerun");
    assert_eq!(
        fs::read(&r1).unwrap(),
        fs::read(&r2).unwrap(),
        "fit report must be reproducible byte for byte"
    );
    assert_eq!(
        fs::read(&r1).unwrap(),
        output.stdout,
        "the written report is exactly what was printed"
    );

    let report = parse_toml(&r1);
    assert_formulas_registered(&report, "fit report");
    let fidelity = &report["fidelity"];
    let p = f64_field(&fidelity["p"], "fidelity.p");
    let rate = f64_field(&fidelity["error_rate"], "fidelity.error_rate");
    assert!((p - 0.98).abs() < 1e-6, "p = {p}");
    assert!((rate - 0.01).abs() < 1e-6, "r = {rate}");
    assert!(report["source"].get("seed").is_none(), "CSV carries no seed");

    let svg = fs::read_to_string(&svg_path).unwrap();
    assert!(svg.starts_with("<svg"));
    assert_eq!(svg.matches("<circle").count(), 6, "one marker per length");
}

#[test]
fn fit_rescale_divides_the_error_rate_by_the_rotation_count() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "std.toml", AVERAGED_CONFIG);
    simulate_ok(&config, dir.path());

    let report_path = dir.path().join("rescaled.toml");
    let output = run(bin()
        .args(["fit", "--data"])
        .arg(dir.path().join("decay.csv"))
        .arg("--rescale-sq")
        .arg("--report")
        .arg(&report_path));
    assert_code(&output, 0, "fit --rescale-sq");

    let fidelity = &parse_toml(&report_path)["fidelity"];
    let rate = f64_field(&fidelity["error_rate"], "error_rate");
    let physical = f64_field(&fidelity["physical_fidelity"], "physical_fidelity");
    assert!(
        ((1.0 - physical) - rate / 1.875).abs() < 1e-12,
        "physical infidelity {} vs r / 1.875 = {}",
        1.0 - physical,
        rate / 1.875
    );
}

#[test]
fn fit_failure_modes_use_the_documented_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let flat = dir.path().join("flat.csv");
    let mut text = String::from("observable,m,mean,variance,count\n");
    for m in [1, 2, 4, 8] {
        text.push_str(&format!("survival,{m},0.5,0.0,30\n"));
    }
    fs::write(&flat, &text).unwrap();

    // A constant series has no identifiable decay rate.
    let output = run(bin().args(["fit", "--data"]).arg(&flat));
    assert_code(&output, 4, "flat data");
    assert!(
        stderr_of(&output).contains("identifiable"),
        "diagnostic: {}",
        stderr_of(&output)
    );

    let broken = dir.path().join("broken.csv");
    fs::write(&broken, "not,a,decay\n1,2,3\n").unwrap();
    assert_code(&run(bin().args(["fit", "--data"]).arg(&broken)), 2, "bad CSV");

    assert_code(
        &run(bin().args(["fit", "--model", "biexp", "--data"]).arg(&flat)),
        2,
        "unknown model",
    );

    let missing = run(bin().args(["fit", "--observable", "up0", "--data"]).arg(&flat));
    assert_code(&missing, 2, "absent observable");
    assert!(stderr_of(&missing).contains("survival"), "should list what exists");

    assert_code(
        &run(bin().args(["fit", "--qubits", "2", "--rescale-sq", "--data"]).arg(&flat)),
        2,
        "rescale outside one qubit",
    );
}

#[test]
fn shadow_estimate_reproduces_a_single_identity_record() {
    let group = GateSetGroup::generate(GroupKind::C1).unwrap();
    let id = group
        .id_of(&CliffordElement::identity(1))
        .expect("identity is in the group");

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("one.tsv");
    fs::write(&path, format!("1\t{id}\t0\n")).unwrap();

    let report_path = dir.path().join("report.toml");
    let output = run(bin()
        .args(["shadow-estimate", "--records"])
        .arg(&path)
        .args(["--probe", "identity", "--N", "1", "--K", "1", "--report"])
        .arg(&report_path));
    assert_code(&output, 0, "single record");

    let report = parse_toml(&report_path);
    let estimates = report["estimates"].as_array().unwrap();
    assert_eq!(estimates.len(), 1);
    assert_eq!(estimates[0]["m"].as_integer(), Some(1));
    let k = f64_field(&estimates[0]["k_hat"], "k_hat");
    assert!(
        (k - 1.0).abs() < 1e-12,
        "identity gate, identity probe, outcome 0 gives k = 1, got {k}"
    );

    // Asking for more records per batch than exist is a usage error.
    let starved = run(bin()
        .args(["shadow-estimate", "--records"])
        .arg(&path)
        .args(["--probe", "identity", "--N", "2", "--K", "1"]));
    assert_code(&starved, 2, "insufficient records");
    assert!(stderr_of(&starved).contains("fewer"));
}

#[test]
fn shadow_estimate_matches_theory_and_recovers_the_rate() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "shadow.toml",
        &SHADOW_CONFIG
            .replace("lengths = [1, 2, 3]", "lengths = [2, 3, 4, 6]")
            .replace("sequences_per_length = 5", "sequences_per_length = 400"),
    );
    simulate_ok(&config, dir.path());

    let report_path = dir.path().join("estimate.toml");
    let output = run(bin()
        .args(["shadow-estimate", "--records"])
        .arg(dir.path().join("records.tsv"))
        .args(["--probe", "W1", "--alpha", "3", "--N", "40", "--K", "10", "--config"])
        .arg(&config)
        .arg("--report")
        .arg(&report_path));
    assert_code(&output, 0, "estimate with theory column");

    let report = parse_toml(&report_path);
    assert_eq!(report["probe"].as_str(), Some("W1"));

    // Depolarizing at p keeps every nontrivial subspace weight at p, so
    // the correlation theory is (alpha / d) p^m = 0.5 * 0.96^m.
    for entry in report["estimates"].as_array().unwrap() {
        let m = entry["m"].as_integer().unwrap() as i32;
        let theory = f64_field(&entry["theory"], "theory");
        let expected = 0.5 * 0.96f64.powi(m);
        assert!(
            (theory - expected).abs() < 1e-9,
            "m = {m}: theory {theory} vs {expected}"
        );
        let k = f64_field(&entry["k_hat"], "k_hat");
        assert!(
            (k - expected).abs() < 0.25,
            "m = {m}: estimate {k} far from {expected}"
        );
    }

    let fit = &report["fit"];
    let q = fit["params"]
        .as_array()
        .unwrap()
        .iter()
        .find(|p| p["name"].as_str() == Some("q"))
        .map(|p| f64_field(&p["value"], "q"))
        .expect("power fit exposes the decay rate q");
    assert!((q - 0.96).abs() < 0.06, "fitted rate {q}");
}

#[test]
fn shadow_estimate_identity_probe_is_flat_for_ideal_noise() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "ideal.toml",
        &SHADOW_CONFIG
            .replace("sequences_per_length = 5", "sequences_per_length = 30")
            .replace(
                "[noise.depolarizing]\nn = 1\np = 0.96\n",
                "[noise.ideal]\nn = 1\n",
            ),
    );
    simulate_ok(&config, dir.path());

    let report_path = dir.path().join("flat.toml");
    let output = run(bin()
        .args(["shadow-estimate", "--records"])
        .arg(dir.path().join("records.tsv"))
        .args(["--probe", "identity", "--N", "30", "--K", "1", "--config"])
        .arg(&config)
        .arg("--report")
        .arg(&report_path));
    assert_code(&output, 0, "ideal-noise estimate");

    // With no noise nothing decays: the theory column is the constant
    // two-outcome purity average 2/3 at every length.
    let report = parse_toml(&report_path);
    let estimates = report["estimates"].as_array().unwrap();
    assert_eq!(estimates.len(), 3);
    for entry in estimates {
        let theory = f64_field(&entry["theory"], "theory");
        assert!((theory - 2.0 / 3.0).abs() < 1e-9, "theory {theory}");
        let k = f64_field(&entry["k_hat"], "k_hat");
        assert!((k - 2.0 / 3.0).abs() < 0.25, "flat estimate {k}");
    }
}

#[test]
fn selftest_reports_every_check_as_passing() {
    let output = run(bin().arg("selftest"));
    assert_code(&output, 0, "selftest");
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert_eq!(stdout.matches("PASS").count(), 5, "five checks:\n{stdout}");
    assert!(!stdout.contains("FAIL"), "no failures expected:\n{stdout}");
}
