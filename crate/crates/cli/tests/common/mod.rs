//! Golden cases shared by the CLI tests and the acceptance suite.

use std::fs;
use std::path::PathBuf;
use std::process::Command;

pub struct Case {
    pub name: &'static str,
    pub args: &'static [&'static str],
    pub exit: i32,
}

macro_rules! case {
    ($name:literal, $exit:literal, [$($arg:literal),* $(,)?]) => {
        Case { name: $name, args: &[$($arg),*], exit: $exit }
    };
}

/// Every subcommand with passing, failing and malformed inputs.
pub const CASES: &[Case] = &[
    case!(
        "fisher_bernoulli",
        0,
        ["fisher", "--model", "bernoulli.json", "--xi", "0.5"]
    ),
    case!(
        "fisher_categorical",
        0,
        [
            "fisher",
            "--model",
            "categorical3.json",
            "--xi",
            "0.3333333333333333,0.3333333333333333"
        ]
    ),
    case!(
        "fisher_malformed",
        2,
        ["fisher", "--model", "malformed.json", "--xi", "0.5"]
    ),
    case!(
        "crb_bernoulli_equality",
        0,
        [
            "crb",
            "--model",
            "bernoulli.json",
            "--xi",
            "0.25",
            "--estimators",
            "estimator_bernoulli.json"
        ]
    ),
    case!(
        "crb_line_strict",
        0,
        [
            "crb",
            "--model",
            "line.json",
            "--xi",
            "0.25",
            "--estimators",
            "estimator_line_strict.json"
        ]
    ),
    case!(
        "crb_line_global",
        0,
        [
            "crb",
            "--model",
            "line.json",
            "--xi",
            "0.25",
            "--estimators",
            "estimator_line_strict.json",
            "--mode",
            "global",
            "--lower",
            "0.1",
            "--upper",
            "0.4"
        ]
    ),
    case!(
        "crb_not_unbiased",
        2,
        [
            "crb",
            "--model",
            "line.json",
            "--xi",
            "0.25",
            "--estimators",
            "estimator_biased.json"
        ]
    ),
    case!(
        "push_coembedding",
        0,
        [
            "push",
            "--channel",
            "surjection112.json",
            "--point",
            "q112.json",
            "--vector",
            "tangent3.json"
        ]
    ),
    case!(
        "push_identity",
        0,
        [
            "push",
            "--channel",
            "identity2.json",
            "--point",
            "half.json",
            "--vector",
            "tangent_half.json"
        ]
    ),
    case!(
        "pull_canonical",
        0,
        [
            "pull",
            "--channel",
            "canonical112.json",
            "--point",
            "half.json",
            "--vector",
            "variable123.json"
        ]
    ),
    case!(
        "pull_identity",
        0,
        [
            "pull",
            "--channel",
            "identity2.json",
            "--point",
            "half.json",
            "--vector",
            "covector_half.json"
        ]
    ),
    case!(
        "pull_size_mismatch",
        2,
        [
            "pull",
            "--channel",
            "identity2.json",
            "--point",
            "half.json",
            "--vector",
            "variable_bad.json"
        ]
    ),
    case!(
        "transport_e",
        0,
        [
            "transport",
            "--vector",
            "tangent_half.json",
            "--to",
            "quarter.json",
            "--connection",
            "e"
        ]
    ),
    case!(
        "transport_m",
        0,
        [
            "transport",
            "--vector",
            "tangent_half.json",
            "--to",
            "quarter.json",
            "--connection",
            "m"
        ]
    ),
    case!(
        "duality_bernoulli",
        0,
        ["duality", "--model", "bernoulli.json", "--xi", "0.3"]
    ),
    case!(
        "duality_categorical",
        0,
        [
            "duality",
            "--model",
            "categorical3.json",
            "--xi",
            "0.3333333333333333,0.3333333333333333",
            "--richardson"
        ]
    ),
    case!(
        "verify_characterize_cov",
        0,
        ["verify", "--config", "characterize_cov.json"]
    ),
    case!(
        "verify_characterize_pk2",
        1,
        ["verify", "--config", "characterize_pk2.json"]
    ),
    case!(
        "verify_strong_invariance",
        0,
        ["verify", "--config", "strong_invariance.json"]
    ),
    case!(
        "verify_monotonicity_seeded",
        0,
        ["--seed", "99", "verify", "--config", "monotonicity.json"]
    ),
    case!(
        "verify_unknown_battery",
        2,
        ["verify", "--config", "unknown_battery.json"]
    ),
    case!(
        "characterize_cov",
        0,
        [
            "--seed",
            "5",
            "characterize",
            "--family",
            "COV",
            "--trials",
            "50"
        ]
    ),
    case!(
        "characterize_mm",
        0,
        ["characterize", "--family", "MM", "--trials", "50"]
    ),
    case!("characterize_pk2", 1, ["characterize", "--family", "PK(2)"]),
    case!(
        "characterize_bad_grammar",
        2,
        ["characterize", "--family", "L2 +"]
    ),
    case!(
        "weak_invariance_e",
        0,
        [
            "weak-invariance",
            "--pair",
            "canonical112.json",
            "--alpha",
            "1"
        ]
    ),
    case!(
        "weak_invariance_mismatch",
        1,
        [
            "weak-invariance",
            "--pair",
            "canonical112.json",
            "--alpha",
            "1",
            "--alpha-large",
            "-1"
        ]
    ),
    case!("usage_unknown_subcommand", 2, ["bogus"]),
];

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn golden(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(format!("{name}.json"))
}

/// Runs the binary from the fixtures directory; returns (stdout, exit code).
pub fn run(args: &[&str]) -> (Vec<u8>, i32) {
    let out = Command::new(env!("CARGO_BIN_EXE_infogeo"))
        .args(args)
        .current_dir(fixtures())
        .output()
        .expect("binary runs");
    (out.stdout, out.status.code().expect("exited normally"))
}

/// Checks one case: exit code, byte-identical reruns, and the golden file.
/// With `UPDATE_GOLDEN` set, rewrites the golden file instead of comparing.
pub fn check(case: &Case) -> Result<(), String> {
    let (first, code) = run(case.args);
    let (second, code2) = run(case.args);
    if code != case.exit || code2 != case.exit {
        return Err(format!(
            "{}: exit {code}/{code2}, expected {}: {}",
            case.name,
            case.exit,
            String::from_utf8_lossy(&first)
        ));
    }
    if first != second {
        return Err(format!("{}: two runs differ", case.name));
    }
    let path = golden(case.name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        fs::write(&path, &first).map_err(|e| e.to_string())?;
        return Ok(());
    }
    let expected = fs::read(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    if expected != first {
        return Err(format!(
            "{}: output differs from {}",
            case.name,
            path.display()
        ));
    }
    Ok(())
}
