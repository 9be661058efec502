//! Golden cases embedded at build time. Each file holds the argument list, the
//! problem file and the expected exit code and JSON.

use clap::Parser;
use serde_json::{json, Value};

use super::{execute, Cli, CliError, Cmd, Output};

macro_rules! golden {
    ($($name:literal),* $(,)?) => {
        pub const GOLDEN: &[(&str, &str)] = &[$(($name, include_str!(concat!("../../golden/", $name, ".json")))),*];
    };
}

golden!(
    "ex2_6_d2_pos",
    "ex2_6_d2_neg",
    "ex3_10_d1",
    "ex3_10_d2",
    "ex3_12_fan",
    "ex4_14_mpcc",
    "ex5_13_first_second_order",
    "ex5_13_asymp",
    "complementarity_graph",
    "ex5_3_strong_witness",
    "ex5_6_witness",
);

/// Runs one golden case; `Err` only when the case file itself is malformed.
pub fn run_case(text: &str) -> Result<(Output, Value, i64), String> {
    let case: Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
    let args: Vec<String> = case["args"].as_array().ok_or("args")?.iter().map(|a| a.as_str().unwrap_or_default().to_string()).collect();
    let cli = Cli::try_parse_from(std::iter::once("vacq".to_string()).chain(args)).map_err(|e| e.to_string())?;
    if matches!(cli.cmd, Cmd::Selftest) {
        return Err("selftest cannot nest".into());
    }
    let out = match execute(&cli.cmd, case["input"].clone()) {
        Ok(o) => o,
        Err(e) => Output { json: json!({"error": e.to_string()}), code: e.code(), csv: None },
    };
    Ok((out, case["expected"]["json"].clone(), case["expected"]["code"].as_i64().unwrap_or(0)))
}

pub fn run_all() -> Result<Output, CliError> {
    let mut cases = vec![];
    let mut failed = 0;
    for (name, text) in GOLDEN {
        let pass = match run_case(text) {
            Ok((out, want, code)) => out.json == want && i64::from(out.code) == code,
            Err(_) => false,
        };
        failed += usize::from(!pass);
        cases.push(json!({"name": name, "pass": pass}));
    }
    let json = json!({"cases": cases, "passed": GOLDEN.len() - failed, "total": GOLDEN.len()});
    Ok(Output { json, code: if failed == 0 { 0 } else { 1 }, csv: None })
}
