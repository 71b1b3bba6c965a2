//! Experiment harness entry point.
//!
//! Usage: `steklov <command> [--config PATH] [--out DIR] [key=value ...]`
//! with commands solve|duality|nodal|keyexample|lemma|weyl|btilde|run.
//! Exit codes: 0 success, 2 usage/config error, 3 solver failure,
//! 4 invariant-check failure (details in failure.json).

use std::process::ExitCode;
use steklov_cli::config::{Experiment, ExperimentConfig};
use steklov_cli::experiments;

const USAGE: &str = "usage: steklov <command> [--config PATH] [--out DIR] [key=value ...]
commands:
  solve        Steklov spectrum at fixed lambda (alias: spectrum)
  duality      Robin curves, root-finding for s_k, duality certificates
  nodal        nodal-count sweep with the Courant-type verdict
  keyexample   diverging-branch ground state: counts, d, oracle cross-check
  lemma        boundary-layer quotient sweep R(u_{k,l})/sigma_k
  weyl         linear fit of the eigenvalue staircase
  btilde       boundary-Laplacian vs squared-spectrum probe
  run          experiment taken from the config file (experiment=...)";

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match execute(&args) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            eprintln!("{USAGE}");
            ExitCode::from(2)
        }
    }
}

fn execute(args: &[String]) -> Result<ExitCode, String> {
    if args.is_empty() {
        return Err("missing command".into());
    }
    let command = args[0].as_str();
    let command_experiment = match command {
        "run" => None,
        other => {
            Some(Experiment::parse(other).ok_or_else(|| format!("unknown command '{other}'"))?)
        }
    };

    let mut config_path: Option<String> = None;
    let mut out_override: Option<String> = None;
    let mut overrides: Vec<(String, String)> = Vec::new();
    let mut i = 1;
    while i < args.len() {
        match args[i].as_str() {
            "--config" => {
                i += 1;
                config_path = Some(
                    args.get(i)
                        .ok_or_else(|| "--config needs a path".to_string())?
                        .clone(),
                );
            }
            "--out" => {
                i += 1;
                out_override = Some(
                    args.get(i)
                        .ok_or_else(|| "--out needs a directory".to_string())?
                        .clone(),
                );
            }
            kv => {
                let (k, v) = kv
                    .split_once('=')
                    .ok_or_else(|| format!("expected key=value, got '{kv}'"))?;
                overrides.push((k.trim().to_string(), v.trim().to_string()));
            }
        }
        i += 1;
    }
    if let Some(out) = out_override {
        overrides.push(("out".into(), out));
    }

    let file_text = match &config_path {
        Some(p) => {
            Some(std::fs::read_to_string(p).map_err(|e| format!("cannot read config {p}: {e}"))?)
        }
        None => None,
    };

    let cfg = ExperimentConfig::build(command_experiment, file_text.as_deref(), &overrides)
        .map_err(|e| e.to_string())?;

    match experiments::run(&cfg) {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            if outcome.ok {
                println!("{}: ok", cfg.experiment.name());
                Ok(ExitCode::SUCCESS)
            } else {
                let mut report = format!(
                    "{{\"experiment\":\"{}\",\"ok\":false,\"failures\":[",
                    cfg.experiment.name()
                );
                for (i, f) in outcome.failures.iter().enumerate() {
                    if i > 0 {
                        report.push(',');
                    }
                    report.push_str(&format!("{:?}", f));
                }
                report.push_str("]}");
                let path = cfg.out.join("failure.json");
                std::fs::write(&path, &report)
                    .map_err(|e| format!("cannot write failure report: {e}"))?;
                for f in &outcome.failures {
                    eprintln!("check failed: {f}");
                }
                eprintln!("{}: FAILED ({})", cfg.experiment.name(), path.display());
                Ok(ExitCode::from(4))
            }
        }
        Err(e) => {
            eprintln!("solver failure: {e}");
            Ok(ExitCode::from(3))
        }
    }
}
