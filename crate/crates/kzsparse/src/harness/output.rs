//! CSV and manifest persistence for experiment artifacts.
//!
//! Every output directory gets a `manifest.json` embedding the resolved
//! config, the derived per-trial seeds and the produced file list, so any
//! artifact can be replayed exactly. Numeric CSV fields use the shortest
//! round-trip float formatting; reruns of the same config produce
//! byte-identical curve and grid files (the per-trial long form contains a
//! wall-clock column, which is the only field that varies).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde::Serialize;

use crate::error::{KzError, Result};
use crate::harness::config::{ExperimentConfig, ResolvedSolver};
use crate::harness::{AblationResult, ErrorCurve, PeriodSweepResult, PhaseGrid, TrialRecord};
use crate::seeds::trial_seed;

#[derive(Serialize)]
pub struct ToolInfo {
    pub name: &'static str,
    pub version: &'static str,
    pub git_describe: String,
}

impl ToolInfo {
    pub fn current() -> Self {
        ToolInfo {
            name: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            git_describe: git_describe(),
        }
    }
}

fn git_describe() -> String {
    Command::new("git")
        .args(["describe", "--always", "--dirty"])
        .output()
        .ok()
        .filter(|out| out.status.success())
        .map(|out| String::from_utf8_lossy(&out.stdout).trim().to_string())
        .unwrap_or_else(|| "unknown".to_string())
}

/// Replay record written next to every experiment's CSV files.
#[derive(Serialize)]
pub struct Manifest<'a> {
    pub tool: ToolInfo,
    pub command: String,
    pub config: &'a ExperimentConfig,
    pub details: serde_json::Value,
    pub base_seed: u64,
    pub trial_seeds: Vec<u64>,
    pub files: Vec<String>,
}

impl<'a> Manifest<'a> {
    pub fn new(command: &str, config: &'a ExperimentConfig, details: serde_json::Value) -> Self {
        let trial_seeds = (0..config.trials)
            .map(|t| trial_seed(config.base_seed, t as u64))
            .collect();
        Manifest {
            tool: ToolInfo::current(),
            command: command.to_string(),
            config,
            details,
            base_seed: config.base_seed,
            trial_seeds,
            files: Vec::new(),
        }
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| KzError::Config(format!("manifest serialization: {}", e)))?;
        fs::write(&path, text)?;
        Ok(path)
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(body.as_bytes())?;
    Ok(())
}

pub fn curve_csv(curve: &ErrorCurve) -> String {
    let mut out = String::from("epoch,mean_rel_err,std_rel_err,n_trials,n_diverged\n");
    for p in &curve.points {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            p.epoch, p.mean_rel_err, p.std_rel_err, p.n_trials, p.n_diverged
        ));
    }
    out
}

pub fn trials_csv(trials: &[TrialRecord]) -> String {
    let mut out =
        String::from("trial,seed,m,s,epoch,relative_error,iterate_norm,elapsed_seconds,status\n");
    for t in trials {
        let status = match t.trace.status {
            crate::solvers::SolveStatus::Converged => "converged",
            crate::solvers::SolveStatus::BudgetExhausted => "budget-exhausted",
            crate::solvers::SolveStatus::Diverged => "diverged",
        };
        for (idx, rec) in t.trace.epochs.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                t.trial,
                t.seed,
                t.m,
                t.s,
                idx + 1,
                rec.relative_error,
                rec.iterate_norm,
                rec.elapsed_seconds,
                status
            ));
        }
    }
    out
}

pub fn phase_csv(grid: &PhaseGrid) -> String {
    let mut out = String::from("m,s,success_prob,trials\n");
    for (i, &m) in grid.m_values.iter().enumerate() {
        for (j, &s) in grid.s_values.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                m, s, grid.success_prob[i][j], grid.trials
            ));
        }
    }
    out
}

/// Writes per-sparsity curve and trial CSVs plus the manifest.
pub fn persist_curves(
    dir: &Path,
    label: &str,
    config: &ExperimentConfig,
    resolved: &ResolvedSolver,
    curves: &[ErrorCurve],
    command: &str,
) -> Result<PathBuf> {
    create_dir(dir)?;
    let mut files = Vec::new();
    for curve in curves {
        let name = format!("{}_s{}.csv", label, curve.s);
        write_file(&dir.join(&name), &curve_csv(curve))?;
        files.push(name);
        let name = format!("{}_trials_s{}.csv", label, curve.s);
        write_file(&dir.join(&name), &trials_csv(&curve.trials))?;
        files.push(name);
    }
    let mut manifest = Manifest::new(
        command,
        config,
        serde_json::json!({ "resolved_solver": resolved }),
    );
    manifest.files = files;
    manifest.write(dir)
}

pub fn persist_phase(
    dir: &Path,
    config: &ExperimentConfig,
    grid: &PhaseGrid,
    command: &str,
) -> Result<PathBuf> {
    create_dir(dir)?;
    write_file(&dir.join("phase.csv"), &phase_csv(grid))?;
    let mut manifest = Manifest::new(
        command,
        config,
        serde_json::json!({
            "s_values": grid.s_values,
            "m_values": grid.m_values,
            "success_threshold": grid.success_threshold,
        }),
    );
    manifest.files = vec!["phase.csv".to_string()];
    manifest.write(dir)
}

pub fn persist_ablation(
    dir: &Path,
    config: &ExperimentConfig,
    resolved: &ResolvedSolver,
    result: &AblationResult,
    command: &str,
) -> Result<PathBuf> {
    create_dir(dir)?;
    let mut files = Vec::new();
    for (rule, curves) in [
        ("reshuffle", &result.reshuffle),
        ("replacement", &result.replacement),
    ] {
        for curve in curves.iter() {
            let name = format!("ablate_{}_s{}.csv", rule, curve.s);
            write_file(&dir.join(&name), &curve_csv(curve))?;
            files.push(name);
        }
    }
    let mut manifest = Manifest::new(
        command,
        config,
        serde_json::json!({ "resolved_solver": resolved, "rules": ["reshuffle", "replacement"] }),
    );
    manifest.files = files;
    manifest.write(dir)
}

pub fn persist_sweep(
    dir: &Path,
    config: &ExperimentConfig,
    result: &PeriodSweepResult,
    command: &str,
) -> Result<PathBuf> {
    create_dir(dir)?;
    let mut files = Vec::new();
    let mut summary =
        String::from("p,gamma,s,mean_epochs_to_tol,kziht_rate_bound,kzpt_rate_bound\n");
    for entry in &result.entries {
        for curve in &entry.curves {
            let name = format!("sweep_p{}_s{}.csv", entry.period, curve.s);
            write_file(&dir.join(&name), &curve_csv(curve))?;
            files.push(name);
        }
        for &(s, epochs) in &entry.mean_epochs_to_tolerance {
            summary.push_str(&format!(
                "{},{},{},{},{},{}\n",
                entry.period,
                entry.gamma,
                s,
                epochs,
                entry.kziht_rate_bound,
                entry.kzpt_rate_bound
            ));
        }
    }
    write_file(&dir.join("sweep_summary.csv"), &summary)?;
    files.push("sweep_summary.csv".to_string());
    let mut manifest = Manifest::new(command, config, serde_json::json!({}));
    manifest.files = files;
    manifest.write(dir)
}

/// Single-run trace CSV used by the CLI `solve` command.
pub fn trace_csv(trace: &crate::solvers::IterateTrace) -> String {
    let mut out = String::from("epoch,relative_error,iterate_norm,elapsed_seconds\n");
    for (idx, rec) in trace.epochs.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            idx + 1,
            rec.relative_error,
            rec.iterate_norm,
            rec.elapsed_seconds
        ));
    }
    out
}
