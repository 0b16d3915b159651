use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use rwre::environment::{classify_r_t_analytic, saturating_bound};
use rwre::estimator::{classify_r_t_empirical, ingest};
use rwre::fixtures::{run_example1, run_example2, FixtureReport};
use rwre::reconstruction::{
    reconstruct_environment_law, reconstruct_from_oracle, MomentSource, ReconstructionParams, TableOracle, Verdict,
};
use rwre::resampler::extract_many;
use rwre::walker::simulate_quenched;
use rwre::{JumpSet, Reconstruction};
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::files::{read_text, read_trajectory, write_atomic, write_json};
use crate::report::{classification_json, estimate_report, parse_report};

pub const FIXTURE_STEPS: usize = 1_000_000;

fn announce(path: &Path) {
    println!("wrote {}", path.display());
}

fn provenance(command: &str, cfg: &RunConfig) -> Value {
    json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "seed": cfg.seed,
        "config": serde_json::to_value(cfg).expect("serializable"),
    })
}

pub fn simulate(cfg: &RunConfig) -> Result<(), CliError> {
    let law = Arc::new(cfg.environment_law()?);
    let traj = simulate_quenched(&law, cfg.seed, cfg.steps);
    let path = cfg.out.join("trajectory.txt");
    write_atomic(&path, traj.to_text(&[]).as_bytes())?;
    announce(&path);
    let path = cfg.out.join("provenance.json");
    write_json(&path, &provenance("simulate", cfg))?;
    announce(&path);
    Ok(())
}

fn declared_alphabet(cfg: &RunConfig) -> Result<Option<JumpSet>, CliError> {
    match cfg.jumps {
        None => Ok(None),
        Some(_) => Ok(Some(JumpSet::new(cfg.jumps()?)?)),
    }
}

pub fn estimate(input: &Path, cfg: &RunConfig) -> Result<(), CliError> {
    let (traj, _) = read_trajectory(input)?;
    let declared = declared_alphabet(cfg)?;
    let state = ingest(&traj, declared.as_ref())?;
    let path = cfg.out.join("report.json");
    write_json(&path, &estimate_report(&traj, &state, cfg.min_count))?;
    announce(&path);
    Ok(())
}

pub fn classify(input: &Path, cfg: &RunConfig) -> Result<(), CliError> {
    let (traj, _) = read_trajectory(input)?;
    let value = classification_json(&classify_r_t_empirical(&traj));
    let path = cfg.out.join("classification.json");
    write_json(&path, &value)?;
    announce(&path);
    Ok(())
}

pub fn resample(input: &Path, cfg: &RunConfig) -> Result<(), CliError> {
    let (traj, _) = read_trajectory(input)?;
    let replicas = extract_many(&traj, cfg.replicas, cfg.max_steps.unwrap_or(usize::MAX));
    let mut summary = Vec::with_capacity(replicas.len());
    for (i, r) in replicas.iter().enumerate() {
        let i = i + 1;
        let header = [("replica", i.to_string()), ("truncated", r.truncated().to_string())];
        let path = cfg.out.join(format!("replica-{i}.txt"));
        write_atomic(&path, r.trajectory.to_text(&header).as_bytes())?;
        announce(&path);
        summary.push(json!({
            "replica": i,
            "steps": r.trajectory.len(),
            "truncated": r.truncated(),
            "blocked_at": r.blocked_at.as_ref().map(|n| n.to_string()),
        }));
    }
    let path = cfg.out.join("replicas.json");
    write_json(&path, &json!({ "source_length": traj.len(), "replicas": summary }))?;
    announce(&path);
    Ok(())
}

fn params(cfg: &RunConfig) -> ReconstructionParams<f64> {
    ReconstructionParams {
        max_total: cfg.max_total,
        degree: cfg.degree,
        grid: cfg.grid.clone(),
        min_count: cfg.reconstruct_min_count,
    }
}

/// Input is a trajectory file, an estimator report, or absent (exact moments of the configured law).
pub fn reconstruct(input: Option<&Path>, cfg: &RunConfig) -> Result<(), CliError> {
    let p = params(cfg);
    let (rec, r, t) = match input {
        None => {
            let law = cfg.environment_law()?;
            let support = law.support();
            let split = classify_r_t_analytic(&support, saturating_bound(&support));
            let mut rec = reconstruct_from_oracle(&law, &support, &JumpSet::default(), MomentSource::Analytic, &p)?;
            if split.t.len() >= 2 {
                rec.verdict = Verdict::MomentsOnly;
                rec.cdf = None;
                rec.note = Some("two or more non-returning jumps: the environment law is not identified".into());
            }
            (rec, split.r, split.t)
        }
        Some(path) => {
            let text = read_text(path)?;
            if text.trim_start().starts_with('{') {
                let report = parse_report(&text)?;
                let mut oracle = TableOracle::new(report.alphabet.clone());
                for (n, count, v) in report.histories {
                    if count as usize >= cfg.reconstruct_min_count {
                        oracle.insert(n, v);
                    }
                }
                let rec = reconstruct_from_oracle(&oracle, &report.r, &report.t, MomentSource::Empirical, &p)?;
                (rec, report.r, report.t)
            } else {
                let (traj, _) = read_trajectory(path)?;
                let state = ingest(&traj, declared_alphabet(cfg)?.as_ref())?;
                let split = classify_r_t_empirical(&traj);
                let rec = reconstruct_environment_law(&state, &split, &p)?;
                (rec, split.r, split.t)
            }
        }
    };
    write_reconstruction(&rec, &r, &t, cfg)
}

fn csv_bytes(header: &[String], rows: impl Iterator<Item = Vec<String>>) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| CliError::Validation(e.to_string());
    w.write_record(header).map_err(fail)?;
    for row in rows {
        w.write_record(&row).map_err(fail)?;
    }
    w.into_inner().map_err(|e| CliError::Validation(e.to_string()))
}

fn write_reconstruction(rec: &Reconstruction, r: &JumpSet, t: &JumpSet, cfg: &RunConfig) -> Result<(), CliError> {
    let rows = rec.table.entries.iter().map(|(n, v)| vec![n.to_string(), v.to_string()]);
    let path = cfg.out.join("moments.csv");
    write_atomic(&path, &csv_bytes(&["multi_index".into(), "value".into()], rows)?)?;
    announce(&path);

    if let Some(grid) = &rec.cdf {
        let mut header: Vec<String> = (1..=grid.variables.len()).map(|i| format!("a_{i}")).collect();
        header.push("cdf".into());
        let rows = grid.points.iter().map(|(a, v)| a.iter().chain([v]).map(f64::to_string).collect());
        let path = cfg.out.join("cdf.csv");
        write_atomic(&path, &csv_bytes(&header, rows)?)?;
        announce(&path);
    }

    let names = |s: &JumpSet| s.iter().map(|g| g.to_string()).collect::<Vec<_>>();
    let verdict = json!({
        "verdict": rec.verdict.as_str(),
        "R": names(r),
        "T": names(t),
        "source": match rec.table.source { MomentSource::Analytic => "analytic", MomentSource::Empirical => "empirical" },
        "variables": rec.variables.iter().map(|g| g.to_string()).collect::<Vec<_>>(),
        "requested_degree": cfg.degree,
        "effective_degree": rec.effective_degree,
        "moments": rec.table.entries.len(),
        "truncated": rec.table.is_truncated(),
        "unavailable_histories": rec.table.missing.len(),
        "note": rec.note,
    });
    let path = cfg.out.join("verdict.json");
    write_json(&path, &verdict)?;
    announce(&path);
    Ok(())
}

fn fixture_json(r: &FixtureReport) -> Value {
    let values: serde_json::Map<String, Value> = r.values.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
    json!({
        "fixture": r.name,
        "seed": r.seed,
        "steps": r.steps,
        "passed": r.passed(),
        "checks": r.checks.iter().map(|c| json!({ "check": c.name, "passed": c.passed, "detail": c.detail })).collect::<Vec<_>>(),
        "values": values,
    })
}

pub fn fixture(names: &[String], steps: usize, cfg: &RunConfig) -> Result<(), CliError> {
    let reports: Vec<FixtureReport> = names
        .par_iter()
        .map(|name| match name.as_str() {
            "example1" => run_example1(cfg.seed, steps),
            _ => run_example2(cfg.seed, steps),
        })
        .collect();
    let mut failed = Vec::new();
    for r in &reports {
        println!("{}: {}", r.name, if r.passed() { "PASS" } else { "FAIL" });
        for c in &r.checks {
            println!("  [{}] {}: {}", if c.passed { "ok" } else { "FAIL" }, c.name, c.detail);
        }
        let path = cfg.out.join(format!("fixture-{}.json", r.name));
        write_json(&path, &fixture_json(r))?;
        announce(&path);
        if !r.passed() {
            failed.push(r.name);
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::FixtureFailed(failed.join(", ")))
    }
}
