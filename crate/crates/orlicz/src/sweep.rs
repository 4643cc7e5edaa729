//! Parameter sweeps over scenarios, mesh sizes, radii and largest λ.
//!
//! The table is rewritten atomically after every solve, so an interrupted
//! sweep resumes from the rows already on disk when the configuration hash
//! still matches. Timings go to a sidecar file to keep the table itself
//! reproducible byte for byte.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{load_scenario, Overrides, ScenarioConfig, SweepConfig};
use crate::io::{comment_lines, sci, write_atomic};
use crate::solve::{solve_scenario, stop_reason};
use crate::verify::verify_field;
use crate::{output_path, Outcome, RunError, Status};

pub const COLUMNS: [&str; 12] = [
    "scenario",
    "h",
    "r",
    "lambda_max",
    "converged",
    "energy",
    "sup_error",
    "harnack_quotient",
    "bloch_integral",
    "caccioppoli_margin",
    "monotone_step",
    "error",
];

type Row = Vec<String>;

fn opt(v: Option<f64>) -> String {
    v.map(sci).unwrap_or_default()
}

fn resolve(base: &Path, name: &str) -> Result<ScenarioConfig, RunError> {
    let candidate = base.join(name);
    if candidate.exists() {
        load_scenario(candidate.to_str().ok_or_else(|| RunError::Config(format!("non UTF-8 path {candidate:?}")))?)
    } else {
        load_scenario(name)
    }
}

#[derive(Serialize)]
struct HashInput<'a> {
    sweep: &'a SweepConfig,
    scenarios: Vec<String>,
}

struct Group {
    cfg: ScenarioConfig,
    label: String,
    h: f64,
    lambda_max: Option<f64>,
}

impl Group {
    fn key(&self) -> (String, String, String) {
        (self.label.clone(), sci(self.h), opt(self.lambda_max))
    }
}

// one solve, then one row per radius
fn run_group(g: &Group) -> (Vec<Row>, f64, bool) {
    let prefix = |r: f64| vec![g.label.clone(), sci(g.h), sci(r), opt(g.lambda_max)];
    let failed = |msg: String| -> Vec<Row> {
        g.cfg
            .verify
            .radii
            .iter()
            .map(|r| {
                let mut row = prefix(*r);
                row.extend(["false".into(), String::new(), String::new(), String::new(), String::new()]);
                row.extend([String::new(), String::new(), msg.clone()]);
                row
            })
            .collect()
    };
    let solved = match solve_scenario(&g.cfg, false) {
        Ok(Ok(s)) => s,
        Ok(Err(check)) => return (failed(format!("check failed: {}", check.failures.join("; "))), 0.0, false),
        Err(e) => return (failed(e.to_string()), 0.0, false),
    };
    let secs = solved.report.wall_time_secs.unwrap_or(0.0);
    let converged = solved.report.converged();
    let verified = match verify_field(&g.cfg, &solved.problem.domain, &solved.field, solved.lambda) {
        Ok(v) => v,
        Err(e) => return (failed(e.to_string()), secs, converged),
    };
    let residual_failures: Vec<String> =
        verified.failures.iter().filter(|f| f.starts_with("residual")).cloned().collect();
    let rows = verified
        .entries
        .iter()
        .map(|e| {
            let mut row = prefix(e.r);
            let mut errors = e.failures.clone();
            errors.extend(residual_failures.iter().cloned());
            if !converged {
                errors.push(stop_reason(&solved.report));
            }
            row.extend([
                converged.to_string(),
                sci(solved.report.energy),
                opt(solved.sup_error),
                opt(e.report.harnack_quotient),
                opt(e.report.bloch_integral),
                opt(e.caccioppoli_margin()),
                e.report
                    .oscillation
                    .map(|o| o.monotone_step_holds().to_string())
                    .unwrap_or_default(),
                errors.join("; "),
            ]);
            row
        })
        .collect();
    (rows, secs, converged)
}

fn table(hash: &str, rows: &[Row]) -> Result<Vec<u8>, RunError> {
    let mut out = format!("# config-sha256={hash}\n").into_bytes();
    let mut w = csv::Writer::from_writer(&mut out);
    w.write_record(COLUMNS)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush().map_err(|e| RunError::Config(e.to_string()))?;
    drop(w);
    Ok(out)
}

// rows of a previous run with the same hash, grouped by solve
fn previous_rows(path: &Path, hash: &str) -> BTreeMap<(String, String, String), Vec<Row>> {
    let mut groups = BTreeMap::new();
    let Ok(text) = std::fs::read_to_string(path) else {
        return groups;
    };
    if !comment_lines(&text)
        .iter()
        .any(|(k, v)| k == "config-sha256" && v == hash)
    {
        log::info!("{} belongs to another configuration, starting over", path.display());
        return groups;
    }
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    for rec in r.records().flatten() {
        let row: Row = rec.iter().map(String::from).collect();
        if row.len() == COLUMNS.len() {
            groups
                .entry((row[0].clone(), row[1].clone(), row[3].clone()))
                .or_insert_with(Vec::new)
                .push(row);
        }
    }
    groups
}

/// Runs the sweep, writing `<name>.sweep.csv` and `<name>.sweep.timing.csv`.
/// Scenario files are looked up relative to `base`. Exit code 3 when any
/// solve did not converge; per-row failures are recorded in the table.
pub fn run_sweep(sweep: &SweepConfig, base: &Path, overrides: &Overrides) -> Result<Outcome, RunError> {
    let mut sweep = sweep.clone();
    if let Some(h) = overrides.h {
        sweep.h = vec![h];
    }
    if let Some(r) = &overrides.r {
        sweep.r = r.clone();
    }
    if let Some(l) = overrides.lambda_max {
        sweep.lambda_max = vec![l];
    }
    if let Some(d) = &overrides.out_dir {
        sweep.out_dir = d.clone();
    }
    if sweep.scenarios.is_empty() {
        return Err(RunError::Config("the sweep lists no scenarios".into()));
    }

    let mut groups = Vec::new();
    let mut scenario_hashes = Vec::new();
    for label in &sweep.scenarios {
        let base_cfg = resolve(base, label)?;
        scenario_hashes.push(base_cfg.hash());
        let hs = if sweep.h.is_empty() { vec![base_cfg.mesh.h] } else { sweep.h.clone() };
        let lambdas: Vec<Option<f64>> = if base_cfg.schedule.is_none() || sweep.lambda_max.is_empty() {
            vec![None]
        } else {
            sweep.lambda_max.iter().copied().map(Some).collect()
        };
        for &h in &hs {
            for &lambda_max in &lambdas {
                let mut cfg = base_cfg.clone();
                cfg.apply(&Overrides {
                    h: Some(h),
                    r: (!sweep.r.is_empty()).then(|| sweep.r.clone()),
                    lambda_max,
                    out_dir: Some(sweep.out_dir.clone()),
                });
                cfg.validate()?;
                groups.push(Group {
                    cfg,
                    label: label.clone(),
                    h,
                    lambda_max,
                });
            }
        }
    }

    let hash = {
        // the output directory is where the table lives, not what it holds
        let keyed = SweepConfig {
            out_dir: PathBuf::new(),
            ..sweep.clone()
        };
        let bytes = serde_json::to_vec(&HashInput {
            sweep: &keyed,
            scenarios: scenario_hashes,
        })?;
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect::<String>()
    };
    let path = output_path(&sweep.out_dir, &sweep.name, "sweep.csv");
    let timing_path: PathBuf = output_path(&sweep.out_dir, &sweep.name, "sweep.timing.csv");
    let mut previous = previous_rows(&path, &hash);

    let mut rows: Vec<Row> = Vec::new();
    let mut timing = String::from("scenario,h,lambda_max,wall_time_secs,resumed\n");
    let mut any_unconverged = false;
    for g in &groups {
        let (label, h, lam) = g.key();
        let expected = g.cfg.verify.radii.len();
        match previous.remove(&g.key()) {
            Some(old) if old.len() == expected => {
                log::info!("resuming {label} h={h} lambda_max={lam} from disk");
                any_unconverged |= old.iter().any(|r| r[4] != "true");
                rows.extend(old);
                timing.push_str(&format!("{label},{h},{lam},,true\n"));
            }
            _ => {
                log::info!("solving {label} h={h} lambda_max={lam}");
                let (new, secs, converged) = run_group(g);
                any_unconverged |= !converged;
                rows.extend(new);
                timing.push_str(&format!("{label},{h},{lam},{secs},false\n"));
                write_atomic(&path, &table(&hash, &rows)?)?;
            }
        }
    }
    write_atomic(&path, &table(&hash, &rows)?)?;
    write_atomic(&timing_path, timing.as_bytes())?;
    let messages: Vec<String> = rows
        .iter()
        .filter(|r| !r[11].is_empty())
        .map(|r| format!("{} h={} r={}: {}", r[0], r[1], r[2], r[11]))
        .collect();
    Ok(Outcome {
        status: if any_unconverged {
            Status::NonConvergence
        } else {
            Status::Success
        },
        files: vec![path, timing_path],
        messages,
    })
}
