// SPDX-License-Identifier: Apache-2.0

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use pfs_core::experiment::SummaryRow;
use pfs_core::{Point, ProblemInstance, RoundLog};

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

/// Opens `path` and writes the leading `# key=value ...` provenance line.
fn open_with_comment(path: &Path, comment: &[(&str, String)]) -> Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut out = BufWriter::new(file);
    let fields: Vec<String> = comment.iter().map(|(k, v)| format!("{k}={v}")).collect();
    writeln!(out, "# {}", fields.join(" "))?;
    Ok(out)
}

pub fn run_header(d: usize) -> Vec<String> {
    let mut header = vec!["t".to_string()];
    header.extend((1..=d).map(|i| format!("x{i}")));
    header.extend(["f", "g", "regret", "cum_g", "cum_pos_g"].map(String::from));
    header
}

/// One row per round. `regret` is cumulative against `x_star`, the hindsight
/// optimum of the whole horizon.
pub fn write_run_csv(
    path: &Path,
    comment: &[(&str, String)],
    instance: &ProblemInstance,
    logs: &[RoundLog],
    x_star: &Point,
) -> Result<()> {
    let mut out = csv::Writer::from_writer(open_with_comment(path, comment)?);
    out.write_record(run_header(instance.dim()))?;
    let (mut regret, mut cum_g, mut cum_pos_g) = (0.0, 0.0, 0.0);
    for log in logs {
        regret += log.cost_value - instance.costs.value(log.t, x_star)?;
        cum_g += log.g_value;
        cum_pos_g += log.g_value.max(0.0);
        let mut record = vec![log.t.to_string()];
        record.extend(log.x.coords().iter().map(|&v| fmt_f64(v)));
        record.extend([log.cost_value, log.g_value, regret, cum_g, cum_pos_g].map(fmt_f64));
        out.write_record(&record)?;
    }
    out.flush()?;
    Ok(())
}

pub const SWEEP_HEADER: [&str; 14] = [
    "algorithm",
    "T",
    "trials",
    "regret_mean",
    "regret_std",
    "cum_g_mean",
    "cum_g_std",
    "cum_pos_g_mean",
    "cum_pos_g_std",
    "max_g_mean",
    "max_g_std",
    "first_feasible_mean",
    "first_feasible_std",
    "never_feasible",
];

pub fn write_sweep_csv(path: &Path, comment: &[(&str, String)], rows: &[SummaryRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(open_with_comment(path, comment)?);
    out.write_record(SWEEP_HEADER)?;
    for row in rows {
        let mut record = vec![
            row.algorithm.name().to_string(),
            row.horizon.to_string(),
            row.trials.to_string(),
        ];
        for stat in [
            row.regret,
            row.cum_violation,
            row.cum_pos_violation,
            row.max_violation,
            row.first_feasible_round,
        ] {
            record.push(fmt_f64(stat.mean));
            record.push(fmt_f64(stat.std));
        }
        record.push(row.never_feasible.to_string());
        out.write_record(&record)?;
    }
    out.flush()?;
    Ok(())
}
