use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{ExperimentResult, ResolvedCell, Seeds};
use crate::algorithms::{RunTrace, TraceRecord};
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "k,consensus_err,opt_gap,stationarity,lyapunov,bits";

pub fn trace_csv(trace: &RunTrace) -> String {
    let mut s = String::with_capacity(64 * (trace.records.len() + 1));
    s.push_str(CSV_HEADER);
    s.push('\n');
    for r in &trace.records {
        let _ = writeln!(s, "{},{},{},{},{},{}", r.k, r.consensus_err, r.opt_gap, r.stationarity, r.lyapunov, r.bits);
    }
    s
}

/// Parses a trace CSV back into records.
pub fn parse_trace_csv(text: &str) -> Result<Vec<TraceRecord>> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(Error::Config("trace CSV has an unexpected header".into()));
    }
    lines
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            let bad = || Error::Config(format!("malformed trace line `{line}`"));
            if f.len() != 6 {
                return Err(bad());
            }
            let num = |i: usize| f[i].parse::<f64>().map_err(|_| bad());
            Ok(TraceRecord {
                k: f[0].parse().map_err(|_| bad())?,
                consensus_err: num(1)?,
                opt_gap: num(2)?,
                stationarity: num(3)?,
                lyapunov: num(4)?,
                bits: f[5].parse().map_err(|_| bad())?,
            })
        })
        .collect()
}

#[derive(Serialize)]
struct Sidecar<'a> {
    scenario: &'a str,
    seeds: Seeds,
    resolved_seeds: [u64; 4],
    sigma: f64,
    l_f: f64,
    f_star: f64,
    x0_sha256: String,
    cell: &'a ResolvedCell,
    status: String,
    ledger_bits: u64,
}

pub fn gnuplot_script(result: &ExperimentResult) -> String {
    let mut s = String::from(
        "set logscale y\nset xlabel 'iteration'\nset ylabel 'consensus error + optimality gap'\nset datafile separator ','\nplot ",
    );
    let plots: Vec<String> = result
        .cells
        .iter()
        .filter(|c| c.trace.is_some())
        .map(|c| format!("'{}.csv' every ::1 using 1:($2+$3) with lines title '{}'", c.label, c.label))
        .collect();
    s.push_str(&plots.join(", \\\n     "));
    s.push('\n');
    s
}

/// Renders every output file as `(file name, contents)` without touching disk.
pub fn render(result: &ExperimentResult, gnuplot: bool) -> Result<Vec<(String, String)>> {
    let cfg = &result.config;
    let scn = &result.scenario;
    let mut files = Vec::new();
    for c in &result.cells {
        if let (Some(trace), Some(rc)) = (&c.trace, &c.resolved) {
            files.push((format!("{}.csv", c.label), trace_csv(trace)));
            let side = Sidecar {
                scenario: &cfg.scenario,
                seeds: cfg.seeds,
                resolved_seeds: [cfg.seeds.graph(), cfg.seeds.cost(), cfg.seeds.init(), cfg.seeds.algo()],
                sigma: scn.net.sigma,
                l_f: scn.suite.l_f,
                f_star: scn.reference.f_star,
                x0_sha256: scn.x0_hash(),
                cell: rc,
                status: format!("{:?}", trace.status),
                ledger_bits: trace.ledger_bits,
            };
            files.push((format!("{}.json", c.label), serde_json::to_string_pretty(&side)?));
        }
    }
    files.push(("report.json".into(), result.report.to_json()?));
    files.push(("config.toml".into(), cfg.to_toml()?));
    if gnuplot {
        files.push(("plot.gp".into(), gnuplot_script(result)));
    }
    Ok(files)
}

/// Writes all outputs into `dir`, creating it if needed; returns the written paths.
pub fn write_outputs(result: &ExperimentResult, dir: &Path, gnuplot: bool) -> Result<Vec<PathBuf>> {
    let files = render(result, gnuplot)?;
    fs::create_dir_all(dir)?;
    files
        .into_iter()
        .map(|(name, body)| {
            let path = dir.join(name);
            fs::write(&path, body)?;
            Ok(path)
        })
        .collect()
}
