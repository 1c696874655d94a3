#![allow(dead_code)]

use std::path::PathBuf;

use cgtrack::algorithms::{run_with, Accounting, RunOptions, RunTrace, Simulation, StepLog};
use cgtrack::harness::{resolve_cell, ExperimentConfig, ResolvedCell, Scenario};
use cgtrack::Result;

pub fn example_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples").join(name)
}

pub fn example(name: &str) -> ExperimentConfig {
    ExperimentConfig::load(&example_path(name)).expect("example config loads")
}

/// A resolved cell together with a fresh simulation on the scenario.
pub struct Cell {
    pub resolved: ResolvedCell,
    pub sim: Simulation,
}

pub fn cell(cfg: &ExperimentConfig, scn: &Scenario, label: &str) -> Cell {
    let cc = cfg.cells.iter().find(|c| cfg.label_of(c) == label).unwrap_or_else(|| panic!("no cell `{label}`"));
    let resolved = resolve_cell(cfg, cc, scn).expect("cell resolves");
    let sim = Simulation::new(
        resolved.algo,
        scn.net.clone(),
        scn.suite.clone(),
        resolved.compressor,
        resolved.params,
        &scn.x0,
        cfg.seeds.algo(),
        Accounting::default(),
    )
    .expect("simulation builds");
    Cell { resolved, sim }
}

/// Runs a cell for `iters` steps, recording its own Lyapunov function.
pub fn trace_cell<F>(cell: &mut Cell, scn: &Scenario, iters: usize, observe: F) -> RunTrace
where
    F: FnMut(&Simulation, &StepLog) -> Result<()>,
{
    let opts = RunOptions { iters, f_star: scn.reference.f_star, lyapunov: Some(cell.resolved.lyapunov) };
    run_with(&mut cell.sim, &opts, observe).expect("run succeeds")
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn l2(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Central finite difference of `f` at `x` along each coordinate.
pub fn fd_grad(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut p = x.to_vec();
    (0..x.len())
        .map(|t| {
            let orig = p[t];
            p[t] = orig + h;
            let up = f(&p);
            p[t] = orig - h;
            let down = f(&p);
            p[t] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}
