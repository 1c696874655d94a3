use serde::{Deserialize, Serialize};

use super::{AgentState, Algorithm, Simulation, StepLog};
use crate::analysis::lyapunov::{lyapunov_eval, LyapunovSpec};
use crate::error::{Error, Result};
use crate::linalg::norm_sq;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub iters: usize,
    pub f_star: f64,
    /// Defaults to [`LyapunovSpec::default_for`].
    pub lyapunov: Option<LyapunovSpec>,
}

impl RunOptions {
    pub fn new(iters: usize, f_star: f64) -> Self {
        Self { iters, f_star, lyapunov: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub k: usize,
    /// `Σ‖X_i − X̄‖²`.
    pub consensus_err: f64,
    /// `n(F(X̄) − F★)`.
    pub opt_gap: f64,
    /// `n‖∇F(X̄)‖²`.
    pub stationarity: f64,
    pub lyapunov: f64,
    /// Cumulative bits sent before iterate `k` was formed.
    pub bits: u64,
}

impl TraceRecord {
    /// Consensus error plus optimality gap.
    pub fn upsilon_term(&self) -> f64 {
        self.consensus_err + self.opt_gap
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RunStatus {
    Completed,
    Diverged { k: usize, agent: usize },
    ScalingExhausted { k: usize, s: f64 },
    Failed { message: String },
}

impl RunStatus {
    pub fn is_completed(&self) -> bool {
        matches!(self, RunStatus::Completed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub algo: Algorithm,
    pub records: Vec<TraceRecord>,
    pub status: RunStatus,
    /// Sum of every logged message cost.
    pub ledger_bits: u64,
    /// Agent states at the last good iterate when the run stopped early.
    pub snapshot: Option<Vec<AgentState>>,
}

impl RunTrace {
    pub fn final_bits(&self) -> u64 {
        self.records.last().map_or(0, |r| r.bits)
    }
}

fn record(sim: &Simulation, spec: &LyapunovSpec, f_star: f64, bits: u64) -> Result<TraceRecord> {
    let x = sim.x();
    let n = x.n() as f64;
    let xbar = x.mean();
    let suite = sim.suite();
    Ok(TraceRecord {
        k: sim.k(),
        consensus_err: x.deviation_sq(),
        opt_gap: n * (suite.global_eval(&xbar) - f_star),
        stationarity: n * norm_sq(&suite.global_grad(&xbar)),
        lyapunov: lyapunov_eval(spec, sim, f_star)?.total,
        bits,
    })
}

/// Runs `opts.iters` iterations and records every iterate.
pub fn run(sim: &mut Simulation, opts: &RunOptions) -> Result<RunTrace> {
    run_with(sim, opts, |_, _| Ok(()))
}

/// Like [`run`], calling `observe` after every step with the step's message log.
///
/// An error from `observe` stops the run and is returned.
pub fn run_with<F>(sim: &mut Simulation, opts: &RunOptions, mut observe: F) -> Result<RunTrace>
where
    F: FnMut(&Simulation, &StepLog) -> Result<()>,
{
    if opts.iters == 0 {
        return Err(Error::InvalidParameter("iters must be at least 1".into()));
    }
    let spec = opts.lyapunov.unwrap_or_else(|| LyapunovSpec::default_for(sim));
    crate::analysis::lyapunov::check_pairing(spec.kind, sim.algorithm())?;
    let per_iter = sim.bits_per_iteration();
    let mut records = Vec::with_capacity(opts.iters + 1);
    records.push(record(sim, &spec, opts.f_star, 0)?);
    let mut ledger = 0u64;
    let mut status = RunStatus::Completed;
    let mut snapshot = None;
    for _ in 0..opts.iters {
        match sim.step() {
            Ok(log) => {
                ledger += log.total_bits();
                observe(sim, &log)?;
                records.push(record(sim, &spec, opts.f_star, per_iter * sim.k() as u64)?);
            }
            Err(e) => {
                status = match e {
                    Error::Diverged { k, agent } => RunStatus::Diverged { k, agent },
                    Error::ScalingExhausted { k, s } => RunStatus::ScalingExhausted { k, s },
                    other => RunStatus::Failed { message: other.to_string() },
                };
                snapshot = Some(sim.agents().to_vec());
                break;
            }
        }
    }
    Ok(RunTrace { algo: sim.algorithm(), records, status, ledger_bits: ledger, snapshot })
}
