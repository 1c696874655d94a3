//! Experiment orchestration: shared scenario construction, per-cell runs,
//! threshold metrics and report assembly.

pub mod config;
pub mod output;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use config::{section5_config, CellConfig, ExperimentConfig, ParamMode, Seeds};

use crate::algorithms::{run, Algorithm, AlgorithmParams, RunOptions, RunTrace, Simulation};
use crate::analysis::bounds::{phi_hat, phi_tilde};
use crate::analysis::{
    bounds_theorem1, bounds_theorem3, bounds_theorem5, bounds_theorem7, InitialNorms, LyapunovKind, LyapunovSpec,
    RelativeInputs,
};
use crate::compressors::{AssumptionClass, CompressorSpec};
use crate::costs::{CostSuite, ReferenceSolution};
use crate::error::{Error, Result};
use crate::graph::Network;
use crate::linalg::{norm_p, AgentMatrix};
use crate::rng::substream;

/// Running minimum of `consensus_err + opt_gap` over records with `k ≤ t`.
pub fn upsilon(trace: &RunTrace, t: usize) -> Result<f64> {
    let first = trace.records.first().ok_or_else(|| Error::InvalidParameter("empty trace".into()))?;
    if t > trace.records.last().map_or(0, |r| r.k) {
        return Err(Error::InvalidParameter(format!("T = {t} exceeds the trace length")));
    }
    Ok(trace.records.iter().take_while(|r| r.k <= t).map(|r| r.upsilon_term()).fold(first.upsilon_term(), f64::min))
}

/// `Υ(k)` for every record.
pub fn upsilon_series(trace: &RunTrace) -> Vec<f64> {
    let mut best = f64::INFINITY;
    trace
        .records
        .iter()
        .map(|r| {
            best = best.min(r.upsilon_term());
            best
        })
        .collect()
}

/// First `(k, cumulative bits)` with `Υ(k) ≤ threshold`.
pub fn bits_to_threshold(trace: &RunTrace, threshold: f64) -> Option<(usize, u64)> {
    let ups = upsilon_series(trace);
    trace.records.iter().zip(ups).find(|(_, u)| *u <= threshold).map(|(r, _)| (r.k, r.bits))
}

/// Network, costs, reference optimum and initial state shared by all cells.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub net: Network,
    pub suite: CostSuite,
    pub reference: ReferenceSolution,
    pub x0: AgentMatrix,
}

impl Scenario {
    pub fn build(cfg: &ExperimentConfig) -> Result<Self> {
        let net = Network::generate(cfg.network.n, cfg.network.topology, cfg.seeds.graph())?;
        let suite = CostSuite::generate(&cfg.cost.spec(cfg.network.n, cfg.seeds.cost()))?;
        let reference = suite.solve_reference(cfg.reference_tol, cfg.seeds.cost())?;
        let x0 = initial_state(cfg.network.n, cfg.cost.d, cfg.init_scale, cfg.seeds.init());
        Ok(Self { net, suite, reference, x0 })
    }

    pub fn x0_hash(&self) -> String {
        matrix_hash(&self.x0)
    }
}

/// Gaussian initial decisions, one substream per agent.
pub fn initial_state(n: usize, d: usize, scale: f64, seed: u64) -> AgentMatrix {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut rng = substream(seed, &[i as u64]);
            (0..d).map(|_| scale * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)).collect()
        })
        .collect();
    AgentMatrix::from_rows(&rows)
}

pub fn matrix_hash(m: &AgentMatrix) -> String {
    let mut h = Sha256::new();
    for v in m.as_slice() {
        h.update(v.to_le_bytes());
    }
    hex::encode(h.finalize())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Parameters and Lyapunov weights chosen for one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedCell {
    pub label: String,
    pub algo: Algorithm,
    pub compressor: CompressorSpec,
    pub mode: ParamMode,
    pub params: AlgorithmParams,
    pub lyapunov: LyapunovSpec,
    pub iters: usize,
}

fn relative_or(spec: &CompressorSpec, algo: Algorithm) -> Result<(f64, f64, f64)> {
    spec.relative_constants().ok_or_else(|| {
        Error::InvalidParameter(format!("{} needs a relative-error compressor, got {}", algo.name(), spec.label()))
    })
}

fn initial_norms(scn: &Scenario, phi: f64, p: crate::linalg::PNorm) -> Result<InitialNorms> {
    let n = scn.x0.n();
    let y0 = AgentMatrix::from_rows(&(0..n).map(|i| scn.suite.grad(i, scn.x0.row(i))).collect::<Result<Vec<_>>>()?);
    let opt_gap0 = n as f64 * (scn.suite.global_eval(&scn.x0.mean()) - scn.reference.f_star);
    Ok(InitialNorms {
        v_breve0: scn.x0.deviation_sq() + phi * y0.deviation_sq(),
        opt_gap0,
        max_x_p: scn.x0.rows().map(|r| norm_p(r, p)).fold(0.0, f64::max),
        max_y_p: y0.rows().map(|r| norm_p(r, p)).fold(0.0, f64::max),
    })
}

/// Certified step sizes (and weights) for one algorithm/compressor pair.
pub fn certified_params(algo: Algorithm, comp: &CompressorSpec, scn: &Scenario) -> Result<(AlgorithmParams, LyapunovSpec)> {
    let sigma = scn.net.sigma;
    let l = scn.suite.l_f;
    match algo {
        Algorithm::Alg1 | Algorithm::Alg2 => {
            let (r, psi, c) = relative_or(comp, algo)?;
            let phi = 0.5 / r;
            let inp = RelativeInputs { sigma, l_f: l, r, psi, c, phi_x: phi, phi_y: phi };
            if algo == Algorithm::Alg1 {
                let t = bounds_theorem1(&inp)?;
                let p = AlgorithmParams { phi_x: phi, phi_y: phi, ..AlgorithmParams::new(t.eta, t.gamma) };
                Ok((p, LyapunovSpec::new(LyapunovKind::U, sigma, l)))
            } else {
                let t = bounds_theorem3(&inp)?;
                let p = AlgorithmParams {
                    phi_x: phi,
                    phi_y: phi,
                    varsigma: t.varsigma,
                    ..AlgorithmParams::new(t.eta, t.gamma)
                };
                Ok((p, LyapunovSpec { phi_hat: t.phi_hat, ..LyapunovSpec::new(LyapunovKind::UHat, sigma, l) }))
            }
        }
        Algorithm::Alg3 => match comp.class {
            AssumptionClass::GlobalAbsolute { p, c } => {
                let t = bounds_theorem5(sigma, l, scn.net.n, scn.suite.d, p, c, 1.0, 0.95)?;
                let k = &t.region.constants;
                let params = AlgorithmParams { s0: t.s0, mu: t.mu, ..AlgorithmParams::new(k.eta, k.gamma) };
                Ok((params, LyapunovSpec::new(LyapunovKind::UBreve, sigma, l)))
            }
            AssumptionClass::LocalAbsolute { p, phi_c } => {
                let nu = scn.suite.nu_pl.ok_or_else(|| Error::Infeasible {
                    constraint: "nu > 0".into(),
                    detail: "the cost suite has no known P-L constant".into(),
                })?;
                let init = initial_norms(scn, crate::analysis::bounds::phi_weight(sigma, l), p)?;
                let t = bounds_theorem7(sigma, l, nu, scn.net.n, scn.suite.d, p, phi_c, &init)?;
                let params = AlgorithmParams { s0: t.s0, mu: t.mu, ..AlgorithmParams::new(t.eta, t.gamma) };
                Ok((params, LyapunovSpec { phi_tilde: t.phi_tilde, ..LyapunovSpec::new(LyapunovKind::UTilde, sigma, l) }))
            }
            AssumptionClass::RelativeBounded { .. } => Err(Error::InvalidParameter(
                "certified alg3 needs an absolute-error compressor".into(),
            )),
        },
        Algorithm::Dgt => {
            let t = bounds_theorem1(&RelativeInputs { phi_x: 0.5, phi_y: 0.5, ..RelativeInputs::exact_limit(sigma, l) })?;
            Ok((AlgorithmParams::new(t.eta, t.gamma), LyapunovSpec::new(LyapunovKind::UBreve, sigma, l)))
        }
    }
}

fn default_kind(algo: Algorithm) -> LyapunovKind {
    match algo {
        Algorithm::Alg1 | Algorithm::Alg2 => LyapunovKind::U,
        Algorithm::Alg3 | Algorithm::Dgt => LyapunovKind::UBreve,
    }
}

/// Lyapunov weights for hand-picked parameters.
fn practical_lyapunov(kind: LyapunovKind, p: &AlgorithmParams, comp: &CompressorSpec, scn: &Scenario) -> LyapunovSpec {
    let (sigma, l) = (scn.net.sigma, scn.suite.l_f);
    let mut spec = LyapunovSpec::new(kind, sigma, l);
    if let Some((r, psi, c)) = comp.relative_constants() {
        spec.phi_hat = phi_hat(p.phi_x * psi * r / 2.0, p.phi_y * psi * r / 2.0, c);
    }
    spec.phi_tilde = phi_tilde(sigma, l, p.eta, p.gamma);
    spec
}

pub fn resolve_cell(cfg: &ExperimentConfig, cell: &CellConfig, scn: &Scenario) -> Result<ResolvedCell> {
    let comp = cell.compressor.resolve(cfg.cost.d)?;
    let label = cfg.label_of(cell);
    let kind = cell.lyapunov.unwrap_or_else(|| match (cell.mode, cell.algo) {
        (ParamMode::Certified, Algorithm::Alg2) => LyapunovKind::UHat,
        (ParamMode::Certified, Algorithm::Alg3) if matches!(comp.class, AssumptionClass::LocalAbsolute { .. }) => {
            LyapunovKind::UTilde
        }
        (_, algo) => default_kind(algo),
    });
    crate::analysis::check_pairing(kind, cell.algo)?;
    let (params, mut lyapunov) = match cell.mode {
        ParamMode::Practical => {
            let p = cell.params.unwrap_or_else(|| config::practical_defaults(cell.algo, &comp.label()));
            (p, practical_lyapunov(kind, &p, &comp, scn))
        }
        ParamMode::Certified => {
            let (p, spec) = certified_params(cell.algo, &comp, scn)?;
            match cell.params {
                Some(forced) if cell.force_params => (forced, spec),
                _ => (p, spec),
            }
        }
    };
    if lyapunov.kind != kind {
        lyapunov = LyapunovSpec { kind, ..practical_lyapunov(kind, &params, &comp, scn) };
    }
    params.validate(cell.algo)?;
    Ok(ResolvedCell { label, algo: cell.algo, compressor: comp, mode: cell.mode, params, lyapunov, iters: cell.iters.unwrap_or(cfg.iters) })
}

/// Outcome of one cell; `trace` is absent when the cell could not start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub label: String,
    pub algo: Algorithm,
    pub mode: ParamMode,
    pub resolved: Option<ResolvedCell>,
    pub trace: Option<RunTrace>,
    pub error: Option<String>,
}

pub fn run_cell(cfg: &ExperimentConfig, cell: &CellConfig, scn: &Scenario) -> CellResult {
    let label = cfg.label_of(cell);
    let attempt = || -> Result<(ResolvedCell, RunTrace)> {
        let rc = resolve_cell(cfg, cell, scn)?;
        let mut sim = Simulation::new(
            rc.algo,
            scn.net.clone(),
            scn.suite.clone(),
            rc.compressor,
            rc.params,
            &scn.x0,
            cfg.seeds.algo(),
            cfg.accounting,
        )?;
        let opts = RunOptions { iters: rc.iters, f_star: scn.reference.f_star, lyapunov: Some(rc.lyapunov) };
        let trace = run(&mut sim, &opts)?;
        Ok((rc, trace))
    };
    match attempt() {
        Ok((rc, trace)) => CellResult { label, algo: cell.algo, mode: cell.mode, resolved: Some(rc), trace: Some(trace), error: None },
        Err(e) => CellResult { label, algo: cell.algo, mode: cell.mode, resolved: None, trace: None, error: Some(e.to_string()) },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub label: String,
    pub algo: Algorithm,
    pub compressor: String,
    pub mode: ParamMode,
    pub status: String,
    /// Iterations needed to reach the threshold; absent when unreached.
    pub iters: Option<usize>,
    pub bits: Option<u64>,
    /// `100 · bits / baseline bits`.
    pub percent: Option<f64>,
    pub final_upsilon: Option<f64>,
    pub x0_sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub scenario: String,
    pub threshold: f64,
    pub sigma: f64,
    pub l_f: f64,
    pub f_star: f64,
    pub rows: Vec<ReportRow>,
    pub baseline: Option<ReportRow>,
}

impl ComparisonReport {
    pub fn row(&self, label: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.label == label)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub scenario: Scenario,
    pub cells: Vec<CellResult>,
    pub report: ComparisonReport,
}

fn status_of(c: &CellResult) -> String {
    match (&c.trace, &c.error) {
        (Some(t), _) => match &t.status {
            crate::algorithms::RunStatus::Completed => "completed".into(),
            other => format!("{other:?}"),
        },
        (None, Some(e)) => format!("failed: {e}"),
        (None, None) => "failed".into(),
    }
}

/// Runs every cell on a shared scenario; cells execute in parallel.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let scn = Scenario::build(cfg)?;
    let cells: Vec<CellResult> = cfg.cells.par_iter().map(|c| run_cell(cfg, c, &scn)).collect();
    let x0_hash = scn.x0_hash();
    let mut rows: Vec<ReportRow> = cfg
        .cells
        .iter()
        .zip(&cells)
        .map(|(cc, res)| {
            let reached = res.trace.as_ref().and_then(|t| bits_to_threshold(t, cfg.threshold));
            ReportRow {
                label: res.label.clone(),
                algo: res.algo,
                compressor: res.resolved.as_ref().map_or_else(|| cc.compressor.kind.clone(), |r| r.compressor.label()),
                mode: res.mode,
                status: status_of(res),
                iters: reached.map(|r| r.0),
                bits: reached.map(|r| r.1),
                percent: None,
                final_upsilon: res.trace.as_ref().and_then(|t| upsilon_series(t).last().copied()),
                x0_sha256: x0_hash.clone(),
            }
        })
        .collect();
    let baseline = rows
        .iter()
        .find(|r| r.algo == Algorithm::Dgt && r.mode == ParamMode::Practical && r.bits.is_some())
        .or_else(|| rows.iter().find(|r| r.algo == Algorithm::Dgt && r.bits.is_some()))
        .cloned();
    if let Some(base) = baseline.as_ref().and_then(|b| b.bits) {
        for r in &mut rows {
            r.percent = r.bits.map(|b| 100.0 * b as f64 / base as f64);
        }
    }
    let baseline = baseline.and_then(|b| rows.iter().find(|r| r.label == b.label).cloned());
    let report = ComparisonReport {
        scenario: cfg.scenario.clone(),
        threshold: cfg.threshold,
        sigma: scn.net.sigma,
        l_f: scn.suite.l_f,
        f_star: scn.reference.f_star,
        rows,
        baseline,
    };
    Ok(ExperimentResult { config: cfg.clone(), scenario: scn, cells, report })
}

/// Constant table for one cell's certified parameter region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellBounds {
    pub label: String,
    pub theorem: Option<String>,
    pub constants: Vec<crate::analysis::NamedConstant>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub scenario: String,
    pub sigma: f64,
    pub l_f: f64,
    pub nu: Option<f64>,
    pub cells: Vec<CellBounds>,
}

fn cell_bounds(cfg: &ExperimentConfig, cell: &CellConfig, scn: &Scenario) -> Result<(String, Vec<crate::analysis::NamedConstant>)> {
    let comp = cell.compressor.resolve(cfg.cost.d)?;
    let (sigma, l) = (scn.net.sigma, scn.suite.l_f);
    match (cell.algo, comp.class) {
        (Algorithm::Alg1 | Algorithm::Alg2, _) => {
            let (r, psi, c) = relative_or(&comp, cell.algo)?;
            let (px, py) = match cell.params {
                Some(p) if cell.force_params || cell.mode == ParamMode::Practical => (p.phi_x, p.phi_y),
                _ => (0.5 / r, 0.5 / r),
            };
            let inp = RelativeInputs { sigma, l_f: l, r, psi, c, phi_x: px, phi_y: py };
            if cell.algo == Algorithm::Alg1 {
                Ok(("T1".into(), bounds_theorem1(&inp)?.table()))
            } else {
                Ok(("T3".into(), bounds_theorem3(&inp)?.table()))
            }
        }
        (Algorithm::Alg3, AssumptionClass::GlobalAbsolute { p, c }) => {
            let (s0, mu) = cell.params.map_or((1.0, 0.95), |q| (q.s0, q.mu));
            Ok(("T5".into(), bounds_theorem5(sigma, l, scn.net.n, scn.suite.d, p, c, s0, mu)?.table()))
        }
        (Algorithm::Alg3, AssumptionClass::LocalAbsolute { p, phi_c }) => {
            let nu = scn.suite.nu_pl.ok_or_else(|| Error::Infeasible {
                constraint: "nu > 0".into(),
                detail: "the cost suite has no known P-L constant".into(),
            })?;
            let init = initial_norms(scn, crate::analysis::bounds::phi_weight(sigma, l), p)?;
            Ok(("T7".into(), bounds_theorem7(sigma, l, nu, scn.net.n, scn.suite.d, p, phi_c, &init)?.table()))
        }
        (Algorithm::Alg3, AssumptionClass::RelativeBounded { .. }) => {
            Err(Error::InvalidParameter("alg3 bounds need an absolute-error compressor".into()))
        }
        (Algorithm::Dgt, _) => {
            let inp = RelativeInputs { phi_x: 0.5, phi_y: 0.5, ..RelativeInputs::exact_limit(sigma, l) };
            Ok(("T1".into(), bounds_theorem1(&inp)?.table()))
        }
    }
}

pub fn bounds_report(cfg: &ExperimentConfig) -> Result<BoundsReport> {
    cfg.validate()?;
    let scn = Scenario::build(cfg)?;
    let cells = cfg
        .cells
        .iter()
        .map(|c| match cell_bounds(cfg, c, &scn) {
            Ok((t, constants)) => CellBounds { label: cfg.label_of(c), theorem: Some(t), constants, error: None },
            Err(e) => CellBounds { label: cfg.label_of(c), theorem: None, constants: Vec::new(), error: Some(e.to_string()) },
        })
        .collect();
    Ok(BoundsReport { scenario: cfg.scenario.clone(), sigma: scn.net.sigma, l_f: scn.suite.l_f, nu: scn.suite.nu_pl, cells })
}
