//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the report reads top to bottom.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use cgtrack::algorithms::{Accounting, Algorithm, AlgorithmParams, Simulation};
use cgtrack::analysis::{
    bounds_theorem1, bounds_theorem3, bounds_theorem5, bounds_theorem7, fit_window, FitMode, InitialNorms,
    RelativeInputs,
};
use cgtrack::analysis::bounds::phi_weight;
use cgtrack::compressors::{verify_assumption, AssumptionClass, CompressorConfig, CompressorSpec};
use cgtrack::costs::{CostSpec, CostSuite};
use cgtrack::harness::{self, output, ExperimentConfig, ParamMode, Scenario};
use cgtrack::linalg::{norm_p, AgentMatrix, PNorm};

use common::{cell, diff, example, fd_grad, l2, trace_cell};

// Tolerances.
const MEAN_X_TOL: f64 = 1e-9;
const MEAN_Y_TOL: f64 = 1e-9;
const MEAN_RUN_BUDGET: Duration = Duration::from_secs(10);
const STRUCT_TOL: f64 = 1e-12;
const IDENTITY_TOL: f64 = 1e-10;
const IDENTITY_ITERS: usize = 200;
const VERIFY_TRIALS: usize = 1000;
const TOL_FSTAR: f64 = 1e-9;
const DESCENT_ITERS: usize = 2000;
const LINEAR_TARGET: f64 = 1e-8;
const LINEAR_STOP: f64 = 1e-9;
const LINEAR_R2: f64 = 0.99;
const LINEAR_BUDGET: Duration = Duration::from_secs(60);
const CERTIFIED_FIT_ITERS: usize = 2000;
const SUBLINEAR_T: [usize; 3] = [100, 1_000, 10_000];
const INDUCTION_ITERS: usize = 1000;
const BIT_RATIO: f64 = 30.0;
const FD_STEP: f64 = 1e-6;
const FD_POINTS: usize = 100;
const FD_REL_TOL: f64 = 1e-5;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(failures: Vec<String>, summary: String) -> Self {
        if failures.is_empty() {
            Outcome { pass: true, detail: summary }
        } else {
            Outcome { pass: false, detail: failures.join("; ") }
        }
    }
}

/// Accessor for one state vector of an agent.
type Field = fn(&cgtrack::algorithms::AgentState) -> &Vec<f64>;

fn section5() -> (ExperimentConfig, Scenario) {
    let cfg = example("section5.toml");
    let scn = Scenario::build(&cfg).expect("section5 scenario");
    (cfg, scn)
}

fn quadratic() -> (ExperimentConfig, Scenario) {
    let cfg = example("quadratic_pl.toml");
    let scn = Scenario::build(&cfg).expect("quadratic scenario");
    (cfg, scn)
}

const SECTION5_PRACTICAL: [&str; 5] = [
    "dgt_identity_practical",
    "alg1_norm_sign_practical",
    "alg2_norm_sign_practical",
    "alg3_uniform_2_practical",
    "alg3_one_bit_practical",
];

fn mean_recursions() -> Outcome {
    let (cfg, scn) = section5();
    let mut failures = Vec::new();
    let mut worst = (0.0_f64, 0.0_f64);
    let mut slowest = Duration::ZERO;
    for label in SECTION5_PRACTICAL {
        let mut c = cell(&cfg, &scn, label);
        let eta = c.resolved.params.eta;
        let check_y = |sim: &Simulation| {
            let g = sim.grads().mean();
            l2(&diff(&sim.y().mean(), &g)) / (1.0 + l2(&g))
        };
        let mut ey = check_y(&c.sim);
        let mut ex = 0.0_f64;
        let mut prev = (c.sim.x().mean(), c.sim.y().mean());
        let start = Instant::now();
        trace_cell(&mut c, &scn, 500, |sim, _| {
            let predicted: Vec<f64> = prev.0.iter().zip(&prev.1).map(|(x, y)| x - eta * y).collect();
            let xbar = sim.x().mean();
            ex = ex.max(l2(&diff(&xbar, &predicted)));
            ey = ey.max(check_y(sim));
            prev = (xbar, sim.y().mean());
            Ok(())
        });
        let took = start.elapsed();
        slowest = slowest.max(took);
        worst = (worst.0.max(ex), worst.1.max(ey));
        if ex > MEAN_X_TOL || ey > MEAN_Y_TOL {
            failures.push(format!("{label}: x residual {ex:.2e}, y residual {ey:.2e}"));
        }
        if took > MEAN_RUN_BUDGET {
            failures.push(format!("{label}: took {took:?}"));
        }
    }
    Outcome::new(
        failures,
        format!("max x residual {:.2e}, max relative y residual {:.2e}, slowest run {:.2?}", worst.0, worst.1, slowest),
    )
}

fn structural_identities() -> Outcome {
    let (cfg, scn) = section5();
    let w = scn.net.w.clone();
    let mut failures = Vec::new();
    let mut worst = 0.0_f64;
    for label in &SECTION5_PRACTICAL[1..] {
        let mut c = cell(&cfg, &scn, label);
        let pairs: [(Field, Field); 2] =
            if c.resolved.algo == Algorithm::Alg3 { [(|s| &s.v, |s| &s.xhat), (|s| &s.z, |s| &s.yhat)] } else { [(|s| &s.b, |s| &s.a), (|s| &s.dd, |s| &s.c)] };
        let mut local = 0.0_f64;
        trace_cell(&mut c, &scn, 300, |sim, _| {
            for (lhs, operand) in pairs {
                let op = sim.stacked(operand);
                let resid = sim.stacked(lhs).max_abs_diff(&op.laplacian(&w));
                let scale = op.frobenius();
                let rel = if scale > 0.0 { resid / scale } else { resid };
                local = local.max(rel);
            }
            Ok(())
        });
        worst = worst.max(local);
        if local > STRUCT_TOL {
            failures.push(format!("{label}: relative residual {local:.2e}"));
        }
    }
    Outcome::new(failures, format!("max relative residual {worst:.2e} over 300 iterations"))
}

fn exact_compressor_reduction() -> Outcome {
    let (_, scn) = section5();
    let sim_for = |algo: Algorithm| {
        let p = AlgorithmParams { varsigma: 0.3, s0: 1.0, mu: 0.9, ..AlgorithmParams::new(0.1, 0.6) };
        Simulation::new(algo, scn.net.clone(), scn.suite.clone(), CompressorSpec::identity(), p, &scn.x0, 1, Accounting::default())
            .expect("simulation builds")
    };
    let mut dgt = sim_for(Algorithm::Dgt);
    let mut others: Vec<(Algorithm, Simulation)> =
        [Algorithm::Alg1, Algorithm::Alg2, Algorithm::Alg3].into_iter().map(|a| (a, sim_for(a))).collect();
    let mut worst = vec![0.0_f64; others.len()];
    for _ in 0..IDENTITY_ITERS {
        dgt.step().expect("dgt step");
        let (x, y) = (dgt.x(), dgt.y());
        for (slot, (_, sim)) in worst.iter_mut().zip(&mut others) {
            sim.step().expect("step");
            *slot = slot.max(sim.x().max_abs_diff(&x)).max(sim.y().max_abs_diff(&y));
        }
    }
    let failures = others
        .iter()
        .zip(&worst)
        .filter(|(_, &w)| w > IDENTITY_TOL)
        .map(|((a, _), w)| format!("{}: deviation {w:.2e}", a.name()))
        .collect();
    let summary = others.iter().zip(&worst).map(|((a, _), w)| format!("{} {w:.1e}", a.name())).collect::<Vec<_>>().join(", ");
    Outcome::new(failures, format!("max deviation from the baseline: {summary}"))
}

fn compressor_certification() -> Outcome {
    let mut cases: Vec<(CompressorConfig, usize)> = [2, 10, 50].into_iter().map(|d| (CompressorConfig::named("norm_sign"), d)).collect();
    cases.push((CompressorConfig { delta: Some(2.0), ..CompressorConfig::named("uniform_quantize") }, 10));
    cases.push((CompressorConfig::named("one_bit_binary"), 10));
    cases.push((CompressorConfig { keep_k: Some(3), ..CompressorConfig::named("top_k") }, 10));
    cases.push((CompressorConfig { keep_k: Some(3), ..CompressorConfig::named("random_sparsify") }, 10));
    cases.push((CompressorConfig { levels: Some(4), ..CompressorConfig::named("random_quantize") }, 10));
    let mut failures = Vec::new();
    let mut lines = Vec::new();
    for (i, (cc, d)) in cases.iter().enumerate() {
        let spec = cc.resolve(*d).expect("compressor resolves");
        let expected_ok = match (&cc.kind[..], spec.class) {
            ("norm_sign", AssumptionClass::RelativeBounded { r, psi, .. }) => r == *d as f64 / 2.0 && psi == 1.0 / (*d as f64).powi(2),
            ("uniform_quantize", AssumptionClass::GlobalAbsolute { p, c }) => p == PNorm::Inf && c == 1.0,
            ("one_bit_binary", AssumptionClass::LocalAbsolute { p, phi_c }) => p == PNorm::Inf && phi_c == 0.5,
            ("top_k", AssumptionClass::RelativeBounded { psi, .. }) => psi == 3.0 / *d as f64,
            _ => true,
        };
        if !expected_ok {
            failures.push(format!("{} (d={d}): unexpected constants {:?}", spec.label(), spec.class));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(100 + i as u64);
        let report = verify_assumption(&spec, VERIFY_TRIALS, *d, &mut rng).expect("verification runs");
        let ok = report.pass && (spec.is_randomized() || report.violations == 0);
        if !ok {
            failures.push(format!("{} (d={d}): {} violations, ratio {:.3}", report.label, report.violations, report.max_observed_ratio));
        }
        lines.push(format!("{}/d{d} {:.3}", report.label, report.max_observed_ratio));
    }
    Outcome::new(failures, format!("worst observed/bound: {}", lines.join(", ")))
}

fn lyapunov_descent() -> Outcome {
    let (cfg, scn) = quadratic();
    let mut failures = Vec::new();
    let mut lines = Vec::new();
    for label in ["alg1_norm_sign_certified", "alg2_norm_sign_certified", "alg3_uniform_2_certified"] {
        let mut c = cell(&cfg, &scn, label);
        let slack: Box<dyn Fn(usize) -> f64> = match c.resolved.compressor.class {
            AssumptionClass::GlobalAbsolute { p, c: cap } => {
                let p5 = c.resolved.params;
                let t = bounds_theorem5(scn.net.sigma, scn.suite.l_f, scn.net.n, scn.suite.d, p, cap, p5.s0, p5.mu).expect("theorem 5");
                Box::new(move |k| t.slack(k))
            }
            _ => Box::new(|_| 0.0),
        };
        let trace = trace_cell(&mut c, &scn, DESCENT_ITERS, |_, _| Ok(()));
        let mut worst = f64::NEG_INFINITY;
        for w in trace.records.windows(2) {
            let excess = w[1].lyapunov - w[0].lyapunov - slack(w[0].k) - 10.0 * TOL_FSTAR;
            worst = worst.max(excess);
        }
        if !trace.status.is_completed() || worst > 0.0 {
            failures.push(format!("{label}: {:?}, worst excess {worst:.2e}", trace.status));
        }
        let first = trace.records.first().unwrap().lyapunov;
        let last = trace.records.last().unwrap().lyapunov;
        lines.push(format!("{} {} {first:.6e} -> {last:.6e}", label, c.resolved.lyapunov.kind.name()));
    }
    Outcome::new(failures, lines.join(", "))
}

fn linear_rate() -> Outcome {
    let (cfg, scn) = quadratic();
    let start = Instant::now();
    let nu = scn.suite.nu_pl.expect("quadratic suite has a P-L constant");
    let (sigma, l) = (scn.net.sigma, scn.suite.l_f);
    let mut failures = Vec::new();
    let mut lines = Vec::new();
    let metric = |r: &cgtrack::algorithms::TraceRecord| r.consensus_err + r.opt_gap;
    for cc in &cfg.cells {
        let label = cfg.label_of(cc);
        let mut c = cell(&cfg, &scn, &label);
        match cc.mode {
            ParamMode::Practical => {
                let trace = trace_cell(&mut c, &scn, cfg.iters, |_, _| Ok(()));
                let Some(stop) = trace.records.iter().find(|r| metric(r) < LINEAR_STOP) else {
                    failures.push(format!("{label}: metric never fell below {LINEAR_STOP:e}"));
                    continue;
                };
                let (ks, vals): (Vec<usize>, Vec<f64>) = trace.records.iter().map(|r| (r.k, metric(r))).unzip();
                let fit = fit_window(&ks, &vals, (stop.k / 3, stop.k), FitMode::Linear).expect("fit");
                if metric(stop) >= LINEAR_TARGET || fit.r_squared < LINEAR_R2 {
                    failures.push(format!("{label}: R² {:.4}", fit.r_squared));
                }
                lines.push(format!("{label} ρ={:.4} R²={:.4}", fit.rate, fit.r_squared));
            }
            ParamMode::Certified => {
                let trace = trace_cell(&mut c, &scn, CERTIFIED_FIT_ITERS, |_, _| Ok(()));
                let u0 = trace.records[0].lyapunov;
                let theta = certified_rate_constant(&c.resolved, &scn, nu, u0, sigma, l);
                let (ks, vals): (Vec<usize>, Vec<f64>) = trace.records.iter().map(|r| (r.k, metric(r))).unzip();
                let fit = fit_window(&ks, &vals, (CERTIFIED_FIT_ITERS / 3, CERTIFIED_FIT_ITERS), FitMode::Linear).expect("fit");
                let bound = 1.0 - theta / 2.0;
                if !(fit.rate <= bound) {
                    failures.push(format!("{label}: ρ = 1-{:.3e} exceeds 1-{:.3e}", 1.0 - fit.rate, theta / 2.0));
                }
                lines.push(format!("{label} 1-ρ={:.2e} ≥ {:.2e}", 1.0 - fit.rate, theta / 2.0));
            }
        }
    }
    let took = start.elapsed();
    if took > LINEAR_BUDGET {
        failures.push(format!("took {took:?}"));
    }
    Outcome::new(failures, format!("{} ({took:.1?})", lines.join(", ")))
}

/// The contraction constant each theorem guarantees for the Lyapunov function.
fn certified_rate_constant(rc: &harness::ResolvedCell, scn: &Scenario, nu: f64, u0: f64, sigma: f64, l: f64) -> f64 {
    match (rc.algo, rc.compressor.class) {
        (Algorithm::Alg1 | Algorithm::Alg2, AssumptionClass::RelativeBounded { r, psi, c }) => {
            let phi = 0.5 / r;
            let inp = RelativeInputs { sigma, l_f: l, r, psi, c, phi_x: phi, phi_y: phi };
            if rc.algo == Algorithm::Alg1 {
                bounds_theorem1(&inp).expect("theorem 1").constants.theta4(nu)
            } else {
                bounds_theorem3(&inp).expect("theorem 3").theta_hat3(nu)
            }
        }
        (Algorithm::Alg3, AssumptionClass::GlobalAbsolute { p, c }) => {
            let t = bounds_theorem5(sigma, l, scn.net.n, scn.suite.d, p, c, rc.params.s0, rc.params.mu).expect("theorem 5");
            t.linear_rate(nu, u0).0
        }
        (Algorithm::Alg3, AssumptionClass::LocalAbsolute { p, phi_c }) => theorem7_for(scn, p, phi_c, nu).theta_t3,
        other => panic!("no certified rate for {other:?}"),
    }
}

fn theorem7_for(scn: &Scenario, p: PNorm, phi_c: f64, nu: f64) -> cgtrack::analysis::Theorem7 {
    let (sigma, l) = (scn.net.sigma, scn.suite.l_f);
    let n = scn.x0.n();
    let y0 = AgentMatrix::from_rows(&(0..n).map(|i| scn.suite.grad(i, scn.x0.row(i)).unwrap()).collect::<Vec<_>>());
    let init = InitialNorms {
        v_breve0: scn.x0.deviation_sq() + phi_weight(sigma, l) * y0.deviation_sq(),
        opt_gap0: n as f64 * (scn.suite.global_eval(&scn.x0.mean()) - scn.reference.f_star),
        max_x_p: scn.x0.rows().map(|r| norm_p(r, p)).fold(0.0, f64::max),
        max_y_p: y0.rows().map(|r| norm_p(r, p)).fold(0.0, f64::max),
    };
    bounds_theorem7(sigma, l, nu, n, scn.suite.d, p, phi_c, &init).expect("theorem 7")
}

const LOGISTIC_SMALL: &str = r#"
scenario = "logistic_small"
iters = 10000

[seeds]
root = 11

[network]
n = 10
topology = { kind = "random", density = 0.5 }

[cost]
kind = "logistic_log"
d = 10

[[cell]]
algo = "alg1"
mode = "certified"
compressor = { kind = "norm_sign" }

[[cell]]
algo = "alg2"
mode = "certified"
compressor = { kind = "norm_sign" }

[[cell]]
algo = "alg3"
mode = "certified"
compressor = { kind = "uniform_quantize", delta = 2.0 }
"#;

fn sublinear_rate() -> Outcome {
    let cfg = ExperimentConfig::from_toml(LOGISTIC_SMALL).expect("config parses");
    let scn = Scenario::build(&cfg).expect("scenario");
    let (sigma, l) = (scn.net.sigma, scn.suite.l_f);
    let t_max = *SUBLINEAR_T.last().unwrap();
    let mut failures = Vec::new();
    let mut lines = Vec::new();
    for cc in &cfg.cells {
        let label = cfg.label_of(cc);
        let mut c = cell(&cfg, &scn, &label);
        let trace = trace_cell(&mut c, &scn, t_max, |_, _| Ok(()));
        let u0 = trace.records[0].lyapunov;
        let k_const = match c.resolved.compressor.class {
            AssumptionClass::RelativeBounded { r, psi, c: cap } => {
                let phi = 0.5 / r;
                let inp = RelativeInputs { sigma, l_f: l, r, psi, c: cap, phi_x: phi, phi_y: phi };
                if cc.algo == Algorithm::Alg1 {
                    u0 / bounds_theorem1(&inp).expect("theorem 1").constants.theta1
                } else {
                    u0 / bounds_theorem3(&inp).expect("theorem 3").theta_hat1
                }
            }
            AssumptionClass::GlobalAbsolute { p, c: cap } => {
                let pr = c.resolved.params;
                bounds_theorem5(sigma, l, scn.net.n, scn.suite.d, p, cap, pr.s0, pr.mu).expect("theorem 5").sum_bound(u0)
            }
            AssumptionClass::LocalAbsolute { .. } => unreachable!("no local-error cell"),
        };
        let mut running = f64::INFINITY;
        let mut checks = Vec::new();
        for r in &trace.records {
            running = running.min(r.stationarity + r.consensus_err);
            if let Some(&t) = SUBLINEAR_T.iter().find(|&&t| t == r.k) {
                let bound = k_const / t as f64;
                if !(running <= bound) {
                    failures.push(format!("{label}: T={t} min {running:.3e} > K/T {bound:.3e}"));
                }
                checks.push(format!("T={t}: {running:.2e}≤{bound:.2e}"));
            }
        }
        if checks.len() != SUBLINEAR_T.len() {
            failures.push(format!("{label}: run ended early ({:?})", trace.status));
        }
        lines.push(format!("{label} [{}]", checks.join(" ")));
    }
    Outcome::new(failures, lines.join(", "))
}

fn induction_hypotheses() -> Outcome {
    let (cfg, scn) = quadratic();
    let mut c = cell(&cfg, &scn, "alg3_one_bit_certified");
    let nu = scn.suite.nu_pl.expect("P-L constant");
    let AssumptionClass::LocalAbsolute { p, phi_c } = c.resolved.compressor.class else {
        return Outcome { pass: false, detail: "cell does not use a local-error compressor".into() };
    };
    let t7 = theorem7_for(&scn, p, phi_c, nu);
    let mut failures = Vec::new();
    if c.resolved.params.s0 != t7.s0 || c.resolved.params.mu != t7.mu || c.resolved.params.eta != t7.eta {
        failures.push("resolved parameters differ from the theorem's".to_string());
    }
    let ratio = |sim: &Simulation| {
        let s = sim.params().scaling(sim.k());
        sim.agents()
            .iter()
            .map(|a| norm_p(&diff(&a.x, &a.xhat), p).max(norm_p(&diff(&a.y, &a.yhat), p)) / s)
            .fold(0.0, f64::max)
    };
    let mut worst = ratio(&c.sim);
    let mut violations = usize::from(worst > 1.0);
    let trace = trace_cell(&mut c, &scn, INDUCTION_ITERS, |sim, _| {
        let r = ratio(sim);
        worst = worst.max(r);
        violations += usize::from(r > 1.0);
        Ok(())
    });
    if !trace.status.is_completed() || violations > 0 {
        failures.push(format!("{violations} violating iterations, status {:?}", trace.status));
    }
    Outcome::new(failures, format!("max ‖·‖/s(k) = {worst:.4} over {INDUCTION_ITERS} steps (s0 {:.3}, μ {:.10})", t7.s0, t7.mu))
}

fn bit_budget_ordering() -> Outcome {
    let mut cfg = example("section5.toml");
    cfg.cells.retain(|c| c.mode == ParamMode::Practical);
    let result = harness::run_experiment(&cfg).expect("experiment runs");
    let rep = &result.report;
    let mut failures = Vec::new();
    let pct = |label: &str| rep.row(label).and_then(|r| r.percent);
    let compressed = &SECTION5_PRACTICAL[1..];
    for label in compressed {
        match pct(label) {
            Some(p) if p < BIT_RATIO => {}
            other => failures.push(format!("{label}: {other:?}% of baseline")),
        }
    }
    let fewest = compressed
        .iter()
        .filter_map(|l| rep.row(l).and_then(|r| r.bits).map(|b| (b, *l)))
        .min()
        .map(|(_, l)| l);
    if fewest != Some("alg3_one_bit_practical") {
        failures.push(format!("fewest bits: {fewest:?}"));
    }
    let summary = compressed.iter().map(|l| format!("{l} {:.2}%", pct(l).unwrap_or(f64::NAN))).collect::<Vec<_>>().join(", ");
    Outcome::new(failures, summary)
}

fn file_hashes(cfg: &ExperimentConfig) -> Vec<(String, String)> {
    let result = harness::run_experiment(cfg).expect("experiment runs");
    output::render(&result, true)
        .expect("render")
        .into_iter()
        .filter(|(name, _)| name.ends_with(".csv") || name == "report.json")
        .map(|(name, body)| (name, harness::sha256_hex(body.as_bytes())))
        .collect()
}

fn determinism() -> Outcome {
    let mut cfg = example("quadratic_pl.toml");
    cfg.iters = 300;
    let a = file_hashes(&cfg);
    let b = file_hashes(&cfg);
    let c = file_hashes(&cfg.clone().with_root_seed(cfg.seeds.root + 1));
    let mut failures = Vec::new();
    if a != b {
        failures.push("rerun produced different files".into());
    }
    if a == c {
        failures.push("a different seed produced identical files".into());
    }
    Outcome::new(failures, format!("{} files hash-identical across reruns", a.len()))
}

fn gradient_correctness() -> Outcome {
    let mut failures = Vec::new();
    let mut lines = Vec::new();
    for spec in [CostSpec::logistic(5, 10, 3), CostSpec::quadratic(5, 6, 3)] {
        let suite = CostSuite::generate(&spec).expect("suite");
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut worst = 0.0_f64;
        for t in 0..FD_POINTS {
            let agent = rng.random_range(0..suite.n);
            let scale = [0.5, 1.0, 3.0][t % 3];
            let x: Vec<f64> = (0..suite.d).map(|_| scale * rng.random_range(-1.0..1.0)).collect();
            let g = suite.grad(agent, &x).unwrap();
            let fd = fd_grad(|p| suite.eval(agent, p).unwrap(), &x, FD_STEP);
            let rel = l2(&diff(&g, &fd)) / l2(&g).max(1.0);
            worst = worst.max(rel);
            let gg = suite.global_grad(&x);
            let fdg = fd_grad(|p| suite.global_eval(p), &x, FD_STEP);
            worst = worst.max(l2(&diff(&gg, &fdg)) / l2(&gg).max(1.0));
        }
        if worst > FD_REL_TOL || !worst.is_finite() {
            failures.push(format!("{:?}: relative error {worst:.2e}", spec.kind));
        }
        lines.push(format!("{:?} {worst:.1e}", spec.kind));
    }
    Outcome::new(failures, format!("max relative error: {}", lines.join(", ")))
}

type Criterion = (&'static str, fn() -> Outcome);

const CRITERIA: [Criterion; 11] = [
    ("mean recursions", mean_recursions),
    ("structural identities", structural_identities),
    ("exact-compressor reduction", exact_compressor_reduction),
    ("compressor certification", compressor_certification),
    ("Lyapunov descent", lyapunov_descent),
    ("linear rate under P-L", linear_rate),
    ("sublinear rate without P-L", sublinear_rate),
    ("scaling induction hypotheses", induction_hypotheses),
    ("bit-budget ordering", bit_budget_ordering),
    ("determinism", determinism),
    ("gradient correctness", gradient_correctness),
];

fn main() -> ExitCode {
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let selected: Vec<(usize, Criterion)> = CRITERIA
        .iter()
        .copied()
        .enumerate()
        .filter(|(i, (name, _))| filter.is_empty() || filter.iter().any(|f| name.contains(f.as_str()) || (i + 1).to_string() == *f))
        .collect();
    let started = Instant::now();
    let outcomes: Vec<(usize, &str, Outcome, Duration)> = selected
        .par_iter()
        .map(|&(i, (name, check))| {
            let t = Instant::now();
            let out = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
                let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
                Outcome { pass: false, detail: format!("panicked: {}", msg.unwrap_or_default()) }
            });
            (i + 1, name, out, t.elapsed())
        })
        .collect();
    let mut failed = 0;
    for (num, name, out, took) in &outcomes {
        let tag = if out.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!out.pass);
        println!("{tag} [{num:>2}] {name} ({took:.1?}): {}", out.detail);
    }
    println!("{} passed, {} failed in {:.1?}", outcomes.len() - failed, failed, started.elapsed());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
