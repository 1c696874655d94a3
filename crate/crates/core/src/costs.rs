//! Local cost functions, gradient oracles and a centralized reference solver.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm, norm_sq, sub};
use crate::rng::derive_seed;

/// Largest value of `|s''(z)|` for the logistic sigmoid `s`.
const SIGMOID_CURVATURE: f64 = 0.096_225_044_864_937_63;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AgentCost {
    /// `h·s(ξᵀx + offset) + m·ln(1 + ‖x‖²)`.
    LogisticLog { h: f64, offset: f64, m: f64, xi: Vec<f64> },
    /// `½‖Mx − b‖²` with `M` stored row-major.
    Quadratic { rows: usize, mat: Vec<f64>, b: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostKind {
    LogisticLog,
    QuadraticPl,
}

/// Generation parameters; the seed plus these fields regenerate a suite exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostSpec {
    pub kind: CostKind,
    pub n: usize,
    pub d: usize,
    #[serde(default)]
    pub seed: u64,
    /// Replace each log-term coefficient `m_i` by `|m_i|`.
    #[serde(default = "yes")]
    pub abs_m: bool,
    /// Rows per agent for quadratic costs (defaults to `d`).
    #[serde(default)]
    pub rows: Option<usize>,
    /// Number of coordinates that no agent observes (quadratic only).
    #[serde(default)]
    pub rank_deficit: usize,
    /// Draw targets from a common solution so that `F★ = 0`.
    #[serde(default)]
    pub consistent: bool,
}

fn yes() -> bool {
    true
}

impl CostSpec {
    pub fn logistic(n: usize, d: usize, seed: u64) -> Self {
        Self { kind: CostKind::LogisticLog, n, d, seed, abs_m: true, rows: None, rank_deficit: 0, consistent: false }
    }

    pub fn quadratic(n: usize, d: usize, seed: u64) -> Self {
        Self { kind: CostKind::QuadraticPl, n, d, seed, abs_m: true, rows: None, rank_deficit: 0, consistent: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostSuite {
    pub n: usize,
    pub d: usize,
    pub kind: CostKind,
    pub agents: Vec<AgentCost>,
    /// Smoothness constant used by the parameter calculators.
    pub l_f: f64,
    /// Polyak–Łojasiewicz constant when known analytically.
    pub nu_pl: Option<f64>,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn gauss<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

impl AgentCost {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            AgentCost::LogisticLog { h, offset, m, xi } => h * sigmoid(dot(xi, x) + offset) + m * norm_sq(x).ln_1p(),
            AgentCost::Quadratic { rows, mat, b } => {
                let d = x.len();
                0.5 * (0..*rows).map(|r| (dot(&mat[r * d..(r + 1) * d], x) - b[r]).powi(2)).sum::<f64>()
            }
        }
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        match self {
            AgentCost::LogisticLog { h, offset, m, xi } => {
                let s = sigmoid(dot(xi, x) + offset);
                let a = h * s * (1.0 - s);
                let c = 2.0 * m / (1.0 + norm_sq(x));
                xi.iter().zip(x).map(|(xi, xv)| a * xi + c * xv).collect()
            }
            AgentCost::Quadratic { rows, mat, b } => {
                let d = x.len();
                let mut g = vec![0.0; d];
                for r in 0..*rows {
                    let row = &mat[r * d..(r + 1) * d];
                    let res = dot(row, x) - b[r];
                    g.iter_mut().zip(row).for_each(|(gi, mi)| *gi += res * mi);
                }
                g
            }
        }
    }

    /// Upper bound on the Lipschitz constant of the gradient.
    pub fn analytic_lipschitz(&self, d: usize) -> f64 {
        match self {
            AgentCost::LogisticLog { h, m, xi, .. } => h.abs() * norm_sq(xi) * SIGMOID_CURVATURE + 2.0 * m.abs(),
            AgentCost::Quadratic { rows, mat, .. } => gram(*rows, d, mat).symmetric_eigenvalues().max().max(0.0),
        }
    }
}

fn gram(rows: usize, d: usize, mat: &[f64]) -> DMatrix<f64> {
    let m = DMatrix::from_row_slice(rows, d, mat);
    m.transpose() * m
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LipschitzEstimate {
    /// Largest sampled difference quotient times the safety factor 1.5.
    pub sampled: f64,
    /// Closed-form bound (maximum over agents).
    pub analytic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSolution {
    pub x_star: Vec<f64>,
    pub f_star: f64,
    pub grad_norm: f64,
    /// Whether the best point meets the requested gradient tolerance.
    pub certified: bool,
    /// `(endpoint, value)` for every restart.
    pub endpoints: Vec<(Vec<f64>, f64)>,
}

const RESTARTS: usize = 16;
const MAX_GD_ITERS: usize = 200_000;

impl CostSuite {
    pub fn generate(spec: &CostSpec) -> Result<Self> {
        if spec.n == 0 || spec.d == 0 {
            return Err(Error::InvalidParameter("n and d must be positive".into()));
        }
        let (n, d) = (spec.n, spec.d);
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, &[crate::rng::tag::COST]));
        match spec.kind {
            CostKind::LogisticLog => {
                let agents: Vec<AgentCost> = (0..n)
                    .map(|_| {
                        let h = gauss(&mut rng);
                        let offset = gauss(&mut rng);
                        let m = gauss(&mut rng);
                        let xi = (0..d).map(|_| gauss(&mut rng)).collect();
                        AgentCost::LogisticLog { h, offset, m: if spec.abs_m { m.abs() } else { m }, xi }
                    })
                    .collect();
                let l_f = agents.iter().map(|a| a.analytic_lipschitz(d)).fold(0.0, f64::max);
                Ok(Self { n, d, kind: spec.kind, agents, l_f, nu_pl: None })
            }
            CostKind::QuadraticPl => {
                let rows = spec.rows.unwrap_or(d);
                if rows == 0 || spec.rank_deficit >= d {
                    return Err(Error::InvalidParameter("need rows ≥ 1 and rank_deficit < d".into()));
                }
                let live = d - spec.rank_deficit;
                let truth: Vec<f64> = (0..d).map(|_| gauss(&mut rng)).collect();
                let mut mats: Vec<Vec<f64>> = (0..n)
                    .map(|_| {
                        (0..rows * d)
                            .map(|idx| if idx % d < live { gauss(&mut rng) } else { 0.0 })
                            .collect()
                    })
                    .collect();
                let l_raw = mats.iter().map(|m| gram(rows, d, m).symmetric_eigenvalues().max()).fold(0.0, f64::max);
                let scale = 1.0 / l_raw.sqrt();
                mats.iter_mut().for_each(|m| m.iter_mut().for_each(|v| *v *= scale));
                let agents: Vec<AgentCost> = mats
                    .into_iter()
                    .map(|mat| {
                        let b = (0..rows)
                            .map(|r| {
                                let noise = gauss(&mut rng);
                                if spec.consistent {
                                    dot(&mat[r * d..(r + 1) * d], &truth)
                                } else {
                                    dot(&mat[r * d..(r + 1) * d], &truth) + noise
                                }
                            })
                            .collect();
                        AgentCost::Quadratic { rows, mat, b }
                    })
                    .collect();
                let mut suite = Self { n, d, kind: spec.kind, agents, l_f: 1.0, nu_pl: None };
                suite.l_f = suite.agents.iter().map(|a| a.analytic_lipschitz(d)).fold(0.0, f64::max);
                suite.nu_pl = Some(suite.pl_constant()?);
                Ok(suite)
            }
        }
    }

    /// Smallest nonzero eigenvalue of `(1/n) Σ M_iᵀM_i`.
    fn pl_constant(&self) -> Result<f64> {
        let mut g = DMatrix::<f64>::zeros(self.d, self.d);
        for a in &self.agents {
            if let AgentCost::Quadratic { rows, mat, .. } = a {
                g += gram(*rows, self.d, mat);
            }
        }
        g /= self.n as f64;
        let eig = g.symmetric_eigenvalues();
        let top = eig.max();
        eig.iter()
            .copied()
            .filter(|&e| e > 1e-10 * top.max(1.0))
            .min_by(f64::total_cmp)
            .ok_or_else(|| Error::InvalidParameter("averaged Gram matrix vanishes".into()))
    }

    pub fn eval(&self, agent: usize, x: &[f64]) -> Result<f64> {
        check_finite(x, "eval")?;
        Ok(self.agents[agent].eval(x))
    }

    pub fn grad(&self, agent: usize, x: &[f64]) -> Result<Vec<f64>> {
        check_finite(x, "grad")?;
        Ok(self.agents[agent].grad(x))
    }

    /// `F(x) = (1/n) Σ F_i(x)`.
    pub fn global_eval(&self, x: &[f64]) -> f64 {
        self.agents.iter().map(|a| a.eval(x)).sum::<f64>() / self.n as f64
    }

    pub fn global_grad(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.d];
        for a in &self.agents {
            g.iter_mut().zip(a.grad(x)).for_each(|(gi, ai)| *gi += ai);
        }
        let inv = 1.0 / self.n as f64;
        g.iter_mut().for_each(|v| *v *= inv);
        g
    }

    pub fn analytic_lipschitz(&self) -> f64 {
        self.agents.iter().map(|a| a.analytic_lipschitz(self.d)).fold(0.0, f64::max)
    }

    /// Samples difference quotients of every agent's gradient.
    pub fn estimate_l<R: Rng + ?Sized>(&self, samples: usize, rng: &mut R) -> Result<LipschitzEstimate> {
        if samples < 10 {
            return Err(Error::InvalidParameter(format!("need at least 10 samples, got {samples}")));
        }
        let mut best = 0.0_f64;
        for s in 0..samples {
            let scale = 10f64.powf(rng.random_range(-2.0..1.0));
            let x: Vec<f64> = (0..self.d).map(|_| scale * gauss(rng)).collect();
            let h = if s % 2 == 0 { 1e-4 } else { scale };
            let y: Vec<f64> = x.iter().map(|v| v + h * gauss(rng)).collect();
            let dxy = norm(&sub(&x, &y));
            if dxy == 0.0 {
                continue;
            }
            for a in &self.agents {
                let q = norm(&sub(&a.grad(&x), &a.grad(&y))) / dxy;
                best = best.max(q);
            }
        }
        Ok(LipschitzEstimate { sampled: 1.5 * best, analytic: self.analytic_lipschitz() })
    }

    /// Multi-start gradient descent with Armijo backtracking on `F`.
    pub fn solve_reference(&self, tol: f64, seed: u64) -> Result<ReferenceSolution> {
        if !(tol > 0.0) {
            return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0x7265_6673]));
        let mut starts = vec![vec![0.0; self.d]];
        for r in 1..RESTARTS {
            let scale = [0.1, 1.0, 3.0][r % 3];
            starts.push((0..self.d).map(|_| scale * gauss(&mut rng)).collect());
        }
        let endpoints: Vec<(Vec<f64>, f64)> = starts
            .into_iter()
            .map(|x0| {
                let x = self.descend(x0, tol);
                let f = self.global_eval(&x);
                (x, f)
            })
            .collect();
        Ok(self.best_of(endpoints, tol))
    }

    /// Restarts the solver from `x0` and merges the result with `prev`.
    pub fn refine_reference(&self, prev: &ReferenceSolution, x0: Vec<f64>, tol: f64) -> ReferenceSolution {
        let x = self.descend(x0, tol);
        let f = self.global_eval(&x);
        let mut endpoints = prev.endpoints.clone();
        endpoints.push((x, f));
        self.best_of(endpoints, tol)
    }

    /// Returns a probe point with `F(x) < F★ − tol`, if one is found.
    pub fn probe_reference<R: Rng + ?Sized>(
        &self,
        reference: &ReferenceSolution,
        probes: usize,
        tol: f64,
        rng: &mut R,
    ) -> Option<Vec<f64>> {
        (0..probes).find_map(|p| {
            let scale = [0.1, 1.0, 3.0, 10.0][p % 4];
            let x: Vec<f64> = (0..self.d).map(|_| scale * gauss(rng)).collect();
            (self.global_eval(&x) < reference.f_star - tol).then_some(x)
        })
    }

    fn best_of(&self, endpoints: Vec<(Vec<f64>, f64)>, tol: f64) -> ReferenceSolution {
        let (x_star, f_star) = endpoints
            .iter()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .cloned()
            .expect("at least one restart");
        let grad_norm = norm(&self.global_grad(&x_star));
        ReferenceSolution { x_star, f_star, grad_norm, certified: grad_norm <= tol, endpoints }
    }

    fn descend(&self, mut x: Vec<f64>, tol: f64) -> Vec<f64> {
        let mut step = 1.0 / self.l_f.max(1e-12);
        let mut f = self.global_eval(&x);
        for _ in 0..MAX_GD_ITERS {
            let g = self.global_grad(&x);
            let g2 = norm_sq(&g);
            if g2.sqrt() <= tol {
                break;
            }
            step *= 2.0;
            loop {
                let cand: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - step * gi).collect();
                let fc = self.global_eval(&cand);
                if fc <= f - 0.5 * step * g2 {
                    x = cand;
                    f = fc;
                    break;
                }
                step *= 0.5;
                if step < 1e-20 {
                    return x;
                }
            }
        }
        x
    }
}

fn check_finite(x: &[f64], what: &'static str) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn logistic(h: f64, offset: f64, m: f64, xi: Vec<f64>) -> AgentCost {
        AgentCost::LogisticLog { h, offset, m, xi }
    }

    #[test]
    fn pinned_values() {
        assert_eq!(logistic(0.0, 0.0, 1.0, vec![0.0; 3]).eval(&[0.0; 3]), 0.0);
        assert_eq!(logistic(1.0, 0.0, 0.0, vec![0.0; 2]).eval(&[3.0, -1.0]), 0.5);
        assert_eq!(logistic(0.0, 0.0, 0.0, vec![1.0; 2]).grad(&[3.0, -1.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn sigmoid_is_stable_at_extremes() {
        assert_eq!(sigmoid(1000.0), 1.0);
        assert_eq!(sigmoid(-1000.0), 0.0);
        assert!((sigmoid(0.0) - 0.5).abs() < 1e-16);
    }

    #[test]
    fn sigmoid_curvature_constant() {
        assert!((SIGMOID_CURVATURE - 1.0 / (6.0 * 3f64.sqrt())).abs() < 1e-16);
    }

    #[test]
    fn identity_quadratic_has_unit_constants() {
        let d = 3;
        let mut mat = vec![0.0; d * d];
        (0..d).for_each(|i| mat[i * d + i] = 1.0);
        let a = AgentCost::Quadratic { rows: d, mat, b: vec![1.0, 2.0, 3.0] };
        assert!((a.analytic_lipschitz(d) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quadratic_generation_normalizes() {
        let suite = CostSuite::generate(&CostSpec::quadratic(10, 5, 3)).unwrap();
        assert!((suite.l_f - 1.0).abs() < 1e-12);
        let nu = suite.nu_pl.unwrap();
        assert!(nu > 0.0 && nu <= 1.0);
    }

    #[test]
    fn consistent_quadratic_has_zero_optimum() {
        let mut spec = CostSpec::quadratic(4, 5, 9);
        spec.consistent = true;
        let suite = CostSuite::generate(&spec).unwrap();
        let r = suite.solve_reference(1e-10, 0).unwrap();
        assert!(r.f_star.abs() < 1e-10);
        assert!(r.certified);
    }

    #[test]
    fn flat_logistic_minimized_at_origin() {
        let mut suite = CostSuite::generate(&CostSpec::logistic(3, 4, 1)).unwrap();
        for a in &mut suite.agents {
            if let AgentCost::LogisticLog { h, .. } = a {
                *h = 0.0;
            }
        }
        let r = suite.solve_reference(1e-9, 0).unwrap();
        assert!(r.f_star.abs() < 1e-15);
        assert!(norm(&r.x_star) < 1e-8);
    }

    #[test]
    fn reference_is_best_restart() {
        let suite = CostSuite::generate(&CostSpec::logistic(5, 6, 2)).unwrap();
        let r = suite.solve_reference(1e-8, 0).unwrap();
        assert_eq!(r.endpoints.len(), RESTARTS);
        assert!(r.endpoints.iter().all(|(_, f)| r.f_star <= *f));
    }

    #[test]
    fn non_finite_inputs_rejected() {
        let suite = CostSuite::generate(&CostSpec::logistic(2, 2, 0)).unwrap();
        assert!(suite.eval(0, &[f64::NAN, 0.0]).is_err());
        assert!(suite.grad(0, &[f64::INFINITY, 0.0]).is_err());
        assert!(suite.estimate_l(5, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }
}
