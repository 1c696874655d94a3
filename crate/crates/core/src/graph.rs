//! Communication networks with doubly stochastic mixing matrices.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::derive_seed;

const MAX_ATTEMPTS: usize = 100;
const POWER_TOL: f64 = 1e-10;
const POWER_MAX_ITERS: usize = 10_000;
const SIGMA_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Topology {
    /// Erdős–Rényi style: each unordered pair is linked with probability `density`.
    Random { density: f64 },
    /// Bidirectional ring with lazy uniform weights.
    Ring,
}

/// A strongly connected digraph with its weight matrix and `σ = ‖W − 𝟙𝟙ᵀ/n‖₂`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub n: usize,
    /// Directed edges `[i, j]` meaning `i` sends to `j`; self-loops are implicit.
    pub edges: Vec<[usize; 2]>,
    /// Row-major `n × n` weights.
    #[serde(rename = "W")]
    pub w: Vec<f64>,
    pub sigma: f64,
}

impl Network {
    pub fn generate(n: usize, topology: Topology, seed: u64) -> Result<Self> {
        match topology {
            Topology::Random { density } => generate_network(n, density, seed),
            Topology::Ring => ring(n),
        }
    }

    /// Builds a network from explicit weights, validating the invariants.
    pub fn from_weights(n: usize, w: Vec<f64>) -> Result<Self> {
        if w.len() != n * n {
            return Err(Error::InvalidParameter(format!(
                "weight matrix has {} entries, expected {}",
                w.len(),
                n * n
            )));
        }
        let mut edges = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i != j && w[i * n + j] > 0.0 {
                    // W_ij > 0 means i receives from j.
                    edges.push([j, i]);
                }
            }
        }
        edges.sort_unstable();
        let sigma = spectral_gap(&w, n)?;
        Ok(Self { n, edges, w, sigma })
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.w[i * self.n + j]
    }

    /// In-neighbors of `i` (agents whose messages `i` reads), excluding `i`.
    pub fn in_neighbors(&self, i: usize) -> Vec<usize> {
        (0..self.n).filter(|&j| j != i && self.weight(i, j) > 0.0).collect()
    }

    pub fn out_degree(&self, i: usize) -> usize {
        self.edges.iter().filter(|e| e[0] == i).count()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn max_row_sum_error(&self) -> f64 {
        let n = self.n;
        (0..n)
            .map(|i| (self.w[i * n..(i + 1) * n].iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_col_sum_error(&self) -> f64 {
        let n = self.n;
        (0..n)
            .map(|j| ((0..n).map(|i| self.w[i * n + j]).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_strongly_connected(&self) -> bool {
        strongly_connected(self.n, &self.edges)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// `δ = 1 − γ(1 − σ)`.
pub fn contraction_factor(gamma: f64, sigma: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidParameter(format!("gamma must lie in (0,1), got {gamma}")));
    }
    if !(0.0..1.0).contains(&sigma) {
        return Err(Error::InvalidParameter(format!("sigma must lie in [0,1), got {sigma}")));
    }
    Ok(1.0 - gamma * (1.0 - sigma))
}

pub fn generate_network(n: usize, density: f64, seed: u64) -> Result<Network> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 agents, got {n}")));
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::InvalidParameter(format!("edge density must lie in (0,1], got {density}")));
    }
    let mut adj = None;
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[attempt as u64]));
        let cand = sample_undirected(n, density, &mut rng);
        if connected(n, &cand) {
            adj = Some(cand);
            break;
        }
    }
    let adj = match adj {
        Some(a) => a,
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[MAX_ATTEMPTS as u64]));
            let mut a = sample_undirected(n, density, &mut rng);
            for i in 0..n {
                let j = (i + 1) % n;
                a[i * n + j] = true;
                a[j * n + i] = true;
            }
            a
        }
    };
    if !connected(n, &adj) {
        return Err(Error::GraphGeneration {
            attempts: MAX_ATTEMPTS,
            reason: "augmented graph is still disconnected".into(),
        });
    }

    let mut w = metropolis(n, &adj);
    let mut sigma = spectral_gap(&w, n)?;
    if sigma < SIGMA_FLOOR {
        w = lazy(n, &w);
        sigma = spectral_gap(&w, n)?;
    }
    let edges = edge_list(n, &adj);
    Ok(Network { n, edges, w, sigma })
}

/// Bidirectional ring with `W_ii = 1/2` and `1/4` to each neighbor.
pub fn ring(n: usize) -> Result<Network> {
    if n < 3 {
        return Err(Error::InvalidParameter(format!("ring needs at least 3 agents, got {n}")));
    }
    let mut adj = vec![false; n * n];
    let mut w = vec![0.0; n * n];
    for i in 0..n {
        let l = (i + n - 1) % n;
        let r = (i + 1) % n;
        adj[i * n + l] = true;
        adj[i * n + r] = true;
        w[i * n + i] = 0.5;
        w[i * n + l] += 0.25;
        w[i * n + r] += 0.25;
    }
    let sigma = spectral_gap(&w, n)?;
    Ok(Network { n, edges: edge_list(n, &adj), w, sigma })
}

fn sample_undirected(n: usize, density: f64, rng: &mut impl Rng) -> Vec<bool> {
    let mut adj = vec![false; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random::<f64>() < density {
                adj[i * n + j] = true;
                adj[j * n + i] = true;
            }
        }
    }
    adj
}

fn connected(n: usize, adj: &[bool]) -> bool {
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    while let Some(u) = queue.pop_front() {
        for v in 0..n {
            if adj[u * n + v] && !seen[v] {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

fn strongly_connected(n: usize, edges: &[[usize; 2]]) -> bool {
    let reach = |forward: bool| {
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(u) = queue.pop_front() {
            for e in edges {
                let (a, b) = if forward { (e[0], e[1]) } else { (e[1], e[0]) };
                if a == u && !seen[b] {
                    seen[b] = true;
                    queue.push_back(b);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    n > 0 && reach(true) && reach(false)
}

fn edge_list(n: usize, adj: &[bool]) -> Vec<[usize; 2]> {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && adj[i * n + j] {
                edges.push([i, j]);
            }
        }
    }
    edges
}

fn metropolis(n: usize, adj: &[bool]) -> Vec<f64> {
    let deg: Vec<usize> = (0..n).map(|i| (0..n).filter(|&j| j != i && adj[i * n + j]).count()).collect();
    let mut w = vec![0.0; n * n];
    for i in 0..n {
        let mut off = 0.0;
        for j in 0..n {
            if i != j && adj[i * n + j] {
                let v = 1.0 / (1.0 + deg[i].max(deg[j]) as f64);
                w[i * n + j] = v;
                off += v;
            }
        }
        w[i * n + i] = 1.0 - off;
    }
    w
}

fn lazy(n: usize, w: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = w.iter().map(|v| 0.5 * v).collect();
    for i in 0..n {
        out[i * n + i] += 0.5;
    }
    out
}

/// `‖W − 𝟙𝟙ᵀ/n‖₂` by power iteration on `MᵀM`, `M = W − 𝟙𝟙ᵀ/n`.
pub fn spectral_gap(w: &[f64], n: usize) -> Result<f64> {
    if w.len() != n * n || n == 0 {
        return Err(Error::InvalidParameter("weight matrix shape mismatch".into()));
    }
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("spectral_gap"));
    }
    let inv = 1.0 / n as f64;
    let m: Vec<f64> = w.iter().map(|v| v - inv).collect();
    if m.iter().all(|v| v.abs() < 1e-15) {
        return Ok(0.0);
    }
    let apply = |v: &[f64], transpose: bool| -> Vec<f64> {
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if transpose { m[j * n + i] } else { m[i * n + j] } * v[j])
                    .sum()
            })
            .collect()
    };
    let ata = |v: &[f64]| apply(&apply(v, false), true);

    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    // The top singular vector of M is orthogonal to 𝟙 whenever W is doubly stochastic.
    let mean = v.iter().sum::<f64>() * inv;
    v.iter_mut().for_each(|x| *x -= mean);
    let mut nv = crate::linalg::norm(&v);
    if nv == 0.0 {
        v = (0..n).map(|i| if i == 0 { 1.0 - inv } else { -inv }).collect();
        nv = crate::linalg::norm(&v);
    }
    v.iter_mut().for_each(|x| *x /= nv);

    let mut lambda = 0.0;
    let mut residual = f64::INFINITY;
    for _ in 0..POWER_MAX_ITERS {
        let u = ata(&v);
        lambda = crate::linalg::dot(&v, &u);
        residual = u.iter().zip(&v).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt();
        let nu = crate::linalg::norm(&u);
        if nu == 0.0 {
            return Ok(0.0);
        }
        if residual <= POWER_TOL * lambda.abs() {
            return Ok(lambda.max(0.0).sqrt());
        }
        v = u.into_iter().map(|x| x / nu).collect();
    }
    // Near-degenerate top eigenvalues slow the eigenvector but not the Rayleigh quotient.
    if residual <= 1e-6 * lambda.abs() {
        return Ok(lambda.max(0.0).sqrt());
    }
    Err(Error::PowerIteration { iterations: POWER_MAX_ITERS, residual })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_agents_fall_back_to_lazy_weights() {
        let net = generate_network(2, 1.0, 3).unwrap();
        assert_eq!(net.w, vec![0.75, 0.25, 0.25, 0.75]);
        assert!((net.sigma - 0.5).abs() < 1e-10);
    }

    #[test]
    fn identity_and_averaging_extremes() {
        let n = 4;
        let mut eye = vec![0.0; n * n];
        (0..n).for_each(|i| eye[i * n + i] = 1.0);
        assert!((spectral_gap(&eye, n).unwrap() - 1.0).abs() < 1e-9);
        let avg = vec![0.25; n * n];
        assert_eq!(spectral_gap(&avg, n).unwrap(), 0.0);
    }

    #[test]
    fn contraction_factor_arithmetic() {
        assert!((contraction_factor(0.3, 0.5).unwrap() - 0.85).abs() < 1e-15);
        assert!(contraction_factor(1.0, 0.0).is_err());
        assert!(contraction_factor(0.5, 1.0).is_err());
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(generate_network(1, 0.5, 0).is_err());
        assert!(generate_network(5, 0.0, 0).is_err());
        assert!(generate_network(5, 1.5, 0).is_err());
    }

    #[test]
    fn sparse_density_is_augmented() {
        let net = generate_network(30, 0.01, 11).unwrap();
        assert!(net.is_strongly_connected());
        assert!(net.sigma > 0.0 && net.sigma < 1.0);
    }
}
