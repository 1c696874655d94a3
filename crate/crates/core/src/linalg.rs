//! Dense helpers for stacked per-agent vectors.
//!
//! An [`AgentMatrix`] holds one `d`-vector per agent in row-major order, which
//! is the stacked `col(X_1, ..., X_n)` layout used throughout the crate.

use serde::{Deserialize, Serialize};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// `‖a‖_p` for the supported norms (`p = 2` or `p = ∞`).
pub fn norm_p(a: &[f64], p: PNorm) -> f64 {
    match p {
        PNorm::Two => norm(a),
        PNorm::Inf => norm_inf(a),
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Norm used by the absolute-error compressor classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PNorm {
    Two,
    Inf,
}

impl PNorm {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "2" | "two" => Some(PNorm::Two),
            "inf" | "infinity" | "∞" => Some(PNorm::Inf),
            _ => None,
        }
    }

    /// Smallest `c` with `‖v‖_p ≤ c‖v‖₂` in dimension `d`.
    pub fn to_p_from_two(self, _d: usize) -> f64 {
        1.0
    }

    /// Smallest `c` with `‖v‖₂ ≤ c‖v‖_p` in dimension `d`.
    pub fn to_two_from_p(self, d: usize) -> f64 {
        match self {
            PNorm::Two => 1.0,
            PNorm::Inf => (d as f64).sqrt(),
        }
    }
}

/// `n` stacked vectors of dimension `d`, row `i` belongs to agent `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentMatrix {
    n: usize,
    d: usize,
    data: Vec<f64>,
}

impl AgentMatrix {
    pub fn zeros(n: usize, d: usize) -> Self {
        Self { n, d, data: vec![0.0; n * d] }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n * d);
        for r in rows {
            assert_eq!(r.len(), d, "ragged rows");
            data.extend_from_slice(r);
        }
        Self { n, d, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.d.max(1)).take(self.n)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Average row `(1/n) Σ_i row_i`.
    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.d];
        for r in self.rows() {
            axpy(1.0, r, &mut m);
        }
        let inv = 1.0 / self.n as f64;
        m.iter_mut().for_each(|v| *v *= inv);
        m
    }

    /// `‖M − 𝟙 ⊗ mean‖²`, the consensus deviation.
    pub fn deviation_sq(&self) -> f64 {
        let m = self.mean();
        self.rows().map(|r| norm_sq(&sub(r, &m))).sum()
    }

    pub fn frobenius_sq(&self) -> f64 {
        norm_sq(&self.data)
    }

    pub fn frobenius(&self) -> f64 {
        self.frobenius_sq().sqrt()
    }

    pub fn diff_frobenius_sq(&self, other: &AgentMatrix) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b) * (a - b)).sum()
    }

    pub fn max_abs_diff(&self, other: &AgentMatrix) -> f64 {
        self.data.iter().zip(&other.data).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
    }

    /// `((W ⊗ I_d) M)`, i.e. row `i` becomes `Σ_j W_ij row_j`.
    pub fn mixed(&self, w: &[f64]) -> AgentMatrix {
        let n = self.n;
        let mut out = AgentMatrix::zeros(n, self.d);
        for i in 0..n {
            let wi = &w[i * n..(i + 1) * n];
            let dst = out.row_mut(i);
            for (j, &wij) in wi.iter().enumerate() {
                if wij != 0.0 {
                    axpy(wij, &self.data[j * self.d..(j + 1) * self.d], dst);
                }
            }
        }
        out
    }

    /// `((I − W) ⊗ I_d) M`.
    pub fn laplacian(&self, w: &[f64]) -> AgentMatrix {
        let mut out = self.mixed(w);
        for (o, s) in out.data.iter_mut().zip(&self.data) {
            *o = s - *o;
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}
