use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::algorithms::{Algorithm, Simulation};
use crate::error::{Error, Result};
use crate::linalg::AgentMatrix;

use super::bounds::phi_weight;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LyapunovKind {
    /// Consensus, tracking, compression and optimality terms.
    U,
    /// `U` plus weighted error-feedback accumulators.
    UHat,
    /// Consensus, tracking and optimality only.
    UBreve,
    /// `Ŭ` with the optimality gap weighted by `φ̃`.
    UTilde,
}

impl LyapunovKind {
    pub fn name(self) -> &'static str {
        match self {
            LyapunovKind::U => "U",
            LyapunovKind::UHat => "U_hat",
            LyapunovKind::UBreve => "U_breve",
            LyapunovKind::UTilde => "U_tilde",
        }
    }

    pub fn allowed_for(self, algo: Algorithm) -> bool {
        use LyapunovKind::*;
        match algo {
            Algorithm::Alg1 => self == U,
            Algorithm::Alg2 => matches!(self, U | UHat),
            Algorithm::Alg3 => matches!(self, UBreve | UTilde),
            Algorithm::Dgt => self == UBreve,
        }
    }
}

pub fn check_pairing(kind: LyapunovKind, algo: Algorithm) -> Result<()> {
    if kind.allowed_for(algo) {
        Ok(())
    } else {
        Err(Error::Mismatch(format!("Lyapunov function {} does not apply to {}", kind.name(), algo.name())))
    }
}

/// Which function to evaluate and its weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovSpec {
    pub kind: LyapunovKind,
    /// `φ`, weight of the tracking term.
    pub phi: f64,
    /// `φ̂`, weight of the error-feedback terms.
    pub phi_hat: f64,
    /// `φ̃`, weight of the optimality term in `Ũ`.
    pub phi_tilde: f64,
}

impl LyapunovSpec {
    pub fn new(kind: LyapunovKind, sigma: f64, l_f: f64) -> Self {
        Self { kind, phi: phi_weight(sigma, l_f), phi_hat: 0.0, phi_tilde: 1.0 }
    }

    /// `U` for Algorithms 1 and 2, `Ŭ` otherwise.
    pub fn default_for(sim: &Simulation) -> Self {
        let kind = match sim.algorithm() {
            Algorithm::Alg1 | Algorithm::Alg2 => LyapunovKind::U,
            Algorithm::Alg3 | Algorithm::Dgt => LyapunovKind::UBreve,
        };
        Self::new(kind, sim.network().sigma, sim.suite().l_f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovValue {
    pub total: f64,
    /// Unweighted components.
    pub terms: BTreeMap<String, f64>,
}

/// Stacked quantities a Lyapunov function may read.
pub struct LyapunovState<'a> {
    pub x: &'a AgentMatrix,
    pub y: &'a AgentMatrix,
    pub a: Option<&'a AgentMatrix>,
    pub c: Option<&'a AgentMatrix>,
    pub ex: Option<&'a AgentMatrix>,
    pub ey: Option<&'a AgentMatrix>,
}

/// Evaluates a Lyapunov function; `opt_gap` is `n(F(X̄) − F★)`.
pub fn lyapunov_eval_state(spec: &LyapunovSpec, s: &LyapunovState<'_>, opt_gap: f64) -> Result<LyapunovValue> {
    let mut terms = BTreeMap::new();
    let consensus = s.x.deviation_sq();
    let tracking = s.y.deviation_sq();
    terms.insert("consensus".to_string(), consensus);
    terms.insert("tracking".to_string(), tracking);
    terms.insert("optimality".to_string(), opt_gap);
    let mut total = consensus + spec.phi * tracking;
    fn need<'m>(m: Option<&'m AgentMatrix>, kind: LyapunovKind, what: &str) -> Result<&'m AgentMatrix> {
        m.ok_or_else(|| Error::Mismatch(format!("{} needs {what}", kind.name())))
    }
    match spec.kind {
        LyapunovKind::U | LyapunovKind::UHat => {
            let cx = s.x.diff_frobenius_sq(need(s.a, spec.kind, "A")?);
            let cy = s.y.diff_frobenius_sq(need(s.c, spec.kind, "C")?);
            terms.insert("comp_err_x".to_string(), cx);
            terms.insert("comp_err_y".to_string(), cy);
            total += cx + cy + opt_gap;
            if spec.kind == LyapunovKind::UHat {
                let ex = need(s.ex, spec.kind, "E^X")?.frobenius_sq();
                let ey = need(s.ey, spec.kind, "E^Y")?.frobenius_sq();
                terms.insert("ef_x".to_string(), ex);
                terms.insert("ef_y".to_string(), ey);
                let ef = ex + ey;
                // An infinite weight on a zero accumulator contributes nothing.
                if ef != 0.0 {
                    total += spec.phi_hat * ef;
                }
            }
        }
        LyapunovKind::UBreve => total += opt_gap,
        LyapunovKind::UTilde => total += spec.phi_tilde * opt_gap,
    }
    Ok(LyapunovValue { total, terms })
}

/// Evaluates a Lyapunov function on the simulation's current iterate.
pub fn lyapunov_eval(spec: &LyapunovSpec, sim: &Simulation, f_star: f64) -> Result<LyapunovValue> {
    check_pairing(spec.kind, sim.algorithm())?;
    let x = sim.x();
    let y = sim.y();
    let a = sim.stacked(|s| &s.a);
    let c = sim.stacked(|s| &s.c);
    let ex = sim.stacked(|s| &s.ex);
    let ey = sim.stacked(|s| &s.ey);
    let n = x.n() as f64;
    let opt_gap = n * (sim.suite().global_eval(&x.mean()) - f_star);
    let st = LyapunovState { x: &x, y: &y, a: Some(&a), c: Some(&c), ex: Some(&ex), ey: Some(&ey) };
    lyapunov_eval_state(spec, &st, opt_gap)
}
