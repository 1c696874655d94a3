//! Synchronous simulation of the compressed gradient-tracking algorithms.
//!
//! One [`Simulation::step`] advances every agent from iteration `k` to `k+1`.
//! Agents read only their own private state and the [`Outbox`] messages of
//! their in-neighbors; all reads happen on the iteration-`k` snapshot and the
//! new states are committed together.

mod run;
mod state;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use run::{run, run_with, RunOptions, RunStatus, RunTrace, TraceRecord};
pub use state::{AgentState, Channel, Neighborhood, Outbox};

use crate::compressors::{BitCostModel, CompressorSpec};
use crate::costs::CostSuite;
use crate::error::{Error, Result};
use crate::graph::Network;
use crate::linalg::AgentMatrix;
use crate::rng::{substream, tag};

/// Scaling values below this halt Algorithm 3.
pub const MIN_SCALING: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Alg1,
    Alg2,
    Alg3,
    Dgt,
}

impl Algorithm {
    pub fn messages_per_iteration(self) -> usize {
        match self {
            Algorithm::Alg2 => 4,
            _ => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Alg1 => "alg1",
            Algorithm::Alg2 => "alg2",
            Algorithm::Alg3 => "alg3",
            Algorithm::Dgt => "dgt",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "alg1" => Some(Algorithm::Alg1),
            "alg2" => Some(Algorithm::Alg2),
            "alg3" => Some(Algorithm::Alg3),
            "dgt" => Some(Algorithm::Dgt),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmParams {
    pub eta: f64,
    pub gamma: f64,
    #[serde(default = "one")]
    pub phi_x: f64,
    #[serde(default = "one")]
    pub phi_y: f64,
    #[serde(default)]
    pub varsigma: f64,
    #[serde(default = "one")]
    pub s0: f64,
    #[serde(default = "half")]
    pub mu: f64,
}

fn one() -> f64 {
    1.0
}

fn half() -> f64 {
    0.5
}

impl AlgorithmParams {
    pub fn new(eta: f64, gamma: f64) -> Self {
        Self { eta, gamma, phi_x: 1.0, phi_y: 1.0, varsigma: 0.0, s0: 1.0, mu: 0.5 }
    }

    pub fn validate(&self, algo: Algorithm) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return bad(format!("eta must be positive, got {}", self.eta));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad(format!("gamma must lie in (0,1], got {}", self.gamma));
        }
        if matches!(algo, Algorithm::Alg1 | Algorithm::Alg2) && !(self.phi_x > 0.0 && self.phi_y > 0.0) {
            return bad(format!("phi_x and phi_y must be positive, got {} and {}", self.phi_x, self.phi_y));
        }
        if algo == Algorithm::Alg2 && !(self.varsigma >= 0.0 && self.varsigma.is_finite()) {
            return bad(format!("varsigma must be nonnegative, got {}", self.varsigma));
        }
        if algo == Algorithm::Alg3 {
            if !(self.s0 > 0.0 && self.s0.is_finite()) {
                return bad(format!("s0 must be positive, got {}", self.s0));
            }
            if !(self.mu > 0.0 && self.mu < 1.0) {
                return bad(format!("mu must lie in (0,1), got {}", self.mu));
            }
        }
        Ok(())
    }

    /// `s(k) = s0·μ^k`.
    pub fn scaling(&self, k: usize) -> f64 {
        self.s0 * self.mu.powf(k as f64)
    }
}

/// How transmitted bits are counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Accounting {
    #[serde(flatten)]
    pub model: BitCostModel,
    /// Count each message once per sender rather than once per out-neighbor.
    pub broadcast: bool,
}

impl Default for Accounting {
    fn default() -> Self {
        Self { model: BitCostModel::default(), broadcast: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageRecord {
    pub agent: usize,
    pub channel: u8,
    pub bits: u64,
}

/// Messages transmitted during one iteration.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StepLog {
    pub k: usize,
    pub messages: Vec<MessageRecord>,
}

impl StepLog {
    pub fn total_bits(&self) -> u64 {
        self.messages.iter().map(|m| m.bits).sum()
    }
}

#[derive(Debug, Clone)]
pub struct Simulation {
    algo: Algorithm,
    net: Network,
    suite: CostSuite,
    comp: CompressorSpec,
    params: AlgorithmParams,
    accounting: Accounting,
    seed: u64,
    k: usize,
    agents: Vec<AgentState>,
    outbox: Vec<Outbox>,
    /// `(j, W_ij)` for `j` in `{i} ∪ N_i^in`.
    weights: Vec<Vec<(usize, f64)>>,
}

fn channel_tag(ch: Channel) -> u64 {
    match ch {
        Channel::Qx => tag::CHANNEL_QX,
        Channel::Qy => tag::CHANNEL_QY,
        Channel::Qhx => tag::CHANNEL_QHX,
        Channel::Qhy => tag::CHANNEL_QHY,
    }
}

impl Simulation {
    pub fn new(
        algo: Algorithm,
        net: Network,
        suite: CostSuite,
        comp: CompressorSpec,
        params: AlgorithmParams,
        x0: &AgentMatrix,
        seed: u64,
        accounting: Accounting,
    ) -> Result<Self> {
        params.validate(algo)?;
        comp.validate()?;
        accounting.model.validate()?;
        let n = net.n;
        if suite.n != n || x0.n() != n || x0.d() != suite.d {
            return Err(Error::InvalidParameter(format!(
                "shape mismatch: network n={n}, cost n={} d={}, x0 {}×{}",
                suite.n,
                suite.d,
                x0.n(),
                x0.d()
            )));
        }
        if !x0.is_finite() {
            return Err(Error::NonFinite("initial state"));
        }
        let weights: Vec<Vec<(usize, f64)>> = (0..n)
            .map(|i| (0..n).filter(|&j| net.weight(i, j) != 0.0).map(|j| (j, net.weight(i, j))).collect())
            .collect();
        let agents: Vec<AgentState> = (0..n)
            .map(|i| {
                let x = x0.row(i).to_vec();
                let g = suite.grad(i, &x)?;
                let deg = weights[i].len();
                Ok(AgentState { acc_x: vec![vec![0.0; x.len()]; deg], acc_y: vec![vec![0.0; x.len()]; deg], ..AgentState::new(x, g) })
            })
            .collect::<Result<_>>()?;
        let mut sim = Self { algo, net, suite, comp, params, accounting, seed, k: 0, agents, outbox: Vec::new(), weights };
        sim.outbox = (0..n).map(|i| sim.initial_outbox(i)).collect::<Result<_>>()?;
        Ok(sim)
    }

    fn rng_for(&self, agent: usize, k: usize, ch: Channel) -> rand_chacha::ChaCha8Rng {
        substream(self.seed, &[tag::ALGO, agent as u64, k as u64, channel_tag(ch)])
    }

    fn compress(&self, agent: usize, k: usize, ch: Channel, v: &[f64]) -> Result<Vec<f64>> {
        let mut rng = self.rng_for(agent, k, ch);
        self.compress_with(&mut rng, v).map_err(|_| Error::Diverged { k, agent })
    }

    fn compress_with<R: Rng>(&self, rng: &mut R, v: &[f64]) -> Result<Vec<f64>> {
        self.comp.compress(v, rng)
    }

    fn initial_outbox(&self, i: usize) -> Result<Outbox> {
        let s = &self.agents[i];
        Ok(match self.algo {
            Algorithm::Dgt => Outbox { qx: s.x.clone(), qy: s.y.clone(), ..Default::default() },
            Algorithm::Alg1 | Algorithm::Alg2 => {
                let qx = self.compress(i, 0, Channel::Qx, &s.x)?;
                let qy = self.compress(i, 0, Channel::Qy, &s.y)?;
                let (qhx, qhy) = if self.algo == Algorithm::Alg2 { (qx.clone(), qy.clone()) } else { (Vec::new(), Vec::new()) };
                Outbox { qx, qy, qhx, qhy }
            }
            Algorithm::Alg3 => {
                let inv = 1.0 / self.params.s0;
                let sx: Vec<f64> = s.x.iter().map(|v| v * inv).collect();
                let sy: Vec<f64> = s.y.iter().map(|v| v * inv).collect();
                Outbox {
                    qx: self.compress(i, 0, Channel::Qx, &sx)?,
                    qy: self.compress(i, 0, Channel::Qy, &sy)?,
                    ..Default::default()
                }
            }
        })
    }

    pub fn algorithm(&self) -> Algorithm {
        self.algo
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn suite(&self) -> &CostSuite {
        &self.suite
    }

    pub fn compressor(&self) -> &CompressorSpec {
        &self.comp
    }

    pub fn params(&self) -> &AlgorithmParams {
        &self.params
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn agents(&self) -> &[AgentState] {
        &self.agents
    }

    pub fn outboxes(&self) -> &[Outbox] {
        &self.outbox
    }

    /// Stacks one field across agents.
    pub fn stacked(&self, f: impl Fn(&AgentState) -> &Vec<f64>) -> AgentMatrix {
        AgentMatrix::from_rows(&self.agents.iter().map(|a| f(a).clone()).collect::<Vec<_>>())
    }

    pub fn stacked_messages(&self, ch: Channel) -> AgentMatrix {
        let rows: Vec<Vec<f64>> = self
            .outbox
            .iter()
            .map(|o| match ch {
                Channel::Qx => o.qx.clone(),
                Channel::Qy => o.qy.clone(),
                Channel::Qhx => o.qhx.clone(),
                Channel::Qhy => o.qhy.clone(),
            })
            .collect();
        AgentMatrix::from_rows(&rows)
    }

    pub fn x(&self) -> AgentMatrix {
        self.stacked(|a| &a.x)
    }

    pub fn y(&self) -> AgentMatrix {
        self.stacked(|a| &a.y)
    }

    pub fn grads(&self) -> AgentMatrix {
        self.stacked(|a| &a.grad)
    }

    fn message_bits(&self, agent: usize) -> u64 {
        let per = match self.algo {
            Algorithm::Dgt => self.accounting.model.full_vector(self.suite.d),
            _ => self.comp.bit_cost(&self.accounting.model, self.suite.d),
        };
        if self.accounting.broadcast {
            per
        } else {
            per * self.net.out_degree(agent) as u64
        }
    }

    /// Bits sent by all agents in one iteration.
    pub fn bits_per_iteration(&self) -> u64 {
        (0..self.net.n).map(|i| self.message_bits(i)).sum::<u64>() * self.algo.messages_per_iteration() as u64
    }

    pub fn step(&mut self) -> Result<StepLog> {
        let order: Vec<usize> = (0..self.net.n).collect();
        self.step_with_order(&order)
    }

    /// Advances one iteration, visiting agents in `order`.
    ///
    /// The result does not depend on `order`; it exists to test that.
    pub fn step_with_order(&mut self, order: &[usize]) -> Result<StepLog> {
        let n = self.net.n;
        let mut seen = vec![false; n];
        if order.len() != n || order.iter().any(|&i| i >= n || std::mem::replace(&mut seen[i], true)) {
            return Err(Error::InvalidParameter("order must be a permutation of the agents".into()));
        }
        if self.algo == Algorithm::Alg3 {
            let s_next = self.params.scaling(self.k + 1);
            if !(s_next >= MIN_SCALING) {
                return Err(Error::ScalingExhausted { k: self.k, s: s_next });
            }
        }
        let mut next: Vec<Option<(AgentState, Outbox)>> = vec![None; n];
        for &i in order {
            let nb = Neighborhood::new(i, &self.weights[i], &self.outbox);
            let (s, o) = self.update_agent(i, &nb)?;
            if !s.is_finite() {
                return Err(Error::Diverged { k: self.k, agent: i });
            }
            next[i] = Some((s, o));
        }
        let log = self.log_transmissions();
        let (agents, outbox) = next.into_iter().map(|e| e.expect("every agent updated")).unzip();
        self.agents = agents;
        self.outbox = outbox;
        self.k += 1;
        Ok(log)
    }

    fn log_transmissions(&self) -> StepLog {
        let channels: &[u8] = match self.algo {
            Algorithm::Alg2 => &[1, 3, 2, 4],
            _ => &[1, 2],
        };
        let messages = (0..self.net.n)
            .flat_map(|i| {
                let bits = self.message_bits(i);
                channels.iter().map(move |&channel| MessageRecord { agent: i, channel, bits })
            })
            .collect();
        StepLog { k: self.k, messages }
    }

    fn update_agent(&self, i: usize, nb: &Neighborhood<'_>) -> Result<(AgentState, Outbox)> {
        let p = &self.params;
        let k = self.k;
        let s = &self.agents[i];
        let mut ns = s.clone();

        let outbox = match self.algo {
            Algorithm::Dgt => {
                let lx = nb.laplacian(Channel::Qx);
                let ly = nb.laplacian(Channel::Qy);
                ns.x = s.x.iter().zip(&lx).zip(&s.y).map(|((x, l), y)| x - p.gamma * l - p.eta * y).collect();
                ns.grad = self.suite.grad(i, &ns.x).map_err(|_| Error::Diverged { k, agent: i })?;
                ns.y = track(&s.y, p.gamma, &ly, &ns.grad, &s.grad);
                Outbox { qx: ns.x.clone(), qy: ns.y.clone(), ..Default::default() }
            }
            Algorithm::Alg1 | Algorithm::Alg2 => {
                let lx = nb.laplacian(Channel::Qx);
                let ly = nb.laplacian(Channel::Qy);
                (ns.a, ns.b) = accumulate(&mut ns.acc_x, nb, Channel::Qx, p.phi_x);
                (ns.c, ns.dd) = accumulate(&mut ns.acc_y, nb, Channel::Qy, p.phi_y);
                // Algorithm 2 drives the x/y updates with the error-feedback messages.
                let (dir_x, dir_y) = if self.algo == Algorithm::Alg2 {
                    (nb.laplacian(Channel::Qhx), nb.laplacian(Channel::Qhy))
                } else {
                    (lx, ly)
                };
                let cons_x: Vec<f64> = s.b.iter().zip(&dir_x).map(|(b, l)| b + l).collect();
                let cons_y: Vec<f64> = s.dd.iter().zip(&dir_y).map(|(d, l)| d + l).collect();
                ns.x = s.x.iter().zip(&cons_x).zip(&s.y).map(|((x, c), y)| x - p.gamma * c - p.eta * y).collect();
                ns.grad = self.suite.grad(i, &ns.x).map_err(|_| Error::Diverged { k, agent: i })?;
                ns.y = track(&s.y, p.gamma, &cons_y, &ns.grad, &s.grad);

                let rx: Vec<f64> = ns.x.iter().zip(&ns.a).map(|(x, a)| x - a).collect();
                let ry: Vec<f64> = ns.y.iter().zip(&ns.c).map(|(y, c)| y - c).collect();
                let new_qx = self.compress(i, k + 1, Channel::Qx, &rx)?;
                let new_qy = self.compress(i, k + 1, Channel::Qy, &ry)?;
                if self.algo == Algorithm::Alg2 {
                    let qhx = nb.own(Channel::Qhx);
                    let qhy = nb.own(Channel::Qhy);
                    ns.ex = (0..s.x.len()).map(|t| p.varsigma * s.ex[t] + s.x[t] - s.a[t] - qhx[t]).collect();
                    ns.ey = (0..s.y.len()).map(|t| p.varsigma * s.ey[t] + s.y[t] - s.c[t] - qhy[t]).collect();
                    let fx: Vec<f64> = ns.ex.iter().zip(&rx).map(|(e, r)| p.varsigma * e + r).collect();
                    let fy: Vec<f64> = ns.ey.iter().zip(&ry).map(|(e, r)| p.varsigma * e + r).collect();
                    Outbox {
                        qhx: self.compress(i, k + 1, Channel::Qhx, &fx)?,
                        qhy: self.compress(i, k + 1, Channel::Qhy, &fy)?,
                        qx: new_qx,
                        qy: new_qy,
                    }
                } else {
                    Outbox { qx: new_qx, qy: new_qy, ..Default::default() }
                }
            }
            Algorithm::Alg3 => {
                let sk = p.scaling(k);
                let s_next = p.scaling(k + 1);
                (ns.xhat, ns.v) = accumulate(&mut ns.acc_x, nb, Channel::Qx, sk);
                (ns.yhat, ns.z) = accumulate(&mut ns.acc_y, nb, Channel::Qy, sk);
                // V = (I − W)X̂ is the consensus direction.
                ns.x = (0..s.x.len()).map(|t| s.x[t] - p.gamma * ns.v[t] - p.eta * s.y[t]).collect();
                ns.grad = self.suite.grad(i, &ns.x).map_err(|_| Error::Diverged { k, agent: i })?;
                ns.y = track(&s.y, p.gamma, &ns.z, &ns.grad, &s.grad);
                let inv = 1.0 / s_next;
                let ux: Vec<f64> = ns.x.iter().zip(&ns.xhat).map(|(x, h)| (x - h) * inv).collect();
                let uy: Vec<f64> = ns.y.iter().zip(&ns.yhat).map(|(y, h)| (y - h) * inv).collect();
                Outbox {
                    qx: self.compress(i, k + 1, Channel::Qx, &ux)?,
                    qy: self.compress(i, k + 1, Channel::Qy, &uy)?,
                    ..Default::default()
                }
            }
        };
        Ok((ns, outbox))
    }
}

/// Adds `coef·q_j` to each mirrored accumulator and returns the agent's own
/// accumulator `a_i` together with `a_i − Σ_j W_ij a_j`.
///
/// Recomputing the Laplacian from the mirrors, rather than accumulating
/// `coef·(q_i − Σ_j W_ij q_j)`, keeps the identity exact as `a` shrinks.
fn accumulate(acc: &mut [Vec<f64>], nb: &Neighborhood<'_>, ch: Channel, coef: f64) -> (Vec<f64>, Vec<f64>) {
    let d = nb.own(ch).len();
    let mut mixed = vec![0.0; d];
    for (slot, (w, q)) in acc.iter_mut().zip(nb.received(ch)) {
        slot.iter_mut().zip(q).for_each(|(a, q)| *a += coef * q);
        mixed.iter_mut().zip(slot.iter()).for_each(|(m, a)| *m += w * a);
    }
    let own = acc[nb.own_index()].clone();
    let lap = own.iter().zip(&mixed).map(|(a, m)| a - m).collect();
    (own, lap)
}

/// `y − γ·cons + g_new − g_old`.
fn track(y: &[f64], gamma: f64, cons: &[f64], g_new: &[f64], g_old: &[f64]) -> Vec<f64> {
    (0..y.len()).map(|t| y[t] - gamma * cons[t] + g_new[t] - g_old[t]).collect()
}
