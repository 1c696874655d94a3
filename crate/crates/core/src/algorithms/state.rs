use serde::{Deserialize, Serialize};

/// Private per-agent variables. Nothing here is visible to other agents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// `∇F_i(x)`, cached so each step evaluates one gradient.
    pub grad: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub dd: Vec<f64>,
    pub ex: Vec<f64>,
    pub ey: Vec<f64>,
    pub xhat: Vec<f64>,
    pub yhat: Vec<f64>,
    pub v: Vec<f64>,
    pub z: Vec<f64>,
    /// Copies of the accumulated x-channel messages (`A_j`, or `X̂_j` for
    /// Algorithm 3) of every agent in `{i} ∪ N_i^in`, in weight order.
    pub acc_x: Vec<Vec<f64>>,
    pub acc_y: Vec<Vec<f64>>,
}

impl AgentState {
    pub fn new(x: Vec<f64>, grad: Vec<f64>) -> Self {
        let d = x.len();
        let zero = vec![0.0; d];
        Self {
            y: grad.clone(),
            x,
            grad,
            a: zero.clone(),
            b: zero.clone(),
            c: zero.clone(),
            dd: zero.clone(),
            ex: zero.clone(),
            ey: zero.clone(),
            xhat: zero.clone(),
            yhat: zero.clone(),
            v: zero.clone(),
            z: zero,
            acc_x: Vec::new(),
            acc_y: Vec::new(),
        }
    }

    pub fn is_finite(&self) -> bool {
        [&self.x, &self.y, &self.grad, &self.a, &self.b, &self.c, &self.dd, &self.ex, &self.ey, &self.xhat, &self.yhat, &self.v, &self.z]
            .iter()
            .all(|v| v.iter().all(|e| e.is_finite()))
    }
}

/// Messages an agent has broadcast for the current iteration.
///
/// This is the only per-agent data that crosses the agent boundary.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Outbox {
    pub qx: Vec<f64>,
    pub qy: Vec<f64>,
    pub qhx: Vec<f64>,
    pub qhy: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    Qx,
    Qy,
    Qhx,
    Qhy,
}

impl Channel {
    fn of(self, o: &Outbox) -> &[f64] {
        match self {
            Channel::Qx => &o.qx,
            Channel::Qy => &o.qy,
            Channel::Qhx => &o.qhx,
            Channel::Qhy => &o.qhy,
        }
    }
}

/// What agent `i` can read: its own messages and those of its in-neighbors,
/// with the corresponding weights `W_ij`.
pub struct Neighborhood<'a> {
    me: usize,
    weights: &'a [(usize, f64)],
    outboxes: &'a [Outbox],
}

impl<'a> Neighborhood<'a> {
    pub(crate) fn new(me: usize, weights: &'a [(usize, f64)], outboxes: &'a [Outbox]) -> Self {
        Self { me, weights, outboxes }
    }

    pub fn own(&self, ch: Channel) -> &[f64] {
        ch.of(&self.outboxes[self.me])
    }

    /// `Σ_j W_ij q_j` over the agent and its in-neighbors.
    pub fn mix(&self, ch: Channel) -> Vec<f64> {
        let d = self.own(ch).len();
        let mut out = vec![0.0; d];
        for &(j, w) in self.weights {
            let q = ch.of(&self.outboxes[j]);
            out.iter_mut().zip(q).for_each(|(o, qj)| *o += w * qj);
        }
        out
    }

    /// `(W_ij, q_j)` for the agent and its in-neighbors, in weight order.
    pub fn received(&self, ch: Channel) -> impl Iterator<Item = (f64, &'a [f64])> + '_ {
        self.weights.iter().map(move |&(j, w)| (w, ch.of(&self.outboxes[j])))
    }

    /// Position of the agent itself in weight order.
    pub fn own_index(&self) -> usize {
        self.weights.iter().position(|&(j, _)| j == self.me).expect("self weight is present")
    }

    /// `q_i − Σ_j W_ij q_j`.
    pub fn laplacian(&self, ch: Channel) -> Vec<f64> {
        let m = self.mix(ch);
        self.own(ch).iter().zip(m).map(|(q, m)| q - m).collect()
    }
}
