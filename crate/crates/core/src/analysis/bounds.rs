//! Step-size regions and the constants appearing in the convergence bounds.
//!
//! Every constant is computed by exactly one function here; Lyapunov weights
//! and rate diagnostics reuse the same values.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::PNorm;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedConstant {
    pub name: String,
    pub formula: String,
    pub value: f64,
}

fn nc(name: &str, formula: &str, value: f64) -> NamedConstant {
    NamedConstant { name: name.into(), formula: formula.into(), value }
}

/// `num / c`, with `+∞` when `c = 0`.
fn over_c(num: f64, c: f64) -> f64 {
    if c == 0.0 {
        f64::INFINITY
    } else {
        num / c
    }
}

/// Index and value of the smallest term.
fn argmin(terms: &[f64]) -> (usize, f64) {
    terms
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |best, (i, v)| if v < best.1 { (i, v) } else { best })
}

fn check_positive(value: f64, constraint: &str, detail: impl FnOnce() -> String) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::Infeasible { constraint: constraint.into(), detail: format!("value {value:e}; {}", detail()) })
    }
}

/// `φ = (1−σ)² / (320 L²)`.
pub fn phi_weight(sigma: f64, l_f: f64) -> f64 {
    (1.0 - sigma).powi(2) / (320.0 * l_f * l_f)
}

/// `C·φ̂ = 0.1·min{c₁(2c₁+1), c₂(2c₂+1)}`; finite even when `C = 0`.
pub fn c_phi_hat(c1: f64, c2: f64) -> f64 {
    0.1 * (c1 * (2.0 * c1 + 1.0)).min(c2 * (2.0 * c2 + 1.0))
}

/// `φ̂ = (0.1/C)·min{c₁(2c₁+1), c₂(2c₂+1)}`.
pub fn phi_hat(c1: f64, c2: f64, c: f64) -> f64 {
    over_c(c_phi_hat(c1, c2), c)
}

/// `φ̃ = 0.4γ(1−σ) / (ηL²)`.
pub fn phi_tilde(sigma: f64, l_f: f64, eta: f64, gamma: f64) -> f64 {
    0.4 * gamma * (1.0 - sigma) / (eta * l_f * l_f)
}

/// `δ = 1 − γ(1−σ)`.
pub fn delta(sigma: f64, gamma: f64) -> f64 {
    1.0 - gamma * (1.0 - sigma)
}

/// Norm-equivalence constants `(d̂, d̃)` with `‖v‖_p ≤ d̂‖v‖₂` and `‖v‖₂ ≤ d̃‖v‖_p`.
pub fn norm_constants(p: PNorm, d: usize) -> (f64, f64) {
    (p.to_p_from_two(d), p.to_two_from_p(d))
}

/// Inputs shared by the relative-error calculators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelativeInputs {
    pub sigma: f64,
    pub l_f: f64,
    pub r: f64,
    pub psi: f64,
    pub c: f64,
    pub phi_x: f64,
    pub phi_y: f64,
}

impl RelativeInputs {
    /// Inputs for an exact compressor with `c₁ = c₂ = 1/2`, the limit of `φ → 1/r`.
    pub fn exact_limit(sigma: f64, l_f: f64) -> Self {
        Self { sigma, l_f, r: 1.0, psi: 1.0, c: 0.0, phi_x: 1.0, phi_y: 1.0 }
    }

    fn validate(&self, strict_phi: bool) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma < 1.0) {
            return Err(Error::InvalidParameter(format!("sigma must lie in (0,1), got {}", self.sigma)));
        }
        if !(self.l_f > 0.0 && self.l_f.is_finite()) {
            return Err(Error::InvalidParameter(format!("L_f must be positive, got {}", self.l_f)));
        }
        if !(self.r > 0.0) || !(self.psi > 0.0 && self.psi <= 1.0) || !(self.c >= 0.0) {
            return Err(Error::InvalidParameter("compressor constants need r > 0, psi in (0,1], C ≥ 0".into()));
        }
        let hi = 1.0 / self.r;
        let ok = |p: f64| if strict_phi { p > 0.0 && p < hi } else { p > 0.0 && p <= hi };
        if !ok(self.phi_x) || !ok(self.phi_y) {
            return Err(Error::InvalidParameter(format!(
                "phi_x and phi_y must lie in (0, 1/r) = (0, {hi}), got {} and {}",
                self.phi_x, self.phi_y
            )));
        }
        Ok(())
    }

    pub fn c1(&self) -> f64 {
        self.phi_x * self.psi * self.r / 2.0
    }

    pub fn c2(&self) -> f64 {
        self.phi_y * self.psi * self.r / 2.0
    }
}

pub const T1_GAMMA_TERMS: [&str; 7] = [
    "(1-sigma)/(160(1+1/c1))",
    "(1-sigma)/(40000(1+1/c2)L^2)",
    "c1(1-sigma)/(40C)",
    "c1/(8 sqrt(C))",
    "c1/(10 L sqrt(C(1+1/c2)))",
    "c2 L^2/C",
    "c2/(10 sqrt(C))",
];

pub const T1_ETA_TERMS: [&str; 6] = [
    "(1-sigma)^2 gamma/(40L)",
    "0.4(1-sigma)gamma/L^2",
    "(1-sigma)^2/(80L) sqrt(gamma/(1+1/c1))",
    "9/(40(4(1+1/c1)+5(1+1/c2)))",
    "1/(2L)",
    "gamma",
];

/// Region for Algorithm 1 and the recommended interior point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem1 {
    pub inputs: RelativeInputs,
    pub c1: f64,
    pub c2: f64,
    pub phi: f64,
    pub gamma_terms: [f64; 7],
    /// `Π`, the supremum of admissible `γ`.
    pub gamma_max: f64,
    pub gamma_binding: String,
    pub gamma: f64,
    pub eta_terms: [f64; 6],
    pub eta_max: f64,
    pub eta_binding: String,
    pub eta: f64,
    pub delta: f64,
    pub constants: DescentConstants,
}

/// Constants of the one-step descent inequality at a given `(η, γ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescentConstants {
    pub eta: f64,
    pub gamma: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub eps3: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub theta3: f64,
    pub theta5: f64,
    pub theta6: f64,
    pub theta7: f64,
    pub theta8: f64,
    pub theta9: f64,
    /// `ξ₁ … ξ₁₂`.
    pub xi: [f64; 12],
}

impl DescentConstants {
    /// `θ₄ = min{θ₃, 2νθ₂}`.
    pub fn theta4(&self, nu: f64) -> f64 {
        self.theta3.min(2.0 * nu * self.theta2)
    }
}

pub fn t1_gamma_terms(c1: f64, c2: f64, sigma: f64, l_f: f64, c: f64) -> [f64; 7] {
    let gap = 1.0 - sigma;
    let sc = c.sqrt();
    [
        gap / (160.0 * (1.0 + 1.0 / c1)),
        gap / (40000.0 * (1.0 + 1.0 / c2) * l_f * l_f),
        over_c(c1 * gap, 40.0 * c),
        over_c(c1, 8.0 * sc),
        over_c(c1, 10.0 * l_f * (c * (1.0 + 1.0 / c2)).sqrt()),
        over_c(c2 * l_f * l_f, c),
        over_c(c2, 10.0 * sc),
    ]
}

pub fn t1_eta_terms(c1: f64, c2: f64, sigma: f64, l_f: f64, gamma: f64) -> [f64; 6] {
    let gap = 1.0 - sigma;
    let a1 = 1.0 + 1.0 / c1;
    let a2 = 1.0 + 1.0 / c2;
    [
        gap * gap * gamma / (40.0 * l_f),
        0.4 * gap * gamma / (l_f * l_f),
        gap * gap / (80.0 * l_f) * (gamma / a1).sqrt(),
        9.0 / (40.0 * (4.0 * a1 + 5.0 * a2)),
        1.0 / (2.0 * l_f),
        gamma,
    ]
}

/// Descent constants at `(η, γ)` for compressor constants `(c₁, c₂, C)`.
pub fn descent_constants(inp: &RelativeInputs, eta: f64, gamma: f64) -> DescentConstants {
    let (sigma, l, c) = (inp.sigma, inp.l_f, inp.c);
    let (c1, c2) = (inp.c1(), inp.c2());
    let gap = 1.0 - sigma;
    let l2 = l * l;
    let phi = phi_weight(sigma, l);
    let dlt = delta(sigma, gamma);
    let a1 = 1.0 + 1.0 / c1;
    let a2 = 1.0 + 1.0 / c2;
    let mix = 8.0 * gamma * gamma + 2.0 * eta * eta * l2;

    let eps1 = 8.0 * l2 / (gap * gamma) * eta * eta;
    let eps2 = 4.0 * a1 * eta * eta;
    let eps3 = 5.0 * a2 * eta * eta;
    let theta2 = eta / 4.0 - (phi * eps1 + eps2 + eps3);
    let theta3 = (0.07 * gap * gamma).min(0.44 * c1 * (2.0 * c1 + 1.0)).min(0.77 * c2 * (2.0 * c2 + 1.0));

    let xi1 = 8.0 * l2 / (gap * gamma) * mix;
    let xi2 = 4.0 * mix * a1;
    let xi7 = 5.0 * a2 * mix;
    let xi3 = xi7 * l2;
    let xi4 = 2.0 * eta * eta / (gamma * gap);
    let xi5 = dlt + 8.0 * l2 / (gap * gamma) * eta * eta;
    let xi6 = 4.0 * a1 * eta * eta;
    let xi8 = 8.0 * gamma / gap * c;
    let xi9 = 32.0 * l2 / gap * gamma * c;
    let xi10 = 16.0 * gamma * gamma * a1 * c + (1.0 - c1 - 2.0 * c1 * c1);
    let xi11 = 5.0 * a2 * 4.0 * gamma * gamma * l2 * c;
    let xi12 = 20.0 * gamma * gamma * a2 * c + (1.0 - c2 - 2.0 * c2 * c2);

    DescentConstants {
        eta,
        gamma,
        eps1,
        eps2,
        eps3,
        theta1: theta2.min(theta3),
        theta2,
        theta3,
        theta5: dlt + phi * xi1 + xi2 + xi3 + eta * l2 / 2.0,
        theta6: xi4 + phi * xi5 + xi6 + xi7,
        theta7: xi8 + phi * xi9 + xi10 + xi11,
        theta8: phi * xi8 + xi12,
        theta9: eta / 4.0 * (1.0 - 2.0 * eta * l),
        xi: [xi1, xi2, xi3, xi4, xi5, xi6, xi7, xi8, xi9, xi10, xi11, xi12],
    }
}

pub fn bounds_theorem1(inp: &RelativeInputs) -> Result<Theorem1> {
    inp.validate(true)?;
    theorem1_unchecked(inp)
}

fn theorem1_unchecked(inp: &RelativeInputs) -> Result<Theorem1> {
    let (c1, c2) = (inp.c1(), inp.c2());
    let gamma_terms = t1_gamma_terms(c1, c2, inp.sigma, inp.l_f, inp.c);
    let (gi, gamma_max) = argmin(&gamma_terms);
    check_positive(gamma_max, T1_GAMMA_TERMS[gi], || "gamma upper bound".into())?;
    let gamma = gamma_max / 2.0;
    let eta_terms = t1_eta_terms(c1, c2, inp.sigma, inp.l_f, gamma);
    let (ei, eta_max) = argmin(&eta_terms);
    check_positive(eta_max, T1_ETA_TERMS[ei], || "eta upper bound".into())?;
    let eta = eta_max / 2.0;
    Ok(Theorem1 {
        inputs: *inp,
        c1,
        c2,
        phi: phi_weight(inp.sigma, inp.l_f),
        gamma_terms,
        gamma_max,
        gamma_binding: T1_GAMMA_TERMS[gi].into(),
        gamma,
        eta_terms,
        eta_max,
        eta_binding: T1_ETA_TERMS[ei].into(),
        eta,
        delta: delta(inp.sigma, gamma),
        constants: descent_constants(inp, eta, gamma),
    })
}

impl Theorem1 {
    /// Largest admissible `η` at a given `γ`.
    pub fn eta_max_at(&self, gamma: f64) -> f64 {
        argmin(&t1_eta_terms(self.c1, self.c2, self.inputs.sigma, self.inputs.l_f, gamma)).1
    }

    /// Whether `(η, γ)` lies inside the open region.
    pub fn admits(&self, eta: f64, gamma: f64) -> bool {
        gamma > 0.0 && gamma < self.gamma_max && eta > 0.0 && eta < self.eta_max_at(gamma)
    }

    pub fn table(&self) -> Vec<NamedConstant> {
        let mut t = vec![
            nc("c1", "phi_x psi r/2", self.c1),
            nc("c2", "phi_y psi r/2", self.c2),
            nc("phi", "(1-sigma)^2/(320L^2)", self.phi),
        ];
        for (name, v) in T1_GAMMA_TERMS.iter().zip(self.gamma_terms) {
            t.push(nc("gamma_term", name, v));
        }
        t.push(nc("gamma_max", "min of gamma terms (Pi)", self.gamma_max));
        t.push(nc("gamma", "gamma_max/2", self.gamma));
        for (name, v) in T1_ETA_TERMS.iter().zip(self.eta_terms) {
            t.push(nc("eta_term", name, v));
        }
        t.push(nc("eta_max", "min of eta terms at gamma", self.eta_max));
        t.push(nc("eta", "eta_max/2", self.eta));
        t.push(nc("delta", "1-gamma(1-sigma)", self.delta));
        t.extend(self.constants.table());
        t
    }
}

impl DescentConstants {
    pub fn table(&self) -> Vec<NamedConstant> {
        let mut t = vec![
            nc("eps1", "8L^2 eta^2/((1-sigma)gamma)", self.eps1),
            nc("eps2", "4(1+1/c1)eta^2", self.eps2),
            nc("eps3", "5(1+1/c2)eta^2", self.eps3),
            nc("theta1", "min{theta2, theta3}", self.theta1),
            nc("theta2", "eta/4-(phi eps1+eps2+eps3)", self.theta2),
            nc("theta3", "min{0.07(1-sigma)gamma, 0.44c1(2c1+1), 0.77c2(2c2+1)}", self.theta3),
            nc("theta5", "delta+phi xi1+xi2+xi3+eta L^2/2", self.theta5),
            nc("theta6", "xi4+phi xi5+xi6+xi7", self.theta6),
            nc("theta7", "xi8+phi xi9+xi10+xi11", self.theta7),
            nc("theta8", "phi xi8+xi12", self.theta8),
            nc("theta9", "eta/4 (1-2 eta L)", self.theta9),
        ];
        const XI: [&str; 12] = [
            "8L^2/((1-sigma)gamma)(8gamma^2+2eta^2L^2)",
            "4(8gamma^2+2eta^2L^2)(1+1/c1)",
            "xi7 L^2",
            "2eta^2/(gamma(1-sigma))",
            "delta+8L^2 eta^2/((1-sigma)gamma)",
            "4(1+1/c1)eta^2",
            "5(1+1/c2)(8gamma^2+2eta^2L^2)",
            "8 gamma C/(1-sigma)",
            "32L^2 gamma C/(1-sigma)",
            "16gamma^2(1+1/c1)C+(1-c1-2c1^2)",
            "20(1+1/c2)gamma^2 L^2 C",
            "20gamma^2(1+1/c2)C+(1-c2-2c2^2)",
        ];
        for (i, (f, v)) in XI.iter().zip(self.xi).enumerate() {
            t.push(nc(&format!("xi{}", i + 1), f, v));
        }
        t
    }
}

pub const T3_GAMMA_TERMS: [&str; 10] = [
    "c1(1-sigma)/(160C)",
    "c1/(16 sqrt(C))",
    "c1/(20 L sqrt(C(1+1/c2)))",
    "c2 L^2/(4C)",
    "c2/(20 sqrt(C))",
    "1/(4(1+1/c1)+5(1+1/c2)L^2)",
    "(1-sigma)phi_hat/(4(16(1+4 phi L^2)+8(1-sigma)))",
    "1/(5(1+1/c2))",
    "(1-sigma)phi_hat/(32(2phi+(1-sigma)))",
    "Pi",
];

/// Region for Algorithm 2 (error feedback).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem3 {
    pub base: Theorem1,
    pub phi_hat: f64,
    pub c_phi_hat: f64,
    pub gamma_terms: [f64; 10],
    pub gamma_max: f64,
    pub gamma_binding: String,
    pub gamma: f64,
    pub eta_max: f64,
    pub eta: f64,
    pub varsigma_max: f64,
    pub varsigma: f64,
    pub constants: DescentConstants,
    pub theta_hat1: f64,
    pub theta_hat2: f64,
    pub theta_hat4: f64,
    pub theta_hat5: f64,
    pub theta_hat6: f64,
    pub theta_hat7: f64,
    /// `ξ̂₁ … ξ̂₇`.
    pub xi_hat: [f64; 7],
}

impl Theorem3 {
    /// `θ̂₃ = min{θ̂₂, 2νθ₂}`.
    pub fn theta_hat3(&self, nu: f64) -> f64 {
        self.theta_hat2.min(2.0 * nu * self.constants.theta2)
    }

    pub fn table(&self) -> Vec<NamedConstant> {
        let mut t = vec![
            nc("phi_hat", "(0.1/C)min{c1(2c1+1), c2(2c2+1)}", self.phi_hat),
            nc("C phi_hat", "0.1 min{c1(2c1+1), c2(2c2+1)}", self.c_phi_hat),
        ];
        for (name, v) in T3_GAMMA_TERMS.iter().zip(self.gamma_terms) {
            t.push(nc("gamma_term", name, v));
        }
        t.extend([
            nc("gamma_max", "min of gamma terms", self.gamma_max),
            nc("gamma", "gamma_max/2", self.gamma),
            nc("eta_max", "min of first-region eta terms at gamma", self.eta_max),
            nc("eta", "eta_max/2", self.eta),
            nc("varsigma_max", "min{1/(2 sqrt(C)), 1/sqrt(2C+1)}", self.varsigma_max),
            nc("varsigma", "varsigma_max/2", self.varsigma),
            nc("theta_hat1", "min{theta2, theta_hat2}", self.theta_hat1),
            nc("theta_hat2", "min{0.07(1-sigma)gamma, 0.24c1(2c1+1), 0.57c2(2c2+1), 0.25}", self.theta_hat2),
            nc("theta_hat4", "4xi8+4phi xi9+xi_hat3+4xi11+2C phi_hat", self.theta_hat4),
            nc("theta_hat5", "4phi xi8+xi_hat5+2C phi_hat", self.theta_hat5),
            nc("theta_hat6", "xi_hat1+phi xi_hat2+xi_hat4+xi_hat6+2C phi_hat varsigma^2", self.theta_hat6),
            nc("theta_hat7", "phi xi_hat1+xi_hat7+2C phi_hat varsigma^2", self.theta_hat7),
        ]);
        const XI: [&str; 7] = [
            "8gamma/(1-sigma) 2varsigma^2(2C+1)",
            "8L^2/((1-sigma)gamma) 4gamma^2 2varsigma^2(2C+1)",
            "64gamma^2(1+1/c1)C+(1-c1-2c1^2)",
            "16gamma^2(1+1/c1) 2varsigma^2(2C+1)",
            "80gamma^2(1+1/c2)C+(1-c2-2c2^2)",
            "L^2 xi_hat7",
            "20(1+1/c2)gamma^2 2varsigma^2(2C+1)",
        ];
        for (i, (f, v)) in XI.iter().zip(self.xi_hat).enumerate() {
            t.push(nc(&format!("xi_hat{}", i + 1), f, v));
        }
        t.extend(self.constants.table());
        t
    }
}

pub fn varsigma_max(c: f64) -> f64 {
    over_c(1.0, 2.0 * c.sqrt()).min(1.0 / (2.0 * c + 1.0).sqrt())
}

pub fn bounds_theorem3(inp: &RelativeInputs) -> Result<Theorem3> {
    let base = bounds_theorem1(inp)?;
    let (c1, c2, c, sigma, l) = (base.c1, base.c2, inp.c, inp.sigma, inp.l_f);
    let gap = 1.0 - sigma;
    let l2 = l * l;
    let phi = base.phi;
    let cph = c_phi_hat(c1, c2);
    let ph = phi_hat(c1, c2, c);
    let a1 = 1.0 + 1.0 / c1;
    let a2 = 1.0 + 1.0 / c2;
    let sc = c.sqrt();
    let gamma_terms = [
        over_c(c1 * gap, 160.0 * c),
        over_c(c1, 16.0 * sc),
        over_c(c1, 20.0 * l * (c * a2).sqrt()),
        over_c(c2 * l2, 4.0 * c),
        over_c(c2, 20.0 * sc),
        1.0 / (4.0 * a1 + 5.0 * a2 * l2),
        gap * ph / (4.0 * (16.0 * (1.0 + 4.0 * phi * l2) + 8.0 * gap)),
        1.0 / (5.0 * a2),
        gap * ph / (32.0 * (2.0 * phi + gap)),
        base.gamma_max,
    ];
    let (gi, gamma_max) = argmin(&gamma_terms);
    check_positive(gamma_max, T3_GAMMA_TERMS[gi], || "gamma upper bound".into())?;
    let gamma = gamma_max / 2.0;
    let eta_max = base.eta_max_at(gamma);
    check_positive(eta_max, "eta upper bound", || "first-region eta list at gamma".into())?;
    let eta = eta_max / 2.0;
    let vs_max = varsigma_max(c);
    let vs = vs_max / 2.0;
    let constants = descent_constants(inp, eta, gamma);
    let hat = theorem3_hats(inp, &constants, vs);
    let theta_hat2 = (0.07 * gap * gamma)
        .min(0.24 * c1 * (2.0 * c1 + 1.0))
        .min(0.57 * c2 * (2.0 * c2 + 1.0))
        .min(0.25);
    Ok(Theorem3 {
        base,
        phi_hat: ph,
        c_phi_hat: cph,
        gamma_terms,
        gamma_max,
        gamma_binding: T3_GAMMA_TERMS[gi].into(),
        gamma,
        eta_max,
        eta,
        varsigma_max: vs_max,
        varsigma: vs,
        theta_hat1: constants.theta2.min(theta_hat2),
        theta_hat2,
        theta_hat4: hat.0[0],
        theta_hat5: hat.0[1],
        theta_hat6: hat.0[2],
        theta_hat7: hat.0[3],
        xi_hat: hat.1,
        constants,
    })
}

/// `([θ̂₄, θ̂₅, θ̂₆, θ̂₇], [ξ̂₁ … ξ̂₇])` at the constants' `(η, γ)` and `ς`.
pub fn theorem3_hats(inp: &RelativeInputs, k: &DescentConstants, varsigma: f64) -> ([f64; 4], [f64; 7]) {
    let (c1, c2, c, sigma, l) = (inp.c1(), inp.c2(), inp.c, inp.sigma, inp.l_f);
    let gap = 1.0 - sigma;
    let l2 = l * l;
    let g = k.gamma;
    let phi = phi_weight(sigma, l);
    let cph = c_phi_hat(c1, c2);
    let a1 = 1.0 + 1.0 / c1;
    let a2 = 1.0 + 1.0 / c2;
    let ef = 2.0 * varsigma * varsigma * (2.0 * c + 1.0);
    let xh1 = 8.0 * g / gap * ef;
    let xh2 = 8.0 * l2 / (gap * g) * 4.0 * g * g * ef;
    let xh3 = 64.0 * g * g * a1 * c + (1.0 - c1 - 2.0 * c1 * c1);
    let xh4 = 16.0 * g * g * a1 * ef;
    let xh5 = 80.0 * g * g * a2 * c + (1.0 - c2 - 2.0 * c2 * c2);
    let xh7 = 5.0 * a2 * 4.0 * g * g * ef;
    let xh6 = l2 * xh7;
    let [_, _, _, _, _, _, _, xi8, xi9, _, xi11, _] = k.xi;
    let th4 = 4.0 * xi8 + 4.0 * phi * xi9 + xh3 + 4.0 * xi11 + 2.0 * cph;
    let th5 = 4.0 * phi * xi8 + xh5 + 2.0 * cph;
    let th6 = xh1 + phi * xh2 + xh4 + xh6 + 2.0 * cph * varsigma * varsigma;
    let th7 = phi * xh1 + xh7 + 2.0 * cph * varsigma * varsigma;
    ([th4, th5, th6, th7], [xh1, xh2, xh3, xh4, xh5, xh6, xh7])
}

/// Constants for Algorithm 3 with a globally bounded absolute-error compressor.
///
/// The `(η, γ)` region is the first one evaluated in the exact-compressor limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem5 {
    pub region: Theorem1,
    pub n: usize,
    pub c_abs: f64,
    pub d_tilde: f64,
    pub s0: f64,
    pub mu: f64,
    pub xi8: f64,
    pub theta_b1: f64,
    pub theta_b2: f64,
    pub theta_b3: f64,
    pub theta_b4: f64,
    pub theta_b8: f64,
}

impl Theorem5 {
    /// Additive slack in the one-step bound: `2n d̃² ξ₈ s²(k)(1+2L²)`.
    pub fn slack(&self, k: usize) -> f64 {
        self.theta_b8 * (self.s0 * self.mu.powf(k as f64)).powi(2)
    }

    /// Right-hand side of the summed bound, `(Ŭ(0) + θ̆₂/(1−μ²)) / θ̆₁`.
    pub fn sum_bound(&self, u0: f64) -> f64 {
        (u0 + self.theta_b2 / (1.0 - self.mu * self.mu)) / self.theta_b1
    }

    /// `(θ̆₅, θ̆₆, θ̆₇)` for the linear-rate bound under a P–Ł constant `ν`.
    pub fn linear_rate(&self, nu: f64, u0: f64) -> (f64, f64, f64) {
        let t7 = self.theta_b1.min(2.0 * nu * self.region.constants.theta2);
        let mu2 = self.mu * self.mu;
        let t5 = t7.min(1.0 - mu2);
        let lead = self.theta_b8 * self.s0 * self.s0;
        let t6 = if 1.0 - t7 < mu2 {
            let t9 = (1.0 - t7) / mu2;
            u0 + lead / ((1.0 - t9) * mu2)
        } else if 1.0 - t7 > mu2 {
            let t10 = mu2 / (1.0 - t7);
            u0 + lead / ((1.0 - t10) * (1.0 - t7))
        } else {
            let varpi = (mu2 + 1.0) / 2.0;
            let t11 = mu2 / varpi;
            u0 + lead / ((1.0 - t11) * varpi)
        };
        (t5, t6, t7)
    }

    pub fn table(&self) -> Vec<NamedConstant> {
        let mut t = vec![
            nc("d_tilde", "||v||_2 <= d_tilde ||v||_p", self.d_tilde),
            nc("xi8", "8 gamma C/(1-sigma)", self.xi8),
            nc("theta_b1", "min{theta_b3, theta_b4}", self.theta_b1),
            nc("theta_b2", "2n d_tilde^2 xi8 s0^2 (1+2L^2)", self.theta_b2),
            nc("theta_b3", "0.59(1-sigma)gamma", self.theta_b3),
            nc("theta_b4", "eta/4-phi eps1", self.theta_b4),
            nc("theta_b8", "2n d_tilde^2 xi8 (1+2L^2)", self.theta_b8),
            nc("s0", "initial scaling", self.s0),
            nc("mu", "scaling decay", self.mu),
        ];
        t.extend(self.region.table());
        t
    }
}

pub fn bounds_theorem5(
    sigma: f64,
    l_f: f64,
    n: usize,
    d: usize,
    p: PNorm,
    c_abs: f64,
    s0: f64,
    mu: f64,
) -> Result<Theorem5> {
    if !(c_abs >= 0.0) {
        return Err(Error::InvalidParameter(format!("C must be nonnegative, got {c_abs}")));
    }
    if !(s0 > 0.0) || !(mu > 0.0 && mu < 1.0) {
        return Err(Error::InvalidParameter("need s0 > 0 and mu in (0,1)".into()));
    }
    let inp = RelativeInputs::exact_limit(sigma, l_f);
    inp.validate(false)?;
    let region = theorem1_unchecked(&inp)?;
    let k = &region.constants;
    let (_, d_tilde) = norm_constants(p, d);
    let gap = 1.0 - sigma;
    let xi8 = 8.0 * k.gamma * c_abs / gap;
    let theta_b8 = 2.0 * n as f64 * d_tilde * d_tilde * xi8 * (1.0 + 2.0 * l_f * l_f);
    let theta_b3 = 0.59 * gap * k.gamma;
    let theta_b4 = k.eta / 4.0 - region.phi * k.eps1;
    Ok(Theorem5 {
        n,
        c_abs,
        d_tilde,
        s0,
        mu,
        xi8,
        theta_b1: theta_b3.min(theta_b4),
        theta_b2: theta_b8 * s0 * s0,
        theta_b3,
        theta_b4,
        theta_b8,
        region,
    })
}

/// Constants for Algorithm 3 with a locally bounded absolute-error compressor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem7 {
    pub sigma: f64,
    pub l_f: f64,
    pub nu: f64,
    pub n: usize,
    pub phi_c: f64,
    pub kappa: f64,
    pub d_hat: f64,
    pub d_tilde: f64,
    pub phi: f64,
    pub theta_t2: f64,
    pub theta_t4: f64,
    /// `ξ̃₁ … ξ̃₉`.
    pub xi_t: [f64; 9],
    pub eta_terms: [f64; 4],
    pub eta_max: f64,
    pub eta: f64,
    pub gamma_terms: [f64; 3],
    pub gamma_max: f64,
    pub gamma: f64,
    pub theta_t1: f64,
    pub theta_t3: f64,
    pub phi_tilde: f64,
    pub mu_min: f64,
    pub mu: f64,
    pub s0_min: f64,
    pub s0: f64,
}

pub const T7_ETA_TERMS: [&str; 4] =
    ["(1-sigma)^2 gamma/(40L)", "kappa/(2 xi_t1)", "kappa/(2 xi_t2)", "1"];
pub const T7_GAMMA_TERMS: [&str; 3] = ["sqrt(kappa/(2 xi_t3))", "sqrt(kappa/(2 xi_t4))", "2L^2/((1-sigma)nu)"];

/// Initial-state summary needed for the scaling bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialNorms {
    /// `Ŭ(0)` without the optimality weight: `‖X−X̄‖² + φ‖Y−Ȳ‖²`.
    pub v_breve0: f64,
    /// `n(F(X̄(0)) − F★)`.
    pub opt_gap0: f64,
    pub max_x_p: f64,
    pub max_y_p: f64,
}

impl Theorem7 {
    /// `ξ̃₅`.
    pub fn xi5(&self) -> f64 {
        self.xi_t[4]
    }

    pub fn table(&self) -> Vec<NamedConstant> {
        let mut t = vec![
            nc("kappa", "phi_c+phi_c^2-phi_c^3", self.kappa),
            nc("d_hat", "||v||_p <= d_hat ||v||_2", self.d_hat),
            nc("d_tilde", "||v||_2 <= d_tilde ||v||_p", self.d_tilde),
            nc("phi", "(1-sigma)^2/(320L^2)", self.phi),
            nc("theta_t2", "2(1+2L^2) 8n d_tilde^2 (1-phi_c)^2/(1-sigma)", self.theta_t2),
            nc("theta_t4", "min{0.59(1-sigma), 48 nu phi/(1-sigma)}", self.theta_t4),
        ];
        const XI: [&str; 9] = [
            "4 d_hat^2 (5+4L^2)(1+1/phi_c) xi_t5",
            "10L^2(3+2L^2)(1+1/phi_c) xi_t5",
            "xi_t8 (1-phi_c)^2+32 d_hat^2 (1+1/phi_c) xi_t5",
            "xi_t9 (1+L^2)(1-phi_c)^2+40 d_hat^2 (1+L^2)(1+1/phi_c) xi_t5",
            "2 theta_t2/theta_t4 (1 when theta_t2 = 0)",
            "1-kappa+eta xi_t1+gamma^2 xi_t3",
            "1-kappa+eta xi_t2+gamma^2 xi_t4",
            "16n d_hat^2 d_tilde^2 (1+1/phi_c)",
            "20n d_hat^2 d_tilde^2 (1+1/phi_c)",
        ];
        for (i, (f, v)) in XI.iter().zip(self.xi_t).enumerate() {
            t.push(nc(&format!("xi_t{}", i + 1), f, v));
        }
        for (f, v) in T7_ETA_TERMS.iter().zip(self.eta_terms) {
            t.push(nc("eta_term", f, v));
        }
        for (f, v) in T7_GAMMA_TERMS.iter().zip(self.gamma_terms) {
            t.push(nc("gamma_term", f, v));
        }
        t.extend([
            nc("eta_max", "min of eta terms", self.eta_max),
            nc("eta", "eta_max/2", self.eta),
            nc("gamma_max", "min of gamma terms", self.gamma_max),
            nc("gamma", "gamma_max/2", self.gamma),
            nc("theta_t3", "theta_t4 gamma", self.theta_t3),
            nc("theta_t1", "1-theta_t3+theta_t2 gamma/xi_t5", self.theta_t1),
            nc("phi_tilde", "0.4 gamma(1-sigma)/(eta L^2)", self.phi_tilde),
            nc("mu_min", "max{sqrt(theta_t1), sqrt(xi_t6), sqrt(xi_t7)}", self.mu_min),
            nc("s0_min", "max{sqrt(U_tilde(0)/xi_t5), max||X_i(0)||_p, max||Y_i(0)||_p}", self.s0_min),
        ]);
        t
    }
}

pub fn bounds_theorem7(
    sigma: f64,
    l_f: f64,
    nu: f64,
    n: usize,
    d: usize,
    p: PNorm,
    phi_c: f64,
    init: &InitialNorms,
) -> Result<Theorem7> {
    if !(sigma > 0.0 && sigma < 1.0) || !(l_f > 0.0) {
        return Err(Error::InvalidParameter("need sigma in (0,1) and L_f > 0".into()));
    }
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(Error::InvalidParameter(format!("P-L constant must be positive, got {nu}")));
    }
    if !(phi_c > 0.0 && phi_c <= 1.0) {
        return Err(Error::InvalidParameter(format!("phi_c must lie in (0,1], got {phi_c}")));
    }
    let gap = 1.0 - sigma;
    let l2 = l_f * l_f;
    let nf = n as f64;
    let (d_hat, d_tilde) = norm_constants(p, d);
    let (dh2, dt2) = (d_hat * d_hat, d_tilde * d_tilde);
    let phi = phi_weight(sigma, l_f);
    let kappa = phi_c + phi_c * phi_c - phi_c.powi(3);
    let inv = 1.0 + 1.0 / phi_c;
    let om2 = (1.0 - phi_c).powi(2);

    let theta_t2 = 2.0 * (1.0 + 2.0 * l2) * 8.0 * nf * dt2 * om2 / gap;
    let theta_t4 = (0.59 * gap).min(48.0 * nu * phi / gap);
    let xi5 = if theta_t2 > 0.0 { 2.0 * theta_t2 / theta_t4 } else { 1.0 };
    let xi8 = 16.0 * nf * dh2 * dt2 * inv;
    let xi9 = 20.0 * nf * dh2 * dt2 * inv;
    let xi1 = 4.0 * dh2 * (5.0 + 4.0 * l2) * inv * xi5;
    let xi2 = 10.0 * l2 * (3.0 + 2.0 * l2) * inv * xi5;
    let xi3 = xi8 * om2 + 32.0 * dh2 * inv * xi5;
    let xi4 = xi9 * (1.0 + l2) * om2 + 40.0 * dh2 * (1.0 + l2) * inv * xi5;

    let gamma_terms = [(kappa / (2.0 * xi3)).sqrt(), (kappa / (2.0 * xi4)).sqrt(), 2.0 * l2 / (gap * nu)];
    let (gi, gamma_max) = argmin(&gamma_terms);
    check_positive(gamma_max, T7_GAMMA_TERMS[gi], || "gamma upper bound".into())?;
    let gamma = gamma_max / 2.0;
    let eta_terms = [gap * gap * gamma / (40.0 * l_f), kappa / (2.0 * xi1), kappa / (2.0 * xi2), 1.0];
    let (ei, eta_max) = argmin(&eta_terms);
    check_positive(eta_max, T7_ETA_TERMS[ei], || "eta upper bound".into())?;
    let eta = eta_max / 2.0;

    let xi6 = 1.0 - kappa + eta * xi1 + gamma * gamma * xi3;
    let xi7 = 1.0 - kappa + eta * xi2 + gamma * gamma * xi4;
    let theta_t3 = theta_t4 * gamma;
    let theta_t1 = 1.0 - theta_t3 + theta_t2 / xi5 * gamma;
    for (name, v) in [("xi_t6", xi6), ("xi_t7", xi7), ("theta_t1", theta_t1)] {
        check_positive(v, name, || "must be positive for mu_min".into())?;
    }
    let cands = [theta_t1.sqrt(), xi6.sqrt(), xi7.sqrt()];
    let (mi, mu_min) = cands.iter().copied().enumerate().fold((0, 0.0), |b, (i, v)| if v > b.1 { (i, v) } else { b });
    if !(mu_min < 1.0) {
        let names = ["sqrt(theta_t1)", "sqrt(xi_t6)", "sqrt(xi_t7)"];
        return Err(Error::Infeasible {
            constraint: names[mi].into(),
            detail: format!("mu_min = {mu_min} is not below 1"),
        });
    }
    let phi_t = phi_tilde(sigma, l_f, eta, gamma);
    let u_tilde0 = init.v_breve0 + phi_t * init.opt_gap0.max(0.0);
    let s0_min = (u_tilde0 / xi5).sqrt().max(init.max_x_p).max(init.max_y_p);
    check_positive(s0_min, "s0_min", || "initial state is identically zero".into())?;

    Ok(Theorem7 {
        sigma,
        l_f,
        nu,
        n,
        phi_c,
        kappa,
        d_hat,
        d_tilde,
        phi,
        theta_t2,
        theta_t4,
        xi_t: [xi1, xi2, xi3, xi4, xi5, xi6, xi7, xi8, xi9],
        eta_terms,
        eta_max,
        eta,
        gamma_terms,
        gamma_max,
        gamma,
        theta_t1,
        theta_t3,
        phi_tilde: phi_t,
        mu_min,
        mu: mu_min,
        s0_min,
        s0: s0_min,
    })
}
