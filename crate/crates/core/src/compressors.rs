//! Compression operators and their assumption constants.
//!
//! Three classes are modelled:
//!
//! * relative error: `E‖C(x)/r − x‖² ≤ (1−ψ)‖x‖²`, with derived `C = 2r²(1−ψ) + 2(1−r)²`;
//! * global absolute error: `E‖C(x) − x‖_p² ≤ C` for every `x`;
//! * local absolute error: `‖C(x) − x‖_p ≤ 1 − φ_c` whenever `‖x‖_p ≤ 1`.

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{norm, norm_inf, norm_p, norm_sq, PNorm};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CompressorKind {
    NormSign,
    UniformQuantize { delta: f64 },
    OneBitBinary,
    Identity,
    /// Keep the `k` largest-magnitude entries.
    TopK { k: usize },
    /// Keep `k` uniformly random entries, rescaled by `d/k`.
    RandomSparsify { k: usize },
    /// Unbiased stochastic quantization onto `levels` magnitude levels.
    RandomQuantize { levels: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum AssumptionClass {
    RelativeBounded { r: f64, psi: f64, c: f64 },
    GlobalAbsolute { p: PNorm, c: f64 },
    LocalAbsolute { p: PNorm, phi_c: f64 },
}

/// Derived constant `C = 2r²(1−ψ) + 2(1−r)²`.
pub fn relative_c(r: f64, psi: f64) -> f64 {
    2.0 * r * r * (1.0 - psi) + 2.0 * (1.0 - r) * (1.0 - r)
}

/// Bits per full-precision scalar (`b_C`) and per quantized integer (`b_Q`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BitCostModel {
    #[serde(default = "default_bits_scalar")]
    pub bits_scalar: u64,
    #[serde(default = "default_bits_int")]
    pub bits_int: u64,
}

fn default_bits_scalar() -> u64 {
    64
}

fn default_bits_int() -> u64 {
    4
}

impl Default for BitCostModel {
    fn default() -> Self {
        Self { bits_scalar: 64, bits_int: 4 }
    }
}

impl BitCostModel {
    pub fn validate(&self) -> Result<()> {
        if self.bits_scalar == 0 || self.bits_int == 0 {
            return Err(Error::InvalidParameter("bit widths must be at least 1".into()));
        }
        Ok(())
    }

    /// Cost of one uncompressed `d`-vector.
    pub fn full_vector(&self, d: usize) -> u64 {
        d as u64 * self.bits_scalar
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompressorSpec {
    pub kind: CompressorKind,
    pub class: AssumptionClass,
}

fn ceil_log2(x: usize) -> u64 {
    if x <= 1 {
        0
    } else {
        (usize::BITS - (x - 1).leading_zeros()) as u64
    }
}

impl CompressorSpec {
    /// Spec with the default constants for dimension `d`.
    pub fn new(kind: CompressorKind, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        let df = d as f64;
        let rel = |r: f64, psi: f64| AssumptionClass::RelativeBounded { r, psi, c: relative_c(r, psi) };
        let class = match kind {
            CompressorKind::NormSign => rel(df / 2.0, 1.0 / (df * df)),
            CompressorKind::Identity => rel(1.0, 1.0),
            CompressorKind::TopK { k } => {
                check_k(k, d)?;
                rel(1.0, k as f64 / df)
            }
            CompressorKind::RandomSparsify { k } => {
                check_k(k, d)?;
                rel(df / k as f64, k as f64 / df)
            }
            CompressorKind::RandomQuantize { levels } => {
                if levels == 0 {
                    return Err(Error::InvalidParameter("levels must be positive".into()));
                }
                let s = levels as f64;
                let omega = (df / (s * s)).min(df.sqrt() / s);
                rel(1.0 + omega, 1.0 / (1.0 + omega))
            }
            CompressorKind::UniformQuantize { delta } => {
                if !(delta > 0.0 && delta.is_finite()) {
                    return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
                }
                AssumptionClass::GlobalAbsolute { p: PNorm::Inf, c: 0.25 * delta * delta }
            }
            CompressorKind::OneBitBinary => AssumptionClass::LocalAbsolute { p: PNorm::Inf, phi_c: 0.5 },
        };
        Ok(Self { kind, class })
    }

    pub fn identity() -> Self {
        Self {
            kind: CompressorKind::Identity,
            class: AssumptionClass::RelativeBounded { r: 1.0, psi: 1.0, c: 0.0 },
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.class {
            AssumptionClass::RelativeBounded { r, psi, c } => {
                if !(r > 0.0) || !(psi > 0.0 && psi <= 1.0) {
                    return Err(Error::InvalidParameter(format!("need r > 0 and psi in (0,1], got r={r}, psi={psi}")));
                }
                let want = relative_c(r, psi);
                if (c - want).abs() > 1e-12 * want.max(1.0) {
                    return Err(Error::InvalidParameter(format!("stored C={c} differs from derived {want}")));
                }
            }
            AssumptionClass::GlobalAbsolute { c, .. } => {
                if !(c >= 0.0) {
                    return Err(Error::InvalidParameter(format!("C must be nonnegative, got {c}")));
                }
            }
            AssumptionClass::LocalAbsolute { phi_c, .. } => {
                if !(phi_c > 0.0 && phi_c <= 1.0) {
                    return Err(Error::InvalidParameter(format!("phi_c must lie in (0,1], got {phi_c}")));
                }
            }
        }
        Ok(())
    }

    pub fn is_randomized(&self) -> bool {
        matches!(self.kind, CompressorKind::RandomSparsify { .. } | CompressorKind::RandomQuantize { .. })
    }

    pub fn label(&self) -> String {
        match self.kind {
            CompressorKind::NormSign => "norm_sign".into(),
            CompressorKind::UniformQuantize { delta } => format!("uniform_{delta}"),
            CompressorKind::OneBitBinary => "one_bit".into(),
            CompressorKind::Identity => "identity".into(),
            CompressorKind::TopK { k } => format!("top_{k}"),
            CompressorKind::RandomSparsify { k } => format!("rand_{k}"),
            CompressorKind::RandomQuantize { levels } => format!("qsgd_{levels}"),
        }
    }

    /// `(r, ψ, C)` for relative-error specs.
    pub fn relative_constants(&self) -> Option<(f64, f64, f64)> {
        match self.class {
            AssumptionClass::RelativeBounded { r, psi, c } => Some((r, psi, c)),
            _ => None,
        }
    }

    pub fn compress<R: Rng + ?Sized>(&self, x: &[f64], rng: &mut R) -> Result<Vec<f64>> {
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("compress"));
        }
        let d = x.len();
        Ok(match self.kind {
            CompressorKind::Identity => x.to_vec(),
            CompressorKind::NormSign => {
                let half = norm_inf(x) / 2.0;
                x.iter().map(|&v| if v >= 0.0 { half } else { -half }).collect()
            }
            CompressorKind::UniformQuantize { delta } => {
                x.iter().map(|&v| delta * (v / delta + 0.5).floor()).collect()
            }
            CompressorKind::OneBitBinary => x.iter().map(|&v| if v >= 0.0 { 0.5 } else { -0.5 }).collect(),
            CompressorKind::TopK { k } => {
                let mut idx: Vec<usize> = (0..d).collect();
                // Stable order: larger magnitude first, lower index on ties.
                idx.sort_by(|&a, &b| x[b].abs().total_cmp(&x[a].abs()).then(a.cmp(&b)));
                let mut out = vec![0.0; d];
                for &i in idx.iter().take(k.min(d)) {
                    out[i] = x[i];
                }
                out
            }
            CompressorKind::RandomSparsify { k } => {
                let k = k.min(d);
                let scale = d as f64 / k as f64;
                let mut out = vec![0.0; d];
                for i in index::sample(rng, d, k) {
                    out[i] = scale * x[i];
                }
                out
            }
            CompressorKind::RandomQuantize { levels } => {
                let nx = norm(x);
                if nx == 0.0 {
                    return Ok(vec![0.0; d]);
                }
                let s = levels as f64;
                x.iter()
                    .map(|&v| {
                        let a = s * v.abs() / nx;
                        let lo = a.floor();
                        let level = if rng.random::<f64>() < a - lo { lo + 1.0 } else { lo };
                        v.signum() * nx * level / s
                    })
                    .collect()
            }
        })
    }

    /// Payload bits for one transmitted `d`-vector.
    pub fn bit_cost(&self, model: &BitCostModel, d: usize) -> u64 {
        let d64 = d as u64;
        match self.kind {
            CompressorKind::NormSign => 2 * d64 + model.bits_scalar,
            CompressorKind::UniformQuantize { .. } => d64 * model.bits_int,
            CompressorKind::OneBitBinary => d64,
            CompressorKind::Identity => d64 * model.bits_scalar,
            CompressorKind::TopK { k } | CompressorKind::RandomSparsify { k } => {
                k.min(d) as u64 * (model.bits_scalar + ceil_log2(d))
            }
            CompressorKind::RandomQuantize { levels } => {
                model.bits_scalar + d64 * (1 + ceil_log2(levels as usize + 1))
            }
        }
    }
}

fn check_k(k: usize, d: usize) -> Result<()> {
    if k == 0 || k > d {
        return Err(Error::InvalidParameter(format!("keep count must lie in 1..={d}, got {k}")));
    }
    Ok(())
}

/// Human-editable compressor description.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompressorConfig {
    pub kind: String,
    pub delta: Option<f64>,
    pub keep_k: Option<usize>,
    pub levels: Option<u32>,
    pub p_norm: Option<String>,
    pub r: Option<f64>,
    pub psi: Option<f64>,
    pub cap_c: Option<f64>,
    pub phi_c: Option<f64>,
}

impl CompressorConfig {
    pub fn named(kind: &str) -> Self {
        Self { kind: kind.into(), ..Default::default() }
    }

    pub fn resolve(&self, d: usize) -> Result<CompressorSpec> {
        let need = |v: Option<f64>, key: &str| v.ok_or_else(|| Error::Config(format!("compressor `{}` needs `{key}`", self.kind)));
        let kind = match self.kind.as_str() {
            "norm_sign" => CompressorKind::NormSign,
            "uniform_quantize" | "uniform" => CompressorKind::UniformQuantize { delta: need(self.delta, "delta")? },
            "one_bit_binary" | "one_bit" => CompressorKind::OneBitBinary,
            "identity" => CompressorKind::Identity,
            "top_k" => CompressorKind::TopK {
                k: self.keep_k.ok_or_else(|| Error::Config("top_k needs `keep_k`".into()))?,
            },
            "random_sparsify" => CompressorKind::RandomSparsify {
                k: self.keep_k.ok_or_else(|| Error::Config("random_sparsify needs `keep_k`".into()))?,
            },
            "random_quantize" => CompressorKind::RandomQuantize {
                levels: self.levels.ok_or_else(|| Error::Config("random_quantize needs `levels`".into()))?,
            },
            other => return Err(Error::Config(format!("unknown compressor kind `{other}`"))),
        };
        let mut spec = CompressorSpec::new(kind, d).map_err(|e| Error::Config(e.to_string()))?;
        let p_override = match &self.p_norm {
            Some(s) => Some(PNorm::parse(s).ok_or_else(|| Error::Config(format!("unsupported p_norm `{s}`")))?),
            None => None,
        };
        spec.class = match spec.class {
            AssumptionClass::RelativeBounded { r, psi, .. } => {
                if self.cap_c.is_some() || self.phi_c.is_some() || p_override.is_some() {
                    return Err(Error::Config(
                        "relative-error compressors take only `r`/`psi` overrides; C is derived".into(),
                    ));
                }
                let r = self.r.unwrap_or(r);
                let psi = self.psi.unwrap_or(psi);
                AssumptionClass::RelativeBounded { r, psi, c: relative_c(r, psi) }
            }
            AssumptionClass::GlobalAbsolute { p, c } => {
                if self.r.is_some() || self.psi.is_some() || self.phi_c.is_some() {
                    return Err(Error::Config("absolute-error compressors take only `p_norm`/`cap_c` overrides".into()));
                }
                let p = p_override.unwrap_or(p);
                let default_c = match (p, kind) {
                    (PNorm::Two, CompressorKind::UniformQuantize { delta }) => 0.25 * delta * delta * d as f64,
                    _ => c,
                };
                AssumptionClass::GlobalAbsolute { p, c: self.cap_c.unwrap_or(default_c) }
            }
            AssumptionClass::LocalAbsolute { p, phi_c } => {
                if self.r.is_some() || self.psi.is_some() || self.cap_c.is_some() {
                    return Err(Error::Config("local-error compressors take only `p_norm`/`phi_c` overrides".into()));
                }
                AssumptionClass::LocalAbsolute { p: p_override.unwrap_or(p), phi_c: self.phi_c.unwrap_or(phi_c) }
            }
        };
        spec.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(spec)
    }
}

/// Outcome of an empirical assumption check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub label: String,
    pub trials: usize,
    /// Largest observed left-hand side of the assumption inequality.
    pub max_observed: f64,
    /// Right-hand side it was compared with (already including slack).
    pub bound: f64,
    /// `max_observed / bound`, or 0 when both vanish.
    pub max_observed_ratio: f64,
    pub violations: usize,
    pub offending: Option<Vec<f64>>,
    pub pass: bool,
}

const MC_SLACK: f64 = 1.05;
const DET_SLACK: f64 = 1e-12;
const INNER_DRAWS: usize = 1000;
const CONFIRM_DRAWS: usize = 20 * INNER_DRAWS;

fn relative_error_mean<R: Rng + ?Sized>(spec: &CompressorSpec, x: &[f64], r: f64, draws: usize, rng: &mut R) -> Result<f64> {
    let mut acc = 0.0;
    for _ in 0..draws {
        let c = spec.compress(x, rng)?;
        acc += c.iter().zip(x).map(|(ci, xi)| (ci / r - xi).powi(2)).sum::<f64>();
    }
    Ok(acc / draws as f64)
}

fn probe<R: Rng + ?Sized>(t: usize, d: usize, rng: &mut R) -> Vec<f64> {
    let gauss = |rng: &mut R| -> Vec<f64> { (0..d).map(|_| StandardNormal.sample(rng)).collect() };
    match t % 6 {
        0 => {
            let mut v = vec![0.0; d];
            v[rng.random_range(0..d)] = if rng.random::<bool>() { 1.0 } else { -1.0 } * 10f64.powf(rng.random_range(-3.0..3.0));
            v
        }
        1 => vec![rng.random_range(-5.0..5.0); d],
        2 => gauss(rng).into_iter().map(|v| v * 1e-9).collect(),
        3 => gauss(rng).into_iter().map(|v| v * 1e3).collect(),
        _ => gauss(rng),
    }
}

/// Samples inputs and checks the spec's assumption inequality on each.
pub fn verify_assumption<R: Rng + ?Sized>(spec: &CompressorSpec, trials: usize, d: usize, rng: &mut R) -> Result<VerifyReport> {
    if trials < 100 {
        return Err(Error::InvalidParameter(format!("need at least 100 trials, got {trials}")));
    }
    spec.validate()?;
    let inner = if spec.is_randomized() { INNER_DRAWS } else { 1 };
    let slack = if spec.is_randomized() { MC_SLACK } else { 1.0 + DET_SLACK };
    let mut worst = 0.0_f64;
    let mut worst_ratio = 0.0_f64;
    let mut bound_used = 0.0;
    let mut violations = 0;
    let mut offending = None;

    for t in 0..trials {
        let mut x = probe(t, d, rng);
        let (lhs, rhs) = match spec.class {
            AssumptionClass::RelativeBounded { r, psi, .. } => {
                let nx2 = norm_sq(&x);
                if nx2 == 0.0 {
                    continue;
                }
                let rhs = (1.0 - psi) * slack;
                let mut mean = relative_error_mean(spec, &x, r, inner, rng)? / nx2;
                // A Monte Carlo exceedance is confirmed with a larger sample before it counts.
                if spec.is_randomized() && mean > rhs {
                    mean = relative_error_mean(spec, &x, r, CONFIRM_DRAWS, rng)? / nx2;
                }
                (mean, rhs)
            }
            AssumptionClass::GlobalAbsolute { p, c } => {
                let mut worst_draw = 0.0_f64;
                for _ in 0..inner {
                    let cx = spec.compress(&x, rng)?;
                    let e: Vec<f64> = cx.iter().zip(&x).map(|(a, b)| a - b).collect();
                    worst_draw = worst_draw.max(norm_p(&e, p).powi(2));
                }
                (worst_draw, c * slack + DET_SLACK)
            }
            AssumptionClass::LocalAbsolute { p, phi_c } => {
                let nx = norm_p(&x, p);
                if nx > 1.0 {
                    let radius: f64 = if t % 7 == 0 { 1.0 } else { rng.random::<f64>() };
                    x.iter_mut().for_each(|v| *v *= radius / nx);
                }
                let mut worst_draw = 0.0_f64;
                for _ in 0..inner {
                    let cx = spec.compress(&x, rng)?;
                    let e: Vec<f64> = cx.iter().zip(&x).map(|(a, b)| a - b).collect();
                    worst_draw = worst_draw.max(norm_p(&e, p));
                }
                (worst_draw, (1.0 - phi_c) * slack + DET_SLACK)
            }
        };
        bound_used = rhs;
        let ratio = if rhs > 0.0 { lhs / rhs } else if lhs > 0.0 { f64::INFINITY } else { 0.0 };
        if lhs > worst {
            worst = lhs;
        }
        if ratio > worst_ratio {
            worst_ratio = ratio;
        }
        if lhs > rhs + 1e-15 {
            violations += 1;
            if offending.is_none() {
                offending = Some(x.clone());
            }
        }
    }

    Ok(VerifyReport {
        label: spec.label(),
        trials,
        max_observed: worst,
        bound: bound_used,
        max_observed_ratio: worst_ratio,
        violations,
        offending,
        pass: violations == 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(1)
    }

    #[test]
    fn pinned_outputs() {
        let ns = CompressorSpec::new(CompressorKind::NormSign, 3).unwrap();
        assert_eq!(ns.compress(&[1.0, -2.0, 0.5], &mut rng()).unwrap(), vec![1.0, -1.0, 1.0]);
        assert_eq!(ns.compress(&[0.0, 0.0, 0.0], &mut rng()).unwrap(), vec![0.0, 0.0, 0.0]);
        let uq = CompressorSpec::new(CompressorKind::UniformQuantize { delta: 2.0 }, 2).unwrap();
        assert_eq!(uq.compress(&[0.9, -1.1], &mut rng()).unwrap(), vec![0.0, -2.0]);
        let ob = CompressorSpec::new(CompressorKind::OneBitBinary, 3).unwrap();
        assert_eq!(ob.compress(&[0.3, -0.2, 0.0], &mut rng()).unwrap(), vec![0.5, -0.5, 0.5]);
        let id = CompressorSpec::identity();
        assert_eq!(id.compress(&[3.0, -7.5], &mut rng()).unwrap(), vec![3.0, -7.5]);
        assert_eq!(id.relative_constants(), Some((1.0, 1.0, 0.0)));
    }

    #[test]
    fn pinned_bit_costs() {
        let m = BitCostModel::default();
        let ns = CompressorSpec::new(CompressorKind::NormSign, 50).unwrap();
        let uq = CompressorSpec::new(CompressorKind::UniformQuantize { delta: 2.0 }, 50).unwrap();
        let ob = CompressorSpec::new(CompressorKind::OneBitBinary, 50).unwrap();
        assert_eq!(ns.bit_cost(&m, 50), 164);
        assert_eq!(uq.bit_cost(&m, 50), 200);
        assert_eq!(ob.bit_cost(&m, 50), 50);
        assert_eq!(CompressorSpec::identity().bit_cost(&m, 50), 3200);
        let tk = CompressorSpec::new(CompressorKind::TopK { k: 5 }, 50).unwrap();
        assert_eq!(tk.bit_cost(&m, 50), 5 * (64 + 6));
    }

    #[test]
    fn norm_sign_constant_at_d5() {
        let (r, psi, c) = CompressorSpec::new(CompressorKind::NormSign, 5).unwrap().relative_constants().unwrap();
        assert_eq!((r, psi), (2.5, 0.04));
        assert!((c - 16.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_finite() {
        assert!(CompressorSpec::identity().compress(&[f64::NAN], &mut rng()).is_err());
    }

    #[test]
    fn config_resolution() {
        let spec = CompressorConfig { kind: "uniform_quantize".into(), delta: Some(2.0), ..Default::default() }
            .resolve(10)
            .unwrap();
        assert_eq!(spec.class, AssumptionClass::GlobalAbsolute { p: PNorm::Inf, c: 1.0 });
        assert!(CompressorConfig::named("uniform_quantize").resolve(10).is_err());
        assert!(CompressorConfig::named("bogus").resolve(10).is_err());
        let bad = CompressorConfig { kind: "norm_sign".into(), cap_c: Some(1.0), ..Default::default() };
        assert!(bad.resolve(10).is_err());
        let r = CompressorConfig { kind: "norm_sign".into(), r: Some(1.0), psi: Some(0.5), ..Default::default() }
            .resolve(4)
            .unwrap();
        assert_eq!(r.relative_constants(), Some((1.0, 0.5, 1.0)));
    }

    #[test]
    fn verify_requires_enough_trials() {
        assert!(verify_assumption(&CompressorSpec::identity(), 10, 3, &mut rng()).is_err());
    }

    #[test]
    fn verify_flags_a_wrong_constant() {
        let mut spec = CompressorSpec::new(CompressorKind::UniformQuantize { delta: 2.0 }, 4).unwrap();
        spec.class = AssumptionClass::GlobalAbsolute { p: PNorm::Inf, c: 0.5 };
        let rep = verify_assumption(&spec, 200, 4, &mut rng()).unwrap();
        assert!(!rep.pass);
        assert!(rep.offending.is_some());

        // True ψ is 3/10; claiming 6/10 must survive the confirmation draws.
        let cfg = CompressorConfig { keep_k: Some(3), psi: Some(0.6), ..CompressorConfig::named("random_sparsify") };
        let rep = verify_assumption(&cfg.resolve(10).unwrap(), 200, 10, &mut rng()).unwrap();
        assert!(!rep.pass);
    }
}
