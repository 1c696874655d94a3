use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::algorithms::{Accounting, Algorithm, AlgorithmParams};
use crate::analysis::LyapunovKind;
use crate::compressors::CompressorConfig;
use crate::costs::{CostKind, CostSpec};
use crate::error::{Error, Result};
use crate::graph::Topology;
use crate::rng::{derive_seed, tag};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamMode {
    /// Hand-picked step sizes, used as given.
    #[default]
    Practical,
    /// Interior point of the step-size region from `analysis`.
    Certified,
}

/// Root seed plus optional explicit sub-seeds; missing ones are derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Seeds {
    #[serde(default)]
    pub root: u64,
    pub graph: Option<u64>,
    pub cost: Option<u64>,
    pub init: Option<u64>,
    pub algo: Option<u64>,
}

impl Seeds {
    pub fn graph(&self) -> u64 {
        self.graph.unwrap_or_else(|| derive_seed(self.root, &[tag::GRAPH]))
    }

    pub fn cost(&self) -> u64 {
        self.cost.unwrap_or_else(|| derive_seed(self.root, &[tag::COST]))
    }

    pub fn init(&self) -> u64 {
        self.init.unwrap_or_else(|| derive_seed(self.root, &[tag::INIT]))
    }

    pub fn algo(&self) -> u64 {
        self.algo.unwrap_or_else(|| derive_seed(self.root, &[tag::ALGO]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub n: usize,
    pub topology: Topology,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostConfig {
    pub kind: CostKind,
    pub d: usize,
    #[serde(default = "yes")]
    pub abs_m: bool,
    #[serde(default)]
    pub rows: Option<usize>,
    #[serde(default)]
    pub rank_deficit: usize,
    #[serde(default)]
    pub consistent: bool,
}

fn yes() -> bool {
    true
}

impl CostConfig {
    pub fn spec(&self, n: usize, seed: u64) -> CostSpec {
        CostSpec {
            kind: self.kind,
            n,
            d: self.d,
            seed,
            abs_m: self.abs_m,
            rows: self.rows,
            rank_deficit: self.rank_deficit,
            consistent: self.consistent,
        }
    }
}

/// One (algorithm, compressor, parameters) combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellConfig {
    pub algo: Algorithm,
    /// Defaults to `"<algo>_<compressor>_<mode>"`.
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default = "identity")]
    pub compressor: CompressorConfig,
    #[serde(default)]
    pub mode: ParamMode,
    /// Required in practical mode unless defaults apply; overrides certified values only with `force_params`.
    #[serde(default)]
    pub params: Option<AlgorithmParams>,
    #[serde(default)]
    pub force_params: bool,
    #[serde(default)]
    pub lyapunov: Option<LyapunovKind>,
    /// Overrides the experiment-wide iteration count.
    #[serde(default)]
    pub iters: Option<usize>,
}

fn identity() -> CompressorConfig {
    CompressorConfig::named("identity")
}

fn default_threshold() -> f64 {
    1e-3
}

fn default_ref_tol() -> f64 {
    1e-9
}

fn default_init_scale() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: String,
    #[serde(default)]
    pub seeds: Seeds,
    pub network: NetworkConfig,
    pub cost: CostConfig,
    /// Standard deviation of the Gaussian initial decisions.
    #[serde(default = "default_init_scale")]
    pub init_scale: f64,
    pub iters: usize,
    /// Target for `Υ`.
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    /// Gradient tolerance for the reference solver that supplies `F★`.
    #[serde(default = "default_ref_tol")]
    pub reference_tol: f64,
    #[serde(default)]
    pub accounting: Accounting,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(rename = "cell")]
    pub cells: Vec<CellConfig>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.scenario.is_empty() || self.scenario.contains(['/', '\\']) {
            return bad(format!("scenario name `{}` must be non-empty and contain no path separators", self.scenario));
        }
        if self.cells.is_empty() {
            return bad("at least one [[cell]] is required".into());
        }
        if self.network.n == 0 || self.cost.d == 0 {
            return bad("network.n and cost.d must be positive".into());
        }
        if self.iters == 0 || self.cells.iter().any(|c| c.iters == Some(0)) {
            return bad("iters must be at least 1".into());
        }
        if !(self.threshold > 0.0 && self.threshold.is_finite()) {
            return bad(format!("threshold must be positive, got {}", self.threshold));
        }
        if !(self.reference_tol > 0.0) {
            return bad("reference_tol must be positive".into());
        }
        if !(self.init_scale > 0.0 && self.init_scale.is_finite()) {
            return bad("init_scale must be positive".into());
        }
        self.accounting.model.validate().map_err(|e| Error::Config(e.to_string()))?;
        let mut labels = std::collections::BTreeSet::new();
        for c in &self.cells {
            c.compressor.resolve(self.cost.d)?;
            let label = self.label_of(c);
            if label.contains(['/', '\\']) || !labels.insert(label.clone()) {
                return bad(format!("cell label `{label}` is duplicated or contains a path separator"));
            }
            if c.mode == ParamMode::Certified && c.params.is_some() && !c.force_params {
                return bad(format!("cell `{label}`: certified mode computes its own parameters; set force_params to override"));
            }
            if let Some(p) = &c.params {
                p.validate(c.algo).map_err(|e| Error::Config(format!("cell `{label}`: {e}")))?;
            }
            if let Some(kind) = c.lyapunov {
                crate::analysis::check_pairing(kind, c.algo).map_err(|e| Error::Config(e.to_string()))?;
            }
        }
        Ok(())
    }

    pub fn label_of(&self, c: &CellConfig) -> String {
        c.label.clone().unwrap_or_else(|| {
            let comp = match c.compressor.resolve(self.cost.d) {
                Ok(s) => s.label(),
                Err(_) => c.compressor.kind.clone(),
            };
            let mode = match c.mode {
                ParamMode::Practical => "practical",
                ParamMode::Certified => "certified",
            };
            format!("{}_{}_{}", c.algo.name(), comp, mode)
        })
    }

    /// Replaces the root seed and drops explicit sub-seeds so everything re-derives.
    pub fn with_root_seed(mut self, root: u64) -> Self {
        self.seeds = Seeds { root, ..Seeds::default() };
        self
    }
}

/// Hand-tuned parameters for the built-in scenarios.
///
/// The compressor-side values (`φ_X`, `φ_Y`, `ς`) follow common practice; the
/// step sizes are the largest on a coarse grid that keep the uncompressed
/// baseline stable on the logistic scenario.
pub fn practical_defaults(algo: Algorithm, compressor_label: &str) -> AlgorithmParams {
    let base = AlgorithmParams::new(0.1, 0.6);
    match algo {
        Algorithm::Alg1 => AlgorithmParams { phi_x: 0.3, phi_y: 0.1, ..base },
        Algorithm::Alg2 => AlgorithmParams { phi_x: 0.3, phi_y: 0.1, varsigma: 0.3, ..base },
        Algorithm::Alg3 => match compressor_label {
            "one_bit" | "one_bit_binary" => AlgorithmParams { s0: 4.0, mu: 0.95, ..base },
            _ => AlgorithmParams { s0: 1.0, mu: 0.9, ..base },
        },
        Algorithm::Dgt => base,
    }
}

/// The n = 20, d = 50 logistic scenario with the four compressed cells, the
/// uncompressed baseline, and certified counterparts where they exist.
pub fn section5_config() -> ExperimentConfig {
    let cell = |algo, kind: &str, mode, extra: fn(&mut CompressorConfig)| {
        let mut compressor = CompressorConfig::named(kind);
        extra(&mut compressor);
        CellConfig {
            algo,
            label: None,
            compressor,
            mode,
            params: (mode == ParamMode::Practical).then(|| practical_defaults(algo, kind)),
            force_params: false,
            lyapunov: None,
            iters: None,
        }
    };
    let none: fn(&mut CompressorConfig) = |_| {};
    let uniform: fn(&mut CompressorConfig) = |c| c.delta = Some(2.0);
    let mut cells = Vec::new();
    for mode in [ParamMode::Practical, ParamMode::Certified] {
        cells.push(cell(Algorithm::Dgt, "identity", mode, none));
        cells.push(cell(Algorithm::Alg1, "norm_sign", mode, none));
        cells.push(cell(Algorithm::Alg2, "norm_sign", mode, none));
        cells.push(cell(Algorithm::Alg3, "uniform_quantize", mode, uniform));
        // Certified parameters for the 1-bit quantizer need a P-L constant,
        // which the logistic family does not have.
        if mode == ParamMode::Practical {
            cells.push(cell(Algorithm::Alg3, "one_bit_binary", mode, none));
        }
    }
    ExperimentConfig {
        scenario: "section5".into(),
        seeds: Seeds { root: 2024, ..Seeds::default() },
        network: NetworkConfig { n: 20, topology: Topology::Random { density: 0.3 } },
        cost: CostConfig { kind: CostKind::LogisticLog, d: 50, abs_m: true, rows: None, rank_deficit: 0, consistent: false },
        init_scale: 1.0,
        iters: 1000,
        threshold: 1e-3,
        reference_tol: 1e-9,
        accounting: Accounting::default(),
        output_dir: None,
        cells,
    }
}
