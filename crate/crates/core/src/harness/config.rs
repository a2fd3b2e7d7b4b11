use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::modules::ModuleDescriptor;
use crate::operators::LMutation;

/// Identity suites the harness can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SuiteKind {
    Bracket,
    Yangian,
    Ybe,
    Intertwiner,
    Qkz,
    Flat,
    Compatibility,
    Weyl,
    Flow,
}

impl SuiteKind {
    pub const ALL: [SuiteKind; 9] = [
        SuiteKind::Bracket,
        SuiteKind::Yangian,
        SuiteKind::Ybe,
        SuiteKind::Intertwiner,
        SuiteKind::Qkz,
        SuiteKind::Flat,
        SuiteKind::Compatibility,
        SuiteKind::Weyl,
        SuiteKind::Flow,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SuiteKind::Bracket => "bracket",
            SuiteKind::Yangian => "yangian",
            SuiteKind::Ybe => "ybe",
            SuiteKind::Intertwiner => "intertwiner",
            SuiteKind::Qkz => "qkz",
            SuiteKind::Flat => "flat",
            SuiteKind::Compatibility => "compatibility",
            SuiteKind::Weyl => "weyl",
            SuiteKind::Flow => "flow",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSettings {
    #[serde(default = "default_flow_tol")]
    pub tol: f64,
    #[serde(default = "default_max_defect")]
    pub max_defect: f64,
}

fn default_flow_tol() -> f64 {
    1e-10
}

fn default_max_defect() -> f64 {
    1e-6
}

impl Default for FlowSettings {
    fn default() -> Self {
        FlowSettings {
            tol: default_flow_tol(),
            max_defect: default_max_defect(),
        }
    }
}

fn default_suites() -> Vec<SuiteKind> {
    SuiteKind::ALL.to_vec()
}

fn default_samples() -> usize {
    10
}

fn default_bound() -> u32 {
    50
}

fn default_margin() -> usize {
    2
}

fn default_budget() -> usize {
    10_000
}

/// One tensor product and the suites to run on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    pub factors: Vec<ModuleDescriptor>,
    #[serde(default = "default_suites")]
    pub suites: Vec<SuiteKind>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    /// Bound on numerators and denominators of sampled rationals.
    #[serde(default = "default_bound")]
    pub bound: u32,
    #[serde(default = "default_margin")]
    pub depth_margin: usize,
    #[serde(default = "default_budget")]
    pub rejection_budget: usize,
    #[serde(default)]
    pub mutation: Option<LMutation>,
    #[serde(default)]
    pub flow: FlowSettings,
}

impl SuiteConfig {
    pub fn new(factors: Vec<ModuleDescriptor>) -> Self {
        SuiteConfig {
            factors,
            suites: default_suites(),
            samples: default_samples(),
            seed: 0,
            bound: default_bound(),
            depth_margin: default_margin(),
            rejection_budget: default_budget(),
            mutation: None,
            flow: FlowSettings::default(),
        }
    }

    pub fn with_suites(mut self, suites: &[SuiteKind]) -> Self {
        self.suites = suites.to_vec();
        self
    }

    pub fn with_samples(mut self, samples: usize) -> Self {
        self.samples = samples;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Short label such as `gl2 vector ⊗ sym:2`.
    pub fn label(&self) -> String {
        let n = self.factors.first().map_or(0, ModuleDescriptor::rank);
        let parts: Vec<String> = self.factors.iter().map(ToString::to_string).collect();
        format!("gl{n} {}", parts.join(" ⊗ "))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("config error at `{path}`: {message}")]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

/// Parse a config file holding either one suite configuration or an array
/// of them. Errors carry the path of the offending key.
pub fn parse_config(text: &str) -> Result<Vec<SuiteConfig>, ConfigError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| ConfigError {
        path: ".".to_string(),
        message: e.to_string(),
    })?;
    let many = value.is_array();
    let fail = |e: serde_path_to_error::Error<serde_json::Error>| ConfigError {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    };
    let runs = if many {
        serde_path_to_error::deserialize::<_, Vec<SuiteConfig>>(value).map_err(fail)?
    } else {
        vec![serde_path_to_error::deserialize::<_, SuiteConfig>(value).map_err(fail)?]
    };
    for (k, cfg) in runs.iter().enumerate() {
        let at = |field: &str| {
            if many {
                format!("[{k}].{field}")
            } else {
                field.to_string()
            }
        };
        if cfg.factors.is_empty() {
            return Err(ConfigError {
                path: at("factors"),
                message: "at least one factor is required".into(),
            });
        }
        if cfg.samples == 0 {
            return Err(ConfigError {
                path: at("samples"),
                message: "samples must be at least 1".into(),
            });
        }
        if cfg.bound < 2 {
            return Err(ConfigError {
                path: at("bound"),
                message: "bound must be at least 2".into(),
            });
        }
        let rank = cfg.factors[0].rank();
        if let Some(i) = cfg.factors.iter().position(|f| f.rank() != rank) {
            return Err(ConfigError {
                path: at(&format!("factors[{i}].N")),
                message: format!("rank {} differs from the first factor's rank {rank}", cfg.factors[i].rank()),
            });
        }
        if let Some(m) = cfg.mutation {
            if m.index >= rank {
                return Err(ConfigError {
                    path: at("mutation.index"),
                    message: format!("index {} out of range for gl_{rank} (0-based)", m.index),
                });
            }
        }
    }
    Ok(runs)
}

/// The default matrix: gl_2 `V⊗V`, `V⊗S²V`, `S²V⊗S²V`; gl_3 `V⊗V`; gl_2
/// truncated Verma `M(3,1)` (depth 4) `⊗ V`; all suites.
pub fn default_matrix(seed: u64) -> Vec<SuiteConfig> {
    let v2 = ModuleDescriptor::Vector { n: 2 };
    let s2 = ModuleDescriptor::Sym { n: 2, k: 2 };
    let v3 = ModuleDescriptor::Vector { n: 3 };
    let m31 = ModuleDescriptor::Verma {
        n: 2,
        hw: vec![3, 1],
        depth: 4,
    };
    [
        vec![v2.clone(), v2.clone()],
        vec![v2.clone(), s2.clone()],
        vec![s2.clone(), s2],
        vec![v3.clone(), v3],
        vec![m31, v2],
    ]
    .into_iter()
    .map(|f| SuiteConfig::new(f).with_seed(seed))
    .collect()
}
