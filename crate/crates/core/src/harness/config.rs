use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::folding::check_scale_factor;
use crate::schedule::DurationModel;
use crate::sim::{NoiseModel, MAX_DENSITY_QUBITS};
use crate::transpile::subgraph::MAX_SUBGRAPH_VERTICES;
use crate::transpile::{enumerate_subgraph_classes, CouplingGraph, Layout};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FoldingMode {
    Global,
    Local,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShotBudget {
    pub base: u64,
    pub global_folded: u64,
    pub local_folded: u64,
}

impl Default for ShotBudget {
    fn default() -> Self {
        ShotBudget {
            base: 10_000,
            global_folded: 1_000,
            local_folded: 100,
        }
    }
}

/// Where the `n` logical qubits are placed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LayoutSelection {
    /// Complete graph; routing inserts no SWAPs.
    AllToAll,
    /// Path `0 - 1 - … - (n-1)`.
    Line,
    /// Embedding `embedding` of subgraph class `class` on the bundled
    /// 27-qubit heavy-hex map, as listed by `qvzne subgraphs`.
    HeavyHex { class: usize, embedding: usize },
}

impl Default for LayoutSelection {
    fn default() -> Self {
        LayoutSelection::HeavyHex { class: 0, embedding: 0 }
    }
}

impl LayoutSelection {
    pub fn resolve(&self, n: usize) -> Result<Layout> {
        match self {
            LayoutSelection::AllToAll => Ok(Layout::all_to_all(n)),
            LayoutSelection::Line => Ok(Layout::line(n)),
            LayoutSelection::HeavyHex { class, embedding } => {
                if n > MAX_SUBGRAPH_VERTICES {
                    return Err(Error::Config(format!(
                        "heavy-hex layouts support at most {MAX_SUBGRAPH_VERTICES} qubits"
                    )));
                }
                let host = CouplingGraph::heavy_hex_27();
                let classes = enumerate_subgraph_classes(&host, n)?;
                let cls = classes.get(*class).ok_or_else(|| {
                    Error::Config(format!("subgraph class {class} out of range ({} classes)", classes.len()))
                })?;
                let emb = cls.embeddings.get(*embedding).ok_or_else(|| {
                    Error::Config(format!(
                        "embedding {embedding} out of range ({} embeddings)",
                        cls.embeddings.len()
                    ))
                })?;
                Layout::from_embedding(&host, emb)
            }
        }
    }
}

fn default_num_circuits() -> usize {
    1000
}

fn default_lambdas() -> Vec<f64> {
    vec![1.0, 1.2, 1.5, 1.8, 2.0]
}

fn default_folding() -> FoldingMode {
    FoldingMode::Global
}

fn default_local_instances() -> usize {
    10
}

fn default_true() -> bool {
    true
}

fn default_fit_order() -> usize {
    1
}

fn default_resamples() -> usize {
    crate::zne::DEFAULT_RESAMPLES
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: usize,
    #[serde(default = "default_num_circuits")]
    pub num_circuits: usize,
    #[serde(default = "default_lambdas")]
    pub lambdas: Vec<f64>,
    #[serde(default = "default_folding")]
    pub folding: FoldingMode,
    #[serde(default = "default_local_instances")]
    pub local_instances: usize,
    #[serde(default)]
    pub shots: ShotBudget,
    #[serde(default)]
    pub noise: NoiseModel,
    #[serde(default)]
    pub durations: DurationModel,
    #[serde(default = "default_true")]
    pub dd_enabled: bool,
    #[serde(default)]
    pub layout: LayoutSelection,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_fit_order")]
    pub fit_order: usize,
    #[serde(default = "default_resamples")]
    pub bootstrap_resamples: usize,
}

impl ExperimentConfig {
    /// Defaults for everything except the width.
    pub fn new(n: usize) -> Self {
        ExperimentConfig {
            n,
            num_circuits: default_num_circuits(),
            lambdas: default_lambdas(),
            folding: default_folding(),
            local_instances: default_local_instances(),
            shots: ShotBudget::default(),
            noise: NoiseModel::default(),
            durations: DurationModel::default(),
            dd_enabled: true,
            layout: LayoutSelection::default(),
            base_seed: 0,
            fit_order: default_fit_order(),
            bootstrap_resamples: default_resamples(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::json("experiment config", e))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Lambdas sorted ascending.
    pub fn sorted_lambdas(&self) -> Vec<f64> {
        let mut l = self.lambdas.clone();
        l.sort_by(f64::total_cmp);
        l
    }

    pub fn validate(&self) -> Result<()> {
        let max_n = MAX_DENSITY_QUBITS;
        if !(2..=max_n).contains(&self.n) {
            return Err(Error::Config(format!("n = {} outside [2, {max_n}]", self.n)));
        }
        if self.num_circuits == 0 {
            return Err(Error::Config("num_circuits must be at least 1".into()));
        }
        if !self.lambdas.contains(&1.0) {
            return Err(Error::Config("lambdas must contain 1".into()));
        }
        for &l in &self.lambdas {
            check_scale_factor(l).map_err(|e| Error::Config(e.to_string()))?;
        }
        let sorted = self.sorted_lambdas();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("lambdas must be distinct".into()));
        }
        if sorted.len() < self.fit_order + 1 {
            return Err(Error::Config(format!(
                "fit order {} needs at least {} lambdas",
                self.fit_order,
                self.fit_order + 1
            )));
        }
        if self.shots.base == 0 || self.shots.global_folded == 0 || self.shots.local_folded == 0 {
            return Err(Error::Config("shot counts must be positive".into()));
        }
        if self.local_instances == 0 {
            return Err(Error::Config("local_instances must be at least 1".into()));
        }
        if self.bootstrap_resamples < 2 {
            return Err(Error::Config("bootstrap_resamples must be at least 2".into()));
        }
        self.noise.validate()?;
        self.durations.validate()?;
        if let LayoutSelection::HeavyHex { .. } = self.layout {
            if self.n > MAX_SUBGRAPH_VERTICES {
                return Err(Error::Config(format!(
                    "heavy-hex layouts support at most {MAX_SUBGRAPH_VERTICES} qubits; use line"
                )));
            }
        }
        Ok(())
    }

    /// Hex SHA-256 of the compact JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(json.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    /// Run directory name: the first 16 hex digits of the hash.
    pub fn run_id(&self) -> String {
        self.hash()[..16].to_string()
    }

    pub fn circuit_seed(&self, circuit_id: usize) -> u64 {
        self.base_seed.wrapping_add(circuit_id as u64)
    }

    /// Same config at a different width, with a layout valid for it.
    pub fn with_width(&self, n: usize) -> Self {
        let mut c = self.clone();
        c.n = n;
        if n > MAX_SUBGRAPH_VERTICES && matches!(c.layout, LayoutSelection::HeavyHex { .. }) {
            c.layout = LayoutSelection::Line;
        }
        c
    }
}
