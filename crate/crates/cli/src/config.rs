//! Run configuration. Precedence, lowest first: built-in defaults, the JSON
//! file given by `--config`, command-line flags. The global seed replaces the
//! nested `seed` fields of the stage configurations.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use surfml::clustering::KMeansConfig;
use surfml::eval::GapConfig;
use surfml::geodesic::GeodesicConfig;
use surfml::metric_learning::{ObjectiveKind, OptimizerConfig};

use crate::Failure;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MdsConfig {
    /// Scale applied to the dissimilarities.
    pub tau: f64,
    pub optimizer: OptimizerConfig,
}

impl Default for MdsConfig {
    fn default() -> Self {
        Self { tau: 1.0, optimizer: OptimizerConfig { max_iters: 500, rel_tol: 1e-9, ..Default::default() } }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KnnConfig {
    pub ks: Vec<usize>,
    pub n_splits: usize,
    pub test_frac: f64,
    /// Embedding dimension for the four-column table.
    pub dim: usize,
}

impl Default for KnnConfig {
    fn default() -> Self {
        Self { ks: vec![5], n_splits: 10, test_frac: 0.2, dim: 2 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub n_values: Vec<usize>,
    pub pairs: usize,
    pub radius: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { n_values: vec![0, 2, 4, 8, 16], pairs: 50, radius: 2.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub surface: String,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub threads: Option<usize>,
    /// Graph or dissimilarity source: a `.gml` file, a dissimilarity CSV,
    /// `synthetic:football` or `synthetic:newsgroups[:n]`.
    pub dataset: Option<String>,
    /// Point table source: a points CSV, `synthetic:helicoid-two-clusters[:n]`
    /// or `synthetic:gaussian-pairs[:n]`.
    pub points: Option<String>,
    pub transform: Option<PathBuf>,
    pub objective: ObjectiveKind,
    pub geodesic: GeodesicConfig,
    pub optimizer: OptimizerConfig,
    pub mds: MdsConfig,
    pub knn: KnnConfig,
    pub kmeans: KMeansConfig,
    pub gap: GapConfig,
    pub sweep: SweepConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            surface: "hyperboloid:2".into(),
            seed: 0,
            out_dir: PathBuf::from("out"),
            threads: None,
            dataset: None,
            points: None,
            transform: None,
            objective: ObjectiveKind::Lmnn,
            geodesic: GeodesicConfig::default(),
            optimizer: OptimizerConfig::default(),
            mds: MdsConfig::default(),
            knn: KnnConfig::default(),
            kmeans: KMeansConfig::default(),
            gap: GapConfig::default(),
            sweep: SweepConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
    }

    /// Pushes the global seed into every stage.
    pub fn propagate_seed(&mut self) {
        self.geodesic.seed = self.seed;
        self.optimizer.seed = self.seed;
        self.mds.optimizer.seed = self.seed;
        self.kmeans.seed = self.seed;
    }

    pub fn validate(&self) -> Result<(), Failure> {
        let files = [self.dataset.as_deref(), self.points.as_deref()]
            .into_iter()
            .flatten()
            .filter(|s| !s.starts_with("synthetic:"))
            .map(PathBuf::from)
            .chain(self.transform.clone());
        for f in files {
            if !f.is_file() {
                return Err(Failure::Input(format!("{}: no such file", f.display())));
            }
        }
        self.geodesic.validate()?;
        self.optimizer.validate()?;
        self.mds.optimizer.validate()?;
        if !(self.mds.tau > 0.0) {
            return Err(Failure::Input("mds.tau must be positive".into()));
        }
        if self.knn.ks.is_empty() || self.knn.ks.contains(&0) || !(self.knn.test_frac > 0.0 && self.knn.test_frac < 1.0) {
            return Err(Failure::Input("knn needs positive k values and test_frac in (0, 1)".into()));
        }
        if self.knn.n_splits == 0 || self.knn.dim == 0 {
            return Err(Failure::Input("knn.n_splits and knn.dim must be positive".into()));
        }
        if self.threads == Some(0) {
            return Err(Failure::Input("--threads must be positive".into()));
        }
        Ok(())
    }

    /// SHA-256 of the configuration and the command's own arguments,
    /// excluding where outputs go and how many threads compute them.
    pub fn hash(&self, command: &str, args: &impl Serialize) -> String {
        let mut stable = self.clone();
        stable.out_dir = PathBuf::new();
        stable.threads = None;
        let doc = serde_json::json!({ "command": command, "config": stable, "args": args });
        let digest = Sha256::digest(doc.to_string().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
