//! Run manifests: everything needed to reproduce a run byte for byte.
//!
//! Result files (CSV, summary JSON) are deterministic given config and
//! seeds; the manifest additionally carries wall-clock timings, which are
//! the one intentionally non-reproducible field.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::ExperimentConfig;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub code_version: String,
    pub config_text: String,
    pub config_sha256: String,
    pub seed: u64,
    pub radius_prefactor: f64,
    /// Quadrature grids chosen per level.
    pub grids: Vec<(u64, usize)>,
    /// Markov thresholds used per level, when the experiment filters.
    pub markov_thresholds: Vec<(u64, f64)>,
    /// Cross-unit aggregation order; all reductions are sequential over
    /// canonically sorted unit indices regardless of thread count.
    pub reduction_order: String,
    pub openblas_threads: u32,
    /// Per-stage wall-clock seconds; excluded from byte-identity.
    pub timings: Vec<(String, f64)>,
    /// Unit failures recorded under --keep-going.
    pub failures: Vec<String>,
}

impl RunManifest {
    pub fn new(cfg: &ExperimentConfig) -> Self {
        let config_text = cfg.to_config_string();
        let mut h = Sha256::new();
        h.update(config_text.as_bytes());
        let config_sha256 = format!("{:x}", h.finalize());
        Self {
            schema_version: 1,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            config_text,
            config_sha256,
            seed: cfg.seed,
            radius_prefactor: cfg.radius_prefactor,
            grids: Vec::new(),
            markov_thresholds: Vec::new(),
            reduction_order: "sequential-by-index".into(),
            openblas_threads: 1,
            timings: Vec::new(),
            failures: Vec::new(),
        }
    }

    pub fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let start = std::time::Instant::now();
        let out = f();
        self.timings.push((stage.to_string(), start.elapsed().as_secs_f64()));
        out
    }
}
