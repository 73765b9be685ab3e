//! Flat key-value experiment configuration.
//!
//! The format is diff-able, hand-editable text, one `key = value` per
//! line, `#` comments. Parsing round-trips losslessly through
//! [`ExperimentConfig::to_config_string`].

use serde::{Deserialize, Serialize};

use crate::dynamics::IMat2;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Spectrum,
    Variance,
    Mass,
    Zeros,
    Egorov,
    Kernel,
    Correlations,
    Cover,
    Accept,
}

impl ExperimentKind {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "spectrum" => Self::Spectrum,
            "variance" => Self::Variance,
            "mass" => Self::Mass,
            "zeros" => Self::Zeros,
            "egorov" => Self::Egorov,
            "kernel" => Self::Kernel,
            "correlations" => Self::Correlations,
            "cover" => Self::Cover,
            "accept" => Self::Accept,
            other => return Err(Error::Config(format!("unknown experiment kind `{other}`"))),
        })
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Spectrum => "spectrum",
            Self::Variance => "variance",
            Self::Mass => "mass",
            Self::Zeros => "zeros",
            Self::Egorov => "egorov",
            Self::Kernel => "kernel",
            Self::Correlations => "correlations",
            Self::Cover => "cover",
            Self::Accept => "accept",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SymbolKind {
    Constant,
    Cosine,
    Bump,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub map: IMat2,
    pub n_grid: Vec<u64>,
    pub gamma: f64,
    pub gamma_prime: f64,
    pub symbol_kind: SymbolKind,
    pub symbol_k1: i64,
    pub symbol_k2: i64,
    pub center_x: f64,
    pub center_y: f64,
    pub radius_prefactor: f64,
    pub seed: u64,
    pub grid_oversample: f64,
    pub max_sections: usize,
    pub t_list: Vec<i64>,
    pub out_dir: String,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: ExperimentKind::Spectrum,
            map: [[1, 2], [2, 5]],
            n_grid: vec![64],
            gamma: 0.1,
            gamma_prime: 0.15,
            symbol_kind: SymbolKind::Cosine,
            symbol_k1: 1,
            symbol_k2: 0,
            center_x: 0.5,
            center_y: 0.5,
            radius_prefactor: crate::geometry::DEFAULT_RADIUS_PREFACTOR,
            seed: 1,
            grid_oversample: 1.0,
            max_sections: 64,
            t_list: vec![1],
            out_dir: "out".into(),
        }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            let key = key.trim();
            let value = value.trim();
            let bad = |what: &str| Error::Config(format!("line {}: bad {what}: `{value}`", lineno + 1));
            match key {
                "experiment" => cfg.experiment = ExperimentKind::parse(value)?,
                "map.a11" => cfg.map[0][0] = value.parse().map_err(|_| bad("integer"))?,
                "map.a12" => cfg.map[0][1] = value.parse().map_err(|_| bad("integer"))?,
                "map.a21" => cfg.map[1][0] = value.parse().map_err(|_| bad("integer"))?,
                "map.a22" => cfg.map[1][1] = value.parse().map_err(|_| bad("integer"))?,
                "n_grid" => {
                    cfg.n_grid = value
                        .split(',')
                        .map(|v| v.trim().parse::<u64>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| bad("integer list"))?;
                }
                "gamma" => cfg.gamma = value.parse().map_err(|_| bad("float"))?,
                "gamma_prime" => cfg.gamma_prime = value.parse().map_err(|_| bad("float"))?,
                "symbol.kind" => {
                    cfg.symbol_kind = match value {
                        "constant" => SymbolKind::Constant,
                        "cosine" => SymbolKind::Cosine,
                        "bump" => SymbolKind::Bump,
                        _ => return Err(bad("symbol kind (constant|cosine|bump)")),
                    }
                }
                "symbol.k1" => cfg.symbol_k1 = value.parse().map_err(|_| bad("integer"))?,
                "symbol.k2" => cfg.symbol_k2 = value.parse().map_err(|_| bad("integer"))?,
                "center.x" => cfg.center_x = value.parse().map_err(|_| bad("float"))?,
                "center.y" => cfg.center_y = value.parse().map_err(|_| bad("float"))?,
                "radius_prefactor" => {
                    cfg.radius_prefactor = value.parse().map_err(|_| bad("float"))?
                }
                "seed" => cfg.seed = value.parse().map_err(|_| bad("integer"))?,
                "grid.oversample" => cfg.grid_oversample = value.parse().map_err(|_| bad("float"))?,
                "sections.max" => cfg.max_sections = value.parse().map_err(|_| bad("integer"))?,
                "t_list" => {
                    cfg.t_list = value
                        .split(',')
                        .map(|v| v.trim().parse::<i64>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| bad("integer list"))?;
                }
                "out_dir" => cfg.out_dir = value.to_string(),
                other => return Err(Error::Config(format!("line {}: unknown key `{other}`", lineno + 1))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Validate every numeric constraint before any computation starts.
    pub fn validate(&self) -> Result<()> {
        if self.n_grid.is_empty() {
            return Err(Error::Config("n_grid must be nonempty".into()));
        }
        for &n in &self.n_grid {
            if n < 1 || n > crate::theta::N_MAX {
                return Err(Error::LevelOutOfRange { n, lo: 1, hi: crate::theta::N_MAX });
            }
        }
        if !(self.gamma > 0.0 && self.gamma < crate::geometry::GAMMA_BOUND) {
            return Err(Error::GammaOutOfRange {
                gamma: self.gamma,
                bound: crate::geometry::GAMMA_BOUND,
            });
        }
        if !(self.gamma_prime > 0.0 && self.gamma_prime < crate::geometry::GAMMA_BOUND) {
            return Err(Error::GammaOutOfRange {
                gamma: self.gamma_prime,
                bound: crate::geometry::GAMMA_BOUND,
            });
        }
        if !(self.radius_prefactor > 0.0 && self.radius_prefactor <= 0.125) {
            return Err(Error::Config(format!(
                "radius_prefactor {} outside (0, 0.125]",
                self.radius_prefactor
            )));
        }
        if !(self.grid_oversample >= 1.0 && self.grid_oversample <= 8.0) {
            return Err(Error::Config("grid.oversample outside [1, 8]".into()));
        }
        if self.max_sections == 0 {
            return Err(Error::Config("sections.max must be positive".into()));
        }
        if self.t_list.iter().any(|t| t.abs() > 16) {
            return Err(Error::Config("t_list entries must satisfy |T| <= 16".into()));
        }
        crate::dynamics::validate_cat_map(self.map)?;
        Ok(())
    }

    /// Canonical text form; `parse(to_config_string(c)) == c`.
    pub fn to_config_string(&self) -> String {
        let n_grid = self
            .n_grid
            .iter()
            .map(|n| n.to_string())
            .collect::<Vec<_>>()
            .join(",");
        let t_list = self
            .t_list
            .iter()
            .map(|t| t.to_string())
            .collect::<Vec<_>>()
            .join(",");
        let symbol_kind = match self.symbol_kind {
            SymbolKind::Constant => "constant",
            SymbolKind::Cosine => "cosine",
            SymbolKind::Bump => "bump",
        };
        format!(
            "experiment = {}\n\
             map.a11 = {}\nmap.a12 = {}\nmap.a21 = {}\nmap.a22 = {}\n\
             n_grid = {}\n\
             gamma = {}\ngamma_prime = {}\n\
             symbol.kind = {}\nsymbol.k1 = {}\nsymbol.k2 = {}\n\
             center.x = {}\ncenter.y = {}\n\
             radius_prefactor = {}\n\
             seed = {}\ngrid.oversample = {}\nsections.max = {}\n\
             t_list = {}\nout_dir = {}\n",
            self.experiment.as_str(),
            self.map[0][0],
            self.map[0][1],
            self.map[1][0],
            self.map[1][1],
            n_grid,
            self.gamma,
            self.gamma_prime,
            symbol_kind,
            self.symbol_k1,
            self.symbol_k2,
            self.center_x,
            self.center_y,
            self.radius_prefactor,
            self.seed,
            self.grid_oversample,
            self.max_sections,
            t_list,
            self.out_dir,
        )
    }

    pub fn trig_symbol(&self) -> crate::dynamics::TrigPoly {
        use crate::dynamics::{CharacterIndex, TrigPoly};
        match self.symbol_kind {
            SymbolKind::Constant => TrigPoly::constant(1.0),
            SymbolKind::Cosine | SymbolKind::Bump => {
                TrigPoly::cosine(CharacterIndex(self.symbol_k1, self.symbol_k2))
            }
        }
    }

    pub fn symbol_label(&self) -> String {
        match self.symbol_kind {
            SymbolKind::Constant => "const1".into(),
            SymbolKind::Cosine => format!("cos2pi_{}_{}", self.symbol_k1, self.symbol_k2),
            SymbolKind::Bump => format!(
                "bump_p{}_{}_gamma{}",
                self.center_x, self.center_y, self.gamma
            ),
        }
    }
}
