//! Run configuration: a flat TOML or JSON file, overridden by flags.

use std::path::{Path, PathBuf};

use entrograph::growth::Bands;
use entrograph::Level;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const MIN_HORIZON: usize = 16;

/// Levels written `"4..8"` (inclusive) or as a list.
#[derive(Clone, Debug, PartialEq, Eq, Deserialize, Serialize)]
#[serde(untagged)]
pub enum LevelSpec {
    Range(String),
    List(Vec<Level>),
}

impl LevelSpec {
    pub fn resolve(&self) -> Result<Vec<Level>, CliError> {
        let levels = match self {
            LevelSpec::List(v) => v.clone(),
            LevelSpec::Range(s) => parse_levels(s)?,
        };
        if levels.is_empty() {
            return Err(CliError::Config("levels must not be empty".into()));
        }
        if levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CliError::Config(format!("levels {levels:?} must be strictly ascending")));
        }
        Ok(levels)
    }
}

/// `"a..b"`, `"a..=b"` (both inclusive) or a comma list.
pub fn parse_levels(s: &str) -> Result<Vec<Level>, CliError> {
    let bad = || CliError::Config(format!("cannot read levels '{s}'"));
    let num = |t: &str| t.trim().parse::<Level>().map_err(|_| bad());
    if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (num(a)?, num(b.trim_start_matches('='))?);
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    s.split(',').map(num).collect()
}

/// Every key a config file may set; unknown keys are rejected.
#[derive(Clone, Debug, Default, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub system: Option<String>,
    pub compact: Option<String>,
    pub levels: Option<LevelSpec>,
    pub horizon: Option<usize>,
    pub grid: Option<usize>,
    pub seed: Option<u64>,
    pub alpha: Option<f64>,
    pub generators: Option<bool>,
    pub family: Option<String>,
    pub csv: Option<String>,
    pub json: Option<String>,
    pub tail_fraction: Option<f64>,
    pub linear_band_lo: Option<f64>,
    pub linear_band_hi: Option<f64>,
    pub bounded_max_degree: Option<f64>,
    pub exp_rate_floor: Option<f64>,
    pub agreement_slack: Option<f64>,
    pub n0_max: Option<usize>,
    pub search_bound: Option<usize>,
    pub max_words_per_orbit: Option<usize>,
}

macro_rules! overlay {
    ($base:expr, $top:expr, $($f:ident),*) => {
        ConfigFile { $($f: $top.$f.or($base.$f)),* }
    };
}

impl ConfigFile {
    /// Reads JSON for `.json` paths and TOML otherwise.
    pub fn load(path: &Path) -> Result<ConfigFile, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, path.extension().is_some_and(|e| e == "json"))
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str, json: bool) -> Result<ConfigFile, String> {
        if json {
            serde_json::from_str(text).map_err(|e| e.to_string())
        } else {
            toml::from_str(text).map_err(|e| e.to_string())
        }
    }

    /// `self` with every key set in `top` replaced.
    pub fn overlay(self, top: ConfigFile) -> ConfigFile {
        overlay!(
            self,
            top,
            system,
            compact,
            levels,
            horizon,
            grid,
            seed,
            alpha,
            generators,
            family,
            csv,
            json,
            tail_fraction,
            linear_band_lo,
            linear_band_hi,
            bounded_max_degree,
            exp_rate_floor,
            agreement_slack,
            n0_max,
            search_bound,
            max_words_per_orbit
        )
    }
}

/// A validated configuration; its JSON form is what gets hashed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub system: String,
    pub compact: String,
    pub levels: Vec<Level>,
    pub horizon: usize,
    pub grid: Option<usize>,
    pub seed: Option<u64>,
    pub alpha: Option<f64>,
    pub generators: bool,
    pub bands: Bands,
    pub agreement_slack: f64,
    pub family: Option<String>,
    pub n0_max: usize,
    pub search_bound: usize,
    pub max_words_per_orbit: Option<usize>,
    #[serde(skip)]
    pub csv: Option<PathBuf>,
    #[serde(skip)]
    pub json: Option<PathBuf>,
}

impl RunConfig {
    pub fn resolve(c: ConfigFile, default_levels: &str, default_horizon: usize) -> Result<RunConfig, CliError> {
        let system = c.system.ok_or_else(|| CliError::Config("no system given".into()))?;
        let levels = match c.levels {
            Some(l) => l.resolve()?,
            None => parse_levels(default_levels)?,
        };
        let horizon = c.horizon.unwrap_or(default_horizon);
        if horizon < MIN_HORIZON {
            return Err(CliError::Config(format!("horizon {horizon} is below {MIN_HORIZON}")));
        }
        let d = Bands::default();
        let bands = Bands {
            tail_fraction: c.tail_fraction.unwrap_or(d.tail_fraction),
            linear_band: (
                c.linear_band_lo.unwrap_or(d.linear_band.0),
                c.linear_band_hi.unwrap_or(d.linear_band.1),
            ),
            bounded_max_degree: c.bounded_max_degree.unwrap_or(d.bounded_max_degree),
            exp_rate_floor: c.exp_rate_floor.unwrap_or(d.exp_rate_floor),
        };
        bands.validate().map_err(|e| CliError::Config(e.to_string()))?;
        let agreement_slack = c.agreement_slack.unwrap_or(0.3);
        if !(agreement_slack >= 0.0) {
            return Err(CliError::Config("agreement_slack must be >= 0".into()));
        }
        if c.grid == Some(0) {
            return Err(CliError::Config("grid must be positive".into()));
        }
        Ok(RunConfig {
            system,
            compact: c.compact.unwrap_or_else(|| "default".into()),
            levels,
            horizon,
            grid: c.grid,
            seed: c.seed,
            alpha: c.alpha,
            generators: c.generators.unwrap_or(false),
            bands,
            agreement_slack,
            family: c.family,
            n0_max: c.n0_max.unwrap_or(64),
            search_bound: c.search_bound.unwrap_or(2 * horizon),
            max_words_per_orbit: c.max_words_per_orbit,
            csv: c.csv.map(PathBuf::from),
            json: c.json.map(PathBuf::from),
        })
    }

    /// SHA-256 of the config's JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn catalog_options(&self) -> entrograph::CatalogOptions {
        entrograph::CatalogOptions {
            grid: self.grid,
            horizon: Some(self.horizon),
            alpha: self.alpha,
            levels: None,
        }
    }
}
