//! Scenario configuration: a JSON file merged with command-line overrides.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub network: NetworkSettings,
    pub solver: SolverSettings,
    pub rotation: RotationSettings,
    pub admm: AdmmSettings,
    pub decompose: DecomposeSettings,
    /// Where artifacts go; not part of the hashed configuration.
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkSettings {
    /// Directory holding `node.csv`, `link.csv` and `demand.csv`.
    pub dir: Option<PathBuf>,
    pub node: Option<PathBuf>,
    pub link: Option<PathBuf>,
    pub demand: Option<PathBuf>,
    /// Rounds of shortest-path column generation when building the path set.
    pub path_rounds: usize,
}

impl Default for NetworkSettings {
    fn default() -> Self {
        Self {
            dir: None,
            node: None,
            link: None,
            demand: None,
            path_rounds: 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Gp,
    Fw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    Ue,
    So,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum StepRuleKind {
    LineSearch,
    Fixed,
    Diminishing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    pub method: Method,
    pub objective: Objective,
    pub gap: f64,
    pub max_iterations: usize,
    pub step_rule: StepRuleKind,
    /// Step for `fixed`, initial step for `diminishing`.
    pub step_size: Option<f64>,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            method: Method::Gp,
            objective: Objective::Ue,
            gap: 1e-4,
            max_iterations: 1000,
            step_rule: StepRuleKind::LineSearch,
            step_size: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RotationSettings {
    /// `start:stop:step`, inclusive.
    pub beta_grid: String,
    pub p_grid: String,
    pub schedule: Option<PathBuf>,
}

impl Default for RotationSettings {
    fn default() -> Self {
        Self {
            beta_grid: "1:4:1".into(),
            p_grid: "0:1:0.05".into(),
            schedule: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdmmSettings {
    pub instance: Option<PathBuf>,
    pub rho: f64,
    pub tol: f64,
    pub max_iterations: usize,
    pub adaptive_rho: bool,
}

impl Default for AdmmSettings {
    fn default() -> Self {
        Self {
            instance: None,
            rho: 1.0,
            tol: 1e-6,
            max_iterations: 5000,
            adaptive_rho: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum DecomposeMethod {
    Cp,
    Tucker,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecomposeSettings {
    pub method: DecomposeMethod,
    pub input: Option<PathBuf>,
    /// CP rank, or one rank per mode for Tucker.
    pub rank: Vec<usize>,
    pub tolerance: f64,
    pub max_sweeps: usize,
}

impl Default for DecomposeSettings {
    fn default() -> Self {
        Self {
            method: DecomposeMethod::Cp,
            input: None,
            rank: vec![2],
            tolerance: 1e-10,
            max_sweeps: 500,
        }
    }
}

impl ScenarioConfig {
    /// Reads a config file. Relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut config: Self =
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for slot in [
            &mut config.network.dir,
            &mut config.network.node,
            &mut config.network.link,
            &mut config.network.demand,
            &mut config.rotation.schedule,
            &mut config.admm.instance,
            &mut config.decompose.input,
            &mut config.out,
        ] {
            if let Some(p) = slot.as_mut() {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        Ok(config)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("ftt_out"))
    }

    /// Node, link and demand files, each either given directly or found in
    /// the network directory.
    pub fn network_files(&self) -> Result<[PathBuf; 3]> {
        let n = &self.network;
        let pick = |explicit: &Option<PathBuf>, name: &str| -> Result<PathBuf> {
            let path = match (explicit, &n.dir) {
                (Some(p), _) => p.clone(),
                (None, Some(dir)) => dir.join(name),
                (None, None) => bail!("no network given: pass --network DIR or --{}", name.trim_end_matches(".csv")),
            };
            if !path.is_file() {
                bail!("network file {} does not exist", path.display());
            }
            Ok(path)
        };
        Ok([
            pick(&n.node, "node.csv")?,
            pick(&n.link, "link.csv")?,
            pick(&n.demand, "demand.csv")?,
        ])
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

/// Parses `start:stop:step` into an inclusive grid. Points are computed as
/// `start + k·step`, so the grid does not accumulate rounding drift.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').map(str::trim).collect();
    let values: Vec<f64> = parts
        .iter()
        .map(|p| p.parse::<f64>().with_context(|| format!("grid {spec:?}: {p:?} is not a number")))
        .collect::<Result<_>>()?;
    match values[..] {
        [single] => Ok(vec![single]),
        [start, stop, step] => {
            if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
                bail!("grid {spec:?} must be finite");
            }
            if stop < start {
                bail!("grid {spec:?}: stop is below start");
            }
            if stop == start {
                return Ok(vec![start]);
            }
            if step <= 0.0 {
                bail!("grid {spec:?}: step must be positive");
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize;
            Ok((0..=count).map(|k| start + k as f64 * step).collect())
        }
        _ => bail!("grid {spec:?} must be `value` or `start:stop:step`"),
    }
}
