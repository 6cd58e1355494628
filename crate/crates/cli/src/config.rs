//! Run configuration: defaults, then a TOML file, then `FINFOM_*` environment
//! variables, then command-line flags.

use std::path::{Path, PathBuf};

use finfom::domain::FinMaterial;
use finfom::surrogate::{ModelKind, Target};
use serde::Deserialize;

use crate::error::CliError;

pub const ENV_PREFIX: &str = "FINFOM_";

/// On-disk form; every field optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    seed: Option<u64>,
    materials: Option<Vec<String>>,
    kind: Option<String>,
    targets: Option<Vec<String>>,
    velocity: Option<f64>,
    plant: Option<PathBuf>,
    epochs: Option<usize>,
    #[serde(default)]
    paths: FilePaths,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FilePaths {
    data_dir: Option<PathBuf>,
    model_dir: Option<PathBuf>,
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub out_dir: PathBuf,
    data_dir: Option<PathBuf>,
    model_dir: Option<PathBuf>,
    pub plant: Option<PathBuf>,
    pub seed: u64,
    pub materials: Vec<FinMaterial>,
    pub kind: ModelKind,
    pub targets: Vec<Target>,
    pub velocity: f64,
    /// Network epoch override.
    pub epochs: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            out_dir: PathBuf::from("out"),
            data_dir: None,
            model_dir: None,
            plant: None,
            seed: 42,
            materials: FinMaterial::ALL.to_vec(),
            kind: ModelKind::Quartic,
            targets: Target::ALL.to_vec(),
            velocity: 1.0,
            epochs: None,
        }
    }
}

fn parse<T: std::str::FromStr>(what: &str, s: &str) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    s.trim()
        .parse()
        .map_err(|e| CliError::Input(format!("{what}: {e}")))
}

fn parse_list<T: std::str::FromStr>(what: &str, items: &[String]) -> Result<Vec<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    if items.is_empty() {
        return Err(CliError::Input(format!("{what}: list is empty")));
    }
    items.iter().map(|s| parse(what, s)).collect()
}

fn split_env(s: &str) -> Vec<String> {
    s.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect()
}

impl RunConfig {
    pub fn data_dir(&self) -> PathBuf {
        self.data_dir
            .clone()
            .unwrap_or_else(|| self.out_dir.join("data"))
    }

    pub fn model_dir(&self) -> PathBuf {
        self.model_dir
            .clone()
            .unwrap_or_else(|| self.out_dir.join("models"))
    }

    /// Loads `path` (if given) over the defaults, then applies environment
    /// overrides from `env`.
    pub fn load(
        path: Option<&Path>,
        env: impl IntoIterator<Item = (String, String)>,
    ) -> Result<Self, CliError> {
        let mut cfg = RunConfig::default();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Input(format!("config {}: {e}", path.display())))?;
            let file: FileConfig = toml::from_str(&text)
                .map_err(|e| CliError::Input(format!("config {}: {e}", path.display())))?;
            cfg.apply_file(file)?;
        }
        for (key, value) in env {
            if let Some(name) = key.strip_prefix(ENV_PREFIX) {
                cfg.apply_env(name, &value)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply_file(&mut self, f: FileConfig) -> Result<(), CliError> {
        if let Some(v) = f.seed {
            self.seed = v;
        }
        if let Some(v) = f.materials {
            self.materials = parse_list("materials", &v)?;
        }
        if let Some(v) = f.kind {
            self.kind = parse("kind", &v)?;
        }
        if let Some(v) = f.targets {
            self.targets = parse_list("targets", &v)?;
        }
        if let Some(v) = f.velocity {
            self.velocity = v;
        }
        if f.plant.is_some() {
            self.plant = f.plant;
        }
        if f.epochs.is_some() {
            self.epochs = f.epochs;
        }
        if let Some(v) = f.paths.out_dir {
            self.out_dir = v;
        }
        if f.paths.data_dir.is_some() {
            self.data_dir = f.paths.data_dir;
        }
        if f.paths.model_dir.is_some() {
            self.model_dir = f.paths.model_dir;
        }
        Ok(())
    }

    fn apply_env(&mut self, name: &str, value: &str) -> Result<(), CliError> {
        let what = format!("{ENV_PREFIX}{name}");
        match name {
            "SEED" => self.seed = parse(&what, value)?,
            "MATERIALS" => self.materials = parse_list(&what, &split_env(value))?,
            "KIND" => self.kind = parse(&what, value)?,
            "TARGETS" => self.targets = parse_list(&what, &split_env(value))?,
            "VELOCITY" => self.velocity = parse(&what, value)?,
            "EPOCHS" => self.epochs = Some(parse(&what, value)?),
            "PLANT" => self.plant = Some(value.into()),
            "OUT_DIR" => self.out_dir = value.into(),
            "DATA_DIR" => self.data_dir = Some(value.into()),
            "MODEL_DIR" => self.model_dir = Some(value.into()),
            // other FINFOM_ variables (log level, etc.) are not config
            _ => {}
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.velocity.is_finite() && self.velocity >= 0.0) {
            return Err(CliError::Input(format!(
                "velocity {} must be finite and non-negative",
                self.velocity
            )));
        }
        if self.materials.is_empty() || self.targets.is_empty() {
            return Err(CliError::Input(
                "materials and targets must be non-empty".into(),
            ));
        }
        if self.epochs == Some(0) {
            return Err(CliError::Input("epochs must be positive".into()));
        }
        Ok(())
    }
}
