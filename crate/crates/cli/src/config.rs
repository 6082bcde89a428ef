//! Run configuration: built-in defaults, then the TOML file, then `--set` overrides.
//!
//! ```toml
//! seed = 7
//!
//! [model]
//! preset = "large_offspring"     # two_deme_wf | large_offspring | beta_fitness | fv_torus | custom
//! population_scale = 1000
//! psi = 0.5                      # preset parameters; missing ones take the preset defaults
//!
//! [experiment]
//! sampling = [0, 0, 1]           # deme of each sampled gene copy
//! times = [0.5, 1.0]
//! pedigrees = 100
//! loci = 10
//! ```
//!
//! An optional `[rate]` table (`phi`, `kappa`, `mu`) replaces the limit measure
//! derived from the model, and `[model.graph]` (`relative_size`, `edges`) replaces
//! the preset's deme graph.

use pedcoal::limit::RateSpec;
use pedcoal::model::{Deme, DemeGraph};
use pedcoal::offspring::{FitnessLaw, FvTorusParams, ModelSpec, Preset};
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::error::CliError;

pub const PRESET_NAMES: [&str; 4] = ["two_deme_wf", "large_offspring", "beta_fitness", "fv_torus"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    pub model: ModelConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<RateSpec>,
    pub experiment: Experiment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub population_scale: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<DemeGraph>,
    #[serde(flatten)]
    pub preset: Preset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Experiment {
    /// Deme of every sampled gene copy; empty means `sample_size` copies in deme 0.
    pub sampling: Vec<Deme>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_size: Option<usize>,
    pub times: Vec<f64>,
    /// Block count required at each entry of `times` by the cylinder set; empty means 1 everywhere.
    pub blocks: Vec<usize>,
    pub horizon: f64,
    pub pedigrees: u64,
    /// Loci per pedigree, or gene-tree copies per Ψ realization in the limit.
    pub loci: u64,
    pub realizations: u64,
    pub generations: u64,
    pub moment: u32,
    pub sfs_source: SfsSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SfsSource {
    Limit,
    Quenched,
}

impl Default for Experiment {
    fn default() -> Self {
        Self {
            sampling: Vec::new(),
            sample_size: None,
            times: vec![1.0],
            blocks: Vec::new(),
            horizon: 10.0,
            pedigrees: 100,
            loci: 10,
            realizations: 1000,
            generations: 3,
            moment: 2,
            sfs_source: SfsSource::Limit,
        }
    }
}

impl Experiment {
    pub fn sampling(&self) -> Result<Vec<Deme>, CliError> {
        if self.sample_size == Some(0) {
            return Err(CliError::Validation("experiment.sample_size must be at least 1".into()));
        }
        match self.sample_size {
            _ if self.sampling.is_empty() => Ok(vec![0; self.sample_size.unwrap_or(2)]),
            Some(n) if n != self.sampling.len() => Err(CliError::Validation(format!(
                "experiment.sampling has {} entries but experiment.sample_size is {n}",
                self.sampling.len()
            ))),
            _ => Ok(self.sampling.clone()),
        }
    }

    pub fn block_targets(&self) -> Result<Vec<usize>, CliError> {
        match self.blocks.len() {
            0 => Ok(vec![1; self.times.len()]),
            k if k == self.times.len() => Ok(self.blocks.clone()),
            k => Err(CliError::Validation(format!("experiment.blocks has {k} entries for {} times", self.times.len()))),
        }
    }
}

/// Default parameters for a named preset.
pub fn preset_defaults(name: &str) -> Result<Preset, CliError> {
    Ok(match name {
        "two_deme_wf" => Preset::TwoDemeWf { sigma: 1.0 },
        "large_offspring" => Preset::LargeOffspring { sigma: 1.0, phi: 1.0, psi: 0.5, gamma: 1.0 },
        "beta_fitness" => Preset::BetaFitness { alpha: 1.5, a: 1.0, b: 2.0, fitness: FitnessLaw::Pareto },
        "fv_torus" => Preset::FvTorus(FvTorusParams::default_3x3()),
        "custom" => Preset::Custom { migration: vec![0.0, 0.0], reproduction: pedcoal::offspring::CustomReproduction::WrightFisher },
        other => return Err(CliError::Validation(format!("unknown preset {other:?}; expected one of {PRESET_NAMES:?} or \"custom\""))),
    })
}

fn to_table<T: Serialize>(value: &T) -> Table {
    match Value::try_from(value).expect("defaults serialize to TOML") {
        Value::Table(t) => t,
        _ => unreachable!("defaults are tables"),
    }
}

/// Recursively overlays `top` onto `base`; tables merge, everything else replaces.
fn overlay(base: &mut Table, top: Table) {
    for (key, value) in top {
        match (base.get_mut(&key), value) {
            (Some(Value::Table(b)), Value::Table(t)) => overlay(b, t),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}

/// Parses `a.b.c=value`; the value is read as TOML and falls back to a bare string.
fn parse_override(assignment: &str) -> Result<(Vec<String>, Value), CliError> {
    let (path, raw) =
        assignment.split_once('=').ok_or_else(|| CliError::Validation(format!("override {assignment:?} is not of the form key=value")))?;
    let keys: Vec<String> = path.trim().split('.').map(str::to_string).collect();
    if keys.iter().any(String::is_empty) {
        return Err(CliError::Validation(format!("override key {path:?} has an empty segment")));
    }
    let value = toml::from_str::<Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.trim().to_string()));
    Ok((keys, value))
}

fn set_path(table: &mut Table, keys: &[String], value: Value) -> Result<(), CliError> {
    let (last, parents) = keys.split_last().expect("nonempty key path");
    let mut cursor = table;
    for key in parents {
        let entry = cursor.entry(key.clone()).or_insert_with(|| Value::Table(Table::new()));
        cursor = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Validation(format!("override path {} crosses the non-table key {key:?}", keys.join("."))))?;
    }
    cursor.insert(last.clone(), value);
    Ok(())
}

/// Builds the resolved configuration.
pub fn resolve(file: Option<&str>, overrides: &[String]) -> Result<Config, CliError> {
    let mut user = match file {
        Some(text) => toml::from_str::<Table>(text).map_err(|e| CliError::Validation(format!("config: {e}")))?,
        None => Table::new(),
    };
    for assignment in overrides {
        let (keys, value) = parse_override(assignment)?;
        set_path(&mut user, &keys, value)?;
    }

    let preset_name = user
        .get("model")
        .and_then(|m| m.get("preset"))
        .map(|p| p.as_str().map(str::to_string).ok_or_else(|| CliError::Validation("model.preset must be a string".into())))
        .transpose()?
        .unwrap_or_else(|| "two_deme_wf".to_string());
    let defaults = Config {
        seed: 1,
        model: ModelConfig { population_scale: 1000, graph: None, preset: preset_defaults(&preset_name)? },
        rate: None,
        experiment: Experiment::default(),
    };
    let mut merged = to_table(&defaults);
    overlay(&mut merged, user);
    Value::Table(merged).try_into::<Config>().map_err(|e| CliError::Validation(format!("config: {e}")))
}

impl Config {
    /// The finite-N model, validated.
    pub fn model_spec(&self) -> Result<ModelSpec, CliError> {
        let graph = match (&self.model.graph, &self.model.preset) {
            (Some(g), _) => g.clone(),
            (None, Preset::FvTorus(p)) => DemeGraph::complete(p.l1 * p.l2)?,
            (None, _) => DemeGraph::complete(2)?,
        };
        Ok(ModelSpec::new(graph, self.model.population_scale, self.model.preset.clone())?)
    }

    /// The limit triple: the `[rate]` table if present, otherwise the model's limit measure.
    pub fn rate_spec(&self, spec: &ModelSpec) -> Result<RateSpec, CliError> {
        let rate = match &self.rate {
            Some(r) => r.clone(),
            None => pedcoal::offspring::limit_measure(spec)?,
        };
        rate.validate(&spec.graph)?;
        Ok(rate)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_resolve_to_wright_fisher() {
        let c = resolve(None, &[]).unwrap();
        assert_eq!(c.model.preset, Preset::TwoDemeWf { sigma: 1.0 });
        assert_eq!(c.experiment.sampling().unwrap(), vec![0, 0]);
    }

    #[test]
    fn file_then_overrides() {
        let file = "seed = 3\n[model]\npreset = \"large_offspring\"\npsi = 0.3\n[experiment]\ntimes = [0.5, 2.0]\n";
        let c = resolve(Some(file), &["model.gamma=0.5".into(), "experiment.sampling=[0,1,1]".into()]).unwrap();
        assert_eq!(c.seed, 3);
        assert_eq!(c.model.preset, Preset::LargeOffspring { sigma: 1.0, phi: 1.0, psi: 0.3, gamma: 0.5 });
        assert_eq!(c.experiment.times, vec![0.5, 2.0]);
        assert_eq!(c.experiment.sampling().unwrap(), vec![0, 1, 1]);
    }

    #[test]
    fn string_fallback_and_bad_keys() {
        let c = resolve(None, &["model.preset=beta_fitness".into()]).unwrap();
        assert_eq!(c.model.preset.name(), "beta_fitness");
        assert!(matches!(resolve(None, &["experiment.nonsense=1".into()]), Err(CliError::Validation(_))));
        assert!(matches!(resolve(None, &["model.preset=nope".into()]), Err(CliError::Validation(_))));
        assert!(matches!(resolve(None, &["seed".into()]), Err(CliError::Validation(_))));
    }

    #[test]
    fn fv_torus_graph_follows_the_torus() {
        let c = resolve(None, &["model.preset=fv_torus".into(), "model.l1=2".into(), "model.l2=2".into()]).unwrap();
        assert_eq!(c.model_spec().unwrap().graph.num_demes(), 4);
    }
}
