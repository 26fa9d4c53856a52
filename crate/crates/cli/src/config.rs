//! Flat JSON run configuration files.
//!
//! Every key is optional; missing keys take the defaults of the library
//! config types. The resolved echo written next to each run uses the same
//! format, so it can be passed back with `--config`.

use std::path::Path;

use diga::arch_search::ArchSearchConfig;
use diga::engine::EvolutionConfig;
use diga::gd::GdConfig;
use diga::variation::MutationConfig;
use diga::Architecture;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Default search bound and threshold when neither flag nor file sets them.
pub const DEFAULT_MAX_DIMS: [usize; 4] = [12288, 20, 5, 1];
pub const DEFAULT_STOP_COST: f64 = 0.035;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveFile {
    pub size: Option<usize>,
    pub max_iter: Option<usize>,
    pub stop_cost: Option<f64>,
    pub max_dims: Option<Architecture>,
    pub seed: Option<u64>,
    pub cr: Option<f64>,
    pub par: Option<f64>,
    pub pitch_span: Option<usize>,
    pub mutation_rate_start: Option<f64>,
    pub mutation_rate_end: Option<f64>,
    pub mutation_schedule_iters: Option<usize>,
    pub mutation_scale: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GdFile {
    pub arch: Option<Architecture>,
    pub learning_rate: Option<f64>,
    pub iterations: Option<usize>,
    pub seed: Option<u64>,
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| CliError::ConfigFile {
        path: path.to_path_buf(),
        source,
    })
}

impl EvolveFile {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        read_json(path)
    }

    pub fn resolve(&self) -> EvolutionConfig {
        let max_dims = self.max_dims.clone().unwrap_or_else(|| {
            Architecture::new(DEFAULT_MAX_DIMS.to_vec()).expect("valid default")
        });
        let mut c = EvolutionConfig::new(max_dims.clone(), self.stop_cost.unwrap_or(DEFAULT_STOP_COST));
        let search = ArchSearchConfig::new(max_dims);
        let mutation = MutationConfig::default();
        c.size = self.size.unwrap_or(c.size);
        c.max_iter = self.max_iter.unwrap_or(c.max_iter);
        c.seed = self.seed.unwrap_or(c.seed);
        c.arch_search = ArchSearchConfig {
            cr: self.cr.unwrap_or(search.cr),
            par: self.par.unwrap_or(search.par),
            pitch_span: self.pitch_span.unwrap_or(search.pitch_span),
            ..search
        };
        c.mutation = MutationConfig {
            rate_start: self.mutation_rate_start.unwrap_or(mutation.rate_start),
            rate_end: self.mutation_rate_end.unwrap_or(mutation.rate_end),
            max_iter: self.mutation_schedule_iters.unwrap_or(mutation.max_iter),
            scale: self.mutation_scale.unwrap_or(mutation.scale),
        };
        c
    }

    pub fn from_config(c: &EvolutionConfig) -> Self {
        Self {
            size: Some(c.size),
            max_iter: Some(c.max_iter),
            stop_cost: Some(c.stop_cost),
            max_dims: Some(c.max_dims.clone()),
            seed: Some(c.seed),
            cr: Some(c.arch_search.cr),
            par: Some(c.arch_search.par),
            pitch_span: Some(c.arch_search.pitch_span),
            mutation_rate_start: Some(c.mutation.rate_start),
            mutation_rate_end: Some(c.mutation.rate_end),
            mutation_schedule_iters: Some(c.mutation.max_iter),
            mutation_scale: Some(c.mutation.scale),
        }
    }
}

impl GdFile {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        read_json(path)
    }

    pub fn resolve(&self) -> Result<GdConfig, CliError> {
        let arch = self
            .arch
            .clone()
            .ok_or_else(|| CliError::Config("gd needs an architecture (--arch or \"arch\")".into()))?;
        let mut c = GdConfig::new(arch);
        c.learning_rate = self.learning_rate.unwrap_or(c.learning_rate);
        c.iterations = self.iterations.unwrap_or(c.iterations);
        c.seed = self.seed.unwrap_or(c.seed);
        Ok(c)
    }

    pub fn from_config(c: &GdConfig) -> Self {
        Self {
            arch: Some(c.arch.clone()),
            learning_rate: Some(c.learning_rate),
            iterations: Some(c.iterations),
            seed: Some(c.seed),
        }
    }
}
