//! Flat `key=value` run configuration. Every key can also be set by a CLI
//! flag of the same name; flags win. Unknown keys are rejected.

use std::path::Path;

use crate::error::{Error, Result};
use crate::pipeline::RunConfig;

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "on" | "yes" => Ok(true),
        "false" | "0" | "off" | "no" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected a boolean, got {value:?}"))),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: could not parse {value:?}")))
}

/// Applies one `key=value` override.
pub fn apply_key(cfg: &mut RunConfig, key: &str, value: &str) -> Result<()> {
    match key {
        "diffusion" => cfg.diffusion = parse_bool(key, value)?,
        "diffusion_iterations" => cfg.diffusion_iterations = parse_num(key, value)?,
        "diffusion_lambda" => cfg.diffusion_lambda = parse_num(key, value)?,
        "diffusion_kappa" => cfg.diffusion_kappa = parse_num(key, value)?,
        "mser_delta" => cfg.mser_delta = parse_num(key, value)?,
        "mser_min_area_frac" => cfg.mser_min_area_frac = parse_num(key, value)?,
        "mser_max_area_frac" => cfg.mser_max_area_frac = parse_num(key, value)?,
        "mser_max_variation" => cfg.mser_max_variation = parse_num(key, value)?,
        "ga_population" => cfg.ga_population = parse_num(key, value)?,
        "ga_generations" => cfg.ga_generations = parse_num(key, value)?,
        "ga_crossover_rate" => cfg.ga_crossover_rate = parse_num(key, value)?,
        "ga_mutation_rate" => cfg.ga_mutation_rate = parse_num(key, value)?,
        "ga_elitism" => cfg.ga_elitism = parse_num(key, value)?,
        "z_threshold" => cfg.z_threshold = parse_num(key, value)?,
        "dist_min" => cfg.dist_min = parse_num(key, value)?,
        "size_constraint" => cfg.size_constraint = parse_bool(key, value)?,
        "distance_constraint" => cfg.distance_constraint = parse_bool(key, value)?,
        "min_lesion_size" => cfg.min_lesion_size = parse_num(key, value)?,
        "dth" => cfg.dth = parse_num(key, value)?,
        "n_adjacent" => cfg.n_adjacent = parse_num(key, value)?,
        "threads" => cfg.threads = parse_num(key, value)?,
        "seed" => cfg.seed = parse_num(key, value)?,
        _ => return Err(Error::Config(format!("unknown key {key:?}"))),
    }
    Ok(())
}

/// Reads a config file into `cfg`. Lines are `key=value`; blank lines and
/// `#` comments are skipped.
pub fn apply_file(cfg: &mut RunConfig, path: &Path) -> Result<()> {
    let text = std::fs::read_to_string(path)?;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Config(format!(
                "{}:{}: expected key=value, got {line:?}",
                path.display(),
                lineno + 1
            )));
        };
        apply_key(cfg, key.trim(), value.trim())?;
    }
    Ok(())
}

/// Stable textual dump of a config, also valid as a config file.
pub fn render(cfg: &RunConfig) -> String {
    format!(
        "diffusion={}\n\
         diffusion_iterations={}\n\
         diffusion_lambda={}\n\
         diffusion_kappa={}\n\
         mser_delta={}\n\
         mser_min_area_frac={}\n\
         mser_max_area_frac={}\n\
         mser_max_variation={}\n\
         ga_population={}\n\
         ga_generations={}\n\
         ga_crossover_rate={}\n\
         ga_mutation_rate={}\n\
         ga_elitism={}\n\
         z_threshold={}\n\
         dist_min={}\n\
         size_constraint={}\n\
         distance_constraint={}\n\
         min_lesion_size={}\n\
         dth={}\n\
         n_adjacent={}\n\
         threads={}\n\
         seed={}\n",
        cfg.diffusion,
        cfg.diffusion_iterations,
        cfg.diffusion_lambda,
        cfg.diffusion_kappa,
        cfg.mser_delta,
        cfg.mser_min_area_frac,
        cfg.mser_max_area_frac,
        cfg.mser_max_variation,
        cfg.ga_population,
        cfg.ga_generations,
        cfg.ga_crossover_rate,
        cfg.ga_mutation_rate,
        cfg.ga_elitism,
        cfg.z_threshold,
        cfg.dist_min,
        cfg.size_constraint,
        cfg.distance_constraint,
        cfg.min_lesion_size,
        cfg.dth,
        cfg.n_adjacent,
        cfg.threads,
        cfg.seed,
    )
}
