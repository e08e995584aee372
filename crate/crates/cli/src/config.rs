//! Defaults, overridden by a `key = value` file named in
//! `ESSENTIAL_REWRITE_CONFIG`, overridden in turn by flags.

use std::fs;

use serde::Serialize;

pub const CONFIG_ENV: &str = "ESSENTIAL_REWRITE_CONFIG";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Text,
    Json,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CliConfig {
    pub fuel: usize,
    pub size_bound: usize,
    pub node_budget: usize,
    pub depth_budget: usize,
    pub output: OutputFormat,
    pub seed: u64,
    pub samples: usize,
    pub parallel: usize,
}

impl Default for CliConfig {
    fn default() -> Self {
        CliConfig {
            fuel: 1000,
            size_bound: 8,
            node_budget: 20_000,
            depth_budget: 64,
            output: OutputFormat::Text,
            seed: 0,
            samples: 500,
            parallel: 1,
        }
    }
}

fn positive(key: &str, value: &str) -> Result<usize, String> {
    match value.parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(format!("`{key}` must be a positive integer, got `{value}`")),
    }
}

impl CliConfig {
    /// Apply `key = value` lines; `#` starts a comment.
    pub fn apply_file_contents(&mut self, text: &str) -> Result<(), String> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("config line {}: expected key = value", i + 1))?;
            self.set(key.trim(), value.trim()).map_err(|e| format!("config line {}: {e}", i + 1))?;
        }
        Ok(())
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        match key {
            "fuel" => self.fuel = positive(key, value)?,
            "size" | "size_bound" => self.size_bound = positive(key, value)?,
            "budget" | "node_budget" => self.node_budget = positive(key, value)?,
            "depth_budget" => self.depth_budget = positive(key, value)?,
            "samples" => self.samples = positive(key, value)?,
            "parallel" => self.parallel = positive(key, value)?,
            "seed" => self.seed = value.parse().map_err(|_| format!("`seed` must be an integer, got `{value}`"))?,
            "output" => {
                self.output = match value {
                    "text" => OutputFormat::Text,
                    "json" => OutputFormat::Json,
                    _ => return Err(format!("`output` must be text or json, got `{value}`")),
                }
            }
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// Defaults plus the file named by the environment variable, if set.
    pub fn from_env() -> Result<Self, String> {
        let mut cfg = CliConfig::default();
        if let Ok(path) = std::env::var(CONFIG_ENV) {
            let text = fs::read_to_string(&path).map_err(|e| format!("cannot read config file {path}: {e}"))?;
            cfg.apply_file_contents(&text)?;
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_overrides_defaults() {
        let mut cfg = CliConfig::default();
        cfg.apply_file_contents("fuel = 7\n# comment\n\nsize=5\noutput = json # trailing\n").unwrap();
        assert_eq!(cfg.fuel, 7);
        assert_eq!(cfg.size_bound, 5);
        assert_eq!(cfg.output, OutputFormat::Json);
        assert_eq!(cfg.node_budget, 20_000);
    }

    #[test]
    fn bad_lines_are_rejected() {
        let mut cfg = CliConfig::default();
        assert!(cfg.apply_file_contents("fuel 7").is_err());
        assert!(cfg.apply_file_contents("fuel = 0").is_err());
        assert!(cfg.apply_file_contents("colour = red").is_err());
    }
}
