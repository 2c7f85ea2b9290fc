//! Shared run configuration: flags take precedence over the config file,
//! which takes precedence over defaults.

use anyhow::{Context as _, Result};
use serde::Deserialize;
use std::fs;
use std::io::Write;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub n: Option<usize>,
    pub metric: Option<String>,
    pub metric_params: Option<String>,
    pub potential: Option<String>,
    pub mass: Option<f64>,
    pub omega: Option<f64>,
    pub lambda4: Option<f64>,
    pub t: Option<f64>,
    pub dt: Option<f64>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<String>,
    pub format: Option<String>,
    pub alpha: Option<f64>,
    pub n_theta: Option<usize>,
    pub renorm: Option<f64>,
    pub fiber: Option<String>,
    pub box_half: Option<f64>,
}

#[derive(Debug)]
pub struct Context {
    pub file: FileConfig,
    pub out: Option<String>,
    pub format: Option<String>,
    pub seed: Option<u64>,
}

impl Context {
    pub fn load(
        config_path: &Option<String>,
        out: &Option<String>,
        format: &Option<String>,
        seed: Option<u64>,
    ) -> Result<Self> {
        let file = match config_path {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading config {path}"))?;
                serde_json::from_str(&text).with_context(|| format!("parsing config {path}"))?
            }
            None => FileConfig::default(),
        };
        Ok(Context { file, out: out.clone(), format: format.clone(), seed })
    }

    pub fn seed(&self) -> u64 {
        self.seed.or(self.file.seed).unwrap_or(0)
    }

    pub fn format(&self) -> &str {
        self.format.as_deref().or(self.file.format.as_deref()).unwrap_or("json")
    }

    /// Write the payload to --out or stdout.
    pub fn emit(&self, payload: &str) -> Result<()> {
        let target = self.out.as_deref().or(self.file.out.as_deref());
        match target {
            Some(path) => {
                let mut f = fs::File::create(path).with_context(|| format!("creating {path}"))?;
                f.write_all(payload.as_bytes())?;
                if !payload.ends_with('\n') {
                    f.write_all(b"\n")?;
                }
            }
            None => {
                println!("{payload}");
            }
        }
        Ok(())
    }
}
