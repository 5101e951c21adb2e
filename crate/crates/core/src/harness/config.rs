//! Experiment configuration files.
//!
//! A flat `key = value` format with `#` comments:
//!
//! ```text
//! schema_version = 1
//! methods = raw, pca, tca
//! components_k = 80
//! nu = 0.25
//! detector_kernel = linear
//! tca_kernel = rbf(median)
//! tca_mu = 1.0
//! normalize = false
//! seed = 0
//!
//! domain.canoe.train = canoe_train.featb
//! domain.canoe.test = canoe_test.featb
//! domain.canoe.labels = canoe_test.labels
//! ```
//!
//! Relative paths resolve against the config file's directory. Unknown or
//! repeated keys are errors so a typo never silently falls back to a default.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use super::ScenarioConfig;
use crate::data::{load_features, load_labels, DomainDataset};
use crate::error::{Error, Result};
use crate::generalization::Method;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct DomainFiles {
    pub name: String,
    pub train: PathBuf,
    pub test: PathBuf,
    pub labels: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub methods: Vec<Method>,
    /// Shared settings; its `method` field is ignored.
    pub base: ScenarioConfig,
    pub domains: Vec<DomainFiles>,
}

fn bad(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("config line {line}: {msg}"))
}

fn parse_value<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| bad(line, format!("invalid value {v:?} for {key}")))
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or_else(|| Path::new(""));
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut methods = vec![Method::Raw, Method::Pca, Method::Tca];
        let mut cfg = ScenarioConfig::default();
        let mut version = None;
        let mut seen = HashSet::new();
        let mut domains: Vec<(String, [Option<PathBuf>; 3])> = Vec::new();

        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| bad(line, "expected key = value"))?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(bad(line, format!("{key} set twice")));
            }
            match key {
                "schema_version" => version = Some(parse_value::<u32>(line, key, value)?),
                "methods" => {
                    methods = value
                        .split(',')
                        .map(|m| m.parse::<Method>().map_err(|_| bad(line, format!("unknown method {m:?}"))))
                        .collect::<Result<_>>()?;
                }
                "components_k" => cfg.components_k = parse_value(line, key, value)?,
                "nu" => cfg.nu = parse_value(line, key, value)?,
                "detector_kernel" => cfg.detector_kernel = value.parse()?,
                "tca_kernel" => cfg.tca_kernel = value.parse()?,
                "tca_mu" => cfg.tca_mu = parse_value(line, key, value)?,
                "normalize" => cfg.normalize = parse_value(line, key, value)?,
                "seed" => cfg.seed = parse_value(line, key, value)?,
                _ => {
                    let (name, field) = key
                        .strip_prefix("domain.")
                        .and_then(|rest| rest.rsplit_once('.'))
                        .ok_or_else(|| bad(line, format!("unknown key {key:?}")))?;
                    let slot = match field {
                        "train" => 0,
                        "test" => 1,
                        "labels" => 2,
                        _ => return Err(bad(line, format!("unknown key {key:?}"))),
                    };
                    if name.is_empty() {
                        return Err(bad(line, "empty domain name"));
                    }
                    let idx = match domains.iter().position(|(n, _)| n == name) {
                        Some(i) => i,
                        None => {
                            domains.push((name.to_string(), [None, None, None]));
                            domains.len() - 1
                        }
                    };
                    domains[idx].1[slot] = Some(base_dir.join(value));
                }
            }
        }

        match version {
            Some(SCHEMA_VERSION) => {}
            Some(v) => {
                return Err(Error::Config(format!(
                    "unsupported schema_version {v}, expected {SCHEMA_VERSION}"
                )))
            }
            None => return Err(Error::Config("missing schema_version".into())),
        }
        if methods.is_empty() {
            return Err(Error::Config("methods is empty".into()));
        }
        cfg.validate()?;

        let domains = domains
            .into_iter()
            .map(|(name, [train, test, labels])| {
                let need = |p: Option<PathBuf>, f: &str| {
                    p.ok_or_else(|| Error::Config(format!("domain.{name}.{f} is missing")))
                };
                Ok(DomainFiles {
                    train: need(train, "train")?,
                    test: need(test, "test")?,
                    labels: need(labels, "labels")?,
                    name,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if domains.len() < 2 {
            return Err(Error::Config(format!(
                "need at least 2 domains, got {}",
                domains.len()
            )));
        }

        Ok(Self { methods, base: cfg, domains })
    }

    /// One scenario per configured method, in order.
    pub fn scenarios(&self) -> Vec<ScenarioConfig> {
        self.methods
            .iter()
            .map(|&method| ScenarioConfig { method, ..self.base })
            .collect()
    }

    /// Loads every domain, returning them with the load time in milliseconds.
    pub fn load_domains(&self) -> Result<(Vec<DomainDataset>, f64)> {
        let t = Instant::now();
        let domains = self
            .domains
            .iter()
            .map(|d| {
                DomainDataset::new(
                    d.name.clone(),
                    load_features(&d.train)?,
                    load_features(&d.test)?,
                    load_labels(&d.labels)?,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((domains, t.elapsed().as_secs_f64() * 1e3))
    }

    /// Renders the config in the file format. Paths are written as given.
    pub fn to_text(&self) -> String {
        let c = &self.base;
        let mut out = String::new();
        let _ = writeln!(out, "schema_version = {SCHEMA_VERSION}");
        let methods: Vec<&str> = self.methods.iter().map(|m| m.as_str()).collect();
        let _ = writeln!(out, "methods = {}", methods.join(", "));
        let _ = writeln!(out, "components_k = {}", c.components_k);
        let _ = writeln!(out, "nu = {}", c.nu);
        let _ = writeln!(out, "detector_kernel = {}", c.detector_kernel);
        let _ = writeln!(out, "tca_kernel = {}", c.tca_kernel);
        let _ = writeln!(out, "tca_mu = {}", c.tca_mu);
        let _ = writeln!(out, "normalize = {}", c.normalize);
        let _ = writeln!(out, "seed = {}", c.seed);
        for d in &self.domains {
            out.push('\n');
            let _ = writeln!(out, "domain.{}.train = {}", d.name, d.train.display());
            let _ = writeln!(out, "domain.{}.test = {}", d.name, d.test.display());
            let _ = writeln!(out, "domain.{}.labels = {}", d.name, d.labels.display());
        }
        out
    }
}
