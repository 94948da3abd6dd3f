//! The `refinery.toml` configuration file.
//!
//! ```toml
//! domains = "domain.toml"
//!
//! [verifier]
//! backends = ["smt", "bounded"]
//! timeout_secs = 10
//! smt_cmd = "z3"
//!
//! [driver]
//! k = 3
//! accept_unknown = false
//!
//! [oracle]
//! name = "heuristic"
//!
//! [oracle.remote]
//! model = "default"
//! ```

use std::path::{Path, PathBuf};
use std::time::Duration;

use refinery_core::oracle::{DriveLimits, RemoteConfig};
use refinery_core::verifier::{DomainSpec, VerifierConfig};
use serde::Deserialize;

use crate::CliError;

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Domain file, relative to the configuration file.
    pub domains: Option<PathBuf>,
    pub verifier: VerifierSection,
    pub driver: DriverSection,
    pub oracle: OracleSection,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifierSection {
    pub backends: Vec<String>,
    pub timeout_secs: u64,
    pub smt_cmd: Option<String>,
    pub workers: Option<usize>,
}

impl Default for VerifierSection {
    fn default() -> Self {
        VerifierSection { backends: vec!["smt".into(), "bounded".into()], timeout_secs: 10, smt_cmd: None, workers: None }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriverSection {
    pub k: usize,
    pub max_proposals: usize,
    pub max_nodes: usize,
    pub accept_unknown: bool,
}

impl Default for DriverSection {
    fn default() -> Self {
        let d = DriveLimits::default();
        DriverSection { k: d.k, max_proposals: d.max_proposals, max_nodes: d.max_nodes, accept_unknown: d.accept_unknown }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleSection {
    pub name: String,
    pub remote: RemoteConfig,
}

impl Default for OracleSection {
    fn default() -> Self {
        OracleSection { name: "scripted".into(), remote: RemoteConfig::default() }
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Config, CliError> {
        toml::from_str(text).map_err(|e| CliError::Input(format!("configuration: {e}")))
    }

    /// Reads a configuration file; relative paths inside it resolve against its directory.
    pub fn load(path: &Path) -> Result<Config, CliError> {
        let mut cfg = Config::parse(&crate::read(path)?)?;
        if let (Some(d), Some(dir)) = (&cfg.domains, path.parent()) {
            cfg.domains = Some(dir.join(d));
        }
        Ok(cfg)
    }

    pub fn limits(&self) -> DriveLimits {
        DriveLimits {
            k: self.driver.k.max(1),
            max_proposals: self.driver.max_proposals,
            max_nodes: self.driver.max_nodes,
            accept_unknown: self.driver.accept_unknown,
        }
    }

    /// Domains from `explicit`, else the configured file, else the defaults.
    pub fn domains(&self, explicit: Option<&Path>) -> Result<DomainSpec, CliError> {
        match explicit.or(self.domains.as_deref()) {
            Some(p) => load_domains(p),
            None => Ok(DomainSpec::default()),
        }
    }

    pub fn verifier_config(&self, domains: DomainSpec) -> VerifierConfig {
        let d = VerifierConfig::default();
        VerifierConfig {
            backends: self.verifier.backends.clone(),
            timeout: Duration::from_secs(self.verifier.timeout_secs.max(1)),
            smt_cmd: self.verifier.smt_cmd.clone(),
            domains,
            workers: self.verifier.workers.unwrap_or(d.workers),
        }
    }
}

pub fn load_domains(path: &Path) -> Result<DomainSpec, CliError> {
    DomainSpec::from_toml(&crate::read(path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_overrides() {
        let c = Config::parse("").unwrap();
        assert_eq!(c.verifier.backends, ["smt", "bounded"]);
        assert_eq!(c.limits(), DriveLimits::default());
        let c = Config::parse("[driver]\nk = 5\n[oracle]\nname = \"heuristic\"\n[oracle.remote]\nmodel = \"m\"\n").unwrap();
        assert_eq!((c.limits().k, c.oracle.name.as_str(), c.oracle.remote.model.as_str()), (5, "heuristic", "m"));
        assert!(Config::parse("[driver]\nretries = 2\n").is_err());
    }
}
