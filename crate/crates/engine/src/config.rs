use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use dml_core::pathsets::DEFAULT_PATHSET_LIMIT;
use dml_core::PropagationConfig;
use serde::{Deserialize, Serialize};

use crate::EngineError;

/// Service settings, read from a JSON file with these field names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub bind: String,
    pub port: u16,
    pub propagation: PropagationConfig,
    /// Model document loaded at startup.
    pub model: Option<PathBuf>,
    pub pathset_limit: usize,
    /// Directory served at `/` for the web console.
    pub static_dir: Option<PathBuf>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            bind: "127.0.0.1".to_string(),
            port: 8080,
            propagation: PropagationConfig::default(),
            model: None,
            pathset_limit: DEFAULT_PATHSET_LIMIT,
            static_dir: None,
        }
    }
}

impl ServiceConfig {
    pub fn load(path: &Path) -> Result<Self, EngineError> {
        let text = crate::read_file(path)?;
        let config: ServiceConfig = serde_json::from_str(&text)
            .map_err(|e| EngineError::Config(format!("{}: {e}", path.display())))?;
        config.check()?;
        Ok(config)
    }

    pub fn check(&self) -> Result<(), EngineError> {
        if self.port == 0 {
            return Err(EngineError::Config("port must be in 1..=65535".into()));
        }
        if self.pathset_limit == 0 {
            return Err(EngineError::Config("pathset_limit must be positive".into()));
        }
        let t = self.propagation.threshold;
        if !(0.0..=1.0).contains(&t) {
            return Err(EngineError::Config(format!("threshold {t} outside [0,1]")));
        }
        Ok(())
    }

    pub fn address(&self) -> Result<SocketAddr, EngineError> {
        format!("{}:{}", self.bind, self.port)
            .parse()
            .map_err(|e| EngineError::Config(format!("bind address: {e}")))
    }
}
