//! Server configuration from environment variables.
//!
//! | variable            | default            | meaning                              |
//! |---------------------|--------------------|--------------------------------------|
//! | `WARGAME_DATA_DIR`  | `./wargame-data`   | document store root                  |
//! | `WARGAME_LISTEN`    | `127.0.0.1:7878`   | listen address (`:0` picks a port)   |
//! | `WARGAME_WORKERS`   | available cores    | simulation worker count              |
//! | `WARGAME_QUEUE`     | `256`              | max queued runs before 503 responses |

use std::net::SocketAddr;
use std::path::PathBuf;
use thiserror::Error;

pub const ENV_DATA_DIR: &str = "WARGAME_DATA_DIR";
pub const ENV_LISTEN: &str = "WARGAME_LISTEN";
pub const ENV_WORKERS: &str = "WARGAME_WORKERS";
pub const ENV_QUEUE: &str = "WARGAME_QUEUE";

pub const DEFAULT_DATA_DIR: &str = "./wargame-data";
pub const DEFAULT_LISTEN: &str = "127.0.0.1:7878";
pub const DEFAULT_QUEUE: usize = 256;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("{var}={value:?}: {reason}")]
pub struct ConfigError {
    pub var: &'static str,
    pub value: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServerConfig {
    pub data_dir: PathBuf,
    pub listen: SocketAddr,
    pub workers: usize,
    pub queue_capacity: usize,
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(2)
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            data_dir: PathBuf::from(DEFAULT_DATA_DIR),
            listen: DEFAULT_LISTEN.parse().expect("valid default address"),
            workers: default_workers(),
            queue_capacity: DEFAULT_QUEUE,
        }
    }
}

impl ServerConfig {
    pub fn from_env() -> Result<Self, ConfigError> {
        Self::from_lookup(|k| std::env::var(k).ok())
    }

    /// Build from an arbitrary variable lookup; unset variables take defaults.
    pub fn from_lookup(get: impl Fn(&str) -> Option<String>) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        if let Some(dir) = get(ENV_DATA_DIR) {
            cfg.data_dir = PathBuf::from(dir);
        }
        if let Some(v) = get(ENV_LISTEN) {
            cfg.listen = v.parse().map_err(|e: std::net::AddrParseError| ConfigError {
                var: ENV_LISTEN,
                value: v.clone(),
                reason: e.to_string(),
            })?;
        }
        cfg.workers = positive(&get, ENV_WORKERS)?.unwrap_or(cfg.workers);
        cfg.queue_capacity = positive(&get, ENV_QUEUE)?.unwrap_or(cfg.queue_capacity);
        Ok(cfg)
    }
}

fn positive(get: &impl Fn(&str) -> Option<String>, var: &'static str) -> Result<Option<usize>, ConfigError> {
    let Some(v) = get(var) else { return Ok(None) };
    match v.parse::<usize>() {
        Ok(n) if n >= 1 => Ok(Some(n)),
        _ => Err(ConfigError { var, value: v, reason: "expected an integer >= 1".into() }),
    }
}
