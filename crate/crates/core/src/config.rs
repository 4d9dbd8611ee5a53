//! TOML run configuration.
//!
//! ```toml
//! [cipher]            # overrides of the SR defaults
//! modulus = 0x13
//! mix_matrix = [[2, 3, 1, 1], [1, 2, 3, 1], [1, 1, 2, 3], [3, 1, 1, 2]]
//!
//! [encoder]
//! sbox_encoding = "quadratic"
//! minimize = false
//!
//! [solver]
//! template = "cryptominisat5 {flags} --random={seed} {instance}"
//! threads = 31
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cipher::CipherOverrides;
use crate::encoder::SboxEncoding;
use crate::harness::DEFAULT_TEMPLATE;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("config: {0}")]
    Parse(#[from] toml::de::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub template: String,
    pub threads: u32,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            template: DEFAULT_TEMPLATE.to_string(),
            threads: 31,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EncoderSection {
    pub sbox_encoding: Option<SboxEncoding>,
    pub minimize: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub cipher: CipherOverrides,
    pub encoder: EncoderSection,
    pub solver: SolverSection,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_is_default() {
        let c = Config::parse("").unwrap();
        assert_eq!(c, Config::default());
        assert_eq!(c.solver.threads, 31);
    }

    #[test]
    fn sections() {
        let c = Config::parse(
            "[cipher]\nmodulus = 0x19\naffine_const = 5\n[encoder]\nsbox_encoding = \"banned\"\n[solver]\ntemplate = \"s {instance}\"\nthreads = 4\n",
        )
        .unwrap();
        assert_eq!(c.cipher.modulus, Some(0x19));
        assert_eq!(c.cipher.affine_const, Some(5));
        assert_eq!(c.encoder.sbox_encoding, Some(SboxEncoding::Banned));
        assert_eq!(c.solver.template, "s {instance}");
        assert_eq!(c.solver.threads, 4);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(Config::parse("[cipher]\nsbox = 3\n").is_err());
        assert!(Config::parse("[other]\n").is_err());
    }
}
