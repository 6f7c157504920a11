//! Model configuration: an optional JSON file overridden by flags.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use pe_core::finmodel::{ModelConfig, MonadKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MonadArg {
    Identity,
    Exception,
    Powerset,
}

impl From<MonadArg> for MonadKind {
    fn from(m: MonadArg) -> Self {
        match m {
            MonadArg::Identity => MonadKind::Identity,
            MonadArg::Exception => MonadKind::Exception,
            MonadArg::Powerset => MonadKind::Powerset,
        }
    }
}

#[derive(Clone, Debug, Default, Args)]
pub struct ModelArgs {
    /// JSON model configuration; flags given on the command line take precedence
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub monad: Option<MonadArg>,
    /// Exception names, comma separated
    #[arg(long, global = true, value_delimiter = ',', value_name = "E1,E2")]
    pub exceptions: Option<Vec<String>>,
    /// Largest carrier enumerated
    #[arg(long, global = true, value_name = "N")]
    pub bound: Option<u32>,
    /// Add the free algebras on sets of size 0..=bound
    #[arg(long, global = true)]
    pub include_free_algebras: bool,
}

pub const DEFAULT_BOUND: u32 = 2;

fn valid_exception(e: &str) -> bool {
    let mut cs = e.chars();
    cs.next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_') && cs.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl ModelArgs {
    /// The configured model; without file or flags, the exception monad with
    /// one exception `e` at bound 2.
    pub fn resolve(&self) -> Result<ModelConfig, String> {
        let mut cfg = match &self.config {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| format!("cannot read {}: {e}", p.display()))?;
                serde_json::from_str::<ModelConfig>(&text).map_err(|e| format!("{}: {e}", p.display()))?
            }
            None => ModelConfig { monad: MonadKind::Exception, exceptions: Vec::new(), bound: DEFAULT_BOUND, include_free_algebras: false },
        };
        if let Some(m) = self.monad {
            cfg.monad = m.into();
            if self.config.is_some() && cfg.monad != MonadKind::Exception {
                cfg.exceptions.clear();
            }
        }
        if let Some(es) = &self.exceptions {
            cfg.exceptions = es.iter().map(|e| e.trim().to_string()).filter(|e| !e.is_empty()).collect();
        }
        if let Some(b) = self.bound {
            cfg.bound = b;
        }
        cfg.include_free_algebras |= self.include_free_algebras;
        match cfg.monad {
            MonadKind::Exception if cfg.exceptions.is_empty() => {
                if self.exceptions.is_some() {
                    return Err("the exception monad needs at least one exception".into());
                }
                cfg.exceptions.push("e".into());
            }
            MonadKind::Exception => {}
            _ if !cfg.exceptions.is_empty() => return Err(format!("exceptions given for the {} monad", cfg.monad)),
            _ => {}
        }
        if let Some(bad) = cfg.exceptions.iter().find(|e| !valid_exception(e)) {
            return Err(format!("invalid exception name {bad:?}"));
        }
        let mut seen = cfg.exceptions.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != cfg.exceptions.len() {
            return Err("duplicate exception names".into());
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_overrides() {
        let cfg = ModelArgs::default().resolve().unwrap();
        assert_eq!((cfg.monad, cfg.exceptions.clone(), cfg.bound), (MonadKind::Exception, vec!["e".to_string()], 2));
        let args = ModelArgs { monad: Some(MonadArg::Powerset), bound: Some(3), ..Default::default() };
        let cfg = args.resolve().unwrap();
        assert_eq!((cfg.monad, cfg.bound), (MonadKind::Powerset, 3));
        assert!(cfg.exceptions.is_empty());
    }

    #[test]
    fn inconsistent_configs_are_rejected() {
        let args = ModelArgs { monad: Some(MonadArg::Identity), exceptions: Some(vec!["e".into()]), ..Default::default() };
        assert!(args.resolve().is_err());
        let args = ModelArgs { exceptions: Some(vec!["a b".into()]), ..Default::default() };
        assert!(args.resolve().is_err());
        let args = ModelArgs { exceptions: Some(vec!["a".into(), "a".into()]), ..Default::default() };
        assert!(args.resolve().is_err());
    }
}
