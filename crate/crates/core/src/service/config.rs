use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::align::WordLists;
use crate::corpus::{Corpus, Vocab};
use crate::datastore::Datastore;
use crate::engine::{Engine, Method};
use crate::error::{Error, Result};
use crate::knn_decode::DecodeConfig;
use crate::seq2seq::{load_checkpoint, Seq2Seq};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Paths {
    pub model: PathBuf,
    pub vocab: PathBuf,
    pub datastore: PathBuf,
    /// Training pairs the datastore refers to.
    pub corpus: PathBuf,
    /// Directory with the closed-class lists; the bundled lists otherwise.
    #[serde(default)]
    pub word_lists: Option<PathBuf>,
    pub decision_log: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServiceConfig {
    pub bind: String,
    pub port: u16,
    /// Longest accepted `text`, in bytes.
    pub max_text_len: usize,
    pub default_method: Method,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            bind: "127.0.0.1".into(),
            port: 8080,
            max_text_len: 2000,
            default_method: Method::Eb,
        }
    }
}

/// `[paths]`, `[decode]` and `[service]` tables of the TOML config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AppConfig {
    pub paths: Paths,
    #[serde(default)]
    pub decode: DecodeConfig,
    #[serde(default)]
    pub service: ServiceConfig,
}

impl AppConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: AppConfig = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.decode.validate()?;
        if cfg.service.max_text_len == 0 {
            return Err(Error::InvalidConfig("max_text_len must be positive".into()));
        }
        Ok(cfg)
    }

    /// Reads and validates the file; relative paths resolve against the
    /// file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        if let Some(base) = path.parent() {
            cfg.paths.rebase(base);
        }
        Ok(cfg)
    }

    /// Every artifact the service reads must exist.
    pub fn check_files(&self) -> Result<()> {
        let p = &self.paths;
        for f in [&p.model, &p.vocab, &p.datastore, &p.corpus] {
            if !f.is_file() {
                return Err(Error::InvalidConfig(format!("missing file {}", f.display())));
            }
        }
        if let Some(d) = &p.word_lists {
            if !d.is_dir() {
                return Err(Error::InvalidConfig(format!("missing directory {}", d.display())));
            }
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

impl Paths {
    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.model);
        fix(&mut self.vocab);
        fix(&mut self.datastore);
        fix(&mut self.corpus);
        fix(&mut self.decision_log);
        if let Some(d) = self.word_lists.as_mut() {
            fix(d);
        }
    }

    /// Loads every artifact and checks them against each other.
    pub fn load_engine(&self) -> Result<Engine> {
        let vocab = Vocab::load(&self.vocab)?;
        let model = Seq2Seq::new(load_checkpoint(&self.model)?);
        let store = Datastore::load(&self.datastore, Some(model.hidden_dim()))?;
        let corpus = Corpus::load(&self.corpus)?;
        let lists = match &self.word_lists {
            Some(dir) => WordLists::load(dir)?,
            None => WordLists::default(),
        };
        Engine::new(model, vocab, store, corpus, lists)
    }
}
