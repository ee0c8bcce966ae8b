//! Engine tunables and the service configuration file.
//!
//! ```toml
//! [engine]
//! k_beam = 20
//! min_words = 5
//! max_words = 12
//! dup_word_delta = 2
//! qa_threshold = 0.5
//! reply_word_target = 30
//! recommend_n = 3
//!
//! [chat]
//! blocklist = ["story-id-to-hide"]
//!
//! [[chat.clarification_patterns]]
//! prefix = "what does"
//! suffix = "stand for"
//! kind = "acronym"
//!
//! [providers]
//! timeout_secs = 10
//! answers_url = "http://127.0.0.1:9000/qa"
//! entity_table = "entities.json"
//! ```
//!
//! Every key is optional; missing provider URLs select the reference providers.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::providers::reference::{FixtureEntityLookup, HeadlineSummarizer};
use crate::providers::remote::{RemoteAnswerer, RemoteEntityLookup, RemoteQuestionGenerator, RemoteSummarizer};
use crate::providers::{EntityKind, Providers};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("invalid engine config: {0}")]
    Invalid(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("cannot parse entity table {path}: {source}")]
    EntityTable {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    /// Beam size: candidate questions requested per paragraph.
    pub k_beam: usize,
    /// Shortest question kept, in words (inclusive).
    pub min_words: usize,
    /// Longest question kept, in words (inclusive).
    pub max_words: usize,
    /// Questions of one paragraph within this lexical distance are duplicates.
    pub dup_word_delta: usize,
    /// Minimum reader confidence for a paragraph/question edge (inclusive).
    pub qa_threshold: f64,
    /// Target length of a system reply, in words.
    pub reply_word_target: usize,
    /// Questions recommended at a time.
    pub recommend_n: usize,
    /// Skip reader calls for pairs sharing no content token. Off by default.
    pub keyword_prefilter: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            k_beam: 20,
            min_words: 5,
            max_words: 12,
            dup_word_delta: 2,
            qa_threshold: 0.5,
            reply_word_target: 30,
            recommend_n: 3,
            keyword_prefilter: false,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.min_words > self.max_words {
            return Err(ConfigError::Invalid(format!(
                "min_words ({}) exceeds max_words ({})",
                self.min_words, self.max_words
            )));
        }
        if self.k_beam == 0 {
            return Err(ConfigError::Invalid("k_beam must be at least 1".into()));
        }
        if self.recommend_n == 0 {
            return Err(ConfigError::Invalid("recommend_n must be at least 1".into()));
        }
        if !(self.qa_threshold > 0.0 && self.qa_threshold < 1.0) {
            return Err(ConfigError::Invalid(format!(
                "qa_threshold {} must lie in (0, 1)",
                self.qa_threshold
            )));
        }
        Ok(())
    }
}

/// A "prefix X suffix" utterance form answered from the entity table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClarificationPattern {
    pub prefix: String,
    #[serde(default)]
    pub suffix: String,
    pub kind: EntityKind,
}

impl ClarificationPattern {
    pub fn new(prefix: &str, suffix: &str, kind: EntityKind) -> Self {
        Self {
            prefix: prefix.into(),
            suffix: suffix.into(),
            kind,
        }
    }
}

pub fn default_clarification_patterns() -> Vec<ClarificationPattern> {
    vec![
        ClarificationPattern::new("who is", "", EntityKind::Person),
        ClarificationPattern::new("who are", "", EntityKind::Person),
        ClarificationPattern::new("where is", "", EntityKind::Place),
        ClarificationPattern::new("what does", "stand for", EntityKind::Acronym),
    ]
}

pub fn default_small_talk() -> Vec<String> {
    [
        "hi",
        "hello",
        "hey",
        "how are you",
        "how are you doing",
        "what's up",
        "whats up",
        "good morning",
        "good afternoon",
        "good evening",
        "thanks",
        "thank you",
        "bye",
        "goodbye",
        "who are you",
        "what can i ask",
    ]
    .into_iter()
    .map(String::from)
    .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChatConfig {
    /// Story ids never listed as rooms.
    pub blocklist: Vec<String>,
    pub clarification_patterns: Vec<ClarificationPattern>,
    pub small_talk: Vec<String>,
}

impl Default for ChatConfig {
    fn default() -> Self {
        Self {
            blocklist: Vec::new(),
            clarification_patterns: default_clarification_patterns(),
            small_talk: default_small_talk(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProviderConfig {
    pub timeout_secs: u64,
    pub questions_url: Option<String>,
    pub answers_url: Option<String>,
    pub summarizer_url: Option<String>,
    pub entities_url: Option<String>,
    /// Local entity table used when `entities_url` is unset.
    pub entity_table: Option<PathBuf>,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        Self {
            timeout_secs: 10,
            questions_url: None,
            answers_url: None,
            summarizer_url: None,
            entities_url: None,
            entity_table: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppConfig {
    pub engine: EngineConfig,
    pub chat: ChatConfig,
    pub providers: ProviderConfig,
}

impl AppConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: AppConfig = toml::from_str(text)?;
        cfg.engine.validate()?;
        Ok(cfg)
    }

    /// Load a config file; relative `entity_table` paths resolve against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut cfg = Self::from_toml(&text)?;
        if let (Some(table), Some(dir)) = (&cfg.providers.entity_table, path.parent()) {
            if table.is_relative() {
                cfg.providers.entity_table = Some(dir.join(table));
            }
        }
        Ok(cfg)
    }

    pub fn providers(&self) -> Result<Providers, ConfigError> {
        let p = &self.providers;
        let timeout = Duration::from_secs(p.timeout_secs.max(1));
        let mut providers = Providers::reference().with_summarizer(Arc::new(HeadlineSummarizer {
            max_words: self.engine.reply_word_target,
        }));
        if let Some(url) = &p.questions_url {
            providers = providers.with_questions(Arc::new(RemoteQuestionGenerator::new(url, timeout)));
        }
        if let Some(url) = &p.answers_url {
            providers = providers.with_answers(Arc::new(RemoteAnswerer::new(url, timeout)));
        }
        if let Some(url) = &p.summarizer_url {
            providers = providers.with_summarizer(Arc::new(RemoteSummarizer::new(url, timeout)));
        }
        if let Some(url) = &p.entities_url {
            providers = providers.with_entities(Arc::new(RemoteEntityLookup::new(url, timeout)));
        } else if let Some(path) = &p.entity_table {
            let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
                path: path.display().to_string(),
                source,
            })?;
            let table = FixtureEntityLookup::from_json(&text).map_err(|source| ConfigError::EntityTable {
                path: path.display().to_string(),
                source,
            })?;
            providers = providers.with_entities(Arc::new(table));
        }
        Ok(providers)
    }
}
