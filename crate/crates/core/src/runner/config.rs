use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use super::{Result, RunError};
use crate::corpus::{RecordFormat, Subset};
use crate::llm::EndpointConfig;
use crate::prompt::Strategy;
use crate::vectorize::{TrainConfig, VectorizerKind};

/// A complete run description, loadable from TOML:
///
/// ```toml
/// output_dir = "runs/zero-shot"
/// concurrency = 4
///
/// [corpus]
/// path = "comments.jsonl"
/// split_seed = 0
/// subset = "test"
///
/// [strategy]
/// name = "zero-shot"
///
/// [endpoint]
/// kind = "mock"
/// ```
///
/// Relative paths in a config file are resolved against the file's
/// directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub output_dir: PathBuf,
    #[serde(default = "default_concurrency")]
    pub concurrency: usize,
    /// Adds wall-clock timestamps to the report. Off by default so that
    /// repeated runs produce byte-identical files.
    #[serde(default)]
    pub timestamps: bool,
    /// Discards existing records in `output_dir` instead of resuming.
    #[serde(default)]
    pub fresh: bool,
    pub corpus: CorpusSection,
    pub strategy: StrategySection,
    pub endpoint: EndpointSection,
}

fn default_concurrency() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSection {
    pub path: PathBuf,
    /// Inferred from the file extension when absent.
    #[serde(default)]
    pub format: Option<RecordFormat>,
    /// Keyword list; when absent the corpus is used unfiltered.
    #[serde(default)]
    pub keywords: Option<PathBuf>,
    #[serde(default)]
    pub split_seed: u64,
    #[serde(default = "default_subset")]
    pub subset: Subset,
}

fn default_subset() -> Subset {
    Subset::Test
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategySection {
    pub name: Strategy,
    #[serde(default)]
    pub exemplar_seed: u64,
    /// Directory of `<template_id>.txt` overrides.
    #[serde(default)]
    pub templates_dir: Option<PathBuf>,
    /// Synonym table for answer extraction; built-in when absent.
    #[serde(default)]
    pub synonyms: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EndpointSection {
    Mock {
        /// Mock rule table; built-in when absent.
        #[serde(default)]
        rules: Option<PathBuf>,
    },
    Baseline {
        /// A saved model. When absent one is trained on the train split.
        #[serde(default)]
        model: Option<PathBuf>,
        #[serde(default = "default_vectorizer")]
        vectorizer: VectorizerKind,
        #[serde(default = "default_min_df")]
        min_df: usize,
        #[serde(default)]
        train: TrainConfig,
    },
    Http(EndpointConfig),
}

fn default_vectorizer() -> VectorizerKind {
    VectorizerKind::Tfidf
}

fn default_min_df() -> usize {
    1
}

impl EndpointSection {
    pub fn mock() -> Self {
        EndpointSection::Mock { rules: None }
    }

    pub fn baseline() -> Self {
        EndpointSection::Baseline {
            model: None,
            vectorizer: default_vectorizer(),
            min_df: default_min_df(),
            train: TrainConfig::default(),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            EndpointSection::Mock { .. } => "mock",
            EndpointSection::Baseline { .. } => "baseline",
            EndpointSection::Http(c) => &c.name,
        }
    }
}

impl RunConfig {
    /// A config with defaults for everything but the essentials.
    pub fn new(
        corpus: impl Into<PathBuf>,
        strategy: Strategy,
        endpoint: EndpointSection,
        output_dir: impl Into<PathBuf>,
    ) -> Self {
        Self {
            output_dir: output_dir.into(),
            concurrency: default_concurrency(),
            timestamps: false,
            fresh: false,
            corpus: CorpusSection {
                path: corpus.into(),
                format: None,
                keywords: None,
                split_seed: 0,
                subset: default_subset(),
            },
            strategy: StrategySection {
                name: strategy,
                exemplar_seed: 0,
                templates_dir: None,
                synonyms: None,
            },
            endpoint,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| RunError::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| RunError::io(path, e))?;
        let mut config = Self::from_toml(&text)?;
        if let Some(base) = path.parent() {
            config.resolve_relative_to(base);
        }
        Ok(config)
    }

    fn resolve_relative_to(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.output_dir);
        fix(&mut self.corpus.path);
        self.corpus.keywords.as_mut().map(fix);
        self.strategy.templates_dir.as_mut().map(fix);
        self.strategy.synonyms.as_mut().map(fix);
        match &mut self.endpoint {
            EndpointSection::Mock { rules } => {
                rules.as_mut().map(fix);
            }
            EndpointSection::Baseline { model, .. } => {
                model.as_mut().map(fix);
            }
            EndpointSection::Http(_) => {}
        }
    }

    pub fn corpus_format(&self) -> Result<RecordFormat> {
        match self.corpus.format {
            Some(f) => Ok(f),
            None => RecordFormat::from_path(&self.corpus.path).ok_or_else(|| {
                RunError::Config(format!(
                    "cannot infer the format of {}; set corpus.format",
                    self.corpus.path.display()
                ))
            }),
        }
    }

    /// Checks everything that can be checked without loading the corpus.
    pub fn validate(&self) -> Result<()> {
        if self.concurrency == 0 {
            return Err(RunError::Config("concurrency must be >= 1".into()));
        }
        let mut files = vec![("corpus.path", &self.corpus.path)];
        files.extend(
            self.corpus
                .keywords
                .as_ref()
                .map(|p| ("corpus.keywords", p)),
        );
        files.extend(
            self.strategy
                .synonyms
                .as_ref()
                .map(|p| ("strategy.synonyms", p)),
        );
        match &self.endpoint {
            EndpointSection::Mock { rules: Some(p) } => files.push(("endpoint.rules", p)),
            EndpointSection::Baseline { model: Some(p), .. } => files.push(("endpoint.model", p)),
            EndpointSection::Http(c) => c.validate()?,
            _ => {}
        }
        for (key, path) in files {
            if !path.is_file() {
                return Err(RunError::Config(format!(
                    "{key}: {} does not exist",
                    path.display()
                )));
            }
        }
        if let Some(dir) = &self.strategy.templates_dir {
            if !dir.is_dir() {
                return Err(RunError::Config(format!(
                    "strategy.templates_dir: {} is not a directory",
                    dir.display()
                )));
            }
        }
        let needs_exemplars = self.strategy.name.required_exemplars() > 0
            && !matches!(self.endpoint, EndpointSection::Baseline { .. });
        if needs_exemplars && !matches!(self.corpus.subset, Subset::Test | Subset::Validation) {
            return Err(RunError::Config(format!(
                "{} draws exemplars from the train split, so the evaluated subset must be test or validation",
                self.strategy.name
            )));
        }
        self.corpus_format()?;
        Ok(())
    }

    /// Hash identifying everything that influences results: the settings
    /// plus the content of every referenced input file. Output location,
    /// concurrency and report timestamps do not affect it.
    pub fn fingerprint(&self) -> Result<String> {
        let digest = |p: &Option<PathBuf>| -> Result<Option<String>> {
            p.as_ref().map(|p| file_sha256(p)).transpose()
        };
        let endpoint = match &self.endpoint {
            EndpointSection::Mock { rules } => json!({
                "kind": "mock",
                "rules_sha256": digest(rules)?,
            }),
            EndpointSection::Baseline {
                model,
                vectorizer,
                min_df,
                train,
            } => json!({
                "kind": "baseline",
                "model_sha256": digest(model)?,
                "vectorizer": vectorizer,
                "min_df": min_df,
                "train": train,
            }),
            EndpointSection::Http(c) => json!({ "kind": "http", "config": c }),
        };
        let value = json!({
            "corpus": {
                "sha256": file_sha256(&self.corpus.path)?,
                "format": self.corpus_format()?,
                "keywords_sha256": digest(&self.corpus.keywords)?,
                "split_seed": self.corpus.split_seed,
                "subset": self.corpus.subset,
            },
            "strategy": {
                "name": self.strategy.name,
                "exemplar_seed": self.strategy.exemplar_seed,
                "synonyms_sha256": digest(&self.strategy.synonyms)?,
            },
            "endpoint": endpoint,
        });
        Ok(hex::encode(Sha256::digest(value.to_string().as_bytes())))
    }
}

fn file_sha256(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| RunError::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}
