//! Bag-of-words and TF-IDF features plus a softmax-regression baseline.
//!
//! Tokens are the Unicode words of the lowercased text (UAX #29 word
//! boundaries, punctuation and whitespace dropped).
//!
//! TF-IDF weights use raw term counts and a smoothed inverse document
//! frequency:
//!
//! ```text
//! weight(t) = count(t, doc) * ln((1 + n_documents) / (1 + df(t)))
//! ```
//!
//! A token present in every training document therefore gets weight 0 and
//! is left out of the sparse vector.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_segmentation::UnicodeSegmentation;

use crate::corpus::StanceLabel;

mod linear;

pub use linear::{
    predict_linear, train_linear_baseline, LinearModel, SoftmaxObjective, TrainConfig,
    TrainingMetadata,
};

/// Version tag written into persisted baseline files.
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum VectorizeError {
    #[error("cannot fit a vocabulary on an empty corpus")]
    EmptyCorpus,
    #[error("cannot train on an empty training set")]
    EmptyTrainSet,
    #[error("dimension mismatch: expected {expected} features, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("model file version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Format {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

pub type Result<T, E = VectorizeError> = std::result::Result<T, E>;

pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .unicode_words()
        .map(str::to_string)
        .collect()
}

/// Token index with document frequencies. Indices are dense and follow
/// first-seen order in the fitting corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "VocabularyRepr", into = "VocabularyRepr")]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    document_frequency: Vec<usize>,
    n_documents: usize,
}

#[derive(Serialize, Deserialize)]
struct VocabularyRepr {
    tokens: Vec<String>,
    document_frequency: Vec<usize>,
    n_documents: usize,
}

impl From<VocabularyRepr> for Vocabulary {
    fn from(r: VocabularyRepr) -> Self {
        let index = r
            .tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Self {
            tokens: r.tokens,
            index,
            document_frequency: r.document_frequency,
            n_documents: r.n_documents,
        }
    }
}

impl From<Vocabulary> for VocabularyRepr {
    fn from(v: Vocabulary) -> Self {
        Self {
            tokens: v.tokens,
            document_frequency: v.document_frequency,
            n_documents: v.n_documents,
        }
    }
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn n_documents(&self) -> usize {
        self.n_documents
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, index: usize) -> Option<&str> {
        self.tokens.get(index).map(String::as_str)
    }

    pub fn document_frequency(&self, token: &str) -> Option<usize> {
        self.index_of(token).map(|i| self.document_frequency[i])
    }

    /// `ln((1 + n_documents) / (1 + df))` for the token at `index`.
    pub fn idf(&self, index: usize) -> f64 {
        ((1 + self.n_documents) as f64 / (1 + self.document_frequency[index]) as f64).ln()
    }

    /// Per-index counts of in-vocabulary tokens in `text`.
    fn counts(&self, text: &str) -> Vec<(usize, f64)> {
        let mut counts: HashMap<usize, usize> = HashMap::new();
        for token in tokenize(text) {
            if let Some(i) = self.index_of(&token) {
                *counts.entry(i).or_default() += 1;
            }
        }
        let mut entries: Vec<(usize, f64)> =
            counts.into_iter().map(|(i, c)| (i, c as f64)).collect();
        entries.sort_unstable_by_key(|e| e.0);
        entries
    }
}

/// Fits a vocabulary keeping tokens that occur in at least `min_df`
/// documents.
pub fn fit_vocabulary<S: AsRef<str>>(corpus: &[S], min_df: usize) -> Result<Vocabulary> {
    if corpus.is_empty() {
        return Err(VectorizeError::EmptyCorpus);
    }
    let mut order: Vec<String> = Vec::new();
    let mut df: HashMap<String, usize> = HashMap::new();
    for doc in corpus {
        let mut tokens = tokenize(doc.as_ref());
        // first-seen order must follow the document, so record before dedup
        for t in &tokens {
            if !df.contains_key(t) {
                df.insert(t.clone(), 0);
                order.push(t.clone());
            }
        }
        tokens.sort_unstable();
        tokens.dedup();
        for t in tokens {
            *df.get_mut(&t).expect("inserted above") += 1;
        }
    }
    let tokens: Vec<String> = order.into_iter().filter(|t| df[t] >= min_df).collect();
    let document_frequency = tokens.iter().map(|t| df[t]).collect();
    Ok(VocabularyRepr {
        tokens,
        document_frequency,
        n_documents: corpus.len(),
    }
    .into())
}

/// Sparse feature vector with strictly increasing indices and no stored
/// zeros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    dim: usize,
    entries: Vec<(usize, f64)>,
}

impl SparseVector {
    /// Builds a vector, sorting entries and dropping zeros.
    ///
    /// Panics on an index `>= dim` or a repeated index.
    pub fn new(dim: usize, mut entries: Vec<(usize, f64)>) -> Self {
        entries.retain(|e| e.1 != 0.0);
        entries.sort_by_key(|e| e.0);
        assert!(
            entries.windows(2).all(|w| w[0].0 < w[1].0),
            "sparse vector indices must be distinct"
        );
        assert!(
            entries.iter().all(|e| e.0 < dim),
            "sparse index out of range"
        );
        Self { dim, entries }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, w)| w * dense[i]).sum()
    }
}

pub fn bow_vector(text: &str, vocab: &Vocabulary) -> SparseVector {
    SparseVector::new(vocab.len(), vocab.counts(text))
}

pub fn tfidf_vector(text: &str, vocab: &Vocabulary) -> SparseVector {
    let entries = vocab
        .counts(text)
        .into_iter()
        .map(|(i, tf)| (i, tf * vocab.idf(i)))
        .collect();
    SparseVector::new(vocab.len(), entries)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VectorizerKind {
    Bow,
    Tfidf,
}

impl VectorizerKind {
    pub fn vectorize(self, text: &str, vocab: &Vocabulary) -> SparseVector {
        match self {
            VectorizerKind::Bow => bow_vector(text, vocab),
            VectorizerKind::Tfidf => tfidf_vector(text, vocab),
        }
    }
}

impl std::str::FromStr for VectorizerKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "bow" => Ok(VectorizerKind::Bow),
            "tfidf" => Ok(VectorizerKind::Tfidf),
            other => Err(format!(
                "unknown vectorizer `{other}`; expected bow or tfidf"
            )),
        }
    }
}

/// Vectorizer and linear model bundled for persistence and prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineModel {
    pub format_version: u32,
    pub vectorizer: VectorizerKind,
    pub n_features: usize,
    pub vocabulary: Vocabulary,
    pub model: LinearModel,
}

impl BaselineModel {
    /// Fits the vocabulary on the training texts, then trains the linear
    /// model on their vectors.
    pub fn train<S: AsRef<str>>(
        examples: &[(S, StanceLabel)],
        vectorizer: VectorizerKind,
        min_df: usize,
        config: &TrainConfig,
    ) -> Result<Self> {
        if examples.is_empty() {
            return Err(VectorizeError::EmptyTrainSet);
        }
        let texts: Vec<&str> = examples.iter().map(|(t, _)| t.as_ref()).collect();
        let vocabulary = fit_vocabulary(&texts, min_df)?;
        let data: Vec<(SparseVector, StanceLabel)> = examples
            .iter()
            .map(|(t, l)| (vectorizer.vectorize(t.as_ref(), &vocabulary), *l))
            .collect();
        let (model, _) = train_linear_baseline(&data, config)?;
        Ok(Self {
            format_version: MODEL_FORMAT_VERSION,
            vectorizer,
            n_features: vocabulary.len(),
            vocabulary,
            model,
        })
    }

    pub fn predict(&self, text: &str) -> Result<StanceLabel> {
        predict_linear(
            &self.model,
            &self.vectorizer.vectorize(text, &self.vocabulary),
        )
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let io_err = |source| VectorizeError::Io {
            path: path.to_path_buf(),
            source,
        };
        let file = std::fs::File::create(path).map_err(io_err)?;
        serde_json::to_writer(std::io::BufWriter::new(file), self).map_err(|source| {
            VectorizeError::Format {
                path: path.to_path_buf(),
                source,
            }
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let body = std::fs::read_to_string(path).map_err(|source| VectorizeError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let format_err = |source| VectorizeError::Format {
            path: path.to_path_buf(),
            source,
        };
        #[derive(Deserialize)]
        struct Header {
            format_version: u32,
        }
        let header: Header = serde_json::from_str(&body).map_err(format_err)?;
        if header.format_version != MODEL_FORMAT_VERSION {
            return Err(VectorizeError::VersionMismatch {
                found: header.format_version,
                expected: MODEL_FORMAT_VERSION,
            });
        }
        let model: Self = serde_json::from_str(&body).map_err(format_err)?;
        if model.n_features != model.vocabulary.len()
            || model.n_features != model.model.n_features()
        {
            return Err(VectorizeError::DimensionMismatch {
                expected: model.n_features,
                actual: model.model.n_features(),
            });
        }
        Ok(model)
    }
}
