//! Three-class softmax regression trained by seeded mini-batch gradient
//! descent.

use serde::{Deserialize, Serialize};

use super::{Result, SparseVector, VectorizeError};
use crate::corpus::StanceLabel;
use crate::shuffle;

const CLASSES: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// L2 penalty on the weights (not the bias).
    pub l2: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            learning_rate: 0.5,
            batch_size: 32,
            l2: 1e-4,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetadata {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub l2: f64,
    pub seed: u64,
    pub final_loss: f64,
}

/// Weights are stored row-major: row `c` holds class `c`'s coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    n_features: usize,
    weights: Vec<f64>,
    bias: [f64; 3],
    pub metadata: Option<TrainingMetadata>,
}

impl LinearModel {
    pub fn new(n_features: usize, weights: Vec<f64>, bias: [f64; 3]) -> Self {
        assert_eq!(
            weights.len(),
            CLASSES * n_features,
            "weights must be 3 x n_features"
        );
        Self {
            n_features,
            weights,
            bias,
            metadata: None,
        }
    }

    pub fn zeros(n_features: usize) -> Self {
        Self::new(n_features, vec![0.0; CLASSES * n_features], [0.0; 3])
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> [f64; 3] {
        self.bias
    }

    pub fn scores(&self, x: &SparseVector) -> Result<[f64; 3]> {
        if x.dim() != self.n_features {
            return Err(VectorizeError::DimensionMismatch {
                expected: self.n_features,
                actual: x.dim(),
            });
        }
        Ok(class_scores(&self.weights, &self.bias, self.n_features, x))
    }
}

fn class_scores(weights: &[f64], bias: &[f64; 3], v: usize, x: &SparseVector) -> [f64; 3] {
    std::array::from_fn(|c| x.dot(&weights[c * v..(c + 1) * v]) + bias[c])
}

fn softmax(scores: [f64; 3]) -> [f64; 3] {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps = scores.map(|s| (s - max).exp());
    let sum: f64 = exps.iter().sum();
    exps.map(|e| e / sum)
}

/// Index of the largest score; ties go to the lowest class code.
fn argmax(scores: &[f64; 3]) -> usize {
    let mut best = 0;
    for c in 1..CLASSES {
        if scores[c] > scores[best] {
            best = c;
        }
    }
    best
}

pub fn predict_linear(model: &LinearModel, vector: &SparseVector) -> Result<StanceLabel> {
    let scores = model.scores(vector)?;
    Ok(StanceLabel::ALL[argmax(&scores)])
}

/// Mean cross-entropy over a set of examples plus `l2 / 2 * |W|^2`.
pub struct SoftmaxObjective<'a> {
    examples: &'a [(SparseVector, StanceLabel)],
    n_features: usize,
    l2: f64,
}

impl<'a> SoftmaxObjective<'a> {
    pub fn new(examples: &'a [(SparseVector, StanceLabel)], n_features: usize, l2: f64) -> Self {
        Self {
            examples,
            n_features,
            l2,
        }
    }

    pub fn loss(&self, weights: &[f64], bias: &[f64; 3]) -> f64 {
        let data_loss: f64 = self
            .examples
            .iter()
            .map(|(x, y)| {
                let p = softmax(class_scores(weights, bias, self.n_features, x));
                -p[y.index()].max(f64::MIN_POSITIVE).ln()
            })
            .sum::<f64>()
            / self.examples.len() as f64;
        let penalty: f64 = weights.iter().map(|w| w * w).sum::<f64>() * self.l2 / 2.0;
        data_loss + penalty
    }

    /// Analytic gradient of [`Self::loss`] with respect to weights and bias.
    pub fn gradient(&self, weights: &[f64], bias: &[f64; 3]) -> (Vec<f64>, [f64; 3]) {
        let v = self.n_features;
        let mut gw = vec![0.0; CLASSES * v];
        let mut gb = [0.0; 3];
        self.accumulate(weights, bias, self.examples.iter(), &mut gw, &mut gb);
        let scale = 1.0 / self.examples.len() as f64;
        for (g, w) in gw.iter_mut().zip(weights) {
            *g = *g * scale + self.l2 * w;
        }
        for g in &mut gb {
            *g *= scale;
        }
        (gw, gb)
    }

    fn accumulate<'b>(
        &self,
        weights: &[f64],
        bias: &[f64; 3],
        batch: impl Iterator<Item = &'b (SparseVector, StanceLabel)>,
        gw: &mut [f64],
        gb: &mut [f64; 3],
    ) {
        let v = self.n_features;
        for (x, y) in batch {
            let p = softmax(class_scores(weights, bias, v, x));
            for c in 0..CLASSES {
                let g = p[c] - if c == y.index() { 1.0 } else { 0.0 };
                gb[c] += g;
                for &(i, xi) in x.entries() {
                    gw[c * v + i] += g * xi;
                }
            }
        }
    }
}

/// Trains softmax regression by mini-batch gradient descent. Example order
/// is reshuffled every epoch from `config.seed`, so identical inputs and
/// config give bit-identical weights. Returns the model and its final loss
/// over the whole training set.
pub fn train_linear_baseline(
    train: &[(SparseVector, StanceLabel)],
    config: &TrainConfig,
) -> Result<(LinearModel, f64)> {
    let first = train.first().ok_or(VectorizeError::EmptyTrainSet)?;
    if config.batch_size == 0
        || config.learning_rate.is_nan()
        || config.learning_rate <= 0.0
        || config.l2.is_nan()
        || config.l2 < 0.0
    {
        return Err(VectorizeError::InvalidConfig(format!(
            "batch_size must be >= 1, learning_rate > 0 and l2 >= 0 (got {config:?})"
        )));
    }
    let v = first.0.dim();
    if let Some((x, _)) = train.iter().find(|(x, _)| x.dim() != v) {
        return Err(VectorizeError::DimensionMismatch {
            expected: v,
            actual: x.dim(),
        });
    }

    let objective = SoftmaxObjective::new(train, v, config.l2);
    let mut weights = vec![0.0; CLASSES * v];
    let mut bias = [0.0; 3];
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut rng = shuffle::rng(config.seed);
    let mut gw = vec![0.0; CLASSES * v];

    for _ in 0..config.epochs {
        shuffle::shuffle(&mut order, &mut rng);
        for batch in order.chunks(config.batch_size) {
            gw.iter_mut().for_each(|g| *g = 0.0);
            let mut gb = [0.0; 3];
            objective.accumulate(
                &weights,
                &bias,
                batch.iter().map(|&i| &train[i]),
                &mut gw,
                &mut gb,
            );
            let step = config.learning_rate / batch.len() as f64;
            let decay = 1.0 - config.learning_rate * config.l2;
            for (w, g) in weights.iter_mut().zip(&gw) {
                *w = *w * decay - step * g;
            }
            for (b, g) in bias.iter_mut().zip(gb) {
                *b -= step * g;
            }
        }
    }

    let final_loss = objective.loss(&weights, &bias);
    let mut model = LinearModel::new(v, weights, bias);
    model.metadata = Some(TrainingMetadata {
        epochs: config.epochs,
        learning_rate: config.learning_rate,
        batch_size: config.batch_size,
        l2: config.l2,
        seed: config.seed,
        final_loss,
    });
    Ok((model, final_loss))
}
