//! Seeded, label-stratified train/test/validation split.
//!
//! Subset sizes follow a floor rule: `|train| = floor(0.70 N)`,
//! `|validation| = floor(0.15 N)`, and test receives the remainder, which
//! gives 6978 / 1496 / 1495 for N = 9969. Within each gold label the
//! members are shuffled and allocated to subsets proportionally with the
//! largest-remainder method, so every subset mirrors the global label mix.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{CorpusError, LabeledComment, Result, StanceLabel};
use crate::shuffle;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitRatios {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self {
            train: 0.70,
            validation: 0.15,
            test: 0.15,
        }
    }
}

impl SplitRatios {
    fn validate(&self) -> Result<()> {
        let parts = [self.train, self.validation, self.test];
        let sum: f64 = parts.iter().sum();
        if parts.iter().any(|r| !r.is_finite() || *r < 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(CorpusError::InvalidRatios((
                self.train,
                self.validation,
                self.test,
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Subset {
    Train,
    Test,
    Validation,
    /// Every comment; only meaningful for evaluation runs.
    All,
}

impl Subset {
    pub fn name(self) -> &'static str {
        match self {
            Subset::Train => "train",
            Subset::Test => "test",
            Subset::Validation => "validation",
            Subset::All => "all",
        }
    }
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Subset {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "train" => Ok(Subset::Train),
            "test" => Ok(Subset::Test),
            "validation" => Ok(Subset::Validation),
            "all" => Ok(Subset::All),
            other => Err(format!(
                "unknown subset `{other}`; expected train, test, validation or all"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit {
    pub train: Vec<LabeledComment>,
    pub test: Vec<LabeledComment>,
    pub validation: Vec<LabeledComment>,
    pub seed: u64,
}

impl DatasetSplit {
    /// Members of one subset. `Subset::All` yields train, test, then
    /// validation.
    pub fn subset(&self, subset: Subset) -> Vec<&LabeledComment> {
        match subset {
            Subset::Train => self.train.iter().collect(),
            Subset::Test => self.test.iter().collect(),
            Subset::Validation => self.validation.iter().collect(),
            Subset::All => self
                .train
                .iter()
                .chain(&self.test)
                .chain(&self.validation)
                .collect(),
        }
    }

    pub fn sizes(&self) -> (usize, usize, usize) {
        (self.train.len(), self.test.len(), self.validation.len())
    }

    /// `(id, subset)` for every comment, train first, then test, then
    /// validation.
    pub fn manifest(&self) -> Vec<(&str, Subset)> {
        [
            (&self.train, Subset::Train),
            (&self.test, Subset::Test),
            (&self.validation, Subset::Validation),
        ]
        .into_iter()
        .flat_map(|(list, s)| list.iter().map(move |c| (c.id.as_str(), s)))
        .collect()
    }

    /// Writes the manifest as CSV with header `id,subset`.
    pub fn write_manifest<W: std::io::Write>(&self, out: W) -> csv::Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(["id", "subset"])?;
        for (id, subset) in self.manifest() {
            writer.write_record([id, subset.name()])?;
        }
        writer.flush()?;
        Ok(())
    }
}

fn floor_share(ratio: f64, n: usize) -> usize {
    // The epsilon absorbs representation error such as 0.7 * 10 = 6.999..
    ((ratio * n as f64) + 1e-9).floor() as usize
}

/// `(train, test, validation)` sizes for `n` comments.
pub fn split_sizes(n: usize, ratios: SplitRatios) -> (usize, usize, usize) {
    let train = floor_share(ratios.train, n).min(n);
    let validation = floor_share(ratios.validation, n).min(n - train);
    (train, n - train - validation, validation)
}

/// Largest-remainder apportionment of `target` slots over strata
/// proportional to `sizes`, never exceeding `capacity`.
fn apportion(sizes: &[usize], total: usize, target: usize, capacity: &[usize]) -> Vec<usize> {
    let mut alloc: Vec<usize> = sizes
        .iter()
        .zip(capacity)
        .map(|(&s, &cap)| (s * target / total).min(cap))
        .collect();
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = sizes[a] * target % total;
        let rb = sizes[b] * target % total;
        rb.cmp(&ra).then(a.cmp(&b))
    });
    let mut remaining = target - alloc.iter().sum::<usize>();
    while remaining > 0 {
        let before = remaining;
        for &i in &order {
            if remaining == 0 {
                break;
            }
            if alloc[i] < capacity[i] {
                alloc[i] += 1;
                remaining -= 1;
            }
        }
        assert!(remaining < before, "apportionment target exceeds capacity");
    }
    alloc
}

/// Splits `comments` into train, test and validation subsets.
///
/// Comments are grouped by gold label (unlabeled comments form their own
/// group), each group is shuffled with ChaCha8 seeded from `seed`, and each
/// subset is shuffled again after assembly.
pub fn split_dataset(
    comments: &[LabeledComment],
    ratios: SplitRatios,
    seed: u64,
) -> Result<DatasetSplit> {
    ratios.validate()?;
    let n = comments.len();
    if n < 3 {
        return Err(CorpusError::TooFewComments(n));
    }
    let mut ids = HashSet::with_capacity(n);
    for c in comments {
        if !ids.insert(c.id.as_str()) {
            return Err(CorpusError::DuplicateIdInList(c.id.clone()));
        }
    }

    let stratum_of = |c: &LabeledComment| c.gold.map_or(3, StanceLabel::index);
    let mut strata: Vec<Vec<&LabeledComment>> = vec![Vec::new(); 4];
    for c in comments {
        strata[stratum_of(c)].push(c);
    }
    let sizes: Vec<usize> = strata.iter().map(Vec::len).collect();

    let (n_train, _, n_validation) = split_sizes(n, ratios);
    let train_alloc = apportion(&sizes, n, n_train, &sizes);
    let spare: Vec<usize> = sizes.iter().zip(&train_alloc).map(|(s, t)| s - t).collect();
    let validation_alloc = apportion(&sizes, n, n_validation, &spare);

    let mut rng = shuffle::rng(seed);
    let (mut train, mut test, mut validation) = (Vec::new(), Vec::new(), Vec::new());
    for (k, stratum) in strata.iter_mut().enumerate() {
        shuffle::shuffle(stratum, &mut rng);
        let (t, v) = (train_alloc[k], validation_alloc[k]);
        train.extend(stratum[..t].iter().map(|c| (*c).clone()));
        validation.extend(stratum[t..t + v].iter().map(|c| (*c).clone()));
        test.extend(stratum[t + v..].iter().map(|c| (*c).clone()));
    }
    shuffle::shuffle(&mut train, &mut rng);
    shuffle::shuffle(&mut test, &mut rng);
    shuffle::shuffle(&mut validation, &mut rng);

    Ok(DatasetSplit {
        train,
        test,
        validation,
        seed,
    })
}
