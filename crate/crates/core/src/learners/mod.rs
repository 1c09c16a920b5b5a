//! Local forward-model learners.
//!
//! Every cell of an observed transition yields one training sample: the 3x3
//! pattern around the cell before the update, and the cell's state after it.
//! A learner generalises from these samples and compiles into a
//! [`RuleTable`] by enumerating all 512 patterns.

mod dataset;
mod exact;
mod mlp;
mod tree;

use std::str::FromStr;

use rand::seq::index::sample;
use rand::Rng;

use crate::ca::{LocalRule, PatternCode, RuleTable, PATTERN_COUNT};
use crate::error::{Error, Result};

pub use dataset::{
    harvest_transitions, read_dataset_csv, write_dataset_csv, Dataset, TransitionSample,
};
pub use exact::ExactLearner;
pub use mlp::{MlpConfig, MlpLearner};
pub use tree::{DecisionTree, TreeNode};

pub trait Learner: Send {
    fn observe(&mut self, sample: TransitionSample);

    fn observe_all(&mut self, dataset: &Dataset) {
        for (sample, count) in dataset.entries() {
            for _ in 0..count {
                self.observe(sample);
            }
        }
    }

    /// Rebuild the predictor from everything observed so far.
    fn refit(&mut self) -> Result<()>;

    fn predict(&self, pattern: PatternCode) -> u8;

    fn compile_to_table(&self) -> RuleTable {
        RuleTable::from_fn(|code| self.predict(code))
    }

    /// Distinct patterns observed so far.
    fn observed_patterns(&self) -> usize;
}

/// Lets a learner drive the simulation directly, cell by cell.
pub struct ByLearner<'a, L: ?Sized>(pub &'a L);

impl<L: Learner + ?Sized> LocalRule for ByLearner<'_, L> {
    fn next_state(&self, code: PatternCode) -> u8 {
        self.0.predict(code)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LearnerKind {
    Exact,
    DecisionTree,
    Mlp,
}

impl LearnerKind {
    pub fn name(self) -> &'static str {
        match self {
            LearnerKind::Exact => "exact",
            LearnerKind::DecisionTree => "dtree",
            LearnerKind::Mlp => "mlp",
        }
    }

    /// A fresh learner. `seed` only matters for the MLP's initial weights.
    pub fn build(self, seed: u64) -> Box<dyn Learner> {
        match self {
            LearnerKind::Exact => Box::new(ExactLearner::new(0)),
            LearnerKind::DecisionTree => Box::new(DecisionTree::new()),
            LearnerKind::Mlp => Box::new(MlpLearner::new(MlpConfig::default(), seed)),
        }
    }
}

impl FromStr for LearnerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(LearnerKind::Exact),
            "dtree" | "tree" => Ok(LearnerKind::DecisionTree),
            "mlp" => Ok(LearnerKind::Mlp),
            other => Err(Error::InvalidInput(format!("unknown learner `{other}`"))),
        }
    }
}

/// A table that is correct on `known` uniformly sampled codes and `default`
/// elsewhere. Returns the table and the sorted list of known codes.
pub fn degrade_table<R: Rng + ?Sized>(
    true_table: &RuleTable,
    known: usize,
    default: u8,
    rng: &mut R,
) -> Result<(RuleTable, Vec<PatternCode>)> {
    if known > PATTERN_COUNT {
        return Err(Error::InvalidInput(format!(
            "known = {known} exceeds {PATTERN_COUNT}"
        )));
    }
    let mut table = RuleTable::constant(default);
    let mut codes: Vec<PatternCode> = sample(rng, PATTERN_COUNT, known)
        .into_iter()
        .map(|i| PatternCode::new_unchecked(i as u16))
        .collect();
    codes.sort();
    for &code in &codes {
        table.set(code, true_table.get(code));
    }
    Ok((table, codes))
}
