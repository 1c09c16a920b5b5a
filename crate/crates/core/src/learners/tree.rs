//! Unpruned ID3 decision tree over the nine pattern bits.
//!
//! Splits maximise information gain; ties go to the lowest bit index. Nodes
//! are split until pure or until every bit on the path has been used, so a
//! consistent training set is always fitted exactly. A branch that receives
//! no samples predicts its parent's majority class (ties to 0).

use crate::ca::PatternCode;
use crate::error::{Error, Result};

use super::{Dataset, Learner, TransitionSample};

const BITS: u16 = 9;
const GAIN_EPS: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TreeNode {
    Leaf(u8),
    Split {
        bit: u16,
        zero: Box<TreeNode>,
        one: Box<TreeNode>,
    },
}

impl TreeNode {
    fn predict(&self, pattern: PatternCode) -> u8 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf(v) => return *v,
                TreeNode::Split { bit, zero, one } => {
                    node = if pattern.bit(*bit) == 1 { one } else { zero };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf(_) => 0,
            TreeNode::Split { zero, one, .. } => 1 + zero.depth().max(one.depth()),
        }
    }

    pub fn leaves(&self) -> usize {
        match self {
            TreeNode::Leaf(_) => 1,
            TreeNode::Split { zero, one, .. } => zero.leaves() + one.leaves(),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct DecisionTree {
    data: Dataset,
    root: Option<TreeNode>,
}

impl DecisionTree {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn root(&self) -> Option<&TreeNode> {
        self.root.as_ref()
    }

    /// Fit directly on a sample list, replacing anything observed before.
    pub fn fit(samples: &[TransitionSample]) -> Result<Self> {
        let mut tree = DecisionTree::new();
        for &s in samples {
            tree.observe(s);
        }
        tree.refit()?;
        Ok(tree)
    }
}

fn entropy(ones: usize, total: usize) -> f64 {
    if total == 0 || ones == 0 || ones == total {
        return 0.0;
    }
    let p = ones as f64 / total as f64;
    -(p * p.log2() + (1.0 - p) * (1.0 - p).log2())
}

fn majority(samples: &[TransitionSample]) -> u8 {
    let ones = samples.iter().filter(|s| s.outcome == 1).count();
    (2 * ones > samples.len()) as u8
}

fn build(samples: &[TransitionSample], free_bits: u16, parent_majority: u8) -> TreeNode {
    if samples.is_empty() {
        return TreeNode::Leaf(parent_majority);
    }
    let ones = samples.iter().filter(|s| s.outcome == 1).count();
    if ones == 0 || ones == samples.len() {
        return TreeNode::Leaf(samples[0].outcome);
    }
    let node_majority = majority(samples);
    if free_bits == 0 {
        return TreeNode::Leaf(node_majority);
    }

    let n = samples.len();
    let base = entropy(ones, n);
    let mut best: Option<(u16, f64)> = None;
    for bit in (0..BITS).filter(|b| free_bits & (1 << b) != 0) {
        let (mut n1, mut ones1) = (0, 0);
        for s in samples {
            if s.pattern.bit(bit) == 1 {
                n1 += 1;
                ones1 += s.outcome as usize;
            }
        }
        let (n0, ones0) = (n - n1, ones - ones1);
        let remainder =
            (n0 as f64 * entropy(ones0, n0) + n1 as f64 * entropy(ones1, n1)) / n as f64;
        let gain = base - remainder;
        if best.is_none_or(|(_, g)| gain > g + GAIN_EPS) {
            best = Some((bit, gain));
        }
    }
    let (bit, _) = best.expect("at least one free bit");
    let (one_side, zero_side): (Vec<TransitionSample>, Vec<TransitionSample>) =
        samples.iter().partition(|s| s.pattern.bit(bit) == 1);
    let rest = free_bits & !(1 << bit);
    TreeNode::Split {
        bit,
        zero: Box::new(build(&zero_side, rest, node_majority)),
        one: Box::new(build(&one_side, rest, node_majority)),
    }
}

impl Learner for DecisionTree {
    fn observe(&mut self, sample: TransitionSample) {
        self.data.add(sample);
    }

    fn observe_all(&mut self, dataset: &Dataset) {
        self.data.merge(dataset);
    }

    fn refit(&mut self) -> Result<()> {
        if self.data.is_empty() {
            return Err(Error::InvalidState(
                "cannot fit a decision tree to an empty dataset".into(),
            ));
        }
        let samples = self.data.deduplicated();
        self.root = Some(build(&samples, (1 << BITS) - 1, 0));
        Ok(())
    }

    fn predict(&self, pattern: PatternCode) -> u8 {
        self.root.as_ref().map_or(0, |root| root.predict(pattern))
    }

    fn observed_patterns(&self) -> usize {
        self.data.unique_patterns()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ca::{hamming, rule_table_of, BuiltinRule, RuleTable};

    fn sample(code: u16, outcome: u8) -> TransitionSample {
        TransitionSample {
            pattern: PatternCode::new(code).unwrap(),
            outcome,
        }
    }

    fn labelled(table: &RuleTable) -> Vec<TransitionSample> {
        PatternCode::all()
            .map(|p| TransitionSample {
                pattern: p,
                outcome: table.get(p),
            })
            .collect()
    }

    #[test]
    fn empty_refit_is_an_error() {
        let mut tree = DecisionTree::new();
        assert!(matches!(tree.refit(), Err(Error::InvalidState(_))));
        assert_eq!(tree.predict(PatternCode::new(3).unwrap()), 0);
    }

    #[test]
    fn single_sample_gives_single_leaf() {
        let tree = DecisionTree::fit(&[sample(0, 0)]).unwrap();
        assert_eq!(tree.root(), Some(&TreeNode::Leaf(0)));
    }

    #[test]
    fn constant_outcome_gives_single_leaf() {
        let samples: Vec<_> = (0..40).map(|c| sample(c * 7, 1)).collect();
        let tree = DecisionTree::fit(&samples).unwrap();
        assert_eq!(tree.root(), Some(&TreeNode::Leaf(1)));
    }

    #[test]
    fn identity_rule_splits_on_centre() {
        // Codes c and c + 16 for c < 8: bits 0..2 vary independently of the
        // centre, so only bit 4 separates the classes.
        let samples: Vec<_> = (0..8)
            .flat_map(|c| [sample(c, 0), sample(c + 16, 1)])
            .collect();
        assert_eq!(samples.len(), 16);
        let tree = DecisionTree::fit(&samples).unwrap();
        assert!(matches!(tree.root(), Some(TreeNode::Split { bit: 4, .. })));
        for p in PatternCode::all() {
            assert_eq!(tree.predict(p), p.centre(), "code {p}");
        }
    }

    #[test]
    fn full_datasets_compile_to_the_true_tables() {
        for rule in [BuiltinRule::GameOfLife, BuiltinRule::cave(4).unwrap()] {
            let table = rule.table();
            let tree = DecisionTree::fit(&labelled(&table)).unwrap();
            assert_eq!(hamming(&tree.compile_to_table(), &table), 0);
            assert!(tree.root().unwrap().depth() <= 9);
        }
    }

    #[test]
    fn duplicates_do_not_change_the_tree() {
        let gol = rule_table_of(BuiltinRule::GameOfLife);
        let once = labelled(&gol);
        let mut twice = once.clone();
        twice.extend(once.iter().take(100));
        assert_eq!(
            DecisionTree::fit(&once).unwrap().root(),
            DecisionTree::fit(&twice).unwrap().root()
        );
    }

    #[test]
    fn empty_branch_uses_parent_majority() {
        // Two samples split on bit 0; the bit-1 branch below each side is empty.
        let tree = DecisionTree::fit(&[sample(0b0, 0), sample(0b1, 1)]).unwrap();
        assert_eq!(tree.root().unwrap().depth(), 1);
        assert_eq!(tree.predict(PatternCode::new(0b10).unwrap()), 0);
        assert_eq!(tree.predict(PatternCode::new(0b11).unwrap()), 1);
    }
}
