use crate::ca::{PatternCode, PATTERN_COUNT};
use crate::error::Result;

use super::{Learner, TransitionSample};

/// Lookup table over pattern codes. Unseen patterns map to `default_output`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactLearner {
    memory: [Option<u8>; PATTERN_COUNT],
    default_output: u8,
}

impl ExactLearner {
    pub fn new(default_output: u8) -> Self {
        ExactLearner {
            memory: [None; PATTERN_COUNT],
            default_output: default_output & 1,
        }
    }

    pub fn knows(&self, pattern: PatternCode) -> bool {
        self.memory[pattern.index()].is_some()
    }
}

impl Default for ExactLearner {
    fn default() -> Self {
        ExactLearner::new(0)
    }
}

impl Learner for ExactLearner {
    fn observe(&mut self, sample: TransitionSample) {
        self.memory[sample.pattern.index()] = Some(sample.outcome);
    }

    fn refit(&mut self) -> Result<()> {
        Ok(())
    }

    fn predict(&self, pattern: PatternCode) -> u8 {
        self.memory[pattern.index()].unwrap_or(self.default_output)
    }

    fn observed_patterns(&self) -> usize {
        self.memory.iter().filter(|m| m.is_some()).count()
    }
}
