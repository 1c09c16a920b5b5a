use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::ca::{pattern_codes, Grid, PatternCode, PATTERN_COUNT};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TransitionSample {
    pub pattern: PatternCode,
    pub outcome: u8,
}

impl TransitionSample {
    pub fn new(pattern: PatternCode, outcome: u8) -> Result<Self> {
        if outcome > 1 {
            return Err(Error::InvalidInput(format!("non-binary outcome {outcome}")));
        }
        Ok(TransitionSample { pattern, outcome })
    }
}

/// Multiset of samples, stored as a count per (pattern, outcome).
#[derive(Clone, PartialEq, Eq)]
pub struct Dataset {
    counts: Box<[[u64; 2]; PATTERN_COUNT]>,
    total: u64,
}

impl std::fmt::Debug for Dataset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "Dataset({} samples, {} patterns)",
            self.total,
            self.unique_patterns()
        )
    }
}

impl Default for Dataset {
    fn default() -> Self {
        Dataset {
            counts: Box::new([[0; 2]; PATTERN_COUNT]),
            total: 0,
        }
    }
}

impl Dataset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, sample: TransitionSample) {
        self.add_count(sample, 1);
    }

    pub fn add_count(&mut self, sample: TransitionSample, count: u64) {
        self.counts[sample.pattern.index()][sample.outcome as usize] += count;
        self.total += count;
    }

    pub fn merge(&mut self, other: &Dataset) {
        for (sample, count) in other.entries() {
            self.add_count(sample, count);
        }
    }

    pub fn len(&self) -> u64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn count(&self, pattern: PatternCode, outcome: u8) -> u64 {
        self.counts[pattern.index()][outcome as usize & 1]
    }

    pub fn contains(&self, pattern: PatternCode) -> bool {
        let [zero, one] = self.counts[pattern.index()];
        zero + one > 0
    }

    pub fn unique_patterns(&self) -> usize {
        PatternCode::all().filter(|&p| self.contains(p)).count()
    }

    /// Distinct (sample, count) pairs ordered by pattern then outcome.
    pub fn entries(&self) -> impl Iterator<Item = (TransitionSample, u64)> + '_ {
        PatternCode::all().flat_map(move |pattern| {
            (0..2u8).filter_map(move |outcome| {
                let n = self.counts[pattern.index()][outcome as usize];
                (n > 0).then_some((TransitionSample { pattern, outcome }, n))
            })
        })
    }

    /// One sample per observed pattern, labelled with its majority outcome
    /// (ties go to 0).
    pub fn deduplicated(&self) -> Vec<TransitionSample> {
        PatternCode::all()
            .filter(|&p| self.contains(p))
            .map(|pattern| {
                let [zero, one] = self.counts[pattern.index()];
                TransitionSample {
                    pattern,
                    outcome: (one > zero) as u8,
                }
            })
            .collect()
    }
}

/// One sample per cell: the pattern around it in `before` and its state in
/// `after`.
pub fn harvest_transitions(before: &Grid, after: &Grid) -> Result<Dataset> {
    if !before.same_shape(after) {
        return Err(Error::InvalidInput(format!(
            "transition grids differ in shape: {}x{} vs {}x{}",
            before.width(),
            before.height(),
            after.width(),
            after.height()
        )));
    }
    let mut dataset = Dataset::new();
    for (code, &outcome) in pattern_codes(before).into_iter().zip(after.cells()) {
        dataset.add(TransitionSample {
            pattern: code,
            outcome,
        });
    }
    Ok(dataset)
}

#[derive(Debug, Serialize, Deserialize)]
struct DatasetRow {
    pattern_code: u16,
    outcome: u8,
    count: u64,
}

/// Writes `pattern_code,outcome,count` rows.
pub fn write_dataset_csv<W: Write>(out: W, dataset: &Dataset) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for (sample, count) in dataset.entries() {
        writer.serialize(DatasetRow {
            pattern_code: sample.pattern.value(),
            outcome: sample.outcome,
            count,
        })?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_dataset_csv<R: Read>(input: R) -> Result<Dataset> {
    let mut dataset = Dataset::new();
    for row in csv::Reader::from_reader(input).deserialize() {
        let row: DatasetRow = row?;
        let sample = TransitionSample::new(PatternCode::new(row.pattern_code)?, row.outcome)?;
        dataset.add_count(sample, row.count);
    }
    Ok(dataset)
}
