//! N-Tuple Bandit Evolutionary Algorithm over a discrete parameter space.
//!
//! Statistics are kept for every 1-tuple, every 2-tuple and the full tuple of
//! dimensions. Each iteration evaluates the current point once, then moves to
//! the neighbour (or stays) with the best UCB estimate averaged over tuples.

use std::collections::HashMap;
use std::fmt;
use std::io::{Read, Write};

use rand::Rng;

use crate::agents::RheaConfig;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ParamValue {
    Bool(bool),
    Real(f64),
    Int(usize),
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Bool(b) => write!(f, "{b}"),
            ParamValue::Real(r) => write!(f, "{r}"),
            ParamValue::Int(i) => write!(f, "{i}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dimension {
    pub name: &'static str,
    pub values: Vec<ParamValue>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchSpace {
    pub dimensions: Vec<Dimension>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConfigPoint(pub Vec<usize>);

impl ConfigPoint {
    pub fn indices(&self) -> &[usize] {
        &self.0
    }
}

impl SearchSpace {
    /// The eight rolling horizon hyper-parameters and their legal values.
    pub fn rhea() -> Self {
        let reals = |v: &[f64]| v.iter().map(|&x| ParamValue::Real(x)).collect::<Vec<_>>();
        let ints = |v: &[usize]| v.iter().map(|&x| ParamValue::Int(x)).collect::<Vec<_>>();
        let bools = vec![ParamValue::Bool(false), ParamValue::Bool(true)];
        let probs = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7];
        SearchSpace {
            dimensions: vec![
                Dimension {
                    name: "flipMinOneValue",
                    values: bools.clone(),
                },
                Dimension {
                    name: "probMutation",
                    values: reals(&probs),
                },
                Dimension {
                    name: "sequenceLength",
                    values: ints(&[1, 3, 5, 10, 20]),
                },
                Dimension {
                    name: "nEvals",
                    values: ints(&[1, 3, 5, 10, 25]),
                },
                Dimension {
                    name: "shiftBuffer",
                    values: bools.clone(),
                },
                Dimension {
                    name: "mutationTransducer",
                    values: bools,
                },
                Dimension {
                    name: "repeatProb",
                    values: reals(&probs),
                },
                Dimension {
                    name: "discountFactor",
                    values: reals(&[0.999, 0.99, 0.9, 0.8]),
                },
            ],
        }
    }

    pub fn len(&self) -> usize {
        self.dimensions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dimensions.is_empty()
    }

    pub fn size(&self) -> usize {
        self.dimensions.iter().map(|d| d.values.len()).product()
    }

    pub fn contains(&self, point: &ConfigPoint) -> bool {
        point.0.len() == self.len()
            && point
                .0
                .iter()
                .zip(&self.dimensions)
                .all(|(&i, d)| i < d.values.len())
    }

    pub fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> ConfigPoint {
        ConfigPoint(
            self.dimensions
                .iter()
                .map(|d| rng.gen_range(0..d.values.len()))
                .collect(),
        )
    }

    pub fn values(&self, point: &ConfigPoint) -> Vec<ParamValue> {
        point
            .0
            .iter()
            .zip(&self.dimensions)
            .map(|(&i, d)| d.values[i])
            .collect()
    }

    /// Index of `value` in dimension `dim`, matched through its text form.
    pub fn index_of(&self, dim: usize, text: &str) -> Option<usize> {
        self.dimensions
            .get(dim)?
            .values
            .iter()
            .position(|v| v.to_string() == text)
    }

    /// Concrete agent settings for a point of the rhea space. May fail
    /// validation (transducer on with repeatProb + probMutation > 1).
    pub fn to_rhea_config(
        &self,
        point: &ConfigPoint,
        budget_iterations: usize,
    ) -> Result<RheaConfig> {
        if !self.contains(point) || self.len() != 8 {
            return Err(Error::InvalidInput(format!(
                "{point:?} is not a point of the rhea space"
            )));
        }
        let mut config = RheaConfig {
            budget_iterations,
            ..RheaConfig::default()
        };
        for (dim, value) in self.dimensions.iter().zip(self.values(point)) {
            config.set(dim.name, &value.to_string())?;
        }
        config.validate()?;
        Ok(config)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Arm {
    pub n: u64,
    pub mean: f64,
}

impl Arm {
    fn update(&mut self, value: f64) {
        self.n += 1;
        self.mean += (value - self.mean) / self.n as f64;
    }
}

#[derive(Clone, Debug)]
pub struct TupleStats {
    tuples: Vec<Vec<usize>>,
    arms: Vec<HashMap<Vec<usize>, Arm>>,
    n_total: u64,
}

impl TupleStats {
    /// All 1-tuples, all 2-tuples and the full tuple over `dims` dimensions.
    pub fn new(dims: usize) -> Self {
        let mut tuples: Vec<Vec<usize>> = (0..dims).map(|d| vec![d]).collect();
        for a in 0..dims {
            for b in a + 1..dims {
                tuples.push(vec![a, b]);
            }
        }
        if dims > 2 {
            tuples.push((0..dims).collect());
        }
        let arms = vec![HashMap::new(); tuples.len()];
        TupleStats {
            tuples,
            arms,
            n_total: 0,
        }
    }

    pub fn tuples(&self) -> &[Vec<usize>] {
        &self.tuples
    }

    pub fn n_total(&self) -> u64 {
        self.n_total
    }

    fn key(tuple: &[usize], point: &ConfigPoint) -> Vec<usize> {
        tuple.iter().map(|&d| point.0[d]).collect()
    }

    pub fn update(&mut self, point: &ConfigPoint, fitness: f64) {
        for (tuple, arms) in self.tuples.iter().zip(self.arms.iter_mut()) {
            arms.entry(Self::key(tuple, point))
                .or_default()
                .update(fitness);
        }
        self.n_total += 1;
    }

    pub fn arm(&self, tuple_index: usize, point: &ConfigPoint) -> Arm {
        self.arms[tuple_index]
            .get(&Self::key(&self.tuples[tuple_index], point))
            .copied()
            .unwrap_or_default()
    }

    /// Statistics of the full tuple, i.e. of the point itself.
    pub fn point_arm(&self, point: &ConfigPoint) -> Arm {
        self.arm(self.tuples.len() - 1, point)
    }

    /// Sum of arm counts per tuple; each equals `n_total`.
    pub fn count_sums(&self) -> Vec<u64> {
        self.arms
            .iter()
            .map(|arms| arms.values().map(|a| a.n).sum())
            .collect()
    }
}

pub fn ucb_estimate(stats: &TupleStats, point: &ConfigPoint, k: f64) -> f64 {
    let log_total = (1.0 + stats.n_total as f64).ln();
    let sum: f64 = (0..stats.tuples.len())
        .map(|t| {
            let arm = stats.arm(t, point);
            arm.mean + k * (log_total / (1.0 + arm.n as f64)).sqrt()
        })
        .sum();
    sum / stats.tuples.len() as f64
}

fn redraw_other<R: Rng + ?Sized>(current: usize, size: usize, rng: &mut R) -> usize {
    let r = rng.gen_range(0..size - 1);
    if r >= current {
        r + 1
    } else {
        r
    }
}

/// `count` neighbours of `point`. Every dimension is redrawn to a different
/// value with probability `epsilon`; a neighbour that would equal `point`
/// gets one uniformly chosen dimension changed instead.
pub fn neighbours<R: Rng + ?Sized>(
    point: &ConfigPoint,
    space: &SearchSpace,
    epsilon: f64,
    count: usize,
    rng: &mut R,
) -> Vec<ConfigPoint> {
    let mutable: Vec<usize> = (0..space.len())
        .filter(|&d| space.dimensions[d].values.len() > 1)
        .collect();
    (0..count)
        .map(|_| {
            let mut n = point.clone();
            for &d in &mutable {
                if rng.gen::<f64>() < epsilon {
                    n.0[d] = redraw_other(point.0[d], space.dimensions[d].values.len(), rng);
                }
            }
            if n == *point && !mutable.is_empty() {
                let d = mutable[rng.gen_range(0..mutable.len())];
                n.0[d] = redraw_other(point.0[d], space.dimensions[d].values.len(), rng);
            }
            n
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NtbeaSettings {
    pub budget: usize,
    pub k: f64,
    pub epsilon: f64,
    pub neighbourhood_size: usize,
}

impl Default for NtbeaSettings {
    fn default() -> Self {
        NtbeaSettings {
            budget: 100,
            k: 300.0,
            epsilon: 0.5,
            neighbourhood_size: 50,
        }
    }
}

#[derive(Clone, Debug)]
pub struct TuneResult {
    pub best: ConfigPoint,
    /// Mean fitness of `best` over its evaluations.
    pub best_mean: f64,
    /// Every evaluation in order.
    pub log: Vec<(ConfigPoint, f64)>,
    pub stats: TupleStats,
}

pub fn ntbea_tune<R, F>(
    space: &SearchSpace,
    mut fitness: F,
    settings: &NtbeaSettings,
    rng: &mut R,
) -> Result<TuneResult>
where
    R: Rng + ?Sized,
    F: FnMut(&ConfigPoint) -> f64,
{
    if settings.budget == 0 {
        return Err(Error::InvalidInput(
            "tuning budget must be at least 1".into(),
        ));
    }
    if settings.neighbourhood_size == 0 {
        return Err(Error::InvalidInput(
            "neighbourhood size must be at least 1".into(),
        ));
    }
    let mut stats = TupleStats::new(space.len());
    let mut log = Vec::with_capacity(settings.budget);
    let mut current = space.random_point(rng);
    for i in 0..settings.budget {
        let value = fitness(&current);
        stats.update(&current, value);
        log.push((current.clone(), value));
        if i + 1 == settings.budget {
            break;
        }
        let candidates = neighbours(
            &current,
            space,
            settings.epsilon,
            settings.neighbourhood_size,
            rng,
        );
        let mut best_ucb = ucb_estimate(&stats, &current, settings.k);
        for candidate in candidates {
            let u = ucb_estimate(&stats, &candidate, settings.k);
            if u > best_ucb {
                best_ucb = u;
                current = candidate;
            }
        }
    }

    let mut best: Option<(ConfigPoint, Arm)> = None;
    for (point, _) in &log {
        let arm = stats.point_arm(point);
        let better = match &best {
            None => true,
            Some((_, b)) => arm.mean > b.mean || (arm.mean == b.mean && arm.n > b.n),
        };
        if better {
            best = Some((point.clone(), arm));
        }
    }
    let (best, arm) = best.expect("budget >= 1");
    Ok(TuneResult {
        best,
        best_mean: arm.mean,
        log,
        stats,
    })
}

/// Writes `eval_index,dim0..dimN,fitness` rows, then a
/// `best,dim0..dimN,mean_fitness` line.
pub fn write_tuning_log<W: Write>(out: W, space: &SearchSpace, result: &TuneResult) -> Result<()> {
    write_evaluation_log(out, space, &result.log, &result.best, result.best_mean)
}

/// [`write_tuning_log`] from its parts.
pub fn write_evaluation_log<W: Write>(
    out: W,
    space: &SearchSpace,
    log: &[(ConfigPoint, f64)],
    best: &ConfigPoint,
    best_mean: f64,
) -> Result<()> {
    let mut writer = csv::WriterBuilder::new().flexible(true).from_writer(out);
    let mut header = vec!["eval_index".to_string()];
    header.extend((0..space.len()).map(|d| format!("dim{d}")));
    header.push("fitness".into());
    writer.write_record(&header)?;
    let row = |label: String, point: &ConfigPoint, value: f64| {
        let mut r = vec![label];
        r.extend(space.values(point).iter().map(|v| v.to_string()));
        r.push(value.to_string());
        r
    };
    for (i, (point, value)) in log.iter().enumerate() {
        writer.write_record(row(i.to_string(), point, *value))?;
    }
    writer.write_record(row("best".into(), best, best_mean))?;
    writer.flush()?;
    Ok(())
}

/// Evaluated points with their fitness, then the recommendation and its mean.
pub type TuningLog = (Vec<(ConfigPoint, f64)>, (ConfigPoint, f64));

/// Parsed tuning log: the evaluations and the recommendation line.
pub fn read_tuning_log<R: Read>(input: R, space: &SearchSpace) -> Result<TuningLog> {
    let mut reader = csv::Reader::from_reader(input);
    let mut evals = Vec::new();
    let mut best = None;
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let bad = |msg: String| Error::Parse {
            line: line + 2,
            msg,
        };
        if record.len() != space.len() + 2 {
            return Err(bad(format!("expected {} fields", space.len() + 2)));
        }
        let point = ConfigPoint(
            (0..space.len())
                .map(|d| {
                    space
                        .index_of(d, &record[d + 1])
                        .ok_or_else(|| bad(format!("bad value `{}`", &record[d + 1])))
                })
                .collect::<Result<_>>()?,
        );
        let value: f64 = record[space.len() + 1]
            .parse()
            .map_err(|_| bad("bad fitness".into()))?;
        if &record[0] == "best" {
            best = Some((point, value));
        } else {
            evals.push((point, value));
        }
    }
    let best = best.ok_or_else(|| Error::Parse {
        line: 0,
        msg: "missing best line".into(),
    })?;
    Ok((evals, best))
}
