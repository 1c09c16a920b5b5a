use std::collections::BTreeMap;
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::stats::{mean, std_dev};
use super::{nstep_errors, run_many, run_one, AgentKind, ExperimentSpec, ModelSource, RunRecord};
use crate::ca::{Grid, RuleTable};
use crate::error::{Error, Result};
use crate::learners::{degrade_table, LearnerKind};
use crate::ntbea::{ntbea_tune, ConfigPoint, NtbeaSettings, SearchSpace};
use crate::seed::{derive_seed, rng_for, TAG_EVAL, TAG_MODEL, TAG_REEVAL, TAG_TUNER};

/// Width of the plotted error band, in standard deviations.
pub const BAND_SIGMAS: f64 = 1.5;

fn band(mean: f64, sd: f64) -> (f64, f64) {
    (mean - BAND_SIGMAS * sd, mean + BAND_SIGMAS * sd)
}

fn as_f64(xs: impl IntoIterator<Item = usize>) -> Vec<f64> {
    xs.into_iter().map(|x| x as f64).collect()
}

pub fn write_rows<W: Write, T: Serialize>(out: W, rows: &[T]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_rows<R: Read, T: DeserializeOwned>(input: R) -> Result<Vec<T>> {
    let mut reader = csv::Reader::from_reader(input);
    reader
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

// ---------------------------------------------------------------------------
// Truth-table errors against score and short-horizon prediction error.

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fig2Row {
    pub rule: String,
    pub errors: usize,
    pub score_mean: f64,
    pub score_sd: f64,
    /// Mismatch at the fifth step.
    pub pred5_mean: f64,
    pub pred5_sd: f64,
    /// Mismatches summed over steps one to five.
    pub pred5_cum_mean: f64,
    pub pred5_cum_sd: f64,
    pub score_lo: f64,
    pub score_hi: f64,
    pub pred5_lo: f64,
    pub pred5_hi: f64,
}

pub const PRED_HORIZON: usize = 5;

/// For each rule and error count, runs `base.repeats` episodes with a table
/// carrying exactly that many wrong entries (fresh per model group) and a
/// five-step prediction test from an independent start per run.
pub fn fig2_rows(
    rules: &[(String, RuleTable)],
    error_counts: &[usize],
    base: &ExperimentSpec,
) -> Result<Vec<Fig2Row>> {
    let mut rows = Vec::new();
    for (name, table) in rules {
        for &errors in error_counts {
            let spec = ExperimentSpec {
                rule: table.clone(),
                model: ModelSource::Corrupted { errors },
                ..base.clone()
            };
            let records = run_many(&spec)?;
            let preds: Vec<Vec<usize>> = (0..spec.repeats as u64)
                .into_par_iter()
                .map(|id| {
                    Ok(nstep_errors(
                        &spec.initial_model(id)?,
                        table,
                        &spec.prediction_start(id)?,
                        PRED_HORIZON,
                    ))
                })
                .collect::<Result<_>>()?;
            let scores = as_f64(records.iter().map(RunRecord::final_score));
            let at = as_f64(preds.iter().map(|p| p[PRED_HORIZON - 1]));
            let cum = as_f64(preds.iter().map(|p| p.iter().sum()));
            let (score_mean, score_sd) = (mean(&scores), std_dev(&scores));
            let (pred5_mean, pred5_sd) = (mean(&at), std_dev(&at));
            let (score_lo, score_hi) = band(score_mean, score_sd);
            let (pred5_lo, pred5_hi) = band(pred5_mean, pred5_sd);
            rows.push(Fig2Row {
                rule: name.clone(),
                errors,
                score_mean,
                score_sd,
                pred5_mean,
                pred5_sd,
                pred5_cum_mean: mean(&cum),
                pred5_cum_sd: std_dev(&cum),
                score_lo,
                score_hi,
                pred5_lo,
                pred5_hi,
            });
        }
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// N-step prediction.

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NstepRow {
    pub step: usize,
    pub errors_mean: f64,
    pub errors_sd: f64,
    /// Mean over starts of the mismatches summed over steps one to `step`.
    pub errors_cum_mean: f64,
}

pub fn nstep_rows(
    model: &RuleTable,
    true_table: &RuleTable,
    starts: &[Grid],
    horizon: usize,
) -> Result<Vec<NstepRow>> {
    if horizon == 0 || starts.is_empty() {
        return Err(Error::InvalidInput(
            "need a positive horizon and at least one start".into(),
        ));
    }
    let per_start: Vec<Vec<usize>> = starts
        .par_iter()
        .map(|g| nstep_errors(model, true_table, g, horizon))
        .collect();
    let mut cum = vec![0.0; starts.len()];
    Ok((0..horizon)
        .map(|t| {
            let at = as_f64(per_start.iter().map(|e| e[t]));
            for (c, v) in cum.iter_mut().zip(&at) {
                *c += v;
            }
            NstepRow {
                step: t + 1,
                errors_mean: mean(&at),
                errors_sd: std_dev(&at),
                errors_cum_mean: mean(&cum),
            }
        })
        .collect())
}

// ---------------------------------------------------------------------------
// Known-pattern sweep.

#[derive(Clone, Debug)]
pub struct SweepCell {
    pub known: usize,
    pub agent: AgentKind,
    pub records: Vec<RunRecord>,
}

/// Every agent at every known count. Runs with the same id share their start
/// grid across cells, which keeps comparisons between cells paired.
pub fn degradation_sweep(
    base: &ExperimentSpec,
    known_values: &[usize],
    agents: &[AgentKind],
) -> Result<Vec<SweepCell>> {
    let mut cells = Vec::new();
    for &known in known_values {
        for &agent in agents {
            let spec = ExperimentSpec {
                model: ModelSource::Degraded { known },
                agent,
                ..base.clone()
            };
            cells.push(SweepCell {
                known,
                agent,
                records: run_many(&spec)?,
            });
        }
    }
    Ok(cells)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fig4Row {
    pub known: usize,
    pub tick: usize,
    pub agent: String,
    pub score_mean: f64,
    pub score_sd: f64,
    pub prederr_mean: f64,
    pub prederr_sd: f64,
    pub score_lo: f64,
    pub score_hi: f64,
    pub prederr_lo: f64,
    pub prederr_hi: f64,
}

pub fn fig4_rows(cells: &[SweepCell]) -> Vec<Fig4Row> {
    let mut rows = Vec::new();
    for cell in cells {
        let ticks = cell.records.first().map_or(0, |r| r.scores.len());
        for t in 0..ticks {
            let scores = as_f64(cell.records.iter().map(|r| r.scores[t]));
            let errs = as_f64(cell.records.iter().map(|r| r.prediction_errors[t]));
            let (score_mean, score_sd) = (mean(&scores), std_dev(&scores));
            let (prederr_mean, prederr_sd) = (mean(&errs), std_dev(&errs));
            let (score_lo, score_hi) = band(score_mean, score_sd);
            let (prederr_lo, prederr_hi) = band(prederr_mean, prederr_sd);
            rows.push(Fig4Row {
                known: cell.known,
                tick: t + 1,
                agent: cell.agent.name().into(),
                score_mean,
                score_sd,
                prederr_mean,
                prederr_sd,
                score_lo,
                score_hi,
                prederr_lo,
                prederr_hi,
            });
        }
    }
    rows
}

/// Mean over ticks of a record's one-step prediction errors.
pub fn mean_prediction_error(record: &RunRecord) -> f64 {
    mean(&as_f64(record.prediction_errors.iter().copied()))
}

// ---------------------------------------------------------------------------
// Online learning.

/// Runs `spec` with a learner of `kind` that starts empty and is refitted
/// after every tick. Records keep their first-sighting streams.
pub fn online_learning_run(kind: LearnerKind, spec: &ExperimentSpec) -> Result<Vec<RunRecord>> {
    run_many(&ExperimentSpec {
        model: ModelSource::Online(kind),
        record_stream: true,
        ..spec.clone()
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fig5Row {
    pub tick: usize,
    pub agent: String,
    pub score_mean: f64,
    pub score_sd: f64,
    pub observed_mean: f64,
    pub correct_mean: f64,
    pub score_lo: f64,
    pub score_hi: f64,
}

pub fn fig5_rows(groups: &[(String, Vec<RunRecord>)]) -> Vec<Fig5Row> {
    let mut rows = Vec::new();
    for (agent, records) in groups {
        let ticks = records.first().map_or(0, |r| r.scores.len());
        for t in 0..ticks {
            let scores = as_f64(records.iter().map(|r| r.scores[t]));
            let (score_mean, score_sd) = (mean(&scores), std_dev(&scores));
            let (score_lo, score_hi) = band(score_mean, score_sd);
            rows.push(Fig5Row {
                tick: t + 1,
                agent: agent.clone(),
                score_mean,
                score_sd,
                observed_mean: mean(&as_f64(records.iter().map(|r| r.observed[t]))),
                correct_mean: mean(&as_f64(records.iter().map(|r| r.correct[t]))),
                score_lo,
                score_hi,
            });
        }
    }
    rows
}

// ---------------------------------------------------------------------------
// Hyper-parameter tuning under perfect and degraded models.

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TuningSettings {
    /// Known patterns of each run's model; 512 is the perfect model.
    pub known: usize,
    pub runs: usize,
    pub ntbea: NtbeaSettings,
    /// Fresh episodes used to re-evaluate each recommendation.
    pub reeval_episodes: usize,
}

impl TuningSettings {
    pub fn new(known: usize, runs: usize) -> Self {
        TuningSettings {
            known,
            runs,
            ntbea: NtbeaSettings::default(),
            reeval_episodes: 5,
        }
    }

    pub fn condition(&self) -> String {
        if self.known == crate::ca::PATTERN_COUNT {
            "perfect".into()
        } else {
            format!("degraded:{}", self.known)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TuningRun {
    pub run: usize,
    pub best: ConfigPoint,
    /// The tuner's own mean estimate for `best`.
    pub tuned_mean: f64,
    /// Mean final score of `best` over fresh re-evaluation episodes.
    pub fitness: f64,
    pub evaluations: usize,
    pub log: Vec<(ConfigPoint, f64)>,
}

/// Fitness of one configuration: the signed final score of one episode
/// played with `model`. Configurations the agent rejects score 0.
fn episode_fitness(
    base: &ExperimentSpec,
    model: &RuleTable,
    point: &ConfigPoint,
    master_seed: u64,
    run_id: u64,
) -> Result<f64> {
    let config = match SearchSpace::rhea().to_rhea_config(point, base.config.budget_iterations) {
        Ok(c) => c,
        Err(Error::Config(_)) => return Ok(0.0),
        Err(e) => return Err(e),
    };
    let spec = ExperimentSpec {
        agent: AgentKind::Rhea,
        config,
        model: ModelSource::Fixed(Box::new(model.clone())),
        master_seed,
        record_stream: false,
        ..base.clone()
    };
    let record = run_one(&spec, run_id)?;
    Ok(base.objective.signed(record.final_score() as f64))
}

pub fn tuning_experiment(
    base: &ExperimentSpec,
    settings: &TuningSettings,
) -> Result<Vec<TuningRun>> {
    if settings.runs == 0 {
        return Err(Error::InvalidInput(
            "at least one tuning run is needed".into(),
        ));
    }
    let space = SearchSpace::rhea();
    let seed = base.master_seed;
    (0..settings.runs)
        .into_par_iter()
        .map(|run| {
            let r = run as u64;
            let mut model_rng = rng_for(seed, &[TAG_TUNER, TAG_MODEL, r]);
            let model = degrade_table(&base.rule, settings.known, 0, &mut model_rng)?.0;
            let mut error = None;
            let mut evaluations = 0u64;
            let mut tuner_rng = rng_for(seed, &[TAG_TUNER, r]);
            let result = ntbea_tune(
                &space,
                |point| {
                    let i = evaluations;
                    evaluations += 1;
                    episode_fitness(base, &model, point, derive_seed(seed, &[TAG_EVAL, r, i]), 0)
                        .unwrap_or_else(|e| {
                            error.get_or_insert(e);
                            0.0
                        })
                },
                &settings.ntbea,
                &mut tuner_rng,
            )?;
            if let Some(e) = error {
                return Err(e);
            }
            let reeval_seed = derive_seed(seed, &[TAG_REEVAL, r]);
            let scores = (0..settings.reeval_episodes as u64)
                .map(|id| episode_fitness(base, &model, &result.best, reeval_seed, id))
                .collect::<Result<Vec<_>>>()?;
            Ok(TuningRun {
                run,
                best: result.best,
                tuned_mean: result.best_mean,
                fitness: if scores.is_empty() {
                    result.best_mean
                } else {
                    mean(&scores)
                },
                evaluations: evaluations as usize,
                log: result.log,
            })
        })
        .collect()
}

/// `condition,run,fitness,phi0..phi7` with concrete parameter values.
pub fn write_fig3_csv<W: Write>(out: W, groups: &[(String, Vec<TuningRun>)]) -> Result<()> {
    let space = SearchSpace::rhea();
    let mut writer = csv::Writer::from_writer(out);
    let mut header = vec!["condition".to_string(), "run".into(), "fitness".into()];
    header.extend((0..space.len()).map(|i| format!("phi{i}")));
    writer.write_record(&header)?;
    for (condition, runs) in groups {
        for run in runs {
            let mut record = vec![
                condition.clone(),
                run.run.to_string(),
                run.fitness.to_string(),
            ];
            record.extend(space.values(&run.best).iter().map(|v| v.to_string()));
            writer.write_record(&record)?;
        }
    }
    writer.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Fig3Entry {
    pub condition: String,
    pub run: usize,
    pub fitness: f64,
    pub point: ConfigPoint,
}

pub fn read_fig3_csv<R: Read>(input: R) -> Result<Vec<Fig3Entry>> {
    let space = SearchSpace::rhea();
    let mut reader = csv::Reader::from_reader(input);
    let mut entries = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let line = i + 2;
        let bad = |msg: String| Error::Parse { line, msg };
        if record.len() != 3 + space.len() {
            return Err(bad(format!(
                "expected {} fields, got {}",
                3 + space.len(),
                record.len()
            )));
        }
        let run = record[1]
            .parse()
            .map_err(|_| bad(format!("bad run `{}`", &record[1])))?;
        let fitness = record[2]
            .parse()
            .map_err(|_| bad(format!("bad fitness `{}`", &record[2])))?;
        let point = (0..space.len())
            .map(|d| {
                space
                    .index_of(d, &record[3 + d])
                    .ok_or_else(|| bad(format!("bad value `{}`", &record[3 + d])))
            })
            .collect::<Result<Vec<_>>>()?;
        entries.push(Fig3Entry {
            condition: record[0].to_string(),
            run,
            fitness,
            point: ConfigPoint(point),
        });
    }
    Ok(entries)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginalRow {
    pub condition: String,
    pub parameter: String,
    pub value: String,
    pub count: usize,
}

/// How often each value of each parameter was recommended, zeros included.
pub fn marginal_rows(groups: &[(String, Vec<TuningRun>)]) -> Vec<MarginalRow> {
    let space = SearchSpace::rhea();
    let mut rows = Vec::new();
    for (condition, runs) in groups {
        for (d, dim) in space.dimensions.iter().enumerate() {
            let mut counts: BTreeMap<usize, usize> =
                (0..dim.values.len()).map(|i| (i, 0)).collect();
            for run in runs {
                *counts.entry(run.best.0[d]).or_default() += 1;
            }
            rows.extend(counts.into_iter().map(|(i, count)| MarginalRow {
                condition: condition.clone(),
                parameter: dim.name.into(),
                value: dim.values[i].to_string(),
                count,
            }));
        }
    }
    rows
}

/// Recommended value of a numeric dimension, for medians and the like.
pub fn recommended_value(run: &TuningRun, dim: usize) -> f64 {
    match SearchSpace::rhea().values(&run.best)[dim] {
        crate::ntbea::ParamValue::Bool(b) => b as u8 as f64,
        crate::ntbea::ParamValue::Real(r) => r,
        crate::ntbea::ParamValue::Int(i) => i as f64,
    }
}
