//! Seeded batch runs behind the figures: episodes under perfect, degraded,
//! corrupted or online-learned models, plus the n-step prediction test,
//! the degradation sweep and the tuning experiment.
//!
//! Every run draws from generators derived from `(master seed, run id)`, and
//! runs are collected in run-id order, so output does not depend on how
//! rayon schedules the work.

mod figures;
pub mod stats;

pub use figures::*;

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;

use crate::agents::{DoNothingAgent, RandomAgent, RheaAgent, RheaConfig};
use crate::ca::{hamming, pattern_codes, step_grid, Boundary, Grid, RuleTable, PATTERN_COUNT};
use crate::error::{Error, Result};
use crate::game::{apply_action, random_start, score, Action, GameState, Objective, Policy};
use crate::learners::{degrade_table, harvest_transitions, Learner, LearnerKind, TransitionSample};
use crate::seed::{
    derive_seed, rng_for, SimRng, TAG_AGENT, TAG_LEARNER, TAG_MODEL, TAG_PREDICT, TAG_START,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AgentKind {
    Rhea,
    Random,
    Nothing,
}

impl AgentKind {
    pub fn name(self) -> &'static str {
        match self {
            AgentKind::Rhea => "rhea",
            AgentKind::Random => "random",
            AgentKind::Nothing => "nothing",
        }
    }

    pub fn build(self, config: &RheaConfig) -> Result<Box<dyn Policy + Send>> {
        Ok(match self {
            AgentKind::Rhea => Box::new(RheaAgent::new(*config)?),
            AgentKind::Random => Box::new(RandomAgent),
            AgentKind::Nothing => Box::new(DoNothingAgent),
        })
    }
}

impl std::str::FromStr for AgentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rhea" => Ok(AgentKind::Rhea),
            "random" => Ok(AgentKind::Random),
            "nothing" => Ok(AgentKind::Nothing),
            other => Err(Error::InvalidInput(format!("unknown agent `{other}`"))),
        }
    }
}

/// Where the agent's forward model comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum ModelSource {
    Perfect,
    /// Correct on `known` sampled codes, 0 elsewhere.
    Degraded {
        known: usize,
    },
    /// The true table with exactly `errors` sampled entries flipped.
    Corrupted {
        errors: usize,
    },
    /// A fixed table, e.g. loaded from a file.
    Fixed(Box<RuleTable>),
    /// Starts empty and is refitted on every observed transition.
    Online(LearnerKind),
}

impl ModelSource {
    pub fn label(&self) -> String {
        match self {
            ModelSource::Perfect => "perfect".into(),
            ModelSource::Degraded { known } => format!("degraded:{known}"),
            ModelSource::Corrupted { errors } => format!("corrupted:{errors}"),
            ModelSource::Fixed(_) => "fixed".into(),
            ModelSource::Online(kind) => format!("online:{}", kind.name()),
        }
    }
}

impl std::str::FromStr for ModelSource {
    type Err = Error;

    /// `perfect`, `degraded:K`, `corrupted:E` or `online:KIND`.
    fn from_str(s: &str) -> Result<Self> {
        let count = |v: &str| {
            v.parse::<usize>()
                .ok()
                .filter(|&n| n <= PATTERN_COUNT)
                .ok_or_else(|| Error::InvalidInput(format!("`{v}` is not a count in 0..=512")))
        };
        match s.split_once(':') {
            None if s == "perfect" => Ok(ModelSource::Perfect),
            Some(("degraded", k)) => Ok(ModelSource::Degraded { known: count(k)? }),
            Some(("corrupted", e)) => Ok(ModelSource::Corrupted { errors: count(e)? }),
            Some(("online", kind)) => Ok(ModelSource::Online(kind.parse()?)),
            _ => Err(Error::InvalidInput(format!("unknown model `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub rule: RuleTable,
    pub width: usize,
    pub height: usize,
    pub boundary: Boundary,
    pub density: f64,
    pub ticks: usize,
    pub repeats: usize,
    /// Consecutive runs sharing one sampled model (degraded/corrupted).
    pub games_per_model: usize,
    pub master_seed: u64,
    pub agent: AgentKind,
    pub config: RheaConfig,
    pub model: ModelSource,
    pub objective: Objective,
    /// Keep the first-sighting pattern stream in each record.
    pub record_stream: bool,
}

impl ExperimentSpec {
    /// 30x30 torus, density 0.5, 100 ticks, tuned RHEA with a perfect model.
    pub fn new(rule: RuleTable, master_seed: u64) -> Self {
        ExperimentSpec {
            rule,
            width: 30,
            height: 30,
            boundary: Boundary::Torus,
            density: 0.5,
            ticks: 100,
            repeats: 30,
            games_per_model: 1,
            master_seed,
            agent: AgentKind::Rhea,
            config: RheaConfig::default(),
            model: ModelSource::Perfect,
            objective: Objective::Maximize,
            record_stream: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.ticks == 0 {
            return Err(Error::InvalidInput(
                "an episode needs at least one tick".into(),
            ));
        }
        if self.games_per_model == 0 {
            return Err(Error::InvalidInput(
                "games per model must be positive".into(),
            ));
        }
        if self.agent == AgentKind::Rhea {
            self.config.validate()?;
        }
        Ok(())
    }

    pub fn start_grid(&self, run_id: u64) -> Result<Grid> {
        let mut rng = rng_for(self.master_seed, &[TAG_START, run_id]);
        random_start(
            self.width,
            self.height,
            self.boundary,
            self.density,
            &mut rng,
        )
    }

    fn model_group(&self, run_id: u64) -> u64 {
        run_id / self.games_per_model as u64
    }

    /// The table the agent plans with at tick 0 of `run_id`.
    pub fn initial_model(&self, run_id: u64) -> Result<RuleTable> {
        let mut rng = rng_for(self.master_seed, &[TAG_MODEL, self.model_group(run_id)]);
        match &self.model {
            ModelSource::Perfect => Ok(self.rule.clone()),
            ModelSource::Degraded { known } => {
                Ok(degrade_table(&self.rule, *known, 0, &mut rng)?.0)
            }
            ModelSource::Corrupted { errors } => corrupt_table(&self.rule, *errors, &mut rng),
            ModelSource::Fixed(table) => Ok(table.as_ref().clone()),
            ModelSource::Online(kind) => Ok(self.learner(*kind, run_id).compile_to_table()),
        }
    }

    fn learner(&self, kind: LearnerKind, run_id: u64) -> Box<dyn Learner> {
        kind.build(derive_seed(self.master_seed, &[TAG_LEARNER, run_id]))
    }

    /// A start grid for prediction tests, independent of the episode start.
    pub fn prediction_start(&self, run_id: u64) -> Result<Grid> {
        let mut rng = rng_for(self.master_seed, &[TAG_PREDICT, run_id]);
        random_start(
            self.width,
            self.height,
            self.boundary,
            self.density,
            &mut rng,
        )
    }
}

/// The true table with exactly `errors` distinct entries flipped.
pub fn corrupt_table<R: Rng + ?Sized>(
    true_table: &RuleTable,
    errors: usize,
    rng: &mut R,
) -> Result<RuleTable> {
    if errors > PATTERN_COUNT {
        return Err(Error::InvalidInput(format!(
            "errors = {errors} exceeds {PATTERN_COUNT}"
        )));
    }
    let mut table = true_table.clone();
    for i in sample(rng, PATTERN_COUNT, errors) {
        let code = crate::ca::PatternCode::new(i as u16)?;
        table.set(code, 1 - table.get(code));
    }
    Ok(table)
}

/// One episode's per-tick measurements.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub run_id: u64,
    /// Score after each tick.
    pub scores: Vec<usize>,
    /// Cells where the agent's model, applied to the acted grid, disagrees
    /// with the true next grid.
    pub prediction_errors: Vec<usize>,
    /// Distinct patterns seen in environment transitions so far.
    pub observed: Vec<usize>,
    /// Codes on which the agent's model (after the tick's refit) is right.
    pub correct: Vec<usize>,
    pub final_hamming: usize,
    pub actions: Vec<Action>,
    /// First sighting of each pattern, in order (empty unless requested).
    pub stream: Vec<TransitionSample>,
}

impl RunRecord {
    pub fn final_score(&self) -> usize {
        *self.scores.last().expect("at least one tick")
    }
}

pub fn run_one(spec: &ExperimentSpec, run_id: u64) -> Result<RunRecord> {
    run_from(spec, run_id, spec.start_grid(run_id)?)
}

/// Like [`run_one`], but from a given start grid.
pub fn run_from(spec: &ExperimentSpec, run_id: u64, start: Grid) -> Result<RunRecord> {
    spec.validate()?;
    let mut state = GameState::new(start, spec.objective);
    let mut agent = spec.agent.build(&spec.config)?;
    let mut rng: SimRng = rng_for(spec.master_seed, &[TAG_AGENT, run_id]);
    let mut learner = match spec.model {
        ModelSource::Online(kind) => Some(spec.learner(kind, run_id)),
        _ => None,
    };
    let mut model = spec.initial_model(run_id)?;

    let n = spec.ticks;
    let mut record = RunRecord {
        run_id,
        scores: Vec::with_capacity(n),
        prediction_errors: Vec::with_capacity(n),
        observed: Vec::with_capacity(n),
        correct: Vec::with_capacity(n),
        final_hamming: 0,
        actions: Vec::with_capacity(n),
        stream: Vec::new(),
    };
    let mut seen = [false; PATTERN_COUNT];
    let mut seen_count = 0;
    for _ in 0..n {
        let action = agent.act(&state, &model, &mut rng);
        let acted = apply_action(&state, action)?;
        record.actions.push(action);
        let next = step_grid(&acted.grid, &spec.rule);
        record
            .prediction_errors
            .push(step_grid(&acted.grid, &model).mismatches(&next));

        for (code, &outcome) in pattern_codes(&acted.grid).into_iter().zip(next.cells()) {
            if !seen[code.index()] {
                seen[code.index()] = true;
                seen_count += 1;
                if spec.record_stream {
                    record.stream.push(TransitionSample {
                        pattern: code,
                        outcome,
                    });
                }
            }
        }
        if let Some(learner) = learner.as_mut() {
            learner.observe_all(&harvest_transitions(&acted.grid, &next)?);
            learner.refit()?;
            model = learner.compile_to_table();
        }

        state = GameState {
            grid: next,
            tick: state.tick + 1,
            objective: state.objective,
        };
        record.scores.push(score(&state));
        record.observed.push(seen_count);
        record
            .correct
            .push(PATTERN_COUNT - hamming(&model, &spec.rule));
    }
    record.final_hamming = hamming(&model, &spec.rule);
    Ok(record)
}

/// Runs `0..spec.repeats` in parallel; results are in run-id order.
pub fn run_many(spec: &ExperimentSpec) -> Result<Vec<RunRecord>> {
    spec.validate()?;
    (0..spec.repeats as u64)
        .into_par_iter()
        .map(|id| run_one(spec, id))
        .collect()
}

/// Per-step cell mismatches between `model` and `true_table` trajectories
/// from the shared `start`, each evolved under its own rule with no moves.
/// Entry `t - 1` is the mismatch after `t` steps.
pub fn nstep_errors(
    model: &RuleTable,
    true_table: &RuleTable,
    start: &Grid,
    horizon: usize,
) -> Vec<usize> {
    let (mut a, mut b) = (start.clone(), start.clone());
    (0..horizon)
        .map(|_| {
            a = step_grid(&a, model);
            b = step_grid(&b, true_table);
            a.mismatches(&b)
        })
        .collect()
}

/// Mean over `starts` of [`nstep_errors`].
pub fn nstep_prediction_test(
    model: &RuleTable,
    true_table: &RuleTable,
    starts: &[Grid],
    horizon: usize,
) -> Result<Vec<f64>> {
    if horizon == 0 {
        return Err(Error::InvalidInput("horizon must be at least 1".into()));
    }
    if starts.is_empty() {
        return Err(Error::InvalidInput("no start grids".into()));
    }
    let mut sums = vec![0.0; horizon];
    for start in starts {
        for (s, e) in sums
            .iter_mut()
            .zip(nstep_errors(model, true_table, start, horizon))
        {
            *s += e as f64;
        }
    }
    Ok(sums.into_iter().map(|s| s / starts.len() as f64).collect())
}

/// Mean per-cell one-step disagreement between `model` and `true_table`
/// over `test_grids`, in [0, 1].
pub fn supervised_error(
    model: &RuleTable,
    true_table: &RuleTable,
    test_grids: &[Grid],
) -> Result<f64> {
    if test_grids.is_empty() {
        return Err(Error::InvalidInput("empty test set".into()));
    }
    let mut wrong = 0usize;
    let mut cells = 0usize;
    for grid in test_grids {
        for code in pattern_codes(grid) {
            wrong += (model.get(code) != true_table.get(code)) as usize;
        }
        cells += grid.cells().len();
    }
    Ok(wrong as f64 / cells as f64)
}

/// Smallest prefix of a first-sighting stream after which a learner of
/// `kind`, trained on that prefix, compiles to `true_table` exactly.
pub fn patterns_needed(
    kind: LearnerKind,
    stream: &[TransitionSample],
    true_table: &RuleTable,
    seed: u64,
) -> Result<Option<usize>> {
    if kind == LearnerKind::Exact {
        // Only codes whose true output differs from the default 0 need
        // to be seen; the exact learner is right on every other code.
        let ones = true_table.ones();
        let mut seen = 0;
        if ones == 0 {
            return Ok(Some(0));
        }
        for (i, s) in stream.iter().enumerate() {
            seen += s.outcome as usize;
            if seen == ones {
                return Ok(Some(i + 1));
            }
        }
        return Ok(None);
    }
    let mut learner = kind.build(seed);
    if hamming(&learner.compile_to_table(), true_table) == 0 {
        return Ok(Some(0));
    }
    for (i, &s) in stream.iter().enumerate() {
        learner.observe(s);
        learner.refit()?;
        if hamming(&learner.compile_to_table(), true_table) == 0 {
            return Ok(Some(i + 1));
        }
    }
    Ok(None)
}
