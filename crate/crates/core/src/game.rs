//! The cellular automaton as a single-player game.
//!
//! Each tick the player either does nothing or flips one cell, then the
//! automaton updates. The score is the number of live cells. The environment
//! always advances with the true rule; the player only ever sees the model it
//! was handed.

use std::io::{Read, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ca::{step_grid, Boundary, Grid, LocalRule, RuleTable};
use crate::error::{Error, Result};
use crate::seed::SimRng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Action {
    NoOp,
    Flip { x: usize, y: usize },
}

impl Action {
    /// Size of the action space on a `width x height` grid.
    pub fn space_size(width: usize, height: usize) -> usize {
        width * height + 1
    }

    /// Index 0 is `NoOp`; index `1 + y * width + x` is `Flip { x, y }`.
    pub fn from_index(index: usize, width: usize, height: usize) -> Option<Action> {
        match index {
            0 => Some(Action::NoOp),
            i if i <= width * height => {
                let cell = i - 1;
                Some(Action::Flip {
                    x: cell % width,
                    y: cell / width,
                })
            }
            _ => None,
        }
    }

    pub fn index(&self, width: usize) -> usize {
        match *self {
            Action::NoOp => 0,
            Action::Flip { x, y } => 1 + y * width + x,
        }
    }

    pub fn is_legal(&self, grid: &Grid) -> bool {
        match *self {
            Action::NoOp => true,
            Action::Flip { x, y } => grid.contains(x, y),
        }
    }

    pub fn random<R: Rng + ?Sized>(width: usize, height: usize, rng: &mut R) -> Action {
        let i = rng.gen_range(0..Action::space_size(width, height));
        Action::from_index(i, width, height).expect("index drawn inside the action space")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Objective {
    #[default]
    Maximize,
    Minimize,
}

impl Objective {
    /// Applies the objective's sign to a score so that higher is always better.
    pub fn signed(self, score: f64) -> f64 {
        match self {
            Objective::Maximize => score,
            Objective::Minimize => -score,
        }
    }
}

impl std::str::FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max" | "maximize" => Ok(Objective::Maximize),
            "min" | "minimize" => Ok(Objective::Minimize),
            other => Err(Error::InvalidInput(format!("unknown objective `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GameState {
    pub grid: Grid,
    pub tick: u32,
    pub objective: Objective,
}

impl GameState {
    pub fn new(grid: Grid, objective: Objective) -> Self {
        GameState {
            grid,
            tick: 0,
            objective,
        }
    }
}

/// Applies the player's move without advancing time.
pub fn apply_action(state: &GameState, action: Action) -> Result<GameState> {
    let mut next = state.clone();
    match action {
        Action::NoOp => {}
        Action::Flip { x, y } => next
            .grid
            .flip(x, y)
            .map_err(|_| Error::InvalidAction(format!("flip ({x}, {y}) outside the grid")))?,
    }
    Ok(next)
}

/// Action first, then one synchronous update through `rule`.
pub fn game_tick<R: LocalRule + ?Sized>(
    state: &GameState,
    action: Action,
    rule: &R,
) -> Result<GameState> {
    let acted = apply_action(state, action)?;
    Ok(GameState {
        grid: step_grid(&acted.grid, rule),
        tick: state.tick + 1,
        objective: state.objective,
    })
}

pub fn score(state: &GameState) -> usize {
    state.grid.alive_count()
}

/// Score as seen by an agent: negated under `Minimize`.
pub fn reward(state: &GameState) -> f64 {
    state.objective.signed(score(state) as f64)
}

pub fn random_start<R: Rng + ?Sized>(
    width: usize,
    height: usize,
    boundary: Boundary,
    density: f64,
    rng: &mut R,
) -> Result<Grid> {
    if !(0.0..=1.0).contains(&density) {
        return Err(Error::InvalidInput(format!(
            "density {density} outside [0, 1]"
        )));
    }
    let cells = (0..width * height)
        .map(|_| rng.gen_bool(density) as u8)
        .collect();
    Grid::from_cells(width, height, boundary, cells)
}

/// An acting policy. `model` is the only forward model the policy may use.
pub trait Policy {
    fn name(&self) -> &str;

    fn act(&mut self, state: &GameState, model: &RuleTable, rng: &mut SimRng) -> Action;

    /// Forget any memory carried between ticks.
    fn reset(&mut self) {}
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EpisodeTrace {
    /// Score after each tick's update.
    pub scores: Vec<usize>,
    pub actions: Vec<Action>,
    /// Grid after each tick, when recording was requested.
    pub grids: Option<Vec<Grid>>,
}

impl EpisodeTrace {
    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn final_score(&self) -> Option<usize> {
        self.scores.last().copied()
    }
}

pub fn run_episode<R: LocalRule + ?Sized>(
    start: &GameState,
    agent: &mut dyn Policy,
    agent_model: &RuleTable,
    true_rule: &R,
    steps: usize,
    rng: &mut SimRng,
) -> Result<EpisodeTrace> {
    play(start, agent, agent_model, true_rule, steps, rng, false)
}

pub fn run_episode_recording<R: LocalRule + ?Sized>(
    start: &GameState,
    agent: &mut dyn Policy,
    agent_model: &RuleTable,
    true_rule: &R,
    steps: usize,
    rng: &mut SimRng,
) -> Result<EpisodeTrace> {
    play(start, agent, agent_model, true_rule, steps, rng, true)
}

fn play<R: LocalRule + ?Sized>(
    start: &GameState,
    agent: &mut dyn Policy,
    agent_model: &RuleTable,
    true_rule: &R,
    steps: usize,
    rng: &mut SimRng,
    record: bool,
) -> Result<EpisodeTrace> {
    if steps == 0 {
        return Err(Error::InvalidInput(
            "an episode needs at least one step".into(),
        ));
    }
    let mut trace = EpisodeTrace {
        scores: Vec::with_capacity(steps),
        actions: Vec::with_capacity(steps),
        grids: record.then(|| Vec::with_capacity(steps)),
    };
    let mut state = start.clone();
    for _ in 0..steps {
        let action = agent.act(&state, agent_model, rng);
        state = game_tick(&state, action, true_rule)?;
        trace.scores.push(score(&state));
        trace.actions.push(action);
        if let Some(grids) = trace.grids.as_mut() {
            grids.push(state.grid.clone());
        }
    }
    Ok(trace)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub run_id: u64,
    pub tick: u32,
    pub score: usize,
    pub action_kind: String,
    pub action_x: Option<usize>,
    pub action_y: Option<usize>,
}

pub fn trace_rows(run_id: u64, trace: &EpisodeTrace) -> Vec<TraceRow> {
    trace
        .scores
        .iter()
        .zip(&trace.actions)
        .enumerate()
        .map(|(t, (&score, action))| {
            let (kind, x, y) = match *action {
                Action::NoOp => ("noop", None, None),
                Action::Flip { x, y } => ("flip", Some(x), Some(y)),
            };
            TraceRow {
                run_id,
                tick: t as u32 + 1,
                score,
                action_kind: kind.into(),
                action_x: x,
                action_y: y,
            }
        })
        .collect()
}

/// Writes `run_id,tick,score,action_kind,action_x,action_y` rows with a header.
pub fn write_trace_csv<W: Write>(out: W, rows: &[TraceRow]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_trace_csv<R: Read>(input: R) -> Result<Vec<TraceRow>> {
    let mut reader = csv::Reader::from_reader(input);
    reader
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}
