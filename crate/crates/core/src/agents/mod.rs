//! Acting policies: the rolling horizon agent and two baselines.

mod config;
mod rhea;

pub use config::{RheaConfig, DEFAULT_BUDGET_ITERATIONS, KEYS as CONFIG_KEYS};
pub use rhea::{
    evaluate_sequence, mean_fitness, mutate_sequence, shift_sequence, ActionSequence, RheaAgent,
};

use crate::ca::RuleTable;
use crate::game::{Action, GameState, Policy};
use crate::seed::SimRng;

pub fn donothing_act(_state: &GameState) -> Action {
    Action::NoOp
}

pub fn random_act(state: &GameState, rng: &mut SimRng) -> Action {
    Action::random(state.grid.width(), state.grid.height(), rng)
}

#[derive(Clone, Copy, Debug, Default)]
pub struct DoNothingAgent;

impl Policy for DoNothingAgent {
    fn name(&self) -> &str {
        "nothing"
    }

    fn act(&mut self, state: &GameState, _model: &RuleTable, _rng: &mut SimRng) -> Action {
        donothing_act(state)
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct RandomAgent;

impl Policy for RandomAgent {
    fn name(&self) -> &str {
        "random"
    }

    fn act(&mut self, state: &GameState, _model: &RuleTable, rng: &mut SimRng) -> Action {
        random_act(state, rng)
    }
}
