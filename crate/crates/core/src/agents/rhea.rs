//! (1+1) rolling horizon evolution.
//!
//! Each tick the agent holds one action sequence, repeatedly mutates it,
//! and keeps the child whenever its simulated discounted score is at least as
//! good. The first action of the survivor is played. With the shift buffer on,
//! the survivor is carried to the next tick minus its first action.

use rand::Rng;

use crate::ca::{step_into, Grid, RuleTable};
use crate::error::{Error, Result};
use crate::game::{Action, GameState, Policy};
use crate::seed::SimRng;

use super::RheaConfig;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ActionSequence(pub Vec<Action>);

impl ActionSequence {
    pub fn random<R: Rng + ?Sized>(len: usize, width: usize, height: usize, rng: &mut R) -> Self {
        ActionSequence(
            (0..len)
                .map(|_| Action::random(width, height, rng))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn actions(&self) -> &[Action] {
        &self.0
    }

    pub fn is_legal(&self, grid: &Grid) -> bool {
        self.0.iter().all(|a| a.is_legal(grid))
    }
}

/// Discounted sum of post-update scores along a simulated rollout, negated
/// under `Minimize`. The caller's state is not touched.
pub fn evaluate_sequence(
    state: &GameState,
    seq: &ActionSequence,
    model: &RuleTable,
    config: &RheaConfig,
) -> Result<f64> {
    let mut current = state.grid.clone();
    let mut next = state.grid.clone();
    let mut total = 0.0;
    let mut weight = 1.0;
    for &action in seq.actions() {
        if let Action::Flip { x, y } = action {
            current
                .flip(x, y)
                .map_err(|_| Error::InvalidAction(format!("flip ({x}, {y}) outside the grid")))?;
        }
        step_into(&current, model, &mut next);
        std::mem::swap(&mut current, &mut next);
        total += weight * current.alive_count() as f64;
        weight *= config.discount_factor;
    }
    Ok(state.objective.signed(total))
}

/// Mean of `n_evals` evaluations. A rule-table rollout is deterministic, so
/// all repeats agree and a single rollout gives the mean exactly.
pub fn mean_fitness(
    state: &GameState,
    seq: &ActionSequence,
    model: &RuleTable,
    config: &RheaConfig,
) -> Result<f64> {
    evaluate_sequence(state, seq, model, config)
}

pub fn mutate_sequence<R: Rng + ?Sized>(
    parent: &ActionSequence,
    config: &RheaConfig,
    width: usize,
    height: usize,
    rng: &mut R,
) -> Result<ActionSequence> {
    if config.mutation_transducer && config.repeat_prob + config.prob_mutation > 1.0 + 1e-9 {
        return Err(Error::Config(
            "repeatProb + probMutation exceeds 1 with the mutation transducer on".into(),
        ));
    }
    let mut child: Vec<Action> = Vec::with_capacity(parent.len());
    for (i, &inherited) in parent.actions().iter().enumerate() {
        let action = if config.mutation_transducer {
            let u: f64 = rng.gen();
            if u < config.repeat_prob && i > 0 {
                child[i - 1]
            } else if u < config.repeat_prob + config.prob_mutation {
                Action::random(width, height, rng)
            } else {
                inherited
            }
        } else if rng.gen::<f64>() < config.prob_mutation {
            Action::random(width, height, rng)
        } else {
            inherited
        };
        child.push(action);
    }
    if config.flip_min_one_value && !child.is_empty() && child == parent.0 {
        let i = rng.gen_range(0..child.len());
        child[i] = Action::random(width, height, rng);
    }
    Ok(ActionSequence(child))
}

/// Drop the first action and append a fresh random one.
pub fn shift_sequence<R: Rng + ?Sized>(
    seq: &ActionSequence,
    width: usize,
    height: usize,
    rng: &mut R,
) -> ActionSequence {
    let mut actions: Vec<Action> = seq.actions().iter().skip(1).copied().collect();
    if !seq.is_empty() {
        actions.push(Action::random(width, height, rng));
    }
    ActionSequence(actions)
}

#[derive(Clone, Debug)]
pub struct RheaAgent {
    config: RheaConfig,
    memory: Option<ActionSequence>,
    incumbent_trace: Vec<f64>,
}

impl RheaAgent {
    pub fn new(config: RheaConfig) -> Result<Self> {
        config.validate()?;
        Ok(RheaAgent {
            config,
            memory: None,
            incumbent_trace: Vec::new(),
        })
    }

    pub fn config(&self) -> &RheaConfig {
        &self.config
    }

    /// Incumbent fitness after each iteration of the last tick, starting
    /// with the initial sequence.
    pub fn incumbent_trace(&self) -> &[f64] {
        &self.incumbent_trace
    }

    pub fn memory(&self) -> Option<&ActionSequence> {
        self.memory.as_ref()
    }

    pub fn plan(
        &mut self,
        state: &GameState,
        model: &RuleTable,
        rng: &mut SimRng,
    ) -> Result<Action> {
        let (w, h) = (state.grid.width(), state.grid.height());
        let config = self.config;
        let mut current = match self.memory.take() {
            Some(previous)
                if config.shift_buffer
                    && previous.len() == config.sequence_length
                    && previous.is_legal(&state.grid) =>
            {
                shift_sequence(&previous, w, h, rng)
            }
            _ => ActionSequence::random(config.sequence_length, w, h, rng),
        };
        let mut current_fitness = mean_fitness(state, &current, model, &config)?;
        self.incumbent_trace.clear();
        self.incumbent_trace.push(current_fitness);
        for _ in 0..config.budget_iterations {
            let child = mutate_sequence(&current, &config, w, h, rng)?;
            let child_fitness = mean_fitness(state, &child, model, &config)?;
            if child_fitness >= current_fitness {
                current = child;
                current_fitness = child_fitness;
            }
            self.incumbent_trace.push(current_fitness);
        }
        let action = current.0[0];
        self.memory = Some(current);
        Ok(action)
    }
}

impl Policy for RheaAgent {
    fn name(&self) -> &str {
        "rhea"
    }

    fn act(&mut self, state: &GameState, model: &RuleTable, rng: &mut SimRng) -> Action {
        self.plan(state, model, rng)
            .expect("configuration validated at construction and actions legal")
    }

    fn reset(&mut self) {
        self.memory = None;
        self.incumbent_trace.clear();
    }
}
