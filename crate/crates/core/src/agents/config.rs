use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Rolling horizon agent settings. The first eight fields are the tunable
/// hyper-parameters; `budget_iterations` is the per-tick planning budget.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RheaConfig {
    pub flip_min_one_value: bool,
    pub prob_mutation: f64,
    pub sequence_length: usize,
    pub n_evals: usize,
    pub shift_buffer: bool,
    pub mutation_transducer: bool,
    pub repeat_prob: f64,
    pub discount_factor: f64,
    /// Mutate-evaluate iterations per tick.
    pub budget_iterations: usize,
}

pub const DEFAULT_BUDGET_ITERATIONS: usize = 50;

impl Default for RheaConfig {
    /// The configuration found by tuning against a perfect model.
    fn default() -> Self {
        RheaConfig {
            flip_min_one_value: true,
            prob_mutation: 0.3,
            sequence_length: 20,
            n_evals: 25,
            shift_buffer: true,
            mutation_transducer: false,
            repeat_prob: 0.2,
            discount_factor: 0.8,
            budget_iterations: DEFAULT_BUDGET_ITERATIONS,
        }
    }
}

pub const KEYS: [&str; 9] = [
    "flipMinOneValue",
    "probMutation",
    "sequenceLength",
    "nEvals",
    "shiftBuffer",
    "mutationTransducer",
    "repeatProb",
    "discountFactor",
    "budgetIterations",
];

fn probability(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} = {p} is not a probability")))
    }
}

impl RheaConfig {
    pub fn validate(&self) -> Result<()> {
        probability("probMutation", self.prob_mutation)?;
        probability("repeatProb", self.repeat_prob)?;
        if self.sequence_length == 0 {
            return Err(Error::Config("sequenceLength must be positive".into()));
        }
        if self.n_evals == 0 {
            return Err(Error::Config("nEvals must be positive".into()));
        }
        if !(self.discount_factor > 0.0 && self.discount_factor <= 1.0) {
            return Err(Error::Config(format!(
                "discountFactor = {} outside (0, 1]",
                self.discount_factor
            )));
        }
        if self.mutation_transducer && self.repeat_prob + self.prob_mutation > 1.0 + 1e-9 {
            return Err(Error::Config(format!(
                "repeatProb + probMutation = {} exceeds 1 with the mutation transducer on",
                self.repeat_prob + self.prob_mutation
            )));
        }
        Ok(())
    }

    /// `key=value` lines in the canonical key order.
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        let values = [
            self.flip_min_one_value.to_string(),
            self.prob_mutation.to_string(),
            self.sequence_length.to_string(),
            self.n_evals.to_string(),
            self.shift_buffer.to_string(),
            self.mutation_transducer.to_string(),
            self.repeat_prob.to_string(),
            self.discount_factor.to_string(),
            self.budget_iterations.to_string(),
        ];
        for (key, value) in KEYS.iter().zip(values) {
            writeln!(out, "{key}={value}").unwrap();
        }
        out
    }

    /// Applies one `key=value` override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::Config(format!("{key}: cannot parse `{value}` as {what}"));
        let boolean = || value.parse::<bool>().map_err(|_| bad("a boolean"));
        let real = || value.parse::<f64>().map_err(|_| bad("a number"));
        let count = || {
            value
                .parse::<usize>()
                .map_err(|_| bad("a non-negative integer"))
        };
        match key {
            "flipMinOneValue" => self.flip_min_one_value = boolean()?,
            "probMutation" => self.prob_mutation = real()?,
            "sequenceLength" => self.sequence_length = count()?,
            "nEvals" => self.n_evals = count()?,
            "shiftBuffer" => self.shift_buffer = boolean()?,
            "mutationTransducer" => self.mutation_transducer = boolean()?,
            "repeatProb" => self.repeat_prob = real()?,
            "discountFactor" => self.discount_factor = real()?,
            "budgetIterations" => self.budget_iterations = count()?,
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Parses `key=value` lines over the defaults. Blank lines and `#`
    /// comments are skipped.
    pub fn parse_kv(text: &str) -> Result<Self> {
        let mut config = RheaConfig::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                msg: format!("expected key=value, got `{line}`"),
            })?;
            config.set(key.trim(), value.trim())?;
        }
        config.validate()?;
        Ok(config)
    }
}
