//! 9-H-1 logistic network trained by per-sample gradient descent on squared
//! error. Pattern bits enter the network as -1/+1; with 0/1 inputs the same
//! architecture regularly stalls in a plateau on the Game of Life table.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use crate::ca::PatternCode;
use crate::error::{Error, Result};
use crate::seed::SimRng;

use super::{Dataset, Learner, TransitionSample};

const INPUTS: usize = 9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MlpConfig {
    pub hidden: usize,
    pub learning_rate: f64,
    /// Epochs per refit; training stops early once every sample is classified correctly.
    pub max_epochs: usize,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            hidden: 16,
            learning_rate: 0.1,
            max_epochs: 5000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct MlpLearner {
    config: MlpConfig,
    /// `hidden x (INPUTS + 1)`, bias last.
    w_hidden: Vec<f64>,
    /// `hidden + 1`, bias last.
    w_out: Vec<f64>,
    data: Dataset,
    rng: SimRng,
    epochs_run: usize,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn inputs(pattern: PatternCode) -> [f64; INPUTS] {
    let mut x = [0.0; INPUTS];
    for (b, xi) in x.iter_mut().enumerate() {
        *xi = 2.0 * pattern.bit(b as u16) as f64 - 1.0;
    }
    x
}

impl MlpLearner {
    pub fn new(config: MlpConfig, seed: u64) -> Self {
        let mut rng = SimRng::seed_from_u64(seed);
        let w_hidden = (0..config.hidden * (INPUTS + 1))
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        let w_out = (0..config.hidden + 1)
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        MlpLearner {
            config,
            w_hidden,
            w_out,
            data: Dataset::new(),
            rng,
            epochs_run: 0,
        }
    }

    /// Total training epochs run across all refits.
    pub fn epochs_run(&self) -> usize {
        self.epochs_run
    }

    fn hidden_activations(&self, x: &[f64; INPUTS], h: &mut [f64]) {
        for (j, hj) in h.iter_mut().enumerate() {
            let row = &self.w_hidden[j * (INPUTS + 1)..(j + 1) * (INPUTS + 1)];
            let z: f64 = row[..INPUTS]
                .iter()
                .zip(x)
                .map(|(w, xi)| w * xi)
                .sum::<f64>()
                + row[INPUTS];
            *hj = sigmoid(z);
        }
    }

    fn output(&self, h: &[f64]) -> f64 {
        let hidden = self.config.hidden;
        let z: f64 = self.w_out[..hidden]
            .iter()
            .zip(h)
            .map(|(w, hj)| w * hj)
            .sum::<f64>()
            + self.w_out[hidden];
        sigmoid(z)
    }

    /// Network output in (0, 1).
    pub fn raw(&self, pattern: PatternCode) -> f64 {
        let mut h = vec![0.0; self.config.hidden];
        self.hidden_activations(&inputs(pattern), &mut h);
        self.output(&h)
    }

    fn train_sample(&mut self, sample: TransitionSample, h: &mut [f64]) {
        let x = inputs(sample.pattern);
        self.hidden_activations(&x, h);
        let y = self.output(h);
        let hidden = self.config.hidden;
        let lr = self.config.learning_rate;
        // d/dz of (y - t)^2 / 2 through the output sigmoid
        let delta_out = (y - sample.outcome as f64) * y * (1.0 - y);
        for (j, (&hj, row)) in h
            .iter()
            .zip(self.w_hidden.chunks_mut(INPUTS + 1))
            .enumerate()
            .take(hidden)
        {
            let delta_h = delta_out * self.w_out[j] * hj * (1.0 - hj);
            for (w, xi) in row[..INPUTS].iter_mut().zip(&x) {
                *w -= lr * delta_h * xi;
            }
            row[INPUTS] -= lr * delta_h;
            self.w_out[j] -= lr * delta_out * hj;
        }
        self.w_out[hidden] -= lr * delta_out;
    }

    fn training_errors(&self, samples: &[TransitionSample]) -> usize {
        samples
            .iter()
            .filter(|s| self.predict(s.pattern) != s.outcome)
            .count()
    }
}

impl Learner for MlpLearner {
    fn observe(&mut self, sample: TransitionSample) {
        self.data.add(sample);
    }

    fn observe_all(&mut self, dataset: &Dataset) {
        self.data.merge(dataset);
    }

    /// Continues from the current weights. Trains on one copy of each
    /// distinct pattern.
    fn refit(&mut self) -> Result<()> {
        if self.data.is_empty() {
            return Err(Error::InvalidState(
                "cannot train on an empty dataset".into(),
            ));
        }
        let mut samples = self.data.deduplicated();
        let mut h = vec![0.0; self.config.hidden];
        for _ in 0..self.config.max_epochs {
            if self.training_errors(&samples) == 0 {
                break;
            }
            samples.shuffle(&mut self.rng);
            for &s in &samples {
                self.train_sample(s, &mut h);
            }
            self.epochs_run += 1;
        }
        Ok(())
    }

    fn predict(&self, pattern: PatternCode) -> u8 {
        (self.raw(pattern) >= 0.5) as u8
    }

    fn observed_patterns(&self) -> usize {
        self.data.unique_patterns()
    }
}
