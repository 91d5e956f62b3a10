//! Supervised training on the replay memory and statistical evaluation
//! across shot configurations, runs, and test events.
//!
//! Splits are by event (every window of an event lands on one side), training
//! is full-batch gradient descent with parameter-shift gradients (SPSA is
//! available for shots-backend training), and evaluation fans out over
//! (shots, run) pairs with seeds derived as base_seed + run index.

use crate::error::{Error, Result};
use crate::expert::{ReplayMemory, ReplaySample};
use crate::vqc::{spsa_step, Backend, FeatureWindow, SpsaConfig, VqcModel};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Optimizer selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    ParameterShiftGd,
    Spsa,
}

/// Backend used during training.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainBackend {
    Exact,
    Shots { shots: u64 },
}

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub optimizer: OptimizerKind,
    pub seed: u64,
    pub backend: TrainBackend,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 300,
            learning_rate: 0.1,
            optimizer: OptimizerKind::ParameterShiftGd,
            seed: 0,
            backend: TrainBackend::Exact,
        }
    }
}

/// Split the replay memory by event: all windows of an event land on one
/// side. Deterministic for a fixed seed.
pub fn split_dataset(
    memory: &ReplayMemory,
    n_test_events: usize,
    seed: u64,
) -> Result<(Vec<ReplaySample>, Vec<ReplaySample>)> {
    let mut ids: Vec<u32> = memory.samples.iter().map(|s| s.event_id).collect();
    ids.sort_unstable();
    ids.dedup();
    if ids.len() <= n_test_events {
        return Err(Error::TooFewEvents {
            events: ids.len(),
            needed: n_test_events,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ids.shuffle(&mut rng);
    let test_ids = &ids[..n_test_events];
    let (test, train): (Vec<ReplaySample>, Vec<ReplaySample>) = memory
        .samples
        .iter()
        .cloned()
        .partition(|s| test_ids.contains(&s.event_id));
    Ok((train, test))
}

fn labeled(samples: &[ReplaySample]) -> Vec<(FeatureWindow, usize)> {
    samples
        .iter()
        .map(|s| (s.window, s.target_class))
        .collect()
}

/// Train a model on the set; returns the trained model and the loss history
/// (entry 0 is the loss before any update, then one entry per epoch).
pub fn train(
    model: &VqcModel,
    train_set: &[ReplaySample],
    config: &TrainConfig,
) -> Result<(VqcModel, Vec<f64>)> {
    if train_set.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let data = labeled(train_set);
    let mut model = model.clone();
    let mut history = Vec::with_capacity(config.epochs + 1);
    history.push(model.loss(&data)?);
    for epoch in 0..config.epochs {
        match config.optimizer {
            OptimizerKind::ParameterShiftGd => {
                let grad = model.parameter_shift_gradient(&data)?;
                for (p, g) in model.params.0.iter_mut().zip(&grad) {
                    *p -= config.learning_rate * g;
                }
            }
            OptimizerKind::Spsa => {
                let backend = match config.backend {
                    TrainBackend::Exact => Backend::Exact,
                    TrainBackend::Shots { shots } => Backend::Shots {
                        shots,
                        seed: config.seed.wrapping_add(epoch as u64),
                    },
                };
                let spsa = SpsaConfig {
                    a: config.learning_rate,
                    seed: config.seed,
                    ..SpsaConfig::default()
                };
                spsa_step(&mut model, &data, epoch as u64, &spsa, backend)?;
            }
        }
        let loss = model.loss(&data)?;
        if !loss.is_finite() {
            return Err(Error::DivergentLoss { epoch });
        }
        history.push(loss);
    }
    Ok((model, history))
}

/// Per-sample sampling seed: mixes the run seed with the sample position so
/// every window draws an independent, reproducible shot stream.
fn sample_seed(run_seed: u64, index: usize) -> u64 {
    (run_seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)).wrapping_add(0x243F_6A88)
}

/// Per-sample correctness under a shots backend; shared by accuracy and the
/// event heatmap so both see identical decisions.
fn classify_correct(
    model: &VqcModel,
    samples: &[ReplaySample],
    shots: u64,
    run_seed: u64,
) -> Result<Vec<bool>> {
    samples
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let backend = Backend::Shots {
                shots,
                seed: sample_seed(run_seed, i),
            };
            Ok(model.predict_class(&s.window, backend)? == s.target_class)
        })
        .collect()
}

/// Fraction of test samples classified correctly under the shots backend.
pub fn evaluate_accuracy(
    model: &VqcModel,
    test_set: &[ReplaySample],
    shots: u64,
    run_seed: u64,
) -> Result<f64> {
    if test_set.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let correct = classify_correct(model, test_set, shots, run_seed)?;
    Ok(correct.iter().filter(|&&c| c).count() as f64 / test_set.len() as f64)
}

/// Exact-backend accuracy (the infinite-shot limit).
pub fn evaluate_accuracy_exact(model: &VqcModel, test_set: &[ReplaySample]) -> Result<f64> {
    if test_set.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let correct = test_set
        .iter()
        .filter(|s| model.predict_class(&s.window, Backend::Exact).unwrap_or(usize::MAX) == s.target_class)
        .count();
    Ok(correct as f64 / test_set.len() as f64)
}

/// Accuracy statistics for one shots configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub shots: u64,
    pub runs: Vec<f64>,
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

impl AccuracyReport {
    fn from_runs(shots: u64, runs: Vec<f64>) -> Self {
        let min = runs.iter().copied().fold(f64::INFINITY, f64::min);
        let max = runs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = runs.iter().sum::<f64>() / runs.len() as f64;
        AccuracyReport {
            shots,
            runs,
            min,
            mean,
            max,
        }
    }

    pub fn spread(&self) -> f64 {
        self.max - self.min
    }
}

/// Repeated seeded evaluations per shots value; rows ordered by ascending
/// shots, run seeds are base_seed + run index.
pub fn shots_sweep(
    model: &VqcModel,
    test_set: &[ReplaySample],
    shots_list: &[u64],
    runs_per_config: usize,
    base_seed: u64,
) -> Result<Vec<AccuracyReport>> {
    let mut shots_sorted = shots_list.to_vec();
    shots_sorted.sort_unstable();
    shots_sorted
        .par_iter()
        .map(|&shots| {
            let runs: Vec<f64> = (0..runs_per_config)
                .map(|r| evaluate_accuracy(model, test_set, shots, base_seed + r as u64))
                .collect::<Result<_>>()?;
            Ok(AccuracyReport::from_runs(shots, runs))
        })
        .collect()
}

/// Per-event correctness grid over (shots configuration × run).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventGrid {
    pub event_id: u32,
    pub shots_configs: Vec<u64>,
    /// grid[s][r] is true when every window of the event was classified
    /// correctly under shots_configs[s] with run seed base_seed + r.
    pub grid: Vec<Vec<bool>>,
}

/// One grid per test event, cells aggregated over that event's windows.
pub fn event_heatmap(
    model: &VqcModel,
    test_set: &[ReplaySample],
    shots_configs: &[u64],
    runs: usize,
    base_seed: u64,
) -> Result<Vec<EventGrid>> {
    if test_set.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut shots_sorted = shots_configs.to_vec();
    shots_sorted.sort_unstable();
    let mut event_ids: Vec<u32> = test_set.iter().map(|s| s.event_id).collect();
    event_ids.sort_unstable();
    event_ids.dedup();

    // correctness per (shots, run) once over the whole set, then fold by event
    let per_cell: Vec<(u64, usize, Vec<bool>)> = shots_sorted
        .par_iter()
        .flat_map(|&shots| {
            (0..runs)
                .into_par_iter()
                .map(move |r| (shots, r))
                .collect::<Vec<_>>()
        })
        .map(|(shots, r)| {
            let correct = classify_correct(model, test_set, shots, base_seed + r as u64)?;
            Ok((shots, r, correct))
        })
        .collect::<Result<_>>()?;

    Ok(event_ids
        .iter()
        .map(|&event_id| {
            let mut grid = vec![vec![true; runs]; shots_sorted.len()];
            for (shots, r, correct) in &per_cell {
                let s_idx = shots_sorted.iter().position(|x| x == shots).unwrap();
                let all_ok = test_set
                    .iter()
                    .zip(correct)
                    .filter(|(sample, _)| sample.event_id == event_id)
                    .all(|(_, &ok)| ok);
                grid[s_idx][*r] = all_ok;
            }
            EventGrid {
                event_id,
                shots_configs: shots_sorted.clone(),
                grid,
            }
        })
        .collect())
}
