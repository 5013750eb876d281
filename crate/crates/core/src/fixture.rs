//! Planted-signal toy problem with known ground truth.
//!
//! Each sample is an 8x8 single-channel image with pixels in `[0, 1]`. A
//! fixed 3x3 block carries the class: bright (`U(0.55, 1)`) for class 1,
//! dark (`U(0, 0.45)`) for class 0. Every other pixel is `U(0, 1)` noise, so
//! the block is the only evidence and doubles as the localisation mask.

use crate::error::Result;
use crate::harness::Dataset;
use crate::model::{train_toy, LayerSpec, Model, OutputHead, TrainConfig, TrainReport};
use crate::rng::Rng;
use crate::tensor::Tensor;

pub const SIDE: usize = 8;
pub const MASK_ROWS: std::ops::Range<usize> = 2..5;
pub const MASK_COLS: std::ops::Range<usize> = 3..6;
pub const N_SAMPLES: usize = 1000;
pub const N_TRAIN: usize = 800;

/// Mask of one sample, row-major.
pub fn mask_pattern() -> Vec<bool> {
    (0..SIDE * SIDE)
        .map(|i| MASK_ROWS.contains(&(i / SIDE)) && MASK_COLS.contains(&(i % SIDE)))
        .collect()
}

#[derive(Debug, Clone)]
pub struct SyntheticSet {
    /// Shape `[n, 1, 8, 8]`.
    pub inputs: Tensor,
    pub labels: Vec<usize>,
    /// Flattened masks, same layout as `inputs`.
    pub masks: Vec<bool>,
}

impl SyntheticSet {
    pub fn generate(n: usize, rng: &mut Rng) -> Self {
        let pattern = mask_pattern();
        let mut data = Vec::with_capacity(n * pattern.len());
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let y = rng.below(2);
            for &inside in &pattern {
                data.push(match (inside, y) {
                    (true, 1) => rng.uniform_range(0.55, 1.0),
                    (true, _) => rng.uniform_range(0.0, 0.45),
                    (false, _) => rng.uniform(),
                });
            }
            labels.push(y);
        }
        Self {
            inputs: Tensor::new(vec![n, 1, SIDE, SIDE], data).expect("consistent shape"),
            labels,
            masks: pattern.iter().copied().cycle().take(n * pattern.len()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// The first `n` samples.
    pub fn head(&self, n: usize) -> Self {
        let n = n.min(self.len());
        let idx: Vec<usize> = (0..n).collect();
        let per = SIDE * SIDE;
        Self {
            inputs: self.inputs.select(&idx).expect("indices in range"),
            labels: self.labels[..n].to_vec(),
            masks: self.masks[..n * per].to_vec(),
        }
    }

    pub fn dataset(&self) -> Dataset {
        Dataset::new(self.inputs.clone(), self.labels.clone())
            .and_then(|d| d.with_masks(self.masks.clone()))
            .expect("consistent fixture")
    }
}

/// Flatten, Dense 32, ReLU, Dense 16, ReLU, Dense 2 with a softmax head.
pub fn architecture() -> Vec<LayerSpec> {
    vec![
        LayerSpec::Flatten,
        LayerSpec::Dense { out: 32 },
        LayerSpec::Relu,
        LayerSpec::Dense { out: 16 },
        LayerSpec::Relu,
        LayerSpec::Dense { out: 2 },
    ]
}

pub fn train_config() -> TrainConfig {
    TrainConfig {
        epochs: 40,
        lr: 0.05,
        batch_size: 16,
        weight_decay: 1e-3,
    }
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub model: Model,
    pub train: SyntheticSet,
    pub test: SyntheticSet,
    pub report: TrainReport,
    pub test_accuracy: f64,
}

impl Fixture {
    /// Generate 1000 samples, train on the first 800, hold out 200.
    pub fn build(seed: u64) -> Result<Self> {
        let mut rng = Rng::derive(seed, "fixture/data");
        let all = SyntheticSet::generate(N_SAMPLES, &mut rng);
        let train_idx: Vec<usize> = (0..N_TRAIN).collect();
        let test_idx: Vec<usize> = (N_TRAIN..N_SAMPLES).collect();
        let per = SIDE * SIDE;
        let split = |idx: &[usize]| -> Result<SyntheticSet> {
            Ok(SyntheticSet {
                inputs: all.inputs.select(idx)?,
                labels: idx.iter().map(|&i| all.labels[i]).collect(),
                masks: idx.iter().flat_map(|&i| all.masks[i * per..(i + 1) * per].to_vec()).collect(),
            })
        };
        let (train, test) = (split(&train_idx)?, split(&test_idx)?);

        let mut rng = Rng::derive(seed, "fixture/model");
        let init = Model::init(vec![1, SIDE, SIDE], &architecture(), OutputHead::Softmax, &mut rng)?;
        let (model, report) = train_toy(&init, &train.inputs, &train.labels, &train_config(), &mut rng)?;
        let test_accuracy = crate::model::accuracy(&model, &test.inputs, &test.labels);
        Ok(Self {
            model,
            train,
            test,
            report,
            test_accuracy,
        })
    }
}
