use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Interaction;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitKind {
    Temporal,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitRatios {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self {
            train: 0.7,
            validation: 0.1,
            test: 0.2,
        }
    }
}

impl SplitRatios {
    fn validate(&self) -> Result<()> {
        let parts = [self.train, self.validation, self.test];
        if parts.iter().any(|p| !(0.0..=1.0).contains(p)) || (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("split ratios {parts:?} must be in [0, 1] and sum to 1")));
        }
        Ok(())
    }

    /// `(floor(train N), floor(validation N), remainder)`.
    pub fn sizes(&self, total: usize) -> (usize, usize, usize) {
        let cut = |r: f64| ((r * total as f64) + 1e-9).floor() as usize;
        let train = cut(self.train).min(total);
        let validation = cut(self.validation).min(total - train);
        (train, validation, total - train - validation)
    }
}

/// Disjoint train/validation/test partition.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitDataset<R> {
    pub train: Vec<R>,
    pub validation: Vec<R>,
    pub test: Vec<R>,
    pub kind: SplitKind,
}

fn cut<R>(mut ordered: Vec<R>, ratios: &SplitRatios, kind: SplitKind) -> SplitDataset<R> {
    let (train, validation, _) = ratios.sizes(ordered.len());
    let test = ordered.split_off(train + validation);
    let validation_part = ordered.split_off(train);
    SplitDataset {
        train: ordered,
        validation: validation_part,
        test,
        kind,
    }
}

/// Orders by `(timestamp, user_id, item_id)` and cuts the sequence, so later
/// interactions land in validation and test.
pub fn temporal_split(
    interactions: &[Interaction],
    ratios: SplitRatios,
) -> Result<SplitDataset<Interaction>> {
    if interactions.is_empty() {
        return Err(Error::Empty("interactions to split"));
    }
    ratios.validate()?;
    let mut ordered = interactions.to_vec();
    ordered.sort_by_key(|r| (r.timestamp, r.user_id, r.item_id));
    Ok(cut(ordered, &ratios, SplitKind::Temporal))
}

/// Seeded permutation followed by the ratio cut.
pub fn random_split<R: Clone>(samples: &[R], ratios: SplitRatios, seed: u64) -> Result<SplitDataset<R>> {
    if samples.is_empty() {
        return Err(Error::Empty("samples to split"));
    }
    ratios.validate()?;
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let ordered = order.into_iter().map(|i| samples[i].clone()).collect();
    Ok(cut(ordered, &ratios, SplitKind::Random))
}
