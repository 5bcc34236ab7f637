use rand::seq::SliceRandom;

use crate::rng::{seeded, Stream};

use super::{DataError, SentenceInstance};

/// Shuffle-then-split into train/validation. Train gets
/// floor(ratio * n) instances; the split is deterministic under the seed.
pub fn split_train_validation(
    instances: &[SentenceInstance],
    ratio: f64,
    seed: u64,
) -> Result<(Vec<SentenceInstance>, Vec<SentenceInstance>), DataError> {
    if instances.len() < 10 {
        return Err(DataError::TooFewInstances {
            need: 10,
            got: instances.len(),
        });
    }
    let mut order: Vec<usize> = (0..instances.len()).collect();
    order.shuffle(&mut seeded(seed, Stream::Split));
    let train_n = (instances.len() as f64 * ratio).floor() as usize;
    let train = order[..train_n]
        .iter()
        .map(|&i| instances[i].clone())
        .collect();
    let validation = order[train_n..]
        .iter()
        .map(|&i| instances[i].clone())
        .collect();
    Ok((train, validation))
}
