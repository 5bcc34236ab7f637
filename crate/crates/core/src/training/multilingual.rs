use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::model::Model;
use crate::rng::{seeded, Stream};

use super::adam::AdamState;
use super::schedule::{mean_val_loss, train_step, EpochRecord, LanguageData, TrainOutcome};
use super::{EarlyStopping, TrainConfig, TrainError};

/// Two to three distinct languages trained together.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LanguageGroup {
    members: Vec<String>,
}

impl LanguageGroup {
    pub fn new(mut members: Vec<String>) -> Result<Self, TrainError> {
        members.sort();
        members.dedup();
        if !(2..=3).contains(&members.len()) {
            return Err(TrainError::BadGroupSize(members.len()));
        }
        Ok(LanguageGroup { members })
    }

    pub fn members(&self) -> &[String] {
        &self.members
    }

    pub fn contains(&self, language: &str) -> bool {
        self.members.iter().any(|m| m == language)
    }

    /// Partner languages as seen from `language`.
    pub fn partners(&self, language: &str) -> Vec<&str> {
        self.members
            .iter()
            .filter(|m| *m != language)
            .map(String::as_str)
            .collect()
    }
}

impl std::fmt::Display for LanguageGroup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.members.join("+"))
    }
}

fn sample_group(languages: &[String], rng: &mut ChaCha8Rng) -> LanguageGroup {
    let size = rng.random_range(2..=3usize).min(languages.len());
    let mut order: Vec<usize> = (0..languages.len()).collect();
    order.shuffle(rng);
    let members = order[..size]
        .iter()
        .map(|&i| languages[i].clone())
        .collect();
    LanguageGroup::new(members).expect("sampled size is 2 or 3")
}

/// Random groups of two to three languages, deterministic under the seed.
/// Every language is guaranteed to appear in at least one group: groups
/// are resampled until coverage holds.
pub fn make_language_groups(
    languages: &[String],
    n_groups: usize,
    seed: u64,
) -> Result<Vec<LanguageGroup>, TrainError> {
    if languages.len() < 2 {
        return Err(TrainError::TooFewLanguages(languages.len()));
    }
    let mut rng = seeded(seed, Stream::Groups);
    let mut groups: Vec<LanguageGroup> = (0..n_groups)
        .map(|_| sample_group(languages, &mut rng))
        .collect();
    loop {
        let covered = languages
            .iter()
            .all(|l| groups.iter().any(|g| g.contains(l)));
        if covered || groups.is_empty() {
            break;
        }
        let idx = rng.random_range(0..groups.len());
        groups[idx] = sample_group(languages, &mut rng);
    }
    Ok(groups)
}

/// Uniform per-minibatch language choice.
pub(super) struct LanguageAlternator {
    members: Vec<String>,
    rng: ChaCha8Rng,
}

impl LanguageAlternator {
    pub fn new(members: &[String], seed: u64) -> Self {
        LanguageAlternator {
            members: members.to_vec(),
            rng: seeded(seed, Stream::LanguageAlternation),
        }
    }

    pub fn next(&mut self) -> &str {
        let i = self.rng.random_range(0..self.members.len());
        &self.members[i]
    }
}

/// Per-language cyclic iterator over seeded shuffles of the train set.
struct InstanceQueue {
    order: Vec<usize>,
    cursor: usize,
}

impl InstanceQueue {
    fn new(n: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        InstanceQueue { order, cursor: 0 }
    }

    fn next(&mut self, rng: &mut ChaCha8Rng) -> usize {
        if self.cursor == self.order.len() {
            self.order.shuffle(rng);
            self.cursor = 0;
        }
        let i = self.order[self.cursor];
        self.cursor += 1;
        i
    }
}

/// Multilingual training: one model holding every member language's block
/// plus the shared MSD decoder. Each minibatch draws its language
/// uniformly at random; an epoch is (total train instances) minibatches.
/// Early stopping watches the unweighted mean of per-language validation
/// losses within the epoch budget.
pub fn train_multilingual(
    group: &LanguageGroup,
    data: &BTreeMap<String, LanguageData>,
    mut model: Model,
    config: &TrainConfig,
) -> Result<TrainOutcome, TrainError> {
    for lang in group.members() {
        match data.get(lang) {
            Some(d) if !d.train.is_empty() => {}
            _ => return Err(TrainError::LanguageWithoutData(lang.clone())),
        }
    }
    let per_epoch: usize = group
        .members()
        .iter()
        .map(|l| data[l].train.len())
        .sum::<usize>()
        / config.batch_size.max(1);

    let mut alternator = LanguageAlternator::new(group.members(), config.seed);
    let mut shuffle_rng = seeded(config.seed, Stream::Shuffle);
    let mut noise_rng = seeded(config.seed, Stream::Noise);
    let mut queues: BTreeMap<String, InstanceQueue> = group
        .members()
        .iter()
        .map(|l| {
            (
                l.clone(),
                InstanceQueue::new(data[l].train.len(), &mut shuffle_rng),
            )
        })
        .collect();

    let mut adam = AdamState::new();
    let mut stopper = EarlyStopping::new(config.early_stop_tolerance);
    let mut best_params = model.params.clone();
    let mut log = Vec::new();

    for epoch in 1..=config.epochs {
        let mut train_total = 0.0;
        for _ in 0..per_epoch {
            let lang = alternator.next().to_string();
            let idx = queues
                .get_mut(&lang)
                .expect("queue per member")
                .next(&mut shuffle_rng);
            let instance = &data[&lang].train[idx];
            train_total +=
                train_step(&mut model, &mut adam, instance, config, config.lr, &mut noise_rng)?;
        }

        let mut per_language_val = BTreeMap::new();
        for lang in group.members() {
            per_language_val.insert(lang.clone(), mean_val_loss(&model, &data[lang].validation)?);
        }
        let val_loss =
            per_language_val.values().sum::<f64>() / per_language_val.len() as f64;
        let improved = stopper.record(epoch, val_loss);
        if improved {
            best_params = model.params.clone();
        }
        log.push(EpochRecord {
            epoch,
            train_loss: train_total / per_epoch.max(1) as f64,
            val_loss,
            per_language_val,
            lr: config.lr,
            instances_seen: per_epoch,
            improved,
        });
        if stopper.should_stop() {
            break;
        }
    }

    model.params = best_params;
    Ok(TrainOutcome {
        model,
        log,
        best_epoch: stopper.best_epoch(),
    })
}

/// Monolingual finetuning: fork one language out of a multilingual model
/// (un-aliasing the shared block), then train a fixed number of epochs at
/// the reduced learning rate with a fresh optimizer. The best-validation
/// epoch's weights are kept; there is no early stopping.
pub fn finetune(
    model: &Model,
    language: &str,
    data: &LanguageData,
    config: &TrainConfig,
) -> Result<TrainOutcome, TrainError> {
    if !model.config.languages.iter().any(|l| l == language) {
        return Err(TrainError::LanguageNotInGroup(language.to_string()));
    }
    let mut forked = model.fork_language(language)?;
    let mut shuffle_rng = seeded(config.seed, Stream::Shuffle);
    let mut noise_rng = seeded(config.seed, Stream::Noise);
    let mut adam = AdamState::new();
    let mut best: Option<(f64, usize)> = None;
    let mut best_params = forked.params.clone();
    let mut log = Vec::new();

    let mut order: Vec<usize> = (0..data.train.len()).collect();
    for epoch in 1..=config.finetune_epochs {
        order.shuffle(&mut shuffle_rng);
        let mut train_total = 0.0;
        for &i in &order {
            train_total += train_step(
                &mut forked,
                &mut adam,
                &data.train[i],
                config,
                config.finetune_lr,
                &mut noise_rng,
            )?;
        }
        let val_loss = mean_val_loss(&forked, &data.validation)?;
        let improved = best.map_or(true, |(b, _)| val_loss < b);
        if improved {
            best = Some((val_loss, epoch));
            best_params = forked.params.clone();
        }
        log.push(EpochRecord {
            epoch,
            train_loss: train_total / data.train.len().max(1) as f64,
            val_loss,
            per_language_val: [(language.to_string(), val_loss)].into_iter().collect(),
            lr: config.finetune_lr,
            instances_seen: data.train.len(),
            improved,
        });
    }

    forked.params = best_params;
    Ok(TrainOutcome {
        model: forked,
        log,
        best_epoch: best.map(|(_, e)| e).unwrap_or(0),
    })
}
