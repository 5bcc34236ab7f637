//! Optimization and training schedules: Adam, early stopping, the
//! monolingual and baseline-replication schedules, random language
//! grouping, multilingual training with per-minibatch language
//! alternation, and monolingual finetuning.

mod adam;
mod early_stop;
mod multilingual;
mod schedule;

pub use adam::{clip_global_norm, AdamState, GRAD_CLIP_NORM};
pub use early_stop::EarlyStopping;
pub use multilingual::{finetune, make_language_groups, train_multilingual, LanguageGroup};
pub use schedule::{
    train_baseline_schedule, train_monolingual, EpochRecord, LanguageData, TrainOutcome,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
    #[error(transparent)]
    Numerics(#[from] crate::numerics::NumericsError),
    #[error("non-finite gradient for parameter {0}")]
    NonFiniteGradient(String),
    #[error("need at least 2 languages, got {0}")]
    TooFewLanguages(usize),
    #[error("a language group has 2 or 3 members, got {0}")]
    BadGroupSize(usize),
    #[error("language {0:?} has no training data")]
    LanguageWithoutData(String),
    #[error("language {0:?} is not part of this model")]
    LanguageNotInGroup(String),
    #[error("finetune lr must be a tenth of the base lr ({lr}), got {finetune_lr}")]
    BadFinetuneLr { lr: f64, finetune_lr: f64 },
    #[error("training set is empty")]
    EmptyTrainingSet,
}

/// Training hyperparameters. The defaults are the reference settings:
/// 50 epochs, early-stop tolerance 5, Adam at 0.001, finetuning at a
/// tenth of that for 5 epochs, dropout 0.3, word dropout 0.1.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub early_stop_tolerance: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub finetune_lr: f64,
    pub finetune_epochs: usize,
    pub dropout: f64,
    pub word_drop: f64,
    pub subsample_rate: Option<f64>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 50,
            early_stop_tolerance: 5,
            batch_size: 1,
            lr: 0.001,
            finetune_lr: 0.0001,
            finetune_epochs: 5,
            dropout: 0.3,
            word_drop: 0.1,
            subsample_rate: None,
            seed: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let want = self.lr / 10.0;
        if (self.finetune_lr - want).abs() > 1e-15 {
            return Err(TrainError::BadFinetuneLr {
                lr: self.lr,
                finetune_lr: self.finetune_lr,
            });
        }
        Ok(())
    }
}

/// Epoch budget of the multilingual phase before finetuning.
pub const MULTILINGUAL_EPOCHS: usize = 20;
/// Epoch count of the baseline replication schedule.
pub const BASELINE_EPOCHS: usize = 20;
/// Subsample rate of the baseline replication schedule.
pub const BASELINE_SUBSAMPLE: f64 = 0.3;
