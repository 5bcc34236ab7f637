//! Run configuration: one TOML file drives every command, and every
//! hyperparameter can be overridden by a flag. Omitted values fall back
//! to the reference defaults (dims 100, 50 epochs, tolerance 5, Adam at
//! 0.001, dropout 0.3, word dropout 0.1).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{SynthSpec, Track};
use crate::model::{ContextMode, ModelConfig};
use crate::training::{TrainConfig, BASELINE_EPOCHS, MULTILINGUAL_EPOCHS};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("config: {0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct LanguageEntry {
    pub id: String,
    pub train: PathBuf,
    pub dev: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSection {
    pub n_sentences: usize,
    pub trigger_distance: usize,
    #[serde(default = "default_n_lemmas")]
    pub n_lemmas: usize,
    pub seed: Option<u64>,
    pub language_id: String,
    pub out: PathBuf,
}

fn default_n_lemmas() -> usize {
    30
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct AblationSection {
    pub architectures: Vec<String>,
    pub n_models_per_cell: usize,
    pub seeds: Option<Vec<u64>>,
    #[serde(default)]
    pub workers: usize,
    pub out_dir: PathBuf,
}

/// The on-disk shape of a config file. All hyperparameters are optional;
/// resolution applies defaults and flag overrides.
#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunFile {
    pub track: Option<u8>,
    pub context_mode: Option<String>,
    pub aux_msd: Option<bool>,
    pub embed_dim: Option<usize>,
    pub lstm_dim: Option<usize>,
    pub attn_dim: Option<usize>,
    pub epochs: Option<usize>,
    pub early_stop_tolerance: Option<usize>,
    pub lr: Option<f64>,
    pub finetune_lr: Option<f64>,
    pub finetune_epochs: Option<usize>,
    pub dropout: Option<f64>,
    pub word_drop: Option<f64>,
    pub subsample_rate: Option<f64>,
    pub seed: Option<u64>,
    pub languages: Vec<LanguageEntry>,
    pub synth: Option<SynthSection>,
    pub ablation: Option<AblationSection>,
}

impl RunFile {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(toml::from_str(&text)?)
    }
}

/// Hyperparameter flag overrides shared by the commands.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    #[arg(long)]
    pub seed: Option<u64>,
    /// Task track: 1 (forms+lemmas+MSDs in context) or 2 (forms only).
    #[arg(long)]
    pub track: Option<u8>,
    /// Context summary: "full_lstm" or "window2".
    #[arg(long)]
    pub context_mode: Option<String>,
    #[arg(long)]
    pub aux_msd: Option<bool>,
    #[arg(long)]
    pub embed_dim: Option<usize>,
    #[arg(long)]
    pub lstm_dim: Option<usize>,
    #[arg(long)]
    pub attn_dim: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub early_stop_tolerance: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub finetune_lr: Option<f64>,
    #[arg(long)]
    pub finetune_epochs: Option<usize>,
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long)]
    pub word_drop: Option<f64>,
    #[arg(long)]
    pub subsample_rate: Option<f64>,
}

/// Which training schedule a config asks for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schedule {
    Monolingual,
    Baseline,
    Multilingual,
}

#[derive(Debug, Clone)]
pub struct ResolvedRun {
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub languages: Vec<LanguageEntry>,
    pub schedule: Schedule,
}

/// Merge file values and flag overrides onto the defaults, derive the
/// schedule, and validate the combination.
pub fn resolve(file: &RunFile, flags: &Overrides) -> Result<ResolvedRun, ConfigError> {
    let track = match flags.track.or(file.track) {
        None => Track::One,
        Some(t) => Track::try_from(t).map_err(invalid)?,
    };
    let context_mode = match flags.context_mode.as_deref().or(file.context_mode.as_deref()) {
        None => ContextMode::FullLstm,
        Some(s) => s.parse::<ContextMode>().map_err(invalid)?,
    };
    let subsample_rate = flags.subsample_rate.or(file.subsample_rate);

    let schedule = if file.languages.len() >= 2 {
        Schedule::Multilingual
    } else if subsample_rate.is_some() {
        Schedule::Baseline
    } else {
        Schedule::Monolingual
    };
    if schedule == Schedule::Multilingual && subsample_rate.is_some() {
        return Err(invalid(
            "subsample_rate belongs to the baseline schedule; it does not combine with multilingual training",
        ));
    }

    let aux_default = track == Track::One && schedule != Schedule::Baseline;
    let aux_msd = flags.aux_msd.or(file.aux_msd).unwrap_or(aux_default);
    if schedule == Schedule::Multilingual && !aux_msd {
        return Err(invalid(
            "multilingual training shares the auxiliary MSD decoder; aux_msd must be enabled",
        ));
    }

    let model = ModelConfig {
        embed_dim: flags.embed_dim.or(file.embed_dim).unwrap_or(100),
        lstm_dim: flags.lstm_dim.or(file.lstm_dim).unwrap_or(100),
        attn_dim: flags.attn_dim.or(file.attn_dim).unwrap_or(100),
        track,
        context_mode,
        aux_msd,
        languages: file.languages.iter().map(|l| l.id.clone()).collect(),
    };

    let default_epochs = match schedule {
        Schedule::Monolingual => TrainConfig::default().epochs,
        Schedule::Baseline => BASELINE_EPOCHS,
        Schedule::Multilingual => MULTILINGUAL_EPOCHS,
    };
    let lr = flags.lr.or(file.lr).unwrap_or(0.001);
    let finetune_lr = flags.finetune_lr.or(file.finetune_lr).unwrap_or(lr / 10.0);
    let train = TrainConfig {
        epochs: flags.epochs.or(file.epochs).unwrap_or(default_epochs),
        early_stop_tolerance: flags
            .early_stop_tolerance
            .or(file.early_stop_tolerance)
            .unwrap_or(5),
        batch_size: 1,
        lr,
        finetune_lr,
        finetune_epochs: flags
            .finetune_epochs
            .or(file.finetune_epochs)
            .unwrap_or(5),
        dropout: flags.dropout.or(file.dropout).unwrap_or(0.3),
        word_drop: flags.word_drop.or(file.word_drop).unwrap_or(0.1),
        subsample_rate,
        seed: flags.seed.or(file.seed).unwrap_or(1),
    };
    train
        .validate()
        .map_err(|e| invalid(e.to_string()))?;

    Ok(ResolvedRun {
        model,
        train,
        languages: file.languages.clone(),
        schedule,
    })
}

impl SynthSection {
    pub fn to_spec(&self, seed_flag: Option<u64>) -> SynthSpec {
        SynthSpec {
            n_sentences: self.n_sentences,
            trigger_distance: self.trigger_distance,
            n_lemmas: self.n_lemmas,
            seed: seed_flag.or(self.seed).unwrap_or(1),
            language_id: self.language_id.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(id: &str) -> LanguageEntry {
        LanguageEntry {
            id: id.into(),
            train: PathBuf::from(format!("{id}.tsv")),
            dev: None,
        }
    }

    #[test]
    fn omitted_values_equal_reference_defaults() {
        let file = RunFile {
            languages: vec![entry("en")],
            ..RunFile::default()
        };
        let r = resolve(&file, &Overrides::default()).unwrap();
        assert_eq!(r.model.embed_dim, 100);
        assert_eq!(r.model.lstm_dim, 100);
        assert_eq!(r.model.attn_dim, 100);
        assert_eq!(r.model.track, Track::One);
        assert_eq!(r.model.context_mode, ContextMode::FullLstm);
        assert!(r.model.aux_msd);
        assert_eq!(r.train.epochs, 50);
        assert_eq!(r.train.early_stop_tolerance, 5);
        assert_eq!(r.train.lr, 0.001);
        assert_eq!(r.train.finetune_lr, 0.0001);
        assert_eq!(r.train.dropout, 0.3);
        assert_eq!(r.train.word_drop, 0.1);
        assert!(r.train.subsample_rate.is_none());
        assert_eq!(r.schedule, Schedule::Monolingual);
    }

    #[test]
    fn baseline_schedule_is_derived_from_subsampling() {
        let file = RunFile {
            languages: vec![entry("en")],
            subsample_rate: Some(0.3),
            context_mode: Some("window2".into()),
            ..RunFile::default()
        };
        let r = resolve(&file, &Overrides::default()).unwrap();
        assert_eq!(r.schedule, Schedule::Baseline);
        assert_eq!(r.train.epochs, 20);
        assert_eq!(r.model.context_mode, ContextMode::Window2);
        assert!(!r.model.aux_msd, "baseline replication runs without aux");
    }

    #[test]
    fn multilingual_schedule_comes_with_twenty_epochs_and_aux() {
        let file = RunFile {
            languages: vec![entry("en"), entry("sv")],
            ..RunFile::default()
        };
        let r = resolve(&file, &Overrides::default()).unwrap();
        assert_eq!(r.schedule, Schedule::Multilingual);
        assert_eq!(r.train.epochs, 20);
        assert!(r.model.aux_msd);

        let no_aux = RunFile {
            aux_msd: Some(false),
            ..file
        };
        assert!(resolve(&no_aux, &Overrides::default()).is_err());
    }

    #[test]
    fn aux_on_track_two_is_rejected_downstream() {
        let file = RunFile {
            languages: vec![entry("en")],
            track: Some(2),
            aux_msd: Some(true),
            ..RunFile::default()
        };
        let r = resolve(&file, &Overrides::default()).unwrap();
        assert!(r.model.validate().is_err());
        // omitted aux on track 2 defaults to off and validates
        let file2 = RunFile {
            languages: vec![entry("en")],
            track: Some(2),
            ..RunFile::default()
        };
        let r2 = resolve(&file2, &Overrides::default()).unwrap();
        assert!(!r2.model.aux_msd);
        assert!(r2.model.validate().is_ok());
    }

    #[test]
    fn flags_override_the_file() {
        let file = RunFile {
            languages: vec![entry("en")],
            lr: Some(0.01),
            seed: Some(7),
            ..RunFile::default()
        };
        let flags = Overrides {
            lr: Some(0.002),
            seed: Some(9),
            ..Overrides::default()
        };
        let r = resolve(&file, &flags).unwrap();
        assert_eq!(r.train.lr, 0.002);
        assert_eq!(r.train.finetune_lr, 0.0002);
        assert_eq!(r.train.seed, 9);
    }

    #[test]
    fn toml_round_trips_through_the_file_shape() {
        let text = r#"
track = 1
context_mode = "full_lstm"
seed = 42

[[languages]]
id = "en"
train = "en.train.tsv"
dev = "en.dev.tsv"

[synth]
n_sentences = 100
trigger_distance = 5
language_id = "synthA"
out = "synthA.tsv"

[ablation]
architectures = ["window2-baseline", "lstm_enc"]
n_models_per_cell = 5
out_dir = "out"
"#;
        let file: RunFile = toml::from_str(text).unwrap();
        assert_eq!(file.languages.len(), 1);
        assert_eq!(file.synth.as_ref().unwrap().n_lemmas, 30);
        assert_eq!(file.ablation.as_ref().unwrap().workers, 0);
        let r = resolve(&file, &Overrides::default()).unwrap();
        assert_eq!(r.train.seed, 42);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<RunFile>("learning_rate = 0.1").is_err());
    }
}
