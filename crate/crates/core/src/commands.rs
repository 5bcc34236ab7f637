//! Command implementations behind the CLI. Each returns a single-line
//! error on failure; outputs are written atomically (temp file + rename).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::checkpoint::{atomic_write, load_model, save_model, CheckpointError};
use crate::config::{resolve, ConfigError, Overrides, RunFile, Schedule};
use crate::data::{
    answers_path, build_vocabularies, encode_instance, generate_synthetic_corpus, parse_answers,
    parse_file, serialize_answers, serialize_instances, split_train_validation, DataError,
    SentenceInstance, Track,
};
use crate::evaluation::{
    accuracy, best_partner_table, cells_csv, deltas_csv, format_accuracy, rows_csv, run_ablation,
    AblationConfig, Architecture, EvalError, LanguageCorpus,
};
use crate::inference::{ensemble_predict, predict_form, EnsembleSpec, InferError};
use crate::model::{Model, ModelError};
use crate::training::{
    finetune, train_baseline_schedule, train_monolingual, train_multilingual, EpochRecord,
    LanguageData, LanguageGroup, TrainError, TrainOutcome,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Infer(#[from] InferError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    atomic_write(path, bytes).map_err(io_err(path))
}

// ── shared plumbing ─────────────────────────────────────────────────────

fn require_gold(
    instances: &[SentenceInstance],
    language: &str,
    need_msd: bool,
) -> Result<(), CliError> {
    for (i, inst) in instances.iter().enumerate() {
        if inst.gold_form.is_none() {
            return Err(usage(format!(
                "language {language}: instance {} has no gold form; is the answers file ({}) present?",
                i + 1,
                crate::data::ANSWERS_SUFFIX
            )));
        }
        if need_msd && inst.gold_msd.is_none() {
            return Err(usage(format!(
                "language {language}: instance {} has no gold MSD, required with aux_msd",
                i + 1
            )));
        }
    }
    Ok(())
}

fn encoded_split(
    instances: &[SentenceInstance],
    vocabs: &crate::data::VocabSet,
    track: Track,
    seed: u64,
) -> Result<LanguageData, CliError> {
    let (train_raw, val_raw) = split_train_validation(instances, 0.9, seed)?;
    let enc = |v: &[SentenceInstance]| -> Result<Vec<_>, CliError> {
        v.iter()
            .map(|i| Ok(encode_instance(i, vocabs, track)?))
            .collect()
    };
    Ok(LanguageData {
        train: enc(&train_raw)?,
        validation: enc(&val_raw)?,
    })
}

fn log_bytes(log: &[EpochRecord]) -> Vec<u8> {
    let mut out = Vec::new();
    for rec in log {
        out.extend_from_slice(serde_json::to_string(rec).expect("record serializes").as_bytes());
        out.push(b'\n');
    }
    out
}

fn log_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_os_string();
    s.push(".log");
    PathBuf::from(s)
}

fn finish_training(outcome: &TrainOutcome, out: &Path) -> Result<(), CliError> {
    save_model(&outcome.model, out)?;
    write_atomic(&log_path(out), &log_bytes(&outcome.log))?;
    for rec in &outcome.log {
        eprintln!(
            "epoch {:>3}  train {:.4}  val {:.4}{}",
            rec.epoch,
            rec.train_loss,
            rec.val_loss,
            if rec.improved { "  *" } else { "" }
        );
    }
    eprintln!(
        "best epoch {}; checkpoint written to {}",
        outcome.best_epoch,
        out.display()
    );
    Ok(())
}

// ── train ───────────────────────────────────────────────────────────────

#[derive(Debug, clap::Args)]
pub struct TrainArgs {
    /// Run configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Checkpoint output path; the log goes to <out>.log.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub overrides: Overrides,
}

pub fn cmd_train(args: &TrainArgs) -> Result<(), CliError> {
    let file = RunFile::load(&args.config)?;
    let run = resolve(&file, &args.overrides)?;
    if run.languages.is_empty() {
        return Err(usage("config lists no [[languages]]"));
    }
    run.model.validate()?;

    let mut raw: BTreeMap<String, Vec<SentenceInstance>> = BTreeMap::new();
    let mut all = Vec::new();
    for entry in &run.languages {
        let instances = parse_file(&entry.train, run.model.track, &entry.id)?;
        require_gold(&instances, &entry.id, run.model.aux_msd)?;
        all.extend(instances.iter().cloned());
        raw.insert(entry.id.clone(), instances);
    }
    let vocabs = build_vocabularies(&all, run.model.track);
    let model = Model::new(run.model.clone(), vocabs.clone(), run.train.seed)?;

    let mut data = BTreeMap::new();
    for (lang, instances) in &raw {
        data.insert(
            lang.clone(),
            encoded_split(instances, &vocabs, run.model.track, run.train.seed)?,
        );
    }

    let outcome = match run.schedule {
        Schedule::Monolingual => {
            let lang = &run.languages[0].id;
            train_monolingual(model, &data[lang], &run.train)?
        }
        Schedule::Baseline => {
            let lang = &run.languages[0].id;
            train_baseline_schedule(model, &data[lang], &run.train)?
        }
        Schedule::Multilingual => {
            let ids: Vec<String> = run.languages.iter().map(|l| l.id.clone()).collect();
            let group = LanguageGroup::new(ids)?;
            train_multilingual(&group, &data, model, &run.train)?
        }
    };
    finish_training(&outcome, &args.out)
}

// ── finetune ────────────────────────────────────────────────────────────

#[derive(Debug, clap::Args)]
pub struct FinetuneArgs {
    /// Multilingual checkpoint to start from.
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Member language to finetune.
    #[arg(long)]
    pub language: String,
    /// Run configuration naming the language's data files.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub overrides: Overrides,
}

pub fn cmd_finetune(args: &FinetuneArgs) -> Result<(), CliError> {
    let model = load_model(&args.checkpoint)?;
    if model.config.languages.len() < 2 {
        return Err(usage(
            "finetuning starts from a multilingual checkpoint; this one is monolingual",
        ));
    }
    if !model.config.languages.iter().any(|l| l == &args.language) {
        return Err(usage(format!(
            "language {:?} is not part of this checkpoint ({})",
            args.language,
            model.config.languages.join(", ")
        )));
    }
    let file = RunFile::load(&args.config)?;
    let run = resolve(&file, &args.overrides)?;
    let entry = run
        .languages
        .iter()
        .find(|l| l.id == args.language)
        .ok_or_else(|| usage(format!("config has no [[languages]] entry for {:?}", args.language)))?;

    let instances = parse_file(&entry.train, model.config.track, &entry.id)?;
    require_gold(&instances, &entry.id, model.config.aux_msd)?;
    let data = encoded_split(&instances, &model.vocabs, model.config.track, run.train.seed)?;
    let outcome = finetune(&model, &args.language, &data, &run.train)?;
    finish_training(&outcome, &args.out)
}

// ── predict ─────────────────────────────────────────────────────────────

#[derive(Debug, clap::Args)]
pub struct PredictArgs {
    /// One checkpoint, or exactly five (best first) for ensemble voting.
    #[arg(long = "checkpoint", required = true)]
    pub checkpoints: Vec<PathBuf>,
    /// Covered sentence file to predict.
    #[arg(long)]
    pub input: PathBuf,
    /// Language of the input (defaults to the checkpoint's language).
    #[arg(long)]
    pub language: Option<String>,
    /// Track of the input file (defaults to the checkpoint's track).
    #[arg(long)]
    pub track: Option<u8>,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn cmd_predict(args: &PredictArgs) -> Result<(), CliError> {
    if args.checkpoints.len() != 1 && args.checkpoints.len() != EnsembleSpec::SIZE {
        return Err(usage(format!(
            "predict takes 1 checkpoint or exactly {} for an ensemble, got {}",
            EnsembleSpec::SIZE,
            args.checkpoints.len()
        )));
    }
    let models: Vec<Model> = args
        .checkpoints
        .iter()
        .map(|p| load_model(p))
        .collect::<Result<_, _>>()?;

    let track = match args.track {
        Some(t) => Track::try_from(t).map_err(usage)?,
        None => models[0].config.track,
    };
    let language = match &args.language {
        Some(l) => l.clone(),
        None => {
            let langs = &models[0].config.languages;
            if langs.len() == 1 {
                langs[0].clone()
            } else {
                return Err(usage(
                    "--language is required with a multilingual checkpoint",
                ));
            }
        }
    };
    for m in &models {
        if m.config.track != track {
            return Err(usage("checkpoint track does not match the requested track"));
        }
        if !m.config.languages.iter().any(|l| l == &language) {
            return Err(usage(format!(
                "a checkpoint does not cover language {language:?}"
            )));
        }
    }

    let instances = parse_file(&args.input, track, &language)?;
    let mut out = String::new();
    if models.len() == 1 {
        for inst in &instances {
            out.push_str(&predict_form(&models[0], inst)?);
            out.push('\n');
        }
    } else {
        let spec = EnsembleSpec::new(models)?;
        for inst in &instances {
            out.push_str(&ensemble_predict(&spec, inst)?);
            out.push('\n');
        }
    }
    write_atomic(&args.out, out.as_bytes())?;
    eprintln!(
        "wrote {} predictions to {}",
        instances.len(),
        args.out.display()
    );
    Ok(())
}

// ── evaluate ────────────────────────────────────────────────────────────

#[derive(Debug, clap::Args)]
pub struct EvaluateArgs {
    /// Predictions, one form per line.
    #[arg(long)]
    pub predictions: PathBuf,
    /// Gold answers file (FORM<TAB>MSD per instance).
    #[arg(long)]
    pub answers: PathBuf,
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<(), CliError> {
    let preds_text =
        std::fs::read_to_string(&args.predictions).map_err(io_err(&args.predictions))?;
    let predictions: Vec<String> = preds_text.lines().map(str::to_string).collect();
    let answers_text = std::fs::read_to_string(&args.answers).map_err(io_err(&args.answers))?;
    let answers = parse_answers(&answers_text, &args.answers.display().to_string())?;
    let golds: Vec<String> = answers.into_iter().map(|(form, _)| form).collect();
    let acc = accuracy(&predictions, &golds)?;
    println!("{}", format_accuracy(acc));
    Ok(())
}

// ── synth ───────────────────────────────────────────────────────────────

#[derive(Debug, clap::Args)]
pub struct SynthArgs {
    /// Run configuration with a [synth] section.
    #[arg(long)]
    pub config: PathBuf,
    /// Override the output path from the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

pub fn cmd_synth(args: &SynthArgs) -> Result<(), CliError> {
    let file = RunFile::load(&args.config)?;
    let section = file
        .synth
        .as_ref()
        .ok_or_else(|| usage("config has no [synth] section"))?;
    let spec = section.to_spec(args.seed);
    let corpus = generate_synthetic_corpus(&spec)?;
    let out = args.out.clone().unwrap_or_else(|| section.out.clone());
    write_atomic(&out, serialize_instances(&corpus).as_bytes())?;
    let ans = answers_path(&out);
    write_atomic(&ans, serialize_answers(&corpus).as_bytes())?;
    println!(
        "wrote {} sentences to {} (answers: {})",
        corpus.len(),
        out.display(),
        ans.display()
    );
    Ok(())
}

// ── ablate ──────────────────────────────────────────────────────────────

#[derive(Debug, clap::Args)]
pub struct AblateArgs {
    /// Run configuration with an [ablation] section and per-language
    /// train + dev files.
    #[arg(long)]
    pub config: PathBuf,
    /// Override the worker count from the config (0 = all cores).
    #[arg(long)]
    pub workers: Option<usize>,
    #[command(flatten)]
    pub overrides: Overrides,
}

pub fn cmd_ablate(args: &AblateArgs) -> Result<(), CliError> {
    let file = RunFile::load(&args.config)?;
    let run = resolve(&file, &args.overrides)?;
    let section = file
        .ablation
        .as_ref()
        .ok_or_else(|| usage("config has no [ablation] section"))?;
    if run.model.track != Track::One {
        return Err(usage("the ablation ladder runs on track 1 data"));
    }

    let architectures: Vec<Architecture> = section
        .architectures
        .iter()
        .map(|s| s.parse::<Architecture>().map_err(usage))
        .collect::<Result<_, _>>()?;
    let seeds: Vec<u64> = match &section.seeds {
        Some(s) => s.clone(),
        None => (0..section.n_models_per_cell as u64)
            .map(|i| run.train.seed + i)
            .collect(),
    };

    let mut data = BTreeMap::new();
    for entry in &run.languages {
        let dev_path = entry.dev.as_ref().ok_or_else(|| {
            usage(format!("language {:?} needs a dev file for ablation", entry.id))
        })?;
        let train = parse_file(&entry.train, Track::One, &entry.id)?;
        require_gold(&train, &entry.id, true)?;
        let dev = parse_file(dev_path, Track::One, &entry.id)?;
        require_gold(&dev, &entry.id, false)?;
        data.insert(entry.id.clone(), LanguageCorpus { train, dev });
    }

    let cfg = AblationConfig {
        architectures: architectures.clone(),
        n_models_per_cell: section.n_models_per_cell,
        seeds,
        embed_dim: run.model.embed_dim,
        lstm_dim: run.model.lstm_dim,
        attn_dim: run.model.attn_dim,
        train: run.train.clone(),
        workers: args.workers.unwrap_or(section.workers),
    };
    let report = run_ablation(&data, &cfg)?;

    std::fs::create_dir_all(&section.out_dir).map_err(io_err(&section.out_dir))?;
    write_atomic(&section.out_dir.join("models.csv"), rows_csv(&report.rows).as_bytes())?;
    write_atomic(&section.out_dir.join("cells.csv"), cells_csv(&report.cells).as_bytes())?;
    write_atomic(
        &section.out_dir.join("deltas.csv"),
        deltas_csv(&report.deltas).as_bytes(),
    )?;
    if architectures.contains(&Architecture::Multilingual) {
        let table = best_partner_table(&report.rows)?;
        let mut out = String::from("language,rank,partners,dev_accuracy\n");
        for (language, best) in &table {
            for (rank, (partners, acc)) in best.iter().enumerate() {
                out.push_str(&format!(
                    "{language},{},{},{:.4}\n",
                    rank + 1,
                    partners.join("+"),
                    acc
                ));
            }
        }
        write_atomic(&section.out_dir.join("partners.csv"), out.as_bytes())?;
    }

    for cell in &report.cells {
        println!(
            "{} {} n={} mean={} std={} top5={}",
            cell.language,
            cell.architecture,
            cell.n_models,
            format_accuracy(cell.mean),
            format_accuracy(cell.std),
            format_accuracy(cell.top5_mean)
        );
    }
    Ok(())
}
