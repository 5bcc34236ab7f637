//! The ablation ladder: train a population of models per (language,
//! architecture) cell, score each on dev data, and aggregate into
//! mean / population-std / top-5-mean statistics plus pairwise deltas
//! between consecutive ladder rungs.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::{build_vocabularies, encode_instance, split_train_validation, SentenceInstance, Track};
use crate::inference::dev_accuracy;
use crate::model::{ContextMode, Model, ModelConfig};
use crate::training::{
    finetune, make_language_groups, train_baseline_schedule, train_monolingual,
    train_multilingual, LanguageData, LanguageGroup, TrainConfig, BASELINE_EPOCHS,
    BASELINE_SUBSAMPLE, MULTILINGUAL_EPOCHS,
};

use super::metrics::{cell_stats, CellStats};
use super::EvalError;

/// The architecture ladder, in its conventional order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Architecture {
    Window2Baseline,
    LstmEnc,
    MultiTask,
    Multilingual,
    Finetuned,
}

impl Architecture {
    pub const LADDER: [Architecture; 5] = [
        Architecture::Window2Baseline,
        Architecture::LstmEnc,
        Architecture::MultiTask,
        Architecture::Multilingual,
        Architecture::Finetuned,
    ];

    pub fn is_multilingual(self) -> bool {
        matches!(self, Architecture::Multilingual | Architecture::Finetuned)
    }
}

impl std::fmt::Display for Architecture {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Architecture::Window2Baseline => "window2-baseline",
            Architecture::LstmEnc => "lstm_enc",
            Architecture::MultiTask => "multi_task",
            Architecture::Multilingual => "multilingual",
            Architecture::Finetuned => "finetuned",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for Architecture {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "window2-baseline" => Ok(Architecture::Window2Baseline),
            "lstm_enc" => Ok(Architecture::LstmEnc),
            "multi_task" => Ok(Architecture::MultiTask),
            "multilingual" => Ok(Architecture::Multilingual),
            "finetuned" => Ok(Architecture::Finetuned),
            other => Err(format!("unknown architecture {other:?}")),
        }
    }
}

/// Raw (unencoded) train and dev instances of one language.
#[derive(Debug, Clone)]
pub struct LanguageCorpus {
    pub train: Vec<SentenceInstance>,
    pub dev: Vec<SentenceInstance>,
}

#[derive(Debug, Clone)]
pub struct AblationConfig {
    pub architectures: Vec<Architecture>,
    pub n_models_per_cell: usize,
    /// One seed per model slot.
    pub seeds: Vec<u64>,
    pub embed_dim: usize,
    pub lstm_dim: usize,
    pub attn_dim: usize,
    pub train: TrainConfig,
    /// Worker threads for independent runs; 0 means all available cores.
    pub workers: usize,
}

/// One trained model's scoreline.
#[derive(Debug, Clone, Serialize)]
pub struct ModelRow {
    pub language: String,
    pub architecture: Architecture,
    pub seed: u64,
    pub dev_accuracy: f64,
    /// Partner languages for multilingual rows.
    pub partners: Option<Vec<String>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CellReport {
    pub language: String,
    pub architecture: Architecture,
    pub n_models: usize,
    pub mean: f64,
    pub std: f64,
    pub top5_mean: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DeltaReport {
    pub language: String,
    pub from: Architecture,
    pub to: Architecture,
    pub delta_top5: f64,
}

#[derive(Debug, Clone)]
pub struct AblationReport {
    pub rows: Vec<ModelRow>,
    pub cells: Vec<CellReport>,
    pub deltas: Vec<DeltaReport>,
}

fn model_config(arch: Architecture, languages: Vec<String>, cfg: &AblationConfig) -> ModelConfig {
    let (context_mode, aux) = match arch {
        Architecture::Window2Baseline => (ContextMode::Window2, false),
        Architecture::LstmEnc => (ContextMode::FullLstm, false),
        Architecture::MultiTask | Architecture::Multilingual | Architecture::Finetuned => {
            (ContextMode::FullLstm, true)
        }
    };
    ModelConfig {
        embed_dim: cfg.embed_dim,
        lstm_dim: cfg.lstm_dim,
        attn_dim: cfg.attn_dim,
        track: Track::One,
        context_mode,
        aux_msd: aux,
        languages,
    }
}

fn encode_split(
    instances: &[SentenceInstance],
    vocabs: &crate::data::VocabSet,
    seed: u64,
) -> Result<LanguageData, EvalError> {
    let (train_raw, val_raw) = split_train_validation(instances, 0.9, seed)?;
    let enc = |v: &[SentenceInstance]| -> Result<Vec<_>, EvalError> {
        v.iter()
            .map(|i| Ok(encode_instance(i, vocabs, Track::One)?))
            .collect()
    };
    Ok(LanguageData {
        train: enc(&train_raw)?,
        validation: enc(&val_raw)?,
    })
}

/// Train one monolingual cell member and score it on dev.
fn run_monolingual(
    arch: Architecture,
    language: &str,
    corpus: &LanguageCorpus,
    cfg: &AblationConfig,
    seed: u64,
) -> Result<ModelRow, EvalError> {
    let vocabs = build_vocabularies(&corpus.train, Track::One);
    let config = model_config(arch, vec![language.to_string()], cfg);
    let model = Model::new(config, vocabs.clone(), seed)?;
    let data = encode_split(&corpus.train, &vocabs, seed)?;
    let train_cfg = TrainConfig {
        seed,
        ..cfg.train.clone()
    };
    let outcome = match arch {
        Architecture::Window2Baseline => {
            let baseline_cfg = TrainConfig {
                epochs: BASELINE_EPOCHS,
                subsample_rate: Some(
                    cfg.train.subsample_rate.unwrap_or(BASELINE_SUBSAMPLE),
                ),
                ..train_cfg
            };
            train_baseline_schedule(model, &data, &baseline_cfg)?
        }
        _ => train_monolingual(model, &data, &train_cfg)?,
    };
    let acc = dev_accuracy(&outcome.model, &corpus.dev)?;
    Ok(ModelRow {
        language: language.to_string(),
        architecture: arch,
        seed,
        dev_accuracy: acc,
        partners: None,
    })
}

/// Train one multilingual group model; emit one row per member language
/// (and per finetuned member when requested).
fn run_multilingual_group(
    group: &LanguageGroup,
    data: &BTreeMap<String, LanguageCorpus>,
    cfg: &AblationConfig,
    seed: u64,
    want_multilingual: bool,
    want_finetuned: bool,
) -> Result<Vec<ModelRow>, EvalError> {
    let mut members_data = BTreeMap::new();
    let mut all_instances = Vec::new();
    for lang in group.members() {
        let corpus = data
            .get(lang)
            .ok_or_else(|| crate::training::TrainError::LanguageWithoutData(lang.clone()))?;
        all_instances.extend(corpus.train.iter().cloned());
    }
    let vocabs = build_vocabularies(&all_instances, Track::One);
    for lang in group.members() {
        members_data.insert(lang.clone(), encode_split(&data[lang].train, &vocabs, seed)?);
    }

    let config = model_config(Architecture::Multilingual, group.members().to_vec(), cfg);
    let model = Model::new(config, vocabs, seed)?;
    let train_cfg = TrainConfig {
        epochs: MULTILINGUAL_EPOCHS.min(cfg.train.epochs),
        seed,
        ..cfg.train.clone()
    };
    let outcome = train_multilingual(group, &members_data, model, &train_cfg)?;

    let mut rows = Vec::new();
    for lang in group.members() {
        let partners: Vec<String> = group.partners(lang).iter().map(|s| s.to_string()).collect();
        if want_multilingual {
            let acc = dev_accuracy(&outcome.model, &data[lang].dev)?;
            rows.push(ModelRow {
                language: lang.clone(),
                architecture: Architecture::Multilingual,
                seed,
                dev_accuracy: acc,
                partners: Some(partners.clone()),
            });
        }
        if want_finetuned {
            let fine = finetune(&outcome.model, lang, &members_data[lang], &train_cfg)?;
            let acc = dev_accuracy(&fine.model, &data[lang].dev)?;
            rows.push(ModelRow {
                language: lang.clone(),
                architecture: Architecture::Finetuned,
                seed,
                dev_accuracy: acc,
                partners: Some(partners),
            });
        }
    }
    Ok(rows)
}

/// Train `n_models_per_cell` models per (language, architecture) with the
/// given seeds and aggregate dev accuracies. Independent runs execute in
/// a bounded worker pool; results are merged in key order, so the report
/// does not depend on scheduling.
pub fn run_ablation(
    data: &BTreeMap<String, LanguageCorpus>,
    cfg: &AblationConfig,
) -> Result<AblationReport, EvalError> {
    if cfg.n_models_per_cell < 5 {
        return Err(EvalError::TooFewModelsPerCell(cfg.n_models_per_cell));
    }
    if cfg.seeds.len() != cfg.n_models_per_cell {
        return Err(EvalError::SeedCountMismatch {
            seeds: cfg.seeds.len(),
            models: cfg.n_models_per_cell,
        });
    }

    enum Job {
        Mono(Architecture, String, u64),
        Group(LanguageGroup, u64),
    }

    let mut jobs = Vec::new();
    for &arch in &cfg.architectures {
        if arch.is_multilingual() {
            continue;
        }
        for language in data.keys() {
            for &seed in &cfg.seeds {
                jobs.push(Job::Mono(arch, language.clone(), seed));
            }
        }
    }
    let want_multilingual = cfg.architectures.contains(&Architecture::Multilingual);
    let want_finetuned = cfg.architectures.contains(&Architecture::Finetuned);
    if want_multilingual || want_finetuned {
        let languages: Vec<String> = data.keys().cloned().collect();
        let groups = make_language_groups(&languages, cfg.n_models_per_cell, cfg.train.seed)?;
        for (group, &seed) in groups.into_iter().zip(cfg.seeds.iter()) {
            jobs.push(Job::Group(group, seed));
        }
    }

    let run_job = |job: &Job| -> Result<Vec<ModelRow>, EvalError> {
        match job {
            Job::Mono(arch, language, seed) => {
                Ok(vec![run_monolingual(*arch, language, &data[language], cfg, *seed)?])
            }
            Job::Group(group, seed) => run_multilingual_group(
                group,
                data,
                cfg,
                *seed,
                want_multilingual,
                want_finetuned,
            ),
        }
    };

    let results: Vec<Result<Vec<ModelRow>, EvalError>> = if cfg.workers == 1 {
        jobs.iter().map(run_job).collect()
    } else {
        use rayon::prelude::*;
        let mut builder = rayon::ThreadPoolBuilder::new();
        if cfg.workers > 0 {
            builder = builder.num_threads(cfg.workers);
        }
        let pool = builder.build().map_err(|e| EvalError::WorkerPool(e.to_string()))?;
        pool.install(|| jobs.par_iter().map(run_job).collect())
    };

    let mut rows = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    rows.sort_by(|a, b| {
        (&a.language, a.architecture, a.seed).cmp(&(&b.language, b.architecture, b.seed))
    });

    let mut cells = Vec::new();
    for language in data.keys() {
        for &arch in &cfg.architectures {
            let accs: Vec<f64> = rows
                .iter()
                .filter(|r| r.language == *language && r.architecture == arch)
                .map(|r| r.dev_accuracy)
                .collect();
            let stats: CellStats =
                cell_stats(&accs).map_err(|_| EvalError::TooFewModelsInCell {
                    language: language.clone(),
                    architecture: arch.to_string(),
                    n: accs.len(),
                })?;
            cells.push(CellReport {
                language: language.clone(),
                architecture: arch,
                n_models: stats.n_models,
                mean: stats.mean,
                std: stats.std,
                top5_mean: stats.top5_mean,
            });
        }
    }

    let mut deltas = Vec::new();
    for pair in cfg.architectures.windows(2) {
        for language in data.keys() {
            let find = |arch: Architecture| {
                cells
                    .iter()
                    .find(|c| c.language == *language && c.architecture == arch)
                    .map(|c| c.top5_mean)
            };
            if let (Some(from), Some(to)) = (find(pair[0]), find(pair[1])) {
                deltas.push(DeltaReport {
                    language: language.clone(),
                    from: pair[0],
                    to: pair[1],
                    delta_top5: to - from,
                });
            }
        }
    }

    Ok(AblationReport {
        rows,
        cells,
        deltas,
    })
}

/// For each language, the five best multilingual models containing it,
/// listed as partner sets in accuracy order.
pub fn best_partner_table(
    rows: &[ModelRow],
) -> Result<BTreeMap<String, Vec<(Vec<String>, f64)>>, EvalError> {
    let mut per_language: BTreeMap<String, Vec<&ModelRow>> = BTreeMap::new();
    for row in rows {
        if row.architecture == Architecture::Multilingual {
            per_language.entry(row.language.clone()).or_default().push(row);
        }
    }
    let mut out = BTreeMap::new();
    for (language, mut lang_rows) in per_language {
        if lang_rows.len() < 5 {
            return Err(EvalError::TooFewModelsInCell {
                language,
                architecture: Architecture::Multilingual.to_string(),
                n: lang_rows.len(),
            });
        }
        lang_rows.sort_by(|a, b| b.dev_accuracy.total_cmp(&a.dev_accuracy).then(a.seed.cmp(&b.seed)));
        let best = lang_rows[..5]
            .iter()
            .map(|r| (r.partners.clone().unwrap_or_default(), r.dev_accuracy))
            .collect();
        out.insert(language, best);
    }
    Ok(out)
}

pub fn rows_csv(rows: &[ModelRow]) -> String {
    let mut out = String::from("language,architecture,seed,dev_accuracy,partners\n");
    for r in rows {
        let partners = r
            .partners
            .as_ref()
            .map(|p| p.join("+"))
            .unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{:.4},{}\n",
            r.language, r.architecture, r.seed, r.dev_accuracy, partners
        ));
    }
    out
}

pub fn cells_csv(cells: &[CellReport]) -> String {
    let mut out = String::from("# std is the population standard deviation\n");
    out.push_str("language,architecture,n_models,mean,std,top5_mean\n");
    for c in cells {
        out.push_str(&format!(
            "{},{},{},{:.4},{:.4},{:.4}\n",
            c.language, c.architecture, c.n_models, c.mean, c.std, c.top5_mean
        ));
    }
    out
}

pub fn deltas_csv(deltas: &[DeltaReport]) -> String {
    let mut out = String::from("language,from,to,delta_top5\n");
    for d in deltas {
        out.push_str(&format!(
            "{},{},{},{:.4}\n",
            d.language, d.from, d.to, d.delta_top5
        ));
    }
    out
}
