// Scratch calibration harness (removed before release).

use std::collections::BTreeMap;
use std::time::Instant;

use ctxinflect::data::{
    build_vocabularies, encode_instance, generate_synthetic_corpus, split_train_validation,
    SynthSpec, Track,
};
use ctxinflect::evaluation::aux_msd_accuracy;
use ctxinflect::inference::dev_accuracy;
use ctxinflect::model::{ContextMode, Model, ModelConfig};
use ctxinflect::training::{
    finetune, train_baseline_schedule, train_monolingual, train_multilingual, LanguageData,
    LanguageGroup, TrainConfig,
};

fn corpus(lang: &str, n: usize, distance: usize, seed: u64) -> Vec<ctxinflect::data::SentenceInstance> {
    generate_synthetic_corpus(&SynthSpec {
        n_sentences: n,
        trigger_distance: distance,
        n_lemmas: 20,
        seed,
        language_id: lang.into(),
    })
    .unwrap()
}

fn main() {
    let which = std::env::args().nth(1).unwrap_or_else(|| "3".into());
    match which.as_str() {
        "2" => probe2(),
        "3" => probe3(),
        "4" => probe4(),
        _ => panic!("unknown probe"),
    }
}

// criterion 2 shape: dims=100, 50 instances, overfit
fn probe2() {
    let t0 = Instant::now();
    let insts = corpus("toy", 50, 1, 7);
    let vocabs = build_vocabularies(&insts, Track::One);
    let config = ModelConfig {
        embed_dim: 100,
        lstm_dim: 100,
        attn_dim: 100,
        track: Track::One,
        context_mode: ContextMode::FullLstm,
        aux_msd: true,
        languages: vec!["toy".into()],
    };
    let model = Model::new(config, vocabs.clone(), 7).unwrap();
    let encoded: Vec<_> = insts
        .iter()
        .map(|i| encode_instance(i, &vocabs, Track::One).unwrap())
        .collect();
    let data = LanguageData {
        train: encoded.clone(),
        validation: encoded.clone(),
    };
    let cfg = TrainConfig {
        epochs: 200,
        early_stop_tolerance: 200,
        seed: 7,
        ..TrainConfig::default()
    };
    let out = train_monolingual(model, &data, &cfg).unwrap();
    let acc = dev_accuracy(&out.model, &insts).unwrap();
    println!(
        "probe2: {} epochs, train-acc {:.1}%, {:?}",
        out.log.len(),
        acc,
        t0.elapsed()
    );
    for rec in out.log.iter().take(8) {
        println!("  epoch {} train {:.3} val {:.3}", rec.epoch, rec.train_loss, rec.val_loss);
    }
    // when did it reach 100?
}

// criterion 3 shape: distance=5, 1000 train / 200 dev
fn probe3() {
    let dims: usize = std::env::args()
        .nth(2)
        .and_then(|s| s.parse().ok())
        .unwrap_or(32);
    let train_raw = corpus("toy", 1000, 5, 11);
    let dev = corpus("toy", 200, 5, 12);
    let vocabs = build_vocabularies(&train_raw, Track::One);

    for (label, mode) in [("full", ContextMode::FullLstm), ("window2", ContextMode::Window2)] {
        for seed in [1u64, 2, 3] {
            let t0 = Instant::now();
            let config = ModelConfig {
                embed_dim: dims,
                lstm_dim: dims,
                attn_dim: dims,
                track: Track::One,
                context_mode: mode,
                aux_msd: false,
                languages: vec!["toy".into()],
            };
            let model = Model::new(config, vocabs.clone(), seed).unwrap();
            let (tr, va) = split_train_validation(&train_raw, 0.9, seed).unwrap();
            let enc = |v: &[ctxinflect::data::SentenceInstance]| {
                v.iter()
                    .map(|i| encode_instance(i, &vocabs, Track::One).unwrap())
                    .collect::<Vec<_>>()
            };
            let data = LanguageData {
                train: enc(&tr),
                validation: enc(&va),
            };
            let cfg = TrainConfig {
                seed,
                ..TrainConfig::default()
            };
            let out = if mode == ContextMode::Window2 {
                let cfg = TrainConfig {
                    epochs: 20,
                    subsample_rate: Some(0.3),
                    ..cfg
                };
                train_baseline_schedule(model, &data, &cfg).unwrap()
            } else {
                train_monolingual(model, &data, &cfg).unwrap()
            };
            let acc = dev_accuracy(&out.model, &dev).unwrap();
            println!(
                "probe3 dims={dims} {label} seed={seed}: epochs={} dev-acc {:.1}% {:?}",
                out.log.len(),
                acc,
                t0.elapsed()
            );
        }
    }
}

// criterion 4 shape: two languages, 300 train each
fn probe4() {
    let dims: usize = std::env::args()
        .nth(2)
        .and_then(|s| s.parse().ok())
        .unwrap_or(32);
    let t0 = Instant::now();
    let a_train = corpus("la", 300, 1, 21);
    let a_dev = corpus("la", 100, 1, 22);
    let b_train = corpus("lb", 300, 1, 23);
    let b_dev = corpus("lb", 100, 1, 24);

    let mut all = a_train.clone();
    all.extend(b_train.clone());
    let vocabs = build_vocabularies(&all, Track::One);

    let mk = |langs: Vec<String>, seed: u64| {
        Model::new(
            ModelConfig {
                embed_dim: dims,
                lstm_dim: dims,
                attn_dim: dims,
                track: Track::One,
                context_mode: ContextMode::FullLstm,
                aux_msd: true,
                languages: langs,
            },
            vocabs.clone(),
            seed,
        )
        .unwrap()
    };
    let enc = |v: &[ctxinflect::data::SentenceInstance], seed: u64| {
        let (tr, va) = split_train_validation(v, 0.9, seed).unwrap();
        let e = |v: &[ctxinflect::data::SentenceInstance]| {
            v.iter()
                .map(|i| encode_instance(i, &vocabs, Track::One).unwrap())
                .collect::<Vec<_>>()
        };
        LanguageData {
            train: e(&tr),
            validation: e(&va),
        }
    };

    for seed in [1u64, 2, 3] {
        // monolingual multi-task per language
        let mono_a = train_monolingual(
            mk(vec!["la".into()], seed),
            &enc(&a_train, seed),
            &TrainConfig { seed, ..TrainConfig::default() },
        )
        .unwrap();
        let mono_b = train_monolingual(
            mk(vec!["lb".into()], seed),
            &enc(&b_train, seed),
            &TrainConfig { seed, ..TrainConfig::default() },
        )
        .unwrap();
        // multilingual + finetune
        let group = LanguageGroup::new(vec!["la".into(), "lb".into()]).unwrap();
        let mut data = BTreeMap::new();
        data.insert("la".to_string(), enc(&a_train, seed));
        data.insert("lb".to_string(), enc(&b_train, seed));
        let cfg20 = TrainConfig { epochs: 20, seed, ..TrainConfig::default() };
        let multi = train_multilingual(&group, &data, mk(vec!["la".into(), "lb".into()], seed), &cfg20).unwrap();
        let fine_a = finetune(&multi.model, "la", &data["la"], &cfg20).unwrap();
        let fine_b = finetune(&multi.model, "lb", &data["lb"], &cfg20).unwrap();

        println!(
            "probe4 dims={dims} seed={seed}: mono la {:.1} lb {:.1} | multi la {:.1} lb {:.1} | fine la {:.1} lb {:.1} | aux la {:.1} lb {:.1} | {:?}",
            dev_accuracy(&mono_a.model, &a_dev).unwrap(),
            dev_accuracy(&mono_b.model, &b_dev).unwrap(),
            dev_accuracy(&multi.model, &a_dev).unwrap(),
            dev_accuracy(&multi.model, &b_dev).unwrap(),
            dev_accuracy(&fine_a.model, &a_dev).unwrap(),
            dev_accuracy(&fine_b.model, &b_dev).unwrap(),
            aux_msd_accuracy(&fine_a.model, &a_dev).unwrap(),
            aux_msd_accuracy(&fine_b.model, &b_dev).unwrap(),
            t0.elapsed()
        );
    }
}
