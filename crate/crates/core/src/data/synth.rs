//! Synthetic corpus generator for desk-scale verification.
//!
//! A toy language where the inflection of the target is governed by a
//! trigger word placed exactly `trigger_distance` positions before it.
//! With distance 1 the trigger is visible to an adjacent-window context
//! model; with larger distances only a full-context encoder can see it.
//! Filler tokens are drawn independently of the trigger and carry no
//! signal about the suffix.

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng::{seeded, Stream};

use super::{DataError, MsdTag, SentenceInstance, Token};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_sentences: usize,
    pub trigger_distance: usize,
    pub n_lemmas: usize,
    pub seed: u64,
    pub language_id: String,
}

/// Agreement rule: the trigger token's surface form decides the suffix
/// appended to the target lemma and the target's MSD.
#[derive(Debug, Clone, Copy)]
pub struct TriggerRule {
    pub trigger: &'static str,
    pub suffix: &'static str,
    pub target_msd: &'static [&'static str],
    pub trigger_msd: &'static [&'static str],
}

pub const TRIGGER_RULES: [TriggerRule; 2] = [
    TriggerRule {
        trigger: "A",
        suffix: "en",
        target_msd: &["V", "PL"],
        trigger_msd: &["DET", "PL"],
    },
    TriggerRule {
        trigger: "B",
        suffix: "t",
        target_msd: &["V", "SG"],
        trigger_msd: &["DET", "SG"],
    },
];

/// The generator's published inflection rule; tests check generated gold
/// forms against this by plain string concatenation.
pub fn inflect(lemma: &str, trigger: &str) -> Option<String> {
    TRIGGER_RULES
        .iter()
        .find(|r| r.trigger == trigger)
        .map(|r| format!("{lemma}{}", r.suffix))
}

const CONSONANTS: &[char] = &['b', 'd', 'f', 'g', 'k', 'l', 'm', 'n', 'p', 'r', 's', 't'];
const VOWELS: &[char] = &['a', 'e', 'i', 'o', 'u'];

fn coin_word(rng: &mut rand_chacha::ChaCha8Rng, syllables: usize) -> String {
    let mut w = String::new();
    for _ in 0..syllables {
        w.push(*CONSONANTS.choose(rng).expect("non-empty"));
        w.push(*VOWELS.choose(rng).expect("non-empty"));
    }
    if rng.random::<f64>() < 0.5 {
        w.push(*CONSONANTS.choose(rng).expect("non-empty"));
    }
    w
}

fn coin_distinct(rng: &mut rand_chacha::ChaCha8Rng, n: usize, syllables: usize) -> Vec<String> {
    let mut words = Vec::with_capacity(n);
    while words.len() < n {
        let w = coin_word(rng, syllables);
        if !words.contains(&w) {
            words.push(w);
        }
    }
    words
}

fn filler_token(form: &str) -> Token {
    Token {
        form: Some(form.to_string()),
        lemma: Some(form.to_string()),
        msd: Some(MsdTag::from_components(vec!["N", "SG"])),
    }
}

pub fn generate_synthetic_corpus(spec: &SynthSpec) -> Result<Vec<SentenceInstance>, DataError> {
    if spec.trigger_distance < 1 {
        return Err(DataError::InvalidTriggerDistance(spec.trigger_distance));
    }
    let mut rng = seeded(spec.seed, Stream::Synth);
    let lemmas = coin_distinct(&mut rng, spec.n_lemmas.max(1), 2);
    let fillers = coin_distinct(&mut rng, 10, 3);

    let mut corpus = Vec::with_capacity(spec.n_sentences);
    for _ in 0..spec.n_sentences {
        let rule = TRIGGER_RULES[rng.random_range(0..TRIGGER_RULES.len())];
        let lemma = lemmas.choose(&mut rng).expect("non-empty").clone();

        let mut tokens = Vec::new();
        for _ in 0..rng.random_range(0..=2) {
            tokens.push(filler_token(fillers.choose(&mut rng).expect("non-empty")));
        }
        tokens.push(Token {
            form: Some(rule.trigger.to_string()),
            lemma: Some(rule.trigger.to_string()),
            msd: Some(MsdTag::from_components(rule.trigger_msd.to_vec())),
        });
        for _ in 0..spec.trigger_distance - 1 {
            tokens.push(filler_token(fillers.choose(&mut rng).expect("non-empty")));
        }
        let target_index = tokens.len();
        tokens.push(Token {
            form: None,
            lemma: Some(lemma.clone()),
            msd: None,
        });
        for _ in 0..rng.random_range(1..=2) {
            tokens.push(filler_token(fillers.choose(&mut rng).expect("non-empty")));
        }
        tokens.push(Token {
            form: Some(".".into()),
            lemma: Some(".".into()),
            msd: Some(MsdTag::from_components(vec!["PUNCT"])),
        });

        corpus.push(SentenceInstance {
            tokens,
            target_index,
            gold_form: inflect(&lemma, rule.trigger),
            gold_msd: Some(MsdTag::from_components(rule.target_msd.to_vec())),
            language: spec.language_id.clone(),
        });
    }
    Ok(corpus)
}
