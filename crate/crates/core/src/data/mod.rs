//! Sentence data: parsing, vocabularies, instance encoding, splits and
//! synthetic verification corpora.

pub mod encode;
pub(crate) mod parse;
mod split;
pub mod synth;
mod types;
pub mod vocab;

pub use encode::{chars_with_markers, decode_chars, encode_instance, ContextToken, EncodedInstance};
pub use parse::{
    answers_path, attach_answers, parse_answers, parse_file, parse_str, serialize_answers,
    serialize_instances, ANSWERS_SUFFIX,
};
pub use split::split_train_validation;
pub use synth::{generate_synthetic_corpus, inflect, SynthSpec, TRIGGER_RULES};
pub use types::{MsdTag, SentenceInstance, Token, Track};
pub use vocab::{build_vocabularies, VocabBundle, VocabKind, VocabSet, Vocabulary};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}:{line}: {msg}")]
    Format {
        path: String,
        line: usize,
        msg: String,
    },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("need at least {need} instances, got {got}")]
    TooFewInstances { need: usize, got: usize },
    #[error("unknown language {0:?}")]
    UnknownLanguage(String),
    #[error("empty MSD tag")]
    EmptyMsd,
    #[error("trigger distance must be at least 1, got {0}")]
    InvalidTriggerDistance(usize),
    #[error("answers file has {answers} entries for {instances} instances")]
    AnswerCountMismatch { answers: usize, instances: usize },
}
