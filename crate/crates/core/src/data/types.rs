use serde::{Deserialize, Serialize};

use super::DataError;

/// Task setting: Track 1 annotates context with lemmas and MSDs,
/// Track 2 provides word forms only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Track {
    One,
    Two,
}

impl TryFrom<u8> for Track {
    type Error = String;
    fn try_from(v: u8) -> Result<Self, String> {
        match v {
            1 => Ok(Track::One),
            2 => Ok(Track::Two),
            other => Err(format!("track must be 1 or 2, got {other}")),
        }
    }
}

impl From<Track> for u8 {
    fn from(t: Track) -> u8 {
        match t {
            Track::One => 1,
            Track::Two => 2,
        }
    }
}

impl std::str::FromStr for Track {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "1" => Ok(Track::One),
            "2" => Ok(Track::Two),
            other => Err(format!("track must be 1 or 2, got {other:?}")),
        }
    }
}

impl std::fmt::Display for Track {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", u8::from(*self))
    }
}

/// Ordered morphosyntactic description, e.g. V;PST;V.PTCP;PASS.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MsdTag {
    pub components: Vec<String>,
}

impl MsdTag {
    /// Split a tag on ';', preserving order. Empty input is an error.
    pub fn parse(tag: &str) -> Result<Self, DataError> {
        if tag.is_empty() {
            return Err(DataError::EmptyMsd);
        }
        Ok(MsdTag {
            components: tag.split(';').map(str::to_string).collect(),
        })
    }

    pub fn from_components<S: Into<String>>(components: Vec<S>) -> Self {
        MsdTag {
            components: components.into_iter().map(Into::into).collect(),
        }
    }

    /// Inverse of [`MsdTag::parse`]: joining reproduces the original tag.
    pub fn joined(&self) -> String {
        self.components.join(";")
    }

    /// Leading component, conventionally the part of speech.
    pub fn pos(&self) -> &str {
        &self.components[0]
    }
}

impl std::fmt::Display for MsdTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.joined())
    }
}

/// One token of an annotated sentence. `form == None` marks the covered
/// target; `lemma`/`msd == None` mark unavailable annotations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub form: Option<String>,
    pub lemma: Option<String>,
    pub msd: Option<MsdTag>,
}

impl Token {
    pub fn is_covered(&self) -> bool {
        self.form.is_none()
    }
}

/// One annotated sentence with exactly one covered target position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentenceInstance {
    pub tokens: Vec<Token>,
    pub target_index: usize,
    pub gold_form: Option<String>,
    pub gold_msd: Option<MsdTag>,
    pub language: String,
}

impl SentenceInstance {
    /// The target's lemma is available in both tracks.
    pub fn target_lemma(&self) -> &str {
        self.tokens[self.target_index]
            .lemma
            .as_deref()
            .expect("target token always carries its lemma")
    }
}
