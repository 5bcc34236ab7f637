use serde::{Deserialize, Serialize};

use crate::data::Track;

use super::ModelError;

/// How the sentence context around the target is summarized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContextMode {
    /// Embeddings of the immediately adjacent tokens only (the baseline).
    Window2,
    /// Forward LSTM over the whole past, backward LSTM over the whole
    /// future, final states concatenated.
    FullLstm,
}

impl std::str::FromStr for ContextMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "window2" => Ok(ContextMode::Window2),
            "full_lstm" => Ok(ContextMode::FullLstm),
            other => Err(format!("unknown context mode {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub embed_dim: usize,
    pub lstm_dim: usize,
    pub attn_dim: usize,
    pub track: Track,
    pub context_mode: ContextMode,
    pub aux_msd: bool,
    pub languages: Vec<String>,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.aux_msd && self.track != Track::One {
            return Err(ModelError::AuxRequiresTrackOne);
        }
        if self.languages.is_empty() {
            return Err(ModelError::NoLanguages);
        }
        if self.embed_dim == 0 || self.lstm_dim == 0 || self.attn_dim == 0 {
            return Err(ModelError::ZeroDimension);
        }
        Ok(())
    }

    /// Concatenated embedding width of one context position.
    pub fn context_feature_dim(&self) -> usize {
        match self.track {
            Track::One => 3 * self.embed_dim, // form + lemma + MSD mean
            Track::Two => self.embed_dim,
        }
    }

    /// Width of the fixed-size context vector.
    pub fn context_vector_dim(&self) -> usize {
        match self.context_mode {
            ContextMode::FullLstm => 2 * self.lstm_dim,
            ContextMode::Window2 => 2 * self.context_feature_dim(),
        }
    }
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            embed_dim: 100,
            lstm_dim: 100,
            attn_dim: 100,
            track: Track::One,
            context_mode: ContextMode::FullLstm,
            aux_msd: true,
            languages: Vec::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reference_dimensions() {
        let c = ModelConfig::default();
        assert_eq!((c.embed_dim, c.lstm_dim, c.attn_dim), (100, 100, 100));
    }

    #[test]
    fn aux_on_track_two_is_rejected() {
        let c = ModelConfig {
            track: Track::Two,
            aux_msd: true,
            languages: vec!["en".into()],
            ..ModelConfig::default()
        };
        assert!(matches!(c.validate(), Err(ModelError::AuxRequiresTrackOne)));
    }

    #[test]
    fn context_vector_width_is_fixed_per_config() {
        let mut c = ModelConfig {
            languages: vec!["en".into()],
            ..ModelConfig::default()
        };
        assert_eq!(c.context_vector_dim(), 200);
        c.context_mode = ContextMode::Window2;
        assert_eq!(c.context_vector_dim(), 600);
        c.track = Track::Two;
        c.aux_msd = false;
        assert_eq!(c.context_vector_dim(), 200);
    }
}
