use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::embed::{EdgeStrategyKind, FeatureConfig};
use crate::error::{Error, Result};

/// The model family: where local and transition energies come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    /// Indicator features with linear weights and a static transition matrix.
    #[serde(rename = "linear-crf")]
    LinearCrf,
    /// Unidirectional LSTM with per-position softmax.
    #[serde(rename = "lstm-tagger")]
    LstmTagger,
    #[serde(rename = "bilstm-tagger")]
    BiLstmTagger,
    /// LSTM local energies plus a static transition matrix.
    #[serde(rename = "lstm-crf")]
    LstmCrf,
    #[serde(rename = "bilstm-crf")]
    BiLstmCrf,
    /// Linear local energy (one score per label), LSTM transition energies.
    #[serde(rename = "edge-based-1")]
    EdgeBased1,
    /// LSTM local energies and LSTM transition energies from separate LSTMs.
    #[serde(rename = "edge-based-2")]
    EdgeBased2,
}

impl Variant {
    pub const ALL: [Variant; 7] = [
        Variant::LinearCrf,
        Variant::LstmTagger,
        Variant::BiLstmTagger,
        Variant::LstmCrf,
        Variant::BiLstmCrf,
        Variant::EdgeBased1,
        Variant::EdgeBased2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::LinearCrf => "linear-crf",
            Variant::LstmTagger => "lstm-tagger",
            Variant::BiLstmTagger => "bilstm-tagger",
            Variant::LstmCrf => "lstm-crf",
            Variant::BiLstmCrf => "bilstm-crf",
            Variant::EdgeBased1 => "edge-based-1",
            Variant::EdgeBased2 => "edge-based-2",
        }
    }

    pub fn is_edge_based(self) -> bool {
        matches!(self, Variant::EdgeBased1 | Variant::EdgeBased2)
    }

    pub fn has_node_lstm(self) -> bool {
        !matches!(self, Variant::LinearCrf | Variant::EdgeBased1)
    }

    pub fn has_static_transitions(self) -> bool {
        matches!(self, Variant::LinearCrf | Variant::LstmCrf | Variant::BiLstmCrf)
    }

    /// Taggers have neither transitions nor a start vector.
    pub fn is_tagger(self) -> bool {
        matches!(self, Variant::LstmTagger | Variant::BiLstmTagger)
    }

    /// Direction fixed by the variant name, if any.
    fn fixed_direction(self) -> Option<bool> {
        match self {
            Variant::LstmTagger | Variant::LstmCrf => Some(false),
            Variant::BiLstmTagger | Variant::BiLstmCrf => Some(true),
            _ => None,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.to_ascii_lowercase().replace('_', "-");
        let v = match norm.as_str() {
            "linear-crf" | "linearcrf" | "crf" => Variant::LinearCrf,
            "lstm-tagger" | "lstm" => Variant::LstmTagger,
            "bilstm-tagger" | "bilstm" => Variant::BiLstmTagger,
            "lstm-crf" | "lstmcrf" => Variant::LstmCrf,
            "bilstm-crf" | "bilstmcrf" => Variant::BiLstmCrf,
            "edge-based-1" | "edgebased1" | "eb1" => Variant::EdgeBased1,
            "edge-based-2" | "edgebased2" | "eb2" => Variant::EdgeBased2,
            _ => return Err(Error::config(format!("unknown variant {s:?}"))),
        };
        Ok(v)
    }
}

/// Architecture of a model; stored inside the model container.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub variant: Variant,
    pub hidden: usize,
    /// Dimension of every input embedding table (words, suffixes, POS, and
    /// bigram / feedforward edge vectors).
    pub embed_dim: usize,
    pub features: FeatureConfig,
    /// Only meaningful for edge-based variants (default Concat there).
    pub edge_strategy: Option<EdgeStrategyKind>,
    /// Fixed by the variant for LSTM/BiLSTM families; defaults to true for
    /// edge-based variants, where it applies to both LSTMs.
    pub bidirectional: Option<bool>,
    /// Dropout rate on LSTM inputs, active only while training.
    pub dropout: f64,
    /// Feed the synthetic BOS edge through the edge LSTM; its first table
    /// row then adds to the start energies.
    pub full_length: bool,
    /// Learn an end-energy vector.
    pub end_energy: bool,
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec {
            variant: Variant::EdgeBased2,
            hidden: 300,
            embed_dim: 100,
            features: FeatureConfig::default(),
            edge_strategy: None,
            bidirectional: None,
            dropout: 0.0,
            full_length: false,
            end_energy: false,
        }
    }
}

impl ModelSpec {
    pub fn new(variant: Variant) -> Self {
        ModelSpec {
            variant,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.variant;
        if self.edge_strategy.is_some() && !v.is_edge_based() {
            return Err(Error::config(format!("edge strategy given for non-edge variant {v}")));
        }
        if let (Some(fixed), Some(asked)) = (v.fixed_direction(), self.bidirectional) {
            if fixed != asked {
                return Err(Error::config(format!(
                    "variant {v} is {}directional; pick the other variant instead",
                    if fixed { "bi" } else { "uni" }
                )));
            }
        }
        if v == Variant::LinearCrf && self.bidirectional.is_some() {
            return Err(Error::config("linear-crf has no LSTM; directionality does not apply"));
        }
        if (self.full_length) && !v.is_edge_based() {
            return Err(Error::config("full-length edge mode needs an edge-based variant"));
        }
        if v != Variant::LinearCrf && (self.hidden == 0 || self.embed_dim == 0) {
            return Err(Error::config("hidden and embedding dimensions must be positive"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::config(format!(
                "dropout must be in [0, 1), got {}",
                self.dropout
            )));
        }
        if self.features.window > crate::data::WINDOW {
            return Err(Error::config(format!(
                "feature window at most {}, got {}",
                crate::data::WINDOW,
                self.features.window
            )));
        }
        Ok(())
    }

    pub fn edge_kind(&self) -> Option<EdgeStrategyKind> {
        if self.variant.is_edge_based() {
            Some(self.edge_strategy.unwrap_or_default())
        } else {
            None
        }
    }

    pub fn is_bidirectional(&self) -> bool {
        self.variant
            .fixed_direction()
            .unwrap_or_else(|| self.bidirectional.unwrap_or(true))
    }
}
