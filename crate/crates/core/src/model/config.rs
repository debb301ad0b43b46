use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::AdamConfig;
use crate::variables::{OrganSystem, Variable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttentionMode {
    /// Query from the current step, keys and values from every step up to it.
    SelfAttention,
    /// Query and key from the same step, giving one self-score per step.
    SelfAttentionLiteral,
    /// Scores from a single learned vector; context is a weighted sum of the
    /// raw hidden states.
    GlobalAttention,
    LastHidden,
}

impl AttentionMode {
    pub const ALL: [AttentionMode; 4] = [
        AttentionMode::SelfAttention,
        AttentionMode::SelfAttentionLiteral,
        AttentionMode::GlobalAttention,
        AttentionMode::LastHidden,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AttentionMode::SelfAttention => "self_attention",
            AttentionMode::SelfAttentionLiteral => "self_attention_literal",
            AttentionMode::GlobalAttention => "global_attention",
            AttentionMode::LastHidden => "last_hidden",
        }
    }
}

impl fmt::Display for AttentionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AttentionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AttentionMode::ALL
            .iter()
            .copied()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown attention mode '{s}'")))
    }
}

/// Which input columns a model reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum FeatureSubset {
    #[default]
    All,
    Organ(OrganSystem),
}

impl FeatureSubset {
    pub fn variables(self) -> Vec<Variable> {
        match self {
            FeatureSubset::All => Variable::ALL.to_vec(),
            FeatureSubset::Organ(o) => {
                let mut v = o.variables().to_vec();
                v.sort_by_key(|v| v.index());
                v
            }
        }
    }
}

impl fmt::Display for FeatureSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureSubset::All => f.write_str("all"),
            FeatureSubset::Organ(o) => f.write_str(o.name()),
        }
    }
}

impl FromStr for FeatureSubset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "all" {
            Ok(FeatureSubset::All)
        } else {
            s.parse().map(FeatureSubset::Organ)
        }
    }
}

impl TryFrom<String> for FeatureSubset {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<FeatureSubset> for String {
    fn from(f: FeatureSubset) -> String {
        f.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub hidden_dim: usize,
    pub dropout_p: f64,
    pub l2_lambda: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub patience_epochs: usize,
    pub max_epochs: usize,
    pub attention_mode: AttentionMode,
    /// Divide query-key logits by the square root of the hidden size.
    pub scale_attention: bool,
    pub feature_subset: FeatureSubset,
    pub validation_fraction: f64,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            hidden_dim: 64,
            dropout_p: 0.2,
            l2_lambda: 1e-6,
            learning_rate: 1e-3,
            batch_size: 16,
            patience_epochs: 5,
            max_epochs: 50,
            attention_mode: AttentionMode::SelfAttention,
            scale_attention: false,
            feature_subset: FeatureSubset::All,
            validation_fraction: 0.1,
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn input_dim(&self) -> usize {
        self.feature_subset.variables().len()
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            l2: self.l2_lambda,
            ..AdamConfig::default()
        }
    }

    pub fn logit_scale(&self) -> f64 {
        if self.scale_attention {
            1.0 / (self.hidden_dim as f64).sqrt()
        } else {
            1.0
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.hidden_dim == 0 {
            return bad("hidden_dim must be at least 1");
        }
        if !(0.0..1.0).contains(&self.dropout_p) {
            return bad("dropout_p must be in [0, 1)");
        }
        if !(self.l2_lambda >= 0.0) {
            return bad("l2_lambda must be non-negative");
        }
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if self.max_epochs == 0 {
            return bad("max_epochs must be at least 1");
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return bad("validation_fraction must be in [0, 1)");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subset_round_trip() {
        for s in ["all", "renal", "cardiovascular"] {
            let f: FeatureSubset = s.parse().unwrap();
            assert_eq!(f.to_string(), s);
        }
        assert!("kidney".parse::<FeatureSubset>().is_err());
        let renal = FeatureSubset::Organ(OrganSystem::Renal).variables();
        assert_eq!(renal, vec![Variable::Urine, Variable::Creatinine]);
    }

    #[test]
    fn defaults_and_toml() {
        let c: ModelConfig = toml::from_str("hidden_dim = 8\nattention_mode = \"global_attention\"\nfeature_subset = \"liver\"").unwrap();
        assert_eq!(c.hidden_dim, 8);
        assert_eq!(c.attention_mode, AttentionMode::GlobalAttention);
        assert_eq!(c.input_dim(), 1);
        assert_eq!(c.batch_size, 16);
        c.validate().unwrap();
        let bad = ModelConfig {
            dropout_p: 1.0,
            ..ModelConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
