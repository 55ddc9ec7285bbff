use std::fmt::Write as _;

use crate::error::{NrpaError, Result};
use crate::model::{AblationSpec, Dims};
use crate::numeric::Activation;

/// Hyperparameters, seed and switches for one run.
///
/// Serialized as flat `key = value` text; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub word_dim: usize,
    pub id_dim: usize,
    pub num_filters: usize,
    pub attention_dim: usize,
    pub window: usize,
    pub review_len: usize,
    pub reviews_per_owner: usize,
    pub fm_factors: usize,
    pub activation: Activation,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub l2_weight: f64,
    pub seed: u64,
    /// Drop the scored pair's own review from both profiles at evaluation.
    pub exclude_target: bool,
    pub ablation: AblationSpec,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            word_dim: 300,
            id_dim: 32,
            num_filters: 80,
            attention_dim: 80,
            window: 3,
            review_len: 100,
            reviews_per_owner: 15,
            fm_factors: 10,
            activation: Activation::Relu,
            learning_rate: 1e-3,
            batch_size: 100,
            max_epochs: 30,
            patience: 5,
            l2_weight: 1e-6,
            seed: 42,
            exclude_target: true,
            ablation: AblationSpec::FULL,
        }
    }
}

pub const CONFIG_KEYS: [&str; 17] = [
    "word_dim",
    "id_dim",
    "num_filters",
    "attention_dim",
    "window",
    "review_len",
    "reviews_per_owner",
    "fm_factors",
    "activation",
    "learning_rate",
    "batch_size",
    "max_epochs",
    "patience",
    "l2_weight",
    "seed",
    "exclude_target",
    "ablation",
];

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| NrpaError::Config(format!("bad value `{value}` for key `{key}`")))
}

impl TrainConfig {
    /// Model dimensions for a dataset with the given table sizes.
    pub fn dims(&self, vocab_size: usize, num_users: usize, num_items: usize) -> Dims {
        Dims {
            vocab_size,
            num_users,
            num_items,
            word_dim: self.word_dim,
            id_dim: self.id_dim,
            num_filters: self.num_filters,
            attention_dim: self.attention_dim,
            window: self.window,
            fm_factors: self.fm_factors,
            review_len: self.review_len,
            reviews_per_owner: self.reviews_per_owner,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("word_dim", self.word_dim),
            ("id_dim", self.id_dim),
            ("num_filters", self.num_filters),
            ("attention_dim", self.attention_dim),
            ("window", self.window),
            ("review_len", self.review_len),
            ("reviews_per_owner", self.reviews_per_owner),
            ("fm_factors", self.fm_factors),
            ("batch_size", self.batch_size),
            ("max_epochs", self.max_epochs),
            ("patience", self.patience),
        ];
        for (key, v) in positive {
            if v == 0 {
                return Err(NrpaError::Config(format!("`{key}` must be at least 1")));
            }
        }
        if self.window.is_multiple_of(2) {
            return Err(NrpaError::Config(format!(
                "`window` must be odd, got {}",
                self.window
            )));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(NrpaError::Config("`learning_rate` must be positive".into()));
        }
        if !(self.l2_weight >= 0.0 && self.l2_weight.is_finite()) {
            return Err(NrpaError::Config("`l2_weight` must be non-negative".into()));
        }
        Ok(())
    }

    /// Applies `key = value` lines on top of the defaults. Blank lines and
    /// `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| NrpaError::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            cfg.set(key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "word_dim" => self.word_dim = parse_value(key, value)?,
            "id_dim" => self.id_dim = parse_value(key, value)?,
            "num_filters" => self.num_filters = parse_value(key, value)?,
            "attention_dim" => self.attention_dim = parse_value(key, value)?,
            "window" => self.window = parse_value(key, value)?,
            "review_len" => self.review_len = parse_value(key, value)?,
            "reviews_per_owner" => self.reviews_per_owner = parse_value(key, value)?,
            "fm_factors" => self.fm_factors = parse_value(key, value)?,
            "activation" => {
                self.activation = Activation::parse(value)
                    .ok_or_else(|| NrpaError::Config(format!("bad value `{value}` for key `activation`")))?
            }
            "learning_rate" => self.learning_rate = parse_value(key, value)?,
            "batch_size" => self.batch_size = parse_value(key, value)?,
            "max_epochs" => self.max_epochs = parse_value(key, value)?,
            "patience" => self.patience = parse_value(key, value)?,
            "l2_weight" => self.l2_weight = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            "exclude_target" => self.exclude_target = parse_value(key, value)?,
            "ablation" => self.ablation = AblationSpec::parse(value)?,
            other => return Err(NrpaError::Config(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// Canonical text form, every key in [`CONFIG_KEYS`] order.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("word_dim", self.word_dim.to_string());
        put("id_dim", self.id_dim.to_string());
        put("num_filters", self.num_filters.to_string());
        put("attention_dim", self.attention_dim.to_string());
        put("window", self.window.to_string());
        put("review_len", self.review_len.to_string());
        put("reviews_per_owner", self.reviews_per_owner.to_string());
        put("fm_factors", self.fm_factors.to_string());
        put("activation", self.activation.name().to_string());
        put("learning_rate", format!("{:?}", self.learning_rate));
        put("batch_size", self.batch_size.to_string());
        put("max_epochs", self.max_epochs.to_string());
        put("patience", self.patience.to_string());
        put("l2_weight", format!("{:?}", self.l2_weight));
        put("seed", self.seed.to_string());
        put("exclude_target", self.exclude_target.to_string());
        put("ablation", self.ablation.to_string());
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reported_settings() {
        let c = TrainConfig::default();
        assert_eq!(
            (c.word_dim, c.id_dim, c.num_filters, c.attention_dim, c.window),
            (300, 32, 80, 80, 3)
        );
    }

    #[test]
    fn text_round_trip() {
        let c = TrainConfig {
            learning_rate: 0.0031,
            ablation: AblationSpec::NO_ATTENTION,
            activation: Activation::Tanh,
            ..TrainConfig::default()
        };
        let text = c.to_text();
        for key in CONFIG_KEYS {
            assert!(text.contains(&format!("{key} = ")), "{key}");
        }
        assert_eq!(TrainConfig::parse(&text).unwrap(), c);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = TrainConfig::parse("learning_rat = 0.1\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("learning_rat"), "{err}");
        let err = TrainConfig::parse("batch_size = many\n").unwrap_err().to_string();
        assert!(err.contains("batch_size"), "{err}");
        assert!(TrainConfig::parse("window = 4").is_err());
        assert!(TrainConfig::parse("learning_rate = 0").is_err());
        assert!(TrainConfig::parse("patience = 0").is_err());
    }

    #[test]
    fn comments_and_blanks() {
        let c = TrainConfig::parse("# tiny\n\nid_dim = 8 # small\n").unwrap();
        assert_eq!(c.id_dim, 8);
    }
}
