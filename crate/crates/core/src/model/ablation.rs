use std::fmt;

use crate::data::Side;
use crate::error::{NrpaError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AttentionMode {
    #[default]
    Personalized,
    /// Equal weight over unmasked atoms; the query pathway is bypassed.
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Word,
    Review,
}

/// Which attention sites run personalized attention. A site `(side, level)`
/// is uniform when either its side or its level is set to uniform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AblationSpec {
    pub user: AttentionMode,
    pub item: AttentionMode,
    pub word: AttentionMode,
    pub review: AttentionMode,
}

impl AblationSpec {
    pub const FULL: AblationSpec = AblationSpec {
        user: AttentionMode::Personalized,
        item: AttentionMode::Personalized,
        word: AttentionMode::Personalized,
        review: AttentionMode::Personalized,
    };

    pub const NO_ATTENTION: AblationSpec = AblationSpec {
        word: AttentionMode::Uniform,
        review: AttentionMode::Uniform,
        ..Self::FULL
    };

    /// The six variants compared by the ablation suite, in report order.
    pub fn variants() -> [(&'static str, AblationSpec); 6] {
        use AttentionMode::Uniform;
        let full = Self::FULL;
        [
            ("full", full),
            ("no-attention", Self::NO_ATTENTION),
            (
                "user-only",
                AblationSpec {
                    item: Uniform,
                    ..full
                },
            ),
            (
                "item-only",
                AblationSpec {
                    user: Uniform,
                    ..full
                },
            ),
            (
                "word-only",
                AblationSpec {
                    review: Uniform,
                    ..full
                },
            ),
            (
                "review-only",
                AblationSpec {
                    word: Uniform,
                    ..full
                },
            ),
        ]
    }

    pub fn site(&self, side: Side, level: Level) -> AttentionMode {
        let side_mode = match side {
            Side::User => self.user,
            Side::Item => self.item,
        };
        let level_mode = match level {
            Level::Word => self.word,
            Level::Review => self.review,
        };
        if side_mode == AttentionMode::Uniform || level_mode == AttentionMode::Uniform {
            AttentionMode::Uniform
        } else {
            AttentionMode::Personalized
        }
    }

    pub fn is_personalized(&self, side: Side, level: Level) -> bool {
        self.site(side, level) == AttentionMode::Personalized
    }

    /// Parses a comma list of `user|item|word|review=uniform|personalized`.
    /// The empty string and `none` are the full model.
    pub fn parse(spec: &str) -> Result<Self> {
        let mut out = AblationSpec::FULL;
        if spec.trim() == "none" {
            return Ok(out);
        }
        for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| NrpaError::Config(format!("ablation entry `{part}` lacks `=`")))?;
            let mode = match value.trim() {
                "uniform" => AttentionMode::Uniform,
                "personalized" => AttentionMode::Personalized,
                other => {
                    return Err(NrpaError::Config(format!(
                        "ablation mode `{other}` (expected uniform or personalized)"
                    )))
                }
            };
            match key.trim() {
                "user" => out.user = mode,
                "item" => out.item = mode,
                "word" => out.word = mode,
                "review" => out.review = mode,
                other => {
                    return Err(NrpaError::Config(format!(
                        "ablation site `{other}` (expected user, item, word or review)"
                    )))
                }
            }
        }
        Ok(out)
    }
}

impl fmt::Display for AblationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for (name, mode) in [
            ("user", self.user),
            ("item", self.item),
            ("word", self.word),
            ("review", self.review),
        ] {
            if mode == AttentionMode::Uniform {
                parts.push(format!("{name}=uniform"));
            }
        }
        if parts.is_empty() {
            f.write_str("none")
        } else {
            f.write_str(&parts.join(","))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_compose() {
        assert_eq!(AblationSpec::parse("").unwrap(), AblationSpec::FULL);
        assert_eq!(
            AblationSpec::parse("word=uniform,review=uniform").unwrap(),
            AblationSpec::NO_ATTENTION
        );
        let s = AblationSpec::parse("user=uniform").unwrap();
        assert!(!s.is_personalized(Side::User, Level::Word));
        assert!(s.is_personalized(Side::Item, Level::Review));
        assert!(AblationSpec::parse("users=uniform").is_err());
        assert!(AblationSpec::parse("user=flat").is_err());
        assert!(AblationSpec::parse("user").is_err());
    }

    #[test]
    fn display_round_trips() {
        for (_, v) in AblationSpec::variants() {
            assert_eq!(AblationSpec::parse(&v.to_string()).unwrap(), v);
        }
    }

    #[test]
    fn uniform_user_and_item_equal_no_attention_sitewise() {
        let both = AblationSpec::parse("user=uniform,item=uniform").unwrap();
        for side in [Side::User, Side::Item] {
            for level in [Level::Word, Level::Review] {
                assert_eq!(
                    both.site(side, level),
                    AblationSpec::NO_ATTENTION.site(side, level)
                );
            }
        }
    }
}
