use std::fmt::Write as _;

use crate::error::{NrpaError, Result};
use crate::rng::SeededRng;

/// Index partition of an interaction table into train/validation/test.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetSplit {
    pub seed: u64,
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitPart {
    Train,
    Validation,
    Test,
}

impl SplitPart {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "train" => Some(SplitPart::Train),
            "val" | "validation" => Some(SplitPart::Validation),
            "test" => Some(SplitPart::Test),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SplitPart::Train => "train",
            SplitPart::Validation => "val",
            SplitPart::Test => "test",
        }
    }
}

impl DatasetSplit {
    pub fn part(&self, part: SplitPart) -> &[usize] {
        match part {
            SplitPart::Train => &self.train,
            SplitPart::Validation => &self.validation,
            SplitPart::Test => &self.test,
        }
    }

    pub fn len(&self) -> usize {
        self.train.len() + self.validation.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Text manifest: `seed=`, `train=`, `validation=`, `test=` lines with
    /// comma-separated indices.
    pub fn to_manifest(&self) -> String {
        let mut s = format!("seed={}\n", self.seed);
        for (name, idx) in [
            ("train", &self.train),
            ("validation", &self.validation),
            ("test", &self.test),
        ] {
            s.push_str(name);
            s.push('=');
            for (k, i) in idx.iter().enumerate() {
                if k > 0 {
                    s.push(',');
                }
                let _ = write!(s, "{i}");
            }
            s.push('\n');
        }
        s
    }

    /// Parses a manifest and checks that it partitions `0..total`.
    pub fn from_manifest(text: &str, total: usize) -> Result<Self> {
        let bad = |r: String| NrpaError::format("split manifest", r);
        let mut seed = None;
        let mut parts: [Option<Vec<usize>>; 3] = [None, None, None];
        for line in text.lines() {
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("line without `=`: {line:.40}")))?;
            let slot = match key {
                "seed" => {
                    seed = Some(value.parse::<u64>().map_err(|_| bad("bad seed".into()))?);
                    continue;
                }
                "train" => 0,
                "validation" => 1,
                "test" => 2,
                other => return Err(bad(format!("unknown key `{other:.40}`"))),
            };
            let list = if value.is_empty() {
                Vec::new()
            } else {
                value
                    .split(',')
                    .map(|v| v.parse::<usize>().map_err(|_| bad(format!("bad index in {key}"))))
                    .collect::<Result<Vec<_>>>()?
            };
            if parts[slot].replace(list).is_some() {
                return Err(bad(format!("duplicate key `{key}`")));
            }
        }
        let [train, validation, test] = parts;
        let split = DatasetSplit {
            seed: seed.ok_or_else(|| bad("missing seed".into()))?,
            train: train.ok_or_else(|| bad("missing train".into()))?,
            validation: validation.ok_or_else(|| bad("missing validation".into()))?,
            test: test.ok_or_else(|| bad("missing test".into()))?,
        };
        let mut seen = vec![false; total];
        for &i in split.train.iter().chain(&split.validation).chain(&split.test) {
            match seen.get_mut(i) {
                Some(s) if !*s => *s = true,
                Some(_) => return Err(bad(format!("index {i} listed twice"))),
                None => return Err(bad(format!("index {i} out of range for {total} interactions"))),
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(bad("manifest does not cover every interaction".into()));
        }
        Ok(split)
    }
}

/// Seeded 80/10/10 partition of `n` interactions: shuffle, then the first
/// `floor(0.8 n)` go to train, the next `floor(0.1 n)` to validation and the
/// remainder to test.
pub fn split_dataset(n: usize, seed: u64) -> Result<DatasetSplit> {
    if n < 10 {
        return Err(NrpaError::Input(format!(
            "need at least 10 interactions to split, got {n}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    SeededRng::new(seed).shuffle(&mut order);
    let n_train = n * 8 / 10;
    let n_val = n / 10;
    let test = order.split_off(n_train + n_val);
    let validation = order.split_off(n_train);
    Ok(DatasetSplit {
        seed,
        train: order,
        validation,
        test,
    })
}
