//! Median-split labeling: 1-9 ratings to binary flags and quadrants.

use crate::error::{Error, Result};
use crate::tensor::Ratings;
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

/// One of the four arousal x valence quadrants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quadrant {
    /// High arousal, high valence.
    Hahv,
    /// High arousal, low valence.
    Halv,
    /// Low arousal, high valence.
    Lahv,
    /// Low arousal, low valence.
    Lalv,
}

impl Quadrant {
    /// The deterministic map from the two binary flags.
    pub fn from_flags(valence_positive: bool, arousal_positive: bool) -> Self {
        match (arousal_positive, valence_positive) {
            (true, true) => Quadrant::Hahv,
            (true, false) => Quadrant::Halv,
            (false, true) => Quadrant::Lahv,
            (false, false) => Quadrant::Lalv,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Quadrant::Hahv => "HAHV",
            Quadrant::Halv => "HALV",
            Quadrant::Lahv => "LAHV",
            Quadrant::Lalv => "LALV",
        }
    }

    /// Stable small-integer encoding for classifiers.
    pub fn class_index(&self) -> usize {
        match self {
            Quadrant::Hahv => 0,
            Quadrant::Halv => 1,
            Quadrant::Lahv => 2,
            Quadrant::Lalv => 3,
        }
    }
}

impl fmt::Display for Quadrant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Quadrant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "HAHV" => Ok(Quadrant::Hahv),
            "HALV" => Ok(Quadrant::Halv),
            "LAHV" => Ok(Quadrant::Lahv),
            "LALV" => Ok(Quadrant::Lalv),
            other => Err(Error::Validation(format!("unknown quadrant {other:?}"))),
        }
    }
}

/// Per-trial binary flags plus the derived quadrant.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelSet {
    valence_positive: Vec<bool>,
    arousal_positive: Vec<bool>,
}

impl LabelSet {
    pub fn new(valence_positive: Vec<bool>, arousal_positive: Vec<bool>) -> Result<Self> {
        if valence_positive.len() != arousal_positive.len() {
            return Err(Error::Size(format!(
                "{} valence flags but {} arousal flags",
                valence_positive.len(),
                arousal_positive.len()
            )));
        }
        Ok(LabelSet {
            valence_positive,
            arousal_positive,
        })
    }

    pub fn len(&self) -> usize {
        self.valence_positive.len()
    }

    pub fn is_empty(&self) -> bool {
        self.valence_positive.is_empty()
    }

    pub fn valence_positive(&self) -> &[bool] {
        &self.valence_positive
    }

    pub fn arousal_positive(&self) -> &[bool] {
        &self.arousal_positive
    }

    pub fn quadrant(&self, trial: usize) -> Quadrant {
        Quadrant::from_flags(self.valence_positive[trial], self.arousal_positive[trial])
    }

    /// CSV: `trial,valence_positive,arousal_positive,quadrant`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = File::create(path)?;
        let mut out = BufWriter::new(file);
        writeln!(out, "trial,valence_positive,arousal_positive,quadrant")?;
        for trial in 0..self.len() {
            writeln!(
                out,
                "{trial},{},{},{}",
                self.valence_positive[trial],
                self.arousal_positive[trial],
                self.quadrant(trial)
            )?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == "trial,valence_positive,arousal_positive,quadrant" => {}
            Some((_, h)) => {
                return Err(Error::Format(format!("unexpected labels header {h:?}")));
            }
            None => return Err(Error::Format("labels file is empty".into())),
        }
        let mut rows: Vec<(usize, bool, bool)> = Vec::new();
        for (lineno, raw) in lines {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 4 {
                return Err(Error::Validation(format!(
                    "row {}: expected 4 fields",
                    lineno + 1
                )));
            }
            let trial: usize = fields[0].parse().map_err(|_| {
                Error::Validation(format!("row {}: bad trial index", lineno + 1))
            })?;
            let valence: bool = fields[1].parse().map_err(|_| {
                Error::Validation(format!("row {}: bad valence flag", lineno + 1))
            })?;
            let arousal: bool = fields[2].parse().map_err(|_| {
                Error::Validation(format!("row {}: bad arousal flag", lineno + 1))
            })?;
            let quadrant: Quadrant = fields[3].parse()?;
            if quadrant != Quadrant::from_flags(valence, arousal) {
                return Err(Error::Validation(format!(
                    "row {}: quadrant {} does not match flags",
                    lineno + 1,
                    quadrant
                )));
            }
            rows.push((trial, valence, arousal));
        }
        rows.sort_by_key(|(trial, _, _)| *trial);
        for (expected, (trial, _, _)) in rows.iter().enumerate() {
            if *trial != expected {
                return Err(Error::Validation(format!(
                    "trial {expected} missing or duplicated in labels"
                )));
            }
        }
        LabelSet::new(
            rows.iter().map(|(_, v, _)| *v).collect(),
            rows.iter().map(|(_, _, a)| *a).collect(),
        )
    }
}

/// Median as the linear-interpolated middle of the sorted values.
pub fn median(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Size("median of an empty list".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("ratings are finite"));
    let n = sorted.len();
    Ok(if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    })
}

/// Flag each value as positive when it is >= the median. Ties at the median
/// count as positive.
pub fn median_split(values: &[f64]) -> Result<Vec<bool>> {
    let m = median(values)?;
    Ok(values.iter().map(|&v| v >= m).collect())
}

/// Median-split both rating scales. The median is taken over whatever set of
/// trials the caller passes in, so pooling across subjects is the caller's
/// choice.
pub fn make_labels(ratings: &Ratings) -> Result<LabelSet> {
    LabelSet::new(
        median_split(ratings.valence())?,
        median_split(ratings.arousal())?,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn split_against_interpolated_median() {
        // Median of [3,5,7,9] is 6.
        let flags = median_split(&[3.0, 5.0, 7.0, 9.0]).unwrap();
        assert_eq!(flags, vec![false, false, true, true]);
    }

    #[test]
    fn all_equal_values_are_all_positive() {
        let flags = median_split(&[4.0; 7]).unwrap();
        assert!(flags.iter().all(|&f| f));
    }

    #[test]
    fn empty_input_is_size_error() {
        assert!(matches!(median_split(&[]), Err(Error::Size(_))));
    }

    #[test]
    fn split_partitions_every_value() {
        let mut rng = crate::rng::stream_rng(21, &[0]);
        let values: Vec<f64> = (0..1000).map(|_| rng.random_range(1.0..9.0)).collect();
        let flags = median_split(&values).unwrap();
        let positives = flags.iter().filter(|&&f| f).count();
        let negatives = flags.iter().filter(|&&f| !f).count();
        assert_eq!(positives + negatives, 1000);
        assert!(positives > 0 && negatives > 0);
        // Brute-force recount against the definition.
        let m = median(&values).unwrap();
        let recount = values.iter().filter(|&&v| v >= m).count();
        assert_eq!(positives, recount);
    }

    #[test]
    fn quadrants_follow_flag_pairs() {
        assert_eq!(Quadrant::from_flags(true, true), Quadrant::Hahv);
        assert_eq!(Quadrant::from_flags(false, true), Quadrant::Halv);
        assert_eq!(Quadrant::from_flags(true, false), Quadrant::Lahv);
        assert_eq!(Quadrant::from_flags(false, false), Quadrant::Lalv);
    }

    #[test]
    fn labels_cover_every_trial() {
        let ratings = Ratings::new(
            vec![2.0, 8.0, 5.0, 6.0, 3.0],
            vec![7.0, 1.0, 5.0, 5.0, 9.0],
        )
        .unwrap();
        let labels = make_labels(&ratings).unwrap();
        assert_eq!(labels.len(), 5);
        let mut counts = std::collections::HashMap::new();
        for trial in 0..labels.len() {
            *counts.entry(labels.quadrant(trial)).or_insert(0usize) += 1;
        }
        assert_eq!(counts.values().sum::<usize>(), 5);
    }

    #[test]
    fn fixed_threshold_comparison_is_monotone() {
        // Against a fixed threshold, raising a value never turns positive
        // into negative.
        let threshold = 5.0;
        let mut rng = crate::rng::stream_rng(22, &[0]);
        for _ in 0..200 {
            let v: f64 = rng.random_range(1.0..9.0);
            let raised = v + rng.random_range(0.0..3.0);
            let before = v >= threshold;
            let after = raised >= threshold;
            assert!(!before || after);
        }
    }

    #[test]
    fn shifting_all_ratings_keeps_flags() {
        let mut rng = crate::rng::stream_rng(23, &[0]);
        let values: Vec<f64> = (0..101).map(|_| rng.random_range(1.0..8.0)).collect();
        let shifted: Vec<f64> = values.iter().map(|v| v + 0.75).collect();
        assert_eq!(
            median_split(&values).unwrap(),
            median_split(&shifted).unwrap()
        );
    }

    #[test]
    fn labels_csv_round_trip() {
        let labels = LabelSet::new(
            vec![true, false, true],
            vec![false, false, true],
        )
        .unwrap();
        let path = tempfile::Builder::new()
            .prefix("labels")
            .suffix(".csv")
            .tempfile()
            .unwrap()
            .into_temp_path()
            .keep()
            .unwrap();
        labels.write_csv(&path).unwrap();
        let back = LabelSet::read_csv(&path).unwrap();
        assert_eq!(back, labels);
        std::fs::remove_file(&path).ok();
    }
}
