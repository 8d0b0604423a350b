//! Frequency band registries.
//!
//! Two band sets are used downstream: the four named waves (theta, alpha,
//! beta, gamma) for per-trial regional statistics, and the five half-open
//! intervals bounded by the edges [4, 8, 12, 16, 25, 45] for sliding-window
//! feature vectors. Intervals are half-open `[low, high)` so every frequency
//! belongs to at most one band.

use crate::error::{Error, Result};
use std::fmt;
use std::str::FromStr;

/// One frequency band: `[low_hz, high_hz)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Band {
    pub name: String,
    pub low_hz: f64,
    pub high_hz: f64,
}

impl Band {
    pub fn new(name: impl Into<String>, low_hz: f64, high_hz: f64) -> Self {
        Band {
            name: name.into(),
            low_hz,
            high_hz,
        }
    }

    pub fn contains(&self, freq_hz: f64) -> bool {
        self.low_hz <= freq_hz && freq_hz < self.high_hz
    }
}

/// Ordered, non-overlapping list of bands.
#[derive(Debug, Clone, PartialEq)]
pub struct BandSet {
    bands: Vec<Band>,
}

impl BandSet {
    pub fn new(bands: Vec<Band>) -> Result<Self> {
        if bands.is_empty() {
            return Err(Error::Config("band set must be non-empty".into()));
        }
        for band in &bands {
            if !band.low_hz.is_finite() || !band.high_hz.is_finite() || band.low_hz >= band.high_hz
            {
                return Err(Error::Config(format!(
                    "band {:?} needs finite low < high, got [{}, {})",
                    band.name, band.low_hz, band.high_hz
                )));
            }
        }
        for pair in bands.windows(2) {
            if pair[1].low_hz < pair[0].high_hz {
                return Err(Error::Config(format!(
                    "bands {:?} and {:?} overlap or are out of order",
                    pair[0].name, pair[1].name
                )));
            }
        }
        Ok(BandSet { bands })
    }

    pub fn bands(&self) -> &[Band] {
        &self.bands
    }

    pub fn len(&self) -> usize {
        self.bands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bands.is_empty()
    }

    /// Index of the band containing `freq_hz`, if any.
    pub fn band_of(&self, freq_hz: f64) -> Option<usize> {
        self.bands.iter().position(|b| b.contains(freq_hz))
    }
}

/// Which registry to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BandSelector {
    /// Theta 4-8, alpha 8-16, beta 16-32, gamma 32-64.
    TableOne,
    /// Five intervals from the edges [4, 8, 12, 16, 25, 45].
    Meta,
}

impl FromStr for BandSelector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table_one" => Ok(BandSelector::TableOne),
            "meta" => Ok(BandSelector::Meta),
            other => Err(Error::Config(format!(
                "unknown band set {other:?}; expected \"table_one\" or \"meta\""
            ))),
        }
    }
}

impl fmt::Display for BandSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BandSelector::TableOne => f.write_str("table_one"),
            BandSelector::Meta => f.write_str("meta"),
        }
    }
}

const META_EDGES: [f64; 6] = [4.0, 8.0, 12.0, 16.0, 25.0, 45.0];

/// Build the selected band registry.
pub fn band_set(selector: BandSelector) -> BandSet {
    let bands = match selector {
        BandSelector::TableOne => vec![
            Band::new("theta", 4.0, 8.0),
            Band::new("alpha", 8.0, 16.0),
            Band::new("beta", 16.0, 32.0),
            Band::new("gamma", 32.0, 64.0),
        ],
        BandSelector::Meta => META_EDGES
            .windows(2)
            .map(|edge| Band::new(format!("{:.0}_{:.0}", edge[0], edge[1]), edge[0], edge[1]))
            .collect(),
    };
    BandSet::new(bands).expect("static band tables are valid")
}
