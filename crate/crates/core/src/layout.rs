//! Electrode montage: the 32-channel 10-20 layout and its region grouping.

use crate::error::{Error, Result};
use std::collections::HashMap;
use std::fmt;

/// Scalp region, following the 10-20 prefix convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Region {
    Prefrontal,
    Frontal,
    Central,
    Temporal,
    Parietal,
    Occipital,
}

impl Region {
    pub const ALL: [Region; 6] = [
        Region::Prefrontal,
        Region::Frontal,
        Region::Central,
        Region::Temporal,
        Region::Parietal,
        Region::Occipital,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Region::Prefrontal => "prefrontal",
            Region::Frontal => "frontal",
            Region::Central => "central",
            Region::Temporal => "temporal",
            Region::Parietal => "parietal",
            Region::Occipital => "occipital",
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Electrode order of the 32-channel recording. Positions 24 (C4) and 26
/// (CP6) complete the standard montage.
const ELECTRODES: [(&str, Region); 32] = [
    ("Fp1", Region::Prefrontal),
    ("AF3", Region::Prefrontal),
    ("F3", Region::Frontal),
    ("F7", Region::Frontal),
    ("FC5", Region::Frontal),
    ("FC1", Region::Frontal),
    ("C3", Region::Central),
    ("T7", Region::Temporal),
    ("CP5", Region::Parietal),
    ("CP1", Region::Parietal),
    ("P3", Region::Parietal),
    ("P7", Region::Parietal),
    ("PO3", Region::Occipital),
    ("O1", Region::Occipital),
    ("Oz", Region::Occipital),
    ("Pz", Region::Parietal),
    ("Fp2", Region::Prefrontal),
    ("AF4", Region::Prefrontal),
    ("Fz", Region::Frontal),
    ("F4", Region::Frontal),
    ("F8", Region::Frontal),
    ("FC6", Region::Frontal),
    ("FC2", Region::Frontal),
    ("Cz", Region::Central),
    ("C4", Region::Central),
    ("T8", Region::Temporal),
    ("CP6", Region::Parietal),
    ("CP2", Region::Parietal),
    ("P4", Region::Parietal),
    ("P8", Region::Parietal),
    ("PO4", Region::Occipital),
    ("O2", Region::Occipital),
];

/// Ordered electrode names plus the name → region map.
///
/// Immutable after construction; share freely across threads.
#[derive(Debug, Clone)]
pub struct ChannelLayout {
    names: Vec<String>,
    regions: Vec<Region>,
    index: HashMap<String, usize>,
}

impl ChannelLayout {
    /// Build a layout from parallel name/region lists. Names must be unique.
    pub fn new(names: Vec<String>, regions: Vec<Region>) -> Result<Self> {
        if names.len() != regions.len() {
            return Err(Error::Size(format!(
                "layout has {} names but {} regions",
                names.len(),
                regions.len()
            )));
        }
        let mut index = HashMap::with_capacity(names.len());
        for (i, name) in names.iter().enumerate() {
            if index.insert(name.clone(), i).is_some() {
                return Err(Error::Validation(format!(
                    "duplicate electrode name {name:?}"
                )));
            }
        }
        Ok(ChannelLayout {
            names,
            regions,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, channel: usize) -> Option<&str> {
        self.names.get(channel).map(String::as_str)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn region_of(&self, name: &str) -> Option<Region> {
        self.index_of(name).map(|i| self.regions[i])
    }

    pub fn region_of_index(&self, channel: usize) -> Option<Region> {
        self.regions.get(channel).copied()
    }

    /// Channel indices belonging to `region`, in layout order.
    pub fn channels_in(&self, region: Region) -> Vec<usize> {
        self.regions
            .iter()
            .enumerate()
            .filter(|(_, r)| **r == region)
            .map(|(i, _)| i)
            .collect()
    }
}

/// The fixed 32-electrode layout with its six-region grouping.
pub fn default_channel_layout() -> ChannelLayout {
    let names = ELECTRODES.iter().map(|(n, _)| n.to_string()).collect();
    let regions = ELECTRODES.iter().map(|(_, r)| *r).collect();
    ChannelLayout::new(names, regions).expect("static electrode table is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_electrode_is_fp1() {
        let layout = default_channel_layout();
        assert_eq!(layout.name(0), Some("Fp1"));
    }

    #[test]
    fn o1_is_occipital() {
        let layout = default_channel_layout();
        assert_eq!(layout.region_of("O1"), Some(Region::Occipital));
    }

    #[test]
    fn regions_are_nonempty_and_cover_all_channels() {
        let layout = default_channel_layout();
        let mut total = 0;
        for region in Region::ALL {
            let members = layout.channels_in(region);
            assert!(!members.is_empty(), "{region} has no electrodes");
            total += members.len();
        }
        assert_eq!(total, 32);
    }

    #[test]
    fn region_sizes_match_grouping() {
        let layout = default_channel_layout();
        let size = |r| layout.channels_in(r).len();
        assert_eq!(size(Region::Prefrontal), 4);
        assert_eq!(size(Region::Frontal), 9);
        assert_eq!(size(Region::Central), 3);
        assert_eq!(size(Region::Temporal), 2);
        assert_eq!(size(Region::Parietal), 9);
        assert_eq!(size(Region::Occipital), 5);
    }

    #[test]
    fn thirty_named_electrodes_keep_their_relative_order() {
        // C4 and CP6 complete the montage; the remaining 30 names appear in
        // their published order.
        let published = [
            "Fp1", "AF3", "F3", "F7", "FC5", "FC1", "C3", "T7", "CP5", "CP1", "P3", "P7", "PO3",
            "O1", "Oz", "Pz", "Fp2", "AF4", "Fz", "F4", "F8", "FC6", "FC2", "Cz", "T8", "CP2",
            "P4", "P8", "PO4", "O2",
        ];
        let layout = default_channel_layout();
        let filtered: Vec<&str> = layout
            .names()
            .iter()
            .map(String::as_str)
            .filter(|n| *n != "C4" && *n != "CP6")
            .collect();
        assert_eq!(filtered, published);
        assert_eq!(layout.index_of("C4"), Some(24));
        assert_eq!(layout.index_of("CP6"), Some(26));
    }

    #[test]
    fn lookups_are_total_over_names() {
        let layout = default_channel_layout();
        for (i, name) in layout.names().to_vec().iter().enumerate() {
            assert_eq!(layout.index_of(name), Some(i));
            assert!(layout.region_of(name).is_some());
        }
        assert_eq!(layout.index_of("XX"), None);
    }

    #[test]
    fn duplicate_names_rejected() {
        let names = vec!["A".to_string(), "A".to_string()];
        let regions = vec![Region::Frontal, Region::Central];
        assert!(ChannelLayout::new(names, regions).is_err());
    }
}
