//! Decides, from a video's subtitle list alone, which subset the video goes
//! into and which single track (if any) to download.

use serde::{Deserialize, Serialize};

use crate::model::{SubtitleDescriptor, SubtitleKind};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "outcome", content = "language", rename_all = "snake_case")]
pub enum Classification {
    ManualLabeled(String),
    AutomaticLabeled(String),
    Unlabeled,
}

impl Classification {
    pub fn language(&self) -> Option<&str> {
        match self {
            Self::ManualLabeled(l) | Self::AutomaticLabeled(l) => Some(l),
            Self::Unlabeled => None,
        }
    }

    /// The track to fetch for a labeled outcome.
    pub fn chosen_track(&self) -> Option<SubtitleDescriptor> {
        match self {
            Self::ManualLabeled(l) => Some(SubtitleDescriptor::manual(l)),
            Self::AutomaticLabeled(l) => Some(SubtitleDescriptor::automatic(l)),
            Self::Unlabeled => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResolveMode {
    /// A manual track accompanied only by automatic tracks in the same
    /// language still counts as manual.
    #[default]
    Lenient,
    /// Only a lone manual or a lone automatic track is labeled.
    Strict,
}

/// Total, order-independent classification of a subtitle list.
pub fn resolve_subtitles(descriptors: &[SubtitleDescriptor], mode: ResolveMode) -> Classification {
    let manual: Vec<&SubtitleDescriptor> = descriptors
        .iter()
        .filter(|d| d.kind == SubtitleKind::Manual)
        .collect();
    let automatic: Vec<&SubtitleDescriptor> = descriptors
        .iter()
        .filter(|d| d.kind == SubtitleKind::Automatic)
        .collect();

    match (manual.as_slice(), automatic.as_slice()) {
        ([only], []) => Classification::ManualLabeled(only.language.clone()),
        ([], [only]) => Classification::AutomaticLabeled(only.language.clone()),
        ([m], autos)
            if mode == ResolveMode::Lenient && autos.iter().all(|a| a.language == m.language) =>
        {
            Classification::ManualLabeled(m.language.clone())
        }
        _ => Classification::Unlabeled,
    }
}
