//! The nine prediction targets evaluated per ordering method.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::labels::{Category, Description, LabelRow};
use crate::state::TEAM_SIZE;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictionTarget {
    Category,
    Unum,
    /// Receiver unum, restricted to pass events.
    UnumPasses,
    Index,
    /// Receiver slot in the teammate ordering, restricted to pass events.
    IndexPasses,
    Description,
    TargetPosition,
    KickAngle,
    KickSpeed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "width")]
pub enum TargetKind {
    Classification(usize),
    Regression(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub enum TargetValue {
    Class(usize),
    Values(Vec<f64>),
}

impl PredictionTarget {
    pub const ALL: [PredictionTarget; 9] = [
        PredictionTarget::Category,
        PredictionTarget::Unum,
        PredictionTarget::UnumPasses,
        PredictionTarget::Index,
        PredictionTarget::IndexPasses,
        PredictionTarget::Description,
        PredictionTarget::TargetPosition,
        PredictionTarget::KickAngle,
        PredictionTarget::KickSpeed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PredictionTarget::Category => "category",
            PredictionTarget::Unum => "unum",
            PredictionTarget::UnumPasses => "unum_passes",
            PredictionTarget::Index => "index",
            PredictionTarget::IndexPasses => "index_passes",
            PredictionTarget::Description => "description",
            PredictionTarget::TargetPosition => "target_position",
            PredictionTarget::KickAngle => "kick_angle",
            PredictionTarget::KickSpeed => "kick_speed",
        }
    }

    pub fn kind(self) -> TargetKind {
        match self {
            PredictionTarget::Category => TargetKind::Classification(Category::COUNT),
            PredictionTarget::Unum
            | PredictionTarget::UnumPasses
            | PredictionTarget::Index
            | PredictionTarget::IndexPasses => TargetKind::Classification(TEAM_SIZE),
            PredictionTarget::Description => TargetKind::Classification(Description::COUNT),
            PredictionTarget::TargetPosition => TargetKind::Regression(2),
            PredictionTarget::KickAngle | PredictionTarget::KickSpeed => TargetKind::Regression(1),
        }
    }

    /// Whether a labelled row takes part in this target's train/test set.
    pub fn includes(self, label: &LabelRow) -> bool {
        match self {
            PredictionTarget::UnumPasses | PredictionTarget::IndexPasses => {
                label.category == Category::Pass
            }
            _ => true,
        }
    }

    pub fn value(self, label: &LabelRow) -> TargetValue {
        match self {
            PredictionTarget::Category => TargetValue::Class(label.category.code() as usize),
            PredictionTarget::Unum | PredictionTarget::UnumPasses => {
                TargetValue::Class(label.target_unum as usize - 1)
            }
            PredictionTarget::Index | PredictionTarget::IndexPasses => {
                TargetValue::Class(label.target_index as usize)
            }
            PredictionTarget::Description => TargetValue::Class(label.description.code() as usize),
            PredictionTarget::TargetPosition => {
                TargetValue::Values(vec![label.target_position.x, label.target_position.y])
            }
            PredictionTarget::KickAngle => TargetValue::Values(vec![label.first_kick_angle]),
            PredictionTarget::KickSpeed => TargetValue::Values(vec![label.first_kick_speed]),
        }
    }

    pub fn valid_names() -> String {
        Self::ALL.map(|t| t.name()).join(", ")
    }
}

impl fmt::Display for PredictionTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PredictionTarget {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| format!("unknown target {s:?}; valid targets: {}", Self::valid_names()))
    }
}
