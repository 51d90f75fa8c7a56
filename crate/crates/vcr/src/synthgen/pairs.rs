use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// The eight binary feature pairs. Feature A is the first member of each
/// pair, feature B the second.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeaturePair {
    RedGreen,
    LeftRight,
    OneMany,
    HorizVert,
    SquareCircle,
    EmptyFilled,
    StripedSolid,
    TopBottom,
}

impl FeaturePair {
    pub const ALL: [FeaturePair; 8] = [
        FeaturePair::RedGreen,
        FeaturePair::LeftRight,
        FeaturePair::OneMany,
        FeaturePair::HorizVert,
        FeaturePair::SquareCircle,
        FeaturePair::EmptyFilled,
        FeaturePair::StripedSolid,
        FeaturePair::TopBottom,
    ];

    /// Pairs whose features do not depend on where the object sits.
    pub const NON_POSITIONAL: [FeaturePair; 6] = [
        FeaturePair::RedGreen,
        FeaturePair::OneMany,
        FeaturePair::HorizVert,
        FeaturePair::SquareCircle,
        FeaturePair::EmptyFilled,
        FeaturePair::StripedSolid,
    ];

    pub fn id(self) -> &'static str {
        match self {
            FeaturePair::RedGreen => "red_green",
            FeaturePair::LeftRight => "left_right",
            FeaturePair::OneMany => "one_many",
            FeaturePair::HorizVert => "horiz_vert",
            FeaturePair::SquareCircle => "square_circle",
            FeaturePair::EmptyFilled => "empty_filled",
            FeaturePair::StripedSolid => "striped_solid",
            FeaturePair::TopBottom => "top_bottom",
        }
    }

    /// Concept names used when auditing a model trained on this pair.
    /// Hollow/filled and striped/solid use the names that a vision-language
    /// model actually associates with those renderings.
    pub fn concept_names(self) -> (&'static str, &'static str) {
        match self {
            FeaturePair::RedGreen => ("red", "green"),
            FeaturePair::LeftRight => ("left", "right"),
            FeaturePair::OneMany => ("one", "many"),
            FeaturePair::HorizVert => ("horizontal", "vertical"),
            FeaturePair::SquareCircle => ("square", "circle"),
            FeaturePair::EmptyFilled => ("loops", "spots"),
            FeaturePair::StripedSolid => ("bars", "cube"),
            FeaturePair::TopBottom => ("top", "bottom"),
        }
    }

    pub fn is_positional(self) -> bool {
        matches!(self, FeaturePair::LeftRight | FeaturePair::TopBottom)
    }

    /// Stable small integer used in seed derivation.
    pub fn index(self) -> u64 {
        Self::ALL.iter().position(|&p| p == self).unwrap() as u64
    }
}

impl fmt::Display for FeaturePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for FeaturePair {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|p| p.id() == s)
            .ok_or_else(|| format!("unknown feature pair {s:?}"))
    }
}

/// Which member of a pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Feature {
    A,
    B,
}

impl Feature {
    pub fn as_str(self) -> &'static str {
        match self {
            Feature::A => "A",
            Feature::B => "B",
        }
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}
