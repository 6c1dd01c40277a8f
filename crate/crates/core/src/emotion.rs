//! The seven basic emotions and their valence partition.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Basic emotion label.
///
/// Variants are declared in alphabetical order, which is the canonical
/// ordering used for matrix indexing, CSV columns and every iteration over
/// the label set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Emotion {
    Angry,
    Disgust,
    Fear,
    Happy,
    Neutral,
    Sad,
    Surprise,
}

/// Sign of an emotion's contribution to perceived environmental valence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Valence {
    Positive,
    Negative,
}

impl Emotion {
    pub const COUNT: usize = 7;

    /// All emotions in canonical order.
    pub const ALL: [Emotion; Emotion::COUNT] = [
        Emotion::Angry,
        Emotion::Disgust,
        Emotion::Fear,
        Emotion::Happy,
        Emotion::Neutral,
        Emotion::Sad,
        Emotion::Surprise,
    ];

    pub const POSITIVE: [Emotion; 3] = [Emotion::Happy, Emotion::Neutral, Emotion::Surprise];
    pub const NEGATIVE: [Emotion; 4] = [Emotion::Angry, Emotion::Disgust, Emotion::Fear, Emotion::Sad];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    #[inline]
    pub fn from_index(index: usize) -> Option<Emotion> {
        Emotion::ALL.get(index).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Emotion::Angry => "angry",
            Emotion::Disgust => "disgust",
            Emotion::Fear => "fear",
            Emotion::Happy => "happy",
            Emotion::Neutral => "neutral",
            Emotion::Sad => "sad",
            Emotion::Surprise => "surprise",
        }
    }

    pub fn valence(self) -> Valence {
        match self {
            Emotion::Happy | Emotion::Neutral | Emotion::Surprise => Valence::Positive,
            Emotion::Angry | Emotion::Disgust | Emotion::Fear | Emotion::Sad => Valence::Negative,
        }
    }

    #[inline]
    pub fn is_positive(self) -> bool {
        self.valence() == Valence::Positive
    }

    #[inline]
    pub fn is_negative(self) -> bool {
        self.valence() == Valence::Negative
    }
}

impl fmt::Display for Emotion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Emotion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Emotion::ALL
            .into_iter()
            .find(|e| e.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Parse(format!("unknown emotion '{s}'")))
    }
}
