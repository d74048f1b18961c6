//! The closed label vocabulary: six entity classes in BIO form plus `O`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::CorpusError;

/// Number of distinct labels (`O` plus `B-`/`I-` for each class).
pub const NUM_LABELS: usize = 13;

/// Entity classes, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EntityClass {
    #[serde(rename = "PER")]
    Person,
    #[serde(rename = "LOC")]
    Location,
    #[serde(rename = "GRP")]
    Group,
    #[serde(rename = "CORP")]
    Corporation,
    #[serde(rename = "PROD")]
    Product,
    #[serde(rename = "CW")]
    CreativeWork,
}

impl EntityClass {
    pub const ALL: [EntityClass; 6] = [
        EntityClass::Person,
        EntityClass::Location,
        EntityClass::Group,
        EntityClass::Corporation,
        EntityClass::Product,
        EntityClass::CreativeWork,
    ];

    /// Position of the class in [`EntityClass::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EntityClass::Person => "PER",
            EntityClass::Location => "LOC",
            EntityClass::Group => "GRP",
            EntityClass::Corporation => "CORP",
            EntityClass::Product => "PROD",
            EntityClass::CreativeWork => "CW",
        }
    }
}

impl fmt::Display for EntityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EntityClass {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EntityClass::ALL.into_iter().find(|c| c.as_str() == s).ok_or_else(|| CorpusError::UnknownClass(s.to_string()))
    }
}

/// A single BIO label.
///
/// Integer ids are fixed: `O` is 0, then `B-X`/`I-X` pairs follow in class
/// order (`B-PER`=1, `I-PER`=2, ..., `B-CW`=11, `I-CW`=12).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BioTag {
    O,
    B(EntityClass),
    I(EntityClass),
}

impl BioTag {
    /// All labels in id order.
    pub fn all() -> [BioTag; NUM_LABELS] {
        let mut out = [BioTag::O; NUM_LABELS];
        for class in EntityClass::ALL {
            out[1 + 2 * class.index()] = BioTag::B(class);
            out[2 + 2 * class.index()] = BioTag::I(class);
        }
        out
    }

    pub fn id(self) -> usize {
        match self {
            BioTag::O => 0,
            BioTag::B(c) => 1 + 2 * c.index(),
            BioTag::I(c) => 2 + 2 * c.index(),
        }
    }

    pub fn from_id(id: usize) -> Option<BioTag> {
        match id {
            0 => Some(BioTag::O),
            1..=12 => {
                let class = EntityClass::ALL[(id - 1) / 2];
                Some(if id % 2 == 1 { BioTag::B(class) } else { BioTag::I(class) })
            }
            _ => None,
        }
    }

    pub fn class(self) -> Option<EntityClass> {
        match self {
            BioTag::O => None,
            BioTag::B(c) | BioTag::I(c) => Some(c),
        }
    }

    pub fn is_outside(self) -> bool {
        self == BioTag::O
    }
}

impl fmt::Display for BioTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BioTag::O => f.write_str("O"),
            BioTag::B(c) => write!(f, "B-{c}"),
            BioTag::I(c) => write!(f, "I-{c}"),
        }
    }
}

impl FromStr for BioTag {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let unknown = || CorpusError::UnknownTag(s.to_string());
        if s == "O" {
            return Ok(BioTag::O);
        }
        let (prefix, class) = s.split_once('-').ok_or_else(unknown)?;
        let class: EntityClass = class.parse().map_err(|_| unknown())?;
        match prefix {
            "B" => Ok(BioTag::B(class)),
            "I" => Ok(BioTag::I(class)),
            _ => Err(unknown()),
        }
    }
}

impl Serialize for BioTag {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BioTag {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
