//! The fixed 15-way label space shared by both classifiers.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// The fourteen sensitive topics plus the `Other` fallback.
///
/// Variant order is alphabetical over the topic names with `Other` last;
/// that order is the tie-breaking order for argmax decisions and the
/// row/column order of every confusion matrix and report table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Category {
    BoXilai,
    DengXiaoping,
    Fire,
    InjuryDead,
    LiuXiaobo,
    MaoZedong,
    PeoplesCongress,
    PolicemanMilitary,
    Protest,
    PrurientNudity,
    Rainstorm,
    WinnieThePooh,
    XiJinping,
    ZhouKehua,
    Other,
}

pub const CATEGORY_COUNT: usize = 15;

impl Category {
    /// All categories in canonical order.
    pub const ALL: [Category; CATEGORY_COUNT] = [
        Category::BoXilai,
        Category::DengXiaoping,
        Category::Fire,
        Category::InjuryDead,
        Category::LiuXiaobo,
        Category::MaoZedong,
        Category::PeoplesCongress,
        Category::PolicemanMilitary,
        Category::Protest,
        Category::PrurientNudity,
        Category::Rainstorm,
        Category::WinnieThePooh,
        Category::XiJinping,
        Category::ZhouKehua,
        Category::Other,
    ];

    /// The fourteen topics, without `Other`.
    pub fn topics() -> impl Iterator<Item = Category> {
        Self::ALL.iter().copied().filter(|c| *c != Category::Other)
    }

    pub fn index(self) -> usize {
        Self::ALL.iter().position(|c| *c == self).unwrap()
    }

    pub fn from_index(i: usize) -> Option<Category> {
        Self::ALL.get(i).copied()
    }

    /// Human-readable name, as used in reports and on the wire.
    pub fn name(self) -> &'static str {
        match self {
            Category::BoXilai => "Bo Xilai",
            Category::DengXiaoping => "Deng Xiaoping",
            Category::Fire => "Fire",
            Category::InjuryDead => "Injury/Dead",
            Category::LiuXiaobo => "Liu Xiaobo",
            Category::MaoZedong => "Mao Zedong",
            Category::PeoplesCongress => "People's Congress",
            Category::PolicemanMilitary => "Policeman/Military",
            Category::Protest => "Protest",
            Category::PrurientNudity => "Prurient/Nudity",
            Category::Rainstorm => "Rainstorm",
            Category::WinnieThePooh => "Winnie the Pooh",
            Category::XiJinping => "Xi Jinping",
            Category::ZhouKehua => "Zhou Kehua",
            Category::Other => "Other",
        }
    }

    /// Filesystem-safe identifier, used for dataset directories and file names.
    pub fn slug(self) -> &'static str {
        match self {
            Category::BoXilai => "bo_xilai",
            Category::DengXiaoping => "deng_xiaoping",
            Category::Fire => "fire",
            Category::InjuryDead => "injury_dead",
            Category::LiuXiaobo => "liu_xiaobo",
            Category::MaoZedong => "mao_zedong",
            Category::PeoplesCongress => "peoples_congress",
            Category::PolicemanMilitary => "policeman_military",
            Category::Protest => "protest",
            Category::PrurientNudity => "prurient_nudity",
            Category::Rainstorm => "rainstorm",
            Category::WinnieThePooh => "winnie_the_pooh",
            Category::XiJinping => "xi_jinping",
            Category::ZhouKehua => "zhou_kehua",
            Category::Other => "other",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Category {
    type Err = crate::Error;

    /// Accepts either the display name or the slug, case-insensitively.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let needle = s.trim().to_lowercase();
        Category::ALL
            .iter()
            .copied()
            .find(|c| c.name().to_lowercase() == needle || c.slug() == needle)
            .ok_or_else(|| crate::Error::invalid(format!("unknown category: {s:?}")))
    }
}

impl Serialize for Category {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Category {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exactly_fifteen_values_other_last() {
        assert_eq!(Category::ALL.len(), 15);
        assert_eq!(Category::ALL[14], Category::Other);
        assert_eq!(Category::topics().count(), 14);
    }

    #[test]
    fn topics_are_alphabetical() {
        let names: Vec<&str> = Category::topics().map(|c| c.name()).collect();
        let mut sorted = names.clone();
        sorted.sort();
        assert_eq!(names, sorted);
    }

    #[test]
    fn parse_round_trip() {
        for c in Category::ALL {
            assert_eq!(c.name().parse::<Category>().unwrap(), c);
            assert_eq!(c.slug().parse::<Category>().unwrap(), c);
            assert_eq!(Category::from_index(c.index()), Some(c));
        }
        assert!("who knows".parse::<Category>().is_err());
    }

    #[test]
    fn serde_uses_display_name() {
        let json = serde_json::to_string(&Category::WinnieThePooh).unwrap();
        assert_eq!(json, "\"Winnie the Pooh\"");
        let back: Category = serde_json::from_str(&json).unwrap();
        assert_eq!(back, Category::WinnieThePooh);
    }
}
