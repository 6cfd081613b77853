use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SIX_MONTH_DAYS: u32 = 183;
pub const TWO_YEAR_DAYS: u32 = 730;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChargeType {
    General,
    Violent,
    Drug,
    Property,
    Felony,
    Misdemeanor,
}

impl ChargeType {
    pub const ALL: [ChargeType; 6] = [
        ChargeType::General,
        ChargeType::Violent,
        ChargeType::Drug,
        ChargeType::Property,
        ChargeType::Felony,
        ChargeType::Misdemeanor,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ChargeType::General => "general",
            ChargeType::Violent => "violent",
            ChargeType::Drug => "drug",
            ChargeType::Property => "property",
            ChargeType::Felony => "felony",
            ChargeType::Misdemeanor => "misdemeanor",
        }
    }

    fn index(self) -> usize {
        self as usize
    }

    /// Whether an event counts toward this charge type.
    pub fn matches(self, event: &Event) -> bool {
        match self {
            ChargeType::General => true,
            ChargeType::Violent | ChargeType::Drug | ChargeType::Property => {
                event.tags.iter().any(|t| t == self.as_str())
            }
            ChargeType::Felony => event.level == Level::Felony,
            ChargeType::Misdemeanor => event.level == Level::Misdemeanor,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Horizon {
    TwoYear,
    SixMonth,
}

impl Horizon {
    pub const ALL: [Horizon; 2] = [Horizon::TwoYear, Horizon::SixMonth];

    pub fn days(self) -> u32 {
        match self {
            Horizon::TwoYear => TWO_YEAR_DAYS,
            Horizon::SixMonth => SIX_MONTH_DAYS,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Horizon::TwoYear => "two_year",
            Horizon::SixMonth => "six_month",
        }
    }
}

/// One of the twelve prediction targets, e.g. `general_two_year`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LabelKey {
    pub charge: ChargeType,
    pub horizon: Horizon,
}

impl LabelKey {
    pub fn new(charge: ChargeType, horizon: Horizon) -> Self {
        LabelKey { charge, horizon }
    }

    pub fn all() -> impl Iterator<Item = LabelKey> {
        Horizon::ALL.into_iter().flat_map(|h| {
            ChargeType::ALL
                .into_iter()
                .map(move |c| LabelKey::new(c, h))
        })
    }

    pub fn name(self) -> String {
        format!("{}_{}", self.charge.as_str(), self.horizon.as_str())
    }
}

impl fmt::Display for LabelKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.charge.as_str(), self.horizon.as_str())
    }
}

impl FromStr for LabelKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LabelKey::all()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown label `{s}`")))
    }
}

/// Twelve binary outcomes for one person.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabelSet {
    bits: u16,
}

impl LabelSet {
    fn bit(key: LabelKey) -> u16 {
        let h = match key.horizon {
            Horizon::TwoYear => 0,
            Horizon::SixMonth => 6,
        };
        1 << (h + key.charge.index())
    }

    pub fn get(&self, key: LabelKey) -> bool {
        self.bits & Self::bit(key) != 0
    }

    pub fn set(&mut self, key: LabelKey, value: bool) {
        if value {
            self.bits |= Self::bit(key);
        } else {
            self.bits &= !Self::bit(key);
        }
    }

    /// Six-month positives are also two-year positives for every type.
    pub fn is_nested(&self) -> bool {
        ChargeType::ALL.iter().all(|&c| {
            !self.get(LabelKey::new(c, Horizon::SixMonth))
                || self.get(LabelKey::new(c, Horizon::TwoYear))
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Felony,
    Misdemeanor,
    Other,
}

/// A charge after the current charge (or release) date.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub offset_days: u32,
    pub tags: Vec<String>,
    pub level: Level,
    pub convicted: bool,
}

impl Event {
    pub fn new(offset_days: u32, tags: &[&str], level: Level, convicted: bool) -> Self {
        Event {
            offset_days,
            tags: tags.iter().map(|t| t.to_string()).collect(),
            level,
            convicted,
        }
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let level = match self.level {
            Level::Felony => "felony",
            Level::Misdemeanor => "misdemeanor",
            Level::Other => "other",
        };
        write!(
            f,
            "{}:{}:{}:{}",
            self.offset_days,
            self.tags.join("|"),
            level,
            u8::from(self.convicted)
        )
    }
}

impl FromStr for Event {
    type Err = String;

    /// `offset_days:tag|tag:level:convicted`
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        if parts.len() != 4 {
            return Err(format!("event `{s}` must have 4 `:`-separated fields"));
        }
        let offset_days = parts[0]
            .parse::<i64>()
            .map_err(|_| format!("bad event offset `{}`", parts[0]))?;
        if offset_days < 0 {
            return Err(format!("event offset {offset_days} is negative"));
        }
        let tags = parts[1]
            .split('|')
            .filter(|t| !t.is_empty())
            .map(|t| t.to_ascii_lowercase())
            .collect();
        let level = match parts[2].to_ascii_lowercase().as_str() {
            "felony" | "f" => Level::Felony,
            "misdemeanor" | "m" => Level::Misdemeanor,
            "other" | "" => Level::Other,
            other => return Err(format!("unknown event level `{other}`")),
        };
        let convicted = match parts[3].to_ascii_lowercase().as_str() {
            "1" | "true" | "yes" => true,
            "0" | "false" | "no" => false,
            other => return Err(format!("bad convicted flag `{other}`")),
        };
        Ok(Event {
            offset_days: u32::try_from(offset_days).map_err(|e| e.to_string())?,
            tags,
            level,
            convicted,
        })
    }
}

pub fn format_events(events: &[Event]) -> String {
    events
        .iter()
        .map(|e| e.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

pub fn parse_events(cell: &str) -> std::result::Result<Vec<Event>, String> {
    cell.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(str::parse)
        .collect()
}

/// Derives the twelve labels from an event list.
///
/// A label is positive when an event of the matching type falls within the
/// horizon. With `convicted_only`, non-convicted events are ignored.
pub fn build_labels(events: &[Event], convicted_only: bool) -> LabelSet {
    let mut labels = LabelSet::default();
    for event in events.iter().filter(|e| e.convicted || !convicted_only) {
        for charge in ChargeType::ALL {
            if !charge.matches(event) {
                continue;
            }
            for horizon in Horizon::ALL {
                if event.offset_days <= horizon.days() {
                    labels.set(LabelKey::new(charge, horizon), true);
                }
            }
        }
    }
    labels
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key(c: ChargeType, h: Horizon) -> LabelKey {
        LabelKey::new(c, h)
    }

    #[test]
    fn drug_conviction_at_day_400() {
        let labels = build_labels(&[Event::new(400, &["drug"], Level::Felony, true)], true);
        assert!(labels.get(key(ChargeType::Drug, Horizon::TwoYear)));
        assert!(!labels.get(key(ChargeType::Drug, Horizon::SixMonth)));
        assert!(labels.get(key(ChargeType::General, Horizon::TwoYear)));
        assert!(labels.get(key(ChargeType::Felony, Horizon::TwoYear)));
        assert!(!labels.get(key(ChargeType::Violent, Horizon::TwoYear)));
    }

    #[test]
    fn no_events_means_all_zero() {
        let labels = build_labels(&[], false);
        assert!(LabelKey::all().all(|k| !labels.get(k)));
    }

    #[test]
    fn convicted_only_flag() {
        let events = [Event::new(10, &["violent"], Level::Misdemeanor, false)];
        let strict = build_labels(&events, true);
        assert!(!strict.get(key(ChargeType::Violent, Horizon::SixMonth)));
        assert!(!strict.get(key(ChargeType::Violent, Horizon::TwoYear)));
        let loose = build_labels(&events, false);
        assert!(loose.get(key(ChargeType::Violent, Horizon::SixMonth)));
        assert!(loose.get(key(ChargeType::Violent, Horizon::TwoYear)));
    }

    #[test]
    fn horizon_boundaries_are_inclusive() {
        let at = |d| build_labels(&[Event::new(d, &[], Level::Other, true)], true);
        assert!(at(183).get(key(ChargeType::General, Horizon::SixMonth)));
        assert!(!at(184).get(key(ChargeType::General, Horizon::SixMonth)));
        assert!(at(730).get(key(ChargeType::General, Horizon::TwoYear)));
        assert!(!at(731).get(key(ChargeType::General, Horizon::TwoYear)));
    }

    #[test]
    fn label_names_parse_back() {
        assert_eq!(LabelKey::all().count(), 12);
        for k in LabelKey::all() {
            assert_eq!(k.name().parse::<LabelKey>().unwrap(), k);
        }
        assert!("general_ten_year".parse::<LabelKey>().is_err());
    }

    #[test]
    fn event_text_round_trip() {
        let e = Event::new(12, &["violent", "drug"], Level::Felony, true);
        assert_eq!(e.to_string(), "12:violent|drug:felony:1");
        assert_eq!(e.to_string().parse::<Event>().unwrap(), e);
        assert!("-3::other:1".parse::<Event>().is_err());
        let list = vec![e.clone(), Event::new(500, &[], Level::Other, false)];
        assert_eq!(parse_events(&format_events(&list)).unwrap(), list);
    }
}
