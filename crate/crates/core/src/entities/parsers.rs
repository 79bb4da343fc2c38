//! Per-type value parsers and renderers, registered by entity type.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use regex::Regex;

use super::locale::{LocaleFormat, TimeStyle, KM_PER_MILE};
use super::{DistanceUnit, EntityType, NormalizedValue};

/// Turns matched surface text into a normalized value and back into text
/// under a target locale.
pub trait EntityParser: Send + Sync {
    fn entity_type(&self) -> EntityType;

    /// `language` selects the decimal and date conventions of the input.
    fn parse(&self, text: &str, language: &str) -> Option<NormalizedValue>;

    fn render(&self, value: &NormalizedValue, locale: &LocaleFormat) -> Option<String>;
}

pub struct ParserRegistry {
    parsers: BTreeMap<EntityType, Box<dyn EntityParser>>,
}

impl ParserRegistry {
    pub fn empty() -> Self {
        Self {
            parsers: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, parser: Box<dyn EntityParser>) {
        self.parsers.insert(parser.entity_type(), parser);
    }

    pub fn get(&self, entity_type: EntityType) -> Option<&dyn EntityParser> {
        self.parsers.get(&entity_type).map(|p| p.as_ref())
    }

    pub fn types(&self) -> impl Iterator<Item = EntityType> + '_ {
        self.parsers.keys().copied()
    }
}

impl Default for ParserRegistry {
    fn default() -> Self {
        let mut registry = Self::empty();
        registry.register(Box::new(DistanceParser));
        registry.register(Box::new(DurationParser));
        registry.register(Box::new(TimeParser));
        registry.register(Box::new(DateParser));
        registry
    }
}

fn regex(cell: &'static OnceLock<Regex>, pattern: &str) -> &'static Regex {
    cell.get_or_init(|| Regex::new(pattern).expect("built-in pattern"))
}

fn decimal_separator(language: &str) -> char {
    LocaleFormat::for_language(language).decimal_separator
}

/// Leading number with the language's decimal separator; returns the value
/// and the count of fractional digits.
fn leading_number(text: &str, language: &str) -> Option<(f64, usize, usize)> {
    static NUM: OnceLock<Regex> = OnceLock::new();
    let m = regex(&NUM, r"\d+(?:[.,]\d+)?").find(text)?;
    let sep = decimal_separator(language);
    let raw = m.as_str();
    let (int, frac) = match raw.find(['.', ',']) {
        Some(i) if raw[i..].starts_with(sep) => (&raw[..i], &raw[i + 1..]),
        Some(i) => (&raw[..i], ""),
        None => (raw, ""),
    };
    let consumed = if frac.is_empty() { m.start() + int.len() } else { m.end() };
    let value: f64 = if frac.is_empty() {
        int.parse().ok()?
    } else {
        format!("{int}.{frac}").parse().ok()?
    };
    Some((value, frac.len(), consumed))
}

fn unit_word(rest: &str) -> String {
    rest.trim_start_matches(|c: char| c.is_whitespace() || c == '-')
        .chars()
        .take_while(|c| c.is_alphabetic())
        .collect::<String>()
        .to_lowercase()
}

pub struct DistanceParser;

impl EntityParser for DistanceParser {
    fn entity_type(&self) -> EntityType {
        EntityType::Distance
    }

    fn parse(&self, text: &str, language: &str) -> Option<NormalizedValue> {
        let (magnitude, decimals, end) = leading_number(text, language)?;
        let word = unit_word(&text[end..]);
        let unit = if word == "km" || word.starts_with("kilomet") {
            DistanceUnit::Km
        } else if word == "mi" || word.starts_with("mile") || word.starts_with("meile") {
            DistanceUnit::Mi
        } else if word == "m" || word.starts_with("met") {
            DistanceUnit::M
        } else {
            return None;
        };
        Some(NormalizedValue::Distance {
            magnitude,
            decimals,
            unit,
        })
    }

    fn render(&self, value: &NormalizedValue, locale: &LocaleFormat) -> Option<String> {
        let NormalizedValue::Distance {
            magnitude,
            decimals,
            unit,
        } = *value
        else {
            return None;
        };
        let text = match locale.convert(magnitude, unit) {
            Some((converted, to)) => format!("{} {}", locale.format_number(converted, 1), to.symbol()),
            None => format!("{} {}", locale.format_number(magnitude, decimals), unit.symbol()),
        };
        Some(text)
    }
}

pub struct DurationParser;

impl EntityParser for DurationParser {
    fn entity_type(&self) -> EntityType {
        EntityType::Duration
    }

    fn parse(&self, text: &str, language: &str) -> Option<NormalizedValue> {
        let (value, decimals, end) = leading_number(text, language)?;
        if decimals > 0 {
            return None;
        }
        let word = unit_word(&text[end..]);
        let minutes = if word.starts_with("min") {
            value
        } else if word.starts_with("hour")
            || word.starts_with("hr")
            || word.starts_with("stund")
            || word.starts_with("stünd")
            || word.starts_with("std")
        {
            value * 60.0
        } else {
            return None;
        };
        Some(NormalizedValue::Duration {
            minutes: minutes as u32,
        })
    }

    fn render(&self, value: &NormalizedValue, _locale: &LocaleFormat) -> Option<String> {
        match *value {
            NormalizedValue::Duration { minutes } => Some(format!("{minutes} min")),
            _ => None,
        }
    }
}

pub struct TimeParser;

impl EntityParser for TimeParser {
    fn entity_type(&self) -> EntityType {
        EntityType::Time
    }

    fn parse(&self, text: &str, _language: &str) -> Option<NormalizedValue> {
        static TIME: OnceLock<Regex> = OnceLock::new();
        let caps = regex(
            &TIME,
            r"(?i)^(\d{1,2})(?:[:.](\d{2}))?\s?(?:(a\.?m\.?|p\.?m\.?)|uhr|h)?",
        )
        .captures(text)?;
        let mut hour: u32 = caps[1].parse().ok()?;
        let minute: u32 = caps.get(2).map_or(Some(0), |m| m.as_str().parse().ok())?;
        if minute > 59 {
            return None;
        }
        if let Some(meridiem) = caps.get(3) {
            if !(1..=12).contains(&hour) {
                return None;
            }
            let pm = meridiem.as_str().to_lowercase().starts_with('p');
            hour = match (hour, pm) {
                (12, false) => 0,
                (12, true) => 12,
                (h, true) => h + 12,
                (h, false) => h,
            };
        }
        if hour > 23 {
            return None;
        }
        Some(NormalizedValue::Time {
            minutes: hour * 60 + minute,
        })
    }

    fn render(&self, value: &NormalizedValue, locale: &LocaleFormat) -> Option<String> {
        let NormalizedValue::Time { minutes } = *value else {
            return None;
        };
        let (hour, minute) = (minutes / 60, minutes % 60);
        Some(match locale.time_style {
            TimeStyle::H24 => format!("{hour:02}:{minute:02}"),
            TimeStyle::H12 => {
                let suffix = if hour < 12 { "AM" } else { "PM" };
                let h12 = match hour % 12 {
                    0 => 12,
                    h => h,
                };
                format!("{h12}:{minute:02} {suffix}")
            }
        })
    }
}

const MONTHS_EN: [&str; 12] = [
    "january", "february", "march", "april", "may", "june", "july", "august", "september",
    "october", "november", "december",
];
const MONTHS_DE: [&str; 12] = [
    "januar", "februar", "märz", "april", "mai", "juni", "juli", "august", "september", "oktober",
    "november", "dezember",
];

fn month_number(name: &str) -> Option<u32> {
    let name = name.to_lowercase();
    MONTHS_EN
        .iter()
        .position(|m| *m == name)
        .or_else(|| MONTHS_DE.iter().position(|m| *m == name))
        .map(|i| i as u32 + 1)
}

fn valid_date(year: i32, month: u32, day: u32) -> Option<NormalizedValue> {
    ((1..=12).contains(&month) && (1..=31).contains(&day))
        .then_some(NormalizedValue::Date { year, month, day })
}

pub struct DateParser;

impl EntityParser for DateParser {
    fn entity_type(&self) -> EntityType {
        EntityType::Date
    }

    fn parse(&self, text: &str, language: &str) -> Option<NormalizedValue> {
        static ISO: OnceLock<Regex> = OnceLock::new();
        static NUMERIC: OnceLock<Regex> = OnceLock::new();
        static DAY_MONTH: OnceLock<Regex> = OnceLock::new();
        static MONTH_DAY: OnceLock<Regex> = OnceLock::new();
        if let Some(c) = regex(&ISO, r"^(\d{4})-(\d{2})-(\d{2})$").captures(text) {
            return valid_date(c[1].parse().ok()?, c[2].parse().ok()?, c[3].parse().ok()?);
        }
        if let Some(c) = regex(&NUMERIC, r"^(\d{1,2})([./])(\d{1,2})[./](\d{4})$").captures(text) {
            let (a, b): (u32, u32) = (c[1].parse().ok()?, c[3].parse().ok()?);
            let year = c[4].parse().ok()?;
            // slashes are month-first in English, dots are always day-first
            return if &c[2] == "/" && language == "en" {
                valid_date(year, a, b)
            } else {
                valid_date(year, b, a)
            };
        }
        if let Some(c) = regex(&DAY_MONTH, r"^(\d{1,2})\.?\s+(\p{L}+)\s+(\d{4})$").captures(text) {
            return valid_date(c[3].parse().ok()?, month_number(&c[2])?, c[1].parse().ok()?);
        }
        if let Some(c) = regex(&MONTH_DAY, r"^(\p{L}+)\s+(\d{1,2}),?\s+(\d{4})$").captures(text) {
            return valid_date(c[3].parse().ok()?, month_number(&c[1])?, c[2].parse().ok()?);
        }
        None
    }

    fn render(&self, value: &NormalizedValue, locale: &LocaleFormat) -> Option<String> {
        let NormalizedValue::Date { year, month, day } = *value else {
            return None;
        };
        Some(
            locale
                .date_pattern
                .replace("%d", &format!("{day:02}"))
                .replace("%m", &format!("{month:02}"))
                .replace("%Y", &format!("{year:04}")),
        )
    }
}

/// Distance in metres, for unit-agnostic comparison.
pub fn metres(magnitude: f64, unit: DistanceUnit) -> f64 {
    match unit {
        DistanceUnit::M => magnitude,
        DistanceUnit::Km => magnitude * 1000.0,
        DistanceUnit::Mi => magnitude * KM_PER_MILE * 1000.0,
    }
}
