use serde::{Deserialize, Serialize};

use super::DistanceUnit;

pub const KM_PER_MILE: f64 = 1.609344;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeStyle {
    #[serde(rename = "12h")]
    H12,
    #[serde(rename = "24h")]
    H24,
}

/// Whether distances are rendered in their source unit or converted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnitPolicy {
    Keep,
    /// Convert miles to kilometres (metric target).
    ConvertToMetric,
    /// Convert kilometres and metres to miles.
    ConvertToImperial,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocaleFormat {
    pub language: String,
    pub decimal_separator: char,
    pub time_style: TimeStyle,
    /// `%d`, `%m` (zero padded) and `%Y` are substituted.
    pub date_pattern: String,
    pub unit_policy: UnitPolicy,
}

impl LocaleFormat {
    /// Built-in conventions; unknown languages get ISO dates, 24h clock and `.`.
    pub fn for_language(language: &str) -> Self {
        let (decimal_separator, time_style, date_pattern) = match language {
            "en" => ('.', TimeStyle::H12, "%m/%d/%Y"),
            "de" | "fr" | "es" | "it" | "nl" | "pt" | "ru" | "pl" => (',', TimeStyle::H24, "%d.%m.%Y"),
            _ => ('.', TimeStyle::H24, "%Y-%m-%d"),
        };
        Self {
            language: language.to_string(),
            decimal_separator,
            time_style,
            date_pattern: date_pattern.to_string(),
            unit_policy: UnitPolicy::Keep,
        }
    }

    pub fn with_unit_policy(mut self, policy: UnitPolicy) -> Self {
        self.unit_policy = policy;
        self
    }

    /// Unit and magnitude after applying the unit policy; converted values
    /// are rounded to one decimal (half-up).
    pub fn convert(&self, magnitude: f64, unit: DistanceUnit) -> Option<(f64, DistanceUnit)> {
        match (self.unit_policy, unit) {
            (UnitPolicy::ConvertToMetric, DistanceUnit::Mi) => {
                Some((round_half_up(magnitude * KM_PER_MILE, 1), DistanceUnit::Km))
            }
            (UnitPolicy::ConvertToImperial, DistanceUnit::Km) => {
                Some((round_half_up(magnitude / KM_PER_MILE, 1), DistanceUnit::Mi))
            }
            (UnitPolicy::ConvertToImperial, DistanceUnit::M) => Some((
                round_half_up(magnitude / 1000.0 / KM_PER_MILE, 1),
                DistanceUnit::Mi,
            )),
            _ => None,
        }
    }

    pub fn format_number(&self, value: f64, decimals: usize) -> String {
        let text = format!("{value:.decimals$}");
        if self.decimal_separator == '.' {
            text
        } else {
            text.replace('.', &self.decimal_separator.to_string())
        }
    }
}

pub fn round_half_up(value: f64, decimals: i32) -> f64 {
    let scale = 10f64.powi(decimals);
    // The nudge keeps values like 16.05 (stored as 16.04999..) rounding up.
    ((value * scale) + 0.5 + 1e-9).floor() / scale
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_separator() {
        let de = LocaleFormat::for_language("de");
        assert_eq!(de.format_number(1.9, 1), "1,9");
        assert_eq!(LocaleFormat::for_language("en").format_number(1.9, 1), "1.9");
    }

    #[test]
    fn miles_to_km_rounds_half_up() {
        let de = LocaleFormat::for_language("de").with_unit_policy(UnitPolicy::ConvertToMetric);
        let (km, unit) = de.convert(10.0, DistanceUnit::Mi).unwrap();
        assert_eq!(unit, DistanceUnit::Km);
        assert_eq!(de.format_number(km, 1), "16,1");
        assert_eq!(round_half_up(0.25, 1), 0.3);
        assert_eq!(round_half_up(0.35, 1), 0.4);
    }

    #[test]
    fn keep_policy_does_not_convert() {
        assert!(LocaleFormat::for_language("de")
            .convert(10.0, DistanceUnit::Mi)
            .is_none());
    }
}
