use std::fmt;
use std::path::Path;
use std::sync::Arc;

use regex::Regex;

use super::parsers::{EntityParser, ParserRegistry};
use super::{EntityError, EntityType, NormalizedValue};

const STARTER: &str = include_str!("../../data/templates.tsv");

/// A compiled pattern for one entity type in one language.
#[derive(Clone)]
pub struct EntityTemplate {
    pub name: String,
    pub entity_type: EntityType,
    pub language: String,
    pub pattern: String,
    regex: Regex,
    parser: Arc<dyn EntityParser>,
}

impl fmt::Debug for EntityTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EntityTemplate")
            .field("name", &self.name)
            .field("entity_type", &self.entity_type)
            .field("language", &self.language)
            .field("pattern", &self.pattern)
            .finish()
    }
}

impl EntityTemplate {
    /// Compiles `pattern` with the built-in parser for `entity_type`.
    pub fn new(entity_type: EntityType, language: &str, pattern: &str) -> Result<Self, EntityError> {
        let name = format!("{}/{}", entity_type.as_str(), language);
        Self::named(&name, entity_type, language, pattern)
    }

    pub fn named(
        name: &str,
        entity_type: EntityType,
        language: &str,
        pattern: &str,
    ) -> Result<Self, EntityError> {
        let parser = builtin_parser(entity_type);
        Self::with_parser(name, language, pattern, parser)
    }

    pub fn with_parser(
        name: &str,
        language: &str,
        pattern: &str,
        parser: Arc<dyn EntityParser>,
    ) -> Result<Self, EntityError> {
        let regex = Regex::new(pattern).map_err(|e| EntityError::Template {
            name: name.to_string(),
            message: e.to_string(),
        })?;
        Ok(Self {
            name: name.to_string(),
            entity_type: parser.entity_type(),
            language: language.to_string(),
            pattern: pattern.to_string(),
            regex,
            parser,
        })
    }

    pub fn regex(&self) -> &Regex {
        &self.regex
    }

    pub fn parse(&self, text: &str) -> Option<NormalizedValue> {
        self.parser.parse(text, &self.language)
    }

    pub fn parser(&self) -> &dyn EntityParser {
        self.parser.as_ref()
    }
}

fn builtin_parser(entity_type: EntityType) -> Arc<dyn EntityParser> {
    use super::parsers::{DateParser, DistanceParser, DurationParser, TimeParser};
    match entity_type {
        EntityType::Distance => Arc::new(DistanceParser),
        EntityType::Duration => Arc::new(DurationParser),
        EntityType::Time => Arc::new(TimeParser),
        EntityType::Date => Arc::new(DateParser),
    }
}

/// Ordered templates; earlier templates win ties between equal matches.
#[derive(Debug, Clone, Default)]
pub struct TemplateSet {
    templates: Vec<EntityTemplate>,
}

impl TemplateSet {
    pub fn new(templates: Vec<EntityTemplate>) -> Self {
        Self { templates }
    }

    /// Built-in English and German templates.
    pub fn starter() -> Self {
        Self::from_tsv(STARTER).expect("starter templates compile")
    }

    pub fn starter_for(language: &str) -> Self {
        Self::starter().for_language(language)
    }

    /// Parses `type<TAB>lang<TAB>pattern` records; `#` starts a comment line.
    pub fn from_tsv(text: &str) -> Result<Self, EntityError> {
        let registry = ParserRegistry::default();
        let mut templates = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.splitn(3, '\t');
            let (Some(kind), Some(lang), Some(pattern)) = (fields.next(), fields.next(), fields.next())
            else {
                return Err(EntityError::TemplateFile {
                    line: line_no,
                    message: "expected type, language and pattern separated by tabs".into(),
                });
            };
            let entity_type: EntityType = kind.trim().parse().map_err(|_| EntityError::TemplateFile {
                line: line_no,
                message: format!("unknown entity type '{kind}'"),
            })?;
            if registry.get(entity_type).is_none() {
                return Err(EntityError::TemplateFile {
                    line: line_no,
                    message: format!("no parser for '{kind}'"),
                });
            }
            let name = format!("{}/{}:{}", entity_type.as_str(), lang.trim(), line_no);
            templates.push(EntityTemplate::named(&name, entity_type, lang.trim(), pattern)?);
        }
        Ok(Self { templates })
    }

    pub fn load(path: &Path) -> Result<Self, EntityError> {
        let text = std::fs::read_to_string(path).map_err(|source| EntityError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_tsv(&text)
    }

    pub fn to_tsv(&self) -> String {
        self.templates
            .iter()
            .map(|t| format!("{}\t{}\t{}\n", t.entity_type.as_str(), t.language, t.pattern))
            .collect()
    }

    pub fn for_language(&self, language: &str) -> Self {
        Self {
            templates: self
                .templates
                .iter()
                .filter(|t| t.language == language)
                .cloned()
                .collect(),
        }
    }

    pub fn push(&mut self, template: EntityTemplate) {
        self.templates.push(template);
    }

    pub fn templates(&self) -> &[EntityTemplate] {
        &self.templates
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }

    pub fn len(&self) -> usize {
        self.templates.len()
    }

    /// Language of the first template, if any.
    pub fn language(&self) -> Option<&str> {
        self.templates.first().map(|t| t.language.as_str())
    }

    pub fn entity_types(&self) -> Vec<EntityType> {
        let mut types: Vec<_> = self.templates.iter().map(|t| t.entity_type).collect();
        types.sort();
        types.dedup();
        types
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bad_pattern_names_template() {
        let err = EntityTemplate::named("broken-km", EntityType::Distance, "en", r"(\d+ km").unwrap_err();
        assert!(err.to_string().contains("broken-km"));
    }

    #[test]
    fn file_errors_report_line() {
        let err = TemplateSet::from_tsv("# c\ndistance\ten\n").unwrap_err();
        assert!(matches!(err, EntityError::TemplateFile { line: 2, .. }));
        let err = TemplateSet::from_tsv("weight\ten\t\\d+ kg\n").unwrap_err();
        assert!(matches!(err, EntityError::TemplateFile { line: 1, .. }));
    }

    #[test]
    fn tsv_round_trip() {
        let set = TemplateSet::starter();
        let again = TemplateSet::from_tsv(&set.to_tsv()).unwrap();
        assert_eq!(set.len(), again.len());
        assert_eq!(again.for_language("de").language(), Some("de"));
    }

    #[test]
    fn starter_templates_parse_what_they_match() {
        let examples = [
            ("en", "1.9 km"),
            ("en", "300 m"),
            ("en", "10 miles"),
            ("en", "5-km"),
            ("en", "55-minute"),
            ("en", "2 hours"),
            ("en", "5 p.m."),
            ("en", "11:45 am"),
            ("en", "23:15"),
            ("en", "2024-04-03"),
            ("en", "4/3/2024"),
            ("en", "April 3, 2024"),
            ("de", "1,9 km"),
            ("de", "500 m"),
            ("de", "10 Meilen"),
            ("de", "5-minütigen"),
            ("de", "2 Stunden"),
            ("de", "14.30 Uhr"),
            ("de", "9 Uhr"),
            ("de", "03.04.2024"),
            ("de", "3. April 2024"),
        ];
        let set = TemplateSet::starter();
        for (lang, text) in examples {
            let hits: Vec<_> = set
                .for_language(lang)
                .templates
                .into_iter()
                .filter(|t| t.regex().find(text).map(|m| m.as_str()) == Some(text))
                .collect();
            assert!(!hits.is_empty(), "{lang}: no template matches {text:?}");
            for t in hits {
                assert!(t.parse(text).is_some(), "{} accepts {text:?} but cannot parse it", t.name);
            }
        }
    }
}
