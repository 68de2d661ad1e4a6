//! Coding family files: JSON with a `members` list of labelled shapes.

use entrograph::coding::{CodingFamily, FamilySpec};

use crate::error::CliError;

/// Families shipped in `families/`, addressable as `builtin:<name>`.
pub const BUILTIN: [(&str, &str); 3] = [
    ("translation-single", include_str!("../families/translation-single.json")),
    ("brouwer-pair", include_str!("../families/brouwer-pair.json")),
    ("north-south-pair", include_str!("../families/north-south-pair.json")),
];

pub fn parse(text: &str) -> Result<CodingFamily, CliError> {
    let spec: FamilySpec = serde_json::from_str(text).map_err(|e| CliError::Family(e.to_string()))?;
    Ok(CodingFamily::from_spec(spec)?)
}

pub fn builtin(name: &str) -> Result<CodingFamily, CliError> {
    let (_, text) = BUILTIN
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| CliError::Family(format!("no builtin family '{name}'")))?;
    parse(text)
}

/// A `builtin:<name>` reference or a file path.
pub fn load(reference: &str) -> Result<CodingFamily, CliError> {
    if let Some(name) = reference.strip_prefix("builtin:") {
        return builtin(name);
    }
    let text = std::fs::read_to_string(reference).map_err(|e| CliError::Family(format!("cannot read {reference}: {e}")))?;
    parse(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_parse() {
        for (name, _) in BUILTIN {
            assert!(!builtin(name).unwrap().is_empty());
        }
        assert_eq!(builtin("brouwer-pair").unwrap().members()[1].label, "strip-foot");
    }

    #[test]
    fn bad_files_are_family_errors() {
        for text in [
            r#"{"members": []}"#,
            r#"{"members": [{"label": "A", "shape": {"interval": ["1", "0"]}}]}"#,
            r#"{"members": [{"label": "A", "shape": {"disc": [0, 1]}}]}"#,
            r#"{"members": [{"label": "A", "shape": {"interval": [0, 1]}, "colour": 2}]}"#,
            r#"{"members": [{"label": "A", "shape": {"interval": ["1/0", 1]}}]}"#,
        ] {
            assert_eq!(parse(text).unwrap_err().exit_code(), 5, "{text}");
        }
        let ok = parse(r#"{"members": [{"label": "A", "shape": {"interval": [0.25, "3/4"]}}]}"#).unwrap();
        assert_eq!(ok.members()[0].label, "A");
    }
}
