//! Population counts as flat `key = value` text:
//!
//! ```text
//! # comments and blank lines are ignored
//! unit = article
//! stub = 3359351
//! start = 1019038
//! ...
//! ```
//!
//! All six classes must be present; a zero must be written out.

use std::path::Path;

use ordqual_core::{PopulationCounts, QualityClass, NUM_CLASSES};

use super::read_to_string;
use crate::error::{IoError, Result};

pub fn read_population(path: &Path) -> Result<PopulationCounts> {
    parse_population(&read_to_string(path)?)
}

pub fn parse_population(text: &str) -> Result<PopulationCounts> {
    let mut unit: Option<String> = None;
    let mut counts: [Option<u64>; NUM_CLASSES] = [None; NUM_CLASSES];
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').or_else(|| line.split_once(':')).ok_or_else(|| IoError::Malformed {
            line: line_no,
            message: format!("expected `key = value`, got `{line}`"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        let duplicate = || IoError::DuplicateKey { line: line_no, key: key.into() };
        if key.eq_ignore_ascii_case("unit") {
            if unit.replace(value.into()).is_some() {
                return Err(duplicate());
            }
            continue;
        }
        let class: QualityClass = key.parse().map_err(|_| IoError::UnknownKey { line: line_no, key: key.into() })?;
        let count: i128 = value
            .parse()
            .map_err(|_| IoError::Malformed { line: line_no, message: format!("`{value}` is not an integer") })?;
        if count < 0 {
            return Err(IoError::NegativeCount(key.into()));
        }
        let count = u64::try_from(count)
            .map_err(|_| IoError::Malformed { line: line_no, message: format!("`{value}` is too large") })?;
        if counts[class.code()].replace(count).is_some() {
            return Err(duplicate());
        }
    }
    let mut out = [0u64; NUM_CLASSES];
    for class in QualityClass::ALL {
        out[class.code()] = counts[class.code()].ok_or(IoError::MissingClass(class.key()))?;
    }
    Ok(PopulationCounts::new(unit.unwrap_or_else(|| "custom".into()), out)?)
}

/// Inverse of [`parse_population`].
pub fn render_population(population: &PopulationCounts) -> String {
    let mut out = format!("unit = {}\n", population.unit);
    for class in QualityClass::ALL {
        out.push_str(&format!("{} = {}\n", class.key(), population.counts()[class.code()]));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn published_counts_round_trip() {
        for population in [PopulationCounts::articles(), PopulationCounts::revisions()] {
            assert_eq!(parse_population(&render_population(&population)).unwrap(), population);
        }
        let text = "unit = article\nStub = 3359351\nStart = 1019038\nC = 235655\nB = 128875\nGA = 31808\nFA = 7438\n";
        assert_eq!(parse_population(text).unwrap().counts(), &[3359351, 1019038, 235655, 128875, 31808, 7438]);
    }

    #[test]
    fn omitted_class_is_an_error() {
        let text = "stub = 5\nstart = 4\nc = 3\nb = 2\nga = 1\n";
        assert!(matches!(parse_population(text), Err(IoError::MissingClass("fa"))));
    }

    #[test]
    fn rejects_bad_entries() {
        let base = "stub = 5\nstart = 4\nc = 3\nb = 2\nga = 1\n";
        assert!(matches!(parse_population(&format!("{base}fa = -1\n")), Err(IoError::NegativeCount(_))));
        assert!(matches!(
            parse_population(&format!("{base}fa = 1\na = 2\n")),
            Err(IoError::UnknownKey { line: 7, .. })
        ));
        assert!(matches!(parse_population(&format!("{base}fa = 1\nga = 2\n")), Err(IoError::DuplicateKey { .. })));
        assert!(matches!(parse_population(&format!("{base}fa = 1.5\n")), Err(IoError::Malformed { line: 6, .. })));
        let zeros = "stub = 0\nstart = 0\nc = 0\nb = 0\nga = 0\nfa = 0\n";
        assert_eq!(parse_population(zeros).unwrap_err().kind(), "EmptyPopulation");
    }

    #[test]
    fn explicit_zero_and_comments() {
        let text = "# custom\nunit=wiki  # trailing\nstub=5\nstart=4\nc=3\nb=2\nga=1\nfa=0\n";
        let population = parse_population(text).unwrap();
        assert_eq!(population.unit, "wiki");
        assert_eq!(population.counts()[5], 0);
    }
}
