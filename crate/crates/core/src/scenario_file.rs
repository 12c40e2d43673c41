//! JSON scenario files.

use std::path::Path;

use crate::harness::Scenario;
use crate::{Error, Result};

/// Parses and validates a scenario. Malformed JSON is a `Parse` error;
/// well-formed input that breaks an invariant is a `Scenario` error.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let s: Scenario = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    s.prepare()?;
    Ok(s)
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)?;
    parse_scenario(&text)
}

pub fn to_json(s: &Scenario) -> String {
    serde_json::to_string_pretty(s).expect("scenario serializes")
}
