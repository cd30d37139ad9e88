//! County outcome tables.

use std::collections::BTreeMap;
use std::io::BufRead;

use super::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutcomeTransform {
    None,
    Log10,
}

impl OutcomeTransform {
    pub fn as_str(&self) -> &'static str {
        match self {
            OutcomeTransform::None => "none",
            OutcomeTransform::Log10 => "log10",
        }
    }

    pub fn parse(s: &str) -> Option<OutcomeTransform> {
        match s {
            "none" => Some(OutcomeTransform::None),
            "log10" => Some(OutcomeTransform::Log10),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OutcomeTable {
    pub name: String,
    pub transform: OutcomeTransform,
    values: BTreeMap<String, f64>,
}

impl OutcomeTable {
    /// Wraps already-transformed values; callers own any transform.
    pub fn from_values(
        name: &str,
        transform: OutcomeTransform,
        values: BTreeMap<String, f64>,
    ) -> OutcomeTable {
        OutcomeTable {
            name: name.to_string(),
            transform,
            values,
        }
    }

    pub fn get(&self, fips: &str) -> Option<f64> {
        self.values.get(fips).copied()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn fips_codes(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }
}

/// Reads `fips,value` CSV with a header line. `Log10` transforms at
/// load time and refuses non-positive values.
pub fn load_outcomes<R: BufRead>(
    reader: R,
    name: &str,
    transform: OutcomeTransform,
) -> Result<OutcomeTable, ModelError> {
    let mut values = BTreeMap::new();
    let mut saw_header = false;
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !saw_header {
            if !line.to_ascii_lowercase().starts_with("fips") {
                return Err(ModelError::SchemaError {
                    line: lineno,
                    reason: "expected `fips,value` header".to_string(),
                });
            }
            saw_header = true;
            continue;
        }
        let (fips, value) = line.split_once(',').ok_or(ModelError::SchemaError {
            line: lineno,
            reason: "expected `fips,value`".to_string(),
        })?;
        let fips = fips.trim().to_string();
        let raw: f64 = value.trim().parse().map_err(|_| ModelError::SchemaError {
            line: lineno,
            reason: format!("bad value `{value}`"),
        })?;
        if !raw.is_finite() {
            return Err(ModelError::NonFinite {
                context: format!("outcome value for {fips}"),
            });
        }
        let v = match transform {
            OutcomeTransform::None => raw,
            OutcomeTransform::Log10 => {
                if raw <= 0.0 {
                    return Err(ModelError::NonPositiveUnderLog { fips, value: raw });
                }
                raw.log10()
            }
        };
        values.insert(fips, v);
    }
    if !saw_header {
        return Err(ModelError::SchemaError {
            line: 1,
            reason: "empty outcome file".to_string(),
        });
    }
    Ok(OutcomeTable {
        name: name.to_string(),
        transform,
        values,
    })
}
