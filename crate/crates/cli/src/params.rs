//! Parameter resolution: command-line flag, then the command's config
//! section, then top-level config keys, then the built-in default. Every
//! resolved value is recorded for the report.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::str::FromStr;

use censorlap::constants::FractionalOrder;
use censorlap::geometry::Domain;
use serde::Serialize;
use serde_json::Value;

use crate::config::ConfigFile;
use crate::error::CliError;

enum Source {
    Flag(String),
    File { path: String, line: usize, column: usize },
}

impl Source {
    fn location(&self, offset: usize) -> String {
        match self {
            Source::Flag(key) if offset == 0 => format!("--{}", key.replace('_', "-")),
            Source::Flag(key) => format!("--{}, column {}", key.replace('_', "-"), offset + 1),
            Source::File { path, line, column } => format!("{path}:{line}:{}", column + offset),
        }
    }
}

pub struct Params<'a> {
    section: String,
    flags: BTreeMap<String, String>,
    file: Option<&'a ConfigFile>,
    resolved: BTreeMap<String, Value>,
}

impl<'a> Params<'a> {
    pub fn new(section: &str, flags: BTreeMap<String, String>, file: Option<&'a ConfigFile>) -> Self {
        Params {
            section: section.replace('-', "_"),
            flags,
            file,
            resolved: BTreeMap::new(),
        }
    }

    /// Resolved parameters so far, for embedding in reports.
    pub fn resolved(&self) -> &BTreeMap<String, Value> {
        &self.resolved
    }

    fn raw(&self, key: &str) -> Option<(String, Source)> {
        if let Some(v) = self.flags.get(key) {
            return Some((v.clone(), Source::Flag(key.to_string())));
        }
        let file = self.file?;
        file.lookup(&self.section, key).map(|e| {
            (
                e.value.clone(),
                Source::File {
                    path: file.path.display().to_string(),
                    line: e.line,
                    column: e.column,
                },
            )
        })
    }

    fn record<T: Serialize>(&mut self, key: &str, value: &T) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.resolved.insert(key.to_string(), v);
    }

    fn parse_with<T, F>(&mut self, key: &str, parse: F) -> Result<Option<T>, CliError>
    where
        T: Serialize,
        F: Fn(&str) -> Result<T, (usize, String)>,
    {
        let Some((text, source)) = self.raw(key) else {
            return Ok(None);
        };
        let value = parse(text.trim()).map_err(|(offset, message)| CliError::Config {
            location: source.location(offset),
            message,
        })?;
        self.record(key, &value);
        Ok(Some(value))
    }

    pub fn optional<T>(&mut self, key: &str) -> Result<Option<T>, CliError>
    where
        T: FromStr + Serialize,
        T::Err: Display,
    {
        self.parse_with(key, |s| scalar(s, 0))
    }

    pub fn get<T>(&mut self, key: &str, default: T) -> Result<T, CliError>
    where
        T: FromStr + Serialize,
        T::Err: Display,
    {
        match self.optional(key)? {
            Some(v) => Ok(v),
            None => {
                self.record(key, &default);
                Ok(default)
            }
        }
    }

    pub fn required<T>(&mut self, key: &str) -> Result<T, CliError>
    where
        T: FromStr + Serialize,
        T::Err: Display,
    {
        self.optional(key)?.ok_or_else(|| CliError::Config {
            location: format!("--{}", key.replace('_', "-")),
            message: "required parameter is missing".into(),
        })
    }

    pub fn list<T>(&mut self, key: &str, default: Vec<T>) -> Result<Vec<T>, CliError>
    where
        T: FromStr + Serialize,
        T::Err: Display,
    {
        match self.parse_with(key, list)? {
            Some(v) => Ok(v),
            None => {
                self.record(key, &default);
                Ok(default)
            }
        }
    }

    pub fn string(&mut self, key: &str, default: &str) -> Result<String, CliError> {
        self.get(key, default.to_string())
    }

    pub fn flag(&mut self, key: &str) -> Result<bool, CliError> {
        self.get(key, false)
    }

    pub fn order(&mut self) -> Result<FractionalOrder, CliError> {
        let alpha: f64 = self.required("alpha")?;
        FractionalOrder::new(alpha).map_err(|e| CliError::Config {
            location: self.raw("alpha").map(|(_, s)| s.location(0)).unwrap_or_default(),
            message: e.to_string(),
        })
    }

    pub fn domain(&mut self) -> Result<Domain, CliError> {
        let parsed = self.parse_with("domain", |s| {
            s.parse::<Domain>().map_err(|e| (e.position, e.message))
        })?;
        Ok(match parsed {
            Some(d) => d,
            None => {
                let d = Domain::unit_interval();
                self.record("domain", &d);
                d
            }
        })
    }

    /// Raises a configuration error located at `key`.
    pub fn invalid<T>(&self, key: &str, message: impl Into<String>) -> Result<T, CliError> {
        let location = self
            .raw(key)
            .map(|(_, s)| s.location(0))
            .unwrap_or_else(|| format!("--{}", key.replace('_', "-")));
        Err(CliError::Config {
            location,
            message: message.into(),
        })
    }
}

fn scalar<T>(s: &str, offset: usize) -> Result<T, (usize, String)>
where
    T: FromStr,
    T::Err: Display,
{
    s.parse::<T>()
        .map_err(|e| (offset, format!("cannot parse '{s}': {e}")))
}

/// Comma-separated values; the error offset points at the bad item.
pub fn list<T>(s: &str) -> Result<Vec<T>, (usize, String)>
where
    T: FromStr,
    T::Err: Display,
{
    let mut out = Vec::new();
    let mut offset = 0;
    for item in s.split(',') {
        let lead = item.len() - item.trim_start().len();
        out.push(scalar(item.trim(), offset + lead)?);
        offset += item.len() + 1;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::Path;

    #[test]
    fn flags_override_file() {
        let file = ConfigFile::parse("alpha = 0.2\n[sweep]\nalpha = 0.3\n", Path::new("f")).unwrap();
        let mut flags = BTreeMap::new();
        let mut p = Params::new("sweep", flags.clone(), Some(&file));
        assert_eq!(p.required::<f64>("alpha").unwrap(), 0.3);
        let mut q = Params::new("solve", flags.clone(), Some(&file));
        assert_eq!(q.required::<f64>("alpha").unwrap(), 0.2);
        flags.insert("alpha".into(), "0.7".into());
        let mut r = Params::new("sweep", flags, Some(&file));
        assert_eq!(r.required::<f64>("alpha").unwrap(), 0.7);
        assert_eq!(r.resolved()["alpha"], serde_json::json!(0.7));
    }

    #[test]
    fn list_errors_point_at_item() {
        assert_eq!(list::<f64>("1, 2,3").unwrap(), vec![1.0, 2.0, 3.0]);
        let (at, _) = list::<f64>("1,2, x").unwrap_err();
        assert_eq!(at, 5);
    }

    #[test]
    fn file_domain_error_has_column() {
        let file = ConfigFile::parse("domain = {type: square}\n", Path::new("f")).unwrap();
        let mut p = Params::new("opval", BTreeMap::new(), Some(&file));
        let err = p.domain().unwrap_err().to_string();
        assert!(err.contains("f:1:"), "{err}");
    }
}
