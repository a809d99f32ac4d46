//! Flat key-value configuration files.
//!
//! ```text
//! # comment
//! seed = 7            # keys before any section apply to every command
//!
//! [sweep]
//! alpha = 0.3
//! tau = -0.2
//! domain = {type: interval, a: 0, b: 1}
//! rhos = 1e-2, 3e-3, 1e-3
//! ```
//!
//! Keys are the long flag names with `-` replaced by `_`. Section names are
//! command names (`verify-all` is written `[verify_all]`).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::CliError;

/// A value and the place it was read from.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub value: String,
    pub line: usize,
    /// 1-based column where the value starts.
    pub column: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    pub path: PathBuf,
    /// Section name to keys; the unnamed top-level section is `""`.
    pub sections: BTreeMap<String, BTreeMap<String, Entry>>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config {
            location: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self, CliError> {
        let at = |line: usize, column: usize, message: String| CliError::Config {
            location: format!("{}:{line}:{column}", path.display()),
            message,
        };
        let mut sections: BTreeMap<String, BTreeMap<String, Entry>> = BTreeMap::new();
        let mut current = String::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = match raw.find('#') {
                Some(i) => &raw[..i],
                None => raw,
            };
            let indent = content.len() - content.trim_start().len();
            let trimmed = content.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(rest) = trimmed.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| at(line, indent + trimmed.len(), "expected ']'".into()))?
                    .trim();
                if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                    return Err(at(line, indent + 2, format!("invalid section name '{name}'")));
                }
                current = name.to_string();
                continue;
            }
            let eq = trimmed
                .find('=')
                .ok_or_else(|| at(line, indent + 1, "expected 'key = value'".into()))?;
            let key = trimmed[..eq].trim();
            if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(at(line, indent + 1, format!("invalid key '{key}'")));
            }
            let after = &trimmed[eq + 1..];
            let value = after.trim();
            let column = indent + eq + 2 + (after.len() - after.trim_start().len());
            let section = sections.entry(current.clone()).or_default();
            if section.contains_key(key) {
                return Err(at(line, indent + 1, format!("duplicate key '{key}'")));
            }
            section.insert(
                key.to_string(),
                Entry {
                    value: value.to_string(),
                    line,
                    column,
                },
            );
        }
        Ok(ConfigFile {
            path: path.to_path_buf(),
            sections,
        })
    }

    /// Looks `key` up in `section`, then in the top-level keys.
    pub fn lookup(&self, section: &str, key: &str) -> Option<&Entry> {
        self.sections
            .get(section)
            .and_then(|s| s.get(key))
            .or_else(|| self.sections.get("").and_then(|s| s.get(key)))
    }
}
