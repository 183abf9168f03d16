//! `key = value` config files. Every key is a long flag name; flags given on
//! the command line win.

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: usize,
    pub msg: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config line {}: {}", self.line, self.msg)
    }
}

pub fn parse_config(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError {
                line: i + 1,
                msg: format!("expected `key = value`, got `{line}`"),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || key.contains(char::is_whitespace) || key == "config" {
            return Err(ConfigError {
                line: i + 1,
                msg: format!("bad key `{key}`"),
            });
        }
        out.push((key.replace('_', "-"), value.to_string()));
    }
    Ok(out)
}

/// Path given to `--config`, if any.
pub fn config_path(args: &[String]) -> Option<String> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(rest) = a.strip_prefix("--config=") {
            return Some(rest.to_string());
        }
    }
    None
}

/// Appends `--key value` for every config entry whose flag is absent from `args`.
pub fn merge(args: &mut Vec<String>, entries: &[(String, String)]) {
    for (key, value) in entries {
        let flag = format!("--{key}");
        let prefix = format!("{flag}=");
        if args.iter().any(|a| *a == flag || a.starts_with(&prefix)) {
            continue;
        }
        args.push(flag);
        args.push(value.clone());
    }
}
