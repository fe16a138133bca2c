//! Merges command-line flags over an optional JSON config file.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::error::{usage, CliError, CliResult};

/// Fields set on the command line win; the file fills the rest. Unknown
/// keys in the file are rejected by the target type. An optional
/// `"command"` key must name the running subcommand.
pub fn resolve<T: Serialize + DeserializeOwned>(
    flags: &T,
    config: Option<&Path>,
    command: &str,
) -> CliResult<T> {
    let Some(path) = config else {
        return serde_json::from_value(
            serde_json::to_value(flags).map_err(|e| usage(e.to_string()))?,
        )
        .map_err(|e| usage(e.to_string()));
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
    let mut merged = match serde_json::from_str::<Value>(&text) {
        Ok(Value::Object(m)) => m,
        Ok(_) => {
            return Err(usage(format!(
                "config {} must be a JSON object",
                path.display()
            )))
        }
        Err(e) => return Err(CliError::Input(format!("config {}: {e}", path.display()))),
    };
    if let Some(c) = merged.remove("command") {
        if c.as_str() != Some(command) {
            return Err(usage(format!("config is for command {c}, not '{command}'")));
        }
    }
    let Value::Object(from_flags) =
        serde_json::to_value(flags).map_err(|e| usage(e.to_string()))?
    else {
        unreachable!("argument structs serialize to objects")
    };
    for (k, v) in from_flags {
        if !(v.is_null() || v == Value::Bool(false)) {
            merged.insert(k, v);
        }
    }
    serde_json::from_value(Value::Object(merged))
        .map_err(|e| usage(format!("config {}: {e}", path.display())))
}

/// An input file that must exist.
pub fn input_path(p: &Option<PathBuf>, what: &str) -> CliResult<PathBuf> {
    let p = p
        .clone()
        .ok_or_else(|| usage(format!("--{what} is required")))?;
    if !p.is_file() {
        return Err(CliError::Input(format!(
            "{what} file {} does not exist",
            p.display()
        )));
    }
    Ok(p)
}

pub fn output_dir(p: &Option<PathBuf>) -> CliResult<PathBuf> {
    let p = p.clone().unwrap_or_else(|| PathBuf::from("."));
    if p.exists() && !p.is_dir() {
        return Err(usage(format!(
            "output dir {} is not a directory",
            p.display()
        )));
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Debug, Default, Serialize, Deserialize, PartialEq)]
    #[serde(deny_unknown_fields, default)]
    struct A {
        order: Option<usize>,
        n_revs: Option<usize>,
        plot: bool,
    }

    fn file(text: &str) -> tempfile::NamedTempFile {
        let f = tempfile::NamedTempFile::new().unwrap();
        std::fs::write(f.path(), text).unwrap();
        f
    }

    #[test]
    fn flags_override_file() {
        let f = file(r#"{"order": 2, "n_revs": 10, "plot": true}"#);
        let flags = A {
            order: Some(1),
            ..A::default()
        };
        let r = resolve(&flags, Some(f.path()), "orbit").unwrap();
        assert_eq!(
            r,
            A {
                order: Some(1),
                n_revs: Some(10),
                plot: true
            }
        );
    }

    #[test]
    fn unknown_key_is_a_usage_error() {
        let f = file(r#"{"ordr": 2}"#);
        assert!(matches!(
            resolve(&A::default(), Some(f.path()), "orbit"),
            Err(CliError::Usage(_))
        ));
    }

    #[test]
    fn command_key_must_match() {
        let f = file(r#"{"command": "orbit", "order": 3}"#);
        assert_eq!(
            resolve(&A::default(), Some(f.path()), "orbit")
                .unwrap()
                .order,
            Some(3)
        );
        assert!(matches!(
            resolve(&A::default(), Some(f.path()), "shock"),
            Err(CliError::Usage(_))
        ));
    }

    #[test]
    fn malformed_json_is_an_input_error() {
        let f = file("{not json");
        assert!(matches!(
            resolve(&A::default(), Some(f.path()), "orbit"),
            Err(CliError::Input(_))
        ));
    }
}
