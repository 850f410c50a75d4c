//! JSON config files layered under command-line flags.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

/// Fields present on the command line win over the config file.
pub fn overlay<T: Serialize + DeserializeOwned>(
    flags: &T,
    config: Option<&Path>,
) -> Result<T, String> {
    let Some(path) = config else {
        let value = serde_json::to_value(flags).map_err(|e| e.to_string())?;
        return serde_json::from_value(value).map_err(|e| e.to_string());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    let mut merged: Value = serde_json::from_str(&text)
        .map_err(|e| format!("config {} is not valid JSON: {e}", path.display()))?;
    let Value::Object(base) = &mut merged else {
        return Err(format!("config {} must hold a JSON object", path.display()));
    };
    if let Value::Object(given) = serde_json::to_value(flags).map_err(|e| e.to_string())? {
        for (key, v) in given {
            if !v.is_null() && v != Value::Bool(false) {
                base.insert(key, v);
            }
        }
    }
    serde_json::from_value(merged).map_err(|e| format!("config {}: {e}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;
    use std::io::Write;

    #[derive(Serialize, Deserialize, Debug, PartialEq)]
    #[serde(deny_unknown_fields, rename_all = "kebab-case")]
    struct Demo {
        depth: Option<usize>,
        burn_in: Option<usize>,
        quick: bool,
    }

    fn file(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn flags_override_config() {
        let f = file(r#"{"depth": 5, "burn-in": 7, "quick": true}"#);
        let flags = Demo {
            depth: Some(9),
            burn_in: None,
            quick: false,
        };
        let out = overlay(&flags, Some(f.path())).unwrap();
        assert_eq!(
            out,
            Demo {
                depth: Some(9),
                burn_in: Some(7),
                quick: true
            }
        );
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        let f = file(r#"{"dpeth": 5}"#);
        let flags = Demo {
            depth: None,
            burn_in: None,
            quick: false,
        };
        let err = overlay(&flags, Some(f.path())).unwrap_err();
        assert!(err.contains("dpeth"), "{err}");
    }
}
