//! Optional TOML config files. Each subcommand reads its own section
//! (`[lab]`, `[qr]`, `[bounds]`); command-line flags take precedence.
//! Relative paths in a config file are resolved against its directory.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;

use crate::output::Failure;

/// Parses the whole file into `D`, a wrapper whose one field is the
/// command's section, so error spans stay relative to the file.
pub fn load_document<D: DeserializeOwned + Default>(path: Option<&Path>) -> Result<D, Failure> {
    let Some(path) = path else {
        return Ok(D::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| {
        let line = e
            .span()
            .map(|s| format!(", line {}", text[..s.start.min(text.len())].matches('\n').count() + 1))
            .unwrap_or_default();
        Failure::Input(format!("{}{line}: {}", path.display(), e.message()))
    })
}

/// Resolves a path from a config file relative to that file.
pub fn relative_to(config: Option<&Path>, p: PathBuf) -> PathBuf {
    match config.and_then(Path::parent) {
        Some(dir) if p.is_relative() => dir.join(p),
        _ => p,
    }
}
