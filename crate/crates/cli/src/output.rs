use std::fs::File;
use std::io::{self, IsTerminal, Write};
use std::path::Path;

#[derive(Debug)]
pub enum Failure {
    /// Malformed input or an impossible request; exit status 1.
    Input(String),
    /// The computation ran but a checked property failed; exit status 2.
    Violation(String),
}

impl From<sandwich_core::Error> for Failure {
    fn from(e: sandwich_core::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

fn styled(label: &str, code: &str) -> String {
    let color = std::env::var_os("NO_COLOR").is_none_or(|v| v.is_empty()) && io::stderr().is_terminal();
    if color {
        format!("\x1b[{code}m{label}\x1b[0m")
    } else {
        label.to_string()
    }
}

pub fn error(msg: &str) {
    eprintln!("{}: {msg}", styled("error", "1;31"));
}

pub fn warn(msg: &str) {
    eprintln!("{}: {msg}", styled("warning", "1;33"));
}

/// Writes `text` to `path`, or to stdout when no path is given.
pub fn emit(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => {
            let mut f = File::create(p).map_err(|e| Failure::Input(format!("{}: {e}", p.display())))?;
            f.write_all(text.as_bytes())?;
        }
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}

/// Names the path on I/O errors, which otherwise arrive without one.
pub fn with_path(path: &std::path::Path) -> impl FnOnce(sandwich_core::Error) -> Failure + '_ {
    move |e| match e {
        sandwich_core::Error::Io(io) => Failure::Input(format!("{}: {io}", path.display())),
        other => other.into(),
    }
}
