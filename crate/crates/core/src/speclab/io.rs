//! TOML input files for the spectral lab.
//!
//! ```toml
//! [table]
//! rows = 2
//! cols = 2
//! probabilities = [0.3, 0.2,
//!                  0.1, 0.4]   # row-major, rows index X
//!
//! [action]                      # optional; may also live in its own file
//! generators = [[1, 0]]         # or `elements = [...]` listing the whole group
//! ```

use std::ops::Range;
use std::path::Path;

use serde::Deserialize;
use toml::Spanned;

use super::group::GroupAction;
use super::table::JointTable;
use crate::{Error, Result};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TableSection {
    rows: Spanned<usize>,
    cols: Spanned<usize>,
    probabilities: Spanned<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ActionSection {
    generators: Option<Spanned<Vec<Vec<usize>>>>,
    elements: Option<Spanned<Vec<Vec<usize>>>>,
}

#[derive(Debug, Deserialize)]
struct LabFile {
    table: Option<TableSection>,
    action: Option<Spanned<ActionSection>>,
}

/// Parsed contents of a lab input file.
#[derive(Debug, Clone)]
pub struct LabInput {
    pub table: Option<JointTable>,
    pub action: Option<GroupAction>,
}

fn line_of(text: &str, span: Range<usize>) -> usize {
    text[..span.start.min(text.len())].matches('\n').count() + 1
}

fn located(context: &str, text: &str, span: Range<usize>, err: impl std::fmt::Display) -> Error {
    Error::Parse {
        context: format!("{context}, line {}", line_of(text, span)),
        message: err.to_string(),
    }
}

/// Parses a lab file; `context` (usually the path) prefixes diagnostics.
pub fn parse_lab(text: &str, context: &str) -> Result<LabInput> {
    let file: LabFile = toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| format!(", line {}", line_of(text, s))).unwrap_or_default();
        Error::Parse {
            context: format!("{context}{line}"),
            message: e.message().to_string(),
        }
    })?;

    let table = match file.table {
        None => None,
        Some(t) => {
            let (rows, cols) = (*t.rows.get_ref(), *t.cols.get_ref());
            if rows == 0 || cols == 0 {
                return Err(located(context, text, t.rows.span(), "table dimensions must be positive"));
            }
            let probs = t.probabilities.get_ref();
            if probs.len() != rows * cols {
                return Err(located(
                    context,
                    text,
                    t.probabilities.span(),
                    format!("expected {} probabilities for a {rows}×{cols} table, found {}", rows * cols, probs.len()),
                ));
            }
            let table = JointTable::from_row_major(rows, cols, probs)
                .map_err(|e| located(context, text, t.probabilities.span(), e))?;
            Some(table)
        }
    };

    let action = match file.action {
        None => None,
        Some(section) => {
            let span = section.span();
            let a = section.into_inner();
            let built = match (a.generators, a.elements) {
                (Some(g), None) => GroupAction::from_generators(g.get_ref()).map_err(|e| located(context, text, g.span(), e))?,
                (None, Some(el)) => GroupAction::new(el.get_ref().clone()).map_err(|e| located(context, text, el.span(), e))?,
                _ => return Err(located(context, text, span, "[action] needs exactly one of `generators` or `elements`")),
            };
            Some(built)
        }
    };

    if let (Some(t), Some(a)) = (&table, &action) {
        if a.n_states() != t.ny() {
            return Err(Error::Parse {
                context: context.to_string(),
                message: format!("action permutes {} states but the table has {} Y-states", a.n_states(), t.ny()),
            });
        }
    }
    Ok(LabInput { table, action })
}

pub fn load_lab(path: &Path) -> Result<LabInput> {
    let text = std::fs::read_to_string(path)?;
    parse_lab(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_table_and_generated_action() {
        let text = "[table]\nrows = 1\ncols = 4\nprobabilities = [0.1, 0.2, 0.3, 0.4]\n\n[action]\ngenerators = [[1, 0, 3, 2]]\n";
        let input = parse_lab(text, "t").unwrap();
        assert_eq!(input.table.unwrap().ny(), 4);
        assert_eq!(input.action.unwrap().order(), 2);
    }

    #[test]
    fn mass_error_points_at_probabilities_line() {
        let text = "[table]\nrows = 2\ncols = 2\n\nprobabilities = [0.3, 0.2, 0.1, 0.3]\n";
        let err = parse_lab(text, "bad.toml").unwrap_err().to_string();
        assert!(err.contains("bad.toml, line 5"), "{err}");
    }

    #[test]
    fn syntax_error_reports_line() {
        let text = "[table]\nrows = 2\ncols = = 2\n";
        let err = parse_lab(text, "bad.toml").unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
    }

    #[test]
    fn wrong_count_is_rejected() {
        let text = "[table]\nrows = 2\ncols = 2\nprobabilities = [0.5, 0.5]\n";
        assert!(parse_lab(text, "t").is_err());
    }

    #[test]
    fn mismatched_action_size_is_rejected() {
        let text = "[table]\nrows = 1\ncols = 2\nprobabilities = [0.5, 0.5]\n[action]\ngenerators = [[1, 0, 2]]\n";
        assert!(parse_lab(text, "t").is_err());
    }
}
