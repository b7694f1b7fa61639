//! Calibration-table files.
//!
//! A table is stored as JSON with the Frac counts, contraction factor,
//! column count and one ladder level per column. Patterns are rebuilt from
//! the ladder on load.

use std::path::{Path, PathBuf};

use pudtune_core::{CalibrationTable, FracConfig};
use serde::{Deserialize, Serialize};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum TableIoError {
    #[error("cannot access calibration table {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed calibration table {path}: {reason}")]
    Malformed { path: PathBuf, reason: String },
    #[error("calibration table {path} has format version {found}, expected {FORMAT_VERSION}")]
    Version { path: PathBuf, found: u64 },
    #[error("calibration table {path} covers {found} columns, the subarray has {expected}")]
    GeometryMismatch {
        path: PathBuf,
        expected: usize,
        found: usize,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TableFile {
    format_version: u64,
    frac_config: [u8; 3],
    contraction_f: f64,
    n_cols: usize,
    levels: Vec<usize>,
}

pub fn to_json(table: &CalibrationTable) -> String {
    let file = TableFile {
        format_version: u64::from(FORMAT_VERSION),
        frac_config: table.frac_config().counts(),
        contraction_f: table.contraction_f(),
        n_cols: table.n_cols(),
        levels: table.levels().to_vec(),
    };
    // Plain data with no maps keyed by non-strings cannot fail to encode.
    serde_json::to_string(&file).expect("table serializes")
}

pub fn save_table(table: &CalibrationTable, path: &Path) -> Result<(), TableIoError> {
    let mut text = to_json(table);
    text.push('\n');
    std::fs::write(path, text).map_err(|source| TableIoError::Io {
        path: path.to_owned(),
        source,
    })
}

/// Parses a table document. `path` is only used in diagnostics.
pub fn from_json(text: &str, path: &Path) -> Result<CalibrationTable, TableIoError> {
    let malformed = |reason: String| TableIoError::Malformed {
        path: path.to_owned(),
        reason,
    };
    // Check the version before the full schema so that a newer layout is
    // reported as such rather than as a parse failure.
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| malformed(e.to_string()))?;
    let found = value
        .get("format_version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| malformed("missing format_version".into()))?;
    if found != u64::from(FORMAT_VERSION) {
        return Err(TableIoError::Version {
            path: path.to_owned(),
            found,
        });
    }
    let file: TableFile = serde_json::from_value(value).map_err(|e| malformed(e.to_string()))?;
    if file.levels.len() != file.n_cols {
        return Err(malformed(format!(
            "n_cols is {} but {} levels are listed",
            file.n_cols,
            file.levels.len()
        )));
    }
    let [x, y, z] = file.frac_config;
    let frac = FracConfig::new(x, y, z).map_err(|e| malformed(e.to_string()))?;
    CalibrationTable::from_levels(frac, file.contraction_f, file.levels)
        .map_err(|e| malformed(e.to_string()))
}

/// Loads a table, checking its width against `expected_cols` when given.
pub fn load_table(
    path: &Path,
    expected_cols: Option<usize>,
) -> Result<CalibrationTable, TableIoError> {
    let text = std::fs::read_to_string(path).map_err(|source| TableIoError::Io {
        path: path.to_owned(),
        source,
    })?;
    let table = from_json(&text, path)?;
    if let Some(expected) = expected_cols {
        if table.n_cols() != expected {
            return Err(TableIoError::GeometryMismatch {
                path: path.to_owned(),
                expected,
                found: table.n_cols(),
            });
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> CalibrationTable {
        CalibrationTable::from_levels(FracConfig::new(2, 1, 0).unwrap(), 0.5, vec![0, 3, 7, 4, 5])
            .unwrap()
    }

    #[test]
    fn json_round_trip() {
        let t = table();
        let back = from_json(&to_json(&t), Path::new("x")).unwrap();
        assert_eq!(back, t);
        assert!(back.is_consistent());
    }

    #[test]
    fn file_round_trip_and_width_check() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.json");
        save_table(&table(), &path).unwrap();
        assert_eq!(load_table(&path, Some(5)).unwrap(), table());
        assert!(matches!(
            load_table(&path, Some(6)),
            Err(TableIoError::GeometryMismatch {
                expected: 6,
                found: 5,
                ..
            })
        ));
    }

    #[test]
    fn version_and_shape_errors() {
        let p = Path::new("x");
        let text = to_json(&table()).replace("\"format_version\":1", "\"format_version\":2");
        assert!(matches!(
            from_json(&text, p),
            Err(TableIoError::Version { found: 2, .. })
        ));
        let text = to_json(&table()).replace("\"n_cols\":5", "\"n_cols\":4");
        assert!(matches!(
            from_json(&text, p),
            Err(TableIoError::Malformed { .. })
        ));
        let text = to_json(&table()).replace("[0,3,7,4,5]", "[0,3,8,4,5]");
        assert!(matches!(
            from_json(&text, p),
            Err(TableIoError::Malformed { .. })
        ));
        assert!(matches!(
            from_json("{", p),
            Err(TableIoError::Malformed { .. })
        ));
        assert!(matches!(
            from_json("{}", p),
            Err(TableIoError::Malformed { .. })
        ));
    }

    #[test]
    fn missing_file_is_an_io_error() {
        let e = load_table(Path::new("/nonexistent/missing.bin"), None).unwrap_err();
        assert!(matches!(e, TableIoError::Io { .. }));
        assert!(e.to_string().contains("missing.bin"));
        assert!(std::error::Error::source(&e).is_some());
    }
}
