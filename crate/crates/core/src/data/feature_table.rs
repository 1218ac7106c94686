use std::fmt::Write as _;
use std::path::Path;

use super::DomainView;
use crate::error::{Error, Result};
use crate::math::Matrix;

/// Reads a delimited numeric table: one sample per line, comma- or
/// whitespace-separated, last field an integer class id. Blank lines and
/// lines starting with `#` are skipped. The view is named after the file stem.
pub fn load_feature_table(path: impl AsRef<Path>) -> Result<DomainView> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_feature_table(&text, &name, &path.display().to_string())
}

pub fn parse_feature_table(text: &str, name: &str, origin: &str) -> Result<DomainView> {
    let err = |row: usize, message: String| Error::Parse {
        path: origin.to_string(),
        row,
        message,
    };
    let mut data = Vec::new();
    let mut labels = Vec::new();
    let mut width: Option<usize> = None;
    for (lineno, line) in text.lines().enumerate() {
        let row = lineno + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|f| !f.is_empty())
            .collect();
        if fields.len() < 2 {
            return Err(err(row, "need at least one feature and a label".into()));
        }
        match width {
            None => width = Some(fields.len()),
            Some(w) if w != fields.len() => {
                return Err(err(
                    row,
                    format!("expected {w} columns, found {}", fields.len()),
                ))
            }
            _ => {}
        }
        let (feats, label) = fields.split_at(fields.len() - 1);
        for f in feats {
            let v: f64 = f
                .parse()
                .map_err(|_| err(row, format!("non-numeric cell `{f}`")))?;
            if !v.is_finite() {
                return Err(err(row, format!("non-finite cell `{f}`")));
            }
            data.push(v);
        }
        let c: usize = label[0]
            .parse()
            .map_err(|_| err(row, format!("label `{}` is not a class id", label[0])))?;
        labels.push(c);
    }
    let Some(w) = width else {
        return Err(err(0, "no rows".into()));
    };
    DomainView::new(name, Matrix::new(labels.len(), w - 1, data)?, labels)
}

/// Writes a view in the same format (comma-separated, shortest round-trip
/// float formatting).
pub fn write_feature_table(view: &DomainView, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for (row, label) in view.x.row_iter().zip(&view.labels) {
        for v in row {
            let _ = write!(out, "{v},");
        }
        let _ = writeln!(out, "{label}");
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_small_fixture() {
        let v = parse_feature_table("0.5, 1, -2, 3\n4 5 6e-1 0\n", "d", "mem").unwrap();
        assert_eq!(v.x.shape(), (2, 3));
        assert_eq!(v.x.row(1), &[4.0, 5.0, 0.6]);
        assert_eq!(v.labels, vec![3, 0]);
    }

    #[test]
    fn empty_file() {
        let e = parse_feature_table("\n# nothing\n", "d", "mem").unwrap_err();
        assert!(e.to_string().contains("no rows"));
    }

    #[test]
    fn ragged_row_names_row() {
        let e = parse_feature_table("1,2,0\n1,2,3,1\n", "d", "f.csv").unwrap_err();
        match e {
            Error::Parse { row, .. } => assert_eq!(row, 2),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn non_numeric_cell() {
        let e = parse_feature_table("1,2,0\n1,x,1\n", "d", "f.csv").unwrap_err();
        assert!(e.to_string().contains("row 2"));
        assert!(parse_feature_table("1,2,0.5\n", "d", "f").is_err());
    }

    #[test]
    fn write_then_load() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("dom.csv");
        let v = parse_feature_table("0.1,0.2,1\n0.3,1e-9,0\n", "dom", "mem").unwrap();
        write_feature_table(&v, &p).unwrap();
        assert_eq!(load_feature_table(&p).unwrap(), v);
    }
}
