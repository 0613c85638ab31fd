//! Self-describing plot-data files: every CSV starts with
//! `# config: <resolved-config-json>` followed by column headers; values
//! are written with 17 significant digits so a round trip through disk is
//! exact to within 1e-9 relative.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Format a float with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Write a plot CSV with the config header line.
pub fn write_csv(path: &Path, config_json: &str, columns: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "# config: {config_json}")?;
    writeln!(w, "{}", columns.join(","))?;
    for row in rows {
        let line: Vec<String> = row.iter().map(|x| fmt17(*x)).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Read back a plot CSV written by [`write_csv`]: returns the config
/// header line and the numeric rows.
pub fn read_csv(path: &Path) -> Result<(String, Vec<String>, Vec<Vec<f64>>)> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Data(format!("{}: empty file", path.display())))??;
    let config = header
        .strip_prefix("# config: ")
        .ok_or_else(|| Error::Data(format!("{}: missing config header", path.display())))?
        .to_string();
    let columns: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::Data(format!("{}: missing column header", path.display())))??
        .split(',')
        .map(|s| s.to_string())
        .collect();
    let mut rows = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: std::result::Result<Vec<f64>, _> = line.split(',').map(|v| v.trim().parse()).collect();
        rows.push(row.map_err(|e| Error::Data(format!("{}: bad row '{line}': {e}", path.display())))?);
    }
    Ok((config, columns, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_17_digits() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        let rows = vec![vec![1.0 / 3.0, 5.1e-5], vec![std::f64::consts::PI, -0.0925318]];
        write_csv(&path, "{\"seed\":1}", &["a", "b"], &rows).unwrap();
        let (cfg, cols, back) = read_csv(&path).unwrap();
        assert_eq!(cfg, "{\"seed\":1}");
        assert_eq!(cols, vec!["a", "b"]);
        for (r, s) in rows.iter().zip(&back) {
            for (x, y) in r.iter().zip(s) {
                assert!(((x - y) / x.abs().max(1e-300)).abs() < 1e-9);
            }
        }
    }
}
