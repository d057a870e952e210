//! Writing row tables as CSV or JSON.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::Format;
use crate::CliResult;

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Writes `rows` to `dir/stem.{csv,json}` and returns the path.
pub fn write_rows<T: Serialize>(dir: &Path, stem: &str, format: Format, rows: &[T]) -> CliResult<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(format!("{stem}.{}", format.extension()));
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_path(&path)?;
            for row in rows {
                w.serialize(row)?;
            }
            w.flush()?;
        }
        Format::Json => write_json(&path, &rows)?,
    }
    Ok(path)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    serde_json::to_writer_pretty(BufWriter::new(File::create(path)?), value)?;
    Ok(())
}

/// `n` log-spaced points from `lo` to `hi`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.log10(), hi.log10());
    (0..n).map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_hits_decades() {
        let g = log_grid(1e-6, 1e6, 49);
        assert_eq!(g.len(), 49);
        assert_eq!(g[24], 1.0);
        assert!((g[0] - 1e-6).abs() < 1e-20 && (g[48] - 1e6).abs() < 1e-6);
    }

    #[test]
    fn csv_and_json_rows() {
        #[derive(Serialize)]
        struct Row {
            a: f64,
            b: usize,
        }
        let dir = std::env::temp_dir().join(format!("tmg-output-{}", std::process::id()));
        let rows = [Row { a: 0.5, b: 1 }, Row { a: 1.5, b: 2 }];
        let csv = write_rows(&dir, "t", Format::Csv, &rows).unwrap();
        assert_eq!(fs::read_to_string(csv).unwrap(), "a,b\n0.5,1\n1.5,2\n");
        let json = write_rows(&dir, "t", Format::Json, &rows).unwrap();
        let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(json).unwrap()).unwrap();
        assert_eq!(v.as_array().unwrap().len(), 2);
        fs::remove_dir_all(dir).unwrap();
    }
}
