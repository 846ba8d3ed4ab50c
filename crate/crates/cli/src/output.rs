//! CSV emission: `#` comment headers, comma separators, and floats in
//! scientific notation with 12 significant digits.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else {
        format!("{x:.11e}")
    }
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "nan".to_string(), fmt_f64)
}

/// Keeps free text from breaking the column layout.
pub fn sanitize(text: &str) -> String {
    text.replace([',', '\n', '\r'], ";")
}

pub struct CsvTable {
    pub comments: Vec<(String, String)>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Self {
            comments: Vec::new(),
            columns,
            rows: Vec::new(),
        }
    }

    pub fn comment(&mut self, key: &str, value: impl ToString) {
        self.comments.push((key.to_string(), value.to_string()));
    }

    pub fn write_to<W: Write>(&self, out: &mut W) -> io::Result<()> {
        for (k, v) in &self.comments {
            writeln!(out, "# {k} = {v}")?;
        }
        writeln!(out, "{}", self.columns.join(","))?;
        for row in &self.rows {
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    /// Writes to `path`, or to stdout when `path` is None.
    pub fn emit(&self, path: Option<&Path>) -> io::Result<()> {
        match path {
            Some(p) => {
                let mut w = BufWriter::new(File::create(p)?);
                self.write_to(&mut w)?;
                w.flush()
            }
            None => {
                let stdout = io::stdout();
                let mut lock = stdout.lock();
                self.write_to(&mut lock)
            }
        }
    }
}
