//! CSV assembly: header plus typed rows, 17-significant-digit floats,
//! LF line endings, no trailing delimiter, no timestamps.

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

pub enum Field {
    Text(&'static str),
    Int(u64),
    Num(f64),
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Field::Text(s) => f.write_str(s),
            Field::Int(n) => write!(f, "{n}"),
            // One digit before the point, sixteen after: parses back to the
            // identical double.
            Field::Num(x) => write!(f, "{x:.16e}"),
        }
    }
}

pub struct CsvDoc {
    header: Vec<&'static str>,
    rows: Vec<Vec<Field>>,
}

impl CsvDoc {
    pub fn new(header: &[&'static str]) -> Self {
        CsvDoc {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Field>) {
        assert_eq!(row.len(), self.header.len(), "row width != header width");
        self.rows.push(row);
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|f| f.to_string()).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// File when a path is given, stdout otherwise.
    pub fn write(&self, out: Option<&Path>) -> io::Result<()> {
        match out {
            Some(path) => fs::write(path, self.render()),
            None => io::stdout().write_all(self.render().as_bytes()),
        }
    }
}
