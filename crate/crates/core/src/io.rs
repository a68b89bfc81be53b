//! CSV and file helpers shared by every module that writes artifacts.

use std::fs;
use std::path::Path;

use crate::error::{Result, RlError};

/// Writes `contents` to a sibling temp file and renames it over `path`, so
/// readers never observe a partially written file.
pub fn write_atomic(path: impl AsRef<Path>, contents: &str) -> Result<()> {
    let path = path.as_ref();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let file_name = path
        .file_name()
        .ok_or_else(|| RlError::InvalidInput(format!("{} is not a file path", path.display())))?;
    let mut tmp_name = file_name.to_os_string();
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Accumulates CSV rows under a fixed header.
#[derive(Debug, Clone)]
pub struct CsvTable {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Appends a row; panics if its width differs from the header's.
    pub fn push<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: ToString,
    {
        let row: Vec<String> = fields.into_iter().map(|f| f.to_string()).collect();
        assert_eq!(row.len(), self.header.len(), "CSV row width");
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path, &self.render())
    }
}

/// Splits CSV text into rows after checking the header matches `expected`.
/// Fields are plain: no quoting, no embedded commas.
pub fn read_csv(text: &str, expected: &[&str]) -> Result<Vec<Vec<String>>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| RlError::Parse("missing CSV header".into()))?;
    let found: Vec<&str> = header.split(',').map(str::trim).collect();
    if found != expected {
        return Err(RlError::Parse(format!(
            "CSV header {found:?}, expected {expected:?}"
        )));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let fields: Vec<String> = line.split(',').map(|f| f.trim().to_string()).collect();
            if fields.len() != expected.len() {
                Err(RlError::Parse(format!(
                    "row {} has {} fields, expected {}",
                    i + 1,
                    fields.len(),
                    expected.len()
                )))
            } else {
                Ok(fields)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_renders_and_reads_back() {
        let mut t = CsvTable::new(&["step", "value"]);
        t.push([1.to_string(), 0.5.to_string()]);
        t.push([2.to_string(), (-3.25f64).to_string()]);
        let text = t.render();
        assert_eq!(text, "step,value\n1,0.5\n2,-3.25\n");
        let rows = read_csv(&text, &["step", "value"]).unwrap();
        assert_eq!(rows[1], vec!["2", "-3.25"]);
        assert!(read_csv(&text, &["step"]).is_err());
    }

    #[test]
    fn atomic_write_leaves_no_temp_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/out.csv");
        write_atomic(&path, "a,b\n").unwrap();
        write_atomic(&path, "c,d\n").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "c,d\n");
        let names: Vec<_> = fs::read_dir(path.parent().unwrap()).unwrap().collect();
        assert_eq!(names.len(), 1);
    }
}
