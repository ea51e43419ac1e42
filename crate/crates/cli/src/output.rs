//! CSV tables and run manifests.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

/// A CSV table with a header row; `.` decimal separator, `\n` line endings.
#[derive(Debug, Clone, Default)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn render(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.iter().map(|c| quote(c)).collect::<Vec<_>>().join(","));
            s.push('\n');
        }
        s
    }
}

fn quote(c: &str) -> String {
    if c.contains([',', '"', '\n']) {
        format!("\"{}\"", c.replace('"', "\"\""))
    } else {
        c.to_string()
    }
}

/// Shortest representation that parses back to the same `f64`; very small
/// and very large magnitudes use exponent notation.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

/// Human-readable `key = value` manifest, in insertion order.
#[derive(Debug, Clone, Default)]
pub struct Manifest {
    lines: Vec<(String, String)>,
}

impl Manifest {
    pub fn set(&mut self, key: impl Into<String>, value: impl ToString) {
        self.lines.push((key.into(), value.to_string()));
    }

    pub fn num(&mut self, key: impl Into<String>, value: f64) {
        self.set(key, num(value));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.lines.iter().rev().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.lines {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }
}

/// Writes the artifacts of one command into `dir`.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub dir: PathBuf,
    pub command: String,
}

impl Artifacts {
    pub fn new(dir: &Path, command: &str) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), command: command.to_string() })
    }

    /// `<command>.csv`, or `<command>_<suffix>.csv` for companion tables.
    pub fn table(&self, suffix: Option<&str>, t: &Table) -> io::Result<PathBuf> {
        let name = match suffix {
            Some(s) => format!("{}_{s}.csv", self.command),
            None => format!("{}.csv", self.command),
        };
        let path = self.dir.join(name);
        fs::write(&path, t.render())?;
        Ok(path)
    }

    pub fn manifest(&self, m: &Manifest) -> io::Result<PathBuf> {
        let path = self.dir.join(format!("{}.manifest", self.command));
        fs::write(&path, m.render())?;
        Ok(path)
    }
}
