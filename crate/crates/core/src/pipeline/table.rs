//! Small CSV helpers shared by the stage writers and readers.

use std::fs::File;
use std::path::{Path, PathBuf};

use crate::error::{from_csv, Error, Result};

pub(crate) struct TableWriter {
    path: PathBuf,
    inner: csv::Writer<File>,
}

impl TableWriter {
    pub fn create<S: AsRef<str>>(path: &Path, header: &[S]) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = Self {
            path: path.to_path_buf(),
            inner: csv::Writer::from_writer(file),
        };
        w.row(header.iter().map(|s| s.as_ref().to_string()))?;
        Ok(w)
    }

    pub fn row<I: IntoIterator<Item = String>>(&mut self, fields: I) -> Result<()> {
        self.inner
            .write_record(fields.into_iter().collect::<Vec<_>>())
            .map_err(|e| from_csv(&self.path, e))
    }

    pub fn finish(mut self) -> Result<()> {
        self.inner.flush().map_err(|e| Error::io(&self.path, e))
    }
}

/// A fully read CSV file.
pub(crate) struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn read(path: &Path) -> Result<Table> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut rdr = csv::Reader::from_reader(file);
        let header = rdr
            .headers()
            .map_err(|e| from_csv(path, e))?
            .iter()
            .map(String::from)
            .collect();
        let rows = rdr
            .records()
            .map(|r| r.map(|r| r.iter().map(String::from).collect()).map_err(|e| from_csv(path, e)))
            .collect::<Result<_>>()?;
        Ok(Table { header, rows })
    }

    /// Reads and checks that the header starts with `expected`.
    pub fn read_expecting(path: &Path, expected: &[&str]) -> Result<Table> {
        let t = Self::read(path)?;
        if t.header.len() < expected.len() || t.header.iter().zip(expected).any(|(a, b)| a != b) {
            return Err(Error::invalid(format!(
                "{}: header {:?} does not start with {:?}",
                path.display(),
                t.header,
                expected
            )));
        }
        Ok(t)
    }
}

pub(crate) fn parse_f64(path: &Path, row: usize, field: &str) -> Result<f64> {
    field.parse().map_err(|_| {
        Error::invalid(format!("{}: row {}: bad number {field:?}", path.display(), row + 1))
    })
}

pub(crate) fn parse_u64(path: &Path, row: usize, field: &str) -> Result<u64> {
    field.parse().map_err(|_| {
        Error::invalid(format!("{}: row {}: bad integer {field:?}", path.display(), row + 1))
    })
}
