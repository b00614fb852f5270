//! CSV tables prefixed with `#` lines that echo the resolved configuration.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::CliError;

pub struct Table {
    path: PathBuf,
    writer: csv::Writer<BufWriter<File>>,
}

impl Table {
    pub fn create(dir: &Path, name: &str, header: &[String], columns: &[&str]) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
        let path = dir.join(name);
        let file = File::create(&path).map_err(|e| CliError::Io(format!("cannot create {}: {e}", path.display())))?;
        let mut out = BufWriter::new(file);
        for line in header {
            writeln!(out, "# {line}")?;
        }
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(columns)?;
        Ok(Self { path, writer })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<PathBuf, CliError> {
        self.writer.flush()?;
        Ok(self.path)
    }
}

pub fn num(v: f64) -> String {
    format!("{v}")
}

/// Missing values are written as empty fields.
pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}
