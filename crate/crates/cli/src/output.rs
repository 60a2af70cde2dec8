use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use crate::args::Format;

/// Where results go: files under a directory, or stdout.
pub struct Sink {
    dir: Option<PathBuf>,
    pub format: Format,
}

impl Sink {
    pub fn new(dir: Option<PathBuf>, format: Format) -> Self {
        Self { dir, format }
    }

    /// A sink that always writes files, defaulting to `fallback`.
    pub fn bundle(dir: Option<PathBuf>, format: Format, fallback: &str) -> Result<Self> {
        let dir = dir.unwrap_or_else(|| PathBuf::from(fallback));
        fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
        Ok(Self::new(Some(dir), format))
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    fn open(&self, file: &str) -> Result<Box<dyn Write>> {
        match &self.dir {
            Some(d) => {
                fs::create_dir_all(d).with_context(|| format!("cannot create {}", d.display()))?;
                let path = d.join(file);
                let f = fs::File::create(&path)
                    .with_context(|| format!("cannot write {}", path.display()))?;
                Ok(Box::new(io::BufWriter::new(f)))
            }
            None => Ok(Box::new(io::stdout().lock())),
        }
    }

    /// Rows as `<stem>.csv` or `<stem>.json` depending on the format.
    pub fn table<T: Serialize>(&self, stem: &str, rows: &[T]) -> Result<()> {
        match self.format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(self.open(&format!("{stem}.csv"))?);
                for r in rows {
                    w.serialize(r)?;
                }
                w.flush()?;
                Ok(())
            }
            Format::Json => self.json(stem, &rows),
        }
    }

    /// Pretty JSON as `<stem>.json`.
    pub fn json<T: Serialize + ?Sized>(&self, stem: &str, value: &T) -> Result<()> {
        let mut w = self.open(&format!("{stem}.json"))?;
        serde_json::to_writer_pretty(&mut w, value)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }

    /// Raw bytes produced by `fill` into `<file>`.
    pub fn raw(&self, file: &str, fill: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
        let mut w = self.open(file)?;
        fill(&mut w)?;
        w.flush()?;
        Ok(())
    }
}
