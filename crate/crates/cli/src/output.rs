//! Output directory with a JSON manifest.

use serde::Serialize;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

pub struct OutDir {
    root: PathBuf,
    files: Vec<String>,
}

impl OutDir {
    pub fn create(root: &Path) -> std::io::Result<Self> {
        std::fs::create_dir_all(root)?;
        Ok(OutDir {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Opens `name` for writing and records it in the manifest.
    pub fn file(&mut self, name: &str) -> std::io::Result<BufWriter<File>> {
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
        Ok(BufWriter::new(File::create(self.root.join(name))?))
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> std::io::Result<()> {
        let mut w = self.file(name)?;
        serde_json::to_writer_pretty(&mut w, value)?;
        writeln!(w)?;
        w.flush()
    }

    pub fn csv<T: Serialize>(&mut self, name: &str, rows: impl IntoIterator<Item = T>) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(self.file(name)?);
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()
    }

    pub fn text(&mut self, name: &str, body: &str) -> std::io::Result<()> {
        let mut w = self.file(name)?;
        w.write_all(body.as_bytes())?;
        w.flush()
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }
}

#[derive(Serialize)]
pub struct Manifest<'a, C: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub status: &'a str,
    pub config: &'a C,
    pub files: &'a [String],
}

/// Written on failure, both to `error.json` and to stderr.
#[derive(Serialize)]
pub struct ErrorRecord<'a> {
    pub status: &'static str,
    pub kind: &'a str,
    pub message: String,
    pub exit_code: i32,
    pub report: Option<String>,
}
