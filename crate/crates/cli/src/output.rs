//! Tab-separated report writing.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use sha2::{Digest, Sha256};

/// Everything that determines a run's output, hashed into the header.
pub struct Manifest {
    entries: Vec<(String, String)>,
    inputs: Vec<PathBuf>,
}

impl Manifest {
    pub fn new(command: &str) -> Self {
        Self { entries: vec![("command".into(), command.into())], inputs: Vec::new() }
    }

    pub fn set(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.entries.push((key.into(), value.to_string()));
        self
    }

    pub fn input(&mut self, key: &str, path: &Path) -> &mut Self {
        self.entries.push((key.into(), path.display().to_string()));
        self.inputs.push(path.to_path_buf());
        self
    }

    /// SHA-256 over the settings and the bytes of every input file.
    pub fn digest(&self) -> Result<String> {
        let mut h = Sha256::new();
        for (k, v) in &self.entries {
            h.update(format!("{k}={v}\n").as_bytes());
        }
        for p in &self.inputs {
            let bytes = fs::read(p).with_context(|| format!("cannot read {}", p.display()))?;
            h.update(Sha256::digest(&bytes));
        }
        Ok(hex::encode(h.finalize()))
    }
}

pub struct Report {
    out: Box<dyn Write>,
    pub precision: usize,
    pub raw: bool,
}

impl Report {
    pub fn open(path: Option<&Path>, precision: usize, raw: bool) -> Result<Self> {
        let out: Box<dyn Write> = match path {
            Some(p) => Box::new(io::BufWriter::new(
                fs::File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
            )),
            None => Box::new(io::BufWriter::new(io::stdout().lock())),
        };
        Ok(Self { out, precision, raw })
    }

    pub fn header(&mut self, seed: Option<u64>, manifest: &Manifest) -> Result<()> {
        let seed = seed.map_or_else(|| "none".to_string(), |s| s.to_string());
        writeln!(self.out, "# mcc {} seed={seed} manifest=sha256:{}", env!("CARGO_PKG_VERSION"), manifest.digest()?)?;
        Ok(())
    }

    pub fn comment(&mut self, text: &str) -> Result<()> {
        writeln!(self.out, "# {text}")?;
        Ok(())
    }

    pub fn row<S: AsRef<str>>(&mut self, fields: &[S]) -> Result<()> {
        let line: Vec<&str> = fields.iter().map(AsRef::as_ref).collect();
        writeln!(self.out, "{}", line.join("\t"))?;
        Ok(())
    }

    /// Scientific notation with `precision` significant digits, or the
    /// shortest exact representation in raw mode.
    pub fn num(&self, v: f64) -> String {
        if v.is_nan() {
            "NA".into()
        } else if self.raw {
            format!("{v:?}")
        } else {
            format!("{:.*e}", self.precision.saturating_sub(1), v)
        }
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}
