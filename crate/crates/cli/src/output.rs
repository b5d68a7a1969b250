//! Artifact writers. Every file carries the config hash: JSON reports in a
//! `config_hash` key, CSV and field dumps in a leading `#` comment line.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use pqspectra_core::mesh::write_field_dump;
use pqspectra_core::solvers::{SolveReport, SweepRecord};
use serde::Serialize;

use crate::CliError;

pub struct OutputDir {
    dir: PathBuf,
    hash: String,
}

impl OutputDir {
    /// Creates `dir` if needed and checks that it is writable.
    pub fn create(dir: &Path, hash: String) -> Result<Self, CliError> {
        let io = |e: std::io::Error| CliError::Output(format!("{}: {e}", dir.display()));
        fs::create_dir_all(dir).map_err(io)?;
        let probe = dir.join(".pqspectra-write-test");
        fs::write(&probe, b"").map_err(io)?;
        fs::remove_file(&probe).map_err(io)?;
        Ok(Self { dir: dir.to_path_buf(), hash })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn create_file(&self, name: &str) -> Result<BufWriter<fs::File>, CliError> {
        let path = self.path(name);
        fs::File::create(&path)
            .map(BufWriter::new)
            .map_err(|e| CliError::Output(format!("{}: {e}", path.display())))
    }

    fn finish(&self, name: &str, mut w: BufWriter<fs::File>) -> Result<(), CliError> {
        w.flush().map_err(|e| CliError::Output(format!("{}: {e}", self.path(name).display())))
    }

    /// Writes `{"config_hash": ..., <fields of value>}`.
    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), CliError> {
        let mut obj = serde_json::Map::new();
        obj.insert("config_hash".into(), self.hash.clone().into());
        match serde_json::to_value(value).expect("reports serialise") {
            serde_json::Value::Object(m) => obj.extend(m),
            other => {
                obj.insert("value".into(), other);
            }
        }
        let mut w = self.create_file(name)?;
        serde_json::to_writer_pretty(&mut w, &obj).map_err(|e| CliError::Output(e.to_string()))?;
        writeln!(w)?;
        self.finish(name, w)
    }

    pub fn field(&self, name: &str, report: &SolveReport) -> Result<(), CliError> {
        let mut w = self.create_file(name)?;
        let u = &report.u;
        let comment = format!("config_hash {}\nlambda {:e}\nenergy {:e}", self.hash, report.lambda, report.energy);
        write_field_dump(&mut w, u.mesh(), u.values(), Some(&comment))?;
        self.finish(name, w)
    }

    pub fn trace(&self, name: &str, report: &SolveReport) -> Result<(), CliError> {
        let mut w = self.create_file(name)?;
        writeln!(w, "# config_hash {}", self.hash)?;
        writeln!(w, "iter,energy,residual")?;
        for (i, t) in report.trace.iter().enumerate() {
            writeln!(w, "{i},{:e},{:e}", t.energy, t.residual)?;
        }
        self.finish(name, w)
    }

    pub fn sweep(&self, name: &str, rows: &[SweepRecord]) -> Result<(), CliError> {
        let mut w = self.create_file(name)?;
        writeln!(w, "# config_hash {}", self.hash)?;
        writeln!(w, "lambda,found,energy,residual,u_norm,sigma_ref")?;
        for r in rows {
            writeln!(w, "{:e},{},{:e},{:e},{:e},{:e}", r.lambda, r.found, r.energy, r.residual, r.u_norm, r.sigma_ref)?;
        }
        self.finish(name, w)
    }
}
