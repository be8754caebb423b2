//! CSV tables and the run manifest.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use smse_core::ExperimentConfig;

/// Bumped whenever a CSV column is added, removed, renamed or reordered.
pub const SCHEMA_VERSION: u32 = 1;

/// Twelve significant digits, `.` as decimal separator, no exponent for
/// moderate magnitudes. NaN (no value) is written as an empty field.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        return String::new();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..15).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// A table collected in memory and written in one go.
pub struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::CRLF)
            .from_path(path)
            .with_context(|| format!("creating {}", path.display()))?;
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush().with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub threads: usize,
    pub wall_time_s: f64,
    pub outputs: Vec<String>,
    pub config: ExperimentConfig,
}

/// Where a command's artifacts go.
pub struct OutputDir {
    pub root: PathBuf,
    written: Vec<String>,
}

impl OutputDir {
    pub fn create(root: PathBuf) -> Result<Self> {
        std::fs::create_dir_all(&root).with_context(|| format!("creating {}", root.display()))?;
        Ok(OutputDir { root, written: Vec::new() })
    }

    pub fn table(&mut self, name: &str, table: &Table) -> Result<()> {
        table.write(&self.root.join(name))?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn finish(mut self, command: &str, config: &ExperimentConfig, wall_time_s: f64) -> Result<Vec<String>> {
        let cfg_path = self.root.join("config.toml");
        std::fs::write(&cfg_path, config.to_toml()).with_context(|| format!("writing {}", cfg_path.display()))?;
        self.written.push("config.toml".into());
        let manifest = Manifest {
            schema_version: SCHEMA_VERSION,
            tool: "smse".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seed: config.montecarlo.seed,
            threads: rayon::current_num_threads(),
            wall_time_s,
            outputs: self.written.clone(),
            config: config.clone(),
        };
        let path = self.root.join("manifest.json");
        let text = serde_json::to_string_pretty(&manifest)?;
        std::fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
        self.written.push("manifest.json".into());
        Ok(self.written)
    }
}
