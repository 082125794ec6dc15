//! Load-case runner: configuration, model building, the four analysis
//! pipelines and CSV output.

mod cases;
mod config;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

pub use cases::{
    build_model, load_inputs, run_case, run_lc_eigen, run_lc_static, run_lc_windwave, Inputs,
};
pub use config::{
    parse_config, parse_str, DampingConfig, DiscretizationConfig, FileConfig, IdentificationConfig,
    IntegratorConfig, LoadCase, OutputConfig, RnaConfig, RunConfig, Scheme, SeaConfig, SiteConfig,
    SoilConfig, StaticMethod, TargetConfig, Variant, WindConfig,
};

use crate::csvio::fmt_f64;
use crate::error::{Error, Result};

/// One headline number and the file that carries it.
#[derive(Debug, Clone, PartialEq)]
pub struct Headline {
    pub key: String,
    pub value: f64,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub case: LoadCase,
    pub digest: String,
    pub wall_time: Duration,
    pub headline: Vec<Headline>,
    pub warnings: Vec<String>,
}

impl RunSummary {
    pub fn value(&self, key: &str) -> Option<f64> {
        self.headline.iter().find(|h| h.key == key).map(|h| h.value)
    }

    fn push(&mut self, key: impl Into<String>, value: f64, source: &str) {
        self.headline.push(Headline {
            key: key.into(),
            value,
            source: source.to_string(),
        });
    }

    /// `key,value,source` rows. Wall time is left out so repeated runs
    /// produce identical files.
    pub fn write_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "# config_digest={}", self.digest)?;
        writeln!(out, "# case={}", self.case)?;
        for w in &self.warnings {
            writeln!(out, "# warning: {}", w.replace('\n', " "))?;
        }
        writeln!(out, "key,value,source")?;
        for h in &self.headline {
            writeln!(out, "{},{},{}", h.key, fmt_f64(h.value), h.source)?;
        }
        Ok(())
    }
}

/// A named CSV body ready to be written.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub body: Vec<u8>,
}

impl Artifact {
    pub(crate) fn render(
        name: &str,
        f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
    ) -> Result<Self> {
        let mut body = Vec::new();
        f(&mut body).map_err(|e| Error::io(name, e))?;
        Ok(Self {
            name: name.to_string(),
            body,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub summary: RunSummary,
    pub artifacts: Vec<Artifact>,
}

/// Writes every artifact plus `summary.csv` into `dir`. Each file goes to a
/// temporary sibling first and is renamed into place.
pub fn emit_outputs(
    summary: &RunSummary,
    artifacts: &[Artifact],
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut summary_body = Vec::new();
    summary
        .write_csv(&mut summary_body)
        .map_err(|e| Error::io(dir, e))?;
    let all = artifacts
        .iter()
        .map(|a| (a.name.as_str(), a.body.as_slice()))
        .chain(std::iter::once(("summary.csv", summary_body.as_slice())));
    let mut written = Vec::new();
    for (name, body) in all {
        let path = dir.join(name);
        let tmp = dir.join(format!(".{name}.tmp"));
        fs::write(&tmp, body).map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
