use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use montemix::shuffle::ShuffleModel;
use montemix::table::Table;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::args::{Common, Format};
use crate::CliError;

/// Everything that determines a run's data. Output path and worker count
/// are left out: neither may change the data.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentSpec {
    pub subcommand: &'static str,
    pub model: Option<ShuffleModel>,
    pub params: Value,
    pub seed: u64,
    pub format: Format,
}

impl ExperimentSpec {
    pub fn new(
        subcommand: &'static str,
        model: Option<ShuffleModel>,
        params: Value,
        common: &Common,
    ) -> Self {
        ExperimentSpec {
            subcommand,
            model,
            params,
            seed: common.seed,
            format: common.format,
        }
    }

    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("spec serializes");
        hex::encode(Sha256::digest(bytes))
    }
}

pub struct Artifact {
    pub table: Table,
    pub summary: Value,
}

fn render(table: &Table, format: Format) -> Result<Vec<u8>, CliError> {
    Ok(match format {
        Format::Csv => table.to_csv_string()?.into_bytes(),
        Format::Json => {
            let mut v = serde_json::to_vec_pretty(&table.to_json())?;
            v.push(b'\n');
            v
        }
    })
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

/// Writes the data and its manifest, or the data alone to stdout.
pub fn emit(spec: &ExperimentSpec, artifact: &Artifact, common: &Common) -> Result<(), CliError> {
    let data = render(&artifact.table, common.format)?;
    let Some(out) = &common.out else {
        std::io::stdout().write_all(&data)?;
        return Ok(());
    };
    fs::write(out, &data)?;
    let manifest = json!({
        "tool": "montemix",
        "version": env!("CARGO_PKG_VERSION"),
        "library_version": montemix::VERSION,
        "spec_hash": spec.hash(),
        "spec": spec,
        "data_file": out.file_name().map(|f| f.to_string_lossy().into_owned()),
        "data_sha256": hex::encode(Sha256::digest(&data)),
        "summary": artifact.summary,
    });
    let mut m = serde_json::to_vec_pretty(&manifest)?;
    m.push(b'\n');
    fs::write(manifest_path(out), m)?;
    println!("{}", serde_json::to_string(&artifact.summary)?);
    Ok(())
}
