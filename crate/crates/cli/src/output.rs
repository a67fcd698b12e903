use crate::commands::Check;
use crate::error::{CliError, CliResult};
use modavg::{ResultTable, Value};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const MANIFEST: &str = "manifest.json";

pub struct Header<'a> {
    pub command: &'static str,
    pub seed: u64,
    pub config_sha256: &'a str,
}

#[derive(Serialize)]
struct FileEntry {
    name: String,
    rows: usize,
    sha256: String,
}

#[derive(Serialize)]
struct CheckEntry<'a> {
    name: &'a str,
    passed: bool,
    detail: &'a str,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    tool_version: &'a str,
    library_version: &'a str,
    config_sha256: &'a str,
    seed: u64,
    files: Vec<FileEntry>,
    checks: Vec<CheckEntry<'a>>,
    wall_time_seconds: f64,
}

fn write(path: &Path, bytes: &[u8]) -> CliResult<()> {
    std::fs::write(path, bytes).map_err(|source| CliError::Output { path: path.to_path_buf(), source })
}

pub fn write_all(dir: &Path, header: &Header, tables: Vec<(String, ResultTable)>, checks: &[Check], started: Instant) -> CliResult<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Output { path: dir.to_path_buf(), source })?;
    let tool = format!("modavg-cli {}", env!("CARGO_PKG_VERSION"));
    let mut files = Vec::new();
    let mut entries = Vec::new();
    for (name, mut table) in tables {
        table.set_provenance("tool", &tool);
        table.set_provenance("command", header.command);
        table.set_provenance("seed", header.seed);
        table.set_provenance("config_sha256", header.config_sha256);
        let csv = table.to_csv();
        let path = dir.join(&name);
        write(&path, csv.as_bytes())?;
        entries.push(FileEntry { name, rows: table.len(), sha256: format!("{:x}", Sha256::digest(csv.as_bytes())) });
        files.push(path);
    }
    if !checks.is_empty() {
        let mut t = ResultTable::new(&["check", "passed", "detail"]);
        for c in checks {
            let detail = c.detail.replace([',', '\n', '"'], ";");
            t.push(vec![Value::Text(c.name.replace(',', ";")), c.passed.into(), Value::Text(detail)])?;
        }
        t.set_provenance("tool", &tool);
        t.set_provenance("command", header.command);
        t.set_provenance("seed", header.seed);
        t.set_provenance("config_sha256", header.config_sha256);
        let csv = t.to_csv();
        let path = dir.join("checks.csv");
        write(&path, csv.as_bytes())?;
        entries.push(FileEntry { name: "checks.csv".into(), rows: t.len(), sha256: format!("{:x}", Sha256::digest(csv.as_bytes())) });
        files.push(path);
    }
    let manifest = Manifest {
        command: header.command,
        tool_version: env!("CARGO_PKG_VERSION"),
        library_version: modavg::VERSION,
        config_sha256: header.config_sha256,
        seed: header.seed,
        files: entries,
        checks: checks.iter().map(|c| CheckEntry { name: &c.name, passed: c.passed, detail: &c.detail }).collect(),
        wall_time_seconds: started.elapsed().as_secs_f64(),
    };
    let mut json = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Numeric(e.to_string()))?;
    json.push('\n');
    let path = dir.join(MANIFEST);
    write(&path, json.as_bytes())?;
    files.push(path);
    Ok(files)
}
