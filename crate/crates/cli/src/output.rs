//! Result serialization: CSV bodies with a metadata comment line, JSON
//! documents, and the per-run manifest. Payload files are byte-deterministic
//! for a fixed configuration; wall-clock data lives only in the manifest.

use std::fs;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::config::{OutputFormat, Resolved};
use crate::CliError;

/// One result table: CSV rows plus the same content as a JSON value.
pub struct Artifact {
    /// File stem, e.g. "rho-curve".
    pub name: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    /// Summary key/value pairs appended as trailing comment lines.
    pub summary: Vec<(String, String)>,
    pub json: serde_json::Value,
}

/// Everything a subcommand hands back for writing.
pub struct RunOutput {
    pub artifacts: Vec<Artifact>,
    /// Failure annotations for partial results.
    pub failures: Vec<String>,
}

/// Shortest-roundtrip float formatting with a '.' separator.
pub fn fmt(x: f64) -> String {
    format!("{x}")
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct Manifest<'a> {
    schema_version: u32,
    command: &'a str,
    config_hash: &'a str,
    config: &'a Resolved,
    threads: usize,
    outputs: Vec<String>,
    failures: &'a [String],
    timings: Timings,
    timestamp_unix_ms: u128,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Timings {
    pub compute_ms: u128,
    pub write_ms: u128,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct JsonDoc<'a> {
    schema_version: u32,
    command: &'a str,
    config_hash: &'a str,
    result: &'a serde_json::Value,
}

/// Write every artifact plus the manifest; returns the written paths.
pub fn write_all(
    resolved: &Resolved,
    output: &RunOutput,
    compute_ms: u128,
) -> Result<Vec<PathBuf>, CliError> {
    let started = std::time::Instant::now();
    let hash = resolved.hash();
    fs::create_dir_all(&resolved.out)
        .map_err(|e| CliError::Config(format!("cannot create output directory: {e}")))?;
    let mut paths = Vec::new();
    let mut names = Vec::new();
    for artifact in &output.artifacts {
        let path = match resolved.format {
            OutputFormat::Csv => {
                let p = resolved.out.join(format!("{}_{hash}.csv", artifact.name));
                fs::write(&p, csv_body(resolved, &hash, artifact))
                    .map_err(|e| CliError::Config(format!("cannot write {}: {e}", p.display())))?;
                p
            }
            OutputFormat::Json => {
                let p = resolved.out.join(format!("{}_{hash}.json", artifact.name));
                let doc = JsonDoc {
                    schema_version: qcbeam::SCHEMA_VERSION,
                    command: &resolved.command,
                    config_hash: &hash,
                    result: &artifact.json,
                };
                let mut body = serde_json::to_string_pretty(&doc)
                    .map_err(|e| CliError::Config(format!("serialization failed: {e}")))?;
                body.push('\n');
                fs::write(&p, body)
                    .map_err(|e| CliError::Config(format!("cannot write {}: {e}", p.display())))?;
                p
            }
        };
        names.push(path.file_name().unwrap().to_string_lossy().into_owned());
        paths.push(path);
    }

    let manifest = Manifest {
        schema_version: qcbeam::SCHEMA_VERSION,
        command: &resolved.command,
        config_hash: &hash,
        config: resolved,
        threads: resolved.threads,
        outputs: names,
        failures: &output.failures,
        timings: Timings {
            compute_ms,
            write_ms: started.elapsed().as_millis(),
        },
        timestamp_unix_ms: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis())
            .unwrap_or(0),
    };
    let mpath = resolved.out.join(format!("manifest_{hash}.json"));
    let mut body = serde_json::to_string_pretty(&manifest)
        .map_err(|e| CliError::Config(format!("serialization failed: {e}")))?;
    body.push('\n');
    fs::write(&mpath, body)
        .map_err(|e| CliError::Config(format!("cannot write {}: {e}", mpath.display())))?;
    paths.push(mpath);
    Ok(paths)
}

fn csv_body(resolved: &Resolved, hash: &str, artifact: &Artifact) -> String {
    let mut s = String::new();
    s.push_str(&format!(
        "# qcbeam {} schema={} hash={hash} map={} dim={} seed={} budget={}\n",
        resolved.command,
        qcbeam::SCHEMA_VERSION,
        resolved.map.label,
        resolved.map.dim,
        resolved
            .seed
            .map(|s| s.to_string())
            .unwrap_or_else(|| "none".to_string()),
        resolved.budget,
    ));
    s.push_str(&artifact.header.join(","));
    s.push('\n');
    for row in &artifact.rows {
        s.push_str(&row.join(","));
        s.push('\n');
    }
    for (k, v) in &artifact.summary {
        s.push_str(&format!("# {k}={v}\n"));
    }
    s
}
