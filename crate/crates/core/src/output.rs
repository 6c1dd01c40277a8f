//! CSV emission and the per-scenario output bundle.
//!
//! All numbers are written with fixed decimal places and `\n` line endings
//! so that identical inputs give identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::emotion::Emotion;
use crate::error::{Error, Result};
use crate::experiments::{AggregatedSeries, ScenarioConfig};
use crate::metrics::ClusterSummary;
use crate::plot;

pub const TIMESERIES_HEADER: &str = "step,angry,disgust,fear,happy,neutral,sad,surprise";
pub const CLUSTER_HEADER: &str = "emotion,condition,num_clusters,avg_size,max_size";
pub const RESILIENCE_HEADER: &str = "step,positive_ratio";
/// Prefix of per-group columns in the trust CSV.
pub const TRUST_PREFIX: &str = "trust_";

pub const TIMESERIES_FILE: &str = "timeseries.csv";
pub const TRUST_FILE: &str = "trust.csv";
pub const CLUSTERS_FILE: &str = "clusters.csv";
pub const RESILIENCE_FILE: &str = "resilience.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

pub fn timeseries_csv(agg: &AggregatedSeries) -> String {
    let mut out = String::new();
    out.push_str(TIMESERIES_HEADER);
    out.push('\n');
    for row in &agg.rows {
        let _ = write!(out, "{}", row.step);
        for c in row.counts {
            let _ = write!(out, ",{c:.4}");
        }
        out.push('\n');
    }
    out
}

pub fn trust_csv(agg: &AggregatedSeries) -> String {
    let mut out = String::from("step");
    for g in &agg.groups {
        let _ = write!(out, ",{TRUST_PREFIX}{g}");
    }
    out.push('\n');
    for row in &agg.rows {
        let _ = write!(out, "{}", row.step);
        for t in &row.trust {
            match t {
                Some(v) => {
                    let _ = write!(out, ",{v:.4}");
                }
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    out
}

pub fn resilience_csv(agg: &AggregatedSeries) -> String {
    let mut out = String::new();
    out.push_str(RESILIENCE_HEADER);
    out.push('\n');
    for row in &agg.rows {
        let _ = writeln!(out, "{},{:.4}", row.step, row.positive_ratio);
    }
    out
}

/// Rows in canonical emotion order; emotions without clusters are omitted.
pub fn cluster_csv(summaries: &[ClusterSummary], condition: &str) -> String {
    let mut sorted: Vec<_> = summaries.iter().collect();
    sorted.sort_by_key(|s| s.emotion);
    let mut out = String::new();
    out.push_str(CLUSTER_HEADER);
    out.push('\n');
    for s in sorted {
        let _ = writeln!(
            out,
            "{},{},{:.2},{:.2},{:.2}",
            s.emotion, condition, s.num_clusters, s.avg_size, s.max_size
        );
    }
    out
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn write_timeseries_csv(agg: &AggregatedSeries, path: &Path) -> Result<()> {
    write_file(path, &timeseries_csv(agg))
}

pub fn write_trust_csv(agg: &AggregatedSeries, path: &Path) -> Result<()> {
    write_file(path, &trust_csv(agg))
}

pub fn write_resilience_csv(agg: &AggregatedSeries, path: &Path) -> Result<()> {
    write_file(path, &resilience_csv(agg))
}

pub fn write_cluster_csv(summaries: &[ClusterSummary], condition: &str, path: &Path) -> Result<()> {
    write_file(path, &cluster_csv(summaries, condition))
}

/// A parsed row of a cluster CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterRow {
    pub emotion: Emotion,
    pub condition: String,
    pub num_clusters: f64,
    pub avg_size: f64,
    pub max_size: f64,
}

pub fn parse_cluster_csv(text: &str) -> Result<Vec<ClusterRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CLUSTER_HEADER => {}
        other => return Err(Error::Schema(format!("bad cluster header {other:?}"))),
    }
    lines
        .filter(|l| !l.is_empty())
        .map(|l| {
            let f: Vec<_> = l.split(',').collect();
            if f.len() != 5 {
                return Err(Error::Parse(format!("bad cluster row '{l}'")));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(format!("'{s}': {e}")));
            Ok(ClusterRow {
                emotion: f[0].parse()?,
                condition: f[1].to_string(),
                num_clusters: num(f[2])?,
                avg_size: num(f[3])?,
                max_size: num(f[4])?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ManifestEntry {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub artifact: &'static str,
    pub version: &'static str,
    pub scenario: String,
    pub master_seeds: Vec<u64>,
    pub run_seeds: Vec<u64>,
    pub runs: usize,
    pub steps: usize,
    pub cluster_averaging: &'static str,
    pub config: String,
    pub files: Vec<ManifestEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Files written for one scenario.
#[derive(Debug, Clone)]
pub struct OutputBundle {
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub manifest: PathBuf,
}

/// Writes every CSV, the charts and a manifest listing each file with its
/// content hash into `dir`.
pub fn write_bundle(cfg: &ScenarioConfig, agg: &AggregatedSeries, dir: &Path) -> Result<OutputBundle> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut contents: Vec<(String, String)> = vec![
        (TIMESERIES_FILE.into(), timeseries_csv(agg)),
        (TRUST_FILE.into(), trust_csv(agg)),
        (CLUSTERS_FILE.into(), cluster_csv(&agg.clusters, &cfg.name)),
        (RESILIENCE_FILE.into(), resilience_csv(agg)),
    ];
    let charts: Vec<(String, String)> = [TIMESERIES_FILE, TRUST_FILE, RESILIENCE_FILE]
        .iter()
        .map(|csv| {
            let text = &contents.iter().find(|(n, _)| n == csv).unwrap().1;
            let title = format!("{} ({} runs)", cfg.name, agg.runs);
            let svg = plot::render_csv(text, &title)?;
            Ok((csv.replace(".csv", ".svg"), svg))
        })
        .collect::<Result<_>>()?;
    contents.extend(charts);

    let mut files = Vec::new();
    let mut entries = Vec::new();
    for (name, body) in &contents {
        let path = dir.join(name);
        write_file(&path, body)?;
        entries.push(ManifestEntry {
            file: name.clone(),
            sha256: sha256_hex(body.as_bytes()),
        });
        files.push(path);
    }

    let manifest = Manifest {
        artifact: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        scenario: cfg.name.clone(),
        master_seeds: {
            let mut m: Vec<u64> = agg.seeds.iter().map(|s| s.0).collect();
            m.dedup();
            m
        },
        run_seeds: agg.seeds.iter().map(|s| s.1).collect(),
        runs: agg.runs,
        steps: cfg.steps,
        cluster_averaging: "per emotion, over the runs in which the emotion is present at the final step",
        config: cfg.to_toml(),
        files: entries,
    };
    let mut json = serde_json::to_string_pretty(&manifest).expect("manifest serialises");
    json.push('\n');
    let manifest_path = dir.join(MANIFEST_FILE);
    write_file(&manifest_path, &json)?;
    Ok(OutputBundle {
        dir: dir.to_path_buf(),
        files,
        manifest: manifest_path,
    })
}
