//! Report files and empirical distributions.
//!
//! `emit_report` writes:
//!
//! * `report.json`: `{"summary": {...counts...}, "pairs": [...], "filtered": [...]}`
//! * `pairs.csv`: one row per scored pair
//! * `compression_ecdf.csv`, `gdi_ratio_ecdf.csv`: `value,cum_fraction`
//!
//! Numbers in CSV files use six fixed decimals so reruns are byte-identical.

use std::fmt::Write as _;
use std::fs;
use std::net::Ipv4Addr;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cluster::Cluster;
use crate::geodesy::{Coordinate, GeoPath};
use crate::pipeline::{ClusteredCorpus, ClusteredPair, DiversityReport, FilteredPair, LocatedPath, PipelineSummary};
use crate::trace::{IpRoute, Pair};
use crate::{Error, Result};

pub const PAIRS_CSV_HEADER: &str = "src,dst,ip_routes,geo_paths,clusters,compression,gdi_km,mgdi_km,gdi_over_mgdi";
pub const ECDF_CSV_HEADER: &str = "value,cum_fraction";

/// Empirical CDF over the distinct values of a sample.
#[derive(Debug, Clone, PartialEq)]
pub struct EcdfTable {
    /// `(value, fraction of the sample <= value)`, values strictly increasing.
    pub points: Vec<(f64, f64)>,
}

impl EcdfTable {
    /// Fraction of the sample at or below `x`.
    pub fn eval(&self, x: f64) -> f64 {
        match self.points.partition_point(|(v, _)| *v <= x) {
            0 => 0.0,
            i => self.points[i - 1].1,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{ECDF_CSV_HEADER}\n");
        for (v, f) in &self.points {
            let _ = writeln!(out, "{v:.6},{f:.6}");
        }
        out
    }
}

pub fn ecdf(values: &[f64]) -> Result<EcdfTable> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut points: Vec<(f64, f64)> = Vec::new();
    for (i, v) in sorted.iter().enumerate() {
        let frac = (i + 1) as f64 / n;
        match points.last_mut() {
            Some(last) if last.0 == *v => last.1 = frac,
            _ => points.push((*v, frac)),
        }
    }
    Ok(EcdfTable { points })
}

#[derive(Serialize)]
struct ReportJson<'a> {
    summary: SummaryCounts,
    pairs: &'a [DiversityReport],
    filtered: &'a [FilteredPair],
}

#[derive(Serialize)]
struct SummaryCounts {
    total_pairs: usize,
    pairs_removed_stage1: usize,
    pairs_removed_stage2: usize,
    pairs_scored: usize,
    pairs_gdi_above_mgdi: usize,
}

fn fmt6(x: f64) -> String {
    format!("{x:.6}")
}

pub fn pairs_csv(summary: &PipelineSummary) -> String {
    let mut out = format!("{PAIRS_CSV_HEADER}\n");
    for r in &summary.per_pair {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.src,
            r.dst,
            r.ip_route_count,
            r.geo_path_count,
            r.cluster_count,
            fmt6(r.compression_ratio),
            fmt6(r.gdi_km),
            fmt6(r.mgdi_km),
            r.gdi_over_mgdi.map(fmt6).unwrap_or_default(),
        );
    }
    out
}

pub fn report_json(summary: &PipelineSummary) -> Result<String> {
    let doc = ReportJson {
        summary: SummaryCounts {
            total_pairs: summary.total_pairs,
            pairs_removed_stage1: summary.pairs_removed_stage1,
            pairs_removed_stage2: summary.pairs_removed_stage2,
            pairs_scored: summary.pairs_scored,
            pairs_gdi_above_mgdi: summary.pairs_gdi_above_mgdi,
        },
        pairs: &summary.per_pair,
        filtered: &summary.filtered,
    };
    let mut s = serde_json::to_string_pretty(&doc)?;
    s.push('\n');
    Ok(s)
}

fn ecdf_csv(sample: &[f64]) -> String {
    match ecdf(sample) {
        Ok(t) => t.to_csv(),
        Err(_) => format!("{ECDF_CSV_HEADER}\n"),
    }
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Writes the four report files into `out_dir`, creating it if needed.
pub fn emit_report(summary: &PipelineSummary, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    Ok(vec![
        write(out_dir, "report.json", &report_json(summary)?)?,
        write(out_dir, "pairs.csv", &pairs_csv(summary))?,
        write(out_dir, "compression_ecdf.csv", &ecdf_csv(&summary.compression_sample()))?,
        write(out_dir, "gdi_ratio_ecdf.csv", &ecdf_csv(&summary.gdi_ratio_sample()))?,
    ])
}

/// On-disk form of a clustered corpus (`clusters.json`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterFile {
    pub threshold_km: f64,
    pub total_pairs: usize,
    pub filtered: Vec<FilteredPair>,
    pub pairs: Vec<ClusterFilePair>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterFilePair {
    pub src: Ipv4Addr,
    pub dst: Ipv4Addr,
    pub ip_route_count: usize,
    pub geo_path_count: usize,
    pub clusters: Vec<ClusterFileCluster>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterFileCluster {
    pub id: usize,
    pub members: Vec<ClusterFileMember>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterFileMember {
    /// `[lat, lon]` pairs.
    pub nodes: Vec<[f64; 2]>,
    pub ip_routes: Vec<Vec<Ipv4Addr>>,
}

impl ClusterFile {
    pub fn from_corpus(corpus: &ClusteredCorpus, threshold_km: f64) -> Self {
        let pairs = corpus
            .pairs
            .iter()
            .map(|cp| ClusterFilePair {
                src: cp.pair.src,
                dst: cp.pair.dst,
                ip_route_count: cp.ip_route_count,
                geo_path_count: cp.geo_path_count,
                clusters: cp
                    .clusters
                    .iter()
                    .map(|c| ClusterFileCluster {
                        id: c.id,
                        members: c
                            .members
                            .iter()
                            .map(|m| ClusterFileMember {
                                nodes: m.path.nodes().iter().map(|n| [n.lat(), n.lon()]).collect(),
                                ip_routes: m.ip_routes.iter().map(|r| r.0.clone()).collect(),
                            })
                            .collect(),
                    })
                    .collect(),
            })
            .collect();
        Self {
            threshold_km,
            total_pairs: corpus.total_pairs,
            filtered: corpus.filtered.clone(),
            pairs,
        }
    }

    pub fn into_corpus(self) -> Result<ClusteredCorpus> {
        let pairs = self
            .pairs
            .into_iter()
            .map(|p| {
                let clusters = p
                    .clusters
                    .into_iter()
                    .map(|c| {
                        let members = c
                            .members
                            .into_iter()
                            .map(|m| {
                                let nodes = m
                                    .nodes
                                    .iter()
                                    .map(|[lat, lon]| Coordinate::new(*lat, *lon))
                                    .collect::<Result<Vec<_>>>()?;
                                Ok(LocatedPath {
                                    path: GeoPath::new(nodes)?,
                                    ip_routes: m.ip_routes.into_iter().map(IpRoute).collect(),
                                })
                            })
                            .collect::<Result<Vec<_>>>()?;
                        if members.is_empty() {
                            return Err(Error::InvalidPath(format!("cluster {} has no members", c.id)));
                        }
                        Ok(Cluster { id: c.id, members })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(ClusteredPair {
                    pair: Pair { src: p.src, dst: p.dst },
                    ip_route_count: p.ip_route_count,
                    geo_path_count: p.geo_path_count,
                    clusters,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ClusteredCorpus { total_pairs: self.total_pairs, filtered: self.filtered, pairs })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            file: Some(path.to_path_buf()),
            line: e.line(),
            reason: e.to_string(),
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        fs::write(path, s).map_err(|e| Error::io(path, e))
    }
}
