//! End-to-end driver: traces and a geolocation snapshot in, per-pair
//! diversity reports out.
//!
//! Work is spread over the current rayon pool one endpoint pair at a time;
//! results are always collected in pair order, so the output does not depend
//! on the number of workers.

use std::fs::File;
use std::io::BufReader;
use std::net::Ipv4Addr;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cluster::{cluster_pair_routes, Cluster};
use crate::diversity::{compression_ratio, gdi, mgdi, DiversityConfig};
use crate::geodesy::{Coordinate, GeoPath, PathMetric, Sphere};
use crate::geolocate::{filter_pairs, load_geodb, FilterStage, GeoDb, PairPaths};
use crate::trace::{group_by_pair, read_traces, IpRoute, Pair, TraceRecord};
use crate::{Error, Result};

/// A geo-path with the IP routes that localize to it.
#[derive(Debug, Clone, PartialEq)]
pub struct LocatedPath {
    pub path: GeoPath<f64>,
    pub ip_routes: Vec<IpRoute>,
}

impl AsRef<[Coordinate<f64>]> for LocatedPath {
    fn as_ref(&self) -> &[Coordinate<f64>] {
        self.path.nodes()
    }
}

/// Clustering result for one surviving pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusteredPair {
    pub pair: Pair,
    pub ip_route_count: usize,
    pub geo_path_count: usize,
    pub clusters: Vec<Cluster<LocatedPath>>,
}

/// A pair dropped by the two-stage filter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilteredPair {
    pub src: Ipv4Addr,
    pub dst: Ipv4Addr,
    /// 1 or 2.
    pub stage: u8,
    pub ip_route_count: usize,
    pub geo_path_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusteredCorpus {
    pub total_pairs: usize,
    pub filtered: Vec<FilteredPair>,
    pub pairs: Vec<ClusteredPair>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiversityReport {
    pub src: Ipv4Addr,
    pub dst: Ipv4Addr,
    pub ip_route_count: usize,
    pub geo_path_count: usize,
    pub cluster_count: usize,
    pub compression_ratio: f64,
    pub gdi_km: f64,
    pub mgdi_km: f64,
    /// `None` when the MGDI is zero.
    pub gdi_over_mgdi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineSummary {
    pub total_pairs: usize,
    pub pairs_removed_stage1: usize,
    pub pairs_removed_stage2: usize,
    pub pairs_scored: usize,
    /// Scored pairs whose GDI exceeds their MGDI.
    pub pairs_gdi_above_mgdi: usize,
    pub per_pair: Vec<DiversityReport>,
    pub filtered: Vec<FilteredPair>,
}

impl PipelineSummary {
    pub fn from_reports(
        total_pairs: usize,
        filtered: Vec<FilteredPair>,
        per_pair: Vec<DiversityReport>,
    ) -> Self {
        let stage = |s| filtered.iter().filter(|f| f.stage == s).count();
        Self {
            total_pairs,
            pairs_removed_stage1: stage(1),
            pairs_removed_stage2: stage(2),
            pairs_scored: per_pair.len(),
            pairs_gdi_above_mgdi: per_pair
                .iter()
                .filter(|r| r.gdi_over_mgdi.is_some_and(|x| x > 1.0))
                .count(),
            per_pair,
            filtered,
        }
    }

    /// Compression ratios of every pair that has at least one geo-path,
    /// filtered pairs included.
    pub fn compression_sample(&self) -> Vec<f64> {
        let filtered = self
            .filtered
            .iter()
            .filter(|f| f.geo_path_count >= 1 && f.ip_route_count >= 1)
            .map(|f| f.ip_route_count as f64 / f.geo_path_count as f64);
        filtered
            .chain(self.per_pair.iter().map(|r| r.compression_ratio))
            .collect()
    }

    /// GDI/MGDI of scored pairs with at least two clusters.
    pub fn gdi_ratio_sample(&self) -> Vec<f64> {
        self.per_pair
            .iter()
            .filter(|r| r.cluster_count >= 2)
            .filter_map(|r| r.gdi_over_mgdi)
            .collect()
    }
}

pub fn load_traces(path: &Path) -> Result<Vec<TraceRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_traces(BufReader::new(file)).map_err(|e| e.in_file(path))
}

/// Groups, geolocates, filters and clusters a parsed corpus.
pub fn cluster_corpus(records: &[TraceRecord], db: &GeoDb<f64>, cfg: &DiversityConfig<f64>) -> Result<ClusteredCorpus> {
    cfg.validate()?;
    let sphere = Sphere::new(cfg.earth_radius_km);
    let groups = group_by_pair(records);
    let outcome = filter_pairs(&groups, db);
    let filtered = outcome
        .removed
        .iter()
        .map(|r| FilteredPair {
            src: r.pair.src,
            dst: r.pair.dst,
            stage: match r.stage {
                FilterStage::SingleIpRoute => 1,
                FilterStage::SingleGeoPath => 2,
            },
            ip_route_count: r.ip_route_count,
            geo_path_count: r.geo_path_count,
        })
        .collect();
    let kept: Vec<(&Pair, &PairPaths<f64>)> = outcome.kept.iter().collect();
    let pairs = kept
        .par_iter()
        .map(|(pair, pp)| {
            let located: Vec<LocatedPath> = pp
                .paths
                .iter()
                .map(|(path, routes)| LocatedPath { path: path.clone(), ip_routes: routes.clone() })
                .collect();
            ClusteredPair {
                pair: **pair,
                ip_route_count: pp.ip_route_count,
                geo_path_count: pp.geo_path_count(),
                clusters: cluster_pair_routes(&sphere, located, cfg.threshold_km),
            }
        })
        .collect();
    Ok(ClusteredCorpus { total_pairs: groups.len(), filtered, pairs })
}

/// Scores one clustered pair. The MGDI uses the representative with the
/// longest polyline: its length bounds the triangles and the distance
/// between its first and last nodes separates their endpoints.
pub fn score_pair(cp: &ClusteredPair, cfg: &DiversityConfig<f64>) -> Result<DiversityReport> {
    let sphere = Sphere::new(cfg.earth_radius_km);
    let reps: Vec<&GeoPath<f64>> = cp.clusters.iter().map(|c| &c.representative().path).collect();
    let cluster_count = reps.len();
    let gdi_km = gdi(&sphere, &reps.iter().map(|p| p.nodes()).collect::<Vec<_>>());
    let mut longest: Option<(&GeoPath<f64>, f64)> = None;
    for rep in &reps {
        let len = sphere.path_length(rep.nodes());
        if longest.is_none_or(|(_, l)| len > l) {
            longest = Some((rep, len));
        }
    }
    let mgdi_km = match longest {
        Some((rep, len)) if cluster_count >= 2 => {
            let chord = sphere.great_circle_distance(rep.first(), rep.last());
            mgdi(cluster_count, chord, len, cfg)?
        }
        _ => 0.0,
    };
    Ok(DiversityReport {
        src: cp.pair.src,
        dst: cp.pair.dst,
        ip_route_count: cp.ip_route_count,
        geo_path_count: cp.geo_path_count,
        cluster_count,
        compression_ratio: compression_ratio(cp.ip_route_count, cluster_count)?,
        gdi_km,
        mgdi_km,
        gdi_over_mgdi: (mgdi_km > 0.0).then(|| gdi_km / mgdi_km),
    })
}

pub fn score_corpus(corpus: &ClusteredCorpus, cfg: &DiversityConfig<f64>) -> Result<PipelineSummary> {
    cfg.validate()?;
    let reports = corpus
        .pairs
        .par_iter()
        .map(|cp| score_pair(cp, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(PipelineSummary::from_reports(corpus.total_pairs, corpus.filtered.clone(), reports))
}

/// Runs every stage on in-memory inputs.
pub fn run_records(records: &[TraceRecord], db: &GeoDb<f64>, cfg: &DiversityConfig<f64>) -> Result<PipelineSummary> {
    score_corpus(&cluster_corpus(records, db, cfg)?, cfg)
}

/// Runs every stage on a trace file and a geolocation snapshot.
pub fn run_pipeline(traces: &Path, geodb: &Path, cfg: &DiversityConfig<f64>) -> Result<PipelineSummary> {
    let records = load_traces(traces)?;
    let db = load_geodb(geodb)?;
    run_records(&records, &db, cfg)
}
