//! IP geolocation from a CIDR snapshot, geo-path construction and the
//! two-stage pair filter.
//!
//! The snapshot is CSV with one `cidr,lat,lon` row per block and an optional
//! `cidr,lat,lon` header. Overlapping blocks resolve by longest prefix.

use std::collections::{BTreeMap, HashMap};
use std::io::BufRead;
use std::net::Ipv4Addr;
use std::path::Path;
use std::str::FromStr;

use ipnet::Ipv4Net;
use rayon::prelude::*;

use crate::geodesy::{Coordinate, GeoPath};
use crate::num::Scalar;
use crate::trace::{IpRoute, Pair, RouteSet};
use crate::{Error, Result};

/// Immutable longest-prefix-match table from IPv4 blocks to locations.
#[derive(Debug, Clone)]
pub struct GeoDb<T> {
    // by_len[l] maps a masked network address to its location
    by_len: Vec<HashMap<u32, Coordinate<T>>>,
    len: usize,
}

impl<T: Scalar> Default for GeoDb<T> {
    fn default() -> Self {
        Self { by_len: vec![HashMap::new(); 33], len: 0 }
    }
}

fn mask(prefix_len: u8) -> u32 {
    if prefix_len == 0 {
        0
    } else {
        u32::MAX << (32 - prefix_len)
    }
}

impl<T: Scalar> GeoDb<T> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a block; host bits of `net` are ignored. Returns `false` if the
    /// block was already present (the table is left unchanged).
    pub fn insert(&mut self, net: Ipv4Net, location: Coordinate<T>) -> bool {
        let net = net.trunc();
        let slot = &mut self.by_len[net.prefix_len() as usize];
        let key = u32::from(net.network());
        if slot.contains_key(&key) {
            return false;
        }
        slot.insert(key, location);
        self.len += 1;
        true
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Location of the longest prefix covering `ip`.
    pub fn lookup_ip(&self, ip: Ipv4Addr) -> Option<Coordinate<T>> {
        let addr = u32::from(ip);
        (0..=32u8)
            .rev()
            .find_map(|l| self.by_len[l as usize].get(&(addr & mask(l))).copied())
    }

    pub fn from_reader(reader: impl BufRead) -> Result<Self> {
        let mut db = Self::new();
        let mut seen_row = false;
        for (i, line) in reader.lines().enumerate() {
            let row = i + 1;
            let parse_err = |reason: String| Error::Parse { file: None, line: row, reason };
            let line = line.map_err(|e| parse_err(e.to_string()))?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if !seen_row && line.replace(' ', "").eq_ignore_ascii_case("cidr,lat,lon") {
                seen_row = true;
                continue;
            }
            seen_row = true;
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let [cidr, lat, lon] = fields[..] else {
                return Err(parse_err(format!("expected 3 columns, found {}", fields.len())));
            };
            let net = Ipv4Net::from_str(cidr).map_err(|e| parse_err(format!("cidr {cidr:?}: {e}")))?;
            let number = |s: &str| {
                f64::from_str(s)
                    .ok()
                    .and_then(T::from_f64)
                    .ok_or_else(|| parse_err(format!("invalid number {s:?}")))
            };
            let location = Coordinate::new(number(lat)?, number(lon)?).map_err(|e| parse_err(e.to_string()))?;
            if !db.insert(net, location) {
                return Err(Error::DuplicateCidr { file: None, row, cidr: net.trunc().to_string() });
            }
        }
        Ok(db)
    }
}

/// Loads a CSV snapshot from disk.
pub fn load_geodb<T: Scalar>(path: &Path) -> Result<GeoDb<T>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    GeoDb::from_reader(std::io::BufReader::new(file)).map_err(|e| e.in_file(path))
}

/// Localizes one IP route. Unlocatable hops are dropped and consecutive
/// identical locations collapsed; `None` if fewer than two nodes remain.
pub fn route_to_geopath<T: Scalar>(route: &IpRoute, db: &GeoDb<T>) -> Option<GeoPath<T>> {
    GeoPath::collapsed(route.hops().iter().filter_map(|ip| db.lookup_ip(*ip)))
}

/// Distinct geo-paths of one pair, each with the IP routes that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct PairPaths<T: Scalar> {
    pub ip_route_count: usize,
    /// Keyed in canonical (lexicographic) path order.
    pub paths: BTreeMap<GeoPath<T>, Vec<IpRoute>>,
}

impl<T: Scalar> PairPaths<T> {
    pub fn from_route_set(set: &RouteSet, db: &GeoDb<T>) -> Self {
        let mut paths: BTreeMap<GeoPath<T>, Vec<IpRoute>> = BTreeMap::new();
        for route in &set.ip_routes {
            if let Some(path) = route_to_geopath(route, db) {
                paths.entry(path).or_default().push(route.clone());
            }
        }
        Self { ip_route_count: set.ip_route_count(), paths }
    }

    pub fn geo_path_count(&self) -> usize {
        self.paths.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterStage {
    /// Fewer than two distinct IP routes.
    SingleIpRoute,
    /// Fewer than two distinct geo-paths.
    SingleGeoPath,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RemovedPair {
    pub pair: Pair,
    pub stage: FilterStage,
    pub ip_route_count: usize,
    pub geo_path_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutcome<T: Scalar> {
    pub kept: BTreeMap<Pair, PairPaths<T>>,
    /// In pair order.
    pub removed: Vec<RemovedPair>,
}

impl<T: Scalar> FilterOutcome<T> {
    pub fn removed_at(&self, stage: FilterStage) -> usize {
        self.removed.iter().filter(|r| r.stage == stage).count()
    }
}

/// Drops pairs with fewer than two distinct IP routes, localizes the rest,
/// then drops pairs with fewer than two distinct geo-paths.
pub fn filter_pairs<T: Scalar>(route_sets: &BTreeMap<Pair, RouteSet>, db: &GeoDb<T>) -> FilterOutcome<T> {
    let sets: Vec<&RouteSet> = route_sets.values().collect();
    let results: Vec<std::result::Result<(Pair, PairPaths<T>), RemovedPair>> = sets
        .par_iter()
        .map(|set| {
            let pp = PairPaths::from_route_set(set, db);
            let stage = if set.ip_route_count() < 2 {
                Some(FilterStage::SingleIpRoute)
            } else if pp.geo_path_count() < 2 {
                Some(FilterStage::SingleGeoPath)
            } else {
                None
            };
            match stage {
                Some(stage) => Err(RemovedPair {
                    pair: set.pair,
                    stage,
                    ip_route_count: pp.ip_route_count,
                    geo_path_count: pp.geo_path_count(),
                }),
                None => Ok((set.pair, pp)),
            }
        })
        .collect();
    let mut kept = BTreeMap::new();
    let mut removed = Vec::new();
    for r in results {
        match r {
            Ok((pair, pp)) => {
                kept.insert(pair, pp);
            }
            Err(rm) => removed.push(rm),
        }
    }
    FilterOutcome { kept, removed }
}
