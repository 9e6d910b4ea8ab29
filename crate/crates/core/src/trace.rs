//! Traceroute records and their grouping by endpoint pair.
//!
//! Input is JSON lines, one trace per line:
//!
//! ```text
//! {"src":"10.0.0.1","dst":"10.9.0.1","hops":["10.1.0.1","*","10.2.0.1"]}
//! ```
//!
//! `"*"` marks an unresponsive hop. Unknown keys are ignored.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::BufRead;
use std::net::Ipv4Addr;
use std::str::FromStr;

use serde::Deserialize;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Hop {
    Addr(Ipv4Addr),
    Unresponsive,
}

impl fmt::Display for Hop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Hop::Addr(a) => a.fmt(f),
            Hop::Unresponsive => f.write_str("*"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceRecord {
    pub src: Ipv4Addr,
    pub dst: Ipv4Addr,
    pub hops: Vec<Hop>,
}

impl TraceRecord {
    pub fn pair(&self) -> Pair {
        Pair { src: self.src, dst: self.dst }
    }

    /// Responsive hops in order.
    pub fn ip_route(&self) -> IpRoute {
        IpRoute(
            self.hops
                .iter()
                .filter_map(|h| match h {
                    Hop::Addr(a) => Some(*a),
                    Hop::Unresponsive => None,
                })
                .collect(),
        )
    }
}

/// A (vantage point, destination) pair. Orders by source, then destination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pair {
    pub src: Ipv4Addr,
    pub dst: Ipv4Addr,
}

impl fmt::Display for Pair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.src, self.dst)
    }
}

/// An IP-level route: the responsive hop addresses of one trace.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IpRoute(pub Vec<Ipv4Addr>);

impl IpRoute {
    pub fn hops(&self) -> &[Ipv4Addr] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Distinct IP-level routes observed for one endpoint pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RouteSet {
    pub pair: Pair,
    pub ip_routes: BTreeSet<IpRoute>,
}

impl RouteSet {
    pub fn new(pair: Pair) -> Self {
        Self { pair, ip_routes: BTreeSet::new() }
    }

    pub fn ip_route_count(&self) -> usize {
        self.ip_routes.len()
    }
}

#[derive(Deserialize)]
struct RawRecord {
    src: String,
    dst: String,
    hops: Vec<String>,
}

/// Parses one JSONL record. `line_no` is 1-based and only used for errors.
pub fn parse_trace_line(line: &str, line_no: usize) -> Result<TraceRecord> {
    let raw: RawRecord = serde_json::from_str(line).map_err(|e| Error::Parse {
        file: None,
        line: line_no,
        reason: e.to_string(),
    })?;
    let addr = |s: &str| {
        Ipv4Addr::from_str(s).map_err(|_| Error::InvalidAddress {
            file: None,
            line: line_no,
            value: s.to_string(),
        })
    };
    let hops = raw
        .hops
        .iter()
        .map(|h| match h.as_str() {
            "*" => Ok(Hop::Unresponsive),
            other => addr(other).map(Hop::Addr),
        })
        .collect::<Result<_>>()?;
    Ok(TraceRecord { src: addr(&raw.src)?, dst: addr(&raw.dst)?, hops })
}

/// Reads every non-blank line of a JSONL stream.
pub fn read_traces(reader: impl BufRead) -> Result<Vec<TraceRecord>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::Parse { file: None, line: i + 1, reason: e.to_string() })?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(parse_trace_line(&line, i + 1)?);
    }
    Ok(out)
}

/// Groups records by endpoint pair and deduplicates their IP routes.
///
/// Every pair that appears in the input gets an entry, but routes with no
/// responsive hop are not counted as IP routes.
pub fn group_by_pair<'a>(records: impl IntoIterator<Item = &'a TraceRecord>) -> BTreeMap<Pair, RouteSet> {
    let mut out: BTreeMap<Pair, RouteSet> = BTreeMap::new();
    for rec in records {
        let pair = rec.pair();
        let set = out.entry(pair).or_insert_with(|| RouteSet::new(pair));
        let route = rec.ip_route();
        if !route.is_empty() {
            set.ip_routes.insert(route);
        }
    }
    out
}
