//! Synthetic corpora with planted route structure.
#![allow(dead_code)]

use std::fmt::Write as _;
use std::net::Ipv4Addr;
use std::path::Path;

use geodiv::{Coordinate, Sphere};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Apex offsets of the corridors a pair can use, in km. Adjacent corridors
/// differ by 450 km, so interior nodes of different corridors sit well over
/// 100 km apart.
const CORRIDOR_OFFSETS_KM: [f64; 5] = [-900.0, -450.0, 0.0, 450.0, 900.0];

pub struct Corpus {
    pub traces: String,
    pub geodb: String,
    /// Planted corridor count per scored pair, keyed by (src, dst).
    pub planted: Vec<((Ipv4Addr, Ipv4Addr), usize)>,
    pub lines: usize,
}

impl Corpus {
    /// Keeps only the first `n` trace lines.
    pub fn truncate_lines(&mut self, n: usize) {
        let kept: Vec<&str> = self.traces.lines().take(n).collect();
        self.lines = kept.len();
        self.traces = kept.join("\n") + "\n";
    }

    pub fn write(&self, dir: &Path) -> (std::path::PathBuf, std::path::PathBuf) {
        let t = dir.join("traces.jsonl");
        let g = dir.join("geodb.csv");
        std::fs::write(&t, &self.traces).unwrap();
        std::fs::write(&g, &self.geodb).unwrap();
        (t, g)
    }
}

pub struct CorpusSpec {
    pub seed: u64,
    pub pairs: usize,
    /// Extra repeats of already emitted traces per pair.
    pub repeats: usize,
    /// Fraction of pairs that get a single IP route (filtered at stage one).
    pub single_route_fraction: f64,
    /// Fraction of pairs whose routes differ only by aliasing (stage two).
    pub alias_only_fraction: f64,
    /// Per-node jitter radius within a corridor.
    pub jitter_km: f64,
}

struct Alloc {
    next_hop: u32,
    geodb: String,
}

impl Alloc {
    fn hop(&mut self, at: Coordinate<f64>) -> Ipv4Addr {
        let ip = Ipv4Addr::from(self.next_hop);
        self.next_hop += 1;
        let _ = writeln!(self.geodb, "{ip}/32,{:.6},{:.6}", at.lat(), at.lon());
        ip
    }
}

/// Nodes of a triangle corridor from `s` to `t` with its apex `offset_km`
/// off the midpoint: endpoints, apex, and two interior nodes per leg.
pub fn corridor(sphere: &Sphere<f64>, s: Coordinate<f64>, t: Coordinate<f64>, offset_km: f64) -> Vec<Coordinate<f64>> {
    let mid = sphere.interpolate(s, t, 0.5);
    let ahead = sphere.interpolate(s, t, 0.5001);
    let bearing = initial_bearing(mid, ahead);
    let apex = if offset_km == 0.0 { mid } else { sphere.destination(mid, bearing + 90.0, offset_km) };
    let mut nodes = vec![s];
    for f in [1.0 / 3.0, 2.0 / 3.0] {
        nodes.push(sphere.interpolate(s, apex, f));
    }
    nodes.push(apex);
    for f in [1.0 / 3.0, 2.0 / 3.0] {
        nodes.push(sphere.interpolate(apex, t, f));
    }
    nodes.push(t);
    nodes
}

fn initial_bearing(a: Coordinate<f64>, b: Coordinate<f64>) -> f64 {
    let (la, lb) = (a.lat().to_radians(), b.lat().to_radians());
    let dl = (b.lon() - a.lon()).to_radians();
    let y = dl.sin() * lb.cos();
    let x = la.cos() * lb.sin() - la.sin() * lb.cos() * dl.cos();
    y.atan2(x).to_degrees()
}

fn jitter(rng: &mut ChaCha8Rng, sphere: &Sphere<f64>, c: Coordinate<f64>, radius_km: f64) -> Coordinate<f64> {
    if radius_km <= 0.0 {
        return c;
    }
    sphere.destination(c, rng.gen_range(0.0..360.0), rng.gen_range(0.5..radius_km))
}

fn trace_line(src: Ipv4Addr, dst: Ipv4Addr, hops: &[Option<Ipv4Addr>]) -> String {
    let hops: Vec<String> = hops
        .iter()
        .map(|h| format!("\"{}\"", h.map_or("*".to_string(), |ip| ip.to_string())))
        .collect();
    format!("{{\"src\":\"{src}\",\"dst\":\"{dst}\",\"hops\":[{}]}}\n", hops.join(","))
}

pub fn planted_corpus(spec: &CorpusSpec) -> Corpus {
    let sphere = Sphere::<f64>::earth();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut alloc = Alloc { next_hop: u32::from(Ipv4Addr::new(11, 0, 0, 0)), geodb: String::from("cidr,lat,lon\n") };
    let mut traces = String::new();
    let mut planted = Vec::new();
    let mut lines = 0;
    for i in 0..spec.pairs {
        let src = Ipv4Addr::from(u32::from(Ipv4Addr::new(100, 64, 0, 0)) + i as u32);
        let dst = Ipv4Addr::from(u32::from(Ipv4Addr::new(100, 96, 0, 0)) + i as u32);
        let s = Coordinate::new(rng.gen_range(-50.0..50.0), rng.gen_range(-170.0..170.0)).unwrap();
        let t = sphere.destination(s, rng.gen_range(0.0..360.0), rng.gen_range(1500.0..4000.0));
        let roll: f64 = rng.gen();
        let mut routes: Vec<Vec<Option<Ipv4Addr>>> = Vec::new();
        if roll < spec.single_route_fraction {
            let nodes = corridor(&sphere, s, t, 0.0);
            routes.push(nodes.iter().map(|n| Some(alloc.hop(*n))).collect());
        } else if roll < spec.single_route_fraction + spec.alias_only_fraction {
            let nodes = corridor(&sphere, s, t, CORRIDOR_OFFSETS_KM[rng.gen_range(0..5)]);
            for _ in 0..rng.gen_range(2..=4) {
                routes.push(nodes.iter().map(|n| Some(alloc.hop(*n))).collect());
            }
        } else {
            let k = rng.gen_range(1..=4);
            let mut offsets = CORRIDOR_OFFSETS_KM.to_vec();
            offsets.shuffle(&mut rng);
            for offset in &offsets[..k] {
                let nodes = corridor(&sphere, s, t, *offset);
                for _ in 0..rng.gen_range(2..=3) {
                    let located: Vec<Coordinate<f64>> =
                        nodes.iter().map(|n| jitter(&mut rng, &sphere, *n, spec.jitter_km)).collect();
                    let mut hops: Vec<Option<Ipv4Addr>> = Vec::new();
                    for n in &located {
                        hops.push(Some(alloc.hop(*n)));
                        if rng.gen_bool(0.1) {
                            hops.push(None);
                        }
                    }
                    // an aliased twin: same locations, fresh addresses
                    if rng.gen_bool(0.3) {
                        routes.push(located.iter().map(|n| Some(alloc.hop(*n))).collect());
                    }
                    routes.push(hops);
                }
            }
            planted.push(((src, dst), k));
        }
        for r in &routes {
            traces.push_str(&trace_line(src, dst, r));
        }
        for _ in 0..spec.repeats {
            traces.push_str(&trace_line(src, dst, routes.choose(&mut rng).unwrap()));
        }
        lines += routes.len() + spec.repeats;
    }
    Corpus { traces, geodb: alloc.geodb, planted, lines }
}
