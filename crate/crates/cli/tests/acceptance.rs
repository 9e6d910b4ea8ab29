//! Acceptance criteria. Each criterion prints one PASS/FAIL line; the test
//! fails if any criterion fails.

mod common;

use std::collections::HashMap;
use std::net::Ipv4Addr;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use geodiv::cluster::{cluster_pair_routes, geo_equal};
use geodiv::diversity::{delta_diversity, gdi};
use geodiv::geolocate::GeoDb;
use geodiv::pipeline::run_records;
use geodiv::trace::read_traces;
use geodiv::{Coordinate, DeltaVector, DiversityConfig, GeoPath, GeoSegment, PlanarPoint, Plane, Sphere};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{planted_corpus, CorpusSpec};

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

// ---------------------------------------------------------------- fixtures

const CELL_KM: f64 = 84.0;
const KM_PER_DEG: f64 = 6371.0 * std::f64::consts::PI / 180.0;

/// Grid position (columns east, rows north) of the route-set example, laid
/// out on an 84 km grid at the equator. S is at (0, 0) and T at (8, 0).
fn grid_path(cells: &[(f64, f64)]) -> GeoPath<f64> {
    let nodes = cells
        .iter()
        .map(|(x, y)| Coordinate::new(y * CELL_KM / KM_PER_DEG, x * CELL_KM / KM_PER_DEG).unwrap())
        .collect();
    GeoPath::new(nodes).unwrap()
}

struct RouteExample {
    r1: GeoPath<f64>,
    r2: GeoPath<f64>,
    r3: GeoPath<f64>,
    r4: GeoPath<f64>,
    r5: GeoPath<f64>,
}

fn route_example() -> RouteExample {
    RouteExample {
        // upper and lower cover routes
        r1: grid_path(&[(0.0, 0.0), (2.0, 3.0), (4.0, 3.0), (6.0, 3.0), (8.0, 0.0)]),
        r3: grid_path(&[(0.0, 0.0), (1.0, -3.0), (3.0, -3.0), (5.0, -3.0), (7.0, -3.0), (8.0, 0.0)]),
        // through the middle, far from both covers
        r2: grid_path(&[(0.0, 0.0), (3.0, 0.0), (5.0, 0.0), (8.0, 0.0)]),
        // parallel to R1, one cell closer to it than R2
        r4: grid_path(&[(0.0, 0.0), (2.0, 2.0), (4.0, 2.0), (6.0, 2.0), (8.0, 0.0)]),
        // starts next to R1 and drifts towards the middle
        r5: grid_path(&[(0.0, 0.0), (2.0, 2.0), (4.0, 1.0), (6.0, 0.0), (8.0, 0.0)]),
    }
}

/// Seven IP routes from a Warsaw-like vantage point to a Mumbai-like
/// destination along three corridors.
fn fig4_fixture() -> (String, String) {
    let geodb = "\
cidr,lat,lon
10.0.0.0/16,52.2297,21.0122
10.0.1.0/24,52.2300,21.0100
80.81.192.0/24,50.1109,8.6821
80.81.193.0/24,50.1109,8.6821
80.81.194.0/24,50.0956,8.7761
62.115.0.0/16,43.2965,5.3698
62.115.8.0/24,43.2965,5.3698
195.66.224.0/24,48.2082,16.3738
195.66.225.0/24,48.2082,16.3738
185.1.0.0/24,41.0082,28.9784
185.1.1.0/24,41.0082,28.9784
91.206.0.0/24,25.2048,55.2708
91.206.1.0/24,25.2048,55.2708
195.208.208.0/24,55.7558,37.6173
195.208.209.0/24,55.7558,37.6173
85.132.0.0/24,40.4093,49.8671
85.132.1.0/24,40.4093,49.8671
203.99.0.0/24,24.8607,67.0011
203.99.1.0/24,24.8607,67.0011
49.44.0.0/16,19.0760,72.8777
";
    let routes: [&[&str]; 7] = [
        // corridor 1: Frankfurt, Marseille
        &["10.0.0.1", "80.81.192.1", "62.115.0.1", "49.44.0.1"],
        &["10.0.0.2", "80.81.193.1", "62.115.8.1", "49.44.0.2"],
        &["10.0.1.1", "80.81.194.1", "62.115.0.9", "49.44.0.3"],
        // corridor 2: Vienna, Istanbul, Dubai
        &["10.0.0.1", "195.66.224.1", "185.1.0.1", "91.206.0.1", "49.44.0.1"],
        &["10.0.0.1", "195.66.225.1", "*", "185.1.1.1", "91.206.1.1", "49.44.0.4"],
        // corridor 3: Moscow, Baku, Karachi
        &["10.0.0.1", "195.208.208.1", "85.132.0.1", "203.99.0.1", "49.44.0.1"],
        &["10.0.0.3", "195.208.209.1", "85.132.1.1", "*", "203.99.1.1", "49.44.0.5"],
    ];
    let mut traces = String::new();
    for hops in routes {
        let hops: Vec<String> = hops.iter().map(|h| format!("\"{h}\"")).collect();
        traces.push_str(&format!("{{\"src\":\"10.0.0.1\",\"dst\":\"10.9.0.1\",\"hops\":[{}]}}\n", hops.join(",")));
    }
    // repeated measurement of an already seen route
    traces.push_str("{\"src\":\"10.0.0.1\",\"dst\":\"10.9.0.1\",\"hops\":[\"10.0.0.1\",\"80.81.192.1\",\"62.115.0.1\",\"49.44.0.1\"]}\n");
    (traces, geodb.to_string())
}

// ------------------------------------------------------------------ oracles

/// Population statistics computed as E[x^2] - E[x]^2 on Δ / max(Δ).
fn eq2_direct(delta: &[f64]) -> f64 {
    let max = delta.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return 0.0;
    }
    let n = delta.len() as f64;
    let mean = delta.iter().sum::<f64>() / n;
    let m1 = delta.iter().map(|d| d / max).sum::<f64>() / n;
    let m2 = delta.iter().map(|d| (d / max) * (d / max)).sum::<f64>() / n;
    (1.0 - (m2 - m1 * m1)) * mean
}

fn planar_segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 { 0.0 } else { (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0) };
    ((p.0 - a.0 - t * dx).powi(2) + (p.1 - a.1 - t * dy).powi(2)).sqrt()
}

fn planar_path_distance(p: (f64, f64), path: &[(f64, f64)]) -> f64 {
    if path.len() == 1 {
        return ((p.0 - path[0].0).powi(2) + (p.1 - path[0].1).powi(2)).sqrt();
    }
    path.windows(2).map(|w| planar_segment_distance(p, w[0], w[1])).fold(f64::INFINITY, f64::min)
}

fn oracle_pair_diversity(p: &[(f64, f64)], l: &[(f64, f64)]) -> f64 {
    let mut delta: Vec<f64> = p.iter().map(|u| planar_path_distance(*u, l)).collect();
    delta.extend(l.iter().map(|u| planar_path_distance(*u, p)));
    eq2_direct(&delta)
}

fn micro(x: f64) -> i64 {
    (x * 1e6).round() as i64
}

/// Replays the greedy procedure with explicit sets: pick the most diverse
/// pair, then repeatedly move over the route whose minimum diversity to the
/// chosen set is largest. Ties go to the route first in canonical order.
fn oracle_gdi(paths: &[Vec<(f64, f64)>]) -> f64 {
    let mut v: Vec<Vec<(f64, f64)>> = paths.to_vec();
    v.sort_by_key(|p| p.iter().map(|(x, y)| (micro(*x), micro(*y))).collect::<Vec<_>>());
    if v.len() < 2 {
        return 0.0;
    }
    let mut best = (0, 1, f64::NEG_INFINITY);
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            let d = oracle_pair_diversity(&v[i], &v[j]);
            if d > best.2 {
                best = (i, j, d);
            }
        }
    }
    let mut total = best.2;
    let mut u = vec![v[best.0].clone(), v[best.1].clone()];
    v.remove(best.1);
    v.remove(best.0);
    while !v.is_empty() {
        let mut pick = (0, f64::NEG_INFINITY);
        for (k, p) in v.iter().enumerate() {
            let d = u.iter().map(|l| oracle_pair_diversity(p, l)).fold(f64::INFINITY, f64::min);
            if d > pick.1 {
                pick = (k, d);
            }
        }
        total += pick.1;
        u.push(v.remove(pick.0));
    }
    total
}

fn unit(c: (f64, f64)) -> [f64; 3] {
    let (la, lo) = (c.0.to_radians(), c.1.to_radians());
    [la.cos() * lo.cos(), la.cos() * lo.sin(), la.sin()]
}

fn haversine(a: (f64, f64), b: (f64, f64)) -> f64 {
    let (la, lb) = (a.0.to_radians(), b.0.to_radians());
    let h = ((lb - la) / 2.0).sin().powi(2) + la.cos() * lb.cos() * ((b.1 - a.1).to_radians() / 2.0).sin().powi(2);
    2.0 * 6371.0 * h.sqrt().min(1.0).asin()
}

/// Minimum distance to points spaced at most 1 km apart along the arc,
/// produced by normalized linear interpolation of the endpoint vectors.
fn sampled_segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (va, vb) = (unit(a), unit(b));
    let steps = haversine(a, b).ceil().max(1.0) as usize * 2;
    let mut best = f64::INFINITY;
    for i in 0..=steps {
        let t = i as f64 / steps as f64;
        let v: Vec<f64> = (0..3).map(|k| va[k] * (1.0 - t) + vb[k] * t).collect();
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        let q = ((v[2] / n).asin().to_degrees(), v[1].atan2(v[0]).to_degrees());
        best = best.min(haversine(p, q));
    }
    best
}

// ---------------------------------------------------------------- criteria

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let ex = route_example();
    let s = Sphere::<f64>::earth();
    let score = |set: &[&GeoPath<f64>]| gdi(&s, &set.iter().map(|p| p.nodes()).collect::<Vec<_>>());
    let r = score(&[&ex.r1, &ex.r3]);
    let r4 = score(&[&ex.r1, &ex.r3, &ex.r4]);
    let r5 = score(&[&ex.r1, &ex.r3, &ex.r5]);
    let r2 = score(&[&ex.r1, &ex.r3, &ex.r2]);
    let elapsed = start.elapsed();
    let summary = format!("r={r:.1} r4={r4:.1} r5={r5:.1} r2={r2:.1} km in {elapsed:?}");
    check(r < r4 && r4 < r5 && r5 < r2, format!("ordering violated: {summary}"))?;
    check(elapsed < Duration::from_secs(1), format!("too slow: {summary}"))?;
    Ok(summary)
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let (traces, geodb) = fig4_fixture();
    let records = read_traces(traces.as_bytes()).map_err(|e| e.to_string())?;
    let db = GeoDb::from_reader(geodb.as_bytes()).map_err(|e| e.to_string())?;
    let summary = run_records(&records, &db, &DiversityConfig::default()).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    check(summary.per_pair.len() == 1, format!("{} scored pairs", summary.per_pair.len()))?;
    let r = &summary.per_pair[0];
    let line = format!(
        "ip_routes={} clusters={} compression={:.6} in {elapsed:?}",
        r.ip_route_count, r.cluster_count, r.compression_ratio
    );
    check(r.ip_route_count == 7 && r.cluster_count == 3, line.clone())?;
    check((r.compression_ratio - 7.0 / 3.0).abs() <= 1e-6, line.clone())?;
    check((r.compression_ratio - 2.3333).abs() <= 1e-4, line.clone())?;
    check(elapsed < Duration::from_secs(1), format!("too slow: {line}"))?;
    Ok(line)
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    let mut worst_scale = 0.0f64;
    for _ in 0..1000 {
        let n = rng.gen_range(2..=40);
        let delta: Vec<f64> = (0..n)
            .map(|_| if rng.gen_bool(0.1) { 0.0 } else { rng.gen_range(0.0..2000.0) })
            .collect();
        let got = delta_diversity(&DeltaVector::from_values(delta.clone()));
        let expected = eq2_direct(&delta);
        worst = worst.max((got - expected).abs() / expected.abs().max(f64::MIN_POSITIVE));
        for c in [0.5, 2.0, 10.0] {
            let scaled = delta_diversity(&DeltaVector::from_values(delta.iter().map(|d| d * c).collect()));
            worst_scale = worst_scale.max((scaled - c * got).abs() / (c * got).abs().max(f64::MIN_POSITIVE));
        }
    }
    let line = format!("max rel err vs direct {worst:.2e}, homogeneity {worst_scale:.2e}");
    check(worst <= 1e-9 && worst_scale <= 1e-9, line.clone())?;
    Ok(line)
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let plane = Plane::<f64>::new();
    let mut worst = 0.0f64;
    let mut sets = 0;
    for _ in 0..200 {
        let paths: Vec<Vec<(f64, f64)>> = (0..5)
            .map(|_| {
                (0..rng.gen_range(1..=5))
                    .map(|_| (rng.gen_range(-500.0..500.0), rng.gen_range(-500.0..500.0)))
                    .collect()
            })
            .collect();
        for mask in 0u32..32 {
            let subset: Vec<Vec<(f64, f64)>> =
                (0..5).filter(|i| mask & (1 << i) != 0).map(|i| paths[i].clone()).collect();
            let as_points: Vec<Vec<PlanarPoint<f64>>> =
                subset.iter().map(|p| p.iter().map(|(x, y)| PlanarPoint::new(*x, *y)).collect()).collect();
            let got = gdi(&plane, &as_points);
            let expected = oracle_gdi(&subset);
            let err = if expected == 0.0 { got.abs() } else { (got - expected).abs() / expected };
            worst = worst.max(err);
            sets += 1;
        }
    }
    let line = format!("{sets} route sets, max rel err {worst:.2e}");
    check(worst <= 1e-9, line.clone())?;
    Ok(line)
}

fn criterion_5() -> Outcome {
    let s = Sphere::<f64>::earth();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let a = Coordinate::new(rng.gen_range(-70.0..70.0), rng.gen_range(-180.0..180.0)).unwrap();
        let b = s.destination(a, rng.gen_range(0.0..360.0), rng.gen_range(1.0..1000.0));
        let p = s.destination(a, rng.gen_range(0.0..360.0), rng.gen_range(0.0..1500.0));
        let got = s.point_to_segment_distance(p, GeoSegment::new(a, b));
        let expected = sampled_segment_distance((p.lat(), p.lon()), (a.lat(), a.lon()), (b.lat(), b.lon()));
        worst = worst.max((got - expected).abs());
    }
    let c = |lat, lon| Coordinate::new(lat, lon).unwrap();
    let half = s.great_circle_distance(c(0.0, 0.0), c(0.0, 180.0));
    let degree = s.great_circle_distance(c(0.0, 0.0), c(0.0, 1.0));
    let pi_r = std::f64::consts::PI * 6371.0;
    let closed = (half - pi_r).abs().max((degree - pi_r / 180.0).abs());
    let mut symmetric = true;
    for _ in 0..1000 {
        let a = c(rng.gen_range(-90.0..90.0), rng.gen_range(-180.0..180.0));
        let b = c(rng.gen_range(-90.0..90.0), rng.gen_range(-180.0..180.0));
        symmetric &= s.great_circle_distance(a, b) == s.great_circle_distance(b, a);
    }
    let line = format!("max |segment - sampled| {worst:.3} km, closed forms within {closed:.2e} km, symmetric={symmetric}");
    check(worst < 0.5 && closed <= 1e-3 && symmetric, line.clone())?;
    Ok(line)
}

fn criterion_6() -> Outcome {
    let s = Sphere::<f64>::earth();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let thresholds = [25.0, 50.0, 100.0, 200.0];
    let mut non_monotone = 0;
    let mut invalid = 0;
    for _ in 0..500 {
        let start = Coordinate::new(rng.gen_range(-50.0..50.0), rng.gen_range(-170.0..170.0)).unwrap();
        let end = s.destination(start, rng.gen_range(0.0..360.0), rng.gen_range(300.0..3000.0));
        let mut paths = Vec::new();
        for _ in 0..rng.gen_range(1..=4) {
            let nodes = common::corridor(&s, start, end, rng.gen_range(-400.0..400.0));
            let jitter = rng.gen_range(5.0..150.0);
            for _ in 0..rng.gen_range(1..=3) {
                let located: Vec<Coordinate<f64>> = nodes
                    .iter()
                    .map(|n| s.destination(*n, rng.gen_range(0.0..360.0), rng.gen_range(0.0..jitter)))
                    .collect();
                if let Some(p) = GeoPath::collapsed(located) {
                    paths.push(p);
                }
            }
        }
        let mut counts = Vec::new();
        for t in thresholds {
            let clusters = cluster_pair_routes(&s, paths.clone(), t);
            let mut members: Vec<GeoPath<f64>> = clusters.iter().flat_map(|c| c.members.clone()).collect();
            let mut input = paths.clone();
            members.sort();
            input.sort();
            let complete = clusters.iter().all(|c| {
                c.members.iter().all(|a| c.members.iter().all(|b| geo_equal(&s, a.nodes(), b.nodes(), t)))
            });
            if members != input || !complete {
                invalid += 1;
            }
            counts.push(clusters.len());
        }
        if counts.windows(2).any(|w| w[1] > w[0]) {
            non_monotone += 1;
        }
    }
    let line = format!("500 path sets: {invalid} invalid clusterings, {non_monotone} non-monotone in threshold");
    check(invalid == 0 && non_monotone == 0, line.clone())?;
    Ok(line)
}

fn run_cli(traces: &Path, geodb: &Path, out: &Path, jobs: usize) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_geodiv"))
        .args(["pipeline", "--traces"])
        .arg(traces)
        .arg("--geodb")
        .arg(geodb)
        .arg("--out")
        .arg(out)
        .args(["--jobs", &jobs.to_string()])
        .output()
        .map_err(|e| e.to_string())?;
    check(
        status.status.success(),
        format!("pipeline --jobs {jobs} failed: {}", String::from_utf8_lossy(&status.stderr)),
    )
}

fn criterion_7() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut corpus = planted_corpus(&CorpusSpec {
        seed: 7,
        pairs: 1500,
        repeats: 2,
        single_route_fraction: 0.3,
        alias_only_fraction: 0.2,
        jitter_km: 20.0,
    });
    check(corpus.lines >= 10_000, format!("only {} lines generated", corpus.lines))?;
    corpus.truncate_lines(10_000);
    let (traces, geodb) = corpus.write(dir.path());
    let start = Instant::now();
    run_cli(&traces, &geodb, &dir.path().join("j1"), 1)?;
    run_cli(&traces, &geodb, &dir.path().join("j8"), 8)?;
    let elapsed = start.elapsed();
    for f in ["report.json", "pairs.csv", "compression_ecdf.csv", "gdi_ratio_ecdf.csv"] {
        let a = std::fs::read(dir.path().join("j1").join(f)).map_err(|e| e.to_string())?;
        let b = std::fs::read(dir.path().join("j8").join(f)).map_err(|e| e.to_string())?;
        check(a == b, format!("{f} differs between --jobs 1 and --jobs 8"))?;
    }
    let pairs = std::fs::read_to_string(dir.path().join("j1/pairs.csv")).map_err(|e| e.to_string())?;
    let line = format!("{} lines, {} scored pairs, both runs in {elapsed:?}", corpus.lines, pairs.lines().count() - 1);
    check(elapsed < Duration::from_secs(30), format!("too slow: {line}"))?;
    Ok(line)
}

fn criterion_8() -> Outcome {
    let corpus = planted_corpus(&CorpusSpec {
        seed: 8,
        pairs: 1000,
        repeats: 0,
        single_route_fraction: 0.0,
        alias_only_fraction: 0.0,
        jitter_km: 5.0,
    });
    let records = read_traces(corpus.traces.as_bytes()).map_err(|e| e.to_string())?;
    let db = GeoDb::from_reader(corpus.geodb.as_bytes()).map_err(|e| e.to_string())?;
    let summary = run_records(&records, &db, &DiversityConfig::default()).map_err(|e| e.to_string())?;
    let got: HashMap<(Ipv4Addr, Ipv4Addr), usize> =
        summary.per_pair.iter().map(|r| ((r.src, r.dst), r.cluster_count)).collect();
    let matched = corpus.planted.iter().filter(|(k, n)| got.get(k) == Some(n)).count();
    let line = format!(
        "{matched}/{} planted pairs recovered, {} scored of {} total",
        corpus.planted.len(),
        summary.pairs_scored,
        summary.total_pairs
    );
    check(corpus.planted.len() == 1000 && matched == 1000 && summary.pairs_scored == 1000, line.clone())?;
    Ok(line)
}

#[test]
fn acceptance() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 8] = [
        ("1 GDI ordering on the route-set example", criterion_1),
        ("2 seven routes collapse to three clusters", criterion_2),
        ("3 pair diversity vs direct evaluation", criterion_3),
        ("4 GDI vs brute-force greedy replay", criterion_4),
        ("5 geodesy vs dense sampling and closed forms", criterion_5),
        ("6 clustering invariants", criterion_6),
        ("7 pipeline determinism across worker counts", criterion_7),
        ("8 planted cluster recovery", criterion_8),
    ];
    let mut failed = Vec::new();
    for (name, f) in criteria {
        match f() {
            Ok(detail) => println!("PASS  criterion {name}: {detail}"),
            Err(detail) => {
                println!("FAIL  criterion {name}: {detail}");
                failed.push(name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
