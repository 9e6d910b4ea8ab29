//! Route diversity scores.
//!
//! The diversity of two paths is `(1 - Var'(Δ)) * Mean(Δ)` over their delta
//! vector, where `Var'` is the population variance of Δ after dividing every
//! entry by `max(Δ)`. A path's diversity against a set is its minimum
//! pairwise diversity with the set's members. The GDI of a route set is
//! accumulated greedily: start from the most diverse pair, then keep moving
//! over the route most diverse from everything already chosen, summing the
//! scores.
//!
//! The MGDI is the largest GDI reachable by `n` triangle-shaped routes
//! between two endpoints in the plane, none longer than a given length.

use crate::cluster::{canonical_cmp, delta_vector, DeltaVector};
use crate::geodesy::{PathMetric, PlanarPoint, Plane};
use crate::num::Scalar;
use crate::{Error, Result};

/// Beyond this many height combinations `mgdi` switches from exhaustive
/// enumeration to coordinate ascent.
pub const MGDI_EXHAUSTIVE_LIMIT: u64 = 250_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiversityConfig<T> {
    /// Geographic-equality threshold used by clustering.
    pub threshold_km: T,
    pub earth_radius_km: T,
    /// Number of apex heights tried per route by `mgdi`.
    pub mgdi_grid_steps: usize,
}

impl<T: Scalar> Default for DiversityConfig<T> {
    fn default() -> Self {
        Self {
            threshold_km: T::lit(crate::DEFAULT_THRESHOLD_KM),
            earth_radius_km: T::lit(crate::EARTH_RADIUS_KM),
            mgdi_grid_steps: 21,
        }
    }
}

impl<T: Scalar> DiversityConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let positive = |x: T| x.is_finite() && x > T::zero();
        if !positive(self.threshold_km) {
            return Err(Error::InvalidConfig(format!("threshold_km must be positive, got {}", self.threshold_km)));
        }
        if !positive(self.earth_radius_km) {
            return Err(Error::InvalidConfig(format!(
                "earth_radius_km must be positive, got {}",
                self.earth_radius_km
            )));
        }
        if self.mgdi_grid_steps == 0 {
            return Err(Error::InvalidConfig("mgdi_grid_steps must be positive".into()));
        }
        Ok(())
    }
}

/// Diversity score of a delta vector. Zero when every entry is zero.
pub fn delta_diversity<T: Scalar>(delta: &DeltaVector<T>) -> T {
    let max = delta.max();
    if max <= T::zero() || delta.is_empty() {
        return T::zero();
    }
    // summing in sorted order makes the score depend only on the multiset,
    // so d(P, L) == d(L, P) bit for bit
    let mut sorted = delta.values().to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let n = T::from_count(sorted.len());
    let sum = |it: &mut dyn Iterator<Item = T>| it.fold(T::zero(), |a, b| a + b);
    let mean = sum(&mut sorted.iter().copied()) / n;
    let norm_mean = sum(&mut sorted.iter().map(|v| *v / max)) / n;
    let var = sum(&mut sorted.iter().map(|v| {
        let x = *v / max - norm_mean;
        x * x
    })) / n;
    (T::one() - var) * mean
}

/// Pairwise diversity of two paths, in kilometers.
pub fn pair_diversity<T, M>(metric: &M, p: &[M::Point], l: &[M::Point]) -> T
where
    T: Scalar,
    M: PathMetric<T>,
{
    delta_diversity(&delta_vector(metric, p, l))
}

/// Minimum pairwise diversity between `p` and any member of `set`.
pub fn set_diversity<T, M, P>(metric: &M, p: &[M::Point], set: &[P]) -> Result<T>
where
    T: Scalar,
    M: PathMetric<T>,
    P: AsRef<[M::Point]>,
{
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    Ok(set
        .iter()
        .map(|l| pair_diversity(metric, p, l.as_ref()))
        .fold(T::infinity(), T::min))
}

/// The terms of a GDI evaluation. Indices refer to the input slice.
#[derive(Debug, Clone, PartialEq)]
pub struct GdiBreakdown<T> {
    /// Most diverse pair and its score.
    pub seed: Option<((usize, usize), T)>,
    /// Routes in the order they were moved over, with their set diversity.
    pub steps: Vec<(usize, T)>,
}

impl<T: Scalar> GdiBreakdown<T> {
    pub fn total(&self) -> T {
        let seed = self.seed.map_or(T::zero(), |(_, d)| d);
        self.steps.iter().fold(seed, |acc, (_, d)| acc + *d)
    }
}

/// Greedy accumulation over `n` items already in canonical order, given their
/// pairwise diversity. Earlier items win ties.
fn greedy<T: Scalar>(n: usize, div: impl Fn(usize, usize) -> T) -> GdiBreakdown<T> {
    if n < 2 {
        return GdiBreakdown { seed: None, steps: Vec::new() };
    }
    let mut best = ((0, 1), div(0, 1));
    for i in 0..n {
        for j in i + 1..n {
            let d = div(i, j);
            if d > best.1 {
                best = ((i, j), d);
            }
        }
    }
    let (a, b) = best.0;
    let mut chosen = vec![false; n];
    chosen[a] = true;
    chosen[b] = true;
    // running minimum of each remaining item's diversity to the chosen set
    let mut to_chosen: Vec<T> = (0..n).map(|k| div(k, a).min(div(k, b))).collect();
    let mut steps = Vec::with_capacity(n - 2);
    for _ in 2..n {
        let mut pick: Option<usize> = None;
        for k in (0..n).filter(|k| !chosen[*k]) {
            if pick.is_none_or(|p| to_chosen[k] > to_chosen[p]) {
                pick = Some(k);
            }
        }
        let k = pick.expect("remaining item");
        chosen[k] = true;
        steps.push((k, to_chosen[k]));
        for m in (0..n).filter(|m| !chosen[*m]) {
            to_chosen[m] = to_chosen[m].min(div(m, k));
        }
    }
    GdiBreakdown { seed: Some(best), steps }
}

/// Symmetric matrix of pairwise diversities, row-major.
fn diversity_matrix<T, M, P>(metric: &M, paths: &[&P]) -> Vec<T>
where
    T: Scalar,
    M: PathMetric<T>,
    P: AsRef<[M::Point]> + ?Sized,
{
    let n = paths.len();
    let mut m = vec![T::zero(); n * n];
    for i in 0..n {
        for j in i + 1..n {
            let d = pair_diversity(metric, paths[i].as_ref(), paths[j].as_ref());
            m[i * n + j] = d;
            m[j * n + i] = d;
        }
    }
    m
}

/// GDI with its individual terms. Ties are broken by canonical path order,
/// so the result does not depend on the order of `paths`.
pub fn gdi_breakdown<T, M, P>(metric: &M, paths: &[P]) -> GdiBreakdown<T>
where
    T: Scalar,
    M: PathMetric<T>,
    P: AsRef<[M::Point]>,
{
    let mut order: Vec<usize> = (0..paths.len()).collect();
    order.sort_by(|a, b| canonical_cmp(&paths[*a], &paths[*b]));
    let sorted: Vec<&P> = order.iter().map(|i| &paths[*i]).collect();
    let n = sorted.len();
    let m = diversity_matrix(metric, &sorted);
    let g = greedy(n, |i, j| m[i * n + j]);
    GdiBreakdown {
        seed: g.seed.map(|((i, j), d)| ((order[i], order[j]), d)),
        steps: g.steps.into_iter().map(|(k, d)| (order[k], d)).collect(),
    }
}

/// Geographic Diversity Index of a route set, in kilometers. Zero for fewer
/// than two routes.
pub fn gdi<T, M, P>(metric: &M, paths: &[P]) -> T
where
    T: Scalar,
    M: PathMetric<T>,
    P: AsRef<[M::Point]>,
{
    gdi_breakdown(metric, paths).total()
}

/// Best triangle arrangement found by `mgdi_solution`.
#[derive(Debug, Clone, PartialEq)]
pub struct MgdiSolution<T> {
    pub value: T,
    /// Signed apex heights, ascending; the last one is the maximum height.
    pub heights: Vec<T>,
    /// Whether every grid combination was evaluated.
    pub exhaustive: bool,
}

/// Route with its apex `height` km off the midpoint of the endpoint segment.
pub fn triangle_route<T: Scalar>(endpoint_distance_km: T, height: T) -> [PlanarPoint<T>; 3] {
    let two = T::lit(2.0);
    [
        PlanarPoint::new(T::zero(), T::zero()),
        PlanarPoint::new(endpoint_distance_km / two, height),
        PlanarPoint::new(endpoint_distance_km, T::zero()),
    ]
}

/// Largest apex height allowed for a route no longer than `longest_route_km`.
pub fn max_apex_height<T: Scalar>(endpoint_distance_km: T, longest_route_km: T) -> Result<T> {
    let bad = |why: &str| {
        Err(Error::InvalidGeometry(format!(
            "{why} (endpoint distance {endpoint_distance_km} km, longest route {longest_route_km} km)"
        )))
    };
    if !endpoint_distance_km.is_finite() || !longest_route_km.is_finite() || endpoint_distance_km < T::zero() {
        return bad("non-finite or negative length");
    }
    // polyline lengths may undershoot the chord by rounding
    if longest_route_km < endpoint_distance_km * (T::one() - T::lit(1e-9)) {
        return bad("longest route shorter than the endpoint distance");
    }
    let two = T::lit(2.0);
    let (half_l, half_d) = (longest_route_km / two, endpoint_distance_km / two);
    Ok((half_l * half_l - half_d * half_d).max(T::zero()).sqrt())
}

/// Apex heights tried per route: `steps` evenly spaced values over
/// `[-h_max, h_max]`, or just `h_max` when `steps == 1`.
pub fn height_grid<T: Scalar>(h_max: T, steps: usize) -> Vec<T> {
    if steps <= 1 {
        return vec![h_max];
    }
    let span = T::lit(2.0) * h_max;
    let last = T::from_count(steps - 1);
    let mut grid: Vec<T> = (0..steps).map(|k| -h_max + span * T::from_count(k) / last).collect();
    grid[steps - 1] = h_max;
    grid
}

/// Hypothetical maximum GDI for `n_routes` routes.
///
/// Routes are modelled in the plane as two-segment triangles between
/// endpoints `endpoint_distance_km` apart, with apexes on the perpendicular
/// bisector. One route is pinned at the maximum height permitted by
/// `longest_route_km`; the heights of the others range over a grid of
/// `cfg.mgdi_grid_steps` values. Returns the largest GDI found.
pub fn mgdi<T: Scalar>(
    n_routes: usize,
    endpoint_distance_km: T,
    longest_route_km: T,
    cfg: &DiversityConfig<T>,
) -> Result<T> {
    mgdi_solution(n_routes, endpoint_distance_km, longest_route_km, cfg).map(|s| s.value)
}

pub fn mgdi_solution<T: Scalar>(
    n_routes: usize,
    endpoint_distance_km: T,
    longest_route_km: T,
    cfg: &DiversityConfig<T>,
) -> Result<MgdiSolution<T>> {
    if cfg.mgdi_grid_steps == 0 {
        return Err(Error::InvalidConfig("mgdi_grid_steps must be positive".into()));
    }
    let h_max = max_apex_height(endpoint_distance_km, longest_route_km)?;
    if n_routes <= 1 || h_max <= T::zero() {
        return Ok(MgdiSolution {
            value: T::zero(),
            heights: vec![h_max; n_routes],
            exhaustive: true,
        });
    }
    let grid = height_grid(h_max, cfg.mgdi_grid_steps);
    let g = grid.len();
    let plane = Plane::<T>::new();
    let routes: Vec<[PlanarPoint<T>; 3]> = grid
        .iter()
        .map(|h| triangle_route(endpoint_distance_km, *h))
        .collect();
    let matrix = diversity_matrix(&plane, &routes.iter().collect::<Vec<_>>());
    // grid routes are in canonical order already (ascending apex height), so
    // a nondecreasing index tuple is a canonically ordered route set
    let score = |idx: &[usize]| greedy(idx.len(), |i, j| matrix[idx[i] * g + idx[j]]).total();

    let free = n_routes - 1;
    let pinned = g - 1;
    let exhaustive = multiset_count(g, free).is_some_and(|c| c <= MGDI_EXHAUSTIVE_LIMIT);
    let best = if exhaustive {
        let mut best: Option<(T, Vec<usize>)> = None;
        let mut idx = vec![0usize; free];
        let mut candidate = Vec::with_capacity(n_routes);
        loop {
            candidate.clear();
            candidate.extend_from_slice(&idx);
            candidate.push(pinned);
            let v = score(&candidate);
            if best.as_ref().is_none_or(|(b, _)| v > *b) {
                best = Some((v, candidate.clone()));
            }
            if !next_multiset(&mut idx, g) {
                break;
            }
        }
        best.expect("at least one candidate")
    } else {
        coordinate_ascent(g, free, pinned, &score)
    };
    Ok(MgdiSolution {
        value: best.0,
        heights: best.1.iter().map(|i| grid[*i]).collect(),
        exhaustive,
    })
}

/// Number of nondecreasing `k`-tuples over `g` symbols, `C(g + k - 1, k)`.
fn multiset_count(g: usize, k: usize) -> Option<u64> {
    let mut acc: u128 = 1;
    for i in 1..=k as u128 {
        acc = acc * (g as u128 + i - 1) / i;
        if acc > u64::MAX as u128 {
            return None;
        }
    }
    Some(acc as u64)
}

/// Advances to the next nondecreasing tuple in lexicographic order.
fn next_multiset(idx: &mut [usize], g: usize) -> bool {
    for pos in (0..idx.len()).rev() {
        if idx[pos] + 1 < g {
            let v = idx[pos] + 1;
            for x in &mut idx[pos..] {
                *x = v;
            }
            return true;
        }
    }
    false
}

/// Deterministic local search for large route counts: start from evenly
/// spread heights and move one route at a time to its best grid height
/// until no move improves the score.
fn coordinate_ascent<T: Scalar>(
    g: usize,
    free: usize,
    pinned: usize,
    score: &impl Fn(&[usize]) -> T,
) -> (T, Vec<usize>) {
    let sorted_with_pin = |free_idx: &[usize]| {
        let mut v = free_idx.to_vec();
        v.push(pinned);
        v.sort_unstable();
        v
    };
    let mut current: Vec<usize> = (0..free)
        .map(|k| if free == 1 { 0 } else { k * (g - 1) / free })
        .collect();
    let mut best = score(&sorted_with_pin(&current));
    loop {
        let mut improved = false;
        for pos in 0..free {
            for h in 0..g {
                if h == current[pos] {
                    continue;
                }
                let mut trial = current.clone();
                trial[pos] = h;
                let v = score(&sorted_with_pin(&trial));
                if v > best {
                    best = v;
                    current = trial;
                    improved = true;
                }
            }
        }
        if !improved {
            return (best, sorted_with_pin(&current));
        }
    }
}

/// Distinct IP routes per cluster.
pub fn compression_ratio<T: Scalar>(ip_route_count: usize, cluster_count: usize) -> Result<T> {
    if ip_route_count == 0 || cluster_count == 0 || cluster_count > ip_route_count {
        return Err(Error::InvalidCounts { ip_routes: ip_route_count, clusters: cluster_count });
    }
    Ok(T::from_count(ip_route_count) / T::from_count(cluster_count))
}
