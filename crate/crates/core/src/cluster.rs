//! Geographic equality of paths and first-fit clustering of one pair's
//! paths into geographically equivalent classes.

use std::cmp::Ordering;

use crate::geodesy::PathMetric;
use crate::num::Scalar;

/// Node-to-opposite-path distances between two paths: first every node of
/// `p` against `l`, then every node of `l` against `p`, each in path order.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaVector<T>(Vec<T>);

impl<T: Scalar> DeltaVector<T> {
    pub fn from_values(values: Vec<T>) -> Self {
        Self(values)
    }

    pub fn values(&self) -> &[T] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max(&self) -> T {
        self.0.iter().copied().fold(T::zero(), T::max)
    }

    pub fn mean(&self) -> T {
        if self.0.is_empty() {
            return T::zero();
        }
        self.0.iter().copied().fold(T::zero(), |a, b| a + b) / T::from_count(self.0.len())
    }
}

/// Builds the delta vector of two paths.
///
/// # Panics
/// If either path has no nodes.
pub fn delta_vector<T, M>(metric: &M, p: &[M::Point], l: &[M::Point]) -> DeltaVector<T>
where
    T: Scalar,
    M: PathMetric<T>,
{
    let against = |nodes: &[M::Point], other: &[M::Point]| {
        nodes
            .iter()
            .map(|u| metric.point_to_path(u, other).expect("non-empty path"))
            .collect::<Vec<_>>()
    };
    assert!(!p.is_empty() && !l.is_empty(), "delta vector of an empty path");
    let mut values = against(p, l);
    values.extend(against(l, p));
    DeltaVector(values)
}

/// Two paths are geographically equal when no node of either lies farther
/// than `threshold_km` from the other path. The bound is inclusive.
pub fn geo_equal<T, M>(metric: &M, p: &[M::Point], l: &[M::Point], threshold_km: T) -> bool
where
    T: Scalar,
    M: PathMetric<T>,
{
    let within = |nodes: &[M::Point], other: &[M::Point]| {
        nodes
            .iter()
            .all(|u| metric.point_to_path(u, other).expect("non-empty path") <= threshold_km)
    };
    within(p, l) && within(l, p)
}

/// A group of pairwise geographically equal paths. Ids follow creation order.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster<P> {
    pub id: usize,
    /// In canonical order; the first member is the representative.
    pub members: Vec<P>,
}

impl<P> Cluster<P> {
    /// The lexicographically smallest member.
    pub fn representative(&self) -> &P {
        &self.members[0]
    }
}

/// Lexicographic comparison of node sequences.
pub fn canonical_cmp<Pt: Ord, P: AsRef<[Pt]>>(a: &P, b: &P) -> Ordering {
    a.as_ref().cmp(b.as_ref())
}

/// First-fit complete-linkage clustering.
///
/// Paths are first sorted into canonical order. Each path then joins the
/// lowest-id cluster all of whose members it is geographically equal to, or
/// starts a new cluster.
pub fn cluster_pair_routes<T, M, P>(metric: &M, mut paths: Vec<P>, threshold_km: T) -> Vec<Cluster<P>>
where
    T: Scalar,
    M: PathMetric<T>,
    P: AsRef<[M::Point]>,
{
    paths.sort_by(canonical_cmp);
    let mut clusters: Vec<Cluster<P>> = Vec::new();
    for path in paths {
        let slot = clusters.iter().position(|c| {
            c.members
                .iter()
                .all(|m| geo_equal(metric, path.as_ref(), m.as_ref(), threshold_km))
        });
        match slot {
            Some(i) => clusters[i].members.push(path),
            None => {
                let id = clusters.len();
                clusters.push(Cluster { id, members: vec![path] });
            }
        }
    }
    clusters
}
