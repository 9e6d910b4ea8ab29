//! Distance primitives on a spherical Earth, plus a planar model that shares
//! the same interface.
//!
//! Paths are polylines of great-circle arcs. The distance from a point to a
//! path is the distance to the closest point of any arc, not only to the
//! closest node.

use std::cmp::Ordering;
use std::hash::{Hash, Hasher};
use std::marker::PhantomData;

use crate::num::{micro_key, Scalar};
use crate::{Error, Result};

/// A position in decimal degrees. Latitude in `[-90, 90]`, longitude
/// normalized to `[-180, 180)`.
///
/// Equality, ordering and hashing compare both components rounded to six
/// decimal places, so values that survive a text round trip compare equal.
/// Ordering is lexicographic (latitude first).
#[derive(Debug, Clone, Copy)]
pub struct Coordinate<T> {
    lat: T,
    lon: T,
}

impl<T: Scalar> Coordinate<T> {
    pub fn new(lat: T, lon: T) -> Result<Self> {
        let ninety = T::lit(90.0);
        if !lat.is_finite() || !lon.is_finite() || lat < -ninety || lat > ninety {
            return Err(Error::InvalidCoordinate {
                lat: lat.to_f64().unwrap_or(f64::NAN),
                lon: lon.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(Self { lat, lon: normalize_lon(lon) })
    }

    pub fn lat(&self) -> T {
        self.lat
    }

    pub fn lon(&self) -> T {
        self.lon
    }

    /// Micro-degree key used for equality and ordering.
    pub fn key(&self) -> (i64, i64) {
        (micro_key(self.lat), micro_key(self.lon))
    }

    /// Unit vector in Earth-centered coordinates.
    fn to_unit(self) -> Vec3<T> {
        let (lat, lon) = (self.lat.to_radians(), self.lon.to_radians());
        Vec3(lat.cos() * lon.cos(), lat.cos() * lon.sin(), lat.sin())
    }

    fn from_unit(v: Vec3<T>) -> Self {
        let lat = v.2.atan2((v.0 * v.0 + v.1 * v.1).sqrt()).to_degrees();
        let lon = v.1.atan2(v.0).to_degrees();
        Self { lat, lon: normalize_lon(lon) }
    }
}

fn normalize_lon<T: Scalar>(lon: T) -> T {
    let full = T::lit(360.0);
    let half = T::lit(180.0);
    let mut r = (lon + half) % full;
    if r < T::zero() {
        r = r + full;
    }
    if r >= full {
        r = r - full;
    }
    r - half
}

impl<T: Scalar> PartialEq for Coordinate<T> {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl<T: Scalar> Eq for Coordinate<T> {}

impl<T: Scalar> Hash for Coordinate<T> {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.key().hash(state);
    }
}

impl<T: Scalar> PartialOrd for Coordinate<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Scalar> Ord for Coordinate<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

/// One great-circle arc of a geo-path. Zero-length segments are allowed.
#[derive(Debug, Clone, Copy)]
pub struct GeoSegment<T> {
    pub start: Coordinate<T>,
    pub end: Coordinate<T>,
}

impl<T> GeoSegment<T> {
    pub fn new(start: Coordinate<T>, end: Coordinate<T>) -> Self {
        Self { start, end }
    }
}

impl<T: Scalar> PartialEq for GeoSegment<T> {
    fn eq(&self, other: &Self) -> bool {
        self.start == other.start && self.end == other.end
    }
}

/// Ordered nodes of a localized route: at least two nodes, no two
/// consecutive nodes at the same coordinate.
///
/// The ordering is the lexicographic order of the node sequences,
/// which is the canonical order used for clustering and tie-breaking.
#[derive(Debug, Clone)]
pub struct GeoPath<T: Scalar> {
    nodes: Vec<Coordinate<T>>,
}

impl<T: Scalar> PartialEq for GeoPath<T> {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes
    }
}

impl<T: Scalar> Eq for GeoPath<T> {}

impl<T: Scalar> Hash for GeoPath<T> {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.nodes.hash(state);
    }
}

impl<T: Scalar> PartialOrd for GeoPath<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Scalar> Ord for GeoPath<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.nodes.cmp(&other.nodes)
    }
}

impl<T: Scalar> GeoPath<T> {
    pub fn new(nodes: Vec<Coordinate<T>>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidPath(format!("{} node(s), need at least 2", nodes.len())));
        }
        if let Some(i) = nodes.windows(2).position(|w| w[0] == w[1]) {
            return Err(Error::InvalidPath(format!("nodes {i} and {} coincide", i + 1)));
        }
        Ok(Self { nodes })
    }

    /// Collapses runs of identical coordinates; `None` if fewer than two
    /// nodes remain.
    pub fn collapsed(nodes: impl IntoIterator<Item = Coordinate<T>>) -> Option<Self> {
        let mut out: Vec<Coordinate<T>> = Vec::new();
        for c in nodes {
            if out.last() != Some(&c) {
                out.push(c);
            }
        }
        (out.len() >= 2).then_some(Self { nodes: out })
    }

    pub fn nodes(&self) -> &[Coordinate<T>] {
        &self.nodes
    }

    pub fn segments(&self) -> impl Iterator<Item = GeoSegment<T>> + '_ {
        self.nodes.windows(2).map(|w| GeoSegment::new(w[0], w[1]))
    }

    pub fn first(&self) -> Coordinate<T> {
        self.nodes[0]
    }

    pub fn last(&self) -> Coordinate<T> {
        self.nodes[self.nodes.len() - 1]
    }
}

impl<T: Scalar> AsRef<[Coordinate<T>]> for GeoPath<T> {
    fn as_ref(&self) -> &[Coordinate<T>] {
        &self.nodes
    }
}

/// A distance model over which paths are compared.
///
/// `Point`'s ordering defines the canonical path order used to break ties.
pub trait PathMetric<T: Scalar>: Sync {
    type Point: Copy + Ord + Send + Sync;

    fn distance(&self, a: &Self::Point, b: &Self::Point) -> T;

    /// Distance from `p` to the closest point of the segment `a`-`b`.
    fn point_to_segment(&self, p: &Self::Point, a: &Self::Point, b: &Self::Point) -> T;

    /// Distance from `p` to the closest point of the polyline `path`; for a
    /// single node this is the point-to-point distance.
    fn point_to_path(&self, p: &Self::Point, path: &[Self::Point]) -> Result<T> {
        match path {
            [] => Err(Error::EmptyPath),
            [only] => Ok(self.distance(p, only)),
            _ => Ok(path
                .windows(2)
                .map(|w| self.point_to_segment(p, &w[0], &w[1]))
                .fold(T::infinity(), T::min)),
        }
    }

    /// Sum of segment lengths.
    fn path_length(&self, path: &[Self::Point]) -> T {
        path.windows(2)
            .map(|w| self.distance(&w[0], &w[1]))
            .fold(T::zero(), |acc, d| acc + d)
    }
}

/// Spherical Earth of the given radius. Distances in kilometers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sphere<T> {
    pub radius_km: T,
}

impl<T: Scalar> Default for Sphere<T> {
    fn default() -> Self {
        Self::earth()
    }
}

impl<T: Scalar> Sphere<T> {
    pub fn new(radius_km: T) -> Self {
        Self { radius_km }
    }

    /// Mean Earth radius, 6371 km.
    pub fn earth() -> Self {
        Self::new(T::lit(crate::EARTH_RADIUS_KM))
    }

    /// Haversine great-circle distance.
    pub fn great_circle_distance(&self, a: Coordinate<T>, b: Coordinate<T>) -> T {
        let two = T::lit(2.0);
        let dlat = (b.lat - a.lat).to_radians();
        let dlon = (b.lon - a.lon).to_radians();
        let sin_lat = (dlat / two).sin();
        let sin_lon = (dlon / two).sin();
        let h = sin_lat * sin_lat
            + a.lat.to_radians().cos() * b.lat.to_radians().cos() * sin_lon * sin_lon;
        let h = h.max(T::zero()).min(T::one());
        self.radius_km * two * h.sqrt().atan2((T::one() - h).sqrt())
    }

    /// Cross-track distance when the foot of the perpendicular falls on the
    /// arc, otherwise the distance to the nearer endpoint. Zero-length and
    /// antipodal segments (no unique great circle) use the endpoint rule.
    pub fn point_to_segment_distance(&self, p: Coordinate<T>, s: GeoSegment<T>) -> T {
        let endpoint = || {
            self.great_circle_distance(p, s.start)
                .min(self.great_circle_distance(p, s.end))
        };
        let eps = T::epsilon() * T::lit(1e3);
        let (a, b, v) = (s.start.to_unit(), s.end.to_unit(), p.to_unit());
        let normal = a.cross(b);
        let norm = normal.norm();
        if norm < eps {
            return endpoint();
        }
        let normal = normal.scale(T::one() / norm);
        let sin_xt = v.dot(normal);
        let in_plane = v.sub(normal.scale(sin_xt));
        let in_plane_norm = in_plane.norm();
        if in_plane_norm < eps {
            // p is a pole of the arc's great circle: equidistant from all of it
            return endpoint();
        }
        let foot = in_plane.scale(T::one() / in_plane_norm);
        let on_arc = a.cross(foot).dot(normal) >= T::zero() && foot.cross(b).dot(normal) >= T::zero();
        if on_arc {
            self.radius_km * sin_xt.abs().atan2(in_plane_norm)
        } else {
            endpoint()
        }
    }

    /// Point on the arc `a`-`b` at fraction `t` (spherical interpolation).
    pub fn interpolate(&self, a: Coordinate<T>, b: Coordinate<T>, t: T) -> Coordinate<T> {
        let (va, vb) = (a.to_unit(), b.to_unit());
        let omega = va.cross(vb).norm().atan2(va.dot(vb));
        if omega.abs() < T::epsilon() {
            return a;
        }
        let sin_omega = omega.sin();
        let wa = ((T::one() - t) * omega).sin() / sin_omega;
        let wb = (t * omega).sin() / sin_omega;
        Coordinate::from_unit(va.scale(wa).add(vb.scale(wb)))
    }

    /// Point reached by travelling `distance_km` from `start` along the
    /// initial bearing `bearing_deg` (clockwise from north).
    pub fn destination(&self, start: Coordinate<T>, bearing_deg: T, distance_km: T) -> Coordinate<T> {
        let delta = distance_km / self.radius_km;
        let theta = bearing_deg.to_radians();
        let (lat1, lon1) = (start.lat.to_radians(), start.lon.to_radians());
        let lat2 = (lat1.sin() * delta.cos() + lat1.cos() * delta.sin() * theta.cos()).asin();
        let lon2 = lon1
            + (theta.sin() * delta.sin() * lat1.cos()).atan2(delta.cos() - lat1.sin() * lat2.sin());
        Coordinate {
            lat: lat2.to_degrees(),
            lon: normalize_lon(lon2.to_degrees()),
        }
    }
}

impl<T: Scalar> PathMetric<T> for Sphere<T> {
    type Point = Coordinate<T>;

    fn distance(&self, a: &Coordinate<T>, b: &Coordinate<T>) -> T {
        self.great_circle_distance(*a, *b)
    }

    fn point_to_segment(&self, p: &Coordinate<T>, a: &Coordinate<T>, b: &Coordinate<T>) -> T {
        self.point_to_segment_distance(*p, GeoSegment::new(*a, *b))
    }
}

/// A point of the planar model, in kilometers.
#[derive(Debug, Clone, Copy)]
pub struct PlanarPoint<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> PlanarPoint<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    fn key(&self) -> (i64, i64) {
        (micro_key(self.x), micro_key(self.y))
    }
}

impl<T: Scalar> PartialEq for PlanarPoint<T> {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl<T: Scalar> Eq for PlanarPoint<T> {}

impl<T: Scalar> PartialOrd for PlanarPoint<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Scalar> Ord for PlanarPoint<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

/// Euclidean plane.
#[derive(Debug, Clone, Copy, Default)]
pub struct Plane<T>(PhantomData<T>);

impl<T> Plane<T> {
    pub fn new() -> Self {
        Plane(PhantomData)
    }
}

impl<T: Scalar> PathMetric<T> for Plane<T> {
    type Point = PlanarPoint<T>;

    fn distance(&self, a: &PlanarPoint<T>, b: &PlanarPoint<T>) -> T {
        (a.x - b.x).hypot(a.y - b.y)
    }

    fn point_to_segment(&self, p: &PlanarPoint<T>, a: &PlanarPoint<T>, b: &PlanarPoint<T>) -> T {
        let (dx, dy) = (b.x - a.x, b.y - a.y);
        let len2 = dx * dx + dy * dy;
        if len2 <= T::zero() {
            return self.distance(p, a);
        }
        let t = (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2)
            .max(T::zero())
            .min(T::one());
        let foot = PlanarPoint::new(a.x + t * dx, a.y + t * dy);
        self.distance(p, &foot)
    }
}

#[derive(Debug, Clone, Copy)]
struct Vec3<T>(T, T, T);

impl<T: Scalar> Vec3<T> {
    fn dot(self, o: Self) -> T {
        self.0 * o.0 + self.1 * o.1 + self.2 * o.2
    }

    fn cross(self, o: Self) -> Self {
        Vec3(
            self.1 * o.2 - self.2 * o.1,
            self.2 * o.0 - self.0 * o.2,
            self.0 * o.1 - self.1 * o.0,
        )
    }

    fn norm(self) -> T {
        self.dot(self).sqrt()
    }

    fn scale(self, k: T) -> Self {
        Vec3(self.0 * k, self.1 * k, self.2 * k)
    }

    fn add(self, o: Self) -> Self {
        Vec3(self.0 + o.0, self.1 + o.1, self.2 + o.2)
    }

    fn sub(self, o: Self) -> Self {
        Vec3(self.0 - o.0, self.1 - o.1, self.2 - o.2)
    }
}
