//! Geographic diversity of Internet routes.
//!
//! Traceroute hop lists are geolocated into geo-paths, geo-paths of one
//! endpoint pair are clustered into geographically equivalent classes, and
//! each pair's class representatives are scored with the Geographic
//! Diversity Index (GDI) and its hypothetical maximum (MGDI).
//!
//! The geometric core (`geodesy`, `cluster`, `diversity`) is generic over the
//! scalar type; the aliases below fix it to `f64` (what the pipeline uses) or
//! `f32`.

pub mod cluster;
pub mod diversity;
pub mod error;
pub mod geodesy;
pub mod geolocate;
pub mod num;
pub mod pipeline;
pub mod report;
pub mod trace;

pub use error::{Error, Result};
pub use num::Scalar;

pub use cluster::{cluster_pair_routes, delta_vector, geo_equal, Cluster, DeltaVector};
pub use diversity::{
    compression_ratio, gdi, mgdi, pair_diversity, set_diversity, DiversityConfig,
};
pub use geodesy::{Coordinate, GeoPath, GeoSegment, PathMetric, Plane, PlanarPoint, Sphere};
pub use geolocate::{filter_pairs, load_geodb, route_to_geopath, FilterOutcome, GeoDb};
pub use pipeline::{run_pipeline, DiversityReport, PipelineSummary};
pub use report::{ecdf, emit_report, EcdfTable};
pub use trace::{group_by_pair, parse_trace_line, Hop, IpRoute, Pair, RouteSet, TraceRecord};

/// Mean Earth radius used by default, in kilometers.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

/// Default geographic-equality threshold, in kilometers.
pub const DEFAULT_THRESHOLD_KM: f64 = 50.0;

pub type Coordinate64 = Coordinate<f64>;
pub type Coordinate32 = Coordinate<f32>;
pub type GeoPath64 = GeoPath<f64>;
pub type GeoPath32 = GeoPath<f32>;
pub type Sphere64 = Sphere<f64>;
pub type Sphere32 = Sphere<f32>;
pub type Plane64 = Plane<f64>;
pub type PlanarPoint64 = PlanarPoint<f64>;
pub type DiversityConfig64 = DiversityConfig<f64>;
pub type GeoDb64 = GeoDb<f64>;
