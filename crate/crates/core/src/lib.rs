//! Largest empty sphere search in hollow 3D point clouds.
//!
//! The pipeline builds the convex hull, ranks hull-vertex segments by their
//! mean distance to the remaining points, seeds each of the best segments
//! from the nearest Voronoi vertex and sweeps empty spheres along it. The
//! widest sphere found is the estimate; [`oracle`] provides exact and grid
//! references to check it against.

pub mod delaunay;
pub mod error;
pub mod generators;
pub mod geometry;
pub mod hull;
pub mod io;
pub mod oracle;
pub mod scoring;
pub mod search;
pub mod spatial;

pub use error::{LesError, Result};
pub use geometry::{Point3, PointCloud, Segment3, Sphere};
