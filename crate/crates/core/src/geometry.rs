//! Points, segments, spheres and the distance functions everything else is
//! built on.
//!
//! All arithmetic is plain `f64`. Squared distances are always accumulated
//! as `dx*dx + dy*dy + dz*dz` in that order so that the exhaustive scans here
//! and the accelerated queries in [`crate::spatial`] agree bit for bit.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{LesError, Result};

/// Absolute comparison tolerance in model units.
pub const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const ORIGIN: Point3 = Point3::new(0.0, 0.0, 0.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }

    /// Validated constructor; rejects NaN and infinite coordinates.
    pub fn try_new(x: f64, y: f64, z: f64) -> Result<Self> {
        let p = Point3::new(x, y, z);
        if p.is_finite() {
            Ok(p)
        } else {
            Err(LesError::InvalidInput(format!(
                "non-finite coordinate in ({x}, {y}, {z})"
            )))
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn dot(self, o: Point3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Point3) -> Point3 {
        Point3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm_squared(self) -> f64 {
        self.x * self.x + self.y * self.y + self.z * self.z
    }

    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn lerp(self, other: Point3, t: f64) -> Point3 {
        self + (other - self) * t
    }
}

impl From<[f64; 3]> for Point3 {
    fn from(a: [f64; 3]) -> Self {
        Point3::new(a[0], a[1], a[2])
    }
}

impl Add for Point3 {
    type Output = Point3;
    fn add(self, o: Point3) -> Point3 {
        Point3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Point3 {
    type Output = Point3;
    fn sub(self, o: Point3) -> Point3 {
        Point3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Point3 {
    type Output = Point3;
    fn mul(self, s: f64) -> Point3 {
        Point3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Point3 {
    type Output = Point3;
    fn neg(self) -> Point3 {
        Point3::new(-self.x, -self.y, -self.z)
    }
}

/// An ordered, non-empty set of finite points. Indices into the cloud stay
/// valid for its lifetime.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<Point3>,
}

impl PointCloud {
    pub fn new(points: Vec<Point3>) -> Result<Self> {
        if points.is_empty() {
            return Err(LesError::InvalidInput("point cloud is empty".into()));
        }
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(LesError::InvalidInput(format!(
                "point {i} has a non-finite coordinate"
            )));
        }
        Ok(PointCloud { points })
    }

    pub fn from_arrays(coords: &[[f64; 3]]) -> Result<Self> {
        PointCloud::new(coords.iter().copied().map(Point3::from).collect())
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn get(&self, i: usize) -> Point3 {
        self.points[i]
    }

    /// Errors unless the cloud has at least `needed` points.
    pub fn require_len(&self, needed: usize) -> Result<()> {
        if self.len() < needed {
            Err(LesError::TooFewPoints {
                needed,
                got: self.len(),
            })
        } else {
            Ok(())
        }
    }

    pub fn bounding_box(&self) -> Aabb {
        Aabb::from_points(&self.points)
    }

    pub fn centroid(&self) -> Point3 {
        let mut sum = Point3::ORIGIN;
        for p in &self.points {
            sum = sum + *p;
        }
        sum * (1.0 / self.len() as f64)
    }

    pub fn translated(&self, offset: Point3) -> PointCloud {
        PointCloud {
            points: self.points.iter().map(|p| *p + offset).collect(),
        }
    }
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Point3,
    pub max: Point3,
}

impl Aabb {
    pub fn from_points(points: &[Point3]) -> Aabb {
        let mut min = Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
        let mut max = Point3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in points {
            min = Point3::new(min.x.min(p.x), min.y.min(p.y), min.z.min(p.z));
            max = Point3::new(max.x.max(p.x), max.y.max(p.y), max.z.max(p.z));
        }
        Aabb { min, max }
    }

    pub fn extent(&self) -> Point3 {
        self.max - self.min
    }

    pub fn diagonal(&self) -> f64 {
        self.extent().norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment3 {
    pub a: Point3,
    pub b: Point3,
}

impl Segment3 {
    pub fn new(a: Point3, b: Point3) -> Self {
        Segment3 { a, b }
    }

    pub fn length(&self) -> f64 {
        distance_point_point(self.a, self.b)
    }

    pub fn is_degenerate(&self) -> bool {
        self.a == self.b
    }

    /// Parameter in [0, 1] of the point on the segment closest to `p`.
    pub fn closest_parameter(&self, p: Point3) -> f64 {
        let ab = self.b - self.a;
        let len2 = ab.norm_squared();
        if len2 == 0.0 {
            return 0.0;
        }
        ((p - self.a).dot(ab) / len2).clamp(0.0, 1.0)
    }

    pub fn point_at(&self, t: f64) -> Point3 {
        if t == 0.0 {
            self.a
        } else if t == 1.0 {
            self.b
        } else {
            self.a.lerp(self.b, t)
        }
    }

    pub fn closest_point(&self, p: Point3) -> Point3 {
        self.point_at(self.closest_parameter(p))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sphere {
    pub center: Point3,
    pub radius: f64,
}

impl Sphere {
    pub fn new(center: Point3, radius: f64) -> Self {
        debug_assert!(radius >= 0.0);
        Sphere { center, radius }
    }
}

#[inline]
pub(crate) fn squared_distance(p: Point3, q: Point3) -> f64 {
    let dx = p.x - q.x;
    let dy = p.y - q.y;
    let dz = p.z - q.z;
    dx * dx + dy * dy + dz * dz
}

/// Euclidean distance `‖p − q‖`.
pub fn distance_point_point(p: Point3, q: Point3) -> f64 {
    squared_distance(p, q).sqrt()
}

/// Distance from `p` to the closed segment `s`. A zero-length segment is
/// treated as a point.
pub fn distance_point_segment(p: Point3, s: &Segment3) -> f64 {
    if s.is_degenerate() {
        return distance_point_point(p, s.a);
    }
    distance_point_point(p, s.closest_point(p))
}

/// Nearest-point distance from `c` to the cloud, by exhaustive scan.
///
/// This is the largest radius a sphere centred at `c` can have without
/// enclosing a cloud point.
pub fn max_empty_radius(c: Point3, cloud: &PointCloud) -> f64 {
    let mut best = f64::INFINITY;
    for p in cloud.points() {
        let d2 = squared_distance(c, *p);
        if d2 < best {
            best = d2;
        }
    }
    best.sqrt()
}

/// `min_p ‖c − p‖ − r`. Non-negative exactly when the sphere `(c, r)` has no
/// cloud point in its interior.
pub fn phi(c: Point3, r: f64, cloud: &PointCloud) -> f64 {
    max_empty_radius(c, cloud) - r
}

/// Signed volume of the tetrahedron `(a, b, c, d)`; positive when `d` lies on
/// the side of `(b − a) × (c − a)`.
pub fn signed_volume(a: Point3, b: Point3, c: Point3, d: Point3) -> f64 {
    (b - a).cross(c - a).dot(d - a) / 6.0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cloud(pts: &[[f64; 3]]) -> PointCloud {
        PointCloud::from_arrays(pts).unwrap()
    }

    #[test]
    fn point_distance_examples() {
        assert_eq!(
            distance_point_point(Point3::ORIGIN, Point3::new(0.0, 3.0, 4.0)),
            5.0
        );
        let p = Point3::new(1.0, 1.0, 1.0);
        assert_eq!(distance_point_point(p, p), 0.0);
    }

    #[test]
    fn segment_distance_examples() {
        let s = Segment3::new(Point3::ORIGIN, Point3::new(1.0, 0.0, 0.0));
        assert_eq!(distance_point_segment(Point3::new(0.5, 1.0, 0.0), &s), 1.0);
        assert_eq!(distance_point_segment(Point3::new(2.0, 0.0, 0.0), &s), 1.0);
        let degenerate = Segment3::new(Point3::ORIGIN, Point3::ORIGIN);
        assert_eq!(
            distance_point_segment(Point3::new(0.0, 3.0, 4.0), &degenerate),
            5.0
        );
    }

    #[test]
    fn phi_on_unit_sphere_samples_is_zero() {
        let pts = cloud(&[
            [1.0, 0.0, 0.0],
            [-1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, -1.0, 0.0],
            [0.0, 0.0, 1.0],
            [0.0, 0.0, -1.0],
        ]);
        assert_eq!(phi(Point3::ORIGIN, 1.0, &pts), 0.0);
        assert_eq!(max_empty_radius(Point3::ORIGIN, &pts), 1.0);
    }

    #[test]
    fn phi_arithmetic() {
        let pts = cloud(&[[2.0, 0.0, 0.0], [0.0, 5.0, 0.0]]);
        assert_eq!(phi(Point3::ORIGIN, 0.5, &pts), 1.5);
    }

    #[test]
    fn radius_zero_at_cloud_point() {
        let pts = cloud(&[[0.3, 0.2, 0.1], [5.0, 5.0, 5.0]]);
        assert_eq!(max_empty_radius(Point3::new(0.3, 0.2, 0.1), &pts), 0.0);
    }

    #[test]
    fn empty_and_non_finite_clouds_rejected() {
        assert!(matches!(
            PointCloud::new(vec![]),
            Err(LesError::InvalidInput(_))
        ));
        assert!(PointCloud::new(vec![Point3::new(f64::NAN, 0.0, 0.0)]).is_err());
        assert!(Point3::try_new(0.0, f64::INFINITY, 0.0).is_err());
    }

    #[test]
    fn signed_volume_orientation() {
        let v = signed_volume(
            Point3::ORIGIN,
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(0.0, 0.0, 1.0),
        );
        assert!((v - 1.0 / 6.0).abs() < 1e-15);
    }
}
