//! Reference solvers: the best in-hull Voronoi vertex and a brute-force grid.

use rayon::prelude::*;

use crate::delaunay::{build_delaunay, voronoi_vertices};
use crate::error::{LesError, Result};
use crate::geometry::{Point3, PointCloud, Sphere};
use crate::hull::{build_hull, Containment};
use crate::spatial::KdTree;

pub const MIN_GRID_RESOLUTION: usize = 8;

/// Largest empty sphere whose centre is an in-hull Voronoi vertex.
///
/// Each vertex is scored by its actual nearest-point distance rather than the
/// stored circumradius, so near-degenerate tetrahedra cannot overstate it.
/// Ties go to the lower tetrahedron index.
pub fn exact_les(cloud: &PointCloud) -> Result<Sphere> {
    cloud.require_len(4)?;
    let hull = build_hull(cloud)?;
    let tets = build_delaunay(cloud)?;
    let tree = KdTree::new(cloud);
    let mut best: Option<Sphere> = None;
    for v in voronoi_vertices(&tets, &hull) {
        let r = tree.max_empty_radius(v.center);
        if best.is_none_or(|b| r > b.radius) {
            best = Some(Sphere::new(v.center, r));
        }
    }
    best.ok_or_else(|| LesError::Degenerate("no Voronoi vertex lies inside the convex hull".into()))
}

/// Grid origin and per-axis spacing for [`grid_les`]. Flat axes are widened
/// to unit length around the centroid.
pub fn grid_frame(cloud: &PointCloud, resolution: usize) -> (Point3, Point3) {
    let bb = cloud.bounding_box();
    let c = cloud.centroid();
    let mut min = bb.min.to_array();
    let mut max = bb.max.to_array();
    let centroid = c.to_array();
    for d in 0..3 {
        if max[d] - min[d] <= 0.0 {
            min[d] = centroid[d] - 0.5;
            max[d] = centroid[d] + 0.5;
        }
    }
    let r = resolution as f64;
    let step = Point3::new(
        (max[0] - min[0]) / r,
        (max[1] - min[1]) / r,
        (max[2] - min[2]) / r,
    );
    (Point3::from(min), step)
}

/// Best node of a `resolution³` grid over the bounding box.
///
/// Node `(i, j, l)` sits at `min + (i, j, l) * extent / resolution`, so the
/// grid at `2 * resolution` contains every node of this one exactly. Nodes
/// outside the hull are skipped; if the hull cannot be built every node is
/// used. Ties go to the first node in `(i, j, l)` order.
pub fn grid_les(cloud: &PointCloud, resolution: usize) -> Result<Sphere> {
    if resolution < MIN_GRID_RESOLUTION {
        return Err(LesError::InvalidInput(format!(
            "grid resolution must be at least {MIN_GRID_RESOLUTION}, got {resolution}"
        )));
    }
    let hull = build_hull(cloud).ok();
    let tree = KdTree::new(cloud);
    let (min, step) = grid_frame(cloud, resolution);
    let columns: Vec<Option<(f64, Point3)>> = (0..resolution * resolution)
        .into_par_iter()
        .map(|col| {
            let x = min.x + (col / resolution) as f64 * step.x;
            let y = min.y + (col % resolution) as f64 * step.y;
            let origin = Point3::new(x, y, min.z);
            let clip = hull
                .as_ref()
                .map(|h| h.clip_line(origin, Point3::new(0.0, 0.0, 1.0)));
            let mut best: Option<(f64, Point3)> = None;
            for l in 0..resolution {
                let t = l as f64 * step.z;
                let node = Point3::new(x, y, min.z + t);
                let inside = match (&hull, &clip) {
                    (Some(h), Some(c)) => match c.classify(t) {
                        Containment::Inside => true,
                        Containment::Outside => false,
                        Containment::Unsure => h.contains_point(node),
                    },
                    _ => true,
                };
                if !inside {
                    continue;
                }
                let r = tree.max_empty_radius(node);
                if best.is_none_or(|(br, _)| r > br) {
                    best = Some((r, node));
                }
            }
            best
        })
        .collect();
    let mut best: Option<(f64, Point3)> = None;
    for (r, node) in columns.into_iter().flatten() {
        if best.is_none_or(|(br, _)| r > br) {
            best = Some((r, node));
        }
    }
    best.map(|(r, c)| Sphere::new(c, r))
        .ok_or_else(|| LesError::Degenerate("no grid node lies inside the convex hull".into()))
}
