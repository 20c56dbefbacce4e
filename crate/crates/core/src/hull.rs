//! 3D convex hull by quickhull.
//!
//! Faces are oriented counter-clockwise seen from outside. A point counts as
//! outside a face only when its signed distance exceeds `EPS_HULL`, which is
//! `1e-7` times the bounding-box diagonal.

use std::collections::HashMap;

use crate::error::{LesError, Result};
use crate::geometry::{signed_volume, Point3, PointCloud, Segment3};

/// Relative coplanarity tolerance (times the bounding-box diagonal).
pub const HULL_REL_TOLERANCE: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct HullMesh {
    /// Sorted indices of the hull vertices in the source cloud.
    pub vertex_indices: Vec<usize>,
    /// Outward-oriented triangles; each triple starts with its lowest index.
    pub faces: Vec<[usize; 3]>,
    /// Outward unit normals, one per face.
    pub face_normals: Vec<Point3>,
    offsets: Vec<f64>,
    eps: f64,
}

#[derive(Debug, Clone)]
struct Face {
    v: [usize; 3],
    nbr: [usize; 3],
    normal: Point3,
    offset: f64,
    outside: Vec<usize>,
    alive: bool,
    mark: u32,
}

impl Face {
    fn new(pts: &[Point3], v: [usize; 3]) -> Face {
        let (normal, offset) = plane(pts, v);
        Face {
            v,
            nbr: [usize::MAX; 3],
            normal,
            offset,
            outside: Vec::new(),
            alive: true,
            mark: 0,
        }
    }

    fn distance(&self, q: Point3) -> f64 {
        self.normal.dot(q) - self.offset
    }

    fn edge_index(&self, from: usize, to: usize) -> Option<usize> {
        (0..3).find(|&e| self.v[e] == from && self.v[(e + 1) % 3] == to)
    }
}

fn plane(pts: &[Point3], v: [usize; 3]) -> (Point3, f64) {
    let a = pts[v[0]];
    let n = (pts[v[1]] - a).cross(pts[v[2]] - a);
    let len = n.norm();
    let n = if len > 0.0 { n * (1.0 / len) } else { n };
    (n, n.dot(a))
}

fn line_distance(a: Point3, b: Point3, q: Point3) -> f64 {
    let ab = b - a;
    ab.cross(q - a).norm() / ab.norm()
}

/// Picks four affinely independent points spanning as much volume as
/// possible, or reports which degeneracy prevents it.
pub(crate) fn initial_simplex(pts: &[Point3], eps: f64) -> Result<[usize; 4]> {
    let mut extremes = [0usize; 6];
    for (i, p) in pts.iter().enumerate() {
        let c = [p.x, p.y, p.z];
        for d in 0..3 {
            let lo = pts[extremes[2 * d]];
            let hi = pts[extremes[2 * d + 1]];
            let (lo, hi) = ([lo.x, lo.y, lo.z][d], [hi.x, hi.y, hi.z][d]);
            if c[d] < lo {
                extremes[2 * d] = i;
            }
            if c[d] > hi {
                extremes[2 * d + 1] = i;
            }
        }
    }
    let mut best = (0.0, extremes[0], extremes[1]);
    for a in 0..6 {
        for b in (a + 1)..6 {
            let d = (pts[extremes[a]] - pts[extremes[b]]).norm();
            if d > best.0 {
                best = (
                    d,
                    extremes[a].min(extremes[b]),
                    extremes[a].max(extremes[b]),
                );
            }
        }
    }
    let (span, i0, i1) = best;
    if span <= eps {
        return Err(LesError::Degenerate("all points coincide".into()));
    }

    let mut i2 = usize::MAX;
    let mut far = eps;
    for (i, p) in pts.iter().enumerate() {
        let d = line_distance(pts[i0], pts[i1], *p);
        if d > far {
            far = d;
            i2 = i;
        }
    }
    if i2 == usize::MAX {
        return Err(LesError::Degenerate("all points are collinear".into()));
    }

    let (n, off) = plane(pts, [i0, i1, i2]);
    let mut i3 = usize::MAX;
    let mut far = eps;
    for (i, p) in pts.iter().enumerate() {
        let d = (n.dot(*p) - off).abs();
        if d > far {
            far = d;
            i3 = i;
        }
    }
    if i3 == usize::MAX {
        return Err(LesError::Degenerate("all points are coplanar".into()));
    }
    Ok([i0, i1, i2, i3])
}

/// Builds the convex hull of `cloud`.
///
/// Needs at least four points that are not coplanar within `EPS_HULL`.
/// The result is deterministic for a fixed input ordering.
pub fn build_hull(cloud: &PointCloud) -> Result<HullMesh> {
    cloud.require_len(4)?;
    let pts = cloud.points();
    let eps = HULL_REL_TOLERANCE * cloud.bounding_box().diagonal();
    let simplex = initial_simplex(pts, eps)?;

    let mut faces: Vec<Face> = Vec::new();
    let tris = [
        [simplex[0], simplex[1], simplex[2], simplex[3]],
        [simplex[0], simplex[1], simplex[3], simplex[2]],
        [simplex[0], simplex[2], simplex[3], simplex[1]],
        [simplex[1], simplex[2], simplex[3], simplex[0]],
    ];
    for [a, b, c, opposite] in tris {
        let mut f = Face::new(pts, [a, b, c]);
        if f.distance(pts[opposite]) > 0.0 {
            f = Face::new(pts, [a, c, b]);
        }
        faces.push(f);
    }
    for fi in 0..4 {
        for e in 0..3 {
            let (from, to) = (faces[fi].v[e], faces[fi].v[(e + 1) % 3]);
            let twin = (0..4)
                .find(|&g| g != fi && faces[g].edge_index(to, from).is_some())
                .expect("initial simplex is closed");
            faces[fi].nbr[e] = twin;
        }
    }

    for (i, p) in pts.iter().enumerate() {
        if simplex.contains(&i) {
            continue;
        }
        if let Some(f) = faces.iter_mut().find(|f| f.distance(*p) > eps) {
            f.outside.push(i);
        }
    }

    let mut stack: Vec<usize> = (0..4).filter(|&f| !faces[f].outside.is_empty()).collect();
    let mut epoch = 0u32;
    let mut visible = Vec::new();
    let mut horizon: Vec<(usize, usize, usize, usize)> = Vec::new();
    let mut orphans = Vec::new();
    let mut pending: HashMap<usize, (usize, usize)> = HashMap::new();

    while let Some(start) = stack.pop() {
        if !faces[start].alive || faces[start].outside.is_empty() {
            continue;
        }
        let apex = {
            let f = &faces[start];
            let mut best = (f64::NEG_INFINITY, usize::MAX);
            for &i in &f.outside {
                let d = f.distance(pts[i]);
                if d > best.0 || (d == best.0 && i < best.1) {
                    best = (d, i);
                }
            }
            best.1
        };
        let q = pts[apex];

        epoch += 1;
        visible.clear();
        horizon.clear();
        faces[start].mark = epoch;
        visible.push(start);
        let mut head = 0;
        while head < visible.len() {
            let f = visible[head];
            head += 1;
            for e in 0..3 {
                let g = faces[f].nbr[e];
                if faces[g].mark == epoch {
                    continue;
                }
                if faces[g].distance(q) > eps {
                    faces[g].mark = epoch;
                    visible.push(g);
                }
            }
        }
        for &f in &visible {
            for e in 0..3 {
                let g = faces[f].nbr[e];
                if faces[g].mark != epoch {
                    let (a, b) = (faces[f].v[e], faces[f].v[(e + 1) % 3]);
                    let back = faces[g]
                        .edge_index(b, a)
                        .expect("neighbouring faces share an edge");
                    horizon.push((a, b, g, back));
                }
            }
        }

        orphans.clear();
        for &f in &visible {
            faces[f].alive = false;
            let out = std::mem::take(&mut faces[f].outside);
            orphans.extend(out.into_iter().filter(|&i| i != apex));
        }

        pending.clear();
        let first_new = faces.len();
        for &(a, b, g, back) in &horizon {
            let id = faces.len();
            let mut f = Face::new(pts, [a, b, apex]);
            f.nbr[0] = g;
            faces[g].nbr[back] = id;
            // Edge 1 is b -> apex, edge 2 is apex -> a.
            for (key, edge) in [(b, 1usize), (a, 2usize)] {
                match pending.remove(&key) {
                    Some((other, other_edge)) => {
                        f.nbr[edge] = other;
                        faces[other].nbr[other_edge] = id;
                    }
                    None => {
                        pending.insert(key, (id, edge));
                    }
                }
            }
            faces.push(f);
        }
        if !pending.is_empty() {
            return Err(LesError::Degenerate(
                "hull horizon is not a simple cycle (near-coplanar input)".into(),
            ));
        }

        for &i in &orphans {
            let p = pts[i];
            if let Some(f) = faces[first_new..].iter_mut().find(|f| f.distance(p) > eps) {
                f.outside.push(i);
            }
        }
        stack.extend((first_new..faces.len()).filter(|&id| !faces[id].outside.is_empty()));
    }

    let mut tris: Vec<[usize; 3]> = faces
        .iter()
        .filter(|f| f.alive)
        .map(|f| {
            let v = f.v;
            let r = (0..3).min_by_key(|&i| v[i]).unwrap();
            [v[r], v[(r + 1) % 3], v[(r + 2) % 3]]
        })
        .collect();
    tris.sort_unstable();
    let (face_normals, offsets) = tris.iter().map(|&t| plane(pts, t)).unzip();
    let mut vertex_indices: Vec<usize> = tris.iter().flatten().copied().collect();
    vertex_indices.sort_unstable();
    vertex_indices.dedup();

    Ok(HullMesh {
        vertex_indices,
        faces: tris,
        face_normals,
        offsets,
        eps,
    })
}

/// Where a parameter on a clipped line falls relative to the hull.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Containment {
    Inside,
    Outside,
    /// Too close to a face plane to decide from the interval alone.
    Unsure,
}

/// Parameter intervals of a line `origin + t * dir` against the hull.
///
/// `sure` is where every face test passes with margin to spare, `maybe` is
/// where no face test fails by more than the rounding margin. Parameters in
/// between must be settled with [`HullMesh::contains_point`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineClip {
    sure: (f64, f64),
    maybe: (f64, f64),
}

impl LineClip {
    pub fn classify(&self, t: f64) -> Containment {
        if t >= self.sure.0 && t <= self.sure.1 {
            Containment::Inside
        } else if t < self.maybe.0 || t > self.maybe.1 {
            Containment::Outside
        } else {
            Containment::Unsure
        }
    }
}

impl HullMesh {
    /// The absolute tolerance `EPS_HULL` used for this hull.
    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn signed_distance(&self, face: usize, q: Point3) -> f64 {
        self.face_normals[face].dot(q) - self.offsets[face]
    }

    /// True iff `q` is on or inside every face plane (within `EPS_HULL`).
    pub fn contains_point(&self, q: Point3) -> bool {
        (0..self.faces.len()).all(|f| self.signed_distance(f, q) <= self.eps)
    }

    /// Enclosed volume, via the divergence theorem about the vertex centroid.
    pub fn volume(&self, cloud: &PointCloud) -> f64 {
        let mut r = Point3::ORIGIN;
        for &i in &self.vertex_indices {
            r = r + cloud.get(i);
        }
        r = r * (1.0 / self.vertex_indices.len() as f64);
        self.faces
            .iter()
            .map(|&[a, b, c]| signed_volume(r, cloud.get(a), cloud.get(b), cloud.get(c)))
            .sum()
    }

    /// Clips the line `origin + t * dir` against every face plane.
    ///
    /// The margins bound the difference between the linear model used here
    /// and a direct [`HullMesh::contains_point`] evaluation at a point
    /// computed as `origin + t * dir` (or given exactly, as for grid nodes).
    pub fn clip_line(&self, origin: Point3, dir: Point3) -> LineClip {
        let mut sure = (f64::NEG_INFINITY, f64::INFINITY);
        let mut maybe = (f64::NEG_INFINITY, f64::INFINITY);
        let scale = origin.x.abs() + origin.y.abs() + origin.z.abs();
        let dscale = dir.x.abs() + dir.y.abs() + dir.z.abs();
        for f in 0..self.faces.len() {
            let n = self.face_normals[f];
            let slope = n.dot(dir);
            let base = n.dot(origin) - self.offsets[f];
            let slack = 64.0 * f64::EPSILON * (self.offsets[f].abs() + scale + dscale + self.eps);
            if slope == 0.0 {
                if base > self.eps + slack {
                    maybe = (f64::INFINITY, f64::NEG_INFINITY);
                    sure = maybe;
                } else if base > self.eps - slack {
                    sure = (f64::INFINITY, f64::NEG_INFINITY);
                }
                continue;
            }
            let t = (self.eps - base) / slope;
            let w = slack / slope.abs() + 4.0 * f64::EPSILON * t.abs();
            if slope > 0.0 {
                sure.1 = sure.1.min(t - w);
                maybe.1 = maybe.1.min(t + w);
            } else {
                sure.0 = sure.0.max(t + w);
                maybe.0 = maybe.0.max(t - w);
            }
        }
        LineClip { sure, maybe }
    }

    /// `contains_point` for `segment.point_at(t)`, using a precomputed clip.
    pub fn contains_on_segment(&self, clip: &LineClip, segment: &Segment3, t: f64) -> bool {
        match clip.classify(t) {
            Containment::Inside => true,
            Containment::Outside => false,
            Containment::Unsure => self.contains_point(segment.point_at(t)),
        }
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use std::collections::HashMap;

    pub(crate) fn cube_with_centroid() -> PointCloud {
        let mut pts = Vec::new();
        for x in [0.0, 1.0] {
            for y in [0.0, 1.0] {
                for z in [0.0, 1.0] {
                    pts.push([x, y, z]);
                }
            }
        }
        pts.push([0.5, 0.5, 0.5]);
        PointCloud::from_arrays(&pts).unwrap()
    }

    fn regular_tetrahedron() -> PointCloud {
        let s = 1.0 / (2.0f64).sqrt();
        PointCloud::from_arrays(&[
            [1.0, 0.0, -s],
            [-1.0, 0.0, -s],
            [0.0, 1.0, s],
            [0.0, -1.0, s],
        ])
        .unwrap()
    }

    fn assert_closed(h: &HullMesh) {
        let mut edges: HashMap<(usize, usize), usize> = HashMap::new();
        for f in &h.faces {
            for e in 0..3 {
                *edges.entry((f[e], f[(e + 1) % 3])).or_default() += 1;
            }
        }
        for (&(a, b), &count) in &edges {
            assert_eq!(count, 1, "directed edge {a}->{b} used twice");
            assert_eq!(edges.get(&(b, a)), Some(&1), "edge {a}->{b} has no twin");
        }
    }

    #[test]
    fn cube_excludes_centroid() {
        let cloud = cube_with_centroid();
        let h = build_hull(&cloud).unwrap();
        assert_eq!(h.vertex_indices, (0..8).collect::<Vec<_>>());
        assert_eq!(h.faces.len(), 12);
        assert_closed(&h);
        assert!((h.volume(&cloud) - 1.0).abs() < 1e-12);
        for n in &h.face_normals {
            assert!((n.norm() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn tetrahedron_hull() {
        let cloud = regular_tetrahedron();
        let h = build_hull(&cloud).unwrap();
        assert_eq!(h.vertex_indices.len(), 4);
        assert_eq!(h.faces.len(), 4);
        assert_closed(&h);
        assert!(h.volume(&cloud) > 0.0);
    }

    #[test]
    fn cube_containment() {
        let h = build_hull(&cube_with_centroid()).unwrap();
        assert!(h.contains_point(Point3::new(0.5, 0.5, 0.5)));
        assert!(!h.contains_point(Point3::new(2.0, 0.0, 0.0)));
        assert!(h.contains_point(Point3::new(1.0, 1.0, 1.0)));
    }

    #[test]
    fn degenerate_inputs_are_named() {
        let three = PointCloud::from_arrays(&[[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]).unwrap();
        assert!(matches!(
            build_hull(&three),
            Err(LesError::TooFewPoints { needed: 4, got: 3 })
        ));

        let flat = PointCloud::from_arrays(&[
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [1.0, 1.0, 0.0],
            [0.3, 0.6, 0.0],
        ])
        .unwrap();
        match build_hull(&flat) {
            Err(LesError::Degenerate(msg)) => assert!(msg.contains("coplanar")),
            other => panic!("expected coplanar error, got {other:?}"),
        }

        let line = PointCloud::from_arrays(&[
            [0.0, 0.0, 0.0],
            [1.0, 1.0, 1.0],
            [2.0, 2.0, 2.0],
            [3.0, 3.0, 3.0],
        ])
        .unwrap();
        match build_hull(&line) {
            Err(LesError::Degenerate(msg)) => assert!(msg.contains("collinear")),
            other => panic!("expected collinear error, got {other:?}"),
        }

        let same = PointCloud::from_arrays(&[[1.0; 3]; 5]).unwrap();
        match build_hull(&same) {
            Err(LesError::Degenerate(msg)) => assert!(msg.contains("coincide")),
            other => panic!("expected coincident error, got {other:?}"),
        }
    }

    #[test]
    fn clip_agrees_with_direct_test() {
        let cloud = cube_with_centroid();
        let h = build_hull(&cloud).unwrap();
        let seg = Segment3::new(Point3::new(-0.5, 0.25, 0.5), Point3::new(1.5, 0.75, 0.5));
        let clip = h.clip_line(seg.a, seg.b - seg.a);
        for i in 0..=200 {
            let t = i as f64 / 200.0;
            assert_eq!(
                h.contains_on_segment(&clip, &seg, t),
                h.contains_point(seg.point_at(t)),
                "t = {t}"
            );
        }
    }
}
