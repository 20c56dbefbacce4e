//! The sweep search: seed a point on each selected segment from the nearest
//! Voronoi vertex, walk centres along the segment taking the nearest-point
//! distance as radius, and grow further segments between the contact points
//! found so far.

use rustc_hash::FxHashMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::delaunay::{build_delaunay, voronoi_vertices, TetMesh, VoronoiVertex};
use crate::error::{LesError, Result};
use crate::geometry::{Point3, PointCloud, Segment3, Sphere};
use crate::hull::{build_hull, HullMesh};
use crate::scoring::{score_all, MdsDirection, PairSamplingPolicy};
use crate::spatial::KdTree;

pub const DEFAULT_K: usize = 64;
pub const DEFAULT_BEST_SEGMENTS: usize = 16;
pub const DEFAULT_MAX_ORDER: u32 = 3;
/// Segments swept per order beyond the first.
pub const MAX_SEGMENTS_PER_ORDER: usize = 2000;
/// Points within `r * (1 + CONTACT_REL_TOL)` of a centre count as contacts.
pub const CONTACT_REL_TOL: f64 = 1e-7;
/// Candidates whose centres are closer than this are merged.
pub const DEDUP_DISTANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchParams {
    /// Sweep positions per segment; `None` uses `min(64, n)`.
    pub k: Option<usize>,
    pub best_segment_count: usize,
    pub max_order: u32,
    pub mds_direction: MdsDirection,
    /// `None` picks all pairs or a 1% sample by hull size.
    pub pairs: Option<PairSamplingPolicy>,
    pub seed: u64,
}

impl Default for SearchParams {
    fn default() -> Self {
        SearchParams {
            k: None,
            best_segment_count: DEFAULT_BEST_SEGMENTS,
            max_order: DEFAULT_MAX_ORDER,
            mds_direction: MdsDirection::Min,
            pairs: None,
            seed: 0,
        }
    }
}

impl SearchParams {
    /// Step count for a cloud of `n` points, checked against `3 <= k <= n`.
    pub fn resolve_k(&self, n: usize) -> Result<usize> {
        let k = self.k.unwrap_or(DEFAULT_K.min(n));
        if k < 3 || k > n {
            return Err(LesError::InvalidInput(format!(
                "k must satisfy 3 <= k <= n = {n}, got {k}"
            )));
        }
        Ok(k)
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        self.resolve_k(n)?;
        if self.best_segment_count == 0 {
            return Err(LesError::InvalidInput(
                "best segment count must be at least 1".into(),
            ));
        }
        if self.max_order == 0 {
            return Err(LesError::InvalidInput(
                "max order must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSphere {
    pub sphere: Sphere,
    /// Cloud points on the sphere boundary, ascending.
    pub contact_indices: Vec<usize>,
    /// Cloud indices of the segment endpoints.
    pub source_segment: (usize, usize),
    pub order: u32,
    /// Sweep position: 0 is the seed, `1..k` the uniform steps, `k` the
    /// unprojected Voronoi anchor.
    pub position: usize,
}

impl CandidateSphere {
    fn rank_key(&self) -> (u32, (usize, usize), usize) {
        (self.order, self.source_segment, self.position)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SearchStats {
    pub segments_scored: usize,
    pub sweep_positions: usize,
    pub orders_run: u32,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LesResult {
    pub les: CandidateSphere,
    pub candidates: Vec<CandidateSphere>,
    /// Union of all contact indices, ascending.
    pub mie_points: Vec<usize>,
    pub orders_run: u32,
    pub stats: SearchStats,
    /// Parameters as run, with `k` and the pair policy resolved.
    pub params: SearchParams,
}

/// In-hull Voronoi vertices indexed for segment queries.
struct VoronoiIndex<'v> {
    vertices: &'v [VoronoiVertex],
    tree: KdTree<'v>,
}

impl<'v> VoronoiIndex<'v> {
    fn new(vertices: &'v [VoronoiVertex], centers: &'v [Point3]) -> Self {
        VoronoiIndex {
            vertices,
            tree: KdTree::from_points(centers),
        }
    }

    /// Vertex closest to the segment; ties go to the lower tetrahedron index.
    fn nearest(&self, segment: &Segment3) -> Option<&'v VoronoiVertex> {
        self.tree
            .nearest_to_segment(segment.a, segment.b)
            .map(|(i, _)| &self.vertices[i])
    }

    fn seed(&self, segment: &Segment3) -> Point3 {
        match self.nearest(segment) {
            Some(v) => segment.closest_point(v.center),
            None => segment.point_at(0.5),
        }
    }
}

/// Projection onto `segment` of the nearest in-hull Voronoi vertex, or the
/// midpoint when there is none.
pub fn dv_seed_point(
    segment: &Segment3,
    tets: &TetMesh,
    hull: &HullMesh,
    _cloud: &PointCloud,
) -> Point3 {
    let vertices = voronoi_vertices(tets, hull);
    let centers: Vec<Point3> = vertices.iter().map(|v| v.center).collect();
    VoronoiIndex::new(&vertices, &centers).seed(segment)
}

struct Context<'a> {
    cloud: &'a PointCloud,
    hull: &'a HullMesh,
    tree: KdTree<'a>,
    /// Bound on rounding in interpolated positions and plane evaluations.
    margin: f64,
}

impl<'a> Context<'a> {
    fn new(cloud: &'a PointCloud, hull: &'a HullMesh) -> Self {
        let reach = cloud
            .points()
            .iter()
            .flat_map(|p| p.to_array())
            .fold(0.0f64, |m, v| m.max(v.abs()));
        Context {
            cloud,
            hull,
            tree: KdTree::new(cloud),
            margin: 512.0 * f64::EPSILON * reach,
        }
    }
}

impl Context<'_> {
    fn candidate_at(
        &self,
        center: Point3,
        source: (usize, usize),
        order: u32,
        position: usize,
    ) -> CandidateSphere {
        self.candidate_from(center, source, order, position, None, &mut Vec::new())
    }

    fn candidate_from(
        &self,
        center: Point3,
        source: (usize, usize),
        order: u32,
        position: usize,
        hint: Option<usize>,
        scratch: &mut Vec<(usize, f64)>,
    ) -> CandidateSphere {
        let (d2, contacts) = self
            .tree
            .nearest_with_shell_in(center, 1.0 + CONTACT_REL_TOL, hint, scratch)
            .expect("cloud is non-empty");
        CandidateSphere {
            sphere: Sphere::new(center, d2.sqrt()),
            contact_indices: contacts,
            source_segment: source,
            order,
            position,
        }
    }

    /// Whether every point of a segment starting or ending at `q` that is
    /// itself deep inside passes [`HullMesh::contains_point`], whatever the
    /// rounding of the interpolated coordinates.
    fn deep_inside(&self, q: Point3) -> bool {
        let eps = self.hull.eps() - self.margin;
        (0..self.hull.faces.len()).all(|f| self.hull.signed_distance(f, q) <= eps)
    }

    /// Returns the candidates and the number of positions visited. When
    /// `interior` is set both endpoints are known to be deep inside the hull
    /// and containment checks are skipped.
    fn sweep(
        &self,
        segment: &Segment3,
        seed: Point3,
        source: (usize, usize),
        k: usize,
        order: u32,
        interior: bool,
    ) -> (Vec<CandidateSphere>, usize) {
        let mut out: Vec<CandidateSphere> = Vec::new();
        // Sweep positions further apart than this cannot be merged with each
        // other, only with the seed.
        let spread = segment.length() / k as f64 > 4.0 * DEDUP_DISTANCE + self.margin;
        let mut push = |c: CandidateSphere| {
            let near =
                |o: &CandidateSphere| (o.sphere.center - c.sphere.center).norm() <= DEDUP_DISTANCE;
            let dup = if spread {
                out.first().is_some_and(|o| o.position == 0 && near(o))
            } else {
                out.iter().any(near)
            };
            if !dup {
                out.push(c);
            }
        };
        let mut hint = None;
        let mut scratch = Vec::new();
        if interior || self.hull.contains_point(seed) {
            let c = self.candidate_at(seed, source, order, 0);
            hint = c.contact_indices.first().copied();
            push(c);
        }
        let clip = (!interior).then(|| self.hull.clip_line(segment.a, segment.b - segment.a));
        for i in 1..k {
            let t = i as f64 / k as f64;
            let inside = match &clip {
                Some(clip) => self.hull.contains_on_segment(clip, segment, t),
                None => true,
            };
            if inside {
                let c =
                    self.candidate_from(segment.point_at(t), source, order, i, hint, &mut scratch);
                hint = c.contact_indices.first().copied();
                push(c);
            }
        }
        (out, k)
    }
}

/// Sweeps `k` centres along `segment`: `seed` first, then the interior
/// parameters `i / k` for `i = 1..k`. Centres outside the hull are skipped
/// and centres within [`DEDUP_DISTANCE`] of an earlier one are dropped.
///
/// `source_segment` on the returned candidates is `(0, 0)`; [`run_les`] fills
/// in the endpoint indices.
pub fn sweep_segment(
    segment: &Segment3,
    seed: Point3,
    cloud: &PointCloud,
    hull: &HullMesh,
    k: usize,
    order: u32,
) -> Result<Vec<CandidateSphere>> {
    if k < 3 {
        return Err(LesError::InvalidInput(format!(
            "k must be at least 3, got {k}"
        )));
    }
    let ctx = Context::new(cloud, hull);
    Ok(ctx.sweep(segment, seed, (0, 0), k, order, false).0)
}

/// Spatial hash over accepted candidate centres, with cells twice the merge
/// distance so each lookup touches at most eight cells. Centres sharing a
/// cell are chained through `slots`.
struct CenterIndex {
    heads: FxHashMap<[i64; 3], usize>,
    slots: Vec<(Point3, usize)>,
}

impl CenterIndex {
    const CELL: f64 = 2.0 * DEDUP_DISTANCE;

    fn new() -> Self {
        CenterIndex {
            heads: FxHashMap::default(),
            slots: Vec::new(),
        }
    }

    /// Inserts `p` unless an existing centre lies within [`DEDUP_DISTANCE`].
    fn insert(&mut self, p: Point3) -> bool {
        let mut home = [0i64; 3];
        let mut side = [0i64; 3];
        for (d, v) in p.to_array().into_iter().enumerate() {
            let s = v / Self::CELL;
            let f = s.floor();
            home[d] = f as i64;
            side[d] = if s - f < 0.5 { -1 } else { 1 };
        }
        for mask in 0..8 {
            let mut cell = home;
            for d in 0..3 {
                if mask & (1 << d) != 0 {
                    cell[d] = cell[d].saturating_add(side[d]);
                }
            }
            let mut at = self.heads.get(&cell).copied().unwrap_or(usize::MAX);
            while at != usize::MAX {
                let (q, next) = self.slots[at];
                if (q - p).norm() <= DEDUP_DISTANCE {
                    return false;
                }
                at = next;
            }
        }
        let id = self.slots.len();
        let next = self.heads.insert(home, id).unwrap_or(usize::MAX);
        self.slots.push((p, next));
        true
    }
}

/// Runs the full search on `cloud`.
pub fn run_les(cloud: &PointCloud, params: &SearchParams) -> Result<LesResult> {
    let started = Instant::now();
    cloud.require_len(4)?;
    params.validate(cloud.len())?;
    let k = params.resolve_k(cloud.len())?;

    let hull = build_hull(cloud)?;
    let tets = build_delaunay(cloud)?;
    let vertices = voronoi_vertices(&tets, &hull);
    let centers: Vec<Point3> = vertices.iter().map(|v| v.center).collect();
    let voronoi = VoronoiIndex::new(&vertices, &centers);
    let policy = params
        .pairs
        .unwrap_or_else(|| PairSamplingPolicy::automatic(hull.vertex_indices.len(), params.seed));
    let (best, segments_scored) = score_all(
        cloud,
        &hull,
        &policy,
        params.best_segment_count,
        params.mds_direction,
    )?;

    let ctx = Context::new(cloud, &hull);
    // Per-point cache for `Context::deep_inside`, filled as endpoints appear.
    let mut deep: Vec<Option<bool>> = vec![None; cloud.len()];
    let mut stats = SearchStats {
        segments_scored,
        ..SearchStats::default()
    };
    let mut candidates: Vec<CandidateSphere> = Vec::new();
    let mut centers = CenterIndex::new();
    let mut in_mie = vec![false; cloud.len()];
    let mut segments: Vec<(usize, usize)> = best.iter().map(|s| (s.i, s.j)).collect();

    let mut order = 1;
    loop {
        for &(i, j) in &segments {
            for p in [i, j] {
                if deep[p].is_none() {
                    deep[p] = Some(ctx.deep_inside(cloud.get(p)));
                }
            }
        }
        let swept: Vec<(Vec<CandidateSphere>, usize)> = segments
            .par_iter()
            .map(|&(i, j)| {
                let segment = Segment3::new(ctx.cloud.get(i), ctx.cloud.get(j));
                let anchor = voronoi.nearest(&segment);
                let seed = match anchor {
                    Some(v) => segment.closest_point(v.center),
                    None => segment.point_at(0.5),
                };
                let interior = deep[i] == Some(true) && deep[j] == Some(true);
                let (mut found, mut visited) =
                    ctx.sweep(&segment, seed, (i, j), k, order, interior);
                if let Some(v) = anchor {
                    found.push(ctx.candidate_at(v.center, (i, j), order, k));
                    visited += 1;
                }
                (found, visited)
            })
            .collect();

        let mut fresh: Vec<usize> = Vec::new();
        for (found, visited) in swept {
            stats.sweep_positions += visited;
            for c in found {
                if !centers.insert(c.sphere.center) {
                    continue;
                }
                for &p in &c.contact_indices {
                    if !in_mie[p] {
                        in_mie[p] = true;
                        fresh.push(p);
                    }
                }
                candidates.push(c);
            }
        }
        stats.orders_run = order;
        if fresh.is_empty() || order >= params.max_order {
            break;
        }
        fresh.sort_unstable();
        segments = Vec::new();
        'pairs: for (a, &i) in fresh.iter().enumerate() {
            for &j in &fresh[a + 1..] {
                if segments.len() == MAX_SEGMENTS_PER_ORDER {
                    break 'pairs;
                }
                segments.push((i, j));
            }
        }
        if segments.is_empty() {
            break;
        }
        order += 1;
    }

    let les = candidates
        .iter()
        .reduce(|a, b| {
            if b.sphere.radius > a.sphere.radius
                || (b.sphere.radius == a.sphere.radius && b.rank_key() < a.rank_key())
            {
                b
            } else {
                a
            }
        })
        .cloned()
        .ok_or_else(|| {
            LesError::Degenerate("no sweep position fell inside the convex hull".into())
        })?;
    stats.wall_ms = started.elapsed().as_secs_f64() * 1e3;
    Ok(LesResult {
        les,
        candidates,
        mie_points: (0..cloud.len()).filter(|&i| in_mie[i]).collect(),
        orders_run: stats.orders_run,
        stats,
        params: SearchParams {
            k: Some(k),
            pairs: Some(policy),
            ..*params
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::phi;

    fn regular_tetrahedron() -> PointCloud {
        PointCloud::from_arrays(&[
            [1.0, 1.0, 1.0],
            [1.0, -1.0, -1.0],
            [-1.0, 1.0, -1.0],
            [-1.0, -1.0, 1.0],
        ])
        .unwrap()
    }

    #[test]
    fn tetrahedron_finds_circumsphere() {
        let cloud = regular_tetrahedron();
        let res = run_les(
            &cloud,
            &SearchParams {
                k: Some(4),
                ..SearchParams::default()
            },
        )
        .unwrap();
        // Edge length 2√2, circumradius √3 at the origin.
        assert!(res.les.sphere.center.norm() < 1e-6);
        assert!((res.les.sphere.radius - 3f64.sqrt()).abs() < 1e-6);
        assert_eq!(res.les.contact_indices, vec![0, 1, 2, 3]);
    }

    #[test]
    fn seed_on_segment_is_unchanged() {
        let cloud = regular_tetrahedron();
        let hull = build_hull(&cloud).unwrap();
        let tets = build_delaunay(&cloud).unwrap();
        let through = Segment3::new(Point3::new(-1.0, 0.0, 0.0), Point3::new(1.0, 0.0, 0.0));
        let seed = dv_seed_point(&through, &tets, &hull, &cloud);
        assert!(seed.norm() < 1e-12);
    }

    #[test]
    fn seed_clamps_to_nearest_endpoint() {
        let cloud = regular_tetrahedron();
        let hull = build_hull(&cloud).unwrap();
        let tets = build_delaunay(&cloud).unwrap();
        let side = Segment3::new(Point3::new(3.0, 0.0, 0.0), Point3::new(5.0, 0.0, 0.0));
        assert_eq!(dv_seed_point(&side, &tets, &hull, &cloud), side.a);
    }

    #[test]
    fn degenerate_sweep_collapses() {
        let cloud = regular_tetrahedron();
        let hull = build_hull(&cloud).unwrap();
        let p = Point3::new(0.1, 0.0, 0.0);
        let seg = Segment3::new(p, p);
        let found = sweep_segment(&seg, p, &cloud, &hull, 3, 1).unwrap();
        assert_eq!(found.len(), 1);
    }

    #[test]
    fn center_index_merges_across_cell_boundaries() {
        let mut idx = CenterIndex::new();
        let cell = CenterIndex::CELL;
        let p = Point3::new(3.0 * cell - 0.2 * DEDUP_DISTANCE, 0.0, 1.0);
        assert!(idx.insert(p));
        assert!(!idx.insert(p + Point3::new(0.9 * DEDUP_DISTANCE, 0.0, 0.0)));
        assert!(!idx.insert(p - Point3::new(0.0, 0.5 * DEDUP_DISTANCE, 0.5 * DEDUP_DISTANCE)));
        assert!(idx.insert(p + Point3::new(1.5 * DEDUP_DISTANCE, 0.0, 0.0)));
        assert!(idx.insert(p + Point3::new(0.0, 0.0, 1.0)));
    }

    #[test]
    fn too_small_k_is_rejected() {
        let cloud = regular_tetrahedron();
        let params = SearchParams {
            k: Some(2),
            ..SearchParams::default()
        };
        assert!(matches!(
            run_les(&cloud, &params),
            Err(LesError::InvalidInput(_))
        ));
        let params = SearchParams {
            k: Some(5),
            ..SearchParams::default()
        };
        assert!(matches!(
            run_les(&cloud, &params),
            Err(LesError::InvalidInput(_))
        ));
    }

    #[test]
    fn interior_sweep_matches_clipped_sweep() {
        let cloud = crate::generators::gen_two_spheres(&crate::generators::TwoSphereSpec {
            n_per_sphere: 150,
            ..Default::default()
        })
        .unwrap();
        let hull = build_hull(&cloud).unwrap();
        let ctx = Context::new(&cloud, &hull);
        let mut checked = 0;
        for (i, j) in [(0, 1), (3, 250), (17, 160), (40, 299), (100, 101)] {
            assert!(ctx.deep_inside(cloud.get(i)) && ctx.deep_inside(cloud.get(j)));
            let segment = Segment3::new(cloud.get(i), cloud.get(j));
            let seed = segment.point_at(0.3);
            let fast = ctx.sweep(&segment, seed, (i, j), 24, 1, true);
            let slow = ctx.sweep(&segment, seed, (i, j), 24, 1, false);
            assert_eq!(fast, slow);
            checked += fast.0.len();
        }
        assert!(checked > 0);
    }

    #[test]
    fn small_shell_result_is_valid_and_deterministic() {
        let cloud = crate::generators::gen_shell(&crate::generators::ShellSpec {
            n: 300,
            ..Default::default()
        })
        .unwrap();
        let params = SearchParams::default();
        let a = run_les(&cloud, &params).unwrap();
        let b = run_les(&cloud, &params).unwrap();
        assert_eq!(a.les, b.les);
        assert_eq!(a.candidates, b.candidates);
        let s = a.les.sphere;
        assert!(phi(s.center, s.radius, &cloud) >= -1e-9);
        let hull = build_hull(&cloud).unwrap();
        assert!(hull.contains_point(s.center));
        assert!(a.candidates.iter().all(|c| c.sphere.radius <= s.radius));
        assert!(a.orders_run <= params.max_order);
    }
}
