//! Static k-d tree for nearest-neighbour and fixed-radius queries.
//!
//! Distances are computed with the same expression as the exhaustive scan in
//! [`crate::geometry::max_empty_radius`], and pruning only discards subtrees
//! that are strictly farther than the current best, so results are
//! bit-identical to brute force (ties resolve to the lowest point index).

use crate::geometry::{squared_distance, Point3, PointCloud};

const LEAF_SIZE: usize = 32;

#[derive(Debug, Clone)]
enum Node {
    Leaf { lo: usize, hi: usize },
    Split { left: usize, right: usize },
}

#[derive(Debug, Clone)]
pub struct KdTree<'a> {
    points: &'a [Point3],
    order: Vec<usize>,
    /// `points` permuted into tree order, so leaves scan contiguous memory.
    packed: Vec<Point3>,
    /// Coordinates of `packed`, one array per axis.
    xs: Vec<f64>,
    ys: Vec<f64>,
    zs: Vec<f64>,
    nodes: Vec<Node>,
    /// Bounding box of each node's points.
    boxes: Vec<(Point3, Point3)>,
    /// Rounding margin for the lower bound in segment queries.
    slack: f64,
}

fn coord(p: &Point3, dim: usize) -> f64 {
    match dim {
        0 => p.x,
        1 => p.y,
        _ => p.z,
    }
}

impl<'a> KdTree<'a> {
    pub fn new(cloud: &'a PointCloud) -> Self {
        Self::from_points(cloud.points())
    }

    pub fn from_points(points: &'a [Point3]) -> Self {
        let mut tree = KdTree {
            points,
            order: (0..points.len()).collect(),
            packed: Vec::new(),
            xs: Vec::new(),
            ys: Vec::new(),
            zs: Vec::new(),
            nodes: Vec::new(),
            boxes: Vec::new(),
            slack: 0.0,
        };
        if !points.is_empty() {
            tree.build(0, points.len());
            let (lo, hi) = tree.boxes[0];
            let scale = [lo.x, lo.y, lo.z, hi.x, hi.y, hi.z]
                .into_iter()
                .fold(0.0f64, |m, v| m.max(v.abs()));
            tree.slack = 1e-9 * scale;
        }
        tree.packed = tree.order.iter().map(|&i| points[i]).collect();
        tree.xs = tree.packed.iter().map(|p| p.x).collect();
        tree.ys = tree.packed.iter().map(|p| p.y).collect();
        tree.zs = tree.packed.iter().map(|p| p.z).collect();
        tree
    }

    /// Smallest squared distance from `q` to the points of `lo..hi`, with
    /// the same rounding as [`squared_distance`].
    fn leaf_min_d2(&self, lo: usize, hi: usize, q: Point3) -> f64 {
        let (xs, ys, zs) = (&self.xs[lo..hi], &self.ys[lo..hi], &self.zs[lo..hi]);
        let d2 = |k: usize| {
            let dx = q.x - xs[k];
            let dy = q.y - ys[k];
            let dz = q.z - zs[k];
            dx * dx + dy * dy + dz * dz
        };
        let n = xs.len();
        let mut lanes = [f64::INFINITY; 4];
        let mut k = 0;
        while k + 4 <= n {
            for (l, lane) in lanes.iter_mut().enumerate() {
                let d = d2(k + l);
                *lane = if d < *lane { d } else { *lane };
            }
            k += 4;
        }
        let mut m = lanes[0].min(lanes[1]).min(lanes[2].min(lanes[3]));
        for j in k..n {
            m = m.min(d2(j));
        }
        m
    }

    fn build(&mut self, lo: usize, hi: usize) -> usize {
        let id = self.nodes.len();
        let mut min = [f64::INFINITY; 3];
        let mut max = [f64::NEG_INFINITY; 3];
        for &i in &self.order[lo..hi] {
            for d in 0..3 {
                let c = coord(&self.points[i], d);
                min[d] = min[d].min(c);
                max[d] = max[d].max(c);
            }
        }
        self.boxes.push((Point3::from(min), Point3::from(max)));
        if hi - lo <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { lo, hi });
            return id;
        }
        let dim = (0..3)
            .max_by(|&a, &b| (max[a] - min[a]).total_cmp(&(max[b] - min[b])))
            .unwrap_or(0);
        let mid = lo + (hi - lo) / 2;
        let points = self.points;
        self.order[lo..hi].select_nth_unstable_by(mid - lo, |&a, &b| {
            coord(&points[a], dim)
                .total_cmp(&coord(&points[b], dim))
                .then(a.cmp(&b))
        });
        self.nodes.push(Node::Leaf { lo, hi });
        let left = self.build(lo, mid);
        let right = self.build(mid, hi);
        self.nodes[id] = Node::Split { left, right };
        id
    }

    /// Squared distance from `q` to the bounding box of `node`. Never exceeds
    /// `squared_distance(q, p)` for a point `p` in the node, also after
    /// rounding, so pruning on it is exact.
    fn box_d2(&self, node: usize, q: Point3) -> f64 {
        let (lo, hi) = self.boxes[node];
        let gap = |v: f64, l: f64, h: f64| {
            if v < l {
                l - v
            } else if v > h {
                v - h
            } else {
                0.0
            }
        };
        let dx = gap(q.x, lo.x, hi.x);
        let dy = gap(q.y, lo.y, hi.y);
        let dz = gap(q.z, lo.z, hi.z);
        dx * dx + dy * dy + dz * dz
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Index and squared distance of the nearest point (lowest index on ties).
    pub fn nearest(&self, q: Point3) -> Option<(usize, f64)> {
        if self.points.is_empty() {
            return None;
        }
        let mut best = (usize::MAX, f64::INFINITY);
        self.nearest_in(0, q, &mut best);
        Some(best)
    }

    fn nearest_in(&self, node: usize, q: Point3, best: &mut (usize, f64)) {
        match self.nodes[node] {
            Node::Leaf { lo, hi } => {
                if self.leaf_min_d2(lo, hi, q) > best.1 {
                    return;
                }
                for (&i, &p) in self.order[lo..hi].iter().zip(&self.packed[lo..hi]) {
                    let d2 = squared_distance(q, p);
                    if d2 < best.1 || (d2 == best.1 && i < best.0) {
                        *best = (i, d2);
                    }
                }
            }
            Node::Split { left, right, .. } => {
                let dl = self.box_d2(left, q);
                let dr = self.box_d2(right, q);
                let (near, dn, far, df) = if dl <= dr {
                    (left, dl, right, dr)
                } else {
                    (right, dr, left, dl)
                };
                // Equal distances must still be visited for the index tie-break.
                if dn <= best.1 {
                    self.nearest_in(near, q, best);
                }
                if df <= best.1 {
                    self.nearest_in(far, q, best);
                }
            }
        }
    }

    /// Nearest squared distance `d2` together with every index whose squared
    /// distance is at most `(sqrt(d2) * scale)²`, ascending. Matches
    /// [`KdTree::nearest`] followed by [`KdTree::within_squared`] exactly.
    pub fn nearest_with_shell(&self, q: Point3, scale: f64) -> Option<(f64, Vec<usize>)> {
        self.nearest_with_shell_from(q, scale, None)
    }

    /// [`KdTree::nearest_with_shell`] starting from the distance to `hint`,
    /// typically the answer for a nearby query. The result does not depend on
    /// the hint.
    pub fn nearest_with_shell_from(
        &self,
        q: Point3,
        scale: f64,
        hint: Option<usize>,
    ) -> Option<(f64, Vec<usize>)> {
        self.nearest_with_shell_in(q, scale, hint, &mut Vec::new())
    }

    /// As [`KdTree::nearest_with_shell_from`], reusing `scratch` between calls.
    pub(crate) fn nearest_with_shell_in(
        &self,
        q: Point3,
        scale: f64,
        hint: Option<usize>,
        scratch: &mut Vec<(usize, f64)>,
    ) -> Option<(f64, Vec<usize>)> {
        if self.points.is_empty() {
            return None;
        }
        let mut best = f64::INFINITY;
        let mut bound = f64::INFINITY;
        if let Some(h) = hint {
            best = squared_distance(q, self.points[h]);
            let reach = best.sqrt() * scale;
            bound = reach * reach;
        }
        scratch.clear();
        self.shell_in(0, q, scale, &mut best, &mut bound, scratch);
        let mut out: Vec<usize> = scratch
            .iter()
            .filter(|&&(_, d2)| d2 <= bound)
            .map(|&(i, _)| i)
            .collect();
        out.sort_unstable();
        Some((best, out))
    }

    fn shell_in(
        &self,
        node: usize,
        q: Point3,
        scale: f64,
        best: &mut f64,
        bound: &mut f64,
        hits: &mut Vec<(usize, f64)>,
    ) {
        match self.nodes[node] {
            Node::Leaf { lo, hi } => {
                if self.leaf_min_d2(lo, hi, q) > *bound {
                    return;
                }
                for (&i, &p) in self.order[lo..hi].iter().zip(&self.packed[lo..hi]) {
                    let d2 = squared_distance(q, p);
                    if d2 < *best {
                        *best = d2;
                        let reach = d2.sqrt() * scale;
                        *bound = reach * reach;
                        hits.retain(|&(_, h)| h <= *bound);
                    }
                    if d2 <= *bound {
                        hits.push((i, d2));
                    }
                }
            }
            Node::Split { left, right, .. } => {
                let dl = self.box_d2(left, q);
                let dr = self.box_d2(right, q);
                let (near, dn, far, df) = if dl <= dr {
                    (left, dl, right, dr)
                } else {
                    (right, dr, left, dl)
                };
                if dn <= *bound {
                    self.shell_in(near, q, scale, best, bound, hits);
                }
                if df <= *bound {
                    self.shell_in(far, q, scale, best, bound, hits);
                }
            }
        }
    }

    /// Index and squared distance of the point nearest to the segment `a-b`,
    /// as computed by [`segment_squared_distance`]; lowest index on ties.
    pub fn nearest_to_segment(&self, a: Point3, b: Point3) -> Option<(usize, f64)> {
        if self.points.is_empty() {
            return None;
        }
        let seg = SegmentQuery::new(a, b);
        let mut best = (usize::MAX, f64::INFINITY);
        self.segment_in(0, &seg, &mut best);
        Some(best)
    }

    fn segment_in(&self, node: usize, seg: &SegmentQuery, best: &mut (usize, f64)) {
        match self.nodes[node] {
            Node::Leaf { lo, hi } => {
                for (&i, &p) in self.order[lo..hi].iter().zip(&self.packed[lo..hi]) {
                    let d2 = seg.squared_distance(p);
                    if d2 < best.1 || (d2 == best.1 && i < best.0) {
                        *best = (i, d2);
                    }
                }
            }
            Node::Split { left, right } => {
                let dl = self.segment_lower_bound(left, seg);
                let dr = self.segment_lower_bound(right, seg);
                let (near, dn, far, df) = if dl <= dr {
                    (left, dl, right, dr)
                } else {
                    (right, dr, left, dl)
                };
                if dn * dn <= best.1 {
                    self.segment_in(near, seg, best);
                }
                if df * df <= best.1 {
                    self.segment_in(far, seg, best);
                }
            }
        }
    }

    /// Lower bound on the distance from the segment to any point of `node`:
    /// the larger of the box-to-box gap with the segment's bounding box and
    /// the distance to the box centre less the half diagonal, shrunk by a
    /// rounding margin.
    fn segment_lower_bound(&self, node: usize, seg: &SegmentQuery) -> f64 {
        let (lo, hi) = self.boxes[node];
        let gap = |l: f64, h: f64, sl: f64, sh: f64| (l - sh).max(sl - h).max(0.0);
        let gx = gap(lo.x, hi.x, seg.lo.x, seg.hi.x);
        let gy = gap(lo.y, hi.y, seg.lo.y, seg.hi.y);
        let gz = gap(lo.z, hi.z, seg.lo.z, seg.hi.z);
        let boxed = (gx * gx + gy * gy + gz * gz).sqrt();
        let center = (lo + hi) * 0.5;
        let half = (hi - lo).norm() * 0.5;
        let round = seg.squared_distance(center).sqrt() - half;
        (boxed.max(round) - self.slack).max(0.0)
    }

    /// Distance from `q` to the nearest point; identical to
    /// [`crate::geometry::max_empty_radius`].
    pub fn max_empty_radius(&self, q: Point3) -> f64 {
        self.nearest(q).map_or(f64::INFINITY, |(_, d2)| d2.sqrt())
    }

    /// All point indices with squared distance `<= r2`, ascending.
    pub fn within_squared(&self, q: Point3, r2: f64) -> Vec<usize> {
        let mut out = Vec::new();
        if !self.points.is_empty() {
            self.within_in(0, q, r2, &mut out);
        }
        out.sort_unstable();
        out
    }

    fn within_in(&self, node: usize, q: Point3, r2: f64, out: &mut Vec<usize>) {
        if self.box_d2(node, q) > r2 {
            return;
        }
        match self.nodes[node] {
            Node::Leaf { lo, hi } => {
                for (&i, &p) in self.order[lo..hi].iter().zip(&self.packed[lo..hi]) {
                    if squared_distance(q, p) <= r2 {
                        out.push(i);
                    }
                }
            }
            Node::Split { left, right, .. } => {
                self.within_in(left, q, r2, out);
                self.within_in(right, q, r2, out);
            }
        }
    }
}

struct SegmentQuery {
    a: Point3,
    ab: Point3,
    inv: f64,
    lo: Point3,
    hi: Point3,
}

impl SegmentQuery {
    fn new(a: Point3, b: Point3) -> Self {
        let ab = b - a;
        let len2 = ab.norm_squared();
        SegmentQuery {
            a,
            ab,
            inv: if len2 > 0.0 { 1.0 / len2 } else { 0.0 },
            lo: Point3::new(a.x.min(b.x), a.y.min(b.y), a.z.min(b.z)),
            hi: Point3::new(a.x.max(b.x), a.y.max(b.y), a.z.max(b.z)),
        }
    }

    fn squared_distance(&self, p: Point3) -> f64 {
        let ap = p - self.a;
        let t = (ap.dot(self.ab) * self.inv).clamp(0.0, 1.0);
        (ap - self.ab * t).norm_squared()
    }
}

/// Squared distance from `p` to the segment `a-b`, as used by
/// [`KdTree::nearest_to_segment`].
pub fn segment_squared_distance(a: Point3, b: Point3, p: Point3) -> f64 {
    SegmentQuery::new(a, b).squared_distance(p)
}
