//! Delaunay tetrahedralization by incremental Bowyer–Watson insertion.
//!
//! The hull is closed off with ghost tetrahedra that share a single vertex
//! at infinity, so no bounding scaffold has to be carved away afterwards and
//! the finite tetrahedra always tile the convex hull exactly. Orientation and
//! in-sphere signs come from adaptive exact predicates; a point conflicts with
//! a tetrahedron only when it lies strictly inside the circumsphere, so
//! cospherical ties are resolved in favour of the earlier insertion.

use std::collections::HashMap;

use robust::Coord3D;

use crate::error::{LesError, Result};
use crate::geometry::{distance_point_point, signed_volume, Aabb, Point3, PointCloud, Sphere};
use crate::hull::{self, HullMesh};

/// Simplex volume threshold, relative to the cube of the bounding-box diagonal.
pub const DEGENERATE_VOLUME_REL: f64 = 1e-12;

const INFINITE: u32 = u32::MAX;
const NONE: u32 = u32::MAX;

/// Finite Delaunay tetrahedra with their circumspheres (the Voronoi vertices).
#[derive(Debug, Clone, PartialEq)]
pub struct TetMesh {
    /// Positively oriented index 4-tuples into the cloud.
    pub tetrahedra: Vec<[usize; 4]>,
    pub circumcenters: Vec<Point3>,
    pub circumradii: Vec<f64>,
}

impl TetMesh {
    pub fn len(&self) -> usize {
        self.tetrahedra.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tetrahedra.is_empty()
    }

    pub fn volume(&self, cloud: &PointCloud) -> f64 {
        self.tetrahedra
            .iter()
            .map(|&[a, b, c, d]| {
                signed_volume(cloud.get(a), cloud.get(b), cloud.get(c), cloud.get(d))
            })
            .sum()
    }
}

/// A circumcenter that lies inside the convex hull, tagged with the index of
/// the tetrahedron it came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoronoiVertex {
    pub tet: usize,
    pub center: Point3,
    pub radius: f64,
}

fn coord(p: Point3) -> Coord3D<f64> {
    Coord3D {
        x: p.x,
        y: p.y,
        z: p.z,
    }
}

/// Positive when `d` lies on the side of `(b − a) × (c − a)`.
pub(crate) fn orient(a: Point3, b: Point3, c: Point3, d: Point3) -> f64 {
    -robust::orient3d(coord(a), coord(b), coord(c), coord(d))
}

/// For a positively oriented `(a, b, c, d)`: positive when `e` is strictly
/// inside the circumsphere.
pub(crate) fn in_sphere(a: Point3, b: Point3, c: Point3, d: Point3, e: Point3) -> f64 {
    -robust::insphere(coord(a), coord(b), coord(c), coord(d), coord(e))
}

fn circumsphere_raw(p0: Point3, p1: Point3, p2: Point3, p3: Point3) -> (Sphere, f64) {
    let a = p1 - p0;
    let b = p2 - p0;
    let c = p3 - p0;
    let bc = b.cross(c);
    let det = a.dot(bc);
    let num = bc * a.norm_squared() + c.cross(a) * b.norm_squared() + a.cross(b) * c.norm_squared();
    let rel = num * (0.5 / det);
    let center = p0 + rel;
    (
        Sphere::new(center, distance_point_point(center, p0)),
        det / 6.0,
    )
}

/// The unique sphere through four affinely independent points.
///
/// Fails when `|volume| <= 1e-12 * diag³`, with `diag` the diagonal of the
/// four points' bounding box.
pub fn circumsphere(p0: Point3, p1: Point3, p2: Point3, p3: Point3) -> Result<Sphere> {
    let diag = Aabb::from_points(&[p0, p1, p2, p3]).diagonal();
    let (sphere, volume) = circumsphere_raw(p0, p1, p2, p3);
    if volume.is_nan()
        || volume.abs() <= DEGENERATE_VOLUME_REL * diag.powi(3)
        || !sphere.center.is_finite()
    {
        return Err(LesError::Degenerate(format!(
            "simplex volume {volume:e} is below the degeneracy threshold"
        )));
    }
    Ok(sphere)
}

#[derive(Debug, Clone)]
struct Tet {
    v: [u32; 4],
    /// `n[i]` is the neighbour across the face opposite `v[i]`.
    n: [u32; 4],
    stamp: u32,
}

impl Tet {
    fn is_ghost(&self) -> bool {
        self.v[3] == INFINITE
    }
}

struct Triangulation<'a> {
    pts: &'a [Point3],
    tets: Vec<Tet>,
    alive: Vec<bool>,
    free: Vec<u32>,
    epoch: u32,
    last: u32,
}

impl<'a> Triangulation<'a> {
    fn p(&self, v: u32) -> Point3 {
        self.pts[v as usize]
    }

    fn conflicts(&self, t: u32, q: Point3) -> bool {
        let tet = &self.tets[t as usize];
        let [a, b, c, d] = tet.v;
        if tet.is_ghost() {
            let o = orient(self.p(a), self.p(b), self.p(c), q);
            if o > 0.0 {
                true
            } else if o < 0.0 {
                false
            } else {
                // On the hull plane: inside the facet's circumcircle exactly when
                // inside the circumsphere of the finite tetrahedron behind it.
                self.conflicts(tet.n[3], q)
            }
        } else {
            in_sphere(self.p(a), self.p(b), self.p(c), self.p(d), q) > 0.0
        }
    }

    fn alloc(&mut self, tet: Tet) -> u32 {
        if let Some(id) = self.free.pop() {
            self.tets[id as usize] = tet;
            self.alive[id as usize] = true;
            id
        } else {
            self.tets.push(tet);
            self.alive.push(true);
            (self.tets.len() - 1) as u32
        }
    }

    /// Visibility walk towards `q`. Returns a ghost (with `q` strictly
    /// outside its facet) or the finite tetrahedron whose closure holds `q`.
    fn locate(&self, q: Point3) -> Option<u32> {
        let mut t = self.last;
        if self.tets[t as usize].is_ghost() {
            t = self.tets[t as usize].n[3];
        }
        let limit = 4 * self.tets.len() + 64;
        let mut step = 0usize;
        'walk: while step < limit {
            let tet = &self.tets[t as usize];
            if tet.is_ghost() {
                return Some(t);
            }
            // Rotate the starting face so the walk cannot cycle forever.
            let start = step % 4;
            step += 1;
            for k in 0..4 {
                let i = (start + k) % 4;
                let mut pts = [
                    self.p(tet.v[0]),
                    self.p(tet.v[1]),
                    self.p(tet.v[2]),
                    self.p(tet.v[3]),
                ];
                pts[i] = q;
                if orient(pts[0], pts[1], pts[2], pts[3]) < 0.0 {
                    t = tet.n[i];
                    continue 'walk;
                }
            }
            return Some(t);
        }
        (0..self.tets.len() as u32).find(|&t| self.alive[t as usize] && self.conflicts(t, q))
    }

    fn insert(&mut self, vid: u32) {
        let q = self.p(vid);
        let Some(seed) = self.locate(q) else { return };
        if !self.conflicts(seed, q) {
            // Only a duplicate of an existing vertex conflicts with nothing.
            return;
        }

        self.epoch += 2;
        let inside = self.epoch;
        let outside = self.epoch + 1;
        let mut cavity = vec![seed];
        let mut boundary: Vec<(u32, usize)> = Vec::new();
        self.tets[seed as usize].stamp = inside;
        let mut head = 0;
        while head < cavity.len() {
            let t = cavity[head];
            head += 1;
            for i in 0..4 {
                let nb = self.tets[t as usize].n[i];
                let stamp = self.tets[nb as usize].stamp;
                if stamp == inside {
                    continue;
                }
                if stamp != outside && self.conflicts(nb, q) {
                    self.tets[nb as usize].stamp = inside;
                    cavity.push(nb);
                } else {
                    self.tets[nb as usize].stamp = outside;
                    boundary.push((t, i));
                }
            }
        }

        // Resolve back-pointers before any cavity slot is recycled.
        let specs: Vec<([u32; 4], usize, u32, usize)> = boundary
            .iter()
            .map(|&(t, i)| {
                let mut v = self.tets[t as usize].v;
                v[i] = vid;
                let outer = self.tets[t as usize].n[i];
                let back = self.tets[outer as usize]
                    .n
                    .iter()
                    .position(|&x| x == t)
                    .expect("outer tetrahedron points back into the cavity");
                (v, i, outer, back)
            })
            .collect();
        for &t in &cavity {
            self.alive[t as usize] = false;
            self.free.push(t);
        }

        let mut open: HashMap<[u32; 3], (u32, usize)> = HashMap::with_capacity(specs.len() * 2);
        let mut newest_finite = NONE;
        for (v, i, outer, back) in specs {
            let id = self.alloc(Tet {
                v,
                n: [NONE; 4],
                stamp: 0,
            });
            self.tets[id as usize].n[i] = outer;
            self.tets[outer as usize].n[back] = id;
            for j in 0..4 {
                if j == i {
                    continue;
                }
                let mut key = [0u32; 3];
                let mut k = 0;
                for (s, &x) in v.iter().enumerate() {
                    if s != j {
                        key[k] = x;
                        k += 1;
                    }
                }
                key.sort_unstable();
                if let Some((other, slot)) = open.remove(&key) {
                    self.tets[id as usize].n[j] = other;
                    self.tets[other as usize].n[slot] = id;
                } else {
                    open.insert(key, (id, j));
                }
            }
            if v[3] != INFINITE {
                newest_finite = id;
            }
        }
        debug_assert!(open.is_empty(), "cavity boundary is not closed");
        if newest_finite != NONE {
            self.last = newest_finite;
        }
    }
}

/// Builds the Delaunay tetrahedralization of `cloud`.
///
/// Points are inserted in input order, and exact duplicates are skipped.
/// Tetrahedra whose volume does not exceed `1e-12 * diag³` are left out of
/// the returned mesh, since their circumcenters are not reliable.
pub fn build_delaunay(cloud: &PointCloud) -> Result<TetMesh> {
    cloud.require_len(4)?;
    let pts = cloud.points();
    let diag = cloud.bounding_box().diagonal();
    let eps = hull::HULL_REL_TOLERANCE * diag;
    let [i0, mut i1, mut i2, i3] = hull::initial_simplex(pts, eps)?;
    let min_volume = DEGENERATE_VOLUME_REL * diag.powi(3);
    if signed_volume(pts[i0], pts[i1], pts[i2], pts[i3]).abs() <= min_volume {
        return Err(LesError::Degenerate("all points are coplanar".into()));
    }
    if orient(pts[i0], pts[i1], pts[i2], pts[i3]) < 0.0 {
        std::mem::swap(&mut i1, &mut i2);
    }
    let root = [i0 as u32, i1 as u32, i2 as u32, i3 as u32];

    let mut tri = Triangulation {
        pts,
        tets: Vec::with_capacity(pts.len() * 8),
        alive: Vec::with_capacity(pts.len() * 8),
        free: Vec::new(),
        epoch: 0,
        last: 0,
    };
    tri.alloc(Tet {
        v: root,
        n: [NONE; 4],
        stamp: 0,
    });
    for k in 0..4 {
        let mut f: Vec<u32> = (0..4).filter(|&s| s != k).map(|s| root[s]).collect();
        if orient(tri.p(f[0]), tri.p(f[1]), tri.p(f[2]), tri.p(root[k])) > 0.0 {
            f.swap(1, 2);
        }
        let g = tri.alloc(Tet {
            v: [f[0], f[1], f[2], INFINITE],
            n: [NONE; 4],
            stamp: 0,
        });
        tri.tets[0].n[k] = g;
        tri.tets[g as usize].n[3] = 0;
    }
    let mut open: HashMap<[u32; 3], (u32, usize)> = HashMap::new();
    for g in 1..5u32 {
        let v = tri.tets[g as usize].v;
        for j in 0..3 {
            let mut key: Vec<u32> = (0..4).filter(|&s| s != j).map(|s| v[s]).collect();
            key.sort_unstable();
            let key = [key[0], key[1], key[2]];
            if let Some((other, slot)) = open.remove(&key) {
                tri.tets[g as usize].n[j] = other;
                tri.tets[other as usize].n[slot] = g;
            } else {
                open.insert(key, (g, j));
            }
        }
    }

    for v in 0..pts.len() {
        if !root.contains(&(v as u32)) {
            tri.insert(v as u32);
        }
    }

    let mut mesh = TetMesh {
        tetrahedra: Vec::new(),
        circumcenters: Vec::new(),
        circumradii: Vec::new(),
    };
    for (t, tet) in tri.tets.iter().enumerate() {
        if !tri.alive[t] || tet.is_ghost() {
            continue;
        }
        let v = tet.v.map(|x| x as usize);
        let (sphere, volume) = circumsphere_raw(pts[v[0]], pts[v[1]], pts[v[2]], pts[v[3]]);
        if volume.is_nan() || volume <= min_volume || !sphere.center.is_finite() {
            continue;
        }
        mesh.tetrahedra.push(v);
        mesh.circumcenters.push(sphere.center);
        mesh.circumradii.push(sphere.radius);
    }
    Ok(mesh)
}

/// Circumcenters lying inside the hull, in tetrahedron order.
pub fn voronoi_vertices(mesh: &TetMesh, hull: &HullMesh) -> Vec<VoronoiVertex> {
    mesh.circumcenters
        .iter()
        .zip(&mesh.circumradii)
        .enumerate()
        .filter(|(_, (c, _))| hull.contains_point(**c))
        .map(|(tet, (&center, &radius))| VoronoiVertex {
            tet,
            center,
            radius,
        })
        .collect()
}
