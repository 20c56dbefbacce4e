//! Candidate segments between hull vertices, ranked by Minimal Distance
//! Scoring: the mean distance from the segment to every non-hull point.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LesError, Result};
use crate::geometry::{distance_point_segment, PointCloud, Segment3};
use crate::hull::HullMesh;

/// Largest pair count scored exhaustively under the automatic policy.
pub const ALL_PAIRS_LIMIT: usize = 10_000;
/// Fraction of pairs drawn when the automatic policy samples.
pub const DEFAULT_SAMPLE_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MdsDirection {
    Min,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairMode {
    All,
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairSamplingPolicy {
    pub mode: PairMode,
    pub sample_fraction: f64,
    pub seed: u64,
}

impl PairSamplingPolicy {
    pub fn all_pairs() -> Self {
        PairSamplingPolicy {
            mode: PairMode::All,
            sample_fraction: 1.0,
            seed: 0,
        }
    }

    pub fn sampled(sample_fraction: f64, seed: u64) -> Result<Self> {
        if !(sample_fraction > 0.0 && sample_fraction <= 1.0) {
            return Err(LesError::InvalidInput(format!(
                "sample fraction must lie in (0, 1], got {sample_fraction}"
            )));
        }
        Ok(PairSamplingPolicy {
            mode: PairMode::Sampled,
            sample_fraction,
            seed,
        })
    }

    /// All pairs while `C(h, 2) <= 10_000`, otherwise a 1% sample.
    pub fn automatic(hull_vertices: usize, seed: u64) -> Self {
        if pair_count(hull_vertices) <= ALL_PAIRS_LIMIT {
            PairSamplingPolicy {
                seed,
                ..PairSamplingPolicy::all_pairs()
            }
        } else {
            PairSamplingPolicy {
                mode: PairMode::Sampled,
                sample_fraction: DEFAULT_SAMPLE_FRACTION,
                seed,
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredSegment {
    /// Cloud indices of the endpoints, `i < j`.
    pub i: usize,
    pub j: usize,
    pub segment: Segment3,
    pub mds: f64,
}

pub fn pair_count(h: usize) -> usize {
    h * h.saturating_sub(1) / 2
}

/// `(a, b)` with `a < b < h` for rank `k` in lexicographic pair order.
fn unrank_pair(k: usize, h: usize) -> (usize, usize) {
    let before = |a: usize| a * (2 * h - a - 1) / 2;
    let hf = h as f64;
    let disc = (2.0 * hf - 1.0).powi(2) - 8.0 * k as f64;
    let mut a = (((2.0 * hf - 1.0) - disc.max(0.0).sqrt()) / 2.0)
        .floor()
        .max(0.0) as usize;
    a = a.min(h - 2);
    while a > 0 && before(a) > k {
        a -= 1;
    }
    while a + 1 < h - 1 && before(a + 1) <= k {
        a += 1;
    }
    (a, a + 1 + (k - before(a)))
}

/// Cloud points that are not hull vertices, ascending.
pub fn interior_indices(cloud: &PointCloud, hull: &HullMesh) -> Vec<usize> {
    let mut on_hull = vec![false; cloud.len()];
    for &v in &hull.vertex_indices {
        on_hull[v] = true;
    }
    (0..cloud.len()).filter(|&i| !on_hull[i]).collect()
}

/// Mean distance from `segment` to the listed points, summed in the given
/// order.
pub fn mean_segment_distance(segment: &Segment3, cloud: &PointCloud, indices: &[usize]) -> f64 {
    let mut sum = 0.0;
    for &k in indices {
        sum += distance_point_segment(cloud.get(k), segment);
    }
    sum / indices.len() as f64
}

/// Mean distance from `segment` to the non-hull points.
///
/// Fails with [`LesError::EmptyInterior`] when every point is a hull vertex;
/// [`select_best_segments`] then averages over the whole cloud.
pub fn mds(segment: &Segment3, cloud: &PointCloud, hull: &HullMesh) -> Result<f64> {
    let interior = interior_indices(cloud, hull);
    if interior.is_empty() {
        return Err(LesError::EmptyInterior);
    }
    Ok(mean_segment_distance(segment, cloud, &interior))
}

/// Hull-vertex pairs `(i, j)` as cloud indices with `i < j`, ascending.
pub fn generate_pairs(hull: &HullMesh, policy: &PairSamplingPolicy) -> Vec<(usize, usize)> {
    let verts = &hull.vertex_indices;
    let h = verts.len();
    if h < 2 {
        return Vec::new();
    }
    let total = pair_count(h);
    let ranks: Vec<usize> = match policy.mode {
        PairMode::All => (0..total).collect(),
        PairMode::Sampled => {
            let x = policy.sample_fraction * total as f64;
            let want = ((x - x * 1e-12).ceil() as usize).clamp(1, total);
            let mut rng = ChaCha8Rng::seed_from_u64(policy.seed);
            let mut picked = rand::seq::index::sample(&mut rng, total, want).into_vec();
            picked.sort_unstable();
            picked
        }
    };
    ranks
        .into_iter()
        .map(|k| {
            let (a, b) = unrank_pair(k, h);
            (verts[a], verts[b])
        })
        .collect()
}

/// Scores every pair from `policy` and returns the `count` best, ordered by
/// score (ascending for [`MdsDirection::Min`]) then by `(i, j)`.
///
/// Segments are scored in parallel; each mean is summed in point order, so
/// the result does not depend on the worker count.
pub fn select_best_segments(
    cloud: &PointCloud,
    hull: &HullMesh,
    policy: &PairSamplingPolicy,
    count: usize,
    direction: MdsDirection,
) -> Result<Vec<ScoredSegment>> {
    Ok(score_all(cloud, hull, policy, count, direction)?.0)
}

/// Like [`select_best_segments`], also returning how many segments were scored.
pub(crate) fn score_all(
    cloud: &PointCloud,
    hull: &HullMesh,
    policy: &PairSamplingPolicy,
    count: usize,
    direction: MdsDirection,
) -> Result<(Vec<ScoredSegment>, usize)> {
    if count == 0 {
        return Err(LesError::InvalidInput(
            "segment count must be at least 1".into(),
        ));
    }
    let mut basis = interior_indices(cloud, hull);
    if basis.is_empty() {
        basis = (0..cloud.len()).collect();
    }
    let pairs = generate_pairs(hull, policy);
    let mut scored: Vec<ScoredSegment> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let segment = Segment3::new(cloud.get(i), cloud.get(j));
            ScoredSegment {
                i,
                j,
                segment,
                mds: mean_segment_distance(&segment, cloud, &basis),
            }
        })
        .collect();
    let scored_count = scored.len();
    scored.sort_by(|a, b| {
        let by_score = match direction {
            MdsDirection::Min => a.mds.total_cmp(&b.mds),
            MdsDirection::Max => b.mds.total_cmp(&a.mds),
        };
        by_score.then((a.i, a.j).cmp(&(b.i, b.j)))
    });
    scored.truncate(count);
    Ok((scored, scored_count))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hull::build_hull;

    #[test]
    fn unrank_covers_all_pairs_in_order() {
        for h in [2, 3, 4, 7, 20, 101] {
            let mut expected = Vec::new();
            for a in 0..h {
                for b in (a + 1)..h {
                    expected.push((a, b));
                }
            }
            let got: Vec<_> = (0..pair_count(h)).map(|k| unrank_pair(k, h)).collect();
            assert_eq!(got, expected, "h = {h}");
        }
    }

    fn octahedron_with_interior() -> PointCloud {
        // Hull: 6 octahedron vertices. Interior points sit at distance 1 and
        // 3 from the x-axis segment between vertices 0 and 1.
        PointCloud::from_arrays(&[
            [-5.0, 0.0, 0.0],
            [5.0, 0.0, 0.0],
            [0.0, 5.0, 0.0],
            [0.0, -5.0, 0.0],
            [0.0, 0.0, 5.0],
            [0.0, 0.0, -5.0],
            [0.0, 1.0, 0.0],
            [1.0, 0.0, 3.0],
        ])
        .unwrap()
    }

    #[test]
    fn mds_is_mean_of_interior_distances() {
        let cloud = octahedron_with_interior();
        let hull = build_hull(&cloud).unwrap();
        assert_eq!(hull.vertex_indices, vec![0, 1, 2, 3, 4, 5]);
        let seg = Segment3::new(cloud.get(0), cloud.get(1));
        assert_eq!(mds(&seg, &cloud, &hull).unwrap(), 2.0);
    }

    #[test]
    fn mds_constant_distance() {
        let mut pts = vec![
            [-5.0, 0.0, 0.0],
            [5.0, 0.0, 0.0],
            [0.0, 5.0, 0.0],
            [0.0, -5.0, 0.0],
            [0.0, 0.0, 5.0],
            [0.0, 0.0, -5.0],
        ];
        for k in 0..4 {
            let a = k as f64 * std::f64::consts::FRAC_PI_2;
            pts.push([k as f64 - 1.5, 0.5 * a.cos(), 0.5 * a.sin()]);
        }
        let cloud = PointCloud::from_arrays(&pts).unwrap();
        let hull = build_hull(&cloud).unwrap();
        let seg = Segment3::new(cloud.get(0), cloud.get(1));
        assert!((mds(&seg, &cloud, &hull).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn mds_without_interior_points_errors() {
        let cloud = PointCloud::from_arrays(&[
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
        ])
        .unwrap();
        let hull = build_hull(&cloud).unwrap();
        let seg = Segment3::new(cloud.get(0), cloud.get(1));
        assert!(matches!(
            mds(&seg, &cloud, &hull),
            Err(LesError::EmptyInterior)
        ));
        // Selection falls back to the full cloud instead.
        let best = select_best_segments(
            &cloud,
            &hull,
            &PairSamplingPolicy::all_pairs(),
            6,
            MdsDirection::Min,
        )
        .unwrap();
        assert_eq!(best.len(), 6);
    }

    #[test]
    fn pair_generation_counts() {
        let cloud = octahedron_with_interior();
        let hull = build_hull(&cloud).unwrap();
        assert_eq!(
            generate_pairs(&hull, &PairSamplingPolicy::all_pairs()).len(),
            15
        );

        let cube = crate::hull::tests::cube_with_centroid();
        let hull = build_hull(&cube).unwrap();
        let tetra = PointCloud::from_arrays(&[
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
        ])
        .unwrap();
        let tetra_hull = build_hull(&tetra).unwrap();
        assert_eq!(
            generate_pairs(&tetra_hull, &PairSamplingPolicy::all_pairs()).len(),
            6
        );
        assert_eq!(
            generate_pairs(&hull, &PairSamplingPolicy::all_pairs()).len(),
            28
        );
    }

    #[test]
    fn sampled_pairs_use_ceiling_and_are_deterministic() {
        let mut pts = Vec::new();
        for k in 0..20 {
            let t = k as f64 / 20.0 * std::f64::consts::TAU;
            let z = if k % 2 == 0 { 1.0 } else { -1.0 };
            pts.push([t.cos(), t.sin(), z * (1.0 + 0.01 * k as f64)]);
        }
        let cloud = PointCloud::from_arrays(&pts).unwrap();
        let hull = build_hull(&cloud).unwrap();
        assert_eq!(hull.vertex_indices.len(), 20);
        let policy = PairSamplingPolicy::sampled(0.01, 42).unwrap();
        let a = generate_pairs(&hull, &policy);
        assert_eq!(a.len(), 2);
        assert_ne!(a[0], a[1]);
        assert_eq!(a, generate_pairs(&hull, &policy));
    }

    #[test]
    fn invalid_fraction_rejected() {
        assert!(PairSamplingPolicy::sampled(0.0, 1).is_err());
        assert!(PairSamplingPolicy::sampled(1.5, 1).is_err());
        assert!(PairSamplingPolicy::sampled(1.0, 1).is_ok());
    }

    #[test]
    fn automatic_policy_threshold() {
        assert_eq!(PairSamplingPolicy::automatic(141, 0).mode, PairMode::All);
        assert_eq!(
            PairSamplingPolicy::automatic(142, 0).mode,
            PairMode::Sampled
        );
    }

    #[test]
    fn best_segment_is_minimum_and_ties_break_on_indices() {
        let cloud = octahedron_with_interior();
        let hull = build_hull(&cloud).unwrap();
        let best = select_best_segments(
            &cloud,
            &hull,
            &PairSamplingPolicy::all_pairs(),
            15,
            MdsDirection::Min,
        )
        .unwrap();
        for w in best.windows(2) {
            assert!(
                w[0].mds < w[1].mds
                    || (w[0].mds == w[1].mds && (w[0].i, w[0].j) < (w[1].i, w[1].j))
            );
        }
        let worst = select_best_segments(
            &cloud,
            &hull,
            &PairSamplingPolicy::all_pairs(),
            1,
            MdsDirection::Max,
        )
        .unwrap();
        assert_eq!(worst[0].mds, best.last().unwrap().mds);
    }
}
