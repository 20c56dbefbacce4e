//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::process::{Command, ExitCode};
use std::time::Instant;

use les3d::delaunay::build_delaunay;
use les3d::generators::{gen_ball, gen_shell, gen_two_spheres, ShellSpec, TwoSphereSpec};
use les3d::geometry::phi;
use les3d::hull::build_hull;
use les3d::oracle::{exact_les, grid_les};
use les3d::scoring::{
    mds, mean_segment_distance, select_best_segments, MdsDirection, PairSamplingPolicy,
};
use les3d::search::{run_les, SearchParams};
use les3d::{LesError, Point3, PointCloud, Segment3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const VALIDITY_BUDGET_S: f64 = 120.0;
const GRID_RES: usize = 96;

struct Report {
    failures: usize,
}

impl Report {
    fn record(&mut self, id: u32, name: &str, ok: bool, detail: String) {
        let tag = if ok { "PASS" } else { "FAIL" };
        if !ok {
            self.failures += 1;
        }
        println!("{tag} criterion {id} ({name}): {detail}");
    }
}

fn random_cloud(i: u64, rng: &mut ChaCha8Rng) -> PointCloud {
    let n: usize = rng.random_range(50..=2000);
    if i.is_multiple_of(2) {
        gen_shell(&ShellSpec {
            n,
            seed: i,
            ..Default::default()
        })
        .unwrap()
    } else {
        gen_two_spheres(&TwoSphereSpec {
            n_per_sphere: n / 2,
            seed: i,
            ..Default::default()
        })
        .unwrap()
    }
}

fn order_one(params: &SearchParams) -> SearchParams {
    SearchParams {
        max_order: 1,
        ..*params
    }
}

/// Criteria 1 and 4: validity and oracle dominance on 200 random clouds.
fn random_suite(report: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut solve_s = 0.0;
    let mut invalid = Vec::new();
    let mut dominated = 0;
    let mut worst_excess = f64::NEG_INFINITY;
    let mut grid_disagree = 0;
    let mut worst_gap = 0.0f64;
    for i in 0..200u64 {
        let cloud = random_cloud(i, &mut rng);
        let t = Instant::now();
        let res = run_les(&cloud, &SearchParams::default()).unwrap();
        let hull = build_hull(&cloud).unwrap();
        let les = res.les.sphere;
        let ok = phi(les.center, les.radius, &cloud) >= -1e-9 && hull.contains_point(les.center);
        solve_s += t.elapsed().as_secs_f64();
        if !ok {
            invalid.push(i);
        }

        let exact = exact_les(&cloud).unwrap();
        worst_excess = worst_excess.max(les.radius - exact.radius);
        if les.radius <= exact.radius + 1e-7 {
            dominated += 1;
        }
        let grid = grid_les(&cloud, GRID_RES).unwrap();
        let spacing = cloud.bounding_box().diagonal() / GRID_RES as f64;
        let gap = (exact.radius - grid.radius).abs() / spacing;
        worst_gap = worst_gap.max(gap);
        if gap > 1.0 {
            grid_disagree += 1;
        }
    }
    report.record(
        1,
        "validity",
        invalid.is_empty() && solve_s < VALIDITY_BUDGET_S,
        format!(
            "{} of 200 valid, {:.1} s (budget {VALIDITY_BUDGET_S} s){}",
            200 - invalid.len(),
            solve_s,
            if invalid.is_empty() {
                String::new()
            } else {
                format!(", invalid clouds {invalid:?}")
            }
        ),
    );
    report.record(
        4,
        "oracle dominance",
        dominated == 200 && grid_disagree == 0,
        format!(
            "run <= exact + 1e-7 on {dominated}/200 (max run - exact = {worst_excess:.3e}); \
             exact vs grid({GRID_RES}) max gap {worst_gap:.3} spacings, {grid_disagree} over one"
        ),
    );
}

/// Criteria 2, 3 and 5 on the two reference configurations.
fn reference_configs(report: &mut Report) {
    let params = SearchParams::default();

    let shell = gen_shell(&ShellSpec {
        n: 2000,
        radius: 1.0,
        noise: 0.0,
        seed: 1,
    })
    .unwrap();
    let shell_full = run_les(&shell, &params).unwrap();
    let s = shell_full.les.sphere;
    let off = s.center.norm();
    report.record(
        2,
        "shell recovery",
        off <= 0.05 && (0.93..=1.0).contains(&s.radius),
        format!("centre offset {off:.3e}, radius {:.6}", s.radius),
    );

    let two = gen_two_spheres(&TwoSphereSpec::default()).unwrap();
    let two_full = run_les(&two, &params).unwrap();
    let exact = exact_les(&two).unwrap();
    let ratio = two_full.les.sphere.radius / exact.radius;
    report.record(
        3,
        "two-sphere cavity",
        ratio >= 0.9,
        format!(
            "radius {:.6}, exact {:.6}, ratio {ratio:.4}",
            two_full.les.sphere.radius, exact.radius
        ),
    );

    let shell_one = run_les(&shell, &order_one(&params)).unwrap();
    let two_one = run_les(&two, &order_one(&params)).unwrap();
    let d_shell = (shell_one.les.sphere.radius - s.radius).abs();
    let d_two = (two_one.les.sphere.radius - two_full.les.sphere.radius).abs();
    report.record(
        5,
        "first-order convergence",
        d_shell <= 1e-6 && d_two <= 1e-6,
        format!(
            "|order1 - full|: shell {d_shell:.3e} (orders run {}), two-sphere {d_two:.3e} (orders run {})",
            shell_full.orders_run, two_full.orders_run
        ),
    );
}

fn naive_segment_distance(a: Point3, b: Point3, p: Point3) -> f64 {
    let (ab, ap) = (
        [b.x - a.x, b.y - a.y, b.z - a.z],
        [p.x - a.x, p.y - a.y, p.z - a.z],
    );
    let len2 = ab[0] * ab[0] + ab[1] * ab[1] + ab[2] * ab[2];
    let t = if len2 == 0.0 {
        0.0
    } else {
        ((ap[0] * ab[0] + ap[1] * ab[1] + ap[2] * ab[2]) / len2).clamp(0.0, 1.0)
    };
    let d = [ap[0] - t * ab[0], ap[1] - t * ab[1], ap[2] - t * ab[2]];
    (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
}

fn naive_mds(a: Point3, b: Point3, cloud: &PointCloud, hull_vertices: &[usize]) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for (i, &p) in cloud.points().iter().enumerate() {
        let mut on_hull = false;
        for &h in hull_vertices {
            if h == i {
                on_hull = true;
            }
        }
        if !on_hull {
            sum += naive_segment_distance(a, b, p);
            count += 1;
        }
    }
    if count == 0 {
        for &p in cloud.points() {
            sum += naive_segment_distance(a, b, p);
        }
        count = cloud.len();
    }
    sum / count as f64
}

/// MDS bits and the best `(i, j, mds bits)` list from one pool.
type PoolRun = (u64, Vec<(usize, usize, u64)>);

fn pool(threads: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
}

/// Criterion 6: MDS against a double loop, under 1, 2 and 8 workers.
fn mds_oracle(report: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let pools = [pool(1), pool(2), pool(8)];
    let mut worst = 0.0f64;
    let mut mismatched_pools = 0;
    for case in 0..50u64 {
        let n = rng.random_range(10..=300);
        let cloud = if case % 2 == 0 {
            gen_ball(n, rng.random_range(0.5..5.0), case).unwrap()
        } else {
            gen_shell(&ShellSpec {
                n,
                noise: 0.1,
                seed: case,
                ..Default::default()
            })
            .unwrap()
        };
        let hull = build_hull(&cloud).unwrap();
        let a = cloud.get(rng.random_range(0..n));
        let b = Point3::new(
            rng.random_range(-2.0..2.0),
            rng.random_range(-2.0..2.0),
            rng.random_range(-2.0..2.0),
        );
        let seg = Segment3::new(a, b);
        let expected = naive_mds(a, b, &cloud, &hull.vertex_indices);

        let per_pool: Vec<PoolRun> = pools
            .iter()
            .map(|p| {
                p.install(|| {
                    let got = match mds(&seg, &cloud, &hull) {
                        Err(LesError::EmptyInterior) => {
                            let all: Vec<usize> = (0..cloud.len()).collect();
                            mean_segment_distance(&seg, &cloud, &all)
                        }
                        other => other.unwrap(),
                    };
                    let best = select_best_segments(
                        &cloud,
                        &hull,
                        &PairSamplingPolicy::all_pairs(),
                        8,
                        MdsDirection::Min,
                    )
                    .unwrap()
                    .into_iter()
                    .map(|s| (s.i, s.j, s.mds.to_bits()))
                    .collect();
                    (got.to_bits(), best)
                })
            })
            .collect();
        worst = worst.max((f64::from_bits(per_pool[0].0) - expected).abs());
        if per_pool.iter().any(|r| *r != per_pool[0]) {
            mismatched_pools += 1;
        }
    }
    report.record(
        6,
        "MDS oracle",
        worst <= 1e-12 && mismatched_pools == 0,
        format!(
            "max |mds - naive| {worst:.3e}; {mismatched_pools} cases differ across 1/2/8 workers"
        ),
    );
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

/// Criterion 7: hull build time roughly n log n.
fn hull_scaling(report: &mut Report) {
    let sizes = [10_000usize, 20_000, 40_000];
    let times: Vec<f64> = sizes
        .iter()
        .map(|&n| {
            let cloud = gen_ball(n, 1.0, 7).unwrap();
            build_hull(&cloud).unwrap();
            median(
                (0..5)
                    .map(|_| {
                        let t = Instant::now();
                        std::hint::black_box(build_hull(&cloud).unwrap());
                        t.elapsed().as_secs_f64()
                    })
                    .collect(),
            )
        })
        .collect();
    let ratios: Vec<f64> = times.windows(2).map(|w| w[1] / w[0]).collect();
    report.record(
        7,
        "hull scaling",
        ratios.iter().all(|&r| r <= 2.6),
        format!(
            "median ms {:.2}/{:.2}/{:.2}, ratios {:.2} {:.2}",
            times[0] * 1e3,
            times[1] * 1e3,
            times[2] * 1e3,
            ratios[0],
            ratios[1]
        ),
    );
}

fn det3(m: [[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Circumcentre by Cramer's rule on the perpendicular-bisector system.
fn naive_circumsphere(p: [Point3; 4]) -> Option<(Point3, f64)> {
    let a = p[0];
    let rows: Vec<[f64; 3]> = p[1..]
        .iter()
        .map(|q| [q.x - a.x, q.y - a.y, q.z - a.z])
        .collect();
    let rhs: Vec<f64> = rows
        .iter()
        .map(|r| 0.5 * (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]))
        .collect();
    let m = [rows[0], rows[1], rows[2]];
    let d = det3(m);
    if d == 0.0 {
        return None;
    }
    let mut x = [0.0; 3];
    for (c, xc) in x.iter_mut().enumerate() {
        let mut mc = m;
        for r in 0..3 {
            mc[r][c] = rhs[r];
        }
        *xc = det3(mc) / d;
    }
    let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    Some((Point3::new(a.x + x[0], a.y + x[1], a.z + x[2]), r))
}

/// Criterion 8: Delaunay emptiness and volume coverage.
fn delaunay_check(report: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let mut bad_tets = 0usize;
    let mut worst_vol = 0.0f64;
    let mut total_tets = 0usize;
    for case in 0..30u64 {
        let n = rng.random_range(10..=400);
        let cloud = match case % 3 {
            0 => gen_ball(n, 1.0, case).unwrap(),
            1 => gen_shell(&ShellSpec {
                n,
                noise: 0.05,
                seed: case,
                ..Default::default()
            })
            .unwrap(),
            _ => {
                let pts: Vec<[f64; 3]> = (0..n)
                    .map(|_| {
                        [
                            rng.random_range(-3.0..3.0),
                            rng.random_range(-1.0..1.0),
                            rng.random_range(0.0..0.5),
                        ]
                    })
                    .collect();
                PointCloud::from_arrays(&pts).unwrap()
            }
        };
        let tets = build_delaunay(&cloud).unwrap();
        let hull = build_hull(&cloud).unwrap();
        total_tets += tets.len();
        for t in &tets.tetrahedra {
            let Some((c, r)) = naive_circumsphere(t.map(|i| cloud.get(i))) else {
                bad_tets += 1;
                continue;
            };
            let tol = 1e-9 * r.max(1.0);
            let intruder = cloud
                .points()
                .iter()
                .enumerate()
                .any(|(i, p)| !t.contains(&i) && (*p - c).norm() < r - tol);
            if intruder {
                bad_tets += 1;
            }
        }
        let hv = hull.volume(&cloud);
        worst_vol = worst_vol.max((tets.volume(&cloud) - hv).abs() / hv);
    }
    report.record(
        8,
        "Delaunay correctness",
        bad_tets == 0 && worst_vol <= 1e-6,
        format!("{bad_tets} of {total_tets} tetrahedra fail emptiness; max volume error {worst_vol:.3e}"),
    );
}

/// Criterion 9: two CLI runs give the same bytes.
fn cli_determinism(report: &mut Report) {
    let dir = tempfile::tempdir().unwrap();
    let exe = env!("CARGO_BIN_EXE_les3d");
    let cloud = dir.path().join("cloud.xyz");
    let status = Command::new(exe)
        .args(["gen", "two-spheres", "--out"])
        .arg(&cloud)
        .status()
        .unwrap();
    assert!(status.success());
    let outputs: Vec<Vec<u8>> = (0..2)
        .map(|run| {
            let out = dir.path().join(format!("run{run}.json"));
            let status = Command::new(exe)
                .arg("solve")
                .arg(&cloud)
                .args(["--oracle", "exact", "--out"])
                .arg(&out)
                .status()
                .unwrap();
            assert!(status.success());
            std::fs::read(out).unwrap()
        })
        .collect();
    report.record(
        9,
        "CLI determinism",
        !outputs[0].is_empty() && outputs[0] == outputs[1],
        format!(
            "{} and {} bytes, identical: {}",
            outputs[0].len(),
            outputs[1].len(),
            outputs[0] == outputs[1]
        ),
    );
}

fn main() -> ExitCode {
    let mut report = Report { failures: 0 };
    random_suite(&mut report);
    reference_configs(&mut report);
    mds_oracle(&mut report);
    hull_scaling(&mut report);
    delaunay_check(&mut report);
    cli_determinism(&mut report);
    if report.failures == 0 {
        println!("all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("{} criteria failed", report.failures);
        ExitCode::FAILURE
    }
}
