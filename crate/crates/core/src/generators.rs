//! Synthetic point clouds: a hollow shell, two overlapping hollow shells
//! with a shared cavity, and a solid ball for timing runs.
//!
//! All generators draw from ChaCha8 seeded with the `seed` field, so a given
//! description produces the same cloud on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{LesError, Result};
use crate::geometry::{distance_point_point, Point3, PointCloud};

/// Attempts allowed per accepted point before rejection sampling gives up.
const MAX_ATTEMPTS_PER_POINT: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShellSpec {
    pub n: usize,
    pub radius: f64,
    /// Half-width of the uniform radial jitter.
    pub noise: f64,
    pub seed: u64,
}

impl Default for ShellSpec {
    fn default() -> Self {
        ShellSpec {
            n: 2000,
            radius: 1.0,
            noise: 0.02,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoSphereSpec {
    pub n_per_sphere: usize,
    pub radius: f64,
    /// Displacement between the two centres; they sit at `±offset / 2`.
    pub offset: Point3,
    pub noise: f64,
    pub seed: u64,
}

impl Default for TwoSphereSpec {
    fn default() -> Self {
        TwoSphereSpec {
            n_per_sphere: 1000,
            radius: 1.0,
            offset: Point3::new(1.0, 0.0, 0.0),
            noise: 0.02,
            seed: 1,
        }
    }
}

fn check_shell_params(radius: f64, noise: f64) -> Result<()> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(LesError::InvalidInput(format!(
            "radius must be positive and finite, got {radius}"
        )));
    }
    if !(noise.is_finite() && noise >= 0.0 && noise < radius) {
        return Err(LesError::InvalidInput(format!(
            "noise must satisfy 0 <= noise < radius, got {noise}"
        )));
    }
    Ok(())
}

impl ShellSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n < 4 {
            return Err(LesError::InvalidInput(format!(
                "shell needs n >= 4 points, got {}",
                self.n
            )));
        }
        check_shell_params(self.radius, self.noise)
    }
}

impl TwoSphereSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_per_sphere < 2 {
            return Err(LesError::InvalidInput(format!(
                "two-sphere cloud needs n_per_sphere >= 2, got {}",
                self.n_per_sphere
            )));
        }
        check_shell_params(self.radius, self.noise)?;
        if !self.offset.is_finite() || self.offset.norm() >= 2.0 * self.radius {
            return Err(LesError::InvalidInput(format!(
                "|offset| = {} must be below 2 * radius = {}",
                self.offset.norm(),
                2.0 * self.radius
            )));
        }
        Ok(())
    }

    pub fn centers(&self) -> [Point3; 2] {
        let half = self.offset * 0.5;
        [-half, half]
    }
}

/// Area-uniform direction from a normalized Gaussian triple.
fn unit_vector(rng: &mut ChaCha8Rng) -> Point3 {
    loop {
        let v = Point3::new(
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        );
        let len = v.norm();
        if len > 1e-12 {
            return v * (1.0 / len);
        }
    }
}

fn shell_point(rng: &mut ChaCha8Rng, center: Point3, radius: f64, noise: f64) -> Point3 {
    let dir = unit_vector(rng);
    let jitter = if noise > 0.0 {
        rng.random_range(-noise..=noise)
    } else {
        0.0
    };
    center + dir * (radius + jitter)
}

pub fn gen_shell(spec: &ShellSpec) -> Result<PointCloud> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let pts = (0..spec.n)
        .map(|_| shell_point(&mut rng, Point3::ORIGIN, spec.radius, spec.noise))
        .collect();
    PointCloud::new(pts)
}

/// Two shells at `±offset / 2`. A sample landing strictly inside the other
/// sphere is rejected and redrawn, so only the outer surface of the union
/// is sampled. Points of the first shell come first.
pub fn gen_two_spheres(spec: &TwoSphereSpec) -> Result<PointCloud> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let centers = spec.centers();
    let mut pts = Vec::with_capacity(2 * spec.n_per_sphere);
    for (own, other) in [(centers[0], centers[1]), (centers[1], centers[0])] {
        let mut accepted = 0;
        let mut attempts = 0;
        while accepted < spec.n_per_sphere {
            attempts += 1;
            if attempts > MAX_ATTEMPTS_PER_POINT * spec.n_per_sphere {
                return Err(LesError::InvalidInput(
                    "rejection sampling could not place enough points outside the other sphere"
                        .into(),
                ));
            }
            let p = shell_point(&mut rng, own, spec.radius, spec.noise);
            if distance_point_point(p, other) < spec.radius {
                continue;
            }
            pts.push(p);
            accepted += 1;
        }
    }
    PointCloud::new(pts)
}

/// Uniform samples from the solid ball, used for hull timing runs.
pub fn gen_ball(n: usize, radius: f64, seed: u64) -> Result<PointCloud> {
    if n < 4 {
        return Err(LesError::InvalidInput(format!(
            "ball needs n >= 4, got {n}"
        )));
    }
    check_shell_params(radius, 0.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts = (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            unit_vector(&mut rng) * (radius * u.cbrt())
        })
        .collect();
    PointCloud::new(pts)
}
