//! Backend-agnostic collision detection and contact-point projection.
//!
//! A point `p` collides when `f(p) < epsilon`. It is moved to
//! `p + (epsilon - f(p)) * n(p)` where `n` is the unit field gradient, which
//! points outward because the interior is negative.

mod analytic;
mod provider;
mod transform;

pub use analytic::{BoxSdf, SphereSdf};
pub use provider::{ModelFrame, SdfProvider};
pub use transform::{RigidTransform, Transformed};

use serde::{Deserialize, Serialize};

use crate::geometry::NormalizationTransform;
use crate::{Error, Result, Vec3};

/// Gradients shorter than this are treated as undefined.
pub const MIN_GRADIENT_NORM: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollisionConfig {
    /// Contact offset, in the provider's length units.
    pub epsilon: f64,
    pub max_projection_iters: usize,
}

impl Default for CollisionConfig {
    /// One millimetre in model (meter) units, one projection step.
    fn default() -> Self {
        Self {
            epsilon: 1e-3,
            max_projection_iters: 1,
        }
    }
}

impl CollisionConfig {
    pub fn new(epsilon: f64, max_projection_iters: usize) -> Result<Self> {
        let cfg = Self {
            epsilon,
            max_projection_iters,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Epsilon given in millimetres, expressed in the normalized frame.
    pub fn normalized_mm(epsilon_mm: f64, norm: &NormalizationTransform, max_projection_iters: usize) -> Result<Self> {
        Self::new(norm.length_to_normalized(epsilon_mm * 1e-3), max_projection_iters)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::Config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub collided: Vec<bool>,
    pub distances: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContactResult {
    pub collided: Vec<bool>,
    /// `f(p)` at detection time.
    pub distances: Vec<f64>,
    /// Every input point; untouched where `collided` is false.
    pub resolved: Vec<Vec3>,
    /// `epsilon - f(p)` at detection time, zero for free points.
    pub penetration: Vec<f64>,
    /// Collided points left in place because the gradient vanished.
    pub degenerate: Vec<bool>,
}

impl ContactResult {
    pub fn collided_count(&self) -> usize {
        self.collided.iter().filter(|&&c| c).count()
    }
}

pub fn detect(provider: &dyn SdfProvider, points: &[Vec3], cfg: &CollisionConfig) -> Detection {
    let distances = provider.distance(points);
    let collided = distances.iter().map(|&d| d < cfg.epsilon).collect();
    Detection {
        collided,
        distances,
    }
}

/// Projects colliding points onto the `epsilon` offset surface, iterating up
/// to `max_projection_iters` times while they stay inside it.
pub fn resolve(provider: &dyn SdfProvider, points: &[Vec3], cfg: &CollisionConfig) -> ContactResult {
    let detection = detect(provider, points, cfg);
    let mut resolved = points.to_vec();
    let mut degenerate = vec![false; points.len()];
    let penetration = detection
        .distances
        .iter()
        .zip(&detection.collided)
        .map(|(&d, &c)| if c { cfg.epsilon - d } else { 0.0 })
        .collect();

    let mut active: Vec<usize> = (0..points.len()).filter(|&i| detection.collided[i]).collect();
    let mut batch: Vec<Vec3> = Vec::with_capacity(active.len());
    for _ in 0..cfg.max_projection_iters {
        if active.is_empty() {
            break;
        }
        batch.clear();
        batch.extend(active.iter().map(|&i| resolved[i]));
        let (dist, grad) = provider.distance_gradient(&batch);

        let mut still = Vec::with_capacity(active.len());
        for (k, &i) in active.iter().enumerate() {
            if dist[k] >= cfg.epsilon {
                continue;
            }
            let g = grad[k];
            let len = g.norm();
            if !(len >= MIN_GRADIENT_NORM) {
                degenerate[i] = true;
                continue;
            }
            resolved[i] += (cfg.epsilon - dist[k]) * (g / len);
            still.push(i);
        }
        active = still;
    }

    ContactResult {
        collided: detection.collided,
        distances: detection.distances,
        resolved,
        penetration,
        degenerate,
    }
}

/// Contact point `p + (epsilon - f(p)) n(p)` for every point, collided or
/// not; points with a vanishing gradient are returned unchanged. This is the
/// unconditional per-query cost of the projection.
pub fn contact_points(provider: &dyn SdfProvider, points: &[Vec3], epsilon: f64) -> Vec<Vec3> {
    let (dist, grad) = provider.distance_gradient(points);
    points
        .iter()
        .zip(dist.iter().zip(&grad))
        .map(|(p, (&d, g))| {
            let len = g.norm();
            if len >= MIN_GRADIENT_NORM {
                p + (epsilon - d) * (g / len)
            } else {
                *p
            }
        })
        .collect()
}
