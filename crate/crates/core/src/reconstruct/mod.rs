//! Surface extraction from distance providers and fidelity metrics.

pub mod marching_cubes;

use std::fmt;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::collision::SdfProvider;
use crate::geometry::{Aabb, Bvh, MeshSdf, NormalizationTransform, TriangleMesh};
use crate::sampling::{sample_near_surface, surface_points};
use crate::{Error, Result, Vec3};

use marching_cubes::{extract, ScalarGrid};

/// Extracts the `iso` level set of `provider` on a grid with `resolution`
/// nodes per axis spanning `bbox`.
pub fn marching_cubes(provider: &dyn SdfProvider, resolution: usize, bbox: &Aabb, iso: f64) -> Result<TriangleMesh> {
    if resolution < 8 {
        return Err(Error::Config(format!("resolution must be at least 8, got {resolution}")));
    }
    let spacing = bbox.extent() / (resolution - 1) as f64;
    let grid = ScalarGrid::sample([resolution; 3], bbox.min, spacing, |pts| provider.distance(pts));
    Ok(extract(&grid, iso))
}

/// Symmetric chamfer distance: the mean of the two mean point-to-surface
/// distances from `n` area-weighted samples on each mesh.
pub fn chamfer_distance(a: &TriangleMesh, b: &TriangleMesh, n: usize, seed: u64) -> Result<f64> {
    let bvh_a = Bvh::build(a)?;
    let bvh_b = Bvh::build(b)?;
    let one_way = |from: &TriangleMesh, to: &TriangleMesh, bvh: &Bvh, seed: u64| -> f64 {
        let pts = surface_points(from, n, seed);
        let total: f64 = pts.par_iter().map(|p| bvh.closest_point(to, p).distance).sum();
        total / pts.len().max(1) as f64
    };
    Ok(0.5 * (one_way(a, b, &bvh_b, seed) + one_way(b, a, &bvh_a, seed.wrapping_add(1))))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyConfig {
    pub test_samples: usize,
    /// Near-surface offset standard deviation, normalized units.
    pub margin: f64,
    /// Keep disjoint from the training seed.
    pub seed: u64,
    /// Marching-cubes resolution for the chamfer metric; `None` skips it.
    pub resolution: Option<usize>,
    pub chamfer_samples: usize,
}

impl Default for AccuracyConfig {
    fn default() -> Self {
        Self {
            test_samples: 10_000,
            margin: 0.05,
            seed: 0x5eed_7e57,
            resolution: None,
            chamfer_samples: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconReport {
    pub backend: String,
    pub test_samples: usize,
    pub mean_error: f64,
    pub max_error: f64,
    pub mean_error_mm: f64,
    pub max_error_mm: f64,
    pub bbox_diagonal: f64,
    pub resolution: Option<usize>,
    pub chamfer: Option<f64>,
    pub chamfer_mm: Option<f64>,
}

impl ReconReport {
    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

impl fmt::Display for ReconReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "backend         {}", self.backend)?;
        writeln!(f, "test samples    {}", self.test_samples)?;
        writeln!(f, "mean |error|    {:.3e}  ({:.4} mm)", self.mean_error, self.mean_error_mm)?;
        writeln!(f, "max |error|     {:.3e}  ({:.4} mm)", self.max_error, self.max_error_mm)?;
        writeln!(f, "bbox diagonal   {:.4}", self.bbox_diagonal)?;
        match (self.chamfer, self.chamfer_mm, self.resolution) {
            (Some(c), Some(mm), Some(r)) => write!(f, "chamfer @ {r:<5} {c:.3e}  ({mm:.4} mm)"),
            _ => write!(f, "chamfer         -"),
        }
    }
}

/// Compares `provider` with the exact oracle on fresh near-surface samples
/// (normalized units) and optionally reconstructs its zero level set for a
/// chamfer comparison against the oracle mesh.
pub fn evaluate_accuracy(
    provider: &dyn SdfProvider,
    oracle: &MeshSdf,
    norm: &NormalizationTransform,
    cfg: &AccuracyConfig,
) -> Result<ReconReport> {
    let samples = sample_near_surface(oracle, cfg.test_samples, cfg.margin, cfg.seed);
    let pts: Vec<Vec3> = samples.iter().map(|s| s.point()).collect();
    let exact: Vec<f64> = pts.par_iter().map(|p| oracle.signed_distance(p)).collect();
    let pred = provider.distance(&pts);
    let errors: Vec<f64> = pred.iter().zip(&exact).map(|(a, b)| (a - b).abs()).collect();
    let mean_error = errors.iter().sum::<f64>() / errors.len().max(1) as f64;
    let max_error = errors.iter().cloned().fold(0.0, f64::max);
    let (lo, hi) = oracle.mesh().bounding_box();

    let (chamfer, resolution) = match cfg.resolution {
        Some(res) => {
            let mesh = marching_cubes(provider, res, &crate::sampling::sampling_box(), 0.0)?;
            if mesh.is_empty() {
                return Err(Error::EmptyMesh);
            }
            (Some(chamfer_distance(&mesh, oracle.mesh(), cfg.chamfer_samples, cfg.seed)?), Some(res))
        }
        None => (None, None),
    };

    Ok(ReconReport {
        backend: provider.label(),
        test_samples: errors.len(),
        mean_error,
        max_error,
        mean_error_mm: norm.length_to_mm(mean_error),
        max_error_mm: norm.length_to_mm(max_error),
        bbox_diagonal: (hi - lo).norm(),
        resolution,
        chamfer,
        chamfer_mm: chamfer.map(|c| norm.length_to_mm(c)),
    })
}
