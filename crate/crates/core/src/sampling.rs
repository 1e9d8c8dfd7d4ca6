//! Labelled training and evaluation samples for neural SDFs.
//!
//! Most samples sit near the surface (area-weighted surface points displaced
//! by isotropic Gaussian noise), the rest are uniform in the sampling box.
//! Every label comes from the exact mesh oracle.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{Aabb, MeshSdf, NormalizationTransform, TriangleMesh};
use crate::{Error, Result, Vec3};

/// Half-width of the cube (normalized units) used for uniform samples and
/// voxel grids: the `[-1, 1]` unit box padded by 20%.
pub const SAMPLE_BOX_HALF: f64 = 1.2;

pub const VALIDATION_FRACTION: f64 = 0.05;

pub const DATASET_MAGIC: &[u8; 4] = b"SDFD";
pub const DATASET_VERSION: u32 = 1;

pub fn sampling_box() -> Aabb {
    Aabb {
        min: Vec3::repeat(-SAMPLE_BOX_HALF),
        max: Vec3::repeat(SAMPLE_BOX_HALF),
    }
}

/// Point and signed distance, stored at the precision written to disk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdfSample {
    pub p: [f32; 3],
    pub d: f32,
}

impl SdfSample {
    pub fn new(p: Vec3, d: f64) -> Self {
        Self {
            p: [p.x as f32, p.y as f32, p.z as f32],
            d: d as f32,
        }
    }

    pub fn point(&self) -> Vec3 {
        Vec3::new(self.p[0] as f64, self.p[1] as f64, self.p[2] as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub total: usize,
    /// Fraction of near-surface samples.
    pub near_ratio: f64,
    /// Standard deviation of the near-surface offset, in model units (m).
    pub margin: f64,
    pub seed: u64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            total: 1_000_000,
            near_ratio: 0.8,
            margin: 0.005,
            seed: 0,
        }
    }
}

impl SamplingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.near_ratio) {
            return Err(Error::Config(format!("near_ratio {} outside [0, 1]", self.near_ratio)));
        }
        if !(self.margin > 0.0) {
            return Err(Error::Config(format!("margin must be positive, got {}", self.margin)));
        }
        Ok(())
    }

    pub fn near_count(&self) -> usize {
        (self.total as f64 * self.near_ratio).round() as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdfDataset {
    pub train: Vec<SdfSample>,
    pub validation: Vec<SdfSample>,
    pub norm: NormalizationTransform,
    pub config: SamplingConfig,
}

impl SdfDataset {
    pub fn from_parts(
        train: Vec<SdfSample>,
        validation: Vec<SdfSample>,
        norm: NormalizationTransform,
        config: SamplingConfig,
    ) -> Self {
        Self {
            train,
            validation,
            norm,
            config,
        }
    }

    pub fn len(&self) -> usize {
        self.train.len() + self.validation.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn samples(&self) -> impl Iterator<Item = &SdfSample> {
        self.train.iter().chain(&self.validation)
    }
}

fn label(oracle: &MeshSdf, points: Vec<Vec3>) -> Vec<SdfSample> {
    points
        .into_par_iter()
        .map(|p| {
            // label the point as it will be stored
            let stored = SdfSample::new(p, 0.0).point();
            SdfSample::new(stored, oracle.signed_distance(&stored))
        })
        .collect()
}

/// Area-weighted uniform points on the surface of `mesh`.
pub fn surface_points(mesh: &TriangleMesh, n: usize, seed: u64) -> Vec<Vec3> {
    if n == 0 || mesh.is_empty() {
        return Vec::new();
    }
    let mut cumulative = Vec::with_capacity(mesh.triangle_count());
    let mut acc = 0.0;
    for t in 0..mesh.triangle_count() {
        acc += mesh.area(t);
        cumulative.push(acc);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    (0..n)
        .map(|_| {
            let pick = rng.random::<f64>() * acc;
            let t = cumulative.partition_point(|&c| c < pick).min(cumulative.len() - 1);
            let [a, b, c] = mesh.corners(t);
            let r1: f64 = rng.random::<f64>().sqrt();
            let r2: f64 = rng.random();
            a * (1.0 - r1) + b * (r1 * (1.0 - r2)) + c * (r1 * r2)
        })
        .collect()
}

/// Area-weighted surface points plus isotropic Gaussian offsets with
/// standard deviation `margin` (normalized units).
pub fn sample_near_surface(oracle: &MeshSdf, n: usize, margin: f64, seed: u64) -> Vec<SdfSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2);
    let points = surface_points(oracle.mesh(), n, seed)
        .into_iter()
        .map(|p| {
            let mut g = || -> f64 { StandardNormal.sample(&mut rng) };
            p + margin * Vec3::new(g(), g(), g())
        })
        .collect();
    label(oracle, points)
}

/// Uniform samples in the sampling box.
pub fn sample_uniform(oracle: &MeshSdf, n: usize, seed: u64) -> Vec<SdfSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(3);
    let points = (0..n)
        .map(|_| {
            Vec3::from_fn(|_, _| rng.random_range(-SAMPLE_BOX_HALF..SAMPLE_BOX_HALF))
        })
        .collect();
    label(oracle, points)
}

/// Near-surface and uniform samples per `cfg`, shuffled, with the last 5%
/// held out for validation. `oracle` is built on the normalized mesh and
/// `norm` converts `cfg.margin` from model units.
pub fn build_dataset(oracle: &MeshSdf, norm: &NormalizationTransform, cfg: &SamplingConfig) -> Result<SdfDataset> {
    cfg.validate()?;
    let near_n = cfg.near_count();
    let margin = norm.length_to_normalized(cfg.margin);
    let mut samples = sample_near_surface(oracle, near_n, margin, cfg.seed);
    samples.extend(sample_uniform(oracle, cfg.total - near_n, cfg.seed));

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(4);
    samples.shuffle(&mut rng);
    let validation_n = (samples.len() as f64 * VALIDATION_FRACTION).round() as usize;
    let validation = samples.split_off(samples.len() - validation_n);
    Ok(SdfDataset {
        train: samples,
        validation,
        norm: *norm,
        config: cfg.clone(),
    })
}

#[derive(Serialize, Deserialize)]
struct DatasetHeader {
    train_count: usize,
    sampling: SamplingConfig,
}

/// `SDFD` | version u32 | count u64 | scale, offset (4 x f32) | JSON length
/// u32 | JSON | count x (x, y, z, d) f32. All little-endian; training records
/// come first.
pub fn write_dataset(dataset: &SdfDataset, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(DATASET_MAGIC)?;
    w.write_all(&DATASET_VERSION.to_le_bytes())?;
    w.write_all(&(dataset.len() as u64).to_le_bytes())?;
    let n = &dataset.norm;
    for v in [n.scale, n.offset[0], n.offset[1], n.offset[2]] {
        w.write_all(&(v as f32).to_le_bytes())?;
    }
    let header = serde_json::to_vec(&DatasetHeader {
        train_count: dataset.train.len(),
        sampling: dataset.config.clone(),
    })?;
    w.write_all(&(header.len() as u32).to_le_bytes())?;
    w.write_all(&header)?;
    for s in dataset.samples() {
        for v in [s.p[0], s.p[1], s.p[2], s.d] {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<SdfDataset> {
    let mut bytes = Vec::new();
    BufReader::new(crate::error::open(path.as_ref())?).read_to_end(&mut bytes)?;
    let mut r = ByteReader::new(&bytes);
    if r.take(4)? != DATASET_MAGIC {
        return Err(Error::Format("not an SDFD dataset".into()));
    }
    let version = r.u32()?;
    if version != DATASET_VERSION {
        return Err(Error::Format(format!("unsupported dataset version {version}")));
    }
    let count = r.u64()? as usize;
    let scale = r.f32()? as f64;
    let offset = [r.f32()? as f64, r.f32()? as f64, r.f32()? as f64];
    let json_len = r.u32()? as usize;
    let header: DatasetHeader = serde_json::from_slice(r.take(json_len)?)?;
    if header.train_count > count {
        return Err(Error::Format("train count exceeds record count".into()));
    }
    let mut samples = Vec::with_capacity(count);
    for _ in 0..count {
        samples.push(SdfSample {
            p: [r.f32()?, r.f32()?, r.f32()?],
            d: r.f32()?,
        });
    }
    let validation = samples.split_off(header.train_count);
    Ok(SdfDataset {
        train: samples,
        validation,
        norm: NormalizationTransform { scale, offset },
        config: header.sampling,
    })
}

/// Bounds-checked little-endian cursor shared by the binary formats.
pub(crate) struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    pub(crate) fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Format("file is truncated".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    pub(crate) fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub(crate) fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub(crate) fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub(crate) fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::normalize;
    use crate::shapes;

    fn sphere_oracle() -> MeshSdf {
        MeshSdf::new(shapes::icosphere(4, 1.0)).unwrap()
    }

    #[test]
    fn empty_requests() {
        let o = sphere_oracle();
        assert!(sample_near_surface(&o, 0, 0.01, 1).is_empty());
        assert!(sample_uniform(&o, 0, 1).is_empty());
    }

    #[test]
    fn near_surface_offset_statistics() {
        let o = sphere_oracle();
        let s = sample_near_surface(&o, 4000, 0.01, 7);
        let mean = s.iter().map(|x| x.d.abs() as f64).sum::<f64>() / s.len() as f64;
        // |d| of an isotropic offset is the normal component: half-normal mean
        let expected = 0.01 * (2.0 / std::f64::consts::PI).sqrt();
        assert!((mean - expected).abs() < 0.2 * expected, "mean {mean} vs {expected}");
        let within = s.iter().filter(|x| x.d.abs() <= 0.04).count();
        assert!(within as f64 >= 0.99 * s.len() as f64);
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let o = sphere_oracle();
        assert_eq!(sample_near_surface(&o, 300, 0.01, 3), sample_near_surface(&o, 300, 0.01, 3));
        assert_eq!(sample_uniform(&o, 300, 3), sample_uniform(&o, 300, 3));
    }

    #[test]
    fn uniform_inside_fraction_matches_volume() {
        let (cube, _) = normalize(&shapes::cube(Vec3::zeros(), 1.0)).unwrap();
        let o = MeshSdf::new(cube).unwrap();
        let s = sample_uniform(&o, 1000, 11);
        let inside = s.iter().filter(|x| x.d < 0.0).count() as f64 / 1000.0;
        let ratio = (1.8f64 / (2.0 * SAMPLE_BOX_HALF)).powi(3);
        assert!((inside - ratio).abs() < 0.05, "{inside} vs {ratio}");
        let diag = 2.0 * SAMPLE_BOX_HALF * 3f64.sqrt();
        assert!(s.iter().all(|x| x.d.is_finite() && (x.d.abs() as f64) <= diag));
    }

    #[test]
    fn dataset_split_and_ratio() {
        let (mesh, norm) = normalize(&shapes::icosphere(3, 0.1)).unwrap();
        let o = MeshSdf::new(mesh).unwrap();
        let cfg = SamplingConfig {
            total: 2000,
            near_ratio: 0.8,
            margin: 0.005,
            seed: 5,
        };
        assert_eq!(cfg.near_count(), 1600);
        let ds = build_dataset(&o, &norm, &cfg).unwrap();
        assert_eq!(ds.len(), 2000);
        assert_eq!(ds.validation.len(), 100);

        let all_near = build_dataset(&o, &norm, &SamplingConfig { near_ratio: 1.0, ..cfg.clone() }).unwrap();
        let margin = norm.length_to_normalized(cfg.margin);
        assert!(all_near.samples().all(|s| s.d.abs() < 8.0 * margin as f32));

        let other = build_dataset(&o, &norm, &SamplingConfig { seed: 6, ..cfg.clone() }).unwrap();
        assert_ne!(ds.train, other.train);
    }

    #[test]
    fn labels_match_oracle() {
        let o = sphere_oracle();
        let s = sample_near_surface(&o, 100, 0.02, 9);
        for x in &s {
            assert!((o.signed_distance(&x.point()) - x.d as f64).abs() < 1e-6);
        }
    }

    #[test]
    fn file_round_trip_and_truncation() {
        let (mesh, norm) = normalize(&shapes::icosphere(2, 0.1)).unwrap();
        let o = MeshSdf::new(mesh).unwrap();
        let cfg = SamplingConfig { total: 500, seed: 1, ..Default::default() };
        let ds = build_dataset(&o, &norm, &cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.sdfd");
        write_dataset(&ds, &p).unwrap();
        let back = read_dataset(&p).unwrap();
        assert_eq!(back.train, ds.train);
        assert_eq!(back.validation, ds.validation);
        assert_eq!(back.config, ds.config);

        let bytes = std::fs::read(&p).unwrap();
        std::fs::write(&p, &bytes[..bytes.len() - 3]).unwrap();
        assert!(read_dataset(&p).is_err());
        std::fs::write(&p, b"NOPE0000").unwrap();
        assert!(read_dataset(&p).is_err());
    }
}
