//! Regular-grid signed distance field: `N^3` float32 node values with
//! trilinear queries and optional precomputed unit gradients.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::collision::SdfProvider;
use crate::geometry::Aabb;
use crate::sampling::ByteReader;
use crate::{Error, Result, Vec3};

pub const VOXEL_MAGIC: &[u8; 4] = b"VSDF";
pub const VOXEL_VERSION: u32 = 1;
const FLAG_GRADIENTS: u32 = 1;
/// Magic, version, N, bbox, flags.
pub const VOXEL_HEADER_BYTES: usize = 4 + 4 + 4 + 24 + 4;

#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    n: usize,
    bbox: Aabb,
    spacing: Vec3,
    /// Node values, x fastest and z slowest.
    values: Vec<f32>,
    gradients: Option<Vec<[f32; 3]>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoxelSample {
    pub value: f64,
    /// The query point was outside the grid and was clamped to it.
    pub clamped: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoxelGradient {
    pub gradient: Vec3,
    /// A one-sided difference (or clamped lookup) was needed near the border.
    pub border: bool,
}

fn round_f32(v: Vec3) -> Vec3 {
    v.map(|c| c as f32 as f64)
}

impl VoxelGrid {
    /// Wraps explicit node values (x fastest). The bbox is rounded to `f32`,
    /// the precision stored in grid files.
    pub fn from_values(n: usize, bbox: Aabb, values: Vec<f32>) -> Result<Self> {
        if n < 2 {
            return Err(Error::Config(format!("grid resolution must be at least 2, got {n}")));
        }
        if values.len() != n * n * n {
            return Err(Error::Config(format!("expected {} values, got {}", n * n * n, values.len())));
        }
        let bbox = Aabb {
            min: round_f32(bbox.min),
            max: round_f32(bbox.max),
        };
        let extent = bbox.extent();
        if extent.iter().any(|&e| !(e > 0.0)) {
            return Err(Error::Config("grid bounding box has zero extent".into()));
        }
        Ok(Self {
            n,
            bbox,
            spacing: extent / (n - 1) as f64,
            values,
            gradients: None,
        })
    }

    /// Samples `provider` at every node. With `with_gradients`, also stores
    /// normalized central differences of the node values.
    pub fn build(provider: &dyn SdfProvider, n: usize, bbox: Aabb, with_gradients: bool) -> Result<Self> {
        let mut grid = Self::from_values(n, bbox, vec![0.0; n * n * n])?;
        // one z-slab per batch keeps the point buffer small at N = 256
        for k in 0..n {
            let pts: Vec<Vec3> = (0..n * n).map(|ij| grid.node(ij % n, ij / n, k)).collect();
            let d = provider.distance(&pts);
            for (dst, v) in grid.values[k * n * n..(k + 1) * n * n].iter_mut().zip(d) {
                *dst = v as f32;
            }
        }
        if with_gradients {
            grid.compute_gradients();
        }
        Ok(grid)
    }

    pub fn resolution(&self) -> usize {
        self.n
    }

    pub fn bbox(&self) -> &Aabb {
        &self.bbox
    }

    pub fn spacing(&self) -> Vec3 {
        self.spacing
    }

    /// Length of a cell diagonal.
    pub fn cell_diagonal(&self) -> f64 {
        self.spacing.norm()
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn has_gradients(&self) -> bool {
        self.gradients.is_some()
    }

    pub fn node_count(&self) -> usize {
        self.values.len()
    }

    /// Bytes of grid data: 4 per node, 16 per node with gradients.
    pub fn payload_bytes(&self) -> usize {
        let per_node = if self.has_gradients() { 16 } else { 4 };
        per_node * self.values.len()
    }

    pub fn file_bytes(&self) -> usize {
        VOXEL_HEADER_BYTES + self.payload_bytes()
    }

    pub fn node(&self, i: usize, j: usize, k: usize) -> Vec3 {
        self.bbox.min + Vec3::new(i as f64, j as f64, k as f64).component_mul(&self.spacing)
    }

    fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.n + j) * self.n + i
    }

    pub fn value_at(&self, i: usize, j: usize, k: usize) -> f32 {
        self.values[self.index(i, j, k)]
    }

    fn compute_gradients(&mut self) {
        let n = self.n;
        let grads = (0..n * n * n)
            .into_par_iter()
            .map(|idx| {
                let (i, j, k) = (idx % n, (idx / n) % n, idx / (n * n));
                let at = [i, j, k];
                let mut g = Vec3::zeros();
                for a in 0..3 {
                    let (lo, hi) = (at[a].saturating_sub(1), (at[a] + 1).min(n - 1));
                    let (mut l, mut h) = (at, at);
                    l[a] = lo;
                    h[a] = hi;
                    let dv = self.value_at(h[0], h[1], h[2]) as f64 - self.value_at(l[0], l[1], l[2]) as f64;
                    g[a] = dv / ((hi - lo) as f64 * self.spacing[a]);
                }
                let len = g.norm();
                let g = if len > 0.0 { g / len } else { g };
                [g.x as f32, g.y as f32, g.z as f32]
            })
            .collect();
        self.gradients = Some(grads);
    }

    /// Cell index and fractional position along each axis, clamped to the grid.
    fn locate(&self, p: &Vec3) -> ([usize; 3], Vec3, bool) {
        let mut cell = [0; 3];
        let mut frac = Vec3::zeros();
        let mut clamped = false;
        for a in 0..3 {
            let mut t = (p[a] - self.bbox.min[a]) / self.spacing[a];
            let top = (self.n - 1) as f64;
            if !(t >= 0.0) || t > top {
                clamped = true;
                t = if t > top { top } else { 0.0 };
            }
            let c = (t.floor() as usize).min(self.n - 2);
            cell[a] = c;
            frac[a] = t - c as f64;
        }
        (cell, frac, clamped)
    }

    fn blend<T>(&self, cell: [usize; 3], f: Vec3, get: impl Fn(usize) -> T) -> T
    where
        T: std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
    {
        let [i, j, k] = cell;
        let lerp = |a: T, b: T, t: f64| a * (1.0 - t) + b * t;
        let at = |di, dj, dk| get(self.index(i + di, j + dj, k + dk));
        let x00 = lerp(at(0, 0, 0), at(1, 0, 0), f.x);
        let x10 = lerp(at(0, 1, 0), at(1, 1, 0), f.x);
        let x01 = lerp(at(0, 0, 1), at(1, 0, 1), f.x);
        let x11 = lerp(at(0, 1, 1), at(1, 1, 1), f.x);
        lerp(lerp(x00, x10, f.y), lerp(x01, x11, f.y), f.z)
    }

    /// Trilinear interpolation of the 8 surrounding nodes. Points outside the
    /// grid are clamped to its boundary and flagged.
    pub fn query_trilinear(&self, p: &Vec3) -> VoxelSample {
        let (cell, frac, clamped) = self.locate(p);
        let value = self.blend(cell, frac, |idx| self.values[idx] as f64);
        VoxelSample { value, clamped }
    }

    /// Interpolated stored gradient (renormalized) when present, otherwise
    /// central differences of the trilinear field with step `h`; one-sided
    /// near the border.
    pub fn gradient(&self, p: &Vec3) -> VoxelGradient {
        if let Some(grads) = &self.gradients {
            let (cell, frac, clamped) = self.locate(p);
            let g = self.blend(cell, frac, |idx| {
                let g = grads[idx];
                Vec3::new(g[0] as f64, g[1] as f64, g[2] as f64)
            });
            let len = g.norm();
            let gradient = if len > 0.0 { g / len } else { g };
            return VoxelGradient { gradient, border: clamped };
        }
        let mut gradient = Vec3::zeros();
        let mut border = false;
        for a in 0..3 {
            let h = self.spacing[a];
            let mut lo = *p;
            let mut hi = *p;
            lo[a] = (p[a] - h).max(self.bbox.min[a]);
            hi[a] = (p[a] + h).min(self.bbox.max[a]);
            if hi[a] - lo[a] < 2.0 * h {
                border = true;
            }
            if !(hi[a] > lo[a]) {
                continue;
            }
            let f_hi = self.query_trilinear(&hi).value;
            let f_lo = self.query_trilinear(&lo).value;
            gradient[a] = (f_hi - f_lo) / (hi[a] - lo[a]);
        }
        VoxelGradient { gradient, border }
    }

    /// `VSDF` | version u32 | N u32 | bbox min, max (6 x f32) | flags u32 |
    /// values (z-major, x fastest) | optional gradients (3 x f32 per node).
    /// All little-endian.
    pub fn write(&self, w: impl Write) -> Result<()> {
        let mut w = BufWriter::new(w);
        w.write_all(VOXEL_MAGIC)?;
        w.write_all(&VOXEL_VERSION.to_le_bytes())?;
        w.write_all(&(self.n as u32).to_le_bytes())?;
        for v in self.bbox.min.iter().chain(self.bbox.max.iter()) {
            w.write_all(&(*v as f32).to_le_bytes())?;
        }
        let flags = if self.has_gradients() { FLAG_GRADIENTS } else { 0 };
        w.write_all(&flags.to_le_bytes())?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        if let Some(grads) = &self.gradients {
            for g in grads.iter().flatten() {
                w.write_all(&g.to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read(mut r: impl Read) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        let mut r = ByteReader::new(&bytes);
        if r.take(4)? != VOXEL_MAGIC {
            return Err(Error::Format("not a VSDF grid".into()));
        }
        let version = r.u32()?;
        if version != VOXEL_VERSION {
            return Err(Error::Format(format!("unsupported grid version {version}")));
        }
        let n = r.u32()? as usize;
        let mut corners = [0.0; 6];
        for c in &mut corners {
            *c = r.f32()? as f64;
        }
        let flags = r.u32()?;
        let nodes = n.checked_pow(3).ok_or_else(|| Error::Format("grid resolution overflows".into()))?;
        let per_node = if flags & FLAG_GRADIENTS != 0 { 16 } else { 4 };
        if r.remaining() != nodes * per_node {
            return Err(Error::Format(format!(
                "expected {} payload bytes, found {}",
                nodes * per_node,
                r.remaining()
            )));
        }
        let values = (0..nodes).map(|_| r.f32()).collect::<Result<Vec<_>>>()?;
        let bbox = Aabb {
            min: Vec3::new(corners[0], corners[1], corners[2]),
            max: Vec3::new(corners[3], corners[4], corners[5]),
        };
        let mut grid = Self::from_values(n, bbox, values).map_err(|e| Error::Format(e.to_string()))?;
        if flags & FLAG_GRADIENTS != 0 {
            let grads = (0..nodes)
                .map(|_| Ok([r.f32()?, r.f32()?, r.f32()?]))
                .collect::<Result<Vec<_>>>()?;
            grid.gradients = Some(grads);
        }
        Ok(grid)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write(File::create(path)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read(BufReader::new(crate::error::open(path.as_ref())?))
    }
}

impl SdfProvider for VoxelGrid {
    fn distance(&self, points: &[Vec3]) -> Vec<f64> {
        points.par_iter().map(|p| self.query_trilinear(p).value).collect()
    }

    fn gradient(&self, points: &[Vec3]) -> Vec<Vec3> {
        points.par_iter().map(|p| self.gradient(p).gradient).collect()
    }

    fn distance_gradient(&self, points: &[Vec3]) -> (Vec<f64>, Vec<Vec3>) {
        points
            .par_iter()
            .map(|p| (self.query_trilinear(p).value, self.gradient(p).gradient))
            .unzip()
    }

    fn size_bytes(&self) -> usize {
        self.payload_bytes()
    }

    fn label(&self) -> String {
        format!("voxel{}", self.n)
    }
}
