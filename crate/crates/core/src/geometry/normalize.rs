use serde::{Deserialize, Serialize};

use super::mesh::TriangleMesh;
use crate::{Error, Result, Vec3};

/// Half-width of the longest bounding box axis after normalization.
pub const NORMALIZED_HALF_EXTENT: f64 = 0.9;

/// Uniform scale and offset mapping model units into the normalized frame:
/// `normalized = (model + offset) * scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationTransform {
    pub scale: f64,
    pub offset: [f64; 3],
}

impl Default for NormalizationTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl NormalizationTransform {
    pub fn identity() -> Self {
        Self {
            scale: 1.0,
            offset: [0.0; 3],
        }
    }

    fn offset_vec(&self) -> Vec3 {
        Vec3::from(self.offset)
    }

    pub fn apply(&self, model: &Vec3) -> Vec3 {
        (model + self.offset_vec()) * self.scale
    }

    pub fn invert(&self, normalized: &Vec3) -> Vec3 {
        normalized / self.scale - self.offset_vec()
    }

    /// Model-unit length to normalized length.
    pub fn length_to_normalized(&self, model: f64) -> f64 {
        model * self.scale
    }

    pub fn length_to_model(&self, normalized: f64) -> f64 {
        normalized / self.scale
    }

    /// Model units are meters.
    pub fn length_to_mm(&self, normalized: f64) -> f64 {
        self.length_to_model(normalized) * 1000.0
    }

    /// `self` applied after `inner`.
    pub fn compose(&self, inner: &NormalizationTransform) -> NormalizationTransform {
        // (( m + o1) s1 + o2) s2 = (m + o1 + o2 / s1) s1 s2
        let o = inner.offset_vec() + self.offset_vec() / inner.scale;
        NormalizationTransform {
            scale: self.scale * inner.scale,
            offset: o.into(),
        }
    }
}

/// Centers the mesh and scales it uniformly so the longest axis spans
/// `[-0.9, 0.9]`.
pub fn normalize(mesh: &TriangleMesh) -> Result<(TriangleMesh, NormalizationTransform)> {
    if mesh.triangle_count() == 0 {
        return Err(Error::EmptyMesh);
    }
    let (lo, hi) = mesh.bounding_box();
    let longest = (hi - lo).max();
    if !(longest > f64::EPSILON * hi.abs().max().max(1.0)) {
        return Err(Error::ZeroExtent);
    }
    let transform = NormalizationTransform {
        scale: 2.0 * NORMALIZED_HALF_EXTENT / longest,
        offset: (-0.5 * (lo + hi)).into(),
    };
    Ok((mesh.map_vertices(|v| transform.apply(v)), transform))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;

    #[test]
    fn cube_zero_to_two() {
        let cube = shapes::cube(Vec3::repeat(1.0), 2.0);
        let (n, t) = normalize(&cube).unwrap();
        assert!((t.scale - 0.9).abs() < 1e-15);
        assert_eq!(t.offset, [-1.0, -1.0, -1.0]);
        let (lo, hi) = n.bounding_box();
        assert!((lo - Vec3::repeat(-0.9)).norm() < 1e-15);
        assert!((hi - Vec3::repeat(0.9)).norm() < 1e-15);
        for (a, b) in cube.vertices().iter().zip(n.vertices()) {
            assert!((t.invert(b) - a).norm() < 1e-6);
        }
    }

    #[test]
    fn renormalizing_is_identity_scale() {
        let mesh = shapes::icosphere(2, 3.0).map_vertices(|v| v + Vec3::new(5.0, -1.0, 2.0));
        let (n, _) = normalize(&mesh).unwrap();
        let (_, t2) = normalize(&n).unwrap();
        assert!((t2.scale - 1.0).abs() < 1e-12);

        let unit = shapes::cube(Vec3::zeros(), 2.0);
        let (_, t3) = normalize(&unit).unwrap();
        assert!((0.89..=0.91).contains(&t3.scale));
    }

    #[test]
    fn repeated_point_is_zero_extent() {
        let v = vec![Vec3::new(1.0, 1.0, 1.0); 3];
        // the only face is degenerate and dropped
        assert!(normalize(&TriangleMesh::new(v, vec![[0, 1, 2]]).unwrap()).is_err());
        let tiny = shapes::cube(Vec3::new(1.0, 1.0, 1.0), 1.0).map_vertices(|_| Vec3::new(1.0, 1.0, 1.0));
        assert!(matches!(normalize(&tiny), Err(Error::ZeroExtent)));
    }

    #[test]
    fn compose_matches_sequential_application() {
        let a = NormalizationTransform { scale: 2.0, offset: [1.0, -2.0, 0.5] };
        let b = NormalizationTransform { scale: 0.25, offset: [3.0, 0.0, -1.0] };
        let p = Vec3::new(0.3, -0.7, 1.1);
        let ab = b.compose(&a);
        assert!((ab.apply(&p) - b.apply(&a.apply(&p))).norm() < 1e-12);
    }
}
