use std::sync::Arc;

use crate::geometry::{MeshSdf, NormalizationTransform};
use crate::Vec3;
use rayon::prelude::*;

/// A signed distance field queried in batches. Interior is negative.
pub trait SdfProvider: Send + Sync {
    fn distance(&self, points: &[Vec3]) -> Vec<f64>;

    /// Field gradient, not necessarily unit length; zero where undefined.
    fn gradient(&self, points: &[Vec3]) -> Vec<Vec3>;

    fn distance_gradient(&self, points: &[Vec3]) -> (Vec<f64>, Vec<Vec3>) {
        (self.distance(points), self.gradient(points))
    }

    /// Unit outward normals; the zero vector where the gradient vanishes.
    fn normal(&self, points: &[Vec3]) -> Vec<Vec3> {
        self.gradient(points)
            .into_iter()
            .map(|g| {
                let len = g.norm();
                if len >= super::MIN_GRADIENT_NORM {
                    g / len
                } else {
                    Vec3::zeros()
                }
            })
            .collect()
    }

    /// Bytes held by the representation (for benchmark reports).
    fn size_bytes(&self) -> usize {
        0
    }

    fn label(&self) -> String;
}

impl SdfProvider for MeshSdf {
    fn distance(&self, points: &[Vec3]) -> Vec<f64> {
        points.par_iter().map(|p| self.signed_distance(p)).collect()
    }

    fn gradient(&self, points: &[Vec3]) -> Vec<Vec3> {
        points.par_iter().map(|p| self.query(p).normal).collect()
    }

    fn distance_gradient(&self, points: &[Vec3]) -> (Vec<f64>, Vec<Vec3>) {
        points
            .par_iter()
            .map(|p| {
                let h = self.query(p);
                (h.distance, h.normal)
            })
            .unzip()
    }

    fn size_bytes(&self) -> usize {
        MeshSdf::size_bytes(self)
    }

    fn label(&self) -> String {
        "oracle".into()
    }
}

macro_rules! forward_provider {
    ($($ty:ty),*) => {$(
        impl<P: SdfProvider + ?Sized> SdfProvider for $ty {
            fn distance(&self, points: &[Vec3]) -> Vec<f64> {
                (**self).distance(points)
            }
            fn gradient(&self, points: &[Vec3]) -> Vec<Vec3> {
                (**self).gradient(points)
            }
            fn distance_gradient(&self, points: &[Vec3]) -> (Vec<f64>, Vec<Vec3>) {
                (**self).distance_gradient(points)
            }
            fn normal(&self, points: &[Vec3]) -> Vec<Vec3> {
                (**self).normal(points)
            }
            fn size_bytes(&self) -> usize {
                (**self).size_bytes()
            }
            fn label(&self) -> String {
                (**self).label()
            }
        }
    )*};
}

forward_provider!(&P, Box<P>, Arc<P>);

/// Exposes a provider that works in normalized units to callers working in
/// model units (meters): points are normalized on the way in and distances
/// scaled back on the way out.
#[derive(Debug, Clone)]
pub struct ModelFrame<P> {
    pub inner: P,
    pub norm: NormalizationTransform,
}

impl<P: SdfProvider> ModelFrame<P> {
    pub fn new(inner: P, norm: NormalizationTransform) -> Self {
        Self { inner, norm }
    }

    fn to_inner(&self, points: &[Vec3]) -> Vec<Vec3> {
        points.iter().map(|p| self.norm.apply(p)).collect()
    }
}

impl<P: SdfProvider> SdfProvider for ModelFrame<P> {
    fn distance(&self, points: &[Vec3]) -> Vec<f64> {
        let mut d = self.inner.distance(&self.to_inner(points));
        d.iter_mut().for_each(|v| *v = self.norm.length_to_model(*v));
        d
    }

    fn gradient(&self, points: &[Vec3]) -> Vec<Vec3> {
        // d_model(p) = d(s (p + o)) / s, so the gradient is unchanged
        self.inner.gradient(&self.to_inner(points))
    }

    fn distance_gradient(&self, points: &[Vec3]) -> (Vec<f64>, Vec<Vec3>) {
        let (mut d, g) = self.inner.distance_gradient(&self.to_inner(points));
        d.iter_mut().for_each(|v| *v = self.norm.length_to_model(*v));
        (d, g)
    }

    fn size_bytes(&self) -> usize {
        self.inner.size_bytes()
    }

    fn label(&self) -> String {
        self.inner.label()
    }
}
