use nalgebra::{Matrix3, Rotation3};

use super::SdfProvider;
use crate::{Error, Result, Vec3};

const RIGID_TOL: f64 = 1e-9;

/// Rotation followed by translation: `T p = R p + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    rotation: Matrix3<f64>,
    translation: Vec3,
}

impl RigidTransform {
    pub fn new(rotation: Matrix3<f64>, translation: Vec3) -> Result<Self> {
        let ortho = (rotation.transpose() * rotation - Matrix3::identity()).abs().max();
        if ortho > RIGID_TOL {
            return Err(Error::NotRigid(format!("|R^T R - I| = {ortho:e}")));
        }
        let det = rotation.determinant();
        if (det - 1.0).abs() > RIGID_TOL {
            return Err(Error::NotRigid(format!("det R = {det}")));
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vec3::zeros(),
        }
    }

    pub fn translation(t: Vec3) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: t,
        }
    }

    /// Rotation by `angle` radians about `axis`, then translation.
    pub fn from_axis_angle(axis: Vec3, angle: f64, translation: Vec3) -> Self {
        let rot = Rotation3::from_scaled_axis(axis.normalize() * angle);
        Self {
            rotation: *rot.matrix(),
            translation,
        }
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation_vector(&self) -> Vec3 {
        self.translation
    }

    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    pub fn apply_inverse(&self, p: &Vec3) -> Vec3 {
        self.rotation.transpose() * (p - self.translation)
    }

    pub fn rotate(&self, v: &Vec3) -> Vec3 {
        self.rotation * v
    }

    /// Homogeneous 4x4 form, row-major.
    pub fn to_matrix4(&self) -> [[f64; 4]; 4] {
        let r = &self.rotation;
        let t = &self.translation;
        [
            [r[(0, 0)], r[(0, 1)], r[(0, 2)], t.x],
            [r[(1, 0)], r[(1, 1)], r[(1, 2)], t.y],
            [r[(2, 0)], r[(2, 1)], r[(2, 2)], t.z],
            [0.0, 0.0, 0.0, 1.0],
        ]
    }
}

/// A provider placed in the world by a rigid transform: local queries use
/// `T^-1 p` and normals are rotated back by `R`.
#[derive(Debug, Clone)]
pub struct Transformed<P> {
    pub inner: P,
    pub transform: RigidTransform,
}

impl<P: SdfProvider> Transformed<P> {
    pub fn new(inner: P, transform: RigidTransform) -> Self {
        Self { inner, transform }
    }

    fn to_local(&self, points: &[Vec3]) -> Vec<Vec3> {
        points.iter().map(|p| self.transform.apply_inverse(p)).collect()
    }
}

impl<P: SdfProvider> SdfProvider for Transformed<P> {
    fn distance(&self, points: &[Vec3]) -> Vec<f64> {
        self.inner.distance(&self.to_local(points))
    }

    fn gradient(&self, points: &[Vec3]) -> Vec<Vec3> {
        let mut g = self.inner.gradient(&self.to_local(points));
        g.iter_mut().for_each(|v| *v = self.transform.rotate(v));
        g
    }

    fn distance_gradient(&self, points: &[Vec3]) -> (Vec<f64>, Vec<Vec3>) {
        let (d, mut g) = self.inner.distance_gradient(&self.to_local(points));
        g.iter_mut().for_each(|v| *v = self.transform.rotate(v));
        (d, g)
    }

    fn size_bytes(&self) -> usize {
        self.inner.size_bytes()
    }

    fn label(&self) -> String {
        self.inner.label()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collision::SphereSdf;

    #[test]
    fn rejects_non_rigid() {
        assert!(RigidTransform::new(Matrix3::identity() * 2.0, Vec3::zeros()).is_err());
        let reflect = Matrix3::from_diagonal(&Vec3::new(-1.0, 1.0, 1.0));
        assert!(RigidTransform::new(reflect, Vec3::zeros()).is_err());
        let t = RigidTransform::from_axis_angle(Vec3::new(1.0, 2.0, 3.0), 0.7, Vec3::zeros());
        assert!(RigidTransform::new(*t.rotation(), Vec3::x()).is_ok());
    }

    #[test]
    fn inverse_round_trip() {
        let t = RigidTransform::from_axis_angle(Vec3::new(0.3, -1.0, 0.2), 1.1, Vec3::new(0.5, 0.1, -2.0));
        let p = Vec3::new(0.7, -0.2, 0.4);
        assert!((t.apply_inverse(&t.apply(&p)) - p).norm() < 1e-14);
    }

    #[test]
    fn identity_wrap_is_transparent() {
        let s = SphereSdf::new(Vec3::new(0.1, 0.0, 0.0), 0.5);
        let w = Transformed::new(s, RigidTransform::identity());
        let pts = [Vec3::new(0.3, 0.2, -0.9), Vec3::new(0.0, 0.0, 0.0)];
        assert_eq!(w.distance(&pts), s.distance(&pts));
        assert_eq!(w.gradient(&pts), s.gradient(&pts));
    }

    #[test]
    fn translated_sphere() {
        let t = Vec3::new(1.0, -2.0, 0.5);
        let w = Transformed::new(SphereSdf::new(Vec3::zeros(), 0.3), RigidTransform::translation(t));
        let p = Vec3::new(0.2, 0.4, 1.0);
        assert!((w.distance(&[p])[0] - ((p - t).norm() - 0.3)).abs() < 1e-15);
    }
}
