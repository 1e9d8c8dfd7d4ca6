use crate::Vec3;

use super::SdfProvider;

/// Exact sphere distance `|p - c| - r`.
#[derive(Debug, Clone, Copy)]
pub struct SphereSdf {
    pub center: Vec3,
    pub radius: f64,
}

impl SphereSdf {
    pub fn new(center: Vec3, radius: f64) -> Self {
        Self { center, radius }
    }
}

impl SdfProvider for SphereSdf {
    fn distance(&self, points: &[Vec3]) -> Vec<f64> {
        points.iter().map(|p| (p - self.center).norm() - self.radius).collect()
    }

    fn gradient(&self, points: &[Vec3]) -> Vec<Vec3> {
        points
            .iter()
            .map(|p| {
                let d = p - self.center;
                let len = d.norm();
                if len > 0.0 {
                    d / len
                } else {
                    Vec3::zeros()
                }
            })
            .collect()
    }

    fn label(&self) -> String {
        "sphere".into()
    }
}

/// Exact axis-aligned box distance.
#[derive(Debug, Clone, Copy)]
pub struct BoxSdf {
    pub center: Vec3,
    pub half: Vec3,
}

impl BoxSdf {
    pub fn new(center: Vec3, half: Vec3) -> Self {
        Self { center, half }
    }

    fn eval(&self, p: &Vec3) -> (f64, Vec3) {
        let rel = p - self.center;
        let q = rel.abs() - self.half;
        let outside = q.map(|v| v.max(0.0));
        let out_len = outside.norm();
        let sign = rel.map(|v| if v < 0.0 { -1.0 } else { 1.0 });
        if out_len > 0.0 {
            (out_len, (outside / out_len).component_mul(&sign))
        } else {
            let k = q.imax();
            let mut g = Vec3::zeros();
            g[k] = sign[k];
            (q[k], g)
        }
    }
}

impl SdfProvider for BoxSdf {
    fn distance(&self, points: &[Vec3]) -> Vec<f64> {
        points.iter().map(|p| self.eval(p).0).collect()
    }

    fn gradient(&self, points: &[Vec3]) -> Vec<Vec3> {
        points.iter().map(|p| self.eval(p).1).collect()
    }

    fn label(&self) -> String {
        "box".into()
    }
}
