//! Spatial (6-D) vector algebra in Plücker coordinates.
//!
//! Motion vectors are stored as `[angular; linear]` and force vectors as
//! `[moment; force]`, both expressed in a body frame.

use nalgebra::{Matrix3, Matrix6, Vector3, Vector6};

pub type SpatialVector = Vector6<f64>;
pub type SpatialMatrix = Matrix6<f64>;

#[inline]
pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

#[inline]
pub fn angular(v: &SpatialVector) -> Vector3<f64> {
    Vector3::new(v[0], v[1], v[2])
}

#[inline]
pub fn linear(v: &SpatialVector) -> Vector3<f64> {
    Vector3::new(v[3], v[4], v[5])
}

#[inline]
pub fn spatial(angular: &Vector3<f64>, linear: &Vector3<f64>) -> SpatialVector {
    SpatialVector::new(angular.x, angular.y, angular.z, linear.x, linear.y, linear.z)
}

/// Motion cross product `v ×m m`.
#[inline]
pub fn cross_motion(v: &SpatialVector, m: &SpatialVector) -> SpatialVector {
    let (w, vl) = (angular(v), linear(v));
    let (mw, ml) = (angular(m), linear(m));
    spatial(&w.cross(&mw), &(w.cross(&ml) + vl.cross(&mw)))
}

/// Force cross product `v ×f f`.
#[inline]
pub fn cross_force(v: &SpatialVector, f: &SpatialVector) -> SpatialVector {
    let (w, vl) = (angular(v), linear(v));
    let (n, fl) = (angular(f), linear(f));
    spatial(&(w.cross(&n) + vl.cross(&fl)), &w.cross(&fl))
}

/// Coordinate transform from a parent frame to a child frame.
///
/// `rotation` maps parent coordinates to child coordinates and `translation`
/// is the child origin expressed in the parent frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PluckerTransform {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl PluckerTransform {
    pub fn identity() -> Self {
        Self { rotation: Matrix3::identity(), translation: Vector3::zeros() }
    }

    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Self { rotation, translation }
    }

    /// Transforms a motion vector from parent to child coordinates.
    #[inline]
    pub fn apply_motion(&self, m: &SpatialVector) -> SpatialVector {
        let w = angular(m);
        let v = linear(m);
        spatial(&(self.rotation * w), &(self.rotation * (v - self.translation.cross(&w))))
    }

    /// Transforms a force vector from parent to child coordinates.
    #[inline]
    pub fn apply_force(&self, f: &SpatialVector) -> SpatialVector {
        let n = angular(f);
        let fl = linear(f);
        spatial(&(self.rotation * (n - self.translation.cross(&fl))), &(self.rotation * fl))
    }

    /// Transforms a child-frame force into the parent frame (`Xᵀ f`).
    #[inline]
    pub fn transpose_apply_force(&self, f: &SpatialVector) -> SpatialVector {
        let fl = self.rotation.transpose() * linear(f);
        let n = self.rotation.transpose() * angular(f) + self.translation.cross(&fl);
        spatial(&n, &fl)
    }

    /// Transforms a child-frame motion into the parent frame (`X⁻¹ m`).
    #[inline]
    pub fn inverse_apply_motion(&self, m: &SpatialVector) -> SpatialVector {
        let w = self.rotation.transpose() * angular(m);
        let v = self.rotation.transpose() * linear(m) + self.translation.cross(&w);
        spatial(&w, &v)
    }

    pub fn to_matrix(&self) -> SpatialMatrix {
        let mut x = SpatialMatrix::zeros();
        let lower = -self.rotation * skew(&self.translation);
        x.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        x.fixed_view_mut::<3, 3>(3, 3).copy_from(&self.rotation);
        x.fixed_view_mut::<3, 3>(3, 0).copy_from(&lower);
        x
    }
}

/// Spatial inertia about a body origin for a body with the given mass, centre
/// of mass, and rotational inertia about the centre of mass.
pub fn rigid_body_inertia(mass: f64, com: &Vector3<f64>, inertia_com: &Matrix3<f64>) -> SpatialMatrix {
    let c = skew(com);
    let mut out = SpatialMatrix::zeros();
    let top_left = inertia_com + c * c.transpose() * mass;
    out.fixed_view_mut::<3, 3>(0, 0).copy_from(&top_left);
    out.fixed_view_mut::<3, 3>(0, 3).copy_from(&(c * mass));
    out.fixed_view_mut::<3, 3>(3, 0).copy_from(&(c.transpose() * mass));
    out.fixed_view_mut::<3, 3>(3, 3).copy_from(&(Matrix3::identity() * mass));
    out
}

/// Rotation matrix about a unit axis (Rodrigues).
pub fn axis_rotation(axis: &Vector3<f64>, angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    let k = skew(axis);
    Matrix3::identity() + k * s + k * k * (1.0 - c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_transform() -> PluckerTransform {
        let axis = Vector3::new(0.3, -0.5, 0.8).normalize();
        PluckerTransform::new(axis_rotation(&axis, 0.7), Vector3::new(0.1, -0.2, 0.35))
    }

    #[test]
    fn closed_forms_match_matrix_form() {
        let x = sample_transform();
        let m = SpatialVector::new(0.4, -1.1, 0.2, 2.0, 0.5, -0.3);
        let xm = x.to_matrix();
        assert!((x.apply_motion(&m) - xm * m).norm() < 1e-12);
        assert!((x.transpose_apply_force(&m) - xm.transpose() * m).norm() < 1e-12);
        let force_matrix = xm.try_inverse().unwrap().transpose();
        assert!((x.apply_force(&m) - force_matrix * m).norm() < 1e-12);
        assert!((x.inverse_apply_motion(&x.apply_motion(&m)) - m).norm() < 1e-12);
    }

    #[test]
    fn power_is_frame_invariant() {
        let x = sample_transform();
        let m = SpatialVector::new(0.4, -1.1, 0.2, 2.0, 0.5, -0.3);
        let f = SpatialVector::new(-0.7, 0.1, 1.3, 0.2, -2.5, 0.9);
        let p_parent = m.dot(&f);
        let p_child = x.apply_motion(&m).dot(&x.apply_force(&f));
        assert!((p_parent - p_child).abs() < 1e-12);
    }

    #[test]
    fn cross_products_are_dual() {
        let v = SpatialVector::new(0.4, -1.1, 0.2, 2.0, 0.5, -0.3);
        let m = SpatialVector::new(1.0, 0.3, -0.2, 0.1, 0.0, 0.6);
        let f = SpatialVector::new(-0.7, 0.1, 1.3, 0.2, -2.5, 0.9);
        // (v ×m m)·f = −m·(v ×f f)
        let lhs = cross_motion(&v, &m).dot(&f);
        let rhs = -m.dot(&cross_force(&v, &f));
        assert!((lhs - rhs).abs() < 1e-12);
    }
}
