//! Affine triangle geometry: areas, barycentric coordinates and their gradients.

use crate::scalar::Real;

/// Signed area of the triangle `(a, b, c)`; positive when counterclockwise.
#[inline]
pub fn signed_area<T: Real>(a: [T; 2], b: [T; 2], c: [T; 2]) -> T {
    let half = T::c(0.5);
    half * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

/// Affine map data of one triangle.
#[derive(Debug, Clone, Copy)]
pub struct TriangleGeometry<T> {
    pub points: [[T; 2]; 3],
    pub area: T,
    /// Constant gradients of the three barycentric coordinates.
    pub grad_lambda: [[T; 2]; 3],
}

impl<T: Real> TriangleGeometry<T> {
    /// Returns `None` for a triangle with non-positive signed area.
    pub fn new(points: [[T; 2]; 3]) -> Option<Self> {
        let [a, b, c] = points;
        let area = signed_area(a, b, c);
        if !(area > T::zero()) {
            return None;
        }
        let two_area = area + area;
        // grad(lambda_k) = rot90(edge opposite k) / (2 |T|)
        let grad = |p: [T; 2], q: [T; 2]| [(p[1] - q[1]) / two_area, (q[0] - p[0]) / two_area];
        Some(Self {
            points,
            area,
            grad_lambda: [grad(b, c), grad(c, a), grad(a, b)],
        })
    }

    /// Physical point with barycentric coordinates `lambda`.
    #[inline]
    pub fn map(&self, lambda: [T; 3]) -> [T; 2] {
        let [a, b, c] = self.points;
        [
            lambda[0] * a[0] + lambda[1] * b[0] + lambda[2] * c[0],
            lambda[0] * a[1] + lambda[1] * b[1] + lambda[2] * c[1],
        ]
    }

    /// Barycentric coordinates of an arbitrary point (may lie outside).
    #[inline]
    pub fn barycentric(&self, x: [T; 2]) -> [T; 3] {
        let [a, b, c] = self.points;
        let l1 = signed_area(a, x, c) / self.area;
        let l2 = signed_area(a, b, x) / self.area;
        [T::one() - l1 - l2, l1, l2]
    }

    pub fn diameter(&self) -> T {
        let [a, b, c] = self.points;
        let d = |p: [T; 2], q: [T; 2]| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
        d(a, b).max(d(b, c)).max(d(c, a))
    }

    pub fn barycenter(&self) -> [T; 2] {
        let third = T::one() / T::c(3.0);
        self.map([third, third, third])
    }

    /// Whether `x` lies in the closed triangle, up to `tol` in barycentric units.
    pub fn contains(&self, x: [T; 2], tol: T) -> bool {
        self.barycentric(x).iter().all(|&l| l >= -tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn barycentric_gradients_sum_to_zero() {
        let g = TriangleGeometry::new([[0.1, 0.2], [0.9, 0.3], [0.4, 0.8]]).unwrap();
        for d in 0..2 {
            let s: f64 = g.grad_lambda.iter().map(|v| v[d]).sum();
            assert!(s.abs() < 1e-14);
        }
        let x = [0.45, 0.41];
        let l = g.barycentric(x);
        let back = g.map(l);
        assert!((back[0] - x[0]).abs() < 1e-15 && (back[1] - x[1]).abs() < 1e-15);
        // directional derivative of lambda matches its gradient
        let h = 1e-6;
        let lp = g.barycentric([x[0] + h, x[1]]);
        for k in 0..3 {
            assert!(((lp[k] - l[k]) / h - g.grad_lambda[k][0]).abs() < 1e-8);
        }
    }

    #[test]
    fn clockwise_triangle_rejected() {
        assert!(TriangleGeometry::new([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]]).is_none());
        assert!(TriangleGeometry::<f32>::new([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]).is_none());
    }
}
