//! Scalar Lagrange shape functions on triangles, written in barycentric form.

use std::fmt;
use std::str::FromStr;

use crate::error::Error;
use crate::scalar::Real;

/// Maximum number of local shape functions of any supported element.
pub const MAX_LOCAL: usize = 6;

/// Scalar element types. Vector fields use one copy per component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ElementKind {
    /// Linear: one dof per vertex.
    P1,
    /// Quadratic: vertices, then edge midpoints (local edge `k` opposite vertex `k`).
    P2,
    /// Linear plus the cubic bubble `27 l0 l1 l2`.
    P1Bubble,
}

impl ElementKind {
    pub fn local_dofs(self) -> usize {
        match self {
            ElementKind::P1 => 3,
            ElementKind::P2 => 6,
            ElementKind::P1Bubble => 4,
        }
    }
}

/// Shape function values and physical gradients at one point.
#[derive(Debug, Clone, Copy)]
pub struct ShapeValues<T> {
    pub len: usize,
    pub values: [T; MAX_LOCAL],
    pub grads: [[T; 2]; MAX_LOCAL],
}

impl<T: Real> ShapeValues<T> {
    pub fn values(&self) -> &[T] {
        &self.values[..self.len]
    }

    pub fn grads(&self) -> &[[T; 2]] {
        &self.grads[..self.len]
    }
}

/// Evaluates all shape functions of `kind` at barycentric point `l`, given the
/// constant gradients `gl` of the barycentric coordinates.
pub fn shape_functions<T: Real>(kind: ElementKind, l: [T; 3], gl: &[[T; 2]; 3]) -> ShapeValues<T> {
    let zero = T::zero();
    let mut out = ShapeValues { len: kind.local_dofs(), values: [zero; MAX_LOCAL], grads: [[zero; 2]; MAX_LOCAL] };
    let scale = |g: [T; 2], s: T| [g[0] * s, g[1] * s];
    let add = |a: [T; 2], b: [T; 2]| [a[0] + b[0], a[1] + b[1]];
    match kind {
        ElementKind::P1 => {
            out.values[..3].copy_from_slice(&l);
            out.grads[..3].copy_from_slice(gl);
        }
        ElementKind::P2 => {
            let (one, two, four) = (T::one(), T::c(2.0), T::c(4.0));
            for k in 0..3 {
                out.values[k] = l[k] * (two * l[k] - one);
                out.grads[k] = scale(gl[k], four * l[k] - one);
                let (a, b) = ((k + 1) % 3, (k + 2) % 3);
                out.values[3 + k] = four * l[a] * l[b];
                out.grads[3 + k] = scale(add(scale(gl[b], l[a]), scale(gl[a], l[b])), four);
            }
        }
        ElementKind::P1Bubble => {
            let c27 = T::c(27.0);
            out.values[..3].copy_from_slice(&l);
            out.grads[..3].copy_from_slice(gl);
            out.values[3] = c27 * l[0] * l[1] * l[2];
            let g = add(
                add(scale(gl[0], l[1] * l[2]), scale(gl[1], l[0] * l[2])),
                scale(gl[2], l[0] * l[1]),
            );
            out.grads[3] = scale(g, c27);
        }
    }
    out
}

/// Velocity/pressure element pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Family {
    /// Continuous P2 velocity, continuous P1 pressure.
    #[default]
    TaylorHood,
    /// P1 plus cubic bubble velocity, continuous P1 pressure.
    Mini,
}

impl Family {
    pub fn velocity(self) -> ElementKind {
        match self {
            Family::TaylorHood => ElementKind::P2,
            Family::Mini => ElementKind::P1Bubble,
        }
    }

    pub fn pressure(self) -> ElementKind {
        ElementKind::P1
    }

    /// Whether the velocity space on a mesh contains the velocity space of any
    /// coarser mesh it refines. Coarse bubbles are not fine-mesh functions.
    pub fn velocity_nested(self) -> bool {
        matches!(self, Family::TaylorHood)
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::TaylorHood => "taylor-hood",
            Family::Mini => "mini",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.trim().to_ascii_lowercase().as_str() {
            "taylor-hood" | "taylorhood" | "th" | "p2p1" | "p2-p1" => Ok(Family::TaylorHood),
            "mini" | "p1b-p1" | "p1bp1" => Ok(Family::Mini),
            other => Err(Error::Unknown { kind: "element family", name: other.to_string() }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::TriangleGeometry;

    fn nodes(kind: ElementKind) -> Vec<[f64; 3]> {
        let mut n = vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        match kind {
            ElementKind::P2 => n.extend([[0.0, 0.5, 0.5], [0.5, 0.0, 0.5], [0.5, 0.5, 0.0]]),
            ElementKind::P1Bubble => n.push([1.0 / 3.0; 3]),
            ElementKind::P1 => {}
        }
        n
    }

    #[test]
    fn lagrange_property_and_partition_of_unity() {
        let g = TriangleGeometry::new([[0.0, 0.0], [1.0, 0.2], [0.3, 0.9]]).unwrap();
        for kind in [ElementKind::P1, ElementKind::P2] {
            for (i, node) in nodes(kind).into_iter().enumerate() {
                let s = shape_functions(kind, node, &g.grad_lambda);
                for (k, &v) in s.values().iter().enumerate() {
                    let expect = if k == i { 1.0 } else { 0.0 };
                    assert!((v - expect).abs() < 1e-15);
                }
            }
            let s = shape_functions(kind, [0.2, 0.3, 0.5], &g.grad_lambda);
            assert!((s.values().iter().sum::<f64>() - 1.0).abs() < 1e-15);
            for d in 0..2 {
                assert!(s.grads().iter().map(|g| g[d]).sum::<f64>().abs() < 1e-14);
            }
        }
        let b = shape_functions(ElementKind::P1Bubble, [1.0 / 3.0; 3], &g.grad_lambda);
        assert!((b.values[3] - 1.0).abs() < 1e-15);
        assert!(b.grads[3][0].abs() < 1e-14 && b.grads[3][1].abs() < 1e-14);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let g = TriangleGeometry::new([[0.1, 0.0], [0.8, 0.3], [0.2, 0.7]]).unwrap();
        let x = [0.35, 0.3];
        let h = 1e-6_f64;
        for kind in [ElementKind::P1, ElementKind::P2, ElementKind::P1Bubble] {
            let s0 = shape_functions(kind, g.barycentric(x), &g.grad_lambda);
            for d in 0..2 {
                let mut xp = x;
                let mut xm = x;
                xp[d] += h;
                xm[d] -= h;
                let sp = shape_functions(kind, g.barycentric(xp), &g.grad_lambda);
                let sm = shape_functions(kind, g.barycentric(xm), &g.grad_lambda);
                for k in 0..kind.local_dofs() {
                    let fd = (sp.values[k] - sm.values[k]) / (2.0 * h);
                    assert!((fd - s0.grads[k][d]).abs() < 1e-7, "{kind:?} {k} {d}");
                }
            }
        }
    }

    #[test]
    fn family_parsing() {
        assert_eq!("taylor-hood".parse::<Family>().unwrap(), Family::TaylorHood);
        assert_eq!("Mini".parse::<Family>().unwrap(), Family::Mini);
        assert!(matches!("p3".parse::<Family>(), Err(Error::Unknown { .. })));
    }
}
