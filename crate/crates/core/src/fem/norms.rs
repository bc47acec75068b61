//! Error norms of a fine state against closed-form fields.

use crate::fem::assembly::LOAD_DEGREE;
use crate::fem::quadrature::QuadratureRule;
use crate::fem::state::{StokesState, TwoLevel};
use crate::problems::ExactFields;
use crate::scalar::Real;

/// `|u - u_h|_1`, `||u - u_h||_0` and `||p - p_h||_0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorTriple<T> {
    pub u_h1: T,
    pub u_l2: T,
    pub p_l2: T,
}

pub fn compute_errors<T: Real>(
    tl: &TwoLevel<T>,
    state: &StokesState<T>,
    exact: impl Fn([T; 2]) -> ExactFields<T>,
) -> ErrorTriple<T> {
    let rule = QuadratureRule::<T>::with_degree(LOAD_DEGREE);
    let mesh = tl.fine_mesh();
    let (mut h1, mut l2, mut pl2) = (T::zero(), T::zero(), T::zero());
    for t in 0..mesh.num_triangles() {
        let geo = mesh.geometry(t);
        for (l, &w) in rule.points.iter().zip(&rule.weights) {
            let wa = w * geo.area;
            let v = tl.evaluate(state, t, &geo, *l);
            let e = exact(geo.map(*l));
            for c in 0..2 {
                let du = e.u[c] - v.u[c];
                l2 += wa * du * du;
                for d in 0..2 {
                    let dg = e.grad_u[c][d] - v.grad_u[c][d];
                    h1 += wa * dg * dg;
                }
            }
            let dp = e.p - v.p;
            pl2 += wa * dp * dp;
        }
    }
    ErrorTriple { u_h1: h1.sqrt(), u_l2: l2.sqrt(), p_l2: pl2.sqrt() }
}

/// `|u_h|_1` of the velocity part of a state (the pressure is ignored).
pub fn velocity_h1_seminorm<T: Real>(tl: &TwoLevel<T>, state: &StokesState<T>) -> T {
    let zero = |_: [T; 2]| ExactFields { u: [T::zero(); 2], grad_u: [[T::zero(); 2]; 2], p: T::zero() };
    compute_errors(tl, state, zero).u_h1
}

/// `ln(e1 / e2) / ln(h1 / h2)`.
pub fn convergence_order(e1: f64, e2: f64, h1: f64, h2: f64) -> f64 {
    (e1 / e2).ln() / (h1 / h2).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::element::Family;
    use crate::mesh::{build_structured_mesh, refine_uniform};
    use std::sync::Arc;

    #[test]
    fn state_against_itself_has_zero_error() {
        let c = Arc::new(build_structured_mesh::<f64>(2).unwrap());
        let f = Arc::new(refine_uniform(&c, 3).unwrap());
        for family in [Family::TaylorHood, Family::Mini] {
            let tl = TwoLevel::new(c.clone(), f.clone(), family).unwrap();
            let nc = tl.coarse_velocity().num_dofs();
            let u: Vec<f64> = (0..2 * nc)
                .map(|i| if tl.coarse_velocity().is_constrained(i % nc) { 0.0 } else { 0.1 * i as f64 })
                .collect();
            let p: Vec<f64> = (0..9).map(|i| i as f64 - 4.0).collect();
            let s = StokesState::from_coarse(&tl, &u, &p);
            let e = compute_errors(&tl, &s, |x| {
                let mesh = tl.fine_mesh();
                let t = (0..mesh.num_triangles()).find(|&t| mesh.geometry(t).contains(x, 1e-12)).unwrap();
                let g = mesh.geometry(t);
                let v = tl.evaluate(&s, t, &g, g.barycentric(x));
                ExactFields { u: v.u, grad_u: v.grad_u, p: v.p }
            });
            assert!(e.u_h1 < 1e-13 && e.u_l2 < 1e-13 && e.p_l2 < 1e-13, "{e:?}");
            assert!(velocity_h1_seminorm(&tl, &s) > 0.1);
        }
    }

    #[test]
    fn order_between_table_rows() {
        let ord = convergence_order(2.99829e-4, 5.44032e-5, 1.0 / 64.0, 1.0 / 125.0);
        assert!((ord - 2.54961).abs() < 5e-5, "{ord}");
    }
}
