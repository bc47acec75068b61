//! Residual functionals `(f, w v) - B([u, p], w [v, q])` of a fine state,
//! tested against fine, patch-local or coarse basis functions, with an
//! optional hat weight `w = phi_j`.

use crate::fem::assembly::LOAD_DEGREE;
use crate::fem::element::shape_functions;
use crate::fem::quadrature::QuadratureRule;
use crate::fem::space::FeSpace;
use crate::fem::state::{StokesState, TwoLevel};
use crate::mesh::SubmeshMap;
use crate::partition::PatchSet;
use crate::scalar::Real;

/// Residual against velocity tests (stacked components) and pressure tests.
#[derive(Debug, Clone, PartialEq)]
pub struct Residual<T> {
    pub momentum: Vec<T>,
    pub mass: Vec<T>,
}

impl<T: Real> Residual<T> {
    pub fn zeros(nu: usize, np: usize) -> Self {
        Self { momentum: vec![T::zero(); 2 * nu], mass: vec![T::zero(); np] }
    }

    /// Euclidean norm over the unconstrained velocity rows and all pressure rows.
    pub fn free_norm(&self, space_u: &FeSpace<T>) -> T {
        let n = space_u.num_dofs();
        let mut s = T::zero();
        for (i, &v) in self.momentum.iter().enumerate() {
            if !space_u.is_constrained(i % n) {
                s += v * v;
            }
        }
        for &v in &self.mass {
            s += v * v;
        }
        s.sqrt()
    }
}

enum Tests<'a, T> {
    Fine { u: &'a FeSpace<T>, p: &'a FeSpace<T>, map: Option<&'a SubmeshMap> },
    Coarse,
}

struct Kernel<'a, T, F> {
    tl: &'a TwoLevel<T>,
    state: &'a StokesState<T>,
    f: &'a F,
    nu: T,
    rule: QuadratureRule<T>,
}

impl<T: Real, F: Fn([T; 2]) -> [T; 2]> Kernel<'_, T, F> {
    /// Adds the contribution of fine triangle `t`. `weight` is the coarse
    /// barycentric slot of the hat on the parent triangle and its gradient.
    fn element(&self, t: usize, weight: Option<(usize, [T; 2])>, tests: &Tests<'_, T>, out: &mut Residual<T>) {
        let fine = self.tl.fine_mesh();
        let geo = fine.geometry(t);
        let (nu_test, u_dofs, p_dofs, u_kind, p_kind) = match tests {
            Tests::Fine { u, p, map } => {
                let lt = match map {
                    Some(m) => m.local_triangle(t).expect("weighted element lies in the local mesh"),
                    None => t,
                };
                (u.num_dofs(), u.element_dofs(lt), p.element_dofs(lt), u.kind(), p.kind())
            }
            Tests::Coarse => {
                let tc = self.tl.parent(t);
                let cu = self.tl.coarse_velocity();
                let cp = self.tl.coarse_pressure();
                (cu.num_dofs(), cu.element_dofs(tc), cp.element_dofs(tc), cu.kind(), cp.kind())
            }
        };
        let coarse_geo = match (tests, weight) {
            (Tests::Coarse, _) | (_, Some(_)) => Some(self.tl.coarse_mesh().geometry(self.tl.parent(t))),
            _ => None,
        };
        for (l, &w) in self.rule.points.iter().zip(&self.rule.weights) {
            let x = geo.map(*l);
            let wa = w * geo.area;
            let v = self.tl.evaluate(self.state, t, &geo, *l);
            let fx = (self.f)(x);
            let lc = coarse_geo.as_ref().map(|g| g.barycentric(x));
            let (phi, gphi) = match weight {
                Some((k, g)) => (lc.expect("coarse coordinates")[k], g),
                None => (T::one(), [T::zero(); 2]),
            };
            let (su, sp) = match tests {
                Tests::Fine { .. } => (
                    shape_functions(u_kind, *l, &geo.grad_lambda),
                    shape_functions(p_kind, *l, &geo.grad_lambda),
                ),
                Tests::Coarse => {
                    let g = coarse_geo.as_ref().expect("coarse geometry");
                    let lc = lc.expect("coarse coordinates");
                    (shape_functions(u_kind, lc, &g.grad_lambda), shape_functions(p_kind, lc, &g.grad_lambda))
                }
            };
            let div = v.grad_u[0][0] + v.grad_u[1][1];
            for (k, &d) in u_dofs.iter().enumerate() {
                let psi = su.values[k];
                let gpsi = su.grads[k];
                // gradient of the weighted test function phi * psi
                let g = [phi * gpsi[0] + psi * gphi[0], phi * gpsi[1] + psi * gphi[1]];
                for c in 0..2 {
                    let r = fx[c] * phi * psi - self.nu * (v.grad_u[c][0] * g[0] + v.grad_u[c][1] * g[1]) + v.p * g[c];
                    out.momentum[c * nu_test + d] += wa * r;
                }
            }
            for (k, &d) in p_dofs.iter().enumerate() {
                out.mass[d] -= wa * phi * sp.values[k] * div;
            }
        }
    }
}

fn kernel<'a, T: Real, F>(tl: &'a TwoLevel<T>, state: &'a StokesState<T>, f: &'a F, nu: T) -> Kernel<'a, T, F> {
    Kernel { tl, state, f, nu, rule: QuadratureRule::with_degree(LOAD_DEGREE) }
}

fn zero_constrained<T: Real>(r: &mut Residual<T>, space_u: &FeSpace<T>) {
    let n = space_u.num_dofs();
    for (d, &fixed) in space_u.constrained().iter().enumerate() {
        if fixed {
            r.momentum[d] = T::zero();
            r.momentum[n + d] = T::zero();
        }
    }
}

/// Right-hand side of the local problem on patch `j`, tested against the
/// local spaces on the submesh described by `map`. Integration runs over the
/// support of `phi_j` only.
#[allow(clippy::too_many_arguments)]
pub fn weighted_residual<T: Real, F: Fn([T; 2]) -> [T; 2]>(
    tl: &TwoLevel<T>,
    state: &StokesState<T>,
    patches: &PatchSet<T>,
    j: usize,
    f: &F,
    nu: T,
    local_u: &FeSpace<T>,
    local_p: &FeSpace<T>,
    map: &SubmeshMap,
) -> Residual<T> {
    let k = kernel(tl, state, f, nu);
    let mut out = Residual::zeros(local_u.num_dofs(), local_p.num_dofs());
    let tests = Tests::Fine { u: local_u, p: local_p, map: Some(map) };
    let patch = &patches.patches()[j];
    for &t in &patch.support_fine {
        let weight = patches.hat_on_triangle(j, tl.parent(t)).expect("support triangle carries the hat");
        k.element(t, Some(weight), &tests, &mut out);
    }
    zero_constrained(&mut out, local_u);
    out
}

/// Residual of the state against the global fine spaces.
pub fn fine_residual<T: Real, F: Fn([T; 2]) -> [T; 2]>(tl: &TwoLevel<T>, state: &StokesState<T>, f: &F, nu: T) -> Residual<T> {
    let k = kernel(tl, state, f, nu);
    let (u, p) = (tl.fine_velocity(), tl.fine_pressure());
    let mut out = Residual::zeros(u.num_dofs(), p.num_dofs());
    let tests = Tests::Fine { u, p, map: None };
    for t in 0..tl.fine_mesh().num_triangles() {
        k.element(t, None, &tests, &mut out);
    }
    zero_constrained(&mut out, u);
    out
}

/// Residual of the state against the coarse spaces.
pub fn coarse_residual<T: Real, F: Fn([T; 2]) -> [T; 2]>(tl: &TwoLevel<T>, state: &StokesState<T>, f: &F, nu: T) -> Residual<T> {
    let k = kernel(tl, state, f, nu);
    let mut out = Residual::zeros(tl.coarse_velocity().num_dofs(), tl.coarse_pressure().num_dofs());
    for t in 0..tl.fine_mesh().num_triangles() {
        k.element(t, None, &Tests::Coarse, &mut out);
    }
    zero_constrained(&mut out, tl.coarse_velocity());
    out
}
