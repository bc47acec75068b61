//! Matrix and load-vector assembly for the Stokes forms
//! `a(u, v) = nu (grad u, grad v)` and `d(q, v) = -(q, div v)`.

use crate::error::{Error, Result};
use crate::fem::space::FeSpace;
use crate::fem::quadrature::QuadratureRule;
use crate::scalar::Real;
use crate::sparse::{CsrMatrix, TripletBuilder};

/// Quadrature degree for bilinear forms: exact for every product of the
/// supported elements.
pub const BILINEAR_DEGREE: usize = 4;
/// Quadrature degree for loads, residual functionals and error norms.
pub const LOAD_DEGREE: usize = 8;

/// Velocity-velocity block `A` (two stacked components) and the
/// pressure-velocity block `Bdiv` with `Bdiv[i, k] = d(chi_i, psi_k)`.
#[derive(Debug, Clone)]
pub struct StokesBlocks<T> {
    pub a: CsrMatrix<T>,
    pub bdiv: CsrMatrix<T>,
}

fn check_pair<T: Real>(space_u: &FeSpace<T>, space_p: &FeSpace<T>) -> Result<()> {
    let same = std::ptr::eq(space_u.mesh(), space_p.mesh())
        || (space_u.mesh().num_triangles() == space_p.mesh().num_triangles()
            && space_u.mesh().triangles() == space_p.mesh().triangles());
    if same {
        Ok(())
    } else {
        Err(Error::InvalidArgument("velocity and pressure spaces live on different meshes".into()))
    }
}

pub fn assemble_stokes<T: Real>(space_u: &FeSpace<T>, space_p: &FeSpace<T>, nu: T) -> Result<StokesBlocks<T>> {
    if !(nu > T::zero()) {
        return Err(Error::InvalidArgument(format!("viscosity must be positive, got {nu}")));
    }
    check_pair(space_u, space_p)?;
    let mesh = space_u.mesh();
    let rule = QuadratureRule::<T>::with_degree(BILINEAR_DEGREE);
    let nu_dofs = space_u.num_dofs();
    let nloc_u = space_u.kind().local_dofs();
    let nloc_p = space_p.kind().local_dofs();
    let mut a = TripletBuilder::with_capacity(2 * nu_dofs, 2 * nu_dofs, mesh.num_triangles() * nloc_u * nloc_u * 2);
    let mut b = TripletBuilder::with_capacity(space_p.num_dofs(), 2 * nu_dofs, mesh.num_triangles() * nloc_u * nloc_p * 2);
    let mut ke = vec![T::zero(); nloc_u * nloc_u];
    let mut be = vec![T::zero(); nloc_p * nloc_u * 2];
    for t in 0..mesh.num_triangles() {
        let geo = mesh.geometry(t);
        ke.iter_mut().for_each(|x| *x = T::zero());
        be.iter_mut().for_each(|x| *x = T::zero());
        for (l, &w) in rule.points.iter().zip(&rule.weights) {
            let su = space_u.shape(&geo.grad_lambda, *l);
            let sp = space_p.shape(&geo.grad_lambda, *l);
            let wa = w * geo.area;
            for i in 0..nloc_u {
                let gi = su.grads[i];
                for j in 0..nloc_u {
                    let gj = su.grads[j];
                    ke[i * nloc_u + j] += wa * nu * (gi[0] * gj[0] + gi[1] * gj[1]);
                }
            }
            for i in 0..nloc_p {
                let q = sp.values[i];
                for k in 0..nloc_u {
                    be[(i * nloc_u + k) * 2] -= wa * q * su.grads[k][0];
                    be[(i * nloc_u + k) * 2 + 1] -= wa * q * su.grads[k][1];
                }
            }
        }
        let du = space_u.element_dofs(t);
        let dp = space_p.element_dofs(t);
        for c in 0..2 {
            let off = c * nu_dofs;
            for i in 0..nloc_u {
                for j in 0..nloc_u {
                    a.push(off + du[i], off + du[j], ke[i * nloc_u + j]);
                }
            }
        }
        for i in 0..nloc_p {
            for k in 0..nloc_u {
                for c in 0..2 {
                    b.push(dp[i], c * nu_dofs + du[k], be[(i * nloc_u + k) * 2 + c]);
                }
            }
        }
    }
    Ok(StokesBlocks { a: a.build(), bdiv: b.build() })
}

/// `(f, psi_i e_c)` for both velocity components, stacked.
pub fn assemble_load<T: Real>(f: impl Fn([T; 2]) -> [T; 2], space_u: &FeSpace<T>) -> Vec<T> {
    let mesh = space_u.mesh();
    let rule = QuadratureRule::<T>::with_degree(LOAD_DEGREE);
    let n = space_u.num_dofs();
    let mut out = vec![T::zero(); 2 * n];
    for t in 0..mesh.num_triangles() {
        let geo = mesh.geometry(t);
        let dofs = space_u.element_dofs(t);
        for (l, &w) in rule.points.iter().zip(&rule.weights) {
            let fx = f(geo.map(*l));
            let s = space_u.shape(&geo.grad_lambda, *l);
            let wa = w * geo.area;
            for (k, &d) in dofs.iter().enumerate() {
                out[d] += wa * fx[0] * s.values[k];
                out[n + d] += wa * fx[1] * s.values[k];
            }
        }
    }
    out
}
