//! Nested coarse/fine spaces and the fine-level Stokes state built on them.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fem::element::{shape_functions, Family};
use crate::fem::space::FeSpace;
use crate::geometry::TriangleGeometry;
use crate::mesh::Mesh;
use crate::scalar::Real;

/// Velocity and pressure spaces on a coarse mesh and on a refinement of it.
#[derive(Debug, Clone)]
pub struct TwoLevel<T> {
    family: Family,
    coarse_u: FeSpace<T>,
    coarse_p: FeSpace<T>,
    fine_u: FeSpace<T>,
    fine_p: FeSpace<T>,
    parent: Vec<usize>,
}

impl<T: Real> TwoLevel<T> {
    pub fn new(coarse: Arc<Mesh<T>>, fine: Arc<Mesh<T>>, family: Family) -> Result<Self> {
        let parent = fine.parent_of().ok_or(Error::MissingParentMap)?.to_vec();
        if parent.iter().any(|&t| t >= coarse.num_triangles()) {
            return Err(Error::InvalidArgument("parent map points outside the coarse mesh".into()));
        }
        Ok(Self {
            family,
            coarse_u: FeSpace::new(coarse.clone(), family.velocity(), true),
            coarse_p: FeSpace::new(coarse, family.pressure(), false),
            fine_u: FeSpace::new(fine.clone(), family.velocity(), true),
            fine_p: FeSpace::new(fine, family.pressure(), false),
            parent,
        })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn coarse_velocity(&self) -> &FeSpace<T> {
        &self.coarse_u
    }

    pub fn coarse_pressure(&self) -> &FeSpace<T> {
        &self.coarse_p
    }

    pub fn fine_velocity(&self) -> &FeSpace<T> {
        &self.fine_u
    }

    pub fn fine_pressure(&self) -> &FeSpace<T> {
        &self.fine_p
    }

    pub fn coarse_mesh(&self) -> &Arc<Mesh<T>> {
        self.coarse_u.mesh_arc()
    }

    pub fn fine_mesh(&self) -> &Arc<Mesh<T>> {
        self.fine_u.mesh_arc()
    }

    pub fn parent(&self, fine_triangle: usize) -> usize {
        self.parent[fine_triangle]
    }

    /// Coarse triangle geometry and barycentric coordinates of `x` in it.
    pub fn locate_in_parent(&self, fine_triangle: usize, x: [T; 2]) -> (usize, TriangleGeometry<T>, [T; 3]) {
        let tc = self.parent[fine_triangle];
        let geo = self.coarse_mesh().geometry(tc);
        let l = geo.barycentric(x);
        (tc, geo, l)
    }

    /// Re-expands a coarse velocity in the fine space. Only exact when the
    /// family is nested.
    pub fn inject_velocity(&self, coarse: &[T]) -> Vec<T> {
        let nc = self.coarse_u.num_dofs();
        let nf = self.fine_u.num_dofs();
        let mut out = vec![T::zero(); 2 * nf];
        let fine = self.fine_mesh();
        for t in 0..fine.num_triangles() {
            let (tc, geo, _) = self.locate_in_parent(t, fine.geometry(t).barycenter());
            let cdofs = self.coarse_u.element_dofs(tc);
            for &d in self.fine_u.element_dofs(t) {
                let l = geo.barycentric(self.fine_u.dof_coordinates()[d]);
                let s = shape_functions(self.coarse_u.kind(), l, &geo.grad_lambda);
                for c in 0..2 {
                    out[c * nf + d] = cdofs
                        .iter()
                        .enumerate()
                        .fold(T::zero(), |acc, (k, &cd)| acc + s.values[k] * coarse[c * nc + cd]);
                }
            }
        }
        for (d, &fixed) in self.fine_u.constrained().iter().enumerate() {
            if fixed {
                out[d] = T::zero();
                out[nf + d] = T::zero();
            }
        }
        out
    }

    /// Vertex values of a coarse P1 pressure on every fine triangle.
    pub fn inject_pressure(&self, coarse: &[T]) -> Vec<[T; 3]> {
        let fine = self.fine_mesh();
        (0..fine.num_triangles())
            .map(|t| {
                let pts = fine.triangle_points(t);
                let (tc, geo, _) = self.locate_in_parent(t, fine.geometry(t).barycenter());
                let tri = self.coarse_mesh().triangles()[tc];
                pts.map(|x| {
                    let l = geo.barycentric(x);
                    l[0] * coarse[tri[0]] + l[1] * coarse[tri[1]] + l[2] * coarse[tri[2]]
                })
            })
            .collect()
    }

    /// Elementwise vertex values of a continuous fine P1 pressure.
    pub fn broken_from_fine(&self, p: &[T]) -> Vec<[T; 3]> {
        self.fine_mesh().triangles().iter().map(|tri| tri.map(|v| p[v])).collect()
    }

    /// Velocity value and gradient of `state` at fine barycentric point `l`
    /// of fine triangle `t`, and the pressure value there.
    pub fn evaluate(&self, state: &StokesState<T>, t: usize, geo: &TriangleGeometry<T>, l: [T; 3]) -> PointValues<T> {
        let mut u = [T::zero(); 2];
        let mut gu = [[T::zero(); 2]; 2];
        let nf = self.fine_u.num_dofs();
        let s = shape_functions(self.fine_u.kind(), l, &geo.grad_lambda);
        for (k, &d) in self.fine_u.element_dofs(t).iter().enumerate() {
            for c in 0..2 {
                let a = state.velocity[c * nf + d];
                u[c] += a * s.values[k];
                gu[c][0] += a * s.grads[k][0];
                gu[c][1] += a * s.grads[k][1];
            }
        }
        if let Some(cv) = &state.coarse_velocity {
            let nc = self.coarse_u.num_dofs();
            let (tc, cgeo, lc) = self.locate_in_parent(t, geo.map(l));
            let s = shape_functions(self.coarse_u.kind(), lc, &cgeo.grad_lambda);
            for (k, &d) in self.coarse_u.element_dofs(tc).iter().enumerate() {
                for c in 0..2 {
                    let a = cv[c * nc + d];
                    u[c] += a * s.values[k];
                    gu[c][0] += a * s.grads[k][0];
                    gu[c][1] += a * s.grads[k][1];
                }
            }
        }
        let pv = state.pressure[t];
        let p = l[0] * pv[0] + l[1] * pv[1] + l[2] * pv[2];
        PointValues { u, grad_u: gu, p }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointValues<T> {
    pub u: [T; 2],
    /// `grad_u[c][d] = d u_c / d x_d`
    pub grad_u: [[T; 2]; 2],
    pub p: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PressureContinuity {
    Continuous,
    Broken,
}

/// A velocity/pressure pair on the fine mesh.
///
/// The velocity is a fine-space coefficient vector (stacked components) plus
/// an optional coarse-space part, used when coarse velocities are not fine
/// functions (Mini bubbles). Pressure values are stored per fine triangle at
/// its three vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct StokesState<T> {
    pub velocity: Vec<T>,
    pub coarse_velocity: Option<Vec<T>>,
    pub pressure: Vec<[T; 3]>,
    pub continuity: PressureContinuity,
}

impl<T: Real> StokesState<T> {
    pub fn zeros(tl: &TwoLevel<T>) -> Self {
        Self {
            velocity: vec![T::zero(); 2 * tl.fine_velocity().num_dofs()],
            coarse_velocity: None,
            pressure: vec![[T::zero(); 3]; tl.fine_mesh().num_triangles()],
            continuity: PressureContinuity::Continuous,
        }
    }

    /// State from a fine Galerkin solution (continuous fine P1 pressure).
    pub fn from_fine(tl: &TwoLevel<T>, velocity: Vec<T>, pressure: &[T]) -> Self {
        Self {
            velocity,
            coarse_velocity: None,
            pressure: tl.broken_from_fine(pressure),
            continuity: PressureContinuity::Continuous,
        }
    }

    /// State from a coarse solution, re-expanded on the fine mesh.
    pub fn from_coarse(tl: &TwoLevel<T>, velocity: &[T], pressure: &[T]) -> Self {
        let mut s = Self::zeros(tl);
        s.add_coarse(tl, velocity, pressure);
        s.continuity = PressureContinuity::Continuous;
        s
    }

    /// Adds a coarse velocity/pressure pair.
    pub fn add_coarse(&mut self, tl: &TwoLevel<T>, velocity: &[T], pressure: &[T]) {
        if tl.family().velocity_nested() {
            let fine = tl.inject_velocity(velocity);
            self.velocity.iter_mut().zip(fine).for_each(|(a, b)| *a += b);
        } else {
            match &mut self.coarse_velocity {
                Some(cv) => cv.iter_mut().zip(velocity).for_each(|(a, &b)| *a += b),
                None => self.coarse_velocity = Some(velocity.to_vec()),
            }
        }
        for (p, q) in self.pressure.iter_mut().zip(tl.inject_pressure(pressure)) {
            for k in 0..3 {
                p[k] += q[k];
            }
        }
    }

    /// `∫ p dx` over the fine mesh.
    pub fn pressure_integral(&self, mesh: &Mesh<T>) -> T {
        let third = T::one() / T::c(3.0);
        self.pressure
            .iter()
            .enumerate()
            .fold(T::zero(), |acc, (t, p)| acc + mesh.area(t) * third * (p[0] + p[1] + p[2]))
    }

    pub fn subtract_pressure_mean(&mut self, mesh: &Mesh<T>) {
        let mean = self.pressure_integral(mesh) / mesh.total_area();
        for p in &mut self.pressure {
            for v in p.iter_mut() {
                *v -= mean;
            }
        }
    }

    /// Largest absolute coefficient, over both velocity parts and the pressure.
    pub fn max_abs(&self) -> T {
        let mut m = T::zero();
        for &v in self.velocity.iter().chain(self.coarse_velocity.iter().flatten()) {
            m = m.max(v.abs());
        }
        for p in &self.pressure {
            for &v in p {
                m = m.max(v.abs());
            }
        }
        m
    }
}
