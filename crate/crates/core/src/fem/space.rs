//! Degree-of-freedom layout of scalar finite element spaces.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fem::element::{shape_functions, ElementKind, ShapeValues};
use crate::fem::quadrature::QuadratureRule;
use crate::mesh::{Mesh, SubmeshMap};
use crate::scalar::Real;

/// A scalar continuous space on a mesh.
///
/// Global numbering: vertex dofs first (by vertex index), then edge dofs (P2,
/// by edge index) or bubble dofs (by triangle index). Vector fields stack two
/// copies: component `c` of dof `i` lives at `c * num_dofs() + i`.
#[derive(Debug, Clone)]
pub struct FeSpace<T> {
    mesh: Arc<Mesh<T>>,
    kind: ElementKind,
    num_dofs: usize,
    dof_coords: Vec<[T; 2]>,
    element_dofs: Vec<usize>,
    constrained: Vec<bool>,
    zero_extension: Option<Vec<usize>>,
}

impl<T: Real> FeSpace<T> {
    /// Builds the space; with `constrain_boundary` every dof located on the
    /// mesh boundary is marked as a homogeneous Dirichlet dof.
    pub fn new(mesh: Arc<Mesh<T>>, kind: ElementKind, constrain_boundary: bool) -> Self {
        let nv = mesh.num_vertices();
        let nloc = kind.local_dofs();
        let extra = match kind {
            ElementKind::P1 => 0,
            ElementKind::P2 => mesh.num_edges(),
            ElementKind::P1Bubble => mesh.num_triangles(),
        };
        let num_dofs = nv + extra;
        let mut dof_coords = mesh.vertices().to_vec();
        let mut constrained: Vec<bool> = (0..nv).map(|v| constrain_boundary && mesh.is_boundary_vertex(v)).collect();
        let half = T::c(0.5);
        match kind {
            ElementKind::P1 => {}
            ElementKind::P2 => {
                for (e, [a, b]) in mesh.edges().iter().enumerate() {
                    let (p, q) = (mesh.vertices()[*a], mesh.vertices()[*b]);
                    dof_coords.push([half * (p[0] + q[0]), half * (p[1] + q[1])]);
                    constrained.push(constrain_boundary && mesh.is_boundary_edge(e));
                }
            }
            ElementKind::P1Bubble => {
                for t in 0..mesh.num_triangles() {
                    dof_coords.push(mesh.geometry(t).barycenter());
                    constrained.push(false);
                }
            }
        }
        let mut element_dofs = Vec::with_capacity(mesh.num_triangles() * nloc);
        for (t, tri) in mesh.triangles().iter().enumerate() {
            element_dofs.extend_from_slice(tri);
            match kind {
                ElementKind::P1 => {}
                ElementKind::P2 => element_dofs.extend(mesh.triangle_edges(t).iter().map(|&e| nv + e)),
                ElementKind::P1Bubble => element_dofs.push(nv + t),
            }
        }
        Self { mesh, kind, num_dofs, dof_coords, element_dofs, constrained, zero_extension: None }
    }

    /// Attaches the map from local dofs to the dofs of `global`, the same kind
    /// of space on the mesh this submesh was extracted from.
    pub fn with_zero_extension(mut self, global: &FeSpace<T>, map: &SubmeshMap) -> Result<Self> {
        if global.kind != self.kind {
            return Err(Error::InvalidArgument("zero extension across element kinds".into()));
        }
        let nv = self.mesh.num_vertices();
        let gnv = global.mesh.num_vertices();
        let mut ext = Vec::with_capacity(self.num_dofs);
        ext.extend(map.vertices.iter().copied());
        match self.kind {
            ElementKind::P1 => {}
            ElementKind::P2 => {
                for [a, b] in self.mesh.edges() {
                    let ge = global
                        .mesh
                        .edge_index(map.vertices[*a], map.vertices[*b])
                        .ok_or_else(|| Error::InvalidArgument("submesh edge missing from global mesh".into()))?;
                    ext.push(gnv + ge);
                }
            }
            ElementKind::P1Bubble => ext.extend(map.triangles.iter().map(|&t| gnv + t)),
        }
        debug_assert_eq!(ext.len(), self.num_dofs);
        debug_assert!(ext.len() >= nv);
        self.zero_extension = Some(ext);
        Ok(self)
    }

    pub fn mesh(&self) -> &Mesh<T> {
        &self.mesh
    }

    pub fn mesh_arc(&self) -> &Arc<Mesh<T>> {
        &self.mesh
    }

    pub fn kind(&self) -> ElementKind {
        self.kind
    }

    pub fn num_dofs(&self) -> usize {
        self.num_dofs
    }

    pub fn dof_coordinates(&self) -> &[[T; 2]] {
        &self.dof_coords
    }

    pub fn element_dofs(&self, t: usize) -> &[usize] {
        let n = self.kind.local_dofs();
        &self.element_dofs[t * n..(t + 1) * n]
    }

    pub fn is_constrained(&self, dof: usize) -> bool {
        self.constrained[dof]
    }

    pub fn constrained(&self) -> &[bool] {
        &self.constrained
    }

    pub fn zero_extension(&self) -> Option<&[usize]> {
        self.zero_extension.as_deref()
    }

    /// Shape functions of triangle `t` at barycentric point `l`.
    #[inline]
    pub fn shape(&self, grad_lambda: &[[T; 2]; 3], l: [T; 3]) -> ShapeValues<T> {
        shape_functions(self.kind, l, grad_lambda)
    }

    /// `∫ basis_i dx` for every dof.
    pub fn basis_integrals(&self) -> Vec<T> {
        let rule = QuadratureRule::<T>::with_degree(4);
        let mut out = vec![T::zero(); self.num_dofs];
        for t in 0..self.mesh.num_triangles() {
            let geo = self.mesh.geometry(t);
            let dofs = self.element_dofs(t);
            for (l, &w) in rule.points.iter().zip(&rule.weights) {
                let s = self.shape(&geo.grad_lambda, *l);
                for (k, &d) in dofs.iter().enumerate() {
                    out[d] += w * geo.area * s.values[k];
                }
            }
        }
        out
    }

    /// Nodal interpolant of a scalar function (bubble coefficients are set so
    /// the interpolant matches the function at the barycenter).
    pub fn interpolate(&self, f: impl Fn([T; 2]) -> T) -> Vec<T> {
        let mut out: Vec<T> = self.dof_coords.iter().map(|&x| f(x)).collect();
        if self.kind == ElementKind::P1Bubble {
            let nv = self.mesh.num_vertices();
            let third = T::one() / T::c(3.0);
            for t in 0..self.mesh.num_triangles() {
                let [a, b, c] = self.mesh.triangles()[t];
                out[nv + t] = out[nv + t] - third * (out[a] + out[b] + out[c]);
            }
        }
        out
    }
}
