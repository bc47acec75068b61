//! Partition of unity by coarse hat functions, with supports and one-layer
//! extensions for the local subproblems.

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::scalar::Real;

/// How far each local domain extends beyond the support of its hat function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExtensionMode {
    /// Union of the supports of all hats whose vertex lies in the support.
    #[default]
    OneLayer,
    /// Every local domain is the whole square (diagnostic mode).
    Full,
}

/// One patch per coarse vertex `j`: `D_j = supp(phi_j)` and its extension.
///
/// All element lists are sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Patch {
    pub vertex: usize,
    pub support_coarse: Vec<usize>,
    pub extension_coarse: Vec<usize>,
    pub support_fine: Vec<usize>,
    pub extension_fine: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct PatchSet<T> {
    coarse: Arc<Mesh<T>>,
    patches: Vec<Patch>,
    mode: ExtensionMode,
}

impl<T: Real> PatchSet<T> {
    pub fn patches(&self) -> &[Patch] {
        &self.patches
    }

    pub fn len(&self) -> usize {
        self.patches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patches.is_empty()
    }

    pub fn mode(&self) -> ExtensionMode {
        self.mode
    }

    pub fn coarse(&self) -> &Mesh<T> {
        &self.coarse
    }

    /// Value of the hat `phi_j` at a point of the unit square.
    pub fn eval_hat(&self, j: usize, point: [T; 2]) -> Result<T> {
        let inside = |x: T| x >= T::zero() && x <= T::one();
        if !(inside(point[0]) && inside(point[1])) {
            return Err(Error::PointOutsideDomain {
                x: point[0].to_f64_lossy(),
                y: point[1].to_f64_lossy(),
            });
        }
        let patch = self
            .patches
            .get(j)
            .ok_or_else(|| Error::InvalidArgument(format!("patch {j} out of range")))?;
        let tol = T::epsilon() * T::c(64.0);
        for &t in &patch.support_coarse {
            let geo = self.coarse.geometry(t);
            if geo.contains(point, tol) {
                let k = self.local_index(t, j);
                return Ok(geo.barycentric(point)[k].max(T::zero()).min(T::one()));
            }
        }
        Ok(T::zero())
    }

    /// `phi_j` restricted to coarse triangle `t`, as (barycentric slot, gradient).
    /// Returns `None` when `t` is not in the support.
    pub fn hat_on_triangle(&self, j: usize, t: usize) -> Option<(usize, [T; 2])> {
        let tri = self.coarse.triangles()[t];
        let k = tri.iter().position(|&v| v == self.patches[j].vertex)?;
        Some((k, self.coarse.geometry(t).grad_lambda[k]))
    }

    fn local_index(&self, t: usize, j: usize) -> usize {
        let v = self.patches[j].vertex;
        self.coarse.triangles()[t]
            .iter()
            .position(|&x| x == v)
            .expect("triangle in support contains the patch vertex")
    }

    /// Largest number of extensions containing a single coarse triangle.
    pub fn max_overlap(&self) -> usize {
        let mut count = vec![0usize; self.coarse.num_triangles()];
        for p in &self.patches {
            for &t in &p.extension_coarse {
                count[t] += 1;
            }
        }
        count.into_iter().max().unwrap_or(0)
    }

    /// Coarse-layer annuli around `D_j`: ring 0 is `D_j`, ring `k+1` adds the
    /// supports of every vertex touched by rings `0..=k`. Stops early when the
    /// mesh is exhausted.
    pub fn rings(&self, j: usize, count: usize) -> Vec<Vec<usize>> {
        let stars = self.coarse.vertex_triangles();
        let mut seen: BTreeSet<usize> = self.patches[j].support_coarse.iter().copied().collect();
        let mut rings = vec![self.patches[j].support_coarse.clone()];
        while rings.len() < count {
            let verts: BTreeSet<usize> =
                seen.iter().flat_map(|&t| self.coarse.triangles()[t]).collect();
            let next: BTreeSet<usize> = verts
                .iter()
                .flat_map(|&v| stars[v].iter().copied())
                .filter(|t| !seen.contains(t))
                .collect();
            if next.is_empty() {
                break;
            }
            seen.extend(next.iter().copied());
            rings.push(next.into_iter().collect());
        }
        rings
    }
}

/// Builds one patch per coarse vertex, boundary vertices included.
pub fn build_patches<T: Real>(
    coarse: Arc<Mesh<T>>,
    fine: &Mesh<T>,
    mode: ExtensionMode,
) -> Result<PatchSet<T>> {
    let children = fine.children(coarse.num_triangles())?;
    let stars = coarse.vertex_triangles();
    let all_coarse: Vec<usize> = (0..coarse.num_triangles()).collect();
    let to_fine = |coarse_list: &[usize]| -> Vec<usize> {
        let mut v: Vec<usize> = coarse_list.iter().flat_map(|&t| children[t].iter().copied()).collect();
        v.sort_unstable();
        v
    };
    let mut patches = Vec::with_capacity(coarse.num_vertices());
    for (j, star) in stars.iter().enumerate() {
        let support_coarse = star.clone();
        let extension_coarse = match mode {
            ExtensionMode::OneLayer => {
                let verts: BTreeSet<usize> =
                    support_coarse.iter().flat_map(|&t| coarse.triangles()[t]).collect();
                let ext: BTreeSet<usize> = verts.iter().flat_map(|&v| stars[v].iter().copied()).collect();
                ext.into_iter().collect()
            }
            ExtensionMode::Full => all_coarse.clone(),
        };
        patches.push(Patch {
            vertex: j,
            support_fine: to_fine(&support_coarse),
            extension_fine: to_fine(&extension_coarse),
            support_coarse,
            extension_coarse,
        });
    }
    Ok(PatchSet { coarse, patches, mode })
}
