//! Conforming triangulations of the unit square, uniform nested refinement and
//! submesh extraction.
//!
//! Vertex and triangle orderings are deterministic. After refinement the fine
//! vertices are sorted row by row (bottom to top, left to right) and fine
//! triangles are grouped by parent, so congruent patches of a structured mesh
//! receive identical local numberings.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geometry::{signed_area, TriangleGeometry};
use crate::scalar::Real;

/// A conforming triangulation with edge topology.
///
/// Local edge `k` of a triangle is the edge opposite its vertex `k`.
#[derive(Debug, Clone)]
pub struct Mesh<T> {
    vertices: Vec<[T; 2]>,
    triangles: Vec<[usize; 3]>,
    boundary_vertex: Vec<bool>,
    mesh_size: T,
    parent_of: Option<Vec<usize>>,
    edges: Vec<[usize; 2]>,
    triangle_edges: Vec<[usize; 3]>,
    boundary_edge: Vec<bool>,
    edge_lookup: HashMap<(usize, usize), usize>,
}

/// Local-to-global index maps of a submesh. Both lists are strictly increasing.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SubmeshMap {
    pub vertices: Vec<usize>,
    pub triangles: Vec<usize>,
}

impl SubmeshMap {
    pub fn local_vertex(&self, global: usize) -> Option<usize> {
        self.vertices.binary_search(&global).ok()
    }

    pub fn local_triangle(&self, global: usize) -> Option<usize> {
        self.triangles.binary_search(&global).ok()
    }
}

impl<T: Real> Mesh<T> {
    /// Builds a mesh from raw vertex and triangle lists, computing edges and
    /// boundary flags. Triangles must be counterclockwise with positive area.
    pub fn from_parts(
        vertices: Vec<[T; 2]>,
        triangles: Vec<[usize; 3]>,
        parent_of: Option<Vec<usize>>,
    ) -> Result<Self> {
        if let Some(parents) = &parent_of {
            if parents.len() != triangles.len() {
                return Err(Error::InvalidArgument(format!(
                    "parent map has {} entries for {} triangles",
                    parents.len(),
                    triangles.len()
                )));
            }
        }
        let mut mesh_size = T::zero();
        for (index, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::InvalidArgument(format!(
                    "triangle {index} references a missing vertex"
                )));
            }
            let pts = [vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]];
            let geo = TriangleGeometry::new(pts).ok_or_else(|| Error::DegenerateTriangle {
                index,
                area: signed_area(pts[0], pts[1], pts[2]).to_f64_lossy(),
            })?;
            mesh_size = mesh_size.max(geo.diameter());
        }

        let mut edge_lookup = HashMap::with_capacity(triangles.len() * 3 / 2 + 4);
        let mut edges = Vec::new();
        let mut edge_count: Vec<u32> = Vec::new();
        let mut triangle_edges = Vec::with_capacity(triangles.len());
        for tri in &triangles {
            let mut te = [0usize; 3];
            for (k, slot) in te.iter_mut().enumerate() {
                let a = tri[(k + 1) % 3];
                let b = tri[(k + 2) % 3];
                let key = (a.min(b), a.max(b));
                let id = *edge_lookup.entry(key).or_insert_with(|| {
                    edges.push([key.0, key.1]);
                    edge_count.push(0);
                    edges.len() - 1
                });
                edge_count[id] += 1;
                *slot = id;
            }
            triangle_edges.push(te);
        }
        if let Some(id) = edge_count.iter().position(|&c| c > 2) {
            return Err(Error::InvalidArgument(format!(
                "edge {:?} shared by more than two triangles",
                edges[id]
            )));
        }
        let boundary_edge: Vec<bool> = edge_count.iter().map(|&c| c == 1).collect();
        let mut boundary_vertex = vec![false; vertices.len()];
        for (e, &b) in edges.iter().zip(&boundary_edge) {
            if b {
                boundary_vertex[e[0]] = true;
                boundary_vertex[e[1]] = true;
            }
        }
        Ok(Self {
            vertices,
            triangles,
            boundary_vertex,
            mesh_size,
            parent_of,
            edges,
            triangle_edges,
            boundary_edge,
            edge_lookup,
        })
    }

    pub fn vertices(&self) -> &[[T; 2]] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Maximum triangle diameter.
    pub fn mesh_size(&self) -> T {
        self.mesh_size
    }

    pub fn parent_of(&self) -> Option<&[usize]> {
        self.parent_of.as_deref()
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary_vertex[v]
    }

    pub fn boundary_vertices(&self) -> Vec<usize> {
        (0..self.vertices.len()).filter(|&v| self.boundary_vertex[v]).collect()
    }

    /// Edge endpoints, smaller vertex index first.
    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn triangle_edges(&self, t: usize) -> [usize; 3] {
        self.triangle_edges[t]
    }

    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.boundary_edge[e]
    }

    pub fn edge_index(&self, a: usize, b: usize) -> Option<usize> {
        self.edge_lookup.get(&(a.min(b), a.max(b))).copied()
    }

    pub fn triangle_points(&self, t: usize) -> [[T; 2]; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn geometry(&self, t: usize) -> TriangleGeometry<T> {
        TriangleGeometry::new(self.triangle_points(t)).expect("validated at construction")
    }

    pub fn area(&self, t: usize) -> T {
        self.geometry(t).area
    }

    pub fn total_area(&self) -> T {
        (0..self.triangles.len()).map(|t| self.area(t)).sum()
    }

    /// Triangles incident to each vertex, in increasing triangle order.
    pub fn vertex_triangles(&self) -> Vec<Vec<usize>> {
        let mut star = vec![Vec::new(); self.vertices.len()];
        for (t, tri) in self.triangles.iter().enumerate() {
            for &v in tri {
                star[v].push(t);
            }
        }
        star
    }

    /// Children of every coarse triangle, inverted from `parent_of`.
    pub fn children(&self, num_coarse: usize) -> Result<Vec<Vec<usize>>> {
        let parents = self.parent_of().ok_or(Error::MissingParentMap)?;
        let mut children = vec![Vec::new(); num_coarse];
        for (t, &p) in parents.iter().enumerate() {
            if p >= num_coarse {
                return Err(Error::InvalidArgument(format!(
                    "parent index {p} out of range for {num_coarse} coarse triangles"
                )));
            }
            children[p].push(t);
        }
        Ok(children)
    }
}

/// Uniform triangulation of the unit square with `n` cells per side, every
/// cell split along its lower-left to upper-right diagonal.
///
/// Vertex `(i, j)` sits at `(i/n, j/n)` with index `j (n+1) + i`.
pub fn build_structured_mesh<T: Real>(n: usize) -> Result<Mesh<T>> {
    if n == 0 {
        return Err(Error::InvalidArgument("structured mesh needs n >= 1".into()));
    }
    let nt = T::from_usize_exact(n);
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push([T::from_usize_exact(i) / nt, T::from_usize_exact(j) / nt]);
        }
    }
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            triangles.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            triangles.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    Mesh::from_parts(vertices, triangles, None)
}

/// Splits every triangle into `m^2` congruent children.
///
/// Coarse vertices keep bit-identical coordinates. Points on a coarse edge are
/// computed from the edge endpoints in a fixed order, so both neighbours of the
/// edge produce the same coordinates.
pub fn refine_uniform<T: Real>(coarse: &Mesh<T>, m: usize) -> Result<Mesh<T>> {
    if m == 0 {
        return Err(Error::InvalidArgument("refinement factor must be >= 1".into()));
    }
    // Lattice point key: (vertex, integer weight) pairs sorted by vertex.
    type Key = [(usize, usize); 3];
    let key_of = |tri: [usize; 3], w: [usize; 3]| -> Key {
        let mut k = [(usize::MAX, 0); 3];
        let mut n = 0;
        for c in 0..3 {
            if w[c] > 0 {
                k[n] = (tri[c], w[c]);
                n += 1;
            }
        }
        k[..n].sort_unstable();
        k
    };
    let mt = T::from_usize_exact(m);
    let mut lookup: HashMap<Key, usize> = HashMap::new();
    let mut points: Vec<[T; 2]> = Vec::new();
    let mut raw_triangles = Vec::with_capacity(coarse.num_triangles() * m * m);
    let mut parents = Vec::with_capacity(coarse.num_triangles() * m * m);

    for (t, &tri) in coarse.triangles().iter().enumerate() {
        let mut local = HashMap::new();
        for a in 0..=m {
            for b in 0..=(m - a) {
                let w = [m - a - b, a, b];
                let key = key_of(tri, w);
                let id = *lookup.entry(key).or_insert_with(|| {
                    let p = if key[1].0 == usize::MAX {
                        coarse.vertices()[key[0].0]
                    } else {
                        let mut acc = [T::zero(); 2];
                        for &(v, wv) in key.iter().filter(|e| e.0 != usize::MAX) {
                            let x = coarse.vertices()[v];
                            let wt = T::from_usize_exact(wv);
                            acc[0] += wt * x[0];
                            acc[1] += wt * x[1];
                        }
                        [acc[0] / mt, acc[1] / mt]
                    };
                    points.push(p);
                    points.len() - 1
                });
                local.insert((a, b), id);
            }
        }
        for a in 0..m {
            for b in 0..(m - a) {
                raw_triangles.push([local[&(a, b)], local[&(a + 1, b)], local[&(a, b + 1)]]);
                parents.push(t);
                if a + b + 2 <= m {
                    raw_triangles.push([
                        local[&(a + 1, b)],
                        local[&(a + 1, b + 1)],
                        local[&(a, b + 1)],
                    ]);
                    parents.push(t);
                }
            }
        }
    }

    // Row-major renumbering on snapped coordinates.
    let scale = T::c((1u64 << 40) as f64);
    let snap = |x: T| num_traits::ToPrimitive::to_i64(&(x * scale).round()).unwrap_or(0);
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by_key(|&i| (snap(points[i][1]), snap(points[i][0])));
    let mut new_id = vec![0usize; points.len()];
    for (new, &old) in order.iter().enumerate() {
        new_id[old] = new;
    }
    let vertices = order.iter().map(|&old| points[old]).collect();
    let triangles = raw_triangles.iter().map(|t| t.map(|v| new_id[v])).collect();
    Mesh::from_parts(vertices, triangles, Some(parents))
}

/// Restricts `mesh` to the listed triangles (duplicates ignored).
///
/// Local vertices and triangles keep the relative order of their global
/// indices. Boundary flags of the submesh are topological: a vertex is on the
/// boundary iff it touches an edge with a single incident triangle.
pub fn extract_submesh<T: Real>(mesh: &Mesh<T>, elements: &[usize]) -> Result<(Mesh<T>, SubmeshMap)> {
    if elements.is_empty() {
        return Err(Error::InvalidArgument("submesh needs at least one triangle".into()));
    }
    let mut tri_ids = elements.to_vec();
    tri_ids.sort_unstable();
    tri_ids.dedup();
    if let Some(&bad) = tri_ids.iter().find(|&&t| t >= mesh.num_triangles()) {
        return Err(Error::InvalidArgument(format!("triangle {bad} out of range")));
    }
    let mut vert_ids: Vec<usize> = tri_ids.iter().flat_map(|&t| mesh.triangles()[t]).collect();
    vert_ids.sort_unstable();
    vert_ids.dedup();
    let map = SubmeshMap { vertices: vert_ids, triangles: tri_ids };
    let vertices = map.vertices.iter().map(|&v| mesh.vertices()[v]).collect();
    let triangles = map
        .triangles
        .iter()
        .map(|&t| mesh.triangles()[t].map(|v| map.local_vertex(v).expect("vertex collected")))
        .collect();
    let sub = Mesh::from_parts(vertices, triangles, None)?;
    Ok((sub, map))
}

/// Plain-text serialization: a `vertices N` block of `x y` lines followed by a
/// `triangles M` block of `a b c` lines (zero-based vertex indices).
pub fn write_mesh_text<T: Real>(mesh: &Mesh<T>) -> String {
    let mut out = String::new();
    out.push_str(&format!("vertices {}\n", mesh.num_vertices()));
    for v in mesh.vertices() {
        out.push_str(&format!("{:.17e} {:.17e}\n", v[0].to_f64_lossy(), v[1].to_f64_lossy()));
    }
    out.push_str(&format!("triangles {}\n", mesh.num_triangles()));
    for t in mesh.triangles() {
        out.push_str(&format!("{} {} {}\n", t[0], t[1], t[2]));
    }
    out
}
