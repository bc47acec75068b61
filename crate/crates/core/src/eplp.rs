//! The two-grid iteration: a coarse solve, overlapping local corrections on
//! the fine mesh weighted by the coarse partition of unity, and a coarse
//! correction, repeated `K` times.

use std::collections::HashMap;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem::assembly::{assemble_load, assemble_stokes};
use crate::fem::element::Family;
use crate::fem::norms::{compute_errors, ErrorTriple};
use crate::fem::residual::{coarse_residual, fine_residual, weighted_residual};
use crate::fem::space::FeSpace;
use crate::fem::state::{PressureContinuity, StokesState, TwoLevel};
use crate::mesh::{build_structured_mesh, extract_submesh, refine_uniform, Mesh, SubmeshMap};
use crate::partition::{build_patches, ExtensionMode, PatchSet};
use crate::problems::ManufacturedProblem;
use crate::saddle::{validate_tol, SaddleFactorization, DEFAULT_TOL};
use crate::scalar::{norm2, Real};

/// Default constant in the iteration-count formula.
pub const DEFAULT_DECAY_CONSTANT: f64 = 4.6;

/// Patches solved per parallel batch; bounds the memory held by corrections
/// awaiting accumulation.
const BATCH: usize = 256;

/// `K = floor(1 / alpha_d + 0.5)` with `alpha_2 = c / |ln H|^2` and
/// `alpha_3 = c / |ln H|`, clamped below by 1.
pub fn iteration_count(h: f64, d: usize, c: f64) -> Result<usize> {
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::InvalidArgument(format!("coarse mesh size must lie in (0, 1), got {h}")));
    }
    if !(c > 0.0) {
        return Err(Error::InvalidArgument(format!("decay constant must be positive, got {c}")));
    }
    let l = h.ln().abs();
    let alpha = match d {
        2 => c / (l * l),
        3 => c / l,
        _ => return Err(Error::InvalidArgument(format!("dimension must be 2 or 3, got {d}"))),
    };
    Ok(((1.0 / alpha + 0.5).floor() as usize).max(1))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EplpConfig<T> {
    /// Coarse mesh has `n_coarse` cells per side.
    pub n_coarse: usize,
    /// Each coarse triangle is split into `m_refine^2` fine triangles.
    pub m_refine: usize,
    pub family: Family,
    pub nu: T,
    pub k_override: Option<usize>,
    pub c: f64,
    pub tol: T,
    /// Worker threads for the local solves; `None` uses every core.
    pub threads: Option<usize>,
    pub extension: ExtensionMode,
}

impl<T: Real> EplpConfig<T> {
    pub fn new(n_coarse: usize, m_refine: usize, family: Family) -> Self {
        Self {
            n_coarse,
            m_refine,
            family,
            nu: T::one(),
            k_override: None,
            c: DEFAULT_DECAY_CONSTANT,
            tol: T::c(DEFAULT_TOL),
            threads: None,
            extension: ExtensionMode::OneLayer,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_coarse < 2 {
            return Err(Error::InvalidArgument(format!("coarse mesh needs n >= 2, got {}", self.n_coarse)));
        }
        if self.m_refine < 2 {
            return Err(Error::InvalidArgument(format!("refinement factor must be >= 2, got {}", self.m_refine)));
        }
        if self.k_override == Some(0) {
            return Err(Error::InvalidArgument("iteration count override must be >= 1".into()));
        }
        if !(self.c > 0.0) {
            return Err(Error::InvalidArgument(format!("decay constant must be positive, got {}", self.c)));
        }
        if !(self.nu > T::zero()) {
            return Err(Error::InvalidArgument(format!("viscosity must be positive, got {}", self.nu)));
        }
        if self.threads == Some(0) {
            return Err(Error::InvalidArgument("thread count must be >= 1".into()));
        }
        validate_tol(self.tol)
    }

    /// Nominal coarse mesh size `1 / n`.
    pub fn coarse_h(&self) -> f64 {
        1.0 / self.n_coarse as f64
    }

    /// Nominal fine mesh size `1 / (n m)`.
    pub fn fine_h(&self) -> f64 {
        1.0 / (self.n_coarse * self.m_refine) as f64
    }

    pub fn iterations(&self) -> Result<usize> {
        match self.k_override {
            Some(k) => Ok(k),
            None => iteration_count(self.coarse_h(), 2, self.c),
        }
    }
}

/// The local saddle problem on one extended patch.
#[derive(Debug, Clone)]
pub struct LocalProblem<T> {
    pub j: usize,
    pub map: SubmeshMap,
    pub space_u: FeSpace<T>,
    pub space_p: FeSpace<T>,
}

impl<T: Real> LocalProblem<T> {
    pub fn new(tl: &TwoLevel<T>, patches: &PatchSet<T>, j: usize) -> Result<Self> {
        let patch = &patches.patches()[j];
        let (sub, map) = extract_submesh(tl.fine_mesh(), &patch.extension_fine)?;
        let sub = Arc::new(sub);
        let family = tl.family();
        let space_u = FeSpace::new(sub.clone(), family.velocity(), true).with_zero_extension(tl.fine_velocity(), &map)?;
        let space_p = FeSpace::new(sub, family.pressure(), false).with_zero_extension(tl.fine_pressure(), &map)?;
        Ok(Self { j, map, space_u, space_p })
    }

    pub fn mesh(&self) -> &Mesh<T> {
        self.space_u.mesh()
    }

    /// Key identifying local problems whose matrices agree up to a translation.
    fn signature(&self, h: f64) -> Vec<i64> {
        let mesh = self.mesh();
        let x0 = mesh.vertices()[0];
        let q = h.recip() * 1048576.0;
        let mut key = Vec::with_capacity(2 * mesh.num_vertices() + 3 * mesh.num_triangles() + 2);
        key.push(mesh.num_vertices() as i64);
        key.push(mesh.num_triangles() as i64);
        for v in mesh.vertices() {
            for d in 0..2 {
                key.push(((v[d] - x0[d]).to_f64_lossy() * q).round() as i64);
            }
        }
        for t in mesh.triangles() {
            key.extend(t.iter().map(|&v| v as i64));
        }
        key
    }

    fn factorize(&self, nu: T) -> Result<SaddleFactorization<T>> {
        let blocks = assemble_stokes(&self.space_u, &self.space_p, nu)?;
        let mut constrained = self.space_u.constrained().to_vec();
        constrained.extend_from_within(..);
        SaddleFactorization::new(&blocks.a, &blocks.bdiv, &constrained, &self.space_p.basis_integrals())
    }
}

/// A local correction, kept in local coordinates.
#[derive(Debug, Clone)]
pub struct LocalCorrection<T> {
    pub j: usize,
    /// Stacked local velocity coefficients.
    pub velocity: Vec<T>,
    /// Local P1 pressure coefficients (continuous on the patch).
    pub pressure: Vec<T>,
}

impl<T: Real> LocalCorrection<T> {
    /// Velocity scattered into the global fine velocity numbering.
    pub fn zero_extended_velocity(&self, local: &LocalProblem<T>, global_dofs: usize) -> Vec<T> {
        let mut out = vec![T::zero(); 2 * global_dofs];
        scatter_velocity(&mut out, &self.velocity, local, global_dofs);
        out
    }
}

fn scatter_velocity<T: Real>(out: &mut [T], velocity: &[T], local: &LocalProblem<T>, global_dofs: usize) {
    let ext = local.space_u.zero_extension().expect("local spaces carry the zero extension");
    let nl = local.space_u.num_dofs();
    for c in 0..2 {
        for (d, &g) in ext.iter().enumerate() {
            out[c * global_dofs + g] += velocity[c * nl + d];
        }
    }
}

/// Adds the corrections, in the order given, to `state`. Pressures are added
/// per fine element, so the result is flagged as broken.
pub fn accumulate<T: Real>(
    state: &mut StokesState<T>,
    corrections: &[(LocalProblem<T>, LocalCorrection<T>)],
    global_dofs: usize,
) {
    for (local, corr) in corrections {
        scatter_velocity(&mut state.velocity, &corr.velocity, local, global_dofs);
        for (lt, &t) in local.map.triangles.iter().enumerate() {
            let tri = local.mesh().triangles()[lt];
            for (k, &v) in tri.iter().enumerate() {
                state.pressure[t][k] += corr.pressure[v];
            }
        }
    }
    if !corrections.is_empty() {
        state.continuity = PressureContinuity::Broken;
    }
}

/// What one complete run produced.
#[derive(Debug, Clone)]
pub struct EplpRun<T> {
    pub state: StokesState<T>,
    pub iterations: usize,
    /// Errors after the coarse solve, then after every cycle.
    pub trace: Vec<ErrorTriple<T>>,
    /// Coarse residual after every cycle, relative to the coarse load norm.
    pub coarse_residuals: Vec<T>,
    pub wall_time_s: f64,
}

/// Coarse and fine discretizations, patches, and all factorizations.
pub struct EplpSolver<T: Real> {
    config: EplpConfig<T>,
    tl: TwoLevel<T>,
    patches: PatchSet<T>,
    coarse: SaddleFactorization<T>,
    /// Factorization slot per patch.
    local_slot: Vec<usize>,
    local_factorizations: Vec<SaddleFactorization<T>>,
    pool: rayon::ThreadPool,
}

impl<T: Real> std::fmt::Debug for EplpSolver<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EplpSolver")
            .field("config", &self.config)
            .field("patches", &self.patches.len())
            .field("distinct_local_factorizations", &self.local_factorizations.len())
            .finish()
    }
}

impl<T: Real> EplpSolver<T> {
    pub fn new(config: EplpConfig<T>) -> Result<Self> {
        config.validate()?;
        let coarse = Arc::new(build_structured_mesh::<T>(config.n_coarse)?);
        let fine = Arc::new(refine_uniform(&coarse, config.m_refine)?);
        let tl = TwoLevel::new(coarse.clone(), fine.clone(), config.family)?;
        let patches = build_patches(coarse, &fine, config.extension)?;
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(t) = config.threads {
            builder = builder.num_threads(t);
        }
        let pool = builder.build().map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;

        let coarse_fact = {
            let blocks = assemble_stokes(tl.coarse_velocity(), tl.coarse_pressure(), config.nu)?;
            let mut constrained = tl.coarse_velocity().constrained().to_vec();
            constrained.extend_from_within(..);
            SaddleFactorization::new(&blocks.a, &blocks.bdiv, &constrained, &tl.coarse_pressure().basis_integrals())?
        };

        // group patches by shape; the lowest index of each group is factorized
        let h = config.fine_h();
        let signatures: Vec<Vec<i64>> = pool.install(|| {
            (0..patches.len())
                .into_par_iter()
                .map(|j| LocalProblem::new(&tl, &patches, j).map(|lp| lp.signature(h)))
                .collect::<Result<Vec<_>>>()
        })?;
        let mut slot_of: HashMap<&[i64], usize> = HashMap::new();
        let mut representatives = Vec::new();
        let local_slot: Vec<usize> = signatures
            .iter()
            .enumerate()
            .map(|(j, sig)| {
                *slot_of.entry(sig.as_slice()).or_insert_with(|| {
                    representatives.push(j);
                    representatives.len() - 1
                })
            })
            .collect();
        let nu = config.nu;
        let local_factorizations = pool.install(|| {
            representatives
                .par_iter()
                .map(|&j| {
                    LocalProblem::new(&tl, &patches, j)
                        .and_then(|lp| lp.factorize(nu))
                        .map_err(|e| Error::Patch { patch: j, source: Box::new(e) })
                })
                .collect::<Result<Vec<_>>>()
        })?;
        Ok(Self { config, tl, patches, coarse: coarse_fact, local_slot, local_factorizations, pool })
    }

    pub fn config(&self) -> &EplpConfig<T> {
        &self.config
    }

    pub fn two_level(&self) -> &TwoLevel<T> {
        &self.tl
    }

    pub fn patches(&self) -> &PatchSet<T> {
        &self.patches
    }

    pub fn distinct_local_problems(&self) -> usize {
        self.local_factorizations.len()
    }

    /// Solves the coarse problem and re-expands it on the fine mesh.
    pub fn coarse_solve<F: Fn([T; 2]) -> [T; 2]>(&self, f: &F) -> Result<StokesState<T>> {
        let load = assemble_load(f, self.tl.coarse_velocity());
        let (u, p) = self.coarse.solve(&load, &vec![T::zero(); self.tl.coarse_pressure().num_dofs()], self.config.tol)?;
        Ok(StokesState::from_coarse(&self.tl, &u, &p))
    }

    /// Local correction on patch `j`, driven by the hat-weighted residual of `state`.
    pub fn local_correct<F: Fn([T; 2]) -> [T; 2]>(
        &self,
        state: &StokesState<T>,
        j: usize,
        f: &F,
    ) -> Result<(LocalProblem<T>, LocalCorrection<T>)> {
        let tag = |e| Error::Patch { patch: j, source: Box::new(e) };
        let local = LocalProblem::new(&self.tl, &self.patches, j).map_err(tag)?;
        let rhs = weighted_residual(
            &self.tl,
            state,
            &self.patches,
            j,
            f,
            self.config.nu,
            &local.space_u,
            &local.space_p,
            &local.map,
        );
        let fact = &self.local_factorizations[self.local_slot[j]];
        let (velocity, pressure) = fact.solve(&rhs.momentum, &rhs.mass, self.config.tol).map_err(tag)?;
        Ok((local, LocalCorrection { j, velocity, pressure }))
    }

    /// Step 1: every local correction, added in ascending patch order.
    pub fn local_step<F: Fn([T; 2]) -> [T; 2] + Sync>(&self, state: &StokesState<T>, f: &F) -> Result<StokesState<T>> {
        let mut next = state.clone();
        let nf = self.tl.fine_velocity().num_dofs();
        let n = self.patches.len();
        let mut start = 0;
        while start < n {
            let end = (start + BATCH).min(n);
            let batch = self.pool.install(|| {
                (start..end)
                    .into_par_iter()
                    .map(|j| self.local_correct(state, j, f))
                    .collect::<Result<Vec<_>>>()
            })?;
            accumulate(&mut next, &batch, nf);
            start = end;
        }
        Ok(next)
    }

    /// Step 2: coarse correction of the accumulated state, then removal of
    /// the global pressure mean.
    pub fn coarse_correct<F: Fn([T; 2]) -> [T; 2]>(&self, state: &StokesState<T>, f: &F) -> Result<StokesState<T>> {
        let r = coarse_residual(&self.tl, state, f, self.config.nu);
        let (eu, ep) = self.coarse.solve(&r.momentum, &r.mass, self.config.tol)?;
        let mut next = state.clone();
        next.add_coarse(&self.tl, &eu, &ep);
        next.subtract_pressure_mean(self.tl.fine_mesh());
        Ok(next)
    }

    /// Coarse residual norm of `state`, relative to the coarse load norm.
    pub fn relative_coarse_residual<F: Fn([T; 2]) -> [T; 2]>(&self, state: &StokesState<T>, f: &F) -> T {
        let r = coarse_residual(&self.tl, state, f, self.config.nu);
        let load = assemble_load(f, self.tl.coarse_velocity());
        let scale = norm2(&load);
        let rn = r.free_norm(self.tl.coarse_velocity());
        if scale > T::zero() {
            rn / scale
        } else {
            rn
        }
    }

    /// Runs the coarse solve and `K` cycles, recording errors against the
    /// exact solution after each stage.
    pub fn run(&self, problem: &ManufacturedProblem<T>) -> Result<EplpRun<T>> {
        let started = Instant::now();
        let f = |x: [T; 2]| problem.body_force(x);
        let k = self.config.iterations()?;
        let mut state = self.coarse_solve(&f)?;
        let exact = |x: [T; 2]| problem.exact(x);
        let mut trace = vec![compute_errors(&self.tl, &state, exact)];
        let mut coarse_residuals = Vec::with_capacity(k);
        for _ in 0..k {
            let accumulated = self.local_step(&state, &f)?;
            state = self.coarse_correct(&accumulated, &f)?;
            coarse_residuals.push(self.relative_coarse_residual(&state, &f));
            trace.push(compute_errors(&self.tl, &state, exact));
        }
        Ok(EplpRun { state, iterations: k, trace, coarse_residuals, wall_time_s: started.elapsed().as_secs_f64() })
    }

    /// Ring-wise `|grad e_j|` of the first local correction of patch `j`,
    /// over coarse annuli around the support of `phi_j`.
    pub fn decay_profile<F: Fn([T; 2]) -> [T; 2]>(&self, j: usize, f: &F, rings: usize) -> Result<Vec<T>> {
        if j >= self.patches.len() {
            return Err(Error::InvalidArgument(format!("patch {j} out of range")));
        }
        let state = self.coarse_solve(f)?;
        let (local, corr) = self.local_correct(&state, j, f)?;
        let nf = self.tl.fine_velocity().num_dofs();
        let mut e = StokesState::zeros(&self.tl);
        e.velocity = corr.zero_extended_velocity(&local, nf);
        Ok(ring_energies(&self.tl, &self.patches, j, &e, rings))
    }
}

/// `|grad u|` of the velocity part of `state` over each coarse ring around patch `j`.
pub fn ring_energies<T: Real>(
    tl: &TwoLevel<T>,
    patches: &PatchSet<T>,
    j: usize,
    state: &StokesState<T>,
    rings: usize,
) -> Vec<T> {
    let children = tl.fine_mesh().children(tl.coarse_mesh().num_triangles()).expect("fine mesh has a parent map");
    let rule = crate::fem::quadrature::QuadratureRule::<T>::with_degree(crate::fem::assembly::BILINEAR_DEGREE);
    patches
        .rings(j, rings)
        .iter()
        .map(|ring| {
            let mut s = T::zero();
            for &tc in ring {
                for &t in &children[tc] {
                    let geo = tl.fine_mesh().geometry(t);
                    for (l, &w) in rule.points.iter().zip(&rule.weights) {
                        let v = tl.evaluate(state, t, &geo, *l);
                        let g = v.grad_u;
                        s += w * geo.area * (g[0][0] * g[0][0] + g[0][1] * g[0][1] + g[1][0] * g[1][0] + g[1][1] * g[1][1]);
                    }
                }
            }
            s.sqrt()
        })
        .collect()
}

/// Standard Galerkin solve on the fine level of `tl`.
pub fn solve_fine<T: Real, F: Fn([T; 2]) -> [T; 2]>(tl: &TwoLevel<T>, f: &F, nu: T, tol: T) -> Result<StokesState<T>> {
    let (su, sp) = (tl.fine_velocity(), tl.fine_pressure());
    let blocks = assemble_stokes(su, sp, nu)?;
    let mut constrained = su.constrained().to_vec();
    constrained.extend_from_within(..);
    let fact = SaddleFactorization::new(&blocks.a, &blocks.bdiv, &constrained, &sp.basis_integrals())?;
    let load = assemble_load(f, su);
    let (u, p) = fact.solve(&load, &vec![T::zero(); sp.num_dofs()], tol)?;
    Ok(StokesState::from_fine(tl, u, &p))
}

/// Two-level spaces whose fine level is the uniform `n x n` mesh. The coarse
/// level is the single-cell mesh and only serves as the parent.
pub fn single_level<T: Real>(n: usize, family: Family) -> Result<TwoLevel<T>> {
    let coarse = Arc::new(build_structured_mesh::<T>(1)?);
    let fine = Arc::new(refine_uniform(&coarse, n)?);
    TwoLevel::new(coarse, fine, family)
}

/// Fine-level residual norm of a state, for diagnostics.
pub fn fine_residual_norm<T: Real, F: Fn([T; 2]) -> [T; 2]>(tl: &TwoLevel<T>, state: &StokesState<T>, f: &F, nu: T) -> (T, T) {
    let r = fine_residual(tl, state, f, nu);
    let n = tl.fine_velocity().num_dofs();
    let mom: Vec<T> = r
        .momentum
        .iter()
        .enumerate()
        .map(|(i, &v)| if tl.fine_velocity().is_constrained(i % n) { T::zero() } else { v })
        .collect();
    (norm2(&mom), norm2(&r.mass))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iteration_counts() {
        assert_eq!(iteration_count(1.0 / 16.0, 2, 4.6).unwrap(), 2);
        let ks: Vec<usize> = [16.0, 25.0, 36.0, 49.0, 64.0]
            .iter()
            .map(|n: &f64| iteration_count(1.0 / n, 2, 4.6).unwrap())
            .collect();
        assert_eq!(ks[0], 2);
        assert_eq!(ks[4], 4);
        assert_eq!(iteration_count(0.99, 2, 4.6).unwrap(), 1);
        assert!(iteration_count(1.0, 2, 4.6).is_err());
        assert!(iteration_count(0.5, 4, 4.6).is_err());
        assert!(iteration_count(0.5, 2, 0.0).is_err());
        // alpha_3 = c / |ln H|
        assert_eq!(iteration_count(1.0 / 16.0, 3, 4.6).unwrap(), 1);
    }

    #[test]
    fn config_validation() {
        let mut c = EplpConfig::<f64>::new(4, 2, Family::TaylorHood);
        assert!(c.validate().is_ok());
        c.m_refine = 1;
        assert!(c.validate().is_err());
        c.m_refine = 2;
        c.k_override = Some(0);
        assert!(c.validate().is_err());
        c.k_override = Some(3);
        assert_eq!(c.iterations().unwrap(), 3);
        c.tol = 1e-3;
        assert!(c.validate().is_err());
    }
}
