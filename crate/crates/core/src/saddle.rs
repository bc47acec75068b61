//! Solution of the Stokes saddle-point system with a mean-zero pressure
//! constraint.
//!
//! The discrete problem is: find `(u, p)` with
//! `a(u, v) + d(p, v) - d(q, u) = F(v) + G(q)` for all free velocity tests `v`
//! and pressure tests `q` with `w . q = 0`, and `w . p = 0`. In matrix form this
//! is the symmetric system
//!
//! ```text
//! [ A  B^T 0 ] [u]   [ F]
//! [ B  0   w ] [p] = [-G]
//! [ 0  w^T 0 ] [l]   [ 0]
//! ```
//!
//! with constrained velocity rows and columns removed. Small systems are
//! factorized directly with sparse LU. Large ones whose velocity block is two
//! identical scalar blocks are reduced to the pressure Schur complement,
//! solved by preconditioned conjugate gradients with a sparse Cholesky
//! factorization of the scalar block.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::cholesky::llt::factor::LltRegularization;
use faer::sparse::linalg::cholesky::{factorize_symbolic_cholesky, LltRef, SymbolicCholesky, SymmetricOrdering};
use faer::sparse::linalg::lu::{factorize_symbolic_lu, LuRef, NumericLu, SymbolicLu};
use faer::sparse::linalg::LuError;
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::{Conj, MatMut, Par, Side};

use crate::error::{Error, Result};
use crate::scalar::{norm2, Real};
use crate::sparse::{CsrMatrix, TripletBuilder};

/// Default relative residual tolerance.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Systems with more unknowns than this use the Schur-complement solver.
pub const DIRECT_LIMIT: usize = 20_000;

const MAX_REFINEMENT_STEPS: usize = 8;
const MAX_CG_ITERATIONS: usize = 2_000;

/// A saddle-point system with its right-hand sides.
#[derive(Debug, Clone)]
pub struct SaddleSystem<T> {
    /// Velocity block for the stacked components.
    pub a: CsrMatrix<T>,
    /// `bdiv[i, k] = d(chi_i, psi_k)`.
    pub bdiv: CsrMatrix<T>,
    /// `F(psi_k)`.
    pub rhs_u: Vec<T>,
    /// `G(chi_i)`.
    pub rhs_p: Vec<T>,
    /// One flag per velocity row; constrained values are zero.
    pub constrained: Vec<bool>,
    /// Pressure weights `w_i = ∫ chi_i`.
    pub mean_weights: Vec<T>,
}

/// Solves the system.
pub fn solve_saddle<T: Real>(system: &SaddleSystem<T>, tol: T) -> Result<(Vec<T>, Vec<T>)> {
    let fact = SaddleFactorization::new(&system.a, &system.bdiv, &system.constrained, &system.mean_weights)?;
    fact.solve(&system.rhs_u, &system.rhs_p, tol)
}

pub fn validate_tol<T: Real>(tol: T) -> Result<()> {
    if tol > T::zero() && tol <= T::c(1e-6) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("solver tolerance must lie in (0, 1e-6], got {tol}")))
    }
}

struct Direct<T: Real> {
    kkt: CsrMatrix<T>,
    symbolic: SymbolicLu<usize>,
    numeric: NumericLu<usize, T>,
}

struct Schur<T: Real> {
    symbolic: SymbolicCholesky<usize>,
    values: Vec<T>,
    /// Free dofs per component.
    n_scalar: usize,
}

enum Backend<T: Real> {
    Direct(Box<Direct<T>>),
    Schur(Box<Schur<T>>),
}

/// Factorized saddle operator, reusable for many right-hand sides.
pub struct SaddleFactorization<T: Real> {
    /// `A` and `B` restricted to free velocity dofs.
    a: CsrMatrix<T>,
    b: CsrMatrix<T>,
    /// Free velocity index for each full velocity index.
    free_of: Vec<Option<usize>>,
    n_u: usize,
    n_free: usize,
    n_p: usize,
    /// Scaled constraint weights.
    weights: Vec<T>,
    backend: Backend<T>,
}

impl<T: Real> std::fmt::Debug for SaddleFactorization<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SaddleFactorization")
            .field("n_u", &self.n_u)
            .field("n_free", &self.n_free)
            .field("n_p", &self.n_p)
            .field("direct", &matches!(self.backend, Backend::Direct(_)))
            .finish()
    }
}

fn lu_error(e: LuError) -> Error {
    match e {
        LuError::SymbolicSingular { index } => Error::UnstablePair { column: index },
        LuError::Generic(g) => Error::Breakdown(format!("LU factorization failed: {g:?}")),
    }
}

impl<T: Real> Direct<T> {
    fn new(a: &CsrMatrix<T>, b: &CsrMatrix<T>, weights: &[T]) -> Result<Self> {
        let n_free = a.nrows();
        let n_p = b.nrows();
        let dim = n_free + n_p + 1;
        let mut kkt = TripletBuilder::with_capacity(dim, dim, a.nnz() + 2 * b.nnz() + 2 * n_p);
        for (r, c, v) in a.iter() {
            kkt.push(r, c, v);
        }
        for (i, k, v) in b.iter() {
            kkt.push(n_free + i, k, v);
            kkt.push(k, n_free + i, v);
        }
        for (i, &w) in weights.iter().enumerate() {
            kkt.push(n_free + i, dim - 1, w);
            kkt.push(dim - 1, n_free + i, w);
        }
        let kkt = kkt.build();
        // column storage of K is row storage of K^T
        let kt = kkt.transpose();
        let (col_ptr, row_idx, values) = kt.raw();
        let sym = SymbolicSparseColMatRef::new_checked(dim, dim, col_ptr, None, row_idx);
        let mat = SparseColMatRef::new(sym, values);
        let symbolic = factorize_symbolic_lu(sym, Default::default())
            .map_err(|e| Error::Breakdown(format!("symbolic LU failed: {e:?}")))?;
        let mut numeric = NumericLu::new();
        let mut mem = MemBuffer::new(symbolic.factorize_numeric_lu_scratch::<T>(Par::Seq, Default::default()));
        symbolic
            .factorize_numeric_lu(&mut numeric, mat, Par::Seq, MemStack::new(&mut mem), Default::default())
            .map_err(lu_error)?;
        Ok(Self { kkt, symbolic, numeric })
    }

    fn apply_inverse(&self, rhs: &mut [T]) {
        let lu = LuRef::new_unchecked(&self.symbolic, &self.numeric);
        let mut mem = MemBuffer::new(self.symbolic.solve_in_place_scratch::<T>(1, Par::Seq));
        let n = rhs.len();
        lu.solve_in_place_with_conj(Conj::No, MatMut::from_column_major_slice_mut(rhs, n, 1), Par::Seq, MemStack::new(&mut mem));
    }
}

impl<T: Real> Schur<T> {
    /// Factorizes the leading scalar block when `a` is `diag(K, K)`.
    fn new(a: &CsrMatrix<T>) -> Result<Option<Self>> {
        let n = a.nrows() / 2;
        if 2 * n != a.nrows() {
            return Ok(None);
        }
        // upper triangle of K in column storage = lower triangle in row storage
        let mut lower = TripletBuilder::with_capacity(n, n, a.nnz() / 3);
        for r in 0..n {
            let (cols, vals) = a.row(r);
            let (cols2, vals2) = a.row(n + r);
            if cols.len() != cols2.len() {
                return Ok(None);
            }
            for ((&c, &v), (&c2, &v2)) in cols.iter().zip(vals).zip(cols2.iter().zip(vals2)) {
                if c >= n || c2 != c + n || v != v2 {
                    return Ok(None);
                }
                if c <= r {
                    lower.push(r, c, v);
                }
            }
        }
        let lower = lower.build();
        let (col_ptr, row_idx, values) = lower.raw();
        let sym = SymbolicSparseColMatRef::new_checked(n, n, col_ptr, None, row_idx);
        let mat = SparseColMatRef::new(sym, values);
        let symbolic = factorize_symbolic_cholesky(sym, Side::Upper, SymmetricOrdering::Amd, Default::default())
            .map_err(|e| Error::Breakdown(format!("symbolic Cholesky failed: {e:?}")))?;
        let mut l = vec![T::zero(); symbolic.len_val()];
        let mut mem = MemBuffer::new(symbolic.factorize_numeric_llt_scratch::<T>(Par::Seq, Default::default()));
        symbolic
            .factorize_numeric_llt(
                &mut l,
                mat,
                Side::Upper,
                LltRegularization::default(),
                Par::Seq,
                MemStack::new(&mut mem),
                Default::default(),
            )
            .map_err(|e| Error::Breakdown(format!("velocity block is not positive definite: {e:?}")))?;
        Ok(Some(Self { symbolic, values: l, n_scalar: n }))
    }

    /// `x <- A^{-1} x` for both velocity components.
    fn solve_velocity(&self, x: &mut [T]) {
        let llt = LltRef::new(&self.symbolic, &self.values);
        let mut mem = MemBuffer::new(self.symbolic.solve_in_place_scratch::<T>(1, Par::Seq));
        let n = self.n_scalar;
        for part in x.chunks_mut(n) {
            llt.solve_in_place_with_conj(Conj::No, MatMut::from_column_major_slice_mut(part, n, 1), Par::Seq, MemStack::new(&mut mem));
        }
    }
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |s, (&x, &y)| s + x * y)
}

impl<T: Real> SaddleFactorization<T> {
    pub fn new(a: &CsrMatrix<T>, bdiv: &CsrMatrix<T>, constrained: &[bool], weights: &[T]) -> Result<Self> {
        Self::with_direct_limit(a, bdiv, constrained, weights, DIRECT_LIMIT)
    }

    /// As [`SaddleFactorization::new`], with the Schur path taken above
    /// `direct_limit` unknowns instead of [`DIRECT_LIMIT`].
    pub fn with_direct_limit(
        a: &CsrMatrix<T>,
        bdiv: &CsrMatrix<T>,
        constrained: &[bool],
        weights: &[T],
        direct_limit: usize,
    ) -> Result<Self> {
        let n_u = a.nrows();
        let n_p = bdiv.nrows();
        if a.ncols() != n_u || bdiv.ncols() != n_u || constrained.len() != n_u || weights.len() != n_p {
            return Err(Error::InvalidArgument(format!(
                "inconsistent saddle dimensions: A {}x{}, B {}x{}, {} flags, {} weights",
                n_u,
                a.ncols(),
                n_p,
                bdiv.ncols(),
                constrained.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|&w| !(w > T::zero())) {
            return Err(Error::InvalidArgument("mean-constraint weights must be positive".into()));
        }
        let mut free_of = vec![None; n_u];
        let mut n_free = 0;
        for (i, &c) in constrained.iter().enumerate() {
            if !c {
                free_of[i] = Some(n_free);
                n_free += 1;
            }
        }
        let mut ar = TripletBuilder::with_capacity(n_free, n_free, a.nnz());
        for (r, c, v) in a.iter() {
            if let (Some(fr), Some(fc)) = (free_of[r], free_of[c]) {
                ar.push(fr, fc, v);
            }
        }
        let mut br = TripletBuilder::with_capacity(n_p, n_free, bdiv.nnz());
        for (i, k, v) in bdiv.iter() {
            if let Some(fk) = free_of[k] {
                br.push(i, fk, v);
            }
        }
        let (a, b) = (ar.build(), br.build());
        // scale the constraint row to the size of the divergence entries
        let bmax = b.iter().fold(T::zero(), |m, (_, _, v)| m.max(v.abs()));
        let wmax = weights.iter().fold(T::zero(), |m, &v| m.max(v));
        let scale = if bmax > T::zero() { bmax / wmax } else { T::one() };
        let weights: Vec<T> = weights.iter().map(|&w| w * scale).collect();

        let schur = if n_free + n_p + 1 > direct_limit { Schur::new(&a)? } else { None };
        let backend = match schur {
            Some(s) => Backend::Schur(Box::new(s)),
            None => Backend::Direct(Box::new(Direct::new(&a, &b, &weights)?)),
        };
        Ok(Self { a, b, free_of, n_u, n_free, n_p, weights, backend })
    }

    pub fn velocity_dofs(&self) -> usize {
        self.n_u
    }

    pub fn pressure_dofs(&self) -> usize {
        self.n_p
    }

    pub fn is_direct(&self) -> bool {
        matches!(self.backend, Backend::Direct(_))
    }

    /// Residual `b - K x` of the reduced system, `x = (u, p, l)`.
    fn residual(&self, rhs: &[T], u: &[T], p: &[T], l: T) -> (Vec<T>, Vec<T>) {
        let au = self.a.mul_vec(u);
        let btp = self.b.mul_vec_transpose(p);
        let ru: Vec<T> = (0..self.n_free).map(|i| rhs[i] - au[i] - btp[i]).collect();
        let bu = self.b.mul_vec(u);
        let mut rp: Vec<T> = (0..self.n_p).map(|i| rhs[self.n_free + i] - bu[i] - self.weights[i] * l).collect();
        rp.push(-dot(&self.weights, p));
        (ru, rp)
    }

    /// Solves for `(u, p)` given `F` (full velocity length) and `G`.
    /// Values of `F` on constrained rows are ignored.
    pub fn solve(&self, rhs_u: &[T], rhs_p: &[T], tol: T) -> Result<(Vec<T>, Vec<T>)> {
        validate_tol(tol)?;
        if rhs_u.len() != self.n_u || rhs_p.len() != self.n_p {
            return Err(Error::InvalidArgument("right-hand side length mismatch".into()));
        }
        let dim = self.n_free + self.n_p + 1;
        let mut b = vec![T::zero(); dim];
        for (i, f) in self.free_of.iter().enumerate() {
            if let Some(fi) = f {
                b[*fi] = rhs_u[i];
            }
        }
        for (i, &g) in rhs_p.iter().enumerate() {
            b[self.n_free + i] = -g;
        }
        let bnorm = norm2(&b);
        if bnorm == T::zero() {
            return Ok((vec![T::zero(); self.n_u], vec![T::zero(); self.n_p]));
        }
        let x = match &self.backend {
            Backend::Direct(d) => self.solve_direct(d, &b, bnorm, tol)?,
            Backend::Schur(s) => self.solve_schur(s, &b, bnorm, tol)?,
        };
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Breakdown("non-finite entries in the solution".into()));
        }
        let mut u = vec![T::zero(); self.n_u];
        for (i, f) in self.free_of.iter().enumerate() {
            if let Some(fi) = f {
                u[i] = x[*fi];
            }
        }
        let mut p = x[self.n_free..self.n_free + self.n_p].to_vec();
        // the constraint holds only to solver accuracy
        let wsum = self.weights.iter().fold(T::zero(), |s, &w| s + w);
        let mean = dot(&self.weights, &p) / wsum;
        p.iter_mut().for_each(|v| *v -= mean);
        Ok((u, p))
    }

    fn solve_direct(&self, d: &Direct<T>, b: &[T], bnorm: T, tol: T) -> Result<Vec<T>> {
        let mut x = b.to_vec();
        d.apply_inverse(&mut x);
        let mut rnorm = T::infinity();
        for _ in 0..MAX_REFINEMENT_STEPS {
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::Breakdown("non-finite entries in the solution".into()));
            }
            let kx = d.kkt.mul_vec(&x);
            let mut r: Vec<T> = b.iter().zip(&kx).map(|(&a, &c)| a - c).collect();
            rnorm = norm2(&r);
            if rnorm <= tol * bnorm {
                return Ok(x);
            }
            d.apply_inverse(&mut r);
            x.iter_mut().zip(&r).for_each(|(a, &e)| *a += e);
        }
        Err(Error::NotConverged { residual: (rnorm / bnorm).to_f64_lossy(), tol: tol.to_f64_lossy() })
    }

    /// Conjugate gradients on `S p = B A^{-1} F + G` over `w`-orthogonal
    /// pressures, preconditioned by `diag(w)`.
    fn solve_schur(&self, s: &Schur<T>, b: &[T], bnorm: T, tol: T) -> Result<Vec<T>> {
        let (nf, np) = (self.n_free, self.n_p);
        let f = &b[..nf];
        let minus_g = &b[nf..nf + np];
        let wsum = self.weights.iter().fold(T::zero(), |a, &w| a + w);
        let schur_apply = |d: &[T]| -> Vec<T> {
            let mut v = self.b.mul_vec_transpose(d);
            s.solve_velocity(&mut v);
            self.b.mul_vec(&v)
        };
        // z = P diag(w)^{-1} r with P removing the w-weighted mean
        let precondition = |r: &[T]| -> Vec<T> {
            let mut z: Vec<T> = r.iter().zip(&self.weights).map(|(&a, &w)| a / w).collect();
            let m = dot(&self.weights, &z) / wsum;
            z.iter_mut().for_each(|v| *v -= m);
            z
        };
        let mut ainv_f = f.to_vec();
        s.solve_velocity(&mut ainv_f);
        let mut g = self.b.mul_vec(&ainv_f);
        g.iter_mut().zip(minus_g).for_each(|(a, &m)| *a -= m);
        // the multiplier absorbs the constant part of g
        let gsum = g.iter().fold(T::zero(), |a, &v| a + v);
        let lambda_shift = gsum / self.weights.iter().fold(T::zero(), |a, &w| a + w);
        g.iter_mut().zip(&self.weights).for_each(|(a, &w)| *a -= w * lambda_shift);

        let mut p = vec![T::zero(); np];
        let mut inner_tol = tol * T::c(0.1);
        let mut last = T::infinity();
        for _ in 0..MAX_REFINEMENT_STEPS {
            let sp = schur_apply(&p);
            let mut r: Vec<T> = g.iter().zip(&sp).map(|(&a, &c)| a - c).collect();
            let gnorm = norm2(&g).max(T::min_positive_value());
            let mut z = precondition(&r);
            let mut d = z.clone();
            let mut rz = dot(&r, &z);
            let mut iterations = 0;
            while norm2(&r) > inner_tol * gnorm && iterations < MAX_CG_ITERATIONS {
                let q = schur_apply(&d);
                let dq = dot(&d, &q);
                if !(dq > T::zero()) {
                    return Err(Error::Breakdown("Schur complement is not positive definite".into()));
                }
                let alpha = rz / dq;
                p.iter_mut().zip(&d).for_each(|(a, &e)| *a += alpha * e);
                r.iter_mut().zip(&q).for_each(|(a, &e)| *a -= alpha * e);
                z = precondition(&r);
                let rz_new = dot(&r, &z);
                let beta = rz_new / rz;
                rz = rz_new;
                d.iter_mut().zip(&z).for_each(|(a, &e)| *a = e + beta * *a);
                iterations += 1;
            }
            // velocity from the momentum equation, multiplier by least squares
            let btp = self.b.mul_vec_transpose(&p);
            let mut u: Vec<T> = f.iter().zip(&btp).map(|(&a, &c)| a - c).collect();
            s.solve_velocity(&mut u);
            let bu = self.b.mul_vec(&u);
            let resid: Vec<T> = minus_g.iter().zip(&bu).map(|(&a, &c)| a - c).collect();
            let l = dot(&self.weights, &resid) / dot(&self.weights, &self.weights);
            let (ru, rp) = self.residual(b, &u, &p, l);
            let rnorm = (dot(&ru, &ru) + dot(&rp, &rp)).sqrt();
            if rnorm <= tol * bnorm {
                let mut x = u;
                x.extend_from_slice(&p);
                x.push(l);
                return Ok(x);
            }
            last = rnorm;
            inner_tol = (inner_tol * T::c(0.01)).max(T::epsilon() * T::c(10.0));
        }
        Err(Error::NotConverged { residual: (last / bnorm).to_f64_lossy(), tol: tol.to_f64_lossy() })
    }
}
