//! Superoperators on column-vectorized matrices.
//!
//! Vectorization is column-major: `vec(x)[i + d*j] = x[i, j]`, so the
//! multiplication identity reads `vec(l x r) = (r^T (x) l) vec(x)`. Every
//! superoperator numeral in the crate depends on this stacking; do not
//! change it.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::{self, CMat};

pub fn vectorize(x: &CMat) -> Array1<Complex64> {
    let d = x.nrows();
    Array1::from_shape_fn(d * d, |k| x[[k % d, k / d]])
}

pub fn devectorize(v: &Array1<Complex64>, d: usize) -> CMat {
    Array2::from_shape_fn((d, d), |(i, j)| v[i + d * j])
}

/// A linear map on `M_d`, stored as its `d^2 x d^2` matrix acting on
/// column-vectorized arguments.
#[derive(Debug, Clone)]
pub struct Superoperator {
    dim: usize,
    mat: CMat,
}

impl Superoperator {
    pub fn from_matrix(dim: usize, mat: CMat) -> Result<Self> {
        if mat.nrows() != dim * dim || mat.ncols() != dim * dim {
            return Err(Error::DimensionMismatch(format!(
                "superoperator matrix is {}x{}, expected {}x{}",
                mat.nrows(),
                mat.ncols(),
                dim * dim,
                dim * dim
            )));
        }
        Ok(Superoperator { dim, mat })
    }

    pub fn identity(dim: usize) -> Self {
        Superoperator { dim, mat: matrix::identity(dim * dim) }
    }

    pub fn zero(dim: usize) -> Self {
        Superoperator { dim, mat: matrix::zeros(dim * dim) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn apply(&self, x: &CMat) -> CMat {
        devectorize(&self.mat.dot(&vectorize(x)), self.dim)
    }

    /// Composition `self . other` (apply `other` first).
    pub fn compose(&self, other: &Superoperator) -> Superoperator {
        Superoperator { dim: self.dim, mat: self.mat.dot(&other.mat) }
    }

    pub fn add(&self, other: &Superoperator) -> Superoperator {
        Superoperator { dim: self.dim, mat: &self.mat + &other.mat }
    }

    pub fn sub(&self, other: &Superoperator) -> Superoperator {
        Superoperator { dim: self.dim, mat: &self.mat - &other.mat }
    }

    pub fn scale(&self, z: Complex64) -> Superoperator {
        Superoperator { dim: self.dim, mat: self.mat.mapv(|w| w * z) }
    }

    pub fn exp(&self) -> Result<Superoperator> {
        Ok(Superoperator { dim: self.dim, mat: matrix::matrix_exp(&self.mat)? })
    }

    /// Dual with respect to the bilinear trace pairing `(a, b) = tr(a b)`:
    /// for `S(x) = l x r` the dual is `S'(x) = r x l`. In matrix terms
    /// `S' = T S^T T` with `T` the vec-transpose permutation.
    pub fn trace_dual(&self) -> Superoperator {
        let d = self.dim;
        let n = d * d;
        // T maps vec index i + d*j to j + d*i; conjugation by T permutes
        // rows and columns of the transpose.
        let perm = |k: usize| -> usize { (k / d) + d * (k % d) };
        let mut out = matrix::zeros(n);
        for r in 0..n {
            for c in 0..n {
                out[[r, c]] = self.mat[[perm(c), perm(r)]];
            }
        }
        Superoperator { dim: d, mat: out }
    }

    /// Residual of trace preservation: `max_k |sum_i M[(i,i),k] - vec(I)_k|`.
    pub fn trace_preservation_residual(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        for k in 0..d * d {
            let mut s = Complex64::new(0.0, 0.0);
            for i in 0..d {
                s += self.mat[[i + d * i, k]];
            }
            let expect = if k % d == k / d { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
            worst = worst.max((s - expect).norm());
        }
        worst
    }

    /// Residual of trace annihilation (generators): `max_k |sum_i M[(i,i),k]|`.
    pub fn trace_annihilation_residual(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        for k in 0..d * d {
            let mut s = Complex64::new(0.0, 0.0);
            for i in 0..d {
                s += self.mat[[i + d * i, k]];
            }
            worst = worst.max(s.norm());
        }
        worst
    }

    /// Residual of Hermiticity preservation: `max over a basis a of
    /// |S(a^H)^H - S(a)|` probed on matrix units, which spans all of `M_d`.
    pub fn hermiticity_preservation_residual(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                let mut e = matrix::zeros(d);
                e[[i, j]] = Complex64::new(1.0, 0.0);
                let lhs = matrix::dagger(&self.apply(&matrix::dagger(&e)));
                let rhs = self.apply(&e);
                worst = worst.max(matrix::max_abs(&(&lhs - &rhs)));
            }
        }
        worst
    }

    /// Largest singular value of the vectorized representation.
    pub fn norm(&self) -> Result<f64> {
        matrix::operator_norm(&self.mat)
    }
}

/// The map `x -> l x r` as a superoperator: `r^T (x) l`.
pub fn sandwich(l: &CMat, r: &CMat) -> Result<Superoperator> {
    let d = l.nrows();
    if l.ncols() != d || r.nrows() != d || r.ncols() != d {
        return Err(Error::DimensionMismatch("sandwich factors must be square of equal size".into()));
    }
    let rt = r.t().to_owned();
    Ok(Superoperator { dim: d, mat: matrix::kron(&rt, l) })
}

/// Unitary conjugation `x -> u x u^H`.
pub fn conjugation(u: &CMat) -> Result<Superoperator> {
    sandwich(u, &matrix::dagger(u))
}

/// The commutator map `x -> [h, x]`.
pub fn ad(h: &CMat) -> Result<Superoperator> {
    let d = h.nrows();
    let id = matrix::identity(d);
    Ok(sandwich(h, &id)?.sub(&sandwich(&id, h)?))
}

/// Hamiltonian generator `x -> -i [h, x]`.
pub fn hamiltonian_generator(h: &CMat) -> Result<Superoperator> {
    Ok(ad(h)?.scale(Complex64::new(0.0, -1.0)))
}

/// One cross dissipator term `x -> a x b^H - 1/2 {b^H a, x}`.
pub fn dissipator_term(a: &CMat, b: &CMat) -> Result<Superoperator> {
    let d = a.nrows();
    let id = matrix::identity(d);
    let bh = matrix::dagger(b);
    let bha = bh.dot(a);
    let gain = sandwich(a, &bh)?;
    let loss = sandwich(&bha, &id)?.add(&sandwich(&id, &bha)?).scale(Complex64::new(0.5, 0.0));
    Ok(gain.sub(&loss))
}

/// Choi matrix `sum_{ij} |i><j| (x) S(|i><j|)`; the map is completely
/// positive iff this is positive semidefinite.
pub fn choi_matrix(s: &Superoperator) -> CMat {
    let d = s.dim;
    let mut c = matrix::zeros(d * d);
    for i in 0..d {
        for j in 0..d {
            let mut e = matrix::zeros(d);
            e[[i, j]] = Complex64::new(1.0, 0.0);
            let block = s.apply(&e);
            for a in 0..d {
                for b in 0..d {
                    c[[i * d + a, j * d + b]] = block[[a, b]];
                }
            }
        }
    }
    c
}

/// Smallest eigenvalue of the Hermitized Choi matrix.
pub fn choi_min_eigenvalue(s: &Superoperator) -> Result<f64> {
    matrix::min_hermitian_eigenvalue(&choi_matrix(s))
}
