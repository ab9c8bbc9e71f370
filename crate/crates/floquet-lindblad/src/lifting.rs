//! Static block operators on the truncated Fourier space.
//!
//! A periodic matrix-valued function `f(t) = sum_n f_n e^{i n Omega t}`
//! becomes a block vector `(f_{-N}, ..., f_N)` (a [`GeneralizedState`]);
//! a periodic superoperator-valued function lifts to the block-Toeplitz
//! operator `sum_n A_n (x) F_n` with `F_n` the truncated Fourier shift.
//! The generalized Lindbladian is `sum_n L_n (x) F_n - i Omega I (x) F_z`,
//! and its semigroup admits the factorized form
//! `P~ (e^{tau Lbar} (x) e^{-i tau Omega F_z}) P~'`.
//!
//! Truncation policy: the identities hold on the infinite harmonic ladder;
//! in the window `|n| <= N` the edge blocks are polluted by the cutoff, so
//! every assertion is made on "interior" block indices `|n| <= N - margin`
//! with the margin set by the operative Fourier bandwidth. The shift
//! operators drop out-of-window images rather than wrapping cyclically: a
//! cyclic wrap would fake spectrum, while dropping preserves interior
//! exactness.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::floquet::UnitaryFloquet;
use crate::matrix::{self, CMat};
use crate::periodic::PeriodicMatrixFunction;
use crate::superop::{self, Superoperator};

// ---------------------------------------------------------------------------
// Generalized states
// ---------------------------------------------------------------------------

/// Block vector `(f_{-N}, ..., f_N)` of d x d matrices: the Fourier
/// components of a T-periodic matrix-valued function.
#[derive(Debug, Clone)]
pub struct GeneralizedState {
    trunc: usize,
    dim: usize,
    period: f64,
    blocks: Vec<CMat>,
}

impl GeneralizedState {
    pub fn new(trunc: usize, dim: usize, period: f64, blocks: Vec<CMat>) -> Result<Self> {
        if blocks.len() != 2 * trunc + 1 {
            return Err(Error::DimensionMismatch(format!(
                "expected {} blocks, got {}",
                2 * trunc + 1,
                blocks.len()
            )));
        }
        if blocks.iter().any(|b| b.nrows() != dim || b.ncols() != dim) {
            return Err(Error::DimensionMismatch("block dimension mismatch".into()));
        }
        Ok(GeneralizedState { trunc, dim, period, blocks })
    }

    pub fn zero(trunc: usize, dim: usize, period: f64) -> Self {
        GeneralizedState {
            trunc,
            dim,
            period,
            blocks: vec![matrix::zeros(dim); 2 * trunc + 1],
        }
    }

    /// `a (x) e_n`: the matrix `a` embedded in harmonic component `n`.
    pub fn embed(a: &CMat, n: i64, trunc: usize, period: f64) -> Result<Self> {
        if n.unsigned_abs() as usize > trunc {
            return Err(Error::DimensionMismatch(format!(
                "harmonic {n} outside truncation window {trunc}"
            )));
        }
        let mut s = Self::zero(trunc, a.nrows(), period);
        s.blocks[(n + trunc as i64) as usize] = a.clone();
        Ok(s)
    }

    pub fn trunc(&self) -> usize {
        self.trunc
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn omega(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.period
    }

    pub fn block(&self, n: i64) -> &CMat {
        &self.blocks[(n + self.trunc as i64) as usize]
    }

    pub fn block_mut(&mut self, n: i64) -> &mut CMat {
        &mut self.blocks[(n + self.trunc as i64) as usize]
    }

    /// Evaluate the represented function: `f(t) = sum_n f_n e^{i n Omega t}`.
    pub fn evaluate(&self, t: f64) -> CMat {
        let omega = self.omega();
        let mut acc = matrix::zeros(self.dim);
        for (i, b) in self.blocks.iter().enumerate() {
            let n = i as i64 - self.trunc as i64;
            let phase = Complex64::new(0.0, n as f64 * omega * t).exp();
            acc = acc + b.mapv(|z| z * phase);
        }
        acc
    }

    /// The lifted trace `(1/T) integral tr f(t) dt = tr f_0`.
    pub fn lifted_trace(&self) -> Complex64 {
        matrix::trace(self.block(0))
    }

    /// Involution `(f#)_n = (f_{-n})^H`: pointwise Hermitian adjoint of
    /// the represented function.
    pub fn adjoint(&self) -> Self {
        let blocks = (0..self.blocks.len())
            .map(|i| {
                let n = i as i64 - self.trunc as i64;
                matrix::dagger(self.block(-n))
            })
            .collect();
        GeneralizedState { trunc: self.trunc, dim: self.dim, period: self.period, blocks }
    }

    /// Pointwise product via block convolution `(fg)_m = sum_k f_k g_{m-k}`,
    /// truncated back to the window. The flag is set when the combined
    /// bandwidth spills outside the window.
    pub fn convolve(&self, other: &Self) -> Result<(Self, bool)> {
        if self.trunc != other.trunc || self.dim != other.dim {
            return Err(Error::DimensionMismatch("convolve of mismatched states".into()));
        }
        let nn = self.trunc as i64;
        let tol = 1e-14;
        let bw = |s: &Self| -> i64 {
            let mut b = 0i64;
            for i in 0..s.blocks.len() {
                let n = i as i64 - nn;
                if matrix::max_abs(&s.blocks[i]) > tol {
                    b = b.max(n.abs());
                }
            }
            b
        };
        let overflow = bw(self) + bw(other) > nn;
        let mut out = Self::zero(self.trunc, self.dim, self.period);
        for m in -nn..=nn {
            let mut acc = matrix::zeros(self.dim);
            for k in -nn..=nn {
                let j = m - k;
                if j.abs() <= nn {
                    acc = acc + self.block(k).dot(other.block(j));
                }
            }
            *out.block_mut(m) = acc;
        }
        Ok((out, overflow))
    }

    /// Flat 2-norm over the block stack (the Frobenius-metric Bochner
    /// norm; equivalent to the trace-norm variant up to fixed constants).
    pub fn norm(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| b.iter().map(|z| z.norm_sqr()).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }

    /// Fraction of the squared norm carried by blocks `|n| > trunc - margin`.
    pub fn edge_mass(&self, margin: usize) -> f64 {
        let total: f64 = self.blocks.iter().map(|b| matrix::fro_norm(b).powi(2)).sum();
        if total == 0.0 {
            return 0.0;
        }
        let cut = self.trunc as i64 - margin as i64;
        let mut edge = 0.0;
        for i in 0..self.blocks.len() {
            let n = i as i64 - self.trunc as i64;
            if n.abs() > cut {
                edge += matrix::fro_norm(&self.blocks[i]).powi(2);
            }
        }
        edge / total
    }

    fn to_stacked(&self) -> ndarray::Array1<Complex64> {
        let d2 = self.dim * self.dim;
        let mut v = ndarray::Array1::zeros((2 * self.trunc + 1) * d2);
        for (b, blk) in self.blocks.iter().enumerate() {
            let vec = superop::vectorize(blk);
            for k in 0..d2 {
                v[b * d2 + k] = vec[k];
            }
        }
        v
    }

    fn from_stacked(
        v: &ndarray::Array1<Complex64>,
        trunc: usize,
        dim: usize,
        period: f64,
    ) -> Self {
        let d2 = dim * dim;
        let blocks = (0..2 * trunc + 1)
            .map(|b| {
                let slice = ndarray::Array1::from_shape_fn(d2, |k| v[b * d2 + k]);
                superop::devectorize(&slice, dim)
            })
            .collect();
        GeneralizedState { trunc, dim, period, blocks }
    }

    pub fn add(&self, other: &Self) -> Self {
        let blocks =
            self.blocks.iter().zip(other.blocks.iter()).map(|(a, b)| a + b).collect();
        GeneralizedState { trunc: self.trunc, dim: self.dim, period: self.period, blocks }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let blocks =
            self.blocks.iter().zip(other.blocks.iter()).map(|(a, b)| a - b).collect();
        GeneralizedState { trunc: self.trunc, dim: self.dim, period: self.period, blocks }
    }

    pub fn scale(&self, z: Complex64) -> Self {
        let blocks = self.blocks.iter().map(|b| b.mapv(|w| w * z)).collect();
        GeneralizedState { trunc: self.trunc, dim: self.dim, period: self.period, blocks }
    }
}

// ---------------------------------------------------------------------------
// Lifted operators
// ---------------------------------------------------------------------------

/// Dense block operator on the truncated generalized space: a
/// `(2N+1) d^2` square matrix whose block `(m, n)` maps input harmonic `n`
/// to output harmonic `m`.
#[derive(Debug, Clone)]
pub struct LiftedOperator {
    trunc: usize,
    dim: usize,
    period: f64,
    mat: CMat,
}

impl LiftedOperator {
    pub fn zero(trunc: usize, dim: usize, period: f64) -> Self {
        let n = (2 * trunc + 1) * dim * dim;
        LiftedOperator { trunc, dim, period, mat: matrix::zeros(n) }
    }

    pub fn identity(trunc: usize, dim: usize, period: f64) -> Self {
        let n = (2 * trunc + 1) * dim * dim;
        LiftedOperator { trunc, dim, period, mat: matrix::identity(n) }
    }

    pub fn trunc(&self) -> usize {
        self.trunc
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn omega(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.period
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn block(&self, m: i64, n: i64) -> CMat {
        let d2 = self.dim * self.dim;
        let r0 = ((m + self.trunc as i64) as usize) * d2;
        let c0 = ((n + self.trunc as i64) as usize) * d2;
        ndarray::Array2::from_shape_fn((d2, d2), |(i, j)| self.mat[[r0 + i, c0 + j]])
    }

    pub fn set_block(&mut self, m: i64, n: i64, b: &CMat) {
        let d2 = self.dim * self.dim;
        let r0 = ((m + self.trunc as i64) as usize) * d2;
        let c0 = ((n + self.trunc as i64) as usize) * d2;
        for i in 0..d2 {
            for j in 0..d2 {
                self.mat[[r0 + i, c0 + j]] = b[[i, j]];
            }
        }
    }

    pub fn apply(&self, s: &GeneralizedState) -> Result<GeneralizedState> {
        if s.trunc != self.trunc || s.dim != self.dim {
            return Err(Error::DimensionMismatch(
                "apply: truncation/dimension mismatch".into(),
            ));
        }
        let v = self.mat.dot(&s.to_stacked());
        Ok(GeneralizedState::from_stacked(&v, self.trunc, self.dim, self.period))
    }

    pub fn compose(&self, other: &Self) -> Self {
        LiftedOperator {
            trunc: self.trunc,
            dim: self.dim,
            period: self.period,
            mat: self.mat.dot(&other.mat),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        LiftedOperator {
            trunc: self.trunc,
            dim: self.dim,
            period: self.period,
            mat: &self.mat + &other.mat,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        LiftedOperator {
            trunc: self.trunc,
            dim: self.dim,
            period: self.period,
            mat: &self.mat - &other.mat,
        }
    }

    pub fn scale(&self, z: Complex64) -> Self {
        LiftedOperator {
            trunc: self.trunc,
            dim: self.dim,
            period: self.period,
            mat: self.mat.mapv(|w| w * z),
        }
    }

    pub fn exp(&self) -> Result<Self> {
        Ok(LiftedOperator {
            trunc: self.trunc,
            dim: self.dim,
            period: self.period,
            mat: matrix::matrix_exp(&self.mat)?,
        })
    }

    /// Submatrix over block rows and columns `|n| <= trunc - margin`.
    pub fn interior_submatrix(&self, margin: usize) -> CMat {
        let keep = self.trunc.saturating_sub(margin);
        let d2 = self.dim * self.dim;
        let width = (2 * keep + 1) * d2;
        let off = (self.trunc - keep) * d2;
        ndarray::Array2::from_shape_fn((width, width), |(i, j)| self.mat[[off + i, off + j]])
    }

    /// Largest singular value of the interior submatrix.
    pub fn interior_norm(&self, margin: usize) -> Result<f64> {
        matrix::operator_norm(&self.interior_submatrix(margin))
    }
}

// ---------------------------------------------------------------------------
// Constructors: shifts, liftings, generalized Lindbladian
// ---------------------------------------------------------------------------

/// Truncated Fourier shift `F_n (x) Id`: maps harmonic `m` to `m + n`,
/// dropping images outside the window.
pub fn shift_matrix(n: i64, trunc: usize, dim: usize, period: f64) -> Result<LiftedOperator> {
    if n.unsigned_abs() as usize > 2 * trunc {
        return Err(Error::InvalidInput(format!("shift {n} exceeds 2N = {}", 2 * trunc)));
    }
    let mut op = LiftedOperator::zero(trunc, dim, period);
    let id = matrix::identity(dim * dim);
    let nn = trunc as i64;
    for m in -nn..=nn {
        let target = m + n;
        if target.abs() <= nn {
            op.set_block(target, m, &id);
        }
    }
    Ok(op)
}

/// Truncated Fourier number operator `F_z (x) Id`: `diag(-N..N)` blockwise.
pub fn number_matrix(trunc: usize, dim: usize, period: f64) -> LiftedOperator {
    let mut op = LiftedOperator::zero(trunc, dim, period);
    let nn = trunc as i64;
    for m in -nn..=nn {
        let b = matrix::identity(dim * dim).mapv(|z| z * m as f64);
        op.set_block(m, m, &b);
    }
    op
}

/// Fourier lifting `sum_k A_k (x) F_k` of a periodic superoperator-valued
/// function: block-Toeplitz with block `(m, n) = A_{m-n}`.
pub fn lift_function(a: &PeriodicMatrixFunction, trunc: usize) -> Result<LiftedOperator> {
    let d2 = a.coeff(0).nrows();
    let dim = (d2 as f64).sqrt().round() as usize;
    if dim * dim != d2 {
        return Err(Error::DimensionMismatch(
            "lift_function expects superoperator-valued coefficients".into(),
        ));
    }
    let mut op = LiftedOperator::zero(trunc, dim, a.period());
    let nn = trunc as i64;
    for m in -nn..=nn {
        for n in -nn..=nn {
            if let Some(c) = a.coeff_ref(m - n) {
                op.set_block(m, n, c);
            }
        }
    }
    Ok(op)
}

/// The generalized Lindbladian `sum_k L_k (x) F_k - i Omega I (x) F_z`:
/// block `(m, n) = L_{m-n} - i Omega n delta_{mn} Id`.
pub fn generalized_lindbladian(
    l: &PeriodicMatrixFunction,
    trunc: usize,
) -> Result<LiftedOperator> {
    let mut op = lift_function(l, trunc)?;
    let omega = l.omega();
    let d2 = op.dim * op.dim;
    let nn = trunc as i64;
    for n in -nn..=nn {
        let r0 = ((n + nn) as usize) * d2;
        for k in 0..d2 {
            op.mat[[r0 + k, r0 + k]] -= Complex64::new(0.0, omega * n as f64);
        }
    }
    Ok(op)
}

/// Lifted right shift by `tau`: `I (x) e^{-i tau Omega F_z}`, block-diagonal
/// with phases `e^{-i tau Omega n}`. Satisfies the semigroup law exactly.
pub fn right_shift_lifted(tau: f64, trunc: usize, dim: usize, period: f64) -> LiftedOperator {
    let omega = 2.0 * std::f64::consts::PI / period;
    let mut op = LiftedOperator::zero(trunc, dim, period);
    let nn = trunc as i64;
    for n in -nn..=nn {
        let phase = Complex64::new(0.0, -tau * omega * n as f64).exp();
        let b = matrix::identity(dim * dim).mapv(|z| z * phase);
        op.set_block(n, n, &b);
    }
    op
}

/// Lift of the dual function: coefficients are the trace-pairing duals of
/// the input coefficients (the dual is complex-linear, so it commutes with
/// taking Fourier coefficients).
pub fn lift_dual(p: &PeriodicMatrixFunction, trunc: usize) -> Result<LiftedOperator> {
    let d2 = p.coeff(0).nrows();
    let dim = (d2 as f64).sqrt().round() as usize;
    let bw = p.bandwidth() as i64;
    let mut pairs = Vec::new();
    for n in -bw..=bw {
        let dual = Superoperator::from_matrix(dim, p.coeff(n))?.trace_dual();
        pairs.push((n, dual.matrix().clone()));
    }
    lift_function(&PeriodicMatrixFunction::from_coeffs(p.period(), pairs)?, trunc)
}

/// Factorized lifted semigroup
/// `P~ (e^{tau Lbar} (x) e^{-i tau Omega F_z}) P~'`: the middle factor is
/// block-diagonal with blocks `e^{tau Lbar} e^{-i tau Omega n}`.
pub fn lifted_semigroup_factorized(
    p_superop: &PeriodicMatrixFunction,
    l_bar: &Superoperator,
    tau: f64,
    trunc: usize,
) -> Result<LiftedOperator> {
    if tau < 0.0 {
        return Err(Error::InvalidInput("semigroup parameter must be nonnegative".into()));
    }
    let dim = l_bar.dim();
    let period = p_superop.period();
    let omega = p_superop.omega();
    let p_lift = lift_function(p_superop, trunc)?;
    let p_dual = lift_dual(p_superop, trunc)?;
    let e_lbar = matrix::matrix_exp(&l_bar.matrix().mapv(|z| z * tau))?;
    let mut middle = LiftedOperator::zero(trunc, dim, period);
    let nn = trunc as i64;
    for n in -nn..=nn {
        let phase = Complex64::new(0.0, -tau * omega * n as f64).exp();
        middle.set_block(n, n, &e_lbar.mapv(|z| z * phase));
    }
    Ok(p_lift.compose(&middle).compose(&p_dual))
}

// ---------------------------------------------------------------------------
// Spectral ladder
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct LadderEntry {
    /// Index of the base eigenvalue of `Lbar`.
    pub j: usize,
    /// Harmonic rung.
    pub n: i64,
    /// Ladder eigenvalue `xi_j - i n Omega`.
    pub value: Complex64,
    /// Relative eigenequation residual of the constructed eigenvector
    /// against the truncated generalized Lindbladian.
    pub residual: f64,
}

/// Point spectrum data of the generalized Lindbladian: base eigenvalues
/// `xi_j` of `Lbar` and rungs `xi_j - i n Omega` with eigenvectors whose
/// blocks are `(phi_{j,n})_m = P_{m-n}(phi_j)`.
#[derive(Debug, Clone)]
pub struct SpectralLadder {
    pub base: Vec<Complex64>,
    pub entries: Vec<LadderEntry>,
    pub eigenvectors: Vec<GeneralizedState>,
    /// Condition number of the eigenbasis of `Lbar`.
    pub condition: f64,
    pub ill_conditioned: bool,
}

/// Build the spectral ladder for rungs `|n| <= n_interior`.
///
/// Each eigenvector is the lift applied to `phi_j (x) e_n` with `phi_j`
/// the unit-normalized eigenvector of `Lbar`; no post-normalization is
/// applied, so the dominant block is `P_0(phi_j)`.
///
/// Residuals are measured over block rows `|m| <= N - row_margin`: the
/// eigenequation holds on the infinite ladder, and rows within the window
/// margin are polluted by the cutoff.
pub fn spectral_ladder(
    l_bar: &Superoperator,
    p_superop: &PeriodicMatrixFunction,
    l_tilde: &LiftedOperator,
    n_interior: i64,
    row_margin: usize,
) -> Result<SpectralLadder> {
    let dim = l_bar.dim();
    let omega = p_superop.omega();
    let trunc = l_tilde.trunc();
    let eig = matrix::eig_general(l_bar.matrix())?;
    let row_cut = trunc as i64 - row_margin as i64;

    let mut entries = Vec::new();
    let mut eigenvectors = Vec::new();
    for (j, xi) in eig.values.iter().enumerate() {
        let phi_vec = eig.vectors.column(j).to_owned();
        let phi = superop::devectorize(&phi_vec, dim);
        for n in -n_interior..=n_interior {
            let mut state = GeneralizedState::zero(trunc, dim, p_superop.period());
            let nn = trunc as i64;
            for m in -nn..=nn {
                if let Some(c) = p_superop.coeff_ref(m - n) {
                    let s = Superoperator::from_matrix(dim, c.clone())?;
                    *state.block_mut(m) = s.apply(&phi);
                }
            }
            let value = xi - Complex64::new(0.0, n as f64 * omega);
            let lhs = l_tilde.apply(&state)?;
            let rhs = state.scale(value);
            let diff = lhs.sub(&rhs);
            let mut num = 0.0f64;
            for m in -row_cut..=row_cut {
                num += matrix::fro_norm(diff.block(m)).powi(2);
            }
            let residual = num.sqrt() / state.norm().max(1e-300);
            entries.push(LadderEntry { j, n, value, residual });
            eigenvectors.push(state);
        }
    }

    Ok(SpectralLadder {
        base: eig.values,
        entries,
        eigenvectors,
        condition: eig.condition,
        ill_conditioned: eig.ill_conditioned,
    })
}

// ---------------------------------------------------------------------------
// Identity checks and diagnostics
// ---------------------------------------------------------------------------

/// Residual of the m-th Fourier component identity
/// `L_m = sum_n P_n (Lbar + i n Omega) P'_{m-n}`, with `L_m` taken from
/// the quadrature-built coefficients of `t -> L_t` and the sum truncated
/// at the stored bandwidth of `P`.
pub fn lm_component_identity_check(
    m: i64,
    l: &PeriodicMatrixFunction,
    p_superop: &PeriodicMatrixFunction,
    l_bar: &Superoperator,
) -> Result<f64> {
    let dim = l_bar.dim();
    let omega = p_superop.omega();
    let bw = p_superop.bandwidth() as i64;
    let mut acc = matrix::zeros(dim * dim);
    for n in -bw..=bw {
        let j = m - n;
        if j.abs() > bw {
            continue;
        }
        let pn = p_superop.coeff(n);
        let pd = Superoperator::from_matrix(dim, p_superop.coeff(j))?
            .trace_dual()
            .matrix()
            .clone();
        let shifted = l_bar.matrix()
            + &matrix::identity(dim * dim).mapv(|z| z * Complex64::new(0.0, n as f64 * omega));
        acc = acc + pn.dot(&shifted).dot(&pd);
    }
    let lm = l.coeff(m);
    matrix::operator_norm(&(&lm - &acc))
}

/// Lift of the time derivative of `P`: `Q = i Omega sum_n n P_n (x) F_n`.
pub fn derivative_lift(
    p_superop: &PeriodicMatrixFunction,
    trunc: usize,
) -> Result<LiftedOperator> {
    let omega = p_superop.omega();
    let bw = p_superop.bandwidth() as i64;
    let mut pairs = Vec::new();
    for n in -bw..=bw {
        let c = p_superop
            .coeff(n)
            .mapv(|z| z * Complex64::new(0.0, omega * n as f64));
        pairs.push((n, c));
    }
    lift_function(&PeriodicMatrixFunction::from_coeffs(p_superop.period(), pairs)?, trunc)
}

/// Interior residual of the antisymmetry `P~ Q' + Q P~' = 0`.
pub fn q_antisymmetry_check(
    p_superop: &PeriodicMatrixFunction,
    trunc: usize,
    margin: usize,
) -> Result<f64> {
    let dim = lift_function(p_superop, trunc)?.dim();
    let p_lift = lift_function(p_superop, trunc)?;
    let p_dual = lift_dual(p_superop, trunc)?;
    let q = derivative_lift(p_superop, trunc)?;
    let q_dual = {
        let omega = p_superop.omega();
        let bw = p_superop.bandwidth() as i64;
        let mut pairs = Vec::new();
        for n in -bw..=bw {
            let c = Superoperator::from_matrix(dim, p_superop.coeff(n))?
                .trace_dual()
                .matrix()
                .mapv(|z| z * Complex64::new(0.0, omega * n as f64));
            pairs.push((n, c));
        }
        lift_function(
            &PeriodicMatrixFunction::from_coeffs(p_superop.period(), pairs)?,
            trunc,
        )?
    };
    let combo = p_lift.compose(&q_dual).add(&q.compose(&p_dual));
    combo.interior_norm(margin)
}

/// Convergence and truncation diagnostics for the lifted representation.
#[derive(Debug, Clone, serde::Serialize)]
pub struct TruncationDiagnostics {
    /// `sum_{|n| > m} ||P_n||` for m = 0..bandwidth.
    pub p_tail_sums: Vec<f64>,
    /// `sum_{|n| > m} ||L_n||` for m = 0..bandwidth.
    pub l_tail_sums: Vec<f64>,
    /// Sup-norm reconstruction error of `P_t` on its grid.
    pub p_reconstruction_error: f64,
    /// Sup-norm reconstruction error of `L_t` on its grid.
    pub l_reconstruction_error: f64,
    /// Sup over a grid of the residual between the finite-difference
    /// derivative of `P_t` and `-i ad(H_t - P_t(Hbar)) . P_t`.
    pub p_derivative_residual: f64,
}

pub fn truncation_diagnostics<F>(
    p_superop: &PeriodicMatrixFunction,
    l: &PeriodicMatrixFunction,
    uf: &UnitaryFloquet,
    h: &F,
) -> Result<TruncationDiagnostics>
where
    F: Fn(f64) -> CMat,
{
    let p_tail_sums = p_superop.tail_sums()?;
    let l_tail_sums = l.tail_sums()?;
    let p_reconstruction_error = p_superop.truncation_error();
    let l_reconstruction_error = l.truncation_error();

    // dP_t/dt = -i [H_t - P_t(Hbar), P_t(.)], probed by central differences.
    let period = uf.period();
    let fd_step = 1e-6 * period;
    let mut worst = 0.0f64;
    for k in 0..16 {
        let t = k as f64 * period / 16.0;
        let p_plus = superop::conjugation(&uf.p_at(t + fd_step))?;
        let p_minus = superop::conjugation(&uf.p_at(t - fd_step))?;
        let fd = (p_plus.matrix() - p_minus.matrix()).mapv(|z| z / (2.0 * fd_step));
        let p_t = superop::conjugation(&uf.p_at(t))?;
        let x_t = h(t) - &p_t.apply(&uf.h_bar);
        let rhs = superop::ad(&x_t)?.compose(&p_t).scale(Complex64::new(0.0, -1.0));
        worst = worst.max(matrix::max_abs(&(&fd - rhs.matrix())));
    }

    Ok(TruncationDiagnostics {
        p_tail_sums,
        l_tail_sums,
        p_reconstruction_error,
        l_reconstruction_error,
        p_derivative_residual: worst,
    })
}

// ---------------------------------------------------------------------------
// Multiplication-operator counterexample
// ---------------------------------------------------------------------------

/// Numerical record of the scalar profile
/// `xi(t) = -(sqrt(30)/T^2) (t - T) t`: it has unit Bochner norm, so the
/// induced multiplication operator acts isometrically on constant states,
/// yet its pointwise factor exceeds 1 around t = T/2 -- the pointwise maps
/// are not trace-norm contractions even though the lifted operator is one.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CounterexampleReport {
    /// Quadrature value of `((1/T) integral xi^2)^{1/2}`.
    pub l2_norm: f64,
    /// Maximum of `xi` over the grid.
    pub max_value: f64,
    /// Location of the maximum.
    pub max_location: f64,
    /// `|| xi (a (.) e_0) ||_L2 / ||a||_1` for a fixed probe state.
    pub constant_state_ratio: f64,
    /// Whether `xi` exceeds 1 on a subinterval.
    pub pointwise_exceeds_one: bool,
}

fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = if n % 2 == 0 { n } else { n + 1 };
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + k as f64 * h);
    }
    s * h / 3.0
}

pub fn contraction_counterexample(period: f64) -> Result<CounterexampleReport> {
    if period <= 0.0 || !period.is_finite() {
        return Err(Error::InvalidInput("period must be positive".into()));
    }
    let t2 = period * period;
    let xi = move |t: f64| -(30.0f64.sqrt() / t2) * (t - period) * t;

    let l2_norm = (simpson(|t| xi(t) * xi(t), 0.0, period, 4096) / period).sqrt();

    let grid = 4096usize;
    let mut max_value = f64::MIN;
    let mut max_location = 0.0;
    for k in 0..=grid {
        let t = k as f64 * period / grid as f64;
        if xi(t) > max_value {
            max_value = xi(t);
            max_location = t;
        }
    }

    // Probe: the multiplication operator applied to a constant state.
    let mut a = matrix::zeros(2);
    a[[0, 0]] = Complex64::new(0.7, 0.0);
    a[[1, 1]] = Complex64::new(0.3, 0.0);
    let a_norm = matrix::trace_norm(&a)?;
    let integrand = |t: f64| -> f64 {
        let scaled = a.mapv(|z| z * xi(t));
        matrix::trace_norm(&scaled).map(|x| x * x).unwrap_or(f64::NAN)
    };
    let constant_state_ratio =
        (simpson(integrand, 0.0, period, 2048) / period).sqrt() / a_norm;

    Ok(CounterexampleReport {
        l2_norm,
        max_value,
        max_location,
        constant_state_ratio,
        pointwise_exceeds_one: max_value > 1.0,
    })
}
