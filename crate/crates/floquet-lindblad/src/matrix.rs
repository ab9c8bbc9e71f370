//! Dense complex matrix primitives: norms, exponentials, logarithms and
//! eigendecompositions used by every other module.
//!
//! Matrices are `ndarray::Array2<Complex64>` throughout; the decomposition
//! kernels (SVD, eigenvalue problems, linear solves) are delegated to `faer`.
//! All operations are pure and deterministic: reductions run in fixed index
//! order and eigenpairs are sorted by a fixed convention.

use faer::complex_native::c64;
use faer::prelude::SpSolver;
use faer::Mat;
use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = Array2<Complex64>;

/// Default tolerances; every structural check accepts an override.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct Tolerances {
    /// Structural checks (Hermiticity, unitarity, trace preservation).
    pub structural: f64,
    /// Positive-semidefiniteness: eigenvalues may dip to `-psd`.
    pub psd: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { structural: 1e-9, psd: 1e-10 }
    }
}

pub fn identity(d: usize) -> CMat {
    Array2::from_shape_fn((d, d), |(i, j)| {
        if i == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) }
    })
}

pub fn zeros(d: usize) -> CMat {
    Array2::zeros((d, d))
}

/// Conjugate transpose.
pub fn dagger(a: &CMat) -> CMat {
    a.t().mapv(|z| z.conj())
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a.dot(b) - b.dot(a)
}

pub fn anticommutator(a: &CMat, b: &CMat) -> CMat {
    a.dot(b) + b.dot(a)
}

pub fn trace(a: &CMat) -> Complex64 {
    a.diag().iter().sum()
}

/// Kronecker product with row index `i1 * b.nrows() + i2`.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    Array2::from_shape_fn((ar * br, ac * bc), |(i, j)| {
        a[[i / br, j / bc]] * b[[i % br, j % bc]]
    })
}

pub fn max_abs(a: &CMat) -> f64 {
    a.iter().fold(0.0f64, |m, z| m.max(z.norm()))
}

pub fn all_finite(a: &CMat) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Frobenius norm.
pub fn fro_norm(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Maximum absolute column sum (the induced 1-norm).
fn one_norm(a: &CMat) -> f64 {
    let (_, c) = a.dim();
    (0..c)
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0f64, f64::max)
}

/// Deterministic pseudo-random complex matrix, for seeded probe states.
pub fn probe_matrix(d: usize, seed: u64) -> CMat {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_fn((d, d), |_| {
        Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
    })
}

pub fn pauli_x() -> CMat {
    let mut m = zeros(2);
    m[[0, 1]] = Complex64::new(1.0, 0.0);
    m[[1, 0]] = Complex64::new(1.0, 0.0);
    m
}

pub fn pauli_y() -> CMat {
    let mut m = zeros(2);
    m[[0, 1]] = Complex64::new(0.0, -1.0);
    m[[1, 0]] = Complex64::new(0.0, 1.0);
    m
}

pub fn pauli_z() -> CMat {
    let mut m = zeros(2);
    m[[0, 0]] = Complex64::new(1.0, 0.0);
    m[[1, 1]] = Complex64::new(-1.0, 0.0);
    m
}

// ---------------------------------------------------------------------------
// faer interop
// ---------------------------------------------------------------------------

pub(crate) fn to_faer(a: &CMat) -> Mat<c64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| {
        let z = a[[i, j]];
        c64::new(z.re, z.im)
    })
}

pub(crate) fn from_faer(a: faer::MatRef<'_, c64>) -> CMat {
    Array2::from_shape_fn((a.nrows(), a.ncols()), |(i, j)| {
        let z = a.read(i, j);
        Complex64::new(z.re, z.im)
    })
}

/// Solve `a x = b` for dense complex `a` via partial-pivot LU.
pub fn solve(a: &CMat, b: &CMat) -> Result<CMat> {
    if a.nrows() != a.ncols() || a.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "solve: a is {}x{}, b is {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    let lu = to_faer(a).partial_piv_lu();
    let x = lu.solve(to_faer(b));
    let x = from_faer(x.as_ref());
    if !all_finite(&x) {
        return Err(Error::Decomposition("singular matrix in solve".into()));
    }
    Ok(x)
}

pub fn inverse(a: &CMat) -> Result<CMat> {
    solve(a, &identity(a.nrows()))
}

// ---------------------------------------------------------------------------
// Singular values and the two norms of the state space
// ---------------------------------------------------------------------------

/// Singular values in descending order.
pub fn singular_values(a: &CMat) -> Result<Vec<f64>> {
    if !all_finite(a) {
        return Err(Error::InvalidInput("non-finite entries".into()));
    }
    let svd = to_faer(a).svd();
    let s = svd.s_diagonal();
    let mut out: Vec<f64> = (0..s.nrows()).map(|i| s[i].re).collect();
    out.sort_by(|x, y| y.partial_cmp(x).unwrap());
    Ok(out)
}

/// Trace norm `tr sqrt(a^H a)`: the sum of singular values.
pub fn trace_norm(a: &CMat) -> Result<f64> {
    Ok(singular_values(a)?.iter().sum())
}

/// Operator norm induced by the Euclidean norm: the largest singular value.
pub fn operator_norm(a: &CMat) -> Result<f64> {
    Ok(singular_values(a)?.first().copied().unwrap_or(0.0))
}

// ---------------------------------------------------------------------------
// Matrix exponential: scaling and squaring with diagonal Pade approximants
// ---------------------------------------------------------------------------

const THETA_3: f64 = 1.495585217958292e-2;
const THETA_5: f64 = 2.539398330063230e-1;
const THETA_7: f64 = 9.504178996162932e-1;
const THETA_9: f64 = 2.097847961257068e0;
const THETA_13: f64 = 5.371920351148152e0;

fn pade_uv(a: &CMat, b: &[f64]) -> (CMat, CMat) {
    // Diagonal Pade of order (b.len()-1)/2 <= 9, evaluated from powers of a.
    let d = a.nrows();
    let a2 = a.dot(a);
    let mut even = identity(d) * Complex64::new(b[0], 0.0);
    let mut odd = identity(d) * Complex64::new(b[1], 0.0);
    let mut pow = identity(d); // a^(2k)
    for k in 1..=(b.len() - 1) / 2 {
        pow = pow.dot(&a2);
        even = even + pow.mapv(|z| z * b[2 * k]);
        if 2 * k + 1 < b.len() {
            odd = odd + pow.mapv(|z| z * b[2 * k + 1]);
        }
    }
    (a.dot(&odd), even)
}

fn pade13_uv(a: &CMat) -> (CMat, CMat) {
    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    let d = a.nrows();
    let a2 = a.dot(a);
    let a4 = a2.dot(&a2);
    let a6 = a2.dot(&a4);
    let i = identity(d);
    let u_hi = a6.mapv(|z| z * B[13]) + a4.mapv(|z| z * B[11]) + a2.mapv(|z| z * B[9]);
    let u_lo = a6.mapv(|z| z * B[7]) + a4.mapv(|z| z * B[5]) + a2.mapv(|z| z * B[3]) + i.mapv(|z| z * B[1]);
    let u = a.dot(&(a6.dot(&u_hi) + u_lo));
    let v_hi = a6.mapv(|z| z * B[12]) + a4.mapv(|z| z * B[10]) + a2.mapv(|z| z * B[8]);
    let v = a6.dot(&v_hi) + a6.mapv(|z| z * B[6]) + a4.mapv(|z| z * B[4]) + a2.mapv(|z| z * B[2]) + i.mapv(|z| z * B[0]);
    (u, v)
}

/// Matrix exponential by scaling-and-squaring with diagonal Pade
/// approximants (orders 3/5/7/9/13 selected from the 1-norm).
pub fn matrix_exp(a: &CMat) -> Result<CMat> {
    if !all_finite(a) {
        return Err(Error::InvalidInput("non-finite entries".into()));
    }
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch("matrix_exp of non-square matrix".into()));
    }
    let norm = one_norm(a);
    if norm > 1e6 {
        return Err(Error::NumericRange(format!("matrix_exp: 1-norm {norm:e} too large")));
    }

    const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
    const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
    const B7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
    const B9: [f64; 10] = [
        17643225600.0,
        8821612800.0,
        2075673600.0,
        302702400.0,
        30270240.0,
        2162160.0,
        110880.0,
        3960.0,
        90.0,
        1.0,
    ];

    let (u, v, squarings) = if norm <= THETA_3 {
        let (u, v) = pade_uv(a, &B3);
        (u, v, 0u32)
    } else if norm <= THETA_5 {
        let (u, v) = pade_uv(a, &B5);
        (u, v, 0)
    } else if norm <= THETA_7 {
        let (u, v) = pade_uv(a, &B7);
        (u, v, 0)
    } else if norm <= THETA_9 {
        let (u, v) = pade_uv(a, &B9);
        (u, v, 0)
    } else {
        let s = ((norm / THETA_13).log2().ceil()).max(0.0) as u32;
        let scaled = a.mapv(|z| z / (2.0f64.powi(s as i32)));
        let (u, v) = pade13_uv(&scaled);
        (u, v, s)
    };

    let num = &v + &u;
    let den = &v - &u;
    let mut r = solve(&den, &num)?;
    for _ in 0..squarings {
        r = r.dot(&r);
    }
    if !all_finite(&r) {
        return Err(Error::NumericRange("matrix_exp overflowed".into()));
    }
    Ok(r)
}

// ---------------------------------------------------------------------------
// Principal matrix logarithm: inverse scaling and squaring
// ---------------------------------------------------------------------------

/// One principal square root via the Denman-Beavers iteration.
fn db_sqrt(a: &CMat) -> Result<CMat> {
    let d = a.nrows();
    let mut x = a.clone();
    let mut y = identity(d);
    for _ in 0..60 {
        let xi = inverse(&x)?;
        let yi = inverse(&y)?;
        let xn = (&x + &yi).mapv(|z| z * 0.5);
        let yn = (&y + &xi).mapv(|z| z * 0.5);
        let delta = one_norm(&(&xn - &x));
        x = xn;
        y = yn;
        if delta <= 1e-15 * one_norm(&x).max(1.0) {
            return Ok(x);
        }
    }
    // Quadratic convergence means 60 iterations only run out for matrices
    // with spectrum hugging the branch cut.
    Err(Error::Decomposition("square-root iteration did not converge".into()))
}

/// log(I + g) by 10-point Gauss-Legendre quadrature of the integral
/// representation; requires `||g||` small (inverse scaling handles that).
fn log_near_identity(g: &CMat) -> Result<CMat> {
    const NODES: [f64; 5] = [
        0.1488743389816312,
        0.4333953941292472,
        0.6794095682990244,
        0.8650633666889845,
        0.9739065285171717,
    ];
    const WEIGHTS: [f64; 5] = [
        0.2955242247147529,
        0.2692667193099963,
        0.2190863625159820,
        0.1494513491505806,
        0.0666713443086881,
    ];
    let d = g.nrows();
    let mut acc = zeros(d);
    for k in 0..10 {
        let (x, w) = if k < 5 {
            ((1.0 - NODES[k]) / 2.0, WEIGHTS[k] / 2.0)
        } else {
            ((1.0 + NODES[k - 5]) / 2.0, WEIGHTS[k - 5] / 2.0)
        };
        let den = identity(d) + g.mapv(|z| z * x);
        let term = solve(&den, g)?;
        acc = acc + term.mapv(|z| z * w);
    }
    Ok(acc)
}

/// Inverse scaling-and-squaring log for matrices whose eigenbasis is too
/// ill-conditioned to diagonalize. Requires the spectrum well away from the
/// branch cut (the Denman-Beavers intermediates blow up otherwise).
fn log_iss(a: &CMat) -> Result<CMat> {
    let d = a.nrows();
    let mut x = a.clone();
    let mut k = 0u32;
    while one_norm(&(&x - &identity(d))) > 0.15 {
        x = db_sqrt(&x)?;
        k += 1;
        if k > 60 {
            return Err(Error::Decomposition("inverse scaling did not contract".into()));
        }
    }
    let g = &x - &identity(d);
    Ok(log_near_identity(&g)?.mapv(|z| z * 2.0f64.powi(k as i32)))
}

/// Principal matrix logarithm.
///
/// Eigenvalues on the closed negative real axis (within 1e-10 of it) are an
/// error unless `branch_nudge` is set, in which case the spectrum is rotated
/// by `e^{i eps}`, eps = 1e-8, before taking the log and the rotation is
/// subtracted afterwards. Monodromy matrices with multiplier -1 (half-period
/// resonance) are physical, so the caller must opt in deliberately rather
/// than have the branch chosen silently.
///
/// Diagonalizable input goes through the eigendecomposition; a nearly
/// defective eigenbasis falls back to inverse scaling-and-squaring. Either
/// way the round trip `exp(log a) = a` is verified before returning.
pub fn matrix_log_principal(a: &CMat, branch_nudge: bool) -> Result<CMat> {
    if !all_finite(a) {
        return Err(Error::InvalidInput("non-finite entries".into()));
    }
    let d = a.nrows();
    if d != a.ncols() {
        return Err(Error::DimensionMismatch("matrix_log of non-square matrix".into()));
    }
    let eigs = complex_eigenvalues(a)?;
    let scale = eigs.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    if scale == 0.0 || eigs.iter().any(|z| z.norm() <= 1e-14 * scale) {
        return Err(Error::Decomposition("matrix_log of a singular matrix".into()));
    }
    let cut_tol = 1e-10 * scale.max(1.0);
    let on_cut = eigs.iter().any(|z| z.re <= 0.0 && z.im.abs() <= cut_tol);
    if on_cut && !branch_nudge {
        return Err(Error::BranchCut(
            "eigenvalue within 1e-10 of the negative real axis; pass branch_nudge to rotate the spectrum".into(),
        ));
    }
    let rotation = if on_cut { 1e-8 } else { 0.0 };
    let phase = Complex64::new(0.0, rotation).exp();
    let work = a.mapv(|z| z * phase);

    let eig = eig_general(&work)?;
    let mut logm = if eig.ill_conditioned {
        log_iss(&work)?
    } else {
        let logs = Array2::from_shape_fn((d, d), |(i, j)| {
            if i == j { eig.values[i].ln() } else { Complex64::new(0.0, 0.0) }
        });
        let vl = eig.vectors.dot(&logs);
        // logm V = V log(Lambda)  =>  logm = (V^H \ (V log Lambda)^H)^H
        let vh = dagger(&eig.vectors);
        let x = solve(&vh, &dagger(&vl))?;
        dagger(&x)
    };
    if rotation != 0.0 {
        for i in 0..d {
            logm[[i, i]] -= Complex64::new(0.0, rotation);
        }
    }

    // Postcondition guard: exp(log a) must reproduce a.
    let back = matrix_exp(&logm)?;
    let residual = one_norm(&(&back - a));
    if residual > 1e-9 * one_norm(a).max(1.0) {
        return Err(Error::Decomposition(format!(
            "matrix_log round-trip residual {residual:e} exceeds tolerance"
        )));
    }
    Ok(logm)
}

// ---------------------------------------------------------------------------
// Eigendecompositions
// ---------------------------------------------------------------------------

pub fn complex_eigenvalues(a: &CMat) -> Result<Vec<Complex64>> {
    if !all_finite(a) {
        return Err(Error::InvalidInput("non-finite entries".into()));
    }
    let ev = to_faer(a).complex_eigenvalues();
    Ok(ev.into_iter().map(|z| Complex64::new(z.re, z.im)).collect())
}

/// General (non-Hermitian) eigendecomposition with a deterministic ordering.
#[derive(Debug, Clone)]
pub struct Eig {
    /// Sorted by real part descending, then imaginary part ascending.
    pub values: Vec<Complex64>,
    /// Unit right eigenvectors in matching column order, phase-fixed so the
    /// first component above threshold is real positive.
    pub vectors: CMat,
    /// 2-norm condition number of the eigenvector matrix.
    pub condition: f64,
    /// Set when the eigenbasis is too ill-conditioned to trust (defective
    /// or nearly defective input).
    pub ill_conditioned: bool,
}

/// Threshold on cond(V) beyond which the eigenbasis is flagged.
const EIG_CONDITION_LIMIT: f64 = 1e8;

pub fn eig_general(a: &CMat) -> Result<Eig> {
    if !all_finite(a) {
        return Err(Error::InvalidInput("non-finite entries".into()));
    }
    let d = a.nrows();
    if d != a.ncols() {
        return Err(Error::DimensionMismatch("eig of non-square matrix".into()));
    }
    let evd = to_faer(a).eigendecomposition::<c64>();
    let s = evd.s().column_vector();
    let u = from_faer(evd.u());
    let mut pairs: Vec<(Complex64, Vec<Complex64>)> = (0..d)
        .map(|j| {
            let lam = Complex64::new(s[j].re, s[j].im);
            let col: Vec<Complex64> = (0..d).map(|i| u[[i, j]]).collect();
            (lam, col)
        })
        .collect();
    pairs.sort_by(|(a, _), (b, _)| {
        b.re.partial_cmp(&a.re)
            .unwrap()
            .then(a.im.partial_cmp(&b.im).unwrap())
    });

    let mut vectors = zeros(d);
    let mut values = Vec::with_capacity(d);
    for (j, (lam, col)) in pairs.into_iter().enumerate() {
        values.push(lam);
        let norm = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let maxabs = col.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        let pivot = col
            .iter()
            .find(|z| z.norm() > 1e-12 * maxabs.max(1e-300))
            .copied()
            .unwrap_or(Complex64::new(1.0, 0.0));
        let phase = pivot.conj() / pivot.norm();
        for i in 0..d {
            vectors[[i, j]] = col[i] * phase / norm;
        }
    }

    let sv = singular_values(&vectors)?;
    let smin = sv.last().copied().unwrap_or(0.0);
    let condition = if smin > 0.0 { sv[0] / smin } else { f64::INFINITY };
    Ok(Eig { values, vectors, condition, ill_conditioned: condition > EIG_CONDITION_LIMIT })
}

/// Hermitian eigendecomposition, eigenvalues ascending, deterministic
/// eigenvector phases. The caller guarantees Hermiticity; only the lower
/// triangle is referenced.
pub fn eigh(a: &CMat) -> Result<(Vec<f64>, CMat)> {
    if !all_finite(a) {
        return Err(Error::InvalidInput("non-finite entries".into()));
    }
    let d = a.nrows();
    let evd = to_faer(a).selfadjoint_eigendecomposition(faer::Side::Lower);
    let s = evd.s().column_vector();
    let u = from_faer(evd.u());
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| s[i].re.partial_cmp(&s[j].re).unwrap());
    let mut vals = Vec::with_capacity(d);
    let mut vecs = zeros(d);
    for (jj, &j) in order.iter().enumerate() {
        vals.push(s[j].re);
        let col: Vec<Complex64> = (0..d).map(|i| u[[i, j]]).collect();
        let maxabs = col.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        let pivot = col
            .iter()
            .find(|z| z.norm() > 1e-12 * maxabs.max(1e-300))
            .copied()
            .unwrap_or(Complex64::new(1.0, 0.0));
        let phase = pivot.conj() / pivot.norm();
        for i in 0..d {
            vecs[[i, jj]] = col[i] * phase;
        }
    }
    Ok((vals, vecs))
}

// ---------------------------------------------------------------------------
// Structural predicates
// ---------------------------------------------------------------------------

pub fn hermiticity_residual(a: &CMat) -> f64 {
    max_abs(&(a - &dagger(a)))
}

pub fn is_hermitian(a: &CMat, tol: f64) -> bool {
    hermiticity_residual(a) <= tol
}

pub fn is_unitary(a: &CMat, tol: f64) -> bool {
    let d = a.nrows();
    max_abs(&(dagger(a).dot(a) - identity(d))) <= tol
}

/// Smallest eigenvalue of the Hermitian part; the PSD check compares this
/// against `-tol`.
pub fn min_hermitian_eigenvalue(a: &CMat) -> Result<f64> {
    let herm = (a + &dagger(a)).mapv(|z| z * 0.5);
    let (vals, _) = eigh(&herm)?;
    Ok(vals.first().copied().unwrap_or(0.0))
}

pub fn is_positive_semidefinite(a: &CMat, tol: f64) -> Result<bool> {
    if !is_hermitian(a, tol.max(1e-12) * 10.0_f64.max(max_abs(a))) {
        return Ok(false);
    }
    Ok(min_hermitian_eigenvalue(a)? >= -tol)
}

// ---------------------------------------------------------------------------
// Density matrices
// ---------------------------------------------------------------------------

/// A validated density matrix: Hermitian, positive semidefinite, unit trace.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    mat: CMat,
}

impl DensityMatrix {
    pub fn new(mat: CMat, tol: &Tolerances) -> Result<Self> {
        if !all_finite(&mat) {
            return Err(Error::InvalidInput("non-finite entries".into()));
        }
        let herm = hermiticity_residual(&mat);
        if herm > tol.structural {
            return Err(Error::NotHermitian { residual: herm, tol: tol.structural });
        }
        let min_eig = min_hermitian_eigenvalue(&mat)?;
        if min_eig < -tol.psd {
            return Err(Error::InvalidInput(format!(
                "density matrix has eigenvalue {min_eig:e} below -psd_tol"
            )));
        }
        let tr = trace(&mat);
        if (tr - Complex64::new(1.0, 0.0)).norm() > tol.structural {
            return Err(Error::InvalidInput(format!("density matrix trace {tr} is not 1")));
        }
        Ok(DensityMatrix { mat })
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    /// Maximally mixed state I/d.
    pub fn maximally_mixed(d: usize) -> Self {
        DensityMatrix { mat: identity(d).mapv(|z| z / d as f64) }
    }

    /// Pure state |k><k|.
    pub fn basis_state(d: usize, k: usize) -> Self {
        let mut m = zeros(d);
        m[[k, k]] = Complex64::new(1.0, 0.0);
        DensityMatrix { mat: m }
    }

    /// Uniform superposition projector: entries all 1/d.
    pub fn plus_state(d: usize) -> Self {
        let m = Array2::from_shape_fn((d, d), |_| Complex64::new(1.0 / d as f64, 0.0));
        DensityMatrix { mat: m }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// One-sided Jacobi SVD, used as an independent oracle for the
    /// faer-backed singular value routines.
    fn jacobi_singular_values(a: &CMat) -> Vec<f64> {
        let mut u = a.clone();
        let n = u.ncols();
        for _sweep in 0..60 {
            let mut off = 0.0f64;
            for p in 0..n {
                for q in (p + 1)..n {
                    let mut app = 0.0;
                    let mut aqq = 0.0;
                    let mut apq = Complex64::new(0.0, 0.0);
                    for i in 0..u.nrows() {
                        app += u[[i, p]].norm_sqr();
                        aqq += u[[i, q]].norm_sqr();
                        apq += u[[i, p]].conj() * u[[i, q]];
                    }
                    off = off.max(apq.norm());
                    if apq.norm() < 1e-15 * (app * aqq).sqrt().max(1e-300) {
                        continue;
                    }
                    // Complex Jacobi rotation zeroing the (p,q) Gram entry.
                    let phase = apq / apq.norm();
                    let tau = (aqq - app) / (2.0 * apq.norm());
                    let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                    let cth = 1.0 / (1.0 + t * t).sqrt();
                    let sth = cth * t;
                    for i in 0..u.nrows() {
                        let up = u[[i, p]];
                        let uq = u[[i, q]];
                        u[[i, p]] = up * cth - uq * phase.conj() * sth;
                        u[[i, q]] = up * phase * sth + uq * cth;
                    }
                }
            }
            if off < 1e-14 {
                break;
            }
        }
        let mut sv: Vec<f64> = (0..n)
            .map(|j| (0..u.nrows()).map(|i| u[[i, j]].norm_sqr()).sum::<f64>().sqrt())
            .collect();
        sv.sort_by(|x, y| y.partial_cmp(x).unwrap());
        sv
    }

    fn seeded_matrix(d: usize, seed: u64) -> CMat {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((d, d), |_| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
    }

    #[test]
    fn trace_norm_identity_and_pauli() {
        assert_relative_eq!(trace_norm(&identity(2)).unwrap(), 2.0, epsilon = 1e-13);
        assert_relative_eq!(trace_norm(&pauli_x()).unwrap(), 2.0, epsilon = 1e-13);
    }

    #[test]
    fn trace_norm_matches_jacobi_svd_oracle() {
        let a = seeded_matrix(3, 7);
        let oracle: f64 = jacobi_singular_values(&a).iter().sum();
        assert_relative_eq!(trace_norm(&a).unwrap(), oracle, epsilon = 1e-10);
    }

    #[test]
    fn operator_norm_diagonal() {
        let mut m = zeros(2);
        m[[0, 0]] = c(3.0, 0.0);
        m[[1, 1]] = c(-1.0, 0.0);
        assert_relative_eq!(operator_norm(&m).unwrap(), 3.0, epsilon = 1e-13);
        assert_relative_eq!(operator_norm(&identity(3)).unwrap(), 1.0, epsilon = 1e-13);
    }

    #[test]
    fn norm_inequality_on_random_matrices() {
        for seed in 0..50 {
            let a = seeded_matrix(4, seed);
            let sv = singular_values(&a).unwrap();
            // Computed from one SVD, so max <= sum holds exactly.
            assert!(sv[0] <= sv.iter().sum::<f64>());
            let b = seeded_matrix(4, seed + 1000);
            let ab = a.dot(&b);
            let lhs = trace_norm(&ab).unwrap();
            let rhs = operator_norm(&a).unwrap() * trace_norm(&b).unwrap();
            assert!(lhs <= rhs * (1.0 + 1e-12), "{lhs} > {rhs}");
        }
    }

    #[test]
    fn exp_of_zero_and_diagonal() {
        let e = matrix_exp(&zeros(3)).unwrap();
        assert!(max_abs(&(&e - &identity(3))) < 1e-15);
        let mut m = zeros(2);
        m[[0, 0]] = c(1.0, 0.0);
        m[[1, 1]] = c(2.0, 0.0);
        let e = matrix_exp(&m).unwrap();
        assert_relative_eq!(e[[0, 0]].re, 1.0f64.exp(), epsilon = 1e-12);
        assert_relative_eq!(e[[1, 1]].re, 2.0f64.exp(), epsilon = 1e-12);
        assert!(e[[0, 1]].norm() < 1e-15);
    }

    #[test]
    fn exp_rotation_closed_form() {
        // exp(i theta n.sigma) = cos(theta) I + i sin(theta) n.sigma
        let theta = std::f64::consts::FRAC_PI_2;
        let arg = pauli_x().mapv(|z| z * c(0.0, theta));
        let e = matrix_exp(&arg).unwrap();
        let expect = identity(2).mapv(|z| z * theta.cos())
            + pauli_x().mapv(|z| z * c(0.0, theta.sin()));
        assert!(max_abs(&(&e - &expect)) < 1e-13);
        // theta = pi/2 gives exactly i sigma_x
        assert!(max_abs(&(&e - &pauli_x().mapv(|z| z * c(0.0, 1.0)))) < 1e-13);
    }

    #[test]
    fn exp_large_norm_scaling_path() {
        // Commuting closed form survives the squaring phase.
        let m = pauli_z().mapv(|z| z * c(0.0, 50.0));
        let e = matrix_exp(&m).unwrap();
        assert_relative_eq!(e[[0, 0]].re, 50.0f64.cos(), epsilon = 1e-11);
        assert_relative_eq!(e[[0, 0]].im, 50.0f64.sin(), epsilon = 1e-11);
    }

    #[test]
    fn log_identity_is_zero() {
        let l = matrix_log_principal(&identity(3), false).unwrap();
        assert!(max_abs(&l) < 1e-12);
    }

    #[test]
    fn log_scalar_phase() {
        let theta = 0.3;
        let m = identity(2).mapv(|z| z * Complex64::new(0.0, theta).exp());
        let l = matrix_log_principal(&m, false).unwrap();
        assert!(max_abs(&(&l - &identity(2).mapv(|z| z * c(0.0, theta)))) < 1e-12);
    }

    #[test]
    fn log_exp_round_trip_random() {
        for seed in [1u64, 2, 3] {
            // Scale down so the spectrum stays inside the principal strip.
            let m = seeded_matrix(3, seed).mapv(|z| z * 0.8);
            let back = matrix_log_principal(&matrix_exp(&m).unwrap(), false).unwrap();
            assert!(
                max_abs(&(&back - &m)) < 1e-9,
                "round trip residual {}",
                max_abs(&(&back - &m))
            );
        }
    }

    #[test]
    fn log_branch_cut_detection_and_nudge() {
        // Multiplier -1: half-period resonance.
        let m = identity(2).mapv(|z| z * c(-1.0, 0.0));
        assert!(matches!(matrix_log_principal(&m, false), Err(Error::BranchCut(_))));
        let l = matrix_log_principal(&m, true).unwrap();
        let back = matrix_exp(&l).unwrap();
        assert!(max_abs(&(&back - &m)) < 1e-7);
    }

    #[test]
    fn log_singular_rejected() {
        let mut m = zeros(2);
        m[[0, 0]] = c(1.0, 0.0);
        assert!(matches!(matrix_log_principal(&m, false), Err(Error::Decomposition(_))));
    }

    #[test]
    fn eig_diagonal_sorted() {
        let mut m = zeros(3);
        m[[0, 0]] = c(1.0, 0.0);
        m[[1, 1]] = c(2.0, 0.0);
        m[[2, 2]] = c(3.0, 0.0);
        let e = eig_general(&m).unwrap();
        assert_relative_eq!(e.values[0].re, 3.0, epsilon = 1e-12);
        assert_relative_eq!(e.values[1].re, 2.0, epsilon = 1e-12);
        assert_relative_eq!(e.values[2].re, 1.0, epsilon = 1e-12);
        // unit basis vectors up to phase, phase fixed real positive
        assert_relative_eq!(e.vectors[[2, 0]].re, 1.0, epsilon = 1e-12);
        assert!(!e.ill_conditioned);
    }

    #[test]
    fn eig_pauli_x() {
        let e = eig_general(&pauli_x()).unwrap();
        assert_relative_eq!(e.values[0].re, 1.0, epsilon = 1e-12);
        assert_relative_eq!(e.values[1].re, -1.0, epsilon = 1e-12);
        for j in 0..2 {
            let lam = e.values[j];
            let v = e.vectors.column(j);
            let av = pauli_x().dot(&v.to_owned());
            let res: f64 = av
                .iter()
                .zip(v.iter())
                .map(|(a, b)| (a - lam * b).norm())
                .fold(0.0, f64::max);
            assert!(res < 1e-12);
        }
    }

    #[test]
    fn eig_defective_jordan_block_flagged() {
        let mut m = zeros(2);
        m[[0, 1]] = c(1.0, 0.0);
        let e = eig_general(&m).unwrap();
        assert!(e.values.iter().all(|z| z.norm() < 1e-7));
        // Condition-number oracle: a defective block has no full eigenbasis,
        // so the computed one must be flagged as ill-conditioned.
        assert!(e.ill_conditioned, "condition {}", e.condition);
    }

    #[test]
    fn eig_residual_random() {
        let m = seeded_matrix(5, 42);
        let e = eig_general(&m).unwrap();
        let scale = one_norm(&m);
        for j in 0..5 {
            let v = e.vectors.column(j).to_owned();
            let av = m.dot(&v);
            let res: f64 = av
                .iter()
                .zip(v.iter())
                .map(|(a, b)| (a - e.values[j] * b).norm())
                .fold(0.0, f64::max);
            assert!(res < 1e-9 * scale, "residual {res}");
        }
    }

    #[test]
    fn predicates() {
        assert!(is_hermitian(&pauli_y(), 1e-14));
        assert!(is_unitary(&pauli_y(), 1e-14));
        assert!(is_positive_semidefinite(&identity(2), 1e-10).unwrap());
        assert!(!is_positive_semidefinite(&pauli_z(), 1e-10).unwrap());
    }

    #[test]
    fn density_matrix_validation() {
        let tol = Tolerances::default();
        assert!(DensityMatrix::new(identity(2).mapv(|z| z * 0.5), &tol).is_ok());
        // trace 2: rejected
        assert!(DensityMatrix::new(identity(2), &tol).is_err());
        // negative eigenvalue: rejected
        assert!(DensityMatrix::new(pauli_z(), &tol).is_err());
    }

    #[test]
    fn solve_round_trip() {
        let a = seeded_matrix(4, 9) + identity(4).mapv(|z| z * 3.0);
        let x = seeded_matrix(4, 10);
        let b = a.dot(&x);
        let got = solve(&a, &b).unwrap();
        assert!(max_abs(&(&got - &x)) < 1e-11);
    }
}
