//! Floquet analysis of linear periodic ODEs: principal fundamental
//! solutions, monodromy matrices, normal forms `Phi(t) = P(t) e^{tB}` and
//! the unitary specialization `u_t = p_t e^{-it Hbar}`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::{self, CMat};
use crate::periodic::PeriodicMatrixFunction;

/// One fixed RK4 step for `dX/dt = A(t) X`.
fn rk4_step<F>(a: &F, t: f64, h: f64, x: &CMat) -> CMat
where
    F: Fn(f64) -> CMat,
{
    let k1 = a(t).dot(x);
    let k2 = a(t + 0.5 * h).dot(&(x + &k1.mapv(|z| z * (0.5 * h))));
    let k3 = a(t + 0.5 * h).dot(&(x + &k2.mapv(|z| z * (0.5 * h))));
    let k4 = a(t + h).dot(&(x + &k3.mapv(|z| z * h)));
    x + &(k1 + k2.mapv(|z| z * 2.0) + k3.mapv(|z| z * 2.0) + k4).mapv(|z| z * (h / 6.0))
}

/// Principal fundamental solution `Phi(t)` of `dPhi/dt = A(t) Phi`,
/// `Phi(0) = I`, by fixed-step RK4 with nominal step `T / steps_per_period`.
pub fn propagate_fundamental<F>(
    a: &F,
    dim: usize,
    period: f64,
    t: f64,
    steps_per_period: usize,
) -> Result<CMat>
where
    F: Fn(f64) -> CMat,
{
    if t < 0.0 || !t.is_finite() {
        return Err(Error::InvalidInput(format!("time {t} must be nonnegative")));
    }
    if steps_per_period < 16 {
        return Err(Error::InvalidInput("steps_per_period must be at least 16".into()));
    }
    let mut x = matrix::identity(dim);
    if t == 0.0 {
        return Ok(x);
    }
    let nominal = period / steps_per_period as f64;
    let n = (t / nominal).ceil().max(1.0) as usize;
    let h = t / n as f64;
    for k in 0..n {
        x = rk4_step(a, k as f64 * h, h, &x);
    }
    if !matrix::all_finite(&x) {
        return Err(Error::NumericRange("fundamental solution overflowed".into()));
    }
    Ok(x)
}

/// Fundamental solution sampled on the uniform grid `t_k = k T / steps`,
/// k = 0..steps (inclusive, so the last entry is the monodromy matrix).
pub fn propagate_grid<F>(a: &F, dim: usize, period: f64, steps: usize) -> Result<Vec<CMat>>
where
    F: Fn(f64) -> CMat,
{
    if steps < 16 {
        return Err(Error::InvalidInput("steps_per_period must be at least 16".into()));
    }
    let h = period / steps as f64;
    let mut out = Vec::with_capacity(steps + 1);
    let mut x = matrix::identity(dim);
    out.push(x.clone());
    for k in 0..steps {
        x = rk4_step(a, k as f64 * h, h, &x);
        if !matrix::all_finite(&x) {
            return Err(Error::NumericRange("fundamental solution overflowed".into()));
        }
        out.push(x.clone());
    }
    Ok(out)
}

/// Floquet normal form `Phi(t) = P(t) e^{tB}` of a periodic linear ODE.
#[derive(Debug, Clone)]
pub struct FloquetDecomposition {
    /// Floquet generator `B = log(Phi(T)) / T` (principal branch).
    pub generator: CMat,
    /// Periodic part `P(t)`, `P(0) = I`, with grid and Fourier data.
    pub periodic_part: PeriodicMatrixFunction,
    /// Floquet exponents: eigenvalues of `B`, deterministic order.
    pub exponents: Vec<Complex64>,
    /// Characteristic multipliers `e^{xi_j T}` in matching order.
    pub multipliers: Vec<Complex64>,
    /// Monodromy matrix `Phi(T)`.
    pub monodromy: CMat,
}

/// Decompose the ODE `dx/dt = A(t) x` into its Floquet normal form.
///
/// The periodic part is sampled on the RK4 grid (`steps_per_period` points
/// per period) and its Fourier coefficients kept up to `bandwidth`.
pub fn floquet_decompose<F>(
    a: &F,
    dim: usize,
    period: f64,
    steps_per_period: usize,
    bandwidth: usize,
    branch_nudge: bool,
) -> Result<FloquetDecomposition>
where
    F: Fn(f64) -> CMat,
{
    let phi = propagate_grid(a, dim, period, steps_per_period)?;
    let monodromy = phi[steps_per_period].clone();
    let b = matrix::matrix_log_principal(&monodromy, branch_nudge)?.mapv(|z| z / period);

    let mut p_grid = Vec::with_capacity(steps_per_period);
    for (k, phik) in phi.iter().take(steps_per_period).enumerate() {
        let t = k as f64 * period / steps_per_period as f64;
        let e = matrix::matrix_exp(&b.mapv(|z| z * Complex64::new(-t, 0.0)))?;
        p_grid.push(phik.dot(&e));
    }
    let periodic_part = PeriodicMatrixFunction::from_grid(period, bandwidth, p_grid)?;

    let eig = matrix::eig_general(&b)?;
    let exponents = eig.values.clone();
    let multipliers = exponents.iter().map(|xi| (xi * period).exp()).collect();

    Ok(FloquetDecomposition { generator: b, periodic_part, exponents, multipliers, monodromy })
}

/// The ladder `xi_j + i n Omega` for `|n| <= n_range`, returned as
/// `(j, n, value)` in fixed (j, n) order.
pub fn shifted_exponents(
    dec: &FloquetDecomposition,
    n_range: i64,
) -> Vec<(usize, i64, Complex64)> {
    let omega = dec.periodic_part.omega();
    let mut out = Vec::new();
    for (j, xi) in dec.exponents.iter().enumerate() {
        for n in -n_range..=n_range {
            out.push((j, n, xi + Complex64::new(0.0, n as f64 * omega)));
        }
    }
    out
}

/// Floquet data of a periodic Schroedinger propagator:
/// `u_t = p_t e^{-it Hbar}` with unitary periodic `p_t`, `p_0 = I`, and
/// Hermitian averaged Hamiltonian `Hbar`.
#[derive(Debug, Clone)]
pub struct UnitaryFloquet {
    /// Averaged Hamiltonian, Hermitian by construction (symmetrized).
    pub h_bar: CMat,
    /// Eigenvalues of `h_bar` folded into the requested Brillouin zone,
    /// ascending.
    pub quasienergies: Vec<f64>,
    /// Periodic unitary part with grid and Fourier data.
    pub p: PeriodicMatrixFunction,
}

impl UnitaryFloquet {
    pub fn dim(&self) -> usize {
        self.h_bar.nrows()
    }

    pub fn period(&self) -> f64 {
        self.p.period()
    }

    pub fn omega(&self) -> f64 {
        self.p.omega()
    }

    /// `p_t` from the truncated Fourier series.
    pub fn p_at(&self, t: f64) -> CMat {
        self.p.eval(t)
    }

    /// Propagator `u_t = p_t e^{-it Hbar}`.
    pub fn u_at(&self, t: f64) -> Result<CMat> {
        let e = matrix::matrix_exp(&self.h_bar.mapv(|z| z * Complex64::new(0.0, -t)))?;
        Ok(self.p_at(t).dot(&e))
    }
}

/// Fold `x` into the zone `(-Omega/2, Omega/2] + zone_offset * Omega`.
fn fold_quasienergy(x: f64, omega: f64, zone_offset: i64) -> f64 {
    let mut y = x - omega * (x / omega).round();
    if y <= -omega / 2.0 {
        y += omega;
    }
    y + zone_offset as f64 * omega
}

/// Floquet decomposition of the Schroedinger propagator for a periodic
/// Hermitian Hamiltonian.
///
/// `Hbar = (i/T) log u_T` (principal branch, then Hermitian-symmetrized to
/// scrub integrator drift; the downstream Bohr decomposition requires an
/// exactly Hermitian matrix). Quasienergies land in the first Brillouin
/// zone `(-Omega/2, Omega/2]` unless an alternate `zone_offset` is
/// requested, in which case `Hbar` shifts by `zone_offset * Omega * I` and
/// `p_t` absorbs the compensating phase.
pub fn unitary_floquet<F>(
    h: &F,
    dim: usize,
    period: f64,
    steps_per_period: usize,
    bandwidth: usize,
    zone_offset: i64,
    branch_nudge: bool,
) -> Result<UnitaryFloquet>
where
    F: Fn(f64) -> CMat,
{
    // Hermiticity of the drive, probed on a subgrid.
    for k in 0..steps_per_period.min(64) {
        let t = k as f64 * period / steps_per_period.min(64) as f64;
        let ht = h(t);
        let res = matrix::hermiticity_residual(&ht);
        if res > 1e-9 * matrix::max_abs(&ht).max(1.0) {
            return Err(Error::NotHermitian { residual: res, tol: 1e-9 });
        }
    }

    let minus_i_h = |t: f64| h(t).mapv(|z| z * Complex64::new(0.0, -1.0));
    let u = propagate_grid(&minus_i_h, dim, period, steps_per_period)?;
    let u_t = &u[steps_per_period];
    let log_monodromy = matrix::matrix_log_principal(u_t, branch_nudge)?;
    let h_raw = log_monodromy.mapv(|z| z * Complex64::new(0.0, 1.0) / period);
    let h_sym = (&h_raw + &matrix::dagger(&h_raw)).mapv(|z| z * 0.5);

    // Fold eigenvalues into the requested zone and rebuild Hbar from its
    // spectral decomposition so matrix and quasienergies stay consistent.
    let omega = 2.0 * std::f64::consts::PI / period;
    let (vals, vecs) = matrix::eigh(&h_sym)?;
    let folded: Vec<f64> =
        vals.iter().map(|&e| fold_quasienergy(e, omega, zone_offset)).collect();
    let mut h_bar = matrix::zeros(dim);
    for (j, &e) in folded.iter().enumerate() {
        let v = vecs.column(j).to_owned();
        for r in 0..dim {
            for c in 0..dim {
                h_bar[[r, c]] += v[r] * v[c].conj() * e;
            }
        }
    }
    let mut quasienergies = folded;
    quasienergies.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut p_grid = Vec::with_capacity(steps_per_period);
    for (k, uk) in u.iter().take(steps_per_period).enumerate() {
        let t = k as f64 * period / steps_per_period as f64;
        let e = matrix::matrix_exp(&h_bar.mapv(|z| z * Complex64::new(0.0, t)))?;
        let pk = uk.dot(&e);
        if !matrix::is_unitary(&pk, 1e-8) {
            return Err(Error::Decomposition(format!(
                "periodic part lost unitarity at t = {t}"
            )));
        }
        p_grid.push(pk);
    }
    let p = PeriodicMatrixFunction::from_grid(period, bandwidth, p_grid)?;

    Ok(UnitaryFloquet { h_bar, quasienergies, p })
}
