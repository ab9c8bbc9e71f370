//! State propagation by three independent routes, plus divisibility and
//! contraction checks on the resulting maps.
//!
//! Route 1: the factorized dynamical map `Lambda_t = P_t e^{t Lbar}`.
//! Route 2: the lifted semigroup on the truncated Fourier space, evaluated
//! back in the time domain.
//! Route 3: fixed-step RK4 on the time-local master equation, which is the
//! independent oracle for the other two.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::davies::DaviesGenerator;
use crate::error::{Error, Result};
use crate::floquet::UnitaryFloquet;
use crate::lifting::{lifted_semigroup_factorized, GeneralizedState, LiftedOperator};
use crate::matrix::{self, CMat};
use crate::periodic::PeriodicMatrixFunction;
use crate::superop::{self, Superoperator};

/// Additive slack for trace-norm contraction checks: CP/TP residuals of
/// order 1e-12 in the map must not read as contraction violations.
pub const CONTRACTION_SLACK: f64 = 1e-9;

/// The dynamical map at a single time.
#[derive(Debug, Clone)]
pub struct DynamicalMap {
    pub t: f64,
    pub map: Superoperator,
}

/// `Lambda_t = P_t e^{t Lbar}`.
pub fn dynamical_map(t: f64, uf: &UnitaryFloquet, dg: &DaviesGenerator) -> Result<DynamicalMap> {
    if t < 0.0 || !t.is_finite() {
        return Err(Error::InvalidInput(format!("time {t} must be nonnegative")));
    }
    let p = superop::conjugation(&uf.p_at(t))?;
    let e = dg.l_bar.scale(Complex64::new(t, 0.0)).exp()?;
    Ok(DynamicalMap { t, map: p.compose(&e) })
}

/// Propagator `V_{t,s} = Lambda_t Lambda_s^{-1} = P_t e^{(t-s) Lbar} P_s'`.
///
/// `P_s` is inverted exactly through unitarity (its trace dual), so the
/// factorized structure and its conditioning are preserved; only the
/// semigroup factor carries the time difference.
pub fn propagator(
    t: f64,
    s: f64,
    uf: &UnitaryFloquet,
    dg: &DaviesGenerator,
) -> Result<Superoperator> {
    if !(0.0 <= s && s <= t) {
        return Err(Error::InvalidInput(format!("need 0 <= s <= t, got s = {s}, t = {t}")));
    }
    let p_t = superop::conjugation(&uf.p_at(t))?;
    let p_s_inv = superop::conjugation(&uf.p_at(s))?.trace_dual();
    let e = dg.l_bar.scale(Complex64::new(t - s, 0.0)).exp()?;
    Ok(p_t.compose(&e).compose(&p_s_inv))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Factorized,
    Howland,
    Rk4,
}

/// A propagated state history on a fixed time grid.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<CMat>,
    pub method: Method,
}

impl Trajectory {
    /// Max over the grid of `|tr rho - 1|`.
    pub fn trace_residual(&self) -> f64 {
        self.states
            .iter()
            .map(|r| (matrix::trace(r) - Complex64::new(1.0, 0.0)).norm())
            .fold(0.0, f64::max)
    }

    /// Min over the grid of the smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> Result<f64> {
        let mut worst = f64::MAX;
        for r in &self.states {
            worst = worst.min(matrix::min_hermitian_eigenvalue(r)?);
        }
        Ok(worst)
    }

    /// Sup over the grid of the trace-norm distance to another trajectory.
    pub fn trace_norm_gap(&self, other: &Trajectory) -> Result<f64> {
        let mut worst = 0.0f64;
        for (a, b) in self.states.iter().zip(other.states.iter()) {
            worst = worst.max(matrix::trace_norm(&(a - b))?);
        }
        Ok(worst)
    }
}

/// Evolve by the factorized dynamical map at each grid point.
pub fn evolve_factorized(
    rho0: &CMat,
    grid: &[f64],
    uf: &UnitaryFloquet,
    dg: &DaviesGenerator,
) -> Result<Trajectory> {
    let mut states = Vec::with_capacity(grid.len());
    for &t in grid {
        let lam = dynamical_map(t, uf, dg)?;
        states.push(lam.map.apply(rho0));
    }
    Ok(Trajectory { times: grid.to_vec(), states, method: Method::Factorized })
}

/// Which realization of the lifted semigroup drives the Fourier-space
/// evolution: the structure-exact factorized form (default) or the dense
/// exponential of the generalized Lindbladian (cross-validation path).
pub enum HowlandRoute<'a> {
    Factorized { p_superop: &'a PeriodicMatrixFunction, l_bar: &'a Superoperator },
    Dense { l_tilde: &'a LiftedOperator },
}

/// Evolve through the truncated Fourier space:
/// `rho_t = evaluate(W_t(rho_0 (x) e_0), t)`.
///
/// Returns the trajectory and the largest edge-block mass fraction seen;
/// the flag is set when that exceeds 1e-6 (truncation-dominated error).
pub fn evolve_howland(
    rho0: &CMat,
    grid: &[f64],
    route: HowlandRoute<'_>,
    trunc: usize,
    period: f64,
) -> Result<(Trajectory, f64, bool)> {
    let embedded = GeneralizedState::embed(rho0, 0, trunc, period)?;
    let mut states = Vec::with_capacity(grid.len());
    let mut max_edge = 0.0f64;
    for &t in grid {
        let w = match &route {
            HowlandRoute::Factorized { p_superop, l_bar } => {
                lifted_semigroup_factorized(p_superop, l_bar, t, trunc)?
            }
            HowlandRoute::Dense { l_tilde } => l_tilde.scale(Complex64::new(t, 0.0)).exp()?,
        };
        let moved = w.apply(&embedded)?;
        max_edge = max_edge.max(moved.edge_mass(2));
        states.push(moved.evaluate(t));
    }
    let flagged = max_edge > 1e-6;
    Ok((Trajectory { times: grid.to_vec(), states, method: Method::Howland }, max_edge, flagged))
}

/// Fixed-step RK4 integration of `d rho / dt = L_t(rho)`; the independent
/// reference for the factorized and Fourier-space routes.
pub fn rk4_reference<F>(
    rho0: &CMat,
    grid: &[f64],
    l_at: &F,
    substeps: usize,
) -> Result<Trajectory>
where
    F: Fn(f64) -> Result<Superoperator>,
{
    if substeps < 16 {
        return Err(Error::InvalidInput("substeps per grid interval must be >= 16".into()));
    }
    if grid.is_empty() {
        return Err(Error::InvalidInput("empty time grid".into()));
    }
    let mut states = Vec::with_capacity(grid.len());
    let mut rho = rho0.clone();
    let mut t_now = 0.0f64;
    for &t in grid {
        if t < t_now - 1e-12 {
            return Err(Error::InvalidInput("time grid must be nondecreasing".into()));
        }
        if t > t_now {
            let h = (t - t_now) / substeps as f64;
            for k in 0..substeps {
                let tk = t_now + k as f64 * h;
                let k1 = l_at(tk)?.apply(&rho);
                let k2 = l_at(tk + 0.5 * h)?.apply(&(&rho + &k1.mapv(|z| z * (0.5 * h))));
                let k3 = l_at(tk + 0.5 * h)?.apply(&(&rho + &k2.mapv(|z| z * (0.5 * h))));
                let k4 = l_at(tk + h)?.apply(&(&rho + &k3.mapv(|z| z * h)));
                rho = &rho
                    + &(k1 + k2.mapv(|z| z * 2.0) + k3.mapv(|z| z * 2.0) + k4)
                        .mapv(|z| z * (h / 6.0));
            }
            t_now = t;
        }
        states.push(rho.clone());
    }
    Ok(Trajectory { times: grid.to_vec(), states, method: Method::Rk4 })
}

/// Apply the lifted semigroup to a generalized state (the factorized
/// realization).
pub fn w_tau_apply(
    s: &GeneralizedState,
    tau: f64,
    p_superop: &PeriodicMatrixFunction,
    l_bar: &Superoperator,
) -> Result<GeneralizedState> {
    let w = lifted_semigroup_factorized(p_superop, l_bar, tau, s.trunc())?;
    w.apply(s)
}

/// Per-pair record of the divisibility checks.
#[derive(Debug, Clone, serde::Serialize)]
pub struct PairCheck {
    pub t: f64,
    pub s: f64,
    pub choi_min_eig: f64,
    pub tp_residual: f64,
    /// Probe pairs on which the trace-norm contraction failed beyond slack.
    pub contraction_violations: usize,
    /// Largest observed `||V(rho - sigma)||_1 - ||rho - sigma||_1`.
    pub worst_contraction_excess: f64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct CpDivisibilityReport {
    pub seed: u64,
    pub n_probes: usize,
    pub pairs: Vec<PairCheck>,
    pub all_pass: bool,
}

/// Seeded Hermitian probe pairs: differences of pseudo-random density
/// matrices.
fn probe_pairs(dim: usize, n: usize, seed: u64) -> Vec<(CMat, CMat)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let random_density = |rng: &mut ChaCha8Rng| -> CMat {
        let g = ndarray::Array2::from_shape_fn((dim, dim), |_| {
            Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        });
        let gg = g.dot(&matrix::dagger(&g));
        let tr = matrix::trace(&gg);
        gg.mapv(|z| z / tr)
    };
    (0..n)
        .map(|_| (random_density(&mut rng), random_density(&mut rng)))
        .collect()
}

/// Run the Choi / trace-preservation / contraction battery on every
/// `(t, s)` pair using the supplied propagator constructor.
pub fn cp_divisibility_report<F>(
    prop: &F,
    dim: usize,
    pairs: &[(f64, f64)],
    n_probes: usize,
    seed: u64,
    choi_tol: f64,
    tp_tol: f64,
) -> Result<CpDivisibilityReport>
where
    F: Fn(f64, f64) -> Result<Superoperator>,
{
    let probes = probe_pairs(dim, n_probes, seed);
    let mut out = Vec::with_capacity(pairs.len());
    let mut all_pass = true;
    for &(t, s) in pairs {
        if s > t {
            return Err(Error::InvalidInput(format!("pair requires s <= t, got ({t}, {s})")));
        }
        let v = prop(t, s)?;
        let choi_min_eig = superop::choi_min_eigenvalue(&v)?;
        let tp_residual = v.trace_preservation_residual();
        let mut violations = 0usize;
        let mut worst = f64::MIN;
        for (rho, sigma) in &probes {
            let diff = rho - sigma;
            let before = matrix::trace_norm(&diff)?;
            let after = matrix::trace_norm(&v.apply(&diff))?;
            let excess = after - before;
            worst = worst.max(excess);
            if excess > CONTRACTION_SLACK {
                violations += 1;
            }
        }
        let pass = choi_min_eig >= -choi_tol && tp_residual <= tp_tol && violations == 0;
        all_pass &= pass;
        out.push(PairCheck {
            t,
            s,
            choi_min_eig,
            tp_residual,
            contraction_violations: violations,
            worst_contraction_excess: worst,
        });
    }
    Ok(CpDivisibilityReport { seed, n_probes, pairs: out, all_pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::BathSpectrum;
    use crate::davies::{
        davies_generator, decompose_jumps, full_lindbladian_at, lindbladian_function,
        p_superop_function,
    };
    use crate::floquet::unitary_floquet;
    use crate::lifting::generalized_lindbladian;
    use crate::matrix::{identity, max_abs, pauli_x, pauli_z};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn benchmark(
        g: f64,
    ) -> (UnitaryFloquet, DaviesGenerator, impl Fn(f64) -> CMat + Clone) {
        let (omega0, lambda, big_omega) = (1.0, 0.7, 3.0);
        let period = 2.0 * std::f64::consts::PI / big_omega;
        let h = move |t: f64| {
            pauli_z().mapv(|z| z * 0.5 * (omega0 + lambda * (big_omega * t).cos()))
        };
        let uf = unitary_floquet(&h, 2, period, 512, 8, 0, false).unwrap();
        let bd = decompose_jumps(&[pauli_x()], &uf, 8).unwrap();
        let bath = BathSpectrum::Ohmic { g, beta: 1.0, cutoff: 10.0 };
        let dg = davies_generator(&bd, &bath, &uf).unwrap();
        (uf, dg, h)
    }

    fn rho_plus() -> CMat {
        // |+><+|
        identity(2).mapv(|z| z * 0.5) + pauli_x().mapv(|z| z * 0.5)
    }

    #[test]
    fn map_at_zero_is_identity() {
        let (uf, dg, _) = benchmark(0.2);
        let lam = dynamical_map(0.0, &uf, &dg).unwrap();
        assert!(max_abs(&(lam.map.matrix() - &identity(4))) < 1e-7);
    }

    #[test]
    fn zero_bath_is_unitary_conjugation() {
        let (uf, dg, _) = benchmark(0.0);
        let t = 0.8;
        let lam = dynamical_map(t, &uf, &dg).unwrap();
        let u = uf.u_at(t).unwrap();
        let expect = superop::conjugation(&u).unwrap();
        assert!(max_abs(&(lam.map.matrix() - expect.matrix())) < 1e-7);
        // spectrum of rho preserved under closed dynamics
        let rho = rho_plus();
        let moved = lam.map.apply(&rho);
        let e0 = matrix::eigh(&rho).unwrap().0;
        let e1 = matrix::eigh(&moved).unwrap().0;
        for (a, b) in e0.iter().zip(e1.iter()) {
            assert!((a - b).abs() < 1e-7);
        }
    }

    #[test]
    fn factorized_map_matches_rk4_at_two_periods() {
        let (uf, dg, h) = benchmark(0.2);
        let t_final = 2.0 * uf.period();
        let grid = vec![0.0, t_final];
        let l_at = |t: f64| full_lindbladian_at(t, &dg, &uf, &h);
        let rho0 = rho_plus();
        let fact = evolve_factorized(&rho0, &grid, &uf, &dg).unwrap();
        let rk = rk4_reference(&rho0, &grid, &l_at, 1024).unwrap();
        let gap = fact.trace_norm_gap(&rk).unwrap();
        assert!(gap < 1e-6, "gap {gap}");
    }

    #[test]
    fn propagator_limits_and_chapman_kolmogorov() {
        let (uf, dg, _) = benchmark(0.2);
        let period = uf.period();
        let v_tt = propagator(0.7, 0.7, &uf, &dg).unwrap();
        assert!(max_abs(&(v_tt.matrix() - &identity(4))) < 1e-7);
        let v_t0 = propagator(1.3, 0.0, &uf, &dg).unwrap();
        let lam = dynamical_map(1.3, &uf, &dg).unwrap();
        assert!(max_abs(&(v_t0.matrix() - lam.map.matrix())) < 1e-7);
        // V_{t,s} V_{s,r} = V_{t,r}
        let (t, s, r) = (1.7 * period, 0.9 * period, 0.4 * period);
        let a = propagator(t, s, &uf, &dg).unwrap();
        let b = propagator(s, r, &uf, &dg).unwrap();
        let direct = propagator(t, r, &uf, &dg).unwrap();
        assert!(max_abs(&(a.compose(&b).matrix() - direct.matrix())) < 1e-9);
        // CP at an incommensurate pair
        let v = propagator(1.7 * period, 0.4 * period, &uf, &dg).unwrap();
        assert!(superop::choi_min_eigenvalue(&v).unwrap() > -1e-9);
    }

    #[test]
    fn howland_routes_match_factorized() {
        let (uf, dg, h) = benchmark(0.2);
        let period = uf.period();
        let p_pmf = p_superop_function(&uf).unwrap();
        let l_pmf = lindbladian_function(&dg, &uf, &h, 16).unwrap();
        let trunc = 10usize;
        let l_tilde = generalized_lindbladian(&l_pmf, trunc).unwrap();
        let grid: Vec<f64> = (0..=20).map(|k| k as f64 * period / 10.0).collect();
        let rho0 = rho_plus();

        let fact = evolve_factorized(&rho0, &grid, &uf, &dg).unwrap();
        let (howl_f, edge, flagged) = evolve_howland(
            &rho0,
            &grid,
            HowlandRoute::Factorized { p_superop: &p_pmf, l_bar: &dg.l_bar },
            trunc,
            period,
        )
        .unwrap();
        assert!(!flagged, "edge mass {edge}");
        let gap = fact.trace_norm_gap(&howl_f).unwrap();
        assert!(gap < 1e-5, "factorized-route gap {gap}");

        let (howl_d, _, _) = evolve_howland(
            &rho0,
            &grid,
            HowlandRoute::Dense { l_tilde: &l_tilde },
            trunc,
            period,
        )
        .unwrap();
        let gap_d = fact.trace_norm_gap(&howl_d).unwrap();
        assert!(gap_d < 1e-5, "dense-route gap {gap_d}");
    }

    #[test]
    fn howland_constant_generator_reduces_exactly() {
        // constant L: the lifted evolution is block-diagonal and the
        // evaluation returns e^{t Lbar}(rho0) for any truncation
        let (uf, dg, _) = benchmark(0.2);
        let period = uf.period();
        let id_pmf = PeriodicMatrixFunction::constant(period, identity(4)).unwrap();
        let rho0 = rho_plus();
        let grid = vec![0.0, 0.4, 1.1];
        let (traj, _, _) = evolve_howland(
            &rho0,
            &grid,
            HowlandRoute::Factorized { p_superop: &id_pmf, l_bar: &dg.l_bar },
            4,
            period,
        )
        .unwrap();
        for (k, &t) in grid.iter().enumerate() {
            let direct = dg.l_bar.scale(c(t, 0.0)).exp().unwrap().apply(&rho0);
            assert!(max_abs(&(&traj.states[k] - &direct)) < 1e-12);
        }
    }

    #[test]
    fn rk4_pure_hamiltonian_preserves_purity() {
        let h0 = pauli_z().mapv(|z| z * 0.5);
        let gen = superop::hamiltonian_generator(&h0).unwrap();
        let l_at = |_t: f64| -> Result<Superoperator> { Ok(gen.clone()) };
        let rho0 = rho_plus();
        let grid: Vec<f64> = (0..=10).map(|k| k as f64 * 0.3).collect();
        let traj = rk4_reference(&rho0, &grid, &l_at, 64).unwrap();
        for state in &traj.states {
            let purity = matrix::trace(&state.dot(state)).re;
            assert!((purity - 1.0).abs() < 1e-8, "purity {purity}");
        }
        assert!(traj.trace_residual() < 1e-10);
    }

    #[test]
    fn rk4_zero_generator_constant_trajectory() {
        let l_at = |_t: f64| -> Result<Superoperator> { Ok(Superoperator::zero(2)) };
        let rho0 = rho_plus();
        let grid = vec![0.0, 1.0, 2.5];
        let traj = rk4_reference(&rho0, &grid, &l_at, 16).unwrap();
        for s in &traj.states {
            assert!(max_abs(&(s - &rho0)) < 1e-15);
        }
    }

    #[test]
    fn w_tau_identity_and_solution_formula() {
        let (uf, dg, _) = benchmark(0.2);
        let period = uf.period();
        let p_pmf = p_superop_function(&uf).unwrap();
        let trunc = 10usize;
        let rho0 = rho_plus();
        let s0 = GeneralizedState::embed(&rho0, 0, trunc, period).unwrap();

        let w0 = w_tau_apply(&s0, 0.0, &p_pmf, &dg.l_bar).unwrap();
        assert!(w0.sub(&s0).norm() < 1e-7);

        // solution formula: evaluating W_tau(rho0 (x) e_0) at t = tau gives
        // Lambda_tau(rho0)
        let tau = 0.6 * period;
        let moved = w_tau_apply(&s0, tau, &p_pmf, &dg.l_bar).unwrap();
        let lam = dynamical_map(tau, &uf, &dg).unwrap().map.apply(&rho0);
        assert!(max_abs(&(&moved.evaluate(tau) - &lam)) < 1e-6);
    }

    #[test]
    fn w_tau_semigroup_law() {
        let (uf, dg, _) = benchmark(0.2);
        let period = uf.period();
        let p_pmf = p_superop_function(&uf).unwrap();
        let trunc = 10usize;
        let mut s = GeneralizedState::zero(trunc, 2, period);
        *s.block_mut(0) = rho_plus();
        *s.block_mut(1) = pauli_z().mapv(|z| z * c(0.05, 0.02));
        let t1 = 0.3 * period;
        let t2 = 0.5 * period;
        let seq = w_tau_apply(&w_tau_apply(&s, t2, &p_pmf, &dg.l_bar).unwrap(), t1, &p_pmf, &dg.l_bar)
            .unwrap();
        let direct = w_tau_apply(&s, t1 + t2, &p_pmf, &dg.l_bar).unwrap();
        // compare on the interior to keep the truncation edge out
        let mut worst = 0.0f64;
        for n in -5..=5i64 {
            worst = worst.max(max_abs(&(seq.block(n) - direct.block(n))));
        }
        assert!(worst < 1e-8, "semigroup gap {worst}");
    }

    #[test]
    fn lifted_trace_preserved_by_w_tau() {
        let (uf, dg, _) = benchmark(0.2);
        let p_pmf = p_superop_function(&uf).unwrap();
        let rho0 = rho_plus();
        let s0 = GeneralizedState::embed(&rho0, 0, 10, uf.period()).unwrap();
        for tau in [0.1, 0.7, 1.9] {
            let moved = w_tau_apply(&s0, tau, &p_pmf, &dg.l_bar).unwrap();
            assert!(
                (moved.lifted_trace() - s0.lifted_trace()).norm() < 1e-10,
                "tau = {tau}"
            );
        }
    }

    #[test]
    fn trajectory_positivity_and_contraction() {
        let (uf, dg, _) = benchmark(0.3);
        let period = uf.period();
        let grid: Vec<f64> = (0..=40).map(|k| k as f64 * period / 8.0).collect();
        let rho0 = rho_plus();
        let traj = evolve_factorized(&rho0, &grid, &uf, &dg).unwrap();
        assert!(traj.trace_residual() < 1e-10);
        assert!(traj.min_eigenvalue().unwrap() > -1e-9);

        // contraction in t on a fixed probe pair
        let sigma = matrix::DensityMatrix::basis_state(2, 1).matrix().clone();
        let mut prev = f64::MAX;
        for &t in &grid {
            let lam = dynamical_map(t, &uf, &dg).unwrap();
            let dist = matrix::trace_norm(&lam.map.apply(&(&rho0 - &sigma))).unwrap();
            assert!(dist <= prev + CONTRACTION_SLACK, "t = {t}: {dist} > {prev}");
            prev = dist;
        }
    }

    #[test]
    fn period_shift_propagator_spectrum_is_phase_independent() {
        let (uf, dg, _) = benchmark(0.2);
        let period = uf.period();
        let reference = dg.l_bar.scale(c(period, 0.0)).exp().unwrap();
        let mut ref_eigs = matrix::eig_general(reference.matrix()).unwrap().values;
        ref_eigs.sort_by(|a, b| {
            b.re.partial_cmp(&a.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap())
        });
        for phase in [0.0, 0.25, 0.5, 0.75] {
            let t = phase * period;
            let v = propagator(t + period, t, &uf, &dg).unwrap();
            let mut eigs = matrix::eig_general(v.matrix()).unwrap().values;
            eigs.sort_by(|a, b| {
                b.re.partial_cmp(&a.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap())
            });
            for (a, b) in eigs.iter().zip(ref_eigs.iter()) {
                assert!((a - b).norm() < 1e-8, "phase {phase}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn divisibility_report_identity_pairs() {
        let (uf, dg, _) = benchmark(0.2);
        let prop = |t: f64, s: f64| propagator(t, s, &uf, &dg);
        let pairs = vec![(0.5, 0.5), (1.0, 1.0)];
        let report = cp_divisibility_report(&prop, 2, &pairs, 20, 7, 1e-9, 1e-7).unwrap();
        assert!(report.all_pass);
        for p in &report.pairs {
            assert!(p.choi_min_eig > -1e-9);
        }
    }

    #[test]
    fn divisibility_report_benchmark_grid() {
        let (uf, dg, _) = benchmark(0.3);
        let period = uf.period();
        let prop = |t: f64, s: f64| propagator(t, s, &uf, &dg);
        let mut pairs = Vec::new();
        for i in 0..4 {
            for j in 0..=i {
                pairs.push((i as f64 * period / 2.0, j as f64 * period / 2.0));
            }
        }
        let report = cp_divisibility_report(&prop, 2, &pairs, 20, 42, 1e-9, 1e-10).unwrap();
        assert!(report.all_pass, "{:#?}", report.pairs);
    }

    #[test]
    fn divisibility_detector_catches_sign_flip() {
        // a generator with the dissipator sign flipped is not CP-divisible
        let (uf, dg, _) = benchmark(0.3);
        let bad = superop::hamiltonian_generator(&uf.h_bar)
            .unwrap()
            .add(&dg.k.scale(c(-1.0, 0.0)));
        let prop = |t: f64, s: f64| -> Result<Superoperator> {
            bad.scale(c(t - s, 0.0)).exp()
        };
        let pairs = vec![(1.0, 0.0), (2.0, 0.5)];
        let report = cp_divisibility_report(&prop, 2, &pairs, 20, 11, 1e-9, 1e-10).unwrap();
        assert!(!report.all_pass);
        assert!(report.pairs.iter().any(|p| p.choi_min_eig < -1e-6));
    }

    #[test]
    fn rejects_bad_arguments() {
        let (uf, dg, _) = benchmark(0.2);
        assert!(propagator(0.5, 0.9, &uf, &dg).is_err());
        assert!(dynamical_map(-1.0, &uf, &dg).is_err());
        let l_at = |_t: f64| -> Result<Superoperator> { Ok(Superoperator::zero(2)) };
        assert!(rk4_reference(&rho_plus(), &[0.0, 1.0], &l_at, 8).is_err());
    }
}
