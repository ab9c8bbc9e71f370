//! Experiment orchestration: build the generator, propagate by all routes,
//! run the structural check battery and emit artifacts.


use floquet_lindblad::davies::{
    self, bohr_quasifrequencies, davies_generator, decompose_jumps, verify_standard_form,
    DaviesGenerator,
};
use floquet_lindblad::evolution::{
    cp_divisibility_report, evolve_factorized, evolve_howland,
    propagator, rk4_reference, w_tau_apply, CpDivisibilityReport, HowlandRoute, Method,
    Trajectory, CONTRACTION_SLACK,
};
use floquet_lindblad::floquet::{
    floquet_decompose, propagate_fundamental, unitary_floquet, UnitaryFloquet,
};
use floquet_lindblad::json::fmt_f64;
use floquet_lindblad::lifting::{
    contraction_counterexample, generalized_lindbladian, lifted_semigroup_factorized,
    lm_component_identity_check, number_matrix, q_antisymmetry_check, shift_matrix,
    spectral_ladder, truncation_diagnostics, GeneralizedState, LiftedOperator, SpectralLadder,
    TruncationDiagnostics,
};
use floquet_lindblad::matrix::{self, CMat};
use floquet_lindblad::periodic::PeriodicMatrixFunction;
use floquet_lindblad::report::CheckReport;
use floquet_lindblad::superop::{self, Superoperator};
use floquet_lindblad::{Error, Result};
use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{GeneratorClass, SimulationConfig};

pub struct RunArtifacts {
    pub report: CheckReport,
    pub trajectory_csv: String,
    pub ladder_csv: String,
    pub diagnostics_json: String,
}

fn ctx(module: &str, e: Error) -> Error {
    Error::InvalidInput(format!("{module}: {e}"))
}

/// Everything the check battery needs, assembled once per run.
struct Engine {
    dim: usize,
    period: f64,
    /// Constant factor of the factorized map (`Lbar` or the Floquet
    /// generator of the master-equation ODE).
    l_bar: Superoperator,
    /// Periodic superoperator factor `P_t` as Fourier data with grid.
    p_superop: PeriodicMatrixFunction,
    /// The time-local generator as Fourier data with grid.
    l_pmf: PeriodicMatrixFunction,
    l_tilde: LiftedOperator,
    /// Fast-driving structure, when applicable.
    uf: Option<UnitaryFloquet>,
    dg: Option<DaviesGenerator>,
    degeneracy_warning: Option<String>,
    bohr_frequencies: Vec<f64>,
    skqw_commutation: f64,
    skqw_adjoint: f64,
    skqw_reconstruction: f64,
    skqw_truncation_bound: f64,
}

impl Engine {
    fn l_at(&self, cfg: &SimulationConfig, t: f64) -> Result<Superoperator> {
        match (&self.uf, &self.dg) {
            (Some(uf), Some(dg)) => {
                let h = |tt: f64| cfg.hamiltonian.eval(tt);
                davies::full_lindbladian_at(t, dg, uf, &h)
            }
            _ => {
                let gen = adiabatic_at(cfg, t)?;
                Ok(gen)
            }
        }
    }

    /// Factorized map `Lambda_t = P_t e^{t l_bar}`.
    fn lambda(&self, t: f64) -> Result<Superoperator> {
        let p_t = Superoperator::from_matrix(self.dim, self.p_superop.eval(t))?;
        let e = self.l_bar.scale(Complex64::new(t, 0.0)).exp()?;
        Ok(p_t.compose(&e))
    }

    /// Propagator `V_{t,s} = P_t e^{(t-s) l_bar} P_s^{-1}`; uses the exact
    /// unitary inverse (trace dual) in the fast-driving class and a linear
    /// solve otherwise.
    fn v(&self, t: f64, s: f64, uf: Option<&UnitaryFloquet>, dg: Option<&DaviesGenerator>) -> Result<Superoperator> {
        if let (Some(uf), Some(dg)) = (uf, dg) {
            return propagator(t, s, uf, dg);
        }
        let p_t = Superoperator::from_matrix(self.dim, self.p_superop.eval(t))?;
        let p_s_inv =
            Superoperator::from_matrix(self.dim, matrix::inverse(&self.p_superop.eval(s))?)?;
        let e = self.l_bar.scale(Complex64::new(t - s, 0.0)).exp()?;
        Ok(p_t.compose(&e).compose(&p_s_inv))
    }
}

fn adiabatic_at(cfg: &SimulationConfig, t: f64) -> Result<Superoperator> {
    let (gen, _) =
        davies::adiabatic_generator_at(&cfg.hamiltonian.eval(t), &cfg.couplings, &cfg.bath)?;
    if cfg.invert_dissipator {
        let ham = superop::hamiltonian_generator(&cfg.hamiltonian.eval(t))?;
        let dissipative = gen.sub(&ham);
        return Ok(ham.sub(&dissipative));
    }
    Ok(gen)
}

fn build_engine(cfg: &SimulationConfig) -> Result<Engine> {
    let d = cfg.dimension;
    let period = cfg.period;
    let h = |t: f64| cfg.hamiltonian.eval(t);
    let h_bw = cfg.hamiltonian.bandwidth();
    let p_bandwidth = (4 * h_bw.max(1) + 4).min(cfg.steps_per_period / 4);

    match cfg.generator {
        GeneratorClass::FastWcl => {
            let uf = unitary_floquet(&h, d, period, cfg.steps_per_period, p_bandwidth, 0, false)
                .map_err(|e| ctx("floquet-decomposition", e))?;
            let q = cfg.harmonic_cutoff.min(p_bandwidth as i64);
            let bd = decompose_jumps(&cfg.couplings, &uf, q)
                .map_err(|e| ctx("wcl-generator", e))?;
            let mut dg = davies_generator(&bd, &cfg.bath, &uf)
                .map_err(|e| ctx("wcl-generator", e))?;
            if cfg.invert_dissipator {
                dg.k = dg.k.scale(Complex64::new(-1.0, 0.0));
                dg.l_bar = superop::hamiltonian_generator(&dg.h_bar)?.add(&dg.k);
            }
            let p_superop =
                davies::p_superop_function(&uf).map_err(|e| ctx("wcl-generator", e))?;
            let l_pmf =
                davies::lindbladian_function(&dg, &uf, &h, (2 * p_bandwidth).min(cfg.steps_per_period / 4))
                    .map_err(|e| ctx("wcl-generator", e))?;
            let l_tilde = generalized_lindbladian(&l_pmf, cfg.truncation)
                .map_err(|e| ctx("howland-lifting", e))?;
            let skqw_commutation = bd.commutation_residual(&uf.h_bar)?;
            let skqw_adjoint = bd.adjoint_residual();
            let skqw_reconstruction = bd.reconstruction_residual(&uf, &cfg.couplings, 32)?;
            Ok(Engine {
                dim: d,
                period,
                l_bar: dg.l_bar.clone(),
                p_superop,
                l_pmf,
                l_tilde,
                bohr_frequencies: bd.quasifrequencies.clone(),
                degeneracy_warning: bd.degeneracy_warning.clone(),
                skqw_truncation_bound: (bd.truncation_bound * 10.0).max(1e-8),
                skqw_commutation,
                skqw_adjoint,
                skqw_reconstruction,
                uf: Some(uf),
                dg: Some(dg),
            })
        }
        GeneratorClass::Adiabatic => {
            let l_sampler = |t: f64| -> CMat {
                adiabatic_at(cfg, t)
                    .map(|s| s.matrix().clone())
                    .unwrap_or_else(|_| matrix::zeros(d * d))
            };
            let dec = floquet_decompose(
                &l_sampler,
                d * d,
                period,
                cfg.steps_per_period,
                p_bandwidth,
                false,
            )
            .map_err(|e| ctx("floquet-decomposition", e))?;
            let l_bar = Superoperator::from_matrix(d, dec.generator.clone())?;
            let l_pmf = PeriodicMatrixFunction::from_sampler(
                l_sampler,
                period,
                (2 * p_bandwidth).min(cfg.steps_per_period / 4),
                cfg.steps_per_period,
            )?;
            let l_tilde = generalized_lindbladian(&l_pmf, cfg.truncation)
                .map_err(|e| ctx("howland-lifting", e))?;
            let freqs = bohr_quasifrequencies(&cfg.hamiltonian.eval(0.0))?;
            let (_, warn) = davies::adiabatic_generator_at(
                &cfg.hamiltonian.eval(0.0),
                &cfg.couplings,
                &cfg.bath,
            )?;
            Ok(Engine {
                dim: d,
                period,
                l_bar,
                p_superop: dec.periodic_part,
                l_pmf,
                l_tilde,
                bohr_frequencies: freqs,
                degeneracy_warning: warn,
                skqw_truncation_bound: 1e-8,
                skqw_commutation: 0.0,
                skqw_adjoint: 0.0,
                skqw_reconstruction: 0.0,
                uf: None,
                dg: None,
            })
        }
    }
}

// ---------------------------------------------------------------------------
// Check battery
// ---------------------------------------------------------------------------

fn seeded_matrix(rng: &mut ChaCha8Rng, d: usize) -> CMat {
    Array2::from_shape_fn((d, d), |_| {
        Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
    })
}

fn add_matrix_core_checks(report: &mut CheckReport, seed: u64, psd_tol: f64) -> Result<()> {
    // 1000-sample fuzz of the two state-space norm inequalities.
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6e6f726d);
    let mut violations = 0usize;
    for k in 0..1000 {
        let d = 2 + (k % 3);
        let a = seeded_matrix(&mut rng, d);
        let b = seeded_matrix(&mut rng, d);
        let sv = matrix::singular_values(&a)?;
        if sv[0] > sv.iter().sum::<f64>() {
            violations += 1;
        }
        let lhs = matrix::trace_norm(&a.dot(&b))?;
        let rhs = matrix::operator_norm(&a)? * matrix::trace_norm(&b)?;
        if lhs > rhs {
            violations += 1;
        }
    }
    report.add(
        "norm_inequalities",
        violations as f64,
        0.0,
        "operator norm <= trace norm and submultiplicativity, 1000-sample fuzz",
    );

    let mut worst = 0.0f64;
    for s in 0..5u64 {
        let mut r2 = ChaCha8Rng::seed_from_u64(seed ^ s);
        let m = seeded_matrix(&mut r2, 3).mapv(|z| z * 0.8);
        let back = matrix::matrix_log_principal(&matrix::matrix_exp(&m)?, false)?;
        worst = worst.max(matrix::max_abs(&(&back - &m)));
    }
    report.add(
        "exp_log_round_trip",
        worst,
        1e-9,
        "principal log inverts the exponential inside the principal strip",
    );

    let mut min_eig = f64::MAX;
    let mut r3 = ChaCha8Rng::seed_from_u64(seed ^ 0x63686f69);
    for _ in 0..10 {
        let v = seeded_matrix(&mut r3, 2);
        let s = superop::conjugation(&v)?;
        min_eig = min_eig.min(superop::choi_min_eigenvalue(&s)?);
    }
    report.add_lower_bound(
        "choi_sandwich_psd",
        min_eig,
        -psd_tol,
        "Choi matrix of v . v^H conjugation is positive semidefinite",
    );

    let mut r4 = ChaCha8Rng::seed_from_u64(seed ^ 0x74726163);
    let a = seeded_matrix(&mut r4, 3);
    let b = seeded_matrix(&mut r4, 3);
    let s = superop::sandwich(&seeded_matrix(&mut r4, 3), &seeded_matrix(&mut r4, 3))?;
    let direct = matrix::trace(&a.dot(&s.apply(&b)));
    let via_dual = matrix::trace(&s.trace_dual().apply(&a).dot(&b));
    report.add(
        "trace_pairing_identity",
        (direct - via_dual).norm(),
        1e-13,
        "tr(a S(b)) computed directly and through the vectorized dual agree",
    );
    Ok(())
}

fn add_floquet_checks(report: &mut CheckReport, cfg: &SimulationConfig) -> Result<()> {
    let d = cfg.dimension;
    let period = cfg.period;
    let a = |t: f64| cfg.hamiltonian.eval(t).mapv(|z| z * Complex64::new(0.0, -1.0));
    let steps = cfg.steps_per_period;
    let dec = floquet_decompose(&a, d, period, steps, cfg.hamiltonian.bandwidth().max(2) * 4, false)
        .map_err(|e| ctx("floquet-decomposition", e))?;

    // Richardson estimate of the RK4 global error from a half-resolution
    // integration of the monodromy.
    let coarse = propagate_fundamental(&a, d, period, period, steps / 2)?;
    let rk4_bound = matrix::max_abs(&(&coarse - &dec.monodromy)).max(1e-12);

    let mut worst = 0.0f64;
    for k in 0..64 {
        let t = k as f64 * 2.0 * period / 64.0;
        let phi = propagate_fundamental(&a, d, period, t, steps)?;
        let etb = matrix::matrix_exp(&dec.generator.mapv(|z| z * t))?;
        let recon = dec.periodic_part.eval(t).dot(&etb);
        worst = worst.max(matrix::max_abs(&(&recon - &phi)));
    }
    report.add(
        "floquet_factorization",
        worst,
        10.0 * rk4_bound,
        "Phi(t) = P(t) e^{tB} reproduces the integrated fundamental solution",
    );

    let mono_eigs = matrix::eig_general(&dec.monodromy)?.values;
    let mut worst_mult = 0.0f64;
    for m in &dec.multipliers {
        let best = mono_eigs.iter().map(|e| (e - m).norm()).fold(f64::MAX, f64::min);
        worst_mult = worst_mult.max(best);
    }
    report.add(
        "multiplier_consistency",
        worst_mult,
        1e-8,
        "characteristic multipliers equal the monodromy spectrum",
    );
    Ok(())
}

fn add_unitary_checks(report: &mut CheckReport, uf: &UnitaryFloquet) -> Result<()> {
    let mut worst_u = 0.0f64;
    for k in 0..64 {
        let t = k as f64 * uf.period() / 64.0;
        let p = uf.p_at(t);
        worst_u = worst_u
            .max(matrix::max_abs(&(&matrix::dagger(&p).dot(&p) - &matrix::identity(uf.dim()))));
    }
    report.add("p_unitarity", worst_u, 1e-8, "periodic part p_t stays unitary on the grid");
    report.add(
        "hbar_hermiticity",
        matrix::hermiticity_residual(&uf.h_bar),
        1e-10,
        "averaged Hamiltonian is Hermitian",
    );
    Ok(())
}

fn add_quadrature_checks(report: &mut CheckReport, cfg: &SimulationConfig) -> Result<()> {
    // band-limited probe built from the drive's own harmonics
    let probe = |t: f64| cfg.hamiltonian.eval(t);
    let bw = cfg.hamiltonian.bandwidth();
    let pmf = PeriodicMatrixFunction::from_sampler(probe, cfg.period, bw, (4 * bw).max(16))?;
    let mut worst = 0.0f64;
    for n in -(bw as i64)..=(bw as i64) {
        worst = worst.max(matrix::max_abs(&(&pmf.coeff(n) - &cfg.hamiltonian.coeff(n))));
    }
    report.add(
        "quadrature_exactness",
        worst,
        1e-12,
        "uniform quadrature recovers band-limited Fourier coefficients exactly",
    );
    Ok(())
}

fn add_wcl_checks(
    report: &mut CheckReport,
    cfg: &SimulationConfig,
    eng: &Engine,
) -> Result<()> {
    if let (Some(_uf), Some(dg)) = (&eng.uf, &eng.dg) {
        report.add(
            "davies_commutation",
            dg.commutation_residual()?,
            1e-9,
            "dissipative part commutes with the averaged Hamiltonian generator",
        );
        report.add(
            "davies_trace_annihilation",
            dg.k.trace_annihilation_residual(),
            1e-11,
            "dissipative generator annihilates trace",
        );
        let mut worst_cp = f64::MAX;
        for tau in [0.1 * eng.period, 0.5 * eng.period, 2.0 * eng.period] {
            let e = dg.k.scale(Complex64::new(tau, 0.0)).exp()?;
            worst_cp = worst_cp.min(superop::choi_min_eigenvalue(&e)?);
        }
        report.add_lower_bound(
            "davies_semigroup_cp",
            worst_cp,
            -1e-10,
            "semigroup of the dissipative part is completely positive",
        );
        report.add(
            "bohr_commutation",
            eng.skqw_commutation,
            1e-9,
            "jump components shift the averaged Hamiltonian by their Bohr frequency",
        );
        report.add(
            "bohr_adjoint_pairing",
            eng.skqw_adjoint,
            1e-10,
            "Hermitian adjoint maps component (q, w) to (-q, -w)",
        );
        report.add(
            "bohr_reconstruction",
            eng.skqw_reconstruction,
            eng.skqw_truncation_bound,
            "harmonic components resum to the interaction-picture coupling",
        );
    }

    // time-local generator structure, sampled over one period
    let mut worst_tr = 0.0f64;
    let mut worst_herm = 0.0f64;
    let mut min_kossakowski = f64::MAX;
    let mut all_gkls = true;
    for k in 0..16 {
        let t = k as f64 * eng.period / 16.0;
        let lt = eng.l_at(cfg, t)?;
        worst_tr = worst_tr.max(lt.trace_annihilation_residual());
        worst_herm = worst_herm.max(lt.hermiticity_preservation_residual());
        let sf = verify_standard_form(&lt, cfg.tolerances.psd)?;
        min_kossakowski = min_kossakowski.min(sf.kossakowski_min_eig);
        all_gkls &= sf.is_gkls;
    }
    report.add(
        "lindbladian_trace_annihilation",
        worst_tr,
        1e-11,
        "time-local generator annihilates trace at sampled times",
    );
    report.add(
        "hermiticity_preservation",
        worst_herm,
        1e-12,
        "time-local generator preserves Hermiticity at sampled times",
    );
    report.add_lower_bound(
        "gkls_form_sampled",
        min_kossakowski,
        -cfg.tolerances.psd,
        "Kossakowski matrix stays positive semidefinite at sampled times",
    );
    report.add_bool(
        "gkls_flag_sampled",
        all_gkls,
        "standard-form verdict holds at all sampled times",
    );

    if eng.uf.is_none() {
        // instantaneous-Bohr structure: Hamiltonian and dissipative parts
        // commute at each sampled time
        let mut worst_comm = 0.0f64;
        for k in 0..16 {
            let t = k as f64 * eng.period / 16.0;
            let gen = eng.l_at(cfg, t)?;
            let ham = superop::hamiltonian_generator(&cfg.hamiltonian.eval(t))?;
            let dis = gen.sub(&ham);
            let comm = ham.compose(&dis).sub(&dis.compose(&ham));
            worst_comm = worst_comm.max(comm.norm()?);
        }
        report.add(
            "adiabatic_commutation",
            worst_comm,
            1e-9,
            "Hamiltonian part commutes with the dissipative part at each time",
        );
    }
    Ok(())
}

fn add_lifting_checks(
    report: &mut CheckReport,
    cfg: &SimulationConfig,
    eng: &Engine,
    ladder: &SpectralLadder,
) -> Result<()> {
    let trunc = cfg.truncation;
    let margin = cfg.interior_margin;

    let mut worst_res = 0.0f64;
    for e in &ladder.entries {
        worst_res = worst_res.max(e.residual);
    }
    report.add(
        "ladder_residuals",
        worst_res,
        1e-6,
        "lifted eigenvectors satisfy the interior eigenequation",
    );

    let eigs = matrix::eig_general(eng.l_tilde.matrix())?.values;
    let mut worst_match = 0.0f64;
    for e in &ladder.entries {
        let best = eigs.iter().map(|x| (x - e.value).norm()).fold(f64::MAX, f64::min);
        worst_match = worst_match.max(best / e.value.norm().max(1.0));
    }
    report.add(
        "ladder_eigenvalue_match",
        worst_match,
        1e-6,
        "truncated block operator spectrum reproduces the interior ladder",
    );

    let mut worst_fact = 0.0f64;
    for tau in [0.1 * eng.period, 0.5 * eng.period, eng.period] {
        let dense = eng.l_tilde.scale(Complex64::new(tau, 0.0)).exp()?;
        let fact = lifted_semigroup_factorized(&eng.p_superop, &eng.l_bar, tau, trunc);
        match fact {
            Ok(f) => {
                worst_fact = worst_fact.max(dense.sub(&f).interior_norm(margin)?);
            }
            Err(e) => return Err(ctx("howland-lifting", e)),
        }
    }
    report.add(
        "factorization_identity",
        worst_fact,
        1e-6,
        "exp(tau L~) equals the factorized semigroup on interior blocks",
    );

    // lifted trace preservation on an interior-supported state
    let mut s = GeneralizedState::zero(trunc, eng.dim, eng.period);
    *s.block_mut(0) = matrix::identity(eng.dim).mapv(|z| z / eng.dim as f64);
    if trunc >= 2 {
        *s.block_mut(1) = matrix::probe_matrix(eng.dim, 310);
        *s.block_mut(-2) = matrix::probe_matrix(eng.dim, 311);
    }
    let mut worst_tp = 0.0f64;
    for tau in [0.2 * eng.period, 0.9 * eng.period] {
        let moved = w_tau_apply(&s, tau, &eng.p_superop, &eng.l_bar)?;
        worst_tp = worst_tp.max((moved.lifted_trace() - s.lifted_trace()).norm());
    }
    report.add(
        "lifted_trace_preservation",
        worst_tp,
        1e-10,
        "lifted semigroup preserves the lifted trace",
    );

    // evaluation homomorphism for the lifted P
    let p_lift = floquet_lindblad::lifting::lift_function(&eng.p_superop, trunc)?;
    let mut probe = GeneralizedState::zero(trunc, eng.dim, eng.period);
    *probe.block_mut(0) = matrix::probe_matrix(eng.dim, 312);
    *probe.block_mut(1) = matrix::probe_matrix(eng.dim, 313);
    let moved = p_lift.apply(&probe)?;
    let mut worst_hom = 0.0f64;
    for k in 0..32 {
        let t = k as f64 * eng.period / 32.0;
        let direct = Superoperator::from_matrix(eng.dim, eng.p_superop.eval(t))?
            .apply(&probe.evaluate(t));
        worst_hom = worst_hom.max(matrix::max_abs(&(&moved.evaluate(t) - &direct)));
    }
    report.add(
        "evaluation_homomorphism",
        worst_hom,
        1e-6,
        "applying the lifting then evaluating equals pointwise application",
    );

    // number/shift commutation, exact on interior indices
    let fz = number_matrix(trunc, eng.dim, eng.period);
    let f2 = shift_matrix(2.min(trunc as i64), trunc, eng.dim, eng.period)?;
    let comm = fz.compose(&f2).sub(&f2.compose(&fz));
    let expect = f2.scale(Complex64::new(2.min(trunc as i64) as f64, 0.0));
    let mut worst_comm = 0.0f64;
    let cut = trunc as i64 - 2.min(trunc as i64);
    for m in -cut..=cut - 2 {
        worst_comm =
            worst_comm.max(matrix::max_abs(&(&comm.block(m + 2, m) - &expect.block(m + 2, m))));
    }
    report.add(
        "number_shift_commutator",
        worst_comm,
        1e-14,
        "[F_z, F_n] = n F_n on interior indices",
    );

    let mut worst_lm = 0.0f64;
    for m in -4..=4i64 {
        worst_lm = worst_lm
            .max(lm_component_identity_check(m, &eng.l_pmf, &eng.p_superop, &eng.l_bar)?);
    }
    report.add(
        "lm_component_identity",
        worst_lm,
        1e-8,
        "Fourier components of the generator factor through P and Lbar",
    );

    report.add(
        "q_antisymmetry",
        q_antisymmetry_check(&eng.p_superop, trunc.min(8), margin)?,
        1e-7,
        "lifted derivative of P anticommutes with the lifting of P on interior blocks",
    );

    // scalar multiplication-operator counterexample
    let ce = contraction_counterexample(eng.period)?;
    report.add(
        "counterexample_l2_norm",
        (ce.l2_norm - 1.0).abs(),
        1e-10,
        "quadratic profile has unit Bochner norm",
    );
    report.add(
        "counterexample_max_value",
        (ce.max_value - 30.0f64.sqrt() / 4.0).abs(),
        1e-10,
        "profile peaks at sqrt(30)/4 above 1: pointwise maps are not contractions",
    );
    report.add(
        "counterexample_isometry",
        (ce.constant_state_ratio - 1.0).abs(),
        1e-10,
        "multiplication operator acts isometrically on constant states",
    );
    report.add_bool(
        "counterexample_pointwise_excess",
        ce.pointwise_exceeds_one,
        "pointwise factor exceeds 1 on a subinterval",
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn add_evolution_checks(
    report: &mut CheckReport,
    cfg: &SimulationConfig,
    eng: &Engine,
    fact: &Trajectory,
    howl: &Trajectory,
    rk4: &Trajectory,
    cp: &CpDivisibilityReport,
) -> Result<()> {
    let gap_fh = fact.trace_norm_gap(howl)?;
    let gap_fr = fact.trace_norm_gap(rk4)?;
    let gap_hr = howl.trace_norm_gap(rk4)?;
    report.add(
        "three_way_agreement",
        gap_fh.max(gap_fr).max(gap_hr),
        1e-5,
        "factorized, Fourier-space and RK4 trajectories coincide in trace norm",
    );
    report.add(
        "trace_preservation_factorized",
        fact.trace_residual(),
        1e-10,
        "factorized trajectory preserves trace",
    );
    report.add(
        "trace_preservation_rk4",
        rk4.trace_residual(),
        1e-8,
        "integrated trajectory preserves trace",
    );
    report.add_lower_bound(
        "state_positivity",
        fact.min_eigenvalue()?.min(rk4.min_eigenvalue()?),
        -1e-9,
        "states stay positive semidefinite along the trajectories",
    );

    // monotone contraction of a probe pair under Lambda_t
    let rho = fact.states[0].clone();
    let sigma = matrix::DensityMatrix::basis_state(eng.dim, eng.dim - 1).matrix().clone();
    let mut prev = f64::MAX;
    let mut worst_increase: f64 = 0.0;
    for &t in fact.times.iter() {
        let lam = eng.lambda(t)?;
        let dist = matrix::trace_norm(&lam.apply(&(&rho - &sigma)))?;
        if dist > prev {
            worst_increase = worst_increase.max(dist - prev);
        }
        prev = dist;
    }
    report.add(
        "contraction_monotone",
        worst_increase,
        CONTRACTION_SLACK,
        "trace-norm distance of a probe pair never increases in time",
    );

    // one-period propagators share their spectrum across phases
    let reference = eng.l_bar.scale(Complex64::new(eng.period, 0.0)).exp()?;
    let sort = |mut v: Vec<Complex64>| {
        v.sort_by(|a, b| {
            b.re.partial_cmp(&a.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap())
        });
        v
    };
    let ref_eigs = sort(matrix::eig_general(reference.matrix())?.values);
    let mut worst_spec = 0.0f64;
    for phase in [0.0, 0.25, 0.5, 0.75] {
        let t = phase * eng.period;
        let v = eng.v(t + eng.period, t, eng.uf.as_ref(), eng.dg.as_ref())?;
        let eigs = sort(matrix::eig_general(v.matrix())?.values);
        for (a, b) in eigs.iter().zip(ref_eigs.iter()) {
            worst_spec = worst_spec.max((a - b).norm());
        }
    }
    report.add(
        "period_propagator_spectrum",
        worst_spec,
        1e-8,
        "one-period propagators are isospectral at every phase",
    );

    // lifted semigroup law
    let rho0 = fact.states[0].clone();
    let s0 = GeneralizedState::embed(&rho0, 0, cfg.truncation, eng.period)?;
    let t1 = 0.3 * eng.period;
    let t2 = 0.5 * eng.period;
    let seq = w_tau_apply(
        &w_tau_apply(&s0, t2, &eng.p_superop, &eng.l_bar)?,
        t1,
        &eng.p_superop,
        &eng.l_bar,
    )?;
    let direct = w_tau_apply(&s0, t1 + t2, &eng.p_superop, &eng.l_bar)?;
    let mut worst_sg = 0.0f64;
    let cut = cfg.truncation as i64 - cfg.interior_margin as i64 - 2;
    for n in -cut..=cut {
        worst_sg = worst_sg.max(matrix::max_abs(&(seq.block(n) - direct.block(n))));
    }
    report.add(
        "w_tau_semigroup_law",
        worst_sg,
        1e-8,
        "lifted semigroup composes additively in tau on interior blocks",
    );

    report.add_lower_bound(
        "cp_divisibility_choi",
        cp.pairs.iter().map(|p| p.choi_min_eig).fold(f64::MAX, f64::min),
        -1e-9,
        "every propagator on the (t, s) grid has a PSD Choi matrix",
    );
    report.add(
        "cp_divisibility_tp",
        cp.pairs.iter().map(|p| p.tp_residual).fold(0.0, f64::max),
        1e-10,
        "every propagator on the (t, s) grid preserves trace",
    );
    report.add(
        "cp_divisibility_contraction",
        cp.pairs.iter().map(|p| p.contraction_violations as f64).sum::<f64>(),
        0.0,
        "every propagator contracts all seeded probe pairs",
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// Artifact emission
// ---------------------------------------------------------------------------

fn trajectory_csv(trajs: &[&Trajectory]) -> Result<String> {
    let d = trajs[0].states[0].nrows();
    let mut out = String::from("method,t");
    for i in 0..d {
        for j in 0..d {
            out.push_str(&format!(",re_{i}_{j},im_{i}_{j}"));
        }
    }
    out.push_str(",trace,min_eigenvalue,purity\n");
    for traj in trajs {
        let tag = match traj.method {
            Method::Factorized => "factorized",
            Method::Howland => "howland",
            Method::Rk4 => "rk4",
        };
        for (k, state) in traj.states.iter().enumerate() {
            out.push_str(tag);
            out.push(',');
            out.push_str(&fmt_f64(traj.times[k]));
            for i in 0..d {
                for j in 0..d {
                    out.push(',');
                    out.push_str(&fmt_f64(state[[i, j]].re));
                    out.push(',');
                    out.push_str(&fmt_f64(state[[i, j]].im));
                }
            }
            let tr = matrix::trace(state).re;
            let min_eig = matrix::min_hermitian_eigenvalue(state)?;
            let purity = matrix::trace(&state.dot(state)).re;
            out.push(',');
            out.push_str(&fmt_f64(tr));
            out.push(',');
            out.push_str(&fmt_f64(min_eig));
            out.push(',');
            out.push_str(&fmt_f64(purity));
            out.push('\n');
        }
    }
    Ok(out)
}

fn ladder_csv(ladder: &SpectralLadder) -> String {
    let mut out = String::from("j,n,re_lambda,im_lambda,residual\n");
    for e in &ladder.entries {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            e.j,
            e.n,
            fmt_f64(e.value.re),
            fmt_f64(e.value.im),
            fmt_f64(e.residual)
        ));
    }
    out
}

fn json_f64_array(v: &[f64]) -> String {
    let mut out = String::from("[");
    for (i, x) in v.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&fmt_f64(*x));
    }
    out.push(']');
    out
}

fn diagnostics_json(
    eng: &Engine,
    diag: &TruncationDiagnostics,
    cp: &CpDivisibilityReport,
    edge_mass: f64,
    counterexample_period: f64,
) -> Result<String> {
    let ce = contraction_counterexample(counterexample_period)?;
    let mut out = String::from("{");
    out.push_str(&format!(
        "\"bohr_quasifrequencies\":{},",
        json_f64_array(&eng.bohr_frequencies)
    ));
    if let Some(uf) = &eng.uf {
        out.push_str(&format!("\"quasienergies\":{},", json_f64_array(&uf.quasienergies)));
    }
    match &eng.degeneracy_warning {
        Some(w) => out.push_str(&format!(
            "\"degeneracy_warning\":{},",
            serde_json::to_string(w).unwrap()
        )),
        None => out.push_str("\"degeneracy_warning\":null,"),
    }
    out.push_str(&format!("\"p_tail_sums\":{},", json_f64_array(&diag.p_tail_sums)));
    out.push_str(&format!("\"l_tail_sums\":{},", json_f64_array(&diag.l_tail_sums)));
    out.push_str(&format!(
        "\"p_reconstruction_error\":{},",
        fmt_f64(diag.p_reconstruction_error)
    ));
    out.push_str(&format!(
        "\"l_reconstruction_error\":{},",
        fmt_f64(diag.l_reconstruction_error)
    ));
    out.push_str(&format!(
        "\"p_derivative_residual\":{},",
        fmt_f64(diag.p_derivative_residual)
    ));
    out.push_str(&format!("\"howland_edge_mass\":{},", fmt_f64(edge_mass)));
    out.push_str(&format!(
        "\"counterexample\":{{\"l2_norm\":{},\"max_value\":{},\"max_location\":{},\"constant_state_ratio\":{},\"pointwise_exceeds_one\":{}}},",
        fmt_f64(ce.l2_norm),
        fmt_f64(ce.max_value),
        fmt_f64(ce.max_location),
        fmt_f64(ce.constant_state_ratio),
        ce.pointwise_exceeds_one
    ));
    out.push_str(&format!(
        "\"cp_divisibility\":{{\"seed\":{},\"n_probes\":{},\"pairs\":[",
        cp.seed, cp.n_probes
    ));
    for (i, p) in cp.pairs.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&format!(
            "{{\"t\":{},\"s\":{},\"choi_min_eig\":{},\"tp_residual\":{},\"contraction_violations\":{},\"worst_contraction_excess\":{}}}",
            fmt_f64(p.t),
            fmt_f64(p.s),
            fmt_f64(p.choi_min_eig),
            fmt_f64(p.tp_residual),
            p.contraction_violations,
            fmt_f64(p.worst_contraction_excess)
        ));
    }
    out.push_str("]}}");
    Ok(out)
}

/// Execute the full pipeline for a validated config.
pub fn run(cfg: &SimulationConfig) -> Result<RunArtifacts> {
    let eng = build_engine(cfg)?;
    let d = cfg.dimension;
    let period = cfg.period;

    // time grid
    let t_final = cfg.time_grid.periods * period;
    let points = cfg.time_grid.points;
    let grid: Vec<f64> =
        (0..points).map(|k| k as f64 * t_final / (points - 1) as f64).collect();

    // trajectories by three routes
    let rho0 = matrix::DensityMatrix::plus_state(d).matrix().clone();
    let fact = match (&eng.uf, &eng.dg) {
        (Some(uf), Some(dg)) => {
            evolve_factorized(&rho0, &grid, uf, dg).map_err(|e| ctx("evolution-engine", e))?
        }
        _ => {
            let mut states = Vec::with_capacity(grid.len());
            for &t in &grid {
                states.push(eng.lambda(t)?.apply(&rho0));
            }
            Trajectory { times: grid.clone(), states, method: Method::Factorized }
        }
    };
    let route = match (&eng.uf, &eng.dg) {
        (Some(_), Some(_)) => {
            HowlandRoute::Factorized { p_superop: &eng.p_superop, l_bar: &eng.l_bar }
        }
        _ => HowlandRoute::Dense { l_tilde: &eng.l_tilde },
    };
    let (howl, edge_mass, _edge_flag) =
        evolve_howland(&rho0, &grid, route, cfg.truncation, period)
            .map_err(|e| ctx("evolution-engine", e))?;
    let substeps = ((cfg.steps_per_period as f64 * t_final / period
        / (points - 1) as f64)
        .ceil() as usize)
        .max(16);
    let l_at = |t: f64| eng.l_at(cfg, t);
    let rk4 = rk4_reference(&rho0, &grid, &l_at, substeps)
        .map_err(|e| ctx("evolution-engine", e))?;

    // spectral ladder
    let n_interior = (cfg.truncation as i64 - cfg.interior_margin as i64).max(0);
    let ladder = spectral_ladder(
        &eng.l_bar,
        &eng.p_superop,
        &eng.l_tilde,
        n_interior,
        cfg.interior_margin,
    )
    .map_err(|e| ctx("howland-lifting", e))?;

    // divisibility grid: 6x6 pairs over one period window
    let mut pairs = Vec::new();
    for i in 0..6 {
        for j in 0..=i {
            pairs.push((i as f64 * period / 3.0, j as f64 * period / 3.0));
        }
    }
    let vmaker =
        |t: f64, s: f64| eng.v(t, s, eng.uf.as_ref(), eng.dg.as_ref());
    let cp = cp_divisibility_report(&vmaker, d, &pairs, 20, cfg.seed, 1e-9, 1e-10)
        .map_err(|e| ctx("evolution-engine", e))?;

    // diagnostics
    let h = |t: f64| cfg.hamiltonian.eval(t);
    let diag = match &eng.uf {
        Some(uf) => truncation_diagnostics(&eng.p_superop, &eng.l_pmf, uf, &h)
            .map_err(|e| ctx("howland-lifting", e))?,
        None => TruncationDiagnostics {
            p_tail_sums: eng.p_superop.tail_sums()?,
            l_tail_sums: eng.l_pmf.tail_sums()?,
            p_reconstruction_error: eng.p_superop.truncation_error(),
            l_reconstruction_error: eng.l_pmf.truncation_error(),
            p_derivative_residual: 0.0,
        },
    };

    // check battery
    let mut report = CheckReport::new();
    add_matrix_core_checks(&mut report, cfg.seed, cfg.tolerances.psd)?;
    add_floquet_checks(&mut report, cfg)?;
    if let Some(uf) = &eng.uf {
        add_unitary_checks(&mut report, uf)?;
        // acceptance anchors for the driven-qubit benchmark live in the
        // integration tests; here we track the drive-independent pieces
    }
    add_quadrature_checks(&mut report, cfg)?;
    report.add_bool(
        "tail_decay_monotone",
        eng.p_superop
            .tail_sums()?
            .windows(2)
            .all(|w| w[1] <= w[0] + 1e-15),
        "Fourier tails of the periodic part decrease monotonically",
    );
    add_wcl_checks(&mut report, cfg, &eng)?;
    add_lifting_checks(&mut report, cfg, &eng, &ladder)?;
    add_evolution_checks(&mut report, cfg, &eng, &fact, &howl, &rk4, &cp)?;
    report.add(
        "howland_edge_mass",
        edge_mass,
        1e-6,
        "Fourier-space evolution keeps its mass away from the truncation edge",
    );

    let trajectory = trajectory_csv(&[&fact, &howl, &rk4])?;
    let ladder_out = ladder_csv(&ladder);
    let diagnostics = diagnostics_json(&eng, &diag, &cp, edge_mass, period)?;

    Ok(RunArtifacts {
        report,
        trajectory_csv: trajectory,
        ladder_csv: ladder_out,
        diagnostics_json: diagnostics,
    })
}
