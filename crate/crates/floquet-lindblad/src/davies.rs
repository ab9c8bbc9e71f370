//! Weak-coupling-limit generators for periodically driven systems.
//!
//! Two classes: the fast-driving generator `Lbar = -i ad(Hbar) + K` with the
//! Davies structure of `K` built from harmonic Bohr components of the jump
//! operators, and the adiabatic generator assembled from the instantaneous
//! Bohr decomposition of `H_t`.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::bath::BathSpectrum;
use crate::error::{Error, Result};
use crate::floquet::UnitaryFloquet;
use crate::matrix::{self, CMat};
use crate::periodic::PeriodicMatrixFunction;
use crate::superop::{self, Superoperator};

/// Frequencies closer than `RELATIVE_CLUSTER_TOL * ||Hbar||` are merged:
/// the secular construction presumes well-separated Bohr frequencies, and
/// numerical near-degeneracy must not split a secular block.
const RELATIVE_CLUSTER_TOL: f64 = 1e-8;

fn cluster_values(sorted: &[f64], tol: f64) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, &v) in sorted.iter().enumerate() {
        match groups.last_mut() {
            Some(g) if (v - sorted[*g.last().unwrap()]).abs() <= tol => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    groups
}

/// Sorted, deduplicated Bohr quasifrequencies: all pairwise differences of
/// the eigenvalues of a Hermitian `h_bar`, merged with the clustering
/// tolerance.
pub fn bohr_quasifrequencies(h_bar: &CMat) -> Result<Vec<f64>> {
    let res = matrix::hermiticity_residual(h_bar);
    let scale = matrix::max_abs(h_bar).max(1.0);
    if res > 1e-9 * scale {
        return Err(Error::NotHermitian { residual: res, tol: 1e-9 * scale });
    }
    let (vals, _) = matrix::eigh(h_bar)?;
    let mut diffs: Vec<f64> = Vec::new();
    for &a in &vals {
        for &b in &vals {
            diffs.push(a - b);
        }
    }
    diffs.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let tol = RELATIVE_CLUSTER_TOL * matrix::operator_norm(h_bar)?.max(1.0);
    let groups = cluster_values(&diffs, tol);
    Ok(groups
        .iter()
        .map(|g| g.iter().map(|&i| diffs[i]).sum::<f64>() / g.len() as f64)
        .collect())
}

/// Spectral decomposition of a Hermitian matrix with eigenvalues merged
/// into clusters: `(cluster energies, projectors)`.
fn spectral_projectors(h: &CMat) -> Result<(Vec<f64>, Vec<CMat>)> {
    let d = h.nrows();
    let (vals, vecs) = matrix::eigh(h)?;
    let tol = RELATIVE_CLUSTER_TOL * matrix::operator_norm(h)?.max(1.0);
    let groups = cluster_values(&vals, tol);
    let mut energies = Vec::with_capacity(groups.len());
    let mut projectors = Vec::with_capacity(groups.len());
    for g in &groups {
        let e = g.iter().map(|&i| vals[i]).sum::<f64>() / g.len() as f64;
        let mut p = matrix::zeros(d);
        for &i in g {
            let v = vecs.column(i).to_owned();
            for r in 0..d {
                for c in 0..d {
                    p[[r, c]] += v[r] * v[c].conj();
                }
            }
        }
        energies.push(e);
        projectors.push(p);
    }
    Ok((energies, projectors))
}

/// One harmonic Bohr component of a jump operator.
#[derive(Debug, Clone)]
pub struct JumpComponent {
    /// Index of the coupling operator it came from.
    pub coupling: usize,
    /// Harmonic index q.
    pub harmonic: i64,
    /// Bohr quasifrequency label.
    pub frequency: f64,
    pub op: CMat,
}

/// Harmonic Bohr decomposition of a set of jump operators in the Floquet
/// interaction picture.
///
/// Convention: with `X^{(k)}_q` the Fourier coefficients of
/// `t -> p_t^H S_k p_t` and `Pi_e` the spectral projectors of `Hbar`,
///
/// ```text
/// S_{kqw} = sum_{e' - e = w} Pi_e X^{(k)}_{-q} Pi_{e'},
/// ```
///
/// so `S_{kqw}` lowers the averaged energy by `w`:
/// `[Hbar, S_{kqw}] = -w S_{kqw}`, the adjoint pairing is
/// `S_{kqw}^H = S_{k,-q,-w}` (for Hermitian couplings), and the
/// interaction picture reconstructs as
/// `u_t^H S_k u_t = sum_{q,w} S_{kqw} e^{-i(w + q Omega) t}`.
/// This labeling puts the emission rate `gamma(w + q Omega)` on the
/// energy-lowering component, so thermal baths relax toward Gibbs
/// populations.
#[derive(Debug, Clone)]
pub struct BohrDecomposition {
    pub quasifrequencies: Vec<f64>,
    pub harmonic_cutoff: i64,
    pub components: Vec<JumpComponent>,
    /// Raised when eigenvalues of `Hbar` had to be merged into clusters.
    pub degeneracy_warning: Option<String>,
    /// Max-abs tail of the discarded interaction-picture harmonics.
    pub truncation_bound: f64,
}

impl BohrDecomposition {
    /// Sup over components of `||[Hbar, S] + w S||`.
    pub fn commutation_residual(&self, h_bar: &CMat) -> Result<f64> {
        let mut worst = 0.0f64;
        for c in &self.components {
            let comm = matrix::commutator(h_bar, &c.op);
            let target = c.op.mapv(|z| z * (-c.frequency));
            worst = worst.max(matrix::operator_norm(&(&comm - &target))?);
        }
        Ok(worst)
    }

    /// Sup over components of `||S_{kqw}^H - S_{k,-q,-w}||`.
    pub fn adjoint_residual(&self) -> f64 {
        let tol = RELATIVE_CLUSTER_TOL;
        let mut worst = 0.0f64;
        for c in &self.components {
            let dag = matrix::dagger(&c.op);
            let partner = self.components.iter().find(|p| {
                p.coupling == c.coupling
                    && p.harmonic == -c.harmonic
                    && (p.frequency + c.frequency).abs() <= tol * (1.0 + c.frequency.abs())
            });
            match partner {
                Some(p) => worst = worst.max(matrix::max_abs(&(&dag - &p.op))),
                None => worst = worst.max(matrix::max_abs(&dag)),
            }
        }
        worst
    }

    /// Sup-norm error of `sum S_{kqw} e^{-i(w + q Omega) t}` against the
    /// directly computed `u_t^H S_k u_t` on a time grid.
    pub fn reconstruction_residual(
        &self,
        uf: &UnitaryFloquet,
        jumps: &[CMat],
        grid_points: usize,
    ) -> Result<f64> {
        let mut worst = 0.0f64;
        for (k, s) in jumps.iter().enumerate() {
            for g in 0..grid_points {
                let t = g as f64 * uf.period() / grid_points as f64;
                let u = uf.u_at(t)?;
                let direct = matrix::dagger(&u).dot(s).dot(&u);
                let mut recon = matrix::zeros(uf.dim());
                for c in self.components.iter().filter(|c| c.coupling == k) {
                    let phase = Complex64::new(
                        0.0,
                        -(c.frequency + c.harmonic as f64 * uf.omega()) * t,
                    )
                    .exp();
                    recon = recon + c.op.mapv(|z| z * phase);
                }
                worst = worst.max(matrix::max_abs(&(&recon - &direct)));
            }
        }
        Ok(worst)
    }
}

/// Split jump operators into harmonic Bohr components `S_{kqw}` up to
/// harmonic cutoff `q_cutoff`.
pub fn decompose_jumps(
    jumps: &[CMat],
    uf: &UnitaryFloquet,
    q_cutoff: i64,
) -> Result<BohrDecomposition> {
    let d = uf.dim();
    for s in jumps {
        if s.nrows() != d || s.ncols() != d {
            return Err(Error::DimensionMismatch("jump operator dimension".into()));
        }
    }
    let (energies, projectors) = spectral_projectors(&uf.h_bar)?;
    let degeneracy_warning = if energies.len() < d {
        Some(format!(
            "eigenvalues of the averaged Hamiltonian merged into {} clusters (tolerance {:.1e} relative)",
            energies.len(),
            RELATIVE_CLUSTER_TOL
        ))
    } else {
        None
    };

    // Bohr frequencies from the clustered energies.
    let freq_tol =
        RELATIVE_CLUSTER_TOL * matrix::operator_norm(&uf.h_bar)?.max(1.0);
    let mut freqs: Vec<f64> = Vec::new();
    for &a in &energies {
        for &b in &energies {
            let w = a - b;
            if !freqs.iter().any(|&f| (f - w).abs() <= freq_tol) {
                freqs.push(w);
            }
        }
    }
    freqs.sort_by(|x, y| x.partial_cmp(y).unwrap());

    // Interaction-picture harmonics of each jump, from the ground-truth
    // p grid.
    let p_grid = uf.p.grid();
    let mut truncation_bound = 0.0f64;
    let mut components = Vec::new();
    for (k, s) in jumps.iter().enumerate() {
        let x_grid: Vec<CMat> = p_grid
            .iter()
            .map(|p| matrix::dagger(p).dot(s).dot(p))
            .collect();
        let x = PeriodicMatrixFunction::from_grid(uf.period(), q_cutoff.unsigned_abs() as usize, x_grid)?;
        truncation_bound = truncation_bound.max(x.truncation_error());
        for q in -q_cutoff..=q_cutoff {
            let xq = x.coeff(-q);
            for (ai, pa) in projectors.iter().enumerate() {
                for (bi, pb) in projectors.iter().enumerate() {
                    let w = energies[bi] - energies[ai];
                    let widx = freqs
                        .iter()
                        .position(|&f| (f - w).abs() <= freq_tol)
                        .expect("frequency list covers all pairs");
                    let op = pa.dot(&xq).dot(pb);
                    components.push(JumpComponent {
                        coupling: k,
                        harmonic: q,
                        frequency: freqs[widx],
                        op,
                    });
                }
            }
        }
    }
    // Merge components sharing the same (k, q, w) label (distinct level
    // pairs on the same Bohr frequency).
    let mut merged: BTreeMap<(usize, i64, usize), CMat> = BTreeMap::new();
    for c in components {
        let widx = freqs
            .iter()
            .position(|&f| (f - c.frequency).abs() <= freq_tol)
            .unwrap();
        merged
            .entry((c.coupling, c.harmonic, widx))
            .and_modify(|m| *m = &*m + &c.op)
            .or_insert(c.op);
    }
    let components = merged
        .into_iter()
        .map(|((k, q, widx), op)| JumpComponent {
            coupling: k,
            harmonic: q,
            frequency: freqs[widx],
            op,
        })
        .collect();

    Ok(BohrDecomposition {
        quasifrequencies: freqs,
        harmonic_cutoff: q_cutoff,
        components,
        degeneracy_warning,
        truncation_bound,
    })
}

/// The fast-driving weak-coupling generator.
#[derive(Debug, Clone)]
pub struct DaviesGenerator {
    /// Dissipative part; commutes with `-i ad(Hbar)`.
    pub k: Superoperator,
    pub h_bar: CMat,
    /// `Lbar = -i ad(Hbar) + K`.
    pub l_bar: Superoperator,
}

/// Assemble the Davies generator
/// `K(rho) = sum gamma_kk'(w + q Omega) (S_kqw rho S_k'qw^H - 1/2 {S_k'qw^H S_kqw, rho})`
/// from a Bohr decomposition and a bath spectral density.
pub fn davies_generator(
    bd: &BohrDecomposition,
    bath: &BathSpectrum,
    uf: &UnitaryFloquet,
) -> Result<DaviesGenerator> {
    bath.validate()?;
    let d = uf.dim();
    let omega = uf.omega();
    let n_couplings = bd.components.iter().map(|c| c.coupling + 1).max().unwrap_or(1);

    let mut k_op = Superoperator::zero(d);
    // Fixed (q, w, k, k') iteration order for deterministic rounding.
    let freq_tol = RELATIVE_CLUSTER_TOL * matrix::operator_norm(&uf.h_bar)?.max(1.0);
    for q in -bd.harmonic_cutoff..=bd.harmonic_cutoff {
        for (widx, &w) in bd.quasifrequencies.iter().enumerate() {
            let _ = widx;
            let arg = w + q as f64 * omega;
            let gamma = bath.rate_matrix(arg, n_couplings)?;
            if !matrix::is_positive_semidefinite(&gamma, 1e-10)? {
                return Err(Error::InvalidBath(format!(
                    "rate matrix not PSD at frequency {arg}"
                )));
            }
            for ka in 0..n_couplings {
                for kb in 0..n_couplings {
                    let rate = gamma[[ka, kb]];
                    if rate.norm() == 0.0 {
                        continue;
                    }
                    let sa = bd.components.iter().find(|c| {
                        c.coupling == ka
                            && c.harmonic == q
                            && (c.frequency - w).abs() <= freq_tol
                    });
                    let sb = bd.components.iter().find(|c| {
                        c.coupling == kb
                            && c.harmonic == q
                            && (c.frequency - w).abs() <= freq_tol
                    });
                    if let (Some(sa), Some(sb)) = (sa, sb) {
                        let term = superop::dissipator_term(&sa.op, &sb.op)?;
                        k_op = k_op.add(&term.scale(rate));
                    }
                }
            }
        }
    }

    let l_bar = superop::hamiltonian_generator(&uf.h_bar)?.add(&k_op);
    Ok(DaviesGenerator { k: k_op, h_bar: uf.h_bar.clone(), l_bar })
}

impl DaviesGenerator {
    /// `||[K, ad(Hbar)]||`.
    pub fn commutation_residual(&self) -> Result<f64> {
        let adh = superop::ad(&self.h_bar)?;
        let comm = self.k.compose(&adh).sub(&adh.compose(&self.k));
        comm.norm()
    }
}

/// The time-local generator `L_t = -i ad(H_t) + P_t K P_t^{-1}` of the
/// fast-driving class, with `P_t` the conjugation by `p_t`.
pub fn full_lindbladian_at<F>(
    t: f64,
    dg: &DaviesGenerator,
    uf: &UnitaryFloquet,
    h: &F,
) -> Result<Superoperator>
where
    F: Fn(f64) -> CMat,
{
    let p = uf.p_at(t);
    let conj = superop::conjugation(&p)?;
    let dissipative = conj.compose(&dg.k).compose(&conj.trace_dual());
    Ok(superop::hamiltonian_generator(&h(t))?.add(&dissipative))
}

/// The superoperator-valued periodic functions `t -> P_t` and `t -> L_t`
/// of the fast-driving class, sampled on the p grid.
pub fn p_superop_function(uf: &UnitaryFloquet) -> Result<PeriodicMatrixFunction> {
    let grid: Vec<CMat> = uf
        .p
        .grid()
        .iter()
        .map(|p| superop::conjugation(p).map(|s| s.matrix().clone()))
        .collect::<Result<_>>()?;
    let bw = 2 * uf.p.bandwidth();
    PeriodicMatrixFunction::from_grid(uf.period(), bw.min(grid.len() / 4), grid)
}

pub fn lindbladian_function<F>(
    dg: &DaviesGenerator,
    uf: &UnitaryFloquet,
    h: &F,
    bandwidth: usize,
) -> Result<PeriodicMatrixFunction>
where
    F: Fn(f64) -> CMat,
{
    let m = uf.p.grid().len();
    let grid: Vec<CMat> = (0..m)
        .map(|k| {
            let t = k as f64 * uf.period() / m as f64;
            full_lindbladian_at(t, dg, uf, h).map(|s| s.matrix().clone())
        })
        .collect::<Result<_>>()?;
    PeriodicMatrixFunction::from_grid(uf.period(), bandwidth, grid)
}

/// Instantaneous-Bohr (adiabatic) generator at time `t`:
/// `-i ad(H_t) + sum gamma(w_t) (S_kw rho S_k'w^H - 1/2 {...})` built from
/// the spectral decomposition of `H_t` itself. The Hamiltonian part
/// commutes with the dissipative part by construction of the secular
/// components.
pub fn adiabatic_generator_at(
    h_t: &CMat,
    jumps: &[CMat],
    bath: &BathSpectrum,
) -> Result<(Superoperator, Option<String>)> {
    bath.validate()?;
    let d = h_t.nrows();
    let res = matrix::hermiticity_residual(h_t);
    if res > 1e-9 * matrix::max_abs(h_t).max(1.0) {
        return Err(Error::NotHermitian { residual: res, tol: 1e-9 });
    }
    let (energies, projectors) = spectral_projectors(h_t)?;
    let warning = if energies.len() < d {
        Some(format!(
            "instantaneous spectrum has {} distinct level clusters (level crossing?)",
            energies.len()
        ))
    } else {
        None
    };

    let n_couplings = jumps.len();
    let mut gen = superop::hamiltonian_generator(h_t)?;
    // Components S_{kw} = sum_{e'-e=w} Pi_e S_k Pi_e' per coupling.
    let freq_tol = RELATIVE_CLUSTER_TOL * matrix::operator_norm(h_t)?.max(1.0);
    let mut freqs: Vec<f64> = Vec::new();
    for &a in &energies {
        for &b in &energies {
            let w = a - b;
            if !freqs.iter().any(|&f| (f - w).abs() <= freq_tol) {
                freqs.push(w);
            }
        }
    }
    freqs.sort_by(|x, y| x.partial_cmp(y).unwrap());

    let mut comp = vec![vec![matrix::zeros(d); freqs.len()]; n_couplings];
    for (k, s) in jumps.iter().enumerate() {
        for (ai, pa) in projectors.iter().enumerate() {
            for (bi, pb) in projectors.iter().enumerate() {
                let w = energies[bi] - energies[ai];
                let widx = freqs.iter().position(|&f| (f - w).abs() <= freq_tol).unwrap();
                comp[k][widx] = &comp[k][widx] + &pa.dot(s).dot(pb);
            }
        }
    }
    for (widx, &w) in freqs.iter().enumerate() {
        let gamma = bath.rate_matrix(w, n_couplings)?;
        if !matrix::is_positive_semidefinite(&gamma, 1e-10)? {
            return Err(Error::InvalidBath(format!("rate matrix not PSD at frequency {w}")));
        }
        for ka in 0..n_couplings {
            for kb in 0..n_couplings {
                let rate = gamma[[ka, kb]];
                if rate.norm() == 0.0 {
                    continue;
                }
                let term = superop::dissipator_term(&comp[ka][widx], &comp[kb][widx])?;
                gen = gen.add(&term.scale(rate));
            }
        }
    }
    Ok((gen, warning))
}

// ---------------------------------------------------------------------------
// Standard (GKLS) form verification
// ---------------------------------------------------------------------------

/// Result of projecting a generator onto Hamiltonian + dissipator form
/// against a traceless orthonormal matrix basis.
#[derive(Debug, Clone)]
pub struct StandardFormReport {
    /// True iff the Kossakowski matrix is PSD within tolerance and the
    /// generator annihilates trace within tolerance.
    pub is_gkls: bool,
    /// Extracted (traceless) effective Hamiltonian.
    pub hamiltonian: CMat,
    /// Smallest eigenvalue of the Kossakowski matrix.
    pub kossakowski_min_eig: f64,
    /// Residual of trace annihilation.
    pub trace_residual: f64,
    /// Residual of rebuilding the generator from the extracted
    /// (Hamiltonian, Kossakowski) data.
    pub reconstruction_residual: f64,
}

/// Traceless orthonormal basis (generalized Gell-Mann matrices), preceded
/// by `I/sqrt(d)` at index 0. Orthonormal under `<A, B> = tr(A^H B)`.
pub fn hermitian_basis(d: usize) -> Vec<CMat> {
    let mut basis = Vec::with_capacity(d * d);
    basis.push(matrix::identity(d).mapv(|z| z / (d as f64).sqrt()));
    let inv_sqrt2 = Complex64::new(1.0 / 2.0f64.sqrt(), 0.0);
    for j in 0..d {
        for i in 0..j {
            let mut sym = matrix::zeros(d);
            sym[[i, j]] = inv_sqrt2;
            sym[[j, i]] = inv_sqrt2;
            basis.push(sym);
            let mut asym = matrix::zeros(d);
            asym[[i, j]] = Complex64::new(0.0, -1.0) * inv_sqrt2;
            asym[[j, i]] = Complex64::new(0.0, 1.0) * inv_sqrt2;
            basis.push(asym);
        }
    }
    for l in 1..d {
        let norm = 1.0 / ((l * (l + 1)) as f64).sqrt();
        let mut diag = matrix::zeros(d);
        for k in 0..l {
            diag[[k, k]] = Complex64::new(norm, 0.0);
        }
        diag[[l, l]] = Complex64::new(-(l as f64) * norm, 0.0);
        basis.push(diag);
    }
    basis
}

/// Decompose a generator into Hamiltonian part and dissipator and test the
/// standard (GKLS) criteria.
pub fn verify_standard_form(l: &Superoperator, psd_tol: f64) -> Result<StandardFormReport> {
    let d = l.dim();
    let n = d * d;
    let basis = hermitian_basis(d);

    // Process matrix: L(rho) = sum chi_ab F_a rho F_b^H, i.e. in vectorized
    // form L = sum chi_ab conj(F_b) (x) F_a, and {conj(F_b) (x) F_a} is an
    // orthonormal family under the Hilbert-Schmidt inner product.
    let lm = l.matrix();
    let mut chi = matrix::zeros(n);
    for a in 0..n {
        for b in 0..n {
            let fb_conj = basis[b].mapv(|z| z.conj());
            let e = matrix::kron(&fb_conj, &basis[a]);
            let mut inner = Complex64::new(0.0, 0.0);
            for r in 0..n {
                for c in 0..n {
                    inner += e[[r, c]].conj() * lm[[r, c]];
                }
            }
            chi[[a, b]] = inner;
        }
    }

    // Kossakowski block: chi over the traceless part of the basis.
    let mut kossakowski = matrix::zeros(n - 1);
    for a in 1..n {
        for b in 1..n {
            kossakowski[[a - 1, b - 1]] = chi[[a, b]];
        }
    }
    let k_min = matrix::min_hermitian_eigenvalue(&kossakowski)?;

    // Effective Hamiltonian from the kappa = (1/sqrt d) sum chi_a0 F_a part.
    let sqrt_d = (d as f64).sqrt();
    let mut kappa = matrix::zeros(d);
    for a in 1..n {
        kappa = kappa + basis[a].mapv(|z| z * chi[[a, 0]] / sqrt_d);
    }
    let h = (&kappa - &matrix::dagger(&kappa)).mapv(|z| z * Complex64::new(0.0, 0.5));
    let tr_h = matrix::trace(&h) / d as f64;
    let mut hamiltonian = h;
    for i in 0..d {
        hamiltonian[[i, i]] -= tr_h;
    }

    // Rebuild -i[H, .] + sum_ab A_ab (F_a . F_b^H - 1/2 {F_b^H F_a, .})
    // and compare; large residual means the generator was not trace
    // annihilating or not Hermiticity preserving to begin with.
    let mut rebuilt = superop::hamiltonian_generator(&hamiltonian)?;
    for a in 1..n {
        for b in 1..n {
            let z = chi[[a, b]];
            if z.norm() == 0.0 {
                continue;
            }
            let term = superop::dissipator_term(&basis[a], &basis[b])?;
            rebuilt = rebuilt.add(&term.scale(z));
        }
    }
    let reconstruction_residual =
        matrix::max_abs(&(rebuilt.matrix() - l.matrix()));

    let trace_residual = l.trace_annihilation_residual();
    let is_gkls = k_min >= -psd_tol && trace_residual <= 1e-9;

    Ok(StandardFormReport {
        is_gkls,
        hamiltonian,
        kossakowski_min_eig: k_min,
        trace_residual,
        reconstruction_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::floquet::unitary_floquet;
    use crate::matrix::{identity, max_abs, pauli_x, pauli_z, zeros};
    use crate::periodic::test_support::bessel_j;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sigma_plus() -> CMat {
        let mut m = zeros(2);
        m[[0, 1]] = c(1.0, 0.0);
        m
    }

    fn sigma_minus() -> CMat {
        let mut m = zeros(2);
        m[[1, 0]] = c(1.0, 0.0);
        m
    }

    fn static_qubit(omega0: f64) -> UnitaryFloquet {
        let big_omega = 3.0;
        let period = 2.0 * std::f64::consts::PI / big_omega;
        let h0 = pauli_z().mapv(|z| z * 0.5 * omega0);
        unitary_floquet(&move |_| h0.clone(), 2, period, 256, 2, 0, false).unwrap()
    }

    fn driven_qubit() -> UnitaryFloquet {
        let (omega0, lambda, big_omega) = (1.0, 0.7, 3.0);
        let period = 2.0 * std::f64::consts::PI / big_omega;
        let h = move |t: f64| {
            pauli_z().mapv(|z| z * 0.5 * (omega0 + lambda * (big_omega * t).cos()))
        };
        unitary_floquet(&h, 2, period, 512, 8, 0, false).unwrap()
    }

    #[test]
    fn bohr_frequencies_of_qubit() {
        let h = pauli_z().mapv(|z| z * 0.5);
        let freqs = bohr_quasifrequencies(&h).unwrap();
        assert_eq!(freqs.len(), 3);
        assert_relative_eq!(freqs[0], -1.0, epsilon = 1e-12);
        assert_relative_eq!(freqs[1], 0.0, epsilon = 1e-12);
        assert_relative_eq!(freqs[2], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn bohr_frequencies_of_zero() {
        let freqs = bohr_quasifrequencies(&zeros(3)).unwrap();
        assert_eq!(freqs, vec![0.0]);
    }

    #[test]
    fn bohr_frequencies_three_level_brute_force() {
        let mut h = zeros(3);
        h[[1, 1]] = c(1.0, 0.0);
        h[[2, 2]] = c(2.5, 0.0);
        let freqs = bohr_quasifrequencies(&h).unwrap();
        // brute force over all 9 pairs
        let levels = [0.0, 1.0, 2.5];
        let mut expect: Vec<f64> = Vec::new();
        for a in levels {
            for b in levels {
                if !expect.iter().any(|&f| (f - (a - b)).abs() < 1e-9) {
                    expect.push(a - b);
                }
            }
        }
        expect.sort_by(|x, y| x.partial_cmp(y).unwrap());
        assert_eq!(freqs.len(), expect.len());
        for (f, e) in freqs.iter().zip(expect.iter()) {
            assert_relative_eq!(f, e, epsilon = 1e-10);
        }
    }

    #[test]
    fn static_split_of_sigma_x() {
        // constant p: the w = +w0 component is the energy-lowering part
        // sigma_minus, the w = -w0 component is sigma_plus, only q = 0.
        let uf = static_qubit(1.0);
        let bd = decompose_jumps(&[pauli_x()], &uf, 2).unwrap();
        for comp in &bd.components {
            let nrm = max_abs(&comp.op);
            if comp.harmonic != 0 {
                assert!(nrm < 1e-9, "q = {} should vanish", comp.harmonic);
                continue;
            }
            if (comp.frequency - 1.0).abs() < 1e-9 {
                assert!(max_abs(&(&comp.op - &sigma_minus())) < 1e-8);
            } else if (comp.frequency + 1.0).abs() < 1e-9 {
                assert!(max_abs(&(&comp.op - &sigma_plus())) < 1e-8);
            } else {
                assert!(nrm < 1e-9, "w = {} should vanish", comp.frequency);
            }
        }
    }

    #[test]
    fn identity_jump_is_pure_zero_frequency() {
        let uf = static_qubit(1.0);
        let bd = decompose_jumps(&[identity(2)], &uf, 2).unwrap();
        for comp in &bd.components {
            if comp.harmonic == 0 && comp.frequency.abs() < 1e-9 {
                assert!(max_abs(&(&comp.op - &identity(2))) < 1e-8);
            } else {
                assert!(max_abs(&comp.op) < 1e-9);
            }
        }
    }

    #[test]
    fn driven_qubit_bessel_weighted_components() {
        let uf = driven_qubit();
        let bd = decompose_jumps(&[pauli_x()], &uf, 6).unwrap();
        let z = 0.7 / 3.0; // lambda / Omega
        for comp in &bd.components {
            if (comp.frequency - 1.0).abs() < 1e-6 {
                // lowering part carries J_{-q}(z) sigma_minus... magnitude J_q
                let expect = bessel_j(comp.harmonic, z).abs();
                assert_relative_eq!(max_abs(&comp.op), expect, epsilon = 1e-7);
            }
        }
        // invariant relations
        assert!(bd.commutation_residual(&uf.h_bar).unwrap() < 1e-9);
        assert!(bd.adjoint_residual() < 1e-9);
        assert!(bd.reconstruction_residual(&uf, &[pauli_x()], 32).unwrap() < 1e-7);
    }

    #[test]
    fn flat_bath_davies_qubit() {
        let uf = static_qubit(1.0);
        let bd = decompose_jumps(&[pauli_x()], &uf, 0).unwrap();
        let bath = BathSpectrum::Flat { g: 1.0 };
        let dg = davies_generator(&bd, &bath, &uf).unwrap();
        // oracle: equal-rate amplitude damping both directions
        let oracle = superop::dissipator_term(&sigma_minus(), &sigma_minus())
            .unwrap()
            .add(&superop::dissipator_term(&sigma_plus(), &sigma_plus()).unwrap());
        assert!(max_abs(&(dg.k.matrix() - oracle.matrix())) < 1e-8);
        // stationary state I/2
        let mixed = identity(2).mapv(|z| z * 0.5);
        assert!(max_abs(&dg.k.apply(&mixed)) < 1e-9);
        assert!(dg.commutation_residual().unwrap() < 1e-9);
        assert!(dg.k.trace_annihilation_residual() < 1e-11);
    }

    #[test]
    fn zero_bath_gives_zero_generator() {
        let uf = static_qubit(1.0);
        let bd = decompose_jumps(&[pauli_x()], &uf, 2).unwrap();
        let dg = davies_generator(&bd, &BathSpectrum::Flat { g: 0.0 }, &uf).unwrap();
        assert!(max_abs(dg.k.matrix()) < 1e-12);
    }

    #[test]
    fn thermal_bath_reaches_gibbs_populations() {
        let omega0 = 1.0;
        let beta = 1.3;
        let uf = static_qubit(omega0);
        let bd = decompose_jumps(&[pauli_x()], &uf, 0).unwrap();
        let bath = BathSpectrum::Ohmic { g: 0.2, beta, cutoff: 10.0 };
        let dg = davies_generator(&bd, &bath, &uf).unwrap();

        // detailed-balance oracle for the 2-level rate equation: the
        // excited population relaxes to e^{-beta w0} times the ground one.
        let gamma_down = bath.rate(omega0);
        let gamma_up = bath.rate(-omega0);
        let oracle_ratio = gamma_up / gamma_down;
        assert_relative_eq!(oracle_ratio, (-beta * omega0).exp(), epsilon = 1e-9);

        // stationary state of K from its null space (populations sector)
        let eig = matrix::eig_general(dg.k.matrix()).unwrap();
        let j0 = eig
            .values
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| a.norm().partial_cmp(&b.norm()).unwrap())
            .unwrap()
            .0;
        assert!(eig.values[j0].norm() < 1e-10);
        let v = eig.vectors.column(j0).to_owned();
        let rho = crate::superop::devectorize(&v, 2);
        // excited state is |0> (energy +w0/2)
        let ratio = (rho[[0, 0]] / rho[[1, 1]]).re;
        assert_relative_eq!(ratio, oracle_ratio, epsilon = 1e-8);
    }

    #[test]
    fn semigroup_of_k_is_cp() {
        let uf = driven_qubit();
        let bd = decompose_jumps(&[pauli_x()], &uf, 8).unwrap();
        let bath = BathSpectrum::Ohmic { g: 0.1, beta: 1.0, cutoff: 10.0 };
        let dg = davies_generator(&bd, &bath, &uf).unwrap();
        for tau in [0.1, 0.5, 2.0] {
            let e = dg.k.scale(c(tau, 0.0)).exp().unwrap();
            assert!(
                superop::choi_min_eigenvalue(&e).unwrap() > -1e-10,
                "tau = {tau}"
            );
        }
        assert!(dg.commutation_residual().unwrap() < 1e-9);
    }

    #[test]
    fn full_lindbladian_at_zero_equals_static_form() {
        let uf = driven_qubit();
        let bd = decompose_jumps(&[pauli_x()], &uf, 8).unwrap();
        let bath = BathSpectrum::Flat { g: 0.3 };
        let dg = davies_generator(&bd, &bath, &uf).unwrap();
        let (omega0, lambda, big_omega) = (1.0, 0.7, 3.0);
        let h = move |t: f64| {
            pauli_z().mapv(|z| z * 0.5 * (omega0 + lambda * (big_omega * t).cos()))
        };
        let l0 = full_lindbladian_at(0.0, &dg, &uf, &h).unwrap();
        let expect = superop::hamiltonian_generator(&h(0.0)).unwrap().add(&dg.k);
        // p_0 = I up to Fourier truncation of the stored series
        assert!(max_abs(&(l0.matrix() - expect.matrix())) < 1e-7);
        assert!(l0.trace_annihilation_residual() < 1e-7);
    }

    #[test]
    fn full_lindbladian_matches_finite_difference_of_factorized_map() {
        let uf = driven_qubit();
        let bd = decompose_jumps(&[pauli_x()], &uf, 8).unwrap();
        let bath = BathSpectrum::Flat { g: 0.2 };
        let dg = davies_generator(&bd, &bath, &uf).unwrap();
        let (omega0, lambda, big_omega) = (1.0, 0.7, 3.0);
        let h = move |t: f64| {
            pauli_z().mapv(|z| z * 0.5 * (omega0 + lambda * (big_omega * t).cos()))
        };
        let period = uf.period();
        let t = period / 4.0;
        let lt = full_lindbladian_at(t, &dg, &uf, &h).unwrap();

        // finite difference of Lambda_{t+h} Lambda_t^{-1}
        let hstep = 1e-5;
        let lam = |tt: f64| -> Superoperator {
            let p = superop::conjugation(&uf.p_at(tt)).unwrap();
            let e = dg.l_bar.scale(c(tt, 0.0)).exp().unwrap();
            p.compose(&e)
        };
        let a = lam(t + hstep);
        let b = lam(t);
        let binv = matrix::inverse(b.matrix()).unwrap();
        let v = a.matrix().dot(&binv);
        let fd = (&v - &identity(4)).mapv(|z| z / hstep);
        assert!(
            max_abs(&(&fd - lt.matrix())) < 1e-3,
            "finite-difference residual {}",
            max_abs(&(&fd - lt.matrix()))
        );
    }

    #[test]
    fn adiabatic_constant_matches_davies_q0() {
        let uf = static_qubit(1.0);
        let bd = decompose_jumps(&[pauli_x()], &uf, 0).unwrap();
        let bath = BathSpectrum::Ohmic { g: 0.2, beta: 1.0, cutoff: 10.0 };
        let dg = davies_generator(&bd, &bath, &uf).unwrap();
        let h0 = pauli_z().mapv(|z| z * 0.5);
        let (gen, warn) = adiabatic_generator_at(&h0, &[pauli_x()], &bath).unwrap();
        assert!(warn.is_none());
        let full = superop::hamiltonian_generator(&h0).unwrap().add(&dg.k);
        assert!(max_abs(&(gen.matrix() - full.matrix())) < 1e-8);
    }

    #[test]
    fn adiabatic_zero_bath_is_pure_hamiltonian() {
        let h0 = pauli_z().mapv(|z| z * 0.5);
        let (gen, _) =
            adiabatic_generator_at(&h0, &[pauli_x()], &BathSpectrum::Flat { g: 0.0 }).unwrap();
        let expect = superop::hamiltonian_generator(&h0).unwrap();
        assert!(max_abs(&(gen.matrix() - expect.matrix())) < 1e-12);
    }

    #[test]
    fn adiabatic_rotating_qubit_matches_static_rates() {
        // slowly rotating H_t: at each t the generator spectrum equals the
        // static qubit one: {0, -G, -G/2 +- i w0}, G = gamma(w0) + gamma(-w0).
        let omega0 = 1.0;
        let bath = BathSpectrum::Ohmic { g: 0.15, beta: 0.8, cutoff: 10.0 };
        let g_total = bath.rate(omega0) + bath.rate(-omega0);
        for phi in [0.0f64, 0.4, 1.1] {
            let h_t = pauli_z().mapv(|z| z * 0.5 * omega0 * phi.cos())
                + pauli_x().mapv(|z| z * 0.5 * omega0 * phi.sin());
            // coupling perpendicular to the instantaneous field axis: no
            // dephasing component, unit transition matrix element
            let jump = pauli_x().mapv(|z| z * phi.cos()) - pauli_z().mapv(|z| z * phi.sin());
            let (gen, warn) = adiabatic_generator_at(&h_t, &[jump], &bath).unwrap();
            assert!(warn.is_none());
            let mut eigs = matrix::eig_general(gen.matrix()).unwrap().values;
            eigs.sort_by(|a, b| b.re.partial_cmp(&a.re).unwrap());
            assert!(eigs[0].norm() < 1e-9);
            // two complex-conjugate modes at -G/2 +- i w0 and one at -G
            let mut found_osc = 0;
            let mut found_relax = 0;
            for e in &eigs[1..] {
                if e.im.abs() > 0.5 {
                    assert_relative_eq!(e.re, -g_total / 2.0, epsilon = 1e-8);
                    assert_relative_eq!(e.im.abs(), omega0, epsilon = 1e-8);
                    found_osc += 1;
                } else {
                    assert_relative_eq!(e.re, -g_total, epsilon = 1e-8);
                    found_relax += 1;
                }
            }
            assert_eq!(found_osc, 2);
            assert_eq!(found_relax, 1);
        }
    }

    #[test]
    fn adiabatic_degeneracy_warning() {
        let (_, warn) =
            adiabatic_generator_at(&zeros(2), &[pauli_x()], &BathSpectrum::Flat { g: 0.1 })
                .unwrap();
        assert!(warn.is_some());
    }

    #[test]
    fn standard_form_pure_hamiltonian() {
        let l = superop::hamiltonian_generator(&pauli_z()).unwrap();
        let report = verify_standard_form(&l, 1e-10).unwrap();
        assert!(report.is_gkls);
        assert!(report.kossakowski_min_eig.abs() < 1e-10);
        assert!(max_abs(&(&report.hamiltonian - &pauli_z())) < 1e-10);
        assert!(report.reconstruction_residual < 1e-10);
    }

    #[test]
    fn standard_form_davies_qubit() {
        let uf = driven_qubit();
        let bd = decompose_jumps(&[pauli_x()], &uf, 8).unwrap();
        let bath = BathSpectrum::Ohmic { g: 0.2, beta: 1.0, cutoff: 10.0 };
        let dg = davies_generator(&bd, &bath, &uf).unwrap();
        let report = verify_standard_form(&dg.l_bar, 1e-10).unwrap();
        assert!(report.is_gkls, "min eig {}", report.kossakowski_min_eig);
        assert!(report.kossakowski_min_eig >= -1e-10);
        assert!(report.reconstruction_residual < 1e-9);
    }

    #[test]
    fn standard_form_detects_sign_flip() {
        let flipped = superop::dissipator_term(&sigma_minus(), &sigma_minus())
            .unwrap()
            .scale(c(-1.0, 0.0));
        let report = verify_standard_form(&flipped, 1e-10).unwrap();
        assert!(!report.is_gkls);
        assert!(report.kossakowski_min_eig < -0.5);
    }

    #[test]
    fn lindbladian_hermiticity_preservation() {
        let uf = driven_qubit();
        let bd = decompose_jumps(&[pauli_x()], &uf, 8).unwrap();
        let bath = BathSpectrum::Ohmic { g: 0.2, beta: 1.0, cutoff: 10.0 };
        let dg = davies_generator(&bd, &bath, &uf).unwrap();
        let (omega0, lambda, big_omega) = (1.0, 0.7, 3.0);
        let h = move |t: f64| {
            pauli_z().mapv(|z| z * 0.5 * (omega0 + lambda * (big_omega * t).cos()))
        };
        for k in 0..8 {
            let t = k as f64 * uf.period() / 8.0;
            let lt = full_lindbladian_at(t, &dg, &uf, &h).unwrap();
            assert!(lt.hermiticity_preservation_residual() < 1e-12);
            assert!(lt.trace_annihilation_residual() < 1e-7);
        }
    }
}
