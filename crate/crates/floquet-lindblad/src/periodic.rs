//! Truncated Fourier representations of T-periodic matrix-valued functions.
//!
//! Coefficients come from the uniform trapezoidal rule, which for periodic
//! integrands reduces to the plain average over one period and is spectrally
//! accurate: for band-limited input within the anti-aliasing margin the
//! coefficients are exact to rounding.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::{self, CMat};

/// Ratio threshold for the aliasing flag: the edge coefficient should be
/// negligible against the largest one.
const ALIASING_RATIO: f64 = 0.01;

/// A T-periodic matrix- or superoperator-valued function held as Fourier
/// data `{f_n : |n| <= bandwidth}` plus the uniform sample grid it was
/// built from. The grid is the ground truth; the coefficients carry a
/// stored reconstruction-error estimate.
#[derive(Debug, Clone)]
pub struct PeriodicMatrixFunction {
    period: f64,
    bandwidth: usize,
    /// 2*bandwidth + 1 coefficients, index i holds harmonic n = i - bandwidth.
    coeffs: Vec<CMat>,
    /// Uniform samples over [0, T), empty when built directly from coefficients.
    grid: Vec<CMat>,
    /// Sup over the grid of the max-abs reconstruction error.
    truncation_error: f64,
    /// Set when the edge coefficient is not negligible (possible aliasing).
    aliasing_flagged: bool,
}

impl PeriodicMatrixFunction {
    /// Fourier coefficients of `sampler` by uniform quadrature.
    ///
    /// `quadrature_points >= 4 * bandwidth` is required as an anti-aliasing
    /// margin.
    pub fn from_sampler<F>(
        sampler: F,
        period: f64,
        bandwidth: usize,
        quadrature_points: usize,
    ) -> Result<Self>
    where
        F: Fn(f64) -> CMat,
    {
        if period <= 0.0 || !period.is_finite() {
            return Err(Error::InvalidInput(format!("period {period} must be positive")));
        }
        if quadrature_points < (4 * bandwidth).max(4) {
            return Err(Error::InvalidInput(format!(
                "quadrature_points {quadrature_points} < 4 * bandwidth = {}",
                4 * bandwidth
            )));
        }
        let m = quadrature_points;
        let grid: Vec<CMat> = (0..m).map(|k| sampler(k as f64 * period / m as f64)).collect();
        for g in &grid {
            if !matrix::all_finite(g) {
                return Err(Error::InvalidInput("sampler returned non-finite entries".into()));
            }
        }
        Self::from_grid(period, bandwidth, grid)
    }

    /// Fourier coefficients from a uniform grid of samples over [0, T).
    pub fn from_grid(period: f64, bandwidth: usize, grid: Vec<CMat>) -> Result<Self> {
        let m = grid.len();
        if m < (4 * bandwidth).max(4) {
            return Err(Error::InvalidInput(format!(
                "grid of {m} points is below the 4 * bandwidth = {} anti-aliasing margin",
                4 * bandwidth
            )));
        }
        let omega = 2.0 * std::f64::consts::PI / period;
        let (rows, cols) = grid[0].dim();
        let mut coeffs = Vec::with_capacity(2 * bandwidth + 1);
        for i in 0..=2 * bandwidth {
            let n = i as i64 - bandwidth as i64;
            let mut acc: CMat = ndarray::Array2::zeros((rows, cols));
            for (k, g) in grid.iter().enumerate() {
                let t = k as f64 * period / m as f64;
                let phase = Complex64::new(0.0, -(n as f64) * omega * t).exp();
                acc = acc + g.mapv(|z| z * phase);
            }
            coeffs.push(acc.mapv(|z| z / m as f64));
        }

        let mut f = PeriodicMatrixFunction {
            period,
            bandwidth,
            coeffs,
            grid,
            truncation_error: 0.0,
            aliasing_flagged: false,
        };
        f.truncation_error = f.reconstruction_error_on_grid();
        f.aliasing_flagged = f.edge_coefficient_ratio() > ALIASING_RATIO;
        Ok(f)
    }

    /// Build directly from harmonic/coefficient pairs.
    pub fn from_coeffs(period: f64, pairs: Vec<(i64, CMat)>) -> Result<Self> {
        if period <= 0.0 || !period.is_finite() {
            return Err(Error::InvalidInput(format!("period {period} must be positive")));
        }
        if pairs.is_empty() {
            return Err(Error::InvalidInput("no Fourier coefficients given".into()));
        }
        let bw = pairs.iter().map(|(n, _)| n.unsigned_abs() as usize).max().unwrap();
        let dim = pairs[0].1.nrows();
        let cols = pairs[0].1.ncols();
        let mut coeffs: Vec<CMat> = vec![ndarray::Array2::zeros((dim, cols)); 2 * bw + 1];
        for (n, c) in pairs {
            if c.nrows() != dim || c.ncols() != cols {
                return Err(Error::DimensionMismatch("inconsistent coefficient dimensions".into()));
            }
            if !matrix::all_finite(&c) {
                return Err(Error::InvalidInput("non-finite Fourier coefficient".into()));
            }
            let i = (n + bw as i64) as usize;
            coeffs[i] = &coeffs[i] + &c;
        }
        Ok(PeriodicMatrixFunction {
            period,
            bandwidth: bw,
            coeffs,
            grid: Vec::new(),
            truncation_error: 0.0,
            aliasing_flagged: false,
        })
    }

    /// Constant function `t -> value`.
    pub fn constant(period: f64, value: CMat) -> Result<Self> {
        Self::from_coeffs(period, vec![(0, value)])
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn omega(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.period
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    /// Coefficient `f_n`; zero outside the stored band.
    pub fn coeff(&self, n: i64) -> CMat {
        if n.unsigned_abs() as usize > self.bandwidth {
            let (r, c) = self.coeffs[0].dim();
            return ndarray::Array2::zeros((r, c));
        }
        self.coeffs[(n + self.bandwidth as i64) as usize].clone()
    }

    pub fn coeff_ref(&self, n: i64) -> Option<&CMat> {
        if n.unsigned_abs() as usize > self.bandwidth {
            None
        } else {
            Some(&self.coeffs[(n + self.bandwidth as i64) as usize])
        }
    }

    /// Evaluate the truncated series `sum_n f_n e^{i n Omega t}`.
    pub fn eval(&self, t: f64) -> CMat {
        let omega = self.omega();
        let (r, c) = self.coeffs[0].dim();
        let mut acc: CMat = ndarray::Array2::zeros((r, c));
        for (i, f) in self.coeffs.iter().enumerate() {
            let n = i as i64 - self.bandwidth as i64;
            let phase = Complex64::new(0.0, n as f64 * omega * t).exp();
            acc = acc + f.mapv(|z| z * phase);
        }
        acc
    }

    pub fn grid(&self) -> &[CMat] {
        &self.grid
    }

    pub fn grid_time(&self, k: usize) -> f64 {
        k as f64 * self.period / self.grid.len() as f64
    }

    /// Sup over the grid of `|eval(t_k) - f(t_k)|_max`.
    pub fn reconstruction_error_on_grid(&self) -> f64 {
        let m = self.grid.len();
        let mut worst = 0.0f64;
        for (k, g) in self.grid.iter().enumerate() {
            let t = k as f64 * self.period / m as f64;
            worst = worst.max(matrix::max_abs(&(&self.eval(t) - g)));
        }
        worst
    }

    pub fn truncation_error(&self) -> f64 {
        self.truncation_error
    }

    pub fn aliasing_flagged(&self) -> bool {
        self.aliasing_flagged
    }

    fn edge_coefficient_ratio(&self) -> f64 {
        if self.bandwidth == 0 {
            return 0.0;
        }
        let max_norm = self
            .coeffs
            .iter()
            .map(matrix::max_abs)
            .fold(0.0f64, f64::max)
            .max(1e-300);
        let edge = matrix::max_abs(&self.coeffs[0])
            .max(matrix::max_abs(&self.coeffs[2 * self.bandwidth]));
        edge / max_norm
    }

    /// Operator-norm tail profile: `sum_{|n| > m} ||f_n||` for m = 0..bandwidth.
    pub fn tail_sums(&self) -> Result<Vec<f64>> {
        let norms: Vec<f64> = self
            .coeffs
            .iter()
            .map(matrix::operator_norm)
            .collect::<Result<_>>()?;
        let mut out = Vec::with_capacity(self.bandwidth + 1);
        for m in 0..=self.bandwidth {
            let mut s = 0.0;
            for (i, nrm) in norms.iter().enumerate() {
                let n = (i as i64 - self.bandwidth as i64).unsigned_abs() as usize;
                if n > m {
                    s += nrm;
                }
            }
            out.push(s);
        }
        Ok(out)
    }

    /// Apply a coefficient-wise linear transformation (e.g. a superoperator
    /// dual), preserving the harmonic labels.
    pub fn map_coeffs<F>(&self, f: F) -> Self
    where
        F: Fn(&CMat) -> CMat,
    {
        PeriodicMatrixFunction {
            period: self.period,
            bandwidth: self.bandwidth,
            coeffs: self.coeffs.iter().map(&f).collect(),
            grid: Vec::new(),
            truncation_error: self.truncation_error,
            aliasing_flagged: self.aliasing_flagged,
        }
    }
}
