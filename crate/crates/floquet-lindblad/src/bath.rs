//! Reservoir spectral densities.
//!
//! A bath is a map from angular frequency to a Hermitian PSD rate matrix
//! over the coupling index set. Thermal built-ins satisfy the KMS (detailed
//! balance) ratio `gamma(-w) = e^{-beta w} gamma(w)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{self, CMat};

/// Built-in bath spectral densities; the rate matrix over `n_couplings`
/// channels is diagonal, `gamma_kk'(w) = delta_kk' * gamma(w)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum BathSpectrum {
    /// Frequency-independent rate `gamma(w) = g` (the infinite-temperature
    /// limit: KMS with beta = 0).
    Flat { g: f64 },
    /// Ohmic density with exponential cutoff at inverse temperature `beta`:
    /// `gamma(w) = g * w * (1 + coth(beta w / 2)) / 2 * e^{-|w|/cutoff}`,
    /// extended to `w = 0` by its analytic limit `g / beta`.
    Ohmic { g: f64, beta: f64, cutoff: f64 },
}

impl BathSpectrum {
    pub fn validate(&self) -> Result<()> {
        match *self {
            BathSpectrum::Flat { g } => {
                if !(g.is_finite() && g >= 0.0) {
                    return Err(Error::InvalidBath(format!("flat bath rate g = {g}")));
                }
            }
            BathSpectrum::Ohmic { g, beta, cutoff } => {
                if !(g.is_finite() && g >= 0.0) {
                    return Err(Error::InvalidBath(format!("ohmic coupling g = {g}")));
                }
                if !(beta.is_finite() && beta > 0.0) {
                    return Err(Error::InvalidBath(format!("ohmic beta = {beta}")));
                }
                if !(cutoff.is_finite() && cutoff > 0.0) {
                    return Err(Error::InvalidBath(format!("ohmic cutoff = {cutoff}")));
                }
            }
        }
        Ok(())
    }

    /// Scalar rate at angular frequency `w`.
    pub fn rate(&self, w: f64) -> f64 {
        match *self {
            BathSpectrum::Flat { g } => g,
            BathSpectrum::Ohmic { g, beta, cutoff } => {
                if w == 0.0 || (beta * w).abs() < 1e-12 {
                    g / beta
                } else {
                    let coth = 1.0 / (0.5 * beta * w).tanh();
                    g * w * (1.0 + coth) / 2.0 * (-w.abs() / cutoff).exp()
                }
            }
        }
    }

    /// Rate matrix over the coupling index set.
    pub fn rate_matrix(&self, w: f64, n_couplings: usize) -> Result<CMat> {
        let g = self.rate(w);
        if !g.is_finite() || g < -1e-10 {
            return Err(Error::InvalidBath(format!("rate {g} at frequency {w}")));
        }
        Ok(matrix::identity(n_couplings).mapv(|z| z * Complex64::new(g, 0.0)))
    }

    pub fn inverse_temperature(&self) -> f64 {
        match *self {
            BathSpectrum::Flat { .. } => 0.0,
            BathSpectrum::Ohmic { beta, .. } => beta,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn flat_is_constant_and_psd() {
        let b = BathSpectrum::Flat { g: 0.3 };
        for w in [-5.0, -0.1, 0.0, 2.0] {
            assert_relative_eq!(b.rate(w), 0.3);
            let m = b.rate_matrix(w, 2).unwrap();
            assert!(matrix::is_positive_semidefinite(&m, 1e-10).unwrap());
        }
    }

    #[test]
    fn ohmic_kms_ratio() {
        let beta = 1.3;
        let b = BathSpectrum::Ohmic { g: 0.2, beta, cutoff: 10.0 };
        for w in [0.3, 1.0, 2.5, 4.0] {
            let ratio = b.rate(-w) / b.rate(w);
            assert_relative_eq!(ratio, (-beta * w).exp(), epsilon = 1e-9);
        }
    }

    #[test]
    fn ohmic_zero_frequency_limit() {
        let b = BathSpectrum::Ohmic { g: 0.2, beta: 2.0, cutoff: 10.0 };
        assert_relative_eq!(b.rate(0.0), 0.1, epsilon = 1e-12);
        // continuity: small w approaches the limit
        assert_relative_eq!(b.rate(1e-7), 0.1, epsilon = 1e-6);
    }

    #[test]
    fn ohmic_rates_nonnegative() {
        let b = BathSpectrum::Ohmic { g: 0.5, beta: 0.7, cutoff: 5.0 };
        for k in -40..=40 {
            let w = k as f64 * 0.25;
            assert!(b.rate(w) >= 0.0, "negative rate at w = {w}");
        }
    }

    #[test]
    fn validation_rejects_bad_parameters() {
        assert!(BathSpectrum::Flat { g: -1.0 }.validate().is_err());
        assert!(BathSpectrum::Ohmic { g: 0.1, beta: 0.0, cutoff: 1.0 }.validate().is_err());
        assert!(BathSpectrum::Ohmic { g: 0.1, beta: 1.0, cutoff: -2.0 }.validate().is_err());
    }

    #[test]
    fn config_round_trip() {
        let b = BathSpectrum::Ohmic { g: 0.1, beta: 1.0, cutoff: 10.0 };
        let s = serde_json::to_string(&b).unwrap();
        assert!(s.contains("\"type\":\"ohmic\""));
        let back: BathSpectrum = serde_json::from_str(&s).unwrap();
        assert_relative_eq!(back.rate(1.0), b.rate(1.0));
    }
}
