//! Validated `(n, gamma)` pairs and the exponents derived from them.

use crate::error::{Error, Result};

/// Half-width of the band around `gamma = 1/2` rejected by the kernel-expansion
/// and spectral-solvability operations.
pub const HALF_GUARD: f64 = 1e-3;

/// Boundary dimension `n` and fractional order `gamma`, with derived exponents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FracParams {
    n: usize,
    gamma: f64,
    critical_exponent: f64,
    trace_weight: f64,
    near_half: bool,
}

/// Validates `(n, gamma)` and fills in the derived exponents.
pub fn make_params(n: usize, gamma: f64) -> Result<FracParams> {
    FracParams::new(n, gamma)
}

impl FracParams {
    pub fn new(n: usize, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::GammaOutOfRange(gamma));
        }
        if n == 0 {
            return Err(Error::ZeroDimension);
        }
        let nf = n as f64;
        if nf - 2.0 * gamma <= 0.0 {
            return Err(Error::DegenerateExponent { n, gamma });
        }
        Ok(Self {
            n,
            gamma,
            critical_exponent: (nf + 2.0 * gamma) / (nf - 2.0 * gamma),
            trace_weight: 1.0 - 2.0 * gamma,
            near_half: (gamma - 0.5).abs() < HALF_GUARD,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nf(&self) -> f64 {
        self.n as f64
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `(n + 2 gamma) / (n - 2 gamma)`, the power on the right of the bubble equation.
    pub fn critical_exponent(&self) -> f64 {
        self.critical_exponent
    }

    /// `1 - 2 gamma`, the power of `y` in the extension weight.
    pub fn trace_weight(&self) -> f64 {
        self.trace_weight
    }

    pub fn near_half(&self) -> bool {
        self.near_half
    }

    /// Critical Sobolev exponent `2n / (n - 2 gamma)`.
    pub fn sobolev_exponent(&self) -> f64 {
        2.0 * self.nf() / (self.nf() - 2.0 * self.gamma)
    }

    /// Bubble decay power `(n - 2 gamma) / 2`.
    pub fn bubble_power(&self) -> f64 {
        0.5 * (self.nf() - 2.0 * self.gamma)
    }

    /// `n / (n - 2 gamma)`, the balanced exponent of the higher interactions.
    pub fn half_sobolev(&self) -> f64 {
        self.nf() / (self.nf() - 2.0 * self.gamma)
    }

    /// Rejects parameters inside the `gamma = 1/2` guard band.
    pub fn require_not_half(&self, op: &'static str) -> Result<()> {
        if self.near_half {
            Err(Error::NearHalf(op))
        } else {
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_exponents() {
        let p = make_params(2, 0.25).unwrap();
        assert!((p.critical_exponent() - 5.0 / 3.0).abs() < 1e-15);
        assert!((p.trace_weight() - 0.5).abs() < 1e-15);
        assert!(!p.near_half());
    }

    #[test]
    fn half_flag() {
        assert!(make_params(3, 0.5).unwrap().near_half());
        assert!(make_params(3, 0.5 + 5e-4).unwrap().near_half());
        assert!(!make_params(3, 0.502).unwrap().near_half());
        assert!(make_params(3, 0.5).unwrap().require_not_half("x").is_err());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(make_params(1, 0.5), Err(Error::DegenerateExponent { .. })));
        assert!(matches!(make_params(1, 0.75), Err(Error::DegenerateExponent { .. })));
        assert!(make_params(1, 0.25).is_ok());
        assert!(matches!(make_params(2, 0.0), Err(Error::GammaOutOfRange(_))));
        assert!(matches!(make_params(2, 1.0), Err(Error::GammaOutOfRange(_))));
        assert!(matches!(make_params(2, f64::NAN), Err(Error::GammaOutOfRange(_))));
        assert!(matches!(make_params(0, 0.3), Err(Error::ZeroDimension)));
    }
}
