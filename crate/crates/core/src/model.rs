//! Shared domain types.

use crate::error::{Error, Result};

/// A standard bubble: centre `a` in R^n and scale `lambda > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bubble {
    center: Vec<f64>,
    scale: f64,
}

impl Bubble {
    pub fn new(center: Vec<f64>, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidArgument(format!("bubble scale must be positive, got {scale}")));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("bubble centre must be finite".into()));
        }
        Ok(Self { center, scale })
    }

    /// Unit bubble at the origin of R^n.
    pub fn unit(n: usize) -> Self {
        Self { center: vec![0.0; n], scale: 1.0 }
    }

    /// Bubble on the first axis at `x_1 = offset`.
    pub fn on_axis(n: usize, offset: f64, scale: f64) -> Result<Self> {
        let mut c = vec![0.0; n];
        c[0] = offset;
        Self::new(c, scale)
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn distance2(&self, x: &[f64]) -> f64 {
        self.center.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum()
    }

    pub fn translated(&self, by: &[f64]) -> Self {
        Self { center: self.center.iter().zip(by).map(|(a, b)| a + b).collect(), scale: self.scale }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(Bubble::new(vec![0.0], 0.0).is_err());
        assert!(Bubble::new(vec![f64::NAN], 1.0).is_err());
        assert!(Bubble::new(vec![0.0, 1.0], 2.0).is_ok());
    }
}
