//! Flat Green's function `Gamma(z, xi) = g (y^2 + |x - xi|^2)^(-(n-2g)/2)`.

use crate::error::{Error, Result};
use crate::params::FracParams;
use crate::quadrature::gk::{integrate, GkConfig};
use crate::quadrature::sphere_area;

pub fn green_flat(y: f64, x: &[f64], xi: &[f64], params: &FracParams, g_green: f64) -> Result<f64> {
    let d2: f64 = x.iter().zip(xi).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() + y * y;
    if d2 == 0.0 {
        return Err(Error::InvalidArgument("Green's function evaluated at its pole".into()));
    }
    Ok(g_green * d2.powf(-params.bubble_power()))
}

/// `int_{S^n_+} theta_y^(1-2g) dtheta = |S^(n-1)| int_0^(pi/2) sin^(1-2g) cos^(n-1)`.
pub fn weighted_hemisphere(params: &FracParams) -> Result<f64> {
    let g = params.gamma();
    let n = params.n();
    let (v, _, _, ok) = integrate(
        |phi: f64| phi.sin().powf(1.0 - 2.0 * g) * phi.cos().powi(n as i32 - 1),
        &[0.0, std::f64::consts::FRAC_PI_4, std::f64::consts::FRAC_PI_2],
        &GkConfig::new(0.0, 1e-13, 1_000_000),
    );
    if !ok {
        return Err(Error::BudgetExhausted { what: "weighted hemisphere".into(), budget: 1_000_000, err: f64::NAN });
    }
    Ok(sphere_area(n) * v)
}

/// The constant `g` for which `-d*_g y^(1-2g) d_y Gamma` has unit mass: the
/// weighted flux through a small half-sphere around the pole is
/// `(n - 2g) g |S^n_+|_w`, so `g = 1 / (d*_g (n - 2g) |S^n_+|_w)`.
pub fn green_normalization(params: &FracParams, d_star: f64) -> Result<f64> {
    let w = weighted_hemisphere(params)?;
    Ok(1.0 / (d_star * (params.nf() - 2.0 * params.gamma()) * w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::make_params;

    #[test]
    fn symmetric_and_singular() {
        let p = make_params(2, 0.25).unwrap();
        let a = green_flat(0.3, &[0.1, 0.2], &[1.0, -1.0], &p, 0.7).unwrap();
        let b = green_flat(0.3, &[1.0, -1.0], &[0.1, 0.2], &p, 0.7).unwrap();
        assert_eq!(a, b);
        assert!(green_flat(0.0, &[1.0, 1.0], &[1.0, 1.0], &p, 1.0).is_err());
    }

    #[test]
    fn hemisphere_at_half_is_half_sphere() {
        // gamma = 1/2 removes the weight.
        let p = make_params(2, 0.5).unwrap();
        assert!((weighted_hemisphere(&p).unwrap() - 2.0 * std::f64::consts::PI).abs() < 1e-11);
    }
}
