//! Spectral route to the fractional Laplacian: multiply the discrete Fourier
//! transform of periodic samples by `|xi|^(2 gamma)`.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::fraclap::ScalarField;
use crate::error::{Error, Result};
use crate::params::FracParams;

/// Default bound on `max |u|` over the box faces relative to `max |u|`.
pub const DEFAULT_BOUNDARY_THRESHOLD: f64 = 0.25;

/// Cubic periodic grid `x_i = (i - N/2) h`, `i = 0..N`, on every axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicGrid {
    pub n: usize,
    pub points: usize,
    pub spacing: f64,
}

impl PeriodicGrid {
    /// Grid covering `[-half_width, half_width)` with spacing `h`.
    pub fn new(n: usize, half_width: f64, h: f64) -> Result<Self> {
        if !(half_width > 0.0 && h > 0.0) || n == 0 || n > 3 {
            return Err(Error::InvalidArgument("periodic grid needs n in 1..=3 and positive extents".into()));
        }
        let points = (2.0 * half_width / h).round() as usize;
        if points < 4 || points % 2 != 0 {
            return Err(Error::InvalidArgument(format!("2 L / h must be an even integer >= 4 (got {points})")));
        }
        Ok(Self { n, points, spacing: h })
    }

    pub fn half_width(&self) -> f64 {
        0.5 * self.points as f64 * self.spacing
    }

    pub fn len(&self) -> usize {
        self.points.pow(self.n as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn coord(&self, i: usize) -> f64 {
        (i as f64 - (self.points / 2) as f64) * self.spacing
    }

    /// Flat index of the node at `x`, if `x` lies on the grid.
    pub fn index_of(&self, x: &[f64]) -> Option<usize> {
        let mut idx = 0;
        for &xi in x {
            let k = xi / self.spacing + (self.points / 2) as f64;
            let kr = k.round();
            if (k - kr).abs() > 1e-9 || kr < 0.0 || kr >= self.points as f64 {
                return None;
            }
            idx = idx * self.points + kr as usize;
        }
        Some(idx)
    }

    fn multi_index(&self, mut flat: usize) -> [usize; 3] {
        let mut m = [0; 3];
        for d in (0..self.n).rev() {
            m[d] = flat % self.points;
            flat /= self.points;
        }
        m
    }
}

/// Samples of a field on a periodic grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    pub grid: PeriodicGrid,
    pub values: Vec<f64>,
}

impl SpectralField {
    pub fn sample(field: &dyn ScalarField, grid: PeriodicGrid) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        let mut x = vec![0.0; grid.n];
        for flat in 0..grid.len() {
            let m = grid.multi_index(flat);
            for d in 0..grid.n {
                x[d] = grid.coord(m[d]);
            }
            values.push(field.value(&x));
        }
        Self { grid, values }
    }

    /// `max |u|` over the faces of the box divided by `max |u|`.
    pub fn boundary_ratio(&self) -> f64 {
        let peak = self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if peak == 0.0 {
            return 0.0;
        }
        let mut edge: f64 = 0.0;
        for (flat, v) in self.values.iter().enumerate() {
            let m = self.grid.multi_index(flat);
            if m[..self.grid.n].iter().any(|&k| k == 0 || k + 1 == self.grid.points) {
                edge = edge.max(v.abs());
            }
        }
        edge / peak
    }
}

fn fft_axes(data: &mut [Complex<f64>], grid: &PeriodicGrid, inverse: bool) {
    let npts = grid.points;
    let mut planner = FftPlanner::new();
    let fft = if inverse { planner.plan_fft_inverse(npts) } else { planner.plan_fft_forward(npts) };
    let mut line = vec![Complex::new(0.0, 0.0); npts];
    let mut scratch = vec![Complex::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    for axis in 0..grid.n {
        let stride = npts.pow((grid.n - 1 - axis) as u32);
        let block = stride * npts;
        for start in (0..data.len()).step_by(block) {
            for offset in 0..stride {
                let base = start + offset;
                for k in 0..npts {
                    line[k] = data[base + k * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for k in 0..npts {
                    data[base + k * stride] = line[k];
                }
            }
        }
    }
}

/// `(-Delta)^gamma` of periodic samples via the multiplier `|xi|^(2 gamma)`.
pub fn frac_laplacian_spectral(u: &SpectralField, params: &FracParams) -> Result<SpectralField> {
    let grid = u.grid;
    if grid.n != params.n() || u.values.len() != grid.len() {
        return Err(Error::InvalidArgument("samples do not match the grid or n".into()));
    }
    let npts = grid.points;
    let mut data: Vec<Complex<f64>> = u.values.iter().map(|&v| Complex::new(v, 0.0)).collect();
    fft_axes(&mut data, &grid, false);
    let dk = 2.0 * std::f64::consts::PI / (npts as f64 * grid.spacing);
    let freq: Vec<f64> = (0..npts)
        .map(|j| if j <= npts / 2 { j as f64 } else { j as f64 - npts as f64 } * dk)
        .map(|k| k * k)
        .collect();
    let g = params.gamma();
    let norm = 1.0 / grid.len() as f64;
    for (flat, z) in data.iter_mut().enumerate() {
        let m = grid.multi_index(flat);
        let k2: f64 = m[..grid.n].iter().map(|&j| freq[j]).sum();
        *z *= if k2 == 0.0 { 0.0 } else { k2.powf(g) * norm };
    }
    fft_axes(&mut data, &grid, true);
    Ok(SpectralField { grid, values: data.iter().map(|z| z.re).collect() })
}

/// Point values from the spectral route with a periodization correction.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralEstimate {
    /// Values on the box of half-width `L`.
    pub base: Vec<f64>,
    /// Values on the box of half-width `1.5 L`.
    pub enlarged: Vec<f64>,
    /// Extrapolation `L -> infinity` assuming an `L^-n` periodization error.
    pub extrapolated: Vec<f64>,
    /// Largest relative change of the extrapolated values when `h` is doubled.
    pub resolution_gap: f64,
    pub boundary_ratio: f64,
}

/// Evaluates `(-Delta)^gamma u` at grid-aligned `points` on boxes of half-width
/// `L` and `1.5 L`, extrapolating in `L`, and at spacings `h` and `2h`.
pub fn spectral_point_values(
    field: &dyn ScalarField,
    params: &FracParams,
    half_width: f64,
    h: f64,
    points: &[Vec<f64>],
    boundary_threshold: f64,
) -> Result<SpectralEstimate> {
    let n = params.n();
    let run = |l: f64, h: f64| -> Result<(Vec<f64>, f64)> {
        let grid = PeriodicGrid::new(n, l, h)?;
        let u = SpectralField::sample(field, grid);
        let ratio = u.boundary_ratio();
        if ratio > boundary_threshold {
            return Err(Error::BoxTooSmall { ratio, threshold: boundary_threshold });
        }
        let v = frac_laplacian_spectral(&u, params)?;
        let vals = points
            .iter()
            .map(|x| {
                grid.index_of(x)
                    .map(|i| v.values[i])
                    .ok_or_else(|| Error::InvalidArgument(format!("point {x:?} is not a grid node")))
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok((vals, ratio))
    };
    let f = 1.5f64.powi(n as i32);
    let extrapolate = |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| (f * y - x) / (f - 1.0)).collect() };
    let (base, ratio) = run(half_width, h)?;
    let (enlarged, _) = run(1.5 * half_width, h)?;
    let extrapolated = extrapolate(&base, &enlarged);
    let (cb, _) = run(half_width, 2.0 * h)?;
    let (ce, _) = run(1.5 * half_width, 2.0 * h)?;
    let coarse = extrapolate(&cb, &ce);
    let resolution_gap = extrapolated
        .iter()
        .zip(&coarse)
        .map(|(a, b)| ((a - b) / a).abs())
        .fold(0.0, f64::max);
    Ok(SpectralEstimate { base, enlarged, extrapolated, resolution_gap, boundary_ratio: ratio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::make_params;
    use std::f64::consts::PI;

    #[test]
    fn single_mode_is_an_eigenfunction() {
        let p = make_params(2, 0.3).unwrap();
        let grid = PeriodicGrid::new(2, 4.0, 0.25).unwrap();
        let k = [2.0 * PI / 8.0 * 3.0, 2.0 * PI / 8.0 * 1.0];
        let mut vals = Vec::new();
        for i in 0..grid.points {
            for j in 0..grid.points {
                vals.push((k[0] * grid.coord(i) + k[1] * grid.coord(j)).cos());
            }
        }
        let u = SpectralField { grid, values: vals.clone() };
        let v = frac_laplacian_spectral(&u, &p).unwrap();
        let mult = (k[0] * k[0] + k[1] * k[1]).powf(0.3);
        for (a, b) in v.values.iter().zip(&vals) {
            assert!((a - mult * b).abs() < 1e-11);
        }
    }

    #[test]
    fn zero_maps_to_zero() {
        let p = make_params(1, 0.4).unwrap();
        let grid = PeriodicGrid::new(1, 2.0, 0.5).unwrap();
        let v = frac_laplacian_spectral(&SpectralField { grid, values: vec![0.0; grid.len()] }, &p).unwrap();
        assert!(v.values.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn grid_indexing() {
        let g = PeriodicGrid::new(2, 2.0, 0.5).unwrap();
        assert_eq!(g.points, 8);
        assert_eq!(g.index_of(&[0.0, 0.0]), Some(4 * 8 + 4));
        assert_eq!(g.index_of(&[0.25, 0.0]), None);
        assert!(PeriodicGrid::new(2, 1.0, 0.3).is_err());
    }
}
