//! Compactifying substitutions for unbounded intervals.
//!
//! A half-line `[c, inf)` is mapped onto `u in [0, 1)` by
//! `x = c + L((1-u)^(-k) - 1)` with `k = 1/(q-1)`, where `q` is the declared
//! decay exponent of the integrand. For `q = 2` this is the rational form of
//! the tangent substitution; for other `q` it makes `f(x) dx/du` bounded at
//! `u = 1` for integrands that decay like `x^-q`.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailMap {
    pub origin: f64,
    pub scale: f64,
    kappa: f64,
}

impl TailMap {
    /// `decay` must exceed 1.
    pub fn new(origin: f64, scale: f64, decay: f64) -> Self {
        let kappa = (1.0 / (decay - 1.0)).clamp(0.05, 20.0);
        Self { origin, scale, kappa }
    }

    /// Distance from the origin and Jacobian at `u`. At `u = 1` (reachable
    /// through rounding) the Jacobian is reported as zero.
    #[inline]
    pub fn forward(&self, u: f64) -> (f64, f64) {
        let w = 1.0 - u;
        if w <= 0.0 {
            return (f64::INFINITY, 0.0);
        }
        let p = w.powf(-self.kappa);
        (self.scale * (p - 1.0), self.scale * self.kappa * p / w)
    }

    pub fn inverse(&self, dist: f64) -> f64 {
        1.0 - (1.0 + dist / self.scale).powf(-1.0 / self.kappa)
    }
}

/// The real line mapped onto `(-1, 1)` by two tail maps glued at `origin`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineMap {
    tail: TailMap,
}

impl LineMap {
    pub fn new(origin: f64, scale: f64, decay: f64) -> Self {
        Self { tail: TailMap::new(origin, scale, decay) }
    }

    #[inline]
    pub fn forward(&self, u: f64) -> (f64, f64) {
        let (d, j) = self.tail.forward(u.abs());
        (self.tail.origin + d.copysign(u), j)
    }

    pub fn inverse(&self, x: f64) -> f64 {
        let d = x - self.tail.origin;
        self.tail.inverse(d.abs()).copysign(d)
    }

    /// Partition of `(-1, 1)` containing the images of `breaks`.
    pub fn cuts(&self, breaks: &[f64]) -> Vec<f64> {
        let mut c = vec![-1.0, 0.0, 1.0];
        c.extend(breaks.iter().map(|&b| self.inverse(b)));
        normalize_cuts(c)
    }
}

pub(crate) fn normalize_cuts(mut c: Vec<f64>) -> Vec<f64> {
    c.retain(|v| v.is_finite());
    c.sort_by(f64::total_cmp);
    c.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let m = LineMap::new(0.5, 2.0, 1.5);
        for x in [-30.0, -1.0, 0.5, 0.7, 12.0] {
            let u = m.inverse(x);
            assert!((m.forward(u).0 - x).abs() < 1e-10 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn jacobian_matches_difference() {
        let t = TailMap::new(0.0, 1.3, 2.7);
        let u = 0.4;
        let h = 1e-6;
        let fd = (t.forward(u + h).0 - t.forward(u - h).0) / (2.0 * h);
        assert!((fd - t.forward(u).1).abs() < 1e-6 * fd);
    }
}
