//! Weighted half-space harmonics for `D = -d_y(y^(1-2g) d_y) - y^(1-2g) Delta_x`.
//!
//! Coefficients live in the field of rational functions of `g` over `Q`, so
//! applying `D` to a constructed harmonic yields an exactly zero polynomial.
//! Two families are built from a homogeneous seed `P_m(x)`:
//! `sum_l y^(2l) P_(m-2l)` (integer degree `m`) and
//! `sum_l y^(2g+2l) P_(m-2l)` (degree `m + 2g`), with
//! `P_(m-2l-2) = -Delta P_(m-2l) / ((2l+2)(2l+2 -/+ 2g))`.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::params::FracParams;

/// Polynomial in `g` with rational coefficients, lowest degree first.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct GPoly(Vec<BigRational>);

impl GPoly {
    pub fn constant(c: i64) -> Self {
        Self(vec![BigRational::from_integer(BigInt::from(c))]).trimmed()
    }

    /// `a + b g`.
    pub fn linear(a: i64, b: i64) -> Self {
        Self(vec![BigRational::from_integer(a.into()), BigRational::from_integer(b.into())]).trimmed()
    }

    fn trimmed(mut self) -> Self {
        while self.0.last().is_some_and(|c| c.is_zero()) {
            self.0.pop();
        }
        self
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn add(&self, o: &Self) -> Self {
        let len = self.0.len().max(o.0.len());
        let z = BigRational::zero();
        Self((0..len).map(|i| self.0.get(i).unwrap_or(&z) + o.0.get(i).unwrap_or(&z)).collect()).trimmed()
    }

    pub fn neg(&self) -> Self {
        Self(self.0.iter().map(|c| -c).collect())
    }

    pub fn mul(&self, o: &Self) -> Self {
        if self.is_zero() || o.is_zero() {
            return Self::default();
        }
        let mut out = vec![BigRational::zero(); self.0.len() + o.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in o.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self(out).trimmed()
    }

    pub fn eval(&self, g: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * g + c.to_f64().unwrap_or(f64::NAN))
    }
}

/// Rational function `num / den` of `g`; not reduced.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GRat {
    num: GPoly,
    den: GPoly,
}

impl GRat {
    pub fn from_poly(p: GPoly) -> Self {
        Self { num: p, den: GPoly::constant(1) }
    }

    pub fn zero() -> Self {
        Self::from_poly(GPoly::default())
    }

    pub fn one() -> Self {
        Self::from_poly(GPoly::constant(1))
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn add(&self, o: &Self) -> Self {
        if self.den == o.den {
            return Self { num: self.num.add(&o.num), den: self.den.clone() };
        }
        Self { num: self.num.mul(&o.den).add(&o.num.mul(&self.den)), den: self.den.mul(&o.den) }
    }

    pub fn mul_poly(&self, p: &GPoly) -> Self {
        Self { num: self.num.mul(p), den: self.den.clone() }
    }

    pub fn div_poly(&self, p: &GPoly) -> Self {
        Self { num: self.num.clone(), den: self.den.mul(p) }
    }

    pub fn eval(&self, g: f64) -> f64 {
        self.num.eval(g) / self.den.eval(g)
    }
}

/// Monomial `y^(e + 2g f) x^alpha`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug, Hash)]
pub struct Monomial {
    pub e: i32,
    pub f: i32,
    pub alpha: Vec<u32>,
}

/// Polynomial in `(y, x)` with `y`-exponents in `Z + 2g Z` and coefficients in `Q(g)`.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct YxPoly {
    pub terms: BTreeMap<Monomial, GRat>,
}

impl YxPoly {
    pub fn add_term(&mut self, m: Monomial, c: GRat) {
        let entry = self.terms.entry(m).or_insert_with(GRat::zero);
        *entry = entry.add(&c);
    }

    /// Drops vanishing coefficients.
    pub fn pruned(mut self) -> Self {
        self.terms.retain(|_, c| !c.is_zero());
        self
    }

    pub fn is_zero(&self) -> bool {
        self.terms.values().all(|c| c.is_zero())
    }

    /// Euclidean Laplacian in `x` (the `y`-part is untouched).
    pub fn laplacian_x(&self) -> Self {
        let mut out = Self::default();
        for (m, c) in &self.terms {
            for i in 0..m.alpha.len() {
                let a = m.alpha[i];
                if a >= 2 {
                    let mut alpha = m.alpha.clone();
                    alpha[i] -= 2;
                    out.add_term(Monomial { alpha, ..m.clone() }, c.mul_poly(&GPoly::constant((a * (a - 1)) as i64)));
                }
            }
        }
        out.pruned()
    }

    /// `D p` as an exact polynomial.
    pub fn apply_d(&self) -> Self {
        let mut out = Self::default();
        for (m, c) in &self.terms {
            // -d_y(y^(1-2g) d_y y^k) = -k (k - 2g) y^(k-1-2g), k = e + 2g f.
            let k = GPoly::linear(m.e as i64, 2 * m.f as i64);
            let k2 = GPoly::linear(m.e as i64, 2 * (m.f as i64 - 1));
            let factor = k.mul(&k2).neg();
            if !factor.is_zero() {
                out.add_term(Monomial { e: m.e - 1, f: m.f - 1, alpha: m.alpha.clone() }, c.mul_poly(&factor));
            }
        }
        let lap = self.laplacian_x();
        for (m, c) in lap.terms {
            // -y^(1-2g) Delta_x.
            out.add_term(Monomial { e: m.e + 1, f: m.f - 1, alpha: m.alpha }, c.mul_poly(&GPoly::constant(-1)));
        }
        out.pruned()
    }

    pub fn eval(&self, g: f64, y: f64, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(m, c)| {
                let xm: f64 = m.alpha.iter().zip(x).map(|(&a, &xi)| xi.powi(a as i32)).product();
                c.eval(g) * y.powf(m.e as f64 + 2.0 * g * m.f as f64) * xm
            })
            .sum()
    }
}

/// Which ladder to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DegreeClass {
    /// `sum y^(2l) P_(m-2l)`, degree `m`.
    NeumannInt(u32),
    /// `sum y^(2g+2l) P_(m-2l)`, degree `m + 2g`.
    DirichletFrac(u32),
}

impl DegreeClass {
    pub fn m(&self) -> u32 {
        match *self {
            DegreeClass::NeumannInt(m) | DegreeClass::DirichletFrac(m) => m,
        }
    }

    fn frac(&self) -> i32 {
        matches!(self, DegreeClass::DirichletFrac(_)) as i32
    }
}

impl fmt::Display for DegreeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DegreeClass::NeumannInt(m) => write!(f, "neumann_int({m})"),
            DegreeClass::DirichletFrac(m) => write!(f, "dirichlet_frac({m})"),
        }
    }
}

/// Largest degree handled by the exact construction.
pub const MAX_DEGREE: u32 = 6;

#[derive(Debug, Clone, PartialEq)]
pub struct DHarmonic {
    pub class: DegreeClass,
    pub n: usize,
    pub poly: YxPoly,
}

impl DHarmonic {
    /// Homogeneity degree at `g`.
    pub fn degree(&self, g: f64) -> f64 {
        self.class.m() as f64 + 2.0 * g * self.class.frac() as f64
    }

    /// Exact `D`-image; zero for a valid construction.
    pub fn residual(&self) -> YxPoly {
        self.poly.apply_d()
    }

    pub fn eval(&self, g: f64, y: f64, x: &[f64]) -> f64 {
        self.poly.eval(g, y, x)
    }
}

/// Homogeneous seed `sum c_alpha x^alpha` with integer coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Seed {
    pub terms: Vec<(i64, Vec<u32>)>,
}

impl Seed {
    pub fn monomial(alpha: Vec<u32>) -> Self {
        Self { terms: vec![(1, alpha)] }
    }

    /// `|x|^m` for even `m`, expanded.
    pub fn radial_power(n: usize, m: u32) -> Option<Self> {
        if m % 2 != 0 {
            return None;
        }
        let mut terms: BTreeMap<Vec<u32>, i64> = BTreeMap::new();
        terms.insert(vec![0; n], 1);
        for _ in 0..m / 2 {
            let mut next = BTreeMap::new();
            for (alpha, c) in &terms {
                for i in 0..n {
                    let mut a = alpha.clone();
                    a[i] += 2;
                    *next.entry(a).or_insert(0) += c;
                }
            }
            terms = next;
        }
        Some(Self { terms: terms.into_iter().map(|(a, c)| (c, a)).collect() })
    }

    fn degree(&self) -> Option<u32> {
        let d = self.terms.first()?.1.iter().sum::<u32>();
        self.terms.iter().all(|t| t.1.iter().sum::<u32>() == d).then_some(d)
    }
}

/// All monomials of degree `m` in `n` variables, plus `|x|^m` for even `m`.
pub fn standard_seeds(n: usize, m: u32) -> Vec<Seed> {
    fn rec(n: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Seed>) {
        if cur.len() + 1 == n {
            cur.push(left);
            out.push(Seed::monomial(cur.clone()));
            cur.pop();
            return;
        }
        for k in (0..=left).rev() {
            cur.push(k);
            rec(n, left - k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, m, &mut Vec::new(), &mut out);
    if m >= 2 {
        out.extend(Seed::radial_power(n, m));
    }
    out
}

/// Solves the `y^2`-ladder for `seed` exactly.
pub fn build_dharmonic(class: DegreeClass, seed: &Seed, params: &FracParams) -> Result<DHarmonic> {
    let m = class.m();
    if m > MAX_DEGREE {
        return Err(Error::InvalidArgument(format!("degree {m} above the cap {MAX_DEGREE}")));
    }
    if seed.degree() != Some(m) || seed.terms.iter().any(|t| t.1.len() != params.n()) {
        return Err(Error::InvalidArgument(format!("seed is not homogeneous of degree {m} in {} variables", params.n())));
    }
    if class.frac() == 1 {
        params.require_not_half("fractional D-harmonic")?;
    }
    let f = class.frac();
    let mut level = YxPoly::default();
    for (c, alpha) in &seed.terms {
        level.add_term(Monomial { e: 0, f, alpha: alpha.clone() }, GRat::from_poly(GPoly::constant(*c)));
    }
    let mut poly = YxPoly::default();
    let mut l = 0i64;
    loop {
        for (mo, c) in &level.terms {
            poly.add_term(mo.clone(), c.clone());
        }
        let lap = level.laplacian_x();
        if lap.is_zero() {
            break;
        }
        // (2l+2)(2l+2 -/+ 2g); the sign is - for the integer family.
        let sign = if f == 1 { 2 } else { -2 };
        let factor = GPoly::constant(2 * l + 2).mul(&GPoly::linear(2 * l + 2, sign));
        let at = factor.eval(params.gamma());
        if at.abs() < 1e-12 {
            return Err(Error::DegenerateRecurrence(format!("factor (2l+2)(2l+2{:+}g) vanishes at l = {l}", sign)));
        }
        let mut next = YxPoly::default();
        for (mo, c) in lap.terms {
            next.add_term(Monomial { e: mo.e + 2, ..mo }, c.div_poly(&factor).mul_poly(&GPoly::constant(-1)));
        }
        level = next.pruned();
        l += 1;
    }
    Ok(DHarmonic { class, n: params.n(), poly: poly.pruned() })
}

/// Every harmonic of both families for degrees `0..=max_degree` from
/// [`standard_seeds`].
pub fn all_dharmonics(params: &FracParams, max_degree: u32) -> Result<Vec<DHarmonic>> {
    let mut out = Vec::new();
    for m in 0..=max_degree {
        for seed in standard_seeds(params.n(), m) {
            out.push(build_dharmonic(DegreeClass::NeumannInt(m), &seed, params)?);
            out.push(build_dharmonic(DegreeClass::DirichletFrac(m), &seed, params)?);
        }
    }
    Ok(out)
}

/// `k (k + n - 2g)`.
pub fn eigenvalue(k: f64, params: &FracParams) -> f64 {
    k * (k + params.nf() - 2.0 * params.gamma())
}

/// Value, first and second derivative along one direction.
#[derive(Clone, Copy, Debug)]
struct Jet {
    v: f64,
    d: f64,
    dd: f64,
}

impl Jet {
    fn var(v: f64, active: bool) -> Self {
        Self { v, d: active as i32 as f64, dd: 0.0 }
    }

    fn mul(self, o: Self) -> Self {
        Self { v: self.v * o.v, d: self.d * o.v + self.v * o.d, dd: self.dd * o.v + 2.0 * self.d * o.d + self.v * o.dd }
    }

    fn powf(self, p: f64) -> Self {
        if p == 0.0 {
            return Self { v: 1.0, d: 0.0, dd: 0.0 };
        }
        let f = self.v.powf(p);
        let f1 = p * self.v.powf(p - 1.0);
        let f2 = p * (p - 1.0) * self.v.powf(p - 2.0);
        Self { v: f, d: f1 * self.d, dd: f2 * self.d * self.d + f1 * self.dd }
    }
}

/// `e(z) = A(z) / |z|^k` along coordinate `dir` (0 is `y`).
fn zero_homogeneous_jet(h: &DHarmonic, g: f64, z: &[f64], dir: usize) -> Jet {
    let k = h.degree(g);
    let vars: Vec<Jet> = z.iter().enumerate().map(|(i, &v)| Jet::var(v, i == dir)).collect();
    let mut a = Jet { v: 0.0, d: 0.0, dd: 0.0 };
    for (m, c) in &h.poly.terms {
        let mut t = vars[0].powf(m.e as f64 + 2.0 * g * m.f as f64);
        for (i, &p) in m.alpha.iter().enumerate() {
            t = t.mul(vars[i + 1].powf(p as f64));
        }
        let cv = c.eval(g);
        a = Jet { v: a.v + cv * t.v, d: a.d + cv * t.d, dd: a.dd + cv * t.dd };
    }
    let mut r2 = Jet { v: 0.0, d: 0.0, dd: 0.0 };
    for v in &vars {
        let s = v.mul(*v);
        r2 = Jet { v: r2.v + s.v, d: r2.d + s.d, dd: r2.dd + s.dd };
    }
    a.mul(r2.powf(-0.5 * k))
}

/// Largest `|D_S e - lambda_k y^(1-2g) e| / max|e|` over `points` on the
/// upper half-sphere, where `D_S e` is evaluated as `D` of the 0-homogeneous
/// extension of `e` by forward-mode differentiation.
pub fn eigen_residual(h: &DHarmonic, params: &FracParams, points: &[Vec<f64>]) -> f64 {
    let g = params.gamma();
    let lam = eigenvalue(h.degree(g), params);
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for z in points {
        let y = z[0];
        let jy = zero_homogeneous_jet(h, g, z, 0);
        let mut lap = jy.dd;
        for dir in 1..z.len() {
            lap += zero_homogeneous_jet(h, g, z, dir).dd;
        }
        let d_op = -(1.0 - 2.0 * g) * y.powf(-2.0 * g) * jy.d - y.powf(1.0 - 2.0 * g) * lap;
        worst = worst.max((d_op - lam * y.powf(1.0 - 2.0 * g) * jy.v).abs());
        scale = scale.max(jy.v.abs());
    }
    worst / scale.max(f64::MIN_POSITIVE)
}

/// `count` Halton points on the open upper half-sphere in `R^(n+1)`, `y`
/// first, with `y >= 0.05`.
pub fn halton_hemisphere(n: usize, count: usize) -> Vec<Vec<f64>> {
    const PRIMES: [u32; 4] = [2, 3, 5, 7];
    fn radical(mut i: u64, b: u32) -> f64 {
        let (mut f, mut r) = (1.0, 0.0);
        while i > 0 {
            f /= b as f64;
            r += f * (i % b as u64) as f64;
            i /= b as u64;
        }
        r
    }
    let mut out = Vec::with_capacity(count);
    let mut i = 1u64;
    while out.len() < count {
        let p: Vec<f64> = (0..=n).map(|d| 2.0 * radical(i, PRIMES[d]) - 1.0).collect();
        i += 1;
        let norm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(0.1..=1.0).contains(&norm) {
            continue;
        }
        let mut z: Vec<f64> = p.iter().map(|v| v / norm).collect();
        z[0] = z[0].abs();
        if z[0] >= 0.05 {
            out.push(z);
        }
    }
    out
}

/// `(m' + 2g)(m' + n) - (m - n + 1)(m + 1 - 2g)`.
pub fn solvability_dirichlet(m_prime: u32, m: u32, params: &FracParams) -> f64 {
    let (n, g2) = (params.nf(), 2.0 * params.gamma());
    let (mp, m) = (m_prime as f64, m as f64);
    (mp + g2) * (mp + n) - (m - n + 1.0) * (m + 1.0 - g2)
}

/// `m'(m' + n - 2g) - (m - n + 1 + 2g)(m + 1)`.
pub fn solvability_neumann(m_prime: u32, m: u32, params: &FracParams) -> f64 {
    let (n, g2) = (params.nf(), 2.0 * params.gamma());
    let (mp, m) = (m_prime as f64, m as f64);
    mp * (mp + n - g2) - (m - n + 1.0 + g2) * (m + 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    Dirichlet,
    Neumann,
}

impl Condition {
    pub fn eval(&self, m_prime: u32, m: u32, params: &FracParams) -> f64 {
        match self {
            Condition::Dirichlet => solvability_dirichlet(m_prime, m, params),
            Condition::Neumann => solvability_neumann(m_prime, m, params),
        }
    }

    /// Exact value at `g = 1/2` in integers.
    fn at_half(&self, n: i64, mp: i64, m: i64) -> i64 {
        match self {
            Condition::Dirichlet => (mp + 1) * (mp + n) - (m - n + 1) * m,
            Condition::Neumann => mp * (mp + n - 1) - (m - n + 2) * (m + 1),
        }
    }

    /// `d/dg` of the condition, exact in integers for the evaluated pair.
    fn slope(&self, n: i64, mp: i64, m: i64) -> i64 {
        match self {
            Condition::Dirichlet => 2 * (mp + n) + 2 * (m - n + 1),
            Condition::Neumann => -2 * mp - 2 * (m + 1),
        }
    }
}

/// Smallest `|value|` of a condition over `0 <= m', m <= bound`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepMin {
    pub min_abs: f64,
    pub at: (u32, u32),
}

pub fn solvability_sweep(cond: Condition, params: &FracParams, bound: u32) -> SweepMin {
    let mut best = SweepMin { min_abs: f64::INFINITY, at: (0, 0) };
    for mp in 0..=bound {
        for m in 0..=bound {
            let v = cond.eval(mp, m, params).abs();
            if v < best.min_abs {
                best = SweepMin { min_abs: v, at: (mp, m) };
            }
        }
    }
    best
}

/// All `(m', m)` within `bound` where the condition vanishes at `g = 1/2`.
pub fn find_half_degeneracy(cond: Condition, n: usize, search_bound: u32) -> Result<Vec<(u32, u32)>> {
    if search_bound > 1000 {
        return Err(Error::InvalidArgument("search bound above 1000".into()));
    }
    let n = n as i64;
    let mut out = Vec::new();
    for mp in 0..=search_bound as i64 {
        for m in 0..=search_bound as i64 {
            if cond.at_half(n, mp, m) == 0 {
                out.push((mp as u32, m as u32));
            }
        }
    }
    Ok(out)
}

/// Whether the condition changes sign across `g in [0.49, 0.51]` at a zero,
/// and its exact `g`-slope there.
pub fn crossing_is_simple(cond: Condition, n: usize, zero: (u32, u32)) -> Result<(bool, i64)> {
    let lo = FracParams::new(n, 0.49)?;
    let hi = FracParams::new(n, 0.51)?;
    let a = cond.eval(zero.0, zero.1, &lo);
    let b = cond.eval(zero.0, zero.1, &hi);
    let slope = cond.slope(n as i64, zero.0 as i64, zero.1 as i64);
    Ok((a * b < 0.0 && slope != 0, slope))
}

impl fmt::Display for YxPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(m, c)| {
                let num: Vec<String> = c.num.0.iter().map(|q| q.to_string()).collect();
                let den: Vec<String> = c.den.0.iter().map(|q| q.to_string()).collect();
                format!("[{}]/[{}] y^({}+{}*2g) x^{:?}", num.join(","), den.join(","), m.e, m.f, m.alpha)
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::make_params;

    #[test]
    fn quadratic_ladder() {
        let p = make_params(2, 0.25).unwrap();
        let seed = Seed::radial_power(2, 2).unwrap();
        let h = build_dharmonic(DegreeClass::NeumannInt(2), &seed, &p).unwrap();
        // |x|^2 - n/(2-2g) y^2 at g = 1/4: y^2 coefficient -4/3.
        let v = h.eval(0.25, 1.0, &[0.0, 0.0]);
        assert!((v + 4.0 / 3.0).abs() < 1e-14);
        assert!(h.residual().is_zero());
    }

    #[test]
    fn power_harmonic() {
        let p = make_params(3, 0.75).unwrap();
        let h = build_dharmonic(DegreeClass::DirichletFrac(0), &Seed::monomial(vec![0, 0, 0]), &p).unwrap();
        assert!(h.residual().is_zero());
        assert!((eigenvalue(h.degree(0.75), &p) - 1.5 * 3.0).abs() < 1e-14);
    }

    #[test]
    fn nonharmonic_is_detected() {
        let mut poly = YxPoly::default();
        poly.add_term(Monomial { e: 0, f: 0, alpha: vec![2, 0] }, GRat::one());
        assert!(!poly.apply_d().is_zero());
    }

    #[test]
    fn solvability_examples() {
        let p = make_params(2, 0.25).unwrap();
        assert!((solvability_dirichlet(0, 0, &p) - 1.5).abs() < 1e-15);
        assert!((solvability_neumann(1, 0, &p) - 3.0).abs() < 1e-15);
        assert_eq!(find_half_degeneracy(Condition::Dirichlet, 2, 1).unwrap(), vec![]);
    }
}
