//! Repulsive radial potentials `φ(r) = f(r/R) / r^s` with a decreasing regular part
//! `f` supported on `[0, 1]` (support radius `R`, normally 1).

use crate::quad::{integrate_1d, integrate_breaks, QuadSpec, Singularity};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Regular part `f` of the potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Shape {
    /// `f(x) = f0 (1 - x²)^q`.
    PolyBump { f0: f64, q: u32 },
    /// `f = f0` on `[0, flat]`, then a C² quintic taper down to `f(1) = 0`.
    Taper { f0: f64, flat: f64 },
    /// User polynomial `f(x) = Σ c_k x^k`.
    Poly { coeffs: Vec<f64> },
    /// Idealized `f ≡ f0`. Violates `f(1) = 0`; its support is unbounded unless an
    /// explicit range truncates it.
    PurePower { f0: f64 },
}

impl Shape {
    pub fn kind(&self) -> &'static str {
        match self {
            Shape::PolyBump { .. } => "poly_bump",
            Shape::Taper { .. } => "taper",
            Shape::Poly { .. } => "poly",
            Shape::PurePower { .. } => "pure_power",
        }
    }

    /// `(f, f', f'')` at `x ∈ [0, 1]`.
    fn eval(&self, x: f64) -> (f64, f64, f64) {
        match *self {
            Shape::PolyBump { f0, q } => {
                let u = 1.0 - x * x;
                let qf = q as f64;
                let uq2 = if q >= 2 { u.powi(q as i32 - 2) } else { 0.0 };
                let uq1 = if q >= 1 { u.powi(q as i32 - 1) } else { 0.0 };
                let f = f0 * u.powi(q as i32);
                let d1 = -2.0 * qf * x * uq1 * f0;
                let d2 = f0 * (-2.0 * qf * uq1 + 4.0 * qf * (qf - 1.0) * x * x * uq2);
                (f, d1, d2)
            }
            Shape::Taper { f0, flat } => {
                if x <= flat {
                    return (f0, 0.0, 0.0);
                }
                let w = 1.0 - flat;
                let t = ((x - flat) / w).min(1.0);
                let s = t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
                let s1 = 30.0 * t * t * (1.0 - t) * (1.0 - t);
                let s2 = 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t);
                (f0 * (1.0 - s), -f0 * s1 / w, -f0 * s2 / (w * w))
            }
            Shape::Poly { ref coeffs } => {
                let (mut f, mut d1, mut d2) = (0.0, 0.0, 0.0);
                for &c in coeffs.iter().rev() {
                    d2 = d2 * x + 2.0 * d1;
                    d1 = d1 * x + f;
                    f = f * x + c;
                }
                (f, d1, d2)
            }
            Shape::PurePower { f0 } => (f0, 0.0, 0.0),
        }
    }

    /// `f(x) - f(y)` given `d = x - y` computed accurately by the caller.
    fn diff(&self, x: f64, y: f64, d: f64) -> f64 {
        match *self {
            Shape::PolyBump { f0, q } => {
                let (a, c) = (1.0 - x * x, 1.0 - y * y);
                let mut sum = 0.0;
                for j in 0..q as i32 {
                    sum += a.powi(q as i32 - 1 - j) * c.powi(j);
                }
                f0 * (-d * (x + y)) * sum
            }
            Shape::Taper { f0, flat } => {
                if y <= flat {
                    return 0.0;
                }
                let w = 1.0 - flat;
                let ty = ((y - flat) / w).min(1.0);
                let (tx, dt) = if x > flat { ((x - flat) / w, d / w) } else { (0.0, -ty) };
                // S(tx) - S(ty) for S = 10t³ - 15t⁴ + 6t⁵.
                let p = [0.0, 0.0, 0.0, 10.0, -15.0, 6.0];
                -f0 * dt * divided_difference(&p, tx, ty)
            }
            Shape::Poly { ref coeffs } => d * divided_difference(coeffs, x, y),
            Shape::PurePower { .. } => 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Shape::PolyBump { f0, q } => {
                if !(f0 > 0.0) {
                    return Err(Error::config("f.f0 must be > 0"));
                }
                if q < 2 {
                    return Err(Error::config("f.q must be >= 2"));
                }
            }
            Shape::Taper { f0, flat } => {
                if !(f0 > 0.0) {
                    return Err(Error::config("f.f0 must be > 0"));
                }
                if !(0.0..1.0).contains(&flat) {
                    return Err(Error::config("f.flat must lie in [0, 1)"));
                }
            }
            Shape::PurePower { f0 } => {
                if !(f0 > 0.0) {
                    return Err(Error::config("f.f0 must be > 0"));
                }
            }
            Shape::Poly { ref coeffs } => {
                if coeffs.is_empty() || !(coeffs[0] > 0.0) {
                    return Err(Error::config("f.coeffs[0] = f(0) must be > 0"));
                }
                let (f1, _, _) = self.eval(1.0);
                if f1.abs() > 1e-12 * coeffs[0] {
                    return Err(Error::config(format!("f.coeffs must satisfy f(1) = 0, got {f1:e}")));
                }
                let mut prev = coeffs[0];
                for i in 1..=2000 {
                    let (f, _, _) = self.eval(i as f64 / 2000.0);
                    if f > prev + 1e-13 * coeffs[0] {
                        return Err(Error::config("f.coeffs must give a nonincreasing f on [0, 1]"));
                    }
                    prev = f;
                }
            }
        }
        Ok(())
    }
}

/// `(p(x) - p(y)) / (x - y)` for the polynomial with coefficients `c`, without division.
fn divided_difference(c: &[f64], x: f64, y: f64) -> f64 {
    let mut total = 0.0;
    for (k, &ck) in c.iter().enumerate().skip(1) {
        let mut term = 0.0;
        for j in 0..k {
            term += x.powi(j as i32) * y.powi((k - 1 - j) as i32);
        }
        total += ck * term;
    }
    total
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PotentialDesc {
    s: f64,
    f: Shape,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    range: Option<f64>,
}

/// Radial potential `φ(r) = f(r/R) / r^s` for `0 < r ≤ R`, zero beyond.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PotentialDesc", into = "PotentialDesc")]
pub struct Potential {
    s: f64,
    shape: Shape,
    range: f64,
}

impl TryFrom<PotentialDesc> for Potential {
    type Error = Error;
    fn try_from(d: PotentialDesc) -> Result<Self> {
        let range = d.range.unwrap_or(match d.f {
            Shape::PurePower { .. } => f64::INFINITY,
            _ => 1.0,
        });
        Potential::with_range(d.s, d.f, range)
    }
}

impl From<Potential> for PotentialDesc {
    fn from(p: Potential) -> Self {
        let default = match p.shape {
            Shape::PurePower { .. } => f64::INFINITY,
            _ => 1.0,
        };
        PotentialDesc { s: p.s, range: (p.range != default).then_some(p.range), f: p.shape }
    }
}

impl Potential {
    pub fn new(s: f64, shape: Shape) -> Result<Self> {
        let range = if matches!(shape, Shape::PurePower { .. }) { f64::INFINITY } else { 1.0 };
        Self::with_range(s, shape, range)
    }

    pub fn with_range(s: f64, shape: Shape, range: f64) -> Result<Self> {
        if !(s >= 0.0) || !s.is_finite() {
            return Err(Error::config("s must be ≥ 0"));
        }
        shape.validate()?;
        if !(range > 0.0) {
            return Err(Error::config("range must be > 0"));
        }
        if range.is_infinite() && !matches!(shape, Shape::PurePower { .. }) {
            return Err(Error::config("only pure_power may have unbounded range"));
        }
        Ok(Potential { s, shape, range })
    }

    /// Default instance `f(r) = (1 - r²)²`.
    pub fn default_bump(s: f64) -> Result<Self> {
        Self::new(s, Shape::PolyBump { f0: 1.0, q: 2 })
    }

    /// Idealized homogeneous `f0 / r^s` on all of (0, ∞).
    pub fn pure_power(s: f64, f0: f64) -> Result<Self> {
        Self::new(s, Shape::PurePower { f0 })
    }

    /// `f0 / r^s` cut off at `r = 1`.
    pub fn truncated_power(s: f64, f0: f64) -> Result<Self> {
        Self::with_range(s, Shape::PurePower { f0 }, 1.0)
    }

    /// The potential `r ↦ f(δ r) / r^s` (support radius `R/δ`).
    pub fn dilated(&self, delta: f64) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::domain("dilation factor must be > 0"));
        }
        Self::with_range(self.s, self.shape.clone(), self.range / delta)
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn kind(&self) -> &'static str {
        self.shape.kind()
    }

    /// Support radius (`∞` for the untruncated pure power law).
    pub fn range(&self) -> f64 {
        self.range
    }

    pub fn is_compact(&self) -> bool {
        self.range.is_finite()
    }

    /// `f(0)`, the coefficient of the `r^-s` singularity.
    pub fn f_at_zero(&self) -> f64 {
        self.shape.eval(0.0).0
    }

    /// `φ(r)` without domain checks; `r > 0` is the caller's responsibility.
    #[inline]
    pub fn value(&self, r: f64) -> f64 {
        if r > self.range {
            return 0.0;
        }
        let f = match self.shape {
            Shape::PurePower { f0 } => f0,
            _ => self.shape.eval(r / self.range).0,
        };
        if self.s == 0.0 {
            f
        } else if self.s == 1.0 {
            f / r
        } else if self.s == 2.0 {
            f / (r * r)
        } else {
            f * r.powf(-self.s)
        }
    }

    /// `(φ, φ', φ'')` at `r` without domain checks; zero outside the support.
    #[inline]
    pub fn value_and_derivatives(&self, r: f64) -> (f64, f64, f64) {
        if r > self.range {
            return (0.0, 0.0, 0.0);
        }
        let (f, f1, f2) = match self.shape {
            Shape::PurePower { f0 } => (f0, 0.0, 0.0),
            _ => {
                let (f, a, b) = self.shape.eval(r / self.range);
                (f, a / self.range, b / (self.range * self.range))
            }
        };
        let s = self.s;
        let p = r.powf(-s);
        let phi = f * p;
        let d1 = f1 * p - s * f * p / r;
        let d2 = f2 * p - 2.0 * s * f1 * p / r + s * (s + 1.0) * f * p / (r * r);
        (phi, d1, d2)
    }

    /// `φ(r_near) - φ(r_near / u)` for `u ∈ (0, 1]`, with `one_minus_u = 1 - u` supplied
    /// accurately so that the difference keeps full relative precision as `u → 1`.
    pub fn drop_from(&self, r_near: f64, u: f64, one_minus_u: f64) -> f64 {
        let near = self.value(r_near);
        let r = r_near / u;
        if r > self.range || u <= 0.0 {
            return near;
        }
        let scale = r_near.powf(-self.s);
        let one_minus_us = if self.s == 0.0 { 0.0 } else { -(self.s * (-one_minus_u).ln_1p()).exp_m1() };
        let (fdiff, fy) = match self.shape {
            Shape::PurePower { f0 } => (0.0, f0),
            _ => {
                let x = r_near / self.range;
                let y = r / self.range;
                let d = -x * one_minus_u / u;
                (self.shape.diff(x, y, d), self.shape.eval(y).0)
            }
        };
        scale * (fdiff + fy * one_minus_us)
    }

    /// True when `f` does not vanish at the edge of a finite support, so `φ` jumps there.
    pub fn has_edge_jump(&self) -> bool {
        self.is_compact() && self.shape.eval(1.0).0 != 0.0
    }

    /// Interior radii where `φ''` may jump (the end of the flat part of a taper).
    pub fn kinks(&self) -> Vec<f64> {
        match self.shape {
            Shape::Taper { flat, .. } if flat > 0.0 && self.is_compact() => vec![flat * self.range],
            _ => Vec::new(),
        }
    }

    pub fn eval_phi(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::domain(format!("φ(r) requires r > 0, got {r}")));
        }
        Ok(self.value(r))
    }

    /// `(φ'(r), φ''(r))` for `r` strictly inside the support.
    pub fn eval_phi_derivatives(&self, r: f64) -> Result<(f64, f64)> {
        if !(r > 0.0 && r < self.range) {
            return Err(Error::domain(format!("derivatives require r ∈ (0, {}), got {r}", self.range)));
        }
        let (_, d1, d2) = self.value_and_derivatives(r);
        Ok((d1, d2))
    }

    /// `K(ρ) = sup_{ρ<r<1} max(|φ|, r|φ'|, r²|φ''|)`, with the interval's upper end
    /// at the support radius (or 1 for the untruncated power law). At `ρ` equal to
    /// the upper end the left limit is returned.
    pub fn envelope_k(&self, rho: f64) -> Result<f64> {
        let upper = if self.is_compact() { self.range } else { 1.0 };
        if !(rho > 0.0 && rho <= upper) {
            return Err(Error::domain(format!("envelope requires ρ ∈ (0, {upper}], got {rho}")));
        }
        let g = |r: f64| {
            let (p, d1, d2) = self.value_and_derivatives(r.min(upper));
            p.abs().max(r * d1.abs()).max(r * r * d2.abs())
        };
        if rho == upper {
            return Ok(g(upper));
        }
        let n = 512;
        let ratio = (upper / rho).powf(1.0 / n as f64);
        let mut best = (rho, g(rho));
        let mut r = rho;
        for _ in 0..n {
            r *= ratio;
            let v = g(r.min(upper));
            if v > best.1 {
                best = (r.min(upper), v);
            }
        }
        // Golden-section polish around the best grid point.
        let (mut a, mut b) = ((best.0 / ratio).max(rho), (best.0 * ratio).min(upper));
        let gr = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..80 {
            let c = b - gr * (b - a);
            let d = a + gr * (b - a);
            if g(c) > g(d) {
                b = d;
            } else {
                a = c;
            }
        }
        Ok(best.1.max(g(0.5 * (a + b))).max(g(rho)).max(g(upper)))
    }

    /// `Φ̂(k) = (4π/k) ∫₀^R r φ(r) sin(kr) dr`.
    pub fn fourier_transform(&self, k: f64, spec: &QuadSpec) -> Result<f64> {
        if !(self.s < 2.0) {
            return Err(Error::domain(format!("Fourier transform needs s < 2, got {}", self.s)));
        }
        if !self.is_compact() {
            return Err(Error::domain("Fourier transform needs a compactly supported potential"));
        }
        if !(k >= 0.0) {
            return Err(Error::domain(format!("wavenumber must be ≥ 0, got {k}")));
        }
        let range = self.range;
        // sin(kr)/k, with the k → 0 limit r.
        let sinc = |r: f64| {
            let x = k * r;
            if x.abs() < 1e-4 {
                r * (1.0 - x * x / 6.0 * (1.0 - x * x / 20.0))
            } else {
                x.sin() / k
            }
        };
        let integrand = |r: f64| if r <= 0.0 { 0.0 } else { r * self.value(r) * sinc(r) };
        let half = if k > 0.0 { PI / k } else { f64::INFINITY };
        let first = half.min(range);
        let head = integrate_1d(integrand, 0.0, first, Singularity::PowerLeft(1.0 - self.s), spec)?;
        let mut total = head.value;
        if first < range {
            let mut breaks = vec![first];
            let mut x = first;
            while x + half < range {
                x += half;
                breaks.push(x);
            }
            if range - x > 1e-12 * range {
                breaks.push(range);
            } else {
                *breaks.last_mut().unwrap() = range;
            }
            if breaks.len() >= 2 {
                let tail_spec = QuadSpec { max_panels: spec.max_panels.max(4 * breaks.len()), ..spec.clone() };
                total += integrate_breaks(integrand, &breaks, &tail_spec)?.value;
            }
        }
        Ok(4.0 * PI * total)
    }
}
