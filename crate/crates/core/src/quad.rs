//! Deterministic quadrature and root-finding engine.
//!
//! Everything here is reentrant and reproducible: adaptive refinement picks the
//! panel with the largest error estimate (ties broken by position), and all
//! reductions are pairwise sums over panels ordered by their left endpoint, so
//! the result never depends on scheduling.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Tolerances and node counts shared by every numerical routine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_panels: usize,
    /// Nodes of the uniform rule on the azimuth circle (even, so every other node is an embedded rule).
    pub circle_nodes: usize,
    /// Offset of the first azimuth node, in radians.
    pub circle_phase: f64,
    /// Gauss-Kronrod panels per factor-of-two in the relative-speed grid.
    pub radial_nodes: usize,
    /// Polar Gauss-Legendre nodes of the product rule on S²; azimuth uses twice as many.
    pub sphere_nodes: usize,
    pub mc_samples: usize,
    pub rng_seed: u64,
}

impl Default for QuadSpec {
    fn default() -> Self {
        QuadSpec {
            rel_tol: 1e-11,
            abs_tol: 1e-14,
            max_panels: 4000,
            circle_nodes: 16,
            circle_phase: 0.0,
            radial_nodes: 1,
            sphere_nodes: 6,
            mc_samples: 20_000,
            rng_seed: 0x5eed_0001,
        }
    }
}

impl QuadSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |k: &str, c: &str| Err(Error::config(format!("quad.{k} must be {c}")));
        if !(self.rel_tol > 0.0) {
            return bad("rel_tol", "> 0");
        }
        if !(self.abs_tol > 0.0) {
            return bad("abs_tol", "> 0");
        }
        if self.max_panels < 4 {
            return bad("max_panels", ">= 4");
        }
        if self.circle_nodes < 4 || self.circle_nodes % 2 == 1 {
            return bad("circle_nodes", "an even number >= 4");
        }
        if !self.circle_phase.is_finite() {
            return bad("circle_phase", "finite");
        }
        if self.radial_nodes < 1 {
            return bad("radial_nodes", ">= 1");
        }
        if self.sphere_nodes < 1 {
            return bad("sphere_nodes", ">= 1");
        }
        if self.mc_samples < 4 {
            return bad("mc_samples", ">= 4");
        }
        Ok(())
    }

    /// Radius of the velocity ball outside which the Maxwellian tail is below `abs_tol`.
    pub fn gaussian_radius(&self) -> f64 {
        (2.0 * (1.0 / self.abs_tol).ln()).sqrt() + 5.0
    }
}

/// Integral value with an error estimate and the number of panels used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub panels: usize,
}

impl Estimate {
    pub fn zero() -> Self {
        Estimate { value: 0.0, error: 0.0, panels: 0 }
    }

    pub fn combine(self, o: Estimate) -> Estimate {
        Estimate {
            value: self.value + o.value,
            error: self.error + o.error,
            panels: self.panels + o.panels,
        }
    }
}

// 7-point Gauss / 15-point Kronrod pair on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Nodes of the 15-point Kronrod rule on `[a, b]` with Kronrod and embedded Gauss weights.
pub fn gk15_nodes(a: f64, b: f64) -> [(f64, f64, f64); 15] {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut out = [(0.0, 0.0, 0.0); 15];
    for j in 0..7 {
        let wg = if j % 2 == 1 { WG[j / 2] * h } else { 0.0 };
        out[2 * j] = (c - h * XGK[j], WGK[j] * h, wg);
        out[2 * j + 1] = (c + h * XGK[j], WGK[j] * h, wg);
    }
    out[14] = (c, WGK[7] * h, WG[3] * h);
    out
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let mut k = 0.0;
    let mut g = 0.0;
    let mut abs = 0.0;
    let mut fv = [0.0; 15];
    for (i, (x, wk, wg)) in gk15_nodes(a, b).into_iter().enumerate() {
        let y = f(x);
        fv[i] = y;
        k += wk * y;
        g += wg * y;
        abs += wk * y.abs();
    }
    // QUADPACK-style scaling of |K - G|, floored by accumulated rounding.
    let mean = k / (b - a);
    let asc: f64 = gk15_nodes(a, b).iter().zip(fv.iter()).map(|((_, wk, _), y)| wk * (y - mean).abs()).sum();
    let mut err = (k - g).abs();
    if asc != 0.0 && err != 0.0 {
        err = asc * (200.0 * err / asc).powf(1.5).min(1.0);
    }
    let floor = 50.0 * f64::EPSILON * abs;
    if floor > err {
        err = floor;
    }
    Panel { a, b, value: k, error: err }
}

/// Pairwise sum of a slice.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        n if n <= 8 => xs.iter().sum(),
        n => pairwise_sum(&xs[..n / 2]) + pairwise_sum(&xs[n / 2..]),
    }
}

fn adaptive<F: Fn(f64) -> f64>(f: &F, breaks: &[f64], spec: &QuadSpec) -> Result<Estimate> {
    let mut panels: Vec<Panel> = breaks.windows(2).map(|w| gk15(f, w[0], w[1])).collect();
    loop {
        let total: f64 = panels.iter().map(|p| p.value).sum();
        let err: f64 = panels.iter().map(|p| p.error).sum();
        let tol = spec.abs_tol.max(spec.rel_tol * total.abs());
        if err <= tol || !err.is_finite() && !total.is_finite() {
            break;
        }
        // Panel with the largest error; ties resolved by the first such panel.
        let (idx, _) = panels
            .iter()
            .enumerate()
            .fold((0usize, f64::NEG_INFINITY), |(bi, be), (i, p)| if p.error > be { (i, p.error) } else { (bi, be) });
        let p = &panels[idx];
        let mid = 0.5 * (p.a + p.b);
        let resolution_exhausted = !(mid > p.a.min(p.b) && mid < p.a.max(p.b))
            || (p.b - p.a).abs() < 1e3 * f64::EPSILON * p.a.abs().max(p.b.abs()).max(f64::MIN_POSITIVE);
        if panels.len() >= spec.max_panels || resolution_exhausted {
            let mut order: Vec<&Panel> = panels.iter().collect();
            order.sort_by(|x, y| x.a.total_cmp(&y.a));
            let vals: Vec<f64> = order.iter().map(|p| p.value).collect();
            let value = pairwise_sum(&vals);
            if resolution_exhausted && err <= 1e3 * tol {
                return Ok(Estimate { value, error: err, panels: panels.len() });
            }
            return Err(Error::NonConvergence { value, error: err, panels: panels.len() });
        }
        let (a, b) = (p.a, p.b);
        let left = gk15(f, a, mid);
        let right = gk15(f, mid, b);
        panels[idx] = left;
        panels.push(right);
    }
    panels.sort_by(|x, y| x.a.total_cmp(&y.a));
    let vals: Vec<f64> = panels.iter().map(|p| p.value).collect();
    let errs: Vec<f64> = panels.iter().map(|p| p.error).collect();
    Ok(Estimate { value: pairwise_sum(&vals), error: pairwise_sum(&errs), panels: panels.len() })
}

/// Endpoint behaviour of an integrand, used to pick a regularizing substitution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Singularity {
    None,
    /// Integrand behaves like `(x - a)^(-1/2)`; substitutes `x = a + t²`.
    InverseSqrtLeft,
    /// Integrand behaves like `(b - x)^(-1/2)`; substitutes `x = b - t²`.
    InverseSqrtRight,
    /// Integrand behaves like `(x - a)^alpha` with `alpha > -1`; substitutes
    /// `x = a + t^(1/(1+alpha))`, which makes the transformed integrand bounded.
    PowerLeft(f64),
}

/// Adaptive Gauss-Kronrod integration of `f` over `[a, b]`.
pub fn integrate_1d<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, singularity: Singularity, spec: &QuadSpec) -> Result<Estimate> {
    if !(a < b) {
        if a == b {
            return Ok(Estimate::zero());
        }
        return Err(Error::domain(format!("integration interval [{a}, {b}] is empty or reversed")));
    }
    match singularity {
        Singularity::None => adaptive(&f, &[a, b], spec),
        Singularity::InverseSqrtLeft => {
            let g = |t: f64| 2.0 * t * f(a + t * t);
            adaptive(&g, &[0.0, (b - a).sqrt()], spec)
        }
        Singularity::InverseSqrtRight => {
            let g = |t: f64| 2.0 * t * f(b - t * t);
            adaptive(&g, &[0.0, (b - a).sqrt()], spec)
        }
        Singularity::PowerLeft(alpha) => {
            if !(alpha > -1.0) {
                return Err(Error::domain(format!("power singularity exponent {alpha} must exceed -1")));
            }
            let m = 1.0 / (1.0 + alpha);
            let g = |t: f64| {
                if t == 0.0 {
                    return 0.0;
                }
                m * t.powf(m - 1.0) * f(a + t.powf(m))
            };
            adaptive(&g, &[0.0, (b - a).powf(1.0 + alpha)], spec)
        }
    }
}

/// Adaptive integration over consecutive panels `breaks[0] < breaks[1] < …`, refined jointly.
pub fn integrate_breaks<F: Fn(f64) -> f64>(f: F, breaks: &[f64], spec: &QuadSpec) -> Result<Estimate> {
    if breaks.len() < 2 || breaks.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::domain("breakpoints must be strictly increasing"));
    }
    adaptive(&f, breaks, spec)
}

/// Root of a strictly increasing function on `[lo, hi]` by bisection safeguarding
/// secant (Illinois) steps. The returned bracket width is at most `tol * |r|`
/// (or a few ulps when `tol` is below machine precision).
pub fn find_root_increasing<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    if !(lo < hi) {
        return Err(Error::Bracket(format!("lower end {lo} is not below upper end {hi}")));
    }
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if !(fa < 0.0) {
        return Err(Error::Bracket(format!("f(lo = {lo}) = {fa} is not negative")));
    }
    if !(fb > 0.0) {
        return Err(Error::Bracket(format!("f(hi = {hi}) = {fb} is not positive")));
    }
    let mut side = 0i8;
    for iter in 0..400 {
        let width = b - a;
        let scale = a.abs().max(b.abs());
        if width <= tol * scale || width <= 4.0 * f64::EPSILON * scale {
            break;
        }
        // Alternate secant and bisection so the bracket shrinks at least geometrically.
        let mut x = if iter % 3 == 2 { 0.5 * (a + b) } else { (a * fb - b * fa) / (fb - fa) };
        if !(x > a && x < b) {
            x = 0.5 * (a + b);
        }
        let fx = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fx < 0.0 {
            a = x;
            fa = fx;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        } else {
            b = x;
            fb = fx;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
    }
    Ok(if fa.abs() < fb.abs() { a } else { b })
}

/// Gauss-Legendre nodes and weights on [-1, 1] (Newton iteration on P_n).
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = vec![(0.0, 0.0); n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 0 {
                break;
            }
            let pn = if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out[i] = (-x, w);
        out[n - 1 - i] = (x, w);
    }
    if n % 2 == 1 {
        out[n / 2].0 = 0.0;
    }
    out
}

/// Uniform rule on the unit circle: angles `phase + 2πj/n`, weight `2π/n`.
pub fn circle_rule(n: usize, phase: f64) -> Vec<(f64, f64)> {
    let w = 2.0 * PI / n as f64;
    (0..n).map(|j| (phase + w * j as f64, w)).collect()
}

/// Product rule on S²: Gauss-Legendre in cos(polar) times uniform azimuth. Weights sum to 4π.
pub fn sphere_rule(polar: usize) -> Vec<(crate::vec3::Vec3, f64)> {
    let gl = gauss_legendre(polar);
    let naz = 2 * polar;
    let mut out = Vec::with_capacity(polar * naz);
    for &(mu, wm) in &gl {
        let st = (1.0 - mu * mu).max(0.0).sqrt();
        for (phi, wp) in circle_rule(naz, PI / naz as f64) {
            out.push((crate::vec3::Vec3::new(st * phi.cos(), st * phi.sin(), mu), wm * wp));
        }
    }
    out
}

/// Maxwellian density with unit temperature.
pub fn maxwellian(v: crate::vec3::Vec3) -> f64 {
    (-0.5 * v.norm2()).exp() / (2.0 * PI).powf(1.5)
}

/// Radial panel layout on `[0, radius]`: a tiny initial panel, geometric panels from
/// `w_lo` up to 1 (`per_octave` panels per doubling), then unit-width panels.
pub fn radial_breaks(w_lo: f64, radius: f64, per_octave: usize) -> Vec<f64> {
    let mut b = vec![0.0];
    let w_lo = w_lo.clamp(1e-12, 0.5);
    let ratio = 2f64.powf(1.0 / per_octave as f64);
    let mut w = w_lo;
    while w < 1.0 {
        b.push(w);
        w *= ratio;
    }
    let mut w = 1.0;
    while w < radius {
        b.push(w);
        w += 1.0;
    }
    b.push(radius);
    b
}

/// GK15 nodes over every panel in `breaks`, as `(x, kronrod_weight, gauss_weight)`.
pub fn panel_nodes(breaks: &[f64]) -> Vec<(f64, f64, f64)> {
    breaks.windows(2).flat_map(|w| gk15_nodes(w[0], w[1])).collect()
}

/// `∫ fn(v) M(v) dv` over ℝ³ with a spherical product rule centred at `center`.
/// `fn` may carry a `|v - center|^-2` singularity, which the shell Jacobian cancels.
pub fn integrate_maxwellian_3d<F>(f: F, spec: &QuadSpec, center: crate::vec3::Vec3) -> Result<Estimate>
where
    F: Fn(crate::vec3::Vec3) -> f64 + Sync,
{
    use rayon::prelude::*;
    let radius = center.norm() + spec.gaussian_radius();
    let nodes = panel_nodes(&radial_breaks(0.25, radius, 1));
    let sphere = sphere_rule(spec.sphere_nodes.max(4));
    let shells: Vec<(f64, f64, f64)> = nodes
        .par_iter()
        .map(|&(w, wk, wg)| {
            let mut acc = 0.0;
            let mut abs = 0.0;
            for &(n, wn) in &sphere {
                let v = center + n.scale(w);
                let y = f(v) * maxwellian(v) * wn;
                acc += y;
                abs += y.abs();
            }
            (acc * w * w * wk, acc * w * w * wg, abs * w * w * wk)
        })
        .collect();
    let k: Vec<f64> = shells.iter().map(|s| s.0).collect();
    let g: Vec<f64> = shells.iter().map(|s| s.1).collect();
    let abs: f64 = shells.iter().map(|s| s.2).sum();
    let (k, g) = (pairwise_sum(&k), pairwise_sum(&g));
    let error = (k - g).abs() + 64.0 * f64::EPSILON * abs + spec.abs_tol;
    if !k.is_finite() {
        return Err(Error::NonConvergence { value: k, error, panels: nodes.len() / 15 });
    }
    Ok(Estimate { value: k, error, panels: nodes.len() / 15 })
}

/// Running mean and standard error (Welford).
#[derive(Debug, Clone, Copy, Default)]
pub struct MeanAccumulator {
    n: u64,
    mean: f64,
    m2: f64,
}

impl MeanAccumulator {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn std_error(&self) -> f64 {
        if self.n < 2 {
            return f64::INFINITY;
        }
        (self.m2 / (self.n - 1) as f64 / self.n as f64).sqrt()
    }

    pub fn count(&self) -> u64 {
        self.n
    }
}
