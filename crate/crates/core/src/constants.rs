//! The Landau diffusion constant `c_Φ` (radial and Fourier routes) and the diffusive
//! timescale.

use crate::moments::sin2_moment;
use crate::potential::Potential;
use crate::quad::{integrate_1d, integrate_breaks, QuadSpec, Singularity};
use crate::scattering::straight_line_integral;
use crate::{Error, Result};
use serde::Serialize;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Radial,
    Fourier,
    Measured,
}

/// Candidate Coulomb-order coefficients: `f(0)` and `f(0)²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoulombCandidates {
    pub linear: f64,
    pub squared: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DiffusionConstant {
    pub value: f64,
    pub method: Method,
    pub s: f64,
    pub error: f64,
    pub evaluations: usize,
    /// Wavenumber cutoff reached by the Fourier route.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<f64>,
    /// Only at `s = 1`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub candidates: Option<CoulombCandidates>,
}

fn check_s(p: &Potential) -> Result<()> {
    if p.s() > 1.0 {
        return Err(Error::domain(format!("c_Φ is defined for s ≤ 1, got s = {}", p.s())));
    }
    if !p.is_compact() {
        return Err(Error::domain("c_Φ needs a compactly supported potential"));
    }
    Ok(())
}

/// `c_Φ = ∫₀^R I(ρ)² ρ dρ` with `I` the straight-line force integral.
///
/// At `s = 1` the integral diverges logarithmically; the value reported is the
/// coefficient `f(0)²` of `|log κ|`, with `f(0)` listed alongside.
pub fn c_phi_radial(p: &Potential, spec: &QuadSpec) -> Result<DiffusionConstant> {
    check_s(p)?;
    let s = p.s();
    if s == 1.0 {
        let f0 = p.f_at_zero();
        return Ok(DiffusionConstant {
            value: f0 * f0,
            method: Method::Radial,
            s,
            error: 0.0,
            evaluations: 0,
            cutoff: None,
            candidates: Some(CoulombCandidates { linear: f0, squared: f0 * f0 }),
        });
    }
    let range = p.range();
    let evals = std::cell::Cell::new(0usize);
    let failure = std::cell::Cell::new(None);
    let g = |rho: f64| {
        evals.set(evals.get() + 1);
        match straight_line_integral(p, rho, spec) {
            Ok(e) => e.value * e.value * rho,
            Err(e) => {
                failure.set(Some(e));
                0.0
            }
        }
    };
    let outer = QuadSpec { rel_tol: 100.0 * spec.rel_tol, ..spec.clone() };
    let first = 1e-3 * range;
    // I(ρ)² ρ ~ ρ^{1-2s} at the origin.
    let head = integrate_1d(g, 0.0, first, Singularity::PowerLeft(1.0 - 2.0 * s), &outer)?;
    let mut breaks = vec![first, 1e-2 * range, 1e-1 * range];
    breaks.extend(p.kinks().into_iter().filter(|&k| k > 0.1 * range && k < 0.5 * range));
    breaks.push(0.5 * range);
    breaks.sort_by(f64::total_cmp);
    let body = integrate_breaks(g, &breaks, &outer)?;
    let edge = integrate_1d(g, 0.5 * range, range, Singularity::InverseSqrtRight, &outer)?;
    if let Some(e) = failure.take() {
        return Err(e);
    }
    Ok(DiffusionConstant {
        value: head.value + body.value + edge.value,
        method: Method::Radial,
        s,
        error: head.error + body.error + edge.error,
        evaluations: evals.get(),
        cutoff: None,
        candidates: None,
    })
}

/// Amplitude `A` of the large-k law `Φ̂(k) ≈ A k^{s-3}` set by the `f(0) r^{-s}` core.
pub fn fourier_tail_amplitude(s: f64, f0: f64) -> f64 {
    4.0 * PI * f0 * libm::tgamma(2.0 - s) * (0.5 * PI * (2.0 - s)).sin()
}

/// `∫_{a}^{b} k³ Φ̂(k)² dk` with breakpoints every π.
fn spectral_segment(p: &Potential, a: f64, b: f64, spec: &QuadSpec, evals: &mut usize) -> Result<f64> {
    let mut breaks = vec![a];
    let mut k = a;
    while k + PI < b {
        k += PI;
        breaks.push(k);
    }
    breaks.push(b);
    let count = std::cell::Cell::new(0usize);
    let failure = std::cell::Cell::new(None);
    let g = |k: f64| {
        count.set(count.get() + 1);
        match p.fourier_transform(k, spec) {
            Ok(v) => k * k * k * v * v,
            Err(e) => {
                failure.set(Some(e));
                0.0
            }
        }
    };
    let outer = QuadSpec { rel_tol: 100.0 * spec.rel_tol, max_panels: spec.max_panels.max(8 * breaks.len()), ..spec.clone() };
    let est = integrate_breaks(g, &breaks, &outer)?;
    *evals += count.get();
    if let Some(e) = failure.take() {
        return Err(e);
    }
    Ok(est.value)
}

const FOURIER_START: f64 = 64.0;
const FOURIER_MAX: f64 = 65536.0;

/// `c_Φ = (1/16π²) ∫₀^∞ k³ Φ̂(k)² dk`, with the cutoff doubled from 64 until the
/// tail-corrected value settles. The tail beyond `K` is added analytically from the
/// `A k^{s-3}` law, which otherwise dominates the error as `s → 1`.
///
/// At `s = 1` the partial integral grows like `c log K`; the reported value is the
/// slope `c` between the last two cutoffs.
pub fn c_phi_fourier(p: &Potential, spec: &QuadSpec) -> Result<DiffusionConstant> {
    check_s(p)?;
    if p.range() != 1.0 {
        return Err(Error::domain("Fourier route expects support radius 1"));
    }
    let s = p.s();
    let norm = 1.0 / (16.0 * PI * PI);
    let a = fourier_tail_amplitude(s, p.f_at_zero());
    let tail = |k: f64| if s < 1.0 { norm * a * a * k.powf(2.0 * s - 2.0) / (2.0 - 2.0 * s) } else { 0.0 };
    let tol = (1e3 * spec.rel_tol).max(1e-9);
    let mut evals = 0usize;
    let mut cut = FOURIER_START;
    let mut partial = norm * spectral_segment(p, 0.0, cut, spec, &mut evals)?;
    let mut prev_total = partial + tail(cut);
    let mut prev_partial = partial;
    loop {
        let next = 2.0 * cut;
        partial += norm * spectral_segment(p, cut, next, spec, &mut evals)?;
        cut = next;
        let (value, change) = if s < 1.0 {
            let total = partial + tail(cut);
            let change = (total - prev_total).abs();
            prev_total = total;
            (total, change)
        } else {
            let slope = (partial - prev_partial) / 2f64.ln();
            let change = (slope - prev_total).abs();
            prev_total = slope;
            prev_partial = partial;
            (slope, change)
        };
        let settled = change <= tol * value.abs() + spec.abs_tol;
        // The s = 1 slope approaches its limit only like 1/K.
        let settled = if s < 1.0 { settled } else { cut >= 4096.0 };
        if settled || cut >= FOURIER_MAX {
            if !settled {
                return Err(Error::NonConvergence { value, error: change, panels: evals });
            }
            let f0 = p.f_at_zero();
            return Ok(DiffusionConstant {
                value,
                method: Method::Fourier,
                s,
                error: change,
                evaluations: evals,
                cutoff: Some(cut),
                candidates: (s == 1.0).then_some(CoulombCandidates { linear: f0, squared: f0 * f0 }),
            });
        }
    }
}

/// Coefficient `a` of `∫ sin²(θ/2) ρ dρ ≈ κ² (a |log κ| + b)` by least squares over
/// the given couplings.
pub fn measured_coulomb_coefficient(p: &Potential, kappas: &[f64], spec: &QuadSpec) -> Result<DiffusionConstant> {
    if kappas.len() < 2 {
        return Err(Error::domain("need at least two couplings to fit a coefficient"));
    }
    let mut pts = Vec::with_capacity(kappas.len());
    for &k in kappas {
        if !(k > 0.0 && k < 1.0) {
            return Err(Error::domain(format!("couplings must lie in (0, 1), got {k}")));
        }
        pts.push((k.ln().abs(), sin2_moment(p, k, spec)? / (k * k)));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let resid = pts.iter().map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2)).sum::<f64>();
    let f0 = p.f_at_zero();
    Ok(DiffusionConstant {
        value: slope,
        method: Method::Measured,
        s: p.s(),
        error: (resid / (n - 1.0).max(1.0) / sxx).sqrt(),
        evaluations: kappas.len(),
        cutoff: None,
        candidates: Some(CoulombCandidates { linear: f0, squared: f0 * f0 }),
    })
}

/// Diffusive timescale: `ε²` for `s < 1`, `ε² |log ε|` at `s = 1`, and the non-cutoff
/// scale `ε^{2/s}` for `s > 1`.
pub fn timescale(epsilon: f64, s: f64) -> f64 {
    if s < 1.0 {
        epsilon * epsilon
    } else if s == 1.0 {
        epsilon * epsilon * epsilon.ln().abs()
    } else {
        epsilon.powf(2.0 / s)
    }
}
