//! Test functions ψ(v) with analytic derivatives.

use crate::vec3::{Mat3, Vec3};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

pub trait TestFunction: Sync {
    fn value(&self, v: Vec3) -> f64;
    fn gradient(&self, v: Vec3) -> Vec3;
    fn hessian(&self, v: Vec3) -> Mat3;

    /// `ψ(v + h) - ψ(v)`, accurate when `|h|` is small.
    fn diff(&self, v: Vec3, h: Vec3) -> f64 {
        self.value(v + h) - self.value(v)
    }

    /// Bound on ψ and its first three derivatives (infinite when ψ is not in C³_b).
    fn c3_bound(&self) -> f64;

    /// Bound on `|D³ψ[h, h, h]| / |h|³`.
    fn third_derivative_bound(&self) -> f64;

    /// Whether ψ is a collision invariant (a combination of 1, v, |v|²).
    fn is_invariant(&self) -> bool;
}

/// The shipped library.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Psi {
    Constant { c: f64 },
    /// `a · v`.
    Linear { a: Vec3 },
    /// `|v|²`.
    KineticEnergy,
    /// `exp(-a |v - center|²)`.
    Gaussian { a: f64, center: Vec3 },
    /// `sin(k · v)`.
    Sine { k: Vec3 },
}

// sup |d³/dy³ e^{-y²}|, attained near y ≈ 0.525.
const GAUSS_D3: f64 = 3.9036;

impl Psi {
    /// Named functions accepted on the command line.
    pub fn by_name(name: &str) -> Result<Psi> {
        let e = |i| Vec3::unit(i);
        Ok(match name {
            "one" => Psi::Constant { c: 1.0 },
            "v1" => Psi::Linear { a: e(0) },
            "v2" => Psi::Linear { a: e(1) },
            "v3" => Psi::Linear { a: e(2) },
            "energy" => Psi::KineticEnergy,
            "gaussian" => Psi::Gaussian { a: 1.0, center: Vec3::default() },
            "gaussian_narrow" => Psi::Gaussian { a: 2.0, center: Vec3::default() },
            "gaussian_shifted" => Psi::Gaussian { a: 1.0, center: Vec3::new(0.5, -0.3, 0.2) },
            "sine" => Psi::Sine { k: Vec3::new(1.0, 0.5, -0.25) },
            "sine_x" => Psi::Sine { k: e(0) },
            _ => {
                return Err(Error::config(format!(
                    "unknown test function \"{name}\"; expected one of {}",
                    Psi::NAMES.join(", ")
                )))
            }
        })
    }

    pub const NAMES: [&'static str; 10] =
        ["one", "v1", "v2", "v3", "energy", "gaussian", "gaussian_narrow", "gaussian_shifted", "sine", "sine_x"];

    /// The collision invariants 1, v₁, v₂, v₃, |v|².
    pub fn invariants() -> Vec<Psi> {
        ["one", "v1", "v2", "v3", "energy"].iter().map(|n| Psi::by_name(n).unwrap()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Psi::Gaussian { a, .. } if !(a > 0.0) => Err(Error::config("psi.a must be > 0")),
            _ => Ok(()),
        }
    }
}

impl TestFunction for Psi {
    fn value(&self, v: Vec3) -> f64 {
        match *self {
            Psi::Constant { c } => c,
            Psi::Linear { a } => a.dot(v),
            Psi::KineticEnergy => v.norm2(),
            Psi::Gaussian { a, center } => (-a * (v - center).norm2()).exp(),
            Psi::Sine { k } => k.dot(v).sin(),
        }
    }

    fn gradient(&self, v: Vec3) -> Vec3 {
        match *self {
            Psi::Constant { .. } => Vec3::default(),
            Psi::Linear { a } => a,
            Psi::KineticEnergy => 2.0 * v,
            Psi::Gaussian { a, center } => {
                let u = v - center;
                (-2.0 * a * (-a * u.norm2()).exp()) * u
            }
            Psi::Sine { k } => k.dot(v).cos() * k,
        }
    }

    fn hessian(&self, v: Vec3) -> Mat3 {
        match *self {
            Psi::Constant { .. } | Psi::Linear { .. } => Mat3::default(),
            Psi::KineticEnergy => Mat3::identity().scaled(2.0),
            Psi::Gaussian { a, center } => {
                let u = v - center;
                let g = (-a * u.norm2()).exp();
                u.outer(u).scaled(4.0 * a * a * g).plus(Mat3::identity().scaled(-2.0 * a * g))
            }
            Psi::Sine { k } => k.outer(k).scaled(-k.dot(v).sin()),
        }
    }

    fn diff(&self, v: Vec3, h: Vec3) -> f64 {
        match *self {
            Psi::Constant { .. } => 0.0,
            Psi::Linear { a } => a.dot(h),
            Psi::KineticEnergy => 2.0 * v.dot(h) + h.norm2(),
            Psi::Gaussian { a, center } => {
                let u = v - center;
                (-a * u.norm2()).exp() * (-a * (2.0 * u.dot(h) + h.norm2())).exp_m1()
            }
            Psi::Sine { k } => {
                let kh = k.dot(h);
                2.0 * (k.dot(v) + 0.5 * kh).cos() * (0.5 * kh).sin()
            }
        }
    }

    fn c3_bound(&self) -> f64 {
        match *self {
            Psi::Constant { c } => c.abs(),
            Psi::Linear { a } => {
                if a.norm() == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Psi::KineticEnergy => f64::INFINITY,
            Psi::Gaussian { a, .. } => {
                // Sup norms of the first three derivatives of e^{-a y²} along a line.
                let d1 = (2.0 * a / std::f64::consts::E).sqrt();
                let d2 = 2.0 * a;
                let d3 = GAUSS_D3 * a.powf(1.5);
                1f64.max(d1).max(d2).max(d3)
            }
            Psi::Sine { k } => {
                let n = k.norm();
                1f64.max(n).max(n * n).max(n * n * n)
            }
        }
    }

    fn third_derivative_bound(&self) -> f64 {
        match *self {
            Psi::Constant { .. } | Psi::Linear { .. } | Psi::KineticEnergy => 0.0,
            Psi::Gaussian { a, .. } => GAUSS_D3 * a.powf(1.5),
            Psi::Sine { k } => k.norm().powi(3),
        }
    }

    fn is_invariant(&self) -> bool {
        matches!(self, Psi::Constant { .. } | Psi::Linear { .. } | Psi::KineticEnergy)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn library() -> Vec<Psi> {
        Psi::NAMES.iter().map(|n| Psi::by_name(n).unwrap()).collect()
    }

    fn grid() -> Vec<Vec3> {
        let mut out = Vec::new();
        for x in [-1.3, 0.0, 0.4] {
            for y in [-0.7, 0.2] {
                for z in [-0.1, 0.9] {
                    out.push(Vec3::new(x, y, z));
                }
            }
        }
        out
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let h = 1e-6;
        for psi in library() {
            for v in grid() {
                let g = psi.gradient(v);
                for i in 0..3 {
                    let e = Vec3::unit(i).scale(h);
                    let fd = (psi.value(v + e) - psi.value(v - e)) / (2.0 * h);
                    assert!((fd - g.0[i]).abs() <= 1e-6 * g.0[i].abs().max(1e-2), "{psi:?} {v:?}");
                }
            }
        }
    }

    #[test]
    fn hessian_is_symmetric_and_matches_gradient_differences() {
        let h = 1e-6;
        for psi in library() {
            for v in grid() {
                let hs = psi.hessian(v);
                for i in 0..3 {
                    let e = Vec3::unit(i).scale(h);
                    let fd = (psi.gradient(v + e) - psi.gradient(v - e)).scale(0.5 / h);
                    for j in 0..3 {
                        assert_eq!(hs.0[i][j], hs.0[j][i]);
                        assert!((fd.0[j] - hs.0[j][i]).abs() <= 1e-5 * hs.0[j][i].abs().max(1e-2), "{psi:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn third_derivative_bound_holds_along_lines() {
        let psi = Psi::by_name("gaussian_narrow").unwrap();
        let h = 1e-3;
        let bound = psi.third_derivative_bound();
        for v in grid() {
            let d = Vec3::new(0.6, 0.0, 0.8);
            let f = |t: f64| psi.value(v + d.scale(t));
            let d3 = (f(2.0 * h) - 2.0 * f(h) + 2.0 * f(-h) - f(-2.0 * h)) / (2.0 * h * h * h);
            assert!(d3.abs() <= bound * 1.001);
        }
    }

    #[test]
    fn unknown_name_lists_choices() {
        let e = Psi::by_name("cosh").unwrap_err().to_string();
        assert!(e.contains("gaussian"));
        assert_eq!(Psi::invariants().len(), 5);
        assert!(Psi::invariants().iter().all(|p| p.is_invariant()));
    }

    proptest! {
        #[test]
        fn diff_agrees_with_direct_difference(x in -2.0..2.0f64, y in -2.0..2.0f64, hx in -1.0..1.0f64, hz in -1.0..1.0f64) {
            let v = Vec3::new(x, y, 0.3);
            let h = Vec3::new(hx, 0.1, hz);
            for psi in library() {
                let direct = psi.value(v + h) - psi.value(v);
                prop_assert!((psi.diff(v, h) - direct).abs() <= 1e-13 * (1.0 + psi.value(v).abs() + direct.abs()));
            }
        }

        #[test]
        fn diff_keeps_relative_precision(scale in -14.0..-4.0f64) {
            let v = Vec3::new(0.3, -0.2, 0.5);
            let h = Vec3::new(1.0, 2.0, -1.0).scale(10f64.powf(scale));
            for psi in library() {
                let linear = psi.gradient(v).dot(h);
                if linear != 0.0 {
                    prop_assert!((psi.diff(v, h) / linear - 1.0).abs() < 1e-3);
                }
            }
        }
    }
}
