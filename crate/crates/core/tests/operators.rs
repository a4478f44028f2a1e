use grazing::operators::*;
use grazing::potential::Potential;
use grazing::quad::{gauss_legendre, maxwellian, QuadSpec};
use grazing::testfn::{Psi, TestFunction};
use grazing::vec3::Vec3;
use std::f64::consts::PI;

fn light() -> QuadSpec {
    QuadSpec { sphere_nodes: 4, circle_nodes: 8, ..QuadSpec::default() }
}

fn gaussian() -> Psi {
    Psi::by_name("gaussian").unwrap()
}

#[test]
fn monte_carlo_agrees_with_quadrature() {
    let p = Potential::default_bump(0.5).unwrap();
    let v1 = Vec3::new(0.4, -0.2, 0.1);
    let q = apply_linearized_boltzmann(&gaussian(), v1, 0.1, &p, &QuadSpec::default()).unwrap();
    let mc = monte_carlo_boltzmann(&gaussian(), v1, 0.1, &p, &QuadSpec::default()).unwrap();
    assert!((q.value - mc.mean).abs() <= 4.0 * mc.std_error + q.error_estimate, "{q:?} {mc:?}");
    assert!(mc.std_error < 0.1 * q.value.abs());
}

#[test]
fn taylor_expansion_within_remainder() {
    let p = Potential::default_bump(0.5).unwrap();
    let v1 = Vec3::new(0.3, 0.0, 0.2);
    for psi in [gaussian(), Psi::by_name("sine").unwrap()] {
        let l = apply_linearized_boltzmann(&psi, v1, 1e-3, &p, &light()).unwrap();
        let t = taylor_expansion(&psi, v1, 1e-3, &p, &light()).unwrap();
        assert!((l.value - t.value).abs() <= t.remainder_bound + l.error_estimate, "{psi:?} {l:?} {t:?}");
        assert!(t.remainder_bound < 0.1 * l.value.abs());
    }
}

#[test]
fn quadratic_form_two_routes() {
    // For a radial ψ, (ℒψ, ψ) = 4π ∫ ℒψ(r e₁) ψ(r) M(r) r² dr.
    let p = Potential::default_bump(0.5).unwrap();
    let eps = 0.1;
    let psi = gaussian();
    let spec = light();
    let mut direct = 0.0;
    let mut err = 0.0;
    for (x, w) in gauss_legendre(16) {
        let r = 3.0 * (x + 1.0);
        let v = Vec3::new(r, 0.0, 0.0);
        let l = apply_linearized_boltzmann(&psi, v, eps, &p, &spec).unwrap();
        let weight = 3.0 * w * 4.0 * PI * psi.value(v) * maxwellian(v) * r * r;
        direct += weight * l.value;
        err += weight.abs() * l.error_estimate;
    }
    let mc = quadratic_form(&psi, eps, &p, &QuadSpec { mc_samples: 40_000, ..QuadSpec::default() }).unwrap();
    assert!(mc.mean <= 0.0 && direct < 0.0);
    assert!((direct - mc.mean).abs() <= 3.0 * mc.std_error + err + 1e-3 * direct.abs(), "{direct} {mc:?}");
}

#[test]
fn quadratic_form_vanishes_on_invariants() {
    let p = Potential::default_bump(1.0).unwrap();
    let spec = QuadSpec { mc_samples: 2000, ..QuadSpec::default() };
    for psi in Psi::invariants() {
        let q = quadratic_form(&psi, 0.05, &p, &spec).unwrap();
        assert!(q.mean.abs() <= 3.0 * q.std_error + 1e-12, "{psi:?} {q:?}");
    }
    assert!(quadratic_form(&gaussian(), 0.0, &p, &spec).is_err());
}

#[test]
fn monte_carlo_is_reproducible() {
    let p = Potential::default_bump(1.0).unwrap();
    let spec = QuadSpec { mc_samples: 500, ..QuadSpec::default() };
    let a = quadratic_form(&gaussian(), 0.05, &p, &spec).unwrap();
    let b = quadratic_form(&gaussian(), 0.05, &p, &spec).unwrap();
    assert_eq!(a, b);
    let c = quadratic_form(&gaussian(), 0.05, &p, &QuadSpec { rng_seed: 9, ..spec }).unwrap();
    assert_ne!(a.mean, c.mean);
}

#[test]
fn scale_identity_off_center() {
    let p = Potential::default_bump(1.5).unwrap();
    let psi = Psi::by_name("sine").unwrap();
    let v1 = Vec3::new(0.5, 0.5, -0.3);
    let eps: f64 = 1e-3;
    let spec = light();
    let layout = VelocityLayout::for_coupling(v1, eps, p.f_at_zero(), &spec);
    let a = apply_linearized_boltzmann_on(&psi, eps, &p, None, &layout, &spec).unwrap();
    let b = apply_linearized_boltzmann_on(&psi, 1.0, &p.dilated(eps.powf(1.0 / 1.5)).unwrap(), None, &layout, &spec).unwrap();
    let scaled = a.value * eps.powf(-2.0 / 1.5);
    assert!((scaled - b.value).abs() <= 1e-8 * b.value.abs(), "{scaled} {}", b.value);
}

#[test]
fn noncutoff_truncation_within_tail_bound() {
    let p = Potential::pure_power(2.0, 1.0).unwrap();
    let spec = light();
    let a = apply_noncutoff_boltzmann(&gaussian(), Vec3::default(), &p, 100.0, &spec).unwrap();
    let b = apply_noncutoff_boltzmann(&gaussian(), Vec3::default(), &p, 200.0, &spec).unwrap();
    assert!(a.breakdown.tail_bound > 0.0);
    assert!((a.value - b.value).abs() < a.breakdown.tail_bound, "{a:?} {b:?}");
    assert!(b.breakdown.tail_bound < a.breakdown.tail_bound);
}

#[test]
fn noncutoff_annihilates_invariants() {
    let p = Potential::pure_power(2.0, 1.0).unwrap();
    for psi in Psi::invariants() {
        let v = apply_noncutoff_boltzmann(&psi, Vec3::new(0.2, 0.1, 0.0), &p, 50.0, &light()).unwrap();
        assert!(v.value.abs() <= 10.0 * v.error_estimate, "{psi:?} {v:?}");
    }
}

#[test]
fn landau_of_linear_function_is_exactly_zero() {
    let v = apply_linearized_landau(&Psi::by_name("v1").unwrap(), Vec3::new(0.3, -1.0, 2.0), &light()).unwrap();
    assert_eq!(v.value, 0.0);
}

#[test]
fn boltzmann_is_negative_on_gaussian_mode() {
    let p = Potential::default_bump(1.0).unwrap();
    let l = apply_linearized_boltzmann(&gaussian(), Vec3::default(), 0.01, &p, &light()).unwrap();
    assert!(l.value < 0.0);
    assert!((l.breakdown.near_field + l.breakdown.far_field - l.value).abs() <= 1e-14 * l.value.abs());
    assert!(!l.strong_coupling);
    let strong = apply_linearized_boltzmann(&gaussian(), Vec3::default(), 0.6, &p, &light()).unwrap();
    assert!(strong.strong_coupling);
}
