//! Reference integrator against closed-form periods.

use std::f64::consts::PI;

use nsosc_core::numkit::quad_adaptive;
use nsosc_core::systems::{reference_decay, reference_frequency, OscillatorKind, OscillatorSpec};

/// Period of ẍ + εx|x| = 0 from the energy integral, substituted so the
/// endpoint singularity disappears.
fn signum_period(eps: f64, a: f64) -> f64 {
    let c = (2.0 * eps / 3.0).sqrt() * a.powf(1.5);
    let f = |s: f64| 2.0 * a / (c * (3.0 - 3.0 * s * s + s.powi(4)).sqrt());
    4.0 * quad_adaptive(f, 0.0, 1.0, &[], 1e-13).unwrap()
}

/// Period of ẍ|ẋ| + εx = 0 from |ẋ|³ = (3ε/2)(A² − x²).
fn inverse_modulus_period(eps: f64, a: f64) -> f64 {
    let f = |s: f64| {
        let speed = (1.5 * eps * a * a * s * s * (2.0 - s * s)).cbrt();
        if s == 0.0 {
            0.0
        } else {
            2.0 * a * s / speed
        }
    };
    4.0 * quad_adaptive(f, 0.0, 1.0, &[], 1e-12).unwrap()
}

fn heaviside_exact(eps: f64) -> f64 {
    let r = (1.0 + eps).sqrt();
    2.0 * r / (1.0 + r)
}

fn freq(kind: OscillatorKind, eps: f64, a: f64) -> f64 {
    reference_frequency(&OscillatorSpec::with_amplitude(kind, eps, a).unwrap()).unwrap()
}

#[test]
fn signum_matches_energy_integral() {
    for eps in [3.0, 12.0, 50.0] {
        let want = 2.0 * PI / signum_period(eps, 1.0);
        let got = freq(OscillatorKind::Signum, eps, 1.0);
        assert!((got - want).abs() < 1e-7 * want, "eps {eps}: {got} vs {want}");
    }
}

#[test]
fn signum_table_values() {
    for (eps, tabulated) in [(3.0, 1.58368), (50.0, 6.46694)] {
        let got = freq(OscillatorKind::Signum, eps, 1.0);
        assert!((got - tabulated).abs() / tabulated < 2e-3, "eps {eps}: {got}");
    }
}

#[test]
fn signum_quadrupling_scales() {
    let w3 = freq(OscillatorKind::Signum, 3.0, 1.0);
    assert!((freq(OscillatorKind::Signum, 12.0, 1.0) - 2.0 * w3).abs() < 1e-6);
    assert!((freq(OscillatorKind::Signum, 3.0, 4.0) - 2.0 * w3).abs() < 1e-6);
}

#[test]
fn inverse_modulus_matches_energy_integral() {
    for eps in [0.8, 3.2] {
        let want = 2.0 * PI / inverse_modulus_period(eps, 1.0);
        let got = freq(OscillatorKind::InverseModulus, eps, 1.0);
        assert!((got - want).abs() < 1e-6 * want, "eps {eps}: {got} vs {want}");
    }
}

#[test]
fn heaviside_matches_two_branch() {
    for eps in [0.5, 3.0, 6.0] {
        let got = freq(OscillatorKind::Heaviside, eps, 1.0);
        assert!((got - heaviside_exact(eps)).abs() < 1e-7, "eps {eps}: {got}");
    }
}

#[test]
fn heaviside_scale_free() {
    let a = freq(OscillatorKind::Heaviside, 2.3, 1.0);
    let b = freq(OscillatorKind::Heaviside, 2.3, 3.7);
    assert!((a - b).abs() < 1e-6);
}

#[test]
fn modulus_small_eps_near_one() {
    let w = freq(OscillatorKind::Modulus, 0.01, 1.0);
    assert!((w - 1.0).abs() < 1e-2);
}

#[test]
fn impact_scale_free() {
    let r1 = reference_decay(&OscillatorSpec::with_amplitude(OscillatorKind::Impact, -1.73, 1.0).unwrap()).unwrap();
    let r2 = reference_decay(&OscillatorSpec::with_amplitude(OscillatorKind::Impact, -1.73, 3.7).unwrap()).unwrap();
    assert!((r1.frequency - r2.frequency).abs() < 1e-6);
    assert!((r1.ratio_per_period - r2.ratio_per_period).abs() < 1e-6);
}

#[test]
fn impact_ratios_match_restitution() {
    for e in [0.5, 0.73, 0.9] {
        let r = reference_decay(&OscillatorSpec::impact(e).unwrap()).unwrap();
        assert!((r.ratio_per_period - e).abs() < 1e-6, "e {e}: {}", r.ratio_per_period);
        for w in r.post_speeds.windows(2) {
            assert!((w[1] / w[0] - e).abs() < 1e-6);
        }
    }
}
