//! Comparison methods: Lindstedt–Poincaré, conventional HAM, harmonic
//! balance and the NSTT amplitude-phase path.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::{
    find_roots, fourier_project, quad_adaptive, solve_ivp, solve_system, Direction, Event, EventTag, IvpProblem,
    NonlinearSystem,
};
use crate::systems::{reference_frequency, residual, OscillatorKind, OscillatorSpec};
use crate::trigcalc::{PiecewiseTrigSeries, TrigKind, TrigTerm};

pub const LP_OMEGA1: f64 = 0.25;
pub const LP_OMEGA2: f64 = -0.125;
/// Flat-region threshold as a fraction of the steepest slope on the scan.
pub const HAM_FLAT_FRACTION: f64 = 0.05;
const HB_QUAD_TOL: f64 = 1e-13;

/// Ω(ε) = 1 + ε/4 − ε²/8.
pub fn lp_frequency(eps: f64) -> f64 {
    1.0 + LP_OMEGA1 * eps + LP_OMEGA2 * eps * eps
}

/// LP approximation `x₀ + εx₁ + ε²x₂` on one period of the stretched time.
#[derive(Debug, Clone, PartialEq)]
pub struct LpWaveform {
    pub omega: f64,
    /// Series in τ = Ωt on [0, 2π].
    pub series: PiecewiseTrigSeries,
}

impl LpWaveform {
    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega
    }

    /// Displacement at physical time `t ∈ [0, 2π/Ω]`.
    pub fn evaluate(&self, t: f64) -> Result<f64> {
        Ok(self.series.evaluate(self.omega * t)?)
    }
}

fn lp_x1_terms() -> Vec<TrigTerm> {
    let (h1, h2) = (PI / 2.0, 1.5 * PI);
    vec![
        TrigTerm::cos(0.5, 1).activated_at(h1),
        TrigTerm::sin(-PI / 4.0, 1).activated_at(h1),
        TrigTerm::sin(0.5, 1).with_power(1).activated_at(h1),
        TrigTerm::cos(-0.5, 1).activated_at(h2),
        TrigTerm::sin(0.75 * PI, 1).activated_at(h2),
        TrigTerm::sin(-0.5, 1).with_power(1).activated_at(h2),
        TrigTerm::sin(-0.25, 1).with_power(1),
    ]
}

fn lp_x2_terms() -> Vec<TrigTerm> {
    let (h1, h2) = (PI / 2.0, 1.5 * PI);
    let pp = PI * PI;
    vec![
        TrigTerm::cos(-pp / 32.0 - 0.125, 1).activated_at(h1),
        TrigTerm::cos(PI / 16.0, 1).with_power(1).activated_at(h1),
        TrigTerm::sin(PI / 16.0, 1).activated_at(h1),
        TrigTerm::sin(-0.125, 1).with_power(1).activated_at(h1),
        TrigTerm::cos(-3.0 * pp / 32.0 + 0.125, 1).activated_at(h2),
        TrigTerm::cos(PI / 16.0, 1).with_power(1).activated_at(h2),
        TrigTerm::sin(-3.0 * PI / 16.0, 1).activated_at(h2),
        TrigTerm::sin(0.125, 1).with_power(1).activated_at(h2),
        TrigTerm::cos(-1.0 / 32.0, 1).with_power(2),
        TrigTerm::sin(1.0 / 16.0, 1).with_power(1),
    ]
}

/// First-order LP correction x₁(τ) on [0, 2π].
pub fn lp_x1() -> PiecewiseTrigSeries {
    PiecewiseTrigSeries::new(lp_x1_terms(), 2.0 * PI).expect("static terms")
}

/// Second-order LP correction x₂(τ) on [0, 2π].
pub fn lp_x2() -> PiecewiseTrigSeries {
    PiecewiseTrigSeries::new(lp_x2_terms(), 2.0 * PI).expect("static terms")
}

pub fn lp_waveform(eps: f64) -> LpWaveform {
    let mut terms = vec![TrigTerm::cos(1.0, 1)];
    terms.extend(lp_x1_terms().into_iter().map(|t| TrigTerm { c: eps * t.c, ..t }));
    terms.extend(lp_x2_terms().into_iter().map(|t| TrigTerm { c: eps * eps * t.c, ..t }));
    let series = PiecewiseTrigSeries::new(terms, 2.0 * PI).expect("finite coefficients").normalize();
    LpWaveform { omega: lp_frequency(eps), series }
}

/// Third-order HAM λ(1) as a cubic in the convergence-control constant `h`.
pub fn ham_lambda1(eps: f64, h: f64) -> f64 {
    let (h2, h3) = (h * h, h * h * h);
    1.0 + eps / 4.0 * (3.0 * h + 3.0 * h2 + h3) + eps * eps / 8.0 * (4.5 * h2 + 3.0 * h3) + eps.powi(3) * 5.0 * h3 / 32.0
}

/// ∂λ(1)/∂h.
pub fn ham_lambda1_slope(eps: f64, h: f64) -> f64 {
    let h2 = h * h;
    eps / 4.0 * (3.0 + 6.0 * h + 3.0 * h2) + eps * eps / 8.0 * (9.0 * h + 9.0 * h2) + eps.powi(3) * 15.0 * h2 / 32.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HamSelection {
    pub h: f64,
    pub omega: f64,
    /// Ends of the flat region on the scan grid.
    pub flat: (f64, f64),
}

/// Midpoint of the longest run of grid points on [−2, 0] where the slope of
/// λ(1) stays under [`HAM_FLAT_FRACTION`] of its maximum.
pub fn ham_select_h(eps: f64) -> Result<HamSelection> {
    if !eps.is_finite() || eps < 0.0 {
        return Err(Error::Domain(format!("ham needs eps >= 0, got {eps}")));
    }
    let grid: Vec<f64> = (0..=200).map(|i| -2.0 + 0.01 * i as f64).collect();
    let slopes: Vec<f64> = grid.iter().map(|&h| ham_lambda1_slope(eps, h).abs()).collect();
    let max = slopes.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        // λ ≡ 1: everything is flat
        return Ok(HamSelection { h: -1.0, omega: 1.0, flat: (-2.0, 0.0) });
    }
    let mut best: Option<(usize, usize)> = None;
    let mut start = None;
    for i in 0..=grid.len() {
        let flat = i < grid.len() && slopes[i] < HAM_FLAT_FRACTION * max;
        match (flat, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                if best.is_none_or(|(bs, be)| i - 1 - s > be - bs) {
                    best = Some((s, i - 1));
                }
                start = None;
            }
            _ => {}
        }
    }
    let (s, e) = best.ok_or_else(|| Error::Selection(format!("eps = {eps}: slope never below threshold")))?;
    let h = 0.5 * (grid[s] + grid[e]);
    let lam = ham_lambda1(eps, h);
    if !(lam > 0.0) {
        return Err(Error::Selection(format!("eps = {eps}: λ(1) = {lam} at h = {h}")));
    }
    Ok(HamSelection { h, omega: 1.0 / lam, flat: (grid[s], grid[e]) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HbSolution {
    pub n_terms: usize,
    pub a1: f64,
    pub a2: f64,
    pub omega: f64,
    pub residual_norm: f64,
}

/// Sign changes of `f` over one period, used as quadrature breakpoints.
fn switch_points(f: impl Fn(f64) -> f64, period: f64) -> Vec<f64> {
    find_roots(f, 0.0, period, 400, 1e-15).unwrap_or_default()
}

fn hb_projections(spec: &OscillatorSpec, a1: f64, a2: f64, w: f64, n_terms: usize) -> Result<Vec<f64>> {
    let x = |t: f64| a1 * (w * t).cos() + a2 * (3.0 * w * t).cos();
    let v = |t: f64| -w * (a1 * (w * t).sin() + 3.0 * a2 * (3.0 * w * t).sin());
    let acc = |t: f64| -w * w * (a1 * (w * t).cos() + 9.0 * a2 * (3.0 * w * t).cos());
    let period = 2.0 * PI / w;
    let mut bp = switch_points(x, period);
    bp.extend(switch_points(v, period));
    let harmonics: &[(TrigKind, u32)] = if n_terms == 1 { &[(TrigKind::Cos, 1)] } else { &[(TrigKind::Cos, 1), (TrigKind::Cos, 3)] };
    let scale = spec.amplitude * w.powi(2).max(1.0);
    let r = fourier_project(|t| residual(spec, x(t), v(t), acc(t)), w, harmonics, &bp, HB_QUAD_TOL)?;
    Ok(r.into_iter().map(|c| c / scale).collect())
}

/// One- or two-term harmonic balance.
///
/// The two-term ansatz is `A₁cos ωt + A₂cos 3ωt` with `A₁ + A₂ = A`; the
/// residual is projected onto `cos ωt` and `cos 3ωt`. `omega_guess` defaults
/// to the reference frequency.
pub fn hb_solve(spec: &OscillatorSpec, n_terms: usize, omega_guess: Option<f64>) -> Result<HbSolution> {
    spec.validate()?;
    if !spec.kind.is_periodic() {
        return Err(Error::Domain("harmonic balance needs a periodic oscillator".into()));
    }
    if !(1..=2).contains(&n_terms) {
        return Err(Error::Domain(format!("n_terms must be 1 or 2, got {n_terms}")));
    }
    let seed = match omega_guess {
        Some(w) => w,
        None => reference_frequency(spec).unwrap_or(1.0),
    };
    let a = spec.amplitude;
    let s = *spec;
    let (guess, brackets) = if n_terms == 1 {
        (vec![seed], vec![(0.5 * seed, 1.5 * seed)])
    } else {
        (vec![seed, 0.0], vec![(0.5 * seed, 1.5 * seed), (-a, a)])
    };
    let sys = NonlinearSystem::new(
        move |u: &[f64]| {
            let (w, a2) = (u[0], u.get(1).copied().unwrap_or(0.0));
            hb_projections(&s, a - a2, a2, w, n_terms).unwrap_or_else(|_| vec![f64::NAN; n_terms])
        },
        guess,
    )
    .brackets(brackets)
    .restart_scale(if n_terms == 1 { vec![0.2 * seed] } else { vec![0.2 * seed, 0.1 * a] });
    let rep = solve_system(&sys).map_err(|e| Error::Solve { method: "harmonic balance", detail: e.to_string() })?;
    let a2 = rep.x.get(1).copied().unwrap_or(0.0);
    Ok(HbSolution { n_terms, a1: a - a2, a2, omega: rep.x[0], residual_norm: rep.residual_norm })
}

/// Triangular wave of period 4 with peaks ±1 at odd integers.
pub fn tri_wave(s: f64) -> f64 {
    (2.0 / PI) * (0.5 * PI * s).sin().asin()
}

/// Rectangular wave of period 4, the derivative of [`tri_wave`].
pub fn rect_wave(s: f64) -> f64 {
    if (0.5 * PI * s).cos() >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Phase rate of the transformed system for the Heaviside oscillator.
pub fn nstt_phase_rate(eps: f64, phi: f64) -> f64 {
    let s = 2.0 * phi / PI;
    let c = (0.5 * PI * tri_wave(s)).cos();
    1.0 + 0.5 * eps * (1.0 + rect_wave(s)) * c * c
}

/// Rate of change of the amplitude in the transformed system.
pub fn nstt_amplitude_rate(eps: f64, amplitude: f64, phi: f64) -> f64 {
    let s = 2.0 * phi / PI;
    0.25 * eps * amplitude * (1.0 + rect_wave(s)) * (PI * tri_wave(s)).sin()
}

/// First-order averaged frequency: the mean of the phase rate over one
/// phase cycle.
pub fn nstt_frequency(eps: f64) -> Result<f64> {
    if !(eps > -1.0) {
        return Err(Error::Domain(format!("nstt needs eps > -1, got {eps}")));
    }
    let bp = [0.5 * PI, 1.5 * PI];
    let v = quad_adaptive(|phi| nstt_phase_rate(eps, phi), 0.0, 2.0 * PI, &bp, 1e-13)?;
    Ok(v / (2.0 * PI))
}

/// Frequency from integrating the phase equation in time over `cycles`
/// phase cycles.
pub fn nstt_time_average(eps: f64, cycles: usize) -> Result<f64> {
    if !(eps > -1.0) || cycles == 0 {
        return Err(Error::Domain(format!("nstt needs eps > -1 and cycles > 0, got {eps}, {cycles}")));
    }
    let target = 2.0 * PI * cycles as f64;
    let p = IvpProblem::new(move |_, y, dy| dy[0] = nstt_phase_rate(eps, y[0]), vec![0.0], (0.0, 10.0 * target))
        .event(Event::new(EventTag::Stop, move |_, y: &[f64]| y[0] - target, Direction::Rising).terminal())
        .event(Event::new(EventTag::ZeroCrossing, |_, y: &[f64]| (y[0]).cos(), Direction::Either))
        // keep steps short enough that the error estimate sees every switch
        .max_step(0.25);
    let trace = solve_ivp(&p)?;
    let stop = trace
        .events_tagged(EventTag::Stop)
        .next()
        .ok_or_else(|| Error::Solve { method: "nstt", detail: "phase never completed".into() })?;
    Ok(target / stop.t)
}

/// Convenience wrapper used by sweeps: LP/HAM/NSTT only apply to the
/// Heaviside oscillator.
pub fn require_heaviside(kind: OscillatorKind, method: &str) -> Result<()> {
    if kind == OscillatorKind::Heaviside {
        Ok(())
    } else {
        Err(Error::Domain(format!("{method} is only defined for the heaviside oscillator")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn lp_values() {
        assert_eq!(lp_frequency(0.0), 1.0);
        assert!((lp_frequency(0.4) - 1.08).abs() < 1e-15);
        assert!((lp_frequency(0.8) - 1.12).abs() < 1e-15);
    }

    #[test]
    fn lp_initial_conditions() {
        for eps in [0.0, 0.4, 0.8, 2.0] {
            let w = lp_waveform(eps);
            let d = w.series.differentiate().unwrap();
            assert!((w.series.evaluate(0.0).unwrap() - 1.0).abs() < 1e-12);
            assert!(d.evaluate(0.0).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn lp_eps_zero_is_cos() {
        let w = lp_waveform(0.0);
        for t in [0.0, 1.0, 2.5, 6.0] {
            assert!((w.evaluate(t).unwrap() - t.cos()).abs() < 1e-15);
        }
    }

    #[test]
    fn lp_first_order_equation() {
        // x₁'' + x₁ = 2ω₁cos τ − H(cos τ)cos τ
        let x1 = lp_x1();
        let d2 = x1.differentiate().unwrap().differentiate().unwrap();
        for i in 0..50 {
            let tau = 0.013 + 0.1271 * i as f64;
            let c = tau.cos();
            let f = 2.0 * LP_OMEGA1 * c - if c >= 0.0 { c } else { 0.0 };
            assert!((d2.evaluate(tau).unwrap() + x1.evaluate(tau).unwrap() - f).abs() < 1e-10);
        }
    }

    #[test]
    fn lp_second_order_equation() {
        // x₂'' + x₂ = −2ω₁x₁'' − (ω₁² + 2ω₂)x₀'' − H(x₀)x₁
        let x1 = lp_x1();
        let x2 = lp_x2();
        let x1pp = x1.differentiate().unwrap().differentiate().unwrap();
        let x2pp = x2.differentiate().unwrap().differentiate().unwrap();
        for i in 0..50 {
            let tau = 0.013 + 0.1271 * i as f64;
            let c = tau.cos();
            let h = if c >= 0.0 { 1.0 } else { 0.0 };
            let rhs = -2.0 * LP_OMEGA1 * x1pp.evaluate(tau).unwrap()
                + (LP_OMEGA1 * LP_OMEGA1 + 2.0 * LP_OMEGA2) * c
                - h * x1.evaluate(tau).unwrap();
            let lhs = x2pp.evaluate(tau).unwrap() + x2.evaluate(tau).unwrap();
            assert!((lhs - rhs).abs() < 1e-10, "tau {tau}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn ham_values() {
        assert_eq!(ham_lambda1(3.0, 0.0), 1.0);
        assert!((ham_lambda1(0.5, -0.5) - 0.9116211).abs() < 1e-7);
        assert!((1.0 / ham_lambda1(0.5, -0.5) - 1.09694).abs() < 1e-5);
        // direct evaluation of the cubic; see the notes on the 0.9221 figure
        assert!((ham_lambda1(0.5, -1.0) - 0.902344).abs() < 1e-6);
    }

    #[test]
    fn ham_golden_coefficients() {
        // hand-evaluated points pin all four coefficient groups
        assert!((ham_lambda1(2.0, 1.0) - 9.5).abs() < 1e-12);
        assert!((ham_lambda1(1.0, -2.0) + 1.5).abs() < 1e-12);
        assert!((ham_lambda1(1.0, 1.0) - (1.0 + 1.75 + 0.9375 + 0.15625)).abs() < 1e-12);
        assert!((ham_lambda1(-1.0, 2.0) - (1.0 - 6.5 + 5.25 - 1.25)).abs() < 1e-12);
    }

    #[test]
    fn ham_slope_matches_difference() {
        for (e, h) in [(0.5, -0.3), (3.0, -1.2), (1.0, 0.4)] {
            let d = (ham_lambda1(e, h + 1e-6) - ham_lambda1(e, h - 1e-6)) / 2e-6;
            assert!((d - ham_lambda1_slope(e, h)).abs() < 1e-6);
        }
    }

    #[test]
    fn ham_selection_small_eps() {
        let s = ham_select_h(1e-6).unwrap();
        assert!((s.omega - 1.0).abs() < 1e-5);
        assert!(s.flat.0 <= s.h && s.h <= s.flat.1);
    }

    #[test]
    fn ham_zero_eps_flat() {
        let s = ham_select_h(0.0).unwrap();
        assert_eq!(s.omega, 1.0);
    }

    #[test]
    fn ham_monotone_in_eps() {
        for h in [-0.25, -0.5, -0.75, -1.0] {
            let mut prev = ham_lambda1(0.0, h);
            for i in 1..=100 {
                let l = ham_lambda1(0.01 * i as f64, h);
                assert!(l < prev, "h {h}, eps {}", 0.01 * i as f64);
                prev = l;
            }
        }
    }

    #[test]
    fn hb_shm_limit() {
        let s = OscillatorSpec::new(OscillatorKind::Heaviside, 0.0).unwrap();
        let r = hb_solve(&s, 2, None).unwrap();
        assert!((r.omega - 1.0).abs() < 1e-9 && r.a2.abs() < 1e-9 && (r.a1 - 1.0).abs() < 1e-9);
        let s = OscillatorSpec::new(OscillatorKind::Heaviside, 1e-6).unwrap();
        let r = hb_solve(&s, 2, None).unwrap();
        assert!((r.omega - 1.0).abs() < 1e-4);
    }

    #[test]
    fn hb_signum_one_term() {
        let s = OscillatorSpec::new(OscillatorKind::Signum, 3.0).unwrap();
        let r = hb_solve(&s, 1, None).unwrap();
        assert!((r.omega - (8.0 * 3.0 / (3.0 * PI)).sqrt()).abs() < 1e-8, "{}", r.omega);
    }

    #[test]
    fn hb_rejects_bad_terms() {
        let s = OscillatorSpec::new(OscillatorKind::Signum, 3.0).unwrap();
        assert!(hb_solve(&s, 3, Some(1.0)).is_err());
    }

    #[test]
    fn nstt_first_order() {
        assert!((nstt_frequency(0.0).unwrap() - 1.0).abs() < 1e-13);
        assert!((nstt_frequency(0.4).unwrap() - 1.1).abs() < 1e-12);
    }

    #[test]
    fn nstt_time_average_is_exact_frequency() {
        for eps in [0.4, 3.0] {
            let r = (1.0_f64 + eps).sqrt();
            let want = 2.0 * r / (1.0 + r);
            let got = nstt_time_average(eps, 5).unwrap();
            assert!((got - want).abs() < 1e-8, "{got} vs {want}");
        }
    }

    #[test]
    fn wave_endpoints() {
        assert!((tri_wave(1.0) - 1.0).abs() < 1e-15);
        assert!(tri_wave(0.0).abs() < 1e-15);
        assert_eq!(rect_wave(0.5), 1.0);
        assert_eq!(rect_wave(2.0), -1.0);
    }

    proptest! {
        #[test]
        fn nstt_waves_well_formed(phi in -100.0f64..100.0) {
            let s = 2.0 * phi / PI;
            prop_assert_eq!(rect_wave(s) * rect_wave(s), 1.0);
            prop_assert!(tri_wave(s).abs() <= 1.0);
        }

        #[test]
        fn rect_is_tri_slope(s in -10.0f64..10.0) {
            // away from the corners
            prop_assume!((s - s.round()).abs() > 1e-3 || s.round() as i64 % 2 == 0);
            let d = (tri_wave(s + 1e-7) - tri_wave(s - 1e-7)) / 2e-7;
            prop_assert!((d - rect_wave(s)).abs() < 1e-5);
        }
    }
}
