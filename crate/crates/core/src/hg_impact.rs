//! HG for the unilaterally constrained pendulum ẍ + x + εẋ²δ*(x) = 0,
//! built on a viscously damped linear operator.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::{brent, find_roots};
use crate::trigcalc::{PiecewiseTrigSeries, TrigTerm};

pub const DEFAULT_ROOTS: usize = 4;
/// Below this |ẏ⁻| a zero is treated as grazing.
pub const GRAZING_SLOPE: f64 = 1e-10;
const SCAN_CELLS: usize = 300;
const SNAP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChiMode {
    /// χ0 = √(1 + L²/(L² + 4π²)).
    #[default]
    Printed,
    /// χ0 = 1 + γ0²/4, so the damped frequency is exactly one.
    OmegaDUnit,
}

impl fmt::Display for ChiMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Printed => "printed",
            Self::OmegaDUnit => "omega_d_unit",
        })
    }
}

impl FromStr for ChiMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "printed" => Ok(Self::Printed),
            "omega_d_unit" => Ok(Self::OmegaDUnit),
            o => Err(Error::Domain(format!("unknown chi_mode '{o}'"))),
        }
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if (-2.0..-1.0).contains(&eps) {
        Ok(())
    } else {
        Err(Error::Domain(format!("impact pendulum needs -2 <= eps < -1, got {eps}")))
    }
}

/// (γ0, χ0) from the per-cycle decay of the impact law.
pub fn gamma_chi_zero(eps: f64, mode: ChiMode) -> Result<(f64, f64)> {
    check_eps(eps)?;
    let l = (-eps - 1.0).ln();
    let d = l * l + 4.0 * PI * PI;
    let gamma0 = -2.0 * l / d.sqrt();
    let chi0 = match mode {
        ChiMode::Printed => (1.0 + l * l / d).sqrt(),
        ChiMode::OmegaDUnit => 1.0 + gamma0 * gamma0 / 4.0,
    };
    Ok((gamma0, chi0))
}

/// ε whose printed γ0 equals `gamma0`.
pub fn epsilon_for_gamma0(gamma0: f64) -> Result<f64> {
    if !(0.0..2.0).contains(&gamma0) {
        return Err(Error::Domain(format!("gamma0 must lie in [0, 2), got {gamma0}")));
    }
    let l = -2.0 * PI * gamma0 / (4.0 - gamma0 * gamma0).sqrt();
    Ok(-1.0 - l.exp())
}

/// Zeros tᵢ = iπ − atan(2/γ0), i = 1..=n.
pub fn x0_roots(gamma0: f64, n: usize) -> Vec<f64> {
    let shift = 2f64.atan2(gamma0);
    (1..=n).map(|i| i as f64 * PI - shift).collect()
}

/// e^{−γ0t/2}(cos t + (γ0/2) sin t).
pub fn build_x0_impact(gamma0: f64, domain_end: f64) -> Result<PiecewiseTrigSeries> {
    if !(gamma0 >= 0.0) {
        return Err(Error::Domain(format!("gamma0 must be non-negative, got {gamma0}")));
    }
    let r = -gamma0 / 2.0;
    Ok(PiecewiseTrigSeries::new(
        vec![TrigTerm::cos(1.0, 1).with_rate(r), TrigTerm::sin(gamma0 / 2.0, 1).with_rate(r)],
        domain_end,
    )?)
}

fn horizon(roots: &[f64]) -> f64 {
    roots.last().map_or(PI, |t| t + PI)
}

/// x⁽⁰⁾ + εh⁽¹⁾x⁽⁰⁾ Σ (−1)ⁱ H(t − tᵢ) on [0, t_N + π].
pub fn build_x1_impact(eps: f64, gamma0: f64, h1: f64, roots: &[f64]) -> Result<PiecewiseTrigSeries> {
    let end = horizon(roots);
    let x0 = build_x0_impact(gamma0, end)?;
    let mut terms = x0.terms().to_vec();
    for (i, &t) in roots.iter().enumerate() {
        let sign = if i % 2 == 0 { -1.0 } else { 1.0 };
        terms.extend(x0.terms().iter().map(|p| TrigTerm { c: p.c * sign * eps * h1, a: t, ..*p }));
    }
    Ok(PiecewiseTrigSeries::new(terms, end)?.normalize())
}

/// Galerkin weight cos t Σ H(t − tᵢ) over the same horizon.
pub fn impact_weight(roots: &[f64]) -> Result<PiecewiseTrigSeries> {
    let terms = roots.iter().map(|&t| TrigTerm::cos(1.0, 1).activated_at(t)).collect();
    Ok(PiecewiseTrigSeries::new(terms, horizon(roots))?)
}

/// ∫ f δ*(y) dt over the window (lo, hi]: Σ f(tᵢ, ẏ⁻(tᵢ)) / |ẏ⁻(tᵢ)| over
/// the zeros of y. `f` receives the zero and the left slope there. `seeds`
/// are zeros known in advance; they catch touching zeros and fix the side
/// of a kink on which the slope is read.
pub fn delta_star_integral(
    y: &PiecewiseTrigSeries,
    f: impl Fn(f64, f64) -> f64,
    window: (f64, f64),
    seeds: &[f64],
) -> Result<f64> {
    let (lo, hi) = window;
    if !(0.0 <= lo && lo < hi && hi <= y.domain_end()) {
        return Err(Error::Domain(format!("bad window [{lo}, {hi}]")));
    }
    let eval = |t: f64| y.evaluate(t).unwrap_or(f64::NAN);
    let cells = ((hi - lo) / 0.05).ceil().max(64.0) as usize;
    let scale = (0..=cells).map(|i| eval(lo + (hi - lo) * i as f64 / cells as f64).abs()).fold(1e-300, f64::max);
    let is_zero = |t: f64| eval(t).abs() <= 1e-12 * scale;

    let mut zeros = find_roots(eval, lo, hi, cells, 1e-15)?;
    zeros.extend(seeds.iter().copied().filter(|&t| t > lo && t <= hi && is_zero(t)));
    if is_zero(hi) {
        zeros.push(hi);
    }
    let anchors: Vec<f64> = seeds.iter().copied().chain(y.activation_times()).collect();
    for z in zeros.iter_mut() {
        if let Some(&a) = anchors.iter().find(|&&a| (a - *z).abs() < SNAP) {
            *z = a;
        }
    }
    zeros.retain(|&t| t > lo);
    zeros.sort_by(f64::total_cmp);
    zeros.dedup_by(|a, b| (*a - *b).abs() < SNAP);

    let dy = y.differentiate_regular();
    let mut total = 0.0;
    for t in zeros {
        let slope = dy.eval_left(t)?;
        if slope.abs() < GRAZING_SLOPE {
            return Err(Error::GrazingZero { t, derivative: slope });
        }
        total += f(t, slope) / slope.abs();
    }
    Ok(total)
}

/// ∫ w₁ R₁ dt over [0, t_N + π]: the classical part of ẍ₁ + x₁ plus the
/// impact part ε Σ w₁⁻(tᵢ) |ẋ₁⁻(tᵢ)| over t₁..t_N.
pub fn impact_residual(eps: f64, gamma0: f64, h1: f64, roots: &[f64]) -> Result<f64> {
    let x1 = build_x1_impact(eps, gamma0, h1, roots)?;
    let w = impact_weight(roots)?;
    let end = x1.domain_end();
    let smooth = x1.differentiate_regular().differentiate_regular().add(&x1)?.product(&w)?.integrate_definite(0.0, end)?;
    // the zero at t_N + π opens the first lobe left out of the truncation
    let window = (0.0, end - PI / 2.0);
    let impacts = delta_star_integral(&x1, |t, v| w.eval_left(t).unwrap_or(f64::NAN) * v * v, window, roots)?;
    Ok(smooth + eps * impacts)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImpactHgOptions {
    pub chi_mode: ChiMode,
    /// Number of x⁽⁰⁾ zeros kept in x⁽¹⁾ and in the weight.
    pub roots: usize,
}

impl Default for ImpactHgOptions {
    fn default() -> Self {
        Self { chi_mode: ChiMode::Printed, roots: DEFAULT_ROOTS }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImpactHgState {
    pub eps: f64,
    pub restitution: f64,
    pub chi_mode: ChiMode,
    pub gamma0: f64,
    pub chi0: f64,
    /// Kept for completeness; nothing downstream uses them.
    pub gamma1: f64,
    pub chi1: f64,
    pub h1: f64,
    /// Every root of the Galerkin equation found on the scan.
    pub candidates: Vec<f64>,
    pub residual: f64,
    pub roots: Vec<f64>,
    pub x1: PiecewiseTrigSeries,
}

impl ImpactHgState {
    /// State for a given h⁽¹⁾ without solving for it.
    pub fn new(eps: f64, h1: f64, opts: &ImpactHgOptions) -> Result<Self> {
        if opts.roots < 2 {
            return Err(Error::Domain(format!("need at least two roots, got {}", opts.roots)));
        }
        let (gamma0, chi0) = gamma_chi_zero(eps, opts.chi_mode)?;
        let roots = x0_roots(gamma0, opts.roots);
        let g2 = gamma0 * gamma0;
        Ok(Self {
            eps,
            restitution: -1.0 - eps,
            chi_mode: opts.chi_mode,
            gamma0,
            chi0,
            gamma1: -g2 * h1 / (g2 + 4.0),
            chi1: -gamma0 * h1,
            h1,
            candidates: Vec::new(),
            residual: impact_residual(eps, gamma0, h1, &roots)?,
            x1: build_x1_impact(eps, gamma0, h1, &roots)?,
            roots,
        })
    }

    /// √(χ0 − γ0²/4).
    pub fn omega_d(&self) -> f64 {
        (self.chi0 - self.gamma0 * self.gamma0 / 4.0).sqrt()
    }

    pub fn evaluate(&self, t: f64) -> Result<f64> {
        Ok(self.x1.evaluate(t)?)
    }

    pub fn horizon(&self) -> f64 {
        self.x1.domain_end()
    }

    /// Peak of the third lobe of x₁ over the first, i.e. x₁(2π)/x₁(0).
    pub fn decay_ratio(&self) -> Result<f64> {
        Ok(self.x1.evaluate(2.0 * PI)? / self.x1.evaluate(0.0)?)
    }

    /// e^{−γ0π/ω_d} − e: how far the zeroth-order decay per cycle is from
    /// the restitution coefficient under the chosen χ0.
    pub fn decay_mismatch(&self) -> f64 {
        (-self.gamma0 * PI / self.omega_d()).exp() - self.restitution
    }

    /// tᵢ minus the matching impact time, pairwise.
    pub fn zero_offsets(&self, impact_times: &[f64]) -> Vec<f64> {
        self.roots.iter().zip(impact_times).map(|(t, s)| t - s).collect()
    }
}

/// Scans h⁽¹⁾ ∈ [−2, 1] for roots of the Galerkin equation and keeps the one
/// with 1 − εh⁽¹⁾ > 0 closest to zero.
pub fn solve_h1_impact(eps: f64, opts: &ImpactHgOptions) -> Result<ImpactHgState> {
    let probe = ImpactHgState::new(eps, 0.0, opts)?;
    let (gamma0, roots) = (probe.gamma0, probe.roots.clone());
    let r = |h: f64| impact_residual(eps, gamma0, h, &roots).unwrap_or(f64::NAN);
    let (lo, hi) = (-2.0, 1.0);
    let grid: Vec<(f64, f64)> = (0..=SCAN_CELLS)
        .map(|i| {
            let h = lo + (hi - lo) * i as f64 / SCAN_CELLS as f64;
            (h, r(h))
        })
        .collect();

    // with γ0 = 0 every weighted term vanishes and h⁽¹⁾ is unconstrained
    if grid.iter().all(|p| p.1.abs() < 1e-13) {
        let mut s = ImpactHgState::new(eps, 0.0, opts)?;
        s.candidates = vec![0.0];
        return Ok(s);
    }

    let mut candidates = Vec::new();
    for w in grid.windows(2) {
        let ((h0, r0), (h1, r1)) = (w[0], w[1]);
        if r0 == 0.0 {
            candidates.push(h0);
        } else if r0 * r1 < 0.0 {
            candidates.push(brent(&r, h0, h1, 1e-14)?);
        }
    }
    if grid[SCAN_CELLS].1 == 0.0 {
        candidates.push(hi);
    }
    let chosen = candidates
        .iter()
        .copied()
        .filter(|&h| 1.0 - eps * h > 0.0)
        .min_by(|a, b| a.abs().total_cmp(&b.abs()));
    let Some(h1) = chosen else {
        let dump: Vec<String> = grid.iter().step_by(30).map(|(h, v)| format!("{h:.2}:{v:.3e}")).collect();
        return Err(Error::Solve {
            method: "hg_impact",
            detail: format!("no admissible root in [-2, 1] (found {candidates:?}); residual {}", dump.join(" ")),
        });
    };
    let mut s = ImpactHgState::new(eps, h1, opts)?;
    s.candidates = candidates;
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    const EPS: f64 = -1.7304;

    fn series(terms: Vec<TrigTerm>, end: f64) -> PiecewiseTrigSeries {
        PiecewiseTrigSeries::new(terms, end).unwrap()
    }

    #[test]
    fn elastic_limit() {
        let (g, c) = gamma_chi_zero(-2.0, ChiMode::Printed).unwrap();
        assert_eq!((g, c), (0.0, 1.0));
        let (g, c) = gamma_chi_zero(-2.0 + 1e-12, ChiMode::Printed).unwrap();
        assert!(g < 1e-12 && (c - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gamma0_at_reference_eps() {
        let (g, _) = gamma_chi_zero(EPS, ChiMode::Printed).unwrap();
        assert!((g - 0.100).abs() < 1e-3, "{g}");
    }

    #[test]
    fn gamma0_inversion() {
        let e = epsilon_for_gamma0(0.2).unwrap();
        assert!((e + 1.5318).abs() < 1e-3, "{e}");
        let back = gamma_chi_zero(e, ChiMode::Printed).unwrap().0;
        assert!((back - 0.2).abs() < 1e-12);
    }

    #[test]
    fn chi_modes() {
        let (g, c) = gamma_chi_zero(-1.5, ChiMode::OmegaDUnit).unwrap();
        assert!((c - 1.0 - g * g / 4.0).abs() < 1e-15);
        assert!(gamma_chi_zero(-1.5, ChiMode::Printed).unwrap().1 >= 1.0);
        assert_eq!("omega_d_unit".parse::<ChiMode>().unwrap(), ChiMode::OmegaDUnit);
    }

    #[test]
    fn eps_range_checked() {
        assert!(gamma_chi_zero(-1.0, ChiMode::Printed).is_err());
        assert!(gamma_chi_zero(-2.1, ChiMode::Printed).is_err());
    }

    #[test]
    fn x0_initial_conditions_and_zeros() {
        let x0 = build_x0_impact(0.1, 20.0).unwrap();
        assert!((x0.evaluate(0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(x0.differentiate().unwrap().evaluate(0.0).unwrap().abs() < 1e-15);
        for t in x0_roots(0.1, 5) {
            assert!(x0.evaluate(t).unwrap().abs() < 1e-12);
        }
        let r = x0_roots(0.1, 6);
        for w in r.windows(2) {
            assert!((w[1] - w[0] - PI).abs() < 1e-12);
        }
    }

    #[test]
    fn x0_undamped_is_cos() {
        let x0 = build_x0_impact(0.0, 10.0).unwrap();
        for t in [0.3, 2.0, 7.0] {
            assert!((x0.evaluate(t).unwrap() - t.cos()).abs() < 1e-15);
        }
    }

    #[test]
    fn x1_lobes() {
        let roots = x0_roots(0.1, 4);
        let x0 = build_x0_impact(0.1, horizon(&roots)).unwrap();
        let x1 = build_x1_impact(EPS, 0.1, -0.4, &roots).unwrap();
        let mid = 0.5 * (roots[0] + roots[1]);
        assert_eq!(x1.evaluate(1.0).unwrap(), x0.evaluate(1.0).unwrap());
        let want = (1.0 - EPS * -0.4) * x0.evaluate(mid).unwrap();
        assert!((x1.evaluate(mid).unwrap() - want).abs() < 1e-14);
        for &t in &roots {
            assert!((x1.evaluate(t).unwrap() - x1.eval_left(t).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn delta_star_examples() {
        let line = series(vec![TrigTerm::constant(1.0).with_power(1), TrigTerm::constant(-1.0)], 2.0);
        assert!((delta_star_integral(&line, |_, _| 1.0, (0.0, 2.0), &[]).unwrap() - 1.0).abs() < 1e-12);
        let cos = series(vec![TrigTerm::cos(1.0, 1)], 2.0 * PI);
        assert!((delta_star_integral(&cos, |_, _| 1.0, (0.0, 2.0 * PI), &[]).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn delta_star_on_x0() {
        let g: f64 = 0.1;
        let x0 = build_x0_impact(g, 4.0 * PI).unwrap();
        let got = delta_star_integral(&x0, |_, _| 1.0, (0.0, 4.0 * PI), &[]).unwrap();
        let want: f64 = x0_roots(g, 4).iter().map(|t| 1.0 / ((1.0 + g * g / 4.0).sqrt() * (-g * t / 2.0).exp())).sum();
        assert!((got - want).abs() < 1e-10 * want, "{got} vs {want}");
    }

    #[test]
    fn delta_star_grazing() {
        let touch = series(vec![TrigTerm::cos(1.0, 1), TrigTerm::constant(1.0)], 2.0 * PI);
        let r = delta_star_integral(&touch, |_, _| 1.0, (0.0, 2.0 * PI), &[PI]);
        assert!(matches!(r, Err(Error::GrazingZero { .. })), "{r:?}");
    }

    #[test]
    fn slope_read_on_the_left_of_a_kink() {
        // y = t − 1 for t < 1 and 3(t − 1) after
        let y = series(
            vec![
                TrigTerm::constant(1.0).with_power(1),
                TrigTerm::constant(-1.0),
                TrigTerm::constant(2.0).with_power(1).activated_at(1.0),
                TrigTerm::constant(-2.0).activated_at(1.0),
            ],
            3.0,
        );
        let v = delta_star_integral(&y, |_, s| s * s, (0.0, 3.0), &[]).unwrap();
        assert!((v - 1.0).abs() < 1e-12, "{v}");
    }

    #[test]
    fn solve_at_reference_eps() {
        let s = solve_h1_impact(EPS, &ImpactHgOptions::default()).unwrap();
        assert!(s.residual.abs() < 1e-10);
        assert!(1.0 - EPS * s.h1 > 0.0);
        assert_eq!(s.candidates.len(), 2);
        assert!((s.h1 + 0.36415).abs() < 1e-4, "{}", s.h1);
        assert!((s.gamma1 + s.gamma0 * s.gamma0 * s.h1 / (s.gamma0 * s.gamma0 + 4.0)).abs() < 1e-15);
        assert!((s.chi1 + s.gamma0 * s.h1).abs() < 1e-15);
    }

    #[test]
    fn elastic_solve_finite() {
        let s = solve_h1_impact(-2.0, &ImpactHgOptions::default()).unwrap();
        assert!(s.h1.is_finite());
    }

    #[test]
    fn decay_ratio_is_exponential() {
        let s = ImpactHgState::new(EPS, -0.3, &ImpactHgOptions::default()).unwrap();
        assert!((s.decay_ratio().unwrap() - (-s.gamma0 * PI).exp()).abs() < 1e-12);
    }

    #[test]
    fn too_few_roots_rejected() {
        assert!(ImpactHgState::new(EPS, 0.0, &ImpactHgOptions { roots: 1, ..Default::default() }).is_err());
    }
}
