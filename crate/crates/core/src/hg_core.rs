//! Homotopy analysis with Galerkin projections for the four algebraically
//! non-smooth oscillators.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::{solve_system, NonlinearSystem, DEFAULT_TOL};
use crate::systems::{reference_frequency, OscillatorKind, OscillatorSpec};
use crate::trigcalc::{step_series, PiecewiseTrigSeries, TrigTerm};

const TWO_PI: f64 = 2.0 * PI;
const MIN_SLOPE: f64 = 1e-10;

/// How ω(1) is obtained from the expansion coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrequencyForm {
    /// ω = 1/(1 + λ⁽¹⁾ + λ⁽²⁾/2).
    #[default]
    Reciprocal,
    /// The truncated closed forms as printed for each oscillator.
    Printed,
}

impl fmt::Display for FrequencyForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Reciprocal => "reciprocal",
            Self::Printed => "printed",
        })
    }
}

impl FromStr for FrequencyForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "reciprocal" => Ok(Self::Reciprocal),
            "printed" => Ok(Self::Printed),
            o => Err(Error::Domain(format!("unknown frequency form '{o}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HgOptions {
    pub form: FrequencyForm,
    /// Newton steps used to place the switching times of the Heaviside kind.
    pub newton_steps: usize,
    /// Overrides the reference frequency as the solver seed.
    pub omega_seed: Option<f64>,
    /// Residual tolerance of the Newton solve.
    pub tol: f64,
}

impl Default for HgOptions {
    fn default() -> Self {
        Self { form: FrequencyForm::Reciprocal, newton_steps: 1, omega_seed: None, tol: DEFAULT_TOL }
    }
}

fn check_kind(kind: OscillatorKind) -> Result<()> {
    if kind == OscillatorKind::Impact {
        Err(Error::Domain("the impact pendulum has its own HG path".into()))
    } else {
        Ok(())
    }
}

/// (λ⁽¹⁾, λ⁽²⁾) from the first two secular conditions.
pub fn lambda_coefficients(kind: OscillatorKind, eps: f64, a: f64, h1: f64, h2: f64) -> Result<(f64, f64)> {
    check_kind(kind)?;
    let q = 4.0 * eps * a / (3.0 * PI);
    let sq = h1 * h1;
    Ok(match kind {
        OscillatorKind::Heaviside => {
            (eps * h1 / 4.0, 0.5 * eps * (h1 + h2 / 2.0 + sq) + 3.0 * eps * eps * sq / 8.0)
        }
        OscillatorKind::Signum => {
            let ea2 = eps * eps * a * a;
            (
                -h1 / 2.0 + q * h1,
                h2 * (q - 0.5) + h1 * (2.0 * q - 1.0) + sq * (-0.25 - q + (5.0 / 6.0 - 8.0 / (9.0 * PI)) * ea2),
            )
        }
        OscillatorKind::Modulus => {
            let ea2 = eps * eps * a * a;
            (q * h1 / 2.0, q * h1 + q * h2 / 2.0 + sq * (ea2 / 12.0 + q))
        }
        OscillatorKind::InverseModulus => {
            let p = 2.0 * a / (3.0 * PI);
            (
                h1 * (eps / 2.0 - p),
                h1 * (eps - 2.0 * p) + h2 * (eps / 2.0 - p) + sq * (0.75 * eps * eps - a * a / 6.0),
            )
        }
        OscillatorKind::Impact => unreachable!(),
    })
}

/// ω(1) as a function of the expansion unknowns.
pub fn frequency_relation(kind: OscillatorKind, eps: f64, a: f64, h1: f64, h2: f64, form: FrequencyForm) -> Result<f64> {
    check_kind(kind)?;
    if form == FrequencyForm::Reciprocal {
        let (l1, l2) = lambda_coefficients(kind, eps, a, h1, h2)?;
        return Ok(1.0 / (1.0 + l1 + l2 / 2.0));
    }
    let sq = h1 * h1;
    Ok(match kind {
        OscillatorKind::Heaviside => {
            let s = 1.5 * h1 + h2 / 2.0 + sq;
            1.0 - eps / 2.0 * s + eps * eps * (s * s / 4.0 - 3.0 * sq / 8.0)
        }
        OscillatorKind::Signum => {
            let p = 4.0 * h1 + h2 + sq;
            let ea = eps * a;
            1.0 + h1 + h2 / 4.0 + sq / 8.0 - 2.0 * ea / (3.0 * PI) * p
                - ea * ea * ((30.0 * PI - 32.0) * sq / (72.0 * PI) + 4.0 * p * p / (9.0 * PI * PI))
        }
        OscillatorKind::Modulus => {
            let q = 4.0 * h1 + h2 + 2.0 * sq;
            let ea = eps * a;
            1.0 - ea / (3.0 * PI) * q - ea * ea * (sq / 24.0 - q * q / (9.0 * PI * PI))
        }
        OscillatorKind::InverseModulus => {
            1.0 + a / (3.0 * PI) * (4.0 * h1 + h2) + a * a * sq / 12.0 - eps * (h1 + h2 / 4.0) - 3.0 * eps * eps * sq / 8.0
        }
        OscillatorKind::Impact => unreachable!(),
    })
}

fn x1_correction(kind: OscillatorKind, eps: f64, a: f64, h1: f64) -> Vec<TrigTerm> {
    let (q1, q3, p, p2) = (PI / 2.0, 1.5 * PI, PI, TWO_PI);
    match kind {
        OscillatorKind::Heaviside => {
            let c = a * eps * h1;
            vec![
                TrigTerm::sin(c / 4.0, 1).with_power(1),
                TrigTerm::cos(c / 2.0, 1).activated_at(q3),
                TrigTerm::sin(-0.75 * PI * c, 1).activated_at(q3),
                TrigTerm::sin(c / 2.0, 1).with_power(1).activated_at(q3),
                TrigTerm::cos(-c / 2.0, 1).activated_at(q1),
                TrigTerm::sin(PI * c / 4.0, 1).activated_at(q1),
                TrigTerm::sin(-c / 2.0, 1).with_power(1).activated_at(q1),
            ]
        }
        OscillatorKind::Signum => {
            let c = eps * a * a * h1;
            vec![
                TrigTerm::cos(c / 3.0, 2).activated_at(q1),
                TrigTerm::sin(4.0 * c / 3.0, 1).activated_at(q1),
                TrigTerm::constant(-c).activated_at(q1),
                TrigTerm::cos(-c / 3.0, 2).activated_at(q3),
                TrigTerm::sin(4.0 * c / 3.0, 1).activated_at(q3),
                TrigTerm::constant(c).activated_at(q3),
                TrigTerm::cos(-c / 3.0, 1),
                TrigTerm::cos(-c / 6.0, 2),
                TrigTerm::sin(-4.0 * c / (3.0 * PI), 1).with_power(1),
                TrigTerm::constant(c / 2.0),
            ]
        }
        OscillatorKind::Modulus | OscillatorKind::InverseModulus => {
            let (c, lin0, lin1) = if kind == OscillatorKind::Modulus {
                (eps * a * a * h1, 1.0 / 3.0, -2.0 / (3.0 * PI))
            } else {
                (-a * a * h1, 1.0 / 3.0, -2.0 / (3.0 * PI))
            };
            vec![
                TrigTerm::sin(2.0 * c / 3.0, 1).activated_at(p),
                TrigTerm::sin(c / 3.0, 2).activated_at(p),
                TrigTerm::sin(2.0 * c / 3.0, 1).activated_at(p2),
                TrigTerm::sin(-c / 3.0, 2).activated_at(p2),
                TrigTerm::sin(c * lin0, 1),
                TrigTerm::sin(c * lin1, 1).with_power(1),
                TrigTerm::sin(-c / 6.0, 2),
            ]
        }
        OscillatorKind::Impact => Vec::new(),
    }
}

/// x⁽⁰⁾ + x⁽¹⁾ on τ ∈ [0, 2π].
pub fn build_x1(kind: OscillatorKind, eps: f64, a: f64, h1: f64) -> Result<PiecewiseTrigSeries> {
    check_kind(kind)?;
    let mut terms = vec![TrigTerm::cos(a, 1)];
    terms.extend(x1_correction(kind, eps, a, h1));
    Ok(PiecewiseTrigSeries::new(terms, TWO_PI)?.normalize())
}

/// Switching times of `H(x₁)` near π/(2ω) and 3π/(2ω), each moved by
/// `newton_steps` Newton iterations on x₁ (zero steps keeps the nominal
/// times). `x1` is in τ; the result is in t.
pub fn refine_zeros(x1: &PiecewiseTrigSeries, omega: f64, newton_steps: usize) -> Result<(f64, f64)> {
    if !(omega > 0.0) {
        return Err(Error::Domain(format!("omega must be positive, got {omega}")));
    }
    let d = x1.differentiate()?;
    let refine = |nominal: f64| -> Result<f64> {
        let mut tau = nominal;
        for _ in 0..newton_steps {
            let slope = d.evaluate(tau)?;
            if slope.abs() < MIN_SLOPE {
                return Err(Error::DegenerateZero { t: tau / omega, derivative: slope * omega });
            }
            tau -= x1.evaluate(tau)? / slope;
            if !(0.0..=TWO_PI).contains(&tau) {
                return Err(Error::Domain(format!("refined zero left the period: τ = {tau}")));
            }
        }
        Ok(tau / omega)
    };
    Ok((refine(PI / 2.0)?, refine(1.5 * PI)?))
}

/// Weighted residual integrals (g₁, g₂), scaled by ω²A (ω³A² for the
/// inverse modulus kind).
pub fn galerkin_equations(
    kind: OscillatorKind,
    eps: f64,
    a: f64,
    omega: f64,
    h1: f64,
    _h2: f64,
    newton_steps: usize,
) -> Result<(f64, f64)> {
    check_kind(kind)?;
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::Domain(format!("omega must be positive, got {omega}")));
    }
    let x = build_x1(kind, eps, a, h1)?;
    let dx = x.differentiate()?;
    let ddx = dx.differentiate()?;
    let w2 = omega * omega;
    let step = |s: &[(f64, f64)]| step_series(s, TWO_PI);
    let (r, scale) = match kind {
        OscillatorKind::Heaviside => {
            let (t1, t2) = refine_zeros(&x, omega, newton_steps)?;
            let (a1, a2) = (t1 * omega, t2 * omega);
            let stiff = step(&[(1.0 + eps, 0.0), (-eps, a1), (eps, a2)])?;
            (ddx.scale(w2).add(&x.product(&stiff)?)?, w2 * a)
        }
        OscillatorKind::Signum => {
            let sgn = step(&[(1.0, 0.0), (-2.0, PI / 2.0), (2.0, 1.5 * PI)])?;
            (ddx.scale(w2).add(&x.product(&x)?.product(&sgn)?.scale(eps))?, w2 * a)
        }
        OscillatorKind::Modulus => {
            let sgn = step(&[(-1.0, 0.0), (2.0, PI)])?;
            let damp = x.product(&dx)?.product(&sgn)?.scale(eps * omega);
            (ddx.scale(w2).add(&x)?.add(&damp)?, w2 * a)
        }
        OscillatorKind::InverseModulus => {
            let sgn = step(&[(-1.0, 0.0), (2.0, PI)])?;
            let inertia = dx.product(&ddx)?.product(&sgn)?.scale(w2 * omega);
            (inertia.add(&x.scale(eps))?, w2 * omega * a * a)
        }
        OscillatorKind::Impact => unreachable!(),
    };
    let cos = PiecewiseTrigSeries::new(vec![TrigTerm::cos(1.0, 1)], TWO_PI)?;
    let second = match kind {
        OscillatorKind::Heaviside | OscillatorKind::Signum => step(&[(1.0, PI / 2.0)])?,
        _ => PiecewiseTrigSeries::new(vec![TrigTerm::sin(1.0 / omega, 1).with_power(1)], TWO_PI)?,
    };
    let g = |w: &PiecewiseTrigSeries| -> Result<f64> { Ok(w.product(&r)?.integrate_definite(0.0, TWO_PI)? / (omega * scale)) };
    Ok((g(&cos)?, g(&second)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct HgSolution {
    pub kind: OscillatorKind,
    pub eps: f64,
    pub amplitude: f64,
    pub form: FrequencyForm,
    pub omega: f64,
    pub h1: f64,
    pub h2: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    /// Switching times of H(x₁) in t.
    pub t1: f64,
    pub t2: f64,
    pub residual_norm: f64,
    pub iterations: usize,
    pub restarts: usize,
    pub jacobian_condition: f64,
    /// x₁ in τ = ωt on [0, 2π].
    pub x1: PiecewiseTrigSeries,
}

impl HgSolution {
    pub fn period(&self) -> f64 {
        TWO_PI / self.omega
    }

    /// x₁(t) for t in one period.
    pub fn evaluate(&self, t: f64) -> Result<f64> {
        Ok(self.x1.evaluate(self.omega * t)?)
    }

    /// `n` evenly spaced samples over one period, endpoint excluded.
    pub fn sample(&self, n: usize) -> Result<Vec<(f64, f64)>> {
        let p = self.period();
        (0..n)
            .map(|i| {
                let t = p * i as f64 / n as f64;
                Ok((t, self.evaluate(t)?))
            })
            .collect()
    }

    /// x₁(2π/ω) − x₁(0); the truncation shows up here.
    pub fn closure_gap(&self) -> Result<f64> {
        Ok(self.x1.evaluate(TWO_PI)? - self.x1.evaluate(0.0)?)
    }
}

/// Solves the frequency relation and both Galerkin equations for (ω, h⁽¹⁾, h⁽²⁾).
pub fn solve_hg(kind: OscillatorKind, eps: f64, a: f64, opts: &HgOptions) -> Result<HgSolution> {
    check_kind(kind)?;
    let spec = OscillatorSpec::with_amplitude(kind, eps, a)?;
    let seed = match opts.omega_seed {
        Some(w) => w,
        None => reference_frequency(&spec).unwrap_or(1.0),
    };
    let (form, steps) = (opts.form, opts.newton_steps);
    let residual = move |u: &[f64]| -> Vec<f64> {
        let (w, h1, h2) = (u[0], u[1], u[2]);
        let phi = match form {
            FrequencyForm::Reciprocal => lambda_coefficients(kind, eps, a, h1, h2).map(|(l1, l2)| w * (1.0 + l1 + l2 / 2.0) - 1.0),
            FrequencyForm::Printed => frequency_relation(kind, eps, a, h1, h2, form).map(|f| w - f),
        };
        match (phi, galerkin_equations(kind, eps, a, w, h1, h2, steps)) {
            (Ok(p), Ok((g1, g2))) => vec![p, g1, g2],
            _ => vec![f64::NAN; 3],
        }
    };
    let sys = NonlinearSystem::new(residual, vec![seed, -0.5, 0.0])
        .brackets(vec![(0.5 * seed, 1.5 * seed), (-50.0, 50.0), (-50.0, 50.0)])
        .restart_scale(vec![0.1 * seed, 0.3, 0.3])
        .tol(opts.tol);
    let rep = solve_system(&sys).map_err(|e| Error::Solve { method: "hg", detail: e.to_string() })?;
    let (omega, h1, h2) = (rep.x[0], rep.x[1], rep.x[2]);
    let (lambda1, lambda2) = lambda_coefficients(kind, eps, a, h1, h2)?;
    let x1 = build_x1(kind, eps, a, h1)?;
    let (t1, t2) = if kind == OscillatorKind::Heaviside {
        refine_zeros(&x1, omega, steps)?
    } else {
        (PI / (2.0 * omega), 1.5 * PI / omega)
    };
    Ok(HgSolution {
        kind,
        eps,
        amplitude: a,
        form,
        omega,
        h1,
        h2,
        lambda1,
        lambda2,
        t1,
        t2,
        residual_norm: rep.residual_norm,
        iterations: rep.iterations,
        restarts: rep.restarts,
        jacobian_condition: rep.jacobian_condition,
        x1,
    })
}
