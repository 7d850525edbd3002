//! The five oscillators and their reference simulations.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::numkit::{measure_period, solve_ivp, Direction, Event, EventTag, IvpProblem, NumError, SimTrace};

/// Cycles averaged by [`reference_frequency`].
pub const REFERENCE_CYCLES: usize = 10;
/// Impacts simulated by [`reference_decay`].
pub const REFERENCE_IMPACTS: usize = 8;
const SINGULAR_SPEED: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SystemError {
    #[error("invalid oscillator: {0}")]
    InvalidSpec(String),
    #[error("acceleration singular at speed {v:e}")]
    Singularity { v: f64 },
    #[error("{0:?} has no periodic reference; use the impact recipe")]
    NotPeriodic(OscillatorKind),
    #[error(transparent)]
    Num(#[from] NumError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OscillatorKind {
    Heaviside,
    Signum,
    Modulus,
    InverseModulus,
    Impact,
}

impl OscillatorKind {
    pub const ALL: [OscillatorKind; 5] = [Self::Heaviside, Self::Signum, Self::Modulus, Self::InverseModulus, Self::Impact];

    pub fn name(self) -> &'static str {
        match self {
            Self::Heaviside => "heaviside",
            Self::Signum => "signum",
            Self::Modulus => "modulus",
            Self::InverseModulus => "inverse_modulus",
            Self::Impact => "impact",
        }
    }

    pub fn is_periodic(self) -> bool {
        self != Self::Impact
    }
}

impl fmt::Display for OscillatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OscillatorKind {
    type Err = SystemError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "heaviside" | "heaviside_springs" => Ok(Self::Heaviside),
            "signum" => Ok(Self::Signum),
            "modulus" => Ok(Self::Modulus),
            "inverse_modulus" => Ok(Self::InverseModulus),
            "impact" | "impact_pendulum" => Ok(Self::Impact),
            other => Err(SystemError::InvalidSpec(format!("unknown oscillator kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillatorSpec {
    pub kind: OscillatorKind,
    pub eps: f64,
    pub amplitude: f64,
    pub x0: f64,
    pub v0: f64,
}

impl OscillatorSpec {
    /// Unit amplitude, released from rest.
    pub fn new(kind: OscillatorKind, eps: f64) -> Result<Self, SystemError> {
        Self::with_amplitude(kind, eps, 1.0)
    }

    pub fn with_amplitude(kind: OscillatorKind, eps: f64, amplitude: f64) -> Result<Self, SystemError> {
        let s = Self { kind, eps, amplitude, x0: amplitude, v0: 0.0 };
        s.validate()?;
        Ok(s)
    }

    /// Impact pendulum with restitution `e`, i.e. `ε = −(1+e)`.
    pub fn impact(e: f64) -> Result<Self, SystemError> {
        Self::new(OscillatorKind::Impact, -(1.0 + e))
    }

    pub fn validate(&self) -> Result<(), SystemError> {
        let bad = |m: String| Err(SystemError::InvalidSpec(m));
        if !(self.eps.is_finite() && self.amplitude.is_finite() && self.x0.is_finite() && self.v0.is_finite()) {
            return bad("non-finite parameter".into());
        }
        if !(self.amplitude > 0.0) {
            return bad(format!("amplitude must be positive, got {}", self.amplitude));
        }
        match self.kind {
            OscillatorKind::Heaviside if self.eps <= -1.0 => bad(format!("heaviside needs eps > -1, got {}", self.eps)),
            OscillatorKind::InverseModulus if self.eps <= 0.0 => {
                bad(format!("inverse_modulus needs eps > 0, got {}", self.eps))
            }
            OscillatorKind::Impact if !(-2.0..-1.0).contains(&self.eps) => {
                bad(format!("impact needs -2 <= eps < -1, got {}", self.eps))
            }
            OscillatorKind::Impact if self.x0 < 0.0 => bad("impact motion lives in x >= 0".into()),
            _ => Ok(()),
        }
    }

    /// Restitution coefficient (impact kind only).
    pub fn restitution(&self) -> Option<f64> {
        (self.kind == OscillatorKind::Impact).then(|| -1.0 - self.eps)
    }
}

fn heaviside(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        0.0
    }
}

/// ẍ as a function of the state.
///
/// The impact kind returns the free motion between impacts.
pub fn acceleration(spec: &OscillatorSpec, x: f64, v: f64) -> Result<f64, SystemError> {
    let eps = spec.eps;
    Ok(match spec.kind {
        OscillatorKind::Heaviside => -x * (1.0 + eps * heaviside(x)),
        OscillatorKind::Signum => -eps * x * x.abs(),
        OscillatorKind::Modulus => -x - eps * x * v.abs(),
        OscillatorKind::InverseModulus => {
            if v.abs() < SINGULAR_SPEED {
                return Err(SystemError::Singularity { v });
            }
            -eps * x / v.abs()
        }
        OscillatorKind::Impact => -x,
    })
}

/// Residual of the governing equation in its multiplied-through form.
///
/// The inverse modulus equation is multiplied by `|ẋ|` so that it stays
/// finite at turning points.
pub fn residual(spec: &OscillatorSpec, x: f64, v: f64, a: f64) -> f64 {
    let eps = spec.eps;
    match spec.kind {
        OscillatorKind::Heaviside => a + x * (1.0 + eps * heaviside(x)),
        OscillatorKind::Signum => a + eps * x * x.abs(),
        OscillatorKind::Modulus => a + x + eps * x * v.abs(),
        OscillatorKind::InverseModulus => v.abs() * a + eps * x,
        OscillatorKind::Impact => a + x,
    }
}

/// First-order problem for `spec` with the switching events the reference
/// runs rely on. The state is `(x, v)`, except for the inverse modulus kind,
/// which integrates `(x, w)` with `w = v|v|/2`.
fn periodic_problem<'a>(spec: &'a OscillatorSpec, crossings: Option<usize>, t_end: f64) -> IvpProblem<'a> {
    let eps = spec.eps;
    let zero = Event::new(EventTag::ZeroCrossing, |_, y: &[f64]| y[0], Direction::Either);
    let zero = match crossings {
        Some(n) => zero.stop_after(n),
        None => zero,
    };
    match spec.kind {
        OscillatorKind::InverseModulus => {
            let w0 = 0.5 * spec.v0 * spec.v0.abs();
            IvpProblem::new(
                move |_, y, dy| {
                    dy[0] = y[1].signum() * (2.0 * y[1].abs()).sqrt();
                    dy[1] = -eps * y[0];
                },
                vec![spec.x0, w0],
                (0.0, t_end),
            )
            .event(zero)
            .event(Event::new(EventTag::TurningPoint, |_, y: &[f64]| y[1], Direction::Either))
        }
        _ => {
            let turning = spec.kind == OscillatorKind::Modulus;
            let p = IvpProblem::new(
                move |_, y, dy| {
                    dy[0] = y[1];
                    dy[1] = acceleration(spec, y[0], y[1]).unwrap_or(f64::NAN);
                },
                vec![spec.x0, spec.v0],
                (0.0, t_end),
            )
            .event(zero);
            if turning {
                p.event(Event::new(EventTag::TurningPoint, |_, y: &[f64]| y[1], Direction::Either))
            } else {
                p
            }
        }
    }
}

/// Rough period, used to size the integration window and cap the step.
fn period_estimate(spec: &OscillatorSpec) -> f64 {
    let a = spec.amplitude;
    let w = match spec.kind {
        OscillatorKind::Heaviside => (1.0 + spec.eps.max(0.0)).sqrt(),
        OscillatorKind::Signum => (spec.eps.abs() * a).sqrt().max(1e-3),
        OscillatorKind::Modulus => 1.0,
        OscillatorKind::InverseModulus => (spec.eps / a).cbrt().max(1e-3),
        OscillatorKind::Impact => 1.0,
    };
    2.0 * std::f64::consts::PI / w
}

/// Full reference simulation over [`REFERENCE_CYCLES`] cycles.
pub fn reference_trace(spec: &OscillatorSpec) -> Result<SimTrace, SystemError> {
    spec.validate()?;
    if !spec.kind.is_periodic() {
        return Err(SystemError::NotPeriodic(spec.kind));
    }
    // two crossings per cycle plus the closing one
    let n = 2 * REFERENCE_CYCLES + 1;
    let t_end = 1e3 * period_estimate(spec) * REFERENCE_CYCLES as f64;
    let p = periodic_problem(spec, Some(n), t_end).max_step(period_estimate(spec) / 16.0);
    Ok(solve_ivp(&p)?)
}

/// Frequency from the averaged spacing of same-direction zero crossings.
pub fn reference_frequency(spec: &OscillatorSpec) -> Result<f64, SystemError> {
    if spec.eps == 0.0 && matches!(spec.kind, OscillatorKind::Heaviside | OscillatorKind::Modulus) {
        return Ok(1.0);
    }
    let trace = reference_trace(spec)?;
    Ok(2.0 * std::f64::consts::PI / measure_period(&trace)?)
}

/// Displacement of the reference solution at the requested times.
pub fn reference_trajectory(spec: &OscillatorSpec, times: &[f64]) -> Result<Vec<f64>, SystemError> {
    spec.validate()?;
    let Some(&t_end) = times.last() else {
        return Ok(Vec::new());
    };
    if times.windows(2).any(|w| w[1] < w[0]) || times[0] < 0.0 {
        return Err(SystemError::InvalidSpec("sample times must be non-negative and sorted".into()));
    }
    let span = t_end.max(1e-9) * (1.0 + 1e-12) + 1e-12;
    let trace = if spec.kind == OscillatorKind::Impact {
        solve_ivp(&impact_problem(spec, None, span).t_eval(times.to_vec()))?
    } else {
        solve_ivp(&periodic_problem(spec, None, span).max_step(period_estimate(spec) / 16.0).t_eval(times.to_vec()))?
    };
    Ok(trace.states.iter().map(|s| s[0]).collect())
}

fn impact_problem<'a>(spec: &'a OscillatorSpec, impacts: Option<usize>, t_end: f64) -> IvpProblem<'a> {
    let e = spec.restitution().unwrap_or(1.0);
    let hit = Event::new(EventTag::Impact, |_, y: &[f64]| y[0], Direction::Falling).impact(move |y| vec![0.0, -e * y[1]]);
    let hit = match impacts {
        Some(n) => hit.stop_after(n),
        None => hit,
    };
    IvpProblem::new(
        |_, y, dy| {
            dy[0] = y[1];
            dy[1] = -y[0];
        },
        vec![spec.x0, spec.v0],
        (0.0, t_end),
    )
    .event(hit)
    .event(Event::new(EventTag::TurningPoint, |_, y: &[f64]| y[1], Direction::Falling))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpactReference {
    /// π over the mean spacing of impacts.
    pub frequency: f64,
    /// Mean ratio of successive maxima.
    pub ratio_per_period: f64,
    pub impact_times: Vec<f64>,
    /// Speeds just before and just after each impact.
    pub pre_speeds: Vec<f64>,
    pub post_speeds: Vec<f64>,
    pub maxima: Vec<f64>,
}

/// Event-driven simulation of the impact pendulum.
pub fn reference_decay(spec: &OscillatorSpec) -> Result<ImpactReference, SystemError> {
    spec.validate()?;
    if spec.kind != OscillatorKind::Impact {
        return Err(SystemError::InvalidSpec(format!("reference_decay needs the impact kind, got {}", spec.kind)));
    }
    let n = REFERENCE_IMPACTS;
    let trace = solve_ivp(&impact_problem(spec, Some(n), 10.0 * std::f64::consts::PI * n as f64))?;
    let impacts: Vec<_> = trace.events_tagged(EventTag::Impact).collect();
    if impacts.len() < 2 {
        return Err(NumError::InsufficientData(format!("{} impacts recorded", impacts.len())).into());
    }
    let impact_times: Vec<f64> = impacts.iter().map(|e| e.t).collect();
    let spacing = (impact_times[impact_times.len() - 1] - impact_times[0]) / (impact_times.len() - 1) as f64;
    let mut maxima = Vec::new();
    if spec.v0 == 0.0 {
        maxima.push(spec.x0);
    }
    maxima.extend(trace.events_tagged(EventTag::TurningPoint).map(|e| e.pre[0]));
    let ratios: Vec<f64> = maxima.windows(2).map(|w| w[1] / w[0]).collect();
    if ratios.is_empty() {
        return Err(NumError::InsufficientData("fewer than two maxima".into()).into());
    }
    Ok(ImpactReference {
        frequency: std::f64::consts::PI / spacing,
        ratio_per_period: ratios.iter().sum::<f64>() / ratios.len() as f64,
        impact_times,
        pre_speeds: impacts.iter().map(|e| e.pre[1].abs()).collect(),
        post_speeds: impacts.iter().map(|e| e.post[1].abs()).collect(),
        maxima,
    })
}
