//! Numerical kernels shared by the solvers.

mod newton;
mod ode;
mod quad;
mod roots;

pub use newton::{solve_system, NonlinearSystem, SolveReport, DEFAULT_TOL, MAX_RESTARTS};
pub use ode::{
    measure_period, solve_ivp, Direction, Event, EventAction, EventRecord, EventTag, IvpProblem, SimTrace,
    MAX_STEPS, REF_ABS_TOL, REF_REL_TOL,
};
pub use quad::{quad_adaptive, MAX_SUBDIVISIONS};
pub use roots::{brent, find_roots};

use crate::trigcalc::TrigKind;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NumError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("step size underflow at t = {t} (h = {h:e}); problem may be stiff")]
    StepUnderflow { t: f64, h: f64 },
    #[error("step budget of {steps} exhausted at t = {t}")]
    Budget { steps: usize, t: f64 },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("quadrature did not reach tolerance after {subdivisions} subdivisions (error estimate {error:e})")]
    Accuracy { subdivisions: usize, error: f64 },
    #[error("no convergence after {restarts} restarts, best residual {best_residual:e} at {best_x:?}")]
    SolverFailure { restarts: usize, best_residual: f64, best_x: Vec<f64> },
    #[error("no sign change of f on [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },
}

/// Fourier coefficients of `f` over one period `2π/ω`.
///
/// Each entry is `(ω/π)∫ f·trig(mωt) dt`, halved for a constant harmonic.
pub fn fourier_project(
    f: impl Fn(f64) -> f64,
    omega: f64,
    harmonics: &[(TrigKind, u32)],
    breakpoints: &[f64],
    tol: f64,
) -> Result<Vec<f64>, NumError> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(NumError::InvalidInput(format!("omega must be positive, got {omega}")));
    }
    let period = 2.0 * std::f64::consts::PI / omega;
    harmonics
        .iter()
        .map(|&(kind, m)| {
            let mw = m as f64 * omega;
            let (weight, scale): (Box<dyn Fn(f64) -> f64>, f64) = match kind {
                TrigKind::Cos if m > 0 => (Box::new(move |t: f64| (mw * t).cos()), 1.0),
                TrigKind::Sin if m > 0 => (Box::new(move |t: f64| (mw * t).sin()), 1.0),
                TrigKind::Sin => (Box::new(|_| 0.0), 1.0),
                _ => (Box::new(|_| 1.0), 0.5),
            };
            let v = quad_adaptive(|t| f(t) * weight(t), 0.0, period, breakpoints, tol)?;
            Ok(scale * omega / std::f64::consts::PI * v)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn fourier_cos() {
        let w = 1.7;
        let c = fourier_project(|t| (w * t).cos(), w, &[(TrigKind::Cos, 1), (TrigKind::Const, 0)], &[], 1e-12).unwrap();
        assert!((c[0] - 1.0).abs() < 1e-12);
        assert!(c[1].abs() < 1e-12);
    }

    #[test]
    fn fourier_square_wave() {
        let w = 2.0;
        let bp = [PI / (2.0 * w), 3.0 * PI / (2.0 * w)];
        let c = fourier_project(|t| (w * t).cos().signum(), w, &[(TrigKind::Cos, 1)], &bp, 1e-12).unwrap();
        assert!((c[0] - 4.0 / PI).abs() < 1e-10);
    }

    #[test]
    fn fourier_signum_cubic() {
        let w = 1.0;
        let bp = [PI / 2.0, 3.0 * PI / 2.0];
        let c = fourier_project(
            |t| {
                let c = (w * t).cos();
                c * c * c.signum()
            },
            w,
            &[(TrigKind::Cos, 1)],
            &bp,
            1e-12,
        )
        .unwrap();
        assert!((c[0] - 8.0 / (3.0 * PI)).abs() < 1e-10);
    }

    #[test]
    fn fourier_rejects_bad_omega() {
        assert!(fourier_project(|t| t, 0.0, &[(TrigKind::Cos, 1)], &[], 1e-10).is_err());
    }
}
