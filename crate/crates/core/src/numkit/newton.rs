use nalgebra::{DMatrix, DVector};

use super::NumError;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const MAX_RESTARTS: usize = 20;
const MAX_ITER: usize = 100;
const ARMIJO_C: f64 = 1e-4;

pub type ResidualFn<'a> = Box<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync + 'a>;

pub struct NonlinearSystem<'a> {
    pub residual: ResidualFn<'a>,
    pub guess: Vec<f64>,
    pub brackets: Option<Vec<(f64, f64)>>,
    pub tol: f64,
    /// Per-variable restart offsets; restart k moves the guess by a
    /// deterministic multiple of these.
    pub restart_scale: Vec<f64>,
    /// Reuse the Jacobian with rank-one updates, refreshing only when the
    /// line search stalls.
    pub broyden: bool,
}

impl<'a> NonlinearSystem<'a> {
    pub fn new(residual: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'a, guess: Vec<f64>) -> Self {
        let restart_scale = guess.iter().map(|x| 0.3 * x.abs().max(1.0)).collect();
        Self { residual: Box::new(residual), guess, brackets: None, tol: DEFAULT_TOL, restart_scale, broyden: false }
    }

    pub fn brackets(mut self, b: Vec<(f64, f64)>) -> Self {
        self.brackets = Some(b);
        self
    }

    pub fn tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn restart_scale(mut self, s: Vec<f64>) -> Self {
        self.restart_scale = s;
        self
    }

    pub fn broyden(mut self, on: bool) -> Self {
        self.broyden = on;
        self
    }

    fn inside(&self, x: &[f64]) -> bool {
        self.brackets.as_ref().is_none_or(|b| x.iter().zip(b).all(|(v, (lo, hi))| *v >= *lo && *v <= *hi))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub x: Vec<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
    pub restarts: usize,
    /// 2-norm condition number of the finite-difference Jacobian at `x`.
    pub jacobian_condition: f64,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| if x.is_nan() { f64::INFINITY } else { m.max(x.abs()) })
}

fn sq_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

fn fd_jacobian(sys: &NonlinearSystem, x: &[f64]) -> DMatrix<f64> {
    let n = x.len();
    let mut j = DMatrix::zeros(n, n);
    let mut xp = x.to_vec();
    for c in 0..n {
        let h = 1e-6 * x[c].abs().max(1.0);
        xp[c] = x[c] + h;
        let fp = (sys.residual)(&xp);
        xp[c] = x[c] - h;
        let fm = (sys.residual)(&xp);
        xp[c] = x[c];
        for r in 0..n {
            j[(r, c)] = (fp[r] - fm[r]) / (2.0 * h);
        }
    }
    j
}

fn condition(j: &DMatrix<f64>) -> f64 {
    let sv = j.clone().svd(false, false).singular_values;
    let max = sv.max();
    let min = sv.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

fn newton_direction(j: &DMatrix<f64>, f: &[f64]) -> Option<DVector<f64>> {
    let rhs = -DVector::from_column_slice(f);
    if let Some(d) = j.clone().lu().solve(&rhs) {
        if d.iter().all(|v| v.is_finite()) {
            return Some(d);
        }
    }
    let d = j.clone().svd(true, true).solve(&rhs, 1e-14).ok()?;
    d.iter().all(|v| v.is_finite()).then_some(d)
}

enum Outcome {
    Converged { x: Vec<f64>, norm: f64, iters: usize },
    Stalled { x: Vec<f64>, norm: f64 },
}

fn newton_run(sys: &NonlinearSystem, x0: Vec<f64>) -> Outcome {
    let mut x = x0;
    let mut f = (sys.residual)(&x);
    let mut norm = inf_norm(&f);
    if !norm.is_finite() {
        return Outcome::Stalled { x, norm: f64::INFINITY };
    }
    let mut jac = fd_jacobian(sys, &x);
    for it in 0..MAX_ITER {
        if norm < sys.tol {
            return Outcome::Converged { x, norm, iters: it };
        }
        let Some(d) = newton_direction(&jac, &f) else {
            return Outcome::Stalled { x, norm };
        };
        let phi0 = sq_norm(&f);
        let mut alpha = 1.0;
        let mut accepted = None;
        while alpha > 1e-10 {
            let xt: Vec<f64> = x.iter().zip(d.iter()).map(|(a, b)| a + alpha * b).collect();
            let ft = (sys.residual)(&xt);
            let phi = sq_norm(&ft);
            if phi.is_finite() && phi <= (1.0 - 2.0 * ARMIJO_C * alpha) * phi0 {
                accepted = Some((xt, ft));
                break;
            }
            alpha *= 0.5;
        }
        let Some((xn, fnew)) = accepted else {
            if sys.broyden {
                // stale secant model; retry once with a fresh Jacobian
                let fresh = fd_jacobian(sys, &x);
                if (fresh.clone() - &jac).norm() > 0.0 {
                    jac = fresh;
                    continue;
                }
            }
            return Outcome::Stalled { x, norm };
        };
        if sys.broyden {
            let s = DVector::from_iterator(x.len(), xn.iter().zip(&x).map(|(a, b)| a - b));
            let y = DVector::from_iterator(f.len(), fnew.iter().zip(&f).map(|(a, b)| a - b));
            let ss = s.dot(&s);
            if ss > 0.0 {
                let corr = (y - &jac * &s) * s.transpose() / ss;
                jac += corr;
            }
        }
        x = xn;
        f = fnew;
        norm = inf_norm(&f);
        if !sys.broyden {
            jac = fd_jacobian(sys, &x);
        }
    }
    if norm < sys.tol {
        Outcome::Converged { x, norm, iters: MAX_ITER }
    } else {
        Outcome::Stalled { x, norm }
    }
}

/// Van der Corput digit reversal in `base`, mapped to [-1, 1].
fn halton(mut k: usize, base: usize) -> f64 {
    let (mut v, mut denom) = (0.0, 1.0);
    while k > 0 {
        denom *= base as f64;
        v += (k % base) as f64 / denom;
        k /= base;
    }
    2.0 * v - 1.0
}

const PRIMES: [usize; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

fn restart_guess(sys: &NonlinearSystem, k: usize) -> Vec<f64> {
    sys.guess
        .iter()
        .enumerate()
        .map(|(i, &g)| {
            let off = sys.restart_scale.get(i).copied().unwrap_or(0.0) * halton(k, PRIMES[i % PRIMES.len()]);
            let v = g + off;
            match &sys.brackets {
                Some(b) => v.clamp(b[i].0, b[i].1),
                None => v,
            }
        })
        .collect()
}

/// Damped Newton with Armijo backtracking and deterministic restarts.
///
/// Converged iff `‖F‖∞ < tol` inside the brackets.
pub fn solve_system(sys: &NonlinearSystem) -> Result<SolveReport, NumError> {
    let n = sys.guess.len();
    if n == 0 {
        return Err(NumError::InvalidInput("empty system".into()));
    }
    if let Some(b) = &sys.brackets {
        if b.len() != n {
            return Err(NumError::InvalidInput("one bracket per variable required".into()));
        }
        if !sys.inside(&sys.guess) {
            return Err(NumError::InvalidInput(format!("guess {:?} outside brackets {b:?}", sys.guess)));
        }
    }
    let f0 = (sys.residual)(&sys.guess);
    if f0.len() != n {
        return Err(NumError::InvalidInput(format!("residual has {} components for {n} unknowns", f0.len())));
    }
    if !f0.iter().all(|v| v.is_finite()) {
        return Err(NumError::InvalidInput(format!("residual not finite at guess {:?}", sys.guess)));
    }
    let mut best = (inf_norm(&f0), sys.guess.clone());
    for restart in 0..=MAX_RESTARTS {
        let x0 = if restart == 0 { sys.guess.clone() } else { restart_guess(sys, restart) };
        match newton_run(sys, x0) {
            Outcome::Converged { x, norm, iters } => {
                if sys.inside(&x) {
                    let cond = condition(&fd_jacobian(sys, &x));
                    return Ok(SolveReport { x, residual_norm: norm, iterations: iters, restarts: restart, jacobian_condition: cond });
                }
            }
            Outcome::Stalled { x, norm } => {
                if norm < best.0 && sys.inside(&x) {
                    best = (norm, x);
                }
            }
        }
    }
    Err(NumError::SolverFailure { restarts: MAX_RESTARTS, best_residual: best.0, best_x: best.1 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_root_in_bracket() {
        let sys = NonlinearSystem::new(|x| vec![x[0] * x[0] - 4.0], vec![1.0]).brackets(vec![(0.0, 5.0)]);
        let r = solve_system(&sys).unwrap();
        assert!((r.x[0] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn linear_2d() {
        let sys = NonlinearSystem::new(|x| vec![x[0] + x[1] - 3.0, x[0] - x[1] - 1.0], vec![0.0, 0.0]);
        let r = solve_system(&sys).unwrap();
        assert!((r.x[0] - 2.0).abs() < 1e-10 && (r.x[1] - 1.0).abs() < 1e-10);
        assert!((r.jacobian_condition - 1.0).abs() < 1e-6);
    }

    #[test]
    fn bracket_rejects_wrong_root() {
        // from -1 Newton goes to -2 first; the bracket forces a restart
        let sys = NonlinearSystem::new(|x| vec![x[0] * x[0] - 4.0], vec![0.5]).brackets(vec![(0.0, 5.0)]);
        let r = solve_system(&sys).unwrap();
        assert!((r.x[0] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn broyden_mode_rosenbrock_gradient() {
        let sys = NonlinearSystem::new(|x| vec![10.0 * (x[1] - x[0] * x[0]), 1.0 - x[0]], vec![-1.2, 1.0]).broyden(true);
        let r = solve_system(&sys).unwrap();
        assert!((r.x[0] - 1.0).abs() < 1e-9 && (r.x[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn no_root_reports_best() {
        let sys = NonlinearSystem::new(|x| vec![x[0] * x[0] + 1.0], vec![0.3]);
        match solve_system(&sys) {
            Err(NumError::SolverFailure { best_residual, .. }) => assert!((best_residual - 1.0).abs() < 1e-6),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn idempotent_from_solution() {
        let f = |x: &[f64]| vec![x[0].exp() - 2.0 * x[1], x[0] + x[1] * x[1] - 3.0];
        let r = solve_system(&NonlinearSystem::new(f, vec![0.5, 1.0])).unwrap();
        let r2 = solve_system(&NonlinearSystem::new(f, r.x.clone())).unwrap();
        for (a, b) in r.x.iter().zip(&r2.x) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(r2.iterations, 0);
    }
}
