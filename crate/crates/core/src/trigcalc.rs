//! Exact calculus on sums of `c·τ^k·e^{rτ}·trig(mτ)·H(τ−a)`.
//!
//! Every closed-form waveform in this crate is one of these series with
//! concrete coefficients. Differentiation, products and definite integrals
//! stay inside the representation, so weighted residuals can be integrated
//! exactly instead of by quadrature.

use num_complex::Complex64;
use thiserror::Error;

/// Coefficients below this magnitude are dropped by [`PiecewiseTrigSeries::normalize`].
pub const DROP_BELOW: f64 = 1e-14;

/// Allowed jump at an activation time for [`PiecewiseTrigSeries::differentiate`].
pub const CONTINUITY_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrigError {
    #[error("τ = {tau} outside the series domain [0, {end}]")]
    Range { tau: f64, end: f64 },
    #[error("distributional derivative required: jump {jump:e} at τ = {at}")]
    NotContinuous { at: f64, jump: f64 },
    #[error("invalid term: {0}")]
    InvalidTerm(String),
    #[error("domain mismatch: {0} vs {1}")]
    DomainMismatch(f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TrigKind {
    Sin,
    Cos,
    Const,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrigTerm {
    pub c: f64,
    pub k: u32,
    pub r: f64,
    pub kind: TrigKind,
    pub m: u32,
    pub a: f64,
}

impl TrigTerm {
    /// Builds a term in canonical form: `cos(0·τ)` becomes a constant and
    /// `sin(0·τ)` a zero constant.
    pub fn new(c: f64, k: u32, r: f64, kind: TrigKind, m: u32, a: f64) -> Self {
        let (c, kind, m) = match (kind, m) {
            (TrigKind::Const, _) => (c, TrigKind::Const, 0),
            (TrigKind::Cos, 0) => (c, TrigKind::Const, 0),
            (TrigKind::Sin, 0) => (0.0, TrigKind::Const, 0),
            (kind, m) => (c, kind, m),
        };
        Self { c, k, r, kind, m, a }
    }

    pub fn cos(c: f64, m: u32) -> Self {
        Self::new(c, 0, 0.0, TrigKind::Cos, m, 0.0)
    }

    pub fn sin(c: f64, m: u32) -> Self {
        Self::new(c, 0, 0.0, TrigKind::Sin, m, 0.0)
    }

    pub fn constant(c: f64) -> Self {
        Self::new(c, 0, 0.0, TrigKind::Const, 0, 0.0)
    }

    pub fn with_power(mut self, k: u32) -> Self {
        self.k = k;
        self
    }

    pub fn with_rate(mut self, r: f64) -> Self {
        self.r = r;
        self
    }

    pub fn activated_at(mut self, a: f64) -> Self {
        self.a = a;
        self
    }

    /// `τ^k e^{rτ} trig(mτ)` without the coefficient or the Heaviside factor.
    fn shape(&self, tau: f64) -> f64 {
        let base = tau.powi(self.k as i32) * (self.r * tau).exp();
        match self.kind {
            TrigKind::Sin => base * (self.m as f64 * tau).sin(),
            TrigKind::Cos => base * (self.m as f64 * tau).cos(),
            TrigKind::Const => base,
        }
    }

    fn value(&self, tau: f64) -> f64 {
        self.c * self.shape(tau)
    }

    fn key(&self) -> (u32, u64, TrigKind, u32, u64) {
        (self.k, self.r.to_bits(), self.kind, self.m, self.a.to_bits())
    }

    fn derivative(&self) -> Vec<TrigTerm> {
        let mut out = Vec::with_capacity(3);
        let same = |c: f64, k: u32, kind: TrigKind| TrigTerm::new(c, k, self.r, kind, self.m, self.a);
        if self.k > 0 {
            out.push(same(self.c * self.k as f64, self.k - 1, self.kind));
        }
        if self.r != 0.0 {
            out.push(same(self.c * self.r, self.k, self.kind));
        }
        let m = self.m as f64;
        match self.kind {
            TrigKind::Sin => out.push(same(self.c * m, self.k, TrigKind::Cos)),
            TrigKind::Cos => out.push(same(-self.c * m, self.k, TrigKind::Sin)),
            TrigKind::Const => {}
        }
        out
    }

    /// ∫_lo^hi of the term ignoring its Heaviside factor.
    fn integral(&self, lo: f64, hi: f64) -> f64 {
        let m = match self.kind {
            TrigKind::Const => 0.0,
            _ => self.m as f64,
        };
        let z = Complex64::new(self.r, m);
        let v = power_exp_integral(self.k, z, lo, hi);
        self.c
            * match self.kind {
                TrigKind::Sin => v.im,
                TrigKind::Cos | TrigKind::Const => v.re,
            }
    }
}

/// ∫_lo^hi τ^k e^{zτ} dτ for complex z.
fn power_exp_integral(k: u32, z: Complex64, lo: f64, hi: f64) -> Complex64 {
    let reach = z.norm() * lo.abs().max(hi.abs());
    if reach < 1.0 {
        // Taylor series of e^{zτ}; avoids the 1/z^{j+1} cancellation.
        let mut sum = Complex64::new(0.0, 0.0);
        let mut zn = Complex64::new(1.0, 0.0);
        let mut fact = 1.0;
        for n in 0..80u32 {
            let p = (n + k + 1) as i32;
            let span = hi.powi(p) - lo.powi(p);
            let term = zn * (span / (fact * p as f64));
            sum += term;
            if term.norm() <= 1e-18 * sum.norm().max(1e-300) && n > 2 {
                break;
            }
            zn *= z;
            fact *= (n + 1) as f64;
        }
        return sum;
    }
    let anti = |tau: f64| -> Complex64 {
        // e^{zτ} Σ_j (−1)^j k!/(k−j)! τ^{k−j} / z^{j+1}
        let mut acc = Complex64::new(0.0, 0.0);
        let mut falling = 1.0;
        let mut zpow = z;
        for j in 0..=k {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * falling * tau.powi((k - j) as i32) / zpow;
            falling *= (k - j) as f64;
            zpow *= z;
        }
        (z * tau).exp() * acc
    };
    anti(hi) - anti(lo)
}

fn product_trig(a: TrigKind, ma: u32, b: TrigKind, mb: u32) -> Vec<(f64, TrigKind, u32)> {
    use TrigKind::*;
    let diff = ma.abs_diff(mb);
    let sum = ma + mb;
    match (a, b) {
        (Const, k) => vec![(1.0, k, mb)],
        (k, Const) => vec![(1.0, k, ma)],
        (Cos, Cos) => vec![(0.5, Cos, diff), (0.5, Cos, sum)],
        (Sin, Sin) => vec![(0.5, Cos, diff), (-0.5, Cos, sum)],
        (Sin, Cos) => {
            let s = if ma >= mb { 0.5 } else { -0.5 };
            vec![(0.5, Sin, sum), (s, Sin, diff)]
        }
        (Cos, Sin) => {
            let s = if mb >= ma { 0.5 } else { -0.5 };
            vec![(0.5, Sin, sum), (s, Sin, diff)]
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseTrigSeries {
    terms: Vec<TrigTerm>,
    domain_end: f64,
}

impl PiecewiseTrigSeries {
    pub fn new(terms: Vec<TrigTerm>, domain_end: f64) -> Result<Self, TrigError> {
        if !(domain_end > 0.0) || !domain_end.is_finite() {
            return Err(TrigError::InvalidTerm(format!("domain_end {domain_end} must be positive")));
        }
        for t in &terms {
            if !(t.a >= 0.0) || !t.a.is_finite() {
                return Err(TrigError::InvalidTerm(format!("activation time {} must be ≥ 0", t.a)));
            }
            if !t.c.is_finite() || !t.r.is_finite() {
                return Err(TrigError::InvalidTerm(format!("non-finite coefficient in {t:?}")));
            }
        }
        Ok(Self { terms, domain_end })
    }

    pub fn zero(domain_end: f64) -> Self {
        Self { terms: Vec::new(), domain_end }
    }

    pub fn terms(&self) -> &[TrigTerm] {
        &self.terms
    }

    pub fn domain_end(&self) -> f64 {
        self.domain_end
    }

    pub fn with_domain_end(mut self, end: f64) -> Self {
        self.domain_end = end;
        self
    }

    /// Sorted distinct activation times strictly inside the domain.
    pub fn activation_times(&self) -> Vec<f64> {
        let mut a: Vec<f64> = self
            .terms
            .iter()
            .map(|t| t.a)
            .filter(|&a| a > 0.0 && a < self.domain_end)
            .collect();
        a.sort_by(f64::total_cmp);
        a.dedup();
        a
    }

    fn check(&self, tau: f64) -> Result<(), TrigError> {
        let slack = 1e-12 * (1.0 + self.domain_end);
        if tau.is_nan() || tau < -slack || tau > self.domain_end + slack {
            return Err(TrigError::Range { tau, end: self.domain_end });
        }
        Ok(())
    }

    /// Right-continuous evaluation: a term with `a == τ` is active.
    pub fn evaluate(&self, tau: f64) -> Result<f64, TrigError> {
        self.check(tau)?;
        Ok(self.terms.iter().filter(|t| t.a <= tau).map(|t| t.value(tau)).sum())
    }

    /// Left limit at τ: terms activating at or after τ are inactive.
    pub fn eval_left(&self, tau: f64) -> Result<f64, TrigError> {
        self.check(tau)?;
        if tau <= 0.0 {
            return Err(TrigError::Range { tau, end: self.domain_end });
        }
        Ok(self.terms.iter().filter(|t| t.a < tau).map(|t| t.value(tau)).sum())
    }

    /// `evaluate(a) − eval_left(a)`.
    pub fn jump_at(&self, a: f64) -> f64 {
        self.terms.iter().filter(|t| t.a == a).map(|t| t.value(a)).sum()
    }

    /// Term-wise classical derivative. Valid away from activation times even
    /// when the series jumps there.
    pub fn differentiate_regular(&self) -> Self {
        let terms = self.terms.iter().flat_map(TrigTerm::derivative).collect();
        Self { terms, domain_end: self.domain_end }.normalize()
    }

    pub fn differentiate(&self) -> Result<Self, TrigError> {
        for a in self.activation_times() {
            let jump = self.jump_at(a);
            let scale = 1.0_f64.max(self.evaluate(a)?.abs());
            if jump.abs() > CONTINUITY_TOL * scale {
                return Err(TrigError::NotContinuous { at: a, jump });
            }
        }
        Ok(self.differentiate_regular())
    }

    pub fn integrate_definite(&self, lo: f64, hi: f64) -> Result<f64, TrigError> {
        self.check(lo)?;
        self.check(hi)?;
        if hi < lo {
            return Err(TrigError::Range { tau: lo, end: hi });
        }
        let mut total = 0.0;
        for t in &self.terms {
            let start = lo.max(t.a);
            if start < hi {
                total += t.integral(start, hi);
            }
        }
        Ok(total)
    }

    pub fn product(&self, other: &Self) -> Result<Self, TrigError> {
        if self.domain_end != other.domain_end {
            return Err(TrigError::DomainMismatch(self.domain_end, other.domain_end));
        }
        let mut terms = Vec::with_capacity(2 * self.terms.len() * other.terms.len());
        for p in &self.terms {
            for q in &other.terms {
                for (f, kind, m) in product_trig(p.kind, p.m, q.kind, q.m) {
                    terms.push(TrigTerm::new(p.c * q.c * f, p.k + q.k, p.r + q.r, kind, m, p.a.max(q.a)));
                }
            }
        }
        Ok(Self { terms, domain_end: self.domain_end }.normalize())
    }

    pub fn add(&self, other: &Self) -> Result<Self, TrigError> {
        if self.domain_end != other.domain_end {
            return Err(TrigError::DomainMismatch(self.domain_end, other.domain_end));
        }
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&other.terms);
        Ok(Self { terms, domain_end: self.domain_end }.normalize())
    }

    pub fn scale(&self, f: f64) -> Self {
        let terms = self.terms.iter().map(|t| TrigTerm { c: t.c * f, ..*t }).collect();
        Self { terms, domain_end: self.domain_end }.normalize()
    }

    /// Merges terms sharing (k, r, kind, m, a) and drops |c| < 1e-14.
    /// First-appearance order is kept so sums are reproducible.
    pub fn normalize(self) -> Self {
        let mut merged: Vec<TrigTerm> = Vec::with_capacity(self.terms.len());
        let mut index = std::collections::HashMap::new();
        for t in self.terms {
            match index.get(&t.key()) {
                Some(&i) => {
                    let slot: &mut TrigTerm = &mut merged[i];
                    slot.c += t.c;
                }
                None => {
                    index.insert(t.key(), merged.len());
                    merged.push(t);
                }
            }
        }
        merged.retain(|t| t.c.abs() >= DROP_BELOW);
        Self { terms: merged, domain_end: self.domain_end }
    }
}

/// Step function built from (sign, activation) pairs: Σ sᵢ H(τ − aᵢ).
pub fn step_series(steps: &[(f64, f64)], domain_end: f64) -> Result<PiecewiseTrigSeries, TrigError> {
    let terms = steps.iter().map(|&(s, a)| TrigTerm::constant(s).activated_at(a)).collect();
    PiecewiseTrigSeries::new(terms, domain_end)
}
