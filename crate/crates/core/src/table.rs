//! Per-(ε, method) frequency rows, ε-usability ranges and waveform samples.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::asymptotics::{ham_select_h, hb_solve, lp_frequency, lp_waveform, nstt_frequency, require_heaviside};
use crate::error::{Error, Result};
use crate::hg_core::{solve_hg, HgOptions};
use crate::hg_impact::{solve_h1_impact, ImpactHgOptions};
use crate::systems::{reference_decay, reference_frequency, reference_trajectory, OscillatorKind, OscillatorSpec};

pub const USABILITY_THRESHOLD: f64 = 0.02;
pub const POINTS_PER_PERIOD: usize = 1000;
pub const STATUS_OK: &str = "ok";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Reference,
    Lp,
    Ham,
    Hb1,
    Hb2,
    Nstt,
    Hg,
}

impl Method {
    pub const ALL: [Method; 7] = [Self::Reference, Self::Lp, Self::Ham, Self::Hb1, Self::Hb2, Self::Nstt, Self::Hg];

    pub fn name(self) -> &'static str {
        match self {
            Self::Reference => "reference",
            Self::Lp => "lp",
            Self::Ham => "ham",
            Self::Hb1 => "hb1",
            Self::Hb2 => "hb2",
            Self::Nstt => "nstt",
            Self::Hg => "hg",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown method '{s}'")))
    }
}

/// Knobs shared by every row of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveSettings {
    pub amplitude: f64,
    pub hg: HgOptions,
    pub impact: ImpactHgOptions,
}

impl Default for SolveSettings {
    fn default() -> Self {
        Self { amplitude: 1.0, hg: HgOptions::default(), impact: ImpactHgOptions::default() }
    }
}

/// One CSV line. Fields a method does not produce stay empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub epsilon: f64,
    pub method: Method,
    pub omega: Option<f64>,
    /// 100·|ω − ω_ref|/ω_ref.
    pub pct_error: Option<f64>,
    pub h1: Option<f64>,
    pub h2: Option<f64>,
    pub residual_norm: Option<f64>,
    pub status: String,
}

impl Row {
    fn failed(epsilon: f64, method: Method, err: &Error) -> Self {
        Self {
            epsilon,
            method,
            omega: None,
            pct_error: None,
            h1: None,
            h2: None,
            residual_norm: None,
            status: format!("error: {err}"),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == STATUS_OK
    }
}

/// Solver details that only the JSON output carries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub epsilon: f64,
    pub method: Method,
    pub values: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyTable {
    pub kind: OscillatorKind,
    pub amplitude: f64,
    pub rows: Vec<Row>,
    pub diagnostics: Vec<Diagnostics>,
}

impl FrequencyTable {
    pub fn new(kind: OscillatorKind, amplitude: f64) -> Self {
        Self { kind, amplitude, rows: Vec::new(), diagnostics: Vec::new() }
    }

    /// Appends the rows of one ε and restores the (ε, method) order.
    pub fn extend(&mut self, point: Vec<(Row, Diagnostics)>) {
        for (r, d) in point {
            self.rows.push(r);
            self.diagnostics.push(d);
        }
        self.sort();
    }

    pub fn sort(&mut self) {
        let key = |e: f64, m: Method| (e, m);
        self.rows.sort_by(|a, b| key(a.epsilon, a.method).partial_cmp(&key(b.epsilon, b.method)).unwrap());
        self.diagnostics.sort_by(|a, b| key(a.epsilon, a.method).partial_cmp(&key(b.epsilon, b.method)).unwrap());
    }

    pub fn all_ok(&self) -> bool {
        self.rows.iter().all(Row::is_ok)
    }

    pub fn get(&self, epsilon: f64, method: Method) -> Option<&Row> {
        self.rows.iter().find(|r| r.epsilon == epsilon && r.method == method)
    }
}

struct Solved {
    omega: f64,
    h1: Option<f64>,
    h2: Option<f64>,
    residual: Option<f64>,
    values: Vec<(&'static str, f64)>,
}

impl Solved {
    fn omega(omega: f64) -> Self {
        Self { omega, h1: None, h2: None, residual: None, values: Vec::new() }
    }
}

fn reference_omega(spec: &OscillatorSpec) -> Result<Solved> {
    if spec.kind == OscillatorKind::Impact {
        let r = reference_decay(spec)?;
        let mut s = Solved::omega(r.frequency);
        s.values = vec![("ratio_per_period", r.ratio_per_period)];
        return Ok(s);
    }
    Ok(Solved::omega(reference_frequency(spec)?))
}

fn solve_method(kind: OscillatorKind, eps: f64, method: Method, settings: &SolveSettings, seed: Option<f64>) -> Result<Solved> {
    let spec = OscillatorSpec::with_amplitude(kind, eps, settings.amplitude)?;
    match method {
        Method::Reference => reference_omega(&spec),
        Method::Lp => {
            require_heaviside(kind, "lp")?;
            Ok(Solved::omega(lp_frequency(eps)))
        }
        Method::Ham => {
            require_heaviside(kind, "ham")?;
            let sel = ham_select_h(eps)?;
            let mut s = Solved::omega(sel.omega);
            s.h1 = Some(sel.h);
            s.values = vec![("flat_lo", sel.flat.0), ("flat_hi", sel.flat.1)];
            Ok(s)
        }
        Method::Hb1 | Method::Hb2 => {
            let n = if method == Method::Hb1 { 1 } else { 2 };
            let hb = hb_solve(&spec, n, seed)?;
            let mut s = Solved::omega(hb.omega);
            s.residual = Some(hb.residual_norm);
            s.values = vec![("a1", hb.a1), ("a2", hb.a2)];
            Ok(s)
        }
        Method::Nstt => {
            require_heaviside(kind, "nstt")?;
            Ok(Solved::omega(nstt_frequency(eps)?))
        }
        Method::Hg if kind == OscillatorKind::Impact => {
            let st = solve_h1_impact(eps, &settings.impact)?;
            Ok(Solved {
                omega: st.omega_d(),
                h1: Some(st.h1),
                h2: None,
                residual: Some(st.residual.abs()),
                values: vec![
                    ("gamma0", st.gamma0),
                    ("chi0", st.chi0),
                    ("decay_ratio", st.decay_ratio()?),
                    ("roots", st.roots.len() as f64),
                ],
            })
        }
        Method::Hg => {
            let opts = HgOptions { omega_seed: seed.or(settings.hg.omega_seed), ..settings.hg };
            let sol = solve_hg(kind, eps, settings.amplitude, &opts)?;
            Ok(Solved {
                omega: sol.omega,
                h1: Some(sol.h1),
                h2: Some(sol.h2),
                residual: Some(sol.residual_norm),
                values: vec![
                    ("lambda1", sol.lambda1),
                    ("lambda2", sol.lambda2),
                    ("t1", sol.t1),
                    ("t2", sol.t2),
                    ("iterations", sol.iterations as f64),
                    ("restarts", sol.restarts as f64),
                    ("jacobian_condition", sol.jacobian_condition),
                ],
            })
        }
    }
}

/// Every requested method at one ε. The reference runs first so its
/// frequency seeds the iterative methods and anchors `pct_error`; it is
/// only reported when requested.
pub fn compute_point(kind: OscillatorKind, eps: f64, methods: &[Method], settings: &SolveSettings) -> Vec<(Row, Diagnostics)> {
    let reference = if methods.contains(&Method::Reference) {
        Some(solve_method(kind, eps, Method::Reference, settings, None))
    } else {
        None
    };
    let ref_omega = reference.as_ref().and_then(|r| r.as_ref().ok()).map(|s| s.omega);
    let seed = if kind == OscillatorKind::Impact { None } else { ref_omega };
    let mut out = Vec::with_capacity(methods.len());
    let mut seen = Vec::new();
    for &m in methods {
        if seen.contains(&m) {
            continue;
        }
        seen.push(m);
        let solved = match (m, &reference) {
            (Method::Reference, Some(r)) => r.as_ref().map(|s| Solved { values: s.values.clone(), ..Solved::omega(s.omega) }).map_err(Clone::clone),
            _ => solve_method(kind, eps, m, settings, seed),
        };
        let (row, values) = match solved {
            Ok(s) => (
                Row {
                    epsilon: eps,
                    method: m,
                    omega: Some(s.omega),
                    pct_error: ref_omega.map(|r| 100.0 * (s.omega - r).abs() / r),
                    h1: s.h1,
                    h2: s.h2,
                    residual_norm: s.residual,
                    status: STATUS_OK.into(),
                },
                s.values.into_iter().filter(|(_, v)| v.is_finite()).map(|(k, v)| (k.to_string(), v)).collect(),
            ),
            Err(e) => (Row::failed(eps, m, &e), BTreeMap::new()),
        };
        out.push((row, Diagnostics { epsilon: eps, method: m, values }));
    }
    out
}

/// Sequential sweep; the cli runs the same points in parallel.
pub fn compute_table(kind: OscillatorKind, eps: &[f64], methods: &[Method], settings: &SolveSettings) -> FrequencyTable {
    let mut t = FrequencyTable::new(kind, settings.amplitude);
    for &e in eps {
        t.extend(compute_point(kind, e, methods, settings));
    }
    t
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Usability {
    pub method: Method,
    /// `None` when the first grid point already misses the threshold.
    pub range: Option<(f64, f64)>,
}

/// For each method, the grid prefix over which the error stays within
/// `threshold` (a fraction, 0.02 for 2%).
pub fn report_usability(table: &FrequencyTable, threshold: f64) -> Result<Vec<Usability>> {
    if !table.rows.iter().any(|r| r.method == Method::Reference && r.is_ok()) {
        return Err(Error::Config("usability needs the reference method".into()));
    }
    let mut methods: Vec<Method> = table.rows.iter().map(|r| r.method).filter(|&m| m != Method::Reference).collect();
    methods.sort();
    methods.dedup();
    let limit = 100.0 * threshold;
    Ok(methods
        .into_iter()
        .map(|m| {
            let mut rows: Vec<&Row> = table.rows.iter().filter(|r| r.method == m).collect();
            rows.sort_by(|a, b| a.epsilon.total_cmp(&b.epsilon));
            let good = rows.iter().take_while(|r| r.is_ok() && r.pct_error.is_some_and(|p| p <= limit)).count();
            let range = (good > 0).then(|| (rows[0].epsilon, rows[good - 1].epsilon));
            Usability { method: m, range }
        })
        .collect())
}

/// (t, x) samples, `POINTS_PER_PERIOD` per period of the method's own
/// frequency, endpoint excluded. Impact waveforms span the HG horizon.
pub fn waveform(kind: OscillatorKind, eps: f64, method: Method, settings: &SolveSettings, periods: usize) -> Result<Vec<(f64, f64)>> {
    let spec = OscillatorSpec::with_amplitude(kind, eps, settings.amplitude)?;
    let periods = periods.max(1);
    let grid = |period: f64| -> Vec<f64> {
        let n = POINTS_PER_PERIOD * periods;
        (0..n).map(|i| period * periods as f64 * i as f64 / n as f64).collect()
    };
    let zip = |t: Vec<f64>, x: Vec<f64>| t.into_iter().zip(x).collect();
    match method {
        Method::Reference => {
            let period = if kind == OscillatorKind::Impact {
                2.0 * PI
            } else {
                2.0 * PI / reference_frequency(&spec)?
            };
            let t = grid(period);
            let x = reference_trajectory(&spec, &t)?;
            Ok(zip(t, x))
        }
        Method::Lp => {
            require_heaviside(kind, "lp")?;
            let lp = lp_waveform(eps);
            let t = grid(lp.period());
            let x = t.iter().map(|&s| lp.evaluate(s % lp.period())).collect::<Result<Vec<_>>>()?;
            Ok(zip(t, x))
        }
        Method::Hb1 | Method::Hb2 => {
            let hb = hb_solve(&spec, if method == Method::Hb1 { 1 } else { 2 }, None)?;
            let t = grid(2.0 * PI / hb.omega);
            let x = t.iter().map(|&s| hb.a1 * (hb.omega * s).cos() + hb.a2 * (3.0 * hb.omega * s).cos()).collect();
            Ok(zip(t, x))
        }
        Method::Hg if kind == OscillatorKind::Impact => {
            let st = solve_h1_impact(eps, &settings.impact)?;
            let n = (POINTS_PER_PERIOD as f64 * st.horizon() / (2.0 * PI)).round() as usize;
            (0..n)
                .map(|i| {
                    let s = st.horizon() * i as f64 / n as f64;
                    Ok((s, st.evaluate(s)?))
                })
                .collect()
        }
        Method::Hg => {
            let sol = solve_hg(kind, eps, settings.amplitude, &settings.hg)?;
            let p = sol.period();
            grid(p).into_iter().map(|s| Ok((s, sol.evaluate(s % p)?))).collect()
        }
        Method::Ham | Method::Nstt => Err(Error::Domain(format!("{method} yields a frequency only, no waveform"))),
    }
}

/// Grid start, start + step, … up to `end` inclusive, rounded to 1e-9 so
/// repeated additions do not leave 0.30000000000000004 in the output.
pub fn eps_grid(start: f64, end: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(end >= start) || !start.is_finite() || !end.is_finite() {
        return Err(Error::Config(format!("bad range {start}..{end} step {step}")));
    }
    let n = ((end - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9).collect())
}
