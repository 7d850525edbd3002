//! Dormand–Prince 5(4) with dense output and event handling.

use super::NumError;

/// Default relative tolerance for reference runs.
pub const REF_REL_TOL: f64 = 1e-10;
/// Default absolute tolerance for reference runs.
pub const REF_ABS_TOL: f64 = 1e-12;
/// Step budget before giving up.
pub const MAX_STEPS: usize = 1_000_000;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

pub type Rhs<'a> = Box<dyn Fn(f64, &[f64], &mut [f64]) + Send + Sync + 'a>;
pub type EventFn<'a> = Box<dyn Fn(f64, &[f64]) -> f64 + Send + Sync + 'a>;
pub type StateMap<'a> = Box<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync + 'a>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Rising,
    Falling,
    Either,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventTag {
    ZeroCrossing,
    Impact,
    TurningPoint,
    Stop,
}

pub enum EventAction<'a> {
    Record,
    Stop,
    Impact(StateMap<'a>),
}

pub struct Event<'a> {
    pub tag: EventTag,
    pub g: EventFn<'a>,
    pub direction: Direction,
    pub action: EventAction<'a>,
    /// Integration ends once this event has fired this many times.
    pub stop_after: Option<usize>,
}

impl<'a> Event<'a> {
    pub fn new(tag: EventTag, g: impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'a, direction: Direction) -> Self {
        Self { tag, g: Box::new(g), direction, action: EventAction::Record, stop_after: None }
    }

    pub fn impact(mut self, map: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'a) -> Self {
        self.action = EventAction::Impact(Box::new(map));
        self
    }

    pub fn terminal(mut self) -> Self {
        self.action = EventAction::Stop;
        self
    }

    pub fn stop_after(mut self, n: usize) -> Self {
        self.stop_after = Some(n);
        self
    }
}

pub struct IvpProblem<'a> {
    pub rhs: Rhs<'a>,
    pub y0: Vec<f64>,
    pub t_span: (f64, f64),
    pub events: Vec<Event<'a>>,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: Option<f64>,
    /// Sample times for the output; accepted steps are stored when `None`.
    pub t_eval: Option<Vec<f64>>,
}

impl<'a> IvpProblem<'a> {
    pub fn new(rhs: impl Fn(f64, &[f64], &mut [f64]) + Send + Sync + 'a, y0: Vec<f64>, t_span: (f64, f64)) -> Self {
        Self {
            rhs: Box::new(rhs),
            y0,
            t_span,
            events: Vec::new(),
            rel_tol: REF_REL_TOL,
            abs_tol: REF_ABS_TOL,
            max_step: None,
            t_eval: None,
        }
    }

    pub fn event(mut self, e: Event<'a>) -> Self {
        self.events.push(e);
        self
    }

    pub fn tolerances(mut self, rel: f64, abs: f64) -> Self {
        self.rel_tol = rel;
        self.abs_tol = abs;
        self
    }

    pub fn max_step(mut self, h: f64) -> Self {
        self.max_step = Some(h);
        self
    }

    pub fn t_eval(mut self, t: Vec<f64>) -> Self {
        self.t_eval = Some(t);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord {
    pub t: f64,
    pub tag: EventTag,
    pub rising: bool,
    pub pre: Vec<f64>,
    pub post: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimTrace {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub events: Vec<EventRecord>,
    pub steps: usize,
    pub rejected: usize,
}

impl SimTrace {
    pub fn events_tagged(&self, tag: EventTag) -> impl Iterator<Item = &EventRecord> {
        self.events.iter().filter(move |e| e.tag == tag)
    }
}

struct Step {
    t: f64,
    h: f64,
    y: Vec<f64>,
    y_new: Vec<f64>,
    k1: Vec<f64>,
    k7: Vec<f64>,
    cont5: Vec<f64>,
}

impl Step {
    fn dense(&self, t: f64) -> Vec<f64> {
        let theta = if self.h == 0.0 { 1.0 } else { (t - self.t) / self.h };
        let th1 = 1.0 - theta;
        (0..self.y.len())
            .map(|i| {
                let dy = self.y_new[i] - self.y[i];
                let bspl = self.h * self.k1[i] - dy;
                let r4 = dy - self.h * self.k7[i] - bspl;
                self.y[i] + theta * (dy + th1 * (bspl + theta * (r4 + th1 * self.cont5[i])))
            })
            .collect()
    }
}

fn error_norm(y: &[f64], y_new: &[f64], err: &[f64], rel: f64, abs: f64) -> f64 {
    let n = y.len() as f64;
    let s: f64 = (0..y.len())
        .map(|i| {
            let sc = abs + rel * y[i].abs().max(y_new[i].abs());
            (err[i] / sc).powi(2)
        })
        .sum();
    (s / n).sqrt()
}

fn initial_step(p: &IvpProblem, t: f64, y: &[f64], f0: &[f64], dir_span: f64) -> f64 {
    let n = y.len();
    let sc: Vec<f64> = y.iter().map(|v| p.abs_tol + p.rel_tol * v.abs()).collect();
    let d0 = (y.iter().zip(&sc).map(|(v, s)| (v / s).powi(2)).sum::<f64>() / n as f64).sqrt();
    let d1 = (f0.iter().zip(&sc).map(|(v, s)| (v / s).powi(2)).sum::<f64>() / n as f64).sqrt();
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(dir_span);
    let y1: Vec<f64> = (0..n).map(|i| y[i] + h0 * f0[i]).collect();
    let mut f1 = vec![0.0; n];
    (p.rhs)(t + h0, &y1, &mut f1);
    let d2 = ((0..n).map(|i| ((f1[i] - f0[i]) / sc[i]).powi(2)).sum::<f64>() / n as f64).sqrt() / h0;
    let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(0.2) };
    (100.0 * h0).min(h1).min(dir_span)
}

/// Integrates `p` forward in time.
///
/// Events are located by bisection on the dense output, to |g| below
/// 1e-12 times the state scale, and integration restarts at each event.
pub fn solve_ivp(p: &IvpProblem) -> Result<SimTrace, NumError> {
    let (t0, t1) = p.t_span;
    if !(t1 > t0) {
        return Err(NumError::InvalidInput(format!("t_span ({t0}, {t1}) must be increasing")));
    }
    if !(p.rel_tol > 0.0 && p.abs_tol > 0.0) {
        return Err(NumError::InvalidInput("tolerances must be positive".into()));
    }
    let n = p.y0.len();
    let mut trace = SimTrace::default();
    let mut eval_iter = p.t_eval.as_ref().map(|v| v.iter().copied().peekable());
    let push_sample = |trace: &mut SimTrace, t: f64, y: Vec<f64>| {
        trace.times.push(t);
        trace.states.push(y);
    };
    let mut fired = vec![0usize; p.events.len()];

    let mut t = t0;
    let mut y = p.y0.clone();
    if let Some(it) = eval_iter.as_mut() {
        while let Some(&te) = it.peek() {
            if te > t0 {
                break;
            }
            if te == t0 {
                push_sample(&mut trace, t0, y.clone());
            }
            it.next();
        }
    } else {
        push_sample(&mut trace, t0, y.clone());
    }

    let mut k1 = vec![0.0; n];
    (p.rhs)(t, &y, &mut k1);
    let max_h = p.max_step.unwrap_or(t1 - t0).min(t1 - t0);
    let mut h = initial_step(p, t, &y, &k1, max_h);
    let mut stages = vec![vec![0.0; n]; 7];
    let mut ytmp = vec![0.0; n];
    let mut last_rejected = false;

    loop {
        if t >= t1 {
            break;
        }
        if trace.steps + trace.rejected >= MAX_STEPS {
            return Err(NumError::Budget { steps: MAX_STEPS, t });
        }
        h = h.min(max_h);
        if t + h > t1 {
            h = t1 - t;
        }
        if h < 16.0 * f64::EPSILON * t.abs().max(1.0) {
            return Err(NumError::StepUnderflow { t, h });
        }

        stages[0].copy_from_slice(&k1);
        let rows: [(f64, &[f64]); 5] = [
            (C2, &[A21]),
            (C3, &[A31, A32]),
            (C4, &[A41, A42, A43]),
            (C5, &[A51, A52, A53, A54]),
            (1.0, &[A61, A62, A63, A64, A65]),
        ];
        for (s, (c, a)) in rows.iter().enumerate() {
            for i in 0..n {
                let mut acc = y[i];
                for (j, aj) in a.iter().enumerate() {
                    acc += h * aj * stages[j][i];
                }
                ytmp[i] = acc;
            }
            let (done, rest) = stages.split_at_mut(s + 1);
            let _ = done;
            (p.rhs)(t + c * h, &ytmp, &mut rest[0]);
        }
        let y_new: Vec<f64> = (0..n)
            .map(|i| {
                y[i] + h
                    * (A71 * stages[0][i] + A73 * stages[2][i] + A74 * stages[3][i] + A75 * stages[4][i]
                        + A76 * stages[5][i])
            })
            .collect();
        let mut k7 = vec![0.0; n];
        (p.rhs)(t + h, &y_new, &mut k7);
        let err: Vec<f64> = (0..n)
            .map(|i| {
                h * (E1 * stages[0][i] + E3 * stages[2][i] + E4 * stages[3][i] + E5 * stages[4][i]
                    + E6 * stages[5][i]
                    + E7 * k7[i])
            })
            .collect();
        let en = error_norm(&y, &y_new, &err, p.rel_tol, p.abs_tol);
        if !en.is_finite() || en > 1.0 {
            trace.rejected += 1;
            let fac = if en.is_finite() { (0.9 * en.powf(-0.2)).max(0.2) } else { 0.1 };
            h *= fac;
            last_rejected = true;
            continue;
        }
        trace.steps += 1;
        let cont5: Vec<f64> = (0..n)
            .map(|i| {
                h * (D1 * stages[0][i] + D3 * stages[2][i] + D4 * stages[3][i] + D5 * stages[4][i]
                    + D6 * stages[5][i]
                    + D7 * k7[i])
            })
            .collect();
        let step = Step { t, h, y: y.clone(), y_new, k1: k1.clone(), k7, cont5 };

        let hit = locate_event(p, &step)?;
        let t_stop = hit.as_ref().map_or(t + h, |(te, _)| *te);
        if let Some(it) = eval_iter.as_mut() {
            while let Some(&te) = it.peek() {
                if te > t_stop {
                    break;
                }
                push_sample(&mut trace, te, step.dense(te));
                it.next();
            }
        }

        let mut stop = false;
        match hit {
            None => {
                t += h;
                y = step.y_new;
                k1 = step.k7;
                if p.t_eval.is_none() {
                    push_sample(&mut trace, t, y.clone());
                }
            }
            Some((te, idxs)) => {
                let mut state = step.dense(te);
                for idx in idxs {
                    let e = &p.events[idx];
                    let pre = state.clone();
                    let before = (e.g)(step.t, &step.y);
                    let post = match &e.action {
                        EventAction::Impact(map) => map(&pre),
                        EventAction::Record | EventAction::Stop => pre.clone(),
                    };
                    trace.events.push(EventRecord { t: te, tag: e.tag, rising: before < 0.0, pre, post: post.clone() });
                    state = post;
                    fired[idx] += 1;
                    if matches!(e.action, EventAction::Stop) || e.stop_after.is_some_and(|k| fired[idx] >= k) {
                        stop = true;
                    }
                }
                t = te;
                y = state;
                if p.t_eval.is_none() {
                    push_sample(&mut trace, t, y.clone());
                }
                (p.rhs)(t, &y, &mut k1);
            }
        }
        if stop {
            break;
        }
        let fac = (0.9 * en.max(1e-10).powf(-0.2)).clamp(0.2, 10.0);
        h *= if last_rejected { fac.min(1.0) } else { fac };
        last_rejected = false;
    }
    Ok(trace)
}

fn crosses(dir: Direction, before: f64, after: f64) -> bool {
    match dir {
        Direction::Rising => before < 0.0 && after >= 0.0,
        Direction::Falling => before > 0.0 && after <= 0.0,
        Direction::Either => (before < 0.0 && after >= 0.0) || (before > 0.0 && after <= 0.0),
    }
}

/// Earliest event inside the step, with every event index that fires within
/// 1e-12 of it, in listed order.
fn locate_event(p: &IvpProblem, step: &Step) -> Result<Option<(f64, Vec<usize>)>, NumError> {
    let t_end = step.t + step.h;
    let scale = 1.0 + step.y.iter().chain(&step.y_new).fold(0.0f64, |m, v| m.max(v.abs()));
    let mut found: Vec<(f64, usize)> = Vec::new();
    for (idx, e) in p.events.iter().enumerate() {
        let before = (e.g)(step.t, &step.y);
        let after = (e.g)(t_end, &step.y_new);
        if !crosses(e.direction, before, after) {
            continue;
        }
        let (mut lo, mut hi) = (step.t, t_end);
        let mut t_hit = t_end;
        for _ in 0..200 {
            let g_hi = (e.g)(hi, &step.dense(hi));
            if g_hi.abs() < 1e-12 * scale {
                t_hit = hi;
                break;
            }
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                t_hit = hi;
                break;
            }
            let g_mid = (e.g)(mid, &step.dense(mid));
            if crosses(e.direction, before, g_mid) {
                hi = mid;
            } else {
                lo = mid;
            }
            t_hit = hi;
        }
        found.push((t_hit, idx));
    }
    if found.is_empty() {
        return Ok(None);
    }
    let first = found.iter().map(|f| f.0).fold(f64::INFINITY, f64::min);
    let mut idxs: Vec<usize> = found.iter().filter(|f| f.0 - first <= 1e-12).map(|f| f.1).collect();
    idxs.sort_unstable();
    Ok(Some((first, idxs)))
}

/// Averaged spacing of successive same-direction zero crossings.
///
/// Uses whichever direction has more recorded crossings (falling on ties).
pub fn measure_period(trace: &SimTrace) -> Result<f64, NumError> {
    let pick = |rising: bool| -> Vec<f64> {
        trace.events_tagged(EventTag::ZeroCrossing).filter(|e| e.rising == rising).map(|e| e.t).collect()
    };
    let falling = pick(false);
    let rising = pick(true);
    let times = if rising.len() > falling.len() { rising } else { falling };
    if times.len() < 3 {
        return Err(NumError::InsufficientData(format!(
            "{} same-direction zero crossings, need at least 3",
            times.len()
        )));
    }
    Ok((times[times.len() - 1] - times[0]) / (times.len() - 1) as f64)
}
