use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::NumError;

pub const MAX_SUBDIVISIONS: usize = 10_000;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

struct Piece {
    a: f64,
    b: f64,
    val: f64,
    err: f64,
}

impl PartialEq for Piece {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Piece {
    fn cmp(&self, o: &Self) -> Ordering {
        self.err.total_cmp(&o.err)
    }
}

/// Adaptive Gauss–Kronrod (7/15) integral of `f` over `[lo, hi]`.
///
/// The interval is first split at every breakpoint strictly inside it, then
/// the piece with the largest error estimate is bisected until the total
/// estimate drops below `max(tol, tol·|I|)`.
pub fn quad_adaptive(f: impl Fn(f64) -> f64, lo: f64, hi: f64, breakpoints: &[f64], tol: f64) -> Result<f64, NumError> {
    if !(lo.is_finite() && hi.is_finite()) || hi < lo {
        return Err(NumError::InvalidInput(format!("bad interval [{lo}, {hi}]")));
    }
    if !(tol > 0.0) {
        return Err(NumError::InvalidInput("tolerance must be positive".into()));
    }
    if hi == lo {
        return Ok(0.0);
    }
    let mut cuts: Vec<f64> = breakpoints.iter().copied().filter(|&b| b > lo && b < hi).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut edges = vec![lo];
    edges.extend(cuts);
    edges.push(hi);

    let mut heap = BinaryHeap::new();
    let (mut total, mut total_err) = (0.0, 0.0);
    for w in edges.windows(2) {
        let (val, err) = gk15(&f, w[0], w[1]);
        total += val;
        total_err += err;
        heap.push(Piece { a: w[0], b: w[1], val, err });
    }
    let mut subdivisions = 0;
    while !(total_err <= tol.max(tol * total.abs())) {
        if !total.is_finite() {
            return Err(NumError::Accuracy { subdivisions, error: f64::INFINITY });
        }
        if subdivisions >= MAX_SUBDIVISIONS {
            return Err(NumError::Accuracy { subdivisions, error: total_err });
        }
        let worst = heap.pop().expect("heap never empties");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            return Err(NumError::Accuracy { subdivisions, error: total_err });
        }
        let (v1, e1) = gk15(&f, worst.a, mid);
        let (v2, e2) = gk15(&f, mid, worst.b);
        total += v1 + v2 - worst.val;
        total_err += e1 + e2 - worst.err;
        heap.push(Piece { a: worst.a, b: mid, val: v1, err: e1 });
        heap.push(Piece { a: mid, b: worst.b, val: v2, err: e2 });
        subdivisions += 1;
        if subdivisions % 64 == 0 {
            // resum to shed accumulated cancellation
            total = heap.iter().map(|p| p.val).sum();
            total_err = heap.iter().map(|p| p.err).sum();
        }
    }
    let v: f64 = heap.iter().map(|p| p.val).sum();
    if v.is_finite() {
        Ok(v)
    } else {
        Err(NumError::Accuracy { subdivisions, error: f64::INFINITY })
    }
}
