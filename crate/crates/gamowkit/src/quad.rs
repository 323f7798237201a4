//! Adaptive complex-valued quadrature on real intervals and polylines,
//! plus Gauss-Legendre panel rules for fixed grids.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::collections::BinaryHeap;

/// Kronrod 15-point abscissae on [0, 1] side (symmetric), QUADPACK dqk15.
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
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

/// Embedded 7-point Gauss weights (odd Kronrod abscissae).
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: Complex64,
    pub error: f64,
    pub evaluations: usize,
}

/// One Gauss-Kronrod 15(7) pass over [a, b].
///
/// Returns (integral, error estimate). The error estimate follows the
/// QUADPACK rescaling of |K15 - G7| against the dispersion of f.
fn gk15<F: FnMut(f64) -> Result<Complex64>>(f: &mut F, a: f64, b: f64) -> Result<(Complex64, f64)> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut resk = Complex64::new(0.0, 0.0);
    let mut resg = Complex64::new(0.0, 0.0);
    let mut samples = [Complex64::new(0.0, 0.0); 15];
    for (j, (&x, &wk)) in XGK.iter().zip(WGK.iter()).enumerate() {
        if x == 0.0 {
            let fc = f(c)?;
            samples[14] = fc;
            resk += wk * fc;
            resg += WG[3] * fc;
        } else {
            let f1 = f(c - h * x)?;
            let f2 = f(c + h * x)?;
            samples[2 * j] = f1;
            samples[2 * j + 1] = f2;
            resk += wk * (f1 + f2);
            if j % 2 == 1 {
                resg += WG[j / 2] * (f1 + f2);
            }
        }
    }
    let mean = resk * 0.5;
    let mut resasc = 0.0;
    for (j, &wk) in WGK.iter().enumerate() {
        if j == 7 {
            resasc += wk * (samples[14] - mean).norm();
        } else {
            resasc += wk * ((samples[2 * j] - mean).norm() + (samples[2 * j + 1] - mean).norm());
        }
    }
    resasc *= h.abs();
    let raw = (resk - resg).norm() * h.abs();
    let err = if resasc != 0.0 && raw != 0.0 {
        resasc * (1.0f64).min((200.0 * raw / resasc).powf(1.5))
    } else {
        raw
    };
    Ok((resk * h, err))
}

#[derive(Debug)]
struct Interval {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
}

impl PartialEq for Interval {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error && self.a == other.a
    }
}
impl Eq for Interval {}
impl PartialOrd for Interval {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Interval {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // largest error first; tie-break on the left endpoint for determinism
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

/// Adaptive Gauss-Kronrod integration of a complex-valued function of a
/// real parameter over [a, b] to the given absolute tolerance.
pub fn adaptive_gk<F: FnMut(f64) -> Result<Complex64>>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    max_intervals: usize,
) -> Result<QuadResult> {
    let mut guarded = |s: f64| -> Result<Complex64> {
        let v = f(s)?;
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(Error::NonMeromorphicIntegrand { k: Complex64::new(s, 0.0) });
        }
        Ok(v)
    };
    let (value, error) = gk15(&mut guarded, a, b)?;
    let mut heap = BinaryHeap::new();
    heap.push(Interval { a, b, value, error });
    let mut evaluations = 15;
    let mut total_err: f64 = error;
    while total_err > abs_tol && heap.len() < max_intervals {
        let worst = heap.pop().expect("heap cannot be empty here");
        // an interval so short that bisection cannot help any more
        if (worst.b - worst.a).abs() < 1e-15 * (b - a).abs() {
            heap.push(worst);
            break;
        }
        let mid = 0.5 * (worst.a + worst.b);
        let (v1, e1) = gk15(&mut guarded, worst.a, mid)?;
        let (v2, e2) = gk15(&mut guarded, mid, worst.b)?;
        evaluations += 30;
        total_err += e1 + e2 - worst.error;
        heap.push(Interval { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Interval { a: mid, b: worst.b, value: v2, error: e2 });
    }
    if total_err > abs_tol {
        return Err(Error::NoConvergence {
            what: "adaptive quadrature",
            achieved: total_err,
            requested: abs_tol,
        });
    }
    let mut value = Complex64::new(0.0, 0.0);
    // sort for a reproducible summation order
    let mut parts: Vec<Interval> = heap.into_vec();
    parts.sort_by(|p, q| p.a.total_cmp(&q.a));
    for p in &parts {
        value += p.value;
    }
    Ok(QuadResult { value, error: total_err, evaluations })
}

/// Integrate f(z) dz along the straight segments of a polyline.
pub fn integrate_polyline<F: FnMut(Complex64) -> Result<Complex64>>(
    mut f: F,
    vertices: &[Complex64],
    abs_tol: f64,
    max_intervals: usize,
) -> Result<QuadResult> {
    assert!(vertices.len() >= 2, "polyline needs at least two vertices");
    let n_seg = vertices.len() - 1;
    let seg_tol = abs_tol / n_seg as f64;
    let mut total = QuadResult { value: Complex64::new(0.0, 0.0), error: 0.0, evaluations: 0 };
    for w in vertices.windows(2) {
        let (z0, z1) = (w[0], w[1]);
        let dz = z1 - z0;
        if dz.norm() == 0.0 {
            continue;
        }
        let r = adaptive_gk(|s| f(z0 + s * dz), 0.0, 1.0, seg_tol / dz.norm(), max_intervals)?;
        total.value += r.value * dz;
        total.error += r.error * dz.norm();
        total.evaluations += r.evaluations;
    }
    Ok(total)
}

/// Gauss-Legendre nodes and weights on [-1, 1], generated by Newton
/// iteration on the Legendre polynomial.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // recurrence for P_n(x) and P_{n-1}(x)
            let mut p0 = 1.0;
            let mut p1 = x;
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Composite Gauss-Legendre rule: `per_panel` nodes on every sub-interval
/// [breaks[i], breaks[i+1]]. Breaks must be strictly increasing.
pub fn panel_rule(breaks: &[f64], per_panel: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(breaks.len() >= 2);
    let (xs, ws) = gauss_legendre(per_panel);
    let mut nodes = Vec::with_capacity(per_panel * (breaks.len() - 1));
    let mut weights = Vec::with_capacity(per_panel * (breaks.len() - 1));
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        assert!(b > a, "breaks must be strictly increasing");
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        for (x, wt) in xs.iter().zip(ws.iter()) {
            nodes.push(c + h * x);
            weights.push(h * wt);
        }
    }
    (nodes, weights)
}
