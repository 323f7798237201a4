//! Brute-force reference computations: Crank-Nicolson grid propagation and
//! direct quadrature of the spectral representation of the propagator.
//! Every pole expansion in the crate is judged against these two, and the
//! two are required to agree with each other first.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::expand::{segment_distance, winding_number, Contour};
use crate::model::{green_outgoing, PotentialModel};
use crate::poles::{self, PoleClass, SearchRegion};
use crate::quad;

/// Wave function sampled on a uniform hard-wall grid.  The two boundary
/// nodes are part of `psi` and stay pinned at zero.
#[derive(Debug, Clone)]
pub struct GridState {
    /// coordinate of the first node
    pub x0: f64,
    /// node spacing
    pub h: f64,
    /// accumulated physical time
    pub t: f64,
    pub psi: Vec<Complex64>,
}

impl GridState {
    pub fn sample<F: Fn(f64) -> Complex64>(x0: f64, h: f64, n: usize, f: F) -> Result<GridState> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::NonPositiveRange { name: "grid step", value: h });
        }
        if n < 8 {
            return Err(Error::NonPositiveRange { name: "grid node count", value: n as f64 });
        }
        let mut psi: Vec<Complex64> = (0..n).map(|j| f(x0 + j as f64 * h)).collect();
        psi[0] = Complex64::new(0.0, 0.0);
        psi[n - 1] = Complex64::new(0.0, 0.0);
        Ok(GridState { x0, h, t: 0.0, psi })
    }

    pub fn box_size(&self) -> f64 {
        self.h * (self.psi.len() - 1) as f64
    }

    pub fn norm(&self) -> f64 {
        (self.psi.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.h).sqrt()
    }

    /// Centroid of |psi|^2, for kinematic checks.
    pub fn centroid(&self) -> f64 {
        let mut m = 0.0;
        let mut mx = 0.0;
        for (j, c) in self.psi.iter().enumerate() {
            let p = c.norm_sqr();
            m += p;
            mx += p * (self.x0 + j as f64 * self.h);
        }
        mx / m
    }

    /// Amplitude at x by cubic 4-point interpolation.
    pub fn value_at(&self, x: f64) -> Complex64 {
        let n = self.psi.len();
        let s = (x - self.x0) / self.h;
        let j = (s.floor() as isize).clamp(1, n as isize - 3) as usize;
        let base = j - 1;
        let mut out = Complex64::new(0.0, 0.0);
        for m in 0..4 {
            let xm = (base + m) as f64;
            let mut w = 1.0;
            for l in 0..4 {
                if l != m {
                    let xl = (base + l) as f64;
                    w *= (s - xl) / (xm - xl);
                }
            }
            out += w * self.psi[base + m];
        }
        out
    }

    /// Fraction of the squared norm sitting in the outer 5% of the box.
    /// For radial grids only the far wall is artificial; the r = 0 wall is
    /// part of the physics.
    fn guard_band_fraction(&self, both_sides: bool) -> f64 {
        let n = self.psi.len();
        let band = (n / 20).max(2);
        let mut total = 0.0;
        let mut outer = 0.0;
        for (j, c) in self.psi.iter().enumerate() {
            let p = c.norm_sqr();
            total += p;
            if j >= n - band || (both_sides && j < band) {
                outer += p;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            outer / total
        }
    }
}

/// Potential sampled on the grid.  Delta terms are folded into the row of
/// their node as strength / h (the exact jump condition for the three-point
/// stencil); sharp edges get the fractional overlap of the node cell so
/// the representation stays second order.
fn potential_row(model: &PotentialModel, x0: f64, h: f64, n: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    let cell_overlap = |x: f64, lo: f64, hi: f64| -> f64 {
        let a = (x - 0.5 * h).max(lo);
        let b = (x + 0.5 * h).min(hi);
        ((b - a) / h).clamp(0.0, 1.0)
    };
    match model {
        PotentialModel::RadialDeltaShell { lambda, a } => {
            let j = ((a - x0) / h).round() as isize;
            if j > 0 && (j as usize) < n - 1 {
                v[j as usize] += lambda / h;
            }
        }
        PotentialModel::RadialSquareWell { v0, radius } => {
            for (j, vj) in v.iter_mut().enumerate() {
                let x = x0 + j as f64 * h;
                *vj = -v0 * cell_overlap(x, f64::NEG_INFINITY, *radius);
            }
        }
        PotentialModel::Barrier1DDelta { lambda, .. } => {
            let j = ((0.0 - x0) / h).round() as isize;
            if j > 0 && (j as usize) < n - 1 {
                v[j as usize] += lambda / h;
            }
        }
        PotentialModel::Barrier1DSquare { v0, d, .. } => {
            for (j, vj) in v.iter_mut().enumerate() {
                let x = x0 + j as f64 * h;
                *vj = v0 * cell_overlap(x, 0.0, *d);
            }
        }
    }
    v
}

/// Scoped flush-to-zero.  The wave tails in the mostly empty box fill the
/// grid with subnormals otherwise, and every op on those takes a microcode
/// assist, slowing the sweeps by an order of magnitude.  Anything under
/// the normal floor sits two hundred decades below the tolerances here.
struct FlushTinyToZero {
    #[cfg(target_arch = "x86_64")]
    saved: u32,
}

#[cfg(target_arch = "x86_64")]
fn read_mxcsr() -> u32 {
    let mut csr = 0u32;
    unsafe {
        std::arch::asm!("stmxcsr [{}]", in(reg) &mut csr, options(nostack, preserves_flags));
    }
    csr
}

#[cfg(target_arch = "x86_64")]
fn write_mxcsr(csr: u32) {
    unsafe {
        std::arch::asm!("ldmxcsr [{}]", in(reg) &csr, options(nostack, readonly, preserves_flags));
    }
}

impl FlushTinyToZero {
    fn engage() -> Self {
        #[cfg(target_arch = "x86_64")]
        {
            let saved = read_mxcsr();
            write_mxcsr(saved | 0x8040);
            FlushTinyToZero { saved }
        }
        #[cfg(not(target_arch = "x86_64"))]
        FlushTinyToZero {}
    }
}

impl Drop for FlushTinyToZero {
    fn drop(&mut self) {
        #[cfg(target_arch = "x86_64")]
        write_mxcsr(self.saved);
    }
}

/// Unitary second-order time stepping of i hbar psi_t = H psi in a hard
/// box.  The tridiagonal system is constant in time, so its elimination
/// factors are computed once.
pub fn crank_nicolson_propagate(
    model: &PotentialModel,
    initial: &GridState,
    dt: f64,
    steps: usize,
) -> Result<GridState> {
    let h = initial.h;
    let bound = 4.0 * h * h;
    if !(dt > 0.0) || dt > bound * (1.0 + 1e-12) {
        return Err(Error::InvalidTimeStep { dt, bound });
    }
    let n = initial.psi.len();
    let m = n - 2;
    let kin = model.kinematics();
    let c = kin.hbar * kin.hbar / (2.0 * kin.mass * h * h);
    let theta = dt / (2.0 * kin.hbar);
    let v = potential_row(model, initial.x0, h, n);

    let i = Complex64::i();
    let off = -i * theta * c; // off-diagonal of (1 + i theta H)
    let mut a_diag = Vec::with_capacity(m);
    let mut b_diag = Vec::with_capacity(m);
    for vj in v.iter().take(n - 1).skip(1) {
        let hd = 2.0 * c + vj;
        a_diag.push(1.0 + i * theta * hd);
        b_diag.push(1.0 - i * theta * hd);
    }
    let mut inv = Vec::with_capacity(m);
    let mut cp = Vec::with_capacity(m);
    inv.push(1.0 / a_diag[0]);
    cp.push(off * inv[0]);
    for j in 1..m {
        let den = a_diag[j] - off * cp[j - 1];
        inv.push(1.0 / den);
        cp.push(off * inv[j]);
    }

    let _ftz = FlushTinyToZero::engage();
    let mut psi = initial.psi.clone();
    let mut d = vec![Complex64::new(0.0, 0.0); m];
    for _ in 0..steps {
        d[0] = (b_diag[0] * psi[1] - off * psi[2]) * inv[0];
        for j in 1..m {
            let rhs = b_diag[j] * psi[j + 1] - off * (psi[j] + psi[j + 2]);
            d[j] = (rhs - off * d[j - 1]) * inv[j];
        }
        psi[m] = d[m - 1];
        for j in (0..m - 1).rev() {
            psi[j + 1] = d[j] - cp[j] * psi[j + 2];
        }
    }

    let out = GridState { x0: initial.x0, h, t: initial.t + dt * steps as f64, psi };
    let frac = out.guard_band_fraction(!model.is_radial());
    if frac > 1e-6 {
        return Err(Error::BoundaryContamination { norm: frac });
    }
    Ok(out)
}

/// Step / source-width pairs for the propagator-element extraction, chosen
/// per time horizon: short times need fine spatial resolution, long times
/// need a wide box, and the source width stays at five base steps.
fn extraction_params(t_max: f64) -> (f64, f64) {
    if t_max <= 0.15 {
        (0.004, 0.02)
    } else if t_max <= 0.75 {
        (0.005, 0.025)
    } else {
        (0.01, 0.05)
    }
}

/// Adjust the step so the potential feature radius is a whole number of
/// steps (the delta shell then sits exactly on a node).
fn snap_step(model: &PotentialModel, h: f64) -> f64 {
    let feature = model.range();
    if feature > 0.0 {
        feature / (feature / h).round().max(1.0)
    } else {
        h
    }
}

/// One propagation of the width-extrapolated Gaussian source; returns one
/// row of readings per requested time (ascending).
fn run_source(
    model: &PotentialModel,
    source: f64,
    w: f64,
    h: f64,
    l: f64,
    times: &[f64],
    read_at: &[f64],
) -> Result<Vec<Vec<Complex64>>> {
    let n = (l / h).ceil() as usize + 1;
    let gauss = |x: f64, wid: f64| (-(x - source) * (x - source) / (2.0 * wid * wid)).exp();
    // three source widths w, sqrt(2) w, 2 w, combined to cancel both the
    // w^2 and the w^4 smearing moments; the scheme is linear, so all three
    // ride in one set of initial data
    let widths = [w, std::f64::consts::SQRT_2 * w, 2.0 * w];
    let weights = [8.0 / 3.0, -2.0, 1.0 / 3.0];
    let mut psi = vec![Complex64::new(0.0, 0.0); n];
    for (&wid, &wt) in widths.iter().zip(&weights) {
        let mut col = vec![0.0; n];
        for (j, c) in col.iter_mut().enumerate() {
            *c = gauss(j as f64 * h, wid);
        }
        col[0] = 0.0;
        col[n - 1] = 0.0;
        let mass: f64 = col.iter().sum::<f64>() * h;
        for j in 0..n {
            psi[j] += wt * col[j] / mass;
        }
    }
    let mut state = GridState { x0: 0.0, h, t: 0.0, psi };

    let bound = 4.0 * h * h * 0.999999;
    let mut rows = Vec::with_capacity(times.len());
    let mut prev = 0.0;
    for &t in times {
        let seg = t - prev;
        if seg > 1e-15 {
            let steps = (seg / bound).ceil() as usize;
            let dt = seg / steps as f64;
            state = crank_nicolson_propagate(model, &state, dt, steps)?;
            state.t = t;
        }
        rows.push(read_at.iter().map(|&r| state.value_at(r)).collect());
        prev = t;
    }
    Ok(rows)
}

/// g(r, r'; t) on a grid of read points and times, extracted by evolving a
/// narrow normalized Gaussian placed at `source`.  Width and step errors
/// are both removed by Richardson extrapolation: the width triple rides in
/// the initial data, the step pair needs a second run on the halved grid.
pub fn propagator_element_table(
    model: &PotentialModel,
    read_at: &[f64],
    source: f64,
    times: &[f64],
) -> Result<Vec<Vec<Complex64>>> {
    if !model.is_radial() {
        return Err(Error::WrongModelKind { op: "propagator element extraction" });
    }
    if read_at.is_empty() || times.is_empty() {
        return Err(Error::EmptySelection);
    }
    for &t in times {
        if !(t > 0.0) {
            return Err(Error::NonPositiveTime { t });
        }
    }
    for &r in read_at {
        if r < 0.0 {
            return Err(Error::OutsideInteractionRegion { x: r });
        }
    }
    if source <= 0.0 {
        return Err(Error::OutsideInteractionRegion { x: source });
    }

    let mut order: Vec<usize> = (0..times.len()).collect();
    order.sort_by(|&a, &b| times[a].total_cmp(&times[b]));
    let sorted: Vec<f64> = order.iter().map(|&j| times[j]).collect();

    let t_max = *sorted.last().expect("nonempty");
    let (h_base, w) = extraction_params(t_max);
    let h = snap_step(model, h_base);
    let r_top = read_at.iter().cloned().fold(source, f64::max);
    // the source spectrum is exp(-k^2 w^2 / 2); components fast enough to
    // cross the box and put more than a 1e-6 norm fraction into the guard
    // band by t_max carry weight exp(-(7.5/2)^2) and below
    let l = 0.5 * (source + r_top) + 7.5 * t_max / w + model.range() + 1.0;

    let coarse = run_source(model, source, w, h, l, &sorted, read_at)?;
    let fine = run_source(model, source, w, 0.5 * h, l, &sorted, read_at)?;

    let mut out = vec![vec![Complex64::new(0.0, 0.0); read_at.len()]; times.len()];
    for (pos, &orig) in order.iter().enumerate() {
        for (ri, slot) in out[orig].iter_mut().enumerate() {
            *slot = (4.0 * fine[pos][ri] - coarse[pos][ri]) / 3.0;
        }
    }
    Ok(out)
}

/// Single propagator element from the grid oracle.  The source goes on the
/// larger of the two coordinates so its Gaussian footprint stays clear of
/// the r = 0 wall (the kernel is symmetric).
pub fn propagator_element(model: &PotentialModel, r: f64, rp: f64, t: f64) -> Result<Complex64> {
    let (lo, hi) = if r <= rp { (r, rp) } else { (rp, r) };
    Ok(propagator_element_table(model, &[lo], hi, &[t])?[0][0])
}

/// Closed-form free propagator on the half line: direct Gaussian minus its
/// image through the origin.
pub fn free_radial_propagator(r: f64, rp: f64, t: f64) -> Result<Complex64> {
    if !(t > 0.0) {
        return Err(Error::NonPositiveTime { t });
    }
    let i = Complex64::i();
    let pref = 1.0 / (4.0 * std::f64::consts::PI * i * t).sqrt();
    let direct = (i * (r - rp) * (r - rp) / (4.0 * t)).exp();
    let image = (i * (r + rp) * (r + rp) / (4.0 * t)).exp();
    Ok(pref * (direct - image))
}

/// Mean of f on a small circle times the radius: the residue of a simple
/// pole at the centre.  Nodes are offset half a slot so no sample lands on
/// an axis-aligned feature.
fn circle_residue<F: FnMut(Complex64) -> Result<Complex64>>(
    mut f: F,
    center: Complex64,
    radius: f64,
) -> Result<Complex64> {
    let n = 64;
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..n {
        let th = std::f64::consts::TAU * (j as f64 + 0.5) / n as f64;
        let e = Complex64::from_polar(1.0, th);
        acc += f(center + radius * e)? * e;
    }
    Ok(acc * radius / n as f64)
}

/// The loop formed by the real axis and the reversed path, used to decide
/// which poles a deformation swept over and with what orientation.  The
/// axis edge extends to the full modulus of the path ends so the straight
/// connectors cannot clip poles out of the swept sector.
fn sweep_polygon(path: &Contour) -> Vec<Complex64> {
    let a = path.vertices.iter().map(|v| v.norm()).fold(1.0, f64::max) + 1.0;
    let mut poly = vec![Complex64::new(-a, 0.0), Complex64::new(a, 0.0)];
    poly.extend(path.vertices.iter().rev().cloned());
    poly
}

/// Rotation radius big enough that every resolvent pole the rotated line
/// sweeps past but does not enclose has a negligible residue: pole terms
/// carry weight exp(2 Re k Im k t), which for the finite-range models
/// decays slowly in Re k, so the radius must grow as t shrinks.
pub fn rotation_radius(model: &PotentialModel, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::NonPositiveTime { t });
    }
    let base = poles::default_search_region(model);
    let mut re_max = base.re_max;
    for _ in 0..4 {
        let region = SearchRegion::new(base.re_min, re_max, base.im_min, base.im_max)?;
        let found = poles::find_poles(model, &region)?;
        let mut radius: f64 = 10.0f64.max(6.0 / t.sqrt());
        let mut heaviest_far = 0.0f64;
        for p in &found {
            if p.k.re <= 0.0 || p.k.im >= 0.0 {
                continue;
            }
            let weight = (2.0 * p.k.re * p.k.im * t).exp();
            if weight > 1e-7 {
                radius = radius.max(1.15 * p.k.norm());
            }
            if p.k.re > 0.8 * re_max {
                heaviest_far = heaviest_far.max(weight);
            }
        }
        // the strip was wide enough only if its outermost poles are
        // already negligible; otherwise look further out
        if heaviest_far <= 1e-7 {
            return Ok(radius);
        }
        re_max *= 1.5;
    }
    Err(Error::NoConvergence {
        what: "rotation radius pole horizon",
        achieved: re_max,
        requested: 0.0,
    })
}

/// Direct quadrature of the spectral representation of the propagator
/// along the given momentum path, with bound-state residues added and the
/// residues of any poles swept over by the deformation accounted for.
pub fn spectral_quadrature(
    model: &PotentialModel,
    r: f64,
    rp: f64,
    t: f64,
    path: &Contour,
) -> Result<Complex64> {
    if !(t > 0.0) {
        return Err(Error::NonPositiveTime { t });
    }
    if !model.is_radial() {
        return Err(Error::WrongModelKind { op: "spectral propagator quadrature" });
    }
    let i = Complex64::i();
    let integrand = |k: Complex64| -> Result<Complex64> {
        Ok(2.0 * k * (-i * k * k * t).exp() * green_outgoing(model, r, rp, k)?)
    };

    let pole_set = crate::expand::poles_near_path(model, path)?;
    for p in &pole_set {
        if path.distance_to(p.k) < 1e-3 {
            return Err(Error::PoleOnPath { k: p.k });
        }
    }

    let line = quad::integrate_polyline(integrand, &path.vertices, 5e-9, 40000)?;
    let mut value = i / std::f64::consts::TAU * line.value;

    let poly = sweep_polygon(path);
    let path_is_real = path.is_real();
    for p in &pole_set {
        let mut nearest_other = f64::INFINITY;
        for q in &pole_set {
            if (q.k - p.k).norm() > 1e-12 {
                nearest_other = nearest_other.min((q.k - p.k).norm());
            }
        }
        let rho = (0.45 * path.distance_to(p.k)).min(0.45 * nearest_other).min(0.2);
        if p.class == PoleClass::Bound {
            // bound states are explicit terms in every representation
            value += circle_residue(integrand, p.k, rho)?;
            continue;
        }
        if path_is_real {
            continue;
        }
        let edge_guard = poly
            .iter()
            .zip(poly.iter().cycle().skip(1))
            .map(|(&a, &b)| segment_distance(a, b, p.k))
            .fold(f64::INFINITY, f64::min);
        if edge_guard < 1e-6 * (1.0 + p.k.norm()) {
            return Err(Error::PoleOnPath { k: p.k });
        }
        let wind = winding_number(&poly, p.k);
        if wind != 0 {
            value -= wind as f64 * circle_residue(integrand, p.k, rho)?;
        }
    }
    Ok(value)
}
