//! Pole expansions of the resolvent and of the time-dependent propagator
//! over deformed momentum contours, plus the truncated complex effective
//! Hamiltonian built from a pole selection.

use num_complex::Complex64;

use crate::cerf::{m_function, MArgument};
use crate::error::{Error, Result};
use crate::gamow::{ensure_paired, normalize_gamow, solve_gamow, GamowState, RadialGrid};
use crate::model::{green_outgoing, jost_solution, regular_solution, smatrix, wronskian, PotentialModel};
use crate::poles::{self, PoleClass, PoleRecord, SearchRegion};
use crate::quad::{adaptive_gk, integrate_polyline};

/// Which catalogued deformation a contour represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContourLabel {
    GammaB,
    GammaM,
    C0,
    CL,
    RealAxis,
    Custom,
}

/// Piecewise-linear path in the complex momentum plane.
///
/// Open contours are polylines; `closed` adds the straight edge from the
/// last vertex back to the first.
#[derive(Debug, Clone)]
pub struct Contour {
    pub vertices: Vec<Complex64>,
    pub closed: bool,
    pub label: ContourLabel,
}

impl Contour {
    pub fn new(vertices: Vec<Complex64>, closed: bool, label: ContourLabel) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::EmptySelection);
        }
        for v in &vertices {
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::NonFiniteParameter { name: "contour vertex" });
            }
        }
        for w in vertices.windows(2) {
            if (w[1] - w[0]).norm() == 0.0 {
                return Err(Error::NonPositiveRange { name: "contour segment length", value: 0.0 });
            }
        }
        if closed && (vertices[vertices.len() - 1] - vertices[0]).norm() == 0.0 {
            return Err(Error::NonPositiveRange { name: "contour closing edge", value: 0.0 });
        }
        Ok(Contour { vertices, closed, label })
    }

    /// Segment of the real axis from k_lo to k_hi.
    pub fn real_axis(k_lo: f64, k_hi: f64) -> Result<Self> {
        Contour::new(
            vec![Complex64::new(k_lo, 0.0), Complex64::new(k_hi, 0.0)],
            false,
            ContourLabel::RealAxis,
        )
    }

    /// Full real line truncated at |k| = k_max.  The origin is kept as a
    /// vertex: quadrature nodes then stay strictly off k = 0, where the
    /// spectral integrand has a removable 0 * resolvent form.
    pub fn c_0(k_max: f64) -> Result<Self> {
        if !(k_max > 0.0) {
            return Err(Error::NonPositiveRange { name: "contour radius", value: k_max });
        }
        Contour::new(
            vec![
                Complex64::new(-k_max, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(k_max, 0.0),
            ],
            false,
            ContourLabel::C0,
        )
    }

    /// Straight line through the origin rotated -45 degrees off the real
    /// axis, truncated at |k| = radius.  The origin is kept as a vertex so
    /// the quadrature splits there.
    pub fn c_l(radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::NonPositiveRange { name: "contour radius", value: radius });
        }
        let e = Complex64::from_polar(radius, -std::f64::consts::FRAC_PI_4);
        Contour::new(vec![-e, Complex64::new(0.0, 0.0), e], false, ContourLabel::CL)
    }

    fn dip(
        apex_re: f64,
        depth: f64,
        re_back: f64,
        k_max: f64,
        label: ContourLabel,
    ) -> Result<Self> {
        if !(depth > 0.0) {
            return Err(Error::NonPositiveRange { name: "contour dip depth", value: depth });
        }
        if !(0.0 < apex_re && apex_re < re_back && re_back < k_max) {
            return Err(Error::NonPositiveRange {
                name: "contour dip ordering",
                value: re_back - apex_re,
            });
        }
        Contour::new(
            vec![
                Complex64::new(0.0, 0.0),
                Complex64::new(apex_re, -depth),
                Complex64::new(re_back, 0.0),
                Complex64::new(k_max, 0.0),
            ],
            false,
            label,
        )
    }

    /// Positive half axis deformed into the fourth quadrant: down to
    /// (apex_re, -depth), back to the axis at re_back, then straight out to
    /// k_max.  Encloses the resonances inside the triangular dip.
    pub fn gamma_b(apex_re: f64, depth: f64, re_back: f64, k_max: f64) -> Result<Self> {
        Contour::dip(apex_re, depth, re_back, k_max, ContourLabel::GammaB)
    }

    /// Same shape as gamma_b, conventionally taken deeper so that more
    /// resonances sit between the contour and the real axis.
    pub fn gamma_m(apex_re: f64, depth: f64, re_back: f64, k_max: f64) -> Result<Self> {
        Contour::dip(apex_re, depth, re_back, k_max, ContourLabel::GammaM)
    }

    pub fn custom(vertices: Vec<Complex64>, closed: bool) -> Result<Self> {
        Contour::new(vertices, closed, ContourLabel::Custom)
    }

    /// Edges as (start, end) pairs, including the closing edge when closed.
    pub fn edges(&self) -> Vec<(Complex64, Complex64)> {
        let mut out: Vec<(Complex64, Complex64)> =
            self.vertices.windows(2).map(|w| (w[0], w[1])).collect();
        if self.closed {
            out.push((self.vertices[self.vertices.len() - 1], self.vertices[0]));
        }
        out
    }

    pub fn length(&self) -> f64 {
        self.edges().iter().map(|(a, b)| (b - a).norm()).sum()
    }

    /// Shortest distance from z to the contour.
    pub fn distance_to(&self, z: Complex64) -> f64 {
        self.edges()
            .iter()
            .map(|&(a, b)| segment_distance(a, b, z))
            .fold(f64::INFINITY, f64::min)
    }

    /// Winding number around z of this contour closed by a straight edge
    /// from the last vertex back to the first.  For the dip contours that
    /// closing edge runs along the real axis, so the result counts the
    /// poles sitting between the contour and the axis.
    pub fn winding(&self, z: Complex64) -> i32 {
        winding_number(&self.vertices, z)
    }

    /// True when every vertex sits on the real axis.
    pub fn is_real(&self) -> bool {
        self.vertices.iter().all(|v| v.im.abs() < 1e-12)
    }

    /// Point on the contour nearest to z.
    pub fn closest_point(&self, z: Complex64) -> Complex64 {
        let mut best = self.vertices[0];
        let mut best_d = f64::INFINITY;
        for (a, b) in self.edges() {
            let p = segment_closest(a, b, z);
            let d = (z - p).norm();
            if d < best_d {
                best_d = d;
                best = p;
            }
        }
        best
    }
}

fn segment_closest(a: Complex64, b: Complex64, z: Complex64) -> Complex64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return a;
    }
    let s = (((z - a).re * d.re + (z - a).im * d.im) / len2).clamp(0.0, 1.0);
    a + s * d
}

pub(crate) fn segment_distance(a: Complex64, b: Complex64, z: Complex64) -> f64 {
    (z - segment_closest(a, b, z)).norm()
}

/// Winding number of the implicitly closed polygon around z, by summing
/// turn angles.  Callers must keep z off the edges.
pub fn winding_number(polygon: &[Complex64], z: Complex64) -> i32 {
    let n = polygon.len();
    let mut total = 0.0;
    for j in 0..n {
        let a = polygon[j] - z;
        let b = polygon[(j + 1) % n] - z;
        if a.norm() == 0.0 || b.norm() == 0.0 {
            return 0;
        }
        total += (b / a).arg();
    }
    (total / std::f64::consts::TAU).round() as i32
}

/// Time-dependent propagator value split into its bookkeeping parts.
/// The `total` is always formed by summing the parts, so the identity
/// total = sum(bound) + sum(poles) + background holds by construction.
#[derive(Debug, Clone)]
pub struct PropagatorBreakdown {
    pub total: Complex64,
    pub bound_terms: Vec<(PoleRecord, Complex64)>,
    pub pole_terms: Vec<(PoleRecord, Complex64)>,
    pub background: Complex64,
    pub t: f64,
    pub r: f64,
    pub r_prime: f64,
    /// magnitude of the last included pair, a Cauchy-style tail estimate
    pub truncation_estimate: f64,
}

impl PropagatorBreakdown {
    /// Residual of the bookkeeping identity; exactly 0.0 for values built
    /// by this module, exposed so tests can assert that.
    pub fn bookkeeping_residual(&self) -> f64 {
        let mut s = self.background;
        for (_, v) in &self.bound_terms {
            s += v;
        }
        for (_, v) in &self.pole_terms {
            s += v;
        }
        (self.total - s).norm()
    }
}

/// Truncated model Hamiltonian over a pole selection: diagonal, with the
/// complex resonance energies on the diagonal.
#[derive(Debug, Clone)]
pub struct EffectiveHamiltonian {
    pub poles: Vec<PoleRecord>,
    pub matrix: Vec<Vec<Complex64>>,
}

pub fn effective_hamiltonian(selection: &[PoleRecord]) -> Result<EffectiveHamiltonian> {
    if selection.is_empty() {
        return Err(Error::EmptySelection);
    }
    let n = selection.len();
    let mut matrix = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for (j, p) in selection.iter().enumerate() {
        matrix[j][j] = p.k * p.k;
    }
    Ok(EffectiveHamiltonian { poles: selection.to_vec(), matrix })
}

/// All resolvent poles a path could interact with.  For deformed paths the
/// search strip is widened to the full path modulus, since the swept
/// sector reaches that far; real-axis paths only ever see the poles of the
/// default strip, which hugs the axis closer than any pole does.  The
/// strip depth covers every zero out to these radii because resonance
/// depth grows only logarithmically with Re k for the finite-range models.
pub(crate) fn poles_near_path(model: &PotentialModel, path: &Contour) -> Result<Vec<PoleRecord>> {
    let base = poles::default_search_region(model);
    if path.is_real() {
        return poles::find_poles(model, &base);
    }
    let mut re_min = base.re_min;
    let mut re_max = base.re_max;
    for v in &path.vertices {
        re_min = re_min.min(v.re - 0.6);
        re_max = re_max.max(v.norm() + 0.6);
    }
    let region = SearchRegion::new(re_min, re_max, base.im_min, base.im_max)?;
    poles::find_poles(model, &region)
}

/// Real-valued function with declared compact support, the "well-behaved"
/// probe the completeness sandwiches are tested against.
pub struct TestFunction<'a> {
    pub support: (f64, f64),
    f: Box<dyn Fn(f64) -> f64 + 'a>,
}

impl<'a> TestFunction<'a> {
    pub fn new(lo: f64, hi: f64, f: impl Fn(f64) -> f64 + 'a) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() || !(hi > lo) {
            return Err(Error::NonPositiveRange { name: "test function support", value: hi - lo });
        }
        Ok(TestFunction { support: (lo, hi), f: Box::new(f) })
    }

    /// Smooth bump exp(-1/(1-s^2)) on (lo, hi), zero outside.  Infinitely
    /// differentiable, so its momentum transform decays faster than any
    /// power and truncated contour integrals converge quickly.
    pub fn bump(lo: f64, hi: f64) -> Result<Self> {
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        Self::new(lo, hi, move |r| {
            let s = (r - mid) / half;
            if s.abs() < 1.0 {
                (-1.0 / (1.0 - s * s)).exp()
            } else {
                0.0
            }
        })
    }

    pub fn eval(&self, r: f64) -> f64 {
        if r <= self.support.0 || r >= self.support.1 {
            0.0
        } else {
            (self.f)(r)
        }
    }
}

/// The two integrand families used on momentum contours.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntegrandKind {
    /// (2/pi) k^2 phi(r,k) phi(r',k) / (W(k) W(-k)): the on-shell
    /// completeness kernel; time independent.
    Completeness,
    /// 2k e^{-i k^2 t} G+(r,r';k): the spectral kernel whose real-line
    /// integral gives the continuum part of the propagator.
    Propagator,
}

fn completeness_kernel(
    model: &PotentialModel,
    r: f64,
    rp: f64,
    k: Complex64,
) -> Result<Complex64> {
    let phi = regular_solution(model, r, k)? * regular_solution(model, rp, k)?;
    let w = wronskian(model, k)? * wronskian(model, -k)?;
    Ok(phi * k * k * (2.0 / std::f64::consts::PI) / w)
}

fn propagator_kernel(
    model: &PotentialModel,
    r: f64,
    rp: f64,
    t: f64,
    k: Complex64,
) -> Result<Complex64> {
    let phase = (-Complex64::i() * k * k * t).exp();
    Ok(green_outgoing(model, r, rp, k)? * phase * 2.0 * k)
}

/// Places where the chosen kernel blows up, given one found dispersion
/// zero: the resolvent inherits the zero and its third-quadrant mirror;
/// the completeness kernel adds their images under k -> -k.
fn kernel_pole_images(kind: IntegrandKind, k: Complex64) -> Vec<Complex64> {
    match kind {
        IntegrandKind::Propagator => vec![k, -k.conj()],
        IntegrandKind::Completeness => vec![k, -k.conj(), -k, k.conj()],
    }
}

fn check_pole_clearance(
    model: &PotentialModel,
    contour: &Contour,
    kind: IntegrandKind,
) -> Result<Vec<PoleRecord>> {
    let found = poles_near_path(model, contour)?;
    for p in &found {
        for z in kernel_pole_images(kind, p.k) {
            if contour.distance_to(z) < 1e-3 {
                return Err(Error::PoleTooClose { a: z, b: contour.closest_point(z) });
            }
        }
    }
    Ok(found)
}

fn polyline_of(contour: &Contour) -> Vec<Complex64> {
    let mut verts = contour.vertices.clone();
    if contour.closed {
        verts.push(contour.vertices[0]);
    }
    verts
}

/// Raw integral of the chosen kernel along the contour (no 1/2-pi-i
/// prefactor), with the quadrature error estimate.  `t` only enters the
/// propagator kernel.
pub fn contour_integral(
    model: &PotentialModel,
    kind: IntegrandKind,
    contour: &Contour,
    r: f64,
    rp: f64,
    t: f64,
) -> Result<(Complex64, f64)> {
    if !model.is_radial() {
        return Err(Error::WrongModelKind { op: "contour_integral" });
    }
    if kind == IntegrandKind::Propagator && !(t > 0.0) {
        return Err(Error::NonPositiveTime { t });
    }
    check_pole_clearance(model, contour, kind)?;
    let verts = polyline_of(contour);
    let mut f = |k: Complex64| match kind {
        IntegrandKind::Completeness => completeness_kernel(model, r, rp, k),
        IntegrandKind::Propagator => propagator_kernel(model, r, rp, t, k),
    };
    let q = integrate_polyline(&mut f, &verts, 1e-10, 40_000)?;
    Ok((q.value, q.error))
}

fn weighted_overlap(grid: &RadialGrid, f: &[f64], u: &[Complex64]) -> Complex64 {
    grid.weights
        .iter()
        .zip(f.iter().zip(u.iter()))
        .map(|(w, (a, b))| w * a * b)
        .sum()
}

fn check_support(tf: &TestFunction, r_cut: f64) -> Result<()> {
    let (lo, hi) = tf.support;
    if lo < 0.0 || hi > r_cut {
        return Err(Error::UnsupportedTestFunction { lo, hi });
    }
    Ok(())
}

/// Completeness sandwich between two compactly supported functions: the
/// discrete terms (bound states always; resonances weighted by how often
/// the contour winds around them) plus the contour integral of the
/// completeness kernel.  Returns (reconstructed, direct overlap).
pub fn berggren_identity(
    model: &PotentialModel,
    f: &TestFunction,
    g: &TestFunction,
    contour: &Contour,
) -> Result<(Complex64, Complex64)> {
    if !model.is_radial() {
        return Err(Error::WrongModelKind { op: "berggren_identity" });
    }
    check_support(f, model.range())?;
    check_support(g, model.range())?;
    let found = check_pole_clearance(model, contour, IntegrandKind::Completeness)?;

    let k_top = contour.vertices.iter().map(|v| v.norm()).fold(1.0, f64::max);
    let grid = RadialGrid::for_model(model, k_top)?;
    let f_s: Vec<f64> = grid.nodes.iter().map(|&r| f.eval(r)).collect();
    let g_s: Vec<f64> = grid.nodes.iter().map(|&r| g.eval(r)).collect();

    let mut reconstructed = Complex64::new(0.0, 0.0);
    for p in &found {
        // the kernel changes sign under k -> -k, so a pole of W(-k) at -z
        // contributes the residue at z with the opposite orientation
        let weight_of = |z: Complex64| (contour.winding(z) - contour.winding(-z)) as f64;
        let on_axis = p.k.re.abs() <= 1e-12 * p.k.norm().max(1.0);
        let bound_weight = if p.class == PoleClass::Bound { 1.0 } else { 0.0 };
        let images = if on_axis { vec![p.k] } else { vec![p.k, -p.k.conj()] };
        for (idx, &z) in images.iter().enumerate() {
            let w = weight_of(z) + if idx == 0 { bound_weight } else { 0.0 };
            if w == 0.0 {
                continue;
            }
            let state = normalize_gamow(solve_gamow(model, p, &grid)?)?;
            let state = if idx == 0 { state } else { state.conjugate_partner()? };
            let cf = weighted_overlap(&grid, &f_s, &state.u);
            let cg = weighted_overlap(&grid, &g_s, &state.u);
            reconstructed += w * cf * cg;
        }
    }

    let mut phi = vec![Complex64::new(0.0, 0.0); grid.nodes.len()];
    let mut sandwich = |k: Complex64| -> Result<Complex64> {
        for (j, &rj) in grid.nodes.iter().enumerate() {
            phi[j] = regular_solution(model, rj, k)?;
        }
        let tf = weighted_overlap(&grid, &f_s, &phi);
        let tg = weighted_overlap(&grid, &g_s, &phi);
        let w = wronskian(model, k)? * wronskian(model, -k)?;
        Ok(tf * tg * k * k * (2.0 / std::f64::consts::PI) / w)
    };
    let q = integrate_polyline(&mut sandwich, &polyline_of(contour), 1e-9, 40_000)?;
    reconstructed += q.value;

    let lo = f.support.0.max(g.support.0);
    let hi = f.support.1.min(g.support.1);
    let exact = if hi > lo {
        adaptive_gk(
            &mut |r: f64| Ok(Complex64::new(f.eval(r) * g.eval(r), 0.0)),
            lo,
            hi,
            1e-12,
            4000,
        )?
        .value
    } else {
        Complex64::new(0.0, 0.0)
    };
    Ok((reconstructed, exact))
}

/// Largest magnitude, along the fourth-quadrant arc |k| = arc_radius, of
/// the incoming-wave piece of the deformed completeness kernel sandwiched
/// between f and g: |S(-k) (f, f_-k)(f_-k, g)| / 2pi, where f_-k is the
/// incoming Jost solution.  Splitting the scattering kernel through the
/// S-matrix leaves this term, and its transforms of compactly supported
/// probes grow like e^{2|Im k| r} as the arc deepens.  That growth is why
/// the S-matrix-weighted background expansion has no time-independent
/// meaning and the time-dependent forms need the e^{-i k^2 t} regulator
/// before the arc can be dropped.
pub fn background_divergence_probe(
    model: &PotentialModel,
    f: &TestFunction,
    g: &TestFunction,
    arc_radius: f64,
) -> Result<f64> {
    if !model.is_radial() {
        return Err(Error::WrongModelKind { op: "background_divergence_probe" });
    }
    if !(arc_radius > 0.0) {
        return Err(Error::NonPositiveRange { name: "arc radius", value: arc_radius });
    }
    check_support(f, model.range())?;
    check_support(g, model.range())?;
    // S(-k) has its poles at mirror images of the S-matrix poles, none of
    // which reach the fourth quadrant, and the Jost transforms are entire,
    // so the arc needs no proximity guard.
    let grid = RadialGrid::for_model(model, arc_radius)?;
    let f_s: Vec<f64> = grid.nodes.iter().map(|&r| f.eval(r)).collect();
    let g_s: Vec<f64> = grid.nodes.iter().map(|&r| g.eval(r)).collect();
    let mut incoming = vec![Complex64::new(0.0, 0.0); grid.nodes.len()];
    let mut max = 0.0_f64;
    let n = 96;
    for j in 0..n {
        let theta = 0.05 + (std::f64::consts::FRAC_PI_2 - 0.07) * j as f64 / (n - 1) as f64;
        let k = Complex64::from_polar(arc_radius, -theta);
        for (jj, &rj) in grid.nodes.iter().enumerate() {
            incoming[jj] = jost_solution(model, rj, -k)?;
        }
        let tf = weighted_overlap(&grid, &f_s, &incoming);
        let tg = weighted_overlap(&grid, &g_s, &incoming);
        let v = (smatrix(model, -k)? * tf * tg).norm() / std::f64::consts::TAU;
        max = max.max(v);
    }
    Ok(max)
}

fn check_interior(range: f64, x: f64) -> Result<()> {
    if !(x >= 0.0) || x >= range {
        return Err(Error::OutsideInteractionRegion { x });
    }
    Ok(())
}

fn grouped_total(
    bound_terms: &[(PoleRecord, Complex64)],
    pole_terms: &[(PoleRecord, Complex64)],
    background: Complex64,
) -> Complex64 {
    let mut s = background;
    for (_, v) in bound_terms {
        s += v;
    }
    for (_, v) in pole_terms {
        s += v;
    }
    s
}

/// Magnitude of the outermost mirror pair's compact-form contribution (or
/// of the outermost single term when no off-axis pair is present).
fn last_pair_estimate(states: &[GamowState], r: f64, rp: f64, t: f64) -> Result<f64> {
    let rep = states
        .iter()
        .filter(|s| s.k().re > 0.0)
        .max_by(|a, b| a.k().re.total_cmp(&b.k().re));
    match rep {
        Some(s) => {
            let mirror_k = -s.k().conj();
            let mut pair = s.eval(r) * s.eval(rp) * m_function(s.k(), t)?;
            if let Some(m) = states
                .iter()
                .find(|q| (q.k() - mirror_k).norm() < 1e-8 * (1.0 + mirror_k.norm()))
            {
                pair += m.eval(r) * m.eval(rp) * m_function(m.k(), t)?;
            }
            Ok(pair.norm())
        }
        None => {
            let s = states
                .iter()
                .max_by(|a, b| a.k().norm().total_cmp(&b.k().norm()))
                .ok_or(Error::EmptySelection)?;
            Ok((s.eval(r) * s.eval(rp) * m_function(s.k(), t)?).norm())
        }
    }
}

/// Symmetric pole-sum propagator: every state contributes u(r)u(r')M(k,t).
/// Valid strictly inside the interaction region; there is no separate
/// background in this representation, so that field is zero and the
/// truncation estimate carries the convergence information instead.
pub fn propagator_full(
    states: &[GamowState],
    r: f64,
    rp: f64,
    t: f64,
) -> Result<PropagatorBreakdown> {
    if states.is_empty() {
        return Err(Error::EmptySelection);
    }
    if !(t > 0.0) {
        return Err(Error::NonPositiveTime { t });
    }
    let range = states[0].model().range();
    check_interior(range, r)?;
    check_interior(range, rp)?;
    ensure_paired(states)?;
    let mut bound_terms = Vec::new();
    let mut pole_terms = Vec::new();
    for s in states {
        let term = s.eval(r) * s.eval(rp) * m_function(s.k(), t)?;
        if s.pole.class == PoleClass::Bound {
            bound_terms.push((s.pole, term));
        } else {
            pole_terms.push((s.pole, term));
        }
    }
    let background = Complex64::new(0.0, 0.0);
    let total = grouped_total(&bound_terms, &pole_terms, background);
    let truncation_estimate = last_pair_estimate(states, r, rp, t)?;
    Ok(PropagatorBreakdown {
        total,
        bound_terms,
        pole_terms,
        background,
        t,
        r,
        r_prime: rp,
        truncation_estimate,
    })
}

/// Window of time-factor arguments for which the compact form splits into
/// a pure exponential plus a decaying remainder.
fn on_exponential_path(arg: &MArgument) -> bool {
    let a = arg.y_n.arg();
    a > std::f64::consts::FRAC_PI_2 || a < -std::f64::consts::FRAC_PI_2
}

/// The same sum as propagator_full, rearranged so the decaying exponential
/// of every right-half-plane and bound member is explicit.  Those members
/// land in bound_terms/pole_terms as bare exponentials, their remainders
/// are pooled in `background`, and mirror members keep the compact form.
/// The rearrangement is exact, so the total matches propagator_full to
/// rounding.
pub fn propagator_proper_form(
    states: &[GamowState],
    r: f64,
    rp: f64,
    t: f64,
) -> Result<PropagatorBreakdown> {
    if states.is_empty() {
        return Err(Error::EmptySelection);
    }
    if !(t > 0.0) {
        return Err(Error::NonPositiveTime { t });
    }
    let range = states[0].model().range();
    check_interior(range, r)?;
    check_interior(range, rp)?;
    ensure_paired(states)?;
    let mut bound_terms = Vec::new();
    let mut pole_terms = Vec::new();
    let mut background = Complex64::new(0.0, 0.0);
    for s in states {
        let k = s.k();
        let uu = s.eval(r) * s.eval(rp);
        if k.re < 0.0 {
            pole_terms.push((s.pole, uu * m_function(k, t)?));
            continue;
        }
        let arg = MArgument::new(k, t)?;
        if !on_exponential_path(&arg) {
            return Err(Error::ImproperPoleInExponentialPath { k });
        }
        let exponential = uu * (-Complex64::i() * k * k * t).exp();
        background -= uu * m_function(-k, t)?;
        if s.pole.class == PoleClass::Bound {
            bound_terms.push((s.pole, exponential));
        } else {
            pole_terms.push((s.pole, exponential));
        }
    }
    let total = grouped_total(&bound_terms, &pole_terms, background);
    let truncation_estimate = last_pair_estimate(states, r, rp, t)?;
    Ok(PropagatorBreakdown {
        total,
        bound_terms,
        pole_terms,
        background,
        t,
        r,
        r_prime: rp,
        truncation_estimate,
    })
}

/// Propagator as decaying exponentials of the proper poles plus the
/// integral along the -45 degree rotated line: the only representation
/// valid outside the interaction region as well.  Bound and proper states
/// are taken from `states`; the rotation never crosses the others, so they
/// are skipped.  The line is truncated at max(10, 6/sqrt(t)) and extended
/// (at most twice) until the outermost arm contributions are negligible.
pub fn propagator_proper_plus_background(
    model: &PotentialModel,
    states: &[GamowState],
    r: f64,
    rp: f64,
    t: f64,
) -> Result<PropagatorBreakdown> {
    if !model.is_radial() {
        return Err(Error::WrongModelKind { op: "propagator_proper_plus_background" });
    }
    if !(t > 0.0) {
        return Err(Error::NonPositiveTime { t });
    }
    for &x in &[r, rp] {
        if !(x >= 0.0) {
            return Err(Error::OutsideInteractionRegion { x });
        }
    }
    ensure_paired(states)?;
    let mut bound_terms = Vec::new();
    let mut pole_terms = Vec::new();
    for s in states {
        let k = s.k();
        let term = s.eval(r) * s.eval(rp) * (-Complex64::i() * k * k * t).exp();
        if s.pole.class == PoleClass::Bound {
            bound_terms.push((s.pole, term));
        } else if s.pole.proper && k.re > 0.0 {
            pole_terms.push((s.pole, term));
        }
    }

    let radius = 10.0_f64.max(6.0 / t.sqrt());
    let line = Contour::c_l(radius)?;
    check_pole_clearance(model, &line, IntegrandKind::Propagator)?;
    let mut f = |k: Complex64| propagator_kernel(model, r, rp, t, k);
    let mut raw = integrate_polyline(&mut f, &polyline_of(&line), 1e-10, 40_000)?.value;
    let scale = Complex64::i() / std::f64::consts::TAU;
    let tail_tol = 1e-8;
    let mut tail = f64::INFINITY;
    let mut inner = radius;
    for _ in 0..2 {
        let outer = 1.5 * inner;
        let e = Complex64::from_polar(1.0, -std::f64::consts::FRAC_PI_4);
        let start = integrate_polyline(&mut f, &[-outer * e, -inner * e], 1e-10, 40_000)?.value;
        let end = integrate_polyline(&mut f, &[inner * e, outer * e], 1e-10, 40_000)?.value;
        raw += start + end;
        tail = ((start + end) * scale).norm();
        if tail <= tail_tol {
            break;
        }
        inner = outer;
    }
    if tail > tail_tol {
        return Err(Error::NoConvergence {
            what: "background contour radius",
            achieved: tail,
            requested: tail_tol,
        });
    }

    let background = raw * scale;
    let total = grouped_total(&bound_terms, &pole_terms, background);
    let smallest_exp = pole_terms
        .iter()
        .map(|(_, v)| v.norm())
        .fold(0.0_f64, |acc, v| if acc == 0.0 { v } else { acc.min(v) });
    Ok(PropagatorBreakdown {
        total,
        bound_terms,
        pole_terms,
        background,
        t,
        r,
        r_prime: rp,
        truncation_estimate: tail + smallest_exp,
    })
}

/// Overlap of the evolved state with itself, Sum (integral psi u_n)^2
/// M(k_n, t), for a real normalized probe supported inside the
/// interaction region.
pub fn survival_amplitude(
    states: &[GamowState],
    psi: &TestFunction,
    t: f64,
) -> Result<Complex64> {
    if states.is_empty() {
        return Err(Error::EmptySelection);
    }
    if !(t > 0.0) {
        return Err(Error::NonPositiveTime { t });
    }
    check_support(psi, states[0].model().range())?;
    ensure_paired(states)?;
    let mut acc = Complex64::new(0.0, 0.0);
    for s in states {
        let c = s.grid.dot_fn(&s.u, |r| psi.eval(r));
        acc += c * c * m_function(s.k(), t)?;
    }
    Ok(acc)
}
