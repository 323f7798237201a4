//! Pole location in the complex wave-number plane by the argument
//! principle: count dispersion-function zeros inside a rectangle from the
//! boundary phase winding, subdivide until each cell holds one zero, then
//! polish with Newton using the closed-form derivative.

use crate::error::{Error, Result};
use crate::model::{dispersion, dispersion_derivative, PotentialModel};
use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchRegion {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl SearchRegion {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self> {
        for (name, v) in [("re_min", re_min), ("re_max", re_max), ("im_min", im_min), ("im_max", im_max)]
        {
            if !v.is_finite() {
                return Err(Error::NonFiniteParameter { name });
            }
        }
        if re_max <= re_min || im_max <= im_min {
            return Err(Error::NonPositiveRange { name: "search region extent", value: 0.0 });
        }
        Ok(SearchRegion { re_min, re_max, im_min, im_max })
    }

    pub fn center(&self) -> Complex64 {
        Complex64::new(0.5 * (self.re_min + self.re_max), 0.5 * (self.im_min + self.im_max))
    }

    pub fn diagonal(&self) -> f64 {
        ((self.re_max - self.re_min).powi(2) + (self.im_max - self.im_min).powi(2)).sqrt()
    }

    pub fn contains(&self, k: Complex64) -> bool {
        k.re >= self.re_min && k.re <= self.re_max && k.im >= self.im_min && k.im <= self.im_max
    }

    fn corners(&self) -> [Complex64; 4] {
        [
            Complex64::new(self.re_min, self.im_min),
            Complex64::new(self.re_max, self.im_min),
            Complex64::new(self.re_max, self.im_max),
            Complex64::new(self.re_min, self.im_max),
        ]
    }

    /// Split into four rectangles at the interior point given by the
    /// fractions (fx, fy) of the width and height.
    fn split(&self, fx: f64, fy: f64) -> [SearchRegion; 4] {
        let xm = self.re_min + fx * (self.re_max - self.re_min);
        let ym = self.im_min + fy * (self.im_max - self.im_min);
        [
            SearchRegion { re_min: self.re_min, re_max: xm, im_min: self.im_min, im_max: ym },
            SearchRegion { re_min: xm, re_max: self.re_max, im_min: self.im_min, im_max: ym },
            SearchRegion { re_min: self.re_min, re_max: xm, im_min: ym, im_max: self.im_max },
            SearchRegion { re_min: xm, re_max: self.re_max, im_min: ym, im_max: self.im_max },
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoleClass {
    /// Positive imaginary axis, E < 0 normalizable state.
    Bound,
    /// Negative imaginary axis.
    Virtual,
    /// Fourth quadrant (Re k > 0, Im k < 0).
    Resonance,
    /// Third quadrant mirror partner.
    AntiResonance,
}

#[derive(Debug, Clone, Copy)]
pub struct PoleRecord {
    pub k: Complex64,
    pub class: PoleClass,
    /// Re k > |Im k|: the pole whose exponential time factor is not yet
    /// swamped by its own Gaussian correction on the relevant sector.
    pub proper: bool,
    /// dD/dk at the pole (closed form), needed for residue work.
    pub d_dk: Complex64,
    /// |D(k)| after refinement, normalized by the local scale |k dD/dk| so
    /// the measure stays meaningful where the dispersion function is large.
    pub refinement_residual: f64,
}

/// Relative tolerance deciding that a pole sits on one of the axes.
const AXIS_TOL: f64 = 1e-12;

/// Classify a pole position by quadrant/axis. Positions within the axis
/// tolerance of the origin (or off-axis in the upper half-plane, which a
/// real finite-range potential cannot produce) cannot be classified.
pub fn classify_pole(k: Complex64) -> Result<(PoleClass, bool)> {
    let scale = k.norm().max(1.0);
    let on_im_axis = k.re.abs() <= AXIS_TOL * scale;
    let on_re_axis = k.im.abs() <= AXIS_TOL * scale;
    if on_im_axis && on_re_axis {
        return Err(Error::AmbiguousOnAxis { k });
    }
    let class = if on_im_axis {
        if k.im > 0.0 {
            PoleClass::Bound
        } else {
            PoleClass::Virtual
        }
    } else if on_re_axis || k.im > 0.0 {
        return Err(Error::AmbiguousOnAxis { k });
    } else if k.re > 0.0 {
        PoleClass::Resonance
    } else {
        PoleClass::AntiResonance
    };
    let proper = k.re > k.im.abs();
    Ok((class, proper))
}

/// Phase increment of D along the segment [z0, z1], bisecting until each
/// piece turns by at most pi/2.
fn phase_walk(
    model: &PotentialModel,
    z0: Complex64,
    d0: Complex64,
    z1: Complex64,
    d1: Complex64,
    scale_len: f64,
    depth: u32,
) -> Result<f64> {
    let delta = (d1 / d0).arg();
    if delta.abs() <= std::f64::consts::FRAC_PI_2 && depth > 0 {
        return Ok(delta);
    }
    if depth > 48 {
        // the phase refuses to settle: a zero is (numerically) on the path
        return Err(Error::ZeroOnBoundary { k: 0.5 * (z0 + z1) });
    }
    let zm = 0.5 * (z0 + z1);
    let dm = dispersion(model, zm);
    if dm.norm() < 1e-11 * boundary_scale(model, zm) || !dm.is_finite() {
        return Err(Error::ZeroOnBoundary { k: zm });
    }
    Ok(phase_walk(model, z0, d0, zm, dm, scale_len, depth + 1)?
        + phase_walk(model, zm, dm, z1, d1, scale_len, depth + 1)?)
}

fn boundary_scale(model: &PotentialModel, k: Complex64) -> f64 {
    // typical magnitude of the dominant dispersion term, for deciding that
    // a boundary sample is "on" a zero
    match model {
        PotentialModel::RadialDeltaShell { lambda, a } => {
            (2.0 * k.norm()).max(lambda.abs() * ((2.0 * a * k.im.abs()).exp()).max(1.0))
        }
        _ => dispersion_derivative(model, k).norm().max(1.0) * k.norm().max(1.0) * 1e-2 + 1.0,
    }
}

/// Number of dispersion-function zeros strictly inside the region, from
/// the boundary winding number. A zero on the boundary triggers one retry
/// with the rectangle inflated outward by a relative 1e-6, so that the
/// offending zero is counted as interior; if that fails too, the error is
/// surfaced.
pub fn count_zeros(model: &PotentialModel, region: &SearchRegion) -> Result<usize> {
    match count_zeros_strict(model, region) {
        Err(Error::ZeroOnBoundary { k }) => {
            let pad = 1e-6 * (1.0 + k.norm());
            let inflated = SearchRegion {
                re_min: region.re_min - pad,
                re_max: region.re_max + pad,
                im_min: region.im_min - pad,
                im_max: region.im_max + pad,
            };
            count_zeros_strict(model, &inflated)
        }
        other => other,
    }
}

fn count_zeros_strict(model: &PotentialModel, region: &SearchRegion) -> Result<usize> {
    let corners = region.corners();
    // initial sampling dense enough that the phase cannot alias between
    // samples: the fastest phase rotation rate is ~2 range
    let rate = 2.0 * model.range().max(0.05);
    let mut total = 0.0;
    for i in 0..4 {
        let z0 = corners[i];
        let z1 = corners[(i + 1) % 4];
        let len = (z1 - z0).norm();
        let n0 = 8 + (len * rate / 1.2).ceil() as usize;
        let mut prev_z = z0;
        let mut prev_d = dispersion(model, prev_z);
        if prev_d.norm() < 1e-11 * boundary_scale(model, prev_z) {
            return Err(Error::ZeroOnBoundary { k: prev_z });
        }
        for j in 1..=n0 {
            let z = z0 + (z1 - z0) * (j as f64 / n0 as f64);
            let d = dispersion(model, z);
            if d.norm() < 1e-11 * boundary_scale(model, z) || !d.is_finite() {
                return Err(Error::ZeroOnBoundary { k: z });
            }
            total += phase_walk(model, prev_z, prev_d, z, d, len, 0)?;
            prev_z = z;
            prev_d = d;
        }
    }
    let winding = total / (2.0 * std::f64::consts::PI);
    let n = winding.round();
    if (winding - n).abs() > 0.25 || n < -0.1 {
        return Err(Error::NoConvergence {
            what: "boundary winding number",
            achieved: winding,
            requested: 0.0,
        });
    }
    Ok(n as usize)
}

fn newton(model: &PotentialModel, start: Complex64, cell: &SearchRegion) -> Option<Complex64> {
    let mut z = start;
    let diag = cell.diagonal();
    for _ in 0..100 {
        let d = dispersion(model, z);
        let dd = dispersion_derivative(model, z);
        if !d.is_finite() || !dd.is_finite() || dd.norm() == 0.0 {
            return None;
        }
        let mut step = d / dd;
        // keep the iteration from careening into a neighbouring cell
        if step.norm() > diag {
            step *= diag / step.norm();
        }
        z -= step;
        if z.re < cell.re_min - diag
            || z.re > cell.re_max + diag
            || z.im < cell.im_min - diag
            || z.im > cell.im_max + diag
        {
            return None;
        }
        if step.norm() <= 1e-14 * z.norm().max(1e-3) {
            return Some(z);
        }
    }
    None
}

/// Deterministic split fractions tried in turn when a subdivision line
/// happens to pass through a zero.
const SPLITS: [(f64, f64); 4] = [(0.5, 0.5), (0.531, 0.487), (0.463, 0.547), (0.552, 0.417)];

fn collect(
    model: &PotentialModel,
    region: &SearchRegion,
    count: usize,
    depth: u32,
    out: &mut Vec<Complex64>,
) -> Result<()> {
    if count == 0 {
        return Ok(());
    }
    if region.diagonal() < 1e-9 * (1.0 + region.center().norm()) {
        if count > 1 {
            return Err(Error::PoleTooClose { a: region.center(), b: region.center() });
        }
        out.push(region.center());
        return Ok(());
    }
    if count == 1 {
        // accept only a root inside this cell; Newton may slide off to a
        // different zero (e.g. the spurious one at the origin), in which
        // case subdividing pins down the right one
        if let Some(z) = newton(model, region.center(), region) {
            if region.contains(z) {
                out.push(z);
                return Ok(());
            }
        }
        if depth > 60 {
            return Err(Error::NewtonStall { start: region.center() });
        }
    }
    let mut last_err = None;
    'splits: for (fx, fy) in SPLITS {
        let quads = region.split(fx, fy);
        let mut counts = [0usize; 4];
        for (q, c) in quads.iter().zip(counts.iter_mut()) {
            match count_zeros_strict(model, q) {
                Ok(n) => *c = n,
                Err(e @ Error::ZeroOnBoundary { .. }) => {
                    last_err = Some(e);
                    continue 'splits;
                }
                Err(e) => return Err(e),
            }
        }
        if counts.iter().sum::<usize>() != count {
            last_err = Some(Error::NoConvergence {
                what: "zero count conservation under subdivision",
                achieved: counts.iter().sum::<usize>() as f64,
                requested: count as f64,
            });
            continue 'splits;
        }
        for (q, c) in quads.iter().zip(counts.iter()) {
            collect(model, q, *c, depth + 1, out)?;
        }
        return Ok(());
    }
    Err(last_err.unwrap_or(Error::NewtonStall { start: region.center() }))
}

/// All S-matrix / transmission poles inside the region, refined to
/// machine residuals, sorted by real part then imaginary part.
///
/// For the delta shell the dispersion function also vanishes at k = 0,
/// where the Green function stays regular; that zero is discarded.
pub fn find_poles(model: &PotentialModel, region: &SearchRegion) -> Result<Vec<PoleRecord>> {
    let count = count_zeros_strict(model, region)?;
    let mut zeros = Vec::with_capacity(count);
    collect(model, region, count, 0, &mut zeros)?;
    zeros.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    zeros.dedup_by(|a, b| (*a - *b).norm() < 1e-8 * (1.0 + b.norm()));
    if zeros.len() != count {
        return Err(Error::NoConvergence {
            what: "distinct pole collection",
            achieved: zeros.len() as f64,
            requested: count as f64,
        });
    }
    if matches!(model, PotentialModel::RadialDeltaShell { .. }) {
        zeros.retain(|z| z.norm() > 1e-8);
    }
    let mut records = Vec::with_capacity(zeros.len());
    for k in zeros {
        let (class, proper) = classify_pole(k)?;
        let d_dk = dispersion_derivative(model, k);
        records.push(PoleRecord {
            k,
            class,
            proper,
            d_dk,
            refinement_residual: dispersion(model, k).norm() / (1.0 + (k * d_dk).norm()),
        });
    }
    Ok(records)
}

/// A region that covers the poles relevant for low-energy work: the
/// resonances out to about 15 pi / range, the virtual / bound strip of the
/// imaginary axis, and (for the 1D barriers) the transmission poles.
pub fn default_search_region(model: &PotentialModel) -> SearchRegion {
    let scale = if model.range() > 0.0 { model.range() } else { 1.0 };
    let im_top = match model {
        PotentialModel::RadialSquareWell { v0, .. } => v0.sqrt() + 1.0 / scale,
        PotentialModel::RadialDeltaShell { lambda, .. } => 0.5 * (-lambda).max(0.0) + 1.0 / scale,
        _ => 1.0 / scale,
    };
    let im_bottom = match model {
        PotentialModel::Barrier1DDelta { lambda, kin } => {
            -(3.2 / scale + (kin.mass * lambda / kin.hbar).abs() * 1.5)
        }
        _ => -3.2 / scale,
    };
    SearchRegion {
        re_min: -0.77 / scale,
        re_max: 15.51 * std::f64::consts::PI / scale,
        im_min: im_bottom,
        im_max: im_top,
    }
}
