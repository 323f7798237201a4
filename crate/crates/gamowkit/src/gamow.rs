//! Gamow (resonance) eigenstates u_n attached to S-matrix poles: outgoing
//! solutions of the radial equation at complex k_n, normalized with the
//! exterior regularization
//!
//!   integral_0^R u^2 dr + i u^2(R) / (2 k_n) = 1
//!
//! (note u^2, not |u|^2: the pole states live in a bilinear pairing).

use crate::error::{Error, Result};
use crate::model::{
    dispersion, dispersion_derivative, green_outgoing, interior_wavenumber, near_pole,
    wronskian, PotentialModel,
};
use crate::poles::{
    classify_pole, default_search_region, find_poles, PoleClass, PoleRecord, SearchRegion,
};
use crate::quad::panel_rule;
use num_complex::Complex64;

/// Composite Gauss-Legendre grid on [span.0, span.1].
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub span: (f64, f64),
}

impl RadialGrid {
    pub fn gauss_panels(breaks: &[f64], per_panel: usize) -> Result<Self> {
        if breaks.len() < 2 || per_panel == 0 {
            return Err(Error::NonPositiveRange { name: "grid breaks", value: 0.0 });
        }
        for w in breaks.windows(2) {
            if !(w[1] > w[0]) || !w[0].is_finite() || !w[1].is_finite() {
                return Err(Error::NonPositiveRange { name: "grid breaks", value: w[1] - w[0] });
            }
        }
        let (nodes, weights) = panel_rule(breaks, per_panel);
        Ok(RadialGrid { nodes, weights, span: (breaks[0], *breaks.last().unwrap()) })
    }

    /// Grid over the interaction region [0, range], with panel density
    /// chosen so that oscillations up to wave number k_max are resolved to
    /// machine accuracy by the 32-point panels.
    pub fn for_model(model: &PotentialModel, k_max: f64) -> Result<Self> {
        let range = model.range();
        if range <= 0.0 {
            return Err(Error::NonPositiveRange { name: "model range", value: range });
        }
        let n_panels = (range * (k_max.abs() + 1.0) / 8.0).ceil().max(2.0) as usize;
        let mut breaks = Vec::with_capacity(n_panels + 1);
        for i in 0..=n_panels {
            breaks.push(range * i as f64 / n_panels as f64);
        }
        Self::gauss_panels(&breaks, 32)
    }

    /// Bilinear inner product of two sampled functions: sum w f g.
    pub fn dot(&self, f: &[Complex64], g: &[Complex64]) -> Complex64 {
        self.weights
            .iter()
            .zip(f.iter().zip(g.iter()))
            .map(|(w, (a, b))| w * a * b)
            .sum()
    }

    /// Bilinear inner product of a sampled function with a closure.
    pub fn dot_fn<F: Fn(f64) -> f64>(&self, f: &[Complex64], g: F) -> Complex64 {
        self.weights
            .iter()
            .zip(self.nodes.iter().zip(f.iter()))
            .map(|(w, (r, a))| w * a * g(*r))
            .sum()
    }
}

#[derive(Debug, Clone)]
pub struct GamowState {
    pub pole: PoleRecord,
    pub grid: RadialGrid,
    /// Samples of u on the grid nodes.
    pub u: Vec<Complex64>,
    /// u(r) = tail_coefficient * exp(i k r) for r >= range.
    pub tail_coefficient: Complex64,
    pub normalized: bool,
    amplitude: Complex64,
    model: PotentialModel,
}

impl GamowState {
    pub fn k(&self) -> Complex64 {
        self.pole.k
    }

    pub fn model(&self) -> &PotentialModel {
        &self.model
    }

    /// Closed-form evaluation at any radius.
    pub fn eval(&self, r: f64) -> Complex64 {
        let range = self.model.range();
        if r >= range {
            self.tail_coefficient * (Complex64::i() * self.pole.k * r).exp()
        } else {
            let q = interior_wavenumber(&self.model, self.pole.k);
            self.amplitude * (q * r).sin()
        }
    }

    /// The state at -conj(k): complex conjugate samples, mirrored record.
    pub fn conjugate_partner(&self) -> Result<GamowState> {
        let k = -self.pole.k.conj();
        let (class, proper) = classify_pole(k)?;
        let d_dk = dispersion_derivative(&self.model, k);
        let pole = PoleRecord {
            k,
            class,
            proper,
            d_dk,
            refinement_residual: dispersion(&self.model, k).norm() / (1.0 + (k * d_dk).norm()),
        };
        // u(-conj k)(r) = u(k)(r)* needs the interior amplitude sign to
        // follow the parity of q(k): for the shell q = k is odd under the
        // mirror (sin flips), for the well q is even
        let q = interior_wavenumber(&self.model, self.pole.k);
        let qm = interior_wavenumber(&self.model, k);
        let amplitude = if (qm + q.conj()).norm() < (qm - q.conj()).norm() {
            -self.amplitude.conj()
        } else {
            self.amplitude.conj()
        };
        Ok(GamowState {
            pole,
            grid: self.grid.clone(),
            u: self.u.iter().map(|v| v.conj()).collect(),
            tail_coefficient: self.tail_coefficient.conj(),
            normalized: self.normalized,
            amplitude,
            model: self.model.clone(),
        })
    }
}

/// Regularized norm integral of the interior form sin(q r) scaled by
/// `amplitude`, in closed form.
fn norm_integral_closed(model: &PotentialModel, k: Complex64, amplitude: Complex64) -> Complex64 {
    let range = model.range();
    let q = interior_wavenumber(model, k);
    // int_0^R sin^2(q r) dr = R/2 - sin(2qR)/(4q)
    let interior = 0.5 * range - (2.0 * q * range).sin() / (4.0 * q);
    let u_r = (q * range).sin();
    amplitude * amplitude * (interior + Complex64::i() * u_r * u_r / (2.0 * k))
}

/// Outgoing solution at an S-matrix pole, unnormalized (interior form
/// sin(q r)).
pub fn solve_gamow(
    model: &PotentialModel,
    pole: &PoleRecord,
    grid: &RadialGrid,
) -> Result<GamowState> {
    if !model.is_radial() {
        return Err(Error::WrongModelKind { op: "solve_gamow" });
    }
    let k = pole.k;
    if pole.refinement_residual >= 1e-10 || !near_pole(model, k) {
        return Err(Error::NotAPole { k, residual: dispersion(model, k).norm() });
    }
    let range = model.range();
    if grid.span.0 != 0.0 || (grid.span.1 - range).abs() > 1e-12 * range {
        return Err(Error::OutsideInteractionRegion { x: grid.span.1 });
    }
    let q = interior_wavenumber(model, k);
    let tail = (q * range).sin() * (-Complex64::i() * k * range).exp();
    let mut state = GamowState {
        pole: *pole,
        grid: grid.clone(),
        u: Vec::new(),
        tail_coefficient: tail,
        normalized: false,
        amplitude: Complex64::new(1.0, 0.0),
        model: model.clone(),
    };
    state.u = grid.nodes.iter().map(|&r| state.eval(r)).collect();
    Ok(state)
}

/// Regularized norm integral of a state as currently scaled.
pub fn norm_integral(state: &GamowState) -> Complex64 {
    norm_integral_closed(&state.model, state.pole.k, state.amplitude)
}

/// Rescale so the regularized norm is 1; idempotent. The overall sign is
/// fixed by Re N > 0 (with Im N >= 0 breaking ties), so conjugate partners
/// come out as complex conjugates of one another.
pub fn normalize_gamow(mut state: GamowState) -> Result<GamowState> {
    let integral = norm_integral(&state);
    if integral.norm() < 1e-12 {
        return Err(Error::DegenerateNorm { k: state.pole.k });
    }
    let mut n = 1.0 / integral.sqrt();
    if n.re < 0.0 || (n.re == 0.0 && n.im < 0.0) {
        n = -n;
    }
    state.amplitude *= n;
    state.tail_coefficient *= n;
    for v in state.u.iter_mut() {
        *v *= n;
    }
    state.normalized = true;
    Ok(state)
}

/// Residue of the outgoing Green function at the state's pole, divided by
/// u(r) u(r') / (2 k). Equals 1 for a correctly normalized state and N^2
/// for an unnormalized one. The residue is taken by trapezoidal quadrature
/// on a small circle, which is exponentially accurate for a simple pole.
pub fn residue_ratio(
    model: &PotentialModel,
    state: &GamowState,
    r: f64,
    rp: f64,
) -> Result<Complex64> {
    let k0 = state.pole.k;
    // small enough that no second pole of these models can sneak inside
    let radius = (0.05 * (1.0 + k0.norm())).min(0.35);
    let n = 64;
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..n {
        let th = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
        let e = Complex64::from_polar(1.0, th);
        let k = k0 + radius * e;
        if near_pole(model, k) {
            return Err(Error::ContourTouchesOtherPole { k: k0, other: k });
        }
        acc += green_outgoing(model, r, rp, k)? * e;
    }
    let residue = acc * radius / n as f64;
    let denom = state.eval(r) * state.eval(rp) / (2.0 * k0);
    if denom.norm() < 1e-300 {
        return Err(Error::DegenerateNorm { k: k0 });
    }
    Ok(residue / denom)
}

fn pair_tol(k: Complex64) -> f64 {
    1e-8 * (1.0 + k.norm())
}

fn on_imaginary_axis(k: Complex64) -> bool {
    k.re.abs() <= 1e-12 * k.norm().max(1.0)
}

/// Verify that every off-axis state has its mirror partner at -conj(k).
pub fn ensure_paired(states: &[GamowState]) -> Result<()> {
    for s in states {
        let k = s.pole.k;
        if on_imaginary_axis(k) {
            continue;
        }
        let mirror = -k.conj();
        if !states.iter().any(|t| (t.pole.k - mirror).norm() < pair_tol(k)) {
            return Err(Error::UnpairedPoles { k });
        }
    }
    Ok(())
}

/// Extend a list of fourth-quadrant / axis states by the conjugate
/// partners of all off-axis members, sorted by Re k.
pub fn with_partners(states: Vec<GamowState>) -> Result<Vec<GamowState>> {
    let mut all = Vec::with_capacity(states.len() * 2);
    for s in states {
        if !on_imaginary_axis(s.pole.k) {
            all.push(s.conjugate_partner()?);
        }
        all.push(s);
    }
    all.sort_by(|a, b| a.pole.k.re.total_cmp(&b.pole.k.re));
    ensure_paired(&all)?;
    Ok(all)
}

/// The first `n_pairs` mirror pairs (ordered by |Re k|) plus every
/// imaginary-axis state, which is its own mirror.
fn symmetric_selection<'a>(
    states: &'a [GamowState],
    n_pairs: usize,
) -> Result<Vec<&'a GamowState>> {
    ensure_paired(states)?;
    let mut reps: Vec<&GamowState> = states
        .iter()
        .filter(|s| !on_imaginary_axis(s.pole.k) && s.pole.k.re > 0.0)
        .collect();
    reps.sort_by(|a, b| a.pole.k.re.total_cmp(&b.pole.k.re));
    reps.truncate(n_pairs);
    let mut picked: Vec<&GamowState> = states.iter().filter(|s| on_imaginary_axis(s.pole.k)).collect();
    for rep in reps {
        let mirror = -rep.pole.k.conj();
        let partner = states
            .iter()
            .find(|t| (t.pole.k - mirror).norm() < pair_tol(rep.pole.k))
            .ok_or(Error::UnpairedPoles { k: rep.pole.k })?;
        picked.push(rep);
        picked.push(partner);
    }
    Ok(picked)
}

/// Symmetric partial sum of u_n(r) u_n(r') / k_n over the first `n_pairs`
/// mirror pairs. Tends to zero as the pair count grows; each pair's
/// contribution is purely imaginary (z/k - conj(z/k)).
pub fn sum_rule_inverse_k(
    states: &[GamowState],
    r: f64,
    rp: f64,
    n_pairs: usize,
) -> Result<Complex64> {
    let picked = symmetric_selection(states, n_pairs)?;
    Ok(picked.iter().map(|s| s.eval(r) * s.eval(rp) / s.pole.k).sum())
}

/// Weak-sense closure: (1/2) sum u_n(r) * integral(u_n * testfn) over the
/// first `n_pairs` mirror pairs, which tends to testfn(r) as the pair
/// count grows.
pub fn sum_rule_closure<F: Fn(f64) -> f64>(
    states: &[GamowState],
    testfn: F,
    r: f64,
    n_pairs: usize,
) -> Result<Complex64> {
    let picked = symmetric_selection(states, n_pairs)?;
    let mut acc = Complex64::new(0.0, 0.0);
    for s in picked {
        let coeff = s.grid.dot_fn(&s.u, &testfn);
        acc += s.eval(r) * coeff;
    }
    Ok(0.5 * acc)
}

/// The first `n_pairs` mirror pairs plus every imaginary-axis state, as an
/// owned list. Lets callers truncate a large paired family at the order a
/// convergence study picked without re-running the pole search.
pub fn select_pairs(states: &[GamowState], n_pairs: usize) -> Result<Vec<GamowState>> {
    Ok(symmetric_selection(states, n_pairs)?.into_iter().cloned().collect())
}

/// Everything a truncated pole expansion needs: all imaginary-axis states
/// plus the first `n_pairs` resonance pairs, mirror partners included,
/// normalized and sorted by Re k.  The search strip is widened until the
/// requested pair count is found.
pub fn expansion_states(model: &PotentialModel, n_pairs: usize) -> Result<Vec<GamowState>> {
    if n_pairs == 0 {
        return Err(Error::EmptySelection);
    }
    let base = default_search_region(model);
    let spacing = std::f64::consts::PI / model.range();
    let mut re_max = base.re_max.max(spacing * (n_pairs as f64 + 2.5));
    let mut im_min = base.im_min;
    for attempt in 0..3 {
        let region = SearchRegion::new(base.re_min, re_max, im_min, base.im_max)?;
        let found = find_poles(model, &region)?;
        let mut reps: Vec<&PoleRecord> =
            found.iter().filter(|p| p.class == PoleClass::Resonance).collect();
        reps.sort_by(|a, b| a.k.re.total_cmp(&b.k.re));
        if reps.len() < n_pairs {
            if attempt == 2 {
                return Err(Error::NoConvergence {
                    what: "resonance pair search",
                    achieved: reps.len() as f64,
                    requested: n_pairs as f64,
                });
            }
            // resonances sink logarithmically as Re k grows (fast for the
            // well), so the strip must deepen along with the widening
            re_max *= 1.5;
            im_min *= 1.3;
            continue;
        }
        reps.truncate(n_pairs);
        let mut picked: Vec<PoleRecord> = found
            .iter()
            .filter(|p| matches!(p.class, PoleClass::Bound | PoleClass::Virtual))
            .copied()
            .collect();
        picked.extend(reps.into_iter().copied());
        let k_top = picked.iter().map(|p| p.k.norm()).fold(1.0, f64::max);
        let grid = RadialGrid::for_model(model, k_top)?;
        let mut states = Vec::with_capacity(picked.len());
        for p in &picked {
            states.push(normalize_gamow(solve_gamow(model, p, &grid)?)?);
        }
        return with_partners(states);
    }
    unreachable!()
}

/// Normalization constant squared predicted by the residue identity:
/// N^2 = -4 i k^2 / (q^2 W'(k) W(-k)) for the interior convention sin(qr).
pub fn norm_squared_from_residue(model: &PotentialModel, k: Complex64) -> Result<Complex64> {
    let q = interior_wavenumber(model, k);
    let dprime = dispersion_derivative(model, k);
    let wprime = match model {
        PotentialModel::RadialDeltaShell { .. } => dprime / (2.0 * Complex64::i() * k),
        PotentialModel::RadialSquareWell { radius, .. } => {
            (Complex64::i() * k * radius).exp() * dprime
        }
        _ => return Err(Error::WrongModelKind { op: "norm_squared_from_residue" }),
    };
    let wm = wronskian(model, -k)?;
    Ok(-4.0 * Complex64::i() * k * k / (q * q * wprime * wm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poles::{find_poles, SearchRegion};

    fn shell() -> PotentialModel {
        PotentialModel::radial_delta_shell(10.0, 1.0).unwrap()
    }

    fn shell_states(n: usize) -> Vec<GamowState> {
        let model = shell();
        let hi = (n as f64 + 0.6) * std::f64::consts::PI;
        let region = SearchRegion::new(0.1, hi, -3.0, 0.3).unwrap();
        let poles = find_poles(&model, &region).unwrap();
        assert!(poles.len() >= n, "found {} poles", poles.len());
        let grid = RadialGrid::for_model(&model, hi).unwrap();
        poles[..n]
            .iter()
            .map(|p| normalize_gamow(solve_gamow(&model, p, &grid).unwrap()).unwrap())
            .collect()
    }

    #[test]
    fn interior_and_tail_join_continuously() {
        let s = &shell_states(1)[0];
        let below = s.eval(1.0 - 1e-10);
        let above = s.eval(1.0 + 1e-10);
        assert!((below - above).norm() < 1e-8 * below.norm());
    }

    #[test]
    fn derivative_jump_at_shell_matches_strength() {
        // u'(a+) - u'(a-) = lambda u(a) for the delta shell
        let s = &shell_states(1)[0];
        let h = 1e-6;
        let d_out = (s.eval(1.0 + 2.0 * h) - s.eval(1.0 + h)) / h;
        let d_in = (s.eval(1.0 - h) - s.eval(1.0 - 2.0 * h)) / h;
        let jump = d_out - d_in;
        let want = 10.0 * s.eval(1.0);
        assert!((jump - want).norm() < 1e-4 * want.norm(), "{jump} vs {want}");
    }

    #[test]
    fn closed_norm_matches_grid_quadrature() {
        let s = &shell_states(1)[0];
        let quad: Complex64 = s.grid.dot(&s.u, &s.u);
        let tail_term = {
            let u_r = s.eval(1.0);
            Complex64::i() * u_r * u_r / (2.0 * s.k())
        };
        assert!((quad + tail_term - norm_integral(s)).norm() < 1e-12);
        assert!((norm_integral(s) - 1.0).norm() < 1e-12);
    }

    #[test]
    fn normalizing_twice_changes_nothing() {
        let s = shell_states(1).remove(0);
        let again = normalize_gamow(s.clone()).unwrap();
        for (a, b) in s.u.iter().zip(again.u.iter()) {
            assert!((a - b).norm() < 1e-14);
        }
        assert!((s.tail_coefficient - again.tail_coefficient).norm() < 1e-14);
    }

    #[test]
    fn residue_ratio_is_one_when_normalized() {
        let model = shell();
        let states = shell_states(3);
        for s in &states {
            for (r, rp) in [(0.3, 0.7), (0.5, 0.5), (0.2, 1.0)] {
                let ratio = residue_ratio(&model, s, r, rp).unwrap();
                let k = s.k();
                assert!(
                    (ratio - 1.0).norm() < 1e-6,
                    "k = {k}, (r, r') = ({r}, {rp}): ratio = {ratio}"
                );
            }
        }
    }

    #[test]
    fn residue_ratio_of_unnormalized_state_is_norm_squared() {
        let model = shell();
        let region = SearchRegion::new(0.1, 4.0, -1.0, 0.3).unwrap();
        let pole = find_poles(&model, &region).unwrap()[0];
        let grid = RadialGrid::for_model(&model, 4.0).unwrap();
        let raw = solve_gamow(&model, &pole, &grid).unwrap();
        let ratio = residue_ratio(&model, &raw, 0.4, 0.9).unwrap();
        let n2 = norm_squared_from_residue(&model, pole.k).unwrap();
        assert!((ratio - n2).norm() < 1e-7 * n2.norm(), "{ratio} vs {n2}");
    }

    #[test]
    fn normalization_constant_matches_residue_identity() {
        let model = shell();
        for s in &shell_states(4) {
            let n2 = norm_squared_from_residue(&model, s.k()).unwrap();
            // the state's amplitude^2 is its N^2 since the raw interior
            // amplitude was 1
            let a2 = s.amplitude * s.amplitude;
            assert!((a2 - n2).norm() < 1e-10 * n2.norm(), "k = {}", s.k());
        }
    }

    #[test]
    fn phase_convention_picks_positive_real_part() {
        for s in shell_states(4) {
            assert!(s.amplitude.re > 0.0);
        }
    }

    #[test]
    fn partner_construction_and_pairing() {
        let states = shell_states(3);
        assert!(matches!(ensure_paired(&states), Err(Error::UnpairedPoles { .. })));
        let paired = with_partners(states).unwrap();
        assert_eq!(paired.len(), 6);
        ensure_paired(&paired).unwrap();
        // partner samples are conjugates
        let s = &paired[3];
        let mirror = -s.k().conj();
        let p = paired.iter().find(|t| (t.k() - mirror).norm() < 1e-9).unwrap();
        for ((a, b), r) in s.u.iter().zip(p.u.iter()).zip(s.grid.nodes.iter()) {
            assert!((a.conj() - b).norm() < 1e-14);
            // closed-form evaluation agrees with the conjugated samples
            assert!((p.eval(*r) - b).norm() < 1e-13);
        }
        assert!((p.eval(1.3) - s.eval(1.3).conj()).norm() < 1e-13);
    }

    #[test]
    fn inverse_k_pairs_are_purely_imaginary_and_shrink() {
        let paired = with_partners(shell_states(12)).unwrap();
        let (r, rp) = (0.4, 0.8);
        assert_eq!(sum_rule_inverse_k(&paired, r, rp, 0).unwrap(), Complex64::new(0.0, 0.0));
        let s4 = sum_rule_inverse_k(&paired, r, rp, 4).unwrap();
        let s12 = sum_rule_inverse_k(&paired, r, rp, 12).unwrap();
        assert!(s4.re.abs() < 1e-12);
        assert!(s12.re.abs() < 1e-12);
        assert!(s12.norm() < s4.norm());
    }

    #[test]
    fn closure_reproduces_a_bump_test_function() {
        let paired = with_partners(shell_states(24)).unwrap();
        // smooth bump supported in (0.3, 0.7)
        let bump = |r: f64| {
            let s: f64 = (r - 0.5) / 0.2;
            if s.abs() < 1.0 {
                (1.0 - 1.0 / (1.0 - s * s)).exp()
            } else {
                0.0
            }
        };
        // conjugate pairing makes the partial sums real
        let at_center = sum_rule_closure(&paired, bump, 0.5, 24).unwrap();
        assert!(at_center.im.abs() < 1e-10);
        assert!(
            (at_center - bump(0.5)).norm() < 2e-3,
            "{at_center} vs {}",
            bump(0.5)
        );
        let outside = sum_rule_closure(&paired, bump, 0.9, 24).unwrap();
        assert!(outside.norm() < 5e-3, "{outside}");
    }

    #[test]
    fn non_pole_input_is_rejected() {
        let model = shell();
        let grid = RadialGrid::for_model(&model, 5.0).unwrap();
        let fake = PoleRecord {
            k: Complex64::new(2.0, -0.5),
            class: crate::poles::PoleClass::Resonance,
            proper: true,
            d_dk: Complex64::new(1.0, 0.0),
            refinement_residual: 0.0,
        };
        assert!(matches!(
            solve_gamow(&model, &fake, &grid),
            Err(Error::NotAPole { .. })
        ));
    }

    #[test]
    fn grid_span_must_cover_interaction_region() {
        let model = shell();
        let region = SearchRegion::new(0.1, 4.0, -1.0, 0.3).unwrap();
        let pole = find_poles(&model, &region).unwrap()[0];
        let bad = RadialGrid::gauss_panels(&[0.0, 0.5], 16).unwrap();
        assert!(matches!(
            solve_gamow(&model, &pole, &bad),
            Err(Error::OutsideInteractionRegion { .. })
        ));
    }

    #[test]
    fn square_well_bound_state_norm() {
        // bound states must also normalize cleanly; their norm integral is
        // dominated by the real interior part
        let model = PotentialModel::radial_square_well(4.0, 1.5).unwrap();
        let region = SearchRegion::new(-0.3, 0.3, 0.05, 2.0).unwrap();
        let pole = find_poles(&model, &region).unwrap()[0];
        let grid = RadialGrid::for_model(&model, 5.0).unwrap();
        let s = normalize_gamow(solve_gamow(&model, &pole, &grid).unwrap()).unwrap();
        let ratio = residue_ratio(&model, &s, 0.5, 1.1).unwrap();
        assert!((ratio - 1.0).norm() < 1e-6, "ratio = {ratio}");
        // a bound state of a real potential can be taken real
        for v in &s.u {
            assert!(v.im.abs() < 1e-10);
        }
    }
}
