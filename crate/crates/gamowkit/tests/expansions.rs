//! Cross-checks of the pole expansions against the independent oracles:
//! the grid propagator and the direct spectral quadrature.  These run the
//! full pipeline (pole search, state normalization, expansion, oracle) and
//! are slower than the unit tests.

use gamowkit::cerf::m_function;
use gamowkit::expand::{
    propagator_full, propagator_proper_form, propagator_proper_plus_background, Contour,
    PropagatorBreakdown,
};
use gamowkit::gamow::{
    expansion_states, select_pairs, sum_rule_closure, sum_rule_inverse_k, GamowState,
};
use gamowkit::model::PotentialModel;
use gamowkit::oracle::{propagator_element, rotation_radius, spectral_quadrature};
use gamowkit::poles::PoleClass;
use num_complex::Complex64;

fn shell() -> PotentialModel {
    PotentialModel::radial_delta_shell(10.0, 1.0).unwrap()
}

/// Truncation order with the smallest inverse-k partial sum: the point the
/// convergence study stops at.
fn dip_order(states: &[GamowState], r: f64, rp: f64, hi: usize) -> usize {
    (2..=hi)
        .min_by(|&a, &b| {
            let sa = sum_rule_inverse_k(states, r, rp, a).unwrap().norm();
            let sb = sum_rule_inverse_k(states, r, rp, b).unwrap().norm();
            sa.total_cmp(&sb)
        })
        .unwrap()
}

#[test]
fn full_sum_matches_both_oracles_at_an_interior_point() {
    let model = shell();
    let states = expansion_states(&model, 40).unwrap();
    let (r, rp, t) = (0.3, 0.5, 1.0);

    let n_star = dip_order(&states, r, rp, 40);
    let picked = select_pairs(&states, n_star).unwrap();
    let full = propagator_full(&picked, r, rp, t).unwrap();

    let grid = propagator_element(&model, r, rp, t).unwrap();
    let radius = rotation_radius(&model, t).unwrap();
    let quad = spectral_quadrature(&model, r, rp, t, &Contour::c_l(radius).unwrap()).unwrap();

    // the two oracles must agree before either is allowed to judge
    assert!((grid - quad).norm() / quad.norm() < 1e-3);
    assert!((full.total - grid).norm() / grid.norm() < 1e-3);
    assert!((full.total - quad).norm() / quad.norm() < 1e-3);
}

#[test]
fn doubling_the_pair_count_stays_within_the_truncation_estimate() {
    let model = shell();
    let states = expansion_states(&model, 60).unwrap();
    let (r, rp, t) = (0.3, 0.5, 1.0);
    // partial sums of this family beat with period ten; the estimate is a
    // trustworthy bound at the beat minima where a study would stop
    for n in [10usize, 20, 30] {
        let g1 = propagator_full(&select_pairs(&states, n).unwrap(), r, rp, t).unwrap();
        let g2 = propagator_full(&select_pairs(&states, 2 * n).unwrap(), r, rp, t).unwrap();
        assert!(
            (g2.total - g1.total).norm() < g1.truncation_estimate,
            "N = {}: moved {} with estimate {}",
            n,
            (g2.total - g1.total).norm(),
            g1.truncation_estimate
        );
    }
}

/// Sum of the bare-exponential terms (right-half-plane members) and of
/// everything else (mirror members in compact form plus the pooled
/// remainders).
fn exponential_split(pf: &PropagatorBreakdown) -> (f64, f64) {
    let expo: Complex64 = pf
        .pole_terms
        .iter()
        .filter(|(p, _)| p.k.re > 0.0)
        .map(|(_, v)| v)
        .sum();
    let mirror: Complex64 = pf
        .pole_terms
        .iter()
        .filter(|(p, _)| p.k.re < 0.0)
        .map(|(_, v)| v)
        .sum();
    (expo.norm(), (pf.background + mirror).norm())
}

#[test]
fn corrections_outlive_the_exponential_terms() {
    let model = shell();
    let states = expansion_states(&model, 20).unwrap();
    let picked = select_pairs(&states, 20).unwrap();
    let (r, rp) = (0.3, 0.5);

    let mut prev_ratio = 0.0;
    let mut ratios = Vec::new();
    for t in [0.5, 2.0, 8.0, 30.0] {
        let pf = propagator_proper_form(&picked, r, rp, t).unwrap();
        let (expo, rest) = exponential_split(&pf);
        let ratio = rest / expo;
        assert!(ratio > prev_ratio, "ratio fell at t = {}", t);
        prev_ratio = ratio;
        ratios.push(ratio);
    }
    // transient regime: corrections small; late: they are all that is left
    assert!(ratios[0] < 1.0);
    assert!(*ratios.last().unwrap() > 1.0);
}

#[test]
fn rotated_line_background_decays_with_the_three_halves_power() {
    let model = shell();
    let states = expansion_states(&model, 20).unwrap();
    let picked = select_pairs(&states, 20).unwrap();
    let (r, rp) = (0.3, 0.5);

    let mut pts = Vec::new();
    for t in [20.0, 30.0, 45.0, 65.0, 100.0] {
        let pb = propagator_proper_plus_background(&model, &picked, r, rp, t).unwrap();
        pts.push((t.ln(), pb.background.norm().ln()));
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    assert!(
        (slope + 1.5).abs() < 0.15,
        "log-log slope {} is not -3/2",
        slope
    );
}

#[test]
fn plus_background_reaches_outside_the_interaction_region() {
    let model = shell();
    let states = expansion_states(&model, 20).unwrap();
    let picked = select_pairs(&states, 20).unwrap();
    let (r, rp, t) = (0.3, 1.5, 1.0);

    let pb = propagator_proper_plus_background(&model, &picked, r, rp, t).unwrap();
    let grid = propagator_element(&model, r, rp, t).unwrap();
    assert!((pb.total - grid).norm() < 1e-4);
}

#[test]
fn short_time_pole_sum_approaches_the_closure_value() {
    let model = shell();
    let states = expansion_states(&model, 40).unwrap();
    let (lo, hi) = (0.2, 0.7);
    let bump = move |x: f64| {
        if x <= lo || x >= hi {
            0.0
        } else {
            let u = (x - lo) / (hi - lo);
            (-1.0 / (u * (1.0 - u))).exp()
        }
    };
    let r0 = 0.45;

    let n_star = dip_order(&states, r0, r0, 40);
    let closure = sum_rule_closure(&states, bump, r0, n_star).unwrap();
    assert!((closure - bump(r0)).norm() < 1e-3);

    // the time-dependent sandwich has no t = 0 evaluation; it approaches
    // the closure value from t > 0 instead
    let picked = select_pairs(&states, n_star).unwrap();
    let mut prev = f64::INFINITY;
    for t in [1e-1, 1e-2, 1e-3, 1e-4] {
        let mut acc = Complex64::new(0.0, 0.0);
        for s in &picked {
            let coeff = s.grid.dot_fn(&s.u, &bump);
            acc += s.eval(r0) * coeff * m_function(s.k(), t).unwrap();
        }
        let gap = (acc - closure).norm();
        assert!(gap < prev, "gap grew at t = {}", t);
        prev = gap;
    }
    assert!(prev < 1e-3);
}

#[test]
fn well_expansion_carries_its_bound_state() {
    let well = PotentialModel::radial_square_well(5.0, 1.0).unwrap();
    let states = expansion_states(&well, 10).unwrap();
    assert_eq!(
        states.iter().filter(|s| s.pole.class == PoleClass::Bound).count(),
        1
    );

    let (r, rp, t) = (0.2, 0.45, 1.0);
    let n_star = dip_order(&states, r, rp, 10);
    let full = propagator_full(&select_pairs(&states, n_star).unwrap(), r, rp, t).unwrap();
    assert_eq!(full.bound_terms.len(), 1);

    let grid = propagator_element(&well, r, rp, t).unwrap();
    assert!(
        (full.total - grid).norm() / grid.norm() < 1.2e-3,
        "relative gap {}",
        (full.total - grid).norm() / grid.norm()
    );
}
