use super::*;
use crate::ensemble::DegreeDistribution;
use proptest::prelude::*;

fn reg(dv: u32, dc: u32) -> DegreeDistribution {
    DegreeDistribution::from_regular(dv, dc).unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

#[test]
fn peeling_golden_and_trivial_points() {
    let dd = reg(3, 6);
    // 0.3 * (1 - 0.7^5)^2, evaluated in exact rational arithmetic
    let v = peeling_step(0.3, 0.3, 0.0, &dd).unwrap();
    assert!(close(v, 0.20763225747, 1e-14), "{v}");
    for &x in &[0.0, 0.2, 0.9] {
        assert_eq!(peeling_step(x, 0.0, 0.4, &dd).unwrap(), 0.0);
    }
    for &(eps, alpha) in &[(0.1, 0.02), (0.4, 0.3), (0.25, 1.0)] {
        let at_zero = peeling_step(0.0, eps, alpha, &dd).unwrap();
        let floor = eps * dd.eval_lambda(1.0 - (1.0 - alpha) * dd.eval_rho(1.0 - alpha).unwrap()).unwrap();
        assert!(close(at_zero, floor, 1e-15));
    }
}

#[test]
fn peeling_regular_closed_form() {
    let dd = reg(4, 7);
    for &(x, eps, a) in &[(0.1f64, 0.3f64, 0.05f64), (0.7, 0.45, 0.2), (0.33, 0.12, 0.0)] {
        let closed = eps * (a + (1.0 - a) * (1.0 - ((1.0 - x) * (1.0 - a)).powi(6))).powi(3);
        assert!(close(peeling_step(x, eps, a, &dd).unwrap(), closed, 1e-15));
    }
}

#[test]
fn step_rejects_out_of_range() {
    let dd = reg(3, 6);
    assert!(peeling_step(1.2, 0.1, 0.0, &dd).is_err());
    assert!(peeling_step(0.1, 0.5, 0.0, &dd).is_err());
    assert!(peeling_step(0.1, 0.1, -0.1, &dd).is_err());
    assert!(check_message_probs(0.1, 1.5, &dd).is_err());
    assert!(gallager_a_step(0.1, -0.1, 0.0, 3, 6, true, MassConvention::Literal).is_err());
    assert!(gallager_b_step(0.1, 0.1, 0.0, 3, 6, 3, MassConvention::Literal).is_err());
    assert!(gallager_b_step(0.1, 0.1, 0.0, 3, 6, 0, MassConvention::Literal).is_err());
}

#[test]
fn check_probs_examples() {
    let dd = reg(3, 6);
    let p = check_message_probs(0.0, 0.0, &dd).unwrap();
    assert_eq!((p.p0, p.p_plus, p.p_minus), (0.0, 1.0, 0.0));
    let p = check_message_probs(0.5, 0.0, &dd).unwrap();
    assert_eq!((p.p0, p.p_plus, p.p_minus), (0.0, 0.5, 0.5));
    let p = check_message_probs(0.0, 0.02, &dd).unwrap();
    assert!(close(p.p0, 0.0960792032, 1e-15));
    assert!(close(p.p_plus, 0.9039207968, 1e-15));
    assert_eq!(p.p_minus, 0.0);
}

#[test]
fn irregular_check_forms_agree_on_point_masses() {
    let dd = reg(3, 6);
    for &(x, a) in &[(0.1, 0.05), (0.3, 0.0), (0.45, 0.2)] {
        let exact = check_message_probs(x, a, &dd).unwrap();
        let literal = check_message_probs_literal(x, a, &dd).unwrap();
        // literal labels are swapped
        assert!(close(exact.p_plus, literal.p_minus, 1e-15));
        assert!(close(exact.p_minus, literal.p_plus, 1e-15));
    }
}

#[test]
fn gallager_a_fault_free_golden() {
    // classical recursion, exact rational evaluation
    let golden = [
        (0.01, 0.03, 0.005051711218573519),
        (0.05, 0.04, 0.054951041223),
        (0.2, 0.1, 0.26232932352),
    ];
    for &(x, eps, want) in &golden {
        for keep in [false, true] {
            for conv in [MassConvention::Literal, MassConvention::EventComplete] {
                let got = gallager_a_step(x, eps, 0.0, 3, 6, keep, conv).unwrap();
                assert!(close(got, want, 1e-14), "{x} {eps}: {got} vs {want}");
            }
        }
    }
    for eps in [0.01, 0.2, 0.45] {
        assert_eq!(gallager_a_step(0.0, eps, 0.0, 3, 6, true, MassConvention::Literal).unwrap(), 0.0);
    }
}

#[test]
fn gallager_a_positive_with_missing_wires() {
    for conv in [MassConvention::Literal, MassConvention::EventComplete] {
        for keep in [false, true] {
            for &(eps, a) in &[(1e-4, 1e-4), (0.05, 0.02), (0.3, 0.5)] {
                assert!(gallager_a_step(0.0, eps, a, 3, 6, keep, conv).unwrap() > 0.0);
            }
        }
    }
}

#[test]
fn gallager_b_golden_event_enumeration() {
    // exhaustive enumeration of wire states, check inputs and channel value
    let (x, eps, a) = (0.05, 0.05, 0.02);
    let complete = gallager_b_step(x, eps, a, 3, 6, 2, MassConvention::EventComplete).unwrap();
    let literal = gallager_b_step(x, eps, a, 3, 6, 2, MassConvention::Literal).unwrap();
    assert!(close(complete, 0.05644067945050133, 1e-15), "{complete}");
    assert!(close(literal, 0.054460679450501336, 1e-15), "{literal}");
    // the literal sum misses exactly eps * Pr[V <= 1]
    let missing = eps * (a * a + 2.0 * a * (1.0 - a));
    assert!(close(complete - literal, missing, 1e-15));
    assert!(close(enumerate_b(x, eps, a, 3, 6, 2), complete, 1e-14));
}

#[test]
fn gallager_b_trivial_and_equivalence() {
    for conv in [MassConvention::Literal, MassConvention::EventComplete] {
        assert_eq!(gallager_b_step(0.0, 0.0, 0.0, 3, 6, 2, conv).unwrap(), 0.0);
    }
    for &(x, eps) in &[(0.01, 0.03), (0.1, 0.2), (0.4, 0.45)] {
        let b = gallager_b_step(x, eps, 0.0, 3, 6, 2, MassConvention::EventComplete).unwrap();
        let a = gallager_a_step(x, eps, 0.0, 3, 6, false, MassConvention::Literal).unwrap();
        assert!(close(a, b, 1e-15));
    }
}

#[test]
fn event_complete_matches_enumeration_oracle() {
    for &(dv, dc) in &[(3u32, 6u32), (4, 5), (5, 4)] {
        for &(x, eps, a) in &[(0.05, 0.05, 0.02), (0.2, 0.1, 0.3), (0.01, 0.3, 0.5)] {
            for b in 1..dv {
                let got = gallager_b_step(x, eps, a, dv, dc, b, MassConvention::EventComplete).unwrap();
                let want = enumerate_b(x, eps, a, dv, dc, b);
                assert!(close(got, want, 1e-13), "GB ({dv},{dc}) b={b}: {got} vs {want}");
            }
            for keep in [false, true] {
                let got = gallager_a_step(x, eps, a, dv, dc, keep, MassConvention::EventComplete).unwrap();
                let want = enumerate_a(x, eps, a, dv, dc, keep);
                assert!(close(got, want, 1e-13), "GA ({dv},{dc}) keep={keep}: {got} vs {want}");
            }
        }
    }
}

#[test]
fn gallager_a_dv3_conventions_and_gb_complete() {
    // for dv = 3 the exact keep-channel Gallager A and exact Gallager B (b = 2) coincide
    for &(x, eps, a) in &[(0.05, 0.05, 0.02), (0.2, 0.1, 0.3)] {
        let ga = gallager_a_step(x, eps, a, 3, 6, true, MassConvention::EventComplete).unwrap();
        let gb = gallager_b_step(x, eps, a, 3, 6, 2, MassConvention::EventComplete).unwrap();
        assert!(close(ga, gb, 1e-15));
    }
}

/// Message law of one check: enumerate every state of its `dc - 1` other
/// wires (missing, correct input, wrong input).
fn enumerate_check(x: f64, a: f64, dc: u32) -> [f64; 3] {
    let mut law = [0.0; 3]; // erasure, correct, wrong
    let k = dc - 1;
    for code in 0..3u32.pow(k) {
        let (mut c, mut p, mut missing, mut wrong) = (code, 1.0, false, 0);
        for _ in 0..k {
            match c % 3 {
                0 => {
                    p *= a;
                    missing = true;
                }
                1 => p *= (1.0 - a) * (1.0 - x),
                _ => {
                    p *= (1.0 - a) * x;
                    wrong += 1;
                }
            }
            c /= 3;
        }
        let slot = if missing { 0 } else if wrong % 2 == 1 { 2 } else { 1 };
        law[slot] += p;
    }
    law
}

/// Sums over channel value and every state (missing, erased, correct,
/// wrong) of the `dv - 1` extrinsic wires, applying `wrong_after` to the
/// counts (channel_wrong, agreeing, opposing).
fn enumerate_variable(
    x: f64,
    eps: f64,
    a: f64,
    dv: u32,
    dc: u32,
    wrong_after: impl Fn(bool, u32, u32) -> bool,
) -> f64 {
    let law = enumerate_check(x, a, dc);
    let k = dv - 1;
    let mut total = 0.0;
    for channel_wrong in [false, true] {
        for code in 0..4u32.pow(k) {
            let mut c = code;
            let mut p = if channel_wrong { eps } else { 1.0 - eps };
            let (mut correct, mut wrong) = (0, 0);
            for _ in 0..k {
                match c % 4 {
                    0 => p *= a,
                    1 => p *= (1.0 - a) * law[0],
                    2 => {
                        p *= (1.0 - a) * law[1];
                        correct += 1;
                    }
                    _ => {
                        p *= (1.0 - a) * law[2];
                        wrong += 1;
                    }
                }
                c /= 4;
            }
            let (agree, oppose) = if channel_wrong { (wrong, correct) } else { (correct, wrong) };
            if wrong_after(channel_wrong, agree, oppose) {
                total += p;
            }
        }
    }
    total
}

fn enumerate_b(x: f64, eps: f64, a: f64, dv: u32, dc: u32, b: u32) -> f64 {
    enumerate_variable(x, eps, a, dv, dc, |channel_wrong, _agree, oppose| {
        let flip = oppose >= b;
        channel_wrong != flip
    })
}

fn enumerate_a(x: f64, eps: f64, a: f64, dv: u32, dc: u32, keep: bool) -> f64 {
    let needed = if keep { 2 } else { 1 };
    enumerate_variable(x, eps, a, dv, dc, |channel_wrong, agree, oppose| {
        let flip = agree == 0 && oppose >= needed;
        channel_wrong != flip
    })
}

#[test]
fn fixpoint_examples() {
    let dd = reg(3, 6);
    let t = iterate_to_fixpoint(&DEParams::new(0.3, DecoderSpec::peeling(0.0), dd.clone())).unwrap();
    assert_eq!(t.xs[0], 0.3);
    assert!(t.converged);
    assert!(t.x_inf < 1e-12);
    for w in t.xs.windows(2) {
        assert!(w[1] <= w[0]);
    }

    let t = iterate_to_fixpoint(&DEParams::new(0.03, DecoderSpec::gallager_a(0.0), dd.clone())).unwrap();
    assert!(t.converged && t.x_inf < 1e-12);

    let mut p = DEParams::new(0.45, DecoderSpec::peeling(0.1), dd);
    p.convergence.max_iters = 3;
    let t = iterate_to_fixpoint(&p).unwrap();
    assert_eq!(t.iterations(), 3);
    assert!(!t.converged);
    assert_eq!(t.x_inf, t.xs[3]);
}

#[test]
fn fixpoint_rejects_bad_params() {
    let dd = reg(3, 6);
    assert!(iterate_to_fixpoint(&DEParams::new(0.5, DecoderSpec::peeling(0.0), dd.clone())).is_err());
    assert!(iterate_to_fixpoint(&DEParams::new(0.1, DecoderSpec::peeling(1.5), dd.clone())).is_err());
    let mut spec = DecoderSpec::gallager_b(0.0);
    spec.gb_threshold_b = Some(3);
    assert!(iterate_to_fixpoint(&DEParams::new(0.1, spec, dd)).is_err());
}

#[test]
fn peeling_grid_bounds() {
    let dd = reg(3, 6);
    for i in 0..50 {
        let eps = i as f64 * 0.01;
        for j in 0..=30 {
            let a = j as f64 * 0.01;
            let t = iterate_to_fixpoint(&DEParams::new(eps, DecoderSpec::peeling(a), dd.clone())).unwrap();
            assert!(t.x_inf <= eps, "x_inf {} > eps {eps} at alpha {a}", t.x_inf);
            for w in t.xs.windows(2) {
                assert!(w[1] <= w[0]);
            }
            if eps > 0.0 && a > 0.0 {
                let floor = eps * (1.0 - (1.0 - a) * (1.0 - a).powi(5)).powi(2);
                assert!(t.x_inf >= floor - 1e-10);
            }
        }
    }
}

#[test]
fn irregular_gallager_a_averages_degrees() {
    let dd = DegreeDistribution::new([(3, 0.4), (4, 0.6)], [(6, 1.0)]).unwrap();
    let spec = DecoderSpec::gallager_a(0.05);
    let (x, eps) = (0.04, 0.06);
    let got = step(x, eps, &spec, &dd).unwrap();
    let want = 0.4 * gallager_a_step(x, eps, 0.05, 3, 6, true, MassConvention::Literal).unwrap()
        + 0.6 * gallager_a_step(x, eps, 0.05, 4, 6, true, MassConvention::Literal).unwrap();
    assert!(close(got, want, 1e-15));
}

#[test]
fn alpha_zero_reduction() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1000 {
        let dv = rng.random_range(2..=8u32);
        let dc = rng.random_range(2..=12u32);
        let x: f64 = rng.random_range(0.0..=1.0);
        let eps: f64 = rng.random_range(0.0..0.5);
        let want_a = reference::gallager_a(x, eps, dv, dc);
        for conv in [MassConvention::Literal, MassConvention::EventComplete] {
            let got = gallager_a_step(x, eps, 0.0, dv, dc, false, conv).unwrap();
            assert!(close(got, want_a, 1e-12));
            if dv >= 3 {
                let got = gallager_a_step(x, eps, 0.0, dv, dc, true, conv).unwrap();
                assert!(close(got, want_a, 1e-12));
            }
        }
        for b in 1..dv {
            let got = gallager_b_step(x, eps, 0.0, dv, dc, b, MassConvention::EventComplete).unwrap();
            assert!(close(got, reference::gallager_b(x, eps, dv, dc, b), 1e-12));
        }
        let got = gallager_b_step(x, eps, 0.0, 3, dc, 2, MassConvention::Literal).unwrap();
        assert!(close(got, reference::gallager_b(x, eps, 3, dc, 2), 1e-12));
        let got = peeling_step(x, eps, 0.0, &reg(dv, dc)).unwrap();
        assert!(close(got, reference::peeling(x, eps, dv, dc), 1e-12));
    }
}

proptest! {
    #[test]
    fn check_probs_sum_to_one(x in 0.0f64..=1.0, a in 0.0f64..=1.0, dc in 2u32..=20) {
        let p = check_message_probs(x, a, &reg(3, dc)).unwrap();
        prop_assert!((p.p0 + p.p_plus + p.p_minus - 1.0).abs() <= 1e-12);
        prop_assert!(p.p0 >= 0.0 && p.p_plus >= 0.0 && p.p_minus >= -1e-16);
        if x <= 0.5 {
            prop_assert!(p.p_plus >= p.p_minus);
        }
    }

    #[test]
    fn peeling_monotone_in_each_argument(
        x in 0.0f64..=1.0, dx in 0.0f64..=1.0,
        e in 0.0f64..0.5, de in 0.0f64..0.5,
        a in 0.0f64..=1.0, da in 0.0f64..=1.0,
    ) {
        let dd = reg(3, 6);
        let x2 = (x + dx).min(1.0);
        let e2 = (e + de).min(0.4999);
        let a2 = (a + da).min(1.0);
        let f = |x, e, a| peeling_step(x, e, a, &dd).unwrap();
        prop_assert!(f(x, e, a) <= f(x2, e, a));
        prop_assert!(f(x, e, a) <= f(x, e2, a));
        prop_assert!(f(x, e, a) <= f(x, e, a2) + 1e-15);
        prop_assert!(f(x, e, a) <= e);
    }

    #[test]
    fn steps_stay_in_unit_interval(x in 0.0f64..=1.0, e in 0.0f64..0.5, a in 0.0f64..=1.0,
                                   dv in 2u32..=6, dc in 2u32..=10) {
        let dd = reg(dv, dc);
        for kind in [DecoderKind::Peeling, DecoderKind::GallagerA, DecoderKind::GallagerB] {
            for conv in [MassConvention::Literal, MassConvention::EventComplete] {
                let mut spec = DecoderSpec::new(kind, a);
                spec.gb_mass_convention = conv;
                spec.ga_mass_convention = conv;
                let v = step(x, e, &spec, &dd).unwrap();
                prop_assert!((0.0..=1.0).contains(&v));
                let raw = raw_step(x, e, a, &spec, &dd);
                prop_assert!(raw > -1e-12 && raw < 1.0 + 1e-12);
            }
        }
    }
}
