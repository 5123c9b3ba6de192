//! Algebraic invariants of behaviors, functionals and the quantum family.

use proptest::prelude::*;
use svetshare::behavior::{parity_box, Behavior, RelabelSpec, Scenario};
use svetshare::inequality::{decompose_svetlichny, evaluate, mermin3, svetlichny3, BellFunctional};
use svetshare::num::{q, Rational, Value};
use svetshare::quantum::svetlichny_optimal_behavior;

fn exact(v: Value) -> Rational {
    v.as_exact().cloned().expect("exact value")
}

/// Arbitrary exact table: each setting block gets its own positive weights.
fn table(weights: &[u8]) -> Behavior {
    let sc = Scenario::binary(3);
    Behavior::from_fn(sc.clone(), |o, s| {
        let block = &weights[sc.setting_index(s) * 8..][..8];
        let total: i64 = block.iter().map(|&w| w as i64 + 1).sum();
        q(block[sc.outcome_index(o)] as i64 + 1, total)
    })
    .unwrap()
}

/// Exact non-signaling box: a rational mixture of a deterministic box and a parity box.
fn nonsignaling(det: [[usize; 2]; 3], parity: u8, w: (i64, i64)) -> Behavior {
    let sc = Scenario::binary(3);
    let local =
        Behavior::from_fn(sc.clone(), |o, s| if (0..3).all(|k| o[k] == det[k][s[k]]) { q(1, 1) } else { q(0, 1) })
            .unwrap();
    let nl = parity_box(3, |s| ((parity >> sc.setting_index(s)) & 1) as usize);
    Behavior::mix(&local, &nl, &Value::ratio(w.0, w.1)).unwrap()
}

fn relabeling(perm: usize, settings: [bool; 3], outcomes: [[bool; 2]; 3]) -> RelabelSpec {
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let flip = |f: bool| if f { vec![1, 0] } else { vec![0, 1] };
    RelabelSpec {
        party_perm: PERMS[perm].to_vec(),
        setting_perms: settings.iter().map(|&f| flip(f)).collect(),
        outcome_perms: outcomes.iter().map(|o| o.iter().map(|&f| flip(f)).collect()).collect(),
    }
}

fn functionals() -> Vec<BellFunctional> {
    vec![svetlichny3(), mermin3()]
}

prop_compose! {
    fn arb_table()(w in prop::collection::vec(0u8..6, 64)) -> Behavior { table(&w) }
}

prop_compose! {
    fn arb_ns()(
        det in prop::array::uniform3(prop::array::uniform2(0usize..2)),
        parity in any::<u8>(),
        n in 0i64..=8,
    ) -> Behavior { nonsignaling(det, parity, (n, 8)) }
}

prop_compose! {
    fn arb_relabel()(
        perm in 0usize..6,
        settings in prop::array::uniform3(any::<bool>()),
        outcomes in prop::array::uniform3(prop::array::uniform2(any::<bool>())),
    ) -> RelabelSpec { relabeling(perm, settings, outcomes) }
}

fn weight() -> impl Strategy<Value = Rational> {
    (0i64..=12).prop_map(|n| q(n, 12))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn mixing_composes(a in arb_table(), b in arb_table(), v in weight(), w in weight()) {
        let inner = Behavior::mix(&a, &b, &Value::Exact(v.clone())).unwrap();
        let nested = Behavior::mix(&inner, &b, &Value::Exact(w.clone())).unwrap();
        let direct = Behavior::mix(&a, &b, &Value::Exact(&v * &w)).unwrap();
        prop_assert_eq!(nested, direct);
    }

    #[test]
    fn evaluation_is_affine_under_mixing(a in arb_table(), b in arb_table(), v in weight()) {
        let mixed = Behavior::mix(&a, &b, &Value::Exact(v.clone())).unwrap();
        for f in functionals() {
            let lhs = exact(evaluate(&f, &mixed).unwrap());
            let fa = exact(evaluate(&f, &a).unwrap());
            let fb = exact(evaluate(&f, &b).unwrap());
            prop_assert_eq!(lhs, &v * fa + (q(1, 1) - &v) * fb);
        }
    }

    #[test]
    fn relabeling_is_a_group_action(b in arb_table(), s in arb_relabel(), t in arb_relabel()) {
        let sc = b.scenario().clone();
        let stepwise = b.relabel(&s).unwrap().relabel(&t).unwrap();
        let composed = b.relabel(&s.then(&t, &sc).unwrap()).unwrap();
        prop_assert_eq!(&stepwise, &composed);
        let back = b.relabel(&s).unwrap().relabel(&s.inverse(&sc).unwrap()).unwrap();
        prop_assert_eq!(&back, &b);
        prop_assert_eq!(b.relabel(&RelabelSpec::identity(&sc)).unwrap(), b);
    }

    #[test]
    fn relabeling_both_sides_preserves_values(b in arb_table(), s in arb_relabel()) {
        for f in functionals() {
            let moved = evaluate(&f.relabel(&s).unwrap(), &b.relabel(&s).unwrap()).unwrap();
            prop_assert_eq!(moved, evaluate(&f, &b).unwrap());
        }
    }

    #[test]
    fn relabeling_preserves_nonsignaling(b in arb_ns(), s in arb_relabel()) {
        prop_assert!(b.is_nonsignaling(0.0));
        prop_assert!(b.relabel(&s).unwrap().is_nonsignaling(0.0));
    }

    #[test]
    fn conditional_decomposition_reproduces_the_value(b in arb_ns(), s in arb_relabel()) {
        for box_ in [b.clone(), b.relabel(&s).unwrap()] {
            let d = decompose_svetlichny(&box_).unwrap();
            prop_assert_eq!(d.discrepancy(), Value::int(0));
            prop_assert_eq!(&d.coefficient_value, &evaluate(&svetlichny3(), &box_).unwrap());
        }
    }

    #[test]
    fn noisy_optimal_quantum_value_is_linear_in_visibility(v in 0.0f64..=1.0) {
        let value = evaluate(&svetlichny3(), &svetlichny_optimal_behavior(v).unwrap()).unwrap().to_f64();
        prop_assert!((value - 4.0 * 2f64.sqrt() * v).abs() < 1e-9, "{} at v = {}", value, v);
    }
}
