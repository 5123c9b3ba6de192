use std::collections::BTreeSet;

use num_integer::Integer;
use num_traits::Zero;
use proptest::prelude::*;
use svetshare::num::{qi, Rational};
use svetshare::polytope::*;

const GOLDEN: &str = include_str!("../data/facets_either_model.json");

fn either() -> (VRep, HRep) {
    let v = enumerate_vertices(CausalModel::Either);
    let h = facets(&v).unwrap();
    (v, h)
}

fn det(m: &[Vec<i64>]) -> i64 {
    if m.len() == 1 {
        return m[0][0];
    }
    (0..m.len())
        .map(|j| {
            let minor: Vec<Vec<i64>> = m[1..]
                .iter()
                .map(|r| r.iter().enumerate().filter(|&(k, _)| k != j).map(|(_, &x)| x).collect())
                .collect();
            let sign = if j % 2 == 0 { 1 } else { -1 };
            sign * m[0][j] * det(&minor)
        })
        .sum()
}

/// Facets by brute force: every hyperplane through `d` vertices that leaves
/// all vertices on one side.
fn brute_force_facets(points: &[Vec<i64>]) -> BTreeSet<Facet> {
    let d = points[0].len();
    let mut out = BTreeSet::new();
    let idx: Vec<usize> = (0..points.len()).collect();
    for subset in combinations(&idx, d) {
        let rows: Vec<Vec<i64>> =
            subset.iter().map(|&i| std::iter::once(1).chain(points[i].iter().copied()).collect()).collect();
        // generalized cross product of the d homogenized rows
        let n: Vec<i64> = (0..=d)
            .map(|j| {
                let minor: Vec<Vec<i64>> = rows
                    .iter()
                    .map(|r| r.iter().enumerate().filter(|&(k, _)| k != j).map(|(_, &x)| x).collect())
                    .collect();
                if j % 2 == 0 {
                    det(&minor)
                } else {
                    -det(&minor)
                }
            })
            .collect();
        if n.iter().all(|&x| x == 0) {
            continue;
        }
        let side: Vec<i64> =
            points.iter().map(|p| n[0] + p.iter().zip(&n[1..]).map(|(a, b)| a * b).sum::<i64>()).collect();
        let sign = if side.iter().all(|&s| s >= 0) {
            1
        } else if side.iter().all(|&s| s <= 0) {
            -1
        } else {
            continue;
        };
        let g = n.iter().fold(0i64, |acc, x| acc.gcd(x));
        out.insert(Facet { normal: n[1..].iter().map(|&c| -sign * c / g).collect(), offset: sign * n[0] / g });
    }
    out
}

fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for (i, &x) in items.iter().enumerate() {
        for mut rest in combinations(&items[i + 1..], k - 1) {
            rest.insert(0, x);
            out.push(rest);
        }
    }
    out
}

fn as_ints(v: &VRep) -> Vec<Vec<i64>> {
    v.vertices.iter().map(|p| p.iter().map(|x| x.to_integer().try_into().unwrap()).collect()).collect()
}

#[test]
fn either_model_has_forty_eight_facets() {
    let (_, h) = either();
    assert_eq!(h.len(), 48);
    assert_eq!(h.trivial_count(), 16);
}

#[test]
fn either_facets_match_golden_file() {
    let (_, h) = either();
    assert_eq!(HRep::from_json_str(GOLDEN).unwrap(), h);
    assert_eq!(h.to_json_string(), GOLDEN);
}

#[test]
fn nontrivial_facets_are_the_svetlichny_orbit() {
    let (_, h) = either();
    let nontrivial: BTreeSet<Facet> = h.nontrivial().into_iter().cloned().collect();
    assert_eq!(nontrivial, orbit(&svetlichny_facet(), &either_model_symmetries()));
}

#[test]
fn facet_list_is_closed_under_symmetries() {
    let (_, h) = either();
    assert!(symmetry_defects(&h, &either_model_symmetries()).is_empty());
}

#[test]
fn symmetries_preserve_the_vertex_set() {
    let (v, _) = either();
    for g in either_model_symmetries() {
        for p in &v.vertices {
            assert!(v.contains_vertex(&g.apply_point(p)), "{}", g.name);
        }
    }
}

#[test]
fn every_facet_is_supported_by_a_full_affine_basis() {
    let (v, h) = either();
    for f in &h.facets {
        assert!(v.vertices.iter().all(|p| f.is_satisfied_by(p)), "{f}");
        assert_eq!(f.support_rank(&v), 8, "{f}");
    }
}

#[test]
fn either_vertices_satisfy_every_svetlichny_symmetry() {
    let (v, _) = either();
    for f in orbit(&svetlichny_facet(), &either_model_symmetries()) {
        assert!(v.vertices.iter().all(|p| f.is_satisfied_by(p)));
    }
}

#[test]
fn facet_round_trip_recovers_the_vertices() {
    for model in [CausalModel::UntrustedAlice, CausalModel::Either] {
        let v = enumerate_vertices(model);
        let back = vertices_from_hrep(&facets(&v).unwrap()).unwrap();
        assert_eq!(back.vertices, v.vertices, "{model}");
    }
}

#[test]
fn bipartite_facets_match_brute_force() {
    let v = bipartite_local_vertices();
    let h = facets(&v).unwrap();
    let expect = brute_force_facets(&as_ints(&v));
    assert_eq!(h.facets.iter().cloned().collect::<BTreeSet<_>>(), expect);
    assert_eq!((h.len(), h.trivial_count()), (16, 8));
    assert_eq!(vertices_from_hrep(&h).unwrap().vertices, v.vertices);
}

#[test]
fn local_strategies_are_untrusted_alice_strategies() {
    let local = enumerate_vertices(CausalModel::Local);
    let alice = enumerate_vertices(CausalModel::UntrustedAlice);
    let bob = enumerate_vertices(CausalModel::UntrustedBob);
    for p in &local.vertices {
        assert!(alice.contains_vertex(p) && bob.contains_vertex(p));
    }
}

#[test]
fn vertex_enumeration_is_deterministic() {
    assert_eq!(enumerate_vertices(CausalModel::Either), enumerate_vertices(CausalModel::Either));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// The facet description and the membership LP agree on rational points.
    #[test]
    fn membership_agrees_with_facets(coords in proptest::collection::vec(-4i64..=4, 8)) {
        let (v, h) = either();
        let p: Vec<Rational> = coords.iter().map(|&c| qi(c) / qi(3)).collect();
        let m = membership(&p, &v).unwrap();
        prop_assert_eq!(m.is_inside(), h.contains(&p));
        match m {
            Membership::Inside { weights } => {
                for i in 0..8 {
                    let s = weights.iter().zip(&v.vertices).fold(Rational::zero(), |a, (w, x)| a + w * &x[i]);
                    prop_assert_eq!(&s, &p[i]);
                }
            }
            Membership::Outside { hyperplane, violation, is_facet } => {
                prop_assert!(is_facet);
                prop_assert!(h.facets.contains(&hyperplane));
                prop_assert_eq!(hyperplane.violation(&p), violation);
            }
        }
    }
}
