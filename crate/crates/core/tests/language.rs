mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::oracle::{brute_force_difference, determinized_size};
use common::{random_network, Shape};
use ta_repair::admissibility::{build_untimed, equivalent, shared_semantics, AdmissibilityOptions, Equivalence, UntimedAutomaton};
use ta_repair::model::desugar_urgency;
use ta_repair::region::region_automaton;
use ta_repair::seed::seed;
use ta_repair::variation::VariationKind;
use ta_repair::{Network, Property};

fn small_shape(rng: &mut ChaCha8Rng) -> Shape {
    Shape {
        automata: 1,
        clocks: rng.gen_range(1..=3),
        locations: 4,
        transitions: 5,
        max_constant: 3,
        labels: 2,
        urgent: true,
    }
}

fn opts() -> AdmissibilityOptions {
    AdmissibilityOptions {
        visible_internal: true,
        ..Default::default()
    }
}

fn zone_and_region(n: &Network, p: &Property) -> (UntimedAutomaton, UntimedAutomaton) {
    let sem = shared_semantics(&[n], &[p]).unwrap().remove(0);
    let z = build_untimed(&sem, opts()).unwrap();
    let r = region_automaton(&sem, true, 500_000).unwrap();
    (z, r)
}

#[test]
fn zone_graph_and_region_automaton_accept_the_same_words() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for i in 0..50 {
        let shape = small_shape(&mut rng);
        let (n, p) = random_network(&mut rng, shape);
        let (z, r) = zone_and_region(&n, &p);
        assert_eq!(equivalent(&z, &r, 1_000_000).unwrap(), Equivalence::Equal, "model {i}");
    }
}

#[test]
fn equivalence_agrees_with_word_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(81);
    let (mut compared, mut too_large) = (0, 0);
    while compared < 50 {
        let shape = small_shape(&mut rng);
        let (n, p) = random_network(&mut rng, shape);
        let mutants = seed(&n, &p, &VariationKind::ALL);
        let m = &mutants[rng.gen_range(0..mutants.len())].network;
        let sems = shared_semantics(&[&n, m], &[&p]).unwrap();
        let a = build_untimed(&sems[0], opts()).unwrap();
        let b = build_untimed(&sems[1], opts()).unwrap();
        let bound = determinized_size(&a) * determinized_size(&b);
        // Pairs whose word tree is too wide for enumeration are drawn again.
        let Ok(brute) = brute_force_difference(&a, &b, bound, 200_000) else {
            too_large += 1;
            continue;
        };
        let verdict = equivalent(&a, &b, 1_000_000).unwrap();
        match (&verdict, &brute) {
            (Equivalence::Equal, None) => {}
            (Equivalence::Witness(w), Some(v)) => {
                assert_eq!(w.len(), v.len(), "witness is not shortest");
                assert_ne!(a.accepts(w), b.accepts(w));
            }
            _ => panic!("verdict {verdict:?} but enumeration found {brute:?}"),
        }
        compared += 1;
    }
    assert!(too_large <= 5, "{too_large} pairs could not be enumerated");
}

#[test]
fn equivalence_is_reflexive_and_symmetric() {
    let mut rng = ChaCha8Rng::seed_from_u64(82);
    for _ in 0..30 {
        let shape = small_shape(&mut rng);
        let (n1, p1) = random_network(&mut rng, shape);
        let (n2, p2) = random_network(&mut rng, shape);
        let sems = shared_semantics(&[&n1, &n2], &[&p1, &p2]).unwrap();
        let a = build_untimed(&sems[0], opts()).unwrap();
        let b = build_untimed(&sems[1], opts()).unwrap();
        assert_eq!(equivalent(&a, &a, 1_000_000).unwrap(), Equivalence::Equal);
        let ab = equivalent(&a, &b, 1_000_000).unwrap();
        let ba = equivalent(&b, &a, 1_000_000).unwrap();
        assert_eq!(ab, ba);
        if let Equivalence::Witness(w) = ab {
            assert_ne!(a.accepts(&w), b.accepts(&w));
        }
    }
}

#[test]
fn urgency_desugaring_keeps_the_language() {
    let mut rng = ChaCha8Rng::seed_from_u64(83);
    let mut with_urgency = 0;
    for _ in 0..60 {
        let mut shape = small_shape(&mut rng);
        shape.clocks = rng.gen_range(1..=2);
        let (n, p) = random_network(&mut rng, shape);
        if !n.has_urgent_locations() {
            continue;
        }
        with_urgency += 1;
        let d = desugar_urgency(&n);
        assert!(!d.has_urgent_locations());
        let s1 = shared_semantics(&[&n], &[&p]).unwrap().remove(0);
        let s2 = shared_semantics(&[&d], &[&p]).unwrap().remove(0);
        let r1 = region_automaton(&s1, true, 500_000).unwrap();
        let r2 = region_automaton(&s2, true, 500_000).unwrap();
        assert_eq!(equivalent(&r1, &r2, 1_000_000).unwrap(), Equivalence::Equal);
    }
    assert!(with_urgency >= 10);
}
