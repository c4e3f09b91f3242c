use axf::eval::{stage_relations, Evaluator, StageRel, Strategy as EvalStrategy, TruthAssignment, Universe};
use axf::logic::{check_stratified, derived_names, negative_occurrences, AxiomProgram, Stratum};
use axf::syntax::{parse_program, print_program};
use axf::transform::{
    eliminate_negative_occurrences, families_in, merge_to_single_stratum, normalize_stratum, TransformOptions,
};
use axf::verify::{generate_random_program, state_at, universe_for, Mode, RandomProfile};
use proptest::prelude::*;

fn profile() -> impl Strategy<Value = RandomProfile> {
    (1usize..=3, 1usize..=2, 0usize..=2, 1usize..=3, 0.0f64..0.6, 1usize..=2, 1usize..=3).prop_map(
        |(strata, preds_per_stratum, max_arity, body_depth, negation_rate, basic_preds, objects)| RandomProfile {
            strata,
            preds_per_stratum,
            max_arity,
            body_depth,
            negation_rate,
            basic_preds,
            objects,
        },
    )
}

fn instance() -> impl Strategy<Value = (AxiomProgram, u64)> {
    (profile(), any::<u64>(), any::<u64>())
        .prop_map(|(profile, seed, state)| (generate_random_program(&profile, seed).unwrap(), state))
}

fn setup(program: &AxiomProgram, size: usize, state: u64) -> (Universe, TruthAssignment) {
    let u = universe_for(program, size).unwrap();
    let s = state_at(program.signature(), &u, Mode::Sampled { count: 1, seed: state }, 0);
    (u, s)
}

fn restrict(s: &TruthAssignment, program: &AxiomProgram) -> Vec<String> {
    s.true_atoms_of(program.signature().iter().map(|p| p.name.as_str())).iter().map(|a| a.to_string()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn generated_programs_are_stratified((p, _) in instance()) {
        prop_assert!(check_stratified(&p).is_ok());
    }

    #[test]
    fn print_then_parse_is_identity((p, _) in instance()) {
        let printed = print_program(&p);
        let back = parse_program(&printed).unwrap();
        prop_assert_eq!(&back, &p);
        prop_assert_eq!(print_program(&back), printed);
    }

    #[test]
    fn evaluation_order_does_not_matter((p, state) in instance(), order in any::<u64>()) {
        let (u, s) = setup(&p, 3.min(p.objects().len()), state);
        let ev = Evaluator::new(&p, &u).unwrap();
        let reference = ev.extend(&s).unwrap();
        prop_assert_eq!(&ev.extend_with(&s, EvalStrategy::Shuffled(order)).unwrap().0, &reference);
        prop_assert_eq!(&ev.extend_with(&s, EvalStrategy::Staged).unwrap().0, &reference);
    }

    #[test]
    fn stages_are_sound_and_complements_hold((p, state) in instance()) {
        let (u, s) = setup(&p, 2.min(p.objects().len()), state);
        let ev = Evaluator::new(&p, &u).unwrap();
        let (ext, tables) = ev.extend_with(&s, EvalStrategy::Staged).unwrap();
        for t in &tables {
            for (i, pred) in t.predicates.iter().enumerate() {
                let rel = ext.relation(&pred.name).unwrap();
                for tuple in 0..t.tuple_count(i) {
                    let stage = t.stage(i, tuple);
                    prop_assert!(stage >= 1 && stage <= t.fixpoint + 1);
                    prop_assert_eq!(stage <= t.fixpoint, rel.get_index(tuple));
                }
            }
            let rels = stage_relations(t);
            for i in 0..t.predicates.len() {
                for j in 0..t.predicates.len() {
                    let get = |r| rels.get(r, i, j).unwrap();
                    for k in 0..get(StageRel::Lt).len() {
                        prop_assert_ne!(get(StageRel::Lt).get_index(k), get(StageRel::Nlt).get_index(k));
                        prop_assert_ne!(get(StageRel::Leq).get_index(k), get(StageRel::Nleq).get_index(k));
                    }
                }
            }
        }
    }

    #[test]
    fn normalization_preserves_meaning((p, state) in instance()) {
        let (signature, objects, strata) = p.clone().into_parts();
        let normalized: Vec<Stratum> = strata.iter().map(|s| Stratum::new(normalize_stratum(s).axioms())).collect();
        let q = AxiomProgram::new(signature, objects, normalized).unwrap();
        let (u, s) = setup(&p, 2.min(p.objects().len()), state);
        let a = Evaluator::new(&p, &u).unwrap().extend(&s).unwrap();
        let b = Evaluator::new(&q, &u).unwrap().extend(&s).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn transformation_preserves_meaning_and_polarity((p, state) in instance(), aux in any::<bool>()) {
        let (out, report) = eliminate_negative_occurrences(&p, TransformOptions { optimize_aux: aux, ..Default::default() }).unwrap();
        prop_assert!(negative_occurrences(&out, &derived_names(&out)).is_empty());
        prop_assert_eq!(families_in(&out).len(), report.families.len());
        let merged = merge_to_single_stratum(&out).unwrap();
        prop_assert!(check_stratified(&merged).is_ok());

        let (u, s) = setup(&p, 2.min(p.objects().len()), state);
        let expected = restrict(&Evaluator::new(&p, &u).unwrap().extend(&s).unwrap(), &p);
        prop_assert_eq!(&restrict(&Evaluator::new(&out, &u).unwrap().extend(&s).unwrap(), &p), &expected);
        prop_assert_eq!(&restrict(&Evaluator::new(&merged, &u).unwrap().extend(&s).unwrap(), &p), &expected);
    }

    #[test]
    fn stage_predicates_respect_arity_bound((p, _) in instance()) {
        let (out, report) = eliminate_negative_occurrences(&p, TransformOptions::default()).unwrap();
        for fam in &report.families {
            let r = fam.predicates.iter().map(|n| p.signature().get(n).unwrap().arity).max().unwrap();
            for name in &fam.stage_predicates {
                prop_assert!(out.signature().get(name).unwrap().arity <= 2 * r);
            }
        }
    }

    #[test]
    fn auxiliary_predicates_do_not_change_stage_relations((p, state) in instance()) {
        let (plain, _) = eliminate_negative_occurrences(&p, TransformOptions::default()).unwrap();
        let (aux, _) = eliminate_negative_occurrences(&p, TransformOptions { optimize_aux: true, ..Default::default() }).unwrap();
        let (u, s) = setup(&p, 2.min(p.objects().len()), state);
        let a = Evaluator::new(&plain, &u).unwrap().extend(&s).unwrap();
        let b = Evaluator::new(&aux, &u).unwrap().extend(&s).unwrap();
        prop_assert_eq!(restrict(&a, &p), restrict(&b, &p));
        let mut fa = families_in(&plain);
        let mut fb = families_in(&aux);
        fa.sort_by_key(|f| f.stratum);
        fb.sort_by_key(|f| f.stratum);
        prop_assert_eq!(fa.len(), fb.len());
        for (x, y) in fa.iter().zip(&fb) {
            prop_assert_eq!(x.stratum, y.stratum);
            for rel in StageRel::ALL {
                for i in 0..x.m() {
                    for j in 0..x.m() {
                        prop_assert_eq!(a.relation(&x.name(rel, i, j)), b.relation(&y.name(rel, i, j)));
                    }
                }
            }
        }
    }

    #[test]
    fn transformation_is_idempotent((p, _) in instance()) {
        let (once, _) = eliminate_negative_occurrences(&p, TransformOptions::default()).unwrap();
        let (twice, report) = eliminate_negative_occurrences(&once, TransformOptions::default()).unwrap();
        prop_assert_eq!(twice, once);
        prop_assert!(report.replacements.is_empty());
    }
}
