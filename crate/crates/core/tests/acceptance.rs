//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use axf::eval::{stage_relations, Evaluator, StageRel, Strategy, TruthAssignment, Universe};
use axf::logic::{check_stratified, derived_names, negative_occurrences, AxiomProgram, Formula, Term};
use axf::syntax::parse_program;
use axf::transform::{
    compute_metrics, eliminate_negative_occurrences, merge_to_single_stratum, Mutation, TransformOptions,
};
use axf::verify::{
    fit_power_law, generate_random_program, state_at, universe_for, Check, Mode, RandomProfile, VerificationPlan,
    Verifier,
};

const PATH: &str = include_str!("../../cli/tests/data/path.axp");
const GOLDEN: &str = include_str!("golden/path_transformed.axp");
const RANDOM_PROGRAMS: u64 = 100;

struct Outcome {
    pass: bool,
    detail: String,
}

fn pass(detail: impl Into<String>) -> Outcome {
    Outcome { pass: true, detail: detail.into() }
}

fn fail(detail: impl Into<String>) -> Outcome {
    Outcome { pass: false, detail: detail.into() }
}

fn path_program() -> AxiomProgram {
    parse_program(PATH).expect("path program parses")
}

fn transformed_path() -> AxiomProgram {
    eliminate_negative_occurrences(&path_program(), TransformOptions::default()).unwrap().0
}

/// Edge set of the `k`-th graph over `n` objects: bit `a*n+b` is edge (a,b).
fn edges(k: u64, n: usize) -> Vec<Vec<bool>> {
    (0..n).map(|a| (0..n).map(|b| k >> (a * n + b) & 1 == 1).collect()).collect()
}

fn graph_state(program: &AxiomProgram, universe: &Universe, e: &[Vec<bool>]) -> TruthAssignment {
    let mut s = TruthAssignment::basic(program.signature(), universe);
    let rel = s.relation_mut("E").unwrap();
    for (a, row) in e.iter().enumerate() {
        for (b, &on) in row.iter().enumerate() {
            rel.set(&[a, b], on);
        }
    }
    s
}

/// Shortest walk length from a to b, 0 when unreachable. This is the stage
/// at which path(a,b) appears in snapshot iteration.
fn shortest_walks(e: &[Vec<bool>]) -> Vec<Vec<u32>> {
    let n = e.len();
    let mut dist = vec![vec![0u32; n]; n];
    for a in 0..n {
        let mut frontier: Vec<usize> = (0..n).filter(|&b| e[a][b]).collect();
        let mut len = 1;
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for b in frontier {
                if dist[a][b] == 0 {
                    dist[a][b] = len;
                    next.extend((0..n).filter(|&c| e[b][c]));
                }
            }
            len += 1;
            frontier = next;
        }
    }
    dist
}

/// Warshall closure.
fn closure(e: &[Vec<bool>]) -> Vec<Vec<bool>> {
    let n = e.len();
    let mut c = e.to_vec();
    for k in 0..n {
        for a in 0..n {
            for b in 0..n {
                c[a][b] = c[a][b] || (c[a][k] && c[k][b]);
            }
        }
    }
    c
}

fn criterion1() -> Outcome {
    let golden = parse_program(GOLDEN).expect("golden file parses");
    let out = transformed_path();
    if out.signature() != golden.signature() {
        return fail("signature differs from golden file");
    }
    let (g, o) = (&golden.strata()[0].axioms(), &out.strata()[0].axioms());
    if g.len() != 6 || o.len() != 6 {
        return fail(format!("stratum 1 has {} axioms, golden {}", o.len(), g.len()));
    }
    for (k, (a, b)) in o.iter().zip(g.iter()).enumerate() {
        if !a.alpha_eq(b) {
            return fail(format!("axiom {} differs from golden:\n  got    {a}\n  golden {b}", k + 1));
        }
    }
    let expected = Formula::forall(
        vec!["x".into()],
        Formula::not(Formula::not(Formula::atom(
            "nleq__path__path__r1",
            vec![Term::var("x"), Term::var("x"), Term::var("x"), Term::var("x")],
        ))),
    );
    let acyclic = &out.strata()[1].axioms()[0];
    if !acyclic.alpha_eq(&golden.strata()[1].axioms()[0]) || acyclic.body != expected {
        return fail(format!("acyclic axiom is {acyclic}"));
    }
    pass("5 stage axioms and the acyclic axiom match the golden file modulo renaming")
}

fn criterion2() -> Outcome {
    let p = path_program();
    let t = transformed_path();
    let u = Universe::new(p.objects().to_vec()).unwrap();
    let ev = Evaluator::new(&t, &u).unwrap();
    for k in 0..512u64 {
        let e = edges(k, 3);
        let ext = ev.extend(&graph_state(&p, &u, &e)).unwrap();
        let path = ext.relation("path").unwrap();
        let nleq = ext.relation("nleq__path__path__r1").unwrap();
        let reach = closure(&e);
        for a in 0..3 {
            for b in 0..3 {
                let diag = nleq.get(&[a, b, a, b]);
                if path.get(&[a, b]) != reach[a][b] || reach[a][b] == diag {
                    return fail(format!("edge set #{k}, tuple ({a},{b}): path {} closure {} nleq {diag}", path.get(&[a, b]), reach[a][b]));
                }
            }
        }
    }
    let theorem = Verifier::new(&p, Some(&t))
        .unwrap()
        .run(&VerificationPlan::exhaustive(vec![1, 2, 3], vec![Check::Theorem2]))
        .unwrap();
    if let Some(r) = theorem.iter().find(|r| !r.ok()) {
        return fail(format!("verifier: {:?}", r.counterexample));
    }
    pass("512 edge sets x 9 tuples: path <=> not nleq(a,a) and path = transitive closure; prefix program agrees")
}

fn criterion3() -> Outcome {
    let p = path_program();
    let t = transformed_path();
    let u = Universe::new(p.objects().to_vec()).unwrap();
    let orig = Evaluator::new(&p, &u).unwrap();
    let ev = Evaluator::new(&t, &u).unwrap();
    let idx = |a: usize, b: usize, c: usize, d: usize| ((a * 3 + b) * 3 + c) * 3 + d;
    for k in 0..512u64 {
        let e = edges(k, 3);
        let basic = graph_state(&p, &u, &e);
        let ext = ev.extend(&basic).unwrap();
        let dist = shortest_walks(&e);
        let f = dist.iter().flatten().copied().max().unwrap_or(0);
        let stage = |a: usize, b: usize| if dist[a][b] == 0 { f + 1 } else { dist[a][b] };
        let (_, tables) = orig.extend_with(&basic, Strategy::Staged).unwrap();
        if tables[0].fixpoint != f {
            return fail(format!("edge set #{k}: evaluator f {} vs shortest walks {f}", tables[0].fixpoint));
        }
        let library = stage_relations(&tables[0]);
        for rel in StageRel::ALL {
            let derived = ext.relation(&format!("{}__path__path__r1", rel.name())).unwrap();
            let lib = library.get(rel, 0, 0).unwrap();
            for a in 0..3 {
                for b in 0..3 {
                    for c in 0..3 {
                        for d in 0..3 {
                            let (s, s2) = (stage(a, b), stage(c, d));
                            let oracle = match rel {
                                StageRel::Lt => s < s2,
                                StageRel::Leq => s <= s2 && s <= f,
                                StageRel::Nlt => s >= s2,
                                StageRel::Nleq => s > s2 || s == f + 1,
                                StageRel::Tri => s + 1 == s2,
                            };
                            let i = idx(a, b, c, d);
                            if derived.get_index(i) != oracle || lib.get_index(i) != oracle {
                                return fail(format!(
                                    "edge set #{k}, {rel}(({a},{b}),({c},{d})): oracle {oracle}, axioms {}, stage table {}",
                                    derived.get_index(i),
                                    lib.get_index(i)
                                ));
                            }
                        }
                    }
                }
            }
        }
    }
    pass("512 edge sets: all 5 relations x 81 tuple pairs equal the shortest-walk stage oracle")
}

fn random_programs() -> Vec<AxiomProgram> {
    (0..RANDOM_PROGRAMS).map(|seed| generate_random_program(&RandomProfile::default(), seed).unwrap()).collect()
}

fn criterion4(programs: &[AxiomProgram]) -> Outcome {
    let p = path_program();
    let t = transformed_path();
    let u = Universe::new(p.objects().to_vec()).unwrap();
    let (a, b) = (Evaluator::new(&p, &u).unwrap(), Evaluator::new(&t, &u).unwrap());
    for k in 0..512u64 {
        let e = edges(k, 3);
        let basic = graph_state(&p, &u, &e);
        let (x, y) = (a.extend(&basic).unwrap(), b.extend(&basic).unwrap());
        let acyclic = !closure(&e).iter().enumerate().any(|(i, row)| row[i]);
        if x.true_atoms_of(["path", "acyclic"]) != y.true_atoms_of(["path", "acyclic"])
            || x.relation("acyclic").unwrap().get(&[]) != acyclic
        {
            return fail(format!("path program differs on edge set #{k}"));
        }
    }
    let mut states = 0;
    for (seed, prog) in programs.iter().enumerate() {
        let plan = VerificationPlan::exhaustive(vec![2], vec![Check::Equivalence]);
        let reports = match Verifier::new(prog, None).and_then(|mut v| v.run(&plan)) {
            Ok(r) => r,
            Err(e) => return fail(format!("random program {seed}: {e}")),
        };
        for r in reports {
            states += r.states_tested;
            if !r.ok() {
                return fail(format!("random program {seed}: {}", r.counterexample.unwrap()));
            }
        }
    }
    pass(format!("path program: 512/512 states; {RANDOM_PROGRAMS} random programs: {states} two-object states, 0 mismatches"))
}

fn criterion5(programs: &[AxiomProgram]) -> Outcome {
    let mut all = vec![path_program()];
    all.extend(programs.iter().cloned());
    for (k, prog) in all.iter().enumerate() {
        for aux in [false, true] {
            let (out, _) = eliminate_negative_occurrences(prog, TransformOptions { optimize_aux: aux, ..Default::default() }).unwrap();
            let merged = match merge_to_single_stratum(&out) {
                Ok(m) => m,
                Err(e) => return fail(format!("program {k}: merge refused: {e}")),
            };
            for (label, q) in [("transformed", &out), ("merged", &merged)] {
                let neg = negative_occurrences(q, &derived_names(q));
                if !neg.is_empty() {
                    return fail(format!("program {k} {label}: {}", neg[0]));
                }
                if let Err(e) = check_stratified(q) {
                    return fail(format!("program {k} {label}: {e}"));
                }
            }
        }
    }
    pass(format!("{} programs x 2 generation modes: 0 negative derived occurrences, stratified before and after merge", all.len()))
}

fn criterion6(programs: &[AxiomProgram]) -> Outcome {
    let mut all = vec![path_program()];
    all.extend(programs.iter().cloned());
    let mut points = Vec::new();
    let mut families = 0;
    for (k, prog) in all.iter().enumerate() {
        for aux in [false, true] {
            let (out, report) =
                eliminate_negative_occurrences(prog, TransformOptions { optimize_aux: aux, ..Default::default() }).unwrap();
            let added = out.signature().len() - prog.signature().len();
            let mut expected = 0;
            for fam in &report.families {
                let m = fam.predicates.len();
                let want = 5 * m * m + if aux { 1 + m } else { 0 };
                if fam.stage_predicates.len() != want {
                    return fail(format!("program {k}: family has {} predicates, expected {want}", fam.stage_predicates.len()));
                }
                expected += want;
                let r = fam.predicates.iter().map(|p| prog.signature().get(p).unwrap().arity).max().unwrap_or(0);
                for name in &fam.stage_predicates {
                    let arity = out.signature().get(name).unwrap().arity;
                    if arity > 2 * r {
                        return fail(format!("program {k}: {name} has arity {arity} > 2r = {}", 2 * r));
                    }
                }
            }
            if added != expected {
                return fail(format!("program {k}: signature grew by {added}, expected {expected}"));
            }
            if !aux {
                families += report.families.len();
                let (q_in, q_out) = (compute_metrics(prog).total as f64, compute_metrics(&out).total as f64);
                if q_out > q_in.powi(4) {
                    return fail(format!("program {k}: Q_out {q_out} exceeds Q_in^4 with Q_in {q_in}"));
                }
                if !report.families.is_empty() {
                    points.push((q_in, q_out));
                }
            }
        }
    }
    let fit = match fit_power_law(&points) {
        Some((e, c)) => format!("fitted Q_out ~ {c:.2} * Q_in^{e:.2}"),
        None => "too few transformed programs for a fit".into(),
    };
    pass(format!("{families} families, each exactly 5m^2 (+1+m aux), arity <= 2r, all Q_out <= Q_in^4; {fit}"))
}

fn criterion7() -> Outcome {
    let mut instances: Vec<(AxiomProgram, usize)> = vec![(path_program(), 3), (transformed_path(), 3)];
    for seed in 0..8 {
        let prog = generate_random_program(&RandomProfile { objects: 3, ..RandomProfile::default() }, 500 + seed).unwrap();
        let out = eliminate_negative_occurrences(&prog, TransformOptions::default()).unwrap().0;
        instances.push((if seed % 2 == 0 { prog } else { out }, if seed % 2 == 0 { 3 } else { 2 }));
    }
    for (k, (prog, size)) in instances.iter().enumerate() {
        let u = universe_for(prog, *size).unwrap();
        let ev = Evaluator::new(prog, &u).unwrap();
        let basic = state_at(prog.signature(), &u, Mode::Sampled { count: 1, seed: 42 }, k as u64);
        let reference = ev.extend(&basic).unwrap();
        if ev.extend_with(&basic, Strategy::Staged).unwrap().0 != reference {
            return fail(format!("instance {k}: staged evaluation differs"));
        }
        for seed in 0..20 {
            if ev.extend_with(&basic, Strategy::Shuffled(seed)).unwrap().0 != reference {
                return fail(format!("instance {k}: order seed {seed} differs"));
            }
        }
    }
    pass("10 instances x 20 random orders (plus staged) produce identical extensions")
}

fn criterion8() -> Outcome {
    let p = path_program();
    let checks = vec![Check::Theorem1, Check::Theorem2, Check::Equivalence];
    let mut detected = Vec::new();
    let mutations = [Mutation::Eq1, Mutation::Eq2, Mutation::Eq3, Mutation::Eq4, Mutation::Eq5];
    for m in mutations {
        let bad = eliminate_negative_occurrences(&p, TransformOptions { mutation: Some(m), ..Default::default() }).unwrap().0;
        let reports = Verifier::new(&p, Some(&bad)).unwrap().run(&VerificationPlan::exhaustive(vec![1, 2, 3], checks.clone())).unwrap();
        let caught: BTreeSet<String> = reports.iter().filter(|r| !r.ok()).map(|r| r.check.to_string()).collect();
        if !caught.is_empty() {
            detected.push(format!("{m} by {}", caught.into_iter().collect::<Vec<_>>().join("+")));
        }
    }
    let line = format!("{}/5 detected: {}", detected.len(), detected.join(", "));
    if detected.len() == mutations.len() {
        pass(line)
    } else {
        fail(line)
    }
}

fn main() -> ExitCode {
    let programs = random_programs();
    let criteria: Vec<(u32, &str, Duration, Box<dyn Fn() -> Outcome + '_>)> = vec![
        (1, "golden example", Duration::from_secs(1), Box::new(criterion1)),
        (2, "replacement soundness on 512 states", Duration::from_secs(60), Box::new(criterion2)),
        (3, "stage axioms equal stage oracle", Duration::from_secs(120), Box::new(criterion3)),
        (4, "end-to-end equivalence", Duration::from_secs(300), Box::new(|| criterion4(&programs))),
        (5, "polarity lint", Duration::from_secs(300), Box::new(|| criterion5(&programs))),
        (6, "blow-up accounting", Duration::from_secs(120), Box::new(|| criterion6(&programs))),
        (7, "order independence", Duration::from_secs(60), Box::new(criterion7)),
        (8, "mutation sensitivity", Duration::from_secs(300), Box::new(criterion8)),
    ];
    let mut failed = 0;
    for (n, name, budget, run) in criteria {
        let start = Instant::now();
        let mut outcome = run();
        let took = start.elapsed();
        if took > budget {
            outcome = fail(format!("{} (took {:.2}s, budget {}s)", outcome.detail, took.as_secs_f64(), budget.as_secs()));
        }
        println!(
            "criterion {n} [{}] {name}: {} ({:.2}s)",
            if outcome.pass { "PASS" } else { "FAIL" },
            outcome.detail,
            took.as_secs_f64()
        );
        if !outcome.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

