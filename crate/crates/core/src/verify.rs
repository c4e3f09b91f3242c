//! Brute-force semantic checks of the transformation over small universes.
//!
//! Every check compares two independently computed truth assignments on each
//! basic state of a plan. Stage relations are taken from the snapshot
//! iteration of the original program, never from the generated axioms.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::eval::{stage_relation, EvalError, Evaluator, GroundAtom, Relation, StageRel, Strategy, TruthAssignment, Universe};
use crate::logic::{
    check_stratified, derived_names, negative_occurrences, Atom, Axiom, AxiomProgram, Formula, Polarity, Predicate,
    Signature, Stratum, Term,
};
use crate::transform::{
    eliminate_negative_occurrences, families_in, merge_to_single_stratum, StagePredicateFamily, TransformError,
    TransformOptions,
};

/// Largest number of ground basic atoms an exhaustive sweep may enumerate.
pub const EXHAUSTIVE_ATOM_LIMIT: usize = 24;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("exhaustive enumeration needs 2^{atoms} states over {atoms} ground basic atoms; the limit is 2^{limit}")]
    OverBudget { atoms: usize, limit: usize },
    #[error("universe size must be at least 1")]
    EmptyUniverse,
    #[error("constant `{constant}` does not fit in a universe of {size} objects")]
    ConstantOutsideUniverse { constant: String, size: usize },
    #[error("the transformed program lacks predicate `{0}` of the original signature")]
    MissingPredicate(String),
    #[error("stage family mismatch: {0}")]
    FamilyMismatch(String),
    #[error("unknown check `{0}`")]
    UnknownCheck(String),
    #[error("invalid profile: {0}")]
    BadProfile(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Transform(#[from] TransformError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    Theorem1,
    Theorem2,
    Equivalence,
    MergeEquivalence,
    PolarityLint,
    AuxEquivalence,
}

impl Check {
    pub const ALL: [Check; 6] = [
        Check::Theorem1,
        Check::Theorem2,
        Check::Equivalence,
        Check::MergeEquivalence,
        Check::PolarityLint,
        Check::AuxEquivalence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::Theorem1 => "theorem1",
            Check::Theorem2 => "theorem2",
            Check::Equivalence => "equivalence",
            Check::MergeEquivalence => "merge_equivalence",
            Check::PolarityLint => "polarity_lint",
            Check::AuxEquivalence => "aux_equivalence",
        }
    }

    /// Parses `all` or a comma separated list of check names.
    pub fn parse_list(s: &str) -> Result<Vec<Check>, VerifyError> {
        if s.trim() == "all" {
            return Ok(Check::ALL.to_vec());
        }
        let mut out: Vec<Check> = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let c = part.parse()?;
            if !out.contains(&c) {
                out.push(c);
            }
        }
        Ok(out)
    }
}

impl FromStr for Check {
    type Err = VerifyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "theorem1" => Check::Theorem1,
            "theorem2" => Check::Theorem2,
            "equivalence" => Check::Equivalence,
            "merge" | "merge_equivalence" => Check::MergeEquivalence,
            "polarity" | "polarity_lint" => Check::PolarityLint,
            "aux" | "aux_equivalence" => Check::AuxEquivalence,
            _ => return Err(VerifyError::UnknownCheck(s.to_owned())),
        })
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Mode {
    Exhaustive,
    Sampled { count: u64, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VerificationPlan {
    pub universe_sizes: Vec<usize>,
    pub mode: Mode,
    pub checks: Vec<Check>,
}

impl Default for VerificationPlan {
    fn default() -> Self {
        VerificationPlan { universe_sizes: vec![1, 2, 3], mode: Mode::Exhaustive, checks: Check::ALL.to_vec() }
    }
}

impl VerificationPlan {
    pub fn exhaustive(universe_sizes: Vec<usize>, checks: Vec<Check>) -> Self {
        VerificationPlan { universe_sizes, mode: Mode::Exhaustive, checks }
    }
}

/// A disagreement on one ground atom.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Mismatch {
    pub atom: GroundAtom,
    pub expected: bool,
    pub found: bool,
    pub detail: String,
}

impl fmt::Display for Mismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: expected {}, found {} ({})", self.atom, self.expected, self.found, self.detail)
    }
}

/// A failing basic state together with the first disagreement on it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    pub check: Check,
    pub universe: Vec<String>,
    pub state_index: u64,
    pub seed: Option<u64>,
    pub basic_state: Vec<GroundAtom>,
    pub mismatch: Mismatch,
}

impl fmt::Display for Counterexample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let atoms: Vec<String> = self.basic_state.iter().map(|a| a.to_string()).collect();
        write!(
            f,
            "{} fails on state #{} over {{{}}}: {{{}}}; {}",
            self.check,
            self.state_index,
            self.universe.join(","),
            atoms.join(", "),
            self.mismatch
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    pub check: Check,
    pub universe_size: Option<usize>,
    pub states_tested: u64,
    pub result: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Counterexample>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub violations: Vec<String>,
    pub wall_time: f64,
}

impl VerificationReport {
    pub fn ok(&self) -> bool {
        self.result == "ok"
    }
}

/// Universe of `size` objects: the program's objects first, padded with
/// fresh names. Constants used in bodies must fall inside it.
pub fn universe_for(program: &AxiomProgram, size: usize) -> Result<Universe, VerifyError> {
    if size == 0 {
        return Err(VerifyError::EmptyUniverse);
    }
    let mut objects: Vec<String> = program.objects().iter().take(size).cloned().collect();
    let mut k = 1;
    while objects.len() < size {
        let cand = format!("o{k}");
        k += 1;
        if !program.objects().contains(&cand) {
            objects.push(cand);
        }
    }
    for stratum in program.strata() {
        for ax in stratum.axioms() {
            if let Some(c) = ax.body.constants().into_iter().find(|c| !objects.contains(c)) {
                return Err(VerifyError::ConstantOutsideUniverse { constant: c, size });
            }
        }
    }
    Ok(Universe::new(objects)?)
}

/// Ground basic atoms in enumeration order: basic predicates in signature
/// order, tuples lexicographically.
pub fn basic_atom_count(signature: &Signature, universe_size: usize) -> usize {
    signature.basic().map(|p| universe_size.pow(p.arity as u32)).sum()
}

/// Basic state whose `k`-th ground basic atom is `bit(k)`.
pub fn state_from_bits(signature: &Signature, universe: &Universe, mut bit: impl FnMut(usize) -> bool) -> TruthAssignment {
    let mut state = TruthAssignment::basic(signature, universe);
    let mut k = 0;
    for p in signature.basic() {
        let rel = state.relation_mut(&p.name).expect("basic relation");
        for t in 0..rel.len() {
            rel.set_index(t, bit(k));
            k += 1;
        }
    }
    state
}

/// The basic state with index `index` of a plan mode.
pub fn state_at(signature: &Signature, universe: &Universe, mode: Mode, index: u64) -> TruthAssignment {
    match mode {
        Mode::Exhaustive => state_from_bits(signature, universe, |k| index >> k & 1 == 1),
        Mode::Sampled { seed, .. } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(index);
            state_from_bits(signature, universe, |_| rng.gen_bool(0.5))
        }
    }
}

struct Prepared {
    universe: Universe,
    original: Evaluator,
    transformed: Evaluator,
    merged: Option<Evaluator>,
    plain: Option<Evaluator>,
    aux: Option<Evaluator>,
}

/// Original program, its transformation, and the variants some checks need.
pub struct Verifier {
    original: AxiomProgram,
    transformed: AxiomProgram,
    families: Vec<StagePredicateFamily>,
    merged: Option<AxiomProgram>,
    aux_pair: Option<(AxiomProgram, AxiomProgram)>,
}

impl Verifier {
    /// Uses `transformed` when given, otherwise the default transformation
    /// of `original`.
    pub fn new(original: &AxiomProgram, transformed: Option<&AxiomProgram>) -> Result<Self, VerifyError> {
        let transformed = match transformed {
            Some(t) => t.clone(),
            None => eliminate_negative_occurrences(original, TransformOptions::default())?.0,
        };
        for p in original.signature().iter() {
            if transformed.signature().get(&p.name) != Some(p) {
                return Err(VerifyError::MissingPredicate(p.name.clone()));
            }
        }
        let families = families_in(&transformed);
        Ok(Verifier { original: original.clone(), transformed, families, merged: None, aux_pair: None })
    }

    pub fn transformed(&self) -> &AxiomProgram {
        &self.transformed
    }

    pub fn families(&self) -> &[StagePredicateFamily] {
        &self.families
    }

    fn prepare(&mut self, checks: &[Check]) -> Result<(), VerifyError> {
        if checks.contains(&Check::MergeEquivalence) && self.merged.is_none() {
            self.merged = Some(merge_to_single_stratum(&self.transformed)?);
        }
        if checks.contains(&Check::AuxEquivalence) && self.aux_pair.is_none() {
            let plain = eliminate_negative_occurrences(&self.original, TransformOptions::default())?.0;
            let aux = eliminate_negative_occurrences(
                &self.original,
                TransformOptions { optimize_aux: true, ..Default::default() },
            )?
            .0;
            self.aux_pair = Some((plain, aux));
        }
        Ok(())
    }

    fn compile(&self, size: usize) -> Result<Prepared, VerifyError> {
        let universe = universe_for(&self.original, size)?;
        let ev = |p: &AxiomProgram| Evaluator::new(p, &universe);
        Ok(Prepared {
            original: ev(&self.original)?,
            transformed: ev(&self.transformed)?,
            merged: self.merged.as_ref().map(ev).transpose()?,
            plain: self.aux_pair.as_ref().map(|(p, _)| ev(p)).transpose()?,
            aux: self.aux_pair.as_ref().map(|(_, a)| ev(a)).transpose()?,
            universe,
        })
    }

    /// Runs every check of `plan` on every universe size.
    pub fn run(&mut self, plan: &VerificationPlan) -> Result<Vec<VerificationReport>, VerifyError> {
        self.prepare(&plan.checks)?;
        let mut reports = Vec::new();
        if plan.checks.contains(&Check::PolarityLint) {
            reports.push(self.polarity_lint());
        }
        let state_checks: Vec<Check> = plan.checks.iter().copied().filter(|c| *c != Check::PolarityLint).collect();
        if state_checks.is_empty() {
            return Ok(reports);
        }
        for &size in &plan.universe_sizes {
            let atoms = basic_atom_count(self.original.signature(), size);
            let states = match plan.mode {
                Mode::Exhaustive if atoms > EXHAUSTIVE_ATOM_LIMIT => {
                    return Err(VerifyError::OverBudget { atoms, limit: EXHAUSTIVE_ATOM_LIMIT })
                }
                Mode::Exhaustive => 1u64 << atoms,
                Mode::Sampled { count, .. } => count,
            };
            let prep = self.compile(size)?;
            for &check in &state_checks {
                let start = Instant::now();
                let cx = self.sweep(&prep, check, plan.mode, states)?;
                reports.push(VerificationReport {
                    check,
                    universe_size: Some(size),
                    states_tested: states,
                    result: if cx.is_some() { "counterexample" } else { "ok" },
                    counterexample: cx,
                    violations: Vec::new(),
                    wall_time: start.elapsed().as_secs_f64(),
                });
            }
        }
        Ok(reports)
    }

    fn polarity_lint(&self) -> VerificationReport {
        let start = Instant::now();
        let mut violations = Vec::new();
        let mut lint = |label: &str, p: &AxiomProgram| {
            violations.extend(negative_occurrences(p, &derived_names(p)).iter().map(|o| format!("{label}: {o}")));
            if let Err(e) = check_stratified(p) {
                violations.push(format!("{label}: {e}"));
            }
        };
        lint("transformed", &self.transformed);
        match merge_to_single_stratum(&self.transformed) {
            Ok(m) => lint("merged", &m),
            Err(e) => violations.push(format!("merged: {e}")),
        }
        VerificationReport {
            check: Check::PolarityLint,
            universe_size: None,
            states_tested: 0,
            result: if violations.is_empty() { "ok" } else { "violation" },
            counterexample: None,
            violations,
            wall_time: start.elapsed().as_secs_f64(),
        }
    }

    /// Smallest failing state index, if any.
    fn sweep(&self, prep: &Prepared, check: Check, mode: Mode, states: u64) -> Result<Option<Counterexample>, VerifyError> {
        let sig = self.original.signature();
        let found = (0..states)
            .into_par_iter()
            .filter_map(|index| {
                let basic = state_at(sig, &prep.universe, mode, index);
                match self.check_state(prep, check, &basic) {
                    Ok(None) => None,
                    Ok(Some(m)) => Some(Ok((index, basic, m))),
                    Err(e) => Some(Err((index, e))),
                }
            })
            .min_by_key(|r| match r {
                Ok((i, ..)) | Err((i, _)) => *i,
            });
        match found {
            None => Ok(None),
            Some(Err((_, e))) => Err(e),
            Some(Ok((index, basic, mismatch))) => Ok(Some(Counterexample {
                check,
                universe: prep.universe.objects().to_vec(),
                state_index: index,
                seed: match mode {
                    Mode::Sampled { seed, .. } => Some(seed),
                    Mode::Exhaustive => None,
                },
                basic_state: basic.true_atoms(),
                mismatch,
            })),
        }
    }

    /// Re-runs the check recorded in `cx` on its basic state.
    pub fn replay(&mut self, cx: &Counterexample) -> Result<Option<Mismatch>, VerifyError> {
        self.prepare(&[cx.check])?;
        let prep = self.compile(cx.universe.len())?;
        let mut basic = TruthAssignment::basic(self.original.signature(), &prep.universe);
        for atom in &cx.basic_state {
            basic.set(atom, true)?;
        }
        self.check_state(&prep, cx.check, &basic)
    }

    fn check_state(&self, prep: &Prepared, check: Check, basic: &TruthAssignment) -> Result<Option<Mismatch>, VerifyError> {
        match check {
            Check::Theorem1 => self.theorem1(prep, basic),
            Check::Theorem2 => self.theorem2(prep, basic),
            Check::Equivalence => {
                let a = prep.original.extend(basic)?;
                let b = prep.transformed.extend(basic)?;
                Ok(compare(&a, &b, self.original.signature().derived().map(|p| p.name.as_str()), "transformed"))
            }
            Check::MergeEquivalence => {
                let merged = prep.merged.as_ref().expect("prepared");
                let a = prep.original.extend(basic)?;
                let b = merged.extend(basic)?;
                Ok(compare(&a, &b, self.original.signature().derived().map(|p| p.name.as_str()), "merged"))
            }
            Check::AuxEquivalence => {
                let (plain, aux) = (prep.plain.as_ref().expect("prepared"), prep.aux.as_ref().expect("prepared"));
                let (pp, ap) = self.aux_pair.as_ref().expect("prepared");
                let a = plain.extend(basic)?;
                let b = aux.extend(basic)?;
                let names = pp.signature().derived().filter(|p| ap.signature().contains(&p.name)).map(|p| p.name.as_str());
                Ok(compare(&a, &b, names, "auxiliary variant"))
            }
            Check::PolarityLint => Ok(None),
        }
    }

    fn theorem1(&self, prep: &Prepared, basic: &TruthAssignment) -> Result<Option<Mismatch>, VerifyError> {
        let (_, tables) = prep.original.extend_with(basic, Strategy::Staged)?;
        let derived = prep.transformed.extend(basic)?;
        for fam in &self.families {
            let table = tables
                .get(fam.stratum)
                .ok_or_else(|| VerifyError::FamilyMismatch(format!("no stratum {} in the original", fam.stratum + 1)))?;
            let pos: Vec<usize> = fam
                .predicates
                .iter()
                .map(|p| {
                    table.position(&p.name).ok_or_else(|| {
                        VerifyError::FamilyMismatch(format!("`{}` is not derived by stratum {}", p.name, fam.stratum + 1))
                    })
                })
                .collect::<Result<_, _>>()?;
            for i in 0..fam.m() {
                for j in 0..fam.m() {
                    for rel in StageRel::ALL {
                        let oracle = stage_relation(table, rel, pos[i], pos[j]).expect("positions in range");
                        let name = fam.name(rel, i, j);
                        let got = derived.relation(&name).ok_or_else(|| VerifyError::MissingPredicate(name.clone()))?;
                        if let Some(m) = first_difference(&name, &oracle, got, &prep.universe, "stage oracle") {
                            return Ok(Some(m));
                        }
                    }
                }
            }
        }
        Ok(None)
    }

    fn theorem2(&self, prep: &Prepared, basic: &TruthAssignment) -> Result<Option<Mismatch>, VerifyError> {
        let full = prep.transformed.extend(basic)?;
        for fam in &self.families {
            let prefix = prep.transformed.extend_prefix(basic, fam.stratum + 1)?;
            for (label, state) in [("full program", &full), ("prefix program", &prefix)] {
                for i in 0..fam.m() {
                    let p = &fam.predicates[i];
                    let nleq = fam.name(StageRel::Nleq, i, i);
                    let rel = state.relation(&p.name).ok_or_else(|| VerifyError::MissingPredicate(p.name.clone()))?;
                    let diag = state.relation(&nleq).ok_or_else(|| VerifyError::MissingPredicate(nleq.clone()))?;
                    let n = prep.universe.len();
                    for t in 0..rel.len() {
                        let expected = !diag.get_index(t * n.pow(p.arity as u32) + t);
                        if rel.get_index(t) != expected {
                            let args: Vec<String> = rel.tuple(t).iter().map(|&o| prep.universe.name(o).to_owned()).collect();
                            return Ok(Some(Mismatch {
                                atom: GroundAtom { predicate: p.name.clone(), args },
                                expected,
                                found: !expected,
                                detail: format!("{label}: must equal the negated diagonal of {nleq}"),
                            }));
                        }
                    }
                }
            }
        }
        Ok(None)
    }
}

fn first_difference(name: &str, expected: &Relation, found: &Relation, universe: &Universe, what: &str) -> Option<Mismatch> {
    (0..expected.len()).find(|&t| expected.get_index(t) != found.get_index(t)).map(|t| Mismatch {
        atom: GroundAtom {
            predicate: name.to_owned(),
            args: expected.tuple(t).iter().map(|&o| universe.name(o).to_owned()).collect(),
        },
        expected: expected.get_index(t),
        found: found.get_index(t),
        detail: format!("{what} vs derived extension"),
    })
}

fn compare<'a>(
    expected: &TruthAssignment,
    found: &TruthAssignment,
    names: impl Iterator<Item = &'a str>,
    what: &str,
) -> Option<Mismatch> {
    for name in names {
        let (Some(a), Some(b)) = (expected.relation(name), found.relation(name)) else {
            return Some(Mismatch {
                atom: GroundAtom { predicate: name.to_owned(), args: vec![] },
                expected: expected.relation(name).is_some(),
                found: found.relation(name).is_some(),
                detail: format!("relation missing in {what}"),
            });
        };
        if let Some(m) = first_difference(name, a, b, expected.universe(), &format!("original vs {what}")) {
            return Some(m);
        }
    }
    None
}

/// Runs `plan` against the default transformation of `original`, or
/// against `transformed` when given.
pub fn verify(
    original: &AxiomProgram,
    transformed: Option<&AxiomProgram>,
    plan: &VerificationPlan,
) -> Result<Vec<VerificationReport>, VerifyError> {
    Verifier::new(original, transformed)?.run(plan)
}

pub fn verify_theorem1(
    original: &AxiomProgram,
    transformed: &AxiomProgram,
    sizes: &[usize],
    mode: Mode,
) -> Result<Vec<VerificationReport>, VerifyError> {
    verify(original, Some(transformed), &VerificationPlan { universe_sizes: sizes.to_vec(), mode, checks: vec![Check::Theorem1] })
}

pub fn verify_theorem2(
    original: &AxiomProgram,
    transformed: &AxiomProgram,
    sizes: &[usize],
    mode: Mode,
) -> Result<Vec<VerificationReport>, VerifyError> {
    verify(original, Some(transformed), &VerificationPlan { universe_sizes: sizes.to_vec(), mode, checks: vec![Check::Theorem2] })
}

pub fn verify_equivalence(
    original: &AxiomProgram,
    transformed: &AxiomProgram,
    sizes: &[usize],
    mode: Mode,
) -> Result<Vec<VerificationReport>, VerifyError> {
    verify(
        original,
        Some(transformed),
        &VerificationPlan { universe_sizes: sizes.to_vec(), mode, checks: vec![Check::Equivalence] },
    )
}

// ---------------------------------------------------------------------------
// Random programs

/// Shape of generated programs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RandomProfile {
    pub strata: usize,
    /// Upper bound; each stratum derives between 1 and this many predicates.
    pub preds_per_stratum: usize,
    pub max_arity: usize,
    pub body_depth: usize,
    /// Probability of a negation at each inner node.
    pub negation_rate: f64,
    pub basic_preds: usize,
    pub objects: usize,
}

impl Default for RandomProfile {
    fn default() -> Self {
        RandomProfile {
            strata: 3,
            preds_per_stratum: 2,
            max_arity: 2,
            body_depth: 3,
            negation_rate: 0.3,
            basic_preds: 2,
            objects: 2,
        }
    }
}

const OBJECT_NAMES: [&str; 3] = ["a", "b", "c"];

/// A stratified program drawn deterministically from `seed`. Predicates of
/// the stratum being built only occur positively; earlier derived and basic
/// predicates occur with either polarity.
pub fn generate_random_program(profile: &RandomProfile, seed: u64) -> Result<AxiomProgram, VerifyError> {
    let bad = |m: &str| Err(VerifyError::BadProfile(m.to_owned()));
    if profile.strata == 0 || profile.strata > 4 {
        return bad("between 1 and 4 strata");
    }
    if profile.max_arity > 2 {
        return bad("arity at most 2");
    }
    if profile.objects == 0 || profile.objects > OBJECT_NAMES.len() {
        return bad("between 1 and 3 objects");
    }
    if profile.preds_per_stratum == 0 {
        return bad("at least one predicate per stratum");
    }
    if !(0.0..=1.0).contains(&profile.negation_rate) {
        return bad("negation rate outside [0, 1]");
    }
    if profile.negation_rate > 0.0 && profile.strata == 1 && profile.basic_preds == 0 {
        return bad("negation needs a basic predicate or an earlier stratum");
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut preds = Vec::new();
    for k in 0..profile.basic_preds {
        preds.push(Predicate::basic(format!("B{k}"), rng.gen_range(0..=profile.max_arity)));
    }
    let mut layers: Vec<Vec<Predicate>> = Vec::new();
    for s in 0..profile.strata {
        let count = rng.gen_range(1..=profile.preds_per_stratum);
        let layer: Vec<Predicate> =
            (0..count).map(|k| Predicate::derived(format!("p{}_{k}", s + 1), rng.gen_range(0..=profile.max_arity))).collect();
        preds.extend(layer.iter().cloned());
        layers.push(layer);
    }
    let signature = Signature::new(preds.clone()).expect("generated names are distinct");
    let basic: Vec<Predicate> = preds.iter().filter(|p| !p.is_derived()).cloned().collect();

    let mut strata = Vec::new();
    for s in 0..profile.strata {
        let earlier: Vec<Predicate> = layers[..s].iter().flatten().cloned().collect();
        let mut axioms = Vec::new();
        for p in &layers[s] {
            for _ in 0..rng.gen_range(1..=2) {
                let head: Vec<String> = (1..=p.arity).map(|k| format!("x{k}")).collect();
                let mut gen = BodyGen {
                    rng: &mut rng,
                    profile,
                    basic: &basic,
                    earlier: &earlier,
                    current: &layers[s],
                    scope: head.clone(),
                    bound: 0,
                };
                let body = gen.formula(profile.body_depth, Polarity::Positive);
                axioms.push(Axiom::new(Atom::with_vars(p.name.clone(), &head), body));
            }
        }
        strata.push(Stratum::new(axioms));
    }
    let objects = OBJECT_NAMES[..profile.objects].iter().map(|s| s.to_string()).collect();
    Ok(AxiomProgram::new(signature, objects, strata).expect("generated programs are stratified"))
}

struct BodyGen<'a> {
    rng: &'a mut ChaCha8Rng,
    profile: &'a RandomProfile,
    basic: &'a [Predicate],
    earlier: &'a [Predicate],
    current: &'a [Predicate],
    scope: Vec<String>,
    bound: usize,
}

impl BodyGen<'_> {
    fn formula(&mut self, depth: usize, pol: Polarity) -> Formula {
        if depth == 0 || self.rng.gen_bool(0.25) {
            return self.leaf(pol);
        }
        if self.rng.gen_bool(self.profile.negation_rate) {
            return Formula::not(self.formula(depth - 1, pol.flip()));
        }
        match self.rng.gen_range(0..4) {
            0 => Formula::and(vec![self.formula(depth - 1, pol), self.formula(depth - 1, pol)]),
            1 => Formula::or(vec![self.formula(depth - 1, pol), self.formula(depth - 1, pol)]),
            q => {
                self.bound += 1;
                let v = format!("b{}", self.bound);
                self.scope.push(v.clone());
                let sub = self.formula(depth - 1, pol);
                self.scope.pop();
                if q == 2 {
                    Formula::exists(vec![v], sub)
                } else {
                    Formula::forall(vec![v], sub)
                }
            }
        }
    }

    fn leaf(&mut self, pol: Polarity) -> Formula {
        let recursive = pol == Polarity::Positive && self.rng.gen_bool(0.35);
        let pool: Vec<&Predicate> = if recursive {
            self.current.iter().collect()
        } else {
            self.basic.iter().chain(self.earlier).collect()
        };
        let pool = if pool.is_empty() && pol == Polarity::Positive { self.current.iter().collect() } else { pool };
        if pool.is_empty() {
            return if self.rng.gen_bool(0.5) { Formula::Top } else { Formula::Bottom };
        }
        let p = pool[self.rng.gen_range(0..pool.len())];
        let args = (0..p.arity)
            .map(|_| {
                if !self.scope.is_empty() && self.rng.gen_bool(0.9) {
                    Term::var(self.scope[self.rng.gen_range(0..self.scope.len())].clone())
                } else {
                    Term::constant(OBJECT_NAMES[0])
                }
            })
            .collect();
        Formula::atom(p.name.clone(), args)
    }
}

/// Least-squares fit of `y = c * x^k` on log scale; `None` with fewer than
/// two distinct `x`.
pub fn fit_power_law(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    let logs: Vec<(f64, f64)> = points.iter().filter(|(x, y)| *x > 0.0 && *y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if logs.len() < 2 || sxx == 0.0 {
        return None;
    }
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let k = sxy / sxx;
    Some((k, (my - k * mx).exp()))
}

/// Distinct names of derived predicates occurring in a program's bodies.
pub fn derived_in_bodies(program: &AxiomProgram) -> BTreeSet<String> {
    let derived = derived_names(program);
    program.occurrences().into_iter().map(|o| o.predicate).filter(|p| derived.contains(p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_program;
    use crate::transform::Mutation;

    const PATH: &str = "(program (objects a b c) (basic (E 2)) (derived (path 2) (acyclic 0))
      (stratum (axiom (path ?x ?y) (or (E ?x ?y) (exists (?z) (and (E ?x ?z) (path ?z ?y))))))
      (stratum (axiom (acyclic) (forall (?x) (not (path ?x ?x))))))";

    #[test]
    fn check_names_round_trip() {
        for c in Check::ALL {
            assert_eq!(c.name().parse::<Check>().unwrap(), c);
        }
        assert_eq!(Check::parse_list("all").unwrap().len(), 6);
        assert_eq!(Check::parse_list("theorem1, merge").unwrap(), vec![Check::Theorem1, Check::MergeEquivalence]);
        assert!(Check::parse_list("theorem3").is_err());
    }

    #[test]
    fn exhaustive_enumeration_is_a_bijection() {
        let p = parse_program(PATH).unwrap();
        let u = universe_for(&p, 2).unwrap();
        let states: BTreeSet<Vec<GroundAtom>> =
            (0..16).map(|i| state_at(p.signature(), &u, Mode::Exhaustive, i).true_atoms()).collect();
        assert_eq!(states.len(), 16);
        assert_eq!(basic_atom_count(p.signature(), 3), 9);
    }

    #[test]
    fn sampled_states_are_reproducible() {
        let p = parse_program(PATH).unwrap();
        let u = universe_for(&p, 3).unwrap();
        let mode = Mode::Sampled { count: 10, seed: 7 };
        assert_eq!(state_at(p.signature(), &u, mode, 3), state_at(p.signature(), &u, mode, 3));
        let distinct: BTreeSet<_> = (0..10).map(|i| state_at(p.signature(), &u, mode, i).true_atoms()).collect();
        assert!(distinct.len() > 1);
    }

    #[test]
    fn universe_padding_and_constants() {
        let p = parse_program(PATH).unwrap();
        assert_eq!(universe_for(&p, 4).unwrap().objects(), ["a", "b", "c", "o1"]);
        assert_eq!(universe_for(&p, 1).unwrap().objects(), ["a"]);
        let c = parse_program("(program (objects a b) (basic (A 1)) (derived (P 0)) (stratum (axiom (P) (A b))))").unwrap();
        assert!(matches!(universe_for(&c, 1), Err(VerifyError::ConstantOutsideUniverse { .. })));
    }

    #[test]
    fn path_program_passes_every_check_on_two_objects() {
        let p = parse_program(PATH).unwrap();
        let plan = VerificationPlan::exhaustive(vec![1, 2], Check::ALL.to_vec());
        let reports = verify(&p, None, &plan).unwrap();
        for r in &reports {
            assert!(r.ok(), "{r:?}");
        }
        assert_eq!(reports.len(), 1 + 2 * 5);
    }

    #[test]
    fn mutated_transform_is_caught_and_replays() {
        let p = parse_program(PATH).unwrap();
        let (bad, _) = eliminate_negative_occurrences(
            &p,
            TransformOptions { mutation: Some(Mutation::Eq2), ..Default::default() },
        )
        .unwrap();
        let mut v = Verifier::new(&p, Some(&bad)).unwrap();
        let reports = v.run(&VerificationPlan::exhaustive(vec![2], vec![Check::Theorem1])).unwrap();
        let cx = reports[0].counterexample.clone().expect("mutation must be caught");
        assert_eq!(v.replay(&cx).unwrap(), Some(cx.mismatch.clone()));
    }

    #[test]
    fn over_budget_is_refused() {
        let p = parse_program("(program (objects a) (basic (R 3)) (derived (P 0)) (stratum (axiom (P) (exists (?x) (R ?x ?x ?x)))))")
            .unwrap();
        let plan = VerificationPlan::exhaustive(vec![3], vec![Check::Equivalence]);
        assert!(matches!(verify(&p, None, &plan), Err(VerifyError::OverBudget { atoms: 27, .. })));
    }

    #[test]
    fn random_programs_are_stratified_and_deterministic() {
        let profile = RandomProfile::default();
        for seed in 0..200 {
            let p = generate_random_program(&profile, seed).unwrap();
            assert!(check_stratified(&p).is_ok());
            assert_eq!(p, generate_random_program(&profile, seed).unwrap());
        }
        let bad = RandomProfile { strata: 1, basic_preds: 0, ..RandomProfile::default() };
        assert!(matches!(generate_random_program(&bad, 0), Err(VerifyError::BadProfile(_))));
    }

    #[test]
    fn power_law_fit() {
        let pts: Vec<(f64, f64)> = (1..10).map(|x| (x as f64, 3.0 * (x as f64).powi(2))).collect();
        let (k, c) = fit_power_law(&pts).unwrap();
        assert!((k - 2.0).abs() < 1e-9 && (c - 3.0).abs() < 1e-9);
        assert_eq!(fit_power_law(&[(1.0, 1.0)]), None);
    }
}
