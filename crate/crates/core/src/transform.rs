//! Elimination of negative occurrences of derived predicates.
//!
//! For a stratum deriving `P_1 … P_m` the transformation adds five families
//! of stage predicates (`lt`, `leq`, `nlt`, `nleq`, `tri`) whose fixed point
//! compares the stages at which atoms of the stratum become true. A negative
//! occurrence `P_i(x)` in a later stratum is then replaced by
//! `not nleq_ii(x, x)`, which only mentions `nleq_ii` positively.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::logic::{
    check_stratified, derived_names, Atom, Axiom, AxiomProgram, Formula, OccurrenceRef, Polarity, Predicate,
    ProgramError, Signature, StratificationError, Stratum, Term,
};
use crate::eval::StageRel;

#[derive(Debug, Error)]
pub enum TransformError {
    #[error("input program is not stratified: {0}")]
    NotStratified(#[from] StratificationError),
    #[error(transparent)]
    Program(#[from] ProgramError),
    #[error("stage tuple has {found} terms, `{predicate}` needs {expected}")]
    TupleArity { predicate: String, expected: usize, found: usize },
    #[error("predicate index {index} is outside the family of {count}")]
    PredicateIndex { index: usize, count: usize },
    #[error("derived predicates still occur negatively:\n{}", list(.0))]
    NegativeOccurrences(Vec<OccurrenceRef>),
    #[error("elimination did not make progress at stratum {0}")]
    NoProgress(usize),
}

fn list(occurrences: &[OccurrenceRef]) -> String {
    occurrences.iter().map(|o| format!("  {o}")).collect::<Vec<_>>().join("\n")
}

// ---------------------------------------------------------------------------
// Normalization

/// One body per affected predicate, over canonical head variables
/// `v1 … v_r`. Bound variables are `b1, b2, …`, distinct across all bodies.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NormalizedStratum {
    pub original: Stratum,
    pub predicates: Vec<Predicate>,
    pub bodies: Vec<Formula>,
}

impl NormalizedStratum {
    pub fn m(&self) -> usize {
        self.predicates.len()
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.predicates.iter().position(|p| p.name == name)
    }

    /// The normalized stratum as axioms, one per predicate.
    pub fn axioms(&self) -> Vec<Axiom> {
        self.predicates
            .iter()
            .zip(&self.bodies)
            .map(|(p, body)| Axiom::new(Atom::with_vars(p.name.clone(), &canonical("v", p.arity)), body.clone()))
            .collect()
    }
}

fn canonical(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|k| format!("{prefix}{k}")).collect()
}

fn var_terms(names: &[String]) -> Vec<Term> {
    names.iter().map(|n| Term::var(n.clone())).collect()
}

pub fn normalize_stratum(stratum: &Stratum) -> NormalizedStratum {
    let mut counter = 0usize;
    let mut predicates = Vec::new();
    let mut bodies = Vec::new();
    for name in stratum.affected() {
        let mut disjuncts = Vec::new();
        let mut arity = 0;
        for ax in stratum.axioms().iter().filter(|a| a.head.predicate == name) {
            arity = ax.head.args.len();
            // Three steps so that neither renaming can capture a free variable.
            let mut taken = ax.body.all_vars();
            taken.extend(ax.head_vars());
            let mut tmp = 0usize;
            let body = ax.body.rename_bound(&mut |_| loop {
                tmp += 1;
                let cand = format!("t{tmp}");
                if !taken.contains(&cand) {
                    return cand;
                }
            });
            let heads: BTreeMap<String, Term> = ax
                .head_vars()
                .into_iter()
                .zip(canonical("v", arity))
                .map(|(h, v)| (h, Term::var(v)))
                .collect();
            let body = body.subst(&heads).rename_bound(&mut |_| {
                counter += 1;
                format!("b{counter}")
            });
            disjuncts.push(body);
        }
        predicates.push(Predicate::derived(name, arity));
        bodies.push(Formula::or(disjuncts));
    }
    NormalizedStratum { original: stratum.clone(), predicates, bodies }
}

// ---------------------------------------------------------------------------
// Stage predicate families

/// Names of the stage predicates generated for one stratum.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StagePredicateFamily {
    pub stratum: usize,
    pub round: u32,
    pub predicates: Vec<Predicate>,
}

impl StagePredicateFamily {
    /// A family whose names (including auxiliary ones) are all absent from
    /// `signature`; the round number is increased until that holds.
    pub fn fresh(stratum: usize, predicates: Vec<Predicate>, signature: &Signature) -> Self {
        let mut family = StagePredicateFamily { stratum, round: 1, predicates };
        while family.declarations(true).iter().any(|p| signature.contains(&p.name)) {
            family.round += 1;
        }
        family
    }

    pub fn m(&self) -> usize {
        self.predicates.len()
    }

    pub fn name(&self, rel: StageRel, i: usize, j: usize) -> String {
        format!("{}__{}__{}__r{}", rel.name(), self.predicates[i].name, self.predicates[j].name, self.round)
    }

    pub fn empty_name(&self) -> String {
        format!("empty__r{}", self.round)
    }

    pub fn fixpoint_name(&self, i: usize) -> String {
        format!("fixpt__{}__r{}", self.predicates[i].name, self.round)
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.predicates.iter().position(|p| p.name == name)
    }

    /// Declarations of the `5m²` stage predicates, plus the auxiliary ones
    /// when `optimize_aux` is set.
    pub fn declarations(&self, optimize_aux: bool) -> Vec<Predicate> {
        let m = self.m();
        let mut out = Vec::new();
        for rel in StageRel::ALL {
            for i in 0..m {
                for j in 0..m {
                    let arity = self.predicates[i].arity + self.predicates[j].arity;
                    out.push(Predicate::derived(self.name(rel, i, j), arity));
                }
            }
        }
        if optimize_aux {
            out.push(Predicate::derived(self.empty_name(), 0));
            for i in 0..m {
                out.push(Predicate::derived(self.fixpoint_name(i), self.predicates[i].arity));
            }
        }
        out
    }
}

/// Recovers the stage predicate families of a transformed program from the
/// generated names. A family of round `k` in a stratum consists of the
/// affected predicates `P` for which `nleq__P__P__rk` is affected by the same
/// stratum and all `5m²` stage predicates are present.
pub fn families_in(program: &AxiomProgram) -> Vec<StagePredicateFamily> {
    let mut out = Vec::new();
    for (si, stratum) in program.strata().iter().enumerate() {
        let affected = stratum.affected();
        let here: BTreeSet<&str> = affected.iter().copied().collect();
        let mut rounds = BTreeSet::new();
        for p in &affected {
            let prefix = format!("nleq__{p}__{p}__r");
            for name in &affected {
                if let Some(k) = name.strip_prefix(&prefix).and_then(|r| r.parse::<u32>().ok()) {
                    rounds.insert(k);
                }
            }
        }
        for round in rounds {
            let predicates: Vec<Predicate> = affected
                .iter()
                .filter(|p| here.contains(format!("nleq__{p}__{p}__r{round}").as_str()))
                .filter_map(|p| program.signature().get(p).cloned())
                .collect();
            let family = StagePredicateFamily { stratum: si, round, predicates };
            if family.declarations(false).iter().all(|d| here.contains(d.name.as_str())) {
                out.push(family);
            }
        }
    }
    out
}

/// How same-stratum atoms `P_k(z)` are rewritten relative to a target
/// atom `P_j(y)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SubstMode {
    /// `lt_kj(z, y)`
    Lt,
    /// `leq_kj(z, y)`
    Leq,
    /// `not nlt_kj(z, y)`
    NotNlt,
    /// `not nleq_kj(z, y)`
    NotNleq,
    /// `false`
    Bottom,
}

/// Rewrites every atom over a family predicate in `phi` according to `mode`,
/// with target predicate index `j` and target tuple `tuple`.
pub fn substitute_stage(
    phi: &Formula,
    mode: SubstMode,
    family: &StagePredicateFamily,
    j: usize,
    tuple: &[Term],
) -> Result<Formula, TransformError> {
    if mode != SubstMode::Bottom {
        let target = family
            .predicates
            .get(j)
            .ok_or(TransformError::PredicateIndex { index: j, count: family.m() })?;
        if target.arity != tuple.len() {
            return Err(TransformError::TupleArity {
                predicate: target.name.clone(),
                expected: target.arity,
                found: tuple.len(),
            });
        }
    }
    Ok(phi.map_atoms(&mut |atom, _| {
        let Some(k) = family.position(&atom.predicate) else {
            return Formula::Atom(atom.clone());
        };
        let stage_atom = |rel| {
            let mut args = atom.args.clone();
            args.extend_from_slice(tuple);
            Formula::atom(family.name(rel, k, j), args)
        };
        match mode {
            SubstMode::Lt => stage_atom(StageRel::Lt),
            SubstMode::Leq => stage_atom(StageRel::Leq),
            SubstMode::NotNlt => Formula::not(stage_atom(StageRel::Nlt)),
            SubstMode::NotNleq => Formula::not(stage_atom(StageRel::Nleq)),
            SubstMode::Bottom => Formula::Bottom,
        }
    }))
}

/// Deliberate defects in one stage-axiom equation, used to check that the
/// verifier notices broken generators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mutation {
    /// `lt` built from `lt` instead of `leq`.
    Eq1,
    /// `leq` body without the stage substitution.
    Eq2,
    /// `nlt` without its first disjunct.
    Eq3,
    /// `nleq` substituting `not nleq` instead of `not nlt`.
    Eq4,
    /// `tri` without its second conjunct.
    Eq5,
}

impl FromStr for Mutation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "eq1" => Ok(Mutation::Eq1),
            "eq2" => Ok(Mutation::Eq2),
            "eq3" => Ok(Mutation::Eq3),
            "eq4" => Ok(Mutation::Eq4),
            "eq5" => Ok(Mutation::Eq5),
            _ => Err(format!("unknown mutation `{s}` (expected eq1..eq5)")),
        }
    }
}

impl fmt::Display for Mutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = match self {
            Mutation::Eq1 => 1,
            Mutation::Eq2 => 2,
            Mutation::Eq3 => 3,
            Mutation::Eq4 => 4,
            Mutation::Eq5 => 5,
        };
        write!(f, "eq{n}")
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct GenerateOptions {
    pub optimize_aux: bool,
    pub mutation: Option<Mutation>,
}

/// Stage axioms for a normalized stratum: five axioms per pair `(i, j)`,
/// grouped by relation, followed by the auxiliary axioms when requested.
pub fn generate_stage_axioms(
    norm: &NormalizedStratum,
    family: &StagePredicateFamily,
    opts: GenerateOptions,
) -> Result<Vec<Axiom>, TransformError> {
    let m = norm.m();
    if family.m() != m {
        return Err(TransformError::PredicateIndex { index: m, count: family.m() });
    }
    let arity = |i: usize| norm.predicates[i].arity;
    let vars = |prefix: &str, i: usize| canonical(prefix, arity(i));
    let inst = |i: usize, prefix: &str| -> Formula {
        let binding: BTreeMap<String, Term> =
            canonical("v", arity(i)).into_iter().zip(var_terms(&vars(prefix, i))).collect();
        norm.bodies[i].subst(&binding)
    };
    let sub = |i: usize, prefix: &str, mode: SubstMode, j: usize, tuple_prefix: &str| {
        substitute_stage(&inst(i, prefix), mode, family, j, &var_terms(&vars(tuple_prefix, j)))
    };
    let stage_atom = |rel: StageRel, i: usize, a: &str, j: usize, b: &str| {
        let mut args = var_terms(&vars(a, i));
        args.extend(var_terms(&vars(b, j)));
        Formula::atom(family.name(rel, i, j), args)
    };
    let head = |rel: StageRel, i: usize, j: usize| {
        let mut args = vars("x", i);
        args.extend(vars("y", j));
        Atom::with_vars(family.name(rel, i, j), &args)
    };
    let mutated = |eq| opts.mutation == Some(eq);

    // Conjunction shared by all nlt axioms: nothing is derived at stage 1.
    let nothing_derivable = Formula::and(
        (0..m)
            .map(|k| Ok(Formula::forall(vars("z", k), Formula::not(sub(k, "z", SubstMode::Bottom, 0, "z")?))))
            .collect::<Result<Vec<_>, TransformError>>()?,
    )
    .fold_constants();
    // Conjunction shared by the tri axioms with first index i.
    let settled = |i: usize| -> Result<Formula, TransformError> {
        Ok(Formula::and(
            (0..m)
                .map(|k| {
                    Ok(Formula::forall(
                        vars("z", k),
                        Formula::or(vec![
                            Formula::not(sub(k, "z", SubstMode::NotNleq, i, "x")?),
                            sub(k, "z", SubstMode::Lt, i, "x")?,
                        ]),
                    ))
                })
                .collect::<Result<Vec<_>, TransformError>>()?,
        ))
    };

    let mut axioms = Vec::new();
    for i in 0..m {
        for j in 0..m {
            let lt = StageRel::Lt;
            let via = if mutated(Mutation::Eq1) { StageRel::Lt } else { StageRel::Leq };
            let body = Formula::or(
                (0..m)
                    .map(|k| {
                        Formula::exists(
                            vars("z", k),
                            Formula::and(vec![stage_atom(via, i, "x", k, "z"), stage_atom(StageRel::Tri, k, "z", j, "y")]),
                        )
                    })
                    .collect(),
            );
            axioms.push(Axiom::new(head(lt, i, j), body));
        }
    }
    for i in 0..m {
        for j in 0..m {
            let body = if mutated(Mutation::Eq2) { inst(i, "x") } else { sub(i, "x", SubstMode::Lt, j, "y")? };
            axioms.push(Axiom::new(head(StageRel::Leq, i, j), body));
        }
    }
    for i in 0..m {
        for j in 0..m {
            let mut disjuncts = Vec::new();
            if !mutated(Mutation::Eq3) {
                disjuncts.push(sub(j, "y", SubstMode::Bottom, 0, "y")?.fold_constants());
            }
            disjuncts.push(Formula::or(
                (0..m)
                    .map(|k| {
                        Formula::exists(
                            vars("z", k),
                            Formula::and(vec![
                                stage_atom(StageRel::Nleq, i, "x", k, "z"),
                                stage_atom(StageRel::Tri, k, "z", j, "y"),
                            ]),
                        )
                    })
                    .collect(),
            ));
            disjuncts.push(if opts.optimize_aux {
                Formula::atom(family.empty_name(), vec![])
            } else {
                nothing_derivable.clone()
            });
            axioms.push(Axiom::new(head(StageRel::Nlt, i, j), Formula::or(disjuncts)));
        }
    }
    for i in 0..m {
        for j in 0..m {
            let mode = if mutated(Mutation::Eq4) { SubstMode::NotNleq } else { SubstMode::NotNlt };
            let body = Formula::not(sub(i, "x", mode, j, "y")?);
            axioms.push(Axiom::new(head(StageRel::Nleq, i, j), body));
        }
    }
    for i in 0..m {
        let last = if opts.optimize_aux {
            Formula::atom(family.fixpoint_name(i), var_terms(&vars("x", i)))
        } else {
            settled(i)?
        };
        for j in 0..m {
            let mut conjuncts = vec![sub(i, "x", SubstMode::Lt, i, "x")?];
            if !mutated(Mutation::Eq5) {
                conjuncts.push(Formula::not(sub(j, "y", SubstMode::NotNlt, i, "x")?));
            }
            conjuncts.push(Formula::or(vec![sub(j, "y", SubstMode::Leq, i, "x")?, last.clone()]));
            axioms.push(Axiom::new(head(StageRel::Tri, i, j), Formula::and(conjuncts)));
        }
    }
    if opts.optimize_aux {
        axioms.push(Axiom::new(Atom::new(family.empty_name(), vec![]), nothing_derivable));
        for i in 0..m {
            axioms.push(Axiom::new(Atom::with_vars(family.fixpoint_name(i), &vars("x", i)), settled(i)?));
        }
    }
    Ok(axioms)
}

// ---------------------------------------------------------------------------
// Elimination

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TransformOptions {
    pub optimize_aux: bool,
    /// Collapse double negations in the output.
    pub simplify: bool,
    pub mutation: Option<Mutation>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Replacement {
    pub occurrence: OccurrenceRef,
    /// Predicate substituted in, or `false` for a derived predicate that no
    /// axiom defines.
    pub replacement: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FamilyReport {
    pub stratum: usize,
    pub round: u32,
    pub predicates: Vec<String>,
    pub stage_predicates: Vec<String>,
    pub axioms: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TransformReport {
    /// Order in which offending strata are processed.
    pub strategy: String,
    pub replacements: Vec<Replacement>,
    pub families: Vec<FamilyReport>,
    pub metrics_before: SizeMetrics,
    pub metrics_after: SizeMetrics,
}

pub const STRATEGY: &str = "worklist, latest offending stratum first";

/// Rewrites `program` so that no derived predicate occurs negatively.
///
/// Strata are processed from the last offending one backwards: the stage
/// axioms of stratum `l` only introduce negative occurrences of predicates
/// from strata before `l`, so each stratum receives at most one family.
pub fn eliminate_negative_occurrences(
    program: &AxiomProgram,
    opts: TransformOptions,
) -> Result<(AxiomProgram, TransformReport), TransformError> {
    check_stratified(program)?;
    let metrics_before = compute_metrics(program);
    let objects = program.objects().to_vec();
    let (mut signature, _, mut strata) = program.clone().into_parts();
    let mut replacements = Vec::new();
    let mut families = Vec::new();
    let mut previous: Option<usize> = None;

    loop {
        let current = AxiomProgram::unstratified(signature.clone(), objects.clone(), strata.clone())?;
        let negatives = crate::logic::negative_occurrences(&current, &derived_names(&current));
        if negatives.is_empty() {
            break;
        }

        // Derived predicates without axioms are constantly false.
        let (undefined, defined): (Vec<_>, Vec<_>) =
            negatives.into_iter().partition(|o| current.defining_stratum(&o.predicate).is_none());
        if !undefined.is_empty() {
            let names: BTreeSet<String> = undefined.iter().map(|o| o.predicate.clone()).collect();
            replace_negative(&mut strata, 0, &names, &mut |_| Formula::Bottom);
            replacements.extend(
                undefined.into_iter().map(|occurrence| Replacement { occurrence, replacement: "false".into() }),
            );
            continue;
        }

        let target = defined.iter().filter_map(|o| current.defining_stratum(&o.predicate)).max().expect("nonempty");
        if previous.is_some_and(|p| target >= p) {
            return Err(TransformError::NoProgress(target));
        }
        previous = Some(target);

        let norm = normalize_stratum(&strata[target]);
        let family = StagePredicateFamily::fresh(target, norm.predicates.clone(), &signature);
        let gen_opts = GenerateOptions { optimize_aux: opts.optimize_aux, mutation: opts.mutation };
        let axioms = generate_stage_axioms(&norm, &family, gen_opts)?;
        let decls = family.declarations(opts.optimize_aux);
        for d in &decls {
            signature.push(d.clone())?;
        }
        families.push(FamilyReport {
            stratum: target,
            round: family.round,
            predicates: family.predicates.iter().map(|p| p.name.clone()).collect(),
            stage_predicates: decls.iter().map(|p| p.name.clone()).collect(),
            axioms: axioms.len(),
        });
        strata[target].axioms_mut().extend(axioms);

        let names: BTreeSet<String> = family.predicates.iter().map(|p| p.name.clone()).collect();
        for occurrence in defined.into_iter().filter(|o| o.stratum > target && names.contains(&o.predicate)) {
            let i = family.position(&occurrence.predicate).expect("family member");
            replacements.push(Replacement { occurrence, replacement: family.name(StageRel::Nleq, i, i) });
        }
        replace_negative(&mut strata, target + 1, &names, &mut |atom| {
            let i = family.position(&atom.predicate).expect("family member");
            let mut args = atom.args.clone();
            args.extend(atom.args.iter().cloned());
            Formula::not(Formula::atom(family.name(StageRel::Nleq, i, i), args))
        });
    }

    if opts.simplify {
        for stratum in &mut strata {
            for ax in stratum.axioms_mut() {
                ax.body = ax.body.collapse_double_negations();
            }
        }
    }
    let out = AxiomProgram::new(signature, objects, strata)?;
    let metrics_after = compute_metrics(&out);
    Ok((
        out,
        TransformReport { strategy: STRATEGY.into(), replacements, families, metrics_before, metrics_after },
    ))
}

fn replace_negative(
    strata: &mut [Stratum],
    from: usize,
    names: &BTreeSet<String>,
    with: &mut dyn FnMut(&Atom) -> Formula,
) {
    for stratum in strata.iter_mut().skip(from) {
        for ax in stratum.axioms_mut() {
            ax.body = ax.body.map_atoms(&mut |atom, pol| {
                if pol == Polarity::Negative && names.contains(&atom.predicate) {
                    with(atom)
                } else {
                    Formula::Atom(atom.clone())
                }
            });
        }
    }
}

/// Collapses double negations in every body.
pub fn simplify(program: &AxiomProgram) -> AxiomProgram {
    let (signature, objects, mut strata) = program.clone().into_parts();
    for stratum in &mut strata {
        for ax in stratum.axioms_mut() {
            ax.body = ax.body.collapse_double_negations();
        }
    }
    AxiomProgram::unstratified(signature, objects, strata).expect("simplification keeps the program well formed")
}

/// Puts all axioms into one stratum. Refused while a derived predicate
/// occurs negatively.
pub fn merge_to_single_stratum(program: &AxiomProgram) -> Result<AxiomProgram, TransformError> {
    let negatives = crate::logic::negative_occurrences(program, &derived_names(program));
    if !negatives.is_empty() {
        return Err(TransformError::NegativeOccurrences(negatives));
    }
    if program.strata().len() <= 1 {
        return Ok(program.clone());
    }
    let (signature, objects, strata) = program.clone().into_parts();
    let axioms = strata.into_iter().flat_map(|s| s.axioms().to_vec()).collect();
    Ok(AxiomProgram::new(signature, objects, vec![Stratum::new(axioms)])?)
}

// ---------------------------------------------------------------------------
// Metrics

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct StratumMetrics {
    /// derived predicates
    pub m: usize,
    /// maximal arity
    pub r: usize,
    /// sum of arities
    #[serde(rename = "R")]
    pub r_sum: usize,
    /// occurrences of this stratum's predicates in its bodies
    pub o: usize,
    /// node count of heads and bodies
    pub q: usize,
    /// stage and auxiliary predicates among the `m`
    pub stage_predicates: usize,
    /// node count of axioms defining stage and auxiliary predicates
    pub stage_size: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SizeMetrics {
    pub strata: Vec<StratumMetrics>,
    pub signature_size: usize,
    #[serde(rename = "Q")]
    pub total: usize,
    pub stage_predicates: usize,
}

/// Whether `name` has the shape of a generated stage or auxiliary predicate.
pub fn is_generated_name(name: &str) -> bool {
    let Some((stem, round)) = name.rsplit_once("__r") else { return false };
    if round.is_empty() || !round.bytes().all(|b| b.is_ascii_digit()) {
        return false;
    }
    if stem == "empty" {
        return true;
    }
    let Some((rel, rest)) = stem.split_once("__") else { return false };
    match rel {
        "fixpt" => !rest.is_empty(),
        "lt" | "leq" | "nlt" | "nleq" | "tri" => rest.contains("__"),
        _ => false,
    }
}

pub fn stratum_metrics(stratum: &Stratum) -> StratumMetrics {
    let affected: Vec<&str> = stratum.affected();
    let arity = |name: &str| {
        stratum.axioms().iter().find(|a| a.head.predicate == name).map_or(0, |a| a.head.args.len())
    };
    let o = stratum
        .axioms()
        .iter()
        .map(|a| a.body.occurrences().iter().filter(|(_, atom, _)| affected.contains(&atom.predicate.as_str())).count())
        .sum();
    StratumMetrics {
        m: affected.len(),
        r: affected.iter().map(|n| arity(n)).max().unwrap_or(0),
        r_sum: affected.iter().map(|n| arity(n)).sum(),
        o,
        q: stratum.axioms().iter().map(Axiom::size).sum(),
        stage_predicates: affected.iter().filter(|n| is_generated_name(n)).count(),
        stage_size: stratum.axioms().iter().filter(|a| is_generated_name(&a.head.predicate)).map(Axiom::size).sum(),
    }
}

pub fn compute_metrics(program: &AxiomProgram) -> SizeMetrics {
    let strata: Vec<StratumMetrics> = program.strata().iter().map(stratum_metrics).collect();
    let signature_size = program.signature().len() + program.objects().len();
    SizeMetrics {
        total: strata.iter().map(|s| s.q).sum::<usize>() + signature_size,
        stage_predicates: strata.iter().map(|s| s.stage_predicates).sum(),
        signature_size,
        strata,
    }
}
