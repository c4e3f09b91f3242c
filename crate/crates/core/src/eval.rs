//! Fixed-point semantics of stratified axiom programs over a finite universe.
//!
//! Three strategies compute the extension of a basic state:
//!
//! * [`Strategy::Sequential`] fires one ground axiom at a time in lexicographic
//!   order, reading the assignment as it is being modified.
//! * [`Strategy::Staged`] evaluates every body against a snapshot taken at the
//!   start of each stage and records the stage at which each atom first
//!   becomes true.
//! * [`Strategy::Shuffled`] is the sequential strategy with a seeded random
//!   choice of the next ground axiom.
//!
//! All three agree on the final assignment.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::logic::{AxiomProgram, Formula, Predicate, PredicateKind, Signature, Stratum, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("the universe must contain at least one object")]
    EmptyUniverse,
    #[error("object `{0}` appears twice in the universe")]
    DuplicateObject(String),
    #[error("unknown object `{0}`")]
    UnknownObject(String),
    #[error("variable `?{0}` is not bound")]
    UnboundVariable(String),
    #[error("the assignment has no relation for `{0}`")]
    MissingRelation(String),
    #[error("`{predicate}` has arity {expected}, the assignment stores arity {found}")]
    ArityMismatch { predicate: String, expected: usize, found: usize },
}

/// Nonempty ordered list of distinct objects.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct Universe {
    objects: Vec<String>,
}

impl Universe {
    pub fn new(objects: Vec<String>) -> Result<Self, EvalError> {
        if objects.is_empty() {
            return Err(EvalError::EmptyUniverse);
        }
        for (i, o) in objects.iter().enumerate() {
            if objects[..i].contains(o) {
                return Err(EvalError::DuplicateObject(o.clone()));
            }
        }
        Ok(Universe { objects })
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn objects(&self) -> &[String] {
        &self.objects
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.objects.iter().position(|o| o == name)
    }

    pub fn name(&self, i: usize) -> &str {
        &self.objects[i]
    }
}

/// Dense truth table of one predicate over `n^arity` tuples. Tuples are
/// indexed lexicographically in object order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Relation {
    arity: usize,
    n: usize,
    bits: Vec<bool>,
}

impl Relation {
    pub fn new(arity: usize, n: usize) -> Self {
        Relation { arity, n, bits: vec![false; n.pow(arity as u32)] }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn index(&self, tuple: &[usize]) -> usize {
        tuple.iter().fold(0, |acc, &x| acc * self.n + x)
    }

    pub fn tuple(&self, mut index: usize) -> Vec<usize> {
        let mut t = vec![0; self.arity];
        for slot in t.iter_mut().rev() {
            *slot = index % self.n;
            index /= self.n;
        }
        t
    }

    pub fn get(&self, tuple: &[usize]) -> bool {
        self.bits[self.index(tuple)]
    }

    pub fn set(&mut self, tuple: &[usize], value: bool) {
        let i = self.index(tuple);
        self.bits[i] = value;
    }

    pub fn get_index(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn set_index(&mut self, i: usize, value: bool) {
        self.bits[i] = value;
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count_true(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn true_tuples(&self) -> Vec<Vec<usize>> {
        (0..self.bits.len()).filter(|&i| self.bits[i]).map(|i| self.tuple(i)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct GroundAtom {
    pub predicate: String,
    pub args: Vec<String>,
}

impl GroundAtom {
    pub fn new<S: AsRef<str>>(predicate: impl Into<String>, args: &[S]) -> Self {
        GroundAtom { predicate: predicate.into(), args: args.iter().map(|a| a.as_ref().to_owned()).collect() }
    }
}

impl fmt::Display for GroundAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.predicate, self.args.join(","))
    }
}

/// Closed-world truth assignment: predicates with a relation are fully
/// interpreted, predicates without one are unassigned.
#[derive(Clone, Debug)]
pub struct TruthAssignment {
    universe: Universe,
    relations: Vec<(String, Relation)>,
    index: HashMap<String, usize>,
}

impl PartialEq for TruthAssignment {
    fn eq(&self, other: &Self) -> bool {
        self.universe == other.universe && self.relations == other.relations
    }
}

impl Eq for TruthAssignment {}

impl TruthAssignment {
    pub fn empty(universe: &Universe) -> Self {
        TruthAssignment { universe: universe.clone(), relations: Vec::new(), index: HashMap::new() }
    }

    /// All-false assignment to the basic predicates of `signature`.
    pub fn basic(signature: &Signature, universe: &Universe) -> Self {
        let mut s = TruthAssignment::empty(universe);
        for p in signature.basic() {
            s.insert(&p.name, Relation::new(p.arity, universe.len()));
        }
        s
    }

    pub fn universe(&self) -> &Universe {
        &self.universe
    }

    pub fn insert(&mut self, name: &str, relation: Relation) {
        match self.index.get(name) {
            Some(&i) => self.relations[i].1 = relation,
            None => {
                self.index.insert(name.to_owned(), self.relations.len());
                self.relations.push((name.to_owned(), relation));
            }
        }
    }

    pub fn relation(&self, name: &str) -> Option<&Relation> {
        self.index.get(name).map(|&i| &self.relations[i].1)
    }

    pub fn relation_mut(&mut self, name: &str) -> Option<&mut Relation> {
        self.index.get(name).map(|&i| &mut self.relations[i].1)
    }

    pub fn relations(&self) -> impl Iterator<Item = (&str, &Relation)> {
        self.relations.iter().map(|(n, r)| (n.as_str(), r))
    }

    /// Truth value of a ground atom, `None` when the predicate or an object
    /// is unknown.
    pub fn holds(&self, atom: &GroundAtom) -> Option<bool> {
        let rel = self.relation(&atom.predicate)?;
        if rel.arity != atom.args.len() {
            return None;
        }
        let tuple: Option<Vec<usize>> = atom.args.iter().map(|a| self.universe.index_of(a)).collect();
        Some(rel.get(&tuple?))
    }

    pub fn set(&mut self, atom: &GroundAtom, value: bool) -> Result<(), EvalError> {
        let tuple: Vec<usize> = atom
            .args
            .iter()
            .map(|a| self.universe.index_of(a).ok_or_else(|| EvalError::UnknownObject(a.clone())))
            .collect::<Result<_, _>>()?;
        let rel = self.relation_mut(&atom.predicate).ok_or_else(|| EvalError::MissingRelation(atom.predicate.clone()))?;
        if rel.arity != tuple.len() {
            return Err(EvalError::ArityMismatch {
                predicate: atom.predicate.clone(),
                expected: tuple.len(),
                found: rel.arity,
            });
        }
        rel.set(&tuple, value);
        Ok(())
    }

    fn atoms_of(&self, name: &str, rel: &Relation) -> Vec<GroundAtom> {
        rel.true_tuples()
            .into_iter()
            .map(|t| GroundAtom {
                predicate: name.to_owned(),
                args: t.iter().map(|&i| self.universe.name(i).to_owned()).collect(),
            })
            .collect()
    }

    /// True atoms, grouped by predicate in insertion order, tuples in
    /// lexicographic object order.
    pub fn true_atoms(&self) -> Vec<GroundAtom> {
        self.relations.iter().flat_map(|(n, r)| self.atoms_of(n, r)).collect()
    }

    /// True atoms over the given predicates, in the order of `names`.
    pub fn true_atoms_of<'a>(&self, names: impl IntoIterator<Item = &'a str>) -> Vec<GroundAtom> {
        names.into_iter().filter_map(|n| self.relation(n).map(|r| self.atoms_of(n, r))).flatten().collect()
    }

    /// Number of ground atoms over the assigned predicates.
    pub fn atom_count(&self) -> usize {
        self.relations.iter().map(|(_, r)| r.len()).sum()
    }
}

// ---------------------------------------------------------------------------
// Compiled formulas

#[derive(Clone, Copy, Debug)]
enum Arg {
    Slot(usize),
    Obj(usize),
}

#[derive(Clone, Debug)]
enum Node {
    Atom { rel: usize, args: Vec<Arg> },
    Const(bool),
    Not(Box<Node>),
    And(Vec<Node>),
    Or(Vec<Node>),
    Exists(Vec<usize>, Box<Node>),
    Forall(Vec<usize>, Box<Node>),
}

struct Compiler<'a> {
    layout: &'a HashMap<String, usize>,
    universe: &'a Universe,
    scope: Vec<(String, usize)>,
    next: usize,
    max: usize,
}

impl Compiler<'_> {
    fn alloc(&mut self) -> usize {
        let s = self.next;
        self.next += 1;
        self.max = self.max.max(self.next);
        s
    }

    fn compile(&mut self, f: &Formula) -> Result<Node, EvalError> {
        Ok(match f {
            Formula::Atom(a) => {
                let rel = *self.layout.get(&a.predicate).ok_or_else(|| EvalError::MissingRelation(a.predicate.clone()))?;
                let args = a
                    .args
                    .iter()
                    .map(|t| match t {
                        Term::Var(v) => self
                            .scope
                            .iter()
                            .rev()
                            .find(|(n, _)| n == v)
                            .map(|&(_, s)| Arg::Slot(s))
                            .ok_or_else(|| EvalError::UnboundVariable(v.clone())),
                        Term::Const(c) => {
                            self.universe.index_of(c).map(Arg::Obj).ok_or_else(|| EvalError::UnknownObject(c.clone()))
                        }
                    })
                    .collect::<Result<_, _>>()?;
                Node::Atom { rel, args }
            }
            Formula::Top => Node::Const(true),
            Formula::Bottom => Node::Const(false),
            Formula::Not(sub) => Node::Not(Box::new(self.compile(sub)?)),
            Formula::And(subs) => Node::And(subs.iter().map(|s| self.compile(s)).collect::<Result<_, _>>()?),
            Formula::Or(subs) => Node::Or(subs.iter().map(|s| self.compile(s)).collect::<Result<_, _>>()?),
            Formula::Exists(vs, sub) | Formula::Forall(vs, sub) => {
                let (scope_len, next) = (self.scope.len(), self.next);
                let slots: Vec<usize> = vs
                    .iter()
                    .map(|v| {
                        let s = self.alloc();
                        self.scope.push((v.clone(), s));
                        s
                    })
                    .collect();
                let body = Box::new(self.compile(sub)?);
                self.scope.truncate(scope_len);
                self.next = next;
                if matches!(f, Formula::Exists(..)) {
                    Node::Exists(slots, body)
                } else {
                    Node::Forall(slots, body)
                }
            }
        })
    }
}

fn eval_node(node: &Node, rels: &[Relation], env: &mut [usize], n: usize) -> bool {
    match node {
        Node::Atom { rel, args } => {
            let r = &rels[*rel];
            let mut idx = 0;
            for a in args {
                idx = idx * n
                    + match *a {
                        Arg::Slot(s) => env[s],
                        Arg::Obj(o) => o,
                    };
            }
            r.bits[idx]
        }
        Node::Const(b) => *b,
        Node::Not(sub) => !eval_node(sub, rels, env, n),
        Node::And(subs) => subs.iter().all(|s| eval_node(s, rels, env, n)),
        Node::Or(subs) => subs.iter().any(|s| eval_node(s, rels, env, n)),
        Node::Exists(slots, sub) => quantify(slots, sub, rels, env, n, true),
        Node::Forall(slots, sub) => !quantify(slots, sub, rels, env, n, false),
    }
}

/// Searches for an assignment of `slots` under which `sub` evaluates to
/// `want`.
fn quantify(slots: &[usize], sub: &Node, rels: &[Relation], env: &mut [usize], n: usize, want: bool) -> bool {
    match slots.split_first() {
        None => eval_node(sub, rels, env, n) == want,
        Some((&s, rest)) => (0..n).any(|o| {
            env[s] = o;
            quantify(rest, sub, rels, env, n, want)
        }),
    }
}

/// Truth of `formula` in `assignment` with free variables bound by `env`.
pub fn eval_formula(
    formula: &Formula,
    assignment: &TruthAssignment,
    env: &BTreeMap<String, String>,
) -> Result<bool, EvalError> {
    let universe = &assignment.universe;
    let mut compiler = Compiler { layout: &assignment.index, universe, scope: Vec::new(), next: 0, max: 0 };
    let mut values = Vec::new();
    for (var, obj) in env {
        let slot = compiler.alloc();
        compiler.scope.push((var.clone(), slot));
        values.push(universe.index_of(obj).ok_or_else(|| EvalError::UnknownObject(obj.clone()))?);
    }
    let node = compiler.compile(formula)?;
    let rels: Vec<Relation> = assignment.relations.iter().map(|(_, r)| r.clone()).collect();
    let mut slots = vec![0; compiler.max];
    slots[..values.len()].copy_from_slice(&values);
    Ok(eval_node(&node, &rels, &mut slots, universe.len()))
}

// ---------------------------------------------------------------------------
// Stratum evaluation

#[derive(Clone, Debug)]
struct CompiledAxiom {
    head: usize,
    arity: usize,
    body: Node,
    slots: usize,
}

impl CompiledAxiom {
    fn ground_count(&self, n: usize) -> usize {
        n.pow(self.arity as u32)
    }

    fn load(&self, tuple_index: usize, n: usize, env: &mut [usize]) {
        let mut idx = tuple_index;
        for s in (0..self.arity).rev() {
            env[s] = idx % n;
            idx /= n;
        }
    }
}

/// How the fixed point of each stratum is computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    Sequential,
    Staged,
    Shuffled(u64),
}

/// Stage numbers of the atoms derived by one stratum. Stage 0 in the raw
/// table means "never derived", reported as `fixpoint + 1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StageTable {
    pub stratum: usize,
    pub predicates: Vec<Predicate>,
    stages: Vec<Vec<u32>>,
    pub fixpoint: u32,
    #[serde(skip)]
    universe: Option<Universe>,
}

impl StageTable {
    /// Stage of `P_i(a)` where `tuple` indexes `a` lexicographically.
    pub fn stage(&self, pred: usize, tuple: usize) -> u32 {
        match self.stages[pred][tuple] {
            0 => self.fixpoint + 1,
            s => s,
        }
    }

    pub fn explicit_stage(&self, pred: usize, tuple: usize) -> Option<u32> {
        match self.stages[pred][tuple] {
            0 => None,
            s => Some(s),
        }
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.predicates.iter().position(|p| p.name == name)
    }

    pub fn stage_of(&self, atom: &GroundAtom) -> Option<u32> {
        let i = self.position(&atom.predicate)?;
        let u = self.universe.as_ref()?;
        let tuple: Option<Vec<usize>> = atom.args.iter().map(|a| u.index_of(a)).collect();
        let rel = Relation::new(self.predicates[i].arity, u.len());
        Some(self.stage(i, rel.index(&tuple?)))
    }

    /// Atoms with an explicit stage, ordered by stage, predicate, tuple.
    pub fn entries(&self) -> Vec<(GroundAtom, u32)> {
        let Some(u) = &self.universe else { return Vec::new() };
        let mut out = Vec::new();
        for (pi, p) in self.predicates.iter().enumerate() {
            let rel = Relation::new(p.arity, u.len());
            for (ti, &s) in self.stages[pi].iter().enumerate() {
                if s > 0 {
                    let args = rel.tuple(ti).iter().map(|&o| u.name(o).to_owned()).collect();
                    out.push((GroundAtom { predicate: p.name.clone(), args }, s));
                }
            }
        }
        out.sort_by(|a, b| a.1.cmp(&b.1));
        out
    }

    pub fn tuple_count(&self, pred: usize) -> usize {
        self.stages[pred].len()
    }
}

/// A program compiled against a fixed universe; reusable across states.
#[derive(Clone, Debug)]
pub struct Evaluator {
    universe: Universe,
    predicates: Vec<Predicate>,
    strata: Vec<Vec<CompiledAxiom>>,
    affected: Vec<Vec<usize>>,
}

impl Evaluator {
    pub fn new(program: &AxiomProgram, universe: &Universe) -> Result<Self, EvalError> {
        let predicates: Vec<Predicate> = program.signature().iter().cloned().collect();
        let layout: HashMap<String, usize> = predicates.iter().enumerate().map(|(i, p)| (p.name.clone(), i)).collect();
        let mut strata = Vec::new();
        let mut affected = Vec::new();
        for stratum in program.strata() {
            strata.push(compile_stratum(stratum, &layout, universe)?);
            affected.push(stratum.affected().iter().map(|n| layout[*n]).collect());
        }
        Ok(Evaluator { universe: universe.clone(), predicates, strata, affected })
    }

    pub fn universe(&self) -> &Universe {
        &self.universe
    }

    fn load(&self, basic: &TruthAssignment) -> Result<Vec<Relation>, EvalError> {
        let n = self.universe.len();
        self.predicates
            .iter()
            .map(|p| match p.kind {
                PredicateKind::Derived => Ok(Relation::new(p.arity, n)),
                PredicateKind::Basic => {
                    let r = basic.relation(&p.name).ok_or_else(|| EvalError::MissingRelation(p.name.clone()))?;
                    if r.arity != p.arity || r.n != n {
                        return Err(EvalError::ArityMismatch {
                            predicate: p.name.clone(),
                            expected: p.arity,
                            found: r.arity,
                        });
                    }
                    Ok(r.clone())
                }
            })
            .collect()
    }

    fn store(&self, rels: Vec<Relation>) -> TruthAssignment {
        let mut s = TruthAssignment::empty(&self.universe);
        for (p, r) in self.predicates.iter().zip(rels) {
            s.insert(&p.name, r);
        }
        s
    }

    pub fn extend(&self, basic: &TruthAssignment) -> Result<TruthAssignment, EvalError> {
        Ok(self.extend_with(basic, Strategy::Sequential)?.0)
    }

    /// Extension of `basic`, plus one stage table per stratum when
    /// `strategy` is [`Strategy::Staged`].
    pub fn extend_with(
        &self,
        basic: &TruthAssignment,
        strategy: Strategy,
    ) -> Result<(TruthAssignment, Vec<StageTable>), EvalError> {
        let (rels, tables) = self.run(basic, self.strata.len(), strategy)?;
        Ok((self.store(rels), tables))
    }

    /// Extension restricted to the first `strata` strata.
    pub fn extend_prefix(&self, basic: &TruthAssignment, strata: usize) -> Result<TruthAssignment, EvalError> {
        let (rels, _) = self.run(basic, strata.min(self.strata.len()), Strategy::Sequential)?;
        Ok(self.store(rels))
    }

    fn run(
        &self,
        basic: &TruthAssignment,
        upto: usize,
        strategy: Strategy,
    ) -> Result<(Vec<Relation>, Vec<StageTable>), EvalError> {
        let mut rels = self.load(basic)?;
        let mut tables = Vec::new();
        let mut rng = match strategy {
            Strategy::Shuffled(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
            _ => None,
        };
        for si in 0..upto {
            let axioms = &self.strata[si];
            match strategy {
                Strategy::Sequential => sequential(axioms, &mut rels, self.universe.len()),
                Strategy::Shuffled(_) => shuffled(axioms, &mut rels, self.universe.len(), rng.as_mut().unwrap()),
                Strategy::Staged => {
                    let preds = &self.affected[si];
                    let (stages, f) = staged(axioms, preds, &mut rels, self.universe.len());
                    tables.push(StageTable {
                        stratum: si,
                        predicates: preds.iter().map(|&p| self.predicates[p].clone()).collect(),
                        stages,
                        fixpoint: f,
                        universe: Some(self.universe.clone()),
                    });
                }
            }
        }
        Ok((rels, tables))
    }
}

fn compile_stratum(
    stratum: &Stratum,
    layout: &HashMap<String, usize>,
    universe: &Universe,
) -> Result<Vec<CompiledAxiom>, EvalError> {
    stratum
        .axioms()
        .iter()
        .map(|ax| {
            let mut c = Compiler { layout, universe, scope: Vec::new(), next: 0, max: 0 };
            for v in ax.head_vars() {
                let s = c.alloc();
                c.scope.push((v, s));
            }
            let body = c.compile(&ax.body)?;
            let head = *layout.get(&ax.head.predicate).ok_or_else(|| EvalError::MissingRelation(ax.head.predicate.clone()))?;
            Ok(CompiledAxiom { head, arity: ax.head.args.len(), body, slots: c.max })
        })
        .collect()
}

fn sequential(axioms: &[CompiledAxiom], rels: &mut [Relation], n: usize) {
    let mut env = vec![0; axioms.iter().map(|a| a.slots).max().unwrap_or(0)];
    loop {
        let mut changed = false;
        for ax in axioms {
            for t in 0..ax.ground_count(n) {
                if rels[ax.head].bits[t] {
                    continue;
                }
                ax.load(t, n, &mut env);
                if eval_node(&ax.body, rels, &mut env, n) {
                    rels[ax.head].bits[t] = true;
                    changed = true;
                }
            }
        }
        if !changed {
            return;
        }
    }
}

fn shuffled(axioms: &[CompiledAxiom], rels: &mut [Relation], n: usize, rng: &mut ChaCha8Rng) {
    let mut env = vec![0; axioms.iter().map(|a| a.slots).max().unwrap_or(0)];
    let mut ground: Vec<(usize, usize)> =
        axioms.iter().enumerate().flat_map(|(ai, ax)| (0..ax.ground_count(n)).map(move |t| (ai, t))).collect();
    loop {
        ground.shuffle(rng);
        let mut changed = false;
        for &(ai, t) in &ground {
            let ax = &axioms[ai];
            if rels[ax.head].bits[t] {
                continue;
            }
            ax.load(t, n, &mut env);
            if eval_node(&ax.body, rels, &mut env, n) {
                rels[ax.head].bits[t] = true;
                changed = true;
            }
        }
        if !changed {
            return;
        }
    }
}

/// Snapshot iteration. Returns per affected predicate the stage of every
/// tuple (0 = never derived) and the last productive stage.
fn staged(axioms: &[CompiledAxiom], preds: &[usize], rels: &mut [Relation], n: usize) -> (Vec<Vec<u32>>, u32) {
    let mut env = vec![0; axioms.iter().map(|a| a.slots).max().unwrap_or(0)];
    let mut stages: Vec<Vec<u32>> = preds.iter().map(|&p| vec![0; rels[p].len()]).collect();
    let mut stage = 0u32;
    loop {
        // Collecting before applying makes every body read the snapshot.
        let mut fresh = Vec::new();
        for ax in axioms {
            for t in 0..ax.ground_count(n) {
                if rels[ax.head].bits[t] {
                    continue;
                }
                ax.load(t, n, &mut env);
                if eval_node(&ax.body, rels, &mut env, n) {
                    fresh.push((ax.head, t));
                }
            }
        }
        if fresh.is_empty() {
            return (stages, stage);
        }
        stage += 1;
        for (p, t) in fresh {
            if !rels[p].bits[t] {
                rels[p].bits[t] = true;
                let pi = preds.iter().position(|&q| q == p).expect("head is affected");
                stages[pi][t] = stage;
            }
        }
    }
}

/// Convenience wrapper around [`Evaluator`].
pub fn extend(program: &AxiomProgram, universe: &Universe, basic: &TruthAssignment) -> Result<TruthAssignment, EvalError> {
    Evaluator::new(program, universe)?.extend(basic)
}

/// Fixed point of `stratum` on `state` (sequential strategy).
pub fn extend_stratum(stratum: &Stratum, state: &mut TruthAssignment) -> Result<(), EvalError> {
    let axioms = compile_stratum(stratum, &state.index, &state.universe)?;
    let n = state.universe.len();
    let mut rels: Vec<Relation> = state.relations.iter().map(|(_, r)| r.clone()).collect();
    sequential(&axioms, &mut rels, n);
    for ((_, slot), r) in state.relations.iter_mut().zip(rels) {
        *slot = r;
    }
    Ok(())
}

/// Staged fixed point of `stratum` on `state`. Derived predicates of the
/// stratum must already have (all-false) relations in `state`.
pub fn extend_stratum_in_stages(
    stratum: &Stratum,
    stratum_index: usize,
    state: &mut TruthAssignment,
) -> Result<StageTable, EvalError> {
    let axioms = compile_stratum(stratum, &state.index, &state.universe)?;
    let n = state.universe.len();
    let preds: Vec<usize> = stratum.affected().iter().map(|p| state.index[*p]).collect();
    let mut rels: Vec<Relation> = state.relations.iter().map(|(_, r)| r.clone()).collect();
    let (stages, f) = staged(&axioms, &preds, &mut rels, n);
    let predicates = preds
        .iter()
        .map(|&p| Predicate::derived(state.relations[p].0.clone(), state.relations[p].1.arity))
        .collect();
    for ((_, slot), r) in state.relations.iter_mut().zip(rels) {
        *slot = r;
    }
    Ok(StageTable { stratum: stratum_index, predicates, stages, fixpoint: f, universe: Some(state.universe.clone()) })
}

// ---------------------------------------------------------------------------
// Stage relations

/// The five comparisons between stages of two ground atoms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StageRel {
    /// strictly earlier
    Lt,
    /// derived, and no later
    Leq,
    /// not strictly earlier
    Nlt,
    /// later, or never derived
    Nleq,
    /// exactly one stage earlier
    Tri,
}

impl StageRel {
    pub const ALL: [StageRel; 5] = [StageRel::Lt, StageRel::Leq, StageRel::Nlt, StageRel::Nleq, StageRel::Tri];

    pub fn name(self) -> &'static str {
        match self {
            StageRel::Lt => "lt",
            StageRel::Leq => "leq",
            StageRel::Nlt => "nlt",
            StageRel::Nleq => "nleq",
            StageRel::Tri => "tri",
        }
    }

    pub fn holds(self, a: u32, b: u32, fixpoint: u32) -> bool {
        match self {
            StageRel::Lt => a < b,
            StageRel::Leq => a <= b && a <= fixpoint,
            StageRel::Nlt => a >= b,
            StageRel::Nleq => a > b || a == fixpoint + 1,
            StageRel::Tri => a + 1 == b,
        }
    }
}

impl fmt::Display for StageRel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Extensional stage relations of one stratum, indexed by `(rel, i, j)`.
/// The relation for `(i, j)` has arity `r_i + r_j`; a pair of tuples is
/// indexed as the concatenated tuple.
#[derive(Clone, Debug)]
pub struct StageRelations {
    pub predicates: Vec<Predicate>,
    relations: BTreeMap<(StageRel, usize, usize), Relation>,
}

impl StageRelations {
    pub fn get(&self, rel: StageRel, i: usize, j: usize) -> Option<&Relation> {
        self.relations.get(&(rel, i, j))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(StageRel, usize, usize), &Relation)> {
        self.relations.iter()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("predicate index {index} is outside 0..{count}")]
pub struct PredicateIndexError {
    pub index: usize,
    pub count: usize,
}

/// Computes all five relations for all `(i, j)` directly from stage numbers.
pub fn stage_relations(table: &StageTable) -> StageRelations {
    let m = table.predicates.len();
    let mut relations = BTreeMap::new();
    for i in 0..m {
        for j in 0..m {
            for rel in StageRel::ALL {
                relations.insert((rel, i, j), stage_relation(table, rel, i, j).expect("indices in range"));
            }
        }
    }
    StageRelations { predicates: table.predicates.clone(), relations }
}

/// One relation `rel` between `P_i` and `P_j`.
pub fn stage_relation(table: &StageTable, rel: StageRel, i: usize, j: usize) -> Result<Relation, PredicateIndexError> {
    let m = table.predicates.len();
    for index in [i, j] {
        if index >= m {
            return Err(PredicateIndexError { index, count: m });
        }
    }
    let (ni, nj) = (table.tuple_count(i), table.tuple_count(j));
    let n = table.universe.as_ref().map_or(1, Universe::len);
    let mut out = Relation::new(table.predicates[i].arity + table.predicates[j].arity, n);
    for a in 0..ni {
        let sa = table.stage(i, a);
        for b in 0..nj {
            if rel.holds(sa, table.stage(j, b), table.fixpoint) {
                out.bits[a * nj + b] = true;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_program, parse_state};

    const PATH: &str = "(program (objects a b c) (basic (E 2)) (derived (path 2) (acyclic 0))
      (stratum (axiom (path ?x ?y) (or (E ?x ?y) (exists (?z) (and (E ?x ?z) (path ?z ?y))))))
      (stratum (axiom (acyclic) (forall (?x) (not (path ?x ?x))))))";

    fn setup(state: &str) -> (AxiomProgram, Universe, TruthAssignment) {
        let p = parse_program(PATH).unwrap();
        let u = Universe::new(p.objects().to_vec()).unwrap();
        let s = parse_state(state, &p).unwrap();
        (p, u, s)
    }

    fn atoms(s: &TruthAssignment, pred: &str) -> Vec<String> {
        s.true_atoms_of([pred]).iter().map(|a| a.to_string()).collect()
    }

    #[test]
    fn universe_validation() {
        assert_eq!(Universe::new(vec![]), Err(EvalError::EmptyUniverse));
        assert!(matches!(Universe::new(vec!["a".into(), "a".into()]), Err(EvalError::DuplicateObject(_))));
    }

    #[test]
    fn eval_formula_cases() {
        let u = Universe::new(vec!["a".into(), "b".into()]).unwrap();
        let mut s = TruthAssignment::empty(&u);
        let mut path = Relation::new(2, 2);
        path.set(&[0, 1], true);
        s.insert("path", path);
        let mut e = Relation::new(2, 2);
        e.set(&[0, 1], true);
        s.insert("E", e);

        let acyclic = Formula::forall(
            vec!["x".into()],
            Formula::not(Formula::atom("path", vec![Term::var("x"), Term::var("x")])),
        );
        assert!(eval_formula(&acyclic, &s, &BTreeMap::new()).unwrap());
        assert!(!eval_formula(&Formula::Bottom, &s, &BTreeMap::new()).unwrap());
        let eab = Formula::atom("E", vec![Term::constant("a"), Term::constant("b")]);
        assert!(eval_formula(&eab, &s, &BTreeMap::new()).unwrap());

        let open = Formula::atom("E", vec![Term::var("x"), Term::var("y")]);
        assert_eq!(eval_formula(&open, &s, &BTreeMap::new()), Err(EvalError::UnboundVariable("x".into())));
        let env: BTreeMap<_, _> = [("x".to_string(), "a".to_string()), ("y".to_string(), "b".to_string())].into();
        assert!(eval_formula(&open, &s, &env).unwrap());
    }

    #[test]
    fn extend_path_examples() {
        let (p, u, s) = setup("(state (E a b) (E b c))");
        let ext = extend(&p, &u, &s).unwrap();
        assert_eq!(atoms(&ext, "path"), ["path(a,b)", "path(a,c)", "path(b,c)"]);
        assert_eq!(atoms(&ext, "acyclic"), ["acyclic()"]);

        let (p, u, s) = setup("(state)");
        let ext = extend(&p, &u, &s).unwrap();
        assert!(atoms(&ext, "path").is_empty());
        assert_eq!(atoms(&ext, "acyclic"), ["acyclic()"]);

        let (p, u, s) = setup("(state (E a a))");
        let ext = extend(&p, &u, &s).unwrap();
        assert_eq!(atoms(&ext, "path"), ["path(a,a)"]);
        assert!(atoms(&ext, "acyclic").is_empty());
    }

    #[test]
    fn staged_path_table() {
        let (p, u, s) = setup("(state (E a b) (E b c))");
        let (ext, tables) = Evaluator::new(&p, &u).unwrap().extend_with(&s, Strategy::Staged).unwrap();
        assert_eq!(ext, extend(&p, &u, &s).unwrap());
        let t = &tables[0];
        assert_eq!(t.fixpoint, 2);
        let stage = |a: &str, b: &str| t.stage_of(&GroundAtom::new("path", &[a, b])).unwrap();
        assert_eq!((stage("a", "b"), stage("b", "c"), stage("a", "c")), (1, 1, 2));
        assert_eq!(stage("c", "a"), 3);
        assert_eq!(t.explicit_stage(0, 0), None);

        let rels = stage_relations(t);
        let tri = rels.get(StageRel::Tri, 0, 0).unwrap();
        // (a,b) = tuple 1, (a,c) = tuple 2; concatenated index = a * 9 + b
        assert!(tri.get(&[0, 1, 0, 2]));
        assert!(!tri.get(&[0, 2, 0, 1]));
        assert!(rels.get(StageRel::Nlt, 0, 0).unwrap().get(&[0, 1, 0, 1]));
        assert!(rels.get(StageRel::Nleq, 0, 0).unwrap().get(&[2, 0, 0, 1]));
        assert!(stage_relation(t, StageRel::Lt, 0, 1).is_err());
    }

    #[test]
    fn staged_empty_and_saturated() {
        let (p, u, s) = setup("(state)");
        let (_, tables) = Evaluator::new(&p, &u).unwrap().extend_with(&s, Strategy::Staged).unwrap();
        assert_eq!(tables[0].fixpoint, 0);
        assert_eq!(tables[0].stage_of(&GroundAtom::new("path", &["a", "b"])), Some(1));
        assert!(tables[0].entries().is_empty());

        // Running the stratum again on its own fixed point derives nothing.
        let (p, u, s) = setup("(state (E a b) (E b c))");
        let mut ext = extend(&p, &u, &s).unwrap();
        let t = extend_stratum_in_stages(&p.strata()[0], 0, &mut ext).unwrap();
        assert_eq!(t.fixpoint, 0);
        assert!(t.entries().is_empty());
    }

    #[test]
    fn extend_stratum_matches_evaluator() {
        let (p, u, s) = setup("(state (E a b) (E b c) (E c a))");
        let mut st = s.clone();
        for d in p.signature().derived() {
            st.insert(&d.name, Relation::new(d.arity, u.len()));
        }
        for stratum in p.strata() {
            extend_stratum(stratum, &mut st).unwrap();
        }
        assert_eq!(st, extend(&p, &u, &s).unwrap());
    }
}
