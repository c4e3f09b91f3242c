//! Relational vocabulary, first-order formulas, axioms and stratified programs.
//!
//! Formulas are built through the smart constructors on [`Formula`] so that
//! `And`/`Or` always have at least two children and quantifiers bind at least
//! one variable. Unary cases collapse to the child.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PredicateKind {
    Basic,
    Derived,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Predicate {
    pub name: String,
    pub arity: usize,
    pub kind: PredicateKind,
}

impl Predicate {
    pub fn basic(name: impl Into<String>, arity: usize) -> Self {
        Predicate { name: name.into(), arity, kind: PredicateKind::Basic }
    }

    pub fn derived(name: impl Into<String>, arity: usize) -> Self {
        Predicate { name: name.into(), arity, kind: PredicateKind::Derived }
    }

    pub fn is_derived(&self) -> bool {
        self.kind == PredicateKind::Derived
    }
}

/// A variable (stored without its `?` sigil) or an object constant.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(tag = "kind", content = "name", rename_all = "lowercase")]
pub enum Term {
    Var(String),
    Const(String),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Self {
        Term::Var(name.into())
    }

    pub fn constant(name: impl Into<String>) -> Self {
        Term::Const(name.into())
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            Term::Var(v) => Some(v),
            Term::Const(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(predicate: impl Into<String>, args: Vec<Term>) -> Self {
        Atom { predicate: predicate.into(), args }
    }

    /// Atom whose arguments are all variables.
    pub fn with_vars<S: AsRef<str>>(predicate: impl Into<String>, vars: &[S]) -> Self {
        Atom::new(predicate, vars.iter().map(|v| Term::var(v.as_ref())).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "op", content = "args", rename_all = "lowercase")]
pub enum Formula {
    Atom(Atom),
    Top,
    Bottom,
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Exists(Vec<String>, Box<Formula>),
    Forall(Vec<String>, Box<Formula>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    pub fn flip(self) -> Self {
        match self {
            Polarity::Positive => Polarity::Negative,
            Polarity::Negative => Polarity::Positive,
        }
    }
}

impl Formula {
    pub fn atom(predicate: impl Into<String>, args: Vec<Term>) -> Self {
        Formula::Atom(Atom::new(predicate, args))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(sub: Formula) -> Self {
        Formula::Not(Box::new(sub))
    }

    /// Conjunction; empty is `Top`, a single conjunct is returned as is.
    pub fn and(mut subs: Vec<Formula>) -> Self {
        match subs.len() {
            0 => Formula::Top,
            1 => subs.pop().unwrap(),
            _ => Formula::And(subs),
        }
    }

    /// Disjunction; empty is `Bottom`, a single disjunct is returned as is.
    pub fn or(mut subs: Vec<Formula>) -> Self {
        match subs.len() {
            0 => Formula::Bottom,
            1 => subs.pop().unwrap(),
            _ => Formula::Or(subs),
        }
    }

    pub fn exists(vars: Vec<String>, sub: Formula) -> Self {
        if vars.is_empty() {
            sub
        } else {
            Formula::Exists(vars, Box::new(sub))
        }
    }

    pub fn forall(vars: Vec<String>, sub: Formula) -> Self {
        if vars.is_empty() {
            sub
        } else {
            Formula::Forall(vars, Box::new(sub))
        }
    }

    pub fn children(&self) -> &[Formula] {
        match self {
            Formula::Atom(_) | Formula::Top | Formula::Bottom => &[],
            Formula::Not(sub) | Formula::Exists(_, sub) | Formula::Forall(_, sub) => {
                std::slice::from_ref(sub.as_ref())
            }
            Formula::And(subs) | Formula::Or(subs) => subs,
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let mut bound = Vec::new();
        self.collect_free(&mut bound, &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match self {
            Formula::Atom(atom) => {
                for t in &atom.args {
                    if let Term::Var(v) = t {
                        if !bound.contains(v) {
                            out.insert(v.clone());
                        }
                    }
                }
            }
            Formula::Top | Formula::Bottom => {}
            Formula::Not(sub) => sub.collect_free(bound, out),
            Formula::And(subs) | Formula::Or(subs) => {
                for s in subs {
                    s.collect_free(bound, out);
                }
            }
            Formula::Exists(vars, sub) | Formula::Forall(vars, sub) => {
                let n = bound.len();
                bound.extend(vars.iter().cloned());
                sub.collect_free(bound, out);
                bound.truncate(n);
            }
        }
    }

    /// The node at `path` (child indices from this node).
    pub fn at_path(&self, path: &[usize]) -> Option<&Formula> {
        let mut cur = self;
        for &i in path {
            cur = cur.children().get(i)?;
        }
        Some(cur)
    }

    /// All atom occurrences in preorder, with their path and polarity.
    pub fn occurrences(&self) -> Vec<(Vec<usize>, &Atom, Polarity)> {
        let mut out = Vec::new();
        let mut path = Vec::new();
        self.collect_occurrences(&mut path, Polarity::Positive, &mut out);
        out
    }

    fn collect_occurrences<'a>(
        &'a self,
        path: &mut Vec<usize>,
        pol: Polarity,
        out: &mut Vec<(Vec<usize>, &'a Atom, Polarity)>,
    ) {
        match self {
            Formula::Atom(a) => out.push((path.clone(), a, pol)),
            Formula::Not(sub) => {
                path.push(0);
                sub.collect_occurrences(path, pol.flip(), out);
                path.pop();
            }
            _ => {
                for (i, c) in self.children().iter().enumerate() {
                    path.push(i);
                    c.collect_occurrences(path, pol, out);
                    path.pop();
                }
            }
        }
    }

    /// Rebuilds the formula, replacing every atom by `f(atom, polarity)`.
    pub fn map_atoms<F>(&self, f: &mut F) -> Formula
    where
        F: FnMut(&Atom, Polarity) -> Formula,
    {
        self.map_atoms_at(Polarity::Positive, f)
    }

    fn map_atoms_at<F>(&self, pol: Polarity, f: &mut F) -> Formula
    where
        F: FnMut(&Atom, Polarity) -> Formula,
    {
        match self {
            Formula::Atom(a) => f(a, pol),
            Formula::Top => Formula::Top,
            Formula::Bottom => Formula::Bottom,
            Formula::Not(sub) => Formula::Not(Box::new(sub.map_atoms_at(pol.flip(), f))),
            Formula::And(subs) => Formula::And(subs.iter().map(|s| s.map_atoms_at(pol, f)).collect()),
            Formula::Or(subs) => Formula::Or(subs.iter().map(|s| s.map_atoms_at(pol, f)).collect()),
            Formula::Exists(vs, sub) => Formula::Exists(vs.clone(), Box::new(sub.map_atoms_at(pol, f))),
            Formula::Forall(vs, sub) => Formula::Forall(vs.clone(), Box::new(sub.map_atoms_at(pol, f))),
        }
    }

    /// Replaces free occurrences of variables. Quantified variables shadow the
    /// binding; no renaming happens, so callers keep bound names fresh.
    pub fn subst(&self, binding: &BTreeMap<String, Term>) -> Formula {
        if binding.is_empty() {
            return self.clone();
        }
        match self {
            Formula::Atom(a) => Formula::Atom(Atom {
                predicate: a.predicate.clone(),
                args: a
                    .args
                    .iter()
                    .map(|t| match t {
                        Term::Var(v) => binding.get(v).cloned().unwrap_or_else(|| t.clone()),
                        Term::Const(_) => t.clone(),
                    })
                    .collect(),
            }),
            Formula::Top => Formula::Top,
            Formula::Bottom => Formula::Bottom,
            Formula::Not(sub) => Formula::not(sub.subst(binding)),
            Formula::And(subs) => Formula::And(subs.iter().map(|s| s.subst(binding)).collect()),
            Formula::Or(subs) => Formula::Or(subs.iter().map(|s| s.subst(binding)).collect()),
            Formula::Exists(vs, sub) | Formula::Forall(vs, sub) => {
                let inner: BTreeMap<String, Term> =
                    binding.iter().filter(|(k, _)| !vs.contains(k)).map(|(k, v)| (k.clone(), v.clone())).collect();
                let sub = Box::new(sub.subst(&inner));
                if matches!(self, Formula::Exists(..)) {
                    Formula::Exists(vs.clone(), sub)
                } else {
                    Formula::Forall(vs.clone(), sub)
                }
            }
        }
    }

    /// Renames every quantified variable with `fresh`, in preorder.
    pub fn rename_bound<F: FnMut(&str) -> String>(&self, fresh: &mut F) -> Formula {
        match self {
            Formula::Atom(_) | Formula::Top | Formula::Bottom => self.clone(),
            Formula::Not(sub) => Formula::not(sub.rename_bound(fresh)),
            Formula::And(subs) => Formula::And(subs.iter().map(|s| s.rename_bound(fresh)).collect()),
            Formula::Or(subs) => Formula::Or(subs.iter().map(|s| s.rename_bound(fresh)).collect()),
            Formula::Exists(vs, sub) | Formula::Forall(vs, sub) => {
                let new: Vec<String> = vs.iter().map(|v| fresh(v)).collect();
                let binding: BTreeMap<String, Term> =
                    vs.iter().zip(&new).map(|(o, n)| (o.clone(), Term::var(n.clone()))).collect();
                let sub = Box::new(sub.subst(&binding).rename_bound(fresh));
                if matches!(self, Formula::Exists(..)) {
                    Formula::Exists(new, sub)
                } else {
                    Formula::Forall(new, sub)
                }
            }
        }
    }

    /// Node count: every atom, term, connective, quantifier and bound
    /// variable counts one.
    pub fn size(&self) -> usize {
        match self {
            Formula::Atom(a) => 1 + a.args.len(),
            Formula::Top | Formula::Bottom => 1,
            Formula::Not(sub) => 1 + sub.size(),
            Formula::And(subs) | Formula::Or(subs) => 1 + subs.iter().map(Formula::size).sum::<usize>(),
            Formula::Exists(vs, sub) | Formula::Forall(vs, sub) => 1 + vs.len() + sub.size(),
        }
    }

    /// Folds `Top`/`Bottom` upwards. Quantifiers over a constant body fold to
    /// the constant, which relies on the universe being nonempty.
    pub fn fold_constants(&self) -> Formula {
        match self {
            Formula::Atom(_) | Formula::Top | Formula::Bottom => self.clone(),
            Formula::Not(sub) => match sub.fold_constants() {
                Formula::Top => Formula::Bottom,
                Formula::Bottom => Formula::Top,
                other => Formula::not(other),
            },
            Formula::And(subs) => {
                let mut kept = Vec::new();
                for s in subs {
                    match s.fold_constants() {
                        Formula::Bottom => return Formula::Bottom,
                        Formula::Top => {}
                        other => kept.push(other),
                    }
                }
                Formula::and(kept)
            }
            Formula::Or(subs) => {
                let mut kept = Vec::new();
                for s in subs {
                    match s.fold_constants() {
                        Formula::Top => return Formula::Top,
                        Formula::Bottom => {}
                        other => kept.push(other),
                    }
                }
                Formula::or(kept)
            }
            Formula::Exists(vs, sub) => match sub.fold_constants() {
                c @ (Formula::Top | Formula::Bottom) => c,
                other => Formula::exists(vs.clone(), other),
            },
            Formula::Forall(vs, sub) => match sub.fold_constants() {
                c @ (Formula::Top | Formula::Bottom) => c,
                other => Formula::forall(vs.clone(), other),
            },
        }
    }

    /// Collapses every `not (not A)` into `A`.
    pub fn collapse_double_negations(&self) -> Formula {
        match self {
            Formula::Atom(_) | Formula::Top | Formula::Bottom => self.clone(),
            Formula::Not(sub) => match sub.as_ref() {
                Formula::Not(inner) => inner.collapse_double_negations(),
                other => Formula::not(other.collapse_double_negations()),
            },
            Formula::And(subs) => Formula::And(subs.iter().map(|s| s.collapse_double_negations()).collect()),
            Formula::Or(subs) => Formula::Or(subs.iter().map(|s| s.collapse_double_negations()).collect()),
            Formula::Exists(vs, sub) => Formula::Exists(vs.clone(), Box::new(sub.collapse_double_negations())),
            Formula::Forall(vs, sub) => Formula::Forall(vs.clone(), Box::new(sub.collapse_double_negations())),
        }
    }

    pub fn constants(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for (_, atom, _) in self.occurrences() {
            for t in &atom.args {
                if let Term::Const(c) = t {
                    out.insert(c.clone());
                }
            }
        }
        out
    }

    /// Every variable name appearing anywhere, bound or free.
    pub fn all_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_all_vars(&mut out);
        out
    }

    fn collect_all_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::Atom(a) => out.extend(a.args.iter().filter_map(|t| t.as_var().map(str::to_owned))),
            Formula::Exists(vs, sub) | Formula::Forall(vs, sub) => {
                out.extend(vs.iter().cloned());
                sub.collect_all_vars(out);
            }
            _ => self.children().iter().for_each(|c| c.collect_all_vars(out)),
        }
    }

    /// Structural equality up to consistent renaming of bound variables,
    /// given an initial correspondence for free variables.
    pub fn alpha_eq(&self, other: &Formula, env: &mut Vec<(String, String)>) -> bool {
        match (self, other) {
            (Formula::Atom(a), Formula::Atom(b)) => {
                a.predicate == b.predicate
                    && a.args.len() == b.args.len()
                    && a.args.iter().zip(&b.args).all(|(x, y)| match (x, y) {
                        (Term::Const(c), Term::Const(d)) => c == d,
                        (Term::Var(v), Term::Var(w)) => {
                            let left = env.iter().rev().find(|(l, _)| l == v).map(|(_, r)| r);
                            let right = env.iter().rev().find(|(_, r)| r == w).map(|(l, _)| l);
                            match (left, right) {
                                (Some(r), Some(l)) => r == w && l == v,
                                (None, None) => v == w,
                                _ => false,
                            }
                        }
                        _ => false,
                    })
            }
            (Formula::Top, Formula::Top) | (Formula::Bottom, Formula::Bottom) => true,
            (Formula::Not(a), Formula::Not(b)) => a.alpha_eq(b, env),
            (Formula::And(xs), Formula::And(ys)) | (Formula::Or(xs), Formula::Or(ys)) => {
                xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| x.alpha_eq(y, env))
            }
            (Formula::Exists(vs, a), Formula::Exists(ws, b)) | (Formula::Forall(vs, a), Formula::Forall(ws, b)) => {
                if vs.len() != ws.len() {
                    return false;
                }
                let n = env.len();
                env.extend(vs.iter().cloned().zip(ws.iter().cloned()));
                let eq = a.alpha_eq(b, env);
                env.truncate(n);
                eq
            }
            _ => false,
        }
    }
}

/// Polarity of the atom at `path` inside `body`.
pub fn polarity_of(body: &Formula, path: &[usize]) -> Result<Polarity, LogicError> {
    let mut cur = body;
    let mut pol = Polarity::Positive;
    for (depth, &i) in path.iter().enumerate() {
        if let Formula::Not(_) = cur {
            pol = pol.flip();
        }
        cur = cur
            .children()
            .get(i)
            .ok_or_else(|| LogicError::InvalidPath { path: path.to_vec(), depth })?;
    }
    match cur {
        Formula::Atom(_) => Ok(pol),
        _ => Err(LogicError::NotAnAtom { path: path.to_vec() }),
    }
}

/// Capture-free substitution of free variables, rejecting constants that are
/// not objects of the program.
pub fn substitute(
    body: &Formula,
    binding: &BTreeMap<String, Term>,
    objects: &[String],
) -> Result<Formula, LogicError> {
    for term in binding.values() {
        if let Term::Const(c) = term {
            if !objects.contains(c) {
                return Err(LogicError::UndeclaredConstant(c.clone()));
            }
        }
    }
    Ok(body.subst(binding))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LogicError {
    #[error("path {path:?} leaves the formula at depth {depth}")]
    InvalidPath { path: Vec<usize>, depth: usize },
    #[error("path {path:?} does not end at an atom")]
    NotAnAtom { path: Vec<usize> },
    #[error("constant `{0}` is not a declared object")]
    UndeclaredConstant(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Axiom {
    pub head: Atom,
    pub body: Formula,
}

impl Axiom {
    pub fn new(head: Atom, body: Formula) -> Self {
        Axiom { head, body }
    }

    /// Head variables in argument order. Constants in the head are skipped;
    /// well-formed axioms have none.
    pub fn head_vars(&self) -> Vec<String> {
        self.head.args.iter().filter_map(|t| t.as_var().map(str::to_owned)).collect()
    }

    pub fn size(&self) -> usize {
        1 + self.head.args.len() + self.body.size()
    }

    pub fn alpha_eq(&self, other: &Axiom) -> bool {
        if self.head.predicate != other.head.predicate || self.head.args.len() != other.head.args.len() {
            return false;
        }
        let mut env: Vec<(String, String)> = Vec::new();
        for (a, b) in self.head.args.iter().zip(&other.head.args) {
            match (a, b) {
                (Term::Var(v), Term::Var(w)) => env.push((v.clone(), w.clone())),
                (Term::Const(c), Term::Const(d)) if c == d => {}
                _ => return false,
            }
        }
        self.body.alpha_eq(&other.body, &mut env)
    }

    /// Renames quantified variables that rebind a name already bound on the
    /// way to the root (head variables included) to `name__k`.
    pub fn freshen(&self) -> Axiom {
        let mut used = self.body.all_vars();
        used.extend(self.head_vars());
        let mut scope: Vec<String> = self.head_vars();
        let body = freshen_rec(&self.body, &mut scope, &mut used);
        Axiom { head: self.head.clone(), body }
    }
}

fn freshen_rec(f: &Formula, scope: &mut Vec<String>, used: &mut BTreeSet<String>) -> Formula {
    match f {
        Formula::Atom(_) | Formula::Top | Formula::Bottom => f.clone(),
        Formula::Not(sub) => Formula::not(freshen_rec(sub, scope, used)),
        Formula::And(subs) => Formula::And(subs.iter().map(|s| freshen_rec(s, scope, used)).collect()),
        Formula::Or(subs) => Formula::Or(subs.iter().map(|s| freshen_rec(s, scope, used)).collect()),
        Formula::Exists(vs, sub) | Formula::Forall(vs, sub) => {
            let mut binding = BTreeMap::new();
            let mut new_vars = Vec::with_capacity(vs.len());
            let mut seen_here: Vec<&String> = Vec::new();
            for v in vs {
                if scope.contains(v) || seen_here.contains(&v) {
                    let mut k = 1;
                    let fresh = loop {
                        let cand = format!("{v}__{k}");
                        if !used.contains(&cand) {
                            break cand;
                        }
                        k += 1;
                    };
                    used.insert(fresh.clone());
                    binding.insert(v.clone(), Term::var(fresh.clone()));
                    new_vars.push(fresh);
                } else {
                    new_vars.push(v.clone());
                }
                seen_here.push(v);
            }
            let renamed = sub.subst(&binding);
            let n = scope.len();
            scope.extend(new_vars.iter().cloned());
            let inner = freshen_rec(&renamed, scope, used);
            scope.truncate(n);
            if matches!(f, Formula::Exists(..)) {
                Formula::Exists(new_vars, Box::new(inner))
            } else {
                Formula::Forall(new_vars, Box::new(inner))
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct Stratum {
    axioms: Vec<Axiom>,
}

impl Stratum {
    pub fn new(axioms: Vec<Axiom>) -> Self {
        Stratum { axioms }
    }

    pub fn axioms(&self) -> &[Axiom] {
        &self.axioms
    }

    pub fn axioms_mut(&mut self) -> &mut Vec<Axiom> {
        &mut self.axioms
    }

    pub fn len(&self) -> usize {
        self.axioms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.axioms.is_empty()
    }

    /// Predicates affected by this stratum, in order of first appearance.
    pub fn affected(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for ax in &self.axioms {
            if !out.contains(&ax.head.predicate.as_str()) {
                out.push(&ax.head.predicate);
            }
        }
        out
    }
}

#[derive(Clone, Debug, Default, Serialize)]
#[serde(transparent)]
pub struct Signature {
    predicates: Vec<Predicate>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl PartialEq for Signature {
    fn eq(&self, other: &Self) -> bool {
        self.predicates == other.predicates
    }
}

impl Eq for Signature {}

impl Signature {
    pub fn new(predicates: Vec<Predicate>) -> Result<Self, ProgramError> {
        let mut sig = Signature::default();
        for p in predicates {
            sig.push(p)?;
        }
        Ok(sig)
    }

    pub fn push(&mut self, p: Predicate) -> Result<(), ProgramError> {
        if self.index.contains_key(&p.name) {
            return Err(ProgramError::DuplicatePredicate(p.name));
        }
        self.index.insert(p.name.clone(), self.predicates.len());
        self.predicates.push(p);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Predicate> {
        self.index.get(name).map(|&i| &self.predicates[i])
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Predicate> {
        self.predicates.iter()
    }

    pub fn len(&self) -> usize {
        self.predicates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predicates.is_empty()
    }

    pub fn basic(&self) -> impl Iterator<Item = &Predicate> {
        self.predicates.iter().filter(|p| p.kind == PredicateKind::Basic)
    }

    pub fn derived(&self) -> impl Iterator<Item = &Predicate> {
        self.predicates.iter().filter(|p| p.kind == PredicateKind::Derived)
    }

    pub fn is_derived(&self, name: &str) -> bool {
        self.get(name).is_some_and(Predicate::is_derived)
    }
}

/// Location of an atom occurrence inside a program.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct OccurrenceRef {
    pub stratum: usize,
    pub axiom: usize,
    pub path: Vec<usize>,
    pub predicate: String,
    pub polarity: Polarity,
}

impl fmt::Display for OccurrenceRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} occurrence of `{}` in stratum {}, axiom {}, path {:?}",
            match self.polarity {
                Polarity::Positive => "positive",
                Polarity::Negative => "negative",
            },
            self.predicate,
            self.stratum + 1,
            self.axiom + 1,
            self.path
        )
    }
}

/// Which clause of the stratification definition an occurrence breaks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StratRule {
    /// A predicate is affected by axioms in more than one stratum.
    AffectedInSeveralStrata,
    /// A predicate occurs in a stratum before the one defining it.
    UsedBeforeDefinition,
    /// A positive derived occurrence refers to a later stratum.
    PositiveFromLaterStratum,
    /// A negative derived occurrence refers to the same or a later stratum.
    NegativeNotFromEarlierStratum,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Violation {
    pub rule: StratRule,
    pub predicate: String,
    pub stratum: usize,
    pub axiom: usize,
    pub occurrence: Option<OccurrenceRef>,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match self.rule {
            StratRule::AffectedInSeveralStrata => "is affected by axioms in several strata",
            StratRule::UsedBeforeDefinition => "occurs in a stratum before the one that defines it",
            StratRule::PositiveFromLaterStratum => "occurs positively but is defined in a later stratum",
            StratRule::NegativeNotFromEarlierStratum => {
                "occurs negatively but is not defined in a strictly earlier stratum"
            }
        };
        write!(f, "`{}` {} (stratum {}, axiom {})", self.predicate, what, self.stratum + 1, self.axiom + 1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StratificationError {
    #[error("undeclared predicate `{0}`")]
    UndeclaredPredicate(String),
    #[error("program is not stratified ({} violation(s))", .0.len())]
    Violations(Vec<Violation>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProgramError {
    #[error("predicate `{0}` declared twice")]
    DuplicatePredicate(String),
    #[error("undeclared predicate `{predicate}` in stratum {}, axiom {}", .stratum + 1, .axiom + 1)]
    UndeclaredPredicate { predicate: String, stratum: usize, axiom: usize },
    #[error("`{predicate}` expects {expected} argument(s), found {found}")]
    ArityMismatch { predicate: String, expected: usize, found: usize, stratum: usize, axiom: usize },
    #[error("axiom head `{predicate}` is not a derived predicate")]
    BasicHead { predicate: String, stratum: usize, axiom: usize },
    #[error("axiom head `{predicate}` must have pairwise distinct variable arguments")]
    BadHeadArguments { predicate: String, stratum: usize, axiom: usize },
    #[error("variable `?{var}` is free in the body but not bound by the head `{predicate}`")]
    FreeVariableMismatch { var: String, predicate: String, stratum: usize, axiom: usize },
    #[error("constant `{0}` is not a declared object")]
    UnknownObject(String),
    #[error("object `{0}` declared twice")]
    DuplicateObject(String),
    #[error(transparent)]
    Stratification(#[from] StratificationError),
}

/// A sequence of strata over a signature split into basic and derived
/// predicates. Values built with [`AxiomProgram::new`] are well formed and
/// stratified.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AxiomProgram {
    signature: Signature,
    objects: Vec<String>,
    strata: Vec<Stratum>,
}

impl AxiomProgram {
    pub fn new(signature: Signature, objects: Vec<String>, strata: Vec<Stratum>) -> Result<Self, ProgramError> {
        let program = Self::unstratified(signature, objects, strata)?;
        check_stratified(&program)?;
        Ok(program)
    }

    /// Well-formedness only; the stratification conditions are not checked.
    pub fn unstratified(signature: Signature, objects: Vec<String>, strata: Vec<Stratum>) -> Result<Self, ProgramError> {
        let program = AxiomProgram { signature, objects, strata };
        program.check_well_formed()?;
        Ok(program)
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn objects(&self) -> &[String] {
        &self.objects
    }

    pub fn strata(&self) -> &[Stratum] {
        &self.strata
    }

    pub fn into_parts(self) -> (Signature, Vec<String>, Vec<Stratum>) {
        (self.signature, self.objects, self.strata)
    }

    pub fn axiom(&self, stratum: usize, axiom: usize) -> Option<&Axiom> {
        self.strata.get(stratum)?.axioms.get(axiom)
    }

    /// Index of the stratum whose axioms affect `predicate`.
    pub fn defining_stratum(&self, predicate: &str) -> Option<usize> {
        self.strata.iter().position(|s| s.axioms.iter().any(|a| a.head.predicate == predicate))
    }

    /// Every atom occurrence in axiom bodies, in (stratum, axiom, preorder) order.
    pub fn occurrences(&self) -> Vec<OccurrenceRef> {
        let mut out = Vec::new();
        for (si, stratum) in self.strata.iter().enumerate() {
            for (ai, ax) in stratum.axioms.iter().enumerate() {
                for (path, atom, polarity) in ax.body.occurrences() {
                    out.push(OccurrenceRef { stratum: si, axiom: ai, path, predicate: atom.predicate.clone(), polarity });
                }
            }
        }
        out
    }

    fn check_well_formed(&self) -> Result<(), ProgramError> {
        let mut seen = BTreeSet::new();
        for o in &self.objects {
            if !seen.insert(o) {
                return Err(ProgramError::DuplicateObject(o.clone()));
            }
        }
        for (si, stratum) in self.strata.iter().enumerate() {
            for (ai, ax) in stratum.axioms.iter().enumerate() {
                self.check_atom(&ax.head, si, ai)?;
                let pred = &ax.head.predicate;
                if !self.signature.is_derived(pred) {
                    return Err(ProgramError::BasicHead { predicate: pred.clone(), stratum: si, axiom: ai });
                }
                let vars = ax.head_vars();
                let distinct: BTreeSet<&String> = vars.iter().collect();
                if vars.len() != ax.head.args.len() || distinct.len() != vars.len() {
                    return Err(ProgramError::BadHeadArguments { predicate: pred.clone(), stratum: si, axiom: ai });
                }
                for (_, atom, _) in ax.body.occurrences() {
                    self.check_atom(atom, si, ai)?;
                }
                if let Some(v) = ax.body.free_vars().into_iter().find(|v| !distinct.contains(v)) {
                    return Err(ProgramError::FreeVariableMismatch {
                        var: v,
                        predicate: pred.clone(),
                        stratum: si,
                        axiom: ai,
                    });
                }
                if let Some(c) = ax.body.constants().into_iter().find(|c| !self.objects.contains(c)) {
                    return Err(ProgramError::UnknownObject(c));
                }
            }
        }
        Ok(())
    }

    fn check_atom(&self, atom: &Atom, stratum: usize, axiom: usize) -> Result<(), ProgramError> {
        let p = self.signature.get(&atom.predicate).ok_or_else(|| ProgramError::UndeclaredPredicate {
            predicate: atom.predicate.clone(),
            stratum,
            axiom,
        })?;
        if p.arity != atom.args.len() {
            return Err(ProgramError::ArityMismatch {
                predicate: atom.predicate.clone(),
                expected: p.arity,
                found: atom.args.len(),
                stratum,
                axiom,
            });
        }
        Ok(())
    }
}

/// Occurrences of `preds` with negative polarity, in (stratum, axiom,
/// preorder) order.
pub fn negative_occurrences(program: &AxiomProgram, preds: &BTreeSet<String>) -> Vec<OccurrenceRef> {
    program
        .occurrences()
        .into_iter()
        .filter(|o| o.polarity == Polarity::Negative && preds.contains(&o.predicate))
        .collect()
}

/// Names of all derived predicates in the signature.
pub fn derived_names(program: &AxiomProgram) -> BTreeSet<String> {
    program.signature().derived().map(|p| p.name.clone()).collect()
}

/// Checks the four stratification conditions.
pub fn check_stratified(program: &AxiomProgram) -> Result<(), StratificationError> {
    check_strata(&program.signature, &program.strata)
}

pub(crate) fn check_strata(signature: &Signature, strata: &[Stratum]) -> Result<(), StratificationError> {
    let mut defined_in: BTreeMap<&str, BTreeSet<usize>> = BTreeMap::new();
    for (si, stratum) in strata.iter().enumerate() {
        for ax in &stratum.axioms {
            if !signature.contains(&ax.head.predicate) {
                return Err(StratificationError::UndeclaredPredicate(ax.head.predicate.clone()));
            }
            defined_in.entry(&ax.head.predicate).or_default().insert(si);
            for (_, atom, _) in ax.body.occurrences() {
                if !signature.contains(&atom.predicate) {
                    return Err(StratificationError::UndeclaredPredicate(atom.predicate.clone()));
                }
            }
        }
    }

    let mut violations = Vec::new();
    for (si, stratum) in strata.iter().enumerate() {
        for (ai, ax) in stratum.axioms.iter().enumerate() {
            let head = ax.head.predicate.as_str();
            let homes = &defined_in[head];
            if homes.iter().any(|&k| k != si) {
                violations.push(Violation {
                    rule: StratRule::AffectedInSeveralStrata,
                    predicate: head.to_owned(),
                    stratum: si,
                    axiom: ai,
                    occurrence: None,
                });
            }
            for (path, atom, polarity) in ax.body.occurrences() {
                let occ = || OccurrenceRef {
                    stratum: si,
                    axiom: ai,
                    path: path.clone(),
                    predicate: atom.predicate.clone(),
                    polarity,
                };
                // Occurring before the defining stratum.
                if let Some(homes) = defined_in.get(atom.predicate.as_str()) {
                    if homes.iter().any(|&k| k > si) {
                        let rule = if !signature.is_derived(&atom.predicate) {
                            StratRule::UsedBeforeDefinition
                        } else if polarity == Polarity::Positive {
                            StratRule::PositiveFromLaterStratum
                        } else {
                            StratRule::NegativeNotFromEarlierStratum
                        };
                        violations.push(Violation {
                            rule,
                            predicate: atom.predicate.clone(),
                            stratum: si,
                            axiom: ai,
                            occurrence: Some(occ()),
                        });
                        continue;
                    }
                    if polarity == Polarity::Negative && signature.is_derived(&atom.predicate) && homes.contains(&si) {
                        violations.push(Violation {
                            rule: StratRule::NegativeNotFromEarlierStratum,
                            predicate: atom.predicate.clone(),
                            stratum: si,
                            axiom: ai,
                            occurrence: Some(occ()),
                        });
                    }
                }
            }
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(StratificationError::Violations(violations))
    }
}
