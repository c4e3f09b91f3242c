//! Concrete S-expression syntax for axiom programs and basic states.
//!
//! ```text
//! program  := "(" "program" objects basics deriveds stratum* ")"
//! objects  := "(" "objects" NAME* ")"
//! basics   := "(" "basic"   decl* ")"
//! deriveds := "(" "derived" decl* ")"
//! decl     := "(" NAME ARITY ")"
//! stratum  := "(" "stratum" axiom* ")"
//! axiom    := "(" "axiom" atomhead formula ")"
//! atomhead := "(" NAME VAR* ")"
//! formula  := atom | "(" "not" formula ")" | "(" "and" formula formula+ ")"
//!           | "(" "or" formula formula+ ")" | "(" "imply" formula formula ")"
//!           | "(" "exists" "(" VAR+ ")" formula ")"
//!           | "(" "forall" "(" VAR+ ")" formula ")" | "true" | "false"
//! atom     := "(" NAME term* ")"        term := VAR | NAME        VAR := "?" NAME
//! state    := "(" "state" groundatom* ")"
//! ```
//!
//! `;` starts a line comment. `imply` is desugared to `(or (not A) B)`.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::Serialize;

use crate::eval::{TruthAssignment, Universe};
use crate::logic::{
    check_stratified, Atom, Axiom, AxiomProgram, Formula, OccurrenceRef, Predicate, PredicateKind, Signature,
    StratificationError, Stratum, Term,
};

const MAX_DEPTH: usize = 256;
const KEYWORDS: &[&str] = &["not", "and", "or", "imply", "exists", "forall", "true", "false"];

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SourceSpan {
    pub file: Option<String>,
    pub start: usize,
    pub end: usize,
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.file {
            Some(file) => write!(f, "{}:{}:{}", file, self.line, self.column),
            None => write!(f, "{}:{}", self.line, self.column),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagCode {
    Lexical,
    Syntax,
    DuplicateDeclaration,
    UndeclaredPredicate,
    ArityMismatch,
    BasicHead,
    RepeatedHeadVariable,
    HeadConstant,
    FreeVariableMismatch,
    UnknownObject,
    Stratification,
    DerivedInState,
}

impl DiagCode {
    pub fn as_str(self) -> &'static str {
        match self {
            DiagCode::Lexical => "lexical",
            DiagCode::Syntax => "syntax",
            DiagCode::DuplicateDeclaration => "duplicate-declaration",
            DiagCode::UndeclaredPredicate => "undeclared-predicate",
            DiagCode::ArityMismatch => "arity-mismatch",
            DiagCode::BasicHead => "basic-head",
            DiagCode::RepeatedHeadVariable => "repeated-head-variable",
            DiagCode::HeadConstant => "head-constant",
            DiagCode::FreeVariableMismatch => "free-variable-mismatch",
            DiagCode::UnknownObject => "unknown-object",
            DiagCode::Stratification => "stratification",
            DiagCode::DerivedInState => "derived-in-state",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub code: DiagCode,
    pub message: String,
    pub span: SourceSpan,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: error[{}]: {}", self.span, self.code.as_str(), self.message)
    }
}

/// Non-empty list of diagnostics produced by a failed parse.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct Diagnostics(pub Vec<Diagnostic>);

impl Diagnostics {
    pub fn iter(&self) -> impl Iterator<Item = &Diagnostic> {
        self.0.iter()
    }

    pub fn has(&self, code: DiagCode) -> bool {
        self.0.iter().any(|d| d.code == code)
    }
}

impl fmt::Display for Diagnostics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

impl std::error::Error for Diagnostics {}

// ---------------------------------------------------------------------------
// Reader

#[derive(Debug, Clone)]
enum SexpKind {
    Symbol(String),
    List(Vec<Sexp>),
}

#[derive(Debug, Clone)]
struct Sexp {
    kind: SexpKind,
    start: usize,
    end: usize,
}

struct Source<'a> {
    text: &'a str,
    file: Option<&'a str>,
    line_starts: Vec<usize>,
}

impl<'a> Source<'a> {
    fn new(text: &'a str, file: Option<&'a str>) -> Self {
        let mut line_starts = vec![0];
        line_starts.extend(text.char_indices().filter(|&(_, c)| c == '\n').map(|(i, _)| i + 1));
        Source { text, file, line_starts }
    }

    fn span(&self, start: usize, end: usize) -> SourceSpan {
        let line = self.line_starts.partition_point(|&s| s <= start);
        let line_start = self.line_starts[line - 1];
        let column = self.text[line_start..start].chars().count() + 1;
        SourceSpan { file: self.file.map(str::to_owned), start, end, line, column }
    }

    fn diag(&self, code: DiagCode, start: usize, end: usize, message: impl Into<String>) -> Diagnostic {
        Diagnostic { code, message: message.into(), span: self.span(start, end) }
    }
}

fn read_all(src: &Source<'_>) -> Result<Vec<Sexp>, Diagnostic> {
    let text = src.text;
    let bytes = text.as_bytes();
    let mut stack: Vec<(usize, Vec<Sexp>)> = Vec::new();
    let mut top = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b';' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            b'(' => {
                if stack.len() >= MAX_DEPTH {
                    return Err(src.diag(DiagCode::Lexical, i, i + 1, "nesting too deep"));
                }
                stack.push((i, Vec::new()));
                i += 1;
            }
            b')' => {
                let (start, items) = stack
                    .pop()
                    .ok_or_else(|| src.diag(DiagCode::Lexical, i, i + 1, "unbalanced `)`"))?;
                let node = Sexp { kind: SexpKind::List(items), start, end: i + 1 };
                match stack.last_mut() {
                    Some((_, items)) => items.push(node),
                    None => top.push(node),
                }
                i += 1;
            }
            _ if c.is_ascii_whitespace() => i += 1,
            _ => {
                let start = i;
                while i < bytes.len() && !bytes[i].is_ascii_whitespace() && !matches!(bytes[i], b'(' | b')' | b';') {
                    i += 1;
                }
                let word = &text[start..i];
                if word.chars().any(|ch| ch.is_control()) {
                    return Err(src.diag(DiagCode::Lexical, start, i, format!("invalid character in `{}`", word.escape_debug())));
                }
                let node = Sexp { kind: SexpKind::Symbol(word.to_owned()), start, end: i };
                match stack.last_mut() {
                    Some((_, items)) => items.push(node),
                    None => top.push(node),
                }
            }
        }
    }
    if let Some((start, _)) = stack.last() {
        return Err(src.diag(DiagCode::Lexical, *start, *start + 1, "unclosed `(`"));
    }
    Ok(top)
}

impl Sexp {
    fn symbol(&self) -> Option<&str> {
        match &self.kind {
            SexpKind::Symbol(s) => Some(s),
            SexpKind::List(_) => None,
        }
    }

    fn list(&self) -> Option<&[Sexp]> {
        match &self.kind {
            SexpKind::List(items) => Some(items),
            SexpKind::Symbol(_) => None,
        }
    }

    /// `(head rest...)` with a symbol head.
    fn form(&self) -> Option<(&str, &[Sexp])> {
        let items = self.list()?;
        let head = items.first()?.symbol()?;
        Some((head, &items[1..]))
    }
}

fn is_var(s: &str) -> bool {
    s.len() > 1 && s.starts_with('?')
}

fn is_name(s: &str) -> bool {
    !s.is_empty() && !s.starts_with('?')
}

// ---------------------------------------------------------------------------
// Programs

struct ProgramParser<'a> {
    src: Source<'a>,
    diags: Vec<Diagnostic>,
    signature: Signature,
    objects: Vec<String>,
    /// Span of every body atom, keyed by (stratum, axiom, path).
    atom_spans: HashMap<(usize, usize, Vec<usize>), (usize, usize)>,
    axiom_spans: HashMap<(usize, usize), (usize, usize)>,
}

/// Parses a program. Diagnostics carry byte spans into `text`.
pub fn parse_program(text: &str) -> Result<AxiomProgram, Diagnostics> {
    parse_program_named(text, None)
}

/// Like [`parse_program`], with a file name recorded in every span.
pub fn parse_program_named(text: &str, file: Option<&str>) -> Result<AxiomProgram, Diagnostics> {
    let mut p = ProgramParser {
        src: Source::new(text, file),
        diags: Vec::new(),
        signature: Signature::default(),
        objects: Vec::new(),
        atom_spans: HashMap::new(),
        axiom_spans: HashMap::new(),
    };
    match p.parse() {
        Some(program) if p.diags.is_empty() => Ok(program),
        _ => {
            if p.diags.is_empty() {
                p.diags.push(p.src.diag(DiagCode::Syntax, 0, 0, "invalid program"));
            }
            Err(Diagnostics(p.diags))
        }
    }
}

impl<'a> ProgramParser<'a> {
    fn err(&mut self, code: DiagCode, node: &Sexp, msg: impl Into<String>) {
        let d = self.src.diag(code, node.start, node.end, msg);
        self.diags.push(d);
    }

    fn parse(&mut self) -> Option<AxiomProgram> {
        let top = match read_all(&self.src) {
            Ok(top) => top,
            Err(d) => {
                self.diags.push(d);
                return None;
            }
        };
        let Some(root) = top.first() else {
            let end = self.src.text.len();
            self.diags.push(self.src.diag(DiagCode::Syntax, 0, end, "expected `(program ...)`"));
            return None;
        };
        if let Some(extra) = top.get(1) {
            self.err(DiagCode::Syntax, extra, "unexpected content after the program");
        }
        let Some(("program", parts)) = root.form() else {
            self.err(DiagCode::Syntax, root, "expected `(program ...)`");
            return None;
        };
        if parts.len() < 3 {
            self.err(DiagCode::Syntax, root, "expected `(objects ...)`, `(basic ...)` and `(derived ...)`");
            return None;
        }
        self.parse_objects(&parts[0]);
        self.parse_decls(&parts[1], "basic", PredicateKind::Basic);
        self.parse_decls(&parts[2], "derived", PredicateKind::Derived);
        if !self.diags.is_empty() {
            return None;
        }

        let mut strata = Vec::new();
        for (si, node) in parts[3..].iter().enumerate() {
            let Some(("stratum", axioms)) = node.form() else {
                self.err(DiagCode::Syntax, node, "expected `(stratum ...)`");
                continue;
            };
            let mut out = Vec::new();
            for (ai, ax) in axioms.iter().enumerate() {
                self.axiom_spans.insert((si, ai), (ax.start, ax.end));
                if let Some(axiom) = self.parse_axiom(ax, si, ai) {
                    out.push(axiom);
                }
            }
            strata.push(Stratum::new(out));
        }
        if !self.diags.is_empty() {
            return None;
        }

        let program =
            match AxiomProgram::unstratified(self.signature.clone(), self.objects.clone(), strata) {
                Ok(p) => p,
                Err(e) => {
                    let end = self.src.text.len();
                    self.diags.push(self.src.diag(DiagCode::Syntax, 0, end, e.to_string()));
                    return None;
                }
            };
        match check_stratified(&program) {
            Ok(()) => Some(program),
            Err(StratificationError::UndeclaredPredicate(p)) => {
                let end = self.src.text.len();
                self.diags.push(self.src.diag(DiagCode::UndeclaredPredicate, 0, end, format!("undeclared predicate `{p}`")));
                None
            }
            Err(StratificationError::Violations(vs)) => {
                for v in vs {
                    let (start, end) = v
                        .occurrence
                        .as_ref()
                        .and_then(|o| self.occurrence_span(o))
                        .or_else(|| self.axiom_spans.get(&(v.stratum, v.axiom)).copied())
                        .unwrap_or((0, 0));
                    self.diags.push(self.src.diag(DiagCode::Stratification, start, end, v.to_string()));
                }
                None
            }
        }
    }

    fn occurrence_span(&self, o: &OccurrenceRef) -> Option<(usize, usize)> {
        self.atom_spans.get(&(o.stratum, o.axiom, o.path.clone())).copied()
    }

    fn parse_objects(&mut self, node: &Sexp) {
        let Some(("objects", items)) = node.form() else {
            self.err(DiagCode::Syntax, node, "expected `(objects NAME*)`");
            return;
        };
        for item in items {
            match item.symbol() {
                Some(s) if is_name(s) && !KEYWORDS.contains(&s) => {
                    if self.objects.iter().any(|o| o == s) {
                        self.err(DiagCode::DuplicateDeclaration, item, format!("object `{s}` declared twice"));
                    } else {
                        self.objects.push(s.to_owned());
                    }
                }
                _ => self.err(DiagCode::Syntax, item, "expected an object name"),
            }
        }
    }

    fn parse_decls(&mut self, node: &Sexp, keyword: &str, kind: PredicateKind) {
        let ok = matches!(node.form(), Some((k, _)) if k == keyword);
        if !ok {
            self.err(DiagCode::Syntax, node, format!("expected `({keyword} (NAME ARITY)*)`"));
            return;
        }
        let items = &node.list().unwrap()[1..];
        for decl in items {
            let parsed = decl.list().and_then(|l| match l {
                [name, arity] => {
                    let name = name.symbol().filter(|s| is_name(s) && !KEYWORDS.contains(s))?;
                    let arity: usize = arity.symbol()?.parse().ok()?;
                    Some((name.to_owned(), arity))
                }
                _ => None,
            });
            match parsed {
                Some((name, arity)) => {
                    if self.signature.push(Predicate { name: name.clone(), arity, kind }).is_err() {
                        self.err(DiagCode::DuplicateDeclaration, decl, format!("predicate `{name}` declared twice"));
                    }
                }
                None => self.err(DiagCode::Syntax, decl, "expected `(NAME ARITY)`"),
            }
        }
    }

    fn parse_axiom(&mut self, node: &Sexp, si: usize, ai: usize) -> Option<Axiom> {
        let Some(("axiom", parts)) = node.form() else {
            self.err(DiagCode::Syntax, node, "expected `(axiom HEAD BODY)`");
            return None;
        };
        if parts.len() != 2 {
            self.err(DiagCode::Syntax, node, "`axiom` takes a head and a body");
            return None;
        }
        let head_node = &parts[0];
        let head = self.parse_atom(head_node)?;
        let pred = self.signature.get(&head.predicate).cloned();
        let mut ok = true;
        match &pred {
            Some(p) if p.kind == PredicateKind::Basic => {
                self.err(DiagCode::BasicHead, head_node, format!("`{}` is basic and cannot be an axiom head", p.name));
                ok = false;
            }
            _ => {}
        }
        let mut head_vars = BTreeSet::new();
        for (t, n) in head.args.iter().zip(&head_node.list().unwrap()[1..]) {
            match t {
                Term::Const(c) => {
                    self.err(DiagCode::HeadConstant, n, format!("constant `{c}` in axiom head"));
                    ok = false;
                }
                Term::Var(v) => {
                    if !head_vars.insert(v.clone()) {
                        self.err(DiagCode::RepeatedHeadVariable, n, format!("variable `?{v}` repeated in axiom head"));
                        ok = false;
                    }
                }
            }
        }

        let mut path = Vec::new();
        let body = self.parse_formula(&parts[1], si, ai, &mut path, 0)?;
        if !ok {
            return None;
        }
        let free = body.free_vars();
        if let Some(v) = free.iter().find(|v| !head_vars.contains(*v)) {
            self.err(
                DiagCode::FreeVariableMismatch,
                &parts[1],
                format!("variable `?{v}` is free in the body but does not occur in the head"),
            );
            return None;
        }
        Some(Axiom::new(head, body).freshen())
    }

    /// Atom syntax with declaration and arity checks.
    fn parse_atom(&mut self, node: &Sexp) -> Option<Atom> {
        let items = node.list();
        let Some((name, args)) = node.form() else {
            self.err(DiagCode::Syntax, node, "expected an atom `(NAME term*)`");
            return None;
        };
        if !is_name(name) || KEYWORDS.contains(&name) {
            self.err(DiagCode::Syntax, &items.unwrap()[0], format!("`{name}` is not a predicate name"));
            return None;
        }
        let mut terms = Vec::with_capacity(args.len());
        for a in args {
            match a.symbol() {
                Some(s) if is_var(s) => terms.push(Term::var(&s[1..])),
                Some(s) if is_name(s) => {
                    if !self.objects.iter().any(|o| o == s) {
                        self.err(DiagCode::UnknownObject, a, format!("unknown object `{s}`"));
                        return None;
                    }
                    terms.push(Term::constant(s));
                }
                _ => {
                    self.err(DiagCode::Syntax, a, "expected a variable or an object name");
                    return None;
                }
            }
        }
        match self.signature.get(name) {
            None => {
                self.err(DiagCode::UndeclaredPredicate, node, format!("undeclared predicate `{name}`"));
                None
            }
            Some(p) if p.arity != terms.len() => {
                let msg = format!("`{name}` expects {} argument(s), found {}", p.arity, terms.len());
                self.err(DiagCode::ArityMismatch, node, msg);
                None
            }
            Some(_) => Some(Atom::new(name, terms)),
        }
    }

    fn parse_formula(&mut self, node: &Sexp, si: usize, ai: usize, path: &mut Vec<usize>, depth: usize) -> Option<Formula> {
        if depth > MAX_DEPTH {
            self.err(DiagCode::Syntax, node, "formula nesting too deep");
            return None;
        }
        match &node.kind {
            SexpKind::Symbol(s) if s == "true" => return Some(Formula::Top),
            SexpKind::Symbol(s) if s == "false" => return Some(Formula::Bottom),
            SexpKind::Symbol(s) => {
                self.err(DiagCode::Syntax, node, format!("expected a formula, found `{s}`"));
                return None;
            }
            SexpKind::List(_) => {}
        }
        let Some((head, args)) = node.form() else {
            self.err(DiagCode::Syntax, node, "expected a formula");
            return None;
        };
        let mut sub = |this: &mut Self, child: &Sexp, step: &[usize]| {
            let n = path.len();
            path.extend_from_slice(step);
            let f = this.parse_formula(child, si, ai, path, depth + 1);
            path.truncate(n);
            f
        };
        match head {
            "not" => {
                if args.len() != 1 {
                    self.err(DiagCode::Syntax, node, "`not` takes one formula");
                    return None;
                }
                Some(Formula::not(sub(self, &args[0], &[0])?))
            }
            "and" | "or" => {
                if args.len() < 2 {
                    self.err(DiagCode::Syntax, node, format!("`{head}` takes at least two formulas"));
                    return None;
                }
                let mut subs = Vec::with_capacity(args.len());
                for (i, a) in args.iter().enumerate() {
                    subs.push(sub(self, a, &[i])?);
                }
                Some(if head == "and" { Formula::And(subs) } else { Formula::Or(subs) })
            }
            "imply" => {
                if args.len() != 2 {
                    self.err(DiagCode::Syntax, node, "`imply` takes two formulas");
                    return None;
                }
                let a = sub(self, &args[0], &[0, 0])?;
                let b = sub(self, &args[1], &[1])?;
                Some(Formula::Or(vec![Formula::not(a), b]))
            }
            "exists" | "forall" => {
                if args.len() != 2 {
                    self.err(DiagCode::Syntax, node, format!("`{head}` takes a variable list and a formula"));
                    return None;
                }
                let vars = match args[0].list() {
                    Some(vs) if !vs.is_empty() => vs,
                    _ => {
                        self.err(DiagCode::Syntax, &args[0], "expected a nonempty variable list `(?v ...)`");
                        return None;
                    }
                };
                let mut names = Vec::with_capacity(vars.len());
                for v in vars {
                    match v.symbol() {
                        Some(s) if is_var(s) => names.push(s[1..].to_owned()),
                        _ => {
                            self.err(DiagCode::Syntax, v, "expected a variable `?name`");
                            return None;
                        }
                    }
                }
                let body = sub(self, &args[1], &[0])?;
                Some(if head == "exists" {
                    Formula::Exists(names, Box::new(body))
                } else {
                    Formula::Forall(names, Box::new(body))
                })
            }
            _ => {
                let atom = self.parse_atom(node)?;
                self.atom_spans.insert((si, ai, path.clone()), (node.start, node.end));
                Some(Formula::Atom(atom))
            }
        }
    }
}

// ---------------------------------------------------------------------------
// States

/// Parses `(state groundatom*)` into a closed-world basic state over the
/// program's objects.
pub fn parse_state(text: &str, program: &AxiomProgram) -> Result<TruthAssignment, Diagnostics> {
    parse_state_named(text, program, None)
}

pub fn parse_state_named(text: &str, program: &AxiomProgram, file: Option<&str>) -> Result<TruthAssignment, Diagnostics> {
    let src = Source::new(text, file);
    let top = read_all(&src).map_err(|d| Diagnostics(vec![d]))?;
    let fail = |code, start, end, msg: String| Diagnostics(vec![src.diag(code, start, end, msg)]);
    let root = top.first().ok_or_else(|| fail(DiagCode::Syntax, 0, text.len(), "expected `(state ...)`".into()))?;
    if let Some(extra) = top.get(1) {
        return Err(fail(DiagCode::Syntax, extra.start, extra.end, "unexpected content after the state".into()));
    }
    let Some(("state", atoms)) = root.form() else {
        return Err(fail(DiagCode::Syntax, root.start, root.end, "expected `(state ...)`".into()));
    };
    let universe = Universe::new(program.objects().to_vec())
        .map_err(|e| fail(DiagCode::UnknownObject, root.start, root.end, e.to_string()))?;
    let mut state = TruthAssignment::basic(program.signature(), &universe);
    let mut diags = Vec::new();
    for node in atoms {
        let Some((name, args)) = node.form() else {
            diags.push(src.diag(DiagCode::Syntax, node.start, node.end, "expected a ground atom `(NAME obj*)`"));
            continue;
        };
        let Some(pred) = program.signature().get(name) else {
            diags.push(src.diag(DiagCode::UndeclaredPredicate, node.start, node.end, format!("undeclared predicate `{name}`")));
            continue;
        };
        if pred.is_derived() {
            diags.push(src.diag(DiagCode::DerivedInState, node.start, node.end, format!("derived predicate `{name}` in state")));
            continue;
        }
        if pred.arity != args.len() {
            let msg = format!("`{name}` expects {} argument(s), found {}", pred.arity, args.len());
            diags.push(src.diag(DiagCode::ArityMismatch, node.start, node.end, msg));
            continue;
        }
        let mut tuple = Vec::with_capacity(args.len());
        for a in args {
            match a.symbol().and_then(|s| universe.index_of(s)) {
                Some(i) => tuple.push(i),
                None => {
                    let shown = a.symbol().unwrap_or("(...)");
                    diags.push(src.diag(DiagCode::UnknownObject, a.start, a.end, format!("unknown object `{shown}`")));
                }
            }
        }
        if tuple.len() == args.len() {
            state.relation_mut(name).expect("basic relation present").set(&tuple, true);
        }
    }
    if diags.is_empty() {
        Ok(state)
    } else {
        Err(Diagnostics(diags))
    }
}

// ---------------------------------------------------------------------------
// Printing

const WIDTH: usize = 100;

fn term_str(t: &Term) -> String {
    match t {
        Term::Var(v) => format!("?{v}"),
        Term::Const(c) => c.clone(),
    }
}

fn atom_str(a: &Atom) -> String {
    let mut s = format!("({}", a.predicate);
    for t in &a.args {
        s.push(' ');
        s.push_str(&term_str(t));
    }
    s.push(')');
    s
}

fn flat(f: &Formula, out: &mut String) {
    match f {
        Formula::Atom(a) => out.push_str(&atom_str(a)),
        Formula::Top => out.push_str("true"),
        Formula::Bottom => out.push_str("false"),
        Formula::Not(sub) => {
            out.push_str("(not ");
            flat(sub, out);
            out.push(')');
        }
        Formula::And(subs) | Formula::Or(subs) => {
            out.push_str(if matches!(f, Formula::And(_)) { "(and" } else { "(or" });
            for s in subs {
                out.push(' ');
                flat(s, out);
            }
            out.push(')');
        }
        Formula::Exists(vs, sub) | Formula::Forall(vs, sub) => {
            out.push_str(if matches!(f, Formula::Exists(..)) { "(exists (" } else { "(forall (" });
            let vars: Vec<String> = vs.iter().map(|v| format!("?{v}")).collect();
            out.push_str(&vars.join(" "));
            out.push_str(") ");
            flat(sub, out);
            out.push(')');
        }
    }
}

fn pretty(f: &Formula, indent: usize, out: &mut String) {
    let mut one_line = String::new();
    flat(f, &mut one_line);
    if indent + one_line.len() <= WIDTH || f.children().is_empty() {
        out.push_str(&one_line);
        return;
    }
    let pad = " ".repeat(indent + 2);
    match f {
        Formula::Not(sub) => {
            out.push_str("(not\n");
            out.push_str(&pad);
            pretty(sub, indent + 2, out);
        }
        Formula::And(subs) | Formula::Or(subs) => {
            out.push_str(if matches!(f, Formula::And(_)) { "(and" } else { "(or" });
            for s in subs {
                out.push('\n');
                out.push_str(&pad);
                pretty(s, indent + 2, out);
            }
        }
        Formula::Exists(vs, sub) | Formula::Forall(vs, sub) => {
            out.push_str(if matches!(f, Formula::Exists(..)) { "(exists (" } else { "(forall (" });
            let vars: Vec<String> = vs.iter().map(|v| format!("?{v}")).collect();
            out.push_str(&vars.join(" "));
            out.push_str(")\n");
            out.push_str(&pad);
            pretty(sub, indent + 2, out);
        }
        Formula::Atom(_) | Formula::Top | Formula::Bottom => unreachable!(),
    }
    out.push(')');
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        flat(self, &mut s);
        f.write_str(&s)
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&atom_str(self))
    }
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(axiom {} {})", atom_str(&self.head), self.body)
    }
}

fn decls(out: &mut String, keyword: &str, preds: Vec<&Predicate>) {
    out.push_str("  (");
    out.push_str(keyword);
    let mut line_len = keyword.len() + 3;
    for p in preds {
        let d = format!("({} {})", p.name, p.arity);
        if line_len + d.len() + 1 > WIDTH {
            out.push_str("\n   ");
            line_len = 3;
        }
        out.push(' ');
        out.push_str(&d);
        line_len += d.len() + 1;
    }
    out.push_str(")\n");
}

/// Deterministic rendering; `parse_program(&print_program(p))` equals `p`.
pub fn print_program(program: &AxiomProgram) -> String {
    let mut out = String::from("(program\n  (objects");
    for o in program.objects() {
        out.push(' ');
        out.push_str(o);
    }
    out.push_str(")\n");
    decls(&mut out, "basic", program.signature().basic().collect());
    decls(&mut out, "derived", program.signature().derived().collect());
    for stratum in program.strata() {
        if stratum.is_empty() {
            out.push_str("  (stratum)\n");
            continue;
        }
        out.push_str("  (stratum");
        for ax in stratum.axioms() {
            out.push_str("\n    (axiom ");
            out.push_str(&atom_str(&ax.head));
            out.push_str("\n      ");
            pretty(&ax.body, 6, &mut out);
            out.push(')');
        }
        out.push_str(")\n");
    }
    // Drop the final newline so the closing paren sits on the last line.
    out.pop();
    out.push_str(")\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{negative_occurrences, Polarity};

    pub(crate) const PATH: &str = "\
; transitive closure and a cycle check
(program
  (objects a b c)
  (basic (E 2))
  (derived (path 2) (acyclic 0))
  (stratum
    (axiom (path ?x ?y)
      (or (E ?x ?y) (exists (?z) (and (E ?x ?z) (path ?z ?y))))))
  (stratum
    (axiom (acyclic) (forall (?x) (not (path ?x ?x))))))
";

    #[test]
    fn parses_path_program() {
        let p = parse_program(PATH).unwrap();
        assert_eq!(p.strata().len(), 2);
        let sig: Vec<_> = p.signature().iter().map(|q| (q.name.as_str(), q.arity, q.kind)).collect();
        assert_eq!(
            sig,
            vec![
                ("E", 2, PredicateKind::Basic),
                ("path", 2, PredicateKind::Derived),
                ("acyclic", 0, PredicateKind::Derived)
            ]
        );
        let neg = negative_occurrences(&p, &["path".to_string()].into());
        assert_eq!(neg.len(), 1);
        assert_eq!((neg[0].stratum, neg[0].axiom, neg[0].polarity), (1, 0, Polarity::Negative));
    }

    #[test]
    fn parses_empty_program() {
        let p = parse_program("(program (objects) (basic) (derived))").unwrap();
        assert!(p.strata().is_empty());
        assert!(p.signature().is_empty());
    }

    #[test]
    fn single_stratum_path_program_is_rejected_with_span() {
        let text = "(program (objects a) (basic (E 2)) (derived (path 2) (acyclic 0))
  (stratum
    (axiom (path ?x ?y) (or (E ?x ?y) (exists (?z) (and (E ?x ?z) (path ?z ?y)))))
    (axiom (acyclic) (forall (?x) (not (path ?x ?x))))))";
        let err = parse_program(text).unwrap_err();
        assert!(err.has(DiagCode::Stratification));
        let d = err.iter().find(|d| d.code == DiagCode::Stratification).unwrap();
        assert_eq!(&text[d.span.start..d.span.end], "(path ?x ?x)");
        assert_eq!(d.span.line, 4);
    }

    #[test]
    fn error_codes() {
        let cases = [
            ("(program (objects) (basic) (derived (p 1)) (stratum (axiom (p ?x) (q ?x))))", DiagCode::UndeclaredPredicate),
            ("(program (objects) (basic (e 1)) (derived (p 1)) (stratum (axiom (p ?x) (e ?x ?x))))", DiagCode::ArityMismatch),
            ("(program (objects) (basic (e 2)) (derived (p 2)) (stratum (axiom (p ?x ?x) (e ?x ?x))))", DiagCode::RepeatedHeadVariable),
            ("(program (objects a) (basic (e 1)) (derived (p 1)) (stratum (axiom (p a) (e a))))", DiagCode::HeadConstant),
            ("(program (objects) (basic (e 2)) (derived (p 1)) (stratum (axiom (p ?x) (e ?x ?y))))", DiagCode::FreeVariableMismatch),
            ("(program (objects) (basic (e 1)) (derived (p 1)) (stratum (axiom (e ?x) (e ?x))))", DiagCode::BasicHead),
            ("(program (objects) (basic (e 1)) (derived (p 1)) (stratum (axiom (p ?x) (e b))))", DiagCode::UnknownObject),
            ("(program (objects) (basic (e 1) (e 2)) (derived))", DiagCode::DuplicateDeclaration),
            ("(program (objects) (basic) (derived)", DiagCode::Lexical),
            ("(program (objects) (basic (e 1)) (derived (p 1)) (stratum (axiom (p ?x) (and (e ?x)))))", DiagCode::Syntax),
        ];
        for (text, code) in cases {
            let err = parse_program(text).unwrap_err();
            assert!(err.has(code), "{text}: expected {code:?}, got {err}");
            for d in err.iter() {
                assert!(d.span.start <= d.span.end && d.span.end <= text.len());
            }
        }
    }

    #[test]
    fn imply_is_sugar() {
        let text = "(program (objects) (basic (a 0) (b 0)) (derived (p 0)) (stratum (axiom (p) (imply (a) (b)))))";
        let p = parse_program(text).unwrap();
        let body = &p.strata()[0].axioms()[0].body;
        assert_eq!(
            body,
            &Formula::Or(vec![Formula::not(Formula::atom("a", vec![])), Formula::atom("b", vec![])])
        );
    }

    #[test]
    fn rebinding_is_renamed_at_parse_time() {
        let text = "(program (objects) (basic (e 2)) (derived (p 1))
            (stratum (axiom (p ?x) (exists (?x) (e ?x ?x)))))";
        let p = parse_program(text).unwrap();
        assert_eq!(p.strata()[0].axioms()[0].body.to_string(), "(exists (?x__1) (e ?x__1 ?x__1))");
    }

    #[test]
    fn state_parsing() {
        let p = parse_program(PATH).unwrap();
        let s = parse_state("(state (E a b) (E b c))", &p).unwrap();
        let e = s.relation("E").unwrap();
        assert_eq!(e.count_true(), 2);
        assert_eq!(e.len(), 9);
        assert!(s.relation("path").is_none());

        let empty = parse_state("(state)", &p).unwrap();
        assert_eq!(empty.relation("E").unwrap().count_true(), 0);

        let err = parse_state("(state (path a b))", &p).unwrap_err();
        assert!(err.has(DiagCode::DerivedInState));
        assert!(err.to_string().contains("derived predicate"));
        let err = parse_state("(state (E a z))", &p).unwrap_err();
        assert!(err.has(DiagCode::UnknownObject));
    }

    #[test]
    fn round_trip_path_program() {
        let p = parse_program(PATH).unwrap();
        let printed = print_program(&p);
        assert_eq!(parse_program(&printed).unwrap(), p);
        assert_eq!(print_program(&parse_program(&printed).unwrap()), printed);
    }
}
