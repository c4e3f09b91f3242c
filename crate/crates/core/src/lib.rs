//! Stratified axiom programs and the elimination of negative occurrences of
//! derived predicates.
//!
//! A program is a sequence of strata. Each stratum is a set of axioms
//! `head <- body` evaluated to a fixed point on top of the strata before it.
//! [`transform::eliminate_negative_occurrences`] rewrites a program so that
//! derived predicates only occur positively, after which all strata can be
//! merged into one.
//!
//! ```
//! use axf::syntax::{parse_program, parse_state};
//! use axf::transform::{eliminate_negative_occurrences, merge_to_single_stratum, TransformOptions};
//! use axf::eval::{extend, Universe};
//!
//! let program = parse_program(
//!     "(program (objects a b c) (basic (E 2)) (derived (path 2) (acyclic 0))
//!        (stratum (axiom (path ?x ?y)
//!                   (or (E ?x ?y) (exists (?z) (and (E ?x ?z) (path ?z ?y))))))
//!        (stratum (axiom (acyclic) (forall (?x) (not (path ?x ?x))))))",
//! )?;
//! let (positive, _report) = eliminate_negative_occurrences(&program, TransformOptions::default())?;
//! let single = merge_to_single_stratum(&positive)?;
//! assert_eq!(single.strata().len(), 1);
//!
//! let universe = Universe::new(program.objects().to_vec())?;
//! let state = parse_state("(state (E a b) (E b a))", &program)?;
//! let before = extend(&program, &universe, &state)?;
//! let after = extend(&single, &universe, &state)?;
//! assert_eq!(before.true_atoms_of(["path", "acyclic"]), after.true_atoms_of(["path", "acyclic"]));
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod eval;
pub mod logic;
pub mod syntax;
pub mod transform;
pub mod verify;

pub use eval::{Evaluator, GroundAtom, Relation, StageTable, TruthAssignment, Universe};
pub use logic::{Atom, Axiom, AxiomProgram, Formula, Polarity, Predicate, Signature, Stratum, Term};
pub use syntax::{parse_program, parse_state, print_program};
pub use transform::{eliminate_negative_occurrences, merge_to_single_stratum, TransformOptions};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/formulas.md")]
    mod formulas {}
    #[doc = include_str!("../../../book/src/stratification.md")]
    mod stratification {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/stage-axioms.md")]
    mod stage_axioms {}
    #[doc = include_str!("../../../book/src/elimination.md")]
    mod elimination {}
    #[doc = include_str!("../../../book/src/verification.md")]
    mod verification {}
}
