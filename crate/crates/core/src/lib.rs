//! λΠ-calculus modulo rewriting with an automatic subject-reduction checker
//! for rewrite rules.

pub mod completion;
pub mod constraints;
pub mod driver;
pub mod par;
pub mod reduce;
pub mod signature;
pub mod srcheck;
pub mod syntax;
pub mod term;
pub mod typing;

pub use reduce::{Fuel, ReduceError, RuleSet, DEFAULT_FUEL};
pub use signature::{Signature, SignatureError};
pub use term::{Position, Sort, Substitution, Term};
pub use typing::{Environment, TermClass, TypeError};
pub use srcheck::{check_all, check_rule, CheckOptions, Status, Verdict};
