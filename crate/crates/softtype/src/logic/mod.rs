//! Discrete side of the engine: the type universe, identifier slots, the
//! propositional constraint language, boolean satisfaction, and one-hot
//! encodings of typing environments.
//!
//! A constraint is a formula over atoms `x is T` where `x` names an
//! annotation slot and `T` a type from a fixed finite universe. Slots and
//! types are referred to by dense integer index everywhere in the numeric
//! core; name-to-index resolution happens once at the frontend/DSL boundary.

mod dsl;
pub mod gen;

pub use dsl::{constraint_to_dsl, parse_constraints, DslError};

use crate::relax::ProbabilityMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LogicError {
    #[error("{what} must contain at least one name")]
    Empty { what: &'static str },
    #[error("duplicate name `{name}` in {what}")]
    DuplicateName { what: &'static str, name: String },
    #[error("identifier index {index} out of range (V = {count})")]
    IdentifierOutOfRange { index: usize, count: usize },
    #[error("type index {index} out of range (T = {count})")]
    TypeOutOfRange { index: usize, count: usize },
    #[error("environment assigns {got} identifiers, expected {expected}")]
    EnvironmentSizeMismatch { got: usize, expected: usize },
    #[error("enumerating {total} environments exceeds the cap of {cap}")]
    EnumerationCapExceeded { total: u128, cap: u64 },
}

fn validate_names(what: &'static str, names: &[String]) -> Result<(), LogicError> {
    if names.is_empty() {
        return Err(LogicError::Empty { what });
    }
    for (i, name) in names.iter().enumerate() {
        if names[..i].contains(name) {
            return Err(LogicError::DuplicateName {
                what,
                name: name.clone(),
            });
        }
    }
    Ok(())
}

/// Ordered universe of literal type names. The position of a name is the
/// canonical identity of that type everywhere downstream.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeUniverse {
    names: Vec<String>,
}

impl TypeUniverse {
    pub fn new<I, S>(names: I) -> Result<Self, LogicError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        validate_names("type universe", &names)?;
        Ok(Self { names })
    }

    /// Number of types, `T`.
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn name(&self, index: usize) -> &str {
        &self.names[index]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

/// Ordered set of identifier (annotation slot) names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentifierSet {
    names: Vec<String>,
}

impl IdentifierSet {
    pub fn new<I, S>(names: I) -> Result<Self, LogicError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        validate_names("identifier set", &names)?;
        Ok(Self { names })
    }

    /// Number of identifiers, `V`.
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn name(&self, index: usize) -> &str {
        &self.names[index]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

/// Propositional constraint over `ident is Type` atoms.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Constraint {
    Is { ident: usize, ty: usize },
    Not(Box<Constraint>),
    And(Box<Constraint>, Box<Constraint>),
    Or(Box<Constraint>, Box<Constraint>),
}

impl Constraint {
    pub fn is(ident: usize, ty: usize) -> Self {
        Constraint::Is { ident, ty }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(inner: Constraint) -> Self {
        Constraint::Not(Box::new(inner))
    }

    pub fn and(lhs: Constraint, rhs: Constraint) -> Self {
        Constraint::And(Box::new(lhs), Box::new(rhs))
    }

    pub fn or(lhs: Constraint, rhs: Constraint) -> Self {
        Constraint::Or(Box::new(lhs), Box::new(rhs))
    }

    /// Left fold of `and` over the formulas; `None` for an empty iterator.
    pub fn and_all<I: IntoIterator<Item = Constraint>>(formulas: I) -> Option<Constraint> {
        formulas.into_iter().reduce(Constraint::and)
    }

    /// Left fold of `or` over the formulas; `None` for an empty iterator.
    pub fn or_all<I: IntoIterator<Item = Constraint>>(formulas: I) -> Option<Constraint> {
        formulas.into_iter().reduce(Constraint::or)
    }

    pub fn depth(&self) -> usize {
        match self {
            Constraint::Is { .. } => 1,
            Constraint::Not(inner) => 1 + inner.depth(),
            Constraint::And(lhs, rhs) | Constraint::Or(lhs, rhs) => {
                1 + lhs.depth().max(rhs.depth())
            }
        }
    }

    /// Checks every atom's indices against the given dimensions.
    pub fn validate(&self, ident_count: usize, type_count: usize) -> Result<(), LogicError> {
        match self {
            Constraint::Is { ident, ty } => {
                if *ident >= ident_count {
                    return Err(LogicError::IdentifierOutOfRange {
                        index: *ident,
                        count: ident_count,
                    });
                }
                if *ty >= type_count {
                    return Err(LogicError::TypeOutOfRange {
                        index: *ty,
                        count: type_count,
                    });
                }
                Ok(())
            }
            Constraint::Not(inner) => inner.validate(ident_count, type_count),
            Constraint::And(lhs, rhs) | Constraint::Or(lhs, rhs) => {
                lhs.validate(ident_count, type_count)?;
                rhs.validate(ident_count, type_count)
            }
        }
    }

    /// Marks, for each identifier, whether it occurs in any atom.
    pub fn mentioned_identifiers(&self, ident_count: usize) -> Vec<bool> {
        let mut seen = vec![false; ident_count];
        self.collect_mentions(&mut seen);
        seen
    }

    fn collect_mentions(&self, seen: &mut [bool]) {
        match self {
            Constraint::Is { ident, .. } => {
                if *ident < seen.len() {
                    seen[*ident] = true;
                }
            }
            Constraint::Not(inner) => inner.collect_mentions(seen),
            Constraint::And(lhs, rhs) | Constraint::Or(lhs, rhs) => {
                lhs.collect_mentions(seen);
                rhs.collect_mentions(seen);
            }
        }
    }
}

/// Total assignment of one type index to every identifier slot.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TypeEnvironment {
    assignment: Vec<usize>,
    type_count: usize,
}

impl TypeEnvironment {
    pub fn new(assignment: Vec<usize>, type_count: usize) -> Result<Self, LogicError> {
        if assignment.is_empty() {
            return Err(LogicError::Empty {
                what: "type environment",
            });
        }
        for &ty in &assignment {
            if ty >= type_count {
                return Err(LogicError::TypeOutOfRange {
                    index: ty,
                    count: type_count,
                });
            }
        }
        Ok(Self {
            assignment,
            type_count,
        })
    }

    /// Number of identifiers, `V`.
    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn type_count(&self) -> usize {
        self.type_count
    }

    pub fn get(&self, ident: usize) -> usize {
        self.assignment[ident]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// Boolean satisfaction by structural recursion: an atom holds iff the
    /// environment maps the identifier to exactly that type, `not`/`and`/`or`
    /// are the usual connectives.
    pub fn satisfies(&self, constraint: &Constraint) -> Result<bool, LogicError> {
        match constraint {
            Constraint::Is { ident, ty } => {
                if *ident >= self.assignment.len() {
                    return Err(LogicError::IdentifierOutOfRange {
                        index: *ident,
                        count: self.assignment.len(),
                    });
                }
                if *ty >= self.type_count {
                    return Err(LogicError::TypeOutOfRange {
                        index: *ty,
                        count: self.type_count,
                    });
                }
                Ok(self.assignment[*ident] == *ty)
            }
            Constraint::Not(inner) => Ok(!self.satisfies(inner)?),
            Constraint::And(lhs, rhs) => Ok(self.satisfies(lhs)? && self.satisfies(rhs)?),
            Constraint::Or(lhs, rhs) => Ok(self.satisfies(lhs)? || self.satisfies(rhs)?),
        }
    }

    /// One-hot `V x T` encoding: row `v` has a single 1 in the assigned
    /// column. Every binary matrix is also a valid probability matrix.
    pub fn to_binary_matrix(&self) -> ProbabilityMatrix {
        let t = self.type_count;
        let mut data = vec![0.0; self.assignment.len() * t];
        for (v, &ty) in self.assignment.iter().enumerate() {
            data[v * t + ty] = 1.0;
        }
        ProbabilityMatrix::new(self.assignment.len(), t, data)
            .expect("one-hot rows are row-stochastic")
    }
}

pub const DEFAULT_ENUMERATION_CAP: u64 = 1_000_000;

/// Iterator over all `T^V` total assignments, in odometer order (last
/// identifier varies fastest). Refuses up front when the count exceeds `cap`.
pub fn enumerate_environments(
    ident_count: usize,
    type_count: usize,
    cap: u64,
) -> Result<EnvironmentIter, LogicError> {
    if ident_count == 0 {
        return Err(LogicError::Empty {
            what: "type environment",
        });
    }
    if type_count == 0 {
        return Err(LogicError::Empty {
            what: "type universe",
        });
    }
    let total = (type_count as u128).pow(ident_count as u32);
    if total > cap as u128 {
        return Err(LogicError::EnumerationCapExceeded { total, cap });
    }
    Ok(EnvironmentIter {
        current: vec![0; ident_count],
        type_count,
        remaining: total as u64,
    })
}

pub struct EnvironmentIter {
    current: Vec<usize>,
    type_count: usize,
    remaining: u64,
}

impl Iterator for EnvironmentIter {
    type Item = TypeEnvironment;

    fn next(&mut self) -> Option<TypeEnvironment> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let env = TypeEnvironment {
            assignment: self.current.clone(),
            type_count: self.type_count,
        };
        for slot in self.current.iter_mut().rev() {
            *slot += 1;
            if *slot < self.type_count {
                break;
            }
            *slot = 0;
        }
        Some(env)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.remaining as usize, Some(self.remaining as usize))
    }
}
