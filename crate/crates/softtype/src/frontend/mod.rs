//! Frontend for a small annotatable toy language (`.tl` files) and the
//! constraint generator that turns its programs into logical formulas.
//!
//! The language is deliberately tiny: top-level function declarations with
//! optionally annotated parameters, return types and `let` locals; bodies of
//! literals, variable references, binary operators, calls to declared
//! functions, assignments and returns. Single scope per function, no
//! shadowing, and annotation-slot names are unique across a file so that
//! each slot maps to one identifier in the numeric core.
//!
//! Constraint generation mirrors how usage pins types down:
//!
//! - an operand forced to a single type (a numeric literal next to `*`, a
//!   string literal next to `++`, a boolean comparison) emits a bare
//!   `x is T` atom;
//! - a use compatible with several types (`+` works for numbers and for
//!   strings) emits the disjunction, over those types, of "both operands are
//!   that type", and ties the result slot the same way;
//! - a return statement ties the function's return slot to the returned
//!   expression's constraint;
//! - the file's bundle is the conjunction of all emissions. Slots that no
//!   usage touches get no atoms at all: the learned channel decides them.

mod checker;
mod constraints;
mod parser;

pub use checker::{check_program, CheckError};
pub use constraints::generate_constraints;
pub use parser::parse_program;

use crate::logic::{Constraint, IdentifierSet, TypeUniverse};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FrontendError {
    #[error("{line}:{col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("undeclared identifier `{name}` in function `{function}`")]
    Undeclared { name: String, function: String },
    #[error("`{name}` is declared twice (slot names are unique per file)")]
    DuplicateSlot { name: String },
    #[error("call to undeclared function `{name}`")]
    UndeclaredFunction { name: String },
    #[error("invalid sidecar: {0}")]
    Sidecar(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypeAnnotation {
    pub name: String,
    /// Byte range of `: name`, starting at the colon.
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub name_span: Span,
    pub annotation: Option<TypeAnnotation>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionDecl {
    pub name: String,
    pub name_span: Span,
    pub params: Vec<Param>,
    pub return_annotation: Option<TypeAnnotation>,
    /// Byte offset just after the parameter list's closing parenthesis,
    /// where a return annotation is inserted.
    pub return_insert_offset: usize,
    pub body: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Stmt {
    Let {
        name: String,
        name_span: Span,
        annotation: Option<TypeAnnotation>,
        value: Expr,
    },
    Assign {
        name: String,
        name_span: Span,
        value: Expr,
    },
    Return {
        value: Expr,
    },
    Expr(Expr),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    /// String concatenation, `++`.
    Concat,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl BinOp {
    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::Eq | BinOp::Ne
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    NumberLit(f64, Span),
    StringLit(String, Span),
    BoolLit(bool, Span),
    Var(String, Span),
    Binary {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Call {
        callee: String,
        callee_span: Span,
        args: Vec<Expr>,
    },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Program {
    pub functions: Vec<FunctionDecl>,
}

/// Annotation-position categories. `Meth` and `Prop` are reserved for
/// languages with classes; the toy frontend never emits them but reports
/// keep the columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SlotKind {
    #[serde(rename = "FUN")]
    Fun,
    #[serde(rename = "METH")]
    Meth,
    #[serde(rename = "PAR")]
    Par,
    #[serde(rename = "PROP")]
    Prop,
    #[serde(rename = "VAR")]
    Var,
}

impl SlotKind {
    pub const ALL: [SlotKind; 5] = [
        SlotKind::Fun,
        SlotKind::Meth,
        SlotKind::Par,
        SlotKind::Prop,
        SlotKind::Var,
    ];

    pub fn label(self) -> &'static str {
        match self {
            SlotKind::Fun => "FUN",
            SlotKind::Meth => "METH",
            SlotKind::Par => "PAR",
            SlotKind::Prop => "PROP",
            SlotKind::Var => "VAR",
        }
    }
}

/// One annotation slot of a program, in canonical order: per function, the
/// parameters, then the `let` locals, then the function's return slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotInfo {
    pub name: String,
    pub kind: SlotKind,
    pub function_index: usize,
    pub annotation: Option<String>,
    /// Where an annotation is textually inserted (byte offset).
    pub insert_offset: usize,
    /// Byte range of the existing `: type` annotation, if any.
    pub annotation_span: Option<Span>,
}

/// Collects every annotation slot in canonical order, enforcing file-wide
/// slot-name uniqueness.
pub fn collect_slots(program: &Program) -> Result<Vec<SlotInfo>, FrontendError> {
    fn push(slot: SlotInfo, slots: &mut Vec<SlotInfo>) -> Result<(), FrontendError> {
        if slots.iter().any(|s| s.name == slot.name) {
            return Err(FrontendError::DuplicateSlot { name: slot.name });
        }
        slots.push(slot);
        Ok(())
    }
    let mut slots: Vec<SlotInfo> = Vec::new();
    for (fi, function) in program.functions.iter().enumerate() {
        for param in &function.params {
            push(
                SlotInfo {
                    name: param.name.clone(),
                    kind: SlotKind::Par,
                    function_index: fi,
                    annotation: param.annotation.as_ref().map(|a| a.name.clone()),
                    insert_offset: param.name_span.end,
                    annotation_span: param.annotation.as_ref().map(|a| a.span),
                },
                &mut slots,
            )?;
        }
        for stmt in &function.body {
            if let Stmt::Let {
                name,
                name_span,
                annotation,
                ..
            } = stmt
            {
                push(
                    SlotInfo {
                        name: name.clone(),
                        kind: SlotKind::Var,
                        function_index: fi,
                        annotation: annotation.as_ref().map(|a| a.name.clone()),
                        insert_offset: name_span.end,
                        annotation_span: annotation.as_ref().map(|a| a.span),
                    },
                    &mut slots,
                )?;
            }
        }
        push(
            SlotInfo {
                name: function.name.clone(),
                kind: SlotKind::Fun,
                function_index: fi,
                annotation: function.return_annotation.as_ref().map(|a| a.name.clone()),
                insert_offset: function.return_insert_offset,
                annotation_span: function.return_annotation.as_ref().map(|a| a.span),
            },
            &mut slots,
        )?;
    }
    Ok(slots)
}

/// The same AST with every annotation removed. Stripping twice is the
/// identity; gold annotations are read off separately via [`collect_slots`].
pub fn strip_annotations(program: &Program) -> Program {
    let functions = program
        .functions
        .iter()
        .map(|f| FunctionDecl {
            name: f.name.clone(),
            name_span: f.name_span,
            params: f
                .params
                .iter()
                .map(|p| Param {
                    name: p.name.clone(),
                    name_span: p.name_span,
                    annotation: None,
                })
                .collect(),
            return_annotation: None,
            return_insert_offset: f.return_insert_offset,
            body: f
                .body
                .iter()
                .map(|stmt| match stmt {
                    Stmt::Let {
                        name,
                        name_span,
                        value,
                        ..
                    } => Stmt::Let {
                        name: name.clone(),
                        name_span: *name_span,
                        annotation: None,
                        value: value.clone(),
                    },
                    other => other.clone(),
                })
                .collect(),
        })
        .collect();
    Program { functions }
}

/// Identifier slots, universe, slot kinds and the single conjunction of all
/// emitted constraints (`None` when nothing was emitted).
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintBundle {
    pub identifiers: IdentifierSet,
    pub universe: TypeUniverse,
    pub slot_kinds: Vec<SlotKind>,
    pub constraint: Option<Constraint>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SidecarFile {
    schema_version: u32,
    universe: Vec<String>,
    identifiers: Vec<String>,
    slot_kinds: Vec<SlotKind>,
}

pub const SIDECAR_VERSION: u32 = 1;

impl ConstraintBundle {
    /// The bundle's constraint in DSL text (empty string when there is no
    /// constraint).
    pub fn to_dsl(&self) -> String {
        match &self.constraint {
            Some(c) => {
                let mut text =
                    crate::logic::constraint_to_dsl(c, &self.identifiers, &self.universe);
                text.push('\n');
                text
            }
            None => String::new(),
        }
    }

    /// JSON sidecar carrying identifier order, slot kinds and the universe.
    pub fn sidecar_json(&self) -> String {
        let file = SidecarFile {
            schema_version: SIDECAR_VERSION,
            universe: self.universe.names().to_vec(),
            identifiers: self.identifiers.names().to_vec(),
            slot_kinds: self.slot_kinds.clone(),
        };
        serde_json::to_string_pretty(&file).expect("sidecar serialises")
    }

    /// Rebuilds a bundle from DSL text plus its sidecar. Formulas in the DSL
    /// file are conjoined.
    pub fn from_dsl(dsl: &str, sidecar: &str) -> Result<Self, FrontendError> {
        let file: SidecarFile =
            serde_json::from_str(sidecar).map_err(|e| FrontendError::Sidecar(e.to_string()))?;
        if file.schema_version != SIDECAR_VERSION {
            return Err(FrontendError::Sidecar(format!(
                "unsupported schema version {}",
                file.schema_version
            )));
        }
        if file.slot_kinds.len() != file.identifiers.len() {
            return Err(FrontendError::Sidecar(
                "slot kinds and identifiers disagree in length".to_string(),
            ));
        }
        let identifiers = IdentifierSet::new(file.identifiers)
            .map_err(|e| FrontendError::Sidecar(e.to_string()))?;
        let universe =
            TypeUniverse::new(file.universe).map_err(|e| FrontendError::Sidecar(e.to_string()))?;
        let formulas = crate::logic::parse_constraints(dsl, &identifiers, &universe)
            .map_err(|e| FrontendError::Sidecar(e.to_string()))?;
        Ok(Self {
            identifiers,
            universe,
            slot_kinds: file.slot_kinds,
            constraint: Constraint::and_all(formulas),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strip_is_idempotent_and_removes_annotations() {
        let src = "function addNum(start: number, end: number): number { return start + end; }";
        let program = parse_program(src).unwrap();
        let stripped = strip_annotations(&program);
        assert!(stripped.functions[0].params[0].annotation.is_none());
        assert!(stripped.functions[0].return_annotation.is_none());
        assert_eq!(strip_annotations(&stripped), stripped);
        // Gold annotations remain readable from the original AST.
        let slots = collect_slots(&program).unwrap();
        assert_eq!(slots[0].annotation.as_deref(), Some("number"));
    }

    #[test]
    fn slot_order_is_params_locals_then_function() {
        let src = "function f(a: number) { let b: number = a * 2; return b; }\nfunction g(): string { return \"x\"; }";
        let program = parse_program(src).unwrap();
        let slots = collect_slots(&program).unwrap();
        let names: Vec<&str> = slots.iter().map(|s| s.name.as_str()).collect();
        assert_eq!(names, ["a", "b", "f", "g"]);
        let kinds: Vec<SlotKind> = slots.iter().map(|s| s.kind).collect();
        assert_eq!(
            kinds,
            [SlotKind::Par, SlotKind::Var, SlotKind::Fun, SlotKind::Fun]
        );
    }

    #[test]
    fn duplicate_slot_names_are_rejected() {
        let src = "function f(x) { return x; }\nfunction g(x) { return x; }";
        let program = parse_program(src).unwrap();
        assert!(matches!(
            collect_slots(&program),
            Err(FrontendError::DuplicateSlot { .. })
        ));
    }

    #[test]
    fn bundle_round_trips_through_dsl_and_sidecar() {
        let src = "function addNum(start, end) { return start + end; }";
        let program = parse_program(src).unwrap();
        let universe = TypeUniverse::new(["number", "string", "boolean", "any"]).unwrap();
        let bundle = generate_constraints(&program, &universe).unwrap();
        let rebuilt = ConstraintBundle::from_dsl(&bundle.to_dsl(), &bundle.sidecar_json()).unwrap();
        assert_eq!(rebuilt, bundle);
    }
}
