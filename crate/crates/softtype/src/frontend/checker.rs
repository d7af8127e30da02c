//! Reference type checker for annotated toy programs: straightforward
//! syntax-directed checking, no inference beyond expression types. It exists
//! to validate gold fixtures and define gold typings; it is test and corpus
//! infrastructure, not part of the inference pipeline.
//!
//! Rules: `+` is number x number -> number or string x string -> string,
//! the other arithmetic operators are number-only, `++` is string-only,
//! comparisons need equal-typed operands and yield boolean. Unknown type
//! names are opaque nominal types: assignable among themselves, usable with
//! no operator. The `any` annotation is rejected outright; gold programs
//! are concretely typed and `any` exists only as the pipeline's abstain
//! outcome.

use super::{BinOp, Expr, Program, Stmt};
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CheckError {
    #[error("function `{function}`: {message}")]
    Type { function: String, message: String },
    #[error("slot `{name}` lacks an annotation")]
    MissingAnnotation { name: String },
    #[error("`{name}` is declared twice")]
    Duplicate { name: String },
    #[error("annotation `any` is reserved for inference output (slot `{name}`)")]
    AnyAnnotation { name: String },
}

fn fail(function: &str, message: impl Into<String>) -> CheckError {
    CheckError::Type {
        function: function.to_string(),
        message: message.into(),
    }
}

fn binary_type(function: &str, op: BinOp, lhs: &str, rhs: &str) -> Result<String, CheckError> {
    if op.is_comparison() {
        if lhs == rhs {
            return Ok("boolean".to_string());
        }
        return Err(fail(
            function,
            format!("comparison between `{lhs}` and `{rhs}`"),
        ));
    }
    let allowed: &[&str] = match op {
        BinOp::Add => &["number", "string"],
        BinOp::Concat => &["string"],
        _ => &["number"],
    };
    if lhs == rhs && allowed.contains(&lhs) {
        Ok(lhs.to_string())
    } else {
        Err(fail(
            function,
            format!("operator applied to `{lhs}` and `{rhs}`"),
        ))
    }
}

/// Checks a fully annotated program and returns the gold typing: one type
/// name per annotation slot, in the canonical slot order of
/// [`super::collect_slots`]. Unannotated `let` locals take their
/// initialiser's type; parameters and return slots must be annotated.
pub fn check_program(program: &Program) -> Result<Vec<String>, CheckError> {
    let slots = super::collect_slots(program).map_err(|e| match e {
        super::FrontendError::DuplicateSlot { name } => CheckError::Duplicate { name },
        other => CheckError::Type {
            function: String::new(),
            message: other.to_string(),
        },
    })?;
    for slot in &slots {
        if slot.annotation.as_deref() == Some("any") {
            return Err(CheckError::AnyAnnotation {
                name: slot.name.clone(),
            });
        }
    }

    let mut signatures: HashMap<&str, (&super::FunctionDecl, String)> = HashMap::new();
    for f in &program.functions {
        let ret = f
            .return_annotation
            .as_ref()
            .map(|a| a.name.clone())
            .ok_or_else(|| CheckError::MissingAnnotation {
                name: f.name.clone(),
            })?;
        signatures.insert(f.name.as_str(), (f, ret));
    }

    let mut gold: HashMap<String, String> = HashMap::new();
    for f in &program.functions {
        let mut scope: HashMap<&str, String> = HashMap::new();
        for p in &f.params {
            let ty = p
                .annotation
                .as_ref()
                .map(|a| a.name.clone())
                .ok_or_else(|| CheckError::MissingAnnotation {
                    name: p.name.clone(),
                })?;
            scope.insert(p.name.as_str(), ty);
        }
        let return_type = signatures[f.name.as_str()].1.clone();

        fn expr_type(
            e: &Expr,
            scope: &HashMap<&str, String>,
            signatures: &HashMap<&str, (&super::FunctionDecl, String)>,
            function: &str,
        ) -> Result<String, CheckError> {
            match e {
                Expr::NumberLit(..) => Ok("number".to_string()),
                Expr::StringLit(..) => Ok("string".to_string()),
                Expr::BoolLit(..) => Ok("boolean".to_string()),
                Expr::Var(name, _) => scope
                    .get(name.as_str())
                    .cloned()
                    .ok_or_else(|| fail(function, format!("undeclared identifier `{name}`"))),
                Expr::Binary { op, lhs, rhs } => {
                    let lt = expr_type(lhs, scope, signatures, function)?;
                    let rt = expr_type(rhs, scope, signatures, function)?;
                    binary_type(function, *op, &lt, &rt)
                }
                Expr::Call { callee, args, .. } => {
                    let (decl, ret) = signatures.get(callee.as_str()).ok_or_else(|| {
                        fail(function, format!("call to undeclared function `{callee}`"))
                    })?;
                    if decl.params.len() != args.len() {
                        return Err(fail(
                            function,
                            format!(
                                "`{callee}` expects {} arguments, got {}",
                                decl.params.len(),
                                args.len()
                            ),
                        ));
                    }
                    for (arg, param) in args.iter().zip(&decl.params) {
                        let at = expr_type(arg, scope, signatures, function)?;
                        let pt = &param.annotation.as_ref().expect("checked above").name;
                        if &at != pt {
                            return Err(fail(
                                function,
                                format!(
                                    "argument `{}` of `{callee}`: expected `{pt}`, got `{at}`",
                                    param.name
                                ),
                            ));
                        }
                    }
                    Ok(ret.clone())
                }
            }
        }

        for stmt in &f.body {
            match stmt {
                Stmt::Let {
                    name,
                    annotation,
                    value,
                    ..
                } => {
                    let vt = expr_type(value, &scope, &signatures, &f.name)?;
                    let ty = match annotation {
                        Some(a) => {
                            if a.name != vt {
                                return Err(fail(
                                    &f.name,
                                    format!(
                                        "`{name}` annotated `{}` but initialised with `{vt}`",
                                        a.name
                                    ),
                                ));
                            }
                            a.name.clone()
                        }
                        None => vt,
                    };
                    if scope.insert(name.as_str(), ty).is_some() {
                        return Err(CheckError::Duplicate { name: name.clone() });
                    }
                }
                Stmt::Assign { name, value, .. } => {
                    let vt = expr_type(value, &scope, &signatures, &f.name)?;
                    let declared = scope.get(name.as_str()).ok_or_else(|| {
                        fail(&f.name, format!("assignment to undeclared `{name}`"))
                    })?;
                    if declared != &vt {
                        return Err(fail(
                            &f.name,
                            format!("assigning `{vt}` to `{name}: {declared}`"),
                        ));
                    }
                }
                Stmt::Return { value } => {
                    let vt = expr_type(value, &scope, &signatures, &f.name)?;
                    if vt != return_type {
                        return Err(fail(
                            &f.name,
                            format!("returning `{vt}` from a `{return_type}` function"),
                        ));
                    }
                }
                Stmt::Expr(value) => {
                    expr_type(value, &scope, &signatures, &f.name)?;
                }
            }
        }

        for (name, ty) in scope {
            gold.insert(name.to_string(), ty);
        }
        gold.insert(f.name.clone(), return_type);
    }

    Ok(slots.iter().map(|slot| gold[&slot.name].clone()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_program;

    fn check(src: &str) -> Result<Vec<String>, CheckError> {
        check_program(&parse_program(src).unwrap())
    }

    #[test]
    fn accepts_well_typed_program() {
        let gold =
            check("function addNum(start: number, end: number): number { return start + end; }")
                .unwrap();
        assert_eq!(gold, ["number", "number", "number"]);
    }

    #[test]
    fn infers_unannotated_let_from_initialiser() {
        let gold = check("function f(a: number): number { let b = a * 2; return b; }").unwrap();
        assert_eq!(gold, ["number", "number", "number"]);
    }

    #[test]
    fn rejects_type_errors() {
        assert!(check("function f(x: number): number { return x ++ \"a\"; }").is_err());
        assert!(check("function f(x: number): string { return x; }").is_err());
        assert!(check("function f(x: number): boolean { return x < \"a\"; }").is_err());
        assert!(
            check("function f(x: number): number { return x; }\nfunction g(y: string): number { return f(y); }")
                .is_err()
        );
    }

    #[test]
    fn rejects_missing_annotations_and_any() {
        assert!(matches!(
            check("function f(x): number { return 1; }"),
            Err(CheckError::MissingAnnotation { .. })
        ));
        assert!(matches!(
            check("function f(x: any): number { return 1; }"),
            Err(CheckError::AnyAnnotation { .. })
        ));
    }

    #[test]
    fn opaque_named_types_pass_through_flows_only() {
        let gold =
            check("function passDate(d: Date): Date { let copy: Date = d; return copy; }").unwrap();
        assert_eq!(gold, ["Date", "Date", "Date"]);
        assert!(check("function f(d: Date): Date { return d * 2; }").is_err());
    }

    #[test]
    fn comparison_of_equal_opaque_types_is_boolean() {
        let gold = check("function sameDay(a: Date, b: Date): boolean { return a == b; }").unwrap();
        assert_eq!(gold, ["Date", "Date", "boolean"]);
    }
}
