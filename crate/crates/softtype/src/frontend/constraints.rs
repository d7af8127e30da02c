//! Constraint generation over the toy AST.
//!
//! Every expression is summarised bottom-up as evidence about its type:
//! either a single concrete type (`Known`), or a dependency on one slot's
//! type through a mapping (`Slot`), or nothing (`Opaque`). Binary operators
//! and value flows (assignments, returns, call arguments) turn that evidence
//! into `Is` atoms and equal-type disjunctions.
//!
//! The `any` type never appears in an atom: it is the abstain outcome, so
//! equal-type disjunctions range over the concrete types only.

use super::{BinOp, ConstraintBundle, Expr, FrontendError, Program, Stmt, TypeUniverse};
use crate::logic::{Constraint, IdentifierSet};
use std::collections::HashMap;

/// Operator typing table, by universe type name:
/// `+` works on number x number -> number and string x string -> string,
/// the other arithmetic operators on numbers only, `++` on strings only,
/// comparisons on any pair of equal concrete types with boolean result.
fn operand_type_names(op: BinOp) -> &'static [&'static str] {
    match op {
        BinOp::Add => &["number", "string"],
        BinOp::Sub | BinOp::Mul | BinOp::Div => &["number"],
        BinOp::Concat => &["string"],
        _ => &[],
    }
}

#[derive(Debug, Clone)]
enum Evidence {
    /// The expression has exactly this type.
    Known(usize),
    /// The expression's type is a function of one slot's type: `pairs`
    /// lists `(slot type, expression type)`.
    Slot {
        slot: usize,
        pairs: Vec<(usize, usize)>,
    },
    /// No usable information.
    Opaque,
}

struct Emitter<'a> {
    universe: &'a TypeUniverse,
    /// Concrete (non-`any`) type indices, in universe order.
    concrete: Vec<usize>,
    boolean: Option<usize>,
    slot_of: HashMap<String, usize>,
    /// Function name -> (function slot, parameter slots).
    functions: HashMap<String, (usize, Vec<usize>)>,
    emissions: Vec<Constraint>,
}

impl<'a> Emitter<'a> {
    /// Allowed operand types of `op` present in this universe.
    fn allowed(&self, op: BinOp) -> Vec<usize> {
        if op.is_comparison() {
            return self.concrete.clone();
        }
        operand_type_names(op)
            .iter()
            .filter_map(|name| self.universe.index_of(name))
            .collect()
    }

    fn result_of(&self, op: BinOp, operand: usize) -> Option<usize> {
        if op.is_comparison() {
            self.boolean
        } else {
            // Arithmetic and concatenation preserve the operand type.
            Some(operand)
        }
    }

    /// Disjunction of the slot types under which the evidence's expression
    /// has type `target`; `None` when no slot type gives it.
    fn atom_for(&self, slot: usize, pairs: &[(usize, usize)], target: usize) -> Option<Constraint> {
        Constraint::or_all(
            pairs
                .iter()
                .filter(|(_, expr_ty)| *expr_ty == target)
                .map(|(slot_ty, _)| Constraint::is(slot, *slot_ty)),
        )
    }

    /// Emits "the expression behind `evidence` has type `target`".
    fn constrain_to(&mut self, evidence: &Evidence, target: usize) {
        if let Evidence::Slot { slot, pairs } = evidence {
            if let Some(atom) = self.atom_for(*slot, pairs, target) {
                self.emissions.push(atom);
            }
        }
    }

    /// Ties the value of `evidence` to `target_slot`: a bare atom when the
    /// type is known, otherwise the disjunction over the evidence's pairs.
    fn tie_to_slot(&mut self, evidence: &Evidence, target_slot: usize) {
        match evidence {
            Evidence::Known(ty) => self.emissions.push(Constraint::is(target_slot, *ty)),
            Evidence::Slot { slot, pairs } => {
                let arms = pairs.iter().map(|(slot_ty, expr_ty)| {
                    Constraint::and(
                        Constraint::is(*slot, *slot_ty),
                        Constraint::is(target_slot, *expr_ty),
                    )
                });
                if let Some(disjunction) = Constraint::or_all(arms) {
                    self.emissions.push(disjunction);
                }
            }
            Evidence::Opaque => {}
        }
    }

    fn binary(&mut self, op: BinOp, lhs: Evidence, rhs: Evidence) -> Evidence {
        let allowed = self.allowed(op);
        if allowed.is_empty() {
            return Evidence::Opaque;
        }
        match (&lhs, &rhs) {
            (Evidence::Known(a), Evidence::Known(b)) => {
                if a == b && allowed.contains(a) {
                    self.result_evidence_known(op, *a)
                } else {
                    Evidence::Opaque
                }
            }
            (Evidence::Known(a), other) | (other, Evidence::Known(a)) => {
                if !allowed.contains(a) {
                    return Evidence::Opaque;
                }
                self.constrain_to(other, *a);
                self.result_evidence_known(op, *a)
            }
            (
                Evidence::Slot {
                    slot: ls,
                    pairs: lp,
                },
                Evidence::Slot {
                    slot: rs,
                    pairs: rp,
                },
            ) => {
                // Disjunction over the allowed types of "both operands are
                // that type"; the result is tied to the left operand.
                let mut arms = Vec::new();
                let mut result_pairs = Vec::new();
                for &ty in &allowed {
                    let left = self.atom_for(*ls, lp, ty);
                    let right = self.atom_for(*rs, rp, ty);
                    if let (Some(left), Some(right)) = (left, right) {
                        arms.push(Constraint::and(left, right));
                        if let Some(result) = self.result_of(op, ty) {
                            for (slot_ty, expr_ty) in lp {
                                if *expr_ty == ty {
                                    result_pairs.push((*slot_ty, result));
                                }
                            }
                        }
                    }
                }
                if let Some(disjunction) = Constraint::or_all(arms) {
                    self.emissions.push(disjunction);
                }
                self.slot_result(op, *ls, result_pairs)
            }
            (Evidence::Slot { slot, pairs }, Evidence::Opaque)
            | (Evidence::Opaque, Evidence::Slot { slot, pairs }) => {
                // The informative side alone is constrained to the allowed
                // set.
                let mut arms = Vec::new();
                let mut result_pairs = Vec::new();
                for &ty in &allowed {
                    if let Some(atom) = self.atom_for(*slot, pairs, ty) {
                        arms.push(atom);
                        if let Some(result) = self.result_of(op, ty) {
                            for (slot_ty, expr_ty) in pairs {
                                if *expr_ty == ty {
                                    result_pairs.push((*slot_ty, result));
                                }
                            }
                        }
                    }
                }
                if let Some(disjunction) = Constraint::or_all(arms) {
                    self.emissions.push(disjunction);
                }
                self.slot_result(op, *slot, result_pairs)
            }
            (Evidence::Opaque, Evidence::Opaque) => {
                if op.is_comparison() {
                    self.boolean.map_or(Evidence::Opaque, Evidence::Known)
                } else if allowed.len() == 1 {
                    self.result_evidence_known(op, allowed[0])
                } else {
                    Evidence::Opaque
                }
            }
        }
    }

    fn result_evidence_known(&self, op: BinOp, operand: usize) -> Evidence {
        self.result_of(op, operand)
            .map_or(Evidence::Opaque, Evidence::Known)
    }

    fn slot_result(&self, op: BinOp, slot: usize, pairs: Vec<(usize, usize)>) -> Evidence {
        if pairs.is_empty() {
            return Evidence::Opaque;
        }
        if op.is_comparison() {
            return self.boolean.map_or(Evidence::Opaque, Evidence::Known);
        }
        let first = pairs[0].1;
        if pairs.iter().all(|(_, r)| *r == first) {
            // The already-emitted operand disjunction restricts the slot to
            // the paired types, and they all lead to one result type.
            return Evidence::Known(first);
        }
        Evidence::Slot { slot, pairs }
    }

    fn expr(
        &mut self,
        expr: &Expr,
        scope: &HashMap<String, usize>,
        function: &str,
    ) -> Result<Evidence, FrontendError> {
        match expr {
            Expr::NumberLit(..) => Ok(self.known_by_name("number")),
            Expr::StringLit(..) => Ok(self.known_by_name("string")),
            Expr::BoolLit(..) => Ok(self.known_by_name("boolean")),
            Expr::Var(name, _) => match scope.get(name) {
                Some(&slot) => Ok(Evidence::Slot {
                    slot,
                    pairs: self.concrete.iter().map(|&t| (t, t)).collect(),
                }),
                None => Err(FrontendError::Undeclared {
                    name: name.clone(),
                    function: function.to_string(),
                }),
            },
            Expr::Binary { op, lhs, rhs } => {
                let le = self.expr(lhs, scope, function)?;
                let re = self.expr(rhs, scope, function)?;
                Ok(self.binary(*op, le, re))
            }
            Expr::Call { callee, args, .. } => {
                let (fn_slot, param_slots) =
                    self.functions.get(callee).cloned().ok_or_else(|| {
                        FrontendError::UndeclaredFunction {
                            name: callee.clone(),
                        }
                    })?;
                for (arg, param_slot) in args.iter().zip(param_slots) {
                    let evidence = self.expr(arg, scope, function)?;
                    self.tie_to_slot(&evidence, param_slot);
                }
                Ok(Evidence::Slot {
                    slot: fn_slot,
                    pairs: self.concrete.iter().map(|&t| (t, t)).collect(),
                })
            }
        }
    }

    fn known_by_name(&self, name: &str) -> Evidence {
        self.universe
            .index_of(name)
            .map_or(Evidence::Opaque, Evidence::Known)
    }
}

/// Emission over the whole program: one conjunction covering every usage.
/// Annotations are ignored; only the code's shape speaks.
pub fn generate_constraints(
    program: &Program,
    universe: &TypeUniverse,
) -> Result<ConstraintBundle, FrontendError> {
    let slots = super::collect_slots(program)?;
    let identifiers = IdentifierSet::new(slots.iter().map(|s| s.name.clone()))
        .expect("collect_slots guarantees nonempty distinct names");
    let slot_kinds = slots.iter().map(|s| s.kind).collect();

    let abstain = universe.index_of("any");
    let concrete: Vec<usize> = (0..universe.len())
        .filter(|t| Some(*t) != abstain)
        .collect();
    let slot_of: HashMap<String, usize> = slots
        .iter()
        .enumerate()
        .map(|(i, s)| (s.name.clone(), i))
        .collect();
    let mut functions = HashMap::new();
    for f in &program.functions {
        let param_slots = f.params.iter().map(|p| slot_of[&p.name]).collect();
        functions.insert(f.name.clone(), (slot_of[&f.name], param_slots));
    }

    let mut emitter = Emitter {
        universe,
        concrete,
        boolean: universe.index_of("boolean"),
        slot_of,
        functions,
        emissions: Vec::new(),
    };

    for f in &program.functions {
        let mut scope: HashMap<String, usize> = f
            .params
            .iter()
            .map(|p| (p.name.clone(), emitter.slot_of[&p.name]))
            .collect();
        let fn_slot = emitter.slot_of[&f.name];
        for stmt in &f.body {
            match stmt {
                Stmt::Let { name, value, .. } => {
                    let evidence = emitter.expr(value, &scope, &f.name)?;
                    let slot = emitter.slot_of[name];
                    emitter.tie_to_slot(&evidence, slot);
                    scope.insert(name.clone(), slot);
                }
                Stmt::Assign { name, value, .. } => {
                    let slot = *scope.get(name).ok_or_else(|| FrontendError::Undeclared {
                        name: name.clone(),
                        function: f.name.clone(),
                    })?;
                    let evidence = emitter.expr(value, &scope, &f.name)?;
                    emitter.tie_to_slot(&evidence, slot);
                }
                Stmt::Return { value } => {
                    let evidence = emitter.expr(value, &scope, &f.name)?;
                    emitter.tie_to_slot(&evidence, fn_slot);
                }
                Stmt::Expr(value) => {
                    emitter.expr(value, &scope, &f.name)?;
                }
            }
        }
    }

    Ok(ConstraintBundle {
        identifiers,
        universe: universe.clone(),
        slot_kinds,
        constraint: Constraint::and_all(emitter.emissions),
    })
}
