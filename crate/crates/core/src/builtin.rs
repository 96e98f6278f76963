//! Math builtins usable as pattern guards.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::fact::Binding;
use crate::term::{Number, Term, Var, NUMERIC_TOLERANCE};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum BuiltinOp {
    GreaterThan,
    LessThan,
    GreaterOrEqual,
    LessOrEqual,
    EqualTo,
    NotEqualTo,
    Product,
    Sum,
    Difference,
    Quotient,
}

impl BuiltinOp {
    pub const ALL: [BuiltinOp; 10] = [
        BuiltinOp::GreaterThan,
        BuiltinOp::LessThan,
        BuiltinOp::GreaterOrEqual,
        BuiltinOp::LessOrEqual,
        BuiltinOp::EqualTo,
        BuiltinOp::NotEqualTo,
        BuiltinOp::Product,
        BuiltinOp::Sum,
        BuiltinOp::Difference,
        BuiltinOp::Quotient,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BuiltinOp::GreaterThan => "greaterThan",
            BuiltinOp::LessThan => "lessThan",
            BuiltinOp::GreaterOrEqual => "greaterOrEqual",
            BuiltinOp::LessOrEqual => "lessOrEqual",
            BuiltinOp::EqualTo => "equalTo",
            BuiltinOp::NotEqualTo => "notEqualTo",
            BuiltinOp::Product => "product",
            BuiltinOp::Sum => "sum",
            BuiltinOp::Difference => "difference",
            BuiltinOp::Quotient => "quotient",
        }
    }

    pub fn from_name(name: &str) -> Option<BuiltinOp> {
        Self::ALL.into_iter().find(|op| op.name() == name)
    }

    pub fn is_arithmetic(self) -> bool {
        matches!(self, BuiltinOp::Product | BuiltinOp::Sum | BuiltinOp::Difference | BuiltinOp::Quotient)
    }
}

/// A builtin applied to two arguments. Arithmetic ops carry a result variable,
/// comparisons do not.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuiltinCall {
    pub op: BuiltinOp,
    pub args: [Term; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<Var>,
}

impl BuiltinCall {
    pub fn new(op: BuiltinOp, lhs: Term, rhs: Term, result: Option<Var>) -> Result<Self, Error> {
        if op.is_arithmetic() != result.is_some() {
            return Err(Error::InvalidTerm(if op.is_arithmetic() {
                format!("{} needs a result variable", op.name())
            } else {
                format!("{} takes no result variable", op.name())
            }));
        }
        Ok(BuiltinCall { op, args: [lhs, rhs], result })
    }

    pub fn compare(op: BuiltinOp, lhs: Term, rhs: Term) -> Result<Self, Error> {
        Self::new(op, lhs, rhs, None)
    }

    pub fn arithmetic(op: BuiltinOp, lhs: Term, rhs: Term, result: Var) -> Result<Self, Error> {
        Self::new(op, lhs, rhs, Some(result))
    }

    /// Checks the arity/result invariant; interchange documents bypass
    /// the constructor.
    pub fn is_well_formed(&self) -> bool {
        self.op.is_arithmetic() == self.result.is_some()
    }

    pub fn input_vars(&self) -> impl Iterator<Item = &Var> + '_ {
        self.args.iter().filter_map(Term::as_var)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum GuardOutcome {
    Holds(bool),
    Value(Var, Number),
}

pub(crate) fn approx_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= NUMERIC_TOLERANCE
}

/// Evaluates `call` under `binding`. Every argument variable must be bound to
/// a number.
pub fn eval(call: &BuiltinCall, binding: &Binding) -> Result<GuardOutcome, Error> {
    let arg = |t: &Term| -> Result<f64, Error> {
        let resolved = match t {
            Term::Variable(v) => binding.get(v).ok_or_else(|| Error::GuardUnbound(v.clone()))?,
            t => t,
        };
        resolved
            .as_number()
            .map(Number::value)
            .ok_or_else(|| Error::TypeMismatch { op: call.op.name(), found: resolved.kind().to_string() })
    };
    let (a, b) = (arg(&call.args[0])?, arg(&call.args[1])?);

    let holds = |v: bool| Ok(GuardOutcome::Holds(v));
    let value = match call.op {
        BuiltinOp::GreaterThan => return holds(a > b),
        BuiltinOp::LessThan => return holds(a < b),
        BuiltinOp::GreaterOrEqual => return holds(a >= b),
        BuiltinOp::LessOrEqual => return holds(a <= b),
        BuiltinOp::EqualTo => return holds(approx_eq(a, b)),
        BuiltinOp::NotEqualTo => return holds(!approx_eq(a, b)),
        BuiltinOp::Product => a * b,
        BuiltinOp::Sum => a + b,
        BuiltinOp::Difference => a - b,
        BuiltinOp::Quotient => {
            if b == 0.0 {
                return Err(Error::DivisionByZero);
            }
            a / b
        }
    };
    let result = call.result.clone().ok_or_else(|| Error::InvalidTerm(format!("{} needs a result variable", call.op.name())))?;
    Ok(GuardOutcome::Value(result, Number::new(value)?))
}
