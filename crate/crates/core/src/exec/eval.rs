use thiserror::Error;

use super::value::{Value, VarEnv};
use crate::io::expr::{BinOp, Builtin, Expr, Literal, UnOp};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("unbound variable '{0}'")]
    Unbound(String),
    #[error("no field '{field}' in {path}")]
    NoField { path: String, field: String },
    #[error("type error: {0}")]
    Type(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("integer overflow")]
    Overflow,
}

fn type_err(what: &str, v: &Value) -> EvalError {
    EvalError::Type(format!("{what} expects {}, got {}", expected(what), v.type_name()))
}

fn expected(what: &str) -> &'static str {
    match what {
        "and" | "or" | "not" => "Boolean",
        "size" => "list or String",
        "notEmpty" | "isEmpty" => "list",
        _ => "Integer",
    }
}

/// Strict evaluation of an expression.
pub fn eval_expr(e: &Expr, env: &VarEnv) -> Result<Value, EvalError> {
    match e {
        Expr::Lit(Literal::Int(i)) => Ok(Value::Int(*i)),
        Expr::Lit(Literal::Str(s)) => Ok(Value::Str(s.clone())),
        Expr::Lit(Literal::Bool(b)) => Ok(Value::Bool(*b)),
        Expr::Path(segs) => {
            let mut v = env.get(&segs[0]).ok_or_else(|| EvalError::Unbound(segs[0].clone()))?;
            for (i, f) in segs.iter().enumerate().skip(1) {
                v = match v {
                    Value::Record(r) => r.get(f),
                    _ => None,
                }
                .ok_or_else(|| EvalError::NoField {
                    path: segs[..i].join("."),
                    field: f.clone(),
                })?;
            }
            Ok(v.clone())
        }
        Expr::Unary(op, a) => {
            let v = eval_expr(a, env)?;
            match (op, &v) {
                (UnOp::Not, Value::Bool(b)) => Ok(Value::Bool(!b)),
                (UnOp::Neg, Value::Int(i)) => i.checked_neg().map(Value::Int).ok_or(EvalError::Overflow),
                (UnOp::Not, _) => Err(type_err("not", &v)),
                (UnOp::Neg, _) => Err(type_err("-", &v)),
            }
        }
        Expr::Binary(op, l, r) => {
            let a = eval_expr(l, env)?;
            let b = eval_expr(r, env)?;
            binary(*op, a, b)
        }
        Expr::Call(f, a) => {
            let v = eval_expr(a, env)?;
            match (f, &v) {
                (Builtin::Size, Value::List(l)) => Ok(Value::Int(l.len() as i64)),
                (Builtin::Size, Value::Str(s)) => Ok(Value::Int(s.chars().count() as i64)),
                (Builtin::NotEmpty, Value::List(l)) => Ok(Value::Bool(!l.is_empty())),
                (Builtin::IsEmpty, Value::List(l)) => Ok(Value::Bool(l.is_empty())),
                _ => Err(type_err(f.name(), &v)),
            }
        }
    }
}

fn binary(op: BinOp, a: Value, b: Value) -> Result<Value, EvalError> {
    use BinOp::*;
    match op {
        And | Or => match (&a, &b) {
            (Value::Bool(x), Value::Bool(y)) => Ok(Value::Bool(if op == And { *x && *y } else { *x || *y })),
            (Value::Bool(_), _) => Err(type_err(op.symbol(), &b)),
            _ => Err(type_err(op.symbol(), &a)),
        },
        Eq | Ne => {
            if std::mem::discriminant(&a) != std::mem::discriminant(&b) {
                return Err(EvalError::Type(format!(
                    "cannot compare {} with {}",
                    a.type_name(),
                    b.type_name()
                )));
            }
            Ok(Value::Bool((a == b) == (op == Eq)))
        }
        Lt | Le | Gt | Ge => {
            let ord = match (&a, &b) {
                (Value::Int(x), Value::Int(y)) => x.cmp(y),
                (Value::Str(x), Value::Str(y)) => x.cmp(y),
                _ => {
                    return Err(EvalError::Type(format!(
                        "'{}' needs two Integers or two Strings, got {} and {}",
                        op.symbol(),
                        a.type_name(),
                        b.type_name()
                    )))
                }
            };
            Ok(Value::Bool(match op {
                Lt => ord.is_lt(),
                Le => ord.is_le(),
                Gt => ord.is_gt(),
                _ => ord.is_ge(),
            }))
        }
        Add | Sub | Mul | Div => {
            let (x, y) = match (&a, &b) {
                (Value::Int(x), Value::Int(y)) => (*x, *y),
                (Value::Int(_), _) => return Err(type_err(op.symbol(), &b)),
                _ => return Err(type_err(op.symbol(), &a)),
            };
            let r = match op {
                Add => x.checked_add(y),
                Sub => x.checked_sub(y),
                Mul => x.checked_mul(y),
                _ => {
                    if y == 0 {
                        return Err(EvalError::DivisionByZero);
                    }
                    x.checked_div(y)
                }
            };
            r.map(Value::Int).ok_or(EvalError::Overflow)
        }
    }
}
