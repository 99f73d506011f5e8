//! Guard and assignment expressions: a small OCL-flavoured language.
//!
//! Precedence, loosest first: `or`, `and`, `not`, comparison, additive,
//! multiplicative, unary minus. Comparisons do not chain.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Literal {
    Int(i64),
    Str(String),
    Bool(bool),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnOp {
    Not,
    Neg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    And,
    Or,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::And => "and",
            BinOp::Or => "or",
            BinOp::Eq => "=",
            BinOp::Ne => "<>",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Builtin {
    Size,
    NotEmpty,
    IsEmpty,
}

impl Builtin {
    pub fn name(self) -> &'static str {
        match self {
            Builtin::Size => "size",
            Builtin::NotEmpty => "notEmpty",
            Builtin::IsEmpty => "isEmpty",
        }
    }

    fn from_name(s: &str) -> Option<Self> {
        match s {
            "size" => Some(Builtin::Size),
            "notEmpty" => Some(Builtin::NotEmpty),
            "isEmpty" => Some(Builtin::IsEmpty),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Lit(Literal),
    /// `name(.field)*`
    Path(Vec<String>),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Builtin, Box<Expr>),
}

impl Expr {
    pub fn var(path: &str) -> Expr {
        Expr::Path(path.split('.').map(str::to_string).collect())
    }

    pub fn int(v: i64) -> Expr {
        Expr::Lit(Literal::Int(v))
    }

    pub fn bin(op: BinOp, l: Expr, r: Expr) -> Expr {
        Expr::Binary(op, Box::new(l), Box::new(r))
    }

    /// Root variable names referenced anywhere in the expression.
    pub fn roots(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_roots(&mut out);
        out
    }

    fn collect_roots<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Expr::Lit(_) => {}
            Expr::Path(p) => {
                if !out.contains(&p[0].as_str()) {
                    out.push(&p[0]);
                }
            }
            Expr::Unary(_, e) | Expr::Call(_, e) => e.collect_roots(out),
            Expr::Binary(_, l, r) => {
                l.collect_roots(out);
                r.collect_roots(out);
            }
        }
    }
}

/// Fully parenthesized rendering; `parse_expr(print_expr(e)) == e`.
pub fn print_expr(e: &Expr) -> String {
    e.to_string()
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Lit(Literal::Int(v)) => write!(f, "{v}"),
            Expr::Lit(Literal::Bool(b)) => write!(f, "{b}"),
            Expr::Lit(Literal::Str(s)) => {
                f.write_str("'")?;
                for c in s.chars() {
                    match c {
                        '\'' => f.write_str("\\'")?,
                        '\\' => f.write_str("\\\\")?,
                        c => write!(f, "{c}")?,
                    }
                }
                f.write_str("'")
            }
            Expr::Path(p) => f.write_str(&p.join(".")),
            Expr::Unary(UnOp::Not, e) => write!(f, "(not {e})"),
            Expr::Unary(UnOp::Neg, e) => write!(f, "(-{e})"),
            Expr::Binary(op, l, r) => write!(f, "({l} {} {r})", op.symbol()),
            Expr::Call(b, e) => write!(f, "{}({e})", b.name()),
        }
    }
}

impl Serialize for Expr {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Expr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        parse_expr(&s).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("expression syntax error at column {column}: {message}")]
pub struct ExprError {
    /// 1-based character column.
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(i64),
    Str(String),
    Ident(String),
    Sym(&'static str),
    End,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Int(v) => write!(f, "'{v}'"),
            Tok::Str(s) => write!(f, "string '{s}'"),
            Tok::Ident(s) => write!(f, "'{s}'"),
            Tok::Sym(s) => write!(f, "'{s}'"),
            Tok::End => f.write_str("end of input"),
        }
    }
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>, ExprError> {
    let chars: Vec<char> = text.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    let err = |col: usize, m: String| ExprError {
        column: col,
        message: m,
    };
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            let v = s
                .parse::<i64>()
                .map_err(|_| err(col, format!("integer literal {s} out of range")))?;
            toks.push((Tok::Int(v), col));
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            toks.push((Tok::Ident(chars[start..i].iter().collect()), col));
            continue;
        }
        if c == '\'' || c == '"' {
            let quote = c;
            let mut s = String::new();
            i += 1;
            loop {
                match chars.get(i) {
                    None => return Err(err(col, "unterminated string literal".into())),
                    Some('\\') => {
                        match chars.get(i + 1) {
                            Some(&e) => s.push(e),
                            None => return Err(err(col, "unterminated string literal".into())),
                        }
                        i += 2;
                    }
                    Some(&q) if q == quote => {
                        i += 1;
                        break;
                    }
                    Some(&o) => {
                        s.push(o);
                        i += 1;
                    }
                }
            }
            toks.push((Tok::Str(s), col));
            continue;
        }
        let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
        let sym = match two.as_str() {
            "<=" => Some("<="),
            ">=" => Some(">="),
            "<>" => Some("<>"),
            _ => None,
        };
        if let Some(s) = sym {
            toks.push((Tok::Sym(s), col));
            i += 2;
            continue;
        }
        let sym = match c {
            '=' => "=",
            '<' => "<",
            '>' => ">",
            '+' => "+",
            '-' => "-",
            '*' => "*",
            '/' => "/",
            '(' => "(",
            ')' => ")",
            '.' => ".",
            _ => return Err(err(col, format!("unexpected character '{c}'"))),
        };
        toks.push((Tok::Sym(sym), col));
        i += 1;
    }
    toks.push((Tok::End, chars.len() + 1));
    Ok(toks)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn col(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected<T>(&self) -> Result<T, ExprError> {
        Err(ExprError {
            column: self.col(),
            message: format!("unexpected {}", self.peek()),
        })
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn is_sym(&self, sym: &str) -> bool {
        matches!(self.peek(), Tok::Sym(s) if *s == sym)
    }

    fn expect_sym(&mut self, sym: &str) -> Result<(), ExprError> {
        if self.is_sym(sym) {
            self.bump();
            Ok(())
        } else {
            Err(ExprError {
                column: self.col(),
                message: format!("expected '{sym}', found {}", self.peek()),
            })
        }
    }

    fn or(&mut self) -> Result<Expr, ExprError> {
        let mut l = self.and()?;
        while self.is_kw("or") {
            self.bump();
            l = Expr::bin(BinOp::Or, l, self.and()?);
        }
        Ok(l)
    }

    fn and(&mut self) -> Result<Expr, ExprError> {
        let mut l = self.not()?;
        while self.is_kw("and") {
            self.bump();
            l = Expr::bin(BinOp::And, l, self.not()?);
        }
        Ok(l)
    }

    fn not(&mut self) -> Result<Expr, ExprError> {
        if self.is_kw("not") {
            self.bump();
            return Ok(Expr::Unary(UnOp::Not, Box::new(self.not()?)));
        }
        self.cmp()
    }

    fn cmp(&mut self) -> Result<Expr, ExprError> {
        let l = self.add()?;
        let op = match self.peek() {
            Tok::Sym("=") => BinOp::Eq,
            Tok::Sym("<>") => BinOp::Ne,
            Tok::Sym("<") => BinOp::Lt,
            Tok::Sym("<=") => BinOp::Le,
            Tok::Sym(">") => BinOp::Gt,
            Tok::Sym(">=") => BinOp::Ge,
            _ => return Ok(l),
        };
        self.bump();
        Ok(Expr::bin(op, l, self.add()?))
    }

    fn add(&mut self) -> Result<Expr, ExprError> {
        let mut l = self.mul()?;
        loop {
            let op = match self.peek() {
                Tok::Sym("+") => BinOp::Add,
                Tok::Sym("-") => BinOp::Sub,
                _ => return Ok(l),
            };
            self.bump();
            l = Expr::bin(op, l, self.mul()?);
        }
    }

    fn mul(&mut self) -> Result<Expr, ExprError> {
        let mut l = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Sym("*") => BinOp::Mul,
                Tok::Sym("/") => BinOp::Div,
                _ => return Ok(l),
            };
            self.bump();
            l = Expr::bin(op, l, self.unary()?);
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.is_sym("-") {
            self.bump();
            return Ok(Expr::Unary(UnOp::Neg, Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, ExprError> {
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(Expr::Lit(Literal::Int(v)))
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Expr::Lit(Literal::Str(s)))
            }
            Tok::Sym("(") => {
                self.bump();
                let e = self.or()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if matches!(name.as_str(), "and" | "or" | "not") {
                    return self.unexpected();
                }
                self.bump();
                match name.as_str() {
                    "true" => return Ok(Expr::Lit(Literal::Bool(true))),
                    "false" => return Ok(Expr::Lit(Literal::Bool(false))),
                    _ => {}
                }
                if self.is_sym("(") {
                    let col = self.col();
                    let Some(b) = Builtin::from_name(&name) else {
                        return Err(ExprError {
                            column: col,
                            message: format!("unknown function '{name}'"),
                        });
                    };
                    self.bump();
                    let arg = self.or()?;
                    self.expect_sym(")")?;
                    return Ok(Expr::Call(b, Box::new(arg)));
                }
                let mut path = vec![name];
                while self.is_sym(".") {
                    self.bump();
                    match self.bump() {
                        Tok::Ident(f) => path.push(f),
                        _ => {
                            self.pos -= 1;
                            return self.unexpected();
                        }
                    }
                }
                Ok(Expr::Path(path))
            }
            _ => self.unexpected(),
        }
    }
}

pub fn parse_expr(text: &str) -> Result<Expr, ExprError> {
    if text.trim().is_empty() {
        return Err(ExprError {
            column: 1,
            message: "empty expression".into(),
        });
    }
    let mut p = Parser {
        toks: tokenize(text)?,
        pos: 0,
    };
    let e = p.or()?;
    if *p.peek() != Tok::End {
        return p.unexpected();
    }
    Ok(e)
}

/// Splits `"var := expr"` into the target name and the parsed right-hand side.
pub fn parse_assignment(text: &str) -> Result<(String, Expr), ExprError> {
    let Some(pos) = text.find(":=") else {
        return Err(ExprError {
            column: 1,
            message: "expected 'name := expression'".into(),
        });
    };
    let target = text[..pos].trim();
    if target.is_empty() || !target.chars().all(|c| c.is_alphanumeric() || c == '_') {
        return Err(ExprError {
            column: 1,
            message: format!("invalid assignment target '{target}'"),
        });
    }
    let offset = text[..pos + 2].chars().count();
    let rhs = parse_expr(&text[pos + 2..]).map_err(|e| ExprError {
        column: e.column + offset,
        message: e.message,
    })?;
    Ok((target.to_string(), rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn guard_shape() {
        let e = parse_expr("order.total > 1000 and not rejected").unwrap();
        let expected = Expr::bin(
            BinOp::And,
            Expr::bin(BinOp::Gt, Expr::var("order.total"), Expr::int(1000)),
            Expr::Unary(UnOp::Not, Box::new(Expr::var("rejected"))),
        );
        assert_eq!(e, expected);
    }

    #[test]
    fn call_shape() {
        assert_eq!(
            parse_expr("size(order.items)").unwrap(),
            Expr::Call(Builtin::Size, Box::new(Expr::var("order.items")))
        );
    }

    #[test]
    fn double_equals_is_rejected_at_column_five() {
        let err = parse_expr("a = = b").unwrap_err();
        assert_eq!(err.column, 5);
    }

    #[test]
    fn precedence() {
        let e = parse_expr("1 + 2*3").unwrap();
        assert_eq!(e.to_string(), "(1 + (2 * 3))");
        let e = parse_expr("a or b and c").unwrap();
        assert_eq!(e.to_string(), "(a or (b and c))");
        let e = parse_expr("not a = b").unwrap();
        assert_eq!(e.to_string(), "(not (a = b))");
        let e = parse_expr("(1 + 2) * -3").unwrap();
        assert_eq!(e.to_string(), "((1 + 2) * (-3))");
    }

    #[test]
    fn errors() {
        assert!(parse_expr("").is_err());
        assert!(parse_expr("a <").is_err());
        assert!(parse_expr("(a").is_err());
        assert!(parse_expr("foo(a)").is_err());
        assert!(parse_expr("a < b < c").is_err());
        assert_eq!(parse_expr("a # b").unwrap_err().column, 3);
    }

    #[test]
    fn assignment() {
        let (t, e) = parse_assignment("approved := order.total >= 10").unwrap();
        assert_eq!(t, "approved");
        assert_eq!(e.to_string(), "(order.total >= 10)");
        assert!(parse_assignment("x = 1").is_err());
        assert_eq!(parse_assignment("x := = 1").unwrap_err().column, 6);
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0i64..1000).prop_map(Expr::int),
            any::<bool>().prop_map(|b| Expr::Lit(Literal::Bool(b))),
            "[a-z '\\\\]{0,6}".prop_map(|s| Expr::Lit(Literal::Str(s))),
            prop::collection::vec("[a-z][a-z0-9_]{0,4}", 1..3)
                .prop_filter("keywords", |p| p
                    .iter()
                    .all(|s| !matches!(s.as_str(), "and" | "or" | "not" | "true" | "false")))
                .prop_map(Expr::Path),
        ];
        leaf.prop_recursive(4, 32, 2, |inner| {
            let ops = prop::sample::select(vec![
                BinOp::And,
                BinOp::Or,
                BinOp::Eq,
                BinOp::Ne,
                BinOp::Lt,
                BinOp::Le,
                BinOp::Gt,
                BinOp::Ge,
                BinOp::Add,
                BinOp::Sub,
                BinOp::Mul,
                BinOp::Div,
            ]);
            prop_oneof![
                (ops, inner.clone(), inner.clone()).prop_map(|(o, l, r)| Expr::bin(o, l, r)),
                inner.clone().prop_map(|e| Expr::Unary(UnOp::Not, Box::new(e))),
                inner.clone().prop_map(|e| Expr::Unary(UnOp::Neg, Box::new(e))),
                inner.prop_map(|e| Expr::Call(Builtin::NotEmpty, Box::new(e))),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_parse_roundtrip(e in arb_expr()) {
            prop_assert_eq!(parse_expr(&print_expr(&e)).unwrap(), e);
        }
    }
}
