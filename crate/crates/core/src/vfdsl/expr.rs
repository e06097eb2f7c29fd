//! Expression syntax trees, recursive-descent parser, printer and evaluators.
//!
//! ```text
//! expr   = term { ("+" | "-") term } ;
//! term   = unary { ("*" | "/") unary } ;
//! unary  = "-" unary | power ;
//! power  = atom [ "^" unary ] ;
//! atom   = number | "pi" | var | func "(" expr ")" | "(" expr ")" ;
//! func   = "sin" | "cos" | "exp" | "sqrt" | "abs" ;
//! var    = "phi" | "x" digit { digit } | "a" | "b" | "c" | "d" ;
//! number = digits [ "." [ digits ] ] [ exponent ] | "." digits [ exponent ] ;
//! ```

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use super::DslError;

const MAX_DEPTH: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }

    fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            BinOp::Add => a + b,
            BinOp::Sub => a - b,
            BinOp::Mul => a * b,
            BinOp::Div => a / b,
            BinOp::Pow => pow(a, b),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
    Abs,
}

impl Func {
    pub const ALL: [Func; 5] = [Func::Sin, Func::Cos, Func::Exp, Func::Sqrt, Func::Abs];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    fn from_name(s: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == s)
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Exp => x.exp(),
            Func::Sqrt => x.sqrt(),
            Func::Abs => x.abs(),
        }
    }
}

/// Small integer exponents use repeated multiplication.
fn pow(a: f64, b: f64) -> f64 {
    if b.fract() == 0.0 && b.abs() <= 16.0 {
        a.powi(b as i32)
    } else {
        a.powf(b)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(String),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

/// True for names the grammar accepts as variables.
pub fn is_variable_name(s: &str) -> bool {
    matches!(s, "phi" | "a" | "b" | "c" | "d")
        || (s.len() > 1 && s.starts_with('x') && s[1..].bytes().all(|b| b.is_ascii_digit()))
}

impl Expr {
    fn prec(&self) -> u8 {
        match self {
            Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
            Expr::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
            Expr::Neg(_) => 3,
            Expr::Bin(BinOp::Pow, ..) => 4,
            Expr::Num(v) if *v < 0.0 || v.is_sign_negative() => 3,
            _ => 5,
        }
    }

    /// Free variables in first-occurrence order.
    pub fn variables(&self) -> Vec<String> {
        fn walk(e: &Expr, out: &mut Vec<String>) {
            match e {
                Expr::Num(_) => {}
                Expr::Var(v) => {
                    if !out.contains(v) {
                        out.push(v.clone());
                    }
                }
                Expr::Neg(a) | Expr::Call(_, a) => walk(a, out),
                Expr::Bin(_, a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn child(f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
            if parens {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        }
        match self {
            Expr::Num(v) => {
                if v.is_sign_negative() {
                    write!(f, "-{:?}", -v)
                } else {
                    write!(f, "{v:?}")
                }
            }
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Neg(a) => {
                write!(f, "-")?;
                child(f, a, a.prec() < 3)
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
            Expr::Bin(BinOp::Pow, a, b) => {
                child(f, a, a.prec() <= 4)?;
                write!(f, "^")?;
                child(f, b, b.prec() < 3)
            }
            Expr::Bin(op, a, b) => {
                let p = self.prec();
                child(f, a, a.prec() < p)?;
                match op {
                    BinOp::Add | BinOp::Sub => write!(f, " {} ", op.symbol())?,
                    _ => write!(f, "{}", op.symbol())?,
                }
                child(f, b, b.prec() <= p)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Sym(c) => format!("`{c}`"),
            Tok::End => "end of input".into(),
        }
    }
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(src: &str) -> Result<Vec<Spanned>, DslError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        let (l0, c0) = (line, col);
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i < chars.len() && chars[i] == '.' {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text: String = chars[start..i].iter().collect();
            col += i - start;
            let v: f64 = text.parse().map_err(|_| DslError::Syntax {
                line: l0,
                col: c0,
                expected: vec!["number".into()],
                found: text.clone(),
            })?;
            if !v.is_finite() {
                return Err(DslError::Syntax {
                    line: l0,
                    col: c0,
                    expected: vec!["finite number".into()],
                    found: text,
                });
            }
            out.push(Spanned { tok: Tok::Num(v), line: l0, col: c0 });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - start;
            let s: String = chars[start..i].iter().collect();
            out.push(Spanned { tok: Tok::Ident(s), line: l0, col: c0 });
            continue;
        }
        if "+-*/^()".contains(c) {
            out.push(Spanned { tok: Tok::Sym(c), line: l0, col: c0 });
            i += 1;
            col += 1;
            continue;
        }
        return Err(DslError::Syntax {
            line: l0,
            col: c0,
            expected: vec!["expression".into()],
            found: format!("character {c:?}"),
        });
    }
    out.push(Spanned { tok: Tok::End, line, col });
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    depth: usize,
}

impl Parser {
    fn peek(&self) -> &Spanned {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &[&str]) -> DslError {
        let t = self.peek();
        DslError::Syntax {
            line: t.line,
            col: t.col,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: t.tok.describe(),
        }
    }

    fn enter(&mut self) -> Result<(), DslError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(self.error(&["shallower nesting"]));
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<Expr, DslError> {
        self.enter()?;
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().tok {
                Tok::Sym('+') => BinOp::Add,
                Tok::Sym('-') => BinOp::Sub,
                _ => break,
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        self.depth -= 1;
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, DslError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek().tok {
                Tok::Sym('*') => BinOp::Mul,
                Tok::Sym('/') => BinOp::Div,
                _ => break,
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, DslError> {
        if self.peek().tok == Tok::Sym('-') {
            self.bump();
            self.enter()?;
            let e = self.unary()?;
            self.depth -= 1;
            return Ok(Expr::Neg(Box::new(e)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, DslError> {
        let base = self.atom()?;
        if self.peek().tok == Tok::Sym('^') {
            self.bump();
            self.enter()?;
            let exp = self.unary()?;
            self.depth -= 1;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn expect_close(&mut self) -> Result<(), DslError> {
        if self.peek().tok == Tok::Sym(')') {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&["`)`", "operator"]))
        }
    }

    fn atom(&mut self) -> Result<Expr, DslError> {
        const ATOM: [&str; 5] = ["number", "variable", "function", "`(`", "`-`"];
        let t = self.peek().clone();
        match t.tok {
            Tok::Num(v) => {
                self.bump();
                Ok(Expr::Num(v))
            }
            Tok::Sym('(') => {
                self.bump();
                let e = self.expr()?;
                self.expect_close()?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.bump();
                if let Some(func) = Func::from_name(&name) {
                    if self.peek().tok != Tok::Sym('(') {
                        return Err(self.error(&["`(`"]));
                    }
                    self.bump();
                    let arg = self.expr()?;
                    self.expect_close()?;
                    Ok(Expr::Call(func, Box::new(arg)))
                } else if name == "pi" {
                    Ok(Expr::Num(std::f64::consts::PI))
                } else if is_variable_name(&name) {
                    Ok(Expr::Var(name))
                } else {
                    Err(DslError::UnknownIdentifier {
                        name,
                        line: t.line,
                        col: t.col,
                    })
                }
            }
            _ => Err(self.error(&ATOM)),
        }
    }
}

pub fn parse_expr(src: &str) -> Result<Expr, DslError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0, depth: 0 };
    let e = p.expr()?;
    if p.peek().tok != Tok::End {
        return Err(p.error(&["operator", "end of input"]));
    }
    Ok(e)
}

/// Result of interpreting an expression; `non_finite` flags a NaN or
/// infinite value (division by zero, `sqrt` of a negative number, ...).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub non_finite: bool,
}

pub fn eval_expr(e: &Expr, bindings: &HashMap<String, f64>) -> Result<Evaluation, DslError> {
    fn go(e: &Expr, b: &HashMap<String, f64>) -> Result<f64, DslError> {
        Ok(match e {
            Expr::Num(v) => *v,
            Expr::Var(name) => *b
                .get(name)
                .ok_or_else(|| DslError::UnboundVariable { name: name.clone() })?,
            Expr::Neg(a) => -go(a, b)?,
            Expr::Bin(op, x, y) => op.apply(go(x, b)?, go(y, b)?),
            Expr::Call(f, x) => f.apply(go(x, b)?),
        })
    }
    let value = go(e, bindings)?;
    Ok(Evaluation {
        value,
        non_finite: !value.is_finite(),
    })
}

type Compiled = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// An expression compiled against a fixed variable list; evaluation
/// performs the same floating-point operations as [`eval_expr`].
#[derive(Clone)]
pub struct CompiledExpr {
    source: Expr,
    f: Compiled,
}

impl fmt::Debug for CompiledExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CompiledExpr({})", self.source)
    }
}

impl CompiledExpr {
    pub fn new(e: &Expr, vars: &[&str]) -> Result<Self, DslError> {
        fn build(e: &Expr, vars: &[&str]) -> Result<Compiled, DslError> {
            Ok(match e {
                Expr::Num(v) => {
                    let v = *v;
                    Arc::new(move |_| v)
                }
                Expr::Var(name) => {
                    let i = vars
                        .iter()
                        .position(|v| v == name)
                        .ok_or_else(|| DslError::UnboundVariable { name: name.clone() })?;
                    Arc::new(move |x: &[f64]| x[i])
                }
                Expr::Neg(a) => {
                    let a = build(a, vars)?;
                    Arc::new(move |x| -a(x))
                }
                Expr::Call(func, a) => {
                    let (func, a) = (*func, build(a, vars)?);
                    Arc::new(move |x| func.apply(a(x)))
                }
                Expr::Bin(op, l, r) => {
                    let (op, l, r) = (*op, build(l, vars)?, build(r, vars)?);
                    match op {
                        BinOp::Add => Arc::new(move |x| l(x) + r(x)),
                        BinOp::Sub => Arc::new(move |x| l(x) - r(x)),
                        BinOp::Mul => Arc::new(move |x| l(x) * r(x)),
                        BinOp::Div => Arc::new(move |x| l(x) / r(x)),
                        BinOp::Pow => Arc::new(move |x| pow(l(x), r(x))),
                    }
                }
            })
        }
        Ok(Self {
            source: e.clone(),
            f: build(e, vars)?,
        })
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }

    pub fn source(&self) -> &Expr {
        &self.source
    }
}
