//! A small total expression language for defining targets on the command
//! line: one variable `x`, decimal constants, `+ − * / ^`, parentheses and
//! a fixed set of single-argument functions. Every failure is a positioned
//! error; evaluation guards division by zero, square roots of negatives
//! and ill-defined powers.
//!
//! Grammar (EBNF):
//!
//! ```text
//! expr    = term { ("+" | "-") term } ;
//! term    = factor { ("*" | "/") factor } ;
//! factor  = "-" factor | power ;
//! power   = atom [ "^" factor ] ;            (right-associative)
//! atom    = number | "x" | name "(" expr ")" | "(" expr ")" ;
//! name    = "abs" | "sqrt" | "sin" | "cos" | "exp_neg_sq" | "arctan" | "relu" ;
//! ```
//!
//! `^` binds tighter than unary minus, so `-x^2 = -(x^2)`. The only
//! exponential on offer is `exp_neg_sq(u) = exp(-u²)`, which cannot leave
//! the weighted space by growth.

use crate::target::YTarget;
use crate::weighted_norm::{estimate_alpha_with, AlphaSchedule, NormError, Side};
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ExprError {
    #[error("lexical error at position {pos}: unexpected character {found:?}")]
    Lexical { pos: usize, found: char },
    #[error("syntax error at position {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("unknown function `{name}` at position {pos}")]
    UnknownFunction { pos: usize, name: String },
    #[error("domain error at x = {x}: {op} of {value}")]
    Domain { op: &'static str, value: f64, x: f64 },
    #[error("target not evaluable at large |x|: f({x}) is not finite")]
    ProbeFailure { x: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Abs,
    Sqrt,
    Sin,
    Cos,
    ExpNegSq,
    Arctan,
    Relu,
}

impl UnaryOp {
    fn name(&self) -> &'static str {
        match self {
            UnaryOp::Neg => "-",
            UnaryOp::Abs => "abs",
            UnaryOp::Sqrt => "sqrt",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::ExpNegSq => "exp_neg_sq",
            UnaryOp::Arctan => "arctan",
            UnaryOp::Relu => "relu",
        }
    }

    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "abs" => UnaryOp::Abs,
            "sqrt" => UnaryOp::Sqrt,
            "sin" => UnaryOp::Sin,
            "cos" => UnaryOp::Cos,
            "exp_neg_sq" => UnaryOp::ExpNegSq,
            "arctan" => UnaryOp::Arctan,
            "relu" => UnaryOp::Relu,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(&self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprAst {
    Constant(f64),
    Variable,
    Unary(UnaryOp, Box<ExprAst>),
    Binary(BinOp, Box<ExprAst>, Box<ExprAst>),
}

// ---------------------------------------------------------------------
// Tokenizer
// ---------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

#[derive(Debug, Clone, PartialEq)]
struct Spanned {
    token: Token,
    pos: usize,
}

fn tokenize(src: &str) -> Result<Vec<Spanned>, ExprError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let pos = i;
        match c {
            ' ' | '\t' | '\n' | '\r' => {
                i += 1;
            }
            '+' | '-' | '*' | '/' | '^' | '(' | ')' => {
                let token = match c {
                    '+' => Token::Plus,
                    '-' => Token::Minus,
                    '*' => Token::Star,
                    '/' => Token::Slash,
                    '^' => Token::Caret,
                    '(' => Token::LParen,
                    _ => Token::RParen,
                };
                out.push(Spanned { token, pos });
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len() && matches!(bytes[i] as char, '0'..='9' | '.') {
                    i += 1;
                }
                // optional exponent part: e / E with optional sign
                if i < bytes.len() && matches!(bytes[i] as char, 'e' | 'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && matches!(bytes[j] as char, '+' | '-') {
                        j += 1;
                    }
                    if j < bytes.len() && (bytes[j] as char).is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text = &src[start..i];
                let value: f64 = text.parse().map_err(|_| ExprError::Syntax {
                    pos: start,
                    message: format!("malformed number `{text}`"),
                })?;
                out.push(Spanned { token: Token::Number(value), pos });
            }
            'a'..='z' | 'A'..='Z' | '_' => {
                let start = i;
                while i < bytes.len()
                    && matches!(bytes[i] as char, 'a'..='z' | 'A'..='Z' | '0'..='9' | '_')
                {
                    i += 1;
                }
                out.push(Spanned { token: Token::Ident(src[start..i].to_string()), pos });
            }
            _ => return Err(ExprError::Lexical { pos, found: c }),
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------
// Parser (precedence climbing)
// ---------------------------------------------------------------------

struct Parser<'a> {
    tokens: &'a [Spanned],
    cursor: usize,
    src_len: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.cursor).map(|s| &s.token)
    }

    fn pos(&self) -> usize {
        self.tokens.get(self.cursor).map_or(self.src_len, |s| s.pos)
    }

    fn bump(&mut self) -> Option<&Spanned> {
        let s = self.tokens.get(self.cursor);
        if s.is_some() {
            self.cursor += 1;
        }
        s
    }

    fn expect_rparen(&mut self) -> Result<(), ExprError> {
        match self.peek() {
            Some(Token::RParen) => {
                self.cursor += 1;
                Ok(())
            }
            _ => Err(ExprError::Syntax { pos: self.pos(), message: "expected `)`".into() }),
        }
    }

    fn parse_expr(&mut self) -> Result<ExprAst, ExprError> {
        let mut lhs = self.parse_term()?;
        loop {
            let op = match self.peek() {
                Some(Token::Plus) => BinOp::Add,
                Some(Token::Minus) => BinOp::Sub,
                _ => break,
            };
            self.cursor += 1;
            let rhs = self.parse_term()?;
            lhs = ExprAst::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_term(&mut self) -> Result<ExprAst, ExprError> {
        let mut lhs = self.parse_factor()?;
        loop {
            let op = match self.peek() {
                Some(Token::Star) => BinOp::Mul,
                Some(Token::Slash) => BinOp::Div,
                _ => break,
            };
            self.cursor += 1;
            let rhs = self.parse_factor()?;
            lhs = ExprAst::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    // `^` binds tighter than unary minus: -x^2 parses as -(x^2).
    fn parse_factor(&mut self) -> Result<ExprAst, ExprError> {
        if matches!(self.peek(), Some(Token::Minus)) {
            self.cursor += 1;
            let inner = self.parse_factor()?;
            return Ok(ExprAst::Unary(UnaryOp::Neg, Box::new(inner)));
        }
        self.parse_power()
    }

    fn parse_power(&mut self) -> Result<ExprAst, ExprError> {
        let base = self.parse_atom()?;
        if matches!(self.peek(), Some(Token::Caret)) {
            self.cursor += 1;
            // right-associative; allow a signed exponent
            let exponent = self.parse_factor()?;
            return Ok(ExprAst::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn parse_atom(&mut self) -> Result<ExprAst, ExprError> {
        let pos = self.pos();
        let spanned = self
            .bump()
            .ok_or_else(|| ExprError::Syntax { pos, message: "unexpected end of input".into() })?
            .clone();
        match spanned.token {
            Token::Number(v) => Ok(ExprAst::Constant(v)),
            Token::Ident(name) if name == "x" => Ok(ExprAst::Variable),
            Token::Ident(name) => match UnaryOp::from_name(&name) {
                Some(op) => {
                    match self.peek() {
                        Some(Token::LParen) => self.cursor += 1,
                        _ => {
                            return Err(ExprError::Syntax {
                                pos: self.pos(),
                                message: format!("expected `(` after function `{name}`"),
                            })
                        }
                    }
                    let arg = self.parse_expr()?;
                    self.expect_rparen()?;
                    Ok(ExprAst::Unary(op, Box::new(arg)))
                }
                None => Err(ExprError::UnknownFunction { pos: spanned.pos, name }),
            },
            Token::LParen => {
                let inner = self.parse_expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            other => Err(ExprError::Syntax {
                pos: spanned.pos,
                message: format!("unexpected token `{other:?}`"),
            }),
        }
    }
}

/// Parses a source string to an AST; whitespace-insensitive, deterministic.
pub fn parse_expr(src: &str) -> Result<ExprAst, ExprError> {
    let tokens = tokenize(src)?;
    if tokens.is_empty() {
        return Err(ExprError::Syntax { pos: 0, message: "empty expression".into() });
    }
    let mut parser = Parser { tokens: &tokens, cursor: 0, src_len: src.len() };
    let ast = parser.parse_expr()?;
    if parser.cursor != tokens.len() {
        return Err(ExprError::Syntax {
            pos: parser.pos(),
            message: "trailing input after expression".into(),
        });
    }
    Ok(ast)
}

// ---------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------

impl ExprAst {
    /// Recursive evaluation at `x`. Total: every ill-defined operation
    /// (division by zero, sqrt of a negative, `0^negative`, a negative base
    /// with fractional exponent, overflow) is a positioned domain error.
    pub fn eval(&self, x: f64) -> Result<f64, ExprError> {
        let v = match self {
            ExprAst::Constant(c) => *c,
            ExprAst::Variable => x,
            ExprAst::Unary(op, child) => {
                let u = child.eval(x)?;
                match op {
                    UnaryOp::Neg => -u,
                    UnaryOp::Abs => u.abs(),
                    UnaryOp::Sqrt => {
                        if u < 0.0 {
                            return Err(ExprError::Domain { op: "sqrt", value: u, x });
                        }
                        u.sqrt()
                    }
                    UnaryOp::Sin => u.sin(),
                    UnaryOp::Cos => u.cos(),
                    UnaryOp::ExpNegSq => (-u * u).exp(),
                    UnaryOp::Arctan => u.atan(),
                    UnaryOp::Relu => u.max(0.0),
                }
            }
            ExprAst::Binary(op, left, right) => {
                let (a, b) = (left.eval(x)?, right.eval(x)?);
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(ExprError::Domain { op: "division by", value: b, x });
                        }
                        a / b
                    }
                    BinOp::Pow => {
                        if a == 0.0 && b < 0.0 {
                            return Err(ExprError::Domain { op: "0^", value: b, x });
                        }
                        if a < 0.0 && b.fract() != 0.0 {
                            return Err(ExprError::Domain {
                                op: "fractional power of negative base",
                                value: a,
                                x,
                            });
                        }
                        a.powf(b)
                    }
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(ExprError::Domain { op: "non-finite result", value: v, x })
        }
    }

    /// Pretty-prints with full parenthesization of compound operands, so
    /// `parse(print(ast))` evaluates identically.
    pub fn print(&self) -> String {
        match self {
            ExprAst::Constant(c) => {
                if *c < 0.0 {
                    format!("({c})")
                } else {
                    format!("{c}")
                }
            }
            ExprAst::Variable => "x".to_string(),
            ExprAst::Unary(UnaryOp::Neg, child) => format!("(-{})", child.print_atom()),
            ExprAst::Unary(op, child) => format!("{}({})", op.name(), child.print()),
            ExprAst::Binary(op, l, r) => {
                format!("{} {} {}", l.print_atom(), op.symbol(), r.print_atom())
            }
        }
    }

    fn print_atom(&self) -> String {
        match self {
            ExprAst::Constant(_) | ExprAst::Variable | ExprAst::Unary(..) => self.print(),
            ExprAst::Binary(..) => format!("({})", self.print()),
        }
    }
}

/// Wraps an AST as a target. Runs a finiteness probe at `±2^20`; if the
/// asymptotics are not declared they are estimated lazily at use time (the
/// estimator reports targets outside the space). Evaluation errors inside
/// the wrapped closure surface as NaN, which the norm routines flag.
pub fn to_target(
    ast: ExprAst,
    alpha_plus: Option<f64>,
    alpha_minus: Option<f64>,
) -> Result<YTarget, ExprError> {
    let label = ast.print();
    for sign in [1.0, -1.0] {
        let x = sign * (2.0f64).powi(20);
        match ast.eval(x) {
            Ok(v) if v.is_finite() => {}
            _ => return Err(ExprError::ProbeFailure { x }),
        }
    }
    let shared = Arc::new(ast);
    let mut target = YTarget::new(label, move |x: f64| {
        shared.eval(x).unwrap_or(f64::NAN)
    });
    if let Some(a) = alpha_plus {
        target = target.with_alpha_plus(a);
    }
    if let Some(a) = alpha_minus {
        target = target.with_alpha_minus(a);
    }
    Ok(target)
}

/// [`to_target`] plus eager asymptotics resolution: declared values are
/// kept, missing ones estimated now so the result is usable at `±∞`.
pub fn to_target_resolved(
    ast: ExprAst,
    alpha_plus: Option<f64>,
    alpha_minus: Option<f64>,
    schedule: &AlphaSchedule,
) -> Result<YTarget, TargetError> {
    let target = to_target(ast, alpha_plus, alpha_minus)?;
    let plus = match target.declared_alpha_plus() {
        Some(a) => a,
        None => estimate_alpha_with(&target, Side::Plus, schedule)?,
    };
    let minus = match target.declared_alpha_minus() {
        Some(a) => a,
        None => estimate_alpha_with(&target, Side::Minus, schedule)?,
    };
    Ok(target.with_alphas(plus, minus))
}

#[derive(Debug, Error)]
pub enum TargetError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Norm(#[from] NormError),
}

impl fmt::Display for ExprAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.print())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_step_expression() {
        let ast = parse_expr("relu(x) - relu(x-1)").unwrap();
        assert_eq!(ast.eval(0.5).unwrap(), 0.5);
        assert_eq!(ast.eval(2.0).unwrap(), 1.0);
        assert_eq!(ast.eval(-1.0).unwrap(), 0.0);
    }

    #[test]
    fn precedence_basics() {
        assert_eq!(parse_expr("1+2*3").unwrap().eval(0.0).unwrap(), 7.0);
        assert_eq!(parse_expr("sqrt(1+x^2)").unwrap().eval(0.0).unwrap(), 1.0);
        assert_eq!(parse_expr("2^3^2").unwrap().eval(0.0).unwrap(), 512.0);
        assert_eq!(parse_expr("-x^2").unwrap().eval(3.0).unwrap(), -9.0);
        assert_eq!(parse_expr("2^-2").unwrap().eval(0.0).unwrap(), 0.25);
        assert_eq!(parse_expr("2*-3").unwrap().eval(0.0).unwrap(), -6.0);
    }

    #[test]
    fn eval_examples() {
        assert_eq!(parse_expr("abs(x)").unwrap().eval(-3.0).unwrap(), 3.0);
        assert!(matches!(
            parse_expr("1/x").unwrap().eval(0.0),
            Err(ExprError::Domain { .. })
        ));
        let v = parse_expr("x*arctan(x)").unwrap().eval(1.0).unwrap();
        assert!((v - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
    }

    #[test]
    fn positioned_errors() {
        match parse_expr("1 + $") {
            Err(ExprError::Lexical { pos, found }) => {
                assert_eq!(pos, 4);
                assert_eq!(found, '$');
            }
            other => panic!("expected lexical error, got {other:?}"),
        }
        assert!(matches!(
            parse_expr("foo(x)"),
            Err(ExprError::UnknownFunction { pos: 0, .. })
        ));
        assert!(matches!(parse_expr("(1+2"), Err(ExprError::Syntax { .. })));
        assert!(matches!(parse_expr(""), Err(ExprError::Syntax { pos: 0, .. })));
        assert!(matches!(parse_expr("1 2"), Err(ExprError::Syntax { .. })));
    }

    #[test]
    fn printer_round_trip() {
        for src in [
            "relu(x) - relu(x-1)",
            "1+2*3^2",
            "-x^2 + sqrt(1+x^2)/(3 - cos(x))",
            "exp_neg_sq(x)*sin(x) - arctan(2*x)",
        ] {
            let ast = parse_expr(src).unwrap();
            let reparsed = parse_expr(&ast.print()).unwrap();
            for i in -50..=50 {
                let x = i as f64 * 0.173;
                match (ast.eval(x), reparsed.eval(x)) {
                    (Ok(a), Ok(b)) => assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0)),
                    (Err(_), Err(_)) => {}
                    other => panic!("round-trip mismatch at x={x}: {other:?}"),
                }
            }
        }
    }

    #[test]
    fn to_target_examples() {
        let t = to_target(parse_expr("x").unwrap(), None, None).unwrap();
        let plus = estimate_alpha_with(&t, Side::Plus, &AlphaSchedule::default()).unwrap();
        let minus = estimate_alpha_with(&t, Side::Minus, &AlphaSchedule::default()).unwrap();
        assert!((plus - 1.0).abs() <= 1e-6);
        assert!((minus + 1.0).abs() <= 1e-6);

        let t = to_target(parse_expr("sin(x)").unwrap(), None, None).unwrap();
        let plus = estimate_alpha_with(&t, Side::Plus, &AlphaSchedule::default()).unwrap();
        assert!(plus.abs() <= 1e-6);

        let quad = to_target(parse_expr("x*x").unwrap(), None, None).unwrap();
        assert!(matches!(
            estimate_alpha_with(&quad, Side::Plus, &AlphaSchedule::default()),
            Err(NormError::AlphaNonConvergence { .. })
        ));
    }
}
