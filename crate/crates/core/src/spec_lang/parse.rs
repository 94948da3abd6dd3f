//! Lexer and recursive-descent parser for the specification language.
//!
//! Precedence, loosest first: quantifiers, `->` (right associative), `\/`,
//! `/\`, `~`, relations (non-associative, chains desugar to conjunctions),
//! `+ -`, `* /`, unary minus, postfix `[..]` and `_0`.

use super::expr::{ArithOp, Quantifier, RelOp, SpecExpr};
use super::typecheck::{type_check, TypeError};
use super::types::{SpecType, TypedParam};
use super::value::parse_rational;
use super::Rational;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpecParseError {
    #[error("syntax error at {line}:{col}: {message}")]
    Syntax { line: usize, col: usize, message: String },
    #[error("unknown identifier `{name}` at {line}:{col}")]
    UnknownIdentifier { name: String, line: usize, col: usize },
    #[error("type errors: {}", .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "))]
    Type(Vec<TypeError>),
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(Rational),
    Ident(String),
    InitMark,
    LParen,
    RParen,
    LBrack,
    RBrack,
    Comma,
    Colon,
    Plus,
    Minus,
    Star,
    Slash,
    Rel(RelOp),
    And,
    Or,
    Not,
    Arrow,
    Quant(Quantifier),
    True,
    False,
    Eof,
}

#[derive(Clone, Copy, Debug)]
struct Pos {
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<(Tok, Pos)>, SpecParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, col, message: String| SpecParseError::Syntax { line, col, message };
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        let next = chars.get(i + 1).copied();
        let mut advance = 1;
        let tok = match c {
            '\n' => {
                line += 1;
                col = 1;
                i += 1;
                continue;
            }
            c if c.is_whitespace() => {
                i += 1;
                col += 1;
                continue;
            }
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '[' => Tok::LBrack,
            ']' => Tok::RBrack,
            ',' => Tok::Comma,
            ':' => Tok::Colon,
            '+' => Tok::Plus,
            '*' => Tok::Star,
            '~' | '¬' => Tok::Not,
            '∧' => Tok::And,
            '∨' => Tok::Or,
            '→' | '⇒' | '⟹' => Tok::Arrow,
            '≤' => Tok::Rel(RelOp::Le),
            '≥' => Tok::Rel(RelOp::Ge),
            '≠' => Tok::Rel(RelOp::Ne),
            '-' if next == Some('>') => {
                advance = 2;
                Tok::Arrow
            }
            '-' => Tok::Minus,
            '/' if next == Some('\\') => {
                advance = 2;
                Tok::And
            }
            '/' => Tok::Slash,
            '\\' if next == Some('/') => {
                advance = 2;
                Tok::Or
            }
            '<' if next == Some('=') => {
                advance = 2;
                Tok::Rel(RelOp::Le)
            }
            '<' if next == Some('>') => {
                advance = 2;
                Tok::Rel(RelOp::Ne)
            }
            '<' => Tok::Rel(RelOp::Lt),
            '>' if next == Some('=') => {
                advance = 2;
                Tok::Rel(RelOp::Ge)
            }
            '>' => Tok::Rel(RelOp::Gt),
            '=' => Tok::Rel(RelOp::Eq),
            '_' if next == Some('0')
                && !chars.get(i + 2).is_some_and(|c| c.is_alphanumeric() || *c == '_') =>
            {
                advance = 2;
                Tok::InitMark
            }
            c if c.is_ascii_digit() => {
                let start = i;
                let mut j = i;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                if j + 1 < chars.len() && chars[j] == '.' && chars[j + 1].is_ascii_digit() {
                    j += 1;
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                }
                let text: String = chars[start..j].iter().collect();
                advance = j - i;
                Tok::Num(parse_rational(&text).map_err(|e| err(line, col, e.to_string()))?)
            }
            c if c.is_alphabetic() => {
                let start = i;
                let mut j = i;
                while j < chars.len()
                    && (chars[j].is_alphanumeric() || chars[j] == '_' || chars[j] == '\'')
                {
                    j += 1;
                }
                let word: String = chars[start..j].iter().collect();
                advance = j - i;
                match word.as_str() {
                    "forall" => Tok::Quant(Quantifier::Forall),
                    "exists" => Tok::Quant(Quantifier::Exists),
                    "true" => Tok::True,
                    "false" => Tok::False,
                    _ => Tok::Ident(word),
                }
            }
            other => return Err(err(line, col, format!("unexpected character `{other}`"))),
        };
        out.push((tok, pos));
        i += advance;
        col += advance;
    }
    out.push((Tok::Eof, Pos { line, col }));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, Pos)>,
    idx: usize,
    scope: Vec<TypedParam>,
    env: &'a [TypedParam],
    allow_unknown: bool,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.idx].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.idx].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.idx].0.clone();
        if self.idx + 1 < self.toks.len() {
            self.idx += 1;
        }
        t
    }

    fn error(&self, message: impl Into<String>) -> SpecParseError {
        let p = self.pos();
        SpecParseError::Syntax { line: p.line, col: p.col, message: message.into() }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), SpecParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(format!("expected {what}, found {:?}", self.peek())))
        }
    }

    fn formula(&mut self) -> Result<SpecExpr, SpecParseError> {
        if let Tok::Quant(_) = self.peek() {
            return self.quantified();
        }
        let lhs = self.disjunction()?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            let rhs = self.formula()?;
            return Ok(SpecExpr::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn quantified(&mut self) -> Result<SpecExpr, SpecParseError> {
        let q = match self.bump() {
            Tok::Quant(q) => q,
            _ => unreachable!("caller checked for a quantifier"),
        };
        let mut params = Vec::new();
        while *self.peek() == Tok::LParen {
            self.bump();
            let name = match self.bump() {
                Tok::Ident(n) => n,
                other => return Err(self.error(format!("expected bound name, found {other:?}"))),
            };
            self.expect(Tok::Colon, "`:`")?;
            let ty = self.ty()?;
            self.expect(Tok::RParen, "`)`")?;
            params.push(TypedParam::new(name, ty));
        }
        if params.is_empty() {
            return Err(self.error("expected `(name:type)` after quantifier"));
        }
        self.expect(Tok::Comma, "`,` after quantifier parameters")?;
        let depth = self.scope.len();
        self.scope.extend(params.iter().cloned());
        let body = self.formula();
        self.scope.truncate(depth);
        let mut body = body?;
        for p in params.into_iter().rev() {
            body = SpecExpr::Quant(q, p, Box::new(body));
        }
        Ok(body)
    }

    fn ty(&mut self) -> Result<SpecType, SpecParseError> {
        match self.bump() {
            Tok::LParen => {
                let t = self.ty()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(t)
            }
            Tok::Ident(w) => match w.as_str() {
                "bool" => Ok(SpecType::Bool),
                "nat" => Ok(SpecType::Nat),
                "int" | "Z" => Ok(SpecType::Int),
                "float" => Ok(SpecType::Float),
                "array" => Ok(SpecType::array(self.ty()?)),
                other => Err(self.error(format!("unknown type `{other}`"))),
            },
            other => Err(self.error(format!("expected a type, found {other:?}"))),
        }
    }

    fn disjunction(&mut self) -> Result<SpecExpr, SpecParseError> {
        let mut items = vec![self.conjunction()?];
        while *self.peek() == Tok::Or {
            self.bump();
            items.push(self.conjunction()?);
        }
        Ok(if items.len() == 1 { items.pop().unwrap() } else { SpecExpr::Or(items) })
    }

    fn conjunction(&mut self) -> Result<SpecExpr, SpecParseError> {
        let mut items = Vec::new();
        loop {
            let (e, chained) = self.negation()?;
            match e {
                SpecExpr::And(parts) if chained => items.extend(parts),
                other => items.push(other),
            }
            if *self.peek() != Tok::And {
                break;
            }
            self.bump();
        }
        Ok(if items.len() == 1 { items.pop().unwrap() } else { SpecExpr::And(items) })
    }

    fn negation(&mut self) -> Result<(SpecExpr, bool), SpecParseError> {
        if *self.peek() == Tok::Not {
            self.bump();
            let (inner, _) = self.negation()?;
            return Ok((SpecExpr::not(inner), false));
        }
        self.relation()
    }

    fn relation(&mut self) -> Result<(SpecExpr, bool), SpecParseError> {
        let first = self.sum()?;
        let mut operands = vec![first];
        let mut ops = Vec::new();
        while let Tok::Rel(op) = *self.peek() {
            self.bump();
            ops.push(op);
            operands.push(self.sum()?);
        }
        match ops.len() {
            0 => Ok((operands.pop().unwrap(), false)),
            1 => {
                let b = operands.pop().unwrap();
                let a = operands.pop().unwrap();
                Ok((SpecExpr::rel(ops[0], a, b), false))
            }
            _ => {
                let parts = ops
                    .iter()
                    .enumerate()
                    .map(|(k, op)| SpecExpr::rel(*op, operands[k].clone(), operands[k + 1].clone()))
                    .collect();
                Ok((SpecExpr::And(parts), true))
            }
        }
    }

    fn sum(&mut self) -> Result<SpecExpr, SpecParseError> {
        let mut lhs = self.product()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => ArithOp::Add,
                Tok::Minus => ArithOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.product()?;
            lhs = SpecExpr::arith(op, lhs, rhs);
        }
    }

    fn product(&mut self) -> Result<SpecExpr, SpecParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => ArithOp::Mul,
                Tok::Slash => ArithOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = SpecExpr::arith(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<SpecExpr, SpecParseError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(SpecExpr::Neg(Box::new(self.unary()?)));
        }
        self.postfix()
    }

    fn postfix(&mut self) -> Result<SpecExpr, SpecParseError> {
        let mut e = self.atom()?;
        loop {
            match self.peek() {
                Tok::LBrack => {
                    self.bump();
                    let i = self.formula()?;
                    if *self.peek() == Tok::Colon {
                        self.bump();
                        let j = self.formula()?;
                        self.expect(Tok::RBrack, "`]`")?;
                        e = SpecExpr::Slice(Box::new(e), Box::new(i), Box::new(j));
                    } else {
                        self.expect(Tok::RBrack, "`]`")?;
                        e = SpecExpr::select(e, i);
                    }
                }
                Tok::InitMark => {
                    self.bump();
                    e = SpecExpr::init(e);
                }
                _ => return Ok(e),
            }
        }
    }

    fn resolve(&self, name: &str, pos: Pos) -> Result<SpecExpr, SpecParseError> {
        let known = self.scope.iter().rev().any(|p| p.name == name)
            || self.env.iter().any(|p| p.name == name);
        if known || self.allow_unknown {
            return Ok(SpecExpr::name(name));
        }
        if let Some(stem) = name.strip_suffix("_0") {
            if !stem.is_empty() {
                return Ok(SpecExpr::init(self.resolve(stem, pos)?));
            }
        }
        Err(SpecParseError::UnknownIdentifier { name: name.to_string(), line: pos.line, col: pos.col })
    }

    fn atom(&mut self) -> Result<SpecExpr, SpecParseError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Num(r) => {
                self.bump();
                Ok(SpecExpr::Num(r))
            }
            Tok::True => {
                self.bump();
                Ok(SpecExpr::Bool(true))
            }
            Tok::False => {
                self.bump();
                Ok(SpecExpr::Bool(false))
            }
            Tok::Quant(_) => self.quantified(),
            Tok::LParen => {
                self.bump();
                let e = self.formula()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.bump();
                if *self.peek() == Tok::LParen {
                    self.bump();
                    let mut args = Vec::new();
                    if *self.peek() != Tok::RParen {
                        loop {
                            args.push(self.formula()?);
                            if *self.peek() == Tok::Comma {
                                self.bump();
                            } else {
                                break;
                            }
                        }
                    }
                    self.expect(Tok::RParen, "`)` closing the argument list")?;
                    return self.application(name, args, pos);
                }
                if self.allow_unknown {
                    if let Some(stem) = name.strip_suffix("_0") {
                        if !stem.is_empty() {
                            return Ok(SpecExpr::init(SpecExpr::name(stem)));
                        }
                    }
                }
                self.resolve(&name, pos)
            }
            other => Err(self.error(format!("unexpected token {other:?}"))),
        }
    }

    fn application(
        &self,
        name: String,
        mut args: Vec<SpecExpr>,
        pos: Pos,
    ) -> Result<SpecExpr, SpecParseError> {
        let arity = |n: usize| -> Result<(), SpecParseError> {
            if args.len() == n {
                Ok(())
            } else {
                Err(SpecParseError::Syntax {
                    line: pos.line,
                    col: pos.col,
                    message: format!("`{name}` takes {n} argument(s), got {}", args.len()),
                })
            }
        };
        match name.as_str() {
            "len" => {
                arity(1)?;
                Ok(SpecExpr::Len(Box::new(args.pop().unwrap())))
            }
            "store" => {
                arity(3)?;
                let v = args.pop().unwrap();
                let i = args.pop().unwrap();
                let a = args.pop().unwrap();
                Ok(SpecExpr::Store(Box::new(a), Box::new(i), Box::new(v)))
            }
            _ => Ok(SpecExpr::App(name, args)),
        }
    }
}

fn run_parser(
    text: &str,
    env: &[TypedParam],
    allow_unknown: bool,
) -> Result<SpecExpr, SpecParseError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, idx: 0, scope: Vec::new(), env, allow_unknown };
    let e = p.formula()?;
    if *p.peek() != Tok::Eof {
        return Err(p.error(format!("unexpected trailing token {:?}", p.peek())));
    }
    Ok(e)
}

/// Parses and type-checks a formula or term against `env`.
pub fn parse_spec_expr(text: &str, env: &[TypedParam]) -> Result<SpecExpr, SpecParseError> {
    let e = run_parser(text, env, false)?;
    type_check(&e, env).map_err(SpecParseError::Type)?;
    Ok(e)
}

/// Parses without name resolution or type checking; unknown names are taken
/// as variables or constants by their case.
pub fn parse_spec_expr_untyped(text: &str) -> Result<SpecExpr, SpecParseError> {
    run_parser(text, &[], true)
}

/// Parses a type such as `float` or `array nat`.
pub fn parse_spec_type(text: &str) -> Result<SpecType, SpecParseError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, idx: 0, scope: Vec::new(), env: &[], allow_unknown: true };
    let t = p.ty()?;
    if *p.peek() != Tok::Eof {
        return Err(p.error("unexpected text after type"));
    }
    Ok(t)
}

/// Parses a parameter list `(x:float) (y:float)`.
pub fn parse_params(text: &str) -> Result<Vec<TypedParam>, SpecParseError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, idx: 0, scope: Vec::new(), env: &[], allow_unknown: true };
    let mut out = Vec::new();
    while *p.peek() != Tok::Eof {
        p.expect(Tok::LParen, "`(`")?;
        let name = match p.bump() {
            Tok::Ident(n) => n,
            other => return Err(p.error(format!("expected parameter name, found {other:?}"))),
        };
        p.expect(Tok::Colon, "`:`")?;
        let ty = p.ty()?;
        p.expect(Tok::RParen, "`)`")?;
        out.push(TypedParam::new(name, ty));
        if *p.peek() == Tok::Comma {
            p.bump();
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec_lang::render_spec_expr;

    fn env() -> Vec<TypedParam> {
        vec![
            TypedParam::new("N", SpecType::Float),
            TypedParam::new("e", SpecType::Float),
            TypedParam::new("x", SpecType::Float),
            TypedParam::new("y", SpecType::Float),
            TypedParam::new("a", SpecType::array(SpecType::Int)),
        ]
    }

    #[test]
    fn chained_relation_desugars_and_flattens() {
        let e = parse_spec_expr("x*x <= N < y*y /\\ y <= x+e", &env()).unwrap();
        match &e {
            SpecExpr::And(items) => assert_eq!(items.len(), 3),
            other => panic!("expected conjunction, got {other:?}"),
        }
        assert_eq!(render_spec_expr(&e), "x*x <= N /\\ N < y*y /\\ y <= x+e");
    }

    #[test]
    fn conjunction_of_two_relations() {
        let e = parse_spec_expr("x*x <= N /\\ N < y*y", &env()).unwrap();
        let SpecExpr::And(items) = e else { panic!("not a conjunction") };
        assert!(items.iter().all(|i| matches!(i, SpecExpr::Rel(..))));
    }

    #[test]
    fn literal_true() {
        assert_eq!(parse_spec_expr("true", &[]).unwrap(), SpecExpr::Bool(true));
    }

    #[test]
    fn quantifier_over_selects() {
        let text = "forall (i:nat), a[i] <= a[i+1]";
        let e = parse_spec_expr(text, &env()).unwrap();
        let SpecExpr::Quant(Quantifier::Forall, p, body) = &e else { panic!("no quantifier") };
        assert_eq!(p.name, "i");
        assert!(matches!(&**body, SpecExpr::Rel(RelOp::Le, a, b)
            if matches!(&**a, SpecExpr::Select(..)) && matches!(&**b, SpecExpr::Select(..))));
        assert_eq!(parse_spec_expr(&render_spec_expr(&e), &env()).unwrap(), e);
    }

    #[test]
    fn init_markers() {
        let e = parse_spec_expr("x = x_0", &env()).unwrap();
        assert_eq!(e, SpecExpr::rel(RelOp::Eq, SpecExpr::name("x"), SpecExpr::init_of("x")));
        let e = parse_spec_expr("y-x < (y-x)_0", &env()).unwrap();
        let SpecExpr::Rel(_, _, rhs) = &e else { panic!() };
        assert!(matches!(&**rhs, SpecExpr::Init(_)));
    }

    #[test]
    fn errors_carry_positions_and_names() {
        match parse_spec_expr("x +* y", &env()) {
            Err(SpecParseError::Syntax { line: 1, col: 4, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        match parse_spec_expr("x < zz", &env()) {
            Err(SpecParseError::UnknownIdentifier { name, .. }) => assert_eq!(name, "zz"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_spec_expr("true /\\ 1", &env()), Err(SpecParseError::Type(_))));
    }

    #[test]
    fn relations_are_not_associative_through_parens() {
        let e = parse_spec_expr("(x < y) = true", &env()).unwrap();
        assert!(matches!(e, SpecExpr::Rel(RelOp::Eq, _, _)));
    }

    #[test]
    fn params_and_types() {
        let ps = parse_params("(N:float) (k:nat) (a:array Z)").unwrap();
        assert_eq!(ps.len(), 3);
        assert!(ps[0].is_constant());
        assert_eq!(ps[2].ty, SpecType::array(SpecType::Int));
    }
}
