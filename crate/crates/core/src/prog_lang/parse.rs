//! Parser for the indentation-structured program language.

use crate::spec_lang::{parse_rational, parse_spec_type, ArithOp, Rational, SpecType};

use super::ast::{CmpOp, ProgExpr, Statement, Target};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("syntax error at {line}:{col}: {message}")]
pub struct ProgParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(Rational),
    Ident(String),
    And,
    Or,
    Not,
    True,
    False,
    Cmp(CmpOp),
    Arith(ArithOp),
    LParen,
    RParen,
    LBrack,
    RBrack,
    Colon,
    Comma,
    Assign,
}

#[derive(Clone, Debug)]
struct Line {
    number: usize,
    indent: usize,
    toks: Vec<(Tok, usize)>,
}

fn err(line: usize, col: usize, message: impl Into<String>) -> ProgParseError {
    ProgParseError { line, col, message: message.into() }
}

fn lex_line(text: &str, number: usize, offset: usize) -> Result<Vec<(Tok, usize)>, ProgParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = offset + i + 1;
        let next = chars.get(i + 1).copied();
        let two = |t: Tok| (t, 2usize);
        let (tok, len) = match c {
            c if c.is_whitespace() => {
                i += 1;
                continue;
            }
            '(' => (Tok::LParen, 1),
            ')' => (Tok::RParen, 1),
            '[' => (Tok::LBrack, 1),
            ']' => (Tok::RBrack, 1),
            ':' => (Tok::Colon, 1),
            ',' => (Tok::Comma, 1),
            '+' => (Tok::Arith(ArithOp::Add), 1),
            '-' => (Tok::Arith(ArithOp::Sub), 1),
            '*' | '·' => (Tok::Arith(ArithOp::Mul), 1),
            '/' => (Tok::Arith(ArithOp::Div), 1),
            '=' if next == Some('=') => two(Tok::Cmp(CmpOp::Eq)),
            '=' => (Tok::Assign, 1),
            '!' if next == Some('=') => two(Tok::Cmp(CmpOp::Ne)),
            '<' if next == Some('=') => two(Tok::Cmp(CmpOp::Le)),
            '>' if next == Some('=') => two(Tok::Cmp(CmpOp::Ge)),
            '<' => (Tok::Cmp(CmpOp::Lt), 1),
            '>' => (Tok::Cmp(CmpOp::Gt), 1),
            c if c.is_ascii_digit() => {
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
                let text: String = chars[i..j].iter().collect();
                let r = parse_rational(&text).map_err(|e| err(number, col, e.to_string()))?;
                (Tok::Num(r), j - i)
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut j = i;
                while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                let word: String = chars[i..j].iter().collect();
                let tok = match word.as_str() {
                    "and" => Tok::And,
                    "or" => Tok::Or,
                    "not" => Tok::Not,
                    "true" | "True" => Tok::True,
                    "false" | "False" => Tok::False,
                    _ => Tok::Ident(word),
                };
                (tok, j - i)
            }
            other => return Err(err(number, col, format!("unexpected character `{other}`"))),
        };
        out.push((tok, col));
        i += len;
    }
    Ok(out)
}

fn strip_comment(line: &str) -> &str {
    let cut = [line.find('#'), line.find("//")].into_iter().flatten().min();
    match cut {
        Some(k) => &line[..k],
        None => line,
    }
}

fn split_lines(text: &str) -> Result<Vec<Line>, ProgParseError> {
    let mut out = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let number = k + 1;
        let expanded = raw.replace('\t', "    ");
        let content = strip_comment(&expanded);
        if content.trim().is_empty() {
            continue;
        }
        let indent = content.len() - content.trim_start().len();
        let toks = lex_line(content.trim_start(), number, indent)?;
        out.push(Line { number, indent, toks });
    }
    Ok(out)
}

struct ExprParser<'a> {
    toks: &'a [(Tok, usize)],
    idx: usize,
    line: usize,
    end_col: usize,
}

impl ExprParser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.idx).map(|(t, _)| t)
    }

    fn col(&self) -> usize {
        self.toks.get(self.idx).map(|(_, c)| *c).unwrap_or(self.end_col)
    }

    fn error(&self, message: impl Into<String>) -> ProgParseError {
        err(self.line, self.col(), message)
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.idx += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ProgParseError> {
        if self.eat(&tok) {
            Ok(())
        } else {
            Err(self.error(format!("expected {what}")))
        }
    }

    fn expr(&mut self) -> Result<ProgExpr, ProgParseError> {
        let mut lhs = self.conj()?;
        while self.eat(&Tok::Or) {
            lhs = ProgExpr::Or(Box::new(lhs), Box::new(self.conj()?));
        }
        Ok(lhs)
    }

    fn conj(&mut self) -> Result<ProgExpr, ProgParseError> {
        let mut lhs = self.neg()?;
        while self.eat(&Tok::And) {
            lhs = ProgExpr::And(Box::new(lhs), Box::new(self.neg()?));
        }
        Ok(lhs)
    }

    fn neg(&mut self) -> Result<ProgExpr, ProgParseError> {
        if self.eat(&Tok::Not) {
            return Ok(ProgExpr::Not(Box::new(self.neg()?)));
        }
        self.comparison()
    }

    fn comparison(&mut self) -> Result<ProgExpr, ProgParseError> {
        let lhs = self.sum()?;
        if let Some(Tok::Cmp(op)) = self.peek().cloned() {
            self.idx += 1;
            let rhs = self.sum()?;
            if let Some(Tok::Cmp(_)) = self.peek() {
                return Err(self.error("comparisons do not chain"));
            }
            return Ok(ProgExpr::cmp(op, lhs, rhs));
        }
        Ok(lhs)
    }

    fn sum(&mut self) -> Result<ProgExpr, ProgParseError> {
        let mut lhs = self.product()?;
        while let Some(Tok::Arith(op @ (ArithOp::Add | ArithOp::Sub))) = self.peek().cloned() {
            self.idx += 1;
            lhs = ProgExpr::arith(op, lhs, self.product()?);
        }
        Ok(lhs)
    }

    fn product(&mut self) -> Result<ProgExpr, ProgParseError> {
        let mut lhs = self.atom()?;
        while let Some(Tok::Arith(op @ (ArithOp::Mul | ArithOp::Div))) = self.peek().cloned() {
            self.idx += 1;
            lhs = ProgExpr::arith(op, lhs, self.atom()?);
        }
        Ok(lhs)
    }

    fn atom(&mut self) -> Result<ProgExpr, ProgParseError> {
        let tok = self.peek().cloned().ok_or_else(|| self.error("unexpected end of expression"))?;
        self.idx += 1;
        match tok {
            Tok::Num(r) => Ok(ProgExpr::Num(r)),
            Tok::True => Ok(ProgExpr::Bool(true)),
            Tok::False => Ok(ProgExpr::Bool(false)),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if self.eat(&Tok::LBrack) {
                    let i = self.expr()?;
                    if self.eat(&Tok::Colon) {
                        let j = self.expr()?;
                        self.expect(Tok::RBrack, "`]`")?;
                        return Ok(ProgExpr::Slice(name, Box::new(i), Box::new(j)));
                    }
                    self.expect(Tok::RBrack, "`]`")?;
                    return Ok(ProgExpr::Index(name, Box::new(i)));
                }
                Ok(ProgExpr::Name(name))
            }
            other => {
                self.idx -= 1;
                Err(self.error(format!("unexpected token {other:?}")))
            }
        }
    }
}

fn parse_expr_toks(toks: &[(Tok, usize)], line: usize, end_col: usize) -> Result<ProgExpr, ProgParseError> {
    let mut p = ExprParser { toks, idx: 0, line, end_col };
    let e = p.expr()?;
    if p.idx != toks.len() {
        return Err(p.error("unexpected trailing tokens"));
    }
    Ok(e)
}

/// Parses a single program expression.
pub fn parse_prog_expr(text: &str) -> Result<ProgExpr, ProgParseError> {
    let toks = lex_line(text.trim(), 1, 0)?;
    parse_expr_toks(&toks, 1, text.len() + 1)
}

struct BlockParser {
    lines: Vec<Line>,
    idx: usize,
}

impl BlockParser {
    fn block(&mut self, indent: usize) -> Result<Statement, ProgParseError> {
        let mut items = Vec::new();
        while let Some(line) = self.lines.get(self.idx) {
            if line.indent < indent {
                break;
            }
            if line.indent > indent {
                return Err(err(line.number, line.indent + 1, "unexpected indentation"));
            }
            items.push(self.statement()?);
        }
        Ok(Statement::seq(items))
    }

    fn nested(&mut self, header: &Line) -> Result<Statement, ProgParseError> {
        match self.lines.get(self.idx) {
            Some(next) if next.indent > header.indent => {
                let indent = next.indent;
                self.block(indent)
            }
            _ => Err(err(header.number, header.indent + 1, "expected an indented block")),
        }
    }

    fn statement(&mut self) -> Result<Statement, ProgParseError> {
        let line = self.lines[self.idx].clone();
        self.idx += 1;
        let n = line.number;
        let end = line.toks.last().map(|(_, c)| c + 1).unwrap_or(1);
        let toks = &line.toks;
        let header_body = |toks: &[(Tok, usize)]| -> Result<ProgExpr, ProgParseError> {
            match toks.last() {
                Some((Tok::Colon, c)) => parse_expr_toks(&toks[1..toks.len() - 1], n, *c),
                _ => Err(err(n, end, "expected `:` at end of block header")),
            }
        };
        match &toks[0].0 {
            Tok::Ident(kw) if kw == "pass" && toks.len() == 1 => Ok(Statement::Pass),
            Tok::Ident(kw) if kw == "while" => {
                let cond = header_body(toks)?;
                let body = self.nested(&line)?;
                Ok(Statement::While { cond, body: Box::new(body) })
            }
            Tok::Ident(kw) if kw == "if" => {
                let cond = header_body(toks)?;
                let then_branch = self.nested(&line)?;
                let else_branch = match self.lines.get(self.idx) {
                    Some(next)
                        if next.indent == line.indent
                            && matches!(next.toks.first(), Some((Tok::Ident(k), _)) if k == "else") =>
                    {
                        let next = next.clone();
                        if next.toks.len() != 2 || next.toks[1].0 != Tok::Colon {
                            return Err(err(next.number, next.indent + 1, "expected `else:`"));
                        }
                        self.idx += 1;
                        self.nested(&next)?
                    }
                    _ => Statement::Pass,
                };
                Ok(Statement::If {
                    cond,
                    then_branch: Box::new(then_branch),
                    else_branch: Box::new(else_branch),
                })
            }
            Tok::Ident(kw) if kw == "else" => Err(err(n, line.indent + 1, "`else` without `if`")),
            Tok::Ident(kw) if kw == "assert" => {
                Ok(Statement::Assert(parse_expr_toks(&toks[1..], n, end)?))
            }
            Tok::Ident(kw) if kw == "def" => {
                let (name, params) = parse_def_header(toks, n, end)?;
                let body = self.nested(&line)?;
                Ok(Statement::ProcDef { name, params, body: Box::new(body) })
            }
            _ => {
                if let Some(k) = toks.iter().position(|(t, _)| *t == Tok::Assign) {
                    let target = parse_target(&toks[..k], n)?;
                    let value = parse_expr_toks(&toks[k + 1..], n, end)?;
                    return Ok(Statement::Assign { target, value });
                }
                if let (Some((Tok::Ident(name), _)), Some((Tok::LParen, _)), Some((Tok::RParen, _))) =
                    (toks.first(), toks.get(1), toks.last())
                {
                    let args = parse_args(&toks[2..toks.len() - 1], n, end)?;
                    return Ok(Statement::Call { name: name.clone(), args });
                }
                Err(err(n, line.indent + 1, "unrecognised statement"))
            }
        }
    }
}

fn parse_target(toks: &[(Tok, usize)], line: usize) -> Result<Target, ProgParseError> {
    match toks {
        [(Tok::Ident(n), _)] => Ok(Target::Name(n.clone())),
        [(Tok::Ident(n), _), (Tok::LBrack, _), inner @ .., (Tok::RBrack, c)] => {
            Ok(Target::Index(n.clone(), parse_expr_toks(inner, line, *c)?))
        }
        _ => Err(err(line, toks.first().map(|t| t.1).unwrap_or(1), "invalid assignment target")),
    }
}

fn split_commas(toks: &[(Tok, usize)]) -> Vec<&[(Tok, usize)]> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (k, (t, _)) in toks.iter().enumerate() {
        match t {
            Tok::LParen | Tok::LBrack => depth += 1,
            Tok::RParen | Tok::RBrack => depth -= 1,
            Tok::Comma if depth == 0 => {
                out.push(&toks[start..k]);
                start = k + 1;
            }
            _ => {}
        }
    }
    if start < toks.len() {
        out.push(&toks[start..]);
    }
    out
}

fn parse_args(toks: &[(Tok, usize)], line: usize, end: usize) -> Result<Vec<ProgExpr>, ProgParseError> {
    split_commas(toks).into_iter().map(|t| parse_expr_toks(t, line, end)).collect()
}

fn parse_def_header(
    toks: &[(Tok, usize)],
    line: usize,
    end: usize,
) -> Result<(String, Vec<(String, SpecType)>), ProgParseError> {
    let bad = |msg: &str| err(line, end, msg);
    let name = match toks.get(1) {
        Some((Tok::Ident(n), _)) => n.clone(),
        _ => return Err(bad("expected procedure name")),
    };
    if toks.get(2).map(|t| &t.0) != Some(&Tok::LParen)
        || toks.len() < 5
        || toks[toks.len() - 1].0 != Tok::Colon
        || toks[toks.len() - 2].0 != Tok::RParen
    {
        return Err(bad("expected `def name(param: type, ...):`"));
    }
    let mut params = Vec::new();
    for part in split_commas(&toks[3..toks.len() - 2]) {
        let (pname, ty_toks) = match part {
            [(Tok::Ident(p), _), (Tok::Colon, _), rest @ ..] if !rest.is_empty() => (p.clone(), rest),
            _ => return Err(bad("expected `name: type` parameter")),
        };
        let ty_text: Vec<String> = ty_toks
            .iter()
            .map(|(t, _)| match t {
                Tok::Ident(w) => w.clone(),
                Tok::LParen => "(".into(),
                Tok::RParen => ")".into(),
                _ => "?".into(),
            })
            .collect();
        let ty = parse_spec_type(&ty_text.join(" ")).map_err(|e| bad(&e.to_string()))?;
        params.push((pname, ty));
    }
    Ok((name, params))
}

/// Parses a whole program.
pub fn parse_program(text: &str) -> Result<Statement, ProgParseError> {
    let lines = split_lines(text)?;
    if lines.is_empty() {
        return Ok(Statement::Pass);
    }
    let indent = lines[0].indent;
    let mut p = BlockParser { lines, idx: 0 };
    let s = p.block(indent)?;
    if let Some(line) = p.lines.get(p.idx) {
        return Err(err(line.number, line.indent + 1, "inconsistent indentation"));
    }
    Ok(s)
}
