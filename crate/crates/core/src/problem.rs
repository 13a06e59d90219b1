//! Problem files: coordinate declarations, a Lagrangian, optional symmetry
//! candidates, charges, and a simulation block.
//!
//! ```text
//! even q; odd theta; order 1
//! L = 1/2*q[1]^2 + 1/2*theta[0]*theta[1]
//! symmetry susy { q -> theta[0]; theta -> -q[1] }
//! simulate { n = 2; dt = 0.001; t = 1; init q[1] = 1; init theta[0] = eta1 }
//! ```

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::algebra::{Coord, Parity, Rational, SuperExpr};
use crate::jet::{Chart, JetError, VectorFieldAlong};
use crate::lagrangian::{PipelineError, SuperLagrangian};
use crate::numeric::{evaluate, GrassmannValue, NumericError, NumericState, MAX_GENERATORS};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{line}:{col}: syntax error: {message}")]
    SyntaxError { line: usize, col: usize, message: String },
    #[error("{line}:{col}: unknown coordinate `{name}`")]
    UnknownCoordinate { line: usize, col: usize, name: String },
    #[error("{line}:{col}: index {index} of `{name}` exceeds {limit}")]
    IndexOutOfRange { line: usize, col: usize, name: String, index: u64, limit: u16 },
}

impl ParseError {
    pub fn position(&self) -> (usize, usize) {
        match self {
            ParseError::SyntaxError { line, col, .. }
            | ParseError::UnknownCoordinate { line, col, .. }
            | ParseError::IndexOutOfRange { line, col, .. } => (*line, *col),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Symmetry {
    pub name: String,
    /// Components on base coordinates, in source order.
    pub components: Vec<(Coord, SuperExpr)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Simulation {
    pub generators: usize,
    pub dt: Rational,
    pub t_end: Rational,
    /// Initial values as polynomials in `eta1..etan`; generator `eta{i}` is
    /// stored as the odd coordinate with base `i-1`.
    pub init: BTreeMap<Coord, SuperExpr>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProblemFile {
    pub even: Vec<String>,
    pub odd: Vec<String>,
    pub order: u16,
    pub lagrangian: SuperExpr,
    pub symmetries: Vec<Symmetry>,
    pub charges: Vec<(String, SuperExpr)>,
    pub simulation: Option<Simulation>,
}

impl ProblemFile {
    /// Chart of `T^k M`.
    pub fn chart(&self) -> Chart {
        Chart::new(self.even.clone(), self.odd.clone(), self.order)
    }

    /// Chart of the phase space `T^{2k-1} M`.
    pub fn phase_chart(&self) -> Chart {
        self.chart().with_order(phase_order(self.order))
    }

    pub fn super_lagrangian(&self) -> Result<SuperLagrangian, PipelineError> {
        SuperLagrangian::new(self.chart(), self.lagrangian.clone())
    }

    pub fn symmetry(&self, name: &str) -> Option<&Symmetry> {
        self.symmetries.iter().find(|s| s.name == name)
    }

    /// The symmetry as a field along `τ_{2k-1,0}`.
    pub fn symmetry_field(&self, s: &Symmetry) -> Result<VectorFieldAlong, JetError> {
        let parity = s
            .components
            .iter()
            .find(|(_, v)| !v.is_zero())
            .map(|(c, v)| v.parity_of().map(|p| p + c.parity))
            .transpose()?
            .unwrap_or(Parity::Even);
        let mut x = VectorFieldAlong::new(0, phase_order(self.order), parity);
        for (c, v) in &s.components {
            x.set(*c, v.clone())?;
        }
        Ok(x)
    }

    /// Parse an expression against this problem's phase-space coordinates.
    pub fn parse_expression(&self, text: &str) -> Result<SuperExpr, ParseError> {
        parse_expression(text, &self.phase_chart())
    }

    /// Initial state on `T^{2k-1}`, unspecified coordinates at zero.
    pub fn initial_state(&self) -> Result<Option<NumericState>, NumericError> {
        let Some(sim) = &self.simulation else { return Ok(None) };
        initial_state(&self.phase_chart(), sim).map(Some)
    }
}

fn phase_order(k: u16) -> u16 {
    (2 * k).saturating_sub(1)
}

fn initial_state(chart: &Chart, sim: &Simulation) -> Result<NumericState, NumericError> {
    let n = sim.generators;
    let mut etas = NumericState::new(n)?;
    for i in 0..n {
        etas.set(Coord::odd(i as u16, 0), GrassmannValue::generator(n, i + 1))?;
    }
    let mut state = NumericState::zeros(chart, n)?;
    for (c, v) in &sim.init {
        state.set(*c, evaluate(v, &etas)?)?;
    }
    Ok(state)
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Number { value: Rational, integer: Option<u64> },
    Sym(&'static str),
    Newline,
    Eof,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn syntax(line: usize, col: usize, message: impl Into<String>) -> ParseError {
    ParseError::SyntaxError { line, col, message: message.into() }
}

fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let mut depth: usize = 0;
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        if c == '\n' {
            if depth == 0 {
                out.push(Token { tok: Tok::Newline, line: tl, col: tc });
            }
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
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
                col += 1;
            }
            continue;
        }
        let start = i;
        let tok = if c.is_ascii_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            Tok::Ident(chars[start..i].iter().collect())
        } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            number(&chars, &mut i).ok_or_else(|| syntax(tl, tc, "malformed number"))?
        } else {
            let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
            let sym = if two == "->" {
                "->"
            } else {
                match c {
                    ';' => ";",
                    '{' => "{",
                    '}' => "}",
                    '(' => "(",
                    ')' => ")",
                    '[' => "[",
                    ']' => "]",
                    '=' => "=",
                    '+' => "+",
                    '-' => "-",
                    '*' => "*",
                    '/' => "/",
                    '^' => "^",
                    _ => return Err(syntax(tl, tc, format!("unexpected character `{c}`"))),
                }
            };
            match sym {
                "(" | "[" => depth += 1,
                ")" | "]" => depth = depth.saturating_sub(1),
                _ => {}
            }
            i += sym.len();
            Tok::Sym(sym)
        };
        col += i - start;
        out.push(Token { tok, line: tl, col: tc });
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

/// Decimal or scientific literal, read exactly.
fn number(chars: &[char], i: &mut usize) -> Option<Tok> {
    let digits = |i: &mut usize| {
        let s = *i;
        while *i < chars.len() && chars[*i].is_ascii_digit() {
            *i += 1;
        }
        chars[s..*i].iter().collect::<String>()
    };
    let whole = digits(i);
    let mut frac = String::new();
    let mut integer = true;
    if *i < chars.len() && chars[*i] == '.' {
        *i += 1;
        frac = digits(i);
        integer = false;
    }
    let mut exp: i64 = 0;
    if *i < chars.len() && (chars[*i] == 'e' || chars[*i] == 'E') {
        let save = *i;
        *i += 1;
        let negative = match chars.get(*i) {
            Some('-') => {
                *i += 1;
                true
            }
            Some('+') => {
                *i += 1;
                false
            }
            _ => false,
        };
        let e = digits(i);
        if e.is_empty() {
            *i = save;
        } else {
            integer = false;
            let e: i64 = e.parse().ok().filter(|v: &i64| *v <= 1000)?;
            exp = if negative { -e } else { e };
        }
    }
    let mantissa: num_bigint::BigInt = format!("{whole}{frac}").parse().ok()?;
    let scale = exp - frac.len() as i64;
    let ten = num_bigint::BigInt::from(10);
    let value = if scale >= 0 {
        Rational::from_integer(mantissa * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(mantissa, num_traits::pow(ten, (-scale) as usize))
    };
    let integer = if integer { value.to_integer().to_u64() } else { None };
    Some(Tok::Number { value, integer })
}

/// How identifiers inside an expression are resolved.
enum Scope<'a> {
    /// Jet coordinates `name[j]` with `j ≤ limit`.
    Jet { chart: &'a Chart, limit: u16 },
    /// Grassmann generators `eta1..eta{MAX}`.
    Grassmann,
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

const KEYWORDS: &[&str] = &["even", "odd", "order", "L", "symmetry", "charge", "simulate"];

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err_here(&self, message: impl Into<String>) -> ParseError {
        let t = self.peek();
        syntax(t.line, t.col, message)
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(&self.peek().tok, Tok::Sym(x) if *x == s)
    }

    fn expect_sym(&mut self, s: &str) -> Result<(), ParseError> {
        if self.is_sym(s) {
            self.next();
            Ok(())
        } else {
            Err(self.err_here(format!("expected `{s}`")))
        }
    }

    fn ident(&mut self) -> Result<(String, usize, usize), ParseError> {
        let t = self.peek().clone();
        match t.tok {
            Tok::Ident(s) => {
                self.next();
                Ok((s, t.line, t.col))
            }
            _ => Err(self.err_here("expected a name")),
        }
    }

    fn uint(&mut self, what: &str) -> Result<u64, ParseError> {
        match self.peek().tok {
            Tok::Number { integer: Some(v), .. } => {
                self.next();
                Ok(v)
            }
            _ => Err(self.err_here(format!("expected a nonnegative integer {what}"))),
        }
    }

    fn skip_separators(&mut self) {
        while matches!(self.peek().tok, Tok::Newline) || self.is_sym(";") {
            self.next();
        }
    }

    fn end_statement(&mut self) -> Result<(), ParseError> {
        match &self.peek().tok {
            Tok::Newline | Tok::Eof => Ok(()),
            Tok::Sym(";") | Tok::Sym("}") => Ok(()),
            _ => Err(self.err_here("expected end of statement")),
        }
    }

    fn expr(&mut self, scope: &Scope) -> Result<SuperExpr, ParseError> {
        let mut acc = self.term(scope)?;
        loop {
            if self.is_sym("+") {
                self.next();
                acc += self.term(scope)?;
            } else if self.is_sym("-") {
                self.next();
                acc -= &self.term(scope)?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self, scope: &Scope) -> Result<SuperExpr, ParseError> {
        let mut acc = self.unary(scope)?;
        loop {
            if self.is_sym("*") {
                self.next();
                acc = &acc * &self.unary(scope)?;
            } else if self.is_sym("/") {
                self.next();
                let t = self.peek().clone();
                let d = self.unary(scope)?;
                match d.as_constant() {
                    Some(c) if !c.is_zero() => acc = acc.scale(&c.recip()),
                    Some(_) => return Err(syntax(t.line, t.col, "division by zero")),
                    None => return Err(syntax(t.line, t.col, "division by a non-constant")),
                }
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self, scope: &Scope) -> Result<SuperExpr, ParseError> {
        if self.is_sym("-") {
            self.next();
            return Ok(-self.unary(scope)?);
        }
        if self.is_sym("+") {
            self.next();
            return self.unary(scope);
        }
        let base = self.atom(scope)?;
        if self.is_sym("^") {
            self.next();
            let e = self.uint("exponent")?;
            let e = u32::try_from(e).ok().filter(|e| *e <= 64).ok_or_else(|| self.err_here("exponent too large"))?;
            return Ok(base.pow(e));
        }
        Ok(base)
    }

    fn atom(&mut self, scope: &Scope) -> Result<SuperExpr, ParseError> {
        let t = self.peek().clone();
        match t.tok {
            Tok::Number { value, .. } => {
                self.next();
                Ok(SuperExpr::constant(value))
            }
            Tok::Sym("(") => {
                self.next();
                let e = self.expr(scope)?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.next();
                match scope {
                    Scope::Jet { chart, limit } => {
                        let index = if self.is_sym("[") {
                            self.next();
                            let i = self.uint("index")?;
                            self.expect_sym("]")?;
                            i
                        } else {
                            0
                        };
                        let base = chart.lookup(&name).ok_or_else(|| ParseError::UnknownCoordinate {
                            line: t.line,
                            col: t.col,
                            name: name.clone(),
                        })?;
                        if index > *limit as u64 {
                            return Err(ParseError::IndexOutOfRange {
                                line: t.line,
                                col: t.col,
                                name,
                                index,
                                limit: *limit,
                            });
                        }
                        Ok(SuperExpr::var(base.at_order(index as u16)))
                    }
                    Scope::Grassmann => match grassmann_index(&name) {
                        Some(i) => Ok(SuperExpr::var(Coord::odd(i as u16 - 1, 0))),
                        None => Err(ParseError::UnknownCoordinate { line: t.line, col: t.col, name }),
                    },
                }
            }
            _ => Err(self.err_here("expected a number, a coordinate, or `(`")),
        }
    }

    /// `name` or `name[j]` on the left of `init`.
    fn coordinate(&mut self, chart: &Chart, limit: u16) -> Result<Coord, ParseError> {
        let t = self.peek().clone();
        let e = self.atom(&Scope::Jet { chart, limit })?;
        match e.coords().into_iter().next() {
            Some(c) if matches!(t.tok, Tok::Ident(_)) => Ok(c),
            _ => Err(syntax(t.line, t.col, "expected a coordinate")),
        }
    }
}

fn grassmann_index(name: &str) -> Option<usize> {
    let i: usize = name.strip_prefix("eta")?.parse().ok()?;
    (1..=MAX_GENERATORS).contains(&i).then_some(i)
}

/// Parse one expression over `chart` (indices up to `chart.order`).
pub fn parse_expression(text: &str, chart: &Chart) -> Result<SuperExpr, ParseError> {
    let toks: Vec<Token> = tokenize(text)?.into_iter().filter(|t| t.tok != Tok::Newline).collect();
    let mut p = Parser { toks, pos: 0 };
    let e = p.expr(&Scope::Jet { chart, limit: chart.order })?;
    if p.peek().tok != Tok::Eof {
        return Err(p.err_here("unexpected trailing input"));
    }
    Ok(e)
}

pub fn parse_problem(text: &str) -> Result<ProblemFile, ParseError> {
    let mut p = Parser { toks: tokenize(text)?, pos: 0 };
    let mut even: Vec<String> = Vec::new();
    let mut odd: Vec<String> = Vec::new();
    let mut order: Option<u16> = None;
    let mut lagrangian: Option<SuperExpr> = None;
    let mut symmetries: Vec<Symmetry> = Vec::new();
    let mut charges: Vec<(String, SuperExpr)> = Vec::new();
    let mut simulation: Option<Simulation> = None;
    let mut declarations_closed = false;

    loop {
        p.skip_separators();
        let t = p.peek().clone();
        let (keyword, line, col) = match t.tok {
            Tok::Eof => break,
            Tok::Ident(_) => p.ident()?,
            _ => return Err(p.err_here("expected a statement")),
        };
        let chart = || Chart::new(even.clone(), odd.clone(), order.unwrap_or(0));
        match keyword.as_str() {
            "even" | "odd" | "order" if declarations_closed => {
                return Err(syntax(line, col, "declarations must come before their use"));
            }
            "even" | "odd" => {
                let mut names = Vec::new();
                while let Tok::Ident(_) = p.peek().tok {
                    let (name, nl, nc) = p.ident()?;
                    if KEYWORDS.contains(&name.as_str()) || grassmann_index(&name).is_some() {
                        return Err(syntax(nl, nc, format!("`{name}` is reserved")));
                    }
                    if even.contains(&name) || odd.contains(&name) || names.contains(&name) {
                        return Err(syntax(nl, nc, format!("`{name}` declared twice")));
                    }
                    names.push(name);
                }
                if names.is_empty() {
                    return Err(p.err_here("expected coordinate names"));
                }
                if keyword == "even" { &mut even } else { &mut odd }.extend(names);
                if even.len() + odd.len() > u16::MAX as usize {
                    return Err(syntax(line, col, "too many coordinates"));
                }
            }
            "order" => {
                if order.is_some() {
                    return Err(syntax(line, col, "order declared twice"));
                }
                let k = p.uint("order")?;
                if !(1..=64).contains(&k) {
                    return Err(syntax(line, col, "order must be between 1 and 64"));
                }
                order = Some(k as u16);
            }
            other => {
                let Some(k) = order else {
                    return Err(syntax(line, col, "`order` must be declared first"));
                };
                declarations_closed = true;
                let chart = chart();
                let phase = phase_order(k);
                match other {
                    "L" => {
                        if lagrangian.is_some() {
                            return Err(syntax(line, col, "Lagrangian given twice"));
                        }
                        p.expect_sym("=")?;
                        lagrangian = Some(p.expr(&Scope::Jet { chart: &chart, limit: k })?);
                    }
                    "charge" => {
                        let (name, nl, nc) = p.ident()?;
                        if charges.iter().any(|(n, _)| *n == name) {
                            return Err(syntax(nl, nc, format!("charge `{name}` defined twice")));
                        }
                        p.expect_sym("=")?;
                        let e = p.expr(&Scope::Jet { chart: &chart, limit: phase })?;
                        charges.push((name, e));
                    }
                    "symmetry" => symmetries.push(parse_symmetry(&mut p, &chart, phase, &symmetries)?),
                    "simulate" => {
                        if simulation.is_some() {
                            return Err(syntax(line, col, "simulate block given twice"));
                        }
                        simulation = Some(parse_simulation(&mut p, &chart, phase)?);
                    }
                    _ => return Err(syntax(line, col, format!("unknown statement `{other}`"))),
                }
            }
        }
        p.end_statement()?;
        if p.is_sym("}") {
            return Err(p.err_here("unbalanced `}`"));
        }
    }
    let eof = p.peek().clone();
    let order = order.ok_or_else(|| syntax(eof.line, eof.col, "missing `order`"))?;
    let lagrangian = lagrangian.ok_or_else(|| syntax(eof.line, eof.col, "missing `L = ...`"))?;
    Ok(ProblemFile { even, odd, order, lagrangian, symmetries, charges, simulation })
}

fn parse_symmetry(p: &mut Parser, chart: &Chart, limit: u16, seen: &[Symmetry]) -> Result<Symmetry, ParseError> {
    let (name, nl, nc) = p.ident()?;
    if seen.iter().any(|s| s.name == name) {
        return Err(syntax(nl, nc, format!("symmetry `{name}` defined twice")));
    }
    p.expect_sym("{")?;
    let mut components: Vec<(Coord, SuperExpr)> = Vec::new();
    let mut parity = None;
    loop {
        p.skip_separators();
        if p.is_sym("}") {
            p.next();
            break;
        }
        let (coord, cl, cc) = p.ident()?;
        let base =
            chart.lookup(&coord).ok_or(ParseError::UnknownCoordinate { line: cl, col: cc, name: coord.clone() })?;
        if components.iter().any(|(c, _)| *c == base) {
            return Err(syntax(cl, cc, format!("component `{coord}` given twice")));
        }
        p.expect_sym("->")?;
        let e = p.expr(&Scope::Jet { chart, limit })?;
        if !e.is_zero() {
            let here =
                e.parity_of().map_err(|_| syntax(cl, cc, "component is not homogeneous in parity"))? + base.parity;
            if parity.is_some_and(|q| q != here) {
                return Err(syntax(cl, cc, format!("components of symmetry `{name}` have mixed parity")));
            }
            parity = Some(here);
        }
        components.push((base, e));
        p.end_statement()?;
    }
    Ok(Symmetry { name, components })
}

fn parse_simulation(p: &mut Parser, chart: &Chart, limit: u16) -> Result<Simulation, ParseError> {
    p.expect_sym("{")?;
    let mut generators: Option<usize> = None;
    let mut dt: Option<Rational> = None;
    let mut t_end: Option<Rational> = None;
    let mut init: BTreeMap<Coord, SuperExpr> = BTreeMap::new();
    let mut init_pos: Vec<(Coord, usize, usize)> = Vec::new();
    let close;
    loop {
        p.skip_separators();
        if p.is_sym("}") {
            close = p.next();
            break;
        }
        let (key, line, col) = p.ident()?;
        match key.as_str() {
            "n" => {
                p.expect_sym("=")?;
                let n = p.uint("generator count")?;
                if generators.is_some() || n as usize > MAX_GENERATORS {
                    return Err(syntax(line, col, format!("`n` must be given once and be at most {MAX_GENERATORS}")));
                }
                generators = Some(n as usize);
            }
            "dt" | "t" => {
                p.expect_sym("=")?;
                let v =
                    p.expr(&Scope::Grassmann)?.as_constant().ok_or_else(|| syntax(line, col, "expected a number"))?;
                let slot = if key == "dt" { &mut dt } else { &mut t_end };
                if slot.is_some() {
                    return Err(syntax(line, col, format!("`{key}` given twice")));
                }
                if (key == "dt" && !v.is_positive()) || v.is_negative() {
                    return Err(syntax(line, col, format!("`{key}` out of range")));
                }
                *slot = Some(v);
            }
            "init" => {
                let c = p.coordinate(chart, limit)?;
                if init.contains_key(&c) {
                    return Err(syntax(line, col, "initial value given twice"));
                }
                p.expect_sym("=")?;
                let e = p.expr(&Scope::Grassmann)?;
                init.insert(c, e);
                init_pos.push((c, line, col));
            }
            other => return Err(syntax(line, col, format!("unknown simulate setting `{other}`"))),
        }
        p.end_statement()?;
    }
    let sim = Simulation {
        generators: generators.unwrap_or(2),
        dt: dt.unwrap_or_else(|| Rational::new(1.into(), 1000.into())),
        t_end: t_end.unwrap_or_else(Rational::one),
        init,
    };
    for (c, line, col) in &init_pos {
        let used = sim.init[c].coords().into_iter().map(|g| g.base as usize + 1).max().unwrap_or(0);
        if used > sim.generators {
            return Err(syntax(*line, *col, format!("eta{used} exceeds n = {}", sim.generators)));
        }
    }
    if let Err(e) = initial_state(chart, &sim) {
        let (line, col) = init_pos
            .iter()
            .find(|(c, _, _)| matches!(e, NumericError::ParityViolation { coord } if coord == *c))
            .map_or((close.line, close.col), |(_, l, c)| (*l, *c));
        return Err(syntax(line, col, format!("invalid initial value: {e}")));
    }
    Ok(sim)
}

fn fmt_grassmann(e: &SuperExpr) -> impl fmt::Display + '_ {
    e.display_with(|c| format!("eta{}", c.base + 1))
}

fn fmt_rat(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Canonical text; `parse_problem(&p.to_string()) == Ok(p)`.
impl fmt::Display for ProblemFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let chart = self.chart();
        if !self.even.is_empty() {
            writeln!(f, "even {}", self.even.join(" "))?;
        }
        if !self.odd.is_empty() {
            writeln!(f, "odd {}", self.odd.join(" "))?;
        }
        writeln!(f, "order {}", self.order)?;
        writeln!(f, "L = {}", chart.display(&self.lagrangian))?;
        for s in &self.symmetries {
            writeln!(f, "symmetry {} {{", s.name)?;
            for (c, v) in &s.components {
                writeln!(f, "  {} -> {}", chart.base_name(*c), chart.display(v))?;
            }
            writeln!(f, "}}")?;
        }
        for (name, g) in &self.charges {
            writeln!(f, "charge {name} = {}", chart.display(g))?;
        }
        if let Some(sim) = &self.simulation {
            writeln!(f, "simulate {{")?;
            writeln!(f, "  n = {}", sim.generators)?;
            writeln!(f, "  dt = {}", fmt_rat(&sim.dt))?;
            writeln!(f, "  t = {}", fmt_rat(&sim.t_end))?;
            for (c, v) in &sim.init {
                writeln!(f, "  init {} = {}", chart.name(*c), fmt_grassmann(v))?;
            }
            writeln!(f, "}}")?;
        }
        Ok(())
    }
}
