//! Expression grammar for vector-field files and observables.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := ('+' | '-') unary | power
//! power  := atom ('^' integer)?
//! atom   := number | 'x' index | '(' expr ')' | ('cos' | 'sin') '(' expr ')'
//! ```
//!
//! Numbers are integers or decimals and are kept exact. Division is only by
//! constants. The argument of `cos`/`sin` must be a linear form without
//! constant term, such as `2*x3 - x1/2`.
//!
//! A vector-field file holds a `dim n` line followed by one line per field,
//! `V1: e_1, ..., e_n`, with polynomial components. `#` starts a comment.

use brownloop_core::observable::Observable;
use brownloop_core::poly::Poly;
use brownloop_core::sde::{VectorField, VectorFieldSpec};
use brownloop_core::Q;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(Q),
    Var(usize),
    Func(bool),
    Op(char),
}

fn parse_number(s: &str) -> Option<Q> {
    let (int, frac) = s.split_once('.').unwrap_or((s, ""));
    let digits = format!("{int}{frac}");
    let n: i128 = digits.parse().ok()?;
    let den = 10i128.checked_pow(frac.len() as u32)?;
    Some(Q::new(n, den))
}

fn tokenize(src: &str) -> Result<Vec<Tok>, String> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            out.push(Tok::Num(parse_number(&s).ok_or_else(|| format!("bad number `{s}`"))?));
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_alphanumeric() {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            match s.as_str() {
                "cos" => out.push(Tok::Func(true)),
                "sin" => out.push(Tok::Func(false)),
                _ => {
                    let idx = s
                        .strip_prefix('x')
                        .and_then(|k| k.parse::<usize>().ok())
                        .filter(|&k| k >= 1)
                        .ok_or_else(|| format!("unknown name `{s}`; variables are x1, x2, ..."))?;
                    out.push(Tok::Var(idx - 1));
                }
            }
        } else if "+-*/^()".contains(c) {
            out.push(Tok::Op(c));
            i += 1;
        } else {
            return Err(format!("unexpected character `{c}`"));
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
    n: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn eat(&mut self, op: char) -> bool {
        if self.peek() == Some(&Tok::Op(op)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, op: char) -> Result<(), String> {
        if self.eat(op) {
            Ok(())
        } else {
            Err(format!("expected `{op}`"))
        }
    }

    fn expr(&mut self) -> Result<Observable, String> {
        let mut acc = self.term()?;
        loop {
            if self.eat('+') {
                acc = acc.add(&self.term()?);
            } else if self.eat('-') {
                acc = acc.sub(&self.term()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Observable, String> {
        let mut acc = self.unary()?;
        loop {
            if self.eat('*') {
                acc = acc.mul(&self.unary()?);
            } else if self.eat('/') {
                let d = self.unary()?;
                let c = d.as_poly().and_then(|p| p.as_constant()).ok_or("division by a non-constant")?;
                if c == Q::from_integer(0) {
                    return Err("division by zero".into());
                }
                acc = acc.scale(&(Q::from_integer(1) / c));
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<Observable, String> {
        if self.eat('-') {
            return Ok(self.unary()?.neg());
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Observable, String> {
        let base = self.atom()?;
        if self.eat('^') {
            match self.toks.get(self.pos).cloned() {
                Some(Tok::Num(k)) if k.is_integer() && *k.numer() >= 0 && *k.numer() <= 64 => {
                    self.pos += 1;
                    Ok(base.pow(*k.numer() as u32))
                }
                _ => Err("exponent must be an integer between 0 and 64".into()),
            }
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Observable, String> {
        let n = self.n;
        match self.toks.get(self.pos).cloned() {
            Some(Tok::Num(c)) => {
                self.pos += 1;
                Ok(Observable::constant(n, c))
            }
            Some(Tok::Var(i)) => {
                self.pos += 1;
                if i >= n {
                    return Err(format!("variable x{} outside R^{n}", i + 1));
                }
                Ok(Observable::poly(Poly::var(n, i)))
            }
            Some(Tok::Func(is_cos)) => {
                self.pos += 1;
                self.expect('(')?;
                let arg = self.expr()?;
                self.expect(')')?;
                let freq = linear_form(&arg, n)?;
                Ok(if is_cos { Observable::cos(freq) } else { Observable::sin(freq) })
            }
            Some(Tok::Op('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some(t) => Err(format!("unexpected token {t:?}")),
            None => Err("unexpected end of expression".into()),
        }
    }
}

/// Coefficients of a homogeneous linear polynomial.
fn linear_form(arg: &Observable, n: usize) -> Result<Vec<Q>, String> {
    let p = arg.as_poly().ok_or("trigonometric argument must be a linear form")?;
    let mut freq = vec![Q::from_integer(0); n];
    for (e, c) in p.terms() {
        let deg: u32 = e.iter().map(|&k| k as u32).sum();
        if deg != 1 {
            return Err("trigonometric argument must be a linear form without constant term".into());
        }
        let i = e.iter().position(|&k| k == 1).expect("degree one");
        freq[i] = *c;
    }
    Ok(freq)
}

/// Parses an observable on `R^n`.
pub fn parse_observable(src: &str, n: usize) -> Result<Observable, String> {
    let toks = tokenize(src)?;
    if toks.is_empty() {
        return Err("empty expression".into());
    }
    let mut p = Parser { toks, pos: 0, n };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(format!("trailing input after token {}", p.pos));
    }
    Ok(e)
}

pub fn parse_poly(src: &str, n: usize) -> Result<Poly, String> {
    parse_observable(src, n)?.as_poly().ok_or_else(|| "expected a polynomial".to_string())
}

/// Parses a vector-field file; errors carry the line number.
pub fn parse_vector_fields(text: &str, file: &str) -> Result<VectorFieldSpec, CliError> {
    let err = |line: usize, msg: String| CliError::Parse { file: file.to_string(), line, msg };
    let mut n: Option<usize> = None;
    let mut fields = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("dim") {
            if n.is_some() {
                return Err(err(line_no, "duplicate `dim` line".into()));
            }
            let v = rest.trim().parse::<usize>().ok().filter(|&v| v > 0);
            n = Some(v.ok_or_else(|| err(line_no, format!("bad dimension `{}`", rest.trim())))?);
            continue;
        }
        let n = n.ok_or_else(|| err(line_no, "`dim n` must come first".into()))?;
        let (label, body) = line.split_once(':').ok_or_else(|| err(line_no, "expected `Vk: e1, ..., en`".into()))?;
        let want = format!("V{}", fields.len() + 1);
        if label.trim() != want {
            return Err(err(line_no, format!("expected field label `{want}`, found `{}`", label.trim())));
        }
        let comps: Vec<&str> = body.split(',').collect();
        if comps.len() != n {
            return Err(err(line_no, format!("{} components for a field on R^{n}", comps.len())));
        }
        let polys = comps.iter().map(|c| parse_poly(c, n)).collect::<Result<Vec<_>, _>>().map_err(|m| err(line_no, m))?;
        fields.push(VectorField::new(polys).map_err(|e| err(line_no, e.to_string()))?);
    }
    if fields.is_empty() {
        return Err(err(text.lines().count().max(1), "no vector fields".into()));
    }
    VectorFieldSpec::new(fields).map_err(|e| err(1, e.to_string()))
}

/// The file form of a field specification, readable by [`parse_vector_fields`].
pub fn format_vector_fields(spec: &VectorFieldSpec) -> String {
    let mut s = format!("dim {}\n", spec.state_dim());
    for (i, f) in spec.fields().iter().enumerate() {
        let comps: Vec<String> = f.components().iter().map(|p| p.to_string()).collect();
        s.push_str(&format!("V{}: {}\n", i + 1, comps.join(", ")));
    }
    s
}
