//! Right-hand sides `f(x, t)` as prefix expression trees.
//!
//! Grammar (whitespace separated, parenthesised prefix form):
//!
//! ```text
//! e := number | t | r | x0 | x1 | ...
//!    | (neg e) | (add e e ...) | (sub e e) | (mul e e ...)
//!    | (exp e) | (pow e g) | (cospow e g) | (clip e C) | (coef name)
//! ```
//!
//! `(pow e g)` is the odd power `e|e|^{g-1}`, `(cospow e g)` is `(1 + cos e)^g`,
//! `r` is `|x|`, and `(clip e C)` evaluates `e` with `t` clamped to `[-C, C]`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::domain::GridDomain;
use crate::error::{Error, Result};
use crate::field::ScalarField;

/// Magnitude at which evaluations saturate.
pub const SATURATION: f64 = 1e300;

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    T,
    Norm,
    X(usize),
    Neg(Box<Expr>),
    Add(Vec<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Vec<Expr>),
    Exp(Box<Expr>),
    Pow(Box<Expr>, f64),
    CosPow(Box<Expr>, f64),
    Clip(Box<Expr>, f64),
    Coef(String),
}

impl Expr {
    pub fn parse(text: &str) -> Result<Expr> {
        let mut p = Parser { toks: tokenize(text), at: 0, len: text.len() };
        let e = p.expr()?;
        if let Some((pos, tok)) = p.toks.get(p.at) {
            return Err(Error::Parse { pos: *pos, msg: format!("trailing input `{tok}`") });
        }
        Ok(e)
    }

    pub fn depends_on_t(&self) -> bool {
        self.t_count() > 0
    }

    /// Number of syntactic occurrences of `t`.
    pub fn t_count(&self) -> usize {
        match self {
            Expr::T => 1,
            Expr::Const(_) | Expr::Norm | Expr::X(_) | Expr::Coef(_) => 0,
            Expr::Neg(e) | Expr::Exp(e) | Expr::Pow(e, _) | Expr::CosPow(e, _) | Expr::Clip(e, _) => e.t_count(),
            Expr::Sub(a, b) => a.t_count() + b.t_count(),
            Expr::Add(v) | Expr::Mul(v) => v.iter().map(Expr::t_count).sum(),
        }
    }

    pub fn depends_on_x(&self) -> bool {
        match self {
            Expr::Norm | Expr::X(_) | Expr::Coef(_) => true,
            Expr::Const(_) | Expr::T => false,
            Expr::Neg(e) | Expr::Exp(e) | Expr::Pow(e, _) | Expr::CosPow(e, _) | Expr::Clip(e, _) => e.depends_on_x(),
            Expr::Sub(a, b) => a.depends_on_x() || b.depends_on_x(),
            Expr::Add(v) | Expr::Mul(v) => v.iter().any(Expr::depends_on_x),
        }
    }

    fn coef_names(&self, out: &mut Vec<String>) {
        match self {
            Expr::Coef(n) => out.push(n.clone()),
            Expr::Const(_) | Expr::T | Expr::Norm | Expr::X(_) => {}
            Expr::Neg(e) | Expr::Exp(e) | Expr::Pow(e, _) | Expr::CosPow(e, _) | Expr::Clip(e, _) => e.coef_names(out),
            Expr::Sub(a, b) => {
                a.coef_names(out);
                b.coef_names(out);
            }
            Expr::Add(v) | Expr::Mul(v) => v.iter().for_each(|e| e.coef_names(out)),
        }
    }

    fn max_axis(&self) -> Option<usize> {
        match self {
            Expr::X(k) => Some(*k),
            Expr::Const(_) | Expr::T | Expr::Norm | Expr::Coef(_) => None,
            Expr::Neg(e) | Expr::Exp(e) | Expr::Pow(e, _) | Expr::CosPow(e, _) | Expr::Clip(e, _) => e.max_axis(),
            Expr::Sub(a, b) => a.max_axis().max(b.max_axis()),
            Expr::Add(v) | Expr::Mul(v) => v.iter().filter_map(Expr::max_axis).max(),
        }
    }

    /// Replaces every `t` by `g`.
    pub fn substitute_t(&self, g: &Expr) -> Expr {
        match self {
            Expr::T => g.clone(),
            Expr::Const(_) | Expr::Norm | Expr::X(_) | Expr::Coef(_) => self.clone(),
            Expr::Neg(e) => Expr::Neg(Box::new(e.substitute_t(g))),
            Expr::Exp(e) => Expr::Exp(Box::new(e.substitute_t(g))),
            Expr::Pow(e, p) => Expr::Pow(Box::new(e.substitute_t(g)), *p),
            Expr::CosPow(e, p) => Expr::CosPow(Box::new(e.substitute_t(g)), *p),
            Expr::Clip(e, c) => Expr::Clip(Box::new(e.substitute_t(g)), *c),
            Expr::Sub(a, b) => Expr::Sub(Box::new(a.substitute_t(g)), Box::new(b.substitute_t(g))),
            Expr::Add(v) => Expr::Add(v.iter().map(|e| e.substitute_t(g)).collect()),
            Expr::Mul(v) => Expr::Mul(v.iter().map(|e| e.substitute_t(g)).collect()),
        }
    }

    fn eval(&self, cx: &Ctx, t: f64, sat: &mut bool) -> f64 {
        let v = match self {
            Expr::Const(c) => *c,
            Expr::T => t,
            Expr::Norm => cx.x.iter().map(|v| v * v).sum::<f64>().sqrt(),
            Expr::X(k) => cx.x[*k],
            Expr::Coef(n) => cx.coefs[n].eval(cx.x, sat),
            Expr::Neg(e) => -e.eval(cx, t, sat),
            Expr::Exp(e) => e.eval(cx, t, sat).exp(),
            Expr::Pow(e, p) => {
                let b = e.eval(cx, t, sat);
                signed_pow(b, *p)
            }
            Expr::CosPow(e, p) => (1.0 + e.eval(cx, t, sat).cos()).max(0.0).powf(*p),
            Expr::Clip(e, c) => e.eval(cx, t.clamp(-c, *c), sat),
            Expr::Sub(a, b) => a.eval(cx, t, sat) - b.eval(cx, t, sat),
            Expr::Add(v) => v.iter().map(|e| e.eval(cx, t, sat)).sum(),
            Expr::Mul(v) => {
                let mut acc = 1.0;
                for e in v {
                    acc *= e.eval(cx, t, sat);
                    acc = saturate(acc, sat);
                }
                acc
            }
        };
        saturate(v, sat)
    }
}

fn saturate(v: f64, sat: &mut bool) -> f64 {
    if v.is_nan() {
        *sat = true;
        0.0
    } else if v.abs() > SATURATION {
        *sat = true;
        v.signum() * SATURATION
    } else {
        v
    }
}

pub(crate) fn signed_pow(b: f64, p: f64) -> f64 {
    if p == 1.0 {
        b
    } else if p == 3.0 {
        b * b * b
    } else {
        b.signum() * b.abs().powf(p)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::T => write!(f, "t"),
            Expr::Norm => write!(f, "r"),
            Expr::X(k) => write!(f, "x{k}"),
            Expr::Coef(n) => write!(f, "(coef {n})"),
            Expr::Neg(e) => write!(f, "(neg {e})"),
            Expr::Exp(e) => write!(f, "(exp {e})"),
            Expr::Pow(e, p) => write!(f, "(pow {e} {p})"),
            Expr::CosPow(e, p) => write!(f, "(cospow {e} {p})"),
            Expr::Clip(e, c) => write!(f, "(clip {e} {c})"),
            Expr::Sub(a, b) => write!(f, "(sub {a} {b})"),
            Expr::Add(v) | Expr::Mul(v) => {
                write!(f, "({}", if matches!(self, Expr::Add(_)) { "add" } else { "mul" })?;
                for e in v {
                    write!(f, " {e}")?;
                }
                write!(f, ")")
            }
        }
    }
}

fn tokenize(text: &str) -> Vec<(usize, String)> {
    let mut out = Vec::new();
    let mut cur: Option<(usize, String)> = None;
    for (i, ch) in text.char_indices() {
        if ch == '(' || ch == ')' || ch.is_whitespace() {
            if let Some(tok) = cur.take() {
                out.push(tok);
            }
            if !ch.is_whitespace() {
                out.push((i, ch.to_string()));
            }
        } else {
            match cur.as_mut() {
                Some((_, s)) => s.push(ch),
                None => cur = Some((i, ch.to_string())),
            }
        }
    }
    if let Some(tok) = cur {
        out.push(tok);
    }
    out
}

struct Parser {
    toks: Vec<(usize, String)>,
    at: usize,
    len: usize,
}

impl Parser {
    fn next(&mut self) -> Result<(usize, String)> {
        let tok = self
            .toks
            .get(self.at)
            .cloned()
            .ok_or(Error::Parse { pos: self.len, msg: "unexpected end of expression".into() })?;
        self.at += 1;
        Ok(tok)
    }

    fn expect_close(&mut self) -> Result<()> {
        let (pos, tok) = self.next()?;
        if tok != ")" {
            return Err(Error::Parse { pos, msg: format!("expected `)`, found `{tok}`") });
        }
        Ok(())
    }

    fn number(&mut self) -> Result<(usize, f64)> {
        let (pos, tok) = self.next()?;
        match tok.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok((pos, v)),
            _ => Err(Error::Parse { pos, msg: format!("expected a number, found `{tok}`") }),
        }
    }

    fn positive(&mut self, what: &str) -> Result<f64> {
        let (pos, v) = self.number()?;
        if v > 0.0 {
            Ok(v)
        } else {
            Err(Error::Parse { pos, msg: format!("{what} must be positive") })
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let (pos, tok) = self.next()?;
        if tok == ")" {
            return Err(Error::Parse { pos, msg: "unexpected `)`".into() });
        }
        if tok != "(" {
            return atom(pos, &tok);
        }
        let (hpos, head) = self.next()?;
        let e = match head.as_str() {
            "neg" => Expr::Neg(Box::new(self.expr()?)),
            "exp" => Expr::Exp(Box::new(self.expr()?)),
            "sub" => {
                let a = self.expr()?;
                Expr::Sub(Box::new(a), Box::new(self.expr()?))
            }
            "add" | "mul" => {
                let mut v = Vec::new();
                while self.toks.get(self.at).map(|t| t.1 != ")").unwrap_or(false) {
                    v.push(self.expr()?);
                }
                if v.is_empty() {
                    return Err(Error::Parse { pos: hpos, msg: format!("`{head}` needs operands") });
                }
                if head == "add" {
                    Expr::Add(v)
                } else {
                    Expr::Mul(v)
                }
            }
            "pow" => {
                let b = self.expr()?;
                Expr::Pow(Box::new(b), self.positive("exponent")?)
            }
            "cospow" => {
                let b = self.expr()?;
                Expr::CosPow(Box::new(b), self.positive("exponent")?)
            }
            "clip" => {
                let b = self.expr()?;
                Expr::Clip(Box::new(b), self.positive("clip level")?)
            }
            "coef" => {
                let (npos, name) = self.next()?;
                if name == "(" || name == ")" {
                    return Err(Error::Parse { pos: npos, msg: "expected a coefficient name".into() });
                }
                Expr::Coef(name)
            }
            _ => return Err(Error::Parse { pos: hpos, msg: format!("unknown operator `{head}`") }),
        };
        self.expect_close()?;
        Ok(e)
    }
}

fn atom(pos: usize, tok: &str) -> Result<Expr> {
    if tok == "t" {
        return Ok(Expr::T);
    }
    if tok == "r" {
        return Ok(Expr::Norm);
    }
    if let Some(k) = tok.strip_prefix('x') {
        if let Ok(k) = k.parse::<usize>() {
            return Ok(Expr::X(k));
        }
    }
    match tok.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Expr::Const(v)),
        _ => Err(Error::Parse { pos, msg: format!("unknown symbol `{tok}`") }),
    }
}

/// A coordinate function `a(x)`.
#[derive(Clone, Debug)]
pub enum Coef {
    /// Closed form in `x0, x1, …, r`; must not mention `t`.
    Closed(Expr),
    /// Grid samples, read at the nearest node.
    Samples(ScalarField),
}

impl Coef {
    pub fn closed(text: &str) -> Result<Coef> {
        let e = Expr::parse(text)?;
        if e.depends_on_t() {
            return Err(Error::Parameter(format!("coefficient `{text}` depends on t")));
        }
        let mut names = Vec::new();
        e.coef_names(&mut names);
        if let Some(n) = names.pop() {
            return Err(Error::Parameter(format!("coefficient refers to another coefficient `{n}`")));
        }
        Ok(Coef::Closed(e))
    }

    fn eval(&self, x: &[f64], sat: &mut bool) -> f64 {
        match self {
            Coef::Closed(e) => {
                let empty = BTreeMap::new();
                e.eval(&Ctx { x, coefs: &empty }, 0.0, sat)
            }
            Coef::Samples(u) => u.get(u.domain().nearest(x)),
        }
    }
}

struct Ctx<'a> {
    x: &'a [f64],
    coefs: &'a BTreeMap<String, Coef>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Nonneg,
    Nonpos,
    Mixed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Monotone {
    Nondecreasing,
    Nonincreasing,
    None,
}

/// A declared bound `lower ≤ f ≤ upper` on an `x`-box times a `t`-interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeclaredBound {
    #[serde(default)]
    pub x_lo: Option<Vec<f64>>,
    #[serde(default)]
    pub x_hi: Option<Vec<f64>>,
    pub t_lo: f64,
    pub t_hi: f64,
    #[serde(default)]
    pub lower: Option<f64>,
    #[serde(default)]
    pub upper: Option<f64>,
}

/// `t`-probes used to validate attributes: `0` and `±10^{k/density}` for
/// `k` between `min_decade·density` and `max_decade·density`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbeLattice {
    pub density: u32,
    pub min_decade: i32,
    pub max_decade: i32,
}

impl Default for ProbeLattice {
    fn default() -> Self {
        ProbeLattice { density: 64, min_decade: -3, max_decade: 3 }
    }
}

impl ProbeLattice {
    /// Sorted probe values.
    pub fn t_values(&self) -> Vec<f64> {
        let d = self.density.max(1) as i32;
        let mut pos: Vec<f64> =
            (self.min_decade * d..=self.max_decade * d).map(|k| 10f64.powf(k as f64 / d as f64)).collect();
        pos.dedup();
        let mut out: Vec<f64> = pos.iter().rev().map(|v| -v).collect();
        out.push(0.0);
        out.extend(pos);
        out
    }
}

/// Inferred behaviour of a right-hand side on a domain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Traits {
    pub sign: Sign,
    pub monotone: Monotone,
    pub depends_on_x: bool,
    pub depends_on_t: bool,
}

impl Traits {
    pub fn nondecreasing(&self) -> bool {
        !self.depends_on_t || self.monotone == Monotone::Nondecreasing
    }
}

#[derive(Clone, Debug)]
pub struct RhsSpec {
    expr: Expr,
    coefs: Arc<BTreeMap<String, Coef>>,
    sign: Option<Sign>,
    monotone: Option<Monotone>,
    bounds: Vec<DeclaredBound>,
    lattice: ProbeLattice,
}

impl fmt::Display for RhsSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.expr.fmt(f)
    }
}

impl RhsSpec {
    pub fn parse(text: &str) -> Result<RhsSpec> {
        RhsSpec::new(Expr::parse(text)?, BTreeMap::new())
    }

    pub fn parse_with(text: &str, coefs: BTreeMap<String, Coef>) -> Result<RhsSpec> {
        RhsSpec::new(Expr::parse(text)?, coefs)
    }

    pub fn new(expr: Expr, coefs: BTreeMap<String, Coef>) -> Result<RhsSpec> {
        let mut names = Vec::new();
        expr.coef_names(&mut names);
        for n in names {
            if !coefs.contains_key(&n) {
                return Err(Error::UnknownCoefficient(n));
            }
        }
        Ok(RhsSpec {
            expr,
            coefs: Arc::new(coefs),
            sign: None,
            monotone: None,
            bounds: Vec::new(),
            lattice: ProbeLattice::default(),
        })
    }

    pub fn constant(c: f64) -> RhsSpec {
        RhsSpec::new(Expr::Const(c), BTreeMap::new()).expect("no coefficients")
    }

    pub fn declare_sign(mut self, s: Sign) -> RhsSpec {
        self.sign = Some(s);
        self
    }

    pub fn declare_monotone(mut self, m: Monotone) -> RhsSpec {
        self.monotone = Some(m);
        self
    }

    pub fn declare_bound(mut self, b: DeclaredBound) -> RhsSpec {
        self.bounds.push(b);
        self
    }

    pub fn with_lattice(mut self, lattice: ProbeLattice) -> RhsSpec {
        self.lattice = lattice;
        self
    }

    pub fn lattice(&self) -> &ProbeLattice {
        &self.lattice
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn depends_on_x(&self) -> bool {
        self.expr.depends_on_x()
    }

    pub fn depends_on_t(&self) -> bool {
        self.expr.depends_on_t()
    }

    /// Same coefficients, new expression.
    pub fn with_expr(&self, expr: Expr) -> RhsSpec {
        RhsSpec { expr, sign: None, monotone: None, bounds: Vec::new(), ..self.clone() }
    }

    /// `f(x, clamp(t, -c, c))`.
    pub fn clipped(&self, c: f64) -> RhsSpec {
        self.with_expr(Expr::Clip(Box::new(self.expr.clone()), c))
    }

    /// `f(x, -t)`.
    pub fn mirrored(&self) -> RhsSpec {
        self.with_expr(self.expr.substitute_t(&Expr::Neg(Box::new(Expr::T))))
    }

    /// `-f(x, t)`.
    pub fn negated(&self) -> RhsSpec {
        self.with_expr(Expr::Neg(Box::new(self.expr.clone())))
    }

    pub fn eval(&self, x: &[f64], t: f64) -> f64 {
        self.eval_flagged(x, t).0
    }

    /// Value and saturation flag.
    pub fn eval_flagged(&self, x: &[f64], t: f64) -> (f64, bool) {
        let mut sat = false;
        let v = self.expr.eval(&Ctx { x, coefs: &self.coefs }, t, &mut sat);
        (v, sat)
    }

    fn check_arity(&self, d: &GridDomain) -> Result<()> {
        if let Some(k) = self.expr.max_axis() {
            if k >= d.dim() {
                return Err(Error::Parameter(format!("x{k} used on a {}-dimensional domain", d.dim())));
            }
        }
        for c in self.coefs.values() {
            match c {
                Coef::Closed(e) => {
                    if let Some(k) = e.max_axis() {
                        if k >= d.dim() {
                            return Err(Error::Parameter(format!("x{k} used on a {}-dimensional domain", d.dim())));
                        }
                    }
                }
                Coef::Samples(u) => {
                    if u.domain().dim() != d.dim() {
                        return Err(Error::DomainMismatch);
                    }
                }
            }
        }
        Ok(())
    }

    /// Probe points in space: every non-exterior node when `f` depends on `x`,
    /// a single interior node otherwise.
    pub fn probe_points(&self, d: &GridDomain) -> Vec<Vec<f64>> {
        if self.depends_on_x() {
            d.non_exterior().map(|i| d.point(i)).collect()
        } else {
            vec![d.point(d.interior()[0])]
        }
    }

    /// Validates declared attributes on the probe lattice and infers the
    /// undeclared ones.
    pub fn traits(&self, d: &GridDomain) -> Result<Traits> {
        self.check_arity(d)?;
        let ts = if self.depends_on_t() { self.lattice.t_values() } else { vec![0.0] };
        let pts = self.probe_points(d);
        let (mut nonneg, mut nonpos, mut up, mut down) = (true, true, true, true);
        let mut row = vec![0.0; ts.len()];
        for x in &pts {
            for (k, t) in ts.iter().enumerate() {
                let (v, _) = self.eval_flagged(x, *t);
                if !v.is_finite() {
                    return Err(Error::NonFinite(format!("f({x:?}, {t})")));
                }
                row[k] = v;
                nonneg &= v >= 0.0;
                nonpos &= v <= 0.0;
            }
            for w in row.windows(2) {
                let slack = 1e-12 * (w[0].abs() + w[1].abs());
                up &= w[1] >= w[0] - slack;
                down &= w[1] <= w[0] + slack;
            }
        }
        let sign = if nonneg {
            Sign::Nonneg
        } else if nonpos {
            Sign::Nonpos
        } else {
            Sign::Mixed
        };
        let monotone = if up {
            Monotone::Nondecreasing
        } else if down {
            Monotone::Nonincreasing
        } else {
            Monotone::None
        };
        if let Some(s) = self.sign {
            let ok = match s {
                Sign::Nonneg => nonneg,
                Sign::Nonpos => nonpos,
                Sign::Mixed => true,
            };
            if !ok {
                return Err(Error::AttributeViolation(format!("{} is not {s:?}", self.expr)));
            }
        }
        if let Some(m) = self.monotone {
            let ok = match m {
                Monotone::Nondecreasing => up,
                Monotone::Nonincreasing => down,
                Monotone::None => true,
            };
            if !ok {
                return Err(Error::AttributeViolation(format!("{} is not {m:?} in t", self.expr)));
            }
        }
        for b in &self.bounds {
            self.check_bound(b, &pts, &ts)?;
        }
        Ok(Traits {
            sign: self.sign.unwrap_or(sign),
            monotone: self.monotone.filter(|m| *m != Monotone::None).unwrap_or(monotone),
            depends_on_x: self.depends_on_x(),
            depends_on_t: self.depends_on_t(),
        })
    }

    fn check_bound(&self, b: &DeclaredBound, pts: &[Vec<f64>], ts: &[f64]) -> Result<()> {
        let inside = |x: &[f64]| {
            let lo_ok = b.x_lo.as_ref().map(|lo| x.iter().zip(lo).all(|(v, l)| v >= l)).unwrap_or(true);
            let hi_ok = b.x_hi.as_ref().map(|hi| x.iter().zip(hi).all(|(v, u)| v <= u)).unwrap_or(true);
            lo_ok && hi_ok
        };
        let mut tprobe: Vec<f64> = ts.iter().cloned().filter(|t| *t >= b.t_lo && *t <= b.t_hi).collect();
        tprobe.extend([b.t_lo, b.t_hi]);
        for x in pts.iter().filter(|x| inside(x)) {
            for &t in &tprobe {
                let v = self.eval(x, t);
                if b.lower.map(|l| v < l).unwrap_or(false) || b.upper.map(|u| v > u).unwrap_or(false) {
                    return Err(Error::AttributeViolation(format!(
                        "f({x:?}, {t}) = {v} breaks the declared bound [{:?}, {:?}]",
                        b.lower, b.upper
                    )));
                }
            }
        }
        Ok(())
    }

    /// Detects `f(x, t) = -a(x) t³` on the probe lattice and returns `a` at the
    /// probe points.
    pub fn cubic_coefficient(&self, d: &GridDomain) -> Option<Vec<f64>> {
        let pts = self.probe_points(d);
        let ts = [-7.5, -2.0, -0.5, 0.3, 1.0, 3.0, 11.0];
        let mut out = Vec::with_capacity(pts.len());
        for x in &pts {
            let a = -self.eval(x, 1.0);
            for &t in &ts {
                let v = self.eval(x, t);
                let want = -a * t * t * t;
                if (v - want).abs() > 1e-10 * (1.0 + want.abs()) {
                    return None;
                }
            }
            out.push(a);
        }
        Some(out)
    }
}

/// Enclosure of `f` over `Ω × [lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
    /// True when the enclosure is a sampled estimate rather than exact.
    pub estimate: bool,
    pub saturated: bool,
}

const SAMPLES_PER_INTERVAL: usize = 257;

/// Range of `f` over the non-exterior nodes of `d` times the interval `[lo, hi]`.
///
/// Exact when the expression separates into parts depending on `x` only and
/// parts mentioning `t` once; otherwise estimated by sampling.
pub fn rhs_range(f: &RhsSpec, d: &GridDomain, lo: f64, hi: f64) -> Result<Range> {
    if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Parameter(format!("t-interval [{lo}, {hi}] must be bounded")));
    }
    f.check_arity(d)?;
    let pts: Vec<Vec<f64>> = d.non_exterior().map(|i| d.point(i)).collect();
    let mut sat = false;
    if let Some((a, b)) = exact_range(f, &f.expr, &pts, (lo, hi), &mut sat) {
        return Ok(Range { lo: a, hi: b, estimate: false, saturated: sat });
    }
    let xs: Vec<Vec<f64>> = if f.depends_on_x() { pts } else { vec![pts[0].clone()] };
    let (mut a, mut b) = (f64::INFINITY, f64::NEG_INFINITY);
    let n = SAMPLES_PER_INTERVAL;
    for x in &xs {
        for k in 0..n {
            let t = if k + 1 == n { hi } else { lo + (hi - lo) * k as f64 / (n - 1) as f64 };
            let (v, s) = f.eval_flagged(x, t);
            sat |= s;
            a = a.min(v);
            b = b.max(v);
        }
    }
    Ok(Range { lo: a, hi: b, estimate: true, saturated: sat })
}

fn sample_x(f: &RhsSpec, e: &Expr, pts: &[Vec<f64>], sat: &mut bool) -> (f64, f64) {
    let cx_pts: &[Vec<f64>] = if e.depends_on_x() { pts } else { &pts[..1] };
    let (mut a, mut b) = (f64::INFINITY, f64::NEG_INFINITY);
    for x in cx_pts {
        let v = e.eval(&Ctx { x, coefs: &f.coefs }, 0.0, sat);
        a = a.min(v);
        b = b.max(v);
    }
    (a, b)
}

fn exact_range(f: &RhsSpec, e: &Expr, pts: &[Vec<f64>], ti: (f64, f64), sat: &mut bool) -> Option<(f64, f64)> {
    if !e.depends_on_t() {
        return Some(sample_x(f, e, pts, sat));
    }
    if !e.depends_on_x() && e.t_count() == 1 {
        return Some(interval(e, ti, sat));
    }
    match e {
        Expr::Neg(a) => exact_range(f, a, pts, ti, sat).map(|(l, h)| (-h, -l)),
        Expr::Clip(a, c) => exact_range(f, a, pts, (ti.0.clamp(-c, *c), ti.1.clamp(-c, *c)), sat),
        Expr::Add(v) | Expr::Mul(v) => {
            let is_add = matches!(e, Expr::Add(_));
            let (xs, ts): (Vec<Expr>, Vec<Expr>) = v.iter().cloned().partition(|c| !c.depends_on_t());
            if ts.iter().any(Expr::depends_on_x) || ts.iter().map(Expr::t_count).sum::<usize>() != 1 {
                return None;
            }
            let tpart = interval(&ts[0], ti, sat);
            if xs.is_empty() {
                return Some(tpart);
            }
            let xe = if is_add { Expr::Add(xs) } else { Expr::Mul(xs) };
            let xpart = sample_x(f, &xe, pts, sat);
            Some(if is_add { iadd(xpart, tpart) } else { imul(xpart, tpart) })
        }
        _ => None,
    }
}

fn iadd(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    (a.0 + b.0, a.1 + b.1)
}

fn imul(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    let c = [a.0 * b.0, a.0 * b.1, a.1 * b.0, a.1 * b.1];
    let lo = c.iter().cloned().filter(|v| !v.is_nan()).fold(f64::INFINITY, f64::min);
    let hi = c.iter().cloned().filter(|v| !v.is_nan()).fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// Interval extension of an `x`-free expression; exact when `t` occurs once.
fn interval(e: &Expr, ti: (f64, f64), sat: &mut bool) -> (f64, f64) {
    let clamp = |v: f64, sat: &mut bool| saturate(v, sat);
    let r = match e {
        Expr::Const(c) => (*c, *c),
        Expr::T => ti,
        Expr::Norm | Expr::X(_) | Expr::Coef(_) => unreachable!("x-free expression"),
        Expr::Neg(a) => {
            let (l, h) = interval(a, ti, sat);
            (-h, -l)
        }
        Expr::Exp(a) => {
            let (l, h) = interval(a, ti, sat);
            (l.exp(), h.exp())
        }
        Expr::Pow(a, p) => {
            let (l, h) = interval(a, ti, sat);
            (signed_pow(l, *p), signed_pow(h, *p))
        }
        Expr::CosPow(a, p) => {
            let (l, h) = interval(a, ti, sat);
            let (cl, ch) = cos_range(l, h);
            ((1.0 + cl).max(0.0).powf(*p), (1.0 + ch).max(0.0).powf(*p))
        }
        Expr::Clip(a, c) => interval(a, (ti.0.clamp(-c, *c), ti.1.clamp(-c, *c)), sat),
        Expr::Sub(a, b) => {
            let (al, ah) = interval(a, ti, sat);
            let (bl, bh) = interval(b, ti, sat);
            (al - bh, ah - bl)
        }
        Expr::Add(v) => v.iter().map(|c| interval(c, ti, sat)).fold((0.0, 0.0), iadd),
        Expr::Mul(v) => v.iter().map(|c| interval(c, ti, sat)).fold((1.0, 1.0), imul),
    };
    (clamp(r.0, sat), clamp(r.1, sat))
}

fn cos_range(l: f64, h: f64) -> (f64, f64) {
    use std::f64::consts::PI;
    if h - l >= 2.0 * PI {
        return (-1.0, 1.0);
    }
    let mut lo = l.cos().min(h.cos());
    let mut hi = l.cos().max(h.cos());
    let first_max = (l / (2.0 * PI)).ceil() * 2.0 * PI;
    if first_max <= h {
        hi = 1.0;
    }
    let first_min = ((l - PI) / (2.0 * PI)).ceil() * 2.0 * PI + PI;
    if first_min <= h {
        lo = -1.0;
    }
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{build_domain, Shape};
    use proptest::prelude::*;

    fn square() -> Arc<GridDomain> {
        build_domain(&Shape::Box { lo: vec![0.0, 0.0], hi: vec![1.0, 1.0] }, 0.1).unwrap()
    }

    #[test]
    fn evaluates_examples() {
        let f = RhsSpec::parse("(neg (exp t))").unwrap();
        assert_eq!(f.eval(&[0.3, 0.1], 0.0), -1.0);
        let f = RhsSpec::parse("(pow t 3)").unwrap();
        assert_eq!(f.eval(&[0.0], -2.0), -8.0);
        let mut coefs = BTreeMap::new();
        coefs.insert("a".to_string(), Coef::closed("1").unwrap());
        let f = RhsSpec::parse_with("(mul (coef a) (pow (sub t 0) 1) (pow (sub t 1) 1))", coefs).unwrap();
        assert!((f.eval(&[0.0, 0.0], 0.5) + 0.25).abs() < 1e-15);
    }

    #[test]
    fn parse_errors_carry_positions() {
        assert!(matches!(Expr::parse("(neg (exp t)"), Err(Error::Parse { .. })));
        assert!(matches!(Expr::parse("(foo t)"), Err(Error::Parse { pos: 1, .. })));
        assert!(matches!(Expr::parse("(pow t -1)"), Err(Error::Parse { .. })));
        assert!(matches!(Expr::parse("t t"), Err(Error::Parse { pos: 2, .. })));
        assert!(matches!(RhsSpec::parse("(coef a)"), Err(Error::UnknownCoefficient(_))));
    }

    #[test]
    fn display_round_trips() {
        for s in ["(neg (exp t))", "(mul (coef a) (pow t 3))", "(clip (add t 2.5 x0) 4)", "(cospow t 1.5)"] {
            let e = Expr::parse(s).unwrap();
            assert_eq!(e.to_string(), s);
        }
    }

    #[test]
    fn saturation_is_flagged() {
        let f = RhsSpec::parse("(exp t)").unwrap();
        let (v, s) = f.eval_flagged(&[0.0], 1e4);
        assert!(s);
        assert_eq!(v, SATURATION);
        let (_, s) = f.eval_flagged(&[0.0], 1.0);
        assert!(!s);
    }

    #[test]
    fn range_examples() {
        let d = square();
        let r = rhs_range(&RhsSpec::parse("(neg (exp t))").unwrap(), &d, 0.0, 1.0).unwrap();
        assert!(!r.estimate);
        assert!((r.lo + std::f64::consts::E).abs() < 1e-15 && (r.hi + 1.0).abs() < 1e-15);
        let r = rhs_range(&RhsSpec::parse("(pow t 3)").unwrap(), &d, -1.0, 2.0).unwrap();
        assert_eq!((r.lo, r.hi), (-1.0, 8.0));
        let mut coefs = BTreeMap::new();
        coefs.insert("a".to_string(), Coef::closed("(sub (mul 5 x0) 2)").unwrap());
        let f = RhsSpec::parse_with("(mul (coef a) t)", coefs).unwrap();
        let r = rhs_range(&f, &d, -1.0, 1.0).unwrap();
        assert!(!r.estimate);
        let corners = [-2.0 * -1.0, -2.0 * 1.0, -3.0, 3.0 * 1.0];
        let want_lo = corners.iter().cloned().fold(f64::INFINITY, f64::min);
        let want_hi = corners.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!((r.lo - want_lo).abs() < 1e-12 && (r.hi - want_hi).abs() < 1e-12);
    }

    #[test]
    fn non_separable_range_is_estimate() {
        let d = square();
        let r = rhs_range(&RhsSpec::parse("(mul t (exp (mul x0 t)))").unwrap(), &d, 0.0, 1.0).unwrap();
        assert!(r.estimate);
        assert!(r.hi > 2.5);
    }

    #[test]
    fn traits_are_inferred_and_checked() {
        let d = square();
        let t = RhsSpec::parse("(pow t 3)").unwrap().traits(&d).unwrap();
        assert_eq!((t.sign, t.monotone), (Sign::Mixed, Monotone::Nondecreasing));
        let t = RhsSpec::parse("(neg (exp t))").unwrap().traits(&d).unwrap();
        assert_eq!((t.sign, t.monotone), (Sign::Nonpos, Monotone::Nonincreasing));
        let bad = RhsSpec::parse("(exp t)").unwrap().declare_monotone(Monotone::Nonincreasing);
        assert!(matches!(bad.traits(&d), Err(Error::AttributeViolation(_))));
        let bad = RhsSpec::parse("t").unwrap().declare_sign(Sign::Nonneg);
        assert!(matches!(bad.traits(&d), Err(Error::AttributeViolation(_))));
        let bound = DeclaredBound { x_lo: None, x_hi: None, t_lo: 0.0, t_hi: 1.0, lower: Some(-1.0), upper: Some(0.5) };
        let bad = RhsSpec::parse("t").unwrap().declare_bound(bound);
        assert!(bad.traits(&d).is_err());
    }

    #[test]
    fn cubic_detection() {
        let d = square();
        let f = RhsSpec::parse("(neg (mul (add 1 x0) (pow t 3)))").unwrap();
        let a = f.cubic_coefficient(&d).unwrap();
        assert!(a.iter().all(|v| *v >= 1.0 && *v <= 2.0 + 1e-12));
        assert!(RhsSpec::parse("(neg (pow t 2))").unwrap().cubic_coefficient(&d).is_none());
    }

    #[test]
    fn lattice_has_expected_size() {
        let ts = ProbeLattice::default().t_values();
        assert_eq!(ts.len(), 2 * 385 + 1);
        assert!(ts.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn brute_force_agrees_with_separable_range() {
        let d = build_domain(&Shape::Box { lo: vec![0.0, 0.0, 0.0], hi: vec![1.0, 1.0, 1.0] }, 1.0 / 9.0).unwrap();
        let mut coefs = BTreeMap::new();
        coefs.insert("a".to_string(), Coef::closed("(add x0 (mul 2 x1) (neg x2))").unwrap());
        let f = RhsSpec::parse_with("(mul (coef a) (exp t))", coefs).unwrap();
        let r = rhs_range(&f, &d, -0.5, 0.7).unwrap();
        assert!(!r.estimate);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in d.non_exterior() {
            let x = d.point(i);
            for k in 0..10 {
                let t = -0.5 + 1.2 * k as f64 / 9.0;
                let v = f.eval(&x, t);
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        assert!((r.lo - lo).abs() < 1e-12 && (r.hi - hi).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn clip_is_constant_outside(c in 0.1f64..20.0, x0 in -1.0f64..1.0) {
            let f = RhsSpec::parse("(add (pow t 3) (exp t) x0)").unwrap().clipped(c);
            let top = f.eval(&[x0], c);
            let bottom = f.eval(&[x0], -c);
            for k in [1.0, 2.0, 10.0] {
                prop_assert_eq!(f.eval(&[x0], k * c), top);
                prop_assert_eq!(f.eval(&[x0], -k * c), bottom);
            }
        }

        #[test]
        fn interval_range_contains_samples(lo in -5.0f64..5.0, w in 0.0f64..4.0, g in 0.5f64..3.0) {
            let d = square();
            let f = RhsSpec::parse(&format!("(mul 2 (cospow t {g}))")).unwrap();
            let r = rhs_range(&f, &d, lo, lo + w).unwrap();
            for k in 0..=50 {
                let t = lo + w * k as f64 / 50.0;
                let v = f.eval(&[0.5, 0.5], t);
                prop_assert!(v >= r.lo - 1e-12 && v <= r.hi + 1e-12);
            }
        }

        #[test]
        fn eval_is_deterministic_and_finite(t in -1e3f64..1e3) {
            let f = RhsSpec::parse("(add (neg (exp t)) (pow t 5) (cospow t 2))").unwrap();
            let (a, _) = f.eval_flagged(&[0.0, 0.0], t);
            let (b, _) = f.eval_flagged(&[0.0, 0.0], t);
            prop_assert!(a.is_finite());
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
