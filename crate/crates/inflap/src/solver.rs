//! Gauss–Seidel Dirichlet solves, the upward Perron iteration and the blow-up probe.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::domain::GridDomain;
use crate::error::{Error, Result};
use crate::field::{BoundaryTrace, ScalarField};
use crate::rhs::{Monotone, RhsSpec};
use crate::scheme::{build_stencil, Local, SchemeParams, Stencil};

const MAX_DOUBLINGS: usize = 60;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepOrder {
    Lexicographic,
    /// Even coordinate parity first, then odd.
    RedBlack,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveOptions {
    pub max_sweeps: usize,
    /// Residual sup-norm target; `None` means `1e-8 (1 + ‖b‖∞)`.
    pub tol: Option<f64>,
    /// Damping of Picard updates; `None` means 1 for nondecreasing `f`, 0.5 otherwise.
    pub damping: Option<f64>,
    pub order: SweepOrder,
    pub alarm_bound: Option<f64>,
    /// Over-relaxation for Dirichlet solves with nondecreasing `f`; `None`
    /// picks `2/(1 + sin(π/n))` from the longest grid extent, `Some(1.0)` disables it.
    pub relaxation: Option<f64>,
    pub scheme: SchemeParams,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            max_sweeps: 100_000,
            tol: None,
            damping: None,
            order: SweepOrder::Lexicographic,
            alarm_bound: None,
            relaxation: None,
            scheme: SchemeParams::default(),
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_sweeps == 0 {
            return Err(Error::Parameter("max_sweeps must be at least 1".into()));
        }
        if let Some(t) = self.tol {
            if !(t > 0.0) {
                return Err(Error::Parameter("tol must be positive".into()));
            }
        }
        if let Some(th) = self.damping {
            if !(th > 0.0 && th <= 1.0) {
                return Err(Error::Parameter("damping must lie in (0, 1]".into()));
            }
        }
        if let Some(w) = self.relaxation {
            if !(1.0..2.0).contains(&w) {
                return Err(Error::Parameter("relaxation must lie in [1, 2)".into()));
            }
        }
        self.scheme.validate()
    }

    pub fn tol_for(&self, b: &BoundaryTrace) -> f64 {
        self.tol.unwrap_or(1e-8 * (1.0 + b.sup_abs()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    MaxSweepsReached,
    DivergedPastAlarm,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub status: Status,
    pub sweeps: usize,
    /// Sweeps spent on the `f ≡ 0` warm start.
    pub warmup_sweeps: usize,
    pub residual: f64,
    pub tol: f64,
    pub sup: f64,
    pub inf: f64,
    /// Whether every update was nondecreasing.
    pub monotone: bool,
    /// Interior nodes pinned at the super-solution at the end.
    pub clipped: usize,
    pub saturated: bool,
}

impl SolveReport {
    pub fn converged(&self) -> bool {
        self.status == Status::Converged
    }

    pub fn to_json(&self) -> serde_json::Value {
        use crate::fmt::json_num;
        let mut m = serde_json::Map::new();
        m.insert("status".into(), serde_json::to_value(self.status).expect("plain enum"));
        m.insert("sweeps".into(), self.sweeps.into());
        m.insert("warmup_sweeps".into(), self.warmup_sweeps.into());
        m.insert("residual".into(), json_num(self.residual));
        m.insert("tol".into(), json_num(self.tol));
        m.insert("sup".into(), json_num(self.sup));
        m.insert("inf".into(), json_num(self.inf));
        m.insert("monotone".into(), self.monotone.into());
        m.insert("clipped".into(), self.clipped.into());
        m.insert("saturated".into(), self.saturated.into());
        serde_json::Value::Object(m)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Kind {
    /// `f` independent of `t`: root of `L(t) = f(x)`.
    Frozen,
    /// `f` nondecreasing in `t`: unique root of `L(t) − f(x, t)`.
    Root,
    /// Otherwise: `t ← t + θ (L⁻¹(f(x, t)) − t)`.
    Picard,
}

struct Updater<'a> {
    s: &'a Stencil,
    f: &'a RhsSpec,
    kind: Kind,
    theta: f64,
    xs: Vec<f64>,
    fixed: Vec<f64>,
    dim: usize,
}

impl<'a> Updater<'a> {
    fn new(s: &'a Stencil, f: &'a RhsSpec, opts: &SolveOptions) -> Result<Updater<'a>> {
        let d = s.domain();
        let traits = f.traits(d)?;
        let kind = if !traits.depends_on_t {
            Kind::Frozen
        } else if traits.monotone == Monotone::Nondecreasing {
            Kind::Root
        } else {
            Kind::Picard
        };
        let theta = opts.damping.unwrap_or(if kind == Kind::Picard { 0.5 } else { 1.0 });
        let dim = d.dim();
        let mut xs = vec![0.0; dim * d.len()];
        for i in d.non_exterior() {
            d.point_into(i, &mut xs[i * dim..(i + 1) * dim]);
        }
        let mut fixed = Vec::new();
        if kind == Kind::Frozen {
            fixed = vec![0.0; d.len()];
            for &i in d.interior() {
                fixed[i] = f.eval(&xs[i * dim..(i + 1) * dim], 0.0);
            }
        }
        Ok(Updater { s, f, kind, theta, xs, fixed, dim })
    }

    fn x(&self, i: usize) -> &[f64] {
        &self.xs[i * self.dim..(i + 1) * self.dim]
    }

    fn f_at(&self, i: usize, t: f64, sat: &mut bool) -> f64 {
        if self.kind == Kind::Frozen {
            return self.fixed[i];
        }
        let (v, s) = self.f.eval_flagged(self.x(i), t);
        *sat |= s;
        v
    }

    /// New value at `i` given the current field.
    fn update(&self, values: &[f64], i: usize, sat: &mut bool) -> Result<f64> {
        let loc = self.s.gather(values, i);
        let t_old = values[i];
        let scale = (loc.max() - loc.min()).max(1.0);
        match self.kind {
            Kind::Frozen => invert(&loc, self.s, self.fixed[i], t_old, scale),
            Kind::Root => {
                let mut flag = false;
                let r = root_newton(
                    |t| {
                        let (l, dl) = loc.eval_slope(self.s, t);
                        (l - self.f_at(i, t, &mut flag), dl)
                    },
                    t_old,
                    scale,
                    local_xtol(&loc),
                );
                *sat |= flag;
                r
            }
            Kind::Picard => {
                let y = self.f_at(i, t_old, sat);
                let t1 = invert(&loc, self.s, y, t_old, scale)?;
                Ok(t_old + self.theta * (t1 - t_old))
            }
        }
    }

    fn residual_at(&self, values: &[f64], i: usize, sat: &mut bool) -> f64 {
        let loc = self.s.gather(values, i);
        loc.eval(self.s, values[i]) - self.f_at(i, values[i], sat)
    }
}

fn local_xtol(loc: &Local) -> f64 {
    4.0 * f64::EPSILON * loc.max().abs().max(loc.min().abs())
}

/// `t` with `L(t) = y`.
fn invert(loc: &Local, s: &Stencil, y: f64, start: f64, scale: f64) -> Result<f64> {
    root_newton(
        |t| {
            let (l, dl) = loc.eval_slope(s, t);
            (l - y, dl)
        },
        start,
        scale,
        local_xtol(loc),
    )
}

/// Root of a nonincreasing function given with a slope estimate: Newton steps
/// from `start`, capped while only one side of the root is known, then kept
/// inside the bracket with bisection as fallback. Stops once a step or the
/// bracket is below `xtol`.
pub fn root_newton(mut phi: impl FnMut(f64) -> (f64, f64), start: f64, scale: f64, xtol: f64) -> Result<f64> {
    let mut a: Option<f64> = None;
    let mut b: Option<f64> = None;
    let mut x = start;
    let mut cap = scale;
    let mut expansions = 0;
    for it in 0..400 {
        let (fx, dx) = phi(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fx.is_nan() {
            return Err(Error::NonFinite(format!("local equation at t = {x}")));
        }
        if fx > 0.0 {
            a = Some(x);
        } else {
            b = Some(x);
        }
        let newton = if dx < 0.0 { x - fx / dx } else { f64::NAN };
        let stop = xtol.max(2.0 * f64::EPSILON * x.abs());
        if (newton - x).abs() <= stop {
            return Ok(newton);
        }
        let next = match (a, b) {
            (Some(lo), Some(hi)) => {
                if hi - lo <= xtol.max(2.0 * f64::EPSILON * lo.abs().max(hi.abs())) {
                    return Ok(x);
                }
                if it < 100 && newton > lo && newton < hi {
                    newton
                } else {
                    0.5 * (lo + hi)
                }
            }
            (Some(lo), None) => {
                expansions += 1;
                let c = if newton > lo { newton.min(lo + cap) } else { lo + cap };
                cap *= 2.0;
                c
            }
            (None, Some(hi)) => {
                expansions += 1;
                let c = if newton < hi { newton.max(hi - cap) } else { hi - cap };
                cap *= 2.0;
                c
            }
            (None, None) => unreachable!(),
        };
        if expansions > MAX_DOUBLINGS + 40 {
            return Err(Error::Bracket(MAX_DOUBLINGS));
        }
        if (next - x).abs() <= stop {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

/// Root of a nonincreasing function, bracketed from `[lo, hi]` by doubling
/// expansion and refined by Illinois steps interleaved with bisection.
pub fn root_decreasing(mut phi: impl FnMut(f64) -> f64, lo: f64, hi: f64) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    let mut fa = phi(a);
    let mut fb = phi(b);
    let mut grow = (b - a).max(1.0);
    let mut n = 0;
    while fa < 0.0 {
        n += 1;
        if n > MAX_DOUBLINGS {
            return Err(Error::Bracket(MAX_DOUBLINGS));
        }
        b = a;
        fb = fa;
        a -= grow;
        grow *= 2.0;
        fa = phi(a);
    }
    let mut n = 0;
    let mut grow = (b - a).max(1.0);
    while fb > 0.0 {
        n += 1;
        if n > MAX_DOUBLINGS {
            return Err(Error::Bracket(MAX_DOUBLINGS));
        }
        a = b;
        fa = fb;
        b += grow;
        grow *= 2.0;
        fb = phi(b);
    }
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    let mut side = 0i8;
    for it in 0..400 {
        let width = b - a;
        if width <= 2.0 * f64::EPSILON * a.abs().max(b.abs()) || width <= f64::MIN_POSITIVE {
            break;
        }
        let mut c = if it % 3 == 2 { 0.5 * (a + b) } else { (a * fb - b * fa) / (fb - fa) };
        if !(c > a && c < b) {
            c = 0.5 * (a + b);
            if !(c > a && c < b) {
                break;
            }
        }
        let fc = phi(c);
        if fc == 0.0 {
            return Ok(c);
        }
        if fc > 0.0 {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        } else {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        }
    }
    Ok(if fa.abs() <= fb.abs() { a } else { b })
}

#[derive(Clone, Copy, PartialEq)]
enum Mode<'a> {
    Dirichlet,
    Perron { cap: Option<&'a [f64]> },
}

fn sweep_order(d: &GridDomain, order: SweepOrder) -> Vec<usize> {
    match order {
        SweepOrder::Lexicographic => d.interior().to_vec(),
        SweepOrder::RedBlack => {
            let parity = |i: usize| d.coords(i).iter().sum::<isize>().rem_euclid(2);
            let mut v: Vec<usize> = d.interior().iter().cloned().filter(|i| parity(*i) == 0).collect();
            v.extend(d.interior().iter().cloned().filter(|i| parity(*i) == 1));
            v
        }
    }
}

fn auto_relaxation(d: &GridDomain) -> f64 {
    let n = *d.dims().iter().max().unwrap() as f64;
    2.0 / (1.0 + (std::f64::consts::PI / n).sin())
}

fn iterate(
    s: &Stencil,
    f: &RhsSpec,
    b: &BoundaryTrace,
    mut values: Vec<f64>,
    opts: &SolveOptions,
    mode: Mode,
) -> Result<(Vec<f64>, SolveReport)> {
    let d = s.domain().clone();
    let up = Updater::new(s, f, opts)?;
    let tol = opts.tol_for(b);
    for (k, &i) in d.boundary().iter().enumerate() {
        values[i] = b.values()[k];
    }
    let order = sweep_order(&d, opts.order);
    let mut omega = match (mode, up.kind) {
        (Mode::Dirichlet, Kind::Root | Kind::Frozen) => opts.relaxation.unwrap_or_else(|| auto_relaxation(&d)),
        _ => 1.0,
    };
    let mut clipped = vec![false; d.len()];
    let mut sat = false;
    let mut monotone = true;
    let residual = |values: &[f64], clipped: &[bool], sat: &mut bool| -> f64 {
        d.interior()
            .iter()
            .filter(|i| !clipped[**i])
            .map(|&i| up.residual_at(values, i, sat).abs())
            .fold(0.0, f64::max)
    };
    let mut res = residual(&values, &clipped, &mut sat);
    let mut best = (res, values.clone());
    let mut since_best = 0usize;
    let patience = 4 * *d.dims().iter().max().unwrap() + 50;
    let mut status = Status::MaxSweepsReached;
    let mut sweeps = 0;
    if !res.is_finite() {
        return Err(Error::NonFinite("initial residual".into()));
    }
    if res <= tol {
        status = Status::Converged;
    }
    let alarm = opts.alarm_bound.unwrap_or(f64::INFINITY);
    'outer: while status != Status::Converged && sweeps < opts.max_sweeps {
        sweeps += 1;
        for &i in &order {
            let t_old = values[i];
            let t_new = up.update(&values, i, &mut sat)?;
            let v = match mode {
                Mode::Dirichlet => t_old + omega * (t_new - t_old),
                Mode::Perron { cap } => {
                    let mut v = t_new.max(t_old);
                    clipped[i] = false;
                    if let Some(cap) = cap {
                        if v >= cap[i] {
                            clipped[i] = v > cap[i];
                            v = cap[i];
                        }
                    }
                    v
                }
            };
            if v.abs() > alarm || (opts.alarm_bound.is_some() && !v.is_finite()) {
                values[i] = if v.is_finite() { v } else { alarm.copysign(v) };
                status = Status::DivergedPastAlarm;
                res = residual(&values, &clipped, &mut sat);
                break 'outer;
            }
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("update at node {i}")));
            }
            if v < t_old {
                monotone = false;
            }
            values[i] = v;
        }
        res = residual(&values, &clipped, &mut sat);
        if res <= tol {
            status = Status::Converged;
            break;
        }
        if mode == Mode::Dirichlet && omega > 1.0 {
            if res < best.0 {
                best = (res, values.clone());
                since_best = 0;
            } else {
                since_best += 1;
                if !res.is_finite() || res > 1e3 * best.0 || since_best > patience {
                    omega = 1.0 + 0.5 * (omega - 1.0);
                    if omega < 1.01 {
                        omega = 1.0;
                    }
                    values.copy_from_slice(&best.1);
                    since_best = 0;
                }
            }
        }
    }
    let field_sup = d.non_exterior().map(|i| values[i]).fold(f64::NEG_INFINITY, f64::max);
    let field_inf = d.non_exterior().map(|i| values[i]).fold(f64::INFINITY, f64::min);
    let report = SolveReport {
        status,
        sweeps,
        warmup_sweeps: 0,
        residual: res,
        tol,
        sup: field_sup,
        inf: field_inf,
        monotone,
        clipped: d.interior().iter().filter(|i| clipped[**i]).count(),
        saturated: sat,
    };
    Ok((values, report))
}

fn check_trace(d: &GridDomain, b: &BoundaryTrace) -> Result<()> {
    if b.values().len() != d.boundary().len() {
        return Err(Error::Parameter("boundary trace does not match the domain".into()));
    }
    Ok(())
}

/// One local update at an interior node of `u`.
pub fn local_update(node: usize, u: &ScalarField, f: &RhsSpec, s: &Stencil, _p: &SchemeParams) -> Result<f64> {
    let up = Updater::new(s, f, &SolveOptions::default())?;
    let mut sat = false;
    up.update(u.values(), node, &mut sat)
}

/// Dirichlet solve warm-started from the `f ≡ 0` solution.
pub fn solve_dirichlet(d: &Arc<GridDomain>, f: &RhsSpec, b: &BoundaryTrace, opts: &SolveOptions) -> Result<(ScalarField, SolveReport)> {
    opts.validate()?;
    check_trace(d, b)?;
    let s = build_stencil(d, opts.scheme.width)?;
    let mid = 0.5 * (b.lo() + b.hi());
    let zero = RhsSpec::constant(0.0);
    let (warm, wrep) = iterate(&s, &zero, b, vec![mid; d.len()], opts, Mode::Dirichlet)?;
    let (values, mut rep) = iterate(&s, f, b, warm, opts, Mode::Dirichlet)?;
    rep.warmup_sweeps = wrep.sweeps;
    Ok((finish(d, values)?, rep))
}

/// Dirichlet solve from a given initial field (boundary values are overwritten by `b`).
pub fn solve_dirichlet_from(
    f: &RhsSpec,
    b: &BoundaryTrace,
    init: &ScalarField,
    opts: &SolveOptions,
) -> Result<(ScalarField, SolveReport)> {
    opts.validate()?;
    let d = init.domain();
    check_trace(d, b)?;
    let s = build_stencil(d, opts.scheme.width)?;
    let (values, rep) = iterate(&s, f, b, init.values().to_vec(), opts, Mode::Dirichlet)?;
    Ok((finish(d, values)?, rep))
}

fn finish(d: &Arc<GridDomain>, values: Vec<f64>) -> Result<ScalarField> {
    ScalarField::from_values(d, values)
}

/// Upward monotone iteration from `sub`, clipped at `sup`.
pub fn perron_solve(
    f: &RhsSpec,
    b: &BoundaryTrace,
    sub: &ScalarField,
    sup: &ScalarField,
    opts: &SolveOptions,
) -> Result<(ScalarField, SolveReport)> {
    opts.validate()?;
    sub.ensure_same_domain(sup)?;
    let d = sub.domain();
    check_trace(d, b)?;
    let slack = |v: f64| 1e-12 * (1.0 + v.abs());
    for i in d.non_exterior() {
        if sub.get(i) > sup.get(i) + slack(sup.get(i)) {
            return Err(Error::Ordering(format!(
                "sub {} exceeds super {} at node {i}",
                sub.get(i),
                sup.get(i)
            )));
        }
    }
    for (k, &i) in d.boundary().iter().enumerate() {
        let bv = b.values()[k];
        if sub.get(i) > bv + slack(bv) || bv > sup.get(i) + slack(bv) {
            return Err(Error::Ordering(format!("boundary value {bv} not between sub and super at node {i}")));
        }
    }
    let s = build_stencil(d, opts.scheme.width)?;
    let (values, rep) = iterate(&s, f, b, sub.values().to_vec(), opts, Mode::Perron { cap: Some(sup.values()) })?;
    Ok((finish(d, values)?, rep))
}

/// Upward iteration from the constant `inf b` with no super-solution; reports
/// `DivergedPastAlarm` when the iterate leaves the alarm bound.
pub fn probe_nonexistence(d: &Arc<GridDomain>, f: &RhsSpec, b: &BoundaryTrace, opts: &SolveOptions) -> Result<SolveReport> {
    opts.validate()?;
    check_trace(d, b)?;
    if opts.alarm_bound.is_none() {
        return Err(Error::Parameter("probe needs an alarm bound".into()));
    }
    let s = build_stencil(d, opts.scheme.width)?;
    let (_, rep) = iterate(&s, f, b, vec![b.lo(); d.len()], opts, Mode::Perron { cap: None })?;
    Ok(rep)
}
