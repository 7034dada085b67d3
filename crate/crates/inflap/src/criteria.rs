//! Closed-form existence and non-existence thresholds, decided on finite probe
//! schedules and collected into a JSON report.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::domain::{distance_transform, GridDomain};
use crate::error::{Error, Result};
use crate::field::{BoundaryTrace, ScalarField};
use crate::fmt::{json_num, json_opt};
use crate::radial::{cone_field, cumulative_h, zeta, MonotoneRhs1D, Orientation, Prefactor};
use crate::rhs::{rhs_range, Expr, RhsSpec, Sign, SATURATION};
use crate::{SIGMA, SIGMA_CUBED};

/// Probe schedules. Every field has a documented default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CriteriaConfig {
    /// Search window for `η` in the small-diameter threshold.
    pub eta_min: f64,
    pub eta_max: f64,
    /// `η` values listed in the `C(η)` table.
    pub c_eta_table: Vec<f64>,
    /// Growth probes at `t = 10^j`, `j = 0..=growth_decades`.
    pub growth_decades: u32,
    /// Number of `α` levels `1/n, 2/n, …, 1` in the eigenvalue bracket.
    pub alpha_levels: u32,
    /// `ζ(a)` is probed at `a = ℓ + 10^{k/zeta_per_decade}` for `|k/zeta_per_decade| ≤ zeta_decades`.
    pub zeta_decades: u32,
    pub zeta_per_decade: u32,
}

impl Default for CriteriaConfig {
    fn default() -> Self {
        CriteriaConfig {
            eta_min: 1e-6,
            eta_max: 1e3,
            c_eta_table: vec![0.5, 1.0, 2.0, 3.0, 5.0, 10.0],
            growth_decades: 6,
            alpha_levels: 20,
            zeta_decades: 6,
            zeta_per_decade: 4,
        }
    }
}

impl CriteriaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta_min > 0.0 && self.eta_min < self.eta_max && self.eta_max.is_finite()) {
            return Err(Error::Parameter("need 0 < eta_min < eta_max < ∞".into()));
        }
        if self.c_eta_table.iter().any(|e| !(*e >= 0.0)) {
            return Err(Error::Parameter("c_eta_table entries must be ≥ 0".into()));
        }
        if self.alpha_levels == 0 || self.zeta_per_decade == 0 {
            return Err(Error::Parameter("alpha_levels and zeta_per_decade must be positive".into()));
        }
        Ok(())
    }
}

/// Three-valued outcome of a finite probe.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TriState {
    Yes,
    No,
    Undetermined,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CEta {
    pub value: f64,
    /// The underlying range was sampled rather than enclosed exactly.
    pub estimate: bool,
}

/// `C(η) = max{(sup_{Ω×[ℓ−η,ℓ]} f⁺)^{1/3}, (−inf_{Ω×[L,L+η]} f⁻)^{1/3}}`.
pub fn c_eta(f: &RhsSpec, d: &GridDomain, ell: f64, big_l: f64, eta: f64) -> Result<CEta> {
    if !(eta >= 0.0) {
        return Err(Error::Parameter(format!("η must be ≥ 0, got {eta}")));
    }
    let lo = rhs_range(f, d, ell - eta, ell)?;
    let hi = rhs_range(f, d, big_l, big_l + eta)?;
    let a = lo.hi.max(0.0).cbrt();
    let b = (-hi.lo.min(0.0)).cbrt();
    Ok(CEta { value: a.max(b), estimate: lo.estimate || hi.estimate })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiamThreshold {
    /// `sup_η (η/(σC(η)))^{3/4}`; `+∞` when `C` vanishes at a probed `η`.
    pub value: f64,
    /// Maximising `η` (the smallest probed `η` with `C(η) = 0` in the infinite case).
    pub eta: f64,
    pub c: f64,
    pub estimate: bool,
}

/// Golden-section maximisation of `(η/(σC(η)))^{3/4}` over `log η`.
pub fn diam_threshold(f: &RhsSpec, d: &GridDomain, ell: f64, big_l: f64, cfg: &CriteriaConfig) -> Result<DiamThreshold> {
    cfg.validate()?;
    let mut estimate = false;
    let mut obj = |s: f64| -> Result<(f64, f64)> {
        let eta = s.exp();
        let c = c_eta(f, d, ell, big_l, eta)?;
        estimate |= c.estimate;
        if c.value == 0.0 {
            return Ok((f64::INFINITY, 0.0));
        }
        Ok(((eta / (SIGMA * c.value)).powf(0.75), c.value))
    };
    let (s0, s1) = (cfg.eta_min.ln(), cfg.eta_max.ln());
    let n = 8 * ((s1 - s0) / std::f64::consts::LN_10).ceil().max(1.0) as usize;
    let grid: Vec<f64> = (0..=n).map(|k| s0 + (s1 - s0) * k as f64 / n as f64).collect();
    let mut vals = Vec::with_capacity(grid.len());
    for &s in &grid {
        let (v, c) = obj(s)?;
        if v.is_infinite() {
            return Ok(DiamThreshold { value: f64::INFINITY, eta: s.exp(), c, estimate });
        }
        vals.push(v);
    }
    let k = (0..vals.len()).max_by(|a, b| vals[*a].total_cmp(&vals[*b])).unwrap();
    let (mut a, mut b) = (grid[k.saturating_sub(1)], grid[(k + 1).min(n)]);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let mut f1 = obj(x1)?.0;
    let mut f2 = obj(x2)?.0;
    for _ in 0..200 {
        if b - a < 1e-12 {
            break;
        }
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = obj(x2)?.0;
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = obj(x1)?.0;
        }
    }
    let (mut s, mut v) = (grid[k], vals[k]);
    for (x, fx) in [(x1, f1), (x2, f2)] {
        if fx > v {
            s = x;
            v = fx;
        }
    }
    let (_, c) = obj(s)?;
    Ok(DiamThreshold { value: v, eta: s.exp(), c, estimate })
}

/// Sub- and super-solution cones for the small-diameter existence theorem,
/// both with vertex at the first boundary node.
pub fn small_diameter_barriers(
    f: &RhsSpec,
    d: &Arc<GridDomain>,
    b: &BoundaryTrace,
    cfg: &CriteriaConfig,
) -> Result<(ScalarField, ScalarField)> {
    let (ell, big_l) = (b.lo(), b.hi());
    let th = diam_threshold(f, d, ell, big_l, cfg)?;
    let z = d.point(d.boundary()[0]);
    let reach = d
        .non_exterior()
        .map(|i| d.point(i).iter().zip(&z).map(|(a, c)| (a - c) * (a - c)).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    if th.c == 0.0 {
        return Ok((ScalarField::constant(d, ell), ScalarField::constant(d, big_l)));
    }
    if !(reach < th.value) {
        return Err(Error::Geometry(format!(
            "node spread {reach} is not below the diameter threshold {}",
            th.value
        )));
    }
    let c = th.c;
    let k = SIGMA * reach.powf(4.0 / 3.0);
    let sub = cone_field(d, c, &z, ell / c - k, Orientation::Sub);
    let sup = cone_field(d, c, &z, big_l / c + k, Orientation::Super);
    Ok((sub, sup))
}

/// Result of the `M_f` probe.
#[derive(Clone, Debug, PartialEq)]
pub struct Nonexistence {
    /// Estimate of `sup_a ζ(a)`, `+∞` when the tail could not be certified.
    pub m_f: f64,
    /// `M_f/√2`.
    pub radius: f64,
    pub argmax: f64,
    pub tail_certified: bool,
}

/// Probes `ζ(a)` (prefactor 1) on a log grid and certifies the tail with the
/// upper bound `(4/3)((a−ℓ)⁴/H(a))^{1/4}`: the tail counts as certified when that
/// bound is non-increasing, or flat to `1e−3`, over the last probed decade, and
/// `ζ` increases over the first probed decade. The scan stops where `H` nears
/// saturation. The sampled maximum is then refined.
pub fn nonexistence_radius(m: &MonotoneRhs1D, cfg: &CriteriaConfig) -> Result<Nonexistence> {
    cfg.validate()?;
    if !m.positive() {
        return Err(Error::SingularIntegral("h vanishes above ℓ".into()));
    }
    let p = cfg.zeta_per_decade as i64;
    let kmax = cfg.zeta_decades as i64 * p;
    let mut best = (0.0f64, m.ell());
    let mut uppers = Vec::new();
    let mut head = Vec::new();
    let mut complete = true;
    for k in -kmax..=kmax {
        let a = m.ell() + 10f64.powf(k as f64 / p as f64);
        let z = match zeta(m, a, Prefactor::One) {
            Ok(z) => z,
            Err(_) => {
                complete = false;
                break;
            }
        };
        if head.len() <= p as usize {
            head.push(z);
        }
        if z > best.0 {
            best = (z, a);
        }
        let big_h = cumulative_h(m, a)?;
        if big_h >= 1e-10 * SATURATION {
            break;
        }
        uppers.push(4.0 / 3.0 * ((a - m.ell()).powi(4) / big_h).powf(0.25));
    }
    let tail: &[f64] = if uppers.len() > p as usize { &uppers[uppers.len() - 1 - p as usize..] } else { &[] };
    let certified = complete
        && !tail.is_empty()
        && head.windows(2).all(|w| w[1] >= w[0])
        && tail.iter().all(|v| v.is_finite())
        && (tail.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)) || {
            let (lo, hi) = tail.iter().fold((f64::INFINITY, 0.0f64), |(l, h), v| (l.min(*v), h.max(*v)));
            hi <= lo * (1.0 + 1e-3)
        });
    if !certified {
        return Ok(Nonexistence { m_f: f64::INFINITY, radius: f64::INFINITY, argmax: best.1, tail_certified: false });
    }
    // Golden-section refinement of the sampled maximum in log(a − ℓ).
    let ell = m.ell();
    let zs = |s: f64| zeta(m, ell + 10f64.powf(s), Prefactor::One).unwrap_or(0.0);
    let s_best = (best.1 - ell).log10();
    let step = 1.0 / p as f64;
    let (mut lo, mut hi) = (s_best - step, s_best + step);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut x1, mut x2) = (hi - g * (hi - lo), lo + g * (hi - lo));
    let (mut f1, mut f2) = (zs(x1), zs(x2));
    for _ in 0..40 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = zs(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = zs(x1);
        }
    }
    for (x, fx) in [(x1, f1), (x2, f2)] {
        if fx > best.0 {
            best = (fx, ell + 10f64.powf(x));
        }
    }
    let m_f = best.0.max(*uppers.last().unwrap());
    Ok(Nonexistence { m_f, radius: m_f / std::f64::consts::SQRT_2, argmax: best.1, tail_certified: true })
}

/// Outcome of the integral-condition probes for `Δ∞u = −f`, `f ≥ 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Dd3 {
    /// Integrability of `H₁^{−1/4}` near `ℓ`.
    pub cond_i: TriState,
    /// `h₂(t) = o(t³)`.
    pub cond_ii: TriState,
}

/// Probes the two integral conditions on `f ≥ 0` (the right-hand side of
/// `Δ∞u = −f`). `h₁(t)` is the infimum of `f` over `Ω × [t, ℓ + 10³]`.
pub fn dd3_check(f: &RhsSpec, d: &GridDomain, ell: f64) -> Result<Dd3> {
    let far = ell + 1e3;
    let h1 = |t: f64| -> Result<f64> { Ok(rhs_range(f, d, t, far)?.lo.max(0.0)) };
    // Left-endpoint sums on a grid graded toward ℓ bound ∫ H₁^{−1/4} from above.
    let per = 8usize;
    let decades = 12usize;
    let g: Vec<f64> = (0..=decades * per).map(|j| ell + 10f64.powf(-(decades as f64) + j as f64 / per as f64)).collect();
    let mut big_h = h1(ell)? * (g[0] - ell);
    let mut pieces = Vec::with_capacity(g.len() - 1);
    for j in 0..g.len() - 1 {
        let w = g[j + 1] - g[j];
        pieces.push(w * big_h.powf(-0.25));
        big_h += h1(g[j])? * w;
    }
    let sums: Vec<f64> = pieces.chunks(per).map(|c| c.iter().sum()).collect();
    // sums[0] is closest to ℓ; skip the two decades nearest ℓ where the running sum is crude.
    let near: Vec<f64> = sums[2..].iter().rev().cloned().collect();
    let cond_i = if near.iter().all(|v| v.is_finite())
        && near.windows(2).rev().take(5).all(|w| w[1] < 0.999 * w[0])
    {
        TriState::Yes
    } else {
        TriState::Undetermined
    };
    let mut q = Vec::new();
    let mut saturated = false;
    for j in 1..=6 {
        let t = 10f64.powi(j);
        if t <= ell {
            continue;
        }
        let r = rhs_range(f, d, ell, t)?;
        saturated |= r.saturated || r.hi >= SATURATION;
        q.push(r.hi / (t * t * t));
    }
    let cond_ii = if saturated {
        TriState::No
    } else if q.len() < 2 {
        TriState::Undetermined
    } else if q.windows(2).all(|w| w[1] < w[0]) && *q.last().unwrap() < 1e-3 {
        TriState::Yes
    } else if q.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-12)) && *q.last().unwrap() > 0.0 {
        TriState::No
    } else {
        TriState::Undetermined
    };
    Ok(Dd3 { cond_i, cond_ii })
}

/// `[ℓ − σ(h_hi⁺)^{1/3}R^{4/3}, L − σ(h_lo⁻)^{1/3}R^{4/3}]` for `Δ∞u = h(x)`, `h ∈ [h_lo, h_hi]`.
pub fn apriori_box(h_lo: f64, h_hi: f64, b: &BoundaryTrace, radius: f64) -> Result<(f64, f64)> {
    if !(h_lo <= h_hi) || !(radius >= 0.0) {
        return Err(Error::Parameter("need h_lo ≤ h_hi and R ≥ 0".into()));
    }
    let r = radius.powf(4.0 / 3.0);
    let lower = b.lo() - SIGMA * h_hi.max(0.0).cbrt() * r;
    let upper = b.hi() - SIGMA * h_lo.min(0.0).cbrt() * r;
    Ok((lower, upper))
}

#[derive(Clone, Debug, PartialEq)]
pub struct GrowthClass {
    /// `inf_Ω f(x, t)/t³` at the largest probe `t`.
    pub beta_est: f64,
    /// `sup_Ω f(x, t)/t³` at the most negative probe `t`.
    pub alpha_est: f64,
    pub t_alpha: Option<f64>,
    pub t_beta: Option<f64>,
    pub applicable: bool,
    /// `[2t_α, 2t_β]` when applicable.
    pub bounds: Option<(f64, f64)>,
}

/// Cubic-growth classification with `ε = (2σR^{4/3})^{−3}`: `t_β` is the smallest
/// probe above `max(0, L)` from which `inf_Ω f(x, s) ≥ −εs³` at every larger probe,
/// `t_α` the mirror image below `min(0, ℓ)`. The liminf ratios must be
/// nonnegative at the top probe, or below `10⁻³ε` in size and not growing.
pub fn growth_class(f: &RhsSpec, d: &GridDomain, ell: f64, big_l: f64, radius: f64, cfg: &CriteriaConfig) -> GrowthClass {
    let pts = f.probe_points(d);
    let inf_at = |t: f64| pts.iter().map(|x| f.eval(x, t)).fold(f64::INFINITY, f64::min);
    let sup_at = |t: f64| pts.iter().map(|x| f.eval(x, t)).fold(f64::NEG_INFINITY, f64::max);
    let top = 10f64.powi(cfg.growth_decades as i32);
    let beta_est = inf_at(top) / top.powi(3);
    let alpha_est = sup_at(-top) / (-top).powi(3);
    let eps = (2.0 * SIGMA * radius.powf(4.0 / 3.0)).powi(-3);
    let mut cand: Vec<f64> = f.lattice().t_values().into_iter().filter(|t| *t > 0.0).collect();
    cand.extend((0..=cfg.growth_decades).map(|j| 10f64.powi(j as i32)));
    cand.sort_by(f64::total_cmp);
    cand.dedup();
    let t_beta = {
        let c: Vec<f64> = cand.iter().cloned().filter(|t| *t > big_l.max(0.0)).collect();
        let mut first = None;
        for &t in c.iter().rev() {
            if inf_at(t) >= -eps * t * t * t {
                first = Some(t);
            } else {
                break;
            }
        }
        first
    };
    let t_alpha = {
        let c: Vec<f64> = cand.iter().map(|t| -t).filter(|t| *t < ell.min(0.0)).collect();
        let mut first = None;
        for &t in c.iter().rev() {
            if sup_at(t) <= -eps * t * t * t {
                first = Some(t);
            } else {
                break;
            }
        }
        first
    };
    // A negative ratio still counts when it is small and not growing.
    let tail_ok = |q: &dyn Fn(f64) -> f64| {
        let r: Vec<f64> = (0..3).map(|j| q(top / 10f64.powi(j))).collect();
        r[0].is_finite() && (r[0] >= 0.0 || (r[0].abs() < 1e-3 * eps && r[0].abs() <= r[1].abs().max(r[2].abs())))
    };
    let applicable = tail_ok(&|t: f64| inf_at(t) / t.powi(3))
        && tail_ok(&|t: f64| sup_at(-t) / (-t).powi(3))
        && t_alpha.is_some()
        && t_beta.is_some();
    let bounds = if applicable { Some((2.0 * t_alpha.unwrap(), 2.0 * t_beta.unwrap())) } else { None };
    GrowthClass { beta_est, alpha_est, t_alpha, t_beta, applicable, bounds }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CubicSmallness {
    /// `σ³ a_sup R⁴ < 1`.
    pub flag: bool,
    pub m_bound: Option<f64>,
    /// `b ≡ 0` and the flag holds: `u ≡ 0` is the only solution.
    pub only_zero: bool,
}

/// Smallness test for `Δ∞u = −a(x)u³`.
pub fn cubic_smallness(a_sup: f64, radius: f64, b: &BoundaryTrace) -> CubicSmallness {
    let flag = SIGMA_CUBED * a_sup * radius.powi(4) < 1.0;
    let m_bound = if flag {
        Some((-b.lo()).max(b.hi()) / (1.0 - SIGMA * a_sup.cbrt() * radius.powf(4.0 / 3.0)))
    } else {
        None
    };
    CubicSmallness { flag, m_bound, only_zero: flag && b.lo() == 0.0 && b.hi() == 0.0 }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenBracket {
    pub lower: f64,
    /// Valid only for positive eigenfunctions.
    pub upper: f64,
    pub sup_a: f64,
    pub alpha: f64,
    pub rho: f64,
}

/// Bracket for the principal value of `Δ∞u = −λa(x)u³`, `u = 0` on `∂Ω`. The level
/// sets `Ω_α = {a ≥ αM}` are taken non-strict so that `α = 1` is admissible.
pub fn eigen_bracket(a: &RhsSpec, d: &GridDomain, cfg: &CriteriaConfig) -> Result<EigenBracket> {
    cfg.validate()?;
    if a.depends_on_t() {
        return Err(Error::Parameter("the coefficient must not depend on t".into()));
    }
    let vals: Vec<(usize, f64)> = d.interior().iter().map(|&i| (i, a.eval(&d.point(i), 0.0))).collect();
    if vals.iter().any(|(_, v)| !(*v >= 0.0)) {
        return Err(Error::Parameter("the coefficient must be nonnegative".into()));
    }
    let m = vals.iter().map(|(_, v)| *v).fold(0.0, f64::max);
    if m == 0.0 {
        return Err(Error::Parameter("the coefficient vanishes on every interior node".into()));
    }
    let r = d.radii().out_radius;
    let lower = 1.0 / (SIGMA_CUBED * m * r.powi(4));
    let n = cfg.alpha_levels;
    let mut best = (f64::INFINITY, 1.0, 0.0);
    for k in 1..=n {
        let alpha = k as f64 / n as f64;
        let inside: Vec<usize> = vals.iter().filter(|(_, v)| *v >= alpha * m).map(|(i, _)| *i).collect();
        let rho = if inside.len() == vals.len() {
            d.radii().in_radius
        } else {
            let mut feature = vec![true; d.len()];
            for &i in &inside {
                feature[i] = false;
            }
            let dist = distance_transform(d.dims(), &feature);
            inside.iter().map(|&i| dist[i].sqrt() * d.h()).fold(0.0, f64::max)
        };
        if rho > 0.0 {
            let q = 1.0 / (alpha * rho.powi(4));
            if q < best.0 {
                best = (q, alpha, rho);
            }
        }
    }
    let upper = 256.0 / 27.0 / (SIGMA_CUBED * m) * best.0;
    debug_assert!(lower <= upper);
    Ok(EigenBracket { lower, upper, sup_a: m, alpha: best.1, rho: best.2 })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Applies,
    Fails,
    Undetermined,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    pub theorem: &'static str,
    pub status: Status,
    pub details: String,
}

/// Every threshold evaluated for one problem.
#[derive(Clone, Debug)]
pub struct CriteriaReport {
    pub ell: f64,
    pub big_l: f64,
    pub c_eta_table: Vec<(f64, CEta)>,
    pub diam_threshold: DiamThreshold,
    pub diam_actual: f64,
    pub nonexistence: Option<Nonexistence>,
    pub in_radius_actual: f64,
    pub out_radius_actual: f64,
    pub dd3: Option<Dd3>,
    pub growth: GrowthClass,
    pub apriori_box: Option<(f64, f64)>,
    pub cubic: Option<CubicSmallness>,
    pub eigen: Option<EigenBracket>,
    pub verdicts: Vec<Verdict>,
}

fn tri(t: TriState) -> &'static str {
    match t {
        TriState::Yes => "yes",
        TriState::No => "no",
        TriState::Undetermined => "undetermined",
    }
}

/// `h` for `Δ∞u = −h(u)` after flipping signs of `u` where needed, with its `ℓ`.
fn decreasing_envelope(f: &RhsSpec, b: &BoundaryTrace) -> Option<(MonotoneRhs1D, &'static str)> {
    if f.depends_on_x() || !f.depends_on_t() {
        return None;
    }
    if let Ok(m) = MonotoneRhs1D::new(f.negated(), b.lo()) {
        return Some((m, "h(t) = -f(t)"));
    }
    if let Ok(m) = MonotoneRhs1D::new(f.mirrored(), -b.hi()) {
        return Some((m, "h(t) = f(-t) for v = -u"));
    }
    None
}

/// Runs every criterion on `Δ∞u = f(x, u)` in `d` with data `b`.
pub fn evaluate(f: &RhsSpec, d: &Arc<GridDomain>, b: &BoundaryTrace, cfg: &CriteriaConfig) -> Result<CriteriaReport> {
    cfg.validate()?;
    let (ell, big_l) = (b.lo(), b.hi());
    let traits = f.traits(d)?;
    let mut verdicts = Vec::new();

    let mut c_eta_table = Vec::new();
    for &eta in &cfg.c_eta_table {
        c_eta_table.push((eta, c_eta(f, d, ell, big_l, eta)?));
    }

    let pts = f.probe_points(d);
    let mut ts: Vec<f64> = f.lattice().t_values();
    let near_max = ts.iter().fold(0.0f64, |a, t| a.max(t.abs()));
    let far: Vec<f64> = (0..=cfg.growth_decades).flat_map(|j| [10f64.powi(j as i32), -(10f64.powi(j as i32))]).collect();
    ts.extend(far.iter().cloned());
    let sup_near = pts
        .iter()
        .flat_map(|x| ts.iter().filter(|t| t.abs() <= near_max).map(move |t| f.eval(x, *t).abs()))
        .fold(0.0f64, f64::max);
    let sup_all = pts.iter().flat_map(|x| ts.iter().map(move |t| f.eval(x, *t).abs())).fold(0.0f64, f64::max);
    let bounded = sup_all.is_finite() && sup_all <= 2.0 * sup_near + 1.0;
    let monotone_status = if traits.nondecreasing() || bounded { Status::Applies } else { Status::Undetermined };
    verdicts.push(Verdict {
        theorem: "existence_monotone_or_bounded",
        status: monotone_status,
        details: format!(
            "nondecreasing in t: {}; probed sup|f| {:.6e} near, {:.6e} overall",
            traits.nondecreasing(),
            sup_near,
            sup_all
        ),
    });

    let th = diam_threshold(f, d, ell, big_l, cfg)?;
    let diam = d.diameter();
    verdicts.push(Verdict {
        theorem: "existence_small_diameter",
        status: if diam < th.value { Status::Applies } else { Status::Fails },
        details: format!(
            "diam {:.6e} vs threshold {:.6e} at eta {:.6e}{}",
            diam,
            th.value,
            th.eta,
            if th.estimate { " (sampled ranges)" } else { "" }
        ),
    });

    let r_in = d.radii().in_radius;
    let r_out = d.radii().out_radius;
    let mut nonexistence = None;
    match decreasing_envelope(f, b) {
        Some((m, how)) if m.positive() => {
            let ne = nonexistence_radius(&m, cfg)?;
            let status = if !ne.tail_certified {
                Status::Undetermined
            } else if r_in > ne.radius {
                Status::Applies
            } else {
                Status::Fails
            };
            verdicts.push(Verdict {
                theorem: "nonexistence_large_inradius",
                status,
                details: format!(
                    "{how}; in-radius {:.6e} vs M_f/sqrt2 {:.6e} (probe heuristic, tail certified: {})",
                    r_in, ne.radius, ne.tail_certified
                ),
            });
            nonexistence = Some(ne);
        }
        Some(_) => verdicts.push(Verdict {
            theorem: "nonexistence_large_inradius",
            status: Status::Fails,
            details: "h vanishes above its base level".into(),
        }),
        None => verdicts.push(Verdict {
            theorem: "nonexistence_large_inradius",
            status: Status::Undetermined,
            details: "needs f = f(t) with -f (or f(-t)) nonnegative and nondecreasing".into(),
        }),
    }

    let mut dd3 = None;
    let neg = f.negated();
    if let Ok(tr) = neg.traits(d) {
        if tr.sign == Sign::Nonneg {
            let c = dd3_check(&neg, d, ell)?;
            let positive = match MonotoneRhs1D::new(neg.clone(), ell) {
                Ok(m) => m.positive(),
                Err(_) => pts.iter().all(|x| f.lattice().t_values().iter().filter(|t| **t > 0.0).all(|t| neg.eval(x, ell + t) > 0.0)),
            };
            let status = match (c.cond_i, c.cond_ii) {
                (TriState::Yes, TriState::Yes) if positive => Status::Applies,
                (TriState::No, _) | (_, TriState::No) => Status::Fails,
                _ if !positive => Status::Fails,
                _ => Status::Undetermined,
            };
            verdicts.push(Verdict {
                theorem: "existence_integral_conditions",
                status,
                details: format!("cond_i {}, cond_ii {}, positivity {}", tri(c.cond_i), tri(c.cond_ii), positive),
            });
            dd3 = Some(c);
        }
    }
    if dd3.is_none() {
        verdicts.push(Verdict {
            theorem: "existence_integral_conditions",
            status: Status::Undetermined,
            details: "needs f ≤ 0".into(),
        });
    }

    let growth = growth_class(f, d, ell, big_l, r_out, cfg);
    let apriori = if !traits.depends_on_t {
        let r = rhs_range(f, d, 0.0, 0.0)?;
        Some(apriori_box(r.lo, r.hi, b, r_out)?)
    } else {
        growth.bounds
    };
    verdicts.push(Verdict {
        theorem: "apriori_bounds",
        status: if !traits.depends_on_t || growth.applicable { Status::Applies } else { Status::Undetermined },
        details: match apriori {
            Some((lo, hi)) => format!("box [{lo:.6e}, {hi:.6e}]"),
            None => format!("beta_est {:.6e}, alpha_est {:.6e}", growth.beta_est, growth.alpha_est),
        },
    });

    let mut cubic = None;
    let mut eigen = None;
    if let Some(a) = f.cubic_coefficient(d) {
        let a_sup = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let c = cubic_smallness(a_sup, r_out, b);
        verdicts.push(Verdict {
            theorem: "cubic_uniqueness",
            status: if c.only_zero { Status::Applies } else { Status::Fails },
            details: format!(
                "sigma^3 a_sup R^4 = {:.6e}; {}",
                SIGMA_CUBED * a_sup * r_out.powi(4),
                if c.only_zero { "u = 0 is the only solution" } else { "smallness or zero data missing" }
            ),
        });
        cubic = Some(c);
        if a.iter().all(|v| *v >= 0.0) && a_sup > 0.0 {
            let coef = f.with_expr(Expr::Neg(Box::new(f.expr().substitute_t(&Expr::Const(1.0)))));
            if let Ok(e) = eigen_bracket(&coef, d, cfg) {
                verdicts.push(Verdict {
                    theorem: "eigen_bracket",
                    status: Status::Applies,
                    details: format!(
                        "lambda in [{:.6e}, {:.6e}], upper bound assumes a positive eigenfunction",
                        e.lower, e.upper
                    ),
                });
                eigen = Some(e);
            }
        }
    }

    Ok(CriteriaReport {
        ell,
        big_l,
        c_eta_table,
        diam_threshold: th,
        diam_actual: diam,
        nonexistence,
        in_radius_actual: r_in,
        out_radius_actual: r_out,
        dd3,
        growth,
        apriori_box: apriori,
        cubic,
        eigen,
        verdicts,
    })
}

impl CriteriaReport {
    pub fn verdict(&self, theorem: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.theorem == theorem)
    }

    pub fn to_json(&self) -> Value {
        let c_eta: Vec<Value> = self
            .c_eta_table
            .iter()
            .map(|(e, c)| json!({"eta": json_num(*e), "c": json_num(c.value), "estimate": c.estimate}))
            .collect();
        let verdicts: Vec<Value> = self
            .verdicts
            .iter()
            .map(|v| json!({"theorem": v.theorem, "status": v.status, "details": v.details}))
            .collect();
        json!({
            "boundary": {"l": json_num(self.ell), "L": json_num(self.big_l)},
            "c_eta": c_eta,
            "diam_threshold": {
                "value": json_num(self.diam_threshold.value),
                "eta": json_num(self.diam_threshold.eta),
                "estimate": self.diam_threshold.estimate,
                "diam_actual": json_num(self.diam_actual),
            },
            "nonexistence": self.nonexistence.as_ref().map(|n| json!({
                "m_f": json_num(n.m_f),
                "radius": json_num(n.radius),
                "argmax": json_num(n.argmax),
                "tail_certified": n.tail_certified,
                "in_radius_actual": json_num(self.in_radius_actual),
            })).unwrap_or(json!({"in_radius_actual": json_num(self.in_radius_actual)})),
            "dd3": self.dd3.map(|c| json!({"cond_i": tri(c.cond_i), "cond_ii": tri(c.cond_ii)})).unwrap_or(Value::Null),
            "growth": {
                "beta_est": json_num(self.growth.beta_est),
                "alpha_est": json_num(self.growth.alpha_est),
                "t_alpha": json_opt(self.growth.t_alpha),
                "t_beta": json_opt(self.growth.t_beta),
                "applicable": self.growth.applicable,
            },
            "apriori_box": self.apriori_box.map(|(l, u)| json!({"lower": json_num(l), "upper": json_num(u)})).unwrap_or(Value::Null),
            "cubic": self.cubic.map(|c| json!({
                "flag": c.flag,
                "m_bound": json_opt(c.m_bound),
                "only_zero": c.only_zero,
            })).unwrap_or(Value::Null),
            "eigen": self.eigen.map(|e| json!({
                "lower": json_num(e.lower),
                "upper": json_num(e.upper),
                "sup_a": json_num(e.sup_a),
                "alpha": json_num(e.alpha),
                "rho": json_num(e.rho),
                "positive_eigenfunction_assumed": true,
            })).unwrap_or(Value::Null),
            "out_radius_actual": json_num(self.out_radius_actual),
            "verdicts": verdicts,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{build_domain, Shape};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn ball(r: f64, h: f64) -> Arc<GridDomain> {
        build_domain(&Shape::Ball { center: vec![0.0, 0.0], radius: r }, h).unwrap()
    }

    fn rhs(text: &str) -> RhsSpec {
        RhsSpec::parse(text).unwrap()
    }

    #[test]
    fn c_eta_of_exponential() {
        let d = ball(1.0, 0.25);
        let f = rhs("(neg (exp t))");
        for eta in [0.0, 0.5, 3.0, 10.0] {
            let c = c_eta(&f, &d, 0.0, 0.0, eta).unwrap();
            assert_relative_eq!(c.value, (eta / 3.0).exp(), max_relative = 1e-12);
            let c = c_eta(&f, &d, -2.0, 1.0, eta).unwrap();
            assert_relative_eq!(c.value, ((1.0 + eta) / 3.0).exp(), max_relative = 1e-12);
        }
        // Only the positive part below ℓ counts.
        let c = c_eta(&rhs("(mul 8 t)"), &d, 1.0, 1.0, 0.5).unwrap();
        assert_relative_eq!(c.value, 2.0, max_relative = 1e-12);
    }

    #[test]
    fn diameter_threshold_of_exponential() {
        let d = ball(1.0, 0.25);
        let f = rhs("(neg (exp t))");
        let cfg = CriteriaConfig::default();
        let base = (3.0 / (SIGMA * std::f64::consts::E)).powf(0.75);
        let th = diam_threshold(&f, &d, 0.0, 0.0, &cfg).unwrap();
        assert_relative_eq!(th.value, base, max_relative = 1e-10);
        assert_relative_eq!(th.eta, 3.0, max_relative = 1e-4);
        let th = diam_threshold(&f, &d, 0.0, 1.0, &cfg).unwrap();
        assert_relative_eq!(th.value, base * (-0.25f64).exp(), max_relative = 1e-10);
    }

    #[test]
    fn vanishing_rhs_has_infinite_threshold() {
        let d = ball(1.0, 0.25);
        let th = diam_threshold(&rhs("(mul t 0)"), &d, -1.0, 1.0, &CriteriaConfig::default()).unwrap();
        assert!(th.value.is_infinite());
    }

    #[test]
    fn barriers_enclose_boundary_data() {
        let d = ball(0.5, 0.05);
        let f = rhs("(neg (exp t))");
        let b = BoundaryTrace::from_fn(&d, |x| 0.1 * x[0]).unwrap();
        let (sub, sup) = small_diameter_barriers(&f, &d, &b, &CriteriaConfig::default()).unwrap();
        for i in d.non_exterior() {
            assert!(sub.get(i) <= sup.get(i));
        }
        for (k, &i) in d.boundary().iter().enumerate() {
            let _ = k;
            assert!(sub.get(i) <= b.lo() + 1e-12);
            assert!(sup.get(i) >= b.hi() - 1e-12);
        }
        let big = ball(3.0, 0.25);
        let b = BoundaryTrace::constant(&big, 0.0).unwrap();
        assert!(small_diameter_barriers(&f, &big, &b, &CriteriaConfig::default()).is_err());
    }

    #[test]
    fn apriori_examples() {
        let d = ball(1.0, 0.25);
        let b = BoundaryTrace::constant(&d, 0.0).unwrap();
        let (lo, hi) = apriori_box(-1.0, 0.0, &b, 1.0).unwrap();
        assert_eq!(lo, 0.0);
        assert_relative_eq!(hi, SIGMA, max_relative = 1e-15);
        let (lo, hi) = apriori_box(0.0, 8.0, &b, 1.0).unwrap();
        assert_relative_eq!(lo, -2.0 * SIGMA, max_relative = 1e-15);
        assert_eq!(hi, 0.0);
        assert!(apriori_box(1.0, 0.0, &b, 1.0).is_err());
    }

    #[test]
    fn cubic_flags() {
        let d = ball(1.0, 0.25);
        let b = BoundaryTrace::constant(&d, 0.0).unwrap();
        let c = cubic_smallness(1.0, 0.9, &b);
        assert!(c.flag && c.only_zero);
        assert_eq!(c.m_bound, Some(0.0));
        assert!(!cubic_smallness(1.0, 1.0, &b).flag);
        let b = BoundaryTrace::constant(&d, 0.5).unwrap();
        let c = cubic_smallness(1.0, 0.5, &b);
        assert!(c.flag && !c.only_zero);
        let want = 0.5 / (1.0 - SIGMA * 0.5f64.powf(4.0 / 3.0));
        assert_relative_eq!(c.m_bound.unwrap(), want, max_relative = 1e-14);
    }

    #[test]
    fn eigen_bracket_unit_ball() {
        let d = ball(1.0, 0.1);
        let e = eigen_bracket(&rhs("1"), &d, &CriteriaConfig::default()).unwrap();
        assert_relative_eq!(e.lower, 64.0 / 81.0, max_relative = 1e-12);
        assert_relative_eq!(e.upper, 16384.0 / 2187.0, max_relative = 1e-12);
        assert_eq!(e.alpha, 1.0);
        assert!(eigen_bracket(&rhs("(neg 1)"), &d, &CriteriaConfig::default()).is_err());
        assert!(eigen_bracket(&rhs("(mul t 1)"), &d, &CriteriaConfig::default()).is_err());
    }

    #[test]
    fn eigen_bracket_peaked_coefficient() {
        let d = ball(1.0, 0.05);
        let e = eigen_bracket(&rhs("(exp (neg (mul 4 (pow r 2))))"), &d, &CriteriaConfig::default()).unwrap();
        assert!(e.lower <= e.upper);
        assert!(e.rho > 0.0 && e.rho <= 1.0);
        assert_relative_eq!(e.sup_a, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn growth_examples() {
        let d = ball(1.0, 0.25);
        let cfg = CriteriaConfig::default();
        let g = growth_class(&rhs("(cospow t 2)"), &d, 0.0, 0.0, 1.0, &cfg);
        assert!(g.applicable);
        let (lo, hi) = g.bounds.unwrap();
        assert!(lo < 0.0 && hi > 0.0);
        let g = growth_class(&rhs("(neg (pow t 4))"), &d, 0.0, 0.0, 1.0, &cfg);
        assert!(!g.applicable);
        assert!(g.beta_est < 0.0);
        let g = growth_class(&rhs("(neg (pow t 3))"), &d, 0.0, 0.0, 1.0, &cfg);
        assert!(!g.applicable);
        let g = growth_class(&rhs("t"), &d, -1.0, 2.0, 1.0, &cfg);
        assert!(g.applicable);
        assert!(g.t_alpha.unwrap() < -1.0 && g.t_beta.unwrap() > 2.0);
    }

    // ∫_0^a (e^a − e^t)^{−1/4} dt with s = a − t = u⁴, composite Simpson in u.
    fn zeta_exp_oracle(a: f64) -> f64 {
        let u1 = a.powf(0.25);
        let n = 20000;
        let g = |u: f64| {
            if u == 0.0 {
                return 4.0 * 0.0;
            }
            let s = u.powi(4);
            4.0 * u.powi(3) * (a.exp() * (-(-s).exp_m1())).powf(-0.25)
        };
        let hh = u1 / n as f64;
        let mut acc = g(0.0) + g(u1);
        for i in 1..n {
            acc += g(i as f64 * hh) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * hh / 3.0
    }

    #[test]
    fn nonexistence_radius_of_exponential() {
        let m = MonotoneRhs1D::parse("(exp t)", 0.0).unwrap();
        let ne = nonexistence_radius(&m, &CriteriaConfig::default()).unwrap();
        assert!(ne.tail_certified);
        let mut best: f64 = 0.0;
        for k in 1..4000 {
            best = best.max(zeta_exp_oracle(k as f64 * 0.005));
        }
        assert_relative_eq!(ne.m_f, best, max_relative = 1e-5);
        assert_relative_eq!(ne.radius, ne.m_f / 2f64.sqrt(), max_relative = 1e-15);
    }

    #[test]
    fn subcubic_power_is_not_certified() {
        let m = MonotoneRhs1D::parse("(pow t 2)", 0.0).unwrap();
        let ne = nonexistence_radius(&m, &CriteriaConfig::default()).unwrap();
        assert!(!ne.tail_certified && ne.radius.is_infinite());
        let m = MonotoneRhs1D::parse("(pow t 5)", 0.0).unwrap();
        assert!(!nonexistence_radius(&m, &CriteriaConfig::default()).unwrap().tail_certified);
    }

    #[test]
    fn integral_conditions() {
        let d = ball(1.0, 0.25);
        let c = dd3_check(&rhs("t"), &d, 0.0).unwrap();
        assert_eq!((c.cond_i, c.cond_ii), (TriState::Yes, TriState::Yes));
        let c = dd3_check(&rhs("(pow t 2)"), &d, 0.0).unwrap();
        assert_eq!((c.cond_i, c.cond_ii), (TriState::Yes, TriState::Yes));
        let c = dd3_check(&rhs("(pow t 3)"), &d, 0.0).unwrap();
        assert_eq!((c.cond_i, c.cond_ii), (TriState::Undetermined, TriState::No));
        let c = dd3_check(&rhs("(exp t)"), &d, 0.0).unwrap();
        assert_eq!((c.cond_i, c.cond_ii), (TriState::Yes, TriState::No));
    }

    #[test]
    fn report_lists_verdicts() {
        let d = ball(0.5, 0.1);
        let b = BoundaryTrace::constant(&d, 0.0).unwrap();
        let r = evaluate(&rhs("(neg (exp t))"), &d, &b, &CriteriaConfig::default()).unwrap();
        assert_eq!(r.verdict("existence_small_diameter").unwrap().status, Status::Applies);
        assert_eq!(r.verdict("nonexistence_large_inradius").unwrap().status, Status::Fails);
        let j = r.to_json();
        assert!(j["verdicts"].as_array().unwrap().len() >= 5);
        assert!(j["diam_threshold"]["value"].is_number());

        let d = ball(1.0, 0.1);
        let b = BoundaryTrace::constant(&d, 0.0).unwrap();
        let r = evaluate(&rhs("(neg (mul 0.5 (pow t 3)))"), &d, &b, &CriteriaConfig::default()).unwrap();
        assert_eq!(r.verdict("cubic_uniqueness").unwrap().status, Status::Applies);
        let e = r.eigen.unwrap();
        assert_relative_eq!(e.lower, 2.0 * 64.0 / 81.0, max_relative = 1e-12);
    }

    #[test]
    fn config_rejects_unknown_keys() {
        assert!(serde_json::from_str::<CriteriaConfig>(r#"{"eta_max": 10}"#).is_ok());
        assert!(serde_json::from_str::<CriteriaConfig>(r#"{"eta": 10}"#).is_err());
    }

    #[test]
    fn small_examples() {
        let d = ball(1.0, 0.25);
        assert_eq!(c_eta(&rhs("1"), &d, 0.0, 0.0, 0.0).unwrap().value, 1.0);
        assert_eq!(c_eta(&rhs("0"), &d, -1.0, 1.0, 7.0).unwrap().value, 0.0);
        let b = BoundaryTrace::from_fn(&d, |x| x[0]).unwrap();
        assert_eq!(apriori_box(0.0, 0.0, &b, 1.0).unwrap(), (b.lo(), b.hi()));
        let c = cubic_smallness(0.0, 5.0, &b);
        assert!(c.flag);
        assert_eq!(c.m_bound, Some((-b.lo()).max(b.hi())));
    }

    #[test]
    fn eigen_bracket_scaling_and_support() {
        let cfg = CriteriaConfig::default();
        let unit = eigen_bracket(&rhs("1"), &ball(1.0, 0.1), &cfg).unwrap();
        let big = eigen_bracket(&rhs("1"), &build_domain(&Shape::Ball { center: vec![0.0, 0.0], radius: 2.0 }, 0.2).unwrap(), &cfg).unwrap();
        assert_relative_eq!(big.lower, unit.lower / 16.0, max_relative = 1e-12);
        assert_relative_eq!(big.upper, unit.upper / 16.0, max_relative = 1e-12);
        let half = eigen_bracket(&rhs("(exp (mul 30 x0))"), &ball(1.0, 0.05), &cfg).unwrap();
        assert!(half.upper * half.sup_a > unit.upper * unit.sup_a);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn point_source_keeps_upper_at_l(h0 in 0.0f64..50.0, r in 0.0f64..3.0, l in -1.0f64..1.0) {
            let d = ball(1.0, 0.5);
            let b = BoundaryTrace::from_fn(&d, |x| l + x[1]).unwrap();
            let (_, hi) = apriori_box(h0, h0, &b, r).unwrap();
            prop_assert_eq!(hi, b.hi());
        }

        #[test]
        fn cubic_flag_is_scale_consistent(a in 0.0f64..4.0, r in 0.05f64..2.0, c in 0.25f64..4.0) {
            let d = ball(1.0, 0.5);
            let b = BoundaryTrace::constant(&d, 0.0).unwrap();
            let x = SIGMA_CUBED * a * r.powi(4);
            prop_assume!((x - 1.0).abs() > 1e-9);
            prop_assert_eq!(cubic_smallness(a, r, &b).flag, cubic_smallness(a / c.powi(4), c * r, &b).flag);
        }

        #[test]
        fn vanishing_envelope_gives_infinite_threshold(l in -2.0f64..2.0, w in 0.0f64..2.0) {
            let d = ball(1.0, 0.5);
            // f ≤ 0 below l + w/2 and f ≥ 0 above it, so C(η) = 0 for every η.
            let f = rhs(&format!("(pow (sub t {c}) 3)", c = l + 0.5 * w));
            let th = diam_threshold(&f, &d, l, l + w, &CriteriaConfig::default()).unwrap();
            prop_assert!(th.value.is_infinite());
        }

        #[test]
        fn c_eta_nondecreasing(e1 in 0.0f64..5.0, de in 0.0f64..5.0, l in -2.0f64..2.0, w in 0.0f64..2.0) {
            let d = ball(1.0, 0.5);
            let f = rhs("(sub (mul x0 x1) (pow t 3))");
            let a = c_eta(&f, &d, l, l + w, e1).unwrap().value;
            let b = c_eta(&f, &d, l, l + w, e1 + de).unwrap().value;
            prop_assert!(b >= a * (1.0 - 1e-12));
        }

        #[test]
        fn growth_survives_clipping(k in 0.5f64..4.0, c0 in 1.0f64..3.0) {
            let d = ball(1.0, 0.5);
            let f = rhs(&format!("(sub (mul {k} t) (pow t 2))"));
            let cfg = CriteriaConfig::default();
            let g = growth_class(&f, &d, -0.5, 0.5, 1.0, &cfg);
            prop_assume!(g.applicable);
            let c = c0 * (-2.0 * g.t_alpha.unwrap()).max(2.0 * g.t_beta.unwrap());
            let gc = growth_class(&f.clipped(c), &d, -0.5, 0.5, 1.0, &cfg);
            prop_assert_eq!(g.t_alpha, gc.t_alpha);
            prop_assert_eq!(g.t_beta, gc.t_beta);
            prop_assert!(g.t_alpha.unwrap() < -0.5 && g.t_beta.unwrap() > 0.5);
        }

        #[test]
        fn apriori_box_is_ordered(h_lo in -10.0f64..0.0, dh in 0.0f64..20.0, r in 0.0f64..3.0, l in -1.0f64..1.0) {
            let d = ball(1.0, 0.5);
            let b = BoundaryTrace::from_fn(&d, |x| l + 0.1 * x[0]).unwrap();
            let (lo, hi) = apriori_box(h_lo, h_lo + dh, &b, r).unwrap();
            prop_assert!(lo <= b.lo() && hi >= b.hi());
        }

        #[test]
        fn eigen_bracket_is_ordered(s in 0.5f64..8.0, cx in -0.5f64..0.5) {
            let d = ball(1.0, 0.1);
            let a = rhs(&format!("(exp (neg (mul {s} (pow (sub x0 {cx}) 2))))"));
            let e = eigen_bracket(&a, &d, &CriteriaConfig::default()).unwrap();
            prop_assert!(e.lower <= e.upper);
        }
    }
}
