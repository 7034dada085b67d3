//! Post-hoc checks of computed fields against comparison, Lipschitz, Harnack and
//! a priori inequalities. Every check reports a margin; negative means violated.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::domain::GridDomain;
use crate::error::{Error, Result};
use crate::field::{oscillation, BoundaryTrace, ScalarField};
use crate::fmt::json_num;
use crate::rhs::{RhsSpec, Sign};
use crate::scheme::{apply_inf_lap, SchemeParams, Stencil};
use crate::SIGMA;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Checked,
    Undetermined,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: String,
    /// `margin ≥ −tol` for checked results; always false when undetermined.
    pub passed: bool,
    pub margin: f64,
    pub tol: f64,
    pub witness: Vec<usize>,
    pub status: CheckStatus,
    pub notes: String,
}

impl CheckResult {
    fn checked(name: &str, margin: f64, tol: f64, witness: Vec<usize>, notes: String) -> CheckResult {
        CheckResult { name: name.into(), passed: margin >= -tol, margin, tol, witness, status: CheckStatus::Checked, notes }
    }

    fn undetermined(name: &str, tol: f64, notes: String) -> CheckResult {
        CheckResult {
            name: name.into(),
            passed: false,
            margin: f64::NAN,
            tol,
            witness: Vec::new(),
            status: CheckStatus::Undetermined,
            notes,
        }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "name": self.name,
            "passed": self.passed,
            "margin": json_num(self.margin),
            "tol": json_num(self.tol),
            "witness": self.witness,
            "status": self.status,
            "notes": self.notes,
        })
    }
}

/// `10·tol + h`, the default allowance for comparison-type checks.
pub fn default_tolerance(solver_tol: f64, h: f64) -> f64 {
    10.0 * solver_tol + h
}

/// `10·tol + h^{1/3}·scale`, the allowance for the Harnack check.
pub fn harnack_tolerance(solver_tol: f64, h: f64, scale: f64) -> f64 {
    10.0 * solver_tol + h.cbrt() * scale
}

/// RHS hypothesis under which `sup(u − v)` is attained on the boundary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComparisonMode {
    /// `Δ∞u ≥ f₁ > f₂ ≥ Δ∞v`.
    StrictOrderedRhs,
    /// `u` sub- and `v` super-solution of one equation whose RHS has the given sign.
    SignedRhs(Sign),
}

fn argmax(it: impl Iterator<Item = (usize, f64)>) -> Option<(usize, f64)> {
    it.fold(None, |acc, (i, v)| match acc {
        Some((_, w)) if w >= v => acc,
        _ => Some((i, v)),
    })
}

fn argmin(it: impl Iterator<Item = (usize, f64)>) -> Option<(usize, f64)> {
    argmax(it.map(|(i, v)| (i, -v))).map(|(i, v)| (i, -v))
}

/// `sup_{∂Ω}(u − v) − sup_Ω(u − v)`.
pub fn check_comparison(u: &ScalarField, v: &ScalarField, mode: ComparisonMode, tol: f64) -> Result<CheckResult> {
    u.ensure_same_domain(v)?;
    if mode == ComparisonMode::SignedRhs(Sign::Mixed) {
        return Err(Error::Parameter("comparison is not certified for a sign-changing right-hand side".into()));
    }
    let d = u.domain();
    let diff = |i: usize| u.get(i) - v.get(i);
    let (bi, bsup) = argmax(d.boundary().iter().map(|&i| (i, diff(i)))).ok_or(Error::EmptyDomain)?;
    let (ii, isup) = argmax(d.interior().iter().map(|&i| (i, diff(i)))).ok_or(Error::EmptyDomain)?;
    Ok(CheckResult::checked("comparison", bsup - isup, tol, vec![ii, bi], format!("mode {mode:?}")))
}

/// Zero levels `(inf{f = 0}, sup{f = 0})` of a nondecreasing `f(t)`, located on the
/// probe lattice and refined by bisection. An empty zero set gives `(+∞, −∞)`.
pub fn zero_levels(f: &RhsSpec, d: &GridDomain) -> (f64, f64) {
    let x = d.point(d.interior()[0]);
    let g = |t: f64| f.eval(&x, t);
    let ts = f.lattice().t_values();
    let scale = ts.iter().map(|t| g(*t).abs()).fold(0.0, f64::max).max(1.0);
    let small = 1e-12 * scale;
    // Boundary between `pred` false and true along increasing t.
    let edge = |pred: &dyn Fn(f64) -> bool| -> Option<f64> {
        let k = ts.iter().position(|t| pred(*t))?;
        if k == 0 {
            return Some(f64::NEG_INFINITY);
        }
        let (mut lo, mut hi) = (ts[k - 1], ts[k]);
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if m <= lo || m >= hi {
                break;
            }
            if pred(m) {
                hi = m;
            } else {
                lo = m;
            }
        }
        Some(hi)
    };
    let empty = (f64::INFINITY, f64::NEG_INFINITY);
    let zi = match edge(&|t| g(t) >= 0.0) {
        None => return empty,
        Some(t) if t == f64::NEG_INFINITY => {
            if g(ts[0]).abs() > small {
                return empty;
            }
            t
        }
        Some(t) if g(t).abs() <= small => t,
        Some(_) => return empty,
    };
    let zs = edge(&|t| g(t) > 0.0).unwrap_or(f64::INFINITY);
    (zi, zs)
}

/// Comparison for `Δ∞w = f(w)` with `f` nondecreasing in `t` only:
/// `u` sub-, `v` super-solution. Margin is `min_Ω(v − u)`.
pub fn check_monotone_comparison(
    u: &ScalarField,
    v: &ScalarField,
    f: &RhsSpec,
    levels: Option<(f64, f64)>,
    tol: f64,
) -> Result<CheckResult> {
    u.ensure_same_domain(v)?;
    let d = u.domain();
    let tr = f.traits(d)?;
    if tr.depends_on_x || !tr.nondecreasing() {
        return Err(Error::AttributeViolation("monotone comparison needs f = f(t) nondecreasing".into()));
    }
    let (z_inf, z_sup) = levels.unwrap_or_else(|| zero_levels(f, d));
    let bd = d.boundary();
    let u_hi = bd.iter().map(|&i| u.get(i)).fold(f64::NEG_INFINITY, f64::max);
    let v_lo = bd.iter().map(|&i| v.get(i)).fold(f64::INFINITY, f64::min);
    let ordered = bd.iter().all(|&i| u.get(i) <= v.get(i) + tol);
    let zero = !tr.depends_on_t && f.eval(&d.point(bd[0]), 0.0) == 0.0;
    let why = if zero && ordered {
        "infinity-harmonic comparison"
    } else if ordered && (v_lo >= z_sup - tol || u_hi <= z_inf + tol) {
        "boundary data beyond the zero levels"
    } else if u_hi <= v_lo + tol {
        "sup u ≤ inf v on the boundary"
    } else {
        return Ok(CheckResult::undetermined(
            "monotone_comparison",
            tol,
            format!("no hypothesis applies (zero levels {z_inf:e}, {z_sup:e})"),
        ));
    };
    let (i, m) = argmin(d.interior().iter().map(|&i| (i, v.get(i) - u.get(i)))).ok_or(Error::EmptyDomain)?;
    Ok(CheckResult::checked("monotone_comparison", m, tol, vec![i], why.into()))
}

/// Uniqueness bound `sup|u − v| ≤ Osc b` for two solutions with the same data.
pub fn check_oscillation(u: &ScalarField, v: &ScalarField, b: &BoundaryTrace, tol: f64) -> Result<CheckResult> {
    u.ensure_same_domain(v)?;
    let d = u.domain();
    let (i, m) = argmax(d.non_exterior().map(|i| (i, (u.get(i) - v.get(i)).abs()))).ok_or(Error::EmptyDomain)?;
    Ok(CheckResult::checked("oscillation", oscillation(b) - m, tol, vec![i], String::new()))
}

/// Local Lipschitz estimate with `k = 2(M − m)/r + 1 + |α| diam` on `B_{r/3}(x₀)`,
/// `r` the distance from `x₀` to the boundary.
pub fn lipschitz_bound(u: &ScalarField, x0: usize, alpha: f64, tol: f64) -> Result<CheckResult> {
    let d = u.domain();
    if !d.interior().contains(&x0) {
        return Err(Error::Parameter(format!("node {x0} is not interior")));
    }
    let r = d.dist_to_boundary(x0);
    if r / 3.0 < 2.0 * d.h() {
        return Ok(CheckResult::undetermined("lipschitz", tol, format!("ball radius {} below 2h", r / 3.0)));
    }
    let (big_m, m) = extremes(u);
    let k = 2.0 * (big_m - m) / r + 1.0 + alpha.abs() * d.diameter();
    let c = d.point(x0);
    let nodes: Vec<(usize, Vec<f64>)> =
        d.non_exterior().map(|i| (i, d.point(i))).filter(|(_, p)| dist(p, &c) <= r / 3.0).collect();
    let mut worst = (f64::INFINITY, 0, 0);
    for a in 0..nodes.len() {
        for b in a + 1..nodes.len() {
            let (i, ref p) = nodes[a];
            let (j, ref q) = nodes[b];
            let slack = k * dist(p, q) - (u.get(i) - u.get(j)).abs();
            if slack < worst.0 {
                worst = (slack, i, j);
            }
        }
    }
    Ok(CheckResult::checked("lipschitz", worst.0, tol, vec![worst.1, worst.2], format!("k = {k:e}, r = {r:e}")))
}

fn extremes(u: &ScalarField) -> (f64, f64) {
    let d = u.domain();
    d.non_exterior().fold((f64::NEG_INFINITY, f64::INFINITY), |(hi, lo), i| (hi.max(u.get(i)), lo.min(u.get(i))))
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Largest `Δ∞u − h(x)` over interior nodes; `u` is a certified supersolution of
/// `Δ∞u ≤ h` when this is at most the solver tolerance.
pub fn supersolution_defect(u: &ScalarField, h: &RhsSpec, s: &Stencil, p: &SchemeParams) -> Result<f64> {
    let d = s.domain();
    if !Arc::ptr_eq(u.domain(), d) && **u.domain() != **d {
        return Err(Error::DomainMismatch);
    }
    let mut x = vec![0.0; d.dim()];
    let mut worst = f64::NEG_INFINITY;
    for &i in d.interior() {
        d.point_into(i, &mut x);
        worst = worst.max(apply_inf_lap(u, i, s, p) - h.eval(&x, u.get(i)));
    }
    Ok(worst)
}

/// `9 inf_B u + 12σ(r⁴ sup h⁺)^{1/3} − sup_B u` on the nodes of `B = B_{2r/3}(z)`.
pub fn check_harnack(u: &ScalarField, h_sup_plus: f64, z: usize, r: f64, tol: f64) -> Result<CheckResult> {
    let d = u.domain();
    if !(r > 0.0) || !(h_sup_plus >= 0.0) {
        return Err(Error::Parameter("need r > 0 and sup h⁺ ≥ 0".into()));
    }
    if let Some(i) = d.non_exterior().find(|&i| u.get(i) < -tol) {
        return Err(Error::Parameter(format!("u is negative at node {i}")));
    }
    if !d.interior().contains(&z) || d.dist_to_boundary(z) < 2.0 * r {
        return Err(Error::Geometry(format!("B(z, 2r) with r = {r} leaves the domain")));
    }
    let c = d.point(z);
    let ball: Vec<usize> = d.non_exterior().filter(|&i| dist(&d.point(i), &c) <= 2.0 * r / 3.0).collect();
    let (hi_i, hi) = argmax(ball.iter().map(|&i| (i, u.get(i)))).ok_or(Error::EmptyDomain)?;
    let (lo_i, lo) = argmin(ball.iter().map(|&i| (i, u.get(i)))).ok_or(Error::EmptyDomain)?;
    let extra = 12.0 * SIGMA * (r.powi(4) * h_sup_plus).cbrt();
    Ok(CheckResult::checked(
        "harnack",
        9.0 * lo + extra - hi,
        tol,
        vec![hi_i, lo_i],
        format!("{} nodes in B", ball.len()),
    ))
}

/// `min(min u − lower, upper − max u)` over non-exterior nodes.
pub fn check_apriori(u: &ScalarField, bounds: (f64, f64), tol: f64) -> Result<CheckResult> {
    let d = u.domain();
    let (lo_i, lo) = argmin(d.non_exterior().map(|i| (i, u.get(i)))).ok_or(Error::EmptyDomain)?;
    let (hi_i, hi) = argmax(d.non_exterior().map(|i| (i, u.get(i)))).ok_or(Error::EmptyDomain)?;
    let (a, b) = (lo - bounds.0, bounds.1 - hi);
    let (margin, w) = if a <= b { (a, lo_i) } else { (b, hi_i) };
    Ok(CheckResult::checked("apriori", margin, tol, vec![w], format!("box [{:e}, {:e}]", bounds.0, bounds.1)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criteria::apriori_box;
    use crate::domain::{build_domain, Shape};
    use crate::radial::{cone_field, Orientation};
    use crate::scheme::build_stencil;
    use crate::solver::{solve_dirichlet, SolveOptions};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn ball(r: f64, h: f64) -> Arc<GridDomain> {
        build_domain(&Shape::Ball { center: vec![0.0, 0.0], radius: r }, h).unwrap()
    }

    fn rhs(text: &str) -> RhsSpec {
        RhsSpec::parse(text).unwrap()
    }

    fn solve(d: &Arc<GridDomain>, f: &str, b: &BoundaryTrace) -> (ScalarField, f64) {
        let (u, rep) = solve_dirichlet(d, &rhs(f), b, &SolveOptions::default()).unwrap();
        assert!(rep.converged());
        (u, rep.tol)
    }

    #[test]
    fn comparison_of_equal_fields() {
        let d = ball(1.0, 0.1);
        let u = ScalarField::from_fn(&d, |x| x[0] * x[1]);
        let r = check_comparison(&u, &u, ComparisonMode::SignedRhs(Sign::Nonneg), 0.0).unwrap();
        assert_eq!(r.margin, 0.0);
        assert!(r.passed);
        assert!(check_comparison(&u, &u, ComparisonMode::SignedRhs(Sign::Mixed), 0.0).is_err());
        let other = ScalarField::constant(&ball(1.0, 0.2), 0.0);
        assert!(check_comparison(&u, &other, ComparisonMode::StrictOrderedRhs, 0.0).is_err());
    }

    #[test]
    fn comparison_with_cone_correction() {
        let d = ball(1.0, 1.0 / 16.0);
        let b = BoundaryTrace::from_fn(&d, |x| x[0]).unwrap();
        let (u, tol) = solve(&d, "0", &b);
        let cone = cone_field(&d, 1.0, &[0.0, 0.0], 0.0, Orientation::Super);
        let v = ScalarField::from_values(&d, u.values().iter().zip(cone.values()).map(|(a, c)| a + c - cone.min()).collect()).unwrap();
        let r = check_comparison(&u, &v, ComparisonMode::SignedRhs(Sign::Nonpos), default_tolerance(tol, d.h())).unwrap();
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn comparison_of_ordered_solves() {
        let d = ball(1.0, 1.0 / 16.0);
        let b = BoundaryTrace::constant(&d, 0.0).unwrap();
        let (u, tol) = solve(&d, "1", &b);
        let (v, _) = solve(&d, "0", &b);
        let r = check_comparison(&u, &v, ComparisonMode::StrictOrderedRhs, default_tolerance(tol, d.h())).unwrap();
        assert!(r.passed && r.margin > -1e-9, "{r:?}");
    }

    #[test]
    fn zero_levels_of_simple_rhs() {
        let d = ball(1.0, 0.25);
        let (a, b) = zero_levels(&rhs("t"), &d);
        assert!(a.abs() < 1e-12 && b.abs() < 1e-12);
        let (a, b) = zero_levels(&rhs("(add 1 (exp t))"), &d);
        assert!(a.is_infinite() && b.is_infinite());
        let (a, b) = zero_levels(&rhs("(sub t 0.5)"), &d);
        assert_relative_eq!(a, 0.5, max_relative = 1e-12);
        assert_relative_eq!(b, 0.5, max_relative = 1e-12);
    }

    #[test]
    fn monotone_comparison_cases() {
        let d = ball(1.0, 1.0 / 16.0);
        let bu = BoundaryTrace::constant(&d, -0.5).unwrap();
        let bv = BoundaryTrace::from_fn(&d, |x| 0.5 + 0.1 * x[0]).unwrap();
        let (u, tol) = solve(&d, "t", &bu);
        let (v, _) = solve(&d, "t", &bv);
        let r = check_monotone_comparison(&u, &v, &rhs("t"), None, default_tolerance(tol, d.h())).unwrap();
        assert_eq!(r.status, CheckStatus::Checked);
        assert!(r.passed);

        let (u0, _) = solve(&d, "0", &bu);
        let (v0, _) = solve(&d, "0", &bv);
        let r = check_monotone_comparison(&u0, &v0, &rhs("0"), None, default_tolerance(tol, d.h())).unwrap();
        assert!(r.passed && r.notes.contains("harmonic"));

        // Crossing boundary data with a sign-changing f: nothing applies.
        let bx = BoundaryTrace::from_fn(&d, |x| x[0]).unwrap();
        let by = BoundaryTrace::from_fn(&d, |x| x[1]).unwrap();
        let (a, _) = solve(&d, "t", &bx);
        let (b, _) = solve(&d, "t", &by);
        let r = check_monotone_comparison(&a, &b, &rhs("t"), None, 1e-9).unwrap();
        assert_eq!(r.status, CheckStatus::Undetermined);
        assert!(!r.passed);
        assert!(check_monotone_comparison(&a, &b, &rhs("(neg t)"), None, 1e-9).is_err());
    }

    #[test]
    fn uniqueness_for_monotone_rhs() {
        let d = ball(1.0, 1.0 / 16.0);
        let b = BoundaryTrace::constant(&d, 1.0).unwrap();
        let f = rhs("t");
        let (u, rep) = solve_dirichlet(&d, &f, &b, &SolveOptions::default()).unwrap();
        let init = ScalarField::from_fn(&d, |x| 3.0 * x[0]);
        let (v, _) = crate::solver::solve_dirichlet_from(&f, &b, &init, &SolveOptions::default()).unwrap();
        let r = check_oscillation(&u, &v, &b, 10.0 * rep.tol).unwrap();
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn lipschitz_examples() {
        let d = ball(1.0, 1.0 / 16.0);
        let c = d.nearest(&[0.0, 0.0]);
        let u = ScalarField::from_fn(&d, |x| 0.7 * x[0] - 0.2 * x[1]);
        let r = lipschitz_bound(&u, c, 0.0, 0.0).unwrap();
        assert!(r.passed && r.margin >= 0.0);
        let r = lipschitz_bound(&ScalarField::constant(&d, 2.0), c, 0.0, 0.0).unwrap();
        assert!(r.passed);
        let b = BoundaryTrace::constant(&d, 0.0).unwrap();
        let (u, _) = solve(&d, "1", &b);
        let r = lipschitz_bound(&u, c, 1.0, 0.0).unwrap();
        assert!(r.passed && r.margin > 0.0);
        let edge = *d.interior().iter().min_by(|a, b| d.dist_to_boundary(**a).total_cmp(&d.dist_to_boundary(**b))).unwrap();
        assert_eq!(lipschitz_bound(&u, edge, 0.0, 0.0).unwrap().status, CheckStatus::Undetermined);
    }

    #[test]
    fn harnack_examples() {
        let d = ball(1.0, 1.0 / 16.0);
        let c = d.nearest(&[0.0, 0.0]);
        let r = check_harnack(&ScalarField::constant(&d, 3.0), 0.0, c, 0.3, 0.0).unwrap();
        assert_eq!(r.margin, 24.0);
        let b = BoundaryTrace::from_fn(&d, |x| 1.0 + x[0]).unwrap();
        let (u, tol) = solve(&d, "1", &b);
        let s = build_stencil(&d, 2).unwrap();
        assert!(supersolution_defect(&u, &rhs("1"), &s, &SchemeParams::default()).unwrap() <= tol);
        let r = check_harnack(&u, 1.0, c, 0.4, harnack_tolerance(tol, d.h(), u.sup_abs())).unwrap();
        assert!(r.passed && r.margin > 0.0, "{r:?}");
        assert!(check_harnack(&u, 1.0, c, 0.6, 0.0).is_err());
        let neg = ScalarField::constant(&d, -1.0);
        assert!(check_harnack(&neg, 0.0, c, 0.3, 0.0).is_err());
    }

    #[test]
    fn apriori_examples() {
        let d = ball(1.0, 1.0 / 16.0);
        let b = BoundaryTrace::constant(&d, 0.0).unwrap();
        let zero = ScalarField::constant(&d, 0.0);
        let r = check_apriori(&zero, apriori_box(0.0, 0.0, &b, 1.0).unwrap(), 0.0).unwrap();
        assert!(r.passed && r.margin == 0.0);
        let (u, tol) = solve(&d, "(neg 1)", &b);
        let bx = apriori_box(-1.0, -1.0, &b, 1.0).unwrap();
        assert_relative_eq!(bx.1, SIGMA, max_relative = 1e-15);
        let r = check_apriori(&u, bx, default_tolerance(tol, d.h())).unwrap();
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn report_json_shape() {
        let d = ball(1.0, 0.25);
        let u = ScalarField::constant(&d, 1.0);
        let j = check_apriori(&u, (0.0, 2.0), 0.0).unwrap().to_json();
        assert_eq!(j["name"], "apriori");
        assert_eq!(j["status"], "checked");
        assert!(j["margin"].is_number());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn passed_iff_margin_within_tol(shift in -1.0f64..1.0, tol in 0.0f64..0.5) {
            let d = ball(1.0, 0.25);
            let u = ScalarField::from_fn(&d, |x| x[0] + shift);
            let r = check_apriori(&u, (-1.0, 1.0), tol).unwrap();
            prop_assert_eq!(r.passed, r.margin >= -tol);
            let r2 = check_apriori(&u, (-1.0, 1.0), tol).unwrap();
            prop_assert_eq!(r, r2);
        }

        #[test]
        fn strict_comparison_on_constant_pairs(c1 in -2.0f64..2.0, gap in 0.1f64..2.0) {
            let d = ball(1.0, 0.125);
            let b = BoundaryTrace::from_fn(&d, |x| 0.3 * x[0]).unwrap();
            let (u, rep) = solve_dirichlet(&d, &RhsSpec::constant(c1 + gap), &b, &SolveOptions::default()).unwrap();
            let (v, _) = solve_dirichlet(&d, &RhsSpec::constant(c1), &b, &SolveOptions::default()).unwrap();
            let r = check_comparison(&u, &v, ComparisonMode::StrictOrderedRhs, default_tolerance(rep.tol, d.h())).unwrap();
            prop_assert!(r.passed);
        }
    }
}
