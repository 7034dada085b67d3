//! Explicit radial constructions: the cumulative envelope `H`, the singular
//! integral `ζ`, inverse profiles `φ`, cones, the power-law sub-solution and the
//! exact sign-changing family for super-cubic right-hand sides.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::domain::GridDomain;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::fmt::sci;
use crate::quad::{integrate, QuadOptions};
use crate::rhs::{Expr, RhsSpec, SATURATION};
use crate::scheme::{apply_inf_lap, build_stencil, SchemeParams};
use crate::SIGMA;

/// Default number of profile intervals.
pub const PROFILE_NODES: usize = 1024;

/// Nodes next to `r = 0` left out of the ODE residual. Near the vertex the
/// profile nodes are evenly spaced in `r` and centered differences of `r^{4/3}`
/// carry a relative error of about `0.0186/i²` at the `i`-th node, whatever the
/// node count; 32 nodes push that below `2·10⁻⁵`.
pub const VERTEX_LAYER: usize = 32;

const INNER: QuadOptions = QuadOptions { rel_tol: 1e-13, abs_tol: 1e-300, max_intervals: 2000 };
const OUTER: QuadOptions = QuadOptions { rel_tol: 1e-11, abs_tol: 1e-300, max_intervals: 4000 };

#[derive(Clone, Debug)]
enum Source {
    Expr(RhsSpec),
    Mean(Box<MonotoneRhs1D>),
}

/// A nondecreasing, nonnegative `h` on `[ℓ, ∞)`.
#[derive(Clone, Debug)]
pub struct MonotoneRhs1D {
    source: Source,
    ell: f64,
    positive: bool,
}

impl MonotoneRhs1D {
    /// Validates `h ≥ 0` and monotonicity on `ℓ + 10^{k/64}` (the lattice of `f`).
    pub fn new(f: RhsSpec, ell: f64) -> Result<MonotoneRhs1D> {
        if f.depends_on_x() {
            return Err(Error::Parameter(format!("`{f}` depends on x; a function of t is required")));
        }
        if !ell.is_finite() {
            return Err(Error::Parameter("ℓ must be finite".into()));
        }
        let m = MonotoneRhs1D { source: Source::Expr(f), ell, positive: false };
        let probes = m.probes();
        let mut prev = m.h(ell);
        if !(prev >= 0.0) {
            return Err(Error::AttributeViolation(format!("h(ℓ) = {prev} is negative")));
        }
        let mut positive = true;
        for &t in &probes {
            let v = m.h(t);
            if !(v >= 0.0) {
                return Err(Error::AttributeViolation(format!("h({t}) = {v} is negative")));
            }
            if v < prev - 1e-12 * prev.abs() {
                return Err(Error::AttributeViolation(format!("h decreases near t = {t}")));
            }
            positive &= v > 0.0;
            prev = v;
        }
        Ok(MonotoneRhs1D { positive, ..m })
    }

    pub fn parse(text: &str, ell: f64) -> Result<MonotoneRhs1D> {
        MonotoneRhs1D::new(RhsSpec::parse(text)?, ell)
    }

    fn probes(&self) -> Vec<f64> {
        let lattice = match &self.source {
            Source::Expr(f) => f.lattice().clone(),
            Source::Mean(m) => return m.probes(),
        };
        lattice.t_values().into_iter().filter(|v| *v > 0.0).map(|v| self.ell + v).collect()
    }

    pub fn ell(&self) -> f64 {
        self.ell
    }

    /// `h(t) > 0` at every probe above `ℓ`.
    pub fn positive(&self) -> bool {
        self.positive
    }

    pub fn h(&self, t: f64) -> f64 {
        match &self.source {
            Source::Expr(f) => f.eval(&[], t),
            Source::Mean(m) => {
                if t <= self.ell {
                    m.h(self.ell)
                } else {
                    m.cumulative(t) / (t - self.ell)
                }
            }
        }
    }

    fn cumulative(&self, t: f64) -> f64 {
        match integrate(|s| self.h(s), self.ell, t, &INNER) {
            Ok(r) => r.value.min(SATURATION),
            Err(_) => SATURATION,
        }
    }

    /// Largest relative jump `Δh/(1 + |h|)` found by bisecting between
    /// neighbouring probes.
    pub fn probe_jump(&self) -> f64 {
        let p = self.probes();
        let mut worst = 0.0f64;
        let mut lo = self.ell;
        for &hi in &p {
            let (mut a, mut b) = (lo, hi);
            let (fa, fb) = (self.h(a), self.h(b));
            lo = hi;
            if !(fb.abs() < 1e290) || fb - fa <= 1e-9 * (1.0 + fb.abs()) {
                continue;
            }
            for _ in 0..60 {
                let m = 0.5 * (a + b);
                if m <= a || m >= b {
                    break;
                }
                let fm = self.h(m);
                if fm - self.h(a) >= self.h(b) - fm {
                    b = m;
                } else {
                    a = m;
                }
            }
            let hb = self.h(b);
            worst = worst.max((hb - self.h(a)) / (1.0 + hb.abs()));
        }
        worst
    }

    /// Replaces `h` by its running mean `η(t) = H(t)/(t − ℓ)`, which is continuous,
    /// nondecreasing and below `h`.
    pub fn monotone_smooth(&self) -> MonotoneRhs1D {
        MonotoneRhs1D { source: Source::Mean(Box::new(self.clone())), ell: self.ell, positive: self.positive }
    }

    /// Smooths only when a jump is detected.
    pub fn prepared(self) -> MonotoneRhs1D {
        if self.probe_jump() > 1e-6 {
            self.monotone_smooth()
        } else {
            self
        }
    }

    /// `H(a) − H(a − w) = w ∫₀¹ h(a − wv) dv`, free of cancellation for small `w`.
    fn delta_h(&self, a: f64, w: f64) -> f64 {
        match integrate(|v| self.h(a - w * v), 0.0, 1.0, &INNER) {
            Ok(r) => w * r.value,
            Err(_) => f64::NAN,
        }
    }

    fn require_positive(&self, a: f64) -> Result<()> {
        if !self.positive {
            return Err(Error::SingularIntegral("h vanishes above ℓ".into()));
        }
        if !(self.h(a) > 0.0) {
            return Err(Error::SingularIntegral(format!("h({a}) = 0")));
        }
        Ok(())
    }
}

/// `H(t) = ∫_ℓ^t h`.
pub fn cumulative_h(m: &MonotoneRhs1D, t: f64) -> Result<f64> {
    if t < m.ell {
        return Err(Error::Parameter(format!("H is defined for t ≥ ℓ = {}, got {t}", m.ell)));
    }
    Ok(m.cumulative(t))
}

/// Normalisation in front of `∫ (H(a) − H(s))^{−1/4} ds`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Prefactor {
    #[serde(rename = "one")]
    One,
    #[serde(rename = "inv_sqrt2")]
    InvSqrt2,
}

impl Prefactor {
    pub fn value(self) -> f64 {
        match self {
            Prefactor::One => 1.0,
            Prefactor::InvSqrt2 => std::f64::consts::FRAC_1_SQRT_2,
        }
    }
}

/// `p ∫_ℓ^a (H(a) − H(t))^{−1/4} dt`. The stretch next to `a` is integrated in
/// `τ = (a − t)^{1/4}`.
pub fn zeta(m: &MonotoneRhs1D, a: f64, p: Prefactor) -> Result<f64> {
    if !(a > m.ell) {
        return Err(Error::Parameter(format!("ζ needs a > ℓ, got a = {a}")));
    }
    m.require_positive(a)?;
    let s = a - 1f64.min(a - m.ell) / 2.0;
    let plain = integrate(|t| m.delta_h(a, a - t).powf(-0.25), m.ell, s, &OUTER)?;
    let sing = singular_part(m, a, 0.0, (a - s).powf(0.25))?;
    let v = p.value() * (plain.value + sing);
    if !v.is_finite() {
        return Err(Error::SingularIntegral(format!("ζ({a}) is not finite")));
    }
    Ok(v)
}

fn singular_part(m: &MonotoneRhs1D, a: f64, tau0: f64, tau1: f64) -> Result<f64> {
    let r = integrate(
        |tau| {
            let w = tau.powi(4);
            4.0 * tau.powi(3) * m.delta_h(a, w).powf(-0.25)
        },
        tau0,
        tau1,
        &OUTER,
    )?;
    Ok(r.value)
}

/// Closed-form bounds on `ψ(t) = ∫_t^a (H(a) − H(s))^{−1/4} ds`:
/// `(4/3)((a−t)³/h(a))^{1/4} ≤ ψ(t) ≤ (4/3)((a−t)⁴/(H(a) − H(t)))^{1/4}`.
/// At `t = ℓ` the upper bound reads `(4/3)((a−ℓ)⁴/H(a))^{1/4}`.
pub fn zeta_bounds(m: &MonotoneRhs1D, a: f64, t: f64) -> Result<(f64, f64)> {
    if !(m.ell <= t && t <= a) {
        return Err(Error::Parameter(format!("need ℓ ≤ t ≤ a, got t = {t}, a = {a}")));
    }
    let ha = m.h(a);
    if !(ha > 0.0) {
        return Err(Error::SingularIntegral(format!("h({a}) = 0 leaves the lower bound infinite")));
    }
    if t == a {
        return Ok((0.0, 0.0));
    }
    let lower = 4.0 / 3.0 * ((a - t).powi(3) / ha).powf(0.25);
    let upper = 4.0 / 3.0 * ((a - t).powi(4) / m.delta_h(a, a - t)).powf(0.25);
    Ok((lower, upper))
}

/// Decreasing profile `φ` on `[0, R]` with `φ(0) = a`, `φ(R) = ℓ`, obtained by
/// inverting `ψ`.
#[derive(Clone, Debug)]
pub struct RadialProfile {
    r: Vec<f64>,
    phi: Vec<f64>,
    slope: Vec<f64>,
    a: f64,
    ell: f64,
    prefactor: Prefactor,
}

/// Profile with [`PROFILE_NODES`] intervals.
pub fn build_profile(m: &MonotoneRhs1D, a: f64, p: Prefactor) -> Result<RadialProfile> {
    build_profile_with(m, a, p, PROFILE_NODES)
}

/// Samples `ψ` at `t_i = a − (a−ℓ)(i/n)^{4/3}` and interpolates the inverse with
/// monotone cubics.
pub fn build_profile_with(m: &MonotoneRhs1D, a: f64, p: Prefactor, n: usize) -> Result<RadialProfile> {
    if !(a > m.ell) {
        return Err(Error::Parameter(format!("profile needs a > ℓ, got a = {a}")));
    }
    if n < 4 {
        return Err(Error::Parameter("profile needs at least 4 intervals".into()));
    }
    m.require_positive(a)?;
    let span = (a - m.ell).powf(0.25);
    let taus: Vec<f64> = (0..=n).map(|i| span * (i as f64 / n as f64).cbrt()).collect();
    let mut r = vec![0.0; n + 1];
    let mut phi = vec![a; n + 1];
    for i in 1..=n {
        r[i] = r[i - 1] + p.value() * singular_part(m, a, taus[i - 1], taus[i])?;
        phi[i] = a - taus[i].powi(4);
    }
    phi[n] = m.ell;
    if !r[n].is_finite() {
        return Err(Error::SingularIntegral(format!("ψ(ℓ) is not finite for a = {a}")));
    }
    let slope = pchip_slopes(&r, &phi);
    Ok(RadialProfile { r, phi, slope, a, ell: m.ell, prefactor: p })
}

fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let del: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        if del[i - 1] * del[i] > 0.0 {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / del[i - 1] + w2 / del[i]);
        }
    }
    let end = |h0: f64, h1: f64, d0: f64, d1: f64| {
        let s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if s * d0 <= 0.0 {
            0.0
        } else if d0 * d1 <= 0.0 && s.abs() > 3.0 * d0.abs() {
            3.0 * d0
        } else {
            s
        }
    };
    d[0] = end(h[0], h[1], del[0], del[1]);
    d[n - 1] = end(h[n - 2], h[n - 3], del[n - 2], del[n - 3]);
    d
}

impl RadialProfile {
    pub fn nodes(&self) -> &[f64] {
        &self.r
    }

    pub fn values(&self) -> &[f64] {
        &self.phi
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn ell(&self) -> f64 {
        self.ell
    }

    /// `R = ψ(ℓ)`.
    pub fn radius(&self) -> f64 {
        *self.r.last().unwrap()
    }

    pub fn prefactor(&self) -> Prefactor {
        self.prefactor
    }

    /// `φ(r)`, clamped to `[0, R]`.
    pub fn eval(&self, r: f64) -> f64 {
        let n = self.r.len();
        if r <= 0.0 {
            return self.phi[0];
        }
        if r >= self.radius() {
            return self.phi[n - 1];
        }
        let k = self.r.partition_point(|v| *v <= r).clamp(1, n - 1) - 1;
        let h = self.r[k + 1] - self.r[k];
        let s = (r - self.r[k]) / h;
        let (y0, y1, d0, d1) = (self.phi[k], self.phi[k + 1], self.slope[k] * h, self.slope[k + 1] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * y0 + (s3 - 2.0 * s2 + s) * d0 + (-2.0 * s3 + 3.0 * s2) * y1 + (s3 - s2) * d1
    }

    fn differences(&self, i: usize) -> (f64, f64) {
        let (h1, h2) = (self.r[i] - self.r[i - 1], self.r[i + 1] - self.r[i]);
        let (y0, y1, y2) = (self.phi[i - 1], self.phi[i], self.phi[i + 1]);
        let d1 = -h2 / (h1 * (h1 + h2)) * y0 + (h2 - h1) / (h1 * h2) * y1 + h1 / (h2 * (h1 + h2)) * y2;
        let d2 = 2.0 * (y0 / (h1 * (h1 + h2)) - y1 / (h1 * h2) + y2 / (h2 * (h1 + h2)));
        (d1, d2)
    }

    /// `(φ′)²φ″ + h(φ)/(4p⁴)` at every interior node from centered differences;
    /// with `p = 1/√2` this is `(φ′)²φ″ + h(φ)`.
    pub fn ode_residuals(&self, m: &MonotoneRhs1D) -> Vec<f64> {
        let scale = 1.0 / (4.0 * self.prefactor.value().powi(4));
        (1..self.r.len() - 1)
            .map(|i| {
                let (d1, d2) = self.differences(i);
                d1 * d1 * d2 + scale * m.h(self.phi[i])
            })
            .collect()
    }

    /// Largest ODE residual outside the first `skip` nodes.
    pub fn max_ode_residual(&self, m: &MonotoneRhs1D, skip: usize) -> f64 {
        self.ode_residuals(m).iter().skip(skip.saturating_sub(1)).fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn is_decreasing(&self) -> bool {
        self.phi.windows(2).all(|w| w[1] < w[0]) && self.r.windows(2).all(|w| w[1] > w[0])
    }

    /// Nonpositive second differences.
    pub fn is_concave(&self) -> bool {
        (1..self.r.len() - 1).all(|i| self.differences(i).1 <= 1e-9 * self.a.abs().max(1.0))
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!(
            "# RADIALPROFILE a={} l={} R={} prefactor={}\n",
            sci(self.a),
            sci(self.ell),
            sci(self.radius()),
            sci(self.prefactor.value())
        );
        for (r, v) in self.r.iter().zip(&self.phi) {
            s.push_str(&format!("{},{}\n", sci(*r), sci(*v)));
        }
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Sub,
    Super,
}

/// `C(σ|x−z|^{4/3} + d)` (sub) or `C(d − σ|x−z|^{4/3})` (super).
pub fn cone_field(d: &Arc<GridDomain>, c: f64, z: &[f64], dshift: f64, o: Orientation) -> ScalarField {
    ScalarField::from_fn(d, |x| {
        let r = dist(x, z);
        let k = SIGMA * r.powf(4.0 / 3.0);
        match o {
            Orientation::Sub => c * (k + dshift),
            Orientation::Super => c * (dshift - k),
        }
    })
}

fn dist(x: &[f64], z: &[f64]) -> f64 {
    x.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// `v = (σ(R^{4/3} − |x|^{4/3})/β)^β` with `β = 3/(3−γ)`, zero outside `B_R(0)`.
pub fn power_subsolution(gamma: f64, radius: f64, d: &Arc<GridDomain>) -> Result<ScalarField> {
    if !(gamma > 0.0 && gamma < 3.0) {
        return Err(Error::Parameter(format!("power sub-solution needs 0 < γ < 3, got {gamma}")));
    }
    if !(radius > 0.0) {
        return Err(Error::Parameter(format!("radius must be positive, got {radius}")));
    }
    let beta = 3.0 / (3.0 - gamma);
    Ok(ScalarField::from_fn(d, |x| {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let g = SIGMA * (radius.powf(4.0 / 3.0) - r.powf(4.0 / 3.0)) / beta;
        if g > 0.0 {
            g.powf(beta)
        } else {
            0.0
        }
    }))
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 3.0) || !gamma.is_finite() {
        return Err(Error::Parameter(format!("the exact family needs γ > 3, got {gamma}")));
    }
    Ok(())
}

/// `∫₀¹ (1 − t^{γ+1})^{−1/4} dt`, integrated in `τ = (1 − t)^{1/4}`.
pub fn family_integral(gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    let r = integrate(
        |tau| {
            let w = tau.powi(4);
            let gap = -((gamma + 1.0) * (-w).ln_1p()).exp_m1();
            4.0 * tau.powi(3) * gap.powf(-0.25)
        },
        0.0,
        1.0,
        &OUTER,
    )?;
    Ok(r.value)
}

/// `a(γ, R)`: the height at which the profile of `Δ∞u = −u|u|^{γ−1}` reaches zero
/// exactly at radius `R`, `a(γ, R) = [I ((γ+1)/4)^{1/4} / R]^{4/(γ−3)}`.
pub fn family_amplitude(gamma: f64, radius: f64) -> Result<f64> {
    if !(radius > 0.0) {
        return Err(Error::Parameter(format!("radius must be positive, got {radius}")));
    }
    let i = family_integral(gamma)?;
    Ok((i * ((gamma + 1.0) / 4.0).powf(0.25) / radius).powf(4.0 / (gamma - 3.0)))
}

/// `h(t) = t^γ` on `[0, ∞)`.
pub fn family_rhs(gamma: f64) -> Result<MonotoneRhs1D> {
    MonotoneRhs1D::new(RhsSpec::new(Expr::Pow(Box::new(Expr::T), gamma), Default::default())?, 0.0)
}

/// `Δ∞u = −u|u|^{γ−1}` as a right-hand side.
pub fn family_equation(gamma: f64) -> RhsSpec {
    RhsSpec::new(Expr::Neg(Box::new(Expr::Pow(Box::new(Expr::T), gamma))), Default::default())
        .expect("no coefficients")
}

/// Profile on `[0, 1]` for the exact family.
pub fn family_profile(gamma: f64) -> Result<RadialProfile> {
    let a = family_amplitude(gamma, 1.0)?;
    build_profile(&family_rhs(gamma)?, a, Prefactor::InvSqrt2)
}

/// Odd reflection about `r = 1`, even reflection about `r = 2`, then period 4.
/// The argument is rescaled by the computed profile radius so that zeros land
/// exactly on odd integers.
pub fn periodic_extension(p: &RadialProfile, r: f64) -> f64 {
    let s = r.rem_euclid(4.0);
    let rad = p.radius();
    if s <= 1.0 {
        p.eval(s * rad)
    } else if s <= 2.0 {
        -p.eval((2.0 - s) * rad)
    } else if s <= 3.0 {
        -p.eval((s - 2.0) * rad)
    } else {
        p.eval((4.0 - s) * rad)
    }
}

/// `u_k(x) = (2k−1)^{4/(γ−3)} φ∞((2k−1)|x|)` sampled on a domain centred at the origin.
pub fn exact_family(gamma: f64, k: u32, d: &Arc<GridDomain>) -> Result<(ScalarField, RadialProfile)> {
    check_gamma(gamma)?;
    if k == 0 {
        return Err(Error::Parameter("k must be a positive integer".into()));
    }
    let p = family_profile(gamma)?;
    let u = sample_family(&p, gamma, k, d);
    Ok((u, p))
}

/// Samples `u_k` from an existing family profile.
pub fn sample_family(p: &RadialProfile, gamma: f64, k: u32, d: &Arc<GridDomain>) -> ScalarField {
    let m = (2 * k - 1) as f64;
    let amp = m.powf(4.0 / (gamma - 3.0));
    ScalarField::from_fn(d, |x| {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        amp * periodic_extension(p, m * r)
    })
}

/// Largest `|Δ∞u + u|u|^{γ−1}|` over interior nodes farther than `3h` from every
/// shell `|x| = j/(2k−1)`.
pub fn family_residual(u: &ScalarField, gamma: f64, k: u32, params: &SchemeParams) -> Result<f64> {
    let d = u.domain();
    let s = build_stencil(d, params.width)?;
    let m = (2 * k - 1) as f64;
    let band = 3.0 * d.h();
    let mut worst = 0.0f64;
    let mut x = vec![0.0; d.dim()];
    for &i in d.interior() {
        d.point_into(i, &mut x);
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let shell = (m * r).round() / m;
        if (r - shell).abs() <= band {
            continue;
        }
        let v = u.get(i);
        let res = apply_inf_lap(u, i, &s, params) + v * v.abs().powf(gamma - 1.0);
        worst = worst.max(res.abs());
    }
    Ok(worst)
}
