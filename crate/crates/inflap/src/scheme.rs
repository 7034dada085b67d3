//! Monotone wide-stencil discretisation of `Δ∞u = ⟨D²u Du, Du⟩`.
//!
//! Directions are the coprime lattice vectors of the `(2w+1)^N` neighbourhood,
//! grouped into classes of equal length `d_c`. With `U_c` and `V_c` the largest
//! and smallest neighbour value in class `c` and `t = u(x)`, the cross terms
//!
//! ```text
//! G(c', c) = 2 [ ((U_c' - t)/d_c')³ + ((V_c - t)/d_c)³ ] / (3 (d_c' + d_c))
//! ```
//!
//! are one-sided versions of `((u')³)' / 3` along the pair of rays through `x`.
//! The operator is the average of `max_c' min_c G` and `min_c max_c' G`, which is
//! nondecreasing in every neighbour, strictly decreasing in `t`, homogeneous of
//! degree three and odd. In one dimension it reduces to `(A³ - B³)/(3h)` with `A`
//! and `B` the forward and backward slopes.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::domain::{GridDomain, Tag};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::rhs::RhsSpec;

pub(crate) const MAX_CLASSES: usize = 32;
const NO_SLOT: u32 = u32::MAX;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SchemeParams {
    pub width: usize,
    /// Kept for configuration compatibility; the cubic form needs no gradient guard.
    pub delta_reg: f64,
}

impl Default for SchemeParams {
    fn default() -> Self {
        SchemeParams { width: 2, delta_reg: 1e-10 }
    }
}

impl SchemeParams {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 {
            return Err(Error::Parameter("stencil width must be at least 1".into()));
        }
        if !(self.delta_reg > 0.0) {
            return Err(Error::Parameter("delta_reg must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Pair {
    plus: u32,
    minus: u32,
    dir: u16,
}

#[derive(Clone, Debug)]
pub struct Stencil {
    domain: Arc<GridDomain>,
    width: usize,
    dirs: Vec<Vec<i32>>,
    dir_class: Vec<u8>,
    lengths: Vec<f64>,
    weights: Vec<f64>,
    slot: Vec<u32>,
    start: Vec<u32>,
    pairs: Vec<Pair>,
}

/// Canonical coprime directions in `[-w, w]^N` (first nonzero entry positive),
/// sorted lexicographically. [`build_stencil`] keeps only the axes when `w = 1`.
pub fn directions(n: usize, w: usize) -> Vec<Vec<i32>> {
    let w = w as i32;
    let side = (2 * w + 1) as usize;
    let mut out = Vec::new();
    for code in 0..side.pow(n as u32) {
        let mut c = code;
        let mut v = vec![0i32; n];
        for k in (0..n).rev() {
            v[k] = (c % side) as i32 - w;
            c /= side;
        }
        let lead = v.iter().find(|x| **x != 0);
        if lead.map(|x| *x > 0).unwrap_or(false) && v.iter().fold(0, |g, x| gcd(g, x.unsigned_abs())) == 1 {
            out.push(v);
        }
    }
    out.sort();
    out
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub fn build_stencil(d: &Arc<GridDomain>, w: usize) -> Result<Stencil> {
    if w == 0 {
        return Err(Error::Parameter("stencil width must be at least 1".into()));
    }
    let n = d.dim();
    let dirs: Vec<Vec<i32>> = if w == 1 {
        directions(n, 1).into_iter().filter(|v| v.iter().filter(|x| **x != 0).count() == 1).collect()
    } else {
        directions(n, w)
    };
    let norms2: Vec<i64> = dirs.iter().map(|v| v.iter().map(|x| (*x as i64) * (*x as i64)).sum()).collect();
    let mut distinct = norms2.clone();
    distinct.sort();
    distinct.dedup();
    if distinct.len() > MAX_CLASSES {
        return Err(Error::Parameter(format!("width {w} gives more than {MAX_CLASSES} length classes")));
    }
    let dir_class: Vec<u8> = norms2.iter().map(|q| distinct.binary_search(q).unwrap() as u8).collect();
    let lengths: Vec<f64> = distinct.iter().map(|q| (*q as f64).sqrt() * d.h()).collect();
    let k = lengths.len();
    let mut weights = vec![0.0; k * k];
    for a in 0..k {
        for b in 0..k {
            weights[a * k + b] = 2.0 / (3.0 * (lengths[a] + lengths[b]));
        }
    }
    let neg: Vec<Vec<i32>> = dirs.iter().map(|v| v.iter().map(|x| -x).collect()).collect();
    let mut slot = vec![NO_SLOT; d.len()];
    let mut start = Vec::with_capacity(d.interior().len() + 1);
    let mut pairs = Vec::new();
    let ok = |j: Option<usize>| j.filter(|j| d.tag(*j) != Tag::Exterior);
    for (s, &i) in d.interior().iter().enumerate() {
        slot[i] = s as u32;
        start.push(pairs.len() as u32);
        for (q, v) in dirs.iter().enumerate() {
            if let (Some(p), Some(m)) = (ok(d.offset(i, v)), ok(d.offset(i, &neg[q]))) {
                pairs.push(Pair { plus: p as u32, minus: m as u32, dir: q as u16 });
            }
        }
        let got = pairs.len() - *start.last().unwrap() as usize;
        if got < n {
            return Err(Error::DegenerateStencil { node: i, pairs: got, needed: n });
        }
    }
    start.push(pairs.len() as u32);
    Ok(Stencil { domain: d.clone(), width: w, dirs, dir_class, lengths, weights, slot, start, pairs })
}

impl Stencil {
    pub fn domain(&self) -> &Arc<GridDomain> {
        &self.domain
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Physical lengths of the direction classes.
    pub fn class_lengths(&self) -> &[f64] {
        &self.lengths
    }

    fn pairs_of(&self, node: usize) -> &[Pair] {
        let s = self.slot[node];
        assert!(s != NO_SLOT, "node {node} is not interior");
        let s = s as usize;
        &self.pairs[self.start[s] as usize..self.start[s + 1] as usize]
    }

    /// Surviving `(offset, plus node, minus node)` triples at an interior node.
    pub fn node_pairs(&self, node: usize) -> Vec<(Vec<i32>, usize, usize)> {
        self.pairs_of(node).iter().map(|p| (self.dirs[p.dir as usize].clone(), p.plus as usize, p.minus as usize)).collect()
    }

    /// Class extremes at `node` read from `values`.
    pub fn gather(&self, values: &[f64], node: usize) -> Local {
        let mut loc = Local::empty();
        let mut idx = [u8::MAX; MAX_CLASSES];
        for p in self.pairs_of(node) {
            let c = self.dir_class[p.dir as usize] as usize;
            let (a, b) = (values[p.plus as usize], values[p.minus as usize]);
            let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
            let k = if idx[c] == u8::MAX {
                idx[c] = loc.n as u8;
                loc.class[loc.n] = c as u8;
                loc.up[loc.n] = hi;
                loc.lo[loc.n] = lo;
                loc.inv_d[loc.n] = 1.0 / self.lengths[c];
                loc.n += 1;
                continue;
            } else {
                idx[c] as usize
            };
            loc.up[k] = loc.up[k].max(hi);
            loc.lo[k] = loc.lo[k].min(lo);
        }
        loc
    }

    pub(crate) fn weight(&self, a: u8, b: u8) -> f64 {
        self.weights[a as usize * self.lengths.len() + b as usize]
    }
}

/// Neighbour extremes of one node, grouped by direction class.
#[derive(Clone, Copy, Debug)]
pub struct Local {
    n: usize,
    class: [u8; MAX_CLASSES],
    up: [f64; MAX_CLASSES],
    lo: [f64; MAX_CLASSES],
    inv_d: [f64; MAX_CLASSES],
}

impl Local {
    fn empty() -> Local {
        Local { n: 0, class: [0; MAX_CLASSES], up: [0.0; MAX_CLASSES], lo: [0.0; MAX_CLASSES], inv_d: [0.0; MAX_CLASSES] }
    }

    /// Smallest neighbour value.
    pub fn min(&self) -> f64 {
        self.lo[..self.n].iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Largest neighbour value.
    pub fn max(&self) -> f64 {
        self.up[..self.n].iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Discrete operator with the centre value set to `t`.
    pub fn eval(&self, s: &Stencil, t: f64) -> f64 {
        self.eval_slope(s, t).0
    }

    /// Operator value and its derivative in the centre value (one-sided at kinks).
    pub fn eval_slope(&self, s: &Stencil, t: f64) -> (f64, f64) {
        let n = self.n;
        let mut a = [0.0; MAX_CLASSES];
        let mut b = [0.0; MAX_CLASSES];
        let mut da = [0.0; MAX_CLASSES];
        let mut db = [0.0; MAX_CLASSES];
        for k in 0..n {
            let p = (self.up[k] - t) * self.inv_d[k];
            let q = (self.lo[k] - t) * self.inv_d[k];
            a[k] = p * p * p;
            b[k] = q * q * q;
            da[k] = -3.0 * p * p * self.inv_d[k];
            db[k] = -3.0 * q * q * self.inv_d[k];
        }
        let mut maxmin = (f64::NEG_INFINITY, 0.0);
        let mut colmax = [(f64::NEG_INFINITY, 0.0); MAX_CLASSES];
        for i in 0..n {
            let mut rowmin = (f64::INFINITY, 0.0);
            for j in 0..n {
                let w = s.weight(self.class[i], self.class[j]);
                let g = (a[i] + b[j]) * w;
                if g < rowmin.0 {
                    rowmin = (g, (da[i] + db[j]) * w);
                }
                if g > colmax[j].0 {
                    colmax[j] = (g, (da[i] + db[j]) * w);
                }
            }
            if rowmin.0 > maxmin.0 {
                maxmin = rowmin;
            }
        }
        let mut minmax = (f64::INFINITY, 0.0);
        for v in colmax.iter().take(n) {
            if v.0 < minmax.0 {
                minmax = *v;
            }
        }
        (0.5 * (maxmin.0 + minmax.0), 0.5 * (maxmin.1 + minmax.1))
    }
}

/// Discrete `Δ∞u` at an interior node.
pub fn apply_inf_lap(u: &ScalarField, node: usize, s: &Stencil, _p: &SchemeParams) -> f64 {
    s.gather(u.values(), node).eval(s, u.get(node))
}

/// `Δ∞u − f(x, u)` at interior nodes, zero on the boundary; the flag reports
/// saturation in `f`.
pub fn residual_field(u: &ScalarField, f: &RhsSpec, s: &Stencil, p: &SchemeParams) -> Result<(ScalarField, bool)> {
    let d = s.domain();
    if !Arc::ptr_eq(u.domain(), d) && **u.domain() != **d {
        return Err(Error::DomainMismatch);
    }
    let mut r = vec![f64::NAN; d.len()];
    for &i in d.boundary() {
        r[i] = 0.0;
    }
    let mut sat = false;
    let mut x = vec![0.0; d.dim()];
    for &i in d.interior() {
        d.point_into(i, &mut x);
        let (fv, s_flag) = f.eval_flagged(&x, u.get(i));
        sat |= s_flag;
        r[i] = apply_inf_lap(u, i, s, p) - fv;
    }
    let field = ScalarField::from_values(d, r).map_err(|_| Error::NonFinite("residual".into()))?;
    Ok((field, sat))
}

/// Largest `|residual|` over interior nodes accepted by `keep`.
pub fn residual_sup(u: &ScalarField, f: &RhsSpec, s: &Stencil, p: &SchemeParams, keep: impl Fn(usize) -> bool) -> Result<f64> {
    let (r, _) = residual_field(u, f, s, p)?;
    Ok(s.domain().interior().iter().filter(|i| keep(**i)).map(|&i| r.get(i).abs()).fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{build_domain, Shape};
    use crate::SIGMA;
    use proptest::prelude::*;

    fn ball(r: f64, h: f64) -> Arc<GridDomain> {
        build_domain(&Shape::Ball { center: vec![0.0, 0.0], radius: r }, h).unwrap()
    }

    fn centre(d: &GridDomain) -> usize {
        d.nearest(&[0.0, 0.0])
    }

    #[test]
    fn deep_interior_directions() {
        let d = ball(1.0, 0.1);
        let s = build_stencil(&d, 1).unwrap();
        let offs: Vec<Vec<i32>> = s.node_pairs(centre(&d)).into_iter().map(|p| p.0).collect();
        assert_eq!(offs, vec![vec![0, 1], vec![1, 0]]);
        let s = build_stencil(&d, 2).unwrap();
        let mut offs: Vec<Vec<i32>> = s.node_pairs(centre(&d)).into_iter().map(|p| p.0).collect();
        offs.sort();
        let mut want = vec![
            vec![1, 0],
            vec![0, 1],
            vec![1, 1],
            vec![1, -1],
            vec![2, 1],
            vec![1, 2],
            vec![2, -1],
            vec![1, -2],
        ];
        want.sort();
        assert_eq!(offs, want);
        assert_eq!(s.class_lengths().len(), 3);
    }

    #[test]
    fn truncation_keeps_full_pairs_only() {
        let d = ball(1.0, 0.1);
        let s = build_stencil(&d, 2).unwrap();
        for &i in d.interior() {
            for (_, p, m) in s.node_pairs(i) {
                assert_ne!(d.tag(p), Tag::Exterior);
                assert_ne!(d.tag(m), Tag::Exterior);
            }
            assert!(s.node_pairs(i).len() >= 2);
        }
        let east = d.nearest(&[0.8, 0.0]);
        assert_eq!(d.tag(east), Tag::Interior);
        assert!(s.node_pairs(east).len() < 8);
    }

    #[test]
    fn affine_fields_are_harmonic() {
        let d = ball(1.0, 0.125);
        let s = build_stencil(&d, 2).unwrap();
        let u = ScalarField::from_fn(&d, |x| 0.3 * x[0] - 1.7 * x[1] + 2.0);
        for &i in d.interior() {
            assert!(apply_inf_lap(&u, i, &s, &SchemeParams::default()).abs() < 1e-12);
        }
    }

    #[test]
    fn one_dimensional_form_is_exact_for_quadratics() {
        let d = build_domain(&Shape::Box { lo: vec![-1.0], hi: vec![1.0] }, 0.01).unwrap();
        let s = build_stencil(&d, 1).unwrap();
        let u = ScalarField::from_fn(&d, |x| 0.5 * x[0] * x[0]);
        for &i in d.interior() {
            let x = d.point(i)[0];
            let want = x * x + 0.01 * 0.01 / 12.0;
            let got = apply_inf_lap(&u, i, &s, &SchemeParams::default());
            assert!((got - want).abs() < 1e-10, "{x} {got} {want}");
        }
    }

    #[test]
    fn cone_value_close_to_amplitude_cubed() {
        let h = 1.0 / 64.0;
        let d = ball(1.0, h);
        let s = build_stencil(&d, 2).unwrap();
        let u = ScalarField::from_fn(&d, |x| 2.0 * SIGMA * (x[0] * x[0] + x[1] * x[1]).powf(2.0 / 3.0));
        let mut worst: f64 = 0.0;
        for &i in d.interior() {
            let full = s.node_pairs(i).len() == 8;
            if full && d.point(i).iter().map(|v| v * v).sum::<f64>().sqrt() >= 3.0 * h {
                worst = worst.max((apply_inf_lap(&u, i, &s, &SchemeParams::default()) - 8.0).abs());
            }
        }
        assert!(worst < 0.5, "worst {worst}");
    }

    proptest! {
        #[test]
        fn monotone_homogeneous_and_odd(seed in proptest::collection::vec(-1.0f64..1.0, 49), bump in 0.0f64..0.5, c in 0.1f64..4.0, k in 0usize..49) {
            let d = build_domain(&Shape::Box { lo: vec![0.0, 0.0], hi: vec![1.0, 1.0] }, 1.0 / 6.0).unwrap();
            let s = build_stencil(&d, 2).unwrap();
            let vals: Vec<f64> = (0..d.len()).map(|i| seed[i % 49]).collect();
            let u = ScalarField::from_values(&d, vals).unwrap();
            let p = SchemeParams::default();
            let node = d.nearest(&[0.5, 0.5]);
            let base = apply_inf_lap(&u, node, &s, &p);
            let scaled = apply_inf_lap(&u.map(|v| c * v), node, &s, &p);
            prop_assert!((scaled - c * c * c * base).abs() <= 1e-10 * (1.0 + scaled.abs()));
            let neg = apply_inf_lap(&u.map(|v| -v), node, &s, &p);
            prop_assert!((neg + base).abs() <= 1e-10 * (1.0 + base.abs()));
            let j = d.non_exterior().nth(k % d.non_exterior().count()).unwrap();
            let mut w = u.clone();
            w.set(j, u.get(j) + bump);
            let after = apply_inf_lap(&w, node, &s, &p);
            if j == node {
                prop_assert!(after <= base + 1e-12);
            } else {
                prop_assert!(after >= base - 1e-12);
            }
        }
    }
}
