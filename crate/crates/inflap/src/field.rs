//! Nodal fields and boundary traces.

use std::sync::Arc;

use crate::domain::{GridDomain, Tag};
use crate::error::{Error, Result};
use crate::fmt::sci;

/// Real values on the non-exterior nodes of a domain. Exterior entries are NaN
/// and never read.
#[derive(Clone, Debug)]
pub struct ScalarField {
    domain: Arc<GridDomain>,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn constant(domain: &Arc<GridDomain>, c: f64) -> ScalarField {
        ScalarField::from_fn(domain, |_| c)
    }

    pub fn from_fn(domain: &Arc<GridDomain>, f: impl Fn(&[f64]) -> f64) -> ScalarField {
        let mut values = vec![f64::NAN; domain.len()];
        let mut x = vec![0.0; domain.dim()];
        for i in domain.non_exterior() {
            domain.point_into(i, &mut x);
            values[i] = f(&x);
        }
        ScalarField { domain: domain.clone(), values }
    }

    /// Wraps raw values; non-exterior entries must be finite.
    pub fn from_values(domain: &Arc<GridDomain>, mut values: Vec<f64>) -> Result<ScalarField> {
        if values.len() != domain.len() {
            return Err(Error::Parameter(format!(
                "field has {} values for {} nodes",
                values.len(),
                domain.len()
            )));
        }
        for (i, v) in values.iter_mut().enumerate() {
            if domain.tag(i) == Tag::Exterior {
                *v = f64::NAN;
            } else if !v.is_finite() {
                return Err(Error::NonFinite(format!("field value at node {i}")));
            }
        }
        Ok(ScalarField { domain: domain.clone(), values })
    }

    pub fn domain(&self) -> &Arc<GridDomain> {
        &self.domain
    }

    pub fn get(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn set(&mut self, i: usize, v: f64) {
        self.values[i] = v;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn same_domain(&self, other: &ScalarField) -> bool {
        Arc::ptr_eq(&self.domain, &other.domain) || *self.domain == *other.domain
    }

    pub fn ensure_same_domain(&self, other: &ScalarField) -> Result<()> {
        if self.same_domain(other) {
            Ok(())
        } else {
            Err(Error::DomainMismatch)
        }
    }

    pub fn max(&self) -> f64 {
        self.domain.non_exterior().map(|i| self.values[i]).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.domain.non_exterior().map(|i| self.values[i]).fold(f64::INFINITY, f64::min)
    }

    pub fn sup_abs(&self) -> f64 {
        self.domain.non_exterior().map(|i| self.values[i].abs()).fold(0.0, f64::max)
    }

    /// Largest `|self − other|` over non-exterior nodes.
    pub fn distance(&self, other: &ScalarField) -> Result<f64> {
        self.ensure_same_domain(other)?;
        Ok(self
            .domain
            .non_exterior()
            .map(|i| (self.values[i] - other.values[i]).abs())
            .fold(0.0, f64::max))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        let mut out = self.clone();
        for i in self.domain.non_exterior() {
            out.values[i] = f(self.values[i]);
        }
        out
    }

    /// Writes `x0,…,value` rows for every non-exterior node.
    pub fn to_csv(&self) -> String {
        let nd = self.domain.dim();
        let mut s = String::new();
        for k in 0..nd {
            s.push_str(&format!("x{k},"));
        }
        s.push_str("value\n");
        let mut x = vec![0.0; nd];
        for i in self.domain.non_exterior() {
            self.domain.point_into(i, &mut x);
            for v in &x {
                s.push_str(&sci(*v));
                s.push(',');
            }
            s.push_str(&sci(self.values[i]));
            s.push('\n');
        }
        s
    }
}

/// Dirichlet data on the boundary nodes, in the order of [`GridDomain::boundary`].
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryTrace {
    values: Vec<f64>,
    lo: f64,
    hi: f64,
}

impl BoundaryTrace {
    pub fn new(domain: &GridDomain, values: Vec<f64>) -> Result<BoundaryTrace> {
        if values.len() != domain.boundary().len() {
            return Err(Error::Parameter(format!(
                "trace has {} values for {} boundary nodes",
                values.len(),
                domain.boundary().len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("boundary value".into()));
        }
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Ok(BoundaryTrace { values, lo, hi })
    }

    pub fn constant(domain: &GridDomain, c: f64) -> Result<BoundaryTrace> {
        BoundaryTrace::new(domain, vec![c; domain.boundary().len()])
    }

    pub fn from_fn(domain: &GridDomain, f: impl Fn(&[f64]) -> f64) -> Result<BoundaryTrace> {
        let vals = domain.boundary().iter().map(|&i| f(&domain.point(i))).collect();
        BoundaryTrace::new(domain, vals)
    }

    pub fn from_field(u: &ScalarField) -> Result<BoundaryTrace> {
        let d = u.domain();
        BoundaryTrace::new(d, d.boundary().iter().map(|&i| u.get(i)).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `ℓ = inf b`.
    pub fn lo(&self) -> f64 {
        self.lo
    }

    /// `L = sup b`.
    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn sup_abs(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    pub fn is_constant(&self) -> bool {
        self.lo == self.hi
    }

    pub fn scaled(&self, c: f64) -> BoundaryTrace {
        let values: Vec<f64> = self.values.iter().map(|v| v * c).collect();
        let (lo, hi) = if c >= 0.0 { (self.lo * c, self.hi * c) } else { (self.hi * c, self.lo * c) };
        BoundaryTrace { values, lo, hi }
    }
}

/// `L − ℓ`, the oscillation of the boundary data.
pub fn oscillation(b: &BoundaryTrace) -> f64 {
    b.hi() - b.lo()
}
