//! Uniform axis-aligned grids with an interior / boundary / exterior mask.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Tag {
    Interior,
    Boundary,
    Exterior,
}

impl Tag {
    fn to_char(self) -> char {
        match self {
            Tag::Interior => 'I',
            Tag::Boundary => 'B',
            Tag::Exterior => 'E',
        }
    }
}

/// Shape descriptor accepted by [`build_domain`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields, try_from = "RawShape")]
pub enum Shape {
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Mask { path: String },
}

// Flat mirror of `Shape`. Internally tagged enums buffer their content, which
// breaks number parsing under serde_json's arbitrary precision mode.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawShape {
    kind: String,
    center: Option<Vec<f64>>,
    radius: Option<f64>,
    lo: Option<Vec<f64>>,
    hi: Option<Vec<f64>>,
    path: Option<String>,
}

impl TryFrom<RawShape> for Shape {
    type Error = String;

    fn try_from(r: RawShape) -> std::result::Result<Shape, String> {
        fn need<T>(v: Option<T>, kind: &str, key: &str) -> std::result::Result<T, String> {
            v.ok_or_else(|| format!("{kind} domain needs `{key}`"))
        }
        let extra = |keys: &[(&str, bool)]| -> std::result::Result<(), String> {
            match keys.iter().find(|(_, present)| *present) {
                Some((k, _)) => Err(format!("unknown field `{k}` for {} domain", r.kind)),
                None => Ok(()),
            }
        };
        match r.kind.as_str() {
            "ball" => {
                extra(&[("lo", r.lo.is_some()), ("hi", r.hi.is_some()), ("path", r.path.is_some())])?;
                Ok(Shape::Ball { center: need(r.center, "ball", "center")?, radius: need(r.radius, "ball", "radius")? })
            }
            "box" => {
                extra(&[("center", r.center.is_some()), ("radius", r.radius.is_some()), ("path", r.path.is_some())])?;
                Ok(Shape::Box { lo: need(r.lo, "box", "lo")?, hi: need(r.hi, "box", "hi")? })
            }
            "mask" => {
                extra(&[
                    ("center", r.center.is_some()),
                    ("radius", r.radius.is_some()),
                    ("lo", r.lo.is_some()),
                    ("hi", r.hi.is_some()),
                ])?;
                Ok(Shape::Mask { path: need(r.path, "mask", "path")? })
            }
            other => Err(format!("unknown domain kind `{other}`, expected ball, box or mask")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Geometry {
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Mask,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Radii {
    pub out_radius: f64,
    pub out_center: Vec<f64>,
    pub in_radius: f64,
    pub in_center: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridDomain {
    h: f64,
    origin: Vec<f64>,
    dims: Vec<usize>,
    strides: Vec<usize>,
    tags: Vec<Tag>,
    interior: Vec<usize>,
    boundary: Vec<usize>,
    boundary_slot: Vec<usize>,
    dist: Vec<f64>,
    geometry: Geometry,
    radii: Radii,
}

const NO_SLOT: usize = usize::MAX;

/// Builds the grid for a shape at spacing `h`.
///
/// A node is interior when it and all of its Moore neighbours lie in the closed
/// shape; boundary nodes are the remaining nodes Moore-adjacent to an interior node.
pub fn build_domain(shape: &Shape, h: f64) -> Result<Arc<GridDomain>> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Parameter(format!("spacing h = {h} must be positive")));
    }
    match shape {
        Shape::Ball { center, radius } => {
            if !(*radius > 0.0) || center.is_empty() {
                return Err(Error::Parameter("ball needs R > 0 and a center".into()));
            }
            let m = (radius / h).ceil() as usize + 1;
            let dims = vec![2 * m + 1; center.len()];
            let origin: Vec<f64> = center.iter().map(|c| c - m as f64 * h).collect();
            let r2 = radius * radius;
            let tol = 1e-9 * h * radius;
            let geom = Geometry::Ball { center: center.clone(), radius: *radius };
            let c = center.clone();
            GridDomain::from_predicate(h, origin, dims, geom, move |x| {
                x.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() <= r2 + tol
            })
        }
        Shape::Box { lo, hi } => {
            if lo.is_empty() || lo.len() != hi.len() || lo.iter().zip(hi).any(|(a, b)| !(b > a)) {
                return Err(Error::Parameter("box needs hi > lo componentwise".into()));
            }
            let mut dims = Vec::with_capacity(lo.len());
            for (a, b) in lo.iter().zip(hi) {
                let q = (b - a) / h;
                let n = if (q - q.round()).abs() < 1e-9 { q.round() } else { q.floor() } as usize;
                dims.push(n + 3);
            }
            let origin: Vec<f64> = lo.iter().map(|a| a - h).collect();
            let tol = 1e-9 * h;
            let geom = Geometry::Box { lo: lo.clone(), hi: hi.clone() };
            let (l, u) = (lo.clone(), hi.clone());
            GridDomain::from_predicate(h, origin, dims, geom, move |x| {
                x.iter().zip(l.iter().zip(&u)).all(|(v, (a, b))| *v >= a - tol && *v <= b + tol)
            })
        }
        Shape::Mask { path } => {
            let text = std::fs::read_to_string(path)?;
            let d = GridDomain::from_mask_str(&text)?;
            if (d.h - h).abs() > 1e-12 * h.max(d.h) {
                return Err(Error::MalformedMask(format!(
                    "mask spacing {} differs from requested {}",
                    d.h, h
                )));
            }
            Ok(d)
        }
    }
}

impl GridDomain {
    fn from_predicate(
        h: f64,
        origin: Vec<f64>,
        dims: Vec<usize>,
        geometry: Geometry,
        inside: impl Fn(&[f64]) -> bool,
    ) -> Result<Arc<GridDomain>> {
        let strides = strides_for(&dims);
        let n: usize = dims.iter().product();
        let mut x = vec![0.0; dims.len()];
        let mut closed = vec![false; n];
        for (i, c) in closed.iter_mut().enumerate() {
            point_into(&origin, &dims, &strides, h, i, &mut x);
            *c = inside(&x);
        }
        let moore = moore_offsets(dims.len());
        let mut tags = vec![Tag::Exterior; n];
        let mut coords = vec![0isize; dims.len()];
        for i in 0..n {
            if !closed[i] {
                continue;
            }
            unravel(&dims, &strides, i, &mut coords);
            let all = moore.iter().all(|off| {
                neighbor(&dims, &strides, &coords, off).map(|j| closed[j]).unwrap_or(false)
            });
            if all {
                tags[i] = Tag::Interior;
            }
        }
        for i in 0..n {
            if tags[i] == Tag::Interior {
                continue;
            }
            unravel(&dims, &strides, i, &mut coords);
            let near = moore.iter().any(|off| {
                neighbor(&dims, &strides, &coords, off)
                    .map(|j| tags[j] == Tag::Interior)
                    .unwrap_or(false)
            });
            if near {
                tags[i] = Tag::Boundary;
            }
        }
        if !tags.contains(&Tag::Interior) {
            return Err(Error::EmptyInterior { h });
        }
        GridDomain::assemble(h, origin, dims, tags, geometry).map(Arc::new)
    }

    /// Builds a domain from explicit tags, validating the mask invariants.
    pub fn from_tags(h: f64, origin: Vec<f64>, dims: Vec<usize>, tags: Vec<Tag>) -> Result<Arc<GridDomain>> {
        if !(h > 0.0) || origin.len() != dims.len() || dims.is_empty() {
            return Err(Error::MalformedMask("inconsistent spacing, origin or dims".into()));
        }
        if tags.len() != dims.iter().product::<usize>() {
            return Err(Error::MalformedMask(format!(
                "expected {} tags, found {}",
                dims.iter().product::<usize>(),
                tags.len()
            )));
        }
        GridDomain::assemble(h, origin, dims, tags, Geometry::Mask).map(Arc::new)
    }

    fn assemble(h: f64, origin: Vec<f64>, dims: Vec<usize>, tags: Vec<Tag>, geometry: Geometry) -> Result<GridDomain> {
        let strides = strides_for(&dims);
        let nd = dims.len();
        let mut interior = Vec::new();
        let mut boundary = Vec::new();
        let mut boundary_slot = vec![NO_SLOT; tags.len()];
        let mut coords = vec![0isize; nd];
        for (i, t) in tags.iter().enumerate() {
            match t {
                Tag::Interior => {
                    unravel(&dims, &strides, i, &mut coords);
                    for axis in 0..nd {
                        for s in [-1i32, 1] {
                            let mut off = vec![0i32; nd];
                            off[axis] = s;
                            match neighbor(&dims, &strides, &coords, &off) {
                                Some(j) if tags[j] != Tag::Exterior => {}
                                _ => {
                                    return Err(Error::MalformedMask(format!(
                                        "interior node {i} touches the exterior"
                                    )))
                                }
                            }
                        }
                    }
                    interior.push(i);
                }
                Tag::Boundary => {
                    boundary_slot[i] = boundary.len();
                    boundary.push(i);
                }
                Tag::Exterior => {}
            }
        }
        if interior.is_empty() {
            return Err(Error::EmptyInterior { h });
        }
        if boundary.is_empty() {
            return Err(Error::MalformedMask("no boundary nodes".into()));
        }
        let feature: Vec<bool> = tags.iter().map(|t| *t != Tag::Interior).collect();
        let dist: Vec<f64> = distance_transform(&dims, &feature).into_iter().map(|d| d.sqrt() * h).collect();
        let mut d = GridDomain {
            h,
            origin,
            dims,
            strides,
            tags,
            interior,
            boundary,
            boundary_slot,
            dist,
            geometry,
            radii: Radii { out_radius: 0.0, out_center: vec![], in_radius: 0.0, in_center: vec![] },
        };
        d.radii = d.compute_radii();
        debug_assert!(d.radii.in_radius <= d.radii.out_radius);
        Ok(d)
    }

    fn compute_radii(&self) -> Radii {
        match &self.geometry {
            Geometry::Ball { center, radius } => Radii {
                out_radius: *radius,
                out_center: center.clone(),
                in_radius: *radius,
                in_center: center.clone(),
            },
            Geometry::Box { lo, hi } => {
                let c: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect();
                let diag = lo.iter().zip(hi).map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt();
                let side = lo.iter().zip(hi).map(|(a, b)| b - a).fold(f64::INFINITY, f64::min);
                Radii { out_radius: 0.5 * diag, out_center: c.clone(), in_radius: 0.5 * side, in_center: c }
            }
            Geometry::Mask => {
                let (out_radius, out_center) = self.node_enclosing_ball();
                let (in_radius, in_center) = self.grid_in_ball();
                Radii { out_radius: out_radius.max(in_radius), out_center, in_radius, in_center }
            }
        }
    }

    /// Enclosing ball of the non-exterior nodes, centred at their bounding-box midpoint.
    pub fn node_enclosing_ball(&self) -> (f64, Vec<f64>) {
        let nd = self.dim();
        let mut lo = vec![f64::INFINITY; nd];
        let mut hi = vec![f64::NEG_INFINITY; nd];
        let mut x = vec![0.0; nd];
        for i in self.non_exterior() {
            self.point_into(i, &mut x);
            for k in 0..nd {
                lo[k] = lo[k].min(x[k]);
                hi[k] = hi[k].max(x[k]);
            }
        }
        let c: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
        let mut r: f64 = 0.0;
        for i in self.non_exterior() {
            self.point_into(i, &mut x);
            r = r.max(dist(&x, &c));
        }
        (r, c)
    }

    /// Largest node distance to the nearest non-interior node, and a maximiser.
    pub fn grid_in_ball(&self) -> (f64, Vec<f64>) {
        let mut best = (0.0, self.interior[0]);
        for &i in &self.interior {
            if self.dist[i] > best.0 {
                best = (self.dist[i], i);
            }
        }
        (best.0, self.point(best.1))
    }

    pub fn from_mask_str(text: &str) -> Result<Arc<GridDomain>> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::MalformedMask("empty file".into()))?;
        if header.trim() != "GRIDMASK v1" {
            return Err(Error::MalformedMask(format!("bad header `{}`", header.trim())));
        }
        let meta: Vec<&str> = lines
            .next()
            .ok_or_else(|| Error::MalformedMask("missing dimension line".into()))?
            .split_whitespace()
            .collect();
        let nd: usize = meta
            .first()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::MalformedMask("missing N".into()))?;
        if nd == 0 || meta.len() != nd + 2 {
            return Err(Error::MalformedMask("dimension line must read `N h d1 .. dN`".into()));
        }
        let h: f64 = meta[1].parse().map_err(|_| Error::MalformedMask("bad spacing".into()))?;
        let dims: Vec<usize> = meta[2..]
            .iter()
            .map(|s| s.parse().map_err(|_| Error::MalformedMask(format!("bad extent `{s}`"))))
            .collect::<Result<_>>()?;
        let origin: Vec<f64> = lines
            .next()
            .ok_or_else(|| Error::MalformedMask("missing origin line".into()))?
            .split_whitespace()
            .map(|s| s.parse().map_err(|_| Error::MalformedMask(format!("bad origin `{s}`"))))
            .collect::<Result<_>>()?;
        if origin.len() != nd {
            return Err(Error::MalformedMask("origin has wrong arity".into()));
        }
        let mut tags = Vec::new();
        for line in lines {
            for ch in line.chars().filter(|c| !c.is_whitespace()) {
                tags.push(match ch {
                    'I' => Tag::Interior,
                    'B' => Tag::Boundary,
                    'E' => Tag::Exterior,
                    other => return Err(Error::MalformedMask(format!("unexpected tag `{other}`"))),
                });
            }
        }
        GridDomain::from_tags(h, origin, dims, tags)
    }

    pub fn to_mask_string(&self) -> String {
        let mut s = String::from("GRIDMASK v1\n");
        s.push_str(&format!("{} {}", self.dim(), self.h));
        for d in &self.dims {
            s.push_str(&format!(" {d}"));
        }
        s.push('\n');
        let o: Vec<String> = self.origin.iter().map(|v| format!("{v}")).collect();
        s.push_str(&o.join(" "));
        s.push('\n');
        let row = *self.dims.last().unwrap();
        for (i, t) in self.tags.iter().enumerate() {
            s.push(t.to_char());
            if (i + 1) % row == 0 {
                s.push('\n');
            }
        }
        s
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn tag(&self, i: usize) -> Tag {
        self.tags[i]
    }

    pub fn tags(&self) -> &[Tag] {
        &self.tags
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    /// Position of a boundary node inside [`GridDomain::boundary`].
    pub fn boundary_slot(&self, i: usize) -> Option<usize> {
        match self.boundary_slot[i] {
            NO_SLOT => None,
            s => Some(s),
        }
    }

    pub fn non_exterior(&self) -> impl Iterator<Item = usize> + '_ {
        self.tags.iter().enumerate().filter(|(_, t)| **t != Tag::Exterior).map(|(i, _)| i)
    }

    pub fn point(&self, i: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        self.point_into(i, &mut x);
        x
    }

    pub fn point_into(&self, i: usize, x: &mut [f64]) {
        point_into(&self.origin, &self.dims, &self.strides, self.h, i, x);
    }

    pub fn coords(&self, i: usize) -> Vec<isize> {
        let mut c = vec![0; self.dim()];
        unravel(&self.dims, &self.strides, i, &mut c);
        c
    }

    /// Node reached from `i` by an integer offset, if it lies on the grid.
    pub fn offset(&self, i: usize, off: &[i32]) -> Option<usize> {
        let mut c = vec![0; self.dim()];
        unravel(&self.dims, &self.strides, i, &mut c);
        neighbor(&self.dims, &self.strides, &c, off)
    }

    /// Grid node closest to `x` (clamped to the grid extent).
    pub fn nearest(&self, x: &[f64]) -> usize {
        let mut idx = 0;
        for k in 0..self.dim() {
            let j = ((x[k] - self.origin[k]) / self.h).round();
            let j = j.clamp(0.0, (self.dims[k] - 1) as f64) as usize;
            idx += j * self.strides[k];
        }
        idx
    }

    /// Distance from a node to the nearest non-interior node (0 off the interior).
    pub fn dist_to_boundary(&self, i: usize) -> f64 {
        self.dist[i]
    }

    pub fn radii(&self) -> &Radii {
        &self.radii
    }

    /// Diameter of the domain: exact for analytic shapes, the largest
    /// boundary-node separation for masks.
    pub fn diameter(&self) -> f64 {
        match &self.geometry {
            Geometry::Ball { radius, .. } => 2.0 * radius,
            Geometry::Box { lo, hi } => lo.iter().zip(hi).map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt(),
            Geometry::Mask => {
                let pts: Vec<Vec<f64>> = self.boundary.iter().map(|&i| self.point(i)).collect();
                let mut d: f64 = 0.0;
                for a in 0..pts.len() {
                    for b in a + 1..pts.len() {
                        d = d.max(dist(&pts[a], &pts[b]));
                    }
                }
                d
            }
        }
    }
}

/// Errors unless the domain has interior nodes, then returns its radii.
pub fn radii(d: &GridDomain) -> Result<Radii> {
    if d.interior().is_empty() {
        return Err(Error::EmptyDomain);
    }
    Ok(d.radii().clone())
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn strides_for(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

fn unravel(dims: &[usize], strides: &[usize], i: usize, c: &mut [isize]) {
    for k in 0..dims.len() {
        c[k] = ((i / strides[k]) % dims[k]) as isize;
    }
}

fn neighbor(dims: &[usize], strides: &[usize], c: &[isize], off: &[i32]) -> Option<usize> {
    let mut idx = 0usize;
    for k in 0..dims.len() {
        let v = c[k] + off[k] as isize;
        if v < 0 || v >= dims[k] as isize {
            return None;
        }
        idx += v as usize * strides[k];
    }
    Some(idx)
}

fn point_into(origin: &[f64], dims: &[usize], strides: &[usize], h: f64, i: usize, x: &mut [f64]) {
    for k in 0..dims.len() {
        x[k] = origin[k] + ((i / strides[k]) % dims[k]) as f64 * h;
    }
}

pub(crate) fn moore_offsets(nd: usize) -> Vec<Vec<i32>> {
    let mut out = Vec::new();
    let total = 3usize.pow(nd as u32);
    for code in 0..total {
        let mut c = code;
        let mut off = vec![0i32; nd];
        for o in off.iter_mut() {
            *o = (c % 3) as i32 - 1;
            c /= 3;
        }
        if off.iter().any(|v| *v != 0) {
            out.push(off);
        }
    }
    out
}

/// Squared Euclidean distance (grid units) to the nearest `feature` node,
/// by separable lower envelopes of parabolas along each axis.
pub(crate) fn distance_transform(dims: &[usize], feature: &[bool]) -> Vec<f64> {
    let big = 1e30;
    let mut d: Vec<f64> = feature.iter().map(|f| if *f { 0.0 } else { big }).collect();
    let strides = strides_for(dims);
    for axis in 0..dims.len() {
        let n = dims[axis];
        let stride = strides[axis];
        let mut line = vec![0.0; n];
        let mut out = vec![0.0; n];
        let mut v = vec![0usize; n];
        let mut z = vec![0.0; n + 1];
        for start in 0..d.len() {
            if !(start / stride).is_multiple_of(n) {
                continue;
            }
            for q in 0..n {
                line[q] = d[start + q * stride];
            }
            envelope(&line, &mut out, &mut v, &mut z);
            for q in 0..n {
                d[start + q * stride] = out[q];
            }
        }
    }
    d
}

fn envelope(f: &[f64], out: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    let mut k = 0usize;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        loop {
            let p = v[k];
            let s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
            if s <= z[k] && k > 0 {
                k -= 1;
                continue;
            }
            if s <= z[k] {
                v[0] = q;
                z[0] = f64::NEG_INFINITY;
                z[1] = f64::INFINITY;
                break;
            }
            k += 1;
            v[k] = q;
            z[k] = s;
            z[k + 1] = f64::INFINITY;
            break;
        }
    }
    k = 0;
    for q in 0..n {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let dq = q as f64 - p as f64;
        out[q] = dq * dq + f[p];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ball(r: f64, h: f64) -> Arc<GridDomain> {
        build_domain(&Shape::Ball { center: vec![0.0, 0.0], radius: r }, h).unwrap()
    }

    #[test]
    fn shape_json_round_trip() {
        let s: Shape = serde_json::from_str(r#"{"kind": "ball", "center": [0.25, 0], "radius": 0.5}"#).unwrap();
        assert_eq!(s, Shape::Ball { center: vec![0.25, 0.0], radius: 0.5 });
        let back: Shape = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
        let e = serde_json::from_str::<Shape>(r#"{"kind": "box", "lo": [0], "hi": [1], "radius": 2}"#).unwrap_err();
        assert!(e.to_string().contains("radius"));
        assert!(serde_json::from_str::<Shape>(r#"{"kind": "ball", "center": [0]}"#).is_err());
        assert!(serde_json::from_str::<Shape>(r#"{"kind": "disc", "radius": 1}"#).is_err());
    }

    #[test]
    fn coarsest_ball_has_single_interior_node() {
        let d = ball(1.0, 0.5);
        assert_eq!(d.interior().len(), 1);
        assert_eq!(d.point(d.interior()[0]), vec![0.0, 0.0]);
        assert_eq!(d.boundary().len(), 8);
        for &b in d.boundary() {
            let x = d.point(b);
            assert!(x[0].abs().max(x[1].abs()) <= 0.5 + 1e-12);
        }
    }

    #[test]
    fn unit_square_quarter_spacing() {
        let d = build_domain(&Shape::Box { lo: vec![0.0, 0.0], hi: vec![1.0, 1.0] }, 0.25).unwrap();
        assert_eq!(d.interior().len(), 9);
        assert_eq!(d.boundary().len(), 16);
    }

    #[test]
    fn too_coarse_is_empty() {
        let e = build_domain(&Shape::Ball { center: vec![0.0, 0.0], radius: 1.0 }, 1.1).unwrap_err();
        assert!(matches!(e, Error::EmptyInterior { .. }));
    }

    #[test]
    fn ball_radii() {
        let h = 0.05;
        let d = ball(1.0, h);
        let r = radii(&d).unwrap();
        assert!(r.out_radius >= 1.0 && r.out_radius <= 1.0 + 2.0 * h);
        assert!(r.in_radius >= 1.0 - 2.0 * h && r.in_radius <= 1.0);
        let (gin, _) = d.grid_in_ball();
        assert!(gin >= 1.0 - 2.0 * h && gin <= 1.0);
        let (gout, _) = d.node_enclosing_ball();
        assert!(gout <= 1.0 + 1e-12 && gout >= 1.0 - 2.0 * h);
    }

    #[test]
    fn rectangle_radii() {
        let h = 0.05;
        let d = build_domain(&Shape::Box { lo: vec![0.0, 0.0], hi: vec![2.0, 1.0] }, h).unwrap();
        let r = radii(&d).unwrap();
        assert!((r.out_radius - 5f64.sqrt() / 2.0).abs() <= 2.0 * h);
        assert!((r.in_radius - 0.5).abs() <= 2.0 * h);
        let (gin, _) = d.grid_in_ball();
        assert!((gin - 0.5).abs() <= 2.0 * h);
        let (gout, _) = d.node_enclosing_ball();
        assert!((gout - 5f64.sqrt() / 2.0).abs() <= 2.0 * h);
    }

    #[test]
    fn single_interior_mask_in_radius_is_h() {
        let text = "GRIDMASK v1\n2 0.1 3 3\n0 0\nBBB\nBIB\nBBB\n";
        let d = GridDomain::from_mask_str(text).unwrap();
        assert_eq!(d.interior().len(), 1);
        assert!((d.radii().in_radius - 0.1).abs() < 1e-15);
        assert!(d.radii().out_radius >= d.radii().in_radius);
    }

    #[test]
    fn mask_round_trip() {
        let d = ball(1.0, 0.25);
        let text = d.to_mask_string();
        let e = GridDomain::from_mask_str(&text).unwrap();
        assert_eq!(d.tags(), e.tags());
        assert_eq!(d.dims(), e.dims());
    }

    #[test]
    fn malformed_masks() {
        assert!(GridDomain::from_mask_str("GRIDMASK v2\n").is_err());
        assert!(GridDomain::from_mask_str("GRIDMASK v1\n2 0.1 2 2\n0 0\nBB\nB\n").is_err());
        assert!(GridDomain::from_mask_str("GRIDMASK v1\n2 0.1 3 3\n0 0\nBBB\nBIE\nBBB\n").is_err());
        assert!(GridDomain::from_mask_str("GRIDMASK v1\n2 0.1 3 3\n0 0\nBBB\nBXB\nBBB\n").is_err());
    }

    #[test]
    fn interval_in_one_dimension() {
        let d = build_domain(&Shape::Box { lo: vec![0.0], hi: vec![1.0] }, 1e-3).unwrap();
        assert_eq!(d.interior().len(), 999);
        assert_eq!(d.boundary().len(), 2);
        assert_eq!(d.non_exterior().count(), 1001);
    }

    #[test]
    fn distance_transform_matches_brute_force() {
        let d = ball(1.0, 0.1);
        for &i in d.interior() {
            let x = d.point(i);
            let brute = d
                .tags()
                .iter()
                .enumerate()
                .filter(|(_, t)| **t != Tag::Interior)
                .map(|(j, _)| dist(&x, &d.point(j)))
                .fold(f64::INFINITY, f64::min);
            assert!((brute - d.dist_to_boundary(i)).abs() < 1e-12);
        }
    }

    #[test]
    fn interior_never_touches_exterior_in_moore_sense() {
        let d = ball(0.7, 0.05);
        for &i in d.interior() {
            for off in moore_offsets(2) {
                let j = d.offset(i, &off).unwrap();
                assert_ne!(d.tag(j), Tag::Exterior);
            }
        }
    }
}
