//! Radial grids, power-law tails and quadrature for radial and singly
//! translated functions on R^N.

use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{fornberg, gl_cached, lagrange_basis, sphere_area};

/// Points per interpolation / product-integration stencil.
pub const STENCIL: usize = 8;
const EDGE_STENCIL: usize = 6;
/// Points per finite-difference stencil.
const FD_POINTS: usize = 5;
/// Angular Gauss-Legendre points for translated integrals.
pub const THETA_POINTS: usize = 96;

/// Sum of power laws `sum c * r^-p` modelling a function beyond the grid.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Tail {
    /// `(coefficient, exponent)` pairs sorted by exponent.
    pub terms: Vec<(f64, f64)>,
}

const TAIL_TERMS: usize = 6;

impl Tail {
    pub fn none() -> Self {
        Tail { terms: Vec::new() }
    }

    pub fn power(coef: f64, exponent: f64) -> Self {
        Tail { terms: vec![(coef, exponent)] }.normalized()
    }

    pub fn from_terms(terms: Vec<(f64, f64)>) -> Self {
        Tail { terms }.normalized()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Smallest exponent present, i.e. the slowest decay.
    pub fn leading_exponent(&self) -> Option<f64> {
        self.terms.first().map(|t| t.1)
    }

    pub fn leading_coef(&self) -> f64 {
        self.terms.first().map(|t| t.0).unwrap_or(0.0)
    }

    fn normalized(mut self) -> Self {
        self.terms.retain(|t| t.0 != 0.0 && t.0.is_finite());
        self.terms.sort_by(|a, b| a.1.total_cmp(&b.1));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(self.terms.len());
        for (c, p) in self.terms {
            match merged.last_mut() {
                Some(last) if (last.1 - p).abs() < 1e-12 => last.0 += c,
                _ => merged.push((c, p)),
            }
        }
        merged.retain(|t| t.0 != 0.0);
        merged.truncate(TAIL_TERMS);
        Tail { terms: merged }
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.terms.iter().map(|(c, p)| c * r.powf(-p)).sum()
    }

    pub fn scale(&self, a: f64) -> Self {
        Tail { terms: self.terms.iter().map(|(c, p)| (a * c, *p)).collect() }.normalized()
    }

    pub fn add(&self, other: &Tail) -> Self {
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&other.terms);
        Tail { terms }.normalized()
    }

    pub fn mul(&self, other: &Tail) -> Self {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (a, p) in &self.terms {
            for (b, q) in &other.terms {
                terms.push((a * b, p + q));
            }
        }
        Tail { terms }.normalized()
    }

    /// Tail of `|f|^q`, expanded to third order around the leading term.
    pub fn abs_pow(&self, q: f64) -> Self {
        let Some(&(c0, p0)) = self.terms.first() else {
            return Tail::none();
        };
        let lead = Tail::power(c0.abs().powf(q), q * p0);
        let x = Tail { terms: self.terms[1..].iter().map(|(c, p)| (c / c0, p - p0)).collect() }.normalized();
        if x.is_empty() {
            return lead;
        }
        let mut series = Tail::power(1.0, 0.0);
        let mut xm = Tail::power(1.0, 0.0);
        let mut binom = 1.0;
        for m in 1..=3 {
            binom *= (q - (m as f64 - 1.0)) / m as f64;
            xm = xm.mul(&x);
            series = series.add(&xm.scale(binom));
        }
        lead.mul(&series)
    }

    pub fn derivative(&self) -> Self {
        Tail { terms: self.terms.iter().map(|(c, p)| (-p * c, p + 1.0)).collect() }.normalized()
    }

    /// Positive part: kept only when the leading coefficient is positive.
    pub fn positive_part(&self) -> Self {
        if self.leading_coef() > 0.0 {
            self.clone()
        } else {
            Tail::none()
        }
    }

    /// `int_R^inf r^k f(r) dr`, or a divergence error.
    pub fn moment_beyond(&self, r_max: f64, k: f64) -> Result<f64> {
        let mut s = 0.0;
        for (c, p) in &self.terms {
            if *p <= k + 1.0 {
                return Err(Error::Divergent { exponent: *p, required: k + 1.0 });
            }
            s += c * r_max.powf(k + 1.0 - p) / (p - k - 1.0);
        }
        Ok(s)
    }
}

/// One integration interval and its interpolation stencil.
#[derive(Clone, Debug)]
struct Panel {
    a: f64,
    b: f64,
    idx: Vec<usize>,
    x: Vec<f64>,
}

/// Radial nodes with volume-weighted composite quadrature on `[0, R_max]`.
#[derive(Debug)]
pub struct RadialGrid {
    dim: usize,
    r: Vec<f64>,
    w: Vec<f64>,
    r_max: f64,
    stretch: f64,
    panels: Vec<Panel>,
    d1: Vec<[(usize, f64); FD_POINTS]>,
    d2: Vec<[(usize, f64); FD_POINTS]>,
    d1_low: Vec<[(usize, f64); 3]>,
}

/// Build a geometric radial grid; `stretch = 1` gives uniform spacing.
pub fn make_grid(dim: usize, m: usize, r_max: f64, stretch: f64) -> Result<Arc<RadialGrid>> {
    RadialGrid::new(dim, m, r_max, stretch).map(Arc::new)
}

impl RadialGrid {
    pub fn new(dim: usize, m: usize, r_max: f64, stretch: f64) -> Result<Self> {
        if dim < 5 {
            return Err(Error::param(format!("dimension {dim} below 5")));
        }
        if m < 16 {
            return Err(Error::param(format!("node count {m} below 16")));
        }
        if !(r_max > 0.0 && r_max.is_finite()) {
            return Err(Error::param(format!("cutoff radius {r_max} must be positive")));
        }
        if !(stretch >= 1.0 && stretch.is_finite()) {
            return Err(Error::param(format!("stretch {stretch} must be at least 1")));
        }
        let r: Vec<f64> = if stretch == 1.0 {
            (0..m).map(|i| r_max * (i + 1) as f64 / m as f64).collect()
        } else {
            let total = (stretch.powi(m as i32) - 1.0) / (stretch - 1.0);
            let h0 = r_max / total;
            let mut v: Vec<f64> = (0..m).map(|i| h0 * (stretch.powi(i as i32 + 1) - 1.0) / (stretch - 1.0)).collect();
            v[m - 1] = r_max;
            v
        };
        let mut grid =
            RadialGrid { dim, r, w: Vec::new(), r_max, stretch, panels: Vec::new(), d1: Vec::new(), d2: Vec::new(), d1_low: Vec::new() };
        grid.panels = (0..m).map(|k| grid.panel(k)).collect();
        let omega = sphere_area(dim - 1);
        grid.w = grid.power_weights((dim - 1) as f64).into_iter().map(|w| w * omega).collect();
        grid.build_fd();
        Ok(grid)
    }

    /// Node coordinate with mirroring through the origin for negative indices.
    fn coord(&self, idx: isize) -> (usize, f64) {
        if idx >= 0 {
            (idx as usize, self.r[idx as usize])
        } else {
            let j = (-idx - 1) as usize;
            (j, -self.r[j])
        }
    }

    fn panel(&self, k: usize) -> Panel {
        let m = self.r.len() as isize;
        let (a, b) = if k == 0 { (0.0, self.r[0]) } else { (self.r[k - 1], self.r[k]) };
        // Centered stencils in the interior; near R_max a shorter shifted
        // stencil keeps every weight positive.
        let mut len = STENCIL as isize;
        let mut start = k as isize - len / 2;
        if start + len > m {
            len = EDGE_STENCIL as isize;
            start = (k as isize - len / 2).min(m - len);
        }
        let (idx, x) = (start..start + len).map(|i| self.coord(i)).unzip();
        Panel { a, b, idx, x }
    }

    fn build_fd(&mut self) {
        let m = self.r.len() as isize;
        for i in 0..m {
            let mut start = i - 2;
            if start + FD_POINTS as isize > m {
                start = m - FD_POINTS as isize;
            }
            let mut idx = [0usize; FD_POINTS];
            let mut x = [0.0; FD_POINTS];
            for s in 0..FD_POINTS {
                let (j, c) = self.coord(start + s as isize);
                idx[s] = j;
                x[s] = c;
            }
            let c = fornberg(self.r[i as usize], &x, 2);
            let mut a1 = [(0usize, 0.0); FD_POINTS];
            let mut a2 = [(0usize, 0.0); FD_POINTS];
            for s in 0..FD_POINTS {
                a1[s] = (idx[s], c[1][s]);
                a2[s] = (idx[s], c[2][s]);
            }
            self.d1.push(a1);
            self.d2.push(a2);

            let mut lstart = i - 1;
            if lstart + 3 > m {
                lstart = m - 3;
            }
            let mut lidx = [0usize; 3];
            let mut lx = [0.0; 3];
            for s in 0..3 {
                let (j, c) = self.coord(lstart + s as isize);
                lidx[s] = j;
                lx[s] = c;
            }
            let cl = fornberg(self.r[i as usize], &lx, 1);
            let mut l1 = [(0usize, 0.0); 3];
            for s in 0..3 {
                l1[s] = (lidx[s], cl[1][s]);
            }
            self.d1_low.push(l1);
        }
    }

    /// Weights `W_j` with `sum W_j f_j ~ int_0^R r^power f(r) dr`.
    pub fn power_weights(&self, power: f64) -> Vec<f64> {
        let mut w = vec![0.0; self.r.len()];
        for (k, pw) in self.panel_power_weights(power).into_iter().enumerate() {
            for (s, val) in pw.into_iter().enumerate() {
                w[self.panels[k].idx[s]] += val;
            }
        }
        w
    }

    /// Per-interval stencil weights for `int_{I_k} r^power f(r) dr`.
    pub(crate) fn panel_power_weights(&self, power: f64) -> Vec<Vec<f64>> {
        let n_gl = ((STENCIL as f64 + power) / 2.0).ceil() as usize + 2;
        let (gx, gw) = gl_cached(n_gl.min(160));
        let mut basis = [0.0; STENCIL];
        self.panels
            .iter()
            .map(|p| {
                let half = 0.5 * (p.b - p.a);
                let mid = 0.5 * (p.a + p.b);
                let n = p.x.len();
                let mut out = vec![0.0; n];
                for (xi, wi) in gx.iter().zip(gw) {
                    let x = mid + half * xi;
                    lagrange_basis(&p.x, x, &mut basis[..n]);
                    let f = wi * half * x.powf(power);
                    for s in 0..n {
                        out[s] += f * basis[s];
                    }
                }
                out
            })
            .collect()
    }

    /// Stencil node indices of interval k (interval 0 is `[0, r_0]`).
    pub(crate) fn panel_stencil(&self, k: usize) -> (f64, f64, &[usize], &[f64]) {
        let p = &self.panels[k];
        (p.a, p.b, &p.idx, &p.x)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.r
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn stretch(&self) -> f64 {
        self.stretch
    }

    /// Area of the unit sphere in R^N.
    pub fn omega(&self) -> f64 {
        sphere_area(self.dim - 1)
    }

    /// Volume of the ball of radius `R_max`.
    pub fn ball_volume(&self) -> f64 {
        self.omega() * self.r_max.powi(self.dim as i32) / self.dim as f64
    }

    /// Same node pattern dilated by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Arc<RadialGrid>> {
        make_grid(self.dim, self.r.len(), self.r_max * factor, self.stretch)
    }

    /// True when both grids describe the same nodes.
    pub fn same_as(&self, other: &RadialGrid) -> bool {
        self.dim == other.dim && self.r.len() == other.r.len() && self.r_max == other.r_max && self.stretch == other.stretch
    }

    /// Key identifying the node layout (used for kernel caches).
    pub fn key(&self) -> (usize, usize, u64, u64) {
        (self.dim, self.r.len(), self.r_max.to_bits(), self.stretch.to_bits())
    }

    /// Interpolate nodal values at radius `r` inside `[0, R_max]`.
    pub fn interpolate(&self, values: &[f64], r: f64) -> f64 {
        let r = r.abs();
        let k = self.r.partition_point(|&x| x < r).min(self.r.len() - 1);
        let p = &self.panels[k];
        let mut basis = [0.0; STENCIL];
        let n = p.x.len();
        lagrange_basis(&p.x, r, &mut basis[..n]);
        p.idx.iter().zip(basis).map(|(&j, b)| values[j] * b).sum()
    }

    pub fn first_derivative(&self, values: &[f64]) -> Vec<f64> {
        self.d1.iter().map(|st| st.iter().map(|(j, c)| c * values[*j]).sum()).collect()
    }

    pub fn second_derivative(&self, values: &[f64]) -> Vec<f64> {
        self.d2.iter().map(|st| st.iter().map(|(j, c)| c * values[*j]).sum()).collect()
    }

    fn first_derivative_low(&self, values: &[f64]) -> Vec<f64> {
        self.d1_low.iter().map(|st| st.iter().map(|(j, c)| c * values[*j]).sum()).collect()
    }

    /// `-Delta f` for a radial function: `-(f'' + (N-1) f' / r)`.
    pub fn neg_laplacian(&self, values: &[f64]) -> Vec<f64> {
        let d1 = self.first_derivative(values);
        let d2 = self.second_derivative(values);
        let nm1 = (self.dim - 1) as f64;
        self.r.iter().zip(d1.iter().zip(&d2)).map(|(r, (a, b))| -(b + nm1 * a / r)).collect()
    }
}

/// Nodal values of a radial function plus its tail beyond `R_max`.
#[derive(Clone, Debug)]
pub struct RadialFn {
    pub grid: Arc<RadialGrid>,
    pub values: Vec<f64>,
    pub tail: Tail,
}

impl RadialFn {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<f64>, tail: Tail) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::param(format!("{} values for {} nodes", values.len(), grid.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("non-finite nodal value"));
        }
        Ok(RadialFn { grid, values, tail })
    }

    pub fn from_fn<F: Fn(f64) -> f64>(grid: &Arc<RadialGrid>, f: F, tail: Tail) -> Self {
        let values = grid.nodes().iter().map(|&r| f(r)).collect();
        RadialFn { grid: grid.clone(), values, tail }
    }

    pub fn zeros(grid: &Arc<RadialGrid>) -> Self {
        RadialFn { grid: grid.clone(), values: vec![0.0; grid.len()], tail: Tail::none() }
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    /// Value at radius `r`, using the tail model past `R_max`.
    pub fn eval(&self, r: f64) -> f64 {
        let r = r.abs();
        if r > self.grid.r_max() {
            self.tail.eval(r)
        } else {
            self.grid.interpolate(&self.values, r)
        }
    }

    pub fn scale(&self, a: f64) -> Self {
        RadialFn { grid: self.grid.clone(), values: self.values.iter().map(|v| a * v).collect(), tail: self.tail.scale(a) }
    }

    pub fn add(&self, other: &RadialFn) -> Result<Self> {
        self.check_grid(other)?;
        Ok(RadialFn {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
            tail: self.tail.add(&other.tail),
        })
    }

    pub fn sub(&self, other: &RadialFn) -> Result<Self> {
        self.add(&other.scale(-1.0))
    }

    pub fn mul(&self, other: &RadialFn) -> Result<Self> {
        self.check_grid(other)?;
        Ok(RadialFn {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect(),
            tail: self.tail.mul(&other.tail),
        })
    }

    pub fn square(&self) -> Self {
        RadialFn { grid: self.grid.clone(), values: self.values.iter().map(|v| v * v).collect(), tail: self.tail.mul(&self.tail) }
    }

    pub fn abs_pow(&self, p: f64) -> Self {
        RadialFn { grid: self.grid.clone(), values: self.values.iter().map(|v| v.abs().powf(p)).collect(), tail: self.tail.abs_pow(p) }
    }

    pub fn positive_part(&self) -> Self {
        RadialFn { grid: self.grid.clone(), values: self.values.iter().map(|v| v.max(0.0)).collect(), tail: self.tail.positive_part() }
    }

    pub fn is_nonnegative(&self) -> bool {
        self.values.iter().all(|v| *v >= 0.0) && self.tail.leading_coef() >= 0.0
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub(crate) fn check_grid(&self, other: &RadialFn) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(Error::param("functions live on different grids"))
        }
    }

    /// Resample onto another grid (interpolation plus tail).
    pub fn resample(&self, grid: &Arc<RadialGrid>) -> Self {
        if self.grid.same_as(grid) {
            return RadialFn { grid: grid.clone(), values: self.values.clone(), tail: self.tail.clone() };
        }
        RadialFn::from_fn(grid, |r| self.eval(r), self.tail.clone())
    }

    /// Write `(r, value)` rows.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let io = |e: csv::Error| Error::Io { path: path.display().to_string(), msg: e.to_string() };
        let mut w = csv::Writer::from_path(path).map_err(io)?;
        w.write_record(["r", "value"]).map_err(io)?;
        for (r, v) in self.grid.nodes().iter().zip(&self.values) {
            w.write_record([format!("{r:.17e}"), format!("{v:.17e}")]).map_err(io)?;
        }
        w.flush().map_err(|e| Error::Io { path: path.display().to_string(), msg: e.to_string() })
    }

    /// Read `(r, value)` rows and resample them onto `grid`.
    pub fn read_csv(path: &Path, grid: &Arc<RadialGrid>, tail: Tail) -> Result<Self> {
        let io = |e: csv::Error| Error::Io { path: path.display().to_string(), msg: e.to_string() };
        let mut rd = csv::Reader::from_path(path).map_err(io)?;
        let mut pts: Vec<(f64, f64)> = Vec::new();
        for rec in rd.records() {
            let rec = rec.map_err(io)?;
            let parse = |i: usize| -> Result<f64> {
                rec.get(i)
                    .and_then(|s| s.trim().parse::<f64>().ok())
                    .ok_or_else(|| Error::Io { path: path.display().to_string(), msg: format!("bad field {i} in row {rec:?}") })
            };
            pts.push((parse(0)?, parse(1)?));
        }
        if pts.len() < 2 {
            return Err(Error::Io { path: path.display().to_string(), msg: "need at least two rows".into() });
        }
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let last = pts[pts.len() - 1].0;
        let lin = |r: f64| -> f64 {
            if r <= pts[0].0 {
                return pts[0].1;
            }
            if r > last {
                return tail.eval(r);
            }
            let k = pts.partition_point(|p| p.0 < r);
            let (r0, v0) = pts[k - 1];
            let (r1, v1) = pts[k];
            v0 + (v1 - v0) * (r - r0) / (r1 - r0)
        };
        let values = grid.nodes().iter().map(|&r| lin(r)).collect();
        RadialFn::new(grid.clone(), values, tail.clone())
    }
}

/// A radial profile dilated by `delta` (amplitude `delta^{-(N-2)/2}`) and
/// translated by distance `rho` along a fixed axis.
#[derive(Clone, Debug)]
pub struct OffsetFn {
    pub profile: RadialFn,
    pub delta: f64,
    pub rho: f64,
}

impl OffsetFn {
    pub fn new(profile: RadialFn, delta: f64, rho: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::param(format!("dilation {delta} must be positive")));
        }
        if !(rho >= 0.0 && rho.is_finite()) {
            return Err(Error::param(format!("offset {rho} must be finite and nonnegative")));
        }
        Ok(OffsetFn { profile, delta, rho })
    }

    pub fn centered(profile: RadialFn) -> Self {
        OffsetFn { profile, delta: 1.0, rho: 0.0 }
    }

    fn amplitude(&self) -> f64 {
        self.delta.powf(-(self.profile.dim() as f64 - 2.0) / 2.0)
    }

    /// Value as a function of the distance `s = |x - y|` to the center.
    pub fn eval_at_distance(&self, s: f64) -> f64 {
        self.amplitude() * self.profile.eval(s / self.delta)
    }

    /// Value at a point given by `|x|` and its axial coordinate `x . e`.
    pub fn eval_point(&self, norm_x: f64, axial: f64) -> f64 {
        let t2 = (norm_x * norm_x - 2.0 * axial * self.rho + self.rho * self.rho).max(0.0);
        self.eval_at_distance(t2.sqrt())
    }
}

/// A two-component radial state on a shared grid.
#[derive(Clone, Debug)]
pub struct Pair {
    pub u: RadialFn,
    pub v: RadialFn,
}

impl Pair {
    pub fn new(u: RadialFn, v: RadialFn) -> Result<Self> {
        u.check_grid(&v)?;
        Ok(Pair { u, v })
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.u.grid
    }

    pub fn scale(&self, t: f64) -> Self {
        Pair { u: self.u.scale(t), v: self.v.scale(t) }
    }

    pub fn zeros(grid: &Arc<RadialGrid>) -> Self {
        Pair { u: RadialFn::zeros(grid), v: RadialFn::zeros(grid) }
    }

    pub fn is_nonnegative(&self) -> bool {
        self.u.is_nonnegative() && self.v.is_nonnegative()
    }
}

/// A pair whose components share one dilation and one translation.
#[derive(Clone, Debug)]
pub struct OffsetPair {
    pub u: OffsetFn,
    pub v: OffsetFn,
}

impl OffsetPair {
    pub fn new(u: OffsetFn, v: OffsetFn) -> Result<Self> {
        u.profile.check_grid(&v.profile)?;
        if u.delta != v.delta || u.rho != v.rho {
            return Err(Error::param("components must share dilation and offset"));
        }
        Ok(OffsetPair { u, v })
    }

    pub fn scale(&self, t: f64) -> Self {
        let mut out = self.clone();
        out.u.profile = self.u.profile.scale(t);
        out.v.profile = self.v.profile.scale(t);
        out
    }
}

/// `int_{R^N} f(|x|) dx` including the analytic tail.
pub fn integrate(f: &RadialFn) -> Result<f64> {
    let core: f64 = f.grid.weights().iter().zip(&f.values).map(|(w, v)| w * v).sum();
    let g = &f.grid;
    let tail = if f.tail.is_empty() { 0.0 } else { g.omega() * f.tail.moment_beyond(g.r_max(), (g.dim() - 1) as f64)? };
    Ok(core + tail)
}

/// Dirichlet integral with its accuracy diagnostics.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Seminorm {
    pub value: f64,
    /// Difference from a second-order evaluation, relative.
    pub est_rel_error: f64,
    /// Set when the estimate exceeds the requested tolerance.
    pub coarse: bool,
}

/// `int |grad f|^2` for radial `f`.
pub fn dirichlet_seminorm(f: &RadialFn) -> Result<f64> {
    dirichlet_seminorm_checked(f, f64::INFINITY).map(|s| s.value)
}

pub fn dirichlet_seminorm_checked(f: &RadialFn, tol: f64) -> Result<Seminorm> {
    let g = &f.grid;
    let d = g.first_derivative(&f.values);
    let value = gradient_energy(f, &d)?;
    let low = gradient_energy(f, &g.first_derivative_low(&f.values))?;
    let est = if value > 0.0 { (value - low).abs() / value } else { 0.0 };
    Ok(Seminorm { value, est_rel_error: est, coarse: est > tol })
}

fn gradient_energy(f: &RadialFn, d: &[f64]) -> Result<f64> {
    let g = &f.grid;
    let core: f64 = g.weights().iter().zip(d).map(|(w, v)| w * v * v).sum();
    let dt = f.tail.derivative();
    let sq = dt.mul(&dt);
    let tail = if sq.is_empty() { 0.0 } else { g.omega() * sq.moment_beyond(g.r_max(), (g.dim() - 1) as f64)? };
    Ok(core + tail)
}

/// `(int |f|^p)^{1/p}`.
pub fn lp_norm(f: &RadialFn, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::param(format!("exponent {p} below 1")));
    }
    Ok(integrate(&f.abs_pow(p))?.powf(1.0 / p))
}

/// Angular rule on `[0, pi]` with measure `|S^{N-2}| sin^{N-2}`; mirrored
/// nodes carry exactly opposite cosines.
pub(crate) fn theta_rule(dim: usize) -> Vec<(f64, f64, f64)> {
    let (x, w) = gl_cached(THETA_POINTS);
    let omega = sphere_area(dim - 2);
    let n = x.len();
    let mut out = vec![(0.0, 0.0, 0.0); n];
    for i in 0..n.div_ceil(2) {
        let th = 0.5 * PI * (1.0 + x[i]);
        let c = th.cos();
        let s = th.sin();
        let wt = omega * 0.5 * PI * w[i] * s.powi(dim as i32 - 2);
        out[i] = (c, s, wt);
        out[n - 1 - i] = (-c, s, wt);
    }
    out
}

/// `delta^N int f(|delta sigma + y|) g(|sigma|) d sigma` with `|y| = rho`,
/// i.e. the overlap of `f` with `g` dilated by `delta` and translated by `rho`.
pub(crate) fn dilated_overlap<F: Fn(f64) -> f64>(f: F, g: &RadialFn, delta: f64, rho: f64) -> Result<f64> {
    let grid = &g.grid;
    let dim = grid.dim();
    let omega = grid.omega();
    let rule = theta_rule(dim);
    let mut total = 0.0;
    for ((&s, &w), &gv) in grid.nodes().iter().zip(grid.weights()).zip(&g.values) {
        if gv == 0.0 {
            continue;
        }
        let ds = delta * s;
        let mut acc = 0.0;
        let half = rule.len() / 2;
        for &(c, _, wt) in &rule[..half] {
            let base = rho * rho + ds * ds;
            let a = f((base + 2.0 * rho * ds * c).max(0.0).sqrt());
            let b = f((base - 2.0 * rho * ds * c).max(0.0).sqrt());
            acc += wt * (a + b);
        }
        total += w / omega * gv * acc;
    }
    if !g.tail.is_empty() {
        let lead = g.tail.leading_exponent().unwrap_or(0.0);
        if lead <= dim as f64 {
            return Err(Error::Divergent { exponent: lead, required: dim as f64 });
        }
        // Far region: |x| ~ delta * s, so f is sampled radially.
        let r0 = grid.r_max();
        let far = crate::quad::gl_integrate(
            |t: f64| {
                let s = r0 / t;
                let jac = r0 / (t * t);
                jac * s.powi(dim as i32 - 1) * g.tail.eval(s) * f((delta * s).max(rho))
            },
            0.0,
            1.0,
            48,
        );
        total += omega * far;
    }
    Ok(total * delta.powi(dim as i32))
}

/// `int f(|x|) g(|x - y|) dx` with `|y| = rho`.
pub fn bicenter_integral(f: &RadialFn, g: &RadialFn, rho: f64) -> Result<f64> {
    if !(rho >= 0.0 && rho.is_finite()) {
        return Err(Error::param(format!("offset {rho} must be finite and nonnegative")));
    }
    if rho == 0.0 {
        let fg = f.resample(&g.grid).mul(g)?;
        return integrate(&fg);
    }
    dilated_overlap(|r| f.eval(r), g, 1.0, rho)
}

/// Weighted integrals of `|h|^{2*}` used by barycenter maps.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct AxisMoments {
    pub mass: f64,
    pub axial: f64,
    pub spread: f64,
}

/// Mass, axial first moment of `x/(1+|x|)` and spread about `xi * e` for
/// the density `|h|^{2*}`.
pub fn axis_moment_integrals(h: &OffsetFn, xi: f64) -> Result<AxisMoments> {
    let dim = h.profile.dim();
    let crit = 2.0 * dim as f64 / (dim as f64 - 2.0);
    let density = h.profile.abs_pow(crit);
    axis_moments_of_density(&density, h.delta, h.rho, xi)
}

/// Same as `axis_moment_integrals` for a precomputed radial density,
/// dilated by `delta` (mass preserving) and translated by `rho`.
pub(crate) fn axis_moments_of_density(density: &RadialFn, delta: f64, rho: f64, xi: f64) -> Result<AxisMoments> {
    let grid = &density.grid;
    let dim = grid.dim();
    let omega = grid.omega();
    let rule = theta_rule(dim);
    let half = rule.len() / 2;
    let mut mass = 0.0;
    let mut axial = 0.0;
    let mut spread = 0.0;
    for ((&s, &w), &d) in grid.nodes().iter().zip(grid.weights()).zip(&density.values) {
        if d == 0.0 {
            continue;
        }
        let ds = delta * s;
        let mut m_acc = 0.0;
        let mut a_acc = 0.0;
        let mut s_acc = 0.0;
        for &(c, sn, wt) in &rule[..half] {
            let mut pair_axial = 0.0;
            for sign in [1.0, -1.0] {
                let cc = sign * c;
                let ax = rho + ds * cc;
                let tr = ds * sn;
                let nx = (ax * ax + tr * tr).sqrt();
                let inv = 1.0 / (1.0 + nx);
                pair_axial += ax * inv;
                let da = ax * inv - xi;
                let dt = tr * inv;
                s_acc += wt * (da * da + dt * dt).sqrt();
            }
            m_acc += 2.0 * wt;
            a_acc += wt * pair_axial;
        }
        let f = w / omega * d;
        mass += f * m_acc;
        axial += f * a_acc;
        spread += f * s_acc;
    }
    if !density.tail.is_empty() {
        let t = integrate_tail_only(density)?;
        mass += t;
        let far_spread: f64 = rule.iter().map(|(c, _, wt)| wt * (1.0 - 2.0 * xi * c + xi * xi).sqrt()).sum::<f64>() / sphere_area(dim - 1);
        spread += t * far_spread;
    }
    if rho == 0.0 {
        axial = 0.0;
    }
    Ok(AxisMoments { mass, axial, spread })
}

fn integrate_tail_only(f: &RadialFn) -> Result<f64> {
    let g = &f.grid;
    Ok(g.omega() * f.tail.moment_beyond(g.r_max(), (g.dim() - 1) as f64)?)
}
