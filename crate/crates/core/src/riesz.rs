//! Riesz potentials of radial functions and the sharp constants around them.
//!
//! The convolution `(|x|^-alpha * f)(r)` of a radial `f` reduces to
//! `int_0^inf s^{N-1} K(r, s) f(s) ds` with the angular kernel
//! `K(r, s) = int_{S^{N-1}} |r e_1 - s w|^-alpha dw`. On a grid this becomes a
//! dense product-integration matrix whose rows resolve the logarithmic
//! diagonal singularity by geometric grading.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quad::{adaptive, gamma_fn, gl_cached, lagrange_basis, sphere_area};
use crate::radial::{integrate, RadialFn, RadialGrid, Tail, STENCIL};

/// Riesz exponent of the critical Hartree nonlinearity.
pub const CRITICAL_ALPHA: f64 = 4.0;

/// Sharp Hardy-Littlewood-Sobolev constant `C(N, alpha)`.
pub fn hls_constant(dim: usize, alpha: f64) -> Result<f64> {
    let n = dim as f64;
    if dim < 1 || !(alpha > 0.0 && alpha < n) {
        return Err(Error::param(format!("alpha = {alpha} outside (0, {dim})")));
    }
    let a = PI.powf(alpha / 2.0) * gamma_fn((n - alpha) / 2.0) / gamma_fn(n - alpha / 2.0);
    let b = (gamma_fn(n / 2.0) / gamma_fn(n)).powf(-(n - alpha) / n);
    Ok(a * b)
}

/// Best constant of the embedding `D^{1,2} -> L^{2*}` in closed form.
pub fn sobolev_constant_closed(dim: usize) -> Result<f64> {
    if dim < 3 {
        return Err(Error::param(format!("dimension {dim} below 3")));
    }
    let n = dim as f64;
    Ok(PI * n * (n - 2.0) * (gamma_fn(n / 2.0) / gamma_fn(n)).powf(2.0 / n))
}

/// Rayleigh quotient `|grad U|^2 / |U|_{2*}^2` of the unit bubble profile
/// on a fine grid.
pub fn sobolev_rayleigh(dim: usize, delta: f64) -> Result<f64> {
    if dim < 5 {
        return Err(Error::param(format!("dimension {dim} below 5")));
    }
    let grid = crate::radial::make_grid(dim, 400, 40.0 * delta, 1.02)?;
    let u = crate::bubbles::bubble_profile(&grid, 1.0, delta);
    let crit = 2.0 * dim as f64 / (dim as f64 - 2.0);
    let grad = crate::radial::dirichlet_seminorm(&u)?;
    let norm = crate::radial::lp_norm(&u, crit)?;
    Ok(grad / (norm * norm))
}

/// Closed-form Sobolev constant, cross-checked against the bubble's
/// Rayleigh quotient to `1e-3`.
pub fn sobolev_constant(dim: usize) -> Result<f64> {
    let closed = sobolev_constant_closed(dim)?;
    if dim >= 5 {
        let rq = sobolev_rayleigh(dim, 1.0)?;
        if (rq / closed - 1.0).abs() > 1e-3 {
            return Err(Error::numerical(format!("Rayleigh quotient {rq} disagrees with closed form {closed}")));
        }
    }
    Ok(closed)
}

/// `K_alpha(r, s)` including the sphere measure.
pub fn angular_kernel(alpha: f64, r: f64, s: f64, dim: usize) -> Result<f64> {
    if dim < 2 {
        return Err(Error::param(format!("dimension {dim} below 2")));
    }
    if !(r >= 0.0 && s >= 0.0) || !r.is_finite() || !s.is_finite() {
        return Err(Error::param(format!("radii ({r}, {s}) must be finite and nonnegative")));
    }
    if r == 0.0 && s == 0.0 {
        return Err(Error::Singular("kernel at r = s = 0".into()));
    }
    if r == s && alpha >= (dim - 1) as f64 {
        return Err(Error::Singular(format!("diagonal r = s = {r} diverges for alpha = {alpha} >= N - 1 = {}", dim - 1)));
    }
    Ok(kernel_unchecked(alpha, r, s, dim))
}

fn kernel_unchecked(alpha: f64, r: f64, s: f64, dim: usize) -> f64 {
    let big = r.max(s);
    let small = r.min(s);
    if small == 0.0 {
        return sphere_area(dim - 1) * big.powf(-alpha);
    }
    if dim == 5 && alpha == 4.0 {
        return kernel_n5_a4(r, s);
    }
    kernel_quadrature(alpha, r, s, dim)
}

fn kernel_n5_a4(r: f64, s: f64) -> f64 {
    let a = r * r + s * s;
    let q = 2.0 * r * s / a;
    let omega3 = 2.0 * PI * PI;
    let shape = if q < 0.1 {
        let q2 = q * q;
        let mut term = 1.0;
        let mut sum = 0.0;
        for k in 0..14 {
            sum += 4.0 * term / (2 * k + 3) as f64;
            term *= q2;
        }
        sum
    } else {
        let one_minus_q = (r - s) * (r - s) / a;
        let atanh = 0.5 * ((1.0 + q) / one_minus_q).ln();
        4.0 * (atanh - q) / (q * q * q)
    };
    omega3 * shape / (a * a)
}

fn kernel_quadrature(alpha: f64, r: f64, s: f64, dim: usize) -> f64 {
    let omega = sphere_area(dim - 2);
    let b = 2.0 * r * s;
    let gap = (r - s) * (r - s);
    let f = |th: f64| {
        let half = (0.5 * th).sin();
        let d = gap + 2.0 * b * half * half;
        d.powf(-alpha / 2.0) * th.sin().powi(dim as i32 - 2)
    };
    let rel = (r - s).abs() / r.max(s);
    let mut breaks = vec![0.0];
    let mut t = rel.max(1e-12);
    while t < 1.0 {
        breaks.push(t);
        t *= 8.0;
    }
    breaks.push(PI);
    omega * adaptive(f, &breaks, 1e-13, 0.0)
}

/// Multipole coefficient `c1` in `avg |r e - s w|^-alpha = r^-alpha (1 + c1 (s/r)^2 + ...)`.
fn quadrupole_coefficient(dim: usize, alpha: f64) -> f64 {
    let n = dim as f64;
    (alpha / 2.0) * (alpha / 2.0 - n / 2.0 + 1.0) / (n / 2.0)
}

/// Intervals within this index distance of a row node use graded rules.
const BAND: usize = 8;
const GRADED_LEVELS: usize = 44;
const GRADED_POINTS: usize = 8;
const FAR_POINTS: usize = 12;

/// Product-integration matrix for one grid and exponent.
pub struct KernelTable {
    grid: Arc<RadialGrid>,
    alpha: f64,
    matrix: Vec<f64>,
    point_values: Vec<f64>,
    tail_columns: Mutex<HashMap<u64, Arc<Vec<f64>>>>,
}

impl std::fmt::Debug for KernelTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KernelTable").field("nodes", &self.grid.len()).field("alpha", &self.alpha).finish()
    }
}

type TableKey = ((usize, usize, u64, u64), u64);

fn table_cache() -> &'static Mutex<HashMap<TableKey, Arc<KernelTable>>> {
    static CACHE: OnceLock<Mutex<HashMap<TableKey, Arc<KernelTable>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Cached kernel table for `grid` and `alpha`.
pub fn kernel_table(grid: &Arc<RadialGrid>, alpha: f64) -> Result<Arc<KernelTable>> {
    let key = (grid.key(), alpha.to_bits());
    if let Some(t) = table_cache().lock().expect("kernel cache poisoned").get(&key) {
        return Ok(t.clone());
    }
    // Built outside the lock: rayon workers may re-enter this function.
    let built = Arc::new(KernelTable::build(grid.clone(), alpha)?);
    let mut cache = table_cache().lock().expect("kernel cache poisoned");
    Ok(cache.entry(key).or_insert(built).clone())
}

/// Points and weights of `[a, b]` graded geometrically toward `toward`.
fn graded_rule(a: f64, b: f64, toward_left: bool, out: &mut Vec<(f64, f64)>) {
    let (gx, gw) = gl_cached(GRADED_POINTS);
    let len = b - a;
    let mut hi = 1.0;
    for _ in 0..GRADED_LEVELS {
        let lo = hi * 0.5;
        let half = 0.5 * (hi - lo) * len;
        let mid = 0.5 * (hi + lo) * len;
        for (x, w) in gx.iter().zip(gw) {
            let d = mid + half * x;
            let p = if toward_left { a + d } else { b - d };
            out.push((p, w * half));
        }
        hi = lo;
    }
}

impl KernelTable {
    /// Builds a table without consulting the cache.
    pub fn build(grid: Arc<RadialGrid>, alpha: f64) -> Result<Self> {
        let dim = grid.dim();
        if !(alpha > 0.0 && alpha < dim as f64) {
            return Err(Error::param(format!("alpha = {alpha} outside (0, {dim})")));
        }
        let m = grid.len();
        let nodes = grid.nodes().to_vec();
        let rows: Vec<Vec<f64>> = (0..m).into_par_iter().map(|i| Self::row(&grid, alpha, i)).collect();
        let mut matrix = Vec::with_capacity(m * m);
        for row in rows {
            matrix.extend(row);
        }
        let upper: Vec<Vec<f64>> = (0..m)
            .into_par_iter()
            .map(|i| {
                (i..m)
                    .map(|j| {
                        if i == j {
                            angular_kernel(alpha, nodes[i], nodes[j], dim).unwrap_or(f64::INFINITY)
                        } else {
                            kernel_unchecked(alpha, nodes[i], nodes[j], dim)
                        }
                    })
                    .collect()
            })
            .collect();
        let mut point_values = vec![0.0; m * m];
        for (i, row) in upper.into_iter().enumerate() {
            for (off, v) in row.into_iter().enumerate() {
                let j = i + off;
                point_values[i * m + j] = v;
                point_values[j * m + i] = v;
            }
        }
        Ok(KernelTable { grid, alpha, matrix, point_values, tail_columns: Mutex::new(HashMap::new()) })
    }

    fn row(grid: &RadialGrid, alpha: f64, i: usize) -> Vec<f64> {
        let m = grid.len();
        let dim = grid.dim();
        let ri = grid.nodes()[i];
        let mut out = vec![0.0; m];
        let mut pts: Vec<(f64, f64)> = Vec::with_capacity(GRADED_LEVELS * GRADED_POINTS * 2);
        let mut basis = [0.0; STENCIL];
        // Interval k is [r_{k-1}, r_k]; node i is the right end of interval i.
        for k in 0..m {
            let (a, b, idx, x) = grid.panel_stencil(k);
            pts.clear();
            if k.abs_diff(i) <= BAND || k.abs_diff(i + 1) <= BAND {
                if ri >= a && ri <= b {
                    graded_rule(a, b, ri - a <= b - ri, &mut pts);
                } else if ri < a {
                    graded_rule(a, b, true, &mut pts);
                } else {
                    graded_rule(a, b, false, &mut pts);
                }
            } else {
                let (gx, gw) = gl_cached(FAR_POINTS);
                let half = 0.5 * (b - a);
                let mid = 0.5 * (a + b);
                pts.extend(gx.iter().zip(gw).map(|(x, w)| (mid + half * x, w * half)));
            }
            let n = x.len();
            for &(s, w) in &pts {
                if s == ri {
                    continue;
                }
                let kv = kernel_unchecked(alpha, ri, s, dim);
                lagrange_basis(x, s, &mut basis[..n]);
                let f = w * s.powi(dim as i32 - 1) * kv;
                for t in 0..n {
                    out[idx[t]] += f * basis[t];
                }
            }
        }
        out
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Pointwise kernel `K(r_i, r_j)`; the diagonal is infinite when the
    /// angular integral diverges.
    pub fn point_value(&self, i: usize, j: usize) -> f64 {
        self.point_values[i * self.grid.len() + j]
    }

    /// `int_{R_max}^inf s^{N-1-p} K(r_i, s) ds` for every node.
    fn tail_column(&self, p: f64) -> Result<Arc<Vec<f64>>> {
        let dim = self.grid.dim() as f64;
        if p <= dim - self.alpha {
            return Err(Error::Divergent { exponent: p, required: dim - self.alpha });
        }
        if let Some(c) = self.tail_columns.lock().expect("tail cache poisoned").get(&p.to_bits()) {
            return Ok(c.clone());
        }
        let big_r = self.grid.r_max();
        let d = self.grid.dim();
        let mut pts = Vec::new();
        graded_rule(0.0, 0.5, true, &mut pts);
        graded_rule(0.5, 1.0, false, &mut pts);
        let col: Vec<f64> = self
            .grid
            .nodes()
            .iter()
            .map(|&ri| {
                pts.iter()
                    .map(|&(t, w)| {
                        let s = big_r / t;
                        w * s.powf(dim - 1.0 - p) * kernel_unchecked(self.alpha, ri, s, d) * big_r / (t * t)
                    })
                    .sum()
            })
            .collect();
        let col = Arc::new(col);
        self.tail_columns.lock().expect("tail cache poisoned").insert(p.to_bits(), col.clone());
        Ok(col)
    }

    /// `(|x|^-alpha * f)` sampled at the nodes, with a multipole tail.
    pub fn apply(&self, f: &RadialFn) -> Result<RadialFn> {
        if !f.grid.same_as(&self.grid) {
            return Err(Error::param("function and kernel table use different grids"));
        }
        let m = self.grid.len();
        let dim = self.grid.dim() as f64;
        if let Some(p) = f.tail.leading_exponent() {
            if p <= dim {
                return Err(Error::Divergent { exponent: p, required: dim });
            }
        }
        let mut values: Vec<f64> = self.matrix.par_chunks(m).map(|row| row.iter().zip(&f.values).map(|(a, b)| a * b).sum()).collect();
        for &(c, p) in &f.tail.terms {
            let col = self.tail_column(p)?;
            for (v, t) in values.iter_mut().zip(col.iter()) {
                *v += c * t;
            }
        }
        let mass = integrate(f)?;
        let mut tail = Tail::power(mass, self.alpha);
        let second_moment_finite = f.tail.leading_exponent().is_none_or(|p| p > dim + 2.0);
        if second_moment_finite {
            let r2 = RadialFn::from_fn(&self.grid, |r| r * r, Tail::none());
            let shifted = Tail { terms: f.tail.terms.iter().map(|(c, p)| (*c, p - 2.0)).collect() };
            let m2 = integrate(&RadialFn {
                grid: self.grid.clone(),
                values: r2.values.iter().zip(&f.values).map(|(a, b)| a * b).collect(),
                tail: shifted,
            })?;
            tail = tail.add(&Tail::power(quadrupole_coefficient(self.grid.dim(), self.alpha) * m2, self.alpha + 2.0));
        }
        Ok(RadialFn { grid: self.grid.clone(), values, tail })
    }
}

/// `g(x) = int f(y) |x - y|^-alpha dy` for radial `f`.
pub fn riesz_convolve(f: &RadialFn, alpha: f64) -> Result<RadialFn> {
    kernel_table(&f.grid, alpha)?.apply(f)
}

/// Double energy with the share carried by the far-field tail model.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DoubleEnergy {
    pub value: f64,
    pub tail_part: f64,
}

/// `D_alpha(f, g) = int int f(x) g(y) |x - y|^-alpha`, symmetrized.
pub fn double_energy(f: &RadialFn, g: &RadialFn, alpha: f64) -> Result<f64> {
    double_energy_detailed(f, g, alpha).map(|d| d.value)
}

pub fn double_energy_detailed(f: &RadialFn, g: &RadialFn, alpha: f64) -> Result<DoubleEnergy> {
    f.check_grid(g)?;
    let table = kernel_table(&f.grid, alpha)?;
    let one_side = |a: &RadialFn, b: &RadialFn| -> Result<(f64, f64)> {
        let conv = table.apply(a)?;
        let prod = conv.mul(b)?;
        let total = integrate(&prod)?;
        let core: f64 = prod.grid.weights().iter().zip(&prod.values).map(|(w, v)| w * v).sum();
        Ok((total, total - core))
    };
    let (v1, t1) = one_side(f, g)?;
    if std::ptr::eq(f, g) || (f.values == g.values && f.tail == g.tail) {
        return Ok(DoubleEnergy { value: v1, tail_part: t1 });
    }
    let (v2, t2) = one_side(g, f)?;
    Ok(DoubleEnergy { value: 0.5 * (v1 + v2), tail_part: 0.5 * (t1 + t2) })
}

/// Sharp constants for dimension `N` and the critical exponent.
#[derive(Clone, Debug, Serialize)]
pub struct ConstantsTable {
    pub dim: usize,
    /// `C(N, 4)`.
    pub hls: f64,
    /// Best Sobolev constant.
    pub sobolev: f64,
    /// `C(N, 4)^{-1/2} S`.
    pub sobolev_hl: f64,
    /// Bubble normalization.
    pub bubble_c: f64,
    /// `|S^{N-1}|`.
    pub omega: f64,
    /// Rayleigh quotient of the discretized bubble.
    pub sobolev_rayleigh: f64,
}

impl ConstantsTable {
    pub fn sobolev_hl_sq(&self) -> f64 {
        self.sobolev_hl * self.sobolev_hl
    }
}

/// Constants on the default grid (`M = 400`, `R_max = 40`, stretch `1.02`).
pub fn constants_table(dim: usize) -> Result<ConstantsTable> {
    let grid = crate::radial::make_grid(dim, 400, 40.0, 1.02)?;
    constants_table_on(&grid)
}

pub fn constants_table_on(grid: &Arc<RadialGrid>) -> Result<ConstantsTable> {
    let dim = grid.dim();
    let hls = hls_constant(dim, CRITICAL_ALPHA)?;
    let sobolev = sobolev_constant(dim)?;
    let rq = sobolev_rayleigh(dim, 1.0)?;
    let bubble_c = crate::bubbles::bubble_constant_on(grid)?;
    Ok(ConstantsTable { dim, hls, sobolev, sobolev_hl: sobolev / hls.sqrt(), bubble_c, omega: sphere_area(dim - 1), sobolev_rayleigh: rq })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::make_grid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    // Gamma at integers and half-integers, exact.
    fn gamma_oracle(x2: u32) -> f64 {
        if x2.is_multiple_of(2) {
            (1..x2 / 2).map(|k| k as f64).product()
        } else {
            let mut g = PI.sqrt();
            let mut t = 0.5;
            while t < x2 as f64 / 2.0 - 1e-9 {
                g *= t;
                t += 1.0;
            }
            g
        }
    }

    #[test]
    fn hls_matches_gamma_oracle() {
        for dim in [5usize, 6] {
            let n = dim as u32;
            let a = PI * PI * gamma_oracle(n - 4) / gamma_oracle(2 * n - 4);
            let b = (gamma_oracle(n) / gamma_oracle(2 * n)).powf(-((dim as f64) - 4.0) / dim as f64);
            let got = hls_constant(dim, 4.0).unwrap();
            assert!((got / (a * b) - 1.0).abs() < 1e-12, "N={dim}: {got} vs {}", a * b);
        }
        assert!(hls_constant(5, 5.0).is_err());
        assert!(hls_constant(5, 0.0).is_err());
    }

    #[test]
    fn sobolev_closed_form_and_quotient() {
        let s = sobolev_constant(5).unwrap();
        let oracle = PI * 15.0 * (0.75 * PI.sqrt() / 24.0).powf(0.4);
        assert!((s / oracle - 1.0).abs() < 1e-12, "{s}");
        let q3 = sobolev_rayleigh(5, 3.0).unwrap();
        assert!((q3 / s - 1.0).abs() < 1e-3);
        assert!(sobolev_constant(2).is_err());
    }

    #[test]
    fn kernel_axis_and_symmetry() {
        let omega4 = sphere_area(4);
        assert!((angular_kernel(4.0, 1.0, 0.0, 5).unwrap() - omega4).abs() < 1e-13);
        assert_eq!(angular_kernel(4.0, 2.0, 1.0, 5).unwrap(), angular_kernel(4.0, 1.0, 2.0, 5).unwrap());
        assert!(matches!(angular_kernel(4.0, 0.0, 0.0, 5), Err(Error::Singular(_))));
        assert!(matches!(angular_kernel(4.0, 1.0, 1.0, 5), Err(Error::Singular(_))));
        assert!(angular_kernel(3.0, 1.0, 1.0, 5).unwrap().is_finite());
    }

    #[test]
    fn closed_form_agrees_with_quadrature() {
        for (r, s) in [(1.0, 2.0), (1.0, 1.05), (0.3, 0.29), (5.0, 0.01), (1.0, 1.0 + 1e-6)] {
            let c = kernel_n5_a4(r, s);
            let q = kernel_quadrature(4.0, r, s, 5);
            assert!((c / q - 1.0).abs() < 1e-9, "({r},{s}): {c} vs {q}");
        }
    }

    #[test]
    fn kernel_against_monte_carlo_sphere_average() {
        // Uniform points on S^4 by normalized Gaussians.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (r, s) = (1.0, 1.5);
        let n = 400_000;
        let mut acc = 0.0;
        for _ in 0..n {
            let mut v = [0.0f64; 5];
            let mut norm = 0.0;
            for c in v.iter_mut() {
                let u1: f64 = rng.random::<f64>().max(1e-300);
                let u2: f64 = rng.random();
                *c = (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos();
                norm += *c * *c;
            }
            let norm = norm.sqrt();
            let mut d2 = 0.0;
            for (k, c) in v.iter().enumerate() {
                let y = s * c / norm;
                let x = if k == 0 { r } else { 0.0 };
                d2 += (x - y) * (x - y);
            }
            acc += d2.powi(-2);
        }
        let mc = sphere_area(4) * acc / n as f64;
        let k = angular_kernel(4.0, r, s, 5).unwrap();
        assert!((mc / k - 1.0).abs() < 1e-2, "{mc} vs {k}");
    }

    #[test]
    fn table_point_values_symmetric_positive() {
        let grid = make_grid(5, 400, 40.0, 1.02).unwrap();
        let t = kernel_table(&grid, 4.0).unwrap();
        let m = grid.len();
        for i in (0..m).step_by(7) {
            for j in (0..m).step_by(5) {
                assert_eq!(t.point_value(i, j), t.point_value(j, i));
                assert!(t.point_value(i, j) > 0.0);
            }
        }
    }

    #[test]
    fn convolution_of_bubble_square_is_exact_profile() {
        // C_N^2 (|x|^-4 * u1^2) = N(N-2)(1+r^2)^-2 with C_5^2 = 30/pi^3.
        let grid = make_grid(5, 400, 40.0, 1.02).unwrap();
        let u = crate::bubbles::bubble_profile(&grid, 1.0, 1.0);
        let conv = riesz_convolve(&u.square(), 4.0).unwrap();
        let expected = PI.powi(3) / 2.0;
        for r in [0.0, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 39.0] {
            let ratio = conv.eval(r) * (1.0 + r * r).powi(2);
            assert!((ratio / expected - 1.0).abs() < 1e-5, "r={r}: {ratio} vs {expected}");
        }
        // Beyond the grid only the monopole term is modelled.
        let ratio = conv.eval(60.0) * (1.0f64 + 3600.0).powi(2);
        assert!((ratio / expected - 1.0).abs() < 1e-3);
    }

    #[test]
    fn far_field_of_compact_density() {
        let grid = make_grid(5, 400, 40.0, 1.02).unwrap();
        let bump = RadialFn::from_fn(&grid, |r| if r < 1.0 { (-1.0 / (1.0 - r * r)).exp() } else { 0.0 }, Tail::none());
        let mass = integrate(&bump).unwrap();
        let conv = riesz_convolve(&bump, 4.0).unwrap();
        for r in [20.0, 35.0, 100.0] {
            assert!((conv.eval(r) * r.powi(4) / mass - 1.0).abs() < 1e-3);
        }
        let zero = riesz_convolve(&RadialFn::zeros(&grid), 4.0).unwrap();
        assert!(zero.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn double_energy_symmetric_and_hls_bounded() {
        let grid = make_grid(5, 400, 40.0, 1.02).unwrap();
        let c = hls_constant(5, 4.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let (w1, w2): (f64, f64) = (rng.random_range(0.2..3.0), rng.random_range(0.2..3.0));
            let (c1, c2): (f64, f64) = (rng.random_range(0.0..2.0), rng.random_range(0.0..2.0));
            let bump = |w: f64, c: f64| {
                RadialFn::from_fn(
                    &grid,
                    move |r| {
                        let t = (r - c) / w;
                        if t.abs() < 1.0 {
                            (-1.0 / (1.0 - t * t)).exp()
                        } else {
                            0.0
                        }
                    },
                    Tail::none(),
                )
            };
            let f = bump(w1, c1);
            let g = bump(w2, c2);
            let d = double_energy(&f, &g, 4.0).unwrap();
            assert!((d - double_energy(&g, &f, 4.0).unwrap()).abs() <= 1e-12 * d.abs());
            let p = 5.0 / 3.0;
            let bound = c * crate::radial::lp_norm(&f, p).unwrap() * crate::radial::lp_norm(&g, p).unwrap();
            assert!(d > 0.0 && d <= bound, "{d} > {bound}");
        }
    }
}
