//! Low-level quadrature and interpolation helpers.

use std::f64::consts::PI;
use std::sync::OnceLock;

use statrs::function::gamma::{gamma, ln_gamma};

/// Surface area of the unit sphere S^{d} embedded in R^{d+1}.
pub fn sphere_area(d: usize) -> f64 {
    let k = (d + 1) as f64 / 2.0;
    2.0 * PI.powf(k) / gamma(k)
}

pub fn gamma_fn(x: f64) -> f64 {
    gamma(x)
}

pub fn ln_gamma_fn(x: f64) -> f64 {
    ln_gamma(x)
}

/// Gauss-Legendre nodes and weights on [-1, 1], ascending, with
/// mirrored nodes stored as exact negatives of each other.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, z);
        if d != 0.0 {
            dp = d;
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Cached Gauss-Legendre rule of a given size.
pub fn gl_cached(n: usize) -> &'static (Vec<f64>, Vec<f64>) {
    static CACHE: OnceLock<Vec<(Vec<f64>, Vec<f64>)>> = OnceLock::new();
    let table = CACHE.get_or_init(|| (0..=160).map(|k| if k == 0 { (vec![], vec![]) } else { gauss_legendre(k) }).collect());
    &table[n]
}

/// Integrate `f` over [a, b] with an n-point Gauss-Legendre rule.
pub fn gl_integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, n: usize) -> f64 {
    let (x, w) = gl_cached(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut s = 0.0;
    for (xi, wi) in x.iter().zip(w) {
        s += wi * f(mid + half * xi);
    }
    s * half
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut rk = fc * WGK[7];
    let mut rg = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        rk += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            rg += WG[j / 2] * (f1 + f2);
        }
    }
    (rk * h, ((rk - rg) * h).abs())
}

/// Adaptive Gauss-Kronrod (7/15) quadrature over the given breakpoints.
pub fn adaptive<F: FnMut(f64) -> f64>(mut f: F, breaks: &[f64], rel_tol: f64, abs_tol: f64) -> f64 {
    let mut stack: Vec<(f64, f64, usize)> = Vec::new();
    for win in breaks.windows(2) {
        if win[1] > win[0] {
            stack.push((win[0], win[1], 0));
        }
    }
    let mut panels: Vec<(f64, f64, f64, f64, usize)> = stack
        .drain(..)
        .map(|(a, b, d)| {
            let (v, e) = gk15(&mut f, a, b);
            (a, b, v, e, d)
        })
        .collect();
    loop {
        let total: f64 = panels.iter().map(|p| p.2).sum();
        let err: f64 = panels.iter().map(|p| p.3).sum();
        if err <= abs_tol.max(rel_tol * total.abs()) {
            return total;
        }
        let (idx, _) =
            panels
                .iter()
                .enumerate()
                .filter(|(_, p)| p.4 < 60)
                .fold((usize::MAX, -1.0), |acc, (i, p)| if p.3 > acc.1 { (i, p.3) } else { acc });
        if idx == usize::MAX {
            return total;
        }
        let (a, b, _, _, d) = panels.swap_remove(idx);
        let m = 0.5 * (a + b);
        let (v1, e1) = gk15(&mut f, a, m);
        let (v2, e2) = gk15(&mut f, m, b);
        panels.push((a, m, v1, e1, d + 1));
        panels.push((m, b, v2, e2, d + 1));
    }
}

/// Lagrange basis values at `x` for the given nodes.
pub fn lagrange_basis(nodes: &[f64], x: f64, out: &mut [f64]) {
    let n = nodes.len();
    for j in 0..n {
        let mut l = 1.0;
        for k in 0..n {
            if k != j {
                l *= (x - nodes[k]) / (nodes[j] - nodes[k]);
            }
        }
        out[j] = l;
    }
}

/// Finite-difference weights (Fornberg) for derivatives 0..=m at `x0`.
/// Returns `c[d][j]`, the weight of node j for derivative d.
pub fn fornberg(x0: f64, nodes: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = nodes.len();
    let mut c = vec![vec![0.0; n]; m + 1];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - x0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - x0;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// Bracketed bisection on a monotone function with a sign change.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> Option<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if flo.signum() == fhi.signum() || !flo.is_finite() || !fhi.is_finite() {
        return None;
    }
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 || (hi - lo) < tol {
            return Some(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_exact_for_polynomials() {
        let (x, w) = gauss_legendre(8);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((s - 2.0 / 15.0).abs() < 1e-14);
        assert!(x.iter().zip(x.iter().rev()).all(|(a, b)| *a == -*b));
    }

    #[test]
    fn adaptive_handles_log_singularity() {
        let v = adaptive(|x: f64| -x.ln(), &[0.0, 1.0], 1e-12, 0.0);
        assert!((v - 1.0).abs() < 1e-10);
    }

    #[test]
    fn fornberg_first_derivative() {
        let nodes = [0.0, 0.1, 0.25, 0.45, 0.7];
        let c = fornberg(0.25, &nodes, 2);
        let d1: f64 = nodes.iter().zip(&c[1]).map(|(x, w)| w * x.powi(3)).sum();
        assert!((d1 - 3.0 * 0.0625).abs() < 1e-12);
        let d2: f64 = nodes.iter().zip(&c[2]).map(|(x, w)| w * x.powi(3)).sum();
        assert!((d2 - 6.0 * 0.25).abs() < 1e-10);
    }

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(1) - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_area(2) - 4.0 * PI).abs() < 1e-13);
        assert!((sphere_area(4) - 8.0 * PI * PI / 3.0).abs() < 1e-12);
    }
}
