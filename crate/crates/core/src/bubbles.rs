//! Bubbles, coupling constants and the compactly supported trial profile.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quad::{adaptive, bisect};
use crate::radial::{dirichlet_seminorm, integrate, make_grid, OffsetFn, OffsetPair, Pair, RadialFn, RadialGrid, Tail};
use crate::riesz::{double_energy, hls_constant, sobolev_constant_closed, CRITICAL_ALPHA};

const TAIL_ORDER: usize = 5;

/// Tail of `c (d + r^2)^-e` expanded in powers of `r^-2`.
pub fn rational_tail(c: f64, d: f64, e: f64) -> Tail {
    let mut terms = Vec::with_capacity(TAIL_ORDER);
    let mut binom = 1.0;
    for k in 0..TAIL_ORDER {
        if k > 0 {
            binom *= (-e - (k as f64 - 1.0)) / k as f64;
        }
        terms.push((c * binom * d.powi(k as i32), 2.0 * e + 2.0 * k as f64));
    }
    Tail::from_terms(terms)
}

/// `c (delta / (delta^2 + r^2))^{(N-2)/2}` sampled on `grid`.
pub fn bubble_profile(grid: &Arc<RadialGrid>, c: f64, delta: f64) -> RadialFn {
    let e = (grid.dim() as f64 - 2.0) / 2.0;
    let amp = c * delta.powf(e);
    RadialFn::from_fn(grid, |r| amp * (delta * delta + r * r).powf(-e), rational_tail(amp, delta * delta, e))
}

/// `C_N` from `C^2 |grad u1|^2 = C^4 D(u1^2, u1^2)` on `grid`.
pub fn bubble_constant_on(grid: &Arc<RadialGrid>) -> Result<f64> {
    let u1 = bubble_profile(grid, 1.0, 1.0);
    let a = dirichlet_seminorm(&u1)?;
    let b = double_energy(&u1.square(), &u1.square(), CRITICAL_ALPHA)?;
    if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
        return Err(Error::numerical(format!("cannot bracket C_N: gradient {a}, double energy {b}")));
    }
    Ok((a / b).sqrt())
}

/// `C_N` on the default grid, cached per dimension.
pub fn bubble_constant(dim: usize) -> Result<f64> {
    static CACHE: OnceLock<Mutex<HashMap<usize, f64>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(c) = cache.lock().expect("bubble cache poisoned").get(&dim) {
        return Ok(*c);
    }
    let grid = make_grid(dim, 400, 40.0, 1.02)?;
    let c = bubble_constant_on(&grid)?;
    cache.lock().expect("bubble cache poisoned").insert(dim, c);
    Ok(c)
}

/// `U_{delta,z}` with `|z| = rho`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Bubble {
    pub dim: usize,
    pub delta: f64,
    pub rho: f64,
    pub c: f64,
}

pub fn make_bubble(delta: f64, rho: f64, dim: usize) -> Result<Bubble> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::param(format!("dilation {delta} must be positive")));
    }
    if !(rho >= 0.0 && rho.is_finite()) {
        return Err(Error::param(format!("offset {rho} must be finite and nonnegative")));
    }
    Ok(Bubble { dim, delta, rho, c: bubble_constant(dim)? })
}

impl Bubble {
    /// Value at distance `s` from the center.
    pub fn eval_distance(&self, s: f64) -> f64 {
        let e = (self.dim as f64 - 2.0) / 2.0;
        self.c * (self.delta / (self.delta * self.delta + s * s)).powf(e)
    }

    /// Centered bubble on a grid.
    pub fn on_grid(&self, grid: &Arc<RadialGrid>) -> Result<RadialFn> {
        if self.rho != 0.0 {
            return Err(Error::param("an off-center bubble is not radial"));
        }
        if grid.dim() != self.dim {
            return Err(Error::param("grid dimension mismatch"));
        }
        Ok(bubble_profile(grid, self.c, self.delta))
    }

    /// Translated bubble as a unit profile with dilation and offset.
    pub fn as_offset(&self, grid: &Arc<RadialGrid>) -> OffsetFn {
        OffsetFn { profile: bubble_profile(grid, self.c, 1.0), delta: self.delta, rho: self.rho }
    }
}

/// `k_1, k_2` and the energy levels built from them.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CouplingConstants {
    pub dim: usize,
    pub mu1: f64,
    pub mu2: f64,
    pub beta: f64,
    pub k1: f64,
    pub k2: f64,
    /// `S_HL^2`.
    pub shl_sq: f64,
    /// `(k1 + k2) S_HL^2 / 4`.
    pub c_inf: f64,
    /// `S_HL^2 / (4 mu_1)`.
    pub m1_inf: f64,
    pub m2_inf: f64,
}

/// Closed-form `S_HL^2 = S^2 / C(N, 4)`.
pub fn sobolev_hl_sq(dim: usize) -> Result<f64> {
    let s = sobolev_constant_closed(dim)?;
    Ok(s * s / hls_constant(dim, CRITICAL_ALPHA)?)
}

pub fn check_coupling(mu1: f64, mu2: f64, beta: f64) -> Result<()> {
    if !(mu1 > 0.0 && mu2 > 0.0) || !mu1.is_finite() || !mu2.is_finite() || !beta.is_finite() {
        return Err(Error::param(format!("self-couplings ({mu1}, {mu2}) must be positive and finite")));
    }
    if beta <= mu1.max(mu2) {
        return Err(Error::Domain(format!("beta = {beta} must exceed max(mu1, mu2) = {}", mu1.max(mu2))));
    }
    Ok(())
}

pub fn coupling_constants(mu1: f64, mu2: f64, beta: f64, dim: usize) -> Result<CouplingConstants> {
    check_coupling(mu1, mu2, beta)?;
    let det = beta * beta - mu1 * mu2;
    let k1 = (beta - mu2) / det;
    let k2 = (beta - mu1) / det;
    let shl_sq = sobolev_hl_sq(dim)?;
    Ok(CouplingConstants {
        dim,
        mu1,
        mu2,
        beta,
        k1,
        k2,
        shl_sq,
        c_inf: 0.25 * (k1 + k2) * shl_sq,
        m1_inf: shl_sq / (4.0 * mu1),
        m2_inf: shl_sq / (4.0 * mu2),
    })
}

impl CouplingConstants {
    /// `mu1 k1^2 + mu2 k2^2 + 2 beta k1 k2`, equal to `k1 + k2`.
    pub fn quartic_weight(&self) -> f64 {
        self.mu1 * self.k1 * self.k1 + self.mu2 * self.k2 * self.k2 + 2.0 * self.beta * self.k1 * self.k2
    }

    /// Gap `min(m1, m2) - c_inf`, positive when both components survive.
    pub fn threshold_gap(&self) -> f64 {
        self.m1_inf.min(self.m2_inf) - self.c_inf
    }
}

/// Minimizer and minimum of `(1+t)^2 / (mu1 t^2 + 2 beta t + mu2)` on `t >= 0`.
pub fn quotient_infimum(mu1: f64, mu2: f64, beta: f64) -> Result<(f64, f64)> {
    check_coupling(mu1, mu2, beta)?;
    let q = |t: f64| (1.0 + t) * (1.0 + t) / (mu1 * t * t + 2.0 * beta * t + mu2);
    let t_star = (beta - mu2) / (beta - mu1);
    Ok((t_star, q(t_star)))
}

/// Grid search on `[0, 1000]` refined by golden sections.
pub fn quotient_infimum_brute(mu1: f64, mu2: f64, beta: f64) -> (f64, f64) {
    let q = |t: f64| (1.0 + t) * (1.0 + t) / (mu1 * t * t + 2.0 * beta * t + mu2);
    let n = 200_000;
    let tmax = 1000.0;
    let mut best = (0.0, q(0.0));
    for i in 1..=n {
        // Quadratic spacing puts most samples near the origin.
        let s = i as f64 / n as f64;
        let t = tmax * s * s;
        let v = q(t);
        if v < best.1 {
            best = (t, v);
        }
    }
    let step = 2.0 * tmax * (best.0 / tmax).sqrt() / n as f64 + 1e-12;
    let (mut lo, mut hi) = ((best.0 - 2.0 * step).max(0.0), best.0 + 2.0 * step);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        let a = hi - g * (hi - lo);
        let b = lo + g * (hi - lo);
        if q(a) < q(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    let t = 0.5 * (lo + hi);
    (t, q(t).min(best.1))
}

/// `(sqrt(k1) U_delta, sqrt(k2) U_delta)` centered on `grid`.
pub fn ground_pair(grid: &Arc<RadialGrid>, delta: f64, cc: &CouplingConstants) -> Result<Pair> {
    let b = make_bubble(delta, 0.0, grid.dim())?.on_grid(grid)?;
    Pair::new(b.scale(cc.k1.sqrt()), b.scale(cc.k2.sqrt()))
}

/// Translated ground pair.
pub fn ground_pair_offset(grid: &Arc<RadialGrid>, delta: f64, rho: f64, cc: &CouplingConstants) -> Result<OffsetPair> {
    let b = make_bubble(delta, rho, grid.dim())?.as_offset(grid);
    let mut u = b.clone();
    u.profile = b.profile.scale(cc.k1.sqrt());
    let mut v = b;
    v.profile = v.profile.scale(cc.k2.sqrt());
    OffsetPair::new(u, v)
}

/// Construction parameters for the trial profile.
#[derive(Clone, Debug, Serialize, serde::Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct TrialConfig {
    pub nodes: usize,
    pub stretch: f64,
    /// Width of the smooth cutoff in grid cells, ending at `r = 1`.
    pub cutoff_cells: usize,
    pub max_rounds: usize,
    /// Stop once `Sigma < c_inf + target_fraction (cbar - c_inf)`.
    pub target_fraction: f64,
}

impl Default for TrialConfig {
    fn default() -> Self {
        TrialConfig { nodes: 400, stretch: 1.02, cutoff_cells: 5, max_rounds: 40, target_fraction: 0.5 }
    }
}

/// Certified compactly supported profile on the unit ball.
#[derive(Clone, Debug)]
pub struct TrialProfile {
    pub profile: RadialFn,
    /// Dilation of the truncated bubble.
    pub delta_b: f64,
    pub support_fraction: f64,
    /// Nehari rescale applied to the truncated bubble.
    pub scale: f64,
    /// `int |grad theta|^2`, equal to the double energy.
    pub kinetic: f64,
    pub nonlocal: f64,
    /// Energy of `(sqrt(k1) theta, sqrt(k2) theta)`.
    pub sigma: f64,
    pub c_inf: f64,
    pub cbar: f64,
    /// `int theta^2`.
    pub l2_sq: f64,
    pub rounds: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct TrialSummary {
    pub delta_b: f64,
    pub support_fraction: f64,
    pub scale: f64,
    pub kinetic: f64,
    pub nonlocal: f64,
    pub sigma: f64,
    pub sigma_over_c_inf: f64,
    pub cbar_over_c_inf: f64,
    pub rounds: usize,
}

impl TrialProfile {
    pub fn summary(&self) -> TrialSummary {
        TrialSummary {
            delta_b: self.delta_b,
            support_fraction: self.support_fraction,
            scale: self.scale,
            kinetic: self.kinetic,
            nonlocal: self.nonlocal,
            sigma: self.sigma,
            sigma_over_c_inf: self.sigma / self.c_inf,
            cbar_over_c_inf: self.cbar / self.c_inf,
            rounds: self.rounds,
        }
    }

    pub fn dim(&self) -> usize {
        self.profile.dim()
    }

    pub fn eval(&self, r: f64) -> f64 {
        if r >= 1.0 {
            0.0
        } else {
            self.profile.eval(r)
        }
    }
}

/// Share of `int U^{2*}` inside radius `x` for the unit bubble.
fn critical_mass_fraction(dim: usize, x: f64) -> f64 {
    let n = dim as f64;
    let dens = |r: f64| r.powf(n - 1.0) * (1.0 + r * r).powf(-n);
    let decades = [0.0, 0.01, 0.1, 1.0, 10.0, 100.0, 1e3, 1e4, 1e5, 1e6, 1e7, 1e8, 1e9];
    let total = adaptive(dens, &decades, 1e-13, 0.0);
    let mut breaks: Vec<f64> = decades.iter().copied().filter(|b| *b < x).collect();
    breaks.push(x);
    adaptive(dens, &breaks, 1e-13, 0.0) / total
}

/// Dilation whose unit ball holds `fraction` of the critical mass.
pub fn delta_for_fraction(dim: usize, fraction: f64) -> Result<f64> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::param(format!("support fraction {fraction} outside (0, 1)")));
    }
    let x = bisect(|lx: f64| critical_mass_fraction(dim, lx.exp()) - fraction, -20.0, 20.0, 1e-13)
        .ok_or_else(|| Error::numerical("support fraction not bracketed"))?
        .exp();
    Ok(1.0 / x)
}

/// C-infinity step: 1 on `(-inf, 0]`, 0 on `[1, inf)`.
fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    if t >= 1.0 {
        return 0.0;
    }
    let g = |s: f64| (-1.0 / s).exp();
    g(1.0 - t) / (g(1.0 - t) + g(t))
}

/// Truncated bubble `U_{delta_b} chi` on the unit-ball grid.
pub fn truncated_bubble(grid: &Arc<RadialGrid>, delta_b: f64, cutoff_cells: usize) -> Result<RadialFn> {
    let nodes = grid.nodes();
    let m = nodes.len();
    if cutoff_cells < 1 || cutoff_cells + 2 > m {
        return Err(Error::param(format!("cutoff width {cutoff_cells} cells does not fit the grid")));
    }
    let r_a = nodes[m - 1 - cutoff_cells];
    let r_b = grid.r_max();
    let e = (grid.dim() as f64 - 2.0) / 2.0;
    let values = nodes
        .iter()
        .map(|&r| {
            let chi = smooth_step((r - r_a) / (r_b - r_a));
            chi * (delta_b / (delta_b * delta_b + r * r)).powf(e)
        })
        .collect();
    RadialFn::new(grid.clone(), values, Tail::none())
}

/// Build `theta` with Nehari equality and `Sigma` inside `(c_inf, cbar)`.
pub fn make_trial_profile(support_fraction: f64, cc: &CouplingConstants, cbar: f64, cfg: &TrialConfig) -> Result<TrialProfile> {
    if !(cbar > cc.c_inf) {
        return Err(Error::param(format!("cbar {cbar} must exceed c_inf {}", cc.c_inf)));
    }
    if !(cfg.target_fraction > 0.0 && cfg.target_fraction <= 1.0) {
        return Err(Error::param("target fraction outside (0, 1]"));
    }
    let grid = make_grid(cc.dim, cfg.nodes, 1.0, cfg.stretch)?;
    let target = cc.c_inf + cfg.target_fraction * (cbar - cc.c_inf);
    let mut frac = support_fraction;
    let mut last_sigma = f64::NAN;
    for round in 0..cfg.max_rounds {
        let delta_b = delta_for_fraction(cc.dim, frac)?;
        let theta0 = truncated_bubble(&grid, delta_b, cfg.cutoff_cells)?;
        let a0 = dirichlet_seminorm(&theta0)?;
        let b0 = double_energy(&theta0.square(), &theta0.square(), CRITICAL_ALPHA)?;
        let t = (a0 / b0).sqrt();
        let sigma = 0.25 * (cc.k1 + cc.k2) * t * t * a0;
        last_sigma = sigma;
        if sigma <= cc.c_inf {
            return Err(Error::numerical(format!(
                "trial energy {sigma} at or below c_inf {}: grid too coarse for delta_b = {delta_b}",
                cc.c_inf
            )));
        }
        if sigma < target {
            let profile = theta0.scale(t);
            let kinetic = dirichlet_seminorm(&profile)?;
            let nonlocal = double_energy(&profile.square(), &profile.square(), CRITICAL_ALPHA)?;
            let l2_sq = integrate(&profile.square())?;
            return Ok(TrialProfile {
                profile,
                delta_b,
                support_fraction: frac,
                scale: t,
                kinetic,
                nonlocal,
                sigma,
                c_inf: cc.c_inf,
                cbar,
                l2_sq,
                rounds: round + 1,
            });
        }
        frac = 1.0 - 0.5 * (1.0 - frac);
    }
    Err(Error::numerical(format!(
        "trial window unattainable in {} rounds: Sigma/c_inf = {} against target {}",
        cfg.max_rounds,
        last_sigma / cc.c_inf,
        target / cc.c_inf
    )))
}

/// `theta_{delta,y}`: dilation by `delta`, translation by `rho`.
pub fn trial_member(profile: &TrialProfile, delta: f64, rho: f64) -> Result<OffsetFn> {
    OffsetFn::new(profile.profile.clone(), delta, rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::lp_norm;
    use std::f64::consts::PI;

    fn default_grid() -> Arc<RadialGrid> {
        make_grid(5, 400, 40.0, 1.02).unwrap()
    }

    #[test]
    fn bubble_constant_matches_closed_form() {
        // C_N^2 = 2N(N-2) / (|S^{N-1}| B((N-4)/2, N/2)); for N = 5 this is 30/pi^3.
        let c = bubble_constant(5).unwrap();
        assert!((c * c / (30.0 / PI.powi(3)) - 1.0).abs() < 1e-5, "{c}");
    }

    #[test]
    fn bubble_center_value_and_scaling() {
        let b = make_bubble(1.0, 0.0, 5).unwrap();
        let g = default_grid();
        assert_eq!(b.eval_distance(0.0), b.c);
        let a1 = dirichlet_seminorm(&b.on_grid(&g).unwrap()).unwrap();
        for d in [0.25, 0.5, 2.0, 4.0] {
            let gd = g.scaled(d).unwrap();
            let ad = dirichlet_seminorm(&make_bubble(d, 0.0, 5).unwrap().on_grid(&gd).unwrap()).unwrap();
            assert!((ad / a1 - 1.0).abs() < 1e-4);
        }
        assert!(make_bubble(0.0, 0.0, 5).is_err());
        assert!(make_bubble(1.0, 1.0, 5).unwrap().on_grid(&g).is_err());
    }

    #[test]
    fn coupling_examples() {
        let cc = coupling_constants(1.0, 2.0, 3.0, 5).unwrap();
        assert!((cc.k1 - 1.0 / 7.0).abs() < 1e-15 && (cc.k2 - 2.0 / 7.0).abs() < 1e-15);
        assert!((cc.quartic_weight() - 3.0 / 7.0).abs() < 1e-12);
        let sym = coupling_constants(1.0, 1.0, 2.0, 5).unwrap();
        assert!((sym.k1 - 1.0 / 3.0).abs() < 1e-15 && sym.k1 == sym.k2);
        assert!(matches!(coupling_constants(1.0, 2.0, 1.5, 5), Err(Error::Domain(_))));
    }

    #[test]
    fn quotient_closed_form_and_brute_force() {
        let (t, v) = quotient_infimum(1.0, 2.0, 3.0).unwrap();
        assert!((v - 3.0 / 7.0).abs() < 1e-12);
        assert!((t - 0.5).abs() < 1e-15);
        let (_, vb) = quotient_infimum_brute(1.0, 2.0, 3.0);
        assert!((vb - v).abs() < 1e-10);
        let (ts, vs) = quotient_infimum(1.0, 1.0, 2.0).unwrap();
        assert_eq!(ts, 1.0);
        assert!((vs - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn rational_tail_matches_function() {
        let t = rational_tail(2.0, 1.5, 1.5);
        let r: f64 = 40.0;
        let exact = 2.0 * (1.5 + r * r).powf(-1.5);
        assert!((t.eval(r) / exact - 1.0).abs() < 1e-14);
    }

    #[test]
    fn mass_fraction_inverse() {
        let d = delta_for_fraction(5, 0.9).unwrap();
        assert!((critical_mass_fraction(5, 1.0 / d) - 0.9).abs() < 1e-10);
        assert!(delta_for_fraction(5, 1.0).is_err());
    }

    #[test]
    fn ground_pair_ratio_exact() {
        let cc = coupling_constants(1.0, 2.0, 3.0, 5).unwrap();
        let p = ground_pair(&default_grid(), 1.0, &cc).unwrap();
        for (u, v) in p.u.values.iter().zip(&p.v.values) {
            assert!((v / u - 2f64.sqrt()).abs() < 1e-14);
        }
        let norm = lp_norm(&p.u, 10.0 / 3.0).unwrap();
        assert!(norm > 0.0);
    }
}
