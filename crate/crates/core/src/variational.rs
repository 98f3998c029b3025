//! Energies, Nehari projections, barycenter maps and residuals of the
//! coupled Hartree system
//!
//! ```text
//! -Δu + (V1 + λ1) u = μ1 (|x|^-4 * u²) u + β (|x|^-4 * v²) u
//! -Δv + (V2 + λ2) v = μ2 (|x|^-4 * v²) v + β (|x|^-4 * u²) v
//! ```

use std::sync::Arc;

use serde::Serialize;

use crate::bubbles::{coupling_constants, rational_tail, CouplingConstants, TrialProfile};
use crate::error::{Error, Result};
use crate::radial::{
    axis_moments_of_density, bicenter_integral, dilated_overlap, dirichlet_seminorm, integrate, lp_norm, make_grid, OffsetFn, OffsetPair,
    Pair, RadialFn, RadialGrid, Tail,
};
use crate::riesz::{kernel_table, CRITICAL_ALPHA};

/// A nonnegative radial potential.
#[derive(Clone, Debug)]
pub enum Potential {
    Zero,
    /// `v0 (1 + r²)^-s`.
    Rational {
        v0: f64,
        s: f64,
    },
    Sampled(RadialFn),
}

impl Potential {
    pub fn rational(v0: f64, s: f64) -> Result<Self> {
        if !(v0 >= 0.0 && v0.is_finite()) {
            return Err(Error::param(format!("potential amplitude {v0} must be finite and nonnegative")));
        }
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::param(format!("potential decay {s} must be positive")));
        }
        Ok(if v0 == 0.0 { Potential::Zero } else { Potential::Rational { v0, s } })
    }

    pub fn sampled(f: RadialFn) -> Result<Self> {
        if !f.is_nonnegative() {
            return Err(Error::param("sampled potential takes negative values"));
        }
        Ok(Potential::Sampled(f))
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Potential::Zero => true,
            Potential::Rational { v0, .. } => *v0 == 0.0,
            Potential::Sampled(f) => f.max_abs() == 0.0 && f.tail.is_empty(),
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self {
            Potential::Zero => 0.0,
            Potential::Rational { v0, s } => v0 * (1.0 + r * r).powf(-s),
            Potential::Sampled(f) => f.eval(r),
        }
    }

    pub fn on_grid(&self, grid: &Arc<RadialGrid>) -> RadialFn {
        match self {
            Potential::Zero => RadialFn::zeros(grid),
            Potential::Rational { v0, s } => RadialFn::from_fn(grid, |r| v0 * (1.0 + r * r).powf(-s), rational_tail(*v0, 1.0, *s)),
            Potential::Sampled(f) => f.resample(grid),
        }
    }

    /// `|V|_{L^{N/2}}`.
    pub fn critical_norm(&self, dim: usize) -> Result<f64> {
        let p = dim as f64 / 2.0;
        match self {
            Potential::Zero => Ok(0.0),
            Potential::Rational { s, .. } => {
                if 2.0 * s * p <= dim as f64 {
                    return Err(Error::Divergent { exponent: 2.0 * s * p, required: dim as f64 });
                }
                let grid = make_grid(dim, 400, 40.0, 1.02)?;
                lp_norm(&self.on_grid(&grid), p)
            }
            Potential::Sampled(f) => lp_norm(f, p),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Potential::Zero => "0".into(),
            Potential::Rational { v0, s } => format!("{v0} (1 + r^2)^-{s}"),
            Potential::Sampled(f) => format!("sampled on {} nodes up to r = {}", f.grid.len(), f.grid.r_max()),
        }
    }
}

/// Full parameter set of the system.
#[derive(Clone, Debug)]
pub struct Problem {
    pub dim: usize,
    pub mu1: f64,
    pub mu2: f64,
    pub beta: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub v1: Potential,
    pub v2: Potential,
}

impl Problem {
    #[allow(clippy::too_many_arguments)]
    pub fn new(dim: usize, mu1: f64, mu2: f64, beta: f64, lambda1: f64, lambda2: f64, v1: Potential, v2: Potential) -> Result<Self> {
        if dim < 5 {
            return Err(Error::param(format!("dimension {dim} below 5")));
        }
        if !(mu1 > 0.0 && mu2 > 0.0 && mu1.is_finite() && mu2.is_finite() && beta.is_finite()) {
            return Err(Error::param(format!("couplings ({mu1}, {mu2}, {beta}) invalid")));
        }
        if !(lambda1 >= 0.0 && lambda2 >= 0.0 && lambda1.is_finite() && lambda2.is_finite()) {
            return Err(Error::param(format!("lambdas ({lambda1}, {lambda2}) must be finite and nonnegative")));
        }
        Ok(Problem { dim, mu1, mu2, beta, lambda1, lambda2, v1, v2 })
    }

    /// The limit problem: no potentials, no lambdas.
    pub fn limit(cc: &CouplingConstants) -> Self {
        Problem {
            dim: cc.dim,
            mu1: cc.mu1,
            mu2: cc.mu2,
            beta: cc.beta,
            lambda1: 0.0,
            lambda2: 0.0,
            v1: Potential::Zero,
            v2: Potential::Zero,
        }
    }

    /// Same couplings and potentials with `lambda1 = lambda2 = 0`.
    pub fn without_lambda(&self) -> Self {
        Problem { lambda1: 0.0, lambda2: 0.0, ..self.clone() }
    }

    pub fn with_lambda(&self, lambda1: f64, lambda2: f64) -> Self {
        Problem { lambda1, lambda2, ..self.clone() }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda1.max(self.lambda2)
    }

    pub fn coupling(&self) -> Result<CouplingConstants> {
        coupling_constants(self.mu1, self.mu2, self.beta, self.dim)
    }

    fn weights(&self, grid: &Arc<RadialGrid>) -> (RadialFn, RadialFn) {
        let add_lambda = |f: RadialFn, lam: f64| {
            let values = f.values.iter().map(|v| v + lam).collect();
            let mut terms = f.tail.terms.clone();
            if lam != 0.0 {
                terms.push((lam, 0.0));
            }
            RadialFn { grid: f.grid, values, tail: Tail::from_terms(terms) }
        };
        (add_lambda(self.v1.on_grid(grid), self.lambda1), add_lambda(self.v2.on_grid(grid), self.lambda2))
    }
}

/// Components of the energy of a pair.
#[derive(Clone, Copy, Debug, Default, Serialize, PartialEq)]
pub struct EnergyBreakdown {
    pub kinetic: f64,
    pub potential: f64,
    /// `mu1 D(u+², u+²)`.
    pub nonlocal_11: f64,
    /// `mu2 D(v+², v+²)`.
    pub nonlocal_22: f64,
    /// `2 beta D(u+², v+²)`.
    pub nonlocal_12: f64,
    pub total: f64,
    /// `<I'(u, v), (u, v)>`.
    pub nehari_defect: f64,
}

impl EnergyBreakdown {
    pub fn quadratic(&self) -> f64 {
        self.kinetic + self.potential
    }

    pub fn nonlocal(&self) -> f64 {
        self.nonlocal_11 + self.nonlocal_22 + self.nonlocal_12
    }

    /// Energy of `t (u, v)`.
    pub fn scaled_total(&self, t: f64) -> f64 {
        0.5 * t * t * self.quadratic() - 0.25 * t.powi(4) * self.nonlocal()
    }
}

/// `(|x|^-4 * u+²)` and `(|x|^-4 * v+²)` on the pair's grid.
struct Potentials {
    conv_u: RadialFn,
    conv_v: RadialFn,
}

fn nonlocal_potentials(p: &Pair) -> Result<Potentials> {
    let table = kernel_table(p.grid(), CRITICAL_ALPHA)?;
    Ok(Potentials { conv_u: table.apply(&p.u.positive_part().square())?, conv_v: table.apply(&p.v.positive_part().square())? })
}

fn breakdown_with(p: &Pair, prob: &Problem, conv: &Potentials) -> Result<EnergyBreakdown> {
    let u2 = p.u.positive_part().square();
    let v2 = p.v.positive_part().square();
    let kinetic = dirichlet_seminorm(&p.u)? + dirichlet_seminorm(&p.v)?;
    let (w1, w2) = prob.weights(p.grid());
    let potential = integrate(&w1.mul(&p.u.square())?)? + integrate(&w2.mul(&p.v.square())?)?;
    let d11 = integrate(&conv.conv_u.mul(&u2)?)?;
    let d22 = integrate(&conv.conv_v.mul(&v2)?)?;
    let d12 = 0.5 * (integrate(&conv.conv_u.mul(&v2)?)? + integrate(&conv.conv_v.mul(&u2)?)?);
    let nonlocal_11 = prob.mu1 * d11;
    let nonlocal_22 = prob.mu2 * d22;
    let nonlocal_12 = 2.0 * prob.beta * d12;
    let nl = nonlocal_11 + nonlocal_22 + nonlocal_12;
    Ok(EnergyBreakdown {
        kinetic,
        potential,
        nonlocal_11,
        nonlocal_22,
        nonlocal_12,
        total: 0.5 * (kinetic + potential) - 0.25 * nl,
        nehari_defect: kinetic + potential - nl,
    })
}

/// Energy `I` of a radial pair.
pub fn energy_i(p: &Pair, prob: &Problem) -> Result<EnergyBreakdown> {
    check_dim(p, prob)?;
    breakdown_with(p, prob, &nonlocal_potentials(p)?)
}

/// Energy `I_inf` of the limit system.
pub fn energy_i_infty(p: &Pair, cc: &CouplingConstants) -> Result<EnergyBreakdown> {
    energy_i(p, &Problem::limit(cc))
}

fn check_dim(p: &Pair, prob: &Problem) -> Result<()> {
    if p.grid().dim() != prob.dim {
        return Err(Error::param(format!("pair lives in dimension {}, problem in {}", p.grid().dim(), prob.dim)));
    }
    Ok(())
}

/// The scaling `t` with `t p` on the Nehari manifold.
pub fn nehari_project(p: &Pair, prob: &Problem) -> Result<(f64, Pair)> {
    let e = energy_i(p, prob)?;
    let t = nehari_scale(&e)?;
    Ok((t, p.scale(t)))
}

pub(crate) fn nehari_scale(e: &EnergyBreakdown) -> Result<f64> {
    let nl = e.nonlocal();
    if !(nl > 0.0) {
        return Err(Error::Undefined("Nehari projection needs a nonzero positive part".into()));
    }
    Ok((e.quadratic() / nl).sqrt())
}

/// Projection scalars of the trial pair `(sqrt(k1), sqrt(k2)) theta_{delta,y}`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TrialProjection {
    pub delta: f64,
    pub rho: f64,
    /// Projection onto the Nehari manifold with potentials and no lambdas.
    pub t0: f64,
    /// Projection with potentials and lambdas.
    pub t_lam: f64,
    /// `int (k1 V1 + k2 V2) theta_{delta,y}²`.
    pub potential_term: f64,
    /// `int (k1 lambda1 + k2 lambda2) theta_{delta,y}²`.
    pub lambda_term: f64,
    /// Energy of the projected pair without lambdas, `t0^4 Sigma`.
    pub energy0: f64,
    /// Energy of the projected pair with lambdas, `t_lam^4 Sigma`.
    pub energy: f64,
}

/// `int V theta_{delta,y}²` for the translated, dilated profile.
pub fn potential_overlap(v: &Potential, member: &OffsetFn) -> Result<f64> {
    if v.is_zero() {
        return Ok(0.0);
    }
    let dim = member.profile.dim() as f64;
    let sq = member.profile.square();
    Ok(member.delta.powf(-(dim - 2.0)) * dilated_overlap(|r| v.eval(r), &sq, member.delta, member.rho)?)
}

pub fn trial_projection_scalars(
    profile: &TrialProfile,
    delta: f64,
    rho: f64,
    prob: &Problem,
    cc: &CouplingConstants,
) -> Result<TrialProjection> {
    let member = crate::bubbles::trial_member(profile, delta, rho)?;
    let ksum = cc.k1 + cc.k2;
    let potential_term = cc.k1 * potential_overlap(&prob.v1, &member)? + cc.k2 * potential_overlap(&prob.v2, &member)?;
    let lambda_term = (cc.k1 * prob.lambda1 + cc.k2 * prob.lambda2) * delta * delta * profile.l2_sq;
    let denom = ksum * profile.nonlocal;
    let base = ksum * profile.kinetic;
    let t0 = ((base + potential_term) / denom).sqrt();
    let t_lam = ((base + potential_term + lambda_term) / denom).sqrt();
    Ok(TrialProjection {
        delta,
        rho,
        t0,
        t_lam,
        potential_term,
        lambda_term,
        energy0: t0.powi(4) * profile.sigma,
        energy: t_lam.powi(4) * profile.sigma,
    })
}

/// Barycenter `xi` (axial component) and concentration `gamma`.
#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct Barycenter {
    pub xi: f64,
    pub gamma: f64,
}

/// Radial density `mu1 u+^{2*} + 2 beta (u+ v+)^{2*/2} + mu2 v+^{2*}`.
fn barycenter_density(u: &RadialFn, v: &RadialFn, mu1: f64, mu2: f64, beta: f64) -> Result<RadialFn> {
    let dim = u.dim() as f64;
    let crit = 2.0 * dim / (dim - 2.0);
    let up = u.positive_part().abs_pow(crit);
    let vp = v.positive_part().abs_pow(crit);
    let mixed = u.positive_part().abs_pow(crit / 2.0).mul(&v.positive_part().abs_pow(crit / 2.0))?;
    up.scale(mu1).add(&vp.scale(mu2))?.add(&mixed.scale(2.0 * beta))
}

fn barycenter_of_density(density: &RadialFn, delta: f64, rho: f64) -> Result<Barycenter> {
    let first = axis_moments_of_density(density, delta, rho, 0.0)?;
    if !(first.mass > 0.0) {
        return Err(Error::Undefined("barycenter of a pair with no positive mass".into()));
    }
    let xi = first.axial / first.mass;
    let second = axis_moments_of_density(density, delta, rho, xi)?;
    Ok(Barycenter { xi, gamma: second.spread / second.mass })
}

/// `(xi, gamma)` of a pair sharing one dilation and translation.
pub fn barycenter(p: &OffsetPair, cc: &CouplingConstants) -> Result<Barycenter> {
    let density = barycenter_density(&p.u.profile, &p.v.profile, cc.mu1, cc.mu2, cc.beta)?;
    barycenter_of_density(&density, p.u.delta, p.u.rho)
}

/// `(xi, gamma)` of a centered radial pair.
pub fn barycenter_radial(p: &Pair, cc: &CouplingConstants) -> Result<Barycenter> {
    let pair = OffsetPair::new(OffsetFn::centered(p.u.clone()), OffsetFn::centered(p.v.clone()))?;
    barycenter(&pair, cc)
}

/// `(xi, gamma)` of `(sqrt(k1), sqrt(k2)) theta_{delta,y}`; the density is a
/// multiple of `theta^{2*}`, so the constant drops out.
pub fn trial_barycenter(profile: &TrialProfile, delta: f64, rho: f64) -> Result<Barycenter> {
    let member = crate::bubbles::trial_member(profile, delta, rho)?;
    let dim = profile.dim() as f64;
    let density = member.profile.positive_part().abs_pow(2.0 * dim / (dim - 2.0));
    barycenter_of_density(&density, delta, rho)
}

/// `<xi | y>` for the trial pair at `(delta, y)` with `|y| = rho > 0`.
pub fn barycenter_axis_sign(profile: &TrialProfile, delta: f64, rho: f64) -> Result<f64> {
    if !(rho > 0.0) {
        return Err(Error::param("the axis sign needs a nonzero offset"));
    }
    Ok(trial_barycenter(profile, delta, rho)?.xi * rho)
}

/// Strong residuals `(R1, R2)` of the system at the nodes.
pub fn strong_residual(p: &Pair, prob: &Problem) -> Result<(RadialFn, RadialFn)> {
    check_dim(p, prob)?;
    let conv = nonlocal_potentials(p)?;
    strong_residual_with(p, prob, &conv)
}

fn strong_residual_with(p: &Pair, prob: &Problem, conv: &Potentials) -> Result<(RadialFn, RadialFn)> {
    let g = p.grid();
    let (w1, w2) = prob.weights(g);
    let component = |f: &RadialFn, w: &RadialFn, self_conv: &RadialFn, cross_conv: &RadialFn, mu: f64| {
        let lap = g.neg_laplacian(&f.values);
        let values = (0..g.len())
            .map(|i| {
                let fp = f.values[i].max(0.0);
                lap[i] + w.values[i] * f.values[i] - (mu * self_conv.values[i] + prob.beta * cross_conv.values[i]) * fp
            })
            .collect();
        RadialFn::new(g.clone(), values, Tail::none())
    };
    Ok((component(&p.u, &w1, &conv.conv_u, &conv.conv_v, prob.mu1)?, component(&p.v, &w2, &conv.conv_v, &conv.conv_u, prob.mu2)?))
}

/// Pohozaev diagnostics of a pair.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PohozaevResidual {
    /// `int lambda1 u² + lambda2 v²`.
    pub lambda_mass: f64,
    /// `|<I'(u, v), (x . grad u, x . grad v)>|` over the energy scale.
    pub identity_gap: f64,
}

/// Tests the equations against the dilation generator `x . grad`.
pub fn pohozaev_residual(p: &Pair, prob: &Problem) -> Result<PohozaevResidual> {
    check_dim(p, prob)?;
    let conv = nonlocal_potentials(p)?;
    let e = breakdown_with(p, prob, &conv)?;
    let lambda_mass = prob.lambda1 * integrate(&p.u.square())? + prob.lambda2 * integrate(&p.v.square())?;
    let scale = e.kinetic + e.nonlocal() + e.potential.abs();
    if scale == 0.0 {
        return Ok(PohozaevResidual { lambda_mass, identity_gap: 0.0 });
    }
    let (r1, r2) = strong_residual_with(p, prob, &conv)?;
    let g = p.grid();
    let generator = |f: &RadialFn| -> Result<RadialFn> {
        let d = g.first_derivative(&f.values);
        RadialFn::new(g.clone(), g.nodes().iter().zip(&d).map(|(r, d)| r * d).collect(), Tail::none())
    };
    let pairing = integrate(&r1.mul(&generator(&p.u)?)?)? + integrate(&r2.mul(&generator(&p.v)?)?)?;
    Ok(PohozaevResidual { lambda_mass, identity_gap: pairing.abs() / scale })
}

/// A radial test function on its own grid, translated by `rho`.
#[derive(Clone, Debug)]
pub struct TestFunction {
    pub profile: RadialFn,
    pub rho: f64,
}

/// Smooth bump `exp(1 - 1/(1 - (r/width)²))` supported in `B_width`.
pub fn mollified_bump(dim: usize, width: f64, nodes: usize) -> Result<RadialFn> {
    let grid = make_grid(dim, nodes, width, 1.0)?;
    Ok(RadialFn::from_fn(
        &grid,
        |r| {
            let t = r / width;
            if t >= 1.0 {
                0.0
            } else {
                (1.0 - 1.0 / (1.0 - t * t)).exp()
            }
        },
        Tail::none(),
    ))
}

/// Twenty bumps with log-spaced widths in `[0.05, 20]` and offsets cycling
/// through `{0, 1, 5}`.
pub fn default_test_set(dim: usize) -> Result<Vec<TestFunction>> {
    let n = 20;
    let (lo, hi) = (0.05f64.ln(), 20f64.ln());
    let offsets = [0.0, 1.0, 5.0];
    (0..n)
        .map(|i| {
            let width = (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp();
            Ok(TestFunction { profile: mollified_bump(dim, width, 200)?, rho: offsets[i % offsets.len()] })
        })
        .collect()
}

/// `int |grad phi|² + int w phi²` for a translated test function.
fn test_norm_sq(phi: &TestFunction, w: &RadialFn) -> Result<f64> {
    let grad = dirichlet_seminorm(&phi.profile)?;
    let mass = bicenter_integral(w, &phi.profile.square(), phi.rho)?;
    Ok(grad + mass)
}

/// `max |<I'(p), phi>| / (|phi|_H |p|_H)` over test functions placed in
/// either component.
pub fn weak_residual(p: &Pair, prob: &Problem, test_set: &[TestFunction]) -> Result<f64> {
    check_dim(p, prob)?;
    let conv = nonlocal_potentials(p)?;
    let e = breakdown_with(p, prob, &conv)?;
    let norm_p = e.quadratic().max(0.0).sqrt();
    if norm_p == 0.0 {
        return Ok(0.0);
    }
    let (r1, r2) = strong_residual_with(p, prob, &conv)?;
    let (w1, w2) = prob.weights(p.grid());
    let mut worst = 0.0f64;
    for phi in test_set {
        for (r, w) in [(&r1, &w1), (&r2, &w2)] {
            let pairing = bicenter_integral(r, &phi.profile, phi.rho)?;
            let norm = test_norm_sq(phi, w)?.sqrt();
            worst = worst.max(pairing.abs() / (norm * norm_p));
        }
    }
    Ok(worst)
}

/// Residual of the scalar equation `-Δu + λu = mu (|x|^-4 * u+²) u+` in the
/// same relative dual norm.
pub fn scalar_weak_residual(u: &RadialFn, mu: f64, lambda: f64, test_set: &[TestFunction]) -> Result<f64> {
    let prob = Problem::new(u.dim(), mu, mu, 2.0 * mu, lambda, 0.0, Potential::Zero, Potential::Zero)?;
    let p = Pair::new(u.clone(), RadialFn::zeros(&u.grid))?;
    weak_residual(&p, &prob, test_set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bubbles::{ground_pair, make_trial_profile, TrialConfig};
    use crate::riesz::constants_table;

    fn grid() -> Arc<RadialGrid> {
        make_grid(5, 400, 40.0, 1.02).unwrap()
    }

    fn cc() -> CouplingConstants {
        coupling_constants(1.0, 2.0, 3.0, 5).unwrap()
    }

    fn gaussian_pair(g: &Arc<RadialGrid>, a: f64, b: f64) -> Pair {
        let u = RadialFn::from_fn(g, |r| a * (-r * r / 2.0).exp(), Tail::none());
        let v = RadialFn::from_fn(g, |r| b * (-r * r / 3.0).exp(), Tail::none());
        Pair::new(u, v).unwrap()
    }

    #[test]
    fn zero_state_is_trivial() {
        let g = grid();
        let e = energy_i(&Pair::zeros(&g), &Problem::limit(&cc())).unwrap();
        assert_eq!(e, EnergyBreakdown::default());
        assert!(nehari_project(&Pair::zeros(&g), &Problem::limit(&cc())).is_err());
    }

    #[test]
    fn ground_pair_energy_is_c_inf() {
        let c = cc();
        let e = energy_i_infty(&ground_pair(&grid(), 1.0, &c).unwrap(), &c).unwrap();
        assert!((e.total / c.c_inf - 1.0).abs() < 1e-3, "{} vs {}", e.total, c.c_inf);
        assert!(e.nehari_defect.abs() / e.kinetic < 1e-3);
    }

    #[test]
    fn negative_pair_has_no_nonlocal_energy() {
        let g = grid();
        let p = gaussian_pair(&g, 1.0, 2.0).scale(-1.0);
        let prob = Problem::new(5, 1.0, 2.0, 3.0, 0.5, 0.2, Potential::rational(0.3, 2.0).unwrap(), Potential::Zero).unwrap();
        let e = energy_i(&p, &prob).unwrap();
        assert_eq!(e.nonlocal(), 0.0);
        assert!((e.total - 0.5 * e.quadratic()).abs() < 1e-15);
    }

    #[test]
    fn energy_is_polynomial_in_scale() {
        let g = grid();
        let c = cc();
        let p = gaussian_pair(&g, 1.0, 0.7);
        let e = energy_i_infty(&p, &c).unwrap();
        for t in [0.5, 1.0, 2.0] {
            let et = energy_i_infty(&p.scale(t), &c).unwrap();
            assert!((et.total - e.scaled_total(t)).abs() < 1e-10 * e.quadratic().max(1.0) * t.powi(4));
        }
    }

    #[test]
    fn nehari_projection_homogeneous_and_idempotent() {
        let g = grid();
        let prob = Problem::new(5, 1.0, 2.0, 3.0, 0.1, 0.2, Potential::rational(0.5, 2.0).unwrap(), Potential::Zero).unwrap();
        let (t, q) = nehari_project(&gaussian_pair(&g, 1.0, 1.5), &prob).unwrap();
        assert!(t > 0.0);
        let (t1, _) = nehari_project(&q, &prob).unwrap();
        assert!((t1 - 1.0).abs() < 1e-12);
        let (t3, _) = nehari_project(&q.scale(3.0), &prob).unwrap();
        assert!((t3 - 1.0 / 3.0).abs() < 1e-12);
        let e = energy_i(&q, &prob).unwrap();
        assert!(e.nehari_defect.abs() < 1e-10 * e.quadratic());
        assert!((e.total - 0.25 * e.quadratic()).abs() < 1e-12 * e.quadratic());
    }

    #[test]
    fn projection_ordering_for_ground_pair() {
        let c = cc();
        let p = ground_pair(&grid(), 1.0, &c).unwrap();
        let prob = Problem::new(5, 1.0, 2.0, 3.0, 0.1, 0.1, Potential::rational(0.2, 2.0).unwrap(), Potential::rational(0.1, 2.0).unwrap())
            .unwrap();
        let (t, _) = nehari_project(&p, &prob).unwrap();
        let (tau, _) = nehari_project(&p, &Problem::limit(&c)).unwrap();
        assert!(t >= 1.0 && tau <= t);
    }

    #[test]
    fn potential_norm_and_eval() {
        let v = Potential::rational(2.0, 2.0).unwrap();
        let n = v.critical_norm(5).unwrap();
        let unit = Potential::rational(1.0, 2.0).unwrap().critical_norm(5).unwrap();
        assert!((n / unit - 2.0).abs() < 1e-12);
        assert_eq!(Potential::rational(0.0, 2.0).unwrap().critical_norm(5).unwrap(), 0.0);
        assert!(Potential::rational(1.0, 0.5).unwrap().critical_norm(5).is_err());
        assert!(Potential::rational(-1.0, 2.0).is_err());
    }

    #[test]
    fn barycenter_centered_and_scaled() {
        let g = grid();
        let c = cc();
        let p = gaussian_pair(&g, 1.0, 0.5);
        let b = barycenter_radial(&p, &c).unwrap();
        assert_eq!(b.xi, 0.0);
        assert!(b.gamma > 0.0 && b.gamma < 1.0);
        let member = OffsetFn::new(p.u.clone(), 0.7, 2.0).unwrap();
        let op = OffsetPair::new(member.clone(), OffsetFn { profile: p.v.clone(), ..member }).unwrap();
        let b0 = barycenter(&op, &c).unwrap();
        for t in [0.5, 2.0] {
            let bt = barycenter(&op.scale(t), &c).unwrap();
            assert!((bt.xi - b0.xi).abs() < 1e-12 && (bt.gamma - b0.gamma).abs() < 1e-12);
        }
        assert!(b0.xi > 0.0);
        assert!(barycenter_radial(&Pair::zeros(&g), &c).is_err());
    }

    #[test]
    fn ground_pair_residuals_small() {
        let c = cc();
        let p = ground_pair(&grid(), 1.0, &c).unwrap();
        let tests = default_test_set(5).unwrap();
        let prob = Problem::limit(&c);
        let r = weak_residual(&p, &prob, &tests).unwrap();
        assert!(r < 1e-3, "{r}");
        let r_big = weak_residual(&p.scale(1.2), &prob, &tests).unwrap();
        assert!(r_big > 0.05, "{r_big}");
        assert_eq!(weak_residual(&Pair::zeros(p.grid()), &prob, &tests).unwrap(), 0.0);
        let poh = pohozaev_residual(&p, &prob).unwrap();
        assert!(poh.identity_gap < 1e-3 && poh.lambda_mass == 0.0, "{poh:?}");
        let with_lambda = prob.with_lambda(0.5, 0.5);
        let poh = pohozaev_residual(&p, &with_lambda).unwrap();
        assert!(poh.lambda_mass > 0.0);
        assert!(weak_residual(&p, &with_lambda, &tests).unwrap() > 1e-2);
    }

    #[test]
    fn bubble_residual_and_negative_control() {
        let k = constants_table(5).unwrap();
        let g = grid();
        let u = crate::bubbles::bubble_profile(&g, k.bubble_c, 1.0);
        let tests = default_test_set(5).unwrap();
        assert!(scalar_weak_residual(&u, 1.0, 0.0, &tests).unwrap() < 1e-3);
        assert!(scalar_weak_residual(&u.scale(2.0), 1.0, 0.0, &tests).unwrap() > 0.1);
    }

    #[test]
    fn trial_projection_trivial_without_potentials() {
        let c = cc();
        let profile = make_trial_profile(0.9, &c, 1.005 * c.c_inf, &TrialConfig::default()).unwrap();
        let pr = trial_projection_scalars(&profile, 1.0, 0.0, &Problem::limit(&c), &c).unwrap();
        assert!((pr.t0 - 1.0).abs() < 1e-10 && (pr.t_lam - 1.0).abs() < 1e-10);
        let lam = Problem::limit(&c).with_lambda(0.1, 0.1);
        let pr = trial_projection_scalars(&profile, 1.0, 0.0, &lam, &c).unwrap();
        let direct = 0.1 * (c.k1 + c.k2) * integrate(&profile.profile.square()).unwrap() / ((c.k1 + c.k2) * profile.nonlocal);
        assert!((pr.t_lam.powi(2) - pr.t0.powi(2) - direct).abs() < 1e-10);
        assert!(barycenter_axis_sign(&profile, 1.0, 0.0).is_err());
        assert!(barycenter_axis_sign(&profile, 1.0, 1.0).unwrap() > 0.0);
    }
}
