//! Nehari-constrained gradient flow for the limit system and the scalar
//! Choquard equation, and synthetic splitting checks.
//!
//! The flow descends in the `D^{1,2}` metric: the gradient of `I_inf` at
//! `(u, v)` is `(u, v) - (-Δ)^{-1} F(u, v)` with `F` the nonlocal right-hand
//! side, so each step mixes the iterate with the Newtonian potential of `F`,
//! clamps negative values and rescales back onto the Nehari manifold.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bubbles::{bubble_constant, bubble_profile, CouplingConstants};
use crate::error::{Error, Result};
use crate::quad::bisect;
use crate::radial::{dirichlet_seminorm, integrate, make_grid, Pair, RadialFn, RadialGrid, Tail};
use crate::riesz::{double_energy, kernel_table, CRITICAL_ALPHA};
use crate::variational::{default_test_set, energy_i, weak_residual, EnergyBreakdown, Problem, TestFunction};

/// Grid parameters shared by configuration files.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub nodes: usize,
    pub r_max: f64,
    pub stretch: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { nodes: 400, r_max: 40.0, stretch: 1.02 }
    }
}

impl GridSpec {
    pub fn build(&self, dim: usize) -> Result<Arc<RadialGrid>> {
        make_grid(dim, self.nodes, self.r_max, self.stretch)
    }
}

/// Starting state of a flow.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialPair {
    /// `(a_u, a_v) exp(-r² / (2 width²))`.
    Gaussian { amp_u: f64, amp_v: f64, width: f64 },
    /// The exact ground pair (or scalar extremal) at dilation `delta`.
    Exact { delta: f64 },
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct FlowConfig {
    /// Initial mixing step in `(0, 1]`.
    pub step: f64,
    pub max_iter: usize,
    /// Target relative dual-norm residual.
    pub tol: f64,
    /// Steps between Nehari projections.
    pub project_every: usize,
    /// Steps between residual evaluations.
    pub residual_every: usize,
    /// Steps between rescalings of the fitted dilation back to 1.
    pub recenter_every: usize,
    pub initial: InitialPair,
    pub grid: GridSpec,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            step: 1.0,
            max_iter: 5000,
            tol: 1e-4,
            project_every: 1,
            residual_every: 10,
            recenter_every: 50,
            initial: InitialPair::Gaussian { amp_u: 1.0, amp_v: 1.5, width: 1.0 },
            grid: GridSpec::default(),
        }
    }
}

impl FlowConfig {
    fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step <= 1.0) {
            return Err(Error::param(format!("step {} outside (0, 1]", self.step)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::param(format!("tolerance {} must be positive", self.tol)));
        }
        if self.project_every == 0 || self.residual_every == 0 || self.recenter_every == 0 {
            return Err(Error::param("iteration frequencies must be positive"));
        }
        match self.initial {
            InitialPair::Gaussian { amp_u, amp_v, width } if !(amp_u >= 0.0 && amp_v >= 0.0 && width > 0.0) => {
                Err(Error::param("Gaussian start needs nonnegative amplitudes and a positive width"))
            }
            InitialPair::Exact { delta } if !(delta > 0.0) => Err(Error::param("exact start needs a positive dilation")),
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Converged,
    BudgetExhausted,
    SemiTrivialAttractor,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct TraceRow {
    pub iter: usize,
    pub energy: f64,
    /// `<I'(p), p>` over `|p|²`.
    pub nehari_defect: f64,
    pub residual: Option<f64>,
    pub step: f64,
    /// Mass removed by clamping negative values.
    pub clamped: f64,
    pub recentered: bool,
}

/// Bubble parameters fitted to a converged state.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BubbleFit {
    pub delta_hat: f64,
    /// `v(0) / u(0)`; zero for scalar flows.
    pub amplitude_ratio: f64,
    /// Largest deviation of `v/u` from `sqrt(k2/k1)` where `u > 0.01 max u`.
    pub bulk_ratio_error: Option<f64>,
    /// Largest deviation of `u` from the fitted bubble, relative to `max u`.
    pub shape_error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FlowDiagnostics {
    pub trace: Vec<TraceRow>,
    #[serde(skip)]
    pub final_pair: Pair,
    pub verdict: Verdict,
    pub iterations: usize,
    pub energy: f64,
    pub target_energy: f64,
    pub residual: f64,
    pub fit: BubbleFit,
}

impl FlowDiagnostics {
    pub fn write_trace_csv(&self, path: &Path) -> Result<()> {
        let io = |e: csv::Error| Error::Io { path: path.display().to_string(), msg: e.to_string() };
        let mut w = csv::Writer::from_path(path).map_err(io)?;
        w.write_record(["iter", "energy", "nehari_defect", "residual", "step", "clamped", "recentered"]).map_err(io)?;
        for row in &self.trace {
            w.write_record([
                row.iter.to_string(),
                format!("{:.17e}", row.energy),
                format!("{:.6e}", row.nehari_defect),
                row.residual.map(|r| format!("{r:.6e}")).unwrap_or_default(),
                format!("{:.6e}", row.step),
                format!("{:.6e}", row.clamped),
                row.recentered.to_string(),
            ])
            .map_err(io)?;
        }
        w.flush().map_err(|e| Error::Io { path: path.display().to_string(), msg: e.to_string() })
    }
}

/// Radial Newtonian potential `(-Δ)^{-1} f`, exact on the tail model.
struct NewtonInverse {
    grid: Arc<RadialGrid>,
    inner: Vec<Vec<f64>>,
    outer: Vec<Vec<f64>>,
}

impl NewtonInverse {
    fn new(grid: &Arc<RadialGrid>) -> Self {
        NewtonInverse { grid: grid.clone(), inner: grid.panel_power_weights((grid.dim() - 1) as f64), outer: grid.panel_power_weights(1.0) }
    }

    fn apply(&self, f: &RadialFn) -> Result<RadialFn> {
        let g = &self.grid;
        let n = g.dim() as f64;
        let m = g.len();
        let big_r = g.r_max();
        let panel = |w: &[Vec<f64>], k: usize| -> f64 {
            let (_, _, idx, _) = g.panel_stencil(k);
            idx.iter().zip(&w[k]).map(|(j, c)| c * f.values[*j]).sum()
        };
        let mut a = vec![0.0; m];
        let mut acc = 0.0;
        for (k, slot) in a.iter_mut().enumerate() {
            acc += panel(&self.inner, k);
            *slot = acc;
        }
        let mut b = vec![0.0; m];
        let mut acc = if f.tail.is_empty() { 0.0 } else { f.tail.moment_beyond(big_r, 1.0)? };
        for k in (0..m).rev() {
            b[k] = acc;
            acc += panel(&self.outer, k);
        }
        let values = g.nodes().iter().enumerate().map(|(i, r)| (r.powf(2.0 - n) * a[i] + b[i]) / (n - 2.0)).collect();
        let total = a[m - 1] + if f.tail.is_empty() { 0.0 } else { f.tail.moment_beyond(big_r, n - 1.0)? };
        let mut terms = vec![(total / (n - 2.0), n - 2.0)];
        for &(c, q) in &f.tail.terms {
            if q <= n {
                return Err(Error::Divergent { exponent: q, required: n });
            }
            terms.push((-c / ((q - 2.0) * (q - n)), q - 2.0));
        }
        RadialFn::new(g.clone(), values, Tail::from_terms(terms))
    }
}

/// Flow state with its convolution potentials.
struct State {
    pair: Pair,
    conv_u: RadialFn,
    conv_v: RadialFn,
    energy: EnergyBreakdown,
}

fn state_of(pair: Pair, prob: &Problem) -> Result<State> {
    let table = kernel_table(pair.grid(), CRITICAL_ALPHA)?;
    let conv_u = table.apply(&pair.u.positive_part().square())?;
    let conv_v = table.apply(&pair.v.positive_part().square())?;
    let energy = energy_i(&pair, prob)?;
    Ok(State { pair, conv_u, conv_v, energy })
}

fn projected(pair: Pair, prob: &Problem) -> Result<State> {
    let s = state_of(pair, prob)?;
    let nl = s.energy.nonlocal();
    if !(nl > 0.0) {
        return Err(Error::Undefined("flow iterate lost its positive part".into()));
    }
    let t = (s.energy.quadratic() / nl).sqrt();
    state_of(s.pair.scale(t), prob)
}

fn rhs(f: &RadialFn, self_conv: &RadialFn, cross_conv: &RadialFn, mu: f64, beta: f64) -> Result<RadialFn> {
    let fp = f.positive_part();
    self_conv.scale(mu).add(&cross_conv.scale(beta))?.mul(&fp)
}

fn clamp(f: &RadialFn) -> (RadialFn, f64) {
    let removed: f64 = f.grid.weights().iter().zip(&f.values).map(|(w, v)| w * (-v).max(0.0)).sum();
    (f.positive_part(), removed)
}

/// Dilation at which `f` falls to `2^{-(N-2)/2} f(0)`, which is `delta` for
/// a bubble `U_delta`.
fn fit_delta(f: &RadialFn) -> Option<f64> {
    let dim = f.dim() as f64;
    let f0 = f.eval(0.0);
    if !(f0 > 0.0) {
        return None;
    }
    let level = f0 * 2f64.powf(-(dim - 2.0) / 2.0);
    let hi = f.grid.r_max();
    if f.eval(hi) >= level {
        return None;
    }
    bisect(|r| f.eval(r) - level, 0.0, hi, 1e-12)
}

/// `f -> s^{(N-2)/2} f(s r)`.
fn rescale(f: &RadialFn, s: f64) -> RadialFn {
    let e = (f.dim() as f64 - 2.0) / 2.0;
    let amp = s.powf(e);
    let tail = Tail::from_terms(f.tail.terms.iter().map(|&(c, p)| (c * amp * s.powf(-p), p)).collect());
    RadialFn::from_fn(&f.grid, |r| amp * f.eval(s * r), tail)
}

struct FlowTarget {
    prob: Problem,
    /// Bubble amplitudes of the two components at the solution.
    amp_u: f64,
    amp_v: f64,
    target_energy: f64,
    scalar: bool,
}

fn run_flow(start: Pair, target: &FlowTarget, cfg: &FlowConfig, tests: &[TestFunction]) -> Result<FlowDiagnostics> {
    let prob = &target.prob;
    let newton = NewtonInverse::new(start.grid());
    let mut s = projected(start, prob)?;
    let mut trace = Vec::new();
    let norm_sq = |e: &EnergyBreakdown| e.quadratic().max(f64::MIN_POSITIVE);
    let mut residual = weak_residual(&s.pair, prob, tests)?;
    trace.push(TraceRow {
        iter: 0,
        energy: s.energy.total,
        nehari_defect: s.energy.nehari_defect / norm_sq(&s.energy),
        residual: Some(residual),
        step: 0.0,
        clamped: 0.0,
        recentered: false,
    });
    let mut verdict = Verdict::BudgetExhausted;
    let mut iter = 0;
    if residual < cfg.tol {
        verdict = Verdict::Converged;
    }
    while verdict == Verdict::BudgetExhausted && iter < cfg.max_iter {
        iter += 1;
        let f1 = rhs(&s.pair.u, &s.conv_u, &s.conv_v, prob.mu1, prob.beta)?;
        let f2 = rhs(&s.pair.v, &s.conv_v, &s.conv_u, prob.mu2, prob.beta)?;
        let w1 = newton.apply(&f1)?;
        let w2 = newton.apply(&f2)?;
        let mut tau = cfg.step;
        let mut accepted = None;
        for _ in 0..40 {
            let (u, cu) = clamp(&s.pair.u.scale(1.0 - tau).add(&w1.scale(tau))?);
            let (v, cv) = clamp(&s.pair.v.scale(1.0 - tau).add(&w2.scale(tau))?);
            let cand = Pair::new(u, v)?;
            let next = if iter % cfg.project_every == 0 { projected(cand, prob)? } else { state_of(cand, prob)? };
            if next.energy.total <= s.energy.total + 1e-12 * s.energy.total.abs() {
                accepted = Some((next, cu + cv));
                break;
            }
            tau *= 0.5;
        }
        let Some((next, clamped)) = accepted else {
            return Err(Error::numerical(format!("line search stalled at iteration {iter}")));
        };
        s = next;
        let mut recentered = false;
        if iter % cfg.recenter_every == 0 {
            if let Some(d) = fit_delta(&s.pair.u) {
                if (d - 1.0).abs() > 0.05 {
                    s = projected(Pair::new(rescale(&s.pair.u, d), rescale(&s.pair.v, d))?, prob)?;
                    recentered = true;
                }
            }
        }
        let mut row_residual = None;
        if iter % cfg.residual_every == 0 || iter == cfg.max_iter {
            residual = weak_residual(&s.pair, prob, tests)?;
            row_residual = Some(residual);
            if !target.scalar && is_semi_trivial(&s.pair) {
                verdict = Verdict::SemiTrivialAttractor;
            } else if residual < cfg.tol {
                verdict = Verdict::Converged;
            }
        }
        trace.push(TraceRow {
            iter,
            energy: s.energy.total,
            nehari_defect: s.energy.nehari_defect / norm_sq(&s.energy),
            residual: row_residual,
            step: tau,
            clamped,
            recentered,
        });
    }
    if verdict == Verdict::BudgetExhausted && !target.scalar && is_semi_trivial(&s.pair) {
        verdict = Verdict::SemiTrivialAttractor;
    }
    let fit = fit_state(&s.pair, target)?;
    Ok(FlowDiagnostics {
        trace,
        verdict,
        iterations: iter,
        energy: s.energy.total,
        target_energy: target.target_energy,
        residual,
        fit,
        final_pair: s.pair,
    })
}

fn is_semi_trivial(p: &Pair) -> bool {
    let a = p.u.max_abs();
    let b = p.v.max_abs();
    a.min(b) <= 1e-8 * a.max(b)
}

fn fit_state(p: &Pair, target: &FlowTarget) -> Result<BubbleFit> {
    let delta_hat = fit_delta(&p.u).ok_or_else(|| Error::numerical("cannot fit a dilation to the final state"))?;
    let c = bubble_constant(p.u.dim())?;
    let model = bubble_profile(p.grid(), c * target.amp_u, delta_hat);
    let umax = p.u.max_abs();
    let shape_error = p.u.values.iter().zip(&model.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / umax;
    let u0 = p.u.eval(0.0);
    let amplitude_ratio = if u0 > 0.0 { p.v.eval(0.0) / u0 } else { 0.0 };
    let bulk_ratio_error = if target.scalar {
        None
    } else {
        let want = target.amp_v / target.amp_u;
        Some(p.u.values.iter().zip(&p.v.values).filter(|(u, _)| **u > 0.01 * umax).map(|(u, v)| (v / u - want).abs()).fold(0.0, f64::max))
    };
    Ok(BubbleFit { delta_hat, amplitude_ratio, bulk_ratio_error, shape_error })
}

fn gaussian(grid: &Arc<RadialGrid>, amp: f64, width: f64) -> RadialFn {
    RadialFn::from_fn(grid, |r| amp * (-r * r / (2.0 * width * width)).exp(), Tail::none())
}

/// Ground state of the limit system by the projected flow.
pub fn solve_limit_ground_state(cc: &CouplingConstants, cfg: &FlowConfig) -> Result<FlowDiagnostics> {
    cfg.validate()?;
    let grid = cfg.grid.build(cc.dim)?;
    let start = match cfg.initial {
        InitialPair::Gaussian { amp_u, amp_v, width } => {
            if amp_u == 0.0 || amp_v == 0.0 {
                return Err(Error::param("both components of the start must be nonzero"));
            }
            Pair::new(gaussian(&grid, amp_u, width), gaussian(&grid, amp_v, width))?
        }
        InitialPair::Exact { delta } => crate::bubbles::ground_pair(&grid, delta, cc)?,
    };
    let target = FlowTarget { prob: Problem::limit(cc), amp_u: cc.k1.sqrt(), amp_v: cc.k2.sqrt(), target_energy: cc.c_inf, scalar: false };
    run_flow(start, &target, cfg, &default_test_set(cc.dim)?)
}

/// Ground state of `-Δu = mu (|x|^-4 * u²) u` by the same flow.
pub fn solve_scalar_choquard(mu: f64, dim: usize, cfg: &FlowConfig) -> Result<FlowDiagnostics> {
    cfg.validate()?;
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::param(format!("coupling {mu} must be positive")));
    }
    let grid = cfg.grid.build(dim)?;
    let u = match cfg.initial {
        InitialPair::Gaussian { amp_u, width, .. } => {
            if amp_u == 0.0 {
                return Err(Error::param("the start must be nonzero"));
            }
            gaussian(&grid, amp_u, width)
        }
        InitialPair::Exact { delta } => bubble_profile(&grid, bubble_constant(dim)? / mu.sqrt(), delta),
    };
    let prob = Problem::new(dim, mu, mu, 2.0 * mu, 0.0, 0.0, crate::variational::Potential::Zero, crate::variational::Potential::Zero)?;
    let shl_sq = crate::bubbles::sobolev_hl_sq(dim)?;
    let target = FlowTarget { prob, amp_u: 1.0 / mu.sqrt(), amp_v: 0.0, target_energy: shl_sq / (4.0 * mu), scalar: true };
    run_flow(Pair::new(u, RadialFn::zeros(&grid))?, &target, cfg, &default_test_set(dim)?)
}

/// One row of the concentrating-extremal table.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct VanishingRow {
    pub delta: f64,
    /// `int V_j Phi²`.
    pub potential_mass: f64,
    /// `lambda_j int Phi²`.
    pub lambda_mass: f64,
    /// `lambda_j delta² mu_j^{-1} |U_{1,0}|_2²`.
    pub lambda_law: f64,
    /// Nehari scaling `t_n`.
    pub t: f64,
    /// `J_j(t_n Phi_n)`.
    pub energy: f64,
}

/// Potential mass and constrained energy along `Phi_n = mu_j^{-1/2} U_{delta_n}`.
pub fn vanishing_energy_limit(prob: &Problem, component: usize, deltas: &[f64]) -> Result<Vec<VanishingRow>> {
    let (mu, lambda, v) = match component {
        1 => (prob.mu1, prob.lambda1, &prob.v1),
        2 => (prob.mu2, prob.lambda2, &prob.v2),
        _ => return Err(Error::param(format!("component index {component} must be 1 or 2"))),
    };
    let dim = prob.dim;
    let c = bubble_constant(dim)?;
    let unit_grid = make_grid(dim, 400, 40.0, 1.02)?;
    let unit_l2 = integrate(&bubble_profile(&unit_grid, c, 1.0).square())?;
    deltas
        .iter()
        .map(|&delta| {
            if !(delta > 0.0) {
                return Err(Error::param(format!("dilation {delta} must be positive")));
            }
            let grid = make_grid(dim, 400, 40.0 * delta.max(1.0), 1.02)?;
            let phi = bubble_profile(&grid, c / mu.sqrt(), delta);
            let phi2 = phi.square();
            let potential_mass = integrate(&v.on_grid(&grid).mul(&phi2)?)?;
            let lambda_mass = lambda * integrate(&phi2)?;
            let kinetic = dirichlet_seminorm(&phi)?;
            let nonlocal = mu * double_energy(&phi2, &phi2, CRITICAL_ALPHA)?;
            let quad = kinetic + potential_mass + lambda_mass;
            let t2 = quad / nonlocal;
            Ok(VanishingRow {
                delta,
                potential_mass,
                lambda_mass,
                lambda_law: lambda * delta * delta / mu * unit_l2,
                t: t2.sqrt(),
                energy: 0.25 * t2 * quad,
            })
        })
        .collect()
}

/// One row of the splitting table along `u_n = u0 + bubble_sigma`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BrezisLiebRow {
    pub sigma: f64,
    pub offset: f64,
    /// `|D(u_n+², u_n+²) - D((u_n-u)+², (u_n-u)+²) - D(u+², u+²)|`.
    pub self_error: f64,
    /// Same for the mixed term `D(u_n+², v_n+²)`.
    pub mixed_error: f64,
    pub self_total: f64,
}

/// `sigma^{-(N-2)/2} b(r / sigma)` on `grid`.
fn concentrate(b: &RadialFn, sigma: f64, grid: &Arc<RadialGrid>) -> RadialFn {
    let e = (b.dim() as f64 - 2.0) / 2.0;
    let amp = sigma.powf(-e);
    let tail = Tail::from_terms(b.tail.terms.iter().map(|&(c, p)| (c * amp * sigma.powf(p), p)).collect());
    RadialFn::from_fn(grid, |r| amp * b.eval(r / sigma), tail)
}

/// Splitting errors of the nonlocal energy along concentrating bubbles
/// added to the backgrounds `u0` and `v0`. Only centered bubbles are
/// supported, so every offset must be zero.
pub fn brezis_lieb_check(u0: &RadialFn, v0: &RadialFn, bubble: &RadialFn, sigmas: &[f64], offsets: &[f64]) -> Result<Vec<BrezisLiebRow>> {
    if sigmas.len() != offsets.len() {
        return Err(Error::param("sigma and offset sequences differ in length"));
    }
    if offsets.iter().any(|o| *o != 0.0) {
        return Err(Error::param("off-center bubbles are not radial; offsets must be zero"));
    }
    let grid = &u0.grid;
    let d = |a: &RadialFn, b: &RadialFn| double_energy(&a.positive_part().square(), &b.positive_part().square(), CRITICAL_ALPHA);
    let v0 = v0.resample(grid);
    let base_self = d(u0, u0)?;
    let base_mixed = d(u0, &v0)?;
    sigmas
        .iter()
        .zip(offsets)
        .map(|(&sigma, &offset)| {
            if !(sigma > 0.0) {
                return Err(Error::param(format!("scale {sigma} must be positive")));
            }
            let b = concentrate(bubble, sigma, grid);
            let un = u0.add(&b)?;
            let vn = v0.add(&b)?;
            let du = un.sub(u0)?;
            let dv = vn.sub(&v0)?;
            let self_total = d(&un, &un)?;
            let self_error = (self_total - d(&du, &du)? - base_self).abs();
            let mixed_error = (d(&un, &vn)? - d(&du, &dv)? - base_mixed).abs();
            Ok(BrezisLiebRow { sigma, offset, self_error, mixed_error, self_total })
        })
        .collect()
}
