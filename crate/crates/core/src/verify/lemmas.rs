//! The individual checks and the lazily built artifacts they share.

use std::str::FromStr;
use std::sync::{Arc, OnceLock};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::admissibility::{check_a3, choose_a_and_cbar, level_function, LevelChoice};
use super::config::RunConfig;
use super::region::{homotopy_boundary_check, homotopy_times, scan_region, RegionScan};
use super::report::{limit_trend, Check, LemmaReport, Table};
use crate::bubbles::{
    bubble_profile, coupling_constants, ground_pair, make_trial_profile, quotient_infimum, quotient_infimum_brute, trial_member,
    CouplingConstants, TrialProfile,
};
use crate::error::{Error, Result};
use crate::radial::{dirichlet_seminorm, make_grid, OffsetFn, OffsetPair, Pair, RadialFn, RadialGrid, Tail};
use crate::riesz::{constants_table_on, double_energy, ConstantsTable, CRITICAL_ALPHA};
use crate::solver::{brezis_lieb_check, solve_limit_ground_state, vanishing_energy_limit, FlowDiagnostics, Verdict};
use crate::variational::{
    barycenter, default_test_set, energy_i, nehari_project, pohozaev_residual, potential_overlap, scalar_weak_residual, trial_barycenter,
    trial_projection_scalars, Potential, Problem,
};

/// Names of the available checks, in report order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LemmaId {
    Constants,
    Bubble,
    Identities,
    Threshold,
    Vanishing,
    ProjectionOrder,
    GroundState,
    Pohozaev,
    EnergyLimit,
    Splitting,
    OverlapLimits,
    Barycenter,
    ProjectionLimits,
    Admissibility,
    Region,
    Homotopy,
    LevelBound,
}

impl LemmaId {
    pub const ALL: [LemmaId; 17] = [
        LemmaId::Constants,
        LemmaId::Bubble,
        LemmaId::Identities,
        LemmaId::Threshold,
        LemmaId::Vanishing,
        LemmaId::ProjectionOrder,
        LemmaId::GroundState,
        LemmaId::Pohozaev,
        LemmaId::EnergyLimit,
        LemmaId::Splitting,
        LemmaId::OverlapLimits,
        LemmaId::Barycenter,
        LemmaId::ProjectionLimits,
        LemmaId::Admissibility,
        LemmaId::Region,
        LemmaId::Homotopy,
        LemmaId::LevelBound,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LemmaId::Constants => "constants",
            LemmaId::Bubble => "bubble",
            LemmaId::Identities => "identities",
            LemmaId::Threshold => "threshold",
            LemmaId::Vanishing => "vanishing",
            LemmaId::ProjectionOrder => "projection-order",
            LemmaId::GroundState => "ground-state",
            LemmaId::Pohozaev => "pohozaev",
            LemmaId::EnergyLimit => "energy-limit",
            LemmaId::Splitting => "splitting",
            LemmaId::OverlapLimits => "overlap-limits",
            LemmaId::Barycenter => "barycenter",
            LemmaId::ProjectionLimits => "projection-limits",
            LemmaId::Admissibility => "admissibility",
            LemmaId::Region => "region",
            LemmaId::Homotopy => "homotopy",
            LemmaId::LevelBound => "level-bound",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            LemmaId::Constants => "sharp constants and the bubble energies",
            LemmaId::Bubble => "weak residual of the scalar extremal",
            LemmaId::Identities => "coupling identities and the quotient infimum",
            LemmaId::Threshold => "ground level below the semi-trivial levels",
            LemmaId::Vanishing => "concentrating scalar extremals lose the potential terms",
            LemmaId::ProjectionOrder => "projection onto the limit manifold shrinks pairs",
            LemmaId::GroundState => "projected flow reaches the ground pair",
            LemmaId::Pohozaev => "dilation identity at the ground pair",
            LemmaId::EnergyLimit => "projected concentrating ground pairs tend to the limit level",
            LemmaId::Splitting => "splitting of the nonlocal energy along concentrating bubbles",
            LemmaId::OverlapLimits => "potential overlaps of the trial family vanish in the three limits",
            LemmaId::Barycenter => "barycenter and concentration of the trial family",
            LemmaId::ProjectionLimits => "projection scalars of the trial family tend to 1",
            LemmaId::Admissibility => "potential smallness and the level parameters",
            LemmaId::Region => "dilation/translation region with boundary bounds",
            LemmaId::Homotopy => "sampled non-vanishing of the boundary homotopy",
            LemmaId::LevelBound => "supremum over the region below the compactness threshold",
        }
    }
}

impl FromStr for LemmaId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LemmaId::ALL.iter().copied().find(|id| id.as_str() == s).ok_or_else(|| {
            Error::Parameter(format!("unknown check '{s}'; expected one of: {}", LemmaId::ALL.map(|i| i.as_str()).join(", ")))
        })
    }
}

/// Run configuration plus the artifacts that several checks share.
pub struct Verifier {
    pub cfg: RunConfig,
    pub prob: Problem,
    pub cc: CouplingConstants,
    pub constants: ConstantsTable,
    pub grid: Arc<RadialGrid>,
    levels: OnceLock<Result<LevelChoice>>,
    profile: OnceLock<Result<TrialProfile>>,
    scan: OnceLock<Result<RegionScan>>,
    flow: OnceLock<Result<FlowDiagnostics>>,
}

impl Verifier {
    pub fn new(cfg: RunConfig) -> Result<Self> {
        cfg.validate()?;
        let grid = cfg.flow.grid.build(cfg.problem.dim)?;
        let prob = cfg.problem.build(&grid)?;
        let cc = prob.coupling()?;
        let constants = constants_table_on(&grid)?;
        Ok(Verifier {
            cfg,
            prob,
            cc,
            constants,
            grid,
            levels: OnceLock::new(),
            profile: OnceLock::new(),
            scan: OnceLock::new(),
            flow: OnceLock::new(),
        })
    }

    pub fn c_star_lower(&self) -> f64 {
        self.cc.c_inf * (1.0 + self.cfg.c_star_margin)
    }

    pub fn levels(&self) -> Result<&LevelChoice> {
        self.levels.get_or_init(|| choose_a_and_cbar(&self.prob, &self.constants, self.c_star_lower())).as_ref().map_err(Clone::clone)
    }

    pub fn profile(&self) -> Result<&TrialProfile> {
        self.profile
            .get_or_init(|| {
                let cbar = self.levels()?.cbar;
                make_trial_profile(self.cfg.support_fraction, &self.cc, cbar, &self.cfg.trial)
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    pub fn scan(&self) -> Result<&RegionScan> {
        self.scan
            .get_or_init(|| scan_region(self.profile()?, &self.prob, &self.constants, self.c_star_lower(), &self.cfg.scan))
            .as_ref()
            .map_err(Clone::clone)
    }

    pub fn flow(&self) -> Result<&FlowDiagnostics> {
        self.flow.get_or_init(|| solve_limit_ground_state(&self.cc, &self.cfg.flow)).as_ref().map_err(Clone::clone)
    }

    /// Builds the shared artifacts up front so that parallel checks never
    /// wait on each other.
    pub fn warm(&self) {
        let _ = self.levels();
        let _ = self.profile();
        let _ = self.scan();
        let _ = self.flow();
    }

    fn tol(&self, x: f64) -> f64 {
        x * self.cfg.tol_scale
    }

    fn trend_rows(&self, rep: &mut LemmaReport, label: &str, values: &[f64], fraction: f64) {
        let (monotone, ratio) = limit_trend(values, self.cfg.jitter);
        rep.row(format!("{label}: monotone trend"), monotone as u8 as f64, Check::Near { target: 1.0, tol: 0.0 });
        rep.row(format!("{label}: final / initial"), ratio, Check::Below { bound: fraction });
    }
}

pub fn verify_lemma(id: LemmaId, v: &Verifier) -> LemmaReport {
    let start = Instant::now();
    let out = match id {
        LemmaId::Constants => constants(v),
        LemmaId::Bubble => bubble(v),
        LemmaId::Identities => identities(v),
        LemmaId::Threshold => threshold(v),
        LemmaId::Vanishing => vanishing(v),
        LemmaId::ProjectionOrder => projection_order(v),
        LemmaId::GroundState => ground_state(v),
        LemmaId::Pohozaev => pohozaev(v),
        LemmaId::EnergyLimit => energy_limit(v),
        LemmaId::Splitting => splitting(v),
        LemmaId::OverlapLimits => overlap_limits(v),
        LemmaId::Barycenter => barycenter_check(v),
        LemmaId::ProjectionLimits => projection_limits(v),
        LemmaId::Admissibility => admissibility(v),
        LemmaId::Region => region(v),
        LemmaId::Homotopy => v.scan().map(|s| homotopy_boundary_check(s, &homotopy_times(v.cfg.scan.s_samples))),
        LemmaId::LevelBound => level_bound(v),
    };
    let mut rep = match out {
        Ok(r) => r,
        Err(e) => LemmaReport::failed(id.as_str(), id.title(), &e),
    };
    rep.runtime_s = start.elapsed().as_secs_f64();
    rep
}

fn report(id: LemmaId) -> LemmaReport {
    LemmaReport::new(id.as_str(), id.title())
}

fn gaussian(grid: &Arc<RadialGrid>, amp: f64, width: f64) -> RadialFn {
    RadialFn::from_fn(grid, |r| amp * (-r * r / (2.0 * width * width)).exp(), Tail::none())
}

fn random_triple(rng: &mut ChaCha8Rng) -> (f64, f64, f64) {
    let mu1 = rng.random_range(0.2..5.0);
    let mu2 = rng.random_range(0.2..5.0);
    let beta = f64::max(mu1, mu2) + rng.random_range(0.05..5.0);
    (mu1, mu2, beta)
}

fn constants(v: &Verifier) -> Result<LemmaReport> {
    let c = &v.constants;
    let mut rep = report(LemmaId::Constants);
    let shl_sq = c.sobolev_hl_sq();
    rep.row("S_HL² against S² / C(N,4)", shl_sq, Check::Relative { target: c.sobolev * c.sobolev / c.hls, tol: 1e-12 });
    let u = bubble_profile(&v.grid, c.bubble_c, 1.0);
    let kinetic = dirichlet_seminorm(&u)?;
    let nonlocal = double_energy(&u.square(), &u.square(), CRITICAL_ALPHA)?;
    rep.row("|grad U|² against S_HL²", kinetic, Check::Relative { target: shl_sq, tol: v.tol(1e-3) });
    rep.row("D(U², U²) against S_HL²", nonlocal, Check::Relative { target: shl_sq, tol: v.tol(1e-3) });
    rep.row("discrete Sobolev quotient against S", c.sobolev_rayleigh, Check::Relative { target: c.sobolev, tol: v.tol(1e-3) });
    let mut t = Table::new("constants", &["hls", "sobolev", "sobolev_hl", "bubble_c", "omega", "sobolev_rayleigh", "kinetic", "nonlocal"]);
    t.push(vec![c.hls, c.sobolev, c.sobolev_hl, c.bubble_c, c.omega, c.sobolev_rayleigh, kinetic, nonlocal]);
    rep.tables.push(t);
    Ok(rep.finish())
}

fn bubble(v: &Verifier) -> Result<LemmaReport> {
    let mut rep = report(LemmaId::Bubble);
    let tests = default_test_set(v.prob.dim)?;
    let u = bubble_profile(&v.grid, v.constants.bubble_c, 1.0);
    let res = scalar_weak_residual(&u, 1.0, 0.0, &tests)?;
    let control = scalar_weak_residual(&u.scale(2.0), 1.0, 0.0, &tests)?;
    rep.row("weak residual of U", res, Check::Below { bound: v.tol(1e-3) });
    rep.row("weak residual of 2U (negative control)", control, Check::Above { bound: 0.1 });
    Ok(rep.finish())
}

fn identities(v: &Verifier) -> Result<LemmaReport> {
    let mut rep = report(LemmaId::Identities);
    let mut rng = ChaCha8Rng::seed_from_u64(v.cfg.seed);
    let mut t = Table::new("triples", &["mu1", "mu2", "beta", "k1", "k2", "identity_error", "quotient_error", "brute_error"]);
    let (mut id_err, mut q_err, mut b_err) = (0f64, 0f64, 0f64);
    for _ in 0..v.cfg.random_triples_identity {
        let (mu1, mu2, beta) = random_triple(&mut rng);
        let cc = coupling_constants(mu1, mu2, beta, v.prob.dim)?;
        let ksum = cc.k1 + cc.k2;
        let e1 = ((mu1 * cc.k1 * cc.k1 + mu2 * cc.k2 * cc.k2 + 2.0 * beta * cc.k1 * cc.k2) - ksum).abs() / ksum;
        let (_, q) = quotient_infimum(mu1, mu2, beta)?;
        let (_, qb) = quotient_infimum_brute(mu1, mu2, beta);
        let e2 = (q - ksum).abs() / ksum;
        let e3 = (q - qb).abs() / ksum;
        id_err = id_err.max(e1);
        q_err = q_err.max(e2);
        b_err = b_err.max(e3);
        t.push(vec![mu1, mu2, beta, cc.k1, cc.k2, e1, e2, e3]);
    }
    rep.row("max relative error of mu1 k1² + mu2 k2² + 2 beta k1 k2 = k1 + k2", id_err, Check::Below { bound: 1e-12 });
    rep.row("max relative gap between the quotient infimum and k1 + k2", q_err, Check::Below { bound: 1e-12 });
    rep.row("max relative gap between closed form and brute force", b_err, Check::Below { bound: 1e-10 });
    rep.tables.push(t);
    Ok(rep.finish())
}

fn threshold(v: &Verifier) -> Result<LemmaReport> {
    let mut rep = report(LemmaId::Threshold);
    let mut rng = ChaCha8Rng::seed_from_u64(v.cfg.seed.wrapping_add(1));
    let mut triples = vec![(v.prob.mu1, v.prob.mu2, v.prob.beta)];
    triples.extend((0..v.cfg.random_triples_threshold).map(|_| random_triple(&mut rng)));
    let mut t = Table::new("levels", &["mu1", "mu2", "beta", "c_inf", "semi_trivial_min", "gap", "pair_energy", "energy_error"]);
    let (mut min_gap, mut max_err) = (f64::INFINITY, 0f64);
    for (mu1, mu2, beta) in triples {
        let cc = coupling_constants(mu1, mu2, beta, v.prob.dim)?;
        let gp = ground_pair(&v.grid, 1.0, &cc)?;
        let e = energy_i(&gp, &Problem::limit(&cc))?.total;
        let err = (e / cc.c_inf - 1.0).abs();
        let gap = cc.threshold_gap() / cc.c_inf;
        min_gap = min_gap.min(gap);
        max_err = max_err.max(err);
        t.push(vec![mu1, mu2, beta, cc.c_inf, cc.m1_inf.min(cc.m2_inf), gap, e, err]);
    }
    rep.row("min relative gap min{S_HL²/(4 mu_j)} - c_inf", min_gap, Check::Above { bound: 0.0 });
    rep.row("max relative error of I_inf at the ground pair against (k1 + k2) S_HL² / 4", max_err, Check::Below { bound: v.tol(1e-3) });
    rep.tables.push(t);
    Ok(rep.finish())
}

const SHRINKING: [f64; 4] = [1.0, 0.3, 0.1, 0.03];

fn vanishing(v: &Verifier) -> Result<LemmaReport> {
    let mut rep = report(LemmaId::Vanishing);
    let lam = v.cfg.lambda_probe;
    let prob = v.prob.with_lambda(lam, lam);
    let bare = Problem::new(v.prob.dim, v.prob.mu1, v.prob.mu2, v.prob.beta, lam, lam, Potential::Zero, Potential::Zero)?;
    let free = bare.without_lambda();
    let mut law_err = 0f64;
    let mut free_err = 0f64;
    for j in [1usize, 2] {
        let mu = if j == 1 { prob.mu1 } else { prob.mu2 };
        let target = v.cc.shl_sq / (4.0 * mu);
        let rows = vanishing_energy_limit(&prob, j, &SHRINKING)?;
        let masses: Vec<f64> = rows.iter().map(|r| r.potential_mass + r.lambda_mass).collect();
        v.trend_rows(&mut rep, &format!("component {j}, int (V + lambda) Phi²"), &masses, v.cfg.limit_fraction);
        let last = rows.last().map(|r| r.energy).unwrap_or(f64::NAN);
        rep.row(format!("component {j}, constrained energy at the smallest dilation"), last, Check::Relative { target, tol: v.tol(1e-3) });
        let mut t = Table::new(&format!("component{j}"), &["delta", "potential_mass", "lambda_mass", "t", "energy"]);
        for r in &rows {
            t.push(vec![r.delta, r.potential_mass, r.lambda_mass, r.t, r.energy]);
        }
        rep.tables.push(t);
        for r in vanishing_energy_limit(&bare, j, &SHRINKING)? {
            law_err = law_err.max((r.lambda_mass / r.lambda_law - 1.0).abs());
        }
        for r in vanishing_energy_limit(&free, j, &SHRINKING)? {
            free_err = free_err.max((r.energy / target - 1.0).abs());
        }
    }
    rep.row("max relative deviation from lambda delta² |U|² / mu", law_err, Check::Below { bound: v.tol(1e-6) });
    rep.row("max relative deviation of the free energy from S_HL² / (4 mu_j)", free_err, Check::Below { bound: v.tol(1e-3) });
    Ok(rep.finish())
}

fn random_pair(grid: &Arc<RadialGrid>, rng: &mut ChaCha8Rng) -> Result<Pair> {
    let mut comp = || {
        let (a1, w1) = (rng.random_range(0.1..2.0), rng.random_range(0.3..3.0));
        let (a2, w2) = (rng.random_range(0.1..2.0), rng.random_range(0.3..3.0));
        gaussian(grid, a1, w1).add(&gaussian(grid, a2, w2))
    };
    let u = comp()?;
    let v = comp()?;
    Pair::new(u, v)
}

fn projection_order(v: &Verifier) -> Result<LemmaReport> {
    let mut rep = report(LemmaId::ProjectionOrder);
    let mut rng = ChaCha8Rng::seed_from_u64(v.cfg.seed.wrapping_add(2));
    let limit = Problem::limit(&v.cc);
    let mut t = Table::new("pairs", &["v0_1", "v0_2", "lambda1", "lambda2", "tau", "t", "margin"]);
    let (mut violations, mut min_margin) = (0usize, f64::INFINITY);
    for _ in 0..v.cfg.random_pairs {
        let (a, b) = (rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
        let s = rng.random_range(1.5..3.0);
        let (l1, l2) = (rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
        let prob =
            Problem::new(v.prob.dim, v.prob.mu1, v.prob.mu2, v.prob.beta, l1, l2, Potential::rational(a, s)?, Potential::rational(b, s)?)?;
        let pair = random_pair(&v.grid, &mut rng)?;
        let e = energy_i(&pair, &prob)?;
        let e_inf = energy_i(&pair, &limit)?;
        let t_n = (e.quadratic() / e.nonlocal()).sqrt();
        let tau = (e_inf.quadratic() / e_inf.nonlocal()).sqrt();
        if tau > t_n {
            violations += 1;
        }
        min_margin = min_margin.min(t_n - tau);
        t.push(vec![a, b, l1, l2, tau, t_n, t_n - tau]);
    }
    rep.row("pairs with tau > t", violations as f64, Check::Near { target: 0.0, tol: 0.0 });
    rep.row("min t - tau", min_margin, Check::Info);
    rep.tables.push(t);
    Ok(rep.finish())
}

fn ground_state(v: &Verifier) -> Result<LemmaReport> {
    let mut rep = report(LemmaId::GroundState);
    let d = v.flow()?;
    let limit = Problem::limit(&v.cc);
    rep.row("converged", (d.verdict == Verdict::Converged) as u8 as f64, Check::Near { target: 1.0, tol: 0.0 });
    rep.row("iterations", d.iterations as f64, Check::Below { bound: 5000.5 });
    rep.row("weak residual", d.residual, Check::Below { bound: v.tol(1e-3) });
    rep.row("energy against c_inf", d.energy, Check::Relative { target: v.cc.c_inf, tol: v.tol(1e-3) });
    let bulk = d.fit.bulk_ratio_error.unwrap_or(f64::INFINITY);
    rep.row("max |v/u - sqrt(k2/k1)| on the bulk", bulk, Check::Below { bound: v.tol(1e-3) });
    let poh = pohozaev_residual(&d.final_pair, &limit)?;
    rep.row("dilation identity gap", poh.identity_gap, Check::Below { bound: v.tol(1e-3) });
    rep.row("fitted dilation", d.fit.delta_hat, Check::Info);
    rep.row("shape error against the fitted bubble", d.fit.shape_error, Check::Info);
    let mut t = Table::new("trace", &["iter", "energy", "nehari_defect", "residual", "step", "clamped", "recentered"]);
    for r in &d.trace {
        t.push(vec![
            r.iter as f64,
            r.energy,
            r.nehari_defect,
            r.residual.unwrap_or(f64::NAN),
            r.step,
            r.clamped,
            r.recentered as u8 as f64,
        ]);
    }
    rep.tables.push(t);
    Ok(rep.finish())
}

fn pohozaev(v: &Verifier) -> Result<LemmaReport> {
    let mut rep = report(LemmaId::Pohozaev);
    let limit = Problem::limit(&v.cc);
    let gp = ground_pair(&v.grid, 1.0, &v.cc)?;
    let exact = pohozaev_residual(&gp, &limit)?;
    rep.row("identity gap at the exact ground pair", exact.identity_gap, Check::Below { bound: v.tol(1e-3) });
    let lam = v.cfg.lambda_probe;
    let with_lambda = pohozaev_residual(&gp, &limit.with_lambda(lam, lam))?;
    rep.row("lambda mass entering the identity for lambda > 0", with_lambda.lambda_mass, Check::Above { bound: 0.0 });
    rep.row("identity gap of the ground pair against the lambda system", with_lambda.identity_gap, Check::Info);
    rep.note("with lambda > 0 the identity forces the lambda mass to vanish, so only the trivial solution survives");
    Ok(rep.finish())
}

fn energy_limit(v: &Verifier) -> Result<LemmaReport> {
    let mut rep = report(LemmaId::EnergyLimit);
    let lam = v.cfg.lambda_probe;
    let prob = v.prob.with_lambda(lam, lam);
    let spec = v.cfg.flow.grid;
    let rows: Vec<(f64, f64, f64)> = SHRINKING
        .par_iter()
        .map(|&delta| {
            let grid = make_grid(prob.dim, spec.nodes, spec.r_max * delta.max(1.0), spec.stretch)?;
            let pair = ground_pair(&grid, delta, &v.cc)?;
            let (t, q) = nehari_project(&pair, &prob)?;
            Ok((delta, t, energy_i(&q, &prob)?.total))
        })
        .collect::<Result<_>>()?;
    let gaps: Vec<f64> = rows.iter().map(|r| r.2 / v.cc.c_inf - 1.0).collect();
    v.trend_rows(&mut rep, "I(t_n sqrt(k) U_n) / c_inf - 1", &gaps, v.cfg.limit_fraction);
    rep.row("final relative gap", gaps.last().copied().unwrap_or(f64::NAN).abs(), Check::Below { bound: v.tol(1e-3) });
    rep.row("min relative gap", gaps.iter().copied().fold(f64::INFINITY, f64::min), Check::Info);
    let mut t = Table::new("levels", &["delta", "t", "energy", "gap"]);
    for (r, g) in rows.iter().zip(&gaps) {
        t.push(vec![r.0, r.1, r.2, *g]);
    }
    rep.tables.push(t);
    Ok(rep.finish())
}

fn splitting(v: &Verifier) -> Result<LemmaReport> {
    let mut rep = report(LemmaId::Splitting);
    let g = &v.grid;
    let u0 = gaussian(g, 1.0, 1.0);
    let v0 = gaussian(g, 0.5, 2.0);
    let b = bubble_profile(g, v.constants.bubble_c, 1.0);
    let sigmas = [1.0, 0.3, 0.1];
    let rows = brezis_lieb_check(&u0, &v0, &b, &sigmas, &[0.0; 3])?;
    let selfs: Vec<f64> = rows.iter().map(|r| r.self_error).collect();
    let mixed: Vec<f64> = rows.iter().map(|r| r.mixed_error).collect();
    v.trend_rows(&mut rep, "self-term splitting error", &selfs, v.cfg.limit_fraction);
    v.trend_rows(&mut rep, "mixed-term splitting error", &mixed, v.cfg.limit_fraction);
    let fixed = brezis_lieb_check(&u0, &v0, &b, &[1.0; 4], &[0.0; 4])?;
    let spread = fixed.iter().map(|r| (r.self_error - fixed[0].self_error).abs()).fold(0.0, f64::max) / fixed[0].self_error;
    rep.row("stationary sequence: relative spread of the error", spread, Check::Below { bound: 1e-10 });
    let zero = RadialFn::zeros(g);
    let z = brezis_lieb_check(&zero, &zero, &b, &sigmas, &[0.0; 3])?;
    let zmax = z.iter().map(|r| r.self_error.max(r.mixed_error)).fold(0.0, f64::max);
    rep.row("zero background: largest error", zmax, Check::Near { target: 0.0, tol: 0.0 });
    let mut t = Table::new("splitting", &["sigma", "offset", "self_error", "mixed_error", "self_total"]);
    for r in &rows {
        t.push(vec![r.sigma, r.offset, r.self_error, r.mixed_error, r.self_total]);
    }
    rep.tables.push(t);
    Ok(rep.finish())
}

const SMALL_DELTAS: [f64; 4] = [0.3, 0.1, 0.03, 0.01];
/// Growing dilations in units of the trial core: a member only spreads once
/// `delta * delta_b` is large.
const LARGE_CORE_DILATIONS: [f64; 4] = [3.0, 10.0, 30.0, 100.0];
const FAR_OFFSETS: [f64; 4] = [3.0, 10.0, 30.0, 100.0];

fn limit_parameters(profile: &TrialProfile) -> [[f64; 4]; 3] {
    [SMALL_DELTAS, LARGE_CORE_DILATIONS.map(|k| k / profile.delta_b), FAR_OFFSETS]
}

/// Suprema of `f(delta, rho)` along the three limits: over offsets for
/// shrinking and growing dilations, and over dilations for growing offsets.
fn three_limits(v: &Verifier, params: &[[f64; 4]; 3], f: &(dyn Fn(f64, f64) -> Result<f64> + Sync)) -> Result<[Vec<f64>; 3]> {
    let rhos = &v.cfg.scan.probe_rho;
    let deltas = &v.cfg.scan.probe_delta;
    let sup_over = |pts: Vec<(f64, f64)>| -> Result<f64> {
        let vals: Vec<f64> = pts.par_iter().map(|&(d, r)| f(d, r)).collect::<Result<_>>()?;
        Ok(vals.into_iter().fold(0.0, f64::max))
    };
    let a = params[0].iter().map(|&d| sup_over(rhos.iter().map(|&r| (d, r)).collect())).collect::<Result<_>>()?;
    let b = params[1].iter().map(|&d| sup_over(rhos.iter().map(|&r| (d, r)).collect())).collect::<Result<_>>()?;
    let c = params[2].iter().map(|&r| sup_over(deltas.iter().map(|&d| (d, r)).collect())).collect::<Result<_>>()?;
    Ok([a, b, c])
}

fn limits_table(name: &str, params: &[[f64; 4]; 3], sups: &[Vec<f64>; 3]) -> Table {
    let mut t = Table::new(name, &["limit", "parameter", "sup"]);
    for (k, (vals, ps)) in sups.iter().zip(params).enumerate() {
        for (val, p) in vals.iter().zip(ps) {
            t.push(vec![k as f64, *p, *val]);
        }
    }
    t
}

const LIMIT_NAMES: [&str; 3] = ["delta -> 0", "delta -> inf", "|y| -> inf"];

fn overlap_limits(v: &Verifier) -> Result<LemmaReport> {
    let mut rep = report(LemmaId::OverlapLimits);
    let profile = v.profile()?;
    let params = limit_parameters(profile);
    for (j, pot) in [(1, &v.prob.v1), (2, &v.prob.v2)] {
        let f = |d: f64, r: f64| potential_overlap(pot, &trial_member(profile, d, r)?);
        let sups = three_limits(v, &params, &f)?;
        for (name, vals) in LIMIT_NAMES.iter().zip(&sups) {
            v.trend_rows(&mut rep, &format!("V{j}, sup int V theta², {name}"), vals, v.cfg.overlap_fraction);
        }
        rep.tables.push(limits_table(&format!("overlap_v{j}"), &params, &sups));
    }
    Ok(rep.finish())
}

fn projection_limits(v: &Verifier) -> Result<LemmaReport> {
    let mut rep = report(LemmaId::ProjectionLimits);
    let profile = v.profile()?;
    let f = |d: f64, r: f64| Ok((trial_projection_scalars(profile, d, r, &v.prob, &v.cc)?.t0 - 1.0).abs());
    let params = limit_parameters(profile);
    let sups = three_limits(v, &params, &f)?;
    for (name, vals) in LIMIT_NAMES.iter().zip(&sups) {
        v.trend_rows(&mut rep, &format!("sup |t0 - 1|, {name}"), vals, v.cfg.limit_fraction);
    }
    rep.tables.push(limits_table("t0", &params, &sups));
    Ok(rep.finish())
}

fn barycenter_check(v: &Verifier) -> Result<LemmaReport> {
    let mut rep = report(LemmaId::Barycenter);
    let profile = v.profile()?;
    let cc = &v.cc;
    let deltas = [0.01, 0.1, 1.0, 10.0, 100.0, 1000.0];
    let centered = deltas.iter().map(|&d| trial_barycenter(profile, d, 0.0).map(|b| b.xi.abs())).collect::<Result<Vec<_>>>()?;
    rep.row("max |xi| of centered members", centered.into_iter().fold(0.0, f64::max), Check::Near { target: 0.0, tol: 0.0 });

    let mut inv = 0f64;
    for (d, r) in [(0.1, 0.5), (1.0, 1.0), (10.0, 3.0), (100.0, 10.0)] {
        let m = trial_member(profile, d, r)?;
        let pair =
            OffsetPair::new(OffsetFn::new(m.profile.scale(cc.k1.sqrt()), d, r)?, OffsetFn::new(m.profile.scale(cc.k2.sqrt()), d, r)?)?;
        let b1 = barycenter(&pair, cc)?;
        let b2 = barycenter(&pair.scale(1.7), cc)?;
        inv = inv.max((b1.xi - b2.xi).abs()).max((b1.gamma - b2.gamma).abs());
    }
    rep.row("max change of (xi, gamma) under pair scaling", inv, Check::Below { bound: 1e-12 });

    let small =
        v.cfg.scan.probe_rho.par_iter().map(|&r| trial_barycenter(profile, 0.01, r).map(|b| b.gamma / 0.04)).collect::<Result<Vec<_>>>()?;
    rep.row("max gamma / (4 delta) at delta = 0.01", small.into_iter().fold(0.0, f64::max), Check::Below { bound: 1.0 });
    let shrink = SMALL_DELTAS.iter().map(|&d| trial_barycenter(profile, d, 0.0).map(|b| b.gamma)).collect::<Result<Vec<_>>>()?;
    v.trend_rows(&mut rep, "gamma of centered members, delta -> 0", &shrink, v.cfg.limit_fraction);

    let big = [0.0, 1.0, 2.0, 3.0]
        .par_iter()
        .map(|&r| trial_barycenter(profile, 1000.0, r).map(|b| (b.gamma - 1.0).abs()))
        .collect::<Result<Vec<_>>>()?;
    rep.row("max |gamma - 1| at delta = 1000, |y| <= 3", big.into_iter().fold(0.0, f64::max), Check::Below { bound: 0.05 });

    let rhos = [0.1, 0.5, 1.0, 3.0, 10.0];
    let grid: Vec<(f64, f64)> = deltas.iter().flat_map(|&d| rhos.iter().map(move |&r| (d, r))).collect();
    let signs = grid.par_iter().map(|&(d, r)| trial_barycenter(profile, d, r).map(|b| b.xi * r)).collect::<Result<Vec<_>>>()?;
    let mut t = Table::new("axis_sign", &["delta", "rho", "xi_dot_y"]);
    for ((d, r), s) in grid.iter().zip(&signs) {
        t.push(vec![*d, *r, *s]);
    }
    rep.row(
        format!("min <xi | y> over {} (delta, |y|) points", grid.len()),
        signs.into_iter().fold(f64::INFINITY, f64::min),
        Check::Above { bound: 0.0 },
    );
    rep.tables.push(t);
    Ok(rep.finish())
}

fn admissibility(v: &Verifier) -> Result<LemmaReport> {
    let mut rep = report(LemmaId::Admissibility);
    let adm = check_a3(&v.prob, &v.constants)?;
    let sel = v.cfg.convention;
    rep.row("|V1| in L^{N/2}", adm.norm_v1, Check::Info);
    rep.row("|V2| in L^{N/2}", adm.norm_v2, Check::Info);
    rep.row("V1 + V2 not identically zero", adm.nonzero_potential as u8 as f64, Check::Near { target: 1.0, tol: 0.0 });
    for (conv, c) in [(super::Convention::A3, &adm.a3), (super::Convention::C3, &adm.c3)] {
        let check = if conv == sel { Check::Above { bound: 0.0 } } else { Check::Info };
        rep.row(format!("{conv:?} left side"), c.left, Check::Info);
        rep.row(format!("{conv:?} margin"), c.margin, check);
    }
    let levels = choose_a_and_cbar(&v.prob, &v.constants, v.c_star_lower());
    let consistent = levels.is_ok() == (adm.check(sel).margin > 0.0);
    rep.row("level parameters exist iff the margin is positive", consistent as u8 as f64, Check::Near { target: 1.0, tol: 0.0 });
    let samples: Vec<f64> = (0..=200).map(|i| level_function(i as f64 / 200.0, adm.gain, v.constants.sobolev_hl)).collect();
    let increasing = samples.windows(2).all(|w| w[1] > w[0]);
    rep.row("f increasing on [0, 1] (sampled)", increasing as u8 as f64, Check::Near { target: 1.0, tol: 0.0 });
    rep.row("f(1)", samples[200], Check::Above { bound: 0.0 });
    if let Ok(l) = levels {
        rep.row("a", l.a, Check::Info);
        rep.row("cbar / c_inf", l.cbar / l.c_inf, Check::Info);
        rep.row("c* proxy / c_inf", l.c_star_lower / l.c_inf, Check::Info);
        rep.row("threshold - 2^{1-a} c_inf", l.threshold - l.chain_left, Check::Above { bound: -1e-12 * l.threshold });
        if l.near_boundary {
            rep.note("a lies at the boundary 1: the margin is numerically zero");
        }
    }
    Ok(rep.finish())
}

fn region(v: &Verifier) -> Result<LemmaReport> {
    let mut rep = report(LemmaId::Region);
    let s = v.scan()?;
    rep.row("region found", s.found as u8 as f64, Check::Near { target: 1.0, tol: 0.0 });
    rep.row("1/2 - max gamma on the lower piece", s.lower_margin, Check::Above { bound: 0.0 });
    rep.row("min gamma - 1/2 on the upper piece", s.upper_margin, Check::Above { bound: 0.0 });
    rep.row("cbar - sup of the energy over the boundary", s.boundary_margin, Check::Above { bound: 0.0 });
    rep.row("delta1", s.region.delta1, Check::Info);
    rep.row("delta2", s.region.delta2, Check::Info);
    rep.row("rbar", s.region.rbar, Check::Info);
    rep.row("Sigma / c_inf", s.sigma / s.c_inf, Check::Info);
    rep.row("cbar / c_inf", s.cbar / s.c_inf, Check::Info);
    if let Some(f) = &s.failure {
        rep.note(format!("search failed: {f}"));
    }
    rep.tables.push(s.table());
    Ok(rep.finish())
}

fn level_bound(v: &Verifier) -> Result<LemmaReport> {
    let mut rep = report(LemmaId::LevelBound);
    let s = v.scan()?;
    let adm = check_a3(&v.prob, &v.constants)?;
    rep.row("admissibility margin (selected convention)", adm.check(v.cfg.convention).margin, Check::Above { bound: 0.0 });
    rep.row("K = sup of the energy over the region", s.k_sup, Check::Info);
    rep.row("threshold - K", s.k_margin, Check::Above { bound: 0.0 });
    if let Some(bound) = s.projection_bound {
        rep.row("(1 + L/S) - max t0²", bound - s.max_t0_sq, Check::Above { bound: -1e-12 });
        rep.row("threshold - (1 + L/S)² cbar", s.threshold - bound * bound * s.cbar, Check::Above { bound: -1e-12 * s.threshold });
    }
    rep.row("lambda sweep feasibility is monotone", s.lambda_monotone as u8 as f64, Check::Near { target: 1.0, tol: 0.0 });
    rep.row("largest swept lambda with the boundary bound", s.lambda_star_proxy.unwrap_or(f64::NAN), Check::Info);
    rep.row("largest swept lambda with both bounds", s.lambda_2star_proxy.unwrap_or(f64::NAN), Check::Info);
    if v.prob.lambda() > 0.0 {
        rep.row("cbar - sup of the lambda energy over the boundary", s.cbar - s.k_tilde, Check::Info);
        rep.row("threshold - sup of the lambda energy over the region", s.threshold - s.s_tilde, Check::Info);
    }
    rep.tables.push(s.lambda_table());
    Ok(rep.finish())
}
