//! Search for the dilation/translation region, threshold bounds along the
//! trial family, and sampled boundary checks of the homotopy.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::admissibility::check_a3;
use super::report::{Check, LemmaReport, Table};
use crate::bubbles::{CouplingConstants, TrialProfile};
use crate::error::{Error, Result};
use crate::riesz::ConstantsTable;
use crate::variational::{trial_barycenter, trial_projection_scalars, Problem};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    /// Tried from largest to smallest.
    pub delta1_candidates: Vec<f64>,
    /// Tried from smallest to largest.
    pub delta2_candidates: Vec<f64>,
    /// Tried from smallest to largest.
    pub rbar_candidates: Vec<f64>,
    pub boundary_points: usize,
    pub interior_delta: usize,
    pub interior_rho: usize,
    /// Extra offsets probing the lower boundary for every translation.
    pub probe_rho: Vec<f64>,
    /// Dilations probing the energy at `|y| = rbar` for every dilation.
    pub probe_delta: Vec<f64>,
    pub lambda_sweep: Vec<f64>,
    pub s_samples: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            delta1_candidates: vec![0.3, 0.1, 0.03, 0.01],
            delta2_candidates: vec![10.0, 30.0, 100.0, 300.0, 1000.0, 3000.0],
            rbar_candidates: vec![1.0, 2.0, 3.0, 5.0, 10.0, 20.0],
            boundary_points: 32,
            interior_delta: 12,
            interior_rho: 6,
            probe_rho: vec![0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 30.0, 100.0, 1000.0],
            probe_delta: vec![1e-3, 1e-2, 0.1, 1.0, 10.0, 100.0, 1e3, 1e4],
            lambda_sweep: vec![0.3, 0.1, 0.03, 0.01, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7],
            s_samples: 9,
        }
    }
}

impl ScanConfig {
    fn validate(&self) -> Result<()> {
        if self.boundary_points < 2 || self.interior_delta < 2 || self.interior_rho < 1 || self.s_samples < 2 {
            return Err(Error::Config("scan lattice too coarse".into()));
        }
        if self.delta1_candidates.is_empty() || self.delta2_candidates.is_empty() || self.rbar_candidates.is_empty() {
            return Err(Error::Config("scan candidate lists must be nonempty".into()));
        }
        let bad = |v: &[f64]| v.iter().any(|x| !(x.is_finite() && *x > 0.0));
        if bad(&self.delta1_candidates) || bad(&self.delta2_candidates) || bad(&self.rbar_candidates) || bad(&self.probe_delta) {
            return Err(Error::Config("scan candidates must be positive".into()));
        }
        if self.lambda_sweep.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return Err(Error::Config("lambda sweep values must be nonnegative".into()));
        }
        Ok(())
    }
}

/// `H = {delta in [delta1, delta2], |y| < rbar}`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct Region {
    pub delta1: f64,
    pub delta2: f64,
    pub rbar: f64,
}

#[derive(Clone, Copy, Debug, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Piece {
    /// `delta = delta1`, `|y| <= rbar`.
    Lower,
    /// `delta = delta2`, `|y| < rbar`.
    Upper,
    /// `|y| = rbar`, `delta1 <= delta <= delta2`.
    Side,
    Interior,
    /// Lower-boundary dilation at an offset outside the region.
    Probe,
}

impl Piece {
    fn code(self) -> f64 {
        match self {
            Piece::Lower => 1.0,
            Piece::Upper => 2.0,
            Piece::Side => 3.0,
            Piece::Interior => 0.0,
            Piece::Probe => -1.0,
        }
    }

    fn on_boundary(self) -> bool {
        matches!(self, Piece::Lower | Piece::Upper | Piece::Side)
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Sample {
    pub piece: Piece,
    pub delta: f64,
    pub rho: f64,
    /// Axial component of the barycenter.
    pub xi: f64,
    pub gamma: f64,
    pub t0: f64,
    pub t_lam: f64,
    /// Energy of the pair projected without lambdas.
    pub energy0: f64,
    /// Energy of the pair projected with the problem's lambdas.
    pub energy: f64,
    /// `(k1 + k2) delta² int theta²` over `(k1 + k2) D(theta², theta²)`.
    pub lambda_slope: f64,
}

impl Sample {
    fn energy_at(&self, lambda: f64, sigma: f64) -> f64 {
        let t2 = self.t0 * self.t0 + lambda * self.lambda_slope;
        t2 * t2 * sigma
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct LambdaRow {
    pub lambda: f64,
    /// Supremum over the boundary with `lambda1 = lambda2 = lambda`.
    pub k_tilde: f64,
    /// Supremum over the closed region.
    pub s_tilde: f64,
    pub boundary_ok: bool,
    pub level_ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct RegionScan {
    pub region: Region,
    pub found: bool,
    /// First violated constraint when `found` is false.
    pub failure: Option<String>,
    pub samples: Vec<Sample>,
    pub sigma: f64,
    pub c_inf: f64,
    pub cbar: f64,
    pub c_star_lower: f64,
    /// `1/2 - max gamma` over the lower piece and probes.
    pub lower_margin: f64,
    /// `min gamma - 1/2` over the upper piece.
    pub upper_margin: f64,
    /// `sup` of the lambda-free energy over the boundary.
    pub boundary_sup: f64,
    /// `cbar - boundary_sup`.
    pub boundary_margin: f64,
    /// `sup` of the lambda-free energy over the closed region.
    pub k_sup: f64,
    /// `min{S_HL²/(4 mu1), S_HL²/(4 mu2), 2 c_inf}`.
    pub threshold: f64,
    /// `threshold - k_sup`.
    pub k_margin: f64,
    /// Same suprema with the problem's lambdas.
    pub k_tilde: f64,
    pub s_tilde: f64,
    /// `1 + L / S` with `L` the weighted potential norm, if admissible.
    pub projection_bound: Option<f64>,
    /// `max t0²` over the samples.
    pub max_t0_sq: f64,
    pub lambda_rows: Vec<LambdaRow>,
    /// Largest swept lambda keeping the boundary bound.
    pub lambda_star_proxy: Option<f64>,
    /// Largest swept lambda also keeping the threshold bound.
    pub lambda_2star_proxy: Option<f64>,
    /// Feasibility never returns once lost as lambda grows.
    pub lambda_monotone: bool,
}

impl RegionScan {
    pub fn ok(&self) -> bool {
        self.found && self.lower_margin > 0.0 && self.upper_margin > 0.0 && self.boundary_margin > 0.0
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new("samples", &["piece", "delta", "rho", "xi", "gamma", "t0", "t_lam", "energy0", "energy"]);
        for s in &self.samples {
            t.push(vec![s.piece.code(), s.delta, s.rho, s.xi, s.gamma, s.t0, s.t_lam, s.energy0, s.energy]);
        }
        t
    }

    pub fn lambda_table(&self) -> Table {
        let mut t = Table::new("lambda_sweep", &["lambda", "k_tilde", "s_tilde", "boundary_ok", "level_ok"]);
        for r in &self.lambda_rows {
            t.push(vec![r.lambda, r.k_tilde, r.s_tilde, r.boundary_ok as u8 as f64, r.level_ok as u8 as f64]);
        }
        t
    }
}

struct Sampler<'a> {
    profile: &'a TrialProfile,
    prob: &'a Problem,
    cc: CouplingConstants,
}

impl Sampler<'_> {
    fn sample(&self, piece: Piece, delta: f64, rho: f64) -> Result<Sample> {
        let b = trial_barycenter(self.profile, delta, rho)?;
        let p = trial_projection_scalars(self.profile, delta, rho, self.prob, &self.cc)?;
        let lambda_slope = delta * delta * self.profile.l2_sq / self.profile.nonlocal;
        Ok(Sample {
            piece,
            delta,
            rho,
            xi: b.xi,
            gamma: b.gamma,
            t0: p.t0,
            t_lam: p.t_lam,
            energy0: p.energy0,
            energy: p.energy,
            lambda_slope,
        })
    }

    fn many(&self, pts: &[(Piece, f64, f64)]) -> Result<Vec<Sample>> {
        pts.par_iter().map(|&(p, d, r)| self.sample(p, d, r)).collect()
    }
}

fn geomspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a * (b / a).powf(i as f64 / (n - 1) as f64)).collect()
}

fn lattice(region: &Region, cfg: &ScanConfig) -> Vec<(Piece, f64, f64)> {
    let n = cfg.boundary_points;
    let mut pts = Vec::new();
    for i in 0..n {
        pts.push((Piece::Lower, region.delta1, region.rbar * i as f64 / (n - 1) as f64));
    }
    for &rho in &cfg.probe_rho {
        if rho > region.rbar {
            pts.push((Piece::Probe, region.delta1, rho));
        }
    }
    for i in 0..n {
        pts.push((Piece::Upper, region.delta2, region.rbar * i as f64 / n as f64));
    }
    for d in geomspace(region.delta1, region.delta2, n) {
        pts.push((Piece::Side, d, region.rbar));
    }
    let ds = geomspace(region.delta1, region.delta2, cfg.interior_delta + 2);
    for &d in &ds[1..ds.len() - 1] {
        for j in 0..cfg.interior_rho {
            pts.push((Piece::Interior, d, region.rbar * j as f64 / cfg.interior_rho as f64));
        }
    }
    pts
}

/// Samples the trial family over `region` and evaluates every bound.
pub fn evaluate_region(
    profile: &TrialProfile,
    prob: &Problem,
    constants: &ConstantsTable,
    region: Region,
    c_star_lower: f64,
    cfg: &ScanConfig,
) -> Result<RegionScan> {
    cfg.validate()?;
    if !(region.delta1 > 0.0 && region.delta1 < 0.5 && region.delta2 > 0.5 && region.rbar > 0.0) {
        return Err(Error::param(format!("region {region:?} needs 0 < delta1 < 1/2 < delta2 and rbar > 0")));
    }
    let cc = prob.coupling()?;
    let sampler = Sampler { profile, prob, cc };
    let samples = sampler.many(&lattice(&region, cfg))?;
    let sigma = profile.sigma;
    let fold_max = |it: &mut dyn Iterator<Item = f64>| it.fold(f64::NEG_INFINITY, f64::max);
    let lower_max = fold_max(&mut samples.iter().filter(|s| matches!(s.piece, Piece::Lower | Piece::Probe)).map(|s| s.gamma));
    let upper_min = -fold_max(&mut samples.iter().filter(|s| s.piece == Piece::Upper).map(|s| -s.gamma));
    let boundary_sup = fold_max(&mut samples.iter().filter(|s| s.piece.on_boundary()).map(|s| s.energy0));
    let closed = |s: &&Sample| s.piece != Piece::Probe;
    let k_sup = fold_max(&mut samples.iter().filter(closed).map(|s| s.energy0));
    let k_tilde = fold_max(&mut samples.iter().filter(|s| s.piece.on_boundary()).map(|s| s.energy));
    let s_tilde = fold_max(&mut samples.iter().filter(closed).map(|s| s.energy));
    let threshold = (cc.shl_sq / (4.0 * cc.mu1.max(cc.mu2))).min(2.0 * cc.c_inf);
    let max_t0_sq = fold_max(&mut samples.iter().map(|s| s.t0 * s.t0));
    let adm = check_a3(prob, constants)?;
    let projection_bound = if adm.a3.satisfied || (prob.v1.is_zero() && prob.v2.is_zero()) {
        let l = (cc.k1 * adm.norm_v1 + cc.k2 * adm.norm_v2) / ((cc.k1 + cc.k2) * constants.sobolev);
        Some(1.0 + l)
    } else {
        None
    };
    let cbar = profile.cbar;
    let lambda_rows: Vec<LambdaRow> = cfg
        .lambda_sweep
        .iter()
        .map(|&lambda| {
            let e = |s: &Sample| s.energy_at(lambda, sigma);
            let k = fold_max(&mut samples.iter().filter(|s| s.piece.on_boundary()).map(e));
            let st = fold_max(&mut samples.iter().filter(closed).map(e));
            LambdaRow { lambda, k_tilde: k, s_tilde: st, boundary_ok: k < cbar, level_ok: k < cbar && st < threshold }
        })
        .collect();
    let mut by_lambda = lambda_rows.clone();
    by_lambda.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    let lambda_monotone = by_lambda.windows(2).all(|w| w[0].level_ok || !w[1].level_ok)
        && by_lambda.windows(2).all(|w| w[0].boundary_ok || !w[1].boundary_ok);
    let best = |f: fn(&LambdaRow) -> bool| {
        by_lambda.iter().filter(|r| f(r)).map(|r| r.lambda).fold(None, |a: Option<f64>, l| Some(a.map_or(l, |x| x.max(l))))
    };
    let lambda_star_proxy = best(|r| r.boundary_ok);
    let lambda_2star_proxy = best(|r| r.level_ok);
    let lower_margin = 0.5 - lower_max;
    let upper_margin = upper_min - 0.5;
    let boundary_margin = cbar - boundary_sup;
    let failure = if lower_margin <= 0.0 {
        Some(format!("gamma reaches {lower_max:.4} on the lower piece"))
    } else if upper_margin <= 0.0 {
        Some(format!("gamma drops to {upper_min:.4} on the upper piece"))
    } else if boundary_margin <= 0.0 {
        Some(format!("boundary energy {boundary_sup:.6} is not below cbar = {cbar:.6}"))
    } else {
        None
    };
    Ok(RegionScan {
        region,
        found: failure.is_none(),
        failure,
        samples,
        sigma,
        c_inf: cc.c_inf,
        cbar,
        c_star_lower,
        lower_margin,
        upper_margin,
        boundary_sup,
        boundary_margin,
        k_sup,
        threshold,
        k_margin: threshold - k_sup,
        k_tilde,
        s_tilde,
        projection_bound,
        max_t0_sq,
        lambda_rows,
        lambda_star_proxy,
        lambda_2star_proxy,
        lambda_monotone,
    })
}

/// Picks the largest admissible `delta1`, then for increasing `rbar` the
/// smallest admissible `delta2`, and evaluates the resulting region.
pub fn scan_region(
    profile: &TrialProfile,
    prob: &Problem,
    constants: &ConstantsTable,
    c_star_lower: f64,
    cfg: &ScanConfig,
) -> Result<RegionScan> {
    cfg.validate()?;
    let cc = prob.coupling()?;
    let sampler = Sampler { profile, prob, cc };
    let cbar = profile.cbar;
    let n = cfg.boundary_points;

    let mut d1s: Vec<f64> = cfg.delta1_candidates.iter().copied().filter(|d| *d < 0.5).collect();
    d1s.sort_by(|a, b| b.total_cmp(a));
    let max_r = cfg.rbar_candidates.iter().copied().fold(0.0, f64::max);
    let mut delta1 = None;
    for &d in &d1s {
        let mut pts: Vec<(Piece, f64, f64)> = (0..n).map(|i| (Piece::Lower, d, max_r * i as f64 / (n - 1) as f64)).collect();
        pts.extend(cfg.probe_rho.iter().map(|&r| (Piece::Probe, d, r)));
        let s = sampler.many(&pts)?;
        if s.iter().all(|s| s.gamma < 0.5 && s.energy0 < cbar) {
            delta1 = Some(d);
            break;
        }
    }

    let mut d2s: Vec<f64> = cfg.delta2_candidates.iter().copied().filter(|d| *d > 0.5).collect();
    d2s.sort_by(|a, b| a.total_cmp(b));
    let mut rbars = cfg.rbar_candidates.clone();
    rbars.sort_by(|a, b| a.total_cmp(b));
    let fallback = Region {
        delta1: delta1.unwrap_or(d1s.last().copied().unwrap_or(0.25)),
        delta2: d2s.last().copied().unwrap_or(1.0),
        rbar: rbars[0],
    };
    let Some(delta1) = delta1 else {
        let mut scan = evaluate_region(profile, prob, constants, fallback, c_star_lower, cfg)?;
        scan.found = false;
        scan.failure = Some("no lower dilation candidate keeps gamma < 1/2 and the energy below cbar".into());
        return Ok(scan);
    };

    let mut failure = String::from("no radius candidate keeps the side energy below cbar");
    for &rbar in &rbars {
        let side: Vec<(Piece, f64, f64)> = cfg.probe_delta.iter().map(|&d| (Piece::Side, d, rbar)).collect();
        if !sampler.many(&side)?.iter().all(|s| s.energy0 < cbar) {
            continue;
        }
        failure = format!("no upper dilation candidate keeps gamma > 1/2 for |y| < {rbar}");
        for &d2 in &d2s {
            let pts: Vec<(Piece, f64, f64)> = (0..n).map(|i| (Piece::Upper, d2, rbar * i as f64 / n as f64)).collect();
            let s = sampler.many(&pts)?;
            if s.iter().all(|s| s.gamma > 0.5 && s.energy0 < cbar) {
                let scan = evaluate_region(profile, prob, constants, Region { delta1, delta2: d2, rbar }, c_star_lower, cfg)?;
                if scan.found {
                    return Ok(scan);
                }
                failure = scan.failure.clone().unwrap_or_default();
            }
        }
    }
    let mut scan = evaluate_region(profile, prob, constants, Region { delta1, ..fallback }, c_star_lower, cfg)?;
    scan.found = false;
    scan.failure = Some(failure);
    Ok(scan)
}

/// Samples `T(delta, y, s) = ((1-s) delta + s gamma, (1-s) y + s xi)` on the
/// three boundary pieces and checks that it avoids `(1/2, 0)`.
pub fn homotopy_boundary_check(scan: &RegionScan, s_samples: &[f64]) -> LemmaReport {
    let mut rep = LemmaReport::new("homotopy", "sampled non-vanishing of the boundary homotopy");
    if s_samples.is_empty() || s_samples.iter().any(|s| !(0.0..=1.0).contains(s)) {
        rep.error = Some("homotopy times must lie in [0, 1]".into());
        return rep.finish();
    }
    let rbar = scan.region.rbar;
    let mut table = Table::new("homotopy", &["piece", "delta", "rho", "s", "first", "second", "clearance", "distance"]);
    let mut worst = [f64::INFINITY; 3];
    let mut offending: Vec<String> = Vec::new();
    let mut identity_distance = f64::INFINITY;
    let mut min_distance = f64::INFINITY;
    for smp in scan.samples.iter().filter(|s| s.piece.on_boundary()) {
        for &s in s_samples {
            let first = (1.0 - s) * smp.delta + s * smp.gamma;
            let second = (1.0 - s) * smp.rho + s * smp.xi;
            let (k, clearance) = match smp.piece {
                Piece::Lower => (0, 0.5 - first),
                Piece::Upper => (1, first - 0.5),
                _ => (2, (1.0 - s) * rbar * rbar + s * smp.xi * rbar),
            };
            let distance = ((first - 0.5).powi(2) + second * second).sqrt();
            if s == 0.0 {
                identity_distance = identity_distance.min(distance);
            }
            min_distance = min_distance.min(distance);
            worst[k] = worst[k].min(clearance);
            if clearance <= 0.0 && offending.len() < 10 {
                offending.push(format!("delta = {:.6}, |y| = {:.6}, s = {s:.4}: clearance {clearance:.3e}", smp.delta, smp.rho));
            }
            table.push(vec![smp.piece.code(), smp.delta, smp.rho, s, first, second, clearance, distance]);
        }
    }
    let names = ["lower piece: 1/2 - first component", "upper piece: first component - 1/2", "side piece: <(1-s) y + s xi | y>"];
    for (name, w) in names.iter().zip(worst) {
        rep.row(format!("min clearance, {name}"), w, Check::Above { bound: 0.0 });
    }
    rep.row("min distance to (1/2, 0) over all samples", min_distance, Check::Info);
    rep.row("distance of the boundary to (1/2, 0) at s = 0", identity_distance, Check::Info);
    for o in offending {
        rep.note(format!("violation at {o}"));
    }
    rep.tables.push(table);
    let mut rep = rep.finish();
    if rep.passed() {
        rep.note("degree 1 is supported by sampled boundary non-vanishing; this is not a proof");
    }
    rep
}

pub fn homotopy_times(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64 / (n - 1).max(1) as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_covers_three_pieces() {
        let cfg = ScanConfig::default();
        let region = Region { delta1: 0.1, delta2: 100.0, rbar: 2.0 };
        let pts = lattice(&region, &cfg);
        for piece in [Piece::Lower, Piece::Upper, Piece::Side] {
            assert_eq!(pts.iter().filter(|p| p.0 == piece).count(), cfg.boundary_points);
        }
        assert!(pts.iter().filter(|p| p.0 == Piece::Upper).all(|p| p.2 < region.rbar));
        assert!(pts.iter().filter(|p| p.0 == Piece::Interior).all(|p| p.1 > region.delta1 && p.1 < region.delta2 && p.2 < region.rbar));
        assert_eq!(homotopy_times(9), vec![0.0, 0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875, 1.0]);
    }
}
