//! Potential-smallness checks and the `a`, `cbar` calculator.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bubbles::check_coupling;
use crate::error::{Error, Result};
use crate::quad::bisect;
use crate::riesz::ConstantsTable;
use crate::variational::Problem;

/// Which normalization of the potential norms is enforced.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize, PartialEq, Eq)]
pub enum Convention {
    /// Plain `L^{N/2}` norms against the Sobolev constant.
    #[default]
    A3,
    /// Norms weighted by `C(N,4)^{-1/2}` against the HLS-Sobolev constant.
    C3,
}

impl FromStr for Convention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "A3" => Ok(Convention::A3),
            "C3" => Ok(Convention::C3),
            _ => Err(Error::Config(format!("unknown convention '{s}' (expected A3 or C3)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct ConventionCheck {
    pub left: f64,
    pub right: f64,
    /// `right - left`.
    pub margin: f64,
    pub satisfied: bool,
}

#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct AdmissibilityReport {
    pub norm_v1: f64,
    pub norm_v2: f64,
    /// `V1 + V2` is not identically zero.
    pub nonzero_potential: bool,
    /// `min{sqrt((beta² - mu1 mu2)/(mu_j (2 beta - mu1 - mu2))), sqrt 2}`.
    pub gain: f64,
    pub a3: ConventionCheck,
    pub c3: ConventionCheck,
}

impl AdmissibilityReport {
    pub fn check(&self, c: Convention) -> &ConventionCheck {
        match c {
            Convention::A3 => &self.a3,
            Convention::C3 => &self.c3,
        }
    }
}

/// The factor multiplying the constant on the right-hand side.
pub fn gain(mu1: f64, mu2: f64, beta: f64) -> f64 {
    let num = beta * beta - mu1 * mu2;
    let den = 2.0 * beta - mu1 - mu2;
    (num / (mu1 * den)).sqrt().min((num / (mu2 * den)).sqrt()).min(2f64.sqrt())
}

/// `k`-weighted combination of the potential norms.
fn weighted_norm(prob: &Problem, n1: f64, n2: f64) -> f64 {
    let den = 2.0 * prob.beta - prob.mu1 - prob.mu2;
    ((prob.beta - prob.mu2) * n1 + (prob.beta - prob.mu1) * n2) / den
}

fn convention_check(left: f64, right: f64, nonzero: bool) -> ConventionCheck {
    let margin = right - left;
    ConventionCheck { left, right, margin, satisfied: nonzero && left > 0.0 && margin > 0.0 }
}

pub fn check_a3(prob: &Problem, constants: &ConstantsTable) -> Result<AdmissibilityReport> {
    check_coupling(prob.mu1, prob.mu2, prob.beta)?;
    let norm_v1 = prob.v1.critical_norm(prob.dim)?;
    let norm_v2 = prob.v2.critical_norm(prob.dim)?;
    let nonzero_potential = !(prob.v1.is_zero() && prob.v2.is_zero()) && norm_v1 + norm_v2 > 0.0;
    let g = gain(prob.mu1, prob.mu2, prob.beta);
    let left = weighted_norm(prob, norm_v1, norm_v2);
    let s = constants.sobolev;
    let shl = constants.sobolev_hl;
    let a3 = convention_check(left, g * s - s, nonzero_potential);
    let c3 = convention_check(left / constants.hls.sqrt(), g * shl - shl, nonzero_potential);
    Ok(AdmissibilityReport { norm_v1, norm_v2, nonzero_potential, gain: g, a3, c3 })
}

#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct LevelChoice {
    pub a: f64,
    pub cbar: f64,
    pub c_inf: f64,
    pub c_star_lower: f64,
    /// `2^{1-a} c_inf`.
    pub chain_left: f64,
    /// `min{S_HL²/(4 mu1), S_HL²/(4 mu2), 2 c_inf}`.
    pub threshold: f64,
    pub chain_holds: bool,
    /// Set when `a` lies within `1e-6` of 1.
    pub near_boundary: bool,
}

/// `f(t) = 2^{-(1-t)/2} g S_HL - S_HL`.
pub fn level_function(t: f64, g: f64, shl: f64) -> f64 {
    2f64.powf(-(1.0 - t) / 2.0) * g * shl - shl
}

/// Solves `f(a) = L` for the weighted potential size `L` and places `cbar`
/// at the midpoint of `(c_inf, min{(c* + c_inf)/2, 2^{1-a} c_inf})`.
pub fn choose_a_and_cbar(prob: &Problem, constants: &ConstantsTable, c_star_lower: f64) -> Result<LevelChoice> {
    let report = check_a3(prob, constants)?;
    let cc = prob.coupling()?;
    if !(c_star_lower > cc.c_inf) {
        return Err(Error::param(format!("c* proxy {c_star_lower} must exceed c_inf = {}", cc.c_inf)));
    }
    let shl = constants.sobolev_hl;
    let target = report.c3.left;
    let f = |t: f64| level_function(t, report.gain, shl) - target;
    if !(f(1.0) > 0.0) || !(f(0.0) < 0.0) {
        return Err(Error::Domain(format!(
            "no level parameter in (0, 1): f(0) - L = {:.6e}, f(1) - L = {:.6e}; the potentials are too large",
            f(0.0),
            f(1.0)
        )));
    }
    let a = bisect(f, 0.0, 1.0, 1e-15).ok_or_else(|| Error::numerical("level parameter root not bracketed"))?;
    let chain_left = 2f64.powf(1.0 - a) * cc.c_inf;
    let threshold = (cc.shl_sq / (4.0 * cc.mu1.max(cc.mu2))).min(2.0 * cc.c_inf);
    let upper = (0.5 * (c_star_lower + cc.c_inf)).min(chain_left);
    Ok(LevelChoice {
        a,
        cbar: 0.5 * (cc.c_inf + upper),
        c_inf: cc.c_inf,
        c_star_lower,
        chain_left,
        threshold,
        chain_holds: chain_left <= threshold * (1.0 + 1e-12),
        near_boundary: 1.0 - a < 1e-6,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::riesz::constants_table;
    use crate::variational::Potential;

    fn prob(v0: f64) -> Problem {
        let v = Potential::rational(v0, 2.0).unwrap();
        Problem::new(5, 1.0, 2.0, 3.0, 0.0, 0.0, v.clone(), v).unwrap()
    }

    #[test]
    fn zero_potential_is_not_admissible() {
        let t = constants_table(5).unwrap();
        let r = check_a3(&prob(0.0), &t).unwrap();
        assert_eq!(r.a3.left, 0.0);
        assert!(!r.nonzero_potential && !r.a3.satisfied && !r.c3.satisfied);
    }

    #[test]
    fn small_and_large_potentials() {
        let t = constants_table(5).unwrap();
        let ok = check_a3(&prob(0.01), &t).unwrap();
        assert!(ok.a3.satisfied && ok.a3.margin > 0.0 && ok.c3.satisfied);
        let bad = check_a3(&prob(10.0), &t).unwrap();
        assert!(!bad.a3.satisfied && bad.a3.margin < 0.0 && !bad.c3.satisfied);
        assert!((ok.gain - (7.0f64 / 6.0).sqrt()).abs() < 1e-15);
        assert!((ok.a3.margin - ok.a3.right + ok.a3.left).abs() < 1e-15);
    }

    #[test]
    fn level_root_matches_closed_form() {
        let t = constants_table(5).unwrap();
        let p = prob(1e-6);
        let r = check_a3(&p, &t).unwrap();
        let choice = choose_a_and_cbar(&p, &t, 1.02 * p.coupling().unwrap().c_inf).unwrap();
        let closed = 1.0 + 2.0 * ((1.0 + r.c3.left / t.sobolev_hl) / r.gain).log2();
        assert!((choice.a - closed).abs() < 1e-12);
        assert!(choice.a > 0.0 && choice.a < 1.0 && choice.chain_holds);
        let c = p.coupling().unwrap();
        assert!(choice.cbar > c.c_inf && choice.cbar < 1.01 * c.c_inf);
    }

    #[test]
    fn level_function_is_increasing() {
        let t = constants_table(5).unwrap();
        let g = gain(1.0, 2.0, 3.0);
        let vals: Vec<f64> = (0..=100).map(|i| level_function(i as f64 / 100.0, g, t.sobolev_hl)).collect();
        assert!(vals.windows(2).all(|w| w[1] > w[0]));
        assert!(vals[0] <= 0.0 && vals[100] > 0.0);
    }

    #[test]
    fn boundary_and_violation() {
        let t = constants_table(5).unwrap();
        let unit = check_a3(&prob(1.0), &t).unwrap();
        let v_edge = unit.a3.right / unit.a3.left * (1.0 - 1e-9);
        let p = prob(v_edge);
        let c = p.coupling().unwrap();
        let choice = choose_a_and_cbar(&p, &t, 1.02 * c.c_inf).unwrap();
        assert!(choice.near_boundary);
        assert!(matches!(choose_a_and_cbar(&prob(v_edge * 1.01), &t, 1.02 * c.c_inf), Err(Error::Domain(_))));
    }
}
