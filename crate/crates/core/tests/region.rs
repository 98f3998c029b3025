use std::sync::OnceLock;

use hartree_core::verify::{evaluate_region, verify_lemma, LemmaId, Region, RunConfig, Status, Verifier};

fn verifier() -> &'static Verifier {
    static V: OnceLock<Verifier> = OnceLock::new();
    V.get_or_init(|| Verifier::new(RunConfig::default()).unwrap())
}

fn evaluate(region: Region) -> hartree_core::verify::RegionScan {
    let v = verifier();
    evaluate_region(v.profile().unwrap(), &v.prob, &v.constants, region, v.c_star_lower(), &v.cfg.scan).unwrap()
}

#[test]
fn default_scan_finds_a_region() {
    let s = verifier().scan().unwrap();
    assert!(s.found, "{:?}", s.failure);
    assert!(s.boundary_margin > 0.0 && s.k_margin > 0.0);
    assert!(s.lambda_2star_proxy.is_some());
}

#[test]
fn shrunken_translation_radius_breaks_the_boundary_bound() {
    let r = verifier().scan().unwrap().region;
    let s = evaluate(Region { rbar: r.rbar / 4.0, ..r });
    assert!(!s.found);
    assert!(s.boundary_margin < 0.0);
}

#[test]
fn small_upper_dilation_breaks_the_concentration_bound() {
    let r = verifier().scan().unwrap().region;
    let s = evaluate(Region { delta2: 10.0, ..r });
    assert!(s.upper_margin < 0.0);
}

#[test]
fn region_check_fails_without_a_region() {
    let v = Verifier::new(RunConfig::from_toml("[scan]\nrbar_candidates = [0.25]\n").unwrap()).unwrap();
    assert!(!v.scan().unwrap().found);
    assert_eq!(verify_lemma(LemmaId::Region, &v).status, Status::Fail);
}

#[test]
fn oversized_potential_is_a_domain_error() {
    let cfg = RunConfig::from_toml("[problem.v1]\nkind = \"rational\"\nv0 = 50.0\ns = 2.0\n").unwrap();
    let v = Verifier::new(cfg).unwrap();
    let rep = verify_lemma(LemmaId::LevelBound, &v);
    assert_eq!(rep.status, Status::Fail);
    assert!(rep.error.unwrap().contains("domain"));
}
