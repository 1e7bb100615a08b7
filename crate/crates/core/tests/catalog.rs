use gpc_core::catalog::{self, Overrides};
use gpc_core::Verdict;

#[test]
fn every_scenario_passes_with_defaults() {
    for report in catalog::run_all(&Overrides::default()).unwrap() {
        for c in &report.checks {
            assert!(c.pass, "{}: {} expected {} observed {}", report.name, c.name, c.expected, c.observed);
        }
        assert!(report.pass);
    }
}

#[test]
fn trilinear_at_high_ratio_is_certified() {
    let o = Overrides {
        q: Some(0.8),
        ..Overrides::default()
    };
    let r = catalog::run_scenario(catalog::TRILINEAR_GEOMETRIC, &o).unwrap();
    assert!(r.pass);
    assert_eq!(r.reports[0].report.verdict, Verdict::CertifiedEntangled);
    assert!((r.reports[0].report.relative_residual - 0.42029).abs() < 1e-4);
}

#[test]
fn prime_override() {
    let o = Overrides {
        p: Some(97),
        ..Overrides::default()
    };
    assert!(catalog::run_scenario(catalog::PRIME_BASIS, &o).unwrap().pass);
}

#[test]
fn reports_are_deterministic() {
    let a = serde_json::to_string(&catalog::run_scenario(catalog::PHOTON_4MODE, &Overrides::default()).unwrap()).unwrap();
    let b = serde_json::to_string(&catalog::run_scenario(catalog::PHOTON_4MODE, &Overrides::default()).unwrap()).unwrap();
    assert_eq!(a, b);
}
