use tandyn_core::family::critical_point;
use tandyn_core::orbit::{detrend, raw_orbit};
use tandyn_core::verify::{Seed, Theorem};
use tandyn_core::{
    run_all, run_scenario, run_theorem1, run_theorem2, run_theorem3, run_theorem4, write_report, Alpha, Error,
    HalfPlane, MapParams, ScenarioSpec, TheoremReport, Verdict,
};

fn verdicts(r: &TheoremReport) -> Vec<(String, Verdict)> {
    r.checks.iter().map(|c| (c.name.clone(), c.verdict)).collect()
}

fn assert_all_pass(r: &TheoremReport) {
    for c in &r.checks {
        assert_eq!(
            c.verdict,
            Verdict::Pass,
            "{} {}: {} vs {}",
            r.scenario.name,
            c.name,
            c.measured,
            c.tolerance
        );
    }
    assert_eq!(r.overall, Verdict::Pass);
}

#[test]
fn theorem1_critical_seed_passes_every_check() {
    let r = run_theorem1(&ScenarioSpec::theorem1(1)).unwrap();
    assert_eq!(r.checks.len(), 5);
    assert_all_pass(&r);
    assert_eq!(r.check("T1d").unwrap().measured["multiplicity"], 2);
}

#[test]
fn theorem1_two_shifts_give_two_grand_orbits() {
    let r = run_theorem1(&ScenarioSpec::theorem1(2)).unwrap();
    assert_all_pass(&r);
    assert_eq!(
        r.check("T1e").unwrap().measured["residue_classes"],
        serde_json::json!([0, 1])
    );
}

#[test]
fn theorem1_verdicts_do_not_depend_on_the_interior_seed() {
    let base = run_theorem1(&ScenarioSpec::theorem1(1)).unwrap();
    let mut spec = ScenarioSpec::theorem1(1);
    spec.seeds = vec![Seed::FixedPointOffset {
        k: 0,
        re: -0.3,
        im: 0.15,
    }];
    let other = run_theorem1(&spec).unwrap();
    assert_eq!(verdicts(&base), verdicts(&other));
}

#[test]
fn theorem1_rejects_lambda_i() {
    let mut spec = ScenarioSpec::theorem1(1);
    spec.lambda = Some([0.0, 1.0]);
    assert!(matches!(run_theorem1(&spec), Err(Error::Precondition(_))));
}

#[test]
fn theorem2_lower_baker_seed() {
    let r = run_theorem2(&ScenarioSpec::theorem2(1)).unwrap();
    assert_all_pass(&r);
    let width = r.check("T2b").unwrap().measured["re_width"].as_f64().unwrap();
    assert!(width < std::f64::consts::PI);
}

#[test]
fn theorem2_rejects_upper_half_plane_seed() {
    let mut spec = ScenarioSpec::theorem2(1);
    spec.seeds = vec![Seed::Point { re: 0.0, im: 2.0 }];
    assert!(matches!(run_theorem2(&spec), Err(Error::Precondition(_))));
}

#[test]
fn theorem2_negative_shift_still_sinks() {
    let r = run_theorem2(&ScenarioSpec::theorem2(-1)).unwrap();
    assert_eq!(r.check("T2a").unwrap().verdict, Verdict::Pass);
    assert_eq!(r.check("T2b").unwrap().verdict, Verdict::Pass);
}

#[test]
fn theorem3_parabolic_eighth() {
    let r = run_theorem3(&ScenarioSpec::theorem3(Alpha::rational(1, 8).unwrap(), 1)).unwrap();
    assert_all_pass(&r);
    // The Im limit is Im z0 of the principal fixed point.
    let offset = r.check("T3b").unwrap().measured["limit_minus_im_z0"][0]
        .as_f64()
        .unwrap();
    assert!(offset < 5e-2);
}

#[test]
fn theorem3_period_two_petals() {
    let r = run_theorem3(&ScenarioSpec::theorem3(Alpha::rational(1, 2).unwrap(), 1)).unwrap();
    assert_eq!(r.checks.len(), 4);
    assert_eq!(r.check("T3d").unwrap().verdict, Verdict::Pass);
    let t3a = &r.check("T3a").unwrap().measured;
    assert!(t3a["statuses"][0].as_str().unwrap().starts_with("ParabolicBoundary"));
    assert!(t3a["limit_error"][0].as_f64().unwrap() < 5e-2);

    // Oracle: the detrended orbit alternates between two petals, so it
    // closes up after two steps far better than after one.
    let p = MapParams::from_alpha(Alpha::rational(1, 2).unwrap(), 1).unwrap();
    let raw = raw_orbit(&p, critical_point(0, HalfPlane::Lower), 20_000).unwrap();
    let w = detrend(&raw, 1);
    let n = w.len() - 3;
    assert!((w[n + 2] - w[n]).norm() < 0.05 * (w[n + 1] - w[n]).norm());
}

#[test]
fn theorem3_other_rotation_numbers() {
    for (p, q) in [(1, 3), (1, 4), (3, 8)] {
        let r = run_theorem3(&ScenarioSpec::theorem3(Alpha::rational(p, q).unwrap(), 2)).unwrap();
        assert_all_pass(&r);
    }
}

#[test]
fn theorem4_golden_siegel() {
    let r = run_theorem4(&ScenarioSpec::theorem4(1)).unwrap();
    assert_all_pass(&r);
}

#[test]
fn theorem4_center_seed_is_trivially_bounded() {
    let mut spec = ScenarioSpec::theorem4(1);
    spec.seeds = vec![Seed::FixedPointOffset { k: 0, re: 0.0, im: 0.0 }];
    let r = run_theorem4(&spec).unwrap();
    assert_eq!(r.check("T4a").unwrap().verdict, Verdict::Pass);
    assert_eq!(r.check("T4b").unwrap().verdict, Verdict::Inconclusive);
}

#[test]
fn theorem4_rejects_parabolic_parameters() {
    let mut spec = ScenarioSpec::theorem4(1);
    spec.alpha = Some(Alpha::rational(1, 3).unwrap());
    assert!(matches!(run_theorem4(&spec), Err(Error::Precondition(_))));
}

#[test]
fn reports_are_reproducible_and_self_describing() {
    let spec = ScenarioSpec::theorem1(1);
    let a = write_report(&run_scenario(&spec).unwrap()).unwrap();
    let b = write_report(&run_scenario(&spec).unwrap()).unwrap();
    assert_eq!(a, b);
    let v: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(v["scenario"]["m"], 1);
    assert_eq!(v["scenario"]["theorem"], "theorem1");
    assert!(v["scenario"]["lambda"].is_array());
    assert!(v["scenario"]["window"].is_object());
    for c in v["checks"].as_array().unwrap() {
        for key in ["name", "clause", "measured", "tolerance", "verdict"] {
            assert!(c.get(key).is_some(), "{key} missing in {c}");
        }
    }
    assert_eq!(v["overall"], "Pass");
    let back: TheoremReport = serde_json::from_slice(&a).unwrap();
    assert_eq!(back.scenario.theorem, Theorem::Theorem1);
}

#[test]
fn run_all_covers_the_default_scenarios() {
    let specs = ScenarioSpec::defaults();
    let reports = run_all(&specs).unwrap();
    assert_eq!(reports.len(), 4);
    for r in &reports {
        assert_all_pass(r);
    }
}
