use foliation_lab::sampling::SamplingPlan;
use foliation_lab::scenario::{builtin, builtin_names};
use foliation_lab::verification::selftest;

#[test]
fn every_builtin_scenario_meets_its_claims() {
    let plan = SamplingPlan::default();
    let mut bad = Vec::new();
    for name in builtin_names() {
        let s = builtin(name).unwrap();
        for item in selftest(&s, &plan).unwrap() {
            println!(
                "{:<4} {:<32} expect {:<5} residual {:.3e} -> {}",
                item.scenario,
                item.check,
                if item.expect_pass { "pass" } else { "fail" },
                item.max_residual,
                if item.ok { "ok" } else { "MISMATCH" }
            );
            if !item.ok {
                bad.push(format!("{} {}", item.scenario, item.check));
            }
        }
    }
    assert!(bad.is_empty(), "self-test mismatches: {bad:?}");
}
