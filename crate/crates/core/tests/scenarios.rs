mod common;

use std::f64::consts::PI;

use handshake_core::engine::{outcome_distribution, resolve_cascade, StageStatus, TrialResult};
use handshake_core::harness::{run_and_compare, run_definition, trial_rng};
use handshake_core::scenarios::{self, OracleKind};
use proptest::prelude::*;

fn max_gap(def: &scenarios::ScenarioDefinition, oracle: &std::collections::BTreeMap<String, f64>) -> f64 {
    oracle
        .iter()
        .map(|(k, p)| (def.expected.get(k).copied().unwrap_or(0.0) - p).abs())
        .fold(0.0, f64::max)
}

#[test]
fn expected_tables_match_independent_oracles() {
    for kind in OracleKind::ALL {
        let def = scenarios::deutsch(kind).unwrap();
        assert!(max_gap(&def, &common::deutsch_oracle(|x| kind.f(x))) < 1e-10, "{kind:?}");
    }
    for obstacle in [false, true] {
        let def = scenarios::elitzur_vaidman(obstacle).unwrap();
        assert!(max_gap(&def, &common::elitzur_vaidman_oracle(obstacle)) < 1e-10);
    }
    for (a, b) in [(0.0, 0.0), (0.0, PI / 3.0), (1.1, -0.4), (PI / 2.0, PI)] {
        let def = scenarios::epr_bohm(a, b).unwrap();
        assert!(max_gap(&def, &common::singlet_weights(a, b)) < 1e-10, "({a}, {b})");
    }
}

#[test]
fn empirical_frequencies_fall_within_tolerance() {
    let mut defs: Vec<_> = OracleKind::ALL.iter().map(|&k| scenarios::deutsch(k).unwrap()).collect();
    defs.push(scenarios::elitzur_vaidman(true).unwrap());
    defs.push(scenarios::elitzur_vaidman(false).unwrap());
    defs.push(scenarios::epr_bohm(0.3, 1.9).unwrap());
    defs.push(scenarios::maudlin());
    defs.push(scenarios::unabsorbed_offer());
    for (seed, def) in defs.iter().enumerate() {
        let (_, report) = run_and_compare(def, 100_000, seed as u64).unwrap();
        assert!(report.pass, "{}: {:?}", def.name, report.rows);
    }
}

#[test]
fn deutsch_never_misclassifies() {
    for kind in OracleKind::ALL {
        let def = scenarios::deutsch(kind).unwrap();
        let table = run_definition(&def, 2_000, 11).unwrap();
        let wrong = if kind.is_constant() { "1" } else { "0" };
        assert_eq!(table.count(wrong), 0, "{kind:?}");
    }
}

#[test]
fn maudlin_history_is_consistent() {
    let def = scenarios::maudlin();
    for i in 0..5_000 {
        let out = resolve_cascade(&def.cascade, &mut trial_rng(3, i)).unwrap();
        let first = &out.history[0];
        match &out.result {
            TrialResult::Actualized { absorber_id, .. } if absorber_id == "A" => {
                assert!(matches!(first.status, StageStatus::Formed { .. }));
                // B never got to answer
                assert!(out.history.iter().flat_map(|r| &r.confirmations).all(|c| c.absorber_id != "B"));
            }
            TrialResult::Actualized { absorber_id, .. } => {
                assert_eq!(absorber_id, "B");
                assert_eq!(first.status, StageStatus::Failed);
                let b = &out.history[1].confirmations;
                assert_eq!(b.len(), 1);
                assert!((b[0].weight - 1.0).abs() < 1e-12);
            }
            TrialResult::NoTransaction => panic!("trial {i} formed nothing"),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn epr_depends_only_on_relative_angle(a in -PI..PI, b in -PI..PI, delta in -PI..PI) {
        let base = outcome_distribution(&scenarios::epr_bohm(a, b).unwrap().cascade).unwrap();
        let turned = outcome_distribution(&scenarios::epr_bohm(a + delta, b + delta).unwrap().cascade).unwrap();
        for label in ["++", "+-", "-+", "--"] {
            prop_assert!((base.probability(label) - turned.probability(label)).abs() < 1e-10);
        }
    }
}
