//! Executable experiment definitions.
//!
//! Each builder returns a [`ScenarioDefinition`]: a ready-to-run [`Cascade`]
//! plus the outcome table expected from closed-form amplitudes. The tables
//! here are written from formulas, not computed through the engine.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};
use std::sync::Arc;

use crate::engine::{
    build_cascade, joint_absorbers, spin_space, Absorber, Availability, Cascade,
    ConservationRule, OfferWave, Settings, SpacetimeEvent,
};
use crate::qcore::{tensor, Complex, Operator, Space, StateVector};
use crate::{Error, Result, NO_TRANSACTION};

#[derive(Clone, Debug)]
pub struct ScenarioDefinition {
    pub name: String,
    pub cascade: Cascade,
    /// Analytic probability per outcome label; the remainder is NoTransaction.
    pub expected: BTreeMap<String, f64>,
    pub parameters: BTreeMap<String, f64>,
    pub notes: String,
}

impl ScenarioDefinition {
    fn new(
        name: &str,
        cascade: Cascade,
        expected: BTreeMap<String, f64>,
        parameters: BTreeMap<String, f64>,
        notes: &str,
    ) -> Result<Self> {
        let total: f64 = expected.values().sum();
        if total > 1.0 + 1e-9 || expected.values().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidCascade(format!(
                "{name}: expected table is not a sub-distribution (sum {total})"
            )));
        }
        Ok(ScenarioDefinition {
            name: name.to_string(),
            cascade,
            expected,
            parameters,
            notes: notes.to_string(),
        })
    }

    pub fn expected_no_transaction(&self) -> f64 {
        let rest = 1.0 - self.expected.values().sum::<f64>();
        if rest.abs() <= 1e-9 {
            0.0
        } else {
            rest.max(0.0)
        }
    }

    /// Expected table including the NoTransaction row.
    pub fn expected_with_no_transaction(&self) -> BTreeMap<String, f64> {
        let mut table = self.expected.clone();
        table.insert(NO_TRANSACTION.to_string(), self.expected_no_transaction());
        table
    }
}

fn table<const N: usize>(rows: [(&str, f64); N]) -> BTreeMap<String, f64> {
    rows.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

fn event(t: f64, x: [f64; 3]) -> Result<SpacetimeEvent> {
    SpacetimeEvent::new(t, x)
}

fn real(re: f64) -> Complex {
    Complex::new(re, 0.0)
}

// ---------------------------------------------------------------------------
// Maudlin contingent absorber

pub const MAUDLIN: &str = "maudlin";

/// Slow massive particle sent right (near detector A) and left (far detector
/// B). B only swings into place if the transaction at A failed.
pub fn maudlin() -> ScenarioDefinition {
    maudlin_with(1.0, 2.0, 0.5).expect("default geometry is valid")
}

pub fn maudlin_with(near_distance: f64, far_distance: f64, speed: f64) -> Result<ScenarioDefinition> {
    check_param("near_distance", near_distance, near_distance > 0.0, "must be positive")?;
    check_param(
        "far_distance",
        far_distance,
        far_distance > near_distance,
        "must exceed near_distance",
    )?;
    check_param("speed", speed, speed > 0.0 && speed < 1.0, "must lie in (0, 1)")?;

    let space = Space::new(["right", "left"])?;
    let state = StateVector::normalized(space.clone(), vec![real(FRAC_1_SQRT_2); 2])?;
    let offer = OfferWave::new("source", state, SpacetimeEvent::origin())?;
    let a = Absorber::new(
        "A",
        "A",
        Operator::basis_projector(space.clone(), &["right"])?,
        event(near_distance / speed, [near_distance, 0.0, 0.0])?,
    )?;
    let b = Absorber::new(
        "B",
        "B",
        Operator::basis_projector(space, &["left"])?,
        event(far_distance / speed, [-far_distance, 0.0, 0.0])?,
    )?
    .with_availability(Availability::StageFailed(0));
    let cascade = build_cascade(offer, vec![a, b], BTreeMap::new())?;

    ScenarioDefinition::new(
        MAUDLIN,
        cascade,
        table([("A", 0.5), ("B", 0.5)]),
        table([
            ("near_distance", near_distance),
            ("far_distance", far_distance),
            ("speed", speed),
        ]),
        "Contingent absorber: B responds only after the nearer transaction at A fails; \
         B's naive confirmation weight is 1/2, yet it forms with certainty once reached.",
    )
}

// ---------------------------------------------------------------------------
// EPR-Bohm singlet

pub const EPR_BOHM: &str = "epr_bohm";

/// `(|+−⟩ − |−+⟩)/√2` in the z basis.
pub fn singlet() -> StateVector {
    let up = StateVector::basis(spin_space(), "+").expect("label exists");
    let down = StateVector::basis(spin_space(), "-").expect("label exists");
    let ud = tensor(&up, &down).expect("distinct labels");
    let du = tensor(&down, &up).expect("distinct labels");
    let amps = ud
        .amplitudes()
        .iter()
        .zip(du.amplitudes())
        .map(|(x, y)| (x - y) * FRAC_1_SQRT_2)
        .collect();
    StateVector::normalized(ud.space().clone(), amps).expect("singlet is normalized")
}

fn along_z(angle: f64) -> bool {
    angle.rem_euclid(std::f64::consts::TAU).min(
        std::f64::consts::TAU - angle.rem_euclid(std::f64::consts::TAU),
    ) < 1e-12
}

/// Total spin-z projection, conserved when both sites measure along z.
pub fn spin_z_conservation() -> ConservationRule {
    ConservationRule {
        quantity_name: "total spin-z projection".into(),
        outcome_value: table([("++", 1.0), ("+-", 0.0), ("-+", 0.0), ("--", -1.0)]),
        emitted_value: 0.0,
        applicability: Arc::new(|s: &Settings| {
            ["angle_a", "angle_b"]
                .iter()
                .all(|k| s.get(*k).is_some_and(|a| along_z(*a)))
        }),
    }
}

/// Singlet pair measured at two sites along directions in the x–z plane.
pub fn epr_bohm(angle_a: f64, angle_b: f64) -> Result<ScenarioDefinition> {
    check_param("angle_a", angle_a, angle_a.is_finite(), "must be finite")?;
    check_param("angle_b", angle_b, angle_b.is_finite(), "must be finite")?;
    let offer = OfferWave::new("pair_source", singlet(), SpacetimeEvent::origin())?;
    let absorbers = joint_absorbers(angle_a, angle_b, event(1.0, [0.0; 3])?)?;
    let settings: Settings = table([("angle_a", angle_a), ("angle_b", angle_b)]);
    let cascade = build_cascade(offer, absorbers, BTreeMap::new())?
        .with_conservation(spin_z_conservation())
        .with_settings(settings.clone());

    let cos = (angle_a - angle_b).cos();
    let same = 0.25 * (1.0 - cos);
    let diff = 0.25 * (1.0 + cos);
    ScenarioDefinition::new(
        EPR_BOHM,
        cascade,
        table([("++", same), ("+-", diff), ("-+", diff), ("--", same)]),
        settings,
        "Singlet spin pair; both sites resolve in one joint transaction. \
         Correlation E = -cos(angle_a - angle_b).",
    )
}

// ---------------------------------------------------------------------------
// Elitzur-Vaidman interaction-free measurement

pub const ELITZUR_VAIDMAN: &str = "elitzur_vaidman";

/// Symmetric 50/50 beam splitter with an `i` phase on reflection.
pub fn beam_splitter(space: &Space) -> Result<Operator> {
    let h = FRAC_1_SQRT_2;
    let r = Complex::new(0.0, h);
    Operator::unitary(space.clone(), vec![real(h), r, r, real(h)])
}

/// Mach-Zehnder interferometer fed through its lower port. Without an
/// obstacle every photon exits toward the bright detector; with an obstacle
/// in the lower arm, a dark-port click reveals it without absorption.
pub fn elitzur_vaidman(obstacle_present: bool) -> Result<ScenarioDefinition> {
    let space = Space::new(["upper", "lower"])?;
    let state = StateVector::basis(space.clone(), "lower")?;
    let offer = OfferWave::new("photon_source", state, SpacetimeEvent::origin())?;
    let bs = beam_splitter(&space)?;
    let detector_event = event(2.0, [1.0, 0.0, 0.0])?;
    let mut absorbers = vec![
        Absorber::new(
            "D_bright",
            "bright",
            Operator::basis_projector(space.clone(), &["upper"])?,
            detector_event,
        )?,
        Absorber::new(
            "D_dark",
            "dark",
            Operator::basis_projector(space.clone(), &["lower"])?,
            detector_event,
        )?,
    ];
    let mut propagations = BTreeMap::new();
    let expected = if obstacle_present {
        absorbers.push(Absorber::new(
            "obstacle",
            "obstacle",
            Operator::basis_projector(space, &["lower"])?,
            event(1.0, [0.5, 0.5, 0.0])?,
        )?);
        propagations.insert(0, bs.clone());
        propagations.insert(1, bs);
        table([("obstacle", 0.5), ("bright", 0.25), ("dark", 0.25)])
    } else {
        propagations.insert(0, bs.compose(&bs)?);
        table([("bright", 1.0), ("dark", 0.0)])
    };
    let cascade = build_cascade(offer, absorbers, propagations)?;
    ScenarioDefinition::new(
        ELITZUR_VAIDMAN,
        cascade,
        expected,
        table([("obstacle_present", if obstacle_present { 1.0 } else { 0.0 })]),
        "Interaction-free measurement: beam splitter, optional obstacle on the lower arm \
         (nearer interval), second beam splitter, bright and dark port detectors.",
    )
}

// ---------------------------------------------------------------------------
// Deutsch algorithm

pub const DEUTSCH: &str = "deutsch";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleKind {
    Constant0,
    Constant1,
    BalancedId,
    BalancedNot,
}

impl OracleKind {
    pub const ALL: [OracleKind; 4] = [
        OracleKind::Constant0,
        OracleKind::Constant1,
        OracleKind::BalancedId,
        OracleKind::BalancedNot,
    ];

    pub fn f(self, x: usize) -> usize {
        match self {
            OracleKind::Constant0 => 0,
            OracleKind::Constant1 => 1,
            OracleKind::BalancedId => x,
            OracleKind::BalancedNot => 1 - x,
        }
    }

    pub fn is_constant(self) -> bool {
        matches!(self, OracleKind::Constant0 | OracleKind::Constant1)
    }

    /// Position in [`OracleKind::ALL`]; this is the numeric `oracle` parameter.
    pub fn index(self) -> usize {
        OracleKind::ALL.iter().position(|k| *k == self).expect("listed")
    }

    pub fn from_index(index: f64) -> Result<Self> {
        OracleKind::ALL
            .iter()
            .enumerate()
            .find(|(i, _)| *i as f64 == index)
            .map(|(_, k)| *k)
            .ok_or_else(|| Error::InvalidParameter {
                name: "oracle".into(),
                reason: format!("{index} is not one of 0, 1, 2, 3"),
            })
    }
}

fn hadamard() -> Result<Operator> {
    let h = FRAC_1_SQRT_2;
    Operator::unitary(Space::qubit(), vec![real(h), real(h), real(h), real(-h)])
}

/// `|x, y⟩ → |x, y ⊕ f(x)⟩`.
fn oracle_unitary(kind: OracleKind, space: &Space) -> Result<Operator> {
    let mut entries = vec![real(0.0); 16];
    for x in 0..2 {
        for y in 0..2 {
            let from = 2 * x + y;
            let to = 2 * x + (y ^ kind.f(x));
            entries[to * 4 + from] = real(1.0);
        }
    }
    Operator::unitary(space.clone(), entries)
}

/// Two-qubit Deutsch circuit; the first qubit is measured.
pub fn deutsch(kind: OracleKind) -> Result<ScenarioDefinition> {
    let q = Space::qubit();
    let state = tensor(&StateVector::basis(q.clone(), "0")?, &StateVector::basis(q.clone(), "1")?)?;
    let space = state.space().clone();
    let h = hadamard()?;
    let id = Operator::identity(q.clone());
    let circuit = h
        .tensor(&id)?
        .compose(&oracle_unitary(kind, &space)?)?
        .compose(&h.tensor(&h)?)?;

    let readout = event(1.0, [0.0; 3])?;
    let p0 = Operator::basis_projector(q.clone(), &["0"])?.tensor(&id)?.into_projector()?;
    let p1 = Operator::basis_projector(q, &["1"])?.tensor(&id)?.into_projector()?;
    let absorbers = vec![
        Absorber::new("D0", "0", p0, readout)?,
        Absorber::new("D1", "1", p1, readout)?,
    ];
    let offer = OfferWave::new("register", state, SpacetimeEvent::origin())?;
    let cascade = build_cascade(offer, absorbers, BTreeMap::from([(0, circuit)]))?;
    let expected = if kind.is_constant() {
        table([("0", 1.0), ("1", 0.0)])
    } else {
        table([("0", 0.0), ("1", 1.0)])
    };
    ScenarioDefinition::new(
        DEUTSCH,
        cascade,
        expected,
        table([("oracle", kind.index() as f64)]),
        "Deutsch's algorithm: (H⊗I)·U_f·(H⊗H) on |0⟩|1⟩; reading 0 means f is constant, \
         1 means balanced. Only one transaction can form.",
    )
}

// ---------------------------------------------------------------------------
// Unabsorbed offer wave

pub const UNABSORBED_OFFER: &str = "unabsorbed_offer";

pub fn unabsorbed_offer() -> ScenarioDefinition {
    unabsorbed_offer_with(FRAC_PI_4).expect("default angle is valid")
}

/// `cos θ |0⟩ + sin θ |1⟩` with no absorbers anywhere.
pub fn unabsorbed_offer_with(theta: f64) -> Result<ScenarioDefinition> {
    check_param("theta", theta, theta.is_finite(), "must be finite")?;
    let (s, c) = theta.sin_cos();
    let state = StateVector::normalize_from(Space::qubit(), vec![real(c), real(s)])?;
    let offer = OfferWave::new("electron", state, SpacetimeEvent::origin())?;
    ScenarioDefinition::new(
        UNABSORBED_OFFER,
        Cascade::absorber_free(offer),
        BTreeMap::new(),
        table([("theta", theta)]),
        "An offer wave nobody absorbs: no confirmation, no transaction, the state persists.",
    )
}

// ---------------------------------------------------------------------------
// Catalog

#[derive(Clone, Copy, Debug)]
pub struct ParamSpec {
    pub name: &'static str,
    pub default: f64,
    pub description: &'static str,
}

#[derive(Clone, Copy, Debug)]
pub struct ScenarioInfo {
    pub name: &'static str,
    pub description: &'static str,
    pub params: &'static [ParamSpec],
    build: fn(&BTreeMap<String, f64>) -> Result<ScenarioDefinition>,
}

impl ScenarioInfo {
    /// Builds with defaults overlaid by `overrides`; unknown names are rejected.
    pub fn build(&self, overrides: &BTreeMap<String, f64>) -> Result<ScenarioDefinition> {
        let mut params: BTreeMap<String, f64> = self
            .params
            .iter()
            .map(|p| (p.name.to_string(), p.default))
            .collect();
        for (name, value) in overrides {
            match params.get_mut(name) {
                Some(slot) => *slot = *value,
                None => {
                    return Err(Error::InvalidParameter {
                        name: name.clone(),
                        reason: format!("not a parameter of {}", self.name),
                    })
                }
            }
        }
        (self.build)(&params)
    }
}

fn check_param(name: &str, value: f64, ok: bool, reason: &str) -> Result<()> {
    if value.is_finite() && ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: name.to_string(),
            reason: format!("{value}: {reason}"),
        })
    }
}

fn flag(params: &BTreeMap<String, f64>, name: &str) -> Result<bool> {
    match params[name] {
        0.0 => Ok(false),
        1.0 => Ok(true),
        v => Err(Error::InvalidParameter {
            name: name.to_string(),
            reason: format!("{v}: must be 0 or 1"),
        }),
    }
}

static CATALOG: [ScenarioInfo; 5] = [
    ScenarioInfo {
        name: DEUTSCH,
        description: "Deutsch's algorithm; a single competitor-free transaction reveals constant vs balanced",
        params: &[ParamSpec {
            name: "oracle",
            default: 0.0,
            description: "0 = constant0, 1 = constant1, 2 = balanced_id, 3 = balanced_not",
        }],
        build: |p| deutsch(OracleKind::from_index(p["oracle"])?),
    },
    ScenarioInfo {
        name: ELITZUR_VAIDMAN,
        description: "Interaction-free measurement in a Mach-Zehnder interferometer",
        params: &[ParamSpec {
            name: "obstacle_present",
            default: 1.0,
            description: "1 places an absorbing obstacle in the lower arm, 0 leaves it out",
        }],
        build: |p| elitzur_vaidman(flag(p, "obstacle_present")?),
    },
    ScenarioInfo {
        name: EPR_BOHM,
        description: "Singlet spin pair measured at two distant sites in one joint transaction",
        params: &[
            ParamSpec {
                name: "angle_a",
                default: 0.0,
                description: "site A measurement direction from z in the x-z plane (radians)",
            },
            ParamSpec {
                name: "angle_b",
                default: 0.0,
                description: "site B measurement direction from z in the x-z plane (radians)",
            },
        ],
        build: |p| epr_bohm(p["angle_a"], p["angle_b"]),
    },
    ScenarioInfo {
        name: MAUDLIN,
        description: "Contingent absorber: far detector swings in only if the near transaction fails",
        params: &[
            ParamSpec {
                name: "near_distance",
                default: 1.0,
                description: "distance to the near detector A",
            },
            ParamSpec {
                name: "far_distance",
                default: 2.0,
                description: "distance to the far detector B",
            },
            ParamSpec {
                name: "speed",
                default: 0.5,
                description: "particle speed as a fraction of c",
            },
        ],
        build: |p| maudlin_with(p["near_distance"], p["far_distance"], p["speed"]),
    },
    ScenarioInfo {
        name: UNABSORBED_OFFER,
        description: "Offer wave with no absorbers; never collapses",
        params: &[ParamSpec {
            name: "theta",
            default: FRAC_PI_4,
            description: "state is cos(theta)|0> + sin(theta)|1>",
        }],
        build: |p| unabsorbed_offer_with(p["theta"]),
    },
];

/// All scenarios, sorted by name.
pub fn catalog() -> &'static [ScenarioInfo] {
    &CATALOG
}

pub fn lookup(name: &str) -> Result<&'static ScenarioInfo> {
    CATALOG
        .iter()
        .find(|s| s.name == name)
        .ok_or_else(|| Error::UnknownScenario(name.to_string()))
}

pub fn build(name: &str, overrides: &BTreeMap<String, f64>) -> Result<ScenarioDefinition> {
    lookup(name)?.build(overrides)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{gather_confirmations, outcome_distribution, StageRecord, StageStatus};
    use std::f64::consts::PI;

    #[test]
    fn catalog_is_sorted_and_buildable() {
        let names: Vec<_> = catalog().iter().map(|s| s.name).collect();
        let mut sorted = names.clone();
        sorted.sort();
        assert_eq!(names, sorted);
        assert_eq!(names.len(), 5);
        for info in catalog() {
            let def = info.build(&BTreeMap::new()).unwrap();
            assert_eq!(def.name, info.name);
        }
    }

    #[test]
    fn unknown_scenario_and_parameter() {
        assert_eq!(
            build("nosuch", &BTreeMap::new()).unwrap_err(),
            Error::UnknownScenario("nosuch".into())
        );
        let bad = table([("bogus", 1.0)]);
        assert!(matches!(build(MAUDLIN, &bad), Err(Error::InvalidParameter { .. })));
        let bad = table([("oracle", 7.0)]);
        assert!(matches!(build(DEUTSCH, &bad), Err(Error::InvalidParameter { .. })));
        let bad = table([("obstacle_present", 0.5)]);
        assert!(matches!(build(ELITZUR_VAIDMAN, &bad), Err(Error::InvalidParameter { .. })));
        let bad = table([("far_distance", 0.5)]);
        assert!(matches!(build(MAUDLIN, &bad), Err(Error::InvalidParameter { .. })));
    }

    #[test]
    fn maudlin_structure() {
        let def = maudlin();
        let stages = def.cascade.stages();
        assert_eq!(stages.len(), 2);
        assert_eq!(stages[0].absorbers()[0].absorber_id(), "A");
        assert_eq!(stages[1].absorbers()[0].absorber_id(), "B");

        // B's confirmation computed on the emitted offer wave: the naive 1/2
        let failed_a = StageRecord {
            stage_rank: 0,
            status: StageStatus::Failed,
            confirmations: vec![],
            conservation: None,
        };
        let initial = def.cascade.initial().state();
        let naive = gather_confirmations(initial, &stages[1], &[failed_a]).unwrap();
        assert_eq!(naive.len(), 1);
        assert!((naive[0].weight - 0.5).abs() < 1e-15);
        // and B is absent while stage 0 is unresolved
        assert!(gather_confirmations(initial, &stages[1], &[]).unwrap().is_empty());

        let dist = outcome_distribution(&def.cascade).unwrap();
        assert!((dist.probability("A") - 0.5).abs() < 1e-15);
        assert!((dist.probability("B") - 0.5).abs() < 1e-15);
        assert_eq!(dist.no_transaction, 0.0);
        assert_eq!(def.expected_no_transaction(), 0.0);
    }

    #[test]
    fn epr_expected_tables() {
        let def = epr_bohm(0.0, PI / 2.0).unwrap();
        for p in def.expected.values() {
            assert!((p - 0.25).abs() < 1e-15);
        }
        let def = epr_bohm(0.0, 0.0).unwrap();
        assert_eq!(def.expected["++"], 0.0);
        assert_eq!(def.expected["--"], 0.0);
        assert!(def.cascade.conservation().unwrap().is_applicable(def.cascade.settings()));
        let def = epr_bohm(0.1, 0.1).unwrap();
        assert!(!def.cascade.conservation().unwrap().is_applicable(def.cascade.settings()));
    }

    #[test]
    fn chsh_value_from_expected_tables() {
        let e = |a: f64, b: f64| {
            let t = epr_bohm(a, b).unwrap().expected;
            t["++"] + t["--"] - t["+-"] - t["-+"]
        };
        let (a, a2, b, b2) = (0.0, PI / 2.0, PI / 4.0, 3.0 * PI / 4.0);
        let s = (e(a, b) - e(a, b2) + e(a2, b) + e(a2, b2)).abs();
        assert!((s - 2.0 * 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn elitzur_vaidman_structure() {
        let with = elitzur_vaidman(true).unwrap();
        assert_eq!(with.cascade.stages().len(), 2);
        assert_eq!(with.cascade.stages()[0].absorbers()[0].absorber_id(), "obstacle");
        let without = elitzur_vaidman(false).unwrap();
        assert_eq!(without.cascade.stages().len(), 1);
        assert_eq!(without.expected["dark"], 0.0);
    }

    #[test]
    fn deutsch_expected_outcome() {
        for kind in OracleKind::ALL {
            let def = deutsch(kind).unwrap();
            let want = if kind.is_constant() { "0" } else { "1" };
            assert_eq!(def.expected[want], 1.0);
            assert_eq!(OracleKind::from_index(kind.index() as f64).unwrap(), kind);
        }
    }

    #[test]
    fn unabsorbed_expected_mass() {
        let def = unabsorbed_offer();
        assert!(def.expected.is_empty());
        assert_eq!(def.expected_with_no_transaction()[NO_TRANSACTION], 1.0);
        assert!(def.cascade.is_absorber_free());
    }
}
