//! The transaction engine.
//!
//! A [`Cascade`] holds an offer wave and an ordered list of [`CascadeStage`]s.
//! Each stage first propagates the current offer state, then gathers one
//! [`ConfirmationWave`] per available absorber and lets the resulting
//! incipient transactions compete in a single weighted draw. With probability
//! `W = Σ wᵢ` one of them forms and the trial ends; otherwise the state is
//! projected onto the complement of the stage's absorbers, renormalized, and
//! handed to the next stage.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::qcore::{
    self, check_mutually_orthogonal, complement_renormalize, projector_weight, Complex, Operator,
    Space, StateVector, ARITHMETIC_TOL, NORMALIZATION_TOL,
};
use crate::{ConservationViolation, Error, Result, NO_TRANSACTION};

/// Intervals closer than this share a stage.
pub const INTERVAL_TIE_TOL: f64 = 1e-9;
/// Transactions at or below this weight are dead branches for conservation checks.
pub const DEAD_BRANCH_WEIGHT: f64 = 1e-10;
/// Allowed mismatch between an outcome's conserved value and the emitted value.
pub const CONSERVATION_TOL: f64 = 1e-9;

/// Named measurement settings (angles, switches) a scenario was built with.
pub type Settings = BTreeMap<String, f64>;

/// A point in spacetime in natural units (`c = 1`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpacetimeEvent {
    pub t: f64,
    pub x: [f64; 3],
}

impl SpacetimeEvent {
    pub fn new(t: f64, x: [f64; 3]) -> Result<Self> {
        if !t.is_finite() || x.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidCascade(format!(
                "non-finite spacetime event ({t}, {x:?})"
            )));
        }
        Ok(SpacetimeEvent { t, x })
    }

    pub const fn origin() -> Self {
        SpacetimeEvent {
            t: 0.0,
            x: [0.0; 3],
        }
    }
}

/// `(Δt)² − |Δx|²`, positive for timelike separation.
pub fn interval_squared(a: &SpacetimeEvent, b: &SpacetimeEvent) -> f64 {
    let dt = b.t - a.t;
    let dx2: f64 = a.x.iter().zip(&b.x).map(|(p, q)| (q - p) * (q - p)).sum();
    dt * dt - dx2
}

#[derive(Clone, Debug, PartialEq)]
pub struct OfferWave {
    emitter_id: String,
    state: StateVector,
    emission: SpacetimeEvent,
}

impl OfferWave {
    pub fn new(
        emitter_id: impl Into<String>,
        state: StateVector,
        emission: SpacetimeEvent,
    ) -> Result<Self> {
        state.require_normalized(NORMALIZATION_TOL)?;
        Ok(OfferWave {
            emitter_id: emitter_id.into(),
            state,
            emission,
        })
    }

    pub fn emitter_id(&self) -> &str {
        &self.emitter_id
    }

    pub fn state(&self) -> &StateVector {
        &self.state
    }

    pub fn emission(&self) -> &SpacetimeEvent {
        &self.emission
    }

    fn with_state(&self, state: StateVector) -> OfferWave {
        OfferWave {
            emitter_id: self.emitter_id.clone(),
            state,
            emission: self.emission,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StageStatus {
    Formed {
        absorber_id: String,
        outcome_label: String,
    },
    Failed,
}

/// What happened at one stage of one trial.
#[derive(Clone, Debug, PartialEq)]
pub struct StageRecord {
    pub stage_rank: usize,
    pub status: StageStatus,
    /// Confirmation waves returned by the absorbers that were available.
    pub confirmations: Vec<ConfirmationWave>,
    pub conservation: Option<ConservationReport>,
}

impl StageRecord {
    pub fn failed(&self) -> bool {
        self.status == StageStatus::Failed
    }
}

/// When an absorber is in place to respond, as a function of what has
/// already been resolved in the trial.
pub type AvailabilityPredicate = Arc<dyn Fn(&[StageRecord]) -> bool + Send + Sync>;

#[derive(Clone, Default)]
pub enum Availability {
    #[default]
    Always,
    /// Present only if the stage with this rank has been resolved and failed.
    StageFailed(usize),
    Custom(AvailabilityPredicate),
}

impl Availability {
    pub fn is_available(&self, history: &[StageRecord]) -> bool {
        match self {
            Availability::Always => true,
            Availability::StageFailed(rank) => history
                .iter()
                .any(|r| r.stage_rank == *rank && r.failed()),
            Availability::Custom(pred) => pred(history),
        }
    }

    pub fn is_contingent(&self) -> bool {
        !matches!(self, Availability::Always)
    }
}

impl fmt::Debug for Availability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Availability::Always => f.write_str("Always"),
            Availability::StageFailed(rank) => write!(f, "StageFailed({rank})"),
            Availability::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Absorber {
    absorber_id: String,
    outcome_label: String,
    projector: Operator,
    event: SpacetimeEvent,
    availability: Availability,
}

impl Absorber {
    pub fn new(
        absorber_id: impl Into<String>,
        outcome_label: impl Into<String>,
        projector: Operator,
        event: SpacetimeEvent,
    ) -> Result<Self> {
        if !projector.is_projector() {
            return Err(Error::InvalidAbsorberSet(
                "absorber operator must be a checked projector".into(),
            ));
        }
        Ok(Absorber {
            absorber_id: absorber_id.into(),
            outcome_label: outcome_label.into(),
            projector,
            event,
            availability: Availability::Always,
        })
    }

    pub fn with_availability(mut self, availability: Availability) -> Self {
        self.availability = availability;
        self
    }

    pub fn absorber_id(&self) -> &str {
        &self.absorber_id
    }

    pub fn outcome_label(&self) -> &str {
        &self.outcome_label
    }

    pub fn projector(&self) -> &Operator {
        &self.projector
    }

    pub fn event(&self) -> &SpacetimeEvent {
        &self.event
    }

    pub fn availability(&self) -> &Availability {
        &self.availability
    }
}

/// An absorber's response, reduced to its real weight at the emitter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfirmationWave {
    pub absorber_id: String,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IncipientTransaction<'a> {
    pub offer: &'a OfferWave,
    pub confirmation: ConfirmationWave,
    pub outcome_label: String,
    pub interval2: f64,
}

impl IncipientTransaction<'_> {
    pub fn weight(&self) -> f64 {
        self.confirmation.weight
    }

    pub fn absorber_id(&self) -> &str {
        &self.confirmation.absorber_id
    }
}

#[derive(Clone, Debug)]
pub struct CascadeStage {
    propagation: Option<Operator>,
    absorbers: Vec<Absorber>,
    stage_rank: usize,
}

impl CascadeStage {
    /// Validates the stage and stores its absorbers in absorber-id order.
    pub fn new(
        stage_rank: usize,
        propagation: Option<Operator>,
        mut absorbers: Vec<Absorber>,
    ) -> Result<Self> {
        if let Some(u) = &propagation {
            if !u.is_unitary() {
                return Err(Error::InvalidCascade(format!(
                    "propagation of stage {stage_rank} is not unitary"
                )));
            }
        }
        absorbers.sort_by(|a, b| a.absorber_id.cmp(&b.absorber_id));
        if let Some(w) = absorbers
            .windows(2)
            .find(|w| w[0].absorber_id == w[1].absorber_id)
        {
            return Err(Error::InvalidAbsorberSet(format!(
                "duplicate absorber id {:?}",
                w[0].absorber_id
            )));
        }
        if let Some(first) = absorbers.first() {
            let space = first.projector.space();
            if absorbers.iter().any(|a| a.projector.space() != space)
                || propagation.as_ref().is_some_and(|u| u.space() != space)
            {
                return Err(Error::InvalidAbsorberSet(format!(
                    "stage {stage_rank} mixes spaces"
                )));
            }
        }
        let projectors: Vec<&Operator> = absorbers.iter().map(|a| &a.projector).collect();
        check_mutually_orthogonal(&projectors)?;
        Ok(CascadeStage {
            propagation,
            absorbers,
            stage_rank,
        })
    }

    pub fn stage_rank(&self) -> usize {
        self.stage_rank
    }

    pub fn propagation(&self) -> Option<&Operator> {
        self.propagation.as_ref()
    }

    pub fn absorbers(&self) -> &[Absorber] {
        &self.absorbers
    }

    fn absorber(&self, id: &str) -> Option<&Absorber> {
        self.absorbers
            .binary_search_by(|a| a.absorber_id.as_str().cmp(id))
            .ok()
            .map(|i| &self.absorbers[i])
    }

    fn available<'s>(&'s self, history: &'s [StageRecord]) -> impl Iterator<Item = &'s Absorber> {
        self.absorbers
            .iter()
            .filter(move |a| a.availability.is_available(history))
    }
}

/// Predicate deciding whether a conservation rule applies to the given settings.
pub type Applicability = Arc<dyn Fn(&Settings) -> bool + Send + Sync>;

#[derive(Clone)]
pub struct ConservationRule {
    pub quantity_name: String,
    pub outcome_value: BTreeMap<String, f64>,
    pub emitted_value: f64,
    pub applicability: Applicability,
}

impl ConservationRule {
    pub fn is_applicable(&self, settings: &Settings) -> bool {
        (self.applicability)(settings)
    }
}

impl fmt::Debug for ConservationRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConservationRule")
            .field("quantity_name", &self.quantity_name)
            .field("outcome_value", &self.outcome_value)
            .field("emitted_value", &self.emitted_value)
            .finish_non_exhaustive()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ConservationReport {
    Clean {
        /// Transactions above the dead-branch weight, all conserving.
        live: usize,
        /// Absorber ids of non-conserving transactions, all at negligible weight.
        dead_branches: Vec<String>,
    },
    SkippedNotApplicable,
}

#[derive(Clone, Debug)]
pub struct Cascade {
    initial: OfferWave,
    stages: Vec<CascadeStage>,
    conservation: Option<ConservationRule>,
    settings: Settings,
}

impl Cascade {
    pub fn new(initial: OfferWave, stages: Vec<CascadeStage>) -> Result<Self> {
        if stages.is_empty() {
            return Err(Error::InvalidCascade(
                "a cascade needs at least one stage unless built absorber-free".into(),
            ));
        }
        if stages.windows(2).any(|w| w[0].stage_rank >= w[1].stage_rank) {
            return Err(Error::InvalidCascade(
                "stage ranks must strictly increase".into(),
            ));
        }
        let space = initial.state.space();
        for stage in &stages {
            let mismatched = stage.absorbers.iter().any(|a| a.projector.space() != space)
                || stage.propagation.as_ref().is_some_and(|u| u.space() != space);
            if mismatched {
                return Err(Error::InvalidCascade(format!(
                    "stage {} does not act on the offer wave's space",
                    stage.stage_rank
                )));
            }
        }
        Ok(Cascade {
            initial,
            stages,
            conservation: None,
            settings: Settings::new(),
        })
    }

    /// An offer wave with nothing to absorb it.
    pub fn absorber_free(initial: OfferWave) -> Self {
        Cascade {
            initial,
            stages: Vec::new(),
            conservation: None,
            settings: Settings::new(),
        }
    }

    pub fn with_conservation(mut self, rule: ConservationRule) -> Self {
        self.conservation = Some(rule);
        self
    }

    pub fn with_settings(mut self, settings: Settings) -> Self {
        self.settings = settings;
        self
    }

    pub fn initial(&self) -> &OfferWave {
        &self.initial
    }

    pub fn stages(&self) -> &[CascadeStage] {
        &self.stages
    }

    pub fn conservation(&self) -> Option<&ConservationRule> {
        self.conservation.as_ref()
    }

    pub fn settings(&self) -> &Settings {
        &self.settings
    }

    pub fn is_absorber_free(&self) -> bool {
        self.stages.is_empty()
    }

    pub fn has_contingent_absorbers(&self) -> bool {
        self.stages
            .iter()
            .flat_map(|s| &s.absorbers)
            .any(|a| a.availability.is_contingent())
    }
}

/// Groups absorbers into stages by ascending interval from the emission event.
///
/// Intervals within [`INTERVAL_TIE_TOL`] of a stage's nearest member share that
/// stage. `propagations` maps a stage rank to the unitary applied before that
/// stage gathers confirmations. No absorbers yields an absorber-free cascade.
pub fn build_cascade(
    offer: OfferWave,
    absorbers: Vec<Absorber>,
    mut propagations: BTreeMap<usize, Operator>,
) -> Result<Cascade> {
    if absorbers.is_empty() {
        if !propagations.is_empty() {
            return Err(Error::InvalidCascade(
                "propagation given for an absorber-free cascade".into(),
            ));
        }
        return Ok(Cascade::absorber_free(offer));
    }
    let mut keyed: Vec<(f64, Absorber)> = absorbers
        .into_iter()
        .map(|a| (interval_squared(&offer.emission, &a.event), a))
        .collect();
    keyed.sort_by(|(ia, a), (ib, b)| ia.total_cmp(ib).then_with(|| a.absorber_id.cmp(&b.absorber_id)));

    let mut groups: Vec<(f64, Vec<Absorber>)> = Vec::new();
    for (interval, absorber) in keyed {
        match groups.last_mut() {
            Some((lead, members)) if (interval - *lead).abs() <= INTERVAL_TIE_TOL => {
                members.push(absorber)
            }
            _ => groups.push((interval, vec![absorber])),
        }
    }
    if let Some(&rank) = propagations.keys().find(|&&r| r >= groups.len()) {
        return Err(Error::InvalidCascade(format!(
            "propagation given for missing stage {rank}"
        )));
    }
    let stages = groups
        .into_iter()
        .enumerate()
        .map(|(rank, (_, members))| CascadeStage::new(rank, propagations.remove(&rank), members))
        .collect::<Result<Vec<_>>>()?;
    Cascade::new(offer, stages)
}

/// One confirmation per available absorber, weighted by its Born probability.
pub fn gather_confirmations(
    state: &StateVector,
    stage: &CascadeStage,
    history: &[StageRecord],
) -> Result<Vec<ConfirmationWave>> {
    stage
        .available(history)
        .map(|a| {
            Ok(ConfirmationWave {
                absorber_id: a.absorber_id.clone(),
                weight: projector_weight(&a.projector, state)?,
            })
        })
        .collect()
}

/// Pairs each confirmation with the offer, ordered by absorber id.
pub fn form_incipient<'a>(
    offer: &'a OfferWave,
    cws: &[ConfirmationWave],
    stage: &CascadeStage,
) -> Result<Vec<IncipientTransaction<'a>>> {
    let mut out = cws
        .iter()
        .map(|cw| {
            let absorber = stage.absorber(&cw.absorber_id).ok_or_else(|| {
                Error::InvalidAbsorberSet(format!(
                    "confirmation from unknown absorber {:?}",
                    cw.absorber_id
                ))
            })?;
            Ok(IncipientTransaction {
                offer,
                confirmation: cw.clone(),
                outcome_label: absorber.outcome_label.clone(),
                interval2: interval_squared(&offer.emission, &absorber.event),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    out.sort_by(|a, b| a.absorber_id().cmp(b.absorber_id()));
    Ok(out)
}

/// Checks that every live transaction carries the emitted value of the
/// conserved quantity. Any live violation is an error.
pub fn assert_conservation(
    transactions: &[IncipientTransaction<'_>],
    rule: &ConservationRule,
    settings: &Settings,
) -> Result<ConservationReport> {
    if !rule.is_applicable(settings) {
        return Ok(ConservationReport::SkippedNotApplicable);
    }
    let mut live = 0;
    let mut dead_branches = Vec::new();
    let mut violations = Vec::new();
    for tx in transactions {
        let value = *rule
            .outcome_value
            .get(&tx.outcome_label)
            .ok_or_else(|| Error::MissingConservedValue {
                quantity: rule.quantity_name.clone(),
                label: tx.outcome_label.clone(),
            })?;
        let conserving = (value - rule.emitted_value).abs() <= CONSERVATION_TOL;
        if tx.weight() > DEAD_BRANCH_WEIGHT {
            if conserving {
                live += 1;
            } else {
                violations.push(ConservationViolation {
                    absorber_id: tx.absorber_id().to_string(),
                    outcome_label: tx.outcome_label.clone(),
                    weight: tx.weight(),
                    outcome_value: value,
                    emitted_value: rule.emitted_value,
                });
            }
        } else if !conserving {
            dead_branches.push(tx.absorber_id().to_string());
        }
    }
    if violations.is_empty() {
        Ok(ConservationReport::Clean {
            live,
            dead_branches,
        })
    } else {
        Err(Error::ConservationViolation {
            quantity: rule.quantity_name.clone(),
            violations,
        })
    }
}

/// Outcome of resolving one stage.
#[derive(Clone, Debug, PartialEq)]
pub struct StageResolution {
    pub status: StageStatus,
    /// Offer state handed to the next stage; `None` once a transaction forms.
    pub next_state: Option<StateVector>,
    pub confirmations: Vec<ConfirmationWave>,
}

fn total_weight(stage: &CascadeStage, cws: &[ConfirmationWave]) -> Result<f64> {
    let total: f64 = cws.iter().map(|cw| cw.weight).sum();
    if total > 1.0 + ARITHMETIC_TOL {
        return Err(Error::InvalidStage {
            stage_rank: stage.stage_rank,
            total_weight: total,
        });
    }
    Ok(total)
}

fn failure_residual(
    state: &StateVector,
    stage: &CascadeStage,
    cws: &[ConfirmationWave],
) -> Result<Option<StateVector>> {
    let absorbed: Vec<&Operator> = cws
        .iter()
        .filter_map(|cw| stage.absorber(&cw.absorber_id))
        .map(|a| &a.projector)
        .collect();
    complement_renormalize(&absorbed, state)
}

fn formed(stage: &CascadeStage, absorber_id: &str) -> StageStatus {
    let absorber = stage.absorber(absorber_id).expect("confirmation came from this stage");
    StageStatus::Formed {
        absorber_id: absorber.absorber_id.clone(),
        outcome_label: absorber.outcome_label.clone(),
    }
}

fn resolve_gathered<R: Rng + ?Sized>(
    state: &StateVector,
    stage: &CascadeStage,
    cws: Vec<ConfirmationWave>,
    rng: &mut R,
) -> Result<StageResolution> {
    if cws.is_empty() {
        return Ok(StageResolution {
            status: StageStatus::Failed,
            next_state: Some(state.clone()),
            confirmations: cws,
        });
    }
    total_weight(stage, &cws)?;

    // One uniform draw walks the cumulative weights in absorber-id order:
    // P(formation) = W, P(i | formation) = wᵢ / W.
    let u: f64 = rng.random();
    let mut cumulative = 0.0;
    for cw in &cws {
        cumulative += cw.weight;
        if u < cumulative {
            let status = formed(stage, &cw.absorber_id);
            return Ok(StageResolution {
                status,
                next_state: None,
                confirmations: cws,
            });
        }
    }
    match failure_residual(state, stage, &cws)? {
        Some(next) => Ok(StageResolution {
            status: StageStatus::Failed,
            next_state: Some(next),
            confirmations: cws,
        }),
        None => {
            // W rounds to just under 1 but nothing is left unabsorbed; the draw
            // landed in the rounding gap, so the last live transaction forms.
            let last = cws
                .iter()
                .rev()
                .find(|cw| cw.weight > 0.0)
                .expect("complete absorption implies a positive weight");
            let status = formed(stage, &last.absorber_id);
            Ok(StageResolution {
                status,
                next_state: None,
                confirmations: cws,
            })
        }
    }
}

/// Gathers confirmations for `stage` and resolves them with one weighted draw.
///
/// A stage with no available absorbers fails without consuming randomness and
/// leaves the state unchanged.
pub fn resolve_stage<R: Rng + ?Sized>(
    state: &StateVector,
    stage: &CascadeStage,
    history: &[StageRecord],
    rng: &mut R,
) -> Result<StageResolution> {
    state.require_normalized(ARITHMETIC_TOL)?;
    let cws = gather_confirmations(state, stage, history)?;
    resolve_gathered(state, stage, cws, rng)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum TrialResult {
    Actualized {
        outcome_label: String,
        absorber_id: String,
        stage_rank: usize,
    },
    NoTransaction,
}

impl TrialResult {
    /// Outcome label, or `"NoTransaction"`.
    pub fn label(&self) -> &str {
        match self {
            TrialResult::Actualized { outcome_label, .. } => outcome_label,
            TrialResult::NoTransaction => NO_TRANSACTION,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialOutcome {
    pub result: TrialResult,
    pub history: Vec<StageRecord>,
    /// The surviving offer state when no transaction formed.
    pub residual: Option<StateVector>,
}

impl TrialOutcome {
    pub fn formed_count(&self) -> usize {
        self.history.iter().filter(|r| !r.failed()).count()
    }
}

fn propagate(stage: &CascadeStage, state: StateVector) -> Result<StateVector> {
    match &stage.propagation {
        Some(u) => qcore::apply(u, &state),
        None => Ok(state),
    }
}

fn check_stage_conservation(
    cascade: &Cascade,
    state: &StateVector,
    stage: &CascadeStage,
    cws: &[ConfirmationWave],
) -> Result<Option<ConservationReport>> {
    let Some(rule) = &cascade.conservation else {
        return Ok(None);
    };
    if !rule.is_applicable(&cascade.settings) {
        return Ok(Some(ConservationReport::SkippedNotApplicable));
    }
    let offer = cascade.initial.with_state(state.clone());
    let txs = form_incipient(&offer, cws, stage)?;
    assert_conservation(&txs, rule, &cascade.settings).map(Some)
}

/// Runs one trial: stages in ascending rank until a transaction forms.
pub fn resolve_cascade<R: Rng + ?Sized>(cascade: &Cascade, rng: &mut R) -> Result<TrialOutcome> {
    let mut state = cascade.initial.state.clone();
    let mut history: Vec<StageRecord> = Vec::with_capacity(cascade.stages.len());
    for stage in &cascade.stages {
        state = propagate(stage, state)?;
        state.require_normalized(ARITHMETIC_TOL)?;
        let cws = gather_confirmations(&state, stage, &history)?;
        let conservation = check_stage_conservation(cascade, &state, stage, &cws)?;
        let resolution = resolve_gathered(&state, stage, cws, rng)?;
        let record = StageRecord {
            stage_rank: stage.stage_rank,
            status: resolution.status,
            confirmations: resolution.confirmations,
            conservation,
        };
        if let StageStatus::Formed {
            absorber_id,
            outcome_label,
        } = &record.status
        {
            let result = TrialResult::Actualized {
                outcome_label: outcome_label.clone(),
                absorber_id: absorber_id.clone(),
                stage_rank: stage.stage_rank,
            };
            history.push(record);
            return Ok(TrialOutcome {
                result,
                history,
                residual: None,
            });
        }
        history.push(record);
        state = resolution.next_state.expect("failed stage hands on a state");
    }
    Ok(TrialOutcome {
        result: TrialResult::NoTransaction,
        history,
        residual: Some(state),
    })
}

/// Exact per-outcome formation probabilities of a cascade.
#[derive(Clone, Debug, PartialEq)]
pub struct OutcomeDistribution {
    /// Probability per outcome label, summed over absorbers sharing a label.
    pub outcomes: BTreeMap<String, f64>,
    /// Probability per stage rank that the trial reaches and forms at it.
    pub stage_formation: BTreeMap<usize, f64>,
    pub no_transaction: f64,
}

impl OutcomeDistribution {
    pub fn probability(&self, label: &str) -> f64 {
        if label == NO_TRANSACTION {
            return self.no_transaction;
        }
        self.outcomes.get(label).copied().unwrap_or(0.0)
    }

    pub fn total_formation(&self) -> f64 {
        self.stage_formation.values().sum()
    }
}

/// Computes the outcome distribution by stage recursion, without sampling.
///
/// A trial only continues past a stage that failed, so the history seen by
/// each stage is fully determined and contingent absorbers are evaluated
/// against it exactly as during sampling.
pub fn outcome_distribution(cascade: &Cascade) -> Result<OutcomeDistribution> {
    let mut outcomes = BTreeMap::new();
    let mut stage_formation = BTreeMap::new();
    let mut reach = 1.0;
    let mut state = Some(cascade.initial.state.clone());
    let mut history: Vec<StageRecord> = Vec::new();
    for stage in &cascade.stages {
        let Some(current) = state.take() else {
            break;
        };
        let current = propagate(stage, current)?;
        let cws = gather_confirmations(&current, stage, &history)?;
        let total = total_weight(stage, &cws)?.min(1.0);
        for cw in &cws {
            let label = &stage.absorber(&cw.absorber_id).expect("own absorber").outcome_label;
            *outcomes.entry(label.clone()).or_insert(0.0) += reach * cw.weight;
        }
        stage_formation.insert(stage.stage_rank, reach * total);
        reach *= 1.0 - total;
        state = if cws.is_empty() {
            Some(current)
        } else {
            failure_residual(&current, stage, &cws)?
        };
        if state.is_none() {
            reach = 0.0;
        }
        history.push(StageRecord {
            stage_rank: stage.stage_rank,
            status: StageStatus::Failed,
            confirmations: cws,
            conservation: None,
        });
    }
    Ok(OutcomeDistribution {
        outcomes,
        stage_formation,
        no_transaction: reach,
    })
}

/// Site-local spin space: `+` and `−` along z.
pub fn spin_space() -> Space {
    Space::new(["+", "-"]).expect("static labels are unique")
}

/// Spin eigenstate along the direction at `angle` from z in the x–z plane.
pub fn spin_state(angle: f64, up: bool) -> StateVector {
    let (s, c) = (angle / 2.0).sin_cos();
    let amps = if up {
        vec![Complex::new(c, 0.0), Complex::new(s, 0.0)]
    } else {
        vec![Complex::new(-s, 0.0), Complex::new(c, 0.0)]
    };
    StateVector::new(spin_space(), amps).expect("two finite amplitudes")
}

/// The four product projectors `Pₐ(±) ⊗ P_b(±)` for a two-site spin
/// measurement, all at one joint absorption event so they share one stage.
pub fn joint_absorbers(angle_a: f64, angle_b: f64, event: SpacetimeEvent) -> Result<Vec<Absorber>> {
    let signs = [(true, '+'), (false, '-')];
    let mut out = Vec::with_capacity(4);
    for (ua, sa) in signs {
        let pa = Operator::rank_one(&spin_state(angle_a, ua))?;
        for (ub, sb) in signs {
            let pb = Operator::rank_one(&spin_state(angle_b, ub))?;
            let projector = pa.tensor(&pb)?;
            out.push(Absorber::new(
                format!("A{sa}B{sb}"),
                format!("{sa}{sb}"),
                projector,
                event,
            )?);
        }
    }
    Ok(out)
}
