//! Seeded Monte Carlo trial runner.
//!
//! Trial `i` of a run draws from its own ChaCha8 stream, keyed by
//! `(master_seed, i)`: the master seed fixes the key and the trial index
//! selects the stream. Counts are merged by label, which is commutative, so
//! a run yields the same table whether trials execute serially or across any
//! number of rayon workers.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::ops::Range;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::engine::{resolve_cascade, TrialOutcome};
use crate::scenarios::{self, epr_bohm, ScenarioDefinition};
use crate::{Error, Result, NO_TRANSACTION};

/// Standard errors allowed between observed and expected frequency.
pub const TOLERANCE_SIGMAS: f64 = 4.0;

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub scenario_name: String,
    pub trials: u64,
    pub master_seed: u64,
    pub overrides: BTreeMap<String, f64>,
}

impl RunConfig {
    pub fn new(scenario_name: impl Into<String>, trials: u64, master_seed: u64) -> Self {
        RunConfig {
            scenario_name: scenario_name.into(),
            trials,
            master_seed,
            overrides: BTreeMap::new(),
        }
    }

    pub fn with_param(mut self, name: impl Into<String>, value: f64) -> Self {
        self.overrides.insert(name.into(), value);
        self
    }
}

/// The random stream for one trial.
pub fn trial_rng(master_seed: u64, trial_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial_index);
    rng
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencyTable {
    pub counts: BTreeMap<String, u64>,
    pub trials: u64,
}

impl FrequencyTable {
    /// A zeroed table with a row for every label plus NoTransaction.
    pub fn empty<I, S>(labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut counts: BTreeMap<String, u64> =
            labels.into_iter().map(|l| (l.into(), 0)).collect();
        counts.insert(NO_TRANSACTION.to_string(), 0);
        FrequencyTable { counts, trials: 0 }
    }

    pub fn record(&mut self, label: &str) {
        match self.counts.get_mut(label) {
            Some(n) => *n += 1,
            None => {
                self.counts.insert(label.to_string(), 1);
            }
        }
        self.trials += 1;
    }

    pub fn merge(mut self, other: FrequencyTable) -> FrequencyTable {
        for (label, n) in other.counts {
            *self.counts.entry(label).or_insert(0) += n;
        }
        self.trials += other.trials;
        self
    }

    pub fn count(&self, label: &str) -> u64 {
        self.counts.get(label).copied().unwrap_or(0)
    }

    pub fn frequency(&self, label: &str) -> f64 {
        if self.trials == 0 {
            return 0.0;
        }
        self.count(label) as f64 / self.trials as f64
    }

    pub fn frequencies(&self) -> BTreeMap<String, f64> {
        self.counts
            .keys()
            .map(|k| (k.clone(), self.frequency(k)))
            .collect()
    }
}

fn outcome_labels(def: &ScenarioDefinition) -> BTreeSet<String> {
    def.cascade
        .stages()
        .iter()
        .flat_map(|s| s.absorbers())
        .map(|a| a.outcome_label().to_string())
        .chain(def.expected.keys().cloned())
        .collect()
}

/// Resolves the trials with indices in `range`, one at a time.
pub fn trial_outcomes<'a>(
    def: &'a ScenarioDefinition,
    master_seed: u64,
    range: Range<u64>,
) -> impl Iterator<Item = Result<TrialOutcome>> + 'a {
    range.map(move |i| resolve_cascade(&def.cascade, &mut trial_rng(master_seed, i)))
}

pub fn run_range_serial(
    def: &ScenarioDefinition,
    master_seed: u64,
    range: Range<u64>,
) -> Result<FrequencyTable> {
    let mut table = FrequencyTable::empty(outcome_labels(def));
    for outcome in trial_outcomes(def, master_seed, range) {
        table.record(outcome?.result.label());
    }
    Ok(table)
}

#[cfg(feature = "parallel")]
pub fn run_range_parallel(
    def: &ScenarioDefinition,
    master_seed: u64,
    range: Range<u64>,
) -> Result<FrequencyTable> {
    use rayon::prelude::*;

    let labels = outcome_labels(def);
    let zero = || FrequencyTable::empty(labels.iter().cloned());
    range
        .into_par_iter()
        .try_fold(zero, |mut table, i| {
            let outcome = resolve_cascade(&def.cascade, &mut trial_rng(master_seed, i))?;
            table.record(outcome.result.label());
            Ok::<_, Error>(table)
        })
        .try_reduce(zero, |a, b| Ok(a.merge(b)))
}

/// Runs trials `0..trials`, in parallel when the `parallel` feature is on.
pub fn run_definition(def: &ScenarioDefinition, trials: u64, master_seed: u64) -> Result<FrequencyTable> {
    if trials == 0 {
        return Err(Error::NoTrials);
    }
    run_range(def, master_seed, 0..trials)
}

fn run_range(def: &ScenarioDefinition, master_seed: u64, range: Range<u64>) -> Result<FrequencyTable> {
    #[cfg(feature = "parallel")]
    {
        run_range_parallel(def, master_seed, range)
    }
    #[cfg(not(feature = "parallel"))]
    {
        run_range_serial(def, master_seed, range)
    }
}

pub fn run(config: &RunConfig) -> Result<FrequencyTable> {
    let def = scenarios::build(&config.scenario_name, &config.overrides)?;
    run_definition(&def, config.trials, config.master_seed)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub outcome: String,
    pub expected: f64,
    pub observed: f64,
    pub count: u64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
    pub pass: bool,
    /// Pearson statistic over rows with nonzero expectation; informational only.
    pub chi_square: f64,
}

impl ComparisonReport {
    pub fn row(&self, outcome: &str) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.outcome == outcome)
    }
}

/// `4·√(p(1−p)/N)`.
pub fn tolerance(p: f64, trials: u64) -> f64 {
    TOLERANCE_SIGMAS * (p * (1.0 - p) / trials as f64).sqrt()
}

/// Per-outcome check of observed frequencies against expected probabilities.
///
/// Outcomes missing from `expected` count as probability 0, and a row with
/// probability 0 passes only if it was never observed.
pub fn compare(table: &FrequencyTable, expected: &BTreeMap<String, f64>) -> ComparisonReport {
    let n = table.trials;
    let outcomes: BTreeSet<&String> = table.counts.keys().chain(expected.keys()).collect();
    let mut chi_square = 0.0;
    let rows: Vec<ComparisonRow> = outcomes
        .into_iter()
        .map(|outcome| {
            let p = expected.get(outcome).copied().unwrap_or(0.0);
            let count = table.count(outcome);
            let observed = table.frequency(outcome);
            let tol = if n == 0 { 0.0 } else { tolerance(p, n) };
            let pass = if p == 0.0 {
                count == 0
            } else {
                n > 0 && (observed - p).abs() <= tol
            };
            if p > 0.0 && n > 0 {
                let e = p * n as f64;
                chi_square += (count as f64 - e).powi(2) / e;
            }
            ComparisonRow {
                outcome: outcome.clone(),
                expected: p,
                observed,
                count,
                tolerance: tol,
                pass,
            }
        })
        .collect();
    ComparisonReport {
        pass: rows.iter().all(|r| r.pass),
        rows,
        chi_square,
    }
}

/// Runs a scenario definition and compares it against its expected table.
pub fn run_and_compare(
    def: &ScenarioDefinition,
    trials: u64,
    master_seed: u64,
) -> Result<(FrequencyTable, ComparisonReport)> {
    let table = run_definition(def, trials, master_seed)?;
    let report = compare(&table, &def.expected_with_no_transaction());
    Ok((table, report))
}

/// `(N_same − N_diff) / N` for a two-site spin table.
pub fn correlation(table: &FrequencyTable) -> f64 {
    let same = table.count("++") + table.count("--");
    let diff = table.count("+-") + table.count("-+");
    (same as f64 - diff as f64) / table.trials as f64
}

/// The CHSH settings `a = 0, a′ = π/2, b = π/4, b′ = 3π/4`.
pub const CANONICAL_CHSH: ChshAngles = ChshAngles {
    a: 0.0,
    a_prime: PI / 2.0,
    b: PI / 4.0,
    b_prime: 3.0 * PI / 4.0,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChshAngles {
    pub a: f64,
    pub a_prime: f64,
    pub b: f64,
    pub b_prime: f64,
}

impl ChshAngles {
    /// Setting pairs in the order `(a,b), (a,b′), (a′,b), (a′,b′)`.
    pub fn pairs(&self) -> [(&'static str, f64, f64); 4] {
        [
            ("a,b", self.a, self.b),
            ("a,b'", self.a, self.b_prime),
            ("a',b", self.a_prime, self.b),
            ("a',b'", self.a_prime, self.b_prime),
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChshSetting {
    pub setting: String,
    pub angle_a: f64,
    pub angle_b: f64,
    pub correlation: f64,
    pub table: FrequencyTable,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChshResult {
    pub s: f64,
    pub settings: Vec<ChshSetting>,
}

/// CHSH estimate at arbitrary angles.
///
/// Setting `k` uses trial indices `k·N .. (k+1)·N` of the master seed, so the
/// four runs never share a stream.
pub fn chsh_with_angles(master_seed: u64, trials_per_setting: u64, angles: ChshAngles) -> Result<ChshResult> {
    if trials_per_setting == 0 {
        return Err(Error::NoTrials);
    }
    let mut settings = Vec::with_capacity(4);
    for (k, (name, a, b)) in angles.pairs().into_iter().enumerate() {
        let def = epr_bohm(a, b)?;
        let start = k as u64 * trials_per_setting;
        let table = run_range(&def, master_seed, start..start + trials_per_setting)?;
        settings.push(ChshSetting {
            setting: name.to_string(),
            angle_a: a,
            angle_b: b,
            correlation: correlation(&table),
            table,
        });
    }
    let e: Vec<f64> = settings.iter().map(|s| s.correlation).collect();
    let s = (e[0] - e[1] + e[2] + e[3]).abs();
    Ok(ChshResult { s, settings })
}

pub fn chsh_run(master_seed: u64, trials_per_setting: u64) -> Result<ChshResult> {
    chsh_with_angles(master_seed, trials_per_setting, CANONICAL_CHSH)
}
