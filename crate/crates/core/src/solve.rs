//! End-to-end solvers: the DWOA/matching block-coordinate scheme, the three
//! comparison baselines, and an exhaustive oracle for small instances.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dwoa::{self, DwoaParams};
use crate::error::{Error, Result};
use crate::eval::{Evaluation, LinkTable, PenaltyWeights};
use crate::link::AssignmentMatrix;
use crate::matching::{self, PreferenceProfile};
use crate::scenario::Scenario;
use crate::semantic::LengthVector;
use crate::serde_float;

/// Number of random length vectors tried by the greedy baselines.
pub const DEFAULT_GREEDY_BUDGET: usize = 50;

/// Largest instance the oracle will enumerate.
pub const ORACLE_MAX_SATELLITES: usize = 4;
pub const ORACLE_MAX_SUBCARRIERS: usize = 5;
pub const ORACLE_MAX_RATIOS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "BCD")]
    Bcd,
    OnlyWhale,
    MatchingOnly,
    Random,
    Oracle,
}

impl Method {
    pub const HEURISTICS: [Method; 4] = [Method::Bcd, Method::OnlyWhale, Method::MatchingOnly, Method::Random];

    pub fn label(self) -> &'static str {
        match self {
            Method::Bcd => "BCD",
            Method::OnlyWhale => "OnlyWhale",
            Method::MatchingOnly => "MatchingOnly",
            Method::Random => "Random",
            Method::Oracle => "Oracle",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bcd" => Ok(Method::Bcd),
            "onlywhale" => Ok(Method::OnlyWhale),
            "matchingonly" => Ok(Method::MatchingOnly),
            "random" => Ok(Method::Random),
            "oracle" => Ok(Method::Oracle),
            other => Err(Error::Domain(format!("unknown method `{other}`"))),
        }
    }
}

/// Per-satellite outcome inside a [`SolutionReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SatelliteResult {
    pub satellite_id: usize,
    pub subcarrier_id: Option<usize>,
    pub ratio_index: usize,
    pub compression_ratio: String,
    pub compression_ratio_value: f64,
    pub length_bits: u64,
    pub rate_bps: f64,
    #[serde(with = "serde_float")]
    pub latency_s: f64,
    /// `None` when unassigned.
    pub psnr_db: Option<f64>,
    pub threshold_db: f64,
    pub window_s: f64,
    pub meets_psnr: bool,
    pub meets_window: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Telemetry {
    pub dwoa_iterations: usize,
    pub fitness_evaluations: usize,
    pub proposals: usize,
    pub runtime_s: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionReport {
    pub method: Method,
    pub lengths: LengthVector,
    pub assignment: AssignmentMatrix,
    pub satellites: Vec<SatelliteResult>,
    /// Average latency, seconds.
    #[serde(with = "serde_float")]
    pub objective_s: f64,
    /// Objective plus penalty terms at the DWOA weights.
    #[serde(with = "serde_float")]
    pub penalized_fitness: f64,
    pub feasible: bool,
    pub telemetry: Telemetry,
}

impl SolutionReport {
    /// Assembles a report, recomputing every figure from the scenario.
    pub fn build(
        method: Method,
        scenario: &Scenario,
        lengths: LengthVector,
        assignment: AssignmentMatrix,
        weights: PenaltyWeights,
        telemetry: Telemetry,
    ) -> Result<Self> {
        let table = LinkTable::new(scenario)?;
        Self::from_table(method, scenario, &table, lengths, assignment, weights, telemetry)
    }

    fn from_table(
        method: Method,
        scenario: &Scenario,
        table: &LinkTable,
        lengths: LengthVector,
        assignment: AssignmentMatrix,
        weights: PenaltyWeights,
        telemetry: Telemetry,
    ) -> Result<Self> {
        crate::link::check_dims(&lengths, &assignment, scenario)?;
        assignment.validate()?;
        let eval = table.evaluate_lengths(&lengths, &assignment, weights);
        let objective_s = crate::link::average_latency(&lengths, &assignment, scenario)?;
        let satellites = (0..scenario.k())
            .map(|k| {
                let idx = lengths.index(k);
                let ratio = scenario.ratio(idx)?;
                let u = assignment.subcarrier_of(k);
                let latency_s = table.latency(k, u, idx);
                let psnr_db = u.map(|u| table.psnr(k, u, idx));
                let threshold_db = table.threshold(k);
                let window_s = table.window(k);
                Ok(SatelliteResult {
                    satellite_id: k,
                    subcarrier_id: u,
                    ratio_index: idx,
                    compression_ratio: ratio.to_string(),
                    compression_ratio_value: ratio.value(),
                    length_bits: table.bits(k, idx),
                    rate_bps: u.map_or(0.0, |u| table.rate(k, u)),
                    latency_s,
                    psnr_db,
                    threshold_db,
                    window_s,
                    meets_psnr: psnr_db.is_some_and(|p| p >= threshold_db),
                    meets_window: latency_s <= window_s,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let feasible = satellites
            .iter()
            .all(|s| s.subcarrier_id.is_some() && s.meets_psnr && s.meets_window);
        debug_assert_eq!(feasible, eval.feasible);
        Ok(Self {
            method,
            lengths,
            assignment,
            satellites,
            objective_s,
            penalized_fitness: eval.fitness,
            feasible,
            telemetry,
        })
    }

    /// Mean compression ratio across satellites.
    pub fn mean_compression_ratio(&self) -> f64 {
        self.satellites.iter().map(|s| s.compression_ratio_value).sum::<f64>() / self.satellites.len() as f64
    }
}

/// BCD options beyond the DWOA parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct BcdOptions {
    pub dwoa: DwoaParams,
    /// Matching + DWOA passes after the initial DWOA run.
    pub rounds: usize,
}

impl Default for BcdOptions {
    fn default() -> Self {
        Self {
            dwoa: DwoaParams::default(),
            rounds: 1,
        }
    }
}

/// DWOA on the index-order assignment, matching on those lengths, then DWOA
/// again on the matched assignment.
pub fn solve_bcd(scenario: &Scenario, params: &DwoaParams) -> Result<SolutionReport> {
    solve_bcd_with(
        scenario,
        &BcdOptions {
            dwoa: params.clone(),
            rounds: 1,
        },
    )
}

pub fn solve_bcd_with(scenario: &Scenario, opts: &BcdOptions) -> Result<SolutionReport> {
    let start = Instant::now();
    opts.dwoa.validate()?;
    let table = LinkTable::new(scenario)?;
    let weights = opts.dwoa.weights();

    let mut assignment = AssignmentMatrix::identity(scenario.k(), scenario.u());
    let first = dwoa::run(&table, assignment.as_map(), &opts.dwoa, &[]);
    let mut lengths = first.lengths;
    let mut current = first.evaluation;
    let mut iterations = first.iterations;
    let mut evaluations = first.evaluations;
    let mut proposals = 0;

    for round in 0..opts.rounds {
        let profile = PreferenceProfile::from_table(&table, lengths.indices());
        let outcome = matching::run_deferred_acceptance(&profile, scenario.u());
        proposals += outcome.proposals;
        let matched = AssignmentMatrix::from_map(&outcome.to_map(scenario.k()), scenario.u())?;

        let params = opts.dwoa.with_seed(opts.dwoa.rng_seed.wrapping_add(round as u64 + 1));
        let rerun = dwoa::run(&table, matched.as_map(), &params, std::slice::from_ref(&lengths));
        iterations += rerun.iterations;
        evaluations += rerun.evaluations;

        // Block updates are kept only when they do not worsen the objective.
        if !worse(&rerun.evaluation, &current) {
            assignment = matched;
            lengths = rerun.lengths;
            current = rerun.evaluation;
        }
    }

    SolutionReport::from_table(
        Method::Bcd,
        scenario,
        &table,
        lengths,
        assignment,
        weights,
        Telemetry {
            dwoa_iterations: iterations,
            fitness_evaluations: evaluations,
            proposals,
            runtime_s: start.elapsed().as_secs_f64(),
            seed: opts.dwoa.rng_seed,
        },
    )
}

/// Feasible beats infeasible; otherwise the usual ranking.
fn worse(a: &Evaluation, b: &Evaluation) -> bool {
    match (a.feasible, b.feasible) {
        (false, true) => true,
        (true, false) => false,
        _ => b.better_than(a),
    }
}

/// Uniformly random injective satellite -> subcarrier map.
pub fn random_assignment<R: Rng + ?Sized>(k: usize, u: usize, rng: &mut R) -> AssignmentMatrix {
    let mut subs: Vec<usize> = (0..u).collect();
    subs.shuffle(rng);
    let mut sats: Vec<usize> = (0..k).collect();
    sats.shuffle(rng);
    let mut map = vec![None; k];
    for (&s, &c) in sats.iter().zip(&subs) {
        map[s] = Some(c);
    }
    AssignmentMatrix::from_map(&map, u).expect("injective by construction")
}

/// Best of `budget` uniformly drawn length vectors under `map`.
fn greedy_lengths<R: Rng + ?Sized>(
    table: &LinkTable,
    map: &[Option<usize>],
    weights: PenaltyWeights,
    budget: usize,
    rng: &mut R,
) -> (Vec<usize>, Evaluation) {
    let n = table.ratios();
    let mut best: Option<(Vec<usize>, Evaluation)> = None;
    for _ in 0..budget.max(1) {
        let idx: Vec<usize> = (0..table.satellites()).map(|_| rng.gen_range(0..n)).collect();
        let e = table.evaluate(&idx, map, weights);
        if best.as_ref().is_none_or(|(_, b)| e.better_than(b)) {
            best = Some((idx, e));
        }
    }
    best.expect("budget is at least one")
}

/// DWOA lengths on a random assignment.
pub fn baseline_only_whale(scenario: &Scenario, params: &DwoaParams, seed: u64) -> Result<SolutionReport> {
    let start = Instant::now();
    params.validate()?;
    let table = LinkTable::new(scenario)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let assignment = random_assignment(scenario.k(), scenario.u(), &mut rng);
    let out = dwoa::run(&table, assignment.as_map(), params, &[]);
    SolutionReport::from_table(
        Method::OnlyWhale,
        scenario,
        &table,
        out.lengths,
        assignment,
        params.weights(),
        Telemetry {
            dwoa_iterations: out.iterations,
            fitness_evaluations: out.evaluations,
            proposals: 0,
            runtime_s: start.elapsed().as_secs_f64(),
            seed,
        },
    )
}

/// Random-sampling length search on the index-order assignment, then
/// deferred-acceptance subcarrier matching for those lengths.
pub fn baseline_matching_only(
    scenario: &Scenario,
    weights: PenaltyWeights,
    seed: u64,
    budget: usize,
) -> Result<SolutionReport> {
    let start = Instant::now();
    let table = LinkTable::new(scenario)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let initial = AssignmentMatrix::identity(scenario.k(), scenario.u());
    let (idx, _) = greedy_lengths(&table, initial.as_map(), weights, budget, &mut rng);
    let profile = PreferenceProfile::from_table(&table, &idx);
    let outcome = matching::run_deferred_acceptance(&profile, scenario.u());
    let assignment = AssignmentMatrix::from_map(&outcome.to_map(scenario.k()), scenario.u())?;
    SolutionReport::from_table(
        Method::MatchingOnly,
        scenario,
        &table,
        LengthVector::from_raw(idx),
        assignment,
        weights,
        Telemetry {
            dwoa_iterations: 0,
            fitness_evaluations: budget.max(1),
            proposals: outcome.proposals,
            runtime_s: start.elapsed().as_secs_f64(),
            seed,
        },
    )
}

/// Random assignment and random-sampling length search.
pub fn baseline_random(scenario: &Scenario, weights: PenaltyWeights, seed: u64, budget: usize) -> Result<SolutionReport> {
    let start = Instant::now();
    let table = LinkTable::new(scenario)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let assignment = random_assignment(scenario.k(), scenario.u(), &mut rng);
    let (idx, _) = greedy_lengths(&table, assignment.as_map(), weights, budget, &mut rng);
    SolutionReport::from_table(
        Method::Random,
        scenario,
        &table,
        LengthVector::from_raw(idx),
        assignment,
        weights,
        Telemetry {
            dwoa_iterations: 0,
            fitness_evaluations: budget.max(1),
            proposals: 0,
            runtime_s: start.elapsed().as_secs_f64(),
            seed,
        },
    )
}

/// Exhaustive search over injective assignments and length vectors.
///
/// Returns the feasible pair of least average latency; when none exists, the
/// pair of least penalized fitness, flagged infeasible.
pub fn brute_force_oracle(scenario: &Scenario, weights: PenaltyWeights) -> Result<SolutionReport> {
    let (k, u, n) = (scenario.k(), scenario.u(), scenario.crs.len());
    if k > ORACLE_MAX_SATELLITES || u > ORACLE_MAX_SUBCARRIERS || n > ORACLE_MAX_RATIOS {
        return Err(Error::SizeGuard(format!(
            "K={k}, U={u}, |CRS|={n}; limits are {ORACLE_MAX_SATELLITES}, {ORACLE_MAX_SUBCARRIERS}, {ORACLE_MAX_RATIOS}"
        )));
    }
    let start = Instant::now();
    let table = LinkTable::new(scenario)?;

    let maps = injective_maps(k, u);
    let mut best_feasible: Option<(f64, usize, Vec<usize>)> = None;
    let mut best_any: Option<(Evaluation, usize, Vec<usize>)> = None;
    let mut idx = vec![0usize; k];
    let mut count = 0usize;
    for (m, map) in maps.iter().enumerate() {
        idx.iter_mut().for_each(|x| *x = 0);
        loop {
            let e = table.evaluate(&idx, map, weights);
            count += 1;
            if e.feasible && best_feasible.as_ref().is_none_or(|b| e.average_latency < b.0) {
                best_feasible = Some((e.average_latency, m, idx.clone()));
            }
            if best_any.as_ref().is_none_or(|b| e.better_than(&b.0)) {
                best_any = Some((e, m, idx.clone()));
            }
            if !odometer(&mut idx, n) {
                break;
            }
        }
    }
    let (m, best_idx) = match (best_feasible, best_any) {
        (Some((_, m, i)), _) => (m, i),
        (None, Some((_, m, i))) => (m, i),
        (None, None) => unreachable!("at least one candidate is enumerated"),
    };
    let assignment = AssignmentMatrix::from_map(&maps[m], u)?;
    SolutionReport::from_table(
        Method::Oracle,
        scenario,
        &table,
        LengthVector::from_raw(best_idx),
        assignment,
        weights,
        Telemetry {
            dwoa_iterations: 0,
            fitness_evaluations: count,
            proposals: 0,
            runtime_s: start.elapsed().as_secs_f64(),
            seed: 0,
        },
    )
}

/// Every map assigning `min(k, u)` satellites to distinct subcarriers. When
/// `k > u` the unassigned satellites range over all subsets of size `k - u`.
fn injective_maps(k: usize, u: usize) -> Vec<Vec<Option<usize>>> {
    fn rec(k: usize, u: usize, at: usize, used: &mut [bool], cur: &mut Vec<Option<usize>>, free: usize, out: &mut Vec<Vec<Option<usize>>>) {
        if at == k {
            out.push(cur.clone());
            return;
        }
        for c in 0..u {
            if !used[c] {
                used[c] = true;
                cur.push(Some(c));
                rec(k, u, at + 1, used, cur, free, out);
                cur.pop();
                used[c] = false;
            }
        }
        let assigned = cur.iter().filter(|x| x.is_some()).count();
        let unassigned = cur.len() - assigned;
        if unassigned < free {
            cur.push(None);
            rec(k, u, at + 1, used, cur, free, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    let free = k.saturating_sub(u);
    rec(k, u, 0, &mut vec![false; u], &mut Vec::with_capacity(k), free, &mut out);
    out
}

/// Advances a base-`n` counter; false once it wraps.
fn odometer(idx: &mut [usize], n: usize) -> bool {
    for x in idx.iter_mut() {
        *x += 1;
        if *x < n {
            return true;
        }
        *x = 0;
    }
    false
}

/// Runs one method with the conventional seeds and budgets.
pub fn solve_method(scenario: &Scenario, method: Method, params: &DwoaParams, seed: u64) -> Result<SolutionReport> {
    let weights = params.weights();
    match method {
        Method::Bcd => solve_bcd(scenario, &params.with_seed(seed)),
        Method::OnlyWhale => baseline_only_whale(scenario, &params.with_seed(seed), seed),
        Method::MatchingOnly => baseline_matching_only(scenario, weights, seed, DEFAULT_GREEDY_BUDGET),
        Method::Random => baseline_random(scenario, weights, seed, DEFAULT_GREEDY_BUDGET),
        Method::Oracle => brute_force_oracle(scenario, weights),
    }
}
