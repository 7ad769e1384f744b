//! Discrete whale optimization over per-satellite compression-ratio indices.
//!
//! Agents move in a continuous box `[0, |CRS|-1]^K` and are rounded to the
//! nearest index for evaluation. Constraint violations enter the fitness as
//! weighted penalties.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{Evaluation, LinkTable, PenaltyWeights};
use crate::link::{self, AssignmentMatrix};
use crate::scenario::Scenario;
use crate::semantic::LengthVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DwoaParams {
    pub population_size: usize,
    pub max_iterations: usize,
    pub spiral_constant_b: f64,
    /// Seconds of penalty per dB below the PSNR threshold.
    pub psnr_penalty_weight: f64,
    /// Seconds of penalty per second beyond the access window.
    pub window_penalty_weight: f64,
    pub rng_seed: u64,
}

impl Default for DwoaParams {
    fn default() -> Self {
        Self {
            population_size: 30,
            max_iterations: 100,
            spiral_constant_b: 1.0,
            psnr_penalty_weight: 1e3,
            window_penalty_weight: 1e3,
            rng_seed: 0,
        }
    }
}

impl DwoaParams {
    pub fn validate(&self) -> Result<()> {
        if self.population_size < 2 {
            return Err(Error::invalid("dwoa.population_size", "must be at least 2"));
        }
        if self.max_iterations < 1 {
            return Err(Error::invalid("dwoa.max_iterations", "must be at least 1"));
        }
        if !self.spiral_constant_b.is_finite() {
            return Err(Error::invalid("dwoa.spiral_constant_b", "must be finite"));
        }
        for (name, w) in [
            ("dwoa.psnr_penalty_weight", self.psnr_penalty_weight),
            ("dwoa.window_penalty_weight", self.window_penalty_weight),
        ] {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::invalid(name, "must be positive"));
            }
        }
        Ok(())
    }

    pub fn weights(&self) -> PenaltyWeights {
        PenaltyWeights {
            psnr: self.psnr_penalty_weight,
            window: self.window_penalty_weight,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            rng_seed: seed,
            ..self.clone()
        }
    }
}

/// A search agent and the fitness of its rounded position.
#[derive(Debug, Clone, PartialEq)]
pub struct WhaleAgent {
    pub position: Vec<f64>,
    pub fitness: f64,
}

/// Random numbers consumed by one agent update.
#[derive(Debug, Clone, PartialEq)]
pub struct WhaleDraws {
    /// Selects encircling/search (`p < 0.5`) or spiral (`p >= 0.5`).
    pub p: f64,
    /// Per-coordinate draw giving `A = 2ar - a` and `C = 2r`.
    pub r: Vec<f64>,
    /// Shared scalar for the `|A| < 1` branch test.
    pub branch_r: f64,
    /// Spiral parameter in `[-1, 1]`.
    pub m: f64,
}

impl WhaleDraws {
    pub fn sample<R: Rng + ?Sized>(rng: &mut R, dims: usize) -> Self {
        let p = rng.gen::<f64>();
        let r = (0..dims).map(|_| rng.gen::<f64>()).collect();
        let branch_r = rng.gen::<f64>();
        let m = rng.gen_range(-1.0..=1.0);
        Self { p, r, branch_r, m }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WhaleMove {
    Encircle,
    Search,
    Spiral,
}

/// One position update with explicit draws. Coordinates are clamped to
/// `[0, upper]`.
pub fn apply_whale_update(
    position: &[f64],
    best: &[f64],
    peer: &[f64],
    a: f64,
    spiral_b: f64,
    upper: f64,
    draws: &WhaleDraws,
) -> (Vec<f64>, WhaleMove) {
    let toward = |target: &[f64]| -> Vec<f64> {
        target
            .iter()
            .zip(position)
            .zip(&draws.r)
            .map(|((&t, &x), &r)| {
                let coef_a = 2.0 * a * r - a;
                let coef_c = 2.0 * r;
                t - coef_a * (coef_c * t - x).abs()
            })
            .collect()
    };
    let (next, mv) = if draws.p < 0.5 {
        let branch_a = 2.0 * a * draws.branch_r - a;
        if branch_a.abs() < 1.0 {
            (toward(best), WhaleMove::Encircle)
        } else {
            (toward(peer), WhaleMove::Search)
        }
    } else {
        let m = draws.m;
        let scale = (spiral_b * m).exp() * (2.0 * std::f64::consts::PI * m).cos();
        let next = best
            .iter()
            .zip(position)
            .map(|(&b, &x)| (b - x).abs() * scale + b)
            .collect();
        (next, WhaleMove::Spiral)
    };
    (next.into_iter().map(|x| x.clamp(0.0, upper)).collect(), mv)
}

/// Samples draws from `rng` and applies [`apply_whale_update`].
pub fn whale_update<R: Rng + ?Sized>(
    agent: &WhaleAgent,
    best: &WhaleAgent,
    random_peer: &WhaleAgent,
    a: f64,
    params: &DwoaParams,
    upper: f64,
    rng: &mut R,
) -> Vec<f64> {
    let draws = WhaleDraws::sample(rng, agent.position.len());
    apply_whale_update(
        &agent.position,
        &best.position,
        &random_peer.position,
        a,
        params.spiral_constant_b,
        upper,
        &draws,
    )
    .0
}

/// Nearest index per coordinate, clamped to `[0, max_index]`.
pub fn round_position(position: &[f64], max_index: usize) -> Vec<usize> {
    position
        .iter()
        .map(|&x| (x.round().max(0.0) as usize).min(max_index))
        .collect()
}

/// Penalized objective of `lengths` under `assignment`.
pub fn fitness(
    lengths: &LengthVector,
    assignment: &AssignmentMatrix,
    scenario: &Scenario,
    params: &DwoaParams,
) -> Result<f64> {
    Ok(evaluate(lengths, assignment, scenario, params)?.fitness)
}

/// Full objective breakdown of `lengths` under `assignment`.
pub fn evaluate(
    lengths: &LengthVector,
    assignment: &AssignmentMatrix,
    scenario: &Scenario,
    params: &DwoaParams,
) -> Result<Evaluation> {
    link::check_dims(lengths, assignment, scenario)?;
    LengthVector::new(lengths.indices().to_vec(), &scenario.crs)?;
    let table = LinkTable::new(scenario)?;
    Ok(table.evaluate_lengths(lengths, assignment, params.weights()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DwoaOutcome {
    pub lengths: LengthVector,
    pub fitness: f64,
    pub evaluation: Evaluation,
    /// Every constraint holds and every satellite is assigned.
    pub feasible: bool,
    /// Best fitness after each iteration.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub evaluations: usize,
}

/// Runs DWOA for a fixed assignment.
pub fn optimize_lengths(
    scenario: &Scenario,
    assignment: &AssignmentMatrix,
    params: &DwoaParams,
) -> Result<DwoaOutcome> {
    optimize_lengths_warm(scenario, assignment, params, &[])
}

/// Like [`optimize_lengths`], with `warm` vectors replacing the first agents
/// of the initial population.
pub fn optimize_lengths_warm(
    scenario: &Scenario,
    assignment: &AssignmentMatrix,
    params: &DwoaParams,
    warm: &[LengthVector],
) -> Result<DwoaOutcome> {
    params.validate()?;
    let k = scenario.k();
    if assignment.satellites() != k || assignment.subcarriers() != scenario.u() {
        return Err(Error::Dimension(format!(
            "assignment is {}x{}, scenario is {k}x{}",
            assignment.satellites(),
            assignment.subcarriers(),
            scenario.u()
        )));
    }
    for w in warm {
        if w.len() != k {
            return Err(Error::Dimension(format!("warm start has {} entries for {k} satellites", w.len())));
        }
        LengthVector::new(w.indices().to_vec(), &scenario.crs)?;
    }
    let table = LinkTable::new(scenario)?;
    Ok(run(&table, assignment.as_map(), params, warm))
}

fn consider(idx: Vec<usize>, e: Evaluation, best_idx: &mut Vec<usize>, best_eval: &mut Option<Evaluation>) {
    if best_eval.as_ref().is_none_or(|b| e.better_than(b)) {
        *best_idx = idx;
        *best_eval = Some(e);
    }
}

pub(crate) fn run(
    table: &LinkTable,
    map: &[Option<usize>],
    params: &DwoaParams,
    warm: &[LengthVector],
) -> DwoaOutcome {
    let k = table.satellites();
    let max_index = table.ratios() - 1;
    let upper = max_index as f64;
    let weights = params.weights();
    let n = params.population_size;
    let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);

    let mut evaluations = 0usize;
    let mut eval = |pos: &[f64]| {
        let idx = round_position(pos, max_index);
        evaluations += 1;
        let e = table.evaluate(&idx, map, weights);
        (idx, e)
    };

    let mut positions: Vec<Vec<f64>> = (0..n)
        .map(|i| match warm.get(i) {
            Some(w) => w.indices().iter().map(|&x| x as f64).collect(),
            None => (0..k)
                .map(|_| {
                    let base = rng.gen_range(0..=max_index) as f64;
                    (base + rng.gen_range(-0.49..=0.49)).clamp(0.0, upper)
                })
                .collect(),
        })
        .collect();

    let mut best_idx = Vec::new();
    let mut best_eval: Option<Evaluation> = None;
    for pos in &positions {
        let (idx, e) = eval(pos);
        consider(idx, e, &mut best_idx, &mut best_eval);
    }

    let mut trace = Vec::with_capacity(params.max_iterations);
    for iter in 0..params.max_iterations {
        let a = 2.0 - 2.0 * iter as f64 / params.max_iterations as f64;
        let best_pos: Vec<f64> = best_idx.iter().map(|&x| x as f64).collect();
        let snapshot = positions.clone();
        for (i, pos) in positions.iter_mut().enumerate() {
            let mut j = rng.gen_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            let draws = WhaleDraws::sample(&mut rng, k);
            *pos = apply_whale_update(&snapshot[i], &best_pos, &snapshot[j], a, params.spiral_constant_b, upper, &draws).0;
        }
        for pos in &positions {
            let (idx, e) = eval(pos);
            consider(idx, e, &mut best_idx, &mut best_eval);
        }
        trace.push(best_eval.as_ref().map_or(f64::INFINITY, |e| e.fitness));
    }

    let evaluation = best_eval.expect("population is nonempty");
    DwoaOutcome {
        lengths: LengthVector::from_raw(best_idx),
        fitness: evaluation.fitness,
        evaluation,
        feasible: evaluation.feasible,
        trace,
        iterations: params.max_iterations,
        evaluations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::link::satellite_latencies;
    use crate::scenario::{generate_random_scenario, ScenarioRanges};

    fn draws(p: f64, r: Vec<f64>, branch_r: f64, m: f64) -> WhaleDraws {
        WhaleDraws { p, r, branch_r, m }
    }

    #[test]
    fn zero_coefficient_encircle_lands_on_best() {
        let (next, mv) = apply_whale_update(&[1.3, 7.9], &[4.0, 2.0], &[0.0, 0.0], 0.0, 1.0, 8.0, &draws(0.1, vec![0.7, 0.2], 0.4, 0.3));
        assert_eq!(mv, WhaleMove::Encircle);
        assert_eq!(next, vec![4.0, 2.0]);
    }

    #[test]
    fn spiral_at_zero_m() {
        let (next, mv) = apply_whale_update(&[1.0, 7.0], &[4.0, 2.0], &[0.0, 0.0], 1.5, 1.0, 8.0, &draws(0.9, vec![0.5, 0.5], 0.5, 0.0));
        assert_eq!(mv, WhaleMove::Spiral);
        // best + |best - x|, then clamped to 8.
        assert_eq!(next, vec![7.0, 7.0]);
    }

    #[test]
    fn scripted_trace_matches_hand_transcription() {
        // a = 1.5, b = 1.
        let x = [2.0, 6.5, 0.25];
        let best = [3.0, 5.0, 1.0];
        let peer = [8.0, 0.0, 4.0];

        // Encircle: branch A = 2*1.5*0.4 - 1.5 = -0.3.
        // coord 0: r=0.1, A=-1.2, C=0.2: 3 + 1.2*|0.6-2|   = 4.68
        // coord 1: r=0.9, A= 1.2, C=1.8: 5 - 1.2*|9-6.5|   = 2.0
        // coord 2: r=0.5, A= 0,   C=1:   1
        let d = draws(0.2, vec![0.1, 0.9, 0.5], 0.4, 0.0);
        let (next, mv) = apply_whale_update(&x, &best, &peer, 1.5, 1.0, 8.0, &d);
        assert_eq!(mv, WhaleMove::Encircle);
        let expect = [4.68, 2.0, 1.0];
        for (a, b) in next.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12, "{next:?}");
        }

        // Search: branch A = 2*1.5*0.9 - 1.5 = 1.2.
        // coord 0: r=0.1: 8 + 1.2*|1.6-2|  = 8.48 -> clamp 8
        // coord 1: r=0.9: 0 - 1.2*|0-6.5|  = -7.8 -> clamp 0
        // coord 2: r=0.5: 4 - 0            = 4
        let d = draws(0.2, vec![0.1, 0.9, 0.5], 0.9, 0.0);
        let (next, mv) = apply_whale_update(&x, &best, &peer, 1.5, 1.0, 8.0, &d);
        assert_eq!(mv, WhaleMove::Search);
        assert_eq!(next, vec![8.0, 0.0, 4.0]);

        // Spiral with m = 0.5: e^0.5 * cos(pi) = -1.6487212707001282.
        // coord 0: |3-2|*s + 3      = 1.3512787292998718
        // coord 1: |5-6.5|*s + 5    = 2.5269180939498077
        // coord 2: |1-0.25|*s + 1   = -0.2365409530250961 -> 0
        let d = draws(0.7, vec![0.1, 0.9, 0.5], 0.9, 0.5);
        let (next, mv) = apply_whale_update(&x, &best, &peer, 1.5, 1.0, 8.0, &d);
        assert_eq!(mv, WhaleMove::Spiral);
        let expect = [1.351_278_729_299_871_8, 2.526_918_093_949_807_7, 0.0];
        for (a, b) in next.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12, "{next:?}");
        }
    }

    #[test]
    fn rounding_idempotent() {
        let pos = [0.0, 3.0, 8.0];
        assert_eq!(round_position(&pos, 8), vec![0, 3, 8]);
        let again: Vec<f64> = round_position(&pos, 8).iter().map(|&x| x as f64).collect();
        assert_eq!(round_position(&again, 8), round_position(&pos, 8));
        assert_eq!(round_position(&[2.5, 2.49, 9.7, -0.2], 8), vec![3, 2, 8, 0]);
    }

    fn scenario_k1(threshold: f64) -> Scenario {
        let mut s = Scenario::with_defaults(1, 1).unwrap();
        s.satellites[0].psnr_threshold_db = threshold;
        s
    }

    #[test]
    fn fitness_without_violations_is_latency() {
        let s = scenario_k1(1.0);
        let a = AssignmentMatrix::identity(1, 1);
        let l = LengthVector::new(vec![0], &s.crs).unwrap();
        let p = DwoaParams::default();
        assert_eq!(fitness(&l, &a, &s, &p).unwrap(), link::average_latency(&l, &a, &s).unwrap());
    }

    #[test]
    fn fitness_single_psnr_penalty() {
        let mut s = scenario_k1(1.0);
        let predicted = s.predicted_psnr(0, 0, 0).unwrap();
        s.satellites[0].psnr_threshold_db = predicted + 2.0;
        let a = AssignmentMatrix::identity(1, 1);
        let l = LengthVector::new(vec![0], &s.crs).unwrap();
        let f = fitness(&l, &a, &s, &DwoaParams::default()).unwrap();
        let t = link::average_latency(&l, &a, &s).unwrap();
        assert!((f - (t + 2000.0)).abs() < 1e-9, "{f} vs {t}");
    }

    #[test]
    fn fitness_matches_term_by_term_oracle() {
        let p = DwoaParams::default();
        for seed in 0..20 {
            let mut s = generate_random_scenario(seed, 3, 4, &ScenarioRanges::default()).unwrap();
            s.satellites[1].access_window_s = 5.0;
            let a = AssignmentMatrix::from_map(&[Some(2), Some(0), Some(3)], 4).unwrap();
            let l = LengthVector::new(vec![seed as usize % 9, 8, 3], &s.crs).unwrap();
            let t = satellite_latencies(&l, &a, &s).unwrap();
            let mut expect = t.iter().sum::<f64>() / 3.0;
            for (k, &tk) in t.iter().enumerate() {
                let u = a.subcarrier_of(k).unwrap();
                let psnr = s.predicted_psnr(k, u, l.index(k)).unwrap();
                expect += 1e3 * (s.satellites[k].psnr_threshold_db - psnr).max(0.0);
                expect += 1e3 * (tk - s.satellites[k].access_window_s).max(0.0);
            }
            let f = fitness(&l, &a, &s, &p).unwrap();
            assert!((f - expect).abs() <= 1e-9 * expect.abs().max(1.0), "seed {seed}: {f} vs {expect}");
        }
    }

    #[test]
    fn unassigned_is_infinite() {
        let s = Scenario::with_defaults(2, 1).unwrap();
        let a = AssignmentMatrix::identity(2, 1);
        let l = LengthVector::uniform(2, 0);
        assert!(fitness(&l, &a, &s, &DwoaParams::default()).unwrap().is_infinite());
    }

    #[test]
    fn k1_picks_smallest_ratio_when_unconstrained() {
        let s = scenario_k1(1.0);
        let out = optimize_lengths(&s, &AssignmentMatrix::identity(1, 1), &DwoaParams::default()).unwrap();
        assert_eq!(out.lengths.indices(), &[0]);
        assert!(out.feasible);
    }

    #[test]
    fn k1_picks_largest_ratio_when_only_it_satisfies() {
        let mut s = scenario_k1(1.0);
        let top = s.predicted_psnr(0, 0, 8).unwrap();
        let below = s.predicted_psnr(0, 0, 7).unwrap();
        s.satellites[0].psnr_threshold_db = 0.5 * (top + below);
        let out = optimize_lengths(&s, &AssignmentMatrix::identity(1, 1), &DwoaParams::default()).unwrap();
        assert_eq!(out.lengths.indices(), &[8]);
        assert!(out.feasible);
    }

    #[test]
    fn trace_monotone_and_deterministic() {
        let s = generate_random_scenario(11, 5, 6, &ScenarioRanges::default()).unwrap();
        let a = AssignmentMatrix::identity(5, 6);
        let p = DwoaParams { rng_seed: 9, ..DwoaParams::default() };
        let x = optimize_lengths(&s, &a, &p).unwrap();
        let y = optimize_lengths(&s, &a, &p).unwrap();
        assert_eq!(x, y);
        assert_eq!(x.trace.len(), p.max_iterations);
        assert!(x.trace.windows(2).all(|w| w[1] <= w[0]));
        assert!(x.lengths.indices().iter().all(|&i| i < 9));
    }

    #[test]
    fn warm_start_never_worse() {
        let s = generate_random_scenario(2, 4, 4, &ScenarioRanges::default()).unwrap();
        let a = AssignmentMatrix::identity(4, 4);
        let p = DwoaParams { population_size: 2, max_iterations: 1, ..DwoaParams::default() };
        let warm = LengthVector::uniform(4, 8);
        let wf = fitness(&warm, &a, &s, &p).unwrap();
        let out = optimize_lengths_warm(&s, &a, &p, &[warm]).unwrap();
        assert!(out.fitness <= wf);
    }

    #[test]
    fn params_validated() {
        let s = scenario_k1(1.0);
        let a = AssignmentMatrix::identity(1, 1);
        let bad = DwoaParams { population_size: 1, ..DwoaParams::default() };
        assert!(optimize_lengths(&s, &a, &bad).is_err());
        let bad = DwoaParams { psnr_penalty_weight: 0.0, ..DwoaParams::default() };
        assert!(optimize_lengths(&s, &a, &bad).is_err());
    }
}
