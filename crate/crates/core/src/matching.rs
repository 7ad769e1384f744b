//! One-to-one satellite/subcarrier matching by deferred acceptance.
//!
//! Satellites rank subcarriers by achievable rate, restricted to those on
//! which their current payload fits the access window. Subcarriers rank
//! satellites by rate. Equal rates are broken toward the lower index on both
//! sides, so every preference order is strict.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::LinkTable;
use crate::link::AssignmentMatrix;
use crate::scenario::Scenario;
use crate::semantic::LengthVector;

/// Both sides' preferences for one length vector.
#[derive(Debug, Clone)]
pub struct PreferenceProfile {
    /// Feasible subcarriers per satellite, best first.
    pub satellite_lists: Vec<Vec<usize>>,
    rates: Vec<Vec<f64>>,
    feasible: Vec<Vec<bool>>,
}

impl PreferenceProfile {
    pub fn new(scenario: &Scenario, lengths: &LengthVector) -> Result<Self> {
        check_lengths(scenario, lengths)?;
        Ok(Self::from_table(&LinkTable::new(scenario)?, lengths.indices()))
    }

    pub(crate) fn from_table(table: &LinkTable, indices: &[usize]) -> Self {
        let (k, u) = (table.satellites(), table.subcarriers());
        let rates: Vec<Vec<f64>> = (0..k).map(|s| (0..u).map(|c| table.rate(s, c)).collect()).collect();
        let feasible: Vec<Vec<bool>> = (0..k)
            .map(|s| {
                (0..u)
                    .map(|c| rates[s][c] > 0.0 && table.fits_window(s, c, indices[s]))
                    .collect()
            })
            .collect();
        Self::from_rates(rates, feasible)
    }

    /// Profile from an explicit `K x U` rate matrix and acceptability mask.
    pub fn from_rates(rates: Vec<Vec<f64>>, feasible: Vec<Vec<bool>>) -> Self {
        let satellite_lists = rates
            .iter()
            .zip(&feasible)
            .map(|(row, ok)| {
                let mut list: Vec<usize> = (0..row.len()).filter(|&c| ok[c] && row[c] > 0.0).collect();
                list.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
                list
            })
            .collect();
        Self {
            satellite_lists,
            rates,
            feasible,
        }
    }

    /// Satellite preference score: rate if the window fits, else 0.
    pub fn satellite_score(&self, k: usize, u: usize) -> f64 {
        if self.feasible[k][u] {
            self.rates[k][u]
        } else {
            0.0
        }
    }

    /// Subcarrier preference score.
    pub fn subcarrier_score(&self, u: usize, k: usize) -> f64 {
        self.rates[k][u]
    }

    pub fn is_feasible(&self, k: usize, u: usize) -> bool {
        self.feasible[k][u]
    }

    /// Does satellite `k` strictly prefer `u` over `current` (None = unmatched)?
    pub fn satellite_prefers(&self, k: usize, u: usize, current: Option<usize>) -> bool {
        if !self.feasible[k][u] {
            return false;
        }
        match current {
            None => true,
            Some(c) => {
                let (a, b) = (self.rates[k][u], self.rates[k][c]);
                a > b || (a == b && u < c)
            }
        }
    }

    /// Does subcarrier `u` strictly prefer `k` over `current`?
    pub fn subcarrier_prefers(&self, u: usize, k: usize, current: Option<usize>) -> bool {
        match current {
            None => true,
            Some(c) => {
                let (a, b) = (self.rates[k][u], self.rates[c][u]);
                a > b || (a == b && k < c)
            }
        }
    }

    /// Best of `proposers` for subcarrier `u`.
    pub fn subcarrier_choice(&self, u: usize, proposers: &[usize]) -> Option<usize> {
        proposers
            .iter()
            .copied()
            .reduce(|best, k| if self.subcarrier_prefers(u, k, Some(best)) { k } else { best })
    }
}

/// Subcarriers satellite `k` would accept, best first.
pub fn satellite_preference(k: usize, scenario: &Scenario, lengths: &LengthVector) -> Result<Vec<usize>> {
    if k >= scenario.k() {
        return Err(Error::Domain(format!("satellite {k} does not exist")));
    }
    Ok(PreferenceProfile::new(scenario, lengths)?.satellite_lists.swap_remove(k))
}

/// The proposer subcarrier `u` keeps.
pub fn subcarrier_preference(
    u: usize,
    proposers: &[usize],
    lengths: &LengthVector,
    scenario: &Scenario,
) -> Result<usize> {
    if u >= scenario.u() {
        return Err(Error::Domain(format!("subcarrier {u} does not exist")));
    }
    if let Some(&k) = proposers.iter().find(|&&k| k >= scenario.k()) {
        return Err(Error::Domain(format!("proposer {k} does not exist")));
    }
    PreferenceProfile::new(scenario, lengths)?
        .subcarrier_choice(u, proposers)
        .ok_or_else(|| Error::Domain(format!("subcarrier {u} received no proposals")))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchingOutcome {
    /// `(satellite, subcarrier)` pairs sorted by satellite.
    pub pairs: Vec<(usize, usize)>,
    pub unmatched_satellites: Vec<usize>,
    pub unmatched_subcarriers: Vec<usize>,
    pub proposals: usize,
    pub rounds: usize,
}

impl MatchingOutcome {
    /// Builds an outcome from a satellite -> subcarrier map.
    pub fn from_map(map: &[Option<usize>], subcarriers: usize) -> Result<Self> {
        let mut taken = vec![false; subcarriers];
        let mut pairs = Vec::new();
        let mut unmatched_satellites = Vec::new();
        for (k, &u) in map.iter().enumerate() {
            match u {
                Some(u) if u >= subcarriers => {
                    return Err(Error::Domain(format!("subcarrier {u} does not exist")))
                }
                Some(u) if taken[u] => {
                    return Err(Error::Domain(format!("subcarrier {u} matched twice")))
                }
                Some(u) => {
                    taken[u] = true;
                    pairs.push((k, u));
                }
                None => unmatched_satellites.push(k),
            }
        }
        Ok(Self {
            pairs,
            unmatched_satellites,
            unmatched_subcarriers: (0..subcarriers).filter(|&u| !taken[u]).collect(),
            proposals: 0,
            rounds: 0,
        })
    }

    /// Checks the one-to-one and partition conditions for a `k x u` game.
    pub fn validate(&self, k: usize, u: usize) -> Result<()> {
        let mut sat_seen = vec![false; k];
        let mut sub_seen = vec![false; u];
        for &(s, c) in &self.pairs {
            if s >= k || c >= u {
                return Err(Error::Domain(format!("pair ({s},{c}) out of range")));
            }
            if std::mem::replace(&mut sat_seen[s], true) {
                return Err(Error::Domain(format!("satellite {s} matched twice")));
            }
            if std::mem::replace(&mut sub_seen[c], true) {
                return Err(Error::Domain(format!("subcarrier {c} matched twice")));
            }
        }
        for &s in &self.unmatched_satellites {
            if s >= k || std::mem::replace(&mut sat_seen[s], true) {
                return Err(Error::Domain(format!("satellite {s} listed inconsistently")));
            }
        }
        for &c in &self.unmatched_subcarriers {
            if c >= u || std::mem::replace(&mut sub_seen[c], true) {
                return Err(Error::Domain(format!("subcarrier {c} listed inconsistently")));
            }
        }
        if sat_seen.iter().chain(&sub_seen).any(|&seen| !seen) {
            return Err(Error::Domain("matching does not cover every player".into()));
        }
        Ok(())
    }

    pub fn partner_of_satellite(&self, k: usize) -> Option<usize> {
        self.pairs.iter().find(|p| p.0 == k).map(|p| p.1)
    }

    pub fn partner_of_subcarrier(&self, u: usize) -> Option<usize> {
        self.pairs.iter().find(|p| p.1 == u).map(|p| p.0)
    }

    pub fn to_map(&self, k: usize) -> Vec<Option<usize>> {
        let mut map = vec![None; k];
        for &(s, c) in &self.pairs {
            map[s] = Some(c);
        }
        map
    }
}

/// Satellite-proposing deferred acceptance.
///
/// Each round every unmatched satellite with an untried acceptable
/// subcarrier proposes to its best one. Each subcarrier keeps the best of its
/// holder and new proposers and rejects the rest; rejected satellites strike
/// that subcarrier from their list. Stops when no unmatched satellite has a
/// subcarrier left to try.
pub fn deferred_acceptance(scenario: &Scenario, lengths: &LengthVector) -> Result<(MatchingOutcome, AssignmentMatrix)> {
    check_lengths(scenario, lengths)?;
    let table = LinkTable::new(scenario)?;
    let profile = PreferenceProfile::from_table(&table, lengths.indices());
    let outcome = run_deferred_acceptance(&profile, scenario.u());
    let assignment = AssignmentMatrix::from_map(&outcome.to_map(scenario.k()), scenario.u())?;
    Ok((outcome, assignment))
}

pub fn run_deferred_acceptance(profile: &PreferenceProfile, u: usize) -> MatchingOutcome {
    let k = profile.satellite_lists.len();
    let mut next = vec![0usize; k];
    let mut holder: Vec<Option<usize>> = vec![None; u];
    let mut partner: Vec<Option<usize>> = vec![None; k];
    let mut requests: Vec<Vec<usize>> = vec![Vec::new(); u];
    let mut proposals = 0;
    let mut rounds = 0;

    loop {
        let mut any = false;
        for s in 0..k {
            if partner[s].is_none() {
                if let Some(&c) = profile.satellite_lists[s].get(next[s]) {
                    next[s] += 1;
                    requests[c].push(s);
                    proposals += 1;
                    any = true;
                }
            }
        }
        if !any {
            break;
        }
        rounds += 1;
        for c in 0..u {
            if requests[c].is_empty() {
                continue;
            }
            let mut pool = std::mem::take(&mut requests[c]);
            pool.extend(holder[c]);
            let winner = profile.subcarrier_choice(c, &pool).expect("pool is nonempty");
            for &s in &pool {
                partner[s] = (s == winner).then_some(c);
            }
            holder[c] = Some(winner);
        }
    }

    let map = partner;
    let mut out = MatchingOutcome::from_map(&map, u).expect("deferred acceptance keeps one-to-one");
    out.proposals = proposals;
    out.rounds = rounds;
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub stable: bool,
    pub blocking_pairs: Vec<(usize, usize)>,
}

/// Enumerates blocking pairs: acceptable `(k, u)` not matched together where
/// each strictly prefers the other to its current partner.
pub fn is_stable(outcome: &MatchingOutcome, scenario: &Scenario, lengths: &LengthVector) -> Result<StabilityReport> {
    outcome.validate(scenario.k(), scenario.u())?;
    let profile = PreferenceProfile::new(scenario, lengths)?;
    Ok(blocking_pairs(outcome, &profile, scenario.k(), scenario.u()))
}

pub fn blocking_pairs(outcome: &MatchingOutcome, profile: &PreferenceProfile, k: usize, u: usize) -> StabilityReport {
    let sat_partner = outcome.to_map(k);
    let mut sub_partner = vec![None; u];
    for &(s, c) in &outcome.pairs {
        sub_partner[c] = Some(s);
    }
    let mut pairs = Vec::new();
    for (s, &mine) in sat_partner.iter().enumerate() {
        for (c, &theirs) in sub_partner.iter().enumerate() {
            if mine == Some(c) {
                continue;
            }
            if profile.satellite_prefers(s, c, mine) && profile.subcarrier_prefers(c, s, theirs) {
                pairs.push((s, c));
            }
        }
    }
    StabilityReport {
        stable: pairs.is_empty(),
        blocking_pairs: pairs,
    }
}

fn check_lengths(scenario: &Scenario, lengths: &LengthVector) -> Result<()> {
    if lengths.len() != scenario.k() {
        return Err(Error::Dimension(format!(
            "length vector has {} entries for {} satellites",
            lengths.len(),
            scenario.k()
        )));
    }
    LengthVector::new(lengths.indices().to_vec(), &scenario.crs).map(|_| ())
}
