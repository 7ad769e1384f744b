//! Precomputed per-link rates, codec SNRs and per-ratio payloads, plus the
//! penalized objective evaluated on top of them.

use crate::error::Result;
use crate::link::{transmission_latency, AssignmentMatrix};
use crate::scenario::Scenario;
use crate::semantic::{psnr_surrogate, LengthVector};

/// Penalty coefficients for the PSNR floor (s/dB) and access window (s/s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyWeights {
    pub psnr: f64,
    pub window: f64,
}

/// Dense lookup tables for one scenario.
#[derive(Debug, Clone)]
pub struct LinkTable {
    k: usize,
    u: usize,
    n: usize,
    rate: Vec<f64>,
    psnr: Vec<f64>,
    bits: Vec<u64>,
    thresholds: Vec<f64>,
    windows: Vec<f64>,
}

impl LinkTable {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        let (k, u, n) = (scenario.k(), scenario.u(), scenario.crs.len());
        let mut rate = Vec::with_capacity(k * u);
        let mut psnr = Vec::with_capacity(k * u * n);
        for sat in 0..k {
            for sub in 0..u {
                rate.push(scenario.link_rate(sat, sub)?);
                let snr = scenario.codec_snr_db(scenario.link_snr(sat, sub)?)?;
                for r in scenario.crs.ratios() {
                    psnr.push(psnr_surrogate(r.value(), snr, &scenario.psnr_calibration).psnr_db);
                }
            }
        }
        let mut bits = Vec::with_capacity(k * n);
        for sat in 0..k {
            for idx in 0..n {
                bits.push(scenario.transmitted_bits(sat, idx)?);
            }
        }
        Ok(Self {
            k,
            u,
            n,
            rate,
            psnr,
            bits,
            thresholds: scenario.satellites.iter().map(|s| s.psnr_threshold_db).collect(),
            windows: scenario.satellites.iter().map(|s| s.access_window_s).collect(),
        })
    }

    pub fn satellites(&self) -> usize {
        self.k
    }

    pub fn subcarriers(&self) -> usize {
        self.u
    }

    pub fn ratios(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn rate(&self, k: usize, u: usize) -> f64 {
        self.rate[k * self.u + u]
    }

    #[inline]
    pub fn psnr(&self, k: usize, u: usize, idx: usize) -> f64 {
        self.psnr[(k * self.u + u) * self.n + idx]
    }

    #[inline]
    pub fn bits(&self, k: usize, idx: usize) -> u64 {
        self.bits[k * self.n + idx]
    }

    #[inline]
    pub fn threshold(&self, k: usize) -> f64 {
        self.thresholds[k]
    }

    #[inline]
    pub fn window(&self, k: usize) -> f64 {
        self.windows[k]
    }

    #[inline]
    pub fn latency(&self, k: usize, u: Option<usize>, idx: usize) -> f64 {
        let rate = u.map_or(0.0, |u| self.rate(k, u));
        transmission_latency(self.bits(k, idx) as f64, rate)
    }

    /// Whether satellite `k` at ratio `idx` finishes within its window on `u`.
    #[inline]
    pub fn fits_window(&self, k: usize, u: usize, idx: usize) -> bool {
        self.latency(k, Some(u), idx) <= self.window(k)
    }

    /// Penalty-weighted violation of satellite `k` on `u` at `idx`.
    #[inline]
    pub fn violation(&self, k: usize, u: usize, idx: usize, w: PenaltyWeights) -> f64 {
        let deficit = (self.threshold(k) - self.psnr(k, u, idx)).max(0.0);
        let excess = (self.latency(k, Some(u), idx) - self.window(k)).max(0.0);
        w.psnr * deficit + w.window * excess
    }

    /// Full objective breakdown for `indices` under `map`.
    pub fn evaluate(&self, indices: &[usize], map: &[Option<usize>], w: PenaltyWeights) -> Evaluation {
        let mut latency_sum = 0.0;
        let mut assigned_latency = 0.0;
        let mut psnr_penalty = 0.0;
        let mut window_penalty = 0.0;
        let mut unassigned = 0;
        let mut feasible = true;
        for k in 0..self.k {
            let idx = indices[k];
            match map[k] {
                Some(u) => {
                    let t = self.latency(k, Some(u), idx);
                    latency_sum += t;
                    assigned_latency += t;
                    let deficit = (self.threshold(k) - self.psnr(k, u, idx)).max(0.0);
                    let excess = (t - self.window(k)).max(0.0);
                    psnr_penalty += w.psnr * deficit;
                    window_penalty += w.window * excess;
                    feasible &= deficit == 0.0 && excess == 0.0;
                }
                None => {
                    latency_sum += self.latency(k, None, idx);
                    unassigned += 1;
                    feasible = false;
                }
            }
        }
        let kf = self.k as f64;
        let average_latency = latency_sum / kf;
        Evaluation {
            average_latency,
            psnr_penalty,
            window_penalty,
            fitness: average_latency + psnr_penalty + window_penalty,
            assigned_score: assigned_latency / kf + psnr_penalty + window_penalty,
            unassigned,
            feasible,
        }
    }

    pub fn evaluate_lengths(&self, lengths: &LengthVector, assignment: &AssignmentMatrix, w: PenaltyWeights) -> Evaluation {
        self.evaluate(lengths.indices(), assignment.as_map(), w)
    }
}

/// Objective terms for one (lengths, assignment) pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub average_latency: f64,
    pub psnr_penalty: f64,
    pub window_penalty: f64,
    /// `average_latency + psnr_penalty + window_penalty`; infinite when a
    /// satellite is unassigned.
    pub fitness: f64,
    /// Same terms restricted to assigned satellites. Always finite; used to
    /// rank candidates that share the same unassigned set.
    pub assigned_score: f64,
    pub unassigned: usize,
    pub feasible: bool,
}

impl Evaluation {
    /// Ranking key: fewer unassigned satellites first, then score.
    pub fn rank_key(&self) -> (usize, f64) {
        (self.unassigned, self.assigned_score)
    }

    pub fn better_than(&self, other: &Evaluation) -> bool {
        let (a, b) = (self.rank_key(), other.rank_key());
        a.0 < b.0 || (a.0 == b.0 && a.1 < b.1)
    }
}
