//! Downlink budget: free-space SNR, OFDMA subcarrier rate and transmission latency.
//!
//! All gains and the noise floor are configured in decibels and converted to
//! linear units before any arithmetic. Latency for a satellite that has data
//! but no subcarrier is `f64::INFINITY`, never a large finite stand-in.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::Scenario;
use crate::semantic::LengthVector;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT_M_S: f64 = 299_792_458.0;

/// Converts a decibel quantity to a linear power ratio.
#[inline]
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[inline]
pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Fixed physical constants carried by a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalConstants {
    pub light_speed_m_s: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            light_speed_m_s: SPEED_OF_LIGHT_M_S,
        }
    }
}

/// One LEO satellite in view of the ground terminal during its access window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SatelliteNode {
    pub id: usize,
    /// Slant range to the ground terminal, metres.
    pub distance_m: f64,
    pub antenna_gain_dbi: f64,
    pub transmit_power_w: f64,
    /// Access window length, seconds.
    pub access_window_s: f64,
    /// Minimum reconstruction PSNR the ground terminal requires.
    pub psnr_threshold_db: f64,
    pub image_height: u32,
    pub image_width: u32,
    pub image_channels: u32,
}

impl SatelliteNode {
    pub fn validate(&self, path: &str) -> Result<()> {
        positive(path, "distance_m", self.distance_m)?;
        positive(path, "transmit_power_w", self.transmit_power_w)?;
        positive(path, "access_window_s", self.access_window_s)?;
        positive(path, "psnr_threshold_db", self.psnr_threshold_db)?;
        finite(path, "antenna_gain_dbi", self.antenna_gain_dbi)?;
        for (name, v) in [
            ("image_height", self.image_height),
            ("image_width", self.image_width),
            ("image_channels", self.image_channels),
        ] {
            if v < 1 {
                return Err(Error::invalid(format!("{path}.{name}"), "must be at least 1"));
            }
        }
        Ok(())
    }

    /// Number of source symbols, `H * W * C`.
    pub fn source_symbols(&self) -> u64 {
        u64::from(self.image_height) * u64::from(self.image_width) * u64::from(self.image_channels)
    }
}

/// An orthogonal OFDMA resource block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubcarrierChannel {
    pub id: usize,
    pub bandwidth_hz: f64,
    pub carrier_frequency_hz: f64,
}

impl SubcarrierChannel {
    pub fn validate(&self, path: &str) -> Result<()> {
        positive(path, "bandwidth_hz", self.bandwidth_hz)?;
        positive(path, "carrier_frequency_hz", self.carrier_frequency_hz)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundTerminal {
    pub antenna_gain_dbi: f64,
    /// Noise (plus foreign-constellation interference) power, dB.
    pub noise_power_db: f64,
}

impl GroundTerminal {
    pub fn validate(&self, path: &str) -> Result<()> {
        finite(path, "antenna_gain_dbi", self.antenna_gain_dbi)?;
        finite(path, "noise_power_db", self.noise_power_db)
    }
}

/// Where the noise term enters the free-space SNR.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SnrFormulaMode {
    /// Noise divides the received power once.
    #[default]
    Standard,
    /// Noise sits inside the squared path-loss factor, giving `1/N0^2` scaling.
    Literal,
}

/// Binary satellite-by-subcarrier allocation with at most one `1` per row and
/// per column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<u8>>", into = "Vec<Vec<u8>>")]
pub struct AssignmentMatrix {
    satellites: usize,
    subcarriers: usize,
    /// `row_to_col[k] = Some(u)` when `gamma[k][u] == 1`.
    row_to_col: Vec<Option<usize>>,
}

impl AssignmentMatrix {
    /// Validates a dense 0/1 matrix. Rejects non-binary entries, ragged rows
    /// and any row or column with more than one active entry.
    pub fn from_entries(entries: &[Vec<u8>], subcarriers: usize) -> Result<Self> {
        let mut row_to_col = vec![None; entries.len()];
        let mut col_used = vec![false; subcarriers];
        for (k, row) in entries.iter().enumerate() {
            if row.len() != subcarriers {
                return Err(Error::Assignment(format!(
                    "row {k} has {} entries, expected {subcarriers}",
                    row.len()
                )));
            }
            for (u, &e) in row.iter().enumerate() {
                match e {
                    0 => {}
                    1 => {
                        if row_to_col[k].is_some() {
                            return Err(Error::Assignment(format!(
                                "satellite {k} holds more than one subcarrier"
                            )));
                        }
                        if col_used[u] {
                            return Err(Error::Assignment(format!(
                                "subcarrier {u} is shared by more than one satellite"
                            )));
                        }
                        row_to_col[k] = Some(u);
                        col_used[u] = true;
                    }
                    other => {
                        return Err(Error::Assignment(format!(
                            "entry ({k},{u}) = {other} is not binary"
                        )))
                    }
                }
            }
        }
        Ok(Self {
            satellites: entries.len(),
            subcarriers,
            row_to_col,
        })
    }

    /// Builds the matrix from a satellite -> subcarrier map.
    pub fn from_map(map: &[Option<usize>], subcarriers: usize) -> Result<Self> {
        let entries: Vec<Vec<u8>> = map
            .iter()
            .enumerate()
            .map(|(k, col)| {
                let mut row = vec![0u8; subcarriers];
                if let Some(u) = *col {
                    if u >= subcarriers {
                        return Err(Error::Assignment(format!(
                            "satellite {k} mapped to subcarrier {u}, only {subcarriers} exist"
                        )));
                    }
                    row[u] = 1;
                }
                Ok(row)
            })
            .collect::<Result<_>>()?;
        Self::from_entries(&entries, subcarriers)
    }

    /// No satellite assigned.
    pub fn empty(satellites: usize, subcarriers: usize) -> Self {
        Self {
            satellites,
            subcarriers,
            row_to_col: vec![None; satellites],
        }
    }

    /// Satellite `k` gets subcarrier `k` for every `k < min(K, U)`.
    pub fn identity(satellites: usize, subcarriers: usize) -> Self {
        Self {
            satellites,
            subcarriers,
            row_to_col: (0..satellites)
                .map(|k| (k < subcarriers).then_some(k))
                .collect(),
        }
    }

    pub fn satellites(&self) -> usize {
        self.satellites
    }

    pub fn subcarriers(&self) -> usize {
        self.subcarriers
    }

    pub fn subcarrier_of(&self, k: usize) -> Option<usize> {
        self.row_to_col.get(k).copied().flatten()
    }

    pub fn as_map(&self) -> &[Option<usize>] {
        &self.row_to_col
    }

    pub fn row(&self, k: usize) -> Vec<u8> {
        let mut row = vec![0u8; self.subcarriers];
        if let Some(u) = self.subcarrier_of(k) {
            row[u] = 1;
        }
        row
    }

    pub fn to_entries(&self) -> Vec<Vec<u8>> {
        (0..self.satellites).map(|k| self.row(k)).collect()
    }

    /// Re-checks the binary and one-to-one constraints on the dense form.
    pub fn validate(&self) -> Result<()> {
        Self::from_entries(&self.to_entries(), self.subcarriers).map(|_| ())
    }
}

impl TryFrom<Vec<Vec<u8>>> for AssignmentMatrix {
    type Error = Error;

    fn try_from(entries: Vec<Vec<u8>>) -> Result<Self> {
        let cols = entries.first().map_or(0, Vec::len);
        Self::from_entries(&entries, cols)
    }
}

impl From<AssignmentMatrix> for Vec<Vec<u8>> {
    fn from(m: AssignmentMatrix) -> Self {
        m.to_entries()
    }
}

/// Linear SNR of the link between `sat` and the ground terminal on `sub`.
pub fn free_space_snr(
    sat: &SatelliteNode,
    sub: &SubcarrierChannel,
    gt: &GroundTerminal,
    mode: SnrFormulaMode,
) -> Result<f64> {
    let gains = db_to_linear(sat.antenna_gain_dbi) * db_to_linear(gt.antenna_gain_dbi);
    let noise = db_to_linear(gt.noise_power_db);
    let spread = 4.0 * PI * sat.distance_m * sub.carrier_frequency_hz;
    let snr = match mode {
        SnrFormulaMode::Standard => {
            let path = SPEED_OF_LIGHT_M_S / spread;
            gains * sat.transmit_power_w * path * path / noise
        }
        SnrFormulaMode::Literal => {
            let path = SPEED_OF_LIGHT_M_S / (spread * noise);
            gains * sat.transmit_power_w * path * path
        }
    };
    if !snr.is_finite() || snr <= 0.0 {
        return Err(Error::invalid(
            format!("link(satellite {}, subcarrier {})", sat.id, sub.id),
            format!("SNR evaluated to {snr}"),
        ));
    }
    Ok(snr)
}

/// Shannon rate of `sat` on a single subcarrier, bits/s.
pub fn link_rate(
    sat: &SatelliteNode,
    sub: &SubcarrierChannel,
    gt: &GroundTerminal,
    mode: SnrFormulaMode,
) -> Result<f64> {
    Ok(sub.bandwidth_hz * free_space_snr(sat, sub, gt, mode)?.log2_1p())
}

/// OFDMA downlink rate of `sat` given its assignment row, bits/s.
///
/// The sum runs over every subcarrier; with the one-subcarrier-per-satellite
/// constraint at most one term is nonzero.
pub fn downlink_rate(
    sat: &SatelliteNode,
    assignment_row: &[u8],
    subs: &[SubcarrierChannel],
    gt: &GroundTerminal,
    mode: SnrFormulaMode,
) -> Result<f64> {
    if assignment_row.len() != subs.len() {
        return Err(Error::Dimension(format!(
            "assignment row has {} entries for {} subcarriers",
            assignment_row.len(),
            subs.len()
        )));
    }
    if assignment_row.iter().map(|&g| u32::from(g)).sum::<u32>() > 1 {
        return Err(Error::Assignment(format!(
            "satellite {} row sums above 1",
            sat.id
        )));
    }
    let mut rate = 0.0;
    for (&g, sub) in assignment_row.iter().zip(subs) {
        match g {
            0 => {}
            1 => rate += link_rate(sat, sub, gt, mode)?,
            other => {
                return Err(Error::Assignment(format!("entry {other} is not binary")));
            }
        }
    }
    Ok(rate)
}

/// Seconds needed to push `length_bits` at `rate_bits_s`.
///
/// Returns `f64::INFINITY` when there is data but no rate.
pub fn transmission_latency(length_bits: f64, rate_bits_s: f64) -> f64 {
    if length_bits <= 0.0 {
        0.0
    } else if rate_bits_s <= 0.0 {
        f64::INFINITY
    } else {
        length_bits / rate_bits_s
    }
}

/// Per-satellite latencies under `lengths` and `assignment`.
pub fn satellite_latencies(
    lengths: &LengthVector,
    assignment: &AssignmentMatrix,
    scenario: &Scenario,
) -> Result<Vec<f64>> {
    check_dims(lengths, assignment, scenario)?;
    scenario
        .satellites
        .iter()
        .enumerate()
        .map(|(k, sat)| {
            let bits = scenario.transmitted_bits(k, lengths.index(k))?;
            let rate = downlink_rate(
                sat,
                &assignment.row(k),
                &scenario.subcarriers,
                &scenario.ground_terminal,
                scenario.snr_formula_mode,
            )?;
            Ok(transmission_latency(bits as f64, rate))
        })
        .collect()
}

/// Fleet-average transmission latency, seconds.
pub fn average_latency(
    lengths: &LengthVector,
    assignment: &AssignmentMatrix,
    scenario: &Scenario,
) -> Result<f64> {
    let t = satellite_latencies(lengths, assignment, scenario)?;
    Ok(t.iter().sum::<f64>() / t.len() as f64)
}

pub(crate) fn check_dims(
    lengths: &LengthVector,
    assignment: &AssignmentMatrix,
    scenario: &Scenario,
) -> Result<()> {
    let k = scenario.satellites.len();
    if lengths.len() != k {
        return Err(Error::Dimension(format!(
            "length vector has {} entries for {k} satellites",
            lengths.len()
        )));
    }
    if assignment.satellites() != k || assignment.subcarriers() != scenario.subcarriers.len() {
        return Err(Error::Dimension(format!(
            "assignment is {}x{}, scenario is {k}x{}",
            assignment.satellites(),
            assignment.subcarriers(),
            scenario.subcarriers.len()
        )));
    }
    Ok(())
}

fn positive(path: &str, name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("{path}.{name}"), format!("must be positive and finite, got {v}")))
    }
}

fn finite(path: &str, name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{path}.{name}"), format!("must be finite, got {v}")))
    }
}

trait Log2OnePlus {
    fn log2_1p(self) -> f64;
}

impl Log2OnePlus for f64 {
    /// `log2(1 + x)` without cancellation for the very small SNRs typical of
    /// long slant ranges.
    #[inline]
    fn log2_1p(self) -> f64 {
        self.ln_1p() / std::f64::consts::LN_2
    }
}
