//! Compression ratios, payload lengths and reconstruction quality.
//!
//! The learned semantic codec is stood in for by [`psnr_surrogate`]: a
//! piecewise-linear curve through measured (ratio, PSNR) anchors at one
//! channel SNR, shifted linearly for other SNRs.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::link::SatelliteNode;

/// A positive rational compression ratio `num/den` in `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct CompressionRatio {
    num: u32,
    den: u32,
}

impl CompressionRatio {
    pub fn new(num: u32, den: u32) -> Result<Self> {
        if num == 0 || den == 0 || num > den {
            return Err(Error::Domain(format!(
                "compression ratio {num}/{den} is not in (0, 1]"
            )));
        }
        Ok(Self { num, den })
    }

    pub fn numerator(self) -> u32 {
        self.num
    }

    pub fn denominator(self) -> u32 {
        self.den
    }

    pub fn value(self) -> f64 {
        f64::from(self.num) / f64::from(self.den)
    }

    /// Exact rational comparison.
    pub fn cmp_exact(self, other: Self) -> Ordering {
        (u64::from(self.num) * u64::from(other.den)).cmp(&(u64::from(other.num) * u64::from(self.den)))
    }
}

impl fmt::Display for CompressionRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for CompressionRatio {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (n, d) = s
            .split_once('/')
            .ok_or_else(|| Error::Domain(format!("ratio `{s}` is not of the form num/den")))?;
        let parse = |t: &str| {
            t.trim()
                .parse::<u32>()
                .map_err(|e| Error::Domain(format!("ratio `{s}`: {e}")))
        };
        Self::new(parse(n)?, parse(d)?)
    }
}

impl TryFrom<String> for CompressionRatio {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<CompressionRatio> for String {
    fn from(r: CompressionRatio) -> Self {
        r.to_string()
    }
}

/// Ordered set of admissible compression ratios.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<CompressionRatio>", into = "Vec<CompressionRatio>")]
pub struct CompressionRatioSet {
    ratios: Vec<CompressionRatio>,
}

impl CompressionRatioSet {
    pub fn new(ratios: Vec<CompressionRatio>) -> Result<Self> {
        if ratios.is_empty() {
            return Err(Error::invalid("crs", "compression ratio set is empty"));
        }
        if let Some(w) = ratios
            .windows(2)
            .find(|w| w[0].cmp_exact(w[1]) != Ordering::Less)
        {
            return Err(Error::invalid(
                "crs",
                format!("ratios must be strictly increasing, found {} then {}", w[0], w[1]),
            ));
        }
        Ok(Self { ratios })
    }

    /// `{4/128, 5/128, ..., 12/128}`.
    pub fn table_default() -> Self {
        Self {
            ratios: (4..=12).map(|n| CompressionRatio { num: n, den: 128 }).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.ratios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ratios.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<CompressionRatio> {
        self.ratios.get(index).copied()
    }

    pub fn ratios(&self) -> &[CompressionRatio] {
        &self.ratios
    }

    pub fn contains(&self, ratio: CompressionRatio) -> bool {
        self.ratios.iter().any(|r| r.cmp_exact(ratio) == Ordering::Equal)
    }

    pub fn max_index(&self) -> usize {
        self.ratios.len() - 1
    }
}

impl TryFrom<Vec<CompressionRatio>> for CompressionRatioSet {
    type Error = Error;
    fn try_from(v: Vec<CompressionRatio>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<CompressionRatioSet> for Vec<CompressionRatio> {
    fn from(s: CompressionRatioSet) -> Self {
        s.ratios
    }
}

/// Per-satellite index into a [`CompressionRatioSet`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LengthVector {
    indices: Vec<usize>,
}

impl LengthVector {
    pub fn new(indices: Vec<usize>, crs: &CompressionRatioSet) -> Result<Self> {
        if let Some((k, &i)) = indices.iter().enumerate().find(|(_, &i)| i >= crs.len()) {
            return Err(Error::Domain(format!(
                "length index {i} for satellite {k} exceeds set of {} ratios",
                crs.len()
            )));
        }
        Ok(Self { indices })
    }

    /// Every satellite at the same index. Caller guarantees `index < |CRS|`.
    pub fn uniform(k: usize, index: usize) -> Self {
        Self {
            indices: vec![index; k],
        }
    }

    pub(crate) fn from_raw(indices: Vec<usize>) -> Self {
        Self { indices }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn index(&self, k: usize) -> usize {
        self.indices[k]
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }
}

/// Payload size in bits for compressing `sat`'s image at `ratio`:
/// `ceil(ratio * H * W * C * bits_per_symbol)`, computed exactly.
pub fn transmitted_length(
    ratio: CompressionRatio,
    crs: &CompressionRatioSet,
    sat: &SatelliteNode,
    bits_per_symbol: u32,
) -> Result<u64> {
    if !crs.contains(ratio) {
        return Err(Error::Domain(format!("ratio {ratio} is not in the compression ratio set")));
    }
    if bits_per_symbol == 0 {
        return Err(Error::Domain("bits_per_symbol must be at least 1".into()));
    }
    let raw = u128::from(sat.source_symbols()) * u128::from(bits_per_symbol);
    let bits = (raw * u128::from(ratio.num)).div_ceil(u128::from(ratio.den));
    u64::try_from(bits).map_err(|_| Error::Domain(format!("payload of {bits} bits overflows")))
}

/// One measured point of codec quality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PsnrAnchor {
    pub ratio: CompressionRatio,
    pub snr_db: f64,
    pub psnr_db: f64,
}

/// Calibration of the PSNR surrogate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PsnrCalibration {
    /// Anchors sharing one SNR, strictly increasing in ratio and PSNR.
    pub anchors: Vec<PsnrAnchor>,
    /// PSNR change per dB of codec SNR away from the anchor SNR.
    pub snr_sensitivity_db_per_db: f64,
    /// Link SNR (dB) at which the codec sees the anchor SNR. Link SNRs are
    /// mapped to codec SNRs by this offset. `None` lets the scenario derive it
    /// from its nominal reference link.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_link_snr_db: Option<f64>,
}

impl Default for PsnrCalibration {
    /// Measured FloodNet reconstructions at 3 dB.
    fn default() -> Self {
        let anchor = |num, psnr_db| PsnrAnchor {
            ratio: CompressionRatio { num, den: 128 },
            snr_db: 3.0,
            psnr_db,
        };
        Self {
            anchors: vec![anchor(4, 27.23), anchor(8, 28.42), anchor(12, 29.34)],
            snr_sensitivity_db_per_db: 0.3,
            reference_link_snr_db: None,
        }
    }
}

impl PsnrCalibration {
    pub fn validate(&self) -> Result<()> {
        let first = self
            .anchors
            .first()
            .ok_or_else(|| Error::invalid("psnr_calibration.anchors", "no anchors"))?;
        for (i, a) in self.anchors.iter().enumerate() {
            if !a.snr_db.is_finite() || !a.psnr_db.is_finite() {
                return Err(Error::invalid(
                    format!("psnr_calibration.anchors[{i}]"),
                    "snr_db and psnr_db must be finite",
                ));
            }
            if a.snr_db != first.snr_db {
                return Err(Error::invalid(
                    format!("psnr_calibration.anchors[{i}].snr_db"),
                    format!("all anchors must share one SNR, found {} and {}", first.snr_db, a.snr_db),
                ));
            }
        }
        for (i, w) in self.anchors.windows(2).enumerate() {
            if w[0].ratio.cmp_exact(w[1].ratio) != Ordering::Less || w[0].psnr_db >= w[1].psnr_db {
                return Err(Error::invalid(
                    format!("psnr_calibration.anchors[{}]", i + 1),
                    "anchors must be strictly increasing in ratio and PSNR",
                ));
            }
        }
        if !(self.snr_sensitivity_db_per_db.is_finite() && self.snr_sensitivity_db_per_db >= 0.0) {
            return Err(Error::invalid(
                "psnr_calibration.snr_sensitivity_db_per_db",
                "must be finite and nonnegative",
            ));
        }
        if let Some(r) = self.reference_link_snr_db {
            if !r.is_finite() {
                return Err(Error::invalid("psnr_calibration.reference_link_snr_db", "must be finite"));
            }
        }
        Ok(())
    }

    /// SNR at which the anchors were measured.
    pub fn anchor_snr_db(&self) -> f64 {
        self.anchors[0].snr_db
    }

    /// Lowest and highest anchor PSNR.
    pub fn psnr_span_db(&self) -> (f64, f64) {
        (self.anchors[0].psnr_db, self.anchors[self.anchors.len() - 1].psnr_db)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurrogatePsnr {
    pub psnr_db: f64,
    /// The ratio fell outside the anchor hull and was clamped to it.
    pub extrapolated: bool,
}

/// Predicted reconstruction PSNR at `ratio` and codec SNR `snr_db`.
///
/// Interpolates linearly in ratio between anchors, adds
/// `sensitivity * (snr_db - anchor_snr)`, and floors at 0 dB. Returns the
/// anchor PSNR bit-for-bit at an anchor ratio and the anchor SNR.
pub fn psnr_surrogate(ratio: f64, snr_db: f64, cal: &PsnrCalibration) -> SurrogatePsnr {
    let anchors = &cal.anchors;
    let lo = anchors[0].ratio.value();
    let hi = anchors[anchors.len() - 1].ratio.value();
    let extrapolated = ratio < lo || ratio > hi;
    let x = ratio.clamp(lo, hi);

    let base = match anchors.iter().position(|a| a.ratio.value() >= x) {
        Some(i) if anchors[i].ratio.value() == x => anchors[i].psnr_db,
        Some(i) => {
            let (a, b) = (anchors[i - 1], anchors[i]);
            let (x0, x1) = (a.ratio.value(), b.ratio.value());
            a.psnr_db + (b.psnr_db - a.psnr_db) * (x - x0) / (x1 - x0)
        }
        None => anchors[anchors.len() - 1].psnr_db,
    };
    let shift = cal.snr_sensitivity_db_per_db * (snr_db - cal.anchor_snr_db());
    SurrogatePsnr {
        psnr_db: (base + shift).max(0.0),
        extrapolated,
    }
}

/// Dense `H x W x C` image, row-major with interleaved channels.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl Image {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != height * width * channels {
            return Err(Error::Domain(format!(
                "{} samples for a {height}x{width}x{channels} image",
                data.len()
            )));
        }
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    pub fn filled(height: usize, width: usize, channels: usize, value: f64) -> Self {
        Self {
            height,
            width,
            channels,
            data: vec![value; height * width * channels],
        }
    }

    fn shape(&self) -> (usize, usize, usize) {
        (self.height, self.width, self.channels)
    }
}

/// Mean squared per-sample difference.
pub fn mse(a: &Image, b: &Image) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::Domain(format!(
            "image shapes differ: {:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    if a.data.is_empty() {
        return Err(Error::Domain("empty images".into()));
    }
    let sum: f64 = a.data.iter().zip(&b.data).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok(sum / a.data.len() as f64)
}

/// `10 log10(max_val^2 / MSE)`; `f64::INFINITY` for identical images.
pub fn psnr_from_images(a: &Image, b: &Image, max_val: f64) -> Result<f64> {
    if !(max_val.is_finite() && max_val > 0.0) {
        return Err(Error::Domain(format!("max_val must be positive, got {max_val}")));
    }
    let err = mse(a, b)?;
    if err == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (max_val * max_val / err).log10())
}
