//! Problem instances: validation, config-file loading and seeded generation.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::link::{
    self, linear_to_db, GroundTerminal, PhysicalConstants, SatelliteNode, SnrFormulaMode,
    SubcarrierChannel,
};
use crate::semantic::{self, CompressionRatio, CompressionRatioSet, PsnrCalibration};

/// Nominal link parameters used both as config defaults and as the reference
/// link for the codec SNR mapping.
pub mod nominal {
    pub const SUBCARRIER_BANDWIDTH_HZ: f64 = 500e6;
    pub const SATELLITE_ANTENNA_GAIN_DBI: f64 = 33.13;
    pub const GROUND_ANTENNA_GAIN_DBI: f64 = 34.2;
    pub const TRANSMIT_POWER_W: f64 = 10.0;
    pub const DISTANCE_M: f64 = 786e3;
    pub const NOISE_POWER_DB: f64 = -43.0;
    pub const ACCESS_WINDOW_S: f64 = 60.0;
    pub const CARRIER_BAND_HZ: (f64, f64) = (20e9, 30e9);
    pub const ORBITAL_PERIOD_MIN: f64 = 100.0;
    pub const BITS_PER_SYMBOL: u32 = 8;
    pub const PSNR_THRESHOLD_DB: f64 = 28.0;
    pub const IMAGE_HEIGHT: u32 = 128;
    pub const IMAGE_WIDTH: u32 = 128;
    pub const IMAGE_CHANNELS: u32 = 3;
    /// Carrier of the reference link whose SNR maps onto the codec's anchor SNR.
    pub const REFERENCE_CARRIER_HZ: f64 = 25e9;
}

/// A full problem instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub satellites: Vec<SatelliteNode>,
    pub subcarriers: Vec<SubcarrierChannel>,
    pub ground_terminal: GroundTerminal,
    pub crs: CompressionRatioSet,
    pub bits_per_symbol: u32,
    pub psnr_calibration: PsnrCalibration,
    pub snr_formula_mode: SnrFormulaMode,
    pub constants: PhysicalConstants,
    /// Carried for completeness; no model term uses it.
    pub orbital_period_min: f64,
}

impl Scenario {
    /// Table defaults with `k` satellites and `u` subcarriers spread evenly
    /// over the 20-30 GHz band.
    pub fn with_defaults(k: usize, u: usize) -> Result<Self> {
        ScenarioConfig {
            k: Some(k),
            u: Some(u),
            ..ScenarioConfig::default()
        }
        .into_scenario()
    }

    pub fn validate(&self) -> Result<()> {
        if self.satellites.is_empty() {
            return Err(Error::invalid("satellites", "need at least one satellite"));
        }
        if self.subcarriers.is_empty() {
            return Err(Error::invalid("subcarriers", "need at least one subcarrier"));
        }
        for (i, s) in self.satellites.iter().enumerate() {
            let path = format!("satellites[{i}]");
            if s.id != i {
                return Err(Error::invalid(format!("{path}.id"), format!("expected {i}, got {}", s.id)));
            }
            s.validate(&path)?;
        }
        for (i, s) in self.subcarriers.iter().enumerate() {
            let path = format!("subcarriers[{i}]");
            if s.id != i {
                return Err(Error::invalid(format!("{path}.id"), format!("expected {i}, got {}", s.id)));
            }
            s.validate(&path)?;
        }
        self.ground_terminal.validate("ground_terminal")?;
        if self.bits_per_symbol == 0 {
            return Err(Error::invalid("bits_per_symbol", "must be at least 1"));
        }
        self.psnr_calibration.validate()?;
        if self.constants != PhysicalConstants::default() {
            return Err(Error::invalid("constants.light_speed_m_s", "is fixed at 299792458"));
        }
        if !self.orbital_period_min.is_finite() || self.orbital_period_min <= 0.0 {
            return Err(Error::invalid("orbital_period_min", "must be positive"));
        }
        // Every link must produce a usable SNR.
        for sat in &self.satellites {
            for sub in &self.subcarriers {
                link::free_space_snr(sat, sub, &self.ground_terminal, self.snr_formula_mode)?;
            }
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.satellites.len()
    }

    pub fn u(&self) -> usize {
        self.subcarriers.len()
    }

    pub fn ratio(&self, index: usize) -> Result<CompressionRatio> {
        self.crs
            .get(index)
            .ok_or_else(|| Error::Domain(format!("ratio index {index} out of range")))
    }

    /// Payload bits of satellite `k` at ratio index `index`.
    pub fn transmitted_bits(&self, k: usize, index: usize) -> Result<u64> {
        semantic::transmitted_length(self.ratio(index)?, &self.crs, &self.satellites[k], self.bits_per_symbol)
    }

    pub fn link_snr(&self, k: usize, u: usize) -> Result<f64> {
        link::free_space_snr(
            &self.satellites[k],
            &self.subcarriers[u],
            &self.ground_terminal,
            self.snr_formula_mode,
        )
    }

    pub fn link_rate(&self, k: usize, u: usize) -> Result<f64> {
        link::link_rate(
            &self.satellites[k],
            &self.subcarriers[u],
            &self.ground_terminal,
            self.snr_formula_mode,
        )
    }

    /// Link SNR (dB) that the codec experiences as its anchor SNR.
    ///
    /// Uses the calibration's explicit value when present; otherwise the SNR
    /// of the nominal satellite at the nominal distance on the reference
    /// carrier, under this scenario's ground terminal and SNR formula.
    pub fn reference_link_snr_db(&self) -> Result<f64> {
        if let Some(r) = self.psnr_calibration.reference_link_snr_db {
            return Ok(r);
        }
        let sat = SatelliteNode {
            id: 0,
            distance_m: nominal::DISTANCE_M,
            antenna_gain_dbi: nominal::SATELLITE_ANTENNA_GAIN_DBI,
            transmit_power_w: nominal::TRANSMIT_POWER_W,
            access_window_s: nominal::ACCESS_WINDOW_S,
            psnr_threshold_db: nominal::PSNR_THRESHOLD_DB,
            image_height: 1,
            image_width: 1,
            image_channels: 1,
        };
        let sub = SubcarrierChannel {
            id: 0,
            bandwidth_hz: nominal::SUBCARRIER_BANDWIDTH_HZ,
            carrier_frequency_hz: nominal::REFERENCE_CARRIER_HZ,
        };
        Ok(linear_to_db(link::free_space_snr(
            &sat,
            &sub,
            &self.ground_terminal,
            self.snr_formula_mode,
        )?))
    }

    /// Maps a linear link SNR onto the codec SNR scale of the calibration.
    pub fn codec_snr_db(&self, link_snr: f64) -> Result<f64> {
        Ok(self.psnr_calibration.anchor_snr_db() + linear_to_db(link_snr) - self.reference_link_snr_db()?)
    }

    /// Predicted PSNR of satellite `k` at ratio `index` on subcarrier `u`.
    pub fn predicted_psnr(&self, k: usize, u: usize, index: usize) -> Result<f64> {
        let snr = self.codec_snr_db(self.link_snr(k, u)?)?;
        Ok(semantic::psnr_surrogate(self.ratio(index)?.value(), snr, &self.psnr_calibration).psnr_db)
    }

    /// Serializes as a fully explicit config that [`load_scenario`] reads back
    /// to an identical value.
    pub fn to_config_string(&self) -> Result<String> {
        let cfg = ScenarioConfig::explicit(self);
        toml::to_string_pretty(&cfg).map_err(|e| Error::Config {
            path: "<memory>".into(),
            message: e.to_string(),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = self.to_config_string()?;
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// On-disk scenario description. Every field is optional; omitted values
/// take the table defaults.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bits_per_symbol: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr_formula_mode: Option<SnrFormulaMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orbital_period_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crs: Option<Vec<CompressionRatio>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_terminal: Option<GroundTerminal>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psnr_calibration: Option<PsnrCalibration>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub satellite_defaults: Option<SatelliteSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subcarrier_defaults: Option<SubcarrierDefaults>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub satellites: Vec<SatelliteSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub subcarriers: Vec<SubcarrierSpec>,
}

/// Satellite fields, each falling back to `satellite_defaults` and then to
/// the nominal values.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SatelliteSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub antenna_gain_dbi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transmit_power_w: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub access_window_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psnr_threshold_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_height: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_width: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_channels: Option<u32>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubcarrierDefaults {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandwidth_hz: Option<f64>,
    /// Implicit subcarriers are spread evenly over this band, inclusive.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub carrier_band_hz: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubcarrierSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandwidth_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub carrier_frequency_hz: Option<f64>,
}

impl ScenarioConfig {
    fn explicit(s: &Scenario) -> Self {
        Self {
            k: Some(s.k()),
            u: Some(s.u()),
            bits_per_symbol: Some(s.bits_per_symbol),
            snr_formula_mode: Some(s.snr_formula_mode),
            orbital_period_min: Some(s.orbital_period_min),
            crs: Some(s.crs.ratios().to_vec()),
            ground_terminal: Some(s.ground_terminal.clone()),
            psnr_calibration: Some(s.psnr_calibration.clone()),
            satellite_defaults: None,
            subcarrier_defaults: None,
            satellites: s
                .satellites
                .iter()
                .map(|n| SatelliteSpec {
                    distance_m: Some(n.distance_m),
                    antenna_gain_dbi: Some(n.antenna_gain_dbi),
                    transmit_power_w: Some(n.transmit_power_w),
                    access_window_s: Some(n.access_window_s),
                    psnr_threshold_db: Some(n.psnr_threshold_db),
                    image_height: Some(n.image_height),
                    image_width: Some(n.image_width),
                    image_channels: Some(n.image_channels),
                })
                .collect(),
            subcarriers: s
                .subcarriers
                .iter()
                .map(|c| SubcarrierSpec {
                    bandwidth_hz: Some(c.bandwidth_hz),
                    carrier_frequency_hz: Some(c.carrier_frequency_hz),
                })
                .collect(),
        }
    }

    /// Resolves defaults and validates.
    pub fn into_scenario(self) -> Result<Scenario> {
        let k = resolve_count("k", "satellites", self.k, self.satellites.len())?;
        let u = resolve_count("u", "subcarriers", self.u, self.subcarriers.len())?;

        let sd = self.satellite_defaults.unwrap_or_default();
        let satellites = (0..k)
            .map(|i| {
                let spec = self.satellites.get(i).cloned().unwrap_or_default();
                SatelliteNode {
                    id: i,
                    distance_m: spec.distance_m.or(sd.distance_m).unwrap_or(nominal::DISTANCE_M),
                    antenna_gain_dbi: spec
                        .antenna_gain_dbi
                        .or(sd.antenna_gain_dbi)
                        .unwrap_or(nominal::SATELLITE_ANTENNA_GAIN_DBI),
                    transmit_power_w: spec
                        .transmit_power_w
                        .or(sd.transmit_power_w)
                        .unwrap_or(nominal::TRANSMIT_POWER_W),
                    access_window_s: spec
                        .access_window_s
                        .or(sd.access_window_s)
                        .unwrap_or(nominal::ACCESS_WINDOW_S),
                    psnr_threshold_db: spec
                        .psnr_threshold_db
                        .or(sd.psnr_threshold_db)
                        .unwrap_or(nominal::PSNR_THRESHOLD_DB),
                    image_height: spec.image_height.or(sd.image_height).unwrap_or(nominal::IMAGE_HEIGHT),
                    image_width: spec.image_width.or(sd.image_width).unwrap_or(nominal::IMAGE_WIDTH),
                    image_channels: spec
                        .image_channels
                        .or(sd.image_channels)
                        .unwrap_or(nominal::IMAGE_CHANNELS),
                }
            })
            .collect();

        let cd = self.subcarrier_defaults.unwrap_or_default();
        let (lo, hi) = cd.carrier_band_hz.unwrap_or(nominal::CARRIER_BAND_HZ);
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::invalid(
                "subcarrier_defaults.carrier_band_hz",
                format!("[{lo}, {hi}] is not a valid band"),
            ));
        }
        let subcarriers = (0..u)
            .map(|i| {
                let spec = self.subcarriers.get(i).cloned().unwrap_or_default();
                let spread = if u == 1 {
                    lo
                } else {
                    lo + (hi - lo) * i as f64 / (u - 1) as f64
                };
                SubcarrierChannel {
                    id: i,
                    bandwidth_hz: spec
                        .bandwidth_hz
                        .or(cd.bandwidth_hz)
                        .unwrap_or(nominal::SUBCARRIER_BANDWIDTH_HZ),
                    carrier_frequency_hz: spec.carrier_frequency_hz.unwrap_or(spread),
                }
            })
            .collect();

        let crs = match self.crs {
            Some(r) => CompressionRatioSet::new(r)?,
            None => CompressionRatioSet::table_default(),
        };

        let scenario = Scenario {
            satellites,
            subcarriers,
            ground_terminal: self.ground_terminal.unwrap_or(GroundTerminal {
                antenna_gain_dbi: nominal::GROUND_ANTENNA_GAIN_DBI,
                noise_power_db: nominal::NOISE_POWER_DB,
            }),
            crs,
            bits_per_symbol: self.bits_per_symbol.unwrap_or(nominal::BITS_PER_SYMBOL),
            psnr_calibration: self.psnr_calibration.unwrap_or_default(),
            snr_formula_mode: self.snr_formula_mode.unwrap_or_default(),
            constants: PhysicalConstants::default(),
            orbital_period_min: self.orbital_period_min.unwrap_or(nominal::ORBITAL_PERIOD_MIN),
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

fn resolve_count(key: &str, list: &str, explicit: Option<usize>, listed: usize) -> Result<usize> {
    let n = match explicit {
        Some(n) if listed > 0 && n != listed => {
            return Err(Error::invalid(
                key,
                format!("{key} = {n} but {listed} entries are listed under [[{list}]]"),
            ))
        }
        Some(n) => n,
        None if listed > 0 => listed,
        None => return Err(Error::invalid(key, format!("missing; give `{key}` or [[{list}]] entries"))),
    };
    if n == 0 {
        return Err(Error::invalid(key, "must be at least 1"));
    }
    Ok(n)
}

/// Reads and validates a TOML scenario file.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_scenario(&text).map_err(|e| match e {
        Error::Config { message, .. } => Error::Config {
            path: path.into(),
            message,
        },
        other => Error::Config {
            path: path.into(),
            message: other.to_string(),
        },
    })
}

pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| Error::Config {
        path: "<memory>".into(),
        message: e.to_string(),
    })?;
    cfg.into_scenario()
}

/// Sampling bands for [`generate_random_scenario`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRanges {
    pub distance_m: (f64, f64),
    pub psnr_threshold_db: (f64, f64),
    pub carrier_frequency_hz: (f64, f64),
    pub access_window_s: (f64, f64),
}

impl Default for ScenarioRanges {
    fn default() -> Self {
        let cal = PsnrCalibration::default();
        Self {
            distance_m: (nominal::DISTANCE_M - 50e3, nominal::DISTANCE_M + 50e3),
            psnr_threshold_db: cal.psnr_span_db(),
            carrier_frequency_hz: nominal::CARRIER_BAND_HZ,
            access_window_s: (nominal::ACCESS_WINDOW_S, nominal::ACCESS_WINDOW_S),
        }
    }
}

impl ScenarioRanges {
    fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in [
            ("distance_m", self.distance_m),
            ("psnr_threshold_db", self.psnr_threshold_db),
            ("carrier_frequency_hz", self.carrier_frequency_hz),
            ("access_window_s", self.access_window_s),
        ] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::invalid(
                    format!("ranges.{name}"),
                    format!("[{lo}, {hi}] is empty or not finite"),
                ));
            }
        }
        Ok(())
    }
}

fn draw(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.gen_range(lo..=hi)
    }
}

/// Seeded random instance over `ranges`; everything else at table defaults.
pub fn generate_random_scenario(seed: u64, k: usize, u: usize, ranges: &ScenarioRanges) -> Result<Scenario> {
    if k == 0 {
        return Err(Error::invalid("k", "must be at least 1"));
    }
    if u == 0 {
        return Err(Error::invalid("u", "must be at least 1"));
    }
    ranges.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scenario = Scenario::with_defaults(k, u)?;
    for sat in &mut scenario.satellites {
        sat.distance_m = draw(&mut rng, ranges.distance_m);
        sat.psnr_threshold_db = draw(&mut rng, ranges.psnr_threshold_db);
        sat.access_window_s = draw(&mut rng, ranges.access_window_s);
    }
    for sub in &mut scenario.subcarriers {
        sub.carrier_frequency_hz = draw(&mut rng, ranges.carrier_frequency_hz);
    }
    scenario.validate()?;
    Ok(scenario)
}
