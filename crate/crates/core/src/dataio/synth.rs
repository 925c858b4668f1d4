//! Desk-scale synthetic PV plants.
//!
//! Output is a clear-sky bell (zero at night, peak at local solar noon)
//! scaled by a per-day seasonal factor and by a seeded multiplicative cloud
//! attenuation, already normalized by capacity.

use chrono::{Datelike, NaiveDate, NaiveDateTime};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::manifest::{PlantManifest, PlantRegistry};
use super::series::{TimeSeries, STEPS_PER_DAY, STEP_MINUTES};
use crate::error::{Error, Result};
use crate::numerics::seeded_rng;

/// Standard meridian of the Pacific time zone, degrees west.
const ZONE_MERIDIAN: f64 = 120.0;
const PEAK_RATIO: f64 = 0.88;
const CLOUD_AR: f64 = 0.95;

#[derive(Clone, Debug, PartialEq)]
pub struct SynthConfig {
    pub plant_id: String,
    pub seed: u64,
    pub days: usize,
    pub capacity_mw: f64,
    /// 0 disables clouds; 1 allows full attenuation on the cloudiest days.
    pub cloud_level: f64,
    pub start: NaiveDate,
    /// Degrees west; shifts solar noon away from 12:00.
    pub lon: f64,
    pub lat: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            plant_id: "SYN".into(),
            seed: 0,
            days: 60,
            capacity_mw: 8.0,
            cloud_level: 0.5,
            start: NaiveDate::from_ymd_opt(2006, 5, 1).expect("valid date"),
            lon: 117.0,
            lat: 32.7,
        }
    }
}

impl SynthConfig {
    pub fn for_plant(manifest: &PlantManifest, seed: u64, days: usize, cloud_level: f64) -> Self {
        Self {
            plant_id: manifest.plant_id.clone(),
            seed,
            days,
            capacity_mw: manifest.capacity_mw,
            cloud_level,
            lon: manifest.lon,
            lat: manifest.lat,
            ..Self::default()
        }
    }

    fn start_time(&self) -> NaiveDateTime {
        self.start.and_hms_opt(0, 0, 0).expect("midnight exists")
    }

    /// Local solar noon in minutes after midnight.
    fn solar_noon_minutes(&self) -> f64 {
        720.0 - (ZONE_MERIDIAN - self.lon) * 4.0
    }

    /// Daylight duration in minutes at the start date, from the sunset hour angle.
    fn daylight_minutes(&self) -> f64 {
        let doy = self.start.ordinal() as f64;
        let decl = 23.44_f64.to_radians() * (2.0 * std::f64::consts::PI * (284.0 + doy) / 365.0).sin();
        let cos_ws = (-self.lat.to_radians().tan() * decl.tan()).clamp(-1.0, 1.0);
        2.0 * cos_ws.acos().to_degrees() / 15.0 * 60.0
    }

    /// Clear-sky shape for one slot of the day, in `[0, 1]`.
    pub fn bell(&self, slot: usize) -> f64 {
        let minute = (slot as i64 * STEP_MINUTES) as f64;
        let half = self.daylight_minutes() / 2.0;
        let rise = self.solar_noon_minutes() - half;
        let set = self.solar_noon_minutes() + half;
        if minute <= rise || minute >= set {
            return 0.0;
        }
        (std::f64::consts::PI * (minute - rise) / (set - rise)).sin().powf(1.2)
    }

    /// Seasonal amplitude for day `d`, peaking at the summer solstice.
    pub fn seasonal_scale(&self, day: usize) -> f64 {
        let date = self.start + chrono::Duration::days(day as i64);
        let doy = date.ordinal() as f64;
        0.9 + 0.1 * (2.0 * std::f64::consts::PI * (doy - 172.0) / 365.0).cos()
    }
}

/// Generates a capacity-normalized plant series; deterministic per seed.
pub fn synth_plant(cfg: &SynthConfig) -> Result<TimeSeries> {
    if cfg.days == 0 {
        return Err(Error::config("synthetic series needs at least one day"));
    }
    if !(cfg.capacity_mw > 0.0) {
        return Err(Error::config("capacity must be > 0"));
    }
    if !(0.0..=1.0).contains(&cfg.cloud_level) {
        return Err(Error::config("cloud_level must be in [0, 1]"));
    }
    let mut rng = seeded_rng(cfg.seed, 0x5EED);
    let bell: Vec<f64> = (0..STEPS_PER_DAY).map(|s| cfg.bell(s)).collect();
    let innovation = (1.0 - CLOUD_AR * CLOUD_AR).sqrt();
    let mut latent = 0.0_f64;
    let mut values = Vec::with_capacity(cfg.days * STEPS_PER_DAY);
    for day in 0..cfg.days {
        let u: f64 = rng.random();
        let cloudiness = u * u;
        let scale = cfg.seasonal_scale(day);
        for b in &bell {
            let z: f64 = StandardNormal.sample(&mut rng);
            latent = CLOUD_AR * latent + innovation * z;
            let attenuation = cfg.cloud_level * cloudiness / (1.0 + (-2.0 * latent).exp());
            let v = PEAK_RATIO * b * scale * (1.0 - attenuation);
            values.push(v.clamp(0.0, 1.0));
        }
    }
    let mut s = TimeSeries::new(cfg.plant_id.clone(), cfg.start_time(), values);
    s.normalized_by = Some(cfg.capacity_mw);
    Ok(s)
}

/// The default three-plant fixture: capacities 13/8/8 MW, distinct seeds,
/// `days` days each.
pub fn default_fixture(days: usize, base_seed: u64) -> Result<Vec<(PlantManifest, TimeSeries)>> {
    let clouds = [0.4, 0.5, 0.6];
    PlantRegistry::default_three()
        .plants
        .into_iter()
        .enumerate()
        .map(|(i, m)| {
            let cfg = SynthConfig::for_plant(&m, base_seed + 101 * (i as u64 + 1), days, clouds[i]);
            synth_plant(&cfg).map(|s| (m, s))
        })
        .collect()
}
