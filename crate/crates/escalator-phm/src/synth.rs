//! Deterministic, seedable synthetic-fleet generator.
//!
//! Produces minute-level energy data and per-sensor spectra with known ground
//! truth (fixed loss, passenger counts, injected maintenance events, vibration
//! degradation trend). The generator is a pure function of the configuration
//! and the (escalator, date, sensor) keys: every stream draws from its own
//! seeded RNG, so output is bit-identical across runs and independent of
//! generation order.

use chrono::{Datelike, NaiveDate, NaiveDateTime, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::domain::{
    default_fleet, find_escalator, sensor_by_point, EscalatorMeta, FreqClass,
    DEFAULT_AGE_REFERENCE, SPECTRUM_MAX_KHZ,
};
use crate::energy::{
    passenger_energy_wh, EnergyMinute, EventKind, MaintenanceEvent, MINUTES_PER_DAY,
    SERVICE_DAY_START_HOUR,
};
use crate::error::{PhmError, Result};
use crate::vibration::SpectrumRecord;

/// Energy level written during a preventive night run, Wh/min.
const PREVENTIVE_LEVEL_WH: f64 = 15.0;
/// A_t level of low-frequency sensors relative to high-frequency ones.
const LOW_CLASS_AT_RATIO: f64 = 0.5;

/// Per-escalator vibration growth curve: expected `A_t` of a high-frequency
/// sensor is `a·exp(b·age)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegradationParams {
    pub a: f64,
    pub b: f64,
}

/// Kind of an injected event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InjectedKind {
    /// Forces near-zero energy during the service window.
    CorrectiveShutdown,
    /// Energizes the escalator during non-service hours.
    PreventiveNight,
}

impl InjectedKind {
    pub fn event_kind(self) -> EventKind {
        match self {
            InjectedKind::CorrectiveShutdown => EventKind::Corrective,
            InjectedKind::PreventiveNight => EventKind::Preventive,
        }
    }

    fn default_start_slot(self) -> u16 {
        match self {
            // 10:00 local, mid service window
            InjectedKind::CorrectiveShutdown => 6 * 60,
            // 02:00 local, regular non-service time
            InjectedKind::PreventiveNight => 22 * 60,
        }
    }
}

/// One injected maintenance event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InjectedEvent {
    /// Service date the event falls on.
    pub date: NaiveDate,
    pub escalator_id: u32,
    pub kind: InjectedKind,
    pub duration_min: u16,
    /// Offset from the 04:00 service-day start; defaults to 10:00 local for
    /// shutdowns and 02:00 local for night runs.
    #[serde(default)]
    pub start_slot: Option<u16>,
}

impl InjectedEvent {
    fn resolved_start(&self) -> u16 {
        self.start_slot.unwrap_or(self.kind.default_start_slot())
    }

    /// The event as ground truth in detector terms.
    pub fn as_truth(&self) -> MaintenanceEvent {
        MaintenanceEvent {
            kind: self.kind.event_kind(),
            start_slot: self.resolved_start(),
            duration_min: self.duration_min,
        }
    }
}

/// Per-escalator overrides; anything unset falls back to the deterministic
/// defaults derived from the escalator metadata.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EscalatorSimParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_loss_wh_per_min: Option<f64>,
    /// Multiplier on the hourly passenger profile.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub passenger_scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degradation: Option<DegradationParams>,
}

/// Full generator configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub seed: u64,
    pub fleet: Vec<EscalatorMeta>,
    pub start_date: NaiveDate,
    pub end_date: NaiveDate,
    /// Passenger arrival intensity per local hour (passengers/hour).
    pub daily_profile: [f64; 24],
    /// Bounded uniform noise applied multiplicatively to energy readings.
    pub noise_frac: f64,
    /// Spectrum resolution; 1280 bins over 0–12.8 kHz is 10 Hz/bin.
    pub spectrum_bins: usize,
    /// Local minutes-of-day at which spectra are captured.
    pub spectra_minutes: Vec<u16>,
    pub utc_offset_hours: i32,
    /// Anchor date for fleet ages.
    pub age_reference: NaiveDate,
    pub injected_events: Vec<InjectedEvent>,
    pub per_escalator: BTreeMap<u32, EscalatorSimParams>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            seed: 0,
            fleet: default_fleet(),
            start_date: NaiveDate::from_ymd_opt(2021, 10, 1).unwrap(),
            end_date: NaiveDate::from_ymd_opt(2021, 12, 31).unwrap(),
            daily_profile: default_daily_profile(),
            noise_frac: 0.02,
            spectrum_bins: 1280,
            spectra_minutes: vec![8 * 60 + 30, 13 * 60 + 30, 20 * 60],
            utc_offset_hours: 8,
            age_reference: DEFAULT_AGE_REFERENCE,
            injected_events: Vec::new(),
            per_escalator: BTreeMap::new(),
        }
    }
}

/// Hourly passenger intensity with rush-hour peaks at 09:00, 14:00 and 19:00
/// and no-load hours at the edges of the 06:00–24:00 service window.
pub fn default_daily_profile() -> [f64; 24] {
    let mut p = [0.0; 24];
    let shape: [(usize, f64); 18] = [
        (6, 0.0),
        (7, 600.0),
        (8, 1400.0),
        (9, 2000.0),
        (10, 1400.0),
        (11, 1100.0),
        (12, 1200.0),
        (13, 1300.0),
        (14, 1800.0),
        (15, 1300.0),
        (16, 1100.0),
        (17, 1400.0),
        (18, 1700.0),
        (19, 2000.0),
        (20, 1200.0),
        (21, 900.0),
        (22, 700.0),
        (23, 0.0),
    ];
    for (h, v) in shape {
        p[h] = v;
    }
    p
}

impl SimConfig {
    pub fn new(seed: u64) -> Self {
        SimConfig {
            seed,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.start_date > self.end_date {
            return Err(PhmError::InvalidConfig("start_date after end_date".into()));
        }
        if self.daily_profile.iter().any(|v| *v < 0.0) {
            return Err(PhmError::InvalidConfig(
                "daily profile intensities must be non-negative".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.noise_frac) {
            return Err(PhmError::InvalidConfig(
                "noise_frac must be in [0, 1)".into(),
            ));
        }
        if self.spectrum_bins == 0 {
            return Err(PhmError::InvalidConfig(
                "spectrum_bins must be positive".into(),
            ));
        }
        for ev in &self.injected_events {
            if ev.duration_min == 0 {
                return Err(PhmError::InvalidConfig(
                    "event duration must be positive".into(),
                ));
            }
            find_escalator(&self.fleet, ev.escalator_id)?;
            if ev.resolved_start() as usize + ev.duration_min as usize > MINUTES_PER_DAY {
                return Err(PhmError::InvalidConfig(
                    "injected event runs past the service day".into(),
                ));
            }
        }
        Ok(())
    }

    /// Fixed no-load loss, Wh/min. Upward units draw more than downward ones
    /// and higher rises draw more.
    pub fn fixed_loss_for(&self, meta: &EscalatorMeta) -> f64 {
        self.per_escalator
            .get(&meta.id)
            .and_then(|p| p.fixed_loss_wh_per_min)
            .unwrap_or_else(|| {
                if meta.direction.load_subtracts() {
                    14.0 + 0.7 * meta.rise_m
                } else {
                    20.0 + 0.9 * meta.rise_m
                }
            })
    }

    /// Passenger profile multiplier. Downward units are kept lighter so the
    /// load never swallows the fixed loss (their readings must stay
    /// invertible).
    pub fn passenger_scale_for(&self, meta: &EscalatorMeta) -> f64 {
        self.per_escalator
            .get(&meta.id)
            .and_then(|p| p.passenger_scale)
            .unwrap_or(if meta.direction.load_subtracts() {
                0.2
            } else {
                1.0
            })
    }

    /// Vibration growth parameters, spread deterministically across the fleet.
    pub fn degradation_for(&self, meta: &EscalatorMeta) -> DegradationParams {
        self.per_escalator
            .get(&meta.id)
            .and_then(|p| p.degradation)
            .unwrap_or(DegradationParams {
                a: 0.02 * (0.75 + 0.55 * hash_fraction(mix(&[self.seed, meta.id as u64, 0xDE6]))),
                b: 0.085,
            })
    }

    fn local_to_utc(&self, local: NaiveDateTime) -> chrono::DateTime<Utc> {
        Utc.from_utc_datetime(&(local - chrono::Duration::hours(self.utc_offset_hours as i64)))
    }
}

/// Ground truth recorded alongside one generated energy day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyDayTruth {
    pub escalator_id: u32,
    pub service_date: NaiveDate,
    pub fixed_loss_wh_per_min: f64,
    /// Total passengers carried over the service day.
    pub passengers: u64,
    /// Injected events, in detector terms.
    pub events: Vec<MaintenanceEvent>,
}

fn mix(parts: &[u64]) -> u64 {
    // splitmix64 over the concatenated parts
    let mut h = 0x9E3779B97F4A7C15u64;
    for &p in parts {
        h ^= p.wrapping_add(0x9E3779B97F4A7C15).wrapping_add(h << 6);
        let mut z = h;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        h = z ^ (z >> 31);
    }
    h
}

fn hash_fraction(h: u64) -> f64 {
    (h >> 11) as f64 / (1u64 << 53) as f64
}

fn date_key(date: NaiveDate) -> u64 {
    date.num_days_from_ce() as u64
}

const STREAM_ENERGY: u64 = 1;
const STREAM_SPECTRUM: u64 = 2;

/// Generate one escalator's energy minutes for one service day, together
/// with the day's ground truth.
///
/// In-window minutes read `fixed loss ± passenger term` with bounded
/// multiplicative noise; out-of-window minutes read zero unless a preventive
/// night run is injected; corrective shutdowns force readings below 5 Wh.
pub fn generate_energy_day(
    cfg: &SimConfig,
    escalator_id: u32,
    date: NaiveDate,
) -> Result<(Vec<EnergyMinute>, EnergyDayTruth)> {
    let meta = find_escalator(&cfg.fleet, escalator_id)?;
    if date < cfg.start_date || date > cfg.end_date {
        return Err(PhmError::InvalidValue(format!(
            "date {date} outside the configured range"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(mix(&[
        cfg.seed,
        STREAM_ENERGY,
        escalator_id as u64,
        date_key(date),
    ]));

    let fixed_loss = cfg.fixed_loss_for(meta);
    let scale = cfg.passenger_scale_for(meta);
    let per_pax = passenger_energy_wh(meta);
    // keep downward readings invertible: load may never push a running
    // minute below the shutdown threshold
    let max_pax_per_min = if meta.direction.load_subtracts() {
        ((fixed_loss - 6.0).max(0.0) / per_pax).floor() as u64
    } else {
        u64::MAX
    };

    let events: Vec<&InjectedEvent> = cfg
        .injected_events
        .iter()
        .filter(|e| e.escalator_id == escalator_id && e.date == date)
        .collect();
    let covering = |slot: u16, kind: InjectedKind| {
        events.iter().any(|e| {
            e.kind == kind
                && slot >= e.resolved_start()
                && slot < e.resolved_start() + e.duration_min
        })
    };

    let day_start = date
        .and_hms_opt(SERVICE_DAY_START_HOUR, 0, 0)
        .expect("valid 04:00");
    let mut minutes = Vec::with_capacity(MINUTES_PER_DAY);
    let mut passengers_total: u64 = 0;

    for slot in 0..MINUTES_PER_DAY as u16 {
        let local = day_start + chrono::Duration::minutes(slot as i64);
        let minute_of_day = (local.and_utc().timestamp() / 60 % 1440) as u16; // minutes since local midnight
        let in_window = meta.service_window.contains(minute_of_day);
        let noise = 1.0 + rng.random_range(-cfg.noise_frac..cfg.noise_frac);

        let (e_imp, e_exp) = if covering(slot, InjectedKind::CorrectiveShutdown) && in_window {
            (rng.random_range(0.0..2.0), 0.0)
        } else if in_window {
            let hour = (minute_of_day / 60) as usize;
            let lambda = cfg.daily_profile[hour] * scale / 60.0;
            let pax = if lambda > 0.0 {
                ((lambda * rng.random_range(0.5..1.5)).round() as u64).min(max_pax_per_min)
            } else {
                0
            };
            passengers_total += pax;
            let e_v = pax as f64 * per_pax;
            let e_t = if meta.direction.load_subtracts() {
                (fixed_loss - e_v) * noise
            } else {
                (fixed_loss + e_v) * noise
            };
            if meta.direction.load_subtracts() && pax > 0 {
                // downward units regenerate: book a share as export
                let e_exp = 0.2 * e_t;
                (e_t - e_exp, e_exp)
            } else {
                (e_t, 0.0)
            }
        } else if covering(slot, InjectedKind::PreventiveNight) {
            (PREVENTIVE_LEVEL_WH * noise, 0.0)
        } else {
            (0.0, 0.0)
        };

        minutes.push(EnergyMinute {
            escalator_id,
            timestamp_utc: cfg.local_to_utc(local),
            e_imp_wh: e_imp,
            e_exp_wh: e_exp,
        });
    }

    let truth = EnergyDayTruth {
        escalator_id,
        service_date: date,
        fixed_loss_wh_per_min: fixed_loss,
        passengers: passengers_total,
        events: events.iter().map(|e| e.as_truth()).collect(),
    };
    Ok((minutes, truth))
}

/// Dominant band targeted by the generator per sensor class.
pub fn class_dominant_band(freq_class: FreqClass) -> (f64, f64) {
    match freq_class {
        FreqClass::HighFrequency => (2.0, 10.0),
        FreqClass::LowFrequency => (1.0, 7.5),
    }
}

/// Generate one sensor's magnitude spectrum at a timestamp.
///
/// Energy concentrates in the sensor class's dominant band, with low-band
/// noise spikes below 0.5 kHz and low energy elsewhere. The in-band energy is
/// scaled so that `A_t = sqrt(Σx²/1.5)` over the dominant band equals the
/// escalator's degradation level `a·exp(b·age)` (times the low-frequency
/// ratio and a fixed per-sensor spread).
pub fn generate_spectrum(
    cfg: &SimConfig,
    escalator_id: u32,
    point_id: u8,
    timestamp_utc: chrono::DateTime<Utc>,
) -> Result<SpectrumRecord> {
    let meta = find_escalator(&cfg.fleet, escalator_id)?;
    let sensor = sensor_by_point(point_id)?;
    let mut rng = ChaCha8Rng::seed_from_u64(mix(&[
        cfg.seed,
        STREAM_SPECTRUM,
        escalator_id as u64,
        point_id as u64,
        timestamp_utc.timestamp() as u64,
    ]));

    let local_date =
        (timestamp_utc + chrono::Duration::hours(cfg.utc_offset_hours as i64)).date_naive();
    let deg = cfg.degradation_for(meta);
    let class_ratio = match sensor.freq_class {
        FreqClass::HighFrequency => 1.0,
        FreqClass::LowFrequency => LOW_CLASS_AT_RATIO,
    };
    let sensor_spread = 0.85
        + 0.3
            * hash_fraction(mix(&[
                cfg.seed,
                escalator_id as u64,
                point_id as u64,
                0x5E2,
            ]));
    let target_at = deg.a
        * (deg.b * meta.age_at(local_date, cfg.age_reference)).exp()
        * class_ratio
        * sensor_spread;

    let n = cfg.spectrum_bins;
    let bin_hz = SPECTRUM_MAX_KHZ * 1000.0 / n as f64;
    let (lo, hi) = class_dominant_band(sensor.freq_class);
    let mut magnitudes = vec![0.0f64; n];
    for (i, m) in magnitudes.iter_mut().enumerate() {
        let f_khz = i as f64 * bin_hz / 1000.0;
        *m = if f_khz >= lo && f_khz < hi {
            rng.random_range(0.6..1.0)
        } else {
            rng.random_range(0.0..0.08)
        };
    }
    // on-site noise spikes below 0.5 kHz
    if rng.random_range(0.0..1.0) < 0.25 {
        let spike_bins = ((500.0 / bin_hz) as usize).max(1);
        for _ in 0..rng.random_range(2..=4usize) {
            let bin = rng.random_range(0..spike_bins);
            magnitudes[bin] += rng.random_range(2.0..4.0);
        }
    }

    // scale so the in-band A_t equals the degradation target
    let in_band_energy: f64 = magnitudes
        .iter()
        .enumerate()
        .filter(|(i, _)| {
            let f_khz = *i as f64 * bin_hz / 1000.0;
            f_khz >= lo && f_khz < hi
        })
        .map(|(_, m)| m * m)
        .sum();
    let scale = if in_band_energy > 0.0 {
        target_at * (crate::vibration::AT_ENERGY_DIVISOR / in_band_energy).sqrt()
    } else {
        0.0
    };
    for m in &mut magnitudes {
        *m *= scale;
    }

    Ok(SpectrumRecord {
        escalator_id,
        point_id,
        timestamp_utc,
        bin_hz,
        magnitudes,
    })
}

/// All spectra scheduled for one escalator-day: each configured capture time
/// across the 8 sensor points.
pub fn generate_day_spectra(
    cfg: &SimConfig,
    escalator_id: u32,
    date: NaiveDate,
) -> Result<Vec<SpectrumRecord>> {
    let mut records = Vec::with_capacity(cfg.spectra_minutes.len() * 8);
    for &minute in &cfg.spectra_minutes {
        let local = date.and_hms_opt(0, 0, 0).unwrap() + chrono::Duration::minutes(minute as i64);
        let ts = cfg.local_to_utc(local);
        for point_id in 1..=8u8 {
            records.push(generate_spectrum(cfg, escalator_id, point_id, ts)?);
        }
    }
    Ok(records)
}

/// Dates of the configured simulation range, inclusive.
pub fn date_range(cfg: &SimConfig) -> Vec<NaiveDate> {
    let mut dates = Vec::new();
    let mut d = cfg.start_date;
    while d <= cfg.end_date {
        dates.push(d);
        d = d.succ_opt().expect("valid date");
    }
    dates
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Direction, ServiceWindow};
    use crate::energy::{
        analyze_day, detect_events, regroup_service_day, total_energy, DEFAULT_MIN_EVENT_MINUTES,
    };
    use crate::vibration::band_rms;

    fn test_cfg(seed: u64) -> SimConfig {
        let mut cfg = SimConfig::new(seed);
        cfg.end_date = cfg.start_date + chrono::Duration::days(6);
        cfg
    }

    #[test]
    fn energy_day_is_deterministic() {
        let cfg = test_cfg(42);
        let d = cfg.start_date;
        let (a, ta) = generate_energy_day(&cfg, 0, d).unwrap();
        let (b, tb) = generate_energy_day(&cfg, 0, d).unwrap();
        assert_eq!(a, b);
        assert_eq!(ta, tb);
        let (c, _) = generate_energy_day(&SimConfig::new(43), 0, d).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn no_load_day_reads_fixed_loss_with_bounded_noise() {
        let mut cfg = test_cfg(7);
        cfg.daily_profile = [0.0; 24];
        cfg.per_escalator.insert(
            0,
            EscalatorSimParams {
                fixed_loss_wh_per_min: Some(20.0),
                ..Default::default()
            },
        );
        let (minutes, truth) = generate_energy_day(&cfg, 0, cfg.start_date).unwrap();
        assert_eq!(minutes.len(), 1440);
        assert_eq!(truth.passengers, 0);
        let window = ServiceWindow::default_schedule();
        for m in &minutes {
            let (_, slot) = crate::energy::service_slot(m.timestamp_utc, 8);
            let e = total_energy(m);
            if window.contains(crate::energy::ServiceDayProfile::minute_of_day(slot)) {
                assert!((e - 20.0).abs() <= 20.0 * cfg.noise_frac + 1e-9, "e = {e}");
            } else {
                assert_eq!(e, 0.0);
            }
        }
    }

    #[test]
    fn injected_shutdown_forces_low_readings_for_exact_duration() {
        let mut cfg = test_cfg(1);
        cfg.injected_events.push(InjectedEvent {
            date: cfg.start_date,
            escalator_id: 0,
            kind: InjectedKind::CorrectiveShutdown,
            duration_min: 60,
            start_slot: None,
        });
        cfg.validate().unwrap();
        let (minutes, truth) = generate_energy_day(&cfg, 0, cfg.start_date).unwrap();
        let low: Vec<usize> = minutes
            .iter()
            .enumerate()
            .filter(|(i, m)| {
                let in_window = (120..1200).contains(i);
                in_window && total_energy(m) < 5.0
            })
            .map(|(i, _)| i)
            .collect();
        assert_eq!(low.len(), 60);
        assert_eq!(low[0], 360); // 10:00 local
        assert!(low.windows(2).all(|w| w[1] == w[0] + 1));
        assert_eq!(truth.events.len(), 1);
        assert_eq!(truth.events[0].duration_min, 60);
    }

    #[test]
    fn passenger_energy_inversion_against_analytic_oracle() {
        // invertibility: estimated passenger count from a generated day stays
        // within the noise budget of the ground truth
        let cfg = test_cfg(5);
        for esc in [0u32, 12, 19, 13] {
            let meta = find_escalator(&cfg.fleet, esc).unwrap();
            let (minutes, truth) = generate_energy_day(&cfg, esc, cfg.start_date).unwrap();
            let days = regroup_service_day(&minutes, cfg.utc_offset_hours).unwrap();
            let (features, excluded) = analyze_day(&days[0], meta, 10).unwrap();
            assert!(!excluded);
            let est_ef = features.fixed_loss_wh_min;
            let true_ef = truth.fixed_loss_wh_per_min;
            assert!(
                (est_ef - true_ef).abs() <= 0.02 * true_ef,
                "esc {esc}: fixed loss {est_ef} vs {true_ef}"
            );
            let p_err = (features.passengers - truth.passengers as f64).abs()
                / (truth.passengers as f64).max(1.0);
            assert!(
                p_err <= 0.05,
                "esc {esc}: passengers {} vs {} ({p_err})",
                features.passengers,
                truth.passengers
            );
        }
    }

    #[test]
    fn upward_day_peaks_and_downward_day_dips_at_rush_hour() {
        let cfg = test_cfg(3);
        let hourly_mean_and_median = |esc: u32| {
            let (minutes, _) = generate_energy_day(&cfg, esc, cfg.start_date).unwrap();
            let values: Vec<f64> = minutes
                .iter()
                .filter(|m| total_energy(m) >= 5.0)
                .map(total_energy)
                .collect();
            let nine: Vec<f64> = minutes
                .iter()
                .filter(|m| {
                    let local = m.timestamp_utc + chrono::Duration::hours(8);
                    chrono::Timelike::hour(&local) == 9
                })
                .map(total_energy)
                .collect();
            let mut sorted = values.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let median = sorted[sorted.len() / 2];
            let mean9 = nine.iter().sum::<f64>() / nine.len() as f64;
            (mean9, median)
        };
        let (mean9, median) = hourly_mean_and_median(0); // up
        assert!(mean9 > median, "up: 09:00 mean {mean9} vs median {median}");
        let (mean9, median) = hourly_mean_and_median(19); // down
        assert!(
            mean9 < median,
            "down: 09:00 mean {mean9} vs median {median}"
        );
    }

    #[test]
    fn downward_minutes_stay_above_shutdown_threshold() {
        let cfg = test_cfg(9);
        for esc in [3u32, 4, 13, 19, 23] {
            let (minutes, _) = generate_energy_day(&cfg, esc, cfg.start_date).unwrap();
            for (i, m) in minutes.iter().enumerate() {
                if (120..1200).contains(&i) {
                    assert!(
                        total_energy(m) >= 5.0,
                        "esc {esc} slot {i}: {}",
                        total_energy(m)
                    );
                }
            }
        }
    }

    #[test]
    fn export_energy_only_on_downward_units() {
        let cfg = test_cfg(2);
        let (up, _) = generate_energy_day(&cfg, 0, cfg.start_date).unwrap();
        assert!(up.iter().all(|m| m.e_exp_wh == 0.0));
        let (down, _) = generate_energy_day(&cfg, 19, cfg.start_date).unwrap();
        assert!(down.iter().any(|m| m.e_exp_wh > 0.0));
        let meta = find_escalator(&cfg.fleet, 19).unwrap();
        assert_eq!(meta.direction, Direction::Down);
    }

    #[test]
    fn event_detection_round_trip_on_injected_day() {
        let mut cfg = test_cfg(6);
        cfg.injected_events.push(InjectedEvent {
            date: cfg.start_date,
            escalator_id: 7,
            kind: InjectedKind::PreventiveNight,
            duration_min: 45,
            start_slot: None,
        });
        let (minutes, truth) = generate_energy_day(&cfg, 7, cfg.start_date).unwrap();
        let days = regroup_service_day(&minutes, cfg.utc_offset_hours).unwrap();
        let meta = find_escalator(&cfg.fleet, 7).unwrap();
        let events = detect_events(&days[0], &meta.service_window, DEFAULT_MIN_EVENT_MINUTES);
        assert_eq!(events, truth.events);
    }

    #[test]
    fn unknown_escalator_or_out_of_range_date_errors() {
        let cfg = test_cfg(0);
        assert!(matches!(
            generate_energy_day(&cfg, 99, cfg.start_date),
            Err(PhmError::UnknownEscalator(99))
        ));
        let late = cfg.end_date + chrono::Duration::days(1);
        assert!(generate_energy_day(&cfg, 0, late).is_err());
        let ts = cfg.local_to_utc(cfg.start_date.and_hms_opt(8, 30, 0).unwrap());
        assert!(matches!(
            generate_spectrum(&cfg, 0, 9, ts),
            Err(PhmError::SensorOutOfRange(9))
        ));
    }

    #[test]
    fn spectra_are_deterministic_and_class_shaped() {
        let cfg = test_cfg(12);
        let ts = cfg.local_to_utc(cfg.start_date.and_hms_opt(8, 30, 0).unwrap());
        let a = generate_spectrum(&cfg, 0, 1, ts).unwrap();
        let b = generate_spectrum(&cfg, 0, 1, ts).unwrap();
        assert_eq!(a, b);
        // high-frequency sensor: dominant band carries more energy (band RMS
        // oracle) than the high tail
        let dominant = band_rms(&a, 2.0, 10.0).unwrap();
        let tail = band_rms(&a, 10.0, 12.8).unwrap();
        assert!(dominant > tail * 5.0, "dominant {dominant} vs tail {tail}");
        // low-frequency sensor
        let low = generate_spectrum(&cfg, 0, 5, ts).unwrap();
        let dominant = band_rms(&low, 1.0, 7.5).unwrap();
        let outside = band_rms(&low, 7.5, 12.8).unwrap();
        assert!(dominant > outside * 5.0);
    }

    #[test]
    fn zero_degradation_gives_all_zero_spectrum() {
        let mut cfg = test_cfg(4);
        cfg.per_escalator.insert(
            0,
            EscalatorSimParams {
                degradation: Some(DegradationParams { a: 0.0, b: 0.085 }),
                ..Default::default()
            },
        );
        let ts = cfg.local_to_utc(cfg.start_date.and_hms_opt(8, 30, 0).unwrap());
        let spec = generate_spectrum(&cfg, 0, 1, ts).unwrap();
        assert!(spec.magnitudes.iter().all(|m| *m == 0.0));
    }

    #[test]
    fn spectrum_at_matches_degradation_target() {
        let mut cfg = test_cfg(8);
        cfg.per_escalator.insert(
            2,
            EscalatorSimParams {
                degradation: Some(DegradationParams { a: 0.01, b: 0.08 }),
                ..Default::default()
            },
        );
        let ts = cfg.local_to_utc(cfg.start_date.and_hms_opt(13, 30, 0).unwrap());
        let spec = generate_spectrum(&cfg, 2, 1, ts).unwrap();
        // A_t over the generated dominant band equals the target level
        let sum_sq: f64 = spec
            .magnitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| {
                let f = *i as f64 * spec.bin_hz / 1000.0;
                (2.0..10.0).contains(&f)
            })
            .map(|(_, m)| m * m)
            .sum();
        let at = (sum_sq / crate::vibration::AT_ENERGY_DIVISOR).sqrt();
        let meta = find_escalator(&cfg.fleet, 2).unwrap();
        let local_date = (ts + chrono::Duration::hours(8)).date_naive();
        let age = meta.age_at(local_date, cfg.age_reference);
        let spread = at / (0.01 * (0.08 * age).exp());
        // per-sensor spread stays within its configured band
        assert!((0.84..=1.16).contains(&spread), "spread {spread}");
    }

    #[test]
    fn day_spectra_cover_all_sensors_and_times() {
        let cfg = test_cfg(10);
        let records = generate_day_spectra(&cfg, 11, cfg.start_date).unwrap();
        assert_eq!(records.len(), 3 * 8);
        for r in &records {
            r.validate().unwrap();
            assert_eq!(r.magnitudes.len(), cfg.spectrum_bins);
        }
    }

    #[test]
    fn config_round_trips_through_json() {
        let mut cfg = test_cfg(99);
        cfg.injected_events.push(InjectedEvent {
            date: cfg.start_date,
            escalator_id: 1,
            kind: InjectedKind::CorrectiveShutdown,
            duration_min: 30,
            start_slot: Some(400),
        });
        cfg.per_escalator.insert(
            3,
            EscalatorSimParams {
                passenger_scale: Some(0.5),
                ..Default::default()
            },
        );
        let json = serde_json::to_string_pretty(&cfg).unwrap();
        let back: SimConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cfg);
        // sparse configs deserialize with defaults
        let sparse: SimConfig = serde_json::from_str(r#"{"seed": 5}"#).unwrap();
        assert_eq!(sparse.seed, 5);
        assert_eq!(sparse.fleet.len(), 24);
    }
}
