//! Spectrum-domain condition features.
//!
//! The chain implemented here goes from a raw acceleration spectrum to the
//! fleet-level vibration status:
//!
//! 1. [`fft_magnitude`] — one-sided, energy-preserving magnitude spectrum of a
//!    time-domain acceleration series.
//! 2. [`band_rms`] — RMS energy level of a frequency band.
//! 3. [`select_dominant_bands`] — pick the contiguous frequency range with
//!    consistently high energy and few extreme values, per sensor class.
//! 4. [`compute_at`] — the per-record vibration level `A_t` over the selected
//!    band, classified against the preset alert/alarm thresholds.
//! 5. [`daily_at_reduction`] — keep at most three records per day.
//! 6. [`exceedance_area`] — area of the exceedance curve of a set of `A_t`
//!    values over a period.
//! 7. [`fleet_vibration_status`] — weighted sum of per-sensor areas.

use chrono::{DateTime, Timelike, Utc};
use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::domain::{FreqClass, SensorPoint, ServiceWindow, ThresholdTable, SPECTRUM_MAX_KHZ};
use crate::error::{PhmError, Result};

/// Divisor applied to the in-band energy sum when computing `A_t`.
pub const AT_ENERGY_DIVISOR: f64 = 1.5;

/// One sensor's FFT-magnitude acceleration spectrum at a timestamp.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRecord {
    pub escalator_id: u32,
    /// Sensor point id, 1–8.
    pub point_id: u8,
    pub timestamp_utc: DateTime<Utc>,
    /// Frequency step per bin, Hz. Bin `i` covers `[i·bin_hz, (i+1)·bin_hz)`.
    pub bin_hz: f64,
    /// Non-negative acceleration magnitudes (g) per bin.
    pub magnitudes: Vec<f64>,
}

impl SpectrumRecord {
    /// Basic schema checks used at ingestion time.
    pub fn validate(&self) -> Result<()> {
        if self.magnitudes.is_empty() {
            return Err(PhmError::EmptyInput("spectrum magnitudes"));
        }
        if !(self.bin_hz.is_finite() && self.bin_hz > 0.0) {
            return Err(PhmError::InvalidValue(format!(
                "bin_hz must be positive, got {}",
                self.bin_hz
            )));
        }
        if self.magnitudes.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(PhmError::InvalidValue(
                "spectrum magnitudes must be finite and non-negative".into(),
            ));
        }
        if !(1..=8).contains(&self.point_id) {
            return Err(PhmError::SensorOutOfRange(self.point_id));
        }
        Ok(())
    }

    /// Highest frequency covered by the spectrum, Hz.
    pub fn top_hz(&self) -> f64 {
        self.bin_hz * self.magnitudes.len() as f64
    }
}

/// A magnitude spectrum without sensor identity, as returned by [`fft_magnitude`].
#[derive(Debug, Clone, PartialEq)]
pub struct MagnitudeSpectrum {
    pub bin_hz: f64,
    pub magnitudes: Vec<f64>,
}

impl MagnitudeSpectrum {
    /// Attach sensor identity, producing a [`SpectrumRecord`].
    pub fn into_record(
        self,
        escalator_id: u32,
        point_id: u8,
        timestamp_utc: DateTime<Utc>,
    ) -> SpectrumRecord {
        SpectrumRecord {
            escalator_id,
            point_id,
            timestamp_utc,
            bin_hz: self.bin_hz,
            magnitudes: self.magnitudes,
        }
    }
}

/// One-sided magnitude spectrum of a time-domain acceleration series.
///
/// The input is zero-padded to the next power of two. Magnitudes use the
/// energy-preserving normalization: the sum of squared magnitudes equals the
/// sum of squared time-domain samples (Parseval), which makes [`band_rms`]
/// read as an energy level directly. A unit-amplitude on-bin sine of length
/// `n` therefore lands in a single bin of magnitude `sqrt(n/2)`.
pub fn fft_magnitude(samples: &[f64], sample_rate_hz: f64) -> Result<MagnitudeSpectrum> {
    if samples.is_empty() {
        return Err(PhmError::EmptyInput("fft samples"));
    }
    if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
        return Err(PhmError::InvalidValue(format!(
            "sample rate must be positive, got {sample_rate_hz}"
        )));
    }
    let n = samples.len().next_power_of_two();
    let mut buf: Vec<Complex<f64>> = samples
        .iter()
        .map(|&x| Complex::new(x, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(n)
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);

    let scale = 1.0 / (n as f64).sqrt();
    let half = n / 2;
    let mut magnitudes = Vec::with_capacity(half + 1);
    for (k, value) in buf.iter().take(half + 1).enumerate() {
        let interior = k != 0 && k != half;
        let m = value.norm()
            * scale
            * if interior {
                std::f64::consts::SQRT_2
            } else {
                1.0
            };
        magnitudes.push(m);
    }
    Ok(MagnitudeSpectrum {
        bin_hz: sample_rate_hz / n as f64,
        magnitudes,
    })
}

/// Inclusive bin index range of the band `[lo_khz, hi_khz)`.
///
/// Bin `i` belongs to the band when its start frequency `i·bin_hz` lies in
/// the half-open interval.
fn band_bins(bin_hz: f64, n_bins: usize, lo_khz: f64, hi_khz: f64) -> Result<(usize, usize)> {
    if !(0.0..=SPECTRUM_MAX_KHZ + 1e-9).contains(&lo_khz)
        || hi_khz > SPECTRUM_MAX_KHZ + 1e-9
        || lo_khz >= hi_khz
    {
        return Err(PhmError::BandOutOfRange { lo_khz, hi_khz });
    }
    let lo_hz = lo_khz * 1000.0;
    let hi_hz = hi_khz * 1000.0;
    let start = (lo_hz / bin_hz).ceil() as usize;
    // round() guards bands whose upper edge lands on a bin boundary up to
    // float noise; the band stays half-open.
    let end_excl = ((hi_hz / bin_hz).round() as usize).min(n_bins);
    let end_excl = if (end_excl as f64 * bin_hz) > hi_hz + 1e-6 {
        ((hi_hz / bin_hz).floor() as usize).min(n_bins)
    } else {
        end_excl
    };
    if start >= end_excl {
        return Err(PhmError::EmptyBand { lo_khz, hi_khz });
    }
    Ok((start, end_excl - 1))
}

/// RMS energy level of the band `[lo_khz, hi_khz)`:
/// `sqrt(Σ x_i² / count)` over the band's bins.
pub fn band_rms(spec: &SpectrumRecord, lo_khz: f64, hi_khz: f64) -> Result<f64> {
    let (s, m) = band_bins(spec.bin_hz, spec.magnitudes.len(), lo_khz, hi_khz)?;
    let sum_sq: f64 = spec.magnitudes[s..=m].iter().map(|x| x * x).sum();
    Ok((sum_sq / (m - s + 1) as f64).sqrt())
}

/// Tuning for [`select_dominant_bands`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandSelectionConfig {
    /// Width of the scored sub-bands, kHz. The default of 0.5 keeps all the
    /// observed selection boundaries (0.5, 1, 2, 7.5, 10 kHz) on band edges.
    pub band_width_khz: f64,
    /// A band is kept when its score exceeds this fraction of the maximum
    /// band score.
    pub score_fraction: f64,
    /// Bands below this frequency are always removed before selection
    /// (on-site noise concentrates there).
    pub drop_below_khz: f64,
    /// Weight of the extreme-value penalty in the band score.
    pub penalty_weight: f64,
}

impl Default for BandSelectionConfig {
    fn default() -> Self {
        BandSelectionConfig {
            band_width_khz: 0.5,
            score_fraction: 0.2,
            drop_below_khz: 0.5,
            penalty_weight: 1.0,
        }
    }
}

/// Distribution summary of one scored sub-band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandStat {
    pub lo_khz: f64,
    pub hi_khz: f64,
    /// Median of the per-spectrum band RMS values.
    pub median_rms: f64,
    /// Count of RMS values beyond Q3 + 1.5·IQR.
    pub outlier_count: usize,
    pub sample_count: usize,
    /// `median · (1 − penalty_weight · outlier_fraction)`.
    pub score: f64,
}

/// The dominant frequency band chosen for one sensor class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandSelection {
    pub freq_class: FreqClass,
    pub band_lo_khz: f64,
    pub band_hi_khz: f64,
    /// Per-band statistics over the whole corpus, in frequency order.
    pub band_stats: Vec<BandStat>,
}

fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let w = pos - lo as f64;
        sorted[lo] * (1.0 - w) + sorted[hi] * w
    }
}

/// Streaming collector of per-band RMS distributions; feed spectra one at a
/// time and [`finish`](BandRmsAccumulator::finish) into a [`BandSelection`]
/// without holding the corpus in memory.
#[derive(Debug, Clone)]
pub struct BandRmsAccumulator {
    cfg: BandSelectionConfig,
    per_band: Vec<Vec<f64>>,
    count: usize,
}

impl BandRmsAccumulator {
    pub fn new(cfg: BandSelectionConfig) -> Result<Self> {
        let width_ok = cfg.band_width_khz.is_finite() && cfg.band_width_khz > 0.0;
        let fraction_ok = cfg.score_fraction.is_finite() && cfg.score_fraction >= 0.0;
        if !width_ok || !fraction_ok {
            return Err(PhmError::InvalidConfig(
                "band width must be positive and score fraction non-negative".into(),
            ));
        }
        let n_bands = (SPECTRUM_MAX_KHZ / cfg.band_width_khz).round() as usize;
        Ok(BandRmsAccumulator {
            cfg,
            per_band: vec![Vec::new(); n_bands],
            count: 0,
        })
    }

    pub fn add(&mut self, spec: &SpectrumRecord) -> Result<()> {
        for (b, values) in self.per_band.iter_mut().enumerate() {
            let lo = b as f64 * self.cfg.band_width_khz;
            let hi = ((b + 1) as f64 * self.cfg.band_width_khz).min(SPECTRUM_MAX_KHZ);
            values.push(band_rms(spec, lo, hi)?);
        }
        self.count += 1;
        Ok(())
    }

    pub fn spectra_seen(&self) -> usize {
        self.count
    }

    pub fn finish(self, freq_class: FreqClass) -> Result<BandSelection> {
        if self.count == 0 {
            return Err(PhmError::EmptyInput("band-selection corpus"));
        }
        let cfg = self.cfg;
        let stats: Vec<BandStat> = self
            .per_band
            .into_iter()
            .enumerate()
            .map(|(b, mut values)| {
                let lo = b as f64 * cfg.band_width_khz;
                let hi = ((b + 1) as f64 * cfg.band_width_khz).min(SPECTRUM_MAX_KHZ);
                values.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let median = quantile_sorted(&values, 0.5);
                let q1 = quantile_sorted(&values, 0.25);
                let q3 = quantile_sorted(&values, 0.75);
                let fence = q3 + 1.5 * (q3 - q1);
                let outlier_count = values.iter().filter(|v| **v > fence).count();
                let outlier_fraction = outlier_count as f64 / values.len() as f64;
                let score = median * (1.0 - cfg.penalty_weight * outlier_fraction).max(0.0);
                BandStat {
                    lo_khz: lo,
                    hi_khz: hi,
                    median_rms: median,
                    outlier_count,
                    sample_count: values.len(),
                    score,
                }
            })
            .collect();
        pick_band_run(freq_class, stats, &cfg)
    }
}

/// Choose the dominant frequency band for one sensor class from a corpus of
/// spectra.
///
/// The 0–12.8 kHz range is divided into sub-bands of `band_width_khz`; each
/// band's per-spectrum RMS distribution is summarized by its median and its
/// count of extreme values (beyond Q3 + 1.5·IQR), giving the score
/// `median · (1 − penalty_weight · outlier_fraction)`. After force-dropping
/// everything below `drop_below_khz`, the longest contiguous run of bands
/// scoring above `score_fraction · max_score` is returned.
pub fn select_dominant_bands(
    freq_class: FreqClass,
    corpus: &[SpectrumRecord],
    cfg: &BandSelectionConfig,
) -> Result<BandSelection> {
    let mut acc = BandRmsAccumulator::new(cfg.clone())?;
    for spec in corpus {
        acc.add(spec)?;
    }
    acc.finish(freq_class)
}

fn pick_band_run(
    freq_class: FreqClass,
    stats: Vec<BandStat>,
    cfg: &BandSelectionConfig,
) -> Result<BandSelection> {
    // candidate bands start at or above the forced-drop boundary
    let candidate = |s: &BandStat| s.lo_khz >= cfg.drop_below_khz - 1e-9;
    let max_score = stats
        .iter()
        .filter(|s| candidate(s))
        .map(|s| s.score)
        .fold(0.0_f64, f64::max);
    let threshold = cfg.score_fraction * max_score;

    let mut best: Option<(usize, usize)> = None;
    let mut run_start: Option<usize> = None;
    for (i, s) in stats.iter().enumerate() {
        let keep = candidate(s) && s.score > threshold && s.score > 0.0;
        if keep {
            run_start.get_or_insert(i);
        }
        if !keep || i == stats.len() - 1 {
            if let Some(start) = run_start.take() {
                let end = if keep { i } else { i - 1 };
                let better = match best {
                    None => true,
                    Some((bs, be)) => end - start > be - bs,
                };
                if better {
                    best = Some((start, end));
                }
            }
        }
    }

    let (start, end) = best.ok_or(PhmError::EmptyInput(
        "no frequency band exceeds the score threshold",
    ))?;
    Ok(BandSelection {
        freq_class,
        band_lo_khz: stats[start].lo_khz,
        band_hi_khz: stats[end].hi_khz,
        band_stats: stats,
    })
}

/// Vibration status of a single `A_t` record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AtStatus {
    Normal,
    Alert,
    Alarm,
}

impl std::fmt::Display for AtStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AtStatus::Normal => write!(f, "normal"),
            AtStatus::Alert => write!(f, "alert"),
            AtStatus::Alarm => write!(f, "alarm"),
        }
    }
}

impl std::str::FromStr for AtStatus {
    type Err = PhmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normal" => Ok(AtStatus::Normal),
            "alert" => Ok(AtStatus::Alert),
            "alarm" => Ok(AtStatus::Alarm),
            other => Err(PhmError::InvalidValue(format!("bad A_t status '{other}'"))),
        }
    }
}

/// One `A_t` measurement with its threshold classification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtRecord {
    pub escalator_id: u32,
    pub point_id: u8,
    pub timestamp_utc: DateTime<Utc>,
    pub at_g: f64,
    pub status: AtStatus,
}

/// Classify an `A_t` value against a threshold row. The comparison is
/// inclusive: a value exactly at a limit takes the worse status.
pub fn classify_at(at_g: f64, alert_g: f64, alarm_g: f64) -> AtStatus {
    if at_g >= alarm_g {
        AtStatus::Alarm
    } else if at_g >= alert_g {
        AtStatus::Alert
    } else {
        AtStatus::Normal
    }
}

/// Vibration level of one spectrum: `A_t = sqrt(Σ x_i² / 1.5)` over the bins
/// inside the selected dominant band, classified against the acceleration
/// thresholds for the sensor's location.
pub fn compute_at(
    spec: &SpectrumRecord,
    selection: &BandSelection,
    thresholds: &ThresholdTable,
) -> Result<AtRecord> {
    let sensor = crate::domain::sensor_by_point(spec.point_id)?;
    if sensor.freq_class != selection.freq_class {
        return Err(PhmError::InvalidValue(format!(
            "sensor point {} is {:?} but band selection is {:?}",
            spec.point_id, sensor.freq_class, selection.freq_class
        )));
    }
    let (s, m) = band_bins(
        spec.bin_hz,
        spec.magnitudes.len(),
        selection.band_lo_khz,
        selection.band_hi_khz,
    )?;
    let sum_sq: f64 = spec.magnitudes[s..=m].iter().map(|x| x * x).sum();
    let at_g = (sum_sq / AT_ENERGY_DIVISOR).sqrt();
    let row = thresholds.get(sensor.location);
    Ok(AtRecord {
        escalator_id: spec.escalator_id,
        point_id: spec.point_id,
        timestamp_utc: spec.timestamp_utc,
        at_g,
        status: classify_at(at_g, row.alert_g, row.alarm_g),
    })
}

/// The three in-service windows used by [`daily_at_reduction`]:
/// morning 06:00–11:00, midday 11:00–16:00, evening 16:00–24:00 local.
pub fn default_reduction_windows() -> [ServiceWindow; 3] {
    [
        ServiceWindow::new(6 * 60, 11 * 60),
        ServiceWindow::new(11 * 60, 16 * 60),
        ServiceWindow::new(16 * 60, 24 * 60),
    ]
}

/// Reduce one escalator-point-day's records to at most three: the maximum-`A_t`
/// record within each in-service window. Records outside every window are
/// discarded (raw vibration data collected out of working time).
///
/// `utc_offset_hours` converts record timestamps to local clock time.
pub fn daily_at_reduction(
    records: &[AtRecord],
    windows: &[ServiceWindow],
    utc_offset_hours: i32,
) -> Vec<AtRecord> {
    let minute_of_day = |ts: DateTime<Utc>| -> u16 {
        let local = ts + chrono::Duration::hours(utc_offset_hours as i64);
        (local.hour() * 60 + local.minute()) as u16
    };
    let mut kept: Vec<AtRecord> = Vec::with_capacity(windows.len());
    for w in windows {
        let mut best: Option<&AtRecord> = None;
        for r in records {
            if !w.contains(minute_of_day(r.timestamp_utc)) {
                continue;
            }
            let better = match best {
                None => true,
                // strict > keeps the earliest record on ties
                Some(b) => r.at_g > b.at_g,
            };
            if better {
                best = Some(r);
            }
        }
        if let Some(b) = best {
            kept.push(b.clone());
        }
    }
    kept.sort_by_key(|r| r.timestamp_utc);
    kept
}

/// Exceedance curve of a set of non-negative values: the fraction strictly
/// exceeding each threshold. Returns `(τ, p(τ))` step points at τ = 0 and at
/// each distinct value, in ascending τ order.
pub fn exceedance_curve(values: &[f64]) -> Result<Vec<(f64, f64)>> {
    let sorted = checked_sorted(values)?;
    let n = sorted.len() as f64;
    let mut points = Vec::with_capacity(sorted.len() + 1);
    let p_at = |tau: f64, sorted: &[f64]| {
        let above = sorted.iter().filter(|x| **x > tau).count();
        above as f64 / n
    };
    points.push((0.0, p_at(0.0, &sorted)));
    for (i, &x) in sorted.iter().enumerate() {
        if i + 1 < sorted.len() && sorted[i + 1] == x {
            continue;
        }
        if x > 0.0 {
            points.push((x, p_at(x, &sorted)));
        }
    }
    Ok(points)
}

/// Area of the exceedance curve, computed as the exact step-function
/// integral `Σ (x_(k) − x_(k−1)) · (n − k + 1)/n` over the sorted values.
///
/// For non-negative inputs this equals the mean of the set; that analytic
/// identity is used as the independent test oracle, not as the
/// implementation.
pub fn exceedance_area(values: &[f64]) -> Result<f64> {
    let sorted = checked_sorted(values)?;
    let n = sorted.len() as f64;
    let mut area = 0.0;
    let mut prev = 0.0;
    for (k, &x) in sorted.iter().enumerate() {
        area += (x - prev) * ((n - k as f64) / n);
        prev = x;
    }
    Ok(area)
}

fn checked_sorted(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(PhmError::EmptyInput("exceedance values"));
    }
    if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(PhmError::InvalidValue(
            "exceedance values must be finite and non-negative".into(),
        ));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(sorted)
}

/// Weighted fleet vibration status `N = Σ W_i · S_i` over the 8 sensor points.
///
/// `areas` maps point id to exceedance-curve area. A sensor without an area
/// is an error unless `renormalize_missing` is set, in which case the weights
/// of the present sensors are rescaled to sum to 1 (this changes
/// comparability across periods; keep it off for trend analysis).
pub fn fleet_vibration_status(
    areas: &[(u8, f64)],
    sensors: &[SensorPoint],
    renormalize_missing: bool,
) -> Result<f64> {
    let area_of = |point_id: u8| areas.iter().find(|(p, _)| *p == point_id).map(|(_, a)| *a);
    for (p, _) in areas {
        if !sensors.iter().any(|s| s.point_id == *p) {
            return Err(PhmError::SensorOutOfRange(*p));
        }
    }
    let mut weighted = 0.0;
    let mut present_weight = 0.0;
    for s in sensors {
        match area_of(s.point_id) {
            Some(a) => {
                weighted += s.weight * a;
                present_weight += s.weight;
            }
            None if renormalize_missing => {}
            None => return Err(PhmError::MissingSensor(s.point_id)),
        }
    }
    if present_weight <= 0.0 {
        return Err(PhmError::EmptyInput("no sensor areas"));
    }
    if renormalize_missing {
        Ok(weighted / present_weight)
    } else {
        Ok(weighted)
    }
}
