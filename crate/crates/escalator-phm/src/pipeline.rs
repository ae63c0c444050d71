//! Orchestration of the feature pipeline over a store.
//!
//! Each stage reads raw partitions and writes derived ones: band selection
//! (`models/bands.json`), daily energy features plus reduced `A_t` records,
//! quarterly LHI features, reference-model fitting, and RUL computation.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::domain::{
    default_sensors, EscalatorMeta, FreqClass, Quarter, SensorPoint, ServiceWindow, ThresholdTable,
    DEFAULT_AGE_REFERENCE,
};
use crate::energy::{analyze_day, regroup_service_day, DailyFeatures, DEFAULT_MIN_EVENT_MINUTES};
use crate::error::{PhmError, Result};
use crate::health::{
    aggregate_quarter, fit_reference_model, ExclusionPolicy, FitPoint, LhiModel, QuarterContext,
    QuarterFeatures,
};
use crate::rul::RulRecord;
use crate::store::Store;
use crate::vibration::{
    compute_at, daily_at_reduction, default_reduction_windows, AtRecord, BandRmsAccumulator,
    BandSelection, BandSelectionConfig,
};

/// Name under which fleet band selections are stored in `models/`.
pub const BANDS_MODEL_NAME: &str = "bands";

/// Tuning knobs shared by the pipeline stages.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    /// Anchor date for fleet ages.
    pub age_reference: NaiveDate,
    /// Minimum run length for maintenance events, minutes.
    pub min_event_duration: u16,
    /// Renormalize sensor weights when a sensor has no data in a quarter.
    pub renormalize_missing_sensors: bool,
    pub band_config: BandSelectionConfig,
    /// Windows used by the daily `A_t` reduction.
    pub reduction_windows: Vec<ServiceWindow>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            age_reference: DEFAULT_AGE_REFERENCE,
            min_event_duration: DEFAULT_MIN_EVENT_MINUTES,
            renormalize_missing_sensors: false,
            band_config: BandSelectionConfig::default(),
            reduction_windows: default_reduction_windows().to_vec(),
        }
    }
}

/// Dominant-band selections for both sensor classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FleetBands {
    pub high: BandSelection,
    pub low: BandSelection,
}

impl FleetBands {
    pub fn for_class(&self, freq_class: FreqClass) -> &BandSelection {
        match freq_class {
            FreqClass::HighFrequency => &self.high,
            FreqClass::LowFrequency => &self.low,
        }
    }
}

/// Run dominant-band selection over every stored spectrum, streaming one
/// partition file at a time.
pub fn select_fleet_bands(store: &Store, cfg: &BandSelectionConfig) -> Result<FleetBands> {
    let fleet = store.fleet()?;
    let sensors = default_sensors();
    let mut high = BandRmsAccumulator::new(cfg.clone())?;
    let mut low = BandRmsAccumulator::new(cfg.clone())?;
    let (from, to) = raw_vibration_date_span(store, &fleet)?;
    for meta in &fleet {
        for sensor in &sensors {
            let acc = match sensor.freq_class {
                FreqClass::HighFrequency => &mut high,
                FreqClass::LowFrequency => &mut low,
            };
            store.for_each_spectrum(meta.id, sensor.point_id, from, to, |spec| acc.add(&spec))?;
        }
    }
    Ok(FleetBands {
        high: high.finish(FreqClass::HighFrequency)?,
        low: low.finish(FreqClass::LowFrequency)?,
    })
}

fn raw_vibration_date_span(
    store: &Store,
    fleet: &[EscalatorMeta],
) -> Result<(NaiveDate, NaiveDate)> {
    // partition files are named by service date; scan the tree once
    let mut min: Option<NaiveDate> = None;
    let mut max: Option<NaiveDate> = None;
    for meta in fleet {
        for point in 1..=8u8 {
            let dir = store
                .root()
                .join(format!("raw_vibration/{}/{point}", meta.id));
            if !dir.exists() {
                continue;
            }
            for entry in std::fs::read_dir(dir)? {
                let name = entry?.file_name();
                let name = name.to_string_lossy();
                if let Some(stem) = name.strip_suffix(".jsonl") {
                    if let Ok(d) = stem.parse::<NaiveDate>() {
                        min = Some(min.map_or(d, |m| m.min(d)));
                        max = Some(max.map_or(d, |m| m.max(d)));
                    }
                }
            }
        }
    }
    match (min, max) {
        (Some(a), Some(b)) => Ok((a, b)),
        _ => Err(PhmError::MissingData(
            "no raw vibration data in the store".into(),
        )),
    }
}

/// Load the stored band selections, or compute and persist them.
pub fn load_or_select_bands(store: &mut Store, cfg: &PipelineConfig) -> Result<FleetBands> {
    if store.has_model(BANDS_MODEL_NAME) {
        let path = store.root().join(format!("models/{BANDS_MODEL_NAME}.json"));
        let data = std::fs::read_to_string(path)?;
        return Ok(serde_json::from_str(&data)?);
    }
    let bands = select_fleet_bands(store, &cfg.band_config)?;
    save_bands(store, &bands)?;
    Ok(bands)
}

pub fn save_bands(store: &mut Store, bands: &FleetBands) -> Result<()> {
    let json = serde_json::to_string_pretty(bands)?;
    let rel = format!("models/{BANDS_MODEL_NAME}.json");
    std::fs::create_dir_all(store.root().join("models"))?;
    std::fs::write(store.root().join(&rel), json)?;
    Ok(())
}

/// What happened while computing one quarter.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct QuarterRunReport {
    pub escalators_processed: Vec<u32>,
    /// Escalators skipped entirely, with reasons.
    pub skipped: Vec<(u32, String)>,
    /// Days excluded from aggregation for in-window gaps.
    pub excluded_days: Vec<(u32, NaiveDate)>,
    /// Days that could not be analyzed at all, with reasons.
    pub unusable_days: Vec<(u32, NaiveDate, String)>,
}

/// Compute daily features, reduced `A_t` records, and quarterly LHI features
/// for every fleet escalator with data in `quarter`; persist all three.
pub fn compute_quarter_features(
    store: &mut Store,
    quarter: Quarter,
    cfg: &PipelineConfig,
) -> Result<QuarterRunReport> {
    let fleet = store.fleet()?;
    let sensors = default_sensors();
    let thresholds = ThresholdTable::preset();
    let bands = load_or_select_bands(store, cfg)?;
    let offset = store.utc_offset_hours();
    let prior_quarters: Vec<Quarter> = store
        .list_quarters()?
        .into_iter()
        .filter(|q| *q < quarter)
        .collect();

    let mut report = QuarterRunReport::default();
    let mut quarter_rows: Vec<QuarterFeatures> = Vec::new();

    for meta in &fleet {
        match compute_escalator_quarter(
            store,
            meta,
            quarter,
            cfg,
            &sensors,
            &thresholds,
            &bands,
            offset,
            &prior_quarters,
            &mut report,
        ) {
            Ok(Some(features)) => {
                report.escalators_processed.push(meta.id);
                quarter_rows.push(features);
            }
            Ok(None) => {}
            Err(e) => report.skipped.push((meta.id, e.to_string())),
        }
    }

    if quarter_rows.is_empty() {
        return Err(PhmError::MissingData(format!(
            "no escalator produced features for {quarter}"
        )));
    }
    store.write_quarters(quarter, &quarter_rows)?;
    Ok(report)
}

#[allow(clippy::too_many_arguments)]
fn compute_escalator_quarter(
    store: &mut Store,
    meta: &EscalatorMeta,
    quarter: Quarter,
    cfg: &PipelineConfig,
    sensors: &[SensorPoint; 8],
    thresholds: &ThresholdTable,
    bands: &FleetBands,
    offset: i32,
    prior_quarters: &[Quarter],
    report: &mut QuarterRunReport,
) -> Result<Option<QuarterFeatures>> {
    let minutes = store.query_energy(meta.id, quarter.first_date(), quarter.last_date())?;
    if minutes.is_empty() {
        report
            .skipped
            .push((meta.id, format!("no energy data in {quarter}")));
        return Ok(None);
    }
    let profiles = regroup_service_day(&minutes, offset)?;

    let mut all_rows: Vec<DailyFeatures> = Vec::new();
    let mut usable_rows: Vec<DailyFeatures> = Vec::new();
    for profile in &profiles {
        match analyze_day(profile, meta, cfg.min_event_duration) {
            Ok((features, excluded)) => {
                all_rows.push(features.clone());
                if excluded {
                    report.excluded_days.push((meta.id, profile.service_date));
                } else {
                    usable_rows.push(features);
                }
            }
            Err(e) => {
                report
                    .unusable_days
                    .push((meta.id, profile.service_date, e.to_string()));
            }
        }
    }

    // A_t per sensor-day, reduced to at most three records
    let mut reduced: Vec<AtRecord> = Vec::new();
    for sensor in sensors {
        let selection = bands.for_class(sensor.freq_class);
        let mut date = quarter.first_date();
        while date <= quarter.last_date() {
            let day_spectra = store.query_vibration(meta.id, sensor.point_id, date, date)?;
            if !day_spectra.is_empty() {
                let mut day_records = Vec::with_capacity(day_spectra.len());
                for spec in &day_spectra {
                    day_records.push(compute_at(spec, selection, thresholds)?);
                }
                reduced.extend(daily_at_reduction(
                    &day_records,
                    &cfg.reduction_windows,
                    offset,
                ));
            }
            date = date.succ_opt().unwrap();
        }
    }
    reduced.sort_by_key(|r| (r.point_id, r.timestamp_utc));

    let prior = latest_prior_cumulative(store, meta.id, prior_quarters)?;
    let ctx = QuarterContext {
        quarter,
        meta,
        sensors,
        prior,
        age_reference: cfg.age_reference,
        renormalize_missing_sensors: cfg.renormalize_missing_sensors,
    };
    let features = aggregate_quarter(&usable_rows, &reduced, &ctx)?;

    store.write_daily_features(meta.id, &all_rows)?;
    store.write_at_records(meta.id, &reduced)?;
    Ok(Some(features))
}

fn latest_prior_cumulative(
    store: &Store,
    escalator_id: u32,
    prior_quarters: &[Quarter],
) -> Result<Option<crate::health::CumulativeState>> {
    for q in prior_quarters.iter().rev() {
        let rows = store.read_quarters(*q)?;
        if let Some(row) = rows.iter().find(|r| r.escalator_id == escalator_id) {
            return Ok(Some(row.cumulative()));
        }
    }
    Ok(None)
}

/// Fit the exponential reference model on every stored quarterly point.
pub fn fit_model_from_store(
    store: &Store,
    policy: &ExclusionPolicy,
    t_end_years: f64,
) -> Result<LhiModel> {
    let quarters = store.list_quarters()?;
    if quarters.is_empty() {
        return Err(PhmError::MissingData(
            "no quarterly features stored; run the features stage first".into(),
        ));
    }
    let mut points = Vec::new();
    for q in quarters {
        for row in store.read_quarters(q)? {
            points.push(FitPoint {
                escalator_id: row.escalator_id,
                quarter: row.quarter,
                age_years: row.age_years,
                lhi: row.lhi,
            });
        }
    }
    fit_reference_model(&points, policy, t_end_years)
}

/// RUL rows for one stored quarter under a model, ordered by escalator id.
pub fn compute_rul(store: &Store, model: &LhiModel, quarter: Quarter) -> Result<Vec<RulRecord>> {
    let mut rows = store.read_quarters(quarter)?;
    rows.sort_by_key(|r| r.escalator_id);
    rows.iter()
        .map(|features| RulRecord::from_features(features, model))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::Store;
    use crate::synth::{
        date_range, generate_day_spectra, generate_energy_day, InjectedEvent, InjectedKind,
        SimConfig,
    };
    use tempfile::TempDir;

    /// Write a small simulated fleet straight into store partitions via ingest.
    fn seeded_store(cfg: &SimConfig, escalators: &[u32]) -> (TempDir, Store) {
        let raw = TempDir::new().unwrap();
        std::fs::create_dir_all(raw.path().join("energy")).unwrap();
        std::fs::create_dir_all(raw.path().join("vibration")).unwrap();
        std::fs::write(
            raw.path().join("fleet.json"),
            serde_json::to_string(&cfg.fleet).unwrap(),
        )
        .unwrap();
        for &esc in escalators {
            let mut energy_csv = String::from("escalator_id,timestamp_utc,e_imp_wh,e_exp_wh\n");
            let mut jsonl = String::new();
            for date in date_range(cfg) {
                let (minutes, _) = generate_energy_day(cfg, esc, date).unwrap();
                for m in minutes {
                    energy_csv.push_str(&format!(
                        "{},{},{:.3},{:.3}\n",
                        m.escalator_id,
                        m.timestamp_utc
                            .to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
                        m.e_imp_wh,
                        m.e_exp_wh
                    ));
                }
                for s in generate_day_spectra(cfg, esc, date).unwrap() {
                    jsonl.push_str(&serde_json::to_string(&s).unwrap());
                    jsonl.push('\n');
                }
            }
            std::fs::write(raw.path().join(format!("energy/{esc}.csv")), energy_csv).unwrap();
            std::fs::write(raw.path().join(format!("vibration/{esc}.jsonl")), jsonl).unwrap();
        }
        let store_dir = TempDir::new().unwrap();
        let mut store = Store::create(store_dir.path(), cfg.utc_offset_hours).unwrap();
        let report = store.ingest(raw.path()).unwrap();
        assert!(report.clean(), "{report:?}");
        (store_dir, store)
    }

    fn small_cfg() -> SimConfig {
        let mut cfg = SimConfig::new(2024);
        cfg.start_date = chrono::NaiveDate::from_ymd_opt(2021, 10, 1).unwrap();
        cfg.end_date = cfg.start_date + chrono::Duration::days(13);
        cfg.spectrum_bins = 128;
        cfg
    }

    #[test]
    fn quarter_pipeline_end_to_end() {
        let mut cfg = small_cfg();
        cfg.injected_events.push(InjectedEvent {
            date: cfg.start_date + chrono::Duration::days(3),
            escalator_id: 0,
            kind: InjectedKind::CorrectiveShutdown,
            duration_min: 40,
            start_slot: None,
        });
        let escalators = [0u32, 19];
        let (_dir, mut store) = seeded_store(&cfg, &escalators);
        let quarter = Quarter::new(2021, 4).unwrap();
        let pcfg = PipelineConfig::default();
        let report = compute_quarter_features(&mut store, quarter, &pcfg).unwrap();
        assert_eq!(report.escalators_processed, vec![0, 19]);
        // the other 22 fleet units had no data
        assert_eq!(report.skipped.len(), 22);
        assert!(report.excluded_days.is_empty());

        let rows = store.read_quarters(quarter).unwrap();
        assert_eq!(rows.len(), 2);
        let esc0 = rows.iter().find(|r| r.escalator_id == 0).unwrap();
        assert_eq!(esc0.days_aggregated, 14);
        assert_eq!(esc0.raw_fault_count, 1); // the injected shutdown
        assert!(esc0.lhi > 0.0 && esc0.lhi < 1.0);

        // daily and A_t partitions were persisted
        assert_eq!(store.read_daily_features(0).unwrap().len(), 14);
        let at = store.read_at_records(0).unwrap();
        assert_eq!(at.len(), 8 * 3 * 14); // 8 sensors × ≤3 records × 14 days
                                          // bands were selected and persisted
        assert!(store.has_model(BANDS_MODEL_NAME));

        // model fitting needs at least 3 points; two escalators is not enough
        assert!(matches!(
            fit_model_from_store(&store, &ExclusionPolicy::None, 35.0),
            Err(PhmError::InsufficientPoints { .. })
        ));

        // RUL from the bundled reference model
        let model = LhiModel::reference_default();
        let rul = compute_rul(&store, &model, quarter).unwrap();
        assert_eq!(rul.len(), 2);
        assert!(rul[0].rul > 0.0);
        assert_eq!(rul[0].escalator_id, 0);
    }

    #[test]
    fn rerunning_features_is_idempotent() {
        let cfg = small_cfg();
        let (_dir, mut store) = seeded_store(&cfg, &[11]);
        let quarter = Quarter::new(2021, 4).unwrap();
        let pcfg = PipelineConfig::default();
        compute_quarter_features(&mut store, quarter, &pcfg).unwrap();
        let daily_1 = std::fs::read(store.root().join("derived_daily/11.csv")).unwrap();
        let quarters_1 = std::fs::read(store.root().join("quarters/2021Q4.csv")).unwrap();
        compute_quarter_features(&mut store, quarter, &pcfg).unwrap();
        let daily_2 = std::fs::read(store.root().join("derived_daily/11.csv")).unwrap();
        let quarters_2 = std::fs::read(store.root().join("quarters/2021Q4.csv")).unwrap();
        assert_eq!(daily_1, daily_2);
        assert_eq!(quarters_1, quarters_2);
        assert!(store.verify().unwrap().is_empty());
    }

    #[test]
    fn second_quarter_continues_cumulative_totals() {
        let mut cfg = small_cfg();
        // span the Q4/Q1 boundary
        cfg.start_date = chrono::NaiveDate::from_ymd_opt(2021, 12, 28).unwrap();
        cfg.end_date = chrono::NaiveDate::from_ymd_opt(2022, 1, 4).unwrap();
        let (_dir, mut store) = seeded_store(&cfg, &[7]);
        let pcfg = PipelineConfig::default();
        let q4 = Quarter::new(2021, 4).unwrap();
        let q1 = Quarter::new(2022, 1).unwrap();
        compute_quarter_features(&mut store, q4, &pcfg).unwrap();
        compute_quarter_features(&mut store, q1, &pcfg).unwrap();
        let row_q4 = &store.read_quarters(q4).unwrap()[0];
        let row_q1 = &store.read_quarters(q1).unwrap()[0];
        // Q1 carried Q4's cumulative totals forward
        assert!(row_q1.raw_working_min > row_q4.raw_working_min);
        let q1_quarter_sum: f64 = store
            .read_daily_features(7)
            .unwrap()
            .iter()
            .filter(|d| d.service_date >= q1.first_date())
            .map(|d| d.working_min as f64)
            .sum();
        let expected = row_q4.raw_working_min + q1_quarter_sum;
        assert!(
            (row_q1.raw_working_min - expected).abs() < 1.0,
            "{} vs {expected}",
            row_q1.raw_working_min
        );
        // baseline fixed loss carried unchanged
        assert_eq!(
            row_q1.baseline_fixed_loss_wh_min,
            row_q4.baseline_fixed_loss_wh_min
        );
    }
}
