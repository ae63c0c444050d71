//! Aggregate one escalator's quarter into the five LHI variables, in memory.
//!
//! Daily energy features and reduced A_t records are built from the
//! synthetic generator, then folded into a `QuarterFeatures` row with its
//! lifetime health index.
//!
//! ```bash
//! cargo run --example quarterly_health
//! ```

use escalator_phm::domain::{
    default_sensors, find_escalator, sensor_by_point, Quarter, ThresholdTable,
    DEFAULT_AGE_REFERENCE,
};
use escalator_phm::energy::{analyze_day, regroup_service_day, DEFAULT_MIN_EVENT_MINUTES};
use escalator_phm::health::{aggregate_quarter, QuarterContext};
use escalator_phm::synth::{
    class_dominant_band, date_range, generate_day_spectra, generate_energy_day, SimConfig,
};
use escalator_phm::vibration::{
    compute_at, daily_at_reduction, default_reduction_windows, BandSelection,
};

fn main() -> escalator_phm::Result<()> {
    let escalator = 19;
    let mut cfg = SimConfig::new(2021);
    cfg.start_date = chrono::NaiveDate::from_ymd_opt(2021, 10, 1).unwrap();
    cfg.end_date = chrono::NaiveDate::from_ymd_opt(2021, 10, 31).unwrap();
    cfg.spectrum_bins = 256;
    let meta = find_escalator(&cfg.fleet, escalator)?.clone();
    let sensors = default_sensors();
    let thresholds = ThresholdTable::preset();
    let windows = default_reduction_windows();

    let mut daily = Vec::new();
    let mut at_records = Vec::new();
    for date in date_range(&cfg) {
        let (minutes, _) = generate_energy_day(&cfg, escalator, date)?;
        let profiles = regroup_service_day(&minutes, cfg.utc_offset_hours)?;
        let (features, excluded) = analyze_day(&profiles[0], &meta, DEFAULT_MIN_EVENT_MINUTES)?;
        if !excluded {
            daily.push(features);
        }

        // per-day A_t records reduced to at most three per sensor
        for sensor in &sensors {
            let (lo, hi) = class_dominant_band(sensor.freq_class);
            let selection = BandSelection {
                freq_class: sensor.freq_class,
                band_lo_khz: lo,
                band_hi_khz: hi,
                band_stats: vec![],
            };
            let day_records: Vec<_> = generate_day_spectra(&cfg, escalator, date)?
                .into_iter()
                .filter(|s| s.point_id == sensor.point_id)
                .map(|s| compute_at(&s, &selection, &thresholds))
                .collect::<escalator_phm::Result<_>>()?;
            at_records.extend(daily_at_reduction(
                &day_records,
                &windows,
                cfg.utc_offset_hours,
            ));
        }
    }

    let ctx = QuarterContext {
        quarter: Quarter::new(2021, 4).unwrap(),
        meta: &meta,
        sensors: &sensors,
        prior: None,
        age_reference: DEFAULT_AGE_REFERENCE,
        renormalize_missing_sensors: false,
    };
    let q = aggregate_quarter(&daily, &at_records, &ctx)?;

    println!(
        "escalator {} in {} (age {:.2} y, {} days aggregated):",
        q.escalator_id, q.quarter, q.age_years, q.days_aggregated
    );
    println!("{:<22} {:>16} {:>12}", "variable", "raw", "normalized");
    println!(
        "{:<22} {:>16.0} {:>12.4}",
        "working time (min)", q.raw_working_min, q.working_time
    );
    println!(
        "{:<22} {:>16.0} {:>12.4}",
        "passenger load", q.raw_passengers, q.passenger_load
    );
    println!(
        "{:<22} {:>16.4} {:>12.4}",
        "fixed loss residual", q.raw_fixed_loss_residual, q.fixed_loss_residual
    );
    println!(
        "{:<22} {:>16.4} {:>12.4}",
        "exceedance area", q.raw_at_area, q.at_areas
    );
    println!(
        "{:<22} {:>16} {:>12.4}",
        "fault count", q.raw_fault_count, q.fault_counts
    );
    println!("\nlifetime health index: {:.4}", q.lhi);
    assert!(sensor_by_point(8)?.point_id == 8);
    Ok(())
}
