//! One service day of energy processing against known ground truth:
//! regrouping, fixed/variable loss split, passenger estimation, and
//! maintenance-event detection.
//!
//! ```bash
//! cargo run --example energy_pipeline
//! ```

use escalator_phm::domain::find_escalator;
use escalator_phm::energy::{
    analyze_day, detect_events, estimate_fixed_loss, regroup_service_day, DEFAULT_MIN_EVENT_MINUTES,
};
use escalator_phm::synth::{generate_energy_day, InjectedEvent, InjectedKind, SimConfig};

fn main() -> escalator_phm::Result<()> {
    let mut cfg = SimConfig::new(41);
    cfg.end_date = cfg.start_date;
    cfg.injected_events.push(InjectedEvent {
        date: cfg.start_date,
        escalator_id: 19,
        kind: InjectedKind::CorrectiveShutdown,
        duration_min: 60,
        start_slot: None,
    });

    for esc in [0u32, 19] {
        let meta = find_escalator(&cfg.fleet, esc)?;
        let (minutes, truth) = generate_energy_day(&cfg, esc, cfg.start_date)?;
        let profiles = regroup_service_day(&minutes, cfg.utc_offset_hours)?;
        let profile = &profiles[0];

        println!(
            "escalator {esc} ({}, rise {} m) on {}:",
            meta.direction, meta.rise_m, profile.service_date
        );
        let ef = estimate_fixed_loss(profile, meta.direction, &meta.service_window)?;
        println!(
            "  fixed loss     {:.2} Wh/min estimated vs {:.2} ground truth",
            ef, truth.fixed_loss_wh_per_min
        );
        let (features, excluded) = analyze_day(profile, meta, DEFAULT_MIN_EVENT_MINUTES)?;
        println!(
            "  working time   {} min, variable loss {:.0} Wh",
            features.working_min, features.variable_loss_wh
        );
        println!(
            "  passengers     {:.0} estimated vs {} ground truth",
            features.passengers, truth.passengers
        );
        let events = detect_events(profile, &meta.service_window, DEFAULT_MIN_EVENT_MINUTES);
        println!(
            "  events         {} detected vs {} injected",
            events.len(),
            truth.events.len()
        );
        for e in &events {
            println!(
                "    {:?} at {} for {} min",
                e.kind,
                e.start_local(profile.service_date),
                e.duration_min
            );
        }
        assert!(!excluded);
        println!();
    }
    Ok(())
}
