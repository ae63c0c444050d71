//! Generate a one-week synthetic raw-data directory with ground truth.
//!
//! ```bash
//! cargo run --example simulate_fleet -- /tmp/escalator-raw
//! ```

use escalator_phm::synth::{
    date_range, generate_energy_day, InjectedEvent, InjectedKind, SimConfig,
};

fn main() -> escalator_phm::Result<()> {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "/tmp/escalator-raw".to_string());

    let mut cfg = SimConfig::new(7);
    cfg.end_date = cfg.start_date + chrono::Duration::days(6);
    cfg.spectrum_bins = 128;
    cfg.injected_events.push(InjectedEvent {
        date: cfg.start_date + chrono::Duration::days(2),
        escalator_id: 3,
        kind: InjectedKind::CorrectiveShutdown,
        duration_min: 45,
        start_slot: None,
    });
    cfg.validate()?;

    // the CLI `simulate` subcommand does the same file layout; here we peek
    // at one day in memory first
    let (minutes, truth) =
        generate_energy_day(&cfg, 3, cfg.start_date + chrono::Duration::days(2))?;
    println!(
        "escalator 3 on {}: {} minutes, {} passengers, fixed loss {:.1} Wh/min, {} injected event(s)",
        truth.service_date,
        minutes.len(),
        truth.passengers,
        truth.fixed_loss_wh_per_min,
        truth.events.len()
    );

    let code = escalator_phm::cli::dispatch([
        "escalator-phm".to_string(),
        "simulate".into(),
        "--config".into(),
        write_config(&cfg)?,
        "--out".into(),
        out.clone(),
    ]);
    assert_eq!(code, 0);
    println!(
        "raw layout written under {out}: energy/, vibration/, ground_truth/, fleet.json ({} days)",
        date_range(&cfg).len()
    );
    Ok(())
}

fn write_config(cfg: &SimConfig) -> escalator_phm::Result<String> {
    let path = std::env::temp_dir().join("simulate_fleet_config.json");
    std::fs::write(&path, serde_json::to_string_pretty(cfg)?)?;
    Ok(path.display().to_string())
}
