//! The whole pipeline through the CLI: simulate → ingest → bands → features
//! → fit → rul → report → verify, in a temporary directory.
//!
//! ```bash
//! cargo run --example full_pipeline
//! ```

use escalator_phm::synth::{InjectedEvent, InjectedKind, SimConfig};

fn run(args: &[String]) {
    println!("$ {}", args.join(" "));
    let code = escalator_phm::cli::dispatch(args.to_vec());
    assert_eq!(code, 0, "command failed with exit code {code}");
}

fn main() -> escalator_phm::Result<()> {
    let base = std::env::temp_dir().join("escalator-phm-demo");
    let _ = std::fs::remove_dir_all(&base);
    std::fs::create_dir_all(&base)?;

    // a compact quarter: six escalators, 30 days, 128-bin spectra
    let mut cfg = SimConfig::new(99);
    cfg.fleet.retain(|m| [0, 2, 3, 16, 19, 21].contains(&m.id));
    cfg.start_date = chrono::NaiveDate::from_ymd_opt(2021, 10, 1).unwrap();
    cfg.end_date = chrono::NaiveDate::from_ymd_opt(2021, 10, 30).unwrap();
    cfg.spectrum_bins = 128;
    cfg.injected_events = vec![
        InjectedEvent {
            date: chrono::NaiveDate::from_ymd_opt(2021, 10, 9).unwrap(),
            escalator_id: 3,
            kind: InjectedKind::CorrectiveShutdown,
            duration_min: 30,
            start_slot: None,
        },
        InjectedEvent {
            date: chrono::NaiveDate::from_ymd_opt(2021, 10, 17).unwrap(),
            escalator_id: 21,
            kind: InjectedKind::PreventiveNight,
            duration_min: 40,
            start_slot: None,
        },
    ];
    let config = base.join("sim.json");
    std::fs::write(&config, serde_json::to_string_pretty(&cfg)?)?;

    let report_spec = base.join("report-spec.json");
    std::fs::write(
        &report_spec,
        r#"{
  "escalators": [],
  "period": {"from": "2021-10-01", "to": "2021-12-31"},
  "sheets": ["overview", "energy", "vibration", "rul"]
}"#,
    )?;

    let raw = base.join("raw").display().to_string();
    let store = base.join("store").display().to_string();
    let s = |v: &str| v.to_string();
    run(&[
        s("escalator-phm"),
        s("simulate"),
        s("--config"),
        config.display().to_string(),
        s("--out"),
        raw.clone(),
    ]);
    run(&[
        s("escalator-phm"),
        s("ingest"),
        s("--raw"),
        raw,
        s("--store"),
        store.clone(),
    ]);
    run(&[s("escalator-phm"), s("bands"), s("--store"), store.clone()]);
    run(&[
        s("escalator-phm"),
        s("features"),
        s("--store"),
        store.clone(),
        s("--quarter"),
        s("2021Q4"),
    ]);
    run(&[
        s("escalator-phm"),
        s("fit"),
        s("--store"),
        store.clone(),
        s("--t-end"),
        s("35"),
        s("--out"),
        s("models/reference.json"),
    ]);
    run(&[
        s("escalator-phm"),
        s("rul"),
        s("--store"),
        store.clone(),
        s("--model"),
        s("reference"),
        s("--quarter"),
        s("2021Q4"),
        s("--out"),
        base.join("rul.csv").display().to_string(),
    ]);
    run(&[
        s("escalator-phm"),
        s("report"),
        s("--store"),
        store.clone(),
        s("--spec"),
        report_spec.display().to_string(),
        s("--out"),
        base.join("report.html").display().to_string(),
    ]);
    run(&[s("escalator-phm"), s("verify"), s("--store"), store]);

    println!("\nRUL output:");
    print!("{}", std::fs::read_to_string(base.join("rul.csv"))?);
    println!("\nartifacts under {}", base.display());
    Ok(())
}
