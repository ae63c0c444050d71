//! Print the bundled fleet metadata, sensor layout, and preset thresholds.
//!
//! ```bash
//! cargo run --example fleet_overview
//! ```

use escalator_phm::domain::{default_fleet, default_sensors, ThresholdTable};

fn main() {
    println!("fleet ({} escalators):", default_fleet().len());
    println!(
        "{:>4} {:>8} {:>14} {:>6} {:>13}",
        "id", "rise(m)", "direction", "age(y)", "service"
    );
    for meta in default_fleet() {
        println!(
            "{:>4} {:>8.3} {:>14} {:>6.1} {:>13}",
            meta.id,
            meta.rise_m,
            meta.direction.to_string(),
            meta.age_years,
            meta.service_window.to_string()
        );
    }

    println!("\nsensor layout and weights:");
    let thresholds = ThresholdTable::preset();
    for sensor in default_sensors() {
        let row = thresholds.get(sensor.location);
        println!(
            "point {} {:<28} {:?}  weight {:.2}  alert/alarm {:.3}/{:.3} g",
            sensor.point_id,
            sensor.location.label(),
            sensor.freq_class,
            sensor.weight,
            row.alert_g,
            row.alarm_g
        );
    }
    let total: f64 = default_sensors().iter().map(|s| s.weight).sum();
    println!("weights sum: {total}");
}
