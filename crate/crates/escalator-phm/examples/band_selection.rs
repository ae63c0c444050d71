//! Dominant frequency-band selection over a synthetic fleet corpus.
//!
//! Builds three days of spectra for all 24 escalators and 8 sensors, groups
//! them by frequency class, and prints the per-band statistics behind the
//! selected ranges.
//!
//! ```bash
//! cargo run --example band_selection
//! ```

use escalator_phm::domain::{sensor_by_point, FreqClass};
use escalator_phm::synth::{date_range, generate_day_spectra, SimConfig};
use escalator_phm::vibration::select_dominant_bands;

fn main() -> escalator_phm::Result<()> {
    let mut cfg = SimConfig::new(20210814);
    cfg.end_date = cfg.start_date + chrono::Duration::days(2);

    let mut high = Vec::new();
    let mut low = Vec::new();
    for meta in &cfg.fleet.clone() {
        for date in date_range(&cfg) {
            for spec in generate_day_spectra(&cfg, meta.id, date)? {
                match sensor_by_point(spec.point_id)?.freq_class {
                    FreqClass::HighFrequency => high.push(spec),
                    FreqClass::LowFrequency => low.push(spec),
                }
            }
        }
    }
    println!(
        "corpus: {} high-frequency, {} low-frequency spectra",
        high.len(),
        low.len()
    );

    for (name, class, corpus) in [
        ("high-frequency components", FreqClass::HighFrequency, &high),
        ("low-frequency components", FreqClass::LowFrequency, &low),
    ] {
        let selection = select_dominant_bands(class, corpus, &Default::default())?;
        println!(
            "\n{name}: selected [{}, {}] kHz",
            selection.band_lo_khz, selection.band_hi_khz
        );
        println!(
            "{:>12} {:>12} {:>9} {:>10}",
            "band (kHz)", "median RMS", "outliers", "score"
        );
        for stat in &selection.band_stats {
            println!(
                "{:>5.1}-{:<6.1} {:>12.5} {:>9} {:>10.5}{}",
                stat.lo_khz,
                stat.hi_khz,
                stat.median_rms,
                stat.outlier_count,
                stat.score,
                if stat.lo_khz >= selection.band_lo_khz && stat.hi_khz <= selection.band_hi_khz {
                    "  <- kept"
                } else {
                    ""
                }
            );
        }
    }
    Ok(())
}
