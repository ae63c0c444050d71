//! From a time-domain acceleration signal to an A_t classification:
//! FFT magnitude spectrum, band RMS, and the thresholded vibration level.
//!
//! ```bash
//! cargo run --example spectrum_features
//! ```

use escalator_phm::domain::{FreqClass, ThresholdTable};
use escalator_phm::vibration::{band_rms, compute_at, fft_magnitude, BandSelection};

fn main() -> escalator_phm::Result<()> {
    // synthetic gearbox signal: 3 kHz and 6.5 kHz tones inside the dominant
    // band, a 0.2 kHz hum outside it, sampled at 25.6 kHz
    let sample_rate = 25_600.0;
    let n = 4096;
    let samples: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 / sample_rate;
            let w = std::f64::consts::TAU;
            0.011 * (w * 3_000.0 * t).sin()
                + 0.006 * (w * 6_500.0 * t).sin()
                + 0.02 * (w * 200.0 * t).sin()
        })
        .collect();

    let spectrum = fft_magnitude(&samples, sample_rate)?;
    println!(
        "spectrum: {} bins of {:.2} Hz",
        spectrum.magnitudes.len(),
        spectrum.bin_hz
    );

    let time_energy: f64 = samples.iter().map(|x| x * x).sum();
    let freq_energy: f64 = spectrum.magnitudes.iter().map(|m| m * m).sum();
    println!("Parseval check: time {time_energy:.6} vs spectrum {freq_energy:.6}");

    let record = spectrum.into_record(0, 1, chrono::Utc::now());
    for (lo, hi) in [(0.0, 0.5), (0.5, 2.0), (2.0, 10.0), (10.0, 12.8)] {
        println!(
            "band RMS [{lo:>4}, {hi:>4}) kHz: {:.4} g",
            band_rms(&record, lo, hi)?
        );
    }

    // A_t over the high-frequency dominant band, classified for gearbox DE
    let selection = BandSelection {
        freq_class: FreqClass::HighFrequency,
        band_lo_khz: 2.0,
        band_hi_khz: 10.0,
        band_stats: vec![],
    };
    let at = compute_at(&record, &selection, &ThresholdTable::preset())?;
    println!(
        "A_t = {:.3} g over [2, 10) kHz -> {} (gearbox thresholds 0.375 / 0.75 g)",
        at.at_g, at.status
    );
    Ok(())
}
