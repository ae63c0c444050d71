//! Fit the exponential reference model on noisy fleet points, then read
//! estimated age, remaining useful life, and the shifted curve off it.
//!
//! ```bash
//! cargo run --example fit_and_rul
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use escalator_phm::domain::Quarter;
use escalator_phm::health::{fit_reference_model, ExclusionPolicy, FitPoint, LhiModel};
use escalator_phm::rul::{estimated_age, remaining_useful_life, shifted_curve};

fn main() -> escalator_phm::Result<()> {
    // 24 noisy observations of a known degradation law
    let truth = LhiModel::from_params(0.0928, 0.0665, 35.0);
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let quarter = Quarter::new(2021, 4).unwrap();
    let points: Vec<FitPoint> = (0..24)
        .map(|i| {
            let age = 3.0 + 26.0 * i as f64 / 23.0;
            FitPoint {
                escalator_id: i,
                quarter,
                age_years: age,
                lhi: truth.value_at(age) * (1.0 + rng.random_range(-0.05..0.05)),
            }
        })
        .collect();

    let model = fit_reference_model(&points, &ExclusionPolicy::AutoWorst(4), 35.0)?;
    println!(
        "fitted a = {:.5} (truth 0.09280), b = {:.5} (truth 0.06650), excluded {:?}",
        model.a, model.b, model.excluded
    );
    println!("end of life: F({}) = {:.4}", model.t_end_years, model.y_end);

    // an 18.05-year-old unit observed at LHI 0.189
    let (y, age) = (0.189, 18.05);
    let t_hat = estimated_age(y, &model)?;
    let figures = remaining_useful_life(y, age, &model)?;
    println!("\nobservation: LHI {y} at age {age} y");
    println!("  estimated age {t_hat:.2} y (condition-equivalent)");
    println!(
        "  RUL {:.2} y, end of service life at age {:.2} y",
        figures.rul_years, figures.end_age_years
    );

    let ages: Vec<f64> = (0..=45).map(|t| t as f64).collect();
    let curve = shifted_curve(y, age, &model, &ages)?;
    println!("\nshifted curve (truncated at y_end = {:.4}):", model.y_end);
    for (t, v) in curve.iter().step_by(5) {
        println!("  age {t:>4.0}  LHI {v:.4}");
    }
    if let Some((t_last, _)) = curve.last() {
        println!(
            "  curve ends by age {t_last:.0}, consistent with end age {:.2}",
            figures.end_age_years
        );
    }
    Ok(())
}
