//! Remaining-useful-life computation from an LHI value and the fitted
//! reference model.
//!
//! The estimated age `T̂ = F⁻¹(y)` reads an escalator's condition-equivalent
//! age off the reference curve; the remaining useful life is `t_end − T̂`.
//! For reporting, the reference curve is shifted horizontally to pass through
//! the escalator's (actual age, LHI) point and truncated at the end-of-life
//! level.

use serde::{Deserialize, Serialize};

use crate::domain::Quarter;
use crate::error::{PhmError, Result};
use crate::health::{LhiModel, QuarterFeatures};

/// Condition-equivalent age `T̂ = F⁻¹(y) = ln(y/a)/b`.
///
/// May be negative when `y < a` (healthier than a new reference unit); the
/// value is returned as-is rather than clamped.
pub fn estimated_age(y: f64, model: &LhiModel) -> Result<f64> {
    if y.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) || !y.is_finite() {
        return Err(PhmError::NonPositiveLhi(y));
    }
    Ok((y / model.a).ln() / model.b)
}

/// The RUL figures for one escalator at one point in time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RulFigures {
    pub actual_age_years: f64,
    pub estimated_age_years: f64,
    /// `t_end − estimated_age`. Not clamped: values above `t_end` (for
    /// `y < a`) and below zero (past end of life) are reported as-is.
    pub rul_years: f64,
    /// `actual_age + rul`: where the shifted curve meets the end-of-life level.
    pub end_age_years: f64,
    /// The LHI the figures were computed from.
    pub lhi: f64,
}

/// Remaining useful life of an escalator with health index `y` at
/// `actual_age`.
pub fn remaining_useful_life(y: f64, actual_age: f64, model: &LhiModel) -> Result<RulFigures> {
    let estimated = estimated_age(y, model)?;
    let rul = model.t_end_years - estimated;
    Ok(RulFigures {
        actual_age_years: actual_age,
        estimated_age_years: estimated,
        rul_years: rul,
        end_age_years: actual_age + rul,
        lhi: y,
    })
}

/// The reference curve shifted horizontally to pass through
/// `(actual_age, y)`, sampled at `sample_ages` and truncated where the value
/// exceeds the end-of-life level.
pub fn shifted_curve(
    y: f64,
    actual_age: f64,
    model: &LhiModel,
    sample_ages: &[f64],
) -> Result<Vec<(f64, f64)>> {
    let delta = actual_age - estimated_age(y, model)?;
    Ok(sample_ages
        .iter()
        .map(|&t| (t, model.value_at(t - delta)))
        .filter(|(_, v)| *v <= model.y_end)
        .collect())
}

/// Age at which the shifted curve reaches the end-of-life level, computed
/// along the curve (`δ + F⁻¹(y_end)`). Algebraically this equals
/// `actual_age + rul`; the two routes are kept separate so their agreement
/// can be checked numerically.
pub fn shifted_curve_end_age(y: f64, actual_age: f64, model: &LhiModel) -> Result<f64> {
    let delta = actual_age - estimated_age(y, model)?;
    Ok(delta + estimated_age(model.y_end, model)?)
}

/// One row of the RUL output CSV, mirroring the quarterly feature columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RulRecord {
    pub escalator_id: u32,
    pub year: i32,
    pub quarter: u8,
    pub actual_age: f64,
    pub years_till_35: f64,
    pub rul: f64,
    pub lhi: f64,
    pub working_hours: f64,
    pub passenger_load: f64,
    pub at_areas: f64,
    pub fixed_loss_residual: f64,
    pub fault_counts: f64,
}

impl RulRecord {
    /// Compute the RUL row for one quarter's features under a model.
    pub fn from_features(features: &QuarterFeatures, model: &LhiModel) -> Result<RulRecord> {
        let figures = remaining_useful_life(features.lhi, features.age_years, model)?;
        Ok(RulRecord {
            escalator_id: features.escalator_id,
            year: features.quarter.year,
            quarter: features.quarter.quarter,
            actual_age: features.age_years,
            years_till_35: model.t_end_years - features.age_years,
            rul: figures.rul_years,
            lhi: features.lhi,
            working_hours: features.working_time,
            passenger_load: features.passenger_load,
            at_areas: features.at_areas,
            fixed_loss_residual: features.fixed_loss_residual,
            fault_counts: features.fault_counts,
        })
    }

    pub fn quarter_key(&self) -> Quarter {
        Quarter {
            year: self.year,
            quarter: self.quarter,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::health::compute_lhi;

    fn model() -> LhiModel {
        LhiModel::reference_default()
    }

    #[test]
    fn estimated_age_of_starting_value_is_zero() {
        let m = model();
        assert_eq!(estimated_age(0.0928, &m).unwrap(), 0.0);
    }

    #[test]
    fn estimated_age_direct_evaluation() {
        let m = model();
        let t = estimated_age(0.19, &m).unwrap();
        assert!((t - 10.78).abs() < 0.01, "t = {t}");
    }

    #[test]
    fn estimated_age_round_trips_through_the_model() {
        let m = model();
        let y = m.value_at(20.0);
        let t = estimated_age(y, &m).unwrap();
        assert!((t - 20.0).abs() < 1e-12);
    }

    #[test]
    fn estimated_age_rejects_non_positive_lhi() {
        let m = model();
        assert!(matches!(
            estimated_age(0.0, &m),
            Err(PhmError::NonPositiveLhi(_))
        ));
        assert!(matches!(
            estimated_age(-0.3, &m),
            Err(PhmError::NonPositiveLhi(_))
        ));
    }

    #[test]
    fn estimated_age_below_starting_value_goes_negative() {
        let m = model();
        let t = estimated_age(0.05, &m).unwrap();
        assert!(t < 0.0);
        // and the resulting RUL exceeds t_end, unclamped
        let fig = remaining_useful_life(0.05, 3.0, &m).unwrap();
        assert!(fig.rul_years > m.t_end_years);
    }

    #[test]
    fn rul_matches_reference_row_11() {
        let m = model();
        let y = compute_lhi(0.49, 0.08, 0.00, 0.19, 0.18);
        assert!((y - 0.189).abs() < 1e-12);
        let fig = remaining_useful_life(y, 18.05, &m).unwrap();
        assert!(
            (fig.rul_years - 24.30).abs() < 0.01,
            "rul = {}",
            fig.rul_years
        );
        assert!((fig.rul_years - 24.27).abs() <= 0.1); // printed reference value
    }

    #[test]
    fn rul_matches_reference_row_19() {
        let m = model();
        let fig = remaining_useful_life(0.452, 18.05, &m).unwrap();
        assert!(
            (fig.rul_years - 11.19).abs() < 0.01,
            "rul = {}",
            fig.rul_years
        );
        assert!((fig.rul_years - 11.25).abs() <= 0.1);
    }

    #[test]
    fn rul_is_zero_at_end_of_life_level() {
        let m = model();
        let fig = remaining_useful_life(m.y_end, 30.0, &m).unwrap();
        assert!(fig.rul_years.abs() < 1e-9);
        assert!((fig.end_age_years - 30.0).abs() < 1e-9);
    }

    #[test]
    fn unshifted_curve_equals_reference() {
        let m = model();
        let actual_age = 12.0;
        let y = m.value_at(actual_age); // δ = 0
        let ages: Vec<f64> = (0..=35).map(|t| t as f64).collect();
        let curve = shifted_curve(y, actual_age, &m, &ages).unwrap();
        for (t, v) in curve {
            assert!((v - m.value_at(t)).abs() < 1e-12);
        }
    }

    #[test]
    fn shifted_curve_passes_through_the_observation() {
        let m = model();
        let (y, actual_age) = (0.189, 18.05);
        let curve = shifted_curve(y, actual_age, &m, &[actual_age]).unwrap();
        assert_eq!(curve.len(), 1);
        assert!((curve[0].1 - y).abs() < 1e-12);
    }

    #[test]
    fn shifted_curve_truncates_at_end_of_life() {
        let m = model();
        let (y, actual_age) = (0.35, 10.0); // unhealthy early: curve ends before t_end
        let ages: Vec<f64> = (0..=60).map(|t| t as f64).collect();
        let curve = shifted_curve(y, actual_age, &m, &ages).unwrap();
        let end = shifted_curve_end_age(y, actual_age, &m).unwrap();
        for (t, v) in &curve {
            assert!(*v <= m.y_end);
            assert!(*t <= end + 1.0); // sampled at integer ages
        }
    }

    #[test]
    fn curve_end_age_agrees_with_rul_within_1e9() {
        let m = model();
        for (y, age) in [(0.189, 18.05), (0.452, 18.05), (0.226, 23.59), (0.1, 5.0)] {
            let fig = remaining_useful_life(y, age, &m).unwrap();
            let via_curve = shifted_curve_end_age(y, age, &m).unwrap();
            assert!(
                (via_curve - fig.end_age_years).abs() < 1e-9,
                "curve {via_curve} vs rul {end}",
                end = fig.end_age_years
            );
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            /// RUL is strictly decreasing in the health index.
            #[test]
            fn rul_decreases_with_lhi(y in 0.01f64..2.0, dy in 0.001f64..0.5) {
                let m = model();
                let r1 = remaining_useful_life(y, 10.0, &m).unwrap().rul_years;
                let r2 = remaining_useful_life(y + dy, 10.0, &m).unwrap().rul_years;
                prop_assert!(r2 < r1);
            }

            /// The two RUL formulations agree for arbitrary valid inputs.
            #[test]
            fn consistency_identity(y in 0.01f64..2.0, age in 0.0f64..40.0) {
                let m = model();
                let fig = remaining_useful_life(y, age, &m).unwrap();
                let via_curve = shifted_curve_end_age(y, age, &m).unwrap();
                prop_assert!((via_curve - fig.end_age_years).abs() < 1e-9);
            }
        }
    }
}
