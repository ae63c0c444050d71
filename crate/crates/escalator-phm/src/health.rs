//! Quarterly health aggregation, lifetime health index, and reference-model
//! fitting.
//!
//! Five condition variables are aggregated per escalator-quarter: cumulative
//! working time `T`, cumulative passenger load `P`, fixed-loss residual `L`,
//! weighted exceedance-curve area `N`, and fault count `C`. After min-max
//! normalization they combine into the lifetime health index
//! `y = 0.2·T + 0.2·P + 0.2·L + 0.3·N + 0.1·C` (higher is worse), and the
//! fleet-wide trend is captured by the exponential reference model
//! `y = a·exp(b·t)` fitted in log space.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::domain::{EscalatorMeta, Quarter, SensorPoint};
use crate::energy::DailyFeatures;
use crate::error::{PhmError, Result};
use crate::vibration::{exceedance_area, fleet_vibration_status, AtRecord};

/// LHI weights for (T, P, L, N, C).
pub const LHI_WEIGHTS: [f64; 5] = [0.2, 0.2, 0.2, 0.3, 0.1];

/// Default end-of-life age, years.
pub const DEFAULT_T_END_YEARS: f64 = 35.0;

/// The five LHI input variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LhiVariable {
    /// Cumulative lifetime working time, minutes.
    WorkingTime,
    /// Cumulative lifetime passenger load.
    PassengerLoad,
    /// Quarterly mean fixed-loss residual, Wh/min.
    FixedLossResidual,
    /// Weighted exceedance-curve area.
    ExceedanceArea,
    /// Corrective fault count in the quarter.
    FaultCount,
}

impl LhiVariable {
    /// Min-max bounds used for normalization. The maxima correspond to
    /// end-of-life duty: 35 y × 365 d × 20 h × 60 min of working time and
    /// 35 y × 365 d × 26 000 passengers of load.
    pub fn bounds(self) -> (f64, f64) {
        match self {
            LhiVariable::WorkingTime => (0.0, 15_330_000.0),
            LhiVariable::PassengerLoad => (0.0, 332_150_000.0),
            LhiVariable::FixedLossResidual => (0.0, 19.61),
            LhiVariable::ExceedanceArea => (0.0, 0.15),
            LhiVariable::FaultCount => (0.0, 33.0),
        }
    }
}

/// Min-max normalize a raw variable value, clamped to `[0, 1]`.
pub fn normalize(raw: f64, kind: LhiVariable) -> f64 {
    let (min, max) = kind.bounds();
    ((raw - min) / (max - min)).clamp(0.0, 1.0)
}

/// Lifetime health index: weighted sum of the five normalized variables.
pub fn compute_lhi(t: f64, p: f64, l: f64, n: f64, c: f64) -> f64 {
    debug_assert!([t, p, l, n, c].iter().all(|v| (0.0..=1.0).contains(v)));
    let [wt, wp, wl, wn, wc] = LHI_WEIGHTS;
    wt * t + wp * p + wl * l + wn * n + wc * c
}

/// Carry-over totals from previous quarters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CumulativeState {
    /// Lifetime working minutes up to (excluding) the quarter.
    pub working_min: f64,
    /// Lifetime passenger load up to (excluding) the quarter.
    pub passengers: f64,
    /// Baseline no-load loss used for residuals, Wh/min.
    pub baseline_fixed_loss_wh_min: f64,
}

/// The five LHI inputs for one escalator-quarter, raw and normalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuarterFeatures {
    pub escalator_id: u32,
    pub quarter: Quarter,
    pub age_years: f64,
    /// Raw cumulative lifetime working minutes.
    pub raw_working_min: f64,
    /// Raw cumulative lifetime passenger load.
    pub raw_passengers: f64,
    /// Raw quarterly mean fixed-loss residual, Wh/min.
    pub raw_fixed_loss_residual: f64,
    /// Raw weighted exceedance-curve area.
    pub raw_at_area: f64,
    /// Raw corrective fault count in the quarter.
    pub raw_fault_count: u32,
    /// Normalized variables.
    pub working_time: f64,
    pub passenger_load: f64,
    pub fixed_loss_residual: f64,
    pub at_areas: f64,
    pub fault_counts: f64,
    /// Lifetime health index.
    pub lhi: f64,
    /// Baseline fixed loss carried for later quarters, Wh/min.
    pub baseline_fixed_loss_wh_min: f64,
    /// Service days that entered the aggregation.
    pub days_aggregated: u32,
}

impl QuarterFeatures {
    /// Cumulative state to hand to the next quarter.
    pub fn cumulative(&self) -> CumulativeState {
        CumulativeState {
            working_min: self.raw_working_min,
            passengers: self.raw_passengers,
            baseline_fixed_loss_wh_min: self.baseline_fixed_loss_wh_min,
        }
    }
}

/// Inputs shared by one quarterly aggregation.
pub struct QuarterContext<'a> {
    pub quarter: Quarter,
    pub meta: &'a EscalatorMeta,
    pub sensors: &'a [SensorPoint],
    /// Totals from the previous quarter; `None` on the first monitored
    /// quarter, in which case pre-monitoring life is extrapolated as
    /// (age at quarter start) × 365 × (observed mean daily value).
    pub prior: Option<CumulativeState>,
    /// Anchor date of `meta.age_years`.
    pub age_reference: NaiveDate,
    /// Renormalize sensor weights when a sensor has no data (off by default;
    /// changes comparability across quarters).
    pub renormalize_missing_sensors: bool,
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Aggregate one escalator's quarter from daily features and reduced `A_t`
/// records.
///
/// `daily` must hold this escalator's non-excluded service days within the
/// quarter; `at_records` the post-reduction `A_t` records of all sensors in
/// the quarter.
pub fn aggregate_quarter(
    daily: &[DailyFeatures],
    at_records: &[AtRecord],
    ctx: &QuarterContext,
) -> Result<QuarterFeatures> {
    if daily.is_empty() {
        return Err(PhmError::MissingData(format!(
            "no usable service days for escalator {} in {}",
            ctx.meta.id, ctx.quarter
        )));
    }
    let days = daily.len() as f64;
    let quarter_working: f64 = daily.iter().map(|d| d.working_min as f64).sum();
    let quarter_passengers: f64 = daily.iter().map(|d| d.passengers).sum();

    // lifetime carry-over, extrapolated on the first monitored quarter
    let mut efs: Vec<f64> = daily.iter().map(|d| d.fixed_loss_wh_min).collect();
    let (prior_working, prior_passengers, baseline_ef) = match ctx.prior {
        Some(prev) => (
            prev.working_min,
            prev.passengers,
            prev.baseline_fixed_loss_wh_min,
        ),
        None => {
            let age_at_start = ctx
                .meta
                .age_at(ctx.quarter.first_date(), ctx.age_reference)
                .max(0.0);
            let prior_days = age_at_start * 365.0;
            (
                prior_days * quarter_working / days,
                prior_days * quarter_passengers / days,
                median(&mut efs),
            )
        }
    };

    let raw_working_min = prior_working + quarter_working;
    let raw_passengers = prior_passengers + quarter_passengers;

    let raw_fixed_loss_residual = daily
        .iter()
        .map(|d| (d.fixed_loss_wh_min - baseline_ef).max(0.0))
        .sum::<f64>()
        / days;

    // weighted exceedance area over the quarter's A_t values
    let mut areas: Vec<(u8, f64)> = Vec::with_capacity(ctx.sensors.len());
    for sensor in ctx.sensors {
        let values: Vec<f64> = at_records
            .iter()
            .filter(|r| r.point_id == sensor.point_id)
            .map(|r| r.at_g)
            .collect();
        if !values.is_empty() {
            areas.push((sensor.point_id, exceedance_area(&values)?));
        }
    }
    let raw_at_area = fleet_vibration_status(&areas, ctx.sensors, ctx.renormalize_missing_sensors)?;

    let raw_fault_count: u32 = daily.iter().map(|d| d.corrective_events).sum();

    let working_time = normalize(raw_working_min, LhiVariable::WorkingTime);
    let passenger_load = normalize(raw_passengers, LhiVariable::PassengerLoad);
    let fixed_loss_residual = normalize(raw_fixed_loss_residual, LhiVariable::FixedLossResidual);
    let at_areas = normalize(raw_at_area, LhiVariable::ExceedanceArea);
    let fault_counts = normalize(raw_fault_count as f64, LhiVariable::FaultCount);

    Ok(QuarterFeatures {
        escalator_id: ctx.meta.id,
        quarter: ctx.quarter,
        age_years: ctx.meta.age_at(ctx.quarter.last_date(), ctx.age_reference),
        raw_working_min,
        raw_passengers,
        raw_fixed_loss_residual,
        raw_at_area,
        raw_fault_count,
        working_time,
        passenger_load,
        fixed_loss_residual,
        at_areas,
        fault_counts,
        lhi: compute_lhi(
            working_time,
            passenger_load,
            fixed_loss_residual,
            at_areas,
            fault_counts,
        ),
        baseline_fixed_loss_wh_min: baseline_ef,
        days_aggregated: daily.len() as u32,
    })
}

/// One (age, LHI) observation used for model fitting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitPoint {
    pub escalator_id: u32,
    pub quarter: Quarter,
    pub age_years: f64,
    pub lhi: f64,
}

/// How to exclude extreme points from the fit.
#[derive(Debug, Clone, PartialEq)]
pub enum ExclusionPolicy {
    /// Use every point.
    None,
    /// Exclude these escalator ids.
    Ids(Vec<u32>),
    /// Drop the N points with the largest absolute log-residual from a
    /// first-pass fit.
    AutoWorst(usize),
}

/// Fitted exponential reference curve `y = F(t) = a·exp(b·t)` with its
/// end-of-life parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LhiModel {
    /// Starting value `F(0)`.
    pub a: f64,
    /// Per-year growth exponent.
    pub b: f64,
    /// End-of-life age, years.
    pub t_end_years: f64,
    /// `F(t_end_years)`.
    pub y_end: f64,
    /// Points the model was fitted on.
    pub fitted_on: Vec<FitKey>,
    /// Escalators excluded from the fit.
    pub excluded: Vec<u32>,
}

/// Identity of one fitted point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FitKey {
    pub escalator_id: u32,
    pub year: i32,
    pub quarter: u8,
}

impl LhiModel {
    /// The bundled reference model: `a = 0.0928`, `b = 0.0665`,
    /// `t_end = 35` years.
    pub fn reference_default() -> Self {
        Self::from_params(0.0928, 0.0665, DEFAULT_T_END_YEARS)
    }

    pub fn from_params(a: f64, b: f64, t_end_years: f64) -> Self {
        LhiModel {
            a,
            b,
            t_end_years,
            y_end: a * (b * t_end_years).exp(),
            fitted_on: Vec::new(),
            excluded: Vec::new(),
        }
    }

    /// Reference LHI at age `t`.
    pub fn value_at(&self, t: f64) -> f64 {
        self.a * (self.b * t).exp()
    }
}

fn ols_log_fit(points: &[FitPoint]) -> Result<(f64, f64)> {
    let n = points.len() as f64;
    let mean_t = points.iter().map(|p| p.age_years).sum::<f64>() / n;
    let mean_ln_y = points.iter().map(|p| p.lhi.ln()).sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var = 0.0;
    for p in points {
        let dt = p.age_years - mean_t;
        cov += dt * (p.lhi.ln() - mean_ln_y);
        var += dt * dt;
    }
    if var == 0.0 {
        return Err(PhmError::InvalidValue(
            "cannot fit a growth rate: all ages are identical".into(),
        ));
    }
    let b = cov / var;
    let a = (mean_ln_y - b * mean_t).exp();
    Ok((a, b))
}

/// Fit the exponential reference model by least squares in log space
/// (`ln y = ln a + b·t`).
pub fn fit_reference_model(
    points: &[FitPoint],
    policy: &ExclusionPolicy,
    t_end_years: f64,
) -> Result<LhiModel> {
    for p in points {
        if p.lhi.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) || !p.lhi.is_finite() {
            return Err(PhmError::NonPositiveLhi(p.lhi));
        }
    }
    let mut kept: Vec<FitPoint> = points.to_vec();
    let mut excluded: Vec<u32> = Vec::new();
    match policy {
        ExclusionPolicy::None => {}
        ExclusionPolicy::Ids(ids) => {
            kept.retain(|p| !ids.contains(&p.escalator_id));
            excluded = ids.clone();
        }
        ExclusionPolicy::AutoWorst(k) => {
            if points.len() < 3 {
                return Err(PhmError::InsufficientPoints {
                    needed: 3,
                    got: points.len(),
                });
            }
            let (a0, b0) = ols_log_fit(&kept)?;
            let mut residuals: Vec<(f64, usize)> = kept
                .iter()
                .enumerate()
                .map(|(i, p)| ((p.lhi.ln() - (a0.ln() + b0 * p.age_years)).abs(), i))
                .collect();
            residuals.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap());
            let drop: Vec<usize> = residuals.iter().take(*k).map(|(_, i)| *i).collect();
            excluded = drop.iter().map(|&i| kept[i].escalator_id).collect();
            excluded.sort_unstable();
            excluded.dedup();
            let mut keep_flags = vec![true; kept.len()];
            for i in drop {
                keep_flags[i] = false;
            }
            let mut it = keep_flags.iter();
            kept.retain(|_| *it.next().unwrap());
        }
    }
    if kept.len() < 3 {
        return Err(PhmError::InsufficientPoints {
            needed: 3,
            got: kept.len(),
        });
    }
    let (a, b) = ols_log_fit(&kept)?;
    Ok(LhiModel {
        a,
        b,
        t_end_years,
        y_end: a * (b * t_end_years).exp(),
        fitted_on: kept
            .iter()
            .map(|p| FitKey {
                escalator_id: p.escalator_id,
                year: p.quarter.year,
                quarter: p.quarter.quarter,
            })
            .collect(),
        excluded,
    })
}
