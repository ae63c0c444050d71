//! Minute-level energy processing.
//!
//! Energy meters record one row per escalator-minute. The stream is regrouped
//! into service days (04:00 → 04:00 local), decomposed into fixed and
//! variable loss, inverted into a daily passenger count, and scanned for
//! maintenance events.

use chrono::{DateTime, NaiveDate, NaiveDateTime, Timelike, Utc};
use serde::{Deserialize, Serialize};

use crate::domain::{Direction, EscalatorMeta, ServiceWindow, RUNNING_THRESHOLD_WH};
use crate::domain::{GRAVITY_M_S2, JOULES_PER_WH, PASSENGER_MASS_KG};
use crate::error::{PhmError, Result};

/// Minutes in a service day.
pub const MINUTES_PER_DAY: usize = 1440;
/// Local clock hour at which a service day starts.
pub const SERVICE_DAY_START_HOUR: u32 = 4;
/// Default minimum run length for a maintenance event, minutes.
pub const DEFAULT_MIN_EVENT_MINUTES: u16 = 10;
/// Days missing more than this fraction of in-window minutes are excluded
/// from quarterly aggregation.
pub const MISSING_EXCLUSION_FRACTION: f64 = 0.10;

/// One minute of import/export energy readings for one escalator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyMinute {
    pub escalator_id: u32,
    pub timestamp_utc: DateTime<Utc>,
    /// Imported energy, Wh, ≥ 0.
    pub e_imp_wh: f64,
    /// Regenerative energy, Wh, ≥ 0.
    pub e_exp_wh: f64,
}

impl EnergyMinute {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("e_imp_wh", self.e_imp_wh), ("e_exp_wh", self.e_exp_wh)] {
            if !v.is_finite() || v < 0.0 {
                return Err(PhmError::InvalidValue(format!(
                    "{name} must be finite and non-negative, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Total energy consumption of one minute: imported plus regenerative.
pub fn total_energy(rec: &EnergyMinute) -> f64 {
    rec.e_imp_wh + rec.e_exp_wh
}

/// Kind of maintenance event detected from the energy profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    /// Near-zero energy during the service window: unexpected shutdown
    /// followed by corrective maintenance.
    Corrective,
    /// Energy use during regular non-service time: scheduled preventive
    /// maintenance.
    Preventive,
}

/// A detected maintenance event within one service day.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaintenanceEvent {
    pub kind: EventKind,
    /// Slot offset from the 04:00 service-day start, minutes.
    pub start_slot: u16,
    pub duration_min: u16,
}

impl MaintenanceEvent {
    /// Local wall-clock start of the event.
    pub fn start_local(&self, service_date: NaiveDate) -> NaiveDateTime {
        service_date
            .and_hms_opt(SERVICE_DAY_START_HOUR, 0, 0)
            .unwrap()
            + chrono::Duration::minutes(self.start_slot as i64)
    }
}

/// One escalator's minute-by-minute total energy over a service day.
///
/// Slot 0 is 04:00 local on `service_date`; slot 1439 is 03:59 the next
/// morning. Missing minutes are `None`, never zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ServiceDayProfile {
    pub escalator_id: u32,
    pub service_date: NaiveDate,
    pub e_total_wh: Vec<Option<f64>>,
}

impl ServiceDayProfile {
    fn empty(escalator_id: u32, service_date: NaiveDate) -> Self {
        ServiceDayProfile {
            escalator_id,
            service_date,
            e_total_wh: vec![None; MINUTES_PER_DAY],
        }
    }

    /// Local minute-of-day of a slot.
    pub fn minute_of_day(slot: usize) -> u16 {
        ((slot + SERVICE_DAY_START_HOUR as usize * 60) % MINUTES_PER_DAY) as u16
    }

    /// Present in-window minutes with the escalator running (≥ 5 Wh).
    pub fn working_minutes(&self, window: &ServiceWindow) -> u32 {
        self.in_service_values(window).count() as u32
    }

    /// Count of in-window minutes with no record.
    pub fn missing_in_window(&self, window: &ServiceWindow) -> u32 {
        self.e_total_wh
            .iter()
            .enumerate()
            .filter(|(slot, v)| window.contains(Self::minute_of_day(*slot)) && v.is_none())
            .count() as u32
    }

    /// Whether the day has too many in-window gaps for quarterly use.
    pub fn excluded_for_gaps(&self, window: &ServiceWindow) -> bool {
        let in_window = self
            .e_total_wh
            .iter()
            .enumerate()
            .filter(|(slot, _)| window.contains(Self::minute_of_day(*slot)))
            .count();
        if in_window == 0 {
            return false;
        }
        self.missing_in_window(window) as f64 / in_window as f64 > MISSING_EXCLUSION_FRACTION
    }

    fn in_service_values<'a>(
        &'a self,
        window: &'a ServiceWindow,
    ) -> impl Iterator<Item = f64> + 'a {
        self.e_total_wh.iter().enumerate().filter_map(|(slot, v)| {
            let minute = Self::minute_of_day(slot);
            match v {
                Some(e) if window.contains(minute) && *e >= RUNNING_THRESHOLD_WH => Some(*e),
                _ => None,
            }
        })
    }
}

/// Map a UTC timestamp to its (service date, slot) under a local offset.
pub fn service_slot(ts: DateTime<Utc>, utc_offset_hours: i32) -> (NaiveDate, usize) {
    let local = ts + chrono::Duration::hours(utc_offset_hours as i64);
    let local = local.naive_utc();
    let shifted = local - chrono::Duration::hours(SERVICE_DAY_START_HOUR as i64);
    let service_date = shifted.date();
    let slot = (shifted.hour() * 60 + shifted.minute()) as usize;
    (service_date, slot)
}

/// Regroup a minute stream into service-day profiles (04:00 → 04:00 local).
///
/// Missing minutes stay unfilled. Duplicate escalator-minutes are an error.
/// Output is ordered by service date; records may arrive in any order.
pub fn regroup_service_day(
    records: &[EnergyMinute],
    utc_offset_hours: i32,
) -> Result<Vec<ServiceDayProfile>> {
    let mut days: std::collections::BTreeMap<NaiveDate, ServiceDayProfile> =
        std::collections::BTreeMap::new();
    for rec in records {
        let (date, slot) = service_slot(rec.timestamp_utc, utc_offset_hours);
        let profile = days
            .entry(date)
            .or_insert_with(|| ServiceDayProfile::empty(rec.escalator_id, date));
        if profile.escalator_id != rec.escalator_id {
            return Err(PhmError::InvalidValue(format!(
                "mixed escalator ids {} and {} in one stream",
                profile.escalator_id, rec.escalator_id
            )));
        }
        if profile.e_total_wh[slot].is_some() {
            return Err(PhmError::DuplicateMinute {
                escalator: rec.escalator_id,
                timestamp: rec.timestamp_utc,
            });
        }
        profile.e_total_wh[slot] = Some(total_energy(rec));
    }
    Ok(days.into_values().collect())
}

/// Lower-interpolation order statistic: the sorted value at `floor(p·(n−1))`.
fn lower_order_statistic(sorted: &[f64], p: f64) -> f64 {
    let idx = (p * (sorted.len() - 1) as f64).floor() as usize;
    sorted[idx]
}

/// Estimate the per-minute fixed (no-load) loss of a service day.
///
/// Load raises readings on upward escalators and depresses them on downward
/// ones, so the estimator takes the 5th percentile of in-service minutes for
/// Up (and BiDirectional), and the 95th for Down.
pub fn estimate_fixed_loss(
    profile: &ServiceDayProfile,
    direction: Direction,
    window: &ServiceWindow,
) -> Result<f64> {
    let mut values: Vec<f64> = profile.in_service_values(window).collect();
    if values.is_empty() {
        return Err(PhmError::NoWorkingMinutes {
            escalator: profile.escalator_id,
            date: profile.service_date,
        });
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let p = if direction.load_subtracts() {
        0.95
    } else {
        0.05
    };
    Ok(lower_order_statistic(&values, p))
}

/// Daily variable (load-dependent) loss in Wh: per-minute deviation from the
/// fixed loss, clamped at zero, summed over in-service minutes.
pub fn decompose_variable_loss(
    profile: &ServiceDayProfile,
    fixed_loss_wh_min: f64,
    direction: Direction,
    window: &ServiceWindow,
) -> f64 {
    let signed = |e: f64| {
        if direction.load_subtracts() {
            fixed_loss_wh_min - e
        } else {
            e - fixed_loss_wh_min
        }
    };
    profile
        .in_service_values(window)
        .map(|e| signed(e).max(0.0))
        .sum()
}

/// Daily estimated passenger count from the variable loss:
/// `P_d = E_V·3600 / (g · r_e · m_p · k_wf)`.
pub fn estimate_passengers(e_v_wh: f64, meta: &EscalatorMeta) -> f64 {
    e_v_wh / passenger_energy_wh(meta)
}

/// Variable energy one passenger contributes on this escalator, Wh:
/// `g · r_e · m_p · k_wf / 3600`.
pub fn passenger_energy_wh(meta: &EscalatorMeta) -> f64 {
    GRAVITY_M_S2 * meta.rise_m * PASSENGER_MASS_KG * meta.direction.walking_factor() / JOULES_PER_WH
}

/// Detect maintenance events in a service-day profile.
///
/// Corrective: a maximal run of at least `min_duration` consecutive in-window
/// minutes below 5 Wh. Preventive: a maximal run of at least `min_duration`
/// consecutive out-of-window minutes at or above 5 Wh. Missing minutes break
/// runs.
pub fn detect_events(
    profile: &ServiceDayProfile,
    window: &ServiceWindow,
    min_duration: u16,
) -> Vec<MaintenanceEvent> {
    let mut events = Vec::new();
    let in_window = |slot: usize| window.contains(ServiceDayProfile::minute_of_day(slot));
    let mut scan = |kind: EventKind, pred: &dyn Fn(usize, f64) -> bool| {
        let mut run_start: Option<usize> = None;
        for slot in 0..=MINUTES_PER_DAY {
            let hit = slot < MINUTES_PER_DAY
                && matches!(profile.e_total_wh[slot], Some(e) if pred(slot, e));
            if hit {
                run_start.get_or_insert(slot);
            } else if let Some(start) = run_start.take() {
                let duration = (slot - start) as u16;
                if duration >= min_duration {
                    events.push(MaintenanceEvent {
                        kind,
                        start_slot: start as u16,
                        duration_min: duration,
                    });
                }
            }
        }
    };
    scan(EventKind::Corrective, &|slot, e| {
        in_window(slot) && e < RUNNING_THRESHOLD_WH
    });
    scan(EventKind::Preventive, &|slot, e| {
        !in_window(slot) && e >= RUNNING_THRESHOLD_WH
    });
    events.sort_by_key(|e| e.start_slot);
    events
}

/// Summary of one analyzed service day; one row of the daily features CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyFeatures {
    pub escalator_id: u32,
    pub service_date: NaiveDate,
    pub working_min: u32,
    pub fixed_loss_wh_min: f64,
    pub variable_loss_wh: f64,
    pub passengers: f64,
    pub corrective_events: u32,
    pub preventive_events: u32,
}

/// Analyze one service day end to end.
///
/// Returns the features and whether the day must be excluded from quarterly
/// aggregation for having too many in-window gaps.
pub fn analyze_day(
    profile: &ServiceDayProfile,
    meta: &EscalatorMeta,
    min_event_duration: u16,
) -> Result<(DailyFeatures, bool)> {
    let window = &meta.service_window;
    let fixed = estimate_fixed_loss(profile, meta.direction, window)?;
    let variable = decompose_variable_loss(profile, fixed, meta.direction, window);
    let passengers = estimate_passengers(variable, meta);
    let events = detect_events(profile, window, min_event_duration);
    let count = |kind| events.iter().filter(|e| e.kind == kind).count() as u32;
    let features = DailyFeatures {
        escalator_id: profile.escalator_id,
        service_date: profile.service_date,
        working_min: profile.working_minutes(window),
        fixed_loss_wh_min: fixed,
        variable_loss_wh: variable,
        passengers,
        corrective_events: count(EventKind::Corrective),
        preventive_events: count(EventKind::Preventive),
    };
    Ok((features, profile.excluded_for_gaps(window)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::default_fleet;
    use chrono::TimeZone;

    const TZ: i32 = 8;

    /// UTC timestamp whose local (UTC+8) clock reads the given values.
    fn local(y: i32, mo: u32, d: u32, h: u32, mi: u32) -> DateTime<Utc> {
        Utc.with_ymd_and_hms(y, mo, d, h, mi, 0).unwrap() - chrono::Duration::hours(TZ as i64)
    }

    fn minute(ts: DateTime<Utc>, imp: f64, exp: f64) -> EnergyMinute {
        EnergyMinute {
            escalator_id: 0,
            timestamp_utc: ts,
            e_imp_wh: imp,
            e_exp_wh: exp,
        }
    }

    #[test]
    fn total_energy_sums_import_and_export() {
        let ts = local(2021, 10, 1, 9, 0);
        assert_eq!(total_energy(&minute(ts, 0.0, 0.0)), 0.0);
        assert_eq!(total_energy(&minute(ts, 12.5, 0.0)), 12.5);
        assert_eq!(total_energy(&minute(ts, 10.0, 2.5)), 12.5);
    }

    #[test]
    fn service_day_boundary_at_4am_local() {
        let (d, slot) = service_slot(local(2021, 1, 2, 3, 59), TZ);
        assert_eq!(d, NaiveDate::from_ymd_opt(2021, 1, 1).unwrap());
        assert_eq!(slot, 1439);
        let (d, slot) = service_slot(local(2021, 1, 2, 4, 0), TZ);
        assert_eq!(d, NaiveDate::from_ymd_opt(2021, 1, 2).unwrap());
        assert_eq!(slot, 0);
    }

    #[test]
    fn regroup_full_day_has_no_missing() {
        let start = local(2021, 10, 1, 4, 0);
        let records: Vec<EnergyMinute> = (0..1440)
            .map(|i| minute(start + chrono::Duration::minutes(i), 20.0, 0.0))
            .collect();
        let days = regroup_service_day(&records, TZ).unwrap();
        assert_eq!(days.len(), 1);
        assert_eq!(
            days[0].service_date,
            NaiveDate::from_ymd_opt(2021, 10, 1).unwrap()
        );
        assert!(days[0].e_total_wh.iter().all(|v| v.is_some()));
        assert_eq!(
            days[0].missing_in_window(&ServiceWindow::default_schedule()),
            0
        );
    }

    #[test]
    fn regroup_rejects_duplicate_minutes() {
        let ts = local(2021, 10, 1, 9, 0);
        let records = vec![minute(ts, 20.0, 0.0), minute(ts, 21.0, 0.0)];
        assert!(matches!(
            regroup_service_day(&records, TZ),
            Err(PhmError::DuplicateMinute { .. })
        ));
    }

    #[test]
    fn regroup_marks_gaps_as_missing_not_zero() {
        let records = vec![minute(local(2021, 10, 1, 9, 0), 20.0, 0.0)];
        let days = regroup_service_day(&records, TZ).unwrap();
        let filled: Vec<&Option<f64>> = days[0].e_total_wh.iter().filter(|v| v.is_some()).collect();
        assert_eq!(filled.len(), 1);
    }

    /// Build a profile from (local hour, local minute, e_total) triples.
    fn day_with(values: &[(u32, u32, f64)]) -> ServiceDayProfile {
        let mut profile =
            ServiceDayProfile::empty(0, NaiveDate::from_ymd_opt(2021, 10, 1).unwrap());
        for &(h, m, e) in values {
            let shifted = (h * 60 + m) as i64 - (SERVICE_DAY_START_HOUR * 60) as i64;
            let slot = shifted.rem_euclid(MINUTES_PER_DAY as i64) as usize;
            profile.e_total_wh[slot] = Some(e);
        }
        profile
    }

    #[test]
    fn fixed_loss_of_constant_noload_day() {
        let values: Vec<(u32, u32, f64)> = (0..600).map(|i| (6 + i / 60, i % 60, 20.0)).collect();
        let profile = day_with(&values);
        let w = ServiceWindow::default_schedule();
        let ef = estimate_fixed_loss(&profile, Direction::Up, &w).unwrap();
        assert_eq!(ef, 20.0);
    }

    #[test]
    fn fixed_loss_down_uses_95th_percentile() {
        // downward: loaded minutes depress readings below the fixed loss
        let mut values: Vec<(u32, u32, f64)> =
            (0..100).map(|i| (7 + i / 60, i % 60, 30.0)).collect();
        values.extend((0..400).map(|i| (9 + i / 60, i % 60, 22.0)));
        let profile = day_with(&values);
        let w = ServiceWindow::default_schedule();
        let ef = estimate_fixed_loss(&profile, Direction::Down, &w).unwrap();
        assert_eq!(ef, 30.0);
    }

    #[test]
    fn fixed_loss_needs_working_minutes() {
        let profile = day_with(&[(9, 0, 1.0)]); // below running threshold
        let w = ServiceWindow::default_schedule();
        assert!(matches!(
            estimate_fixed_loss(&profile, Direction::Up, &w),
            Err(PhmError::NoWorkingMinutes { .. })
        ));
    }

    #[test]
    fn variable_loss_hand_sums() {
        let w = ServiceWindow::default_schedule();
        let up = day_with(&[(9, 0, 25.0), (9, 1, 20.0), (9, 2, 22.0)]);
        assert_eq!(decompose_variable_loss(&up, 20.0, Direction::Up, &w), 7.0);
        let down = day_with(&[(9, 0, 15.0), (9, 1, 20.0), (9, 2, 18.0)]);
        assert_eq!(
            decompose_variable_loss(&down, 20.0, Direction::Down, &w),
            7.0
        );
        let flat = day_with(&[(9, 0, 20.0), (9, 1, 20.0)]);
        assert_eq!(decompose_variable_loss(&flat, 20.0, Direction::Up, &w), 0.0);
    }

    #[test]
    fn passenger_estimates_match_direct_substitution() {
        let fleet = default_fleet();
        // escalator 19: rise 8.175, Down
        let p = estimate_passengers(1000.0, &fleet[19]);
        assert!((p - 798.0).abs() < 0.1, "down estimate {p}");
        // escalator 0: rise 16.72, Up
        let p = estimate_passengers(1000.0, &fleet[0]);
        assert!((p - 344.3).abs() < 0.1, "up estimate {p}");
        assert_eq!(estimate_passengers(0.0, &fleet[0]), 0.0);
    }

    #[test]
    fn detects_injected_corrective_shutdown() {
        let mut values: Vec<(u32, u32, f64)> =
            (0..1080).map(|i| (6 + i / 60, i % 60, 20.0)).collect();
        // 60 near-zero minutes from 10:00
        for v in values.iter_mut().skip(240).take(60) {
            v.2 = 0.5;
        }
        let profile = day_with(&values);
        let events = detect_events(
            &profile,
            &ServiceWindow::default_schedule(),
            DEFAULT_MIN_EVENT_MINUTES,
        );
        assert_eq!(events.len(), 1);
        assert_eq!(events[0].kind, EventKind::Corrective);
        assert_eq!(events[0].duration_min, 60);
        assert_eq!(
            events[0].start_local(profile.service_date),
            NaiveDate::from_ymd_opt(2021, 10, 1)
                .unwrap()
                .and_hms_opt(10, 0, 0)
                .unwrap()
        );
    }

    #[test]
    fn detects_injected_preventive_night_run() {
        let mut values: Vec<(u32, u32, f64)> =
            (0..1080).map(|i| (6 + i / 60, i % 60, 20.0)).collect();
        // 45 energized minutes from 02:00 (out of window, same service day)
        values.extend((0..45u32).map(|i| (2 + i / 60, i % 60, 15.0)));
        let profile = day_with(&values);
        let events = detect_events(
            &profile,
            &ServiceWindow::default_schedule(),
            DEFAULT_MIN_EVENT_MINUTES,
        );
        assert_eq!(events.len(), 1);
        assert_eq!(events[0].kind, EventKind::Preventive);
        assert_eq!(events[0].duration_min, 45);
    }

    #[test]
    fn nominal_day_has_no_events() {
        let values: Vec<(u32, u32, f64)> = (0..1080).map(|i| (6 + i / 60, i % 60, 20.0)).collect();
        let profile = day_with(&values);
        let events = detect_events(
            &profile,
            &ServiceWindow::default_schedule(),
            DEFAULT_MIN_EVENT_MINUTES,
        );
        assert!(events.is_empty());
    }

    #[test]
    fn short_glitches_are_not_events() {
        let mut values: Vec<(u32, u32, f64)> =
            (0..1080).map(|i| (6 + i / 60, i % 60, 20.0)).collect();
        for v in values.iter_mut().skip(300).take(9) {
            v.2 = 0.0; // 9 < 10 minute minimum
        }
        let profile = day_with(&values);
        let events = detect_events(
            &profile,
            &ServiceWindow::default_schedule(),
            DEFAULT_MIN_EVENT_MINUTES,
        );
        assert!(events.is_empty());
    }

    #[test]
    fn missing_minutes_break_event_runs() {
        let mut profile = day_with(
            &(0..1080)
                .map(|i| (6 + i / 60, i % 60, 20.0))
                .collect::<Vec<_>>(),
        );
        // 8 shutdown minutes, a gap, then 8 more: no event
        for slot in 240..248 {
            profile.e_total_wh[slot] = Some(0.0);
        }
        profile.e_total_wh[248] = None;
        for slot in 249..257 {
            profile.e_total_wh[slot] = Some(0.0);
        }
        let events = detect_events(
            &profile,
            &ServiceWindow::default_schedule(),
            DEFAULT_MIN_EVENT_MINUTES,
        );
        assert!(events.is_empty());
    }

    #[test]
    fn gap_exclusion_threshold() {
        let w = ServiceWindow::default_schedule();
        // full coverage: not excluded
        let full = day_with(
            &(0..1080)
                .map(|i| (6 + i / 60, i % 60, 20.0))
                .collect::<Vec<_>>(),
        );
        assert!(!full.excluded_for_gaps(&w));
        // 12% of the window missing: excluded
        let partial = day_with(
            &(0..950)
                .map(|i| (6 + i / 60, i % 60, 20.0))
                .collect::<Vec<_>>(),
        );
        assert!(partial.excluded_for_gaps(&w));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            /// Regrouping partitions the input: every minute appears exactly once.
            #[test]
            fn regroup_is_a_partition(offsets in proptest::collection::btree_set(0i64..4320, 1..200)) {
                let base = local(2021, 10, 1, 4, 0);
                let records: Vec<EnergyMinute> = offsets
                    .iter()
                    .map(|&o| minute(base + chrono::Duration::minutes(o), 10.0, 0.0))
                    .collect();
                let days = regroup_service_day(&records, TZ).unwrap();
                let total: usize = days
                    .iter()
                    .map(|d| d.e_total_wh.iter().filter(|v| v.is_some()).count())
                    .sum();
                prop_assert_eq!(total, records.len());
            }

            /// Variable loss is non-negative, and zero iff every in-service
            /// minute equals the fixed loss exactly (upward case).
            #[test]
            fn variable_loss_nonnegative_and_zero_iff_flat(
                deltas in proptest::collection::vec(0.0f64..5.0, 10..60),
            ) {
                let values: Vec<(u32, u32, f64)> = deltas
                    .iter()
                    .enumerate()
                    .map(|(i, d)| (9 + i as u32 / 60, i as u32 % 60, 20.0 + d))
                    .collect();
                let profile = day_with(&values);
                let w = ServiceWindow::default_schedule();
                let ev = decompose_variable_loss(&profile, 20.0, Direction::Up, &w);
                prop_assert!(ev >= 0.0);
                let all_flat = deltas.iter().all(|d| *d == 0.0);
                prop_assert_eq!(ev == 0.0, all_flat);
            }
        }
    }
}
