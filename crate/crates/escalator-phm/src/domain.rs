//! Shared vocabulary types, unit conventions, and fleet/sensor metadata.
//!
//! Everything here is an immutable value object; the rest of the crate builds
//! on these definitions. The bundled defaults describe the 24-unit reference
//! fleet, its 8-point vibration sensor layout, the per-location alert/alarm
//! thresholds, and the sensor weights used for the fleet vibration status.

use std::fmt;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{PhmError, Result};

/// Gravitational acceleration, m/s².
pub const GRAVITY_M_S2: f64 = 9.81;
/// Average passenger mass, kg.
pub const PASSENGER_MASS_KG: f64 = 75.0;
/// Walking factor for upward (and bi-directional) escalators.
pub const WALKING_FACTOR_UP: f64 = 0.85;
/// Walking factor for downward escalators.
pub const WALKING_FACTOR_DOWN: f64 = 0.75;
/// Joules per watt-hour.
pub const JOULES_PER_WH: f64 = 3600.0;
/// Upper frequency bound of stored spectra, kHz.
pub const SPECTRUM_MAX_KHZ: f64 = 12.8;
/// A minute with total energy below this is considered not running, Wh.
pub const RUNNING_THRESHOLD_WH: f64 = 5.0;

/// Date at which the fleet ages in [`default_fleet`] were snapshot.
///
/// Ages at any other date are obtained by date arithmetic from this anchor,
/// so quarterly ages are reproducible.
pub const DEFAULT_AGE_REFERENCE: NaiveDate = match NaiveDate::from_ymd_opt(2022, 8, 25) {
    Some(d) => d,
    None => unreachable!(),
};

/// Running direction of an escalator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Up,
    Down,
    BiDirectional,
}

impl Direction {
    /// Walking factor used in passenger-load estimation.
    ///
    /// Bi-directional units use the upward factor (they are treated as
    /// upward wherever a direction sign is needed).
    pub fn walking_factor(self) -> f64 {
        match self {
            Direction::Up | Direction::BiDirectional => WALKING_FACTOR_UP,
            Direction::Down => WALKING_FACTOR_DOWN,
        }
    }

    /// True when the energy model subtracts the load term (downward units).
    pub fn load_subtracts(self) -> bool {
        matches!(self, Direction::Down)
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Direction::Up => write!(f, "up"),
            Direction::Down => write!(f, "down"),
            Direction::BiDirectional => write!(f, "bi_directional"),
        }
    }
}

/// Daily scheduled operating interval in local clock time.
///
/// Stored as minutes since local midnight; `end_min` may be 1440 (24:00).
/// A window with `start_min > end_min` wraps past midnight.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ServiceWindow {
    pub start_min: u16,
    pub end_min: u16,
}

impl ServiceWindow {
    pub fn new(start_min: u16, end_min: u16) -> Self {
        Self { start_min, end_min }
    }

    /// Default 06:00–24:00 schedule.
    pub fn default_schedule() -> Self {
        Self::new(6 * 60, 24 * 60)
    }

    /// Whether a local minute-of-day falls inside the window.
    pub fn contains(&self, minute_of_day: u16) -> bool {
        if self.start_min <= self.end_min {
            minute_of_day >= self.start_min && minute_of_day < self.end_min
        } else {
            minute_of_day >= self.start_min || minute_of_day < self.end_min
        }
    }

    fn fmt_hhmm(min: u16) -> String {
        format!("{:02}:{:02}", min / 60, min % 60)
    }

    fn parse_hhmm(s: &str) -> Option<u16> {
        let (h, m) = s.split_once(':')?;
        let h: u16 = h.parse().ok()?;
        let m: u16 = m.parse().ok()?;
        if h > 24 || m > 59 || (h == 24 && m != 0) {
            return None;
        }
        Some(h * 60 + m)
    }
}

impl fmt::Display for ServiceWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}-{}",
            Self::fmt_hhmm(self.start_min),
            Self::fmt_hhmm(self.end_min)
        )
    }
}

impl std::str::FromStr for ServiceWindow {
    type Err = PhmError;

    fn from_str(s: &str) -> Result<Self> {
        let parse = || {
            let (a, b) = s.split_once('-')?;
            Some(ServiceWindow::new(
                Self::parse_hhmm(a.trim())?,
                Self::parse_hhmm(b.trim())?,
            ))
        };
        parse().ok_or_else(|| {
            PhmError::InvalidConfig(format!("bad service window '{s}', expected HH:MM-HH:MM"))
        })
    }
}

impl Serialize for ServiceWindow {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ServiceWindow {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One escalator's identity and static metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EscalatorMeta {
    /// Fleet-unique identifier.
    pub id: u32,
    /// Vertical rise in meters, > 0.
    pub rise_m: f64,
    /// Running direction.
    pub direction: Direction,
    /// Service age in years at [`DEFAULT_AGE_REFERENCE`] (or the configured
    /// reference date), ≥ 0.
    pub age_years: f64,
    /// Daily scheduled operating interval, local clock.
    pub service_window: ServiceWindow,
}

impl EscalatorMeta {
    /// Service age at `date`, by date arithmetic from the `reference` anchor.
    pub fn age_at(&self, date: NaiveDate, reference: NaiveDate) -> f64 {
        let days = (date - reference).num_days() as f64;
        self.age_years + days / 365.25
    }
}

/// Physical mounting location of a vibration sensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensorLocation {
    GearboxDe,
    GearboxNde,
    MotorDe,
    MotorNde,
    MainDriveDe,
    MainDriveNde,
    TensionCarriageLeftDe,
    TensionCarriageRightNde,
}

impl SensorLocation {
    pub const ALL: [SensorLocation; 8] = [
        SensorLocation::GearboxDe,
        SensorLocation::GearboxNde,
        SensorLocation::MotorDe,
        SensorLocation::MotorNde,
        SensorLocation::MainDriveDe,
        SensorLocation::MainDriveNde,
        SensorLocation::TensionCarriageLeftDe,
        SensorLocation::TensionCarriageRightNde,
    ];

    /// Gearbox and motor bearings run at high frequency; main drive and
    /// tension carriage bearings at low frequency.
    pub fn freq_class(self) -> FreqClass {
        match self {
            SensorLocation::GearboxDe
            | SensorLocation::GearboxNde
            | SensorLocation::MotorDe
            | SensorLocation::MotorNde => FreqClass::HighFrequency,
            SensorLocation::MainDriveDe
            | SensorLocation::MainDriveNde
            | SensorLocation::TensionCarriageLeftDe
            | SensorLocation::TensionCarriageRightNde => FreqClass::LowFrequency,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SensorLocation::GearboxDe => "Gearbox DE",
            SensorLocation::GearboxNde => "Gearbox NDE",
            SensorLocation::MotorDe => "Motor DE",
            SensorLocation::MotorNde => "Motor NDE",
            SensorLocation::MainDriveDe => "Main Drive DE",
            SensorLocation::MainDriveNde => "Main Drive NDE",
            SensorLocation::TensionCarriageLeftDe => "Tension Carriage Left DE",
            SensorLocation::TensionCarriageRightNde => "Tension Carriage Right NDE",
        }
    }
}

/// Frequency class of a sensor location.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FreqClass {
    HighFrequency,
    LowFrequency,
}

/// One vibration measurement point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorPoint {
    /// Point id, 1–8.
    pub point_id: u8,
    pub location: SensorLocation,
    pub freq_class: FreqClass,
    /// Unitless weight applied to this sensor's exceedance-curve area.
    pub weight: f64,
}

/// The standard 8-point sensor layout with its default weights.
///
/// Point ids follow the installation order (gearbox, motor, main drive,
/// tension carriage); weights are per location.
pub fn default_sensors() -> [SensorPoint; 8] {
    let mk = |point_id, location: SensorLocation, weight| SensorPoint {
        point_id,
        location,
        freq_class: location.freq_class(),
        weight,
    };
    [
        mk(1, SensorLocation::GearboxDe, 0.11),
        mk(2, SensorLocation::GearboxNde, 0.11),
        mk(3, SensorLocation::MotorDe, 0.11),
        mk(4, SensorLocation::MotorNde, 0.11),
        mk(5, SensorLocation::MainDriveDe, 0.17),
        mk(6, SensorLocation::MainDriveNde, 0.16),
        mk(7, SensorLocation::TensionCarriageLeftDe, 0.12),
        mk(8, SensorLocation::TensionCarriageRightNde, 0.11),
    ]
}

/// Look up a sensor point by id (1–8).
pub fn sensor_by_point(point_id: u8) -> Result<SensorPoint> {
    default_sensors()
        .into_iter()
        .find(|s| s.point_id == point_id)
        .ok_or(PhmError::SensorOutOfRange(point_id))
}

/// Alert/alarm limits for one sensor location.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRow {
    /// Acceleration alert level, g.
    pub alert_g: f64,
    /// Acceleration alarm level, g.
    pub alarm_g: f64,
    /// Velocity alert level, mm/s. Stored for completeness; the pipeline
    /// evaluates acceleration spectra only.
    pub alert_mms: f64,
    /// Velocity alarm level, mm/s.
    pub alarm_mms: f64,
}

/// Per-location alert/alarm thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdTable {
    rows: [(SensorLocation, ThresholdRow); 8],
}

impl ThresholdTable {
    /// The preset limits: 0.375/0.75 g for gearbox and motor bearings,
    /// 0.15/0.3 g for main drive and tension carriage bearings, and
    /// 2.8/4.5 mm/s for every location.
    pub fn preset() -> Self {
        let row = |alert_g, alarm_g| ThresholdRow {
            alert_g,
            alarm_g,
            alert_mms: 2.8,
            alarm_mms: 4.5,
        };
        let for_location = |loc: SensorLocation| match loc.freq_class() {
            FreqClass::HighFrequency => row(0.375, 0.75),
            FreqClass::LowFrequency => row(0.15, 0.3),
        };
        ThresholdTable {
            rows: SensorLocation::ALL.map(|loc| (loc, for_location(loc))),
        }
    }

    pub fn get(&self, location: SensorLocation) -> ThresholdRow {
        self.rows
            .iter()
            .find(|(loc, _)| *loc == location)
            .map(|(_, row)| *row)
            .expect("every location has a threshold row")
    }

    pub fn rows(&self) -> &[(SensorLocation, ThresholdRow); 8] {
        &self.rows
    }
}

impl Default for ThresholdTable {
    fn default() -> Self {
        Self::preset()
    }
}

/// A calendar quarter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Quarter {
    pub year: i32,
    /// 1–4.
    pub quarter: u8,
}

impl Quarter {
    pub fn new(year: i32, quarter: u8) -> Result<Self> {
        if !(1..=4).contains(&quarter) {
            return Err(PhmError::InvalidQuarter(format!("{year}Q{quarter}")));
        }
        Ok(Quarter { year, quarter })
    }

    /// Quarter containing `date`.
    pub fn containing(date: NaiveDate) -> Self {
        Quarter {
            year: date.year(),
            quarter: ((date.month0() / 3) + 1) as u8,
        }
    }

    pub fn first_date(&self) -> NaiveDate {
        NaiveDate::from_ymd_opt(self.year, (self.quarter as u32 - 1) * 3 + 1, 1)
            .expect("valid quarter start")
    }

    pub fn last_date(&self) -> NaiveDate {
        let next = if self.quarter == 4 {
            NaiveDate::from_ymd_opt(self.year + 1, 1, 1)
        } else {
            NaiveDate::from_ymd_opt(self.year, self.quarter as u32 * 3 + 1, 1)
        };
        next.expect("valid next quarter start").pred_opt().unwrap()
    }

    /// Number of calendar days in the quarter.
    pub fn num_days(&self) -> i64 {
        (self.last_date() - self.first_date()).num_days() + 1
    }
}

impl fmt::Display for Quarter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}Q{}", self.year, self.quarter)
    }
}

impl std::str::FromStr for Quarter {
    type Err = PhmError;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_uppercase();
        let (y, q) = norm
            .split_once('Q')
            .ok_or_else(|| PhmError::InvalidQuarter(s.to_string()))?;
        let year: i32 = y
            .parse()
            .map_err(|_| PhmError::InvalidQuarter(s.to_string()))?;
        let quarter: u8 = q
            .parse()
            .map_err(|_| PhmError::InvalidQuarter(s.to_string()))?;
        Quarter::new(year, quarter)
    }
}

/// The 24-unit reference fleet: two test escalators in each of 12 stations,
/// with ages snapshot at [`DEFAULT_AGE_REFERENCE`].
pub fn default_fleet() -> Vec<EscalatorMeta> {
    use Direction::*;
    let rows: [(u32, f64, Direction, f64); 24] = [
        (0, 16.72, Up, 7.0),
        (1, 16.72, Up, 7.0),
        (2, 5.5, Up, 24.2),
        (3, 5.5, Down, 24.2),
        (4, 8.926, Down, 18.7),
        (5, 8.926, Down, 18.7),
        (6, 5.6, Down, 13.1),
        (7, 5.6, Up, 13.1),
        (8, 8.28, Down, 18.7),
        (9, 8.28, Down, 18.7),
        (10, 5.88, Down, 18.7),
        (11, 5.88, Up, 18.7),
        (12, 3.567, Up, 18.7),
        (13, 3.567, Down, 18.7),
        (14, 6.79, Up, 18.7),
        (15, 6.79, Down, 18.7),
        (16, 5.35, BiDirectional, 17.7),
        (17, 5.35, BiDirectional, 17.7),
        (18, 8.175, Up, 18.7),
        (19, 8.175, Down, 18.7),
        (20, 6.02, Down, 18.7),
        (21, 6.02, Up, 18.7),
        (22, 7.635, Up, 18.7),
        (23, 7.635, Down, 18.7),
    ];
    rows.into_iter()
        .map(|(id, rise_m, direction, age_years)| EscalatorMeta {
            id,
            rise_m,
            direction,
            age_years,
            service_window: ServiceWindow::default_schedule(),
        })
        .collect()
}

/// Look up an escalator in a fleet slice.
pub fn find_escalator(fleet: &[EscalatorMeta], id: u32) -> Result<&EscalatorMeta> {
    fleet
        .iter()
        .find(|m| m.id == id)
        .ok_or(PhmError::UnknownEscalator(id))
}
