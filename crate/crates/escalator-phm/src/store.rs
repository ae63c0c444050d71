//! File-based ingestion, validation, and partitioned persistence.
//!
//! A store is a plain directory tree; every partition is inspectable CSV or
//! JSONL and diff-able in tests:
//!
//! ```text
//! <root>/
//!   manifest.json                              schema version, ingestion log, row counts
//!   fleet.json                                 escalator metadata
//!   raw_energy/{escalator}/{date}.csv          one service day of minutes
//!   raw_vibration/{escalator}/{point}/{date}.jsonl
//!   derived_daily/{escalator}.csv              daily energy features
//!   derived_at/{escalator}.csv                 reduced A_t records
//!   quarters/{yyyyQq}.csv                      quarterly LHI features
//!   models/{name}.json                         fitted reference models
//! ```
//!
//! `{date}` is the service date (04:00 → 04:00 local). Writers take a
//! store-level lock file and go through a temp-file-then-rename step, so a
//! write in progress is never observable as a partial file. Ingestion is
//! idempotent: re-ingesting identical files reports zero new rows.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDate, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use crate::domain::{EscalatorMeta, Quarter};
use crate::energy::{service_slot, DailyFeatures, EnergyMinute};
use crate::error::{PhmError, Result};
use crate::health::{LhiModel, QuarterFeatures};
use crate::rul::RulRecord;
use crate::vibration::{AtRecord, SpectrumRecord};

/// Supported on-disk schema version.
pub const SCHEMA_VERSION: u32 = 1;

const ENERGY_HEADER: &[&str] = &["escalator_id", "timestamp_utc", "e_imp_wh", "e_exp_wh"];
const AT_HEADER: &[&str] = &[
    "escalator_id",
    "point_id",
    "timestamp_utc",
    "at_g",
    "status",
];
const DAILY_HEADER: &[&str] = &[
    "escalator_id",
    "service_date",
    "working_min",
    "fixed_loss_wh_min",
    "variable_loss_wh",
    "passengers",
    "corrective_events",
    "preventive_events",
];
const QUARTER_HEADER: &[&str] = &[
    "escalator_id",
    "year",
    "quarter",
    "actual_age",
    "lhi",
    "working_hours",
    "passenger_load",
    "at_areas",
    "fixed_loss_residual",
    "fault_counts",
    "raw_working_min",
    "raw_passengers",
    "raw_fixed_loss_residual",
    "raw_at_area",
    "raw_fault_count",
    "baseline_fixed_loss_wh_min",
    "days_aggregated",
];
/// Column set of the RUL output CSV.
pub const RUL_HEADER: &[&str] = &[
    "escalator_id",
    "year",
    "quarter",
    "actual_age",
    "years_till_35",
    "rul",
    "lhi",
    "working_hours",
    "passenger_load",
    "at_areas",
    "fixed_loss_residual",
    "fault_counts",
];

/// One ingestion run in the manifest log.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IngestionEntry {
    pub source: String,
    pub files: u32,
    pub rows: u64,
    pub rejected: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub created_utc: String,
    /// Local offset applied for service-window logic (timestamps are UTC).
    pub utc_offset_hours: i32,
    pub ingestions: Vec<IngestionEntry>,
    /// Row counts per tracked file, relative path → rows.
    pub files: BTreeMap<String, u64>,
}

/// Result of one `ingest` run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    /// Files read from the raw directory.
    pub files: u32,
    /// Newly accepted rows.
    pub rows: u64,
    /// Rows already present (identical re-ingest).
    pub unchanged_rows: u64,
    /// Rows rejected by validation, with reasons.
    pub rejected_rows: u64,
    /// Files rejected wholesale (bad schema), with reasons.
    pub rejected_files: Vec<String>,
    /// Row-level rejection log: `file:line: reason`.
    pub rejection_log: Vec<String>,
}

impl IngestReport {
    pub fn clean(&self) -> bool {
        self.rejected_rows == 0 && self.rejected_files.is_empty()
    }
}

/// Mismatch found by [`Store::verify`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyIssue {
    pub path: String,
    pub manifest_rows: Option<u64>,
    pub actual_rows: Option<u64>,
}

/// Exclusive write lock; removed on drop.
struct StoreLock {
    path: PathBuf,
}

impl StoreLock {
    fn acquire(root: &Path) -> Result<StoreLock> {
        let path = root.join(".lock");
        for _ in 0..500 {
            match fs::OpenOptions::new()
                .write(true)
                .create_new(true)
                .open(&path)
            {
                Ok(_) => return Ok(StoreLock { path }),
                Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                    std::thread::sleep(std::time::Duration::from_millis(10));
                }
                Err(e) => return Err(e.into()),
            }
        }
        Err(PhmError::LockTimeout(path.display().to_string()))
    }
}

impl Drop for StoreLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn fmt_ts(ts: DateTime<Utc>) -> String {
    ts.to_rfc3339_opts(SecondsFormat::Secs, true)
}

fn parse_ts(s: &str) -> Result<DateTime<Utc>> {
    DateTime::parse_from_rfc3339(s)
        .map(|t| t.with_timezone(&Utc))
        .map_err(|e| PhmError::InvalidValue(format!("bad timestamp '{s}': {e}")))
}

/// Partitioned file store rooted at a directory.
pub struct Store {
    root: PathBuf,
    manifest: Manifest,
}

impl Store {
    /// Create a new store directory (or open it if a manifest already exists).
    pub fn create(root: impl Into<PathBuf>, utc_offset_hours: i32) -> Result<Store> {
        let root = root.into();
        if root.join("manifest.json").exists() {
            return Self::open(root);
        }
        fs::create_dir_all(&root)?;
        let manifest = Manifest {
            schema_version: SCHEMA_VERSION,
            created_utc: fmt_ts(Utc::now()),
            utc_offset_hours,
            ingestions: Vec::new(),
            files: BTreeMap::new(),
        };
        let store = Store { root, manifest };
        store.save_manifest()?;
        Ok(store)
    }

    /// Open an existing store.
    pub fn open(root: impl Into<PathBuf>) -> Result<Store> {
        let root = root.into();
        let path = root.join("manifest.json");
        let data = fs::read_to_string(&path).map_err(|_| {
            PhmError::MissingData(format!("no store manifest at {}", path.display()))
        })?;
        let manifest: Manifest = serde_json::from_str(&data)?;
        if manifest.schema_version != SCHEMA_VERSION {
            return Err(PhmError::ManifestMismatch(format!(
                "schema version {} is not supported (expected {SCHEMA_VERSION})",
                manifest.schema_version
            )));
        }
        Ok(Store { root, manifest })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    pub fn utc_offset_hours(&self) -> i32 {
        self.manifest.utc_offset_hours
    }

    fn save_manifest(&self) -> Result<()> {
        let json = serde_json::to_string_pretty(&self.manifest)?;
        write_atomic(&self.root.join("manifest.json"), json.as_bytes())
    }

    fn track_file(&mut self, relpath: String, rows: u64) {
        self.manifest.files.insert(relpath, rows);
    }

    // -- fleet metadata ------------------------------------------------------

    pub fn write_fleet(&mut self, fleet: &[EscalatorMeta]) -> Result<()> {
        let _lock = StoreLock::acquire(&self.root)?;
        let json = serde_json::to_string_pretty(fleet)?;
        write_atomic(&self.root.join("fleet.json"), json.as_bytes())?;
        self.track_file("fleet.json".into(), fleet.len() as u64);
        self.save_manifest()
    }

    pub fn fleet(&self) -> Result<Vec<EscalatorMeta>> {
        let path = self.root.join("fleet.json");
        let data = fs::read_to_string(&path).map_err(|_| {
            PhmError::MissingData(format!(
                "no fleet metadata at {}; ingest a fleet.json first",
                path.display()
            ))
        })?;
        Ok(serde_json::from_str(&data)?)
    }

    fn known_escalator(&self, escalator_id: u32) -> Result<()> {
        let fleet = self.fleet()?;
        crate::domain::find_escalator(&fleet, escalator_id).map(|_| ())
    }

    // -- ingestion -----------------------------------------------------------

    /// Validate and ingest a raw directory: `energy/**/*.csv`,
    /// `vibration/**/*.jsonl`, and optionally `fleet.json`.
    ///
    /// Accepted rows are merged into the partitions; rows identical to
    /// already-stored ones count as unchanged, conflicting duplicates are
    /// rejected. Files with a broken schema are rejected whole; remaining
    /// files are still processed.
    pub fn ingest(&mut self, raw_dir: &Path) -> Result<IngestReport> {
        let _lock = StoreLock::acquire(&self.root)?;
        let mut report = IngestReport::default();

        let fleet_path = raw_dir.join("fleet.json");
        if fleet_path.exists() {
            let data = fs::read_to_string(&fleet_path)?;
            match serde_json::from_str::<Vec<EscalatorMeta>>(&data) {
                Ok(fleet) => {
                    write_atomic(&self.root.join("fleet.json"), data.as_bytes())?;
                    self.track_file("fleet.json".into(), fleet.len() as u64);
                    report.files += 1;
                }
                Err(e) => {
                    report
                        .rejected_files
                        .push(format!("{}: {e}", fleet_path.display()));
                }
            }
        }

        for file in collect_files(&raw_dir.join("energy"), "csv")? {
            report.files += 1;
            if let Err(e) = self.ingest_energy_file(&file, &mut report) {
                report
                    .rejected_files
                    .push(format!("{}: {e}", file.display()));
            }
        }
        for file in collect_files(&raw_dir.join("vibration"), "jsonl")? {
            report.files += 1;
            if let Err(e) = self.ingest_vibration_file(&file, &mut report) {
                report
                    .rejected_files
                    .push(format!("{}: {e}", file.display()));
            }
        }

        self.manifest.ingestions.push(IngestionEntry {
            source: raw_dir.display().to_string(),
            files: report.files,
            rows: report.rows,
            rejected: report.rejected_rows + report.rejected_files.len() as u64,
        });
        self.save_manifest()?;
        Ok(report)
    }

    fn ingest_energy_file(&mut self, file: &Path, report: &mut IngestReport) -> Result<()> {
        let mut reader = csv::Reader::from_path(file)?;
        let header = reader.headers()?.clone();
        if header.iter().collect::<Vec<_>>() != ENERGY_HEADER {
            return Err(PhmError::SchemaViolation {
                path: file.display().to_string(),
                reason: format!("unexpected header {:?}", header),
            });
        }
        // group rows by (escalator, service date) partition
        let mut partitions: BTreeMap<(u32, NaiveDate), Vec<EnergyMinute>> = BTreeMap::new();
        let mut last_ts: BTreeMap<u32, DateTime<Utc>> = BTreeMap::new();
        for (i, row) in reader.records().enumerate() {
            let line = i + 2; // header is line 1
            let row = row?;
            match parse_energy_row(&row) {
                Ok(rec) => {
                    if let Some(prev) = last_ts.get(&rec.escalator_id) {
                        if rec.timestamp_utc <= *prev {
                            report.rejected_rows += 1;
                            report.rejection_log.push(format!(
                                "{}:{line}: non-monotone timestamp {}",
                                file.display(),
                                fmt_ts(rec.timestamp_utc)
                            ));
                            continue;
                        }
                    }
                    last_ts.insert(rec.escalator_id, rec.timestamp_utc);
                    let (date, _) = service_slot(rec.timestamp_utc, self.utc_offset_hours());
                    partitions
                        .entry((rec.escalator_id, date))
                        .or_default()
                        .push(rec);
                }
                Err(e) => {
                    report.rejected_rows += 1;
                    report
                        .rejection_log
                        .push(format!("{}:{line}: {e}", file.display()));
                }
            }
        }
        for ((escalator, date), rows) in partitions {
            self.merge_energy_partition(escalator, date, rows, report)?;
        }
        Ok(())
    }

    fn merge_energy_partition(
        &mut self,
        escalator: u32,
        date: NaiveDate,
        rows: Vec<EnergyMinute>,
        report: &mut IngestReport,
    ) -> Result<()> {
        let rel = format!("raw_energy/{escalator}/{date}.csv");
        let path = self.root.join(&rel);
        let mut existing: BTreeMap<DateTime<Utc>, EnergyMinute> = BTreeMap::new();
        if path.exists() {
            for rec in read_energy_csv(&path)? {
                existing.insert(rec.timestamp_utc, rec);
            }
        }
        for rec in rows {
            match existing.get(&rec.timestamp_utc) {
                None => {
                    existing.insert(rec.timestamp_utc, rec);
                    report.rows += 1;
                }
                Some(prev) if *prev == rec => report.unchanged_rows += 1,
                Some(_) => {
                    report.rejected_rows += 1;
                    report.rejection_log.push(format!(
                        "{rel}: conflicting duplicate minute {} for escalator {escalator}",
                        fmt_ts(rec.timestamp_utc)
                    ));
                }
            }
        }
        let count = existing.len() as u64;
        write_atomic(&path, energy_csv_bytes(existing.into_values())?.as_slice())?;
        self.track_file(rel, count);
        Ok(())
    }

    fn ingest_vibration_file(&mut self, file: &Path, report: &mut IngestReport) -> Result<()> {
        let data = fs::read_to_string(file)?;
        let mut partitions: BTreeMap<(u32, u8, NaiveDate), Vec<SpectrumRecord>> = BTreeMap::new();
        let mut last_ts: BTreeMap<(u32, u8), DateTime<Utc>> = BTreeMap::new();
        let mut any_parsed = false;
        for (i, line) in data.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let lineno = i + 1;
            match serde_json::from_str::<SpectrumRecord>(line) {
                Ok(rec) => {
                    any_parsed = true;
                    if let Err(e) = rec.validate() {
                        report.rejected_rows += 1;
                        report
                            .rejection_log
                            .push(format!("{}:{lineno}: {e}", file.display()));
                        continue;
                    }
                    let key = (rec.escalator_id, rec.point_id);
                    if let Some(prev) = last_ts.get(&key) {
                        if rec.timestamp_utc <= *prev {
                            report.rejected_rows += 1;
                            report.rejection_log.push(format!(
                                "{}:{lineno}: non-monotone timestamp {}",
                                file.display(),
                                fmt_ts(rec.timestamp_utc)
                            ));
                            continue;
                        }
                    }
                    last_ts.insert(key, rec.timestamp_utc);
                    let (date, _) = service_slot(rec.timestamp_utc, self.utc_offset_hours());
                    partitions
                        .entry((rec.escalator_id, rec.point_id, date))
                        .or_default()
                        .push(rec);
                }
                Err(e) if !any_parsed && i == 0 => {
                    // first line unparseable: treat the file as schema-broken
                    return Err(PhmError::SchemaViolation {
                        path: file.display().to_string(),
                        reason: e.to_string(),
                    });
                }
                Err(e) => {
                    report.rejected_rows += 1;
                    report
                        .rejection_log
                        .push(format!("{}:{lineno}: {e}", file.display()));
                }
            }
        }
        for ((escalator, point, date), rows) in partitions {
            let rel = format!("raw_vibration/{escalator}/{point}/{date}.jsonl");
            let path = self.root.join(&rel);
            let mut existing: BTreeMap<DateTime<Utc>, SpectrumRecord> = BTreeMap::new();
            if path.exists() {
                for rec in read_spectra_jsonl(&path)? {
                    existing.insert(rec.timestamp_utc, rec);
                }
            }
            for rec in rows {
                match existing.get(&rec.timestamp_utc) {
                    None => {
                        existing.insert(rec.timestamp_utc, rec);
                        report.rows += 1;
                    }
                    Some(prev) if *prev == rec => report.unchanged_rows += 1,
                    Some(_) => {
                        report.rejected_rows += 1;
                        report.rejection_log.push(format!(
                            "{rel}: conflicting duplicate spectrum {}",
                            fmt_ts(rec.timestamp_utc)
                        ));
                    }
                }
            }
            let count = existing.len() as u64;
            let mut out = String::new();
            for rec in existing.into_values() {
                out.push_str(&serde_json::to_string(&rec)?);
                out.push('\n');
            }
            write_atomic(&path, out.as_bytes())?;
            self.track_file(rel, count);
        }
        Ok(())
    }

    // -- queries -------------------------------------------------------------

    /// Energy minutes for one escalator over a service-date range, inclusive,
    /// ordered by timestamp. Missing days contribute no records.
    pub fn query_energy(
        &self,
        escalator: u32,
        from: NaiveDate,
        to: NaiveDate,
    ) -> Result<Vec<EnergyMinute>> {
        self.known_escalator(escalator)?;
        let mut out = Vec::new();
        let mut date = from;
        while date <= to {
            let path = self.root.join(format!("raw_energy/{escalator}/{date}.csv"));
            if path.exists() {
                out.extend(read_energy_csv(&path)?);
            }
            date = date.succ_opt().unwrap();
        }
        out.sort_by_key(|r| r.timestamp_utc);
        Ok(out)
    }

    /// Visit spectra for one escalator-point over a service-date range in
    /// timestamp order, one partition file at a time.
    pub fn for_each_spectrum(
        &self,
        escalator: u32,
        point: u8,
        from: NaiveDate,
        to: NaiveDate,
        mut f: impl FnMut(SpectrumRecord) -> Result<()>,
    ) -> Result<()> {
        self.known_escalator(escalator)?;
        let mut date = from;
        while date <= to {
            let path = self
                .root
                .join(format!("raw_vibration/{escalator}/{point}/{date}.jsonl"));
            if path.exists() {
                for rec in read_spectra_jsonl(&path)? {
                    f(rec)?;
                }
            }
            date = date.succ_opt().unwrap();
        }
        Ok(())
    }

    /// Spectra for one escalator-point over a service-date range, inclusive.
    pub fn query_vibration(
        &self,
        escalator: u32,
        point: u8,
        from: NaiveDate,
        to: NaiveDate,
    ) -> Result<Vec<SpectrumRecord>> {
        let mut out = Vec::new();
        self.for_each_spectrum(escalator, point, from, to, |rec| {
            out.push(rec);
            Ok(())
        })?;
        Ok(out)
    }

    // -- derived data --------------------------------------------------------

    /// Merge daily feature rows into `derived_daily/{escalator}.csv`
    /// (replacing rows with the same service date).
    pub fn write_daily_features(&mut self, escalator: u32, rows: &[DailyFeatures]) -> Result<()> {
        let _lock = StoreLock::acquire(&self.root)?;
        let rel = format!("derived_daily/{escalator}.csv");
        let path = self.root.join(&rel);
        let mut merged: BTreeMap<NaiveDate, DailyFeatures> = BTreeMap::new();
        if path.exists() {
            for row in self.read_daily_features(escalator)? {
                merged.insert(row.service_date, row);
            }
        }
        for row in rows {
            merged.insert(row.service_date, row.clone());
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(DAILY_HEADER)?;
        for row in merged.values() {
            w.write_record([
                row.escalator_id.to_string(),
                row.service_date.to_string(),
                row.working_min.to_string(),
                format!("{:.3}", row.fixed_loss_wh_min),
                format!("{:.3}", row.variable_loss_wh),
                format!("{:.1}", row.passengers),
                row.corrective_events.to_string(),
                row.preventive_events.to_string(),
            ])?;
        }
        let count = merged.len() as u64;
        write_atomic(&path, &w.into_inner().expect("in-memory writer"))?;
        self.track_file(rel, count);
        self.save_manifest()
    }

    pub fn read_daily_features(&self, escalator: u32) -> Result<Vec<DailyFeatures>> {
        let path = self.root.join(format!("derived_daily/{escalator}.csv"));
        if !path.exists() {
            return Ok(Vec::new());
        }
        let mut reader = csv::Reader::from_path(&path)?;
        let mut out = Vec::new();
        for row in reader.records() {
            let row = row?;
            out.push(DailyFeatures {
                escalator_id: field(&row, 0)?,
                service_date: field::<NaiveDate>(&row, 1)?,
                working_min: field(&row, 2)?,
                fixed_loss_wh_min: field(&row, 3)?,
                variable_loss_wh: field(&row, 4)?,
                passengers: field(&row, 5)?,
                corrective_events: field(&row, 6)?,
                preventive_events: field(&row, 7)?,
            });
        }
        Ok(out)
    }

    /// Merge reduced `A_t` rows into `derived_at/{escalator}.csv`.
    pub fn write_at_records(&mut self, escalator: u32, rows: &[AtRecord]) -> Result<()> {
        let _lock = StoreLock::acquire(&self.root)?;
        let rel = format!("derived_at/{escalator}.csv");
        let path = self.root.join(&rel);
        let mut merged: BTreeMap<(u8, DateTime<Utc>), AtRecord> = BTreeMap::new();
        if path.exists() {
            for row in self.read_at_records(escalator)? {
                merged.insert((row.point_id, row.timestamp_utc), row);
            }
        }
        for row in rows {
            merged.insert((row.point_id, row.timestamp_utc), row.clone());
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(AT_HEADER)?;
        for row in merged.values() {
            w.write_record([
                row.escalator_id.to_string(),
                row.point_id.to_string(),
                fmt_ts(row.timestamp_utc),
                format!("{:.6}", row.at_g),
                row.status.to_string(),
            ])?;
        }
        let count = merged.len() as u64;
        write_atomic(&path, &w.into_inner().expect("in-memory writer"))?;
        self.track_file(rel, count);
        self.save_manifest()
    }

    pub fn read_at_records(&self, escalator: u32) -> Result<Vec<AtRecord>> {
        let path = self.root.join(format!("derived_at/{escalator}.csv"));
        if !path.exists() {
            return Ok(Vec::new());
        }
        let mut reader = csv::Reader::from_path(&path)?;
        let mut out = Vec::new();
        for row in reader.records() {
            let row = row?;
            out.push(AtRecord {
                escalator_id: field(&row, 0)?,
                point_id: field(&row, 1)?,
                timestamp_utc: parse_ts(row.get(2).unwrap_or_default())?,
                at_g: field(&row, 3)?,
                status: row.get(4).unwrap_or_default().parse()?,
            });
        }
        Ok(out)
    }

    /// Write one quarter's feature rows (full rewrite of the quarter file).
    pub fn write_quarters(&mut self, quarter: Quarter, rows: &[QuarterFeatures]) -> Result<()> {
        let _lock = StoreLock::acquire(&self.root)?;
        let rel = format!("quarters/{quarter}.csv");
        let mut sorted: Vec<&QuarterFeatures> = rows.iter().collect();
        sorted.sort_by_key(|r| r.escalator_id);
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(QUARTER_HEADER)?;
        for row in sorted {
            w.write_record([
                row.escalator_id.to_string(),
                row.quarter.year.to_string(),
                row.quarter.quarter.to_string(),
                format!("{:.4}", row.age_years),
                format!("{:.6}", row.lhi),
                format!("{:.6}", row.working_time),
                format!("{:.6}", row.passenger_load),
                format!("{:.6}", row.at_areas),
                format!("{:.6}", row.fixed_loss_residual),
                format!("{:.6}", row.fault_counts),
                format!("{:.1}", row.raw_working_min),
                format!("{:.1}", row.raw_passengers),
                format!("{:.4}", row.raw_fixed_loss_residual),
                format!("{:.6}", row.raw_at_area),
                row.raw_fault_count.to_string(),
                format!("{:.3}", row.baseline_fixed_loss_wh_min),
                row.days_aggregated.to_string(),
            ])?;
        }
        let count = rows.len() as u64;
        write_atomic(
            &self.root.join(&rel),
            &w.into_inner().expect("in-memory writer"),
        )?;
        self.track_file(rel, count);
        self.save_manifest()
    }

    pub fn read_quarters(&self, quarter: Quarter) -> Result<Vec<QuarterFeatures>> {
        let path = self.root.join(format!("quarters/{quarter}.csv"));
        if !path.exists() {
            return Err(PhmError::MissingData(format!(
                "no quarterly features for {quarter}; run the features stage first"
            )));
        }
        let mut reader = csv::Reader::from_path(&path)?;
        let mut out = Vec::new();
        for row in reader.records() {
            let row = row?;
            out.push(QuarterFeatures {
                escalator_id: field(&row, 0)?,
                quarter: Quarter::new(field(&row, 1)?, field(&row, 2)?)?,
                age_years: field(&row, 3)?,
                lhi: field(&row, 4)?,
                working_time: field(&row, 5)?,
                passenger_load: field(&row, 6)?,
                at_areas: field(&row, 7)?,
                fixed_loss_residual: field(&row, 8)?,
                fault_counts: field(&row, 9)?,
                raw_working_min: field(&row, 10)?,
                raw_passengers: field(&row, 11)?,
                raw_fixed_loss_residual: field(&row, 12)?,
                raw_at_area: field(&row, 13)?,
                raw_fault_count: field(&row, 14)?,
                baseline_fixed_loss_wh_min: field(&row, 15)?,
                days_aggregated: field(&row, 16)?,
            });
        }
        Ok(out)
    }

    /// Quarters with stored feature files, in order.
    pub fn list_quarters(&self) -> Result<Vec<Quarter>> {
        let dir = self.root.join("quarters");
        if !dir.exists() {
            return Ok(Vec::new());
        }
        let mut quarters = Vec::new();
        for entry in fs::read_dir(dir)? {
            let name = entry?.file_name();
            let name = name.to_string_lossy();
            if let Some(stem) = name.strip_suffix(".csv") {
                if let Ok(q) = stem.parse::<Quarter>() {
                    quarters.push(q);
                }
            }
        }
        quarters.sort();
        Ok(quarters)
    }

    /// Escalators with any raw energy data.
    pub fn escalators_with_energy(&self) -> Result<Vec<u32>> {
        let dir = self.root.join("raw_energy");
        let mut ids = Vec::new();
        if dir.exists() {
            for entry in fs::read_dir(dir)? {
                if let Ok(id) = entry?.file_name().to_string_lossy().parse::<u32>() {
                    ids.push(id);
                }
            }
        }
        ids.sort_unstable();
        Ok(ids)
    }

    // -- models --------------------------------------------------------------

    pub fn write_model(&mut self, name: &str, model: &LhiModel) -> Result<()> {
        let _lock = StoreLock::acquire(&self.root)?;
        let rel = format!("models/{name}.json");
        let json = serde_json::to_string_pretty(model)?;
        write_atomic(&self.root.join(&rel), json.as_bytes())?;
        self.track_file(rel, 1);
        self.save_manifest()
    }

    pub fn read_model(&self, name: &str) -> Result<LhiModel> {
        let path = self.root.join(format!("models/{name}.json"));
        let data = fs::read_to_string(&path)
            .map_err(|_| PhmError::MissingData(format!("no model at {}", path.display())))?;
        Ok(serde_json::from_str(&data)?)
    }

    pub fn has_model(&self, name: &str) -> bool {
        self.root.join(format!("models/{name}.json")).exists()
    }

    // -- verification --------------------------------------------------------

    /// Recount every tracked file and report mismatches against the manifest.
    pub fn verify(&self) -> Result<Vec<VerifyIssue>> {
        let mut issues = Vec::new();
        for (rel, &rows) in &self.manifest.files {
            let path = self.root.join(rel);
            let actual = count_rows(&path, rel)?;
            if actual != Some(rows) {
                issues.push(VerifyIssue {
                    path: rel.clone(),
                    manifest_rows: Some(rows),
                    actual_rows: actual,
                });
            }
        }
        Ok(issues)
    }
}

/// Write energy minutes in the raw ingest CSV schema (used by the simulator
/// to produce ingestible files).
pub fn write_raw_energy_csv(path: &Path, rows: &[EnergyMinute]) -> Result<()> {
    write_atomic(path, energy_csv_bytes(rows.iter().cloned())?.as_slice())
}

/// Write spectra in the raw ingest JSONL schema.
pub fn write_raw_spectra_jsonl(path: &Path, rows: &[SpectrumRecord]) -> Result<()> {
    let mut out = String::new();
    for rec in rows {
        out.push_str(&serde_json::to_string(rec)?);
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

/// Write RUL records as CSV to an arbitrary path.
pub fn write_rul_csv(path: &Path, rows: &[RulRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(RUL_HEADER)?;
    for r in rows {
        w.write_record(rul_record_fields(r))?;
    }
    write_atomic(path, &w.into_inner().expect("in-memory writer"))
}

/// Canonical string formatting of one RUL row; the report prints exactly
/// these values.
pub fn rul_record_fields(r: &RulRecord) -> [String; 12] {
    [
        r.escalator_id.to_string(),
        r.year.to_string(),
        r.quarter.to_string(),
        format!("{:.2}", r.actual_age),
        format!("{:.2}", r.years_till_35),
        format!("{:.2}", r.rul),
        format!("{:.4}", r.lhi),
        format!("{:.4}", r.working_hours),
        format!("{:.4}", r.passenger_load),
        format!("{:.4}", r.at_areas),
        format!("{:.4}", r.fixed_loss_residual),
        format!("{:.4}", r.fault_counts),
    ]
}

fn field<T: std::str::FromStr>(row: &csv::StringRecord, idx: usize) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    let raw = row
        .get(idx)
        .ok_or_else(|| PhmError::InvalidValue(format!("missing column {idx}")))?;
    raw.parse::<T>()
        .map_err(|e| PhmError::InvalidValue(format!("bad value '{raw}' in column {idx}: {e}")))
}

fn parse_energy_row(row: &csv::StringRecord) -> Result<EnergyMinute> {
    let rec = EnergyMinute {
        escalator_id: field(row, 0)?,
        timestamp_utc: parse_ts(row.get(1).unwrap_or_default())?,
        e_imp_wh: field(row, 2)?,
        e_exp_wh: field(row, 3)?,
    };
    rec.validate()?;
    Ok(rec)
}

fn read_energy_csv(path: &Path) -> Result<Vec<EnergyMinute>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in reader.records() {
        out.push(parse_energy_row(&row?)?);
    }
    Ok(out)
}

fn energy_csv_bytes(rows: impl Iterator<Item = EnergyMinute>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(ENERGY_HEADER)?;
    for r in rows {
        w.write_record([
            r.escalator_id.to_string(),
            fmt_ts(r.timestamp_utc),
            format!("{:.3}", r.e_imp_wh),
            format!("{:.3}", r.e_exp_wh),
        ])?;
    }
    Ok(w.into_inner().expect("in-memory writer"))
}

fn read_spectra_jsonl(path: &Path) -> Result<Vec<SpectrumRecord>> {
    let data = fs::read_to_string(path)?;
    let mut out = Vec::new();
    for line in data.lines() {
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(line)?);
        }
    }
    Ok(out)
}

fn count_rows(path: &Path, rel: &str) -> Result<Option<u64>> {
    if !path.exists() {
        return Ok(None);
    }
    if rel.ends_with(".json") {
        if rel == "fleet.json" {
            let fleet: Vec<EscalatorMeta> = serde_json::from_str(&fs::read_to_string(path)?)?;
            return Ok(Some(fleet.len() as u64));
        }
        return Ok(Some(1));
    }
    let data = fs::read_to_string(path)?;
    let lines = data.lines().filter(|l| !l.trim().is_empty()).count() as u64;
    if rel.ends_with(".csv") {
        Ok(Some(lines.saturating_sub(1))) // header
    } else {
        Ok(Some(lines))
    }
}

fn collect_files(dir: &Path, extension: &str) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    if !dir.exists() {
        return Ok(files);
    }
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d)? {
            let path = entry?.path();
            if path.is_dir() {
                stack.push(path);
            } else if path.extension().and_then(|e| e.to_str()) == Some(extension) {
                files.push(path);
            }
        }
    }
    files.sort();
    Ok(files)
}
