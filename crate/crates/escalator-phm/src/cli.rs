//! Command-line front end.
//!
//! Subcommands cover the full pipeline: `simulate` → `ingest` → `bands` →
//! `features` → `fit` → `rul` → `report`, plus `verify` for store
//! consistency. Exit codes: 0 success, 1 validation/runtime errors, 2 usage
//! errors.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::domain::Quarter;
use crate::error::{PhmError, Result};
use crate::health::{ExclusionPolicy, LhiModel};
use crate::pipeline::{
    compute_quarter_features, compute_rul, fit_model_from_store, save_bands, select_fleet_bands,
    PipelineConfig,
};
use crate::report::{render_report, ReportSpec};
use crate::store::{write_raw_energy_csv, write_raw_spectra_jsonl, write_rul_csv, Store};
use crate::synth::{date_range, generate_day_spectra, generate_energy_day, SimConfig};

#[derive(Parser)]
#[command(
    name = "escalator-phm",
    version,
    about = "Escalator fleet prognostics: energy and vibration features, health index, RUL",
    subcommand_required = true,
    arg_required_else_help = true
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic raw-data directory with ground-truth sidecars.
    Simulate {
        /// Simulation config JSON; omit for the default fleet and quarter.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory for the raw layout.
        #[arg(long)]
        out: PathBuf,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Validate a raw directory and merge it into a store.
    Ingest {
        #[arg(long)]
        raw: PathBuf,
        #[arg(long)]
        store: PathBuf,
        /// Local clock offset for service-day logic, hours east of UTC.
        #[arg(long, default_value_t = 8)]
        utc_offset: i32,
    },
    /// Select the dominant frequency bands from stored spectra.
    Bands {
        #[arg(long)]
        store: PathBuf,
    },
    /// Compute daily, A_t, and quarterly features for one quarter.
    Features {
        #[arg(long)]
        store: PathBuf,
        /// Quarter like 2021Q4.
        #[arg(long)]
        quarter: String,
        /// Renormalize sensor weights when a sensor has no data.
        #[arg(long)]
        renormalize_weights: bool,
    },
    /// Fit the exponential reference model on stored quarterly features.
    Fit {
        #[arg(long)]
        store: PathBuf,
        /// End-of-life age in years.
        #[arg(long, default_value_t = 35.0)]
        t_end: f64,
        /// Escalator ids to exclude, comma separated.
        #[arg(long, value_delimiter = ',', conflicts_with = "auto_exclude")]
        exclude: Vec<u32>,
        /// Auto-exclude the N points with the largest log-residuals.
        #[arg(long)]
        auto_exclude: Option<usize>,
        /// Output model path, relative to the store root (e.g. models/ref.json).
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute remaining useful life for one stored quarter.
    Rul {
        #[arg(long)]
        store: PathBuf,
        /// Model name under models/ (or a JSON path); omit for the bundled
        /// reference model.
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        quarter: String,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Render a static HTML report with inline SVG charts.
    Report {
        #[arg(long)]
        store: PathBuf,
        /// Report spec JSON: {escalators[], period{from,to}, sheets[]}.
        #[arg(long)]
        spec: PathBuf,
        /// Output HTML path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Recount store partitions against the manifest.
    Verify {
        #[arg(long)]
        store: PathBuf,
    },
}

/// Parse `argv` and run. Returns the process exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints help/usage itself; 2 for usage errors, 0 for --help
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run_command(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

/// Entry point for the binary: dispatch on `std::env::args`.
pub fn run() -> i32 {
    dispatch(std::env::args_os())
}

fn run_command(command: Command) -> Result<i32> {
    match command {
        Command::Simulate { config, out, seed } => simulate(config.as_deref(), &out, seed),
        Command::Ingest {
            raw,
            store,
            utc_offset,
        } => ingest(&raw, &store, utc_offset),
        Command::Bands { store } => bands(&store),
        Command::Features {
            store,
            quarter,
            renormalize_weights,
        } => features(&store, &quarter, renormalize_weights),
        Command::Fit {
            store,
            t_end,
            exclude,
            auto_exclude,
            out,
        } => fit(&store, t_end, exclude, auto_exclude, &out),
        Command::Rul {
            store,
            model,
            quarter,
            out,
        } => rul(&store, model.as_deref(), &quarter, &out),
        Command::Report { store, spec, out } => report(&store, &spec, &out),
        Command::Verify { store } => verify(&store),
    }
}

fn simulate(config: Option<&Path>, out: &Path, seed: Option<u64>) -> Result<i32> {
    let mut cfg: SimConfig = match config {
        Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)?,
        None => SimConfig::default(),
    };
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    cfg.validate()?;

    std::fs::create_dir_all(out)?;
    std::fs::write(
        out.join("fleet.json"),
        serde_json::to_string_pretty(&cfg.fleet)?,
    )?;

    let dates = date_range(&cfg);
    let mut energy_rows: u64 = 0;
    let mut spectra_rows: u64 = 0;
    for meta in &cfg.fleet {
        for &date in &dates {
            let (minutes, truth) = generate_energy_day(&cfg, meta.id, date)?;
            energy_rows += minutes.len() as u64;
            let dir = out.join(format!("energy/{}", meta.id));
            std::fs::create_dir_all(&dir)?;
            write_raw_energy_csv(&dir.join(format!("{date}.csv")), &minutes)?;

            let truth_dir = out.join(format!("ground_truth/{}", meta.id));
            std::fs::create_dir_all(&truth_dir)?;
            std::fs::write(
                truth_dir.join(format!("{date}.json")),
                serde_json::to_string_pretty(&truth)?,
            )?;

            let spectra = generate_day_spectra(&cfg, meta.id, date)?;
            spectra_rows += spectra.len() as u64;
            let mut by_point: BTreeMap<u8, Vec<_>> = BTreeMap::new();
            for s in spectra {
                by_point.entry(s.point_id).or_default().push(s);
            }
            for (point, rows) in by_point {
                let dir = out.join(format!("vibration/{}/{point}", meta.id));
                std::fs::create_dir_all(&dir)?;
                write_raw_spectra_jsonl(&dir.join(format!("{date}.jsonl")), &rows)?;
            }
        }
    }
    println!(
        "simulated {} escalators x {} days: {energy_rows} energy minutes, {spectra_rows} spectra (seed {})",
        cfg.fleet.len(),
        dates.len(),
        cfg.seed
    );
    Ok(0)
}

fn ingest(raw: &Path, store_dir: &Path, utc_offset: i32) -> Result<i32> {
    let mut store = Store::create(store_dir, utc_offset)?;
    let report = store.ingest(raw)?;
    println!(
        "ingested {} files: {} new rows, {} unchanged, {} rows rejected, {} files rejected",
        report.files,
        report.rows,
        report.unchanged_rows,
        report.rejected_rows,
        report.rejected_files.len()
    );
    for line in &report.rejection_log {
        eprintln!("rejected row: {line}");
    }
    for file in &report.rejected_files {
        eprintln!("rejected file: {file}");
    }
    Ok(if report.clean() { 0 } else { 1 })
}

fn bands(store_dir: &Path) -> Result<i32> {
    let mut store = Store::open(store_dir)?;
    let bands = select_fleet_bands(&store, &Default::default())?;
    save_bands(&mut store, &bands)?;
    println!(
        "high-frequency components: [{}, {}] kHz",
        bands.high.band_lo_khz, bands.high.band_hi_khz
    );
    println!(
        "low-frequency components: [{}, {}] kHz",
        bands.low.band_lo_khz, bands.low.band_hi_khz
    );
    Ok(0)
}

fn features(store_dir: &Path, quarter: &str, renormalize_weights: bool) -> Result<i32> {
    let quarter: Quarter = quarter.parse()?;
    let mut store = Store::open(store_dir)?;
    let cfg = PipelineConfig {
        renormalize_missing_sensors: renormalize_weights,
        ..Default::default()
    };
    let report = compute_quarter_features(&mut store, quarter, &cfg)?;
    println!(
        "{quarter}: features for {} escalators",
        report.escalators_processed.len()
    );
    for (id, reason) in &report.skipped {
        eprintln!("skipped escalator {id}: {reason}");
    }
    for (id, date) in &report.excluded_days {
        eprintln!("excluded day with gaps: escalator {id}, {date}");
    }
    for (id, date, reason) in &report.unusable_days {
        eprintln!("unusable day: escalator {id}, {date}: {reason}");
    }
    Ok(0)
}

fn fit(
    store_dir: &Path,
    t_end: f64,
    exclude: Vec<u32>,
    auto_exclude: Option<usize>,
    out: &Path,
) -> Result<i32> {
    let mut store = Store::open(store_dir)?;
    let policy = if let Some(k) = auto_exclude {
        ExclusionPolicy::AutoWorst(k)
    } else if !exclude.is_empty() {
        ExclusionPolicy::Ids(exclude)
    } else {
        ExclusionPolicy::None
    };
    let model = fit_model_from_store(&store, &policy, t_end)?;
    write_model_out(&mut store, out, &model)?;
    println!(
        "fitted on {} points (excluded {:?}): a = {:.6}, b = {:.6}, y_end = {:.6}",
        model.fitted_on.len(),
        model.excluded,
        model.a,
        model.b,
        model.y_end
    );
    Ok(0)
}

fn write_model_out(store: &mut Store, out: &Path, model: &LhiModel) -> Result<()> {
    let resolved = if out.is_absolute() {
        out.to_path_buf()
    } else {
        store.root().join(out)
    };
    // models/<name>.json goes through the store so the manifest tracks it
    if let (Some(parent), Some(stem)) = (resolved.parent(), resolved.file_stem()) {
        if parent == store.root().join("models")
            && resolved.extension().and_then(|e| e.to_str()) == Some("json")
        {
            return store.write_model(&stem.to_string_lossy(), model);
        }
    }
    if let Some(parent) = resolved.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(&resolved, serde_json::to_string_pretty(model)?)?;
    Ok(())
}

fn rul(store_dir: &Path, model: Option<&str>, quarter: &str, out: &Path) -> Result<i32> {
    let quarter: Quarter = quarter.parse()?;
    let store = Store::open(store_dir)?;
    let model = load_model(&store, model)?;
    let rows = compute_rul(&store, &model, quarter)?;
    write_rul_csv(out, &rows)?;
    println!("wrote {} RUL rows to {}", rows.len(), out.display());
    Ok(0)
}

fn load_model(store: &Store, model: Option<&str>) -> Result<LhiModel> {
    match model {
        None => Ok(LhiModel::reference_default()),
        Some(name) => {
            if store.has_model(name) {
                store.read_model(name)
            } else if Path::new(name).exists() {
                Ok(serde_json::from_str(&std::fs::read_to_string(name)?)?)
            } else {
                Err(PhmError::MissingData(format!(
                    "no model named '{name}' in the store and no such file"
                )))
            }
        }
    }
}

fn report(store_dir: &Path, spec_path: &Path, out: &Path) -> Result<i32> {
    let store = Store::open(store_dir)?;
    let spec: ReportSpec = serde_json::from_str(&std::fs::read_to_string(spec_path)?)?;
    let rendered = render_report(&spec, &store)?;
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(out, &rendered.html)?;
    for w in &rendered.warnings {
        eprintln!("warning: {w}");
    }
    println!("wrote report to {}", out.display());
    Ok(0)
}

fn verify(store_dir: &Path) -> Result<i32> {
    let store = Store::open(store_dir)?;
    let issues = store.verify()?;
    if issues.is_empty() {
        println!(
            "store consistent: {} tracked files match the manifest",
            store.manifest().files.len()
        );
        Ok(0)
    } else {
        for issue in &issues {
            eprintln!(
                "mismatch: {} (manifest {:?}, actual {:?})",
                issue.path, issue.manifest_rows, issue.actual_rows
            );
        }
        Ok(1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(line: &str) -> Vec<String> {
        line.split_whitespace().map(str::to_string).collect()
    }

    #[test]
    fn no_subcommand_is_a_usage_error() {
        assert_eq!(dispatch(args("escalator-phm")), 2);
    }

    #[test]
    fn unknown_subcommand_is_a_usage_error() {
        assert_eq!(dispatch(args("escalator-phm frobnicate")), 2);
    }

    #[test]
    fn help_exits_zero() {
        assert_eq!(dispatch(args("escalator-phm --help")), 0);
        assert_eq!(dispatch(args("escalator-phm rul --help")), 0);
    }

    #[test]
    fn missing_required_flag_is_a_usage_error() {
        assert_eq!(dispatch(args("escalator-phm ingest --raw /tmp/x")), 2);
    }

    #[test]
    fn runtime_failure_maps_to_exit_one() {
        // store does not exist
        assert_eq!(
            dispatch(args("escalator-phm verify --store /nonexistent/store")),
            1
        );
    }

    #[test]
    fn bad_quarter_is_a_validation_error() {
        let dir = tempfile::TempDir::new().unwrap();
        Store::create(dir.path(), 8).unwrap();
        let line = format!(
            "escalator-phm features --store {} --quarter 2021Q9",
            dir.path().display()
        );
        assert_eq!(dispatch(args(&line)), 1);
    }
}
