//! Static HTML condition reports with inline SVG charts.
//!
//! A report is a single self-contained HTML document with up to four sheets:
//! Overview (fleet table with alert/alarm counts), Energy (daily working
//! time, passenger load, fixed loss), Vibration (per-sensor `A_t` series with
//! threshold lines, plus exceedance curves), and RUL (reference curve,
//! shifted curve, and the RUL annotation). Rendering is a pure function of
//! store contents and the report spec: identical inputs produce byte-identical
//! HTML, and every number shown equals the corresponding CSV-pipeline value.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::domain::{default_sensors, EscalatorMeta, Quarter, SensorLocation, ThresholdTable};
use crate::error::{PhmError, Result};
use crate::health::LhiModel;
use crate::pipeline::compute_rul;
use crate::rul::RulRecord;
use crate::store::{rul_record_fields, Store};
use crate::vibration::{exceedance_curve, AtRecord, AtStatus};

/// Report date range, inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Period {
    pub from: NaiveDate,
    pub to: NaiveDate,
}

/// One dashboard sheet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sheet {
    Overview,
    Energy,
    Vibration,
    Rul,
}

/// What to render.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSpec {
    /// Escalators to include; empty means the whole fleet.
    #[serde(default)]
    pub escalators: Vec<u32>,
    pub period: Period,
    pub sheets: Vec<Sheet>,
}

impl ReportSpec {
    pub fn validate(&self) -> Result<()> {
        if self.period.from > self.period.to {
            return Err(PhmError::InvalidConfig("report period is empty".into()));
        }
        if self.sheets.is_empty() {
            return Err(PhmError::InvalidConfig(
                "report needs at least one sheet".into(),
            ));
        }
        Ok(())
    }
}

/// A rendered report plus any soft warnings (missing data panels).
#[derive(Debug, Clone)]
pub struct RenderedReport {
    pub html: String,
    pub warnings: Vec<String>,
}

/// Render the report described by `spec` from store contents.
///
/// Missing derived data never fails the render: the affected panel says
/// "no data" and a warning is recorded.
pub fn render_report(spec: &ReportSpec, store: &Store) -> Result<RenderedReport> {
    spec.validate()?;
    let mut warnings = Vec::new();

    let fleet: Vec<EscalatorMeta> = match store.fleet() {
        Ok(fleet) => fleet,
        Err(e) => {
            warnings.push(e.to_string());
            Vec::new()
        }
    };
    let selected: Vec<EscalatorMeta> = if spec.escalators.is_empty() {
        fleet.clone()
    } else {
        fleet
            .iter()
            .filter(|m| spec.escalators.contains(&m.id))
            .cloned()
            .collect()
    };

    let mut body = String::new();
    let mut seen = Vec::new();
    for sheet in &spec.sheets {
        if seen.contains(sheet) {
            continue;
        }
        seen.push(*sheet);
        let section = match sheet {
            Sheet::Overview => render_overview(store, &selected, spec, &mut warnings)?,
            Sheet::Energy => render_energy(store, &selected, spec, &mut warnings)?,
            Sheet::Vibration => render_vibration(store, &selected, spec, &mut warnings)?,
            Sheet::Rul => render_rul(store, &selected, spec, &mut warnings)?,
        };
        body.push_str(&section);
    }

    let html = format!(
        "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n\
         <title>Escalator condition report {from} to {to}</title>\n<style>{css}</style>\n\
         </head>\n<body>\n<h1>Escalator condition report</h1>\n\
         <p class=\"period\">Period {from} to {to}</p>\n{body}</body>\n</html>\n",
        from = spec.period.from,
        to = spec.period.to,
        css = CSS,
        body = body,
    );
    Ok(RenderedReport { html, warnings })
}

const CSS: &str = "body{font-family:sans-serif;margin:24px;color:#222}\
h1{font-size:22px}h2{font-size:18px;border-bottom:1px solid #ccc;padding-bottom:4px}\
h3{font-size:15px}table{border-collapse:collapse;margin:8px 0}\
td,th{border:1px solid #bbb;padding:3px 8px;font-size:13px;text-align:right}\
th{background:#eee}td.l,th.l{text-align:left}.nodata{color:#999;font-style:italic;\
border:1px dashed #bbb;padding:12px;margin:8px 0}.period{color:#555}\
svg{margin:6px 0;background:#fff}";

fn no_data(warnings: &mut Vec<String>, what: &str) -> String {
    warnings.push(format!("no data: {what}"));
    format!("<div class=\"nodata\">no data: {}</div>\n", escape(what))
}

fn in_period(date: NaiveDate, spec: &ReportSpec) -> bool {
    date >= spec.period.from && date <= spec.period.to
}

fn at_records_in_period(store: &Store, escalator: u32, spec: &ReportSpec) -> Result<Vec<AtRecord>> {
    let offset = store.utc_offset_hours();
    Ok(store
        .read_at_records(escalator)?
        .into_iter()
        .filter(|r| {
            let (date, _) = crate::energy::service_slot(r.timestamp_utc, offset);
            in_period(date, spec)
        })
        .collect())
}

// -- sheets -------------------------------------------------------------------

fn render_overview(
    store: &Store,
    selected: &[EscalatorMeta],
    spec: &ReportSpec,
    warnings: &mut Vec<String>,
) -> Result<String> {
    let mut s = String::from("<h2>Overview</h2>\n");
    if selected.is_empty() {
        s.push_str(&no_data(warnings, "fleet metadata"));
        return Ok(s);
    }
    s.push_str(
        "<table><tr><th class=\"l\">Escalator</th><th>Rise (m)</th><th class=\"l\">Direction</th>\
         <th>Age (y)</th><th>Alerts</th><th>Alarms</th></tr>\n",
    );
    for meta in selected {
        let records = at_records_in_period(store, meta.id, spec)?;
        let alerts = records
            .iter()
            .filter(|r| r.status == AtStatus::Alert)
            .count();
        let alarms = records
            .iter()
            .filter(|r| r.status == AtStatus::Alarm)
            .count();
        writeln!(
            s,
            "<tr><td class=\"l\">{}</td><td>{}</td><td class=\"l\">{}</td><td>{}</td>\
             <td>{alerts}</td><td>{alarms}</td></tr>",
            meta.id, meta.rise_m, meta.direction, meta.age_years
        )
        .unwrap();
    }
    s.push_str("</table>\n");
    Ok(s)
}

fn render_energy(
    store: &Store,
    selected: &[EscalatorMeta],
    spec: &ReportSpec,
    warnings: &mut Vec<String>,
) -> Result<String> {
    let mut s = String::from("<h2>Energy</h2>\n");
    let mut per_metric: [Vec<Series>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for meta in selected {
        let rows: Vec<_> = store
            .read_daily_features(meta.id)?
            .into_iter()
            .filter(|d| in_period(d.service_date, spec))
            .collect();
        if rows.is_empty() {
            continue;
        }
        let day_x = |d: NaiveDate| (d - spec.period.from).num_days() as f64;
        let label = format!("esc {}", meta.id);
        per_metric[0].push(Series::line(
            &label,
            rows.iter()
                .map(|d| (day_x(d.service_date), d.working_min as f64))
                .collect(),
        ));
        per_metric[1].push(Series::line(
            &label,
            rows.iter()
                .map(|d| (day_x(d.service_date), d.passengers))
                .collect(),
        ));
        per_metric[2].push(Series::line(
            &label,
            rows.iter()
                .map(|d| (day_x(d.service_date), d.fixed_loss_wh_min))
                .collect(),
        ));
    }
    let titles = [
        ("Daily working time", "min/day"),
        ("Daily passenger load", "passengers/day"),
        ("Daily fixed loss", "Wh/min"),
    ];
    for (i, (title, y_label)) in titles.iter().enumerate() {
        if per_metric[i].is_empty() {
            s.push_str(&no_data(warnings, &format!("energy features ({title})")));
        } else {
            s.push_str(
                &Chart::new(title, "day of period", y_label)
                    .series(std::mem::take(&mut per_metric[i]))
                    .render(),
            );
        }
    }
    Ok(s)
}

fn render_vibration(
    store: &Store,
    selected: &[EscalatorMeta],
    spec: &ReportSpec,
    warnings: &mut Vec<String>,
) -> Result<String> {
    let mut s = String::from("<h2>Vibration</h2>\n");
    let sensors = default_sensors();
    let thresholds = ThresholdTable::preset();
    let mut rendered_any = false;
    for meta in selected {
        let records = at_records_in_period(store, meta.id, spec)?;
        if records.is_empty() {
            continue;
        }
        rendered_any = true;
        let alerts = records
            .iter()
            .filter(|r| r.status == AtStatus::Alert)
            .count();
        let alarms = records
            .iter()
            .filter(|r| r.status == AtStatus::Alarm)
            .count();
        writeln!(
            s,
            "<h3>Escalator {} (alerts: {alerts}, alarms: {alarms})</h3>",
            meta.id
        )
        .unwrap();

        let day_x = |r: &AtRecord| {
            let local = r.timestamp_utc + chrono::Duration::hours(store.utc_offset_hours() as i64);
            (local.date_naive() - spec.period.from).num_days() as f64
                + (local.time() - chrono::NaiveTime::MIN).num_seconds() as f64 / 86_400.0
        };

        // one chart per threshold group, mirroring the preset limits
        for (group, locs, alert, alarm) in [
            (
                "gearbox and motor bearings",
                [
                    SensorLocation::GearboxDe,
                    SensorLocation::GearboxNde,
                    SensorLocation::MotorDe,
                    SensorLocation::MotorNde,
                ],
                thresholds.get(SensorLocation::GearboxDe).alert_g,
                thresholds.get(SensorLocation::GearboxDe).alarm_g,
            ),
            (
                "main drive and tension carriage bearings",
                [
                    SensorLocation::MainDriveDe,
                    SensorLocation::MainDriveNde,
                    SensorLocation::TensionCarriageLeftDe,
                    SensorLocation::TensionCarriageRightNde,
                ],
                thresholds.get(SensorLocation::MainDriveDe).alert_g,
                thresholds.get(SensorLocation::MainDriveDe).alarm_g,
            ),
        ] {
            let mut series = Vec::new();
            for sensor in sensors.iter().filter(|p| locs.contains(&p.location)) {
                let points: Vec<(f64, f64)> = records
                    .iter()
                    .filter(|r| r.point_id == sensor.point_id)
                    .map(|r| (day_x(r), r.at_g))
                    .collect();
                if !points.is_empty() {
                    series.push(Series::line(sensor.location.label(), points));
                }
            }
            if !series.is_empty() {
                s.push_str(
                    &Chart::new(&format!("A_t, {group}"), "day of period", "A_t (g)")
                        .series(series)
                        .hline(alert, "alert", "#e6a700")
                        .hline(alarm, "alarm", "#d02020")
                        .render(),
                );
            }
        }

        // exceedance curves per sensor over the period
        let mut curves = Vec::new();
        for sensor in &sensors {
            let values: Vec<f64> = records
                .iter()
                .filter(|r| r.point_id == sensor.point_id)
                .map(|r| r.at_g)
                .collect();
            if !values.is_empty() {
                curves.push(Series::step(
                    sensor.location.label(),
                    exceedance_curve(&values)?,
                ));
            }
        }
        if !curves.is_empty() {
            s.push_str(
                &Chart::new("A_t exceedance curves", "threshold τ (g)", "P(A_t > τ)")
                    .series(curves)
                    .render(),
            );
        }
    }
    if !rendered_any {
        s.push_str(&no_data(warnings, "A_t records in the period"));
    }
    Ok(s)
}

fn render_rul(
    store: &Store,
    selected: &[EscalatorMeta],
    spec: &ReportSpec,
    warnings: &mut Vec<String>,
) -> Result<String> {
    let mut s = String::from("<h2>RUL</h2>\n");
    let model = if store.has_model("reference") {
        store.read_model("reference")?
    } else {
        LhiModel::reference_default()
    };

    // latest stored quarter ending inside the period, else the latest
    // intersecting one
    let quarters = store.list_quarters()?;
    let quarter: Option<Quarter> = quarters
        .iter()
        .rev()
        .find(|q| in_period(q.last_date(), spec))
        .or_else(|| {
            quarters
                .iter()
                .rev()
                .find(|q| q.first_date() <= spec.period.to && q.last_date() >= spec.period.from)
        })
        .copied();

    let Some(quarter) = quarter else {
        s.push_str(&no_data(warnings, "quarterly features in the period"));
        return Ok(s);
    };
    let rul_rows: BTreeMap<u32, RulRecord> = compute_rul(store, &model, quarter)?
        .into_iter()
        .map(|r| (r.escalator_id, r))
        .collect();

    writeln!(
        s,
        "<p>Quarter {quarter}, model a = {a}, b = {b}, end of life at {tend} years \
         (y_end = {yend:.4}).</p>",
        a = model.a,
        b = model.b,
        tend = model.t_end_years,
        yend = model.y_end,
    )
    .unwrap();

    // table mirrors the RUL CSV exactly
    s.push_str(
        "<table><tr><th>Escalator</th><th>Year</th><th>Quarter</th><th>Actual age</th>\
         <th>Years till 35</th><th>RUL</th><th>LHI</th><th>Working</th><th>Passengers</th>\
         <th>A_t areas</th><th>Fixed loss</th><th>Faults</th></tr>\n",
    );
    let mut any = false;
    for meta in selected {
        if let Some(r) = rul_rows.get(&meta.id) {
            any = true;
            let f = rul_record_fields(r);
            writeln!(s, "<tr><td>{}</td></tr>", f.join("</td><td>")).unwrap();
        }
    }
    s.push_str("</table>\n");
    if !any {
        s.push_str(&no_data(warnings, "RUL rows for the selected escalators"));
        return Ok(s);
    }

    // reference + shifted curve per escalator
    let sample_ages: Vec<f64> = (0..=(model.t_end_years * 2.0) as usize)
        .map(|i| i as f64 * 0.5)
        .collect();
    for meta in selected {
        let Some(r) = rul_rows.get(&meta.id) else {
            continue;
        };
        let reference: Vec<(f64, f64)> = sample_ages
            .iter()
            .map(|&t| (t, model.value_at(t)))
            .filter(|(_, v)| *v <= model.y_end)
            .collect();
        let shifted = crate::rul::shifted_curve(r.lhi, r.actual_age, &model, &sample_ages)?;
        let fields = rul_record_fields(r);
        let annotation = format!("RUL {} y at age {}", fields[5], fields[3]);
        s.push_str(
            &Chart::new(
                &format!("Escalator {} life curve", meta.id),
                "age (years)",
                "LHI",
            )
            .series(vec![
                Series::line("reference F(t)", reference),
                Series::line("shifted curve", shifted),
            ])
            .hline(model.y_end, "y_end", "#d02020")
            .marker(r.actual_age, r.lhi, &annotation)
            .render(),
        );
    }
    Ok(s)
}

// -- inline SVG charts ---------------------------------------------------------

const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

struct Series {
    label: String,
    points: Vec<(f64, f64)>,
    step: bool,
}

impl Series {
    fn line(label: &str, points: Vec<(f64, f64)>) -> Series {
        Series {
            label: label.to_string(),
            points,
            step: false,
        }
    }

    fn step(label: &str, points: Vec<(f64, f64)>) -> Series {
        Series {
            label: label.to_string(),
            points,
            step: true,
        }
    }
}

struct Chart {
    title: String,
    x_label: String,
    y_label: String,
    series: Vec<Series>,
    hlines: Vec<(f64, String, String)>,
    marker: Option<(f64, f64, String)>,
}

impl Chart {
    fn new(title: &str, x_label: &str, y_label: &str) -> Chart {
        Chart {
            title: title.to_string(),
            x_label: x_label.to_string(),
            y_label: y_label.to_string(),
            series: Vec::new(),
            hlines: Vec::new(),
            marker: None,
        }
    }

    fn series(mut self, series: Vec<Series>) -> Chart {
        self.series = series;
        self
    }

    fn hline(mut self, y: f64, label: &str, color: &str) -> Chart {
        self.hlines.push((y, label.to_string(), color.to_string()));
        self
    }

    fn marker(mut self, x: f64, y: f64, label: &str) -> Chart {
        self.marker = Some((x, y, label.to_string()));
        self
    }

    fn render(&self) -> String {
        const W: f64 = 680.0;
        const H: f64 = 300.0;
        const ML: f64 = 62.0; // margins
        const MR: f64 = 170.0;
        const MT: f64 = 28.0;
        const MB: f64 = 44.0;
        let pw = W - ML - MR;
        let ph = H - MT - MB;

        let xs = self
            .series
            .iter()
            .flat_map(|s| s.points.iter().map(|p| p.0));
        let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
        for x in xs {
            x_min = x_min.min(x);
            x_max = x_max.max(x);
        }
        if let Some((mx, _, _)) = self.marker {
            x_min = x_min.min(mx);
            x_max = x_max.max(mx);
        }
        if !x_min.is_finite() {
            x_min = 0.0;
            x_max = 1.0;
        } else if x_max <= x_min {
            x_max = x_min + 1.0;
        }
        // y axis always anchors at zero (all plotted quantities are ≥ 0);
        // threshold lines are always inside the range regardless of data
        let mut y_max = self
            .series
            .iter()
            .flat_map(|s| s.points.iter().map(|p| p.1))
            .fold(0.0_f64, f64::max);
        for (y, _, _) in &self.hlines {
            y_max = y_max.max(*y);
        }
        if let Some((_, my, _)) = self.marker {
            y_max = y_max.max(my);
        }
        if y_max <= 0.0 {
            y_max = 1.0;
        }
        y_max *= 1.05;

        let px = |x: f64| ML + (x - x_min) / (x_max - x_min) * pw;
        let py = |y: f64| MT + ph - y / y_max * ph;

        let mut s = String::new();
        writeln!(
            s,
            "<svg width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\" \
             xmlns=\"http://www.w3.org/2000/svg\" role=\"img\">"
        )
        .unwrap();
        writeln!(
            s,
            "<text x=\"{ML}\" y=\"18\" font-size=\"14\" font-weight=\"bold\">{}</text>",
            escape(&self.title)
        )
        .unwrap();
        // frame
        writeln!(
            s,
            "<rect x=\"{ML}\" y=\"{MT}\" width=\"{pw:.2}\" height=\"{ph:.2}\" fill=\"none\" stroke=\"#999\"/>"
        )
        .unwrap();
        // ticks
        for i in 0..=4 {
            let fy = i as f64 / 4.0;
            let y_val = y_max * fy;
            let ypix = py(y_val);
            writeln!(
                s,
                "<line x1=\"{:.2}\" y1=\"{ypix:.2}\" x2=\"{:.2}\" y2=\"{ypix:.2}\" stroke=\"#ddd\"/>\
                 <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"10\" text-anchor=\"end\">{}</text>",
                ML,
                ML + pw,
                ML - 6.0,
                ypix + 3.0,
                fmt_tick(y_val)
            )
            .unwrap();
            let x_val = x_min + (x_max - x_min) * fy;
            let xpix = px(x_val);
            writeln!(
                s,
                "<text x=\"{xpix:.2}\" y=\"{:.2}\" font-size=\"10\" text-anchor=\"middle\">{}</text>",
                MT + ph + 14.0,
                fmt_tick(x_val)
            )
            .unwrap();
        }
        // axis labels
        writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"middle\">{}</text>",
            ML + pw / 2.0,
            H - 8.0,
            escape(&self.x_label)
        )
        .unwrap();
        writeln!(
            s,
            "<text x=\"14\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"middle\" \
             transform=\"rotate(-90 14 {mid:.2})\">{}</text>",
            (MT + ph / 2.0),
            escape(&self.y_label),
            mid = MT + ph / 2.0,
        )
        .unwrap();
        // threshold lines
        for (y, label, color) in &self.hlines {
            let ypix = py(*y);
            writeln!(
                s,
                "<line x1=\"{ML}\" y1=\"{ypix:.2}\" x2=\"{:.2}\" y2=\"{ypix:.2}\" stroke=\"{color}\" \
                 stroke-dasharray=\"6 3\"/>\
                 <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"10\" fill=\"{color}\">{} = {}</text>",
                ML + pw,
                ML + pw + 4.0,
                ypix + 3.0,
                escape(label),
                fmt_tick(*y)
            )
            .unwrap();
        }
        // series
        for (i, series) in self.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let mut path = String::new();
            let mut prev: Option<(f64, f64)> = None;
            for &(x, y) in &series.points {
                if let Some((_, py_prev)) = prev {
                    if series.step {
                        write!(path, " {:.2},{:.2}", px(x), py_prev).unwrap();
                    }
                }
                write!(path, " {:.2},{:.2}", px(x), py(y)).unwrap();
                prev = Some((px(x), py(y)));
            }
            writeln!(
                s,
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.3\"/>",
                path.trim_start()
            )
            .unwrap();
            // point dots for sparse series
            if series.points.len() <= 120 && !series.step {
                for &(x, y) in &series.points {
                    writeln!(
                        s,
                        "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"1.6\" fill=\"{color}\"/>",
                        px(x),
                        py(y)
                    )
                    .unwrap();
                }
            }
            // legend
            let ly = MT + 10.0 + i as f64 * 14.0;
            writeln!(
                s,
                "<line x1=\"{:.2}\" y1=\"{ly:.2}\" x2=\"{:.2}\" y2=\"{ly:.2}\" stroke=\"{color}\" stroke-width=\"2\"/>\
                 <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"10\">{}</text>",
                ML + pw + 4.0,
                ML + pw + 18.0,
                ML + pw + 22.0,
                ly + 3.0,
                escape(&series.label)
            )
            .unwrap();
        }
        // marker with annotation
        if let Some((x, y, label)) = &self.marker {
            writeln!(
                s,
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"4\" fill=\"#2ca02c\"/>\
                 <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" fill=\"#2ca02c\">{}</text>",
                px(*x),
                py(*y),
                px(*x) + 8.0,
                py(*y) - 6.0,
                escape(label)
            )
            .unwrap();
        }
        s.push_str("</svg>\n");
        s
    }
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else if v.abs() >= 1000.0 {
        format!("{v:.0}")
    } else if v.abs() >= 10.0 {
        format!("{v:.1}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::default_fleet;
    use crate::pipeline::{compute_quarter_features, PipelineConfig};
    use crate::store::Store;
    use crate::synth::{date_range, generate_day_spectra, generate_energy_day, SimConfig};
    use tempfile::TempDir;

    fn spec_all(from: (i32, u32, u32), to: (i32, u32, u32)) -> ReportSpec {
        ReportSpec {
            escalators: vec![],
            period: Period {
                from: NaiveDate::from_ymd_opt(from.0, from.1, from.2).unwrap(),
                to: NaiveDate::from_ymd_opt(to.0, to.1, to.2).unwrap(),
            },
            sheets: vec![Sheet::Overview, Sheet::Energy, Sheet::Vibration, Sheet::Rul],
        }
    }

    #[test]
    fn empty_store_renders_no_data_panels() {
        let dir = TempDir::new().unwrap();
        let mut store = Store::create(dir.path(), 8).unwrap();
        store.write_fleet(&default_fleet()).unwrap();
        let spec = spec_all((2021, 10, 1), (2021, 12, 31));
        let report = render_report(&spec, &store).unwrap();
        assert!(report.html.contains("no data"));
        assert!(!report.warnings.is_empty());
        assert!(report.html.starts_with("<!DOCTYPE html>"));
        // all four sheets present
        for h in [
            "<h2>Overview</h2>",
            "<h2>Energy</h2>",
            "<h2>Vibration</h2>",
            "<h2>RUL</h2>",
        ] {
            assert!(report.html.contains(h), "missing {h}");
        }
    }

    #[test]
    fn report_is_deterministic_and_self_contained() {
        let mut cfg = SimConfig::new(55);
        cfg.end_date = cfg.start_date + chrono::Duration::days(6);
        cfg.spectrum_bins = 128;
        let raw = TempDir::new().unwrap();
        std::fs::create_dir_all(raw.path().join("energy")).unwrap();
        std::fs::create_dir_all(raw.path().join("vibration")).unwrap();
        std::fs::write(
            raw.path().join("fleet.json"),
            serde_json::to_string(&cfg.fleet).unwrap(),
        )
        .unwrap();
        for esc in [0u32, 19] {
            let mut csv = String::from("escalator_id,timestamp_utc,e_imp_wh,e_exp_wh\n");
            let mut jsonl = String::new();
            for date in date_range(&cfg) {
                let (minutes, _) = generate_energy_day(&cfg, esc, date).unwrap();
                for m in minutes {
                    csv.push_str(&format!(
                        "{},{},{:.3},{:.3}\n",
                        m.escalator_id,
                        m.timestamp_utc
                            .to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
                        m.e_imp_wh,
                        m.e_exp_wh
                    ));
                }
                for s in generate_day_spectra(&cfg, esc, date).unwrap() {
                    jsonl.push_str(&serde_json::to_string(&s).unwrap());
                    jsonl.push('\n');
                }
            }
            std::fs::write(raw.path().join(format!("energy/{esc}.csv")), csv).unwrap();
            std::fs::write(raw.path().join(format!("vibration/{esc}.jsonl")), jsonl).unwrap();
        }
        let store_dir = TempDir::new().unwrap();
        let mut store = Store::create(store_dir.path(), 8).unwrap();
        store.ingest(raw.path()).unwrap();
        compute_quarter_features(
            &mut store,
            crate::domain::Quarter::new(2021, 4).unwrap(),
            &PipelineConfig::default(),
        )
        .unwrap();

        let spec = spec_all((2021, 10, 1), (2021, 12, 31));
        let a = render_report(&spec, &store).unwrap();
        let b = render_report(&spec, &store).unwrap();
        assert_eq!(a.html, b.html);
        assert!(a.warnings.is_empty(), "{:?}", a.warnings);
        // inline SVG only, no external resources
        assert!(a.html.contains("<svg"));
        for needle in ["http://", "https://", "src=", "href="] {
            let hits = a.html.matches(needle).count();
            let allowed = a
                .html
                .matches("xmlns=\"http://www.w3.org/2000/svg\"")
                .count();
            assert!(
                hits <= allowed || needle == "xmlns",
                "unexpected {needle} in report"
            );
        }
        // RUL annotation carries the same formatting as the CSV
        assert!(a.html.contains("RUL "));
    }

    #[test]
    fn alarm_points_are_counted_and_drawn_above_the_line() {
        let dir = TempDir::new().unwrap();
        let mut store = Store::create(dir.path(), 8).unwrap();
        store.write_fleet(&default_fleet()).unwrap();
        let ts = chrono::Utc::now()
            .with_time(chrono::NaiveTime::from_hms_opt(2, 0, 0).unwrap())
            .unwrap();
        // one alarm record on gearbox DE (alarm at 0.75 g)
        let record = AtRecord {
            escalator_id: 0,
            point_id: 1,
            timestamp_utc: ts,
            at_g: 0.9,
            status: AtStatus::Alarm,
        };
        store
            .write_at_records(0, std::slice::from_ref(&record))
            .unwrap();
        let (date, _) = crate::energy::service_slot(ts, 8);
        let spec = ReportSpec {
            escalators: vec![0],
            period: Period {
                from: date,
                to: date,
            },
            sheets: vec![Sheet::Vibration],
        };
        let report = render_report(&spec, &store).unwrap();
        assert!(report.html.contains("alarms: 1"), "missing alarm count");
        assert!(report.html.contains("alerts: 0"));
        assert!(report.html.contains("alarm = 0.750"));
    }

    #[test]
    fn spec_validation() {
        let bad = ReportSpec {
            escalators: vec![],
            period: Period {
                from: NaiveDate::from_ymd_opt(2022, 1, 1).unwrap(),
                to: NaiveDate::from_ymd_opt(2021, 1, 1).unwrap(),
            },
            sheets: vec![Sheet::Overview],
        };
        assert!(bad.validate().is_err());
        let empty_sheets = ReportSpec {
            escalators: vec![],
            period: Period {
                from: NaiveDate::from_ymd_opt(2021, 1, 1).unwrap(),
                to: NaiveDate::from_ymd_opt(2021, 1, 2).unwrap(),
            },
            sheets: vec![],
        };
        assert!(empty_sheets.validate().is_err());
    }

    #[test]
    fn report_spec_json_round_trip() {
        let json = r#"{
            "escalators": [0, 3],
            "period": {"from": "2021-10-01", "to": "2021-12-31"},
            "sheets": ["overview", "energy", "vibration", "rul"]
        }"#;
        let spec: ReportSpec = serde_json::from_str(json).unwrap();
        assert_eq!(spec.escalators, vec![0, 3]);
        assert_eq!(spec.sheets.len(), 4);
        assert_eq!(spec.sheets[3], Sheet::Rul);
    }
}
