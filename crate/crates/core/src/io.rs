//! File formats: CSV measurement series, TOML vehicle/model records, curve
//! and fit-report documents, and content digests.
//!
//! Measurement CSVs are headered, comma-separated, UTF-8. Two layouts are
//! accepted, recognized by their header:
//!
//! ```text
//! gap_m,ratio[,source]                     drag-ratio series
//! gap_m,fuel_ratio,speed_kmh[,source]      fuel-ratio series
//! ```
//!
//! Extra columns are ignored. Parse errors carry 1-based line numbers that
//! count the header line.
//!
//! Vehicle specs and drag models are TOML: either a single top-level record
//! or an array of records under `[[vehicle]]` / `[[model]]`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fit::{BoundSide, FitResult};
use crate::types::{DragModel, MeasurementKind, MeasurementSeries, VehicleSpec};

/// Hex-encoded SHA-256 of arbitrary bytes, used to fingerprint inputs.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for byte in digest {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

fn column(headers: &csv::StringRecord, name: &str) -> Option<usize> {
    headers.iter().position(|h| h.trim() == name)
}

fn parse_field(record: &csv::StringRecord, idx: usize, name: &str, line: u64) -> Result<f64> {
    let raw = record
        .get(idx)
        .ok_or_else(|| Error::parse(line, format!("missing {name} column")))?
        .trim();
    raw.parse::<f64>()
        .map_err(|_| Error::parse(line, format!("{name} is not a number: {raw:?}")))
}

/// Reads a measurement series from CSV text. The header decides the kind.
pub fn read_series_csv(text: &str) -> Result<MeasurementSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::parse(1, e.to_string()))?
        .clone();

    let gap_idx =
        column(&headers, "gap_m").ok_or_else(|| Error::parse(1, "missing gap_m column"))?;
    let source_idx = column(&headers, "source");
    let (kind, value_idx, speed_idx) = if let Some(i) = column(&headers, "ratio") {
        (MeasurementKind::DragRatio, i, column(&headers, "speed_kmh"))
    } else if let Some(i) = column(&headers, "fuel_ratio") {
        let s = column(&headers, "speed_kmh")
            .ok_or_else(|| Error::parse(1, "fuel-ratio data needs a speed_kmh column"))?;
        (MeasurementKind::FuelRatio, i, Some(s))
    } else {
        return Err(Error::parse(1, "expected a ratio or fuel_ratio column"));
    };

    let mut points = Vec::new();
    let mut speed: Option<f64> = None;
    let mut source: Option<String> = None;
    for (i, record) in reader.records().enumerate() {
        let line = i as u64 + 2;
        let record = record.map_err(|e| Error::parse(line, e.to_string()))?;
        let gap = parse_field(&record, gap_idx, "gap_m", line)?;
        let value = parse_field(&record, value_idx, "value", line)?;
        if let Some(si) = speed_idx {
            if record.get(si).is_some_and(|s| !s.is_empty()) {
                let v = parse_field(&record, si, "speed_kmh", line)?;
                match speed {
                    None => speed = Some(v),
                    Some(prev) if (prev - v).abs() > 1e-9 => {
                        return Err(Error::parse(
                            line,
                            format!("speed changed from {prev} to {v}; a series has one test speed"),
                        ))
                    }
                    Some(_) => {}
                }
            }
        }
        if source.is_none() {
            if let Some(si) = source_idx {
                source = record.get(si).map(|s| s.to_string());
            }
        }
        points.push((gap, value));
    }
    if points.is_empty() {
        return Err(Error::parse(1, "no data rows"));
    }

    MeasurementSeries::new(kind, points, source.unwrap_or_default(), speed)
}

/// Writes a measurement series in the layout [`read_series_csv`] accepts.
/// The speed column appears whenever the series records a speed, so
/// converted drag-ratio series keep their test speed.
pub fn write_series_csv(series: &MeasurementSeries) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let with_source = !series.source.is_empty();
    let with_speed = series.speed_kmh.is_some();
    let mut header: Vec<&str> = vec![
        "gap_m",
        match series.kind {
            MeasurementKind::DragRatio => "ratio",
            MeasurementKind::FuelRatio => "fuel_ratio",
        },
    ];
    if with_speed {
        header.push("speed_kmh");
    }
    if with_source {
        header.push("source");
    }
    writer.write_record(&header).expect("in-memory write");
    for &(g, v) in &series.points {
        let mut record = vec![g.to_string(), v.to_string()];
        if let Some(speed) = series.speed_kmh {
            record.push(speed.to_string());
        }
        if with_source {
            record.push(series.source.clone());
        }
        writer.write_record(&record).expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf8")
}

#[derive(Debug, Deserialize)]
struct VehicleFile {
    #[serde(default)]
    vehicle: Vec<VehicleSpec>,
}

/// Parses one or more vehicle specs from TOML: a bare record or `[[vehicle]]`.
pub fn read_vehicle_specs(text: &str) -> Result<Vec<VehicleSpec>> {
    if let Ok(file) = toml::from_str::<VehicleFile>(text) {
        if !file.vehicle.is_empty() {
            return Ok(file.vehicle);
        }
    }
    toml::from_str::<VehicleSpec>(text)
        .map(|v| vec![v])
        .map_err(|e| Error::parse(toml_error_line(&e), e.to_string()))
}

pub fn write_vehicle_spec(spec: &VehicleSpec) -> String {
    toml::to_string(spec).expect("vehicle specs serialize")
}

#[derive(Debug, Deserialize)]
struct ModelFile {
    #[serde(default)]
    model: Vec<DragModel>,
}

/// Parses one or more drag models from TOML: a bare record or `[[model]]`.
pub fn read_drag_models(text: &str) -> Result<Vec<DragModel>> {
    if let Ok(file) = toml::from_str::<ModelFile>(text) {
        if !file.model.is_empty() {
            return Ok(file.model);
        }
    }
    toml::from_str::<DragModel>(text)
        .map(|m| vec![m])
        .map_err(|e| Error::parse(toml_error_line(&e), e.to_string()))
}

pub fn write_drag_model(model: &DragModel) -> String {
    toml::to_string(model).expect("drag models serialize")
}

fn toml_error_line(err: &toml::de::Error) -> u64 {
    err.span()
        .map(|s| s.start as u64) // byte offset; better than nothing
        .unwrap_or(0)
}

/// Structured fit report written next to fitted models.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitReport {
    pub model: DragModel,
    pub residual_sum_squares: f64,
    pub iterations: usize,
    pub converged: bool,
    pub active_bounds: BTreeSet<BoundSide>,
    /// Names of model invariants the fitted parameters violate, if any.
    pub violations: Vec<String>,
    /// SHA-256 of the input data file.
    pub input_digest: String,
}

impl FitReport {
    pub fn new(result: &FitResult, input_digest: impl Into<String>) -> Self {
        FitReport {
            model: result.model.clone(),
            residual_sum_squares: result.residual_sum_squares,
            iterations: result.iterations,
            converged: result.converged,
            active_bounds: result.active_bounds.clone(),
            violations: result.violations.iter().map(|v| v.to_string()).collect(),
            input_digest: input_digest.into(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("fit reports serialize")
    }
}

/// Curve CSV: abscissa column, one column per vehicle slot, then the average.
pub fn write_curve_csv(curve: &crate::analysis::SavingsCurve) -> String {
    let mut out = String::new();
    out.push_str(&curve.abscissa.to_string());
    for slot in 1..=curve.platoon_size {
        out.push_str(&format!(",pos{slot}"));
    }
    out.push_str(",average\n");
    for sample in &curve.samples {
        out.push_str(&format!("{}", sample.x));
        for r in &sample.per_position {
            out.push_str(&format!(",{r}"));
        }
        out.push_str(&format!(",{}\n", sample.average));
    }
    out
}

/// Curve JSON document with reproduction metadata.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurveDocument {
    pub speed_kmh: f64,
    pub abscissa: String,
    pub platoon_size: u32,
    pub vehicle: String,
    pub spec_digest: String,
    pub model_digests: Vec<String>,
    pub samples: Vec<crate::analysis::CurveSample>,
}

pub fn curve_document(
    curve: &crate::analysis::SavingsCurve,
    spec: &VehicleSpec,
    models: &[DragModel],
) -> CurveDocument {
    CurveDocument {
        speed_kmh: curve.speed_kmh,
        abscissa: curve.abscissa.to_string(),
        platoon_size: curve.platoon_size,
        vehicle: curve.vehicle.clone(),
        spec_digest: sha256_hex(write_vehicle_spec(spec).as_bytes()),
        model_digests: models
            .iter()
            .map(|m| sha256_hex(write_drag_model(m).as_bytes()))
            .collect(),
        samples: curve.samples.clone(),
    }
}
