//! Per-iteration trace files.
//!
//! Floats are written with 17 significant digits so that parsing a written
//! file reproduces every value bit for bit.

use std::io::{Read, Write};

use sarc_core::driver::{IterationRecord, Trace};

use crate::HarnessError;

pub const HEADER: [&str; 14] = [
    "k",
    "sigma",
    "rho",
    "success",
    "true_iter",
    "model_flag",
    "step_norm",
    "model_dec",
    "e_k",
    "e_kplus",
    "grad_norm_xplus",
    "Z_k",
    "f_x",
    "f_xplus",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub k: usize,
    pub sigma: f64,
    pub rho: Option<f64>,
    pub success: bool,
    pub true_iter: bool,
    pub model_flag: bool,
    pub step_norm: f64,
    pub model_dec: f64,
    pub e_k: f64,
    pub e_kplus: f64,
    pub grad_norm_xplus: f64,
    pub z_k: f64,
    pub f_x: f64,
    pub f_xplus: f64,
}

impl From<&IterationRecord> for TraceRow {
    fn from(r: &IterationRecord) -> Self {
        Self {
            k: r.k,
            sigma: r.sigma,
            rho: r.rho,
            success: r.successful,
            true_iter: r.true_iter,
            model_flag: r.model_flag,
            step_norm: r.step_norm(),
            model_dec: r.model_dec,
            e_k: r.e_k,
            e_kplus: r.e_kplus,
            grad_norm_xplus: r.grad_norm_xplus,
            z_k: r.z_k,
            f_x: r.f_x,
            f_xplus: r.f_xplus,
        }
    }
}

pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

pub fn write_rows<W: Write>(out: W, rows: &[TraceRow]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for r in rows {
        w.write_record([
            r.k.to_string(),
            format_float(r.sigma),
            r.rho.map(format_float).unwrap_or_default(),
            flag(r.success).into(),
            flag(r.true_iter).into(),
            flag(r.model_flag).into(),
            format_float(r.step_norm),
            format_float(r.model_dec),
            format_float(r.e_k),
            format_float(r.e_kplus),
            format_float(r.grad_norm_xplus),
            format_float(r.z_k),
            format_float(r.f_x),
            format_float(r.f_xplus),
        ])?;
    }
    w.flush().map_err(|e| HarnessError::Csv(e.to_string()))?;
    Ok(())
}

pub fn write_trace<W: Write>(out: W, trace: &Trace) -> Result<(), HarnessError> {
    let rows: Vec<TraceRow> = trace.records.iter().map(TraceRow::from).collect();
    write_rows(out, &rows)
}

pub fn read_rows<R: Read>(input: R) -> Result<Vec<TraceRow>, HarnessError> {
    let mut reader = csv::Reader::from_reader(input);
    let header = reader.headers()?.clone();
    if header.iter().ne(HEADER.iter().copied()) {
        return Err(HarnessError::Csv(format!("unexpected trace header: {header:?}")));
    }
    let bad = |field: &str, value: &str| HarnessError::Csv(format!("bad {field} value `{value}`"));
    let float = |rec: &csv::StringRecord, i: usize| -> Result<f64, HarnessError> {
        rec[i].parse::<f64>().map_err(|_| bad(HEADER[i], &rec[i]))
    };
    let boolean = |rec: &csv::StringRecord, i: usize| match &rec[i] {
        "1" => Ok(true),
        "0" => Ok(false),
        other => Err(bad(HEADER[i], other)),
    };
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        rows.push(TraceRow {
            k: rec[0].parse().map_err(|_| bad("k", &rec[0]))?,
            sigma: float(&rec, 1)?,
            rho: if rec[2].is_empty() { None } else { Some(float(&rec, 2)?) },
            success: boolean(&rec, 3)?,
            true_iter: boolean(&rec, 4)?,
            model_flag: boolean(&rec, 5)?,
            step_norm: float(&rec, 6)?,
            model_dec: float(&rec, 7)?,
            e_k: float(&rec, 8)?,
            e_kplus: float(&rec, 9)?,
            grad_norm_xplus: float(&rec, 10)?,
            z_k: float(&rec, 11)?,
            f_x: float(&rec, 12)?,
            f_xplus: float(&rec, 13)?,
        });
    }
    Ok(rows)
}
