//! Byte-stable serialization of reports: JSON for residual and suite
//! reports, CSV for flow trajectories. Floats are written with 17
//! significant digits in scientific notation.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use serde::Serialize;
use serde_json::ser::{Formatter, Serializer};
use thiserror::Error;

use crate::flow::Trajectory;
use crate::functionals::ElReport;
use crate::identities::SuiteReport;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(ReportError::UnknownFormat(other.to_string())),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Json => "json",
            Format::Csv => "csv",
        })
    }
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("unknown format `{0}` (expected json or csv)")]
    UnknownFormat(String),
    #[error("{kind} reports cannot be written as {format}")]
    Unsupported { kind: &'static str, format: Format },
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Clone, Copy, Debug)]
pub enum Report<'a> {
    Residuals(&'a ElReport),
    Suite(&'a SuiteReport),
    Trajectory(&'a Trajectory),
}

impl Report<'_> {
    fn kind(&self) -> &'static str {
        match self {
            Report::Residuals(_) => "residual",
            Report::Suite(_) => "suite",
            Report::Trajectory(_) => "trajectory",
        }
    }
}

/// Compact JSON with every float as `{:.16e}`.
#[derive(Clone, Copy, Debug, Default)]
pub struct FixedPrecision;

impl Formatter for FixedPrecision {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{}", format_f64(value))
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

/// `{:.16e}` for finite values; `NaN`, `inf` and `-inf` otherwise.
pub fn format_f64(value: f64) -> String {
    if value.is_finite() {
        format!("{value:.16e}")
    } else {
        format!("{value}")
    }
}

/// Serializes any value with [`FixedPrecision`]. Non-finite floats become
/// `null`.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>, ReportError> {
    let mut out = Vec::new();
    let mut ser = Serializer::with_formatter(&mut out, FixedPrecision);
    value.serialize(&mut ser)?;
    Ok(out)
}

pub const TRAJECTORY_HEADER: [&str; 5] = ["step", "energy", "grad_norm", "max_abs_ric", "max_neg_R"];

pub fn trajectory_csv<W: Write>(traj: &Trajectory, writer: W) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(TRAJECTORY_HEADER)?;
    for r in &traj.rows {
        w.write_record([
            r.step.to_string(),
            format_f64(r.energy),
            format_f64(r.grad_norm),
            format_f64(r.max_abs_ric),
            format_f64(r.max_neg_r),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `report` in `format`. Trajectories are CSV only; the other
/// reports are JSON only.
pub fn write_report<W: Write>(report: Report<'_>, format: Format, mut writer: W) -> Result<(), ReportError> {
    match (report, format) {
        (Report::Residuals(r), Format::Json) => writer.write_all(&to_json(r)?)?,
        (Report::Suite(r), Format::Json) => writer.write_all(&to_json(r)?)?,
        (Report::Trajectory(t), Format::Csv) => trajectory_csv(t, &mut writer)?,
        (r, format) => return Err(ReportError::Unsupported { kind: r.kind(), format }),
    }
    Ok(())
}
