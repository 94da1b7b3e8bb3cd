use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::TickObservation;
use crate::error::{Error, Result};
use crate::model::QosObservation;

const BASE_HEADER: [&str; 2] = ["time_s", "bandwidth_mbps"];
const APP_HEADER: [&str; 3] = ["offered_mmtc", "offered_embb", "offered_urllc"];

/// Bandwidth samples with strictly increasing timestamps, optionally carrying
/// the per-application offered load of each tick.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TimeSeries {
    pub observations: Vec<QosObservation>,
    pub per_app_offered: Option<Vec<[f64; 3]>>,
}

impl TimeSeries {
    pub fn new(observations: Vec<QosObservation>) -> Result<Self> {
        let s = Self {
            observations,
            per_app_offered: None,
        };
        s.check_order()?;
        Ok(s)
    }

    pub fn from_ticks(ticks: &[TickObservation]) -> Self {
        Self {
            observations: ticks
                .iter()
                .map(|t| QosObservation {
                    timestamp: t.timestamp,
                    bandwidth: t.observed_bw,
                })
                .collect(),
            per_app_offered: Some(ticks.iter().map(|t| t.offered).collect()),
        }
    }

    fn check_order(&self) -> Result<()> {
        for pair in self.observations.windows(2) {
            if pair[1].timestamp <= pair[0].timestamp {
                return Err(Error::Format(format!(
                    "timestamps not strictly increasing at {}",
                    pair[1].timestamp
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn bandwidth(&self) -> Vec<f64> {
        self.observations.iter().map(|o| o.bandwidth).collect()
    }

    pub fn timestamps(&self) -> Vec<f64> {
        self.observations.iter().map(|o| o.timestamp).collect()
    }

    /// Samples `[start, end)`.
    pub fn slice(&self, start: usize, end: usize) -> Self {
        Self {
            observations: self.observations[start..end].to_vec(),
            per_app_offered: self.per_app_offered.as_ref().map(|p| p[start..end].to_vec()),
        }
    }

    /// Writes CSV (`time_s,bandwidth_mbps` plus per-app columns when
    /// `per_app` is set and available).
    pub fn write_csv<W: Write>(&self, out: W, per_app: bool) -> Result<()> {
        let per_app = per_app.then_some(self.per_app_offered.as_ref()).flatten();
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        let mut header: Vec<&str> = BASE_HEADER.to_vec();
        if per_app.is_some() {
            header.extend(APP_HEADER);
        }
        w.write_record(&header).map_err(csv_err)?;
        for (i, o) in self.observations.iter().enumerate() {
            let mut row = vec![o.timestamp.to_string(), o.bandwidth.to_string()];
            if let Some(p) = per_app {
                row.extend(p[i].iter().map(|v| v.to_string()));
            }
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::Format(e.to_string()))?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path, per_app: bool) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file), per_app)
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let headers = r.headers().map_err(csv_err)?.clone();
        let col = |name: &str| headers.iter().position(|h| h == name);
        let (Some(t_col), Some(bw_col)) = (col(BASE_HEADER[0]), col(BASE_HEADER[1])) else {
            return Err(Error::Format(format!(
                "expected columns {BASE_HEADER:?}, found {:?}",
                headers.iter().collect::<Vec<_>>()
            )));
        };
        let app_cols: Option<Vec<usize>> = APP_HEADER.iter().map(|h| col(h)).collect();
        let mut observations = Vec::new();
        let mut per_app = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec.map_err(csv_err)?;
            let field = |i: usize| -> Result<f64> {
                rec.get(i)
                    .ok_or_else(|| Error::Format(format!("row {}: missing column {i}", line + 2)))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Format(format!("row {}: {e}", line + 2)))
            };
            observations.push(QosObservation::new(field(t_col)?, field(bw_col)?)?);
            if let Some(cols) = &app_cols {
                per_app.push([field(cols[0])?, field(cols[1])?, field(cols[2])?]);
            }
        }
        let mut s = Self::new(observations)?;
        if app_cols.is_some() {
            s.per_app_offered = Some(per_app);
        }
        Ok(s)
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(std::io::BufReader::new(file)).map_err(|e| match e {
            Error::Format(m) => Error::Format(format!("{}: {m}", path.display())),
            other => other,
        })
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}
