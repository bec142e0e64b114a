//! Sampled transmission/reflection spectra and their CSV form
//! (`freq_offset_hz,transmission[,reflection]`).

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CSV_HEADER_FREQ: &str = "freq_offset_hz";
pub const CSV_HEADER_TRANSMISSION: &str = "transmission";
pub const CSV_HEADER_REFLECTION: &str = "reflection";

/// Which sampled channel of a trace to work on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Transmission,
    Reflection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumTrace {
    pub freq_hz: Vec<f64>,
    pub transmission: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reflection: Option<Vec<f64>>,
    /// Set when the grid is too coarse to resolve the cavity linewidth.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution_warning: Option<String>,
}

impl SpectrumTrace {
    /// Validates grid monotonicity, equal lengths and finiteness.
    pub fn new(freq_hz: Vec<f64>, transmission: Vec<f64>, reflection: Option<Vec<f64>>) -> Result<Self> {
        if freq_hz.len() != transmission.len() {
            return Err(Error::domain(format!(
                "frequency grid has {} samples but transmission has {}",
                freq_hz.len(),
                transmission.len()
            )));
        }
        if let Some(r) = &reflection {
            if r.len() != freq_hz.len() {
                return Err(Error::domain(format!(
                    "frequency grid has {} samples but reflection has {}",
                    freq_hz.len(),
                    r.len()
                )));
            }
        }
        for (i, w) in freq_hz.windows(2).enumerate() {
            if !(w[1] > w[0]) {
                return Err(Error::domain(format!(
                    "frequency grid not strictly increasing at sample {}",
                    i + 2
                )));
            }
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if !finite(&freq_hz) || !finite(&transmission) || !reflection.as_deref().is_none_or(finite) {
            return Err(Error::domain("spectrum contains non-finite samples"));
        }
        Ok(Self {
            freq_hz,
            transmission,
            reflection,
            resolution_warning: None,
        })
    }

    pub fn len(&self) -> usize {
        self.freq_hz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freq_hz.is_empty()
    }

    pub fn channel(&self, channel: Channel) -> Option<&[f64]> {
        match channel {
            Channel::Transmission => Some(&self.transmission),
            Channel::Reflection => self.reflection.as_deref(),
        }
    }

    /// Checks that every sample lies in `[-margin, 1 + margin]`.
    pub fn check_unit_range(&self, margin: f64) -> Result<()> {
        let check = |name: &str, v: &[f64]| -> Result<()> {
            for (i, &x) in v.iter().enumerate() {
                if x < -margin || x > 1.0 + margin {
                    return Err(Error::domain(format!(
                        "{name} sample {} = {x} lies outside [0, 1]; normalize the trace first",
                        i + 1
                    )));
                }
            }
            Ok(())
        };
        check(CSV_HEADER_TRANSMISSION, &self.transmission)?;
        if let Some(r) = &self.reflection {
            check(CSV_HEADER_REFLECTION, r)?;
        }
        Ok(())
    }

    /// Median grid spacing in Hz.
    pub fn median_step(&self) -> Option<f64> {
        if self.len() < 2 {
            return None;
        }
        let mut steps: Vec<f64> = self.freq_hz.windows(2).map(|w| w[1] - w[0]).collect();
        steps.sort_by(f64::total_cmp);
        Some(steps[steps.len() / 2])
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let io_err = |e: csv::Error| Error::Io {
            path: "<spectrum csv>".into(),
            source: std::io::Error::other(e),
        };
        if self.reflection.is_some() {
            w.write_record([CSV_HEADER_FREQ, CSV_HEADER_TRANSMISSION, CSV_HEADER_REFLECTION])
                .map_err(io_err)?;
        } else {
            w.write_record([CSV_HEADER_FREQ, CSV_HEADER_TRANSMISSION]).map_err(io_err)?;
        }
        for i in 0..self.len() {
            // `{}` on f64 prints the shortest representation that round-trips.
            let mut row = vec![self.freq_hz[i].to_string(), self.transmission[i].to_string()];
            if let Some(r) = &self.reflection {
                row.push(r[i].to_string());
            }
            w.write_record(&row).map_err(io_err)?;
        }
        w.flush().map_err(|e| Error::Io {
            path: "<spectrum csv>".into(),
            source: e,
        })?;
        Ok(())
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    /// Reads the CSV contract. Rows are numbered from 1 after the header.
    pub fn read_csv<R: Read>(reader: R, source_name: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| Error::parse(source_name, 0, format!("unreadable header: {e}")))?
            .clone();
        let names: Vec<&str> = headers.iter().collect();
        let has_reflection = match names.as_slice() {
            [CSV_HEADER_FREQ, CSV_HEADER_TRANSMISSION] => false,
            [CSV_HEADER_FREQ, CSV_HEADER_TRANSMISSION, CSV_HEADER_REFLECTION] => true,
            _ => {
                return Err(Error::parse(
                    source_name,
                    0,
                    format!(
                        "expected header `{CSV_HEADER_FREQ},{CSV_HEADER_TRANSMISSION}[,{CSV_HEADER_REFLECTION}]`, found `{}`",
                        names.join(",")
                    ),
                ))
            }
        };

        let mut freq = Vec::new();
        let mut trans = Vec::new();
        let mut refl = Vec::new();
        for (i, record) in rdr.records().enumerate() {
            let row = i + 1;
            let record = record.map_err(|e| Error::parse(source_name, row, e.to_string()))?;
            let expected = if has_reflection { 3 } else { 2 };
            if record.len() != expected {
                return Err(Error::parse(
                    source_name,
                    row,
                    format!("expected {expected} columns, found {}", record.len()),
                ));
            }
            let field = |k: usize, name: &str| -> Result<f64> {
                let text = &record[k];
                let v: f64 = text
                    .parse()
                    .map_err(|_| Error::parse(source_name, row, format!("{name} `{text}` is not a number")))?;
                if !v.is_finite() {
                    return Err(Error::parse(source_name, row, format!("{name} is not finite")));
                }
                Ok(v)
            };
            let f = field(0, CSV_HEADER_FREQ)?;
            if let Some(&prev) = freq.last() {
                if f == prev {
                    return Err(Error::parse(
                        source_name,
                        row,
                        format!("duplicated frequency {f} Hz"),
                    ));
                }
                if f < prev {
                    return Err(Error::parse(
                        source_name,
                        row,
                        format!("frequency {f} Hz is below the previous row ({prev} Hz)"),
                    ));
                }
            }
            freq.push(f);
            trans.push(field(1, CSV_HEADER_TRANSMISSION)?);
            if has_reflection {
                refl.push(field(2, CSV_HEADER_REFLECTION)?);
            }
        }
        Self::new(freq, trans, has_reflection.then_some(refl))
    }

    pub fn read_csv_file(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::read_csv(std::io::BufReader::new(file), &path.display().to_string())
    }
}
