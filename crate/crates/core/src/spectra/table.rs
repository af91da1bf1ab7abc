use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Power-law continuation beyond the sampled band, `S ∝ f^exponent`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Rolloff {
    pub low_exponent: Option<f64>,
    pub high_exponent: Option<f64>,
}

/// A sampled one-sided PSD interpolated linearly in log-log space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    frequency_hz: Vec<f64>,
    psd: Vec<f64>,
    #[serde(default)]
    rolloff: Rolloff,
}

impl Table {
    pub fn new(frequency_hz: Vec<f64>, psd: Vec<f64>, rolloff: Rolloff) -> Result<Self> {
        if frequency_hz.len() != psd.len() {
            return Err(Error::Dimension(format!(
                "{} frequencies vs {} PSD values",
                frequency_hz.len(),
                psd.len()
            )));
        }
        if frequency_hz.len() < 2 {
            return Err(Error::Domain("a PSD table needs at least two samples".into()));
        }
        if frequency_hz[0] <= 0.0 || frequency_hz.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain(
                "table frequencies must be positive and strictly increasing".into(),
            ));
        }
        if psd.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(Error::Domain("table PSD values must be positive and finite".into()));
        }
        Ok(Self {
            frequency_hz,
            psd,
            rolloff,
        })
    }

    pub fn with_rolloff(mut self, rolloff: Rolloff) -> Self {
        self.rolloff = rolloff;
        self
    }

    pub fn band_hz(&self) -> (f64, f64) {
        (self.frequency_hz[0], *self.frequency_hz.last().unwrap())
    }

    pub fn samples(&self) -> (&[f64], &[f64]) {
        (&self.frequency_hz, &self.psd)
    }

    /// Evaluates the table at `|f|` (Hz).
    pub fn eval(&self, f: f64) -> Result<f64> {
        let f = f.abs();
        let (lo, hi) = self.band_hz();
        if f < lo {
            let p = self
                .rolloff
                .low_exponent
                .ok_or(Error::Extrapolation { frequency_hz: f })?;
            if f == 0.0 {
                return match p {
                    p if p > 0.0 => Ok(0.0),
                    p if p == 0.0 => Ok(self.psd[0]),
                    _ => Err(Error::Domain(
                        "a negative low-frequency roll-off diverges at 0 Hz".into(),
                    )),
                };
            }
            return Ok(self.psd[0] * (f / lo).powf(p));
        }
        if f > hi {
            let p = self
                .rolloff
                .high_exponent
                .ok_or(Error::Extrapolation { frequency_hz: f })?;
            return Ok(self.psd.last().unwrap() * (f / hi).powf(p));
        }
        let k = self.frequency_hz.partition_point(|&x| x <= f).clamp(1, self.psd.len() - 1);
        let (f0, f1) = (self.frequency_hz[k - 1].ln(), self.frequency_hz[k].ln());
        let (p0, p1) = (self.psd[k - 1].ln(), self.psd[k].ln());
        let t = (f.ln() - f0) / (f1 - f0);
        Ok((p0 + t * (p1 - p0)).exp())
    }
}

/// Reads a two-column `frequency_hz,psd` table. A non-numeric first row is
/// treated as a header.
pub fn read_psd_csv(path: impl AsRef<Path>) -> Result<Table> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(file);
    let (mut f, mut s) = (Vec::new(), Vec::new());
    for (row, rec) in reader.records().enumerate() {
        let rec = rec?;
        if rec.len() < 2 {
            return Err(Error::Config(format!(
                "{}: row {} has {} columns, expected 2",
                path.display(),
                row + 1,
                rec.len()
            )));
        }
        match (rec[0].parse::<f64>(), rec[1].parse::<f64>()) {
            (Ok(a), Ok(b)) => {
                f.push(a);
                s.push(b);
            }
            _ if row == 0 => continue,
            _ => {
                return Err(Error::Config(format!(
                    "{}: row {} is not numeric",
                    path.display(),
                    row + 1
                )))
            }
        }
    }
    Table::new(f, s, Rolloff::default())
}
