use std::f64::consts::PI;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Target DIP-versus-PIP flexion samples, `pip` strictly increasing.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryTable {
    samples: Vec<(f64, f64)>,
}

/// Logistic curve `dip = a / (1 + exp(-b (pip - c))) + d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmoidParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl SigmoidParams {
    pub fn eval(&self, pip: f64) -> f64 {
        self.a / (1.0 + (-self.b * (pip - self.c)).exp()) + self.d
    }
}

#[derive(Deserialize)]
struct CsvRow {
    pip_rad: f64,
    dip_rad: f64,
}

impl TrajectoryTable {
    pub fn new(samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Empty("trajectory table"));
        }
        for (i, &(pip, dip)) in samples.iter().enumerate() {
            if !(pip.is_finite() && dip.is_finite()) {
                return Err(Error::NonFinite("trajectory table"));
            }
            if !(0.0..PI).contains(&pip) {
                return Err(Error::validation(format!("samples[{i}].pip"), format!("{pip} outside [0, pi)")));
            }
            if !(0.0..PI).contains(&dip) {
                return Err(Error::validation(format!("samples[{i}].dip"), format!("{dip} outside [0, pi)")));
            }
            if i > 0 && pip <= samples[i - 1].0 {
                return Err(Error::validation(format!("samples[{i}].pip"), "pip values must be strictly increasing"));
            }
        }
        Ok(Self { samples })
    }

    /// Samples the logistic curve at the given PIP flexions.
    pub fn from_sigmoid(params: SigmoidParams, pip: impl IntoIterator<Item = f64>) -> Result<Self> {
        Self::new(pip.into_iter().map(|p| (p, params.eval(p))).collect())
    }

    /// Reads the two-column `pip_rad,dip_rad` CSV format (header required).
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "pip_rad" || &headers[1] != "dip_rad" {
            return Err(Error::Parse(format!(
                "expected header `pip_rad,dip_rad`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut samples = Vec::new();
        for row in rdr.deserialize() {
            let row: CsvRow = row?;
            samples.push((row.pip_rad, row.dip_rad));
        }
        Self::new(samples)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Self::from_csv_reader(file)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("pip_rad,dip_rad\n");
        for (p, d) in &self.samples {
            out.push_str(&format!("{p},{d}\n"));
        }
        out
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_tables() {
        assert!(matches!(TrajectoryTable::new(vec![]), Err(Error::Empty(_))));
        assert!(TrajectoryTable::new(vec![(0.2, 0.1), (0.2, 0.2)]).is_err());
        assert!(TrajectoryTable::new(vec![(0.2, 0.1), (0.1, 0.2)]).is_err());
        assert!(TrajectoryTable::new(vec![(-0.1, 0.1)]).is_err());
        assert!(TrajectoryTable::new(vec![(0.1, PI)]).is_err());
        assert!(TrajectoryTable::new(vec![(0.1, f64::NAN)]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let t = TrajectoryTable::new(vec![(0.0, 0.0), (0.5, 0.21), (1.0, 0.52)]).unwrap();
        let back = TrajectoryTable::from_csv_reader(t.to_csv().as_bytes()).unwrap();
        assert_eq!(t, back);
    }

    #[test]
    fn csv_requires_header() {
        assert!(TrajectoryTable::from_csv_reader("0.1,0.2\n0.3,0.4\n".as_bytes()).is_err());
        assert!(TrajectoryTable::from_csv_reader("pip,dip\n0.1,0.2\n".as_bytes()).is_err());
    }

    #[test]
    fn sigmoid_generator() {
        let p = SigmoidParams { a: 1.2, b: 4.0, c: 0.9, d: -0.03 };
        let t = TrajectoryTable::from_sigmoid(p, (1..=20).map(|i| i as f64 * 0.08)).unwrap();
        assert_eq!(t.len(), 20);
        assert!((t.samples()[0].1 - p.eval(0.08)).abs() < 1e-15);
        // A curve that dips below zero violates the table domain.
        let bad = SigmoidParams { d: -0.5, ..p };
        assert!(TrajectoryTable::from_sigmoid(bad, [0.0, 0.1]).is_err());
    }
}
