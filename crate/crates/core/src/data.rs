//! Survival datasets and the τ-restriction.
//!
//! A [`Dataset`] holds validated subjects: a covariate vector, a binary
//! treatment indicator, a nonnegative observed time and an event status.
//! [`RestrictedDataset`] additionally carries, for a fixed horizon τ, the
//! restricted time `min(t, τ)` and the restricted status
//! `δᵗ = max(δ, 1{t ≥ τ})`: censoring at or beyond the horizon is
//! indistinguishable from an event for the restricted problem, so it is
//! recoded as one. All types are immutable after construction.

use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("row {row}: non-finite value in column {column}")]
    NonFiniteValue { row: usize, column: String },
    #[error("row {row}: {column} must be 0 or 1, got {value}")]
    BadCode { row: usize, column: String, value: f64 },
    #[error("row {row}: negative observed time {value}")]
    NegativeTime { row: usize, value: f64 },
    #[error("treatment arm {arm} has no subjects")]
    EmptyArm { arm: u8 },
    #[error("row {row}: expected {expected} covariates, got {got}")]
    DimensionMismatch { row: usize, expected: usize, got: usize },
    #[error("dataset has no rows")]
    Empty,
    #[error("restriction horizon must be positive, got {0}")]
    NonPositiveTau(f64),
    #[error("csv: {0}")]
    Csv(String),
}

/// One raw input record, before validation.
#[derive(Debug, Clone)]
pub struct RawRecord {
    pub covariates: Vec<f64>,
    pub treatment: f64,
    pub time: f64,
    pub status: f64,
}

/// Read-only view of one subject.
#[derive(Debug, Clone, Copy)]
pub struct SubjectRef<'a> {
    pub covariates: &'a [f64],
    pub arm: u8,
    pub time: f64,
    pub event: u8,
}

/// A validated, immutable survival dataset with both treatment arms present.
///
/// Covariates are stored row-major in one flat buffer; ties in observed times
/// are permitted and preserved exactly as given.
#[derive(Debug, Clone)]
pub struct Dataset {
    p: usize,
    x: Vec<f64>,
    arm: Vec<u8>,
    time: Vec<f64>,
    status: Vec<u8>,
}

impl Dataset {
    /// Validates raw records against the type invariants and assembles a
    /// dataset, preserving input order.
    pub fn validate(rows: &[RawRecord], p: usize) -> Result<Self, DataError> {
        if rows.is_empty() {
            return Err(DataError::Empty);
        }
        let mut x = Vec::with_capacity(rows.len() * p);
        let mut arm = Vec::with_capacity(rows.len());
        let mut time = Vec::with_capacity(rows.len());
        let mut status = Vec::with_capacity(rows.len());
        for (i, r) in rows.iter().enumerate() {
            if r.covariates.len() != p {
                return Err(DataError::DimensionMismatch {
                    row: i,
                    expected: p,
                    got: r.covariates.len(),
                });
            }
            for (j, &v) in r.covariates.iter().enumerate() {
                if !v.is_finite() {
                    return Err(DataError::NonFiniteValue {
                        row: i,
                        column: format!("x{}", j + 1),
                    });
                }
            }
            if !r.time.is_finite() {
                return Err(DataError::NonFiniteValue { row: i, column: "time".into() });
            }
            if r.time < 0.0 {
                return Err(DataError::NegativeTime { row: i, value: r.time });
            }
            let a = decode_binary(r.treatment, i, "a")?;
            let d = decode_binary(r.status, i, "status")?;
            x.extend_from_slice(&r.covariates);
            arm.push(a);
            time.push(r.time);
            status.push(d);
        }
        let d = Dataset { p, x, arm, time, status };
        for a in [0u8, 1u8] {
            if d.arm_count(a) == 0 {
                return Err(DataError::EmptyArm { arm: a });
            }
        }
        Ok(d)
    }

    /// Builds a dataset from parallel columns without re-copying. Same
    /// invariants as [`Dataset::validate`].
    pub fn from_columns(
        p: usize,
        x: Vec<f64>,
        arm: Vec<u8>,
        time: Vec<f64>,
        status: Vec<u8>,
    ) -> Result<Self, DataError> {
        let n = arm.len();
        if n == 0 {
            return Err(DataError::Empty);
        }
        assert_eq!(x.len(), n * p);
        assert_eq!(time.len(), n);
        assert_eq!(status.len(), n);
        for i in 0..n {
            if !time[i].is_finite() || x[i * p..(i + 1) * p].iter().any(|v| !v.is_finite()) {
                return Err(DataError::NonFiniteValue { row: i, column: "time/x".into() });
            }
            if time[i] < 0.0 {
                return Err(DataError::NegativeTime { row: i, value: time[i] });
            }
            if arm[i] > 1 || status[i] > 1 {
                return Err(DataError::BadCode {
                    row: i,
                    column: "a/status".into(),
                    value: arm[i].max(status[i]) as f64,
                });
            }
        }
        let d = Dataset { p, x, arm, time, status };
        for a in [0u8, 1u8] {
            if d.arm_count(a) == 0 {
                return Err(DataError::EmptyArm { arm: a });
            }
        }
        Ok(d)
    }

    pub fn n(&self) -> usize {
        self.arm.len()
    }

    pub fn covariate_dim(&self) -> usize {
        self.p
    }

    pub fn covariates(&self, i: usize) -> &[f64] {
        &self.x[i * self.p..(i + 1) * self.p]
    }

    pub fn arm(&self, i: usize) -> u8 {
        self.arm[i]
    }

    pub fn time(&self, i: usize) -> f64 {
        self.time[i]
    }

    pub fn status(&self, i: usize) -> u8 {
        self.status[i]
    }

    pub fn arm_count(&self, a: u8) -> usize {
        self.arm.iter().filter(|&&v| v == a).count()
    }

    pub fn subject(&self, i: usize) -> SubjectRef<'_> {
        SubjectRef {
            covariates: self.covariates(i),
            arm: self.arm[i],
            time: self.time[i],
            event: self.status[i],
        }
    }

    /// New dataset from the given row indices (bootstrap resampling).
    pub fn resample(&self, indices: &[usize]) -> Dataset {
        let mut x = Vec::with_capacity(indices.len() * self.p);
        let mut arm = Vec::with_capacity(indices.len());
        let mut time = Vec::with_capacity(indices.len());
        let mut status = Vec::with_capacity(indices.len());
        for &i in indices {
            x.extend_from_slice(self.covariates(i));
            arm.push(self.arm[i]);
            time.push(self.time[i]);
            status.push(self.status[i]);
        }
        Dataset { p: self.p, x, arm, time, status }
    }

    /// Restricts the dataset at horizon `tau`.
    pub fn restrict(&self, tau: f64) -> Result<RestrictedDataset, DataError> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(DataError::NonPositiveTau(tau));
        }
        let mut rtime = Vec::with_capacity(self.n());
        let mut rstatus = Vec::with_capacity(self.n());
        for i in 0..self.n() {
            rtime.push(self.time[i].min(tau));
            rstatus.push(if self.time[i] >= tau { 1 } else { self.status[i] });
        }
        Ok(RestrictedDataset { base: self.clone(), tau, rtime, rstatus })
    }
}

fn decode_binary(v: f64, row: usize, column: &str) -> Result<u8, DataError> {
    if !v.is_finite() {
        return Err(DataError::NonFiniteValue { row, column: column.into() });
    }
    if v == 0.0 {
        Ok(0)
    } else if v == 1.0 {
        Ok(1)
    } else {
        Err(DataError::BadCode { row, column: column.into(), value: v })
    }
}

/// A dataset together with its τ-restricted times and statuses.
#[derive(Debug, Clone)]
pub struct RestrictedDataset {
    base: Dataset,
    tau: f64,
    rtime: Vec<f64>,
    rstatus: Vec<u8>,
}

impl RestrictedDataset {
    pub fn base(&self) -> &Dataset {
        &self.base
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn n(&self) -> usize {
        self.base.n()
    }

    pub fn covariate_dim(&self) -> usize {
        self.base.covariate_dim()
    }

    /// Restricted time `min(t, τ)` of subject `i`.
    pub fn rtime(&self, i: usize) -> f64 {
        self.rtime[i]
    }

    /// Restricted status `δᵗ` of subject `i`.
    pub fn rstatus(&self, i: usize) -> u8 {
        self.rstatus[i]
    }

    pub fn arm(&self, i: usize) -> u8 {
        self.base.arm(i)
    }

    pub fn covariates(&self, i: usize) -> &[f64] {
        self.base.covariates(i)
    }

    /// Subject view carrying the restricted time and status.
    pub fn subject(&self, i: usize) -> SubjectRef<'_> {
        SubjectRef {
            covariates: self.base.covariates(i),
            arm: self.base.arm(i),
            time: self.rtime[i],
            event: self.rstatus[i],
        }
    }

    /// Indices of subjects in arm `a`, in dataset order.
    pub fn arm_indices(&self, a: u8) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.base.arm(i) == a).collect()
    }
}

// ── CSV interchange ─────────────────────────────────────────────────────────
//
// Schema (header required): id,x1,...,xp,a,time,status with a,status in {0,1}
// and dot-decimal floating point.

/// Reads a dataset from CSV. The covariate dimension is inferred from the
/// header, which must be `id,x1,...,xp,a,time,status`.
pub fn read_csv<R: Read>(reader: R) -> Result<Dataset, DataError> {
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rd.headers().map_err(|e| DataError::Csv(e.to_string()))?.clone();
    let cols: Vec<&str> = headers.iter().collect();
    if cols.len() < 4 || cols[0] != "id" {
        return Err(DataError::Csv(
            "expected header id,x1,...,xp,a,time,status".into(),
        ));
    }
    let p = cols.len() - 4;
    for (j, name) in cols[1..1 + p].iter().enumerate() {
        if *name != format!("x{}", j + 1) {
            return Err(DataError::Csv(format!(
                "expected covariate column x{}, found {name}",
                j + 1
            )));
        }
    }
    if cols[1 + p] != "a" || cols[2 + p] != "time" || cols[3 + p] != "status" {
        return Err(DataError::Csv(
            "expected trailing columns a,time,status".into(),
        ));
    }
    let mut rows = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| DataError::Csv(e.to_string()))?;
        if rec.len() != cols.len() {
            return Err(DataError::DimensionMismatch {
                row: i,
                expected: p,
                got: rec.len().saturating_sub(4),
            });
        }
        let field = |k: usize, name: &str| -> Result<f64, DataError> {
            rec[k].trim().parse::<f64>().map_err(|_| DataError::Csv(format!(
                "row {i}: cannot parse {name} value {:?}",
                &rec[k]
            )))
        };
        let mut covariates = Vec::with_capacity(p);
        for j in 0..p {
            covariates.push(field(1 + j, &format!("x{}", j + 1))?);
        }
        rows.push(RawRecord {
            covariates,
            treatment: field(1 + p, "a")?,
            time: field(2 + p, "time")?,
            status: field(3 + p, "status")?,
        });
    }
    Dataset::validate(&rows, p)
}

pub fn read_csv_path(path: &Path) -> Result<Dataset, DataError> {
    let f = std::fs::File::open(path).map_err(|e| DataError::Csv(format!("{}: {e}", path.display())))?;
    read_csv(std::io::BufReader::new(f))
}

/// Writes the dataset in the interchange schema. Floats are printed with the
/// shortest round-trip representation, so re-reading reproduces the dataset
/// bit for bit.
pub fn write_csv<W: Write>(d: &Dataset, mut w: W) -> std::io::Result<()> {
    write!(w, "id")?;
    for j in 0..d.covariate_dim() {
        write!(w, ",x{}", j + 1)?;
    }
    writeln!(w, ",a,time,status")?;
    for i in 0..d.n() {
        write!(w, "{}", i + 1)?;
        for v in d.covariates(i) {
            write!(w, ",{v}")?;
        }
        writeln!(w, ",{},{},{}", d.arm(i), d.time(i), d.status(i))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(x: &[f64], a: f64, t: f64, s: f64) -> RawRecord {
        RawRecord { covariates: x.to_vec(), treatment: a, time: t, status: s }
    }

    #[test]
    fn validates_three_subjects() {
        // (x=(1,1.5,4),a=1,t=200,δ=1), (x=(5,1,2),a=0,t=100,δ=1), (x=(9,0.5,3),a=1,t=200,δ=0)
        let rows = vec![
            rec(&[1.0, 1.5, 4.0], 1.0, 200.0, 1.0),
            rec(&[5.0, 1.0, 2.0], 0.0, 100.0, 1.0),
            rec(&[9.0, 0.5, 3.0], 1.0, 200.0, 0.0),
        ];
        let d = Dataset::validate(&rows, 3).unwrap();
        assert_eq!(d.n(), 3);
        assert_eq!(d.covariate_dim(), 3);
        assert_eq!(d.arm_count(1), 2);
        assert_eq!(d.covariates(1), &[5.0, 1.0, 2.0]);
    }

    #[test]
    fn rejects_bad_status_code() {
        let rows = vec![rec(&[0.0], 1.0, 1.0, 2.0), rec(&[0.0], 0.0, 1.0, 1.0)];
        assert!(matches!(
            Dataset::validate(&rows, 1),
            Err(DataError::BadCode { column, .. }) if column == "status"
        ));
    }

    #[test]
    fn rejects_single_arm() {
        let rows = vec![rec(&[0.0], 1.0, 1.0, 1.0), rec(&[1.0], 1.0, 2.0, 0.0)];
        assert!(matches!(Dataset::validate(&rows, 1), Err(DataError::EmptyArm { arm: 0 })));
    }

    #[test]
    fn rejects_nonfinite_and_negative() {
        let rows = vec![rec(&[f64::NAN], 1.0, 1.0, 1.0), rec(&[0.0], 0.0, 1.0, 1.0)];
        assert!(matches!(Dataset::validate(&rows, 1), Err(DataError::NonFiniteValue { .. })));
        let rows = vec![rec(&[0.0], 1.0, -1.0, 1.0), rec(&[0.0], 0.0, 1.0, 1.0)];
        assert!(matches!(Dataset::validate(&rows, 1), Err(DataError::NegativeTime { .. })));
    }

    #[test]
    fn accepts_time_zero() {
        let rows = vec![rec(&[0.0], 1.0, 0.0, 1.0), rec(&[0.0], 0.0, 1.0, 0.0)];
        assert!(Dataset::validate(&rows, 1).is_ok());
    }

    #[test]
    fn restriction_recodes_statuses() {
        let rows = vec![
            rec(&[0.0], 1.0, 200.0, 0.0), // censored after horizon → event at τ
            rec(&[0.0], 0.0, 100.0, 0.0), // censored before horizon → stays censored
            rec(&[0.0], 0.0, 100.0, 1.0), // event unchanged
        ];
        let d = Dataset::validate(&rows, 1).unwrap();
        let rd = d.restrict(150.0).unwrap();
        assert_eq!((rd.rtime(0), rd.rstatus(0)), (150.0, 1));
        assert_eq!((rd.rtime(1), rd.rstatus(1)), (100.0, 0));
        assert_eq!((rd.rtime(2), rd.rstatus(2)), (100.0, 1));
    }

    #[test]
    fn restriction_rejects_nonpositive_tau() {
        let rows = vec![rec(&[0.0], 1.0, 1.0, 1.0), rec(&[0.0], 0.0, 1.0, 1.0)];
        let d = Dataset::validate(&rows, 1).unwrap();
        assert!(matches!(d.restrict(0.0), Err(DataError::NonPositiveTau(_))));
    }

    #[test]
    fn restriction_is_idempotent() {
        let rows = vec![
            rec(&[0.5], 1.0, 12.0, 0.0),
            rec(&[0.1], 0.0, 3.0, 1.0),
            rec(&[0.9], 1.0, 7.0, 0.0),
        ];
        let d = Dataset::validate(&rows, 1).unwrap();
        let once = d.restrict(7.0).unwrap();
        // Re-restricting the already restricted base at the same τ changes nothing.
        let mut clipped = Vec::new();
        for i in 0..once.n() {
            clipped.push(RawRecord {
                covariates: once.covariates(i).to_vec(),
                treatment: once.arm(i) as f64,
                time: once.rtime(i),
                status: once.rstatus(i) as f64,
            });
        }
        let twice = Dataset::validate(&clipped, 1).unwrap().restrict(7.0).unwrap();
        for i in 0..once.n() {
            assert_eq!(once.rtime(i), twice.rtime(i));
            assert_eq!(once.rstatus(i), twice.rstatus(i));
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let rows = vec![
            rec(&[0.1234567890123, -3.5e-7], 1.0, 1.0 / 3.0, 1.0),
            rec(&[1.0, 2.0], 0.0, 7.25, 0.0),
        ];
        let d = Dataset::validate(&rows, 2).unwrap();
        let mut buf = Vec::new();
        write_csv(&d, &mut buf).unwrap();
        let back = read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.n(), d.n());
        for i in 0..d.n() {
            assert_eq!(back.covariates(i), d.covariates(i));
            assert_eq!(back.time(i), d.time(i));
            assert_eq!(back.arm(i), d.arm(i));
            assert_eq!(back.status(i), d.status(i));
        }
    }

    #[test]
    fn csv_rejects_wrong_header() {
        let text = "foo,bar\n1,2\n";
        assert!(matches!(read_csv(text.as_bytes()), Err(DataError::Csv(_))));
    }
}
