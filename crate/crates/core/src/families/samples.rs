//! Matrix time series: piecewise-linear families and their JSON/CSV formats.
//!
//! One record per time point; entries are row-major `(re, im)` pairs. CSV
//! files use the header `t,re_0_0,im_0_0,re_0_1,...`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{FamilyOptions, MatrixFn, OperatorFamily, Regularity};
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, HermitianMatrix, C64};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixSample {
    pub t: f64,
    pub entries: Vec<[f64; 2]>,
}

impl MatrixSample {
    pub fn from_matrix(t: f64, m: &HermitianMatrix) -> Self {
        let n = m.dim();
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let z = m.as_matrix()[(i, j)];
                entries.push([z.re, z.im]);
            }
        }
        MatrixSample { t, entries }
    }

    pub fn to_matrix(&self) -> Result<HermitianMatrix> {
        let len = self.entries.len();
        let n = (len as f64).sqrt().round() as usize;
        if n * n != len || n == 0 {
            return Err(Error::invalid(
                "entries",
                format!(
                    "sample at t = {} has {len} entries, not a positive square",
                    self.t
                ),
            ));
        }
        let m = CMatrix::from_fn(n, n, |i, j| {
            let [re, im] = self.entries[i * n + j];
            C64::new(re, im)
        });
        HermitianMatrix::new(m)
    }
}

/// Entrywise linear interpolation between consecutive samples.
///
/// The derivative is the slope of the current piece (the right-hand slope at
/// interior nodes). With three or more samples the family is only piecewise
/// `C¹` and is flagged as such; `strict` turns that flag into an error.
pub fn sampled_family(
    times: &[f64],
    matrices: &[HermitianMatrix],
    options: FamilyOptions,
) -> Result<OperatorFamily> {
    if times.len() != matrices.len() {
        return Err(Error::DimensionMismatch {
            expected: times.len(),
            found: matrices.len(),
        });
    }
    if times.len() < 2 {
        return Err(Error::invalid("samples", "need at least two time points"));
    }
    if times[0] != 0.0 {
        return Err(Error::invalid(
            "times",
            format!("must start at 0, got {}", times[0]),
        ));
    }
    if let Some(w) = times
        .windows(2)
        .find(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater) || !w[1].is_finite())
    {
        return Err(Error::invalid(
            "times",
            format!(
                "must be strictly increasing, found {} followed by {}",
                w[0], w[1]
            ),
        ));
    }
    let n = matrices[0].dim();
    if let Some(bad) = matrices.iter().find(|m| m.dim() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: bad.dim(),
        });
    }
    let horizon = *times.last().expect("nonempty");
    let times: Arc<[f64]> = times.into();
    let nodes: Arc<[HermitianMatrix]> = matrices.into();
    let slopes: Arc<[HermitianMatrix]> = nodes
        .windows(2)
        .zip(times.windows(2))
        .map(|(m, t)| &(&m[1] - &m[0]) * (1.0 / (t[1] - t[0])))
        .collect();

    let piece = {
        let times = times.clone();
        move |t: f64| {
            let k = times.partition_point(|&s| s <= t);
            k.clamp(1, times.len() - 1) - 1
        }
    };
    let (tt, nn, ss, pp) = (times.clone(), nodes.clone(), slopes.clone(), piece.clone());
    let eval: MatrixFn = Arc::new(move |t| {
        let k = pp(t);
        &nn[k] + &(&ss[k] * (t - tt[k]))
    });
    let derivative: MatrixFn = Arc::new(move |t| slopes[piece(t)].clone());

    let label = format!("samples({} points)", times.len());
    if times.len() == 2 {
        return OperatorFamily::new(n, horizon, label, eval, Some(derivative), options);
    }
    let mut family = OperatorFamily::derived(
        n,
        horizon,
        label,
        eval,
        Some(derivative),
        Regularity::Smooth,
    );
    family.mark_piecewise(options)?;
    Ok(family)
}

fn split(samples: &[MatrixSample]) -> Result<(Vec<f64>, Vec<HermitianMatrix>)> {
    let times = samples.iter().map(|s| s.t).collect();
    let matrices = samples
        .iter()
        .map(MatrixSample::to_matrix)
        .collect::<Result<_>>()?;
    Ok((times, matrices))
}

impl OperatorFamily {
    /// Build a sampled family from parsed records.
    pub fn from_samples(samples: &[MatrixSample], options: FamilyOptions) -> Result<Self> {
        let (times, matrices) = split(samples)?;
        sampled_family(&times, &matrices, options)
    }

    /// Sample `A` at `points + 1` uniform times.
    pub fn to_samples(&self, points: usize) -> Vec<MatrixSample> {
        let points = points.max(1);
        (0..=points)
            .map(|k| {
                let t = self.horizon() * k as f64 / points as f64;
                MatrixSample::from_matrix(t, &self.eval(t))
            })
            .collect()
    }
}

pub fn read_samples_json(path: &Path) -> Result<Vec<MatrixSample>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_reader(BufReader::new(file))?)
}

pub fn write_samples_json(path: &Path, samples: &[MatrixSample]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, samples)?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_samples_csv(path: &Path) -> Result<Vec<MatrixSample>> {
    let mut reader = csv::Reader::from_path(path)?;
    let width = reader.headers()?.len();
    if width < 3 || (width - 1) % 2 != 0 {
        return Err(Error::invalid(
            "csv",
            format!(
                "{}: expected `t` followed by re/im column pairs",
                path.display()
            ),
        ));
    }
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record?;
        let values = record
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::invalid("csv", format!("{}: {e}", path.display())))?;
        let entries = values[1..].chunks(2).map(|c| [c[0], c[1]]).collect();
        out.push(MatrixSample {
            t: values[0],
            entries,
        });
    }
    Ok(out)
}

pub fn write_samples_csv(path: &Path, samples: &[MatrixSample]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    if let Some(first) = samples.first() {
        let n = (first.entries.len() as f64).sqrt().round() as usize;
        let mut header = vec!["t".to_string()];
        for i in 0..n {
            for j in 0..n {
                header.push(format!("re_{i}_{j}"));
                header.push(format!("im_{i}_{j}"));
            }
        }
        writer.write_record(&header)?;
    }
    for s in samples {
        let mut row = vec![s.t.to_string()];
        for [re, im] in &s.entries {
            row.push(re.to_string());
            row.push(im.to_string());
        }
        writer.write_record(&row)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::linear_family;

    fn d(x: f64) -> HermitianMatrix {
        HermitianMatrix::from_real_diagonal(&[x])
    }

    #[test]
    fn two_samples_interpolate() {
        let f = sampled_family(&[0.0, 1.0], &[d(0.0), d(1.0)], FamilyOptions::default()).unwrap();
        assert_eq!(f.eval(0.5).as_matrix()[(0, 0)].re, 0.5);
        assert_eq!(f.regularity(), Regularity::Smooth);
        let c = sampled_family(&[0.0, 2.0], &[d(3.0), d(3.0)], FamilyOptions::default()).unwrap();
        assert_eq!(c.eval(1.3).as_matrix()[(0, 0)].re, 3.0);
        assert_eq!(c.derivative(0.4).unwrap().as_matrix()[(0, 0)].re, 0.0);
    }

    #[test]
    fn linear_data_is_reproduced() {
        let lin = linear_family(
            HermitianMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, -1.0]]).unwrap(),
            HermitianMatrix::from_real_rows(&[&[1.0, 0.5], &[0.5, 2.0]]).unwrap(),
            1.0,
        )
        .unwrap();
        let f = OperatorFamily::from_samples(&lin.to_samples(2), FamilyOptions::default()).unwrap();
        assert_eq!(f.regularity(), Regularity::PiecewiseC1);
        assert!(!f.warnings().is_empty());
        for k in 0..=20 {
            let t = k as f64 / 20.0;
            let diff = crate::linalg::max_abs(&(f.eval(t).as_matrix() - lin.eval(t).as_matrix()));
            assert!(diff < 1e-14, "t = {t}: {diff}");
        }
        assert!(
            OperatorFamily::from_samples(&lin.to_samples(2), FamilyOptions { strict: true })
                .is_err()
        );
    }

    #[test]
    fn validation_errors() {
        let opts = FamilyOptions::default();
        assert!(sampled_family(&[0.0, 1.0, 0.5], &[d(0.0), d(1.0), d(2.0)], opts).is_err());
        assert!(sampled_family(&[0.1, 1.0], &[d(0.0), d(1.0)], opts).is_err());
        let two = HermitianMatrix::identity(2);
        assert!(matches!(
            sampled_family(&[0.0, 1.0], &[d(0.0), two], opts),
            Err(Error::DimensionMismatch { .. })
        ));
        let bad = MatrixSample {
            t: 0.0,
            entries: vec![[0.0, 0.0], [1.0, 0.0], [0.0, 0.0], [0.0, 0.0]],
        };
        assert!(matches!(bad.to_matrix(), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn csv_and_json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let m = HermitianMatrix::new(CMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(1.0, 0.0),
                C64::new(0.5, 0.25),
                C64::new(0.5, -0.25),
                C64::new(-2.0, 0.0),
            ],
        ))
        .unwrap();
        let samples = vec![
            MatrixSample::from_matrix(0.0, &m),
            MatrixSample::from_matrix(1.0, &m.scaled(2.0)),
        ];
        let csv_path = dir.path().join("s.csv");
        write_samples_csv(&csv_path, &samples).unwrap();
        assert_eq!(read_samples_csv(&csv_path).unwrap(), samples);
        let json_path = dir.path().join("s.json");
        write_samples_json(&json_path, &samples).unwrap();
        assert_eq!(read_samples_json(&json_path).unwrap(), samples);
        let header = std::fs::read_to_string(&csv_path).unwrap();
        assert!(header.starts_with("t,re_0_0,im_0_0,re_0_1"));
    }
}
