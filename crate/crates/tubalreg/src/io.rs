//! File formats: the `TB3` tensor container, dataset directories, CSV
//! exports, and grayscale PGM images.
//!
//! `TB3` is a fixed little-endian layout: the magic bytes `TB31`, three
//! 64-bit dimensions, then `d1·d2·d3` IEEE doubles in slice-major order.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::datagen::SimSpec;
use crate::error::{Error, Result};
use crate::loss::Dataset;
use crate::model::{CvRecord, EvalReport};
use crate::solver::TraceRecord;
use crate::tensor::Tensor3;

const TB3_MAGIC: &[u8; 4] = b"TB31";

pub fn write_tb3(path: &Path, t: &Tensor3) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(TB3_MAGIC)?;
    let (d1, d2, d3) = t.dims();
    for d in [d1, d2, d3] {
        w.write_all(&(d as u64).to_le_bytes())?;
    }
    for v in t.data() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_tb3(path: &Path) -> Result<Tensor3> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != TB3_MAGIC {
        return Err(Error::Parse(format!(
            "{} is not a TB3 file (bad magic)",
            path.display()
        )));
    }
    let mut dims = [0usize; 3];
    for d in &mut dims {
        let mut buf = [0u8; 8];
        r.read_exact(&mut buf)?;
        *d = u64::from_le_bytes(buf) as usize;
    }
    let len = dims[0]
        .checked_mul(dims[1])
        .and_then(|v| v.checked_mul(dims[2]))
        .ok_or_else(|| Error::Parse("TB3 dimensions overflow".into()))?;
    let mut data = Vec::with_capacity(len);
    let mut buf = [0u8; 8];
    for _ in 0..len {
        r.read_exact(&mut buf)?;
        data.push(f64::from_le_bytes(buf));
    }
    Tensor3::from_vec(dims[0], dims[1], dims[2], data)
}

/// Import a numeric CSV as a single-slice tensor (`d3 = 1`).
pub fn read_matrix_csv(path: &Path) -> Result<Tensor3> {
    let r = BufReader::new(File::open(path)?);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row: std::result::Result<Vec<f64>, _> =
            line.split(',').map(|f| f.trim().parse::<f64>()).collect();
        match row {
            Ok(row) => rows.push(row),
            Err(e) => {
                return Err(Error::Parse(format!(
                    "{}:{}: {e}",
                    path.display(),
                    lineno + 1
                )))
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::Parse(format!("{}: no data rows", path.display())));
    }
    let cols = rows[0].len();
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::Parse(format!("{}: ragged rows", path.display())));
    }
    let d1 = rows.len();
    Tensor3::from_vec(d1, cols, 1, rows.into_iter().flatten().collect())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format: String,
    pub layout: String,
    pub n: usize,
    pub d1: usize,
    pub d2: usize,
    pub d3: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub files: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimSpec>,
}

/// Write a dataset directory: `manifest.json`, the predictors stacked into
/// one `X.tb3` of shape `d1 × d2 × (d3·n)`, and `y.csv`.
pub fn save_dataset(dir: &Path, data: &Dataset, sim: Option<&SimSpec>) -> Result<()> {
    fs::create_dir_all(dir)?;
    let (d1, d2, d3) = data.dims();
    let n = data.len();
    let mut stacked = Tensor3::zeros(d1, d2, d3 * n);
    for (i, x) in data.x().iter().enumerate() {
        let off = i * d3 * d1 * d2;
        stacked.data_mut()[off..off + d3 * d1 * d2].copy_from_slice(x.data());
    }
    write_tb3(&dir.join("X.tb3"), &stacked)?;

    let mut yw = BufWriter::new(File::create(dir.join("y.csv"))?);
    writeln!(yw, "y")?;
    for v in data.y() {
        writeln!(yw, "{v}")?;
    }
    yw.flush()?;

    let manifest = DatasetManifest {
        format: "tubalreg.dataset".into(),
        layout: "stacked".into(),
        n,
        d1,
        d2,
        d3,
        files: None,
        sim: sim.cloned(),
    };
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::Parse(format!("manifest: {e}")))?;
    fs::write(dir.join("manifest.json"), json)?;
    Ok(())
}

/// Load a dataset directory; understands both the stacked layout and a
/// one-file-per-sample layout listed under `files`.
pub fn load_dataset(dir: &Path) -> Result<(Dataset, DatasetManifest)> {
    let manifest_path = dir.join("manifest.json");
    let manifest: DatasetManifest = serde_json::from_str(&fs::read_to_string(&manifest_path)?)
        .map_err(|e| Error::Parse(format!("{}: {e}", manifest_path.display())))?;
    if manifest.format != "tubalreg.dataset" {
        return Err(Error::Parse(format!(
            "unexpected dataset format '{}'",
            manifest.format
        )));
    }
    let (n, d1, d2, d3) = (manifest.n, manifest.d1, manifest.d2, manifest.d3);

    let x: Vec<Tensor3> = match manifest.layout.as_str() {
        "stacked" => {
            let stacked = read_tb3(&dir.join("X.tb3"))?;
            if stacked.dims() != (d1, d2, d3 * n) {
                return Err(Error::DimMismatch(format!(
                    "stacked X has dims {:?}, manifest says ({d1}, {d2}, {})",
                    stacked.dims(),
                    d3 * n
                )));
            }
            (0..n)
                .map(|i| {
                    let off = i * d3 * d1 * d2;
                    Tensor3::from_vec(
                        d1,
                        d2,
                        d3,
                        stacked.data()[off..off + d3 * d1 * d2].to_vec(),
                    )
                })
                .collect::<Result<_>>()?
        }
        "per_sample" => {
            let files = manifest
                .files
                .as_ref()
                .ok_or_else(|| Error::Parse("per_sample layout needs a files list".into()))?;
            if files.len() != n {
                return Err(Error::Parse(format!(
                    "manifest lists {} files for n = {n}",
                    files.len()
                )));
            }
            files
                .iter()
                .map(|f| read_tb3(&dir.join(f)))
                .collect::<Result<_>>()?
        }
        other => return Err(Error::Parse(format!("unknown dataset layout '{other}'"))),
    };

    let y = read_y_csv(&dir.join("y.csv"))?;
    if y.len() != n {
        return Err(Error::DimMismatch(format!(
            "y.csv has {} rows, manifest says {n}",
            y.len()
        )));
    }
    Ok((Dataset::new(x, y)?, manifest))
}

fn read_y_csv(path: &Path) -> Result<Vec<f64>> {
    let r = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || (lineno == 0 && line == "y") {
            continue;
        }
        out.push(line.parse::<f64>().map_err(|e| {
            Error::Parse(format!("{}:{}: {e}", path.display(), lineno + 1))
        })?);
    }
    Ok(out)
}

pub fn write_trace_csv(path: &Path, trace: &[TraceRecord]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "iter,objective,eta,increment_norm,backtracks")?;
    for r in trace {
        writeln!(
            w,
            "{},{:.12e},{:.12e},{:.12e},{}",
            r.iter, r.objective, r.eta, r.increment_norm, r.backtracks
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace_csv(path: &Path) -> Result<Vec<TraceRecord>> {
    let r = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || lineno == 0 {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(Error::Parse(format!(
                "{}:{}: expected 5 fields",
                path.display(),
                lineno + 1
            )));
        }
        let parse_f = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|e| Error::Parse(format!("{}:{}: {e}", path.display(), lineno + 1)))
        };
        out.push(TraceRecord {
            iter: fields[0]
                .parse()
                .map_err(|e| Error::Parse(format!("{}:{}: {e}", path.display(), lineno + 1)))?,
            objective: parse_f(fields[1])?,
            eta: parse_f(fields[2])?,
            increment_norm: parse_f(fields[3])?,
            backtracks: fields[4]
                .parse()
                .map_err(|e| Error::Parse(format!("{}:{}: {e}", path.display(), lineno + 1)))?,
        });
    }
    Ok(out)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|v| format!("{v}")).unwrap_or_default()
}

pub fn write_cv_table_csv(path: &Path, table: &[CvRecord]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "lambda,robustification,fold,criterion,mean_criterion,selected")?;
    for r in table {
        writeln!(
            w,
            "{},{},{},{:.12e},{:.12e},{}",
            r.lambda,
            fmt_opt(r.robustification),
            r.fold,
            r.criterion,
            r.mean_criterion,
            u8::from(r.selected)
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_report_csv(path: &Path, report: &EvalReport) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "err,log_err,nuc_err,r_hat,accuracy,pe")?;
    writeln!(
        w,
        "{:.12e},{},{:.12e},{},{},{:.12e}",
        report.err,
        report.log_err,
        report.nuc_err,
        report.r_hat,
        report
            .accuracy
            .map(|a| format!("{a:.4}"))
            .unwrap_or_default(),
        report.pe
    )?;
    w.flush()?;
    Ok(())
}

/// Write the frontal-slice mean of a coefficient tensor as a binary PGM,
/// min-max scaled to `0..=255`.
pub fn write_pgm(path: &Path, t: &Tensor3) -> Result<()> {
    let (d1, d2, d3) = t.dims();
    let mut mean = vec![0.0f64; d1 * d2];
    for k in 0..d3 {
        for (m, v) in mean.iter_mut().zip(t.frontal_slice(k)) {
            *m += v / d3 as f64;
        }
    }
    let lo = mean.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = mean.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "P5")?;
    writeln!(w, "{d2} {d1}")?;
    writeln!(w, "255")?;
    let bytes: Vec<u8> = mean
        .iter()
        .map(|v| (255.0 * (v - lo) / span).round().clamp(0.0, 255.0) as u8)
        .collect();
    w.write_all(&bytes)?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{self, Design, NoiseKind};

    #[test]
    fn tb3_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let t = Tensor3::from_vec(3, 2, 4, (0..24).map(|v| v as f64 / 7.0).collect()).unwrap();
        let path = dir.path().join("t.tb3");
        write_tb3(&path, &t).unwrap();
        let back = read_tb3(&path).unwrap();
        assert_eq!(t, back);
    }

    #[test]
    fn tb3_rejects_bad_magic() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.tb3");
        std::fs::write(&path, b"NOPE").unwrap();
        assert!(matches!(read_tb3(&path), Err(Error::Parse(_))));
    }

    #[test]
    fn dataset_round_trip() {
        let spec = datagen::SimSpec {
            n: 6,
            d1: 3,
            d2: 4,
            d3: 2,
            r: 1,
            design: Design::Linear,
            noise: NoiseKind::Gaussian { sd: 1.0 },
            misspec_pm: 0.0,
            corrupt_pn: 0.0,
            corrupt_pc: 0.0,
            shape: None,
            seed: 4,
        };
        let b0 = spec.coefficient().unwrap();
        let data = datagen::gen_dataset(&spec, &b0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_dataset(dir.path(), &data, Some(&spec)).unwrap();
        let (back, manifest) = load_dataset(dir.path()).unwrap();
        assert_eq!(manifest.n, 6);
        assert!(manifest.sim.is_some());
        assert_eq!(back.y(), data.y());
        for (a, b) in back.x().iter().zip(data.x()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn matrix_csv_import() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        std::fs::write(&path, "1.0, 2.0\n3.5, -4\n").unwrap();
        let t = read_matrix_csv(&path).unwrap();
        assert_eq!(t.dims(), (2, 2, 1));
        assert_eq!(t.get(1, 0, 0), 3.5);
        std::fs::write(&path, "1.0\n2.0, 3.0\n").unwrap();
        assert!(read_matrix_csv(&path).is_err());
    }

    #[test]
    fn trace_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        let trace = vec![
            TraceRecord {
                iter: 0,
                objective: 2.5,
                eta: 1.0,
                increment_norm: 0.0,
                backtracks: 0,
            },
            TraceRecord {
                iter: 1,
                objective: 1.25,
                eta: 2.0,
                increment_norm: 0.5,
                backtracks: 1,
            },
        ];
        write_trace_csv(&path, &trace).unwrap();
        let back = read_trace_csv(&path).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[1].iter, 1);
        assert!((back[1].objective - 1.25).abs() < 1e-15);
    }

    #[test]
    fn pgm_has_expected_header_and_size() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("b.pgm");
        let t = Tensor3::t_identity(4, 2);
        write_pgm(&path, &t).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert!(bytes.starts_with(b"P5\n4 4\n255\n"));
        assert_eq!(bytes.len(), b"P5\n4 4\n255\n".len() + 16);
    }
}
