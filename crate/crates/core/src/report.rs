//! Summary tables and surface files.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment::{Method, TrialReport};
use crate::selection::Surface;

/// Per-method aggregate over trials; `std` is the population standard
/// deviation and both skip failed trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub mean: f64,
    pub std: f64,
    pub trials: usize,
    pub failed: usize,
    pub uses_test_labels: bool,
}

/// One summary per method, in order of first appearance.
pub fn summarize(reports: &[TrialReport]) -> Vec<MethodSummary> {
    let mut order: Vec<Method> = Vec::new();
    for r in reports {
        if !order.contains(&r.method) {
            order.push(r.method);
        }
    }
    order
        .into_iter()
        .map(|method| {
            let rows: Vec<&TrialReport> = reports.iter().filter(|r| r.method == method).collect();
            let values: Vec<f64> = rows.iter().filter_map(|r| r.metric).collect();
            let n = values.len();
            let (mean, std) = if n == 0 {
                (f64::NAN, f64::NAN)
            } else {
                let mean = values.iter().sum::<f64>() / n as f64;
                let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
                (mean, var.sqrt())
            };
            MethodSummary {
                method,
                mean,
                std,
                trials: n,
                failed: rows.len() - n,
                uses_test_labels: method.uses_test_labels(),
            }
        })
        .collect()
}

/// CSV with header `method,mean,std,trials`.
pub fn write_summary_csv<W: Write>(summaries: &[MethodSummary], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["method", "mean", "std", "trials"])?;
    for s in summaries {
        w.write_record([
            s.method.name().to_string(),
            s.mean.to_string(),
            s.std.to_string(),
            s.trials.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Fixed-width table, one line per method.
pub fn render_table(summaries: &[MethodSummary]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<14} {:>12} {:>12} {:>7}",
        "method", "mean", "std", "trials"
    );
    for s in summaries {
        let _ = write!(
            out,
            "{:<14} {:>12.4} {:>12.4} {:>7}",
            s.method.name(),
            s.mean,
            s.std,
            s.trials
        );
        if s.failed > 0 {
            let _ = write!(out, "  ({} failed)", s.failed);
        }
        if s.uses_test_labels {
            let _ = write!(out, "  [optimal: λ chosen on test labels]");
        }
        out.push('\n');
    }
    out
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Write the CSV summary to `path` and the table beside it with a `.txt`
/// extension. Returns the summaries.
pub fn emit_report(reports: &[TrialReport], path: &Path) -> Result<Vec<MethodSummary>> {
    if reports.is_empty() {
        return Err(Error::InvalidParameter("no reports to summarize".into()));
    }
    let summaries = summarize(reports);
    write_summary_csv(&summaries, create(path)?)?;
    let mut table = create(&path.with_extension("txt"))?;
    table.write_all(render_table(&summaries).as_bytes())?;
    table.flush()?;
    Ok(summaries)
}

/// CSV rows `lambda,alpha,loss`, λ-major.
pub fn write_surface_csv<W: Write>(surface: &Surface, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["lambda", "alpha", "loss"])?;
    for ((i, j), loss) in surface.losses.indexed_iter() {
        w.write_record([
            surface.lambdas[i].to_string(),
            surface.alphas[j].to_string(),
            loss.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_surface(surface: &Surface, path: &Path) -> Result<()> {
    write_surface_csv(surface, create(path)?)
}

/// Inverse of [`write_surface_csv`].
pub fn read_surface_csv<R: Read>(input: R) -> Result<Surface> {
    let mut reader = csv::Reader::from_reader(input);
    let header = reader.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != ["lambda", "alpha", "loss"] {
        return Err(Error::Parse {
            line: 1,
            message: format!("unexpected header {header:?}"),
        });
    }
    let mut rows = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let record = record?;
        let line = k + 2;
        let field = |c: usize| -> Result<f64> {
            record
                .get(c)
                .ok_or_else(|| Error::Parse {
                    line,
                    message: "missing field".into(),
                })?
                .parse()
                .map_err(|_| Error::Parse {
                    line,
                    message: format!("bad number in {record:?}"),
                })
        };
        rows.push((field(0)?, field(1)?, field(2)?));
    }
    let mut lambdas: Vec<f64> = Vec::new();
    let mut alphas: Vec<f64> = Vec::new();
    for &(l, a, _) in &rows {
        if lambdas.last() != Some(&l) {
            lambdas.push(l);
        }
        if lambdas.len() == 1 {
            alphas.push(a);
        }
    }
    if rows.len() != lambdas.len() * alphas.len() {
        return Err(Error::Parse {
            line: 0,
            message: "rows do not form a λ-major grid".into(),
        });
    }
    for (k, &(l, a, _)) in rows.iter().enumerate() {
        if l != lambdas[k / alphas.len()] || a != alphas[k % alphas.len()] {
            return Err(Error::Parse {
                line: k + 2,
                message: "rows do not form a λ-major grid".into(),
            });
        }
    }
    let losses = Array2::from_shape_vec(
        (lambdas.len(), alphas.len()),
        rows.iter().map(|r| r.2).collect(),
    )
    .expect("shape checked above");
    Surface::new(lambdas, alphas, losses)
}

pub fn read_surface(path: &Path) -> Result<Surface> {
    let file = File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    read_surface_csv(BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::WeightParams;
    use ndarray::array;

    fn report(method: Method, trial: usize, metric: Option<f64>) -> TrialReport {
        TrialReport {
            method,
            trial,
            seed: trial as u64,
            params: Some(WeightParams::unweighted()),
            metric,
            error: None,
            uses_test_labels: method.uses_test_labels(),
            seconds: 0.0,
            surface: None,
        }
    }

    #[test]
    fn single_trial_has_zero_std() {
        let s = summarize(&[report(Method::Erm, 0, Some(3.0))]);
        assert_eq!((s[0].mean, s[0].std, s[0].trials), (3.0, 0.0, 1));
    }

    #[test]
    fn order_and_aggregation() {
        let r = vec![
            report(Method::Iwerm, 0, Some(1.0)),
            report(Method::Erm, 0, Some(4.0)),
            report(Method::Iwerm, 1, Some(3.0)),
            report(Method::Erm, 1, None),
        ];
        let s = summarize(&r);
        assert_eq!(s[0].method, Method::Iwerm);
        assert_eq!((s[0].mean, s[0].std), (2.0, 1.0));
        assert_eq!((s[1].trials, s[1].failed), (1, 1));
        let mut buf = Vec::new();
        write_summary_csv(&s, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "method,mean,std,trials\niwerm,2,1,2\nerm,4,0,1\n"
        );
    }

    #[test]
    fn table_flags_leaky_methods() {
        let t = render_table(&summarize(&[report(Method::Riwerm, 0, Some(1.0))]));
        assert!(t.contains("test labels"));
    }

    #[test]
    fn surface_round_trip() {
        let s = Surface::new(
            vec![0.0, 0.5],
            vec![-1.0, 1.0, 3.0],
            array![[1.0, 1.0, 1.0], [0.1, 1.0 / 3.0, f64::INFINITY]],
        )
        .unwrap();
        let mut buf = Vec::new();
        write_surface_csv(&s, &mut buf).unwrap();
        assert_eq!(String::from_utf8_lossy(&buf).lines().count(), 7);
        assert_eq!(read_surface_csv(buf.as_slice()).unwrap(), s);
    }

    #[test]
    fn empty_reports_rejected() {
        let dir = tempfile::tempdir().unwrap();
        assert!(emit_report(&[], &dir.path().join("r.csv")).is_err());
    }
}
