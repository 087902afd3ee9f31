//! CSV export with round-trip-exact floating-point serialization.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::harness::{AggregateRow, RegretTrace};

/// 17 significant digits: enough to reproduce any f64 bit-exactly on parse.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Column order of per-step trace files, fixed by the export contract.
pub fn trace_header(dim: usize) -> String {
    let mut cols: Vec<String> = vec!["task".into(), "policy".into(), "trial".into(), "t".into()];
    for a in 1..=dim {
        cols.push(format!("x{a}"));
    }
    for c in [
        "y",
        "regret",
        "cum_regret",
        "avg_regret",
        "gamma_hat",
        "phi_at_query",
        "sigma2_at_query",
    ] {
        cols.push(c.into());
    }
    cols.join(",")
}

/// Writes one row per (trial, t) across all traces, init rows included.
pub fn write_traces_csv(
    path: &Path,
    task: &str,
    policy: &str,
    grid: &crate::grid::Grid,
    traces: &[RegretTrace],
) -> Result<()> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "{}", trace_header(grid.dim()))?;
    for trace in traces {
        for s in &trace.steps {
            let mut row: Vec<String> = vec![
                task.to_string(),
                policy.to_string(),
                trace.trial.to_string(),
                s.t.to_string(),
            ];
            for v in grid.point(s.index) {
                row.push(fmt_f64(*v));
            }
            for v in [s.y, s.regret, s.cum_regret, s.avg_regret, s.gamma_hat, s.phi, s.sigma2] {
                row.push(fmt_f64(v));
            }
            writeln!(w, "{}", row.join(","))?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_aggregate_csv(path: &Path, rows: &[AggregateRow]) -> Result<()> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "t,mean_avg_regret,ci_lower,ci_upper,n")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.t,
            fmt_f64(r.mean_avg_regret),
            fmt_f64(r.ci_lower),
            fmt_f64(r.ci_upper),
            r.n
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a CSV written by this module back into header and string cells.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Input(format!("{}: empty csv", path.display())))?
        .split(',')
        .map(str::to_string)
        .collect();
    let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    Ok((header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn formatting_round_trips_bit_exactly() {
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10_000 {
            let v: f64 = if r.gen_bool(0.5) {
                r.gen_range(-1e6..1e6)
            } else {
                f64::from_bits(r.gen::<u64>() & 0x7fef_ffff_ffff_ffff) // finite
            };
            let s = fmt_f64(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(v.to_bits(), back.to_bits(), "{v} -> {s} -> {back}");
        }
    }

    #[test]
    fn header_only_for_empty_aggregate() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("agg.csv");
        write_aggregate_csv(&path, &[]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "t,mean_avg_regret,ci_lower,ci_upper,n\n");
    }
}
