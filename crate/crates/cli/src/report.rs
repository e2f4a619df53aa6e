//! Joins sweep results and tabulates delay gaps between strategies.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::experiment::{read_sweep_csv, SweepRow};
use crate::CliError;

pub const SUMMARY_HEADER: &str =
    "sweep_value,strategy_a,strategy_b,delay_a_s,delay_b_s,gap_s,relative_gap";

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    /// Strategy columns in first-seen order.
    pub strategies: Vec<String>,
    pub sweep_values: Vec<f64>,
    /// `delays[row][column]`.
    pub delays: Vec<Vec<f64>>,
}

/// Qualified column name: with several inputs, each strategy is prefixed
/// by the input's file stem (or its position when stems repeat).
fn qualify(paths: &[PathBuf]) -> Vec<String> {
    let stems: Vec<String> = paths
        .iter()
        .map(|p| {
            let parent = p.parent().and_then(|d| d.file_name());
            match (p.file_stem(), parent) {
                (_, Some(dir)) if p.file_name().is_some_and(|f| f == "sweep.csv") => {
                    dir.to_string_lossy().into_owned()
                }
                (Some(s), _) => s.to_string_lossy().into_owned(),
                _ => String::new(),
            }
        })
        .collect();
    let unique: BTreeSet<&String> = stems.iter().collect();
    if unique.len() == stems.len() {
        stems
    } else {
        (1..=paths.len()).map(|i| i.to_string()).collect()
    }
}

pub fn compare_report(paths: &[PathBuf]) -> Result<Report, CliError> {
    if paths.is_empty() {
        return Err(CliError::Config("no result files given".into()));
    }
    let prefixes = qualify(paths);
    let mut tables: Vec<(String, Vec<SweepRow>)> = Vec::new();
    for (path, prefix) in paths.iter().zip(&prefixes) {
        tables.push((prefix.clone(), read_sweep_csv(path)?));
    }
    let axis = |rows: &[SweepRow]| {
        let mut v: Vec<f64> = Vec::new();
        for r in rows {
            if !v.contains(&r.sweep_value) {
                v.push(r.sweep_value);
            }
        }
        v
    };
    let sweep_values = axis(&tables[0].1);
    for ((_, rows), path) in tables.iter().zip(paths).skip(1) {
        if axis(rows) != sweep_values {
            return Err(CliError::Config(format!(
                "{} has a different sweep axis from {}",
                path.display(),
                paths[0].display()
            )));
        }
    }
    let mut strategies = Vec::new();
    for (prefix, rows) in &tables {
        for r in rows {
            let name = if paths.len() > 1 {
                format!("{prefix}/{}", r.strategy)
            } else {
                r.strategy.clone()
            };
            if !strategies.contains(&name) {
                strategies.push(name);
            }
        }
    }
    let mut delays = vec![vec![f64::NAN; strategies.len()]; sweep_values.len()];
    for (prefix, rows) in &tables {
        for r in rows {
            let name = if paths.len() > 1 {
                format!("{prefix}/{}", r.strategy)
            } else {
                r.strategy.clone()
            };
            let i = sweep_values.iter().position(|&v| v == r.sweep_value).expect("value on axis");
            let j = strategies.iter().position(|s| *s == name).expect("known strategy");
            delays[i][j] = r.avg_delay_s;
        }
    }
    Ok(Report {
        strategies,
        sweep_values,
        delays,
    })
}

impl Report {
    pub fn delay(&self, sweep_value: f64, strategy: &str) -> Option<f64> {
        let i = self.sweep_values.iter().position(|&v| v == sweep_value)?;
        let j = self.strategies.iter().position(|s| s == strategy)?;
        Some(self.delays[i][j]).filter(|d| !d.is_nan())
    }

    /// One row per sweep value and strategy pair `a` before `b`, with
    /// `gap = delay_a - delay_b` and the gap relative to `delay_b`.
    pub fn summary_csv(&self) -> String {
        let mut s = String::from(SUMMARY_HEADER);
        s.push('\n');
        for (i, v) in self.sweep_values.iter().enumerate() {
            for a in 0..self.strategies.len() {
                for b in a + 1..self.strategies.len() {
                    let (da, db) = (self.delays[i][a], self.delays[i][b]);
                    if da.is_nan() || db.is_nan() {
                        continue;
                    }
                    let _ = writeln!(
                        s,
                        "{v},{},{},{da:.9e},{db:.9e},{:.9e},{:.9e}",
                        self.strategies[a],
                        self.strategies[b],
                        da - db,
                        (da - db) / db
                    );
                }
            }
        }
        s
    }

    /// `(bp, greedy)` column pairs for the same scheme.
    pub fn bp_greedy_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (b, name) in self.strategies.iter().enumerate() {
            let Some(pos) = name.find("bp-") else { continue };
            let partner = format!("{}greedy-{}", &name[..pos], &name[pos + 3..]);
            if let Some(g) = self.strategies.iter().position(|s| *s == partner) {
                out.push((b, g));
            }
        }
        out
    }

    /// Aligned delay table, followed by BP-vs-greedy relative gaps.
    pub fn text_table(&self) -> String {
        let mut header = vec!["value".to_string()];
        header.extend(self.strategies.iter().cloned());
        let pairs = self.bp_greedy_pairs();
        for &(b, _) in &pairs {
            header.push(format!("gap {}", self.strategies[b]));
        }
        let mut rows = vec![header];
        for (i, v) in self.sweep_values.iter().enumerate() {
            let mut row = vec![v.to_string()];
            row.extend(self.delays[i].iter().map(|d| {
                if d.is_nan() {
                    "-".to_string()
                } else {
                    format!("{d:.4}")
                }
            }));
            for &(b, g) in &pairs {
                let (db, dg) = (self.delays[i][b], self.delays[i][g]);
                row.push(format!("{:+.2}%", 100.0 * (db - dg) / dg));
            }
            rows.push(row);
        }
        let widths: Vec<usize> = (0..rows[0].len())
            .map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0))
            .collect();
        let mut s = String::new();
        for row in rows {
            let cells: Vec<String> = row
                .iter()
                .zip(&widths)
                .map(|(cell, w)| format!("{cell:>w$}"))
                .collect();
            s.push_str(cells.join("  ").trim_end());
            s.push('\n');
        }
        s
    }
}

pub fn write_report(report: &Report, out: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    crate::experiment::write_file(&out.join("summary.csv"), &report.summary_csv())?;
    crate::experiment::write_file(&out.join("summary.txt"), &report.text_table())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    const A: &str = "sweep_value,strategy,avg_delay_s,hit_prob,calc_count,bp_rounds,messages_exchanged\n\
        10,greedy-cotc,2.0e1,0.5,10,0,0\n10,bp-cotc,2.2e1,0.5,100,5,20\n\
        20,greedy-cotc,1.5e1,0.6,20,0,0\n20,bp-cotc,1.5e1,0.6,100,5,20\n";

    #[test]
    fn gaps_within_one_file() {
        let dir = tempfile::tempdir().unwrap();
        let r = compare_report(&[write(dir.path(), "a.csv", A)]).unwrap();
        assert_eq!(r.strategies, vec!["greedy-cotc", "bp-cotc"]);
        assert_eq!(r.bp_greedy_pairs(), vec![(1, 0)]);
        let csv = r.summary_csv();
        assert!(csv.contains("10,greedy-cotc,bp-cotc,2.000000000e1,2.200000000e1,-2.000000000e0"));
        let table = r.text_table();
        assert!(table.contains("+10.00%"));
        assert!(table.contains("+0.00%"));
    }

    #[test]
    fn identical_inputs_have_zero_gaps() {
        let dir = tempfile::tempdir().unwrap();
        let a = write(dir.path(), "a.csv", A);
        let r = compare_report(&[a.clone(), a]).unwrap();
        assert_eq!(r.strategies[0], "1/greedy-cotc");
        let g = r.strategies.iter().position(|s| s == "2/greedy-cotc").unwrap();
        for row in &r.delays {
            assert_eq!(row[0], row[g]);
        }
        assert_eq!(r.delay(20.0, "2/bp-cotc"), Some(15.0));
    }

    #[test]
    fn mismatched_axes_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let a = write(dir.path(), "a.csv", A);
        let b = write(
            dir.path(),
            "b.csv",
            "sweep_value,strategy,avg_delay_s,hit_prob,calc_count,bp_rounds,messages_exchanged\n\
             30,gpc-cotc,3.0e1,0.1,0,0,0\n",
        );
        assert!(matches!(compare_report(&[a, b]), Err(CliError::Config(_))));
        let junk = write(dir.path(), "c.csv", "x,y\n1,2\n");
        assert!(compare_report(&[junk]).is_err());
    }
}
