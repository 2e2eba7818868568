use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;

use super::float::format_g17;
use super::sweep::TrialRecord;
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "attack,n,m,k,trial,seed,acc_num,acc_den,acc_float,queries,t,ms";

/// One row per record under [`CSV_HEADER`]. Missing `t` and `ms` are empty.
pub fn write_csv(records: &[TrialRecord], out: &mut dyn Write) -> io::Result<()> {
    let mut buf = String::with_capacity(64 * (records.len() + 1));
    buf.push_str(CSV_HEADER);
    buf.push('\n');
    for r in records {
        let _ = write!(
            buf,
            "{},{},{},{},{},{},{},{},{},{},",
            r.attack,
            r.n,
            r.m,
            r.k,
            r.trial,
            r.seed,
            r.matches,
            r.n,
            format_g17(r.accuracy_f64()),
            r.queries
        );
        if let Some(t) = r.t {
            let _ = write!(buf, "{t}");
        }
        buf.push(',');
        if let Some(ms) = r.ms {
            buf.push_str(&format_g17(ms));
        }
        buf.push('\n');
    }
    out.write_all(buf.as_bytes())
}

/// Pretty JSON followed by a newline.
pub fn write_json<T: Serialize + ?Sized>(value: &T, out: &mut dyn Write) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    text.push('\n');
    out.write_all(text.as_bytes())
}

fn with_file(path: &Path, f: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut file = io::BufWriter::new(std::fs::File::create(path).map_err(io_err)?);
    f(&mut file).map_err(io_err)?;
    file.flush().map_err(io_err)
}

pub fn write_csv_file(records: &[TrialRecord], path: &Path) -> Result<()> {
    with_file(path, |w| write_csv(records, w))
}

pub fn write_json_file<T: Serialize + ?Sized>(value: &T, path: &Path) -> Result<()> {
    with_file(path, |w| write_json(value, w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{run_sweep, AttackId, ExperimentConfig, SweepSummary};

    #[test]
    fn empty_records_give_header_only() {
        let mut out = Vec::new();
        write_csv(&[], &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn single_trial_row() {
        let mut cfg = ExperimentConfig::new(AttackId::Large, 10, 2, 20, 1, 3);
        cfg.force_t = Some(4);
        let r = run_sweep(&cfg).unwrap();
        let mut out = Vec::new();
        write_csv(&r.records, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        let rec = &r.records[0];
        let fields: Vec<_> = lines[1].split(',').collect();
        assert_eq!(fields.len(), 12);
        assert_eq!(fields[0], "large");
        assert_eq!(fields[5], rec.seed.to_string());
        assert_eq!(fields[6].parse::<usize>().unwrap(), rec.matches);
        assert_eq!(fields[7], "10");
        assert_eq!(fields[8].parse::<f64>().unwrap(), rec.matches as f64 / 10.0);
        assert_eq!(fields[10], "4");
        assert_eq!(fields[11], "");
        assert!(text.ends_with('\n'));
    }

    #[test]
    fn summary_round_trips() {
        let mut cfg = ExperimentConfig::new(AttackId::Small, 200, 4, 1, 300, 8);
        cfg.k = vec![1, 5];
        let r = run_sweep(&cfg).unwrap();
        let mut out = Vec::new();
        write_json(&r.summary, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.ends_with("}\n"));
        assert!(text.contains("\"schema\": \"hamming-overfit/1\""));
        let back: SweepSummary = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r.summary);
    }

    #[test]
    fn io_errors_carry_the_path() {
        let err = write_csv_file(&[], Path::new("/nonexistent-dir/x.csv")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir/x.csv"));
    }
}
