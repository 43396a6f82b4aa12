use std::io::Write;

use super::curve::{BestOfNCurve, DiffCurve};

/// Writes `sampler,n,expected_max,std_error,repeats` rows for each curve.
pub fn write_curve_csv<W: Write>(out: W, curves: &[BestOfNCurve]) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["sampler", "n", "expected_max", "std_error", "repeats"])?;
    for c in curves {
        for p in &c.points {
            w.write_record([
                c.sampler.as_str().to_string(),
                p.n.to_string(),
                p.expected_max.to_string(),
                p.std_error.to_string(),
                p.repeats.to_string(),
            ])?;
        }
    }
    w.flush()
}

/// Writes `n,expected_diff,std_error,repeats` rows.
pub fn write_diff_csv<W: Write>(out: W, curve: &DiffCurve) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "expected_diff", "std_error", "repeats"])?;
    for p in &curve.points {
        w.write_record([p.n.to_string(), p.expected_diff.to_string(), p.std_error.to_string(), p.repeats.to_string()])?;
    }
    w.flush()
}
