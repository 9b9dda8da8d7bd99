//! CSV reports.

use std::io::Write;

use super::chain::ScalarTrace;
use super::estimates::PairInterval;
use crate::error::Result;

pub fn write_coverage_csv<W: Write>(rows: &[PairInterval], mut out: W) -> Result<()> {
    writeln!(out, "pair_w,pair_v,lo,hi,truth,covered")?;
    for r in rows {
        writeln!(out, "{},{},{},{},{},{}", r.w, r.v, r.lo, r.hi, r.truth, u8::from(r.covered))?;
    }
    Ok(())
}

pub fn write_slope_csv<W: Write>(points: &[(u64, f64)], mut out: W) -> Result<()> {
    writeln!(out, "N,rmse")?;
    for (n, r) in points {
        writeln!(out, "{n},{r}")?;
    }
    Ok(())
}

pub fn write_trace_csv<W: Write>(trace: &ScalarTrace, mut out: W) -> Result<()> {
    writeln!(out, "{}", trace.label())?;
    for v in trace.values() {
        writeln!(out, "{v}")?;
    }
    Ok(())
}

/// Two-column `label,<name>` table, one row per trace.
pub fn write_scalar_table<W: Write>(name: &str, rows: &[(String, f64)], mut out: W) -> Result<()> {
    writeln!(out, "label,{name}")?;
    for (label, x) in rows {
        writeln!(out, "{label},{x}")?;
    }
    Ok(())
}
