//! Trace CSV format.
//!
//! Floats are written with 17 significant digits so that reading a file back
//! gives the same `f64` values.

use std::io::{Read, Write};

use anyhow::{bail, Context};

use crate::solvers::{SolveRecord, SolveTrace};

pub const TRACE_HEADER: [&str; 7] = [
    "iter",
    "objective",
    "eps_bound",
    "support",
    "delta001",
    "step_L",
    "elapsed_ns",
];

fn float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_trace<W: Write>(out: W, trace: &SolveTrace) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for r in &trace.records {
        w.write_record([
            r.iter.to_string(),
            float(r.objective),
            float(r.eps_bound),
            r.support.to_string(),
            r.delta001.to_string(),
            float(r.step_l),
            r.elapsed_ns.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn trace_to_string(trace: &SolveTrace) -> anyhow::Result<String> {
    let mut buf = Vec::new();
    write_trace(&mut buf, trace)?;
    Ok(String::from_utf8(buf)?)
}

pub fn read_trace<R: Read>(input: R) -> anyhow::Result<SolveTrace> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers()?.clone();
    if header.iter().ne(TRACE_HEADER) {
        bail!(
            "unexpected trace header: {}",
            header.iter().collect::<Vec<_>>().join(",")
        );
    }
    let mut records = Vec::new();
    for (line, row) in rdr.records().enumerate() {
        let row = row?;
        let field = |i: usize| row.get(i).unwrap_or("");
        let ctx = || format!("trace row {}", line + 1);
        records.push(SolveRecord {
            iter: field(0).parse().with_context(ctx)?,
            objective: field(1).parse().with_context(ctx)?,
            eps_bound: field(2).parse().with_context(ctx)?,
            support: field(3).parse().with_context(ctx)?,
            delta001: field(4).parse().with_context(ctx)?,
            step_l: field(5).parse().with_context(ctx)?,
            elapsed_ns: field(6).parse().with_context(ctx)?,
        });
    }
    Ok(SolveTrace { records })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lossless_round_trip() {
        let trace = SolveTrace {
            records: vec![
                SolveRecord {
                    iter: 1,
                    objective: 0.1 + 0.2,
                    eps_bound: 1.0 / 3.0,
                    support: 7,
                    delta001: 5,
                    step_l: 4.0,
                    elapsed_ns: 0,
                },
                SolveRecord {
                    iter: 2,
                    objective: f64::MIN_POSITIVE,
                    eps_bound: 5e-324,
                    support: 0,
                    delta001: 0,
                    step_l: 1.7976931348623157e308,
                    elapsed_ns: u64::MAX,
                },
            ],
        };
        let text = trace_to_string(&trace).unwrap();
        assert!(text.starts_with("iter,objective,eps_bound,support,delta001,step_L,elapsed_ns\n"));
        assert_eq!(read_trace(text.as_bytes()).unwrap(), trace);
    }

    #[test]
    fn wrong_header_rejected() {
        assert!(read_trace("a,b\n1,2\n".as_bytes()).is_err());
    }
}
