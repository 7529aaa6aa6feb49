//! Sampled simulation traces and their CSV form.
//!
//! Rows are decimated; switch and saturation events are recorded
//! undecimated in a separate log so dead-band checks and exact switch
//! counts do not depend on the logging rate. Floats are written with the
//! shortest round-tripping representation, so a trace read back from disk
//! reproduces the in-memory values bit for bit.

use std::io::{BufRead, Write};
use std::path::Path;

use thiserror::Error;

use crate::model::Mode;

pub const CSV_HEADER: &str =
    "t,iL,vo,sigma,p1_true,p2_true,p1_hat,p2_hat,iL_star,vo_star,s_value,h_value";

#[derive(Debug, Error)]
pub enum TraceError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("trace header mismatch: expected {CSV_HEADER:?}, got {0:?}")]
    HeaderMismatch(String),
    #[error("bad trace line {line}: {reason}")]
    BadLine { line: usize, reason: String },
}

/// One undecimated event.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Event {
    /// Mode transition, with the switching function value and band width
    /// at the moment it fired.
    Switch {
        t: f64,
        from: Mode,
        to: Mode,
        s: f64,
        h: f64,
    },
    /// Target update skipped because the estimate was unreachable.
    Saturation { t: f64 },
}

impl Event {
    pub fn time(&self) -> f64 {
        match self {
            Event::Switch { t, .. } | Event::Saturation { t } => *t,
        }
    }
}

/// Column-oriented sampled trace.
#[derive(Clone, Debug, Default)]
pub struct SimTrace {
    pub t: Vec<f64>,
    pub il: Vec<f64>,
    pub vo: Vec<f64>,
    pub sigma: Vec<u8>,
    pub p1_true: Vec<f64>,
    pub p2_true: Vec<f64>,
    pub p1_hat: Vec<f64>,
    pub p2_hat: Vec<f64>,
    pub il_star: Vec<f64>,
    pub vo_star: Vec<f64>,
    pub s_value: Vec<f64>,
    pub h_value: Vec<f64>,
    pub events: Vec<Event>,
}

pub struct Row {
    pub t: f64,
    pub il: f64,
    pub vo: f64,
    pub sigma: Mode,
    pub p1_true: f64,
    pub p2_true: f64,
    pub p1_hat: f64,
    pub p2_hat: f64,
    pub il_star: f64,
    pub vo_star: f64,
    pub s_value: f64,
    pub h_value: f64,
}

impl SimTrace {
    pub fn with_capacity(n: usize) -> Self {
        Self {
            t: Vec::with_capacity(n),
            il: Vec::with_capacity(n),
            vo: Vec::with_capacity(n),
            sigma: Vec::with_capacity(n),
            p1_true: Vec::with_capacity(n),
            p2_true: Vec::with_capacity(n),
            p1_hat: Vec::with_capacity(n),
            p2_hat: Vec::with_capacity(n),
            il_star: Vec::with_capacity(n),
            vo_star: Vec::with_capacity(n),
            s_value: Vec::with_capacity(n),
            h_value: Vec::with_capacity(n),
            events: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Row) {
        self.t.push(row.t);
        self.il.push(row.il);
        self.vo.push(row.vo);
        self.sigma.push(row.sigma.index() as u8);
        self.p1_true.push(row.p1_true);
        self.p2_true.push(row.p2_true);
        self.p1_hat.push(row.p1_hat);
        self.p2_hat.push(row.p2_hat);
        self.il_star.push(row.il_star);
        self.vo_star.push(row.vo_star);
        self.s_value.push(row.s_value);
        self.h_value.push(row.h_value);
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Index range of samples with `t0 <= t <= t1`.
    pub fn window_indices(&self, t0: f64, t1: f64) -> std::ops::Range<usize> {
        let start = self.t.partition_point(|&t| t < t0);
        let end = self.t.partition_point(|&t| t <= t1);
        start..end
    }

    pub fn switch_events(&self) -> impl Iterator<Item = (f64, Mode, Mode, f64, f64)> + '_ {
        self.events.iter().filter_map(|e| match e {
            Event::Switch { t, from, to, s, h } => Some((*t, *from, *to, *s, *h)),
            _ => None,
        })
    }

    pub fn saturation_count(&self) -> usize {
        self.events
            .iter()
            .filter(|e| matches!(e, Event::Saturation { .. }))
            .count()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<(), TraceError> {
        writeln!(w, "{CSV_HEADER}")?;
        for i in 0..self.len() {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                self.t[i],
                self.il[i],
                self.vo[i],
                self.sigma[i],
                self.p1_true[i],
                self.p2_true[i],
                self.p1_hat[i],
                self.p2_hat[i],
                self.il_star[i],
                self.vo_star[i],
                self.s_value[i],
                self.h_value[i],
            )?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<(), TraceError> {
        let file = std::fs::File::create(path)?;
        let mut buf = std::io::BufWriter::new(file);
        self.write_csv(&mut buf)?;
        buf.flush()?;
        Ok(())
    }

    /// Read a trace back from CSV. Events are not part of the file format,
    /// so the event log of a loaded trace is empty.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self, TraceError> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| TraceError::HeaderMismatch(String::new()))??;
        if header.trim() != CSV_HEADER {
            return Err(TraceError::HeaderMismatch(header));
        }
        let mut trace = SimTrace::default();
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut vals = [0.0f64; 12];
            let mut fields = line.split(',');
            for v in vals.iter_mut() {
                let field = fields.next().ok_or_else(|| TraceError::BadLine {
                    line: i + 2,
                    reason: "missing field".into(),
                })?;
                *v = field.trim().parse().map_err(|e| TraceError::BadLine {
                    line: i + 2,
                    reason: format!("{e}: {field:?}"),
                })?;
            }
            if fields.next().is_some() {
                return Err(TraceError::BadLine {
                    line: i + 2,
                    reason: "too many fields".into(),
                });
            }
            trace.push(Row {
                t: vals[0],
                il: vals[1],
                vo: vals[2],
                sigma: Mode::from_index(vals[3] as usize),
                p1_true: vals[4],
                p2_true: vals[5],
                p1_hat: vals[6],
                p2_hat: vals[7],
                il_star: vals[8],
                vo_star: vals[9],
                s_value: vals[10],
                h_value: vals[11],
            });
        }
        Ok(trace)
    }

    pub fn load_csv(path: &Path) -> Result<Self, TraceError> {
        let file = std::fs::File::open(path)?;
        Self::read_csv(std::io::BufReader::new(file))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_trace(n: usize, seed: u64) -> SimTrace {
        let mut rng = StdRng::seed_from_u64(seed);
        let mut trace = SimTrace::with_capacity(n);
        for k in 0..n {
            trace.push(Row {
                t: k as f64 * 1e-6,
                il: rng.gen_range(-100.0..100.0),
                vo: rng.gen_range(0.0..500.0),
                sigma: if rng.gen_bool(0.5) { Mode::On } else { Mode::Off },
                p1_true: rng.gen_range(300.0..400.0),
                p2_true: rng.gen_range(-5.0..25.0),
                p1_hat: rng.gen_range(300.0..400.0),
                p2_hat: rng.gen_range(-5.0..25.0),
                il_star: rng.gen_range(0.0..100.0),
                vo_star: 450.0,
                s_value: rng.gen_range(-1e6..1e6),
                h_value: rng.gen_range(0.0..1e6),
            });
        }
        trace
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let trace = random_trace(300, 42);
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        let back = SimTrace::read_csv(std::io::Cursor::new(&buf)).unwrap();
        assert_eq!(trace.len(), back.len());
        for i in 0..trace.len() {
            assert_eq!(trace.t[i].to_bits(), back.t[i].to_bits());
            assert_eq!(trace.il[i].to_bits(), back.il[i].to_bits());
            assert_eq!(trace.vo[i].to_bits(), back.vo[i].to_bits());
            assert_eq!(trace.sigma[i], back.sigma[i]);
            assert_eq!(trace.s_value[i].to_bits(), back.s_value[i].to_bits());
            assert_eq!(trace.h_value[i].to_bits(), back.h_value[i].to_bits());
        }
    }

    #[test]
    fn header_mismatch_rejected() {
        let text = "time,stuff\n1,2\n";
        assert!(matches!(
            SimTrace::read_csv(std::io::Cursor::new(text)),
            Err(TraceError::HeaderMismatch(_))
        ));
    }

    #[test]
    fn malformed_line_reported_with_number() {
        let text = format!("{CSV_HEADER}\n0,1,2,0,3,4,5,6,7,8,9,10\n0,bad\n");
        match SimTrace::read_csv(std::io::Cursor::new(text.as_bytes())) {
            Err(TraceError::BadLine { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected BadLine, got {other:?}"),
        }
    }

    #[test]
    fn window_indices_are_inclusive() {
        let trace = random_trace(100, 1);
        let w = trace.window_indices(trace.t[10], trace.t[20]);
        assert_eq!(w, 10..21);
        let empty = trace.window_indices(1.0, 2.0);
        assert!(empty.is_empty());
    }
}
