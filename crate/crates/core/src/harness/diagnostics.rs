//! Per-step diagnostics and their CSV form.

use std::io::Write;

/// Fixed column layout of the diagnostics CSV.
pub const CSV_HEADER: [&str; 9] = [
    "step",
    "time",
    "min_u",
    "max_u",
    "mass",
    "energy",
    "dynamics",
    "newton_iters",
    "residual",
];

/// Summary of one accepted time step (step 0 is the initial state).
///
/// `min_w`/`max_w` are tracked for the coupled solver but not written to
/// the CSV.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiagnosticsRecord {
    pub step: usize,
    pub time: f64,
    pub min_u: f64,
    pub max_u: f64,
    /// `Σ |K| u_K`.
    pub mass: f64,
    pub energy: f64,
    /// `‖u^{m+1} − u^m‖_∞ / ‖u^m‖_∞`; zero on the initial row.
    pub dynamics: f64,
    pub newton_iters: usize,
    pub residual: f64,
    pub min_w: Option<f64>,
    pub max_w: Option<f64>,
}

/// Relative sup-norm change between two consecutive states.
pub fn dynamics(new: &[f64], old: &[f64]) -> f64 {
    let diff = new.iter().zip(old).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    let norm = old.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if norm > 0.0 {
        diff / norm
    } else {
        diff
    }
}

/// Streams records as CSV rows with the fixed header.
pub struct CsvSink<W: Write> {
    writer: csv::Writer<W>,
}

impl<W: Write> CsvSink<W> {
    pub fn new(inner: W) -> csv::Result<Self> {
        let mut writer = csv::Writer::from_writer(inner);
        writer.write_record(CSV_HEADER)?;
        Ok(Self { writer })
    }

    pub fn write(&mut self, r: &DiagnosticsRecord) -> csv::Result<()> {
        self.writer.write_record([
            r.step.to_string(),
            format!("{:.12e}", r.time),
            format!("{:.12e}", r.min_u),
            format!("{:.12e}", r.max_u),
            format!("{:.16e}", r.mass),
            format!("{:.16e}", r.energy),
            format!("{:.12e}", r.dynamics),
            r.newton_iters.to_string(),
            format!("{:.6e}", r.residual),
        ])
    }

    pub fn flush(&mut self) -> std::io::Result<()> {
        self.writer.flush()
    }

    pub fn into_inner(self) -> Result<W, String> {
        self.writer.into_inner().map_err(|e| e.to_string())
    }
}

/// Parse a diagnostics CSV back into `(step, [time, min_u, max_u, mass,
/// energy, dynamics, newton_iters, residual])` rows.
pub fn read_csv(text: &str) -> Result<Vec<(usize, [f64; 8])>, String> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| e.to_string())?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(format!("unexpected header {header:?}"));
    }
    reader
        .records()
        .map(|rec| {
            let rec = rec.map_err(|e| e.to_string())?;
            let step = rec[0].parse().map_err(|e| format!("step: {e}"))?;
            let mut vals = [0.0; 8];
            for (i, v) in vals.iter_mut().enumerate() {
                *v = rec[i + 1].parse().map_err(|e| format!("column {}: {e}", i + 1))?;
            }
            Ok((step, vals))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(step: usize) -> DiagnosticsRecord {
        DiagnosticsRecord {
            step,
            time: step as f64 * 1e-6,
            min_u: -1.5e-12,
            max_u: 1.0,
            mass: 0.25132741228718345,
            energy: 0.0123,
            dynamics: 0.0,
            newton_iters: 3,
            residual: 4.2e-13,
            min_w: None,
            max_w: None,
        }
    }

    #[test]
    fn csv_round_trip() {
        let mut sink = CsvSink::new(Vec::new()).unwrap();
        for s in 0..3 {
            sink.write(&record(s)).unwrap();
        }
        let text = String::from_utf8(sink.into_inner().unwrap()).unwrap();
        assert!(text.starts_with("step,time,min_u,max_u,mass,energy,dynamics,newton_iters,residual\n"));
        assert!(text.lines().nth(1).unwrap().contains("e"));
        let rows = read_csv(&text).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[2].0, 2);
        assert_eq!(rows[1].1[3], 0.25132741228718345);
        assert_eq!(rows[0].1[6], 3.0);
    }

    #[test]
    fn dynamics_metric() {
        assert_eq!(dynamics(&[1.0, 2.0], &[1.0, 2.0]), 0.0);
        assert_eq!(dynamics(&[1.0, 3.0], &[1.0, 2.0]), 0.5);
        assert_eq!(dynamics(&[0.1], &[0.0]), 0.1);
    }
}
