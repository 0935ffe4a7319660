use std::io::{Read, Write};

use crate::error::{Error, Result};

pub const COLUMNS: [&str; 22] = [
    "t",
    "z_cmd",
    "theta_cmd",
    "z_aug",
    "theta_aug",
    "z",
    "theta",
    "w",
    "q",
    "delta_v",
    "delta_m",
    "delta_1",
    "delta_2",
    "delta_3",
    "delta_4",
    "delta_5",
    "f_wave_v",
    "f_wave_m",
    "f_suction_v",
    "f_suction_m",
    "hv_out",
    "hm_out",
];

const ABORT_MARKER: &str = "# aborted: ";

/// One sampled instant of a run.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TraceRow {
    pub t: f64,
    pub z_cmd: f64,
    pub theta_cmd: f64,
    pub z_aug: f64,
    pub theta_aug: f64,
    pub z: f64,
    pub theta: f64,
    pub w: f64,
    pub q: f64,
    pub delta_v: f64,
    pub delta_m: f64,
    /// `δ₁..δ₅`
    pub fins: [f64; 5],
    pub f_wave_v: f64,
    pub f_wave_m: f64,
    pub f_suction_v: f64,
    pub f_suction_m: f64,
    /// Output of the fin-channel band-pass weight (equals `δ_v` without filters).
    pub hv_out: f64,
    pub hm_out: f64,
}

impl TraceRow {
    pub fn to_array(&self) -> [f64; 22] {
        let f = self.fins;
        [
            self.t,
            self.z_cmd,
            self.theta_cmd,
            self.z_aug,
            self.theta_aug,
            self.z,
            self.theta,
            self.w,
            self.q,
            self.delta_v,
            self.delta_m,
            f[0],
            f[1],
            f[2],
            f[3],
            f[4],
            self.f_wave_v,
            self.f_wave_m,
            self.f_suction_v,
            self.f_suction_m,
            self.hv_out,
            self.hm_out,
        ]
    }

    pub fn from_array(v: [f64; 22]) -> Self {
        Self {
            t: v[0],
            z_cmd: v[1],
            theta_cmd: v[2],
            z_aug: v[3],
            theta_aug: v[4],
            z: v[5],
            theta: v[6],
            w: v[7],
            q: v[8],
            delta_v: v[9],
            delta_m: v[10],
            fins: [v[11], v[12], v[13], v[14], v[15]],
            f_wave_v: v[16],
            f_wave_m: v[17],
            f_suction_v: v[18],
            f_suction_m: v[19],
            hv_out: v[20],
            hm_out: v[21],
        }
    }
}

/// Uniformly sampled run output.
#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    /// Time between rows (s).
    pub stride: f64,
    pub rows: Vec<TraceRow>,
    /// Set when the run stopped early.
    pub aborted: Option<String>,
}

impl SimTrace {
    pub fn new(stride: f64) -> Self {
        Self { stride, rows: Vec::new(), aborted: None }
    }

    pub fn column(&self, f: impl Fn(&TraceRow) -> f64) -> Vec<f64> {
        self.rows.iter().map(f).collect()
    }

    pub fn end_time(&self) -> f64 {
        self.rows.last().map(|r| r.t).unwrap_or(0.0)
    }

    /// Strictly increasing time, constant stride, no NaN.
    pub fn check_invariants(&self) -> Result<()> {
        for (i, r) in self.rows.iter().enumerate() {
            if r.to_array().iter().any(|v| v.is_nan()) {
                return Err(Error::NonFinite(format!("trace row {i}")));
            }
        }
        for (i, w) in self.rows.windows(2).enumerate() {
            let dt = w[1].t - w[0].t;
            if !(dt > 0.0) || (dt - self.stride).abs() > 1e-9 * self.stride.max(w[1].t.abs() * 1e-6) {
                return Err(Error::InvalidArgument(format!("irregular time step {dt} after row {i}")));
            }
        }
        Ok(())
    }
}

/// Writes a header row and one row per sample; an aborted run ends with a
/// `# aborted: ...` marker line.
pub fn write_csv<W: Write>(trace: &SimTrace, out: W) -> Result<()> {
    let io = |e: std::io::Error| Error::InvalidArgument(format!("writing trace: {e}"));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COLUMNS).map_err(|e| Error::InvalidArgument(format!("writing trace: {e}")))?;
    let mut buf: Vec<String> = Vec::with_capacity(COLUMNS.len());
    for r in &trace.rows {
        buf.clear();
        buf.extend(r.to_array().iter().map(|v| format!("{v}")));
        w.write_record(&buf).map_err(|e| Error::InvalidArgument(format!("writing trace: {e}")))?;
    }
    w.flush().map_err(io)?;
    let mut inner = w.into_inner().map_err(|e| Error::InvalidArgument(format!("writing trace: {e}")))?;
    if let Some(reason) = &trace.aborted {
        writeln!(inner, "{ABORT_MARKER}{}", reason.replace('\n', " ")).map_err(io)?;
    }
    inner.flush().map_err(io)
}

/// Reads a trace written by [`write_csv`]. The stride is taken from the
/// first two rows.
pub fn read_csv<R: Read>(mut input: R) -> Result<SimTrace> {
    let mut text = String::new();
    input.read_to_string(&mut text).map_err(|e| Error::InvalidArgument(format!("reading trace: {e}")))?;
    let aborted = text.lines().find_map(|l| l.strip_prefix(ABORT_MARKER)).map(str::to_string);
    let mut rd = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let header = rd.headers().map_err(|e| Error::InvalidArgument(format!("trace header: {e}")))?.clone();
    let mut index = [0usize; 22];
    for (k, name) in COLUMNS.iter().enumerate() {
        index[k] = header
            .iter()
            .position(|h| h.trim() == *name)
            .ok_or_else(|| Error::InvalidArgument(format!("trace has no column '{name}'")))?;
    }
    let mut rows = Vec::new();
    for (line, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| Error::InvalidArgument(format!("trace row {}: {e}", line + 2)))?;
        let mut v = [0.0; 22];
        for (k, &col) in index.iter().enumerate() {
            let cell = rec.get(col).unwrap_or("");
            v[k] = cell.trim().parse().map_err(|_| {
                Error::InvalidArgument(format!(
                    "trace row {}: '{cell}' in column '{}' is not a number",
                    line + 2,
                    COLUMNS[k]
                ))
            })?;
        }
        rows.push(TraceRow::from_array(v));
    }
    let stride = if rows.len() >= 2 { rows[1].t - rows[0].t } else { 0.0 };
    Ok(SimTrace { stride, rows, aborted })
}
