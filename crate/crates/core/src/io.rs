//! File formats: CSV for signals, spectra, FRF estimates, cost traces, and
//! comparison reports, plus a plain-text form for rational systems.
//!
//! Floats are written with Rust's shortest round-trip formatting, so files
//! written from the same data are byte-identical and parse back exactly.

use num_complex::Complex64;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::estimator::{BinStatus, FrfEstimate, Method};
use crate::lti::RationalSystem;
use crate::refine::{AggregateTrace, BinTrace};
use crate::signals::{RateTag, Spectrum, TimeSignal};

fn file_error(path: &Path, line: Option<usize>, message: impl Into<String>) -> Error {
    Error::File {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| file_error(path, None, e.to_string()))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| file_error(path, None, e.to_string()))
}

struct CsvReader {
    lines: Vec<Vec<String>>,
}

impl CsvReader {
    fn load(path: &Path, header: &str) -> Result<Self> {
        let reader = open(path)?;
        let mut lines = Vec::new();
        let mut saw_header = false;
        for (index, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| file_error(path, Some(index + 1), e.to_string()))?;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            if !saw_header {
                if trimmed != header {
                    return Err(file_error(
                        path,
                        Some(index + 1),
                        format!("expected header '{header}', found '{trimmed}'"),
                    ));
                }
                saw_header = true;
                continue;
            }
            lines.push(trimmed.split(',').map(|s| s.trim().to_string()).collect());
        }
        if !saw_header {
            return Err(file_error(path, None, format!("missing header '{header}'")));
        }
        Ok(Self { lines })
    }

    fn field<T: std::str::FromStr>(
        path: &Path,
        row: &[String],
        line: usize,
        column: usize,
        name: &str,
    ) -> Result<T> {
        let raw = row.get(column).ok_or_else(|| {
            file_error(path, Some(line), format!("missing column '{name}'"))
        })?;
        raw.parse().map_err(|_| {
            file_error(
                path,
                Some(line),
                format!("cannot parse '{raw}' as {name}"),
            )
        })
    }
}

/// Write a time signal as `index,value`.
pub fn write_time_signal(path: &Path, signal: &TimeSignal) -> Result<()> {
    let mut out = create(path)?;
    let mut write = || -> std::io::Result<()> {
        writeln!(out, "index,value")?;
        for (index, value) in signal.samples.iter().enumerate() {
            writeln!(out, "{index},{value}")?;
        }
        out.flush()
    };
    write().map_err(|e| file_error(path, None, e.to_string()))
}

/// Read a time signal written by [`write_time_signal`]; the sampling time
/// and rate tag are not stored in the file and must be supplied.
pub fn read_time_signal(path: &Path, sampling_time: f64, rate: RateTag) -> Result<TimeSignal> {
    let reader = CsvReader::load(path, "index,value")?;
    let mut samples = Vec::with_capacity(reader.lines.len());
    for (offset, row) in reader.lines.iter().enumerate() {
        let line = offset + 2;
        let index: usize = CsvReader::field(path, row, line, 0, "index")?;
        if index != offset {
            return Err(file_error(
                path,
                Some(line),
                format!("expected index {offset}, found {index}"),
            ));
        }
        samples.push(CsvReader::field(path, row, line, 1, "value")?);
    }
    TimeSignal::new(samples, sampling_time, rate)
        .map_err(|e| file_error(path, None, e.to_string()))
}

/// Write a spectrum as `bin,freq_hz,re,im`.
pub fn write_spectrum(path: &Path, spectrum: &Spectrum) -> Result<()> {
    let mut out = create(path)?;
    let mut write = || -> std::io::Result<()> {
        writeln!(out, "bin,freq_hz,re,im")?;
        for (bin, c) in spectrum.coefficients.iter().enumerate() {
            writeln!(out, "{bin},{},{},{}", spectrum.freq_hz(bin), c.re, c.im)?;
        }
        out.flush()
    };
    write().map_err(|e| file_error(path, None, e.to_string()))
}

/// Read a spectrum written by [`write_spectrum`]. The sampling time is
/// recovered from the frequency column.
pub fn read_spectrum(path: &Path, rate: RateTag) -> Result<Spectrum> {
    let reader = CsvReader::load(path, "bin,freq_hz,re,im")?;
    let mut coefficients = Vec::with_capacity(reader.lines.len());
    let mut first_freq = None;
    for (offset, row) in reader.lines.iter().enumerate() {
        let line = offset + 2;
        let bin: usize = CsvReader::field(path, row, line, 0, "bin")?;
        if bin != offset {
            return Err(file_error(
                path,
                Some(line),
                format!("expected bin {offset}, found {bin}"),
            ));
        }
        let freq: f64 = CsvReader::field(path, row, line, 1, "freq_hz")?;
        if bin == 1 {
            first_freq = Some(freq);
        }
        let re: f64 = CsvReader::field(path, row, line, 2, "re")?;
        let im: f64 = CsvReader::field(path, row, line, 3, "im")?;
        coefficients.push(Complex64::new(re, im));
    }
    let n = coefficients.len();
    let spacing = first_freq
        .filter(|f| *f > 0.0)
        .ok_or_else(|| file_error(path, None, "cannot infer sampling time from frequencies"))?;
    let sampling_time = 1.0 / (spacing * n as f64);
    Spectrum::new(coefficients, sampling_time, rate)
        .map_err(|e| file_error(path, None, e.to_string()))
}

/// Write an FRF estimate as `bin,freq_hz,g_re,g_im,variance,status`.
pub fn write_frf(path: &Path, estimate: &FrfEstimate) -> Result<()> {
    let mut out = create(path)?;
    let mut write = || -> std::io::Result<()> {
        writeln!(out, "bin,freq_hz,g_re,g_im,variance,status")?;
        for bin in 0..estimate.n_fast_bins() {
            writeln!(
                out,
                "{bin},{},{},{},{},{}",
                estimate.freq_hz(bin),
                estimate.g[bin].re,
                estimate.g[bin].im,
                estimate.variance[bin],
                estimate.status[bin]
            )?;
        }
        out.flush()
    };
    write().map_err(|e| file_error(path, None, e.to_string()))
}

/// Read an FRF estimate written by [`write_frf`]. The transient and
/// noise-variance blocks are not part of the file format.
pub fn read_frf(path: &Path, method: Method) -> Result<FrfEstimate> {
    let reader = CsvReader::load(path, "bin,freq_hz,g_re,g_im,variance,status")?;
    let mut estimate = FrfEstimate {
        method,
        sampling_time: 0.0,
        g: Vec::with_capacity(reader.lines.len()),
        variance: Vec::with_capacity(reader.lines.len()),
        status: Vec::with_capacity(reader.lines.len()),
        transient: Vec::new(),
        noise_variance: Vec::new(),
        failures: Vec::new(),
    };
    let mut first_freq = None;
    for (offset, row) in reader.lines.iter().enumerate() {
        let line = offset + 2;
        let bin: usize = CsvReader::field(path, row, line, 0, "bin")?;
        if bin != offset {
            return Err(file_error(
                path,
                Some(line),
                format!("expected bin {offset}, found {bin}"),
            ));
        }
        let freq: f64 = CsvReader::field(path, row, line, 1, "freq_hz")?;
        if bin == 1 {
            first_freq = Some(freq);
        }
        let re: f64 = CsvReader::field(path, row, line, 2, "g_re")?;
        let im: f64 = CsvReader::field(path, row, line, 3, "g_im")?;
        estimate.g.push(Complex64::new(re, im));
        estimate
            .variance
            .push(CsvReader::field(path, row, line, 4, "variance")?);
        let status: String = CsvReader::field(path, row, line, 5, "status")?;
        estimate.status.push(
            status
                .parse::<BinStatus>()
                .map_err(|e| file_error(path, Some(line), e.to_string()))?,
        );
    }
    let n = estimate.g.len();
    let spacing = first_freq
        .filter(|f| *f > 0.0)
        .ok_or_else(|| file_error(path, None, "cannot infer sampling time from frequencies"))?;
    estimate.sampling_time = 1.0 / (spacing * n as f64);
    Ok(estimate)
}

/// Write the slow-rate transient and noise-variance estimates as
/// `bin,freq_hz,t_re,t_im,noise_variance`.
pub fn write_transient(path: &Path, estimate: &FrfEstimate) -> Result<()> {
    if estimate.transient.is_empty() {
        return Err(Error::InvalidInput(
            "estimate carries no transient block".into(),
        ));
    }
    let m = estimate.transient.len();
    let slow_sampling = estimate.sampling_time * (estimate.n_fast_bins() / m) as f64;
    let mut out = create(path)?;
    let mut write = || -> std::io::Result<()> {
        writeln!(out, "bin,freq_hz,t_re,t_im,noise_variance")?;
        for bin in 0..m {
            writeln!(
                out,
                "{bin},{},{},{},{}",
                bin as f64 / (m as f64 * slow_sampling),
                estimate.transient[bin].re,
                estimate.transient[bin].im,
                estimate.noise_variance[bin],
            )?;
        }
        out.flush()
    };
    write().map_err(|e| file_error(path, None, e.to_string()))
}

/// Write a rational system with its sampling time as structured text.
pub fn write_rational_system(
    path: &Path,
    sys: &RationalSystem,
    sampling_time: f64,
) -> Result<()> {
    let mut out = create(path)?;
    let join = |c: &[f64]| {
        c.iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(", ")
    };
    let mut write = || -> std::io::Result<()> {
        writeln!(out, "b = [{}]", join(sys.numerator()))?;
        writeln!(out, "a = [{}]", join(sys.denominator()))?;
        writeln!(out, "sampling_time = {sampling_time}")?;
        out.flush()
    };
    write().map_err(|e| file_error(path, None, e.to_string()))
}

/// Read a rational system written by [`write_rational_system`].
pub fn read_rational_system(path: &Path) -> Result<(RationalSystem, f64)> {
    let reader = open(path)?;
    let mut b = None;
    let mut a = None;
    let mut sampling_time = None;
    for (index, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| file_error(path, Some(index + 1), e.to_string()))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (key, value) = trimmed.split_once('=').ok_or_else(|| {
            file_error(path, Some(index + 1), format!("expected 'key = value', found '{trimmed}'"))
        })?;
        let parse_list = |raw: &str| -> Result<Vec<f64>> {
            let inner = raw
                .trim()
                .strip_prefix('[')
                .and_then(|s| s.strip_suffix(']'))
                .ok_or_else(|| {
                    file_error(path, Some(index + 1), format!("expected a [..] list, found '{raw}'"))
                })?;
            inner
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| {
                    s.trim().parse::<f64>().map_err(|_| {
                        file_error(path, Some(index + 1), format!("cannot parse '{s}' as a number"))
                    })
                })
                .collect()
        };
        match key.trim() {
            "b" => b = Some(parse_list(value)?),
            "a" => a = Some(parse_list(value)?),
            "sampling_time" => {
                sampling_time = Some(value.trim().parse::<f64>().map_err(|_| {
                    file_error(path, Some(index + 1), "cannot parse sampling_time")
                })?)
            }
            other => {
                return Err(file_error(
                    path,
                    Some(index + 1),
                    format!("unknown key '{other}'"),
                ))
            }
        }
    }
    let b = b.ok_or_else(|| file_error(path, None, "missing 'b' coefficients"))?;
    let a = a.ok_or_else(|| file_error(path, None, "missing 'a' coefficients"))?;
    let sampling_time =
        sampling_time.ok_or_else(|| file_error(path, None, "missing 'sampling_time'"))?;
    let sys = RationalSystem::new(b, a).map_err(|e| file_error(path, None, e.to_string()))?;
    Ok((sys, sampling_time))
}

/// Write per-bin refinement traces as `bin,iteration,J_SK,J_LS`; rows from
/// the Gauss-Newton pass leave `J_SK` empty.
pub fn write_bin_traces(path: &Path, traces: &[BinTrace]) -> Result<()> {
    let mut out = create(path)?;
    let mut write = || -> std::io::Result<()> {
        writeln!(out, "bin,iteration,J_SK,J_LS")?;
        for trace in traces {
            for (iteration, (j_sk, j_ls)) in
                trace.sk.j_sk.iter().zip(&trace.sk.j_ls).enumerate()
            {
                writeln!(out, "{},{iteration},{j_sk},{j_ls}", trace.slow_bin)?;
            }
            let offset = trace.sk.j_sk.len();
            for (step, j_ls) in trace.lm.iter().enumerate().skip(1) {
                writeln!(out, "{},{},,{j_ls}", trace.slow_bin, offset + step - 1)?;
            }
        }
        out.flush()
    };
    write().map_err(|e| file_error(path, None, e.to_string()))
}

/// Write the aggregate cost trace as `iteration,mu_SK,mu_OE`; `mu_SK` is
/// empty past the SK phase.
pub fn write_aggregate_trace(path: &Path, aggregate: &AggregateTrace) -> Result<()> {
    let mut out = create(path)?;
    let mut write = || -> std::io::Result<()> {
        writeln!(out, "iteration,mu_SK,mu_OE")?;
        for (iteration, mu_oe) in aggregate.mu_oe.iter().enumerate() {
            match aggregate.mu_sk.get(iteration) {
                Some(mu_sk) => writeln!(out, "{iteration},{mu_sk},{mu_oe}")?,
                None => writeln!(out, "{iteration},,{mu_oe}")?,
            }
        }
        out.flush()
    };
    write().map_err(|e| file_error(path, None, e.to_string()))
}

/// One row of a method-comparison report.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub method: String,
    pub n: usize,
    pub cumulative_error: f64,
}

/// Write a comparison report as `method,n,cumulative_error`.
pub fn write_comparison(path: &Path, rows: &[ComparisonRow]) -> Result<()> {
    let mut out = create(path)?;
    let mut write = || -> std::io::Result<()> {
        writeln!(out, "method,n,cumulative_error")?;
        for row in rows {
            writeln!(out, "{},{},{}", row.method, row.n, row.cumulative_error)?;
        }
        out.flush()
    };
    write().map_err(|e| file_error(path, None, e.to_string()))
}
