//! Text formats for envelopes, arrival histograms, event streams and delay
//! observations.
//!
//! Envelopes and histograms share one layout: `# key: value` metadata lines,
//! a `time_s,value` header, then one row per sample or bin. Histogram rows
//! carry the bin start time and an integer count.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::source::{EmissionEvent, PhotonKind};
use crate::vapor::DelayObservation;
use crate::wavepacket::{ArrivalHistogram, Normalization, TemporalEnvelope};

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    if v == 0.0 || (1e-3..1e6).contains(&v.abs()) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

struct Table {
    meta: Vec<(usize, String, String)>,
    rows: Vec<(usize, csv::StringRecord)>,
}

impl Table {
    fn meta(&self, key: &str) -> Option<(usize, &str)> {
        self.meta
            .iter()
            .find(|(_, k, _)| k == key)
            .map(|(line, _, v)| (*line, v.as_str()))
    }

    fn meta_f64(&self, key: &str) -> Result<Option<f64>> {
        match self.meta(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::format(line, format!("metadata '{key}' is not a number: '{v}'"))),
        }
    }
}

fn read_table<R: Read>(mut input: R, header: &[&str]) -> Result<Table> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let meta = text
        .lines()
        .enumerate()
        .filter_map(|(i, l)| {
            let body = l.trim_start().strip_prefix('#')?;
            let (k, v) = body.split_once(':')?;
            Some((i + 1, k.trim().to_string(), v.trim().to_string()))
        })
        .collect();

    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let found = rdr.headers().map_err(|e| csv_error(e, 1))?.clone();
    let header_line = text
        .lines()
        .position(|l| !l.trim_start().starts_with('#') && !l.trim().is_empty())
        .map_or(1, |i| i + 1);
    if found.iter().collect::<Vec<_>>() != header {
        return Err(Error::format(
            header_line,
            format!("expected header '{}', found '{}'", header.join(","), found.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(e, 0))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != header.len() {
            return Err(Error::format(
                line,
                format!("expected {} fields, found {}", header.len(), rec.len()),
            ));
        }
        rows.push((line, rec));
    }
    Ok(Table { meta, rows })
}

fn csv_error(e: csv::Error, fallback_line: usize) -> Error {
    let line = e.position().map_or(fallback_line, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::format(line, format!("{other:?}")),
    }
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, line: usize, i: usize, name: &str) -> Result<T> {
    let raw = &rec[i];
    raw.parse()
        .map_err(|_| Error::format(line, format!("column '{name}' has invalid value '{raw}'")))
}

fn write_all(mut out: impl Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes())?;
    Ok(())
}

pub fn write_envelope(out: impl Write, env: &TemporalEnvelope) -> Result<()> {
    let norm = match env.normalization {
        Normalization::Area => "area",
        Normalization::Raw => "raw",
    };
    let mut s = format!(
        "# kind: envelope\n# dt_s: {}\n# t_start_s: {}\n# normalization: {norm}\ntime_s,value\n",
        fmt_f64(env.dt),
        fmt_f64(env.t_start)
    );
    for (i, v) in env.samples.iter().enumerate() {
        s.push_str(&format!("{},{}\n", fmt_f64(env.time(i)), fmt_f64(*v)));
    }
    write_all(out, &s)
}

/// Reads an envelope file. Without `dt_s`/`t_start_s` metadata the grid is
/// taken from the time column, which must then be uniform.
pub fn read_envelope(input: impl Read) -> Result<TemporalEnvelope> {
    let t = read_table(input, &["time_s", "value"])?;
    if let Some((line, kind)) = t.meta("kind") {
        if kind != "envelope" {
            return Err(Error::format(line, format!("expected an envelope file, found kind '{kind}'")));
        }
    }
    let mut times = Vec::with_capacity(t.rows.len());
    let mut samples = Vec::with_capacity(t.rows.len());
    for (line, rec) in &t.rows {
        times.push(field::<f64>(rec, *line, 0, "time_s")?);
        let v: f64 = field(rec, *line, 1, "value")?;
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::format(*line, format!("intensity {v} must be finite and non-negative")));
        }
        samples.push(v);
    }
    let t_start = match t.meta_f64("t_start_s")? {
        Some(v) => v,
        None => *times.first().ok_or_else(|| Error::format(1, "envelope file has no samples"))?,
    };
    let dt = match t.meta_f64("dt_s")? {
        Some(v) => v,
        None if times.len() >= 2 => times[1] - times[0],
        None => return Err(Error::format(1, "single-sample envelope needs dt_s metadata")),
    };
    if !(dt > 0.0) {
        return Err(Error::format(t.meta("dt_s").map_or(1, |m| m.0), format!("dt_s = {dt} must be positive")));
    }
    for (i, (tt, (line, _))) in times.iter().zip(&t.rows).enumerate() {
        let want = t_start + i as f64 * dt;
        if (tt - want).abs() > 1e-3 * dt {
            return Err(Error::format(*line, format!("time {tt} s is off the uniform grid (expected {want} s)")));
        }
    }
    let normalization = match t.meta("normalization") {
        None | Some((_, "raw")) => Normalization::Raw,
        Some((_, "area")) => Normalization::Area,
        Some((line, other)) => return Err(Error::format(line, format!("unknown normalization '{other}'"))),
    };
    let env = TemporalEnvelope {
        samples,
        dt,
        t_start,
        normalization,
    };
    env.validate()?;
    Ok(env)
}

pub fn write_histogram(out: impl Write, h: &ArrivalHistogram) -> Result<()> {
    let mut s = format!(
        "# kind: histogram\n# bin_width_s: {}\n# t0_s: {}\n# total_counts: {}\ntime_s,value\n",
        fmt_f64(h.bin_width()),
        fmt_f64(h.t0()),
        h.total()
    );
    for (k, c) in h.counts.iter().enumerate() {
        s.push_str(&format!("{},{c}\n", fmt_f64(h.bin_start(k))));
    }
    write_all(out, &s)
}

/// Reads a histogram file; the time column holds bin start times.
pub fn read_histogram(input: impl Read) -> Result<ArrivalHistogram> {
    let t = read_table(input, &["time_s", "value"])?;
    match t.meta("kind") {
        Some((_, "histogram")) => {}
        Some((line, kind)) => {
            return Err(Error::format(line, format!("expected a histogram file, found kind '{kind}'")))
        }
        None => return Err(Error::format(1, "histogram file lacks '# kind: histogram'")),
    }
    let bw = t
        .meta_f64("bin_width_s")?
        .ok_or_else(|| Error::format(1, "histogram file lacks bin_width_s metadata"))?;
    let t0 = t.meta_f64("t0_s")?.unwrap_or(0.0);
    let mut h = ArrivalHistogram::new(bw, Vec::with_capacity(t.rows.len()), t0)
        .map_err(|e| Error::format(t.meta("bin_width_s").map_or(1, |m| m.0), e.to_string()))?;
    for (k, (line, rec)) in t.rows.iter().enumerate() {
        let time: f64 = field(rec, *line, 0, "time_s")?;
        if (time - h.bin_start(k)).abs() > 1e-3 * h.bin_width() {
            return Err(Error::format(*line, format!("bin time {time} s does not match bin {k}")));
        }
        h.counts.push(field(rec, *line, 1, "value")?);
    }
    Ok(h)
}

pub fn write_events(out: impl Write, events: &[EmissionEvent]) -> Result<()> {
    let mut s = String::from("cycle,time_s,kind,detected\n");
    for e in events {
        s.push_str(&format!(
            "{},{},{},{}\n",
            e.cycle,
            fmt_f64(e.time),
            e.kind.as_str(),
            u8::from(e.detected)
        ));
    }
    write_all(out, &s)
}

pub fn read_events(input: impl Read) -> Result<Vec<EmissionEvent>> {
    let t = read_table(input, &["cycle", "time_s", "kind", "detected"])?;
    t.rows
        .iter()
        .map(|(line, rec)| {
            let kind: PhotonKind = rec[2]
                .parse()
                .map_err(|_| Error::format(*line, format!("unknown photon kind '{}'", &rec[2])))?;
            let detected = match &rec[3] {
                "1" | "true" => true,
                "0" | "false" => false,
                other => return Err(Error::format(*line, format!("detected flag '{other}' is not 0 or 1"))),
            };
            Ok(EmissionEvent {
                cycle: field(rec, *line, 0, "cycle")?,
                time: field(rec, *line, 1, "time_s")?,
                kind,
                detected,
            })
        })
        .collect()
}

/// Reads `temperature_K,delay_ns` rows into observations in SI units.
pub fn read_observations(input: impl Read) -> Result<Vec<DelayObservation>> {
    let t = read_table(input, &["temperature_K", "delay_ns"])?;
    if t.rows.is_empty() {
        return Err(Error::format(1, "observation file has no rows"));
    }
    t.rows
        .iter()
        .map(|(line, rec)| {
            let temperature: f64 = field(rec, *line, 0, "temperature_K")?;
            let delay_ns: f64 = field(rec, *line, 1, "delay_ns")?;
            if !(temperature > 0.0) || !delay_ns.is_finite() {
                return Err(Error::format(*line, "temperature must be positive and delay finite"));
            }
            Ok(DelayObservation {
                temperature,
                delay: delay_ns * 1e-9,
            })
        })
        .collect()
}

pub fn write_observations(out: impl Write, obs: &[DelayObservation]) -> Result<()> {
    let mut s = String::from("temperature_K,delay_ns\n");
    for o in obs {
        s.push_str(&format!("{},{}\n", fmt_f64(o.temperature), fmt_f64(o.delay * 1e9)));
    }
    write_all(out, &s)
}

/// Reads `pump_W,noise_cps` rows.
pub fn read_noise_points(input: impl Read) -> Result<Vec<(f64, f64)>> {
    let t = read_table(input, &["pump_W", "noise_cps"])?;
    t.rows
        .iter()
        .map(|(line, rec)| Ok((field(rec, *line, 0, "pump_W")?, field(rec, *line, 1, "noise_cps")?)))
        .collect()
}
