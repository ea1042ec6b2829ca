//! Plain-text artifacts: CSV tables with 17 significant digits and pretty JSON.

use std::io::{Read, Write};

use serde::Serialize;

use crate::drivers::CameronMartinControl;
use crate::error::{param, Error, Result};
use crate::grid::{Path, TimeGrid};
use crate::ldp::ProbeRow;
use crate::slowfast::TrendRow;

/// `x` with 17 significant digits, so that parsing returns the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse(format!("{other:?}")),
    }
}

fn parse_f64(s: &str, row: usize) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| Error::Parse(format!("row {row}: `{s}` is not a number")))
}

/// Writes `t, x_0, …, x_{dim-1}` rows.
pub fn write_path_csv<W: Write>(path: &Path, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    let mut header = vec!["t".to_string()];
    header.extend((0..path.dim).map(|c| format!("x_{c}")));
    wr.write_record(&header).map_err(csv_err)?;
    for k in 0..path.len() {
        let mut rec = vec![fmt_f64(path.grid.t(k))];
        rec.extend(path.at(k).iter().map(|v| fmt_f64(*v)));
        wr.write_record(&rec).map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

/// Reads a path written by [`write_path_csv`]; the grid is rebuilt from the
/// time column, which must be uniform and start at zero.
pub fn read_path_csv<R: Read>(r: R) -> Result<Path> {
    let mut rd = csv::Reader::from_reader(r);
    let dim = rd.headers().map_err(csv_err)?.len().saturating_sub(1);
    let mut ts = Vec::new();
    let mut values = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        ts.push(parse_f64(&rec[0], i)?);
        for c in 0..dim {
            values.push(parse_f64(&rec[c + 1], i)?);
        }
    }
    if ts.len() < 2 || ts[0] != 0.0 {
        return Err(Error::Parse("path needs at least two rows starting at t = 0".into()));
    }
    let grid = TimeGrid::new(*ts.last().unwrap(), ts.len() - 1)?;
    check_times(&grid, &ts, 0)?;
    Path::new(grid, dim, values)
}

fn check_times(grid: &TimeGrid, ts: &[f64], offset: usize) -> Result<()> {
    for (k, t) in ts.iter().enumerate() {
        if (t - grid.t(k + offset)).abs() > 1e-9 * grid.horizon {
            return Err(Error::Parse(format!("row {k}: time {t} is off the uniform grid")));
        }
    }
    Ok(())
}

/// Writes one row per step: `t_k, udot_0.., vdot_0..` with `t_k` the left
/// end of the step.
pub fn write_control_csv<W: Write>(ctrl: &CameronMartinControl, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    let mut header = vec!["t".to_string()];
    header.extend((0..ctrl.d).map(|c| format!("udot_{c}")));
    header.extend((0..ctrl.e).map(|c| format!("vdot_{c}")));
    wr.write_record(&header).map_err(csv_err)?;
    for k in 0..ctrl.grid.n_steps {
        let mut rec = vec![fmt_f64(ctrl.grid.t(k))];
        rec.extend(ctrl.udot[k * ctrl.d..(k + 1) * ctrl.d].iter().map(|v| fmt_f64(*v)));
        rec.extend(ctrl.vdot[k * ctrl.e..(k + 1) * ctrl.e].iter().map(|v| fmt_f64(*v)));
        wr.write_record(&rec).map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

/// Reads a control written by [`write_control_csv`] on the given grid.
pub fn read_control_csv<R: Read>(r: R, grid: &TimeGrid, hurst: f64) -> Result<CameronMartinControl> {
    let mut rd = csv::Reader::from_reader(r);
    let headers = rd.headers().map_err(csv_err)?.clone();
    if headers.get(0) != Some("t") {
        return Err(Error::Parse("first column must be `t`".into()));
    }
    let d = headers.iter().filter(|h| h.starts_with("udot_")).count();
    let e = headers.iter().filter(|h| h.starts_with("vdot_")).count();
    if d + e + 1 != headers.len() {
        return Err(Error::Parse("columns must be t, udot_*, vdot_*".into()));
    }
    let mut ts = Vec::new();
    let (mut udot, mut vdot) = (Vec::new(), Vec::new());
    for (i, rec) in rd.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        ts.push(parse_f64(&rec[0], i)?);
        for c in 0..d {
            udot.push(parse_f64(&rec[1 + c], i)?);
        }
        for c in 0..e {
            vdot.push(parse_f64(&rec[1 + d + c], i)?);
        }
    }
    if ts.len() != grid.n_steps {
        return Err(param("control", format!("expected {} rows, found {}", grid.n_steps, ts.len())));
    }
    check_times(grid, &ts, 0)?;
    CameronMartinControl::new(*grid, hurst, d, e, udot, vdot)
}

/// Trend table with columns `eps, delta, Delta, metric, value, stderr, n_mc`.
pub fn write_trend_csv<W: Write>(rows: &[TrendRow], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["eps", "delta", "Delta", "metric", "value", "stderr", "n_mc"]).map_err(csv_err)?;
    for r in rows {
        wr.write_record([
            fmt_f64(r.eps),
            fmt_f64(r.delta),
            fmt_f64(r.block),
            r.metric.clone(),
            fmt_f64(r.value),
            fmt_f64(r.stderr),
            r.n_mc.to_string(),
        ])
        .map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

/// Probe table; missing logarithms are left empty.
pub fn write_probe_csv<W: Write>(rows: &[ProbeRow], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["eps", "delta", "estimator", "n_mc", "hits", "p_hat", "stderr", "neg_eps_log_p", "log_stderr", "p_upper"])
        .map_err(csv_err)?;
    let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_default();
    for r in rows {
        let est = match r.estimator {
            crate::ldp::Estimator::Plain => "plain",
            crate::ldp::Estimator::ImportanceSampled => "importance-sampled",
        };
        wr.write_record([
            fmt_f64(r.eps),
            fmt_f64(r.delta),
            est.to_string(),
            r.n_mc.to_string(),
            r.hits.to_string(),
            fmt_f64(r.p_hat),
            fmt_f64(r.stderr),
            opt(r.neg_eps_log_p),
            opt(r.log_stderr),
            opt(r.p_upper),
        ])
        .map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

/// Pretty JSON. `serde_json` prints floats in shortest round-trip form.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)?)
}
