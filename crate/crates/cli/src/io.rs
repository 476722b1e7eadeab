//! CSV and JSON files read and written by the commands.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use lasso_core::fdsim::ControlSet;
use lasso_core::graph::{Edge, GraphFunction, LassoGeometry, LassoGrid, SampledFn};
use lasso_core::wave_rep::ControlTrace;

use crate::config::Problem;

/// Relative tolerance on the spacing of sampled columns.
const SPACING_TOL: f64 = 1e-6;

fn reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    csv::Reader::from_path(path).with_context(|| format!("cannot open {}", path.display()))
}

/// First column of a CSV file with a header row.
pub fn read_column(path: &Path) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (i, row) in reader(path)?.records().enumerate() {
        let row = row.with_context(|| format!("{}: bad row {}", path.display(), i + 1))?;
        let v = row.get(0).unwrap_or("").trim();
        out.push(v.parse().with_context(|| format!("{}: row {}: `{v}` is not a number", path.display(), i + 1))?);
    }
    Ok(out)
}

fn check_uniform(path: &Path, what: &str, xs: &[f64], end: Option<f64>) -> Result<f64> {
    if xs.len() < 2 {
        bail!("{}: {what} needs at least two samples", path.display());
    }
    let step = (xs[xs.len() - 1] - xs[0]) / (xs.len() - 1) as f64;
    let uniform = xs.windows(2).all(|w| ((w[1] - w[0]) - step).abs() <= SPACING_TOL * step);
    if xs[0].abs() > SPACING_TOL * step || !uniform || step <= 0.0 {
        bail!("{}: {what} must be sampled uniformly from 0", path.display());
    }
    if let Some(end) = end {
        if (xs[xs.len() - 1] - end).abs() > SPACING_TOL * step {
            bail!("{}: {what} must end at {end}, ends at {}", path.display(), xs[xs.len() - 1]);
        }
    }
    Ok(step)
}

#[derive(Debug, Serialize, Deserialize)]
struct StateRow {
    edge: String,
    x: f64,
    phi1: f64,
    phi2: f64,
}

/// Target pair from rows `edge,x,phi1,phi2`, resampled onto `grid` by linear
/// interpolation.
pub fn read_target(path: &Path, geom: &LassoGeometry, grid: &LassoGrid) -> Result<(GraphFunction, GraphFunction)> {
    let mut edges: BTreeMap<String, Vec<(f64, f64, f64)>> = BTreeMap::new();
    for (i, row) in reader(path)?.deserialize().enumerate() {
        let r: StateRow = row.with_context(|| format!("{}: bad row {}", path.display(), i + 1))?;
        if ![r.x, r.phi1, r.phi2].iter().all(|v| v.is_finite()) {
            bail!("{}: row {} has a non-finite value", path.display(), i + 1);
        }
        edges.entry(r.edge).or_default().push((r.x, r.phi1, r.phi2));
    }
    let mut phi1 = GraphFunction::zeros(grid);
    let mut phi2 = GraphFunction::zeros(grid);
    for edge in Edge::ALL {
        let mut rows = edges.remove(edge.name()).with_context(|| format!("{}: no rows for edge {}", path.display(), edge.name()))?;
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        let xs: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let step = check_uniform(path, edge.name(), &xs, Some(geom.edge_length(edge)))?;
        let f1 = SampledFn::new(step, rows.iter().map(|r| r.1).collect());
        let f2 = SampledFn::new(step, rows.iter().map(|r| r.2).collect());
        for (i, (v1, v2)) in phi1.edge_mut(edge).iter_mut().zip(phi2.edge_mut(edge)).enumerate() {
            let x = i as f64 * grid.h;
            *v1 = f1.eval(x);
            *v2 = f2.eval(x);
        }
    }
    if let Some(name) = edges.keys().next() {
        bail!("{}: unknown edge `{name}`", path.display());
    }
    Ok((phi1, phi2))
}

/// Controls from rows `t,f1,f2[,f3]` sampled uniformly from `t = 0`.
pub fn read_controls(path: &Path, problem: Problem) -> Result<ControlSet> {
    let mut rdr = reader(path)?;
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let want: &[&str] = match problem {
        Problem::P1 => &["t", "f1", "f2"],
        Problem::P2 => &["t", "f1", "f2", "f3"],
    };
    if headers != want {
        bail!("{}: expected columns {} for {problem:?}, found {}", path.display(), want.join(","), headers.join(","));
    }
    let mut cols = vec![Vec::new(); want.len()];
    for (i, row) in rdr.records().enumerate() {
        let row = row.with_context(|| format!("{}: bad row {}", path.display(), i + 1))?;
        for (c, v) in cols.iter_mut().zip(row.iter()) {
            let v: f64 = v.trim().parse().with_context(|| format!("{}: row {}: `{v}` is not a number", path.display(), i + 1))?;
            if !v.is_finite() {
                bail!("{}: row {} has a non-finite value", path.display(), i + 1);
            }
            c.push(v);
        }
    }
    let step = check_uniform(path, "t", &cols[0], None)?;
    let trace = |c: &Vec<f64>| ControlTrace::l2(step, c.clone());
    Ok(match problem {
        Problem::P1 => ControlSet::p1(trace(&cols[1]), trace(&cols[2])),
        Problem::P2 => ControlSet::p2(trace(&cols[1]), trace(&cols[2]), trace(&cols[3])),
    })
}

pub fn write_controls(path: &Path, c: &ControlSet) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    let mut header = vec!["t", "f1", "f2"];
    if c.f3.is_some() {
        header.push("f3");
    }
    w.write_record(&header)?;
    for i in 0..c.f1.values.len() {
        let mut row = vec![i as f64 * c.f1.step, c.f1.values[i], c.f2.values[i]];
        if let Some(f3) = &c.f3 {
            row.push(f3.values[i]);
        }
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Rows `edge,x,<a>,<b>` for a pair of graph functions.
pub fn write_state(path: &Path, names: [&str; 2], a: &GraphFunction, b: &GraphFunction) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    w.write_record(["edge", "x", names[0], names[1]])?;
    for edge in Edge::ALL {
        for (i, (u, v)) in a.edge(edge).iter().zip(b.edge(edge)).enumerate() {
            w.write_record([edge.name().to_string(), (i as f64 * a.h).to_string(), u.to_string(), v.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("cannot write {}", path.display()))
}
