//! CSV and JSON artifacts.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use certeq_core::closed_loop::Trajectory;
use certeq_core::lin_sys::FirOperator;
use certeq_core::linalg::Vector;
use certeq_core::perception::Dataset;
use certeq_core::synthesis::SlsResponses;
use serde::Serialize;

use crate::grid::GridPoint;
use crate::verify::RateTable;

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    csv::Writer::from_path(path).with_context(|| format!("opening {}", path.display()))
}

fn names(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (0..n).map(move |i| format!("{prefix}{i}"))
}

fn push(row: &mut Vec<String>, v: &Vector) {
    row.extend(v.iter().map(|x| x.to_string()));
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn write_dataset(path: &Path, data: &Dataset) -> Result<()> {
    let mut w = writer(path)?;
    let truth = data.truth();
    let mut header: Vec<String> = names("z", data.q()).chain(names("y", data.p())).collect();
    if truth.is_some() {
        header.extend(names("truth", data.p()));
    }
    w.write_record(&header)?;
    for i in 0..data.len() {
        let mut row = Vec::with_capacity(header.len());
        push(&mut row, &data.observations()[i]);
        push(&mut row, &data.labels()[i]);
        if let Some(t) = truth {
            push(&mut row, &t[i]);
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trajectory(path: &Path, tr: &Trajectory) -> Result<()> {
    let mut w = writer(path)?;
    let dim = |v: &[Vector]| v.first().map_or(0, |x| x.len());
    let (n, m, q, p) = (dim(&tr.states), dim(&tr.inputs), dim(&tr.observations), dim(&tr.perceptions));
    let mut header = vec!["k".to_string()];
    header.extend(names("x", n));
    header.extend(names("u", m));
    header.extend(names("z", q));
    header.extend(names("h", p));
    header.extend(names("xref", n));
    header.push("perception_error".into());
    w.write_record(&header)?;
    for k in 0..tr.len() {
        let mut row = vec![k.to_string()];
        push(&mut row, &tr.states[k]);
        push(&mut row, &tr.inputs[k]);
        push(&mut row, &tr.observations[k]);
        push(&mut row, &tr.perceptions[k]);
        push(&mut row, &tr.references[k]);
        row.push(tr.perception_errors[k].to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_responses(path: &Path, r: &SlsResponses) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["block", "tap", "row", "col", "value"])?;
    let blocks: [(&str, &FirOperator); 4] =
        [("xw", &r.phi_xw), ("xn", &r.phi_xn), ("uw", &r.phi_uw), ("un", &r.phi_un)];
    for (name, op) in blocks {
        for (k, tap) in op.taps().iter().enumerate() {
            for i in 0..tap.nrows() {
                for j in 0..tap.ncols() {
                    w.write_record([name.to_string(), k.to_string(), i.to_string(), j.to_string(), tap[(i, j)].to_string()])?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_grid(path: &Path, points: &[GridPoint]) -> Result<()> {
    let mut w = writer(path)?;
    let p = points.first().map_or(0, |g| g.y.len());
    let mut header: Vec<String> = names("y", p).collect();
    header.push("error".into());
    header.push("coverage".into());
    w.write_record(&header)?;
    for g in points {
        let mut row = Vec::with_capacity(p + 2);
        push(&mut row, &g.y);
        row.push(g.error.to_string());
        row.push(g.coverage.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_rate(path: &Path, t: &RateTable) -> Result<()> {
    let mut w = writer(path)?;
    let mut header = vec!["t".to_string(), "gamma".into(), "eps_mean".into(), "eps_bound".into()];
    header.extend(names("eps_seed", t.eps.len()));
    w.write_record(&header)?;
    for i in 0..t.t.len() {
        let mut row = vec![t.t[i].to_string(), t.gamma[i].to_string(), t.eps_mean[i].to_string(), t.eps_bound[i].to_string()];
        row.extend(t.eps.iter().map(|e| e[i].to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
