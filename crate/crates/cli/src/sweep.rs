//! Averaging sweeps over a parameter grid.

use rayon::prelude::*;
use roughflow::io::fmt_f64;
use roughflow::slowfast::{averaging_experiment, TrendRow, FAST_ENERGY, HOLDER_SQ, SUP_ERROR, SUP_ERROR_BOUNDED};
use serde_json::json;

use crate::config::{ExperimentConfig, ScalesConfig};
use crate::error::CliError;
use crate::run::{scales_of, setup_of, Defaults, Files};

const METRICS: [&str; 4] = [SUP_ERROR, SUP_ERROR_BOUNDED, HOLDER_SQ, FAST_ENERGY];

/// One grid point `(ε, δ, Δ, n_mc)`; `Δ = None` means the default rule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cell {
    pub eps: f64,
    pub delta: f64,
    pub block: Option<f64>,
    pub n_mc: usize,
}

fn cmp_cell(a: &Cell, b: &Cell) -> std::cmp::Ordering {
    a.eps
        .total_cmp(&b.eps)
        .then(a.delta.total_cmp(&b.delta))
        .then(match (a.block, b.block) {
            (Some(x), Some(y)) => x.total_cmp(&y),
            (x, y) => x.is_some().cmp(&y.is_some()),
        })
        .then(a.n_mc.cmp(&b.n_mc))
}

/// All combinations in lexicographic parameter order.
pub fn cells(eps: &[f64], delta: &[f64], block: Option<&[f64]>, n_mc: &[usize]) -> Vec<Cell> {
    let blocks: Vec<Option<f64>> = match block {
        Some(b) => b.iter().map(|x| Some(*x)).collect(),
        None => vec![None],
    };
    let mut out = Vec::new();
    for &e in eps {
        for &d in delta {
            for &b in &blocks {
                for &n in n_mc {
                    out.push(Cell { eps: e, delta: d, block: b, n_mc: n });
                }
            }
        }
    }
    out.sort_by(cmp_cell);
    out.dedup();
    out
}

pub(crate) fn run_sweep(cfg: &ExperimentConfig, seed: u64, defaults: &mut Defaults) -> Result<Files, CliError> {
    let sw = cfg.sweep.as_ref().expect("checked by the schema");
    for (key, empty) in [("sweep.eps", sw.eps.is_empty()), ("sweep.delta", sw.delta.is_empty()), ("sweep.n_mc", sw.n_mc.is_empty())] {
        if empty {
            return Err(CliError::config(key, "empty list"));
        }
    }
    if sw.block.as_ref().is_some_and(|b| b.is_empty()) {
        return Err(CliError::config("sweep.block", "empty list"));
    }
    let setup = setup_of(cfg, seed, defaults)?;
    let grid = cells(&sw.eps, &sw.delta, sw.block.as_deref(), &sw.n_mc);
    // the default rules are echoed per cell below
    let results: Vec<(Cell, Result<Vec<TrendRow>, String>)> = grid
        .par_iter()
        .map(|c| {
            let s = ScalesConfig { eps: c.eps, delta: c.delta, block: c.block, micro_steps: sw.micro_steps, eps_ratio: sw.eps_ratio };
            let mut local = Defaults::new();
            let res = scales_of(&s, &setup.grid, setup.hurst.beta, "sweep", &mut local)
                .map_err(|e| e.to_string())
                .and_then(|sc| averaging_experiment(&setup, &[sc], c.n_mc, seed).map_err(|e| e.to_string()));
            (*c, res)
        })
        .collect();
    if sw.block.is_none() {
        defaults.insert("sweep.block".into(), json!("default rule, see Delta column"));
    }
    if sw.micro_steps.is_none() {
        defaults.insert("sweep.micro_steps".into(), json!("max(16, ceil(16 h / delta))"));
    }
    if sw.eps_ratio.is_none() {
        defaults.insert("sweep.eps_ratio".into(), json!(roughflow::slowfast::DEFAULT_EPS_RATIO));
    }

    let mut text = String::from("eps,delta,Delta,n_mc,status");
    for m in METRICS {
        text.push_str(&format!(",{m},{m}_stderr"));
    }
    text.push('\n');
    for (c, res) in &results {
        match res {
            Ok(rows) => {
                text.push_str(&format!("{},{},{},{},ok", fmt_f64(c.eps), fmt_f64(c.delta), fmt_f64(rows[0].block), c.n_mc));
                for m in METRICS {
                    let r = rows.iter().find(|r| r.metric == m).expect("metric present");
                    text.push_str(&format!(",{},{}", fmt_f64(r.value), fmt_f64(r.stderr)));
                }
            }
            Err(msg) => {
                let block = c.block.map(fmt_f64).unwrap_or_default();
                let status = format!("\"error: {}\"", msg.replace('"', "'"));
                text.push_str(&format!("{},{},{},{},{}", fmt_f64(c.eps), fmt_f64(c.delta), block, c.n_mc, status));
                text.push_str(&",".repeat(2 * METRICS.len()));
            }
        }
        text.push('\n');
    }
    Ok(vec![("sweep.csv".into(), text.into_bytes())])
}
