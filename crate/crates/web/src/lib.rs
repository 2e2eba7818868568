//! Browser demo bindings. Every export returns a JSON string; the plain
//! `*_json` functions behind them are ordinary Rust and are tested natively.

use num_traits::ToPrimitive;
use serde::Serialize;
use wasm_bindgen::prelude::*;

use hamming_overfit::bounds::{bound_small, bound_upper_k1, sandwich_k1, small_applicable, BoundReport};
use hamming_overfit::harness::{run_sweep, AttackId, ExperimentConfig};

const MAX_TRIALS: usize = 20_000;
const MAX_SANDWICH_N: usize = 2_000;

#[derive(Serialize)]
struct CurvePoint {
    k: usize,
    mean: f64,
    se: f64,
    bound: f64,
    bound_applies: bool,
}

#[derive(Serialize)]
struct LargeRun {
    n: usize,
    m: usize,
    k: usize,
    t: usize,
    trials: usize,
    mean: f64,
    se: f64,
    baseline: f64,
    bound: Option<f64>,
    bound_realized_t: f64,
    verdict: String,
}

#[derive(Serialize)]
struct SandwichRow {
    n: usize,
    exact: String,
    accuracy: f64,
    lower: f64,
    upper: f64,
    lower_holds: bool,
    upper_holds: bool,
}

fn check_trials(trials: usize) -> Result<(), String> {
    if trials == 0 || trials > MAX_TRIALS {
        return Err(format!("trials must be in 1..={MAX_TRIALS}"));
    }
    Ok(())
}

/// `points` values of k spread evenly over `1..=k_max`, deduplicated.
fn k_grid(k_max: usize, points: usize) -> Vec<usize> {
    let points = points.clamp(1, k_max.max(1));
    let mut ks: Vec<usize> = (0..points)
        .map(|i| {
            if points == 1 {
                k_max
            } else {
                1 + i * (k_max - 1) / (points - 1)
            }
        })
        .collect();
    ks.dedup();
    ks
}

/// Small attack accuracy against `k` on uniform labels, with the lower bound curve.
pub fn accuracy_curve_small_json(
    n: usize,
    m: usize,
    k_max: usize,
    points: usize,
    trials: usize,
    seed: u64,
) -> Result<String, String> {
    check_trials(trials)?;
    if k_max == 0 {
        return Err("k_max must be at least 1".into());
    }
    let mut cfg = ExperimentConfig::new(AttackId::Small, n, m, 1, trials, seed);
    cfg.k = k_grid(k_max.min(n + 1), points);
    let summary = run_sweep(&cfg).map_err(|e| e.to_string())?.summary;
    let curve: Vec<CurvePoint> = summary
        .grid
        .iter()
        .map(|g| CurvePoint {
            k: g.k,
            mean: g.mean,
            se: g.se,
            bound: bound_small(n, m, g.k),
            bound_applies: small_applicable(n, m, g.k),
        })
        .collect();
    serde_json::to_string(&curve).map_err(|e| e.to_string())
}

/// Monte Carlo estimate of the large attack at one point.
pub fn simulate_large_json(n: usize, m: usize, k: usize, trials: usize, seed: u64) -> Result<String, String> {
    check_trials(trials)?;
    let cfg = ExperimentConfig::new(AttackId::Large, n, m, k, trials, seed);
    let summary = run_sweep(&cfg).map_err(|e| e.to_string())?.summary;
    let g = &summary.grid[0];
    let report = BoundReport::new(n, m, k);
    serde_json::to_string(&LargeRun {
        n,
        m,
        k,
        t: g.t.unwrap_or(report.t),
        trials,
        mean: g.mean,
        se: g.se,
        baseline: report.baseline,
        bound: report.lower_large,
        bound_realized_t: report.lower_large_realized_t,
        verdict: g.verdict.to_string(),
    })
    .map_err(|e| e.to_string())
}

/// Exact single-query accuracy for `n = 1..=n_max` between its two bounds.
pub fn exact_k1_sandwich_json(m: usize, n_max: usize) -> Result<String, String> {
    if n_max == 0 || n_max > MAX_SANDWICH_N {
        return Err(format!("n_max must be in 1..={MAX_SANDWICH_N}"));
    }
    let rows = (1..=n_max)
        .map(|n| {
            let s = sandwich_k1(n, m).map_err(|e| e.to_string())?;
            Ok(SandwichRow {
                n,
                exact: s.accuracy.to_string(),
                accuracy: s.accuracy.to_f64().unwrap_or(f64::NAN),
                lower: bound_small(n, m, 1),
                upper: bound_upper_k1(n, m),
                lower_holds: s.lower_holds,
                upper_holds: s.upper_holds,
            })
        })
        .collect::<Result<Vec<_>, String>>()?;
    serde_json::to_string(&rows).map_err(|e| e.to_string())
}

fn js(r: Result<String, String>) -> Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn accuracy_curve_small(
    n: usize,
    m: usize,
    k_max: usize,
    points: usize,
    trials: usize,
    seed: u32,
) -> Result<String, JsValue> {
    js(accuracy_curve_small_json(n, m, k_max, points, trials, seed.into()))
}

#[wasm_bindgen]
pub fn simulate_large(n: usize, m: usize, k: usize, trials: usize, seed: u32) -> Result<String, JsValue> {
    js(simulate_large_json(n, m, k, trials, seed.into()))
}

#[wasm_bindgen]
pub fn exact_k1_sandwich(m: usize, n_max: usize) -> Result<String, JsValue> {
    js(exact_k1_sandwich_json(m, n_max))
}
