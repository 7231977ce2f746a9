//! Browser demo: each export takes plain numbers and returns a JSON string.

use cobasis::experiments::{self, random::trial_rng, synthetic_ar1_image, RandomExpConfig};
use cobasis::{descend, EvalFunction, GradOptConfig, Init, Normalization};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
struct SweepPoint {
    p: f64,
    median: f64,
    min: f64,
    max: f64,
}

#[derive(Serialize)]
struct SweepSeries {
    normalization: Normalization,
    points: Vec<SweepPoint>,
}

pub fn ratio_sweep_json(o: usize, trials: usize, seed: u64) -> Result<String, String> {
    let base = RandomExpConfig { o, trials, seed, ..Default::default() };
    let modes = [Normalization::None, Normalization::Rc];
    let records = experiments::run_sweep(&base, &[o], &modes).map_err(|e| e.to_string())?;
    let rows = experiments::aggregate(&records);
    let series: Vec<SweepSeries> = modes
        .iter()
        .map(|&mode| SweepSeries {
            normalization: mode,
            points: rows
                .iter()
                .filter(|r| r.normalized == mode)
                .map(|r| SweepPoint { p: r.p, median: r.median, min: r.min, max: r.max })
                .collect(),
        })
        .collect();
    Ok(serde_json::json!({ "o": o, "series": series }).to_string())
}

pub fn dct_compare_json(rho: f64, count: usize, size: usize, seed: u64) -> Result<String, String> {
    if count == 0 {
        return Err("count must be at least 1".into());
    }
    let mut rng = trial_rng(seed, 0);
    let images = (0..count)
        .map(|_| synthetic_ar1_image(size, size, rho, &mut rng))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let r = experiments::run_dct_experiment(&images, 8, &cobasis::CsvdConfig::default()).map_err(|e| e.to_string())?;
    Ok(serde_json::json!({
        "u": r.basis.u.to_rows(),
        "dct": experiments::dct2_basis(8).to_rows(),
        "u_matching": r.u_alignment.matching,
        "u_scores": r.u_alignment.scores,
        "v_scores": r.v_alignment.scores,
        "grid": r.product_scores(),
        "u_dc_cosine": r.u_dc_cosine,
        "v_dc_cosine": r.v_dc_cosine,
    })
    .to_string())
}

pub fn descent_trace_json(o: usize, seed: u64, eval: &str, init: &str, max_iters: usize) -> Result<String, String> {
    let eval: EvalFunction = eval.parse()?;
    let cfg = RandomExpConfig { o, seed, ..Default::default() };
    let inst = experiments::gen_sparse_set(&cfg, &mut trial_rng(seed, 0)).map_err(|e| e.to_string())?;
    let init = match init {
        "identity" => Init::Identity,
        "csvd" => Init::Csvd(cobasis::CsvdConfig::default()),
        "random" => Init::Random { seed },
        other => return Err(format!("unknown init '{other}'")),
    };
    let opt = GradOptConfig { eval, init, max_iters, ..Default::default() };
    let d = descend(&inst.transformed, &opt).map_err(|e| e.to_string())?;
    let ratio = experiments::eval_ratio(&inst.originals, &inst.transformed, &d.basis).map_err(|e| e.to_string())?;
    Ok(serde_json::json!({
        "objective": d.objectives(),
        "eps": d.trace.iter().map(|t| t.accepted_eps).collect::<Vec<_>>(),
        "stop": d.stop,
        "ratio": ratio,
    })
    .to_string())
}

#[wasm_bindgen]
pub fn ratio_sweep(o: usize, trials: usize, seed: u64) -> Result<String, JsError> {
    ratio_sweep_json(o, trials, seed).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn dct_compare(rho: f64, count: usize, size: usize, seed: u64) -> Result<String, JsError> {
    dct_compare_json(rho, count, size, seed).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn descent_trace(o: usize, seed: u64, eval: &str, init: &str, max_iters: usize) -> Result<String, JsError> {
    descent_trace_json(o, seed, eval, init, max_iters).map_err(|e| JsError::new(&e))
}
