use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use cobasis::experiments::{self, pgm, random::trial_rng, GrayImage, RandomExpConfig};
use cobasis::matkit::sym_eigen;
use cobasis::orthopt::{Descent, STOP_WINDOW};
use cobasis::{
    coefficients, csvd_detailed, descend, mean_svd, mixing_diagnostic, BasisPair, CsvdConfig, EvalFunction,
    GradOptConfig, Init, Mat, Normalization,
};
use serde_json::json;

use crate::error::CliError;
use crate::format::{LoadedSet, MatrixSetFile};
use crate::manifest::{io_err, read_manifest, sha256_hex, OutputDir, RunManifest};
use crate::{
    Cli, Command, DctArgs, DecomposeArgs, EvalArg, ExperimentCommand, InitArg, MethodArg, OptimizeArgs, RandomArgs,
    ReplayArgs, SweepNormalizeArg,
};

pub fn dispatch(cli: Cli, raw_args: &[String]) -> Result<(), CliError> {
    match cli.command {
        Command::Decompose(a) => decompose(&a, raw_args),
        Command::Optimize(a) => optimize(&a, raw_args),
        Command::Experiment(ExperimentCommand::Random(a)) => experiment_random(&a, raw_args),
        Command::Experiment(ExperimentCommand::Dct(a)) => experiment_dct(&a, raw_args),
        Command::Replay(a) => replay(&a),
    }
}

/// Drops `--out`, pins the resolved seed so environment overrides replay too.
fn reproducible_args(raw: &[String], seed: Option<u64>) -> Vec<String> {
    let mut out = Vec::with_capacity(raw.len() + 2);
    let mut skip_next = false;
    for a in raw {
        if skip_next {
            skip_next = false;
            continue;
        }
        if a == "--out" {
            skip_next = true;
            continue;
        }
        if a.starts_with("--out=") {
            continue;
        }
        out.push(a.clone());
    }
    if let Some(seed) = seed {
        if !out.iter().any(|a| a == "--seed" || a.starts_with("--seed=")) {
            out.push("--seed".into());
            out.push(seed.to_string());
        }
    }
    out
}

fn manifest(command: &str, raw: &[String], config: serde_json::Value, seed: Option<u64>) -> RunManifest {
    RunManifest {
        tool: "cobasis".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: command.into(),
        args: reproducible_args(raw, seed),
        config,
        seed,
        inputs: BTreeMap::new(),
        artifacts: BTreeMap::new(),
        notes: Vec::new(),
    }
}

fn load_set(path: &Path) -> Result<(LoadedSet, String), CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let loaded = MatrixSetFile::parse(&text)
        .map_err(|e| match e {
            CliError::Parse(msg) => CliError::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })?
        .validate()?;
    Ok((loaded, sha256_hex(text.as_bytes())))
}

fn write_basis(out: &mut OutputDir, basis: &BasisPair) -> Result<(), CliError> {
    out.write_str("u.json", &MatrixSetFile::single(&basis.u).to_json())?;
    out.write_str("v.json", &MatrixSetFile::single(&basis.v).to_json())
}

fn json_pretty(value: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("json value serializes");
    s.push('\n');
    s
}

fn spectrum_csv(u_values: &[f64], v_values: &[f64]) -> String {
    let mut s = String::from("side,index,eigenvalue\n");
    for (side, values) in [("u", u_values), ("v", v_values)] {
        for (i, x) in values.iter().enumerate() {
            writeln!(s, "{side},{i},{x}").unwrap();
        }
    }
    s
}

fn decompose(a: &DecomposeArgs, raw: &[String]) -> Result<(), CliError> {
    let cfg = CsvdConfig::new(a.p, a.q, a.normalize.into())?;
    let (loaded, digest) = load_set(&a.input)?;
    let set = loaded.set;

    let (basis, u_values, v_values) = match a.method {
        MethodArg::Csvd => {
            let out = csvd_detailed(&set, &cfg)?;
            (out.basis, out.u_eigenvalues, out.v_eigenvalues)
        }
        MethodArg::MeanSvd => {
            let normalized = set.normalized(cfg.normalization);
            let basis = mean_svd(&normalized)?;
            let (n, m) = set.shape();
            let mut avg = Mat::zeros(n, m);
            for (x, w) in normalized.iter() {
                avg.add_scaled(w, x).map_err(|e| CliError::Numeric(e.to_string()))?;
            }
            let eu = sym_eigen(&avg.gram_rows()).map_err(|e| CliError::Numeric(e.to_string()))?;
            let ev = sym_eigen(&avg.gram_cols()).map_err(|e| CliError::Numeric(e.to_string()))?;
            (basis, eu.values, ev.values)
        }
    };
    let coeffs = coefficients(&set, &basis, cfg.normalization)?;
    let diag = mixing_diagnostic(&set, &basis, &cfg)?;

    let mut out = OutputDir::create(&a.out)?;
    write_basis(&mut out, &basis)?;
    out.write_str(
        "coefficients.json",
        &MatrixSetFile::from_mats(coeffs.matrices(), Some(set.weights().to_vec())).to_json(),
    )?;
    out.write_str("eigenvalues.csv", &spectrum_csv(&u_values, &v_values))?;
    out.write_str("diagnostic.json", &json_pretty(&serde_json::to_value(diag).expect("plain struct")))?;

    let method = match a.method {
        MethodArg::Csvd => "csvd",
        MethodArg::MeanSvd => "mean-svd",
    };
    let mut m = manifest("decompose", raw, json!({ "method": method, "csvd": cfg }), None);
    m.inputs.insert(a.input.display().to_string(), digest);
    if loaded.weights_defaulted {
        m.notes.push("weights field absent: constant weights 1 assumed".into());
    }
    out.finish(m)?;
    Ok(())
}

fn trace_csv(d: &Descent) -> String {
    let mut s = String::from("iter,objective,accepted_eps\n");
    for t in &d.trace {
        writeln!(s, "{},{},{}", t.iter, t.objective, t.accepted_eps).unwrap();
    }
    s
}

fn optimize(a: &OptimizeArgs, raw: &[String]) -> Result<(), CliError> {
    let normalization: Normalization = a.normalize.into();
    let (loaded, digest) = load_set(&a.input)?;
    let (n, m) = loaded.set.shape();
    if a.symmetric && n != m {
        return Err(CliError::Input(format!("--symmetric requires square matrices, got {n}x{m}")));
    }
    let set = loaded.set.normalized(normalization);
    let init = match a.init {
        InitArg::Identity => Init::Identity,
        // matrices are already normalized above
        InitArg::Csvd => Init::Csvd(CsvdConfig::new(a.p, a.q, Normalization::None)?),
        InitArg::Random => Init::Random { seed: a.seed },
    };
    let eval = match a.eval {
        EvalArg::Abs => EvalFunction::Abs,
        EvalArg::Pow4 => EvalFunction::NegPow4,
        EvalArg::Square => EvalFunction::Square,
    };
    let cfg = GradOptConfig {
        eval,
        step_candidates: a.eps_grid.clone(),
        max_iters: a.steps,
        rel_tol: a.rel_tol,
        symmetric: a.symmetric,
        init,
    };
    let result = descend(&set, &cfg)?;

    let mut out = OutputDir::create(&a.out)?;
    write_basis(&mut out, &result.basis)?;
    out.write_str("trace.csv", &trace_csv(&result))?;
    let summary = json!({
        "stop": result.stop,
        "iterations": result.iterations,
        "accepted_steps": result.trace.len() - 1,
        "initial_objective": result.initial_objective(),
        "final_objective": result.final_objective(),
        "u_orthogonality_error": result.basis.u.orthogonality_error(),
        "v_orthogonality_error": result.basis.v.orthogonality_error(),
    });
    out.write_str("summary.json", &json_pretty(&summary))?;

    let config = json!({ "descent": cfg, "normalization": normalization, "stop_window": STOP_WINDOW });
    let mut man = manifest("optimize", raw, config, Some(a.seed));
    man.inputs.insert(a.input.display().to_string(), digest);
    if loaded.weights_defaulted {
        man.notes.push("weights field absent: constant weights 1 assumed".into());
    }
    out.finish(man)?;
    Ok(())
}

fn experiment_random(a: &RandomArgs, raw: &[String]) -> Result<(), CliError> {
    let o_values: Vec<usize> = match a.o {
        Some(o) => vec![o],
        None => a.o_range.clone(),
    };
    let modes: Vec<Normalization> = match a.normalize {
        SweepNormalizeArg::None => vec![Normalization::None],
        SweepNormalizeArg::Rc => vec![Normalization::Rc],
        SweepNormalizeArg::RcScaled => vec![Normalization::RcScaled],
        SweepNormalizeArg::Both => vec![Normalization::None, Normalization::Rc],
    };
    let base = RandomExpConfig {
        n: a.n,
        k: a.k,
        o: o_values.first().copied().unwrap_or(1),
        p_grid: a.p_grid.clone(),
        trials: a.trials,
        normalization: modes[0],
        seed: a.seed,
    };
    let records = experiments::run_sweep(&base, &o_values, &modes)?;
    let rows = experiments::aggregate(&records);

    let mut csv = String::from("o,p,trial,normalized,ratio\n");
    for r in &records {
        writeln!(csv, "{},{},{},{},{}", r.o, r.p, r.trial, r.normalized, r.ratio).unwrap();
    }
    let mut agg = String::from("o,normalized,p,median,min,max,count\n");
    for r in &rows {
        writeln!(agg, "{},{},{},{},{},{},{}", r.o, r.normalized, r.p, r.median, r.min, r.max, r.count).unwrap();
    }

    let mut out = OutputDir::create(&a.out)?;
    out.write_str("records.csv", &csv)?;
    out.write_str("records.json", &json_pretty(&serde_json::to_value(&records).expect("records serialize")))?;
    out.write_str("aggregate.csv", &agg)?;
    let config = json!({
        "n": a.n, "K": a.k, "o": o_values, "p_grid": a.p_grid, "trials": a.trials,
        "normalizations": modes, "q": 1.0, "weights": "constant",
    });
    out.finish(manifest("experiment random", raw, config, Some(a.seed)))?;
    Ok(())
}

fn load_images(dir: &Path) -> Result<(Vec<GrayImage>, BTreeMap<String, String>), CliError> {
    if !dir.is_dir() {
        return Err(CliError::Io(format!("{}: image directory not found", dir.display())));
    }
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| io_err(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().and_then(|x| x.to_str()).is_some_and(|x| x.eq_ignore_ascii_case("pgm")))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::Image(format!("{}: no .pgm files", dir.display())));
    }
    let mut images = Vec::with_capacity(paths.len());
    let mut digests = BTreeMap::new();
    for p in &paths {
        let bytes = fs::read(p).map_err(|e| io_err(p, e))?;
        let img = pgm::parse_pgm(&bytes).map_err(|e| CliError::Image(format!("{}: {e}", p.display())))?;
        digests.insert(p.display().to_string(), sha256_hex(&bytes));
        images.push(img);
    }
    Ok((images, digests))
}

fn experiment_dct(a: &DctArgs, raw: &[String]) -> Result<(), CliError> {
    let cfg = CsvdConfig::new(a.p, a.q, a.normalize.into())?;
    let (images, inputs, source) = match (&a.images, a.synthetic) {
        (Some(dir), _) => {
            let (imgs, digests) = load_images(dir)?;
            (imgs, digests, json!({ "images": dir.display().to_string() }))
        }
        (None, Some(_)) => {
            if a.count == 0 {
                return Err(CliError::Config("--count must be at least 1".into()));
            }
            let mut rng = trial_rng(a.seed, 0);
            let imgs = (0..a.count)
                .map(|_| experiments::synthetic_ar1_image(a.size, a.size, a.rho, &mut rng))
                .collect::<Result<Vec<_>, _>>()?;
            let src = json!({ "synthetic": "ar1", "count": a.count, "size": a.size, "rho": a.rho });
            (imgs, BTreeMap::new(), src)
        }
        (None, None) => return Err(CliError::Config("either --images or --synthetic is required".into())),
    };
    let report = experiments::run_dct_experiment(&images, a.block, &cfg)?;

    let mut align = String::from("side,reference_index,candidate_index,sign,score\n");
    for (side, al) in [("u", &report.u_alignment), ("v", &report.v_alignment)] {
        for r in 0..al.scores.len() {
            writeln!(align, "{side},{r},{},{},{}", al.matching[r], al.signs[r], al.scores[r]).unwrap();
        }
    }
    let mut grid = String::from("row_function,col_function,score\n");
    for (i, row) in report.product_scores().iter().enumerate() {
        for (j, s) in row.iter().enumerate() {
            writeln!(grid, "{i},{j},{s}").unwrap();
        }
    }
    let mut energy = String::from("matrix,weight,csvd_compaction,dct_compaction\n");
    for k in 0..report.csvd_compaction.len() {
        writeln!(
            energy,
            "{k},{},{},{}",
            report.pca.eigenvalues[k], report.csvd_compaction[k], report.dct_compaction[k]
        )
        .unwrap();
    }
    let summary = json!({
        "blocks": report.pca.sample_count,
        "rank_deficient": report.pca.rank_deficient,
        "u_dc_cosine": report.u_dc_cosine,
        "v_dc_cosine": report.v_dc_cosine,
        "u_mean_alignment": report.u_alignment.mean_score(),
        "v_mean_alignment": report.v_alignment.mean_score(),
        "csvd_mean_compaction": mean(&report.csvd_compaction),
        "dct_mean_compaction": mean(&report.dct_compaction),
    });

    let mut out = OutputDir::create(&a.out)?;
    write_basis(&mut out, &report.basis)?;
    out.write_str("alignment.csv", &align)?;
    out.write_str("alignment2d.csv", &grid)?;
    out.write_str("energy.csv", &energy)?;
    out.write_str("summary.json", &json_pretty(&summary))?;
    let mut man = manifest("experiment dct", raw, json!({ "source": source, "block": a.block, "csvd": cfg }), Some(a.seed));
    man.inputs = inputs;
    if report.pca.rank_deficient {
        man.notes.push("block covariance is rank deficient".into());
    }
    out.finish(man)?;
    Ok(())
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn replay(a: &ReplayArgs) -> Result<(), CliError> {
    let m = read_manifest(&a.manifest)?;
    for (path, digest) in &m.inputs {
        let bytes = fs::read(path).map_err(|e| io_err(Path::new(path), e))?;
        if &sha256_hex(&bytes) != digest {
            return Err(CliError::Replay(format!("input {path} changed since the recorded run")));
        }
    }
    let mut argv = vec!["cobasis".to_string()];
    argv.extend(m.args.iter().cloned());
    argv.push("--out".into());
    argv.push(a.out.display().to_string());
    crate::run(argv)
}
