use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use rayon::prelude::*;
use ridge_ssvs::blasso::{run_lasso_chain, LassoConfig, LassoOutput};
use ridge_ssvs::io::{
    read_dataset_csv, read_json, write_counts_csv, write_dataset_csv, write_json,
};
use ridge_ssvs::model::{calibrate_tau, default_lambda, trace_xtx, Dataset, RidgeHyper};
use ridge_ssvs::postprocess::{
    cw_rel, final_selection, lasso_select, refit_and_predict, CountRule, GapRule, LassoRule,
    RefitConfig, SelectionResult,
};
use ridge_ssvs::simdata::{generate_microarray_analog, generate_simulated, SimSpec};
use ridge_ssvs::ssvs::{run_ssvs_chain, ChainOutput, SsvsConfig};
use ridge_ssvs::SCHEMA_VERSION;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::Settings;
use crate::ConfigArgs;

const SIMULATE_KEYS: &[&str] = &["seed", "variant"];
const CALIBRATE_KEYS: &[&str] = &["tau0", "epsilon"];
const RUN_KEYS: &[&str] = &[
    "method",
    "chains",
    "seed",
    "burn_in",
    "post_burn_in",
    "mh_inner_iters",
    "flip_count",
    "init_model_size",
    "tau0",
    "tau",
    "lambda",
    "epsilon",
    "expected_size",
    "ig_shape",
    "ig_scale",
    "lasso_e",
    "lasso_f",
    "ci_level",
    "levels",
];
const REPORT_KEYS: &[&str] = &[
    "rule",
    "threshold",
    "gap_window",
    "gap_dominance",
    "refit_tau0",
    "refit_seed",
    "refit_burn_in",
    "refit_iterations",
    "levels",
];

fn ensure_dir(dir: &Path) -> Result<()> {
    if !dir.is_dir() {
        bail!("output directory {} does not exist", dir.display());
    }
    Ok(())
}

fn check_targets(paths: &[PathBuf], overwrite: bool) -> Result<()> {
    if overwrite {
        return Ok(());
    }
    if let Some(p) = paths.iter().find(|p| p.exists()) {
        bail!(
            "{} already exists (pass --overwrite to replace it)",
            p.display()
        );
    }
    Ok(())
}

pub fn simulate(
    out: &Path,
    seed: Option<u64>,
    variant: Option<String>,
    overwrite: bool,
    cfg: &ConfigArgs,
) -> Result<()> {
    let mut s = Settings::load(cfg.config.as_deref(), &cfg.overrides, SIMULATE_KEYS)?;
    if let Some(seed) = seed {
        s.set("seed", seed);
    }
    if let Some(v) = variant {
        s.set("variant", v);
    }
    ensure_dir(out)?;
    let seed: u64 = s.get_or("seed", 1)?;
    let variant = s.str_or("variant", "full").to_string();
    let files = ["train.csv", "valid.csv", "truth.json"].map(|f| out.join(f));
    check_targets(&files, overwrite)?;

    let (train, valid, truth) = match variant.as_str() {
        "full" => generate_simulated(&SimSpec::standard_design(seed))?,
        "base280" => {
            let mut spec = SimSpec::standard_design(seed);
            spec.collinear_map.clear();
            generate_simulated(&spec)?
        }
        "analog" => generate_microarray_analog(seed)?,
        other => bail!("unknown variant '{other}' (full, base280, analog)"),
    };
    write_dataset_csv(&files[0], &train)?;
    write_dataset_csv(&files[1], &valid)?;
    write_json(
        &files[2],
        &json!({
            "schema_version": SCHEMA_VERSION,
            "config": s.as_map(),
            "truth": truth,
        }),
    )?;
    println!(
        "{} training rows, {} validation rows, {} variables",
        train.n(),
        valid.n(),
        train.p()
    );
    println!("trace(X'X) = {:.6}", truth.train_trace_xtx);
    println!(
        "class balance: train {:.3}, valid {:.3}",
        truth.train_class_balance, truth.valid_class_balance
    );
    Ok(())
}

pub fn calibrate(data: &Path, tau0: Option<f64>, cfg: &ConfigArgs) -> Result<()> {
    let mut s = Settings::load(cfg.config.as_deref(), &cfg.overrides, CALIBRATE_KEYS)?;
    if let Some(t) = tau0 {
        s.set("tau0", t);
    }
    let data = read_dataset_csv(data, None)?;
    let tau0: f64 = s.get_or("tau0", 50.0)?;
    let epsilon: f64 = s.get_or("epsilon", 0.0)?;
    let p = data.p();
    let tr = trace_xtx(data.x());
    let lambda = default_lambda(p, epsilon);
    println!("p = {p}, trace(X'X) = {tr:.6}");
    println!("lambda = {lambda:.10}");
    if (tr - tau0).abs() <= 0.01 * tr {
        eprintln!("warning: tau0 = {tau0} is within 1% of trace(X'X) = {tr:.6}");
    }
    let tau = calibrate_tau(tau0, tr, p, lambda)?;
    println!("tau0 = {tau0}, tau = {tau:.6}");
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct RunManifest {
    schema_version: u32,
    method: String,
    data: String,
    config: std::collections::BTreeMap<String, String>,
    chains: Vec<String>,
}

enum Method {
    Ssvs(SsvsConfig),
    Lasso(LassoConfig),
}

fn chain_method(s: &Settings, data: &Dataset, seed: u64) -> Result<Method> {
    let method = s.str_or("method", "ssvs");
    match method {
        "ssvs" => {
            let expected: f64 = s.get_or("expected_size", 5.0)?;
            let a: f64 = s.get_or("ig_shape", 1.0)?;
            let b: f64 = s.get_or("ig_scale", 1.0)?;
            let hyper = match s.get::<f64>("tau")? {
                Some(tau) => {
                    let lambda = s.get_or("lambda", default_lambda(data.p(), 0.0))?;
                    RidgeHyper::fixed(data.p(), tau, lambda, expected, a, b)?
                }
                None => {
                    if s.contains("lambda") {
                        bail!("lambda can only be set together with tau");
                    }
                    let tau0 = s.get_or("tau0", 50.0)?;
                    let eps = s.get_or("epsilon", 0.0)?;
                    RidgeHyper::calibrated(data, tau0, eps, expected, a, b)?
                }
            };
            let mut c = SsvsConfig::new(hyper, seed);
            c.burn_in = s.get_or("burn_in", c.burn_in)?;
            c.post_burn_in = s.get_or("post_burn_in", c.post_burn_in)?;
            c.mh_inner_iters = s.get_or("mh_inner_iters", c.mh_inner_iters)?;
            c.flip_count = s.get_or("flip_count", c.flip_count)?;
            c.init_model_size = s.get_or("init_model_size", c.init_model_size)?;
            c.validate(data.p())?;
            Ok(Method::Ssvs(c))
        }
        "lasso" => {
            let mut c = LassoConfig::new(seed);
            c.burn_in = s.get_or("burn_in", c.burn_in)?;
            c.post_burn_in = s.get_or("post_burn_in", c.post_burn_in)?;
            c.hyper.e = s.get_or("lasso_e", c.hyper.e)?;
            c.hyper.f = s.get_or("lasso_f", c.hyper.f)?;
            c.hyper.ig_shape = s.get_or("ig_shape", c.hyper.ig_shape)?;
            c.hyper.ig_scale = s.get_or("ig_scale", c.hyper.ig_scale)?;
            c.ci_level = s.get_or("ci_level", c.ci_level)?;
            c.validate()?;
            Ok(Method::Lasso(c))
        }
        other => bail!("unknown method '{other}' (ssvs, lasso)"),
    }
}

fn write_lasso_csv(path: &Path, out: &LassoOutput) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "variable",
        "beta_mean",
        "lambda_mean",
        "ci_lower",
        "ci_upper",
    ])?;
    for (j, name) in out.variable_names.iter().enumerate() {
        w.write_record([
            name.clone(),
            format!("{:?}", out.beta_mean[j]),
            format!("{:?}", out.lambda_mean[j]),
            format!("{:?}", out.ci_lower[j]),
            format!("{:?}", out.ci_upper[j]),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn run(
    data_path: &Path,
    out: &Path,
    jobs: usize,
    overwrite: bool,
    cfg: &ConfigArgs,
) -> Result<()> {
    let s = Settings::load(cfg.config.as_deref(), &cfg.overrides, RUN_KEYS)?;
    let chains: usize = s.get_or("chains", 10)?;
    if chains == 0 {
        bail!("chains must be at least 1");
    }
    if jobs == 0 {
        bail!("--jobs must be at least 1");
    }
    let base_seed: u64 = s.get_or("seed", 0)?;
    ensure_dir(out)?;
    let data = read_dataset_csv(data_path, s.get("levels")?)?;
    let method = s.str_or("method", "ssvs").to_string();
    // validate every chain's settings before any compute
    let configs = (0..chains)
        .map(|k| chain_method(&s, &data, base_seed + k as u64))
        .collect::<Result<Vec<_>>>()?;

    let stems: Vec<String> = (0..chains).map(|k| format!("chain_{k:03}")).collect();
    let mut targets = vec![out.join("run.json")];
    for stem in &stems {
        targets.push(out.join(format!("{stem}.json")));
        targets.push(out.join(format!("{stem}.csv")));
    }
    check_targets(&targets, overwrite)?;

    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;
    let results: Vec<Result<()>> = pool.install(|| {
        configs
            .par_iter()
            .zip(stems.par_iter())
            .enumerate()
            .map(|(k, (config, stem))| {
                let json_path = out.join(format!("{stem}.json"));
                let csv_path = out.join(format!("{stem}.csv"));
                match config {
                    Method::Ssvs(c) => {
                        let o = run_ssvs_chain(&data, c).with_context(|| format!("chain {k}"))?;
                        write_json(&json_path, &o)?;
                        write_counts_csv(&csv_path, &o.variable_names, &o.selection_counts)?;
                    }
                    Method::Lasso(c) => {
                        let o = run_lasso_chain(&data, c).with_context(|| format!("chain {k}"))?;
                        write_json(&json_path, &o)?;
                        write_lasso_csv(&csv_path, &o)?;
                    }
                }
                Ok(())
            })
            .collect()
    });
    let failures: Vec<String> = results
        .into_iter()
        .filter_map(|r| r.err().map(|e| format!("{e:#}")))
        .collect();
    if !failures.is_empty() {
        bail!(
            "{} of {chains} chains failed: {}",
            failures.len(),
            failures.join("; ")
        );
    }
    let manifest = RunManifest {
        schema_version: SCHEMA_VERSION,
        method,
        data: data_path.display().to_string(),
        config: s.as_map().clone(),
        chains: stems.iter().map(|s| format!("{s}.json")).collect(),
    };
    write_json(&targets[0], &manifest)?;
    println!("{chains} chains written to {}", out.display());
    Ok(())
}

struct LoadedRun {
    source: String,
    chain: String,
    names: Vec<String>,
    selection: SelectionResult,
}

fn count_rule(s: &Settings) -> Result<CountRule> {
    match s.str_or("rule", "gap") {
        "gap" => {
            let d = GapRule::default();
            Ok(CountRule::Gap(GapRule {
                window: s.get_or("gap_window", d.window)?,
                dominance: s.get_or("gap_dominance", d.dominance)?,
            }))
        }
        "fixed" => {
            Ok(CountRule::Fixed(s.get("threshold")?.ok_or_else(|| {
                anyhow!("rule = fixed needs a threshold")
            })?))
        }
        other => bail!("rule '{other}' does not apply to SSVS runs (gap, fixed)"),
    }
}

fn lasso_rule(s: &Settings, ci_level: f64) -> Result<LassoRule> {
    let threshold = s.get::<f64>("threshold")?;
    let need = |rule: &str| threshold.ok_or_else(|| anyhow!("rule = {rule} needs a threshold"));
    match s.str_or("rule", "beta") {
        "beta" => Ok(LassoRule::BetaMagnitude(need("beta")?)),
        "lambda" => Ok(LassoRule::LambdaMagnitude(need("lambda")?)),
        "ci" => Ok(LassoRule::CredibleInterval(threshold.unwrap_or(ci_level))),
        other => bail!("rule '{other}' does not apply to Lasso runs (beta, lambda, ci)"),
    }
}

pub fn report(
    run_dirs: &[PathBuf],
    out: &Path,
    refit: Option<(PathBuf, PathBuf)>,
    overwrite: bool,
    cfg: &ConfigArgs,
) -> Result<()> {
    let s = Settings::load(cfg.config.as_deref(), &cfg.overrides, REPORT_KEYS)?;
    ensure_dir(out)?;
    let mut targets = vec![out.join("report.json"), out.join("selection_table.csv")];
    if refit.is_some() {
        targets.push(out.join("refit.csv"));
    }
    check_targets(&targets, overwrite)?;

    let mut manifests = Vec::new();
    for dir in run_dirs {
        let m: RunManifest = read_json(&dir.join("run.json"))
            .with_context(|| format!("reading run directory {}", dir.display()))?;
        manifests.push((dir, m));
    }
    let method = manifests[0].1.method.clone();
    if let Some((dir, m)) = manifests.iter().find(|(_, m)| m.method != method) {
        bail!(
            "mixed methods: {} holds '{}' runs, expected '{method}'",
            dir.display(),
            m.method
        );
    }

    let mut runs: Vec<LoadedRun> = Vec::new();
    for (dir, m) in &manifests {
        for chain in &m.chains {
            let path = dir.join(chain);
            let (names, selection) = if method == "ssvs" {
                let o: ChainOutput = read_json(&path)?;
                let counts: Vec<f64> = o.selection_counts.iter().map(|&c| c as f64).collect();
                (o.variable_names, final_selection(&counts, &count_rule(&s)?))
            } else {
                let o: LassoOutput = read_json(&path)?;
                let sel = lasso_select(&o, &lasso_rule(&s, o.ci_level)?)?;
                (o.variable_names, sel)
            };
            runs.push(LoadedRun {
                source: dir.display().to_string(),
                chain: chain.clone(),
                names,
                selection,
            });
        }
    }
    let names = runs[0].names.clone();
    if runs.iter().any(|r| r.names != names) {
        bail!("runs were fitted on different variable sets");
    }
    let p = names.len();
    let subsets: Vec<Vec<usize>> = runs.iter().map(|r| r.selection.selected.clone()).collect();
    let stability = cw_rel(&subsets, p).context("CW_rel")?;

    let mut freq = vec![0usize; p];
    for sel in &subsets {
        for &j in sel {
            freq[j] += 1;
        }
    }
    let listed: Vec<usize> = (0..p).filter(|&j| freq[j] > 0).collect();
    let mut w = csv::Writer::from_path(&targets[1])?;
    let mut header = vec!["variable".to_string(), "runs_selected".to_string()];
    header.extend((1..=runs.len()).map(|k| format!("run_{k}")));
    w.write_record(&header)?;
    for &j in &listed {
        let mut row = vec![names[j].clone(), freq[j].to_string()];
        row.extend(runs.iter().map(|r| format!("{:?}", r.selection.counts[j])));
        w.write_record(&row)?;
    }
    w.flush()?;

    let refit_json = match &refit {
        None => serde_json::Value::Null,
        Some((train_path, valid_path)) => {
            let levels: Option<usize> = s.get("levels")?;
            let train = read_dataset_csv(train_path, levels)?;
            let valid = read_dataset_csv(valid_path, Some(levels.unwrap_or(train.q())))?;
            if train.variable_names() != names.as_slice() {
                bail!("training file does not match the variables of the runs");
            }
            let mut consensus: Vec<usize> = (0..p).filter(|&j| 2 * freq[j] >= runs.len()).collect();
            if consensus.is_empty() {
                consensus = subsets[0].clone();
            }
            if consensus.is_empty() {
                bail!("nothing selected to refit");
            }
            let hyper =
                RidgeHyper::calibrated(&train, s.get_or("refit_tau0", 50.0)?, 0.0, 1.0, 1.0, 1.0)?;
            let mut rc = RefitConfig::new(hyper, s.get_or("refit_seed", 0)?);
            rc.burn_in = s.get_or("refit_burn_in", rc.burn_in)?;
            rc.iterations = s.get_or("refit_iterations", rc.iterations)?;
            let r = refit_and_predict(&train, &consensus, &valid, &rc)?;
            let vars: Vec<String> = r.variables.iter().map(|&j| names[j].clone()).collect();
            let mut w = csv::Writer::from_path(&targets[2])?;
            w.write_record(["variables", "sensitivity", "specificity"])?;
            w.write_record([
                vars.join(" "),
                format!("{:?}", r.sensitivity),
                format!("{:?}", r.specificity),
            ])?;
            w.flush()?;
            println!(
                "refit on {}: sensitivity {:.3}, specificity {:.3}",
                vars.join(" "),
                r.sensitivity,
                r.specificity
            );
            json!({
                "requested": consensus.iter().map(|&j| names[j].clone()).collect::<Vec<_>>(),
                "variables": vars,
                "beta_mean": r.beta_mean,
                "u_mean": r.u_mean,
                "sensitivity": r.sensitivity,
                "specificity": r.specificity,
            })
        }
    };

    let per_run: Vec<serde_json::Value> = runs
        .iter()
        .map(|r| {
            json!({
                "source": r.source,
                "chain": r.chain,
                "method": r.selection.method,
                "threshold_used": r.selection.threshold_used,
                "selected": r.selection.selected.iter().map(|&j| names[j].clone()).collect::<Vec<_>>(),
            })
        })
        .collect();
    let table: Vec<serde_json::Value> = listed
        .iter()
        .map(|&j| {
            json!({
                "variable": names[j],
                "runs_selected": freq[j],
                "values": runs.iter().map(|r| r.selection.counts[j]).collect::<Vec<_>>(),
            })
        })
        .collect();
    write_json(
        &targets[0],
        &json!({
            "schema_version": SCHEMA_VERSION,
            "method": method,
            "config": s.as_map(),
            "run_configs": manifests.iter().map(|(_, m)| m.config.clone()).collect::<Vec<_>>(),
            "runs": per_run,
            "table": table,
            "cw_rel": stability,
            "refit": refit_json,
        }),
    )?;
    for r in &runs {
        let sel: Vec<&str> = r
            .selection
            .selected
            .iter()
            .map(|&j| names[j].as_str())
            .collect();
        println!("{} {}: {}", r.source, r.chain, sel.join(" "));
    }
    println!("CW_rel = {stability:.4} over {} runs", runs.len());
    Ok(())
}
