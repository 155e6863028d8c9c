//! Named experiment suites: scaled-down versions of the simulation panels.

use std::collections::BTreeMap;

use nonstat::eval::{
    run_classif_experiment, run_cpd_experiment, ClassifExperimentSpec, ClassifMethod, CpdAlgorithm,
    ExperimentSpec, Preprocessing, Summary,
};
use nonstat::io::fmt_f64;
use nonstat::lrtest::select_ds;
use nonstat::rng::derive_seed;
use nonstat::synth::{gen_cpd_dataset, ClassifVariant, CpdSynthSpec};
use nonstat::SsaConfig;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::run::{usage, CliResult, Outputs};
use crate::{ExperimentArgs, Global};

pub const SUITES: [&str; 6] = [
    "linkage_panels",
    "cusum_panels",
    "kl_panels",
    "p_values",
    "slda_subspace",
    "transfer",
];

pub const N_EPOCHS: usize = 200;
pub const EPOCH_LEN: usize = 100;
pub const Q: f64 = 1.8;

const ARMS: [Preprocessing; 3] = [
    Preprocessing::None,
    Preprocessing::SsaMax,
    Preprocessing::RandomProjection,
];

#[derive(Serialize)]
struct SummaryRow {
    panel: String,
    x: f64,
    group: String,
    #[serde(flatten)]
    stats: Summary,
}

fn cpd(spec_dim: usize, d_n: usize, q: f64) -> CpdSynthSpec {
    CpdSynthSpec {
        dim: spec_dim,
        d_s: spec_dim - d_n,
        d_n,
        q,
        n_epochs: N_EPOCHS,
        epoch_len: EPOCH_LEN,
        seed: 0,
    }
}

/// `(panel, x, generator)` settings of a detector suite.
fn cpd_panels(algo: CpdAlgorithm) -> Vec<(&'static str, f64, CpdSynthSpec)> {
    let mut v = Vec::new();
    if algo == CpdAlgorithm::Cusum {
        for d_s in [1, 3, 5, 7, 9] {
            v.push(("d_s", d_s as f64, cpd(d_s + 1, 1, Q)));
        }
        for q in [1.2, 1.5, 1.8, 2.4, 3.0, 4.0] {
            v.push(("q", q, cpd(8, 1, q)));
        }
        return v;
    }
    for d_n in [2, 4, 6, 8, 10] {
        v.push(("d_n", d_n as f64, cpd(12, d_n, Q)));
    }
    for d_s in [2, 6, 10, 14, 18] {
        v.push(("d_s", d_s as f64, cpd(d_s + 2, 2, Q)));
    }
    for q in [1.2, 1.5, 1.8, 2.4, 3.0, 4.0] {
        v.push(("q", q, cpd(12, 2, q)));
    }
    v
}

pub fn experiment(out: &Outputs, g: &Global, a: &ExperimentArgs) -> CliResult<()> {
    let algo = match a.suite.as_str() {
        "linkage_panels" => Some(CpdAlgorithm::Slcd),
        "cusum_panels" => Some(CpdAlgorithm::Cusum),
        "kl_panels" => Some(CpdAlgorithm::Kl),
        "p_values" | "slda_subspace" | "transfer" => None,
        other => {
            return usage(format!(
                "unknown suite '{other}'; expected one of {}",
                SUITES.join(", ")
            ))
        }
    };
    if a.realizations == Some(0) {
        return usage("--realizations must be at least 1");
    }
    match (algo, a.suite.as_str()) {
        (Some(algo), _) => cpd_suite(out, g, a, algo),
        (None, "p_values") => p_values(out, g, a),
        (None, suite) => classif_suite(out, g, a, suite),
    }
}

fn cpd_suite(out: &Outputs, g: &Global, a: &ExperimentArgs, algo: CpdAlgorithm) -> CliResult<()> {
    let n = a.realizations.unwrap_or(10);
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    let mut specs = Vec::new();
    for (i, (panel, x, generator)) in cpd_panels(algo).into_iter().enumerate() {
        let spec = ExperimentSpec {
            generator,
            algorithm: algo,
            arms: ARMS.to_vec(),
            tau: None,
            n_realizations: n,
            seed: derive_seed(g.seed, i as u64),
            ssa: SsaConfig::default(),
        };
        let res = run_cpd_experiment(&spec)?;
        for r in &res.rows {
            rows.push(vec![
                panel.to_string(),
                fmt_f64(x),
                r.realization.to_string(),
                r.seed.to_string(),
                r.arm.name().to_string(),
                fmt_f64(r.auc),
            ]);
        }
        for (arm, s) in &res.summary {
            summary.push(SummaryRow {
                panel: panel.into(),
                x,
                group: arm.name().into(),
                stats: *s,
            });
        }
        specs.push(json!({ "panel": panel, "x": x, "spec": spec }));
    }
    out.table("results.csv", &["panel", "x", "realization", "seed", "arm", "auc"], &rows)?;
    out.json("summary.json", &json!({ "suite": a.suite, "summary": summary }))?;
    out.config("experiment", g, &json!({ "suite": a.suite, "realizations": n, "settings": specs }))
}

/// Settings of the dimension-selection suite.
pub fn p_values_generator(d_s: usize, seed: u64) -> CpdSynthSpec {
    CpdSynthSpec {
        seed,
        ..cpd(10, 10 - d_s, Q)
    }
}

fn p_values(out: &Outputs, g: &Global, a: &ExperimentArgs) -> CliResult<()> {
    let n = a.realizations.unwrap_or(10);
    let jobs: Vec<(usize, usize)> = (1..=9).flat_map(|d| (0..n).map(move |r| (d, r))).collect();
    let results = jobs
        .par_iter()
        .map(|&(d_s, r)| {
            let seed = derive_seed(derive_seed(g.seed, d_s as u64), r as u64);
            let (ts, _) = gen_cpd_dataset(&p_values_generator(d_s, seed))?;
            let cfg = SsaConfig {
                n_epochs: N_EPOCHS,
                seed,
                ..Default::default()
            };
            Ok((d_s, r, seed, select_ds(&ts, &cfg, 0.01)?))
        })
        .collect::<nonstat::Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    let mut chosen: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut pvals: BTreeMap<(usize, usize), Vec<f64>> = BTreeMap::new();
    for (d_s, r, seed, sel) in &results {
        chosen.entry(*d_s).or_default().push(sel.chosen_ds);
        for row in sel.report_rows() {
            pvals.entry((*d_s, row.ds)).or_default().push(row.p);
            rows.push(vec![
                d_s.to_string(),
                r.to_string(),
                seed.to_string(),
                row.ds.to_string(),
                fmt_f64(row.lambda),
                row.dof.to_string(),
                fmt_f64(row.p),
                sel.chosen_ds.to_string(),
            ]);
        }
    }
    let summary: Vec<_> = chosen
        .iter()
        .map(|(d_s, c)| {
            let mean_p: Vec<f64> = (1..=9)
                .map(|d| {
                    let v = &pvals[&(*d_s, d)];
                    v.iter().sum::<f64>() / v.len() as f64
                })
                .collect();
            json!({
                "true_ds": d_s,
                "modal_chosen_ds": modal(c),
                "chosen": c,
                "mean_p_by_ds": mean_p,
            })
        })
        .collect();
    out.table(
        "results.csv",
        &["true_ds", "realization", "seed", "ds", "lambda", "dof", "p", "chosen_ds"],
        &rows,
    )?;
    out.json("summary.json", &json!({ "suite": "p_values", "summary": summary }))?;
    out.config(
        "experiment",
        g,
        &json!({ "suite": "p_values", "realizations": n, "generator": p_values_generator(1, 0), "p": 0.01 }),
    )
}

/// Most frequent value; ties go to the smallest.
pub fn modal(v: &[usize]) -> usize {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for &x in v {
        *counts.entry(x).or_default() += 1;
    }
    let mut best = (0, 0);
    for (x, c) in counts {
        if c > best.1 {
            best = (x, c);
        }
    }
    best.0
}

fn classif_suite(out: &Outputs, g: &Global, a: &ExperimentArgs, suite: &str) -> CliResult<()> {
    let n = a.realizations.unwrap_or(20);
    let mut settings: Vec<(&str, f64, ClassifVariant, Vec<ClassifMethod>)> = Vec::new();
    if suite == "slda_subspace" {
        let methods = vec![
            ClassifMethod::Lda,
            ClassifMethod::Slda { alpha: 0.1 },
            ClassifMethod::Slda { alpha: 0.5 },
        ];
        for a_ns in 1..=10 {
            let a_ns = a_ns as f64;
            settings.push(("subspace_simple", a_ns, ClassifVariant::SubspaceSimple { a_ns }, methods.clone()));
        }
    } else {
        let methods = vec![
            ClassifMethod::Lda,
            ClassifMethod::GradLda,
            ClassifMethod::Slda { alpha: 0.1 },
        ];
        for i in 1..=15 {
            let a8 = 0.2 * i as f64;
            settings.push(("transfer_small", a8, ClassifVariant::TransferSmall { a8 }, methods.clone()));
            settings.push(("transfer_large", a8, ClassifVariant::TransferLarge { a8 }, methods.clone()));
        }
    }
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    let mut specs = Vec::new();
    let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    for (i, (panel, x, variant, methods)) in settings.into_iter().enumerate() {
        let spec = ClassifExperimentSpec {
            variant,
            methods,
            n_realizations: n,
            seed: derive_seed(g.seed, i as u64),
            tradeoff: Default::default(),
        };
        let res = run_classif_experiment(&spec)?;
        for r in &res.rows {
            rows.push(vec![
                panel.to_string(),
                fmt_f64(x),
                r.realization.to_string(),
                r.seed.to_string(),
                r.method.clone(),
                opt(r.error),
                opt(r.angle),
            ]);
        }
        for (label, err, ang) in &res.summary {
            for (kind, s) in [("error", err), ("angle", ang)] {
                if let Some(s) = s {
                    summary.push(SummaryRow {
                        panel: panel.into(),
                        x,
                        group: format!("{label}:{kind}"),
                        stats: *s,
                    });
                }
            }
        }
        specs.push(json!({ "panel": panel, "x": x, "spec": spec }));
    }
    out.table(
        "results.csv",
        &["panel", "x", "realization", "seed", "method", "error", "angle"],
        &rows,
    )?;
    out.json("summary.json", &json!({ "suite": suite, "summary": summary }))?;
    out.config("experiment", g, &json!({ "suite": suite, "realizations": n, "settings": specs }))
}
