use std::fs;
use std::path::{Path, PathBuf};

use nonstat::classify::{
    grad_lda_train, lda_train, rand_lda_train, rlda_train, slda_cv_train, slda_train,
    LinearClassifier, TradeoffConfig,
};
use nonstat::cpd::{
    cusum_weighted, default_theta_grid, kohlmorgen_lemm, slcd_detect, CusumParams, KlParams,
    Segmentation, Sigma,
};
use nonstat::io::{
    fmt_f64, read_series_file, write_json_file, write_matrix, write_series_file, LabelColumn,
};
use nonstat::lrtest::select_ds;
use nonstat::ssa::{find_most_nonstationary, find_stationary};
use nonstat::stats::{Shrinkage, TimeSeries};
use nonstat::synth::{
    gen_classif_dataset, gen_cpd_dataset, ClassifSynthSpec, ClassifVariant, CpdSynthSpec,
};
use nonstat::SsaConfig;
use clap::ValueEnum;
use serde::Serialize;
use serde_json::json;

use crate::{
    Algo, Cli, ClassifyArgs, Command, DetectArgs, GenClassifArgs, GenCommand, GenCpdArgs, Global,
    MethodName, SelectDsArgs, SsaArgs,
};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Lib(nonstat::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Lib(e) => write!(f, "{e}"),
        }
    }
}

impl From<nonstat::Error> for CliError {
    fn from(e: nonstat::Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Lib(e.into())
    }
}

impl CliError {
    /// 2 for anything the caller can fix, 3 for numerical failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Lib(e) if e.is_numerical() => 3,
            _ => 2,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

/// Output directory plus the resolved-config writer every command shares.
pub struct Outputs {
    pub dir: PathBuf,
}

impl Outputs {
    fn new(dir: &Path) -> CliResult<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn config<T: Serialize>(&self, command: &str, global: &Global, resolved: &T) -> CliResult<()> {
        let cfg = json!({
            "command": command,
            "seed": global.seed,
            "jobs": global.jobs,
            "resolved": serde_json::to_value(resolved).map_err(nonstat::Error::from)?,
        });
        self.json("config.json", &cfg)
    }

    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> CliResult<()> {
        write_json_file(value, &self.path(name))?;
        Ok(())
    }

    /// Writes a header and string rows.
    pub fn table(&self, name: &str, header: &[&str], rows: &[Vec<String>]) -> CliResult<()> {
        let mut w = csv::Writer::from_path(self.path(name)).map_err(nonstat::Error::from)?;
        w.write_record(header).map_err(nonstat::Error::from)?;
        for r in rows {
            w.write_record(r).map_err(nonstat::Error::from)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn execute(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.global.jobs {
        if n == 0 {
            return usage("--jobs must be at least 1");
        }
        // Ignore the error if a pool already exists (only possible in tests).
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let out = Outputs::new(&cli.global.out_dir)?;
    let g = &cli.global;
    match cli.command {
        Command::Gen(GenCommand::Cpd(a)) => gen_cpd(&out, g, &a),
        Command::Gen(GenCommand::Classif(a)) => gen_classif(&out, g, &a),
        Command::Ssa(a) => ssa(&out, g, &a),
        Command::SelectDs(a) => select(&out, g, &a),
        Command::Detect(a) => detect(&out, g, &a),
        Command::Classify(a) => classify(&out, g, &a),
        Command::Experiment(a) => crate::suites::experiment(&out, g, &a),
    }
}

fn gen_cpd(out: &Outputs, g: &Global, a: &GenCpdArgs) -> CliResult<()> {
    let d_n = match a.dn {
        Some(d) => d,
        None if a.ds <= a.dim => a.dim - a.ds,
        None => return usage(format!("--ds {} exceeds --dim {}", a.ds, a.dim)),
    };
    if a.ds + d_n != a.dim {
        return usage(format!("ds + dn = {} + {d_n} must equal D = {}", a.ds, a.dim));
    }
    let spec = CpdSynthSpec {
        dim: a.dim,
        d_s: a.ds,
        d_n,
        q: a.q,
        n_epochs: a.n_epochs,
        epoch_len: a.epoch_len,
        seed: g.seed,
    };
    let (ts, truth) = gen_cpd_dataset(&spec)?;
    write_series_file(&ts, &out.path("data.csv"))?;
    out.json("truth.json", &truth)?;
    out.config("gen cpd", g, &spec)
}

fn gen_classif(out: &Outputs, g: &Global, a: &GenClassifArgs) -> CliResult<()> {
    let spec = ClassifSynthSpec {
        variant: ClassifVariant::from_name(
            a.variant.to_possible_value().expect("no skipped variants").get_name(),
            a.param,
        )?,
        seed: g.seed,
    };
    let ds = gen_classif_dataset(&spec)?;
    write_series_file(&ds.train, &out.path("train.csv"))?;
    if let Some(t) = &ds.test {
        write_series_file(t, &out.path("test.csv"))?;
    }
    out.json(
        "truth.json",
        &json!({ "truth": ds.truth, "n_epochs": ds.n_epochs }),
    )?;
    out.config("gen classif", g, &spec)
}

fn read_input(path: &Path) -> CliResult<TimeSeries> {
    Ok(read_series_file(path, LabelColumn::Auto)?)
}

fn ssa(out: &Outputs, g: &Global, a: &SsaArgs) -> CliResult<()> {
    let ts = read_input(&a.input)?;
    let (d, maximize) = match (a.ds, a.dn) {
        (Some(d), None) => (d, a.maximize),
        (None, Some(d)) => (d, true),
        _ => return usage("give exactly one of --ds or --dn"),
    };
    if d == 0 || d >= ts.dim() {
        return usage(format!("projection dimension {d} must lie in 1..{}", ts.dim()));
    }
    let cfg = SsaConfig {
        n_epochs: a.n_epochs,
        n_restarts: a.restarts,
        max_iterations: a.max_iter,
        seed: g.seed,
        ..Default::default()
    };
    let sol = if maximize {
        find_most_nonstationary(&ts, d, &cfg)?
    } else {
        find_stationary(&ts, d, &cfg)?
    };
    let demix = sol.demixing();
    write_matrix(&demix, fs::File::create(out.path("projection.csv"))?)?;
    out.json(
        "projection.json",
        &json!({
            "kind": sol.projection.kind(),
            "projection": sol.projection.matrix(),
            "demixing": demix,
            "whitening": sol.whitening,
        }),
    )?;
    out.json(
        "report.json",
        &json!({
            "objective": if maximize { "maximize" } else { "minimize" },
            "d": d,
            "loss": sol.loss,
            "per_restart_losses": sol.per_restart_losses,
            "iterations_used": sol.iterations_used,
            "n_epochs": a.n_epochs,
        }),
    )?;
    out.config("ssa", g, &json!({ "args": a, "ssa": cfg, "maximize": maximize }))
}

fn select(out: &Outputs, g: &Global, a: &SelectDsArgs) -> CliResult<()> {
    let ts = read_input(&a.input)?;
    if !(0.0..1.0).contains(&a.p) {
        return usage(format!("--p {} must lie in [0, 1)", a.p));
    }
    let cfg = SsaConfig {
        n_epochs: a.n_epochs,
        n_restarts: a.restarts,
        seed: g.seed,
        ..Default::default()
    };
    let sel = select_ds(&ts, &cfg, a.p)?;
    out.json(
        "report.json",
        &json!({
            "chosen_ds": sel.chosen_ds,
            "threshold": sel.threshold,
            "per_ds": sel.report_rows(),
        }),
    )?;
    out.config("select-ds", g, &json!({ "args": a, "ssa": cfg }))
}

fn detect(out: &Outputs, g: &Global, a: &DetectArgs) -> CliResult<()> {
    let ts = read_input(&a.input)?;
    let seg: Segmentation = match a.algo {
        Algo::Slcd => {
            let Some(n) = a.n_epochs else {
                return usage("slcd needs --n-epochs");
            };
            if a.tau < 1.0 || a.tau.fract() != 0.0 {
                return usage(format!("slcd --tau {} must be a positive cluster count", a.tau));
            }
            slcd_detect(&ts, n, a.tau as usize)?
        }
        Algo::Cusum => {
            let Some(w) = a.window else {
                return usage("cusum needs --window");
            };
            if ts.dim() != 1 {
                return usage(format!("cusum needs a single-channel series, got {} channels", ts.dim()));
            }
            let grid = match &a.theta {
                Some(t) => t.clone(),
                None => {
                    let x = ts.channel(0);
                    let m = x.iter().sum::<f64>() / x.len() as f64;
                    let v = x.iter().map(|y| (y - m).powi(2)).sum::<f64>() / (x.len() - 1) as f64;
                    default_theta_grid(v)
                }
            };
            let params = CusumParams::new(w, a.tau, grid)?;
            cusum_weighted(&ts, &params, a.epoch_len.unwrap_or(w))?
        }
        Algo::Kl => {
            let Some(w) = a.window else {
                return usage("kl needs --window");
            };
            let params = KlParams {
                window: w,
                sigma: a.sigma.map_or(Sigma::Auto, Sigma::Fixed),
                penalty: a.tau,
            };
            kohlmorgen_lemm(&ts, &params)?
        }
    };
    out.json(
        "segmentation.json",
        &json!({
            "algo": a.algo,
            "tau": a.tau,
            "n_epochs": seg.n_epochs,
            "boundaries": seg.boundaries,
            "scores": seg.scores,
        }),
    )?;
    out.config("detect", g, a)
}

fn labelled(path: &Path) -> CliResult<TimeSeries> {
    let ts = read_input(path)?;
    if ts.labels().is_none() {
        return usage(format!("{} has no label column", path.display()));
    }
    Ok(ts)
}

fn classify(out: &Outputs, g: &Global, a: &ClassifyArgs) -> CliResult<()> {
    let train = labelled(&a.train)?;
    let test = labelled(&a.test)?;
    if train.dim() != test.dim() {
        return usage(format!("train has {} channels, test has {}", train.dim(), test.dim()));
    }
    let mut cfg = TradeoffConfig {
        n_epochs: a.n_epochs,
        k_folds: a.folds,
        seed: g.seed,
        ..Default::default()
    };
    if let Some(grid) = &a.grid {
        cfg.alpha_grid = grid.clone();
    }
    let mut cv = None;
    let c: LinearClassifier = match a.method {
        MethodName::Lda => lda_train(&train.class_samples(1)?, &train.class_samples(2)?)?,
        MethodName::Rlda => rlda_train(
            &train.class_samples(1)?,
            &train.class_samples(2)?,
            Shrinkage::Auto,
        )?,
        MethodName::Gradlda => grad_lda_train(&train, &cfg)?,
        MethodName::Slda => match a.alpha {
            Some(alpha) => slda_train(&train, alpha, &cfg)?,
            None => {
                let (c, report) = slda_cv_train(&train, &cfg)?;
                cv = Some(report);
                c
            }
        },
        MethodName::Randlda => rand_lda_train(&train, a.alpha.unwrap_or(0.5), g.seed, &cfg)?,
    };
    let pred = c.predict_series(&test)?;
    let labels = test.labels().expect("checked above");
    let wrong = pred.iter().zip(labels).filter(|(p, l)| p != l).count();
    let error = wrong as f64 / labels.len() as f64;
    let decisions = c.w.transpose() * test.data();
    let rows: Vec<Vec<String>> = (0..test.len())
        .map(|t| {
            vec![
                t.to_string(),
                labels[t].to_string(),
                pred[t].to_string(),
                fmt_f64(decisions[t] + c.b),
            ]
        })
        .collect();
    out.table("predictions.csv", &["index", "label", "predicted", "decision"], &rows)?;
    out.json(
        "metrics.json",
        &json!({
            "method": c.method,
            "alpha": c.alpha,
            "w": c.w.as_slice(),
            "b": c.b,
            "error": error,
            "n_test": test.len(),
            "cv": cv,
        }),
    )?;
    out.config("classify", g, &json!({ "args": a, "tradeoff": cfg }))
}
