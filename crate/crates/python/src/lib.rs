//! Python bindings. Matrices cross the boundary as lists of rows; series as
//! `T x D` rows (pass `ndarray.tolist()` from numpy).

use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};
use nonstat::classify::{
    grad_lda_train, lda_train, rand_lda_train, rlda_train, slda_cv_train, slda_train,
    LinearClassifier, Method, TradeoffConfig,
};
use nonstat::cpd::{
    cusum_weighted, default_theta_grid, kohlmorgen_lemm, slcd_detect, CusumParams, KlParams, Sigma,
};
use nonstat::eval::{auc, roc_from_sweep};
use nonstat::io::{read_series_file, write_series_file, LabelColumn};
use nonstat::stats::{kl_gauss as kl, Shrinkage};
use nonstat::synth::{gen_classif_dataset, gen_cpd_dataset, ClassifSynthSpec, ClassifVariant, CpdSynthSpec};
use nonstat::{GaussianParams, SsaConfig, SsaSolution};
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;

fn err(e: nonstat::Error) -> PyErr {
    if e.is_numerical() {
        PyArithmeticError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

trait OrPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for nonstat::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(err)
    }
}

fn matrix(rows: &[Vec<f64>]) -> PyResult<DMatrix<f64>> {
    let n = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("expected a non-empty rectangular list of rows"));
    }
    Ok(DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]))
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Multivariate series, optionally labelled with classes 1 and 2.
#[pyclass(name = "TimeSeries", module = "pynonstat", from_py_object)]
#[derive(Clone)]
pub struct PyTimeSeries {
    inner: nonstat::TimeSeries,
}

#[pymethods]
impl PyTimeSeries {
    #[new]
    #[pyo3(signature = (rows, labels=None))]
    fn new(rows: Vec<Vec<f64>>, labels: Option<Vec<u8>>) -> PyResult<Self> {
        let ts = nonstat::TimeSeries::from_rows(&rows).py()?;
        let inner = match labels {
            Some(l) => ts.labelled(l).py()?,
            None => ts,
        };
        Ok(Self { inner })
    }

    /// Reads a CSV written by the CLI (a `label` column is picked up).
    #[staticmethod]
    fn read_csv(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: read_series_file(&path, LabelColumn::Auto).py()?,
        })
    }

    fn write_csv(&self, path: PathBuf) -> PyResult<()> {
        write_series_file(&self.inner, &path).py()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn labels(&self) -> Option<Vec<u8>> {
        self.inner.labels().map(<[u8]>::to_vec)
    }

    /// Samples as `T x D` rows.
    fn rows(&self) -> Vec<Vec<f64>> {
        rows(&self.inner.data().transpose())
    }

    fn __repr__(&self) -> String {
        format!(
            "TimeSeries(len={}, dim={}, labelled={})",
            self.inner.len(),
            self.inner.dim(),
            self.inner.labels().is_some()
        )
    }
}

#[pyclass(name = "SsaResult", module = "pynonstat", skip_from_py_object)]
pub struct PySsaResult {
    /// Projection in whitened coordinates, `d x D`.
    #[pyo3(get)]
    projection: Vec<Vec<f64>>,
    /// Projection acting on raw centered observations.
    #[pyo3(get)]
    demixing: Vec<Vec<f64>>,
    #[pyo3(get)]
    loss: f64,
    #[pyo3(get)]
    per_restart_losses: Vec<f64>,
    #[pyo3(get)]
    iterations_used: usize,
    #[pyo3(get)]
    max_orthonormality_error: f64,
}

impl From<SsaSolution> for PySsaResult {
    fn from(s: SsaSolution) -> Self {
        Self {
            projection: rows(s.projection.matrix()),
            demixing: rows(&s.demixing()),
            loss: s.loss,
            per_restart_losses: s.per_restart_losses,
            iterations_used: s.iterations_used,
            max_orthonormality_error: s.max_orthonormality_error,
        }
    }
}

fn ssa_config(n_epochs: usize, restarts: usize, seed: u64) -> SsaConfig {
    SsaConfig {
        n_epochs,
        n_restarts: restarts,
        seed,
        ..Default::default()
    }
}

#[pyfunction]
#[pyo3(signature = (ts, d, n_epochs=10, restarts=5, seed=0))]
fn find_stationary(ts: &PyTimeSeries, d: usize, n_epochs: usize, restarts: usize, seed: u64) -> PyResult<PySsaResult> {
    Ok(nonstat::find_stationary(&ts.inner, d, &ssa_config(n_epochs, restarts, seed)).py()?.into())
}

#[pyfunction]
#[pyo3(signature = (ts, d, n_epochs=10, restarts=5, seed=0))]
fn find_most_nonstationary(
    ts: &PyTimeSeries,
    d: usize,
    n_epochs: usize,
    restarts: usize,
    seed: u64,
) -> PyResult<PySsaResult> {
    Ok(nonstat::find_most_nonstationary(&ts.inner, d, &ssa_config(n_epochs, restarts, seed)).py()?.into())
}

/// Returns `(chosen_ds, [(ds, lambda, dof, p), ...])`.
#[pyfunction]
#[pyo3(signature = (ts, p=0.01, n_epochs=10, restarts=5, seed=0))]
fn select_ds(
    ts: &PyTimeSeries,
    p: f64,
    n_epochs: usize,
    restarts: usize,
    seed: u64,
) -> PyResult<(usize, Vec<(usize, f64, usize, f64)>)> {
    let sel = nonstat::lrtest::select_ds(&ts.inner, &ssa_config(n_epochs, restarts, seed), p).py()?;
    let table = sel.report_rows().into_iter().map(|r| (r.ds, r.lambda, r.dof, r.p)).collect();
    Ok((sel.chosen_ds, table))
}

/// `KL(N(mu1, cov1) || N(mu2, cov2))`.
#[pyfunction]
fn kl_gauss(mu1: Vec<f64>, cov1: Vec<Vec<f64>>, mu2: Vec<f64>, cov2: Vec<Vec<f64>>) -> PyResult<f64> {
    let p = GaussianParams::new(DVector::from_vec(mu1), matrix(&cov1)?).py()?;
    let q = GaussianParams::new(DVector::from_vec(mu2), matrix(&cov2)?).py()?;
    kl(&p, &q).py()
}

/// Epoch boundaries from single-linkage clustering into `k` clusters.
#[pyfunction]
fn detect_slcd(ts: &PyTimeSeries, n_epochs: usize, k: usize) -> PyResult<Vec<usize>> {
    Ok(slcd_detect(&ts.inner, n_epochs, k).py()?.boundaries)
}

#[pyfunction]
#[pyo3(signature = (ts, window, penalty, sigma=None))]
fn detect_kl(ts: &PyTimeSeries, window: usize, penalty: f64, sigma: Option<f64>) -> PyResult<Vec<usize>> {
    let params = KlParams {
        window,
        sigma: sigma.map_or(Sigma::Auto, Sigma::Fixed),
        penalty,
    };
    Ok(kohlmorgen_lemm(&ts.inner, &params).py()?.boundaries)
}

/// Univariate CUSUM; boundaries are reported in units of `epoch_len`
/// (default: `window`).
#[pyfunction]
#[pyo3(signature = (ts, window, threshold, epoch_len=None, theta=None))]
fn detect_cusum(
    ts: &PyTimeSeries,
    window: usize,
    threshold: f64,
    epoch_len: Option<usize>,
    theta: Option<Vec<f64>>,
) -> PyResult<Vec<usize>> {
    if ts.inner.dim() != 1 {
        return Err(PyValueError::new_err("cusum needs a single-channel series"));
    }
    let grid = theta.unwrap_or_else(|| {
        let x = ts.inner.channel(0);
        let m = x.iter().sum::<f64>() / x.len() as f64;
        default_theta_grid(x.iter().map(|y| (y - m).powi(2)).sum::<f64>() / (x.len() - 1).max(1) as f64)
    });
    let params = CusumParams::new(window, threshold, grid).py()?;
    Ok(cusum_weighted(&ts.inner, &params, epoch_len.unwrap_or(window)).py()?.boundaries)
}

/// Area under the ROC curve of a sweep `[(tau, boundaries), ...]`.
#[pyfunction]
fn roc_auc(sweep: Vec<(f64, Vec<usize>)>, truth: Vec<usize>, n_epochs: usize) -> PyResult<f64> {
    Ok(auc(&roc_from_sweep(&sweep, &truth, n_epochs).py()?))
}

/// Largest principal angle between the row spans of two matrices, radians.
#[pyfunction]
fn subspace_angle(u: Vec<Vec<f64>>, v: Vec<Vec<f64>>) -> PyResult<f64> {
    nonstat::eval::subspace_angle(&matrix(&u)?.transpose(), &matrix(&v)?.transpose()).py()
}

/// Hyperplane `w·x + b`; positive decisions are class 1.
#[pyclass(name = "Classifier", module = "pynonstat", skip_from_py_object)]
pub struct PyClassifier {
    inner: LinearClassifier,
    #[pyo3(get)]
    cv_errors: Option<Vec<(f64, f64)>>,
}

#[pymethods]
impl PyClassifier {
    #[getter]
    fn w(&self) -> Vec<f64> {
        self.inner.w.as_slice().to_vec()
    }

    #[getter]
    fn b(&self) -> f64 {
        self.inner.b
    }

    #[getter]
    fn alpha(&self) -> Option<f64> {
        self.inner.alpha
    }

    #[getter]
    fn method(&self) -> &'static str {
        match self.inner.method {
            Method::Lda => "lda",
            Method::Rlda => "rlda",
            Method::GradLda => "gradlda",
            Method::Slda => "slda",
            Method::RandLda => "randlda",
        }
    }

    fn decision(&self, x: Vec<f64>) -> f64 {
        self.inner.decision(&x)
    }

    fn predict(&self, ts: &PyTimeSeries) -> PyResult<Vec<u8>> {
        self.inner.predict_series(&ts.inner).py()
    }

    fn error_rate(&self, ts: &PyTimeSeries) -> PyResult<f64> {
        self.inner.error_rate(&ts.inner).py()
    }

    fn __repr__(&self) -> String {
        format!("Classifier(method={}, dim={})", self.method(), self.inner.dim())
    }
}

/// Trains `lda`, `rlda`, `gradlda`, `slda` or `randlda`. sLDA without
/// `alpha` cross-validates over `grid`.
#[pyfunction]
#[pyo3(signature = (ts, method="lda", alpha=None, grid=None, n_epochs=7, seed=0))]
fn train(
    ts: &PyTimeSeries,
    method: &str,
    alpha: Option<f64>,
    grid: Option<Vec<f64>>,
    n_epochs: usize,
    seed: u64,
) -> PyResult<PyClassifier> {
    let ts = &ts.inner;
    let mut cfg = TradeoffConfig {
        n_epochs,
        seed,
        ..Default::default()
    };
    if let Some(g) = grid {
        cfg.alpha_grid = g;
    }
    let mut cv_errors = None;
    let inner = match method {
        "lda" => lda_train(&ts.class_samples(1).py()?, &ts.class_samples(2).py()?).py()?,
        "rlda" => rlda_train(&ts.class_samples(1).py()?, &ts.class_samples(2).py()?, Shrinkage::Auto).py()?,
        "gradlda" => grad_lda_train(ts, &cfg).py()?,
        "slda" => match alpha {
            Some(a) => slda_train(ts, a, &cfg).py()?,
            None => {
                let (c, report) = slda_cv_train(ts, &cfg).py()?;
                cv_errors = Some(report.errors);
                c
            }
        },
        "randlda" => rand_lda_train(ts, alpha.unwrap_or(0.5), seed, &cfg).py()?,
        other => return Err(PyValueError::new_err(format!("unknown method '{other}'"))),
    };
    Ok(PyClassifier { inner, cv_errors })
}

/// Markov-switching CPD dataset; returns `(series, true_boundaries)`.
#[pyfunction]
#[pyo3(signature = (dim, ds, dn=None, q=1.8, n_epochs=200, epoch_len=100, seed=0))]
fn gen_cpd(
    dim: usize,
    ds: usize,
    dn: Option<usize>,
    q: f64,
    n_epochs: usize,
    epoch_len: usize,
    seed: u64,
) -> PyResult<(PyTimeSeries, Vec<usize>)> {
    let spec = CpdSynthSpec {
        dim,
        d_s: ds,
        d_n: dn.unwrap_or(dim.saturating_sub(ds)),
        q,
        n_epochs,
        epoch_len,
        seed,
    };
    let (inner, truth) = gen_cpd_dataset(&spec).py()?;
    Ok((PyTimeSeries { inner }, truth.boundaries))
}

/// Two-class dataset; returns `(train, test)` with `test` None for the
/// subspace variants.
#[pyfunction]
#[pyo3(signature = (variant, param=None, seed=0))]
fn gen_classif(variant: &str, param: Option<f64>, seed: u64) -> PyResult<(PyTimeSeries, Option<PyTimeSeries>)> {
    let spec = ClassifSynthSpec {
        variant: ClassifVariant::from_name(variant, param).py()?,
        seed,
    };
    let ds = gen_classif_dataset(&spec).py()?;
    Ok((
        PyTimeSeries { inner: ds.train },
        ds.test.map(|inner| PyTimeSeries { inner }),
    ))
}

#[pymodule]
fn pynonstat(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTimeSeries>()?;
    m.add_class::<PySsaResult>()?;
    m.add_class::<PyClassifier>()?;
    m.add_function(wrap_pyfunction!(find_stationary, m)?)?;
    m.add_function(wrap_pyfunction!(find_most_nonstationary, m)?)?;
    m.add_function(wrap_pyfunction!(select_ds, m)?)?;
    m.add_function(wrap_pyfunction!(kl_gauss, m)?)?;
    m.add_function(wrap_pyfunction!(detect_slcd, m)?)?;
    m.add_function(wrap_pyfunction!(detect_kl, m)?)?;
    m.add_function(wrap_pyfunction!(detect_cusum, m)?)?;
    m.add_function(wrap_pyfunction!(roc_auc, m)?)?;
    m.add_function(wrap_pyfunction!(subspace_angle, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(gen_cpd, m)?)?;
    m.add_function(wrap_pyfunction!(gen_classif, m)?)?;
    Ok(())
}
