//! Seeded synthetic benchmarks: epoch-wise Markov-switching mixtures for
//! change-point detection and the two-class simulation families for the
//! discriminant experiments.
//!
//! Every dataset is a deterministic function of its spec. Independent parts
//! (mixing matrix, chain, covariances, samples, outliers) draw from separate
//! streams of the same seed, so e.g. switching outliers off leaves the clean
//! samples untouched.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::rng::{self, streams, StreamRng};
use crate::stats::TimeSeries;

pub const N_MODELS: usize = 5;
pub const STAY_PROBABILITY: f64 = 0.9;
pub const SWITCH_PROBABILITY: f64 = 0.025;

/// Haar-distributed orthogonal `D x D` matrix.
pub fn random_orthogonal(dim: usize, seed: u64) -> DMatrix<f64> {
    let mut g = rng::stream(seed, streams::MIXING);
    linalg::random_orthogonal(dim, &mut g)
}

/// Five-state chain that stays with probability 0.9 and moves to each other
/// state with probability 0.025.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkovModelState {
    pub current: usize,
    pub transition: [[f64; N_MODELS]; N_MODELS],
}

impl MarkovModelState {
    pub fn new(current: usize) -> Result<Self> {
        if current >= N_MODELS {
            return Err(Error::InvalidArgument(format!("state {current} out of range")));
        }
        let mut transition = [[SWITCH_PROBABILITY; N_MODELS]; N_MODELS];
        for (i, row) in transition.iter_mut().enumerate() {
            row[i] = STAY_PROBABILITY;
        }
        Ok(Self {
            current,
            transition,
        })
    }

    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let row = &self.transition[self.current];
        let mut acc = 0.0;
        let mut next = N_MODELS - 1;
        for (j, p) in row.iter().enumerate() {
            acc += p;
            if u < acc {
                next = j;
                break;
            }
        }
        self.current = next;
        next
    }
}

/// Sequence of active models for `n_epochs` epochs, starting uniformly.
pub fn markov_sequence(n_epochs: usize, seed: u64) -> Vec<usize> {
    let mut g = rng::stream(seed, streams::MARKOV);
    let start = g.random_range(0..N_MODELS);
    let mut chain = MarkovModelState::new(start).expect("start state in range");
    let mut out = Vec::with_capacity(n_epochs);
    if n_epochs > 0 {
        out.push(start);
    }
    for _ in 1..n_epochs {
        out.push(chain.step(&mut g));
    }
    out
}

/// The 5-point grid `{q^-1, q^-1/2, 1, q^1/2, q}`.
pub fn variance_grid(q: f64) -> [f64; 5] {
    [1.0 / q, 1.0 / q.sqrt(), 1.0, q.sqrt(), q]
}

/// Five diagonal covariances of dimension `dim`; every diagonal entry is
/// drawn with replacement from [`variance_grid`].
pub fn gen_covariances(q: f64, dim: usize, seed: u64) -> Result<Vec<DMatrix<f64>>> {
    if !(q >= 1.0) || !q.is_finite() {
        return Err(Error::InvalidVariantParams(format!("power change q = {q} must be >= 1")));
    }
    let grid = variance_grid(q);
    let mut g = rng::stream(seed, streams::COVARIANCES);
    Ok((0..N_MODELS)
        .map(|_| {
            let diag = DVector::from_fn(dim, |_, _| grid[g.random_range(0..grid.len())]);
            DMatrix::from_diagonal(&diag)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpdSynthSpec {
    pub dim: usize,
    pub d_s: usize,
    pub d_n: usize,
    pub q: f64,
    pub n_epochs: usize,
    pub epoch_len: usize,
    pub seed: u64,
}

impl CpdSynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.d_s + self.d_n != self.dim || self.dim == 0 {
            return Err(Error::InvalidVariantParams(format!(
                "d_s + d_n = {} + {} does not equal D = {}",
                self.d_s, self.d_n, self.dim
            )));
        }
        if !(self.q >= 1.0) || !self.q.is_finite() {
            return Err(Error::InvalidVariantParams(format!("q = {} must be >= 1", self.q)));
        }
        if self.n_epochs == 0 || self.epoch_len < 2 {
            return Err(Error::InvalidVariantParams(
                "need at least one epoch of at least 2 samples".into(),
            ));
        }
        Ok(())
    }
}

/// Generating parameters of a synthetic dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// Orthogonal mixing `A`, observations `x = A s`.
    pub mixing: DMatrix<f64>,
    /// Epoch boundaries where the active model changes.
    pub boundaries: Vec<usize>,
    /// Rows of `A^T` extracting the stationary sources.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stationary_projection: Option<DMatrix<f64>>,
    /// Active model index per epoch.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub active_models: Vec<usize>,
    /// Diagonals of the model covariances of the non-stationary sources.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub model_variances: Vec<Vec<f64>>,
    /// Observation-space direction of the stationary discriminative source.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub discriminative_direction: Option<DVector<f64>>,
}

fn normal(g: &mut StreamRng) -> f64 {
    g.sample(StandardNormal)
}

/// Markov-switching mixture: `d_s` stationary `N(0, I)` sources and `d_n`
/// sources drawn from the epoch's active model, mixed orthogonally.
pub fn gen_cpd_dataset(spec: &CpdSynthSpec) -> Result<(TimeSeries, GroundTruth)> {
    spec.validate()?;
    let mixing = random_orthogonal(spec.dim, spec.seed);
    let models = markov_sequence(spec.n_epochs, spec.seed);
    let covs = gen_covariances(spec.q, spec.d_n, spec.seed)?;
    let sds: Vec<Vec<f64>> = covs
        .iter()
        .map(|c| c.diagonal().iter().map(|v| v.sqrt()).collect())
        .collect();
    let t = spec.n_epochs * spec.epoch_len;
    let mut g = rng::stream(spec.seed, streams::DATA);
    let mut sources = DMatrix::zeros(spec.dim, t);
    for (e, &k) in models.iter().enumerate() {
        for i in 0..spec.epoch_len {
            let col = e * spec.epoch_len + i;
            for r in 0..spec.d_s {
                sources[(r, col)] = normal(&mut g);
            }
            for r in 0..spec.d_n {
                sources[(spec.d_s + r, col)] = sds[k][r] * normal(&mut g);
            }
        }
    }
    let data = &mixing * sources;
    let boundaries = (1..models.len())
        .filter(|&e| models[e] != models[e - 1])
        .collect();
    let stationary_projection = (spec.d_s > 0)
        .then(|| mixing.columns(0, spec.d_s).transpose());
    let truth = GroundTruth {
        mixing,
        boundaries,
        stationary_projection,
        active_models: models,
        model_variances: covs.iter().map(|c| c.diagonal().iter().copied().collect()).collect(),
        discriminative_direction: None,
    };
    Ok((TimeSeries::new(data)?, truth))
}

/// The two-class simulation families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum ClassifVariant {
    /// Six sources, every one separated by 0.7.
    Simple,
    /// `Simple` with a fraction `rate` of each training class hit by large
    /// additive outliers.
    Outliers { rate: f64 },
    /// Five sources separated by 0.2, one by `separation`.
    Hard { separation: f64 },
    /// One source separated by 1.1, two by `separation`, three by 0.2.
    Tapered { separation: f64 },
    /// Three sources: non-discriminative, stationary discriminative, and
    /// discriminative with a middle epoch whose class means scale with `a_ns`.
    SubspaceSimple { a_ns: f64 },
    /// Six sources over seven epochs; source 1 has a random class-shared mean
    /// offset per epoch with variance `kappa`.
    SubspaceRealistic { kappa: f64 },
    /// `SubspaceRealistic` at `kappa = 0.5` with an eighth test epoch whose
    /// offset is fixed to `a8`.
    TransferSmall { a8: f64 },
    /// `TransferSmall` with a second stationary discriminative source and
    /// `b = 2`, `τ = 1`, `c = 0`.
    TransferLarge { a8: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifSynthSpec {
    #[serde(flatten)]
    pub variant: ClassifVariant,
    pub seed: u64,
}

/// Labelled training and test series.
#[derive(Debug, Clone)]
pub struct ClassifDataset {
    pub train: TimeSeries,
    /// Absent for the subspace simulations, which are scored by angle.
    pub test: Option<TimeSeries>,
    pub truth: GroundTruth,
    /// Number of training epochs (1 for the stationary families).
    pub n_epochs: usize,
}

impl ClassifVariant {
    /// Variant by name (`simple`, `subspace_simple`, ...; `-` works too) with
    /// its parameter, or the usual default when `param` is absent.
    pub fn from_name(name: &str, param: Option<f64>) -> Result<Self> {
        let p = |d: f64| param.unwrap_or(d);
        Ok(match name.replace('-', "_").as_str() {
            "simple" => ClassifVariant::Simple,
            "outliers" => ClassifVariant::Outliers { rate: p(0.02) },
            "hard" => ClassifVariant::Hard { separation: p(0.2) },
            "tapered" => ClassifVariant::Tapered { separation: p(0.5) },
            "subspace_simple" => ClassifVariant::SubspaceSimple { a_ns: p(5.0) },
            "subspace_realistic" => ClassifVariant::SubspaceRealistic { kappa: p(1.0) },
            "transfer_small" => ClassifVariant::TransferSmall { a8: p(2.0) },
            "transfer_large" => ClassifVariant::TransferLarge { a8: p(2.0) },
            other => return Err(Error::InvalidArgument(format!("unknown variant '{other}'"))),
        })
    }
}

pub const SIMPLE_DIM: usize = 6;
pub const SIMPLE_TRAIN_PER_CLASS: usize = 75;
pub const SIMPLE_TEST_PER_CLASS: usize = 150;
pub const SUBSPACE_SIMPLE_PER_CLASS: usize = 50;
pub const REALISTIC_EPOCHS: usize = 7;
pub const REALISTIC_PER_CLASS: usize = 11;
pub const TRANSFER_TEST_PER_CLASS: usize = 150;
pub const OUTLIER_SCALE: f64 = 20.0;

/// Per-source class means for one epoch: `(class 1, class 2)`.
type EpochMeans = Vec<(f64, f64)>;

/// Draws `per_class` samples of each class with unit variance around the
/// given means, alternating classes.
fn draw_epoch(g: &mut StreamRng, means: &EpochMeans, per_class: usize, cols: &mut Vec<DVector<f64>>, labels: &mut Vec<u8>) {
    for _ in 0..per_class {
        for c in 0..2u8 {
            let v = DVector::from_fn(means.len(), |r, _| {
                let m = if c == 0 { means[r].0 } else { means[r].1 };
                m + normal(g)
            });
            cols.push(v);
            labels.push(c + 1);
        }
    }
}

fn assemble(cols: Vec<DVector<f64>>, labels: Vec<u8>, mixing: &DMatrix<f64>) -> Result<TimeSeries> {
    let sources = DMatrix::from_columns(&cols);
    TimeSeries::with_labels(mixing * sources, labels)
}

fn separations(seps: &[f64]) -> EpochMeans {
    seps.iter().map(|&s| (0.0, s)).collect()
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidVariantParams(msg()))
    }
}

struct RealisticParams {
    tau: f64,
    b: f64,
    c: f64,
    kappa: f64,
    second_sep: bool,
}

impl RealisticParams {
    fn means(&self, offset: f64) -> EpochMeans {
        let mut m = vec![(offset, self.tau + offset), (0.0, self.b)];
        for j in 0..4 {
            if self.second_sep && j == 3 {
                m.push((0.0, self.b));
            } else {
                m.push((0.0, self.c));
            }
        }
        m
    }
}

pub fn gen_classif_dataset(spec: &ClassifSynthSpec) -> Result<ClassifDataset> {
    let seed = spec.seed;
    let mut g = rng::stream(seed, streams::DATA);
    match &spec.variant {
        ClassifVariant::Simple
        | ClassifVariant::Outliers { .. }
        | ClassifVariant::Hard { .. }
        | ClassifVariant::Tapered { .. } => {
            let seps: Vec<f64> = match spec.variant {
                ClassifVariant::Simple | ClassifVariant::Outliers { .. } => vec![0.7; SIMPLE_DIM],
                ClassifVariant::Hard { separation } => {
                    check(separation.is_finite() && separation >= 0.0, || {
                        format!("separation {separation} must be nonnegative")
                    })?;
                    let mut v = vec![0.2; SIMPLE_DIM];
                    v[0] = separation;
                    v
                }
                ClassifVariant::Tapered { separation } => {
                    check(separation.is_finite() && separation >= 0.0, || {
                        format!("separation {separation} must be nonnegative")
                    })?;
                    let mut v = vec![0.2; SIMPLE_DIM];
                    v[0] = 1.1;
                    v[1] = separation;
                    v[2] = separation;
                    v
                }
                _ => unreachable!(),
            };
            let mixing = random_orthogonal(SIMPLE_DIM, seed);
            let means = separations(&seps);
            let (mut tc, mut tl) = (Vec::new(), Vec::new());
            draw_epoch(&mut g, &means, SIMPLE_TRAIN_PER_CLASS, &mut tc, &mut tl);
            let (mut sc, mut sl) = (Vec::new(), Vec::new());
            draw_epoch(&mut g, &means, SIMPLE_TEST_PER_CLASS, &mut sc, &mut sl);
            let mut train = assemble(tc, tl, &mixing)?;
            if let ClassifVariant::Outliers { rate } = spec.variant {
                check((0.0..1.0).contains(&rate), || format!("outlier rate {rate} outside [0, 1)"))?;
                train = add_outliers(train, rate, seed)?;
            }
            let test = assemble(sc, sl, &mixing)?;
            Ok(ClassifDataset {
                train,
                test: Some(test),
                truth: classif_truth(mixing, None),
                n_epochs: 1,
            })
        }
        ClassifVariant::SubspaceSimple { a_ns } => {
            let a_ns = *a_ns;
            check(a_ns.is_finite() && a_ns >= 1.0, || {
                format!("non-stationarity level {a_ns} must be >= 1")
            })?;
            let mixing = random_orthogonal(3, seed);
            let (mut cols, mut labels) = (Vec::new(), Vec::new());
            for e in 0..3 {
                let third = if e == 1 {
                    let lo: f64 = Uniform::new_inclusive(-a_ns - 1.0, 0.0)
                        .expect("valid interval")
                        .sample(&mut g);
                    let hi: f64 = Uniform::new_inclusive(1.0, a_ns)
                        .expect("valid interval")
                        .sample(&mut g);
                    (lo, hi)
                } else {
                    (0.0, 1.0)
                };
                let means = vec![(0.0, 0.0), (0.0, 0.7), third];
                draw_epoch(&mut g, &means, SUBSPACE_SIMPLE_PER_CLASS, &mut cols, &mut labels);
            }
            let train = assemble(cols, labels, &mixing)?;
            let dir = mixing.column(1).into_owned();
            Ok(ClassifDataset {
                train,
                test: None,
                truth: classif_truth(mixing, Some(dir)),
                n_epochs: 3,
            })
        }
        ClassifVariant::SubspaceRealistic { kappa } => {
            check(kappa.is_finite() && *kappa >= 0.0, || format!("kappa {kappa} must be >= 0"))?;
            let p = RealisticParams {
                tau: 2.0,
                b: 1.2,
                c: 0.2,
                kappa: *kappa,
                second_sep: false,
            };
            realistic(&mut g, seed, &p, None)
        }
        ClassifVariant::TransferSmall { a8 } | ClassifVariant::TransferLarge { a8 } => {
            check(a8.is_finite(), || format!("test offset {a8} must be finite"))?;
            let large = matches!(spec.variant, ClassifVariant::TransferLarge { .. });
            let p = if large {
                RealisticParams {
                    tau: 1.0,
                    b: 2.0,
                    c: 0.0,
                    kappa: 0.5,
                    second_sep: true,
                }
            } else {
                RealisticParams {
                    tau: 2.0,
                    b: 1.2,
                    c: 0.2,
                    kappa: 0.5,
                    second_sep: false,
                }
            };
            realistic(&mut g, seed, &p, Some(*a8))
        }
    }
}

fn realistic(
    g: &mut StreamRng,
    seed: u64,
    p: &RealisticParams,
    test_offset: Option<f64>,
) -> Result<ClassifDataset> {
    let mixing = random_orthogonal(SIMPLE_DIM, seed);
    let sd = p.kappa.sqrt();
    let (mut cols, mut labels) = (Vec::new(), Vec::new());
    for _ in 0..REALISTIC_EPOCHS {
        let a = sd * normal(g);
        draw_epoch(g, &p.means(a), REALISTIC_PER_CLASS, &mut cols, &mut labels);
    }
    let train = assemble(cols, labels, &mixing)?;
    let test = match test_offset {
        Some(a8) => {
            let (mut c, mut l) = (Vec::new(), Vec::new());
            draw_epoch(g, &p.means(a8), TRANSFER_TEST_PER_CLASS, &mut c, &mut l);
            Some(assemble(c, l, &mixing)?)
        }
        None => None,
    };
    let dir = mixing.column(1).into_owned();
    Ok(ClassifDataset {
        train,
        test,
        truth: classif_truth(mixing, Some(dir)),
        n_epochs: REALISTIC_EPOCHS,
    })
}

fn classif_truth(mixing: DMatrix<f64>, dir: Option<DVector<f64>>) -> GroundTruth {
    GroundTruth {
        mixing,
        boundaries: Vec::new(),
        stationary_projection: None,
        active_models: Vec::new(),
        model_variances: Vec::new(),
        discriminative_direction: dir,
    }
}

/// Adds `N(0, (20 s)^2 I)` to `round(rate n_c)` uniformly chosen samples of
/// each class, `s` being the pooled per-channel standard deviation.
fn add_outliers(ts: TimeSeries, rate: f64, seed: u64) -> Result<TimeSeries> {
    if rate == 0.0 {
        return Ok(ts);
    }
    use rand::seq::index::sample;
    let labels = ts.labels().expect("training data is labelled").to_vec();
    let data = ts.data();
    let (d, t) = data.shape();
    let mean = data.column_mean();
    let mut var = 0.0;
    for col in data.column_iter() {
        var += (col - &mean).norm_squared();
    }
    let scale = OUTLIER_SCALE * (var / ((t - 1) * d) as f64).sqrt();
    let mut g = rng::stream(seed, streams::OUTLIERS);
    let mut out = data.clone();
    for c in [1u8, 2] {
        let idx: Vec<usize> = (0..t).filter(|&i| labels[i] == c).collect();
        let k = (rate * idx.len() as f64).round() as usize;
        for pos in sample(&mut g, idx.len(), k.min(idx.len())).into_iter() {
            let i = idx[pos];
            for r in 0..d {
                out[(r, i)] += scale * normal(&mut g);
            }
        }
    }
    TimeSeries::with_labels(out, labels)
}

/// `n` draws of `x | θ ~ N(θ, σ0²)` with a fresh `θ ~ N(mean, β²)` per
/// draw; marginally `x ~ N(mean, σ0² + β²)`.
pub fn hierarchical_normal(n: usize, mean: f64, beta: f64, sigma0: f64, seed: u64) -> Result<Vec<f64>> {
    if !(beta >= 0.0 && sigma0 >= 0.0 && mean.is_finite()) {
        return Err(Error::InvalidVariantParams(format!(
            "need finite mean and nonnegative spreads, got ({mean}, {beta}, {sigma0})"
        )));
    }
    let mut g = rng::stream(seed, streams::DATA);
    Ok((0..n)
        .map(|_| {
            let theta = mean + beta * normal(&mut g);
            theta + sigma0 * normal(&mut g)
        })
        .collect())
}
