//! Property checks shared by the per-module tests and the acceptance report.
//! Each returns a short summary on success and a description on failure.

use nalgebra::{DMatrix, DVector};
use nonstat::classify::{slda_gradient, slda_loss, ClassEpochStats};
use nonstat::lrtest::lr_statistic;
use nonstat::ssa::standardized_epoch_stats;
use nonstat::stats::{kl_gauss, EpochStats};
use nonstat::synth::hierarchical_normal;
use nonstat::{
    find_most_nonstationary, find_stationary, random_projection, ssa_loss, ssa_loss_gradient,
    GaussianParams, SsaConfig, TimeSeries,
};

use super::*;

pub type Check = std::result::Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

pub fn random_stats(g: &mut Gen, dim: usize, n: usize) -> Vec<EpochStats> {
    (0..n)
        .map(|_| EpochStats {
            mean: gaussian_vector(g, dim) * 0.5,
            cov: spd(g, dim),
            count: 100,
        })
        .collect()
}

pub fn kl_nonnegativity(n: u64) -> Check {
    let mut worst: f64 = 0.0;
    for s in 0..n {
        let mut g = gen(s);
        let d = 1 + s as usize % 5;
        let p = GaussianParams::new(gaussian_vector(&mut g, d), spd(&mut g, d)).unwrap();
        let q = GaussianParams::new(gaussian_vector(&mut g, d), spd(&mut g, d)).unwrap();
        let kl = kl_gauss(&p, &q).unwrap();
        ensure(kl >= 0.0, || format!("KL = {kl} < 0 at instance {s}"))?;
        worst = worst.max(kl_gauss(&p, &p).unwrap().abs());
    }
    ensure(worst < 1e-10, || format!("KL(p||p) = {worst}"))?;
    Ok(format!("{n} pairs, max |KL(p||p)| = {worst:.1e}"))
}

/// Largest relative error between the analytic SSA gradient and central
/// differences over `n` random instances.
pub fn ssa_gradient(n: u64) -> Check {
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for inst in 0..n {
        let mut g = gen(inst);
        let dim = 2 + inst as usize % 5;
        let d = 1 + inst as usize % (dim - 1);
        let stats = random_stats(&mut g, dim, 3 + inst as usize % 4);
        let b = random_projection(dim, d, inst).unwrap().matrix().clone();
        let grad = ssa_loss_gradient(&b, &stats).unwrap();
        let mut fd = DMatrix::zeros(d, dim);
        for i in 0..d {
            for j in 0..dim {
                let (mut p, mut m) = (b.clone(), b.clone());
                p[(i, j)] += h;
                m[(i, j)] -= h;
                fd[(i, j)] = (ssa_loss(&p, &stats).unwrap() - ssa_loss(&m, &stats).unwrap()) / (2.0 * h);
            }
        }
        worst = worst.max((&grad - &fd).norm() / grad.norm().max(1e-8));
    }
    ensure(worst <= 1e-5, || format!("max relative error {worst:.2e}"))?;
    Ok(format!("{n} instances, max relative error {worst:.1e}"))
}

/// Labelled series with alternating classes and drifting class means.
pub fn labelled(seed: u64, dim: usize, n_epochs: usize, per_class: usize) -> TimeSeries {
    let mut g = gen(seed);
    let sep = gaussian_vector(&mut g, dim);
    let mut cols = Vec::new();
    let mut labels = Vec::new();
    for _ in 0..n_epochs {
        let drift = gaussian_vector(&mut g, dim) * 0.5;
        let scale = spd(&mut g, dim).cholesky().unwrap().l();
        for _ in 0..per_class {
            for c in [1u8, 2] {
                let m = if c == 1 { &drift + &sep } else { drift.clone() };
                cols.push(m + &scale * gaussian_vector(&mut g, dim));
                labels.push(c);
            }
        }
    }
    TimeSeries::with_labels(DMatrix::from_columns(&cols), labels).unwrap()
}

pub fn slda_gradient_check(n: u64) -> Check {
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for inst in 0..n {
        let dim = 2 + inst as usize % 5;
        let epochs = 2 + inst as usize % 4;
        let ts = labelled(inst, dim, epochs, 15);
        let stats = ClassEpochStats::from_series(&ts, epochs).unwrap();
        let mut g = gen(inst + 500);
        let w = gaussian_vector(&mut g, dim).normalize();
        let alpha = (inst % 11) as f64 / 10.0;
        let grad = slda_gradient(&w, alpha, &stats).unwrap();
        let fd = DVector::from_fn(dim, |i, _| {
            let mut e = DVector::zeros(dim);
            e[i] = h;
            (slda_loss(&(&w + &e), alpha, &stats).unwrap() - slda_loss(&(&w - &e), alpha, &stats).unwrap())
                / (2.0 * h)
        });
        worst = worst.max((&grad - &fd).norm() / grad.norm().max(1e-8));
    }
    ensure(worst <= 1e-5, || format!("max relative error {worst:.2e}"))?;
    Ok(format!("{n} instances, max relative error {worst:.1e}"))
}

/// Orthogonal mix of `d_s` stationary and `d_n` variance-switching sources.
pub fn mixed(seed: u64, d_s: usize, d_n: usize, epochs: usize, len: usize) -> (TimeSeries, DMatrix<f64>) {
    let dim = d_s + d_n;
    let mut g = gen(seed);
    let a = random_projection(dim, dim, seed + 7).unwrap().matrix().clone();
    let blocks: Vec<_> = (0..epochs)
        .map(|e| {
            let mut v = DVector::from_element(dim, 1.0);
            for k in d_s..dim {
                v[k] = if (e + k) % 2 == 0 { 0.3 } else { 3.0 };
            }
            (DVector::zeros(dim), DMatrix::from_diagonal(&v))
        })
        .collect();
    let src = epoch_series(&mut g, &blocks, len);
    (src.project(&a).unwrap(), a)
}

pub fn orthonormality(n: u64) -> Check {
    let mut worst: f64 = 0.0;
    for seed in 0..n {
        let (ts, _) = mixed(seed, 3, 2, 10, 150);
        let cfg = SsaConfig { seed, ..Default::default() };
        for sol in [
            find_stationary(&ts, 3, &cfg).unwrap(),
            find_most_nonstationary(&ts, 2, &cfg).unwrap(),
        ] {
            worst = worst.max(sol.max_orthonormality_error);
        }
    }
    ensure(worst < 1e-8, || format!("max |BBᵀ - I| = {worst:.2e}"))?;
    Ok(format!("{} fits, max |BBᵀ - I| over all iterates = {worst:.1e}", 2 * n))
}

pub fn lr_null() -> Check {
    let mut worst: f64 = 0.0;
    for d in 1..6 {
        let stats: Vec<EpochStats> = (0..7)
            .map(|i| EpochStats {
                mean: DVector::zeros(d),
                cov: DMatrix::identity(d, d),
                count: 50 + i,
            })
            .collect();
        worst = worst.max(lr_statistic(&stats, d).unwrap().abs());
    }
    ensure(worst < 1e-9, || format!("|Λ| = {worst:.2e}"))?;
    Ok(format!("max |Λ| = {worst:.1e}"))
}

/// Ranks 20 candidate projections by Λ and by the SSA loss on standardized
/// equal-size epochs.
pub fn lr_argmax_equivalence() -> Check {
    let mut g = gen(21);
    let blocks: Vec<_> = (0..10).map(|_| (gaussian_vector(&mut g, 5) * 0.3, spd(&mut g, 5))).collect();
    let ts = epoch_series(&mut g, &blocks, 80);
    let (stats, _) = standardized_epoch_stats(&ts, 10).unwrap();
    let d = 3;
    let mut by_loss = Vec::new();
    let mut by_lambda = Vec::new();
    for c in 0..20 {
        let b = random_projection(5, d, 100 + c).unwrap().matrix().clone();
        let proj: Vec<EpochStats> = stats.iter().map(|s| s.project(&b)).collect();
        by_loss.push(ssa_loss(&b, &stats).unwrap());
        by_lambda.push(lr_statistic(&proj, d).unwrap());
    }
    let order = |v: &[f64]| {
        let mut o: Vec<usize> = (0..v.len()).collect();
        o.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
        o
    };
    let (a, b) = (order(&by_loss), order(&by_lambda));
    ensure(a == b, || format!("orders differ: {a:?} vs {b:?}"))?;
    Ok(format!("20 candidates, identical ranking, argmax #{}", a[19]))
}

pub fn marginalization() -> Check {
    let n = 100_000;
    let mut out = Vec::new();
    for (seed, (alpha, beta, s0)) in [(0.0, 1.0, 1.0), (1.5, 0.5, 2.0), (-2.0, 2.0, 0.3)].into_iter().enumerate() {
        let x = hierarchical_normal(n, alpha, beta, s0, seed as u64).unwrap();
        let mean = x.iter().sum::<f64>() / n as f64;
        let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let v: f64 = s0 * s0 + beta * beta;
        let zm = (mean - alpha).abs() / (v / n as f64).sqrt();
        let zv = (var - v).abs() / (v * (2.0 / (n - 1) as f64).sqrt());
        ensure(zm <= 3.0 && zv <= 3.0, || {
            format!("(α={alpha}, β={beta}, σ0={s0}): mean z {zm:.2}, variance z {zv:.2}")
        })?;
        out.push(format!("{zv:.2}σ"));
    }
    Ok(format!("n = {n}, variance deviations {}", out.join(", ")))
}

fn line_angle_deg(u: &DVector<f64>, v: &DVector<f64>) -> f64 {
    (u.dot(v).abs() / (u.norm() * v.norm())).min(1.0).acos().to_degrees()
}

/// Loss-maximizing direction by exhaustive 0.1° sweep over half a turn.
fn sweep_argmax(stats: &[EpochStats]) -> DVector<f64> {
    let mut best = (f64::NEG_INFINITY, DVector::zeros(2));
    for k in 0..1800 {
        let t = (k as f64 * 0.1).to_radians();
        let b = DMatrix::from_row_slice(1, 2, &[t.cos(), t.sin()]);
        let l = ssa_loss(&b, stats).unwrap();
        if l > best.0 {
            best = (l, DVector::from_row_slice(&[t.cos(), t.sin()]));
        }
    }
    best.1
}

/// Two sources mixed by a fixed rotation; epochs alternate between two
/// source covariances `[var s, cov sn, var n]`.
fn two_panel(seed: u64, covs: [[f64; 3]; 2]) -> (TimeSeries, DMatrix<f64>) {
    let mut g = gen(seed);
    let blocks: Vec<_> = (0..10)
        .map(|e| {
            let [s, sn, n] = covs[e % 2];
            (DVector::zeros(2), DMatrix::from_row_slice(2, 2, &[s, sn, sn, n]))
        })
        .collect();
    let a = rotation2(0.6);
    (epoch_series(&mut g, &blocks, 2000).project(&a).unwrap(), a)
}

/// Returns (angle to the sweep argmax, deviation from orthogonality to the
/// true s-projection), both in degrees.
fn panel(seed: u64, covs: [[f64; 3]; 2]) -> (f64, f64) {
    let (ts, a) = two_panel(seed, covs);
    let cfg = SsaConfig::default();
    let sol = find_most_nonstationary(&ts, 1, &cfg).unwrap();
    let (stats, _) = standardized_epoch_stats(&ts, cfg.n_epochs).unwrap();
    let found = sol.projection.matrix().row(0).transpose();
    let raw = sol.demixing().row(0).transpose();
    (
        line_angle_deg(&found, &sweep_argmax(&stats)),
        90.0 - line_angle_deg(&raw, &a.column(0).into_owned()),
    )
}

pub fn angle_sweep_oracle() -> Check {
    let (left, left_off) = panel(11, [[1.0, 0.0, 1.0], [1.0, 0.0, 4.0]]);
    let (right, right_off) = panel(12, [[1.0, 0.6, 1.0], [1.0, -0.6, 2.0]]);
    ensure(left < 1.0 && right < 1.0, || format!("oracle gaps {left:.2}°, {right:.2}°"))?;
    ensure(left_off < 5.0, || format!("variance-only panel {left_off:.2}° off orthogonal"))?;
    ensure(right_off > 5.0, || format!("covariance panel only {right_off:.2}° off orthogonal"))?;
    Ok(format!(
        "oracle gaps {left:.2}°/{right:.2}°, tilt from orthogonal {left_off:.2}°/{right_off:.2}°"
    ))
}
