mod common;

use common::*;
use nalgebra::DMatrix;
use nonstat::eval::{
    auc, random_angle_density, roc_from_sweep, run_cpd_experiment, run_classif_experiment,
    subspace_angle, vector_angle, ClassifExperimentSpec, ClassifMethod, CpdAlgorithm,
    ExperimentSpec, Preprocessing,
};
use nonstat::random_projection;
use nonstat::special::chi2_sf;
use nonstat::synth::{ClassifVariant, CpdSynthSpec};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

fn sweep(seed: u64, n_epochs: usize, n_tau: usize) -> Vec<(f64, Vec<usize>)> {
    let mut g = gen(seed);
    (0..n_tau)
        .map(|i| {
            let det: Vec<usize> = (1..n_epochs).filter(|_| g.random::<f64>() < 0.3).collect();
            (i as f64, det)
        })
        .collect()
}

proptest! {
    #[test]
    fn auc_is_a_probability(seed in any::<u64>(), n in 3usize..40) {
        let truth: Vec<usize> = (1..n).step_by(3).collect();
        let roc = roc_from_sweep(&sweep(seed, n, 8), &truth, n).unwrap();
        let a = auc(&roc);
        prop_assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn auc_ignores_sweep_order(seed in any::<u64>(), n in 3usize..40) {
        let truth: Vec<usize> = (1..n).step_by(2).collect();
        let s = sweep(seed, n, 10);
        let mut shuffled: Vec<(f64, Vec<usize>)> = s.iter().enumerate().map(|(i, (_, d))| (100.0 - i as f64, d.clone())).collect();
        shuffled.shuffle(&mut gen(seed ^ 1));
        let a = auc(&roc_from_sweep(&s, &truth, n).unwrap());
        let b = auc(&roc_from_sweep(&shuffled, &truth, n).unwrap());
        prop_assert_eq!(a, b);
    }

    #[test]
    fn angles_symmetric_and_basis_free(seed in any::<u64>(), dim in 3usize..8) {
        let u = random_projection(dim, 2, seed).unwrap().matrix().transpose();
        let v = random_projection(dim, 2, seed ^ 7).unwrap().matrix().transpose();
        let a = subspace_angle(&u, &v).unwrap();
        prop_assert!((a - subspace_angle(&v, &u).unwrap()).abs() < 1e-10);
        let q = random_projection(2, 2, seed ^ 9).unwrap().matrix().clone();
        prop_assert!((a - subspace_angle(&(&u * &q), &(&v * q.transpose())).unwrap()).abs() < 1e-10);
        prop_assert!((0.0..=std::f64::consts::FRAC_PI_2 + 1e-12).contains(&a));
    }
}

#[test]
fn truth_as_detector_is_perfect() {
    let truth = vec![3, 7, 12];
    let roc = roc_from_sweep(&[(0.0, truth.clone())], &truth, 20).unwrap();
    assert_eq!(auc(&roc), 1.0);
}

#[test]
fn random_line_angles_follow_sine_power_density() {
    // Angles between independent random lines in R^6.
    let dim = 6;
    let n = 20_000;
    let bins = 15;
    let width = std::f64::consts::FRAC_PI_2 / bins as f64;
    let mut counts = vec![0usize; bins];
    for i in 0..n as u64 {
        let u = random_projection(dim, 1, 2 * i).unwrap().matrix().transpose();
        let v = random_projection(dim, 1, 2 * i + 1).unwrap().matrix().transpose();
        let a = vector_angle(&u.column(0).into_owned(), &v.column(0).into_owned()).unwrap();
        counts[((a / width) as usize).min(bins - 1)] += 1;
    }
    // Expected counts by Simpson integration of the density on each bin.
    let mut chi2 = 0.0;
    let mut used = 0;
    for (b, &c) in counts.iter().enumerate() {
        let (lo, hi) = (b as f64 * width, (b + 1) as f64 * width);
        let mass = (0..=100)
            .map(|k| {
                let t = lo + (hi - lo) * k as f64 / 100.0;
                let w = if k == 0 || k == 100 { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
                w * random_angle_density(t, dim).unwrap()
            })
            .sum::<f64>()
            * (hi - lo)
            / 300.0;
        let expected = mass * n as f64;
        if expected >= 5.0 {
            chi2 += (c as f64 - expected).powi(2) / expected;
            used += 1;
        }
    }
    let p = chi2_sf(chi2, used - 1).unwrap();
    assert!(p > 0.01, "chi2 {chi2} on {} dof, p = {p}", used - 1);
}

#[test]
fn experiments_are_reproducible() {
    let spec = ExperimentSpec {
        generator: CpdSynthSpec { dim: 3, d_s: 2, d_n: 1, q: 3.0, n_epochs: 20, epoch_len: 50, seed: 0 },
        algorithm: CpdAlgorithm::Slcd,
        arms: vec![Preprocessing::None, Preprocessing::SsaMax, Preprocessing::RandomProjection],
        tau: None,
        n_realizations: 3,
        seed: 5,
        ssa: Default::default(),
    };
    let a = run_cpd_experiment(&spec).unwrap();
    assert_eq!(a, run_cpd_experiment(&spec).unwrap());
    assert_eq!(a.rows.len(), 9);
    let c = ClassifExperimentSpec {
        variant: ClassifVariant::SubspaceSimple { a_ns: 4.0 },
        methods: vec![ClassifMethod::Lda, ClassifMethod::Slda { alpha: 0.5 }],
        n_realizations: 3,
        seed: 2,
        tradeoff: Default::default(),
    };
    let x = run_classif_experiment(&c).unwrap();
    let y = run_classif_experiment(&c).unwrap();
    assert_eq!(format!("{:?}", x.rows), format!("{:?}", y.rows));
    assert!(x.rows.iter().all(|r| r.angle.is_some() && r.error.is_none()));
}

#[test]
fn subspace_angle_of_nested_lines() {
    let u = DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]);
    let v = DMatrix::from_column_slice(3, 1, &[1.0, 1.0, 0.0]);
    assert!((subspace_angle(&u, &v).unwrap() - std::f64::consts::FRAC_PI_4).abs() < 1e-12);
}
