//! Single-linkage clustering of epochs under the symmetrized Gaussian KL
//! divergence.

use rayon::prelude::*;

use super::{DistanceMatrix, Segmentation};
use crate::error::{Error, Result};
use crate::stats::{
    epoch_moments, partition_epochs, symmetrized_kl_prepared, PreparedGaussian, TimeSeries,
};

/// Pairwise symmetrized KL divergences between the Gaussian moments of
/// `n_epochs` equal epochs.
pub fn slcd_distance_matrix(ts: &TimeSeries, n_epochs: usize) -> Result<DistanceMatrix> {
    let part = partition_epochs(ts, n_epochs)?;
    let stats = epoch_moments(ts, &part)?;
    let prepared: Vec<PreparedGaussian> = stats
        .iter()
        .map(|s| PreparedGaussian::new(&s.as_gaussian()?))
        .collect::<Result<_>>()?;
    let n = prepared.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            ((i + 1)..n)
                .map(|j| symmetrized_kl_prepared(&prepared[i], &prepared[j]))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let upper: Vec<f64> = rows.into_iter().flatten().collect();
    Ok(DistanceMatrix::from_upper(n, &upper))
}

/// Agglomerative single-linkage clustering cut at `k` clusters.
///
/// Merges follow edges in increasing distance, ties broken by the smallest
/// `(i, j)` pair; labels are numbered by first occurrence.
pub fn single_linkage_cluster(dm: &DistanceMatrix, k: usize) -> Result<Vec<usize>> {
    let n = dm.len();
    if k == 0 || k > n {
        return Err(Error::InvalidK { k, n });
    }
    let mut edges: Vec<(f64, usize, usize)> = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            edges.push((dm.get(i, j), i, j));
        }
    }
    edges.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut clusters = n;
    for &(_, i, j) in &edges {
        if clusters == k {
            break;
        }
        let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
        if ri != rj {
            parent[ri.max(rj)] = ri.min(rj);
            clusters -= 1;
        }
    }

    let mut label_of_root = vec![usize::MAX; n];
    let mut next = 0;
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let r = find(&mut parent, i);
        if label_of_root[r] == usize::MAX {
            label_of_root[r] = next;
            next += 1;
        }
        labels.push(label_of_root[r]);
    }
    Ok(labels)
}

/// Change points where temporally adjacent epochs fall into different
/// clusters.
pub fn slcd_from_distances(dm: &DistanceMatrix, k: usize) -> Result<Segmentation> {
    let labels = single_linkage_cluster(dm, k)?;
    Ok(Segmentation::from_labels(&labels))
}

pub fn slcd_detect(ts: &TimeSeries, n_epochs: usize, k: usize) -> Result<Segmentation> {
    if k == 0 || k > n_epochs {
        return Err(Error::InvalidK { k, n: n_epochs });
    }
    if k == 1 {
        // One cluster never splits; skip the moments (which may be singular).
        partition_epochs(ts, n_epochs)?;
        return Segmentation::new(Vec::new(), n_epochs);
    }
    let dm = slcd_distance_matrix(ts, n_epochs)?;
    slcd_from_distances(&dm, k)
}
