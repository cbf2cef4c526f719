//! Density-based clustering of angles on the circle.

use crate::scalar::{circular_distance, wrap_to_circle, Real};

use super::CategorizeError;

/// One cluster of angles: representative (circular mean) plus the indices of
/// the member points in the input slice.
#[derive(Debug, Clone)]
pub struct AngleCluster<T: Real> {
    pub representative: T,
    pub members: Vec<usize>,
}

/// DBSCAN with the circular metric `d(a,b) = min(|a-b|, 2π-|a-b|)`.
///
/// Noise points are discarded. Representatives are circular means and the
/// returned clusters are sorted by representative angle. Fails with
/// [`CategorizeError::EmptyClustering`] when every point is noise.
pub fn cluster_angles<T: Real>(
    angles: &[T],
    eps: T,
    min_pts: usize,
) -> Result<Vec<AngleCluster<T>>, CategorizeError> {
    let n = angles.len();
    let neighbors: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| circular_distance(angles[i], angles[j]) <= eps)
                .collect()
        })
        .collect();

    const UNVISITED: usize = usize::MAX;
    const NOISE: usize = usize::MAX - 1;
    let mut label = vec![UNVISITED; n];
    let mut clusters: Vec<Vec<usize>> = Vec::new();

    for start in 0..n {
        if label[start] != UNVISITED {
            continue;
        }
        if neighbors[start].len() < min_pts {
            label[start] = NOISE;
            continue;
        }
        let cluster_id = clusters.len();
        clusters.push(Vec::new());
        label[start] = cluster_id;
        let mut stack = vec![start];
        while let Some(p) = stack.pop() {
            clusters[cluster_id].push(p);
            if neighbors[p].len() < min_pts {
                continue; // border point: belongs to the cluster, not expanded
            }
            for &q in &neighbors[p] {
                if label[q] == UNVISITED || label[q] == NOISE {
                    label[q] = cluster_id;
                    stack.push(q);
                }
            }
        }
    }

    if clusters.is_empty() {
        return Err(CategorizeError::EmptyClustering);
    }

    let mut out: Vec<AngleCluster<T>> = clusters
        .into_iter()
        .map(|mut members| {
            members.sort_unstable();
            let (mut s, mut c) = (T::zero(), T::zero());
            for &i in &members {
                s += angles[i].sin();
                c += angles[i].cos();
            }
            AngleCluster { representative: wrap_to_circle(s.atan2(c)), members }
        })
        .collect();
    out.sort_by(|a, b| a.representative.partial_cmp(&b.representative).unwrap());
    Ok(out)
}

/// Minimum empty arc between clusters: the smallest circular distance
/// between members of two different clusters. A chain of clusters around
/// the circle leaves only eps-scale arcs between neighbors, while truly
/// separated clusters leave wide empty arcs. With a single cluster the gap
/// is the whole circle.
pub fn min_cluster_separation<T: Real>(clusters: &[AngleCluster<T>], angles: &[T]) -> T {
    if clusters.len() < 2 {
        return T::two_pi();
    }
    let mut min_gap = T::two_pi();
    for i in 0..clusters.len() {
        for j in (i + 1)..clusters.len() {
            for &a in &clusters[i].members {
                for &b in &clusters[j].members {
                    min_gap = min_gap.min(circular_distance(angles[a], angles[b]));
                }
            }
        }
    }
    min_gap
}
