//! Explicit Laplacian smoothing toward k-nearest-neighbor averages.
//!
//! One iteration moves every vertex a fraction `alpha` of the way toward the
//! mean of its `k` nearest vertices:
//!
//! ```text
//! v_i ← v_i + alpha · (mean_{j ∈ N_k(i)} v_j − v_i)
//! ```
//!
//! Neighbors are spatial (Euclidean over positions, not mesh connectivity),
//! fixed from the input mesh, and all updates in an iteration read the
//! previous iteration's positions.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{TriangleMesh, Vector3};
use crate::knn::KdTree;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SmoothingParams<T> {
    pub k: usize,
    pub iterations: usize,
    pub alpha: T,
}

impl<T: Real> SmoothingParams<T> {
    pub fn new(k: usize, iterations: usize, alpha: T) -> Result<Self> {
        let p = Self {
            k,
            iterations,
            alpha,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidParams("k must be at least 1".into()));
        }
        if !(self.alpha >= T::zero() && self.alpha <= T::one()) {
            return Err(Error::InvalidParams(format!(
                "alpha must lie in [0, 1], got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// Exactly `k` neighbor indices per vertex, self excluded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborGraph {
    k: usize,
    flat: Vec<u32>,
}

impl NeighborGraph {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.flat.len() / self.k
    }

    pub fn is_empty(&self) -> bool {
        self.flat.is_empty()
    }

    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.flat[i * self.k..(i + 1) * self.k]
    }
}

/// Ties in distance go to the lower vertex index.
pub fn build_knn_graph<T: Real>(mesh: &TriangleMesh<T>, k: usize) -> Result<NeighborGraph> {
    let n = mesh.vertex_count();
    if k == 0 {
        return Err(Error::InvalidParams("k must be at least 1".into()));
    }
    if k >= n {
        return Err(Error::InvalidParams(format!(
            "k = {k} needs more than {k} vertices, mesh has {n}"
        )));
    }
    let pts = mesh.vertices();
    let tree = KdTree::build(pts);
    let flat = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| tree.nearest(pts[i], k, Some(i as u32)))
        .collect();
    Ok(NeighborGraph { k, flat })
}

/// Runs `iterations` synchronous updates over a prebuilt graph.
pub fn smooth_with_graph<T: Real>(
    positions: &[Vector3<T>],
    graph: &NeighborGraph,
    alpha: T,
    iterations: usize,
) -> Vec<Vector3<T>> {
    let mut cur = positions.to_vec();
    if iterations == 0 || alpha == T::zero() {
        return cur;
    }
    let inv_k = T::from_usize_lossy(graph.k()).recip();
    let mut next = cur.clone();
    for _ in 0..iterations {
        next.par_iter_mut().enumerate().for_each(|(i, out)| {
            let mut sum = Vector3::zeros();
            for &j in graph.neighbors(i) {
                sum += cur[j as usize];
            }
            let v = cur[i];
            *out = v + (sum * inv_k - v) * alpha;
        });
        std::mem::swap(&mut cur, &mut next);
    }
    cur
}

pub fn laplacian_smooth<T: Real>(
    mesh: &TriangleMesh<T>,
    params: &SmoothingParams<T>,
) -> Result<TriangleMesh<T>> {
    params.validate()?;
    let graph = build_knn_graph(mesh, params.k)?;
    Ok(mesh.with_vertices(smooth_with_graph(
        mesh.vertices(),
        &graph,
        params.alpha,
        params.iterations,
    )))
}
