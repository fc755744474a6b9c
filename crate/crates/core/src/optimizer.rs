//! Exhaustive `(k, iterations, alpha)` grid search for Laplacian smoothing,
//! ranked by shell Dice against a ground-truth surface.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsutil::write_atomic;
use crate::geometry::{write_stl, StlFormat, TriangleMesh};
use crate::scalar::Real;
use crate::smoothing::{build_knn_graph, smooth_with_graph, NeighborGraph};
use crate::voxel::{dice_shell, shared_bounds, voxelize_surface};

/// Search grid. JSON keys: `k`, `iterations`, `alpha`, `resolution_mm`, `top_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", deny_unknown_fields)]
pub struct GridSpec<T> {
    pub k: Vec<usize>,
    pub iterations: Vec<usize>,
    pub alpha: Vec<T>,
    pub resolution_mm: T,
    #[serde(default = "default_top_n")]
    pub top_n: usize,
}

fn default_top_n() -> usize {
    5
}

impl<T: Real> GridSpec<T> {
    /// 5 × 5 × 5 reference grid, 1 mm voxels, top 5 kept.
    pub fn reference() -> Self {
        Self {
            k: vec![8, 16, 32, 64, 128],
            iterations: vec![1, 5, 10, 20, 50],
            alpha: [0.1, 0.3, 0.5, 0.7, 1.0].iter().map(|&a| T::lit(a)).collect(),
            resolution_mm: T::one(),
            top_n: default_top_n(),
        }
    }

    pub fn triplet_count(&self) -> usize {
        self.k.len() * self.iterations.len() * self.alpha.len()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if self.k.is_empty() || self.iterations.is_empty() || self.alpha.is_empty() {
            return bad("k, iterations and alpha must each be non-empty".into());
        }
        if self.k.contains(&0) {
            return bad("every k must be at least 1".into());
        }
        if let Some(a) = self.alpha.iter().find(|a| !(**a >= T::zero() && **a <= T::one())) {
            return bad(format!("alpha {a} outside [0, 1]"));
        }
        if !(self.resolution_mm > T::zero() && self.resolution_mm.is_finite()) {
            return bad(format!("resolution_mm must be positive, got {}", self.resolution_mm));
        }
        if self.top_n == 0 {
            return bad("top_n must be at least 1".into());
        }
        if has_duplicates(&self.k) || has_duplicates(&self.iterations) {
            return bad("k and iterations must not repeat values".into());
        }
        let mut a = self.alpha.clone();
        a.sort_by(|x, y| x.partial_cmp(y).unwrap_or(Ordering::Equal));
        if a.windows(2).any(|w| w[0] == w[1]) {
            return bad("alpha must not repeat values".into());
        }
        Ok(())
    }
}

fn has_duplicates(v: &[usize]) -> bool {
    let mut s = v.to_vec();
    s.sort_unstable();
    s.windows(2).any(|w| w[0] == w[1])
}

/// One evaluated triplet. `mesh` is kept only for the top-ranked entries.
#[derive(Debug, Clone, PartialEq)]
pub struct GridResult<T> {
    pub dice: T,
    pub k: usize,
    pub iterations: usize,
    pub alpha: T,
    pub mesh: Option<TriangleMesh<T>>,
}

impl<T: Real> GridResult<T> {
    /// `rank{r}_k{k}_iters{it}_alpha{a:.1}_dice{d:.4}.stl`, `rank` 1-based.
    pub fn file_name(&self, rank: usize) -> String {
        format!(
            "rank{rank}_k{}_iters{}_alpha{:.1}_dice{:.4}.stl",
            self.k, self.iterations, self.alpha, self.dice
        )
    }
}

/// Dice descending, then `(k, iterations, alpha)` ascending.
pub fn rank_order<T: Real>(a: &GridResult<T>, b: &GridResult<T>) -> Ordering {
    b.dice
        .partial_cmp(&a.dice)
        .unwrap_or(Ordering::Equal)
        .then(a.k.cmp(&b.k))
        .then(a.iterations.cmp(&b.iterations))
        .then(a.alpha.partial_cmp(&b.alpha).unwrap_or(Ordering::Equal))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[default]
    Parallel,
    Serial,
}

fn annotate<T: Real>(k: usize, iterations: usize, alpha: T) -> impl FnOnce(Error) -> Error {
    move |e| Error::GridCell {
        k,
        iterations,
        alpha: alpha.as_f64(),
        source: Box::new(e),
    }
}

/// Evaluates every triplet once and returns all results ranked; the first
/// `top_n` carry their smoothed meshes.
pub fn optimize<T: Real>(
    gt: &TriangleMesh<T>,
    mri: &TriangleMesh<T>,
    spec: &GridSpec<T>,
) -> Result<Vec<GridResult<T>>> {
    optimize_with(gt, mri, spec, Execution::Parallel)
}

pub fn optimize_with<T: Real>(
    gt: &TriangleMesh<T>,
    mri: &TriangleMesh<T>,
    spec: &GridSpec<T>,
    exec: Execution,
) -> Result<Vec<GridResult<T>>> {
    spec.validate()?;
    let r = spec.resolution_mm;
    let bounds = shared_bounds(gt, mri, r)?;
    let gt_shell = voxelize_surface(gt, &bounds, r)?;

    let mut iters = spec.iterations.clone();
    iters.sort_unstable();
    let first_it = iters[0];
    let first_alpha = spec.alpha[0];

    let build = |&k: &usize| {
        build_knn_graph(mri, k)
            .map(|g| (k, g))
            .map_err(annotate(k, first_it, first_alpha))
    };
    let graphs: BTreeMap<usize, NeighborGraph> = match exec {
        Execution::Parallel => spec.k.par_iter().map(build).collect::<Result<_>>()?,
        Execution::Serial => spec.k.iter().map(build).collect::<Result<_>>()?,
    };

    let chains: Vec<(usize, T)> = spec
        .k
        .iter()
        .flat_map(|&k| spec.alpha.iter().map(move |&a| (k, a)))
        .collect();

    // Each (k, alpha) chain walks the sorted iteration counts, continuing from
    // the previous count; Jacobi steps compose, so this equals smoothing each
    // count from scratch bit for bit.
    let run_chain = |&(k, alpha): &(usize, T)| -> Result<Vec<GridResult<T>>> {
        let graph = &graphs[&k];
        let mut positions = mri.vertices().to_vec();
        let mut done = 0;
        let mut out = Vec::with_capacity(iters.len());
        for &it in &iters {
            positions = smooth_with_graph(&positions, graph, alpha, it - done);
            done = it;
            let smoothed = mri.with_vertices(positions.clone());
            let dice = voxelize_surface(&smoothed, &bounds, r)
                .and_then(|g| dice_shell(&gt_shell, &g))
                .map_err(annotate(k, it, alpha))?;
            out.push(GridResult {
                dice,
                k,
                iterations: it,
                alpha,
                mesh: None,
            });
        }
        Ok(out)
    };
    let nested: Vec<Vec<GridResult<T>>> = match exec {
        Execution::Parallel => chains.par_iter().map(run_chain).collect::<Result<_>>()?,
        Execution::Serial => chains.iter().map(run_chain).collect::<Result<_>>()?,
    };
    let mut results: Vec<GridResult<T>> = nested.into_iter().flatten().collect();
    results.sort_by(rank_order);

    for res in results.iter_mut().take(spec.top_n) {
        let pos = smooth_with_graph(mri.vertices(), &graphs[&res.k], res.alpha, res.iterations);
        res.mesh = Some(mri.with_vertices(pos));
    }
    Ok(results)
}

/// Row of the JSON summary written next to the exported meshes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SummaryEntry<T> {
    pub rank: usize,
    pub k: usize,
    pub iterations: usize,
    pub alpha: T,
    pub dice: T,
    pub filename: String,
}

pub const SUMMARY_FILE: &str = "summary.json";

/// Writes each result that carries a mesh as binary STL, in rank order, plus
/// `summary.json`. Returns the STL paths.
pub fn export_best<T: Real>(results: &[GridResult<T>], out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let mut paths = Vec::new();
    let mut summary = Vec::new();
    for (i, res) in results.iter().enumerate() {
        let Some(mesh) = &res.mesh else { continue };
        let rank = i + 1;
        let name = res.file_name(rank);
        let path = out_dir.join(&name);
        write_atomic(&path, &write_stl(mesh, StlFormat::Binary))?;
        summary.push(SummaryEntry {
            rank,
            k: res.k,
            iterations: res.iterations,
            alpha: res.alpha,
            dice: res.dice,
            filename: name,
        });
        paths.push(path);
    }
    let mut json = serde_json::to_vec_pretty(&summary)?;
    json.push(b'\n');
    write_atomic(&out_dir.join(SUMMARY_FILE), &json)?;
    Ok(paths)
}
