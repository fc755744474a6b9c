//! Surface voxelization over a shared grid and the shell Dice overlap.
//!
//! A cell is occupied when its closed box intersects at least one
//! triangle, which yields a thin shell around the surface rather than a
//! filled solid. Two meshes compared with [`dice_shell`] must be voxelized
//! with the same bounds and resolution so cells line up one-to-one.

use bitvec::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{mesh_bounds, union_bounds, Aabb, TriangleMesh, Vector3};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid<T> {
    origin: Vector3<T>,
    resolution: T,
    dims: [usize; 3],
    occupancy: BitVec,
}

impl<T: Real> VoxelGrid<T> {
    /// Empty grid covering `bounds` with `ceil(extent / resolution)` cells per
    /// axis (at least one).
    pub fn covering(bounds: &Aabb<T>, resolution: T) -> Result<Self> {
        if !(resolution > T::zero() && resolution.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "voxel resolution must be positive, got {resolution}"
            )));
        }
        let ext = bounds.extent();
        let dim = |e: T| -> Result<usize> {
            let n = (e / resolution).ceil().to_usize().ok_or_else(|| {
                Error::InvalidParams("voxel grid dimension overflow".into())
            })?;
            Ok(n.max(1))
        };
        let dims = [dim(ext.x)?, dim(ext.y)?, dim(ext.z)?];
        let cells = dims[0]
            .checked_mul(dims[1])
            .and_then(|v| v.checked_mul(dims[2]))
            .ok_or_else(|| Error::InvalidParams("voxel grid too large".into()))?;
        Ok(Self {
            origin: bounds.min,
            resolution,
            dims,
            occupancy: bitvec![0; cells],
        })
    }

    pub fn origin(&self) -> Vector3<T> {
        self.origin
    }

    pub fn resolution(&self) -> T {
        self.resolution
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn cell_count(&self) -> usize {
        self.occupancy.len()
    }

    #[inline]
    pub fn linear_index(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.dims[1] + j) * self.dims[0] + i
    }

    pub fn is_occupied(&self, i: usize, j: usize, k: usize) -> bool {
        self.occupancy[self.linear_index(i, j, k)]
    }

    pub fn occupied_count(&self) -> usize {
        self.occupancy.count_ones()
    }

    pub fn occupancy(&self) -> &BitSlice {
        &self.occupancy
    }

    /// Closed box of cell `(i, j, k)`.
    pub fn cell_box(&self, i: usize, j: usize, k: usize) -> Aabb<T> {
        let r = self.resolution;
        let min = self.origin
            + Vector3::new(
                T::from_usize_lossy(i) * r,
                T::from_usize_lossy(j) * r,
                T::from_usize_lossy(k) * r,
            );
        Aabb {
            min,
            max: min + Vector3::splat(r),
        }
    }

    fn same_layout(&self, o: &Self) -> bool {
        self.origin == o.origin && self.resolution == o.resolution && self.dims == o.dims
    }

    /// Cell index range along `axis` that can touch `[lo, hi]`.
    fn span(&self, axis: usize, lo: T, hi: T) -> (usize, usize) {
        let r = self.resolution;
        let o = self.origin[axis];
        let last = self.dims[axis] - 1;
        let idx = |v: T| ((v - o) / r).floor().to_i64().unwrap_or(0);
        // one extra cell below: a point on a cell face touches both neighbors
        let a = (idx(lo) - 1).clamp(0, last as i64) as usize;
        let b = idx(hi).clamp(0, last as i64) as usize;
        (a, b)
    }

    fn mark_triangle(&mut self, tri: &[Vector3<T>; 3]) {
        let lo = tri[0].component_min(&tri[1]).component_min(&tri[2]);
        let hi = tri[0].component_max(&tri[1]).component_max(&tri[2]);
        let (i0, i1) = self.span(0, lo.x, hi.x);
        let (j0, j1) = self.span(1, lo.y, hi.y);
        let (k0, k1) = self.span(2, lo.z, hi.z);
        let half = Vector3::splat(self.resolution * T::half());
        for k in k0..=k1 {
            for j in j0..=j1 {
                for i in i0..=i1 {
                    let idx = self.linear_index(i, j, k);
                    if self.occupancy[idx] {
                        continue;
                    }
                    let cell = self.cell_box(i, j, k);
                    let center = (cell.min + cell.max) * T::half();
                    if triangle_box_overlap(center, half, tri) {
                        self.occupancy.set(idx, true);
                    }
                }
            }
        }
    }
}

/// Separating-axis test between a triangle and the closed axis-aligned box
/// `center ± half`. Touching counts as overlap.
pub fn triangle_box_overlap<T: Real>(
    center: Vector3<T>,
    half: Vector3<T>,
    tri: &[Vector3<T>; 3],
) -> bool {
    let v = [tri[0] - center, tri[1] - center, tri[2] - center];
    let e = [v[1] - v[0], v[2] - v[1], v[0] - v[2]];

    // box face normals
    for axis in 0..3 {
        let (mn, mx) = min_max3(v[0][axis], v[1][axis], v[2][axis]);
        if mn > half[axis] || mx < -half[axis] {
            return false;
        }
    }

    // edge × box-axis cross products
    let units = [Vector3::x_axis(), Vector3::y_axis(), Vector3::z_axis()];
    for edge in &e {
        for u in &units {
            let a = u.cross(edge);
            let (p0, p1, p2) = (a.dot(&v[0]), a.dot(&v[1]), a.dot(&v[2]));
            let (mn, mx) = min_max3(p0, p1, p2);
            let rad = half.x * a.x.abs() + half.y * a.y.abs() + half.z * a.z.abs();
            if mn > rad || mx < -rad {
                return false;
            }
        }
    }

    // triangle plane
    let n = e[0].cross(&e[1]);
    let d = n.dot(&v[0]);
    let rad = half.x * n.x.abs() + half.y * n.y.abs() + half.z * n.z.abs();
    d.abs() <= rad
}

#[inline]
fn min_max3<T: Real>(a: T, b: T, c: T) -> (T, T) {
    (a.min(b).min(c), a.max(b).max(c))
}

/// Marks every cell of the grid over `bounds` whose box meets a triangle.
pub fn voxelize_surface<T: Real>(
    mesh: &TriangleMesh<T>,
    bounds: &Aabb<T>,
    resolution: T,
) -> Result<VoxelGrid<T>> {
    let mut grid = VoxelGrid::covering(bounds, resolution)?;
    if !mesh.is_empty() && !bounds.contains(&mesh_bounds(mesh)?) {
        return Err(Error::MeshOutOfBounds);
    }
    for tri in mesh.triangles() {
        grid.mark_triangle(&tri);
    }
    Ok(grid)
}

/// `2|A ∩ B| / (|A| + |B|)`; 1 when both grids are empty.
pub fn dice_shell<T: Real>(a: &VoxelGrid<T>, b: &VoxelGrid<T>) -> Result<T> {
    if !a.same_layout(b) {
        return Err(Error::GridMismatch);
    }
    let na = a.occupied_count();
    let nb = b.occupied_count();
    if na + nb == 0 {
        return Ok(T::one());
    }
    let both = a
        .occupancy
        .iter_ones()
        .filter(|&i| b.occupancy[i])
        .count();
    Ok(T::from_usize_lossy(2 * both) / T::from_usize_lossy(na + nb))
}

/// Bounds of both meshes, padded by one cell on every side.
pub fn shared_bounds<T: Real>(
    a: &TriangleMesh<T>,
    b: &TriangleMesh<T>,
    resolution: T,
) -> Result<Aabb<T>> {
    Ok(union_bounds(&mesh_bounds(a)?, &mesh_bounds(b)?).padded(resolution))
}

/// Voxelizes both meshes over their padded shared bounds and scores them.
pub fn mesh_dice<T: Real>(a: &TriangleMesh<T>, b: &TriangleMesh<T>, resolution: T) -> Result<T> {
    let bounds = shared_bounds(a, b, resolution)?;
    let ga = voxelize_surface(a, &bounds, resolution)?;
    let gb = voxelize_surface(b, &bounds, resolution)?;
    dice_shell(&ga, &gb)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri_mesh(tri: [[f64; 3]; 3]) -> TriangleMesh<f64> {
        TriangleMesh::new(tri.iter().map(|&p| Vector3::from(p)).collect(), vec![[0, 1, 2]]).unwrap()
    }

    #[test]
    fn triangle_inside_one_cell() {
        let m = tri_mesh([[0.2, 0.2, 0.5], [0.8, 0.2, 0.5], [0.5, 0.8, 0.5]]);
        let bounds = Aabb::new(Vector3::splat(-2.0), Vector3::splat(3.0)).unwrap();
        let g = voxelize_surface(&m, &bounds, 1.0).unwrap();
        assert_eq!(g.dims(), [5, 5, 5]);
        assert_eq!(g.occupied_count(), 1);
        assert!(g.is_occupied(2, 2, 2));
    }

    #[test]
    fn errors() {
        let m = tri_mesh([[0.2, 0.2, 0.5], [0.8, 0.2, 0.5], [0.5, 0.8, 0.5]]);
        let small = Aabb::new(Vector3::splat(0.3), Vector3::splat(3.0)).unwrap();
        assert!(matches!(voxelize_surface(&m, &small, 1.0), Err(Error::MeshOutOfBounds)));
        let ok = Aabb::new(Vector3::splat(0.0), Vector3::splat(1.0)).unwrap();
        assert!(voxelize_surface(&m, &ok, 0.0).is_err());
        assert!(voxelize_surface(&m, &ok, -1.0).is_err());
        let a = voxelize_surface(&m, &ok, 1.0).unwrap();
        let b = voxelize_surface(&m, &ok, 0.5).unwrap();
        assert!(matches!(dice_shell(&a, &b), Err(Error::GridMismatch)));
    }

    #[test]
    fn dice_edge_cases() {
        let bounds = Aabb::new(Vector3::splat(0.0), Vector3::splat(4.0)).unwrap();
        let empty = VoxelGrid::<f64>::covering(&bounds, 1.0).unwrap();
        assert_eq!(dice_shell(&empty, &empty).unwrap(), 1.0);
        let a = voxelize_surface(&tri_mesh([[0.2, 0.2, 0.5], [0.8, 0.2, 0.5], [0.5, 0.8, 0.5]]), &bounds, 1.0).unwrap();
        let b = voxelize_surface(&tri_mesh([[2.2, 2.2, 2.5], [2.8, 2.2, 2.5], [2.5, 2.8, 2.5]]), &bounds, 1.0).unwrap();
        assert_eq!(dice_shell(&a, &a).unwrap(), 1.0);
        assert_eq!(dice_shell(&a, &b).unwrap(), 0.0);
        assert_eq!(dice_shell(&a, &empty).unwrap(), 0.0);
    }
}
