use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::Vector3;

/// Indexed triangle surface in millimeters.
///
/// Every face index is in range, no face repeats the same index three
/// times, and all coordinates are finite.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh<T> {
    vertices: Vec<Vector3<T>>,
    faces: Vec<[u32; 3]>,
}

impl<T: Real> TriangleMesh<T> {
    pub fn new(vertices: Vec<Vector3<T>>, faces: Vec<[u32; 3]>) -> Result<Self> {
        if let Some(i) = vertices.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidMesh(format!("vertex {i} is not finite")));
        }
        let n = vertices.len();
        for (fi, f) in faces.iter().enumerate() {
            if f.iter().any(|&i| i as usize >= n) {
                return Err(Error::InvalidMesh(format!(
                    "face {fi} references a vertex beyond {n}"
                )));
            }
            if f[0] == f[1] && f[1] == f[2] {
                return Err(Error::InvalidMesh(format!("face {fi} is degenerate")));
            }
        }
        Ok(Self { vertices, faces })
    }

    pub fn empty() -> Self {
        Self {
            vertices: Vec::new(),
            faces: Vec::new(),
        }
    }

    pub fn vertices(&self) -> &[Vector3<T>] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[u32; 3]] {
        &self.faces
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn triangle(&self, f: usize) -> [Vector3<T>; 3] {
        let [a, b, c] = self.faces[f];
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }

    pub fn triangles(&self) -> impl Iterator<Item = [Vector3<T>; 3]> + '_ {
        (0..self.faces.len()).map(move |f| self.triangle(f))
    }

    /// Same faces, new positions. Positions must be finite.
    pub(crate) fn with_vertices(&self, vertices: Vec<Vector3<T>>) -> Self {
        debug_assert_eq!(vertices.len(), self.vertices.len());
        Self {
            vertices,
            faces: self.faces.clone(),
        }
    }

    /// Rigidly offsets every vertex.
    pub fn translated(&self, d: Vector3<T>) -> Self {
        self.with_vertices(self.vertices.iter().map(|&v| v + d).collect())
    }

    pub fn cast<U: Real>(&self) -> TriangleMesh<U> {
        TriangleMesh {
            vertices: self.vertices.iter().map(|v| v.cast()).collect(),
            faces: self.faces.clone(),
        }
    }
}

/// Axis-aligned box, `min <= max` componentwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Aabb<T> {
    pub min: Vector3<T>,
    pub max: Vector3<T>,
}

impl<T: Real> Aabb<T> {
    pub fn new(min: Vector3<T>, max: Vector3<T>) -> Result<Self> {
        if !(min.is_finite() && max.is_finite()) || min.x > max.x || min.y > max.y || min.z > max.z
        {
            return Err(Error::InvalidParams(format!(
                "bounding box min {min:?} exceeds max {max:?}"
            )));
        }
        Ok(Self { min, max })
    }

    pub fn extent(&self) -> Vector3<T> {
        self.max - self.min
    }

    /// Grows the box by `margin` on every side.
    pub fn padded(&self, margin: T) -> Self {
        Self {
            min: self.min - Vector3::splat(margin),
            max: self.max + Vector3::splat(margin),
        }
    }

    pub fn contains_point(&self, p: &Vector3<T>) -> bool {
        p.x >= self.min.x
            && p.y >= self.min.y
            && p.z >= self.min.z
            && p.x <= self.max.x
            && p.y <= self.max.y
            && p.z <= self.max.z
    }

    pub fn contains(&self, o: &Self) -> bool {
        self.contains_point(&o.min) && self.contains_point(&o.max)
    }
}

/// Tight bounds of all vertices.
pub fn mesh_bounds<T: Real>(mesh: &TriangleMesh<T>) -> Result<Aabb<T>> {
    let mut it = mesh.vertices().iter();
    let first = *it.next().ok_or(Error::EmptyMesh)?;
    let (min, max) = it.fold((first, first), |(lo, hi), v| {
        (lo.component_min(v), hi.component_max(v))
    });
    Ok(Aabb { min, max })
}

pub fn union_bounds<T: Real>(a: &Aabb<T>, b: &Aabb<T>) -> Aabb<T> {
    Aabb {
        min: a.min.component_min(&b.min),
        max: a.max.component_max(&b.max),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube(lo: f64, hi: f64) -> Aabb<f64> {
        Aabb::new(Vector3::splat(lo), Vector3::splat(hi)).unwrap()
    }

    #[test]
    fn bounds_of_unit_cube() {
        let m = crate::geometry::primitives::unit_cube::<f64>();
        let b = mesh_bounds(&m).unwrap();
        assert_eq!(b, cube(0.0, 1.0));
    }

    #[test]
    fn union_and_idempotence() {
        let a = cube(0.0, 1.0);
        let b = cube(2.0, 3.0);
        assert_eq!(union_bounds(&a, &b), cube(0.0, 3.0));
        assert_eq!(union_bounds(&a, &a), a);
        let u = union_bounds(&a, &b);
        assert!(u.contains(&a) && u.contains(&b));
    }

    #[test]
    fn empty_mesh_has_no_bounds() {
        assert!(matches!(
            mesh_bounds(&TriangleMesh::<f64>::empty()),
            Err(Error::EmptyMesh)
        ));
    }

    #[test]
    fn rejects_invalid_meshes() {
        let v = vec![Vector3::<f64>::zeros(), Vector3::x_axis(), Vector3::y_axis()];
        assert!(TriangleMesh::new(v.clone(), vec![[0, 1, 3]]).is_err());
        assert!(TriangleMesh::new(v.clone(), vec![[1, 1, 1]]).is_err());
        let mut bad = v.clone();
        bad[1].x = f64::NAN;
        assert!(TriangleMesh::new(bad, vec![[0, 1, 2]]).is_err());
        assert!(TriangleMesh::new(v, vec![[0, 1, 2]]).is_ok());
    }
}
