//! STL reading and writing, binary and ASCII.
//!
//! Binary layout: 80-byte header, little-endian `u32` triangle count, then
//! 50-byte records (normal, three vertices as `f32` triples, `u16`
//! attribute). A file is treated as ASCII when it starts with `solid` and
//! contains a `facet` token; a header that merely starts with `solid` is
//! still read as binary.

use std::collections::HashMap;


use crate::error::{Error, Result};
use crate::scalar::Real;

use super::{TriangleMesh, Vector3};

const HEADER_LEN: usize = 80;
const RECORD_LEN: usize = 50;
const BINARY_HEADER: &[u8] = b"spinenav binary STL";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StlFormat {
    Binary,
    Ascii,
}

fn parse_err(offset: usize, reason: impl Into<String>) -> Error {
    Error::StlParse {
        offset,
        reason: reason.into(),
    }
}

/// Reads binary or ASCII STL. Vertices with bit-identical coordinates are
/// merged, in order of first appearance; faces keep file order. Stored
/// normals are ignored and triangles whose three corners coincide exactly
/// are dropped.
pub fn parse_stl<T: Real>(bytes: &[u8]) -> Result<TriangleMesh<T>> {
    if bytes.is_empty() {
        return Err(Error::EmptyInput);
    }
    let triangles = if looks_ascii(bytes) {
        parse_ascii(bytes)?
    } else {
        match parse_binary(bytes) {
            Ok(t) => t,
            // `solid ... endsolid` with no facets at all
            Err(e) if bytes.starts_with(b"solid") => parse_ascii(bytes).map_err(|_| e)?,
            Err(e) => return Err(e),
        }
    };
    Ok(weld_exact(triangles))
}

fn looks_ascii(bytes: &[u8]) -> bool {
    bytes.starts_with(b"solid")
        && bytes
            .split(|b| b.is_ascii_whitespace())
            .any(|tok| tok == b"facet")
}

fn parse_binary<T: Real>(bytes: &[u8]) -> Result<Vec<[Vector3<T>; 3]>> {
    if bytes.len() < HEADER_LEN + 4 {
        return Err(parse_err(
            bytes.len(),
            format!("truncated header: need {} bytes", HEADER_LEN + 4),
        ));
    }
    let count = u32::from_le_bytes(bytes[HEADER_LEN..HEADER_LEN + 4].try_into().unwrap()) as usize;
    let body = &bytes[HEADER_LEN + 4..];
    let complete = body.len() / RECORD_LEN;
    if complete < count {
        let offset = HEADER_LEN + 4 + complete * RECORD_LEN;
        return Err(parse_err(
            offset,
            format!("truncated record {complete} of {count}"),
        ));
    }
    if body.len() != count * RECORD_LEN {
        return Err(parse_err(
            HEADER_LEN,
            format!(
                "triangle count {count} does not match {} bytes of records",
                body.len()
            ),
        ));
    }
    let mut tris = Vec::with_capacity(count);
    for (r, rec) in body.chunks_exact(RECORD_LEN).enumerate() {
        let f = |i: usize| f32::from_le_bytes(rec[i * 4..i * 4 + 4].try_into().unwrap());
        let mut tri = [Vector3::zeros(); 3];
        for (k, v) in tri.iter_mut().enumerate() {
            let base = 3 + k * 3;
            let (x, y, z) = (f(base), f(base + 1), f(base + 2));
            if !(x.is_finite() && y.is_finite() && z.is_finite()) {
                return Err(parse_err(
                    HEADER_LEN + 4 + r * RECORD_LEN + 12 + k * 12,
                    "non-finite vertex coordinate",
                ));
            }
            *v = Vector3::new(T::lit(x as f64), T::lit(y as f64), T::lit(z as f64));
        }
        tris.push(tri);
    }
    Ok(tris)
}

struct Tokens<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn next(&mut self) -> Option<(usize, &'a str)> {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if self.pos >= self.src.len() {
            return None;
        }
        let start = self.pos;
        while self.pos < self.src.len() && !self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let tok = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("\u{fffd}");
        Some((start, tok))
    }

    fn expect(&mut self, word: &str) -> Result<usize> {
        match self.next() {
            Some((off, tok)) if tok == word => Ok(off),
            Some((off, tok)) => Err(parse_err(off, format!("expected `{word}`, found `{tok}`"))),
            None => Err(parse_err(self.src.len(), format!("expected `{word}`, found end of input"))),
        }
    }

    fn number<T: Real>(&mut self) -> Result<T> {
        match self.next() {
            Some((off, tok)) => match T::from_str_radix(tok, 10) {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(parse_err(off, format!("invalid number `{tok}`"))),
            },
            None => Err(parse_err(self.src.len(), "expected number, found end of input")),
        }
    }

    /// Skips the rest of the current line (solid names may contain spaces).
    fn skip_line(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos] != b'\n' {
            self.pos += 1;
        }
    }
}

fn parse_ascii<T: Real>(bytes: &[u8]) -> Result<Vec<[Vector3<T>; 3]>> {
    let mut toks = Tokens { src: bytes, pos: 0 };
    let mut tris = Vec::new();
    let mut solids = 0usize;
    while let Some((off, tok)) = toks.next() {
        if tok != "solid" {
            return Err(parse_err(off, format!("expected `solid`, found `{tok}`")));
        }
        solids += 1;
        toks.skip_line();
        loop {
            let Some((off, tok)) = toks.next() else {
                return Err(parse_err(bytes.len(), "missing `endsolid`"));
            };
            match tok {
                "endsolid" => {
                    toks.skip_line();
                    break;
                }
                "facet" => {
                    toks.expect("normal")?;
                    for _ in 0..3 {
                        toks.number::<T>()?;
                    }
                    toks.expect("outer")?;
                    toks.expect("loop")?;
                    let mut tri = [Vector3::zeros(); 3];
                    for v in &mut tri {
                        toks.expect("vertex")?;
                        *v = Vector3::new(toks.number()?, toks.number()?, toks.number()?);
                    }
                    toks.expect("endloop")?;
                    toks.expect("endfacet")?;
                    tris.push(tri);
                }
                other => {
                    return Err(parse_err(off, format!("expected `facet` or `endsolid`, found `{other}`")))
                }
            }
        }
    }
    if solids == 0 {
        return Err(parse_err(0, "no `solid` block"));
    }
    Ok(tris)
}

fn weld_exact<T: Real>(triangles: Vec<[Vector3<T>; 3]>) -> TriangleMesh<T> {
    let key = |v: &Vector3<T>| {
        [
            v.x.as_f64().to_bits(),
            v.y.as_f64().to_bits(),
            v.z.as_f64().to_bits(),
        ]
    };
    let mut index: HashMap<[u64; 3], u32> = HashMap::with_capacity(triangles.len());
    let mut vertices = Vec::new();
    let mut faces = Vec::with_capacity(triangles.len());
    for tri in triangles {
        let mut f = [0u32; 3];
        for (slot, v) in f.iter_mut().zip(tri.iter()) {
            *slot = *index.entry(key(v)).or_insert_with(|| {
                vertices.push(*v);
                (vertices.len() - 1) as u32
            });
        }
        if !(f[0] == f[1] && f[1] == f[2]) {
            faces.push(f);
        }
    }
    TriangleMesh::new(vertices, faces).expect("welded mesh is valid by construction")
}

fn face_normal<T: Real>([a, b, c]: [Vector3<T>; 3]) -> Vector3<T> {
    (b - a)
        .cross(&(c - a))
        .try_normalize(T::zero())
        .unwrap_or_else(Vector3::zeros)
}

/// Serializes `mesh`. Output depends only on the mesh, so identical input
/// gives identical bytes. Binary output stores coordinates as `f32`.
pub fn write_stl<T: Real>(mesh: &TriangleMesh<T>, format: StlFormat) -> Vec<u8> {
    match format {
        StlFormat::Binary => write_binary(mesh),
        StlFormat::Ascii => write_ascii(mesh),
    }
}

fn write_binary<T: Real>(mesh: &TriangleMesh<T>) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 4 + RECORD_LEN * mesh.face_count());
    out.extend_from_slice(BINARY_HEADER);
    out.resize(HEADER_LEN, 0);
    out.extend_from_slice(&(mesh.face_count() as u32).to_le_bytes());
    let put = |out: &mut Vec<u8>, v: Vector3<T>| {
        for c in v.to_array() {
            out.extend_from_slice(&c.to_f32().unwrap_or(f32::NAN).to_le_bytes());
        }
    };
    for tri in mesh.triangles() {
        put(&mut out, face_normal(tri));
        for v in tri {
            put(&mut out, v);
        }
        out.extend_from_slice(&0u16.to_le_bytes());
    }
    out
}

fn write_ascii<T: Real>(mesh: &TriangleMesh<T>) -> Vec<u8> {
    use std::fmt::Write;
    let mut s = String::from("solid spinenav\n");
    for tri in mesh.triangles() {
        let n = face_normal(tri);
        let _ = writeln!(s, "  facet normal {:e} {:e} {:e}", n.x, n.y, n.z);
        s.push_str("    outer loop\n");
        for v in tri {
            let _ = writeln!(s, "      vertex {:e} {:e} {:e}", v.x, v.y, v.z);
        }
        s.push_str("    endloop\n  endfacet\n");
    }
    s.push_str("endsolid spinenav\n");
    s.into_bytes()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::primitives::unit_cube;
    use proptest::prelude::*;

    /// Independent emitter: writes each triangle's corners straight from a
    /// corner table, one record at a time.
    fn reference_cube_stl() -> Vec<u8> {
        let corners: Vec<[f32; 3]> = (0..8)
            .map(|i| [(i & 1) as f32, ((i >> 1) & 1) as f32, ((i >> 2) & 1) as f32])
            .collect();
        let tris: [[usize; 3]; 12] = [
            [0, 1, 3], [0, 3, 2], [4, 6, 7], [4, 7, 5], [0, 4, 5], [0, 5, 1],
            [2, 3, 7], [2, 7, 6], [0, 2, 6], [0, 6, 4], [1, 5, 7], [1, 7, 3],
        ];
        let mut out = vec![0u8; 80];
        out.extend_from_slice(&12u32.to_le_bytes());
        for t in tris {
            out.extend_from_slice(&[0u8; 12]);
            for c in t {
                for x in corners[c] {
                    out.extend_from_slice(&x.to_le_bytes());
                }
            }
            out.extend_from_slice(&[0, 0]);
        }
        out
    }

    fn unique_positions(bytes: &[u8]) -> usize {
        let mut seen: Vec<[u32; 3]> = Vec::new();
        for r in 0..12 {
            for k in 0..3 {
                let base = 84 + r * 50 + 12 + k * 12;
                let p: [u32; 3] = std::array::from_fn(|i| {
                    u32::from_le_bytes(bytes[base + 4 * i..base + 4 * i + 4].try_into().unwrap())
                });
                if !seen.contains(&p) {
                    seen.push(p);
                }
            }
        }
        seen.len()
    }

    #[test]
    fn binary_cube_merges_to_eight_vertices() {
        let bytes = reference_cube_stl();
        assert_eq!(unique_positions(&bytes), 8);
        let m: TriangleMesh<f64> = parse_stl(&bytes).unwrap();
        assert_eq!(m.vertex_count(), 8);
        assert_eq!(m.face_count(), 12);
    }

    #[test]
    fn binary_size_and_determinism() {
        let m = unit_cube::<f64>();
        let a = write_stl(&m, StlFormat::Binary);
        assert_eq!(a.len(), 84 + 12 * 50);
        assert_eq!(a, write_stl(&m, StlFormat::Binary));
        assert_eq!(write_stl(&m, StlFormat::Ascii), write_stl(&m, StlFormat::Ascii));
    }

    #[test]
    fn empty_mesh_round_trips_both_formats() {
        let m = TriangleMesh::<f64>::empty();
        for fmt in [StlFormat::Binary, StlFormat::Ascii] {
            let bytes = write_stl(&m, fmt);
            let back: TriangleMesh<f64> = parse_stl(&bytes).unwrap();
            assert_eq!(back.face_count(), 0);
        }
        assert_eq!(write_stl(&m, StlFormat::Binary).len(), 84);
    }

    #[test]
    fn zero_length_is_an_error() {
        assert!(matches!(parse_stl::<f64>(&[]), Err(Error::EmptyInput)));
    }

    #[test]
    fn truncated_record_reports_offset() {
        let mut bytes = reference_cube_stl();
        bytes.truncate(84 + 3 * 50 + 20);
        match parse_stl::<f64>(&bytes) {
            Err(Error::StlParse { offset, .. }) => assert_eq!(offset, 84 + 150),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn count_mismatch_is_an_error() {
        let mut bytes = reference_cube_stl();
        bytes.extend_from_slice(&[0u8; 50]);
        assert!(matches!(parse_stl::<f64>(&bytes), Err(Error::StlParse { .. })));
    }

    #[test]
    fn binary_header_starting_with_solid_is_still_binary() {
        let mut bytes = reference_cube_stl();
        bytes[..5].copy_from_slice(b"solid");
        let m: TriangleMesh<f64> = parse_stl(&bytes).unwrap();
        assert_eq!(m.face_count(), 12);
    }

    #[test]
    fn ascii_parse_and_errors() {
        let text = b"solid my part\n facet normal 0 0 1\n outer loop\n vertex 0 0 0\n vertex 1 0 0\n vertex 0 1 0\n endloop\n endfacet\nendsolid my part\n";
        let m: TriangleMesh<f64> = parse_stl(text).unwrap();
        assert_eq!((m.vertex_count(), m.face_count()), (3, 1));
        let bad = b"solid x\n facet normal 0 0 1\n outer loop\n vertex 0 0 zero\n";
        match parse_stl::<f64>(bad) {
            Err(Error::StlParse { offset, .. }) => assert_eq!(&bad[offset..offset + 4], b"zero"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn reparse_is_stable() {
        let bytes = reference_cube_stl();
        let m: TriangleMesh<f64> = parse_stl(&bytes).unwrap();
        for fmt in [StlFormat::Binary, StlFormat::Ascii] {
            let again: TriangleMesh<f64> = parse_stl(&write_stl(&m, fmt)).unwrap();
            assert_eq!(again, m);
        }
    }

    fn arb_mesh() -> impl Strategy<Value = TriangleMesh<f64>> {
        // distinct f32-representable positions, every vertex used, first-use order
        (3usize..40).prop_flat_map(|n| {
            (
                prop::collection::vec(prop::array::uniform3(-1000i32..1000), n),
                prop::collection::vec(prop::array::uniform3(0usize..n), 1..60),
            )
        })
        .prop_filter_map("need distinct positions", |(pts, faces)| {
            let mut uniq = pts.clone();
            uniq.sort();
            uniq.dedup();
            if uniq.len() != pts.len() {
                return None;
            }
            let faces: Vec<[usize; 3]> = faces.into_iter().filter(|f| !(f[0] == f[1] && f[1] == f[2])).collect();
            if faces.is_empty() {
                return None;
            }
            // relabel in order of first use
            let mut map = HashMap::new();
            let mut verts = Vec::new();
            let faces = faces
                .iter()
                .map(|f| {
                    f.map(|i| {
                        *map.entry(i).or_insert_with(|| {
                            let p = pts[i];
                            verts.push(Vector3::new(p[0] as f64 * 0.125, p[1] as f64 * 0.25, p[2] as f64 * 0.5));
                            (verts.len() - 1) as u32
                        })
                    })
                })
                .collect();
            TriangleMesh::new(verts, faces).ok()
        })
    }

    proptest! {
        #[test]
        fn canonical_meshes_round_trip(m in arb_mesh()) {
            for fmt in [StlFormat::Binary, StlFormat::Ascii] {
                let back: TriangleMesh<f64> = parse_stl(&write_stl(&m, fmt)).unwrap();
                prop_assert_eq!(&back, &m);
            }
        }
    }
}
