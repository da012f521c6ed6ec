//! Conforming triangular meshes with face connectivity.
//!
//! Faces carry a global orientation (from the lower to the higher vertex
//! index) shared by both incident elements, so face-based unknowns are
//! single-valued by construction. The face normal points out of the `left`
//! element; boundary faces have no `right` element and their normal points
//! out of the domain.

use crate::error::{Error, Result};
use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

/// One mesh face (edge segment between two vertices).
#[derive(Debug, Clone, PartialEq)]
pub struct Face {
    /// Endpoint vertex indices, `vertices[0] < vertices[1]`.
    pub vertices: [usize; 2],
    /// Element whose outward normal matches the face normal.
    pub left: usize,
    /// Second incident element, if the face is interior.
    pub right: Option<usize>,
    /// Unit normal out of the left element.
    pub normal: [f64; 2],
    /// Face length.
    pub length: f64,
}

impl Face {
    pub fn is_interior(&self) -> bool {
        self.right.is_some()
    }
}

/// Per-element face reference: global face index plus which side the element
/// sits on (`is_left` fixes the outward-normal sign).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ElementFace {
    pub face: usize,
    pub is_left: bool,
}

/// Immutable triangular mesh of a polygonal domain.
#[derive(Debug, Clone)]
pub struct Mesh {
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    faces: Vec<Face>,
    element_faces: Vec<[ElementFace; 3]>,
    diameters: Vec<f64>,
    areas: Vec<f64>,
    h_max: f64,
}

impl Mesh {
    /// Build a mesh from vertices and counterclockwise triangles.
    pub fn new(vertices: Vec<[f64; 2]>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        if triangles.is_empty() {
            return Err(Error::InvalidArgument("mesh has no triangles".into()));
        }
        let nv = vertices.len();
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                if v >= nv {
                    return Err(Error::MeshIntegrity(format!(
                        "triangle {t} references vertex {v} out of {nv}"
                    )));
                }
            }
            if signed_area(&vertices, tri) <= 1e-14 {
                return Err(Error::MeshIntegrity(format!(
                    "triangle {t} is degenerate or not counterclockwise"
                )));
            }
        }

        // Collect faces in first-encounter order; lookup by sorted endpoints.
        let mut faces: Vec<Face> = Vec::new();
        let mut index: HashMap<(usize, usize), usize> = HashMap::new();
        let mut element_faces = vec![[ElementFace { face: 0, is_left: false }; 3]; triangles.len()];
        for (t, tri) in triangles.iter().enumerate() {
            for slot in 0..3 {
                let a = tri[slot];
                let b = tri[(slot + 1) % 3];
                let key = (a.min(b), a.max(b));
                match index.get(&key) {
                    None => {
                        let (lo, hi) = key;
                        let d = [vertices[hi][0] - vertices[lo][0], vertices[hi][1] - vertices[lo][1]];
                        let length = d[0].hypot(d[1]);
                        // Outward normal of this element along the CCW edge a->b.
                        let e = [vertices[b][0] - vertices[a][0], vertices[b][1] - vertices[a][1]];
                        let n = [e[1] / length, -e[0] / length];
                        index.insert(key, faces.len());
                        element_faces[t][slot] = ElementFace { face: faces.len(), is_left: true };
                        faces.push(Face {
                            vertices: [lo, hi],
                            left: t,
                            right: None,
                            normal: n,
                            length,
                        });
                    }
                    Some(&f) => {
                        if faces[f].right.is_some() {
                            return Err(Error::MeshIntegrity(format!(
                                "face ({}, {}) shared by more than two elements",
                                key.0, key.1
                            )));
                        }
                        faces[f].right = Some(t);
                        element_faces[t][slot] = ElementFace { face: f, is_left: false };
                    }
                }
            }
        }

        let areas: Vec<f64> = triangles.iter().map(|t| signed_area(&vertices, t)).collect();
        let diameters: Vec<f64> = triangles
            .iter()
            .map(|tri| {
                (0..3)
                    .map(|i| {
                        let a = vertices[tri[i]];
                        let b = vertices[tri[(i + 1) % 3]];
                        (b[0] - a[0]).hypot(b[1] - a[1])
                    })
                    .fold(0.0, f64::max)
            })
            .collect();
        let h_max = diameters.iter().copied().fold(0.0, f64::max);

        Ok(Self {
            vertices,
            triangles,
            faces,
            element_faces,
            diameters,
            areas,
            h_max,
        })
    }

    /// Uniform mesh of the unit square: n x n cells, each split along the
    /// lower-left to upper-right diagonal. 2n^2 triangles, h_K = sqrt(2)/n.
    pub fn uniform_unit_square(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument(
                "uniform mesh needs at least one subdivision per side".into(),
            ));
        }
        let nf = n as f64;
        let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
        for j in 0..=n {
            for i in 0..=n {
                vertices.push([i as f64 / nf, j as f64 / nf]);
            }
        }
        let vid = |i: usize, j: usize| j * (n + 1) + i;
        let mut triangles = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let (ll, lr, ur, ul) = (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1));
                triangles.push([ll, lr, ur]);
                triangles.push([ll, ur, ul]);
            }
        }
        Self::new(vertices, triangles)
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn n_elements(&self) -> usize {
        self.triangles.len()
    }

    /// Faces of one element in local-slot order, with side information.
    pub fn element_faces(&self, element: usize) -> &[ElementFace; 3] {
        &self.element_faces[element]
    }

    pub fn triangle_vertices(&self, element: usize) -> [[f64; 2]; 3] {
        let t = self.triangles[element];
        [self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]]
    }

    /// Element diameter (longest edge).
    pub fn diameter(&self, element: usize) -> f64 {
        self.diameters[element]
    }

    pub fn area(&self, element: usize) -> f64 {
        self.areas[element]
    }

    /// Global mesh size h = max_K h_K.
    pub fn h_max(&self) -> f64 {
        self.h_max
    }

    pub fn interior_faces(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.faces.len()).filter(|&f| self.faces[f].is_interior())
    }

    pub fn boundary_faces(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.faces.len()).filter(|&f| !self.faces[f].is_interior())
    }

    /// Read a mesh from the plain-text format: first line "NV NT", then NV
    /// lines "x y", then NT lines "i j k" (0-based, counterclockwise).
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_text(&text)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut tokens = text.split_whitespace();
        let mut next = |what: &str| {
            tokens
                .next()
                .ok_or_else(|| Error::InvalidArgument(format!("mesh file truncated at {what}")))
        };
        let nv: usize = next("NV")?
            .parse()
            .map_err(|e| Error::InvalidArgument(format!("bad NV: {e}")))?;
        let nt: usize = next("NT")?
            .parse()
            .map_err(|e| Error::InvalidArgument(format!("bad NT: {e}")))?;
        let mut vertices = Vec::with_capacity(nv);
        for i in 0..nv {
            let x: f64 = next("vertex x")?
                .parse()
                .map_err(|e| Error::InvalidArgument(format!("vertex {i}: {e}")))?;
            let y: f64 = next("vertex y")?
                .parse()
                .map_err(|e| Error::InvalidArgument(format!("vertex {i}: {e}")))?;
            vertices.push([x, y]);
        }
        let mut triangles = Vec::with_capacity(nt);
        for t in 0..nt {
            let mut tri = [0usize; 3];
            for v in &mut tri {
                *v = next("triangle index")?
                    .parse()
                    .map_err(|e| Error::InvalidArgument(format!("triangle {t}: {e}")))?;
            }
            triangles.push(tri);
        }
        Self::new(vertices, triangles)
    }

    /// Write the mesh in the plain-text node/element format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {}", self.vertices.len(), self.triangles.len());
        for v in &self.vertices {
            let _ = writeln!(out, "{:.17} {:.17}", v[0], v[1]);
        }
        for t in &self.triangles {
            let _ = writeln!(out, "{} {} {}", t[0], t[1], t[2]);
        }
        out
    }

    pub fn to_file(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

fn signed_area(vertices: &[[f64; 2]], tri: &[usize; 3]) -> f64 {
    let a = vertices[tri[0]];
    let b = vertices[tri[1]];
    let c = vertices[tri[2]];
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

/// Partition face indices into (interior, boundary) and verify orientation
/// invariants: interior normals point from the left to the right element,
/// boundary normals point out of the domain.
pub fn classify_faces(mesh: &Mesh) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut interior = Vec::new();
    let mut boundary = Vec::new();
    for (f, face) in mesh.faces().iter().enumerate() {
        if face.left >= mesh.n_elements() {
            return Err(Error::MeshIntegrity(format!("face {f} has no incident element")));
        }
        // The stored normal must equal the left element's outward normal.
        let slot = mesh.element_faces(face.left).iter().position(|ef| ef.face == f);
        let slot = slot.ok_or_else(|| {
            Error::MeshIntegrity(format!("face {f} missing from its left element"))
        })?;
        let tri = mesh.triangles()[face.left];
        let a = mesh.vertices()[tri[slot]];
        let b = mesh.vertices()[tri[(slot + 1) % 3]];
        let e = [b[0] - a[0], b[1] - a[1]];
        let len = e[0].hypot(e[1]);
        let outward = [e[1] / len, -e[0] / len];
        let dot = outward[0] * face.normal[0] + outward[1] * face.normal[1];
        if (dot - 1.0).abs() > 1e-12 {
            return Err(Error::MeshIntegrity(format!(
                "face {f} normal disagrees with left-element orientation"
            )));
        }
        if face.is_interior() {
            interior.push(f);
        } else {
            boundary.push(f);
        }
    }
    Ok((interior, boundary))
}
