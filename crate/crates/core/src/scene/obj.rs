//! Wavefront OBJ subset: `v`, `vn` and triangular `f` records with 1-based
//! indices (`f a b c`, `f a//na ...` or `f a/t/na ...`). `vt`, `o`, `g` and
//! `s` are accepted and ignored; anything else is an error.

use super::{Mesh, SceneError, Triangle};
use crate::math::{Direction, Vec3};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ObjMesh {
    pub positions: Vec<Vec3>,
    pub normals: Vec<Vec3>,
    /// Per corner: position index and optional normal index, 0-based.
    pub faces: Vec<[(usize, Option<usize>); 3]>,
}

pub fn parse_obj(text: &str, path: &str) -> Result<ObjMesh, SceneError> {
    let mut mesh = ObjMesh::default();
    for (ln, raw) in text.lines().enumerate() {
        let line_no = ln + 1;
        let err = |message: String| SceneError::Obj { path: path.to_string(), line: line_no, message };
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut parts = line.split_whitespace();
        let Some(tag) = parts.next() else { continue };
        let rest: Vec<&str> = parts.collect();
        match tag {
            "v" | "vn" => {
                if rest.len() != 3 {
                    return Err(err(format!("'{tag}' needs 3 coordinates, found {}", rest.len())));
                }
                let mut c = [0.0; 3];
                for (k, s) in rest.iter().enumerate() {
                    c[k] = s.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| err(format!("bad number {s:?}")))?;
                }
                let v = Vec3::new(c[0], c[1], c[2]);
                if tag == "v" {
                    mesh.positions.push(v);
                } else {
                    mesh.normals.push(v);
                }
            }
            "f" => {
                if rest.len() != 3 {
                    return Err(err(format!("only triangles are supported, face has {} vertices", rest.len())));
                }
                let mut face = [(0, None); 3];
                for (k, corner) in rest.iter().enumerate() {
                    let fields: Vec<&str> = corner.split('/').collect();
                    if fields.len() > 3 {
                        return Err(err(format!("bad face corner {corner:?}")));
                    }
                    let index = |s: &str, what: &str, count: usize| -> Result<usize, SceneError> {
                        let i = s.parse::<i64>().map_err(|_| err(format!("bad {what} index {s:?}")))?;
                        if i < 1 || i as usize > count {
                            return Err(err(format!("{what} index {i} out of range (1..={count})")));
                        }
                        Ok(i as usize - 1)
                    };
                    let p = index(fields[0], "vertex", mesh.positions.len())?;
                    let n = match fields.get(2) {
                        Some(s) if !s.is_empty() => Some(index(s, "normal", mesh.normals.len())?),
                        _ => None,
                    };
                    face[k] = (p, n);
                }
                mesh.faces.push(face);
            }
            "vt" | "o" | "g" | "s" => {}
            other => return Err(err(format!("unsupported record '{other}'"))),
        }
    }
    Ok(mesh)
}

impl ObjMesh {
    /// Converts to a scene mesh. Corners without a normal index use the
    /// face normal.
    pub fn into_mesh(self, name: &str, material: usize) -> Result<Mesh, SceneError> {
        let mut triangles = Vec::with_capacity(self.faces.len());
        for (i, f) in self.faces.iter().enumerate() {
            let p = f.map(|(pi, _)| self.positions[pi]);
            let face = Direction::new((p[1] - p[0]).cross(p[2] - p[0]))
                .ok_or_else(|| SceneError::Invalid(format!("mesh {name}: face {} is degenerate", i + 1)))?;
            let mut n = [face; 3];
            for (k, (_, ni)) in f.iter().enumerate() {
                if let Some(ni) = ni {
                    n[k] = Direction::new(self.normals[*ni]).ok_or_else(|| {
                        SceneError::Invalid(format!("mesh {name}: zero-length normal {}", ni + 1))
                    })?;
                }
            }
            triangles.push(Triangle { p, n, material });
        }
        Ok(Mesh { name: name.to_string(), triangles, material })
    }
}
