//! Text formats for triangle meshes.
//!
//! The full-dimensional format is
//!
//! ```text
//! symmesh <2n> <num_vertices> <num_faces>
//! v <2n floats>
//! ...
//! f <i> <j> <k>
//! ...
//! ```
//!
//! with 1-based face indices and floats written with 17 significant digits,
//! so a read-back reproduces every value bit for bit. Projections to three
//! coordinates use plain `v x y z` / `f i j k` lines.

use std::fmt::Write as _;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("expected {expected} {what}, found {found}")]
    Count {
        what: &'static str,
        expected: usize,
        found: usize,
    },
}

fn malformed(line: usize, msg: impl Into<String>) -> FormatError {
    FormatError::Malformed {
        line,
        msg: msg.into(),
    }
}

/// Vertices in `R^dim` and 0-based triangles.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleSoup {
    pub dim: usize,
    pub vertices: Vec<Vec<f64>>,
    pub faces: Vec<[usize; 3]>,
}

impl TriangleSoup {
    pub fn to_symmesh(&self) -> String {
        let mut out = format!("symmesh {} {} {}\n", self.dim, self.vertices.len(), self.faces.len());
        for v in &self.vertices {
            out.push('v');
            for x in v {
                write!(out, " {x:.16e}").unwrap();
            }
            out.push('\n');
        }
        write_faces(&mut out, &self.faces);
        out
    }

    /// Three selected coordinates in the plain format.
    pub fn to_obj(&self, coords: [usize; 3]) -> String {
        assert!(coords.iter().all(|&c| c < self.dim), "projection coordinate out of range");
        let mut out = String::new();
        for v in &self.vertices {
            writeln!(out, "v {:.16e} {:.16e} {:.16e}", v[coords[0]], v[coords[1]], v[coords[2]]).unwrap();
        }
        write_faces(&mut out, &self.faces);
        out
    }

    pub fn parse_symmesh(text: &str) -> Result<Self, FormatError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (no, header) = lines.next().ok_or_else(|| malformed(1, "empty input"))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 4 || fields[0] != "symmesh" {
            return Err(malformed(no + 1, "expected `symmesh <dim> <vertices> <faces>`"));
        }
        let num = |s: &str| usize::from_str(s).map_err(|e| malformed(no + 1, e.to_string()));
        let (dim, nv, nf) = (num(fields[1])?, num(fields[2])?, num(fields[3])?);
        let mut soup = Self::parse_records(lines, Some(dim))?;
        soup.dim = dim;
        soup.check_counts(nv, nf)?;
        Ok(soup)
    }

    /// Reads the plain three-coordinate format.
    pub fn parse_obj(text: &str) -> Result<Self, FormatError> {
        let lines = text.lines().enumerate().filter(|(_, l)| {
            let t = l.trim();
            !t.is_empty() && !t.starts_with('#')
        });
        Self::parse_records(lines, Some(3))
    }

    fn parse_records<'a>(
        lines: impl Iterator<Item = (usize, &'a str)>,
        dim: Option<usize>,
    ) -> Result<Self, FormatError> {
        let mut vertices = Vec::new();
        let mut faces = Vec::new();
        for (no, line) in lines {
            let mut it = line.split_whitespace();
            match it.next() {
                Some("v") => {
                    let v = it
                        .map(|s| f64::from_str(s).map_err(|e| malformed(no + 1, e.to_string())))
                        .collect::<Result<Vec<f64>, _>>()?;
                    if dim.is_some_and(|d| d != v.len()) {
                        return Err(malformed(no + 1, format!("vertex has {} coordinates", v.len())));
                    }
                    vertices.push(v);
                }
                Some("f") => {
                    let idx = it
                        .map(|s| usize::from_str(s).map_err(|e| malformed(no + 1, e.to_string())))
                        .collect::<Result<Vec<usize>, _>>()?;
                    if idx.len() != 3 {
                        return Err(malformed(no + 1, "faces must be triangles"));
                    }
                    if idx.iter().any(|&i| i == 0 || i > vertices.len()) {
                        return Err(malformed(no + 1, "face index out of range"));
                    }
                    faces.push([idx[0] - 1, idx[1] - 1, idx[2] - 1]);
                }
                Some(tag) => return Err(malformed(no + 1, format!("unknown record `{tag}`"))),
                None => {}
            }
        }
        Ok(Self {
            dim: dim.unwrap_or(0),
            vertices,
            faces,
        })
    }

    fn check_counts(&self, nv: usize, nf: usize) -> Result<(), FormatError> {
        if self.vertices.len() != nv {
            return Err(FormatError::Count {
                what: "vertices",
                expected: nv,
                found: self.vertices.len(),
            });
        }
        if self.faces.len() != nf {
            return Err(FormatError::Count {
                what: "faces",
                expected: nf,
                found: self.faces.len(),
            });
        }
        Ok(())
    }
}

fn write_faces(out: &mut String, faces: &[[usize; 3]]) {
    for f in faces {
        writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1).unwrap();
    }
}
