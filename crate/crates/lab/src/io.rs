//! Plain-text mesh files and Matrix Market coordinate dumps.
//!
//! Mesh format, whitespace separated, `#` starts a comment line:
//!
//! ```text
//! vertices <N>
//! <x> <y>            N lines
//! triangles <M>
//! <a> <b> <c>        M lines, 0-based, counter-clockwise
//! boundary <K>
//! <a> <b> <tag>      K lines, tag 0 = wall, 1 = open
//! level <L>
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use stokes_core::mesh::{BoundaryTag, Mesh};
use stokes_core::sparse::SparseMatrix;

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("mesh rejected: {0}")]
    Invalid(#[from] stokes_core::Error),
}

fn file_error(path: &Path, source: std::io::Error) -> IoError {
    IoError::File {
        path: path.display().to_string(),
        source,
    }
}

pub fn mesh_to_string(mesh: &Mesh) -> String {
    let mut s = String::new();
    writeln!(s, "vertices {}", mesh.n_vertices()).unwrap();
    for [x, y] in &mesh.vertices {
        writeln!(s, "{x:e} {y:e}").unwrap();
    }
    writeln!(s, "triangles {}", mesh.n_triangles()).unwrap();
    for [a, b, c] in &mesh.triangles {
        writeln!(s, "{a} {b} {c}").unwrap();
    }
    writeln!(s, "boundary {}", mesh.boundary_edges.len()).unwrap();
    for ([a, b], tag) in &mesh.boundary_edges {
        writeln!(s, "{a} {b} {}", tag.code()).unwrap();
    }
    writeln!(s, "level {}", mesh.level).unwrap();
    s
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next_fields(&mut self) -> Result<Vec<&'a str>, IoError> {
        for (i, l) in self.inner.by_ref() {
            self.line = i + 1;
            let l = l.trim();
            if l.is_empty() || l.starts_with('#') {
                continue;
            }
            return Ok(l.split_whitespace().collect());
        }
        Err(self.error("unexpected end of file"))
    }

    fn error(&self, message: impl Into<String>) -> IoError {
        IoError::Parse {
            line: self.line,
            message: message.into(),
        }
    }

    fn header(&mut self, key: &str) -> Result<usize, IoError> {
        let f = self.next_fields()?;
        match f.as_slice() {
            [k, n] if *k == key => n.parse().map_err(|_| self.error(format!("bad count `{n}`"))),
            _ => Err(self.error(format!("expected `{key} <count>`"))),
        }
    }

    fn numbers<T: std::str::FromStr, const K: usize>(&mut self) -> Result<[T; K], IoError> {
        let f = self.next_fields()?;
        if f.len() != K {
            return Err(self.error(format!("expected {K} fields, found {}", f.len())));
        }
        let mut parsed = Vec::with_capacity(K);
        for s in f {
            parsed.push(s.parse::<T>().map_err(|_| self.error(format!("bad number `{s}`")))?);
        }
        Ok(parsed.try_into().unwrap_or_else(|_| unreachable!()))
    }
}

/// Parses and validates a mesh.
pub fn mesh_from_str(text: &str) -> Result<Mesh, IoError> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        line: 0,
    };
    let nv = lines.header("vertices")?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        vertices.push(lines.numbers::<f64, 2>()?);
    }
    let nt = lines.header("triangles")?;
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        triangles.push(lines.numbers::<usize, 3>()?);
    }
    let nb = lines.header("boundary")?;
    let mut boundary_edges = Vec::with_capacity(nb);
    for _ in 0..nb {
        let [a, b, tag] = lines.numbers::<usize, 3>()?;
        let tag = u8::try_from(tag)
            .ok()
            .and_then(BoundaryTag::from_code)
            .ok_or_else(|| lines.error(format!("unknown boundary tag {tag}")))?;
        boundary_edges.push(([a, b], tag));
    }
    let level = lines.header("level")?;
    let mesh = Mesh {
        vertices,
        triangles,
        boundary_edges,
        level,
    };
    mesh.validate()?;
    Ok(mesh)
}

pub fn write_mesh(mesh: &Mesh, path: &Path) -> Result<(), IoError> {
    fs::write(path, mesh_to_string(mesh)).map_err(|e| file_error(path, e))
}

pub fn read_mesh(path: &Path) -> Result<Mesh, IoError> {
    let text = fs::read_to_string(path).map_err(|e| file_error(path, e))?;
    mesh_from_str(&text)
}

/// Matrix Market `coordinate real general`, 1-based indices.
pub fn matrix_to_string(m: &SparseMatrix) -> String {
    let mut s = String::with_capacity(32 * m.nnz() + 64);
    s.push_str("%%MatrixMarket matrix coordinate real general\n");
    writeln!(s, "{} {} {}", m.n_rows(), m.n_cols(), m.nnz()).unwrap();
    for i in 0..m.n_rows() {
        for (j, v) in m.row(i) {
            writeln!(s, "{} {} {v:e}", i + 1, j + 1).unwrap();
        }
    }
    s
}

pub fn write_matrix(m: &SparseMatrix, path: &Path) -> Result<(), IoError> {
    fs::write(path, matrix_to_string(m)).map_err(|e| file_error(path, e))
}
