//! ASCII STL ingestion.
//!
//! Grammar: `solid [name]` followed by facets of the form
//! `facet normal nx ny nz / outer loop / vertex x y z ×3 / endloop / endfacet`
//! and a closing `endsolid`. File normals are parsed but discarded; the mesh
//! normal always comes from the vertex winding. Coincident vertices (bitwise
//! equal coordinates) are welded into one index.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use super::{GeometryError, TriangleMesh};
use crate::Vec3;

pub fn read_ascii_stl<R: Read>(reader: R) -> Result<TriangleMesh, GeometryError> {
    let mut lines = BufReader::new(reader).lines().enumerate();
    let mut tokens: Vec<(usize, String)> = Vec::new();
    while let Some((n, line)) = lines.next() {
        let line = line.map_err(|e| GeometryError::Io(e.to_string()))?;
        for tok in line.split_whitespace() {
            tokens.push((n + 1, tok.to_string()));
        }
    }
    let mut p = Parser { tokens, pos: 0 };
    p.expect("solid")?;
    // optional name: everything up to the first `facet` / `endsolid`
    while let Some(tok) = p.peek() {
        if tok == "facet" || tok == "endsolid" {
            break;
        }
        p.pos += 1;
    }

    let mut vertices: Vec<Vec3> = Vec::new();
    let mut index: HashMap<[u64; 3], usize> = HashMap::new();
    let mut triangles = Vec::new();
    loop {
        match p.peek() {
            Some("facet") => {
                p.pos += 1;
                p.expect("normal")?;
                for _ in 0..3 {
                    p.number()?;
                }
                p.expect("outer")?;
                p.expect("loop")?;
                let mut tri = [0usize; 3];
                for slot in &mut tri {
                    p.expect("vertex")?;
                    let v = Vec3::new(p.number()?, p.number()?, p.number()?);
                    let key = [v.x.to_bits(), v.y.to_bits(), v.z.to_bits()];
                    *slot = *index.entry(key).or_insert_with(|| {
                        vertices.push(v);
                        vertices.len() - 1
                    });
                }
                p.expect("endloop")?;
                p.expect("endfacet")?;
                triangles.push(tri);
            }
            Some("endsolid") => break,
            Some(other) => {
                return Err(p.error(format!("expected `facet` or `endsolid`, found `{other}`")));
            }
            None => return Err(p.error("unexpected end of file, missing `endsolid`".into())),
        }
    }
    TriangleMesh::new(vertices, triangles)
}

pub fn load_ascii_stl(path: &Path) -> Result<TriangleMesh, GeometryError> {
    let file = std::fs::File::open(path)
        .map_err(|e| GeometryError::Io(format!("{}: {e}", path.display())))?;
    read_ascii_stl(file)
}

/// Serializes with recomputed facet normals. Coordinates use the shortest
/// round-trip representation, so reading the output back reproduces the
/// vertex positions bitwise.
pub fn write_ascii_stl(mesh: &TriangleMesh, name: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "solid {name}");
    for id in 0..mesh.triangle_count() {
        let n = mesh.triangle_normal(id).unwrap_or_else(|_| Vec3::zeros());
        let _ = writeln!(out, "  facet normal {:?} {:?} {:?}", n.x, n.y, n.z);
        let _ = writeln!(out, "    outer loop");
        for v in mesh.triangle(id).expect("id in range") {
            let _ = writeln!(out, "      vertex {:?} {:?} {:?}", v.x, v.y, v.z);
        }
        let _ = writeln!(out, "    endloop");
        let _ = writeln!(out, "  endfacet");
    }
    let _ = writeln!(out, "endsolid {name}");
    out
}

struct Parser {
    tokens: Vec<(usize, String)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&str> {
        self.tokens.get(self.pos).map(|(_, t)| t.as_str())
    }

    fn line(&self) -> usize {
        self.tokens
            .get(self.pos)
            .or(self.tokens.last())
            .map_or(0, |(l, _)| *l)
    }

    fn error(&self, message: String) -> GeometryError {
        GeometryError::Parse {
            line: self.line(),
            message,
        }
    }

    fn expect(&mut self, keyword: &str) -> Result<(), GeometryError> {
        match self.peek() {
            Some(t) if t == keyword => {
                self.pos += 1;
                Ok(())
            }
            Some(t) => Err(self.error(format!("expected `{keyword}`, found `{t}`"))),
            None => Err(self.error(format!("expected `{keyword}`, found end of file"))),
        }
    }

    fn number(&mut self) -> Result<f64, GeometryError> {
        let tok = self
            .peek()
            .ok_or_else(|| self.error("expected a number, found end of file".into()))?;
        let v: f64 = tok
            .parse()
            .map_err(|_| self.error(format!("expected a number, found `{tok}`")))?;
        self.pos += 1;
        Ok(v)
    }
}
