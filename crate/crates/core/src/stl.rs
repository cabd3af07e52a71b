//! ASCII STL reader.
//!
//! Facet order and vertex order are kept exactly as written. The `facet
//! normal` values are parsed for syntax only; normals are recomputed from the
//! vertex winding.

use thiserror::Error;

use crate::geometry::{Mesh, MeshError, Vec3};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StlError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("binary STL is not supported")]
    Binary,
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

struct Tokens<'a> {
    inner: std::iter::Peekable<Box<dyn Iterator<Item = (usize, &'a str)> + 'a>>,
    last_line: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        let it: Box<dyn Iterator<Item = (usize, &'a str)> + 'a> = Box::new(
            text.lines()
                .enumerate()
                .flat_map(|(i, l)| l.split_whitespace().map(move |t| (i + 1, t))),
        );
        Self {
            inner: it.peekable(),
            last_line: 1,
        }
    }

    fn next(&mut self) -> Option<(usize, &'a str)> {
        let t = self.inner.next();
        if let Some((line, _)) = t {
            self.last_line = line;
        }
        t
    }

    fn peek(&mut self) -> Option<&'a str> {
        self.inner.peek().map(|&(_, t)| t)
    }

    fn err(&self, line: usize, message: impl Into<String>) -> StlError {
        StlError::Syntax {
            line,
            message: message.into(),
        }
    }

    fn expect(&mut self, keyword: &str) -> Result<(), StlError> {
        match self.next() {
            Some((_, t)) if t.eq_ignore_ascii_case(keyword) => Ok(()),
            Some((line, t)) => Err(self.err(line, format!("expected `{keyword}`, found `{t}`"))),
            None => Err(self.err(
                self.last_line,
                format!("unexpected end of input, expected `{keyword}`"),
            )),
        }
    }

    fn number(&mut self) -> Result<f64, StlError> {
        match self.next() {
            Some((line, t)) => match t.parse::<f64>() {
                Ok(x) if x.is_finite() => Ok(x),
                _ => Err(self.err(line, format!("invalid number `{t}`"))),
            },
            None => Err(self.err(self.last_line, "unexpected end of input, expected a number")),
        }
    }

    fn vector(&mut self) -> Result<Vec3, StlError> {
        Ok(Vec3::new(self.number()?, self.number()?, self.number()?))
    }
}

/// Parses an ASCII STL document into a mesh, one element per facet.
pub fn parse_stl(text: &str) -> Result<Mesh, StlError> {
    if text.contains('\0') {
        return Err(StlError::Binary);
    }
    let mut tok = Tokens::new(text);
    match tok.next() {
        Some((_, t)) if t.eq_ignore_ascii_case("solid") => {}
        Some((line, t)) => return Err(tok.err(line, format!("expected `solid`, found `{t}`"))),
        None => return Err(tok.err(1, "empty input")),
    }
    // Optional solid name: everything up to the first `facet`/`endsolid`.
    while let Some(t) = tok.peek() {
        if t.eq_ignore_ascii_case("facet") || t.eq_ignore_ascii_case("endsolid") {
            break;
        }
        tok.next();
    }

    let mut triangles = Vec::new();
    loop {
        match tok.next() {
            Some((_, t)) if t.eq_ignore_ascii_case("facet") => {
                tok.expect("normal")?;
                tok.vector()?;
                tok.expect("outer")?;
                tok.expect("loop")?;
                let mut verts = [Vec3::zeros(); 3];
                for v in verts.iter_mut() {
                    tok.expect("vertex")?;
                    *v = tok.vector()?;
                }
                tok.expect("endloop")?;
                tok.expect("endfacet")?;
                triangles.push(verts);
            }
            Some((_, t)) if t.eq_ignore_ascii_case("endsolid") => break,
            Some((line, t)) => {
                return Err(tok.err(line, format!("expected `facet` or `endsolid`, found `{t}`")))
            }
            None => {
                return Err(tok.err(
                    tok.last_line,
                    "unexpected end of input, expected `endsolid`",
                ))
            }
        }
    }
    Ok(Mesh::from_triangles(triangles)?)
}

/// Writes a mesh as ASCII STL with recomputed normals.
pub fn write_stl(mesh: &Mesh, name: &str) -> String {
    let mut out = format!("solid {name}\n");
    for e in mesh {
        let n = e.normal();
        out.push_str(&format!(
            "  facet normal {:e} {:e} {:e}\n    outer loop\n",
            n.x, n.y, n.z
        ));
        for v in e.vertices() {
            out.push_str(&format!("      vertex {:e} {:e} {:e}\n", v.x, v.y, v.z));
        }
        out.push_str("    endloop\n  endfacet\n");
    }
    out.push_str(&format!("endsolid {name}\n"));
    out
}
