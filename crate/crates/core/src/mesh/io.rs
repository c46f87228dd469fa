//! Plain-text mesh format.
//!
//! ```text
//! QUADMESH v1
//! # mesh <name>
//! nodes <N>
//! <id> <r> <z>
//! elements <E>
//! <id> <conductor|dielectric> <geomdeg> <n> <node ids...>
//! facets <F>
//! <elem> <face> <outer|axis|interface>
//! ```
//!
//! Floats are written in the shortest form that parses back to the same
//! value, so a write/read/write cycle is byte-identical.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use super::{parse_subdomain, subdomain_str, Element, Facet, FacetTag, MeshError, QuadMesh};

pub const HEADER: &str = "QUADMESH v1";

/// Serializes a mesh to the QUADMESH text format.
pub fn write_quadmesh(mesh: &QuadMesh, out: &mut impl Write) -> Result<(), MeshError> {
    let mut s = String::new();
    let _ = writeln!(s, "{HEADER}");
    let _ = writeln!(s, "# mesh {}", mesh.name);
    let _ = writeln!(s, "nodes {}", mesh.nodes.len());
    for (i, p) in mesh.nodes.iter().enumerate() {
        let _ = writeln!(s, "{i} {} {}", p[0], p[1]);
    }
    let _ = writeln!(s, "elements {}", mesh.elements.len());
    for (i, el) in mesh.elements.iter().enumerate() {
        let _ = write!(
            s,
            "{i} {} {} {}",
            subdomain_str(el.subdomain),
            el.geom_degree,
            el.nodes.len()
        );
        for n in &el.nodes {
            let _ = write!(s, " {n}");
        }
        s.push('\n');
    }
    let _ = writeln!(s, "facets {}", mesh.facets.len());
    for f in &mesh.facets {
        let _ = writeln!(s, "{} {} {}", f.elem, f.face, f.tag.as_str());
    }
    out.write_all(s.as_bytes())?;
    Ok(())
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    number: usize,
}

impl<R: BufRead> Lines<R> {
    fn next_line(&mut self) -> Result<String, MeshError> {
        self.number += 1;
        match self.inner.next() {
            Some(line) => Ok(line?),
            None => Err(self.error("unexpected end of file")),
        }
    }

    fn error(&self, message: impl Into<String>) -> MeshError {
        MeshError::Parse {
            line: self.number,
            message: message.into(),
        }
    }

    fn count(&mut self, keyword: &str) -> Result<usize, MeshError> {
        let line = self.next_line()?;
        let mut it = line.split_whitespace();
        if it.next() != Some(keyword) {
            return Err(self.error(format!("expected '{keyword} <count>'")));
        }
        let n = it.next().and_then(|t| t.parse().ok());
        n.ok_or_else(|| self.error(format!("bad {keyword} count")))
    }
}

fn field<T: std::str::FromStr>(
    lines: &Lines<impl BufRead>,
    tok: Option<&str>,
    what: &str,
) -> Result<T, MeshError> {
    tok.and_then(|t| t.parse().ok())
        .ok_or_else(|| lines.error(format!("missing or invalid {what}")))
}

/// Parses a mesh in the QUADMESH text format.
pub fn read_quadmesh(input: impl BufRead) -> Result<QuadMesh, MeshError> {
    let mut lines = Lines {
        inner: input.lines(),
        number: 0,
    };
    if lines.next_line()?.trim_end() != HEADER {
        return Err(lines.error(format!("expected header '{HEADER}'")));
    }
    let name_line = lines.next_line()?;
    let name = name_line
        .strip_prefix("# mesh ")
        .ok_or_else(|| lines.error("expected '# mesh <name>'"))?
        .to_string();

    let n_nodes = lines.count("nodes")?;
    let mut nodes = Vec::with_capacity(n_nodes);
    for i in 0..n_nodes {
        let line = lines.next_line()?;
        let mut it = line.split_whitespace();
        let id: usize = field(&lines, it.next(), "node id")?;
        if id != i {
            return Err(lines.error(format!("node ids must be consecutive, expected {i}")));
        }
        let r: f64 = field(&lines, it.next(), "r coordinate")?;
        let z: f64 = field(&lines, it.next(), "z coordinate")?;
        nodes.push([r, z]);
    }

    let n_elems = lines.count("elements")?;
    let mut elements = Vec::with_capacity(n_elems);
    for i in 0..n_elems {
        let line = lines.next_line()?;
        let mut it = line.split_whitespace();
        let id: usize = field(&lines, it.next(), "element id")?;
        if id != i {
            return Err(lines.error(format!("element ids must be consecutive, expected {i}")));
        }
        let tag = it.next().unwrap_or("");
        let subdomain = parse_subdomain(tag).map_err(|m| lines.error(m))?;
        let geom_degree: usize = field(&lines, it.next(), "geometry degree")?;
        let n: usize = field(&lines, it.next(), "node count")?;
        let ids = (0..n)
            .map(|_| field(&lines, it.next(), "node reference"))
            .collect::<Result<Vec<usize>, _>>()?;
        if it.next().is_some() {
            return Err(lines.error("trailing tokens"));
        }
        elements.push(Element {
            nodes: ids,
            geom_degree,
            subdomain,
        });
    }

    let n_facets = lines.count("facets")?;
    let mut facets = Vec::with_capacity(n_facets);
    for _ in 0..n_facets {
        let line = lines.next_line()?;
        let mut it = line.split_whitespace();
        let elem: usize = field(&lines, it.next(), "facet element")?;
        let face: usize = field(&lines, it.next(), "facet face")?;
        let tag: FacetTag = it
            .next()
            .unwrap_or("")
            .parse()
            .map_err(|m: String| lines.error(m))?;
        if face > 3 || elem >= elements.len() {
            return Err(lines.error("facet reference out of range"));
        }
        facets.push(Facet { elem, face, tag });
    }
    QuadMesh::with_facets(name, nodes, elements, facets)
}
