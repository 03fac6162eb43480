//! Mesh and field I/O: Triangle-suite ASCII meshes in, legacy-ASCII VTK and
//! CSV out.

use super::{Patch, Triangulation};
use crate::error::{Error, Result};
use crate::geom::Vec2;
use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

struct Lines<'a> {
    path: &'a Path,
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn new(path: &'a Path, text: &'a str) -> Self {
        Lines {
            path,
            inner: text.lines().enumerate(),
        }
    }

    /// Next non-empty, non-comment line split into whitespace tokens.
    fn next_tokens(&mut self) -> Option<(usize, Vec<&'a str>)> {
        for (i, line) in self.inner.by_ref() {
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            return Some((i + 1, body.split_whitespace().collect()));
        }
        None
    }

    fn expect_tokens(&mut self, what: &str) -> Result<(usize, Vec<&'a str>)> {
        self.next_tokens().ok_or_else(|| Error::MeshFormat {
            path: self.path.display().to_string(),
            line: 0,
            msg: format!("unexpected end of file, expected {what}"),
        })
    }

    fn err(&self, line: usize, msg: impl Into<String>) -> Error {
        Error::MeshFormat {
            path: self.path.display().to_string(),
            line,
            msg: msg.into(),
        }
    }
}

fn parse<T: std::str::FromStr>(lines: &Lines, line: usize, tok: &str, what: &str) -> Result<T> {
    tok.parse()
        .map_err(|_| lines.err(line, format!("cannot parse {what} from {tok:?}")))
}

/// Reads a Triangle-format mesh. Boundary patches come from the `.poly`
/// segment markers when a `.poly` path is given; otherwise boundary edges are
/// grouped by the common node marker of their endpoints. Patches are named
/// `patch_<marker>`.
pub fn load_triangle_format(
    node_path: &Path,
    ele_path: &Path,
    poly_path: Option<&Path>,
) -> Result<Triangulation> {
    let node_text = std::fs::read_to_string(node_path)?;
    let mut nl = Lines::new(node_path, &node_text);

    let (hl, header) = nl.expect_tokens("node header")?;
    if header.len() < 4 {
        return Err(nl.err(hl, "node header needs 4 fields"));
    }
    let n_nodes: usize = parse(&nl, hl, header[0], "node count")?;
    let dim: usize = parse(&nl, hl, header[1], "dimension")?;
    if dim != 2 {
        return Err(nl.err(hl, format!("expected 2D nodes, got dimension {dim}")));
    }
    let n_attr: usize = parse(&nl, hl, header[2], "attribute count")?;
    let has_marker: usize = parse(&nl, hl, header[3], "marker flag")?;

    let mut points = Vec::with_capacity(n_nodes);
    let mut node_markers = Vec::with_capacity(n_nodes);
    let mut base = 0usize;
    for k in 0..n_nodes {
        let (ln, toks) = nl.expect_tokens("node line")?;
        let need = 3 + n_attr + has_marker;
        if toks.len() < need {
            return Err(nl.err(ln, format!("node line needs {need} fields, got {}", toks.len())));
        }
        let id: usize = parse(&nl, ln, toks[0], "node id")?;
        if k == 0 {
            base = id; // Triangle emits either 0- or 1-based ids
        }
        if id != k + base {
            return Err(nl.err(ln, format!("node ids must be consecutive, got {id}")));
        }
        let x: f64 = parse(&nl, ln, toks[1], "x coordinate")?;
        let y: f64 = parse(&nl, ln, toks[2], "y coordinate")?;
        points.push(Vec2::new(x, y));
        let marker = if has_marker == 1 {
            parse::<i32>(&nl, ln, toks[3 + n_attr], "node marker")?
        } else {
            0
        };
        node_markers.push(marker);
    }

    let ele_text = std::fs::read_to_string(ele_path)?;
    let mut el = Lines::new(ele_path, &ele_text);
    let (hl, header) = el.expect_tokens("element header")?;
    if header.len() < 2 {
        return Err(el.err(hl, "element header needs at least 2 fields"));
    }
    let n_tris: usize = parse(&el, hl, header[0], "element count")?;
    let npe: usize = parse(&el, hl, header[1], "nodes per element")?;
    if npe != 3 {
        return Err(el.err(hl, format!("expected 3 nodes per element, got {npe}")));
    }
    let mut triangles = Vec::with_capacity(n_tris);
    for _ in 0..n_tris {
        let (ln, toks) = el.expect_tokens("element line")?;
        if toks.len() < 4 {
            return Err(el.err(ln, "element line needs id and 3 node ids"));
        }
        let mut tri = [0usize; 3];
        for (slot, tok) in tri.iter_mut().zip(&toks[1..4]) {
            let id: usize = parse(&el, ln, tok, "element node id")?;
            if id < base || id - base >= n_nodes {
                return Err(el.err(ln, format!("node id {id} out of range")));
            }
            *slot = id - base;
        }
        triangles.push(tri);
    }

    // Boundary edges of the triangle list (edges used by exactly one cell).
    let mut edge_use: HashMap<(usize, usize), usize> = HashMap::new();
    for tri in &triangles {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            *edge_use.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
    }

    let mut marker_edges: HashMap<i32, Vec<[usize; 2]>> = HashMap::new();
    if let Some(pp) = poly_path {
        let poly_text = std::fs::read_to_string(pp)?;
        let mut pl = Lines::new(pp, &poly_text);
        let (hl, header) = pl.expect_tokens("poly vertex header")?;
        let n_v: usize = parse(&pl, hl, header[0], "poly vertex count")?;
        for _ in 0..n_v {
            pl.expect_tokens("poly vertex line")?;
        }
        let (hl, header) = pl.expect_tokens("poly segment header")?;
        let n_seg: usize = parse(&pl, hl, header[0], "segment count")?;
        let seg_markers: usize = if header.len() > 1 {
            parse(&pl, hl, header[1], "segment marker flag")?
        } else {
            0
        };
        for _ in 0..n_seg {
            let (ln, toks) = pl.expect_tokens("segment line")?;
            if toks.len() < 3 {
                return Err(pl.err(ln, "segment line needs id and 2 endpoints"));
            }
            let a: usize = parse(&pl, ln, toks[1], "segment endpoint")?;
            let b: usize = parse(&pl, ln, toks[2], "segment endpoint")?;
            if a < base || b < base || a - base >= n_nodes || b - base >= n_nodes {
                return Err(pl.err(ln, "segment endpoint out of range"));
            }
            let marker = if seg_markers == 1 && toks.len() >= 4 {
                parse::<i32>(&pl, ln, toks[3], "segment marker")?
            } else {
                1
            };
            marker_edges
                .entry(marker)
                .or_default()
                .push([a - base, b - base]);
        }
    } else {
        for (&(a, b), &uses) in &edge_use {
            if uses == 1 {
                let (ma, mb) = (node_markers[a], node_markers[b]);
                let marker = if ma == mb { ma } else { ma.min(mb).max(1) };
                marker_edges.entry(marker.max(1)).or_default().push([a, b]);
            }
        }
    }

    let mut markers: Vec<i32> = marker_edges.keys().copied().collect();
    markers.sort_unstable();
    let patches = markers
        .into_iter()
        .map(|m| {
            let mut edges = marker_edges.remove(&m).unwrap();
            edges.sort_unstable();
            Patch {
                name: format!("patch_{m}"),
                marker: m,
                edges,
            }
        })
        .collect();

    Triangulation::new(points, triangles, patches)
}

/// Writes `base.node`, `base.ele`, and `base.poly` in Triangle's ASCII
/// format (1-based ids). Node markers are taken from patch markers; a node on
/// several patches keeps the smallest marker.
pub fn write_triangle_format(t: &Triangulation, base: &Path) -> Result<()> {
    let mut node_markers = vec![0i32; t.points.len()];
    for p in &t.patches {
        for e in &p.edges {
            for &n in e {
                if node_markers[n] == 0 || p.marker < node_markers[n] {
                    node_markers[n] = p.marker;
                }
            }
        }
    }

    let mut node = String::new();
    writeln!(node, "{} 2 0 1", t.points.len()).unwrap();
    for (i, p) in t.points.iter().enumerate() {
        writeln!(node, "{} {:.17e} {:.17e} {}", i + 1, p.x, p.y, node_markers[i]).unwrap();
    }
    std::fs::write(base.with_extension("node"), node)?;

    let mut ele = String::new();
    writeln!(ele, "{} 3 0", t.triangles.len()).unwrap();
    for (i, tri) in t.triangles.iter().enumerate() {
        writeln!(ele, "{} {} {} {}", i + 1, tri[0] + 1, tri[1] + 1, tri[2] + 1).unwrap();
    }
    std::fs::write(base.with_extension("ele"), ele)?;

    let mut poly = String::new();
    writeln!(poly, "0 2 0 1").unwrap();
    let n_seg: usize = t.patches.iter().map(|p| p.edges.len()).sum();
    writeln!(poly, "{n_seg} 1").unwrap();
    let mut k = 1usize;
    for p in &t.patches {
        for e in &p.edges {
            writeln!(poly, "{} {} {} {}", k, e[0] + 1, e[1] + 1, p.marker).unwrap();
            k += 1;
        }
    }
    writeln!(poly, "0").unwrap();
    std::fs::write(base.with_extension("poly"), poly)?;
    Ok(())
}

/// Nodal fields attached to a VTK snapshot.
#[derive(Default)]
pub struct VtkFields<'a> {
    pub scalars: Vec<(&'a str, &'a [f64])>,
    pub vectors: Vec<(&'a str, &'a [Vec2])>,
}

/// Writes a legacy-ASCII VTK unstructured grid with optional point data.
pub fn write_vtk(t: &Triangulation, fields: &VtkFields, path: &Path) -> Result<()> {
    let n = t.points.len();
    for (name, vals) in &fields.scalars {
        if vals.len() != n {
            return Err(Error::Topology(format!(
                "field {name} has {} values for {n} points",
                vals.len()
            )));
        }
    }
    for (name, vals) in &fields.vectors {
        if vals.len() != n {
            return Err(Error::Topology(format!(
                "field {name} has {} values for {n} points",
                vals.len()
            )));
        }
    }
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\n");
    s.push_str("est2d fields\n");
    s.push_str("ASCII\n");
    s.push_str("DATASET UNSTRUCTURED_GRID\n");
    writeln!(s, "POINTS {n} double").unwrap();
    for p in &t.points {
        writeln!(s, "{:.12e} {:.12e} 0", p.x, p.y).unwrap();
    }
    let m = t.triangles.len();
    writeln!(s, "CELLS {m} {}", 4 * m).unwrap();
    for tri in &t.triangles {
        writeln!(s, "3 {} {} {}", tri[0], tri[1], tri[2]).unwrap();
    }
    writeln!(s, "CELL_TYPES {m}").unwrap();
    for _ in 0..m {
        s.push_str("5\n");
    }
    if !fields.scalars.is_empty() || !fields.vectors.is_empty() {
        writeln!(s, "POINT_DATA {n}").unwrap();
        for (name, vals) in &fields.scalars {
            writeln!(s, "SCALARS {name} double 1").unwrap();
            s.push_str("LOOKUP_TABLE default\n");
            for v in *vals {
                writeln!(s, "{v:.12e}").unwrap();
            }
        }
        for (name, vals) in &fields.vectors {
            writeln!(s, "VECTORS {name} double").unwrap();
            for v in *vals {
                writeln!(s, "{:.12e} {:.12e} 0", v.x, v.y).unwrap();
            }
        }
    }
    std::fs::write(path, s)?;
    Ok(())
}

/// Writes a CSV table with a header row; every row must match the header
/// width. Values print with full precision so reports are reproducible.
pub fn write_csv<I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<f64>>,
{
    let file = std::fs::File::create(path)?;
    let mut out = std::io::BufWriter::new(file);
    writeln!(out, "{}", header.join(","))?;
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        let line: Vec<String> = row.iter().map(|v| format!("{v:.17e}")).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    out.flush()?;
    Ok(())
}
