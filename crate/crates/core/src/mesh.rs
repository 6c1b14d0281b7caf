//! Structured triangulations of axis-aligned rectangles.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::io::Write;

use crate::error::{Error, Result};

pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Left, Side::Right, Side::Bottom, Side::Top];

    pub fn name(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
            Side::Bottom => "bottom",
            Side::Top => "top",
        }
    }

    /// Unit outward normal of an axis-aligned rectangle side.
    pub fn outward_normal(self) -> [f64; 2] {
        match self {
            Side::Left => [-1.0, 0.0],
            Side::Right => [1.0, 0.0],
            Side::Bottom => [0.0, -1.0],
            Side::Top => [0.0, 1.0],
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEdge {
    pub vertices: [usize; 2],
    pub side: Side,
}

/// Unique edges of a mesh and, per triangle, the index of each local edge.
///
/// Local edge `e` of triangle `[a, b, c]` joins local vertices
/// `(e + 1) % 3` and `(e + 2) % 3`, i.e. it is the edge opposite vertex `e`.
#[derive(Debug, Clone)]
pub struct EdgeTable {
    pub edges: Vec<[usize; 2]>,
    pub triangle_edges: Vec<[usize; 3]>,
    lookup: HashMap<[usize; 2], usize>,
}

impl EdgeTable {
    pub fn find(&self, a: usize, b: usize) -> Option<usize> {
        self.lookup.get(&sorted_pair(a, b)).copied()
    }
}

fn sorted_pair(a: usize, b: usize) -> [usize; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<Point>,
    /// Counterclockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<BoundaryEdge>,
    /// Maximum element diameter.
    pub h: f64,
    bounds: [f64; 4],
}

impl Mesh {
    /// Unit square split into `n x n` cells, each cut along its
    /// lower-left to upper-right diagonal.
    pub fn unit_square(n: usize) -> Result<Mesh> {
        Mesh::rectangle([0.0, 1.0], [0.0, 1.0], n, n)
    }

    pub fn rectangle(x: [f64; 2], y: [f64; 2], nx: usize, ny: usize) -> Result<Mesh> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidArgument(
                "cell counts must be positive".to_string(),
            ));
        }
        if !(x[1] > x[0] && y[1] > y[0]) {
            return Err(Error::InvalidArgument(format!(
                "degenerate rectangle {x:?} x {y:?}"
            )));
        }
        let id = |i: usize, j: usize| j * (nx + 1) + i;
        let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            // Endpoints are assigned exactly so boundary queries are exact.
            let yj = if j == ny {
                y[1]
            } else {
                y[0] + (y[1] - y[0]) * j as f64 / ny as f64
            };
            for i in 0..=nx {
                let xi = if i == nx {
                    x[1]
                } else {
                    x[0] + (x[1] - x[0]) * i as f64 / nx as f64
                };
                vertices.push([xi, yj]);
            }
        }
        let mut triangles = Vec::with_capacity(2 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let (ll, lr, ul, ur) = (id(i, j), id(i + 1, j), id(i, j + 1), id(i + 1, j + 1));
                triangles.push([ll, lr, ur]);
                triangles.push([ll, ur, ul]);
            }
        }
        let mut boundary_edges = Vec::with_capacity(2 * (nx + ny));
        for i in 0..nx {
            boundary_edges.push(BoundaryEdge {
                vertices: [id(i, 0), id(i + 1, 0)],
                side: Side::Bottom,
            });
        }
        for j in 0..ny {
            boundary_edges.push(BoundaryEdge {
                vertices: [id(nx, j), id(nx, j + 1)],
                side: Side::Right,
            });
        }
        for i in (0..nx).rev() {
            boundary_edges.push(BoundaryEdge {
                vertices: [id(i + 1, ny), id(i, ny)],
                side: Side::Top,
            });
        }
        for j in (0..ny).rev() {
            boundary_edges.push(BoundaryEdge {
                vertices: [id(0, j + 1), id(0, j)],
                side: Side::Left,
            });
        }
        let mut mesh = Mesh {
            vertices,
            triangles,
            boundary_edges,
            h: 0.0,
            bounds: [x[0], x[1], y[0], y[1]],
        };
        mesh.h = (0..mesh.triangles.len())
            .map(|t| mesh.diameter(t))
            .fold(0.0, f64::max);
        Ok(mesh)
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn corners(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [p0, p1, p2] = self.corners(t);
        0.5 * ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]))
    }

    pub fn diameter(&self, t: usize) -> f64 {
        let [p0, p1, p2] = self.corners(t);
        let d = |a: Point, b: Point| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
        d(p0, p1).max(d(p1, p2)).max(d(p2, p0))
    }

    pub fn area(&self) -> f64 {
        (0..self.n_triangles()).map(|t| self.signed_area(t)).sum()
    }

    /// `[x_min, x_max, y_min, y_max]`.
    pub fn bounds(&self) -> [f64; 4] {
        self.bounds
    }

    /// Vertices lying on any of the given sides; corners belong to both
    /// adjacent sides.
    pub fn boundary_vertices(&self, sides: &[Side]) -> BTreeSet<usize> {
        self.boundary_edges
            .iter()
            .filter(|e| sides.contains(&e.side))
            .flat_map(|e| e.vertices)
            .collect()
    }

    pub fn edge_table(&self) -> EdgeTable {
        let mut edges = Vec::new();
        let mut lookup = HashMap::new();
        let mut triangle_edges = Vec::with_capacity(self.n_triangles());
        for tri in &self.triangles {
            let mut local = [0usize; 3];
            for (e, slot) in local.iter_mut().enumerate() {
                let key = sorted_pair(tri[(e + 1) % 3], tri[(e + 2) % 3]);
                *slot = *lookup.entry(key).or_insert_with(|| {
                    edges.push(key);
                    edges.len() - 1
                });
            }
            triangle_edges.push(local);
        }
        EdgeTable {
            edges,
            triangle_edges,
            lookup,
        }
    }

    /// Checks positive orientation and that every edge is shared by two
    /// triangles (interior) or one triangle (boundary).
    pub fn check_conforming(&self) -> Result<()> {
        for t in 0..self.n_triangles() {
            if self.signed_area(t) <= 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "triangle {t} is not counterclockwise"
                )));
            }
        }
        let mut count: HashMap<[usize; 2], usize> = HashMap::new();
        for tri in &self.triangles {
            for e in 0..3 {
                *count.entry(sorted_pair(tri[e], tri[(e + 1) % 3])).or_default() += 1;
            }
        }
        let boundary: BTreeSet<[usize; 2]> = self
            .boundary_edges
            .iter()
            .map(|e| sorted_pair(e.vertices[0], e.vertices[1]))
            .collect();
        if boundary.len() != self.boundary_edges.len() {
            return Err(Error::InvalidArgument("duplicate boundary edge".into()));
        }
        for (edge, &c) in &count {
            let expected = if boundary.contains(edge) { 1 } else { 2 };
            if c != expected {
                return Err(Error::InvalidArgument(format!(
                    "edge {edge:?} shared by {c} triangles, expected {expected}"
                )));
            }
        }
        if boundary.iter().any(|e| !count.contains_key(e)) {
            return Err(Error::InvalidArgument(
                "boundary edge not part of any triangle".into(),
            ));
        }
        Ok(())
    }

    /// Plain-text dump: `nv nt ne`, then `x y` per vertex, `i j k` per
    /// triangle and `i j side` per boundary edge.
    pub fn write_text<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(
            out,
            "{} {} {}",
            self.n_vertices(),
            self.n_triangles(),
            self.boundary_edges.len()
        )?;
        for v in &self.vertices {
            writeln!(out, "{:e} {:e}", v[0], v[1])?;
        }
        for t in &self.triangles {
            writeln!(out, "{} {} {}", t[0], t[1], t[2])?;
        }
        for e in &self.boundary_edges {
            writeln!(out, "{} {} {}", e.vertices[0], e.vertices[1], e.side)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cell() {
        let m = Mesh::unit_square(1).unwrap();
        assert_eq!(m.n_vertices(), 4);
        assert_eq!(m.n_triangles(), 2);
        assert_eq!(m.area(), 1.0);
    }

    #[test]
    fn counting_identities() {
        let m = Mesh::unit_square(2).unwrap();
        assert_eq!(m.n_vertices(), 9);
        assert_eq!(m.n_triangles(), 8);
        assert_eq!(m.boundary_edges.len(), 8);
    }

    #[test]
    fn rejects_zero_cells() {
        assert!(Mesh::unit_square(0).is_err());
    }

    #[test]
    fn n4_areas_and_h() {
        let m = Mesh::unit_square(4).unwrap();
        assert!((m.h - 2f64.sqrt() / 4.0).abs() < 1e-15);
        for t in 0..m.n_triangles() {
            let [p0, p1, p2] = m.corners(t);
            // Shoelace on raw coordinates.
            let a = 0.5
                * (p0[0] * (p1[1] - p2[1]) + p1[0] * (p2[1] - p0[1]) + p2[0] * (p0[1] - p1[1]));
            assert!((a - 1.0 / 32.0).abs() < 1e-15);
        }
    }

    #[test]
    fn boundary_vertex_queries() {
        let m = Mesh::unit_square(2).unwrap();
        let left = m.boundary_vertices(&[Side::Left]);
        assert_eq!(left.len(), 3);
        assert!(left.iter().all(|&v| m.vertices[v][0] == 0.0));
        let all = m.boundary_vertices(&Side::ALL);
        assert_eq!(all.len(), 8);
        assert!(!all.contains(&4));

        let m4 = Mesh::unit_square(4).unwrap();
        let expected: BTreeSet<usize> = (0..m4.n_vertices())
            .filter(|&v| {
                let y = m4.vertices[v][1];
                y == 0.0 || y == 1.0
            })
            .collect();
        let got = m4.boundary_vertices(&[Side::Bottom, Side::Top]);
        assert_eq!(got.len(), 10);
        assert_eq!(got, expected);
    }

    #[test]
    fn conforming_and_area_for_many_sizes() {
        for n in 1..=64 {
            let m = Mesh::unit_square(n).unwrap();
            m.check_conforming().unwrap();
            assert!((m.area() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn h_halves_when_n_doubles() {
        for n in [1, 2, 4, 8, 16] {
            let a = Mesh::unit_square(n).unwrap().h;
            let b = Mesh::unit_square(2 * n).unwrap().h;
            assert_eq!(a, 2.0 * b);
        }
    }

    #[test]
    fn quasi_uniform() {
        let m = Mesh::unit_square(7).unwrap();
        let d: Vec<f64> = (0..m.n_triangles()).map(|t| m.diameter(t)).collect();
        let max = d.iter().cloned().fold(0.0, f64::max);
        let min = d.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(max / min <= 2.0);
    }

    #[test]
    fn rectangle_edges() {
        let m = Mesh::rectangle([0.0, 2.0], [-1.0, 0.5], 4, 3).unwrap();
        m.check_conforming().unwrap();
        assert!((m.area() - 3.0).abs() < 1e-12);
        let et = m.edge_table();
        // V - E + F = 1 for a disc.
        assert_eq!(m.n_vertices() + m.n_triangles(), et.edges.len() + 1);
    }

    #[test]
    fn text_dump_layout() {
        let m = Mesh::unit_square(1).unwrap();
        let mut buf = Vec::new();
        m.write_text(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "4 2 4");
        assert_eq!(lines.len(), 1 + 4 + 2 + 4);
        assert_eq!(lines[5], "0 1 3");
        assert_eq!(lines[7], "0 1 bottom");
    }
}
