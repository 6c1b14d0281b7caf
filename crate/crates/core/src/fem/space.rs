use crate::error::{Error, Result};
use crate::mesh::{EdgeTable, Mesh, Point, Side};

use super::Vec2;

/// Geometry and shape functions of one triangle.
#[derive(Debug, Clone, Copy)]
pub struct Element {
    pub corners: [Point; 3],
    /// Twice the area; the reference-to-physical weight factor.
    pub det: f64,
    /// Gradients of the barycentric coordinates.
    pub grad_bary: [Vec2; 3],
    pub degree: usize,
}

impl Element {
    pub fn new(corners: [Point; 3], degree: usize) -> Element {
        let [p0, p1, p2] = corners;
        let det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
        let g1 = [(p2[1] - p0[1]) / det, -(p2[0] - p0[0]) / det];
        let g2 = [-(p1[1] - p0[1]) / det, (p1[0] - p0[0]) / det];
        let g0 = [-g1[0] - g2[0], -g1[1] - g2[1]];
        Element {
            corners,
            det,
            grad_bary: [g0, g1, g2],
            degree,
        }
    }

    pub fn n_local(&self) -> usize {
        if self.degree == 1 {
            3
        } else {
            6
        }
    }

    pub fn point(&self, l: [f64; 3]) -> Point {
        let [p0, p1, p2] = self.corners;
        [
            l[0] * p0[0] + l[1] * p1[0] + l[2] * p2[0],
            l[0] * p0[1] + l[1] * p1[1] + l[2] * p2[1],
        ]
    }

    /// Shape function values at barycentric point `l`. Local order: the three
    /// vertices, then (P2) the midpoints of the edges opposite vertex 0, 1, 2.
    pub fn shape(&self, l: [f64; 3], out: &mut [f64; 6]) {
        if self.degree == 1 {
            out[..3].copy_from_slice(&l);
            return;
        }
        for i in 0..3 {
            out[i] = l[i] * (2.0 * l[i] - 1.0);
            out[3 + i] = 4.0 * l[(i + 1) % 3] * l[(i + 2) % 3];
        }
    }

    pub fn shape_gradients(&self, l: [f64; 3], out: &mut [Vec2; 6]) {
        let g = &self.grad_bary;
        if self.degree == 1 {
            out[..3].copy_from_slice(g);
            return;
        }
        for i in 0..3 {
            let s = 4.0 * l[i] - 1.0;
            out[i] = [s * g[i][0], s * g[i][1]];
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            out[3 + i] = [
                4.0 * (l[k] * g[j][0] + l[j] * g[k][0]),
                4.0 * (l[k] * g[j][1] + l[j] * g[k][1]),
            ];
        }
    }
}

/// Vector-valued Lagrange space of degree 1 or 2 with homogeneous Dirichlet
/// conditions on a set of sides.
///
/// Vector dofs are component-blocked: scalar dof `s` of component `c` has
/// index `c * n_scalar_dofs + s`. Scalar dofs are the mesh vertices followed
/// (P2) by the edge midpoints in [`EdgeTable`] order.
#[derive(Debug, Clone)]
pub struct FeSpace {
    mesh: Mesh,
    degree: usize,
    edges: EdgeTable,
    dof_coords: Vec<Point>,
    cell_dofs: Vec<[usize; 6]>,
    dirichlet_sides: Vec<Side>,
    dirichlet_dofs: Vec<usize>,
}

impl FeSpace {
    pub fn new(mesh: Mesh, degree: usize, dirichlet_sides: &[Side]) -> Result<FeSpace> {
        if degree != 1 && degree != 2 {
            return Err(Error::InvalidArgument(format!(
                "polynomial degree must be 1 or 2, got {degree}"
            )));
        }
        let edges = mesh.edge_table();
        let nv = mesh.n_vertices();
        let mut dof_coords = mesh.vertices.clone();
        if degree == 2 {
            dof_coords.extend(edges.edges.iter().map(|&[a, b]| {
                let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
                [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]
            }));
        }
        let cell_dofs = mesh
            .triangles
            .iter()
            .zip(&edges.triangle_edges)
            .map(|(t, e)| {
                if degree == 1 {
                    [t[0], t[1], t[2], 0, 0, 0]
                } else {
                    [t[0], t[1], t[2], nv + e[0], nv + e[1], nv + e[2]]
                }
            })
            .collect();

        let mut scalar: Vec<usize> = mesh.boundary_vertices(dirichlet_sides).into_iter().collect();
        if degree == 2 {
            for be in mesh.boundary_edges.iter().filter(|e| dirichlet_sides.contains(&e.side)) {
                let e = edges
                    .find(be.vertices[0], be.vertices[1])
                    .expect("boundary edge belongs to a triangle");
                scalar.push(nv + e);
            }
        }
        scalar.sort_unstable();
        scalar.dedup();
        let n_scalar = dof_coords.len();
        let dirichlet_dofs = scalar
            .iter()
            .copied()
            .chain(scalar.iter().map(|s| s + n_scalar))
            .collect();

        Ok(FeSpace {
            mesh,
            degree,
            edges,
            dof_coords,
            cell_dofs,
            dirichlet_sides: dirichlet_sides.to_vec(),
            dirichlet_dofs,
        })
    }

    /// Unit square with `n` cells per side, Dirichlet on the whole boundary.
    pub fn unit_square(n: usize, degree: usize) -> Result<FeSpace> {
        FeSpace::new(Mesh::unit_square(n)?, degree, &Side::ALL)
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn edges(&self) -> &EdgeTable {
        &self.edges
    }

    pub fn n_scalar_dofs(&self) -> usize {
        self.dof_coords.len()
    }

    pub fn n_dofs(&self) -> usize {
        2 * self.n_scalar_dofs()
    }

    pub fn dof_coords(&self) -> &[Point] {
        &self.dof_coords
    }

    pub fn dirichlet_sides(&self) -> &[Side] {
        &self.dirichlet_sides
    }

    /// Constrained vector-dof indices, x-components first.
    pub fn dirichlet_dofs(&self) -> &[usize] {
        &self.dirichlet_dofs
    }

    pub fn n_local(&self) -> usize {
        if self.degree == 1 {
            3
        } else {
            6
        }
    }

    /// Scalar dofs of triangle `t` in local shape-function order.
    pub fn cell_dofs(&self, t: usize) -> &[usize] {
        &self.cell_dofs[t][..self.n_local()]
    }

    pub fn element(&self, t: usize) -> Element {
        Element::new(self.mesh.corners(t), self.degree)
    }

    /// Nodal interpolant; Dirichlet dofs are set from the field like any other.
    pub fn interpolate(&self, f: impl Fn(Point) -> Vec2) -> Vec<f64> {
        let n = self.n_scalar_dofs();
        let mut u = vec![0.0; 2 * n];
        for (s, &p) in self.dof_coords.iter().enumerate() {
            let v = f(p);
            u[s] = v[0];
            u[n + s] = v[1];
        }
        u
    }

    /// Value and gradient of the discrete field `u` at barycentric point `l`
    /// of triangle `t`.
    pub fn evaluate(&self, u: &[f64], t: usize, l: [f64; 3]) -> (Vec2, super::Mat2) {
        let el = self.element(t);
        let mut phi = [0.0; 6];
        let mut dphi = [[0.0; 2]; 6];
        el.shape(l, &mut phi);
        el.shape_gradients(l, &mut dphi);
        self.combine(u, t, &phi, &dphi)
    }

    pub(crate) fn combine(
        &self,
        u: &[f64],
        t: usize,
        phi: &[f64; 6],
        dphi: &[Vec2; 6],
    ) -> (Vec2, super::Mat2) {
        let n = self.n_scalar_dofs();
        let mut val = [0.0; 2];
        let mut grad = [[0.0; 2]; 2];
        for (a, &s) in self.cell_dofs(t).iter().enumerate() {
            for c in 0..2 {
                let coef = u[c * n + s];
                val[c] += coef * phi[a];
                grad[c][0] += coef * dphi[a][0];
                grad[c][1] += coef * dphi[a][1];
            }
        }
        (val, grad)
    }

    /// Boundary edges where Neumann data applies (sides not under Dirichlet).
    pub fn neumann_edges(&self) -> impl Iterator<Item = &crate::mesh::BoundaryEdge> {
        self.mesh
            .boundary_edges
            .iter()
            .filter(|e| !self.dirichlet_sides.contains(&e.side))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn dof_counts() {
        let m = Mesh::unit_square(3).unwrap();
        let n_edges = m.edge_table().edges.len();
        let p1 = FeSpace::new(m.clone(), 1, &Side::ALL).unwrap();
        assert_eq!(p1.n_scalar_dofs(), 16);
        let p2 = FeSpace::new(m, 2, &Side::ALL).unwrap();
        assert_eq!(p2.n_scalar_dofs(), 16 + n_edges);
        assert!(FeSpace::unit_square(3, 3).is_err());
    }

    #[test]
    fn dirichlet_dofs_lie_on_tagged_sides() {
        for k in [1, 2] {
            let s = FeSpace::new(Mesh::unit_square(4).unwrap(), k, &[Side::Left, Side::Bottom])
                .unwrap();
            let n = s.n_scalar_dofs();
            let d = s.dirichlet_dofs();
            assert_eq!(d.len() % 2, 0);
            // 4 cells per side: two sides share a corner.
            let per_side = 4 * k + 1;
            assert_eq!(d.len(), 2 * (2 * per_side - 1));
            for &dof in d {
                let p = s.dof_coords()[dof % n];
                assert!(p[0] == 0.0 || p[1] == 0.0);
            }
        }
    }

    #[test]
    fn nodal_basis() {
        for k in [1, 2] {
            let s = FeSpace::unit_square(2, k).unwrap();
            for t in 0..s.mesh().n_triangles() {
                let el = s.element(t);
                for (b, &node) in s.cell_dofs(t).iter().enumerate() {
                    let p = s.dof_coords()[node];
                    // Barycentric coordinates of the node.
                    let [p0, p1, p2] = el.corners;
                    let l1 = ((p[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p[1] - p0[1])) / el.det;
                    let l2 = ((p1[0] - p0[0]) * (p[1] - p0[1]) - (p[0] - p0[0]) * (p1[1] - p0[1])) / el.det;
                    let mut phi = [0.0; 6];
                    el.shape([1.0 - l1 - l2, l1, l2], &mut phi);
                    for a in 0..el.n_local() {
                        let expect = if a == b { 1.0 } else { 0.0 };
                        assert!((phi[a] - expect).abs() < 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn partition_of_unity() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for k in [1, 2] {
            let s = FeSpace::unit_square(3, k).unwrap();
            for _ in 0..100 {
                let t = rng.gen_range(0..s.mesh().n_triangles());
                let a: f64 = rng.gen();
                let b: f64 = rng.gen::<f64>() * (1.0 - a);
                let el = s.element(t);
                let mut phi = [0.0; 6];
                let mut dphi = [[0.0; 2]; 6];
                el.shape([1.0 - a - b, a, b], &mut phi);
                el.shape_gradients([1.0 - a - b, a, b], &mut dphi);
                let n = el.n_local();
                assert!((phi[..n].iter().sum::<f64>() - 1.0).abs() < 1e-13);
                let gx: f64 = dphi[..n].iter().map(|g| g[0]).sum();
                let gy: f64 = dphi[..n].iter().map(|g| g[1]).sum();
                assert!(gx.abs() < 1e-12 && gy.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn interpolation_reproduces_quadratics_in_p2() {
        let s = FeSpace::unit_square(3, 2).unwrap();
        let f = |p: Point| [p[0] * p[0] - p[1], 2.0 * p[0] * p[1]];
        let u = s.interpolate(f);
        let (v, g) = s.evaluate(&u, 5, [0.2, 0.3, 0.5]);
        let p = s.element(5).point([0.2, 0.3, 0.5]);
        let exact = f(p);
        assert!((v[0] - exact[0]).abs() < 1e-13 && (v[1] - exact[1]).abs() < 1e-13);
        assert!((g[0][0] - 2.0 * p[0]).abs() < 1e-12);
        assert!((g[0][1] + 1.0).abs() < 1e-12);
        assert!((g[1][0] - 2.0 * p[1]).abs() < 1e-12);
        assert!((g[1][1] - 2.0 * p[0]).abs() < 1e-12);
    }
}
