use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::linalg::{cg_solve_warm, CgOptions, CgReport, CsrMatrix, DirichletConstraints};
use crate::mesh::{Point, Side};

use super::quadrature::{segment_rule, QuadratureRule};
use super::{FeSpace, Material, Vec2, VectorField};

/// Gathers dense element matrices (vector layout `c * n_local + a`) into a
/// global CSR matrix. Element matrices are computed under `exec`; triplets are
/// appended in element order so the result is independent of thread count.
fn assemble_matrix<F>(space: &FeSpace, exec: Exec, local: F) -> CsrMatrix
where
    F: Fn(usize) -> Vec<f64> + Sync + Send,
{
    let nl = space.n_local();
    let n = space.n_scalar_dofs();
    let blocks = exec.map_collect(space.mesh().n_triangles(), local);
    let mut triplets = Vec::with_capacity(blocks.len() * 4 * nl * nl);
    for (t, block) in blocks.iter().enumerate() {
        let dofs = space.cell_dofs(t);
        for c in 0..2 {
            for (a, &sa) in dofs.iter().enumerate() {
                let row = c * n + sa;
                for d in 0..2 {
                    for (b, &sb) in dofs.iter().enumerate() {
                        let v = block[(c * nl + a) * 2 * nl + d * nl + b];
                        if v != 0.0 {
                            triplets.push((row, d * n + sb, v));
                        }
                    }
                }
            }
        }
    }
    CsrMatrix::from_triplets(2 * n, 2 * n, &triplets).expect("dof indices in range")
}

/// Mass matrix `rho * (phi_i, phi_j)` with no coupling between components.
pub fn assemble_mass(space: &FeSpace, rho: f64) -> CsrMatrix {
    assemble_mass_with(space, rho, Exec::default())
}

pub fn assemble_mass_with(space: &FeSpace, rho: f64, exec: Exec) -> CsrMatrix {
    let rule = QuadratureRule::triangle(2 * space.degree());
    let nl = space.n_local();
    assemble_matrix(space, exec, |t| {
        let el = space.element(t);
        let mut m = vec![0.0; 4 * nl * nl];
        let mut phi = [0.0; 6];
        for (l, w) in rule.points.iter().zip(&rule.weights) {
            el.shape(*l, &mut phi);
            let wq = rho * w * el.det;
            for a in 0..nl {
                for b in 0..nl {
                    let v = wq * phi[a] * phi[b];
                    m[a * 2 * nl + b] += v;
                    m[(nl + a) * 2 * nl + nl + b] += v;
                }
            }
        }
        m
    })
}

/// Stiffness matrix of `a(u, v) = (D eps(u), eps(v))`.
pub fn assemble_stiffness(space: &FeSpace, material: &Material) -> CsrMatrix {
    assemble_stiffness_with(space, material, Exec::default())
}

pub fn assemble_stiffness_with(space: &FeSpace, material: &Material, exec: Exec) -> CsrMatrix {
    let rule = QuadratureRule::triangle(2 * (space.degree() - 1));
    let nl = space.n_local();
    let (mu, lambda) = (material.mu_hat, material.lambda_hat);
    assemble_matrix(space, exec, |t| {
        let el = space.element(t);
        let mut k = vec![0.0; 4 * nl * nl];
        let mut g = [[0.0; 2]; 6];
        for (l, w) in rule.points.iter().zip(&rule.weights) {
            el.shape_gradients(*l, &mut g);
            let wq = w * el.det;
            for c in 0..2 {
                for a in 0..nl {
                    for d in 0..2 {
                        for b in 0..nl {
                            let mut v = mu * g[a][d] * g[b][c] + lambda * g[a][c] * g[b][d];
                            if c == d {
                                v += mu * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
                            }
                            k[(c * nl + a) * 2 * nl + d * nl + b] += wq * v;
                        }
                    }
                }
            }
        }
        k
    })
}

/// Load vector `(f, phi_i) + (g_N, phi_i)_{Neumann}` at a fixed time,
/// using quadrature of degree `2k + 2`. The traction is told which side it
/// is evaluated on.
pub fn assemble_load(
    space: &FeSpace,
    f: &(dyn Fn(Point) -> Vec2 + Sync),
    traction: Option<&(dyn Fn(Point, Side) -> Vec2 + Sync)>,
) -> Result<Vec<f64>> {
    assemble_load_with(space, f, traction, 2 * space.degree() + 2, Exec::default())
}

pub fn assemble_load_with(
    space: &FeSpace,
    f: &(dyn Fn(Point) -> Vec2 + Sync),
    traction: Option<&(dyn Fn(Point, Side) -> Vec2 + Sync)>,
    degree: usize,
    exec: Exec,
) -> Result<Vec<f64>> {
    let n = space.n_scalar_dofs();
    let nl = space.n_local();
    let rule = QuadratureRule::triangle(degree);
    let blocks = exec.map_collect(space.mesh().n_triangles(), |t| {
        let el = space.element(t);
        let mut loc = [[0.0; 6]; 2];
        let mut phi = [0.0; 6];
        for (l, w) in rule.points.iter().zip(&rule.weights) {
            el.shape(*l, &mut phi);
            let fv = f(el.point(*l));
            let wq = w * el.det;
            for a in 0..nl {
                loc[0][a] += wq * fv[0] * phi[a];
                loc[1][a] += wq * fv[1] * phi[a];
            }
        }
        loc
    });
    let mut load = vec![0.0; 2 * n];
    for (t, loc) in blocks.iter().enumerate() {
        for (a, &s) in space.cell_dofs(t).iter().enumerate() {
            load[s] += loc[0][a];
            load[n + s] += loc[1][a];
        }
    }

    if let Some(g) = traction {
        let edges: Vec<_> = space.neumann_edges().collect();
        if edges.is_empty() {
            return Err(Error::InvalidArgument(
                "traction supplied but the space has no Neumann boundary".into(),
            ));
        }
        let (sx, sw) = segment_rule(degree);
        let nv = space.mesh().n_vertices();
        for be in edges {
            let [v0, v1] = be.vertices;
            let (p0, p1) = (space.mesh().vertices[v0], space.mesh().vertices[v1]);
            let len = ((p1[0] - p0[0]).powi(2) + (p1[1] - p0[1]).powi(2)).sqrt();
            let mut nodes = vec![v0, v1];
            if space.degree() == 2 {
                let e = space.edges().find(v0, v1).expect("boundary edge in edge table");
                nodes.push(nv + e);
            }
            for (&s, &w) in sx.iter().zip(&sw) {
                let p = [p0[0] + s * (p1[0] - p0[0]), p0[1] + s * (p1[1] - p0[1])];
                let gv = g(p, be.side);
                let basis: [f64; 3] = if space.degree() == 1 {
                    [1.0 - s, s, 0.0]
                } else {
                    [(1.0 - s) * (1.0 - 2.0 * s), s * (2.0 * s - 1.0), 4.0 * s * (1.0 - s)]
                };
                for (a, &node) in nodes.iter().enumerate() {
                    load[node] += w * len * gv[0] * basis[a];
                    load[n + node] += w * len * gv[1] * basis[a];
                }
            }
        }
    }
    Ok(load)
}

/// Right-hand side `a(w, phi_i)` for an analytic field `w`.
pub fn elliptic_rhs(space: &FeSpace, material: &Material, w: &dyn VectorField) -> Vec<f64> {
    let n = space.n_scalar_dofs();
    let nl = space.n_local();
    let rule = QuadratureRule::triangle(2 * space.degree() + 2);
    let blocks = Exec::default().map_collect(space.mesh().n_triangles(), |t| {
        let el = space.element(t);
        let mut loc = [[0.0; 6]; 2];
        let mut g = [[0.0; 2]; 6];
        for (l, wt) in rule.points.iter().zip(&rule.weights) {
            el.shape_gradients(*l, &mut g);
            let sigma = material.stress(w.gradient(el.point(*l)));
            let wq = wt * el.det;
            for a in 0..nl {
                for c in 0..2 {
                    loc[c][a] += wq * (sigma[c][0] * g[a][0] + sigma[c][1] * g[a][1]);
                }
            }
        }
        loc
    });
    let mut rhs = vec![0.0; 2 * n];
    for (t, loc) in blocks.iter().enumerate() {
        for (a, &s) in space.cell_dofs(t).iter().enumerate() {
            rhs[s] += loc[0][a];
            rhs[n + s] += loc[1][a];
        }
    }
    rhs
}

/// Elliptic projection: `W` in the discrete space with zero trace on the
/// Dirichlet sides such that `a(W, v) = a(w, v)` for all discrete `v`.
pub fn elliptic_project(
    space: &FeSpace,
    material: &Material,
    w: &dyn VectorField,
    stiffness: Option<&CsrMatrix>,
    opts: &CgOptions,
) -> Result<(Vec<f64>, CgReport)> {
    if space.dirichlet_dofs().is_empty() {
        return Err(Error::InvalidArgument(
            "elliptic projection needs a Dirichlet boundary".into(),
        ));
    }
    let owned;
    let k = match stiffness {
        Some(k) => k,
        None => {
            owned = assemble_stiffness(space, material);
            &owned
        }
    };
    let constraints = DirichletConstraints::new(
        space.n_dofs(),
        &space.dirichlet_dofs().iter().map(|&d| (d, 0.0)).collect::<Vec<_>>(),
    )?;
    let reduced = constraints.eliminate_matrix(k)?;
    let mut rhs = elliptic_rhs(space, material, w);
    constraints.eliminate_rhs(k, &mut rhs)?;
    let mut x = vec![0.0; rhs.len()];
    let report = cg_solve_warm(Exec::default(), &reduced, &rhs, &mut x, opts)?;
    if !report.converged {
        return Err(Error::SolverFailed { step: 0, report });
    }
    Ok((x, report))
}
