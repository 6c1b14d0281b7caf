use crate::exec::Exec;

use super::quadrature::QuadratureRule;
use super::{contract, strain, FeSpace, Material, VectorField};

/// Errors of a discrete field against an analytic one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorNorms {
    pub l2: f64,
    /// Full H1 norm (L2 part plus gradient seminorm).
    pub h1: f64,
    /// `sqrt(a(e, e))`.
    pub energy: f64,
}

/// `u_h - u` measured with a rule of degree `2k + 4`.
pub fn error_norms(
    space: &FeSpace,
    u_h: &[f64],
    exact: &dyn VectorField,
    material: &Material,
) -> ErrorNorms {
    error_norms_with(space, Some(u_h), exact, material, 2 * space.degree() + 4, Exec::default())
}

/// Norms of an analytic field on the mesh of `space`.
pub fn field_norms(space: &FeSpace, field: &dyn VectorField, material: &Material) -> ErrorNorms {
    error_norms_with(space, None, field, material, 2 * space.degree() + 4, Exec::default())
}

pub fn error_norms_with(
    space: &FeSpace,
    u_h: Option<&[f64]>,
    exact: &dyn VectorField,
    material: &Material,
    degree: usize,
    exec: Exec,
) -> ErrorNorms {
    let rule = QuadratureRule::triangle(degree);
    let parts = exec.map_collect(space.mesh().n_triangles(), |t| {
        let el = space.element(t);
        let mut phi = [0.0; 6];
        let mut dphi = [[0.0; 2]; 6];
        let mut acc = [0.0; 3];
        for (l, w) in rule.points.iter().zip(&rule.weights) {
            let p = el.point(*l);
            let (mut v, mut g) = (exact.value(p), exact.gradient(p));
            if let Some(u) = u_h {
                el.shape(*l, &mut phi);
                el.shape_gradients(*l, &mut dphi);
                let (vh, gh) = space.combine(u, t, &phi, &dphi);
                for c in 0..2 {
                    v[c] -= vh[c];
                    for d in 0..2 {
                        g[c][d] -= gh[c][d];
                    }
                }
            }
            let wq = w * el.det;
            acc[0] += wq * (v[0] * v[0] + v[1] * v[1]);
            acc[1] += wq * contract(g, g);
            acc[2] += wq * contract(material.stress(g), strain(g));
        }
        acc
    });
    let mut sums = [0.0; 3];
    for p in parts {
        for i in 0..3 {
            sums[i] += p[i];
        }
    }
    ErrorNorms {
        l2: sums[0].sqrt(),
        h1: (sums[0] + sums[1]).sqrt(),
        energy: sums[2].sqrt(),
    }
}
