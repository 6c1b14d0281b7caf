//! Vector-valued P1/P2 Lagrange finite elements for isotropic linear
//! elasticity forms.

mod assembly;
mod norms;
pub mod quadrature;
mod space;

pub use assembly::{
    assemble_load, assemble_load_with, assemble_mass, assemble_mass_with, assemble_stiffness,
    assemble_stiffness_with, elliptic_project, elliptic_rhs,
};
pub use norms::{error_norms, error_norms_with, field_norms, ErrorNorms};
pub use quadrature::QuadratureRule;
pub use space::{Element, FeSpace};

use crate::error::{Error, Result};
use crate::mesh::Point;

pub type Vec2 = [f64; 2];
/// Gradient of a vector field, `g[i][j] = d u_i / d x_j`.
pub type Mat2 = [[f64; 2]; 2];

/// A vector field with an analytic gradient.
pub trait VectorField: Send + Sync {
    fn value(&self, p: Point) -> Vec2;
    fn gradient(&self, p: Point) -> Mat2;
}

/// Adapter pairing a value closure with a gradient closure.
pub struct FnField<F, G>(pub F, pub G);

impl<F, G> VectorField for FnField<F, G>
where
    F: Fn(Point) -> Vec2 + Send + Sync,
    G: Fn(Point) -> Mat2 + Send + Sync,
{
    fn value(&self, p: Point) -> Vec2 {
        (self.0)(p)
    }

    fn gradient(&self, p: Point) -> Mat2 {
        (self.1)(p)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ZeroField;

impl VectorField for ZeroField {
    fn value(&self, _: Point) -> Vec2 {
        [0.0; 2]
    }

    fn gradient(&self, _: Point) -> Mat2 {
        [[0.0; 2]; 2]
    }
}

/// Density, isotropic moduli of the scaled relaxation tensor, and the
/// fractional order of the memory kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Material {
    pub rho: f64,
    pub lambda_hat: f64,
    pub mu_hat: f64,
    pub alpha: f64,
}

impl Default for Material {
    /// `rho = 1`, and the tensor acts as the identity on symmetric tensors.
    fn default() -> Self {
        Material {
            rho: 1.0,
            lambda_hat: 0.0,
            mu_hat: 0.5,
            alpha: 0.5,
        }
    }
}

impl Material {
    pub fn new(rho: f64, lambda_hat: f64, mu_hat: f64, alpha: f64) -> Result<Material> {
        let m = Material {
            rho,
            lambda_hat,
            mu_hat,
            alpha,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return bad(format!("density must be positive, got {}", self.rho));
        }
        if !(self.mu_hat > 0.0 && self.mu_hat.is_finite()) {
            return bad(format!("mu_hat must be positive, got {}", self.mu_hat));
        }
        if !(self.lambda_hat + self.mu_hat > 0.0 && self.lambda_hat.is_finite()) {
            return bad(format!(
                "lambda_hat + mu_hat must be positive, got {}",
                self.lambda_hat + self.mu_hat
            ));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        Ok(())
    }

    /// `D eps(u) = 2 mu eps + lambda tr(eps) I` from the displacement gradient.
    pub fn stress(&self, grad: Mat2) -> Mat2 {
        let e = strain(grad);
        let tr = e[0][0] + e[1][1];
        [
            [2.0 * self.mu_hat * e[0][0] + self.lambda_hat * tr, 2.0 * self.mu_hat * e[0][1]],
            [2.0 * self.mu_hat * e[1][0], 2.0 * self.mu_hat * e[1][1] + self.lambda_hat * tr],
        ]
    }

    /// `D eps(u) : eps(v)`.
    pub fn energy_density(&self, grad_u: Mat2, grad_v: Mat2) -> f64 {
        contract(self.stress(grad_u), strain(grad_v))
    }
}

pub fn strain(g: Mat2) -> Mat2 {
    let off = 0.5 * (g[0][1] + g[1][0]);
    [[g[0][0], off], [off, g[1][1]]]
}

pub fn contract(a: Mat2, b: Mat2) -> f64 {
    a[0][0] * b[0][0] + a[0][1] * b[0][1] + a[1][0] * b[1][0] + a[1][1] * b[1][1]
}
