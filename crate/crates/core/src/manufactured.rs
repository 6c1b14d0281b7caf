//! Separable manufactured solutions `w(x, y, t) = g(t) Phi(x, y)` and their
//! analytic body forces.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fem::{Mat2, Material, Vec2, VectorField};
use crate::fracquad::rl_integral_power;
use crate::mesh::{Point, Side};
use crate::solver::{TimeVectorFn, TractionFn};

/// Second derivatives, `h[i][j][k] = d^2 u_i / dx_j dx_k`.
pub type Hessian = [[[f64; 2]; 2]; 2];

/// `g(t) = sum_p c_p t^p` with every `p > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSeries {
    terms: Vec<(f64, f64)>,
}

impl PowerSeries {
    /// Terms as `(coefficient, power)` pairs.
    pub fn new(terms: Vec<(f64, f64)>) -> Result<PowerSeries> {
        if terms.is_empty() {
            return Err(Error::InvalidArgument("empty power series".into()));
        }
        if let Some(&(_, p)) = terms.iter().find(|(c, p)| !(*p > 0.0) || !c.is_finite() || !p.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "powers must be positive and finite, got {p}"
            )));
        }
        Ok(PowerSeries { terms })
    }

    pub fn terms(&self) -> &[(f64, f64)] {
        &self.terms
    }

    pub fn value(&self, t: f64) -> f64 {
        self.terms.iter().map(|&(c, p)| c * t.powf(p)).sum()
    }

    pub fn derivative(&self, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(c, p)| {
                if p == 1.0 {
                    c
                } else {
                    c * p * t.powf(p - 1.0)
                }
            })
            .sum()
    }

    /// `I^{1-alpha} g (t)` in closed form.
    pub fn fractional_integral(&self, alpha: f64, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(c, p)| c * rl_integral_power(alpha, p, t).expect("positive powers"))
            .sum()
    }

    /// Whether `g'''` stays bounded near `t = 0`: every power is an integer
    /// or at least 3.
    pub fn has_bounded_third_derivative(&self) -> bool {
        self.terms
            .iter()
            .all(|&(_, p)| p >= 3.0 || p.fract() == 0.0)
    }
}

pub trait SpatialProfile: Send + Sync + fmt::Debug {
    fn value(&self, p: Point) -> Vec2;
    fn gradient(&self, p: Point) -> Mat2;
    fn hessian(&self, p: Point) -> Hessian;
}

/// `(sin(pi x) sin(pi y), x y (1 - x)(1 - y))`, vanishing on the unit square
/// boundary.
#[derive(Debug, Clone, Copy, Default)]
pub struct SineBubbleProfile;

impl SpatialProfile for SineBubbleProfile {
    fn value(&self, p: Point) -> Vec2 {
        let [x, y] = p;
        [(PI * x).sin() * (PI * y).sin(), x * y * (1.0 - x) * (1.0 - y)]
    }

    fn gradient(&self, p: Point) -> Mat2 {
        let [x, y] = p;
        let (sx, cx, sy, cy) = ((PI * x).sin(), (PI * x).cos(), (PI * y).sin(), (PI * y).cos());
        let (qx, qy) = (x * (1.0 - x), y * (1.0 - y));
        let (dqx, dqy) = (1.0 - 2.0 * x, 1.0 - 2.0 * y);
        [[PI * cx * sy, PI * sx * cy], [dqx * qy, qx * dqy]]
    }

    fn hessian(&self, p: Point) -> Hessian {
        let [x, y] = p;
        let (sx, cx, sy, cy) = ((PI * x).sin(), (PI * x).cos(), (PI * y).sin(), (PI * y).cos());
        let (qx, qy) = (x * (1.0 - x), y * (1.0 - y));
        let (dqx, dqy) = (1.0 - 2.0 * x, 1.0 - 2.0 * y);
        let pi2 = PI * PI;
        [
            [[-pi2 * sx * sy, pi2 * cx * cy], [pi2 * cx * cy, -pi2 * sx * sy]],
            [[-2.0 * qy, dqx * dqy], [dqx * dqy, -2.0 * qx]],
        ]
    }
}

/// `Phi(p) = A p + b`.
#[derive(Debug, Clone, Copy)]
pub struct AffineProfile {
    pub matrix: Mat2,
    pub offset: Vec2,
}

impl SpatialProfile for AffineProfile {
    fn value(&self, p: Point) -> Vec2 {
        let a = &self.matrix;
        [
            a[0][0] * p[0] + a[0][1] * p[1] + self.offset[0],
            a[1][0] * p[0] + a[1][1] * p[1] + self.offset[1],
        ]
    }

    fn gradient(&self, _: Point) -> Mat2 {
        self.matrix
    }

    fn hessian(&self, _: Point) -> Hessian {
        [[[0.0; 2]; 2]; 2]
    }
}

/// `div(D eps(Phi)) = mu Lap(Phi) + (lambda + mu) grad(div Phi)`.
pub fn elasticity_operator(profile: &dyn SpatialProfile, material: &Material, p: Point) -> Vec2 {
    let h = profile.hessian(p);
    let (mu, lambda) = (material.mu_hat, material.lambda_hat);
    let mut out = [0.0; 2];
    for (i, o) in out.iter_mut().enumerate() {
        let laplacian = h[i][0][0] + h[i][1][1];
        let grad_div = h[0][i][0] + h[1][i][1];
        *o = mu * laplacian + (lambda + mu) * grad_div;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseName {
    /// `g(t) = t + t^{1.5}`: third time derivative unbounded at 0.
    Example1,
    /// `g(t) = t^{3.5}`.
    Example2,
    Custom,
}

impl fmt::Display for CaseName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CaseName::Example1 => "example1",
            CaseName::Example2 => "example2",
            CaseName::Custom => "custom",
        })
    }
}

#[derive(Debug, Clone)]
pub struct ManufacturedCase {
    pub name: CaseName,
    pub time_factor: PowerSeries,
    pub profile: Arc<dyn SpatialProfile>,
    pub material: Material,
    /// Sides of the unit square where the solution is held at zero; the
    /// others receive the exact traction.
    pub dirichlet_sides: Vec<Side>,
}

impl ManufacturedCase {
    pub fn example1(material: Material) -> ManufacturedCase {
        ManufacturedCase {
            name: CaseName::Example1,
            time_factor: PowerSeries::new(vec![(1.0, 1.0), (1.0, 1.5)]).expect("valid series"),
            profile: Arc::new(SineBubbleProfile),
            material,
            dirichlet_sides: Side::ALL.to_vec(),
        }
    }

    pub fn example2(material: Material) -> ManufacturedCase {
        ManufacturedCase {
            name: CaseName::Example2,
            time_factor: PowerSeries::new(vec![(1.0, 3.5)]).expect("valid series"),
            profile: Arc::new(SineBubbleProfile),
            material,
            dirichlet_sides: Side::ALL.to_vec(),
        }
    }

    pub fn custom(
        time_factor: PowerSeries,
        profile: Arc<dyn SpatialProfile>,
        material: Material,
    ) -> ManufacturedCase {
        ManufacturedCase {
            name: CaseName::Custom,
            time_factor,
            profile,
            material,
            dirichlet_sides: Side::ALL.to_vec(),
        }
    }

    pub fn with_dirichlet_sides(mut self, sides: &[Side]) -> ManufacturedCase {
        self.dirichlet_sides = sides.to_vec();
        self
    }

    pub fn exact_velocity(&self, p: Point, t: f64) -> Vec2 {
        let g = self.time_factor.value(t);
        let phi = self.profile.value(p);
        [g * phi[0], g * phi[1]]
    }

    pub fn exact_gradient(&self, p: Point, t: f64) -> Mat2 {
        let g = self.time_factor.value(t);
        let d = self.profile.gradient(p);
        [[g * d[0][0], g * d[0][1]], [g * d[1][0], g * d[1][1]]]
    }

    /// `f = rho g'(t) Phi - (I^{1-alpha} g)(t) div(D eps(Phi))`.
    pub fn forcing(&self, p: Point, t: f64) -> Vec2 {
        let m = &self.material;
        let dg = self.time_factor.derivative(t);
        let memory = self.time_factor.fractional_integral(m.alpha, t);
        let phi = self.profile.value(p);
        let l = elasticity_operator(self.profile.as_ref(), m, p);
        [
            m.rho * dg * phi[0] - memory * l[0],
            m.rho * dg * phi[1] - memory * l[1],
        ]
    }

    /// `(I^{1-alpha} D eps(w)) n` on a unit-square side.
    pub fn traction(&self, p: Point, side: Side, t: f64) -> Vec2 {
        let memory = self.time_factor.fractional_integral(self.material.alpha, t);
        let s = self.material.stress(self.profile.gradient(p));
        let n = side.outward_normal();
        [
            memory * (s[0][0] * n[0] + s[0][1] * n[1]),
            memory * (s[1][0] * n[0] + s[1][1] * n[1]),
        ]
    }

    /// Convergence order in time the scheme can attain for this case.
    pub fn expected_temporal_order(&self) -> f64 {
        if self.time_factor.has_bounded_third_derivative() {
            2.0
        } else {
            2.0 - self.material.alpha
        }
    }

    /// Exact solution frozen at time `t`.
    pub fn at_time(&self, t: f64) -> ExactSnapshot {
        ExactSnapshot {
            case: self.clone(),
            t,
        }
    }

    pub fn body_force(&self) -> TimeVectorFn {
        let case = self.clone();
        Arc::new(move |p, t| case.forcing(p, t))
    }

    /// Exact traction when some side is not under Dirichlet conditions.
    pub fn traction_fn(&self) -> Option<TractionFn> {
        if Side::ALL.iter().all(|s| self.dirichlet_sides.contains(s)) {
            return None;
        }
        let case = self.clone();
        Some(Arc::new(move |p, side, t| case.traction(p, side, t)))
    }
}

#[derive(Debug, Clone)]
pub struct ExactSnapshot {
    case: ManufacturedCase,
    t: f64,
}

impl VectorField for ExactSnapshot {
    fn value(&self, p: Point) -> Vec2 {
        self.case.exact_velocity(p, self.t)
    }

    fn gradient(&self, p: Point) -> Mat2 {
        self.case.exact_gradient(p, self.t)
    }
}
