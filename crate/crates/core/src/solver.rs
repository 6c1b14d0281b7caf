//! Crank-Nicolson time stepping with the product-integration memory term.
//!
//! With mass `M` (density included), stiffness `K` and loads `F^n`, each step
//! solves
//!
//! `(1/dt) M (W^{n+1} - W^n) + 1/2 K (q_{n+1} + q_n) = 1/2 (F^{n+1} + F^n)`
//!
//! where `q_n` is the discrete fractional integral of `W^0..W^n` and
//! `q_0 = 0`.

use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::fem::{
    assemble_load_with, assemble_mass_with, assemble_stiffness_with, elliptic_project, FeSpace,
    Material, Vec2, VectorField,
};
use crate::fracquad::{combine_history, qn_apply, FracWeights};
use crate::linalg::{cg_solve_warm, CgOptions, CgReport, CsrMatrix, DirichletConstraints};
use crate::mesh::{Point, Side};

/// Space-time body force.
pub type TimeVectorFn = Arc<dyn Fn(Point, f64) -> Vec2 + Send + Sync>;
/// Space-time traction, also given the boundary side.
pub type TractionFn = Arc<dyn Fn(Point, Side, f64) -> Vec2 + Send + Sync>;

/// Relative tolerance of the post-run residual re-evaluation.
pub const RESIDUAL_LIMIT: f64 = 1e-8;

#[derive(Clone)]
pub struct ProblemSetup {
    pub space: Arc<FeSpace>,
    pub material: Material,
    pub final_time: f64,
    pub steps: usize,
    pub body_force: TimeVectorFn,
    /// Traction on the sides of the space that are not Dirichlet.
    pub traction: Option<TractionFn>,
    pub initial_velocity: Arc<dyn VectorField>,
    pub cg: CgOptions,
    pub exec: Exec,
}

impl fmt::Debug for ProblemSetup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSetup")
            .field("n_dofs", &self.space.n_dofs())
            .field("degree", &self.space.degree())
            .field("material", &self.material)
            .field("final_time", &self.final_time)
            .field("steps", &self.steps)
            .field("traction", &self.traction.is_some())
            .field("cg", &self.cg)
            .field("exec", &self.exec)
            .finish()
    }
}

impl ProblemSetup {
    /// Setup with zero traction and the default solver options.
    pub fn new(
        space: Arc<FeSpace>,
        material: Material,
        final_time: f64,
        steps: usize,
        body_force: TimeVectorFn,
        initial_velocity: Arc<dyn VectorField>,
    ) -> ProblemSetup {
        ProblemSetup {
            space,
            material,
            final_time,
            steps,
            body_force,
            traction: None,
            initial_velocity,
            cg: CgOptions::default(),
            exec: Exec::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.material.validate()?;
        if !(self.final_time > 0.0 && self.final_time.is_finite()) || self.steps == 0 {
            return Err(Error::InvalidArgument(format!(
                "need T > 0 and N >= 1, got T = {}, N = {}",
                self.final_time, self.steps
            )));
        }
        if self.space.dirichlet_dofs().is_empty() {
            return Err(Error::InvalidArgument(
                "the Dirichlet boundary must be nonempty".into(),
            ));
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.final_time / self.steps as f64
    }

    pub fn weights(&self) -> Result<FracWeights> {
        FracWeights::new(self.material.alpha, self.final_time, self.steps)
    }

    fn constraints(&self) -> Result<DirichletConstraints> {
        let fixed: Vec<(usize, f64)> = self.space.dirichlet_dofs().iter().map(|&d| (d, 0.0)).collect();
        DirichletConstraints::new(self.space.n_dofs(), &fixed)
    }

    /// Load vector at time `t`.
    pub fn load(&self, t: f64) -> Result<Vec<f64>> {
        let f = |p: Point| (self.body_force)(p, t);
        let g;
        let traction: Option<&(dyn Fn(Point, Side) -> Vec2 + Sync)> = match &self.traction {
            Some(tr) => {
                g = move |p: Point, side: Side| tr(p, side, t);
                Some(&g)
            }
            None => None,
        };
        assemble_load_with(&self.space, &f, traction, 2 * self.space.degree() + 2, self.exec)
    }

    /// Builds the algebraic scheme: assembles `M` and `K` once.
    pub fn scheme(&self) -> Result<LinearScheme> {
        self.validate()?;
        let mass = assemble_mass_with(&self.space, self.material.rho, self.exec);
        let stiffness = assemble_stiffness_with(&self.space, &self.material, self.exec);
        LinearScheme::new(mass, stiffness, self.constraints()?, self.weights()?, self.exec)
    }
}

/// Dirichlet-eliminated `(1/dt) M + (scale/2) K` for the setup.
pub fn step_matrix(setup: &ProblemSetup) -> Result<CsrMatrix> {
    Ok(setup.scheme()?.step_matrix().clone())
}

/// The time-discrete scheme on arbitrary symmetric `M` and `K`.
#[derive(Debug, Clone)]
pub struct LinearScheme {
    mass: CsrMatrix,
    stiffness: CsrMatrix,
    constraints: DirichletConstraints,
    weights: FracWeights,
    full_step: CsrMatrix,
    step: CsrMatrix,
    exec: Exec,
}

impl LinearScheme {
    pub fn new(
        mass: CsrMatrix,
        stiffness: CsrMatrix,
        constraints: DirichletConstraints,
        weights: FracWeights,
        exec: Exec,
    ) -> Result<LinearScheme> {
        if mass.nrows() != stiffness.nrows() || mass.ncols() != stiffness.ncols() {
            return Err(Error::DimensionMismatch {
                expected: mass.nrows(),
                found: stiffness.nrows(),
            });
        }
        let full_step = mass.linear_combination(1.0 / weights.dt(), &stiffness, 0.5 * weights.scale())?;
        let step = constraints.eliminate_matrix(&full_step)?;
        Ok(LinearScheme {
            mass,
            stiffness,
            constraints,
            weights,
            full_step,
            step,
            exec,
        })
    }

    pub fn mass(&self) -> &CsrMatrix {
        &self.mass
    }

    pub fn stiffness(&self) -> &CsrMatrix {
        &self.stiffness
    }

    pub fn weights(&self) -> &FracWeights {
        &self.weights
    }

    pub fn n_dofs(&self) -> usize {
        self.mass.nrows()
    }

    /// Constant left-hand operator after Dirichlet elimination.
    pub fn step_matrix(&self) -> &CsrMatrix {
        &self.step
    }

    /// Right-hand side for `W^{n+1}` given `W^0..W^n`.
    pub fn step_rhs(&self, history: &[Vec<f64>], load_now: &[f64], load_next: &[f64]) -> Result<Vec<f64>> {
        let dim = self.n_dofs();
        if history.is_empty() {
            return Err(Error::InvalidArgument("empty history".into()));
        }
        for v in history.iter().map(Vec::len).chain([load_now.len(), load_next.len()]) {
            if v != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: v,
                });
            }
        }
        let n = history.len() - 1;
        if n >= self.weights.steps() {
            return Err(Error::InvalidArgument(format!(
                "step {} is beyond the {}-step grid",
                n + 1,
                self.weights.steps()
            )));
        }
        let half_scale = 0.5 * self.weights.scale();
        let coefs: Vec<f64> = self
            .weights
            .step_history_coefficients(n)
            .into_iter()
            .map(|c| half_scale * c)
            .collect();
        let memory = combine_history(self.exec, &coefs, history)?;
        let mut k_memory = vec![0.0; dim];
        self.stiffness.spmv_into(self.exec, &memory, &mut k_memory);
        let mut rhs = vec![0.0; dim];
        self.mass.spmv_into(self.exec, &history[n], &mut rhs);
        let inv_dt = 1.0 / self.weights.dt();
        self.exec.for_each_chunk_mut(&mut rhs, |off, chunk| {
            for (j, r) in chunk.iter_mut().enumerate() {
                let i = off + j;
                *r = inv_dt * *r - k_memory[i] + 0.5 * (load_next[i] + load_now[i]);
            }
        });
        self.constraints.eliminate_rhs(&self.full_step, &mut rhs)?;
        Ok(rhs)
    }

    /// Relative residual of the step equation for `W^{n+1}`, re-evaluated
    /// from `W^0..W^{n+1}` with the direct form of `q_n`. Constrained rows
    /// are skipped.
    pub fn residual(&self, history: &[Vec<f64>], load_now: &[f64], load_next: &[f64]) -> Result<f64> {
        if history.len() < 2 {
            return Err(Error::InvalidArgument("residual needs two states".into()));
        }
        let n = history.len() - 2;
        let inv_dt = 1.0 / self.weights.dt();
        let q_now = qn_apply(&self.weights, &history[..=n])?;
        let q_next = qn_apply(&self.weights, history)?;
        let m_next = self.mass.spmv_with(self.exec, &history[n + 1])?;
        let m_now = self.mass.spmv_with(self.exec, &history[n])?;
        let k_next = self.stiffness.spmv_with(self.exec, &q_next)?;
        let k_now = self.stiffness.spmv_with(self.exec, &q_now)?;
        let (mut num, mut den) = (0.0f64, [0.0f64; 5]);
        for i in 0..self.n_dofs() {
            if self.constraints.contains(i) {
                continue;
            }
            let parts = [
                inv_dt * m_next[i],
                -inv_dt * m_now[i],
                0.5 * k_next[i],
                0.5 * k_now[i],
                -0.5 * (load_next[i] + load_now[i]),
            ];
            let r: f64 = parts.iter().sum();
            num += r * r;
            for (d, p) in den.iter_mut().zip(parts) {
                *d += p * p;
            }
        }
        let scale: f64 = den.iter().map(|d| d.sqrt()).sum();
        Ok(if scale == 0.0 { 0.0 } else { num.sqrt() / scale })
    }

    /// Runs all steps from `initial`; `load(n)` returns `F^n`.
    ///
    /// Each solve is warm-started from the previous state. After the loop
    /// the residual is re-evaluated at three steps.
    pub fn run(
        &self,
        initial: Vec<f64>,
        mut load: impl FnMut(usize) -> Result<Vec<f64>>,
        cg: &CgOptions,
    ) -> Result<Trajectory> {
        let steps = self.weights.steps();
        if initial.len() != self.n_dofs() {
            return Err(Error::DimensionMismatch {
                expected: self.n_dofs(),
                found: initial.len(),
            });
        }
        let mut history = Vec::with_capacity(steps + 1);
        history.push(initial);
        let mut reports = Vec::with_capacity(steps);
        let mut load_now = load(0)?;
        let mut load_time = 0.0;
        let started = Instant::now();
        for n in 0..steps {
            let t0 = Instant::now();
            let load_next = load(n + 1)?;
            load_time += t0.elapsed().as_secs_f64();
            let rhs = self.step_rhs(&history, &load_now, &load_next)?;
            let mut x = history[n].clone();
            let report = cg_solve_warm(self.exec, &self.step, &rhs, &mut x, cg)?;
            if !report.converged {
                return Err(Error::SolverFailed { step: n + 1, report });
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    iteration: report.iterations,
                });
            }
            reports.push(report);
            history.push(x);
            load_now = load_next;
        }
        let stepping = started.elapsed().as_secs_f64() - load_time;

        let started = Instant::now();
        let mut checks = Vec::new();
        for n in check_steps(steps) {
            let residual = self.residual(&history[..=n], &load(n - 1)?, &load(n)?)?;
            if !(residual <= RESIDUAL_LIMIT) {
                return Err(Error::ResidualCheck {
                    step: n,
                    residual,
                    limit: RESIDUAL_LIMIT,
                });
            }
            checks.push((n, residual));
        }
        Ok(Trajectory {
            steps: history,
            cg_reports: reports,
            residual_checks: checks,
            load_seconds: load_time,
            stepping_seconds: stepping,
            check_seconds: started.elapsed().as_secs_f64(),
        })
    }
}

/// First, middle and last step.
fn check_steps(steps: usize) -> Vec<usize> {
    let mut s = vec![1, steps.div_ceil(2), steps];
    s.dedup();
    s
}

/// Output of [`LinearScheme::run`].
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub steps: Vec<Vec<f64>>,
    pub cg_reports: Vec<CgReport>,
    /// `(step, relative residual)` pairs.
    pub residual_checks: Vec<(usize, f64)>,
    pub load_seconds: f64,
    pub stepping_seconds: f64,
    pub check_seconds: f64,
}

/// Seconds spent in each phase of [`run`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PhaseTimes {
    pub assembly: f64,
    pub projection: f64,
    pub loads: f64,
    pub stepping: f64,
    pub residual_check: f64,
}

impl PhaseTimes {
    pub fn total(&self) -> f64 {
        self.assembly + self.projection + self.loads + self.stepping + self.residual_check
    }
}

#[derive(Debug, Clone)]
pub struct SolveRecord {
    /// `W^0..W^N`.
    pub steps: Vec<Vec<f64>>,
    pub dt: f64,
    /// Solve of the initial elliptic projection.
    pub projection_report: CgReport,
    /// One report per time step, `cg_reports[n]` for `W^{n+1}`.
    pub cg_reports: Vec<CgReport>,
    pub residual_checks: Vec<(usize, f64)>,
    pub wall_times: PhaseTimes,
}

impl SolveRecord {
    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }

    pub fn final_state(&self) -> &[f64] {
        self.steps.last().expect("at least the initial state")
    }

    /// Text dump, one line `step t_n dof_0 .. dof_{m-1}` per step.
    pub fn write_snapshots<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        for (n, w) in self.steps.iter().enumerate() {
            write!(out, "{} {:e}", n, self.time(n))?;
            for v in w {
                write!(out, " {v:e}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Elliptic projection of the initial velocity followed by all time steps.
pub fn run(setup: &ProblemSetup) -> Result<SolveRecord> {
    let started = Instant::now();
    let scheme = setup.scheme()?;
    let assembly = started.elapsed().as_secs_f64();

    let started = Instant::now();
    let (initial, projection_report) = elliptic_project(
        &setup.space,
        &setup.material,
        setup.initial_velocity.as_ref(),
        Some(scheme.stiffness()),
        &setup.cg,
    )?;
    let projection = started.elapsed().as_secs_f64();

    let dt = setup.dt();
    let traj = scheme.run(initial, |n| setup.load(n as f64 * dt), &setup.cg)?;
    Ok(SolveRecord {
        steps: traj.steps,
        dt,
        projection_report,
        cg_reports: traj.cg_reports,
        residual_checks: traj.residual_checks,
        wall_times: PhaseTimes {
            assembly,
            projection,
            loads: traj.load_seconds,
            stepping: traj.stepping_seconds,
            residual_check: traj.check_seconds,
        },
    })
}
