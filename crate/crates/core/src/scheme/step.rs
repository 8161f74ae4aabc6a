use std::ops::ControlFlow;

use super::energy::energy_entry;
use super::{Discretization, EnergyEntry, SchemeError, SolverSettings, Stage, TimeScheme};
use crate::assembly::{
    buoyancy_rhs, convection_matrix, curl_scalar_to_vector_rhs, curl_vector_to_scalar_rhs,
    div_velocity_rhs, grad_pressure_rhs, source_rhs, velocity_dot_e_rhs,
};
use crate::fem::{interpolate, FeFunction};
use crate::problems::{step_scalar, PassiveScalarState, ProblemSpec};
use crate::sparse::{
    apply_dirichlet, project_zero_mean, solve_with_guess, CsrMatrix, Solution, SolverConfig,
};

/// Two time levels of every unknown plus the latest predictor.
#[derive(Debug, Clone)]
pub struct SchemeState {
    pub u: FeFunction,
    pub u_prev: FeFunction,
    /// Predicted velocity of the latest step.
    pub u_tilde: FeFunction,
    pub p: FeFunction,
    pub p_prev: FeFunction,
    pub omega: FeFunction,
    pub omega_prev: FeFunction,
    pub theta: FeFunction,
    pub theta_prev: FeFunction,
    pub passive: Option<PassiveScalarState>,
    /// Completed steps; the state holds `t = step * dt`.
    pub step: usize,
    pub time: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolveInfo {
    pub iterations: usize,
    pub residual: f64,
}

impl From<&Solution> for SolveInfo {
    fn from(s: &Solution) -> Self {
        SolveInfo {
            iterations: s.iterations,
            residual: s.residual,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepDiagnostics {
    pub step: usize,
    pub time: f64,
    pub predict: SolveInfo,
    pub pressure: SolveInfo,
    pub correct: SolveInfo,
    pub angular: SolveInfo,
    pub temperature: SolveInfo,
    pub passive: Option<SolveInfo>,
    /// `max_q |(div u^{n+1}, q)| / ||q||_0` for the corrected velocity
    /// `u~ - (dt/a0) grad(p^{n+1} - p^n)`, its divergence taken weakly.
    pub divergence_defect: f64,
    pub energy: EnergyEntry,
}

/// Extrapolated fields and the shared convection operator of one step.
#[derive(Debug, Clone)]
pub struct Extrapolated {
    pub scheme: TimeScheme,
    pub dt: f64,
    pub t_new: f64,
    pub wind: FeFunction,
    pub omega: FeFunction,
    pub theta: FeFunction,
    /// Scalar convection matrix of `wind` on the P2 scalar space.
    pub convection: CsrMatrix,
}

impl Extrapolated {
    pub fn new(
        disc: &Discretization,
        state: &SchemeState,
        scheme: TimeScheme,
    ) -> Result<Self, SchemeError> {
        let (en, ep) = scheme.extrapolation();
        let wind = state.u.combine(en, &state.u_prev, ep);
        let convection = convection_matrix(disc.scalar_space(), &wind)?;
        Ok(Extrapolated {
            scheme,
            dt: state.dt,
            t_new: (state.step + 1) as f64 * state.dt,
            omega: state.omega.combine(en, &state.omega_prev, ep),
            theta: state.theta.combine(en, &state.theta_prev, ep),
            wind,
            convection,
        })
    }
}

fn add_into(acc: &mut [f64], v: &[f64]) {
    acc.iter_mut().zip(v).for_each(|(a, b)| *a += b);
}

/// `M (h_n x^n + h_prev x^{n-1}) * scale`.
fn history(
    m: &CsrMatrix,
    x: &FeFunction,
    x_prev: &FeFunction,
    scheme: TimeScheme,
    scale: f64,
) -> Vec<f64> {
    let (_, hn, hp) = scheme.bdf();
    let h: Vec<f64> = x
        .coeffs()
        .iter()
        .zip(x_prev.coeffs())
        .map(|(a, b)| scale * (hn * a + hp * b))
        .collect();
    let mut out = vec![0.0; h.len()];
    m.spmv_into(&h, &mut out);
    out
}

fn constrained_solve(
    mut a: CsrMatrix,
    mut b: Vec<f64>,
    dofs: &[usize],
    values: &[f64],
    guess: &FeFunction,
    cfg: &SolverConfig,
    stage: Stage,
) -> Result<Solution, SchemeError> {
    apply_dirichlet(&mut a, &mut b, dofs, values)?;
    let mut x0 = guess.coeffs().to_vec();
    for (&d, &v) in dofs.iter().zip(values) {
        x0[d] = v;
    }
    solve_with_guess(&a, &b, &x0, cfg).map_err(|e| SchemeError::solve(stage, e))
}

/// Step 1: the velocity predictor.
pub fn step_velocity_predict(
    disc: &Discretization,
    problem: &ProblemSpec,
    state: &SchemeState,
    ex: &Extrapolated,
) -> Result<(FeFunction, SolveInfo), SchemeError> {
    let prm = &problem.params;
    let (a0, _, _) = ex.scheme.bdf();
    let vs = disc.velocity_space();
    let a = CsrMatrix::linear_combination(&[
        (a0 / ex.dt, disc.scalar_mass()),
        (prm.chi + prm.mu, disc.scalar_stiffness()),
        (1.0, &ex.convection),
    ])?
    .block_diag2();
    let mut b = history(
        disc.velocity_mass(),
        &state.u,
        &state.u_prev,
        ex.scheme,
        1.0 / ex.dt,
    );
    let grad_p = grad_pressure_rhs(vs, &state.p)?;
    b.iter_mut().zip(&grad_p).for_each(|(x, g)| *x -= g);
    add_into(
        &mut b,
        &curl_scalar_to_vector_rhs(vs, &ex.omega, 2.0 * prm.chi)?,
    );
    if prm.buoyancy_coupling {
        add_into(&mut b, &buoyancy_rhs(vs, &ex.theta, prm.e)?);
    }
    if let Some(f) = &problem.forcing.velocity {
        add_into(&mut b, &source_rhs(vs, f, ex.t_new)?);
    }
    let (dofs, values) = disc.velocity_dirichlet(&problem.bc.velocity, ex.t_new);
    let sol = constrained_solve(
        a,
        b,
        &dofs,
        &values,
        &state.u,
        &disc.solvers().nonsymmetric,
        Stage::VelocityPredict,
    )?;
    let info = SolveInfo::from(&sol);
    Ok((FeFunction::from_coeffs(vs, sol.x)?, info))
}

/// Result of Step 2.
#[derive(Debug, Clone)]
pub struct PressureUpdate {
    /// Zero-mean `p^{n+1}`.
    pub p: FeFunction,
    /// `p^{n+1} - p^n` as solved for, before re-gauging.
    pub increment: FeFunction,
    pub info: SolveInfo,
    pub divergence_defect: f64,
}

/// Step 2: `(grad dp, grad q) = -(a0/dt) (div u~, q)`, `p^{n+1} = p^n + dp`.
pub fn step_pressure(
    disc: &Discretization,
    state: &SchemeState,
    u_tilde: &FeFunction,
    ex: &Extrapolated,
) -> Result<PressureUpdate, SchemeError> {
    let (a0, _, _) = ex.scheme.bdf();
    let ps = disc.pressure_space();
    let div = div_velocity_rhs(ps, u_tilde)?;
    let factor = a0 / ex.dt;
    let mut b: Vec<f64> = div.iter().map(|d| -factor * d).collect();
    // restrict to the range of the Neumann Laplacian
    let mean = b.iter().sum::<f64>() / b.len() as f64;
    b.iter_mut().for_each(|x| *x -= mean);
    let guess = vec![0.0; b.len()];
    let sol = solve_with_guess(
        disc.pressure_stiffness(),
        &b,
        &guess,
        &disc.solvers().symmetric,
    )
    .map_err(|e| SchemeError::solve(Stage::Pressure, e))?;
    let info = SolveInfo::from(&sol);

    let kdp = disc.pressure_stiffness().spmv(&sol.x)?;
    let c = ex.dt / a0;
    let divergence_defect = div
        .iter()
        .zip(&kdp)
        .zip(disc.pressure_basis_norms())
        .map(|((d, k), n)| (d + c * k).abs() / n)
        .fold(0.0, f64::max);

    let increment = FeFunction::from_coeffs(ps, sol.x)?;
    let raw = state.p.combine(1.0, &increment, 1.0);
    let p = project_zero_mean(&raw, disc.pressure_weights())?;
    Ok(PressureUpdate {
        p,
        increment,
        info,
        divergence_defect,
    })
}

/// Step 3: L2 projection of `u~ - (dt/a0) grad(dp)` onto the velocity
/// space, keeping the predictor's boundary values.
pub fn step_velocity_correct(
    disc: &Discretization,
    problem: &ProblemSpec,
    u_tilde: &FeFunction,
    increment: &FeFunction,
    ex: &Extrapolated,
) -> Result<(FeFunction, SolveInfo), SchemeError> {
    if increment.coeffs().iter().all(|&v| v == 0.0) {
        return Ok((u_tilde.clone(), SolveInfo::default()));
    }
    let (a0, _, _) = ex.scheme.bdf();
    let vs = disc.velocity_space();
    let c = ex.dt / a0;
    let mut b = disc.velocity_mass().spmv(u_tilde.coeffs())?;
    let g = grad_pressure_rhs(vs, increment)?;
    b.iter_mut().zip(&g).for_each(|(x, gi)| *x -= c * gi);
    let (dofs, _) = problem.bc.velocity.dirichlet_data(vs, ex.t_new);
    let values: Vec<f64> = dofs.iter().map(|&d| u_tilde.coeffs()[d]).collect();
    let sol = constrained_solve(
        disc.velocity_mass().clone(),
        b,
        &dofs,
        &values,
        u_tilde,
        &disc.solvers().symmetric,
        Stage::VelocityCorrect,
    )?;
    let info = SolveInfo::from(&sol);
    Ok((FeFunction::from_coeffs(vs, sol.x)?, info))
}

/// Step 4: the scalar microrotation.
pub fn step_angular(
    disc: &Discretization,
    problem: &ProblemSpec,
    state: &SchemeState,
    ex: &Extrapolated,
) -> Result<(FeFunction, SolveInfo), SchemeError> {
    let prm = &problem.params;
    let (a0, _, _) = ex.scheme.bdf();
    let ss = disc.scalar_space();
    let a = CsrMatrix::linear_combination(&[
        (prm.zeta * a0 / ex.dt + 4.0 * prm.chi, disc.scalar_mass()),
        (prm.upsilon, disc.scalar_stiffness()),
        (prm.zeta, &ex.convection),
    ])?;
    let mut b = history(
        disc.scalar_mass(),
        &state.omega,
        &state.omega_prev,
        ex.scheme,
        prm.zeta / ex.dt,
    );
    add_into(
        &mut b,
        &curl_vector_to_scalar_rhs(ss, &ex.wind, 2.0 * prm.chi)?,
    );
    if let Some(f) = &problem.forcing.angular {
        add_into(&mut b, &source_rhs(ss, f, ex.t_new)?);
    }
    let (dofs, values) = problem.bc.angular.dirichlet_data(ss, ex.t_new);
    let sol = constrained_solve(
        a,
        b,
        &dofs,
        &values,
        &state.omega,
        &disc.solvers().nonsymmetric,
        Stage::Angular,
    )?;
    let info = SolveInfo::from(&sol);
    Ok((FeFunction::from_coeffs(ss, sol.x)?, info))
}

/// Step 5: the temperature.
pub fn step_temperature(
    disc: &Discretization,
    problem: &ProblemSpec,
    state: &SchemeState,
    ex: &Extrapolated,
) -> Result<(FeFunction, SolveInfo), SchemeError> {
    let prm = &problem.params;
    let (a0, _, _) = ex.scheme.bdf();
    let ss = disc.scalar_space();
    let a = CsrMatrix::linear_combination(&[
        (a0 / ex.dt, disc.scalar_mass()),
        (prm.kappa, disc.scalar_stiffness()),
        (1.0, &ex.convection),
    ])?;
    let mut b = history(
        disc.scalar_mass(),
        &state.theta,
        &state.theta_prev,
        ex.scheme,
        1.0 / ex.dt,
    );
    if prm.buoyancy_coupling {
        add_into(&mut b, &velocity_dot_e_rhs(ss, &ex.wind, prm.e)?);
    }
    if let Some(f) = &problem.forcing.temperature {
        add_into(&mut b, &source_rhs(ss, f, ex.t_new)?);
    }
    let (dofs, values) = problem.bc.temperature.dirichlet_data(ss, ex.t_new);
    let sol = constrained_solve(
        a,
        b,
        &dofs,
        &values,
        &state.theta,
        &disc.solvers().nonsymmetric,
        Stage::Temperature,
    )?;
    let info = SolveInfo::from(&sol);
    Ok((FeFunction::from_coeffs(ss, sol.x)?, info))
}

fn take_step(
    disc: &Discretization,
    problem: &ProblemSpec,
    state: &mut SchemeState,
    scheme: TimeScheme,
) -> Result<StepDiagnostics, SchemeError> {
    let ex = Extrapolated::new(disc, state, scheme)?;
    let (u_tilde, predict) = step_velocity_predict(disc, problem, state, &ex)?;
    let pu = step_pressure(disc, state, &u_tilde, &ex)?;
    let (u_new, correct) = step_velocity_correct(disc, problem, &u_tilde, &pu.increment, &ex)?;
    let (omega_new, angular) = step_angular(disc, problem, state, &ex)?;
    let (theta_new, temperature) = step_temperature(disc, problem, state, &ex)?;
    let mut passive = None;
    if let Some(ps) = &state.passive {
        let phi = step_scalar(disc, ps, &ex.convection, scheme, ex.dt)?;
        passive = Some(PassiveScalarState {
            phi_prev: ps.phi.clone(),
            phi,
        });
    }
    let step = state.step + 1;
    for (name, f) in [
        ("velocity", &u_new),
        ("pressure", &pu.p),
        ("microrotation", &omega_new),
        ("temperature", &theta_new),
    ] {
        if !f.coeffs().iter().all(|v| v.is_finite()) {
            return Err(SchemeError::NonFinite { field: name, step });
        }
    }

    state.u_prev = std::mem::replace(&mut state.u, u_new);
    state.u_tilde = u_tilde;
    state.p_prev = std::mem::replace(&mut state.p, pu.p);
    state.omega_prev = std::mem::replace(&mut state.omega, omega_new);
    state.theta_prev = std::mem::replace(&mut state.theta, theta_new);
    let passive_info = passive.as_ref().map(|_| SolveInfo::default());
    if passive.is_some() {
        state.passive = passive;
    }
    state.step = step;
    state.time = ex.t_new;

    let energy = energy_entry(
        disc,
        &problem.params,
        step,
        state.time,
        state.dt,
        (&state.u, &state.u_prev),
        &state.p,
        (&state.omega, &state.omega_prev),
        (&state.theta, &state.theta_prev),
    );
    Ok(StepDiagnostics {
        step,
        time: state.time,
        predict,
        pressure: pu.info,
        correct,
        angular,
        temperature,
        passive: passive_info,
        divergence_defect: pu.divergence_defect,
        energy,
    })
}

fn at_step(step: usize, time: f64) -> impl FnOnce(SchemeError) -> SchemeError {
    move |e| SchemeError::AtStep {
        step,
        time,
        source: Box::new(e),
    }
}

/// Interpolate the initial data and take the backward-Euler startup step.
///
/// Returns the state at `t = dt` and the startup diagnostics.
pub fn initialize(
    disc: &Discretization,
    problem: &ProblemSpec,
    dt: f64,
) -> Result<(SchemeState, StepDiagnostics), SchemeError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(SchemeError::InvalidTimeStep(dt));
    }
    problem.params.validate()?;
    let init = &problem.initial;
    let u = interpolate(disc.velocity_space(), &init.velocity, 0.0)?;
    let p_raw = interpolate(disc.pressure_space(), &init.pressure, 0.0)?;
    let p = project_zero_mean(&p_raw, disc.pressure_weights())?;
    let omega = interpolate(disc.scalar_space(), &init.angular, 0.0)?;
    let theta = interpolate(disc.scalar_space(), &init.temperature, 0.0)?;
    let passive = match &problem.passive {
        Some(spec) => {
            let phi = interpolate(disc.scalar_space(), &spec.initial, 0.0)?;
            Some(PassiveScalarState {
                phi_prev: phi.clone(),
                phi,
            })
        }
        None => None,
    };
    let mut state = SchemeState {
        u_prev: u.clone(),
        u_tilde: u.clone(),
        u,
        p_prev: p.clone(),
        p,
        omega_prev: omega.clone(),
        omega,
        theta_prev: theta.clone(),
        theta,
        passive,
        step: 0,
        time: 0.0,
        dt,
    };
    let diag =
        take_step(disc, problem, &mut state, TimeScheme::BackwardEuler).map_err(at_step(1, dt))?;
    Ok((state, diag))
}

/// One BDF2 step.
pub fn advance(
    disc: &Discretization,
    problem: &ProblemSpec,
    state: &mut SchemeState,
) -> Result<StepDiagnostics, SchemeError> {
    let (step, t) = (state.step + 1, (state.step + 1) as f64 * state.dt);
    take_step(disc, problem, state, TimeScheme::Bdf2).map_err(at_step(step, t))
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Times at which to keep a copy of the fields; each is taken at the
    /// first step reaching it.
    pub snapshot_times: Vec<f64>,
    pub solvers: SolverSettings,
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub step: usize,
    pub time: f64,
    pub u: FeFunction,
    pub p: FeFunction,
    pub omega: FeFunction,
    pub theta: FeFunction,
    pub phi: Option<FeFunction>,
}

impl Snapshot {
    fn of(state: &SchemeState) -> Self {
        Snapshot {
            step: state.step,
            time: state.time,
            u: state.u.clone(),
            p: state.p.clone(),
            omega: state.omega.clone(),
            theta: state.theta.clone(),
            phi: state.passive.as_ref().map(|p| p.phi.clone()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub disc: Discretization,
    pub state: SchemeState,
    pub diagnostics: Vec<StepDiagnostics>,
    pub snapshots: Vec<Snapshot>,
    /// True when the observer ended the run before the final time.
    pub stopped_early: bool,
}

impl RunOutput {
    pub fn energy(&self) -> Vec<EnergyEntry> {
        self.diagnostics.iter().map(|d| d.energy).collect()
    }
}

/// March from `t = 0` to `t_final` on a mesh of cell size `h`.
///
/// `dt` is shrunk to `t_final / ceil(t_final / dt)` so the final time is hit
/// exactly.
pub fn run(
    problem: &ProblemSpec,
    h: f64,
    dt: f64,
    t_final: f64,
    opts: &RunOptions,
) -> crate::Result<RunOutput> {
    run_with(problem, h, dt, t_final, opts, |_, _| {
        ControlFlow::Continue(())
    })
}

/// [`run`] with an observer called after every step; returning
/// `ControlFlow::Break` stops the run.
pub fn run_with<F>(
    problem: &ProblemSpec,
    h: f64,
    dt: f64,
    t_final: f64,
    opts: &RunOptions,
    mut observer: F,
) -> crate::Result<RunOutput>
where
    F: FnMut(&SchemeState, &StepDiagnostics) -> ControlFlow<()>,
{
    if !(t_final > 0.0 && t_final.is_finite()) {
        return Err(SchemeError::InvalidFinalTime(t_final).into());
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(SchemeError::InvalidTimeStep(dt).into());
    }
    let steps = adjusted_steps(t_final, dt);
    let dt = t_final / steps as f64;
    let mesh = problem.mesh(h)?;
    let disc = Discretization::new(&mesh, problem)?.with_solvers(opts.solvers);

    let mut pending: Vec<f64> = opts.snapshot_times.clone();
    pending.sort_by(|a, b| a.total_cmp(b));
    let tol = 1e-9 * dt;
    let mut snapshots = Vec::new();
    if pending.first().is_some_and(|&t| t <= tol) {
        // snapshot of the initial data before any step
        let u = interpolate(disc.velocity_space(), &problem.initial.velocity, 0.0)?;
        let p = project_zero_mean(
            &interpolate(disc.pressure_space(), &problem.initial.pressure, 0.0)?,
            disc.pressure_weights(),
        )?;
        let omega = interpolate(disc.scalar_space(), &problem.initial.angular, 0.0)?;
        let theta = interpolate(disc.scalar_space(), &problem.initial.temperature, 0.0)?;
        let phi = match &problem.passive {
            Some(s) => Some(interpolate(disc.scalar_space(), &s.initial, 0.0)?),
            None => None,
        };
        snapshots.push(Snapshot {
            step: 0,
            time: 0.0,
            u,
            p,
            omega,
            theta,
            phi,
        });
        pending.retain(|&t| t > tol);
    }

    let (mut state, first) = initialize(&disc, problem, dt)?;
    let mut diagnostics = Vec::with_capacity(steps);
    let mut stopped_early = false;
    let mut record =
        |state: &SchemeState, diag: StepDiagnostics, diagnostics: &mut Vec<StepDiagnostics>| {
            while pending.first().is_some_and(|&t| state.time >= t - tol) {
                pending.remove(0);
                snapshots.push(Snapshot::of(state));
            }
            let flow = observer(state, &diag);
            diagnostics.push(diag);
            flow
        };
    if record(&state, first, &mut diagnostics).is_break() {
        stopped_early = steps > 1;
    } else {
        while state.step < steps {
            let diag = advance(&disc, problem, &mut state)?;
            if record(&state, diag, &mut diagnostics).is_break() {
                stopped_early = state.step < steps;
                break;
            }
        }
    }
    Ok(RunOutput {
        disc,
        state,
        diagnostics,
        snapshots,
        stopped_early,
    })
}

/// `ceil(t_final / dt)`, ignoring round-off just above an integer.
pub(crate) fn adjusted_steps(t_final: f64, dt: f64) -> usize {
    let r = t_final / dt;
    let n = r.round();
    if (r - n).abs() <= 1e-9 * r.max(1.0) {
        (n as usize).max(1)
    } else {
        (r.ceil() as usize).max(1)
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::analytic::Analytic;
    use crate::mesh::Mesh;
    use crate::problems::{cavity_2d, manufactured_2d, stirring_2d, FieldSet, Forcing};
    use crate::scheme::{BoundaryConditions, FieldBc, PhysicalParams};

    fn quiet_problem() -> ProblemSpec {
        let mut p = cavity_2d(0.1, 0.1, 0.1, 1.0);
        p.bc = BoundaryConditions {
            velocity: FieldBc::dirichlet_everywhere(Analytic::zero_vector()),
            angular: FieldBc::dirichlet_everywhere(Analytic::zero_scalar()),
            temperature: FieldBc::dirichlet_everywhere(Analytic::zero_scalar()),
        };
        p
    }

    fn disc_for(p: &ProblemSpec, n: usize) -> Discretization {
        let m = Arc::new(Mesh::build_structured_rect(n, n, p.bounds).unwrap());
        Discretization::new(&m, p).unwrap()
    }

    #[test]
    fn zero_data_stays_zero() {
        let p = quiet_problem();
        let d = disc_for(&p, 4);
        let (mut s, diag) = initialize(&d, &p, 0.1).unwrap();
        for f in [&s.u, &s.p, &s.omega, &s.theta] {
            assert!(f.coeffs().iter().all(|&v| v == 0.0));
        }
        assert_eq!(diag.energy.composite, 0.0);
        for _ in 0..2 {
            advance(&d, &p, &mut s).unwrap();
        }
        for f in [&s.u, &s.p, &s.omega, &s.theta] {
            assert!(f.coeffs().iter().all(|&v| v == 0.0));
        }
        assert_eq!(s.step, 3);
    }

    #[test]
    fn cavity_initial_pressure_is_zero() {
        let p = cavity_2d(0.1, 0.1, 0.01, 1.0);
        let d = disc_for(&p, 4);
        let (s, _) = initialize(&d, &p, 0.01).unwrap();
        assert!(s.p_prev.coeffs().iter().all(|&v| v == 0.0));
        assert!(s.u.max_abs() > 0.0);
    }

    #[test]
    fn predictor_matrices_are_coercive() {
        let p = manufactured_2d(PhysicalParams::new(0.1, 0.1, 1.0, 0.1));
        let d = disc_for(&p, 4);
        let (s, _) = initialize(&d, &p, 0.05).unwrap();
        let ex = Extrapolated::new(&d, &s, TimeScheme::Bdf2).unwrap();
        let prm = p.params;
        let a1 = CsrMatrix::linear_combination(&[
            (1.5 / ex.dt, d.scalar_mass()),
            (prm.chi + prm.mu, d.scalar_stiffness()),
            (1.0, &ex.convection),
        ])
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let v: Vec<f64> = (0..a1.nrows()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            assert!(a1.bilinear(&v, &v) > 0.0);
            // the convection part alone contributes nothing
            let c = ex.convection.bilinear(&v, &v);
            let vv: f64 = v.iter().map(|x| x * x).sum();
            assert!(c.abs() <= 1e-12 * vv);
        }
    }

    #[test]
    fn unchanged_pressure_leaves_predictor() {
        let p = quiet_problem();
        let d = disc_for(&p, 3);
        let (s, _) = initialize(&d, &p, 0.1).unwrap();
        let ex = Extrapolated::new(&d, &s, TimeScheme::Bdf2).unwrap();
        let ut = interpolate(
            d.velocity_space(),
            &Analytic::vector(|x, y, _| [x * y, -y]),
            0.0,
        )
        .unwrap();
        let zero = FeFunction::zeros(d.pressure_space());
        let (u, _) = step_velocity_correct(&d, &p, &ut, &zero, &ex).unwrap();
        assert_eq!(u.coeffs(), ut.coeffs());
    }

    #[test]
    fn divergence_free_predictor_gives_zero_pressure() {
        let p = quiet_problem();
        let d = disc_for(&p, 4);
        let (s, _) = initialize(&d, &p, 0.1).unwrap();
        let ex = Extrapolated::new(&d, &s, TimeScheme::Bdf2).unwrap();
        let rot = interpolate(
            d.velocity_space(),
            &Analytic::vector(|x, y, _| [-(y - 0.5), x - 0.5]),
            0.0,
        )
        .unwrap();
        let pu = step_pressure(&d, &s, &rot, &ex).unwrap();
        assert!(pu.p.max_abs() < 1e-12);
    }

    #[test]
    fn correction_is_linear_in_the_increment() {
        let p = quiet_problem();
        let d = disc_for(&p, 3);
        let (s, _) = initialize(&d, &p, 0.1).unwrap();
        let ex = Extrapolated::new(&d, &s, TimeScheme::Bdf2).unwrap();
        let zero_u = FeFunction::zeros(d.velocity_space());
        let q = interpolate(
            d.pressure_space(),
            &Analytic::scalar(|x, y, _| x * x - y),
            0.0,
        )
        .unwrap();
        let (u1, _) = step_velocity_correct(&d, &p, &zero_u, &q, &ex).unwrap();
        let (u2, _) =
            step_velocity_correct(&d, &p, &zero_u, &q.combine(2.0, &q, 0.0), &ex).unwrap();
        let scale = u1.max_abs();
        assert!(scale > 0.0);
        for (a, b) in u1.coeffs().iter().zip(u2.coeffs()) {
            assert!((2.0 * a - b).abs() <= 1e-8 * scale);
        }
    }

    #[test]
    fn gauge_invariance() {
        let p = manufactured_2d(PhysicalParams::new(0.1, 0.1, 1.0, 0.1));
        let d = disc_for(&p, 4);
        let (s, _) = initialize(&d, &p, 0.05).unwrap();
        let mut shifted = s.clone();
        shifted.p.coeffs_mut().iter_mut().for_each(|v| *v += 3.0);
        let mut a = s;
        advance(&d, &p, &mut a).unwrap();
        advance(&d, &p, &mut shifted).unwrap();
        let close = |x: &FeFunction, y: &FeFunction| {
            let scale = x.max_abs().max(1.0);
            x.coeffs()
                .iter()
                .zip(y.coeffs())
                .all(|(a, b)| (a - b).abs() <= 1e-8 * scale)
        };
        assert!(close(&a.u, &shifted.u));
        assert!(close(&a.omega, &shifted.omega));
        assert!(close(&a.theta, &shifted.theta));
        assert!(close(&a.p, &shifted.p));
    }

    #[test]
    fn steady_diffusion_reaches_linear_profile() {
        let mut p = cavity_2d(0.1, 0.1, 1.0, 1.0);
        p.bc.velocity = FieldBc::dirichlet_everywhere(Analytic::zero_vector());
        p.params.buoyancy_coupling = false;
        let d = disc_for(&p, 4);
        let (mut s, _) = initialize(&d, &p, 0.5).unwrap();
        for _ in 0..40 {
            advance(&d, &p, &mut s).unwrap();
        }
        let coords = d.scalar_space().dof_coords();
        for (c, v) in coords.iter().zip(s.theta.coeffs()) {
            assert!((v - c[0]).abs() < 1e-6, "{c:?}: {v}");
        }
    }

    #[test]
    fn one_manufactured_step_converges_with_small_defect() {
        let p = manufactured_2d(PhysicalParams::new(0.1, 0.1, 1.0, 0.1));
        let d = disc_for(&p, 8);
        let dt = (1.0f64 / 8.0).powf(1.5);
        let (mut s, first) = initialize(&d, &p, dt).unwrap();
        let diag = advance(&d, &p, &mut s).unwrap();
        for dg in [&first, &diag] {
            assert!(
                dg.divergence_defect <= 10.0 * 1e-10,
                "{}",
                dg.divergence_defect
            );
            assert!(dg.energy.is_admissible());
        }
    }

    #[test]
    fn stirring_torque_spins_negatively() {
        let p = stirring_2d(0.25);
        let d = disc_for(&p, 8);
        let (mut s, _) = initialize(&d, &p, 0.05).unwrap();
        for _ in 0..4 {
            advance(&d, &p, &mut s).unwrap();
        }
        let coords = d.scalar_space().dof_coords();
        let (mut neg, mut tot) = (0.0, 0.0);
        for (c, w) in coords.iter().zip(s.omega.coeffs()) {
            if c[0] < 1.0 {
                tot += w.abs();
                if *w < 0.0 {
                    neg += w.abs();
                }
            }
        }
        assert!(neg > 0.9 * tot, "{neg} / {tot}");
        let phi = &s.passive.as_ref().unwrap().phi;
        assert!(phi.coeffs().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn run_counts_steps_and_snapshots() {
        let p = quiet_problem();
        let opts = RunOptions {
            snapshot_times: vec![0.0, 0.2, 0.3],
            ..RunOptions::default()
        };
        let out = run(&p, 0.25, 0.1, 0.3, &opts).unwrap();
        assert_eq!(out.state.step, 3);
        assert_eq!(out.diagnostics.len(), 3);
        assert!((out.state.time - 0.3).abs() < 1e-15);
        let times: Vec<usize> = out.snapshots.iter().map(|s| s.step).collect();
        assert_eq!(times, vec![0, 2, 3]);
        assert_eq!(adjusted_steps(1.0, 0.3), 4);
        assert_eq!(adjusted_steps(1.0, 0.1), 10);
    }

    #[test]
    fn observer_can_stop_the_run() {
        let p = quiet_problem();
        let out = run_with(&p, 0.25, 0.1, 1.0, &RunOptions::default(), |s, _| {
            if s.step >= 2 {
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        })
        .unwrap();
        assert!(out.stopped_early);
        assert_eq!(out.state.step, 2);
    }

    #[test]
    fn zero_problem_helpers() {
        // FieldSet::zero and default forcing are inert
        let f = FieldSet::zero();
        assert_eq!(f.velocity.eval(0.3, 0.2, 1.0), [0.0, 0.0]);
        assert!(Forcing::default().velocity.is_none());
    }
}
