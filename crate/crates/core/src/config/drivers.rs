use std::ops::ControlFlow;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::{Experiment, LidCorners, RunConfig};
use crate::fem::{shape_eval_into, FeFunction};
use crate::mesh::BoundaryTag;
use crate::postproc::{
    export_energy_csv, export_vtk, field_errors, l2_norm, rates, steady_state_residual,
    write_convergence_csv, ConvergenceRow, VtkField,
};
use crate::problems::{cavity_2d, manufactured_2d, stirring_2d, ProblemSpec};
use crate::scheme::{run_with, EnergyEntry, RunOptions, RunOutput, Snapshot};

/// Environment variable holding the number of resolutions run concurrently.
pub const WORKERS_ENV: &str = "MRBC_WORKERS";

pub fn worker_count() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
}

#[derive(Debug, Clone)]
pub struct ResolutionSummary {
    pub one_over_h: usize,
    pub dt: f64,
    pub steps: usize,
    pub max_divergence_defect: f64,
    pub max_solver_residual: f64,
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    pub runs: Vec<ResolutionSummary>,
    pub csv: PathBuf,
}

#[derive(Debug, Clone)]
pub struct CavityReport {
    pub one_over_h: usize,
    pub dt: f64,
    pub steps: usize,
    pub final_time: f64,
    pub rayleigh: f64,
    /// First time the steady-state residual fell below the tolerance.
    pub steady_time: Option<f64>,
    pub final_residual: f64,
    pub lid_adjacent_max_speed: f64,
    pub lid_layer_interior_speed: f64,
    pub max_divergence_defect: f64,
    pub energy: Vec<EnergyEntry>,
    pub output: PathBuf,
}

#[derive(Debug, Clone)]
pub struct StirReport {
    pub one_over_h: usize,
    pub dt: f64,
    pub steps: usize,
    /// Extremes of the scalar coefficients over every step.
    pub phi_min: f64,
    pub phi_max: f64,
    /// Largest L2 norm of any field over every step.
    pub max_field_norm: f64,
    pub max_divergence_defect: f64,
    pub snapshots: Vec<PathBuf>,
}

#[derive(Debug, Clone)]
pub enum Report {
    Convergence(ConvergenceReport),
    Cavity(CavityReport),
    Stir(StirReport),
}

impl Report {
    pub fn summary(&self) -> String {
        match self {
            Report::Convergence(r) => {
                let mut s = format!("convergence table written to {}\n", r.csv.display());
                s.push_str("  1/h    err_u_l2     err_u_h1     err_p_l2     err_w_l2     err_w_h1     err_t_l2     err_t_h1\n");
                for row in &r.rows {
                    let e = row.errors;
                    s.push_str(&format!(
                        "  {:<4} {:.4e}  {:.4e}  {:.4e}  {:.4e}  {:.4e}  {:.4e}  {:.4e}\n",
                        row.one_over_h, e.u_l2, e.u_h1, e.p_l2, e.w_l2, e.w_h1, e.t_l2, e.t_h1
                    ));
                }
                for row in r.rows.iter().skip(1) {
                    let q = row.rates.expect("rates from the second row");
                    s.push_str(&format!(
                        "  rate {:<4} {:.4}  {:.4}  {:.4}  {:.4}  {:.4}  {:.4}  {:.4}\n",
                        row.one_over_h, q.u_l2, q.u_h1, q.p_l2, q.w_l2, q.w_h1, q.t_l2, q.t_h1
                    ));
                }
                s
            }
            Report::Cavity(r) => format!(
                "cavity 1/h = {}, dt = {}, Ra = {}: {} steps to t = {:.4}, steady residual {:.3e}{}, lid-adjacent max speed {:.4} (interior layer {:.4})\n",
                r.one_over_h,
                r.dt,
                r.rayleigh,
                r.steps,
                r.final_time,
                r.final_residual,
                r.steady_time.map(|t| format!(" (steady at t = {t:.4})")).unwrap_or_default(),
                r.lid_adjacent_max_speed,
                r.lid_layer_interior_speed
            ),
            Report::Stir(r) => format!(
                "stir 1/h = {}, dt = {}: {} steps, phi in [{}, {}], max field norm {:.4e}, {} snapshots\n",
                r.one_over_h,
                r.dt,
                r.steps,
                r.phi_min,
                r.phi_max,
                r.max_field_norm,
                r.snapshots.len()
            ),
        }
    }
}

pub fn run_config(cfg: &RunConfig) -> crate::Result<Report> {
    Ok(match cfg.experiment {
        Experiment::Convergence => Report::Convergence(run_convergence(cfg)?),
        Experiment::Cavity => Report::Cavity(run_cavity(cfg)?),
        Experiment::Stir => Report::Stir(run_stir(cfg)?),
    })
}

fn options(cfg: &RunConfig) -> RunOptions {
    RunOptions {
        snapshot_times: cfg.snapshot_times.clone(),
        solvers: cfg.solvers,
    }
}

fn max_residual(out: &RunOutput) -> f64 {
    out.diagnostics
        .iter()
        .flat_map(|d| {
            [d.predict, d.pressure, d.correct, d.angular, d.temperature].map(|s| s.residual)
        })
        .fold(0.0, f64::max)
}

fn max_defect(out: &RunOutput) -> f64 {
    out.diagnostics
        .iter()
        .map(|d| d.divergence_defect)
        .fold(0.0, f64::max)
}

/// Manufactured runs on every resolution, concurrently, then the rate table.
pub fn run_convergence(cfg: &RunConfig) -> crate::Result<ConvergenceReport> {
    let problem = manufactured_2d(cfg.params);
    let exact = problem
        .exact
        .clone()
        .expect("manufactured problem has an exact solution");
    let opts = options(cfg);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count().min(cfg.resolutions.len()))
        .build()
        .expect("thread pool");
    let results: Vec<crate::Result<(ConvergenceRow, ResolutionSummary)>> = pool.install(|| {
        cfg.resolutions
            .par_iter()
            .map(|&n| {
                let h = 1.0 / n as f64;
                let out = crate::scheme::run(&problem, h, cfg.dt_rule.dt(h), cfg.t_final, &opts)?;
                let errors = field_errors(&out.state, &exact)?;
                Ok((
                    ConvergenceRow::new(n as f64, errors),
                    ResolutionSummary {
                        one_over_h: n,
                        dt: out.state.dt,
                        steps: out.state.step,
                        max_divergence_defect: max_defect(&out),
                        max_solver_residual: max_residual(&out),
                    },
                ))
            })
            .collect()
    });
    let mut rows = Vec::new();
    let mut runs = Vec::new();
    for r in results {
        let (row, run) = r?;
        rows.push(row);
        runs.push(run);
    }
    let rows = rates(&rows)?;
    let csv = cfg.output.join("convergence.csv");
    write_convergence_csv(&rows, &csv)?;
    Ok(ConvergenceReport { rows, runs, csv })
}

/// Largest speed of `u` over the closed cells that touch the top boundary,
/// sampled on a barycentric lattice of order 8 in each cell.
pub fn lid_adjacent_max_speed(u: &FeFunction) -> f64 {
    const ORDER: usize = 8;
    let s = u.space();
    let mesh = s.mesh();
    let top = mesh.bounds().ymax;
    let tol = 1e-9 * mesh.bounds().height();
    let ns = s.scalar_dof_count();
    let nloc = s.local_dofs();
    let mut vals = vec![0.0; nloc];
    let mut grads = vec![[0.0; 2]; nloc];
    let mut best = 0.0f64;
    for (e, tri) in mesh.triangles().iter().enumerate() {
        if tri
            .iter()
            .filter(|&&v| (mesh.nodes()[v][1] - top).abs() < tol)
            .count()
            < 2
        {
            continue;
        }
        let dofs = s.element_dofs(e);
        for i in 0..=ORDER {
            for j in 0..=ORDER - i {
                let l = [
                    i as f64 / ORDER as f64,
                    j as f64 / ORDER as f64,
                    (ORDER - i - j) as f64 / ORDER as f64,
                ];
                shape_eval_into(s.kind(), l, &mut vals, &mut grads);
                let (mut a, mut b) = (0.0, 0.0);
                for (k, &d) in dofs.iter().enumerate() {
                    a += vals[k] * u.coeffs()[d];
                    b += vals[k] * u.coeffs()[ns + d];
                }
                best = best.max((a * a + b * b).sqrt());
            }
        }
    }
    best
}

/// Largest speed among velocity dofs of the top cell layer that are not on
/// the lid, i.e. the discrete values one node away from the moving wall.
pub fn lid_layer_interior_speed(u: &FeFunction) -> f64 {
    let s = u.space();
    let mesh = s.mesh();
    let top = mesh.bounds().ymax;
    let h = mesh.bounds().height() / mesh.subdivisions().1 as f64;
    let ns = s.scalar_dof_count();
    let lid: std::collections::HashSet<usize> =
        s.boundary_dofs(BoundaryTag::Top).iter().copied().collect();
    let mut best = 0.0f64;
    for (d, x) in s.dof_coords().iter().enumerate() {
        if lid.contains(&d) || x[1] < top - h * (1.0 + 1e-9) {
            continue;
        }
        let (a, b) = (u.coeffs()[d], u.coeffs()[ns + d]);
        best = best.max((a * a + b * b).sqrt());
    }
    best
}

fn snapshot_fields(s: &Snapshot) -> Vec<VtkField> {
    let mut f = vec![
        VtkField::from_function("velocity", &s.u),
        VtkField::from_function("pressure", &s.p),
        VtkField::from_function("microrotation", &s.omega),
        VtkField::from_function("temperature", &s.theta),
    ];
    if let Some(phi) = &s.phi {
        f.push(VtkField::from_function("phi", phi));
    }
    f
}

fn write_snapshots(out: &RunOutput, dir: &Path, stem: &str) -> crate::Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for s in &out.snapshots {
        let p = dir.join(format!("{stem}_{:06}.vtk", s.step));
        export_vtk(out.disc.mesh(), &snapshot_fields(s), &p)?;
        paths.push(p);
    }
    Ok(paths)
}

pub fn cavity_problem(cfg: &RunConfig) -> ProblemSpec {
    let p = cfg.params;
    let mut problem = cavity_2d(p.chi, p.mu, p.kappa, p.upsilon);
    problem.params = p;
    if cfg.lid_corners == LidCorners::Wall {
        problem.bc.velocity = problem
            .bc
            .velocity
            .with_precedence(crate::scheme::FieldBc::DEFAULT_PRECEDENCE);
    }
    problem
}

/// Lid-driven cavity, stopping early once steady when a tolerance is set.
pub fn run_cavity(cfg: &RunConfig) -> crate::Result<CavityReport> {
    let problem = cavity_problem(cfg);
    let n = cfg.resolutions[0];
    let h = 1.0 / n as f64;
    let tol = cfg.steady_tolerance;
    let mut steady_time = None;
    let mut residual = 0.0;
    let out = run_with(
        &problem,
        h,
        cfg.dt_rule.dt(h),
        cfg.t_final,
        &options(cfg),
        |state, _| {
            residual = steady_state_residual(state);
            match tol {
                Some(t) if residual < t && state.step > 1 => {
                    steady_time = Some(state.time);
                    ControlFlow::Break(())
                }
                _ => ControlFlow::Continue(()),
            }
        },
    )?;
    let energy = out.energy();
    export_energy_csv(&energy, &cfg.output.join("energy.csv"))?;
    write_snapshots(&out, &cfg.output, "cavity")?;
    let last = Snapshot {
        step: out.state.step,
        time: out.state.time,
        u: out.state.u.clone(),
        p: out.state.p.clone(),
        omega: out.state.omega.clone(),
        theta: out.state.theta.clone(),
        phi: None,
    };
    export_vtk(
        out.disc.mesh(),
        &snapshot_fields(&last),
        &cfg.output.join("cavity_final.vtk"),
    )?;
    Ok(CavityReport {
        one_over_h: n,
        dt: out.state.dt,
        steps: out.state.step,
        final_time: out.state.time,
        rayleigh: problem.rayleigh(),
        steady_time,
        final_residual: residual,
        lid_adjacent_max_speed: lid_adjacent_max_speed(&out.state.u),
        lid_layer_interior_speed: lid_layer_interior_speed(&out.state.u),
        max_divergence_defect: max_defect(&out),
        energy,
        output: cfg.output.clone(),
    })
}

pub fn stir_problem(cfg: &RunConfig) -> ProblemSpec {
    let h = 1.0 / cfg.resolutions[0] as f64;
    let mut problem = stirring_2d(h);
    problem.params = cfg.params;
    problem
}

/// Torque-driven stirring of the passive scalar.
pub fn run_stir(cfg: &RunConfig) -> crate::Result<StirReport> {
    let problem = stir_problem(cfg);
    let n = cfg.resolutions[0];
    let h = 1.0 / n as f64;
    let (mut lo, mut hi, mut norm) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
    let zeta = problem.params.zeta;
    let out = run_with(
        &problem,
        h,
        cfg.dt_rule.dt(h),
        cfg.t_final,
        &options(cfg),
        |state, diag| {
            if let Some(ps) = &state.passive {
                for &v in ps.phi.coeffs() {
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
                norm = norm.max(l2_norm(&ps.phi));
            }
            let e = diag.energy;
            norm = norm
                .max(e.velocity.sqrt())
                .max((e.angular / zeta).sqrt())
                .max(e.temperature.sqrt());
            norm = norm.max(l2_norm(&state.p));
            if !norm.is_finite() {
                norm = f64::INFINITY;
            }
            ControlFlow::Continue(())
        },
    )?;
    export_energy_csv(&out.energy(), &cfg.output.join("energy.csv"))?;
    let snapshots = write_snapshots(&out, &cfg.output, "stir")?;
    Ok(StirReport {
        one_over_h: n,
        dt: out.state.dt,
        steps: out.state.step,
        phi_min: lo,
        phi_max: hi,
        max_field_norm: norm,
        max_divergence_defect: max_defect(&out),
        snapshots,
    })
}
