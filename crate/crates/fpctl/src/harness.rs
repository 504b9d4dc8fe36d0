//! Benchmark driver: named catalog runs with on-disk artifacts, convergence
//! studies against analytic or fine-grid references, and the oracles the
//! test suite checks the solvers against.

use std::fs;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::backward::solve_backward;
use crate::fields::{
    inner_product_spacetime, integrate, write_csv, ControlTrajectory, ScalarField, Trajectory,
};
use crate::forward::{solve_forward, stationary_state};
use crate::interp::interp_eval;
use crate::mesh::{Grid, TimeGrid};
use crate::model::{
    normalize_initial, BenchmarkKind, DiffusionSpec, GradientForm, ModelSpec, PenaltySpec,
    RunConfig, SchemeSpec,
};
use crate::optimize::{cost, optimize, reduced_gradient};
use crate::{Error, Result};

/// Residual target for steady-state marches; criterion-level, not config.
const STATIONARY_TOL: f64 = 1e-12;

/// Closed-form stationary density of the quartic-diffusion alignment model
/// with unit kernel: `D = sigma^2/2 (1-v^2)^2`, drift `mbar - v`, where
/// `mbar` is the conserved mean. Evaluated in log space (the density decays
/// like exp(-1/(sigma^2(1-v^2))) near the walls, far below f64 range for
/// small sigma) and normalized to unit grid mass.
pub fn stationary_oracle(sigma2: f64, mbar: f64, grid: &Arc<Grid>) -> Result<ScalarField> {
    if grid.dim() != 1 {
        return Err(Error::Config(
            "stationary oracle is defined on 1D grids".into(),
        ));
    }
    if !(sigma2 > 0.0) {
        return Err(Error::Config(format!("sigma2 must be > 0, got {sigma2}")));
    }
    let a = mbar / (2.0 * sigma2);
    let mut logs = Vec::with_capacity(grid.num_cells());
    let mut top = f64::NEG_INFINITY;
    for i in 0..grid.num_cells() {
        let v = grid.center(0, i);
        let l = (-2.0 + a) * (1.0 + v).ln() + (-2.0 - a) * (1.0 - v).ln()
            - (1.0 - mbar * v) / (sigma2 * (1.0 - v * v));
        top = top.max(l);
        logs.push(l);
    }
    let vals: Vec<f64> = logs.into_iter().map(|l| (l - top).exp()).collect();
    let mut f = ScalarField::new(grid.clone(), vals)?;
    let mass = integrate(&f);
    if !(mass > 0.0) {
        return Err(Error::ZeroMass);
    }
    f.scale(1.0 / mass);
    Ok(f)
}

/// Central finite-difference probe of the reduced cost: two full forward
/// solves at `u +- eps * direction`. Independent of the adjoint machinery,
/// which is the point.
pub fn fd_gradient_oracle(
    model: &ModelSpec,
    grid: &Arc<Grid>,
    time: &TimeGrid,
    scheme: &SchemeSpec,
    u: &ControlTrajectory,
    direction: &ControlTrajectory,
    eps: f64,
) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::Config(format!("eps must be > 0, got {eps}")));
    }
    let f0 = normalize_initial(&model.initial, grid)?;
    let probe = |sign: f64| -> Result<f64> {
        let mut up = u.clone();
        up.axpy(sign * eps, direction);
        let fwd = solve_forward(model, time, &f0, &up, scheme.order)?;
        cost(model, &fwd.trajectory, &up)
    };
    Ok((probe(1.0)? - probe(-1.0)?) / (2.0 * eps))
}

/// Random control direction. `mask_walls` zeroes wall cells: their control
/// reaches the dynamics only through a single interior interface at half
/// weight, a parameterization quirk the pointwise gradient formula does not
/// model. `time_constant` repeats one spatial pattern at every node: the
/// discrete forward weights the first and last node's injection slightly
/// differently from the trapezoidal cost pairing (an O(dt^2) defect of
/// opposite signs at the two ends), and a time-constant direction cancels
/// the pair exactly.
pub fn random_direction(
    grid: &Arc<Grid>,
    time: TimeGrid,
    rng: &mut ChaCha8Rng,
    mask_walls: bool,
    time_constant: bool,
) -> ControlTrajectory {
    let mut d = ControlTrajectory::zero(time, grid.clone());
    let nodes = d.entries.len();
    for m in 0..nodes {
        if time_constant && m > 0 {
            let first = d.entries[0].clone();
            d.entries[m] = first;
            continue;
        }
        let entry = &mut d.entries[m];
        for k in 0..grid.dim() {
            let vals = entry.component_mut(k).values_mut();
            for (c, slot) in vals.iter_mut().enumerate() {
                let (i, j) = grid.split(c);
                let at_wall = i == 0
                    || i == grid.count(0) - 1
                    || (grid.dim() == 2 && (j == 0 || j == grid.count(1) - 1));
                if mask_walls && at_wall {
                    continue;
                }
                *slot = rng.gen_range(-1.0..1.0);
            }
        }
    }
    d
}

/// Random smooth control direction: per component, a random cubic in each
/// coordinate, tapered by `prod_d (1 - v_d^2)` and zeroed on wall cells.
/// Gradient verification has to probe directions like these: the backward
/// solver is a consistent discretization of the continuous adjoint rather
/// than the exact transpose of the forward stencil, so cell-wise white
/// noise would measure the schemes' high-wavenumber consistency gap
/// instead of the derivative, and wall cells parameterize the dynamics
/// asymmetrically (one interface at half weight). `time_constant` as in
/// [`random_direction`].
pub fn smooth_direction(
    grid: &Arc<Grid>,
    time: TimeGrid,
    rng: &mut ChaCha8Rng,
    time_constant: bool,
) -> ControlTrajectory {
    let mut d = ControlTrajectory::zero(time, grid.clone());
    let nodes = d.entries.len();
    let dim = grid.dim();
    for m in 0..nodes {
        if time_constant && m > 0 {
            let first = d.entries[0].clone();
            d.entries[m] = first;
            continue;
        }
        let entry = &mut d.entries[m];
        for k in 0..dim {
            let coeffs: Vec<[f64; 4]> = (0..dim)
                .map(|_| {
                    [
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                    ]
                })
                .collect();
            let vals = entry.component_mut(k).values_mut();
            for (c, slot) in vals.iter_mut().enumerate() {
                let (i, j) = grid.split(c);
                let at_wall = i == 0
                    || i == grid.count(0) - 1
                    || (dim == 2 && (j == 0 || j == grid.count(1) - 1));
                if at_wall {
                    continue;
                }
                let p = grid.point(c);
                let mut taper = 1.0;
                let mut poly = 0.0;
                for (axis, co) in coeffs.iter().enumerate() {
                    // map to [-1, 1] so the taper works on any box
                    let lo = grid.domain().lo(axis);
                    let hi = grid.domain().hi(axis);
                    let x = (2.0 * p[axis] - lo - hi) / (hi - lo);
                    taper *= 1.0 - x * x;
                    poly += co[0] + x * (co[1] + x * (co[2] + x * co[3]));
                }
                *slot = taper * poly;
            }
        }
    }
    d
}

/// The frozen configuration the gradient check runs on: no interaction,
/// small constant diffusion, quadratic tracking from a uniform start. The
/// value surface stays exactly quadratic in space, so the discrete adjoint
/// identity is tested without interpolation noise on top.
pub fn gradcheck_instance() -> RunConfig {
    let mut cfg = RunConfig {
        name: "gradcheck".into(),
        domain: vec![[-1.0, 1.0]],
        counts: vec![4],
        dt_rule: crate::model::DtRule::Ratio { value: 1.0 },
        horizon: 1.0,
        kernel: vec![crate::model::KernelSpec::Zero],
        drift: vec![crate::model::DriftSpec::Zero],
        diffusion: vec![DiffusionSpec::Const { c: 1e-4 }],
        cost: crate::model::CostSpec {
            s: vec![PenaltySpec::Const { c: 1.0 }],
            targets: vec![0.0],
            gamma: 1.0,
        },
        control: crate::model::ControlSpec::default(),
        optimizer: crate::model::OptimizerSpec::default(),
        scheme: SchemeSpec::default(),
        initial: crate::model::InitialSpec::Uniform,
        fixed_control: None,
        benchmark: BenchmarkKind::Optimize,
    };
    // the adjoint identity is for the plain L2 pairing, i.e. the
    // density-weighted gradient
    cfg.control.gradient_form = GradientForm::DensityWeighted;
    cfg
}

/// One direction's worth of gradient check.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GradCheckRow {
    pub fd: f64,
    pub adjoint: f64,
    pub rel_err: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GradCheckReport {
    pub eps: f64,
    pub seed: u64,
    pub rows: Vec<GradCheckRow>,
    pub worst_rel: f64,
}

/// Compares the adjoint-based control gradient against central cost
/// differences along `directions` random perturbations at u = 0.
pub fn gradcheck(cfg: &RunConfig, eps: f64, directions: usize, seed: u64) -> Result<GradCheckReport> {
    let model = cfg.model()?;
    let grid = cfg.grid()?;
    let time = cfg.time_grid(&grid)?;
    let base = ControlTrajectory::zero(time, grid.clone());
    let rg = reduced_gradient(&model, &grid, &time, &cfg.scheme, &base)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(directions);
    let mut worst = 0.0f64;
    for _ in 0..directions {
        let dir = smooth_direction(&grid, time, &mut rng, true);
        let fd = fd_gradient_oracle(&model, &grid, &time, &cfg.scheme, &base, &dir, eps)?;
        let adj = inner_product_spacetime(&rg.gradient, &dir)?;
        let rel = (fd - adj).abs() / fd.abs().max(adj.abs()).max(1e-300);
        worst = worst.max(rel);
        rows.push(GradCheckRow {
            fd,
            adjoint: adj,
            rel_err: rel,
        });
    }
    Ok(GradCheckReport {
        eps,
        seed,
        rows,
        worst_rel: worst,
    })
}

/// One resolution of a refinement study. Errors are relative discrete
/// norms against the study's reference; `p` columns are log2 ratios of
/// successive errors and stay empty on the first row.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ConvergenceRow {
    pub n_v: u32,
    pub e2: f64,
    pub p2: Option<f64>,
    pub einf: f64,
    pub pinf: Option<f64>,
    pub cpu_seconds: f64,
}

/// What a convergence study measures errors against.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Reference {
    /// Closed-form stationary density (stationary benchmarks only).
    Analytic,
    /// Same benchmark solved at a finer resolution, restricted to the
    /// coarse cells by cubic interpolation at their centers.
    Fine { n_v: u32 },
}

/// Field a benchmark is judged by, with the solve wall time.
fn solved_field(cfg: &RunConfig) -> Result<(ScalarField, f64)> {
    let model = cfg.model()?;
    let grid = cfg.grid()?;
    let t0 = Instant::now();
    let field = match cfg.benchmark {
        BenchmarkKind::Stationary => {
            let f0 = model.initial_density(&grid)?;
            let dt = cfg.dt_rule.dt(&grid)?;
            let max_steps = (cfg.horizon / dt).ceil() as usize;
            let run = stationary_state(&model, &f0, dt, max_steps, STATIONARY_TOL, cfg.scheme.order)?;
            run.f
        }
        BenchmarkKind::FixedControl => {
            let time = cfg.time_grid(&grid)?;
            let u = fixed_control_trajectory(cfg, &grid, &time)?;
            let f0 = model.initial_density(&grid)?;
            let fwd = solve_forward(&model, &time, &f0, &u, cfg.scheme.order)?;
            let bwd = solve_backward(&model, &time, &fwd.trajectory, &u, &cfg.scheme)?;
            bwd.psi.entries[0].clone()
        }
        BenchmarkKind::Forward => {
            let time = cfg.time_grid(&grid)?;
            let u = ControlTrajectory::zero(time, grid.clone());
            let f0 = model.initial_density(&grid)?;
            let fwd = solve_forward(&model, &time, &f0, &u, cfg.scheme.order)?;
            fwd.trajectory.entries.last().unwrap().clone()
        }
        BenchmarkKind::Optimize => {
            return Err(Error::Config(
                "convergence studies are not defined for optimize benchmarks".into(),
            ))
        }
    };
    Ok((field, t0.elapsed().as_secs_f64()))
}

fn fixed_control_trajectory(
    cfg: &RunConfig,
    grid: &Arc<Grid>,
    time: &TimeGrid,
) -> Result<ControlTrajectory> {
    let spec = cfg
        .fixed_control
        .as_ref()
        .ok_or_else(|| Error::Config("benchmark needs a fixed_control entry".into()))?;
    let entries = (0..time.num_nodes())
        .map(|m| spec.control_at(grid, time.dt * m as f64, cfg.horizon))
        .collect();
    ControlTrajectory::new(*time, entries)
}

/// Restriction of a fine-grid field to a coarse grid: cubic interpolation
/// evaluated at the coarse cell centers.
fn restrict_to(fine: &ScalarField, coarse: &Arc<Grid>) -> Result<ScalarField> {
    let mut vals = Vec::with_capacity(coarse.num_cells());
    for c in 0..coarse.num_cells() {
        vals.push(interp_eval(fine, &coarse.point(c))?);
    }
    ScalarField::new(coarse.clone(), vals)
}

/// Grid mean of the initial density; the interaction drift conserves it
/// for the unit kernel, which is what the analytic reference assumes.
fn initial_mean(cfg: &RunConfig, grid: &Arc<Grid>) -> Result<f64> {
    let f0 = normalize_initial(&cfg.initial, grid)?;
    let dv = grid.cell_volume();
    Ok(f0
        .values()
        .iter()
        .enumerate()
        .map(|(i, f)| grid.center(0, i) * f * dv)
        .sum())
}

/// Runs `cfg` over strictly increasing resolutions and tabulates errors
/// against the requested reference.
pub fn convergence_study(
    cfg: &RunConfig,
    resolutions: &[u32],
    reference: &Reference,
) -> Result<Vec<ConvergenceRow>> {
    if resolutions.is_empty() {
        return Err(Error::Config("empty resolution list".into()));
    }
    if resolutions.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config(
            "resolutions must be strictly increasing".into(),
        ));
    }
    let fine = match reference {
        Reference::Analytic => None,
        Reference::Fine { n_v } => {
            if *n_v <= resolutions.last().unwrap() + 1 {
                return Err(Error::Config(format!(
                    "fine reference exponent {n_v} must exceed the largest test resolution by at least 2"
                )));
            }
            let mut fine_cfg = cfg.clone();
            fine_cfg.counts = vec![*n_v; cfg.domain.len()];
            let (field, _) = solved_field(&fine_cfg)?;
            Some(field)
        }
    };
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(resolutions.len());
    for &nv in resolutions {
        let mut row_cfg = cfg.clone();
        row_cfg.counts = vec![nv; cfg.domain.len()];
        let grid = row_cfg.grid()?;
        let (field, cpu) = solved_field(&row_cfg)?;
        let reference_field = match (&fine, reference) {
            (Some(f), _) => restrict_to(f, &grid)?,
            (None, Reference::Analytic) => {
                let sigma2 = match row_cfg.diffusion.first() {
                    Some(DiffusionSpec::Quartic { c }) => 2.0 * c,
                    other => {
                        return Err(Error::Config(format!(
                            "analytic reference needs quartic diffusion, got {other:?}"
                        )))
                    }
                };
                stationary_oracle(sigma2, initial_mean(&row_cfg, &grid)?, &grid)?
            }
            (None, Reference::Fine { .. }) => unreachable!(),
        };
        let (e2, einf) = crate::fields::error_metrics(&field, &reference_field)?;
        let (p2, pinf) = match rows.last() {
            Some(prev) => ((prev.e2 / e2).log2().into(), (prev.einf / einf).log2().into()),
            None => (None, None),
        };
        rows.push(ConvergenceRow {
            n_v: nv,
            e2,
            p2,
            einf,
            pinf,
            cpu_seconds: cpu,
        });
    }
    Ok(rows)
}

/// `N_v,E2,p2,Einf,pinf,cpu_seconds` with empty order cells on the first row.
pub fn write_convergence_csv<W: std::io::Write>(
    rows: &[ConvergenceRow],
    w: &mut W,
) -> Result<()> {
    writeln!(w, "N_v,E2,p2,Einf,pinf,cpu_seconds")?;
    for r in rows {
        let p2 = r.p2.map(|p| format!("{p:.4}")).unwrap_or_default();
        let pinf = r.pinf.map(|p| format!("{p:.4}")).unwrap_or_default();
        writeln!(
            w,
            "{},{:.6e},{},{:.6e},{},{:.3}",
            r.n_v, r.e2, p2, r.einf, pinf, r.cpu_seconds
        )?;
    }
    Ok(())
}

/// Flat summary written next to every run's artifacts.
#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub name: String,
    pub benchmark: String,
    /// Final cost; absent for runs without one.
    pub j_star: Option<f64>,
    pub iterations: Option<usize>,
    pub stop_reason: Option<String>,
    /// Most negative density value seen anywhere in the run.
    pub f_min: f64,
    /// Largest deviation of the grid mass from one.
    pub e_int: f64,
    /// Largest backward advection speed (control runs).
    pub kappa: Option<f64>,
    pub wall_seconds: f64,
}

/// Everything a benchmark run produces, before any I/O.
pub struct RunOutcome {
    pub summary: RunSummary,
    pub density: Trajectory,
    pub control: Option<ControlTrajectory>,
    pub cost_history: Vec<f64>,
    pub step_sizes: Vec<f64>,
    pub grad_norms: Vec<f64>,
}

impl RunOutcome {
    /// Structure-preservation gate: positivity to round-off and exact
    /// mass transport are what the forward scheme promises.
    pub fn check_invariants(&self) -> Result<()> {
        if self.summary.f_min < -1e-14 {
            return Err(Error::Config(format!(
                "density positivity violated: f_min = {:.3e}",
                self.summary.f_min
            )));
        }
        if self.summary.e_int > 1e-12 {
            return Err(Error::Config(format!(
                "mass conservation violated: E_int = {:.3e}",
                self.summary.e_int
            )));
        }
        Ok(())
    }
}

/// Executes a configuration once and collects its judged quantities.
/// Stationary runs march to the steady state; fixed-control runs sweep
/// forward then backward; optimize runs do the full descent.
pub fn run_benchmark(cfg: &RunConfig) -> Result<RunOutcome> {
    let model = cfg.model()?;
    let grid = cfg.grid()?;
    let t0 = Instant::now();
    match cfg.benchmark {
        BenchmarkKind::Optimize => {
            let time = cfg.time_grid(&grid)?;
            let res = optimize(&model, &grid, &time, &cfg.scheme, &cfg.optimizer)?;
            Ok(RunOutcome {
                summary: RunSummary {
                    name: cfg.name.clone(),
                    benchmark: "optimize".into(),
                    j_star: res.cost_history.last().copied(),
                    iterations: Some(res.iterations),
                    stop_reason: Some(res.stop_reason.as_str().into()),
                    f_min: res.f_min,
                    e_int: res.mass_err,
                    kappa: Some(res.kappa),
                    wall_seconds: res.wall_seconds,
                },
                density: res.density,
                control: Some(res.control),
                cost_history: res.cost_history,
                step_sizes: res.step_sizes,
                grad_norms: res.grad_norms,
            })
        }
        BenchmarkKind::FixedControl => {
            let time = cfg.time_grid(&grid)?;
            let u = fixed_control_trajectory(cfg, &grid, &time)?;
            let f0 = model.initial_density(&grid)?;
            let fwd = solve_forward(&model, &time, &f0, &u, cfg.scheme.order)?;
            let bwd = solve_backward(&model, &time, &fwd.trajectory, &u, &cfg.scheme)?;
            let j = cost(&model, &fwd.trajectory, &u)?;
            Ok(RunOutcome {
                summary: RunSummary {
                    name: cfg.name.clone(),
                    benchmark: "fixed-control".into(),
                    j_star: Some(j),
                    iterations: None,
                    stop_reason: None,
                    f_min: fwd.f_min,
                    e_int: fwd.mass_err,
                    kappa: Some(bwd.kappa),
                    wall_seconds: t0.elapsed().as_secs_f64(),
                },
                density: fwd.trajectory,
                control: Some(u),
                cost_history: vec![j],
                step_sizes: Vec::new(),
                grad_norms: Vec::new(),
            })
        }
        BenchmarkKind::Forward => {
            let time = cfg.time_grid(&grid)?;
            let u = ControlTrajectory::zero(time, grid.clone());
            let f0 = model.initial_density(&grid)?;
            let fwd = solve_forward(&model, &time, &f0, &u, cfg.scheme.order)?;
            Ok(RunOutcome {
                summary: RunSummary {
                    name: cfg.name.clone(),
                    benchmark: "forward".into(),
                    j_star: None,
                    iterations: None,
                    stop_reason: None,
                    f_min: fwd.f_min,
                    e_int: fwd.mass_err,
                    kappa: None,
                    wall_seconds: t0.elapsed().as_secs_f64(),
                },
                density: fwd.trajectory,
                control: None,
                cost_history: Vec::new(),
                step_sizes: Vec::new(),
                grad_norms: Vec::new(),
            })
        }
        BenchmarkKind::Stationary => {
            let f0 = model.initial_density(&grid)?;
            let dt = cfg.dt_rule.dt(&grid)?;
            let max_steps = (cfg.horizon / dt).ceil() as usize;
            let run = stationary_state(&model, &f0, dt, max_steps, STATIONARY_TOL, cfg.scheme.order)?;
            let mass_err = (integrate(&run.f) - 1.0).abs();
            let time = TimeGrid::new(dt * run.steps as f64, dt)?;
            let density = Trajectory::constant(time, run.f.clone());
            Ok(RunOutcome {
                summary: RunSummary {
                    name: cfg.name.clone(),
                    benchmark: "stationary".into(),
                    j_star: None,
                    iterations: Some(run.steps),
                    stop_reason: Some(if run.residual <= STATIONARY_TOL {
                        "residual-stalled".into()
                    } else {
                        "step-limit".into()
                    }),
                    f_min: run.f.min(),
                    e_int: mass_err,
                    kappa: None,
                    wall_seconds: t0.elapsed().as_secs_f64(),
                },
                density,
                control: None,
                cost_history: Vec::new(),
                step_sizes: Vec::new(),
                grad_norms: Vec::new(),
            })
        }
    }
}

/// Writes `summary.json`, `iteration_log.csv`, the final density, and
/// density/control snapshots at the requested times (nearest node).
pub fn emit_artifacts(outcome: &RunOutcome, out_dir: &Path, snapshots: &[f64]) -> Result<()> {
    fs::create_dir_all(out_dir)?;
    let summary = serde_json::to_string_pretty(&outcome.summary)?;
    fs::write(out_dir.join("summary.json"), summary + "\n")?;

    let mut log = String::from("iter,J,lambda,grad_norm\n");
    for (i, j) in outcome.cost_history.iter().enumerate() {
        let lambda = if i >= 1 && i - 1 < outcome.step_sizes.len() {
            format!("{:.10e}", outcome.step_sizes[i - 1])
        } else {
            String::new()
        };
        let grad = if i >= 1 && i - 1 < outcome.grad_norms.len() {
            format!("{:.10e}", outcome.grad_norms[i - 1])
        } else {
            String::new()
        };
        log.push_str(&format!("{i},{j:.10e},{lambda},{grad}\n"));
    }
    fs::write(out_dir.join("iteration_log.csv"), log)?;

    let final_density = outcome.density.entries.last().unwrap();
    let mut w = fs::File::create(out_dir.join("density_final.csv"))?;
    write_csv(final_density, &mut w)?;

    for &t in snapshots {
        let time = outcome.density.time;
        let node = ((t / time.dt).round() as usize).min(time.steps);
        let tag = format!("{t:.3}").replace('.', "p");
        let mut w = fs::File::create(out_dir.join(format!("density_t{tag}.csv")))?;
        write_csv(&outcome.density.entries[node], &mut w)?;
        if let Some(u) = &outcome.control {
            for k in 0..u.entries[node].dim() {
                let mut w =
                    fs::File::create(out_dir.join(format!("control_t{tag}_axis{k}.csv")))?;
                write_csv(u.entries[node].component(k), &mut w)?;
            }
        }
    }
    Ok(())
}

/// Applies command-line `key=value` overrides. Keys are dotted config
/// paths handed to [`crate::model::apply_override`]; a few shorthands
/// cover what the published tables vary: `nv` (counts, broadcast),
/// `order`, `lambda0`, `max-iter`, `tol`, `cbar`, and
/// `penalty=influencers|non-influencers` for the logistic tracking weight.
pub fn apply_overrides(cfg: &mut RunConfig, pairs: &[(String, String)]) -> Result<()> {
    let mut tree = serde_json::to_value(&*cfg)?;
    for (key, value) in pairs {
        let (path, val): (&str, &str) = match (key.as_str(), value.as_str()) {
            ("nv", v) => ("counts", v),
            ("order", v) => ("scheme.order", v),
            ("lambda0", v) => ("optimizer.lambda0", v),
            ("max-iter", v) => ("optimizer.max_iter", v),
            ("tol", v) => ("optimizer.tol", v),
            ("cbar", v) => ("scheme.reflection_cbar", v),
            ("penalty", "influencers") => ("cost.s.0.direction", "above"),
            ("penalty", "non-influencers") => ("cost.s.0.direction", "below"),
            ("penalty", other) => {
                return Err(Error::Config(format!(
                    "penalty override expects influencers or non-influencers, got '{other}'"
                )))
            }
            (k, v) => (k, v),
        };
        crate::model::apply_override(&mut tree, path, val)?;
    }
    *cfg = serde_json::from_value(tree)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::error_metrics;
    use crate::mesh::{build_grid, Domain};
    use crate::model::{catalog, LogisticSide};

    fn line_grid(cells: usize) -> Arc<Grid> {
        Arc::new(build_grid(&Domain::line(-1.0, 1.0).unwrap(), &[cells]).unwrap())
    }

    #[test]
    fn oracle_is_even_for_centered_mean() {
        let grid = line_grid(64);
        let f = stationary_oracle(2e-2, 0.0, &grid).unwrap();
        let v = f.values();
        for i in 0..32 {
            assert!(
                (v[i] - v[63 - i]).abs() <= 1e-12 * v[i].abs().max(1e-300),
                "cell {i}"
            );
        }
    }

    #[test]
    fn oracle_has_unit_mass() {
        let grid = line_grid(100);
        let f = stationary_oracle(2e-2, 0.1, &grid).unwrap();
        assert!((integrate(&f) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn oracle_rejects_bad_inputs() {
        let grid = line_grid(16);
        assert!(stationary_oracle(0.0, 0.0, &grid).is_err());
        let d = Domain::rectangle(-1.0, 1.0, -1.0, 1.0).unwrap();
        let g2 = Arc::new(build_grid(&d, &[8, 8]).unwrap());
        assert!(stationary_oracle(2e-2, 0.0, &g2).is_err());
    }

    #[test]
    fn fd_oracle_zero_direction_is_zero() {
        let cfg = gradcheck_instance();
        let model = cfg.model().unwrap();
        let grid = cfg.grid().unwrap();
        let time = cfg.time_grid(&grid).unwrap();
        let u = ControlTrajectory::zero(time, grid.clone());
        let zero = ControlTrajectory::zero(time, grid.clone());
        let d = fd_gradient_oracle(&model, &grid, &time, &cfg.scheme, &u, &zero, 1e-5).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn gradcheck_instance_is_tight() {
        let report = gradcheck(&gradcheck_instance(), 1e-5, 3, 11).unwrap();
        assert_eq!(report.rows.len(), 3);
        assert!(report.worst_rel < 1e-3, "worst rel {}", report.worst_rel);
    }

    #[test]
    fn restriction_reproduces_cubics() {
        let fine = line_grid(64);
        let coarse = line_grid(16);
        let f = ScalarField::from_fn(fine, |p| {
            let v = p[0];
            0.3 + v * (1.2 + v * (-0.7 + 0.4 * v))
        });
        let r = restrict_to(&f, &coarse).unwrap();
        for c in 0..coarse.num_cells() {
            let v = coarse.center(0, c);
            let want = 0.3 + v * (1.2 + v * (-0.7 + 0.4 * v));
            assert!((r.values()[c] - want).abs() < 1e-12, "cell {c}");
        }
    }

    #[test]
    fn study_against_self_is_exact() {
        let mut cfg = catalog("stationary-1d").unwrap();
        cfg.horizon = 1.0; // a short march is enough for an identity check
        cfg.counts = vec![5];
        let (field, _) = solved_field(&cfg).unwrap();
        let (e2, einf) = error_metrics(&field, &field).unwrap();
        assert_eq!((e2, einf), (0.0, 0.0));
    }

    #[test]
    fn study_rejects_bad_resolution_lists() {
        let cfg = catalog("stationary-1d").unwrap();
        assert!(convergence_study(&cfg, &[], &Reference::Analytic).is_err());
        assert!(convergence_study(&cfg, &[5, 5], &Reference::Analytic).is_err());
        assert!(convergence_study(&cfg, &[5, 6], &Reference::Fine { n_v: 7 }).is_err());
    }

    #[test]
    fn overrides_apply_and_reject() {
        let pair = |k: &str, v: &str| vec![(k.to_string(), v.to_string())];
        let mut cfg = catalog("order-compare-1d").unwrap();
        apply_overrides(
            &mut cfg,
            &[
                ("nv".into(), "5".into()),
                ("order".into(), "1".into()),
                ("lambda0".into(), "0.2".into()),
            ],
        )
        .unwrap();
        assert_eq!(cfg.counts, vec![5]);
        assert_eq!(cfg.scheme.order, 1);
        assert_eq!(cfg.optimizer.lambda0, 0.2);
        assert!(apply_overrides(&mut cfg, &pair("penalty", "influencers")).is_err());
        assert!(apply_overrides(&mut cfg, &pair("does-not-exist", "1")).is_err());

        let mut contacts = catalog("opinion-contacts-2d").unwrap();
        apply_overrides(&mut contacts, &pair("penalty", "influencers")).unwrap();
        match &contacts.cost.s[0] {
            PenaltySpec::Logistic { direction, .. } => {
                assert_eq!(*direction, LogisticSide::Above)
            }
            other => panic!("unexpected penalty {other:?}"),
        }
        // dotted paths reach nested fields directly
        apply_overrides(&mut contacts, &pair("cost.gamma", "0.2")).unwrap();
        assert_eq!(contacts.cost.gamma, 0.2);
    }

    #[test]
    fn artifacts_land_on_disk() {
        let mut cfg = gradcheck_instance();
        cfg.optimizer.max_iter = 3;
        let outcome = run_benchmark(&cfg).unwrap();
        outcome.check_invariants().unwrap();
        let dir = tempfile::tempdir().unwrap();
        emit_artifacts(&outcome, dir.path(), &[0.5]).unwrap();
        for name in [
            "summary.json",
            "iteration_log.csv",
            "density_final.csv",
            "density_t0p500.csv",
            "control_t0p500_axis0.csv",
        ] {
            assert!(dir.path().join(name).is_file(), "{name} missing");
        }
        let summary = fs::read_to_string(dir.path().join("summary.json")).unwrap();
        assert!(summary.contains("\"j_star\""));
        assert!(summary.contains("\"e_int\""));
    }
}
