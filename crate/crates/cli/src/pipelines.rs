//! The seven experiment pipelines. Each writes its artifacts into the output
//! directory and returns their paths.

use std::fmt::Write as _;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use nllc::analysis::{decay_lemma_check, decay_profile, holder_seminorm, DecayConfig};
use nllc::field::{
    energy_csv_row, energy_primal, vacuum_point, write_field, BoundaryData, BoundaryPreset, Domain, LocalEnergy, OrderField,
    Problem, ENERGY_CSV_HEADER,
};
use nllc::kernel::{
    annulus_second_moment_check, check_assumptions, elastic_tensor, ellipticity_bounds, ElasticTensor,
    QuadratureConfig,
};
use nllc::limit::{
    gamma_liminf_check, gamma_limsup_check, harmonic_multi_start, singular_set, transfer, HarmonicConfig, HarmonicResult,
    ManifoldField,
};
use nllc::potential::{compute_c0_and_nn, hessian_diagnostics, BulkConfig, BulkPotential};
use nllc::solver::{el_fixed_point, gradient_descent, multi_start, SolveResult};

use crate::config::{ConfigError, ExperimentConfig};
use crate::presets;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pipeline {
    KernelReport,
    PotentialReport,
    Minimize,
    EpsSweep,
    LimitSolve,
    GammaCheck,
    HolderProbe,
}

impl Pipeline {
    pub fn name(self) -> &'static str {
        match self {
            Pipeline::KernelReport => "kernel-report",
            Pipeline::PotentialReport => "potential-report",
            Pipeline::Minimize => "minimize",
            Pipeline::EpsSweep => "eps-sweep",
            Pipeline::LimitSolve => "limit-solve",
            Pipeline::GammaCheck => "gamma-check",
            Pipeline::HolderProbe => "holder-probe",
        }
    }
}

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Numerical(nllc::Error),
}

impl RunError {
    /// Process exit status: 2 for configuration problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numerical(_) => 3,
        }
    }

    /// Machine-readable error tag.
    pub fn tag(&self) -> &'static str {
        match self {
            RunError::Config(_) => "config",
            RunError::Numerical(e) => e.tag(),
        }
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(e) => e.fmt(f),
            RunError::Numerical(e) => e.fmt(f),
        }
    }
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl From<nllc::Error> for RunError {
    fn from(e: nllc::Error) -> Self {
        RunError::Numerical(e)
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Numerical(nllc::Error::Io(e.to_string()))
    }
}

type Out = Result<Vec<PathBuf>, RunError>;

pub fn run(cfg: &ExperimentConfig, pipeline: Pipeline) -> Out {
    cfg.validate()?;
    if !matches!(pipeline, Pipeline::KernelReport | Pipeline::PotentialReport) {
        presets::check_resolution(cfg)?;
    }
    fs::create_dir_all(&cfg.output)?;
    match pipeline {
        Pipeline::KernelReport => kernel_report(cfg),
        Pipeline::PotentialReport => potential_report(cfg),
        Pipeline::Minimize => minimize(cfg),
        Pipeline::EpsSweep => eps_sweep(cfg),
        Pipeline::LimitSolve => limit_solve(cfg),
        Pipeline::GammaCheck => gamma_check(cfg),
        Pipeline::HolderProbe => holder_probe(cfg),
    }
}

fn write(dir: &Path, name: &str, body: &str, out: &mut Vec<PathBuf>) -> std::io::Result<()> {
    let p = dir.join(name);
    fs::write(&p, body)?;
    out.push(p);
    Ok(())
}

fn dump(dir: &Path, name: &str, u: &OrderField<f64>, out: &mut Vec<PathBuf>) -> Result<(), RunError> {
    let p = dir.join(name);
    let mut w = BufWriter::new(fs::File::create(&p)?);
    write_field(&mut w, u)?;
    out.push(p);
    Ok(())
}

/// `ε` formatted for file names.
fn tag(eps: f64) -> String {
    format!("{eps}").replace('.', "p")
}

fn kernel_report(cfg: &ExperimentConfig) -> Out {
    let spec = presets::kernel(cfg)?;
    let rep = check_assumptions(&spec, &QuadratureConfig::default())?;
    let l = elastic_tensor(&spec)?;
    let (lmin, lmax) = l.eigen_range();
    let mut s = String::new();
    let m = &rep.moments;
    writeln!(s, "preset = {}", cfg.kernel.preset).unwrap();
    writeln!(s, "m = {}", spec.m).unwrap();
    writeln!(s, "int_g = {:e}", m.int_g).unwrap();
    writeln!(s, "int_k_00 = {:e}", m.int_k[0]).unwrap();
    writeln!(s, "m2 = {:e}", m.m2).unwrap();
    writeln!(s, "m3grad = {:e}", m.m3grad).unwrap();
    writeln!(s, "q = {:e}", m.q).unwrap();
    writeln!(s, "mq = {:e}", m.mq).unwrap();
    writeln!(s, "refinement_change = {:e}", m.refinement_change).unwrap();
    writeln!(s, "k1_sobolev = {}", rep.k1_sobolev).unwrap();
    writeln!(s, "k1_bv = {}", rep.k1_bv).unwrap();
    writeln!(s, "k2_even = {}", rep.k2_even).unwrap();
    writeln!(s, "k3_nonnegative = {}", rep.k3_nonnegative).unwrap();
    writeln!(s, "k4_second_moment = {}", rep.k4_second_moment).unwrap();
    writeln!(s, "k5_constant = {:e}", rep.k5_constant).unwrap();
    writeln!(s, "k6_gradient_moment = {}", rep.k6_gradient_moment).unwrap();
    writeln!(s, "layer_feasible = {}", rep.layer_feasible).unwrap();
    writeln!(s, "passes = {}", rep.passes()).unwrap();
    writeln!(s, "failures = {}", rep.failures().join(",")).unwrap();
    if let Some(a) = &rep.annulus {
        writeln!(s, "annulus_r1 = {:e}\nannulus_r2 = {:e}\nannulus_k = {:e}", a.r1, a.r2, a.k).unwrap();
    } else {
        writeln!(s, "annulus = none").unwrap();
    }
    writeln!(s, "elastic_lambda_min = {:e}", lmin).unwrap();
    writeln!(s, "elastic_lambda_max = {:e}", lmax).unwrap();
    if let Some(lam) = l.isotropic_lambda(1e-9) {
        writeln!(s, "elastic_isotropic_lambda = {:e}", lam).unwrap();
        writeln!(s, "m2_over_12 = {:e}", m.m2 / 12.0).unwrap();
    }
    if rep.annulus.is_some() && !spec.is_zero() {
        let e = ellipticity_bounds(&spec)?;
        writeln!(s, "lower_annulus = {:e}", e.lower_annulus).unwrap();
        writeln!(s, "lower_published = {:e}", e.lower_published).unwrap();
        writeln!(s, "published_flagged = {}", e.published_flagged).unwrap();
        writeln!(s, "lower_g_moment = {:e}", e.lower_g_moment).unwrap();
        writeln!(s, "upper = {:e}", e.upper).unwrap();
        writeln!(s, "rayleigh_min = {:e}\nrayleigh_max = {:e}", e.rayleigh_min, e.rayleigh_max).unwrap();
    }
    if cfg.kernel.preset == "annulus" {
        let (r1, r2) = (cfg.kernel.r1.unwrap(), cfg.kernel.r2.unwrap());
        let (lat, jac, nojac) = annulus_second_moment_check(r1, r2, 64);
        writeln!(s, "shell_moment_lattice = {:e}\nshell_moment_with_jacobian = {:e}\nshell_moment_without_jacobian = {:e}", lat, jac, nojac)
            .unwrap();
    }
    let mut out = Vec::new();
    write(&cfg.output, "kernel_report.txt", &s, &mut out)?;
    Ok(out)
}

fn continuum_bulk(cfg: &ExperimentConfig) -> Result<BulkPotential<f64>, RunError> {
    let spec = presets::kernel(cfg)?;
    let int_k = nllc::kernel::compute_moments(&spec)?.int_k;
    Ok(compute_c0_and_nn(&presets::model(cfg), &int_k, &BulkConfig::default())?)
}

fn potential_report(cfg: &ExperimentConfig) -> Out {
    let bulk = continuum_bulk(cfg)?;
    let m = bulk.m();
    let mut s = String::new();
    writeln!(s, "model = {}", cfg.model.preset).unwrap();
    writeln!(s, "m = {m}").unwrap();
    writeln!(s, "c0 = {:e}", bulk.c0).unwrap();
    writeln!(s, "s0 = {:e}", bulk.s0).unwrap();
    writeln!(s, "kappa = {}", bulk.kappa.map_or("none".into(), |k| format!("{k:e}"))).unwrap();
    writeln!(s, "transverse_curvature = {:e}", bulk.transverse_curvature).unwrap();
    writeln!(s, "degenerate = {}", bulk.degenerate).unwrap();
    let hd = hessian_diagnostics(&bulk, cfg.seed)?;
    writeln!(s, "c_est = {:e}", hd.c_est).unwrap();
    writeln!(s, "inverse_relation_error = {:e}", hd.inverse_relation_error).unwrap();
    writeln!(s, "max_covariance_norm = {:e}", hd.max_covariance_norm).unwrap();
    writeln!(s, "sigma_max_sq = {:e}", hd.sigma_max_sq).unwrap();
    // radial profile along the vacuum direction, stopping short of the moment boundary
    let mut dir = bulk.vacuum.representative(m);
    let n = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        dir.iter_mut().for_each(|x| *x /= n);
    } else {
        dir = (0..m).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect();
    }
    let mut csv = String::from("r,psi_s,psi_b\n");
    for i in 0..200 {
        let r = i as f64 * 0.005;
        let u: Vec<f64> = dir.iter().map(|d| d * r).collect();
        if bulk.model.dist_to_boundary(&u) < 0.02 {
            break;
        }
        let zero = vec![0.0; m];
        let (ps, _) = bulk.psi_s_from(&u, &zero)?;
        let pb = bulk.psi_b(&u)?;
        writeln!(csv, "{r:e},{ps:e},{pb:e}").unwrap();
    }
    let mut out = Vec::new();
    write(&cfg.output, "potential_report.txt", &s, &mut out)?;
    write(&cfg.output, "potential_profile.csv", &csv, &mut out)?;
    Ok(out)
}

fn solve(cfg: &ExperimentConfig, p: &Problem<f64>) -> Result<SolveResult<f64>, RunError> {
    let sc = presets::solver(cfg);
    let r = if cfg.solver.random_starts > 0 {
        multi_start(p, cfg.solver.random_starts, &sc)?.best
    } else if cfg.solver.method == "descent" {
        gradient_descent(p, &p.boundary_field(), &sc)?
    } else {
        el_fixed_point(p, &p.boundary_field(), &sc)?
    };
    Ok(r)
}

const MINIMIZE_HEADER: &str = "eps,method,iterations,residual,energy,margin,lipschitz,termination";

struct Solved {
    problem: Problem<f64>,
    result: SolveResult<f64>,
}

/// Solves every `ε`, writing per-`ε` artifacts. Returns the solutions and
/// reports the first non-converged solve after all artifacts are written.
fn solve_sweep(cfg: &ExperimentConfig, out: &mut Vec<PathBuf>) -> Result<(Vec<Solved>, Option<nllc::Error>), RunError> {
    let mut rows = format!("{MINIMIZE_HEADER}\n");
    let mut energy = format!("{ENERGY_CSV_HEADER}\n");
    let mut solved = Vec::new();
    let mut failure = None;
    for &eps in &cfg.sweep.eps {
        let p = presets::build_problem(cfg, eps)?;
        let r = solve(cfg, &p)?;
        writeln!(
            rows,
            "{eps:e},{},{},{:e},{:e},{:e},{:e},{:?}",
            cfg.solver.method, r.iterations, r.residual, r.energy, r.margin, r.lipschitz, r.termination
        )
        .unwrap();
        energy.push_str(&energy_csv_row(eps, &energy_primal(&p, &r.field)?));
        energy.push('\n');
        let mut hist = String::from("iteration,residual,energy\n");
        for (i, (res, e)) in r.residual_history.iter().zip(&r.energy_history).enumerate() {
            writeln!(hist, "{i},{res:e},{e:e}").unwrap();
        }
        write(&cfg.output, &format!("history_eps{}.csv", tag(eps)), &hist, out)?;
        dump(&cfg.output, &format!("u_eps{}.nllc", tag(eps)), &r.field, out)?;
        if failure.is_none() {
            if let Err(e) = r.check() {
                failure = Some(e);
            }
        }
        solved.push(Solved { problem: p, result: r });
    }
    write(&cfg.output, "minimize.csv", &rows, out)?;
    write(&cfg.output, "energy.csv", &energy, out)?;
    Ok((solved, failure))
}

fn minimize(cfg: &ExperimentConfig) -> Out {
    let mut out = Vec::new();
    let (_, failure) = solve_sweep(cfg, &mut out)?;
    match failure {
        Some(e) => Err(e.into()),
        None => Ok(out),
    }
}

/// The limit map for the configured boundary data, on a lightly padded box.
fn limit_map(cfg: &ExperimentConfig, l: &ElasticTensor<f64>) -> Result<HarmonicResult<f64>, RunError> {
    let bulk = continuum_bulk(cfg)?;
    let dom = Arc::new(Domain::new(presets::geometry(cfg), cfg.domain.radius, cfg.domain.cells, 2, 0.0)?);
    let bd = BoundaryData::build(presets::boundary(cfg), &dom, &bulk)?;
    let init = ManifoldField::from_boundary(dom, bulk.vacuum.clone(), &bd);
    let hc = HarmonicConfig {
        tol: cfg.limit.tol,
        max_iter: cfg.limit.max_iter,
        n_random: cfg.limit.random_starts,
        seed: cfg.seed,
        ..Default::default()
    };
    Ok(harmonic_multi_start(&init, l, &hc)?)
}

/// `‖u − v‖` in `L²(Ω)` and sup over Ω between a solution and the limit map.
fn distances(u: &OrderField<f64>, u0: &ManifoldField<f64>) -> Result<(f64, f64), RunError> {
    let v = transfer(u0, &u.domain)?;
    let (mut l2, mut sup) = (0.0f64, 0.0f64);
    for x in u.domain.interior_indices() {
        let d2: f64 = u.cell(x).iter().zip(v.cell(x)).map(|(a, b)| (a - b) * (a - b)).sum();
        l2 += d2;
        sup = sup.max(d2.sqrt());
    }
    Ok(((l2 * u.domain.cell_volume()).sqrt(), sup))
}

fn eps_sweep(cfg: &ExperimentConfig) -> Out {
    let mut out = Vec::new();
    let (solved, failure) = solve_sweep(cfg, &mut out)?;
    let l = elastic_tensor(&presets::kernel(cfg)?)?;
    let u0 = limit_map(cfg, &l)?;
    let mut csv = String::from("eps,energy,residual,margin,lipschitz,eps_lipschitz,l2_distance,sup_distance\n");
    for s in &solved {
        let r = &s.result;
        let (l2, sup) = distances(&r.field, &u0.field)?;
        let e = s.problem.eps;
        writeln!(csv, "{e:e},{:e},{:e},{:e},{:e},{:e},{l2:e},{sup:e}", r.energy, r.residual, r.margin, r.lipschitz, e * r.lipschitz).unwrap();
    }
    write(&cfg.output, "sweep.csv", &csv, &mut out)?;
    dump(&cfg.output, "u0.nllc", &u0.field.to_order_field(0.0), &mut out)?;
    match failure {
        Some(e) => Err(e.into()),
        None => Ok(out),
    }
}

fn limit_solve(cfg: &ExperimentConfig) -> Out {
    let l = elastic_tensor(&presets::kernel(cfg)?)?;
    let u0 = limit_map(cfg, &l)?;
    let rep = singular_set(&u0.field, &cfg.limit.radii, cfg.limit.threshold);
    let mut s = String::new();
    writeln!(s, "limit_energy = {:e}", u0.limit_energy).unwrap();
    writeln!(s, "compact_energy = {:e}", u0.energy).unwrap();
    writeln!(s, "stationarity = {:e}", u0.stationarity).unwrap();
    writeln!(s, "iterations = {}", u0.iterations).unwrap();
    writeln!(s, "converged = {}", u0.converged).unwrap();
    writeln!(s, "singular_threshold = {:e}", rep.threshold).unwrap();
    writeln!(s, "singular_radii = {}", rep.radii.iter().map(|r| format!("{r:e}")).collect::<Vec<_>>().join(",")).unwrap();
    writeln!(s, "singular_dropped = {}", rep.dropped.iter().map(|r| format!("{r:e}")).collect::<Vec<_>>().join(",")).unwrap();
    writeln!(s, "flagged = {}", rep.flagged.len()).unwrap();
    writeln!(s, "flagged_fraction = {:e}", rep.flagged_fraction()).unwrap();
    let mut csv = String::from("cell,x,y,z");
    for r in &rep.radii {
        write!(csv, ",density_r{r:e}").unwrap();
    }
    csv.push_str(",flagged\n");
    for (n, &c) in rep.cells.iter().enumerate() {
        let x = u0.field.domain.coord(c);
        write!(csv, "{c},{:e},{:e},{:e}", x[0], x[1], x[2]).unwrap();
        for row in &rep.densities {
            write!(csv, ",{:e}", row[n]).unwrap();
        }
        writeln!(csv, ",{}", u8::from(rep.flagged.binary_search(&c).is_ok())).unwrap();
    }
    let mut out = Vec::new();
    write(&cfg.output, "limit_report.txt", &s, &mut out)?;
    write(&cfg.output, "singular_set.csv", &csv, &mut out)?;
    dump(&cfg.output, "u0.nllc", &u0.field.to_order_field(0.0), &mut out)?;
    if !u0.converged {
        return Err(nllc::Error::MaxIterations { iterations: u0.iterations, residual: u0.stationarity }.into());
    }
    Ok(out)
}

fn configured_ball(cfg: &ExperimentConfig) -> Option<([f64; 3], f64)> {
    cfg.limit.ball_center.zip(cfg.limit.ball_radius)
}

fn gamma_check(cfg: &ExperimentConfig) -> Out {
    let spec = presets::kernel(cfg)?;
    let model = presets::model(cfg);
    let bulk = continuum_bulk(cfg)?;
    let preset = presets::boundary(cfg);
    let rep = bulk.vacuum.representative(bulk.m());
    // the test map: the boundary datum's vacuum-valued angle field
    let v = |x: &[f64; 3]| -> Vec<f64> {
        match preset.angle(x) {
            Some(t) => vacuum_point(&bulk, t).unwrap_or_else(|_| rep.clone()),
            None => match &preset {
                BoundaryPreset::Constant(c) => c.clone(),
                _ => rep.clone(),
            },
        }
    };
    let ball = configured_ball(cfg);
    let rows = gamma_limsup_check(
        &spec,
        &model,
        &v,
        presets::geometry(cfg),
        cfg.domain.radius,
        cfg.domain.cells,
        &cfg.sweep.eps,
        ball,
        &presets::problem_config(cfg),
    )?;
    let mut csv = String::from("eps,F_eps,interaction,bulk,E0,gap,rel_gap\n");
    for r in &rows {
        writeln!(csv, "{:e},{:e},{:e},{:e},{:e},{:e},{:e}", r.eps, r.f_eps, r.interaction, r.bulk, r.e0, r.gap, r.rel_gap()).unwrap();
    }
    let mut out = Vec::new();
    write(&cfg.output, "gamma_limsup.csv", &csv, &mut out)?;
    // local convergence of the minimisers
    let (solved, failure) = solve_sweep(cfg, &mut out)?;
    let l = elastic_tensor(&spec)?;
    let u0 = limit_map(cfg, &l)?;
    let balls = vec![ball.unwrap_or(([0.0; 3], 0.5 * cfg.domain.radius))];
    let seq: Vec<(&Problem<f64>, &OrderField<f64>)> = solved.iter().map(|s| (&s.problem, &s.result.field)).collect();
    let lim = gamma_liminf_check(&seq, &u0.field, &l, &balls)?;
    let mut csv = String::from("eps,cx,cy,cz,radius,F_eps,E0,gap,l2_half\n");
    for r in &lim {
        writeln!(
            csv,
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            r.eps, r.center[0], r.center[1], r.center[2], r.radius, r.f_eps, r.e0, r.gap, r.l2_half
        )
        .unwrap();
    }
    write(&cfg.output, "gamma_liminf.csv", &csv, &mut out)?;
    match failure {
        Some(e) => Err(e.into()),
        None => Ok(out),
    }
}

fn holder_probe(cfg: &ExperimentConfig) -> Out {
    let mut out = Vec::new();
    let (solved, failure) = solve_sweep(cfg, &mut out)?;
    let pr = &cfg.probe;
    let mut csv = String::from("eps,rho,mean_osc,scaled_F,mu_fit,holder_seminorm,decay_ratio\n");
    let mut decay = String::from("eps,rho,theta,scaled_F,ratio\n");
    let open = DecayConfig { eta: f64::INFINITY, eps_star: f64::INFINITY };
    for s in &solved {
        let eps = s.problem.eps;
        let u = &s.result.field;
        let le = LocalEnergy::new(&s.problem, u)?;
        let prof = decay_profile(&le, &pr.center, &pr.radii);
        let mu = pr.mu.or(prof.mu).unwrap_or(1.0).clamp(1e-3, 1.0);
        let hs = holder_seminorm(u, &pr.center, pr.rho, mu, pr.pair_budget, cfg.seed);
        let first = prof.scaled_energy.first().copied().unwrap_or(0.0);
        for (j, &r) in prof.radii.iter().enumerate() {
            let sc = prof.scaled_energy[j];
            let ratio = if sc == 0.0 { 0.0 } else { sc / first };
            let fit = prof.mu.map_or("nan".to_string(), |m| format!("{m:e}"));
            writeln!(csv, "{eps:e},{r:e},{:e},{sc:e},{fit},{hs:e},{ratio:e}", prof.mean_osc[j]).unwrap();
        }
        let tab = decay_lemma_check(&le, &pr.center, pr.rho, &pr.thetas, &open)?;
        for (t, sc, ratio) in &tab.rows {
            writeln!(decay, "{eps:e},{:e},{t:e},{sc:e},{ratio:e}", pr.rho).unwrap();
        }
    }
    write(&cfg.output, "holder_probe.csv", &csv, &mut out)?;
    write(&cfg.output, "decay.csv", &decay, &mut out)?;
    match failure {
        Some(e) => Err(e.into()),
        None => Ok(out),
    }
}
