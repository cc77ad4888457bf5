use std::path::{Path, PathBuf};

use casimir_reduce::convex::{
    conjugate, emden_rhs, make_polytrope_q_on, velocity_reduce, ConvexScalarFunction, GrowthEnvelope, Homogeneity,
    LeftBranch,
};
use casimir_reduce::io::{
    read_density, read_function_table, read_table, write_function_table, write_json, write_table, Table,
};
use casimir_reduce::lift::{energy_report, lift, lift_parts, EnergyReport};
use casimir_reduce::minimize::{minimize_reduced, rearrange_decreasing, MinimizeOptions};
use casimir_reduce::ode::OdeTol;
use casimir_reduce::radial::{
    internal_energy, potential_energy, potential_from_density, reduced_energies, resample, RadialDensity, RadialGrid,
    RadialPotential, ReducedEnergies,
};
use casimir_reduce::steady::{euler_lagrange_residual, solve_steady, SolutionSummary, SolveOptions, SolveRoute};
use casimir_reduce::{Error, Model};
use serde::Serialize;

use crate::config::{FunctionSpec, ModelConfig, ModelSpec};
use crate::error::CliError;

/// Rows per spatial node in the exported `(r, E)` table.
const ENERGY_SAMPLES: usize = 33;

pub fn build_model(cfg: &ModelConfig) -> Result<Model, CliError> {
    let model = match &cfg.model {
        ModelSpec::Q(FunctionSpec::Polytrope(k)) => Model::from_q(make_polytrope_q_on(*k, cfg.sample)?)?,
        ModelSpec::Q(FunctionSpec::Table(path)) => Model::from_q(load_table(path)?)?,
        ModelSpec::Phi(FunctionSpec::Polytrope(n)) => {
            Model::from_phi(ConvexScalarFunction::power(1.0, 1.0 + 1.0 / n, cfg.sample)?)?
        }
        ModelSpec::Phi(FunctionSpec::Table(path)) => Model::from_phi(load_table(path)?)?,
    };
    Ok(model)
}

fn load_table(path: &Path) -> Result<ConvexScalarFunction, CliError> {
    let table = read_function_table(path)?;
    Ok(ConvexScalarFunction::tabulated(table, LeftBranch::PlusInfinity, true)?)
}

pub fn describe(spec: &ModelSpec) -> String {
    let f = |name: &str, s: &FunctionSpec| match s {
        FunctionSpec::Polytrope(x) => format!("{name} = polytrope({x})"),
        FunctionSpec::Table(p) => format!("{name} = table({})", p.display()),
    };
    match spec {
        ModelSpec::Q(s) => f("q", s),
        ModelSpec::Phi(s) => f("phi", s),
    }
}

fn prepare_out(out: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out)
        .map_err(|e| CliError::Config(format!("cannot create output directory {}: {e}", out.display())))
}

fn solve_options(cfg: &ModelConfig) -> SolveOptions {
    let mut opts = SolveOptions {
        grid_nodes: cfg.grid_nodes,
        mass_rtol: cfg.mass_rtol,
        ..Default::default()
    };
    opts.shoot.tol = OdeTol {
        rtol: cfg.ode_rtol,
        atol: cfg.ode_atol,
    };
    opts
}

fn minimize_options(cfg: &ModelConfig) -> MinimizeOptions {
    MinimizeOptions {
        tol: cfg.tol,
        grid_nodes: cfg.grid_nodes,
        ..Default::default()
    }
}

/// Energies including the interaction with the configured exterior density.
fn exterior_energies(
    cfg: &ModelConfig,
    model: &Model,
    rho: &RadialDensity,
) -> Result<Option<ReducedEnergies>, CliError> {
    let Some(path) = &cfg.exterior else {
        return Ok(None);
    };
    let ext = resample(&read_density(path)?, rho.grid().clone())?;
    Ok(Some(reduced_energies(model.phi(), rho, Some(&ext))?))
}

fn profile_table(potential: &RadialPotential, rho: &RadialDensity, e0: f64) -> Table {
    let mut t = Table::new(&["r", "rho", "U", "w"]);
    for ((&r, &v), &u) in rho.grid().nodes().iter().zip(rho.values()).zip(potential.values()) {
        t.rows.push(vec![r, v, u, e0 - u]);
    }
    t
}

#[derive(Serialize)]
struct ReduceSummary {
    model: String,
    /// Index of the Emden–Fowler right-hand side when `g` is a pure power.
    n: Option<f64>,
    g: Option<Homogeneity>,
    phi_power: Option<PowerLaw>,
    phi_envelope: GrowthEnvelope,
    q_star_samples: usize,
    phi_star_samples: usize,
    phi_samples: usize,
}

#[derive(Serialize)]
struct PowerLaw {
    coefficient: f64,
    exponent: f64,
}

/// `Q → Q* → Φ* → Φ` and `g`, written as tables with a JSON summary.
pub fn reduce(cfg: &ModelConfig, out: &Path) -> Result<(), CliError> {
    if !matches!(cfg.model, ModelSpec::Q(_)) {
        return Err(CliError::Config("reduce needs a Casimir function `q`".into()));
    }
    let model = build_model(cfg)?;
    let q = model.q().expect("model built from q");
    let q_star = conjugate(q)?;
    let phi_star = velocity_reduce(&q_star)?;
    let phi = model.phi();
    let g = emden_rhs(q)?;
    prepare_out(out)?;
    write_function_table(&out.join("q_star.csv"), q_star.table())?;
    write_function_table(&out.join("phi_star.csv"), phi_star.table())?;
    write_function_table(&out.join("phi.csv"), phi.table())?;
    let mut gt = Table::new(&["lambda", "g"]);
    for &lambda in &phi_star.table().abscissae {
        match g.eval(lambda) {
            Ok(v) => gt.rows.push(vec![lambda, v]),
            Err(Error::DomainCutoff { .. }) => break,
            Err(e) => return Err(e.into()),
        }
    }
    write_table(&out.join("g.csv"), &gt)?;
    let summary = ReduceSummary {
        model: describe(&cfg.model),
        n: g.homogeneity().map(|h| h.exponent),
        g: g.homogeneity(),
        phi_power: phi
            .as_power()
            .map(|(coefficient, exponent)| PowerLaw { coefficient, exponent }),
        phi_envelope: GrowthEnvelope::fit(phi)?,
        q_star_samples: q_star.table().abscissae.len(),
        phi_star_samples: phi_star.table().abscissae.len(),
        phi_samples: phi.table().abscissae.len(),
    };
    write_json(&out.join("reduce.json"), &summary)?;
    Ok(())
}

#[derive(Serialize)]
struct SolveSummary {
    model: String,
    #[serde(rename = "M")]
    mass: f64,
    #[serde(rename = "R")]
    radius: f64,
    #[serde(rename = "E0")]
    e0: f64,
    central_value: f64,
    route: SolveRoute,
    energies: ReducedEnergies,
    residual: f64,
    solutions: Vec<SolutionSummary>,
    exterior_energies: Option<ReducedEnergies>,
}

pub fn solve(cfg: &ModelConfig, out: &Path) -> Result<(), CliError> {
    let model = build_model(cfg)?;
    let state = solve_steady(&model, cfg.mass, &solve_options(cfg))?;
    let residual = euler_lagrange_residual(&state, model.g())?;
    let exterior = exterior_energies(cfg, &model, &state.density)?;
    prepare_out(out)?;
    write_table(
        &out.join("profile.csv"),
        &profile_table(&state.potential, &state.density, state.e0),
    )?;
    let summary = SolveSummary {
        model: describe(&cfg.model),
        mass: state.mass,
        radius: state.radius,
        e0: state.e0,
        central_value: state.central_value,
        route: state.route,
        energies: state.energies,
        residual,
        solutions: state.solutions.clone(),
        exterior_energies: exterior,
    };
    write_json(&out.join("solve.json"), &summary)?;
    Ok(())
}

#[derive(Serialize)]
struct MinimizeSummary {
    model: String,
    #[serde(rename = "M")]
    mass: f64,
    #[serde(rename = "R")]
    support_radius: f64,
    #[serde(rename = "R0")]
    r0: f64,
    #[serde(rename = "E0")]
    e0: f64,
    energies: ReducedEnergies,
    residual: f64,
    converged: bool,
    iterations: usize,
    regrid_at: Vec<usize>,
    energy_trajectory: Vec<f64>,
    residual_trajectory: Vec<f64>,
    concentration: Vec<f64>,
    exterior_energies: Option<ReducedEnergies>,
}

pub fn minimize(cfg: &ModelConfig, out: &Path) -> Result<(), CliError> {
    let model = build_model(cfg)?;
    let res = minimize_reduced(model.phi(), cfg.mass, None, &minimize_options(cfg))?;
    let exterior = exterior_energies(cfg, &model, &res.density)?;
    prepare_out(out)?;
    write_table(
        &out.join("profile.csv"),
        &profile_table(&res.potential, &res.density, res.e0),
    )?;
    let h = res.energies.reduced_total;
    let summary = MinimizeSummary {
        model: describe(&cfg.model),
        mass: res.density.mass(),
        support_radius: res.support_radius(),
        r0: -0.6 * cfg.mass * cfg.mass / h,
        e0: res.e0,
        energies: res.energies,
        residual: res.residual,
        converged: res.converged,
        iterations: res.iterations,
        regrid_at: res.regrid_at.clone(),
        energy_trajectory: res.energy_trajectory.clone(),
        residual_trajectory: res.residual_trajectory.clone(),
        concentration: res.concentration.clone(),
        exterior_energies: exterior,
    };
    write_json(&out.join("minimize.json"), &summary)?;
    if !res.converged {
        return Err(Error::NonConvergence {
            iterations: res.iterations,
            residual: res.residual,
            energies: res.energy_trajectory,
        }
        .into());
    }
    Ok(())
}

#[derive(Serialize)]
struct LiftSummary {
    model: String,
    source: String,
    #[serde(rename = "E0")]
    e0: f64,
    report: EnergyReport,
    /// Reduced energies of the input density on its own grid.
    reduced: ReducedEnergies,
    /// `gap / |ℋ^r|`.
    relative_gap: f64,
    /// Reduced energy of the lifted density minus that of the input.
    interpolation_offset: f64,
}

/// Reads a `r,rho,U,w` profile; `E₀ = U + w` at the center.
pub fn read_profile(path: &Path) -> Result<(RadialDensity, Vec<f64>, f64), CliError> {
    let t = read_table(path)?;
    let r = t.column("r")?;
    let rho = t.column("rho")?;
    let u = t.column("U")?;
    let w = t.column("w")?;
    if r.is_empty() {
        return Err(Error::Format(format!("{} has no rows", path.display())).into());
    }
    let density = RadialDensity::new(RadialGrid::new(r)?, rho)?;
    Ok((density, u.clone(), u[0] + w[0]))
}

pub fn lift_cmd(cfg: &ModelConfig, out: &Path, input: Option<&Path>) -> Result<(), CliError> {
    if !matches!(cfg.model, ModelSpec::Q(_)) {
        return Err(CliError::Config("lift needs a Casimir function `q`".into()));
    }
    let model = build_model(cfg)?;
    let q = model.q().expect("model built from q");
    let (f, reduced, source) = match input {
        Some(path) => {
            let (rho, u, e0) = read_profile(path)?;
            let reduced = reduced_energies(model.phi(), &rho, None)?;
            // nodal U from the file, enclosed mass from ρ
            let enclosed = potential_from_density(&rho).enclosed_mass().to_vec();
            let potential = RadialPotential::from_parts(rho.grid().clone(), u, enclosed)?;
            let f = lift_parts(q, e0, potential, rho)?;
            (f, reduced, path.display().to_string())
        }
        None => {
            let state = solve_steady(&model, cfg.mass, &solve_options(cfg))?;
            (lift(q, &state)?, state.energies, "solve".to_string())
        }
    };
    let report = energy_report(q, model.phi(), &f, reduced.epot)?;
    prepare_out(out)?;
    let mut t = Table::new(&["r", "E", "f"]);
    for row in f.table(ENERGY_SAMPLES)? {
        t.rows.push(vec![row.r, row.energy, row.f]);
    }
    write_table(&out.join("phase_space.csv"), &t)?;
    let summary = LiftSummary {
        model: describe(&cfg.model),
        source,
        e0: f.e0(),
        report,
        reduced,
        relative_gap: report.gap / reduced.reduced_total.abs(),
        interpolation_offset: report.reduced_total - reduced.reduced_total,
    };
    write_json(&out.join("lift.json"), &summary)?;
    Ok(())
}

#[derive(Serialize)]
struct RearrangeSummary {
    mass_before: f64,
    mass_after: f64,
    epot_before: f64,
    epot_after: f64,
    internal_before: Option<f64>,
    internal_after: Option<f64>,
}

pub fn rearrange(input: &Path, model: Option<&ModelConfig>, out: &Path) -> Result<(), CliError> {
    let rho = read_density(input)?;
    let star = rearrange_decreasing(&rho)?;
    let (internal_before, internal_after) = match model {
        Some(cfg) => {
            let m = build_model(cfg)?;
            (
                Some(internal_energy(m.phi(), &rho)?),
                Some(internal_energy(m.phi(), &star)?),
            )
        }
        None => (None, None),
    };
    prepare_out(out)?;
    casimir_reduce::io::write_density(&out.join("rearranged.csv"), &star, "rho")?;
    let summary = RearrangeSummary {
        mass_before: rho.mass(),
        mass_after: star.mass(),
        epot_before: potential_energy(&rho),
        epot_after: potential_energy(&star),
        internal_before,
        internal_after,
    };
    write_json(&out.join("rearrange.json"), &summary)?;
    Ok(())
}

#[derive(Clone, Serialize)]
struct SweepRow {
    job: usize,
    model: String,
    #[serde(rename = "M")]
    mass: f64,
    #[serde(rename = "R")]
    radius: Option<f64>,
    #[serde(rename = "E0")]
    e0: Option<f64>,
    reduced_total: Option<f64>,
    residual: Option<f64>,
    error: Option<String>,
}

#[derive(Serialize)]
struct SweepSummary {
    jobs: Vec<SweepRow>,
    failures: usize,
}

/// Solves every (model, mass) pair; jobs run on scoped threads and the
/// results are reported in job order.
pub fn sweep(models: &[ModelConfig], masses: &[f64], threads: usize, out: &Path) -> Result<(), CliError> {
    if masses.is_empty() || models.is_empty() {
        return Err(CliError::Config("sweep needs at least one model and one mass".into()));
    }
    if let Some(m) = masses.iter().find(|m| !(**m > 0.0 && m.is_finite())) {
        return Err(CliError::Config(format!("sweep masses must be positive, got {m}")));
    }
    let jobs: Vec<(usize, &ModelConfig, f64)> = models
        .iter()
        .flat_map(|cfg| masses.iter().map(move |&m| (cfg, m)))
        .enumerate()
        .map(|(i, (cfg, m))| (i, cfg, m))
        .collect();
    let threads = threads.clamp(1, jobs.len());
    let mut rows: Vec<Option<SweepRow>> = vec![None; jobs.len()];
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..threads)
            .map(|t| {
                let jobs = &jobs;
                s.spawn(move || {
                    jobs.iter()
                        .skip(t)
                        .step_by(threads)
                        .map(|&(i, cfg, mass)| (i, run_job(i, cfg, mass)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (i, row) in h.join().expect("sweep worker panicked") {
                rows[i] = Some(row);
            }
        }
    });
    let rows: Vec<SweepRow> = rows.into_iter().map(|r| r.expect("every job ran")).collect();
    prepare_out(out)?;
    let mut t = Table::new(&["job", "M", "R", "E0", "reduced_total", "residual"]);
    for row in &rows {
        let v = |x: Option<f64>| x.unwrap_or(f64::NAN);
        t.rows.push(vec![
            row.job as f64,
            row.mass,
            v(row.radius),
            v(row.e0),
            v(row.reduced_total),
            v(row.residual),
        ]);
    }
    write_table(&out.join("sweep.csv"), &t)?;
    let failures = rows.iter().filter(|r| r.error.is_some()).count();
    write_json(&out.join("sweep.json"), &SweepSummary { jobs: rows, failures })?;
    if failures > 0 {
        return Err(Error::InternalConsistency(format!("{failures} sweep jobs failed")).into());
    }
    Ok(())
}

fn run_job(job: usize, cfg: &ModelConfig, mass: f64) -> SweepRow {
    let result = (|| -> Result<_, CliError> {
        let model = build_model(cfg)?;
        let state = solve_steady(&model, mass, &solve_options(cfg))?;
        let residual = euler_lagrange_residual(&state, model.g())?;
        Ok((state, residual))
    })();
    let mut row = SweepRow {
        job,
        model: describe(&cfg.model),
        mass,
        radius: None,
        e0: None,
        reduced_total: None,
        residual: None,
        error: None,
    };
    match result {
        Ok((state, residual)) => {
            row.radius = Some(state.radius);
            row.e0 = Some(state.e0);
            row.reduced_total = Some(state.energies.reduced_total);
            row.residual = Some(residual);
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

/// Output directory from the flag, defaulting to the working directory.
pub fn out_dir(out: Option<PathBuf>) -> PathBuf {
    out.unwrap_or_else(|| PathBuf::from("."))
}
