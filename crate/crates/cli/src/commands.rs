use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use exactflux::complex::{composition_defect, rank_mod_p, verify_exactness, RANK_LIMIT};
use exactflux::io::{recheck_conservation, write_dofs};
use exactflux::mesh::write_mesh;
use exactflux::rbm::{
    collect_snapshots, pod_truncate, read_artifact, sample_latin_hypercube, write_artifact, Artifact, ArtifactMeta,
    OnlineSolver, ReducedBasis,
};
use exactflux::solver::{relative_errors, Backend, Solution};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::problem::Problem;
use crate::report::{write_singular_values, ErrorReport, MASS_LIMIT};

pub const ARTIFACT_FILE: &str = "basis.rbm";

fn prepare_out(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn base_report(cfg: &RunConfig, problem: &Problem) -> ErrorReport {
    let (n_dof_fom, n_dof_cell, n_dof_step2) = problem.dof_counts();
    ErrorReport { case: cfg.case.clone(), n_dof_fom, n_dof_cell, n_dof_step2, ..Default::default() }
}

/// The query from the command line, else the config, else the centre of the
/// sampling box.
fn query(cfg: &RunConfig, problem: &Problem, flag: Option<Vec<f64>>) -> Result<Vec<f64>, CliError> {
    let ranges = problem.ranges(cfg)?;
    let mu = match flag.or_else(|| cfg.query.clone()) {
        Some(mu) => mu,
        None => ranges.iter().map(|r| r.at(0.5)).collect(),
    };
    if mu.len() != ranges.len() {
        return Err(CliError::Config(format!("query has {} values, the model has {} parameters", mu.len(), ranges.len())));
    }
    Ok(mu)
}

/// Writes the VTK and dof files of a solution, then re-reads the dof file
/// and recomputes the cell balance from it.
fn export(problem: &Problem, sol: &Solution, mu: &[f64], dir: &Path, stem: &str) -> Result<f64, CliError> {
    write_text(&dir.join(format!("{stem}.vtk")), &problem.vtk(sol)?)?;
    let dofs = dir.join(format!("{stem}_dofs.csv"));
    write_dofs(&dofs, &sol.flux, &sol.pressure).map_err(CliError::at(&dofs))?;
    let model = problem.model();
    let source = model.physics(mu)?.source;
    let reread = recheck_conservation(&dofs, model.complex(), &source).map_err(CliError::at(&dofs))?;
    Ok(reread.relative.max(sol.diagnostics.mass.relative))
}

pub fn mesh(cfg: &RunConfig) -> Result<(), CliError> {
    let problem = Problem::build(cfg)?;
    prepare_out(&cfg.out)?;
    let path = cfg.out.join("mesh.txt");
    write_mesh(&path, problem.mesh(), problem.tags()).map_err(CliError::at(&path))?;
    if let Problem::Fractured(m) = &problem {
        let path = cfg.out.join("fractures.txt");
        m.mesh().network().write(&path).map_err(CliError::at(&path))?;
    }
    let (fom, cells, step2) = problem.dof_counts();
    println!(
        "mesh: {} vertices, {} cells; dofs: fom {fom}, cell {cells}, step2 {step2}",
        problem.mesh().n_vertices(),
        problem.mesh().n_cells()
    );
    Ok(())
}

pub fn offline(cfg: &RunConfig) -> Result<(), CliError> {
    let t0 = Instant::now();
    let problem = Problem::build(cfg)?;
    let model = problem.model();
    let ranges = problem.ranges(cfg)?;
    let solver = cfg.linear_solver()?;
    prepare_out(&cfg.out)?;
    let samples = sample_latin_hypercube(cfg.snapshots, &ranges, cfg.seed)?;
    let snapshots = collect_snapshots(model, &samples, &solver, cfg.workers)?;
    let basis = pod_truncate(&snapshots.matrix, cfg.eps)?;
    let t_offline = t0.elapsed().as_secs_f64();
    let n_modes = basis.n_modes();
    let sigma = basis.singular_values().to_vec();
    let artifact = Artifact { basis, meta: ArtifactMeta { fingerprint: model.fingerprint(), ranges } };
    let path = cfg.out.join(ARTIFACT_FILE);
    write_artifact(&path, &artifact).map_err(CliError::at(&path))?;
    write_singular_values(&cfg.out.join("singular_values.csv"), &sigma, n_modes)?;
    let report = ErrorReport { n_modes: Some(n_modes), t_offline_s: Some(t_offline), ..base_report(cfg, &problem) };
    report.write(&cfg.out.join("offline_report.csv"))?;
    println!("offline: {} snapshots, {n_modes} modes (eps {:e}), {t_offline:.3} s", cfg.snapshots, cfg.eps);
    for (i, s) in sigma.iter().enumerate() {
        println!("  sigma[{i}] = {s:.6e}{}", if i < n_modes { "" } else { "  (dropped)" });
    }
    Ok(())
}

pub fn online(
    cfg: &RunConfig,
    artifact: Option<PathBuf>,
    flag_query: Option<Vec<f64>>,
    verify_fom: bool,
) -> Result<(), CliError> {
    let problem = Problem::build(cfg)?;
    let model = problem.model();
    let mu = query(cfg, &problem, flag_query)?;
    let solver = cfg.linear_solver()?;
    let path = artifact.unwrap_or_else(|| cfg.out.join(ARTIFACT_FILE));
    let artifact = read_artifact(&path).map_err(|e| match e {
        exactflux::Error::Io(io) => CliError::io(&path, io),
        other => CliError::at(&path)(other),
    })?;
    let online = OnlineSolver::from_artifact(model, artifact, &solver).map_err(CliError::at(&path))?;
    prepare_out(&cfg.out)?;
    let t0 = Instant::now();
    let sol = online.solve(&mu)?;
    let t_online = t0.elapsed().as_secs_f64();
    let mut report = ErrorReport {
        n_modes: Some(online.basis().n_modes()),
        t_online_s: Some(t_online),
        err_mass: Some(export(&problem, &sol, &mu, &cfg.out, "online")?),
        ..base_report(cfg, &problem)
    };
    if verify_fom {
        let t0 = Instant::now();
        let fom = model.solve_fom(&mu)?;
        report.t_fom_s = Some(t0.elapsed().as_secs_f64());
        let (ep, eq) = relative_errors(model.complex(), &sol, &fom);
        report.err_p = Some(ep);
        report.err_q = Some(eq);
    }
    finish(cfg, report, "online_report.csv")
}

pub fn fom(cfg: &RunConfig, flag_query: Option<Vec<f64>>) -> Result<(), CliError> {
    let problem = Problem::build(cfg)?;
    let mu = query(cfg, &problem, flag_query)?;
    prepare_out(&cfg.out)?;
    let t0 = Instant::now();
    let sol = problem.model().solve_fom(&mu)?;
    let t_fom = t0.elapsed().as_secs_f64();
    let report = ErrorReport {
        t_fom_s: Some(t_fom),
        err_mass: Some(export(&problem, &sol, &mu, &cfg.out, "fom")?),
        ..base_report(cfg, &problem)
    };
    finish(cfg, report, "fom_report.csv")
}

fn finish(cfg: &RunConfig, report: ErrorReport, name: &str) -> Result<(), CliError> {
    let path = cfg.out.join(name);
    report.write(&path)?;
    print!("{}", fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?);
    if report.mass_ok() {
        Ok(())
    } else {
        Err(CliError::Failed(format!(
            "mass residual {:e} exceeds {MASS_LIMIT:e}",
            report.err_mass.unwrap_or(f64::NAN)
        )))
    }
}

struct Check {
    name: &'static str,
    outcome: Result<String, String>,
}

/// Runs the structural and numerical self-checks on the configured problem.
/// `inject_sign_fault` flips one curl entry before the composition check;
/// it exists so that the failure path can be tested.
pub fn verify(cfg: &RunConfig, flag_query: Option<Vec<f64>>, inject_sign_fault: bool) -> Result<(), CliError> {
    let problem = Problem::build(cfg)?;
    let model = problem.model();
    let complex = model.complex();
    let solver = cfg.linear_solver()?;
    let mut checks = Vec::new();

    let mut curl = complex.curl().clone();
    if inject_sign_fault {
        if let Some(v) = curl.data_mut().first_mut() {
            *v = -*v;
        }
    }
    let defect = composition_defect(complex.div(), &curl);
    checks.push(Check {
        name: "composition",
        outcome: if defect == 0 { Ok("div of curl is zero".into()) } else { Err(format!("div of curl has entry {defect}")) },
    });

    checks.push(Check { name: "exactness", outcome: exactness(&problem) });

    let mut params = vec![query(cfg, &problem, flag_query)?];
    params.extend(sample_latin_hypercube(2, &problem.ranges(cfg)?, cfg.seed)?);
    let physics: Vec<_> = params.iter().map(|mu| model.physics(mu)).collect::<Result<_, _>>()?;
    let compatible = physics.iter().try_for_each(|p| p.check(complex));
    checks.push(Check {
        name: "source compatibility",
        outcome: compatible.as_ref().map(|_| "sources match the boundary data".into()).map_err(|e| e.to_string()),
    });

    if compatible.is_ok() {
        let mut worst = (0.0f64, 0.0f64);
        let mut mass = 0.0f64;
        let mut failure = None;
        for mu in &params {
            let mut run = || -> exactflux::Result<()> {
                let ts = model.solve_three_step(mu, Backend::Full(solver), &solver)?;
                let fom = model.solve_fom(mu)?;
                let (ep, eq) = relative_errors(complex, &ts, &fom);
                worst = (worst.0.max(ep), worst.1.max(eq));
                let empty = ReducedBasis::empty(complex.n_potential());
                let tpfa_only = model.solve_three_step(mu, Backend::Reduced(&empty), &solver)?;
                for r in [ts.diagnostics.mass, fom.diagnostics.mass, tpfa_only.diagnostics.mass] {
                    mass = mass.max(r.relative);
                }
                Ok(())
            };
            if let Err(e) = run() {
                failure = Some(e.to_string());
                break;
            }
        }
        let (eq_outcome, mass_outcome) = match failure {
            Some(e) => (Err(e.clone()), Err(e)),
            None => (
                if worst.0 <= 1e-8 && worst.1 <= 1e-8 {
                    Ok(format!("pressure {:.2e}, flux {:.2e}", worst.0, worst.1))
                } else {
                    Err(format!("pressure {:.2e}, flux {:.2e} above 1e-8", worst.0, worst.1))
                },
                if mass <= MASS_LIMIT {
                    Ok(format!("relative residual {mass:.2e}"))
                } else {
                    Err(format!("relative residual {mass:.2e} above {MASS_LIMIT:e}"))
                },
            ),
        };
        checks.push(Check { name: "three-step vs saddle point", outcome: eq_outcome });
        checks.push(Check { name: "conservation", outcome: mass_outcome });
    }

    let mut failed = Vec::new();
    for c in &checks {
        match &c.outcome {
            Ok(msg) => println!("PASS {}: {msg}", c.name),
            Err(msg) => {
                println!("FAIL {}: {msg}", c.name);
                failed.push(c.name);
            }
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Failed(format!("verify: {}", failed.join(", "))))
    }
}

fn exactness(problem: &Problem) -> Result<String, String> {
    match problem {
        Problem::Layered(m) => {
            let d = m.domain();
            let report = verify_exactness(d.mesh(), d.restriction(), d.tags().regime());
            if report.passes() {
                Ok(report.summary())
            } else {
                Err(report.summary())
            }
        }
        Problem::Fractured(m) => {
            let curl = m.mesh().curl();
            if curl.rows() + curl.cols() > RANK_LIMIT {
                return Ok("rank check skipped, too large".into());
            }
            let (rank, expected) = (rank_mod_p(curl), curl.cols() - 1);
            if rank == expected {
                Ok(format!("curl kernel is the constants (rank {rank})"))
            } else {
                Err(format!("curl rank {rank}, expected {expected}"))
            }
        }
    }
}
