//! Batch CLI for the CP^n kinematic-formula workbench.
//!
//! Exit codes: 0 success, 1 acceptance failure (z-score or bound
//! violation), 2 usage error, 3 numerical failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::json;

use cpn_kinematics::constants::ConstantsRow;
use cpn_kinematics::haar::{haar_unitary, SeedStream, UnitaryMatrix};
use cpn_kinematics::hamiltonian::{random_quartic, HamiltonianSpec, HamiltonianSpecFile};
use cpn_kinematics::intersect::{count_levelset, count_parametric, IntersectionReport};
use cpn_kinematics::kinematic::{
    cho_check, mc_estimate_with, sigma_constancy_test, sigma_constant_n1,
};
use cpn_kinematics::lagrangian::ParametricLagrangian;
use cpn_kinematics::report::{Report, RunConfig, SampleLog};
use cpn_kinematics::{GeomError, Result};

#[derive(Parser)]
#[command(
    name = "cpnk",
    version,
    about = "Numerical workbench for the kinematic formula on CP^n"
)]
struct Cli {
    /// TOML config file mirroring the flags; flags override file values
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Cap on worker threads (default: machine parallelism)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Report/CSV output directory (or CPNK_OUTPUT_DIR, or ".")
    #[arg(long, global = true)]
    output_dir: Option<String>,
    /// Output format for the printed table: json|csv|text
    #[arg(long, global = true)]
    format: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the closed-form constants table for n = 1..n_max
    Constants {
        #[arg(long)]
        n_max: Option<usize>,
    },
    /// Quadrature volume of a model, compared to its closed form
    Volume {
        /// clifford | rp
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Count #(gP n Q) for one unitary
    Intersect {
        #[arg(long)]
        n: Option<usize>,
        /// P:Q, each clifford | rp
        #[arg(long)]
        pair: Option<String>,
        /// "random" (Haar from --seed) — the only supported source
        #[arg(long)]
        g: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Monte Carlo estimate of E_g[#(gP n Q)] vs the closed form
    Crofton {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        pair: Option<String>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        count_grid: Option<usize>,
        #[arg(long)]
        volume_grid: Option<usize>,
    },
    /// Statistical test that the sigma angle is configuration-independent
    SigmaCheck {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        pairs: Option<usize>,
        #[arg(long)]
        draws: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Deform the Clifford torus by a Hamiltonian flow; report the volume
    Deform {
        /// JSON Hamiltonian spec file
        #[arg(long)]
        hamiltonian: Option<PathBuf>,
        #[arg(long)]
        time: Option<f64>,
        #[arg(long)]
        step: Option<f64>,
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Deformation-bound experiment on CP^2 (count and volume bounds)
    ChoCheck {
        #[arg(long)]
        hamiltonian: Option<PathBuf>,
        /// Draw a random small quartic Hamiltonian from this seed instead
        #[arg(long)]
        quartic_seed: Option<u64>,
        #[arg(long)]
        time: Option<f64>,
        #[arg(long)]
        step: Option<f64>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        count_grid: Option<usize>,
        #[arg(long)]
        volume_grid: Option<usize>,
    },
}

fn usage_error(msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn numerical_error(err: &GeomError) -> ExitCode {
    let diag = json!({
        "error": err.to_string(),
        "kind": format!("{err:?}"),
    });
    eprintln!("{}", serde_json::to_string_pretty(&diag).expect("json"));
    ExitCode::from(3)
}

fn parse_model(name: &str, n: usize) -> Option<ParametricLagrangian> {
    match name {
        "clifford" => Some(ParametricLagrangian::clifford(n)),
        "rp" => Some(ParametricLagrangian::real_projective(n)),
        _ => None,
    }
}

fn parse_pair(pair: &str, n: usize) -> Option<(ParametricLagrangian, ParametricLagrangian)> {
    let (a, b) = pair.split_once(':')?;
    Some((parse_model(a, n)?, parse_model(b, n)?))
}

fn load_hamiltonian(path: &Path) -> Result<HamiltonianSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| GeomError::UnsupportedModel {
        reason: format!("cannot read {}: {e}", path.display()),
    })?;
    let file: HamiltonianSpecFile =
        serde_json::from_str(&text).map_err(|e| GeomError::UnsupportedModel {
            reason: format!("invalid Hamiltonian spec {}: {e}", path.display()),
        })?;
    file.to_spec()
}

fn count_once(
    p: &ParametricLagrangian,
    q: &ParametricLagrangian,
    g: &UnitaryMatrix,
    grid: usize,
) -> Result<IntersectionReport> {
    match q.level_set() {
        Some(target) => count_levelset(p, target, g, grid),
        None => count_parametric(p, q, g, grid),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    let mut config = match &cli.config {
        Some(path) => match RunConfig::from_file(path) {
            Ok(c) => c,
            Err(e) => return usage_error(&e.to_string()),
        },
        None => RunConfig::default(),
    };
    if let Some(t) = cli.threads {
        config.threads = Some(t);
    }
    if let Some(dir) = &cli.output_dir {
        config.output_dir = Some(dir.clone());
    }
    if let Some(fmt) = &cli.format {
        config.format = fmt.clone();
    }
    if !matches!(config.format.as_str(), "json" | "csv" | "text") {
        return usage_error(&format!("unknown format '{}'", config.format));
    }
    if let Some(t) = config.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .ok();
    }

    match run(cli.command, config) {
        Ok(code) => code,
        Err(e) => numerical_error(&e),
    }
}

fn run(command: Command, mut config: RunConfig) -> Result<ExitCode> {
    let start = Instant::now();
    match command {
        Command::Constants { n_max } => {
            if let Some(v) = n_max {
                config.n_max = v;
            }
            config.command = "constants".into();
            let rows: Vec<ConstantsRow> = (1..=config.n_max).map(ConstantsRow::compute).collect();
            match config.format.as_str() {
                "json" => println!(
                    "{}",
                    serde_json::to_string_pretty(&rows).expect("constants json")
                ),
                "csv" => {
                    println!("n,vol_sphere_n,vol_rp_n,vol_clifford_n,eqsup_ratio,lower_bound,a_n");
                    for r in &rows {
                        println!(
                            "{},{:.15e},{:.15e},{:.15e},{:.15e},{:.15e},{:.15e}",
                            r.n,
                            r.vol_sphere_n,
                            r.vol_rp_n,
                            r.vol_clifford_n,
                            r.eqsup_ratio,
                            r.lower_bound,
                            r.a_n
                        );
                    }
                }
                _ => {
                    println!(
                        "{:>2}  {:>14}  {:>14}  {:>14}  {:>14}  {:>14}  {:>10}",
                        "n", "vol(S^n)", "vol(RP^n)", "vol(L_n)", "eqsup_ratio", "lower_bound",
                        "a_n"
                    );
                    for r in &rows {
                        println!(
                            "{:>2}  {:>14.6}  {:>14.6}  {:>14.6}  {:>14.6}  {:>14.6}  {:>10.6}",
                            r.n,
                            r.vol_sphere_n,
                            r.vol_rp_n,
                            r.vol_clifford_n,
                            r.eqsup_ratio,
                            r.lower_bound,
                            r.a_n
                        );
                    }
                    for r in &rows {
                        println!(
                            "n={}: vol(RP^n) = {}, vol(L_n) = {}",
                            r.n, r.vol_rp_n_symbolic, r.vol_clifford_n_symbolic
                        );
                    }
                }
            }
            let dir = config.resolved_output_dir();
            Report::new(config, rows, start.elapsed().as_secs_f64()).write(&dir, "constants")?;
            Ok(ExitCode::SUCCESS)
        }

        Command::Volume { model, n, grid } => {
            if let Some(v) = model {
                config.model = v;
            }
            if let Some(v) = n {
                config.n = v;
            }
            if let Some(v) = grid {
                config.volume_grid = v;
            }
            config.command = "volume".into();
            let model = match parse_model(&config.model, config.n) {
                Some(m) => m,
                None => return Ok(usage_error(&format!("unknown model '{}'", config.model))),
            };
            let estimate = model.volume(config.volume_grid)?;
            let closed = match &model {
                ParametricLagrangian::RealProjective { n } => {
                    cpn_kinematics::constants::rp_volume(*n)
                }
                _ => cpn_kinematics::constants::clifford_volume(config.n),
            };
            let result = json!({
                "model": model.descriptor(),
                "volume": estimate,
                "closed_form": closed,
                "relative_error": (estimate.value - closed).abs() / closed,
            });
            println!(
                "vol = {:.12} (closed form {:.12}, rel err {:.3e}, gauge {:.3e})",
                estimate.value,
                closed,
                (estimate.value - closed).abs() / closed,
                estimate.gauge
            );
            let dir = config.resolved_output_dir();
            Report::new(config, result, start.elapsed().as_secs_f64()).write(&dir, "volume")?;
            Ok(ExitCode::SUCCESS)
        }

        Command::Intersect {
            n,
            pair,
            g,
            seed,
            grid,
        } => {
            if let Some(v) = n {
                config.n = v;
            }
            if let Some(v) = pair {
                config.pair = v;
            }
            if let Some(v) = seed {
                config.master_seed = v;
            }
            if let Some(v) = grid {
                config.count_grid = v;
            }
            config.command = "intersect".into();
            if let Some(src) = g {
                if src != "random" {
                    return Ok(usage_error(&format!("unsupported unitary source '{src}'")));
                }
            }
            let (p, q) = match parse_pair(&config.pair, config.n) {
                Some(pq) => pq,
                None => return Ok(usage_error(&format!("unknown pair '{}'", config.pair))),
            };
            let g = haar_unitary(config.n + 1, SeedStream::derive(config.master_seed, 0))
                .to_special();
            let report = count_once(&p, &q, &g, config.count_grid)?;
            println!(
                "count = {}, min_sigma = {:.6e}, flag = {:?}",
                report.count, report.min_sigma, report.flag
            );
            let result = json!({
                "pair": [p.descriptor(), q.descriptor()],
                "count": report.count,
                "points": report.points_flat(),
                "min_sigma": report.min_sigma,
                "flag": report.flag,
                "method": report.method,
                "diagnostics": report.diagnostics,
            });
            let dir = config.resolved_output_dir();
            Report::new(config, result, start.elapsed().as_secs_f64()).write(&dir, "intersect")?;
            Ok(ExitCode::SUCCESS)
        }

        Command::Crofton {
            n,
            pair,
            samples,
            seed,
            count_grid,
            volume_grid,
        } => {
            if let Some(v) = n {
                config.n = v;
            }
            if let Some(v) = pair {
                config.pair = v;
            }
            if let Some(v) = samples {
                config.samples = v;
            }
            if let Some(v) = seed {
                config.master_seed = v;
            }
            if let Some(v) = count_grid {
                config.count_grid = v;
            }
            if let Some(v) = volume_grid {
                config.volume_grid = v;
            }
            config.command = "crofton".into();
            let (p, q) = match parse_pair(&config.pair, config.n) {
                Some(pq) => pq,
                None => return Ok(usage_error(&format!("unknown pair '{}'", config.pair))),
            };
            let dir = config.resolved_output_dir();
            let mut log = SampleLog::create(&dir, "crofton")?;
            let estimate = mc_estimate_with(
                &p,
                &q,
                config.samples,
                config.master_seed,
                config.count_grid,
                config.volume_grid,
                |row| log.push(row),
            )?;
            println!(
                "mean = {:.6} +- {:.6} (predicted {:.6}, z = {:+.3}, excluded {:.2}%)",
                estimate.mean,
                estimate.std_error,
                estimate.predicted,
                estimate.z_score,
                100.0 * estimate.excluded_fraction
            );
            let pass = estimate.z_score.abs() <= 3.0;
            Report::new(config, &estimate, start.elapsed().as_secs_f64()).write(&dir, "crofton")?;
            Ok(if pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }

        Command::SigmaCheck {
            n,
            pairs,
            draws,
            seed,
        } => {
            if let Some(v) = n {
                config.n = v;
            }
            if let Some(v) = pairs {
                config.pairs = v;
            }
            if let Some(v) = draws {
                config.draws = v;
            }
            if let Some(v) = seed {
                config.master_seed = v;
            }
            config.command = "sigma-check".into();
            let report =
                sigma_constancy_test(config.n, config.pairs, config.draws, config.master_seed)?;
            println!("max pairwise z = {:.3}", report.max_pairwise_z);
            let mut pass = report.max_pairwise_z <= 3.0;
            let mut result = serde_json::to_value(&report).expect("sigma json");
            if config.n == 1 {
                let target = sigma_constant_n1();
                let worst = report
                    .configs
                    .iter()
                    .map(|c| (c.mean - target).abs() / c.std_error.max(1e-300))
                    .fold(0.0f64, f64::max);
                result["analytic_n1"] = json!({"expected": target, "max_z": worst});
                println!("n=1 analytic 2/pi = {target:.6}, max z vs analytic = {worst:.3}");
                pass = pass && worst <= 3.0;
            }
            let dir = config.resolved_output_dir();
            Report::new(config, result, start.elapsed().as_secs_f64()).write(&dir, "sigma_check")?;
            Ok(if pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }

        Command::Deform {
            hamiltonian,
            time,
            step,
            grid,
        } => {
            if let Some(p) = &hamiltonian {
                config.hamiltonian = Some(p.display().to_string());
            }
            if let Some(v) = time {
                config.time = v;
            }
            if let Some(v) = step {
                config.step = v;
            }
            if let Some(v) = grid {
                config.volume_grid = v;
            }
            config.command = "deform".into();
            let path = match &config.hamiltonian {
                Some(p) => PathBuf::from(p),
                None => return Ok(usage_error("deform requires --hamiltonian FILE")),
            };
            let spec = load_hamiltonian(&path)?;
            let n = spec.ambient_dim() - 1;
            let model = ParametricLagrangian::deformed(
                ParametricLagrangian::clifford(n),
                spec,
                config.time,
                config.step,
            )?;
            let omega = model.max_symplectic_residual(12)?;
            let estimate = model.volume(config.volume_grid.min(32))?;
            println!(
                "vol = {:.10} (gauge {:.3e}), max |omega| residual = {:.3e}",
                estimate.value, estimate.gauge, omega
            );
            let result = json!({
                "model": model.descriptor(),
                "volume": estimate,
                "max_symplectic_residual": omega,
            });
            let dir = config.resolved_output_dir();
            Report::new(config, result, start.elapsed().as_secs_f64()).write(&dir, "deform")?;
            Ok(ExitCode::SUCCESS)
        }

        Command::ChoCheck {
            hamiltonian,
            quartic_seed,
            time,
            step,
            samples,
            seed,
            count_grid,
            volume_grid,
        } => {
            if let Some(p) = &hamiltonian {
                config.hamiltonian = Some(p.display().to_string());
            }
            if let Some(v) = time {
                config.time = v;
            }
            if let Some(v) = step {
                config.step = v;
            }
            if let Some(v) = samples {
                config.samples = v;
            }
            if let Some(v) = seed {
                config.master_seed = v;
            }
            if let Some(v) = count_grid {
                config.count_grid = v;
            }
            if let Some(v) = volume_grid {
                config.volume_grid = v;
            }
            config.command = "cho-check".into();
            let spec = match (&config.hamiltonian, quartic_seed) {
                (Some(path), None) => load_hamiltonian(Path::new(path))?,
                (None, Some(s)) => random_quartic(3, 0.2, SeedStream::derive(s, 0)),
                _ => {
                    return Ok(usage_error(
                        "cho-check requires exactly one of --hamiltonian, --quartic-seed",
                    ))
                }
            };
            let report = cho_check(
                spec,
                config.time,
                config.step,
                config.samples,
                config.master_seed,
                config.count_grid,
                config.volume_grid,
            )?;
            println!(
                "min clean count = {}, vol ratio = {:.8} (bound {:.8}), z = {:+.3}, Oh observed: {}",
                report.min_clean_count,
                report.volume_ratio,
                report.ratio_bound,
                report.estimate.z_score,
                report.oh_conjecture_observed
            );
            let dir = config.resolved_output_dir();
            let mut log = SampleLog::create(&dir, "cho_check")?;
            for row in &report.estimate.rows {
                log.push(row);
            }
            let pass = report.min_clean_count >= 4
                && report.ratio_bound_satisfied
                && report.estimate.z_score.abs() <= 3.0;
            Report::new(config, &report, start.elapsed().as_secs_f64()).write(&dir, "cho_check")?;
            Ok(if pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
    }
}
