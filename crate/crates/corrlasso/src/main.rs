//! Command-line front end: fitting, certification, tuning, generation, and
//! the Monte Carlo scenario runner.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use corrlasso::bounds::{self, BoundId, BoundInputs};
use corrlasso::compat::{compat_factor, ConeSpec};
use corrlasso::designs;
use corrlasso::error::Error;
use corrlasso::experiments::{
    deserialize_report, run_scenario, serialize_report, ScenarioConfig, ScenarioId, ScenarioPatch,
};
use corrlasso::io;
use corrlasso::lasso::{fit_lasso, prediction_loss, RegressionInstance};
use corrlasso::linalg::{correlation_weights, SupportSet};
use corrlasso::tv::fit_tv;

#[derive(Parser)]
#[command(
    name = "corrlasso",
    about = "Lasso/TV estimation, compatibility certification, and bound verification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the Lasso on a design/response pair and print the fit as JSON.
    FitLasso {
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        y: PathBuf,
        #[arg(long)]
        lambda: f64,
        /// Warm-start coefficients.
        #[arg(long)]
        start: Option<PathBuf>,
        /// True coefficients; adds the prediction loss to the output.
        #[arg(long)]
        beta_star: Option<PathBuf>,
    },
    /// TV-denoise a signal: estimate as CSV, diagnostics as JSON on stderr.
    FitTv {
        #[arg(long)]
        y: PathBuf,
        #[arg(long)]
        lambda: f64,
        /// Write the estimate here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Certify a compatibility factor and print the certificate as JSON.
    Compat {
        #[arg(long)]
        x: PathBuf,
        /// Support as comma-separated one-based indices.
        #[arg(long)]
        t: String,
        /// Cone opening: cbar for the plain factor, gamma for weighted ones.
        #[arg(long)]
        cbar: f64,
        #[arg(long, default_value_t = 1e-3)]
        eps: f64,
        #[arg(long, value_enum, default_value_t = WeightMode::None)]
        weights: WeightMode,
    },
    /// Evaluate a risk-bound right-hand side.
    Bound {
        #[arg(long)]
        id: String,
        /// Comma-separated name=value pairs.
        #[arg(long)]
        inputs: String,
    },
    /// Evaluate a tuning rule.
    Tune {
        #[arg(long, value_enum)]
        rule: TuneRule,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        p: Option<usize>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        rho: Option<f64>,
        /// Total variation of the monotone projection.
        #[arg(long)]
        v: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        l: Option<f64>,
        /// Design matrix (cluster rule).
        #[arg(long)]
        x: Option<PathBuf>,
        /// Clusters as semicolon-separated groups of one-based indices,
        /// e.g. "1,2;3,4,5".
        #[arg(long)]
        partition: Option<String>,
    },
    /// Generate a design/signal instance, writing X.csv, beta.csv, meta.json.
    Generate {
        #[arg(long, value_enum)]
        kind: GenerateKind,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: Option<usize>,
        #[arg(long)]
        s: Option<usize>,
        #[arg(long, default_value_t = 0.0)]
        eta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Run a Monte Carlo scenario from a JSON config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Exit with code 2 if coverage misses the configured floor.
        #[arg(long)]
        assert: bool,
    },
    /// Re-validate a stored report (schema + round trip).
    CheckReport {
        #[arg(long)]
        report: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum WeightMode {
    /// Plain factor kappa_{T,cbar}.
    None,
    /// Weighted factor with the raw column weights omega.
    Auto,
    /// Weighted factor with the normalized weights omega-bar.
    Normalized,
}

#[derive(Clone, Copy, ValueEnum)]
enum TuneRule {
    Universal,
    Correlated,
    Monotone,
    Holder,
    Cluster,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenerateKind {
    Example1,
    Collinear,
    Tv,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}

fn missing(name: &'static str) -> Error {
    Error::Domain {
        name,
        detail: "required for this rule".into(),
    }
}

fn run(cli: Cli) -> corrlasso::Result<ExitCode> {
    match cli.command {
        Command::FitLasso {
            x,
            y,
            lambda,
            start,
            beta_star,
        } => {
            let design = io::read_design_csv(&x)?;
            let response = io::read_vector_csv(&y)?;
            let start = start.map(io::read_vector_csv).transpose()?;
            let inst = RegressionInstance::new(design, response)?;
            let fit = fit_lasso(&inst, lambda, start.as_deref())?;
            let mut out = serde_json::to_value(&fit)?;
            if let Some(path) = beta_star {
                let truth = io::read_vector_csv(path)?;
                let loss = prediction_loss(&inst.x, &fit.coefficients, &truth)?;
                out["loss"] = json!(loss);
            }
            println!("{}", serde_json::to_string_pretty(&out)?);
        }
        Command::FitTv { y, lambda, out } => {
            let signal = io::read_vector_csv(&y)?;
            let fit = fit_tv(&signal, lambda)?;
            let csv = io::vector_to_csv(&fit.signal_estimate);
            match out {
                Some(path) => std::fs::write(path, csv)?,
                None => print!("{csv}"),
            }
            let diagnostics = json!({
                "lambda": fit.lambda,
                "lasso_lambda": fit.lasso.lambda,
                "kkt_inf_norm": fit.lasso.kkt_inf_norm,
                "max_active_violation": fit.lasso.max_active_violation,
                "iterations": fit.lasso.iterations,
                "jumps": fit.lasso.coefficients.iter().filter(|b| **b != 0.0).count(),
            });
            eprintln!("{}", serde_json::to_string_pretty(&diagnostics)?);
        }
        Command::Compat {
            x,
            t,
            cbar,
            eps,
            weights,
        } => {
            let design = io::read_design_csv(&x)?;
            let support = SupportSet::parse_one_based(&t)?;
            support.validate_for(design.p())?;
            let cone = match weights {
                WeightMode::None => ConeSpec::plain(support, cbar)?,
                WeightMode::Auto => {
                    let (omega, _) = correlation_weights(&design, &support)?;
                    ConeSpec::weighted(support, cbar, omega)?
                }
                WeightMode::Normalized => {
                    let (_, bar) = correlation_weights(&design, &support)?;
                    ConeSpec::weighted(support, cbar, bar)?
                }
            };
            let cert = compat_factor(&design, &cone, eps)?;
            println!("{}", serde_json::to_string_pretty(&cert)?);
        }
        Command::Bound { id, inputs } => {
            let id = BoundId::parse(&id)?;
            let map = parse_inputs(&inputs)?;
            let value = bounds::evaluate_bound(id, &map)?;
            println!("{}", serde_json::to_string_pretty(&value)?);
        }
        Command::Tune {
            rule,
            sigma,
            n,
            p,
            delta,
            gamma,
            rho,
            v,
            alpha,
            l,
            x,
            partition,
        } => {
            let sigma_v = sigma.ok_or_else(|| missing("sigma"));
            let n_v = n.ok_or_else(|| missing("n"));
            let delta_v = delta.ok_or_else(|| missing("delta"));
            let result = match rule {
                TuneRule::Universal => bounds::universal_lambda(
                    sigma_v?,
                    p.ok_or_else(|| missing("p"))?,
                    n_v?,
                    delta_v?,
                    gamma.unwrap_or(2.0),
                )?,
                TuneRule::Correlated => bounds::correlated_lambda(
                    sigma_v?,
                    rho.ok_or_else(|| missing("rho"))?,
                    p.ok_or_else(|| missing("p"))?,
                    n_v?,
                    delta_v?,
                    gamma.unwrap_or(2.0),
                )?,
                TuneRule::Monotone => bounds::monotone_tuning(
                    v.ok_or_else(|| missing("v"))?,
                    sigma_v?,
                    n_v?,
                    delta_v?,
                )?,
                TuneRule::Holder => bounds::holder_tuning(
                    l.ok_or_else(|| missing("l"))?,
                    alpha.ok_or_else(|| missing("alpha"))?,
                    sigma_v?,
                    n_v?,
                    delta_v?,
                )?,
                TuneRule::Cluster => {
                    let design = io::read_design_csv(x.ok_or_else(|| missing("x"))?)?;
                    let spec = partition.ok_or_else(|| missing("partition"))?;
                    let clusters: Vec<SupportSet> = spec
                        .split(';')
                        .map(SupportSet::parse_one_based)
                        .collect::<corrlasso::Result<_>>()?;
                    bounds::cluster_tuning(&design, &clusters, sigma_v?, delta_v?)?
                }
            };
            let mut out = serde_json::to_value(&result)?;
            if let Some(t) = result.support {
                out["support_one_based"] = json!(t.to_one_based_string());
            }
            println!("{}", serde_json::to_string_pretty(&out)?);
        }
        Command::Generate {
            kind,
            n,
            p,
            s,
            eta,
            seed,
            out_dir,
        } => {
            let inst = match kind {
                GenerateKind::Example1 => designs::example1_design(n)?,
                GenerateKind::Collinear => {
                    let p = p.ok_or_else(|| missing("p"))?;
                    let s = s.ok_or_else(|| missing("s"))?;
                    designs::collinear_design(n, p, s, eta, seed)?
                }
                GenerateKind::Tv => {
                    let jumps = s.unwrap_or(3);
                    let gap = n / (jumps + 1);
                    if gap < 2 {
                        return Err(Error::Domain {
                            name: "s",
                            detail: "too many jumps for n".into(),
                        });
                    }
                    let positions = SupportSet::new((1..=jumps).map(|k| k * gap).collect())?;
                    let mut rng = designs::stream_rng(seed, 0);
                    let mut levels = vec![0.0];
                    for k in 0..jumps {
                        use rand::Rng;
                        let mag = 1.0 + rng.gen_range(0.0..1.0);
                        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                        levels.push(levels[k] + sign * mag);
                    }
                    designs::piecewise_constant_signal(n, &positions, &levels)?
                }
            };
            std::fs::create_dir_all(&out_dir)?;
            io::write_matrix_csv(out_dir.join("X.csv"), inst.x.matrix())?;
            io::write_vector_csv(out_dir.join("beta.csv"), &inst.beta_star)?;
            if let Some(f) = &inst.f_star {
                io::write_vector_csv(out_dir.join("f_star.csv"), f)?;
            }
            let meta = json!({
                "generator": inst.meta,
                "n": inst.x.n(),
                "p": inst.x.p(),
                "sigma": inst.sigma,
                "seed": inst.seed,
            });
            std::fs::write(
                out_dir.join("meta.json"),
                serde_json::to_string_pretty(&meta)?,
            )?;
        }
        Command::Simulate {
            config,
            trials,
            seed,
            out,
            csv,
            assert,
        } => {
            let text = std::fs::read_to_string(&config)?;
            let id_probe: serde_json::Value = serde_json::from_str(&text)?;
            let id: ScenarioId = serde_json::from_value(
                id_probe
                    .get("scenario_id")
                    .cloned()
                    .ok_or_else(|| missing("scenario_id"))?,
            )?;
            let mut scenario = ScenarioConfig::preset(id);
            let patch: ScenarioPatch = serde_json::from_str(&text)?;
            scenario.apply_patch(patch);
            if let Some(t) = trials {
                scenario.trials = t;
            }
            if let Some(s) = seed {
                scenario.seed = s;
            }
            let report = run_scenario(&scenario)?;
            let bytes = serialize_report(&report)?;
            match &out {
                Some(path) => std::fs::write(path, &bytes)?,
                None => println!("{}", String::from_utf8_lossy(&bytes)),
            }
            if let Some(path) = csv {
                std::fs::write(path, report.to_csv())?;
            }
            if assert {
                let floor = scenario.min_coverage.unwrap_or(0.0);
                let coverage = report.empirical_coverage.unwrap_or(0.0);
                if coverage < floor {
                    eprintln!("coverage {coverage} below the configured floor {floor}");
                    return Ok(ExitCode::from(2));
                }
            }
        }
        Command::CheckReport { report } => {
            let bytes = std::fs::read(&report)?;
            let parsed = deserialize_report(&bytes)?;
            println!(
                "ok: {} trials, coverage {:?}",
                parsed.trials.len(),
                parsed.empirical_coverage
            );
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn parse_inputs(spec: &str) -> corrlasso::Result<BoundInputs> {
    let mut map = BoundInputs::new();
    for pair in spec.split(',') {
        let pair = pair.trim();
        if pair.is_empty() {
            continue;
        }
        let (name, value) = pair.split_once('=').ok_or_else(|| Error::Domain {
            name: "inputs",
            detail: format!("`{pair}` is not name=value"),
        })?;
        let parsed: f64 = value.trim().parse().map_err(|_| Error::Domain {
            name: "inputs",
            detail: format!("`{value}` is not a number"),
        })?;
        map.insert(name.trim().to_string(), parsed);
    }
    Ok(map)
}
