use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use barron_lab::classifier::{sample_noiseless, Classifier, PiecewiseClassifier};
use barron_lab::entropy::{kappa_bounds, nn_entropy_bound, rate_exponents, ratio_f64, solve_eps_n, EntropyRateParams};
use barron_lab::erm::{misclassification_error, plan_architecture, train_erm, TrainConfig, TrainedNetDocument};
use barron_lab::experiment::{
    configure_workers, cover_study, packing_study, rate_csv, rate_json, rate_svg, run_default_identity_suite,
    run_rate_sweep, to_canonical_json, write_text, EntropySpec, ExperimentConfig, ExperimentKind, IdentitySpec,
};
use barron_lab::{LabError, Result};

#[derive(Parser)]
#[command(name = "lab", version, about = "Barron-boundary classification experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the end-to-end learning-rate sweep.
    RateSweep {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        out: OutArgs,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Run any experiment config, dispatching on its `kind`.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Randomized check of the density-lift identities.
    IdentitySuite {
        #[arg(long, default_value_t = 200)]
        instances: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Packing, covering and entropy-rate tools.
    Entropy {
        #[command(subcommand)]
        command: EntropyCommand,
    },
    /// Rate calculators.
    Calc {
        #[command(subcommand)]
        command: CalcCommand,
    },
    /// Draw a random regular classifier and write it as JSON.
    Classifier {
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 1)]
        pieces: usize,
        #[arg(long, default_value_t = 1.0)]
        budget: f64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit a network to a noiseless sample of a stored classifier.
    Train {
        #[arg(long)]
        classifier: PathBuf,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 1.5e-4)]
        scale: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Barron budget `R` of the boundaries.
        #[arg(long, default_value_t = 1.0)]
        budget: f64,
        #[arg(long, default_value_t = 1.0)]
        tau: f64,
        #[arg(long, default_value_t = 100_000)]
        n_mc: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct OutArgs {
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Subcommand)]
enum EntropyCommand {
    /// Bump-lattice packing sets and their size.
    Pack {
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long, value_delimiter = ',', default_value = "16,32,64")]
        grid_sizes: Vec<usize>,
        #[arg(long, default_value_t = 1.0)]
        budget: f64,
        #[arg(long, default_value_t = 11)]
        seed: u64,
        #[arg(long, default_value_t = 1 << 16)]
        max_count: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Sparse quantized Fourier nets for random class members.
    Cover {
        #[arg(long, value_delimiter = ',', default_value = "0.4,0.2")]
        eps: Vec<f64>,
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long, default_value_t = 1.0)]
        budget: f64,
        #[arg(long, default_value_t = 50)]
        members: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 4096)]
        grid_res: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Root of `n ε² = C max(1, 1/ε)^α ln^β(2 + 1/ε)`.
    SolveEps {
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 0.0)]
        beta: f64,
        #[arg(long, value_delimiter = ',')]
        n: Vec<f64>,
    },
    /// Rate exponents and `κ` bounds for dimension `d`.
    Rates {
        #[arg(long)]
        d: usize,
        #[arg(long, value_delimiter = ',', default_value = "100,1000,10000")]
        m: Vec<f64>,
    },
}

#[derive(Subcommand)]
enum CalcCommand {
    /// Minimax exponents for dimension `d`.
    Rates {
        #[arg(long)]
        d: usize,
    },
    /// Log-cardinality bound for sparse bounded ReLU networks.
    NnEntropy {
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        w: usize,
        #[arg(long)]
        b: f64,
    },
}

fn emit(text: &str, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => write_text(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn sweep(cfg: &ExperimentConfig, csv: Option<&Path>, json: Option<&Path>, svg: Option<&Path>) -> Result<()> {
    let report = run_rate_sweep(cfg)?;
    let csv = csv.or(cfg.output.csv.as_deref());
    let json = json.or(cfg.output.json.as_deref());
    let svg = svg.or(cfg.output.svg.as_deref());
    if let Some(p) = csv {
        write_text(p, &rate_csv(&report))?;
    }
    if let Some(p) = json {
        write_text(p, &rate_json(&report)?)?;
    }
    if let Some(p) = svg {
        write_text(p, &rate_svg(&report))?;
    }
    for row in &report.medians {
        eprintln!(
            "m = {:>6}  median error {:.5}  ({} seeds)",
            row.m, row.median_error, row.seeds_used
        );
    }
    match report.slope {
        Some(s) => eprintln!(
            "slope {s:.4} ± {:.4}; rate envelope [{:.4}, {:.4}]; acceptance window [{}, {}]",
            report.slope_stderr.unwrap_or(f64::NAN),
            report.windows.envelope[0],
            report.windows.envelope[1],
            report.windows.acceptance[0],
            report.windows.acceptance[1]
        ),
        None => eprintln!("slope unavailable: {:?}", report.flags),
    }
    if csv.is_none() && json.is_none() {
        print!("{}", rate_csv(&report));
    }
    Ok(())
}

fn identity(spec: &IdentitySpec, json: Option<&Path>) -> Result<bool> {
    let table = run_default_identity_suite(spec)?;
    print!("{}", table.render());
    if let Some(p) = json {
        write_text(p, &to_canonical_json(&table)?)?;
    }
    Ok(table.passed())
}

fn pack(spec: &EntropySpec, out: &OutArgs) -> Result<()> {
    let study = packing_study(spec)?;
    if let Some(p) = &out.json {
        write_text(p, &to_canonical_json(&study)?)?;
    }
    emit(&study.csv(), out.csv.as_deref())?;
    for r in &study.achieved {
        eprintln!(
            "N = {:>3}: {} of {} members, min units {}, eps {:.3e}",
            r.grid_size, r.count, r.target, r.min_units, r.eps
        );
    }
    match study.slopes.fitted {
        Some(s) => eprintln!("fitted exponent {s:.4}, reference {:.4}", study.slopes.reference),
        None => eprintln!("fitted exponent needs at least three grid sizes"),
    }
    Ok(())
}

fn calc_rates(d: usize) -> Result<()> {
    let e = rate_exponents(d)?;
    println!("d = {d}");
    println!("lower_exp      {} = {:.6}", e.lower_exp, ratio_f64(e.lower_exp));
    println!("log_exp_lower  {} = {:.6}", e.log_exp_lower, ratio_f64(e.log_exp_lower));
    println!("log_exp_upper  {} = {:.6}", e.log_exp_upper, ratio_f64(e.log_exp_upper));
    println!("alpha = beta   {} = {:.6}", e.alpha_beta, ratio_f64(e.alpha_beta));
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn train(
    path: &Path,
    m: usize,
    scale: f64,
    seed: u64,
    budget: f64,
    tau: f64,
    n_mc: usize,
    out: Option<&Path>,
) -> Result<()> {
    let h = PiecewiseClassifier::load(path)?;
    let plan = plan_architecture(m, h.dim(), h.pieces().len(), budget, tau, scale)?;
    let sample = sample_noiseless(&h, m, seed)?;
    let cfg = TrainConfig {
        seed,
        ..TrainConfig::default()
    };
    let fit = train_erm(&sample, &plan, &cfg)?;
    let err = misclassification_error(&fit.net, &h, n_mc, seed.wrapping_add(1))?;
    eprintln!(
        "width {} weights {} bound {}: hinge risk {:.5}, misclassification {:.5} ± {:.5}",
        plan.width,
        plan.weights,
        plan.bound,
        fit.achieved_risk,
        err.value,
        err.half_width.unwrap_or(0.0)
    );
    let doc = TrainedNetDocument::new(&plan, &fit.net, fit.achieved_risk, seed);
    emit(&(serde_json::to_string_pretty(&doc)? + "\n"), out)
}

fn run(cli: Cli) -> Result<bool> {
    configure_workers()?;
    match cli.command {
        Command::RateSweep { config, out, svg } => {
            sweep(
                &ExperimentConfig::load(&config)?,
                out.csv.as_deref(),
                out.json.as_deref(),
                svg.as_deref(),
            )?;
        }
        Command::Run { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            match cfg.kind {
                ExperimentKind::RateSweep => sweep(&cfg, None, None, None)?,
                ExperimentKind::IdentitySuite => return identity(&cfg.identity, cfg.output.json.as_deref()),
                ExperimentKind::EntropyCurve => pack(
                    &cfg.entropy,
                    &OutArgs {
                        csv: cfg.output.csv.clone(),
                        json: cfg.output.json.clone(),
                    },
                )?,
                ExperimentKind::Calc => calc_rates(cfg.calc_dim)?,
            }
        }
        Command::IdentitySuite { instances, seed, json } => {
            let spec = IdentitySpec {
                instances,
                seed,
                ..IdentitySpec::default()
            };
            return identity(&spec, json.as_deref());
        }
        Command::Entropy { command } => match command {
            EntropyCommand::Pack {
                dim,
                grid_sizes,
                budget,
                seed,
                max_count,
                out,
            } => pack(
                &EntropySpec {
                    dim,
                    grid_sizes,
                    budget,
                    seed,
                    max_count,
                },
                &out,
            )?,
            EntropyCommand::Cover {
                eps,
                dim,
                budget,
                members,
                seed,
                grid_res,
                out,
            } => {
                let study = cover_study(&eps, dim, budget, members, seed, grid_res)?;
                if let Some(p) = &out.json {
                    write_text(p, &to_canonical_json(&study)?)?;
                }
                emit(&study.csv(), out.csv.as_deref())?;
                for r in &study.achieved {
                    eprintln!(
                        "eps {}: pass rate {:.3}, worst sup distance {:.4}, ln bound {:.4e}",
                        r.eps, r.pass_rate, r.worst_sup_distance, r.ln_cover_bound
                    );
                }
            }
            EntropyCommand::SolveEps { c, alpha, beta, n } => {
                if n.is_empty() {
                    return Err(LabError::Config("pass at least one --n".into()));
                }
                println!("n,eps_n");
                for n in n {
                    println!("{n},{:.12e}", solve_eps_n(c, alpha, beta, n)?);
                }
            }
            EntropyCommand::Rates { d, m } => {
                calc_rates(d)?;
                let p = EntropyRateParams::barron(d)?;
                println!("m,kappa1,kappa2");
                for m in m {
                    let (k1, k2) = kappa_bounds(&p, m)?;
                    println!("{m},{k1:.6e},{k2:.6e}");
                }
            }
        },
        Command::Calc { command } => match command {
            CalcCommand::Rates { d } => calc_rates(d)?,
            CalcCommand::NnEntropy { delta, d, w, b } => println!("{}", nn_entropy_bound(delta, d, w, b)?),
        },
        Command::Classifier {
            dim,
            pieces,
            budget,
            seed,
            out,
        } => {
            let h = PiecewiseClassifier::random_regular(dim, pieces, budget, 4, 4, seed)?;
            emit(&(h.to_json()? + "\n"), out.as_deref())?;
        }
        Command::Train {
            classifier,
            m,
            scale,
            seed,
            budget,
            tau,
            n_mc,
            out,
        } => train(&classifier, m, scale, seed, budget, tau, n_mc, out.as_deref())?,
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
