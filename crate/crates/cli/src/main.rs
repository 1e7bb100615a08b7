//! `gpc`: validate products, factorize states, run the scenario catalog and
//! the mixed-state checks from the command line.

mod error;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use gpc_core::catalog::{self, Overrides};
use gpc_core::kernel::{kron_all, DEFAULT_REL_TOL};
use gpc_core::mixed::{ensemble_to_density, separable_companion};
use gpc_core::random::{gaussian_vector, stream_rng};
use gpc_core::{
    classify, ppt_witness, AlsConfig, Ensemble, GeneralProduct, ProductFamily, ReportDocument, StateVector,
    Tolerances,
};

use crate::error::CliError;

/// Largest `||apply - L kron||` accepted by `universal-check`.
const UNIVERSAL_TOL: f64 = 1e-12;
/// Largest `||rho - L sigma' L^dagger||_F` accepted by `mixed --check reconstruct`.
const COMPANION_TOL: f64 = 1e-10;

#[derive(Parser)]
#[command(name = "gpc", version, about = "Factorizability of states under general multilinear products")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a product file and report arity, dimensions and injectivity.
    Validate(ValidateArgs),
    /// Classify a state as factorizable or entangled under a product.
    Factorize(FactorizeArgs),
    /// Compare apply() with the universal map on random factor tuples.
    UniversalCheck(UniversalArgs),
    /// List or run the built-in scenarios.
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
    },
    /// Amplitude profile of a product of uniform states under integer multiplication.
    Primes(PrimesArgs),
    /// Mixed-state checks on an ensemble of product states.
    Mixed(MixedArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MixedCheck {
    Ppt,
    Reconstruct,
}

#[derive(Args)]
struct OutputArgs {
    /// Write the result here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long)]
    tol_fact: Option<f64>,
    #[arg(long)]
    tol_ent: Option<f64>,
    #[arg(long)]
    starts: Option<usize>,
    #[arg(long)]
    max_sweeps: Option<usize>,
    #[arg(long, env = "GPC_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ValidateArgs {
    /// Product file or `builtin:NAME(args)`.
    #[arg(long)]
    product: String,
    #[arg(long)]
    format: Option<Format>,
}

#[derive(Args)]
struct FactorizeArgs {
    #[arg(long)]
    product: String,
    /// State file (JSON).
    #[arg(long)]
    state: PathBuf,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    output: OutputArgs,
    #[arg(long)]
    format: Option<Format>,
}

#[derive(Args)]
struct UniversalArgs {
    #[arg(long)]
    product: String,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, env = "GPC_SEED", default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Subcommand)]
enum CatalogAction {
    /// Print the scenario descriptors.
    List,
    /// Run one scenario, or all of them with --all.
    Run(CatalogRunArgs),
}

#[derive(Args)]
struct CatalogRunArgs {
    #[arg(required_unless_present = "all", conflicts_with = "all")]
    name: Option<String>,
    #[arg(long)]
    all: bool,
    #[arg(long)]
    size: Option<usize>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    tol_fact: Option<f64>,
    #[arg(long)]
    tol_ent: Option<f64>,
    #[arg(long)]
    starts: Option<usize>,
    #[arg(long, env = "GPC_SEED")]
    seed: Option<u64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct PrimesArgs {
    #[arg(long = "max", default_value_t = 100)]
    n_max: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct MixedArgs {
    #[arg(long)]
    product: String,
    /// Ensemble file (JSON).
    #[arg(long)]
    ensemble: PathBuf,
    #[arg(long, value_enum)]
    check: MixedCheck,
    #[command(flatten)]
    output: OutputArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let message = e.to_string().replace(['\n', '\r'], " ");
            eprintln!("error[{}]: {message}", e.code());
            ExitCode::from(e.exit_status())
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Validate(a) => validate(a),
        Command::Factorize(a) => factorize(a),
        Command::UniversalCheck(a) => universal_check(a),
        Command::Catalog { action } => catalog_cmd(action),
        Command::Primes(a) => primes(a),
        Command::Mixed(a) => mixed(a),
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &Path, what: &'static str) -> Result<T, CliError> {
    serde_json::from_str(&read(path)?).map_err(|source| CliError::Parse {
        what,
        path: path.to_path_buf(),
        source,
    })
}

fn load_product(source: &str) -> Result<GeneralProduct, CliError> {
    match source.strip_prefix("builtin:") {
        Some(spec) => Ok(ProductFamily::parse(spec)?.build()?),
        None => parse_json(Path::new(source), "product"),
    }
}

fn json_only(format: Option<Format>) -> Result<(), CliError> {
    match format {
        Some(Format::Csv) => Err(CliError::Usage("csv output is only available for `primes`".into())),
        _ => Ok(()),
    }
}

fn emit(out: &OutputArgs, text: &str) -> Result<(), CliError> {
    match &out.out {
        Some(path) => fs::write(path, text).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|source| CliError::Io {
                    path: PathBuf::from("<stdout>"),
                    source,
                })
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct ValidateSummary {
    name: String,
    arity: usize,
    input_dims: Vec<usize>,
    output_dim: usize,
    nnz: usize,
    universal_rank: usize,
    domain_dim: usize,
    injective: bool,
}

fn validate(a: ValidateArgs) -> Result<(), CliError> {
    json_only(a.format)?;
    let p = load_product(&a.product)?;
    let rank = p.universal_rank(DEFAULT_REL_TOL)?;
    let summary = ValidateSummary {
        name: p.to_string(),
        arity: p.arity(),
        input_dims: p.input_dims().to_vec(),
        output_dim: p.output_dim(),
        nnz: p.nnz(),
        universal_rank: rank,
        domain_dim: p.domain_dim(),
        injective: rank == p.domain_dim(),
    };
    let text = if a.format == Some(Format::Json) {
        to_json(&summary)
    } else {
        format!(
            "product: {}\narity: {}\ninput dims: {:?}\noutput dim: {}\nnnz: {}\nuniversal rank: {} of {}\ninjective: {}\n",
            summary.name,
            summary.arity,
            summary.input_dims,
            summary.output_dim,
            summary.nnz,
            summary.universal_rank,
            summary.domain_dim,
            summary.injective
        )
    };
    emit(&OutputArgs { out: None }, &text)
}

fn factorize(a: FactorizeArgs) -> Result<(), CliError> {
    json_only(a.format)?;
    let p = load_product(&a.product)?;
    let target: StateVector = parse_json(&a.state, "state")?;
    let defaults = AlsConfig::default();
    let cfg = AlsConfig {
        starts: a.solver.starts.unwrap_or(defaults.starts),
        max_sweeps: a.solver.max_sweeps.unwrap_or(defaults.max_sweeps),
        seed: a.solver.seed,
        ..defaults
    };
    let tol_defaults = Tolerances::default();
    let tol = Tolerances {
        tol_fact: a.solver.tol_fact.unwrap_or(tol_defaults.tol_fact),
        tol_ent: a.solver.tol_ent.unwrap_or(tol_defaults.tol_ent),
        ..tol_defaults
    };
    let report = classify(&p, &target, &cfg, &tol)?;
    let doc = ReportDocument::new(&p, cfg, tol, report);
    emit(&a.output, &to_json(&doc))?;
    if a.output.out.is_some() {
        let verdict = serde_json::to_value(doc.report.verdict).expect("verdict serializes");
        println!(
            "verdict: {}, relative residual: {:e}",
            verdict.as_str().unwrap_or_default(),
            doc.report.relative_residual
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct UniversalSummary {
    product: String,
    trials: usize,
    seed: u64,
    max_deviation: f64,
    tolerance: f64,
    pass: bool,
}

fn universal_check(a: UniversalArgs) -> Result<(), CliError> {
    if a.trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    let p = load_product(&a.product)?;
    let l = p.universal_map().into_matrix();
    let mut rng = stream_rng(a.seed, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..a.trials {
        let f: Vec<_> = p.input_dims().iter().map(|&d| gaussian_vector(&mut rng, d)).collect();
        let direct = p.apply_vectors(&f)?;
        worst = worst.max((direct - &l * kron_all(&f)).norm());
    }
    let summary = UniversalSummary {
        product: p.to_string(),
        trials: a.trials,
        seed: a.seed,
        max_deviation: worst,
        tolerance: UNIVERSAL_TOL,
        pass: worst <= UNIVERSAL_TOL,
    };
    emit(&a.output, &to_json(&summary))?;
    if summary.pass {
        Ok(())
    } else {
        Err(CliError::CheckFailed(format!("max deviation {worst:e} exceeds {UNIVERSAL_TOL:e}")))
    }
}

fn catalog_cmd(action: CatalogAction) -> Result<(), CliError> {
    match action {
        CatalogAction::List => {
            print!("{}", to_json(&catalog::list_scenarios()));
            Ok(())
        }
        CatalogAction::Run(a) => {
            let o = Overrides {
                size: a.size,
                q: a.q,
                p: a.p,
                tol_fact: a.tol_fact,
                tol_ent: a.tol_ent,
                seed: a.seed,
                starts: a.starts,
            };
            let reports = match &a.name {
                Some(name) => vec![catalog::run_scenario(name, &o)?],
                None => catalog::run_all(&o)?,
            };
            emit(&a.output, &to_json(&reports))?;
            for r in &reports {
                eprintln!("{} {}", if r.pass { "PASS" } else { "FAIL" }, r.name);
            }
            let failed: Vec<&str> = reports.iter().filter(|r| !r.pass).map(|r| r.name.as_str()).collect();
            if failed.is_empty() {
                Ok(())
            } else {
                Err(CliError::CheckFailed(format!("scenario(s) failed: {}", failed.join(", "))))
            }
        }
    }
}

fn primes(a: PrimesArgs) -> Result<(), CliError> {
    let rows = catalog::primes_profile(a.n_max)?;
    let text = match a.format {
        Format::Json => to_json(&rows),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for row in &rows {
                w.serialize(row)?;
            }
            String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("csv output is UTF-8")
        }
    };
    emit(&a.output, &text)
}

#[derive(Serialize)]
struct ReconstructSummary {
    product: String,
    items: usize,
    check: f64,
    tolerance: f64,
    pass: bool,
}

fn mixed(a: MixedArgs) -> Result<(), CliError> {
    let p = load_product(&a.product)?;
    let ens: Ensemble = parse_json(&a.ensemble, "ensemble")?;
    match a.check {
        MixedCheck::Ppt => {
            let rho = ensemble_to_density(&p, &ens)?;
            let outcome = ppt_witness(&p, &rho, DEFAULT_REL_TOL)?;
            emit(&a.output, &to_json(&outcome))
        }
        MixedCheck::Reconstruct => {
            let c = separable_companion(&p, &ens)?;
            let summary = ReconstructSummary {
                product: p.to_string(),
                items: ens.items().len(),
                check: c.check,
                tolerance: COMPANION_TOL,
                pass: c.check <= COMPANION_TOL,
            };
            emit(&a.output, &to_json(&summary))?;
            if summary.pass {
                Ok(())
            } else {
                Err(CliError::CheckFailed(format!(
                    "reconstruction error {:e} exceeds {COMPANION_TOL:e}",
                    c.check
                )))
            }
        }
    }
}
