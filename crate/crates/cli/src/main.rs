//! `locrad`: localized Rademacher averages, sub-root fixed points,
//! explicit-constant bound calculators, classification and kernel pipelines,
//! and seeded validation trials.
//!
//! Exit codes: 0 success, 1 usage (unknown subcommand), 2 configuration
//! error (bad inputs, missing files), 3 numeric or precondition error.
//! `LOCRAD_THREADS` caps worker concurrency; results do not depend on it.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use locrad_core::bounds::{
    self, BoundDirection, BoundParams, ContainmentVariant, DeviationVariant, TheoremId, ThmPart,
};
use locrad_core::classification::{cor62_bound, default_mu_grid, thm63_psi_hat_upper};
use locrad_core::empirical::LocalizationFunctional;
use locrad_core::harness::{
    default_desk_instance, default_desk_targets, validate_containment, validate_excess_risk,
    validate_main_bound, validate_sandwich, MainBoundTheorem, QuadraticLossSpec,
};
use locrad_core::io::{
    curve_to_csv, parse_config, parse_curve_csv, parse_instance, parse_labeled_csv,
    parse_matrix_csv, to_json_string, XRef,
};
use locrad_core::kernel::{gram, kernel_pipeline};
use locrad_core::rademacher::{
    conditional_rademacher_exact, conditional_rademacher_mc, loss_star_hull_local_conditional,
    star_hull_local_conditional, SigmaMode,
};
use locrad_core::subroot::{solve_fixed_point, DEFAULT_MAX_ITER};
use locrad_core::{
    ErmOracle, Error, KernelSpec, LabeledSample, Result, StarHullSpec, SubRootEvaluator,
    TrialConfig,
};

#[derive(Parser)]
#[command(
    name = "locrad",
    about = "Local Rademacher complexity calibration and explicit-constant error bounds",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact or Monte Carlo Rademacher averages, global or localized.
    Rademacher(RademacherArgs),
    /// Solve the sub-root fixed point of a tabulated curve or an empirical
    /// localized average.
    FixedPoint(FixedPointArgs),
    /// Evaluate a bound calculator by theorem id.
    Bound(BoundArgs),
    /// Classification loss-class pipeline (localized complexity fixed point
    /// and error bound; weighted-ERM upper bound on request).
    Classify(ClassifyArgs),
    /// Kernel pipeline: Gram matrix, spectrum, eigenvalue bounds, fixed
    /// point, excess-risk assembly.
    Kernel(KernelArgs),
    /// Seeded validation trials for the probabilistic claims.
    Validate(ValidateArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Json,
    Csv,
}

/// Numeric options shared by the subcommands. A flat `key = value` config
/// file supplies defaults; explicit flags override it.
#[derive(Args, Clone)]
struct Common {
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    trials: Option<usize>,
    #[arg(long, global = true)]
    n: Option<usize>,
    #[arg(long, global = true)]
    x: Option<f64>,
    #[arg(long = "K", global = true)]
    k: Option<f64>,
    #[arg(long = "B", global = true)]
    b: Option<f64>,
    #[arg(long = "L", global = true)]
    l: Option<f64>,
    #[arg(long, global = true)]
    r: Option<f64>,
    #[arg(long, value_enum, global = true)]
    format: Option<OutputFormat>,
    /// Output path; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

/// `Common` with config-file defaults folded in.
struct Resolved {
    seed: u64,
    trials: usize,
    n: Option<usize>,
    x: f64,
    k: f64,
    b: f64,
    l: f64,
    r: Option<f64>,
    format: OutputFormat,
    out: Option<PathBuf>,
}

impl Common {
    fn resolve(&self) -> Result<Resolved> {
        let file: BTreeMap<String, String> = match &self.config {
            Some(path) => parse_config(&std::fs::read_to_string(path)?)?,
            None => BTreeMap::new(),
        };
        fn from_file<T: std::str::FromStr>(
            file: &BTreeMap<String, String>,
            key: &str,
        ) -> Result<Option<T>> {
            match file.get(key) {
                None => Ok(None),
                Some(raw) => raw
                    .parse()
                    .map(Some)
                    .map_err(|_| Error::Config(format!("config key {key}: bad value {raw}"))),
            }
        }
        Ok(Resolved {
            seed: self.seed.or(from_file(&file, "seed")?).unwrap_or(0),
            trials: self.trials.or(from_file(&file, "trials")?).unwrap_or(1000),
            n: self.n.or(from_file(&file, "n")?),
            x: self.x.or(from_file(&file, "x")?).unwrap_or(1.0),
            k: self.k.or(from_file(&file, "K")?).unwrap_or(2.0),
            b: self.b.or(from_file(&file, "B")?).unwrap_or(1.0),
            l: self.l.or(from_file(&file, "L")?).unwrap_or(1.0),
            r: self.r.or(from_file(&file, "r")?),
            format: self.format.unwrap_or(OutputFormat::Json),
            out: self.out.clone(),
        })
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FunctionalArg {
    PnSq,
    PSq,
    PnMean,
}

#[derive(Args)]
struct RademacherArgs {
    #[command(flatten)]
    common: Common,
    /// Instance file (points, masses, functions).
    #[arg(long)]
    input: PathBuf,
    /// Monte Carlo sign draws; exact enumeration when omitted and n is
    /// within the cap.
    #[arg(long)]
    mc_draws: Option<usize>,
    /// Localize to the subclass with this functional at most `--r`.
    #[arg(long, value_enum)]
    functional: Option<FunctionalArg>,
    /// Star-hull localization at radius `--r` (centered at zero).
    #[arg(long)]
    star_hull: bool,
    /// Loss-class localization at radius `--r` (values must be in [0, 1]).
    #[arg(long)]
    loss_ball: bool,
}

#[derive(Args)]
struct FixedPointArgs {
    #[command(flatten)]
    common: Common,
    /// Tabulated curve CSV (`r,psi` rows) to interpolate and solve.
    #[arg(long, conflicts_with = "input")]
    curve: Option<PathBuf>,
    /// Instance file: solve the empirical star-hull localized average
    /// `c1 E_sigma R_n {star ball at 2r} + c2 x / n`.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Relative accuracy of the iteration.
    #[arg(long, default_value_t = 1e-6)]
    epsilon: f64,
    /// Starting point; grown automatically until it certifies `r0 >= r*`.
    #[arg(long)]
    r0: Option<f64>,
    /// Also export the curve `(r, psi(r))` on a grid to this path.
    #[arg(long)]
    export_curve: Option<PathBuf>,
}

#[derive(Args)]
struct BoundArgs {
    #[command(flatten)]
    common: Common,
    /// Theorem id: 2.1, 2.2, 3.3, 3.6, 4.1, 4.2, 5.1, 5.3, 5.4, 6.2, A.1, A.2.
    #[arg(long)]
    theorem: String,
    /// Part selector for two-part results.
    #[arg(long)]
    part: Option<u8>,
    /// Rademacher average input for deviation bounds.
    #[arg(long)]
    complexity: Option<f64>,
    /// Trade-off parameter for deviation bounds; optimized when omitted.
    #[arg(long)]
    alpha: Option<f64>,
    /// Use the conditional (sign-only) deviation variant.
    #[arg(long)]
    conditional: bool,
    /// Range bounds of the class.
    #[arg(long, default_value_t = 0.0)]
    range_lo: f64,
    #[arg(long, default_value_t = 1.0)]
    range_hi: f64,
    /// Variance proxy for the centered-process tail calculator.
    #[arg(long, default_value_t = 0.0)]
    sigma_sq: f64,
    /// Sup-norm envelope for the centered-process tail calculator.
    #[arg(long, default_value_t = 1.0)]
    envelope: f64,
}

#[derive(Args)]
struct ClassifyArgs {
    #[command(flatten)]
    common: Common,
    /// Labeled sample CSV: `x,label` rows (point id or 1-D feature).
    #[arg(long)]
    sample: PathBuf,
    /// Instance file with a ±1-valued predictor class.
    #[arg(long, conflicts_with = "stumps")]
    input: Option<PathBuf>,
    /// Use the threshold-stump dictionary over the 1-D features.
    #[arg(long)]
    stumps: bool,
    /// Also evaluate the weighted-ERM upper bound on the localized
    /// complexity at radius `--r`.
    #[arg(long)]
    psi_upper: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KernelKind {
    Linear,
    Polynomial,
    Gaussian,
}

#[derive(Args)]
struct KernelArgs {
    #[command(flatten)]
    common: Common,
    /// Feature CSV: one comma-separated feature vector per line.
    #[arg(long, conflicts_with = "gram")]
    features: Option<PathBuf>,
    /// Explicit kernel table CSV (square, symmetric, unnormalized).
    #[arg(long)]
    gram: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = KernelKind::Gaussian)]
    kernel: KernelKind,
    #[arg(long, default_value_t = 0.2)]
    width: f64,
    #[arg(long, default_value_t = 2)]
    degree: u32,
    #[arg(long, default_value_t = 1.0)]
    offset: f64,
    /// Leading true eigenvalues (CSV, one per line) for the supplied-spectrum
    /// localized bound at `--r`; requires `--tail-mass`.
    #[arg(long, requires = "tail_mass")]
    true_spectrum: Option<PathBuf>,
    /// Declared bound on the omitted tail mass of the true spectrum.
    #[arg(long)]
    tail_mass: Option<f64>,
    /// Export the empirical spectrum as CSV (header `eigenvalue`).
    #[arg(long)]
    export_spectrum: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ClaimArg {
    #[value(name = "containment-2.2")]
    Containment22,
    #[value(name = "containment-3.6")]
    Containment36,
    #[value(name = "main-3.3-1")]
    Main331,
    #[value(name = "main-3.3-2")]
    Main332,
    #[value(name = "main-4.1")]
    Main41,
    #[value(name = "sandwich-4.2")]
    Sandwich42,
    #[value(name = "excess-5.4")]
    Excess54,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum)]
    claim: ClaimArg,
    /// Instance file; a seeded desk-scale instance is generated when omitted.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Enforce instance-level preconditions instead of recording them.
    #[arg(long)]
    strict: bool,
}

fn emit(resolved: &Resolved, text: &str) -> Result<()> {
    match &resolved.out {
        Some(path) => {
            std::fs::write(path, text)?;
            Ok(())
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_instance(path: &PathBuf) -> Result<locrad_core::io::Instance<f64>> {
    parse_instance(&std::fs::read_to_string(path)?)
}

fn run_rademacher(args: &RademacherArgs) -> Result<()> {
    let resolved = args.common.resolve()?;
    let instance = load_instance(&args.input)?;
    let n = resolved.n.unwrap_or(instance.dist.len());
    let sample = instance.dist.sample(n, resolved.seed)?;
    let mode = match args.mc_draws {
        Some(draws) => SigmaMode::MonteCarlo { draws },
        None => SigmaMode::Auto,
    };
    let estimate = if args.star_hull || args.loss_ball {
        let radius = resolved
            .r
            .ok_or_else(|| Error::Config("localized averages need --r".into()))?;
        if args.loss_ball {
            loss_star_hull_local_conditional(&instance.class, &sample, radius, mode, resolved.seed)?
                .estimate
        } else {
            let hull = StarHullSpec::centered_at_zero(instance.class.clone())?;
            star_hull_local_conditional(&hull, &sample, radius, mode, resolved.seed)?
        }
    } else {
        let class = match (args.functional, resolved.r) {
            (Some(functional), Some(radius)) => {
                let functional = match functional {
                    FunctionalArg::PnSq => LocalizationFunctional::EmpiricalSecondMoment,
                    FunctionalArg::PSq => LocalizationFunctional::TrueSecondMoment(&instance.dist),
                    FunctionalArg::PnMean => LocalizationFunctional::EmpiricalMean,
                };
                locrad_core::empirical::localized_subclass(
                    &instance.class,
                    &sample,
                    functional,
                    radius,
                )?
            }
            (Some(_), None) => return Err(Error::Config("--functional needs --r".into())),
            _ => instance.class.clone(),
        };
        match mode {
            SigmaMode::MonteCarlo { draws } => {
                conditional_rademacher_mc(&class, &sample, draws, resolved.seed)?
            }
            _ => conditional_rademacher_exact(&class, &sample)?,
        }
    };
    println!("conditional rademacher average: {}", estimate.value);
    emit(&resolved, &to_json_string(&estimate)?)
}

fn run_fixed_point(args: &FixedPointArgs) -> Result<()> {
    let resolved = args.common.resolve()?;
    let (psi, hint): (SubRootEvaluator, f64) = match (&args.curve, &args.input) {
        (Some(curve_path), None) => {
            let nodes = parse_curve_csv(&std::fs::read_to_string(curve_path)?)?;
            let hint = nodes.last().map(|(r, _)| *r).unwrap_or(1.0);
            (SubRootEvaluator::tabulated(&nodes)?, hint)
        }
        (None, Some(input)) => {
            let instance = load_instance(input)?;
            let n = resolved.n.unwrap_or(instance.dist.len());
            let sample = instance.dist.sample(n, resolved.seed)?;
            let cache = locrad_core::LocalizedSigmaCache::build(
                &instance.class,
                &sample,
                None,
                SigmaMode::Auto,
                resolved.seed,
            )?;
            let b = instance.class.range_bound().max(1.0);
            let params = BoundParams::new(n, resolved.x).with_b(resolved.b);
            let table = bounds::constants_for(TheoremId::Thm41, &params)?;
            let (c1, c2) = (table["c1"], table["c2"]);
            let x_term = c2 * resolved.x / n as f64;
            let psi = SubRootEvaluator::from_fn(f64::MIN_POSITIVE, move |r| {
                c1 * cache.hull_local_average(2.0 * r) + x_term
            });
            (psi, b * b)
        }
        _ => return Err(Error::Config("pass exactly one of --curve or --input".into())),
    };
    let r0 = args.r0.unwrap_or(hint);
    let result = solve_fixed_point(&psi, r0, args.epsilon, DEFAULT_MAX_ITER)?;
    if let Some(path) = &args.export_curve {
        let hi = result.trace.first().copied().unwrap_or(1.0).max(result.r_star * 4.0);
        let lo = (result.r_star * 1e-3).max(1e-12);
        let grid = locrad_core::grid::geometric_grid(lo, hi, 64);
        let points: Vec<(f64, f64)> = grid.iter().map(|&r| (r, psi.eval(r))).collect();
        std::fs::write(path, curve_to_csv(&points))?;
    }
    println!("fixed point: {}", result.r_star);
    emit(&resolved, &to_json_string(&result)?)
}

fn run_bound(args: &BoundArgs) -> Result<()> {
    let resolved = args.common.resolve()?;
    let n = resolved.n.unwrap_or(100);
    let params = BoundParams::new(n, resolved.x)
        .with_b(resolved.b)
        .with_k(resolved.k)
        .with_lipschitz(resolved.l)
        .with_range(args.range_lo, args.range_hi);
    let id = TheoremId::parse(&args.theorem, args.part)?;
    let need_r = || {
        resolved
            .r
            .ok_or_else(|| Error::Config(format!("{} needs --r", id.as_str())))
    };
    let report = match id {
        TheoremId::Thm21 => {
            let complexity = args
                .complexity
                .ok_or_else(|| Error::Config("theorem 2.1 needs --complexity".into()))?;
            let variant = if args.conditional {
                DeviationVariant::Conditional
            } else {
                DeviationVariant::Expected
            };
            match args.alpha {
                Some(alpha) => {
                    bounds::talagrand_deviation(&params, complexity, need_r()?, alpha, variant)?
                }
                None => {
                    bounds::talagrand_deviation_optimized(&params, complexity, need_r()?, variant)?
                }
            }
        }
        TheoremId::Thm33Part1 => {
            bounds::main_bound_thm33(&params, need_r()?, ThmPart::One, BoundDirection::PVsPn)?
        }
        TheoremId::Thm33Part2 => {
            bounds::main_bound_thm33(&params, need_r()?, ThmPart::Two, BoundDirection::PVsPn)?
        }
        TheoremId::Thm41 => bounds::main_bound_thm41(&params, need_r()?, BoundDirection::PVsPn)?,
        TheoremId::Cor51 => bounds::loss_class_bound_cor51(&params, need_r()?)?,
        TheoremId::Cor53 => bounds::excess_risk_bound_cor53(&params, need_r()?)?,
        TheoremId::Thm54 => bounds::excess_risk_bound_thm54(&params, need_r()?)?,
        TheoremId::ThmA2 => {
            let e_z = args
                .complexity
                .ok_or_else(|| Error::Config("theorem A.2 needs --complexity (E Z)".into()))?;
            bounds::rademacher_concentration_thma2(
                args.range_hi - args.range_lo,
                resolved.x,
                e_z,
                bounds::TailSide::Upper,
            )?
        }
        TheoremId::Cor22 | TheoremId::Lemma36 | TheoremId::Thm42 | TheoremId::Cor62 => {
            // Constants-table ids: emit the table as JSON.
            let table = bounds::constants_for(id, &params)?;
            let text = to_json_string(&table)?;
            println!("constants for {}", id.as_str());
            return emit(&resolved, &text);
        }
        TheoremId::ThmA1 => {
            let e_z = args
                .complexity
                .ok_or_else(|| Error::Config("theorem A.1 needs --complexity (E Z)".into()))?;
            let tail =
                bounds::bennett_tail_thma1(n, args.sigma_sq, args.envelope, e_z, resolved.x)?;
            println!(
                "tail probability {} | additive bound {}",
                tail.tail_probability, tail.additive_bound
            );
            return emit(&resolved, &to_json_string(&tail)?);
        }
    };
    println!("{}: bound {}", report.theorem_id, report.bound_value);
    emit(&resolved, &to_json_string(&report)?)
}

fn run_classify(args: &ClassifyArgs) -> Result<()> {
    let resolved = args.common.resolve()?;
    let rows = parse_labeled_csv::<f64>(&std::fs::read_to_string(&args.sample)?)?;
    let labels: Vec<i8> = rows.iter().map(|(_, y)| *y).collect();
    let (oracle, xs): (ErmOracle, Vec<usize>) = if args.stumps {
        let mut features = Vec::with_capacity(rows.len());
        for (x, _) in &rows {
            match x {
                XRef::Feature(v) => features.push(*v),
                XRef::PointId(id) => {
                    return Err(Error::Config(format!(
                        "--stumps needs numeric features, got point id {id}"
                    )))
                }
            }
        }
        let xs = (0..features.len()).collect();
        (ErmOracle::ThresholdStumps { features }, xs)
    } else {
        let input = args
            .input
            .as_ref()
            .ok_or_else(|| Error::Config("pass --input <instance> or --stumps".into()))?;
        let instance = load_instance(input)?;
        let mut xs = Vec::with_capacity(rows.len());
        for (x, _) in &rows {
            let idx = match x {
                XRef::PointId(id) => instance
                    .dist
                    .index_of(id)
                    .ok_or_else(|| Error::Config(format!("unknown point id {id}")))?,
                XRef::Feature(v) => {
                    return Err(Error::Config(format!(
                        "instance-based classification needs point ids, got feature {v}"
                    )))
                }
            };
            xs.push(idx);
        }
        (ErmOracle::FiniteClass(instance.class), xs)
    };
    let sample = LabeledSample::new(xs, labels)?;
    let outcome = cor62_bound(
        &oracle,
        &sample,
        resolved.x,
        resolved.k,
        SigmaMode::Auto,
        resolved.seed,
    )?;
    println!(
        "empirical fixed point: {}, bound additive term: {}",
        outcome.fixed_point.r_star, outcome.report.bound_value
    );
    if args.psi_upper {
        let radius = resolved.r.ok_or_else(|| Error::Config("--psi-upper needs --r".into()))?;
        let upper = thm63_psi_hat_upper(
            &oracle,
            &sample,
            radius,
            resolved.x,
            &default_mu_grid::<f64>(),
            SigmaMode::Auto,
            resolved.seed,
        )?;
        println!("weighted-erm localized complexity upper bound at r = {radius}: {upper}");
    }
    emit(&resolved, &to_json_string(&outcome)?)
}

fn run_kernel(args: &KernelArgs) -> Result<()> {
    let resolved = args.common.resolve()?;
    let gram_matrix = match (&args.gram, &args.features) {
        (Some(path), _) => {
            let table = parse_matrix_csv::<f64>(&std::fs::read_to_string(path)?)?;
            gram(&KernelSpec::ExplicitTable(table), &[])?
        }
        (None, Some(path)) => {
            let features = parse_matrix_csv::<f64>(&std::fs::read_to_string(path)?)?;
            let spec = match args.kernel {
                KernelKind::Linear => KernelSpec::Linear,
                KernelKind::Polynomial => {
                    KernelSpec::Polynomial { degree: args.degree, offset: args.offset }
                }
                KernelKind::Gaussian => KernelSpec::Gaussian { width: args.width },
            };
            gram(&spec, &features)?
        }
        (None, None) => return Err(Error::Config("pass --features or --gram".into())),
    };
    let report = kernel_pipeline(&gram_matrix, resolved.x, resolved.l, resolved.b, resolved.r)?;
    if let (Some(r), Some(v)) = (resolved.r, report.lemma66_at_r) {
        println!("lemma66 bound at r = {r}: {v}");
    }
    if let (Some(path), Some(tail)) = (&args.true_spectrum, args.tail_mass) {
        let leading =
            locrad_core::io::parse_spectrum_csv::<f64>(&std::fs::read_to_string(path)?)?;
        let truncated = locrad_core::kernel::TruncatedSpectrum::new(leading, tail)?;
        let r = resolved
            .r
            .ok_or_else(|| Error::Config("--true-spectrum needs --r".into()))?;
        let value = locrad_core::kernel::thm65_bound(&truncated, gram_matrix.n(), r)?;
        println!("supplied-spectrum bound at r = {r}: {value}");
    }
    if let Some(path) = &args.export_spectrum {
        let mut text = String::from("eigenvalue\n");
        for l in &report.spectrum {
            text.push_str(&format!("{l}\n"));
        }
        std::fs::write(path, text)?;
    }
    println!(
        "spectrum head: {:?}, fixed point: {}, excess-risk bound: {}",
        &report.spectrum[..report.spectrum.len().min(4)],
        report.r_hat_star,
        report.thm54_report.bound_value
    );
    emit(&resolved, &to_json_string(&report)?)
}

fn margins_csv(margins: &[f64]) -> String {
    let mut out = String::from("margin\n");
    for m in margins {
        out.push_str(&format!("{m}\n"));
    }
    out
}

fn run_validate(args: &ValidateArgs) -> Result<()> {
    let resolved = args.common.resolve()?;
    let (dist, class) = match &args.input {
        Some(path) => {
            let instance = load_instance(path)?;
            (instance.dist, instance.class)
        }
        None => default_desk_instance(resolved.seed, 16, 6, 0.0, 1.0)?,
    };
    let n = resolved.n.unwrap_or(50);
    let num_points = dist.len();
    let config = TrialConfig::new(dist, class, n, resolved.x, resolved.trials, resolved.seed)?
        .with_k(resolved.k);
    let report = match args.claim {
        ClaimArg::Containment22 => {
            validate_containment(&config, ContainmentVariant::TrueToEmpirical22)?
        }
        ClaimArg::Containment36 => {
            validate_containment(&config, ContainmentVariant::EmpiricalToTrue36)?
        }
        ClaimArg::Main331 => {
            validate_main_bound(&config, MainBoundTheorem::Thm33 { part: ThmPart::One })?
        }
        ClaimArg::Main332 => {
            validate_main_bound(&config, MainBoundTheorem::Thm33 { part: ThmPart::Two })?
        }
        ClaimArg::Main41 => validate_main_bound(&config, MainBoundTheorem::Thm41)?,
        ClaimArg::Sandwich42 => validate_sandwich(&config, args.strict)?,
        ClaimArg::Excess54 => {
            let targets = default_desk_targets(resolved.seed, num_points);
            let outcome = validate_excess_risk(
                &config,
                &QuadraticLossSpec { targets },
                &[n, 2 * n],
                (resolved.trials / 10).max(10),
            )?;
            println!(
                "claim {}: {} violations in {} trials (claimed rate {}), scaling c_fit {}",
                outcome.report.claim_id,
                outcome.report.violations,
                outcome.report.trials,
                outcome.report.claimed_rate,
                outcome.scaling.c_fit
            );
            let text = match resolved.format {
                OutputFormat::Json => to_json_string(&outcome)?,
                OutputFormat::Csv => margins_csv(&outcome.report.per_trial_margins),
            };
            return emit(&resolved, &text);
        }
    };
    println!(
        "claim {}: {} violations in {} trials (claimed rate {})",
        report.claim_id, report.violations, report.trials, report.claimed_rate
    );
    let text = match resolved.format {
        OutputFormat::Json => to_json_string(&report)?,
        OutputFormat::Csv => margins_csv(&report.per_trial_margins),
    };
    emit(&resolved, &text)
}

fn exit_code_for(error: &Error) -> u8 {
    match error {
        Error::Config(_) | Error::Parse(_) | Error::Io(_) | Error::UnknownTheorem(_) => 2,
        Error::Precondition(_)
        | Error::Dimension(_)
        | Error::Capacity { .. }
        | Error::Numeric(_)
        | Error::Unsatisfied(_) => 3,
    }
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("LOCRAD_THREADS") {
        if let Ok(count) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(count.max(1)).build_global();
        }
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = err.print();
                    return ExitCode::SUCCESS;
                }
                ErrorKind::InvalidSubcommand
                | ErrorKind::UnknownArgument
                | ErrorKind::MissingSubcommand => 1,
                _ => 2,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match &cli.command {
        Command::Rademacher(args) => run_rademacher(args),
        Command::FixedPoint(args) => run_fixed_point(args),
        Command::Bound(args) => run_bound(args),
        Command::Classify(args) => run_classify(args),
        Command::Kernel(args) => run_kernel(args),
        Command::Validate(args) => run_validate(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
