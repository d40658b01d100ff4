use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use scoreforge::asymptotics::{
    beta_limit_sweep, dirichlet_limit_sweep, limit_target, lp_log_convergence,
    quadratic_limit_sweep, Family, LimitSweep, TwoPointConfig,
};
use scoreforge::figures::{curve_csv, theta_grid, write_figures, FigureConfig};
use scoreforge::gain::{csv_writer, format_float, objective};
use scoreforge::geometry::{simplex_lattice, SimplexPoint};
use scoreforge::info::{Collection, ThetaLattice};
use scoreforge::lp::{build_lp, extract_h, solve_lp_with, Pricing, SolverOptions};
use scoreforge::rules::{savage_score, ClosedFormRule, ConvexFunction, PiecewiseLinearConvex, Rule};
use scoreforge::settle::{settle_on_region, settle_plan, verify_settlement};

const EXIT_DEGENERATE: u8 = 2;

#[derive(Parser, Debug)]
#[command(name = "scoreforge", version, about = "Optimal bounded proper scoring rules")]
struct Cli {
    /// JSON object whose keys override the subcommand's flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the LP for a collection and write the optimal rule.
    Solve(SolveArgs),
    /// Print PS(omega, x) for a rule.
    Score(ScoreArgs),
    /// Information gain of every structure in a collection.
    Gain(GainArgs),
    /// Build a collection that settles a rule, optionally re-solving it.
    Settle(SettleArgs),
    /// Scaled objectives for growing collections.
    Asymptotic(AsymptoticArgs),
    /// CSV data for the Beta-Bernoulli figures.
    Figures(FiguresArgs),
    /// Distance of static Beta LP optima from the log rule.
    ConvergeLog(ConvergeArgs),
}

#[derive(Args, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolveArgs {
    #[arg(long)]
    collection: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Points per axis of the curve grid.
    #[arg(long, default_value_t = 401)]
    grid: usize,
    /// Write the optimality certificate as JSON.
    #[arg(long)]
    certificate: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = PricingArg::Bland)]
    pricing: PricingArg,
    #[arg(long, default_value_t = 50)]
    refactor_interval: usize,
}

#[derive(Copy, Clone, Debug, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum PricingArg {
    Bland,
    Dantzig,
}

#[derive(Args, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScoreArgs {
    /// `quadratic`, `spherical`, `log`, or a rule JSON file.
    #[arg(long)]
    rule: String,
    #[arg(long, default_value_t = 2)]
    d: usize,
    /// Realized state, 1-based.
    #[arg(long)]
    omega: usize,
    /// Report: one number for d = 2, otherwise d comma-separated numbers.
    #[arg(long, value_delimiter = ',', num_args = 1.., allow_negative_numbers = true)]
    x: Vec<f64>,
}

#[derive(Args, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GainArgs {
    #[arg(long)]
    rule: String,
    #[arg(long)]
    collection: PathBuf,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SettleArgs {
    /// Rule JSON file (piecewise linear) or a closed-form rule name.
    #[arg(long)]
    rule: String,
    #[arg(long, default_value_t = 2)]
    d: usize,
    /// Region margin for rules that are not piecewise linear.
    #[arg(long)]
    delta: Option<f64>,
    /// Lattice denominator of the region grid.
    #[arg(long, default_value_t = 20)]
    grid_step: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Re-solve the LP and compare with the rule on the designated points.
    #[arg(long)]
    verify: bool,
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
}

#[derive(Copy, Clone, Debug, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum FamilyArg {
    Beta,
    Dirichlet,
    Quadratic,
}

#[derive(Args, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AsymptoticArgs {
    #[arg(value_enum)]
    family: FamilyArg,
    #[arg(long, default_value = "log")]
    rule: String,
    /// Dimension; defaults to 2, or 3 for the Dirichlet family.
    #[arg(long)]
    d: Option<usize>,
    #[arg(long, value_delimiter = ',', default_value = "10,100,1000")]
    n: Vec<u64>,
    #[arg(long, default_value_t = 0.5)]
    delta_exp: f64,
    /// Dirichlet prior lattice: `natural` or a fixed denominator.
    #[arg(long, default_value = "natural")]
    lattice: String,
    #[arg(long, default_value_t = 25)]
    per_axis: usize,
    #[arg(long, default_value_t = 64)]
    directions: usize,
    #[arg(long, default_value_t = 20_240_601)]
    seed: u64,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FiguresArgs {
    #[arg(long, default_value = "figures")]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 401)]
    grid: usize,
}

#[derive(Args, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConvergeArgs {
    #[arg(long, value_delimiter = ',', default_value = "5,10,20")]
    n: Vec<u64>,
    /// Compare on this many grid points instead of the LP support.
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    symmetrize: bool,
    #[arg(long)]
    csv: Option<PathBuf>,
}

/// Overlays the keys of a JSON object on parsed flags.
fn apply_config<T: Serialize + DeserializeOwned>(args: T, config: &serde_json::Value) -> Result<T> {
    let serde_json::Value::Object(overrides) = config else {
        bail!("config must be a JSON object");
    };
    let mut value = serde_json::to_value(args)?;
    let fields = value.as_object_mut().expect("flag structs serialize as objects");
    for (k, v) in overrides {
        fields.insert(k.replace('-', "_"), v.clone());
    }
    serde_json::from_value(value).context("invalid config")
}

fn read_config(path: &Path) -> Result<serde_json::Value> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn with_config<T: Serialize + DeserializeOwned>(args: T, config: Option<&serde_json::Value>) -> Result<T> {
    match config {
        Some(c) => apply_config(args, c),
        None => Ok(args),
    }
}

fn read_collection(path: &Path) -> Result<Collection> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Collection::from_json(&text).with_context(|| format!("in {}", path.display()))
}

fn load_rule(arg: &str, d: usize) -> Result<Rule> {
    if matches!(arg, "quadratic" | "spherical" | "log") {
        return Ok(Rule::ClosedForm(ClosedFormRule::by_name(arg, d)?));
    }
    Ok(Rule::Piecewise(load_piecewise(Path::new(arg))?))
}

fn load_piecewise(path: &Path) -> Result<PiecewiseLinearConvex> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    PiecewiseLinearConvex::from_json(&text).with_context(|| format!("parsing rule {}", path.display()))
}

fn write_output(path: Option<&Path>, body: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, body).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

/// `%.12g`-style formatting.
fn format_sig(v: f64, digits: usize) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v == 0.0 { "0".into() } else { v.to_string() };
    }
    let exp = v.abs().log10().floor() as i32;
    if !(-5..digits as i32).contains(&exp) {
        let s = format!("{:.*e}", digits - 1, v);
        let (mantissa, e) = s.split_once('e').expect("exponent form");
        let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
        return format!("{mantissa}e{e}");
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    let s = format!("{v:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn cmd_solve(a: SolveArgs) -> Result<ExitCode> {
    let collection = read_collection(&a.collection)?;
    let inst = build_lp(&collection);
    let opts = SolverOptions {
        pricing: match a.pricing {
            PricingArg::Bland => Pricing::Bland,
            PricingArg::Dantzig => Pricing::Dantzig,
        },
        refactor_interval: a.refactor_interval,
        ..Default::default()
    };
    let sol = solve_lp_with(&inst, &opts)?;
    let rule = extract_h(&sol)?;
    let report = serde_json::json!({
        "status": sol.status.to_string(),
        "objective": sol.objective,
        "primal_residual": sol.certificate.primal_residual,
        "dual_residual": sol.certificate.dual_residual,
        "gap": sol.certificate.gap,
        "pivots": sol.pivots,
        "points": sol.points.len(),
        "structures": collection.len(),
    });
    eprintln!("{}", serde_json::to_string(&report)?);
    if let Some(p) = &a.certificate {
        fs::write(p, serde_json::to_string_pretty(&report)? + "\n")?;
    }
    if let Some(p) = &a.out {
        fs::write(p, rule.to_json() + "\n").with_context(|| format!("writing {}", p.display()))?;
    }
    if let Some(p) = &a.csv {
        let body = if rule.dim() == 2 {
            curve_csv(&rule, &theta_grid(a.grid)?)
        } else {
            lattice_csv(&rule, a.grid.saturating_sub(1).max(1))
        };
        fs::write(p, body).with_context(|| format!("writing {}", p.display()))?;
    }
    if sol.degenerate {
        log::warn!("Opt = 0: every bounded convex function is optimal");
        eprintln!("warning: degenerate collection (Opt = 0)");
        return Ok(ExitCode::from(EXIT_DEGENERATE));
    }
    Ok(ExitCode::SUCCESS)
}

fn lattice_csv<H: ConvexFunction + ?Sized>(h: &H, m: usize) -> String {
    let d = h.dim();
    let mut w = csv_writer(Vec::new());
    let mut header: Vec<String> = (0..d).map(|k| format!("x{k}")).collect();
    header.push("H".into());
    w.write_record(&header).expect("in-memory write");
    for x in simplex_lattice(d, m) {
        let mut rec: Vec<String> = x.coords().iter().map(|&c| format_float(c)).collect();
        rec.push(format_float(h.value(x.coords())));
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
}

fn cmd_score(a: ScoreArgs) -> Result<ExitCode> {
    let rule = load_rule(&a.rule, a.d)?;
    let d = rule.dim();
    let x = match a.x.as_slice() {
        [t] if d == 2 => SimplexPoint::binary(*t)?,
        xs => SimplexPoint::new(xs.to_vec())?,
    };
    if a.omega == 0 || a.omega > d {
        bail!("omega must be in 1..={d}");
    }
    let s = savage_score(&rule, a.omega - 1, &x)?;
    println!("{}", format_sig(s, 12));
    Ok(ExitCode::SUCCESS)
}

fn cmd_gain(a: GainArgs) -> Result<ExitCode> {
    let collection = read_collection(&a.collection)?;
    let rule = load_rule(&a.rule, collection.dim())?;
    let report = objective(&rule, &collection)?;
    eprintln!("Obj = {} at {}", report.objective, report.argmin_label());
    write_output(a.csv.as_deref(), &report.to_csv())?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_settle(a: SettleArgs) -> Result<ExitCode> {
    let rule = load_rule(&a.rule, a.d)?;
    let (collection, points) = match (&rule, a.delta) {
        (Rule::Piecewise(h), None) => {
            let plan = settle_plan(h)?;
            eprintln!("plan: {} structures, eps = {}", plan.collection.len(), plan.eps);
            let pts: Vec<SimplexPoint> = plan.points.iter().map(|p| p.0.clone()).collect();
            (plan.collection, pts)
        }
        (_, Some(delta)) => {
            let grid = simplex_lattice(rule.dim(), a.grid_step);
            let plan = settle_on_region(&rule, delta, &grid)?;
            eprintln!("region plan: {} structures, delta = {delta}", plan.collection.len());
            (plan.collection, plan.points)
        }
        (Rule::ClosedForm(_), None) => {
            bail!("rule is not piecewise linear; pass --delta to settle it on a region")
        }
    };
    write_output(a.out.as_deref(), &(collection.to_json() + "\n"))?;
    if a.verify {
        let check = verify_settlement(&rule, &collection, &points)?;
        if let Some(p) = &a.report {
            fs::write(p, check.to_csv())?;
        }
        eprintln!(
            "verify: Opt = {}, Obj(H) = {}, max deviation = {}",
            check.lp_objective, check.target_objective, check.max_deviation
        );
        if check.max_deviation > a.tol {
            bail!("re-solved rule deviates by {} > {}", check.max_deviation, a.tol);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn parse_lattice(s: &str) -> Result<ThetaLattice> {
    if s == "natural" {
        return Ok(ThetaLattice::Natural);
    }
    let m: u64 = s
        .strip_prefix("fixed:")
        .unwrap_or(s)
        .parse()
        .with_context(|| format!("lattice {s:?}: expected `natural` or a denominator"))?;
    Ok(ThetaLattice::Fixed(m))
}

fn cmd_asymptotic(a: AsymptoticArgs) -> Result<ExitCode> {
    let d = a.d.unwrap_or(match a.family {
        FamilyArg::Dirichlet => 3,
        _ => 2,
    });
    let rule = ClosedFormRule::by_name(&a.rule, d)?;
    let sweep: LimitSweep = match a.family {
        FamilyArg::Quadratic => {
            let cfg = TwoPointConfig {
                per_axis: a.per_axis,
                n_random_directions: a.directions,
                seed: a.seed,
            };
            let target = match limit_target(&rule, Family::TwoPoint) {
                t if t.is_nan() => d as f64 / (d as f64 - 1.0),
                t => t,
            };
            quadratic_limit_sweep(&rule, &a.n, &cfg.grid(d), &cfg.directions(d), target)?
        }
        FamilyArg::Beta => {
            if d != 2 {
                bail!("the Beta family is binary (d = 2)");
            }
            beta_limit_sweep(&rule, &a.n, a.delta_exp, limit_target(&rule, Family::Beta))?
        }
        FamilyArg::Dirichlet => dirichlet_limit_sweep(
            &rule,
            &a.n,
            a.delta_exp,
            parse_lattice(&a.lattice)?,
            limit_target(&rule, Family::Dirichlet),
        )?,
    };
    if let Some(rate) = sweep.rate {
        eprintln!("fitted rate: {rate}");
    }
    write_output(a.csv.as_deref(), &sweep.to_csv())?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_figures(a: FiguresArgs) -> Result<ExitCode> {
    let cfg = FigureConfig {
        grid: a.grid,
        ..Default::default()
    };
    for p in write_figures(&cfg, &a.out_dir)? {
        eprintln!("wrote {}", p.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_converge(a: ConvergeArgs) -> Result<ExitCode> {
    let grid = a.grid.map(theta_grid).transpose()?;
    let rows = lp_log_convergence(&a.n, grid.as_deref(), a.symmetrize)?;
    let mut w = csv_writer(Vec::new());
    w.write_record(["N", "opt", "max_abs_diff", "center_diff", "asymmetry"])?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            format_float(r.opt),
            format_float(r.deviation),
            format_float(r.center_deviation),
            format_float(r.asymmetry),
        ])?;
    }
    write_output(a.csv.as_deref(), &String::from_utf8(w.into_inner()?)?)?;
    Ok(ExitCode::SUCCESS)
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("SCOREFORGE_THREADS") {
        let n: usize = v
            .parse()
            .with_context(|| format!("SCOREFORGE_THREADS={v:?} is not a thread count"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    init_threads()?;
    let config = cli.config.as_deref().map(read_config).transpose()?;
    let config = config.as_ref();
    match cli.command {
        Command::Solve(a) => cmd_solve(with_config(a, config)?),
        Command::Score(a) => cmd_score(with_config(a, config)?),
        Command::Gain(a) => cmd_gain(with_config(a, config)?),
        Command::Settle(a) => cmd_settle(with_config(a, config)?),
        Command::Asymptotic(a) => cmd_asymptotic(with_config(a, config)?),
        Command::Figures(a) => cmd_figures(with_config(a, config)?),
        Command::ConvergeLog(a) => cmd_converge(with_config(a, config)?),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
