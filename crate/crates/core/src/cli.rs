//! Command-line front end. Exit codes: 0 success, 1 verification failure,
//! 2 input error.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;

use crate::dlp_transform::{
    decode_solution, transform, variable_count_estimate, DlpInstance, EstimateMode, Metadata,
    TransformResult,
};
use crate::error::Error;
use crate::gf2_poly::Gf2Poly;
use crate::normal_basis::{FieldParams, NbElement};
use crate::qubo::{exhaustive_solve, simulated_annealing, AnnealParams, Qubo, SolveResult};
use crate::verify_stats::{success_rate, verify, TrialStats};

/// Problems at or below this many variables are solved exhaustively unless
/// `--method` says otherwise.
pub const EXHAUSTIVE_DEFAULT_MAX: usize = 24;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Parser, Debug, Clone)]
#[command(
    name = "dlpqubo",
    version,
    about = "Discrete logarithms over GF(2^n) as QUBO"
)]
pub struct RunConfig {
    /// Emit only key=value lines.
    #[arg(long, global = true)]
    pub machine: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Modulus, basis-change matrices and multiplication matrix for GF(2^n).
    FieldInfo {
        #[arg(long)]
        n: usize,
    },
    /// Build the QUBO for t^y = h and write it with its metadata sidecar.
    Transform {
        #[command(flatten)]
        target: TargetArgs,
        #[arg(long)]
        out: PathBuf,
        /// Defaults to `<out>.meta`.
        #[arg(long)]
        meta: Option<PathBuf>,
        /// Print every squared constraint and penalty.
        #[arg(long)]
        dump: bool,
    },
    /// Minimize a QUBO file.
    Solve {
        #[arg(long = "in")]
        input: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        /// Write the best assignments here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Turn solved assignments back into exponents and verify them.
    Decode {
        #[arg(long)]
        meta: PathBuf,
        #[arg(long)]
        solutions: PathBuf,
    },
    /// Transform, solve, decode and verify in one go.
    E2e {
        #[command(flatten)]
        target: TargetArgs,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Measured against estimated variable counts.
    Report {
        #[arg(long, value_delimiter = ',', required = true)]
        n_list: Vec<usize>,
    },
    /// Success statistics.
    Stats {
        #[command(subcommand)]
        command: StatsCommand,
    },
}

#[derive(Subcommand, Debug, Clone)]
pub enum StatsCommand {
    /// Probability that uniform guessing reaches the threshold.
    Tail {
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        threshold: u64,
        #[arg(long)]
        space_bits: u32,
    },
    Rate {
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        successes: u64,
    },
}

/// Exactly one of `--h-nb` and `--h-hex`.
#[derive(Args, Debug, Clone)]
pub struct TargetArgs {
    /// Defaults to the length of `--h-nb`.
    #[arg(long)]
    pub n: Option<usize>,
    /// Normal-basis target, most significant coordinate first, e.g. 110.
    #[arg(long, conflicts_with = "h_hex")]
    pub h_nb: Option<String>,
    /// Polynomial-basis target as hex, e.g. 0x3 for t+1.
    #[arg(long)]
    pub h_hex: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Exhaustive,
    Sa,
}

#[derive(Args, Debug, Clone)]
pub struct SolverArgs {
    /// Defaults to exhaustive up to 24 variables, annealing above.
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    #[arg(long, default_value_t = 1000)]
    pub reads: usize,
    #[arg(long, default_value_t = 200)]
    pub sweeps: usize,
    #[arg(long, default_value_t = 0.3)]
    pub beta_start: f64,
    #[arg(long, default_value_t = 3.0)]
    pub beta_end: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Run annealing reads on one thread.
    #[arg(long)]
    pub serial: bool,
}

impl Default for SolverArgs {
    fn default() -> Self {
        let d = AnnealParams::default();
        Self {
            method: None,
            reads: d.reads,
            sweeps: d.sweeps,
            beta_start: d.beta_start,
            beta_end: d.beta_end,
            seed: d.seed,
            serial: false,
        }
    }
}

#[derive(Debug)]
enum Failure {
    Input(String),
    Verification(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<std::fmt::Error> for Failure {
    fn from(e: std::fmt::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

fn read_file(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

/// Parses `argv` and runs; clap errors map to exit code 2.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match RunConfig::try_parse_from(args) {
        Ok(cfg) => run(&cfg, out, err),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            code
        }
    }
}

pub fn run(cfg: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let mut text = String::new();
    let result = dispatch(cfg, &mut text);
    let _ = out.write_all(text.as_bytes());
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::Input(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_INPUT
        }
        Err(Failure::Verification(msg)) => {
            let _ = writeln!(err, "verification failed: {msg}");
            EXIT_VERIFY
        }
    }
}

fn dispatch(cfg: &RunConfig, out: &mut String) -> Result<(), Failure> {
    let machine = cfg.machine;
    match &cfg.command {
        Command::FieldInfo { n } => field_info(*n, machine, out),
        Command::Transform {
            target,
            out: path,
            meta,
            dump,
        } => {
            let inst = instance(target)?;
            let r = transform(&inst)?;
            let meta_path = meta.clone().unwrap_or_else(|| sidecar_path(path));
            write_file(path, &r.qubo.to_text(&qubo_comments(&inst, &r)))?;
            write_file(&meta_path, &r.metadata(&inst).to_text())?;
            describe_instance(&inst, out)?;
            describe_transform(&r, out)?;
            writeln!(out, "qubo_file={}", path.display())?;
            writeln!(out, "meta_file={}", meta_path.display())?;
            if *dump && !machine {
                out.push_str(&r.dump());
            }
            Ok(())
        }
        Command::Solve {
            input,
            solver,
            out: sol_path,
        } => {
            let q = Qubo::parse(&read_file(input)?)?;
            let (method, res) = solve(&q, solver)?;
            let text = solutions_text(method, &res);
            if let Some(p) = sol_path {
                write_file(p, &text)?;
            }
            out.push_str(&text);
            Ok(())
        }
        Command::Decode { meta, solutions } => {
            let meta = Metadata::parse(&read_file(meta)?)?;
            let fp = FieldParams::build(meta.n)?;
            if fp.modulus().to_string() != meta.modulus {
                return Err(Failure::Input(format!(
                    "metadata modulus {} does not match {}",
                    meta.modulus,
                    fp.modulus()
                )));
            }
            let h = NbElement::parse_be(&meta.h, meta.n)?;
            let inst = DlpInstance::new(fp, h)?;
            let assignments = parse_solutions(&read_file(solutions)?)?;
            let ys = assignments
                .iter()
                .map(|x| meta.decode(x))
                .collect::<Result<BTreeSet<u64>, Error>>()?;
            report_exponents(&inst, &ys, out)
        }
        Command::E2e { target, solver } => {
            let inst = instance(target)?;
            let r = transform(&inst)?;
            if !machine {
                describe_instance(&inst, out)?;
                describe_transform(&r, out)?;
            }
            let (method, res) = solve(&r.qubo, solver)?;
            writeln!(out, "method={}", method_name(method))?;
            writeln!(out, "best_energy={}", res.best_energy)?;
            let ys = res
                .best_assignments
                .iter()
                .map(|x| decode_solution(x, &r))
                .collect::<Result<BTreeSet<u64>, Error>>()?;
            report_exponents(&inst, &ys, out)
        }
        Command::Report { n_list } => report(n_list, machine, out),
        Command::Stats { command } => stats(command, machine, out),
    }
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

fn instance(target: &TargetArgs) -> Result<DlpInstance, Failure> {
    match (&target.h_nb, &target.h_hex) {
        (Some(bits), None) => {
            let n = target.n.unwrap_or(bits.len());
            let fp = FieldParams::build(n)?;
            Ok(DlpInstance::new(fp, NbElement::parse_be(bits, n)?)?)
        }
        (None, Some(hex)) => {
            let n = target
                .n
                .ok_or_else(|| Failure::Input("--h-hex needs --n".into()))?;
            let fp = FieldParams::build(n)?;
            let p: Gf2Poly = hex.parse()?;
            let h = fp.from_poly(&p)?;
            Ok(DlpInstance::new(fp, h)?)
        }
        _ => Err(Failure::Input(
            "give exactly one of --h-nb or --h-hex".into(),
        )),
    }
}

fn describe_instance(inst: &DlpInstance, out: &mut String) -> Result<(), Failure> {
    writeln!(out, "n={}", inst.fp.n())?;
    writeln!(out, "f={}", inst.fp.modulus())?;
    writeln!(out, "h_nb={}", inst.h)?;
    writeln!(out, "h_poly={}", inst.fp.to_poly(&inst.h)?)?;
    Ok(())
}

fn describe_transform(r: &TransformResult, out: &mut String) -> Result<(), Failure> {
    let n = r.n;
    writeln!(out, "num_vars={}", r.stats.logical_variable_count)?;
    writeln!(out, "constraints={}", r.stats.constraint_count)?;
    writeln!(out, "penalties={}", r.stats.penalty_count)?;
    writeln!(
        out,
        "estimate_optimized={}",
        variable_count_estimate(n, EstimateMode::Optimized)
    )?;
    writeln!(
        out,
        "estimate_naive={}",
        variable_count_estimate(n, EstimateMode::Naive)
    )?;
    Ok(())
}

fn qubo_comments(inst: &DlpInstance, r: &TransformResult) -> Vec<String> {
    vec![
        format!(
            "t^y = h over GF(2^{}) mod {}",
            inst.fp.n(),
            inst.fp.modulus()
        ),
        format!("h_nb={}", inst.h),
        format!("exponent bits at indices 0..{}", r.n - 1),
    ]
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::Exhaustive => "exhaustive",
        Method::Sa => "sa",
    }
}

fn solve(q: &Qubo, args: &SolverArgs) -> Result<(Method, SolveResult), Failure> {
    let method = args
        .method
        .unwrap_or(if q.num_vars() <= EXHAUSTIVE_DEFAULT_MAX {
            Method::Exhaustive
        } else {
            Method::Sa
        });
    let res = match method {
        Method::Exhaustive => exhaustive_solve(q)?,
        Method::Sa => {
            let params = AnnealParams {
                reads: args.reads,
                sweeps: args.sweeps,
                beta_start: args.beta_start,
                beta_end: args.beta_end,
                seed: args.seed,
                parallel: !args.serial,
            };
            simulated_annealing(q, &params)?
        }
    };
    Ok((method, res))
}

fn bits_string(x: &[bool]) -> String {
    x.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

/// Assignments are written in QUBO index order, index 0 first.
fn solutions_text(method: Method, res: &SolveResult) -> String {
    let mut s = String::new();
    writeln!(s, "method={}", method_name(method)).unwrap();
    writeln!(s, "reads={}", res.reads).unwrap();
    writeln!(s, "best_energy={}", res.best_energy).unwrap();
    writeln!(s, "successes_at_best={}", res.successes_at_best).unwrap();
    writeln!(s, "count={}", res.best_assignments.len()).unwrap();
    for x in &res.best_assignments {
        writeln!(s, "x={}", bits_string(x)).unwrap();
    }
    s
}

fn parse_solutions(text: &str) -> Result<Vec<Vec<bool>>, Failure> {
    let xs: Vec<Vec<bool>> = text
        .lines()
        .filter_map(|l| l.trim().strip_prefix("x="))
        .map(|bits| {
            bits.chars()
                .map(|c| match c {
                    '0' => Ok(false),
                    '1' => Ok(true),
                    _ => Err(Failure::Input(format!("bad assignment '{bits}'"))),
                })
                .collect()
        })
        .collect::<Result<_, _>>()?;
    if xs.is_empty() {
        return Err(Failure::Input("no 'x=' lines in solutions file".into()));
    }
    Ok(xs)
}

fn report_exponents(
    inst: &DlpInstance,
    ys: &BTreeSet<u64>,
    out: &mut String,
) -> Result<(), Failure> {
    writeln!(out, "solutions={}", ys.len())?;
    let mut failed = Vec::new();
    for &y in ys {
        let ok = verify(y, inst);
        writeln!(out, "y={y} verified={ok}")?;
        if !ok {
            failed.push(y);
        }
    }
    if ys.is_empty() {
        return Err(Failure::Verification("no solutions".into()));
    }
    if !failed.is_empty() {
        return Err(Failure::Verification(format!(
            "t^y != h for y in {failed:?}"
        )));
    }
    Ok(())
}

fn field_info(n: usize, machine: bool, out: &mut String) -> Result<(), Failure> {
    let fp = FieldParams::build(n)?;
    writeln!(out, "n={n}")?;
    writeln!(out, "f={}", fp.modulus())?;
    writeln!(out, "f_hex={}", fp.modulus().to_hex())?;
    writeln!(out, "optimal={}", fp.is_optimal())?;
    writeln!(out, "t0_nonzeros={}", fp.t0().count_ones())?;
    writeln!(out, "group_order={}", fp.group_order())?;
    let mats = [
        ("m_n2p", fp.m_n2p().reversed()),
        ("m_p2n", fp.m_p2n().reversed()),
        ("t0", fp.t0().clone()),
    ];
    for (name, m) in mats {
        if machine {
            let rows: Vec<String> = m
                .to_grid()
                .iter()
                .map(|r| r.iter().map(u8::to_string).collect())
                .collect();
            writeln!(out, "{name}={}", rows.join(";"))?;
        } else {
            writeln!(out, "{name}:")?;
            write!(out, "{m}")?;
        }
    }
    Ok(())
}

fn report(n_list: &[usize], machine: bool, out: &mut String) -> Result<(), Failure> {
    if !machine {
        writeln!(
            out,
            "{:>4} {:>9} {:>7} {:>7} {:>8} {:>6}",
            "n", "measured", "3n^2", "4n^2", "3n^2+n", "within"
        )?;
    }
    let mut over = Vec::new();
    for &n in n_list {
        let fp = FieldParams::build(n)?;
        let h = NbElement::generator(n);
        let r = transform(&DlpInstance::new(fp, h)?)?;
        let measured = r.stats.logical_variable_count;
        let opt = variable_count_estimate(n, EstimateMode::Optimized);
        let naive = variable_count_estimate(n, EstimateMode::Naive);
        let bound = opt + n;
        let within = measured <= bound;
        if !within {
            over.push(n);
        }
        if machine {
            writeln!(
                out,
                "n={n} measured={measured} estimate_optimized={opt} estimate_naive={naive} bound={bound} within={within}"
            )?;
        } else {
            writeln!(
                out,
                "{n:>4} {measured:>9} {opt:>7} {naive:>7} {bound:>8} {within:>6}"
            )?;
        }
    }
    if over.is_empty() {
        Ok(())
    } else {
        Err(Failure::Verification(format!(
            "measured count above 3n^2+n for n in {over:?}"
        )))
    }
}

/// `m.mmm` and exponent such that `10^v = m.mmm * 10^e`.
fn scientific(log10: f64) -> (f64, i64) {
    let e = log10.floor();
    (10f64.powf(log10 - e), e as i64)
}

fn stats(cmd: &StatsCommand, machine: bool, out: &mut String) -> Result<(), Failure> {
    match *cmd {
        StatsCommand::Tail {
            trials,
            threshold,
            space_bits,
        } => {
            let st = TrialStats::new(trials, threshold, space_bits)?;
            let v = st.random_tail_log10()?;
            let p = st.random_hit_probability();
            writeln!(out, "p_random={p}")?;
            writeln!(out, "log10_tail={v:.6}")?;
            if v.is_finite() {
                let (m, e) = scientific(v);
                writeln!(out, "tail={m:.3}e{e}")?;
            }
            let random = v >= 0.5f64.log10();
            writeln!(
                out,
                "verdict={}",
                if random {
                    "consistent-with-random"
                } else {
                    "non-random"
                }
            )?;
            if !machine {
                writeln!(
                    out,
                    "uniform guessing reaches {threshold}/{trials} with probability {} 0.5",
                    if random { ">=" } else { "<" }
                )?;
            }
            Ok(())
        }
        StatsCommand::Rate { trials, successes } => {
            let r = success_rate(&TrialStats::new(trials, successes, 0)?)?;
            writeln!(out, "success_rate={r}")?;
            let pct = BigRational::new((*r.numer() * 100).into(), (*r.denom()).into());
            writeln!(out, "percent={}", decimal(&pct, 4))?;
            Ok(())
        }
    }
}

/// Exact decimal rendering truncated to `digits` fractional digits, with
/// trailing zeros dropped.
fn decimal(x: &BigRational, digits: u32) -> String {
    let scale = num_bigint::BigInt::from(10u32).pow(digits);
    let scaled = (x * BigRational::from_integer(scale.clone()))
        .trunc()
        .to_integer();
    let int = &scaled / &scale;
    let frac = (&scaled % &scale).to_string();
    let frac = format!("{:0>width$}", frac, width = digits as usize);
    let frac = frac.trim_end_matches('0');
    if frac.is_empty() {
        int.to_string()
    } else {
        format!("{int}.{frac}")
    }
}
