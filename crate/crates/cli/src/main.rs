//! `cantor`: run measure transports, functionals and the verify suite on
//! bit streams from the command line.

use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use cantor_core::bernoullize::{build_theta, BernoullizeConfig};
use cantor_core::formats::{
    load_measure, parse_monotone_machine, parse_q, parse_test, parse_toy_machine, print_test,
    resolve_functional,
};
use cantor_core::functional::induce_exact;
use cantor_core::kautz::{inverse_transport, partition, transport};
use cantor_core::measure::{Measure, MeasureRef};
use cantor_core::randomness::{complexity_profile, km, pullback_test};
use cantor_core::slowdown::{
    gamma_coding, gamma_decode, slowdown, slowdown_join, tmap, tmap_stream, StageCounterOutput,
    DEFAULT_STAGE_BUDGET,
};
use cantor_core::{run_suite, Bits, Budget, Dyadic, Error, TransportResult, TransportStatus};

#[derive(Parser)]
#[command(name = "cantor", version, about = "Exact measure transport and tt-functionals on Cantor space")]
struct Cli {
    /// Measure spec file (JSON).
    #[arg(long, global = true)]
    measure: Option<PathBuf>,
    /// Registry name or tt file.
    #[arg(long, global = true)]
    functional: Option<String>,
    /// Toy prefix machine (slowdown, join) or monotone machine (km).
    #[arg(long, global = true)]
    machine: Option<PathBuf>,
    /// Output length or enumeration depth.
    #[arg(long, global = true)]
    depth: Option<usize>,
    /// Precision budget in bits for approximate measures.
    #[arg(long, global = true, default_value_t = 256)]
    precision: u64,
    /// Enumeration budget (strings per level), or stage budget for slowdown and join.
    #[arg(long, global = true)]
    budget: Option<u64>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = OutFormat::Bits)]
    out: OutFormat,
    /// Enumeration file for tmap, one dyadic per line.
    #[arg(long, global = true)]
    q: Option<PathBuf>,
    /// Test presentation file for pullback.
    #[arg(long, global = true)]
    test: Option<PathBuf>,
    /// A dyadic point for tmap, instead of a bit stream.
    #[arg(long, global = true)]
    x: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutFormat {
    Bits,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Lebesgue bits on stdin to bits of the measure's representation.
    Transport,
    /// Measure bits on stdin back to Lebesgue bits.
    Inverse,
    /// Masses of the induced measure at --depth, as CSV.
    Induce,
    /// The interval I_σ for σ on stdin.
    Partition,
    /// Build the Bernoulli-izing functional to --depth and print its plan.
    Bernoullize,
    /// Stage-counting functional for x on stdin.
    Slowdown,
    /// Stage counts of a, blocks of b, for a⊕b on stdin.
    Join,
    /// Γ coding of c on stdin with the given block lengths.
    Gamma {
        /// Comma-separated run lengths t_0, t_1, ….
        #[arg(long, value_delimiter = ',')]
        times: Vec<u64>,
        /// Read a rendering on stdin and print c.
        #[arg(long)]
        decode: bool,
    },
    /// T(x) for a point (--x) or a bit stream on stdin.
    Tmap,
    /// Km of the string on stdin (csv: the whole prefix profile).
    Km,
    /// Pull a test back along a functional.
    Pullback,
    /// Run the property suite.
    Verify,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::BudgetExceeded { .. } | Error::HorizonExceeded { .. } | Error::ConstructionFailure { .. } => 3,
            _ => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 1,
        message: message.into(),
    }
}

type CliResult = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: &Cli) -> CliResult {
    let mut out = io::stdout().lock();
    let code = match &cli.command {
        Command::Transport => cmd_transport(cli, &mut out, false)?,
        Command::Inverse => cmd_transport(cli, &mut out, true)?,
        Command::Induce => cmd_induce(cli, &mut out)?,
        Command::Partition => cmd_partition(cli, &mut out)?,
        Command::Bernoullize => cmd_bernoullize(cli, &mut out)?,
        Command::Slowdown | Command::Join => cmd_slowdown(cli, &mut out)?,
        Command::Gamma { times, decode } => cmd_gamma(cli, &mut out, times, *decode)?,
        Command::Tmap => cmd_tmap(cli, &mut out)?,
        Command::Km => cmd_km(cli, &mut out)?,
        Command::Pullback => cmd_pullback(cli, &mut out)?,
        Command::Verify => cmd_verify(cli, &mut out)?,
    };
    out.flush().map_err(|e| usage(e.to_string()))?;
    Ok(code)
}

fn budget(cli: &Cli) -> Budget {
    cli.budget.map(Budget).unwrap_or_default()
}

fn read_stdin_bits() -> Result<Bits, Failure> {
    let mut s = String::new();
    io::stdin()
        .read_to_string(&mut s)
        .map_err(|e| usage(format!("reading stdin: {e}")))?;
    Ok(s.trim().parse()?)
}

fn read_file(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn need<'a, T>(v: &'a Option<T>, flag: &str) -> Result<&'a T, Failure> {
    v.as_ref().ok_or_else(|| usage(format!("this command needs {flag}")))
}

fn measure(cli: &Cli) -> Result<MeasureRef, Failure> {
    Ok(load_measure(need(&cli.measure, "--measure")?, budget(cli))?)
}

fn emit(out: &mut impl Write, line: impl std::fmt::Display) -> Result<(), Failure> {
    writeln!(out, "{line}").map_err(|e| usage(e.to_string()))
}

fn status_code(r: &TransportResult) -> u8 {
    match r.status {
        TransportStatus::Complete => 0,
        TransportStatus::EndpointHit => 2,
        TransportStatus::PrecisionExhausted => 3,
    }
}

fn cmd_transport(cli: &Cli, out: &mut impl Write, inverse: bool) -> CliResult {
    let mu = measure(cli)?;
    let input = read_stdin_bits()?;
    let len = cli.depth.unwrap_or(input.len());
    let r = if inverse {
        inverse_transport(&*mu, &input, len, cli.precision)?
    } else {
        transport(&*mu, &input, len, cli.precision)?
    };
    match cli.out {
        OutFormat::Bits => emit(out, &r.output)?,
        OutFormat::Csv => {
            emit(out, "output,status,bits_consumed")?;
            emit(out, format_args!("{},{},{}", r.output, r.status.as_str(), r.bits_consumed))?;
        }
    }
    if r.status != TransportStatus::Complete {
        eprintln!("status: {}", r.status.as_str());
    }
    Ok(status_code(&r))
}

fn cmd_induce(cli: &Cli, out: &mut impl Write) -> CliResult {
    let mu = measure(cli)?;
    let f = resolve_functional(need(&cli.functional, "--functional")?, None)?;
    let depth = cli.depth.unwrap_or(4);
    let b = budget(cli);
    emit(out, "sigma,mass")?;
    if mu.is_exact() {
        let nu = induce_exact(&f, mu, b)?;
        for (s, m) in nu.level_distribution(depth)? {
            emit(out, format_args!("{s},{m}"))?;
        }
    } else {
        let nu = cantor_core::functional::induce_approx(&f, mu, b);
        for s in Bits::all(depth) {
            emit(out, format_args!("{s},{}", nu.approx(&s, cli.precision)?))?;
        }
    }
    Ok(0)
}

fn cmd_partition(cli: &Cli, out: &mut impl Write) -> CliResult {
    let mu = measure(cli)?;
    let sigma = read_stdin_bits()?;
    let i = partition(&*mu, &sigma, cli.precision)?;
    match cli.out {
        OutFormat::Bits => emit(out, format_args!("[{}, {}]", i.lo(), i.hi()))?,
        OutFormat::Csv => {
            emit(out, "sigma,lo,hi")?;
            emit(out, format_args!("{sigma},{},{}", i.lo(), i.hi()))?;
        }
    }
    Ok(0)
}

fn cmd_bernoullize(cli: &Cli, out: &mut impl Write) -> CliResult {
    let mu = measure(cli)?;
    let cfg = BernoullizeConfig::new(cli.depth.unwrap_or(10));
    let (plan, _) = build_theta(&*mu, &cfg)?;
    plan.check_invariants()?;
    match cli.out {
        OutFormat::Bits => write!(out, "{}", plan.to_text()).map_err(|e| usage(e.to_string()))?,
        OutFormat::Csv => {
            emit(out, "level,p")?;
            for (n, p) in plan.p().iter().enumerate() {
                emit(out, format_args!("{},{p}", n + 1))?;
            }
        }
    }
    Ok(0)
}

fn render(out: &mut impl Write, cli: &Cli, r: &StageCounterOutput) -> Result<(), Failure> {
    match cli.out {
        OutFormat::Bits => emit(out, &r.rendered)?,
        OutFormat::Csv => {
            emit(out, "block,t,coding")?;
            for (i, b) in r.blocks.iter().enumerate() {
                emit(out, format_args!("{},{},{}", i, b.t, b.coding))?;
            }
        }
    }
    if let Some(i) = r.first_unfound {
        eprintln!("stage budget exhausted at block {i}");
    }
    Ok(())
}

fn cmd_slowdown(cli: &Cli, out: &mut impl Write) -> CliResult {
    let m = parse_toy_machine(&read_file(need(&cli.machine, "--machine")?)?)?;
    let seq = m.stage_sequence();
    let input = read_stdin_bits()?;
    let len = cli.depth.unwrap_or(64);
    let stages = cli.budget.unwrap_or(DEFAULT_STAGE_BUDGET);
    let r = match cli.command {
        Command::Join => slowdown_join(&seq, &input.evens(), &input.odds(), len, stages),
        _ => slowdown(&seq, &input, len, stages),
    };
    render(out, cli, &r)?;
    Ok(0)
}

fn cmd_gamma(cli: &Cli, out: &mut impl Write, times: &[u64], decode: bool) -> CliResult {
    let input = read_stdin_bits()?;
    if decode {
        emit(out, gamma_decode(&input)?)?;
        return Ok(0);
    }
    if times.len() < input.len() {
        return Err(usage(format!(
            "--times lists {} lengths for {} bits of c",
            times.len(),
            input.len()
        )));
    }
    let r = gamma_coding(times, &input, cli.depth.unwrap_or(usize::MAX));
    render(out, cli, &r)?;
    Ok(0)
}

fn cmd_tmap(cli: &Cli, out: &mut impl Write) -> CliResult {
    let q = parse_q(&read_file(need(&cli.q, "--q")?)?)?;
    let len = cli.depth.unwrap_or(q.len());
    let z = match &cli.x {
        Some(x) => tmap(&x.parse::<Dyadic>()?, &q, len),
        None => tmap_stream(&read_stdin_bits()?, &q, len),
    };
    emit(out, z)?;
    Ok(0)
}

fn cmd_km(cli: &Cli, out: &mut impl Write) -> CliResult {
    let m = parse_monotone_machine(&read_file(need(&cli.machine, "--machine")?)?)?;
    let tau = read_stdin_bits()?;
    let cap = cli.depth.unwrap_or(32);
    let show = |k: Option<usize>| k.map_or("not_found".to_string(), |k| k.to_string());
    match cli.out {
        OutFormat::Bits => {
            let k = km(&m, &tau, cap);
            emit(out, show(k))?;
            if k.is_none() {
                return Ok(3);
            }
        }
        OutFormat::Csv => {
            emit(out, "n,km")?;
            for (n, k) in complexity_profile(&m, &tau, cap) {
                emit(out, format_args!("{n},{}", show(k)))?;
            }
        }
    }
    Ok(0)
}

fn cmd_pullback(cli: &Cli, out: &mut impl Write) -> CliResult {
    let t = parse_test(&read_file(need(&cli.test, "--test")?)?)?;
    let f = resolve_functional(need(&cli.functional, "--functional")?, None)?;
    let pb = pullback_test(&t, &f, measure(cli)?, budget(cli))?;
    match cli.out {
        OutFormat::Bits => write!(out, "{}", print_test(&pb.presentation)).map_err(|e| usage(e.to_string()))?,
        OutFormat::Csv => {
            emit(out, "i,pulled_mass,induced_mass")?;
            for (i, a, b) in &pb.masses {
                emit(out, format_args!("{i},{a},{b}"))?;
            }
        }
    }
    Ok(0)
}

fn cmd_verify(cli: &Cli, out: &mut impl Write) -> CliResult {
    let report = run_suite(cli.seed);
    write!(out, "{}", report.render()).map_err(|e| usage(e.to_string()))?;
    Ok(if report.all_passed() { 0 } else { 4 })
}
