//! Command-line front end. Data goes to stdout (or `--output`), progress to
//! stderr.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::constants::{c_constant, omega_infinity, OmegaMethod};
use crate::enumerate::{
    count_brute, count_direct_with, count_torsor_with, default_workers, torsor_points, BRUTE_CAP, write_points, CountRecord,
    Method,
};
use crate::error::{invalid, Error, Result};
use crate::series::main_term_prediction;
use crate::verify::Suite;

#[derive(Debug, Parser)]
#[command(name = "a4-manin", version, about = "Rational points of bounded height on an A4 quartic del Pezzo surface")]
pub struct Cli {
    /// Worker threads; defaults to the available cores.
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    /// Write data here instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Torsor,
    Direct,
    Brute,
    All,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Count points of height at most B.
    Count {
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        height: u64,
        #[arg(long, value_enum, default_value_t = MethodArg::Torsor)]
        method: MethodArg,
        /// Write the points as CSV `x0,x1,x2,x3,x4,height`.
        #[arg(long)]
        emit_points: Option<PathBuf>,
    },
    /// The leading constant and its pieces, as JSON.
    Constant {
        #[arg(long, default_value_t = 100_000)]
        prime_cutoff: u64,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Counts against the main-term prediction.
    Predict {
        #[arg(long, value_delimiter = ',', required = true, value_parser = clap::value_parser!(u64).range(1..))]
        heights: Vec<u64>,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Run consistency suites.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long)]
        seed: u64,
    },
}

/// Run a parsed command, writing data to `out`. Returns whether every
/// requested check passed.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<bool> {
    let workers = cli.workers.unwrap_or_else(default_workers).max(1);
    match cli.command {
        Command::Count { height, method, emit_points } => cmd_count(height, method, emit_points, workers, out),
        Command::Constant { prime_cutoff, tol } => {
            let c = c_constant(prime_cutoff, tol)?;
            let json = serde_json::to_string_pretty(&c).map_err(|e| invalid(e.to_string()))?;
            writeln!(out, "{json}").map_err(io_err)?;
            Ok(true)
        }
        Command::Predict { heights, tol } => cmd_predict(&heights, tol, workers, out),
        Command::Verify { suite, seed } => {
            let mut ok = true;
            for s in Suite::parse(&suite)? {
                eprintln!("running {}", s.name());
                let r = s.run(seed)?;
                ok &= r.passed();
                write!(out, "{r}").map_err(io_err)?;
            }
            Ok(ok)
        }
    }
}

fn io_err(e: io::Error) -> Error {
    invalid(format!("i/o: {e}"))
}

fn cmd_count(
    b: u64,
    method: MethodArg,
    emit: Option<PathBuf>,
    workers: usize,
    out: &mut dyn Write,
) -> Result<bool> {
    let methods: &[Method] = match method {
        MethodArg::Torsor => &[Method::Torsor],
        MethodArg::Direct => &[Method::Direct],
        MethodArg::Brute => &[Method::Brute],
        MethodArg::All if b <= BRUTE_CAP => &[Method::Torsor, Method::Direct, Method::Brute],
        MethodArg::All => {
            eprintln!("note: brute force skipped above B = {BRUTE_CAP}");
            &[Method::Torsor, Method::Direct]
        }
    };
    let mut records: Vec<CountRecord> = Vec::new();
    writeln!(out, "B,method,count,seconds").map_err(io_err)?;
    for &m in methods {
        let r = match m {
            Method::Torsor => count_torsor_with(b, workers)?,
            Method::Direct => count_direct_with(b, 1.0, workers)?,
            Method::Brute => count_brute(b)?,
        };
        writeln!(out, "{}", r.csv_row()).map_err(io_err)?;
        records.push(r);
    }
    if let Some(path) = emit {
        let pts = torsor_points(b, workers)?;
        let file = File::create(&path).map_err(io_err)?;
        write_points(BufWriter::new(file), &pts).map_err(io_err)?;
    }
    let first = records[0].count;
    if records.iter().any(|r| r.count != first) {
        let detail = records.iter().map(|r| format!("{}={}", r.method, r.count)).collect::<Vec<_>>().join(", ");
        return Err(Error::CountMismatch { b, detail });
    }
    Ok(true)
}

fn cmd_predict(heights: &[u64], tol: f64, workers: usize, out: &mut dyn Write) -> Result<bool> {
    let omega = omega_infinity(OmegaMethod::TParam, tol)?.value;
    writeln!(out, "B,count,prediction,ratio").map_err(io_err)?;
    for &b in heights {
        let count = count_torsor_with(b, workers)?.count;
        let pred = main_term_prediction(b, omega);
        let ratio = if pred > 0.0 { format!("{:.6}", count as f64 / pred) } else { "NA".to_string() };
        writeln!(out, "{b},{count},{pred:.6},{ratio}").map_err(io_err)?;
    }
    Ok(true)
}

/// Entry point for the binary: parse, run, map the outcome to an exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match &cli.output {
        Some(path) => match File::create(path) {
            Ok(f) => {
                let mut w = BufWriter::new(f);
                let r = run(cli, &mut w);
                w.flush().map_err(io_err).and(r)
            }
            Err(e) => Err(io_err(e)),
        },
        None => run(cli, &mut io::stdout().lock()),
    };
    match result {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e @ Error::InvalidArgument(_)) => {
            eprintln!("error: {e}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
