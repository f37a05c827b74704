use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser, Debug, Serialize)]
#[command(
    name = "jacobi-sums",
    version,
    about = "Exact and large-scale Jacobi-symbol sum experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Serialize)]
pub struct Common {
    /// Write results here (atomically) plus `<output>.manifest.json`; stdout otherwise.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Worker threads.
    #[arg(long, global = true, env = "JACOBI_THREADS")]
    pub threads: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case", tag = "command")]
pub enum Command {
    /// Hyperbolic sum Σ* (nm)^c a_n b_m (n/m) over z < n, m and nm ≤ T.
    Sum(SumArgs),
    /// Equal-width cover: rectangles + slivers + leftover against the direct sum.
    CoverCheck(CoverArgs),
    /// Σ_{odd nm ≤ T} (n/m) by the hyperbola method, compared with C·T.
    Asymptotic(AsymptoticArgs),
    /// Truncated Perron indicator errors against the predicted bound.
    PerronScan(PerronArgs),
    /// Mean-value ratio L / normaliser over random ±1 sequences.
    Meanvalue(MeanValueArgs),
    /// a_n = (n/p), b_m = 1{m = p} against its predicted main term.
    LowerBound(LowerBoundArgs),
    /// Exact sums over a T grid with a log-log exponent fit and SVG plot.
    CancellationScan(ScanArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct SumArgs {
    #[arg(long = "T", value_parser = parse_real)]
    pub t: f64,
    #[arg(long, value_parser = parse_real, default_value = "0")]
    pub z: f64,
    #[arg(long, value_parser = parse_real, default_value = "0")]
    pub c: f64,
    /// one | rademacher:SEED | jacobi:P | point:P | csv:PATH
    #[arg(long, default_value = "one")]
    pub seq_a: String,
    #[arg(long, default_value = "one")]
    pub seq_b: String,
    /// odd_squarefree | odd | all
    #[arg(long, default_value = "odd_squarefree")]
    pub restriction: String,
}

#[derive(Args, Debug, Serialize)]
pub struct CoverArgs {
    #[arg(long = "T", value_parser = parse_real)]
    pub t: f64,
    #[arg(long, value_parser = parse_real)]
    pub z: f64,
    #[arg(long, value_parser = parse_real, default_value = "0.5")]
    pub delta: f64,
    #[arg(long, value_parser = parse_real, default_value = "0")]
    pub c: f64,
    #[arg(long, default_value = "one")]
    pub seq_a: String,
    #[arg(long, default_value = "one")]
    pub seq_b: String,
    #[arg(long, default_value = "odd_squarefree")]
    pub restriction: String,
}

#[derive(Args, Debug, Serialize)]
pub struct AsymptoticArgs {
    #[arg(long = "T", value_parser = parse_real)]
    pub t: f64,
    /// Guard on |S − C·T| / (T^{3/4} log T).
    #[arg(long, value_parser = parse_real, default_value = "10")]
    pub guard: f64,
}

#[derive(Args, Debug, Serialize)]
pub struct PerronArgs {
    #[arg(long = "T", value_parser = parse_real)]
    pub t: f64,
    /// Truncation heights, comma separated.
    #[arg(long = "R", value_parser = parse_real, value_delimiter = ',', default_value = "1e3,2e3")]
    pub r: Vec<f64>,
    /// Number of evenly spaced nm values in [2, 2T].
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    #[arg(long, value_parser = parse_real, default_value = "1e-6")]
    pub tolerance: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Elliot,
    Hb1,
}

#[derive(Args, Debug, Serialize)]
pub struct MeanValueArgs {
    #[arg(long = "M", value_parser = parse_count)]
    pub m: u64,
    /// The interval is I = (N − len, N].
    #[arg(long = "N", value_parser = parse_count)]
    pub n: u64,
    /// Length of I; defaults to N.
    #[arg(long, value_parser = parse_count)]
    pub len: Option<u64>,
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub seeds: Vec<u64>,
    #[arg(long, value_enum, default_value_t = Variant::Elliot)]
    pub variant: Variant,
    #[arg(long, value_parser = parse_real, default_value = "2")]
    pub guard: f64,
}

#[derive(Args, Debug, Serialize)]
pub struct LowerBoundArgs {
    #[arg(long = "T", value_parser = parse_real)]
    pub t: f64,
    #[arg(long, value_parser = parse_real)]
    pub z: f64,
}

#[derive(Args, Debug, Serialize)]
pub struct ScanArgs {
    /// T grid, comma separated.
    #[arg(long = "T", value_parser = parse_real, value_delimiter = ',', default_value = "1e4,1e5,1e6")]
    pub t: Vec<f64>,
    /// power:E | powers:E1,E2,… | log:A
    #[arg(long, default_value = "power:0.25")]
    pub z_rule: String,
    /// rademacher | one | adversarial
    #[arg(long, default_value = "rademacher")]
    pub kind: String,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    pub seeds: Vec<u64>,
    /// SVG plot path; defaults to the --output path with an .svg extension.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

/// Reals in plain or scientific notation.
pub fn parse_real(s: &str) -> Result<f64, String> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| format!("not a number: {s:?}"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("not finite: {s:?}"))
    }
}

/// Nonnegative integers, also accepting `1e4`.
pub fn parse_count(s: &str) -> Result<u64, String> {
    let v = parse_real(s)?;
    if v < 0.0 || v.fract() != 0.0 || v > u64::MAX as f64 {
        return Err(format!("not a nonnegative integer: {s:?}"));
    }
    Ok(v as u64)
}
