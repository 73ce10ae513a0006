//! `diffbasis` command-line front end.
//!
//! Every subcommand writes its results to files and a manifest next to the
//! primary output; stdout carries a short summary. Exit status: 0 on
//! success, 1 when a requested verification fails, 2 on invalid input.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

#[derive(Parser, Debug)]
#[command(name = "diffbasis", version, about = "Differentiation bases on the infinite-dimensional torus")]
struct Cli {
    /// Directory for relative output paths.
    #[arg(long, global = true, env = "DIFFBASIS_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Rubio de Francia cells.
    #[command(subcommand)]
    Rdf(RdfCmd),
    /// Configuration norms.
    #[command(subcommand)]
    Config(ConfigCmd),
    /// Weak-type norm estimate of a single configuration (same as `config norm`).
    Norm(NormArgs),
    /// Cover a rectangle by configurations in a fixed number of rounds.
    Cover(CoverArgs),
    /// Build a leveled basis.
    Build(BuildArgs),
    /// Rebuild a stored basis or plan from its parameters and check it.
    Verify(VerifyArgs),
    /// Ledger of the counterexample function.
    Counterexample(CounterexampleArgs),
    /// Classify a probe grid of exponents against a schedule.
    ProbeRange(ProbeArgs),
    /// Example fixtures.
    #[command(subcommand)]
    Fixture(FixtureCmd),
    /// Glue two spaces and probe their common differentiation range.
    Glue(GlueArgs),
    /// Transfer a basis to unions of intervals in [0,1].
    Transfer(TransferArgs),
    /// Re-run the command stored in a manifest and compare output hashes.
    Replay(ReplayArgs),
}

#[derive(Subcommand, Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RdfCmd {
    /// The cell V_m and its measure.
    Show(RdfShowArgs),
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct RdfShowArgs {
    #[arg(long)]
    pub m: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConfigCmd {
    Norm(NormArgs),
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct NormArgs {
    #[arg(long)]
    pub eps: String,
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub p: String,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct CoverArgs {
    #[arg(long)]
    pub eps: String,
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub m: u32,
    #[arg(long)]
    pub rounds: u32,
    /// Configurations and residual cubes listed explicitly.
    #[arg(long, default_value_t = 16)]
    pub list: u64,
    /// Also run the plan verification suite.
    #[arg(long)]
    pub verify: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(clap::ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VariantArg {
    Geq,
    Gt,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct BuildArgs {
    #[arg(long)]
    pub p0: String,
    #[arg(long, value_enum, default_value_t = VariantArg::Geq)]
    pub variant: VariantArg,
    #[arg(long)]
    pub depth: usize,
    #[arg(long, default_value_t = 2)]
    pub rounds: u32,
    /// ε is quantized to multiples of 2^-(g + k) for the smallest fitting k.
    #[arg(long, default_value_t = 0)]
    pub granularity: u32,
    /// Sampled chains listed in the output.
    #[arg(long, default_value_t = 4)]
    pub chains: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct VerifyArgs {
    /// A basis or plan JSON written by `build` or `cover`.
    pub input: PathBuf,
    #[arg(long, default_value_t = 64)]
    pub chains: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct CounterexampleArgs {
    #[arg(long)]
    pub basis: PathBuf,
    #[arg(long)]
    pub p: String,
    /// Levels in the ledger; levels beyond the basis use the full-cover values.
    #[arg(long)]
    pub levels: Option<usize>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct ProbeArgs {
    #[arg(long)]
    pub p0: String,
    #[arg(long, value_enum, default_value_t = VariantArg::Geq)]
    pub variant: VariantArg,
    #[arg(long, default_value = "1,1.5,2,3")]
    pub probe: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FixtureCmd {
    /// Averages of g and g_n on the weighted plane example.
    E4(E4Args),
    /// Derivate bounds of the indicator of K on the columnar example.
    E1(E1Args),
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct E4Args {
    #[arg(long)]
    pub jmax: u32,
    #[arg(long)]
    pub n: u32,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct E1Args {
    #[arg(long, default_value_t = 8)]
    pub rows: u32,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct GlueArgs {
    /// `e1`, `geq:P0`, `gt:P0`, or a basis JSON path.
    #[arg(long)]
    pub a: String,
    #[arg(long)]
    pub b: String,
    #[arg(long, default_value = "1,1.5,2,3")]
    pub probe: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct TransferArgs {
    #[arg(long)]
    pub basis: PathBuf,
    /// Levels of the class tree to transfer.
    #[arg(long, default_value_t = 2)]
    pub depth: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
    /// Write the outputs here instead of the recorded output directory.
    #[arg(long)]
    pub into: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command, &cli.out_dir) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
