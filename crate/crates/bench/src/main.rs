use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{ensure, Context, Result};
use clap::{Args, Parser, Subcommand};
use layout_gemm_bench::config::{self, FileConfig, RunOverrides, RunSettings, TileOverrides};
use layout_gemm_bench::experiments::{bench_attention, bench_chain, bench_single, AttentionSweep};
use layout_gemm_bench::record::{write_csv, BenchRecord};
use layout_gemm_bench::sizes::{load_sizes, parse_token_range, BUNDLED_CHAIN, BUNDLED_SINGLE};
use layout_gemm_bench::verify::{self, VerifyOptions};

#[derive(Parser)]
#[command(name = "lgemm", version, about = "Layout-propagating GEMM: verification and benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the oracle suites and print a pass/fail table.
    Verify {
        /// Suites to run: packing, microkernel, kernels, layout_ops, attention.
        #[arg(long, value_delimiter = ',')]
        filter: Vec<String>,
        #[arg(long, default_value_t = config::DEFAULT_SEED)]
        seed: u64,
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
    /// Time kernels and write CSV.
    #[command(subcommand)]
    Bench(Bench),
}

#[derive(Subcommand)]
enum Bench {
    /// default, ini, mid and end on each size.
    Single {
        #[command(flatten)]
        common: Common,
        /// `M N K` per line; the bundled list when omitted.
        #[arg(long)]
        sizes: Option<PathBuf>,
    },
    /// naive, default and propagated chains of GEMMs.
    Chain {
        #[command(flatten)]
        common: Common,
        /// Rows `M N K`: input M x K, first weight K x N, later weights N x N.
        #[arg(long)]
        sizes: Option<PathBuf>,
        #[arg(long)]
        depth: Option<usize>,
        /// Skip the naive variant.
        #[arg(long)]
        no_naive: bool,
    },
    /// Attention and MLP blocks, baseline against propagated, over a token sweep.
    Attention {
        #[command(flatten)]
        common: Common,
        /// `start..end..step`, end inclusive.
        #[arg(long)]
        tokens: Option<String>,
        #[arg(long)]
        embed: Option<usize>,
        #[arg(long)]
        heads: Option<usize>,
        #[arg(long)]
        kv_heads: Option<usize>,
        /// Defaults to embed / heads.
        #[arg(long)]
        head_dim: Option<usize>,
        /// MLP hidden width.
        #[arg(long)]
        hidden: Option<usize>,
        #[arg(long, num_args = 0..=1, default_missing_value = "true")]
        causal: Option<bool>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    warmup: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    mc: Option<usize>,
    #[arg(long)]
    nc: Option<usize>,
    #[arg(long)]
    kc: Option<usize>,
    #[arg(long)]
    mr: Option<usize>,
    #[arg(long)]
    nr: Option<usize>,
    /// TOML settings; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn resolve(&self) -> Result<(FileConfig, RunSettings)> {
        let file = match &self.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let cli = RunOverrides {
            reps: self.reps,
            warmup: self.warmup,
            seed: self.seed,
            tiles: TileOverrides { mc: self.mc, nc: self.nc, kc: self.kc, mr: self.mr, nr: self.nr },
        };
        let settings = RunSettings::resolve(&cli, &file)?;
        Ok((file, settings))
    }

    fn emit(&self, rows: &[BenchRecord]) -> Result<()> {
        match &self.out {
            Some(p) => {
                let f = File::create(p).with_context(|| format!("creating {}", p.display()))?;
                write_csv(BufWriter::new(f), rows)
            }
            None => write_csv(io::stdout().lock(), rows),
        }
    }
}

fn run_bench(cmd: Bench) -> Result<()> {
    match cmd {
        Bench::Single { common, sizes } => {
            let (_, s) = common.resolve()?;
            let shapes = load_sizes(sizes.as_deref(), BUNDLED_SINGLE)?;
            common.emit(&bench_single(&shapes, &s)?)
        }
        Bench::Chain { common, sizes, depth, no_naive } => {
            let (file, s) = common.resolve()?;
            let shapes = load_sizes(sizes.as_deref(), BUNDLED_CHAIN)?;
            let depth = depth.or(file.chain.depth).unwrap_or(config::DEFAULT_DEPTH);
            ensure!(depth >= 1, "depth must be at least 1");
            common.emit(&bench_chain(&shapes, depth, !no_naive, &s)?)
        }
        Bench::Attention { common, tokens, embed, heads, kv_heads, head_dim, hidden, causal } => {
            let (file, s) = common.resolve()?;
            let f = &file.attention;
            let tokens = tokens.or(f.tokens.clone()).unwrap_or_else(|| config::DEFAULT_TOKENS.to_string());
            let tokens = parse_token_range(&tokens)?;
            let embed = embed.or(f.embed).unwrap_or(config::DEFAULT_EMBED);
            let heads = heads.or(f.heads).unwrap_or(config::DEFAULT_HEADS);
            ensure!(heads >= 1, "heads must be at least 1");
            let sweep = AttentionSweep {
                embed,
                heads,
                kv_heads: kv_heads.or(f.kv_heads).unwrap_or(config::DEFAULT_KV_HEADS),
                head_dim: head_dim.or(f.head_dim).unwrap_or(embed / heads),
                hidden: hidden.or(f.hidden).unwrap_or(config::DEFAULT_HIDDEN),
                causal: causal.or(f.causal).unwrap_or(true),
            };
            common.emit(&bench_attention(&tokens, &sweep, &s)?)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Verify { filter, seed, inject_fault } => {
            let opts = VerifyOptions { inject_fault, seed };
            match verify::run(&filter, &opts) {
                Ok(results) => {
                    print!("{}", verify::render_table(&results));
                    let _ = io::stdout().flush();
                    if results.iter().all(|r| r.passed()) {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::FAILURE
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            }
        }
        Command::Bench(b) => match run_bench(b) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::FAILURE
            }
        },
    }
}
