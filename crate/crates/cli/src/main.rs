use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use mfm_core::datagen::write_matrix;
use mfm_core::diagnostics::{exact_posterior_k, MAX_EXACT_N};
use mfm_core::experiments::{
    build_series, exact_rows, posterior_csv, prefix_data, read_json, run_sweep_with, summary_csv,
    write_json, write_results, CellResult, RunRecord, SweepConfig,
};
use mfm_core::{run_chain, BetaSpec};

#[derive(Parser)]
#[command(name = "mfm", version, about = "Mixture-of-finite-mixtures sampler and experiment harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the full dataset of one replicate as CSV.
    Generate(Common),
    /// Run one chain on the first N rows of one replicate.
    Run {
        #[command(flatten)]
        common: Common,
        /// Dataset size (defaults to the largest configured size).
        #[arg(long)]
        n: Option<usize>,
    },
    /// Run every (seed, N) cell of the configured grid.
    Sweep(Common),
    /// Exact posterior over k by enumerating all partitions (N <= 10).
    Exact {
        #[command(flatten)]
        common: Common,
        /// Dataset size (defaults to the smallest configured size).
        #[arg(long)]
        n: Option<usize>,
    },
    /// Summarize a run record written by `run`.
    Summarize {
        /// Path to a run.json file.
        record: PathBuf,
        /// Also write posterior_k.csv and summary.csv here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Replace the configured replicate seeds with this one.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    burnin: Option<usize>,
}

impl Common {
    fn load(&self) -> Result<SweepConfig> {
        let mut cfg = SweepConfig::from_file(&self.config)
            .with_context(|| format!("loading {}", self.config.display()))?;
        if let Some(seed) = self.seed {
            cfg.seeds = vec![seed];
        }
        if let Some(iters) = self.iters {
            cfg.chain.iterations = iters;
        }
        if let Some(burnin) = self.burnin {
            cfg.chain.burn_in = burnin;
        }
        cfg.validate()?;
        fs::create_dir_all(&self.out).with_context(|| format!("creating {}", self.out.display()))?;
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn execute(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Generate(common) => generate(&common),
        Command::Run { common, n } => run(&common, n),
        Command::Sweep(common) => sweep(&common),
        Command::Exact { common, n } => exact(&common, n),
        Command::Summarize { record, out } => summarize(&record, out.as_deref()),
    }
}

fn column_names(prefix: &str, cols: usize) -> Vec<String> {
    if cols == 1 {
        vec![prefix.to_string()]
    } else {
        (1..=cols).map(|j| format!("{prefix}{j}")).collect()
    }
}

fn generate(common: &Common) -> Result<ExitCode> {
    let cfg = common.load()?;
    for &seed in &cfg.seeds {
        let series = build_series(&cfg, seed)?;
        let names = column_names("x", series.full.cols());
        let header: Vec<&str> = names.iter().map(String::as_str).collect();
        let path = common.out.join(format!("{}_seed{seed}.csv", cfg.dataset));
        write_matrix(&path, &series.full, Some(&header))?;
        if let Some(labels) = &series.labels {
            let mut text = String::from("label\n");
            for l in labels {
                text.push_str(&format!("{l}\n"));
            }
            let lpath = common.out.join(format!("{}_seed{seed}_labels.csv", cfg.dataset));
            fs::write(&lpath, text).with_context(|| format!("writing {}", lpath.display()))?;
        }
        println!("wrote {} ({} rows)", path.display(), series.full.rows());
    }
    Ok(ExitCode::SUCCESS)
}

fn run(common: &Common, n: Option<usize>) -> Result<ExitCode> {
    let cfg = common.load()?;
    let seed = cfg.seeds[0];
    let n = n.unwrap_or(cfg.max_size());
    let (data, model) = prefix_data(&cfg, seed, n)?;
    let chain = mfm_core::ChainConfig {
        seed,
        ..cfg.chain.clone()
    };
    let output = run_chain(&data, &model, &chain)?;
    let record = RunRecord {
        dataset: cfg.dataset.clone(),
        seed,
        n,
        prior_mode: cfg.prior.mode,
        model,
        chain,
        output,
    };
    write_json(&common.out.join("run.json"), &record)?;
    let cell = record.to_cell()?;
    write_results(&common.out, std::slice::from_ref(&cell))?;
    print_table(std::slice::from_ref(&cell));
    Ok(ExitCode::SUCCESS)
}

fn sweep(common: &Common) -> Result<ExitCode> {
    let cfg = common.load()?;
    let results = run_sweep_with(&cfg, common.threads, |r| match &r.outcome {
        Ok(cell) => eprintln!(
            "done seed={} N={} mean_k={:.3} ({:.1}s)",
            r.seed, r.n, cell.summary.mean_k, cell.output.wallclock
        ),
        Err(e) => eprintln!("failed seed={} N={}: {e}", r.seed, r.n),
    })?;
    write_results(&common.out, &results)?;
    print_table(&results);
    let failed = results.iter().filter(|r| r.outcome.is_err()).count();
    if failed > 0 {
        eprintln!("{failed} cell(s) failed; see errors.csv");
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn exact(common: &Common, n: Option<usize>) -> Result<ExitCode> {
    let cfg = common.load()?;
    let n = n.unwrap_or(cfg.sizes[0]);
    if n > MAX_EXACT_N {
        bail!("exact enumeration supports N <= {MAX_EXACT_N}, got {n}");
    }
    let mut all = Vec::new();
    for &seed in &cfg.seeds {
        let (data, model) = prefix_data(&cfg, seed, n)?;
        let BetaSpec::Fixed { beta } = model.beta else {
            bail!("exact enumeration needs a fixed beta (set model.beta)");
        };
        let post = exact_posterior_k(&data, &model, beta)?;
        let rows = exact_rows(&cfg.dataset, seed, n, &post.posterior_k);
        println!(
            "seed={seed} N={n} partitions={} mean_k={:.4} mode_k={}",
            post.partitions.len(),
            rows[0].mean_k,
            rows[0].mode_k
        );
        all.extend(rows);
    }
    let path = common.out.join("posterior_k.csv");
    fs::write(&path, posterior_csv(&all)).with_context(|| format!("writing {}", path.display()))?;
    Ok(ExitCode::SUCCESS)
}

fn summarize(record: &Path, out: Option<&Path>) -> Result<ExitCode> {
    let rec: RunRecord = read_json(record).with_context(|| format!("reading {}", record.display()))?;
    let cell = rec.to_cell()?;
    let cells = std::slice::from_ref(&cell);
    if let Some(dir) = out {
        write_results(dir, cells)?;
    }
    print_table(cells);
    if let Ok(c) = &cell.outcome {
        println!();
        for (i, p) in c.summary.posterior_k.iter().enumerate() {
            println!("k={:<3} {:.4}", i + 1, p);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn print_table(results: &[CellResult]) {
    print!("{}", summary_csv(results));
}
