use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use inpg::dynamics::{Method, StepSize, TheoremAudit};
use inpg::game::{make_general_potential, make_identical_interest, summary, write_game, GameKind};
use inpg::harness::audit::{find_runs, load_run};
use inpg::harness::{
    format_report, plot_dir, plot_files, run_experiment, variants, CheckGroup, CheckSelection, ExperimentSpec,
    GameSource,
};

#[derive(Parser)]
#[command(name = "inpg", version, about = "Independent NPG dynamics on potential games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Identical,
    General,
}

impl From<Kind> for GameKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Identical => GameKind::IdenticalInterest,
            Kind::General => GameKind::GeneralPotential,
        }
    }
}

#[derive(Args)]
struct GameArgs {
    #[arg(long, default_value_t = 4)]
    agents: usize,
    #[arg(long, default_value_t = 20)]
    actions: usize,
    /// Game seed; with `run`, the base seed of the per-run streams.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "identical")]
    kind: Kind,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random potential game and write it with a text summary.
    Generate {
        #[command(flatten)]
        game: GameArgs,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Run learning dynamics and write per-run and aggregate CSV logs.
    Run {
        #[command(flatten)]
        game: GameArgs,
        /// Load this game instead of generating one per run.
        #[arg(long = "game", value_name = "PATH")]
        game_file: Option<PathBuf>,
        /// Comma-separated: npg, mwu, pg.
        #[arg(long, value_delimiter = ',', default_value = "npg")]
        method: Vec<Method>,
        /// Comma-separated temperatures for npg.
        #[arg(long, value_delimiter = ',', default_value = "0.01")]
        tau: Vec<f64>,
        /// `auto` or a fixed step size.
        #[arg(long, default_value = "auto")]
        eta: StepSize,
        #[arg(long, default_value_t = 10_000)]
        iters: usize,
        #[arg(long, default_value_t = 1)]
        runs: usize,
        /// After the first 1000 iterations, log every n-th.
        #[arg(long, default_value_t = 10)]
        log_every: usize,
        #[arg(long, value_delimiter = ',', default_value = "all")]
        check: Vec<CheckGroup>,
        #[arg(long)]
        stop_qre_gap: Option<f64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Print the full audit of every run.
        #[arg(long)]
        verbose: bool,
    },
    /// Render SVG figures from aggregate CSVs.
    Plot {
        /// Aggregate CSVs; defaults to every aggregate in --out.
        files: Vec<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Re-check the theorem bounds of completed runs.
    Audit {
        /// Run summaries (`.json`); defaults to every run in --out.
        files: Vec<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "all")]
        check: Vec<CheckGroup>,
    },
}

fn generate(args: &GameArgs, out: &PathBuf) -> inpg::Result<()> {
    let game = match args.kind {
        Kind::Identical => make_identical_interest(args.agents, args.actions, args.seed)?,
        Kind::General => make_general_potential(args.agents, args.actions, args.seed)?,
    };
    std::fs::create_dir_all(out).map_err(|e| inpg::Error::Io {
        path: out.clone(),
        source: e,
    })?;
    let stem = format!(
        "game-{}-n{}-a{}-s{}",
        GameKind::from(args.kind).name(),
        args.agents,
        args.actions,
        args.seed
    );
    let path = out.join(format!("{stem}.pgame"));
    write_game(&game, &path)?;
    let txt = out.join(format!("{stem}.txt"));
    std::fs::write(&txt, summary(&game)).map_err(|e| inpg::Error::Io {
        path: txt.clone(),
        source: e,
    })?;
    println!("{}", path.display());
    print!("{}", summary(&game));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate { game, out } => generate(&game, &out).map(|_| true),
        Command::Run {
            game,
            game_file,
            method,
            tau,
            eta,
            iters,
            runs,
            log_every,
            check,
            stop_qre_gap,
            out,
            verbose,
        } => {
            let source = match game_file {
                Some(path) => GameSource::File(path),
                None => GameSource::Generate {
                    kind: game.kind.into(),
                    num_agents: game.agents,
                    num_actions: game.actions,
                },
            };
            let spec = ExperimentSpec {
                source,
                variants: variants(&method, &tau, eta),
                num_seeds: runs,
                base_seed: game.seed,
                max_iters: iters,
                log_every,
                stop_qre_gap,
                out_dir: out,
            };
            let selection = CheckSelection::new(&check);
            run_experiment(&spec).map(|report| {
                let mut ok = true;
                for r in &report.runs {
                    let (text, failed) = format_report(&r.stem, &r.log.summary, &r.audit, &selection);
                    ok &= !failed;
                    if verbose || failed {
                        print!("{text}");
                    } else {
                        println!(
                            "{}: T {}, final ne-gap {:.6e}, final qre-gap {:.6e}",
                            r.stem, r.log.summary.iterations, r.log.summary.final_ne_gap, r.log.summary.final_qre_gap
                        );
                    }
                }
                for (_, path) in &report.aggregates {
                    println!("wrote {}", path.display());
                }
                ok
            })
        }
        Command::Plot { files, out } => {
            let written = if files.is_empty() {
                plot_dir(&out)
            } else {
                std::fs::create_dir_all(&out)
                    .map_err(|e| inpg::Error::Io {
                        path: out.clone(),
                        source: e,
                    })
                    .and_then(|_| plot_files(&files, &out))
            };
            written.map(|paths| {
                for p in paths {
                    println!("wrote {}", p.display());
                }
                true
            })
        }
        Command::Audit { files, out, check } => {
            let selection = CheckSelection::new(&check);
            let files = if files.is_empty() { find_runs(&out) } else { Ok(files) };
            files.and_then(|files| {
                if files.is_empty() {
                    println!("no runs found");
                }
                let mut ok = true;
                for f in files {
                    let run = load_run(&f)?;
                    let audit = TheoremAudit::evaluate(&run.summary, &run.records);
                    let (text, failed) = format_report(&run.stem, &run.summary, &audit, &selection);
                    print!("{text}");
                    ok &= !failed;
                }
                Ok(ok)
            })
        }
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("one or more checks failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
