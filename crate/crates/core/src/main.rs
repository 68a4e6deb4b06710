use std::path::PathBuf;
use std::process::ExitCode;

use banglish_demand::cli::{self, Overrides, PipelineConfig};
use banglish_demand::{Error, ErrorKind};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "banglish-demand", version, about = "Smartphone demand analysis over Banglish comments")]
struct Args {
    /// Pipeline config (JSON)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides every seed in the config
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for parallel stages
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Overrides paths.output_dir
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Merge comment CSVs, print the null profile and write comments.csv
    Ingest,
    /// Normalize the phone catalog into catalog.csv
    Catalog,
    /// Correct misspelled device names and tag mentions
    Match,
    /// Write NER exports and the train/test split
    Annotate,
    /// Train the sentiment classifier and write model.json
    Train,
    /// Score demand per device and write the report and chart
    Analyze,
}

fn run(args: Args) -> Result<(), Error> {
    if args.threads == 0 {
        return Err(Error::Config("--threads must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(args.threads)
        .build_global()
        .map_err(|e| Error::Config(e.to_string()))?;

    let config_path = args.config.ok_or_else(|| Error::Config("--config is required".into()))?;
    let overrides = Overrides {
        seed: args.seed,
        output_dir: args.output_dir,
    };
    let cfg = PipelineConfig::load(&config_path, &overrides)?;
    std::fs::create_dir_all(&cfg.paths.output_dir).map_err(|source| Error::Write {
        path: cfg.paths.output_dir.clone(),
        source,
    })?;

    match args.command {
        Command::Ingest => {
            let profile = cli::cmd_ingest(&cfg)?;
            println!("{profile}");
        }
        Command::Catalog => {
            let catalog = cli::cmd_catalog(&cfg)?;
            println!("catalog: {} models", catalog.len());
        }
        Command::Match => {
            let s = cli::cmd_match(&cfg)?;
            println!("match: {} comments, {} replacements, {} entities", s.comments, s.replacements, s.entities);
        }
        Command::Annotate => {
            let s = cli::cmd_annotate(&cfg)?;
            println!(
                "annotate: {} comments ({} unlabeled), train {}, test {}",
                s.annotated, s.unlabeled, s.train, s.test
            );
        }
        Command::Train => {
            let s = cli::cmd_train(&cfg)?;
            for (i, loss) in s.epoch_losses.iter().enumerate() {
                println!("epoch {:>3}  loss {loss:.6}", i + 1);
            }
            println!(
                "threshold {:.4}  train accuracy {:.4}  test accuracy {:.4}",
                s.threshold, s.train_accuracy, s.test_accuracy
            );
        }
        Command::Analyze => {
            let records = cli::cmd_analyze(&cfg)?;
            println!("analyze: {} devices", records.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            eprintln!("error: {}", msg.lines().next().unwrap_or("invalid arguments"));
            return ExitCode::from(1);
        }
    };
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::Config => 1,
                ErrorKind::Input => 2,
                ErrorKind::Data => 3,
            };
            eprintln!("error: {}", e.to_string().replace('\n', " "));
            ExitCode::from(code)
        }
    }
}
