use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use landscape_forge::pipeline::{cmd_embed, cmd_generate, cmd_report, cmd_train, cmd_verify, CampaignConfig};
use landscape_forge::Error;

#[derive(Parser)]
#[command(name = "landscape-forge", version, about = "Generate optimization problems with controlled landscape properties")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Campaign config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Logs generator requests and responses (API key redacted).
    #[arg(long)]
    debug_llm: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Compute corpus features, fit the scaler and train the property models.
    Train(Common),
    /// Evolve problems for every configured target group.
    Generate(Common),
    /// Basin-of-attraction and separability checks of the library.
    Verify(Common),
    /// Joint t-SNE embedding of corpus and generated features.
    Embed(Common),
    /// Success rates, retention ratios and score histograms.
    Report(Common),
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 2,
        Error::Generator(_) | Error::Upstream(_) => 3,
        _ => 1,
    }
}

fn common(cmd: &Command) -> &Common {
    match cmd {
        Command::Train(c) | Command::Generate(c) | Command::Verify(c) | Command::Embed(c) | Command::Report(c) => c,
    }
}

fn pretty<T: serde::Serialize>(v: &T) -> Result<String, Error> {
    Ok(serde_json::to_string_pretty(v)?)
}

fn run(cli: &Cli) -> Result<String, Error> {
    let c = common(&cli.command);
    let cfg = CampaignConfig::load(&c.config, c.seed)?;
    match &cli.command {
        Command::Train(_) => pretty(&cmd_train(&cfg)?),
        Command::Generate(c) => pretty(&cmd_generate(&cfg, c.debug_llm)?),
        Command::Verify(_) => pretty(&cmd_verify(&cfg)?),
        Command::Embed(_) => pretty(&cmd_embed(&cfg)?),
        Command::Report(_) => pretty(&cmd_report(&cfg)?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut logger = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"));
    if common(&cli.command).debug_llm {
        logger.filter_module("llm", log::LevelFilter::Debug);
    }
    logger.init();
    match run(&cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
