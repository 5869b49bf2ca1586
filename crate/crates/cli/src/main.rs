use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use standin_cli::{emit_report, exit_status, run_campaign, simulate, tabulate, CampaignConfig, CampaignError, Format, Mode};

#[derive(Parser)]
#[command(name = "standin", version, about = "Black-box replacement testing campaigns")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Campaign file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; defaults to `report.out` beside the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report formats to write; defaults to `report.formats`.
    #[arg(long, value_delimiter = ',')]
    format: Vec<Format>,
    /// Worker threads for per-case work.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the whole campaign.
    Run(Common),
    /// Run the configured metric audits.
    Audit(Common),
    /// Compare the first two tuples.
    Replace(Common),
    /// Drive one traffic scenario and dump its trajectory as JSON.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Scenario file.
        #[arg(long)]
        scenario: PathBuf,
        /// Tuple to drive; the first one by default.
        #[arg(long)]
        tuple: Option<String>,
    },
    /// Print the lookup table of a function or dialogue system.
    Tabulate {
        #[command(flatten)]
        common: Common,
        /// System spec; the first system of the first tuple by default.
        #[arg(long)]
        system: Option<String>,
    },
}

fn load(common: &Common) -> Result<(CampaignConfig, PathBuf), CampaignError> {
    let mut config = CampaignConfig::load(&common.config)?;
    if let Some(s) = common.seed {
        config.seed = s;
    }
    let base = common.config.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((config, base))
}

fn out_dir(common: &Common, config: &CampaignConfig, base: &Path) -> PathBuf {
    common.out.clone().unwrap_or_else(|| base.join(&config.report.out))
}

fn write_out(common: &Common, file: &str, text: &str) -> Result<(), CampaignError> {
    match &common.out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| CampaignError::io(dir, e))?;
            let path = dir.join(file);
            std::fs::write(&path, text).map_err(|e| CampaignError::io(&path, e))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn campaign(common: &Common, mode: Mode) -> Result<i32, CampaignError> {
    let (config, base) = load(common)?;
    let report = run_campaign(&config, &base, mode)?;
    let formats = if common.format.is_empty() {
        config.report.formats.clone()
    } else {
        common.format.clone()
    };
    let dir = out_dir(common, &config, &base);
    for path in emit_report(&report, &formats, &dir)? {
        eprintln!("wrote {}", path.display());
    }
    if let Some(e) = &report.error {
        eprintln!("campaign aborted: {e}");
    }
    Ok(exit_status(&report, mode))
}

fn dispatch(command: &Command) -> Result<i32, CampaignError> {
    match command {
        Command::Run(c) => campaign(c, Mode::Run),
        Command::Audit(c) => campaign(c, Mode::Audit),
        Command::Replace(c) => campaign(c, Mode::Replace),
        Command::Simulate { common, scenario, tuple } => {
            let (config, base) = load(common)?;
            let text = std::fs::read_to_string(scenario).map_err(|e| CampaignError::io(scenario, e))?;
            let t = simulate(&config, &base, &text, tuple.as_deref())?;
            let json = serde_json::to_string_pretty(&t).map_err(|e| CampaignError::Encode(e.to_string()))?;
            write_out(common, "trajectory.json", &(json + "\n"))?;
            Ok(i32::from(t.verdict.outcome == standin::Outcome::Fail))
        }
        Command::Tabulate { common, system } => {
            let (config, base) = load(common)?;
            write_out(common, "table.tsv", &tabulate(&config, &base, system.as_deref())?)?;
            Ok(0)
        }
    }
}

fn jobs(command: &Command) -> Option<usize> {
    match command {
        Command::Run(c) | Command::Audit(c) | Command::Replace(c) => c.jobs,
        Command::Simulate { common, .. } | Command::Tabulate { common, .. } => common.jobs,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match jobs(&cli.command) {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build() {
            Ok(pool) => pool.install(|| dispatch(&cli.command)),
            Err(e) => Err(CampaignError::config(format!("--jobs: {e}"))),
        },
        None => dispatch(&cli.command),
    };
    let code = result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        e.exit_code()
    });
    ExitCode::from(code as u8)
}
