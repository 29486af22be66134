use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use avgcons_bench::{
    cmd_scaling, cmd_simulate, cmd_spectral, cmd_tconv, cmd_validate, error_exit_code,
    ExperimentConfig, Outcome, RawConfig,
};
use avgcons_core::Result;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "avgcons", version, about = "Distributed averaging experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one trajectory and write trajectory.csv and variance.csv.
    Simulate(Common),
    /// Measure the convergence time for a single n.
    Tconv(Common),
    /// Sweep n-list, fit ln T against ln n and audit the lower bound.
    Scaling(Common),
    /// Spectrum of the linearization at consensus.
    Spectral(Common),
    /// Check that every B-round window has a connected union graph.
    Validate(Common),
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` file; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// max-degree, metropolis, load-balancing or custom:<id>.
    #[arg(long)]
    rule: Option<String>,
    /// Sequence kind, or periodic-list:<dir>.
    #[arg(long)]
    seq: Option<String>,
    #[arg(long)]
    n: Option<String>,
    /// Comma-separated sizes.
    #[arg(long = "n-list")]
    n_list: Option<String>,
    #[arg(long)]
    epsilon: Option<String>,
    /// Connectivity window length.
    #[arg(long = "B")]
    b: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// spectral, random:<k> or file:<path>.
    #[arg(long)]
    init: Option<String>,
    #[arg(long = "t-max")]
    t_max: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    jobs: Option<String>,
    /// boundary, bound:<b> or a fixed value.
    #[arg(long = "max-degree-eps")]
    max_degree_eps: Option<String>,
    /// boundary, scaled:<f> or a fixed value.
    #[arg(long = "metropolis-weight")]
    metropolis_weight: Option<String>,
    /// Load-balancing partner choice: strict or inclusive.
    #[arg(long)]
    selection: Option<String>,
    /// Extra-edge probability for seeded-random-spanning.
    #[arg(long = "edge-prob")]
    edge_prob: Option<String>,
}

impl Common {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut raw = match &self.config {
            Some(path) => RawConfig::load(path)?,
            None => RawConfig::default(),
        };
        let mut flags = RawConfig::default();
        let pairs = [
            ("rule", &self.rule),
            ("seq", &self.seq),
            ("n-list", &self.n_list),
            ("n", &self.n),
            ("epsilon", &self.epsilon),
            ("B", &self.b),
            ("seed", &self.seed),
            ("init", &self.init),
            ("t-max", &self.t_max),
            ("out", &self.out),
            ("jobs", &self.jobs),
            ("max-degree-eps", &self.max_degree_eps),
            ("metropolis-weight", &self.metropolis_weight),
            ("selection", &self.selection),
            ("edge-prob", &self.edge_prob),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                flags.set(key, v)?;
            }
        }
        raw.merge(flags);
        raw.resolve()
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let (common, cmd): (&Common, fn(&ExperimentConfig, &mut dyn Write) -> Result<Outcome>) =
        match &cli.command {
            Command::Simulate(c) => (c, cmd_simulate),
            Command::Tconv(c) => (c, cmd_tconv),
            Command::Scaling(c) => (c, cmd_scaling),
            Command::Spectral(c) => (c, cmd_spectral),
            Command::Validate(c) => (c, cmd_validate),
        };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match common.resolve().and_then(|cfg| cmd(&cfg, &mut out)) {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::ScientificFailure) => ExitCode::from(2),
        Err(e) => {
            let _ = out.flush();
            eprintln!("avgcons: {e}");
            ExitCode::from(error_exit_code(&e))
        }
    }
}
