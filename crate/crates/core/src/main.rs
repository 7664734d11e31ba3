use std::fs;
use std::io::{self, BufWriter, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use livequery_sim::runner::{run_script, EXIT_PARSE};
use livequery_sim::runtime::SimConfig;
use livequery_sim::store::Strategy;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StrategyArg {
    Merge,
    Deferred,
    Versiondiff,
}

impl From<StrategyArg> for Strategy {
    fn from(arg: StrategyArg) -> Self {
        match arg {
            StrategyArg::Merge => Strategy::MergeOnWrite,
            StrategyArg::Deferred => Strategy::DeferredMerge,
            StrategyArg::Versiondiff => Strategy::VersionDiff,
        }
    }
}

/// Run a live-query scenario against a simulated key-value cluster and
/// print JSONL results.
#[derive(Debug, Parser)]
#[command(name = "livequery-sim", version)]
struct Args {
    /// Number of physical nodes.
    #[arg(long, default_value_t = 3)]
    nodes: usize,
    /// Virtual nodes per physical node.
    #[arg(long, default_value_t = 100)]
    vnodes: u32,
    /// Replication factor, clamped to the node count.
    #[arg(long, default_value_t = 3)]
    replication: usize,
    /// Change-detection strategy.
    #[arg(long, value_enum, default_value = "versiondiff")]
    strategy: StrategyArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    min_latency: u64,
    #[arg(long, default_value_t = 3)]
    max_latency: u64,
    /// Probability in [0, 1] that an inter-node message is lost.
    #[arg(long, default_value_t = 0.0)]
    drop_rate: f64,
    #[arg(long, default_value_t = 1)]
    gossip_interval: u64,
    /// Gossip peers contacted per interval.
    #[arg(long, default_value_t = 2)]
    fanout: usize,
    #[arg(long, default_value_t = 8)]
    suspect_after: u64,
    #[arg(long, default_value_t = 3)]
    compaction_delay: u64,
    #[arg(long, default_value_t = 2)]
    diff_delay: u64,
    /// Scenario file; standard input when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Also emit one `event` record per dispatched event.
    #[arg(long)]
    trace: bool,
}

impl Args {
    fn config(&self) -> SimConfig {
        SimConfig {
            nodes: self.nodes,
            vnodes_per_node: self.vnodes,
            replication: self.replication,
            strategy: self.strategy.into(),
            seed: self.seed,
            min_latency: self.min_latency,
            max_latency: self.max_latency,
            drop_rate: self.drop_rate,
            gossip_interval: self.gossip_interval,
            fanout: self.fanout,
            suspect_after: self.suspect_after,
            compaction_delay: self.compaction_delay,
            diff_delay: self.diff_delay,
            trace: self.trace,
        }
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let text = match &args.scenario {
        Some(path) => fs::read_to_string(path),
        None => {
            let mut buf = String::new();
            io::stdin().read_to_string(&mut buf).map(|_| buf)
        }
    };
    let text = match text {
        Ok(text) => text,
        Err(e) => {
            eprintln!("livequery-sim: cannot read scenario: {e}");
            return ExitCode::from(EXIT_PARSE as u8);
        }
    };
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let code = match run_script(args.config(), &text, &mut out).and_then(|code| out.flush().map(|_| code)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("livequery-sim: {e}");
            1
        }
    };
    ExitCode::from(code as u8)
}
