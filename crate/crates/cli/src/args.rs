use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use recall_forensics::audit::{Rect, Variable};
use recall_forensics::correlation::{Scale, SplitKind, SplitSpec, DEFAULT_WINDOW};
use recall_forensics::significance::{DEFAULT_REPLICATES, DEFAULT_SUBSET_SIZE};
use recall_forensics::synth::{Detector, Model};
use recall_forensics::{Channel, EventId, GeoLevel};

#[derive(Debug, Parser)]
#[command(name = "rrforensics", version, about = "Forensic statistics for center-level referendum returns")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(untagged)]
pub enum Command {
    /// Validate and normalize a center file, optionally joining another event and signer lists
    Ingest(IngestArgs),
    /// Per-center k, s, k_max, opposition shares and the 1998 to RR change
    Metrics(DataArgs),
    /// Signature/sí correlation by channel and s stratum
    Table1(Table1Args),
    /// Moving-window correlation along sorted s
    Windowed(WindowedArgs),
    /// Geographic aggregates and the cross-unit r★
    Geo(GeoArgs),
    /// Correlation of s with opposition share below and above the median s
    Splitcorr(SplitcorrArgs),
    /// Two-sample Kolmogorov–Smirnov test
    Ks(KsArgs),
    /// Permutation test of r★
    Permtest(PermtestArgs),
    /// Hot-audit representativeness of the audited subset
    Hotaudit(HotauditArgs),
    /// Cold-audit sample against the computerized universe
    Coldaudit(DataArgs),
    /// Centers inside versus outside the 20 audit-eligible counties
    County20(County20Args),
    /// Registry growth against the change in opposition share
    Repvar(RepvarArgs),
    /// Stem-and-leaf display of s for flagged groups
    Stemleaf(StemleafArgs),
    /// Generate a synthetic center file
    Synth(SynthArgs),
    /// Detector flag rates over synthetic honest and forced-linear data
    Power(PowerArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Ingest(_) => "ingest",
            Command::Metrics(_) => "metrics",
            Command::Table1(_) => "table1",
            Command::Windowed(_) => "windowed",
            Command::Geo(_) => "geo",
            Command::Splitcorr(_) => "splitcorr",
            Command::Ks(_) => "ks",
            Command::Permtest(_) => "permtest",
            Command::Hotaudit(_) => "hotaudit",
            Command::Coldaudit(_) => "coldaudit",
            Command::County20(_) => "county20",
            Command::Repvar(_) => "repvar",
            Command::Stemleaf(_) => "stemleaf",
            Command::Synth(_) => "synth",
            Command::Power(_) => "power",
        }
    }

    pub fn out_dir(&self) -> Option<&PathBuf> {
        let out = match self {
            Command::Ingest(a) => &a.out,
            Command::Metrics(a) | Command::Coldaudit(a) => &a.out,
            Command::Table1(a) => &a.out,
            Command::Windowed(a) => &a.out,
            Command::Geo(a) => &a.out,
            Command::Splitcorr(a) => &a.out,
            Command::Ks(a) => &a.out,
            Command::Permtest(a) => &a.out,
            Command::Hotaudit(a) => &a.out,
            Command::County20(a) => &a.out,
            Command::Repvar(a) => &a.out,
            Command::Stemleaf(a) => &a.out,
            Command::Synth(a) => &a.out,
            Command::Power(a) => &a.out,
        };
        out.out.as_ref()
    }
}

#[derive(Debug, Clone, Args)]
pub struct Input {
    /// Center CSV; `-` or omitted reads standard input
    #[arg(long = "in", value_name = "PATH")]
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct Output {
    /// Directory for `<command>.report.json` and plot CSVs; without it the report goes to standard output
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DataArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub input: Input,
    #[command(flatten)]
    #[serde(skip)]
    pub out: Output,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct IngestArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub input: Input,
    #[command(flatten)]
    #[serde(skip)]
    pub out: Output,
    /// Second center file whose tallies are attached by center code
    #[arg(long, value_name = "PATH", requires = "event")]
    #[serde(skip)]
    pub join: Option<PathBuf>,
    /// Event taken from the joined file
    #[arg(long)]
    pub event: Option<EventId>,
    /// Event label in the joined file to rename to --event before joining
    #[arg(long, requires = "join")]
    pub relabel: Option<EventId>,
    /// Signer list (person_id,center_code) to match against --registry
    #[arg(long, value_name = "PATH", requires = "registry")]
    #[serde(skip)]
    pub signers: Option<PathBuf>,
    /// Voter registry (person_id,center_code)
    #[arg(long, value_name = "PATH", requires = "signers")]
    #[serde(skip)]
    pub registry: Option<PathBuf>,
}

fn parse_split(s: &str) -> Result<SplitSpec, String> {
    if s == "median" {
        return Ok(SplitSpec::MEDIAN);
    }
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(SplitSpec { kind: SplitKind::Fixed(v) }),
        _ => Err(format!("expected a number or `median`, got `{s}`")),
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Table1Args {
    #[command(flatten)]
    #[serde(skip)]
    pub input: Input,
    #[command(flatten)]
    #[serde(skip)]
    pub out: Output,
    /// s value separating the low and high strata, or `median`
    #[arg(long, default_value = "0.5", value_parser = parse_split)]
    pub split: SplitSpec,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct WindowedArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub input: Input,
    #[command(flatten)]
    #[serde(skip)]
    pub out: Output,
    /// Centers per window
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    pub window: usize,
    /// `linear` or `log` (log drops centers without signatures)
    #[arg(long, default_value = "linear")]
    pub scale: Scale,
    /// Restrict to one channel (`computerized` or `manual`); default runs every channel present
    #[arg(long)]
    pub channel: Option<Channel>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GeoArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub input: Input,
    #[command(flatten)]
    #[serde(skip)]
    pub out: Output,
    /// `state`, `county` or `township`
    #[arg(long, default_value = "township")]
    pub level: GeoLevel,
    /// Restrict to one channel; default pools both
    #[arg(long)]
    pub channel: Option<Channel>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SplitcorrArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub input: Input,
    #[command(flatten)]
    #[serde(skip)]
    pub out: Output,
    /// Single event; default reports every event in the file
    #[arg(long)]
    pub event: Option<EventId>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct KsArgs {
    /// First sample: one number per line, optional header
    #[arg(long = "in", value_name = "PATH", conflicts_with = "d", requires = "in2")]
    #[serde(skip)]
    pub input: Option<PathBuf>,
    /// Second sample, same format
    #[arg(long, value_name = "PATH")]
    #[serde(skip)]
    pub in2: Option<PathBuf>,
    /// Known statistic D, for a p-value without samples
    #[arg(long, requires_all = ["n1", "n2"])]
    pub d: Option<f64>,
    #[arg(long)]
    pub n1: Option<usize>,
    #[arg(long)]
    pub n2: Option<usize>,
    #[command(flatten)]
    #[serde(skip)]
    pub out: Output,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PermtestArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub input: Input,
    #[command(flatten)]
    #[serde(skip)]
    pub out: Output,
    #[arg(long, default_value = "township")]
    pub level: GeoLevel,
    #[arg(long, default_value = "computerized")]
    pub channel: Channel,
    #[arg(long, default_value_t = DEFAULT_REPLICATES)]
    pub replicates: u64,
    /// Random seed (required)
    #[arg(long)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct HotauditArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub input: Input,
    #[command(flatten)]
    #[serde(skip)]
    pub out: Output,
    #[arg(long, default_value_t = DEFAULT_REPLICATES)]
    pub replicates: u64,
    /// Random seed (required)
    #[arg(long)]
    pub seed: u64,
    /// Size of the random subsets drawn from the selected pool
    #[arg(long, default_value_t = DEFAULT_SUBSET_SIZE)]
    pub subset_size: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct County20Args {
    #[command(flatten)]
    #[serde(skip)]
    pub input: Input,
    #[command(flatten)]
    #[serde(skip)]
    pub out: Output,
    #[arg(long, default_value = "RR2004")]
    pub event: EventId,
    /// `k` or `s`
    #[arg(long, default_value = "k")]
    pub variable: Variable,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RepvarArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub input: Input,
    #[command(flatten)]
    #[serde(skip)]
    pub out: Output,
    #[arg(long)]
    pub channel: Option<Channel>,
    /// Box query `delta_min,delta_max,growth_min,growth_max`
    #[arg(long, allow_hyphen_values = true)]
    pub rect: Option<Rect>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    All,
    Selected,
    Audited,
    Cold,
    In20,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct StemleafArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub input: Input,
    #[command(flatten)]
    #[serde(skip)]
    pub out: Output,
    /// Group shown on the left (or alone)
    #[arg(long, value_enum, default_value = "audited")]
    pub left: Group,
    /// Group shown on the right of a back-to-back display
    #[arg(long, value_enum, default_value = "selected")]
    pub right: Group,
    /// Show only the left group
    #[arg(long)]
    pub single: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SynthArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub out: Output,
    /// JSON file with a full generator configuration; flags override it
    #[arg(long, value_name = "PATH")]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// `honest` or `forced_linear`
    #[arg(long)]
    pub model: Option<Model>,
    /// Random seed (required)
    #[arg(long)]
    pub seed: u64,
    /// [default: 1200]
    #[arg(long)]
    pub n_centers: Option<usize>,
    /// Forced-linear slope [default: 1.2]
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Forced-linear noise in votes [default: 2.0]
    #[arg(long)]
    pub noise_sigma: Option<f64>,
    /// Share of manual centers [default: 0]
    #[arg(long)]
    pub manual_fraction: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PowerArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub out: Output,
    /// Base seed; dataset j of every cell uses seed + j (required)
    #[arg(long)]
    pub seed: u64,
    /// Synthetic datasets per cell
    #[arg(long, default_value_t = 100)]
    pub datasets: usize,
    /// Forced-linear slopes to sweep
    #[arg(long, value_delimiter = ',', default_value = "1.2")]
    pub lambda: Vec<f64>,
    /// Forced-linear noise levels to sweep
    #[arg(long, value_delimiter = ',', default_value = "2.0")]
    pub noise_sigma: Vec<f64>,
    /// Detectors to run
    #[arg(long, value_delimiter = ',', default_value = "windowed_flatness,median_split_diff,rstar_perm")]
    pub detectors: Vec<Detector>,
    #[arg(long, default_value_t = 1200)]
    pub n_centers: usize,
    /// Windowed-flatness threshold on the lowest-quartile minimum r
    #[arg(long, default_value_t = 0.9)]
    pub threshold: f64,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    pub window: usize,
    /// Permutation replicates inside the r★ detector
    #[arg(long, default_value_t = 2000)]
    pub perm_replicates: u64,
    #[arg(long, default_value = "township")]
    pub level: GeoLevel,
    /// Skip the honest reference cell
    #[arg(long)]
    pub no_honest: bool,
}
