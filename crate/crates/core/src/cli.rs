//! `disagg` command line: `scan` a CSV file or `synth`esize a planted one.

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::dataset::{load_csv, SchemaConfig};
use crate::detector::{scan, ReversalDenominator, ScanConfig, SubgroupTest};
use crate::error::{Error, Result};
use crate::glm::FitConfig;
use crate::partition::PartitionConfig;
use crate::report::{emit_heatmap, emit_report, heatmap_stem, ReportFormat};
use crate::synth::{generate, PlantedSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "disagg", version, about = "Find covariate pairs whose disaggregation changes the outcome trend")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Scan every ordered covariate pair of a CSV file.
    Scan(ScanArgs),
    /// Generate a CSV file with planted subgroup trends.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DenominatorArg {
    All,
    Significant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SubgroupTestArg {
    Wald,
    Deviance,
}

#[derive(Debug, clap::Args)]
pub struct ScanArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub outcome: String,
    /// Only consider these covariates.
    #[arg(long, value_delimiter = ',')]
    pub include: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    pub exclude: Vec<String>,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    pub min_bin_size: u64,
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
    pub max_bins: u64,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long)]
    pub require_reversal: bool,
    /// Benjamini–Hochberg correction of the disaggregation p-values.
    #[arg(long)]
    pub bh: bool,
    #[arg(long)]
    pub top_k: Option<usize>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Markdown)]
    pub format: ReportFormat,
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub heatmap_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
    pub heatmap_bins: u64,
    #[arg(long, value_enum, default_value_t = DenominatorArg::All)]
    pub reversal_denominator: DenominatorArg,
    #[arg(long, value_enum, default_value_t = SubgroupTestArg::Wald)]
    pub subgroup_test: SubgroupTestArg,
    /// Worker threads (defaults to the number of CPUs).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub threads: Option<u64>,
}

#[derive(Debug, clap::Args)]
pub struct SynthArgs {
    /// JSON generator spec.
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Override the seed in the spec.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also write the ground truth as JSON.
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

impl ScanArgs {
    pub fn scan_config(&self) -> Result<ScanConfig> {
        let config = ScanConfig {
            alpha_level: self.alpha,
            partition: PartitionConfig {
                max_bins: self.max_bins as usize,
                min_bin_size: self.min_bin_size as usize,
                ..PartitionConfig::default()
            },
            fit: FitConfig::default(),
            top_k: self.top_k,
            require_reversal: self.require_reversal,
            bh_correction: self.bh,
            reversal_denominator: match self.reversal_denominator {
                DenominatorArg::All => ReversalDenominator::AllSubgroups,
                DenominatorArg::Significant => ReversalDenominator::SignificantSubgroups,
            },
            subgroup_test: match self.subgroup_test {
                SubgroupTestArg::Wald => SubgroupTest::Wald,
                SubgroupTestArg::Deviance => SubgroupTest::Deviance,
            },
            threads: self.threads.map(|t| t as usize),
        };
        config.validate()?;
        Ok(config)
    }
}

fn run_scan(args: &ScanArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let config = args.scan_config()?;
    let schema = SchemaConfig {
        outcome: args.outcome.clone(),
        include: args.include.clone(),
        exclude: args.exclude.clone(),
    };
    let dataset = load_csv(&args.input, &schema)?;
    let report = scan(&dataset, &config)?;
    let bytes = emit_report(&report, args.format)?;
    match &args.out {
        Some(path) => std::fs::write(path, &bytes)?,
        None => stdout.write_all(&bytes)?,
    }
    if let Some(dir) = &args.heatmap_dir {
        for (i, result) in report.results.iter().enumerate() {
            let view = dataset.pair_view(&result.x_j, &result.x_c)?;
            let grid = emit_heatmap(result, &view, args.heatmap_bins as usize);
            grid.write_files(dir, &heatmap_stem(i + 1, result))?;
        }
        writeln!(stderr, "wrote {} heatmaps to {}", report.results.len(), dir.display())?;
    }
    Ok(())
}

fn run_synth(args: &SynthArgs, stderr: &mut dyn Write) -> Result<()> {
    let text = std::fs::read_to_string(&args.spec).map_err(|source| Error::File {
        path: args.spec.clone(),
        source,
    })?;
    let mut spec: PlantedSpec = serde_json::from_str(&text)
        .map_err(|e| Error::InvalidSpec(format!("{}: {e}", args.spec.display())))?;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let (dataset, truth) = generate(&spec)?;
    let file = std::fs::File::create(&args.out)?;
    dataset.write_csv(std::io::BufWriter::new(file))?;
    if let Some(path) = &args.truth {
        let mut json = serde_json::to_vec_pretty(&truth)?;
        json.push(b'\n');
        std::fs::write(path, json)?;
    }
    writeln!(
        stderr,
        "wrote {} rows (seed {}) to {}",
        dataset.n_rows(),
        spec.seed,
        args.out.display()
    )?;
    Ok(())
}

/// Parse `args` (including the program name) and run. Returns the exit code.
pub fn run_cli<I, S>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(text.as_bytes())
            } else {
                stdout.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Scan(args) => run_scan(args, stdout, stderr),
        Command::Synth(args) => run_synth(args, stderr),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e @ Error::Domain(_)) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_USAGE
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_DATA
        }
    }
}
