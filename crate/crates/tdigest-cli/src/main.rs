//! Command-line harness around the t-digest library: build digest files from
//! value streams, query them, merge them, and reproduce the accuracy, size,
//! ordering and parallel-merge experiments as CSV.

mod bench;
mod gen;

use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tdigest::codec::{self, CodecError, Encoding};
use tdigest::{MergePolicy, ScaleKind, TDigest};

#[derive(Parser)]
#[command(
    name = "tdigest",
    version,
    about = "Streaming quantile sketches: build, query, merge and benchmark t-digests"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a digest file from a stream of values
    Build(BuildArgs),
    /// Print quantile estimates from a digest file
    Quantile(ProbeArgs),
    /// Print CDF estimates from a digest file
    Cdf(ProbeArgs),
    /// Print trimmed means from a digest file (probes are lo/hi pairs)
    Tmean(ProbeArgs),
    /// Merge digest files into one
    Merge(MergeArgs),
    /// Quantile error against the exact oracle, per trial and probe
    BenchAccuracy(bench::BenchArgs),
    /// Error, centroid count and image size across a sweep of delta
    BenchSize(bench::BenchArgs),
    /// Weak-ordering offset under stratified vs unidirectional construction
    BenchOverlap(bench::BenchArgs),
    /// Parallel merge strategies against the direct build
    BenchParallel(bench::BenchParallelArgs),
}

/// Digest construction knobs shared by every command that builds digests.
#[derive(Args, Clone)]
pub struct DigestOpts {
    /// Compression parameter (number of centroids scales with it)
    #[arg(long, default_value_t = 100.0)]
    pub delta: f64,
    /// Scale function: k0, k1, k2, k3, k2u or k3u
    #[arg(long, default_value = "k2")]
    pub scale: String,
    /// Merge buffer capacity [default: 10 times the delta ceiling]
    #[arg(long)]
    pub buffer: Option<usize>,
    /// Working-compression multiplier while data streams in
    #[arg(long, default_value_t = 3.0)]
    pub stratify_factor: f64,
    /// Alternate the merge scan direction between passes (the default)
    #[arg(long, overrides_with = "no_alternate")]
    pub alternate: bool,
    /// Keep every merge scan left-to-right
    #[arg(long)]
    pub no_alternate: bool,
}

impl DigestOpts {
    pub fn scale_kind(&self) -> Result<ScaleKind, CliError> {
        self.scale.parse().map_err(CliError::Usage)
    }

    pub fn policy(&self) -> MergePolicy {
        let mut policy = MergePolicy::default_for(self.delta);
        if let Some(capacity) = self.buffer {
            policy.buffer_capacity = capacity;
        }
        policy.working_delta_factor = self.stratify_factor;
        policy.alternate_scan = !self.no_alternate;
        policy
    }

    pub fn new_digest(&self) -> Result<TDigest, CliError> {
        TDigest::new(self.delta, self.scale_kind()?, self.policy()).map_err(usage_err)
    }
}

#[derive(Args)]
struct BuildArgs {
    #[command(flatten)]
    digest: DigestOpts,
    /// Input format: text (newline-separated decimals) or f64le (raw
    /// little-endian 64-bit floats)
    #[arg(long, default_value = "text")]
    format: String,
    /// Wire encoding of the output: full or compact
    #[arg(long, default_value = "full")]
    encoding: String,
    /// Digest file to write
    #[arg(long)]
    out: PathBuf,
    /// Input file; reads stdin when absent or "-"
    input: Option<PathBuf>,
}

#[derive(Args)]
struct ProbeArgs {
    /// Digest file to query
    digest_file: PathBuf,
    /// Probe values
    #[arg(required = true)]
    probes: Vec<f64>,
}

#[derive(Args)]
struct MergeArgs {
    /// Compression of the result [default: the smallest input delta]
    #[arg(long)]
    delta: Option<f64>,
    /// Wire encoding of the output: full or compact
    #[arg(long, default_value = "full")]
    encoding: String,
    /// Digest file to write
    #[arg(long)]
    out: PathBuf,
    /// Digest files to merge
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
}

/// Errors carrying their process exit code: 1 usage, 2 data, 3 format.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Format(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Format(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Format(m) => f.write_str(m),
        }
    }
}

/// Library errors raised by bad argument values.
pub fn usage_err(e: tdigest::Error) -> CliError {
    CliError::Usage(e.to_string())
}

/// Library errors raised by bad input data.
pub fn data_err(e: tdigest::Error) -> CliError {
    CliError::Data(e.to_string())
}

/// Library errors raised while answering probes: a bad probe value is a
/// usage error, anything about the digest itself is a data error.
fn probe_err(e: tdigest::Error) -> CliError {
    match e {
        tdigest::Error::QuantileOutOfRange(_)
        | tdigest::Error::InvalidTrimRange(..)
        | tdigest::Error::NanProbe => CliError::Usage(e.to_string()),
        other => CliError::Data(other.to_string()),
    }
}

fn io_err(context: &str, e: std::io::Error) -> CliError {
    CliError::Data(format!("{context}: {e}"))
}

fn codec_err(e: CodecError) -> CliError {
    CliError::Format(e.to_string())
}

fn parse_encoding(name: &str) -> Result<Encoding, CliError> {
    match name {
        "full" => Ok(Encoding::Full),
        "compact" => Ok(Encoding::Compact),
        other => Err(CliError::Usage(format!(
            "unknown encoding {other:?}, expected full or compact"
        ))),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Build(args) => build(args),
        Command::Quantile(args) => probe(args, |d, q| d.quantile(q)),
        Command::Cdf(args) => probe(args, |d, x| d.cdf(x)),
        Command::Tmean(args) => tmean(args),
        Command::Merge(args) => merge(args),
        Command::BenchAccuracy(args) => bench::accuracy(args),
        Command::BenchSize(args) => bench::size(args),
        Command::BenchOverlap(args) => bench::overlap(args),
        Command::BenchParallel(args) => bench::parallel(args),
    }
}

fn read_input(path: Option<&Path>) -> Result<Vec<u8>, CliError> {
    match path {
        Some(p) if p.as_os_str() != "-" => {
            std::fs::read(p).map_err(|e| io_err(&format!("cannot read {}", p.display()), e))
        }
        _ => {
            let mut buf = Vec::new();
            std::io::stdin()
                .read_to_end(&mut buf)
                .map_err(|e| io_err("cannot read stdin", e))?;
            Ok(buf)
        }
    }
}

fn parse_values(raw: &[u8], format: &str) -> Result<Vec<f64>, CliError> {
    match format {
        "text" => {
            let text = std::str::from_utf8(raw)
                .map_err(|_| CliError::Data("input is not valid UTF-8".into()))?;
            let mut values = Vec::new();
            for (i, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() {
                    continue;
                }
                let value: f64 = line.parse().map_err(|_| {
                    CliError::Data(format!("line {}: invalid decimal literal {line:?}", i + 1))
                })?;
                if !value.is_finite() {
                    return Err(CliError::Data(format!(
                        "line {}: non-finite value {line:?}",
                        i + 1
                    )));
                }
                values.push(value);
            }
            Ok(values)
        }
        "f64le" => {
            if !raw.len().is_multiple_of(8) {
                return Err(CliError::Data(format!(
                    "raw input length {} is not a multiple of 8",
                    raw.len()
                )));
            }
            let mut values = Vec::with_capacity(raw.len() / 8);
            for (i, chunk) in raw.chunks_exact(8).enumerate() {
                let value = f64::from_le_bytes(chunk.try_into().unwrap());
                if !value.is_finite() {
                    return Err(CliError::Data(format!(
                        "record {}: non-finite value {value}",
                        i + 1
                    )));
                }
                values.push(value);
            }
            Ok(values)
        }
        other => Err(CliError::Usage(format!(
            "unknown input format {other:?}, expected text or f64le"
        ))),
    }
}

pub fn read_digest(path: &Path) -> Result<TDigest, CliError> {
    let bytes =
        std::fs::read(path).map_err(|e| io_err(&format!("cannot read {}", path.display()), e))?;
    codec::decode(&bytes).map_err(codec_err)
}

pub fn write_digest(digest: &TDigest, encoding: Encoding, path: &Path) -> Result<(), CliError> {
    let image = codec::encode(digest, encoding).map_err(codec_err)?;
    std::fs::write(path, image.as_bytes())
        .map_err(|e| io_err(&format!("cannot write {}", path.display()), e))
}

fn build(args: BuildArgs) -> Result<(), CliError> {
    let encoding = parse_encoding(&args.encoding)?;
    let raw = read_input(args.input.as_deref())?;
    let values = parse_values(&raw, &args.format)?;
    let mut digest = args.digest.new_digest()?;
    digest.extend_values(values).map_err(data_err)?;
    digest.compress();
    digest.validate().map_err(data_err)?;
    write_digest(&digest, encoding, &args.out)?;
    println!(
        "centroids={} total_weight={} min={} max={}",
        digest.centroids().len(),
        digest.total_weight(),
        digest.min(),
        digest.max()
    );
    Ok(())
}

fn probe(
    args: ProbeArgs,
    f: impl Fn(&TDigest, f64) -> tdigest::Result<f64>,
) -> Result<(), CliError> {
    let digest = read_digest(&args.digest_file)?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for &p in &args.probes {
        let v = f(&digest, p).map_err(probe_err)?;
        writeln!(out, "{v:.16e}").map_err(|e| io_err("cannot write output", e))?;
    }
    Ok(())
}

fn tmean(args: ProbeArgs) -> Result<(), CliError> {
    if !args.probes.len().is_multiple_of(2) {
        return Err(CliError::Usage(
            "tmean probes must be lo/hi pairs; got an odd count".into(),
        ));
    }
    let digest = read_digest(&args.digest_file)?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for pair in args.probes.chunks_exact(2) {
        let v = digest.trimmed_mean(pair[0], pair[1]).map_err(probe_err)?;
        writeln!(out, "{v:.16e}").map_err(|e| io_err("cannot write output", e))?;
    }
    Ok(())
}

fn merge(args: MergeArgs) -> Result<(), CliError> {
    let encoding = parse_encoding(&args.encoding)?;
    let digests: Vec<TDigest> = args
        .inputs
        .iter()
        .map(|p| read_digest(p))
        .collect::<Result<_, _>>()?;
    let out_delta = args.delta.unwrap_or_else(|| {
        digests
            .iter()
            .map(TDigest::delta)
            .fold(f64::INFINITY, f64::min)
    });
    let merged = TDigest::merge_digests(&digests, out_delta).map_err(data_err)?;
    merged.validate().map_err(data_err)?;
    write_digest(&merged, encoding, &args.out)?;
    println!(
        "centroids={} total_weight={} min={} max={}",
        merged.centroids().len(),
        merged.total_weight(),
        merged.min(),
        merged.max()
    );
    Ok(())
}
