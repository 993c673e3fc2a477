//! The benchmark subcommands. Each one replays a seeded experiment over a
//! number of trials and emits raw per-trial rows as CSV (UTF-8, LF, header
//! row), with aggregate summaries on stderr. Trials run in parallel but rows
//! are always emitted in trial order, so identical configurations produce
//! byte-identical output.

use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use rayon::prelude::*;
use tdigest::codec::{self, Encoding};
use tdigest::{MergePolicy, SampleSet, ScaleKind, TDigest};

use crate::gen::{trial_rng, Generator};
use crate::{CliError, DigestOpts};

/// Quantile probes for the accuracy experiment: a decade ladder into the low
/// tail, the median, and the mirrored high tail.
const ACCURACY_PROBES: [f64; 13] = [
    1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 0.1, 0.5, 0.9, 0.99, 0.999, 0.9999, 0.99999, 0.999999,
];

const SIZE_SWEEP: [f64; 6] = [20.0, 50.0, 100.0, 200.0, 500.0, 1000.0];
const SIZE_PROBES: [f64; 5] = [1e-4, 1e-3, 1e-2, 0.1, 0.5];
const PARALLEL_PROBES: [f64; 3] = [0.01, 0.5, 0.99];

#[derive(Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub digest: DigestOpts,
    /// Samples per trial
    #[arg(long, default_value_t = 1_000_000)]
    pub n: usize,
    /// Number of trials
    #[arg(long, default_value_t = 20)]
    pub trials: u64,
    /// Base seed; trial t uses splitmix64(seed + t)
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Sample generator: uniform, exponential, ascending, constant, mixture
    #[arg(long, default_value = "uniform")]
    pub generator: String,
    /// CSV output path; stdout when absent
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct BenchParallelArgs {
    #[command(flatten)]
    pub bench: BenchArgs,
    /// Partition counts to compare
    #[arg(long, value_delimiter = ',', default_value = "5,20,100")]
    pub ways: Vec<usize>,
}

impl BenchArgs {
    fn generator(&self) -> Result<Generator, CliError> {
        self.generator.parse().map_err(CliError::Usage)
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.trials < 1 {
            return Err(CliError::Usage("trials must be at least 1".into()));
        }
        if self.n < 1 {
            return Err(CliError::Usage("n must be at least 1".into()));
        }
        Ok(())
    }
}

fn csv_out(path: Option<&PathBuf>) -> Result<Box<dyn Write>, CliError> {
    match path {
        Some(p) => {
            let file = std::fs::File::create(p)
                .map_err(|e| CliError::Data(format!("cannot create {}: {e}", p.display())))?;
            Ok(Box::new(std::io::BufWriter::new(file)))
        }
        None => Ok(Box::new(std::io::BufWriter::new(std::io::stdout()))),
    }
}

fn wr(out: &mut dyn Write, line: std::fmt::Arguments<'_>) -> Result<(), CliError> {
    out.write_fmt(line)
        .map_err(|e| CliError::Data(format!("cannot write output: {e}")))
}

fn build_digest(
    delta: f64,
    scale: ScaleKind,
    policy: MergePolicy,
    values: impl IntoIterator<Item = f64>,
) -> TDigest {
    let d = TDigest::from_values(delta, scale, policy, values).expect("digest build");
    d.validate().expect("digest invariants");
    d
}

/// bench-accuracy: per trial, one digest against the sort-based oracle.
pub fn accuracy(args: BenchArgs) -> Result<(), CliError> {
    args.validate()?;
    let scale = args.digest.scale_kind()?;
    let generator = args.generator()?;
    args.digest.new_digest()?; // validate delta/policy before spawning work

    let trials: Vec<Vec<(f64, f64, f64)>> = (0..args.trials)
        .into_par_iter()
        .map(|trial| {
            let values = generator.generate(args.n, &mut trial_rng(args.seed, trial));
            let digest = build_digest(
                args.digest.delta,
                scale,
                args.digest.policy(),
                values.iter().copied(),
            );
            let oracle = SampleSet::new(values).expect("finite samples");
            ACCURACY_PROBES
                .iter()
                .map(|&q| {
                    let exact = oracle.exact_quantile(q).expect("nonempty");
                    let abs = (digest.quantile(q).expect("nonempty") - exact).abs();
                    let rel = if abs == 0.0 { 0.0 } else { abs / exact.abs() };
                    (q, abs, rel)
                })
                .collect()
        })
        .collect();

    let mut out = csv_out(args.out.as_ref())?;
    wr(
        &mut out,
        format_args!("scale,q,trial,abs_error,rel_error\n"),
    )?;
    for (trial, rows) in trials.iter().enumerate() {
        for &(q, abs, rel) in rows {
            wr(&mut out, format_args!("{scale},{q},{trial},{abs},{rel}\n"))?;
        }
    }
    out.flush()
        .map_err(|e| CliError::Data(format!("cannot write output: {e}")))?;

    for (i, &q) in ACCURACY_PROBES.iter().enumerate() {
        let errs: Vec<f64> = trials.iter().map(|rows| rows[i].1).collect();
        let (mean, sd) = mean_sd(&errs);
        eprintln!("# q={q}: mean_abs_error={mean:.3e} sd={sd:.3e}");
    }
    Ok(())
}

/// bench-size: error, centroid count and serialized size across the delta
/// sweep; counts and sizes are worst-case over the trials.
pub fn size(args: BenchArgs) -> Result<(), CliError> {
    args.validate()?;
    let scale = args.digest.scale_kind()?;
    let generator = args.generator()?;

    struct SweepPoint {
        delta: f64,
        mean_errs: Vec<f64>,
        max_count: usize,
        max_octets: usize,
    }

    let points: Vec<SweepPoint> = SIZE_SWEEP
        .par_iter()
        .map(|&delta| {
            let mut errs = vec![0.0; SIZE_PROBES.len()];
            let mut max_count = 0;
            let mut max_octets = 0;
            for trial in 0..args.trials {
                let values = generator.generate(args.n, &mut trial_rng(args.seed, trial));
                let digest = build_digest(
                    delta,
                    scale,
                    MergePolicy::default_for(delta),
                    values.iter().copied(),
                );
                let oracle = SampleSet::new(values).expect("finite samples");
                for (i, &q) in SIZE_PROBES.iter().enumerate() {
                    errs[i] += (digest.quantile(q).expect("nonempty")
                        - oracle.exact_quantile(q).expect("nonempty"))
                    .abs();
                }
                max_count = max_count.max(digest.centroids().len());
                let image = codec::encode(&digest, Encoding::Full).expect("encodable");
                max_octets = max_octets.max(image.len());
            }
            for e in &mut errs {
                *e /= args.trials as f64;
            }
            SweepPoint {
                delta,
                mean_errs: errs,
                max_count,
                max_octets,
            }
        })
        .collect();

    let mut out = csv_out(args.out.as_ref())?;
    wr(
        &mut out,
        format_args!("delta,q,mean_abs_error,centroid_count,image_octets\n"),
    )?;
    for p in &points {
        for (i, &q) in SIZE_PROBES.iter().enumerate() {
            wr(
                &mut out,
                format_args!(
                    "{},{q},{},{},{}\n",
                    p.delta, p.mean_errs[i], p.max_count, p.max_octets
                ),
            )?;
        }
    }
    out.flush()
        .map_err(|e| CliError::Data(format!("cannot write output: {e}")))?;
    Ok(())
}

/// bench-overlap: the weak-ordering offset of instrumented builds under the
/// stratified alternating policy versus a unidirectional constant-delta one.
pub fn overlap(args: BenchArgs) -> Result<(), CliError> {
    args.validate()?;
    let scale = args.digest.scale_kind()?;
    let generator = args.generator()?;
    args.digest.new_digest()?; // reject bad delta/policy before spawning work
    let base = args.digest.policy();

    let policies = [
        (
            "stratified-alternating",
            MergePolicy {
                working_delta_factor: 3.16,
                alternate_scan: true,
                ..base
            },
        ),
        (
            "unidirectional",
            MergePolicy {
                working_delta_factor: 1.0,
                alternate_scan: false,
                ..base
            },
        ),
    ];

    let mut out = csv_out(args.out.as_ref())?;
    wr(&mut out, format_args!("policy,trial,Delta\n"))?;
    for (name, policy) in policies {
        let offsets: Vec<usize> = (0..args.trials)
            .into_par_iter()
            .map(|trial| {
                let values = generator.generate(args.n, &mut trial_rng(args.seed, trial));
                let mut d = TDigest::new_instrumented(args.digest.delta, scale, policy)
                    .expect("validated configuration");
                d.extend_values(values).expect("finite samples");
                d.compress();
                d.validate().expect("digest invariants");
                d.measure_overlap().expect("instrumented")
            })
            .collect();
        for (trial, offset) in offsets.iter().enumerate() {
            wr(&mut out, format_args!("{name},{trial},{offset}\n"))?;
        }
    }
    out.flush()
        .map_err(|e| CliError::Data(format!("cannot write output: {e}")))?;
    Ok(())
}

/// bench-parallel: direct build versus stratified (sub-delta doubled) and
/// non-stratified merges over 5/20/100-way partitions of the same stream.
pub fn parallel(args: BenchParallelArgs) -> Result<(), CliError> {
    let bench = &args.bench;
    bench.validate()?;
    if args.ways.contains(&0) {
        return Err(CliError::Usage("ways must be positive".into()));
    }
    let scale = bench.digest.scale_kind()?;
    let generator = bench.generator()?;
    bench.digest.new_digest()?; // reject bad delta/policy before spawning work
    let delta = bench.digest.delta;

    type Row = (usize, &'static str, f64, f64);
    let trials: Vec<Vec<Row>> = (0..bench.trials)
        .into_par_iter()
        .map(|trial| {
            let values = generator.generate(bench.n, &mut trial_rng(bench.seed, trial));
            let oracle = SampleSet::new(values.clone()).expect("finite samples");
            let exact: Vec<f64> = PARALLEL_PROBES
                .iter()
                .map(|&q| oracle.exact_quantile(q).expect("nonempty"))
                .collect();

            let err_of = |d: &TDigest| -> Vec<f64> {
                PARALLEL_PROBES
                    .iter()
                    .zip(&exact)
                    .map(|(&q, &x)| (d.quantile(q).expect("nonempty") - x).abs())
                    .collect()
            };
            let split_build = |sub_delta: f64, ways: usize| -> TDigest {
                let chunk = bench.n.div_ceil(ways);
                let subs: Vec<TDigest> = values
                    .chunks(chunk)
                    .map(|part| {
                        build_digest(
                            sub_delta,
                            scale,
                            MergePolicy::default_for(sub_delta),
                            part.iter().copied(),
                        )
                    })
                    .collect();
                let merged = TDigest::merge_digests(&subs, delta).expect("compatible digests");
                merged.validate().expect("digest invariants");
                merged
            };

            let mut rows: Vec<Row> = Vec::new();
            let direct = build_digest(delta, scale, bench.digest.policy(), values.iter().copied());
            for (i, &q) in PARALLEL_PROBES.iter().enumerate() {
                rows.push((1, "direct", q, err_of(&direct)[i]));
            }
            for &ways in &args.ways {
                let strat = err_of(&split_build(2.0 * delta, ways));
                let flat = err_of(&split_build(delta, ways));
                for (i, &q) in PARALLEL_PROBES.iter().enumerate() {
                    rows.push((ways, "stratified", q, strat[i]));
                }
                for (i, &q) in PARALLEL_PROBES.iter().enumerate() {
                    rows.push((ways, "flat", q, flat[i]));
                }
            }
            rows
        })
        .collect();

    let mut out = csv_out(bench.out.as_ref())?;
    wr(&mut out, format_args!("ways,strategy,q,abs_error\n"))?;
    for rows in &trials {
        for &(ways, strategy, q, err) in rows {
            wr(&mut out, format_args!("{ways},{strategy},{q},{err}\n"))?;
        }
    }
    out.flush()
        .map_err(|e| CliError::Data(format!("cannot write output: {e}")))?;

    let per_trial = trials[0].len();
    for slot in 0..per_trial {
        let (ways, strategy, q, _) = trials[0][slot];
        let errs: Vec<f64> = trials.iter().map(|rows| rows[slot].3).collect();
        let (mean, sd) = mean_sd(&errs);
        eprintln!("# ways={ways} strategy={strategy} q={q}: mean_abs_error={mean:.3e} sd={sd:.3e}");
    }
    Ok(())
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n.max(1.0);
    (mean, var.sqrt())
}
