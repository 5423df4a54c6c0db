//! `awq-edge`: synthesize, quantize, inspect, run, profile, and score
//! AWQ_MACRO-packed models.
//!
//! Exit codes: 0 success, 2 usage error, 3 data/format error. Requested
//! artifacts go to stdout; everything else goes to stderr.

use awq_edge_core::pack::{
    bits_per_weight, macro_bytes, read_model_pair, write_model, ModelData, ModelFilePair,
    TensorPayload,
};
use awq_edge_core::perf::{profile_generate, score, HwParams, ScoreInputs};
use awq_edge_core::runtime::{detokenize, tokenize, Model, Sampler};
use awq_edge_core::synth::{quantize_model, synth_model, AwqOptions, SynthOptions};
use awq_edge_core::ModelConfig;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Instant;

#[derive(Parser)]
#[command(
    name = "awq-edge",
    version,
    about = "INT4 AWQ-packed decoder models: synth, quantize, inspect, generate, profile, score"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, Default, ValueEnum)]
enum Format {
    #[default]
    Table,
    Csv,
    Json,
}

/// `CANDIDATE:MAX` ratio pair (a bare value means max = 1).
#[derive(Clone, Copy, Debug)]
struct RatioPair {
    candidate: f64,
    max: f64,
}

impl FromStr for RatioPair {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parse = |v: &str| -> Result<f64, String> {
            v.trim()
                .parse::<f64>()
                .map_err(|_| format!("`{v}` is not a number"))
        };
        match s.split_once(':') {
            Some((c, m)) => Ok(RatioPair {
                candidate: parse(c)?,
                max: parse(m)?,
            }),
            None => Ok(RatioPair {
                candidate: parse(s)?,
                max: 1.0,
            }),
        }
    }
}

impl From<RatioPair> for (f64, f64) {
    fn from(r: RatioPair) -> Self {
        (r.candidate, r.max)
    }
}

#[derive(Args)]
struct AwqFlags {
    /// Run the activation-aware channel-scale search per projection.
    #[arg(long = "awq-scale")]
    awq_scale: bool,
    /// Synthetic calibration samples for the AWQ search.
    #[arg(long, default_value_t = 32)]
    calib: usize,
}

impl AwqFlags {
    fn options(&self) -> Option<AwqOptions> {
        self.awq_scale.then(|| AwqOptions {
            calib_samples: self.calib,
            ..AwqOptions::default()
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded synthetic model and write a .bin/.json pair.
    Synth {
        /// Architecture JSON file.
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output path stem (writes <out>.bin and <out>.json).
        #[arg(long)]
        out: PathBuf,
        /// Override the config's quantization group size.
        #[arg(long)]
        gs: Option<usize>,
        /// Write raw f16 projections instead of packed macros.
        #[arg(long)]
        raw: bool,
        #[command(flatten)]
        awq: AwqFlags,
    },
    /// Quantize a raw f16 pair into a packed pair.
    Quantize {
        /// Input path stem of a raw pair.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Group size (defaults to the input config's).
        #[arg(long)]
        gs: Option<usize>,
        /// Seed for synthetic calibration activations.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        awq: AwqFlags,
    },
    /// Print the tensor directory and bits-per-weight of a model pair.
    Inspect {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Generate text from a packed model.
    Generate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value = "")]
        prompt: String,
        /// Number of new tokens.
        #[arg(long, default_value_t = 16)]
        n: usize,
        /// Sampling temperature (omit for greedy).
        #[arg(long)]
        temp: Option<f32>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Report achieved tokens/s on stderr.
        #[arg(long)]
        stats: bool,
        /// Host workers backing the 4 stream channels (env AWQ_EDGE_WORKERS).
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..=4))]
        workers: Option<u64>,
    },
    /// Profile a generation and print the latency/FLOP breakdown.
    Profile {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value = "hello")]
        prompt: String,
        #[arg(long, default_value_t = 8)]
        n: usize,
        /// Timing runs; the per-row minimum is reported.
        #[arg(long, default_value_t = 5)]
        runs: usize,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..=4))]
        workers: Option<u64>,
    },
    /// Compute the weighted benchmark score from CANDIDATE:MAX ratio pairs.
    Score {
        #[arg(long)]
        accuracy: RatioPair,
        #[arg(long)]
        memory: RatioPair,
        #[arg(long = "throughput-prefill")]
        throughput_prefill: RatioPair,
        #[arg(long = "throughput-decode")]
        throughput_decode: RatioPair,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(RunError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(RunError::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

enum RunError {
    Usage(String),
    Data(String),
}

impl From<awq_edge_core::Error> for RunError {
    fn from(e: awq_edge_core::Error) -> Self {
        RunError::Data(e.to_string())
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Data(e.to_string())
    }
}

fn resolve_workers(flag: Option<u64>) -> Result<usize, RunError> {
    if let Some(w) = flag {
        return Ok(w as usize);
    }
    match std::env::var("AWQ_EDGE_WORKERS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(w) if (1..=4).contains(&w) => Ok(w),
            _ => Err(RunError::Usage(format!(
                "AWQ_EDGE_WORKERS must be an integer in 1..=4, got `{v}`"
            ))),
        },
        Err(_) => Ok(1),
    }
}

fn load_model(path: &Path, workers: Option<u64>) -> Result<Model, RunError> {
    let pair = ModelFilePair::from_files(path)?;
    let mut model = Model::from_pair(&pair)?;
    model.set_workers(resolve_workers(workers)?);
    Ok(model)
}

fn run(command: Command) -> Result<(), RunError> {
    match command {
        Command::Synth {
            config,
            seed,
            out,
            gs,
            raw,
            awq,
        } => {
            let json = std::fs::read_to_string(&config)
                .map_err(|e| RunError::Data(format!("{}: {e}", config.display())))?;
            let mut cfg = ModelConfig::from_json(&json)?;
            if let Some(gs) = gs {
                cfg.group_size = gs;
            }
            let opts = SynthOptions {
                quantize_projections: !raw,
                awq: if raw { None } else { awq.options() },
            };
            let data = synth_model(&cfg, seed, &opts)?;
            let pair = write_model(&data)?;
            let (bin, json_path) = pair.to_files(&out)?;
            eprintln!(
                "wrote {} ({} bytes) and {}",
                bin.display(),
                pair.weights.len(),
                json_path.display()
            );
            Ok(())
        }
        Command::Quantize {
            input,
            out,
            gs,
            seed,
            awq,
        } => {
            let raw = read_model_pair(&ModelFilePair::from_files(&input)?)?;
            let group_size = gs.unwrap_or(raw.config.group_size);
            let packed = quantize_model(&raw, group_size, awq.options().as_ref(), seed)?;
            let pair = write_model(&packed)?;
            let (bin, json_path) = pair.to_files(&out)?;
            eprintln!(
                "wrote {} ({} bytes) and {}",
                bin.display(),
                pair.weights.len(),
                json_path.display()
            );
            Ok(())
        }
        Command::Inspect { model, format } => {
            let pair = ModelFilePair::from_files(&model)?;
            let data = read_model_pair(&pair)?;
            let report = inspect_report(&data, pair.weights.len() as u64);
            match format {
                Format::Table => print!("{}", report.to_table()),
                Format::Csv => print!("{}", report.to_csv()),
                Format::Json => println!(
                    "{}",
                    serde_json::to_string_pretty(&report).map_err(awq_edge_core::Error::from)?
                ),
            }
            Ok(())
        }
        Command::Generate {
            model,
            prompt,
            n,
            temp,
            seed,
            stats,
            workers,
        } => {
            let model = load_model(&model, workers)?;
            let prompt_tokens = if prompt.is_empty() {
                // An empty prompt still needs one token to condition on.
                vec![0u32]
            } else {
                tokenize(&prompt)
            };
            let sampler = match temp {
                Some(t) => Sampler::Temperature {
                    temperature: t,
                    seed,
                },
                None => Sampler::Greedy,
            };
            let t0 = Instant::now();
            let tokens = model.generate(&prompt_tokens, n, sampler)?;
            let elapsed = t0.elapsed().as_secs_f64();
            println!("{}{}", prompt, detokenize(&tokens, None));
            if stats {
                if n > 0 {
                    eprintln!(
                        "generated {n} tokens in {elapsed:.3}s: {:.2} tokens/s",
                        n as f64 / elapsed
                    );
                } else {
                    eprintln!("generated 0 tokens");
                }
            }
            Ok(())
        }
        Command::Profile {
            model,
            prompt,
            n,
            runs,
            format,
            workers,
        } => {
            let model = load_model(&model, workers)?;
            let prompt_tokens = tokenize(&prompt);
            let report = profile_generate(&model, &prompt_tokens, n, runs, &HwParams::default())?;
            match format {
                Format::Table => print!("{}", report.to_table()),
                Format::Csv => print!("{}", report.to_csv()),
                Format::Json => println!("{}", report.to_json()?),
            }
            Ok(())
        }
        Command::Score {
            accuracy,
            memory,
            throughput_prefill,
            throughput_decode,
        } => {
            let total = score(&ScoreInputs {
                accuracy: accuracy.into(),
                memory: memory.into(),
                throughput_prefill: throughput_prefill.into(),
                throughput_decode: throughput_decode.into(),
            })?;
            println!("{total:?}");
            eprintln!(
                "reference: the benchmarked hardware system scored 0.55 (AWQ GS=64) \
                 against a 0.40 baseline; its normalization set is external to this tool"
            );
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct InspectRow {
    name: String,
    dtype: &'static str,
    shape: Vec<usize>,
    group_size: usize,
    macros: usize,
    bytes: u64,
    bits_per_weight: Option<f64>,
}

#[derive(Serialize)]
struct InspectReport {
    format_version: u32,
    file_bytes: u64,
    rows: Vec<InspectRow>,
    quantized_weight_count: u64,
    quantized_payload_bytes: u64,
    /// Packed bits per quantized weight, including scales and zeros.
    total_bits_per_weight: Option<f64>,
}

fn inspect_report(data: &ModelData, file_bytes: u64) -> InspectReport {
    let mut rows = Vec::new();
    let mut qweights = 0u64;
    let mut qbytes = 0u64;
    for (name, payload) in &data.tensors {
        match payload {
            TensorPayload::F16 { shape, bits } => rows.push(InspectRow {
                name: name.clone(),
                dtype: "f16",
                shape: shape.clone(),
                group_size: 0,
                macros: 0,
                bytes: (bits.len() * 2) as u64,
                bits_per_weight: None,
            }),
            TensorPayload::Quant(t) => {
                let bytes = (t.macros.len() * macro_bytes(t.group_size)) as u64;
                qweights += (t.out_channels * t.in_channels) as u64;
                qbytes += bytes;
                rows.push(InspectRow {
                    name: name.clone(),
                    dtype: "q4_macro",
                    shape: vec![t.out_channels, t.in_channels],
                    group_size: t.group_size,
                    macros: t.macros.len(),
                    bytes,
                    bits_per_weight: Some(bits_per_weight(t.group_size)),
                });
            }
        }
    }
    InspectReport {
        format_version: awq_edge_core::pack::FORMAT_VERSION,
        file_bytes,
        rows,
        quantized_weight_count: qweights,
        quantized_payload_bytes: qbytes,
        total_bits_per_weight: (qweights > 0).then(|| qbytes as f64 * 8.0 / qweights as f64),
    }
}

impl InspectReport {
    fn to_table(&self) -> String {
        let mut out = String::new();
        let width = self
            .rows
            .iter()
            .map(|r| r.name.len())
            .max()
            .unwrap_or(4)
            .max("tensor".len());
        out.push_str(&format!(
            "{:<width$}  {:>8}  {:>16}  {:>4}  {:>7}  {:>12}  {:>6}\n",
            "tensor",
            "dtype",
            "shape",
            "gs",
            "macros",
            "bytes",
            "b/w",
            width = width
        ));
        for r in &self.rows {
            let shape = r
                .shape
                .iter()
                .map(|d| d.to_string())
                .collect::<Vec<_>>()
                .join("x");
            out.push_str(&format!(
                "{:<width$}  {:>8}  {:>16}  {:>4}  {:>7}  {:>12}  {:>6}\n",
                r.name,
                r.dtype,
                shape,
                if r.group_size > 0 {
                    r.group_size.to_string()
                } else {
                    "-".into()
                },
                if r.macros > 0 {
                    r.macros.to_string()
                } else {
                    "-".into()
                },
                r.bytes,
                r.bits_per_weight
                    .map(|b| format!("{b}"))
                    .unwrap_or_else(|| "-".into()),
                width = width
            ));
        }
        out.push_str(&format!(
            "file: {} bytes (format v{}), quantized weights: {}, packed payload: {} bytes\n",
            self.file_bytes,
            self.format_version,
            self.quantized_weight_count,
            self.quantized_payload_bytes
        ));
        if let Some(b) = self.total_bits_per_weight {
            out.push_str(&format!("overall bits/weight: {b}\n"));
        }
        out
    }

    fn to_csv(&self) -> String {
        let mut out = String::from("name,dtype,shape,group_size,macros,bytes,bits_per_weight\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.name,
                r.dtype,
                r.shape
                    .iter()
                    .map(|d| d.to_string())
                    .collect::<Vec<_>>()
                    .join("x"),
                r.group_size,
                r.macros,
                r.bytes,
                r.bits_per_weight.map(|b| b.to_string()).unwrap_or_default()
            ));
        }
        out
    }
}
