use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use tdsnn::io::{calibrate, parse_config, write_toml, write_traces, Anchors, Config, RunSummary};
use tdsnn::network::{build_network, simulate, ExternalInputs, Polarity, TraceSet};
use tdsnn::reservoir::{run_untrained, train_force, ForceRun};
use tdsnn::scenarios::{square_chain, Bench, NeuronDrive};
use tdsnn::weight::WeightCode;
use tdsnn::{Error, Result};

#[derive(Parser)]
#[command(name = "tdsnn", version, about = "Time-domain spiking neural network simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Single neuron under an optional periodic pulse input.
    SimulateNeuron(NeuronArgs),
    /// Square source through a weight module into one synapse.
    SimulateSynapse(SynapseArgs),
    /// Recurrent network runs.
    #[command(subcommand)]
    Network(NetworkCommand),
    /// Reservoir training and evaluation.
    #[command(subcommand)]
    Reservoir(ReservoirCommand),
    /// Fit neuron and synapse parameters to measured anchors.
    Calibrate(CalibrateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum PolarityArg {
    Exc,
    Inh,
}

impl From<PolarityArg> for Polarity {
    fn from(p: PolarityArg) -> Self {
        match p {
            PolarityArg::Exc => Polarity::Excitatory,
            PolarityArg::Inh => Polarity::Inhibitory,
        }
    }
}

#[derive(Args)]
struct NeuronArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Simulated time (s).
    #[arg(long, default_value_t = 1.0)]
    duration: f64,
    /// Input pulse frequency (Hz).
    #[arg(long, default_value_t = 100.0)]
    input_freq: f64,
    #[arg(long, default_value_t = 12)]
    weight_code: u8,
    /// Input polarity; no input when omitted.
    #[arg(long, value_enum)]
    polarity: Option<PolarityArg>,
    /// Simulation step (s); defaults to the config value.
    #[arg(long)]
    dt: Option<f64>,
    /// Directory for CSV traces and the run summary.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct SynapseArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    duration: f64,
    /// Square source frequency (Hz).
    #[arg(long, default_value_t = 10.0)]
    source_freq: f64,
    #[arg(long, default_value_t = 15)]
    weight_code: u8,
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Subcommand)]
enum NetworkCommand {
    /// Free-running recurrent network.
    Run(NetworkRunArgs),
}

#[derive(Args)]
struct NetworkRunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Topology seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 1.0)]
    duration: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ReservoirCommand {
    /// Train the readout online, then generate autonomously.
    Train(ReservoirTrainArgs),
    /// Trained and untrained runs over several tuning ranges.
    Eval(ReservoirEvalArgs),
}

#[derive(Args)]
struct ReservoirTrainArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Synapse tuning range as `F_MIN:F_MAX` (Hz); overrides the config.
    #[arg(long, value_parser = parse_range)]
    range: Option<[f64; 2]>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReservoirEvalArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated `F_MIN:F_MAX` ranges.
    #[arg(long, value_delimiter = ',', value_parser = parse_range,
          default_value = "15:200,15:2000,15:20000")]
    ranges: Vec<[f64; 2]>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CalibrateArgs {
    /// `paper` or a TOML file of anchors.
    #[arg(long, default_value = "paper")]
    targets: String,
    /// Starting parameters.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Where to write the fitted parameters.
    #[arg(long)]
    out: PathBuf,
}

fn parse_range(s: &str) -> std::result::Result<[f64; 2], String> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| format!("expected F_MIN:F_MAX, got `{s}`"))?;
    let lo: f64 = lo.trim().parse().map_err(|e| format!("`{lo}`: {e}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("`{hi}`: {e}"))?;
    Ok([lo, hi])
}

fn load_config(path: Option<&Path>) -> Result<Config> {
    match path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::Io {
                path: p.to_path_buf(),
                source: e,
            })?;
            parse_config(&text).map_err(|e| match e {
                Error::Parse(m) => Error::Parse(format!("{}: {m}", p.display())),
                other => other,
            })
        }
        None => Ok(Config::default()),
    }
}

fn bench_from(config: &Config) -> Bench {
    Bench {
        neuron: config.neuron,
        synapse: config.synapse,
        weight: config.weight,
        dt: config.network.dt,
    }
}

fn emit(summary: &RunSummary, dir: Option<&Path>, traces: Option<&TraceSet>) -> Result<()> {
    if let Some(dir) = dir {
        if let Some(t) = traces {
            write_traces(t, dir)?;
        } else {
            fs::create_dir_all(dir).map_err(|e| Error::Io {
                path: dir.to_path_buf(),
                source: e,
            })?;
        }
        summary.write(dir)?;
    }
    let metrics = serde_json::to_string_pretty(&summary.metrics).expect("metrics serialize");
    println!("{metrics}");
    Ok(())
}

fn simulate_neuron(args: &NeuronArgs) -> Result<()> {
    let start = Instant::now();
    let mut config = load_config(args.config.as_deref())?;
    if let Some(dt) = args.dt {
        config.network.dt = dt;
        config.validate()?;
    }
    let bench = bench_from(&config);
    let drive = NeuronDrive {
        polarity: args.polarity.map(Polarity::from),
        input_freq: args.input_freq,
        code: WeightCode::new(args.weight_code)?,
    };
    if args.duration.is_nan() || args.duration <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "--duration must be > 0, got {}",
            args.duration
        )));
    }
    let traces = bench.run_neuron(&drive, args.duration, args.trace.is_some())?;
    let spikes = &traces.spikes[0];
    #[derive(Serialize)]
    struct Echo<'a> {
        config: &'a Config,
        duration: f64,
        input_freq: f64,
        weight_code: u8,
        polarity: Option<Polarity>,
    }
    let mut summary = RunSummary::new(
        &Echo {
            config: &config,
            duration: args.duration,
            input_freq: args.input_freq,
            weight_code: args.weight_code,
            polarity: drive.polarity,
        },
        config.network.rng_seed,
    )?;
    summary.metric("spike_count", spikes.len() as f64)?;
    summary.metric("firing_rate_hz", spikes.len() as f64 / args.duration)?;
    if spikes.len() >= 2 {
        let isi = (spikes[spikes.len() - 1] - spikes[0]) / (spikes.len() - 1) as f64;
        summary.metric("mean_isi_s", isi)?;
    }
    summary.wall_clock_s = start.elapsed().as_secs_f64();
    emit(&summary, args.trace.as_deref(), Some(&traces))
}

fn simulate_synapse(args: &SynapseArgs) -> Result<()> {
    let start = Instant::now();
    let config = load_config(args.config.as_deref())?;
    let bench = bench_from(&config);
    if args.duration.is_nan() || args.duration <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "--duration must be > 0, got {}",
            args.duration
        )));
    }
    let chain = square_chain(
        &bench,
        args.source_freq,
        WeightCode::new(args.weight_code)?,
        args.duration,
        config.network.sample_interval,
    )?;
    let traces = TraceSet {
        n_neurons: 1,
        duration: args.duration,
        dt: bench.dt,
        spikes: vec![Vec::new()],
        sample_times: chain.times.clone(),
        v_syn: chain.v_syn.clone(),
        freq: chain.freq.clone(),
        ..TraceSet::default()
    };
    #[derive(Serialize)]
    struct Echo<'a> {
        config: &'a Config,
        duration: f64,
        source_freq: f64,
        weight_code: u8,
    }
    let mut summary = RunSummary::new(
        &Echo {
            config: &config,
            duration: args.duration,
            source_freq: args.source_freq,
            weight_code: args.weight_code,
        },
        config.network.rng_seed,
    )?;
    summary.metric("weight_events", chain.events.len() as f64)?;
    summary.metric("oscillator_edges", chain.edges.len() as f64)?;
    summary.metric("mean_frequency_hz", chain.edges.len() as f64 / args.duration)?;
    summary.metric("peak_v_syn", chain.v_syn.iter().copied().fold(0.0, f64::max))?;
    summary.wall_clock_s = start.elapsed().as_secs_f64();
    emit(&summary, args.trace.as_deref(), Some(&traces))
}

fn network_run(args: &NetworkRunArgs) -> Result<()> {
    let start = Instant::now();
    let mut config = load_config(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        config.network.rng_seed = seed;
    }
    let net = build_network(&config.network_config())?;
    let traces = simulate(&net, ExternalInputs::new(), args.duration)?;
    let mut summary = RunSummary::new(&config, config.network.rng_seed)?;
    let counts = traces.spike_counts();
    let total: usize = counts.iter().sum();
    summary.metric("connections", net.connections().len() as f64)?;
    summary.metric("total_spikes", total as f64)?;
    summary.metric(
        "mean_firing_rate_hz",
        total as f64 / (counts.len() as f64 * args.duration),
    )?;
    let edges: u64 = traces.charge_events.iter().sum();
    summary.metric("charge_events", edges as f64)?;
    summary.wall_clock_s = start.elapsed().as_secs_f64();
    emit(&summary, args.out.as_deref(), Some(&traces))
}

fn reservoir_config(path: Option<&Path>, range: Option<[f64; 2]>, seed: Option<u64>) -> Result<Config> {
    let mut config = load_config(path)?;
    if let Some(r) = range {
        config.train.frequency_range = r;
    }
    if let Some(s) = seed {
        config.network.rng_seed = s;
    }
    config.validate()?;
    Ok(config)
}

fn record_run(summary: &mut RunSummary, prefix: &str, run: &ForceRun) -> Result<()> {
    summary.metric(format!("{prefix}nrmse"), run.autonomous.nrmse)?;
    summary.metric(format!("{prefix}mean_abs_err"), run.autonomous.mean_abs_err)
}

fn reservoir_train(args: &ReservoirTrainArgs) -> Result<()> {
    let start = Instant::now();
    let config = reservoir_config(args.config.as_deref(), args.range, args.seed)?;
    let net = build_network(&config.network_config())?;
    let run = train_force(&net, &config.train, &config.feedback)?;
    let mut summary = RunSummary::new(&config, config.network.rng_seed)?;
    record_run(&mut summary, "", &run)?;
    if let Some(first) = run.train_errors.first() {
        let per = run.train_errors.len() / config.train.train_periods as usize;
        summary.metric("train_err_first_period", run.mean_train_error(0, per))?;
        summary.metric(
            "train_err_last_period",
            run.mean_train_error(config.train.train_periods as usize - 1, per),
        )?;
        summary.metric("train_err_initial", *first)?;
    }
    summary.wall_clock_s = start.elapsed().as_secs_f64();
    emit(&summary, args.out.as_deref(), Some(&run.traces))
}

fn range_dir(range: [f64; 2]) -> String {
    format!("range_{}_{}", range[0], range[1])
}

fn reservoir_eval(args: &ReservoirEvalArgs) -> Result<()> {
    let start = Instant::now();
    let base = reservoir_config(args.config.as_deref(), None, args.seed)?;
    let configs = args
        .ranges
        .iter()
        .map(|&r| reservoir_config(args.config.as_deref(), Some(r), args.seed))
        .collect::<Result<Vec<_>>>()?;
    // Independent runs, one thread per range.
    let results: Vec<Result<(ForceRun, ForceRun)>> = std::thread::scope(|s| {
        let handles: Vec<_> = configs
            .iter()
            .map(|c| {
                s.spawn(move || -> Result<(ForceRun, ForceRun)> {
                    let net = build_network(&c.network_config())?;
                    let trained = train_force(&net, &c.train, &c.feedback)?;
                    let untrained = run_untrained(&net, &c.train, &c.feedback)?;
                    Ok((trained, untrained))
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("worker panicked"))
            .collect()
    });
    let mut summary = RunSummary::new(&base, base.network.rng_seed)?;
    for (config, result) in configs.iter().zip(results) {
        let (trained, untrained) = result?;
        let tag = range_dir(config.train.frequency_range);
        if let Some(out) = &args.out {
            let dir = out.join(&tag);
            write_traces(&trained.traces, &dir)?;
            write_traces(&untrained.traces, &dir.join("untrained"))?;
        }
        record_run(&mut summary, &format!("{tag}.trained."), &trained)?;
        record_run(&mut summary, &format!("{tag}.untrained."), &untrained)?;
    }
    summary.wall_clock_s = start.elapsed().as_secs_f64();
    emit(&summary, args.out.as_deref(), None)
}

fn run_calibrate(args: &CalibrateArgs) -> Result<()> {
    let config = load_config(args.config.as_deref())?;
    let anchors = if args.targets == "paper" {
        Anchors::paper()
    } else {
        let path = Path::new(&args.targets);
        let text = fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        toml::from_str(&text).map_err(|e| Error::Parse(format!("{}: {}", path.display(), e.message())))?
    };
    let fit = calibrate(&anchors, &bench_from(&config))?;
    let fitted = Config {
        neuron: fit.bench.neuron,
        synapse: fit.bench.synapse,
        ..config
    };
    let comments: Vec<String> = std::iter::once("calibrated parameters; residuals:".to_string())
        .chain(fit.residuals.iter().map(|r| {
            format!(
                "  {}: target {} Hz, achieved {:.4} Hz ({:+.3}%, tolerance {}%)",
                r.name,
                r.target,
                r.achieved,
                100.0 * r.relative(),
                100.0 * r.tolerance
            )
        }))
        .collect();
    write_toml(&args.out, &fitted, &comments)?;
    for c in &comments {
        println!("{c}");
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::SimulateNeuron(a) => simulate_neuron(a),
        Command::SimulateSynapse(a) => simulate_synapse(a),
        Command::Network(NetworkCommand::Run(a)) => network_run(a),
        Command::Reservoir(ReservoirCommand::Train(a)) => reservoir_train(a),
        Command::Reservoir(ReservoirCommand::Eval(a)) => reservoir_eval(a),
        Command::Calibrate(a) => run_calibrate(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
