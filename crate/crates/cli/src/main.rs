use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pingpong::io::{trace_plot_svg, write_text};
use pingpong::pipeline::{compare_traces, run_pipeline, RunConfig, Stage, StageStatus};
use pingpong::{Error, StateId, Trace};

#[derive(Parser)]
#[command(name = "pingpong", version, about = "Ping-pong rovibronic population transfer")]
struct Cli {
    /// Run configuration (TOML); flags override its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// System description (TOML); the bundled toy system by default.
    #[arg(long, global = true)]
    system: Option<PathBuf>,
    #[arg(long, global = true, env = "PINGPONG_OUTPUT_DIR")]
    output_dir: Option<PathBuf>,
    /// Cap on worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve vibrational levels of every (e, J) manifold.
    Levels {
        #[command(flatten)]
        grid: GridArgs,
        /// Also dump eigenvectors in binary form.
        #[arg(long)]
        wavefunctions: bool,
    },
    /// Dipole matrix element tables between linked manifolds.
    DmeMap {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        no_heatmaps: bool,
    },
    /// Choose a chain and design its pulse train.
    DesignChain {
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        chain: ChainArgs,
        #[command(flatten)]
        pulses: PulseArgs,
    },
    /// Closed-form pseudospin populations.
    SimulatePseudospin {
        #[command(flatten)]
        source: SourceArgs,
    },
    /// Rotating-wave level equations.
    SimulateRwa {
        #[command(flatten)]
        source: SourceArgs,
        /// Let every pulse drive every link.
        #[arg(long)]
        crosstalk: bool,
    },
    /// Coupled-channel grid propagation.
    SimulateFull {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        full: FullArgs,
    },
    /// Overlay traces and report their largest deviations.
    Compare {
        /// Trace CSV files, optionally labeled as NAME=PATH.
        #[arg(required = true, num_args = 2..)]
        traces: Vec<String>,
    },
    /// Run the configured stages end to end.
    Pipeline {
        /// Comma-separated stage list.
        #[arg(long, value_delimiter = ',')]
        stages: Option<Vec<Stage>>,
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        full: FullArgs,
        #[arg(long)]
        crosstalk: bool,
    },
}

#[derive(Args, Default)]
struct GridArgs {
    #[arg(long)]
    r_min: Option<f64>,
    #[arg(long)]
    r_max: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    j_max: Option<u32>,
    #[arg(long)]
    n_levels: Option<usize>,
}

#[derive(Args, Default)]
struct ChainArgs {
    #[arg(long)]
    initial: Option<StateId>,
    #[arg(long)]
    target: Option<StateId>,
    /// Number of chain states.
    #[arg(long)]
    n: Option<usize>,
    /// Explicit chain, e.g. X:2:2,A:1:1,X:0:0.
    #[arg(long, value_delimiter = ',')]
    states: Option<Vec<StateId>>,
    /// Smallest admissible |DME| in atomic units.
    #[arg(long)]
    threshold: Option<f64>,
}

#[derive(Args, Default)]
struct PulseArgs {
    /// Envelope width in atomic units of time.
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, conflicts_with = "sigma")]
    sigma_ps: Option<f64>,
    #[arg(long)]
    t0: Option<f64>,
    /// Total pulse area; π/2 completes the transfer.
    #[arg(long)]
    area: Option<f64>,
    #[arg(long, conflicts_with = "area")]
    peak_rabi: Option<f64>,
    /// Peak intensities in W/cm², one per link.
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["area", "peak_rabi"])]
    intensities: Option<Vec<f64>>,
    #[arg(long)]
    stagger: Option<f64>,
}

/// Where the chain comes from, plus trace sampling.
#[derive(Args, Default)]
struct SourceArgs {
    /// Chain file written by design-chain; designed on the fly otherwise.
    #[arg(long)]
    chain: Option<PathBuf>,
    /// Rows per trace.
    #[arg(long)]
    samples: Option<usize>,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    design: ChainArgs,
    #[command(flatten)]
    pulses: PulseArgs,
}

#[derive(Args, Default)]
struct FullArgs {
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    full_points: Option<usize>,
    #[arg(long)]
    full_r_min: Option<f64>,
    #[arg(long)]
    full_r_max: Option<f64>,
    #[arg(long)]
    channel_margin: Option<u32>,
    #[arg(long)]
    opposite_block: bool,
    #[arg(long)]
    no_absorber: bool,
    #[arg(long)]
    absorber_strength: Option<f64>,
    /// Extra states to project onto, e.g. X:1:0,A:3:1.
    #[arg(long, value_delimiter = ',')]
    watch: Option<Vec<StateId>>,
}

fn absolute(path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        std::env::current_dir().map(|d| d.join(path)).unwrap_or_else(|_| path.to_path_buf())
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

impl GridArgs {
    fn apply(self, cfg: &mut RunConfig) {
        let l = &mut cfg.levels;
        set(&mut l.r_min, self.r_min);
        set(&mut l.r_max, self.r_max);
        set(&mut l.points, self.points);
        if self.j_max.is_some() {
            l.j_max = self.j_max;
        }
        if self.n_levels.is_some() {
            l.n_levels = self.n_levels;
        }
    }
}

impl ChainArgs {
    fn apply(self, cfg: &mut RunConfig) {
        let c = &mut cfg.chain;
        set(&mut c.initial, self.initial);
        set(&mut c.target, self.target);
        set(&mut c.n, self.n);
        set(&mut c.dme_threshold, self.threshold);
        if self.states.is_some() {
            c.states = self.states;
        }
    }
}

impl PulseArgs {
    fn apply(self, cfg: &mut RunConfig) {
        let p = &mut cfg.pulses;
        if self.sigma.is_some() || self.sigma_ps.is_some() {
            p.sigma = self.sigma;
            p.sigma_ps = self.sigma_ps;
        }
        if self.area.is_some() || self.peak_rabi.is_some() || self.intensities.is_some() {
            p.area = self.area;
            p.peak_rabi = self.peak_rabi;
            p.intensities = self.intensities;
        }
        if self.t0.is_some() {
            p.t0 = self.t0;
        }
        set(&mut p.stagger, self.stagger);
    }
}

impl SourceArgs {
    fn apply(self, cfg: &mut RunConfig) {
        if let Some(chain) = self.chain {
            cfg.chain.file = Some(absolute(&chain));
        }
        set(&mut cfg.samples, self.samples);
        self.grid.apply(cfg);
        self.design.apply(cfg);
        self.pulses.apply(cfg);
    }
}

impl FullArgs {
    fn apply(self, cfg: &mut RunConfig) {
        let f = &mut cfg.full;
        if self.dt.is_some() {
            f.dt = self.dt;
        }
        if self.full_points.is_some() {
            f.points = self.full_points;
        }
        if self.full_r_min.is_some() {
            f.r_min = self.full_r_min;
        }
        if self.full_r_max.is_some() {
            f.r_max = self.full_r_max;
        }
        set(&mut f.channel_margin, self.channel_margin);
        f.opposite_block |= self.opposite_block;
        if self.no_absorber {
            f.absorber = false;
        }
        set(&mut f.absorber_strength, self.absorber_strength);
        set(&mut f.watch, self.watch);
    }
}

fn exit_code(error: &Error) -> ExitCode {
    if error.is_config() {
        ExitCode::from(2)
    } else {
        ExitCode::from(3)
    }
}

fn compare(traces: Vec<String>, output_dir: PathBuf) -> Result<(), Error> {
    let mut loaded = Vec::new();
    for (i, spec) in traces.iter().enumerate() {
        let (name, path) = match spec.split_once('=') {
            Some((name, path)) => (name.to_string(), PathBuf::from(path)),
            None => {
                let path = PathBuf::from(spec);
                let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned());
                (stem.unwrap_or_else(|| format!("trace{i}")), path)
            }
        };
        loaded.push((name, Trace::load(&path)?));
    }
    let labeled: Vec<(&str, &Trace)> = loaded.iter().map(|(n, t)| (n.as_str(), t)).collect();
    let deviations = compare_traces(&labeled);
    if deviations.is_empty() {
        return Err(Error::Invalid("the traces share no states".into()));
    }
    for (pair, d) in &deviations {
        println!("max deviation {pair}: {d:.3e}");
    }
    let json = serde_json::to_string_pretty(&deviations).expect("maps serialize") + "\n";
    write_text(&output_dir.join("compare.json"), &json)?;
    write_text(&output_dir.join("compare.svg"), &trace_plot_svg("chain populations", &labeled))?;
    println!("wrote {}", output_dir.join("compare.svg").display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build_global() {
            eprintln!("error: cannot size the worker pool: {e}");
            return ExitCode::from(2);
        }
    }
    let mut cfg = match &cli.config {
        Some(path) => match RunConfig::load(&absolute(path)) {
            Ok(cfg) => cfg,
            Err(e) => {
                eprintln!("error: {e}");
                return exit_code(&e);
            }
        },
        None => RunConfig {
            base_dir: std::env::current_dir().unwrap_or_else(|_| PathBuf::from(".")),
            ..RunConfig::default()
        },
    };
    if let Some(system) = &cli.system {
        cfg.system = Some(absolute(system));
    }
    if let Some(dir) = &cli.output_dir {
        cfg.output_dir = absolute(dir);
    }

    let stages = match cli.command {
        Command::Compare { traces } => {
            return match compare(traces, cfg.resolve(&cfg.output_dir)) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e}");
                    exit_code(&e)
                }
            };
        }
        Command::Levels { grid, wavefunctions } => {
            grid.apply(&mut cfg);
            cfg.levels.wavefunctions |= wavefunctions;
            vec![Stage::Levels]
        }
        Command::DmeMap { grid, no_heatmaps } => {
            grid.apply(&mut cfg);
            cfg.levels.heatmaps &= !no_heatmaps;
            vec![Stage::DmeMap]
        }
        Command::DesignChain { grid, chain, pulses } => {
            grid.apply(&mut cfg);
            chain.apply(&mut cfg);
            pulses.apply(&mut cfg);
            vec![Stage::DesignChain]
        }
        Command::SimulatePseudospin { source } => {
            source.apply(&mut cfg);
            vec![Stage::Pseudospin]
        }
        Command::SimulateRwa { source, crosstalk } => {
            source.apply(&mut cfg);
            cfg.rwa.crosstalk |= crosstalk;
            vec![Stage::Rwa]
        }
        Command::SimulateFull { source, full } => {
            source.apply(&mut cfg);
            full.apply(&mut cfg);
            vec![Stage::Full]
        }
        Command::Pipeline {
            stages,
            source,
            full,
            crosstalk,
        } => {
            source.apply(&mut cfg);
            full.apply(&mut cfg);
            cfg.rwa.crosstalk |= crosstalk;
            stages.unwrap_or_else(|| cfg.stages.clone())
        }
    };
    cfg.stages = stages;

    let outcome = run_pipeline(cfg);
    let manifest = &outcome.manifest;
    for record in &manifest.stages {
        let status = match record.status {
            StageStatus::Completed => "ok",
            StageStatus::Failed => "FAILED",
            StageStatus::NotRun => "not run",
        };
        println!("{:<13} {status} ({} files)", record.stage.name(), record.outputs.len());
        if let Some(d) = &record.diagnostic {
            println!("              {d}");
        }
    }
    let m = &manifest.metrics;
    if !m.chain.is_empty() {
        println!("chain: {}", m.chain.join(" -> "));
    }
    for (state, tau) in &m.lifetimes_ns {
        println!("lifetime {state}: {tau:.4} ns");
    }
    for (tier, p) in &m.target_population {
        println!("final target population ({tier}): {p:.6}");
    }
    if let Some(l) = m.max_leakage {
        println!("max leakage: {l:.3e}");
    }
    for (pair, d) in &m.deviations {
        println!("max deviation {pair}: {d:.3e}");
    }
    println!(
        "manifest: {}",
        outcome.session.config.output_path("manifest.json").display()
    );
    match &outcome.error {
        None => ExitCode::SUCCESS,
        Some(e) => {
            eprintln!("error: {e}");
            exit_code(e)
        }
    }
}
