//! Staged runs driven by one configuration file, producing CSV/JSON/SVG
//! artifacts and a manifest.
//!
//! ```toml
//! system = "system.toml"     # omit for the bundled toy system
//! output_dir = "out"
//! stages = ["levels", "dme-map", "design-chain", "pseudospin", "rwa", "full", "compare"]
//!
//! [levels]
//! r_min = 0.5
//! r_max = 9.0
//! points = 420
//!
//! [chain]
//! initial = "X:6:4"
//! target = "X:0:0"
//! n = 5
//!
//! [pulses]
//! sigma = 3.6e4              # or sigma_ps
//! area = 1.5707963267948966  # or peak_rabi, or intensities (W/cm²)
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::chain::{
    chain_from_states, design_chain, design_train, ChainSearch, Strength, TrainDesign,
    DEFAULT_DME_THRESHOLD,
};
use crate::config::SystemConfig;
use crate::coupling::{level_lifetime, AngularWeighting, CouplingMaps};
use crate::dvr::{solve_manifolds, Manifold, RadialGrid};
use crate::error::{Error, Result};
use crate::grid::{Absorber, ChannelSet, PropagationConfig, Propagator, MAX_CARRIER_STEP, NORM_BUDGET};
use crate::io::{self, ChainFile};
use crate::potentials::ElectronicSystem;
use crate::pseudospin::trace_analytic;
use crate::rwa::{integrate_rwa, RwaConfig, MAX_RABI_STEP};
use crate::state::{ManifoldKey, StateId, Surface};
use crate::synthetic::{toy_endpoints, toy_system, TOY_GRID, TOY_SIGMA};
use crate::trace::PopulationTrace;
use crate::units::{NANOSECOND, PICOSECOND};

pub const MANIFEST_FORMAT: &str = "pingpong-manifest/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Levels,
    DmeMap,
    DesignChain,
    Pseudospin,
    Rwa,
    Full,
    Compare,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::Levels,
        Stage::DmeMap,
        Stage::DesignChain,
        Stage::Pseudospin,
        Stage::Rwa,
        Stage::Full,
        Stage::Compare,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Levels => "levels",
            Stage::DmeMap => "dme-map",
            Stage::DesignChain => "design-chain",
            Stage::Pseudospin => "pseudospin",
            Stage::Rwa => "rwa",
            Stage::Full => "full",
            Stage::Compare => "compare",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown stage {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LevelSettings {
    pub r_min: f64,
    pub r_max: f64,
    pub points: usize,
    /// Highest J solved; defaults to the largest J a chain can reach.
    pub j_max: Option<u32>,
    /// Levels per manifold; defaults to every bound level.
    pub n_levels: Option<usize>,
    /// Also dump eigenvectors in binary form.
    pub wavefunctions: bool,
    pub heatmaps: bool,
}

impl Default for LevelSettings {
    fn default() -> Self {
        Self {
            r_min: TOY_GRID.0,
            r_max: TOY_GRID.1,
            points: TOY_GRID.2,
            j_max: None,
            n_levels: None,
            wavefunctions: false,
            heatmaps: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainSettings {
    pub initial: StateId,
    pub target: StateId,
    pub n: usize,
    /// Explicit chain; replaces the search when given.
    pub states: Option<Vec<StateId>>,
    pub dme_threshold: f64,
    /// Ready-made chain file; replaces the design stage when given.
    pub file: Option<PathBuf>,
}

impl Default for ChainSettings {
    fn default() -> Self {
        let (initial, target) = toy_endpoints();
        Self {
            initial,
            target,
            n: 5,
            states: None,
            dme_threshold: DEFAULT_DME_THRESHOLD,
            file: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PulseSettings {
    /// Envelope width in atomic units of time.
    pub sigma: Option<f64>,
    pub sigma_ps: Option<f64>,
    pub t0: Option<f64>,
    pub area: Option<f64>,
    pub peak_rabi: Option<f64>,
    pub intensities: Option<Vec<f64>>,
    pub stagger: f64,
}

impl PulseSettings {
    pub fn design(&self) -> Result<TrainDesign<f64>> {
        let sigma = match (self.sigma, self.sigma_ps) {
            (Some(s), None) => s,
            (None, Some(ps)) => ps * PICOSECOND,
            (None, None) => TOY_SIGMA,
            _ => return Err(Error::Invalid("give at most one of sigma and sigma_ps".into())),
        };
        let strength = match (self.area, self.peak_rabi, &self.intensities) {
            (None, None, None) => Strength::Area(std::f64::consts::FRAC_PI_2),
            (Some(a), None, None) => Strength::Area(a),
            (None, Some(p), None) => Strength::PeakRabi(p),
            (None, None, Some(i)) => Strength::Intensities(i.clone()),
            _ => {
                return Err(Error::Invalid(
                    "give at most one of area, peak_rabi and intensities".into(),
                ))
            }
        };
        Ok(TrainDesign {
            sigma,
            t0: self.t0,
            strength,
            stagger: self.stagger,
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RwaSettings {
    pub crosstalk: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FullSettings {
    /// Propagation grid; each bound defaults to the level grid.
    pub r_min: Option<f64>,
    pub r_max: Option<f64>,
    pub points: Option<usize>,
    /// Time step; defaults to half the largest admissible step.
    pub dt: Option<f64>,
    /// Channels kept above the chain's largest J.
    pub channel_margin: u32,
    /// Also propagate the channels of the other J parity.
    pub opposite_block: bool,
    pub absorber: bool,
    pub absorber_strength: f64,
    pub absorber_fraction: f64,
    pub watch: Vec<StateId>,
}

impl Default for FullSettings {
    fn default() -> Self {
        let absorber = Absorber::<f64>::default();
        Self {
            r_min: None,
            r_max: None,
            points: None,
            dt: None,
            channel_margin: 1,
            opposite_block: false,
            absorber: true,
            absorber_strength: absorber.strength,
            absorber_fraction: absorber.fraction,
            watch: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// System description; the bundled toy system when absent.
    pub system: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub stages: Vec<Stage>,
    /// Rows per population trace.
    pub samples: usize,
    /// Leave wall-clock times out of the manifest so reruns are byte-identical.
    pub deterministic: bool,
    pub levels: LevelSettings,
    pub chain: ChainSettings,
    pub pulses: PulseSettings,
    pub rwa: RwaSettings,
    pub full: FullSettings,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
    /// File this configuration was read from.
    #[serde(skip)]
    pub source: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            system: None,
            output_dir: PathBuf::from("pingpong-out"),
            stages: Stage::ALL.to_vec(),
            samples: 1001,
            deterministic: true,
            levels: LevelSettings::default(),
            chain: ChainSettings::default(),
            pulses: PulseSettings::default(),
            rwa: RwaSettings::default(),
            full: FullSettings::default(),
            base_dir: PathBuf::from("."),
            source: None,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str, base_dir: &Path, source_name: &str) -> Result<Self> {
        let mut config: Self = toml::from_str(text).map_err(|e| Error::Parse {
            source_name: source_name.to_string(),
            line: e
                .span()
                .map(|s| text[..s.start].lines().count().max(1))
                .unwrap_or(0),
            message: e.message().to_string(),
        })?;
        config.base_dir = base_dir.to_path_buf();
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::parse(&text, path.parent().unwrap_or(Path::new(".")), &path.display().to_string())?;
        config.source = Some(path.to_path_buf());
        Ok(config)
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn output_path(&self, name: &str) -> PathBuf {
        self.resolve(&self.output_dir).join(name)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputRecord {
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageStatus {
    Completed,
    Failed,
    NotRun,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: Stage,
    pub status: StageStatus,
    pub outputs: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seconds: Option<f64>,
}

/// Settings and health of a grid propagation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FullRunRecord {
    pub r_min: f64,
    pub r_max: f64,
    pub points: usize,
    pub dt: f64,
    pub steps: usize,
    pub channels: Vec<String>,
    pub absorber: Option<(f64, f64)>,
    pub norm_budget: f64,
    pub norm_error: f64,
    pub final_norm: f64,
    pub absorbed: f64,
    pub resonance_mismatch: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Final target population of the most complete tier that ran.
    pub final_target_population: Option<f64>,
    pub target_population: BTreeMap<String, f64>,
    /// Largest out-of-chain population of the most complete tier that ran.
    pub max_leakage: Option<f64>,
    /// Largest per-state population difference between pairs of tiers.
    pub deviations: BTreeMap<String, f64>,
    /// Radiative lifetimes of the excited chain states, in ns.
    pub lifetimes_ns: BTreeMap<String, f64>,
    pub chain: Vec<String>,
    pub weakest_dme: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub tool: String,
    pub version: String,
    pub inputs: Vec<InputRecord>,
    pub config: RunConfig,
    pub stages: Vec<StageRecord>,
    pub metrics: Metrics,
    pub full_run: Option<FullRunRecord>,
    pub complete: bool,
}

impl Manifest {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifests always serialize") + "\n"
    }

    pub fn stage(&self, stage: Stage) -> Option<&StageRecord> {
        self.stages.iter().find(|r| r.stage == stage)
    }
}

/// Largest population deviation between every pair of traces.
pub fn compare_traces(traces: &[(&str, &PopulationTrace<f64>)]) -> BTreeMap<String, f64> {
    let mut out = BTreeMap::new();
    for (i, (a, ta)) in traces.iter().enumerate() {
        for (b, tb) in &traces[i + 1..] {
            if let Ok(d) = ta.max_deviation(tb) {
                out.insert(format!("{a}-{b}"), d);
            }
        }
    }
    out
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Evenly spaced sample times over the train's window.
fn sample_times(span: (f64, f64), samples: usize) -> Vec<f64> {
    let n = samples.max(2);
    (0..n)
        .map(|i| span.0 + (span.1 - span.0) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Largest J a chain of `n` states between the endpoints can reach.
fn reachable_j(initial: StateId, target: StateId, n: usize) -> u32 {
    ((initial.j + target.j) as usize + n.saturating_sub(1)).div_ceil(2) as u32
}

/// Lazily computed intermediate results shared by the stages of one run.
pub struct Session {
    pub config: RunConfig,
    system: Option<ElectronicSystem<f64>>,
    manifolds: Option<Vec<Manifold<f64>>>,
    maps: Option<CouplingMaps<f64>>,
    chain: Option<ChainFile>,
    traces: BTreeMap<Stage, PopulationTrace<f64>>,
    pub metrics: Metrics,
    pub full_run: Option<FullRunRecord>,
    inputs: BTreeMap<PathBuf, ()>,
}

impl Session {
    pub fn new(config: RunConfig) -> Self {
        Self {
            config,
            system: None,
            manifolds: None,
            maps: None,
            chain: None,
            traces: BTreeMap::new(),
            metrics: Metrics::default(),
            full_run: None,
            inputs: BTreeMap::new(),
        }
    }

    pub fn system(&mut self) -> Result<&ElectronicSystem<f64>> {
        if self.system.is_none() {
            let system = match &self.config.system {
                None => toy_system(),
                Some(path) => {
                    let path = self.config.resolve(path);
                    let description = SystemConfig::load(&path)?;
                    self.inputs.insert(path, ());
                    for file in description.data_files() {
                        self.inputs.insert(file, ());
                    }
                    description.build()?
                }
            };
            self.system = Some(system);
        }
        Ok(self.system.as_ref().expect("just set"))
    }

    fn level_grid(&self) -> Result<RadialGrid<f64>> {
        let l = &self.config.levels;
        RadialGrid::new(l.r_min, l.r_max, l.points)
    }

    fn manifold_keys(&self) -> Vec<ManifoldKey> {
        let c = &self.config.chain;
        let j_max = self.config.levels.j_max.unwrap_or_else(|| match &c.states {
            Some(states) => states.iter().map(|s| s.j).max().unwrap_or(0),
            None => reachable_j(c.initial, c.target, c.n),
        });
        (0..=j_max)
            .flat_map(|j| [ManifoldKey::new(Surface::Ground, j), ManifoldKey::new(Surface::Excited, j)])
            .collect()
    }

    pub fn manifolds(&mut self) -> Result<&[Manifold<f64>]> {
        if self.manifolds.is_none() {
            let grid = self.level_grid()?;
            let keys = self.manifold_keys();
            let n_levels = self.config.levels.n_levels;
            let solved = solve_manifolds(self.system()?, &keys, &grid, n_levels)?;
            self.manifolds = Some(solved);
        }
        Ok(self.manifolds.as_deref().expect("just set"))
    }

    pub fn maps(&mut self) -> Result<&CouplingMaps<f64>> {
        if self.maps.is_none() {
            self.manifolds()?;
            let dipole = &self.system.as_ref().expect("solved above").dipole;
            let maps = CouplingMaps::from_manifolds(self.manifolds.as_deref().expect("solved above"), dipole)?;
            self.maps = Some(maps);
        }
        Ok(self.maps.as_ref().expect("just set"))
    }

    /// The chain file of this run: loaded when configured, designed otherwise.
    pub fn chain(&mut self) -> Result<&ChainFile> {
        if self.chain.is_none() {
            let file = match self.config.chain.file.clone() {
                Some(path) => {
                    let path = self.config.resolve(&path);
                    let file = ChainFile::load(&path)?;
                    self.inputs.insert(path, ());
                    file
                }
                None => self.design()?,
            };
            self.metrics.chain = file.chain.ids().iter().map(ToString::to_string).collect();
            self.metrics.weakest_dme = Some(file.chain.weakest_link().2);
            self.chain = Some(file);
        }
        Ok(self.chain.as_ref().expect("just set"))
    }

    fn design(&mut self) -> Result<ChainFile> {
        let settings = self.config.chain.clone();
        let design = self.config.pulses.design()?;
        let maps = self.maps()?;
        let chain = match &settings.states {
            Some(states) => chain_from_states(maps, states, settings.dme_threshold)?,
            None => design_chain(
                maps,
                settings.initial,
                settings.target,
                settings.n,
                &ChainSearch {
                    threshold: settings.dme_threshold,
                },
            )?,
        };
        let train = design_train(&chain, &design)?;
        let lifetimes = self.lifetimes(&chain.ids())?;
        self.metrics.lifetimes_ns = lifetimes;
        ChainFile::new(chain, train)
    }

    /// Radiative lifetimes (ns) of the excited states in `states`.
    pub fn lifetimes(&mut self, states: &[StateId]) -> Result<BTreeMap<String, f64>> {
        self.manifolds()?;
        let manifolds = self.manifolds.as_deref().expect("solved above");
        let dipole = &self.system.as_ref().expect("built above").dipole;
        let mut out = BTreeMap::new();
        for id in states.iter().filter(|s| s.surface == Surface::Excited) {
            let Some(level) = manifolds
                .iter()
                .find(|m| m.key == id.manifold())
                .and_then(|m| m.level(id.v))
            else {
                continue;
            };
            if let Some(tau) = level_lifetime(level, manifolds, dipole, AngularWeighting::HonlLondon)?.value() {
                out.insert(id.to_string(), tau / NANOSECOND);
            }
        }
        Ok(out)
    }

    pub fn trace(&self, stage: Stage) -> Option<&PopulationTrace<f64>> {
        self.traces.get(&stage)
    }

    /// Runs one stage and returns the files it wrote.
    pub fn run_stage(&mut self, stage: Stage) -> Result<Vec<PathBuf>> {
        match stage {
            Stage::Levels => self.stage_levels(),
            Stage::DmeMap => self.stage_dme_maps(),
            Stage::DesignChain => {
                let path = self.config.output_path("chain.json");
                self.chain()?.save(&path)?;
                Ok(vec![path])
            }
            Stage::Pseudospin => {
                let file = self.chain()?.clone();
                let times = sample_times(file.train.span(), self.config.samples);
                let trace = trace_analytic(&file.chain, &file.train, &times)?;
                self.finish_trace(Stage::Pseudospin, trace, "pseudospin.csv")
            }
            Stage::Rwa => {
                let file = self.chain()?.clone();
                let trace = self.run_rwa(&file)?;
                self.finish_trace(Stage::Rwa, trace, "rwa.csv")
            }
            Stage::Full => self.stage_full(),
            Stage::Compare => self.stage_compare(),
        }
    }

    fn stage_levels(&mut self) -> Result<Vec<PathBuf>> {
        let wavefunctions = self.config.levels.wavefunctions;
        let dir = self.config.output_path("levels");
        let manifolds = self.manifolds()?;
        let mut written = Vec::new();
        for m in manifolds {
            let stem = format!("{}_J{}", m.key.surface, m.key.j);
            let path = dir.join(format!("{stem}.csv"));
            io::save_levels_csv(m, &path)?;
            written.push(path);
            if wavefunctions {
                let path = dir.join(format!("{stem}.wf"));
                io::save_wavefunctions(m, &path)?;
                written.push(path);
            }
        }
        Ok(written)
    }

    fn stage_dme_maps(&mut self) -> Result<Vec<PathBuf>> {
        let heatmaps = self.config.levels.heatmaps;
        let dir = self.config.output_path("dme");
        let keys: Vec<ManifoldKey> = self.maps()?.manifolds().map(|(k, _)| *k).collect();
        let maps = self.maps.as_ref().expect("built above");
        let mut written = Vec::new();
        for rows in keys.iter().filter(|k| k.surface == Surface::Ground) {
            for cols in keys.iter().filter(|k| rows.is_dipole_linked(k)) {
                let Some(map) = maps.map(rows, cols) else { continue };
                let stem = format!("X_J{}-A_J{}", rows.j, cols.j);
                let path = dir.join(format!("{stem}.csv"));
                io::save_dme_csv(&map, &path)?;
                written.push(path);
                if heatmaps {
                    let path = dir.join(format!("{stem}.svg"));
                    io::write_text(&path, &io::dme_heatmap_svg(&map))?;
                    written.push(path);
                }
            }
        }
        Ok(written)
    }

    fn run_rwa(&self, file: &ChainFile) -> Result<PopulationTrace<f64>> {
        let span = file.train.span();
        let samples = self.config.samples.max(2);
        let stride = (span.1 - span.0) / (samples - 1) as f64;
        let limit = 0.5 * MAX_RABI_STEP / file.train.max_rabi(&file.chain).max(f64::MIN_POSITIVE);
        let every = (stride / limit).ceil().max(1.0) as usize;
        let mut config = RwaConfig::new(stride / every as f64);
        config.sample_every = every;
        config.crosstalk = self.config.rwa.crosstalk;
        integrate_rwa(&file.chain, &file.train, span, &config)
    }

    fn stage_full(&mut self) -> Result<Vec<PathBuf>> {
        let file = self.chain()?.clone();
        let settings = self.config.full.clone();
        let levels = &self.config.levels;
        let grid = RadialGrid::new(
            settings.r_min.unwrap_or(levels.r_min),
            settings.r_max.unwrap_or(levels.r_max),
            settings.points.unwrap_or(levels.points),
        )?;
        let dt = settings
            .dt
            .unwrap_or(0.5 * MAX_CARRIER_STEP / file.train.max_carrier());
        let mut channels = ChannelSet::for_chain(&file.chain, settings.channel_margin);
        if settings.opposite_block {
            channels = channels.with_opposite_block();
        }
        let span = file.train.span();
        let steps = ((span.1 - span.0) / dt).ceil().max(1.0) as usize;
        let mut config = PropagationConfig::new(grid, dt, channels.clone());
        config.absorber = settings.absorber.then_some(Absorber {
            fraction: settings.absorber_fraction,
            strength: settings.absorber_strength,
        });
        config.sample_every = (steps / (self.config.samples.max(2) - 1)).max(1);
        config.watch = settings.watch.clone();
        let run = Propagator::propagate(self.system()?, &file.chain, &file.train, &config)?;
        self.full_run = Some(FullRunRecord {
            r_min: grid.r_min(),
            r_max: grid.r_max(),
            points: grid.len(),
            dt: run.dt,
            steps: run.steps,
            channels: channels.keys().iter().map(ToString::to_string).collect(),
            absorber: config.absorber.map(|a| (a.fraction, a.strength)),
            norm_budget: NORM_BUDGET,
            norm_error: run.norm_error,
            final_norm: run.final_norm,
            absorbed: run.absorbed,
            resonance_mismatch: run.resonance_mismatch,
        });
        let record_path = self.config.output_path("full_run.json");
        let record = serde_json::to_string_pretty(&self.full_run).expect("records serialize") + "\n";
        io::write_text(&record_path, &record)?;
        let mut written = self.finish_trace(Stage::Full, run.trace, "full.csv")?;
        written.push(record_path);
        Ok(written)
    }

    fn finish_trace(&mut self, stage: Stage, trace: PopulationTrace<f64>, name: &str) -> Result<Vec<PathBuf>> {
        let path = self.config.output_path(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        trace.save(&path)?;
        let target = self.chain()?.chain.len() - 1;
        if let Some(p) = trace.final_populations() {
            self.metrics.target_population.insert(stage.to_string(), p[target]);
            self.metrics.final_target_population = Some(p[target]);
        }
        if stage != Stage::Pseudospin {
            self.metrics.max_leakage = Some(trace.max_leakage());
        }
        self.traces.insert(stage, trace);
        Ok(vec![path])
    }

    fn stage_compare(&mut self) -> Result<Vec<PathBuf>> {
        let available: Vec<(&str, &PopulationTrace<f64>)> = [Stage::Pseudospin, Stage::Rwa, Stage::Full]
            .into_iter()
            .filter_map(|s| self.traces.get(&s).map(|t| (s.name(), t)))
            .collect();
        if available.len() < 2 {
            return Err(Error::Invalid("comparison needs at least two dynamics stages".into()));
        }
        let deviations = compare_traces(&available);
        let svg = io::trace_plot_svg("chain populations", &available);
        let json_path = self.config.output_path("compare.json");
        let svg_path = self.config.output_path("compare.svg");
        io::write_text(&json_path, &(serde_json::to_string_pretty(&deviations).expect("maps serialize") + "\n"))?;
        io::write_text(&svg_path, &svg)?;
        self.metrics.deviations = deviations;
        Ok(vec![json_path, svg_path])
    }

    fn input_records(&self) -> Vec<InputRecord> {
        let mut paths: Vec<&PathBuf> = self.inputs.keys().collect();
        if let Some(source) = &self.config.source {
            paths.insert(0, source);
        }
        paths
            .into_iter()
            .map(|p| InputRecord {
                path: p.display().to_string(),
                sha256: sha256_file(p).unwrap_or_else(|e| format!("unreadable: {e}")),
            })
            .collect()
    }
}

/// Result of [`run_pipeline`]: the manifest is always produced; `error` is
/// the failure of the first stage that did not complete.
pub struct PipelineOutcome {
    pub manifest: Manifest,
    pub error: Option<Error>,
    pub session: Session,
}

/// Runs the configured stages in order, stopping at the first failure, and
/// writes `manifest.json` to the output directory.
pub fn run_pipeline(config: RunConfig) -> PipelineOutcome {
    let stages = config.stages.clone();
    let deterministic = config.deterministic;
    let mut session = Session::new(config);
    let mut records = Vec::new();
    let mut error = None;
    for stage in stages {
        if error.is_some() {
            records.push(StageRecord {
                stage,
                status: StageStatus::NotRun,
                outputs: Vec::new(),
                diagnostic: None,
                seconds: None,
            });
            continue;
        }
        let clock = Instant::now();
        let outcome = session.run_stage(stage);
        let seconds = (!deterministic).then(|| clock.elapsed().as_secs_f64());
        let out_dir = session.config.resolve(&session.config.output_dir);
        match outcome {
            Ok(paths) => records.push(StageRecord {
                stage,
                status: StageStatus::Completed,
                outputs: paths
                    .iter()
                    .map(|p| p.strip_prefix(&out_dir).unwrap_or(p).display().to_string())
                    .collect(),
                diagnostic: None,
                seconds,
            }),
            Err(e) => {
                records.push(StageRecord {
                    stage,
                    status: StageStatus::Failed,
                    outputs: Vec::new(),
                    diagnostic: Some(e.to_string()),
                    seconds,
                });
                error = Some(e);
            }
        }
    }
    let manifest = Manifest {
        format: MANIFEST_FORMAT.into(),
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        inputs: session.input_records(),
        config: session.config.clone(),
        stages: records,
        metrics: session.metrics.clone(),
        full_run: session.full_run.clone(),
        complete: error.is_none(),
    };
    if let Err(e) = io::write_text(&session.config.output_path("manifest.json"), &manifest.to_json()) {
        error.get_or_insert(e);
    }
    PipelineOutcome {
        manifest,
        error,
        session,
    }
}
