use std::collections::BTreeMap;

use ndarray::Array2;
use num_complex::Complex;

use super::{ChannelSet, ChannelWavefunction, PropagationConfig, MAX_CARRIER_STEP, NORM_BUDGET};
use crate::chain::{ChainSpec, PulseTrain};
use crate::dvr::{solve_manifold, Manifold, RadialGrid};
use crate::error::{Error, Result};
use crate::num::{Real, Spectral};
use crate::potentials::ElectronicSystem;
use crate::state::{ManifoldKey, StateId};
use crate::trace::PopulationTrace;

/// Dense channel matrix at every grid point: effective potentials on the
/// diagonal and `−d(R)·E·a_{min J}` between E1-linked channels.
pub fn build_coupling<T: Real>(
    system: &ElectronicSystem<T>,
    channels: &ChannelSet,
    grid: &RadialGrid<T>,
    field: T,
) -> Result<Vec<Array2<T>>> {
    let points = grid.points();
    let potentials = channels
        .keys()
        .iter()
        .map(|k| system.sample_effective(k.surface, k.j, &points))
        .collect::<Result<Vec<_>>>()?;
    let n = channels.len();
    Ok(points
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let d = system.dipole.value(r);
            Array2::from_shape_fn((n, n), |(a, b)| {
                if a == b {
                    potentials[a][i]
                } else {
                    d * field
                        * ChannelSet::angular_coupling::<T>(&channels.keys()[a], &channels.keys()[b])
                }
            })
        })
        .collect())
}

/// Tridiagonal group of coupled channels.
struct Block<T> {
    channels: Vec<usize>,
    /// Angular factor between `channels[i]` and `channels[i + 1]`.
    links: Vec<T>,
}

/// Split-operator stepper for a fixed system, grid, channel set and step.
pub struct Propagator<T: Real> {
    grid: RadialGrid<T>,
    dt: T,
    keys: Vec<ManifoldKey>,
    blocks: Vec<Block<T>>,
    potentials: Vec<Vec<T>>,
    dipole: Vec<T>,
    kinetic: Vec<Complex<T>>,
    mask: Option<Vec<T>>,
    fft: Box<dyn Spectral<T>>,
    // Scratch space for the pointwise exponentials.
    diag: Vec<T>,
    off: Vec<T>,
    vectors: Vec<T>,
    work: Vec<T>,
    local: Vec<Complex<T>>,
    rotated: Vec<Complex<T>>,
}

impl<T: Real> Propagator<T> {
    pub fn new(system: &ElectronicSystem<T>, config: &PropagationConfig<T>) -> Result<Self> {
        let grid = config.grid;
        if !(config.dt > T::zero()) {
            return Err(Error::Invalid("time step must be positive".into()));
        }
        let points = grid.points();
        let keys = config.channels.keys().to_vec();
        let potentials = keys
            .iter()
            .map(|k| system.sample_effective(k.surface, k.j, &points))
            .collect::<Result<Vec<_>>>()?;
        let dipole = points.iter().map(|&r| system.dipole.value(r)).collect();
        let blocks = config
            .channels
            .blocks()
            .into_iter()
            .map(|channels| {
                let links = channels
                    .windows(2)
                    .map(|w| ChannelSet::angular_coupling(&keys[w[0]], &keys[w[1]]))
                    .collect();
                Block { channels, links }
            })
            .collect::<Vec<_>>();
        let n = grid.len();
        let length = grid.spacing() * T::of(n as f64);
        let kinetic = (0..n)
            .map(|j| {
                let index = if j < n.div_ceil(2) { j as f64 } else { j as f64 - n as f64 };
                let k = T::TAU() * T::of(index) / length;
                Complex::from_polar(T::one(), -k * k * config.dt / (T::of(2.0) * system.mu))
            })
            .collect();
        let mask = config
            .absorber
            .map(|a| a.mask(&grid, config.dt))
            .transpose()?;
        let widest = blocks.iter().map(|b| b.channels.len()).max().unwrap_or(1);
        Ok(Self {
            grid,
            dt: config.dt,
            keys,
            blocks,
            potentials,
            dipole,
            kinetic,
            mask,
            fft: T::spectral(n),
            diag: vec![T::zero(); widest],
            off: vec![T::zero(); widest],
            vectors: vec![T::zero(); widest * widest],
            work: vec![T::zero(); (2 * widest).saturating_sub(2).max(1)],
            local: vec![Complex::new(T::zero(), T::zero()); widest],
            rotated: vec![Complex::new(T::zero(), T::zero()); widest],
        })
    }

    pub fn grid(&self) -> &RadialGrid<T> {
        &self.grid
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    /// A zero wavefunction over this propagator's channels.
    pub fn zero_state(&self, time: T) -> ChannelWavefunction<T> {
        ChannelWavefunction {
            keys: self.keys.clone(),
            amplitudes: vec![vec![Complex::new(T::zero(), T::zero()); self.grid.len()]; self.keys.len()],
            time,
        }
    }

    /// `ψ ← exp(−i·H(R; field)·tau)·ψ` point by point.
    pub fn apply_potential(&mut self, psi: &mut ChannelWavefunction<T>, field: T, tau: T) -> Result<()> {
        let zero = Complex::new(T::zero(), T::zero());
        for block in &self.blocks {
            let m = block.channels.len();
            for i in 0..self.grid.len() {
                let coupling = field * self.dipole[i];
                if m == 1 || coupling == T::zero() {
                    for &c in &block.channels {
                        let phase = Complex::from_polar(T::one(), -self.potentials[c][i] * tau);
                        psi.amplitudes[c][i] *= phase;
                    }
                    continue;
                }
                for (slot, &c) in block.channels.iter().enumerate() {
                    self.diag[slot] = self.potentials[c][i];
                    self.local[slot] = psi.amplitudes[c][i];
                }
                for (slot, factor) in block.links.iter().enumerate() {
                    self.off[slot] = coupling * *factor;
                }
                T::tridiagonal_eigen(
                    &mut self.diag[..m],
                    &mut self.off[..m],
                    &mut self.vectors[..m * m],
                    &mut self.work,
                )
                .map_err(|info| Error::Eigensolver { size: m, info })?;
                for k in 0..m {
                    let z = &self.vectors[k * m..(k + 1) * m];
                    let projected = (0..m).fold(zero, |acc, s| acc + self.local[s] * z[s]);
                    self.rotated[k] = projected * Complex::from_polar(T::one(), -self.diag[k] * tau);
                }
                for (slot, &c) in block.channels.iter().enumerate() {
                    psi.amplitudes[c][i] = (0..m).fold(zero, |acc, k| {
                        acc + self.rotated[k] * self.vectors[k * m + slot]
                    });
                }
            }
        }
        Ok(())
    }

    /// Free evolution over one step in momentum space.
    pub fn apply_kinetic(&mut self, psi: &mut ChannelWavefunction<T>) {
        for channel in psi.amplitudes.iter_mut() {
            self.fft.forward(channel);
            for (z, k) in channel.iter_mut().zip(&self.kinetic) {
                *z *= *k;
            }
            self.fft.inverse(channel);
        }
    }

    /// Applies the absorbing mask and returns the norm it removed.
    pub fn absorb(&self, psi: &mut ChannelWavefunction<T>) -> T {
        let Some(mask) = &self.mask else {
            return T::zero();
        };
        let mut removed = T::zero();
        for channel in psi.amplitudes.iter_mut() {
            for (z, m) in channel.iter_mut().zip(mask) {
                if *m < T::one() {
                    let before = z.norm_sqr();
                    *z = *z * *m;
                    removed += before - z.norm_sqr();
                }
            }
        }
        removed * self.grid.spacing()
    }

    /// One Strang step from `psi.time`: half potential at `t`, kinetic,
    /// absorber, half potential at `t + dt`. Returns the absorbed norm.
    pub fn step(&mut self, psi: &mut ChannelWavefunction<T>, train: &PulseTrain<T>) -> Result<T> {
        let half = self.dt * T::of(0.5);
        let t = psi.time;
        self.apply_potential(psi, train.total_field(t), half)?;
        self.apply_kinetic(psi);
        let absorbed = self.absorb(psi);
        psi.time = t + self.dt;
        self.apply_potential(psi, train.total_field(psi.time), half)?;
        check_finite(psi)?;
        Ok(absorbed)
    }

    /// Runs `steps` Strang steps, fusing the adjacent half potential steps
    /// between samples. `sample` sees the state after every `every`-th step
    /// and after the last, together with the absorbed norm so far.
    pub fn run(
        &mut self,
        psi: &mut ChannelWavefunction<T>,
        train: &PulseTrain<T>,
        steps: usize,
        every: usize,
        mut sample: impl FnMut(usize, &ChannelWavefunction<T>, T) -> Result<()>,
    ) -> Result<T> {
        let half = self.dt * T::of(0.5);
        let start = psi.time;
        let mut absorbed = T::zero();
        let every = every.max(1);
        self.apply_potential(psi, train.total_field(start), half)?;
        for n in 1..=steps {
            self.apply_kinetic(psi);
            absorbed += self.absorb(psi);
            psi.time = start + self.dt * T::of(n as f64);
            let field = train.total_field(psi.time);
            if n == steps || n % every == 0 {
                self.apply_potential(psi, field, half)?;
                check_finite(psi)?;
                sample(n, psi, absorbed)?;
                if n < steps {
                    self.apply_potential(psi, field, half)?;
                }
            } else {
                self.apply_potential(psi, field, self.dt)?;
            }
        }
        Ok(absorbed)
    }

    /// Propagates the chain's initial level through `train` and projects onto
    /// the chain states (and any watched states) solved on the propagation grid.
    pub fn propagate(
        system: &ElectronicSystem<T>,
        chain: &ChainSpec<T>,
        train: &PulseTrain<T>,
        config: &PropagationConfig<T>,
    ) -> Result<GridRun<T>> {
        train.check_against(chain)?;
        let omega_max = train.max_carrier();
        if !(config.dt * omega_max < T::of(MAX_CARRIER_STEP)) {
            return Err(Error::Resolution(format!(
                "dt·ω_max = {:e} must stay below {MAX_CARRIER_STEP}",
                (config.dt * omega_max).to_f64_lossy()
            )));
        }
        let (t_start, t_end) = config.t_span.unwrap_or_else(|| train.span());
        if !(t_end > t_start) {
            return Err(Error::Invalid("propagation window must be increasing".into()));
        }
        let mut projected: Vec<StateId> = chain.ids();
        for w in &config.watch {
            if !projected.contains(w) {
                projected.push(*w);
            }
        }
        for s in &projected {
            if config.channels.index(&s.manifold()).is_none() {
                return Err(Error::Invalid(format!("state {s} lies outside the channel set")));
            }
        }
        let levels = project_levels(system, &config.grid, &projected)?;
        let level = |s: &StateId| &levels[&s.manifold()].levels[s.v];
        let resonance_mismatch = (0..chain.links())
            .map(|k| {
                let gap = (level(&chain.states[k + 1].id).energy - level(&chain.states[k].id).energy).abs();
                (gap - train.pulses[k].omega).abs()
            })
            .fold(T::zero(), T::max);

        // Exact multiple of the requested step over the window.
        let steps = ((t_end - t_start) / config.dt).ceil().to_f64_lossy().max(1.0) as usize;
        let dt = (t_end - t_start) / T::of(steps as f64);
        let mut config = config.clone();
        config.dt = dt;
        let mut propagator = Self::new(system, &config)?;
        let spacing = config.grid.spacing();

        let mut psi = propagator.zero_state(t_start);
        let initial = chain.initial().id;
        let start_level = level(&initial);
        psi.channel_mut(&initial.manifold())
            .expect("validated above")
            .iter_mut()
            .zip(&start_level.wavefunction)
            .for_each(|(z, f)| *z = Complex::new(*f, T::zero()));
        let initial_norm = psi.norm(spacing);

        let chain_len = chain.len();
        let mut trace = PopulationTrace::new(projected.clone());
        let mut worst_budget = T::zero();
        let mut record = |psi: &ChannelWavefunction<T>, absorbed: T| -> Result<()> {
            let pops: Vec<T> = projected
                .iter()
                .map(|s| psi.population(&s.manifold(), &level(s).wavefunction, spacing) / initial_norm)
                .collect();
            let norm = psi.norm(spacing) / initial_norm;
            let absorbed = absorbed / initial_norm;
            let budget = (norm + absorbed - T::one()).abs();
            worst_budget = worst_budget.max(budget);
            if budget > T::of(NORM_BUDGET) {
                return Err(Error::NormDrift {
                    time: psi.time.to_f64_lossy(),
                    norm: (norm + absorbed).to_f64_lossy(),
                });
            }
            let in_chain = pops[..chain_len].iter().fold(T::zero(), |a, b| a + *b);
            trace.push(psi.time, pops, T::one() - in_chain - absorbed, absorbed);
            Ok(())
        };
        record(&psi, T::zero())?;
        let absorbed = propagator.run(&mut psi, train, steps, config.sample_every, |_, psi, absorbed| {
            record(psi, absorbed)
        })?;
        let final_norm = psi.norm(spacing) / initial_norm;
        Ok(GridRun {
            trace,
            dt,
            steps,
            absorbed: absorbed / initial_norm,
            final_norm,
            norm_error: worst_budget,
            resonance_mismatch,
            final_state: psi,
        })
    }
}

fn check_finite<T: Real>(psi: &ChannelWavefunction<T>) -> Result<()> {
    if psi
        .amplitudes
        .iter()
        .flatten()
        .any(|z| !z.re.is_finite() || !z.im.is_finite())
    {
        return Err(Error::NonFinite { time: psi.time.to_f64_lossy() });
    }
    Ok(())
}

/// Levels of every manifold touched by `states`, solved on the propagation grid.
fn project_levels<T: Real>(
    system: &ElectronicSystem<T>,
    grid: &RadialGrid<T>,
    states: &[StateId],
) -> Result<BTreeMap<ManifoldKey, Manifold<T>>> {
    let mut needed: BTreeMap<ManifoldKey, usize> = BTreeMap::new();
    for s in states {
        let count = needed.entry(s.manifold()).or_insert(0);
        *count = (*count).max(s.v + 1);
    }
    needed
        .into_iter()
        .map(|(key, count)| {
            let manifold = solve_manifold(system, key.surface, key.j, grid, Some(count))?;
            if manifold.levels.len() < count {
                return Err(Error::Invalid(format!(
                    "the propagation grid supports only {} levels in {key}",
                    manifold.levels.len()
                )));
            }
            Ok((key, manifold))
        })
        .collect()
}

/// Outcome of a full grid propagation.
#[derive(Clone, Debug)]
pub struct GridRun<T> {
    /// Chain states first, then watched states; leakage counts chain states only.
    pub trace: PopulationTrace<T>,
    pub dt: T,
    pub steps: usize,
    /// Norm removed by the absorber, relative to the initial norm.
    pub absorbed: T,
    pub final_norm: T,
    /// Largest `|norm + absorbed − 1|` seen at any sample.
    pub norm_error: T,
    /// Largest difference between a carrier and its link's Bohr frequency on
    /// the propagation grid.
    pub resonance_mismatch: T,
    pub final_state: ChannelWavefunction<T>,
}
