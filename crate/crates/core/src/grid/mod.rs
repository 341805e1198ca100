//! Coupled-channel wavepacket propagation on a radial grid without the
//! rotating-wave approximation.

mod propagator;

pub use propagator::{build_coupling, GridRun, Propagator};

use num_complex::Complex;

use crate::chain::ChainSpec;
use crate::coupling::angular_factor_a;
use crate::dvr::RadialGrid;
use crate::error::{Error, Result};
use crate::num::Real;
use crate::state::{ManifoldKey, StateId, Surface};

/// Radial channels `(e, J)` included in a propagation, kept sorted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChannelSet {
    keys: Vec<ManifoldKey>,
}

impl ChannelSet {
    pub fn new(mut keys: Vec<ManifoldKey>) -> Result<Self> {
        if keys.is_empty() {
            return Err(Error::Invalid("at least one channel is required".into()));
        }
        keys.sort();
        if keys.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Invalid("channels must be distinct".into()));
        }
        Ok(Self { keys })
    }

    /// Ground-state channels with `J ≡ ground_parity (mod 2)` and excited
    /// channels of the other parity, for `J ≤ j_max`.
    pub fn parity_block(ground_parity: u32, j_max: u32) -> Self {
        let keys = (0..=j_max)
            .map(|j| {
                let surface = if j % 2 == ground_parity % 2 {
                    Surface::Ground
                } else {
                    Surface::Excited
                };
                ManifoldKey::new(surface, j)
            })
            .collect();
        Self::new(keys).expect("parity blocks are non-empty and distinct")
    }

    /// The parity block containing `chain`, up to `margin` above its largest J.
    pub fn for_chain<T: Real>(chain: &ChainSpec<T>, margin: u32) -> Self {
        let first = chain.initial().id;
        let ground_parity = match first.surface {
            Surface::Ground => first.j % 2,
            Surface::Excited => (first.j + 1) % 2,
        };
        let j_max = chain.states.iter().map(|s| s.id.j).max().unwrap_or(0) + margin;
        Self::parity_block(ground_parity, j_max)
    }

    /// This set together with its mirror of opposite J parity (every channel
    /// also present on the other surface).
    pub fn with_opposite_block(&self) -> Self {
        let mut keys = self.keys.clone();
        for k in &self.keys {
            let mirror = ManifoldKey::new(k.surface.other(), k.j);
            if !keys.contains(&mirror) {
                keys.push(mirror);
            }
        }
        Self::new(keys).expect("union of distinct channels")
    }

    pub fn keys(&self) -> &[ManifoldKey] {
        &self.keys
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn index(&self, key: &ManifoldKey) -> Option<usize> {
        self.keys.iter().position(|k| k == key)
    }

    /// Angular part of the dipole coupling between two channels: `−a_{min J}`
    /// for E1-linked channels, zero otherwise.
    pub fn angular_coupling<T: Real>(a: &ManifoldKey, b: &ManifoldKey) -> T {
        if a.is_dipole_linked(b) {
            -angular_factor_a::<T>(a.j.min(b.j))
        } else {
            T::zero()
        }
    }

    /// Connected groups of mutually coupled channels (indices into `keys`),
    /// each ordered by J. Within a group consecutive entries are linked and
    /// no others, so every group's coupling matrix is tridiagonal.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let n = self.keys.len();
        let mut seen = vec![false; n];
        let mut blocks = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut block = vec![start];
            seen[start] = true;
            let mut cursor = 0;
            while cursor < block.len() {
                let here = self.keys[block[cursor]];
                for (i, k) in self.keys.iter().enumerate() {
                    if !seen[i] && here.is_dipole_linked(k) {
                        seen[i] = true;
                        block.push(i);
                    }
                }
                cursor += 1;
            }
            block.sort_by_key(|&i| self.keys[i].j);
            blocks.push(block);
        }
        blocks
    }
}

/// Smooth mask `exp(−strength·dt·x²)` applied each step over the outer
/// `fraction` of the grid, with `x` rising from 0 to 1 towards the edge.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Absorber<T> {
    pub fraction: T,
    pub strength: T,
}

impl<T: Real> Default for Absorber<T> {
    fn default() -> Self {
        Self {
            fraction: T::of(0.1),
            strength: T::of(0.01),
        }
    }
}

impl<T: Real> Absorber<T> {
    pub fn mask(&self, grid: &RadialGrid<T>, dt: T) -> Result<Vec<T>> {
        if !(self.fraction > T::zero() && self.fraction < T::one()) || !(self.strength >= T::zero()) {
            return Err(Error::Invalid(
                "absorber fraction must lie in (0, 1) and strength be non-negative".into(),
            ));
        }
        let width = (grid.r_max() - grid.r_min()) * self.fraction;
        let start = grid.r_max() - width;
        Ok(grid
            .points()
            .into_iter()
            .map(|r| {
                if r <= start {
                    T::one()
                } else {
                    let x = (r - start) / width;
                    (-self.strength * dt * x * x).exp()
                }
            })
            .collect())
    }
}

/// Largest `dt·ω_max` accepted, with `ω_max` the highest carrier.
pub const MAX_CARRIER_STEP: f64 = 0.2;
/// Allowed `|norm + absorbed − 1|` over a run.
pub const NORM_BUDGET: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct PropagationConfig<T> {
    pub grid: RadialGrid<T>,
    pub dt: T,
    pub channels: ChannelSet,
    pub absorber: Option<Absorber<T>>,
    /// Record populations every this many steps (the final step is always kept).
    pub sample_every: usize,
    /// Propagation window; defaults to the span of the pulse train.
    pub t_span: Option<(T, T)>,
    /// Extra states projected alongside the chain.
    pub watch: Vec<StateId>,
}

impl<T: Real> PropagationConfig<T> {
    pub fn new(grid: RadialGrid<T>, dt: T, channels: ChannelSet) -> Self {
        Self {
            grid,
            dt,
            channels,
            absorber: Some(Absorber::default()),
            sample_every: 1,
            t_span: None,
            watch: Vec::new(),
        }
    }
}

/// Radial functions `F_c(R_i)` of every channel at one time.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelWavefunction<T> {
    pub keys: Vec<ManifoldKey>,
    pub amplitudes: Vec<Vec<Complex<T>>>,
    pub time: T,
}

impl<T: Real> ChannelWavefunction<T> {
    pub fn zeros(channels: &ChannelSet, points: usize, time: T) -> Self {
        Self {
            keys: channels.keys().to_vec(),
            amplitudes: vec![vec![Complex::new(T::zero(), T::zero()); points]; channels.len()],
            time,
        }
    }

    pub fn channel(&self, key: &ManifoldKey) -> Option<&[Complex<T>]> {
        let i = self.keys.iter().position(|k| k == key)?;
        Some(&self.amplitudes[i])
    }

    pub fn channel_mut(&mut self, key: &ManifoldKey) -> Option<&mut [Complex<T>]> {
        let i = self.keys.iter().position(|k| k == key)?;
        Some(&mut self.amplitudes[i])
    }

    /// `Δ·Σ_c Σ_i |F_c(R_i)|²`.
    pub fn norm(&self, spacing: T) -> T {
        spacing
            * self
                .amplitudes
                .iter()
                .flatten()
                .fold(T::zero(), |acc, z| acc + z.norm_sqr())
    }

    /// `|Δ·Σ_i φ(R_i) F_c(R_i)|²` for a real level function in channel `key`.
    pub fn population(&self, key: &ManifoldKey, level: &[T], spacing: T) -> T {
        let Some(f) = self.channel(key) else {
            return T::zero();
        };
        let overlap = f
            .iter()
            .zip(level)
            .fold(Complex::new(T::zero(), T::zero()), |acc, (z, p)| acc + *z * *p);
        (overlap * spacing).norm_sqr()
    }
}
