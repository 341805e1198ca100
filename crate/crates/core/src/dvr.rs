//! Colbert–Miller discrete variable representation of the radial
//! Schrödinger equation, one rotational manifold at a time.

use ndarray::Array2;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::num::{EigenRange, Real};
use crate::potentials::ElectronicSystem;
use crate::state::{ManifoldKey, StateId, Surface};

/// Default eigensolver grid: 35 bohr with 7001 points.
pub const EIGEN_GRID_LENGTH: f64 = 35.0;
pub const EIGEN_GRID_POINTS: usize = 7001;
/// Default propagation grid: 20 bohr with 2001 points.
pub const PROPAGATION_GRID_LENGTH: f64 = 20.0;
pub const PROPAGATION_GRID_POINTS: usize = 2001;

pub const MIN_GRID_POINTS: usize = 8;

/// Uniform grid `R_i = r_min + i·Δ`, `i = 0..n_points`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadialGrid<T> {
    r_min: T,
    r_max: T,
    n_points: usize,
}

impl<T: Real> RadialGrid<T> {
    pub fn new(r_min: T, r_max: T, n_points: usize) -> Result<Self> {
        if n_points < MIN_GRID_POINTS {
            return Err(Error::Invalid(format!(
                "a radial grid needs at least {MIN_GRID_POINTS} points, got {n_points}"
            )));
        }
        if !(r_min >= T::zero()) || !(r_max > r_min) || !r_max.is_finite() {
            return Err(Error::Invalid(format!(
                "radial grid bounds must satisfy 0 <= r_min < r_max (got {r_min}, {r_max})"
            )));
        }
        Ok(Self {
            r_min,
            r_max,
            n_points,
        })
    }

    /// Grid of the given length starting at `r_min`.
    pub fn spanning(r_min: T, length: T, n_points: usize) -> Result<Self> {
        Self::new(r_min, r_min + length, n_points)
    }

    pub fn r_min(&self) -> T {
        self.r_min
    }

    pub fn r_max(&self) -> T {
        self.r_max
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> T {
        (self.r_max - self.r_min) / T::of((self.n_points - 1) as f64)
    }

    pub fn point(&self, i: usize) -> T {
        self.r_min + self.spacing() * T::of(i as f64)
    }

    pub fn points(&self) -> Vec<T> {
        (0..self.n_points).map(|i| self.point(i)).collect()
    }
}

/// Colbert–Miller kinetic energy matrix on a uniform grid (the infinite-range
/// formula restricted to the box):
///
/// `T_ii = π²/3 · 1/(2μΔ²)`, `T_ij = 2(−1)^(i−j)/(i−j)² · 1/(2μΔ²)`.
pub fn kinetic_matrix<T: Real>(grid: &RadialGrid<T>, mu: T) -> Result<Array2<T>> {
    if !(mu > T::zero()) {
        return Err(Error::Invalid("reduced mass must be positive".into()));
    }
    let n = grid.len();
    let dr = grid.spacing();
    let prefactor = T::one() / (T::of(2.0) * mu * dr * dr);
    let diagonal = prefactor * T::PI() * T::PI() / T::of(3.0);
    // The matrix is Toeplitz; tabulate the distinct entries once.
    let band: Vec<T> = (0..n)
        .map(|k| {
            if k == 0 {
                diagonal
            } else {
                let sign = if k % 2 == 0 { T::one() } else { -T::one() };
                prefactor * sign * T::of(2.0) / T::of((k * k) as f64)
            }
        })
        .collect();
    Ok(Array2::from_shape_fn((n, n), |(i, j)| band[i.abs_diff(j)]))
}

/// One eigenpair of a `(surface, J)` manifold.
#[derive(Clone, Debug)]
pub struct VibrationalLevel<T> {
    pub id: StateId,
    pub energy: T,
    /// Energy lies below the dissociation asymptote.
    pub bound: bool,
    /// Grid samples normalized so that `Δ·Σ φ_i² = 1`.
    pub wavefunction: Vec<T>,
    pub grid: RadialGrid<T>,
}

impl<T: Real> VibrationalLevel<T> {
    /// `Δ·Σ φ_i ψ_i`.
    pub fn overlap(&self, other: &VibrationalLevel<T>) -> Result<T> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(self.grid.spacing()
            * self
                .wavefunction
                .iter()
                .zip(&other.wavefunction)
                .fold(T::zero(), |acc, (a, b)| acc + *a * *b))
    }
}

/// All computed levels of one rotational manifold, ascending in energy.
#[derive(Clone, Debug)]
pub struct Manifold<T> {
    pub key: ManifoldKey,
    pub grid: RadialGrid<T>,
    pub levels: Vec<VibrationalLevel<T>>,
}

impl<T: Real> Manifold<T> {
    pub fn level(&self, v: usize) -> Option<&VibrationalLevel<T>> {
        self.levels.get(v)
    }

    pub fn bound_levels(&self) -> impl Iterator<Item = &VibrationalLevel<T>> {
        self.levels.iter().filter(|l| l.bound)
    }
}

/// Number of sign changes, ignoring samples below `1e-6` of the peak so that
/// round-off in the forbidden tails is not counted.
pub fn count_nodes<T: Real>(wavefunction: &[T]) -> usize {
    let peak = wavefunction.iter().fold(T::zero(), |m, x| m.max(x.abs()));
    let floor = peak * T::of(1e-6);
    let mut last_sign = 0i8;
    let mut nodes = 0;
    for x in wavefunction {
        if x.abs() <= floor {
            continue;
        }
        let sign = if *x > T::zero() { 1 } else { -1 };
        if last_sign != 0 && sign != last_sign {
            nodes += 1;
        }
        last_sign = sign;
    }
    nodes
}

/// Solves `[T + V_J^e] φ = E φ` on `grid`.
///
/// With `n_levels = Some(n)` the lowest `n` eigenpairs are returned and each is
/// flagged bound or unbound; with `None` every level below the asymptote is
/// returned. Eigenvectors are scaled to unit norm with weight Δ and their sign
/// is fixed so that the first significant lobe is positive.
pub fn solve_manifold<T: Real>(
    system: &ElectronicSystem<T>,
    surface: Surface,
    j: u32,
    grid: &RadialGrid<T>,
    n_levels: Option<usize>,
) -> Result<Manifold<T>> {
    let points = grid.points();
    let potential = system.sample_effective(surface, j, &points)?;
    let mut hamiltonian = kinetic_matrix(grid, system.mu)?;
    for (i, v) in potential.iter().enumerate() {
        hamiltonian[[i, i]] += *v;
    }
    let asymptote = system.curve(surface).asymptote();
    let n = grid.len();
    let range = match n_levels {
        Some(count) => EigenRange::Lowest(count),
        None => {
            let floor = potential.iter().fold(T::infinity(), |m, v| m.min(*v));
            EigenRange::Window {
                lower: floor - T::one(),
                upper: asymptote,
            }
        }
    };
    let buffer = hamiltonian
        .as_slice_mut()
        .expect("freshly built matrices are contiguous");
    let pairs = T::symmetric_eigen(buffer, n, range)
        .map_err(|info| Error::Eigensolver { size: n, info })?;

    let scale = T::one() / grid.spacing().sqrt();
    let levels = (0..pairs.len())
        .map(|k| {
            let mut wavefunction: Vec<T> = pairs.vector(k).iter().map(|&c| c * scale).collect();
            let peak = wavefunction.iter().fold(T::zero(), |m, x| m.max(x.abs()));
            let first = wavefunction
                .iter()
                .find(|x| x.abs() > peak * T::of(1e-3))
                .copied()
                .unwrap_or(T::one());
            if first < T::zero() {
                wavefunction.iter_mut().for_each(|x| *x = -*x);
            }
            VibrationalLevel {
                id: StateId::new(surface, k, j),
                energy: pairs.values[k],
                bound: pairs.values[k] < asymptote,
                wavefunction,
                grid: *grid,
            }
        })
        .collect();
    Ok(Manifold {
        key: ManifoldKey::new(surface, j),
        grid: *grid,
        levels,
    })
}

/// Solves several manifolds concurrently; results follow the order of `keys`.
pub fn solve_manifolds<T: Real>(
    system: &ElectronicSystem<T>,
    keys: &[ManifoldKey],
    grid: &RadialGrid<T>,
    n_levels: Option<usize>,
) -> Result<Vec<Manifold<T>>> {
    keys.par_iter()
        .map(|key| solve_manifold(system, key.surface, key.j, grid, n_levels))
        .collect()
}
