//! Rovibronic dipole couplings: angular factors, vibrational dipole matrix
//! elements, coupling maps between manifolds, and radiative lifetimes.

use std::collections::BTreeMap;

use ndarray::Array2;

use crate::dvr::{Manifold, VibrationalLevel};
use crate::error::{Error, Result};
use crate::num::Real;
use crate::potentials::DipoleFunction;
use crate::state::{ManifoldKey, StateId};
use crate::units::SPEED_OF_LIGHT;

/// `⟨Y_J^0|cos θ|Y_{J+1}^0⟩ = sqrt((J+1)² / ((2J+3)(2J+1)))`.
pub fn angular_factor_a<T: Real>(j: u32) -> T {
    let j = j as f64;
    T::of(((j + 1.0) * (j + 1.0) / ((2.0 * j + 3.0) * (2.0 * j + 1.0))).sqrt())
}

/// `⟨Y_J^0|cos θ|Y_{J-1}^0⟩ = sqrt(J² / ((2J+1)(2J−1)))`; zero for `J = 0`.
pub fn angular_factor_b<T: Real>(j: u32) -> T {
    let j = j as f64;
    T::of((j * j / ((2.0 * j + 1.0) * (2.0 * j - 1.0))).sqrt())
}

/// Angular factor of an E1 link between rotational levels `j1` and `j2`,
/// i.e. `a` of the smaller of the two; `None` unless `|j1 − j2| = 1`.
pub fn link_angular_factor<T: Real>(j1: u32, j2: u32) -> Option<T> {
    (j1.abs_diff(j2) == 1).then(|| angular_factor_a(j1.min(j2)))
}

/// Vibrational dipole matrix element `Δ·Σ φ₁(R_i) d(R_i) φ₂(R_i)`.
pub fn dme<T: Real>(
    level1: &VibrationalLevel<T>,
    level2: &VibrationalLevel<T>,
    dipole: &DipoleFunction<T>,
) -> Result<T> {
    if level1.grid != level2.grid {
        return Err(Error::GridMismatch);
    }
    let grid = level1.grid;
    let sum = level1
        .wavefunction
        .iter()
        .zip(&level2.wavefunction)
        .enumerate()
        .fold(T::zero(), |acc, (i, (a, b))| {
            acc + *a * dipole.value(grid.point(i)) * *b
        });
    Ok(grid.spacing() * sum)
}

/// Dipole matrix elements between every level of two E1-linked manifolds.
#[derive(Clone, Debug)]
pub struct CouplingMap<T> {
    pub rows: ManifoldKey,
    pub cols: ManifoldKey,
    /// `values[[v, w]] = ⟨rows, v| d |cols, w⟩` (signed).
    pub values: Array2<T>,
}

impl<T: Real> CouplingMap<T> {
    /// The map of squared DMEs, as plotted for chain selection.
    pub fn squared(&self) -> Array2<T> {
        self.values.mapv(|d| d * d)
    }

    /// Level pair with the largest squared DME.
    pub fn strongest(&self) -> Option<(usize, usize, T)> {
        self.values
            .indexed_iter()
            .map(|((v, w), d)| (v, w, *d * *d))
            .fold(None, |best, cand| match best {
                Some(b) if b.2 >= cand.2 => Some(b),
                _ => Some(cand),
            })
    }

    pub fn transposed(&self) -> Self {
        Self {
            rows: self.cols,
            cols: self.rows,
            values: self.values.t().to_owned(),
        }
    }
}

pub fn coupling_map<T: Real>(
    rows: &Manifold<T>,
    cols: &Manifold<T>,
    dipole: &DipoleFunction<T>,
) -> Result<CouplingMap<T>> {
    if !rows.key.is_dipole_linked(&cols.key) {
        return Err(Error::Invalid(format!(
            "manifolds {} and {} are not linked by an E1 transition",
            rows.key, cols.key
        )));
    }
    if rows.grid != cols.grid {
        return Err(Error::GridMismatch);
    }
    let grid = rows.grid;
    let d: Vec<T> = grid.points().into_iter().map(|r| dipole.value(r)).collect();
    let weighted: Vec<Vec<T>> = cols
        .levels
        .iter()
        .map(|l| l.wavefunction.iter().zip(&d).map(|(f, d)| *f * *d).collect())
        .collect();
    let dr = grid.spacing();
    let values = Array2::from_shape_fn((rows.levels.len(), cols.levels.len()), |(v, w)| {
        dr * rows.levels[v]
            .wavefunction
            .iter()
            .zip(&weighted[w])
            .fold(T::zero(), |acc, (a, b)| acc + *a * *b)
    });
    Ok(CouplingMap {
        rows: rows.key,
        cols: cols.key,
        values,
    })
}

/// Level energies and DMEs of a set of manifolds: everything chain design
/// needs, detached from the wavefunctions.
#[derive(Clone, Debug, Default)]
pub struct CouplingMaps<T> {
    energies: BTreeMap<ManifoldKey, Vec<T>>,
    maps: BTreeMap<(ManifoldKey, ManifoldKey), Array2<T>>,
}

impl<T: Real> CouplingMaps<T> {
    pub fn new() -> Self {
        Self {
            energies: BTreeMap::new(),
            maps: BTreeMap::new(),
        }
    }

    /// Registers a manifold by its level energies (index = v).
    pub fn insert_manifold(&mut self, key: ManifoldKey, energies: Vec<T>) {
        self.energies.insert(key, energies);
    }

    /// Registers the DME matrix between two manifolds already inserted.
    pub fn insert_map(&mut self, map: CouplingMap<T>) -> Result<()> {
        let rows = self.energies.get(&map.rows).map(Vec::len);
        let cols = self.energies.get(&map.cols).map(Vec::len);
        if rows != Some(map.values.nrows()) || cols != Some(map.values.ncols()) {
            return Err(Error::Invalid(format!(
                "coupling map {} x {} does not match the registered manifolds",
                map.rows, map.cols
            )));
        }
        if !map.rows.is_dipole_linked(&map.cols) {
            return Err(Error::Invalid(format!(
                "manifolds {} and {} are not E1 linked",
                map.rows, map.cols
            )));
        }
        let map = if map.rows <= map.cols {
            map
        } else {
            map.transposed()
        };
        self.maps.insert((map.rows, map.cols), map.values);
        Ok(())
    }

    /// Maps for every E1-linked pair among `manifolds`, keeping bound levels only.
    pub fn from_manifolds(manifolds: &[Manifold<T>], dipole: &DipoleFunction<T>) -> Result<Self> {
        let bound: Vec<Manifold<T>> = manifolds
            .iter()
            .map(|m| Manifold {
                key: m.key,
                grid: m.grid,
                levels: m.bound_levels().cloned().collect(),
            })
            .collect();
        let mut maps = Self::new();
        for m in &bound {
            maps.insert_manifold(m.key, m.levels.iter().map(|l| l.energy).collect());
        }
        for (i, a) in bound.iter().enumerate() {
            for b in &bound[i + 1..] {
                if a.key.is_dipole_linked(&b.key) {
                    maps.insert_map(coupling_map(a, b, dipole)?)?;
                }
            }
        }
        Ok(maps)
    }

    pub fn manifolds(&self) -> impl Iterator<Item = (&ManifoldKey, &[T])> {
        self.energies.iter().map(|(k, v)| (k, v.as_slice()))
    }

    pub fn energies(&self, key: &ManifoldKey) -> Option<&[T]> {
        self.energies.get(key).map(Vec::as_slice)
    }

    pub fn energy(&self, state: &StateId) -> Option<T> {
        self.energies.get(&state.manifold())?.get(state.v).copied()
    }

    /// Map between two manifolds oriented as requested.
    pub fn map(&self, rows: &ManifoldKey, cols: &ManifoldKey) -> Option<CouplingMap<T>> {
        if rows <= cols {
            self.maps.get(&(*rows, *cols)).map(|values| CouplingMap {
                rows: *rows,
                cols: *cols,
                values: values.clone(),
            })
        } else {
            self.map(cols, rows).map(|m| m.transposed())
        }
    }

    /// Signed DME between two states, if their manifolds are mapped.
    pub fn dme(&self, a: &StateId, b: &StateId) -> Option<T> {
        let (ka, kb) = (a.manifold(), b.manifold());
        if ka <= kb {
            self.maps.get(&(ka, kb))?.get((a.v, b.v)).copied()
        } else {
            self.maps.get(&(kb, ka))?.get((b.v, a.v)).copied()
        }
    }
}

/// Spontaneous emission rate `A = 4ω³d²/(3c³)` in atomic units.
pub fn einstein_a<T: Real>(omega: T, dme: T) -> T {
    let c = T::of(SPEED_OF_LIGHT);
    T::of(4.0) * omega * omega * omega * dme * dme / (T::of(3.0) * c * c * c)
}

/// How rotational branching enters a lifetime sum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum AngularWeighting {
    /// Every channel contributes its bare `A`.
    Unweighted,
    /// `A` scaled by the M-averaged branching fraction: `(J+1)/(2J+1)` towards
    /// `J+1` and `J/(2J+1)` towards `J−1`.
    #[default]
    HonlLondon,
}

impl AngularWeighting {
    fn weight<T: Real>(self, upper_j: u32, lower_j: u32) -> Result<T> {
        if upper_j.abs_diff(lower_j) != 1 {
            return Err(Error::Invalid(format!(
                "J = {upper_j} -> {lower_j} is not an E1 transition"
            )));
        }
        Ok(match self {
            Self::Unweighted => T::one(),
            Self::HonlLondon => {
                let j = upper_j as f64;
                let branch = if lower_j > upper_j { j + 1.0 } else { j };
                T::of(branch / (2.0 * j + 1.0))
            }
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Lifetime<T> {
    Finite(T),
    /// No decay channel was supplied.
    Infinite,
}

impl<T: Real> Lifetime<T> {
    pub fn value(&self) -> Option<T> {
        match self {
            Self::Finite(t) => Some(*t),
            Self::Infinite => None,
        }
    }
}

/// `τ = (Σ A)⁻¹` over decays of `upper` into each of `lower`, with `dmes[k]`
/// the DME towards `lower[k]`.
pub fn radiative_lifetime<T: Real>(
    upper: &VibrationalLevel<T>,
    lower: &[&VibrationalLevel<T>],
    dmes: &[T],
    weighting: AngularWeighting,
) -> Result<Lifetime<T>> {
    if lower.len() != dmes.len() {
        return Err(Error::Invalid("one DME per lower level is required".into()));
    }
    if lower.is_empty() {
        return Ok(Lifetime::Infinite);
    }
    let mut rate = T::zero();
    for (level, d) in lower.iter().zip(dmes) {
        let omega = upper.energy - level.energy;
        if !(omega > T::zero()) {
            return Err(Error::Invalid(format!(
                "{} does not lie below {}",
                level.id, upper.id
            )));
        }
        rate += weighting.weight::<T>(upper.id.j, level.id.j)? * einstein_a(omega, *d);
    }
    Ok(Lifetime::Finite(T::one() / rate))
}

/// Lifetime of `upper` against emission into every lower-lying level of the
/// other electronic state with `J' = J ± 1` found in `manifolds`.
pub fn level_lifetime<T: Real>(
    upper: &VibrationalLevel<T>,
    manifolds: &[Manifold<T>],
    dipole: &DipoleFunction<T>,
    weighting: AngularWeighting,
) -> Result<Lifetime<T>> {
    let key = upper.id.manifold();
    let lower: Vec<&VibrationalLevel<T>> = manifolds
        .iter()
        .filter(|m| m.key.is_dipole_linked(&key))
        .flat_map(|m| m.bound_levels())
        .filter(|l| l.energy < upper.energy)
        .collect();
    let dmes = lower
        .iter()
        .map(|l| dme(upper, l, dipole))
        .collect::<Result<Vec<T>>>()?;
    radiative_lifetime(upper, &lower, &dmes, weighting)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dvr::{kinetic_matrix, solve_manifold, RadialGrid};
    use crate::num::EigenRange;
    use crate::potentials::{ElectronicSystem, Morse, PotentialCurve};
    use crate::state::Surface;
    use crate::units::NANOSECOND;

    /// `∫ Y_J^0 cos θ Y_{J+1}^0 dΩ` by composite Simpson on x = cos θ.
    fn angular_quadrature(j: usize) -> f64 {
        fn legendre(n: usize, x: f64) -> f64 {
            let (mut p0, mut p1) = (1.0, x);
            if n == 0 {
                return p0;
            }
            for k in 1..n {
                let p2 = ((2 * k + 1) as f64 * x * p1 - k as f64 * p0) / (k + 1) as f64;
                p0 = p1;
                p1 = p2;
            }
            p1
        }
        let norm = |l: usize| ((2 * l + 1) as f64 / (4.0 * std::f64::consts::PI)).sqrt();
        let f = |x: f64| norm(j) * legendre(j, x) * x * norm(j + 1) * legendre(j + 1, x);
        let n = 20_000;
        let h = 2.0 / n as f64;
        let mut s = f(-1.0) + f(1.0);
        for i in 1..n {
            let x = -1.0 + i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
        }
        2.0 * std::f64::consts::PI * s * h / 3.0
    }

    #[test]
    fn angular_factors_match_quadrature() {
        assert!((angular_factor_a::<f64>(0) - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((angular_factor_a::<f64>(1) - (4.0f64 / 15.0).sqrt()).abs() < 1e-15);
        for j in 0..8 {
            let q = angular_quadrature(j as usize);
            assert!((angular_factor_a::<f64>(j) - q).abs() < 1e-11, "J = {j}: {q}");
        }
        assert!((angular_factor_a::<f64>(0) - 0.577_350_3).abs() < 1e-7);
        assert!((angular_factor_a::<f64>(1) - 0.516_397_8).abs() < 1e-7);
    }

    #[test]
    fn b_is_shifted_a() {
        assert_eq!(angular_factor_b::<f64>(0), 0.0);
        for j in 1..40 {
            assert!((angular_factor_b::<f64>(j) - angular_factor_a::<f64>(j - 1)).abs() < 1e-15);
        }
    }

    #[test]
    fn angular_factor_decreases_to_half() {
        let limit = 0.5f64;
        let mut last = 1.0;
        for j in 0..200u32 {
            let a = angular_factor_a::<f64>(j);
            assert!(a < last && a > limit);
            if j > 0 {
                let b = angular_factor_a::<f64>(j - 1);
                assert!(a * a + b * b < 1.0);
            }
            last = a;
        }
        assert!((angular_factor_a::<f64>(100_000) - limit).abs() < 1e-5);
    }

    #[test]
    fn link_factor_uses_smaller_j() {
        assert_eq!(link_angular_factor::<f64>(3, 2), Some(angular_factor_a(2)));
        assert_eq!(link_angular_factor::<f64>(2, 3), Some(angular_factor_a(2)));
        assert_eq!(link_angular_factor::<f64>(2, 4), None);
    }

    fn harmonic_levels(mu: f64, omega: f64, count: usize) -> Vec<VibrationalLevel<f64>> {
        let grid = RadialGrid::new(2.0, 8.0, 601).unwrap();
        let mut h = kinetic_matrix(&grid, mu).unwrap();
        for (i, r) in grid.points().iter().enumerate() {
            h[[i, i]] += 0.5 * mu * omega * omega * (r - 5.0) * (r - 5.0);
        }
        let pairs =
            f64::symmetric_eigen(h.as_slice_mut().unwrap(), 601, EigenRange::Lowest(count)).unwrap();
        let scale = 1.0 / grid.spacing().sqrt();
        (0..count)
            .map(|k| VibrationalLevel {
                id: StateId::new(Surface::Ground, k, 0),
                energy: pairs.values[k],
                bound: true,
                wavefunction: pairs.vector(k).iter().map(|c| c * scale).collect(),
                grid,
            })
            .collect()
    }

    #[test]
    fn harmonic_matrix_elements() {
        let (mu, omega) = (1000.0, 0.01);
        let levels = harmonic_levels(mu, omega, 3);
        let one = DipoleFunction::Constant(1.0);
        assert!((dme(&levels[0], &levels[0], &one).unwrap() - 1.0).abs() < 1e-12);
        assert!(dme(&levels[0], &levels[2], &one).unwrap().abs() < 1e-8);
        let r = DipoleFunction::Linear { intercept: 0.0, slope: 1.0 };
        let d01 = dme(&levels[0], &levels[1], &r).unwrap();
        assert!((d01.abs() - (1.0 / (2.0 * mu * omega)).sqrt()).abs() < 1e-9, "{d01}");
        assert_eq!(d01, dme(&levels[1], &levels[0], &r).unwrap());
    }

    fn toy() -> ElectronicSystem<f64> {
        ElectronicSystem::new(
            1500.0,
            PotentialCurve::morse("X", Morse::new(0.1, 0.9, 2.0, 0.0).unwrap()),
            PotentialCurve::morse("A", Morse::new(0.07, 0.7, 2.5, 0.1).unwrap()),
            DipoleFunction::Gaussian { offset: 0.5, amplitude: 0.5, center: 2.4, width: 1.0 },
        )
        .unwrap()
    }

    #[test]
    fn coupling_map_matches_simpson_reintegration() {
        let sys = toy();
        let grid = RadialGrid::new(0.8, 9.0, 601).unwrap();
        let x = solve_manifold(&sys, Surface::Ground, 0, &grid, Some(6)).unwrap();
        let a = solve_manifold(&sys, Surface::Excited, 1, &grid, Some(6)).unwrap();
        let map = coupling_map(&x, &a, &sys.dipole).unwrap();
        let h = grid.spacing();
        for v in 0..6 {
            for w in 0..6 {
                let f: Vec<f64> = (0..601)
                    .map(|i| {
                        x.levels[v].wavefunction[i]
                            * sys.dipole.value(grid.point(i))
                            * a.levels[w].wavefunction[i]
                    })
                    .collect();
                let simpson = h / 3.0
                    * (f[0]
                        + f[600]
                        + (1..600).map(|i| if i % 2 == 1 { 4.0 } else { 2.0 } * f[i]).sum::<f64>());
                assert!((map.values[[v, w]] - simpson).abs() < 1e-9);
            }
        }
        let (v, w, best) = map.strongest().unwrap();
        assert!(map.squared().iter().all(|&s| s <= best && s >= 0.0));
        assert_eq!(best, map.values[[v, w]].powi(2));
        assert!(coupling_map(&x, &x, &sys.dipole).is_err());
    }

    #[test]
    fn identical_curves_give_symmetric_maps() {
        let curve = PotentialCurve::morse("X", Morse::new(0.1f64, 0.9, 2.0, 0.0).unwrap());
        let sys = ElectronicSystem::new(
            1500.0,
            curve.clone(),
            PotentialCurve { label: "A".into(), ..curve },
            DipoleFunction::Linear { intercept: 1.0, slope: 0.1 },
        )
        .unwrap();
        let grid = RadialGrid::new(0.8, 9.0, 401).unwrap();
        let x1 = solve_manifold(&sys, Surface::Ground, 1, &grid, Some(5)).unwrap();
        let a0 = solve_manifold(&sys, Surface::Excited, 0, &grid, Some(5)).unwrap();
        let x0 = solve_manifold(&sys, Surface::Ground, 0, &grid, Some(5)).unwrap();
        let a1 = solve_manifold(&sys, Surface::Excited, 1, &grid, Some(5)).unwrap();
        let forward = coupling_map(&x0, &a1, &sys.dipole).unwrap();
        let backward = coupling_map(&a0, &x1, &sys.dipole).unwrap();
        for v in 0..5 {
            for w in 0..5 {
                assert!((forward.values[[v, w]] - backward.values[[v, w]]).abs() < 1e-12);
            }
        }
        // Squared maps ignore eigenvector signs.
        let mut flipped = x0.clone();
        flipped.levels[2].wavefunction.iter_mut().for_each(|f| *f = -*f);
        let other = coupling_map(&flipped, &a1, &sys.dipole).unwrap();
        assert_eq!(other.squared(), forward.squared());
    }

    #[test]
    fn maps_collection_orients_lookups() {
        let sys = toy();
        let grid = RadialGrid::new(0.8, 9.0, 301).unwrap();
        let keys = [
            ManifoldKey::new(Surface::Ground, 0),
            ManifoldKey::new(Surface::Excited, 1),
            ManifoldKey::new(Surface::Ground, 2),
        ];
        let manifolds = crate::dvr::solve_manifolds(&sys, &keys, &grid, None).unwrap();
        let maps = CouplingMaps::from_manifolds(&manifolds, &sys.dipole).unwrap();
        let a = StateId::new(Surface::Excited, 3, 1);
        let x = StateId::new(Surface::Ground, 1, 2);
        let direct = dme(&manifolds[1].levels[3], &manifolds[2].levels[1], &sys.dipole).unwrap();
        assert!((maps.dme(&a, &x).unwrap() - direct).abs() < 1e-14);
        assert_eq!(maps.dme(&x, &a), maps.dme(&a, &x));
        assert_eq!(maps.dme(&x, &StateId::new(Surface::Ground, 0, 0)), None);
        let m = maps.map(&keys[2], &keys[1]).unwrap();
        assert_eq!(Some(m.values[[1, 3]]), maps.dme(&a, &x));
        assert_eq!(maps.energy(&a), Some(manifolds[1].levels[3].energy));
    }

    #[test]
    fn einstein_coefficient_scaling_and_hydrogen() {
        assert_eq!(einstein_a(0.3f64, 0.0), 0.0);
        let a1 = einstein_a(0.3f64, 0.5);
        assert!((einstein_a(0.3f64, 1.0) / a1 - 4.0).abs() < 1e-14);
        // Hydrogen 2p -> 1s: |<1s|z|2p0>| = 0.7449 a.u., ω = 3/8 hartree, τ ≈ 1.6 ns.
        let tau_ns = 1.0 / einstein_a(0.375, 0.7449) / NANOSECOND;
        assert!((tau_ns - 1.595).abs() < 0.005, "{tau_ns}");
    }

    fn level(surface: Surface, v: usize, j: u32, energy: f64) -> VibrationalLevel<f64> {
        VibrationalLevel {
            id: StateId::new(surface, v, j),
            energy,
            bound: true,
            wavefunction: vec![0.0; 8],
            grid: RadialGrid::new(1.0, 2.0, 8).unwrap(),
        }
    }

    #[test]
    fn lifetime_sums() {
        let up = level(Surface::Excited, 3, 1, 0.2);
        let lo1 = level(Surface::Ground, 0, 0, 0.0);
        let lo2 = level(Surface::Ground, 1, 2, 0.0);
        let none = AngularWeighting::Unweighted;
        assert_eq!(radiative_lifetime(&up, &[], &[], none).unwrap(), Lifetime::Infinite);
        let a = einstein_a(0.2, 0.8);
        let single = radiative_lifetime(&up, &[&lo1], &[0.8], none).unwrap();
        assert!((single.value().unwrap() * a - 1.0).abs() < 1e-14);
        let double = radiative_lifetime(&up, &[&lo1, &lo2], &[0.8, 0.8], none).unwrap();
        assert!((double.value().unwrap() * 2.0 * a - 1.0).abs() < 1e-14);
        // Hönl–London branching for J = 1 sums to one.
        let hl = radiative_lifetime(&up, &[&lo1, &lo2], &[0.8, 0.8], AngularWeighting::HonlLondon)
            .unwrap();
        assert!((hl.value().unwrap() * a - 1.0).abs() < 1e-14);

        let above = level(Surface::Ground, 5, 0, 0.3);
        assert!(radiative_lifetime(&up, &[&above], &[0.1], none).is_err());
        let same_j = level(Surface::Ground, 0, 1, 0.0);
        assert!(radiative_lifetime(&up, &[&same_j], &[0.1], none).is_err());
    }

    #[test]
    fn level_lifetime_matches_resummation() {
        let sys = toy();
        let grid = RadialGrid::new(0.8, 9.0, 401).unwrap();
        let keys = [
            ManifoldKey::new(Surface::Ground, 0),
            ManifoldKey::new(Surface::Excited, 1),
            ManifoldKey::new(Surface::Ground, 2),
        ];
        let ms = crate::dvr::solve_manifolds(&sys, &keys, &grid, None).unwrap();
        let upper = &ms[1].levels[4];
        let tau = level_lifetime(upper, &ms, &sys.dipole, AngularWeighting::HonlLondon)
            .unwrap()
            .value()
            .unwrap();
        let mut rate = 0.0;
        for m in [&ms[0], &ms[2]] {
            let w = if m.key.j == 2 { 2.0 / 3.0 } else { 1.0 / 3.0 };
            for l in m.levels.iter().filter(|l| l.bound && l.energy < upper.energy) {
                let mut d = 0.0;
                for i in 0..grid.len() {
                    d += upper.wavefunction[i] * sys.dipole.value(grid.point(i)) * l.wavefunction[i];
                }
                d *= grid.spacing();
                let om = upper.energy - l.energy;
                rate += w * 4.0 * om.powi(3) * d * d / (3.0 * SPEED_OF_LIGHT.powi(3));
            }
        }
        assert!((tau * rate - 1.0).abs() < 1e-12);
    }
}
