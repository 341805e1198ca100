//! Potential energy curves, transition dipole functions and the two-state
//! electronic system they form.
//!
//! Everything is in Hartree atomic units: bohr for R, hartree for energies,
//! electron masses for the reduced mass, e·a₀ for dipoles.

mod spline;
mod table;

use std::path::Path;

pub use spline::CubicSpline;
pub use table::{parse_table, read_table, RawTable, TableKind, MIN_TABLE_POINTS};

use crate::error::{Error, Result};
use crate::num::Real;
use crate::state::Surface;

/// Morse oscillator `offset + depth·(1 − exp(−range·(R − r_e)))²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Morse<T> {
    pub depth: T,
    pub range: T,
    pub r_e: T,
    pub offset: T,
}

impl<T: Real> Morse<T> {
    pub fn new(depth: T, range: T, r_e: T, offset: T) -> Result<Self> {
        if !(depth > T::zero() && range > T::zero() && r_e > T::zero()) || !offset.is_finite() {
            return Err(Error::Invalid(format!(
                "Morse parameters need D_e, a, R_e > 0 (got {depth}, {range}, {r_e})"
            )));
        }
        Ok(Self {
            depth,
            range,
            r_e,
            offset,
        })
    }

    pub fn value(&self, r: T) -> T {
        let x = T::one() - (-self.range * (r - self.r_e)).exp();
        self.offset + self.depth * x * x
    }

    /// Harmonic frequency `a·sqrt(2 D_e / μ)`.
    pub fn omega_e(&self, mu: T) -> T {
        self.range * (T::of(2.0) * self.depth / mu).sqrt()
    }
}

/// Closed-form Morse term values measured from the well minimum.
#[derive(Clone, Debug, PartialEq)]
pub struct MorseSpectrum<T> {
    pub energies: Vec<T>,
    /// Set when fewer than the requested number of bound levels exist.
    pub truncated: bool,
}

/// `E_n = ω_e(n+½) − ω_e²(n+½)²/(4 D_e)` for the first `count` bound levels.
pub fn morse_levels<T: Real>(morse: &Morse<T>, mu: T, count: usize) -> Result<MorseSpectrum<T>> {
    if !(mu > T::zero()) {
        return Err(Error::Invalid("reduced mass must be positive".into()));
    }
    let omega = morse.omega_e(mu);
    let half = T::of(0.5);
    let four = T::of(4.0);
    let mut energies = Vec::with_capacity(count);
    for n in 0..count {
        let x = T::of(n as f64) + half;
        // The quadratic peaks at D_e for x = 2 D_e / ω_e; past that point the
        // formula no longer describes bound levels.
        if x >= T::of(2.0) * morse.depth / omega {
            return Ok(MorseSpectrum {
                energies,
                truncated: true,
            });
        }
        energies.push(omega * x - omega * omega * x * x / (four * morse.depth));
    }
    Ok(MorseSpectrum {
        energies,
        truncated: false,
    })
}

/// How a tabulated curve is continued beyond its knots.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Extrapolation {
    /// Flat beyond the last knot, an `R⁻¹²` wall below the first.
    #[default]
    Extend,
    /// Evaluation outside the knots is a domain error.
    Forbid,
}

#[derive(Clone, Debug)]
pub struct TabulatedCurve<T> {
    spline: CubicSpline<T>,
    extrapolation: Extrapolation,
    wall: T,
}

impl<T: Real> TabulatedCurve<T> {
    pub fn new(r: Vec<T>, values: Vec<T>, extrapolation: Extrapolation) -> Result<Self> {
        if r.len() < MIN_TABLE_POINTS {
            return Err(Error::Invalid(format!(
                "tabulated curves need at least {MIN_TABLE_POINTS} points"
            )));
        }
        if !(r[0] > T::zero()) {
            return Err(Error::Invalid("tabulated R must be positive".into()));
        }
        let spline = CubicSpline::natural(r, values)?;
        let (r0, _) = spline.domain();
        let slope = spline.derivative(r0);
        // Match the slope at the first knot when it is repulsive; otherwise use a
        // fixed-strength wall so the extension can never open a spurious well.
        let wall = (-slope * r0 / T::of(12.0)).max(T::of(1e-3));
        Ok(Self {
            spline,
            extrapolation,
            wall,
        })
    }

    pub fn spline(&self) -> &CubicSpline<T> {
        &self.spline
    }

    pub fn value(&self, r: T) -> Result<T> {
        let (lo, hi) = self.spline.domain();
        if r >= lo && r <= hi {
            return Ok(self.spline.eval(r));
        }
        match self.extrapolation {
            Extrapolation::Forbid => Err(Error::Domain {
                r: r.to_f64_lossy(),
                min: lo.to_f64_lossy(),
                max: hi.to_f64_lossy(),
            }),
            Extrapolation::Extend if r > hi => Ok(*self.spline.values().last().unwrap()),
            Extrapolation::Extend => {
                let first = self.spline.values()[0];
                Ok(first + self.wall * ((lo / r).powi(12) - T::one()))
            }
        }
    }
}

#[derive(Clone, Debug)]
pub enum CurveForm<T> {
    Morse(Morse<T>),
    Tabulated(TabulatedCurve<T>),
    Constant(T),
}

/// A labeled potential energy curve `U(R)`.
#[derive(Clone, Debug)]
pub struct PotentialCurve<T> {
    pub label: String,
    pub form: CurveForm<T>,
}

impl<T: Real> PotentialCurve<T> {
    pub fn morse(label: impl Into<String>, morse: Morse<T>) -> Self {
        Self {
            label: label.into(),
            form: CurveForm::Morse(morse),
        }
    }

    pub fn constant(label: impl Into<String>, value: T) -> Self {
        Self {
            label: label.into(),
            form: CurveForm::Constant(value),
        }
    }

    pub fn tabulated(label: impl Into<String>, table: TabulatedCurve<T>) -> Self {
        Self {
            label: label.into(),
            form: CurveForm::Tabulated(table),
        }
    }

    pub fn value(&self, r: T) -> Result<T> {
        match &self.form {
            CurveForm::Morse(m) => Ok(m.value(r)),
            CurveForm::Tabulated(t) => t.value(r),
            CurveForm::Constant(c) => Ok(*c),
        }
    }

    /// Dissociation limit; levels above it are flagged unbound.
    pub fn asymptote(&self) -> T {
        match &self.form {
            CurveForm::Morse(m) => m.offset + m.depth,
            CurveForm::Tabulated(t) => *t.spline.values().last().unwrap(),
            CurveForm::Constant(c) => *c,
        }
    }
}

/// `J(J+1)/(2μR²) + U(R)`.
pub fn effective_potential<T: Real>(curve: &PotentialCurve<T>, mu: T, j: u32, r: T) -> Result<T> {
    if !(r > T::zero()) {
        return Err(Error::Invalid(format!("R must be positive, got {r}")));
    }
    let jj = T::of(j as f64 * (j as f64 + 1.0));
    Ok(jj / (T::of(2.0) * mu * r * r) + curve.value(r)?)
}

/// Transition dipole function `d(R)` between the two electronic states.
#[derive(Clone, Debug)]
pub enum DipoleFunction<T> {
    Constant(T),
    Linear { intercept: T, slope: T },
    /// `offset + amplitude·exp(−((R − center)/width)²)`.
    Gaussian {
        offset: T,
        amplitude: T,
        center: T,
        width: T,
    },
    /// Spline through tabulated values, held constant outside the knots.
    Tabulated(CubicSpline<T>),
}

impl<T: Real> DipoleFunction<T> {
    pub fn value(&self, r: T) -> T {
        match self {
            Self::Constant(d) => *d,
            Self::Linear { intercept, slope } => *intercept + *slope * r,
            Self::Gaussian {
                offset,
                amplitude,
                center,
                width,
            } => {
                let x = (r - *center) / *width;
                *offset + *amplitude * (-x * x).exp()
            }
            Self::Tabulated(s) => {
                let (lo, hi) = s.domain();
                s.eval(r.max(lo).min(hi))
            }
        }
    }
}

/// Reduced mass, both potential curves and the transition dipole.
#[derive(Clone, Debug)]
pub struct ElectronicSystem<T> {
    /// Reduced mass in electron masses.
    pub mu: T,
    pub ground: PotentialCurve<T>,
    pub excited: PotentialCurve<T>,
    pub dipole: DipoleFunction<T>,
}

impl<T: Real> ElectronicSystem<T> {
    pub fn new(
        mu: T,
        ground: PotentialCurve<T>,
        excited: PotentialCurve<T>,
        dipole: DipoleFunction<T>,
    ) -> Result<Self> {
        if !(mu > T::zero()) || !mu.is_finite() {
            return Err(Error::Invalid(format!("reduced mass must be positive, got {mu}")));
        }
        Ok(Self {
            mu,
            ground,
            excited,
            dipole,
        })
    }

    pub fn curve(&self, surface: Surface) -> &PotentialCurve<T> {
        match surface {
            Surface::Ground => &self.ground,
            Surface::Excited => &self.excited,
        }
    }

    /// Effective potential of manifold `(surface, j)` sampled at `points`.
    pub fn sample_effective(&self, surface: Surface, j: u32, points: &[T]) -> Result<Vec<T>> {
        let curve = self.curve(surface);
        points
            .iter()
            .map(|&r| effective_potential(curve, self.mu, j, r))
            .collect()
    }
}

/// Reads a potential curve table (see [`parse_table`] for the format).
pub fn load_curve_table<T: Real>(
    path: &Path,
    label: impl Into<String>,
    extrapolation: Extrapolation,
) -> Result<PotentialCurve<T>> {
    let raw = read_table(path, TableKind::Potential)?;
    let table = TabulatedCurve::new(
        raw.r.into_iter().map(T::of).collect(),
        raw.values.into_iter().map(T::of).collect(),
        extrapolation,
    )?;
    Ok(PotentialCurve::tabulated(label, table))
}

pub fn load_dipole_table<T: Real>(path: &Path) -> Result<DipoleFunction<T>> {
    let raw = read_table(path, TableKind::Dipole)?;
    Ok(DipoleFunction::Tabulated(CubicSpline::natural(
        raw.r.into_iter().map(T::of).collect(),
        raw.values.into_iter().map(T::of).collect(),
    )?))
}
