//! Bundled two-curve Morse system for runs without external data.
//!
//! A light "toy KRb": the ground curve is deeper and sits at shorter range
//! than the excited one, so vertically resonant transitions between low
//! ground levels and mid-well excited levels carry strong dipoles. With a
//! reduced mass of 500 mₑ each well holds about a dozen levels, which keeps
//! the full grid propagation at desk scale.
//!
//! | quantity | ground (X) | excited (A) |
//! |---|---|---|
//! | depth `D` | 0.08 | 0.06 |
//! | range `a` | 0.75 | 0.65 |
//! | `R_e` | 2.0 | 2.4 |
//! | offset | 0 | 0.10 |
//!
//! Dipole: `0.6 + 0.6·exp(−((R − 2.6)/1.0)²)`. Everything in atomic units.

use crate::chain::TrainDesign;
use crate::dvr::RadialGrid;
use crate::num::Real;
use crate::potentials::{DipoleFunction, ElectronicSystem, Morse, PotentialCurve};
use crate::state::{StateId, Surface};

pub const TOY_REDUCED_MASS: f64 = 500.0;
pub const TOY_GROUND: [f64; 4] = [0.08, 0.75, 2.0, 0.0];
pub const TOY_EXCITED: [f64; 4] = [0.06, 0.65, 2.4, 0.10];
pub const TOY_DIPOLE: [f64; 4] = [0.6, 0.6, 2.6, 1.0];

/// The grid starts deep in both repulsive walls: the periodic kinetic step
/// must not see amplitude that the level solve truncates at the first point.
pub const TOY_GRID: (f64, f64, usize) = (0.5, 9.0, 420);

/// Pulse width of the reference run (about 0.87 ps).
pub const TOY_SIGMA: f64 = 3.6e4;

pub fn toy_system<T: Real>() -> ElectronicSystem<T> {
    let morse = |p: [f64; 4]| {
        Morse::new(T::of(p[0]), T::of(p[1]), T::of(p[2]), T::of(p[3]))
            .expect("bundled parameters are valid")
    };
    let [offset, amplitude, center, width] = TOY_DIPOLE.map(T::of);
    ElectronicSystem::new(
        T::of(TOY_REDUCED_MASS),
        PotentialCurve::morse("X", morse(TOY_GROUND)),
        PotentialCurve::morse("A", morse(TOY_EXCITED)),
        DipoleFunction::Gaussian {
            offset,
            amplitude,
            center,
            width,
        },
    )
    .expect("bundled reduced mass is positive")
}

pub fn toy_grid<T: Real>() -> RadialGrid<T> {
    RadialGrid::new(T::of(TOY_GRID.0), T::of(TOY_GRID.1), TOY_GRID.2).expect("bundled grid is valid")
}

/// Endpoints of the reference five-state ping-pong, `X(6, J=4) → X(0, J=0)`.
pub fn toy_endpoints() -> (StateId, StateId) {
    (
        StateId::new(Surface::Ground, 6, 4),
        StateId::new(Surface::Ground, 0, 0),
    )
}

pub fn toy_train_design<T: Real>() -> TrainDesign<T> {
    TrainDesign::complete_transfer(T::of(TOY_SIGMA))
}
