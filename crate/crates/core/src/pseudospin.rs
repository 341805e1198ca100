//! SU(N) pseudospin tier: spin matrices and closed-form chain populations.
//!
//! A chain of N states whose link Rabi frequencies follow `√(k(N−k))·Ω₀(t)`
//! behaves as a spin `s = (N−1)/2` rotating about x. State `i` (0-based) is
//! the basis vector `m = i − s`, and the coupling matrix is `Ω₀(t)·2Sx`.

use ndarray::Array2;
use num_complex::Complex;

use crate::chain::{ChainSpec, PulseTrain};
use crate::error::{Error, Result};
use crate::num::Real;
use crate::trace::PopulationTrace;

/// Cartesian spin matrices in the `m = −s..=s` basis.
#[derive(Clone, Debug)]
pub struct SpinRep<T> {
    /// `2s`, so that the dimension is `two_s + 1`.
    pub two_s: usize,
    pub sx: Array2<T>,
    pub sy: Array2<Complex<T>>,
    pub sz: Array2<T>,
}

impl<T: Real> SpinRep<T> {
    pub fn dimension(&self) -> usize {
        self.two_s + 1
    }

    /// `m` of basis index `i`, doubled to stay integral.
    pub fn two_m(&self, i: usize) -> i64 {
        2 * i as i64 - self.two_s as i64
    }
}

/// `⟨m'|Sx|m⟩ = ½·√(s(s+1) − m'm)` for `|m' − m| = 1`, and the matching
/// `Sy`, `Sz`.
pub fn spin_matrices<T: Real>(two_s: usize) -> SpinRep<T> {
    let dim = two_s + 1;
    let s = two_s as f64 / 2.0;
    let m = |i: usize| i as f64 - s;
    let mut sx = Array2::zeros((dim, dim));
    let mut sy = Array2::from_elem((dim, dim), Complex::new(T::zero(), T::zero()));
    let mut sz = Array2::zeros((dim, dim));
    for i in 0..dim {
        sz[[i, i]] = T::of(m(i));
        if i + 1 < dim {
            let half = T::of(0.5 * (s * (s + 1.0) - m(i) * m(i + 1)).sqrt());
            sx[[i, i + 1]] = half;
            sx[[i + 1, i]] = half;
            // S+ raises m: ⟨m+1|Sy|m⟩ = −i/2·√(...).
            sy[[i + 1, i]] = Complex::new(T::zero(), -half);
            sy[[i, i + 1]] = Complex::new(T::zero(), half);
        }
    }
    SpinRep { two_s, sx, sy, sz }
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `|c_m|² = C(2s, s−m)·cos^{2(s−m)}(A)·sin^{2(s+m)}(A)` after area `A`,
/// starting from `m = −s`. Zero for `m` outside the multiplet.
pub fn populations_analytic<T: Real>(two_s: usize, area: T, two_m: i64) -> T {
    let two_s_i = two_s as i64;
    if two_m.abs() > two_s_i || (two_m + two_s_i) % 2 != 0 {
        return T::zero();
    }
    // s − m and s + m as integers.
    let down = ((two_s_i - two_m) / 2) as i32;
    let up = ((two_s_i + two_m) / 2) as i32;
    let (sin, cos) = area.sin_cos();
    T::of(binomial(two_s, up as usize)) * (cos * cos).powi(down) * (sin * sin).powi(up)
}

/// Populations of all `N` chain states after area `A`, in chain order.
pub fn chain_populations<T: Real>(n_states: usize, area: T) -> Vec<T> {
    let two_s = n_states - 1;
    (0..n_states)
        .map(|i| populations_analytic(two_s, area, 2 * i as i64 - two_s as i64))
        .collect()
}

/// Closed-form trace for a common-profile train, with the area accumulated by
/// quadrature of `Ω₀` from `times[0]`.
pub fn trace_analytic<T: Real>(
    chain: &ChainSpec<T>,
    train: &PulseTrain<T>,
    times: &[T],
) -> Result<PopulationTrace<T>> {
    train.check_against(chain)?;
    let profile = train.common_profile(chain).ok_or_else(|| {
        Error::Invalid("the analytic tier needs a train with a common Rabi profile".into())
    })?;
    if times.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(Error::Invalid("sample times must be non-decreasing".into()));
    }
    let mut trace = PopulationTrace::new(chain.ids());
    let mut area = T::zero();
    for (i, &t) in times.iter().enumerate() {
        if i > 0 {
            area += profile.area(times[i - 1], t);
        }
        trace.push(t, chain_populations(chain.len(), area), T::zero(), T::zero());
    }
    Ok(trace)
}
