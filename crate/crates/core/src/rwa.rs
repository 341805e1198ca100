//! Coupled-coefficient dynamics of the chain in the rotating-wave approximation.

use num_complex::Complex;

use crate::chain::{ChainSpec, PulseTrain};
use crate::error::{Error, Result};
use crate::num::Real;
use crate::trace::PopulationTrace;

/// Largest `dt·Ω_max` accepted for the requested step.
pub const MAX_RABI_STEP: f64 = 0.05;
/// Internal RK4 steps are refined until `h·(Ω_max + Δ_max)` is at most this.
const INTERNAL_PHASE_STEP: f64 = 0.01;
pub const NORM_TOLERANCE: f64 = 1e-8;

/// Hermitian tridiagonal matrix with zero diagonal; `upper[i]` couples
/// states `i` and `i + 1` as `W[i][i+1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tridiagonal<T> {
    pub upper: Vec<Complex<T>>,
}

impl<T: Real> Tridiagonal<T> {
    pub fn dimension(&self) -> usize {
        self.upper.len() + 1
    }

    /// `out = −i·W·c`.
    fn apply(&self, c: &[Complex<T>], out: &mut [Complex<T>]) {
        let n = c.len();
        for i in 0..n {
            let mut acc = Complex::new(T::zero(), T::zero());
            if i + 1 < n {
                acc += self.upper[i] * c[i + 1];
            }
            if i > 0 {
                acc += self.upper[i - 1].conj() * c[i - 1];
            }
            out[i] = Complex::new(acc.im, -acc.re);
        }
    }
}

/// RWA coupling matrix of the resonant chain at time `t`: off-diagonal
/// entries are the link Rabi frequencies `Ω^k(t)`.
pub fn rwa_hamiltonian<T: Real>(chain: &ChainSpec<T>, train: &PulseTrain<T>, t: T) -> Tridiagonal<T> {
    Tridiagonal {
        upper: (0..chain.links())
            .map(|k| Complex::new(train.rabi(chain, k, t), T::zero()))
            .collect(),
    }
}

/// Every pulse acting on every link with its detuning phase,
/// `W[i][i+1] = Σ_k ε^k(t)·a_i|d_i|/2 · exp(i·sgn(ω_i)(ω^k − |ω_i|)t)`.
pub fn crosstalk_hamiltonian<T: Real>(
    chain: &ChainSpec<T>,
    train: &PulseTrain<T>,
    t: T,
) -> Tridiagonal<T> {
    let half = T::of(0.5);
    Tridiagonal {
        upper: (0..chain.links())
            .map(|i| {
                let bohr = chain.bohr_frequency(i);
                let sign = bohr.signum();
                let coupling = chain.coupling(i) * half;
                train.pulses.iter().fold(Complex::new(T::zero(), T::zero()), |acc, p| {
                    let phase = sign * (p.omega - bohr.abs()) * t;
                    acc + Complex::from_polar(p.envelope(t) * coupling, phase)
                })
            })
            .collect(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RwaConfig<T> {
    /// Step between recorded samples.
    pub dt: T,
    /// Keep every `sample_every`-th step (the last step is always kept).
    pub sample_every: usize,
    /// Include off-resonant driving of every link by every pulse.
    pub crosstalk: bool,
}

impl<T: Real> RwaConfig<T> {
    pub fn new(dt: T) -> Self {
        Self {
            dt,
            sample_every: 1,
            crosstalk: false,
        }
    }
}

struct Integrator<'a, T> {
    chain: &'a ChainSpec<T>,
    train: &'a PulseTrain<T>,
    crosstalk: bool,
    k: [Vec<Complex<T>>; 4],
    scratch: Vec<Complex<T>>,
}

impl<'a, T: Real> Integrator<'a, T> {
    fn new(chain: &'a ChainSpec<T>, train: &'a PulseTrain<T>, crosstalk: bool) -> Self {
        let zero = vec![Complex::new(T::zero(), T::zero()); chain.len()];
        Self {
            chain,
            train,
            crosstalk,
            k: [zero.clone(), zero.clone(), zero.clone(), zero.clone()],
            scratch: zero,
        }
    }

    fn matrix(&self, t: T) -> Tridiagonal<T> {
        if self.crosstalk {
            crosstalk_hamiltonian(self.chain, self.train, t)
        } else {
            rwa_hamiltonian(self.chain, self.train, t)
        }
    }

    /// One classical RK4 step of `ċ = −iW(t)c` from `t` to `t + h`.
    fn rk4(&mut self, c: &mut [Complex<T>], t: T, h: T) {
        let half = h * T::of(0.5);
        let w0 = self.matrix(t);
        let wm = self.matrix(t + half);
        let w1 = self.matrix(t + h);
        let [k1, k2, k3, k4] = &mut self.k;
        let s = &mut self.scratch;
        w0.apply(c, k1);
        for i in 0..c.len() {
            s[i] = c[i] + k1[i] * half;
        }
        wm.apply(s, k2);
        for i in 0..c.len() {
            s[i] = c[i] + k2[i] * half;
        }
        wm.apply(s, k3);
        for i in 0..c.len() {
            s[i] = c[i] + k3[i] * h;
        }
        w1.apply(s, k4);
        let sixth = h / T::of(6.0);
        for i in 0..c.len() {
            c[i] += (k1[i] + (k2[i] + k3[i]) * T::of(2.0) + k4[i]) * sixth;
        }
    }
}

fn max_detuning<T: Real>(chain: &ChainSpec<T>, train: &PulseTrain<T>) -> T {
    let mut worst = T::zero();
    for k in 0..chain.links() {
        let bohr = chain.bohr_frequency(k).abs();
        for p in &train.pulses {
            worst = worst.max((p.omega - bohr).abs());
        }
    }
    worst
}

fn norm<T: Real>(c: &[Complex<T>]) -> T {
    c.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr())
}

/// Integrates `c` from `from` to `to` (either direction) with `steps` outer
/// steps, calling `sample` after each with the time and coefficients.
fn run<T: Real>(
    chain: &ChainSpec<T>,
    train: &PulseTrain<T>,
    coeffs: &mut [Complex<T>],
    (from, to): (T, T),
    dt: T,
    crosstalk: bool,
    mut sample: impl FnMut(usize, T, &[Complex<T>]),
) -> Result<()> {
    if coeffs.len() != chain.len() {
        return Err(Error::Invalid("one coefficient per chain state is required".into()));
    }
    train.check_against(chain)?;
    if !(dt > T::zero()) {
        return Err(Error::Invalid("time step must be positive".into()));
    }
    let omega_max = train.max_rabi(chain);
    if !(dt * omega_max < T::of(MAX_RABI_STEP)) {
        return Err(Error::Resolution(format!(
            "dt·Ω_max = {:e} must stay below {MAX_RABI_STEP}",
            dt * omega_max
        )));
    }
    let length = (to - from).abs();
    let steps = (length / dt).ceil().to_f64_lossy().max(1.0) as usize;
    let h = (to - from) / T::of(steps as f64);
    let rate = omega_max * T::of(crosstalk_factor(chain.links(), crosstalk))
        + if crosstalk { max_detuning(chain, train) } else { T::zero() };
    let substeps = (h.abs() * rate / T::of(INTERNAL_PHASE_STEP))
        .ceil()
        .to_f64_lossy()
        .max(1.0) as usize;
    let sub = h / T::of(substeps as f64);
    let initial_norm = norm(coeffs);
    let mut integrator = Integrator::new(chain, train, crosstalk);
    for step in 0..steps {
        let start = from + h * T::of(step as f64);
        for s in 0..substeps {
            integrator.rk4(coeffs, start + sub * T::of(s as f64), sub);
        }
        let t = if step + 1 == steps { to } else { start + h };
        let n = norm(coeffs);
        if !n.is_finite() {
            return Err(Error::NonFinite { time: t.to_f64_lossy() });
        }
        if (n - initial_norm).abs() > T::of(NORM_TOLERANCE) {
            return Err(Error::NormDrift {
                time: t.to_f64_lossy(),
                norm: n.to_f64_lossy(),
            });
        }
        sample(step + 1, t, coeffs);
    }
    Ok(())
}

/// With cross-talk every pulse may act on a link, so the coupling bound grows
/// with the number of pulses.
fn crosstalk_factor(links: usize, crosstalk: bool) -> f64 {
    if crosstalk {
        links as f64
    } else {
        1.0
    }
}

/// Populations of the chain states from `span.0` to `span.1`, starting in the
/// first chain state.
pub fn integrate_rwa<T: Real>(
    chain: &ChainSpec<T>,
    train: &PulseTrain<T>,
    span: (T, T),
    config: &RwaConfig<T>,
) -> Result<PopulationTrace<T>> {
    if !(span.1 > span.0) {
        return Err(Error::Invalid("time span must be increasing".into()));
    }
    let mut coeffs = vec![Complex::new(T::zero(), T::zero()); chain.len()];
    coeffs[0] = Complex::new(T::one(), T::zero());
    let mut trace = PopulationTrace::new(chain.ids());
    let row = |c: &[Complex<T>]| c.iter().map(|z| z.norm_sqr()).collect::<Vec<T>>();
    trace.push(span.0, row(&coeffs), T::zero(), T::zero());
    let every = config.sample_every.max(1);
    let total = ((span.1 - span.0) / config.dt).ceil().to_f64_lossy().max(1.0) as usize;
    run(chain, train, &mut coeffs, span, config.dt, config.crosstalk, |step, t, c| {
        if step % every == 0 || step == total {
            let p = row(c);
            let leak = (T::one() - p.iter().fold(T::zero(), |a, b| a + *b)).max(T::zero());
            trace.push(t, p, leak, T::zero());
        }
    })?;
    Ok(trace)
}

/// Propagates arbitrary coefficients from `from` to `to`; `to < from` runs
/// backwards in time.
pub fn evolve<T: Real>(
    chain: &ChainSpec<T>,
    train: &PulseTrain<T>,
    coeffs: &mut [Complex<T>],
    from: T,
    to: T,
    config: &RwaConfig<T>,
) -> Result<()> {
    run(chain, train, coeffs, (from, to), config.dt, config.crosstalk, |_, _, _| {})
}
