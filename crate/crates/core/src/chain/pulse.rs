use serde::{Deserialize, Serialize};

use super::ChainSpec;
use crate::error::{Error, Result};
use crate::num::Real;
use crate::units::field_from_intensity;

/// Γ(5/4); `∫ exp(−x⁴/σ⁴) dx` over the real line equals `2Γ(5/4)σ`.
pub const GAMMA_FIVE_QUARTERS: f64 = 0.906_402_477_055_477;

/// One Gaussian-4 pulse `eps0·exp(−(t−t0)⁴/σ⁴)·cos(ωt)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec<T> {
    pub eps0: T,
    pub omega: T,
    pub t0: T,
    pub sigma: T,
}

impl<T: Real> PulseSpec<T> {
    pub fn new(eps0: T, omega: T, t0: T, sigma: T) -> Result<Self> {
        if !(eps0 >= T::zero()) || !(omega > T::zero()) || !(sigma > T::zero()) || !t0.is_finite()
        {
            return Err(Error::Invalid(format!(
                "pulse needs eps0 >= 0, omega > 0, sigma > 0 (got {eps0:e}, {omega:e}, {sigma:e})"
            )));
        }
        Ok(Self {
            eps0,
            omega,
            t0,
            sigma,
        })
    }

    pub fn envelope(&self, t: T) -> T {
        let x = (t - self.t0) / self.sigma;
        let x2 = x * x;
        self.eps0 * (-(x2 * x2)).exp()
    }

    pub fn field(&self, t: T) -> T {
        self.envelope(t) * (self.omega * t).cos()
    }
}

/// `∫ exp(−((t−t0)/σ)⁴) dt` from `a` to `b`, by composite Gauss–Legendre.
pub fn envelope_area<T: Real>(t0: T, sigma: T, a: T, b: T) -> T {
    const NODES: [f64; 4] = [
        0.183_434_642_495_649_8,
        0.525_532_409_916_329,
        0.796_666_477_413_626_7,
        0.960_289_856_497_536_3,
    ];
    const WEIGHTS: [f64; 4] = [
        0.362_683_783_378_362,
        0.313_706_645_877_887_3,
        0.222_381_034_453_374_5,
        0.101_228_536_290_376_3,
    ];
    if b == a {
        return T::zero();
    }
    let f = |t: T| {
        let x = (t - t0) / sigma;
        (-(x * x * x * x)).exp()
    };
    // Panels of at most σ/8 keep the 8-point rule at double precision.
    let panels = ((b - a).abs() / sigma * T::of(8.0)).ceil().to_f64_lossy().max(1.0) as usize;
    let h = (b - a) / T::of(panels as f64);
    let mut total = T::zero();
    for p in 0..panels {
        let mid = a + h * (T::of(p as f64) + T::of(0.5));
        let half = h * T::of(0.5);
        for (x, w) in NODES.iter().zip(WEIGHTS.iter()) {
            let x = T::of(*x) * half;
            total += T::of(*w) * (f(mid - x) + f(mid + x));
        }
    }
    total * h * T::of(0.5)
}

/// Superposition of one pulse per chain link; `pulses[k]` drives link `k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseTrain<T> {
    pub pulses: Vec<PulseSpec<T>>,
}

impl<T: Real> PulseTrain<T> {
    /// `E(t) = Σ_k ε^k(t) cos(ω^k t)`.
    pub fn total_field(&self, t: T) -> T {
        self.pulses.iter().fold(T::zero(), |acc, p| acc + p.field(t))
    }

    /// Rabi frequency of link `k`: `ε^k(t)·a_k·|d_k|/2`.
    pub fn rabi(&self, chain: &ChainSpec<T>, k: usize, t: T) -> T {
        self.pulses[k].envelope(t) * chain.coupling(k) * T::of(0.5)
    }

    /// Window `[min(t0) − 2σ, max(t0) + 2σ]` over all pulses.
    pub fn span(&self) -> (T, T) {
        let two = T::of(2.0);
        self.pulses.iter().fold((T::infinity(), T::neg_infinity()), |(lo, hi), p| {
            (lo.min(p.t0 - two * p.sigma), hi.max(p.t0 + two * p.sigma))
        })
    }

    pub fn max_carrier(&self) -> T {
        self.pulses.iter().fold(T::zero(), |m, p| m.max(p.omega))
    }

    /// Largest Rabi frequency reached on any link.
    pub fn max_rabi(&self, chain: &ChainSpec<T>) -> T {
        (0..self.pulses.len()).fold(T::zero(), |m, k| {
            m.max(self.pulses[k].eps0 * chain.coupling(k) * T::of(0.5))
        })
    }

    /// Checks that the train has one resonant pulse per link of `chain`.
    pub fn check_against(&self, chain: &ChainSpec<T>) -> Result<()> {
        if self.pulses.len() != chain.links() {
            return Err(Error::Invalid(format!(
                "{} pulses for a chain with {} links",
                self.pulses.len(),
                chain.links()
            )));
        }
        for (k, (p, w)) in self.pulses.iter().zip(chain.carriers()).enumerate() {
            if (p.omega - w).abs() > T::of(1e-9) * w.max(T::one()) {
                return Err(Error::Invalid(format!(
                    "pulse {k} carrier {:e} is off resonance with its link ({:e})",
                    p.omega, w
                )));
            }
        }
        Ok(())
    }

    /// The shared profile `Ω₀(t)` when every link's Rabi frequency equals
    /// `√((k+1)(N−k−1))·Ω₀(t)`; `None` for staggered or unbalanced trains.
    pub fn common_profile(&self, chain: &ChainSpec<T>) -> Option<CommonProfile<T>> {
        let first = self.pulses.first()?;
        if self.pulses.len() != chain.links() {
            return None;
        }
        let peak = first.eps0 * chain.coupling(0) * T::of(0.5) / chain.su_weight(0);
        let tol = T::of(1e-9);
        for (k, p) in self.pulses.iter().enumerate() {
            let pk = p.eps0 * chain.coupling(k) * T::of(0.5) / chain.su_weight(k);
            let scale = peak.abs().max(T::min_positive_value());
            if (p.t0 - first.t0).abs() > tol * first.sigma
                || (p.sigma - first.sigma).abs() > tol * first.sigma
                || (pk - peak).abs() > tol * scale
            {
                return None;
            }
        }
        Some(CommonProfile {
            peak,
            t0: first.t0,
            sigma: first.sigma,
        })
    }
}

/// `Ω₀(t) = peak·exp(−((t−t0)/σ)⁴)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CommonProfile<T> {
    pub peak: T,
    pub t0: T,
    pub sigma: T,
}

impl<T: Real> CommonProfile<T> {
    pub fn value(&self, t: T) -> T {
        let x = (t - self.t0) / self.sigma;
        self.peak * (-(x * x * x * x)).exp()
    }

    /// `∫ Ω₀ dt` from `a` to `b`.
    pub fn area(&self, a: T, b: T) -> T {
        self.peak * envelope_area(self.t0, self.sigma, a, b)
    }

    /// Area of the whole (untruncated) pulse.
    pub fn total_area(&self) -> T {
        self.peak * T::of(2.0 * GAMMA_FIVE_QUARTERS) * self.sigma
    }
}

/// `ε₀^k = 2·Ω₀_peak·√(k(N−k)) / (a_k·|d_k|)` for every link.
pub fn field_strengths<T: Real>(chain: &ChainSpec<T>, omega0_peak: T) -> Result<Vec<T>> {
    (0..chain.links())
        .map(|k| {
            let c = chain.coupling(k);
            if c == T::zero() {
                let (a, b) = (chain.states[k].id, chain.states[k + 1].id);
                return Err(Error::Infeasible {
                    reason: format!("link {a} -> {b} has a vanishing dipole"),
                    weakest: Some((a, b, 0.0)),
                });
            }
            Ok(T::of(2.0) * omega0_peak * chain.su_weight(k) / c)
        })
        .collect()
}

/// How the overall strength of a designed train is fixed.
#[derive(Clone, Debug, PartialEq)]
pub enum Strength<T> {
    /// Total area `∫Ω₀dt` of the common profile; π/2 completes the transfer.
    Area(T),
    /// Peak value of the common profile `Ω₀`.
    PeakRabi(T),
    /// Peak intensity of each pulse in W/cm², in link order.
    Intensities(Vec<T>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainDesign<T> {
    pub sigma: T,
    /// Center of the first pulse; defaults so the train starts at t = 0.
    pub t0: Option<T>,
    pub strength: Strength<T>,
    /// Delay added per link: pulse `k` is centered at `t0 + k·stagger`.
    pub stagger: T,
}

impl<T: Real> TrainDesign<T> {
    /// Simultaneous pulses of width `sigma` with total area π/2.
    pub fn complete_transfer(sigma: T) -> Self {
        Self {
            sigma,
            t0: None,
            strength: Strength::Area(T::FRAC_PI_2()),
            stagger: T::zero(),
        }
    }
}

/// Resonant Gaussian-4 train realizing the SU(N) Rabi pattern on `chain`.
pub fn design_train<T: Real>(chain: &ChainSpec<T>, design: &TrainDesign<T>) -> Result<PulseTrain<T>> {
    if !(design.sigma > T::zero()) {
        return Err(Error::Invalid("pulse width must be positive".into()));
    }
    let links = chain.links();
    let two_sigma = T::of(2.0) * design.sigma;
    let last_shift = design.stagger * T::of((links - 1) as f64);
    let t0 = design
        .t0
        .unwrap_or_else(|| two_sigma + T::zero().max(-last_shift));
    let eps0 = match &design.strength {
        Strength::Area(area) => {
            let peak = *area / (T::of(2.0 * GAMMA_FIVE_QUARTERS) * design.sigma);
            field_strengths(chain, peak)?
        }
        Strength::PeakRabi(peak) => field_strengths(chain, *peak)?,
        Strength::Intensities(intensities) => {
            if intensities.len() != links {
                return Err(Error::Invalid(format!(
                    "{} intensities for {links} links",
                    intensities.len()
                )));
            }
            intensities
                .iter()
                .map(|i| {
                    if *i >= T::zero() {
                        Ok(T::of(field_from_intensity(i.to_f64_lossy())))
                    } else {
                        Err(Error::Invalid("intensities must be non-negative".into()))
                    }
                })
                .collect::<Result<Vec<T>>>()?
        }
    };
    let pulses = chain
        .carriers()
        .into_iter()
        .zip(eps0)
        .enumerate()
        .map(|(k, (omega, eps0))| {
            PulseSpec::new(eps0, omega, t0 + design.stagger * T::of(k as f64), design.sigma)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PulseTrain { pulses })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::ChainState;
    use crate::state::StateId;
    use crate::state::Surface::{Excited as A, Ground as X};

    fn chain(n: usize, dmes: Vec<f64>) -> ChainSpec<f64> {
        let states = (0..n)
            .map(|i| ChainState {
                id: StateId::new(if i % 2 == 0 { X } else { A }, n - i, (n - 1 - i) as u32),
                energy: if i % 2 == 0 { -0.01 * i as f64 } else { 0.05 + 0.003 * i as f64 },
            })
            .collect();
        ChainSpec::new(states, dmes, 1e-4).unwrap()
    }

    #[test]
    fn envelope_values() {
        let p = PulseSpec::new(2.0, 0.05, 100.0, 10.0).unwrap();
        assert_eq!(p.envelope(100.0), 2.0);
        assert!((p.envelope(110.0) - 2.0 / std::f64::consts::E).abs() < 1e-15);
        assert!((p.envelope(80.0) / (2.0 * (-16.0f64).exp()) - 1.0).abs() < 1e-12);
        assert!(PulseSpec::new(-1.0, 0.05, 0.0, 1.0).is_err());
        assert!(PulseSpec::new(1.0, 0.0, 0.0, 1.0).is_err());
        assert!(PulseSpec::new(1.0, 0.1, 0.0, 0.0).is_err());
    }

    #[test]
    fn envelope_area_matches_gamma_function() {
        let full = envelope_area(0.0f64, 3.0, -30.0, 30.0);
        assert!((full - 6.0 * GAMMA_FIVE_QUARTERS).abs() < 1e-13);
        let half = envelope_area(5.0f64, 3.0, -25.0, 5.0);
        assert!((half - 3.0 * GAMMA_FIVE_QUARTERS).abs() < 1e-13);
        assert_eq!(envelope_area(0.0f64, 1.0, 2.0, 2.0), 0.0);
        assert!((envelope_area(0.0f64, 1.0, 1.0, -1.0) + envelope_area(0.0, 1.0, -1.0, 1.0)).abs() < 1e-15);
    }

    #[test]
    fn seven_state_pattern() {
        let c = chain(7, vec![0.3, -0.5, 0.2, 0.7, 0.45, 0.1]);
        let train = design_train(&c, &TrainDesign::complete_transfer(1000.0)).unwrap();
        let t0 = train.pulses[0].t0;
        let peaks: Vec<f64> = (0..6).map(|k| train.rabi(&c, k, t0)).collect();
        for (k, expected) in [6.0f64, 10.0, 12.0, 12.0, 10.0, 6.0].iter().enumerate() {
            assert!((peaks[k] / peaks[0] - (expected / 6.0).sqrt()).abs() < 1e-12);
        }
        let profile = train.common_profile(&c).unwrap();
        assert!((profile.total_area() - std::f64::consts::FRAC_PI_2).abs() < 1e-14);
        assert!((peaks[0] - 6f64.sqrt() * profile.peak).abs() < 1e-15);
        let ratio = train.rabi(&c, 3, t0 + 1000.0) / train.rabi(&c, 3, t0);
        assert!((ratio - (-1.0f64).exp()).abs() < 1e-14);
        // Ratios are time independent.
        for t in [0.0, 700.0, 2300.0] {
            assert!((train.rabi(&c, 2, t) / train.rabi(&c, 0, t) - 2f64.sqrt()).abs() < 1e-12);
        }
        train.check_against(&c).unwrap();
    }

    #[test]
    fn field_strength_scaling() {
        let c1 = chain(2, vec![0.4]);
        let e1 = field_strengths(&c1, 1e-5).unwrap();
        let expected = 2.0 * 1e-5 / (crate::coupling::angular_factor_a::<f64>(0) * 0.4);
        assert!((e1[0] - expected).abs() < 1e-18);
        let c2 = chain(2, vec![0.8]);
        assert!((field_strengths(&c2, 1e-5).unwrap()[0] * 2.0 - e1[0]).abs() < 1e-18);
    }

    #[test]
    fn total_field_is_the_superposition() {
        let c = chain(3, vec![0.3, 0.6]);
        let train = design_train(
            &c,
            &TrainDesign {
                sigma: 50.0,
                t0: Some(200.0),
                strength: Strength::PeakRabi(1e-3),
                stagger: 0.0,
            },
        )
        .unwrap();
        for t in [120.0, 190.0, 200.0, 233.0] {
            let manual: f64 = train
                .pulses
                .iter()
                .map(|p| p.eps0 * (-((t - p.t0) / p.sigma).powi(4)).exp() * (p.omega * t).cos())
                .sum();
            assert!((train.total_field(t) - manual).abs() < 1e-15);
        }
        let far = train.total_field(200.0 + 2.5 * 50.0).abs();
        let eps_max = train.pulses.iter().fold(0.0f64, |m, p| m.max(p.eps0));
        assert!(far < 2.0 * eps_max * (-16.0f64).exp());
        assert_eq!(train.span(), (100.0, 300.0));
    }

    #[test]
    fn stagger_and_intensities() {
        let c = chain(3, vec![0.3, 0.6]);
        let mut design = TrainDesign::complete_transfer(10.0);
        design.stagger = -5.0;
        let train = design_train(&c, &design).unwrap();
        assert_eq!(train.pulses[0].t0, 25.0);
        assert_eq!(train.pulses[1].t0, 20.0);
        assert_eq!(train.span().0, 0.0);
        assert!(train.common_profile(&c).is_none());

        design.stagger = 0.0;
        design.strength = Strength::Intensities(vec![3.509445e16, 0.0]);
        let train = design_train(&c, &design).unwrap();
        assert!((train.pulses[0].eps0 - 1.0).abs() < 1e-12);
        assert_eq!(train.pulses[1].eps0, 0.0);
        design.strength = Strength::Intensities(vec![1.0]);
        assert!(design_train(&c, &design).is_err());
    }

    #[test]
    fn resonance_check() {
        let c = chain(3, vec![0.3, 0.6]);
        let mut train = design_train(&c, &TrainDesign::complete_transfer(10.0)).unwrap();
        train.pulses[1].omega *= 1.01;
        assert!(train.check_against(&c).is_err());
        train.pulses.pop();
        assert!(train.check_against(&c).is_err());
    }
}
