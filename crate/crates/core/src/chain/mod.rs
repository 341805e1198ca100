//! N-state linkage chains and the pulse trains that drive them.

mod design;
mod pulse;

pub use design::{chain_from_states, design_chain, ChainSearch};
pub use pulse::{
    design_train, envelope_area, field_strengths, CommonProfile, PulseSpec, PulseTrain, Strength,
    TrainDesign, GAMMA_FIVE_QUARTERS,
};

use serde::{Deserialize, Serialize};

use crate::coupling::link_angular_factor;
use crate::error::{Error, Result};
use crate::num::Real;
use crate::state::StateId;

/// Smallest |DME| (atomic units) accepted on a chain link by default.
pub const DEFAULT_DME_THRESHOLD: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainState<T> {
    pub id: StateId,
    pub energy: T,
}

/// Ordered chain of rovibronic states; link `k` joins `states[k]` and
/// `states[k + 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec<T> {
    pub states: Vec<ChainState<T>>,
    pub dmes: Vec<T>,
    pub angular: Vec<T>,
}

impl<T: Real> ChainSpec<T> {
    /// Validates alternation, `|ΔJ| = 1`, distinctness and the DME threshold,
    /// and fills in the angular factors.
    pub fn new(states: Vec<ChainState<T>>, dmes: Vec<T>, threshold: T) -> Result<Self> {
        if states.len() < 2 {
            return Err(Error::Invalid("a chain needs at least two states".into()));
        }
        if dmes.len() + 1 != states.len() {
            return Err(Error::Invalid(format!(
                "{} states need {} DMEs, got {}",
                states.len(),
                states.len() - 1,
                dmes.len()
            )));
        }
        for (i, s) in states.iter().enumerate() {
            if states[..i].iter().any(|o| o.id == s.id) {
                return Err(Error::Invalid(format!("state {} appears twice", s.id)));
            }
        }
        let mut angular = Vec::with_capacity(dmes.len());
        for (k, pair) in states.windows(2).enumerate() {
            let (a, b) = (pair[0].id, pair[1].id);
            if a.surface == b.surface {
                return Err(Error::Invalid(format!(
                    "link {a} -> {b} does not change electronic state"
                )));
            }
            let factor = link_angular_factor(a.j, b.j)
                .ok_or_else(|| Error::Invalid(format!("link {a} -> {b} needs |ΔJ| = 1")))?;
            angular.push(factor);
            let d = dmes[k];
            if !(d.abs() > threshold) {
                return Err(Error::Infeasible {
                    reason: format!("|d| = {:e} on link {a} -> {b} is below {:e}", d.abs(), threshold),
                    weakest: Some((a, b, d.to_f64_lossy())),
                });
            }
        }
        Ok(Self {
            states,
            dmes,
            angular,
        })
    }

    /// Number of states N.
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn links(&self) -> usize {
        self.dmes.len()
    }

    pub fn ids(&self) -> Vec<StateId> {
        self.states.iter().map(|s| s.id).collect()
    }

    pub fn initial(&self) -> &ChainState<T> {
        &self.states[0]
    }

    pub fn target(&self) -> &ChainState<T> {
        &self.states[self.states.len() - 1]
    }

    /// `E_{k+1} − E_k` for link `k`.
    pub fn bohr_frequency(&self, k: usize) -> T {
        self.states[k + 1].energy - self.states[k].energy
    }

    /// Resonant carrier of every link.
    pub fn carriers(&self) -> Vec<T> {
        (0..self.links()).map(|k| self.bohr_frequency(k).abs()).collect()
    }

    /// `a_k·|d_k|`, the factor turning a field amplitude into twice the Rabi
    /// frequency of link `k`.
    pub fn coupling(&self, k: usize) -> T {
        self.angular[k] * self.dmes[k].abs()
    }

    /// `√((k+1)(N−k−1))`, the SU(N) weight of link `k` (0-based).
    pub fn su_weight(&self, k: usize) -> T {
        let n = self.len();
        T::of((((k + 1) * (n - k - 1)) as f64).sqrt())
    }

    /// The link with the smallest |DME|.
    pub fn weakest_link(&self) -> (StateId, StateId, T) {
        let k = (0..self.links())
            .min_by(|&a, &b| {
                self.dmes[a]
                    .abs()
                    .partial_cmp(&self.dmes[b].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap_or(0);
        (self.states[k].id, self.states[k + 1].id, self.dmes[k])
    }
}
