use std::cmp::Ordering;

use ndarray::Array2;

use super::{ChainSpec, ChainState, DEFAULT_DME_THRESHOLD};
use crate::coupling::CouplingMaps;
use crate::error::{Error, Result};
use crate::num::Real;
use crate::state::{ManifoldKey, StateId};

/// Options for [`design_chain`].
#[derive(Clone, Copy, Debug)]
pub struct ChainSearch<T> {
    /// Minimum |DME| on every link.
    pub threshold: T,
}

impl<T: Real> Default for ChainSearch<T> {
    fn default() -> Self {
        Self {
            threshold: T::of(DEFAULT_DME_THRESHOLD),
        }
    }
}

/// Builds a chain from explicitly chosen states, reading energies and DMEs
/// from `maps`.
pub fn chain_from_states<T: Real>(
    maps: &CouplingMaps<T>,
    states: &[StateId],
    threshold: T,
) -> Result<ChainSpec<T>> {
    let chain_states = states
        .iter()
        .map(|id| {
            maps.energy(id)
                .map(|energy| ChainState { id: *id, energy })
                .ok_or_else(|| Error::Invalid(format!("no level {id} among the solved manifolds")))
        })
        .collect::<Result<Vec<_>>>()?;
    let dmes = states
        .windows(2)
        .map(|w| {
            maps.dme(&w[0], &w[1]).ok_or_else(|| {
                Error::Invalid(format!("no coupling map between {} and {}", w[0], w[1]))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ChainSpec::new(chain_states, dmes, threshold)
}

/// Every sequence of `links` steps of ±1 from `j0` to `j1` that stays at J ≥ 0.
fn j_walks(j0: u32, j1: u32, links: usize) -> Vec<Vec<u32>> {
    fn extend(path: &mut Vec<u32>, target: u32, remaining: usize, out: &mut Vec<Vec<u32>>) {
        let here = *path.last().unwrap();
        if remaining == 0 {
            if here == target {
                out.push(path.clone());
            }
            return;
        }
        if here.abs_diff(target) as usize > remaining {
            return;
        }
        for next in [here.checked_sub(1), Some(here + 1)].into_iter().flatten() {
            path.push(next);
            extend(path, target, remaining - 1, out);
            path.pop();
        }
    }
    let mut out = Vec::new();
    extend(&mut vec![j0], j1, links, &mut out);
    out
}

/// Candidate chain with its ranking keys.
#[derive(Clone, Debug)]
struct Candidate<T> {
    states: Vec<StateId>,
    min: T,
    sum: T,
    energy: T,
}

impl<T: Real> Candidate<T> {
    /// Larger minimum wins, then larger Σd², then lower intermediate energy.
    fn beats(&self, other: &Self) -> bool {
        match self.min.partial_cmp(&other.min) {
            Some(Ordering::Greater) => return true,
            Some(Ordering::Less) => return false,
            _ => {}
        }
        match self.sum.partial_cmp(&other.sum) {
            Some(Ordering::Greater) => return true,
            Some(Ordering::Less) => return false,
            _ => {}
        }
        self.energy < other.energy
    }
}

struct Walk<T> {
    keys: Vec<ManifoldKey>,
    energies: Vec<Vec<T>>,
    /// `maps[k][[v, w]]` = |d| between level v of position k and w of k+1.
    maps: Vec<Array2<T>>,
    /// Upper bounds on min |d| and Σd² over links k.. of any completion.
    suffix_min: Vec<T>,
    suffix_sum: Vec<T>,
}

struct Search<'a, T> {
    walk: &'a Walk<T>,
    target: StateId,
    best: Option<Candidate<T>>,
    path: Vec<usize>,
}

impl<T: Real> Search<'_, T> {
    fn state(&self, k: usize, v: usize) -> StateId {
        let key = self.walk.keys[k];
        StateId::new(key.surface, v, key.j)
    }

    fn repeats(&self, k: usize, v: usize) -> bool {
        let id = self.state(k, v);
        id == self.target
            || self
                .path
                .iter()
                .enumerate()
                .any(|(i, &w)| self.state(i, w) == id)
    }

    /// Extends `path` (positions 0..k filled) at position k.
    fn descend(&mut self, k: usize, min: T, sum: T, energy: T) {
        let walk = self.walk;
        let last = walk.keys.len() - 1;
        let prev = self.path[k - 1];
        if k == last {
            let d = walk.maps[k - 1][[prev, self.target.v]];
            let cand = Candidate {
                states: (0..last)
                    .map(|i| self.state(i, self.path[i]))
                    .chain(std::iter::once(self.target))
                    .collect(),
                min: min.min(d),
                sum: sum + d * d,
                energy,
            };
            if self.best.as_ref().is_none_or(|b| cand.beats(b)) {
                self.best = Some(cand);
            }
            return;
        }
        let row = walk.maps[k - 1].row(prev);
        let mut order: Vec<usize> = (0..row.len()).collect();
        order.sort_by(|&a, &b| row[b].partial_cmp(&row[a]).unwrap_or(Ordering::Equal));
        for v in order {
            let d = row[v];
            let m = min.min(d);
            if let Some(best) = &self.best {
                if m < best.min {
                    // Candidates are sorted by |d|, so none of the rest can do better.
                    break;
                }
                let bound = m.min(walk.suffix_min[k]);
                if bound < best.min {
                    continue;
                }
                if bound <= best.min && sum + d * d + walk.suffix_sum[k] < best.sum {
                    continue;
                }
            }
            if self.repeats(k, v) {
                continue;
            }
            self.path.push(v);
            self.descend(k + 1, m, sum + d * d, energy + walk.energies[k][v]);
            self.path.pop();
        }
    }
}

fn prepare_walk<T: Real>(
    maps: &CouplingMaps<T>,
    initial: &StateId,
    target: &StateId,
    js: &[u32],
) -> Option<Walk<T>> {
    let keys: Vec<ManifoldKey> = js
        .iter()
        .enumerate()
        .map(|(k, &j)| {
            let surface = if k % 2 == 0 {
                initial.surface
            } else {
                initial.surface.other()
            };
            ManifoldKey::new(surface, j)
        })
        .collect();
    let energies = keys
        .iter()
        .map(|k| maps.energies(k).map(<[T]>::to_vec))
        .collect::<Option<Vec<_>>>()?;
    let abs_maps = keys
        .windows(2)
        .map(|w| maps.map(&w[0], &w[1]).map(|m| m.values.mapv(|d| d.abs())))
        .collect::<Option<Vec<_>>>()?;
    let links = abs_maps.len();
    let mut link_max: Vec<(T, T)> = abs_maps
        .iter()
        .map(|m| {
            let top = m.iter().fold(T::zero(), |a, &b| a.max(b));
            (top, top * top)
        })
        .collect();
    // Endpoint links only see the fixed endpoint's row or column.
    if links >= 1 {
        let first = abs_maps[0].row(initial.v).iter().fold(T::zero(), |a, &b| a.max(b));
        link_max[0] = (first, first * first);
        let last = abs_maps[links - 1]
            .column(target.v)
            .iter()
            .fold(T::zero(), |a, &b| a.max(b));
        let last = if links == 1 {
            abs_maps[0][[initial.v, target.v]]
        } else {
            last
        };
        link_max[links - 1] = (last, last * last);
    }
    // suffix_*[k] bounds links k.., i.e. those after the state at position k.
    let mut suffix_min = vec![T::infinity(); links + 1];
    let mut suffix_sum = vec![T::zero(); links + 1];
    for k in (0..links).rev() {
        suffix_min[k] = suffix_min[k + 1].min(link_max[k].0);
        suffix_sum[k] = suffix_sum[k + 1] + link_max[k].1;
    }
    Some(Walk {
        keys,
        energies,
        maps: abs_maps,
        suffix_min,
        suffix_sum,
    })
}

/// Chain of `n` states from `initial` to `target` maximizing the smallest
/// |DME| on any link.
///
/// Ties are broken by the larger sum of squared DMEs, then by the lower total
/// energy of the intermediate states. Every J walk that alternates electronic
/// states and is covered by `maps` is searched with branch and bound.
pub fn design_chain<T: Real>(
    maps: &CouplingMaps<T>,
    initial: StateId,
    target: StateId,
    n: usize,
    options: &ChainSearch<T>,
) -> Result<ChainSpec<T>> {
    if n < 2 {
        return Err(Error::Invalid("a chain needs at least two states".into()));
    }
    let links = n - 1;
    let expected_surface = if links.is_multiple_of(2) {
        initial.surface
    } else {
        initial.surface.other()
    };
    if target.surface != expected_surface {
        return Err(Error::Invalid(format!(
            "a {n}-state chain starting on {} must end on {}",
            initial.surface, expected_surface
        )));
    }
    if initial.j.abs_diff(target.j) as usize > links
        || (initial.j.abs_diff(target.j) as usize) % 2 != links % 2
    {
        return Err(Error::Invalid(format!(
            "no {links}-step J walk joins J = {} and J = {}",
            initial.j, target.j
        )));
    }
    for id in [&initial, &target] {
        if maps.energy(id).is_none() {
            return Err(Error::Invalid(format!("no level {id} among the solved manifolds")));
        }
    }

    let mut best: Option<Candidate<T>> = None;
    let mut covered = false;
    for js in j_walks(initial.j, target.j, links) {
        let Some(walk) = prepare_walk(maps, &initial, &target, &js) else {
            continue;
        };
        covered = true;
        if links == 1 {
            let d = walk.maps[0][[initial.v, target.v]];
            let cand = Candidate {
                states: vec![initial, target],
                min: d,
                sum: d * d,
                energy: T::zero(),
            };
            if best.as_ref().is_none_or(|b| cand.beats(b)) {
                best = Some(cand);
            }
            continue;
        }
        let mut search = Search {
            walk: &walk,
            target,
            best: best.clone(),
            path: vec![initial.v],
        };
        search.descend(1, T::infinity(), T::zero(), T::zero());
        best = search.best;
    }
    if !covered {
        return Err(Error::Invalid(format!(
            "the coupling maps do not cover any {n}-state route from {initial} to {target}"
        )));
    }
    let best = best.ok_or_else(|| Error::Infeasible {
        reason: format!("no {n}-state chain of distinct states joins {initial} and {target}"),
        weakest: None,
    })?;
    chain_from_states(maps, &best.states, options.threshold)
}
