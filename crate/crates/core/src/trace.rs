//! Time series of chain-state populations shared by all dynamics tiers.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::num::Real;
use crate::state::StateId;

const TIME_COLUMN: &str = "time_au";
const LEAKAGE_COLUMN: &str = "leakage";
const ABSORBED_COLUMN: &str = "absorbed";

#[derive(Clone, Debug, PartialEq)]
pub struct PopulationTrace<T> {
    pub states: Vec<StateId>,
    pub times: Vec<T>,
    /// `populations[t][i]` is the population of `states[i]` at `times[t]`.
    pub populations: Vec<Vec<T>>,
    /// Norm outside the tracked states and not absorbed.
    pub leakage: Vec<T>,
    /// Norm removed by the absorbing boundary so far.
    pub absorbed: Vec<T>,
}

impl<T: Real> PopulationTrace<T> {
    pub fn new(states: Vec<StateId>) -> Self {
        Self {
            states,
            times: Vec::new(),
            populations: Vec::new(),
            leakage: Vec::new(),
            absorbed: Vec::new(),
        }
    }

    pub fn push(&mut self, time: T, populations: Vec<T>, leakage: T, absorbed: T) {
        debug_assert_eq!(populations.len(), self.states.len());
        self.times.push(time);
        self.populations.push(populations);
        self.leakage.push(leakage);
        self.absorbed.push(absorbed);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn column(&self, i: usize) -> Vec<T> {
        self.populations.iter().map(|row| row[i]).collect()
    }

    pub fn final_populations(&self) -> Option<&[T]> {
        self.populations.last().map(Vec::as_slice)
    }

    /// Largest population reached by `states[i]` and when.
    pub fn peak(&self, i: usize) -> Option<(T, T)> {
        self.populations
            .iter()
            .zip(&self.times)
            .map(|(row, t)| (*t, row[i]))
            .fold(None, |best, (t, p)| match best {
                Some((_, bp)) if bp >= p => best,
                _ => Some((t, p)),
            })
    }

    pub fn max_leakage(&self) -> T {
        self.leakage.iter().fold(T::zero(), |m, l| m.max(*l))
    }

    /// Largest `|p_self − p_other|` over common states, with `other` linearly
    /// interpolated onto this trace's times inside its range.
    pub fn max_deviation(&self, other: &Self) -> Result<T> {
        let pairs: Vec<(usize, usize)> = self
            .states
            .iter()
            .enumerate()
            .filter_map(|(i, s)| other.states.iter().position(|o| o == s).map(|j| (i, j)))
            .collect();
        if pairs.is_empty() || other.times.is_empty() {
            return Err(Error::Invalid("traces share no states or samples".into()));
        }
        let (lo, hi) = (other.times[0], other.times[other.times.len() - 1]);
        let mut worst = T::zero();
        let mut cursor = 0;
        for (row, &t) in self.populations.iter().zip(&self.times) {
            if t < lo || t > hi {
                continue;
            }
            while cursor + 1 < other.times.len() && other.times[cursor + 1] < t {
                cursor += 1;
            }
            let next = (cursor + 1).min(other.times.len() - 1);
            let (t0, t1) = (other.times[cursor], other.times[next]);
            let w = if t1 > t0 { (t - t0) / (t1 - t0) } else { T::zero() };
            for &(i, j) in &pairs {
                let p = other.populations[cursor][j] * (T::one() - w)
                    + other.populations[next][j] * w;
                worst = worst.max((row[i] - p).abs());
            }
        }
        Ok(worst)
    }

    pub fn write_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(sink);
        let csv_err = |e: csv::Error| Error::Invalid(format!("writing trace: {e}"));
        let mut header = vec![TIME_COLUMN.to_string()];
        header.extend(self.states.iter().map(ToString::to_string));
        header.push(LEAKAGE_COLUMN.into());
        header.push(ABSORBED_COLUMN.into());
        writer.write_record(&header).map_err(csv_err)?;
        for t in 0..self.len() {
            let mut record = vec![format!("{:.10e}", self.times[t])];
            record.extend(self.populations[t].iter().map(|p| format!("{p:.12e}")));
            record.push(format!("{:.12e}", self.leakage[t]));
            record.push(format!("{:.12e}", self.absorbed[t]));
            writer.write_record(&record).map_err(csv_err)?;
        }
        writer.flush().map_err(|e| Error::Invalid(format!("writing trace: {e}")))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(source: R, name: &str) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(source);
        let parse_err = |line: usize, message: String| Error::Parse {
            source_name: name.to_string(),
            line,
            message,
        };
        let header = reader
            .headers()
            .map_err(|e| parse_err(1, e.to_string()))?
            .clone();
        let columns: Vec<&str> = header.iter().collect();
        if columns.len() < 4
            || columns[0] != TIME_COLUMN
            || columns[columns.len() - 2] != LEAKAGE_COLUMN
            || columns[columns.len() - 1] != ABSORBED_COLUMN
        {
            return Err(parse_err(1, "unexpected trace header".into()));
        }
        let states = columns[1..columns.len() - 2]
            .iter()
            .map(|c| c.parse::<StateId>())
            .collect::<Result<Vec<_>>>()
            .map_err(|e| parse_err(1, e.to_string()))?;
        let mut trace = Self::new(states);
        for (row, record) in reader.records().enumerate() {
            let line = row + 2;
            let record = record.map_err(|e| parse_err(line, e.to_string()))?;
            let values = record
                .iter()
                .map(|f| f.trim().parse::<f64>().map(T::of))
                .collect::<std::result::Result<Vec<T>, _>>()
                .map_err(|e| parse_err(line, e.to_string()))?;
            if values.len() != columns.len() {
                return Err(parse_err(line, "wrong number of fields".into()));
            }
            let n = values.len();
            trace.push(values[0], values[1..n - 2].to_vec(), values[n - 2], values[n - 1]);
        }
        Ok(trace)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(std::io::BufReader::new(file), &path.display().to_string())
    }
}
