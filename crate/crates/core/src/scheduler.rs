//! Activation protocols: which dual blocks update at each step.
//!
//! The update model only requires that every edge keeps updating often
//! enough (its update count must grow at least linearly). The protocols here
//! realize the standard regimes: always-on, i.i.d. coin flips per edge,
//! cyclic single-edge sweeps, persistently exciting windows, the
//! adaptive-counter scheme with time-varying probabilities, and replayed
//! scripts for adversarial schedules.
//!
//! Mask generation is separated from the state transition so that scripted
//! schedules can deliberately starve edges in tests.

use std::collections::VecDeque;
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Topology;
use crate::rng::{stream, TAG_SCHEDULER};

/// Per-edge probability: one value broadcast to all edges, or one per edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProbSpec {
    Uniform(f64),
    PerEdge(Vec<f64>),
}

impl ProbSpec {
    pub fn at(&self, edge: usize) -> f64 {
        match self {
            ProbSpec::Uniform(p) => *p,
            ProbSpec::PerEdge(ps) => ps[edge],
        }
    }

    pub fn min(&self) -> f64 {
        match self {
            ProbSpec::Uniform(p) => *p,
            ProbSpec::PerEdge(ps) => ps.iter().cloned().fold(f64::INFINITY, f64::min),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SchedulerSpec {
    /// Every edge updates every step.
    Synchronous,
    /// Edge `(i,j)` updates independently with probability `p_ij ∈ (0, 1]`.
    IidBernoulli { p: ProbSpec },
    /// Exactly one edge per step, replaying a permutation of 1-based edge
    /// indices (identity order when omitted).
    Cyclic {
        #[serde(default)]
        order: Option<Vec<usize>>,
    },
    /// Every edge activates at least once in any window of `window` steps;
    /// one uniformly random non-deadline edge fills each step.
    PersistentlyExciting { window: usize },
    /// Time-varying probabilities: edge `(i,j)` activates with probability
    /// `p̃_i · p̃_j · decay^(ϖ_i · ϖ_j)`, where `ϖ_i` counts the steps in the
    /// trailing window (current step excluded) with at least one activation
    /// on an edge incident to agent `i`. Uses global information; it is a
    /// centralized scheduler feature, not a distributed protocol.
    AdaptiveCounter {
        p_tilde: Vec<f64>,
        #[serde(default = "default_decay")]
        decay: f64,
        #[serde(default = "default_window")]
        window: usize,
    },
    /// Explicit 0/1 mask rows, one row per step, columns in edge order.
    Scripted { masks: Vec<Vec<u8>> },
}

fn default_decay() -> f64 {
    0.7
}

fn default_window() -> usize {
    10
}

#[derive(Debug, Error, PartialEq)]
pub enum SchedulerError {
    #[error("i.i.d. probabilities must lie in (0, 1], found {0}")]
    BadProbability(f64),
    #[error("probability vector has {got} entries, expected {expected}")]
    ProbabilityLength { expected: usize, got: usize },
    #[error("cyclic order must be a permutation of 1..={0}")]
    BadCyclicOrder(usize),
    #[error("persistently exciting window must be at least the edge count {0}")]
    WindowTooSmall(usize),
    #[error("adaptive counter needs one base probability in (0.5, 1) per agent")]
    BadAdaptiveBases,
    #[error("scripted mask row {row} has {got} columns, expected {expected}")]
    ScriptRowLength {
        row: usize,
        expected: usize,
        got: usize,
    },
    #[error("script provides {rows} rows but the run needs {needed}")]
    ScriptTooShort { rows: usize, needed: usize },
    #[error("script entry at row {row} is not 0 or 1")]
    ScriptBadEntry { row: usize },
}

impl SchedulerSpec {
    /// `1 / min p_ij` when the spec pins static per-edge probabilities
    /// (the constant needed by the best-dual bound check).
    pub fn m1(&self) -> Option<f64> {
        match self {
            SchedulerSpec::Synchronous => Some(1.0),
            SchedulerSpec::IidBernoulli { p } => Some(1.0 / p.min()),
            _ => None,
        }
    }

    pub fn validate(&self, num_edges: usize, num_agents: usize) -> Result<(), SchedulerError> {
        match self {
            SchedulerSpec::Synchronous => Ok(()),
            SchedulerSpec::IidBernoulli { p } => {
                if let ProbSpec::PerEdge(ps) = p {
                    if ps.len() != num_edges {
                        return Err(SchedulerError::ProbabilityLength {
                            expected: num_edges,
                            got: ps.len(),
                        });
                    }
                }
                for e in 0..num_edges {
                    let pe = p.at(e);
                    if !(pe > 0.0 && pe <= 1.0) {
                        return Err(SchedulerError::BadProbability(pe));
                    }
                }
                Ok(())
            }
            SchedulerSpec::Cyclic { order } => {
                if let Some(order) = order {
                    let mut seen = vec![false; num_edges + 1];
                    if order.len() != num_edges {
                        return Err(SchedulerError::BadCyclicOrder(num_edges));
                    }
                    for &idx in order {
                        if idx == 0 || idx > num_edges || seen[idx] {
                            return Err(SchedulerError::BadCyclicOrder(num_edges));
                        }
                        seen[idx] = true;
                    }
                }
                Ok(())
            }
            SchedulerSpec::PersistentlyExciting { window } => {
                if *window < num_edges.max(1) {
                    return Err(SchedulerError::WindowTooSmall(num_edges));
                }
                Ok(())
            }
            SchedulerSpec::AdaptiveCounter { p_tilde, decay, window } => {
                if p_tilde.len() != num_agents
                    || p_tilde.iter().any(|&p| !(p > 0.0 && p < 1.0))
                    || !(*decay > 0.0 && *decay <= 1.0)
                    || *window == 0
                {
                    return Err(SchedulerError::BadAdaptiveBases);
                }
                Ok(())
            }
            SchedulerSpec::Scripted { masks } => {
                for (row, mask) in masks.iter().enumerate() {
                    if mask.len() != num_edges {
                        return Err(SchedulerError::ScriptRowLength {
                            row,
                            expected: num_edges,
                            got: mask.len(),
                        });
                    }
                    if mask.iter().any(|&b| b > 1) {
                        return Err(SchedulerError::ScriptBadEntry { row });
                    }
                }
                Ok(())
            }
        }
    }
}

/// Parses a scripted-mask file: one row per step, one 0/1 per edge in edge
/// order, optionally whitespace-separated. Blank lines are skipped.
pub fn parse_mask_file(content: &str) -> Result<Vec<Vec<u8>>, SchedulerError> {
    let mut rows = Vec::new();
    for (rownum, line) in content.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for ch in line.chars() {
            match ch {
                '0' => row.push(0),
                '1' => row.push(1),
                c if c.is_whitespace() || c == ',' => {}
                _ => return Err(SchedulerError::ScriptBadEntry { row: rownum }),
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn load_mask_file(path: &Path) -> std::io::Result<Result<Vec<Vec<u8>>, SchedulerError>> {
    Ok(parse_mask_file(&std::fs::read_to_string(path)?))
}

/// Stateful mask generator; deterministic per (spec, seed, topology).
pub struct Scheduler {
    spec: SchedulerSpec,
    num_edges: usize,
    num_agents: usize,
    endpoints: Vec<(usize, usize)>,
    rng: ChaCha8Rng,
    step: u64,
    /// trailing window of per-agent "had an incident activation" flags
    history: VecDeque<Vec<bool>>,
    /// step of the most recent activation per edge (-1 when never)
    last_activation: Vec<i64>,
}

impl Scheduler {
    pub fn new(spec: SchedulerSpec, topology: &Topology, seed: u64) -> Result<Self, SchedulerError> {
        spec.validate(topology.num_edges(), topology.num_agents())?;
        Ok(Scheduler {
            spec,
            num_edges: topology.num_edges(),
            num_agents: topology.num_agents(),
            endpoints: topology.oriented_edges().to_vec(),
            rng: stream(seed, TAG_SCHEDULER),
            step: 0,
            history: VecDeque::new(),
            last_activation: vec![-1; topology.num_edges()],
        })
    }

    /// Checks a scripted schedule covers the whole run.
    pub fn ensure_script_length(&self, iterations: u64) -> Result<(), SchedulerError> {
        if let SchedulerSpec::Scripted { masks } = &self.spec {
            if (masks.len() as u64) < iterations {
                return Err(SchedulerError::ScriptTooShort {
                    rows: masks.len(),
                    needed: iterations as usize,
                });
            }
        }
        Ok(())
    }

    /// Produces the activation mask for the current step and advances the
    /// generator's internal clock.
    pub fn next_mask(&mut self) -> Vec<bool> {
        let k = self.step;
        let mut mask = vec![false; self.num_edges];
        match &self.spec {
            SchedulerSpec::Synchronous => mask.fill(true),
            SchedulerSpec::IidBernoulli { p } => {
                for (e, m) in mask.iter_mut().enumerate() {
                    *m = self.rng.random::<f64>() < p.at(e);
                }
            }
            SchedulerSpec::Cyclic { order } => {
                if self.num_edges > 0 {
                    let pos = (k % self.num_edges as u64) as usize;
                    let edge = match order {
                        Some(order) => order[pos] - 1,
                        None => pos,
                    };
                    mask[edge] = true;
                }
            }
            SchedulerSpec::PersistentlyExciting { window } => {
                // force every edge at its deadline, then fill with one
                // uniformly random non-deadline edge
                let w = *window as i64;
                for (m, &last) in mask.iter_mut().zip(&self.last_activation) {
                    if k as i64 - last >= w {
                        *m = true;
                    }
                }
                let free: Vec<usize> = (0..self.num_edges).filter(|&e| !mask[e]).collect();
                if !free.is_empty() {
                    let pick = free[self.rng.random_range(0..free.len())];
                    mask[pick] = true;
                }
            }
            SchedulerSpec::AdaptiveCounter { p_tilde, decay, .. } => {
                // ϖ counts over the retained window, current step excluded
                let mut varpi = vec![0u32; self.num_agents + 1];
                for flags in &self.history {
                    for (agent, hit) in flags.iter().enumerate() {
                        if *hit {
                            varpi[agent] += 1;
                        }
                    }
                }
                for (e, m) in mask.iter_mut().enumerate() {
                    let (i, j) = self.endpoints[e];
                    let prob = p_tilde[i - 1]
                        * p_tilde[j - 1]
                        * decay.powf((varpi[i] * varpi[j]) as f64);
                    *m = self.rng.random::<f64>() < prob;
                }
            }
            SchedulerSpec::Scripted { masks } => {
                if let Some(row) = masks.get(k as usize) {
                    for (m, &b) in mask.iter_mut().zip(row) {
                        *m = b == 1;
                    }
                }
            }
        }
        self.commit(&mask);
        mask
    }

    fn commit(&mut self, mask: &[bool]) {
        if let SchedulerSpec::AdaptiveCounter { window, .. } = &self.spec {
            let mut flags = vec![false; self.num_agents + 1];
            for (e, &m) in mask.iter().enumerate() {
                if m {
                    let (i, j) = self.endpoints[e];
                    flags[i] = true;
                    flags[j] = true;
                }
            }
            self.history.push_back(flags);
            while self.history.len() > *window {
                self.history.pop_front();
            }
        }
        for (e, &m) in mask.iter().enumerate() {
            if m {
                self.last_activation[e] = self.step as i64;
            }
        }
        self.step += 1;
    }
}

/// Exact empirical update rate `γ_e[k] / k` from cumulative counters.
pub fn empirical_rate(gamma: u64, k: u64) -> f64 {
    debug_assert!(k >= 1);
    gamma as f64 / k as f64
}
