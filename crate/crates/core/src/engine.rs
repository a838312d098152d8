//! Supergradient assembly and dual ascent updates.
//!
//! The dual function is concave and generally non-smooth; the constraint
//! residual at any Lagrangian minimizer is a supergradient:
//! `E(x*_λ) ∈ ∂⁺Q(λ)`. The synchronous update moves every dual block along
//! it; the asynchronous update moves only the blocks selected by an
//! activation mask:
//!
//! ```text
//! λ_(e)⁺ = λ_(e) + α_(e) v⁺_(e) (g_(e) + e⁺_(e))
//! α_(e)⁺ = A_(e)(α_(e)) v⁺_(e) + α_(e) (1 − v⁺_(e))
//! γ_(e)⁺ = γ_(e) + v⁺_(e)
//! ```
//!
//! Stepsizes follow a per-edge diminishing schedule advanced only on that
//! edge's update events (a local clock); a global-clock mode indexes the
//! common schedule by the global step instead. The supergradient is
//! evaluated once per step at the current λ, so all simultaneously active
//! edges see the same witness.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::problem::{ProblemError, ProblemInstance};
use crate::runtime::Trace;

/// State advanced by the dual iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    /// Stacked per-edge dual blocks, total dimension n̄.
    pub lambda: Vec<f64>,
    /// Per-edge stepsize, strictly positive.
    pub alpha: Vec<f64>,
    /// Per-edge update counter, starts at 0.
    pub gamma: Vec<u64>,
    /// Global step counter.
    pub k: u64,
}

impl DualState {
    pub fn new(lambda: Vec<f64>, alpha: Vec<f64>) -> Self {
        debug_assert!(alpha.iter().all(|&a| a > 0.0));
        let gamma = vec![0; alpha.len()];
        DualState {
            lambda,
            alpha,
            gamma,
            k: 0,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum StepsizeError {
    #[error("stepsize {alpha} is not on the rule's sequence (nearest element {nearest})")]
    OffOrbit { alpha: f64, nearest: f64 },
    #[error("stepsize must be positive, got {0}")]
    NonPositive(f64),
}

/// Diminishing stepsize schedules.
///
/// `PowerDecay` and `LogDecay` advance by recovering the sequence index from
/// the current value (an off-sequence value is a configuration error and is
/// reported rather than silently diverging local clocks). `ClosedFormShift`
/// is the shift operator of the power sequence written as a self-map, so it
/// advances from any positive value. `Constant` violates the square-summable
/// stepsize requirement and is accepted for diagnostics only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum StepsizeRule {
    /// `α_m = c / (1 + m)^q`, `c > 0`, `q ∈ (1/2, 1]`.
    PowerDecay { c: f64, q: f64 },
    /// `α_m = c / ((m + 2) · log(m + 2))`, `c > 0`.
    LogDecay { c: f64 },
    /// `A(α) = c0 · ((α/c0)^{−1/q} + 1)^{−q}`, the shift of the power
    /// sequence `c0 / (1 + m)^q`.
    ClosedFormShift { c0: f64, q: f64 },
    /// `α_m = c` for all m; flagged as violating square summability.
    Constant { c: f64 },
}

const ORBIT_REL_TOL: f64 = 1e-9;

impl StepsizeRule {
    /// The m-th element of the underlying sequence.
    pub fn at(&self, m: u64) -> f64 {
        match *self {
            StepsizeRule::PowerDecay { c, q } => c / (1.0 + m as f64).powf(q),
            StepsizeRule::LogDecay { c } => {
                let t = m as f64 + 2.0;
                c / (t * t.ln())
            }
            StepsizeRule::ClosedFormShift { c0, q } => c0 / (1.0 + m as f64).powf(q),
            StepsizeRule::Constant { c } => c,
        }
    }

    pub fn initial(&self) -> f64 {
        self.at(0)
    }

    /// The next element after `alpha`.
    pub fn advance(&self, alpha: f64) -> Result<f64, StepsizeError> {
        if alpha <= 0.0 {
            return Err(StepsizeError::NonPositive(alpha));
        }
        match *self {
            StepsizeRule::PowerDecay { c, q } => {
                let m = (c / alpha).powf(1.0 / q) - 1.0;
                let m_hat = m.round().max(0.0) as u64;
                self.checked_next(alpha, m_hat)
            }
            StepsizeRule::LogDecay { c } => {
                // invert t·ln(t) = c/α by fixed-point iteration on t = y/ln(t)
                let y = c / alpha;
                let mut t = y.max(2.0);
                for _ in 0..64 {
                    let next = if t > 1.0 { y / t.ln() } else { 2.0 };
                    if (next - t).abs() <= 1e-12 * t {
                        t = next;
                        break;
                    }
                    t = next;
                }
                let m_hat = (t - 2.0).round().max(0.0) as u64;
                self.checked_next(alpha, m_hat)
            }
            StepsizeRule::ClosedFormShift { c0, q } => {
                Ok(c0 * ((alpha / c0).powf(-1.0 / q) + 1.0).powf(-q))
            }
            StepsizeRule::Constant { c } => Ok(c),
        }
    }

    fn checked_next(&self, alpha: f64, m_hat: u64) -> Result<f64, StepsizeError> {
        // the recovered index may be off by one from rounding
        for m in m_hat.saturating_sub(1)..=m_hat + 1 {
            let elem = self.at(m);
            if (elem - alpha).abs() <= ORBIT_REL_TOL * alpha {
                return Ok(self.at(m + 1));
            }
        }
        Err(StepsizeError::OffOrbit {
            alpha,
            nearest: self.at(m_hat),
        })
    }

    /// Whether the schedule satisfies `Σα = ∞` and `Σα² < ∞`.
    pub fn is_square_summable_diminishing(&self) -> bool {
        match *self {
            StepsizeRule::PowerDecay { c, q } | StepsizeRule::ClosedFormShift { c0: c, q } => {
                c > 0.0 && q > 0.5 && q <= 1.0
            }
            StepsizeRule::LogDecay { c } => c > 0.0,
            StepsizeRule::Constant { .. } => false,
        }
    }
}

/// Local clocks advance an edge's stepsize only on its own update events;
/// the global clock indexes the shared schedule by the global step counter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ClockMode {
    #[default]
    Local,
    Global,
}

/// Per-edge stepsize schedules plus the clock mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepsizePlan {
    /// One rule shared by all edges, or one per edge.
    pub rules: Vec<StepsizeRule>,
    #[serde(default)]
    pub clock: ClockMode,
}

impl StepsizePlan {
    pub fn uniform(rule: StepsizeRule) -> Self {
        StepsizePlan {
            rules: vec![rule],
            clock: ClockMode::Local,
        }
    }

    pub fn global(rule: StepsizeRule) -> Self {
        StepsizePlan {
            rules: vec![rule],
            clock: ClockMode::Global,
        }
    }

    pub fn rule(&self, edge: usize) -> &StepsizeRule {
        if self.rules.len() == 1 {
            &self.rules[0]
        } else {
            &self.rules[edge]
        }
    }

    pub fn initial_alphas(&self, num_edges: usize) -> Vec<f64> {
        (0..num_edges).map(|e| self.rule(e).initial()).collect()
    }
}

/// A supergradient of Q at λ: the constraint residual at the dual witness.
#[derive(Debug, Clone)]
pub struct Supergradient {
    /// Stacked residual blocks `E_ij x*_(i) − E_ji x*_(j)` in edge order.
    pub g: Vec<f64>,
    /// The Lagrangian minimizer that produced it.
    pub witness: Vec<f64>,
    /// The dual value `Q(λ)` at the evaluation point.
    pub q_value: f64,
}

impl Supergradient {
    pub fn norm(&self) -> f64 {
        self.g.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Stepsize(#[from] StepsizeError),
    #[error("mask length {got} does not match edge count {expected}")]
    MaskLength { expected: usize, got: usize },
    #[error("error vector length {got} does not match dual dimension {expected}")]
    ErrorLength { expected: usize, got: usize },
}

/// Evaluates the dual at λ and assembles `g = E(x*_λ)`.
pub fn supergradient(
    problem: &ProblemInstance,
    lambda: &[f64],
) -> Result<Supergradient, EngineError> {
    let eval = problem.evaluate_dual(lambda)?;
    let g = problem.constraint_residual(&eval.witness)?;
    Ok(Supergradient {
        g,
        witness: eval.witness,
        q_value: eval.value,
    })
}

fn check_lengths(
    problem: &ProblemInstance,
    mask: Option<&[bool]>,
    err: &[f64],
) -> Result<(), EngineError> {
    if let Some(mask) = mask {
        if mask.len() != problem.num_edges() {
            return Err(EngineError::MaskLength {
                expected: problem.num_edges(),
                got: mask.len(),
            });
        }
    }
    if err.len() != problem.dual_dim() {
        return Err(EngineError::ErrorLength {
            expected: problem.dual_dim(),
            got: err.len(),
        });
    }
    Ok(())
}

/// The shared λ update kernel: both step flavors route through it so that a
/// full mask with equal stepsizes reproduces the synchronous update bitwise.
fn apply_lambda_update(
    problem: &ProblemInstance,
    lambda: &mut [f64],
    mask: &[bool],
    alpha: impl Fn(usize) -> f64,
    g: &[f64],
    err: &[f64],
) {
    for (e, &active) in mask.iter().enumerate() {
        if !active {
            continue;
        }
        let a = alpha(e);
        for idx in problem.edge_range(e) {
            lambda[idx] += a * (g[idx] + err[idx]);
        }
    }
}

/// Synchronous supergradient step: every edge moves with the common scalar
/// stepsize; counters advance on all edges. The state's stepsize vector is
/// left untouched (the caller owns the schedule).
pub fn sync_step(
    problem: &ProblemInstance,
    state: &DualState,
    alpha: f64,
    err: &[f64],
) -> Result<(DualState, Supergradient), EngineError> {
    check_lengths(problem, None, err)?;
    let sg = supergradient(problem, &state.lambda)?;
    let mut next = state.clone();
    let mask = vec![true; problem.num_edges()];
    apply_lambda_update(problem, &mut next.lambda, &mask, |_| alpha, &sg.g, err);
    for gamma in &mut next.gamma {
        *gamma += 1;
    }
    next.k += 1;
    Ok((next, sg))
}

/// Asynchronous block step: active edges move with their own stepsizes and
/// advance their clocks; inactive blocks are left bitwise unchanged. The
/// global step counter advances regardless of the mask.
pub fn async_step(
    problem: &ProblemInstance,
    state: &DualState,
    plan: &StepsizePlan,
    mask: &[bool],
    err: &[f64],
) -> Result<(DualState, Supergradient), EngineError> {
    check_lengths(problem, Some(mask), err)?;
    let sg = supergradient(problem, &state.lambda)?;
    let next = apply_async_update(problem, state, plan, mask, err, &sg)?;
    Ok((next, sg))
}

/// The transition of [`async_step`] applied to an already-evaluated
/// supergradient (the runtime records the evaluation before stepping).
pub fn apply_async_update(
    problem: &ProblemInstance,
    state: &DualState,
    plan: &StepsizePlan,
    mask: &[bool],
    err: &[f64],
    sg: &Supergradient,
) -> Result<DualState, EngineError> {
    check_lengths(problem, Some(mask), err)?;
    let mut next = state.clone();
    match plan.clock {
        ClockMode::Local => {
            apply_lambda_update(
                problem,
                &mut next.lambda,
                mask,
                |e| state.alpha[e],
                &sg.g,
                err,
            );
            for (e, &active) in mask.iter().enumerate() {
                if active {
                    next.alpha[e] = plan.rule(e).advance(state.alpha[e])?;
                    next.gamma[e] += 1;
                }
            }
        }
        ClockMode::Global => {
            let a_now = plan.rule(0).at(state.k);
            apply_lambda_update(problem, &mut next.lambda, mask, |_| a_now, &sg.g, err);
            let a_next = plan.rule(0).at(state.k + 1);
            for (e, &active) in mask.iter().enumerate() {
                if active {
                    next.gamma[e] += 1;
                }
                next.alpha[e] = a_next;
            }
        }
    }
    next.k += 1;
    Ok(next)
}

/// Ergodic primal average over a trace: witnesses weighted by the mean
/// active stepsize of their step; idle steps contribute nothing.
pub fn primal_average(trace: &Trace) -> Result<Vec<f64>, PrimalAverageError> {
    let witness = trace
        .witness
        .as_deref()
        .ok_or(PrimalAverageError::MissingWitnessChannel)?;
    if trace.is_empty() {
        return Err(PrimalAverageError::EmptyTrace);
    }
    let n = trace.primal_dim;
    let edges = trace.num_edges;
    let mut accum = vec![0.0; n];
    let mut total_weight = 0.0;
    // the transition out of row k uses row k's witness, row k's stepsizes
    // and row k+1's mask
    for k in 0..trace.len() - 1 {
        let mut active = 0usize;
        let mut alpha_sum = 0.0;
        for e in 0..edges {
            if trace.mask_at(k + 1, e) {
                active += 1;
                alpha_sum += trace.alpha[k * edges + e];
            }
        }
        if active == 0 {
            continue;
        }
        let w = alpha_sum / active as f64;
        total_weight += w;
        for (acc, &x) in accum.iter_mut().zip(&witness[k * n..(k + 1) * n]) {
            *acc += w * x;
        }
    }
    if total_weight == 0.0 {
        return Err(PrimalAverageError::NoActiveSteps);
    }
    for a in &mut accum {
        *a /= total_weight;
    }
    Ok(accum)
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PrimalAverageError {
    #[error("trace does not record the witness channel")]
    MissingWitnessChannel,
    #[error("trace is empty")]
    EmptyTrace,
    #[error("trace contains no active steps")]
    NoActiveSteps,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Topology;
    use crate::problem::{CostAtom, Interval, LocalProblem};

    fn quadratic_path(a: &[f64]) -> ProblemInstance {
        let topology = Topology::path(a.len()).unwrap();
        let locals = a
            .iter()
            .enumerate()
            .map(|(idx, &ai)| {
                LocalProblem::scalar(
                    idx + 1,
                    CostAtom::Quadratic {
                        weight: 1.0,
                        center: ai,
                    },
                    Interval::new(-50.0, 50.0),
                )
            })
            .collect();
        ProblemInstance::consensus(topology, locals).unwrap()
    }

    #[test]
    fn supergradient_at_zero_and_optimum() {
        let p = quadratic_path(&[0.0, 3.0, 6.0]);
        let sg = supergradient(&p, &[0.0, 0.0]).unwrap();
        assert_eq!(sg.g, vec![-3.0, -3.0]);
        assert_eq!(sg.witness, vec![0.0, 3.0, 6.0]);

        let at_opt = supergradient(&p, &[-3.0, -3.0]).unwrap();
        assert!(at_opt.norm() < 1e-12);
    }

    #[test]
    fn empty_problem_has_empty_supergradient() {
        let p = ProblemInstance::consensus(
            Topology::build(1, []).unwrap(),
            vec![LocalProblem::scalar(
                1,
                CostAtom::Quadratic {
                    weight: 1.0,
                    center: 0.0,
                },
                Interval::new(-1.0, 1.0),
            )],
        )
        .unwrap();
        let sg = supergradient(&p, &[]).unwrap();
        assert!(sg.g.is_empty());
    }

    #[test]
    fn sync_step_arithmetic() {
        let p = quadratic_path(&[0.0, 3.0, 6.0]);
        let state = DualState::new(vec![0.0, 0.0], vec![0.5, 0.5]);
        let (next, _) = sync_step(&p, &state, 0.5, &[0.0, 0.0]).unwrap();
        assert_eq!(next.lambda, vec![-1.5, -1.5]);
        assert_eq!(next.gamma, vec![1, 1]);
        assert_eq!(next.k, 1);

        let (noisy, _) = sync_step(&p, &state, 0.5, &[0.1, -0.1]).unwrap();
        assert!((noisy.lambda[0] - (-1.45)).abs() < 1e-15);
        assert!((noisy.lambda[1] - (-1.55)).abs() < 1e-15);
    }

    #[test]
    fn sync_step_fixed_point_at_optimum() {
        let p = quadratic_path(&[0.0, 3.0, 6.0]);
        let state = DualState::new(vec![-3.0, -3.0], vec![0.5, 0.5]);
        let (next, _) = sync_step(&p, &state, 0.7, &[0.0, 0.0]).unwrap();
        assert_eq!(next.lambda, state.lambda);
    }

    #[test]
    fn async_partial_mask_moves_only_active_edge() {
        let p = quadratic_path(&[0.0, 3.0, 6.0]);
        // harmonic sequence c=0.5, q=1: elements 0.5, 0.25, ...
        let plan = StepsizePlan::uniform(StepsizeRule::PowerDecay { c: 0.5, q: 1.0 });
        let state = DualState {
            lambda: vec![0.0, 0.0],
            alpha: vec![0.5, 0.25],
            gamma: vec![0, 1],
            k: 1,
        };
        let (next, _) = async_step(&p, &state, &plan, &[true, false], &[0.0, 0.0]).unwrap();
        assert_eq!(next.lambda, vec![-1.5, 0.0]);
        assert_eq!(next.gamma, vec![1, 1]);
        assert_eq!(next.alpha[0], 0.25);
        assert_eq!(next.alpha[1].to_bits(), 0.25f64.to_bits());
        assert_eq!(next.k, 2);
    }

    #[test]
    fn async_all_zero_mask_is_idle() {
        let p = quadratic_path(&[0.0, 3.0, 6.0]);
        let plan = StepsizePlan::uniform(StepsizeRule::PowerDecay { c: 0.15, q: 0.51 });
        let state = DualState::new(vec![0.7, -0.4], plan.initial_alphas(2));
        let (next, _) = async_step(&p, &state, &plan, &[false, false], &[0.0, 0.0]).unwrap();
        assert_eq!(next.lambda, state.lambda);
        assert_eq!(next.alpha, state.alpha);
        assert_eq!(next.gamma, state.gamma);
        assert_eq!(next.k, state.k + 1);
    }

    #[test]
    fn async_full_mask_matches_sync_bitwise() {
        let p = quadratic_path(&[0.0, 3.0, 6.0]);
        let rule = StepsizeRule::ClosedFormShift { c0: 0.15, q: 0.51 };
        let plan = StepsizePlan::uniform(rule);
        let mut async_state = DualState::new(vec![0.0, 0.0], plan.initial_alphas(2));
        let mut sync_state = async_state.clone();
        let mut sync_alpha = rule.initial();
        let err = vec![0.01, -0.02];
        for _ in 0..200 {
            let (a, _) = async_step(&p, &async_state, &plan, &[true, true], &err).unwrap();
            let (s, _) = sync_step(&p, &sync_state, sync_alpha, &err).unwrap();
            sync_alpha = rule.advance(sync_alpha).unwrap();
            for (x, y) in a.lambda.iter().zip(&s.lambda) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
            assert_eq!(a.gamma, s.gamma);
            async_state = a;
            sync_state = s;
        }
    }

    #[test]
    fn stepsize_sequences_match_spec_values() {
        let shift = StepsizeRule::ClosedFormShift { c0: 0.15, q: 0.51 };
        let next = shift.advance(0.15).unwrap();
        let expected = 0.15 * 2.0f64.powf(-0.51);
        assert!((next - expected).abs() < 1e-12);

        let harmonic = StepsizeRule::PowerDecay { c: 1.0, q: 1.0 };
        assert!((harmonic.advance(0.25).unwrap() - 0.2).abs() < 1e-15);

        let log = StepsizeRule::LogDecay { c: 1.0 };
        let first = log.initial();
        assert!((first - 1.0 / (2.0 * 2.0f64.ln())).abs() < 1e-15);
        let second = log.advance(first).unwrap();
        assert!((second - 1.0 / (3.0 * 3.0f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn closed_form_shift_reproduces_power_sequence() {
        let shift = StepsizeRule::ClosedFormShift { c0: 0.15, q: 0.51 };
        let mut alpha = 0.15;
        for k in 1..=2000u64 {
            alpha = shift.advance(alpha).unwrap();
            let direct = 0.15 * (1.0 + k as f64).powf(-0.51);
            assert!(
                (alpha - direct).abs() <= 1e-12 * direct,
                "k={k}: {alpha} vs {direct}"
            );
        }
    }

    #[test]
    fn off_orbit_stepsize_is_reported() {
        let rule = StepsizeRule::PowerDecay { c: 0.15, q: 0.51 };
        assert!(matches!(
            rule.advance(0.1234),
            Err(StepsizeError::OffOrbit { .. })
        ));
        // deep elements still advance exactly
        let deep = rule.at(9_999_999);
        assert_eq!(rule.advance(deep).unwrap(), rule.at(10_000_000));
    }

    #[test]
    fn constant_rule_is_flagged_non_summable() {
        assert!(!StepsizeRule::Constant { c: 0.1 }.is_square_summable_diminishing());
        assert!(StepsizeRule::PowerDecay { c: 0.15, q: 0.51 }.is_square_summable_diminishing());
        assert!(!StepsizeRule::PowerDecay { c: 0.15, q: 0.5 }.is_square_summable_diminishing());
        assert!(StepsizeRule::LogDecay { c: 1.0 }.is_square_summable_diminishing());
    }

    #[test]
    fn primal_average_is_weighted_mean() {
        use crate::noise::NoiseSpec;
        use crate::runtime::{run, ChannelSet, RunConfig};
        use crate::scheduler::SchedulerSpec;
        // constant unit stepsize: two transitions with weights (1, 1);
        // the witnesses are (0,3,6) at λ=0 and (3,3,3) one step later
        let config = RunConfig {
            problem: quadratic_path(&[0.0, 3.0, 6.0]),
            scheduler: SchedulerSpec::Synchronous,
            stepsize: StepsizePlan::uniform(StepsizeRule::Constant { c: 1.0 }),
            noise: NoiseSpec::none(),
            iterations: 2,
            seed: 0,
            lambda0: None,
            channels: ChannelSet::default(),
            reference: None,
        };
        let (trace, _) = run(&config).unwrap();
        let avg = primal_average(&trace).unwrap();
        assert_eq!(avg, vec![1.5, 3.0, 4.5]);
    }

    #[test]
    fn primal_average_approaches_regularized_optimum() {
        use crate::noise::NoiseSpec;
        use crate::problem::{CostAtom, Interval, LocalProblem};
        use crate::reference::tree_quadratic_reference;
        use crate::runtime::{run, ChannelSet, RunConfig};
        use crate::scheduler::SchedulerSpec;
        let topology = crate::graph::Topology::path(3).unwrap();
        let locals = [2.7, 3.0, 3.3]
            .iter()
            .enumerate()
            .map(|(i, &a)| {
                LocalProblem::scalar(
                    i + 1,
                    CostAtom::Quadratic { weight: 1.0, center: a },
                    Interval::new(-50.0, 50.0),
                )
                .with_regularizer(0.005)
            })
            .collect();
        let problem = ProblemInstance::consensus(topology, locals).unwrap();
        let reference = tree_quadratic_reference(&problem).unwrap();
        let config = RunConfig {
            problem,
            scheduler: SchedulerSpec::Synchronous,
            stepsize: StepsizePlan::uniform(StepsizeRule::PowerDecay { c: 0.15, q: 0.51 }),
            noise: NoiseSpec::none(),
            iterations: 100_000,
            seed: 3,
            lambda0: None,
            channels: ChannelSet::default(),
            reference: Some(reference.clone()),
        };
        let (trace, _) = run(&config).unwrap();
        let avg = primal_average(&trace).unwrap();
        let err: f64 = avg
            .iter()
            .zip(&reference.x_star)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        assert!(err <= 1e-2, "|x_bar - x*| = {err}");
    }

    #[test]
    fn supergradient_inequality_random_pairs() {
        use rand::{Rng, SeedableRng};
        let p = quadratic_path(&[0.0, 3.0, 6.0]);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let lambda: Vec<f64> = (0..2).map(|_| rng.random_range(-6.0..6.0)).collect();
            let mu: Vec<f64> = (0..2).map(|_| rng.random_range(-6.0..6.0)).collect();
            let sg = supergradient(&p, &lambda).unwrap();
            let q_mu = p.evaluate_dual(&mu).unwrap().value;
            let linear: f64 = sg
                .g
                .iter()
                .zip(mu.iter().zip(&lambda))
                .map(|(g, (m, l))| g * (m - l))
                .sum();
            assert!(q_mu <= sg.q_value + linear + 1e-9 * (1.0 + sg.q_value.abs()));
        }
    }
}
