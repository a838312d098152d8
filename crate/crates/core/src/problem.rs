//! Primal problem, selection constraints, Lagrangian and dual function.
//!
//! The primal problem couples per-agent convex costs `F_i` over box sets
//! `X_i` through per-edge equality constraints
//!
//! ```text
//! minimize   F(x) = Σ_i F_i(x_(i))      over x in X_1 × ... × X_N
//! subject to E_ij x_(i) − E_ji x_(j) = 0   for every edge (i, j)
//! ```
//!
//! Relaxing the couplings with per-edge multipliers λ_(ij) gives the
//! Lagrangian `L(x, λ) = F(x) + ⟨λ, E(x)⟩`, where `E(x)` stacks the
//! per-edge residual blocks in edge order. The dual function
//! `Q(λ) = inf_x L(x, λ)` splits into independent per-agent minimizations of
//! `l_i(x_(i), λ) = F_i(x_(i)) + ⟨c_i(λ), x_(i)⟩`, each solved exactly by the
//! oracles in [`crate::oracle`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Topology;
use crate::oracle::{self, OracleError};

/// One convex scalar cost term applied to a designated coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CostAtom {
    /// `(weight/2) · (x − center)²` with `weight > 0`.
    Quadratic { weight: f64, center: f64 },
    /// `max{ −slope·(x − knee) + offset, offset }` with `slope > 0`.
    Hinge { slope: f64, knee: f64, offset: f64 },
    /// `x · log(scale · x)` on `x > 0`, with `scale > 0`.
    Entropy { scale: f64 },
    /// `coeff · x`.
    Affine { coeff: f64 },
}

impl CostAtom {
    pub fn value(&self, x: f64) -> f64 {
        match *self {
            CostAtom::Quadratic { weight, center } => 0.5 * weight * (x - center) * (x - center),
            CostAtom::Hinge {
                slope,
                knee,
                offset,
            } => (-slope * (x - knee) + offset).max(offset),
            CostAtom::Entropy { scale } => x * (scale * x).ln(),
            CostAtom::Affine { coeff } => coeff * x,
        }
    }

    /// Subdifferential of the atom at `x` as a closed interval.
    pub fn subgradient(&self, x: f64) -> (f64, f64) {
        match *self {
            CostAtom::Quadratic { weight, center } => {
                let g = weight * (x - center);
                (g, g)
            }
            CostAtom::Hinge {
                slope,
                knee,
                offset: _,
            } => {
                if x < knee {
                    (-slope, -slope)
                } else if x > knee {
                    (0.0, 0.0)
                } else {
                    (-slope, 0.0)
                }
            }
            CostAtom::Entropy { scale } => {
                let g = (scale * x).ln() + 1.0;
                (g, g)
            }
            CostAtom::Affine { coeff } => (coeff, coeff),
        }
    }

    fn validate(&self) -> Result<(), ProblemError> {
        match *self {
            CostAtom::Quadratic { weight, .. } if weight <= 0.0 => {
                Err(ProblemError::InvalidAtom("quadratic weight must be > 0"))
            }
            CostAtom::Hinge { slope, .. } if slope <= 0.0 => {
                Err(ProblemError::InvalidAtom("hinge slope must be > 0"))
            }
            CostAtom::Entropy { scale } if scale <= 0.0 => {
                Err(ProblemError::InvalidAtom("entropy scale must be > 0"))
            }
            _ => Ok(()),
        }
    }
}

/// A closed interval with optional bounds; `None` means unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Interval {
    pub lo: Option<f64>,
    pub hi: Option<f64>,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval {
            lo: Some(lo),
            hi: Some(hi),
        }
    }

    pub fn unbounded() -> Self {
        Interval { lo: None, hi: None }
    }

    pub fn lower(&self) -> f64 {
        self.lo.unwrap_or(f64::NEG_INFINITY)
    }

    pub fn upper(&self) -> f64 {
        self.hi.unwrap_or(f64::INFINITY)
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lower() && x <= self.upper()
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.max(self.lower()).min(self.upper())
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_some() && self.hi.is_some()
    }
}

/// One agent's share of the primal problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalProblem {
    /// 1-based agent index.
    pub agent: usize,
    /// Variable dimension `n_i`.
    pub dim: usize,
    /// Cost atoms as `(coordinate, atom)` pairs, coordinates 0-based.
    pub atoms: Vec<(usize, CostAtom)>,
    /// Box set, one interval per coordinate.
    #[serde(rename = "box")]
    pub box_set: Vec<Interval>,
    /// Adds `regularizer · |x|²` to the local cost.
    #[serde(default)]
    pub regularizer: f64,
}

impl LocalProblem {
    /// Scalar problem with a single atom and box.
    pub fn scalar(agent: usize, atom: CostAtom, box_set: Interval) -> Self {
        LocalProblem {
            agent,
            dim: 1,
            atoms: vec![(0, atom)],
            box_set: vec![box_set],
            regularizer: 0.0,
        }
    }

    pub fn with_regularizer(mut self, rho: f64) -> Self {
        self.regularizer = rho;
        self
    }

    /// Local cost `F_i(x)` including the quadratic regularizer.
    pub fn cost(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        let mut v = 0.0;
        for &(coord, atom) in &self.atoms {
            v += atom.value(x[coord]);
        }
        if self.regularizer != 0.0 {
            v += self.regularizer * x.iter().map(|&xi| xi * xi).sum::<f64>();
        }
        v
    }

    fn validate(&self) -> Result<(), ProblemError> {
        if self.dim == 0 {
            return Err(ProblemError::InvalidLocal {
                agent: self.agent,
                reason: "variable dimension must be at least 1",
            });
        }
        if self.box_set.len() != self.dim {
            return Err(ProblemError::InvalidLocal {
                agent: self.agent,
                reason: "box must have one interval per coordinate",
            });
        }
        if self.regularizer < 0.0 {
            return Err(ProblemError::InvalidLocal {
                agent: self.agent,
                reason: "regularizer must be non-negative",
            });
        }
        for iv in &self.box_set {
            if iv.lower() > iv.upper() {
                return Err(ProblemError::InvalidLocal {
                    agent: self.agent,
                    reason: "box interval has lo > hi",
                });
            }
        }
        for &(coord, atom) in &self.atoms {
            if coord >= self.dim {
                return Err(ProblemError::InvalidLocal {
                    agent: self.agent,
                    reason: "atom coordinate out of range",
                });
            }
            atom.validate()?;
            if matches!(atom, CostAtom::Entropy { .. }) && self.box_set[coord].lower() <= 0.0 {
                return Err(ProblemError::InvalidLocal {
                    agent: self.agent,
                    reason: "entropy atom requires a strictly positive box lower bound",
                });
            }
        }
        Ok(())
    }
}

/// Dense selection matrix, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelMat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl SelMat {
    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for d in 0..n {
            data[d * n + d] = 1.0;
        }
        SelMat { rows: n, cols: n, data }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let data = rows.into_iter().flatten().collect();
        SelMat { rows: r, cols: c, data }
    }

    /// `out += sign · M x`.
    pub fn mul_acc(&self, x: &[f64], sign: f64, out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (o, row) in out.iter_mut().zip(self.data.chunks_exact(self.cols)) {
            let mut acc = 0.0;
            for (m, xv) in row.iter().zip(x) {
                acc += m * xv;
            }
            *o += sign * acc;
        }
    }

    /// `out += sign · Mᵀ y`.
    pub fn tr_mul_acc(&self, y: &[f64], sign: f64, out: &mut [f64]) {
        debug_assert_eq!(y.len(), self.rows);
        debug_assert_eq!(out.len(), self.cols);
        for (yv, row) in y.iter().zip(self.data.chunks_exact(self.cols)) {
            let yv = sign * yv;
            for (o, m) in out.iter_mut().zip(row) {
                *o += yv * m;
            }
        }
    }

    /// Frobenius norm, an upper bound on the operator norm.
    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Per-edge pair of selection matrices. `own` belongs to the lower-indexed
/// endpoint (the edge owner), `other` to the higher-indexed one; both have
/// `dual_dim` rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeSelection {
    pub dual_dim: usize,
    pub own: SelMat,
    pub other: SelMat,
}

/// Selection matrices for every oriented edge, in edge order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionMap {
    pub edges: Vec<EdgeSelection>,
}

impl SelectionMap {
    /// Identity selections (consensus coupling) for every edge; agents on an
    /// edge must share the same dimension.
    pub fn identity(topology: &Topology, dims: &[usize]) -> Self {
        let edges = topology
            .oriented_edges()
            .iter()
            .map(|&(i, j)| {
                let d = dims[i - 1];
                debug_assert_eq!(d, dims[j - 1]);
                EdgeSelection {
                    dual_dim: d,
                    own: SelMat::identity(d),
                    other: SelMat::identity(d),
                }
            })
            .collect();
        SelectionMap { edges }
    }

    pub fn total_dual_dim(&self) -> usize {
        self.edges.iter().map(|e| e.dual_dim).sum()
    }
}

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("invalid cost atom: {0}")]
    InvalidAtom(&'static str),
    #[error("agent {agent}: {reason}")]
    InvalidLocal { agent: usize, reason: &'static str },
    #[error("expected {expected} local problems in agent order, found {found}")]
    LocalsMismatch { expected: usize, found: usize },
    #[error("edge {edge_index}: {reason}")]
    SelectionMismatch {
        edge_index: usize,
        reason: &'static str,
    },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("point lies outside the box of agent {agent}, coordinate {coord}")]
    OutsideBox { agent: usize, coord: usize },
    #[error("agent {agent}: local subproblem failed: {source}")]
    LocalSolve {
        agent: usize,
        #[source]
        source: OracleError,
    },
}

/// The full problem: topology, per-agent locals and selection matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProblemInstanceSerde", into = "ProblemInstanceSerde")]
pub struct ProblemInstance {
    topology: Topology,
    locals: Vec<LocalProblem>,
    selection: SelectionMap,
    // derived bookkeeping
    agent_offsets: Vec<usize>,
    edge_offsets: Vec<usize>,
    /// per agent: (edge index, whether the agent owns the edge)
    agent_edges: Vec<Vec<(usize, bool)>>,
    primal_dim: usize,
    dual_dim: usize,
}

#[derive(Serialize, Deserialize)]
struct ProblemInstanceSerde {
    topology: Topology,
    locals: Vec<LocalProblem>,
    selection: SelectionMap,
}

impl From<ProblemInstance> for ProblemInstanceSerde {
    fn from(p: ProblemInstance) -> Self {
        ProblemInstanceSerde {
            topology: p.topology,
            locals: p.locals,
            selection: p.selection,
        }
    }
}

impl TryFrom<ProblemInstanceSerde> for ProblemInstance {
    type Error = ProblemError;
    fn try_from(w: ProblemInstanceSerde) -> Result<Self, Self::Error> {
        ProblemInstance::new(w.topology, w.locals, w.selection)
    }
}

/// Result of a dual evaluation: the value `Q(λ)` and the primal witness.
#[derive(Debug, Clone)]
pub struct DualEval {
    pub value: f64,
    pub witness: Vec<f64>,
    /// True when any local minimizer was tie-broken (non-unique minimizer set).
    pub tie_broken: bool,
}

/// Outcome of the constraint-rank check (the checkable hypothesis for the
/// radial-unboundedness sufficient condition).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankReport {
    pub rank: usize,
    pub dual_dim: usize,
    pub full_row_rank: bool,
}

impl ProblemInstance {
    pub fn new(
        topology: Topology,
        locals: Vec<LocalProblem>,
        selection: SelectionMap,
    ) -> Result<Self, ProblemError> {
        if locals.len() != topology.num_agents() {
            return Err(ProblemError::LocalsMismatch {
                expected: topology.num_agents(),
                found: locals.len(),
            });
        }
        for (pos, local) in locals.iter().enumerate() {
            if local.agent != pos + 1 {
                return Err(ProblemError::InvalidLocal {
                    agent: local.agent,
                    reason: "locals must be listed in agent order 1..=N",
                });
            }
            local.validate()?;
        }
        if selection.edges.len() != topology.num_edges() {
            return Err(ProblemError::SelectionMismatch {
                edge_index: selection.edges.len().min(topology.num_edges()),
                reason: "one selection pair required per oriented edge",
            });
        }
        for (e, (sel, &(i, j))) in selection
            .edges
            .iter()
            .zip(topology.oriented_edges())
            .enumerate()
        {
            if sel.dual_dim == 0 {
                return Err(ProblemError::SelectionMismatch {
                    edge_index: e,
                    reason: "per-edge dual dimension must be at least 1",
                });
            }
            if sel.own.rows != sel.dual_dim || sel.other.rows != sel.dual_dim {
                return Err(ProblemError::SelectionMismatch {
                    edge_index: e,
                    reason: "selection row counts must equal the edge dual dimension",
                });
            }
            if sel.own.cols != locals[i - 1].dim || sel.other.cols != locals[j - 1].dim {
                return Err(ProblemError::SelectionMismatch {
                    edge_index: e,
                    reason: "selection column counts must match the endpoint dimensions",
                });
            }
        }

        let mut agent_offsets = Vec::with_capacity(locals.len() + 1);
        let mut acc = 0;
        for local in &locals {
            agent_offsets.push(acc);
            acc += local.dim;
        }
        agent_offsets.push(acc);
        let primal_dim = acc;

        let mut edge_offsets = Vec::with_capacity(selection.edges.len() + 1);
        let mut acc = 0;
        for sel in &selection.edges {
            edge_offsets.push(acc);
            acc += sel.dual_dim;
        }
        edge_offsets.push(acc);
        let dual_dim = acc;

        let mut agent_edges = vec![Vec::new(); topology.num_agents() + 1];
        for (e, &(i, j)) in topology.oriented_edges().iter().enumerate() {
            agent_edges[i].push((e, true));
            agent_edges[j].push((e, false));
        }

        Ok(ProblemInstance {
            topology,
            locals,
            selection,
            agent_offsets,
            edge_offsets,
            agent_edges,
            primal_dim,
            dual_dim,
        })
    }

    /// Scalar consensus problem: one scalar variable per agent, identity
    /// selections on every edge.
    pub fn consensus(
        topology: Topology,
        locals: Vec<LocalProblem>,
    ) -> Result<Self, ProblemError> {
        let dims: Vec<usize> = locals.iter().map(|l| l.dim).collect();
        let selection = SelectionMap::identity(&topology, &dims);
        Self::new(topology, locals, selection)
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn locals(&self) -> &[LocalProblem] {
        &self.locals
    }

    pub fn selection(&self) -> &SelectionMap {
        &self.selection
    }

    /// Total primal dimension `n`.
    pub fn primal_dim(&self) -> usize {
        self.primal_dim
    }

    /// Total dual dimension `n̄`.
    pub fn dual_dim(&self) -> usize {
        self.dual_dim
    }

    pub fn num_edges(&self) -> usize {
        self.selection.edges.len()
    }

    /// Range of agent `i`'s coordinates in a stacked primal vector.
    pub fn agent_range(&self, agent: usize) -> std::ops::Range<usize> {
        self.agent_offsets[agent - 1]..self.agent_offsets[agent]
    }

    /// Range of edge `e`'s block in a stacked dual vector (0-based edge index).
    pub fn edge_range(&self, edge: usize) -> std::ops::Range<usize> {
        self.edge_offsets[edge]..self.edge_offsets[edge + 1]
    }

    /// True when the problem is a scalar identity-selection consensus problem.
    pub fn is_scalar_consensus(&self) -> bool {
        self.locals.iter().all(|l| l.dim == 1)
            && self
                .selection
                .edges
                .iter()
                .all(|s| s.dual_dim == 1 && s.own.data == [1.0] && s.other.data == [1.0])
    }

    fn check_dual_dim(&self, lambda: &[f64]) -> Result<(), ProblemError> {
        if lambda.len() != self.dual_dim {
            return Err(ProblemError::DimensionMismatch {
                expected: self.dual_dim,
                got: lambda.len(),
            });
        }
        Ok(())
    }

    fn check_primal_dim(&self, x: &[f64]) -> Result<(), ProblemError> {
        if x.len() != self.primal_dim {
            return Err(ProblemError::DimensionMismatch {
                expected: self.primal_dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Linear coefficient `c_i(λ)` of agent `i`'s local subproblem, so that
    /// `l_i(x, λ) = F_i(x) + ⟨c_i, x⟩`. Owned edges contribute `+Eᵀλ`, edges
    /// owned by a lower-indexed neighbor contribute `−Eᵀλ`.
    pub fn local_linear_coefficient(
        &self,
        agent: usize,
        lambda: &[f64],
    ) -> Result<Vec<f64>, ProblemError> {
        self.check_dual_dim(lambda)?;
        let mut c = vec![0.0; self.locals[agent - 1].dim];
        self.local_linear_coefficient_into(agent, lambda, &mut c);
        Ok(c)
    }

    pub(crate) fn local_linear_coefficient_into(
        &self,
        agent: usize,
        lambda: &[f64],
        out: &mut [f64],
    ) {
        out.fill(0.0);
        for &(e, owns) in &self.agent_edges[agent] {
            let sel = &self.selection.edges[e];
            if owns {
                sel.own.tr_mul_acc(&lambda[self.edge_range(e)], 1.0, out);
            } else {
                sel.other.tr_mul_acc(&lambda[self.edge_range(e)], -1.0, out);
            }
        }
    }

    /// Stacked constraint residual `E(x)`: for every edge `(i, j)` the block
    /// `E_ij x_(i) − E_ji x_(j)`, in edge order.
    pub fn constraint_residual(&self, x: &[f64]) -> Result<Vec<f64>, ProblemError> {
        self.check_primal_dim(x)?;
        let mut r = vec![0.0; self.dual_dim];
        self.constraint_residual_into(x, &mut r);
        Ok(r)
    }

    pub(crate) fn constraint_residual_into(&self, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (e, (&(i, j), sel)) in self
            .topology
            .oriented_edges()
            .iter()
            .zip(&self.selection.edges)
            .enumerate()
        {
            let range = self.edge_range(e);
            sel.own.mul_acc(&x[self.agent_range(i)], 1.0, &mut out[range.clone()]);
            sel.other.mul_acc(&x[self.agent_range(j)], -1.0, &mut out[range]);
        }
    }

    /// Total primal cost `F(x) = Σ F_i(x_(i))` (regularizers included).
    pub fn primal_cost(&self, x: &[f64]) -> Result<f64, ProblemError> {
        self.check_primal_dim(x)?;
        Ok(self
            .locals
            .iter()
            .map(|l| l.cost(&x[self.agent_range(l.agent)]))
            .sum())
    }

    /// `L(x, λ) = F(x) + ⟨λ, E(x)⟩`, with box membership enforced.
    pub fn evaluate_lagrangian(&self, x: &[f64], lambda: &[f64]) -> Result<f64, ProblemError> {
        self.check_primal_dim(x)?;
        self.check_dual_dim(lambda)?;
        for local in &self.locals {
            let xs = &x[self.agent_range(local.agent)];
            for (coord, (&xi, iv)) in xs.iter().zip(&local.box_set).enumerate() {
                if !iv.contains(xi) {
                    return Err(ProblemError::OutsideBox {
                        agent: local.agent,
                        coord,
                    });
                }
            }
        }
        let residual = self.constraint_residual(x)?;
        let coupling: f64 = lambda.iter().zip(&residual).map(|(l, r)| l * r).sum();
        Ok(self.primal_cost(x)? + coupling)
    }

    /// Evaluates the dual function: `Q(λ) = Σ_i min_{x_i ∈ X_i} l_i(x_i, λ)`,
    /// returning the value and the concatenated minimizer witness.
    ///
    /// Agents are reduced in index order so the result is reproducible.
    /// An unbounded-below local subproblem is reported with the agent index.
    pub fn evaluate_dual(&self, lambda: &[f64]) -> Result<DualEval, ProblemError> {
        self.check_dual_dim(lambda)?;
        let mut witness = vec![0.0; self.primal_dim];
        let mut value = 0.0;
        let mut tie_broken = false;
        let mut coeff = Vec::new();
        for local in &self.locals {
            coeff.resize(local.dim, 0.0);
            self.local_linear_coefficient_into(local.agent, lambda, &mut coeff);
            let sol = oracle::solve_local(local, &coeff).map_err(|source| {
                ProblemError::LocalSolve {
                    agent: local.agent,
                    source,
                }
            })?;
            value += sol.value;
            tie_broken |= sol.tie_broken;
            witness[self.agent_range(local.agent)].copy_from_slice(&sol.minimizer);
        }
        Ok(DualEval {
            value,
            witness,
            tie_broken,
        })
    }

    /// Stacks all coupling constraints into `H x = 0` and reports the numeric
    /// row rank of `H` (tolerance `1e−10 ·` largest singular value).
    ///
    /// Full row rank is the checkable hypothesis of the radial-unboundedness
    /// condition; the interior condition on the projected box sets is not
    /// machine-checked and remains a documented manual assumption.
    pub fn check_constraint_rank(&self) -> RankReport {
        if self.dual_dim == 0 {
            return RankReport {
                rank: 0,
                dual_dim: 0,
                full_row_rank: true,
            };
        }
        let mut h = nalgebra::DMatrix::<f64>::zeros(self.dual_dim, self.primal_dim);
        for (e, (&(i, j), sel)) in self
            .topology
            .oriented_edges()
            .iter()
            .zip(&self.selection.edges)
            .enumerate()
        {
            let row0 = self.edge_offsets[e];
            let ci = self.agent_offsets[i - 1];
            for r in 0..sel.dual_dim {
                for c in 0..sel.own.cols {
                    h[(row0 + r, ci + c)] += sel.own.data[r * sel.own.cols + c];
                }
            }
            let cj = self.agent_offsets[j - 1];
            for r in 0..sel.dual_dim {
                for c in 0..sel.other.cols {
                    h[(row0 + r, cj + c)] -= sel.other.data[r * sel.other.cols + c];
                }
            }
        }
        let sv = h.singular_values();
        let max_sv = sv.iter().cloned().fold(0.0f64, f64::max);
        let tol = 1e-10 * max_sv;
        let rank = sv.iter().filter(|&&s| s > tol).count();
        RankReport {
            rank,
            dual_dim: self.dual_dim,
            full_row_rank: rank == self.dual_dim,
        }
    }

    /// A priori supergradient norm bound on compact boxes: per edge,
    /// `|E_ij x_i − E_ji x_j| ≤ ‖E_ij‖·r_i + ‖E_ji‖·r_j` with `r_i` the norm
    /// radius of the box. `None` when any box is unbounded.
    pub fn supergradient_norm_bound(&self) -> Option<f64> {
        let radii: Vec<f64> = self
            .locals
            .iter()
            .map(|l| {
                l.box_set
                    .iter()
                    .map(|iv| {
                        if !iv.is_bounded() {
                            f64::INFINITY
                        } else {
                            iv.lower().abs().max(iv.upper().abs()).powi(2)
                        }
                    })
                    .sum::<f64>()
                    .sqrt()
            })
            .collect();
        if radii.iter().any(|r| !r.is_finite()) {
            return None;
        }
        let mut total = 0.0;
        for (&(i, j), sel) in self.topology.oriented_edges().iter().zip(&self.selection.edges) {
            let b = sel.own.frobenius() * radii[i - 1] + sel.other.frobenius() * radii[j - 1];
            total += b * b;
        }
        Some(total.sqrt())
    }
}
