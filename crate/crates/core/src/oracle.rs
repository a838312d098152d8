//! Exact minimizers of the local subproblems.
//!
//! Every dual evaluation reduces to per-agent, per-coordinate scalar
//! minimizations of `atom(x) + ρx² + c·x` over an interval. Each supported
//! cost family has a closed form; coordinates carrying several atoms fall
//! back to a bisection on the subgradient sign over a bounded interval.
//!
//! Minimizer sets can be non-unique (a hinge with a boundary linear term, a
//! flat linear piece). Any minimizer is a valid witness for the dual
//! supergradient, so ties only need a deterministic rule: they are broken to
//! the hinge knee (or to the zero-clamped point for flat linear pieces) and
//! flagged via `tie_broken`.

use thiserror::Error;

use crate::problem::{CostAtom, Interval, LocalProblem};

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("subproblem is unbounded below on coordinate {coord}")]
    UnboundedBelow { coord: usize },
    #[error("entropy atom requires a strictly positive lower bound")]
    InvalidEntropyBox,
    #[error("fallback solver requires a bounded interval on coordinate {coord}")]
    UnboundedFallbackBox { coord: usize },
    #[error("bisection did not reach tolerance {tol} in {iters} iterations")]
    ToleranceNotReached { tol: f64, iters: usize },
}

/// A scalar solve: the minimizer, its objective value and a tie flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarSolve {
    pub x: f64,
    pub value: f64,
    pub tie_broken: bool,
}

/// A full local solve across all coordinates of one agent.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub minimizer: Vec<f64>,
    /// `l_i(x*, λ) = F_i(x*) + ⟨c, x*⟩`, regularizer included.
    pub value: f64,
    pub tie_broken: bool,
}

/// Minimizes `(w/2)(x − a)² + ρx² + c·x` over the interval. Requires
/// `w + 2ρ > 0`; the minimizer is unique.
pub fn solve_quadratic(w: f64, a: f64, iv: Interval, c: f64, rho: f64) -> ScalarSolve {
    debug_assert!(w + 2.0 * rho > 0.0);
    let x = iv.clamp((w * a - c) / (w + 2.0 * rho));
    ScalarSolve {
        x,
        value: 0.5 * w * (x - a) * (x - a) + rho * x * x + c * x,
        tie_broken: false,
    }
}

/// Minimizes `max{−w(x − a) + b, b} + ρx² + c·x` over the interval.
///
/// For `ρ = 0` the objective is piecewise linear with slopes `c − w` left of
/// the knee and `c` right of it: `c ∈ (0, w)` puts the minimizer at the knee,
/// `c < 0` at the upper bound, `c > w` at the lower bound, and `c ∈ {0, w}`
/// leaves a flat piece that is tie-broken to the knee. For `ρ > 0` the two
/// quadratic pieces are compared exactly.
pub fn solve_hinge(
    w: f64,
    a: f64,
    b: f64,
    iv: Interval,
    c: f64,
    rho: f64,
) -> Result<ScalarSolve, OracleError> {
    debug_assert!(w > 0.0);
    let obj = |x: f64| (-w * (x - a) + b).max(b) + rho * x * x + c * x;
    if rho > 0.0 {
        // vertex of each quadratic piece, clamped to the piece's domain
        let mut best: Option<(f64, f64)> = None;
        let mut consider = |x: f64| {
            if iv.contains(x) {
                let v = obj(x);
                if best.is_none_or(|(_, bv)| v < bv) {
                    best = Some((x, v));
                }
            }
        };
        let left_hi = a.min(iv.upper());
        if iv.lower() <= left_hi {
            consider(((w - c) / (2.0 * rho)).max(iv.lower()).min(left_hi));
        }
        let right_lo = a.max(iv.lower());
        if right_lo <= iv.upper() {
            consider(((-c) / (2.0 * rho)).max(right_lo).min(iv.upper()));
        }
        consider(iv.clamp(a));
        let (x, value) = best.expect("non-empty interval");
        return Ok(ScalarSolve {
            x,
            value,
            tie_broken: false,
        });
    }

    if c < 0.0 {
        // both slopes negative beyond the knee: descend to the upper bound
        if iv.upper().is_infinite() {
            return Err(OracleError::UnboundedBelow { coord: 0 });
        }
        let x = iv.upper();
        return Ok(ScalarSolve {
            x,
            value: obj(x),
            tie_broken: false,
        });
    }
    if c > w {
        if iv.lower().is_infinite() {
            return Err(OracleError::UnboundedBelow { coord: 0 });
        }
        let x = iv.lower();
        return Ok(ScalarSolve {
            x,
            value: obj(x),
            tie_broken: false,
        });
    }
    // 0 ∈ [c − w, c]: the knee minimizes; clamping stays optimal when the
    // knee lies outside the interval because the active slope keeps its sign
    let x = iv.clamp(a);
    Ok(ScalarSolve {
        x,
        value: obj(x),
        tie_broken: c == 0.0 || c == w,
    })
}

/// Minimizes `x·log(p·x) + c·x` over an interval with positive lower bound.
/// Stationarity gives `x̂ = e^{−(1+c)}/p`, clamped to the interval.
pub fn solve_entropy(p: f64, iv: Interval, c: f64) -> Result<ScalarSolve, OracleError> {
    debug_assert!(p > 0.0);
    if iv.lower() <= 0.0 {
        return Err(OracleError::InvalidEntropyBox);
    }
    let x = iv.clamp((-(1.0 + c)).exp() / p);
    Ok(ScalarSolve {
        x,
        value: x * (p * x).ln() + c * x,
        tie_broken: false,
    })
}

/// Minimizes `coeff·x + ρx² + c·x` over the interval.
fn solve_linear(coeff: f64, iv: Interval, c: f64, rho: f64) -> Result<ScalarSolve, OracleError> {
    if rho > 0.0 {
        let x = iv.clamp(-(coeff + c) / (2.0 * rho));
        return Ok(ScalarSolve {
            x,
            value: (coeff + c) * x + rho * x * x,
            tie_broken: false,
        });
    }
    let slope = coeff + c;
    let (x, tie) = if slope > 0.0 {
        if iv.lower().is_infinite() {
            return Err(OracleError::UnboundedBelow { coord: 0 });
        }
        (iv.lower(), false)
    } else if slope < 0.0 {
        if iv.upper().is_infinite() {
            return Err(OracleError::UnboundedBelow { coord: 0 });
        }
        (iv.upper(), false)
    } else {
        // flat objective: deterministic representative
        (iv.clamp(0.0), true)
    };
    Ok(ScalarSolve {
        x,
        value: slope * x,
        tie_broken: tie,
    })
}

const BISECTION_MAX_ITERS: usize = 200;
const BISECTION_X_TOL: f64 = 1e-12;

/// Minimizes a sum of convex atoms plus `ρx² + c·x` over a bounded interval
/// by bisection on the subgradient sign, then compares knees and endpoints.
pub fn solve_scalar_fallback(
    atoms: &[CostAtom],
    iv: Interval,
    c: f64,
    rho: f64,
) -> Result<ScalarSolve, OracleError> {
    if !iv.is_bounded() {
        return Err(OracleError::UnboundedFallbackBox { coord: 0 });
    }
    let value = |x: f64| -> f64 {
        atoms.iter().map(|a| a.value(x)).sum::<f64>() + rho * x * x + c * x
    };
    let sub = |x: f64| -> (f64, f64) {
        let mut lo = rho * 2.0 * x + c;
        let mut hi = lo;
        for a in atoms {
            let (gl, gh) = a.subgradient(x);
            lo += gl;
            hi += gh;
        }
        (lo, hi)
    };

    let (mut lo, mut hi) = (iv.lower(), iv.upper());
    let mut reached = (hi - lo) <= BISECTION_X_TOL;
    for _ in 0..BISECTION_MAX_ITERS {
        if hi - lo <= BISECTION_X_TOL {
            reached = true;
            break;
        }
        let mid = 0.5 * (lo + hi);
        let (gl, gh) = sub(mid);
        if gl > 0.0 {
            hi = mid;
        } else if gh < 0.0 {
            lo = mid;
        } else {
            // 0 in the subdifferential: interior minimizer found
            lo = mid;
            hi = mid;
            reached = true;
            break;
        }
    }
    if !reached {
        return Err(OracleError::ToleranceNotReached {
            tol: BISECTION_X_TOL,
            iters: BISECTION_MAX_ITERS,
        });
    }

    // knee/endpoint comparison pins the exact minimizer among candidates
    let mut candidates = vec![0.5 * (lo + hi), iv.lower(), iv.upper()];
    for a in atoms {
        if let CostAtom::Hinge { knee, .. } = a {
            if iv.contains(*knee) {
                candidates.push(*knee);
            }
        }
    }
    let mut best = (candidates[0], value(candidates[0]));
    for &x in &candidates[1..] {
        let v = value(x);
        if v < best.1 {
            best = (x, v);
        }
    }
    Ok(ScalarSolve {
        x: best.0,
        value: best.1,
        tie_broken: false,
    })
}

/// Solves one coordinate given the atoms that act on it.
fn solve_coordinate(
    atoms: &[CostAtom],
    iv: Interval,
    c: f64,
    rho: f64,
) -> Result<ScalarSolve, OracleError> {
    // affine atoms fold into the linear coefficient exactly
    let mut folded_c = c;
    let mut rest: Vec<CostAtom> = Vec::new();
    for a in atoms {
        if let CostAtom::Affine { coeff } = a {
            folded_c += coeff;
        } else {
            rest.push(*a);
        }
    }
    // the folded objective equals the original one, value included:
    // affine(x) + c·x = folded_c·x
    match rest.as_slice() {
        [] => solve_linear(0.0, iv, folded_c, rho),
        [CostAtom::Quadratic { weight, center }] => {
            Ok(solve_quadratic(*weight, *center, iv, folded_c, rho))
        }
        [CostAtom::Hinge {
            slope,
            knee,
            offset,
        }] => solve_hinge(*slope, *knee, *offset, iv, folded_c, rho),
        [CostAtom::Entropy { scale }] if rho == 0.0 => solve_entropy(*scale, iv, folded_c),
        _ => solve_scalar_fallback(&rest, iv, folded_c, rho),
    }
}

/// Minimizes `l_i(x, λ) = F_i(x) + ⟨c, x⟩` over the agent's box, coordinate
/// by coordinate (atoms act coordinatewise, so the problem separates).
pub fn solve_local(local: &LocalProblem, c: &[f64]) -> Result<OracleResult, OracleError> {
    debug_assert_eq!(c.len(), local.dim);
    let mut minimizer = vec![0.0; local.dim];
    let mut value = 0.0;
    let mut tie_broken = false;
    let mut scratch: Vec<CostAtom> = Vec::new();
    for coord in 0..local.dim {
        scratch.clear();
        scratch.extend(
            local
                .atoms
                .iter()
                .filter(|(d, _)| *d == coord)
                .map(|(_, a)| *a),
        );
        let solve = solve_coordinate(&scratch, local.box_set[coord], c[coord], local.regularizer)
            .map_err(|e| match e {
                OracleError::UnboundedBelow { .. } => OracleError::UnboundedBelow { coord },
                OracleError::UnboundedFallbackBox { .. } => {
                    OracleError::UnboundedFallbackBox { coord }
                }
                other => other,
            })?;
        minimizer[coord] = solve.x;
        value += solve.value;
        tie_broken |= solve.tie_broken;
    }
    Ok(OracleResult {
        minimizer,
        value,
        tie_broken,
    })
}
