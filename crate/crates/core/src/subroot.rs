//! Sub-root functions and their fixed points.
//!
//! A sub-root function is nonnegative, nondecreasing, with `psi(r)/sqrt(r)`
//! nonincreasing; such a function has a unique positive fixed point `r*` and
//! the iteration `r_{k+1} = psi(r_k)` started at any `r_0 >= r*` decreases
//! monotonically to it at a doubly exponential rate:
//! `r_N <= (r_0 / r*)^(2^-N) r*`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::real::Real;

/// A nonnegative nondecreasing map `r -> psi(r)` with `psi(r)/sqrt(r)`
/// nonincreasing, wrapped behind a closure so formulas, tabulated curves and
/// localized-average computations share one interface.
pub struct SubRootEvaluator<R: Real> {
    eval: Box<dyn Fn(R) -> R + Send + Sync>,
    domain_lo: R,
}

impl<R: Real> SubRootEvaluator<R> {
    /// Wrap an arbitrary closure. The closure is trusted to be sub-root;
    /// `check_subroot` verifies it on a grid.
    pub fn from_fn(domain_lo: R, eval: impl Fn(R) -> R + Send + Sync + 'static) -> Self {
        Self { eval: Box::new(eval), domain_lo: domain_lo.max(R::min_positive_value()) }
    }

    /// `psi(r) = a sqrt(r) + b` with `a, b >= 0`.
    pub fn affine_sqrt(a: R, b: R) -> Self {
        Self::from_fn(R::min_positive_value(), move |r| a * r.sqrt() + b)
    }

    /// `psi(r) = slope * sqrt(r)`.
    pub fn scaled_sqrt(slope: R) -> Self {
        Self::affine_sqrt(slope, R::zero())
    }

    /// Sub-root interpolation through tabulated nodes `(r_i, psi_i)`.
    ///
    /// The interpolant holds each node value flat until the sub-root branch
    /// through the next node catches up: on `[r_i, r_{i+1}]` it evaluates
    /// `max(psi_i, s_{i+1} sqrt(r))` with `s_j = psi_j / sqrt(r_j)`. Nodes
    /// that themselves violate monotonicity (e.g. Monte Carlo wobble) are
    /// first lifted to their minimal dominating sub-root envelope, so the
    /// result is always sub-root and never falls below the data.
    pub fn tabulated(nodes: &[(R, R)]) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::Precondition("tabulated curve needs at least one node".into()));
        }
        let mut rs = Vec::with_capacity(nodes.len());
        let mut vs = Vec::with_capacity(nodes.len());
        for &(r, v) in nodes {
            if r <= R::zero() || !r.is_finite() {
                return Err(Error::Precondition("node radii must be positive and finite".into()));
            }
            if v < R::zero() || !v.is_finite() {
                return Err(Error::Precondition("node values must be nonnegative".into()));
            }
            if let Some(&prev) = rs.last() {
                if r <= prev {
                    return Err(Error::Precondition("node radii must be strictly increasing".into()));
                }
            }
            rs.push(r);
            vs.push(v);
        }
        // Dominating sub-root envelope of the nodes: nondecreasing values,
        // then nonincreasing slopes (suffix maxima), which together keep the
        // implied node values nondecreasing as well.
        for i in 1..vs.len() {
            vs[i] = vs[i].max(vs[i - 1]);
        }
        let mut slopes: Vec<R> = rs.iter().zip(&vs).map(|(r, v)| *v / r.sqrt()).collect();
        for i in (0..slopes.len().saturating_sub(1)).rev() {
            slopes[i] = slopes[i].max(slopes[i + 1]);
        }
        let values: Vec<R> = rs.iter().zip(&slopes).map(|(r, s)| *s * r.sqrt()).collect();
        let lo = rs[0];
        Ok(Self::from_fn(R::min_positive_value(), move |r| {
            if r <= rs[0] {
                return slopes[0] * r.sqrt();
            }
            match rs.iter().rposition(|&node| node <= r) {
                Some(i) if i + 1 < rs.len() => values[i].max(slopes[i + 1] * r.sqrt()),
                _ => slopes[rs.len() - 1] * r.sqrt(),
            }
        })
        .with_domain_lo(lo))
    }

    fn with_domain_lo(mut self, lo: R) -> Self {
        self.domain_lo = lo.max(R::min_positive_value());
        self
    }

    /// Evaluate, clamping the query below `domain_lo`.
    pub fn eval(&self, r: R) -> R {
        (self.eval)(r.max(self.domain_lo))
    }

    pub fn domain_lo(&self) -> R {
        self.domain_lo
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SubRootViolationKind {
    Negative,
    Decreasing,
    RatioIncreasing,
}

#[derive(Debug, Clone, Serialize)]
#[serde(bound(serialize = "R: Serialize"))]
pub struct SubRootViolation<R: Real> {
    pub kind: SubRootViolationKind,
    pub r_left: R,
    pub r_right: R,
    pub magnitude: R,
}

#[derive(Debug, Clone, Serialize)]
#[serde(bound(serialize = "R: Serialize"))]
pub struct SubRootReport<R: Real> {
    pub violations: Vec<SubRootViolation<R>>,
    pub checked_points: usize,
    pub tolerance: R,
}

impl<R: Real> SubRootReport<R> {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Verify nonnegativity, monotonicity and `psi(r)/sqrt(r)` monotonicity on a
/// strictly increasing positive grid, within `1e-9` plus `extra_tolerance`
/// (for stochastic evaluators).
pub fn check_subroot<R: Real>(
    psi: &SubRootEvaluator<R>,
    grid: &[R],
    extra_tolerance: R,
) -> Result<SubRootReport<R>> {
    if grid.is_empty() {
        return Err(Error::Precondition("check grid must be nonempty".into()));
    }
    if grid.iter().any(|r| *r <= R::zero()) {
        return Err(Error::Precondition("check grid must be positive".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Precondition("check grid must be strictly increasing".into()));
    }
    let tol = R::of(1e-9) + extra_tolerance;
    let mut violations = Vec::new();
    let values: Vec<R> = grid.iter().map(|&r| psi.eval(r)).collect();
    for (i, (&r, &v)) in grid.iter().zip(&values).enumerate() {
        if v < -tol {
            violations.push(SubRootViolation {
                kind: SubRootViolationKind::Negative,
                r_left: r,
                r_right: r,
                magnitude: -v,
            });
        }
        if i + 1 < grid.len() {
            let (r2, v2) = (grid[i + 1], values[i + 1]);
            if v2 < v - tol {
                violations.push(SubRootViolation {
                    kind: SubRootViolationKind::Decreasing,
                    r_left: r,
                    r_right: r2,
                    magnitude: v - v2,
                });
            }
            let ratio1 = v / r.sqrt();
            let ratio2 = v2 / r2.sqrt();
            if ratio2 > ratio1 + tol {
                violations.push(SubRootViolation {
                    kind: SubRootViolationKind::RatioIncreasing,
                    r_left: r,
                    r_right: r2,
                    magnitude: ratio2 - ratio1,
                });
            }
        }
    }
    Ok(SubRootReport { violations, checked_points: grid.len(), tolerance: tol })
}

/// Outcome of the fixed-point iteration `r_{k+1} = psi(r_k)`.
#[derive(Debug, Clone, Serialize)]
#[serde(bound(serialize = "R: Serialize"))]
pub struct FixedPointResult<R: Real> {
    /// Last iterate; at most a relative `epsilon` above the previous one and
    /// never below the fixed point when `r_0 >= r*`.
    pub r_star: R,
    pub iterations: usize,
    pub trace: Vec<R>,
    pub epsilon: R,
    pub converged: bool,
}

/// Iterate `r_{k+1} = psi(r_k)` from `r0 >= r*` until the relative gap
/// `r_k - r_{k+1} <= epsilon r_{k+1}`, recording the trace.
///
/// An increasing step signals `r0 < r*` (or a non-sub-root evaluator) and is
/// reported as a diagnostic error; use `solve_fixed_point` to certify the
/// starting point first.
pub fn fixed_point_iterate<R: Real>(
    psi: &SubRootEvaluator<R>,
    r0: R,
    epsilon: R,
    max_iter: usize,
) -> Result<FixedPointResult<R>> {
    if epsilon <= R::zero() {
        return Err(Error::Precondition("epsilon must be positive".into()));
    }
    if r0 < R::zero() || !r0.is_finite() {
        return Err(Error::Precondition("r0 must be nonnegative and finite".into()));
    }
    let slack = R::epsilon() * R::of(64.0);
    let mut trace = vec![r0];
    let mut current = r0;
    for k in 0..max_iter {
        let next = psi.eval(current);
        trace.push(next);
        if next > current * (R::one() + slack) + slack {
            return Err(Error::Numeric(format!(
                "iterate increased from {current} to {next} at step {k}: r0 is below the fixed point or the evaluator is not sub-root"
            )));
        }
        if current - next <= epsilon * next {
            return Ok(FixedPointResult {
                r_star: next,
                iterations: k + 1,
                trace,
                epsilon,
                converged: true,
            });
        }
        current = next;
    }
    Ok(FixedPointResult {
        r_star: current,
        iterations: max_iter,
        trace,
        epsilon,
        converged: false,
    })
}

/// Default relative accuracy of fixed-point solves.
pub const DEFAULT_EPSILON: f64 = 1e-6;
/// Default iteration budget; the doubly exponential rate makes this generous.
pub const DEFAULT_MAX_ITER: usize = 64;

/// Fixed-point solve with a certified starting point: `hint` is grown
/// geometrically until `psi(r0) <= r0`, which guarantees `r0 >= r*`, then the
/// monotone iteration runs.
pub fn solve_fixed_point<R: Real>(
    psi: &SubRootEvaluator<R>,
    hint: R,
    epsilon: R,
    max_iter: usize,
) -> Result<FixedPointResult<R>> {
    let mut r0 = hint.max(psi.domain_lo());
    let mut expansions = 0;
    while psi.eval(r0) > r0 {
        r0 *= R::of(4.0);
        expansions += 1;
        if expansions > 600 || !r0.is_finite() {
            return Err(Error::Numeric(
                "could not certify a starting point above the fixed point".into(),
            ));
        }
    }
    fixed_point_iterate(psi, r0, epsilon, max_iter)
}

/// Iteration count that guarantees `r_N <= (1 + epsilon) r*` from `r0`:
/// the smallest `N >= log2(ln(r0/r*) / ln(1+epsilon))`.
pub fn lemma61_iterations<R: Real>(r0: R, r_star: R, epsilon: R) -> usize {
    if r0 <= r_star || r_star <= R::zero() || epsilon <= R::zero() {
        return 0;
    }
    let needed = ((r0 / r_star).ln() / (R::one() + epsilon).ln()).log2();
    let zero = R::zero();
    if needed <= zero {
        return 0;
    }
    needed.ceil().to_usize().unwrap_or(usize::MAX)
}

/// Smallest sub-root function dominating an arbitrary nonnegative curve on a
/// grid: `psi(r) = sqrt(r) * sup_i phi(r_i) / sqrt(r_i)`.
pub fn subrootify<R: Real>(phi: &[R], grid: &[R]) -> Result<SubRootEvaluator<R>> {
    if phi.len() != grid.len() || grid.is_empty() {
        return Err(Error::Dimension(format!(
            "{} curve values vs {} grid points",
            phi.len(),
            grid.len()
        )));
    }
    if grid.iter().any(|r| *r <= R::zero()) {
        return Err(Error::Precondition("grid must be positive".into()));
    }
    if phi.iter().any(|v| *v < R::zero()) {
        return Err(Error::Precondition("curve must be nonnegative".into()));
    }
    let slope = phi
        .iter()
        .zip(grid)
        .map(|(v, r)| *v / r.sqrt())
        .fold(R::zero(), |m, s| m.max(s));
    Ok(SubRootEvaluator::scaled_sqrt(slope))
}

/// Fixed points of two ordered sub-root functions.
///
/// If `alpha psi_hat(r*) <= psi(r*) <= psi_hat(r*)` at the fixed point `r*`
/// of `psi`, then `alpha^2 r_hat* <= r* <= r_hat*`.
#[derive(Debug, Clone, Serialize)]
#[serde(bound(serialize = "R: Serialize"))]
pub struct FixedPointComparison<R: Real> {
    pub r_star: R,
    pub r_hat_star: R,
    pub alpha: R,
    pub psi_at_r_star: R,
    pub psi_hat_at_r_star: R,
    pub hypothesis_holds: bool,
    pub sandwich_holds: bool,
}

pub fn compare_fixed_points<R: Real>(
    psi: &SubRootEvaluator<R>,
    psi_hat: &SubRootEvaluator<R>,
    alpha: R,
    hint: R,
    epsilon: R,
) -> Result<FixedPointComparison<R>> {
    if alpha < R::zero() || alpha > R::one() {
        return Err(Error::Precondition("alpha must lie in [0, 1]".into()));
    }
    let fp = solve_fixed_point(psi, hint, epsilon, DEFAULT_MAX_ITER)?;
    let fp_hat = solve_fixed_point(psi_hat, hint, epsilon, DEFAULT_MAX_ITER)?;
    let r_star = fp.r_star;
    let r_hat_star = fp_hat.r_star;
    let psi_v = psi.eval(r_star);
    let psi_hat_v = psi_hat.eval(r_star);
    let tol = R::of(1e-9) * (R::one() + psi_hat_v.abs());
    let hypothesis_holds = alpha * psi_hat_v <= psi_v + tol && psi_v <= psi_hat_v + tol;
    let sandwich_tol = R::of(1e-9) * (R::one() + r_hat_star.abs());
    let sandwich_holds =
        alpha * alpha * r_hat_star <= r_star + sandwich_tol && r_star <= r_hat_star + sandwich_tol;
    Ok(FixedPointComparison {
        r_star,
        r_hat_star,
        alpha,
        psi_at_r_star: psi_v,
        psi_hat_at_r_star: psi_hat_v,
        hypothesis_holds,
        sandwich_holds,
    })
}

/// Fixed point of `psi(r) = a sqrt(r) + b` in closed form: the positive root
/// of `u^2 - a u - b` squared.
pub fn affine_sqrt_fixed_point<R: Real>(a: R, b: R) -> R {
    let disc = (a * a + R::of(4.0) * b).sqrt();
    let u = (a + disc) * R::half();
    u * u
}
