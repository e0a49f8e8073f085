//! Classification with the discrete loss: loss tables, the exact identity
//! relating localized loss averages to sign-fitting, the weighted-ERM
//! Lagrangian `J(mu)`, and the computable upper bound on the localized loss
//! complexity built from a grid of `J(mu)` values.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::bounds::{cor62_default_coefficients, BoundReport, TheoremId};
use crate::empirical::{SampleSet, SigmaVector, TabulatedClass};
use crate::error::{Error, Result};
use crate::rademacher::{
    loss_alpha_grid, loss_star_hull_local_conditional, SigmaGrayWalk, SigmaMode,
    DEFAULT_SIGMA_DRAWS, ENUMERATION_CAP,
};
use crate::real::Real;
use crate::rng::{derive_seed, seeded_rng, STREAM_SIGMA};
use crate::subroot::{solve_fixed_point, FixedPointResult, SubRootEvaluator, DEFAULT_MAX_ITER};

/// Default number of sign draws for the localized-complexity upper bound
/// above the enumeration cap.
pub const THM63_SIGMA_DRAWS: usize = 1024;

/// Labeled observations: ground-point indices and `±1` targets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledSample {
    xs: Vec<usize>,
    ys: Vec<i8>,
}

impl LabeledSample {
    pub fn new(xs: Vec<usize>, ys: Vec<i8>) -> Result<Self> {
        if xs.is_empty() || xs.len() != ys.len() {
            return Err(Error::Dimension(format!(
                "{} observations vs {} labels (both must be positive and equal)",
                xs.len(),
                ys.len()
            )));
        }
        if ys.iter().any(|y| *y != 1 && *y != -1) {
            return Err(Error::Precondition("labels must be exactly ±1".into()));
        }
        Ok(Self { xs, ys })
    }

    pub fn n(&self) -> usize {
        self.xs.len()
    }

    pub fn xs(&self) -> &[usize] {
        &self.xs
    }

    pub fn ys(&self) -> &[i8] {
        &self.ys
    }

    pub fn sample_set(&self) -> SampleSet {
        SampleSet::new(self.xs.clone(), self.xs.iter().max().map_or(1, |m| m + 1), 0)
            .expect("nonempty by construction")
    }
}

/// Exact minimizer source for weighted classification error.
#[derive(Debug, Clone)]
pub enum ErmOracle<R: Real> {
    /// A finite table of `±1`-valued predictors over ground points.
    FiniteClass(TabulatedClass<R>),
    /// All `2(n+1)` threshold/polarity stumps over a one-dimensional feature
    /// (one feature value per ground point).
    ThresholdStumps { features: Vec<R> },
}

/// Identifier of a weighted-ERM minimizer.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound(serialize = "R: Serialize"))]
pub enum ErmMinimizer<R: Real> {
    Row(usize),
    Stump { threshold: R, polarity: i8 },
}

impl<R: Real> ErmOracle<R> {
    /// Materialize every candidate predictor's `±1` values at the sample
    /// positions, in a deterministic order.
    fn candidates(&self, xs: &[usize]) -> Result<Vec<(ErmMinimizer<R>, Vec<i8>)>> {
        match self {
            ErmOracle::FiniteClass(class) => {
                let mut out = Vec::with_capacity(class.num_functions());
                for j in 0..class.num_functions() {
                    let row = class.row(j);
                    let mut preds = Vec::with_capacity(xs.len());
                    for &x in xs {
                        if x >= row.len() {
                            return Err(Error::Dimension(format!(
                                "observation index {x} out of range for a class over {} points",
                                row.len()
                            )));
                        }
                        let v = row[x];
                        if v == R::one() {
                            preds.push(1);
                        } else if v == -R::one() {
                            preds.push(-1);
                        } else {
                            return Err(Error::Precondition(format!(
                                "predictor {j} takes value {v} at point {x}; must be exactly ±1"
                            )));
                        }
                    }
                    out.push((ErmMinimizer::Row(j), preds));
                }
                Ok(out)
            }
            ErmOracle::ThresholdStumps { features } => {
                let mut feats = Vec::with_capacity(xs.len());
                for &x in xs {
                    let f = features.get(x).copied().ok_or_else(|| {
                        Error::Dimension(format!(
                            "observation index {x} out of range for {} features",
                            features.len()
                        ))
                    })?;
                    feats.push(f);
                }
                let mut sorted = feats.clone();
                sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite features"));
                sorted.dedup();
                // Thresholds strictly below the data, between consecutive
                // values, and strictly above: n+1 cuts, two polarities each.
                let mut cuts = Vec::with_capacity(sorted.len() + 1);
                cuts.push(sorted[0] - R::one());
                for w in sorted.windows(2) {
                    cuts.push((w[0] + w[1]) * R::half());
                }
                cuts.push(sorted[sorted.len() - 1] + R::one());
                let mut out = Vec::with_capacity(2 * cuts.len());
                for &threshold in &cuts {
                    for &polarity in &[1i8, -1i8] {
                        let preds: Vec<i8> = feats
                            .iter()
                            .map(|&f| if f > threshold { polarity } else { -polarity })
                            .collect();
                        out.push((ErmMinimizer::Stump { threshold, polarity }, preds));
                    }
                }
                Ok(out)
            }
        }
    }
}

/// Nonnegative per-observation weights and `±1` targets.
#[derive(Debug, Clone)]
pub struct WeightedErmProblem<R: Real> {
    pub weights: Vec<R>,
    pub targets: Vec<i8>,
}

impl<R: Real> WeightedErmProblem<R> {
    pub fn new(weights: Vec<R>, targets: Vec<i8>) -> Result<Self> {
        if weights.len() != targets.len() {
            return Err(Error::Dimension(format!(
                "{} weights vs {} targets",
                weights.len(),
                targets.len()
            )));
        }
        if weights.iter().any(|w| *w < R::zero() || !w.is_finite()) {
            return Err(Error::Precondition("weights must be nonnegative and finite".into()));
        }
        if targets.iter().any(|t| *t != 1 && *t != -1) {
            return Err(Error::Precondition("targets must be exactly ±1".into()));
        }
        Ok(Self { weights, targets })
    }
}

/// Table of `0/1` losses: entry `(f, i) = 1` iff predictor `f` disagrees
/// with the label at observation `i`. Rows are tabulated over the sample
/// positions (use `SampleSet::identity(n)` downstream).
pub fn discrete_loss_table<R: Real>(
    oracle: &ErmOracle<R>,
    sample: &LabeledSample,
) -> Result<TabulatedClass<R>> {
    let candidates = oracle.candidates(sample.xs())?;
    let rows: Vec<Vec<R>> = candidates
        .iter()
        .map(|(_, preds)| {
            preds
                .iter()
                .zip(sample.ys())
                .map(|(p, y)| if p == y { R::zero() } else { R::one() })
                .collect()
        })
        .collect();
    TabulatedClass::new(rows, R::zero(), R::one(), None)
}

/// Exact minimum of `(1/n) Σ w_i 1[f(X_i) != t_i]` over the oracle's class.
pub fn weighted_erm<R: Real>(
    oracle: &ErmOracle<R>,
    xs: &[usize],
    problem: &WeightedErmProblem<R>,
) -> Result<(ErmMinimizer<R>, R)> {
    if problem.weights.len() != xs.len() {
        return Err(Error::Dimension(format!(
            "{} weights vs {} observations",
            problem.weights.len(),
            xs.len()
        )));
    }
    let candidates = oracle.candidates(xs)?;
    let n_r = R::of_usize(xs.len());
    let mut best: Option<(ErmMinimizer<R>, R)> = None;
    for (id, preds) in candidates {
        let cost: R = preds
            .iter()
            .zip(problem.targets.iter().zip(&problem.weights))
            .map(|(p, (t, w))| if p == t { R::zero() } else { *w })
            .sum();
        let objective = cost / n_r;
        match &best {
            Some((_, current)) if objective >= *current => {}
            _ => best = Some((id, objective)),
        }
    }
    best.ok_or_else(|| Error::Precondition("oracle has no candidates".into()))
}

/// The weighted-ERM Lagrangian:
/// `J(mu) = min_f (1/n) Σ |sigma_i + mu Y_i| 1[f(X_i) != sign(sigma_i + mu Y_i)]`.
///
/// The weight `|sigma_i + mu Y_i|` vanishes exactly when `mu = 1` and
/// `Y_i = -sigma_i`; the target is set to `+1` there, with no effect on the
/// objective.
pub fn j_of_mu<R: Real>(
    oracle: &ErmOracle<R>,
    sample: &LabeledSample,
    sigma: &SigmaVector,
    mu: R,
) -> Result<R> {
    if mu < R::zero() {
        return Err(Error::Precondition("mu must be nonnegative".into()));
    }
    if sigma.len() != sample.n() {
        return Err(Error::Dimension(format!(
            "{} signs vs {} observations",
            sigma.len(),
            sample.n()
        )));
    }
    let (weights, targets) = mu_weights_targets(sample.ys(), sigma.signs(), mu);
    let problem = WeightedErmProblem::new(weights, targets)?;
    Ok(weighted_erm(oracle, sample.xs(), &problem)?.1)
}

fn mu_weights_targets<R: Real>(ys: &[i8], signs: &[i8], mu: R) -> (Vec<R>, Vec<i8>) {
    let mut weights = Vec::with_capacity(ys.len());
    let mut targets = Vec::with_capacity(ys.len());
    for (&y, &s) in ys.iter().zip(signs) {
        let v = R::of_sign(s) + mu * R::of_sign(y);
        weights.push(v.abs());
        targets.push(if v > R::zero() {
            1
        } else if v < R::zero() {
            -1
        } else {
            1
        });
    }
    (weights, targets)
}

/// Default geometric `mu` grid: `{0}` plus 128 points on `[2^-10, 2^7]`.
pub fn default_mu_grid<R: Real>() -> Vec<R> {
    let mut grid = vec![R::zero()];
    grid.extend(crate::grid::geometric_grid(R::of(2.0f64.powi(-10)), R::of(128.0), 128));
    grid
}

/// Exact identity between the localized loss-class average and a constrained
/// sign-fitting problem: for `b` in `[0, 1]`,
///
/// `E_sigma R_n { l_f : P_n l_f <= b }
///  = 1/2 - E_sigma min { P_n l(f(X), sigma) : P_n l(f(X), Y) <= b }`.
///
/// Returns `(lhs, rhs)` computed by independent exhaustive enumerations. The
/// qualifying set does not depend on `sigma`; when it is empty, both sides
/// are empty simultaneously and an error reports the infeasible `b`.
pub fn lemma64_identity<R: Real>(
    oracle: &ErmOracle<R>,
    sample: &LabeledSample,
    b: R,
) -> Result<(R, R)> {
    if b < R::zero() || b > R::one() {
        return Err(Error::Precondition("b must lie in [0, 1]".into()));
    }
    let n = sample.n();
    if n > ENUMERATION_CAP {
        return Err(Error::Capacity { n, cap: ENUMERATION_CAP });
    }
    let candidates = oracle.candidates(sample.xs())?;
    let n_r = R::of_usize(n);
    // Qualifying predictors: P_n l(f(X), Y) <= b, independent of sigma.
    let qualifying: Vec<&Vec<i8>> = candidates
        .iter()
        .map(|(_, preds)| preds)
        .filter(|preds| {
            let mismatches =
                preds.iter().zip(sample.ys()).filter(|(p, y)| p != y).count();
            R::of_usize(mismatches) / n_r <= b
        })
        .collect();
    if qualifying.is_empty() {
        return Err(Error::Unsatisfied(format!(
            "no predictor satisfies P_n l_f <= {b}; both sides of the identity are empty"
        )));
    }

    // Left side: E_sigma sup of R_n over the qualifying loss rows, by
    // Gray-code enumeration over signs with incremental signed sums.
    let loss_rows: Vec<Vec<R>> = qualifying
        .iter()
        .map(|preds| {
            preds
                .iter()
                .zip(sample.ys())
                .map(|(p, y)| if p == y { R::zero() } else { R::one() })
                .collect()
        })
        .collect();
    let mut walk = SigmaGrayWalk::new(n)?;
    let mut sums: Vec<R> = loss_rows.iter().map(|row| row.iter().copied().sum()).collect();
    let sup = |sums: &[R]| {
        sums.iter()
            .copied()
            .fold(None, |m: Option<R>, v| Some(m.map_or(v, |m| m.max(v))))
            .unwrap_or(R::zero())
    };
    let mut lhs_acc = sup(&sums);
    while let Some(bit) = walk.advance() {
        let two_s = R::two() * R::of_sign(walk.sigma()[bit]);
        for (f, row) in loss_rows.iter().enumerate() {
            sums[f] += two_s * row[bit];
        }
        lhs_acc += sup(&sums);
    }
    let vectors = R::of_usize(walk.num_vectors() as usize);
    let lhs = lhs_acc / vectors / n_r;

    // Right side: 1/2 - E_sigma min over qualifying predictors of the
    // fraction of disagreements with sigma, maintained incrementally as
    // per-predictor Hamming distances.
    let mut walk = SigmaGrayWalk::new(n)?;
    let mut hamming: Vec<usize> = qualifying
        .iter()
        .map(|preds| preds.iter().filter(|p| **p != 1).count())
        .collect();
    let mut rhs_acc = R::of_usize(*hamming.iter().min().expect("nonempty"));
    while let Some(bit) = walk.advance() {
        let new_sign = walk.sigma()[bit];
        for (f, preds) in qualifying.iter().enumerate() {
            if preds[bit] == new_sign {
                hamming[f] -= 1;
            } else {
                hamming[f] += 1;
            }
        }
        rhs_acc += R::of_usize(*hamming.iter().min().expect("nonempty"));
    }
    let rhs = R::half() - rhs_acc / vectors / n_r;
    Ok((lhs, rhs))
}

/// Computable upper bound on the localized loss-class complexity at radius
/// `r`:
///
/// `20 sup_alpha alpha E_sigma [ min_{mu in grid} ((2r/alpha^2 - 1/2) mu
///   + (1/2n) Σ |sigma_i + mu Y_i| - J(mu)) ] + 26 x / n`.
///
/// Restricting `mu` to a grid only raises the inner minimum, so the upper
/// bound direction is preserved. The expectation over signs is exact up to
/// the enumeration cap and seeded Monte Carlo above it.
pub fn thm63_psi_hat_upper<R: Real>(
    oracle: &ErmOracle<R>,
    sample: &LabeledSample,
    r: R,
    x: R,
    mu_grid: &[R],
    sigma_mode: SigmaMode,
    seed: u64,
) -> Result<R> {
    if r < R::zero() {
        return Err(Error::Precondition("r must be nonnegative".into()));
    }
    if mu_grid.is_empty() {
        return Err(Error::Precondition("mu grid must be nonempty".into()));
    }
    if mu_grid.iter().any(|m| *m < R::zero()) {
        return Err(Error::Precondition("mu grid must be nonnegative".into()));
    }
    let n = sample.n();
    let n_r = R::of_usize(n);
    let alpha_grid = loss_alpha_grid(r);
    let two_r = R::two() * r;

    // Per sign vector, for each mu: (1/2n) Σ |sigma_i + mu Y_i| - J(mu).
    let per_sigma = |sigma: &SigmaVector| -> Result<Vec<R>> {
        let mut out = Vec::with_capacity(mu_grid.len());
        for &mu in mu_grid {
            let (weights, targets) = mu_weights_targets(sample.ys(), sigma.signs(), mu);
            let weight_sum: R = weights.iter().copied().sum();
            let problem = WeightedErmProblem::new(weights, targets)?;
            let j_mu = weighted_erm(oracle, sample.xs(), &problem)?.1;
            out.push(weight_sum / (R::two() * n_r) - j_mu);
        }
        Ok(out)
    };

    // E_sigma of the inner minimum, one entry per alpha.
    let mut expectations = vec![R::zero(); alpha_grid.len()];
    let mut accumulate = |tail_terms: &[R]| {
        for (slot, &alpha) in expectations.iter_mut().zip(&alpha_grid) {
            let coeff = two_r / (alpha * alpha) - R::half();
            let min = tail_terms
                .iter()
                .zip(mu_grid)
                .map(|(&t, &mu)| coeff * mu + t)
                .fold(R::infinity(), |m, v| m.min(v));
            *slot += min;
        }
    };
    let total: usize;
    match sigma_mode {
        SigmaMode::Exact | SigmaMode::Auto if n <= ENUMERATION_CAP => {
            let mut walk = SigmaGrayWalk::new(n)?;
            total = walk.num_vectors() as usize;
            let sigma = SigmaVector::new(walk.sigma().to_vec())?;
            accumulate(&per_sigma(&sigma)?);
            while walk.advance().is_some() {
                let sigma = SigmaVector::new(walk.sigma().to_vec())?;
                accumulate(&per_sigma(&sigma)?);
            }
        }
        SigmaMode::Exact => return Err(Error::Capacity { n, cap: ENUMERATION_CAP }),
        mode => {
            let draws = match mode {
                SigmaMode::MonteCarlo { draws } if draws > 0 => draws,
                SigmaMode::MonteCarlo { .. } => {
                    return Err(Error::Precondition("at least one sigma draw required".into()))
                }
                _ => THM63_SIGMA_DRAWS,
            };
            total = draws;
            for d in 0..draws {
                let mut rng = seeded_rng(derive_seed(seed, STREAM_SIGMA, d as u64));
                let sigma = SigmaVector::random(n, &mut rng);
                accumulate(&per_sigma(&sigma)?);
            }
        }
    }
    let total_r = R::of_usize(total);
    let sup = expectations
        .iter()
        .zip(&alpha_grid)
        .map(|(&e, &alpha)| alpha * e / total_r)
        .fold(R::zero(), |m, v| m.max(v));
    Ok(R::of(20.0) * sup + R::of(26.0) * x / n_r)
}

/// Outcome of the empirical loss-class pipeline: the sub-root fixed point of
/// the localized loss complexity and the resulting error bound.
#[derive(Debug, Clone, Serialize)]
#[serde(bound(serialize = "R: Serialize"))]
pub struct Cor62Outcome<R: Real> {
    pub report: BoundReport<R>,
    pub fixed_point: FixedPointResult<R>,
    pub min_empirical_loss: R,
}

/// Loss-class bound pipeline for `±1` classification with the discrete loss:
/// builds `psi_hat(r) = 20 * localized loss complexity at r + 26 x / n`,
/// solves its fixed point, and evaluates
/// `P l_f <= K/(K-1) P_n l_f + c K (r_hat* + x/n)` with the default
/// coefficients `(6, 11 + 5K)` recorded in the report.
pub fn cor62_bound<R: Real>(
    oracle: &ErmOracle<R>,
    sample: &LabeledSample,
    x: R,
    k_const: R,
    sigma_mode: SigmaMode,
    seed: u64,
) -> Result<Cor62Outcome<R>> {
    if !(k_const > R::one()) {
        return Err(Error::Precondition("K must exceed 1".into()));
    }
    if !(x > R::zero()) {
        return Err(Error::Precondition("x must be positive".into()));
    }
    let n = sample.n();
    let n_r = R::of_usize(n);
    let losses = discrete_loss_table(oracle, sample)?;
    let positions = SampleSet::identity(n);
    let min_empirical_loss = losses
        .rows()
        .iter()
        .map(|row| row.iter().copied().sum::<R>() / n_r)
        .fold(R::infinity(), |m, v| m.min(v));

    let x_term = R::of(26.0) * x / n_r;
    let resolved_mode = match sigma_mode {
        SigmaMode::Auto if n > ENUMERATION_CAP => {
            SigmaMode::MonteCarlo { draws: DEFAULT_SIGMA_DRAWS }
        }
        mode => mode,
    };
    let losses_for_psi = losses.clone();
    let psi = SubRootEvaluator::from_fn(R::min_positive_value(), move |r| {
        let localized = loss_star_hull_local_conditional(
            &losses_for_psi,
            &positions,
            r,
            resolved_mode,
            seed,
        )
        .map(|v| v.estimate.value)
        .unwrap_or(R::zero());
        R::of(20.0) * localized + x_term
    });
    // Losses live in [0, 1], so the localized average saturates at r = 1.
    let fixed_point = solve_fixed_point(&psi, R::one(), R::of(1e-6), DEFAULT_MAX_ITER)?;
    let r_hat_star = fixed_point.r_star;

    let (c_r, c_x) = cor62_default_coefficients(k_const);
    let additive = c_r * k_const * r_hat_star + c_x * x / n_r;
    let mut constants = BTreeMap::new();
    constants.insert("psi_multiplier".to_string(), R::of(20.0));
    constants.insert("psi_x_coefficient".to_string(), R::of(26.0));
    constants.insert("default_bound_r_coefficient".to_string(), c_r);
    constants.insert("default_bound_x_coefficient".to_string(), c_x);
    let mut report = BoundReport::blank(TheoremId::Cor62, 3, x);
    report.inputs.insert("r_hat_star".to_string(), r_hat_star);
    report.inputs.insert("K".to_string(), k_const);
    report.inputs.insert("x".to_string(), x);
    report.inputs.insert("n".to_string(), n_r);
    report.constants = constants;
    report.multiplier = Some(k_const / (k_const - R::one()));
    report.bound_value = additive;
    report.formula_text = "6 K r_hat_star + (11 + 5 K) x / n".to_string();
    Ok(Cor62Outcome { report, fixed_point, min_empirical_loss })
}
