//! Finite-support probability spaces, samples, tabulated function classes,
//! and the elementary empirical functionals: true mean `Pf`, empirical mean
//! `P_n f`, signed correlation `R_n f`, and variance.
//!
//! Ground spaces are finite and explicit so that every distribution-dependent
//! quantity is exactly computable and can serve as a test oracle. Function
//! classes are finite tables of values over the ground points; infinite
//! classes enter only through star-hulls (handled in closed form by the
//! `rademacher` module) and kernel balls (handled by the `kernel` module).

use std::collections::BTreeSet;

use rand::Rng;

use crate::error::{Error, Result};
use crate::real::{scaled_tolerance, Real};
use crate::rng::seeded_rng;

/// A probability distribution with finite support.
///
/// Point masses are validated at construction: nonnegative, summing to one
/// within 1e-12 (absolute), over distinct point ids. An optional `±1` label
/// per point carries classification targets.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution<R: Real> {
    ids: Vec<String>,
    masses: Vec<R>,
    labels: Option<Vec<i8>>,
}

impl<R: Real> DiscreteDistribution<R> {
    pub fn new(ids: Vec<String>, masses: Vec<R>, labels: Option<Vec<i8>>) -> Result<Self> {
        if ids.is_empty() {
            return Err(Error::Precondition("distribution needs at least one point".into()));
        }
        if ids.len() != masses.len() {
            return Err(Error::Dimension(format!(
                "{} point ids vs {} masses",
                ids.len(),
                masses.len()
            )));
        }
        let distinct: BTreeSet<&str> = ids.iter().map(String::as_str).collect();
        if distinct.len() != ids.len() {
            return Err(Error::Precondition("point ids must be distinct".into()));
        }
        if masses.iter().any(|m| *m < R::zero() || !m.is_finite()) {
            return Err(Error::Precondition("masses must be nonnegative and finite".into()));
        }
        let total: R = masses.iter().copied().sum();
        let tol = scaled_tolerance::<R>(1e-12, masses.len());
        if (total - R::one()).abs() > tol {
            return Err(Error::Precondition(format!(
                "masses sum to {total}, not 1 within {tol:?}"
            )));
        }
        if let Some(ls) = &labels {
            if ls.len() != ids.len() {
                return Err(Error::Dimension(format!(
                    "{} labels vs {} points",
                    ls.len(),
                    ids.len()
                )));
            }
            if ls.iter().any(|l| *l != 1 && *l != -1) {
                return Err(Error::Precondition("labels must be exactly ±1".into()));
            }
        }
        Ok(Self { ids, masses, labels })
    }

    /// Uniform distribution on `k` points named `p0..p{k-1}`.
    pub fn uniform(k: usize) -> Result<Self> {
        let mass = R::one() / R::of_usize(k.max(1));
        let mut masses = vec![mass; k];
        // Absorb the rounding residue into the last mass so the sum is exact.
        let partial: R = masses.iter().take(k.saturating_sub(1)).copied().sum();
        if let Some(last) = masses.last_mut() {
            *last = R::one() - partial;
        }
        Self::new((0..k).map(|i| format!("p{i}")).collect(), masses, None)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn mass(&self, point: usize) -> R {
        self.masses[point]
    }

    pub fn masses(&self) -> &[R] {
        &self.masses
    }

    pub fn labels(&self) -> Option<&[i8]> {
        self.labels.as_deref()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|p| p == id)
    }

    /// Draw an i.i.d. sample of size `n`, recording the seed that produced it.
    pub fn sample(&self, n: usize, seed: u64) -> Result<SampleSet> {
        if n == 0 {
            return Err(Error::Precondition("sample size must be at least 1".into()));
        }
        let mut rng = seeded_rng(seed);
        let mut indices = Vec::with_capacity(n);
        for _ in 0..n {
            let u = R::of(rng.random::<f64>());
            indices.push(self.quantile_index(u));
        }
        SampleSet::new(indices, self.len(), seed)
    }

    fn quantile_index(&self, u: R) -> usize {
        let mut acc = R::zero();
        for (i, m) in self.masses.iter().enumerate() {
            acc += *m;
            if u < acc {
                return i;
            }
        }
        self.len() - 1
    }
}

/// An observed sample: indices into the ground space of a distribution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleSet {
    indices: Vec<usize>,
    seed: u64,
}

impl SampleSet {
    pub fn new(indices: Vec<usize>, num_points: usize, seed: u64) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::Precondition("sample size must be at least 1".into()));
        }
        if let Some(bad) = indices.iter().find(|i| **i >= num_points) {
            return Err(Error::Dimension(format!(
                "sample index {bad} out of range for {num_points} points"
            )));
        }
        Ok(Self { indices, seed })
    }

    /// The identity sample `0, 1, ..., n-1`, for classes tabulated directly
    /// over sample positions.
    pub fn identity(n: usize) -> Self {
        Self { indices: (0..n).collect(), seed: 0 }
    }

    pub fn n(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// A finite function class stored as a values table, one row per function.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedClass<R: Real> {
    rows: Vec<Vec<R>>,
    range_lo: R,
    range_hi: R,
    names: Option<Vec<String>>,
}

impl<R: Real> TabulatedClass<R> {
    pub fn new(
        rows: Vec<Vec<R>>,
        range_lo: R,
        range_hi: R,
        names: Option<Vec<String>>,
    ) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Precondition("class needs at least one function".into()));
        }
        Self::validated(rows, range_lo, range_hi, names)
    }

    fn validated(
        rows: Vec<Vec<R>>,
        range_lo: R,
        range_hi: R,
        names: Option<Vec<String>>,
    ) -> Result<Self> {
        if range_lo > range_hi {
            return Err(Error::Precondition("range_lo must not exceed range_hi".into()));
        }
        let width = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != width) || (width == 0 && !rows.is_empty()) {
            return Err(Error::Dimension("all value rows must have equal, positive length".into()));
        }
        for (j, row) in rows.iter().enumerate() {
            if row.iter().any(|v| *v < range_lo || *v > range_hi || !v.is_finite()) {
                return Err(Error::Precondition(format!(
                    "function {j} has a value outside [{range_lo}, {range_hi}]"
                )));
            }
        }
        if let Some(ns) = &names {
            if ns.len() != rows.len() {
                return Err(Error::Dimension("one name per function required".into()));
            }
        }
        Ok(Self { rows, range_lo, range_hi, names })
    }

    /// Subclass keeping the listed function indices. The result may be empty;
    /// empty classes arise only through localization and their supremum is 0.
    pub fn subclass(&self, keep: &[usize]) -> Self {
        Self {
            rows: keep.iter().map(|&j| self.rows[j].clone()).collect(),
            range_lo: self.range_lo,
            range_hi: self.range_hi,
            names: self
                .names
                .as_ref()
                .map(|ns| keep.iter().map(|&j| ns[j].clone()).collect()),
        }
    }

    pub fn num_functions(&self) -> usize {
        self.rows.len()
    }

    pub fn num_points(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, function: usize) -> &[R] {
        &self.rows[function]
    }

    pub fn rows(&self) -> &[Vec<R>] {
        &self.rows
    }

    pub fn range(&self) -> (R, R) {
        (self.range_lo, self.range_hi)
    }

    /// Largest absolute value the range permits.
    pub fn range_bound(&self) -> R {
        self.range_lo.abs().max(self.range_hi.abs())
    }

    pub fn name(&self, function: usize) -> Option<&str> {
        self.names.as_ref().map(|ns| ns[function].as_str())
    }

    /// Per-function values at the sampled points (one row per function).
    pub fn sampled(&self, sample: &SampleSet) -> Result<Vec<Vec<R>>> {
        let width = self.num_points();
        if let Some(bad) = sample.indices().iter().find(|i| **i >= width) {
            return Err(Error::Dimension(format!(
                "sample index {bad} out of range for a class over {width} points"
            )));
        }
        Ok(self
            .rows
            .iter()
            .map(|row| sample.indices().iter().map(|&i| row[i]).collect())
            .collect())
    }
}

/// Star-hull specification: the segments `f0 + alpha (f - f0)`, `alpha` in
/// `[0, 1]`, for every `f` in the base class.
#[derive(Debug, Clone)]
pub struct StarHullSpec<R: Real> {
    base: TabulatedClass<R>,
    center: Vec<R>,
}

impl<R: Real> StarHullSpec<R> {
    pub fn new(base: TabulatedClass<R>, center: Vec<R>) -> Result<Self> {
        if center.len() != base.num_points() {
            return Err(Error::Dimension(format!(
                "center has {} values, class has {} points",
                center.len(),
                base.num_points()
            )));
        }
        let (lo, hi) = base.range();
        if center.iter().any(|v| *v < lo || *v > hi) {
            return Err(Error::Precondition("center must lie within the class range".into()));
        }
        Ok(Self { base, center })
    }

    /// Hull centered at the zero function.
    pub fn centered_at_zero(base: TabulatedClass<R>) -> Result<Self> {
        let center = vec![R::zero(); base.num_points()];
        let (lo, hi) = base.range();
        if lo > R::zero() || hi < R::zero() {
            return Err(Error::Precondition(
                "zero center requires a range containing 0".into(),
            ));
        }
        Ok(Self { base, center })
    }

    pub fn base(&self) -> &TabulatedClass<R> {
        &self.base
    }

    pub fn center(&self) -> &[R] {
        &self.center
    }
}

/// Rademacher sign vector, entries exactly `±1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SigmaVector {
    signs: Vec<i8>,
}

impl SigmaVector {
    pub fn new(signs: Vec<i8>) -> Result<Self> {
        if signs.is_empty() {
            return Err(Error::Precondition("sign vector must be nonempty".into()));
        }
        if signs.iter().any(|s| *s != 1 && *s != -1) {
            return Err(Error::Precondition("signs must be exactly ±1".into()));
        }
        Ok(Self { signs })
    }

    /// Sign vector from the low `n` bits of `bits`: set bit means `-1`.
    pub fn from_bits(n: usize, bits: u64) -> Self {
        Self {
            signs: (0..n).map(|i| if (bits >> i) & 1 == 1 { -1 } else { 1 }).collect(),
        }
    }

    pub fn random<G: Rng>(n: usize, rng: &mut G) -> Self {
        Self {
            signs: (0..n).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.signs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signs.is_empty()
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    pub fn sign(&self, i: usize) -> i8 {
        self.signs[i]
    }
}

/// `Pf = Σ_i mass_i f(point_i)`.
pub fn true_mean<R: Real>(dist: &DiscreteDistribution<R>, values: &[R]) -> Result<R> {
    if values.len() != dist.len() {
        return Err(Error::Dimension(format!(
            "{} function values vs {} points",
            values.len(),
            dist.len()
        )));
    }
    Ok(dist
        .masses()
        .iter()
        .zip(values)
        .map(|(m, v)| *m * *v)
        .sum())
}

/// `P_n f = (1/n) Σ_i f(X_i)` for values tabulated over ground points.
pub fn empirical_mean<R: Real>(sample: &SampleSet, values: &[R]) -> Result<R> {
    if sample.n() == 0 {
        return Err(Error::Precondition("empty sample".into()));
    }
    if let Some(bad) = sample.indices().iter().find(|i| **i >= values.len()) {
        return Err(Error::Dimension(format!(
            "sample index {bad} out of range for {} values",
            values.len()
        )));
    }
    let total: R = sample.indices().iter().map(|&i| values[i]).sum();
    Ok(total / R::of_usize(sample.n()))
}

/// `R_n f = (1/n) Σ_i sigma_i f(X_i)`.
pub fn rademacher_sum<R: Real>(
    sample: &SampleSet,
    sigma: &SigmaVector,
    values: &[R],
) -> Result<R> {
    if sigma.len() != sample.n() {
        return Err(Error::Dimension(format!(
            "{} signs vs sample size {}",
            sigma.len(),
            sample.n()
        )));
    }
    if let Some(bad) = sample.indices().iter().find(|i| **i >= values.len()) {
        return Err(Error::Dimension(format!(
            "sample index {bad} out of range for {} values",
            values.len()
        )));
    }
    let total: R = sample
        .indices()
        .iter()
        .zip(sigma.signs())
        .map(|(&i, &s)| R::of_sign(s) * values[i])
        .sum();
    Ok(total / R::of_usize(sample.n()))
}

/// `Var[f] = P f^2 - (P f)^2`.
pub fn variance<R: Real>(dist: &DiscreteDistribution<R>, values: &[R]) -> Result<R> {
    let mean = true_mean(dist, values)?;
    let second: R = dist
        .masses()
        .iter()
        .zip(values)
        .map(|(m, v)| *m * *v * *v)
        .sum();
    Ok(second - mean * mean)
}

/// Which functional localizes a subclass.
#[derive(Debug, Clone, Copy)]
pub enum LocalizationFunctional<'a, R: Real> {
    /// `P_n f^2` over the given sample.
    EmpiricalSecondMoment,
    /// `P f^2` under the distribution (sample unused).
    TrueSecondMoment(&'a DiscreteDistribution<R>),
    /// `P_n f` over the given sample.
    EmpiricalMean,
}

/// Sub-table of functions whose localization functional is at most `radius`.
/// The result may be empty; the supremum over an empty class is defined as 0.
pub fn localized_subclass<R: Real>(
    class: &TabulatedClass<R>,
    sample: &SampleSet,
    functional: LocalizationFunctional<'_, R>,
    radius: R,
) -> Result<TabulatedClass<R>> {
    if radius < R::zero() {
        return Err(Error::Precondition("localization radius must be nonnegative".into()));
    }
    let mut keep = Vec::new();
    for j in 0..class.num_functions() {
        let row = class.row(j);
        let value = match functional {
            LocalizationFunctional::EmpiricalSecondMoment => {
                let sq: Vec<R> = row.iter().map(|v| *v * *v).collect();
                empirical_mean(sample, &sq)?
            }
            LocalizationFunctional::TrueSecondMoment(dist) => {
                let sq: Vec<R> = row.iter().map(|v| *v * *v).collect();
                true_mean(dist, &sq)?
            }
            LocalizationFunctional::EmpiricalMean => empirical_mean(sample, row)?,
        };
        if value <= radius {
            keep.push(j);
        }
    }
    Ok(class.subclass(&keep))
}
