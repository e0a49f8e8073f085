//! Kernel evaluation, normalized Gram matrices, symmetric eigendecomposition
//! by cyclic Jacobi rotations, and the eigenvalue-based localized complexity
//! bounds for kernel balls.

use serde::Serialize;

use crate::bounds::{constants_for, excess_risk_bound_thm54, BoundParams, BoundReport, TheoremId};
use crate::error::{Error, Result};
use crate::real::Real;
use crate::subroot::{solve_fixed_point, FixedPointResult, SubRootEvaluator, DEFAULT_MAX_ITER};

/// Kernel function specification.
#[derive(Debug, Clone)]
pub enum KernelSpec<R: Real> {
    /// `k(x, y) = <x, y>`.
    Linear,
    /// `k(x, y) = (<x, y> + offset)^degree`.
    Polynomial { degree: u32, offset: R },
    /// `k(x, y) = exp(-|x - y|^2 / (2 width^2))`; `k(x, x) = 1`.
    Gaussian { width: R },
    /// Entries `k(x_i, x_j)` supplied directly as a square table.
    ExplicitTable(Vec<Vec<R>>),
}

/// Normalized Gram matrix with entries `k(X_i, X_j) / n`, exactly symmetric
/// by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix<R: Real> {
    entries: Vec<Vec<R>>,
    n: usize,
}

impl<R: Real> GramMatrix<R> {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[Vec<R>] {
        &self.entries
    }

    pub fn entry(&self, i: usize, j: usize) -> R {
        self.entries[i][j]
    }

    pub fn trace(&self) -> R {
        (0..self.n).map(|i| self.entries[i][i]).sum()
    }
}

fn kernel_value<R: Real>(spec: &KernelSpec<R>, a: &[R], b: &[R]) -> R {
    match spec {
        KernelSpec::Linear => a.iter().zip(b).map(|(x, y)| *x * *y).sum(),
        KernelSpec::Polynomial { degree, offset } => {
            let dot: R = a.iter().zip(b).map(|(x, y)| *x * *y).sum();
            (dot + *offset).powi(*degree as i32)
        }
        KernelSpec::Gaussian { width } => {
            let sq: R = a.iter().zip(b).map(|(x, y)| (*x - *y) * (*x - *y)).sum();
            (-sq / (R::two() * *width * *width)).exp()
        }
        KernelSpec::ExplicitTable(_) => unreachable!("handled before pointwise evaluation"),
    }
}

/// Normalized Gram matrix of the kernel on the sampled feature vectors.
pub fn gram<R: Real>(spec: &KernelSpec<R>, features: &[Vec<R>]) -> Result<GramMatrix<R>> {
    let n = match spec {
        KernelSpec::ExplicitTable(table) => table.len(),
        _ => features.len(),
    };
    if n == 0 {
        return Err(Error::Precondition("gram matrix needs at least one point".into()));
    }
    match spec {
        KernelSpec::Gaussian { width } if !(*width > R::zero()) => {
            return Err(Error::Precondition("gaussian width must be positive".into()));
        }
        KernelSpec::Polynomial { degree, offset } => {
            if *degree == 0 {
                return Err(Error::Precondition("polynomial degree must be at least 1".into()));
            }
            if *offset < R::zero() {
                return Err(Error::Precondition("polynomial offset must be nonnegative".into()));
            }
        }
        _ => {}
    }
    let n_r = R::of_usize(n);
    let mut entries = vec![vec![R::zero(); n]; n];
    match spec {
        KernelSpec::ExplicitTable(table) => {
            if table.iter().any(|row| row.len() != n) {
                return Err(Error::Dimension("explicit kernel table must be square".into()));
            }
            let tol = crate::real::scaled_tolerance::<R>(1e-12, n);
            for i in 0..n {
                for j in i..n {
                    if (table[i][j] - table[j][i]).abs() > tol {
                        return Err(Error::Precondition(format!(
                            "explicit kernel table is not symmetric at ({i}, {j})"
                        )));
                    }
                    let v = table[i][j] / n_r;
                    entries[i][j] = v;
                    entries[j][i] = v;
                }
            }
        }
        _ => {
            if features.iter().any(|f| f.len() != features[0].len()) {
                return Err(Error::Dimension("feature vectors must share one length".into()));
            }
            for i in 0..n {
                for j in i..n {
                    let v = kernel_value(spec, &features[i], &features[j]) / n_r;
                    entries[i][j] = v;
                    entries[j][i] = v;
                }
            }
        }
    }
    Ok(GramMatrix { entries, n })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumSource {
    Empirical,
    SuppliedTrue,
}

/// Eigenvalues sorted nonincreasing.
#[derive(Debug, Clone, Serialize)]
#[serde(bound(serialize = "R: Serialize"))]
pub struct EigenSpectrum<R: Real> {
    eigenvalues: Vec<R>,
    source: SpectrumSource,
}

impl<R: Real> EigenSpectrum<R> {
    /// Wrap an externally supplied spectrum (sorted, clamped, validated).
    pub fn supplied(mut eigenvalues: Vec<R>, source: SpectrumSource) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::Precondition("spectrum must be nonempty".into()));
        }
        let floor = -R::of(1e-8);
        if eigenvalues.iter().any(|v| *v < floor) {
            return Err(Error::Precondition(
                "eigenvalues below the PSD tolerance -1e-8".into(),
            ));
        }
        for v in &mut eigenvalues {
            if *v < R::zero() {
                *v = R::zero();
            }
        }
        eigenvalues.sort_by(|a, b| b.partial_cmp(a).expect("finite eigenvalues"));
        Ok(Self { eigenvalues, source })
    }

    pub fn eigenvalues(&self) -> &[R] {
        &self.eigenvalues
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn source(&self) -> SpectrumSource {
        self.source
    }

    pub fn sum(&self) -> R {
        self.eigenvalues.iter().copied().sum()
    }
}

/// Full symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Returns `(eigenvalues, eigenvectors)` with the eigenvector for
/// `eigenvalues[k]` in column `k`; `A = V diag(l) V^T`. Sweeps run until the
/// off-diagonal Frobenius norm drops below `1e-12` times the matrix norm
/// (with a few-ulps floor for low-precision scalars).
pub fn jacobi_eigen<R: Real>(matrix: &[Vec<R>]) -> Result<(Vec<R>, Vec<Vec<R>>)> {
    let n = matrix.len();
    if n == 0 || matrix.iter().any(|row| row.len() != n) {
        return Err(Error::Dimension("matrix must be square and nonempty".into()));
    }
    let sym_tol = crate::real::scaled_tolerance::<R>(1e-12, n);
    for (i, row) in matrix.iter().enumerate() {
        for (j, mirror) in matrix.iter().enumerate().skip(i + 1) {
            if (row[j] - mirror[i]).abs() > sym_tol {
                return Err(Error::Precondition(format!(
                    "matrix is not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    let mut a: Vec<Vec<R>> = matrix.to_vec();
    let mut v = vec![vec![R::zero(); n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = R::one();
    }
    let frob = |m: &[Vec<R>]| -> R {
        m.iter()
            .flat_map(|row| row.iter())
            .map(|x| *x * *x)
            .sum::<R>()
            .sqrt()
    };
    let norm = frob(&a);
    let target = norm * crate::real::scaled_tolerance::<R>(1e-12, 1);
    let off_diag_norm = |m: &[Vec<R>]| -> R {
        let mut s = R::zero();
        for (i, row) in m.iter().enumerate() {
            for (j, x) in row.iter().enumerate() {
                if i != j {
                    s += *x * *x;
                }
            }
        }
        s.sqrt()
    };
    const MAX_SWEEPS: usize = 64;
    for _ in 0..MAX_SWEEPS {
        if off_diag_norm(&a) <= target || n == 1 {
            break;
        }
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let apq = a[p][q];
                if apq == R::zero() {
                    continue;
                }
                let app = a[p][p];
                let aqq = a[q][q];
                let theta = (aqq - app) / (R::two() * apq);
                // Smaller-magnitude rotation root for stability.
                let t = {
                    let sign = if theta >= R::zero() { R::one() } else { -R::one() };
                    sign / (theta.abs() + (theta * theta + R::one()).sqrt())
                };
                let c = R::one() / (t * t + R::one()).sqrt();
                let s = t * c;
                for row in a.iter_mut() {
                    let akp = row[p];
                    let akq = row[q];
                    row[p] = c * akp - s * akq;
                    row[q] = s * akp + c * akq;
                }
                // Rows p and q are updated jointly; plain indexing avoids
                // a split_at_mut dance.
                #[allow(clippy::needless_range_loop)]
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }

                for row in v.iter_mut() {
                    let vp = row[p];
                    let vq = row[q];
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    if n > 1 && off_diag_norm(&a) > target {
        return Err(Error::Numeric(format!(
            "jacobi sweeps did not reduce the off-diagonal norm below {target:?}"
        )));
    }
    let mut pairs: Vec<(R, usize)> = (0..n).map(|i| (a[i][i], i)).collect();
    pairs.sort_by(|x, y| y.0.partial_cmp(&x.0).expect("finite eigenvalues"));
    let eigenvalues: Vec<R> = pairs.iter().map(|(l, _)| *l).collect();
    let eigenvectors: Vec<Vec<R>> = (0..n)
        .map(|row| pairs.iter().map(|&(_, col)| v[row][col]).collect())
        .collect();
    Ok((eigenvalues, eigenvectors))
}

/// Spectrum of a normalized Gram matrix: full Jacobi eigensolve, eigenvalues
/// sorted nonincreasing, negatives within the PSD tolerance `-1e-8` clamped
/// to zero, and the eigenvalue sum checked against the trace.
pub fn eigen_spectrum<R: Real>(gram: &GramMatrix<R>) -> Result<EigenSpectrum<R>> {
    let (raw, _) = jacobi_eigen(gram.entries())?;
    let spectrum = EigenSpectrum::supplied(raw, SpectrumSource::Empirical)?;
    let trace = gram.trace();
    let tol = crate::real::scaled_tolerance::<R>(1e-8, 1) * R::of_usize(gram.n());
    if (spectrum.sum() - trace).abs() > tol {
        return Err(Error::Numeric(format!(
            "eigenvalue sum {:?} deviates from trace {trace:?}",
            spectrum.sum()
        )));
    }
    Ok(spectrum)
}

/// Data-dependent localized complexity bound from the empirical spectrum:
/// `sqrt((2/n) Σ_i min(r, l_i))`.
pub fn lemma66_bound<R: Real>(spectrum: &EigenSpectrum<R>, n: usize, r: R) -> R {
    let capped: R = spectrum.eigenvalues().iter().map(|&l| l.min(r)).sum();
    (R::two() / R::of_usize(n.max(1)) * capped).sqrt()
}

/// Leading true eigenvalues with an explicit bound on the omitted tail mass.
#[derive(Debug, Clone)]
pub struct TruncatedSpectrum<R: Real> {
    pub leading: Vec<R>,
    pub tail_mass: R,
}

impl<R: Real> TruncatedSpectrum<R> {
    pub fn new(leading: Vec<R>, tail_mass: R) -> Result<Self> {
        if leading.is_empty() {
            return Err(Error::Precondition("need at least one leading eigenvalue".into()));
        }
        if tail_mass < R::zero() || !tail_mass.is_finite() {
            return Err(Error::Precondition(
                "a finite nonnegative tail-mass bound must be declared".into(),
            ));
        }
        if leading.iter().any(|l| *l < R::zero()) {
            return Err(Error::Precondition("true eigenvalues must be nonnegative".into()));
        }
        Ok(Self { leading, tail_mass })
    }
}

/// Distribution-level localized complexity bound from a supplied true
/// spectrum: `sqrt((2/n) (Σ_{i<=m} min(r, l_i) + tail))`, where adding the
/// declared tail mass preserves the upper-bound direction.
pub fn thm65_bound<R: Real>(spectrum: &TruncatedSpectrum<R>, n: usize, r: R) -> Result<R> {
    if r < R::zero() {
        return Err(Error::Precondition("r must be nonnegative".into()));
    }
    let capped: R = spectrum.leading.iter().map(|&l| l.min(r)).sum();
    Ok((R::two() / R::of_usize(n.max(1)) * (capped + spectrum.tail_mass)).sqrt())
}

/// Exact minimization of `h/n + sqrt((1/n) Σ_{i>h} l_i)` over `h = 0..=n`,
/// ties broken toward smaller `h`. Returns `(bound, argmin h)`.
pub fn cor67_complexity<R: Real>(spectrum: &EigenSpectrum<R>, n: usize) -> (R, usize) {
    let n_r = R::of_usize(n.max(1));
    let ls = spectrum.eigenvalues();
    let mut tail: R = ls.iter().copied().sum();
    let mut best = (tail / n_r).sqrt();
    let mut best_h = 0usize;
    for h in 1..=n {
        if h <= ls.len() {
            tail -= ls[h - 1];
        }
        let value = R::of_usize(h) / n_r + (tail.max(R::zero()) / n_r).sqrt();
        if value < best {
            best = value;
            best_h = h;
        }
    }
    (best, best_h)
}

/// Sub-root evaluator for the kernel-ball localized complexity:
/// `r -> 4 c1 sqrt((2/n) Σ_i min(c3 r / 4, l_i)) + (c2 + 2) x / n`,
/// with `c1 = 2 L (B v 10 L)` and `c2 = 11 L^2 + c1`; `c3` is the radius
/// multiplier of the localized ball and is passed by the caller.
pub fn kernel_psi_hat<R: Real>(
    spectrum: &EigenSpectrum<R>,
    n: usize,
    x: R,
    lipschitz: R,
    b_const: R,
    c3_radius_multiplier: R,
) -> Result<SubRootEvaluator<R>> {
    if !(x > R::zero()) {
        return Err(Error::Precondition("x must be positive".into()));
    }
    if !(c3_radius_multiplier > R::zero()) {
        return Err(Error::Precondition("the radius multiplier must be positive".into()));
    }
    let params = BoundParams::<R>::new(n.max(1), x).with_lipschitz(lipschitz).with_b(b_const);
    let table = constants_for(TheoremId::Thm54, &params)?;
    let c1 = table["c1"];
    let c2 = table["c2"];
    let eigenvalues = spectrum.eigenvalues().to_vec();
    let n_r = R::of_usize(n.max(1));
    let constant = (c2 + R::two()) * x / n_r;
    let quarter_c3 = c3_radius_multiplier / R::of(4.0);
    Ok(SubRootEvaluator::from_fn(R::min_positive_value(), move |r| {
        let capped: R = eigenvalues.iter().map(|&l| l.min(quarter_c3 * r)).sum();
        R::of(4.0) * c1 * (R::two() / n_r * capped).sqrt() + constant
    }))
}

/// End-to-end kernel pipeline report: spectrum, eigenvalue bounds, the fixed
/// point of the localized complexity, and the excess-risk bound assembly.
#[derive(Debug, Clone, Serialize)]
#[serde(bound(serialize = "R: Serialize"))]
pub struct KernelPipelineReport<R: Real> {
    pub n: usize,
    pub trace: R,
    pub spectrum: Vec<R>,
    pub lemma66_at_r: Option<R>,
    pub cor67_bound: R,
    pub cor67_argmin_h: usize,
    pub h0_envelope: R,
    pub r_hat_star: R,
    pub fixed_point: FixedPointResult<R>,
    pub thm54_report: BoundReport<R>,
}

/// Run gram -> spectrum -> eigenvalue bounds -> fixed point -> excess-risk
/// assembly. `probe_radius` additionally evaluates the data-dependent
/// localized bound at one radius.
pub fn kernel_pipeline<R: Real>(
    gram: &GramMatrix<R>,
    x: R,
    lipschitz: R,
    b_const: R,
    probe_radius: Option<R>,
) -> Result<KernelPipelineReport<R>> {
    let n = gram.n();
    let spectrum = eigen_spectrum(gram)?;
    let params = BoundParams::<R>::new(n, x).with_lipschitz(lipschitz).with_b(b_const);
    let c3 = constants_for(TheoremId::Thm54, &params)?["c3"];
    let psi = kernel_psi_hat(&spectrum, n, x, lipschitz, b_const, c3)?;
    let hint = spectrum.eigenvalues().first().copied().unwrap_or(R::one()).max(R::one());
    let fixed_point = solve_fixed_point(&psi, hint, R::of(1e-9), DEFAULT_MAX_ITER)?;
    let (cor67, argmin_h) = cor67_complexity(&spectrum, n);
    let trace = gram.trace();
    let report = excess_risk_bound_thm54(&params, fixed_point.r_star)?;
    Ok(KernelPipelineReport {
        n,
        trace,
        spectrum: spectrum.eigenvalues().to_vec(),
        lemma66_at_r: probe_radius.map(|r| lemma66_bound(&spectrum, n, r)),
        cor67_bound: cor67,
        cor67_argmin_h: argmin_h,
        h0_envelope: (trace / R::of_usize(n)).sqrt(),
        r_hat_star: fixed_point.r_star,
        fixed_point,
        thm54_report: report,
    })
}
