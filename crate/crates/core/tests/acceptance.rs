//! Acceptance suite: one test per criterion, each printing a pass line.
//! Run with `cargo test -p locrad-core --test acceptance -- --nocapture`.

use locrad_core::bounds::{constants_for, BoundParams, TheoremId};
use locrad_core::classification::{
    default_mu_grid, discrete_loss_table, lemma64_identity, thm63_psi_hat_upper, ErmOracle,
    LabeledSample,
};
use locrad_core::empirical::{DiscreteDistribution, SampleSet, SigmaVector, TabulatedClass};
use locrad_core::harness::{
    default_desk_instance, default_desk_targets, validate_containment, validate_excess_risk,
    validate_main_bound, validate_sandwich, MainBoundTheorem, QuadraticLossSpec, TrialConfig,
};
use locrad_core::kernel::{
    cor67_complexity, eigen_spectrum, gram, jacobi_eigen, kernel_pipeline, lemma66_bound,
    EigenSpectrum, KernelSpec, SpectrumSource,
};
use locrad_core::rademacher::{
    conditional_rademacher_exact, conditional_rademacher_mc, loss_star_hull_local_conditional,
    SigmaMode, StarHullSigmaCurve,
};
use locrad_core::bounds::{ContainmentVariant, ThmPart};
use locrad_core::empirical::StarHullSpec;
use locrad_core::grid::geometric_grid;
use locrad_core::oracle::{
    conditional_rademacher_bruteforce, expected_rademacher_exhaustive,
    expected_sup_deviation_exhaustive,
};
use locrad_core::rng::seeded_rng;
use locrad_core::subroot::{
    affine_sqrt_fixed_point, fixed_point_iterate, lemma61_iterations, SubRootEvaluator,
};
use rand::Rng;

fn random_class(rng: &mut impl Rng, num_functions: usize, n: usize, lo: f64, hi: f64) -> TabulatedClass<f64> {
    let rows: Vec<Vec<f64>> = (0..num_functions)
        .map(|_| (0..n).map(|_| lo + (hi - lo) * rng.random::<f64>()).collect())
        .collect();
    TabulatedClass::new(rows, lo, hi, None).unwrap()
}

#[test]
fn criterion_01_constants_fidelity() {
    // Golden table of every explicit constant, checked exactly.
    let p1 = BoundParams::<f64>::new(100, 1.0);
    let t = constants_for(TheoremId::Thm33Part1, &p1).unwrap();
    assert_eq!((t["c1"], t["c2"]), (704.0, 26.0));
    let t = constants_for(TheoremId::Thm33Part2, &p1).unwrap();
    assert_eq!((t["c1"], t["c2"]), (6.0, 5.0));
    // c1 = 2 (10 v B), c2 = c1 + 11, over a B grid.
    for b in [0.5, 1.0, 5.0, 10.0, 12.5, 40.0] {
        let t = constants_for(TheoremId::Thm41, &p1.with_b(b)).unwrap();
        assert_eq!(t["c1"], 2.0 * 10.0f64.max(b));
        assert_eq!(t["c2"], t["c1"] + 11.0);
    }
    // (20, 13) for the empirical loss-class localized average.
    let t = constants_for(TheoremId::Cor51, &p1).unwrap();
    assert_eq!((t["psi_multiplier"], t["psi_x_coefficient"]), (20.0, 13.0));
    // c3 = 26 v (c2 + 2 c1)/3 and the sandwich factor 9 (1 + c1)^2.
    for b in [1.0, 10.0, 30.0] {
        let t = constants_for(TheoremId::Thm42, &p1.with_b(b)).unwrap();
        let c1 = 2.0 * 10.0f64.max(b);
        assert_eq!(t["c2"], 13.0);
        assert_eq!(t["c3"], 26.0f64.max((13.0 + 2.0 * c1) / 3.0));
        assert_eq!(t["sandwich_factor"], 9.0 * (1.0 + c1) * (1.0 + c1));
        if b <= 10.0 {
            assert_eq!(t["sandwich_factor"], 3969.0);
        }
    }
    // Theorem 5.4's c1/c2/c3 over an (L, B) grid.
    for (l, b) in [(2.0, 1.0), (1.0, 1.0), (0.5, 3.0), (2.0, 25.0)] {
        let t = constants_for(TheoremId::Thm54, &p1.with_lipschitz(l).with_b(b)).unwrap();
        let c1 = 2.0 * l * b.max(10.0 * l);
        let c2 = 11.0 * l * l + c1;
        assert_eq!(t["c1"], c1);
        assert_eq!(t["c2"], c2);
        assert_eq!(t["c3"], 2824.0 + 4.0 * b * (11.0 * l + 27.0 * b) / c2);
        // Corollary 5.3's 705 and 11 L + 27 B.
        let t53 = constants_for(TheoremId::Cor53, &p1.with_lipschitz(l).with_b(b)).unwrap();
        assert_eq!(t53["excess_r_coefficient"], 705.0);
        assert_eq!(t53["excess_x_coefficient"], 11.0 * l + 27.0 * b);
    }
    assert_eq!(
        constants_for(TheoremId::Thm54, &p1.with_lipschitz(2.0)).unwrap()["c3"],
        2824.0 + 4.0 * (22.0 + 27.0) / 124.0
    );
    println!("acceptance criterion 01: PASS — constants fidelity");
}

#[test]
fn criterion_02_rademacher_oracle_agreement() {
    // Monte Carlo conditional averages against exact enumeration on 50
    // random instances; at most one 4-sigma miss allowed.
    let mut rng = seeded_rng(0xACC2);
    let mut hits = 0;
    let total = 50;
    for i in 0..total {
        let n = 4 + (rng.random::<u64>() % 9) as usize; // 4..=12
        let f = 2 + (rng.random::<u64>() % 15) as usize; // 2..=16
        let class = random_class(&mut rng, f, n, -1.0, 1.0);
        let sample = SampleSet::identity(n);
        let exact = conditional_rademacher_exact(&class, &sample).unwrap();
        // Conditional averages are nonnegative for any class.
        assert!(exact.value >= -1e-12);
        let mc = conditional_rademacher_mc(&class, &sample, 4096, 1000 + i).unwrap();
        if (mc.value - exact.value).abs() <= 4.0 * mc.std_error + 1e-12 {
            hits += 1;
        }
        // Bruteforce oracle agrees with the incremental enumeration.
        if n <= 8 {
            let brute = conditional_rademacher_bruteforce(&class, &sample).unwrap();
            assert!((brute - exact.value).abs() < 1e-12);
        }
    }
    assert!(hits >= total - 1, "only {hits}/{total} within 4 standard errors");
    println!(
        "acceptance criterion 02: PASS — Monte Carlo within 4 se of exact enumeration in {hits}/{total} instances"
    );
}

#[test]
fn criterion_03_subroot_suite() {
    // Closed-form star-hull localization: psi(r)/sqrt(r) nonincreasing
    // exactly (in float semantics) on 100 random fixed-sign instances.
    let mut rng = seeded_rng(0xACC3);
    for _ in 0..100 {
        let n = 3 + (rng.random::<u64>() % 8) as usize; // 3..=10
        let f = 1 + (rng.random::<u64>() % 8) as usize; // 1..=8
        let class = random_class(&mut rng, f, n, -1.0, 1.0);
        let hull = StarHullSpec::centered_at_zero(class).unwrap();
        let sample = SampleSet::identity(n);
        let sigma = SigmaVector::random(n, &mut rng);
        let curve = StarHullSigmaCurve::new(&hull, &sample, &sigma).unwrap();
        let grid: Vec<f64> = geometric_grid(1e-6, 4.0, 50);
        for w in grid.windows(2) {
            assert!(
                curve.ratio(w[0]) >= curve.ratio(w[1]),
                "ratio increased between {} and {}",
                w[0],
                w[1]
            );
        }
    }
    // Sign pattern and iteration trace bound on the a sqrt(r) + b family.
    let mut rng = seeded_rng(0xACC3B);
    for _ in 0..100 {
        let a = 0.1 + 3.0 * rng.random::<f64>();
        let b = 0.5 * rng.random::<f64>();
        let psi = SubRootEvaluator::<f64>::affine_sqrt(a, b);
        let r_star = affine_sqrt_fixed_point(a, b);
        for &r in geometric_grid(r_star * 1e-3, r_star * 1e3, 41).iter() {
            let v = psi.eval(r);
            if r < r_star * (1.0 - 1e-9) {
                assert!(v >= r - 1e-9 * r.max(1.0));
            }
            if r > r_star * (1.0 + 1e-9) {
                assert!(v <= r + 1e-9 * r.max(1.0));
            }
        }
        let r0 = r_star * (2.0 + 30.0 * rng.random::<f64>());
        let fp = fixed_point_iterate(&psi, r0, 1e-9, 64).unwrap();
        for (k, &rk) in fp.trace.iter().enumerate() {
            let bound = (r0 / r_star).powf(0.5f64.powi(k as i32)) * r_star;
            assert!(rk <= bound * (1.0 + 1e-9), "trace bound broken at step {k}");
            assert!(rk >= r_star * (1.0 - 1e-9));
        }
    }
    println!("acceptance criterion 03: PASS — sub-root suite (ratio monotonicity, sign pattern, trace bound)");
}

#[test]
fn criterion_04_fixed_point_accuracy() {
    // 100 random (a, b): the iterate matches the closed-form root of the
    // quadratic in sqrt(r) to relative error 1e-6, within the guaranteed
    // iteration count for epsilon = 1e-6.
    let mut rng = seeded_rng(0xACC4);
    for _ in 0..100 {
        let a = 0.05 + 4.0 * rng.random::<f64>();
        let b = 2.0 * rng.random::<f64>();
        let psi = SubRootEvaluator::<f64>::affine_sqrt(a, b);
        let r_star = affine_sqrt_fixed_point(a, b);
        let r0 = r_star * (2.0 + 50.0 * rng.random::<f64>());
        let epsilon = 1e-6;
        // The lemma iteration count reaches (1 + eps) r* from r0.
        let count = lemma61_iterations(r0, r_star, epsilon).max(1);
        let mut r = r0;
        for _ in 0..count {
            r = psi.eval(r);
        }
        let rel = (r - r_star) / r_star;
        assert!(
            (-1e-12..=1e-6 + 1e-12).contains(&rel),
            "after {count} steps relative error {rel}"
        );
        // The gap-based solver reaches the same accuracy and converges.
        let fp = fixed_point_iterate(&psi, r0, epsilon, 64).unwrap();
        assert!(fp.converged);
        let rel = (fp.r_star - r_star).abs() / r_star;
        assert!(rel <= 1e-6, "solver relative error {rel}");
    }
    println!("acceptance criterion 04: PASS — fixed-point accuracy 1e-6 within the guaranteed iteration count");
}

#[test]
fn criterion_05_lemma64_exactness() {
    // Identity between the localized loss average and constrained sign
    // fitting, exact to 1e-12 over every feasible localization level, with
    // full sign enumeration (n <= 6, |F| <= 8).
    let mut rng = seeded_rng(0xACC5);
    let mut checked = 0usize;
    for n in 2..=6usize {
        for &f in &[2usize, 4, 8] {
            for _ in 0..5 {
                let rows: Vec<Vec<f64>> = (0..f)
                    .map(|_| {
                        (0..n)
                            .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
                            .collect()
                    })
                    .collect();
                let class = TabulatedClass::new(rows, -1.0, 1.0, None).unwrap();
                let oracle = ErmOracle::FiniteClass(class);
                let ys: Vec<i8> =
                    (0..n).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
                let sample = LabeledSample::new((0..n).collect(), ys).unwrap();
                for k in 0..=n {
                    let b = k as f64 / n as f64;
                    match lemma64_identity(&oracle, &sample, b) {
                        Ok((lhs, rhs)) => {
                            assert!(
                                (lhs - rhs).abs() <= 1e-12,
                                "identity off by {} at n={n}, |F|={f}, b={b}",
                                (lhs - rhs).abs()
                            );
                            checked += 1;
                        }
                        Err(locrad_core::Error::Unsatisfied(_)) => {} // infeasible b
                        Err(e) => panic!("unexpected error: {e}"),
                    }
                }
            }
        }
    }
    assert!(checked > 200, "only {checked} feasible identity checks ran");
    println!("acceptance criterion 05: PASS — localized-loss identity exact to 1e-12 on {checked} checks");
}

#[test]
fn criterion_06_thm63_dominance() {
    // The weighted-ERM upper bound dominates the directly enumerated
    // localized loss complexity (its alpha-grid display) with zero
    // violations on tiny instances over a 20-point radius grid.
    let mut rng = seeded_rng(0xACC6);
    let mu_grid = default_mu_grid::<f64>();
    let mut checks = 0usize;
    for instance in 0..10 {
        let n = 3 + (instance % 4); // 3..=6
        let f = 2 + (rng.random::<u64>() % 7) as usize; // 2..=8
        let rows: Vec<Vec<f64>> = (0..f)
            .map(|_| {
                (0..n)
                    .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
                    .collect()
            })
            .collect();
        let class = TabulatedClass::new(rows, -1.0, 1.0, None).unwrap();
        let oracle = ErmOracle::FiniteClass(class);
        let ys: Vec<i8> = (0..n).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
        let sample = LabeledSample::new((0..n).collect(), ys).unwrap();
        let losses = discrete_loss_table(&oracle, &sample).unwrap();
        let positions = SampleSet::identity(n);
        let x = 0.5;
        for &r in geometric_grid(1e-4, 0.75, 20).iter() {
            let upper =
                thm63_psi_hat_upper(&oracle, &sample, r, x, &mu_grid, SigmaMode::Exact, 0)
                    .unwrap();
            let localized =
                loss_star_hull_local_conditional(&losses, &positions, r, SigmaMode::Exact, 0)
                    .unwrap();
            let direct = 20.0 * localized.alpha_grid_form + 26.0 * x / n as f64;
            assert!(
                upper >= direct - 1e-10,
                "dominance violated at n={n}, r={r}: {upper} < {direct}"
            );
            checks += 1;
        }
    }
    println!("acceptance criterion 06: PASS — weighted-ERM bound dominates the enumerated localized complexity ({checks} checks)");
}

#[test]
fn criterion_07_kernel_spectrum_correctness() {
    // Analytic spectra to 1e-10.
    let half_id: Vec<Vec<f64>> = vec![vec![0.5, 0.0], vec![0.0, 0.5]];
    let (ls, _) = jacobi_eigen(&half_id).unwrap();
    assert!((ls[0] - 0.5).abs() < 1e-10 && (ls[1] - 0.5).abs() < 1e-10);
    let third = 1.0 / 3.0;
    let rank_one: Vec<Vec<f64>> = vec![vec![third; 3]; 3];
    let (ls, _) = jacobi_eigen(&rank_one).unwrap();
    assert!((ls[0] - 1.0).abs() < 1e-10);
    assert!(ls[1].abs() < 1e-10 && ls[2].abs() < 1e-10);
    let diag: Vec<Vec<f64>> = vec![
        vec![0.7, 0.0, 0.0, 0.0],
        vec![0.0, 0.1, 0.0, 0.0],
        vec![0.0, 0.0, 0.4, 0.0],
        vec![0.0, 0.0, 0.0, 0.2],
    ];
    let (ls, _) = jacobi_eigen(&diag).unwrap();
    for (got, want) in ls.iter().zip(&[0.7, 0.4, 0.2, 0.1]) {
        assert!((got - want).abs() < 1e-10);
    }
    // Eigenvalue-capped complexity value at the hand-computed point, exact.
    let s = EigenSpectrum::supplied(vec![0.5, 0.5], SpectrumSource::Empirical).unwrap();
    assert_eq!(lemma66_bound(&s, 2, 0.125), 0.5);
    // Head/tail complexity minimization on the worked spectrum.
    let s = EigenSpectrum::supplied(vec![0.4, 0.2, 0.1, 0.05], SpectrumSource::Empirical).unwrap();
    let (bound, h) = cor67_complexity(&s, 4);
    assert_eq!(h, 0);
    assert!((bound - 0.75f64.sqrt() / 2.0).abs() < 1e-9);
    assert!((bound - 0.4330127018922193).abs() < 1e-9);
    println!("acceptance criterion 07: PASS — kernel spectra and eigenvalue bounds match analytic fixtures");
}

fn desk_config(x: f64, trials: usize, seed: u64, n: usize) -> TrialConfig<f64> {
    let (dist, class) = default_desk_instance(seed, 16, 6, 0.0, 1.0).unwrap();
    TrialConfig::new(dist, class, n, x, trials, seed)
        .unwrap()
        .with_sigma_draws(256)
}

#[test]
fn criterion_08_probabilistic_validity() {
    // Violation frequencies against claimed rates with binomial slack at
    // x in {1, 2} over >= 10^3 trials, and zero violations at x = 10 over
    // 10^4 trials, on the default desk-scale instance family.
    for &x in &[1.0, 2.0] {
        let config = desk_config(x, 1000, 0xD15C + x as u64, 40);
        let rep = validate_containment(&config, ContainmentVariant::TrueToEmpirical22).unwrap();
        assert!(rep.within_binomial_slack(), "containment 2.2 at x={x}: rate {}", rep.violation_rate);
        let rep = validate_containment(&config, ContainmentVariant::EmpiricalToTrue36).unwrap();
        assert!(rep.within_binomial_slack(), "containment 3.6 at x={x}");
        let rep =
            validate_main_bound(&config, MainBoundTheorem::Thm33 { part: ThmPart::One }).unwrap();
        assert!(rep.within_binomial_slack(), "main bound 3.3 at x={x}");
        let rep = validate_main_bound(&config, MainBoundTheorem::Thm41).unwrap();
        assert!(rep.within_binomial_slack(), "main bound 4.1 at x={x}");
        let rep = validate_sandwich(&config, false).unwrap();
        assert!(rep.within_binomial_slack(), "sandwich at x={x}");
        let targets = default_desk_targets(0xD15C, 16);
        let out = validate_excess_risk(
            &config,
            &QuadraticLossSpec { targets },
            &[25, 50],
            50,
        )
        .unwrap();
        assert!(out.report.within_binomial_slack(), "excess risk at x={x}");
        assert!(out.scaling.c_fit.is_finite());
    }
    // x = 10: zero violations in 10^4 trials.
    let config = desk_config(10.0, 10_000, 0xD15D, 30);
    let rep = validate_containment(&config, ContainmentVariant::TrueToEmpirical22).unwrap();
    assert_eq!(rep.violations, 0, "containment violations at x=10");
    let rep =
        validate_main_bound(&config, MainBoundTheorem::Thm33 { part: ThmPart::One }).unwrap();
    assert_eq!(rep.violations, 0, "main bound 3.3 violations at x=10");
    let rep = validate_main_bound(&config, MainBoundTheorem::Thm41).unwrap();
    assert_eq!(rep.violations, 0, "main bound 4.1 violations at x=10");
    let rep = validate_sandwich(&config, false).unwrap();
    assert_eq!(rep.violations, 0, "sandwich violations at x=10");
    let targets = default_desk_targets(0xD15D, 16);
    let out = validate_excess_risk(
        &config,
        &QuadraticLossSpec { targets },
        &[30],
        20,
    )
    .unwrap();
    assert_eq!(out.report.violations, 0, "excess risk violations at x=10");
    println!("acceptance criterion 08: PASS — probabilistic claims validated at desk scale (x = 1, 2, 10)");
}

#[test]
fn criterion_09_symmetrization_and_contraction() {
    // Factor-2 symmetrization on exactly enumerable instances.
    let mut rng = seeded_rng(0xACC9);
    for _ in 0..12 {
        let k = 3usize;
        let weights: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 0.2).collect();
        let total: f64 = weights.iter().sum();
        let mut masses: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let head: f64 = masses[..k - 1].iter().sum();
        masses[k - 1] = 1.0 - head;
        let dist = DiscreteDistribution::new(
            (0..k).map(|i| format!("p{i}")).collect(),
            masses,
            None,
        )
        .unwrap();
        let class = random_class(&mut rng, 3, k, -1.0, 1.0);
        let n = 4;
        let e_rn = expected_rademacher_exhaustive(&class, &dist, n).unwrap();
        for &flip in &[false, true] {
            let deviation =
                expected_sup_deviation_exhaustive(&class, &dist, n, flip).unwrap();
            assert!(
                deviation <= 2.0 * e_rn + 1e-12,
                "symmetrization violated: {deviation} > 2 * {e_rn}"
            );
        }
    }
    // Contraction with phi(t) = t^2 / 2 on [-1, 1] (Lipschitz constant 1).
    let mut rng = seeded_rng(0xACC9B);
    for _ in 0..20 {
        let n = 3 + (rng.random::<u64>() % 6) as usize;
        let f = 2 + (rng.random::<u64>() % 6) as usize;
        let class = random_class(&mut rng, f, n, -1.0, 1.0);
        let squashed_rows: Vec<Vec<f64>> = class
            .rows()
            .iter()
            .map(|row| row.iter().map(|v| v * v / 2.0).collect())
            .collect();
        let squashed = TabulatedClass::new(squashed_rows, -1.0, 1.0, None).unwrap();
        let sample = SampleSet::identity(n);
        let base = conditional_rademacher_exact(&class, &sample).unwrap().value;
        let contracted = conditional_rademacher_exact(&squashed, &sample).unwrap().value;
        assert!(
            contracted <= base + 1e-12,
            "contraction violated: {contracted} > {base}"
        );
    }
    println!("acceptance criterion 09: PASS — symmetrization factor 2 and contraction hold exactly");
}

#[test]
fn criterion_10_kernel_pipeline_end_to_end() {
    // Gaussian kernel on 64 one-dimensional points; the empirical spectrum
    // decays fast, the localized fixed point stays below the h = 0 envelope
    // sqrt(trace / n), the excess-risk assembly is finite, and the emitted
    // JSON is byte-identical across runs. Pipeline knobs (x, L, B) are free
    // in the interface; this configuration uses x = 1e-3, L = 0.05, B = 1.
    let features: Vec<Vec<f64>> = (0..64).map(|i| vec![i as f64 / 64.0]).collect();
    let g = gram(&KernelSpec::Gaussian { width: 0.2 }, &features).unwrap();
    let spectrum = eigen_spectrum(&g).unwrap();
    // Exponential-type decay: each of the first eigenvalues dominates the
    // next by a solid factor and the tail is negligible.
    let ls = spectrum.eigenvalues();
    for w in ls[..9].windows(2) {
        assert!(w[1] <= 0.75 * w[0], "spectrum decays too slowly: {:?}", &ls[..9]);
    }
    assert!(ls[8] < 1e-3 * ls[0]);
    let (x, l, b) = (1e-3, 0.05, 1.0);
    let report = kernel_pipeline(&g, x, l, b, Some(0.125)).unwrap();
    let envelope = (report.trace / 64.0).sqrt();
    assert!((report.h0_envelope - envelope).abs() < 1e-15);
    assert!(
        report.r_hat_star <= envelope,
        "fixed point {} above the h = 0 envelope {envelope}",
        report.r_hat_star
    );
    assert!(report.thm54_report.bound_value.is_finite());
    assert!(report.fixed_point.converged);
    // Determinism: two runs serialize byte-identically.
    let again = kernel_pipeline(&g, x, l, b, Some(0.125)).unwrap();
    let json_a = locrad_core::io::to_json_string(&report).unwrap();
    let json_b = locrad_core::io::to_json_string(&again).unwrap();
    assert_eq!(json_a, json_b);
    println!(
        "acceptance criterion 10: PASS — kernel pipeline: r_hat* = {:.6} <= envelope {envelope:.6}, deterministic JSON",
        report.r_hat_star
    );
}
