//! Acceptance gate for the shipped guarantees. Each test drives one
//! criterion end to end and prints a single PASS or FAIL line with the
//! measured numbers; run `cargo test --test acceptance -- --nocapture`
//! to see the lines.

use std::time::Instant;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use sfm::algorithms::{approx_sfm, exact_sfm, mincut_sgd, multiplicative_approx};
use sfm::descent::project_sparse_cap;
use sfm::gradmaint::OrderTree;
use sfm::lovasz::{full_subgradient, Permutation, SparseVector};
use sfm::lowerbound::{chi_square, reveal_indices, simulate_recognizer, StrategyKind};
use sfm::oracle::{
    CountingOracle, CutInstance, LowerBoundInstance, ScaledInstance, Submodular, TableInstance,
};
use sfm::verify::{brute_force_table, estimator_moments};

fn verdict(name: &str, pass: bool, detail: &str) {
    println!("{}: {name} - {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "{name}: {detail}");
}

fn tight_bound(table: &[f64]) -> f64 {
    table.iter().fold(0.0f64, |a, &v| a.max(v.abs()))
}

fn table_min(table: &[f64]) -> f64 {
    table.iter().fold(f64::INFINITY, |a, &v| a.min(v))
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let m = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    (m * sxy - sx * sy) / (m * sxx - sx * sx)
}

/// Alternates cut-derived tables with concave-of-cardinality tables
/// minus a small modular part; both families are submodular and
/// integer-valued by construction.
fn table_fixture(seed: u64) -> Option<TableInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E3779B97F4A7C15) ^ 0x7AB1E);
    let n = 4 + (seed % 7) as usize;
    if seed % 2 == 0 {
        let cut = CutInstance::random(n, 0.3, 2, seed).ok()?;
        let values = brute_force_table(&cut).ok()?;
        TableInstance::new(n, values).ok()
    } else {
        let c = 1 + rng.random_range(0..n) as i64;
        let p: i64 = 1 + rng.random_range(0..2i64);
        let w: Vec<i64> = (0..n).map(|_| rng.random_range(0..=1i64)).collect();
        let values: Vec<f64> = (0..1u32 << n)
            .map(|mask| {
                let k = mask.count_ones() as i64;
                let modular: i64 =
                    (0..n).filter(|i| mask >> i & 1 == 1).map(|i| w[i]).sum();
                (p * k.min(c) - modular) as f64
            })
            .collect();
        TableInstance::new(n, values).ok()
    }
}

#[test]
fn exact_minimization_matches_brute_force() {
    let started = Instant::now();
    let name = "exactness";
    let mut cuts = 0u32;
    let mut seed = 0u64;
    while cuts < 100 {
        let n = 4 + (seed % 11) as usize;
        let density = 0.15 + 0.05 * ((seed / 11) % 4) as f64;
        let wmax = 1 + seed % 2;
        let inst = CutInstance::random(n, density, wmax, seed).unwrap();
        seed += 1;
        let table = brute_force_table(&inst).unwrap();
        let m = tight_bound(&table);
        if !(1.0..=8.0).contains(&m) {
            continue;
        }
        let report = exact_sfm(&inst, m).unwrap();
        let opt = table_min(&table);
        if report.value != opt {
            verdict(
                name,
                false,
                &format!("cut seed {} returned {} instead of {opt}", seed - 1, report.value),
            );
        }
        cuts += 1;
    }
    let mut tables = 0u32;
    let mut attempt = 0u64;
    while tables < 100 {
        let fixture = table_fixture(attempt);
        attempt += 1;
        let Some(inst) = fixture else { continue };
        let values = brute_force_table(&inst).unwrap();
        let m = tight_bound(&values);
        if !(1.0..=8.0).contains(&m) {
            continue;
        }
        let report = exact_sfm(&inst, m).unwrap();
        let opt = table_min(&values);
        if report.value != opt {
            verdict(
                name,
                false,
                &format!("table fixture {} returned {} instead of {opt}", attempt - 1, report.value),
            );
        }
        tables += 1;
    }
    verdict(
        name,
        true,
        &format!(
            "100 cut and 100 table instances matched brute force exactly in {:.1?}",
            started.elapsed()
        ),
    );
}

#[test]
fn maintained_gradients_match_recomputation() {
    let started = Instant::now();
    let name = "gradient maintenance";
    let mut worst_real = 0.0f64;
    for run in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(run.wrapping_mul(7).wrapping_add(1));
        let n = 2 + (run as usize * 13) % 63;
        let cut = CutInstance::random(n, 0.2, 3, run).unwrap();
        let integer = run % 2 == 0;
        let scaled;
        let inst: &dyn Submodular = if integer {
            &cut
        } else {
            scaled = ScaledInstance::new(&cut, 3.0).unwrap();
            &scaled
        };
        let oracle = CountingOracle::new(inst);
        let x0: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        let mut tree = OrderTree::build(&oracle, &x0).unwrap();
        for step in 0..50 {
            let mut pairs: Vec<(usize, f64)> = Vec::new();
            for _ in 0..1 + rng.random_range(0..3) {
                let c = rng.random_range(0..n);
                if pairs.iter().any(|&(i, _)| i == c) {
                    continue;
                }
                let delta = rng.random::<f64>() - tree.effective(c);
                if delta != 0.0 {
                    pairs.push((c, delta));
                }
            }
            let edit = SparseVector::from_pairs(pairs).unwrap();
            tree.apply_update_exact(&oracle, &edit).unwrap();
            let stored = tree.dense_gradient().unwrap();
            let recomputed = full_subgradient(&oracle, &tree.point()).unwrap();
            for c in 0..n {
                let err = (stored[c] - recomputed[c]).abs();
                if integer && err != 0.0 {
                    verdict(
                        name,
                        false,
                        &format!("run {run} step {step}: integer entry {c} off by {err:e}"),
                    );
                }
                if !integer {
                    worst_real = worst_real.max(err);
                    if err > 1e-9 {
                        verdict(
                            name,
                            false,
                            &format!("run {run} step {step}: real entry {c} off by {err:e}"),
                        );
                    }
                }
            }
        }
    }
    verdict(
        name,
        true,
        &format!(
            "5000 updates: integer entries exact, real worst error {worst_real:.2e}, in {:.1?}",
            started.elapsed()
        ),
    );
}

/// Checks the l1 bound, integer sparsity, untouched-coordinate
/// monotonicity, and the interval sum formula on random points.
fn lemma_violations(
    inst: &dyn Submodular,
    m: f64,
    integer: bool,
    trials: u64,
    rng: &mut ChaCha8Rng,
) -> u64 {
    let oracle = CountingOracle::new(inst);
    let n = inst.n();
    let mut violations = 0;
    for _ in 0..trials {
        let x: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        let g = full_subgradient(&oracle, &x).unwrap();
        let l1: f64 = g.iter().map(|v| v.abs()).sum();
        if l1 > 3.0 * m + 1e-9 {
            violations += 1;
        }
        if integer {
            let nnz = g.iter().filter(|v| v.abs() > 0.5).count() as f64;
            if nnz > 3.0 * m {
                violations += 1;
            }
        }
        let mut support: Vec<usize> = (0..n).collect();
        support.shuffle(rng);
        support.truncate(1 + rng.random_range(0..3.min(n)));
        let up = rng.random::<bool>();
        let mut y = x.clone();
        for &c in &support {
            let u = 0.05 + 0.9 * rng.random::<f64>();
            y[c] = if up { x[c] + (1.0 - x[c]) * u } else { x[c] * (1.0 - u) };
        }
        let gy = full_subgradient(&oracle, &y).unwrap();
        for i in 0..n {
            if support.contains(&i) {
                continue;
            }
            let drop = if up { g[i] - gy[i] } else { gy[i] - g[i] };
            if drop < -1e-9 {
                violations += 1;
                break;
            }
        }
        let perm = Permutation::consistent_with(&x).unwrap();
        let a = 1 + rng.random_range(0..n);
        let b = a + rng.random_range(0..n - a + 1);
        let sum: f64 = (a..=b).map(|k| g[perm.order()[k - 1]]).sum();
        let f_b = oracle.evaluate_prefix(perm.order(), b).unwrap();
        let f_a = oracle.evaluate_prefix(perm.order(), a - 1).unwrap();
        if (sum - (f_b - f_a)).abs() > 1e-9 * (1.0 + m) {
            violations += 1;
        }
    }
    violations
}

#[test]
fn subgradient_lemma_invariants_hold() {
    let started = Instant::now();
    let name = "subgradient lemmas";
    let mut rng = ChaCha8Rng::seed_from_u64(0x1E44A);
    let mut violations = 0u64;
    let mut trials = 0u64;
    for i in 0..100u64 {
        let n = 4 + (i % 7) as usize;
        let cut = CutInstance::random(n, 0.3, 2, 500 + i).unwrap();
        let m = tight_bound(&brute_force_table(&cut).unwrap());
        violations += lemma_violations(&cut, m, true, 10, &mut rng);
        trials += 10;
    }
    let mut collected = 0u64;
    let mut attempt = 0u64;
    while collected < 100 {
        let fixture = table_fixture(attempt);
        attempt += 1;
        let Some(inst) = fixture else { continue };
        let m = tight_bound(&brute_force_table(&inst).unwrap());
        violations += lemma_violations(&inst, m, true, 10, &mut rng);
        trials += 10;
        collected += 1;
    }
    for i in 0..100u64 {
        let n = 4 + (i % 7) as usize;
        let cut = CutInstance::random(n, 0.3, 2, 700 + i).unwrap();
        let m = tight_bound(&brute_force_table(&cut).unwrap()) / 3.0;
        let scaled = ScaledInstance::new(&cut, 3.0).unwrap();
        violations += lemma_violations(&scaled, m, false, 10, &mut rng);
        trials += 10;
    }
    for i in 0..100u64 {
        let n = 2 + (i % 9) as usize;
        let mut r: Vec<usize> = (0..n).filter(|_| rng.random::<bool>()).collect();
        if r.is_empty() {
            r.push(rng.random_range(0..n));
        }
        let inst = LowerBoundInstance::new(n, &r).unwrap();
        violations += lemma_violations(&inst, 1.0, true, 10, &mut rng);
        trials += 10;
    }
    verdict(
        name,
        violations == 0,
        &format!(
            "{violations} violations over {trials} trials across four instance families in {:.1?}",
            started.elapsed()
        ),
    );
}

#[test]
fn difference_estimator_is_unbiased_with_bounded_variance() {
    let started = Instant::now();
    let name = "difference estimator";
    let mut rng = ChaCha8Rng::seed_from_u64(0xE577);
    for &(n, seed) in &[(32usize, 1u64), (8, 2)] {
        let cut = CutInstance::random(n, 0.15, 2, seed).unwrap();
        assert!(cut.m_bound() > 0.0, "fixture must have at least one edge");
        let scaled = ScaledInstance::new(&cut, cut.m_bound()).unwrap();
        let oracle = CountingOracle::new(&scaled);
        let mut x: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        let c0 = rng.random_range(0..n);
        let c1 = (c0 + 1 + rng.random_range(0..n - 1)) % n;
        x[c0] = x[c0].min(0.5);
        x[c1] = x[c1].min(0.5);
        let e = SparseVector::from_pairs(vec![(c0, 0.3), (c1, 0.2)]).unwrap();
        let report = estimator_moments(&oracle, &x, &e, 4, 100_000, &mut rng).unwrap();
        for i in 0..n {
            let err = (report.mean[i] - report.exact_diff[i]).abs();
            if err > 4.0 * report.mean_se[i] + 1e-12 {
                verdict(
                    name,
                    false,
                    &format!(
                        "n={n} coordinate {i}: mean off by {err:.2e} vs 4 SE {:.2e}",
                        4.0 * report.mean_se[i]
                    ),
                );
            }
        }
    }
    let cut = CutInstance::random(8, 0.4, 3, 9).unwrap();
    let scaled = ScaledInstance::new(&cut, cut.m_bound()).unwrap();
    let oracle = CountingOracle::new(&scaled);
    let x = vec![0.3, 0.55, 0.1, 0.8, 0.45, 0.2, 0.65, 0.5];
    let e = SparseVector::from_pairs(vec![(2, 0.4)]).unwrap();
    let mut worst_ratio = 0.0f64;
    for &ell in &[1u64, 4, 16] {
        let report = estimator_moments(&oracle, &x, &e, ell, 100_000, &mut rng).unwrap();
        let bound = 9.0 / ell as f64;
        worst_ratio = worst_ratio.max(report.second_central_moment / bound);
        if report.second_central_moment > bound {
            verdict(
                name,
                false,
                &format!(
                    "ell={ell}: E||z-Ez||^2 = {:.4} exceeds {bound}",
                    report.second_central_moment
                ),
            );
        }
    }
    verdict(
        name,
        true,
        &format!(
            "means within 4 SE of exact differences; E||z-Ez||^2 <= 9/ell with worst ratio {worst_ratio:.2e}, in {:.1?}",
            started.elapsed()
        ),
    );
}

#[test]
fn additive_runs_meet_tolerance_and_oracle_budget() {
    let started = Instant::now();
    let name = "additive approximation";
    let eps = 0.1;
    let mut worst_margin = f64::NEG_INFINITY;
    let mut worst_batch_ratio = 0.0f64;
    for i in 0..20u64 {
        let n = 6 + (i % 7) as usize;
        // Flattened into an explicit [-1,1] table so each query is O(1).
        let cut = CutInstance::random(n, 0.35, 3, 40 + i).unwrap();
        let raw = brute_force_table(&cut).unwrap();
        let m = tight_bound(&raw).max(1.0);
        let values: Vec<f64> = raw.iter().map(|v| v / m).collect();
        let opt = table_min(&values);
        let inst = TableInstance::new(n, values).unwrap();
        let nf = n as f64;
        let period = nf.cbrt().ceil().max(1.0) as u64;
        let steps = (10.0 * nf * nf.ln() * nf.ln() / (eps * eps)).ceil().max(1.0) as u64;
        let batches = steps.div_ceil(period);
        let batch_budget = 10.0 * (nf + (period as f64).powi(3) * nf.ln() * nf.ln());
        let mut observed = Vec::with_capacity(50);
        for seed in 0..50u64 {
            let report = approx_sfm(&inst, eps, seed).unwrap();
            if report.batches != batches || report.iterations != batches * period {
                verdict(
                    name,
                    false,
                    &format!(
                        "instance {i} seed {seed}: schedule {} batches x {} steps, expected {batches} x {period}",
                        report.batches,
                        report.iterations / report.batches.max(1)
                    ),
                );
            }
            let per_batch = report.eval_calls as f64 / report.batches as f64;
            worst_batch_ratio = worst_batch_ratio.max(per_batch / batch_budget);
            if per_batch > batch_budget {
                verdict(
                    name,
                    false,
                    &format!("instance {i} seed {seed}: {per_batch:.1} calls per batch exceeds {batch_budget:.1}"),
                );
            }
            observed.push(report.value);
        }
        let (mean, se) = mean_and_se(&observed);
        let allowed = opt + eps + 3.0 * se;
        worst_margin = worst_margin.max(mean - allowed);
        if mean > allowed {
            verdict(
                name,
                false,
                &format!("instance {i} (n={n}): mean {mean:.4} above allowed {allowed:.4}"),
            );
        }
    }
    verdict(
        name,
        true,
        &format!(
            "20 instances x 50 seeds: worst mean-vs-allowed margin {worst_margin:.4}, per-batch call ratio {worst_batch_ratio:.3}, schedule verbatim, in {:.1?}",
            started.elapsed()
        ),
    );
}

#[test]
fn exact_eval_scaling_is_nearly_linear_in_n() {
    let started = Instant::now();
    let name = "exact scaling";
    let sizes = [64usize, 128, 256, 512, 1024];
    let mut points = Vec::new();
    for (si, &n) in sizes.iter().enumerate() {
        let mut total = 0u64;
        for seed in 0..3u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + 10 * si as u64 + seed);
            let u = rng.random_range(0..n);
            let v = rng.random_range(0..n);
            let w = (v + 1 + rng.random_range(0..n - 1)) % n;
            let inst = CutInstance::new(
                n,
                vec![(CutInstance::SOURCE, u, 1.0), (v, w, 1.0)],
            )
            .unwrap();
            // Total edge weight 2 certifies |f| <= 2 at any n.
            let report = exact_sfm(&inst, 2.0).unwrap();
            total += report.eval_calls;
        }
        points.push(((n as f64).ln(), (total as f64 / 3.0).ln()));
    }
    let slope = least_squares_slope(&points);
    verdict(
        name,
        slope <= 1.25,
        &format!(
            "log-log eval-call slope {slope:.3} over n in {sizes:?} (3 seeds each) in {:.1?}",
            started.elapsed()
        ),
    );
}

/// Exhaustive active-set reference for the capped-box projection: every
/// floor/free/ceiling pattern with its binding multiplier, plus the
/// plain box clamp, filtered for feasibility.
fn reference_projection(y: &[f64], cap: f64) -> Vec<f64> {
    let n = y.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut consider = |x: Vec<f64>, best: &mut Option<(f64, Vec<f64>)>| {
        if x.iter().any(|&v| !(-1e-12..=1.0 + 1e-12).contains(&v)) {
            return;
        }
        if x.iter().sum::<f64>() > cap + 1e-9 {
            return;
        }
        let obj: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
        if best.as_ref().is_none_or(|(b, _)| obj < *b) {
            *best = Some((obj, x));
        }
    };
    consider(y.iter().map(|v| v.clamp(0.0, 1.0)).collect(), &mut best);
    let mut pattern = vec![0u8; n];
    loop {
        let free: Vec<usize> = (0..n).filter(|&i| pattern[i] == 1).collect();
        let ones = pattern.iter().filter(|&&d| d == 2).count() as f64;
        if free.is_empty() {
            let x: Vec<f64> = pattern.iter().map(|&d| if d == 2 { 1.0 } else { 0.0 }).collect();
            consider(x, &mut best);
        } else {
            let sum_free: f64 = free.iter().map(|&i| y[i]).sum();
            let lambda = (sum_free + ones - cap) / free.len() as f64;
            if lambda > 1e-12 {
                let mut x = vec![0.0; n];
                for i in 0..n {
                    x[i] = match pattern[i] {
                        2 => 1.0,
                        1 => y[i] - lambda,
                        _ => 0.0,
                    };
                }
                consider(x, &mut best);
            }
        }
        let mut digit = 0;
        loop {
            if digit == n {
                return best.expect("box clamp candidate always feasible when cap > 0").1;
            }
            if pattern[digit] < 2 {
                pattern[digit] += 1;
                break;
            }
            pattern[digit] = 0;
            digit += 1;
        }
    }
}

#[test]
fn capped_projection_matches_exhaustive_reference() {
    let started = Instant::now();
    let name = "capped projection";
    let mut rng = ChaCha8Rng::seed_from_u64(0x9A07);
    let mut worst = 0.0f64;
    for trial in 0..1000usize {
        let n = 1 + trial % 8;
        let y: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.5 - 0.75).collect();
        let cap = 0.05 + rng.random::<f64>() * (n as f64 - 0.05);
        let (mine, _lambda) = project_sparse_cap(&y, cap).unwrap();
        let reference = reference_projection(&y, cap);
        for i in 0..n {
            worst = worst.max((mine[i] - reference[i]).abs());
        }
    }
    verdict(
        name,
        worst <= 1e-9,
        &format!(
            "1000 random points, n up to 8: worst coordinate gap {worst:.2e} vs active-set enumeration, in {:.1?}",
            started.elapsed()
        ),
    );
}

#[test]
fn recognizer_needs_linear_queries_and_geometric_reveals() {
    let started = Instant::now();
    let name = "recognizer lower bound";
    let mut min_ratio = f64::INFINITY;
    for &n in &[32usize, 64, 128] {
        for kind in StrategyKind::ALL {
            let mut strategy = kind.build();
            let report =
                simulate_recognizer(strategy.as_mut(), n, 10_000, 0xB0 + n as u64).unwrap();
            min_ratio = min_ratio.min(report.mean_queries / (n as f64 / 4.0));
            if report.mean_queries < n as f64 / 4.0 {
                verdict(
                    name,
                    false,
                    &format!(
                        "{} at n={n}: mean {:.2} queries under the n/4 floor",
                        kind.name(),
                        report.mean_queries
                    ),
                );
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x6E0);
    let n = 128;
    let draws = 20_000u64;
    let perm = Permutation::new((0..n).collect()).unwrap();
    let mut observed = vec![0u64; 8];
    for _ in 0..draws {
        let in_r: Vec<bool> = (0..n).map(|_| rng.random()).collect();
        let reveal = reveal_indices(&in_r, &perm).unwrap();
        let bin = match reveal.first_outside {
            Some(i) if i <= 7 => i - 1,
            _ => 7,
        };
        observed[bin] += 1;
    }
    let mut expected: Vec<f64> = (1..=7).map(|i| draws as f64 * 0.5f64.powi(i)).collect();
    expected.push(draws as f64 * 0.5f64.powi(7));
    let stat = chi_square(&observed, &expected).unwrap();
    let critical = 18.475;
    verdict(
        name,
        stat <= critical,
        &format!(
            "all strategies above the n/4 floor (min ratio {min_ratio:.2}); reveal chi-square {stat:.2} vs {critical} (1%, 7 df), in {:.1?}",
            started.elapsed()
        ),
    );
}

#[test]
fn mincut_mean_value_is_within_additive_tolerance() {
    let started = Instant::now();
    let name = "mincut specialization";
    let eps = 0.05;
    let mut worst_margin = f64::NEG_INFINITY;
    for i in 0..20u64 {
        let n = 2 + (i % 7) as usize;
        let cut = CutInstance::random(n, 0.45, 3, 900 + i).unwrap();
        let w = cut.m_bound();
        let opt = table_min(&brute_force_table(&cut).unwrap());
        let mut observed = Vec::with_capacity(5);
        for seed in 0..5u64 {
            observed.push(mincut_sgd(&cut, eps, seed).unwrap().value);
        }
        let (mean, se) = mean_and_se(&observed);
        let allowed = opt + eps * w + 3.0 * se;
        worst_margin = worst_margin.max(mean - allowed);
        if mean > allowed {
            verdict(
                name,
                false,
                &format!("digraph {i} (n={n}): mean {mean:.4} above allowed {allowed:.4}"),
            );
        }
    }
    verdict(
        name,
        true,
        &format!(
            "20 digraphs x 5 seeds: worst mean-vs-allowed margin {worst_margin:.4} at eps 0.05, in {:.1?}",
            started.elapsed()
        ),
    );
}

/// Random cut table shifted down by the modular function of per-element
/// maximum marginals: submodular, integer, nonpositive, with f(0) = 0.
fn nonpositive_fixture(seed: u64) -> Option<TableInstance> {
    let n = 4 + (seed % 5) as usize;
    let cut = CutInstance::random(n, 0.5, 2, 3000 + seed).ok()?;
    let h = brute_force_table(&cut).ok()?;
    let mut u = vec![0.0f64; n];
    for (i, ui) in u.iter_mut().enumerate() {
        let mut best = f64::NEG_INFINITY;
        for mask in 0..1usize << n {
            if mask >> i & 1 == 0 {
                best = best.max(h[mask | 1 << i] - h[mask]);
            }
        }
        *ui = best;
    }
    let values: Vec<f64> = (0..1usize << n)
        .map(|mask| {
            h[mask] - (0..n).filter(|i| mask >> i & 1 == 1).map(|i| u[i]).sum::<f64>()
        })
        .collect();
    if table_min(&values) >= 0.0 {
        return None;
    }
    TableInstance::new(n, values).ok()
}

#[test]
fn multiplicative_runs_halve_the_optimum() {
    let started = Instant::now();
    let name = "multiplicative reduction";
    let delta = 0.5;
    let mut collected = 0u32;
    let mut seed = 0u64;
    let mut worst_margin = f64::NEG_INFINITY;
    while collected < 15 {
        let fixture = nonpositive_fixture(seed);
        seed += 1;
        let Some(inst) = fixture else { continue };
        let opt = table_min(&brute_force_table(&inst).unwrap());
        let mut observed = Vec::with_capacity(50);
        for s in 0..50u64 {
            observed.push(multiplicative_approx(&inst, delta, s).unwrap().value);
        }
        let (mean, se) = mean_and_se(&observed);
        let allowed = 0.5 * opt + 3.0 * se;
        worst_margin = worst_margin.max(mean - allowed);
        if mean > allowed {
            verdict(
                name,
                false,
                &format!(
                    "fixture {} (opt {opt}): mean {mean:.4} above allowed {allowed:.4}",
                    seed - 1
                ),
            );
        }
        collected += 1;
    }
    verdict(
        name,
        true,
        &format!(
            "15 nonpositive instances x 50 seeds: worst mean-vs-allowed margin {worst_margin:.4} at delta 0.5, in {:.1?}",
            started.elapsed()
        ),
    );
}
