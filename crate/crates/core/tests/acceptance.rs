//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails. `ACCEPTANCE_ONLY=2,7` runs a subset.

mod common;

use std::fs;
use std::process::ExitCode;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::Rng;
use pgembed::data::{sim_embedding, sim_pairs, SimConfig, SimulationTruth};
use pgembed::diagnostics::{
    convergence_slope, coverage_intervals, ess, holdout_ll, posterior_mean, summarize_coverage, ScalarTrace,
};
use pgembed::gibbs::{random_init, run_chain, sample_pg, GibbsConfig};
use pgembed::io::{save_draw_store, DRAWS_FILE, META_FILE};
use pgembed::laplace::{assemble_hessian, build_laplace, fit_map, laplace_draws, MapConfig, ParamLayout};
use pgembed::model::{canonicalize, co_prob, log_likelihood, rmse_co, sigmoid, PairCount};
use pgembed::{EmbeddingState, IdentificationConstraint, PairStats, PosteriorDraws, PriorSpec};

use common::*;

const V: usize = 100;
const K: usize = 5;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

struct Fitted {
    truth: SimulationTruth,
    stats: PairStats,
    prior: PriorSpec,
    map: EmbeddingState,
    constraint: IdentificationConstraint,
}

/// Simulate, fit the MAP from a random start and fix the last `K` context rows at it.
fn simulate_and_fit(truth: SimulationTruth) -> Fitted {
    let stats = sim_pairs(&truth).unwrap();
    let prior = PriorSpec::new(truth.config.matched_lambda()).unwrap();
    let init = random_init(V, K, truth.config.seed ^ 0x5eed, None).unwrap();
    let fit = fit_map(&stats, &prior, &MapConfig::default(), &init, None).unwrap();
    let constraint = IdentificationConstraint::last_k(&fit.theta).unwrap();
    Fitted { truth, stats, prior, map: fit.theta, constraint }
}

fn dataset(seed: u64, n: u64) -> Fitted {
    simulate_and_fit(sim_embedding(&SimConfig::uniform(V, K, n, seed)).unwrap())
}

fn gibbs(f: &Fitted, iterations: usize, burn_in: usize, seed: u64, width: usize) -> PosteriorDraws {
    let cfg = GibbsConfig {
        outer_iterations: iterations,
        burn_in,
        inner_steps: 10,
        seed,
        warm_start_inner: false,
        parallel_width: width,
    };
    run_chain(&f.stats, &f.prior, &cfg, &f.map, Some(&f.constraint)).unwrap()
}

fn median(mut x: Vec<f64>) -> f64 {
    x.sort_by(f64::total_cmp);
    let n = x.len();
    if n % 2 == 1 {
        x[n / 2]
    } else {
        0.5 * (x[n / 2 - 1] + x[n / 2])
    }
}

fn co_prob_ess(draws: &PosteriorDraws) -> Vec<f64> {
    let mut out = Vec::with_capacity(V * V);
    for w in 0..V {
        for v in 0..V {
            let values = draws.draws().iter().map(|d| co_prob(d, w, v)).collect();
            out.push(ess(&ScalarTrace::new(values, "p").unwrap()).unwrap());
        }
    }
    out
}

fn store_bytes(draws: &PosteriorDraws) -> Vec<u8> {
    let dir = tempfile::tempdir().unwrap();
    save_draw_store(draws, Some(10), "gibbs", dir.path()).unwrap();
    let mut bytes = fs::read(dir.path().join(META_FILE)).unwrap();
    bytes.extend(fs::read(dir.path().join(DRAWS_FILE)).unwrap());
    bytes
}

const COVERAGE_DATASETS: u64 = 10;

/// Criteria 1, 4 and 10 share the Gibbs runs.
fn gibbs_coverage(run: &[bool; 11]) -> Vec<(usize, Outcome)> {
    let mut coverages = Vec::new();
    let mut all_ess = Vec::new();
    let mut first_store = None;
    let datasets = if run[1] || run[4] { COVERAGE_DATASETS } else { 1 };
    for d in 0..datasets {
        let f = dataset(1000 + d, 20_000);
        let draws = gibbs(&f, 2000, 1000, 2000 + d, 1);
        let rows = coverage_intervals(&draws, &f.truth.theta_true, 0.9).unwrap();
        let frac = summarize_coverage(&rows, 0.9).fraction_covered;
        coverages.push(frac);
        if run[4] {
            all_ess.extend(co_prob_ess(&draws));
        }
        if d == 0 && run[10] {
            first_store = Some(store_bytes(&draws));
        }
        eprintln!("  dataset {d}: coverage {:.2}%", 100.0 * frac);
    }
    let mut out = Vec::new();
    if run[1] {
        let mean = 100.0 * coverages.iter().sum::<f64>() / coverages.len() as f64;
        out.push((
            1,
            outcome(
                (88.5..=91.0).contains(&mean),
                format!("mean 90% CI coverage {mean:.2}% over {datasets} datasets (target [88.5, 91.0])"),
            ),
        ));
    }
    if run[4] {
        let m = median(all_ess);
        out.push((4, outcome((150.0..=700.0).contains(&m), format!("median co_prob ESS {m:.1} of 1000 (target [150, 700])"))));
    }
    if run[10] {
        let f = dataset(1000, 20_000);
        let wide = store_bytes(&gibbs(&f, 2000, 1000, 2000, 32));
        let narrow = match first_store {
            Some(b) => b,
            None => store_bytes(&gibbs(&f, 2000, 1000, 2000, 1)),
        };
        out.push((
            10,
            outcome(narrow == wide, format!("draw stores at widths 1 and 32 identical: {} ({} bytes)", narrow == wide, narrow.len())),
        ));
    }
    out
}

fn laplace_large_n() -> Outcome {
    let f = dataset(77, 1_000_000);
    let model = build_laplace(&f.stats, &f.prior, &f.map, &f.constraint).unwrap();
    let draws = laplace_draws(&model, 1000, 78).unwrap();
    let cov = 100.0 * summarize_coverage(&coverage_intervals(&draws, &f.truth.theta_true, 0.9).unwrap(), 0.9).fraction_covered;
    outcome(
        (88.5..=92.0).contains(&cov),
        format!("Laplace coverage at N=1e6 {cov:.2}% (target [88.5, 92.0]), {} eigenvalues clipped", model.clipped_count()),
    )
}

const SLOPE_NS: [u64; 5] = [1_000, 3_000, 10_000, 30_000, 100_000];
const SLOPE_SEEDS: u64 = 5;
const SLOPE_BURN_IN: usize = 200;
const SLOPE_DRAWS: usize = 300;

fn convergence_rate() -> Outcome {
    let mut sums = [0.0; SLOPE_NS.len()];
    for s in 0..SLOPE_SEEDS {
        let truth = sim_embedding(&SimConfig::uniform(V, K, 1, 3000 + s)).unwrap();
        for (i, &n) in SLOPE_NS.iter().enumerate() {
            let f = simulate_and_fit(truth.with_pairs(n, 4000 + 10 * s + i as u64));
            let draws = gibbs(&f, SLOPE_BURN_IN + SLOPE_DRAWS, SLOPE_BURN_IN, 5000 + s, 1);
            let rmse = rmse_co(&posterior_mean(&draws).unwrap(), &f.truth.theta_true).unwrap();
            sums[i] += rmse / SLOPE_SEEDS as f64;
        }
    }
    let points: Vec<(u64, f64)> = SLOPE_NS.iter().copied().zip(sums).collect();
    let slope = convergence_slope(&points).unwrap();
    let [.., (n1, r1), (n2, r2)] = points[..] else { unreachable!() };
    let tail = (r2 / r1).ln() / (n2 as f64 / n1 as f64).ln();
    let table: Vec<String> = points.iter().map(|(n, r)| format!("{n}:{r:.4}")).collect();
    outcome(
        (-0.62..=-0.38).contains(&slope),
        format!(
            "log-log slope {slope:.3} (target [-0.62, -0.38]); slope over the two largest N {tail:.3}; rmse {}",
            table.join(" ")
        ),
    )
}

fn mean_beats_map() -> Outcome {
    let mut wins = 0;
    let mut diffs = Vec::new();
    for r in 0..10u64 {
        let truth = sim_embedding(&SimConfig::uniform(V, K, 10_000, 6000 + r)).unwrap();
        let f = simulate_and_fit(truth.clone());
        let test = sim_pairs(&truth.with_pairs(1_000, 7000 + r)).unwrap();
        let draws = gibbs(&f, 2000, 1000, 8000 + r, 1);
        let pm = holdout_ll(&posterior_mean(&draws).unwrap(), &test).unwrap();
        let map = holdout_ll(&f.map, &test).unwrap();
        if pm >= map {
            wins += 1;
        }
        diffs.push(format!("{:+.4}", pm - map));
    }
    outcome(wins >= 8, format!("posterior mean >= MAP in {wins}/10 replicates (target >= 8); differences {}", diffs.join(" ")))
}

fn identification_properties() -> Outcome {
    let mut rng = seeded(6);
    let mut worst_ll = 0.0f64;
    for _ in 0..50 {
        let v = rng.random_range(4..12);
        let k = rng.random_range(1..=3);
        let theta = random_state(v, k, 0.8, &mut rng);
        let stats = random_stats(v, 0.5, 5, &mut rng);
        let c = random_constraint(v, k, &mut rng);
        let canon = match canonicalize(&theta, &c) {
            Ok(t) => t,
            Err(_) => continue,
        };
        let (a, b) = (log_likelihood(&stats, &theta).unwrap(), log_likelihood(&stats, &canon).unwrap());
        worst_ll = worst_ll.max((a - b).abs() / a.abs().max(f64::MIN_POSITIVE));
    }
    let mut worst_rmse = 0.0f64;
    for _ in 0..50 {
        let (v, k) = (10, 3);
        let theta = random_state(v, k, 0.8, &mut rng);
        let a = loop {
            let m = DMatrix::from_vec(k, k, normals(k * k, 1.0, &mut rng)) + DMatrix::identity(k, k);
            if m.clone().svd(false, false).singular_values.min() > 0.05 {
                break m;
            }
        };
        let a_inv_t = a.clone().try_inverse().unwrap().transpose();
        let rho = DMatrix::from_row_slice(v, k, theta.rho()) * a_inv_t;
        let alpha = DMatrix::from_row_slice(v, k, theta.alpha()) * &a;
        let moved =
            EmbeddingState::new(v, k, rho.transpose().as_slice().to_vec(), alpha.transpose().as_slice().to_vec()).unwrap();
        worst_rmse = worst_rmse.max(rmse_co(&theta, &moved).unwrap());
    }
    outcome(
        worst_ll < 1e-8 && worst_rmse < 1e-10,
        format!("max relative log-likelihood change {worst_ll:.2e} (< 1e-8), max rmse_co under GL(K) {worst_rmse:.2e} (< 1e-10)"),
    )
}

fn numeric_properties() -> Outcome {
    let mut rng = seeded(7);
    let mut worst_grad = 0.0f64;
    let mut worst_hess = 0.0f64;
    for _ in 0..20 {
        let v = rng.random_range(3..8);
        let k = rng.random_range(1..=3);
        let theta = random_state(v, k, 0.7, &mut rng);
        let stats = random_stats(v, 0.6, 6, &mut rng);
        let prior = PriorSpec::new(rng.random_range(0.5..3.0)).unwrap();
        let an = analytic_gradient(&stats, &theta, &prior);
        let fd = fd_gradient(&stats, &theta, &prior, 1e-5);
        worst_grad = an.iter().zip(&fd).map(|(a, b)| rel_err(*a, *b)).fold(worst_grad, f64::max);
        let h = assemble_hessian(&stats, &theta, &prior).unwrap().to_dense();
        let fdh = fd_hessian(&stats, &theta, &prior, 1e-5);
        for (i, row) in fdh.iter().enumerate() {
            for (j, x) in row.iter().enumerate() {
                worst_hess = worst_hess.max(rel_err(h[(i, j)], *x));
            }
        }
    }
    // The full-space Hessian has exact zero eigenvalues along rotations
    // (rho O, alpha O), so the mode is located to a tight tolerance before
    // checking it; the free-coordinate Hessian used by the Laplace path must be
    // strictly negative.
    let truth = sim_embedding(&SimConfig::uniform(V, K, 20_000, 9)).unwrap();
    let stats = sim_pairs(&truth).unwrap();
    let prior = PriorSpec::new(truth.config.matched_lambda()).unwrap();
    let tight = MapConfig { gradient_tolerance: 1e-10, ..MapConfig::default() };
    let fit = fit_map(&stats, &prior, &tight, &random_init(V, K, 9, None).unwrap(), None).unwrap();
    let h = assemble_hessian(&stats, &fit.theta, &prior).unwrap();
    let max_eig = h.to_dense().symmetric_eigen().eigenvalues.max();
    let c = IdentificationConstraint::last_k(&fit.theta).unwrap();
    let free = h.to_dense_free(&ParamLayout::new(V, K, Some(&c)));
    let max_free = free.symmetric_eigen().eigenvalues.max();
    outcome(
        worst_grad < 1e-5 && worst_hess < 1e-4 && max_eig <= 1e-8 && max_free <= 1e-8,
        format!(
            "gradient FD error {worst_grad:.2e} (< 1e-5), Hessian FD error {worst_hess:.2e} (< 1e-4), max Hessian eigenvalue at MAP {max_eig:.3e} full, {max_free:.3e} free (<= 1e-8); MAP gradient {:.1e}",
            fit.grad_sup_norm
        ),
    )
}

fn pg_moments() -> Outcome {
    let mut rng = seeded(8);
    let n = 100_000;
    let mut worst = 0.0f64;
    for c in [0.0, 0.5, 1.0, 2.0, 4.0] {
        let xs: Vec<f64> = (0..n).map(|_| sample_pg(1, c, &mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n as f64;
        let (tm, tv) = pg_series_moments(1.0, c, 200);
        let z_mean = (mean - tm).abs() / (var / n as f64).sqrt();
        let z_var = (var - tv).abs() / ((m4 - var * var) / n as f64).sqrt();
        worst = worst.max(z_mean).max(z_var);
    }
    outcome(worst < 4.0, format!("largest standardized moment error {worst:.2} SE over c in {{0,0.5,1,2,4}} (< 4)"))
}

fn exact_conditional() -> Outcome {
    // V=2, K=1, one observed pair; the likelihood only involves rho_0 * alpha_1.
    let (n_pos, n_neg, lambda) = (3u64, 1u64, 1.0);
    let stats = PairStats::new(2, 0, [PairCount { w: 0, v: 1, n_pos, n_neg }]).unwrap();
    let prior = PriorSpec::new(lambda).unwrap();
    let thin = 5;
    let n = 10_000;
    let cfg = GibbsConfig { outer_iterations: n * thin + 500, burn_in: 500, inner_steps: 10, seed: 9, ..Default::default() };
    let init = random_init(2, 1, 9, None).unwrap();
    let draws = run_chain(&stats, &prior, &cfg, &init, None).unwrap();
    let kept: Vec<&EmbeddingState> = draws.draws().iter().step_by(thin).take(n).collect();

    let lik = |x: f64| sigmoid(x).powi(n_pos as i32) * sigmoid(-x).powi(n_neg as i32);
    let gauss = |x: f64| (-0.5 * lambda * x * x).exp();
    // 2-D grid over (rho_0, alpha_1)
    let (lo, hi, m) = (-7.0, 7.0, 1401);
    let step = (hi - lo) / (m - 1) as f64;
    let nodes: Vec<f64> = (0..m).map(|i| lo + i as f64 * step).collect();
    let rho_marginal = GridCdf::new(lo, hi, m, |r| gauss(r) * nodes.iter().map(|&a| gauss(a) * lik(r * a)).sum::<f64>());
    let mut rho: Vec<f64> = kept.iter().map(|d| d.rho()[0]).collect();
    let ks_rho = ks_statistic(&mut rho, |x| rho_marginal.cdf(x));

    let mut weighted: Vec<(f64, f64)> = Vec::with_capacity(m * m);
    for &r in &nodes {
        for &a in &nodes {
            weighted.push((r * a, gauss(r) * gauss(a) * lik(r * a)));
        }
    }
    weighted.sort_by(|x, y| x.0.total_cmp(&y.0));
    let total: f64 = weighted.iter().map(|p| p.1).sum();
    let mut cum = Vec::with_capacity(weighted.len());
    let mut acc = 0.0;
    for p in &weighted {
        acc += p.1 / total;
        cum.push(acc);
    }
    let product_cdf = |x: f64| {
        let i = weighted.partition_point(|p| p.0 <= x);
        if i == 0 {
            0.0
        } else {
            cum[i - 1]
        }
    };
    let mut prod: Vec<f64> = kept.iter().map(|d| d.rho()[0] * d.alpha()[1]).collect();
    let ks_prod = ks_statistic(&mut prod, product_cdf);
    outcome(
        ks_rho < 0.02 && ks_prod < 0.02,
        format!("KS vs grid quadrature: rho_0 marginal {ks_rho:.4}, rho_0*alpha_1 marginal {ks_prod:.4} (< 0.02, {n} draws)"),
    )
}

fn main() -> ExitCode {
    let only: Option<Vec<usize>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    let mut run = [false; 11];
    for (i, r) in run.iter_mut().enumerate().skip(1) {
        *r = only.as_ref().is_none_or(|o| o.contains(&i));
    }
    let names = [
        "",
        "gibbs coverage",
        "laplace coverage, N=1e6",
        "convergence rate",
        "gibbs ESS range",
        "posterior mean vs MAP",
        "identification properties",
        "numerical properties",
        "polya-gamma moments",
        "exact-conditional oracle",
        "determinism across widths",
    ];
    let mut results: Vec<(usize, Outcome, f64)> = Vec::new();
    let timed = |i: usize, f: &mut dyn FnMut() -> Outcome, results: &mut Vec<(usize, Outcome, f64)>| {
        if run[i] {
            let t = Instant::now();
            let o = f();
            results.push((i, o, t.elapsed().as_secs_f64()));
        }
    };
    timed(6, &mut identification_properties, &mut results);
    timed(7, &mut numeric_properties, &mut results);
    timed(8, &mut pg_moments, &mut results);
    timed(9, &mut exact_conditional, &mut results);
    timed(2, &mut laplace_large_n, &mut results);
    timed(5, &mut mean_beats_map, &mut results);
    timed(3, &mut convergence_rate, &mut results);
    if run[1] || run[4] || run[10] {
        let t = Instant::now();
        let shared = gibbs_coverage(&run);
        let secs = t.elapsed().as_secs_f64() / shared.len() as f64;
        results.extend(shared.into_iter().map(|(i, o)| (i, o, secs)));
    }
    results.sort_by_key(|r| r.0);
    let mut failed = 0;
    for (i, o, secs) in &results {
        let status = if o.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!o.pass);
        println!("acceptance criterion {i:>2} [{}]: {status} {} ({secs:.0}s)", names[*i], o.detail);
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
