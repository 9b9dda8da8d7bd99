use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use pgembed::data::{
    build_vocab, extract_pairs, save_truth, sim_embedding, sim_pairs, split_holdout, tokenize, CorpusConfig, PairLaw,
    SimConfig,
};
use pgembed::diagnostics::{
    co_prob_trace, convergence_slope, coordinate_trace, cosine_posterior, coverage_intervals, ess, holdout_ll,
    posterior_mean, split_rhat, summarize_coverage, write_coverage_csv, write_scalar_table, write_slope_csv,
    write_trace_csv, ScalarTrace,
};
use pgembed::gibbs::{random_init, run_chain, GibbsConfig};
use pgembed::io::{load_draw_store, load_embedding, load_pair_stats, save_draw_store, save_embedding, save_pair_stats};
use pgembed::laplace::{build_laplace, fit_map, laplace_draws, MapConfig};
use pgembed::model::rmse_co;
use pgembed::rng::derive_seed;
use pgembed::{EmbeddingState, Error, IdentificationConstraint, PosteriorDraws, PriorSpec, Side, Vocabulary};

use crate::args::*;
use crate::error::{CliError, CliResult};
use crate::manifest::{Recorder, MANIFEST_FILE};

const STAGE_MAP_INIT: u64 = 1;
const STAGE_GIBBS: u64 = 2;
const STAGE_LAPLACE: u64 = 3;

pub const TRUTH_STEM: &str = "truth";
pub const PAIRS_FILE: &str = "pairs.txt";
pub const TRAIN_FILE: &str = "train.txt";
pub const TEST_FILE: &str = "test.txt";
pub const VOCAB_FILE: &str = "vocab.txt";
pub const MAP_FILE: &str = "map.bin";
pub const LAPLACE_DIR: &str = "laplace";

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(format!("cannot create {}: {e}", dir.display())))
}

fn at<T, E: Into<CliError>>(r: Result<T, E>, path: &Path) -> CliResult<T> {
    r.map_err(|e| {
        let mut e = e.into();
        e.message = format!("{}: {}", path.display(), e.message);
        e
    })
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(format!("cannot read {}: {e}", path.display())))
}

pub fn simulate(args: &SimulateArgs, rec: &mut Recorder) -> CliResult<()> {
    let cfg = SimConfig {
        vocab_size: args.vocab_size,
        dim: args.dim,
        epsilon: args.epsilon,
        pair_law: match args.law {
            Law::Uniform => PairLaw::Uniform,
            Law::Zipf => PairLaw::Zipf,
        },
        zipf_a: args.zipf_a,
        zipf_b: args.zipf_b,
        num_pairs: args.num_pairs,
        seed: args.seed,
    };
    cfg.validate().map_err(|e| CliError::usage(e.to_string()))?;
    let truth = sim_embedding(&cfg)?;
    let stats = sim_pairs(&truth)?;
    create_dir(&args.out)?;
    save_truth(&truth, &args.out, TRUTH_STEM)?;
    save_pair_stats(&stats, &args.out.join(PAIRS_FILE))?;
    rec.seed = Some(args.seed);
    for f in [format!("{TRUTH_STEM}.bin"), format!("{TRUTH_STEM}.json"), PAIRS_FILE.to_string()] {
        rec.output(&args.out.join(f));
    }
    println!(
        "simulated V={} K={} N={}: {} unique pairs, positive fraction {:.4}",
        cfg.vocab_size,
        cfg.dim,
        cfg.num_pairs,
        stats.num_unique(),
        stats.total_positive() as f64 / stats.total_observations() as f64
    );
    Ok(())
}

pub fn ingest(args: &IngestArgs, rec: &mut Recorder) -> CliResult<()> {
    let text = read_text(&args.input)?;
    rec.input(&args.input);
    let tokens = tokenize(&text);
    let (vocab, ids) = build_vocab(&tokens, args.vocab_size)?;
    let (train_ids, test_ids) = split_holdout(&ids, args.holdout_frac, args.seed)?;
    let cfg = |seed| CorpusConfig {
        window: args.window,
        negatives_per_positive: args.negatives,
        vocab_size_limit: args.vocab_size,
        noise_exponent: args.noise_exponent,
        seed,
    };
    let train = extract_pairs(&train_ids, &vocab, &cfg(derive_seed(args.seed, &[0])))?;
    let test = extract_pairs(&test_ids, &vocab, &cfg(derive_seed(args.seed, &[1])))?;
    create_dir(&args.out)?;
    let mut out = BufWriter::new(fs::File::create(args.out.join(VOCAB_FILE))?);
    for t in vocab.tokens() {
        writeln!(out, "{t}")?;
    }
    out.flush()?;
    save_pair_stats(&train, &args.out.join(TRAIN_FILE))?;
    save_pair_stats(&test, &args.out.join(TEST_FILE))?;
    rec.seed = Some(args.seed);
    for f in [VOCAB_FILE, TRAIN_FILE, TEST_FILE] {
        rec.output(&args.out.join(f));
    }
    println!(
        "ingested {} tokens, vocabulary {}; train {} tokens / {} observations, test {} tokens / {} observations",
        ids.len(),
        vocab.len(),
        train_ids.len(),
        train.total_observations(),
        test_ids.len(),
        test.total_observations()
    );
    Ok(())
}

fn parse_constraint(spec: &str, map: &EmbeddingState) -> CliResult<IdentificationConstraint> {
    if spec == "last-k" {
        return Ok(IdentificationConstraint::last_k(map)?);
    }
    let Some(list) = spec.strip_prefix("ids:") else {
        return Err(CliError::usage(format!("unknown constraint `{spec}`; use last-k or ids:<w1>,...")));
    };
    let ids = list
        .split(',')
        .map(|s| s.trim().parse::<usize>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::usage(format!("bad constraint id list `{list}`: {e}")))?;
    IdentificationConstraint::from_state(map, ids).map_err(|e| match e {
        Error::InvalidInput(m) => CliError::usage(m),
        other => other.into(),
    })
}

pub fn fit(args: &FitArgs, threads: usize, rec: &mut Recorder) -> CliResult<()> {
    if !args.constraint.starts_with("ids:") && args.constraint != "last-k" {
        return Err(CliError::usage(format!("unknown constraint `{}`", args.constraint)));
    }
    let prior = PriorSpec::new(args.lambda).map_err(|e| CliError::usage(e.to_string()))?;
    let stats = at(load_pair_stats(&args.stats), &args.stats)?;
    rec.input(&args.stats);
    rec.seed = Some(args.seed);
    let v = stats.vocab_size();
    create_dir(&args.out)?;

    let map = match &args.map {
        Some(path) => {
            let m = at(load_embedding(path), path)?;
            rec.input(path);
            if m.vocab_size() != v || m.dim() != args.dim {
                return Err(CliError::usage(format!(
                    "MAP file has V={} K={}, expected V={v} K={}",
                    m.vocab_size(),
                    m.dim(),
                    args.dim
                )));
            }
            m
        }
        None => {
            let cfg = MapConfig {
                max_iterations: args.map_iters,
                gradient_tolerance: args.map_tol,
                seed: derive_seed(args.seed, &[STAGE_MAP_INIT]),
                ..MapConfig::default()
            };
            cfg.validate().map_err(|e| CliError::usage(e.to_string()))?;
            let init = random_init(v, args.dim, cfg.seed, None)?;
            let fit = fit_map(&stats, &prior, &cfg, &init, None)?;
            eprintln!(
                "MAP: log posterior {:.6}, gradient sup-norm {:.2e} after {} iterations ({})",
                fit.log_posterior,
                fit.grad_sup_norm,
                fit.iterations,
                if fit.converged { "converged" } else { "iteration limit or stalled line search" }
            );
            save_embedding(&fit.theta, &args.out.join(MAP_FILE))?;
            rec.output(&args.out.join(MAP_FILE));
            fit.theta
        }
    };
    if args.method == Method::Map {
        return Ok(());
    }

    let constraint = parse_constraint(&args.constraint, &map)?;
    let draws = match args.method {
        Method::Map => unreachable!(),
        Method::Gibbs => {
            let cfg = GibbsConfig {
                outer_iterations: args.iters,
                burn_in: args.burn_in,
                inner_steps: args.inner_steps,
                seed: derive_seed(args.seed, &[STAGE_GIBBS]),
                warm_start_inner: args.warm_start,
                parallel_width: threads,
            };
            cfg.validate().map_err(|e| CliError::usage(e.to_string()))?;
            run_chain(&stats, &prior, &cfg, &map, Some(&constraint))?
        }
        Method::Laplace => {
            let model = build_laplace(&stats, &prior, &map, &constraint).map_err(|e| match e {
                Error::TooLarge { .. } => CliError::from(e),
                other => other.into(),
            })?;
            if model.clipped_count() > 0 {
                eprintln!("Laplace: clipped {} of {} eigenvalues", model.clipped_count(), model.dim());
            }
            let dir = args.out.join(LAPLACE_DIR);
            model.save(&dir)?;
            rec.output(&dir);
            laplace_draws(&model, args.draws, derive_seed(args.seed, &[STAGE_LAPLACE]))?
        }
    };
    let method = if args.method == Method::Gibbs { "gibbs" } else { "laplace" };
    let inner = (args.method == Method::Gibbs).then_some(args.inner_steps);
    save_draw_store(&draws, inner, method, &args.out)?;
    rec.output(&args.out.join(pgembed::io::DRAWS_FILE));
    rec.output(&args.out.join(pgembed::io::META_FILE));
    println!("wrote {} {method} draws to {}", draws.len(), args.out.display());
    Ok(())
}

fn parse_pairs(spec: &str, v: usize) -> CliResult<Vec<(usize, usize)>> {
    spec.split(',')
        .map(|item| {
            let (a, b) = item
                .split_once(':')
                .ok_or_else(|| CliError::usage(format!("pair `{item}` is not of the form w:v")))?;
            let parse = |s: &str| {
                s.trim().parse::<usize>().map_err(|_| CliError::usage(format!("bad word id `{s}` in pair `{item}`")))
            };
            let (w, c) = (parse(a)?, parse(b)?);
            if w >= v || c >= v {
                return Err(CliError::usage(format!("pair `{item}` out of range for V={v}")));
            }
            Ok((w, c))
        })
        .collect()
}

fn shape(draws: &PosteriorDraws) -> (usize, usize) {
    draws.shape().expect("stores are never empty")
}

fn requested_pairs(args: &DiagnoseArgs, v: usize) -> CliResult<Vec<(usize, usize)>> {
    match &args.pairs {
        Some(s) => parse_pairs(s, v),
        None => Ok((0..v).flat_map(|w| (0..v).map(move |c| (w, c))).collect()),
    }
}

/// `co_prob` traces for the pairs, then the free coordinate traces they involve.
fn traces_for(draws: &PosteriorDraws, pairs: &[(usize, usize)]) -> CliResult<Vec<ScalarTrace>> {
    let (_, k) = shape(draws);
    let mut out = Vec::new();
    for &(w, c) in pairs {
        out.push(co_prob_trace(draws, w, c)?);
    }
    let mut rows: Vec<(Side, usize)> = pairs.iter().flat_map(|&(w, c)| [(Side::Target, w), (Side::Context, c)]).collect();
    rows.sort_by_key(|&(s, w)| (s == Side::Context, w));
    rows.dedup();
    for (side, w) in rows {
        if side == Side::Context && draws.constraint().is_some_and(|c| c.contains(w)) {
            continue;
        }
        for i in 0..k {
            out.push(coordinate_trace(draws, side, w, i)?);
        }
    }
    Ok(out)
}

fn single_store(args: &DiagnoseArgs) -> CliResult<&Path> {
    match args.draws.as_slice() {
        [one] => Ok(one),
        _ => Err(CliError::usage("this report takes exactly one --draws store")),
    }
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<fs::File>) -> pgembed::Result<()>) -> CliResult<()> {
    let mut out = BufWriter::new(at(fs::File::create(path), path)?);
    f(&mut out)?;
    out.flush()?;
    Ok(())
}

fn defined(x: pgembed::Result<f64>, label: &str) -> CliResult<f64> {
    match x {
        Ok(v) => Ok(v),
        Err(e @ (Error::UndefinedEss(_) | Error::UndefinedRhat(_))) => {
            log::warn!("{label}: {e}");
            Ok(f64::NAN)
        }
        Err(e) => Err(e.into()),
    }
}

pub fn diagnose(args: &DiagnoseArgs, rec: &mut Recorder) -> CliResult<()> {
    if args.report == Report::Coverage && args.truth.is_none() {
        return Err(CliError::usage("--report coverage needs --truth"));
    }
    if args.report == Report::Slope && (args.truth.is_none() || args.sizes.len() != args.draws.len()) {
        return Err(CliError::usage("--report slope needs --truth and one --N value per --draws store"));
    }
    if args.report == Report::Cosine && args.pairs.is_none() {
        return Err(CliError::usage("--report cosine needs --pairs"));
    }
    if !(args.level > 0.0 && args.level < 1.0) {
        return Err(CliError::usage("--level must lie in (0, 1)"));
    }
    let mut stores = Vec::new();
    for dir in &args.draws {
        stores.push(at(load_draw_store(dir), dir)?.0);
        rec.input(dir);
    }
    let truth = match &args.truth {
        Some(p) => {
            rec.input(p);
            Some(at(load_embedding(p), p)?)
        }
        None => None,
    };
    create_dir(&args.out)?;
    let (v, _) = shape(&stores[0]);

    match args.report {
        Report::Coverage => {
            single_store(args)?;
            let rows = coverage_intervals(&stores[0], truth.as_ref().expect("checked"), args.level)?;
            let path = args.out.join("coverage.csv");
            write_file(&path, |o| write_coverage_csv(&rows, o))?;
            rec.output(&path);
            let rep = summarize_coverage(&rows, args.level);
            println!("coverage {} over {} pairs at level {}", rep.fraction_covered, rep.pairs_evaluated, rep.level);
        }
        Report::Ess => {
            single_store(args)?;
            let pairs = requested_pairs(args, v)?;
            let rows = traces_for(&stores[0], &pairs)?
                .iter()
                .map(|t| Ok((t.label().to_string(), defined(ess(t), t.label())?)))
                .collect::<CliResult<Vec<_>>>()?;
            let path = args.out.join("ess.csv");
            write_file(&path, |o| write_scalar_table("ess", &rows, o))?;
            rec.output(&path);
            println!("wrote {} ESS rows", rows.len());
        }
        Report::Rhat => {
            if stores.iter().any(|s| s.shape() != stores[0].shape() || s.len() != stores[0].len()) {
                return Err(CliError::usage("R-hat needs draw stores of equal shape and length"));
            }
            let pairs = requested_pairs(args, v)?;
            // coordinates are only comparable across chains that share `I` and `M`
            let shared = stores.iter().all(|s| s.constraint() == stores[0].constraint());
            if !shared {
                log::warn!("draw stores use different identification constraints; reporting co_prob traces only");
            }
            let per_store = stores
                .iter()
                .map(|s| {
                    let mut t = traces_for(s, &pairs)?;
                    if !shared {
                        t.truncate(pairs.len());
                    }
                    Ok(t)
                })
                .collect::<CliResult<Vec<_>>>()?;
            let mut rows = Vec::new();
            for i in 0..per_store[0].len() {
                let group: Vec<ScalarTrace> = per_store.iter().map(|t| t[i].clone()).collect();
                let label = group[0].label().to_string();
                rows.push((label.clone(), defined(split_rhat(&group), &label)?));
            }
            let path = args.out.join("rhat.csv");
            write_file(&path, |o| write_scalar_table("rhat", &rows, o))?;
            rec.output(&path);
            println!("wrote {} R-hat rows", rows.len());
        }
        Report::Slope => {
            let truth = truth.as_ref().expect("checked");
            let mut points = Vec::new();
            for (store, &n) in stores.iter().zip(&args.sizes) {
                points.push((n, rmse_co(&posterior_mean(store)?, truth)?));
            }
            let slope = convergence_slope(&points).map_err(|e| CliError::usage(e.to_string()))?;
            let path = args.out.join("slope.csv");
            write_file(&path, |o| write_slope_csv(&points, o))?;
            rec.output(&path);
            println!("slope {slope}");
        }
        Report::Cosine => {
            single_store(args)?;
            for (w, c) in requested_pairs(args, v)? {
                let t = cosine_posterior(&stores[0], w, c)?;
                let path = args.out.join(format!("cosine_{w}_{c}.csv"));
                write_file(&path, |o| write_trace_csv(&t.trace, o))?;
                rec.output(&path);
                println!("cosine {w}:{c} mean {} over {} draws ({} skipped)", t.trace.mean(), t.trace.len(), t.skipped);
            }
        }
    }
    Ok(())
}

fn load_estimate(spec: &str) -> CliResult<(EmbeddingState, PathBuf)> {
    match spec.strip_suffix(":mean") {
        Some(dir) => {
            let (draws, _) = at(load_draw_store(Path::new(dir)), Path::new(dir))?;
            Ok((posterior_mean(&draws)?, PathBuf::from(dir)))
        }
        None => Ok((at(load_embedding(Path::new(spec)), Path::new(spec))?, PathBuf::from(spec))),
    }
}

pub fn eval(args: &EvalArgs) -> CliResult<()> {
    let (theta, _) = load_estimate(&args.estimate)?;
    let test = at(load_pair_stats(&args.test_stats), &args.test_stats)?;
    if test.vocab_size() != theta.vocab_size() {
        return Err(CliError::usage(format!(
            "estimate has V={} but the test statistics have V={}",
            theta.vocab_size(),
            test.vocab_size()
        )));
    }
    println!("{}", holdout_ll(&theta, &test)?);
    Ok(())
}

pub fn export(args: &ExportArgs, rec: &mut Recorder) -> CliResult<()> {
    let (theta, source) = load_estimate(&args.estimate)?;
    rec.input(&source);
    let vocab = match &args.vocab {
        Some(p) => {
            rec.input(p);
            let v = Vocabulary::new(read_text(p)?.lines().map(str::to_string).collect())?;
            if v.len() != theta.vocab_size() {
                return Err(CliError::usage("vocabulary size does not match the estimate"));
            }
            Some(v)
        }
        None => None,
    };
    let mut out = BufWriter::new(at(fs::File::create(&args.out), &args.out)?);
    writeln!(out, "{} {}", theta.vocab_size(), theta.dim())?;
    for w in 0..theta.vocab_size() {
        match &vocab {
            Some(v) => write!(out, "{}", v.token(w).expect("sizes checked"))?,
            None => write!(out, "{w}")?,
        }
        for x in theta.rho_row(w).iter().chain(theta.alpha_row(w)) {
            write!(out, " {x}")?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    rec.output(&args.out);
    Ok(())
}

/// Where a command's manifest goes, if it writes files.
pub fn manifest_path(command: &Command) -> Option<PathBuf> {
    match command {
        Command::Simulate(a) => Some(a.out.join(MANIFEST_FILE)),
        Command::Ingest(a) => Some(a.out.join(MANIFEST_FILE)),
        Command::Fit(a) => Some(a.out.join(MANIFEST_FILE)),
        Command::Diagnose(a) => Some(a.out.join(MANIFEST_FILE)),
        Command::Export(a) => {
            let mut name = a.out.as_os_str().to_owned();
            name.push(".manifest.json");
            Some(PathBuf::from(name))
        }
        Command::Eval(_) | Command::Replay(_) => None,
    }
}
