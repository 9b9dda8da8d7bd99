use crate::error::{invalid, Error, Result};
use crate::model::{co_prob, EmbeddingState, PosteriorDraws, Side};

/// One scalar quantity tracked across draws.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarTrace {
    values: Vec<f64>,
    label: String,
}

impl ScalarTrace {
    pub fn new(values: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if values.is_empty() {
            return invalid("trace must be nonempty");
        }
        if values.iter().any(|x| !x.is_finite()) {
            return invalid("trace values must be finite");
        }
        Ok(Self { values, label: label.into() })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        mean(&self.values)
    }
}

pub(crate) fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Trace of `sigma(rho_w . alpha_v)` over the draws.
pub fn co_prob_trace(draws: &PosteriorDraws, w: usize, v: usize) -> Result<ScalarTrace> {
    check_ids(draws, &[w, v])?;
    let values = draws.draws().iter().map(|d| co_prob(d, w, v)).collect();
    ScalarTrace::new(values, format!("co_prob_{w}_{v}"))
}

/// Trace of coordinate `i` of row `w` of the target or context matrix.
pub fn coordinate_trace(draws: &PosteriorDraws, side: Side, w: usize, i: usize) -> Result<ScalarTrace> {
    check_ids(draws, &[w])?;
    if draws.shape().is_some_and(|(_, k)| i >= k) {
        return invalid(format!("coordinate {i} out of range"));
    }
    let name = match side {
        Side::Target => "rho",
        Side::Context => "alpha",
    };
    let values = draws.draws().iter().map(|d| d.row(side, w)[i]).collect();
    ScalarTrace::new(values, format!("{name}_{w}_{i}"))
}

fn check_ids(draws: &PosteriorDraws, ids: &[usize]) -> Result<()> {
    match draws.shape() {
        None => invalid("no draws"),
        Some((v, _)) if ids.iter().any(|&w| w >= v) => invalid(format!("word id out of range for V={v}")),
        _ => Ok(()),
    }
}

/// Initial positive sequence estimate of the integrated
/// autocorrelation time, from biased autocovariances.
fn autocorrelation_time(x: &[f64]) -> Result<f64> {
    let n = x.len();
    let m = mean(x);
    let centered: Vec<f64> = x.iter().map(|v| v - m).collect();
    let acov = |lag: usize| centered[..n - lag].iter().zip(&centered[lag..]).map(|(a, b)| a * b).sum::<f64>() / n as f64;
    let c0 = acov(0);
    if !(c0 > 0.0) {
        return Err(Error::UndefinedEss("trace is constant".into()));
    }
    let mut sum = 0.0;
    let mut t = 0;
    while t + 1 < n {
        let pair = (acov(t) + acov(t + 1)) / c0;
        if pair <= 0.0 {
            break;
        }
        sum += pair;
        t += 2;
    }
    Ok(2.0 * sum - 1.0)
}

/// `M / tau` without clamping; can exceed `M` for antithetic chains.
pub fn ess_unclamped(trace: &ScalarTrace) -> Result<f64> {
    let m = trace.len();
    if m < 10 {
        return Err(Error::UndefinedEss(format!("trace has {m} values, need at least 10")));
    }
    Ok(m as f64 / autocorrelation_time(&trace.values)?)
}

/// Effective sample size, clamped to `(0, M]`.
pub fn ess(trace: &ScalarTrace) -> Result<f64> {
    Ok(ess_unclamped(trace)?.min(trace.len() as f64))
}

fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - 1) as f64
}

/// Split-R-hat: each trace is halved (dropping the middle value of odd
/// lengths) and the halves are compared as separate chains.
pub fn split_rhat(traces: &[ScalarTrace]) -> Result<f64> {
    let Some(first) = traces.first() else {
        return invalid("need at least one trace");
    };
    let len = first.len();
    if traces.iter().any(|t| t.len() != len) {
        return invalid("traces must have equal lengths");
    }
    if len < 4 {
        return invalid("traces need at least 4 values");
    }
    let half = len / 2;
    let chains: Vec<&[f64]> = traces
        .iter()
        .flat_map(|t| [&t.values[..half], &t.values[len - half..]])
        .collect();
    let n = half as f64;
    let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let b = n * variance(&means);
    let w = mean(&chains.iter().map(|c| variance(c)).collect::<Vec<_>>());
    if !(w > 0.0) {
        return Err(Error::UndefinedRhat("within-chain variance is zero".into()));
    }
    let var_plus = (n - 1.0) / n * w + b / n;
    Ok((var_plus / w).sqrt())
}

/// Entrywise mean of canonicalized draws.
pub fn posterior_mean(draws: &PosteriorDraws) -> Result<EmbeddingState> {
    if draws.constraint().is_none() {
        return Err(Error::UnidentifiedMean);
    }
    let Some((v, k)) = draws.shape() else {
        return invalid("no draws");
    };
    let mut rho = vec![0.0; v * k];
    let mut alpha = vec![0.0; v * k];
    for d in draws.draws() {
        rho.iter_mut().zip(d.rho()).for_each(|(a, x)| *a += x);
        alpha.iter_mut().zip(d.alpha()).for_each(|(a, x)| *a += x);
    }
    let n = draws.len() as f64;
    rho.iter_mut().chain(alpha.iter_mut()).for_each(|a| *a /= n);
    let mut mean = EmbeddingState::new(v, k, rho, alpha)?;
    if let Some(c) = draws.constraint() {
        // exact M, free of summation round-off
        c.apply(&mut mean);
    }
    Ok(mean)
}
