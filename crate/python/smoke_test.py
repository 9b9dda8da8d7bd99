"""Smoke test for the pgembed_py extension module.

Build and install first:
    pip install maturin
    maturin build --release -m crates/python/Cargo.toml -o dist
    pip install dist/pgembed_py-*.whl
"""

import math
import tempfile
from pathlib import Path

import pgembed_py as pg


def main():
    truth, stats, lam = pg.simulate(12, 2, 20_000, seed=3)
    assert truth.vocab_size == 12 and truth.dim == 2
    assert stats.vocab_size == 12 and stats.total_observations > 0

    mode, logp = pg.map_estimate(stats, 2, lam=lam, seed=1)
    assert math.isfinite(logp)
    assert 0.0 < mode.co_prob(0, 1) < 1.0

    draws = pg.gibbs(stats, mode, lam=lam, iterations=150, burn_in=50, seed=7)
    assert len(draws) == 100
    covered, pairs = draws.coverage(truth, 0.9)
    assert pairs == 144 and 0.0 <= covered <= 1.0

    approx = pg.laplace(stats, mode, lam=lam, num_draws=300, seed=7)
    assert len(approx) == 300
    trace = approx.co_prob_trace(0, 1)
    assert 0.0 < pg.ess(trace) <= len(trace)

    half = len(trace) // 2
    assert pg.split_rhat([trace[:half], trace[half:]]) < 1.1

    mean = approx.posterior_mean()
    assert pg.rmse_co(mean, mode) < 0.05
    assert pg.holdout_ll(mean, stats) < 0.0

    with tempfile.TemporaryDirectory() as tmp:
        store = Path(tmp) / "draws"
        approx.save(store, "laplace")
        back = pg.PosteriorDraws.load(store)
        assert back.co_prob_trace(0, 1) == trace
        stats.save(Path(tmp) / "pairs.txt")
        assert pg.PairStats.load(Path(tmp) / "pairs.txt").entries() == stats.entries()

    try:
        pg.PairStats(3, [(0, 5, 1, 0)])
    except ValueError:
        pass
    else:
        raise AssertionError("out-of-range pair accepted")

    print("python smoke test passed")


if __name__ == "__main__":
    main()
