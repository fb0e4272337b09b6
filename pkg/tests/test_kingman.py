import math
from collections import Counter

import numpy as np
import pytest
from scipy import stats

from toruscoal.kingman import (
    KingmanConfig,
    ewens_expected_spectrum,
    hybrid_run,
    qq_data,
    sample_kingman_spectrum,
    simulate_kingman,
)
from toruscoal.mutation import default_mutation_rate, total_tree_length
from toruscoal.partitions import LabeledPartition, UnlabeledPartition
from toruscoal.torus import TorusSpec


def test_trivial_start():
    rng = np.random.default_rng(0)
    log = simulate_kingman(1, KingmanConfig(), rng)
    assert len(log) == 0


def test_first_wait_distribution():
    # from 9 blocks at pair rate 1: U_1 ~ Exp(36)
    rng = np.random.default_rng(1)
    waits = np.array([simulate_kingman(9, KingmanConfig(), rng).times[0]
                      for _ in range(20_000)])
    ks = stats.kstest(waits, "expon", args=(0, 1 / 36)).statistic
    assert ks < 0.02
    assert abs(waits.mean() - 1 / 36) <= 4 * waits.std(ddof=1) / math.sqrt(len(waits))


def test_absorption_time_pair_rate_pi():
    rng = np.random.default_rng(2)
    times = np.array([simulate_kingman(2, KingmanConfig(pair_rate=math.pi), rng).times[-1]
                      for _ in range(20_000)])
    se = times.std(ddof=1) / math.sqrt(len(times))
    assert abs(times.mean() - 1 / math.pi) <= 4 * se


def test_merge_pair_uniformity():
    # first merge from 4 blocks: each of the 6 pairs with frequency 1/6
    rng = np.random.default_rng(3)
    counts = Counter()
    trials = 100_000
    for _ in range(trials):
        log = simulate_kingman(4, KingmanConfig(), rng)
        ev = log.event(0)
        counts[ev.blocks] += 1
    assert len(counts) == 6
    sigma = math.sqrt((1 / 6) * (5 / 6) / trials)
    for pair, c in counts.items():
        assert abs(c / trials - 1 / 6) <= 4 * sigma, pair


def test_wait_independence_and_rates():
    rng = np.random.default_rng(4)
    n, reps = 6, 10_000
    waits = np.empty((reps, n - 1))
    for r in range(reps):
        log = simulate_kingman(n, KingmanConfig(), rng)
        waits[r] = np.diff(log.times, prepend=0.0)
    for k in range(n - 1):
        b = n - k
        ks = stats.kstest(waits[:, k], "expon", args=(0, 2 / (b * (b - 1)))).statistic
        assert ks < 0.02, k
    corr = np.corrcoef(waits, rowvar=False)
    assert np.abs(corr[np.triu_indices(n - 1, 1)]).max() < 0.05


def test_simulate_from_partition():
    start = UnlabeledPartition([(1, 3), (2,), (4,)])
    rng = np.random.default_rng(5)
    log = simulate_kingman(start, KingmanConfig(), rng)
    assert log.initial.n_blocks == 3
    assert len(log) == 2
    assert log.final_blocks[0][0] == (1, 2, 3, 4)
    assert total_tree_length(log) > 0


def test_ewens_trivial_and_conservation():
    assert ewens_expected_spectrum(1, 1.0).tolist() == [1.0]
    for n in (2, 5, 9):
        for theta in (0.5, 1.0, 2.0, 5.0):
            e = ewens_expected_spectrum(n, theta)
            assert (np.arange(1, n + 1) * e).sum() == pytest.approx(n)


def test_ewens_two_lineage_analytic():
    e = ewens_expected_spectrum(2, 2.0)
    assert e[1] == pytest.approx(1 / 3)
    assert e[0] == pytest.approx(4 / 3)


@pytest.mark.parametrize("n,theta", [(5, 1.0), (9, 2.0)])
def test_ewens_formula_vs_monte_carlo(n, theta):
    rng = np.random.default_rng(6)
    reps = 40_000
    acc = np.empty((reps, n))
    for r in range(reps):
        acc[r] = sample_kingman_spectrum(n, theta, rng).counts
    mc = acc.mean(axis=0)
    se = acc.std(axis=0, ddof=1) / math.sqrt(reps)
    formula = ewens_expected_spectrum(n, theta)
    assert np.all(np.abs(mc - formula) <= 3.5 * np.maximum(se, 1e-12))


def test_ewens_monte_carlo_method():
    rng = np.random.default_rng(7)
    mc = ewens_expected_spectrum(3, 2.0, method="monte-carlo", reps=20_000, rng=rng)
    formula = ewens_expected_spectrum(3, 2.0)
    assert np.abs(mc - formula).max() < 0.05
    with pytest.raises(ValueError):
        ewens_expected_spectrum(3, 2.0, method="nope")


def test_hybrid_threshold_zero_equals_pure_kingman():
    # immediate handoff: spectrum law must match the killing-scheme Kingman
    # at matched rates (pair pi/s_L, mutation pi/s_L per line <=> theta = 2)
    torus = TorusSpec(10)
    theta_line = default_mutation_rate(torus)
    n = 3
    sites = [(0, 0), (3, 3), (-4, 2)]
    init = LabeledPartition.singletons(n, sites)
    reps = 100_000
    rng = np.random.default_rng(8)
    hybrid_counts = Counter()
    for _ in range(reps):
        spec, info = hybrid_run(init, "bs", 0.0, torus, theta_line, rng)
        assert info.used and info.n_blocks == n and info.clock == 0.0
        hybrid_counts[tuple(spec.counts.tolist())] += 1
    rng = np.random.default_rng(9)
    king_counts = Counter()
    for _ in range(reps):
        king_counts[tuple(sample_kingman_spectrum(n, 2.0, rng).counts.tolist())] += 1
    keys = set(hybrid_counts) | set(king_counts)
    tv = 0.5 * sum(abs(hybrid_counts[k] - king_counts[k]) / reps for k in keys)
    assert tv < 0.02, (tv, hybrid_counts, king_counts)


def test_hybrid_validation():
    torus = TorusSpec(10)
    init = LabeledPartition.singletons(2, [(0, 0), (5, 5)])
    rng = np.random.default_rng(10)
    with pytest.raises(ValueError):
        hybrid_run(init, "bs", -1.0, torus, 0.01, rng)
    with pytest.raises(ValueError):
        hybrid_run(init, "bs", 100.0, torus, 0.01, rng)
    with pytest.raises(ValueError):
        hybrid_run(init, "bs", 1.0, torus, 0.0, rng)


def test_hybrid_conserves_sample():
    torus = TorusSpec(10)
    rng = np.random.default_rng(11)
    init = LabeledPartition.singletons(5, [(0, 0)] * 5)
    for _ in range(50):
        spec, info = hybrid_run(init, "bs", 8.0, torus,
                                default_mutation_rate(torus), rng)
        assert int((np.arange(1, 6) * spec.counts).sum()) == 5
        assert 0 <= info.n_blocks <= 5


def test_qq_data():
    a = np.arange(1.0, 101.0)
    qa, qb = qq_data(a, a)
    assert np.allclose(qa, qb)
    qa, qb = qq_data(a, 2 * a)
    assert np.allclose(2 * qa, qb)
    qa, qb = qq_data(a, np.arange(1.0, 11.0))
    assert len(qa) == len(qb) == 10
    with pytest.raises(ValueError):
        qq_data([], [1.0])


def test_kingman_config_validation():
    with pytest.raises(ValueError):
        KingmanConfig(pair_rate=0.0)
    with pytest.raises(ValueError):
        KingmanConfig(pair_rate=1.0, mutation_rate=-1.0)
