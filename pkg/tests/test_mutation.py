import math
from collections import Counter

import numpy as np
import pytest

from toruscoal.mutation import (
    Spectrum,
    default_mutation_rate,
    mean_spectrum,
    run_infinite_alleles,
    total_tree_length,
)
from toruscoal.partitions import LabeledPartition
from toruscoal.spatial import CoalescentState, run_until
from toruscoal.torus import TorusSpec


def test_default_mutation_rate_values():
    assert default_mutation_rate(TorusSpec(49)) == pytest.approx(
        math.pi / (99**2 * math.log(99))
    )
    assert default_mutation_rate(TorusSpec(49)) == pytest.approx(6.976e-5, rel=1e-3)
    assert default_mutation_rate(TorusSpec(98)) == pytest.approx(
        math.pi / (197**2 * math.log(197))
    )
    for L in (1, 10, 49):
        spec = TorusSpec(L)
        assert default_mutation_rate(spec) * spec.time_scale() == pytest.approx(math.pi)
    with pytest.raises(ValueError):
        default_mutation_rate(TorusSpec(0))


def test_spectrum_invariants():
    s = Spectrum([2, 0, 1, 0, 0])  # 2 singletons + 1 triple = 5 individuals
    assert s.n == 5
    assert s.a(1) == 2 and s.a(3) == 1
    with pytest.raises(ValueError):
        Spectrum([1, 1, 1])  # 1 + 2 + 3 = 6 != 3
    with pytest.raises(ValueError):
        Spectrum([-1, 2, 0])


def test_single_line_spectrum():
    rng = np.random.default_rng(0)
    torus = TorusSpec(2)
    init = LabeledPartition.singletons(1, [(0, 0)])
    s = run_infinite_alleles(init, "kingman", torus, 0.7, rng)
    assert s.counts.tolist() == [1]


def test_huge_rate_kills_all_singletons():
    rng = np.random.default_rng(1)
    torus = TorusSpec(2)
    init = LabeledPartition.singletons(5, [(0, 0), (1, 0), (0, 1), (2, 2), (-1, -1)])
    s = run_infinite_alleles(init, "kingman", torus, 1e6, rng)
    assert s.counts.tolist() == [5, 0, 0, 0, 0]


def test_conservation_across_mechanisms():
    rng = np.random.default_rng(2)
    torus = TorusSpec(3)
    sites = [(0, 0), (1, 1), (2, 0), (0, 2), (-1, -2), (3, 3)]
    for mech in ("kingman", "bs", "crw", "pointmass:0.7"):
        for _ in range(30):
            init = LabeledPartition.singletons(6, sites)
            s = run_infinite_alleles(init, mech, torus, 0.05, rng)
            assert int((np.arange(1, 7) * s.counts).sum()) == 6


def test_two_lineage_race_matched_rates():
    # non-spatial pair on T^0: pair rate lam_22 = 1, kill rate 1 per line
    # gives theta = 2 and P(a_2 = 1) = 1 / (1 + theta) = 1/3
    rng = np.random.default_rng(3)
    torus = TorusSpec(0)
    init = LabeledPartition.singletons(2, [(0, 0), (0, 0)])
    trials = 30_000
    doubles = 0
    for _ in range(trials):
        s = run_infinite_alleles(init, "kingman", torus, 1.0, rng)
        doubles += s.a(2) == 1
    p, sigma = 1 / 3, math.sqrt((1 / 3) * (2 / 3) / trials)
    assert abs(doubles / trials - p) <= 4 * sigma


def test_tree_length_trivia():
    rng = np.random.default_rng(4)
    torus = TorusSpec(2)
    init = LabeledPartition.singletons(1, [(0, 0)])
    state = CoalescentState(init, "kingman", torus, rng=rng)
    log = run_until(state, nblocks=1)
    assert total_tree_length(log) == 0.0

    init = LabeledPartition.singletons(2, [(0, 0), (0, 0)])
    state = CoalescentState(init, "kingman", torus, rng=rng)
    log = run_until(state, nblocks=1)
    merge_time = [ev.time for ev in log.events() if ev.kind == "merge"][-1]
    assert total_tree_length(log) == pytest.approx(2 * merge_time)


def test_tree_length_requires_absorption():
    rng = np.random.default_rng(5)
    torus = TorusSpec(2)
    init = LabeledPartition.singletons(3, [(0, 0), (1, 1), (2, 2)])
    state = CoalescentState(init, "kingman", torus, rng=rng)
    log = run_until(state, time=0.1)
    if state.n_blocks > 1:
        with pytest.raises(ValueError):
            total_tree_length(log)
        assert total_tree_length(log, run_to_mrca=False) >= 0.0


def test_tree_length_matches_block_time_integral():
    # the engine's integral accumulator is an independent sum over dwells
    for seed in range(6, 12):
        rng = np.random.default_rng(seed)
        torus = TorusSpec(3)
        init = LabeledPartition.singletons(4, [(0, 0), (1, 1), (2, 0), (0, 2)])
        state = CoalescentState(init, "bs", torus, rng=rng)
        log = run_until(state, nblocks=1)
        assert total_tree_length(log) == pytest.approx(
            state.block_time_integral, rel=1e-12
        )


def test_kingman_expected_length_small():
    # E[total length] = 2 H_{n-1} for pair rate 1 (non-spatial via T^0)
    rng = np.random.default_rng(12)
    torus = TorusSpec(0)
    n = 5
    init = LabeledPartition.singletons(n, [(0, 0)] * n)
    reps = 4_000
    lengths = np.empty(reps)
    for r in range(reps):
        state = CoalescentState(init, "kingman", torus, rng=rng)
        run_until(state, nblocks=1, log=False)
        lengths[r] = state.block_time_integral
    target = 2 * sum(1 / j for j in range(1, n))
    se = lengths.std(ddof=1) / math.sqrt(reps)
    assert abs(lengths.mean() - target) <= 4 * se


def _spectrum_by_tree_marking(n, theta, rng):
    """Independent construction: full Kingman tree, Poisson marks, first-mark
    allele classes. Mutation rate theta/2 per line, pair rate 1."""
    # build the merge tree
    blocks = [frozenset([i]) for i in range(1, n + 1)]
    t = 0.0
    edges = []  # (members, t_start, t_end)
    alive = {b: 0.0 for b in blocks}
    while len(alive) > 1:
        b = len(alive)
        t += rng.exponential(1.0 / (b * (b - 1) / 2.0))
        keys = sorted(alive, key=min)
        i = int(rng.random() * b)
        j = int(rng.random() * (b - 1))
        if j >= i:
            j += 1
        bi, bj = keys[i], keys[j]
        for b_ in (bi, bj):
            edges.append((b_, alive.pop(b_), t))
        alive[bi | bj] = t
    root, t0 = next(iter(alive.items()))
    edges.append((root, t0, t0 + rng.exponential(2.0 / theta)))
    # Poisson marks at rate theta/2 per edge; leaf's allele = earliest mark
    # on its path (times increase rootward, and the root is always marked
    # at its endpoint so every leaf finds one)
    marks = []  # (time, members)
    for members, start, end in edges:
        span = end - start
        if members == root:
            marks.append((end, members))
        for _ in range(rng.poisson(theta / 2.0 * span)):
            marks.append((start + rng.random() * span, members))
    first = {}
    for time_, members in marks:
        for leaf in members:
            if first.get(leaf, (math.inf,))[0] > time_:
                first[leaf] = (time_, id(members), members)
    classes = Counter(mk[1] for mk in first.values())
    counts = [0] * n
    for size in classes.values():
        counts[size - 1] += 1
    return tuple(counts)


def test_killing_scheme_matches_tree_marking():
    # total variation distance of the n=3, theta=2 spectrum distribution
    n, theta = 3, 2.0
    reps = 100_000
    rng = np.random.default_rng(13)
    torus = TorusSpec(0)
    init = LabeledPartition.singletons(n, [(0, 0)] * n)
    kill_counts = Counter()
    for _ in range(reps):
        s = run_infinite_alleles(init, "kingman", torus, theta / 2.0, rng)
        kill_counts[tuple(s.counts.tolist())] += 1
    mark_counts = Counter()
    rng2 = np.random.default_rng(14)
    for _ in range(reps):
        mark_counts[_spectrum_by_tree_marking(n, theta, rng2)] += 1
    keys = set(kill_counts) | set(mark_counts)
    tv = 0.5 * sum(abs(kill_counts[k] - mark_counts[k]) / reps for k in keys)
    assert tv < 0.01, (tv, kill_counts, mark_counts)


def test_mutation_only_counts_own_size():
    rng = np.random.default_rng(15)
    torus = TorusSpec(2)
    init = LabeledPartition.singletons(4, [(0, 0)] * 4)
    state = CoalescentState(init, "bs", torus, mutation_rate=0.3, rng=rng)
    log = run_until(state, nblocks=0)
    tallies = np.zeros(5, np.int64)
    for ev in log.events():
        if ev.kind == "mutation":
            tallies[ev.size] += 1
    assert np.array_equal(tallies, state.spectrum_counts)


def test_mean_spectrum():
    a = Spectrum([9, 0, 0, 0, 0, 0, 0, 0, 0])
    b = Spectrum([0, 0, 0, 0, 0, 0, 0, 0, 1])
    mean, se = mean_spectrum([a, b])
    assert mean[0] == pytest.approx(4.5)
    assert mean[8] == pytest.approx(0.5)
    assert se[0] > 0
    mean, se = mean_spectrum([a])
    assert mean[0] == 9 and np.all(se == 0)
    with pytest.raises(ValueError):
        mean_spectrum([])
    with pytest.raises(ValueError):
        mean_spectrum([a, Spectrum([1])])
