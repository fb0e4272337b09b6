"""Non-spatial Kingman coalescent, Ewens spectra, and the hybrid scheme.

The non-spatial Kingman coalescent merges each unordered pair of blocks at a
constant rate. It serves three roles: the limit object the spatial model is
validated against, the reference column in the spectrum experiments, and the
continuation process of the hybrid approximation that takes over once
ancestral lines are mutually far apart.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from . import _kernel
from .mutation import Spectrum
from .partitions import LabeledPartition, UnlabeledPartition
from .rates import Mechanism
from .spatial import CoalescentState, EventLog, run_until
from .torus import TorusSpec


@dataclass(frozen=True)
class KingmanConfig:
    """Coalescence rate per unordered pair plus optional per-line kill rate."""

    pair_rate: float = 1.0
    mutation_rate: float = 0.0

    def __post_init__(self):
        if self.pair_rate <= 0:
            raise ValueError("pair_rate must be > 0")
        if self.mutation_rate < 0:
            raise ValueError("mutation_rate must be >= 0")


def simulate_kingman(
    start: Union[UnlabeledPartition, int],
    cfg: KingmanConfig,
    rng: np.random.Generator,
) -> EventLog:
    """Simulate the non-spatial Kingman coalescent.

    Waiting times are exponential with rate C(b,2) * pair_rate (plus
    b * mutation_rate when killing is on); the merging pair is uniform.
    Without mutation the log ends at a single block, with mutation when all
    lines have been removed. The log is expressed on the one-site torus T^0.
    """
    if isinstance(start, int):
        start = UnlabeledPartition([(i,) for i in range(1, start + 1)])
    n = start.n
    torus = TorusSpec(0)
    initial = LabeledPartition(start.blocks, [(0, 0)] * start.n_blocks)
    blocks = [set(b) for b in start.blocks]
    spectrum = np.zeros(n + 1, np.int64)
    times, kinds, a_arr, c_arr, masks = [], [], [], [], []
    t = 0.0
    theta = cfg.mutation_rate
    while True:
        b = len(blocks)
        if b == 0 or (b == 1 and theta == 0.0):
            break
        merge_rate = b * (b - 1) / 2.0 * cfg.pair_rate
        total = merge_rate + b * theta
        t += rng.exponential(1.0 / total)
        if rng.random() * total < merge_rate:
            i = int(rng.random() * b)
            j = int(rng.random() * (b - 1))
            if j >= i:
                j += 1
            lo, hi = min(i, j), max(i, j)
            mask = (1 << (min(blocks[lo]) - 1)) | (1 << (min(blocks[hi]) - 1))
            blocks[lo] = blocks[lo] | blocks[hi]
            del blocks[hi]
            times.append(t)
            kinds.append(_kernel.MERGE)
            a_arr.append(min(blocks[lo]))
            c_arr.append(2)
            masks.append(mask)
        else:
            i = int(rng.random() * b)
            size = len(blocks[i])
            spectrum[size] += 1
            times.append(t)
            kinds.append(_kernel.KILL)
            a_arr.append(min(blocks[i]))
            c_arr.append(size)
            masks.append(0)
            del blocks[i]
    final = tuple(sorted(
        ((tuple(sorted(blk)), (0, 0)) for blk in blocks), key=lambda x: x[0][0]
    ))
    m = len(times)
    return EventLog(
        initial=initial, torus=torus,
        times=np.array(times), kinds=np.array(kinds, np.uint8),
        a=np.array(a_arr, np.int64), b=np.zeros(m, np.int64),
        c=np.array(c_arr, np.int64), mask=np.array(masks, np.uint64),
        final_blocks=final, final_clock=t, spectrum=spectrum, status="absorbed",
    )


def sample_kingman_spectrum(n: int, theta: float, rng: np.random.Generator) -> Spectrum:
    """One infinite-alleles spectrum draw under the Kingman coalescent.

    Calibration: pair rate 1, per-line mutation rate theta / 2, so theta is
    the usual scaled mutation parameter of the Ewens sampling formula.
    """
    if theta <= 0:
        raise ValueError("theta must be > 0")
    log = simulate_kingman(n, KingmanConfig(pair_rate=1.0, mutation_rate=theta / 2.0), rng)
    return Spectrum.from_kill_tallies(log.spectrum, n)


def ewens_expected_spectrum(
    n: int,
    theta: float,
    method: str = "formula",
    reps: int = 100_000,
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    """Expected allele frequency spectrum (E[a_1], ..., E[a_n]).

    ``formula`` evaluates E[a_k] = (theta/k) (n)_k / (theta+n-1)_k with
    falling factorials; ``monte-carlo`` averages spectra of simulated Kingman
    genealogies under the killing scheme. The two agree within Monte Carlo
    error (enforced by the test suite before the formula mode is trusted).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if theta <= 0:
        raise ValueError("theta must be > 0")
    if method == "formula":
        out = np.zeros(n)
        for k in range(1, n + 1):
            num = math.prod(range(n - k + 1, n + 1))
            den = math.prod(theta + n - 1 - i for i in range(k))
            out[k - 1] = theta / k * num / den
        return out
    if method == "monte-carlo":
        if rng is None:
            rng = np.random.default_rng()
        if n == 1:
            return np.ones(1)
        acc = np.zeros(n)
        for _ in range(reps):
            acc += sample_kingman_spectrum(n, theta, rng).counts
        return acc / reps
    raise ValueError(f"unknown method {method!r}")


@dataclass
class HandoffInfo:
    """Diagnostics of one hybrid replicate."""

    n_blocks: int          # blocks at the end of the spatial phase
    used: bool             # whether the Kingman continuation was entered
    clock: float           # unscaled time of the handoff
    phase1_events: int


def hybrid_run(
    initial: LabeledPartition,
    mechanism,
    threshold: float,
    torus: TorusSpec,
    mutation_rate: float,
    rng: np.random.Generator,
) -> tuple[Spectrum, HandoffInfo]:
    """Spatial phase until lines are mutually far apart, then Kingman.

    The spatial process (with killing at ``mutation_rate`` per line) runs
    until all pairwise block distances reach ``threshold`` or at most one
    block remains. Surviving blocks then continue as a non-spatial Kingman
    coalescent with pair rate pi / s_L in unscaled time and an unchanged
    per-line mutation rate, which is the time change of the torus limit
    theorem. Killed-allele bookkeeping persists across the phases.
    """
    if mutation_rate <= 0:
        raise ValueError("mutation rate must be > 0")
    max_thresh = math.sqrt(2.0) * torus.L
    if not 0 <= threshold <= max_thresh:
        raise ValueError(f"threshold must be in [0, {max_thresh:.4g}], got {threshold}")
    state = CoalescentState(initial, mechanism, torus, mutation_rate=mutation_rate, rng=rng)
    run_until(state, min_pairwise_distance=threshold, log=False)
    tallies = state.spectrum_counts
    sizes = [len(b) for b, _ in state.surviving_blocks()]
    info = HandoffInfo(
        n_blocks=len(sizes), used=len(sizes) >= 2,
        clock=state.clock, phase1_events=state.n_events,
    )
    pair_rate = math.pi / torus.time_scale()
    theta = mutation_rate
    while len(sizes) >= 2:
        b = len(sizes)
        merge_rate = b * (b - 1) / 2.0 * pair_rate
        total = merge_rate + b * theta
        rng.exponential(1.0 / total)  # dwell; spectra do not depend on it
        if rng.random() * total < merge_rate:
            i = int(rng.random() * b)
            j = int(rng.random() * (b - 1))
            if j >= i:
                j += 1
            lo, hi = min(i, j), max(i, j)
            sizes[lo] += sizes[hi]
            del sizes[hi]
        else:
            i = int(rng.random() * b)
            tallies[sizes[i]] += 1
            del sizes[i]
    if len(sizes) == 1:
        # the last line is eventually hit by a mutation with probability one
        tallies[sizes[0]] += 1
    return Spectrum.from_kill_tallies(tallies, initial.n), info


def qq_data(sample_a, sample_b) -> tuple[np.ndarray, np.ndarray]:
    """Paired quantiles of two samples for a q-q plot.

    Quantiles are taken at the plotting positions (i - 1/2) / m of the
    shorter sample, with linear interpolation in the longer one.
    """
    a = np.asarray(sample_a, dtype=float)
    b = np.asarray(sample_b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise ValueError("both samples must be nonempty")
    m = min(a.size, b.size)
    probs = (np.arange(1, m + 1) - 0.5) / m
    return np.quantile(a, probs), np.quantile(b, probs)
