"""Infinite-alleles mutation via lineage killing, spectra and tree lengths.

A mutation hitting a block of k sampled individuals founds a new allele
carried by exactly those k; the block is then removed. The tallies
(a_1, ..., a_n), with a_k the number of alleles carried by exactly k
individuals, form the allele frequency spectrum and satisfy sum k a_k = n.
"""

from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np

from .partitions import LabeledPartition
from .spatial import CoalescentState, run_until
from .torus import TorusSpec


class Spectrum:
    """Allele frequency spectrum of one replicate."""

    def __init__(self, counts: Sequence[int]):
        arr = np.asarray(counts, dtype=np.int64)
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError("counts must be a nonempty 1-D vector (a_1, ..., a_n)")
        if (arr < 0).any():
            raise ValueError("allele counts must be nonnegative")
        n = arr.size
        weighted = int(np.arange(1, n + 1) @ arr)
        if weighted != n:
            raise ValueError(f"spectrum violates conservation: sum k*a_k = {weighted} != {n}")
        self.counts = arr

    @property
    def n(self) -> int:
        return self.counts.size

    def a(self, k: int) -> int:
        """Number of alleles carried by exactly k individuals."""
        return int(self.counts[k - 1])

    @classmethod
    def from_kill_tallies(cls, tallies: np.ndarray, n: int) -> "Spectrum":
        """Build from the engine's kill tally array (index = block size)."""
        return cls(tallies[1:n + 1])

    def __eq__(self, other) -> bool:
        return isinstance(other, Spectrum) and np.array_equal(self.counts, other.counts)

    def __repr__(self) -> str:
        return f"Spectrum({self.counts.tolist()})"


def default_mutation_rate(spec: TorusSpec) -> float:
    """Per-line mutation rate pi / s_L in unscaled model time."""
    return math.pi / spec.time_scale()


def run_infinite_alleles(
    initial: LabeledPartition,
    mechanism,
    torus: TorusSpec,
    mutation_rate: float,
    rng: np.random.Generator,
    **run_kwargs,
) -> Spectrum:
    """Run the spatial coalescent with killing until every line is removed."""
    if mutation_rate <= 0:
        raise ValueError("mutation rate must be > 0 for the killing scheme to terminate")
    state = CoalescentState(initial, mechanism, torus, mutation_rate=mutation_rate, rng=rng)
    run_until(state, nblocks=0, log=False, **run_kwargs)
    return Spectrum.from_kill_tallies(state.spectrum_counts, initial.n)


def total_tree_length(log, run_to_mrca: bool = True) -> float:
    """Integral of the block count over time.

    With ``run_to_mrca`` the log must reach a single block and the integral
    stops there (the genealogy is complete); otherwise it extends to the end
    of the log.
    """
    n_blocks = log.initial.n_blocks
    if run_to_mrca and n_blocks == 1:
        return 0.0
    length = 0.0
    t_prev = 0.0
    for ev in log.events():
        length += n_blocks * (ev.time - t_prev)
        t_prev = ev.time
        if ev.kind == "merge":
            n_blocks -= len(ev.blocks) - 1
        elif ev.kind == "mutation":
            n_blocks -= 1
        if run_to_mrca and n_blocks == 1:
            return length
    if run_to_mrca:
        raise ValueError("log does not reach a single block; cannot take the tree length")
    return length + n_blocks * (log.final_clock - t_prev)


def mean_spectrum(spectra: Sequence[Spectrum]):
    """Componentwise mean and standard error over replicates.

    Returns (mean, stderr) arrays of length n; stderr is zero for a single
    replicate.
    """
    if len(spectra) == 0:
        raise ValueError("need at least one replicate")
    n = spectra[0].n
    if any(s.n != n for s in spectra):
        raise ValueError("replicates have unequal sample sizes")
    data = np.stack([s.counts for s in spectra]).astype(float)
    mean = data.mean(axis=0)
    if len(spectra) == 1:
        return mean, np.zeros(n)
    stderr = data.std(axis=0, ddof=1) / math.sqrt(len(spectra))
    return mean, stderr
