"""Forward-in-time spatial Cannings models and genealogy tracing.

Each site holds a fixed number of individuals. Every generation the colony
reproduces through an exchangeable offspring vector summing to the colony
size, then fixed numbers of offspring migrate between sites (balanced, so
colony sizes never change). Genealogies of present-day samples are traced
backward one generation at a time by simulating a fresh exchangeable
generation and placing the sample's lineages at uniform distinct slots,
which is exact by exchangeability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .partitions import LabeledPartition, Site


class OffspringLaw:
    """Exchangeable offspring vector families.

    wright-fisher: symmetric multinomial.
    moran: a uniformly random permutation of (2, 0, 1, ..., 1).
    skewed(psi, eps): with probability eps one uniformly chosen individual
    gets ceil(psi * N) offspring and the rest are assigned by a symmetric
    multinomial; otherwise a Wright-Fisher vector. This is the concrete
    heavy-offspring mechanism driving multiple mergers.
    """

    def __init__(self, family: str, psi: float = 0.0, eps: float = 0.0):
        if family not in ("wright-fisher", "moran", "skewed"):
            raise ValueError(f"unknown offspring family {family!r}")
        if family == "skewed":
            if not 0 < psi <= 1:
                raise ValueError("psi must be in (0, 1]")
            if not 0 < eps <= 1:
                raise ValueError("eps must be in (0, 1]")
        self.family = family
        self.psi = psi
        self.eps = eps

    def sample_batch(self, N: int, size: int, rng: np.random.Generator) -> np.ndarray:
        """Draw ``size`` offspring vectors as an array of shape (size, N)."""
        if N < 1:
            raise ValueError("N must be >= 1")
        if self.family == "wright-fisher":
            return rng.multinomial(N, np.full(N, 1.0 / N), size=size)
        if self.family == "moran":
            if N == 1:
                return np.ones((size, 1), dtype=np.int64)
            base = np.ones((size, N), dtype=np.int64)
            base[:, 0] = 2
            base[:, 1] = 0
            return rng.permuted(base, axis=1)
        # skewed: build (m, multinomial rest) rows, then permute each row
        m = math.ceil(self.psi * N)
        out = np.empty((size, N), dtype=np.int64)
        heads = rng.random(size) < self.eps
        n_heads = int(heads.sum())
        if size - n_heads:
            out[~heads] = rng.multinomial(N, np.full(N, 1.0 / N), size=size - n_heads)
        if n_heads:
            rows = np.empty((n_heads, N), dtype=np.int64)
            rows[:, 0] = m
            if N > 1:
                rows[:, 1:] = rng.multinomial(N - m, np.full(N - 1, 1.0 / (N - 1)), size=n_heads)
            out[heads] = rng.permuted(rows, axis=1)
        return out

    def sample(self, N: int, rng: np.random.Generator) -> np.ndarray:
        return self.sample_batch(N, 1, rng)[0]

    def __repr__(self) -> str:
        if self.family == "skewed":
            return f"OffspringLaw('skewed', psi={self.psi}, eps={self.eps})"
        return f"OffspringLaw({self.family!r})"


def pair_coalescence_prob(
    law: OffspringLaw,
    N: int,
    method: str = "analytic",
    trials: int = 100_000,
    rng: Optional[np.random.Generator] = None,
) -> tuple[float, float]:
    """Probability c^N that two individuals share a parent one generation back.

    c^N = E[(nu_1)_2] / (N - 1). Returns (estimate, stderr); the analytic
    closed forms carry stderr 0.
    """
    if N < 2:
        raise ValueError("N must be >= 2")
    if method == "analytic":
        if law.family == "wright-fisher":
            return 1.0 / N, 0.0
        if law.family == "moran":
            return 2.0 / (N * (N - 1)), 0.0
        m = math.ceil(law.psi * N)
        rest = (N - m) * (N - m - 1) / (N - 1) ** 2  # E[(x)_2], x ~ Bin(N-m, 1/(N-1))
        second = law.eps * (m * (m - 1) / N + (N - 1) / N * rest) \
            + (1 - law.eps) * (1.0 - 1.0 / N)
        return second / (N - 1), 0.0
    if method == "monte-carlo":
        if rng is None:
            rng = np.random.default_rng()
        vals = np.empty(trials)
        done = 0
        chunk = max(1, min(trials, 20_000_000 // max(N, 1)))
        while done < trials:
            b = min(chunk, trials - done)
            nu = law.sample_batch(N, b, rng)
            # average of (nu_l)_2 over coordinates, one value per draw
            vals[done:done + b] = (nu * (nu - 1)).sum(axis=1) / (N * (N - 1))
            done += b
        return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(trials))
    raise ValueError(f"unknown method {method!r}")


@dataclass(frozen=True)
class MomentRow:
    """One empirical moment-diagnostic entry."""

    N: int
    stat: str            # "phi1(k)" or "phi2(2,2)"
    k: Optional[int]
    estimate: float
    stderr: float


def moment_diagnostics(
    law: OffspringLaw,
    N_sequence: Sequence[int],
    k_max: int = 3,
    trials: int = 100_000,
    rng: Optional[np.random.Generator] = None,
) -> list[MomentRow]:
    """Empirical limit diagnostics classifying the coalescent limit.

    For each N the table holds estimates of E[(nu_1)_k] / (N^(k-1) c^N) for
    k = 2..k_max and of E[(nu_1)_2 (nu_2)_2] / (N^2 c^N). A Kingman limit
    requires the k = 3 quantity to vanish as N grows; the pair quantity
    vanishing rules out simultaneous multiple mergers.
    """
    if k_max < 2:
        raise ValueError("k_max must be >= 2")
    if rng is None:
        rng = np.random.default_rng()
    rows: list[MomentRow] = []
    for N in N_sequence:
        c, _ = pair_coalescence_prob(law, N, "analytic")
        sums = np.zeros(k_max + 1)
        sqs = np.zeros(k_max + 1)
        s2_sum = 0.0
        s2_sq = 0.0
        done = 0
        chunk = max(1, min(trials, 20_000_000 // max(N, 1)))
        while done < trials:
            b = min(chunk, trials - done)
            nu = law.sample_batch(N, b, rng).astype(float)
            ff = nu.copy()
            pair2 = None
            for k in range(2, k_max + 1):
                ff = ff * (nu - (k - 1))
                v = ff.mean(axis=1)  # averaging coordinates: unbiased for E[(nu_1)_k]
                sums[k] += v.sum()
                sqs[k] += (v * v).sum()
                if k == 2:
                    pair2 = ff
            tot = pair2.sum(axis=1)
            y = (tot * tot - (pair2 * pair2).sum(axis=1)) / (N * (N - 1))
            s2_sum += y.sum()
            s2_sq += (y * y).sum()
            done += b
        for k in range(2, k_max + 1):
            scale = N ** (k - 1) * c
            mean = sums[k] / trials
            var = max(sqs[k] / trials - mean * mean, 0.0)
            rows.append(MomentRow(N, f"phi1({k})", k, mean / scale,
                                  math.sqrt(var / trials) / scale))
        scale = N * N * c
        mean = s2_sum / trials
        var = max(s2_sq / trials - mean * mean, 0.0)
        rows.append(MomentRow(N, "phi2(2,2)", None, mean / scale,
                              math.sqrt(var / trials) / scale))
    return rows


@dataclass
class CanningsModel:
    """Sites with fixed colony sizes, one offspring law, balanced migration.

    ``migration[(i, j)]`` is the number of offspring moving from site index i
    to site index j each generation.
    """

    sites: Tuple[Site, ...]
    colony_sizes: Tuple[int, ...]
    law: OffspringLaw
    migration: Dict[Tuple[int, int], int] = field(default_factory=dict)

    def __post_init__(self):
        self.sites = tuple((int(x), int(y)) for x, y in self.sites)
        self.colony_sizes = tuple(int(v) for v in self.colony_sizes)
        if len(self.sites) != len(set(self.sites)):
            raise ValueError("duplicate sites")
        if len(self.colony_sizes) != len(self.sites):
            raise ValueError("need one colony size per site")
        if any(v < 1 for v in self.colony_sizes):
            raise ValueError("colony sizes must be >= 1")
        s = len(self.sites)
        out_flow = [0] * s
        in_flow = [0] * s
        for (i, j), cnt in self.migration.items():
            if not (0 <= i < s and 0 <= j < s) or i == j:
                raise ValueError(f"bad migration edge ({i}, {j})")
            if cnt < 0:
                raise ValueError("migration counts must be >= 0")
            out_flow[i] += cnt
            in_flow[j] += cnt
        for i in range(s):
            if out_flow[i] > self.colony_sizes[i]:
                raise ValueError(f"site {i} emigration {out_flow[i]} exceeds colony size")
            if out_flow[i] != in_flow[i]:
                raise ValueError(
                    f"migration not balanced at site {i}: out {out_flow[i]} != in {in_flow[i]}"
                )

    @classmethod
    def single_site(cls, N: int, law: OffspringLaw) -> "CanningsModel":
        return cls(((0, 0),), (N,), law)

    @classmethod
    def torus(cls, L: int, N: int, law: OffspringLaw, per_neighbor: int) -> "CanningsModel":
        """Homogeneous nearest-neighbour model on T^L (balanced by symmetry)."""
        from .torus import TorusSpec

        spec = TorusSpec(L)
        sites = tuple(spec.all_sites())
        index = {s: i for i, s in enumerate(sites)}
        migration: Dict[Tuple[int, int], int] = {}
        if per_neighbor:
            for s in sites:
                for nb in set(spec.neighbors(s)) - {s}:
                    migration[(index[s], index[nb])] = per_neighbor
        return cls(sites, (N,) * len(sites), law, migration)

    def site_index(self, site: Site) -> int:
        return self.sites.index((int(site[0]), int(site[1])))


def _one_generation(model: CanningsModel, rng: np.random.Generator):
    """Draw one generation: offspring vectors and migrant selections.

    Returns (cums, placements) where cums[i] is the cumulative offspring
    vector at site i (children in canonical parent order) and placements[i]
    lists, slot by slot, the (birth site, child index) composition of site i
    after migration: first the stayers in ascending child order, then
    arrivals grouped by source site.
    """
    s = len(model.sites)
    cums = []
    emigrants = []  # per source: dict dest -> child index array
    for i in range(s):
        n_i = model.colony_sizes[i]
        nu = model.law.sample(n_i, rng)
        cums.append(np.cumsum(nu))
        dests = sorted(j for (src, j) in model.migration if src == i)
        total = sum(model.migration[(i, j)] for j in dests)
        chosen = rng.choice(n_i, size=total, replace=False) if total else np.empty(0, np.int64)
        split = {}
        pos = 0
        for j in dests:
            cnt = model.migration[(i, j)]
            split[j] = chosen[pos:pos + cnt]
            pos += cnt
        emigrants.append(split)
    placements = []
    for i in range(s):
        gone = np.concatenate([v for v in emigrants[i].values()]) \
            if emigrants[i] else np.empty(0, np.int64)
        stay = np.setdiff1d(np.arange(model.colony_sizes[i]), gone)
        birth = [np.full(stay.size, i, np.int64)]
        child = [stay]
        for src in range(s):
            arr = emigrants[src].get(i)
            if arr is not None and arr.size:
                birth.append(np.full(arr.size, src, np.int64))
                child.append(arr)
        placements.append((np.concatenate(birth), np.concatenate(child)))
    return cums, placements


def step_generation(model: CanningsModel, population: List[np.ndarray],
                    rng: np.random.Generator) -> List[np.ndarray]:
    """Advance tagged individuals one generation (reproduction + migration).

    ``population[i]`` holds one tag per individual at site i; children
    inherit their parent's tag. Colony sizes are preserved exactly.
    """
    if len(population) != len(model.sites):
        raise ValueError("population must have one array per site")
    for i, tags in enumerate(population):
        if len(tags) != model.colony_sizes[i]:
            raise ValueError(f"site {i} has {len(tags)} individuals, expected {model.colony_sizes[i]}")
    cums, placements = _one_generation(model, rng)
    children = []
    for i, tags in enumerate(population):
        nu = np.diff(cums[i], prepend=0)
        children.append(np.repeat(np.asarray(tags), nu))
    out = []
    for i in range(len(model.sites)):
        birth, child = placements[i]
        out.append(np.array([children[b][c] for b, c in zip(birth, child)]))
        assert len(out[-1]) == model.colony_sizes[i]
    return out


@dataclass
class DiscreteGenealogy:
    """Backward partition process of a traced sample.

    ``partitions[g]`` is the labeled partition g generations before the
    present; the sequence only ever coarsens.
    """

    partitions: List[LabeledPartition]
    reached_mrca: bool
    generations_to_mrca: Optional[int]


def trace_genealogy(
    model: CanningsModel,
    sample: LabeledPartition,
    max_generations: int,
    rng: np.random.Generator,
) -> DiscreteGenealogy:
    """Trace a sample's genealogy backward through the Cannings model.

    Each backward step simulates a fresh exchangeable generation and assigns
    the current lineages to uniform distinct slots at their sites, exactly
    reproducing the forward dynamics' genealogy. Stops at the MRCA or after
    ``max_generations`` (flagged partial).
    """
    site_ids = [model.site_index(lab) for lab in sample.labels]
    per_site = {}
    for idx, s in enumerate(site_ids):
        per_site.setdefault(s, []).append(idx)
    for s, members in per_site.items():
        if len(members) > model.colony_sizes[s]:
            raise ValueError(f"more sampled lineages at site {s} than individuals")
    lineages = [(s, frozenset(sample.blocks[i])) for i, s in enumerate(site_ids)]
    partitions = [sample]
    single_start = len(lineages) == 1
    for g in range(1, max_generations + 1):
        if len(lineages) == 1 and not single_start:
            break
        cums, placements = _one_generation(model, rng)
        groups: Dict[int, List[int]] = {}
        for idx, (s, _) in enumerate(lineages):
            groups.setdefault(s, []).append(idx)
        parents: Dict[Tuple[int, int], set] = {}
        for s, members in sorted(groups.items()):
            slots = rng.choice(model.colony_sizes[s], size=len(members), replace=False)
            birth, child = placements[s]
            for idx, slot in zip(members, slots):
                b = int(birth[slot])
                parent = int(np.searchsorted(cums[b], child[slot], side="right"))
                key = (b, parent)
                parents.setdefault(key, set()).update(lineages[idx][1])
        lineages = [(b, frozenset(elems)) for (b, _p), elems in sorted(
            parents.items(), key=lambda kv: min(kv[1]))]
        blocks = [sorted(e) for _s, e in lineages]
        labels = [model.sites[s] for s, _e in lineages]
        partitions.append(LabeledPartition(blocks, labels))
        if len(lineages) == 1 and not single_start:
            return DiscreteGenealogy(partitions, True, g)
    if single_start:
        return DiscreteGenealogy(partitions, True, 0)
    reached = len(lineages) == 1
    return DiscreteGenealogy(partitions, reached, len(partitions) - 1 if reached else None)
