"""Finite coalescence measures on [0,1] and the merge rates they induce.

A measure consists of an atom at zero (Kingman part) plus an optional density
part. The rate at which a fixed k-subset of b lineages merges is

    lam(b, k) = c0 * 1{k == 2} + integral z^(k-2) (1-z)^(b-k) density(z) dz.

Closed forms cover the uniform, Beta and point-mass families; arbitrary
tabulated densities fall back on adaptive quadrature.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Callable, Optional, Tuple

import numpy as np
from scipy import integrate
from scipy.special import betaln, comb

QUAD_ABS_TOL = 1e-10


class LambdaMeasure:
    """Atom at zero plus one optional density part; total mass must be > 0."""

    def __init__(self, atom_at_zero: float = 0.0, density: Optional[tuple] = None):
        if atom_at_zero < 0:
            raise ValueError("atom mass must be >= 0")
        self.atom = float(atom_at_zero)
        self._density = density  # ("uniform", mass) | ("beta", a, b, mass)
        #                          | ("pointmass", p, mass) | ("table", fn, mass)
        self._table: Optional["RateTable"] = None
        if self.atom + self.density_mass <= 0:
            raise ValueError("measure must have positive total mass")

    # -- constructors ---------------------------------------------------

    @classmethod
    def kingman(cls, mass: float = 1.0) -> "LambdaMeasure":
        """Delta at zero: binary mergers only, rate ``mass`` per pair."""
        return cls(atom_at_zero=mass)

    @classmethod
    def uniform(cls, mass: float = 1.0) -> "LambdaMeasure":
        """Uniform density on [0,1] (Bolthausen-Sznitman for mass 1)."""
        if mass <= 0:
            raise ValueError("mass must be > 0")
        return cls(density=("uniform", float(mass)))

    @classmethod
    def beta(cls, alpha: float, beta_: float, mass: float = 1.0) -> "LambdaMeasure":
        if alpha <= 0 or beta_ <= 0:
            raise ValueError("Beta parameters must be > 0")
        if mass <= 0:
            raise ValueError("mass must be > 0")
        return cls(density=("beta", float(alpha), float(beta_), float(mass)))

    @classmethod
    def point_mass(cls, p: float, mass: float = 1.0) -> "LambdaMeasure":
        if not 0 < p <= 1:
            raise ValueError("point mass location must be in (0, 1]")
        if mass <= 0:
            raise ValueError("mass must be > 0")
        return cls(density=("pointmass", float(p), float(mass)))

    @classmethod
    def tabulated(cls, density_fn: Callable[[float], float], mass: float) -> "LambdaMeasure":
        """Arbitrary density on [0,1]; rates computed by quadrature."""
        if mass <= 0:
            raise ValueError("mass must be > 0")
        return cls(density=("table", density_fn, float(mass)))

    # -- properties -----------------------------------------------------

    @property
    def density_mass(self) -> float:
        if self._density is None:
            return 0.0
        return float(self._density[-1])

    @property
    def total_mass(self) -> float:
        return self.atom + self.density_mass

    def scaled(self, c: float) -> "LambdaMeasure":
        """The measure c * Lambda."""
        if c <= 0:
            raise ValueError("scale must be > 0")
        d = self._density
        if d is None:
            return LambdaMeasure(atom_at_zero=c * self.atom)
        scaled = d[:-1] + (c * d[-1],)
        return LambdaMeasure(atom_at_zero=c * self.atom, density=scaled)

    # -- rates ------------------------------------------------------------

    def merge_rate(self, b: int, k: int) -> float:
        """lam(b, k): rate at which a given k-subset of b lines merges."""
        if b <= 1:
            return 0.0
        if not 2 <= k <= b:
            raise ValueError(f"need 2 <= k <= b, got k={k}, b={b}")
        rate = self.atom if k == 2 else 0.0
        d = self._density
        if d is None:
            return rate
        kind = d[0]
        if kind == "uniform":
            # integral z^(k-2) (1-z)^(b-k) dz = B(k-1, b-k+1)
            rate += d[1] * math.exp(betaln(k - 1, b - k + 1))
        elif kind == "beta":
            _, a, bb, mass = d
            rate += mass * math.exp(betaln(k - 2 + a, b - k + bb) - betaln(a, bb))
        elif kind == "pointmass":
            _, p, mass = d
            rate += mass * p ** (k - 2) * (1.0 - p) ** (b - k)
        else:  # table
            _, fn, mass = d
            val, _err = integrate.quad(
                lambda z: z ** (k - 2) * (1.0 - z) ** (b - k) * fn(z),
                0.0,
                1.0,
                epsabs=QUAD_ABS_TOL,
            )
            rate += val
        return rate

    def total_merge_rate(self, b: int) -> float:
        """Sum over k of C(b,k) lam(b,k); zero for b <= 1."""
        if b <= 1:
            return 0.0
        return sum(comb(b, k, exact=True) * self.merge_rate(b, k) for k in range(2, b + 1))

    def rate_table(self, n_max: int) -> "RateTable":
        """Cached rate table covering block counts up to n_max."""
        if self._table is None or self._table.n_max < n_max:
            self._table = RateTable(self, n_max)
        return self._table

    def __repr__(self) -> str:
        return f"LambdaMeasure(atom={self.atom}, density={self._density})"


class RateTable:
    """Precomputed merge rates for block counts up to n_max.

    ``totals[b]`` is the total merge rate with b co-located blocks and
    ``kcum[b, k]`` the cumulative weight sum_{j=2..k} C(b,j) lam(b,j), so the
    merger size is sampled by inverting ``kcum[b]``.
    """

    def __init__(self, measure: Optional[LambdaMeasure], n_max: int):
        if n_max < 1:
            raise ValueError("n_max must be >= 1")
        self.measure = measure
        self.n_max = n_max
        self.lam = np.zeros((n_max + 1, n_max + 1))
        self.kcum = np.zeros((n_max + 1, n_max + 1))
        self.totals = np.zeros(n_max + 1)
        if measure is not None:
            for b in range(2, n_max + 1):
                acc = 0.0
                for k in range(2, b + 1):
                    self.lam[b, k] = measure.merge_rate(b, k)
                    acc += comb(b, k, exact=True) * self.lam[b, k]
                    self.kcum[b, k] = acc
                self.totals[b] = acc

    def sample_k(self, b: int, u: float) -> int:
        """Merger size for a uniform u in [0, 1)."""
        target = u * self.totals[b]
        for k in range(2, b + 1):
            if self.kcum[b, k] > target:
                return k
        return b


def sample_merge(measure: LambdaMeasure, b: int, rng: np.random.Generator) -> Tuple[int, tuple]:
    """Draw a merger among b co-located blocks.

    Returns (k, indices) where k is drawn with probability proportional to
    C(b,k) lam(b,k) and indices is a uniform k-subset of {0, ..., b-1}. This
    is equivalent to every k-subset merging at rate lam(b,k).
    """
    if b < 2:
        raise ValueError("need at least two blocks to merge")
    table = measure.rate_table(b)
    if table.totals[b] <= 0:
        raise ValueError("total merge rate is zero; no merge event possible")
    k = table.sample_k(b, rng.random())
    # uniform k-subset via partial Fisher-Yates
    pool = list(range(b))
    for i in range(k):
        j = i + int(rng.random() * (b - i))
        pool[i], pool[j] = pool[j], pool[i]
    return k, tuple(sorted(pool[:k]))


# -- mechanism strings ----------------------------------------------------

class Mechanism:
    """A named coalescence mechanism: a measure, or instantaneous merging."""

    def __init__(self, name: str, measure: Optional[LambdaMeasure], instantaneous: bool):
        self.name = name
        self.measure = measure
        self.instantaneous = instantaneous

    def __repr__(self) -> str:
        return f"Mechanism({self.name!r})"


@lru_cache(maxsize=None)
def parse_mechanism(spec: str) -> Mechanism:
    """Parse a mechanism string (memoized; mechanisms are immutable).

    Supported: ``kingman``, ``bs`` (uniform mass 1), ``beta:A:B[:MASS]``,
    ``pointmass:P[:MASS]`` and ``crw`` (instantaneously coalescing walk).
    """
    s = spec.strip().lower()
    if s == "kingman":
        return Mechanism("kingman", LambdaMeasure.kingman(), False)
    if s == "bs":
        return Mechanism("bs", LambdaMeasure.uniform(1.0), False)
    if s == "crw":
        return Mechanism("crw", None, True)
    parts = s.split(":")
    try:
        if parts[0] == "beta" and len(parts) in (3, 4):
            mass = float(parts[3]) if len(parts) == 4 else 1.0
            return Mechanism(s, LambdaMeasure.beta(float(parts[1]), float(parts[2]), mass), False)
        if parts[0] == "pointmass" and len(parts) in (2, 3):
            mass = float(parts[2]) if len(parts) == 3 else 1.0
            return Mechanism(s, LambdaMeasure.point_mass(float(parts[1]), mass), False)
    except ValueError as exc:
        raise ValueError(f"bad mechanism string {spec!r}: {exc}") from exc
    raise ValueError(
        f"unknown mechanism {spec!r}; expected kingman, bs, crw, "
        "beta:A:B[:MASS] or pointmass:P[:MASS]"
    )
